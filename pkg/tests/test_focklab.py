import math

import numpy as np
import pytest

from cat_telecor import (
    CodeParams,
    CutoffExhaustionError,
    apply_loss,
    cat_fock,
    coherent_fock,
    trace_distance,
    uncorrectable_mass,
)
from cat_telecor.focklab import (
    beamsplitter_block,
    beamsplitter_two_mode,
    cat_fock_unnormalized,
    cat_support,
    loss_kraus_matrix,
)
from cat_telecor.algebra import norm_constant

from oracles import coherent_amplitudes_series, coherent_overlap_series, trace_distance_svd


def test_vacuum():
    v = coherent_fock(0.0, 0.0, 5)
    assert np.allclose(v.amplitudes, [1, 0, 0, 0, 0])


def test_coherent_mean_photon():
    v = coherent_fock(2.0, 0.0, 40)
    assert v.mean_photon() == pytest.approx(4.0, abs=1e-10)


def test_coherent_overlap_closed_form():
    a = coherent_fock(1.0, 0.0, 30)
    b = coherent_fock(1.0, math.pi / 2, 30)
    expected = np.exp(1.0 * (np.exp(1j * math.pi / 2) - 1.0))
    assert a.overlap(b) == pytest.approx(expected, abs=1e-10)
    series = coherent_overlap_series(1.0, 0.0, 1.0, math.pi / 2)
    assert a.overlap(b) == pytest.approx(series, abs=1e-10)


def test_coherent_matches_series_construction():
    v = coherent_fock(1.7, 0.4, 40)
    ref = coherent_amplitudes_series(1.7, 0.4, 40)
    assert np.max(np.abs(v.amplitudes - ref)) < 1e-14


def test_coherent_rejects_inadequate_cutoff():
    with pytest.raises(CutoffExhaustionError):
        coherent_fock(3.0, 0.0, 8)


def test_cat_support_structure():
    code = CodeParams(1, 2.0)
    v0 = cat_fock(code, 0)
    v1 = cat_fock(code, 1)
    n = np.arange(v0.cutoff)
    assert np.all(v0.amplitudes[n % 4 != 0] == 0)
    assert np.all(v1.amplitudes[n % 4 != 2] == 0)
    assert abs(v0.overlap(v1)) < 1e-14
    assert v0.norm_sq() == pytest.approx(1.0, abs=1e-12)


def test_cat_support_high_order():
    v = cat_fock(CodeParams(3, 3.5), 1)
    support = np.nonzero(v.amplitudes)[0]
    assert support[0] == 4
    assert np.all(np.diff(support) == 8)


def test_unnormalized_cat_norm_is_the_constant():
    v = cat_fock_unnormalized(2, 1.5, 1, 120)
    assert v.norm_sq() == pytest.approx(norm_constant(2, 1.5, 1), rel=1e-12)


def test_loss_kraus_on_coherent_state():
    # B^(l)|a> = e^{-G a^2/2} (sqrt(G) a)^l |sqrt(1-G) a>
    D, gamma, alpha = 50, 0.3, 2.0
    v = coherent_fock(alpha, 0.0, D)
    out = loss_kraus_matrix(gamma, 2, D) @ v.amplitudes
    scale = math.exp(-0.5 * gamma * alpha**2) * (math.sqrt(gamma) * alpha) ** 2 / math.sqrt(2)
    ref = scale * math.sqrt(2) * coherent_fock(math.sqrt(1 - gamma) * alpha, 0.0, D).amplitudes
    # (sqrt(G) a)^l / sqrt(l!) folded into the matrix
    ref = math.exp(-0.5 * gamma * alpha**2) * ((math.sqrt(gamma) * alpha) ** 2 / math.sqrt(
        math.factorial(2))) * coherent_fock(math.sqrt(1 - gamma) * alpha, 0.0, D).amplitudes
    assert np.max(np.abs(out - ref)) < 1e-12


def test_loss_identity_at_zero():
    rho = coherent_fock(1.5, 0.3, 30).density()
    out = apply_loss(rho, 0.0)
    assert np.array_equal(out.matrix, rho.matrix)


def test_loss_preserves_coherent_purity():
    D, gamma, alpha = 60, 0.4, 2.0
    rho = coherent_fock(alpha, 0.0, D).density()
    out = apply_loss(rho, gamma)
    target = coherent_fock(math.sqrt(1 - gamma) * alpha, 0.0, D).density()
    assert np.max(np.abs(out.matrix - target.matrix)) < 1e-12
    assert out.trace() == pytest.approx(1.0, abs=1e-12)


def test_loss_trace_preservation_on_cat():
    code = CodeParams(2, 2.5, 0.15)
    rho = cat_fock(code, 0).density()
    out = apply_loss(rho, code.gamma)
    assert abs(out.trace() - 1.0) < 1e-10
    out.validate()


def test_loss_flags_exhausted_cutoff():
    rho = coherent_fock(3.0, 0.0, 60).density()
    with pytest.raises(CutoffExhaustionError):
        apply_loss(rho, 0.5, l_max=2)


def test_uncorrectable_mass_zero_without_loss():
    code = CodeParams(1, 2.0, 0.0)
    _, _, p_bad, _, bad = uncorrectable_mass(code, 0)
    assert bad == 0.0
    assert np.all(p_bad == 0.0)


def test_uncorrectable_mass_decreases_with_order():
    masses = []
    for L in (1, 2, 3):
        code = CodeParams(L, 3.5, 0.1)
        masses.append(uncorrectable_mass(code, 0)[4])
    assert masses[0] > masses[1] > masses[2]


def test_uncorrectable_mass_matches_lossy_diagonal():
    code = CodeParams(1, 3.5, 0.1)
    n, p_ok, p_bad, _, _ = uncorrectable_mass(code, 0, l_cap=20)
    rho = apply_loss(cat_fock(code, 0).density(), code.gamma, l_max=20)
    assert np.max(np.abs(p_ok + p_bad - np.diag(rho.matrix).real)) < 1e-10


def test_trace_distance_basics():
    rho = cat_fock(CodeParams(1, 2.0), 0).density()
    sig = cat_fock(CodeParams(1, 2.0), 1).density()
    assert trace_distance(rho, rho) == pytest.approx(0.0, abs=1e-14)
    assert trace_distance(rho, sig) == pytest.approx(1.0, abs=1e-12)


def test_trace_distance_against_svd_oracle():
    code = CodeParams(1, 2.0, 0.2)
    rho = cat_fock(code, 0).density()
    sig = apply_loss(rho, 0.2)
    ours = trace_distance(rho, sig)
    ref = trace_distance_svd(rho.matrix, sig.matrix)
    assert ours == pytest.approx(ref, abs=1e-10)


def test_beamsplitter_blocks_unitary():
    D = 30
    U = beamsplitter_two_mode(D)
    for N in (0, 1, 5, 17, D - 1):
        ns, block = beamsplitter_block(N, D)
        assert np.max(np.abs(block.T @ block - np.eye(len(ns)))) < 1e-8


def test_beamsplitter_on_coherent_product():
    # U|a, b> = |(a+b)/sqrt2, (b-a)/sqrt2>
    D = 35
    a, b = 0.9, 0.5
    U = beamsplitter_two_mode(D)
    inp = np.kron(coherent_fock(a, 0.0, D).amplitudes, coherent_fock(b, 0.0, D).amplitudes)
    out = U @ inp
    ref = np.kron(
        coherent_fock((a + b) / math.sqrt(2), 0.0, D).amplitudes,
        coherent_fock(abs(b - a) / math.sqrt(2), math.pi if b < a else 0.0, D).amplitudes,
    )
    assert np.max(np.abs(out - ref)) < 1e-8
