import math

import numpy as np
import pytest

from cat_telecor import (
    CodeParams,
    SyndromeTable,
    classify,
    exact_syndrome_map,
    kraus_element,
    minimal_loss_order,
    norm_constants,
    teleport_oracle,
    teleport_oracle_table,
)
from cat_telecor.params import InternalConsistencyError

from oracles import output_density_direct


def test_minimal_loss_order_values():
    assert minimal_loss_order(1, 2, 0) == 0
    assert minimal_loss_order(1, 1, 0) == 1
    assert minimal_loss_order(3, 10, 6) == 0
    assert minimal_loss_order(2, 3, 1) == (2 * 4) % 3


def worked_reference(L=1, alpha=2.0):
    pair = norm_constants(L, alpha, 0.0)
    e4 = math.exp(alpha * alpha)
    return pair, e4


def test_worked_failure_syndrome():
    pair, e4 = worked_reference()
    S = kraus_element(CodeParams(1, 2.0, 0.0), 0, 0, 0)
    expected = 8 * math.sqrt(2) / (math.sqrt(pair.n0 * pair.n0_under) * e4)
    assert abs(S[0, 0] - expected) < 1e-10
    assert abs(S[0, 1]) == 0 and abs(S[1, 0]) == 0 and abs(S[1, 1]) == 0


def test_worked_bit_flip_syndrome():
    pair, e4 = worked_reference()
    S = kraus_element(CodeParams(1, 2.0, 0.0), 0, 2, 0)
    assert abs(S[0, 1] - 16 / (math.sqrt(pair.n1 * pair.n0_under) * e4)) < 1e-10
    assert abs(S[1, 0] - 16 / (math.sqrt(pair.n0 * pair.n1_under) * e4)) < 1e-10
    assert abs(S[0, 0]) < 1e-14 and abs(S[1, 1]) < 1e-14


def test_worked_phase_flip_syndrome():
    pair, e4 = worked_reference()
    S = kraus_element(CodeParams(1, 2.0, 0.0), 0, 2, 2)
    assert abs(S[0, 0] - 32 * math.sqrt(2) / (math.sqrt(pair.n0 * pair.n0_under) * e4)) < 1e-10
    assert abs(S[1, 1] + 32 * math.sqrt(2) / (math.sqrt(pair.n1 * pair.n1_under) * e4)) < 1e-10


def test_worked_high_order_deformation():
    pair = norm_constants(3, 2.0, 0.0)
    S = kraus_element(CodeParams(3, 2.0, 0.0), 0, 10, 6)
    a = S[0, 0] * math.sqrt(pair.n0 * pair.n0_under)
    b = S[1, 1] * math.sqrt(pair.n1 * pair.n1_under)
    assert a.real == pytest.approx(-0.36531, abs=5e-6)
    assert b.real == pytest.approx(-0.16605, abs=5e-6)


@pytest.mark.parametrize("L", [1, 2, 3])
def test_selection_rule_zeros(L):
    code = CodeParams(L, 1.3, 0.0)
    for s in range(0, 9):
        for n in range(s + 1):
            m = s - n
            for l in range(0, 7):
                S = kraus_element(code, l, n, m)
                if (l + n + m) % (L + 1) != 0:
                    assert np.max(np.abs(S)) < 1e-14, (L, l, n, m)


def test_classify_worked_examples():
    code = CodeParams(1, 2.0, 0.05)
    pair = norm_constants(1, 2.0, 0.0)

    c = classify(exact_syndrome_map(code, 0, 0))
    assert c.kind == "failure"

    c = classify(exact_syndrome_map(code, 2, 0))
    assert c.kind == "correctable" and c.x_flip and not c.z_flip
    pair = norm_constants(1, 2.0, code.gamma)
    d_expected = math.sqrt((pair.n0 * pair.n1_under) / (pair.n1 * pair.n0_under))
    assert c.deformation == pytest.approx(d_expected, rel=1e-12)

    c = classify(exact_syndrome_map(code, 2, 2))
    assert c.kind == "correctable" and not c.x_flip and c.z_flip
    d_expected = math.sqrt((pair.n0 * pair.n0_under) / (pair.n1 * pair.n1_under))
    assert c.deformation == pytest.approx(d_expected, rel=1e-12)
    assert abs(c.residual_phase) < 1e-10


def test_exact_map_reduces_to_single_component_without_loss():
    code = CodeParams(1, 1.5, 0.0)
    comps = exact_syndrome_map(code, 2, 2)
    assert len(comps) == 1
    ref = kraus_element(code, 0, 2, 2)
    assert np.array_equal(comps[0], ref)


@pytest.mark.parametrize("nm", [(2, 0), (1, 0), (2, 2), (3, 1)])
def test_exact_map_matches_direct_formula(nm):
    code = CodeParams(1, 2.0, 0.1)
    comps = exact_syndrome_map(code, *nm)
    rng = np.random.default_rng(5)
    for _ in range(3):
        q = rng.normal(size=2) + 1j * rng.normal(size=2)
        q /= np.linalg.norm(q)
        via_kraus = sum(K @ np.outer(q, q.conj()) @ K.conj().T for K in comps)
        direct = output_density_direct(1, 2.0, 0.1, nm[0], nm[1], q,
                                       norm_constants(1, 2.0, 0.1))
        assert np.max(np.abs(via_kraus - direct)) < 1e-10


def test_exact_map_matches_direct_formula_high_order():
    code = CodeParams(2, 1.5, 0.08)
    comps = exact_syndrome_map(code, 2, 1)
    q = np.array([0.6, 0.8j])
    via_kraus = sum(K @ np.outer(q, q.conj()) @ K.conj().T for K in comps)
    direct = output_density_direct(2, 1.5, 0.08, 2, 1, q, norm_constants(2, 1.5, 0.08))
    assert np.max(np.abs(via_kraus - direct)) < 1e-10


def _phase_align(A, B):
    k = np.argmax(np.abs(A))
    a, b = A.ravel()[k], B.ravel()[k]
    if abs(a) == 0 or abs(b) == 0:
        return B
    phase = (a * np.conj(b)) / abs(a * np.conj(b))
    return B * phase


@pytest.mark.parametrize("gamma", [0.0, 0.05])
def test_oracle_equivalence_small(gamma):
    code = CodeParams(1, 1.2, gamma)
    pairs = [(n, m) for s in range(5) for n in range(s + 1) for m in [s - n]]
    table = teleport_oracle_table(code, pairs)
    for nm in pairs:
        om = table[nm]
        assert om.span_residual < 1e-10
        comps = exact_syndrome_map(code, *nm)
        l0 = minimal_loss_order(1, *nm)
        oc = {l: k for l, k in zip(om.ls, om.components)}
        for i, K in enumerate(comps):
            l = l0 + 2 * i
            if l not in oc:
                break
            aligned = _phase_align(K, oc[l])
            assert np.max(np.abs(K - aligned)) < 1e-8, (nm, l)


def test_oracle_probability_and_state():
    # Lossless flip outcome: the output is the logical flip of the input.
    code = CodeParams(1, 1.5, 0.0)
    prob, branches = teleport_oracle([1.0, 0.0], code, 2, 0)
    assert prob > 0
    v = branches[0]
    assert abs(v[0]) < 1e-12
    assert abs(v[1]) > 0


def test_grid_matches_pointwise_elements():
    code = CodeParams(2, 2.2, 0.07)
    table = SyndromeTable.build(code)
    for nm in [(0, 0), (3, 0), (2, 2), (5, 3), (1, 4)]:
        l0 = minimal_loss_order(2, *nm)
        ref = kraus_element(code, l0, *nm)
        got = table.kraus[l0][nm[0], nm[1]]
        assert np.max(np.abs(got - ref)) < 1e-13


def test_classification_gamma_invariance():
    base = None
    for gamma in (0.05, 0.2):
        table = SyndromeTable.build(CodeParams(1, 2.3, gamma), n_total=40)
        sig = table.classification().pauli_signature()
        if base is None:
            base = sig
        else:
            assert sig == base


def test_classification_x_period_in_total_count():
    # For L=1, the flip flag depends on (n+m) mod 4 being 1 or 2.
    table = SyndromeTable.build(CodeParams(1, 2.0, 0.05), n_total=24)
    cls = table.classification()
    for n in range(12):
        for m in range(12):
            if not cls.valid[n, m] or cls.failure[n, m]:
                continue
            assert cls.x_flip[n, m] == ((n + m) % 4 in (1, 2)), (n, m)


def test_truncation_error_next_order_bound():
    # Dropping all but the minimal loss order costs less than the next-order
    # weight bound 10 * (sqrt(G) a)^(l0 + L + 1).
    for (L, alpha, n, m) in [(1, 2.0, 2, 0), (1, 2.0, 2, 2), (2, 1.5, 1, 1)]:
        code = CodeParams(L, alpha, 0.01)
        comps = exact_syndrome_map(code, n, m)
        l0 = minimal_loss_order(L, n, m)
        tail = sum(float(np.linalg.norm(K)) for K in comps[1:])
        bound = 10.0 * (code.gamma ** (0.5 * (l0 + L + 1))) * alpha ** (l0 + L + 1)
        assert tail < bound


def test_rule_violating_kraus_request_is_checked():
    code = CodeParams(1, 2.0, 0.1)
    S = kraus_element(code, 1, 2, 0)  # l=1 not in the class of (2,0)
    assert np.max(np.abs(S)) == 0.0
