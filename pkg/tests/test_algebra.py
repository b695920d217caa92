import math

import numpy as np
import pytest

from cat_telecor import CodeParams, basis_overlap, mean_photon, mismatch_curves, norm_constants, rx_overlap
from cat_telecor.algebra import norm_constant
from cat_telecor.focklab import cat_fock

from oracles import cat_norm_fock, rx_overlap_fock


@pytest.mark.parametrize("L", [1, 2, 3])
@pytest.mark.parametrize("alpha", [0.5, 1.0, 2.0, 3.5, 6.0])
def test_norm_constants_match_fock_sum(L, alpha):
    D = 160
    for J in (0, 1):
        closed = norm_constant(L, alpha, J)
        fock = cat_norm_fock(L, alpha, J, D)
        assert closed == pytest.approx(fock, rel=1e-9)


def test_damped_norms_equal_plain_at_zero_loss():
    pair = norm_constants(2, 1.7, 0.0)
    assert pair.n0_under == pair.n0
    assert pair.n1_under == pair.n1


def test_norms_positive_on_grid():
    for L in (1, 2, 3, 4):
        for alpha in np.arange(0.5, 6.01, 0.5):
            pair = norm_constants(L, float(alpha), 0.3)
            assert min(pair.n0, pair.n1, pair.n0_under, pair.n1_under) > 0


@pytest.mark.parametrize("L", [1, 2, 3, 4])
def test_overlap_mismatch_identity(L):
    # The structural link between normalisation mismatch and rotated-basis
    # codeword overlap, across the working amplitude range.
    for alpha in np.arange(0.5, 6.01, 0.5):
        ov = basis_overlap(L, float(alpha))
        assert ov.identity_residual() < 1e-12
        assert -1.0 < ov.rx_overlap < 1.0


def test_rx_overlap_against_fock_vectors():
    assert rx_overlap(1, 1.0) == pytest.approx(rx_overlap_fock(1, 1.0, 60), abs=1e-10)
    assert rx_overlap(3, 1.5) == pytest.approx(rx_overlap_fock(3, 1.5, 80), abs=1e-10)


def test_rx_overlap_vanishes_at_large_amplitude():
    assert abs(rx_overlap(1, 6.0)) < 1e-10


def test_mismatch_decays_but_persists_longer_at_higher_order():
    rows = {(L, a): r for (L, a, r, _) in mismatch_curves([1, 3], [2.0, 6.0])}
    assert abs(rows[(1, 6.0)] - 1.0) < 1e-6
    assert abs(rows[(3, 2.0)] - 1.0) > abs(rows[(1, 2.0)] - 1.0)


def test_mismatch_envelope_decays_with_alpha():
    # The ratio oscillates through 1, so monotonicity holds for the envelope,
    # not the signed distance.
    for L in (1, 2):
        d1 = abs(norm_constants(L, 2.0).mismatch_ratio - 1.0)
        d2 = abs(norm_constants(L, 4.0).mismatch_ratio - 1.0)
        d3 = abs(norm_constants(L, 6.0).mismatch_ratio - 1.0)
        assert d3 < d2 < d1


@pytest.mark.parametrize("L,alpha", [(1, 1.0), (2, 1.0), (3, 2.5)])
def test_mean_photon_matches_fock_expectation(L, alpha):
    code = CodeParams(L, alpha)
    for J in (0, 1):
        closed = mean_photon(L, alpha, J)
        fock = cat_fock(code, J).mean_photon()
        assert closed == pytest.approx(fock, abs=1e-10)


def test_mean_photon_coherent_limit():
    val = mean_photon(1, 6.0, 0)
    assert abs(val - 36.0) / 36.0 < 1e-6


def test_headline_mean_photon_ratio():
    ratio = mean_photon(3, 8.2, 0) / mean_photon(1, 4.3, 0)
    assert ratio == pytest.approx(3.6, rel=0.05)
