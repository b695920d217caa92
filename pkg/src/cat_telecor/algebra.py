"""Closed-form scalar quantities of the cat code.

The 2L+2 coherent components of an order-L cat sit at phases m*pi/(L+1);
all scalars here reduce to sums of pairwise coherent overlaps

    <alpha_a | alpha_b> = exp(alpha^2 (e^{i(b-a)pi/(L+1)} - 1)),

so they stay cheap and exact at any amplitude.  The codeword normalisation
constants N_0, N_1 are the squared norms of the unnormalised +/- component
sums; their mismatch drives the deformation errors of telecorrection and is
tied to the codeword overlap of the rotated-basis convention by

    N_0 / N_1 = (1 + <0|1>_X) / (1 - <0|1>_X).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .params import InternalConsistencyError

_IMAG_RESIDUE_TOL = 1e-10


def _component_overlap(alpha: float, delta: int, L: int) -> complex:
    """<alpha_a|alpha_b> for two components of the same cat, delta = b - a."""
    return np.exp(alpha * alpha * (np.exp(1j * math.pi * delta / (L + 1)) - 1.0))


def _real_after_symmetric_sum(total: complex, scale: float) -> float:
    # Imaginary parts cancel exactly in exact arithmetic; insist they nearly do.
    if abs(total.imag) > _IMAG_RESIDUE_TOL * max(1.0, scale):
        raise InternalConsistencyError(
            f"imaginary residue {total.imag:.3e} in a sum that must be real"
        )
    return float(total.real)


def _overlap_blocks(L: int, alpha: float) -> tuple[float, float]:
    """(den, num): even-even and even-odd coherent overlap sums.

    Both codeword constants and the rotated-basis overlap reduce to these
    two positive-index sums; deriving everything from them keeps the
    mismatch/overlap identity exact to rounding even where N_1 nearly
    cancels.
    """
    if L < 1:
        raise ValueError("L >= 1 required")
    if not alpha > 0:
        raise ValueError("alpha must be positive")
    den = 0.0 + 0.0j
    num = 0.0 + 0.0j
    for m in range(L + 1):
        for mp in range(L + 1):
            den += _component_overlap(alpha, 2 * (mp - m), L)
            num += _component_overlap(alpha, 2 * (mp - m) + 1, L)
    scale = (L + 1) ** 2
    return _real_after_symmetric_sum(den, scale), _real_after_symmetric_sum(num, scale)


def norm_constant(L: int, alpha: float, J: int) -> float:
    """Squared norm of sum_m (-1)^(J m) |alpha_m>, m = 0 .. 2L+1.

    Equal to the full signed double sum of component overlaps, folded here to
    2 (den +/- num) over the half-range blocks.
    """
    den, num = _overlap_blocks(L, alpha)
    return 2.0 * (den - num) if J else 2.0 * (den + num)


@dataclass(frozen=True)
class NormPair:
    """Codeword normalisation constants at full and damped amplitude."""

    n0: float
    n1: float
    n0_under: float
    n1_under: float

    @property
    def mismatch_ratio(self) -> float:
        return self.n0 / self.n1


def norm_constants(L: int, alpha: float, gamma: float = 0.0) -> NormPair:
    """N_0, N_1 at amplitude alpha plus the damped pair at sqrt(1-gamma)*alpha."""
    n0 = norm_constant(L, alpha, 0)
    n1 = norm_constant(L, alpha, 1)
    if gamma == 0.0:
        return NormPair(n0, n1, n0, n1)
    under = math.sqrt(1.0 - gamma) * alpha
    return NormPair(n0, n1, norm_constant(L, under, 0), norm_constant(L, under, 1))


def rx_overlap(L: int, alpha: float) -> float:
    """Codeword overlap <0|1> in the rotated (common-normalisation) basis.

    Codeword 0 collects the even-index components, codeword 1 the odd ones;
    both carry the same constant by rotation symmetry.
    """
    den, num = _overlap_blocks(L, alpha)
    return num / den


@dataclass(frozen=True)
class BasisOverlap:
    rx_overlap: float
    rz_mismatch: float

    def identity_residual(self) -> float:
        """Residual of the mismatch/overlap identity, in its conditioned form.

        The identity r = (1+ov)/(1-ov) is checked as the cross-multiplied
        (r - 1) = ov (r + 1): near ov -> 1 the ratio blows up to ~10^4 and the
        quotient form cannot be represented to 1e-12 in doubles, while this
        rearrangement stays machine-exact.
        """
        r, ov = self.rz_mismatch, self.rx_overlap
        return abs((r - 1.0) - ov * (r + 1.0)) / (r + 1.0)


def basis_overlap(L: int, alpha: float) -> BasisOverlap:
    pair = norm_constants(L, alpha)
    return BasisOverlap(rx_overlap=rx_overlap(L, alpha), rz_mismatch=pair.mismatch_ratio)


def mismatch_curves(L_list, alpha_grid):
    """Rows (L, alpha, mismatch_ratio, rx_overlap) over a grid of amplitudes."""
    rows = []
    for L in L_list:
        for alpha in alpha_grid:
            ov = basis_overlap(L, float(alpha))
            rows.append((int(L), float(alpha), ov.rz_mismatch, ov.rx_overlap))
    return rows


def mean_photon(L: int, alpha: float, J: int) -> float:
    """<n> of codeword J; each cross term carries alpha^2 e^{i delta pi/(L+1)}."""
    if L < 1:
        raise ValueError("L >= 1 required")
    total = 0.0 + 0.0j
    for m in range(2 * L + 2):
        for mp in range(2 * L + 2):
            sign = -1.0 if (J * (m + mp)) % 2 else 1.0
            phase = np.exp(1j * math.pi * (mp - m) / (L + 1))
            total += sign * phase * _component_overlap(alpha, mp - m, L)
    numer = _real_after_symmetric_sum(total, (2 * L + 2) ** 2)
    return alpha * alpha * numer / norm_constant(L, alpha, J)
