"""Code parameters, numerical cutoff rules, and shared error types.

Every computation in the package consumes a :class:`CodeParams`: the code
order ``L``, the coherent amplitude ``alpha``, the loss fraction ``gamma``,
and the numerical cutoffs (Fock dimension, total detected-count cutoff,
loss-order cutoff, tail tolerance).  Cutoffs default to adaptive rules sized
for the Poissonian tails of coherent states and are auto-extended by the
consumers when an adequacy check fails.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

TAIL_TOL = 1e-10
COMPLETENESS_TOL = 1e-8
KRAUS_WEIGHT_TOL = 1e-12


class CutoffExhaustionError(RuntimeError):
    """A numerical cutoff was exhausted even after adaptive extension."""


class UnreachableTargetError(RuntimeError):
    """A requested fidelity target cannot be met within the search budget."""


class InternalConsistencyError(RuntimeError):
    """A structural identity the implementation relies on failed numerically."""


def gamma_from_db(db: float) -> float:
    """Convert a loss figure in dB to an energy-loss fraction Gamma."""
    return 1.0 - 10.0 ** (-db / 10.0)


def segment_loss(gamma_total: float, segments: int) -> float:
    """Per-segment loss fraction when total loss is split into equal segments."""
    if segments < 1:
        raise ValueError("segments must be >= 1")
    return 1.0 - (1.0 - gamma_total) ** (1.0 / segments)


def default_fock_cutoff(alpha: float) -> int:
    """Fock dimension large enough that coherent tails at |alpha| are < 1e-10."""
    return math.ceil(alpha * alpha + 8.0 * alpha + 20.0)


def default_total_count_cutoff(alpha: float) -> int:
    """Cutoff on n+m for syndrome sums; detected counts concentrate near 2*alpha^2."""
    return math.ceil(4.0 * alpha * alpha + 12.0 * math.sqrt(alpha * alpha + 1.0) + 20.0)


def default_loss_order_cutoff(gamma: float, alpha: float) -> int:
    """Loss-order cutoff; Kraus weights are Poisson in gamma*alpha^2."""
    x = gamma * alpha * alpha
    return math.ceil(x + 10.0 * math.sqrt(x + 1.0) + 10.0)


@dataclass(frozen=True)
class CodeParams:
    """Cat-code configuration: order L, amplitude alpha, loss Gamma, cutoffs.

    ``gamma`` is the loss applied to the input ahead of a teleportation (the
    ancilla's first mode is matched at sqrt(1-gamma)*alpha).  Channel-level
    code splits a total loss into segments itself and carries the segment
    value here.
    """

    L: int
    alpha: float
    gamma: float = 0.0
    fock_cutoff: int | None = None
    total_count_cutoff: int | None = None
    loss_order_cutoff: int | None = None
    tail_tol: float = TAIL_TOL

    def __post_init__(self):
        if self.L < 1:
            raise ValueError("cat codes need L >= 1 (L=0 exists only as a bare coherent state)")
        if not self.alpha > 0:
            raise ValueError("alpha must be a positive real amplitude")
        if isinstance(self.alpha, complex):
            raise ValueError("alpha is restricted to positive reals")
        if not 0.0 <= self.gamma < 1.0:
            raise ValueError("gamma must lie in [0, 1)")

    @property
    def fock_dim(self) -> int:
        if self.fock_cutoff is not None:
            return self.fock_cutoff
        return default_fock_cutoff(self.alpha)

    @property
    def n_total(self) -> int:
        if self.total_count_cutoff is not None:
            return self.total_count_cutoff
        return default_total_count_cutoff(self.alpha)

    @property
    def l_max(self) -> int:
        if self.loss_order_cutoff is not None:
            return self.loss_order_cutoff
        return default_loss_order_cutoff(self.gamma, self.alpha)

    @property
    def damped_alpha(self) -> float:
        return math.sqrt(1.0 - self.gamma) * self.alpha

    def with_gamma(self, gamma: float) -> "CodeParams":
        return replace(self, gamma=gamma)

    def cutoffs_used(self) -> dict:
        """Resolved cutoffs, for run manifests."""
        return {
            "fock_dim": self.fock_dim,
            "n_total": self.n_total,
            "l_max": self.l_max,
            "tail_tol": self.tail_tol,
        }
