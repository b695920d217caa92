"""Cross-cutting verification metrics.

Two quantities live here: the Knill-Laflamme residuals of Pauli-corrected
syndrome maps (orthogonality is preserved exactly, the diagonal entries are
not), and the mean error probability of an iterated, corrected channel with
one final uncorrected stretch of loss, evaluated by embedding the logical
state back onto the Fock-space codewords.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import corrected_channel_superop
from .deformation import PAULI_X, PAULI_Z, eigenstate_density
from .focklab import FockDensity, apply_loss, cat_fock, trace_distance
from .params import CodeParams, default_loss_order_cutoff
from .syndromes import classify, exact_syndrome_map


@dataclass(frozen=True)
class KLReport:
    """Knill-Laflamme residuals of one Pauli-corrected syndrome map."""

    orthogonality_residual: float
    diagonal_gap: float


def kl_report(code: CodeParams, n: int, m: int) -> KLReport:
    """Residuals of the corrected dominant component of syndrome (n, m).

    Failure syndromes carry no correctable structure and are rejected.
    """
    comps = exact_syndrome_map(code, n, m)
    cls = classify(comps)
    if cls.failure:
        raise ValueError(f"syndrome ({n},{m}) is a transmission failure")
    P = (PAULI_Z if cls.z_flip else np.eye(2)) @ (PAULI_X if cls.x_flip else np.eye(2))
    S = P @ comps[0]
    resid = max(abs(S[0, 1]), abs(S[1, 0]))
    a, b = abs(S[0, 0]), abs(S[1, 1])
    gap = (a - b) / (0.5 * (a + b))
    return KLReport(orthogonality_residual=float(resid), diagonal_gap=float(gap))


def embed_logical(code: CodeParams, rho_logical: np.ndarray,
                  D: int | None = None) -> FockDensity:
    """Lift a 2x2 logical density matrix onto the Fock-space codewords."""
    if D is None:
        D = code.fock_dim
    kets = [cat_fock(code.with_gamma(0.0), J, D).amplitudes for J in (0, 1)]
    mat = np.zeros((D, D), dtype=complex)
    for J in (0, 1):
        for Jp in (0, 1):
            mat += rho_logical[J, Jp] * np.outer(kets[J], kets[Jp].conj())
    return FockDensity(mat, D)


def mean_error_probability(L: int, alpha: float, gamma_total: float, N: int,
                           D: int | None = None) -> float:
    """Mean pairwise-eigenstate error after N corrected rounds plus bare loss.

    The channel splits the total loss into N+1 segments; the first N are
    followed by telecorrection, the last is left uncorrected and acts in
    Fock space on the embedded state.  For each Pauli pair the error
    probability is 1/2 - ||L(rho+) - L(rho-)||_1 / 4; the result averages the
    three pairs.  N = 0 means no correction at all.
    """
    if N < 0:
        raise ValueError("N must be >= 0")
    code = CodeParams(L, alpha)
    gamma_seg = 1.0 - (1.0 - gamma_total) ** (1.0 / (N + 1))
    if N > 0:
        sop = corrected_channel_superop(code, gamma_seg)
        MN = np.linalg.matrix_power(sop.matrix, N)
    l_cap = default_loss_order_cutoff(gamma_seg, alpha)

    total = 0.0
    for pair in (("z+", "z-"), ("x+", "x-"), ("y+", "y-")):
        finals = []
        for name in pair:
            rho = eigenstate_density(name)
            if N > 0:
                rho = (MN @ rho.reshape(-1, order="F")).reshape(2, 2, order="F")
                rho = rho / np.trace(rho).real
            fock = embed_logical(code, rho, D)
            finals.append(apply_loss(fock, gamma_seg, l_cap))
        total += 0.5 - 0.5 * trace_distance(finals[0], finals[1])
    return total / 3.0
