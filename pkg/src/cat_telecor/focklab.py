"""Truncated Fock-space numerics.

State constructors work in log-magnitude + phase form so that amplitudes like
alpha^n/sqrt(n!) never overflow, and every constructor checks that the
truncation tail is below the tail tolerance (extending the cutoff once before
giving up).  The module also carries the loss channel, the uncorrectable-mass
decomposition, trace distance, the exact two-mode beamsplitter, and the
brute-force three-mode teleportation oracle used to validate the closed-form
syndrome maps.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .params import CodeParams, CutoffExhaustionError, default_fock_cutoff

HERMITICITY_TOL = 1e-12
EIGENVALUE_FLOOR = -1e-10


@dataclass(frozen=True)
class FockVector:
    """Pure state in the photon-number basis, indexed n = 0 .. cutoff-1."""

    amplitudes: np.ndarray
    cutoff: int

    def __post_init__(self):
        if self.amplitudes.shape != (self.cutoff,):
            raise ValueError("amplitude vector does not match the stated cutoff")

    def norm_sq(self) -> float:
        return float(np.vdot(self.amplitudes, self.amplitudes).real)

    def density(self) -> "FockDensity":
        return FockDensity(np.outer(self.amplitudes, self.amplitudes.conj()), self.cutoff)

    def mean_photon(self) -> float:
        n = np.arange(self.cutoff)
        return float(np.sum(n * np.abs(self.amplitudes) ** 2) / self.norm_sq())

    def overlap(self, other: "FockVector") -> complex:
        if self.cutoff != other.cutoff:
            raise ValueError("cutoff mismatch")
        return complex(np.vdot(self.amplitudes, other.amplitudes))


@dataclass(frozen=True)
class FockDensity:
    """Density matrix in the photon-number basis."""

    matrix: np.ndarray
    cutoff: int

    def __post_init__(self):
        if self.matrix.shape != (self.cutoff, self.cutoff):
            raise ValueError("matrix does not match the stated cutoff")

    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def hermiticity_defect(self) -> float:
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.matrix).min())

    def validate(self, tail_tol: float = 1e-8) -> None:
        if self.hermiticity_defect() > HERMITICITY_TOL:
            raise ValueError("density matrix is not Hermitian to tolerance")
        tr = self.trace()
        if not (1.0 - tail_tol <= tr <= 1.0 + 1e-12):
            raise ValueError(f"trace {tr} outside the normalised range")
        if self.min_eigenvalue() < EIGENVALUE_FLOOR:
            raise ValueError("negative eigenvalue beyond tolerance")


def coherent_fock(alpha: float, phi: float, D: int, tail_tol: float = 1e-10) -> FockVector:
    """Fock expansion e^{-alpha^2/2} (e^{i phi} alpha)^n / sqrt(n!).

    Raises :class:`CutoffExhaustionError` when the tail mass at the requested
    cutoff is not below ``tail_tol`` (after one automatic extension attempt).
    """
    if D < 1:
        raise ValueError("cutoff must be >= 1")
    if alpha < 0:
        raise ValueError("alpha must be >= 0, use phi for the phase")
    if alpha == 0.0:
        amps = np.zeros(D, dtype=complex)
        amps[0] = 1.0
        return FockVector(amps, D)

    def build(dim: int) -> np.ndarray:
        n = np.arange(dim)
        logmag = -0.5 * alpha * alpha + n * math.log(alpha) - 0.5 * gammaln(n + 1.0)
        return np.exp(logmag) * np.exp(1j * phi * n)

    amps = build(D)
    tail = 1.0 - float(np.sum(np.abs(amps) ** 2))
    if tail >= tail_tol:
        D2 = max(D + 8, default_fock_cutoff(alpha))
        amps2 = build(D2)
        if 1.0 - float(np.sum(np.abs(amps2) ** 2)) >= tail_tol:
            raise CutoffExhaustionError(
                f"coherent state alpha={alpha} not representable below tail {tail_tol}"
            )
        raise CutoffExhaustionError(
            f"cutoff D={D} too small for alpha={alpha}: tail mass {tail:.3e} "
            f"(D={D2} would suffice)"
        )
    return FockVector(amps, D)


def cat_support(L: int, J: int, D: int) -> np.ndarray:
    """Photon numbers n = J(L+1) mod 2(L+1) below D, as an index array."""
    return np.arange(J * (L + 1), D, 2 * (L + 1))


def cat_fock_unnormalized(L: int, alpha: float, J: int, D: int) -> FockVector:
    """sum_m (-1)^(J m) |alpha_m> in Fock form; squared norm equals N_J."""
    support = cat_support(L, J, D)
    amps = np.zeros(D, dtype=complex)
    logmag = (
        -0.5 * alpha * alpha
        + support * math.log(alpha)
        - 0.5 * gammaln(support + 1.0)
        + math.log(2 * L + 2)
    )
    amps[support] = np.exp(logmag)
    return FockVector(amps, D)


def cat_fock(code: CodeParams, J: int, D: int | None = None) -> FockVector:
    """Normalised codeword J with support only on n = J(L+1) mod 2(L+1).

    The support is selected structurally, so off-support amplitudes are exact
    zeros rather than cancelled sums.
    """
    if J not in (0, 1):
        raise ValueError("J must be 0 or 1")
    if D is None:
        D = code.fock_dim

    def build(dim: int) -> np.ndarray:
        support = cat_support(code.L, J, dim)
        if len(support) == 0:
            raise CutoffExhaustionError(f"cutoff D={dim} has no support points for J={J}")
        logw = support * math.log(code.alpha) - 0.5 * gammaln(support + 1.0)
        logw -= logw.max()
        w = np.exp(logw)
        amps = np.zeros(dim, dtype=complex)
        amps[support] = w / math.sqrt(float(np.sum(w * w)))
        return amps

    amps = build(D)
    support = cat_support(code.L, J, D)
    # Tail adequacy: the last retained support point must carry negligible mass.
    if abs(amps[support[-1]]) ** 2 >= code.tail_tol:
        D2 = max(D + 4 * (code.L + 1), default_fock_cutoff(code.alpha))
        amps2 = build(D2)
        support2 = cat_support(code.L, J, D2)
        if abs(amps2[support2[-1]]) ** 2 >= code.tail_tol:
            raise CutoffExhaustionError(
                f"cat state L={code.L}, alpha={code.alpha} needs a larger Fock cutoff"
            )
        raise CutoffExhaustionError(
            f"cutoff D={D} too small for cat L={code.L}, alpha={code.alpha} "
            f"(D={D2} would suffice)"
        )
    return FockVector(amps, D)


def annihilation_matrix(D: int) -> np.ndarray:
    a = np.zeros((D, D))
    n = np.arange(1, D)
    a[n - 1, n] = np.sqrt(n)
    return a


def loss_kraus_matrix(gamma: float, l: int, D: int) -> np.ndarray:
    """B^(l) = sqrt(Gamma/(1-Gamma))^l a^l / sqrt(l!) sqrt(1-Gamma)^n."""
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    B = np.zeros((D, D))
    if gamma == 0.0:
        if l == 0:
            np.fill_diagonal(B, 1.0)
        return B
    if l >= D:
        return B
    rows = np.arange(D - l)
    cols = rows + l
    # <n|B|n+l> = sqrt(gamma^l (1-gamma)^n (n+l)! / (l! n!))
    logmag = (
        0.5 * l * math.log(gamma)
        + 0.5 * rows * math.log(1.0 - gamma)
        + 0.5 * (gammaln(cols + 1.0) - gammaln(rows + 1.0) - gammaln(l + 1.0))
    )
    B[rows, cols] = np.exp(logmag)
    return B


def apply_loss(rho: FockDensity, gamma: float, l_max: int | None = None,
               tail_tol: float = 1e-10) -> FockDensity:
    """Loss channel sum_{l<=l_max} B^(l) rho B^(l)+, with adaptive l_max.

    Flags a trace deficit >= ``tail_tol`` as cutoff exhaustion.
    """
    D = rho.cutoff
    if gamma == 0.0:
        return FockDensity(rho.matrix.copy(), D)
    if l_max is None:
        from .params import default_loss_order_cutoff

        nbar = float(np.sum(np.arange(D) * np.diag(rho.matrix).real))
        l_max = default_loss_order_cutoff(gamma, math.sqrt(max(nbar, 1.0)))
    out = np.zeros_like(rho.matrix)
    for l in range(min(l_max, D - 1) + 1):
        B = loss_kraus_matrix(gamma, l, D)
        out += B @ rho.matrix @ B.conj().T
    deficit = rho.trace() - float(np.trace(out).real)
    if deficit >= tail_tol:
        raise CutoffExhaustionError(
            f"loss channel trace deficit {deficit:.3e} at l_max={l_max}; "
            "raise the loss-order cutoff"
        )
    return FockDensity(out, D)


def uncorrectable_mass(code: CodeParams, J: int, l_cap: int = 10,
                       D: int | None = None):
    """Per-n Fock probabilities of the lossy codeword, split by loss capacity.

    Orders l <= L are identifiable from Fock support (correctable); orders
    L < l <= l_cap are binned as uncorrectable.  Returns
    (n grid, p_correctable[n], p_uncorrectable[n], correctable mass,
    uncorrectable mass).
    """
    if D is None:
        D = code.fock_dim
    psi = cat_fock(code, J, D)
    p_ok = np.zeros(D)
    p_bad = np.zeros(D)
    for l in range(min(l_cap, D - 1) + 1):
        B = loss_kraus_matrix(code.gamma, l, D)
        branch = np.abs(B @ psi.amplitudes) ** 2
        if l <= code.L:
            p_ok += branch
        else:
            p_bad += branch
    return np.arange(D), p_ok, p_bad, float(p_ok.sum()), float(p_bad.sum())


def trace_distance(rho: FockDensity, sigma: FockDensity) -> float:
    """Half the trace norm of rho - sigma."""
    if rho.cutoff != sigma.cutoff:
        raise ValueError("cutoff mismatch")
    diff = rho.matrix - sigma.matrix
    eig = np.linalg.eigvalsh(0.5 * (diff + diff.conj().T))
    return 0.5 * float(np.sum(np.abs(eig)))


# ---------------------------------------------------------------------------
# Two-mode 50:50 beamsplitter and the three-mode teleportation oracle.
# ---------------------------------------------------------------------------


def beamsplitter_block(N: int, D: int) -> tuple[np.ndarray, np.ndarray]:
    """Matrix of the real symmetric 50:50 beamsplitter on the total-count-N block.

    Convention: U|alpha, beta> = |(alpha+beta)/sqrt(2), (beta-alpha)/sqrt(2)>,
    i.e. U a1+ U+ = (a1+ - a2+)/sqrt(2) and U a2+ U+ = (a1+ + a2+)/sqrt(2).
    Returns (occupations of mode 1 within the block, block matrix).  Binomial
    sums are taken over exact integers, so cancellations cost no precision.
    """
    lo = max(0, N - (D - 1))
    hi = min(N, D - 1)
    ns = np.arange(lo, hi + 1)
    dim = len(ns)
    block = np.zeros((dim, dim))
    log_fact = gammaln(np.arange(N + 1) + 1.0)
    for qi, q in enumerate(ns):
        for pi, p in enumerate(ns):
            acc = 0
            for i in range(max(0, p - (N - q)), min(q, p) + 1):
                term = math.comb(q, i) * math.comb(N - q, p - i)
                acc += -term if (q - i) % 2 else term
            if acc == 0:
                continue
            logscale = 0.5 * (
                log_fact[p] + log_fact[N - p] - log_fact[q] - log_fact[N - q]
            ) - 0.5 * N * math.log(2.0)
            block[pi, qi] = float(acc) * math.exp(logscale)
    return ns, block


def beamsplitter_two_mode(D: int) -> np.ndarray:
    """Dense beamsplitter on the truncated two-mode space, index n1*D + n2.

    Photon number is conserved, so the operator is exactly block diagonal;
    blocks with N <= D-1 are complete and unitary, higher blocks are
    truncated.
    """
    U = np.zeros((D * D, D * D))
    for N in range(2 * (D - 1) + 1):
        ns, block = beamsplitter_block(N, D)
        idx = ns * D + (N - ns)
        U[np.ix_(idx, idx)] = block
    return U


@dataclass(frozen=True)
class OracleMaps:
    """Per-loss-order logical maps extracted from a brute-force teleportation.

    components[i] is the 2x2 matrix for loss order ls[i]; span_residual is the
    worst norm of the mode-3 output outside the codeword span, which flags an
    inadequate Fock cutoff.
    """

    ls: list
    components: list
    span_residual: float

    def probability(self, q) -> float:
        q = np.asarray(q, dtype=complex)
        return float(sum(np.linalg.norm(k @ q) ** 2 for k in self.components))


_ORACLE_BUDGET = 1_000_000


def teleport_oracle_maps(code: CodeParams, n: int, m: int, D: int | None = None,
                         l_list=None, budget: int = _ORACLE_BUDGET) -> OracleMaps:
    """Exact three-mode simulation of one telecorrection round, one syndrome.

    Builds input-after-loss (x) ancilla in truncated Fock space, applies the
    beamsplitter to modes 1-2, projects modes 1-2 onto |n>|m>, and expresses
    the unnormalised mode-3 state in the codeword frame.  The result is one
    2x2 Kraus component per loss order.
    """
    if D is None:
        D = code.fock_dim
    if D ** 3 > budget:
        raise ValueError(f"D^3 = {D**3} exceeds the oracle budget {budget}")
    if not (0 <= n < D and 0 <= m < D):
        raise ValueError("measured counts must lie inside the cutoff")
    if l_list is None:
        if code.gamma == 0.0:
            l_list = [0]
        else:
            l_list = list(range(code.l_max + 1))

    clean = code.with_gamma(0.0)
    cat_in = [cat_fock(clean, J, D).amplitudes for J in (0, 1)]
    damped = CodeParams(code.L, code.damped_alpha)
    cat_mid = [cat_fock(damped, K, D).amplitudes for K in (0, 1)]
    cat_out = [cat_fock(clean, K, D).amplitudes for K in (0, 1)]

    U = beamsplitter_two_mode(D)
    B = [loss_kraus_matrix(code.gamma, l, D) for l in l_list]
    phi = sum(
        np.einsum("b,c->bc", cat_mid[K], cat_out[K]) for K in (0, 1)
    ) / math.sqrt(2.0)

    # Mode 3 never evolves, so carry it as the last axis of a (D*D, D) array.
    comps = {l: np.zeros((2, 2), dtype=complex) for l in l_list}
    worst_residual = 0.0
    for J in (0, 1):
        for li, l in enumerate(l_list):
            psi1 = B[li] @ cat_in[J]
            if not np.any(psi1):
                continue
            state = np.einsum("a,bc->abc", psi1, phi).reshape(D * D, D)
            out = (U @ state).reshape(D, D, D)
            v = out[n, m, :]
            c = np.array([np.vdot(cat_out[0], v), np.vdot(cat_out[1], v)])
            resid = float(np.linalg.norm(v - c[0] * cat_out[0] - c[1] * cat_out[1]))
            worst_residual = max(worst_residual, resid)
            comps[l][0, J] = c[0]
            comps[l][1, J] = c[1]

    components = [comps[l] for l in l_list]
    return OracleMaps(list(l_list), components, worst_residual)


def teleport_oracle_table(code: CodeParams, pairs, D: int | None = None,
                          l_list=None, budget: int = _ORACLE_BUDGET) -> dict:
    """Brute-force maps for many syndromes at once.

    One beamsplitter application per (input codeword, loss order) serves every
    requested (n, m), so validating a whole grid costs no more than a single
    cell.  Returns {(n, m): OracleMaps}.
    """
    if D is None:
        D = code.fock_dim
    if D ** 3 > budget:
        raise ValueError(f"D^3 = {D**3} exceeds the oracle budget {budget}")
    if l_list is None:
        if code.gamma == 0.0:
            l_list = [0]
        else:
            l_list = list(range(code.l_max + 1))

    clean = code.with_gamma(0.0)
    cat_in = [cat_fock(clean, J, D).amplitudes for J in (0, 1)]
    damped = CodeParams(code.L, code.damped_alpha)
    cat_mid = [cat_fock(damped, K, D).amplitudes for K in (0, 1)]
    cat_out = [cat_fock(clean, K, D).amplitudes for K in (0, 1)]
    U = beamsplitter_two_mode(D)
    phi = sum(
        np.einsum("b,c->bc", cat_mid[K], cat_out[K]) for K in (0, 1)
    ) / math.sqrt(2.0)

    comps = {nm: {l: np.zeros((2, 2), dtype=complex) for l in l_list} for nm in pairs}
    resid = {nm: 0.0 for nm in pairs}
    for J in (0, 1):
        for l in l_list:
            psi1 = loss_kraus_matrix(code.gamma, l, D) @ cat_in[J]
            if not np.any(psi1):
                continue
            state = np.einsum("a,bc->abc", psi1, phi).reshape(D * D, D)
            out = (U @ state).reshape(D, D, D)
            for nm in pairs:
                v = out[nm[0], nm[1], :]
                c = np.array([np.vdot(cat_out[0], v), np.vdot(cat_out[1], v)])
                r = float(np.linalg.norm(v - c[0] * cat_out[0] - c[1] * cat_out[1]))
                resid[nm] = max(resid[nm], r)
                comps[nm][l][0, J] = c[0]
                comps[nm][l][1, J] = c[1]
    return {
        nm: OracleMaps(list(l_list), [comps[nm][l] for l in l_list], resid[nm])
        for nm in pairs
    }


def teleport_oracle(q, code: CodeParams, n: int, m: int, D: int | None = None,
                    span_tol: float = 1e-8):
    """Outcome probability and per-loss-order mode-3 codeword amplitudes.

    Rejects the run when the mode-3 output leaks outside the codeword span by
    more than ``span_tol`` (the cutoff is then too small).
    """
    maps = teleport_oracle_maps(code, n, m, D)
    if maps.span_residual > span_tol:
        raise CutoffExhaustionError(
            f"mode-3 residual {maps.span_residual:.3e} outside the codeword span"
        )
    q = np.asarray(q, dtype=complex)
    branches = [k @ q for k in maps.components]
    prob = float(sum(np.linalg.norm(b) ** 2 for b in branches))
    return prob, branches
