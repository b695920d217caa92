"""Per-syndrome logical Kraus maps and their Pauli/deformation classification.

A telecorrection round maps the logical amplitudes (q_0, q_1) through a 2x2
matrix indexed by the photon-number pair (n, m) and the loss order l:

    S^(l)_{KJ}(n,m) = A(n,m) W_l  sum_{j,k}  (-1)^{jJ+kK} e^{i j l pi/(L+1)}
                      u_{jk}^n v_{jk}^m / sqrt(2 N_J N_K^damped)

with u_{jk} = (e^{ij theta} + e^{ik theta})/2, v_{jk} = (e^{ik theta} -
e^{ij theta})/2, theta = pi/(L+1), and scalar weights

    A(n,m) = e^{(gamma-2) alpha^2 / 2} (sqrt(2(1-gamma)) alpha)^{n+m}
             / sqrt(n! m!),
    W_l    = (sqrt(gamma) alpha)^l / sqrt(l!).

Only loss orders l = L(n+m) mod (L+1), stepping by L+1, survive the j,k sums;
within that class the minimal order dominates and is structurally either
diagonal or anti-diagonal, which is what the classifier reads off.  The
geometric sums are evaluated with |u|,|v| <= 1, so the only large factor is
the positive scalar A(n,m), handled in log space.

Everything here is a pure function of its inputs; the grid engine
(:class:`SyndromeTable`) vectorises the same sums over a full (n, m)
rectangle for channel assembly and trajectory sampling.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln

from .algebra import norm_constants
from .params import (
    CodeParams,
    CutoffExhaustionError,
    InternalConsistencyError,
    KRAUS_WEIGHT_TOL,
    COMPLETENESS_TOL,
)

TAU_FAIL = 1e-9
TAU_ZERO = 1e-9
PHASE_TOL = 1e-6
SELECTION_RULE_TOL = 1e-12
REFERENCE_GAMMA = 0.05


def minimal_loss_order(L: int, n: int, m: int) -> int:
    """Minimal loss order compatible with detecting (n, m): L(n+m) mod (L+1)."""
    if L < 1:
        raise ValueError("L >= 1 required")
    return (L * (n + m)) % (L + 1)


def _bracket_tables(L: int):
    j = np.arange(2 * L + 2)
    e = np.exp(1j * math.pi * j / (L + 1))
    u = 0.5 * (e[:, None] + e[None, :])
    v = 0.5 * (e[None, :] - e[:, None])
    # e_j are roots of unity only to machine precision; the brackets that
    # vanish identically (opposite or equal phases) must be exact zeros or
    # they leak absolute-scale noise into low-power cells.
    diff = np.abs(j[:, None] - j[None, :])
    u[diff == L + 1] = 0.0
    v[diff == 0] = 0.0
    return e, u.ravel(), v.ravel(), np.repeat(j, 2 * L + 2)


def _log_amplitude_scale(code: CodeParams, n, m):
    """log A(n,m); n, m may be arrays."""
    a, g = code.alpha, code.gamma
    c = math.log(math.sqrt(2.0 * (1.0 - g)) * a)
    return (
        0.5 * (g - 2.0) * a * a
        + (np.asarray(n) + np.asarray(m)) * c
        - 0.5 * (gammaln(np.asarray(n) + 1.0) + gammaln(np.asarray(m) + 1.0))
    )


def _loss_weight(code: CodeParams, l: int) -> float:
    if code.gamma == 0.0:
        return 1.0 if l == 0 else 0.0
    return math.exp(0.5 * l * math.log(code.gamma * code.alpha**2) - 0.5 * gammaln(l + 1.0))


def kraus_element(code: CodeParams, l: int, n: int, m: int) -> np.ndarray:
    """The 2x2 syndrome matrix for loss order l and counts (n, m).

    Computes the j,k sums outright and asserts, rather than assumes, that they
    vanish when l is not in the allowed residue class.
    """
    if l < 0 or n < 0 or m < 0:
        raise ValueError("l, n, m must be non-negative")
    L = code.L
    e, u, v, jrep = _bracket_tables(L)
    jj = jrep
    kk = np.tile(np.arange(2 * L + 2), 2 * L + 2)
    terms = (u**n) * (v**m) * np.exp(1j * math.pi * jj * l / (L + 1))
    top = float(np.max(np.abs(terms)))
    if top == 0.0:
        return np.zeros((2, 2), dtype=complex)

    norms = norm_constants(L, code.alpha, code.gamma)
    nj = (norms.n0, norms.n1)
    nk = (norms.n0_under, norms.n1_under)
    out = np.empty((2, 2), dtype=complex)
    raw = np.empty((2, 2), dtype=complex)
    for J in (0, 1):
        for K in (0, 1):
            signs = np.where(((jj * J + kk * K) % 2).astype(bool), -1.0, 1.0)
            s = np.sum(signs * terms) / top
            raw[K, J] = s
            if abs(s) < SyndromeTable.STRUCTURE_FLOOR:
                s = 0.0
            out[K, J] = s / math.sqrt(2.0 * nj[J] * nk[K])

    if (l + n + m) % (L + 1) != 0:
        if np.max(np.abs(raw)) > SELECTION_RULE_TOL * len(jj):
            raise InternalConsistencyError(
                f"selection rule violated at L={L}, l={l}, (n,m)=({n},{m}): "
                f"max residue {np.max(np.abs(raw)):.3e}"
            )
    log_scale = float(_log_amplitude_scale(code, n, m)) + math.log(top)
    return out * (math.exp(log_scale) * _loss_weight(code, l))


def exact_syndrome_map(code: CodeParams, n: int, m: int) -> list[np.ndarray]:
    """Kraus components of the exact per-syndrome CP map, minimal order first.

    The components run over l = l0, l0+(L+1), ... and reproduce the exact
    output-state formula once summed as sum_l K rho K+.
    """
    l0 = minimal_loss_order(code.L, n, m)
    if code.gamma == 0.0:
        return [kraus_element(code, l0, n, m)]
    step = code.L + 1
    ls = list(range(l0, code.l_max + 1, step))
    comps = [kraus_element(code, l, n, m) for l in ls]
    total = sum(float(np.sum(np.abs(k) ** 2)) for k in comps)
    for _ in range(12):
        tail = float(np.sum(np.abs(comps[-1]) ** 2))
        if total == 0.0 or tail < KRAUS_WEIGHT_TOL * total:
            return comps
        nxt = ls[-1] + step
        ls.append(nxt)
        comps.append(kraus_element(code, nxt, n, m))
        total += float(np.sum(np.abs(comps[-1]) ** 2))
    raise CutoffExhaustionError(
        f"loss-order tail still {tail:.3e} of the map at l={ls[-1]} for (n,m)=({n},{m})"
    )


@dataclass(frozen=True)
class SyndromeClassification:
    """Verdict for one syndrome: failure, or Pauli flags plus deformation."""

    kind: str  # "failure" | "correctable" | "unclassifiable"
    x_flip: bool
    z_flip: bool
    deformation: float
    residual_phase: float

    @property
    def failure(self) -> bool:
        return self.kind == "failure"


def classify(map_set: list[np.ndarray], reference_gamma: float = REFERENCE_GAMMA,
             tau_fail: float = TAU_FAIL, tau_zero: float = TAU_ZERO,
             phase_tol: float = PHASE_TOL) -> SyndromeClassification:
    """Classify a syndrome from the dominant (minimal-loss-order) component.

    The dominant component is the lowest loss order whose geometric sums do
    not cancel identically; it is structurally diagonal or anti-diagonal, and
    a dead input column means the outcome reveals the input (transmission
    failure).  ``reference_gamma`` is documentary: the caller must have
    evaluated ``map_set`` at a loss > 0 so every residue class is populated.
    """
    norms = [float(np.linalg.norm(k)) for k in map_set]
    top = max(norms)
    if top == 0.0:
        raise ValueError("zero map cannot be classified (evaluate at gamma > 0)")
    K = np.asarray(map_set[next(i for i, w in enumerate(norms) if w > 1e-10 * top)])
    col = np.array([np.linalg.norm(K[:, 0]), np.linalg.norm(K[:, 1])])
    if col.min() < tau_fail * col.max():
        return SyndromeClassification("failure", False, False, float("nan"), 0.0)

    offn = math.hypot(abs(K[0, 1]), abs(K[1, 0]))
    diagn = math.hypot(abs(K[0, 0]), abs(K[1, 1]))
    x_flip = diagn < tau_zero * offn
    if not x_flip and not offn < tau_zero * diagn:
        raise InternalConsistencyError(
            "dominant syndrome component is neither diagonal nor anti-diagonal; "
            "the outcome may be impossible (geometric sums cancel at every order)"
        )
    d0, d1 = (K[1, 0], K[0, 1]) if x_flip else (K[0, 0], K[1, 1])
    ratio = d1 / d0
    phase = float(np.angle(ratio))
    z_flip = abs(phase) > math.pi / 2
    residual = phase - math.copysign(math.pi, phase) if z_flip else phase
    kind = "correctable" if abs(residual) <= phase_tol else "unclassifiable"
    return SyndromeClassification(kind, bool(x_flip), bool(z_flip), float(abs(ratio)),
                                  float(residual))


# ---------------------------------------------------------------------------
# Vectorised grids over the full (n, m) rectangle.
# ---------------------------------------------------------------------------


@dataclass
class ClassificationGrid:
    """Per-cell verdicts on the count grid (all arrays share one shape)."""

    x_flip: np.ndarray
    z_flip: np.ndarray
    failure: np.ndarray
    unclassifiable: np.ndarray
    deformation: np.ndarray
    valid: np.ndarray
    l_dom: np.ndarray

    def pauli_signature(self):
        """Hashable summary used by the invariance tests."""
        return (self.x_flip.tobytes(), self.z_flip.tobytes(), self.failure.tobytes())


@dataclass
class SyndromeTable:
    """All syndrome Kraus components of one teleportation round, on a grid.

    ``kraus[l]`` has shape (N+1, N+1, 2, 2) over counts n, m; cells outside
    the triangle n+m <= n_total are zeroed.  ``completeness`` is
    sum_{n,m,l} K+K, whose distance from the identity is the deficit that
    drives cutoff adaptation.
    """

    code: CodeParams
    n_total: int
    kraus: list[np.ndarray]
    structure_mag: list[np.ndarray]
    completeness: np.ndarray
    completeness_deficit: float
    kraus_tail_weight: float

    #: normalised geometric sums below this are identically-cancelling noise
    STRUCTURE_FLOOR = 1e-10

    @classmethod
    def build(cls, code: CodeParams, n_total: int | None = None,
              completeness_tol: float = COMPLETENESS_TOL,
              max_extensions: int = 3) -> "SyndromeTable":
        n_tot = code.n_total if n_total is None else n_total
        last_deficit = None
        for _ in range(max_extensions + 1):
            table = cls._assemble(code, n_tot)
            if table.completeness_deficit < completeness_tol:
                return table
            last_deficit = table.completeness_deficit
            n_tot = math.ceil(1.3 * n_tot) + 8
        raise CutoffExhaustionError(
            f"completeness deficit {last_deficit:.3e} persists at n_total={n_tot}"
        )

    @classmethod
    def _assemble(cls, code: CodeParams, n_tot: int) -> "SyndromeTable":
        L = code.L
        M = 2 * L + 2
        e, u, v, jrep = _bracket_tables(L)
        krep = np.tile(np.arange(M), M)

        counts = np.arange(n_tot + 1)
        Pu = u[:, None] ** counts[None, :]
        Pv = v[:, None] ** counts[None, :]
        triangle = counts[:, None] + counts[None, :] <= n_tot
        counts_mod = (counts[:, None] + counts[None, :]) % (L + 1)

        # Largest attainable |u|^n |v|^m per cell; geometric sums are measured
        # against it so that genuine values and cancellation noise separate at
        # any amplitude scale.
        with np.errstate(divide="ignore"):
            log_u = np.log(np.abs(u))
            log_v = np.log(np.abs(v))
        logmax = np.full((n_tot + 1, n_tot + 1), -np.inf)
        with np.errstate(invalid="ignore"):
            for lu, lv in set(zip(log_u.tolist(), log_v.tolist())):
                # x^0 = 1 even when x = 0, so a zero count contributes log 1
                nu = np.where(counts == 0, 0.0, counts * lu)[:, None]
                mv = np.where(counts == 0, 0.0, counts * lv)[None, :]
                np.maximum(logmax, nu + mv, out=logmax)
        inv_max = np.exp(-logmax)

        logA = _log_amplitude_scale(code, counts[:, None], counts[None, :])
        scale = np.exp(logA + logmax)
        scale[~triangle] = 0.0

        norms = norm_constants(L, code.alpha, code.gamma)
        nj = (norms.n0, norms.n1)
        nk = (norms.n0_under, norms.n1_under)
        sign_j = np.where(jrep % 2 == 1, -1.0, 1.0)
        sign_k = np.where(krep % 2 == 1, -1.0, 1.0)

        grids: list[np.ndarray] = []
        mags: list[np.ndarray] = []
        comp = np.zeros((2, 2), dtype=complex)
        l = 0
        peak_l = max(1, math.ceil(code.gamma * code.alpha**2) + 1)
        tail_weight = 0.0
        hard_cap = 3 * max(code.l_max, L + 1) + 3
        while True:
            wl = _loss_weight(code, l)
            phase_l = np.exp(1j * math.pi * jrep * l / (L + 1))
            bad = (l + counts_mod) % (L + 1) != 0
            check = bad & triangle
            S = np.empty((n_tot + 1, n_tot + 1, 2, 2), dtype=complex)
            mag = np.zeros((n_tot + 1, n_tot + 1))
            for J in (0, 1):
                wj = (sign_j if J else 1.0) * phase_l
                for K in (0, 1):
                    w = wj * (sign_k if K else 1.0)
                    NS = ((Pu * w[:, None]).T @ Pv) * inv_max
                    worst = np.max(np.abs(NS[check])) if np.any(check) else 0.0
                    if worst > SELECTION_RULE_TOL * len(jrep):
                        raise InternalConsistencyError(
                            f"selection rule residue {worst:.3e} on the grid at l={l}"
                        )
                    NS[bad] = 0.0
                    NS[np.abs(NS) < cls.STRUCTURE_FLOOR] = 0.0
                    np.maximum(mag, np.abs(NS), out=mag)
                    S[:, :, K, J] = NS * (scale * (wl / math.sqrt(2.0 * nj[J] * nk[K])))
            weight = float(np.sum(np.abs(S) ** 2))
            grids.append(S)
            mags.append(mag)
            comp += np.einsum("nmab,nmad->bd", S.conj(), S)
            l += 1
            if l > max(L, peak_l) and weight < KRAUS_WEIGHT_TOL:
                tail_weight = weight
                break
            if l > hard_cap:
                raise CutoffExhaustionError(
                    f"loss-order weight {weight:.3e} still above "
                    f"{KRAUS_WEIGHT_TOL} at l={l}"
                )

        deficit = float(np.linalg.norm(comp - np.eye(2), 2))
        return cls(code, n_tot, grids, mags, comp, deficit, tail_weight)

    # -- derived grids ------------------------------------------------------

    def dominant_index_grid(self) -> np.ndarray:
        """Index of the lowest non-vanishing Kraus component per cell.

        Usually the minimal loss order L(n+m) mod (L+1), but at some counts
        the geometric sums of that order cancel identically and the cell's
        character is set by the next member of the residue class; other
        counts cancel at every order and are impossible outcomes.  The raw
        sums are O(1) when genuine and float noise when cancelling, so an
        absolute floor separates them.  Dead cells get index -1.
        """
        mags = np.stack(self.structure_mag)
        live = mags > self.STRUCTURE_FLOOR
        idx = np.argmax(live, axis=0).astype(np.int64)
        idx[~np.any(live, axis=0)] = -1
        return idx

    def dominant_components(self) -> np.ndarray:
        """The classified component per cell, shape (N+1, N+1, 2, 2)."""
        idx = self.dominant_index_grid()
        dom = np.zeros_like(self.kraus[0])
        for r in range(len(self.kraus)):
            sel = idx == r
            if np.any(sel):
                dom[sel] = self.kraus[r][sel]
        return dom

    def classification(self, tau_fail: float = TAU_FAIL, tau_zero: float = TAU_ZERO,
                       phase_tol: float = PHASE_TOL) -> ClassificationGrid:
        """Classify every cell from its dominant component.

        Verdicts are loss-independent (only positive scalars multiply the
        component as gamma varies), so the table's own gamma serves as the
        reference as long as it is positive.
        """
        K = self.dominant_components()
        l_dom = self.dominant_index_grid()
        n = np.arange(self.n_total + 1)
        triangle = n[:, None] + n[None, :] <= self.n_total

        c0 = np.abs(K[:, :, 0, 0]) ** 2 + np.abs(K[:, :, 1, 0]) ** 2
        c1 = np.abs(K[:, :, 0, 1]) ** 2 + np.abs(K[:, :, 1, 1]) ** 2
        cmax = np.maximum(c0, c1)
        valid = triangle & (cmax > 0.0) & (l_dom >= 0)
        failure = valid & (np.minimum(c0, c1) < (tau_fail**2) * cmax)

        offn = np.abs(K[:, :, 0, 1]) ** 2 + np.abs(K[:, :, 1, 0]) ** 2
        diagn = np.abs(K[:, :, 0, 0]) ** 2 + np.abs(K[:, :, 1, 1]) ** 2
        x_flip = valid & (diagn < (tau_zero**2) * offn)
        live = valid & ~failure
        mixed = live & ~x_flip & ~(offn < (tau_zero**2) * diagn)
        if np.any(mixed):
            cells = np.argwhere(mixed)[:5]
            raise InternalConsistencyError(
                f"{int(mixed.sum())} grid cells are neither diagonal nor "
                f"anti-diagonal, e.g. {cells.tolist()}"
            )

        d0 = np.where(x_flip, K[:, :, 1, 0], K[:, :, 0, 0])
        d1 = np.where(x_flip, K[:, :, 0, 1], K[:, :, 1, 1])
        with np.errstate(divide="ignore", invalid="ignore"):
            ratio = np.where(live, d1, 1.0) / np.where(live, d0, 1.0)
        phase = np.angle(ratio)
        z_flip = live & (np.abs(phase) > math.pi / 2)
        residual = np.where(z_flip, phase - np.sign(phase) * math.pi, phase)
        unclassifiable = live & (np.abs(residual) > phase_tol)
        deformation = np.where(live, np.abs(ratio), np.nan)
        return ClassificationGrid(
            x_flip=x_flip & live,
            z_flip=z_flip,
            failure=failure,
            unclassifiable=unclassifiable,
            deformation=deformation,
            valid=valid,
            l_dom=l_dom,
        )

    def corrected_kraus(self, cls_grid: ClassificationGrid | None = None) -> list[np.ndarray]:
        """Kraus grids with the per-cell Pauli correction applied on the left.

        Failure and unclassifiable-phase cells get X-only or no correction;
        nothing else can be done deterministically there.
        """
        if cls_grid is None:
            cls_grid = self.classification()
        x = cls_grid.x_flip[:, :, None, None]
        zsign = np.where(cls_grid.z_flip & ~cls_grid.unclassifiable, -1.0, 1.0)
        out = []
        for S in self.kraus:
            T = np.where(x, S[:, :, ::-1, :], S)
            T[:, :, 1, :] *= zsign[:, :, None]
            out.append(T)
        return out
