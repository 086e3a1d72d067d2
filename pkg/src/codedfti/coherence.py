"""Local coherence, relative sparsity, and multilevel measurement budgets.

The coherence between a sampling scheme W and a sparsity scheme T under a
(sensing, sparsity) basis pair is computed from the dense cross-Gram matrix,
so it is exact but limited to moderate N. The relative-sparsity evaluator is
a brute-force enumeration oracle for small problems; the budget rules are the
closed per-basis forms plus a checker for the raw two-inequality condition.
"""

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .levels import LevelScheme
from .transforms import analysis_matrix

#: entries of a coherence matrix closer than this to 0 or 1 are snapped,
#: absorbing FFT roundoff (the DFT/DFT aligned case is exactly Kronecker)
SNAP_TOL = 1e-12


@dataclass
class CoherenceMatrix:
    """Per-(sampling level, sparsity level) coherence values in [0, 1]."""

    values: np.ndarray  # (r, r): rows = sampling levels t, cols = sparsity levels l
    sampling: LevelScheme
    sparsity: LevelScheme
    phi: str
    psi: str

    def to_dict(self):
        return {
            "r": int(self.values.shape[0]),
            "phi": self.phi,
            "psi": self.psi,
            "values": [[float(v) for v in row] for row in self.values],
        }


@dataclass
class MeasurementBudget:
    """Per-level sample counts and the scheme totals they were derived from."""

    m: np.ndarray  # (r,) ints
    C: float
    eps: float
    K: int

    @property
    def M_xi(self):
        return int(np.sum(self.m))

    def to_dict(self):
        return {"r": len(self.m), "m": [int(v) for v in self.m], "M_xi": self.M_xi}


@dataclass
class ErrorBoundParams:
    """Constraint scaling and error-bound constants for one sensing approach."""

    alpha: float
    beta1: float
    beta2: float
    approach: str
    c: float = 1.0


@dataclass
class Prop1Report:
    """Result of checking a budget against the raw two-part measurement condition."""

    eq_counts_ok: bool
    eq_interaction_ok: bool
    counts_required: np.ndarray = field(repr=False)
    interaction_values: np.ndarray = field(repr=False)

    @property
    def ok(self):
        return self.eq_counts_ok and self.eq_interaction_ok


def _peak_sq(block):
    if block.size == 0:
        return 0.0
    return float(np.max(np.abs(block)) ** 2)


def local_coherence(phi, psi, W, T, snap_tol=SNAP_TOL):
    """Coherence matrix mu[t, l] = sqrt(mu(P_Wt U) * mu(P_Wt U P_Tl)), U = Phi* Psi.

    Computed from the dense N x N cross-Gram matrix; entries within
    ``snap_tol`` of 0 or 1 are snapped.
    """
    if W.N != T.N:
        raise ValueError(f"scheme sizes differ: {W.N} vs {T.N}")
    n = W.N
    A_phi = analysis_matrix(phi, n)
    A_psi = analysis_matrix(psi, n)
    U = A_phi @ A_psi.conj().T  # Phi* Psi
    r = W.r
    vals = np.zeros((r, T.r))
    for t, wlev in enumerate(W.levels):
        rows = U[list(wlev), :]
        mu_row = _peak_sq(rows)
        for l, tlev in enumerate(T.levels):
            vals[t, l] = math.sqrt(mu_row * _peak_sq(rows[:, list(tlev)]))
    vals[np.abs(vals) < snap_tol] = 0.0
    vals[np.abs(vals - 1.0) < snap_tol] = 1.0
    return CoherenceMatrix(values=vals, sampling=W, sparsity=T, phi=phi, psi=psi)


def _check_k(k, T):
    k = np.asarray(k, dtype=int)
    if len(k) != T.r:
        raise ValueError(f"k has {len(k)} entries for {T.r} levels")
    sizes = T.sizes
    if np.any(k < 0) or np.any(k > sizes):
        raise ValueError("k must satisfy 0 <= k_l <= |T_l|")
    return k


_PHASE_SETS = {"real": (1.0, -1.0), "complex": (1.0, -1.0, 1.0j, -1.0j)}


def enumeration_cost(T, k, phases="real"):
    """Number of extreme points visited by the brute-force relative-sparsity scan."""
    k = _check_k(k, T)
    p = len(_PHASE_SETS[phases])
    cost = 1
    for size, kl in zip(T.sizes, k):
        cost *= math.comb(int(size), int(kl)) * p**int(kl)
    return cost


def relative_sparsity_bruteforce(U, W, T, k, order="support-major", phases="real", cap=2_000_000):
    """Worst captured energy per sampling level over all level-sparse sign vertices.

    K_t = max ||P_Wt U z||^2 over z with per-level support sizes k and entries
    of unit modulus on the support (the maximum of this convex objective over
    the unit-infinity-ball section is attained at such vertices).

    Two enumeration orders are provided as mutual cross-checks:
    ``support-major`` picks a global support then scans sign patterns;
    ``level-major`` enumerates signed sub-vectors per level and combines them.
    """
    U = np.asarray(U)
    n = U.shape[0]
    if U.shape != (n, n) or W.N != n or T.N != n:
        raise ValueError("U must be N x N matching the schemes")
    k = _check_k(k, T)
    if n > 16:
        raise ValueError("brute-force relative sparsity is oracle-scale only (N <= 16)")
    cost = enumeration_cost(T, k, phases)
    if cost > cap:
        raise ValueError(f"enumeration of {cost} vertices exceeds cap {cap}")
    phase_set = _PHASE_SETS[phases]
    dtype = complex if phases == "complex" else float

    level_mask = np.zeros((W.r, n))
    for t, wl in enumerate(W.levels):
        level_mask[t, list(wl)] = 1.0
    best = np.zeros(W.r)
    batch = []

    def flush():
        if not batch:
            return
        Z = np.column_stack(batch)
        energy = level_mask @ (np.abs(U @ Z) ** 2)  # (r, batch)
        np.maximum(best, energy.max(axis=1), out=best)
        batch.clear()

    def account(z):
        batch.append(z)
        if len(batch) >= 512:
            flush()

    if order == "support-major":
        supports_per_level = [
            list(itertools.combinations(lv, kl)) for lv, kl in zip(T.levels, k)
        ]
        for support_combo in itertools.product(*supports_per_level):
            support = [i for s in support_combo for i in s]
            for signs in itertools.product(phase_set, repeat=len(support)):
                z = np.zeros(n, dtype=dtype)
                z[support] = signs
                account(z)
    elif order == "level-major":
        per_level = []
        for lv, kl in zip(T.levels, k):
            chunks = []
            for s in itertools.combinations(lv, kl):
                for signs in itertools.product(phase_set, repeat=kl):
                    chunks.append((s, signs))
            per_level.append(chunks)
        for combo in itertools.product(*per_level):
            z = np.zeros(n, dtype=dtype)
            for s, signs in combo:
                z[list(s)] = signs
            account(z)
    else:
        raise ValueError(f"unknown enumeration order {order!r}")
    flush()
    return best


def budget_dhw(k, N, eps, C=1.0):
    """Per-level counts for Fourier sampling with Haar sparsity.

    m_t = min(|W_t|, ceil(C * (sum_l 2^(-|t-l|/2) k_l) * ln(K/eps) * ln N)).
    """
    from .levels import build_dhw_sampling_levels, build_dhw_sparsity_levels

    if not (0 < eps <= math.exp(-1)):
        raise ValueError("eps must lie in (0, exp(-1)]")
    T = build_dhw_sparsity_levels(N)
    W = build_dhw_sampling_levels(N)
    k = _check_k(k, T)
    K = int(np.sum(k))
    r = T.r
    m = np.zeros(r, dtype=int)
    if K == 0:
        return MeasurementBudget(m=m, C=C, eps=eps, K=0)
    logs = math.log(K / eps) * math.log(N)
    sizes = W.sizes
    for t in range(r):
        interaction = sum(2.0 ** (-abs(t - l) / 2.0) * k[l] for l in range(r))
        m[t] = min(int(sizes[t]), math.ceil(C * interaction * logs))
    return MeasurementBudget(m=m, C=C, eps=eps, K=K)


def budget_dft(k, W, floor_m=0):
    """Per-level counts for the aligned Fourier scheme: full levels where k_t > 0.

    Levels with k_t = 0 receive ``floor_m`` samples (default none).
    """
    if W.kind != "dft-symmetric":
        raise ValueError("budget_dft requires a dft-symmetric scheme")
    k = _check_k(k, W)
    sizes = W.sizes
    m = np.where(k > 0, sizes, floor_m).astype(int)
    return MeasurementBudget(m=m, C=1.0, eps=math.exp(-1), K=int(np.sum(k)))


def prop1_check(m, mhat, mu, Kt, k, eps, N, C=1.0):
    """Check a given budget against the raw two-part measurement condition.

    Part one: m_t >= C * |W_t| * (sum_l mu[t,l] k_l) * ln(K/eps) * ln N for
    every t. Part two: for every l,
    sum_t (|W_t|/mhat_t - 1) * mu[t,l] * Kt[t] <= 1/C.
    Reported, not inverted: the caller supplies both m and mhat.
    """
    m = np.asarray(m, dtype=float)
    mhat = np.asarray(mhat, dtype=float)
    Kt = np.asarray(Kt, dtype=float)
    k = np.asarray(k, dtype=float)
    if not (0 < eps <= math.exp(-1)):
        raise ValueError("eps must lie in (0, exp(-1)]")
    K = float(np.sum(k))
    sizes = mu.sampling.sizes.astype(float)
    logs = math.log(K / eps) * math.log(N)
    required = C * sizes * (mu.values @ k) * logs
    counts_ok = bool(np.all(m >= required - 1e-12))
    with np.errstate(divide="ignore"):
        excess = np.where(mhat > 0, sizes / mhat - 1.0, np.inf)
    interaction = np.array(
        [float(np.sum(excess * mu.values[:, l] * Kt)) for l in range(mu.values.shape[1])]
    )
    interaction_ok = bool(np.all(interaction <= 1.0 / C + 1e-12))
    return Prop1Report(
        eq_counts_ok=counts_ok,
        eq_interaction_ok=interaction_ok,
        counts_required=required,
        interaction_values=interaction,
    )


def error_bound_params(approach, M_xi, N_xi, N_p, K, c=1.0):
    """Constraint scaling alpha and error constants (beta1, beta2) per approach."""
    if min(M_xi, N_xi, N_p) <= 0:
        raise ValueError("sizes must be positive")
    if approach == "initial-vds":
        if K <= 0:
            raise ValueError("initial-vds requires K > 0")
        return ErrorBoundParams(
            alpha=math.sqrt(M_xi / N_p),
            beta1=2.0 / math.sqrt(K),
            beta2=math.sqrt(N_p),
            approach=approach,
            c=c,
        )
    if approach == "mls-this-work":
        return ErrorBoundParams(
            alpha=math.sqrt(M_xi / (N_xi * N_p)),
            beta1=c,
            beta2=c * math.sqrt(M_xi * N_p / N_xi),
            approach=approach,
            c=c,
        )
    raise ValueError(f"unknown approach {approach!r}")
