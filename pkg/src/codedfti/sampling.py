"""Illumination coding patterns: multilevel, variable-density, and Nyquist.

Multilevel patterns draw a fixed count per sampling level uniformly without
replacement (unit weights). Variable-density patterns draw i.i.d. with
replacement from a pmf inversely proportional to the frequency magnitude and
carry inverse-square-root probability weights; duplicate draws are retained
as repeated measurements. All randomness goes through ``numpy``'s PCG64
generator (``np.random.default_rng``), which is seedable and platform-stable.
"""

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .levels import LevelScheme
from .transforms import check_pow2, storage_freqs


@dataclass
class SamplingPattern:
    """Selected measurement rows with aligned diagonal weights."""

    kind: str  # mls | vds | nyquist
    N: int
    omega: np.ndarray  # selected storage indices; multiset for vds
    weights: np.ndarray  # D_ii aligned with omega
    m: np.ndarray | None = None  # per-level counts (mls only)
    seed: int | None = None
    scheme: LevelScheme | None = field(default=None, repr=False)

    @property
    def M_xi(self):
        return len(self.omega)

    def alpha_factor(self, n_pixels):
        """Fidelity-constraint scaling for a per-pixel noise budget.

        Variable-density weighting concentrates per measurement; the
        unweighted schemes spread the Nyquist budget over all rows.
        """
        if self.kind == "vds":
            return math.sqrt(self.M_xi / n_pixels)
        return math.sqrt(self.M_xi / (self.N * n_pixels))

    def mask_row(self):
        """Binary 1 x N row marking selected indices (duplicates collapse)."""
        row = np.zeros(self.N, dtype=int)
        row[self.omega] = 1
        return row

    def to_dict(self):
        d = {
            "kind": self.kind,
            "N": self.N,
            "seed": self.seed,
            "omega": [int(i) for i in self.omega],
            "weights": [float(w) for w in self.weights],
        }
        d["m"] = None if self.m is None else [int(v) for v in self.m]
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)


def sample_mls(W, m, seed):
    """Draw m_t indices uniformly without replacement inside each level of W."""
    m = np.asarray(m, dtype=int)
    if len(m) != W.r:
        raise ValueError(f"m has {len(m)} entries for {W.r} levels")
    sizes = W.sizes
    if np.any(m < 0) or np.any(m > sizes):
        raise ValueError("m must satisfy 0 <= m_t <= |W_t|")
    rng = np.random.default_rng(seed)
    chosen = []
    for level, m_t in zip(W.levels, m):
        if m_t:
            picks = rng.choice(len(level), size=int(m_t), replace=False)
            chosen.append(np.sort(np.asarray(level)[picks]))
    omega = np.concatenate(chosen) if chosen else np.array([], dtype=int)
    return SamplingPattern(
        kind="mls",
        N=W.N,
        omega=omega,
        weights=np.ones(len(omega)),
        m=m,
        seed=seed,
        scheme=W,
    )


def vds_pmf(N):
    """Draw probabilities proportional to min{1, 1/|f|} on the centered grid."""
    check_pow2(N)
    f = np.abs(storage_freqs(N)).astype(float)
    w = np.ones(N)
    np.divide(1.0, f, out=w, where=f > 1)  # min{1, 1/|f|}; f = 0 keeps weight 1
    return w / w.sum()


def sample_vds(N, M_xi, seed):
    """Draw M_xi rows i.i.d. (with replacement) from the inverse-magnitude pmf."""
    if M_xi < 1:
        raise ValueError("M_xi must be at least 1")
    p = vds_pmf(N)
    rng = np.random.default_rng(seed)
    omega = rng.choice(N, size=int(M_xi), replace=True, p=p)
    weights = 1.0 / np.sqrt(p[omega])
    return SamplingPattern(kind="vds", N=N, omega=omega, weights=weights, seed=seed)


def sample_nyquist(N):
    """The full measurement set with unit weights."""
    check_pow2(N)
    return SamplingPattern(
        kind="nyquist", N=N, omega=np.arange(N), weights=np.ones(N), seed=None
    )


def vds_budget(K, N_xi, C=1.0):
    """Draw count for variable-density sampling: C * K * ln^3(K) * ln^2(N)."""
    if K < 2:
        raise ValueError("K must be at least 2")
    raw = C * K * math.log(K) ** 3 * math.log(N_xi) ** 2
    return min(int(N_xi), math.ceil(raw))
