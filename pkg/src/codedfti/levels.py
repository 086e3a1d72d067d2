"""Sparsity and sampling level schemes over the coefficient/frequency axis.

Three families:

* ``dhw-sparsity`` — dyadic wavelet levels: T_1 = first two coefficients
  (scaling + coarsest detail), T_l = coefficients ``2^(l-1)+1 .. 2^l``.
* ``dhw-sampling`` — dyadic frequency annuli: W_1 = {0, 1} and W_t the ring
  of frequencies between consecutive powers of two.
* ``dft-symmetric`` — 2^q equal-width symmetric frequency bands; sampling
  levels coincide with sparsity levels.

All index sets are stored as 0-based storage indices; frequency sets use the
centered convention of :mod:`codedfti.transforms` (storage reversal realizes
the frequency symmetry ``f -> 1 - f``).
"""

import json
from dataclasses import dataclass

import numpy as np

from .transforms import check_pow2, freq_to_storage

KINDS = ("dhw-sparsity", "dhw-sampling", "dft-symmetric")


@dataclass(frozen=True)
class LevelScheme:
    """An ordered partition of the N storage indices into r levels."""

    N: int
    r: int
    kind: str
    levels: tuple  # tuple of sorted tuples of 0-based storage indices
    boundaries: tuple  # the l_ell / n_t values defining the partition

    @property
    def sizes(self):
        return np.array([len(lv) for lv in self.levels])

    def level_of(self):
        """Array mapping each storage index to its level (0-based)."""
        owner = np.full(self.N, -1, dtype=np.intp)
        for i, lv in enumerate(self.levels):
            owner[list(lv)] = i
        return owner

    def to_dict(self):
        return {
            "N": self.N,
            "r": self.r,
            "kind": self.kind,
            "boundaries": list(self.boundaries),
            "levels": [list(lv) for lv in self.levels],
        }

    def to_json(self):
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        return cls(
            N=int(d["N"]),
            r=int(d["r"]),
            kind=d["kind"],
            levels=tuple(tuple(int(i) for i in lv) for lv in d["levels"]),
            boundaries=tuple(int(b) for b in d["boundaries"]),
        )


def build_dhw_sparsity_levels(N):
    """Dyadic Haar sparsity levels; r = log2(N)."""
    check_pow2(N)
    r = int(np.log2(N))
    bounds = [2**l for l in range(1, r + 1)]
    levels = [tuple(range(2))]
    for l in range(2, r + 1):
        levels.append(tuple(range(2 ** (l - 1), 2**l)))
    return LevelScheme(N=N, r=r, kind="dhw-sparsity", levels=tuple(levels), boundaries=tuple(bounds))


def build_dhw_sampling_levels(N):
    """Dyadic frequency annuli for Fourier sampling; r = log2(N).

    In frequency coordinates W_1 = {0, 1} and W_{t+1} covers
    ``{-2^t+1, ..., 2^t}`` minus all previous annuli.
    """
    check_pow2(N)
    r = int(np.log2(N))
    bounds = [2**t for t in range(1, r + 1)]
    freq_levels = [np.array([0, 1])]
    for t in range(2, r + 1):
        lo, hi = 2 ** (t - 2), 2 ** (t - 1)
        neg = np.arange(-hi + 1, -lo + 1)
        pos = np.arange(lo + 1, hi + 1)
        freq_levels.append(np.concatenate([neg, pos]))
    levels = tuple(tuple(np.sort(freq_to_storage(fl, N)).tolist()) for fl in freq_levels)
    return LevelScheme(N=N, r=r, kind="dhw-sampling", levels=levels, boundaries=tuple(bounds))


def build_dft_levels(N, q):
    """Symmetric equal-cardinality Fourier bands; r = 2^q levels of N/r indices.

    Level l unions the two half-bands of width ``w = N/(2r)`` at distance
    ``[(l-1)w, lw)`` from DC: frequencies ``{-lw+1 .. -(l-1)w}`` and
    ``{(l-1)w+1 .. lw}``. Sampling levels equal sparsity levels.
    """
    check_pow2(N)
    if q < 0:
        raise ValueError("q must be nonnegative")
    r = 2**q
    if (N // 2) % r != 0:
        raise ValueError(f"2^q = {r} must divide N/2 = {N // 2}")
    w = N // (2 * r)
    levels = []
    bounds = []
    for l in range(1, r + 1):
        neg = np.arange(-l * w + 1, -(l - 1) * w + 1)
        pos = np.arange((l - 1) * w + 1, l * w + 1)
        freqs = np.concatenate([neg, pos])
        levels.append(tuple(np.sort(freq_to_storage(freqs, N)).tolist()))
        bounds.append(l * w)
    return LevelScheme(N=N, r=r, kind="dft-symmetric", levels=tuple(levels), boundaries=tuple(bounds))


def validate_scheme(s):
    """Return a list of human-readable invariant violations (empty if valid)."""
    violations = []
    seen = {}
    for i, lv in enumerate(s.levels):
        if len(lv) == 0:
            violations.append(f"level {i + 1} is empty")
        for idx in lv:
            if idx in seen:
                violations.append(f"levels {seen[idx] + 1} and {i + 1} overlap at index {idx}")
            else:
                seen[idx] = i
            if not (0 <= idx < s.N):
                violations.append(f"level {i + 1} index {idx} outside [0, {s.N})")
    missing = set(range(s.N)) - set(seen)
    if missing:
        violations.append(f"union misses {sorted(missing)}")
    if len(s.levels) != s.r:
        violations.append(f"declared r={s.r} but {len(s.levels)} levels present")
    if s.kind == "dft-symmetric":
        for i, lv in enumerate(s.levels):
            mirrored = {s.N - 1 - idx for idx in lv}
            if mirrored != set(lv):
                violations.append(f"level {i + 1} not symmetric under frequency reflection")
        sizes = {len(lv) for lv in s.levels}
        if len(sizes) > 1:
            violations.append(f"dft-symmetric levels have unequal cardinalities {sorted(sizes)}")
    return violations
