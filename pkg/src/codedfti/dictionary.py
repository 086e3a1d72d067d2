"""Fluorochrome spectral dictionaries and level-sparsity profiling.

A dictionary is a matrix of nonnegative emission spectra (one column per
fluorochrome). Profiling transforms every column into the chosen sparsity
basis, finds the smallest top-magnitude coefficient set capturing a fraction
``rho`` of the column's energy, counts how those coefficients distribute over
the sparsity levels, and takes the worst count per level across the
dictionary. Under the linear mixing model any spectrum composed from the
dictionary inherits that level structure.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .levels import LevelScheme
from .recon import HSVolume
from .transforms import analysis, check_pow2


@dataclass
class SpectralDictionary:
    """Nonnegative emission spectra, one column per fluorochrome."""

    H: np.ndarray  # (N_nu, N_f)
    names: list
    wavelengths_nm: np.ndarray | None = None
    n_clamped: int = 0  # negative readings zeroed during loading

    @property
    def n_samples(self):
        return self.H.shape[0]

    @property
    def n_fluorochromes(self):
        return self.H.shape[1]


@dataclass
class LocalSparsityProfile:
    """Worst-case per-level sparsity counts at energy fraction rho."""

    rho: float
    k: np.ndarray  # (r,) worst count per level
    per_fluor: np.ndarray  # (N_f, r) counts per fluorochrome
    r0: int  # last level (1-based) with a nonzero count; 0 if none
    psi: str
    scheme: LevelScheme

    def ratios(self):
        return self.k / self.scheme.sizes

    def to_dict(self):
        return {
            "rho": self.rho,
            "k": [int(v) for v in self.k],
            "r0": self.r0,
            "psi": self.psi,
            "per_fluorochrome": [[int(v) for v in row] for row in self.per_fluor],
        }


def _validate(H, names):
    H = np.asarray(H, dtype=np.float64)
    if H.ndim != 2 or H.shape[1] == 0:
        raise ValueError("dictionary must have at least one spectrum column")
    if np.any(np.all(H == 0, axis=0)):
        dead = [names[i] for i in np.where(np.all(H == 0, axis=0))[0]]
        raise ValueError(f"all-zero spectrum column(s): {dead}")
    return H


def load_dictionary(path, n_samples):
    """Load a CSV of spectra (header = names, one sample row per line).

    Columns are linearly resampled onto a uniform grid of ``n_samples``
    points; negative readings are clamped to zero and counted.
    """
    check_pow2(n_samples)
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            names = [c.strip() for c in next(reader)]
        except StopIteration:
            raise ValueError(f"{path}: empty file") from None
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(names):
                raise ValueError(f"{path}:{lineno}: expected {len(names)} columns, got {len(row)}")
            try:
                rows.append([float(v) for v in row])
            except ValueError as exc:
                raise ValueError(f"{path}:{lineno}: {exc}") from None
    if not rows:
        raise ValueError(f"{path}: no sample rows")
    raw = np.asarray(rows, dtype=np.float64)
    n_clamped = int(np.sum(raw < 0))
    raw = np.maximum(raw, 0.0)
    old_grid = np.linspace(0.0, 1.0, raw.shape[0])
    new_grid = np.linspace(0.0, 1.0, n_samples)
    H = np.column_stack([np.interp(new_grid, old_grid, raw[:, j]) for j in range(raw.shape[1])])
    H = _validate(H, names)
    return SpectralDictionary(H=H, names=names, n_clamped=n_clamped)


def synth_dictionary(n_fluor, n_samples, seed):
    """Synthesize smooth emission-like spectra (sums of 1-3 Gaussian bumps).

    Bump widths are 3-10% of the band, centers and amplitudes random;
    every column is nonnegative with peak normalized to 1. Deterministic
    per seed.
    """
    if n_fluor < 1:
        raise ValueError("need at least one fluorochrome")
    check_pow2(n_samples)
    rng = np.random.default_rng(seed)
    grid = np.arange(n_samples)
    H = np.zeros((n_samples, n_fluor))
    for j in range(n_fluor):
        n_bumps = rng.integers(1, 4)
        col = np.zeros(n_samples)
        for _ in range(n_bumps):
            center = rng.uniform(0.1, 0.9) * n_samples
            width = rng.uniform(0.03, 0.10) * n_samples
            amp = rng.uniform(0.3, 1.0)
            col += amp * np.exp(-0.5 * ((grid - center) / width) ** 2)
        H[:, j] = col / col.max()
    names = [f"synth-{j:02d}" for j in range(n_fluor)]
    return SpectralDictionary(H=H, names=names)


def _top_count(coeffs, rho):
    """Smallest n whose top-n magnitudes reach rho of the Euclidean norm."""
    mags = np.abs(coeffs)
    order = np.argsort(-mags, kind="stable")  # ties broken by lower index
    energy = np.cumsum(mags[order] ** 2)
    total = energy[-1]
    target = rho * rho * total
    if rho == 0:
        return 0, order
    n = int(np.searchsorted(energy, target - 1e-15 * total) + 1)
    return n, order


def estimate_profile(dictionary, psi, T, rho):
    """Estimate the worst per-level sparsity of a dictionary at level scheme T."""
    if not 0 <= rho <= 1:
        raise ValueError("rho must lie in [0, 1]")
    H = dictionary.H
    if H.shape[0] != T.N:
        raise ValueError(f"dictionary length {H.shape[0]} does not match scheme N={T.N}")
    coeffs = analysis(psi, H)
    owner = T.level_of()
    n_f = H.shape[1]
    per_fluor = np.zeros((n_f, T.r), dtype=int)
    for i in range(n_f):
        n, order = _top_count(coeffs[:, i], rho)
        support = order[:n]
        counts = np.bincount(owner[support], minlength=T.r)
        per_fluor[i] = counts
    k = per_fluor.max(axis=0) if n_f else np.zeros(T.r, dtype=int)
    nonzero = np.nonzero(k)[0]
    r0 = int(nonzero[-1]) + 1 if len(nonzero) else 0
    return LocalSparsityProfile(rho=rho, k=k, per_fluor=per_fluor, r0=r0, psi=psi, scheme=T)


def lmm_mix(dictionary, G):
    """Mix dictionary spectra into a hyperspectral volume: X = H G."""
    G = np.asarray(G, dtype=np.float64)
    if G.ndim == 1:
        G = G[:, None]
    if np.any(G < 0):
        raise ValueError("mixing matrix must be nonnegative")
    if G.shape[0] != dictionary.n_fluorochromes:
        raise ValueError(
            f"mixing rows {G.shape[0]} != dictionary columns {dictionary.n_fluorochromes}"
        )
    return HSVolume(X=dictionary.H @ G)
