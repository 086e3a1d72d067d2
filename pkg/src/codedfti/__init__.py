"""Multilevel illumination coding and compressive spectral reconstruction.

Subsampled-Fourier acquisition of per-pixel spectra, level-structured
sparsity analysis of fluorochrome dictionaries, illumination pattern
generation (multilevel, variable-density, Nyquist) and weighted
basis-pursuit-denoise recovery, plus a CLI experiment harness.
"""

from . import coherence, dictionary, levels, recon, sampling, solver, transforms
from .kernels import BACKEND as KERNEL_BACKEND

__version__ = "0.1.0"

__all__ = [
    "KERNEL_BACKEND",
    "__version__",
    "coherence",
    "dictionary",
    "levels",
    "recon",
    "sampling",
    "solver",
    "transforms",
]
