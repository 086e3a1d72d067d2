"""Unitary 1-D DFT and Haar transforms with a centered frequency convention.

All modules share one storage layout for the Fourier domain: storage index
``j`` (0-based) holds frequency ``f = j + 1 - N/2``, so the grid runs from
``-N/2 + 1`` up to ``N/2`` and DC sits at storage index ``N/2 - 1``. Every
transform here is an isometry (normalization ``1/sqrt(N)``).

Haar coefficient ordering: scaling coefficient at index 0, then detail levels
coarse to fine.
"""

import logging
from functools import lru_cache

import numpy as np

from . import kernels

logger = logging.getLogger(__name__)

#: relative imaginary residue above which dft_inverse logs a diagnostic
IMAG_RESIDUE_TOL = 1e-10


def is_pow2(n):
    return n >= 2 and (n & (n - 1)) == 0


def check_pow2(n):
    if not is_pow2(n):
        raise ValueError(f"transform length must be a power of two >= 2, got {n}")


def storage_freqs(n):
    """Frequency value at each storage index: ``f[j] = j + 1 - N/2``."""
    check_pow2(n)
    return np.arange(n) + 1 - n // 2


def freq_to_storage(f, n):
    """Inverse of :func:`storage_freqs` for ``f`` in ``[-N/2+1, N/2]``."""
    f = np.asarray(f)
    if np.any(f < -(n // 2) + 1) or np.any(f > n // 2):
        raise ValueError("frequency outside the centered grid")
    return f + n // 2 - 1


@lru_cache(maxsize=32)
def _fft_order(n):
    # storage index j holds numpy-fft bin (j + 1 - N/2) mod N
    return (np.arange(n) + 1 - n // 2) % n


def dft_forward(x):
    """Unitary analysis ``Phi* x`` in centered storage order (axis 0)."""
    x = np.asarray(x)
    n = x.shape[0]
    check_pow2(n)
    y = np.fft.fft(x, axis=0) / np.sqrt(n)
    return y[_fft_order(n)]


def _ifft_centered(y):
    """Complex unitary synthesis without the realness diagnostic (hot path)."""
    n = y.shape[0]
    z = np.empty(y.shape, dtype=np.complex128)
    z[_fft_order(n)] = y
    return np.fft.ifft(z, axis=0) * np.sqrt(n)


def dft_inverse(y):
    """Unitary synthesis ``Phi y``; returns the real part.

    The imaginary residue is discarded and its relative size recorded on the
    module logger (warning level once it exceeds ``IMAG_RESIDUE_TOL``, i.e.
    the input was not the transform of a real signal).
    """
    y = np.asarray(y)
    check_pow2(y.shape[0])
    x = _ifft_centered(y)
    scale = max(np.max(np.abs(x.real)), 1e-300)
    residue = np.max(np.abs(x.imag)) / scale
    logger.log(
        logging.WARNING if residue > IMAG_RESIDUE_TOL else logging.DEBUG,
        "dft_inverse: discarding imaginary residue %.3e",
        residue,
    )
    return np.ascontiguousarray(x.real)


def dhw_forward(x):
    """Orthonormal Haar analysis ``Psi* x`` (axis 0, real input)."""
    x = np.asarray(x, dtype=np.float64)
    check_pow2(x.shape[0])
    return kernels.haar_analysis(x)


def dhw_inverse(s):
    """Orthonormal Haar synthesis ``Psi s`` (axis 0, real input)."""
    s = np.asarray(s, dtype=np.float64)
    check_pow2(s.shape[0])
    return kernels.haar_synthesis(s)


BASIS_LABELS = ("dft", "dhw")


def analysis(basis, x):
    """Apply ``Phi*`` for the named basis (``"dft"`` or ``"dhw"``)."""
    if basis == "dft":
        return dft_forward(x)
    if basis == "dhw":
        return dhw_forward(x)
    raise ValueError(f"unknown basis {basis!r}")


def synthesis(basis, s):
    """Apply ``Phi`` for the named basis; real part for the DFT."""
    if basis == "dft":
        return dft_inverse(s)
    if basis == "dhw":
        return dhw_inverse(np.real(s))
    raise ValueError(f"unknown basis {basis!r}")


def analysis_matrix(basis, n):
    """Dense ``Phi*`` (rows = analysis functionals) for small-N oracles."""
    check_pow2(n)
    if basis == "dft":
        f = storage_freqs(n)[:, None]
        k = np.arange(n)[None, :]
        return np.exp(-2j * np.pi * f * k / n) / np.sqrt(n)
    if basis == "dhw":
        return kernels.haar_analysis(np.eye(n))
    raise ValueError(f"unknown basis {basis!r}")
