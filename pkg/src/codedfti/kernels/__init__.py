"""Haar kernel backends.

The compiled Cython kernels are preferred when the extension built; otherwise
the pure-numpy implementation is used. Set ``CODEDFTI_NO_EXT=1`` to force the
fallback (used by the parity tests and the benchmark).

Both backends expose ``haar_analysis(x)`` / ``haar_synthesis(s)`` operating
along axis 0 of float64 arrays whose leading dimension is a power of two.
"""

import os

import numpy as np

from . import _haar_np

try:
    from . import _haar_cy
except ImportError:
    _haar_cy = None

_forced_fallback = os.environ.get("CODEDFTI_NO_EXT", "") not in ("", "0")

BACKEND = "numpy" if (_haar_cy is None or _forced_fallback) else "cython"


def _as_f64_1d(x):
    return np.ascontiguousarray(x, dtype=np.float64)


def _cy_analysis(x):
    x = np.asarray(x, dtype=np.float64)
    if x.ndim == 1:
        return _haar_cy.haar_analysis_1d(_as_f64_1d(x))
    out = np.empty_like(x)
    for j in range(x.shape[1]):
        out[:, j] = _haar_cy.haar_analysis_1d(_as_f64_1d(x[:, j]))
    return out


def _cy_synthesis(s):
    s = np.asarray(s, dtype=np.float64)
    if s.ndim == 1:
        return _haar_cy.haar_synthesis_1d(_as_f64_1d(s))
    out = np.empty_like(s)
    for j in range(s.shape[1]):
        out[:, j] = _haar_cy.haar_synthesis_1d(_as_f64_1d(s[:, j]))
    return out


numpy_backend = (_haar_np.haar_analysis, _haar_np.haar_synthesis)
cython_backend = None if _haar_cy is None else (_cy_analysis, _cy_synthesis)

if BACKEND == "cython":
    haar_analysis, haar_synthesis = cython_backend
else:
    haar_analysis, haar_synthesis = numpy_backend
