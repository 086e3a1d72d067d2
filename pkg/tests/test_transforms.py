import logging

import numpy as np
import pytest

from codedfti import kernels, transforms
from oracles import dense_dft_analysis, dense_haar_analysis

RNG = np.random.default_rng(1234)


@pytest.mark.parametrize("n", [2, 4, 8, 64])
def test_dft_matches_dense_oracle(n):
    oracle = dense_dft_analysis(n)
    x = RNG.standard_normal(n)
    assert np.max(np.abs(transforms.dft_forward(x) - oracle @ x)) < 1e-12
    assert np.max(np.abs(transforms.analysis_matrix("dft", n) - oracle)) < 1e-12


@pytest.mark.parametrize("n", [2, 4, 8, 64])
def test_dhw_matches_dense_oracle(n):
    oracle = dense_haar_analysis(n)
    x = RNG.standard_normal(n)
    assert np.max(np.abs(transforms.dhw_forward(x) - oracle @ x)) < 1e-12
    assert np.max(np.abs(transforms.analysis_matrix("dhw", n) - oracle)) < 1e-12


def test_dft_delta_has_flat_magnitude():
    e1 = np.zeros(4)
    e1[0] = 1.0
    assert np.allclose(np.abs(transforms.dft_forward(e1)), 0.5, atol=1e-12)


def test_dft_constant_concentrates_at_dc():
    n = 8
    x = np.full(n, 1.0 / np.sqrt(n))
    y = transforms.dft_forward(x)
    dc = n // 2 - 1  # storage index with frequency zero
    assert abs(y[dc] - 1.0) < 1e-12
    off = np.delete(np.abs(y), dc)
    assert np.max(off) < 1e-12


def test_dft_vector_1234_against_oracle():
    x = np.array([1.0, 2.0, 3.0, 4.0]) / np.sqrt(30.0)
    assert np.max(np.abs(transforms.dft_forward(x) - dense_dft_analysis(4) @ x)) < 1e-12


def test_dft_inverse_of_dc_is_constant():
    n = 8
    y = np.zeros(n, dtype=complex)
    y[n // 2 - 1] = 1.0
    assert np.allclose(transforms.dft_inverse(y), 1.0 / np.sqrt(n), atol=1e-12)


@pytest.mark.parametrize("n", [2, 16, 256, 1024])
def test_unitarity_and_roundtrip(n):
    x = RNG.standard_normal(n)
    nx = np.linalg.norm(x)
    y = transforms.dft_forward(x)
    assert abs(np.linalg.norm(y) - nx) <= 1e-10 * nx
    assert np.max(np.abs(transforms.dft_inverse(y) - x)) <= 1e-10 * nx
    s = transforms.dhw_forward(x)
    assert abs(np.linalg.norm(s) - nx) <= 1e-10 * nx
    assert np.max(np.abs(transforms.dhw_inverse(s) - x)) <= 1e-10 * nx


def test_haar_two_point_hand_case():
    s = transforms.dhw_forward(np.array([1.0, 0.0]))
    assert np.allclose(s, [1 / np.sqrt(2), 1 / np.sqrt(2)], atol=1e-15)


def test_haar_constant_is_pure_scaling():
    c = 0.7
    s = transforms.dhw_forward(np.full(16, c))
    assert abs(s[0] - c * 4.0) < 1e-12
    assert np.max(np.abs(s[1:])) < 1e-12


def test_adjoint_consistency():
    n = 64
    x = RNG.standard_normal(n)
    y = RNG.standard_normal(n) + 1j * RNG.standard_normal(n)
    lhs = np.vdot(transforms.dft_forward(x), y)
    rhs = np.dot(x, transforms.dft_inverse(y))
    assert abs(lhs.real - rhs) < 1e-10
    s = RNG.standard_normal(n)
    assert abs(np.dot(transforms.dhw_forward(x), s) - np.dot(x, transforms.dhw_inverse(s))) < 1e-10


def test_non_power_of_two_rejected():
    for bad in (0, 1, 3, 12):
        with pytest.raises(ValueError):
            transforms.dft_forward(np.zeros(max(bad, 1))[:bad] if bad else np.zeros(0))
    with pytest.raises(ValueError):
        transforms.dhw_forward(np.zeros(6))


def test_imag_residue_diagnostic_logged(caplog):
    y = RNG.standard_normal(8) + 1j * RNG.standard_normal(8)  # not conjugate-symmetric
    with caplog.at_level(logging.WARNING, logger="codedfti.transforms"):
        transforms.dft_inverse(y)
    assert any("imaginary residue" in r.message for r in caplog.records)


def test_columnwise_operation():
    x = RNG.standard_normal((32, 5))
    assert np.max(np.abs(transforms.dft_inverse(transforms.dft_forward(x)) - x)) < 1e-10
    assert np.max(np.abs(transforms.dhw_inverse(transforms.dhw_forward(x)) - x)) < 1e-10


def test_kernel_backends_agree():
    if kernels.cython_backend is None:
        pytest.skip("compiled kernels unavailable")
    an_np, sy_np = kernels.numpy_backend
    an_cy, sy_cy = kernels.cython_backend
    for n in (2, 8, 128, 1024):
        v = RNG.standard_normal(n)
        assert np.max(np.abs(an_np(v) - an_cy(v))) < 1e-14
        assert np.max(np.abs(sy_np(v) - sy_cy(v))) < 1e-14


def test_forced_fallback_selects_numpy_backend():
    import subprocess
    import sys

    out = subprocess.run(
        [sys.executable, "-c", "import codedfti; print(codedfti.KERNEL_BACKEND)"],
        env={"PATH": "/usr/bin:/bin", "CODEDFTI_NO_EXT": "1"},
        capture_output=True,
        text=True,
        check=True,
    )
    assert out.stdout.strip() == "numpy"


def test_frequency_index_convention():
    n = 16
    f = transforms.storage_freqs(n)
    assert f[0] == -n // 2 + 1 and f[-1] == n // 2 and f[n // 2 - 1] == 0
    assert np.array_equal(transforms.freq_to_storage(f, n), np.arange(n))
    with pytest.raises(ValueError):
        transforms.freq_to_storage(np.array([n]), n)
