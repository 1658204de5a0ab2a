"""Unitary transforms and index helpers for the angle-delay channel representation.

Conventions
-----------
``W_N`` is the *unnormalized* DFT matrix, ``[W_N]_{k,n} = exp(-2j*pi*k*n/N)``.
Normalization factors are applied at call sites, never folded into the
transform.  All functions broadcast over leading axes, so a stack of
channel matrices of shape ``(..., M, N_g)`` can be transformed at once.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


@dataclass(frozen=True)
class SystemDims:
    """Array and OFDM dimensions: antennas, subcarriers and cyclic-prefix length."""

    M: int
    N_c: int
    N_g: int

    def __post_init__(self):
        if self.M < 1:
            raise ValueError(f"antenna count must be >= 1, got M={self.M}")
        if not 1 <= self.N_g <= self.N_c:
            raise ValueError(
                f"need 1 <= N_g <= N_c, got N_g={self.N_g}, N_c={self.N_c}")


def _as_vector(v) -> np.ndarray:
    v = np.asarray(v, dtype=complex)
    if v.shape[-1] == 0:
        raise ValueError("empty input")
    return v


def dft(v) -> np.ndarray:
    """Unnormalized forward DFT along the last axis (pocketfft, any length)."""
    return np.fft.fft(_as_vector(v), axis=-1)


def idft(v) -> np.ndarray:
    """Inverse of :func:`dft`, carrying the ``1/N`` factor."""
    return np.fft.ifft(_as_vector(v), axis=-1)


def dft_direct(v) -> np.ndarray:
    """O(N^2) evaluation of the DFT sum; kept as the reference for :func:`dft`."""
    v = _as_vector(v)
    return v @ dft_matrix(v.shape[-1]).T


def idft_direct(v) -> np.ndarray:
    v = _as_vector(v)
    return v @ dft_matrix(v.shape[-1]).conj().T / v.shape[-1]


@lru_cache(maxsize=32)
def _dft_matrix_cached(N: int) -> np.ndarray:
    n = np.arange(N)
    # reduce k*n mod N before the exponential to keep the phases exact
    W = np.exp(-2j * np.pi * (np.outer(n, n) % N) / N)
    W.setflags(write=False)
    return W


def dft_matrix(N: int, L: int | None = None) -> np.ndarray:
    """``W_N`` or, when ``L`` is given, its first ``L`` columns ``W_{N x L}``."""
    if N < 1:
        raise ValueError("N must be positive")
    W = _dft_matrix_cached(int(N))
    return W if L is None else W[:, :L]


def dft_column(N: int, l: int) -> np.ndarray:
    """Column ``W_{N,l}``: the phase ramp ``exp(-2j*pi*n*l/N)``."""
    n = np.arange(N)
    return np.exp(-2j * np.pi * ((n * l) % N) / N)


@lru_cache(maxsize=32)
def _array_response_cached(M: int) -> np.ndarray:
    i = np.arange(M)[:, None]
    j = np.arange(M)[None, :]
    A = np.exp(-2j * np.pi * i * (j - M / 2) / M) / np.sqrt(M)
    A.setflags(write=False)
    return A


def array_response(M: int) -> np.ndarray:
    """Unitary ULA response matrix, ``[A]_{i,j} = exp(-2j*pi*i*(j - M/2)/M)/sqrt(M)``.

    Row ``i`` is the antenna index and column ``j`` the angle bin.  The
    formula is used verbatim for odd ``M`` as well.
    """
    if M < 1:
        raise ValueError("M must be positive")
    return _array_response_cached(int(M))


def cyclic_shift_right(X, n: int) -> np.ndarray:
    """Return ``X @ Lambda_N^n``: columns rotated right by ``<n>_N``."""
    X = np.asarray(X)
    N = X.shape[-1]
    return np.roll(X, int(n) % N, axis=-1)


def shift_matrix(N: int, n: int) -> np.ndarray:
    """Dense cyclic shift matrix ``Lambda_N^n`` (test oracle for index arithmetic)."""
    s = int(n) % N
    Lam = np.zeros((N, N))
    Lam[: N - s, s:] = np.eye(N - s)
    Lam[N - s:, :s] = np.eye(s)
    return Lam


def zero_pad(H, N_c: int) -> np.ndarray:
    """Complement-0 extension ``[H, 0]`` from ``N_g`` to ``N_c`` columns."""
    H = np.asarray(H)
    pad = [(0, 0)] * (H.ndim - 1) + [(0, N_c - H.shape[-1])]
    return np.pad(H, pad)


def shift_truncate(H, n: int, N_c: int) -> np.ndarray:
    """Zero-pad to ``N_c`` columns, shift right by ``n``, keep the first ``N_g`` columns."""
    H = np.asarray(H)
    N_g = H.shape[-1]
    return cyclic_shift_right(zero_pad(H, N_c), n)[..., :N_g]


def sf_to_ad(G, dims: SystemDims) -> np.ndarray:
    """Space-frequency ``M x N_c`` channel to its ``M x N_g`` angle-delay form.

    ``H = A^H G W*_{N_c x N_g} / sqrt(N_c)``, the exact inverse of
    :func:`ad_to_sf` on delay profiles confined to the cyclic prefix.
    """
    G = np.asarray(G, dtype=complex)
    if G.shape[-2:] != (dims.M, dims.N_c):
        raise ValueError(f"expected trailing shape {(dims.M, dims.N_c)}, got {G.shape}")
    A = array_response(dims.M)
    W = dft_matrix(dims.N_c, dims.N_g)
    return A.conj().T @ G @ W.conj() / np.sqrt(dims.N_c)


def ad_to_sf(H, dims: SystemDims) -> np.ndarray:
    """``G = A H W^T_{N_c x N_g} / sqrt(N_c)``."""
    H = np.asarray(H, dtype=complex)
    if H.shape[-2:] != (dims.M, dims.N_g):
        raise ValueError(f"expected trailing shape {(dims.M, dims.N_g)}, got {H.shape}")
    A = array_response(dims.M)
    W = dft_matrix(dims.N_c, dims.N_g)
    return A @ H @ W.T / np.sqrt(dims.N_c)
