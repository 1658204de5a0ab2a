"""Synthetic sparse angle-delay channels and their temporal evolution."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .transforms import SystemDims

TWO_PI = 2 * np.pi


@dataclass(frozen=True)
class ChannelParams:
    """Generator settings shared by every UT of a scene.

    ``taps`` and ``span`` are either an integer or an inclusive ``(lo, hi)``
    range drawn uniformly per UT.  ``span`` counts contiguous angle bins.
    """

    dims: SystemDims
    nu_Tsym: float = 0.0314
    sigma_bar_sq: float = 0.01
    taps: int | tuple[int, int] = (8, 16)
    span: int | tuple[int, int] = (2, 6)
    tap_decay: float = 4.0
    mu_jitter: float = 0.1
    seed: int | None = None

    def __post_init__(self):
        lo, hi = _bounds(self.taps)
        if lo < 1 or hi > self.dims.N_g:
            raise ValueError(f"tap count must lie in [1, N_g={self.dims.N_g}], got {self.taps}")
        lo, hi = _bounds(self.span)
        if lo < 1 or hi > self.dims.M:
            raise ValueError(f"angular span must lie in [1, M={self.dims.M}], got {self.span}")
        if self.sigma_bar_sq < 0 or self.nu_Tsym < 0:
            raise ValueError("sigma_bar_sq and nu_Tsym must be non-negative")


def _bounds(v) -> tuple[int, int]:
    if isinstance(v, (tuple, list)):
        return int(v[0]), int(v[1])
    return int(v), int(v)


def _draw(v, rng) -> int:
    lo, hi = _bounds(v)
    return int(rng.integers(lo, hi + 1))


@dataclass(frozen=True, eq=False)
class ArgumentModel:
    """Mean arguments (radians, in ``[0, 2*pi)``) and their shared variance."""

    mu: np.ndarray
    sigma_bar_sq: float = 0.01

    @property
    def theta_zero(self) -> np.ndarray:
        """Return-to-zero rotation ``exp(-1j*mu)``."""
        return np.exp(-1j * self.mu)


def generate_power_matrix(params: ChannelParams, rng: np.random.Generator,
                          taps: int | None = None, span: int | None = None) -> np.ndarray:
    """Draw one sparse ``M x N_g`` power matrix normalized to ``M * N_c``.

    Delay support is ``taps`` contiguous columns with exponentially decaying
    power; angular support is ``span`` contiguous rows with a raised-cosine
    profile.
    """
    d = params.dims
    c = _draw(params.taps, rng) if taps is None else int(taps)
    s = _draw(params.span, rng) if span is None else int(span)
    if not 1 <= c <= d.N_g:
        raise ValueError(f"tap count {c} exceeds N_g={d.N_g}")
    if not 1 <= s <= d.M:
        raise ValueError(f"angular span {s} exceeds M={d.M}")
    t0 = int(rng.integers(0, d.N_g - c + 1))
    a0 = int(rng.integers(0, d.M - s + 1))
    tap_pow = np.exp(-np.arange(c) / params.tap_decay)
    ang = 0.5 * (1 - np.cos(TWO_PI * (np.arange(s) + 1) / (s + 1)))
    P = np.zeros((d.M, d.N_g))
    P[a0:a0 + s, t0:t0 + c] = np.outer(ang, tap_pow)
    return P * (d.M * d.N_c / P.sum())


def generate_argument_model(P: np.ndarray, rng: np.random.Generator,
                            sigma_bar_sq: float = 0.01, jitter: float = 0.1,
                            mu0: float | None = None) -> ArgumentModel:
    """Per-UT mean argument plus uniform per-element jitter in ``[-jitter, jitter]``.

    ``mu0`` is the dominant (LoS) argument; drawn uniformly when omitted.
    """
    if mu0 is None:
        mu0 = rng.uniform(0, TWO_PI)
    mu = (mu0 + rng.uniform(-jitter, jitter, size=np.shape(P))) % TWO_PI
    return ArgumentModel(mu, sigma_bar_sq)


def realize_channel(P, args: ArgumentModel, rng: np.random.Generator,
                    magnitude: str = "rayleigh", size: int | None = None) -> np.ndarray:
    """Draw ``H = sqrt(P) * g * exp(1j*theta)`` with ``theta ~ WN(mu, sigma_bar^2)``.

    ``magnitude="rayleigh"`` draws ``g`` Rayleigh with ``E{g^2} = 1``;
    ``"deterministic"`` uses ``g = 1``, so the amplitude is exactly
    ``sqrt(P)`` and ``E{H} = sqrt(P) exp(1j*mu - sigma_bar^2/2)``.
    ``size`` prepends an axis of independent draws.
    """
    P = np.asarray(P, dtype=float)
    if np.any(P < 0):
        raise ValueError("power matrix has negative entries")
    if args.mu.shape != P.shape:
        raise ValueError(f"argument shape {args.mu.shape} does not match {P.shape}")
    shape = P.shape if size is None else (size,) + P.shape
    theta = (args.mu + math.sqrt(args.sigma_bar_sq) * rng.standard_normal(shape)) % TWO_PI
    amp = np.sqrt(P)
    if magnitude == "rayleigh":
        amp = amp * np.abs(rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) / math.sqrt(2)
    elif magnitude != "deterministic":
        raise ValueError(f"unknown magnitude model {magnitude!r}")
    return amp * np.exp(1j * theta)


def bessel_j0(x):
    """Zeroth-order Bessel function of the first kind.

    Power series below ``|x| = 12``, Hankel asymptotic expansion above.
    Absolute error stays below 1e-11 everywhere.
    """
    x = np.abs(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    small = x < 12.0
    out[small] = _j0_series(x[small])
    out[~small] = _j0_asymptotic(x[~small])
    return out if out.ndim else float(out)


def _j0_series(x):
    y = (x / 2) ** 2
    term = np.ones_like(x)
    total = np.ones_like(x)
    for k in range(1, 60):
        term = term * (-y / (k * k))
        total = total + term
    return total


def _j0_asymptotic(x, n_terms: int = 10):
    # a_k = prod_{j<=k} -(2j-1)^2 / (8j); P collects even k, Q odd k
    coef = [1.0]
    for k in range(1, 2 * n_terms):
        coef.append(coef[-1] * (-((2 * k - 1) ** 2) / (8.0 * k)))
    P = sum((-1) ** m * coef[2 * m] / x ** (2 * m) for m in range(n_terms))
    Q = sum((-1) ** m * coef[2 * m + 1] / x ** (2 * m + 1) for m in range(n_terms))
    w = x - np.pi / 4
    return np.sqrt(2 / (np.pi * x)) * (P * np.cos(w) - Q * np.sin(w))


def tcf(delta_ell, nu_Tsym: float):
    """Temporal correlation ``J0(2*pi*nu*T_sym*delta_ell)``."""
    return bessel_j0(TWO_PI * nu_Tsym * np.asarray(delta_ell, dtype=float))


def evolve_channel(H, P, args: ArgumentModel, delta_ell: float, nu_Tsym: float,
                   rng: np.random.Generator, magnitude: str = "rayleigh") -> np.ndarray:
    """First-order mix ``rho*H + sqrt(1-rho^2)*H_innov`` with ``rho = tcf(delta_ell)``.

    The innovation is an independent draw with its own uniformly random
    mean argument, so it is zero-mean and uncorrelated with ``H``; this is
    what makes ``E{H' H*} = rho P`` and ``E{|H'|^2} = P`` hold.
    """
    rho = float(tcf(delta_ell, nu_Tsym))
    if rho == 1.0:
        return np.array(H, dtype=complex, copy=True)
    H = np.asarray(H)
    lead = H.shape[:-2]
    mu0 = rng.uniform(0, TWO_PI, size=lead + (1, 1))
    innov_args = ArgumentModel((args.mu + mu0) % TWO_PI, args.sigma_bar_sq)
    innov = _realize_broadcast(P, innov_args, rng, magnitude)
    return rho * H + math.sqrt(max(0.0, 1 - rho * rho)) * innov


def _realize_broadcast(P, args: ArgumentModel, rng, magnitude):
    if magnitude not in ("rayleigh", "deterministic"):
        raise ValueError(f"unknown magnitude model {magnitude!r}")
    P = np.broadcast_to(np.asarray(P, dtype=float), args.mu.shape)
    theta = (args.mu + math.sqrt(args.sigma_bar_sq) * rng.standard_normal(args.mu.shape)) % TWO_PI
    amp = np.sqrt(P)
    if magnitude == "rayleigh":
        amp = amp * np.abs(rng.standard_normal(P.shape) + 1j * rng.standard_normal(P.shape)) / math.sqrt(2)
    return amp * np.exp(1j * theta)


def los_gain(beta: float, d0: float, wavelength: float) -> complex:
    """LoS complex gain ``beta * exp(-2j*pi*d0/lambda)``."""
    return beta * np.exp(-2j * np.pi * d0 / wavelength)


def ray_channel(paths, dims: SystemDims) -> np.ndarray:
    """Space-frequency channel ``M x N_c`` from ``(gain, direction cosine, delay)`` rays.

    Delays are in samples and must stay inside the cyclic prefix.
    """
    m = np.arange(dims.M)[:, None]
    n = np.arange(dims.N_c)[None, :]
    G = np.zeros((dims.M, dims.N_c), dtype=complex)
    for gain, cos_a, delay in paths:
        if not 0 <= delay < dims.N_g:
            raise ValueError(f"path delay {delay} outside the cyclic prefix [0, {dims.N_g})")
        G += gain * np.exp(-1j * np.pi * m * cos_a) * np.exp(-2j * np.pi * n * delay / dims.N_c)
    return G


def grid_direction_cosine(j: int, M: int) -> float:
    """Direction cosine that lands exactly on angle bin ``j`` of the array response."""
    return 2.0 * (j - M / 2) / M


# -- ensemble serialization -------------------------------------------------

def save_ensemble(prefix, powers, args: list[ArgumentModel], dims: SystemDims) -> tuple[Path, Path]:
    """Write ``<prefix>.npz`` (arrays) and ``<prefix>.csv`` (per-UT index).

    The npz holds ``P`` and ``mu`` of shape ``(K, M, N_g)``, ``sigma_bar_sq``
    of shape ``(K,)`` and ``dims = [M, N_c, N_g]``.  The CSV has one row per
    UT: ``ut_id, total_power, n_taps, n_beams, sigma_bar_sq``.
    """
    prefix = Path(prefix)
    P = np.stack([np.asarray(p, dtype=float) for p in powers])
    mu = np.stack([a.mu for a in args])
    sig = np.array([a.sigma_bar_sq for a in args])
    npz = prefix.with_suffix(".npz")
    np.savez(npz, P=P, mu=mu, sigma_bar_sq=sig, dims=np.array([dims.M, dims.N_c, dims.N_g]))
    csv_path = prefix.with_suffix(".csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ut_id", "total_power", "n_taps", "n_beams", "sigma_bar_sq"])
        for k, (p, s) in enumerate(zip(P, sig)):
            w.writerow([k, repr(float(p.sum())), int((p.sum(0) > 0).sum()),
                        int((p.sum(1) > 0).sum()), repr(float(s))])
    return npz, csv_path


def load_ensemble(prefix) -> tuple[list[np.ndarray], list[ArgumentModel], SystemDims]:
    with np.load(Path(prefix).with_suffix(".npz")) as z:
        M, N_c, N_g = (int(v) for v in z["dims"])
        P, mu, sig = z["P"], z["mu"], z["sigma_bar_sq"]
    args = [ArgumentModel(m, float(s)) for m, s in zip(mu, sig)]
    return list(P), args, SystemDims(M, N_c, N_g)
