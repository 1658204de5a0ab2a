"""Element-wise MMSE estimation, its closed-form error, inter-group
pre-processing and channel prediction in the angle-delay domain."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .channel import tcf
from .uplink import UplinkScene, pair_power, pair_term

EPS_TAN = 1e-3


@dataclass(frozen=True, eq=False)
class InterferenceProfile:
    """Second-order statistics of one target's decorrelated signal.

    Attributes
    ----------
    p_sigma : ndarray
        Aggregate power ``P_Sigma`` over every UT, target included.
    p_intra : ndarray
        Same-group part of ``p_sigma`` (target included).
    theta_sigma : ndarray
        Argument of the mean inter-group term after return-to-zero
        rotation; NaN where no inter-group power lands.
    theta_zero : ndarray
        Return-to-zero rotation ``exp(-1j*mu)`` of the target.
    """

    p_sigma: np.ndarray
    p_intra: np.ndarray
    theta_sigma: np.ndarray
    theta_zero: np.ndarray

    def intra_only(self) -> "InterferenceProfile":
        return replace(self, p_sigma=self.p_intra)


def aggregate_interference_power(scene: UplinkScene, target: int,
                                 weights: str = "power") -> InterferenceProfile:
    """Build the :class:`InterferenceProfile` of UT ``target``.

    ``weights`` selects what multiplies each interferer's mean argument
    when forming ``theta_sigma``: ``"power"`` (``P``) or ``"amplitude"``
    (``sqrt(P)``, the exact direction of the mean interference).  The two
    agree whenever interferers overlapping an element share one argument.
    """
    if weights not in ("power", "amplitude"):
        raise ValueError(f"unknown weighting {weights!r}")
    d = scene.dims
    t_ut = scene.uts[target]
    g = t_ut.assignment.group
    p_sigma = np.zeros((d.M, d.N_g))
    p_intra = np.zeros((d.M, d.N_g))
    mean_inter = np.zeros((d.M, d.N_g), dtype=complex)
    inter_pow = np.zeros((d.M, d.N_g))
    for k, ut in enumerate(scene.uts):
        pw = pair_power(scene, k, target)
        p_sigma += pw
        if ut.assignment.group == g:
            p_intra += pw
            continue
        inter_pow += pw
        mu = np.zeros((d.M, d.N_g)) if ut.mu is None else ut.mu
        w = ut.P if weights == "power" else np.sqrt(ut.P)
        mean_inter += pair_term(scene, k, target, H=w * np.exp(1j * mu))
    mu_t = np.zeros((d.M, d.N_g)) if t_ut.mu is None else t_ut.mu
    theta_zero = np.exp(-1j * mu_t)
    theta_sigma = np.angle(theta_zero * mean_inter)
    tiny = inter_pow <= 1e-12 * max(1.0, float(inter_pow.max(initial=0.0)))
    theta_sigma = np.where(tiny, np.nan, theta_sigma)
    return InterferenceProfile(p_sigma, p_intra, theta_sigma, theta_zero)


def _noise_var(eta: float) -> float:
    return 0.0 if math.isinf(eta) else 1.0 / eta


def _p_sigma(profile) -> np.ndarray:
    return profile.p_sigma if isinstance(profile, InterferenceProfile) else np.asarray(profile, float)


def wiener_gain(P, profile, eta: float) -> np.ndarray:
    """``P / (P_Sigma + 1/eta)`` with zero gain wherever ``P`` is zero."""
    P = np.asarray(P, dtype=float)
    den = _p_sigma(profile) + _noise_var(eta)
    out = np.zeros_like(P)
    np.divide(P, den, out=out, where=P > 0)
    return out


def mmse_estimate(Y, P, profile, eta: float) -> np.ndarray:
    """Element-wise MMSE estimate ``P/(P_Sigma + 1/eta) * Y``."""
    return wiener_gain(P, profile, eta) * np.asarray(Y)


def mmse_error_elementwise(P, profile, eta: float) -> np.ndarray:
    P = np.asarray(P, dtype=float)
    return P - wiener_gain(P, profile, eta) * P


def mmse_error_theoretical(P, profile, eta: float) -> float:
    """Closed-form MMSE error ``sum(P - P^2/(P_Sigma + 1/eta))`` of one UT."""
    return float(mmse_error_elementwise(P, profile, eta).sum())


def mmse_error_lower_bound(powers, eta: float) -> float:
    """Interference-free error summed over every UT in ``powers``."""
    return float(sum(mmse_error_theoretical(P, P, eta) for P in powers))


def rtz_projection(Y, profile: InterferenceProfile, eps_tan: float = EPS_TAN):
    """Return-to-zero projection ``Re{T0 Y} - Im{T0 Y}/tan(Theta_Sigma)``.

    Returns ``(r, active, bypassed)``.  ``r`` is real and meaningful only
    where ``active``: elements with no inter-group power (NaN angle) and
    elements whose ``|sin Theta_Sigma|`` falls below ``eps_tan`` are
    inactive, the latter also flagged in ``bypassed``.
    """
    z = profile.theta_zero * np.asarray(Y)
    th = profile.theta_sigma
    has = ~np.isnan(th)
    th0 = np.where(has, th, np.pi / 2)
    bypassed = has & (np.abs(np.sin(th0)) < eps_tan)
    active = has & ~bypassed
    safe = np.where(active, th0, np.pi / 2)
    r = z.real - z.imag * (np.cos(safe) / np.sin(safe))
    return r, active, bypassed


def preprocess(Y, profile: InterferenceProfile, sigma_bar_sq: float,
               eps_tan: float = EPS_TAN, return_count: bool = False):
    """Cancel the inter-group component along ``Theta_Sigma``.

    Elements with inter-group power are projected by :func:`rtz_projection`,
    rescaled by ``1/exp(-sigma_bar^2/2)`` and rotated back into the
    original frame by ``exp(1j*mu)``, so the output estimates ``H``
    directly.  Elements without inter-group power, and elements where
    ``|sin Theta_Sigma| < eps_tan``, get the rotation alone, which is the
    identity once undone.  With ``return_count`` the number of such
    near-singular elements is returned too.
    """
    Y = np.asarray(Y, dtype=complex)
    r, active, bypassed = rtz_projection(Y, profile, eps_tan)
    fixed = profile.theta_zero.conj() * r / math.exp(-sigma_bar_sq / 2)
    out = np.where(active, fixed, Y)
    if return_count:
        return out, int(bypassed.sum())
    return out


def predict_channel(Y, P, profile, eta: float, delta_ell: float, nu_Tsym: float) -> np.ndarray:
    """``rho(delta_ell) * P/(P_Sigma + 1/eta) * Y``.

    Pass ``profile.intra_only()`` for the same-group denominator used after
    pre-processing, or the full profile for the all-group variant.
    """
    return float(tcf(delta_ell, nu_Tsym)) * mmse_estimate(Y, P, profile, eta)


def prediction_error_theoretical(P, profile, eta: float, delta_ell: float,
                                 nu_Tsym: float) -> float:
    """``sum(P - rho^2 P^2/(P_Sigma + 1/eta))``."""
    rho = float(tcf(delta_ell, nu_Tsym))
    P = np.asarray(P, dtype=float)
    return float((P - rho * rho * wiener_gain(P, profile, eta) * P).sum())
