"""Uplink pilot segment: received-signal synthesis, LS decorrelation and the
exact decomposition of the decorrelated signal into interference terms.

Sign convention
---------------
For an interfering UT ``k`` and target ``t`` with basic pilots ``s_k``,
``s_t`` and shift difference ``dphi = phi_k - phi_t``, the contribution of
``H_k`` to the decorrelated target signal is ``H_k @ T`` with

    T[i, j] = c[<i - j + dphi>_N_c] / N_c,    i, j < N_g,

where ``c`` is the first column of the basic ADPCM ``W^T S_k S_t^H W*``.
A single-peak ``c`` (offset ``o``, value ``v``) therefore contributes
``(v/N_c) * shift_truncate(H_k, dphi - o)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .transforms import (SystemDims, ad_to_sf, array_response, dft_matrix,
                         shift_truncate)
from .zc import (CYCLIC_SHIFT_SCALED, Adpcm, BasicPilot, PilotAssignment,
                 basic_adpcm, pilot_frequency_signal)


@dataclass(frozen=True, eq=False)
class UtLink:
    """One UT's channel, statistical CSI and pilot assignment."""

    H: np.ndarray
    P: np.ndarray
    assignment: PilotAssignment
    mu: np.ndarray | None = None


@dataclass(eq=False)
class UplinkScene:
    """All UTs sharing one pilot symbol.

    ``pilots[q]`` is the basic pilot of group ``q``; ``p_ntr`` is the noise
    power per space-frequency element and ``p_xtr`` the nominal pilot power
    defining the training SNR ``eta = p_xtr / p_ntr``.  LS decorrelation
    normalizes by each target's own pilot power.
    """

    dims: SystemDims
    pilots: list[BasicPilot]
    uts: list[UtLink]
    p_ntr: float = 0.0
    p_xtr: float = 1.0
    _adpcm_cache: dict = field(default_factory=dict, repr=False)

    def __post_init__(self):
        d = self.dims
        for k, ut in enumerate(self.uts):
            if np.shape(ut.H) != (d.M, d.N_g) or np.shape(ut.P) != (d.M, d.N_g):
                raise ValueError(f"UT {k}: channel and power must be {d.M}x{d.N_g}")
            if not 0 <= ut.assignment.group < len(self.pilots):
                raise ValueError(f"UT {k}: group {ut.assignment.group} has no basic pilot")
        for q, s in enumerate(self.pilots):
            if len(s) != d.N_c:
                raise ValueError(f"pilot {q} has length {len(s)}, expected N_c={d.N_c}")

    @property
    def eta(self) -> float:
        return math.inf if self.p_ntr == 0 else self.p_xtr / self.p_ntr

    def pair_adpcm(self, q_src: int, q_dst: int) -> Adpcm:
        """Basic ADPCM of group ``q_src`` seen by a target in group ``q_dst``."""
        key = (q_src, q_dst)
        if key not in self._adpcm_cache:
            self._adpcm_cache[key] = basic_adpcm(self.pilots[q_src], self.pilots[q_dst])
        return self._adpcm_cache[key]


def synthesize_received(scene: UplinkScene, rng: np.random.Generator | None = None,
                        channels=None) -> np.ndarray:
    """Space-frequency received pilot block ``Y = sum_k G_k X_k + N``.

    ``channels`` overrides the stored per-UT ``H``; each entry may carry
    leading batch axes ``(..., M, N_g)``, in which case ``Y`` has the same
    leading axes and independent noise per batch element.
    """
    d = scene.dims
    Hs = [ut.H for ut in scene.uts] if channels is None else list(channels)
    if len(Hs) != len(scene.uts):
        raise ValueError("one channel per UT required")
    Y = np.zeros((d.M, d.N_c), dtype=complex)
    for ut, H in zip(scene.uts, Hs):
        x = pilot_frequency_signal(ut.assignment, scene.pilots[ut.assignment.group])
        Y = Y + ad_to_sf(H, d) * x
    if scene.p_ntr > 0:
        if rng is None:
            raise ValueError("noisy scene needs an RNG")
        s = math.sqrt(scene.p_ntr / 2)
        Y += s * (rng.standard_normal(Y.shape) + 1j * rng.standard_normal(Y.shape))
    return Y


def ls_decorrelate(Y, target: PilotAssignment, pilot: BasicPilot, dims: SystemDims,
                   p_xtr: float | None = None) -> np.ndarray:
    """``(1/(p_xtr sqrt(N_c))) A^H Y X_t^H W*_{N_c x N_g}``.

    ``p_xtr`` defaults to the target's own pilot power.
    """
    Y = np.asarray(Y, dtype=complex)
    if Y.shape[-2:] != (dims.M, dims.N_c):
        raise ValueError(f"received block must be {dims.M}x{dims.N_c}, got {Y.shape}")
    p = target.power if p_xtr is None else p_xtr
    x = pilot_frequency_signal(target, pilot)
    A = array_response(dims.M)
    W = dft_matrix(dims.N_c, dims.N_g)
    return A.conj().T @ (Y * x.conj()) @ W.conj() / (p * math.sqrt(dims.N_c))


def intra_interference(H, delta_phi: int, N_c: int) -> np.ndarray:
    """Same-group interference: ``H`` zero-padded, shifted right by ``delta_phi``, truncated."""
    return shift_truncate(H, delta_phi, N_c)


def inter_interference(H, Z: Adpcm, delta_phi: int) -> np.ndarray:
    """Interference of ``H`` through basic ADPCM ``Z`` at shift difference ``delta_phi``.

    Single-peak ``Z`` takes the shift-and-scale path; anything else goes
    through the ``N_g x N_g`` effective block.
    """
    H = np.asarray(H)
    N_c = Z.N
    if Z.structure == CYCLIC_SHIFT_SCALED:
        return (Z.scale / N_c) * shift_truncate(H, delta_phi - Z.offset, N_c)
    return H @ (Z.effective_block(delta_phi, H.shape[-1]) / N_c)


def interference_power(P, delta_phi: int, Z: Adpcm | None = None,
                       N_c: int | None = None) -> np.ndarray:
    """Mean power ``E|interference|^2`` contributed by a UT with power matrix ``P``.

    ``Z=None`` means the same group, which needs ``N_c``.  Exact for
    interferers whose entries are independent and zero-mean.
    """
    P = np.asarray(P, dtype=float)
    N_g = P.shape[-1]
    if Z is None:
        if N_c is None:
            raise ValueError("same-group power needs N_c")
        return intra_power(P, delta_phi, N_c)
    if Z.structure == CYCLIC_SHIFT_SCALED:
        return abs(Z.scale / Z.N) ** 2 * shift_truncate(P, delta_phi - Z.offset, Z.N)
    T = np.abs(Z.effective_block(delta_phi, N_g) / Z.N) ** 2
    return P @ T


def intra_power(P, delta_phi: int, N_c: int) -> np.ndarray:
    """Same-group counterpart of :func:`interference_power`."""
    return shift_truncate(np.asarray(P, dtype=float), delta_phi, N_c)


def pair_term(scene: UplinkScene, k: int, t: int, H=None) -> np.ndarray:
    """Contribution of UT ``k`` to the decorrelated signal of target ``t``.

    The target's own term (``k == t``) is ``H_t``.  Pilot-power ratios are
    folded in so that the terms sum exactly to :func:`ls_decorrelate`.
    """
    src, dst = scene.uts[k], scene.uts[t]
    H = src.H if H is None else H
    amp = math.sqrt(src.assignment.power / dst.assignment.power)
    dphi = src.assignment.shift - dst.assignment.shift
    if src.assignment.group == dst.assignment.group:
        return amp * intra_interference(H, dphi, scene.dims.N_c)
    Z = scene.pair_adpcm(src.assignment.group, dst.assignment.group)
    return amp * inter_interference(H, Z, dphi)


def pair_power(scene: UplinkScene, k: int, t: int) -> np.ndarray:
    """Mean power of :func:`pair_term` for zero-mean, element-independent ``H_k``."""
    src, dst = scene.uts[k], scene.uts[t]
    amp2 = src.assignment.power / dst.assignment.power
    dphi = src.assignment.shift - dst.assignment.shift
    if src.assignment.group == dst.assignment.group:
        return amp2 * intra_power(src.P, dphi, scene.dims.N_c)
    Z = scene.pair_adpcm(src.assignment.group, dst.assignment.group)
    return amp2 * interference_power(src.P, dphi, Z)


def decompose(scene: UplinkScene, t: int) -> dict[str, np.ndarray]:
    """Noise-free decorrelated signal of target ``t`` split into its terms.

    Returns ``{"target", "intra", "inter"}``, each ``M x N_g``.
    """
    d = scene.dims
    out = {"target": np.array(scene.uts[t].H, dtype=complex),
           "intra": np.zeros((d.M, d.N_g), dtype=complex),
           "inter": np.zeros((d.M, d.N_g), dtype=complex)}
    g = scene.uts[t].assignment.group
    for k in range(len(scene.uts)):
        if k == t:
            continue
        key = "intra" if scene.uts[k].assignment.group == g else "inter"
        out[key] += pair_term(scene, k, t)
    return out
