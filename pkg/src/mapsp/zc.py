"""Basic pilot sequences and pilot cross-correlation machinery.

Two correlation domains are handled here:

* the space-frequency pilot cross-correlation (SFPCM), a diagonal matrix
  stored as its diagonal vector, and
* the angle-delay pilot cross-correlation (ADPCM), a circulant matrix
  stored as its first column (:class:`Adpcm`).

Normalization: :func:`adpcm_fast` and :func:`adpcm_brute` return the
per-UT-pair matrix ``(1/N_c) W^T R W*``.  :func:`basic_adpcm` and
:func:`adpcm_zc_closed_form` return the basic-pilot matrix ``W^T R W*``
without the ``1/N_c`` factor, whose single peak for a same-root ZC pair
has magnitude ``N_c``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np

from .transforms import dft, dft_column, dft_matrix, idft

CYCLIC_SHIFT_SCALED = "cyclic_shift_scaled"
GENERAL_TOEPLITZ = "general_toeplitz"


class ClosedFormInapplicable(ValueError):
    """The ZC closed-form ADPCM does not hold for the requested parameters."""


@dataclass(frozen=True, eq=False)
class BasicPilot:
    """Unit-modulus frequency-domain sequence shared by one pilot group.

    ``kind`` is ``"zc"``, ``"dft"`` or ``"custom"``; ``params`` records how
    the sequence was built (root and shift for ZC, column index for DFT).
    """

    seq: np.ndarray
    kind: str = "custom"
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        seq = np.asarray(self.seq, dtype=complex)
        if seq.ndim != 1 or seq.size == 0:
            raise ValueError("pilot sequence must be a non-empty vector")
        if not np.allclose(np.abs(seq), 1.0, atol=1e-9):
            raise ValueError("pilot sequence must be unit modulus")
        object.__setattr__(self, "seq", seq)

    def __len__(self):
        return self.seq.size


@dataclass(frozen=True)
class PilotAssignment:
    """Group index, phase-shift factor and transmit power of one UT's pilot."""

    group: int
    shift: int
    power: float = 1.0

    def __post_init__(self):
        if self.power <= 0:
            raise ValueError("pilot power must be positive")
        if self.shift < 0:
            raise ValueError("shift must be non-negative")


def zc_sequence(N: int, r: int, phi: int = 0, *, wrap: str = "N") -> BasicPilot:
    """Zadoff-Chu sequence ``exp(-1j*pi*r*m*(m+1)/N)`` with ``m = <n - phi>``.

    Parameters
    ----------
    N : int
        Sequence length.
    r : int
        Root index.  A root sharing a factor with ``N`` only warns; bad
        pilot sets are a legitimate object of study.
    phi : int
        Cyclic shift, ``0 <= phi < N``.
    wrap : {"N", "N-1"}
        Modulus used for the shifted index.  ``"N"`` is the default and
        the only variant for which the closed-form ADPCM is derived.
    """
    if N < 2:
        raise ValueError(f"ZC length must be >= 2, got {N}")
    if not 0 <= phi < N:
        raise ValueError(f"cyclic shift must lie in [0, {N}), got {phi}")
    if math.gcd(r, N) != 1:
        warnings.warn(f"ZC root {r} is not coprime with length {N}", stacklevel=2)
    mod = {"N": N, "N-1": N - 1}[wrap]
    n = np.arange(N)
    m = (n - phi) % mod
    # r*m*(m+1) is reduced mod 2N so the phase argument stays small and exact
    e = (r * m * (m + 1)) % (2 * N)
    seq = np.exp(-1j * np.pi * e / N)
    return BasicPilot(seq, "zc", {"root": r, "shift": phi, "wrap": wrap})


def dft_pilot(N: int, index: int) -> BasicPilot:
    """Basic pilot equal to the DFT column ``W_{N,index}``."""
    return BasicPilot(dft_column(N, index), "dft", {"index": index})


def pilot_frequency_signal(assignment: PilotAssignment, basic: BasicPilot) -> np.ndarray:
    """Diagonal of ``X = sqrt(p) D_phi S_q``: ``sqrt(p) W_{N,phi}[n] s_q[n]``."""
    N = len(basic)
    if assignment.shift >= N:
        raise ValueError(f"shift {assignment.shift} out of range for N={N}")
    return np.sqrt(assignment.power) * dft_column(N, assignment.shift) * basic.seq


def _seq(p) -> np.ndarray:
    return p.seq if isinstance(p, BasicPilot) else np.asarray(p, dtype=complex)


def sfpcm_diagonal(a, b, phi_a: int = 0, phi_b: int = 0) -> np.ndarray:
    """Diagonal of ``R = D_{phi_a} S_a S_b^H D_{phi_b}^H``."""
    sa, sb = _seq(a), _seq(b)
    if sa.shape != sb.shape:
        raise ValueError(f"pilot length mismatch: {sa.shape} vs {sb.shape}")
    return dft_column(sa.size, phi_a - phi_b) * sa * sb.conj()


@dataclass(frozen=True, eq=False)
class Adpcm:
    """Circulant matrix ``[Z]_{i,j} = first_col[<i - j>_N]``.

    For a single-peak column (``structure == "cyclic_shift_scaled"``)
    ``offset`` and ``scale`` give the peak position and complex value, and
    ``pai`` its argument.  Otherwise those fields are ``None``.
    """

    first_col: np.ndarray
    structure: str = GENERAL_TOEPLITZ
    offset: int | None = None
    scale: complex | None = None
    pai: float | None = None

    @property
    def N(self) -> int:
        return self.first_col.size

    @property
    def first_row(self) -> np.ndarray:
        return self.first_col[(-np.arange(self.N)) % self.N]

    def to_dense(self) -> np.ndarray:
        i = np.arange(self.N)
        return self.first_col[(i[:, None] - i[None, :]) % self.N]

    def scaled(self, factor: float) -> "Adpcm":
        scale = None if self.scale is None else self.scale * factor
        return Adpcm(self.first_col * factor, self.structure, self.offset, scale, self.pai)

    def effective_block(self, delta_phi: int, N_g: int) -> np.ndarray:
        """``N_g x N_g`` block of ``Z Lambda^delta_phi`` that can reach the capture window.

        Entry ``[i, j]`` is ``first_col[<i - j + delta_phi>_N]``; only first-column
        entries within ``N_g`` of ``delta_phi`` ever appear.
        """
        i = np.arange(N_g)
        return self.first_col[(i[:, None] - i[None, :] + delta_phi) % self.N]


def classify_first_col(first_col: np.ndarray, rtol: float = 1e-9) -> Adpcm:
    """Tag a circulant first column as single-peak or general."""
    first_col = np.asarray(first_col, dtype=complex)
    mag = np.abs(first_col)
    k = int(np.argmax(mag))
    peak = mag[k]
    rest = np.delete(mag, k)
    if peak > 0 and (rest.size == 0 or rest.max() <= rtol * peak):
        return Adpcm(first_col, CYCLIC_SHIFT_SCALED, k, complex(first_col[k]),
                     float(np.angle(first_col[k])))
    return Adpcm(first_col, GENERAL_TOEPLITZ)


def adpcm_matrix_brute(sfpcm_diag) -> np.ndarray:
    """Dense ``(1/N) W^T diag(R) W*`` by explicit matrix products."""
    d = np.asarray(sfpcm_diag, dtype=complex)
    N = d.size
    W = dft_matrix(N)
    return (W.T * d[None, :]) @ W.conj() / N


def adpcm_brute(sfpcm_diag) -> Adpcm:
    """ADPCM from the dense triple product; raises if the result is not circulant."""
    Z = adpcm_matrix_brute(sfpcm_diag)
    col = Z[:, 0].copy()
    rebuilt = Adpcm(col).to_dense()
    err = np.max(np.abs(rebuilt - Z))
    if err > 1e-8 * max(1.0, np.max(np.abs(Z))):
        raise ArithmeticError(f"triple product is not circulant (max dev {err:.2e})")
    return classify_first_col(col)


def adpcm_fast(sfpcm_diag) -> Adpcm:
    """First column ``DFT(diag R)/N``; the first row is ``IDFT(diag R)``."""
    d = np.asarray(sfpcm_diag, dtype=complex)
    return classify_first_col(dft(d) / d.size)


def adpcm_first_row(sfpcm_diag) -> np.ndarray:
    return idft(np.asarray(sfpcm_diag, dtype=complex))


def zc_closed_form_applies(N_c: int, r: int, phi: int) -> bool:
    """Parity condition under which the two partial geometric sums combine."""
    return (r * (N_c - 2 * phi + 1)) % 2 == 0


def adpcm_zc_closed_form(N_c: int, r: int, phi: int) -> Adpcm:
    """Basic ADPCM of ``chi_{N_c,phi}^r`` against ``chi_{N_c,0}^r``.

    A single circulant offset ``<r*phi>`` carrying
    ``N_c * exp(-1j*pi*r*phi*(phi-1)/N_c)``.
    """
    if not zc_closed_form_applies(N_c, r, phi):
        raise ClosedFormInapplicable(
            f"closed form inapplicable: r*(N_c-2*phi+1) is odd for N_c={N_c}, r={r}, phi={phi}")
    offset = (r * phi) % N_c
    theta = -np.pi * ((r * phi * (phi - 1)) % (2 * N_c)) / N_c
    theta = float(np.angle(np.exp(1j * theta)))
    scale = N_c * np.exp(1j * theta)
    col = np.zeros(N_c, dtype=complex)
    col[offset] = scale
    return Adpcm(col, CYCLIC_SHIFT_SCALED, offset, complex(scale), theta)


def basic_adpcm(a, b) -> Adpcm:
    """Basic-pilot ADPCM ``W^T S_a S_b^H W*`` (no ``1/N_c``), tagged by structure."""
    d = sfpcm_diagonal(a, b)
    return adpcm_fast(d).scaled(d.size)


def interference_spectrum(a, b) -> np.ndarray:
    """``|DFT(diag(S_a S_b^H))/N_c|``: the profile plotted per pilot pair."""
    d = sfpcm_diagonal(a, b)
    return np.abs(dft(d)) / d.size


def interference_score(a, b) -> float:
    """Total pilot interference ``sum_i |DFT(diag R)/N_c|_i``; 1 for an ideal pair."""
    return float(interference_spectrum(a, b).sum())
