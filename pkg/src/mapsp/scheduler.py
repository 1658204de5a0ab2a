"""Dual-layer pilot scheduling: group assignment plus intra-group phase shift
with an adjustable early-exit threshold."""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .transforms import cyclic_shift_right, zero_pad
from .zc import PilotAssignment

DEFAULT_UPSILON = 1e-7


def overlap_metric(P_k, phi: int, p_sigma) -> float:
    """``sum(pad(P_k) Lambda^phi (.) P_Sigma)``; ``p_sigma`` is ``M x N_c``."""
    p_sigma = np.asarray(p_sigma, dtype=float)
    Pk = zero_pad(np.asarray(P_k, dtype=float), p_sigma.shape[-1])
    return float((cyclic_shift_right(Pk, phi) * p_sigma).sum())


def overlap_all_shifts(P_k, p_sigma) -> np.ndarray:
    """:func:`overlap_metric` for every ``phi = 0..N_c-1`` at once.

    Exact sums over the nonzero delay columns of ``P_k`` (no FFT), so a
    disjoint placement scores exactly zero.
    """
    P_k = np.asarray(P_k, dtype=float)
    p_sigma = np.asarray(p_sigma, dtype=float)
    N = p_sigma.shape[-1]
    cols = np.flatnonzero(P_k.any(axis=0))
    if cols.size == 0:
        return np.zeros(N)
    idx = (cols[:, None] + np.arange(N)[None, :]) % N
    return np.einsum("mc,mcn->n", P_k[:, cols], p_sigma[:, idx])


def threshold_value(P_k, phi: int, p_sigma, upsilon: float) -> float:
    """``upsilon * sqrt(sum P_k * sum P_Sigma)``; ``phi`` does not change the sum."""
    return upsilon * math.sqrt(float(np.sum(P_k)) * float(np.sum(p_sigma)))


@dataclass
class ScheduleState:
    """Per-group superposition ``P_Sigma^q`` (``M x N_c``) and member lists."""

    p_sigma: np.ndarray
    members: list[list[tuple[int, int]]]
    caps: list[int]
    upsilon: float

    @classmethod
    def empty(cls, M: int, N_c: int, caps, upsilon: float) -> "ScheduleState":
        Q = len(caps)
        return cls(np.zeros((Q, M, N_c)), [[] for _ in range(Q)], list(caps), upsilon)

    def add(self, q: int, ut: int, P_k, phi: int):
        N_c = self.p_sigma.shape[-1]
        self.p_sigma[q] += cyclic_shift_right(zero_pad(P_k, N_c), phi)
        self.members[q].append((ut, phi))

    def recompute(self, powers) -> np.ndarray:
        """From-scratch superposition, for checking the incremental update."""
        out = np.zeros_like(self.p_sigma)
        N_c = out.shape[-1]
        for q, mem in enumerate(self.members):
            for ut, phi in mem:
                out[q] += cyclic_shift_right(zero_pad(powers[ut], N_c), phi)
        return out

    def full(self, q: int) -> bool:
        return len(self.members[q]) >= self.caps[q]


@dataclass
class ScheduleResult:
    """Assignments in input order plus per-UT diagnostics.

    ``gamma[k]`` is the overlap at which UT ``k`` was placed and
    ``scans[k]`` lists the shift-scan length spent on each candidate group
    (empty for the seeding UTs).
    """

    assignments: list[PilotAssignment]
    gamma: np.ndarray
    scans: list[list[int]]
    state: ScheduleState
    order: list[int] = field(default_factory=list)

    @property
    def iterations(self) -> int:
        return int(sum(sum(s) for s in self.scans))

    @property
    def mean_scan(self) -> float:
        flat = [n for s in self.scans for n in s]
        return float(np.mean(flat)) if flat else 0.0

    def total_overlap(self, powers) -> float:
        """Sum over groups of pairwise overlaps among members."""
        N_c = self.state.p_sigma.shape[-1]
        tot = 0.0
        for mem in self.state.members:
            padded = [cyclic_shift_right(zero_pad(powers[u], N_c), phi) for u, phi in mem]
            for a in range(len(padded)):
                for b in range(a + 1, len(padded)):
                    tot += float((padded[a] * padded[b]).sum())
        return tot


def default_caps(K: int, Q: int) -> list[int]:
    return [math.ceil(K / Q)] * Q


def scan_shifts(P_k, p_sigma, upsilon: float, exhaustive: bool = False) -> tuple[int, float, int]:
    """Intra-group shift scan for one UT against one group.

    Returns ``(phi, gamma, n_scanned)``: the first shift whose overlap is
    within the threshold, or the first minimizer after a full scan, in
    which case ``n_scanned == N_c``.
    """
    gam = overlap_all_shifts(P_k, p_sigma)
    N = gam.size
    if not exhaustive:
        thr = threshold_value(P_k, 0, p_sigma, upsilon)
        ok = np.flatnonzero(gam <= thr)
        if ok.size:
            phi = int(ok[0])
            return phi, float(gam[phi]), phi + 1
    phi = int(np.argmin(gam))
    return phi, float(gam[phi]), N


def schedule(powers, Q: int, caps=None, upsilon: float = DEFAULT_UPSILON,
             rng: np.random.Generator | None = None, *, N_c: int | None = None,
             exhaustive: bool = False) -> ScheduleResult:
    """Assign every UT a ``(group, shift)`` pair.

    The first ``Q`` UTs seed one group each at shift 0.  The rest are
    visited in random order; for each, every non-full group is scanned over
    shifts until the overlap drops to the threshold (or all ``N_c`` shifts
    are tried, keeping the first minimum), and the UT joins the group with
    the smallest resulting overlap, lowest index on ties.

    Parameters
    ----------
    powers : sequence of ndarray
        ``M x N_g`` power matrices.
    Q : int
        Number of pilot groups.
    caps : sequence of int, optional
        Per-group member limits; default ``ceil(K/Q)`` each.
    upsilon : float
        Relative early-exit threshold.
    N_c : int
        Number of available shifts; required.
    exhaustive : bool
        Scan all shifts and keep the minimum (greedy baseline).
    """
    if N_c is None:
        raise ValueError("N_c is required")
    powers = [np.asarray(P, dtype=float) for P in powers]
    K = len(powers)
    if Q < 1:
        raise ValueError("need at least one group")
    caps = default_caps(K, Q) if caps is None else list(caps)
    if len(caps) != Q:
        raise ValueError(f"expected {Q} group caps, got {len(caps)}")
    if sum(caps) < K or min(caps[:min(Q, K)], default=1) < 1:
        raise ValueError(f"group caps {caps} cannot hold {K} UTs")
    rng = np.random.default_rng() if rng is None else rng
    M = powers[0].shape[0] if powers else 1
    state = ScheduleState.empty(M, N_c, caps, upsilon)
    assign: list[PilotAssignment | None] = [None] * K
    gamma = np.zeros(K)
    scans: list[list[int]] = [[] for _ in range(K)]

    n_seed = min(Q, K)
    for q in range(n_seed):
        state.add(q, q, powers[q], 0)
        assign[q] = PilotAssignment(q, 0)
    order = [int(i) + n_seed for i in rng.permutation(K - n_seed)]

    for k in order:
        best = (math.inf, -1, 0)
        for q in range(Q):
            if state.full(q):
                continue
            phi, g, n = scan_shifts(powers[k], state.p_sigma[q], upsilon, exhaustive)
            scans[k].append(n)
            if g < best[0]:
                best = (g, q, phi)
        g, q, phi = best
        if q < 0:
            raise ValueError(f"every group is full before UT {k}")
        state.add(q, k, powers[k], phi)
        assign[k] = PilotAssignment(q, phi)
        gamma[k] = g
    return ScheduleResult(assign, gamma, scans, state, order)


def schedule_greedy_exhaustive(powers, Q: int, caps=None, rng=None, *, N_c: int) -> ScheduleResult:
    """Full-scan baseline: every candidate shift is tried for every group."""
    return schedule(powers, Q, caps, 0.0, rng, N_c=N_c, exhaustive=True)


def write_schedule_csv(result: ScheduleResult, path) -> Path:
    """Columns ``ut_id,group,shift,gamma``; LF line endings."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["ut_id", "group", "shift", "gamma"])
        for k, (a, g) in enumerate(zip(result.assignments, result.gamma)):
            w.writerow([k, a.group, a.shift, repr(float(g))])
    return path
