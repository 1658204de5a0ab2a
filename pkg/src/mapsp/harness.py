"""Seeded Monte Carlo sweeps of estimation and prediction error, a
spectral-efficiency proxy and CSV output."""

from __future__ import annotations

import csv
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np
import yaml

from .channel import (ChannelParams, ArgumentModel, evolve_channel,
                      generate_argument_model, generate_power_matrix,
                      realize_channel)
from .estimation import (aggregate_interference_power, mmse_error_theoretical,
                         mmse_estimate, predict_channel, prediction_error_theoretical,
                         preprocess)
from .scheduler import default_caps, schedule
from .transforms import SystemDims, ad_to_sf
from .uplink import UplinkScene, UtLink, ls_decorrelate, synthesize_received
from .zc import basic_adpcm, zc_sequence

CSV_COLUMNS = ["method", "Q", "K", "snr_db", "mse_emp", "mse_theory", "mse_bound",
               "se_proxy", "seed", "wall_ms"]
DATA_FRACTION = 6 / 7


class ConfigError(ValueError):
    """Invalid or unreadable experiment configuration."""


@dataclass
class ExperimentConfig:
    """Flat experiment description; every field maps to one config key.

    ``N_c`` defaults to 129 rather than a power of two: with an odd length
    every same-root ZC cyclic-shift pair has a single-peak ADPCM.

    ``mu_model`` sets the mean channel arguments: ``"common"`` draws one
    argument per trial shared by all UTs (plus per-element jitter),
    ``"random"`` draws one per UT, ``"aligned"`` fixes all at zero.  The
    inter-group cancellation needs the arguments of different UTs to be
    concentrated; under ``"random"`` the combined angle is uniform and
    the ``1/tan`` projection amplifies noise without bound.

    ``zc_shifts`` is ``"stagger"`` (inter-group offsets spaced ``N_c/Q``),
    ``"auto"`` (maximize the smallest ``|sin PAI|``) or an explicit list.
    """

    M: int = 16
    N_c: int = 129
    N_g: int = 16
    Q: list[int] = field(default_factory=lambda: [1, 2])
    K: list[int] = field(default_factory=lambda: [4, 8, 12])
    snr_db: list[float] = field(default_factory=lambda: [0.0, 10.0, 20.0, 30.0])
    trials: int = 50
    nu_Tsym: float = 0.0314
    sigma_bar_sq: float = 0.01
    upsilon: float = 1e-7
    taps: int | list[int] = 16
    span: int | list[int] = 16
    mu_model: str = "common"
    mu_jitter: float = 0.1
    magnitude: str = "rayleigh"
    zc_root: int = 1
    zc_shifts: list[int] | str = "stagger"
    preprocess: bool = True
    compare_raw: bool = False
    theta_weights: str = "power"
    delta_ell: list[int] = field(default_factory=lambda: [1, 2, 3])
    mode: str = "mse"
    se_subcarriers: int = 8
    seed: int = 0
    workers: int = 1
    out: str = "sweep.csv"

    def __post_init__(self):
        if not self.snr_db:
            raise ConfigError("snr_db must be nonempty")
        if self.trials < 1:
            raise ConfigError("trials must be >= 1")
        if not self.Q or min(self.Q) < 1:
            raise ConfigError("every Q must be >= 1")
        if self.mode not in ("mse", "prediction", "both"):
            raise ConfigError(f"mode must be mse, prediction or both, got {self.mode!r}")
        if self.mu_model not in ("random", "common", "aligned"):
            raise ConfigError(f"mu_model must be random, common or aligned, got {self.mu_model!r}")
        try:
            self.dims
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    @property
    def dims(self) -> SystemDims:
        return SystemDims(self.M, self.N_c, self.N_g)

    @property
    def channel_params(self) -> ChannelParams:
        as_t = lambda v: tuple(v) if isinstance(v, (list, tuple)) else v  # noqa: E731
        return ChannelParams(self.dims, self.nu_Tsym, self.sigma_bar_sq, as_t(self.taps),
                             as_t(self.span), mu_jitter=self.mu_jitter, seed=self.seed)

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(sorted(unknown))}")
        data = dict(data)
        for key in ("Q", "K", "snr_db", "delta_ell"):
            if key in data and not isinstance(data[key], list):
                data[key] = [data[key]]
        return cls(**data)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        """Read a flat YAML mapping; ``MAPSP_SEED`` overrides ``seed``."""
        try:
            with open(path, encoding="utf-8") as fh:
                data = yaml.safe_load(fh) or {}
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except yaml.YAMLError as exc:
            raise ConfigError(f"cannot parse config {path}: {exc}") from None
        if not isinstance(data, dict):
            raise ConfigError(f"config {path} must be a key-value mapping")
        env = os.environ.get("MAPSP_SEED")
        if env is not None:
            try:
                data["seed"] = int(env)
            except ValueError:
                raise ConfigError(f"MAPSP_SEED must be an integer, got {env!r}") from None
        return cls.from_mapping(data)


@dataclass
class SweepRow:
    method: str
    Q: int
    K: int
    snr_db: float
    mse_emp: float
    mse_theory: float
    mse_bound: float
    se_proxy: float
    seed: int
    wall_ms: float


# -- scene construction ------------------------------------------------------

def choose_group_shifts(N_c: int, Q: int, root: int = 1) -> list[int]:
    """Greedy ZC cyclic shifts per group maximizing the smallest ``|sin PAI|``."""
    shifts = [0]
    base = {0: zc_sequence(N_c, root, 0)}
    for _ in range(1, Q):
        best, best_val = None, -1.0
        for phi in range(1, N_c):
            if phi in shifts:
                continue
            s = zc_sequence(N_c, root, phi)
            val = min(abs(math.sin(_pai(s, base[p]))) for p in shifts)
            if val > best_val + 1e-12:
                best, best_val = phi, val
        shifts.append(best)
        base[best] = zc_sequence(N_c, root, best)
    return shifts


def stagger_group_shifts(N_c: int, Q: int, root: int = 1) -> list[int]:
    """ZC shifts whose inter-group offsets ``root*(phi_q - phi_0)`` are spaced ``N_c/Q`` apart.

    Groups filled from delay 0 upward then land in disjoint delay windows
    of each other's capture region while each holds at most ``N_c/(Q c)`` UTs.
    """
    inv = pow(root, -1, N_c)
    return [(round(q * N_c / Q) * inv) % N_c for q in range(Q)]


def _pai(a, b) -> float:
    Z = basic_adpcm(a, b)
    if Z.pai is None:
        return 0.0
    return Z.pai


def group_pilots(cfg: ExperimentConfig, Q: int):
    if cfg.zc_shifts == "auto":
        shifts = choose_group_shifts(cfg.N_c, Q, cfg.zc_root)
    elif cfg.zc_shifts == "stagger":
        shifts = stagger_group_shifts(cfg.N_c, Q, cfg.zc_root)
    else:
        shifts = list(cfg.zc_shifts)[:Q]
    if len(shifts) < Q:
        raise ConfigError(f"zc_shifts lists {len(shifts)} shifts for Q={Q}")
    return [zc_sequence(cfg.N_c, cfg.zc_root, int(s)) for s in shifts]


@dataclass
class Trial:
    powers: list[np.ndarray]
    args: list[ArgumentModel]
    channels: list[np.ndarray]


def draw_trial(cfg: ExperimentConfig, K: int, rng: np.random.Generator) -> Trial:
    params = cfg.channel_params
    powers = [generate_power_matrix(params, rng) for _ in range(K)]
    args = []
    mu0 = rng.uniform(0, 2 * np.pi) if cfg.mu_model == "common" else None
    for P in powers:
        if cfg.mu_model == "aligned":
            args.append(ArgumentModel(np.zeros_like(P), cfg.sigma_bar_sq))
        else:
            args.append(generate_argument_model(P, rng, cfg.sigma_bar_sq, cfg.mu_jitter, mu0))
    chans = [realize_channel(P, a, rng, cfg.magnitude) for P, a in zip(powers, args)]
    return Trial(powers, args, chans)


def build_scene(cfg: ExperimentConfig, trial: Trial, Q: int, rng: np.random.Generator,
                snr_db: float = math.inf) -> UplinkScene:
    res = schedule(trial.powers, Q, default_caps(len(trial.powers), Q), cfg.upsilon, rng,
                   N_c=cfg.N_c)
    uts = [UtLink(H, P, a, arg.mu) for H, P, a, arg in
           zip(trial.channels, trial.powers, res.assignments, trial.args)]
    return UplinkScene(cfg.dims, group_pilots(cfg, Q), uts, snr_to_noise(snr_db))


def snr_to_noise(snr_db: float) -> float:
    """``p_ntr`` for unit pilot power; infinite SNR gives a noiseless scene."""
    return 0.0 if math.isinf(snr_db) else 10 ** (-snr_db / 10)


def estimate_all(scene: UplinkScene, Y, *, use_preprocess: bool, sigma_bar_sq: float,
                 theta_weights: str = "power"):
    """Estimate every UT; returns ``(estimates, theoretical errors)``."""
    eta = scene.eta
    est, theory = [], []
    for t, ut in enumerate(scene.uts):
        a = ut.assignment
        Yk = ls_decorrelate(Y, a, scene.pilots[a.group], scene.dims)
        prof = aggregate_interference_power(scene, t, theta_weights)
        if use_preprocess and len(scene.pilots) > 1:
            Yk = preprocess(Yk, prof, sigma_bar_sq)
            prof = prof.intra_only()
        est.append(mmse_estimate(Yk, ut.P, prof, eta))
        theory.append(mmse_error_theoretical(ut.P, prof, eta))
    return est, theory


# -- spectral-efficiency proxy -----------------------------------------------

def se_proxy(estimates, true_channels, eta: float, dims: SystemDims, n_sub: int = 8,
             data_fraction: float = DATA_FRACTION) -> float:
    """Sum-rate proxy in bit/s/Hz.

    An MMSE combiner ``(sum_j g_j g_j^H + I/eta)^-1 g_k`` is built from the
    estimated space-frequency channels on ``n_sub`` evenly spaced
    subcarriers; SINR is evaluated against the true channels, averaged over
    subcarriers and scaled by ``data_fraction``.  A stand-in metric, not a
    frame-level spectral efficiency.
    """
    if not estimates:
        return 0.0
    sub = np.linspace(0, dims.N_c, n_sub, endpoint=False).astype(int)
    Gh = np.stack([ad_to_sf(H, dims)[:, sub] for H in estimates])      # K,M,S
    G = np.stack([ad_to_sf(H, dims)[:, sub] for H in true_channels])
    K = G.shape[0]
    noise = 0.0 if math.isinf(eta) else 1.0 / eta
    total = 0.0
    for s in range(sub.size):
        gh, g = Gh[:, :, s].T, G[:, :, s].T                                # M,K
        R = gh @ gh.conj().T + (noise if noise > 0 else 1e-12) * np.eye(dims.M)
        V = np.linalg.solve(R, gh)                                         # M,K
        C = np.abs(V.conj().T @ g) ** 2                                    # K,K: |v_k^H g_j|^2
        sig = np.diag(C)
        interf = C.sum(axis=1) - sig + noise * np.sum(np.abs(V) ** 2, axis=0)
        with np.errstate(divide="ignore", invalid="ignore"):
            sinr = np.where(sig > 0, sig / np.where(interf > 0, interf, np.inf), 0.0)
        total += float(np.log2(1 + sinr).sum())
    return data_fraction * total / sub.size


# -- sweeps --------------------------------------------------------------------

def trial_rng(seed: int, trial: int, *tags: int) -> np.random.Generator:
    """Per-trial stream from ``SeedSequence([seed, trial, *tags])``."""
    return np.random.default_rng(np.random.SeedSequence([seed, trial, *tags]))


def _methods(cfg: ExperimentConfig):
    for Q in cfg.Q:
        if Q == 1:
            yield "APSP", Q, False
        else:
            yield ("MAPSP" if cfg.preprocess else "MAPSP-raw"), Q, cfg.preprocess
            if cfg.preprocess and cfg.compare_raw:
                yield "MAPSP-raw", Q, False


def _mse_trial(job):
    cfg, K, t = job
    rng = trial_rng(cfg.seed, t, K)
    trial = draw_trial(cfg, K, rng)
    sched_seed = int(rng.integers(2 ** 63))
    noise_seed = int(rng.integers(2 ** 63))
    out = {}
    for name, Q, pre in _methods(cfg):
        t0 = time.perf_counter()
        scene = build_scene(cfg, trial, Q, np.random.default_rng([sched_seed, Q]))
        nrng = np.random.default_rng([noise_seed, Q])
        sig = [P.sum() for P in trial.powers]
        rows = []
        for snr in cfg.snr_db:
            scene.p_ntr = snr_to_noise(snr)
            Y = synthesize_received(scene, nrng)
            est, theory = estimate_all(scene, Y, use_preprocess=pre,
                                       sigma_bar_sq=cfg.sigma_bar_sq,
                                       theta_weights=cfg.theta_weights)
            eta = scene.eta
            emp = np.mean([np.sum(np.abs(e - H) ** 2) / s
                           for e, H, s in zip(est, trial.channels, sig)])
            th = np.mean([v / s for v, s in zip(theory, sig)])
            bd = np.mean([mmse_error_theoretical(P, P, eta) / s
                          for P, s in zip(trial.powers, sig)])
            se = se_proxy(est, trial.channels, eta, cfg.dims, cfg.se_subcarriers)
            rows.append((emp, th, bd, se))
        out[(name, Q)] = (np.array(rows), (time.perf_counter() - t0) * 1e3)
    return out


def _run(cfg: ExperimentConfig, worker, jobs):
    if cfg.workers > 1:
        with ProcessPoolExecutor(cfg.workers) as pool:
            return list(pool.map(worker, jobs, chunksize=max(1, len(jobs) // (4 * cfg.workers))))
    return [worker(j) for j in jobs]


def run_mse_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    """Estimation MSE, closed form, bound and SE proxy per (method, K, SNR).

    Every method sees the same channel draws within a trial, so the
    comparison between methods is paired.  Results do not depend on
    ``workers``.
    """
    rows = []
    for K in cfg.K:
        parts = _run(cfg, _mse_trial, [(cfg, K, t) for t in range(cfg.trials)])
        for name, Q, _ in _methods(cfg):
            acc = sum(p[(name, Q)][0] for p in parts) / len(parts)
            ms = sum(p[(name, Q)][1] for p in parts)
            for i, snr in enumerate(cfg.snr_db):
                emp, th, bd, se = acc[i]
                rows.append(SweepRow(name, Q, K, float(snr), float(emp), float(th),
                                     float(bd), float(se), cfg.seed, ms / len(cfg.snr_db)))
    return rows


def _pred_trial(job):
    cfg, K, t = job
    rng = trial_rng(cfg.seed, t, K, 1)
    trial = draw_trial(cfg, K, rng)
    sched_seed = int(rng.integers(2 ** 63))
    evo_seed = int(rng.integers(2 ** 63))
    noise_seed = int(rng.integers(2 ** 63))
    out = {}
    lags = [0] + [int(d) for d in cfg.delta_ell if d != 0]
    for name, Q, pre in _methods(cfg):
        t0 = time.perf_counter()
        scene = build_scene(cfg, trial, Q, np.random.default_rng([sched_seed, Q]))
        nrng = np.random.default_rng([noise_seed, Q])
        sig = [P.sum() for P in trial.powers]
        rows = {}
        for snr in cfg.snr_db:
            scene.p_ntr = snr_to_noise(snr)
            eta = scene.eta
            Y = synthesize_received(scene, nrng)
            for lag in lags:
                erng = np.random.default_rng([evo_seed, lag])
                truth = [evolve_channel(H, P, a, lag, cfg.nu_Tsym, erng)
                         for H, P, a in zip(trial.channels, trial.powers, trial.args)]
                emp = th = 0.0
                for k, ut in enumerate(scene.uts):
                    a = ut.assignment
                    Yk = ls_decorrelate(Y, a, scene.pilots[a.group], scene.dims)
                    prof = aggregate_interference_power(scene, k, cfg.theta_weights)
                    if pre and Q > 1:
                        Yk = preprocess(Yk, prof, cfg.sigma_bar_sq)
                        prof = prof.intra_only()
                    Hp = predict_channel(Yk, ut.P, prof, eta, lag, cfg.nu_Tsym)
                    emp += np.sum(np.abs(Hp - truth[k]) ** 2) / sig[k]
                    th += prediction_error_theoretical(ut.P, prof, eta, lag, cfg.nu_Tsym) / sig[k]
                bd = np.mean([mmse_error_theoretical(P, P, eta) / s
                              for P, s in zip(trial.powers, sig)])
                rows[(snr, lag)] = np.array([emp / K, th / K, bd, np.nan])
        out[(name, Q)] = (rows, (time.perf_counter() - t0) * 1e3)
    return out


def run_prediction_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    """Prediction MSE at each lag in ``delta_ell`` (plus lag 0) against evolved truth.

    Rows are labelled ``<method>@dl<lag>``; the SE column is NaN.
    """
    rows = []
    lags = [0] + [int(d) for d in cfg.delta_ell if d != 0]
    for K in cfg.K:
        parts = _run(cfg, _pred_trial, [(cfg, K, t) for t in range(cfg.trials)])
        for name, Q, _ in _methods(cfg):
            ms = sum(p[(name, Q)][1] for p in parts)
            for snr in cfg.snr_db:
                for lag in lags:
                    acc = sum(p[(name, Q)][0][(snr, lag)] for p in parts) / len(parts)
                    rows.append(SweepRow(f"{name}@dl{lag}", Q, K, float(snr), *map(float, acc),
                                         cfg.seed, ms / (len(cfg.snr_db) * len(lags))))
    return rows


def run_sweep(cfg: ExperimentConfig) -> list[SweepRow]:
    rows = []
    if cfg.mode in ("mse", "both"):
        rows += run_mse_sweep(cfg)
    if cfg.mode in ("prediction", "both"):
        rows += run_prediction_sweep(cfg)
    return rows


def emit_csv(results, path) -> Path:
    """Write rows with the fixed column order; header always present, UTF-8, LF."""
    path = Path(path)
    try:
        fh = open(path, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc.strerror}") from None
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in results:
            d = asdict(r) if not isinstance(r, dict) else r
            w.writerow([_fmt(d[c]) for c in CSV_COLUMNS])
    return path


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return v


def read_csv(path) -> list[dict]:
    """Parse a file written by :func:`emit_csv` back into typed rows."""
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        for rec in csv.DictReader(fh):
            row = {"method": rec["method"], "Q": int(rec["Q"]), "K": int(rec["K"]),
                   "seed": int(rec["seed"])}
            for c in ("snr_db", "mse_emp", "mse_theory", "mse_bound", "se_proxy", "wall_ms"):
                row[c] = float(rec[c])
            out.append(row)
    return out


def with_overrides(cfg: ExperimentConfig, **kw) -> ExperimentConfig:
    return replace(cfg, **kw)
