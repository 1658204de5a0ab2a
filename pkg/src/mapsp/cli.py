"""Command-line entry point.

Every failure prints exactly one line to stderr of the form
``mapsp: error: <code>: <message>`` and exits nonzero; ``<code>`` is one of
``usage``, ``config``, ``io``, ``value`` or ``selftest``.
"""

from __future__ import annotations

import argparse
import csv
import sys

import numpy as np

from . import selftest
from .channel import generate_argument_model, generate_power_matrix, save_ensemble
from .harness import ConfigError, ExperimentConfig, emit_csv, run_sweep
from .scheduler import default_caps, schedule, write_schedule_csv
from .transforms import dft
from .zc import sfpcm_diagonal, zc_sequence

EXIT_CODES = {"usage": 2, "config": 3, "io": 4, "value": 5, "selftest": 6}


class CliError(Exception):
    def __init__(self, code: str, message: str):
        super().__init__(message)
        self.code = code


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise CliError("usage", message)


def _one_line(s: str) -> str:
    return " ".join(str(s).split())


def cmd_sweep(ns) -> int:
    cfg = ExperimentConfig.load(ns.config)
    if ns.out:
        cfg.out = ns.out
    rows = run_sweep(cfg)
    path = emit_csv(rows, cfg.out)
    print(f"wrote {len(rows)} rows to {path}")
    return 0


def cmd_profile(ns) -> int:
    """Write the normalized ADPCM magnitude profile of one pilot pair."""
    a = zc_sequence(ns.nc, ns.root_a, ns.shift_a)
    b = zc_sequence(ns.nc, ns.root_b, ns.shift_b)
    col = dft(sfpcm_diagonal(a, b)) / ns.nc
    mag = np.abs(col)
    try:
        fh = open(ns.out, "w", newline="", encoding="utf-8")
    except OSError as exc:
        raise CliError("io", f"cannot write {ns.out}: {exc.strerror}") from None
    with fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["offset", "magnitude", "real", "imag"])
        for i, (m, c) in enumerate(zip(mag, col)):
            w.writerow([i, repr(float(m)), repr(float(c.real)), repr(float(c.imag))])
    peak = int(np.argmax(mag))
    print(f"score={mag.sum():.6f} peak_offset={peak} peak_magnitude={mag[peak]:.6f}")
    return 0


def cmd_schedule(ns) -> int:
    cfg = ExperimentConfig.load(ns.config)
    K = ns.K if ns.K is not None else cfg.K[0]
    Q = ns.Q if ns.Q is not None else cfg.Q[-1]
    rng = np.random.default_rng(np.random.SeedSequence([cfg.seed, K, Q]))
    params = cfg.channel_params
    powers = [generate_power_matrix(params, rng) for _ in range(K)]
    res = schedule(powers, Q, default_caps(K, Q), cfg.upsilon, rng, N_c=cfg.N_c)
    write_schedule_csv(res, ns.out)
    if ns.ensemble:
        args = [generate_argument_model(P, rng, cfg.sigma_bar_sq, cfg.mu_jitter) for P in powers]
        save_ensemble(ns.ensemble, powers, args, cfg.dims)
    print(f"scheduled {K} UTs into {Q} groups; total_overlap={res.total_overlap(powers):.6g} "
          f"iterations={res.iterations}")
    return 0


def cmd_selftest(ns) -> int:
    res = selftest.run(ns.seed)
    failed = [k for k, ok in res.items() if not ok]
    for k, ok in res.items():
        print(f"{'PASS' if ok else 'FAIL'} {k}")
    if failed:
        raise CliError("selftest", "failed checks: " + ",".join(failed))
    return 0


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="mapsp", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    s = sub.add_parser("sweep", help="run a Monte Carlo sweep and write CSV")
    s.add_argument("--config", required=True)
    s.add_argument("--out", help="override the output path from the config")
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("profile", help="pilot-pair interference profile as CSV")
    s.add_argument("--nc", type=int, required=True)
    s.add_argument("--root-a", type=int, required=True)
    s.add_argument("--shift-a", type=int, default=0)
    s.add_argument("--root-b", type=int, required=True)
    s.add_argument("--shift-b", type=int, default=0)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_profile)

    s = sub.add_parser("schedule", help="draw a channel ensemble and schedule it")
    s.add_argument("--config", required=True)
    s.add_argument("--out", required=True)
    s.add_argument("--K", type=int)
    s.add_argument("--Q", type=int)
    s.add_argument("--ensemble", help="also save the ensemble as <prefix>.npz/.csv")
    s.set_defaults(func=cmd_schedule)

    s = sub.add_parser("selftest", help="run the built-in oracle checks")
    s.add_argument("--seed", type=int, default=0)
    s.set_defaults(func=cmd_selftest)
    return p


def main(argv=None) -> int:
    try:
        ns = build_parser().parse_args(argv)
        return ns.func(ns)
    except CliError as exc:
        code, msg = exc.code, str(exc)
    except ConfigError as exc:
        code, msg = "config", str(exc)
    except OSError as exc:
        code, msg = "io", str(exc)
    except (ValueError, ArithmeticError) as exc:
        code, msg = "value", str(exc)
    print(f"mapsp: error: {code}: {_one_line(msg)}", file=sys.stderr)
    return EXIT_CODES[code]


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
