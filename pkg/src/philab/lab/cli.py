"""Command line entry point.

::

    philab run <config> [--out DIR] [--seed N] [--p-sweep LIST] [--h REAL]
    philab verify [--out DIR] [--seed N] [--only NAME ...] [--check-determinism]

``run`` writes the experiment's CSV files and ``verdict.txt`` into the
output directory. ``verify`` runs every shipped acceptance config, each into
its own subdirectory, and writes a combined ``verdict.txt``. Exit status is
0 when every verdict passes, 1 when one fails and 2 on a configuration
error.
"""

from __future__ import annotations

import argparse
import os
import sys
import tempfile
import time
from importlib import resources

from .config import ConfigError, load_config, parse_config
from .experiments import ExperimentResult, run_experiment

__all__ = ["ACCEPTANCE", "acceptance_config", "apply_overrides", "verify", "main"]

# shipped configs in the order verify runs them
ACCEPTANCE = (
    "structure_audit",
    "inequality_fuzz",
    "gamma_energy",
    "gamma_blowup",
    "gamma_variable",
    "gamma_variable_blowup",
    "limit_constant",
    "limit_variable",
    "eps_sandwich",
    "subdomain",
    "poincare_jump",
)


def acceptance_config(name):
    """Text of a shipped config."""
    return resources.files("philab.lab").joinpath("configs", name + ".cfg").read_text(encoding="utf-8")


def _reals(text):
    try:
        vals = [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None
    if not vals:
        raise argparse.ArgumentTypeError("empty list")
    return vals


def _fraction(text):
    try:
        if "/" in text:
            a, b = text.split("/", 1)
            return float(a) / float(b)
        return float(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a number, got {text!r}") from None


def apply_overrides(cfg, seed=None, p_sweep=None, h=None, out=None):
    if seed is not None:
        cfg.seed = seed
    if p_sweep is not None:
        cfg.p_sweep = list(p_sweep)
    if h is not None:
        cfg.h, cfg.n = h, None
    if out is not None:
        cfg.out = out
    return cfg.validate()


def _run_one(cfg, out_dir, log):
    t0 = time.perf_counter()
    result = run_experiment(cfg)
    result.write(out_dir)
    result.seconds = time.perf_counter() - t0
    log(f"{cfg.experiment}: {result.seconds:.1f} s -> {out_dir}")
    return result


def _csv_bytes(root):
    out = {}
    for dirpath, _, files in os.walk(root):
        for f in files:
            if f.endswith(".csv"):
                path = os.path.join(dirpath, f)
                with open(path, "rb") as fh:
                    out[os.path.relpath(path, root)] = fh.read()
    return out


def verify(out_dir, seed=0, only=None, check_determinism=False, log=print):
    """Run the acceptance configs; returns the combined :class:`ExperimentResult`.

    Wall-clock seconds per config land in ``timings`` on the result and in
    ``timings.txt``, kept out of the CSVs so determinism checks stay exact.
    """
    names = [n for n in ACCEPTANCE if not only or n in only]
    unknown = set(only or ()) - set(ACCEPTANCE)
    if unknown:
        raise ConfigError(f"unknown acceptance config {sorted(unknown)[0]!r}")
    total = ExperimentResult("verify")

    def sweep(root):
        for name in names:
            cfg = apply_overrides(parse_config(acceptance_config(name)), seed=seed)
            r = _run_one(cfg, os.path.join(root, name), log)
            if root == out_dir:
                total.verdicts.extend(r.verdicts)
                total.timings[name] = r.seconds
                total.timings.update((f"{name}:{k}", v) for k, v in r.timings.items())

    sweep(out_dir)
    if check_determinism:
        with tempfile.TemporaryDirectory() as tmp:
            sweep(tmp)
            first, second = _csv_bytes(out_dir), _csv_bytes(tmp)
        differing = sorted(k for k in first.keys() | second.keys() if first.get(k) != second.get(k))
        for k in differing:
            log(f"differs between runs: {k}")
        total.check("C13.identical_csv", not differing, len(differing), 0)
    with open(os.path.join(out_dir, "verdict.txt"), "w", newline="", encoding="utf-8") as fh:
        fh.write(total.verdict_text())
    with open(os.path.join(out_dir, "timings.txt"), "w", newline="", encoding="utf-8") as fh:
        fh.writelines(f"{k} {v:.3f}\n" for k, v in total.timings.items())
    return total


def _parser():
    ap = argparse.ArgumentParser(prog="philab", description="Φ-Laplacian experiment lab")
    sub = ap.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one experiment config")
    run.add_argument("config")
    run.add_argument("--out", help="output directory (default: config 'out' or ./philab_out)")
    run.add_argument("--seed", type=int)
    run.add_argument("--p-sweep", type=_reals, help="comma-separated p values")
    run.add_argument("--h", type=_fraction, help="grid spacing, e.g. 1/32")
    ver = sub.add_parser("verify", help="run the full acceptance suite")
    ver.add_argument("--out", default="philab_verify")
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--only", nargs="+", metavar="NAME", help="subset of: " + ", ".join(ACCEPTANCE))
    ver.add_argument("--check-determinism", action="store_true",
                     help="run everything twice and compare CSV bytes")
    return ap


def main(argv=None):
    args = _parser().parse_args(argv)
    log = lambda msg: print(msg, file=sys.stderr)
    try:
        if args.command == "run":
            cfg = load_config(args.config)
            apply_overrides(cfg, args.seed, args.p_sweep, args.h, args.out)
            result = _run_one(cfg, cfg.out or "philab_out", log)
        else:
            result = verify(args.out, args.seed, args.only, args.check_determinism, log)
    except ConfigError as exc:
        print(f"philab: config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"philab: {exc}", file=sys.stderr)
        return 2
    sys.stdout.write(result.verdict_text())
    return 0 if result.passed else 1


if __name__ == "__main__":
    sys.exit(main())
