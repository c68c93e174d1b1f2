"""Command-line interface: simulate, evaluate, verify, adversary, tomography.

Exit codes are a stable contract: 0 success, 1 negative scientific result
(no violation / failed audit), 2 input error, 3 I/O failure. All output
files are written atomically (temp file + rename) and every command records
a manifest sufficient to reproduce its outputs exactly.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import __version__, adversary, tomography
from .config import SessionConfig, load_config
from .errors import SteersimError
from .events import EventLog
from .model import SETTINGS, AnalyzerModel
from .protocol import run_session
from .spacetime import audit_session
from .steering import CountTally, alice_efficiency, steering_value, visibility_estimate

EXIT_OK = 0
EXIT_NEGATIVE = 1
EXIT_INPUT = 2
EXIT_IO = 3


def _say(args, message: str) -> None:
    if not getattr(args, "quiet", False):
        print(message)


def _atomic_write(path: Path, writer) -> None:
    """Write via a sibling temp file and rename into place."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=str(path.parent), prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w") as fh:
            writer(fh)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _write_json(path: Path, payload: dict) -> None:
    _atomic_write(path, lambda fh: json.dump(payload, fh, indent=2))


def _sha256(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _input_manifest(command: str, path: Path, **params) -> dict:
    return {
        "command": command,
        "version": __version__,
        "input": {"path": str(path), "sha256": _sha256(path)},
        "parameters": params,
    }


# --- simulate ---------------------------------------------------------------

def cmd_simulate(args) -> int:
    try:
        config = load_config(args.config)
    except SteersimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    if args.seed is not None:
        config = dataclasses.replace(config, seed=args.seed)
    out_dir = Path(args.output_dir) if args.output_dir else config.output_dir
    if out_dir is None:
        print("error: no output directory (config output_dir or --output-dir)", file=sys.stderr)
        return EXIT_INPUT

    try:
        log, tally, trials = run_session(
            config.timing,
            config.noise,
            config.strategy,
            config.n_trials,
            config.seed,
            include_events=config.write_events,
        )
    except SteersimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    try:
        out_dir.mkdir(parents=True, exist_ok=True)
        outputs = []
        if config.write_events:
            _atomic_write(out_dir / "events.jsonl", log.write_jsonl)
            outputs.append("events.jsonl")
        _atomic_write(out_dir / "trials.jsonl", trials.write_jsonl)
        outputs.append("trials.jsonl")
        # tally CSV goes through a temp path for atomicity
        tmp_csv = out_dir / ".tally.csv.tmp"
        tally.write_csv(tmp_csv)
        os.replace(tmp_csv, out_dir / "tally.csv")
        outputs.append("tally.csv")
        manifest = {
            "command": "simulate",
            "version": __version__,
            "seed": config.seed,
            "config": {**config.echo(), "output_dir": str(out_dir)},
            "outputs": outputs,
        }
        _write_json(out_dir / "manifest.json", manifest)
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    _say(args, f"wrote {', '.join(outputs + ['manifest.json'])} to {out_dir}")
    return EXIT_OK


# --- evaluate ---------------------------------------------------------------

def _format_report(tally: CountTally, result) -> str:
    header = f"{'':<24}" + "".join(f"{s.name + ' basis':>14}" for s in SETTINGS)
    eff = f"{'arm efficiency':<24}"
    vis = f"{'visibility estimate':<24}"
    tvals = f"{'T_i':<24}"
    for s in SETTINGS:
        eff += f"{alice_efficiency(tally, s):>14.4f}"
        v = visibility_estimate(tally, s)
        vis += f"{v:>14.4f}" if v is not None else f"{'n/a':>14}"
        t_str = f"{result.t[s]:.4f}"
        if result.sigma_t is not None:
            t_str += f" ± {result.sigma_t[s]:.4f}"
        tvals += f"{t_str:>14}"
    s_line = f"{'steering value S':<24}{result.s:.6f}"
    if result.sigma_s is not None:
        s_line += f" ± {result.sigma_s:.6f}"
    return "\n".join([header, eff, vis, tvals, s_line])


def cmd_evaluate(args) -> int:
    path = Path(args.input)
    if not path.exists():
        print(f"error: no such file: {path}", file=sys.stderr)
        return EXIT_INPUT
    try:
        if path.suffix == ".jsonl":
            tally = CountTally.read_trials_jsonl(path)
        else:
            tally = CountTally.read_csv(path)
        rng = np.random.default_rng(args.seed if args.seed is not None else 0)
        result = steering_value(tally, n_resamples=args.resamples, rng=rng)
    except SteersimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT

    _say(args, _format_report(tally, result))
    violation = result.sigma_s is not None and result.s - 3.0 * result.sigma_s > 1.0
    if violation:
        _say(args, "VIOLATION: S - 3 sigma > 1, local-hidden-state models excluded")

    payload = {
        **result.to_json(),
        "violation": violation,
        "manifest": _input_manifest(
            "evaluate", path, resamples=args.resamples, seed=args.seed if args.seed is not None else 0
        ),
    }
    json_path = Path(args.json) if args.json else path.with_suffix(path.suffix + ".steering.json")
    try:
        _write_json(json_path, payload)
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    if result.s <= 1.0:
        _say(args, f"S = {result.s:.6f} <= 1: no violation")
        return EXIT_NEGATIVE
    return EXIT_OK


# --- verify -----------------------------------------------------------------

def cmd_verify(args) -> int:
    path = Path(args.events)
    if not path.exists():
        print(f"error: no such file: {path}", file=sys.stderr)
        return EXIT_INPUT
    try:
        log = EventLog.read_jsonl(path)
        report = audit_session(log)
    except SteersimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _say(args, report.summary())
    if args.json:
        payload = {**report.to_json(), "manifest": _input_manifest("verify", path)}
        try:
            _write_json(Path(args.json), payload)
        except OSError as exc:
            print(f"error: I/O failure: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK if report.overall_pass else EXIT_NEGATIVE


# --- adversary ---------------------------------------------------------------

def cmd_adversary(args) -> int:
    try:
        if args.ideal:
            analyzer = AnalyzerModel.ideal()
        else:
            with open(args.analyzer) as fh:
                analyzer = AnalyzerModel.from_json(json.load(fh))
        cfg = adversary.OptimizerConfig(grid_step_deg=args.grid_step)
        result = adversary.max_cheat_value(analyzer, cfg)
    except FileNotFoundError:
        print(f"error: no such file: {args.analyzer}", file=sys.stderr)
        return EXIT_INPUT
    except (SteersimError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    _say(args, f"s_max = {result.s_max:.6f}")
    _say(args, "argmax bloch = ({:+.6f}, {:+.6f}, {:+.6f})".format(*result.argmax_bloch))
    _say(
        args,
        f"certificate: grid best {result.certificate.grid_best:.6f} "
        f"(step {result.certificate.grid_step_deg} deg), gap {result.certificate.gap:.2e}, "
        f"gap bound {result.certificate.gap_bound:.2e}, evals {result.optimizer_evals}",
    )
    if not result.converged:
        _say(args, "warning: refinement did not converge; best-so-far reported")
    if args.json:
        source = "ideal" if args.ideal else str(args.analyzer)
        payload = {
            **result.to_json(),
            "manifest": {
                "command": "adversary",
                "version": __version__,
                "input": source,
                "parameters": {"grid_step_deg": args.grid_step},
            },
        }
        try:
            _write_json(Path(args.json), payload)
        except OSError as exc:
            print(f"error: I/O failure: {exc}", file=sys.stderr)
            return EXIT_IO
    return EXIT_OK


# --- tomography ---------------------------------------------------------------

def cmd_tomography(args) -> int:
    path = Path(args.counts)
    if not path.exists():
        print(f"error: no such file: {path}", file=sys.stderr)
        return EXIT_INPUT
    try:
        counts = tomography.read_counts_csv(path)
        result = tomography.reconstruct_analyzer(counts)
        deviation = tomography.mub_deviation(result.analyzer)
    except SteersimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    out_path = Path(args.output) if args.output else path.with_suffix(".analyzer.json")
    payload = {
        **result.analyzer.to_json(),
        "manifest": _input_manifest("tomography", path),
    }
    try:
        _write_json(out_path, payload)
    except OSError as exc:
        print(f"error: I/O failure: {exc}", file=sys.stderr)
        return EXIT_IO
    _say(args, f"wrote reconstructed analyzer to {out_path}")
    _say(args, f"mutual-unbiasedness deviation: {deviation:.6f}")
    for s in SETTINGS:
        plus = tomography.purity(result.analyzer.effect_plus(s))
        minus = tomography.purity(result.analyzer.effect_minus(s))
        _say(args, f"purity {s.name}: plus {plus:.6f}, minus {minus:.6f}")
    if not result.converged:
        _say(args, "warning: reconstruction did not fully converge; best-so-far written")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="steersim",
        description="Simulate and certify a loophole-free two-party steering experiment.",
    )
    parser.add_argument("--version", action="version", version=f"steersim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="run a configured session and persist its outputs")
    p.add_argument("--config", required=True, help="session config JSON")
    p.add_argument("--output-dir", default=None, help="override the config output_dir")
    p.add_argument("--seed", type=int, default=None, help="override the config seed")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("evaluate", help="steering value from a tally CSV or trials JSONL")
    p.add_argument("input", help="tally.csv or trials.jsonl")
    p.add_argument("--resamples", type=int, default=1000, help="Monte-Carlo error replicas")
    p.add_argument("--seed", type=int, default=None, help="resampling seed (default 0)")
    p.add_argument("--json", default=None, help="result JSON path")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("verify", help="audit an event log for loophole closure")
    p.add_argument("events", help="events.jsonl")
    p.add_argument("--json", default=None, help="report JSON path")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("adversary", help="optimal local-hidden-state cheating value")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--ideal", action="store_true", help="use the ideal analyzer")
    group.add_argument("--analyzer", default=None, help="analyzer operator JSON")
    p.add_argument("--grid-step", type=float, default=1.0, help="coarse grid step in degrees")
    p.add_argument("--json", default=None, help="result JSON path")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_adversary)

    p = sub.add_parser("tomography", help="reconstruct an analyzer from probe counts")
    p.add_argument("counts", help="counts CSV (setting, probe_label, outcome, count)")
    p.add_argument("--output", default=None, help="analyzer JSON path")
    p.add_argument("--quiet", action="store_true")
    p.set_defaults(func=cmd_tomography)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
