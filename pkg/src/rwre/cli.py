"""Command-line front end: rwre {simulate,estimate,classify,resample,reconstruct,fixture}."""
from __future__ import annotations

import argparse
import hashlib
import json
import os
import sys

from . import __version__
from .config import U64_MAX, RunConfig, load_config
from .errors import ConfigError, FormatError, NoObservations, RWREError
from .estimator import (
    EmpiricalClassification,
    ReportOracle,
    classification_from_report,
    classify_R_T_empirical,
    empirical_oracle,
    estimator_report,
    ingest,
)
from .fixtures import FIXTURES, run_fixture
from .reconstruction import reconstruct_from_oracle
from .resampler import extract_many
from .walker import atomic_write, format_trajectory, read_trajectory, simulate_quenched

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_IO = 3
EXIT_FIXTURE = 4


def _dump(obj) -> str:
    return json.dumps(obj, indent=2) + "\n"


def _sha256(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _write(out: str, name: str, data: str, written: list[str]) -> None:
    atomic_write(os.path.join(out, name), data)
    written.append(name)


def _provenance(command: str, cfg: RunConfig, written: list[str], inputs=()) -> str:
    return _dump({
        "command": command,
        "version": __version__,
        "seed": cfg.seed,
        "config": {k: v for k, v in cfg.to_dict().items() if k != "out"},
        "inputs": [{"path": p, "sha256": _sha256(p)} for p in inputs],
        "outputs": written,
    })


def _u64(text: str) -> int:
    try:
        v = int(text, 0)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if not 0 <= v <= U64_MAX:
        raise argparse.ArgumentTypeError("seed must be an unsigned 64-bit integer")
    return v


def _nonneg(text: str) -> int:
    v = int(text)
    if v < 0:
        raise argparse.ArgumentTypeError("must be >= 0")
    return v


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _config(args) -> RunConfig:
    base = load_config(args.config) if getattr(args, "config", None) else RunConfig()
    flags = {k: getattr(args, k, None) for k in
             ("seed", "steps", "out", "min_count", "degree", "replicas", "max_steps", "max_total")}
    cfg = base.updated(**flags)
    os.makedirs(cfg.out, exist_ok=True)
    return cfg


def _trajectory(path, cfg: RunConfig):
    return read_trajectory(path, cfg.jumpset)


def cmd_simulate(args) -> int:
    cfg = _config(args)
    law = cfg.environment_law()
    traj = simulate_quenched(law, cfg.seed, cfg.steps)
    written: list[str] = []
    _write(cfg.out, "trajectory.txt", format_trajectory(traj), written)
    _write(cfg.out, "provenance.json", _provenance("simulate", cfg, written), [])
    print(f"simulated {len(traj)} steps -> {os.path.join(cfg.out, 'trajectory.txt')}")
    return EXIT_OK


def cmd_estimate(args) -> int:
    cfg = _config(args)
    traj = _trajectory(args.trajectory, cfg)
    report = estimator_report(traj, min_count=cfg.min_count)
    written: list[str] = []
    _write(cfg.out, "report.json", _dump(report), written)
    _write(cfg.out, "provenance.json", _provenance("estimate", cfg, written, [args.trajectory]), [])
    cls = report["classification"]
    print(f"{len(report['histories'])} histories with count >= {cfg.min_count}; "
          f"R-hat={cls['R']} T-hat={cls['T']}")
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = _config(args)
    cls = classify_R_T_empirical(_trajectory(args.trajectory, cfg))
    record = {
        "R": [str(e) for e in cls.R],
        "T": [str(e) for e in cls.T],
        "evidence": {str(e): k for e, k in cls.evidence.items()},
    }
    written: list[str] = []
    _write(cfg.out, "classification.json", _dump(record), written)
    _write(cfg.out, "provenance.json", _provenance("classify", cfg, written, [args.trajectory]), [])
    print(f"R-hat={record['R']} T-hat={record['T']}")
    return EXIT_OK


def cmd_resample(args) -> int:
    cfg = _config(args)
    traj = _trajectory(args.trajectory, cfg)
    replicas = extract_many(traj, cfg.replicas, cfg.max_steps)
    written: list[str] = []
    summary = []
    for i, rep in enumerate(replicas, start=1):
        _write(cfg.out, f"replica-{i}.txt", format_trajectory(rep.trajectory), written)
        summary.append({"replica": i, "steps": len(rep), "truncated": rep.truncated,
                        "blocking": None if rep.blocking is None else str(rep.blocking)})
    _write(cfg.out, "replicas.json", _dump(summary), written)
    _write(cfg.out, "provenance.json", _provenance("resample", cfg, written, [args.trajectory]), [])
    for s in summary:
        print(f"replica {s['replica']}: {s['steps']} steps" + (" (truncated)" if s["truncated"] else ""))
    return EXIT_OK


class _ThresholdOracle:
    def __init__(self, oracle: ReportOracle, min_count: int):
        self.oracle = oracle
        self.min_count = min_count

    def __call__(self, n):
        rec = self.oracle.table.get(n)
        if rec is None or rec[1] < self.min_count:
            raise NoObservations(f"fewer than {self.min_count} observations at history {n}")
        return rec[0]


def cmd_reconstruct(args) -> int:
    cfg = _config(args)
    if args.input.endswith(".json"):
        with open(args.input) as fh:
            try:
                report = json.load(fh)
            except json.JSONDecodeError as exc:
                raise FormatError(f"{args.input}: not valid JSON ({exc})") from None
        try:
            oracle = _ThresholdOracle(ReportOracle(report), cfg.min_count)
            cls: EmpiricalClassification = classification_from_report(report)
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"{args.input}: not an estimator report ({exc})") from None
        jumps = oracle.oracle.jumpset
    else:
        traj = _trajectory(args.input, cfg)
        state = ingest(traj)
        oracle = empirical_oracle(state, cfg.min_count)
        cls = classify_R_T_empirical(traj)
        jumps = traj.jumpset
    max_total = cfg.max_total or cfg.degree
    rec = reconstruct_from_oracle(oracle, cls.R, cls.T, max_total, cfg.degree, cfg.grid_points(),
                                  jumps=jumps, fit_degree=cfg.fit_degree, path=cfg.moment_path)
    written: list[str] = []
    _write(cfg.out, "moments.csv", rec.moments.to_csv(), written)
    if rec.cdf is not None:
        _write(cfg.out, "cdf.csv", rec.cdf.to_csv(), written)
    verdict = {
        "verdict": rec.verdict,
        "R": [str(e) for e in cls.R],
        "T": [str(e) for e in cls.T],
        "variables": [str(v) for v in rec.variables],
        "complement": None if rec.complement is None else str(rec.complement),
        "degree": rec.degree,
        "moment_path": cfg.moment_path,
        "truncated": [str(n) for n in rec.moments.truncated],
        "notes": rec.notes,
    }
    _write(cfg.out, "reconstruction.json", _dump(verdict), written)
    _write(cfg.out, "provenance.json", _provenance("reconstruct", cfg, written, [args.input]), [])
    print(f"verdict: {rec.verdict}; {len(rec.moments)} moments" +
          (f"; CDF at {len(rec.cdf.values)} points, degree {rec.degree}" if rec.cdf else ""))
    for note in rec.notes:
        print(f"note: {note}")
    return EXIT_OK


def cmd_fixture(args) -> int:
    cfg = _config(args)
    steps = args.steps if args.steps is not None else 10**6
    res = run_fixture(args.name, steps, cfg.seed)
    written: list[str] = []
    _write(cfg.out, f"fixture-{args.name}.json", _dump(res.to_dict()), written)
    _write(cfg.out, "provenance.json", _provenance(f"fixture {args.name}", cfg, written), [])
    for c in res.checks:
        print(f"[{'PASS' if c.passed else 'FAIL'}] {c.name}: {c.detail}")
    print(f"{args.name}: {'PASS' if res.passed else 'FAIL'}")
    return EXIT_OK if res.passed else EXIT_FIXTURE


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="rwre", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, *extra):
        sp.add_argument("--config", help="JSON run config")
        sp.add_argument("--seed", type=_u64)
        sp.add_argument("--out", help="output directory")
        for name in extra:
            if name == "steps":
                sp.add_argument("--steps", type=_nonneg)
            elif name == "min-count":
                sp.add_argument("--min-count", type=_positive)
            elif name == "degree":
                sp.add_argument("--degree", type=_positive)
                sp.add_argument("--max-total", type=_positive)
            elif name == "replicas":
                sp.add_argument("--replicas", type=_positive)
                sp.add_argument("--max-steps", type=_nonneg)
        return sp

    s = common(sub.add_parser("simulate", help="simulate one annealed walk"), "steps")
    s.set_defaults(func=cmd_simulate)
    s = common(sub.add_parser("estimate", help="V-hat table, classification and diagnostics"), "min-count")
    s.add_argument("trajectory")
    s.set_defaults(func=cmd_estimate)
    s = common(sub.add_parser("classify", help="empirical R/T classification"))
    s.add_argument("trajectory")
    s.set_defaults(func=cmd_classify)
    s = common(sub.add_parser("resample", help="extract replica trajectories"), "replicas")
    s.add_argument("trajectory")
    s.set_defaults(func=cmd_resample)
    s = common(sub.add_parser("reconstruct", help="moment table and CDF grid"), "min-count", "degree")
    s.add_argument("input", help="trajectory file or estimator report (.json)")
    s.set_defaults(func=cmd_reconstruct)
    s = common(sub.add_parser("fixture", help="run a canned identifiability example"), "steps")
    s.add_argument("name", choices=FIXTURES)
    s.set_defaults(func=cmd_fixture)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, FormatError) as exc:
        print(f"rwre: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except OSError as exc:
        print(f"rwre: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except RWREError as exc:
        print(f"rwre: error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
