"""Command line front end.

Four subcommands: `count` runs the approximate counter on one script,
`baseline` enumerates it exactly, `bench` sweeps a generated corpus and
writes records plus cactus/accuracy tables, and `corpus` generates the
instances the bench consumes.  Results are emitted as one JSON record per
run so downstream tooling never parses log text.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import threading
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass
from pathlib import Path

from . import corpus
from .baseline import BaselineStatus, enumerate_count
from .counter import pact_count
from .errors import MalformedScript, OracleTimeout, PactError
from .hashing import Family
from .oracle import InMemoryOracle, SubprocessOracle
from .smtlib import (
    SmtScript,
    parse_declarations,
    projection_comment_names,
    read_projection_file,
    resolve_projection,
)

EXIT_OK = 0
EXIT_TIMEOUT = 2
EXIT_ERROR = 3

_TIMING_FIELDS = ("wall_time", "solver_time")


@dataclass(frozen=True)
class RunConfig:
    """Everything that determines one count/baseline run; echoed in records."""

    mode: str
    input: str
    project: str | None = None  # space/comma names, or @file
    epsilon: float = 0.8
    delta: float = 0.2
    family: str = "xor"
    seed: int | None = None
    solver_cmd: str | None = None  # None: $PACT_SOLVER_CMD, then built-in default
    timeout: float = 3600.0
    out: str | None = None


@dataclass(frozen=True)
class ResultRecord:
    instance: str
    mode: str
    status: str  # ok | timeout | error
    count: int | None
    seed: int | None
    wall_time: float
    solver_time: float
    check_sat_calls: int
    assertions_sent: int
    config: dict
    detail: str = ""

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "ResultRecord":
        return cls(**json.loads(line))

    def comparable(self) -> dict:
        """The record minus wall-clock fields, for determinism checks."""
        stripped = asdict(self)
        for name in _TIMING_FIELDS:
            stripped.pop(name)
        return stripped


def _projection_for(config: RunConfig, script: SmtScript):
    """--project wins, then a .proj sidecar, then a script comment."""
    if config.project:
        if config.project.startswith("@"):
            names = read_projection_file(config.project[1:])
        else:
            names = config.project.replace(",", " ").split()
        return resolve_projection(script, names)
    sidecar = Path(config.input).with_suffix(".proj")
    if sidecar.exists():
        return resolve_projection(script, read_projection_file(sidecar))
    names = projection_comment_names(script.text)
    if names:
        return resolve_projection(script, names)
    raise MalformedScript(
        "no projection given: pass --project, add a .proj sidecar, "
        "or a '; projected-vars:' comment in the script"
    )


def _solver_oracle(config: RunConfig, text: str, deadline: float) -> SubprocessOracle:
    return SubprocessOracle(
        config.solver_cmd,  # None falls through to the environment/default
        text,
        query_timeout=config.timeout,
        deadline=deadline,
    )


def _record(config: RunConfig, status: str, count, seed, stats, started, detail=""):
    return ResultRecord(
        instance=config.input,
        mode=config.mode,
        status=status,
        count=count,
        seed=seed,
        wall_time=time.monotonic() - started,
        solver_time=stats.solver_time if stats else 0.0,
        check_sat_calls=stats.check_sat_calls if stats else 0,
        assertions_sent=stats.assertions_sent if stats else 0,
        config=asdict(config),
        detail=detail,
    )


def run_count(config: RunConfig, oracle_factory=None) -> tuple[ResultRecord, int]:
    """Approximate count of one script.  `oracle_factory(script, projection)`
    overrides solver spawning, which keeps tests and the memory backend
    hermetic."""
    started = time.monotonic()
    deadline = started + config.timeout
    try:
        text = Path(config.input).read_text()
        script = parse_declarations(text)
        projection = _projection_for(config, script)
        if oracle_factory is None:
            oracle = _solver_oracle(config, text, deadline)
        else:
            oracle = oracle_factory(script, projection)
        with oracle:
            result = pact_count(
                oracle,
                projection,
                epsilon=config.epsilon,
                delta=config.delta,
                family=Family[config.family.upper()],
                seed=config.seed,
            )
        record = _record(
            config, "ok", result.estimate, result.seed, result.stats, started
        )
        return record, EXIT_OK
    except (OSError, PactError, ValueError) as exc:
        status = "timeout" if _is_timeout(exc) else "error"
        code = EXIT_TIMEOUT if status == "timeout" else EXIT_ERROR
        record = _record(
            config, status, None, config.seed, None, started, detail=str(exc)
        )
        return record, code


def run_baseline(config: RunConfig, oracle_factory=None) -> tuple[ResultRecord, int]:
    """Exact enumeration of one script; a partial count on timeout."""
    started = time.monotonic()
    deadline = started + config.timeout
    try:
        text = Path(config.input).read_text()
        script = parse_declarations(text)
        projection = _projection_for(config, script)
        if oracle_factory is None:
            oracle = _solver_oracle(config, text, deadline)
        else:
            oracle = oracle_factory(script, projection)
        with oracle:
            result = enumerate_count(oracle, projection, deadline=deadline)
        if result.status is BaselineStatus.TIMED_OUT:
            record = _record(
                config, "timeout", result.count, None, result.stats, started,
                detail="partial count, enumeration hit the time budget",
            )
            return record, EXIT_TIMEOUT
        record = _record(config, "ok", result.count, None, result.stats, started)
        return record, EXIT_OK
    except (OSError, PactError, ValueError) as exc:
        status = "timeout" if _is_timeout(exc) else "error"
        code = EXIT_TIMEOUT if status == "timeout" else EXIT_ERROR
        record = _record(config, status, None, None, None, started, detail=str(exc))
        return record, code


def _is_timeout(exc: BaseException) -> bool:
    return isinstance(exc, OracleTimeout)


@dataclass(frozen=True)
class BenchConfig:
    manifest: str
    out: str
    backend: str = "memory"  # memory | solver
    epsilon: float = 0.8
    delta: float = 0.2
    family: str = "xor"
    seed: int = 0
    solver_cmd: str | None = None
    timeout: float = 300.0  # per instance
    jobs: int = 1


@dataclass(frozen=True)
class BenchRow:
    name: str
    true_count: int
    record: ResultRecord

    @property
    def error_ratio(self) -> float:
        """max(true/est, est/true) - 1; infinite when either side is zero."""
        if self.record.count in (None, 0) or self.true_count == 0:
            return float("inf")
        est = self.record.count
        return max(self.true_count / est, est / self.true_count) - 1.0


def run_bench(config: BenchConfig, progress=None) -> tuple[list[BenchRow], int]:
    """Count every manifest instance, collecting per-instance records.

    Failures are recorded and the sweep continues; the exit code reflects
    the worst individual outcome.
    """
    if config.backend not in ("memory", "solver"):
        raise ValueError(f"unknown backend {config.backend!r}")
    entries = corpus.load_manifest(config.manifest)
    out_dir = Path(config.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    rows: list[BenchRow] = []
    lock = threading.Lock()

    def one(entry: corpus.ManifestEntry) -> None:
        inst = corpus.build(entry.spec)
        run_config = RunConfig(
            mode="count",
            input=str(entry.script_path),
            project=" ".join(inst.projection),
            epsilon=config.epsilon,
            delta=config.delta,
            family=config.family,
            seed=config.seed,
            solver_cmd=config.solver_cmd,
            timeout=config.timeout,
        )
        if config.backend == "memory":
            factory = lambda script, projection: InMemoryOracle(
                projection, inst.solutions
            )
            record, _ = run_count(run_config, oracle_factory=factory)
        else:
            record, _ = run_count(run_config)
        row = BenchRow(entry.spec.name, inst.true_count, record)
        with lock:
            rows.append(row)
            if progress:
                progress(row)

    with ThreadPoolExecutor(max_workers=max(1, config.jobs)) as pool:
        list(pool.map(one, entries))

    rows.sort(key=lambda r: r.name)
    _write_bench_tables(out_dir, rows)
    statuses = {row.record.status for row in rows}
    if "error" in statuses:
        return rows, EXIT_ERROR
    if "timeout" in statuses:
        return rows, EXIT_TIMEOUT
    return rows, EXIT_OK


def _write_bench_tables(out_dir: Path, rows: list[BenchRow]) -> None:
    with open(out_dir / "records.jsonl", "w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(row.record.to_json() + "\n")
    solved = sorted(
        (row.record.wall_time for row in rows if row.record.status == "ok")
    )
    with open(out_dir / "cactus.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["solved", "time"])
        for i, t in enumerate(solved, start=1):
            writer.writerow([i, f"{t:.6f}"])
    with open(out_dir / "accuracy.csv", "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "true_count", "estimate", "error_ratio"])
        for row in rows:
            if row.record.status != "ok":
                continue
            writer.writerow(
                [row.name, row.true_count, row.record.count, f"{row.error_ratio:.6f}"]
            )


def run_corpus(preset: str, seed: int, out: str) -> Path:
    specs = corpus.PRESETS[preset](seed)
    instances = [corpus.build(s) for s in specs]
    return corpus.write_corpus(instances, out)


def _emit(record: ResultRecord, out: str | None) -> None:
    line = record.to_json()
    print(line)
    if out:
        Path(out).parent.mkdir(parents=True, exist_ok=True)
        with open(out, "a", encoding="utf-8") as fh:
            fh.write(line + "\n")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="pact",
        description="Approximate projected model counting for SMT-LIB2 scripts.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def add_io(p):
        p.add_argument("input", help="SMT-LIB2 script")
        p.add_argument(
            "--project",
            help="projected variable names (space or comma separated), or @file",
        )
        p.add_argument("--solver-cmd", help="solver command line (default: $PACT_SOLVER_CMD)")
        p.add_argument("--timeout", type=float, default=3600.0, help="time budget in seconds")
        p.add_argument("--out", help="append the JSON record to this file")

    count = sub.add_parser("count", help="estimate the projected model count")
    add_io(count)
    count.add_argument("--epsilon", type=float, default=0.8, help="tolerance (default 0.8)")
    count.add_argument("--delta", type=float, default=0.2, help="confidence slack (default 0.2)")
    count.add_argument("--family", choices=("xor", "prime", "shift"), default="xor")
    count.add_argument("--seed", type=int, help="RNG seed (drawn fresh when omitted)")

    baseline = sub.add_parser("baseline", help="enumerate the exact count")
    add_io(baseline)

    bench = sub.add_parser("bench", help="run the counter over a corpus manifest")
    bench.add_argument("manifest", help="manifest.json produced by `pact corpus`")
    bench.add_argument("--backend", choices=("memory", "solver"), default="memory")
    bench.add_argument("--epsilon", type=float, default=0.8)
    bench.add_argument("--delta", type=float, default=0.2)
    bench.add_argument("--family", choices=("xor", "prime", "shift"), default="xor")
    bench.add_argument("--seed", type=int, default=0)
    bench.add_argument("--solver-cmd")
    bench.add_argument("--timeout", type=float, default=300.0, help="per-instance budget")
    bench.add_argument("--jobs", type=int, default=1)
    bench.add_argument("--out", default="pact-bench", help="output directory")

    gen = sub.add_parser("corpus", help="generate a benchmark corpus")
    gen.add_argument("--preset", choices=sorted(corpus.PRESETS), default="bench30")
    gen.add_argument("--seed", type=int, default=0)
    gen.add_argument("--out", default="pact-corpus", help="output directory")

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "count":
        config = RunConfig(
            mode="count",
            input=args.input,
            project=args.project,
            epsilon=args.epsilon,
            delta=args.delta,
            family=args.family,
            seed=args.seed,
            solver_cmd=args.solver_cmd,
            timeout=args.timeout,
            out=args.out,
        )
        record, code = run_count(config)
        _emit(record, args.out)
        return code
    if args.command == "baseline":
        config = RunConfig(
            mode="baseline",
            input=args.input,
            project=args.project,
            solver_cmd=args.solver_cmd,
            timeout=args.timeout,
            out=args.out,
        )
        record, code = run_baseline(config)
        _emit(record, args.out)
        return code
    if args.command == "bench":
        config = BenchConfig(
            manifest=args.manifest,
            out=args.out,
            backend=args.backend,
            epsilon=args.epsilon,
            delta=args.delta,
            family=args.family,
            seed=args.seed,
            solver_cmd=args.solver_cmd,
            timeout=args.timeout,
            jobs=args.jobs,
        )
        rows, code = run_bench(
            config,
            progress=lambda row: print(
                f"{row.name}: {row.record.status} "
                f"count={row.record.count} true={row.true_count} "
                f"({row.record.wall_time:.2f}s)",
                file=sys.stderr,
            ),
        )
        print(str(Path(config.out) / "records.jsonl"))
        return code
    manifest = run_corpus(args.preset, args.seed, args.out)
    print(str(manifest))
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
