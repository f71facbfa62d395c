"""Command-line front end: run, record, replay, and verify simulations.

Exit codes: 0 = all monitors passed, 1 = a monitor reported a violation,
2 = configuration error (bad parameters, incompatible pairings, malformed
trace or config file).
"""
from __future__ import annotations

import concurrent.futures
import csv
import os
import sys
from pathlib import Path
from typing import Optional

import click

from .adversaries import (
    AdversaryError,
    CTImpossibilityAdversary,
    CTPortFlipAdversary,
    IntervalFlipAdversary,
    RandomCTAdversary,
)
from .harness import ALGORITHMS, default_monitors, replay_trace, run_simulation
from .policies import ScriptAlgorithm
from .runtime import CommSpec, Configuration, SpecError
from .trace import TraceError


class ConfigError(click.ClickException):
    """Configuration problem; exits with status 2."""

    exit_code = 2

PLACEMENTS = ("c0", "c0-prime", "dispersed")
ADVERSARIES = ("interval-flip", "ct-impossibility", "ct-portflip", "random-ct")


def staircase_counts(n: int) -> list[int]:
    return [n - i - 2 for i in range(n - 2)] + [0, 0]


def build_placement(name: str, n: int, agents: Optional[int]) -> Configuration:
    if name == "c0":
        counts = staircase_counts(n)
    elif name == "c0-prime":
        counts = staircase_counts(n)
        counts[n - 2] = 1
    elif name == "dispersed":
        if agents is None or agents > n:
            raise ConfigError(
                "dispersed placement needs --agents <= n")
        counts = [1] * agents + [0] * (n - agents)
    else:
        try:
            counts = [int(x) for x in name.split(",")]
        except ValueError:
            raise ConfigError(
                f"placement must be one of {PLACEMENTS} or a comma list "
                f"of per-node counts, got {name!r}") from None
        if len(counts) != n:
            raise ConfigError(
                f"custom placement has {len(counts)} entries, expected {n}")
    return Configuration.from_counts(counts)


def build_adversary(name: str, n: int, T: int, p: Optional[int],
                    seed: Optional[int]):
    if name == "interval-flip":
        if p is None:
            raise ConfigError("interval-flip needs --p")
        return IntervalFlipAdversary(n, p)
    if name == "ct-impossibility":
        return CTImpossibilityAdversary(n, T)
    if name == "ct-portflip":
        return CTPortFlipAdversary(n, T)
    if name == "random-ct":
        if seed is None:
            raise ConfigError("random-ct needs --seed")
        return RandomCTAdversary(n, T, seed)
    raise ConfigError(f"unknown adversary {name!r}")


def build_algorithm(name: str):
    if name in ALGORITHMS:
        return ALGORITHMS[name], ALGORITHMS[name]()
    path = Path(name)
    if path.is_file():
        moves: dict[int, dict[int, int]] = {}
        for line in path.read_text().splitlines():
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            r, a, port = map(int, line.split())
            moves.setdefault(r, {})[a] = port
        factory = lambda: ScriptAlgorithm(moves)
        return factory, factory()
    raise ConfigError(
        f"algorithm must be one of {sorted(ALGORITHMS)} or a script file, "
        f"got {name!r}")


def parse_hops(value: str):
    if value in ("global", "full"):
        return value
    try:
        return int(value)
    except ValueError:
        raise ConfigError(
            f"hop count must be an integer, 'global', or 'full', "
            f"got {value!r}") from None


def load_config_file(path: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise ConfigError(f"bad config line {line!r}")
        k, _, v = line.partition("=")
        out[k.strip().replace("_", "-")] = v.strip()
    return out


def trace_path(explicit: Optional[str], default_name: str) -> Optional[Path]:
    if explicit:
        return Path(explicit)
    base = os.environ.get("DYNEXPLORE_TRACE_DIR")
    if base:
        return Path(base) / default_name
    return None


@click.group()
def main():
    """Simulate and verify mobile-agent exploration on dynamic graphs."""


def _run_once(n, T, p, placement, agents, adversary, algorithm,
              ell_v, ell_c, rounds, seed, c0, monitors):
    config = build_placement(placement, n, agents)
    adv = build_adversary(adversary, n, T, p, seed)
    factory, algo = build_algorithm(algorithm)
    spec = CommSpec(ell_c=parse_hops(str(ell_c)), ell_v=parse_hops(str(ell_v)))
    if adversary == "ct-portflip":
        adv._check_target(spec)
    mons = tuple(monitors.split(",")) if monitors else \
        default_monitors(adversary, algorithm)
    extra = {"adversary": adversary, "algorithm": algorithm, "c0": c0}
    if p is not None:
        extra["p"] = p
    if seed is not None:
        extra["seed"] = seed
    return run_simulation(
        n, T, config, algo, adv, spec, rounds, mons,
        header_extra=extra, algorithm_factory=factory,
    )


_shared = [
    click.option("--n", type=int, required=True, help="number of nodes"),
    click.option("--T", "t", type=int, default=1, show_default=True,
                 help="connectivity window"),
    click.option("--p", type=int, default=None,
                 help="target diameter (interval-flip only)"),
    click.option("--placement", default="c0", show_default=True,
                 help="c0 | c0-prime | dispersed | comma list of counts"),
    click.option("--agents", type=int, default=None,
                 help="agent count for dispersed placement"),
    click.option("--adversary", type=click.Choice(ADVERSARIES),
                 required=True),
    click.option("--ell-v", default="0", show_default=True,
                 help="visibility radius (hops or 'full')"),
    click.option("--ell-c", default="0", show_default=True,
                 help="communication radius (hops or 'global')"),
    click.option("--rounds", type=int, default=1000, show_default=True),
    click.option("--seed", type=int, default=None),
    click.option("--c0", type=int, default=1, show_default=True,
                 help="coverage ceiling constant"),
    click.option("--monitors", default=None,
                 help="comma list overriding the default monitor set"),
    click.option("--trace", default=None, help="trace output path"),
    click.option("--config", "config_file", default=None,
                 help="key=value config file; flags override it"),
]


def shared_options(fn):
    for opt in reversed(_shared):
        fn = opt(fn)
    return fn


def _apply_config_file(ctx, kwargs):
    path = kwargs.pop("config_file", None)
    if not path:
        return kwargs
    file_values = load_config_file(path)
    for param in ctx.command.params:
        key = param.name.replace("_", "-").lower()
        if key in file_values and \
                ctx.get_parameter_source(param.name).name == "DEFAULT":
            kwargs[param.name] = param.type.convert(
                file_values[key], param, ctx) if param.type else file_values[key]
    return kwargs


@main.command()
@shared_options
@click.option("--algorithm", required=True,
              help=f"one of {sorted(ALGORITHMS)} or a move-script file")
@click.pass_context
def run(ctx, **kwargs):
    """Run a simulation, write its trace, and report monitor verdicts."""
    kwargs = _apply_config_file(ctx, kwargs)
    tpath = trace_path(kwargs.pop("trace"), "run.trace")
    try:
        result = _run_once(
            kwargs["n"], kwargs["t"], kwargs["p"], kwargs["placement"],
            kwargs["agents"], kwargs["adversary"], kwargs["algorithm"],
            kwargs["ell_v"], kwargs["ell_c"], kwargs["rounds"],
            kwargs["seed"], kwargs["c0"], kwargs["monitors"],
        )
    except (AdversaryError, SpecError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    if tpath:
        tpath.parent.mkdir(parents=True, exist_ok=True)
        tpath.write_text("\n".join(result.lines) + "\n")
        click.echo(f"trace written to {tpath}")
    for k, v in sorted(result.summary.items()):
        click.echo(f"{k}: {v}")
    for line in result.lines:
        if line.startswith("VERDICT") and f"|{result.rounds}|" in line:
            click.echo(line)
    sys.exit(0 if result.ok else 1)


@main.command()
@click.argument("trace_file", type=click.Path(exists=True))
def replay(trace_file):
    """Reconstruct a run from its trace and re-evaluate all monitors."""
    _verify_impl(trace_file, echo_rounds=True)


@main.command()
@click.argument("trace_file", type=click.Path(exists=True))
def verify(trace_file):
    """Re-check a recorded trace; report only the final verdicts."""
    _verify_impl(trace_file, echo_rounds=False)


def _verify_impl(trace_file, echo_rounds):
    try:
        lines = Path(trace_file).read_text().splitlines()
        result = replay_trace(lines)
    except TraceError as exc:
        raise ConfigError(f"malformed trace: {exc}") from exc
    for line in result.verdict_lines:
        if echo_rounds or "status=fail" in line or \
                line == result.verdict_lines[-1]:
            click.echo(line)
    for problem in result.problems:
        click.echo(f"divergence: {problem}")
    sys.exit(0 if result.ok else 1)


@main.command()
@shared_options
@click.option("--algorithm", default="stay", show_default=True,
              help="decision source for the what-if oracle (script file or name)")
@click.pass_context
def adversary(ctx, **kwargs):
    """Emit an adversary's schedule trace without judging an algorithm."""
    kwargs = _apply_config_file(ctx, kwargs)
    kwargs["monitors"] = kwargs.get("monitors") or "snapshot-valid"
    tpath = trace_path(kwargs.pop("trace"), "schedule.trace")
    try:
        result = _run_once(
            kwargs["n"], kwargs["t"], kwargs["p"], kwargs["placement"],
            kwargs["agents"], kwargs["adversary"], kwargs["algorithm"],
            kwargs["ell_v"], kwargs["ell_c"], kwargs["rounds"],
            kwargs["seed"], kwargs["c0"], kwargs["monitors"],
        )
    except (AdversaryError, SpecError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    schedule = [l for l in result.lines
                if l.split("|", 1)[0] in ("HDR", "SNAP", "ORD", "BND")]
    if tpath:
        tpath.parent.mkdir(parents=True, exist_ok=True)
        tpath.write_text("\n".join(schedule) + "\n")
        click.echo(f"schedule written to {tpath}")
    else:
        for line in schedule:
            click.echo(line)
    sys.exit(0 if result.ok else 1)


def _sweep_job(args):
    n, T, seed, kwargs = args
    result = _run_once(
        n, T, kwargs["p"], kwargs["placement"], kwargs["agents"],
        kwargs["adversary"], kwargs["algorithm"], kwargs["ell_v"],
        kwargs["ell_c"], kwargs["rounds"], seed, kwargs["c0"],
        kwargs["monitors"],
    )
    row = {"n": n, "T": T, "seed": seed, "ok": int(result.ok),
           "rounds": result.rounds}
    row.update(result.summary)
    return row


@main.command()
@shared_options
@click.option("--algorithm", required=True)
@click.option("--n-values", default=None,
              help="comma list of n values (overrides --n)")
@click.option("--t-values", default=None,
              help="comma list of T values (overrides --T)")
@click.option("--num-seeds", type=int, default=1, show_default=True)
@click.option("--jobs", type=int, default=1, show_default=True)
@click.option("--csv", "csv_path", default=None, help="summary CSV path")
@click.pass_context
def sweep(ctx, **kwargs):
    """Run a parameter grid and write a CSV summary."""
    kwargs = _apply_config_file(ctx, kwargs)
    kwargs.pop("trace", None)
    ns = [int(x) for x in kwargs.pop("n_values").split(",")] \
        if kwargs.get("n_values") else [kwargs["n"]]
    kwargs.pop("n_values", None)
    ts = [int(x) for x in kwargs.pop("t_values").split(",")] \
        if kwargs.get("t_values") else [kwargs["t"]]
    kwargs.pop("t_values", None)
    num_seeds = kwargs.pop("num_seeds")
    jobs = kwargs.pop("jobs")
    csv_path = kwargs.pop("csv_path")
    base_seed = kwargs.get("seed") or 0
    grid = [(n, T, base_seed + s, kwargs)
            for n in ns for T in ts for s in range(num_seeds)]
    if jobs > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(_sweep_job, grid))
    else:
        rows = [_sweep_job(job) for job in grid]
    fields = sorted({k for row in rows for k in row})
    out = open(csv_path, "w", newline="") if csv_path else sys.stdout
    try:
        writer = csv.DictWriter(out, fieldnames=fields)
        writer.writeheader()
        writer.writerows(rows)
    finally:
        if csv_path:
            out.close()
    sys.exit(0 if all(row["ok"] for row in rows) else 1)


if __name__ == "__main__":
    main()
