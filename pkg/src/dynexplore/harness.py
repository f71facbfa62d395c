"""Run loop, monitor suite, and trace replay.

The same :class:`MonitorSuite` instance drives live runs and trace replays:
both feed it the identical per-round data (snapshot, round-start and round-end
configurations, moves, adversary metadata), so a replayed trace reproduces the
live verdict stream byte for byte.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Iterable, Mapping, Optional

from . import trace as tr
from .exploration import ExpAlgo
from .graphs import (
    Snapshot,
    check_connectivity_time,
    check_interval_connectivity,
    connected_components,
    validate_snapshot,
)
from .adversaries import build_G1, build_G2
from .policies import (
    FullVisibilityGreedy,
    Greedy0Hop,
    Restless0Hop,
    StayAlgorithm,
)
from .runtime import (
    Algorithm,
    CommSpec,
    Configuration,
    FULL,
    GLOBAL,
    Move,
    deliver_messages,
    step_round,
    visibility_region,
)
from .verification import (
    CoverageTracker,
    check_movement_inequality,
    monitor_coverage,
    monitor_hole_dynamics,
)

ALGORITHMS: dict[str, Callable[[], Algorithm]] = {
    "exp-algo": ExpAlgo,
    "stay": StayAlgorithm,
    "greedy-0hop": Greedy0Hop,
    "restless-0hop": Restless0Hop,
    "full-greedy": FullVisibilityGreedy,
}

ALL_MONITORS = (
    "conservation",
    "snapshot-valid",
    "permanent-hole",
    "movement-inequality",
    "corollary1",
    "corollary2",
    "hole-dynamics",
    "diameter",
    "symmetry",
    "connectivity-time",
    "interval-connectivity",
    "coverage",
)


def default_monitors(adversary: str, algorithm: str) -> tuple[str, ...]:
    base = ["conservation", "snapshot-valid"]
    if adversary == "ct-impossibility":
        base += ["permanent-hole", "movement-inequality", "corollary1",
                 "connectivity-time"]
    elif adversary == "ct-portflip":
        base += ["permanent-hole", "corollary2", "connectivity-time"]
    elif adversary == "interval-flip":
        base += ["permanent-hole", "diameter", "symmetry",
                 "interval-connectivity"]
    elif adversary == "random-ct":
        base += ["coverage", "connectivity-time"]
        if algorithm == "exp-algo":
            base.append("hole-dynamics")
    return tuple(base)


def _parse_hops(value: str) -> int | str:
    return value if value in (GLOBAL, FULL) else int(value)


class MonitorSuite:
    """Evaluates the enabled monitors from per-round data and a final pass.

    Per-round failures are reported as VERDICT lines immediately; the final
    pass emits one pass/fail VERDICT line per monitor.  All inputs come from
    data that is also serialized into the trace, which is what makes replay
    verification exact.
    """

    def __init__(self, header: Mapping[str, str],
                 algorithm_factory: Optional[Callable[[], Algorithm]] = None):
        self.n = int(header["n"])
        self.T = int(header["T"])
        self.monitors = tuple(m for m in header["monitors"].split(",") if m)
        unknown = set(self.monitors) - set(ALL_MONITORS)
        if unknown:
            raise ValueError(f"unknown monitors: {sorted(unknown)}")
        self.hole = int(header.get("hole", self.n - 1))
        self.p = int(header["p"]) if "p" in header else None
        self.c0 = int(header.get("c0", "1"))
        self.ell_v = _parse_hops(header.get("ell_v", "0"))
        self.ell_c = _parse_hops(header.get("ell_c", "0"))
        self._factory = algorithm_factory
        self.history: list[Snapshot] = []
        self.tracker = CoverageTracker(self.n, self.T)
        self.failures: dict[str, list[str]] = {m: [] for m in self.monitors}
        self.rounds = 0

    def enabled(self, name: str) -> bool:
        return name in self.monitors

    def _fail(self, r: int, monitor: str, detail: str) -> str:
        self.failures[monitor].append(f"round {r}: {detail}")
        return tr.format_line(
            "VERDICT", r, tr.format_kv(
                {"monitor": monitor, "status": "fail", "detail": detail}
            )
        )

    def round_check(
        self,
        r: int,
        snapshot: Snapshot,
        before: Configuration,
        after: Configuration,
        moves: tuple[Move, ...],
        ordering: Optional[tuple[int, ...]],
        boundary: Optional[Mapping[str, str]],
    ) -> list[str]:
        lines: list[str] = []
        self.history.append(snapshot)
        self.rounds = r + 1

        if self.enabled("conservation"):
            detail = self._conservation(snapshot, before, after, moves)
            if detail:
                lines.append(self._fail(r, "conservation", detail))
        if self.enabled("snapshot-valid"):
            violation = validate_snapshot(snapshot)
            if violation:
                lines.append(self._fail(r, "snapshot-valid", str(violation)))
        if self.enabled("permanent-hole"):
            if before.alpha(self.hole) or after.alpha(self.hole):
                lines.append(self._fail(
                    r, "permanent-hole",
                    f"node {self.hole} holds agents"))
        if self.enabled("movement-inequality") and ordering is not None:
            if not check_movement_inequality(before, ordering, self.n):
                lines.append(self._fail(
                    r, "movement-inequality",
                    f"prefix sums below the staircase floor, "
                    f"alpha={before.alpha_vector()}"))
        if self.enabled("corollary1") and boundary is not None \
                and boundary.get("kind") == "odd" and ordering is not None:
            w = ordering[self.n - 3]
            if before.alpha(w) > 1:
                lines.append(self._fail(
                    r, "corollary1",
                    f"{before.alpha(w)} agents at the 3-node path head"))
        if self.enabled("corollary2") and boundary is not None \
                and boundary.get("kind") == "odd" and "triple" in boundary:
            triple = [int(x) for x in boundary["triple"].split(",")]
            count = sum(before.alpha(v) for v in triple)
            if count > 2:
                lines.append(self._fail(
                    r, "corollary2",
                    f"{count} agents in the 3-node path"))
        if self.enabled("hole-dynamics"):
            for detail in monitor_hole_dynamics(snapshot, before, after):
                lines.append(self._fail(r, "hole-dynamics", detail))
        if self.enabled("diameter") and self.p is not None:
            decomp = connected_components(snapshot)
            if len(decomp.components) != 1:
                lines.append(self._fail(r, "diameter", "snapshot disconnected"))
            elif decomp.diameter != self.p:
                lines.append(self._fail(
                    r, "diameter",
                    f"diameter {decomp.diameter}, expected {self.p}"))
        if self.enabled("symmetry") and ordering is not None:
            detail = self._symmetry(r, before, ordering)
            if detail:
                lines.append(self._fail(r, "symmetry", detail))
        if self.enabled("coverage"):
            self.tracker.record(r, before)
        return lines

    def finalize(self, final_config: Configuration) -> tuple[list[str], bool]:
        r = self.rounds
        lines: list[str] = []
        if self.enabled("connectivity-time"):
            if not check_connectivity_time(self.history, self.T):
                self.failures["connectivity-time"].append(
                    "a window's edge union is disconnected")
        if self.enabled("interval-connectivity"):
            if not check_interval_connectivity(self.history, self.T):
                self.failures["interval-connectivity"].append(
                    "a window's edge intersection is disconnected")
        if self.enabled("coverage"):
            self.tracker.record(r, final_config)
            status = monitor_coverage(self.tracker, self.c0)
            for problem in status.problems:
                self.failures["coverage"].append(problem)
        if self.enabled("permanent-hole") and final_config.alpha(self.hole):
            self.failures["permanent-hole"].append(
                f"node {self.hole} holds agents at the end")
        ok = True
        for monitor in self.monitors:
            fails = self.failures[monitor]
            payload = {"monitor": monitor,
                       "status": "fail" if fails else "pass"}
            if fails:
                ok = False
                payload["detail"] = f"{len(fails)} violations; first: {fails[0]}"
            lines.append(tr.format_line("VERDICT", r, tr.format_kv(payload)))
        return lines, ok

    # -- individual checks ---------------------------------------------------

    def _conservation(self, snapshot, before, after, moves) -> Optional[str]:
        placement = [list(ids) for ids in before.placement]
        for m in moves:
            if m.agent not in placement[m.src]:
                return f"agent {m.agent} not at node {m.src}"
            if not snapshot.has_port(m.src, m.port):
                return f"node {m.src} has no port {m.port}"
            if snapshot.neighbor(m.src, m.port) != m.dst:
                return f"port {m.port} of node {m.src} does not lead to {m.dst}"
            placement[m.src].remove(m.agent)
            placement[m.dst].append(m.agent)
        if Configuration(placement) != after:
            return "moves do not account for the configuration change"
        return None

    def _symmetry(self, r: int, before: Configuration,
                  ordering: tuple[int, ...]) -> Optional[str]:
        """The two graph variants must be indistinguishable at the spine
        midpoint: same visibility region and same inbox contents there."""
        if self.p is None or self._factory is None:
            return None
        probe = ordering[self.n - self.p + self.p // 2 - 1]
        g1 = build_G1(ordering, self.n, self.p)
        g2 = build_G2(ordering, self.n, self.p)
        r1 = visibility_region(g1, before, probe, self.ell_v)
        r2 = visibility_region(g2, before, probe, self.ell_v)
        if r1 != r2:
            return f"visibility regions differ at node {probe}"
        agents_at_probe = before.agents_at(probe)
        if not agents_at_probe:
            return None
        node_of = before.node_of()
        inboxes = []
        for g in (g1, g2):
            algo = self._factory()
            algo.begin_round(r)
            regions = {
                v: visibility_region(g, before, v, self.ell_v)
                for v in range(self.n) if before.alpha(v) > 0
            }
            outboxes = {
                a: algo.communicate(a, None, regions[node_of[a]])
                for a in sorted(node_of)
            }
            delivered = deliver_messages(g, before, outboxes, self.ell_c)
            inboxes.append({a: delivered[a] for a in agents_at_probe})
        if inboxes[0] != inboxes[1]:
            return f"inbox contents differ at node {probe}"
        return None


@dataclass
class RunResult:
    lines: list[str]
    ok: bool
    rounds: int
    final_config: Configuration
    suite: MonitorSuite
    summary: dict[str, str] = field(default_factory=dict)


def run_simulation(
    n: int,
    T: int,
    config: Configuration,
    algorithm: Algorithm,
    adversary,
    comm_spec: CommSpec,
    max_rounds: int,
    monitors: Iterable[str],
    header_extra: Optional[Mapping[str, object]] = None,
    algorithm_factory: Optional[Callable[[], Algorithm]] = None,
    stop_when: Optional[Callable[[int, MonitorSuite], bool]] = None,
) -> RunResult:
    """Drive adversary and algorithm for up to ``max_rounds`` rounds,
    producing the full trace (as lines) and the monitor verdicts."""
    algorithm.check_spec(comm_spec)
    header: dict[str, object] = {
        "n": n, "T": T, "monitors": ",".join(monitors),
        "ell_v": comm_spec.ell_v, "ell_c": comm_spec.ell_c,
        "agents": config.total, "rounds": max_rounds,
    }
    if header_extra:
        header.update(header_extra)
    str_header = {k: str(v) for k, v in header.items()}
    suite = MonitorSuite(str_header, algorithm_factory)
    lines = [tr.format_line("HDR", 0, tr.format_kv(str_header))]
    memories: dict[int, object] = {}
    r = 0
    for r in range(max_rounds):
        snapshot = adversary.next_snapshot(r, config, algorithm,
                                           comm_spec, memories)
        ordering = getattr(adversary, "last_ordering", None)
        if ordering is None and hasattr(adversary, "current_ordering"):
            ordering = tuple(adversary.current_ordering(config))
        boundary = _boundary_payload(adversary)

        lines.append(tr.format_line("SNAP", r, tr.format_snapshot(snapshot)))
        if ordering is not None:
            lines.append(tr.format_line("ORD", r, tr.format_ordering(ordering)))
        if boundary is not None:
            lines.append(tr.format_line("BND", r, tr.format_kv(boundary)))
        lines.append(tr.format_line("CONF", r, tr.format_config(config)))

        result = step_round(snapshot, config, algorithm, comm_spec,
                            memories, r)
        lines.append(tr.format_line("MOVE", r, tr.format_moves(result.moves)))
        lines.extend(suite.round_check(
            r, snapshot, config, result.config, result.moves,
            ordering, boundary,
        ))
        config = result.config
        memories = result.memories
        if stop_when is not None and stop_when(r, suite):
            break

    rounds = suite.rounds
    lines.append(tr.format_line("CONF", rounds, tr.format_config(config)))
    verdicts, ok = suite.finalize(config)
    lines.extend(verdicts)
    summary = _summary(suite, ok)
    lines.append(tr.format_line("SUM", rounds, tr.format_kv(summary)))
    return RunResult(lines, ok, rounds, config, suite, summary)


def _boundary_payload(adversary) -> Optional[dict[str, str]]:
    info = getattr(adversary, "last_boundary", None)
    payload: dict[str, str] = {}
    if info is not None:
        payload["kind"] = info[0]
    graph = getattr(adversary, "last_graph", None)
    if graph is not None:
        payload["graph"] = graph
    triple = getattr(adversary, "triple", None)
    if triple is not None and getattr(adversary, "state", None) == "triple":
        payload["triple"] = ",".join(map(str, triple))
        payload["flip"] = "1" if getattr(adversary, "flipped", False) else "0"
    return payload or None


def _summary(suite: MonitorSuite, ok: bool) -> dict[str, str]:
    summary = {"rounds": str(suite.rounds), "ok": "1" if ok else "0"}
    if suite.enabled("coverage"):
        t = suite.tracker
        summary["convergence_round"] = str(t.convergence_round)
        summary["full_coverage_round"] = str(t.full_coverage_round)
        summary["max_post_gap"] = str(t.max_post_gap)
        summary["join_events"] = str(t.join_events)
    return summary


@dataclass
class ReplayResult:
    verdict_lines: list[str]
    ok: bool
    problems: list[str]


def replay_trace(lines: Iterable[str],
                 algorithms: Optional[Mapping[str, Callable[[], Algorithm]]] = None
                 ) -> ReplayResult:
    """Re-run every monitor from recorded data only and rebuild the verdict
    stream.  Raises :class:`trace.TraceError` on malformed input."""
    data = tr.parse_trace(lines)
    factory = None
    name = data.header.get("algorithm")
    registry = ALGORITHMS if algorithms is None else algorithms
    if name in registry:
        factory = registry[name]
    suite = MonitorSuite(data.header, factory)
    problems: list[str] = []
    verdicts: list[str] = []
    for r, rec in enumerate(data.rounds):
        if rec.config is not None and rec.config.n != suite.n:
            raise tr.TraceError(
                f"round {r} configuration covers {rec.config.n} nodes, "
                f"header says n={suite.n}")
    if data.final_config is not None and data.final_config.n != suite.n:
        raise tr.TraceError(
            f"final configuration covers {data.final_config.n} nodes, "
            f"header says n={suite.n}")
    for r, rec in enumerate(data.rounds):
        if rec.snapshot is None or rec.config is None:
            raise tr.TraceError(f"round {r} is missing its snapshot or configuration")
        if r + 1 < len(data.rounds):
            after = data.rounds[r + 1].config
        else:
            after = data.final_config
        if after is None:
            raise tr.TraceError(f"round {r} has no follow-up configuration")
        boundary = rec.boundary
        verdicts.extend(suite.round_check(
            r, rec.snapshot, rec.config, after, rec.moves,
            rec.ordering, boundary,
        ))
    if data.final_config is None:
        raise tr.TraceError("trace has no final configuration")
    final_lines, ok = suite.finalize(data.final_config)
    verdicts.extend(final_lines)
    recorded = data.verdict_lines
    if recorded and recorded != verdicts:
        problems.append("replayed verdict stream differs from the recorded one")
    return ReplayResult(verdicts, ok and not problems, problems)
