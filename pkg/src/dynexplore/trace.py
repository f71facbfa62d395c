"""Line-oriented trace format: one record per line, ``KIND|round|payload``.

Record kinds:

- ``HDR``  run parameters as ``key=value`` pairs
- ``SNAP`` the round's edges with both port labels
- ``ORD``  the adversary's occupancy ordering, when one exists
- ``BND``  adversary phase-boundary metadata
- ``CONF`` per-node agent-id lists at round start (one final record at the end)
- ``MOVE`` the applied moves of the round
- ``VERDICT`` a monitor outcome
- ``SUM``  end-of-run summary

Text was chosen over binary so traces diff cleanly in CI.  Parsing is strict:
anything malformed raises :class:`TraceError`.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Optional

from .graphs import Snapshot
from .runtime import Configuration, Move

KINDS = ("HDR", "SNAP", "ORD", "BND", "CONF", "MOVE", "VERDICT", "SUM")


class TraceError(ValueError):
    pass


def format_line(kind: str, round_index: int, payload: str) -> str:
    if kind not in KINDS:
        raise TraceError(f"unknown record kind {kind!r}")
    return f"{kind}|{round_index}|{payload}"


def parse_line(line: str) -> tuple[str, int, str]:
    parts = line.rstrip("\n").split("|", 2)
    if len(parts) != 3 or parts[0] not in KINDS:
        raise TraceError(f"malformed trace line: {line!r}")
    try:
        r = int(parts[1])
    except ValueError:
        raise TraceError(f"malformed round index in line: {line!r}") from None
    return parts[0], r, parts[2]


def format_kv(pairs: dict) -> str:
    return ";".join(f"{k}={v}" for k, v in pairs.items())


def parse_kv(payload: str) -> dict[str, str]:
    out: dict[str, str] = {}
    if not payload:
        return out
    for item in payload.split(";"):
        if "=" not in item:
            raise TraceError(f"malformed key=value item {item!r}")
        k, _, v = item.partition("=")
        out[k] = v
    return out


def format_snapshot(s: Snapshot) -> str:
    return " ".join(f"{u}-{v}:{pu},{pv}" for u, v, pu, pv in s.edge_quads())


def parse_snapshot(payload: str, n: int) -> Snapshot:
    quads = []
    for item in payload.split():
        try:
            uv, ports = item.split(":")
            u, v = map(int, uv.split("-"))
            pu, pv = map(int, ports.split(","))
        except ValueError:
            raise TraceError(f"malformed edge record {item!r}") from None
        quads.append((u, v, pu, pv))
    try:
        return Snapshot.from_edges(n, quads)
    except (ValueError, IndexError) as exc:
        raise TraceError(f"invalid snapshot: {exc}") from None


def format_config(c: Configuration) -> str:
    return ";".join(",".join(map(str, ids)) for ids in c.placement)


def parse_config(payload: str) -> Configuration:
    placement = []
    for cell in payload.split(";"):
        placement.append([int(a) for a in cell.split(",") if a])
    try:
        return Configuration(placement)
    except ValueError as exc:
        raise TraceError(f"invalid configuration: {exc}") from None


def format_moves(moves: Iterable[Move]) -> str:
    return " ".join(f"{m.agent},{m.src},{m.port},{m.dst}" for m in moves)


def parse_moves(payload: str) -> tuple[Move, ...]:
    out = []
    for item in payload.split():
        try:
            a, src, port, dst = map(int, item.split(","))
        except ValueError:
            raise TraceError(f"malformed move record {item!r}") from None
        out.append(Move(a, src, port, dst))
    return tuple(out)


def format_ordering(ordering: Iterable[int]) -> str:
    return ",".join(map(str, ordering))


def parse_ordering(payload: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in payload.split(",") if x)
    except ValueError:
        raise TraceError(f"malformed ordering {payload!r}") from None


@dataclass
class RoundRecord:
    snapshot: Optional[Snapshot] = None
    ordering: Optional[tuple[int, ...]] = None
    boundary: Optional[dict[str, str]] = None
    config: Optional[Configuration] = None
    moves: tuple[Move, ...] = ()
    verdicts: list[str] = field(default_factory=list)


@dataclass
class TraceData:
    header: dict[str, str]
    rounds: list[RoundRecord]
    final_config: Optional[Configuration]
    verdict_lines: list[str]
    summary: dict[str, str]


def parse_trace(lines: Iterable[str]) -> TraceData:
    header: Optional[dict[str, str]] = None
    rounds: list[RoundRecord] = []
    final_config: Optional[Configuration] = None
    verdicts: list[str] = []
    summary: dict[str, str] = {}

    def at(r: int) -> RoundRecord:
        while len(rounds) <= r:
            rounds.append(RoundRecord())
        return rounds[r]

    for line in lines:
        if not line.strip():
            continue
        kind, r, payload = parse_line(line)
        if kind == "HDR":
            header = parse_kv(payload)
        elif kind == "SNAP":
            at(r).snapshot = parse_snapshot(payload, int(_require(header, "n")))
        elif kind == "ORD":
            at(r).ordering = parse_ordering(payload)
        elif kind == "BND":
            at(r).boundary = parse_kv(payload)
        elif kind == "CONF":
            cfg = parse_config(payload)
            if r == len(rounds):
                final_config = cfg
            else:
                at(r).config = cfg
        elif kind == "MOVE":
            at(r).moves = parse_moves(payload)
        elif kind == "VERDICT":
            verdicts.append(line.rstrip("\n"))
            if r < len(rounds):
                at(r).verdicts.append(payload)
        elif kind == "SUM":
            summary = parse_kv(payload)
    if header is None:
        raise TraceError("trace has no HDR record")
    # The trailing CONF may have landed inside rounds if MOVE records stopped
    # earlier; normalize: the last round with a config but no snapshot is final.
    if final_config is None and rounds and rounds[-1].snapshot is None and rounds[-1].config is not None:
        final_config = rounds.pop().config
    return TraceData(header, rounds, final_config, verdicts, summary)


def _require(header: Optional[dict[str, str]], key: str) -> str:
    if header is None or key not in header:
        raise TraceError(f"record requires header key {key!r} seen first")
    return header[key]
