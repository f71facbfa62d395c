import pytest
from click.testing import CliRunner

from dynexplore.adversaries import CTImpossibilityAdversary, RandomCTAdversary
from dynexplore.cli import main
from dynexplore.exploration import ExpAlgo
from dynexplore.graphs import Snapshot
from dynexplore.harness import replay_trace, run_simulation
from dynexplore.policies import StayAlgorithm
from dynexplore.runtime import CommSpec, Configuration, GLOBAL, Move
from dynexplore.trace import (
    TraceError,
    format_config,
    format_line,
    format_moves,
    format_ordering,
    format_snapshot,
    parse_config,
    parse_kv,
    parse_line,
    parse_moves,
    parse_ordering,
    parse_snapshot,
    parse_trace,
)


def staircase(n):
    return Configuration.from_counts([n - i - 2 for i in range(n - 2)] + [0, 0])


def small_run(rounds=30):
    adv = CTImpossibilityAdversary(6, 2)
    return run_simulation(
        6, 2, staircase(6), ExpAlgo(), adv,
        CommSpec(ell_c=GLOBAL, ell_v=1), rounds,
        ("conservation", "snapshot-valid", "permanent-hole",
         "movement-inequality", "connectivity-time"),
        header_extra={"adversary": "ct-impossibility", "algorithm": "exp-algo"},
        algorithm_factory=ExpAlgo,
    )


class TestRecordFormats:
    def test_line_roundtrip(self):
        assert parse_line(format_line("SNAP", 3, "0-1:0,0")) == \
            ("SNAP", 3, "0-1:0,0")

    def test_unknown_kind_rejected(self):
        with pytest.raises(TraceError):
            format_line("WAT", 0, "")
        with pytest.raises(TraceError):
            parse_line("WAT|0|x")
        with pytest.raises(TraceError):
            parse_line("SNAP|three|x")

    def test_snapshot_roundtrip(self):
        s = Snapshot.from_edges(4, [(0, 1, 0, 1), (1, 2, 0, 0)])
        assert parse_snapshot(format_snapshot(s), 4) == s

    def test_snapshot_parse_errors(self):
        with pytest.raises(TraceError):
            parse_snapshot("0-1", 3)
        with pytest.raises(TraceError):
            parse_snapshot("0-1:0,0 0-2:0,0", 3)  # duplicate port

    def test_config_roundtrip_keeps_holes(self):
        c = Configuration([(2, 5), (), (7,)])
        assert parse_config(format_config(c)) == c

    def test_moves_and_ordering_roundtrip(self):
        moves = (Move(1, 0, 2, 3), Move(4, 3, 0, 0))
        assert parse_moves(format_moves(moves)) == moves
        assert parse_ordering(format_ordering([3, 1, 2])) == (3, 1, 2)
        with pytest.raises(TraceError):
            parse_moves("1,2,3")
        with pytest.raises(TraceError):
            parse_ordering("1,x")

    def test_kv_parse_errors(self):
        assert parse_kv("a=1;b=x=y") == {"a": "1", "b": "x=y"}
        with pytest.raises(TraceError):
            parse_kv("noequals")


class TestParseTrace:
    def test_full_run_roundtrip(self):
        result = small_run()
        data = parse_trace(result.lines)
        assert data.header["n"] == "6"
        assert data.header["algorithm"] == "exp-algo"
        assert len(data.rounds) == result.rounds
        assert data.final_config == result.final_config
        assert all(rec.snapshot is not None for rec in data.rounds)
        assert all(rec.config is not None for rec in data.rounds)
        assert data.summary["ok"] in ("True", "1", "true")

    def test_missing_header_rejected(self):
        with pytest.raises(TraceError):
            parse_trace(["SNAP|0|0-1:0,0"])


class TestReplay:
    def test_clean_replay_matches(self):
        result = small_run()
        replay = replay_trace(result.lines)
        assert replay.ok
        assert not replay.problems
        recorded = [l for l in result.lines if l.startswith("VERDICT")]
        assert list(replay.verdict_lines) == recorded

    def test_corrupted_move_breaks_conservation(self):
        result = small_run()
        lines = list(result.lines)
        idx = next(i for i, l in enumerate(lines)
                   if l.startswith("MOVE") and l.split("|", 2)[2].strip())
        kind, r, payload = lines[idx].split("|", 2)
        a, src, port, dst = payload.split()[0].split(",")
        forged = f"{a},{src},{port},{(int(dst) + 1) % 6}"
        lines[idx] = f"{kind}|{r}|{forged}"
        replay = replay_trace(lines)
        assert not replay.ok
        assert any("conservation" in l and "fail" in l
                   for l in replay.verdict_lines)

    def test_corrupted_config_breaks_conservation(self):
        result = small_run()
        lines = list(result.lines)
        idx = next(i for i, l in enumerate(lines)
                   if l.startswith("CONF|3|"))
        kind, r, payload = lines[idx].split("|", 2)
        cells = payload.split(";")
        crowded = next(i for i, c in enumerate(cells) if "," in c)
        cells[crowded] = cells[crowded].rsplit(",", 1)[0]  # drop one agent
        lines[idx] = f"{kind}|{r}|{';'.join(cells)}"
        replay = replay_trace(lines)
        assert not replay.ok
        assert any("conservation" in l and "fail" in l
                   for l in replay.verdict_lines)

    def test_truncated_config_rejected(self):
        result = small_run()
        lines = list(result.lines)
        idx = next(i for i, l in enumerate(lines) if l.startswith("CONF|3|"))
        kind, r, payload = lines[idx].split("|", 2)
        lines[idx] = f"{kind}|{r}|{payload.rsplit(';', 1)[0]}"  # drop a node
        with pytest.raises(TraceError):
            replay_trace(lines)

    def test_forged_verdict_reported_as_divergence(self):
        result = small_run()
        lines = list(result.lines)
        idx = next(i for i, l in enumerate(lines) if l.startswith("VERDICT"))
        lines[idx] = lines[idx].replace("pass", "fail")
        replay = replay_trace(lines)
        assert replay.problems


class TestCli:
    def runner(self):
        return CliRunner()

    def run_args(self, extra=()):
        return ["run", "--n", "6", "--T", "2", "--adversary",
                "ct-impossibility", "--algorithm", "exp-algo",
                "--ell-v", "1", "--ell-c", "global", "--rounds", "40",
                *extra]

    def test_run_passes_and_writes_trace(self, tmp_path):
        trace = tmp_path / "out.trace"
        result = self.runner().invoke(main, self.run_args(
            ["--trace", str(trace)]))
        assert result.exit_code == 0, result.output
        assert trace.exists()
        assert "ok" in result.output

    def test_trace_dir_environment_variable(self, tmp_path):
        result = self.runner().invoke(
            main, self.run_args(),
            env={"DYNEXPLORE_TRACE_DIR": str(tmp_path)})
        assert result.exit_code == 0, result.output
        assert (tmp_path / "run.trace").exists()

    def test_verify_and_replay_roundtrip(self, tmp_path):
        trace = tmp_path / "out.trace"
        assert self.runner().invoke(main, self.run_args(
            ["--trace", str(trace)])).exit_code == 0
        verify = self.runner().invoke(main, ["verify", str(trace)])
        assert verify.exit_code == 0, verify.output
        replay = self.runner().invoke(main, ["replay", str(trace)])
        assert replay.exit_code == 0
        assert replay.output.count("VERDICT") > verify.output.count("VERDICT")

    def test_violation_exits_one(self):
        result = self.runner().invoke(main, [
            "run", "--n", "6", "--T", "2", "--adversary", "random-ct",
            "--seed", "5", "--algorithm", "stay", "--rounds", "30"])
        assert result.exit_code == 1, result.output

    def test_configuration_errors_exit_two(self, tmp_path):
        runner = self.runner()
        cases = [
            ["run", "--n", "6", "--adversary", "interval-flip",
             "--algorithm", "stay"],  # missing --p
            ["run", "--n", "6", "--T", "2", "--adversary", "ct-impossibility",
             "--algorithm", "no-such-algo"],
            ["run", "--n", "6", "--T", "2", "--adversary", "ct-portflip",
             "--placement", "c0-prime", "--algorithm", "greedy-0hop",
             "--ell-v", "1"],  # portflip demands blind agents
            ["run", "--n", "7", "--T", "2", "--adversary", "ct-impossibility",
             "--algorithm", "stay"],  # odd n
        ]
        for args in cases:
            result = runner.invoke(main, args)
            assert result.exit_code == 2, (args, result.output)
        bad = tmp_path / "bad.trace"
        bad.write_text("SNAP|0|0-1:0,0\n")
        assert runner.invoke(main, ["verify", str(bad)]).exit_code == 2

    def test_config_file_fills_defaults_but_flags_win(self, tmp_path):
        cfg = tmp_path / "run.cfg"
        cfg.write_text("rounds = 40\nell_v = 1\nell_c = global\n")
        trace = tmp_path / "cfg.trace"
        result = self.runner().invoke(main, [
            "run", "--n", "6", "--T", "2", "--adversary", "ct-impossibility",
            "--algorithm", "exp-algo", "--config", str(cfg),
            "--trace", str(trace)])
        assert result.exit_code == 0, result.output
        header = trace.read_text().splitlines()[0]
        assert "rounds=40" in header
        override = self.runner().invoke(main, [
            "run", "--n", "6", "--T", "2", "--adversary", "ct-impossibility",
            "--algorithm", "exp-algo", "--config", str(cfg),
            "--rounds", "25", "--trace", str(trace)])
        assert override.exit_code == 0, override.output
        assert "rounds=25" in trace.read_text().splitlines()[0]

    def test_script_algorithm_from_file(self, tmp_path):
        script = tmp_path / "moves.txt"
        script.write_text("# round agent port\n0 8 0\n")
        result = self.runner().invoke(main, [
            "run", "--n", "6", "--T", "2", "--adversary", "ct-impossibility",
            "--algorithm", str(script), "--rounds", "5",
            "--monitors", "conservation,snapshot-valid,connectivity-time"])
        assert result.exit_code == 0, result.output

    def test_adversary_command_emits_schedule_only(self):
        result = self.runner().invoke(main, [
            "adversary", "--n", "6", "--T", "2",
            "--adversary", "ct-impossibility", "--rounds", "6"])
        assert result.exit_code == 0, result.output
        kinds = {line.split("|", 1)[0] for line in result.output.splitlines()
                 if "|" in line}
        assert kinds <= {"HDR", "SNAP", "ORD", "BND"}
        assert "SNAP" in kinds

    def test_sweep_writes_csv(self, tmp_path):
        csv_path = tmp_path / "grid.csv"
        result = self.runner().invoke(main, [
            "sweep", "--n", "6", "--adversary", "ct-impossibility",
            "--algorithm", "stay", "--t-values", "2,3", "--num-seeds", "2",
            "--rounds", "20", "--csv", str(csv_path)])
        assert result.exit_code == 0, result.output
        rows = csv_path.read_text().splitlines()
        assert len(rows) == 1 + 4  # header + 2 T-values x 2 seeds
        assert rows[0].split(",")[:1] != []
