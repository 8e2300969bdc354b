import csv
import io
import json
from fractions import Fraction

import numpy as np
import pytest

from takiff_toda.algebra import TakiffElement, principal_f
from takiff_toda.cli import (
    ExperimentConfig,
    build_parser,
    emit_trajectory,
    format_float,
    initial_state,
    resolve_config,
    run,
)
from takiff_toda.dynamics import TodaState, Trajectory, integrate

E = TakiffElement.basis


def read_csv(path):
    with open(path) as fh:
        return list(csv.reader(fh))


class TestConfig:
    def test_json_round_trip(self):
        cfg = ExperimentConfig(series="B", rank=2, l=1, t_end=2.5, dt=1e-4, seed=11,
                               initial={"rho": [[0.1, 0.2], [0.3, 0.4]], "phi": [[0, 1], [0, 1]]})
        assert ExperimentConfig.from_json(cfg.to_json()) == cfg

    def test_unknown_key(self):
        with pytest.raises(ValueError, match="bogus"):
            ExperimentConfig.from_dict({"bogus": 1})

    def test_precedence(self, tmp_path):
        path = tmp_path / "cfg.json"
        path.write_text(ExperimentConfig(rank=2, dt=0.01, seed=5).to_json())
        args = build_parser().parse_args(["simulate", "--config", str(path), "--dt", "0.02"])
        cfg = resolve_config(args, environ={})
        assert (cfg.rank, cfg.dt, cfg.seed) == (2, 0.02, 5)
        assert resolve_config(args, environ={"TAKIFF_TODA_SEED": "9"}).seed == 9
        args = build_parser().parse_args(["--seed", "3", "simulate", "--config", str(path)])
        assert resolve_config(args, environ={"TAKIFF_TODA_SEED": "9"}).seed == 3

    def test_bad_env_seed(self):
        args = build_parser().parse_args(["simulate"])
        with pytest.raises(ValueError):
            resolve_config(args, environ={"TAKIFF_TODA_SEED": "abc"})

    def test_default_state_separates(self):
        st_ = initial_state(ExperimentConfig(series="A", rank=2, l=1))
        d = integrate("canonical", st_, 0.0)
        assert d.phi.shape == (1, 2, 2)
        assert np.all(st_.gamma == 0.5)

    def test_initial_shape_checked(self):
        with pytest.raises(ValueError):
            initial_state(ExperimentConfig(initial={"rho": [[0.0, 0.0]], "gamma": [[1.0, 1.0]]}, rank=2))


class TestEmitTrajectory:
    def make(self, steps):
        st_ = TodaState.from_canonical([[0.1, -0.2]], [[0.0, 1.0]])
        return integrate("canonical", st_, steps * 0.01, dt=0.01)

    def test_header_only(self):
        tr = self.make(1)
        empty = Trajectory(tr.t[:0], tr.rho[:0], tr.gamma[:0], tr.H[:0],
                           {k: v[:0] for k, v in tr.invariants.items()}, tr.phi[:0], tr.quartic[:0], tr.meta)
        buf = io.StringIO()
        emit_trajectory(empty, buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 1 and lines[0].startswith("t,rho_1_0")

    def test_three_rows(self, tmp_path):
        tr = self.make(2)
        assert len(tr) == 3
        path = tmp_path / "t.csv"
        emit_trajectory(tr, str(path))
        assert len(path.read_text().splitlines()) == 4

    def test_bit_exact_reread(self, tmp_path):
        tr = self.make(5)
        path = tmp_path / "t.csv"
        emit_trajectory(tr, str(path))
        rows = read_csv(path)
        header, body = rows[0], np.array([[float(v) for v in r] for r in rows[1:]])
        for idx, (name, vals) in enumerate(tr.columns()):
            assert header[idx] == name
            assert np.array_equal(body[:, idx], vals)

    def test_format_float(self):
        for v in (0.1, 1 / 3, 1e-300, -2.5e17):
            assert float(format_float(v)) == v


class TestRun:
    def test_simulate_example(self, tmp_path):
        out = tmp_path / "traj.csv"
        code = run(["simulate", "--type", "A", "--rank", "1", "--l", "1", "--formulation", "canonical",
                    "--t-end", "10", "--dt", "1e-3", "--out", str(out)])
        assert code == 0
        rows = read_csv(out)
        t = np.array([float(r[0]) for r in rows[1:]])
        assert t[0] == 0 and t[-1] == 10 and np.all(np.diff(t) > 0)

    @pytest.mark.parametrize("form", ["symplectic", "lax"])
    def test_simulate_other_formulations(self, tmp_path, form):
        out = tmp_path / "traj.csv"
        assert run(["simulate", "--rank", "2", "--l", "2", "--formulation", form, "--t-end", "1",
                    "--record-every", "100", "--out", str(out)]) == 0
        assert len(read_csv(out)) == 12

    def test_deterministic(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(ExperimentConfig(rank=2, l=1, t_end=1.0, initial="random", seed=4, record_every=50).to_json())
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        assert run(["simulate", "--config", str(cfg), "--out", str(a)]) == 0
        assert run(["simulate", "--config", str(cfg), "--out", str(b)]) == 0
        assert a.read_bytes() == b.read_bytes()

    def test_seed_changes_output(self, tmp_path):
        a, b = tmp_path / "a.csv", tmp_path / "b.csv"
        base = ["simulate", "--random-initial", "--t-end", "0.1", "--out"]
        assert run(base + [str(a), "--seed", "1"]) == 0
        assert run(base + [str(b), "--seed", "2"]) == 0
        assert a.read_bytes() != b.read_bytes()

    def test_positivity_loss_exit_2(self, tmp_path, capsys):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(ExperimentConfig(initial={"rho": [[0.0, -1.0]], "phi": [[0.0, 0.5]]}, t_end=5.0).to_json())
        assert run(["simulate", "--config", str(cfg), "--out", str(tmp_path / "x.csv")]) == 2
        assert "positivity" in capsys.readouterr().err

    def test_series_zero_table(self, tmp_path):
        out = tmp_path / "s.csv"
        assert run(["series", "--a0", "0", "--a1", "0", "--a2", "0", "--c0", "0", "--order", "50",
                    "--out", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == ["n", "a_n", "bound", "margin"]
        assert len(rows) == 52
        assert all(float(r[1]) == 0 for r in rows[1:])

    def test_check_global(self, capsys):
        assert run(["series", "check-global", "--c0", "0.5", "--c1", "0.5", "--c2", "1", "--c3", "1"]) == 0
        assert "global solution asserted" in capsys.readouterr().out
        run(["series", "check-global", "--c0", "0.5", "--c1", "0.5", "--c2", "0", "--c3", "1"])
        out = capsys.readouterr().out
        assert "undefined" in out and "condition not met" in out

    def test_invariants(self, tmp_path):
        point = tmp_path / "p.json"
        point.write_text((E(1, 1, "e1,2", 0) + E(1, 1, "f1,2", 0)).to_json())
        out = tmp_path / "i.csv"
        assert run(["invariants", "--point", str(point), "--out", str(out)]) == 0
        rows = read_csv(out)
        assert rows[0] == ["name", "k", "j", "invariant", "value"]
        assert rows[1] == ["I1,0", "2", "0", "1", "2"]
        assert rows[2] == ["I1,1", "2", "1", "1", "0"]
        assert run(["invariants", "--all", "--point", str(point), "--out", str(out)]) == 0
        assert read_csv(out)[3] == ["I1,2", "2", "2", "0", "0"]

    def test_reduce(self, tmp_path):
        y = principal_f(1, 1) + E(1, 1, "e1,2", 0, 3) + E(1, 1, "h1", 1, Fraction(1, 2))
        src = tmp_path / "y.json"
        src.write_text(y.to_json())
        out = tmp_path / "r.json"
        assert run(["reduce", "--input", str(src), "--out", str(out)]) == 0
        res = json.loads(out.read_text())
        assert len(res["section_coordinates"]) == 2
        assert TakiffElement.from_dict(res["s"]).exact

    def test_reduce_off_section(self, tmp_path, capsys):
        src = tmp_path / "y.json"
        src.write_text((principal_f(1, 1) + E(1, 1, "f1,2", 1)).to_json())
        assert run(["reduce", "--input", str(src)]) == 1
        assert "f1,2" in capsys.readouterr().err

    def test_check(self, capsys):
        assert run(["check", "--seed", "0"]) == 0
        assert "FAIL" not in capsys.readouterr().out

    @pytest.mark.parametrize("argv", [["frobnicate"], ["simulate", "--bogus"], [], ["simulate", "--rank", "x"]])
    def test_usage_errors(self, argv, capsys):
        assert run(argv) == 1
        assert "usage" in capsys.readouterr().err

    def test_invalid_cartan(self, capsys):
        assert run(["simulate", "--type", "D", "--rank", "2", "--t-end", "0.1", "--out", "-"]) == 1
        assert "error" in capsys.readouterr().err

    def test_missing_config(self, tmp_path):
        assert run(["simulate", "--config", str(tmp_path / "nope.json")]) == 1
