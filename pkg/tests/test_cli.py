import csv
import json
import math

import numpy as np
import pytest

from conftest import random_hermitian, random_state
from itqsl.cli import (
    CSV_HEADER,
    EXIT_IO,
    EXIT_NUMERIC,
    EXIT_OK,
    EXIT_SCHEMA,
    main,
    parse_config,
    run,
    sweep,
)
from itqsl.errors import HermiticityError, ParseError, SchemaError


def write(tmp_path, obj, name="scenario.json"):
    path = tmp_path / name
    path.write_text(obj if isinstance(obj, str) else json.dumps(obj), encoding="utf-8")
    return path


TWO_LEVEL = {"kind": "two_level", "theta0": 0.7853981633974483, "energy": 1, "horizon": 1}
GROVER = {"kind": "grover", "dimension": 1024, "e_w": 0, "e_perp": 1, "epsilon": 0.01, "horizon": 10}


def pairs(m):
    m = np.atleast_1d(m)
    if m.ndim == 1:
        return [[float(z.real), float(z.imag)] for z in m]
    return [pairs(row) for row in m]


class TestParseConfig:
    def test_minimal_two_level(self, tmp_path):
        cfg = parse_config(write(tmp_path, TWO_LEVEL))
        assert cfg.kind == "two_level" and cfg.num_steps == 1000
        assert cfg.tolerances == {"saturation": 1e-6, "residual": 1e-8, "quadrature": 1e-8}
        assert cfg.outputs["trajectory_csv"] == "trajectory.csv"

    def test_grover_nonpositive_gap(self, tmp_path):
        with pytest.raises(SchemaError, match="NonPositiveGap"):
            parse_config(write(tmp_path, {**GROVER, "e_perp": 0}))

    def test_grover_nonpositive_gap_without_convergence(self, tmp_path):
        cfg = {k: v for k, v in GROVER.items() if k != "epsilon"}
        assert parse_config(write(tmp_path, {**cfg, "e_perp": -1})).params["e_perp"] == -1

    def test_custom_not_hermitian(self, tmp_path):
        m = [[[1, 0], [0.25, 0]], [[0, 0], [0, 0]]]
        with pytest.raises(HermiticityError) as info:
            parse_config(write(tmp_path, {"kind": "custom", "hamiltonian": m,
                                          "initial_state": [[1, 0], [0, 0]], "horizon": 1}))
        # independent: max |m - m^dagger| over entries
        arr = np.array([[1, 0.25], [0, 0]])
        assert info.value.max_deviation == np.max(np.abs(arr - arr.T)) == 0.25

    def test_parse_error_position(self, tmp_path):
        with pytest.raises(ParseError) as info:
            parse_config(write(tmp_path, '{"kind": "two_level",\n  "theta0": }'))
        assert info.value.line == 2

    def test_invalid_utf8(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_bytes(b'{"kind": "\xff"}')
        with pytest.raises(ParseError):
            parse_config(path)

    @pytest.mark.parametrize("patch,field", [
        ({"energy": 1, "dimension": 4}, "dimension"),
        ({"num_steps": 7}, "num_steps"),
        ({"horizon": 0}, "horizon"),
        ({"horizon": "1"}, "horizon"),
        ({"theta0": 2.0}, "theta0"),
        ({"kind": "unitary"}, "kind"),
        ({"tolerances": {"speed": 1}}, "tolerances.speed"),
    ])
    def test_schema_errors(self, tmp_path, patch, field):
        with pytest.raises(SchemaError) as info:
            parse_config(write(tmp_path, {**TWO_LEVEL, **patch}))
        assert info.value.field == field

    def test_missing_field(self, tmp_path):
        with pytest.raises(SchemaError) as info:
            parse_config(write(tmp_path, {"kind": "two_level", "theta0": 0.5, "horizon": 1}))
        assert info.value.field == "energy"


class TestRun:
    def test_two_level(self, tmp_path):
        rep = run(parse_config(write(tmp_path, TWO_LEVEL)), tmp_path)
        d = rep.data
        assert d["qsl"]["saturated"] is True
        assert abs(d["two_level"]["closed_form_integral"] - d["qsl"]["path_length"]) <= 1e-8
        with open(tmp_path / "trajectory.csv", newline="") as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == CSV_HEADER and len(rows) == 1002
        assert float(rows[-1][0]) == 1.0

    def test_grover_crossing(self, tmp_path):
        d = run(parse_config(write(tmp_path, GROVER)), tmp_path).data["grover"]
        assert abs(d["measured_crossing_time"] - d["runtime_bound_exact"]) <= 1e-6
        assert abs(d["runtime_bound_exact"] - 8.070417568963904608729) <= 1e-12

    def test_custom_random(self, tmp_path, rng):
        h, psi0 = random_hermitian(rng, 4), random_state(rng, 4)
        cfg = {"kind": "custom", "hamiltonian": pairs(h.matrix), "initial_state": pairs(psi0.amplitudes),
               "horizon": 2.0}
        path = write(tmp_path, cfg)
        assert main([ "run", str(path), "--out-dir", str(tmp_path), "--quiet"]) == EXIT_OK
        d = json.loads((tmp_path / "report.json").read_text())
        assert d["qsl_inequality_holds"] is True
        assert d["qsl"]["theta_T"] <= d["qsl"]["path_length"]

    def test_custom_target_state(self, tmp_path):
        cfg = {"kind": "custom", "hamiltonian": [[[1, 0], [0, 0]], [[0, 0], [0, 0]]],
               "initial_state": [[1, 0], [1, 0]], "target_state": [[1, 0], [0, 0]], "horizon": 1.0,
               "num_steps": 10}
        rep = run(parse_config(write(tmp_path, cfg)), write=False)
        # |<0|phi(1)>|^2 = e^{-2} / (1 + e^{-2})
        assert abs(rep.trajectory_rows[-1][4] - math.exp(-2) / (1 + math.exp(-2))) <= 1e-15

    def test_deterministic_and_round_trip(self, tmp_path):
        path = write(tmp_path, GROVER)
        a, b = tmp_path / "a", tmp_path / "b"
        assert main(["run", str(path), "--out-dir", str(a), "--quiet", "--steps", "200"]) == EXIT_OK
        assert main(["run", str(path), "--out-dir", str(b), "--quiet", "--steps", "200"]) == EXIT_OK
        for name in ("trajectory.csv", "report.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()
        text = (a / "report.json").read_text()
        data = json.loads(text)
        assert json.dumps(data, sort_keys=True, indent=2) + "\n" == text
        assert data["scenario"]["num_steps"] == 200

    def test_csv_precision(self, tmp_path):
        rep = run(parse_config(write(tmp_path, TWO_LEVEL)), tmp_path)
        with open(tmp_path / "trajectory.csv", newline="") as fh:
            rows = list(csv.reader(fh))[1:]
        parsed = np.array([[float(x) for x in r] for r in rows])
        assert np.array_equal(parsed, np.array(rep.trajectory_rows))


class TestExitCodes:
    def test_check_ok(self, tmp_path, capsys):
        assert main(["check", str(write(tmp_path, TWO_LEVEL))]) == EXIT_OK
        assert "ok" in capsys.readouterr().out

    def test_schema(self, tmp_path):
        assert main(["check", str(write(tmp_path, {"kind": "two_level"})), "--quiet"]) == EXIT_SCHEMA

    def test_parse(self, tmp_path):
        assert main(["run", str(write(tmp_path, "{not json")), "--quiet"]) == EXIT_SCHEMA

    def test_odd_steps_override(self, tmp_path):
        assert main(["run", str(write(tmp_path, TWO_LEVEL)), "--steps", "5", "--quiet"]) == EXIT_SCHEMA

    def test_missing_file(self, tmp_path):
        assert main(["run", str(tmp_path / "nope.json"), "--quiet"]) == EXIT_IO

    def test_unwritable_output(self, tmp_path):
        blocker = tmp_path / "file"
        blocker.write_text("x")
        code = main(["run", str(write(tmp_path, TWO_LEVEL)), "--out-dir", str(blocker / "sub"), "--quiet"])
        assert code == EXIT_IO

    def test_numeric_failure(self, tmp_path, monkeypatch):
        from itqsl import cli
        from itqsl.errors import EigFailure

        def boom(*a, **k):
            raise EigFailure("no convergence")

        monkeypatch.setattr(cli, "propagate_exact", boom)
        assert main(["run", str(write(tmp_path, TWO_LEVEL)), "--quiet"]) == EXIT_NUMERIC


class TestSweep:
    def test_dimension_log_scaling(self, tmp_path):
        cfg = parse_config(write(tmp_path, {**GROVER, "num_steps": 200}))
        results = sweep(cfg, "dimension", [16, 64, 256, 1024], tmp_path)
        times = [r.data["grover"]["measured_crossing_time"] for _, r, _ in results]
        for (n1, t1), (n2, t2) in zip(zip([16, 64, 256], times), zip([64, 256, 1024], times[1:])):
            assert abs((t2 - t1) - 0.5 * math.log((n2 - 1) / (n1 - 1))) <= 1e-6
        with open(tmp_path / "sweep.csv", newline="") as fh:
            rows = list(csv.DictReader(fh))
        assert [r["value"] for r in rows] == ["16", "64", "256", "1024"]
        assert all(r["error"] == "" for r in rows)

    def test_theta0_all_saturated(self, tmp_path):
        # two-level paths are great-circle arcs for every initial angle
        cfg = parse_config(write(tmp_path, TWO_LEVEL))
        results = sweep(cfg, "theta0", [math.pi / 8, math.pi / 4, 3 * math.pi / 8], write=False)
        assert all(abs(r.data["qsl"]["slack"]) <= 1e-10 for _, r, _ in results)

    def test_empty(self, tmp_path):
        path = write(tmp_path, TWO_LEVEL)
        assert main(["sweep", str(path), "--param", "energy", "--values", "", "--out-dir", str(tmp_path),
                     "--quiet"]) == EXIT_OK
        assert (tmp_path / "sweep.csv").read_text().count("\n") == 1

    def test_per_run_errors(self, tmp_path):
        cfg = parse_config(write(tmp_path, TWO_LEVEL))
        results = sweep(cfg, "energy", [1.0, -1.0, 2.0], tmp_path)
        assert [err == "" for _, _, err in results] == [True, False, True]
        rows = list(csv.DictReader(open(tmp_path / "sweep.csv", newline="")))
        assert "SchemaError" in rows[1]["error"]

    def test_bad_param(self, tmp_path):
        cfg = parse_config(write(tmp_path, TWO_LEVEL))
        with pytest.raises(SchemaError):
            sweep(cfg, "e_w", [0.0])
