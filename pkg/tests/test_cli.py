from __future__ import annotations

import hashlib
import json
import math
import subprocess
import sys

import pytest

from adrsim.cli import (
    CSV_HEADER,
    METRICS,
    PRESETS,
    ResultRow,
    derive_seed,
    get_preset,
    load_scenario,
    main,
    read_csv,
    run_preset,
    write_csv,
)
from adrsim.sim import Scenario, ScenarioError


class TestLoadScenario:
    def test_empty_object_gives_defaults(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text("{}")
        s = load_scenario(p)
        assert s == Scenario()
        assert (s.radius_m, s.mean_interarrival_s, s.sf_init, s.tp_init) == (670.0, 600.0, 12, 14)

    def test_sigma(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{"sigma_db": 3.57}')
        assert load_scenario(p).sigma_db == 3.57

    def test_bad_sf_reports_line_and_field(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{\n  "n_devices": 10,\n  "sf_init": 6\n}\n')
        with pytest.raises(ScenarioError) as exc:
            load_scenario(p)
        assert exc.value.field == "sf_init" and exc.value.line == 3
        assert "s.json" in str(exc.value)

    def test_bad_tp(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{"tp_init": 10}')
        with pytest.raises(ScenarioError, match="tp_init"):
            load_scenario(p)

    def test_syntax_error_line(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{\n "a": 1,,\n}')
        with pytest.raises(ScenarioError) as exc:
            load_scenario(p)
        assert exc.value.line == 2

    def test_unknown_field(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{"sigmadb": 1}')
        with pytest.raises(ScenarioError, match="sigmadb"):
            load_scenario(p)

    def test_injections(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text(json.dumps({"n_devices": 3, "injections": [{"time": 100.0, "delta_db": 5, "devices": [1]},
                                                                 {"time": "warmup", "add_devices": 4}]}))
        s = load_scenario(p)
        assert s.n_total == 7 and s.injections[0].devices == (1,)


class TestCsv:
    def test_header_only(self, tmp_path):
        p = tmp_path / "r.csv"
        write_csv([], p)
        assert p.read_text() == ",".join(CSV_HEADER) + "\n"

    def test_round_trip(self, tmp_path):
        rows = [
            ResultRow("x", "sigma_db", 1.785, 0, 2**64 - 1, "convergence_min", 123.457),
            ResultRow("x", "n_devices", 100, 3, 5, "energy_mj", math.nan),
            ResultRow("x", "n_devices", 100, 3, 5, "converged", 20.0),
        ]
        p = tmp_path / "r.csv"
        write_csv(rows, p)
        back = read_csv(p)
        assert back[0] == rows[0] and back[2] == rows[2]
        assert math.isnan(back[1].metric_value)
        assert p.read_text().endswith("\n")

    def test_six_significant_digits(self, tmp_path):
        p = tmp_path / "r.csv"
        write_csv([ResultRow("x", "p", 0.1234567891, 0, 1, "m", 98765.4321)], p)
        assert p.read_text().splitlines()[1] == "x,p,0.123457,0,1,m,98765.4"

    def test_io_error_names_path(self, tmp_path):
        with pytest.raises(OSError, match="nope"):
            write_csv([], tmp_path / "nope" / "r.csv")

    def test_cardinality(self, tmp_path):
        rows = [ResultRow("x", "p", v, r, 0, m, 1.0) for v in (1, 2) for r in range(3) for m in ("a", "b")]
        write_csv(rows, tmp_path / "r.csv")
        assert len((tmp_path / "r.csv").read_text().splitlines()) == 13


class TestPresets:
    def test_every_study_has_one_preset(self):
        assert set(PRESETS) == {
            "network-size", "channel-variation", "link-increase", "link-decrease",
            "traffic-type", "n-packets", "ack-limit", "ack-delay",
        }

    def test_network_size_values(self):
        assert get_preset("network-size").values == (100, 500, 1000, 2000, 3000, 4000)

    def test_preset_builds_valid_scenarios(self):
        for p in PRESETS.values():
            for v in p.values:
                s = p.scenario(v, 1)
                if p.param == "delta_db":
                    assert s.injections[0].delta_db == v
                else:
                    assert getattr(s, p.param) == v

    def test_seed_derivation_stable(self):
        assert derive_seed(0, "ack-delay", 16, 0) == derive_seed(0, "ack-delay", 16, 0)
        assert len({derive_seed(0, "ack-delay", v, r) for v in (8, 16) for r in range(5)}) == 10
        digest = hashlib.blake2b(b"0:ack-delay:16:0", digest_size=8).digest()
        assert derive_seed(0, "ack-delay", 16, 0) == int.from_bytes(digest, "little")

    def test_one_rep_one_row_per_metric(self):
        res = run_preset("traffic-type", 3, repetitions=1, values=(0.0, 1.0))
        assert len(res.rows) == 2 * len(METRICS)
        assert res.aggregates[(0.0, "convergence_min")].count == 1

    def test_parallel_output_identical(self, tmp_path):
        a = run_preset("link-decrease", 5, parallelism=1, repetitions=2, values=(-5.0, -10.0))
        b = run_preset("link-decrease", 5, parallelism=2, repetitions=2, values=(-5.0, -10.0))
        write_csv(a.rows, tmp_path / "a.csv")
        write_csv(b.rows, tmp_path / "b.csv")
        assert (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()

    def test_bad_override_is_validation_error(self):
        with pytest.raises(ScenarioError):
            run_preset("ack-delay", 0, repetitions=1, overrides={"sf_init": 6})


class TestMain:
    def test_list(self, capsys):
        assert main(["list-presets"]) == 0
        assert "ack-delay" in capsys.readouterr().out

    def test_run(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{"n_devices": 5, "sim_duration_s": 20000}')
        out = tmp_path / "o.csv"
        assert main(["run", "--scenario", str(p), "--seed", "7", "--out", str(out)]) == 0
        rows = read_csv(out)
        assert {r.metric for r in rows} == set(METRICS) and rows[0].seed == 7

    def test_validation_exit_code(self, tmp_path):
        p = tmp_path / "s.json"
        p.write_text('{"sf_init": 6}')
        assert main(["run", "--scenario", str(p), "--out", str(tmp_path / "o.csv")]) == 1

    def test_bad_flag_exit_code(self):
        with pytest.raises(SystemExit) as exc:
            main(["preset", "no-such", "--out", "x.csv"])
        assert exc.value.code == 1

    def test_runtime_exit_code(self, tmp_path):
        assert main(["run", "--scenario", str(tmp_path / "missing.json"), "--out", str(tmp_path / "o.csv")]) == 2

    def test_preset_with_override(self, tmp_path):
        out = tmp_path / "o.csv"
        code = main(["preset", "ack-delay", "--reps", "1", "--seed", "2", "--out", str(out), "--set", "sim_duration_s=300000"])
        assert code == 0
        assert len(read_csv(out)) == len(PRESETS["ack-delay"].values) * len(METRICS)

    def test_module_entry_point(self, tmp_path):
        proc = subprocess.run([sys.executable, "-m", "adrsim.cli", "list-presets"], capture_output=True, text=True)
        assert proc.returncode == 0 and "network-size" in proc.stdout
