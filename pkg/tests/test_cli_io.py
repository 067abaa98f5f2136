from __future__ import annotations

import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from annulus_wrinkles import ConfigError, RunConfig, load_measure, parse_config, save_measure
from annulus_wrinkles.cli import main, run_command
from annulus_wrinkles.config import DEFAULT_SCHEDULE, DEFAULT_TOLERANCES
from annulus_wrinkles.io import GAMMA_COLUMNS, read_csv, write_csv, write_gamma_table


class TestParseConfig:
    def test_minimal(self):
        cfg = parse_config('{"lame": {"T_in": 1.8, "T_out": 1, "R_in": 1, "R_out": 2}}')
        assert cfg.lame.T_in == 1.8 and cfg.schedule == DEFAULT_SCHEDULE
        assert cfg.tolerances == DEFAULT_TOLERANCES and cfg.grids.nr == 200

    def test_list_form_and_deferred_hypothesis(self):
        # inadmissible loads parse; the commands decide what to do with them
        cfg = parse_config('{"lame": [1.0, 1.0, 1.0, 2.0]}')
        assert cfg.lame.T_in == 1.0

    @pytest.mark.parametrize(
        "text, path",
        [
            ('{"tolerances": {"gradient": -1}}', "tolerances.gradient"),
            ('{"tolerances": {"gradiant": 1e-6}}', "tolerances.gradiant"),
            ('{"grids": {"nr": 2.5}}', "grids.nr"),
            ('{"grids": {"theta_count": 7}}', "grids.theta_count"),
            ('{"lame": {"T_in": 1.8}}', "lame.T_out"),
            ('{"lame": {"T_in": -1, "T_out": 1, "R_in": 1, "R_out": 2}}', "lame.T_in"),
            ('{"schedule": {"L": []}}', "schedule.L"),
            ('{"seed": -3}', "seed"),
            ('{"colour": 1}', "colour"),
        ],
    )
    def test_rejections_carry_key_path(self, text, path):
        with pytest.raises(ConfigError) as info:
            parse_config(text)
        assert info.value.path == path
        assert str(info.value).startswith(path)

    def test_invalid_json(self):
        with pytest.raises(ConfigError):
            parse_config("{not json")

    def test_schedule_range(self):
        cfg = parse_config('{"schedule": {"start": 1e6, "stop": 1e12, "num": 4}}')
        np.testing.assert_allclose(cfg.schedule, [1e6, 1e8, 1e10, 1e12])

    @settings(max_examples=40, deadline=None)
    @given(
        st.floats(1e-14, 1.0),
        st.integers(8, 4096),
        st.lists(st.floats(20.0, 1e13), min_size=1, max_size=6),
        st.integers(0, 2**64 - 1),
    )
    def test_round_trip_hash(self, tol, nr, Ls, seed):
        cfg = RunConfig(tolerances={**DEFAULT_TOLERANCES, "gradient": tol}, schedule=tuple(sorted(Ls)), seed=seed)
        cfg = cfg.with_overrides(nr=nr)
        again = parse_config(cfg.to_json())
        assert again == cfg
        assert again.config_hash() == cfg.config_hash()
        assert parse_config(json.dumps(json.loads(cfg.to_json()), indent=4)).config_hash() == cfg.config_hash()


class TestFiles:
    def test_csv_round_trip(self, tmp_path):
        rows = [(0.1, 1 / 3), (2.0, np.float64(np.pi))]
        path = write_csv(tmp_path / "t.csv", ("a", "b"), rows)
        header, data = read_csv(path)
        assert header == ["a", "b"]
        np.testing.assert_array_equal(data, np.array(rows, dtype=float))

    def test_measure_round_trip(self, tmp_path, minimizer):
        save_measure(minimizer.mu, tmp_path / "m")
        mu = load_measure(tmp_path / "m")
        np.testing.assert_array_equal(mu.b, minimizer.mu.b)
        np.testing.assert_array_equal(mu.k_set, minimizer.mu.k_set)
        np.testing.assert_array_equal(mu.r_grid.nodes, minimizer.mu.r_grid.nodes)

    def test_gamma_table_header(self, tmp_path, gamma_rows):
        path = write_gamma_table(tmp_path / "g.csv", gamma_rows)
        header, data = read_csv(path)
        assert tuple(header) == GAMMA_COLUMNS
        np.testing.assert_allclose(data[:, 0], DEFAULT_SCHEDULE)
        np.testing.assert_allclose(data[:, header.index("total")], [r.total for r in gamma_rows])


class TestCommands:
    def _cfg(self, out):
        return RunConfig(output_dir=str(out)).with_overrides(relaxed_nodes=257, nr=40, nk=8, energy_nr=257,
                                                             theta_count=32)

    def test_relaxed_manifest(self, tmp_path):
        m = run_command("relaxed", self._cfg(tmp_path))
        assert m.status == "ok"
        for name in m.files:
            assert (tmp_path / name).exists()
        summary = json.loads((tmp_path / "relaxed.json").read_text())
        np.testing.assert_allclose(summary["R0"], 1.2535780125465172, rtol=1e-14)
        assert summary["oracle"]["verdict"] == "quadratic root"
        assert "runtime" not in json.dumps(summary)

    def test_bitwise_reproducible(self, tmp_path):
        a, b = tmp_path / "a", tmp_path / "b"
        for out in (a, b):
            cfg = self._cfg(out)
            run_command("minimize", cfg)
            run_command("energy-eval", cfg)
        for name in ("minimize.json", "measure.csv", "measure.json", "energy.json"):
            assert (a / name).read_bytes() == (b / name).read_bytes()

    def test_recover_from_saved_measure(self, tmp_path):
        cfg = self._cfg(tmp_path)
        run_command("minimize", cfg)
        code = main(["recover", "--measure", str(tmp_path / "measure"), "--L", "1e6", "--out", str(tmp_path)])
        assert code == 0
        header, data = read_csv(tmp_path / "gamma_table.csv")
        assert tuple(header) == GAMMA_COLUMNS and data.shape == (1, len(GAMMA_COLUMNS))
        manifest = json.loads((tmp_path / "manifest_recover.json").read_text())
        assert "gamma_table.csv" in manifest["files"] and manifest["status"] == "ok"

    def test_bad_config_exit_status(self, tmp_path, capsys):
        bad = tmp_path / "bad.json"
        bad.write_text('{"tolerances": {"gamma_gap": -1}}')
        assert main(["relaxed", "--config", str(bad), "--out", str(tmp_path)]) == 2
        assert "tolerances.gamma_gap" in capsys.readouterr().err

    def test_unknown_command(self):
        with pytest.raises(ValueError):
            run_command("plot", RunConfig())
