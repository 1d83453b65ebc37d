import json
from pathlib import Path

import numpy as np
import pytest

from beamsynth.cli import main as cli_main
from beamsynth.errors import ConfigurationError
from beamsynth.pipeline import (
    evaluate_solution,
    load_solution,
    save_solution,
    sinr_table,
    synthesize,
    write_synthesis_outputs,
)
from beamsynth.scenario import config_from_dict, load_config

SMALL_DOC = {
    "system": {"num_aps": 2, "num_antennas": 16},
    "spec": {"mainlobe_regions": [[-4, 4]], "null_regions": [[40, 48]],
             "eta_sl_db": -10.0, "eta_z_db": -20.0, "grid_step_deg": 2.0},
    "admm": {"itermax": 8},
    "channels": {"user_angles_deg": [0.0], "jammer_angles_deg": [44.0],
                 "jsr_db": 10.0, "snr_db": 10.0, "jsr_sweep_db": [0.0, 10.0, 20.0]},
    "seed": 7,
}


def write_config(tmp_path, doc=SMALL_DOC) -> Path:
    path = tmp_path / "config.json"
    path.write_text(json.dumps(doc))
    return path


class TestConfigParsing:
    def test_defaults_match_stated_values(self):
        config = config_from_dict({})
        assert config.rho == 1e-5
        assert config.itermax == 50
        assert config.spec.alpha == 1.05
        assert config.mode == "armijo"

    def test_offsets_default_to_zero(self):
        config = config_from_dict({"system": {"num_aps": 3}})
        assert config.ap_offsets_deg == [0.0, 0.0, 0.0]

    def test_offset_count_checked(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"system": {"num_aps": 3, "ap_offsets_deg": [0.0]}})

    def test_unfolded_requires_weights(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"unfolding": {"mode": "unfolded"}})

    def test_offset_pushing_spec_out_of_domain(self):
        doc = {"system": {"num_aps": 1, "ap_offsets_deg": [-10.0]},
               "spec": {"mainlobe_regions": [[-4, 4]], "sidelobe_regions": [[6, 85]]}}
        with pytest.raises(ConfigurationError):
            config_from_dict(doc)

    def test_bad_json_file(self, tmp_path):
        path = tmp_path / "broken.json"
        path.write_text("{nope")
        with pytest.raises(ConfigurationError):
            load_config(path)

    def test_dual_step_list_validated(self):
        with pytest.raises(ConfigurationError):
            config_from_dict({"admm": {"analog_dual_steps": [0.1, 0.2]}})

    def test_report_angles_cover_spec_samples(self):
        config = config_from_dict(SMALL_DOC)
        angles = config.report_angles()
        assert angles.min() == -90.0 and angles.max() == 90.0


class TestPipeline:
    def test_solution_round_trip(self, tmp_path):
        config = config_from_dict(SMALL_DOC)
        result = synthesize(config)
        path = tmp_path / "solution.json"
        save_solution(path, result)
        sol = load_solution(path)
        assert sol.num_aps == 2 and sol.num_antennas == 16
        for a, b in zip(sol.analog_weights, result.analog_weights):
            assert np.array_equal(a, b)
        assert np.array_equal(sol.w_bb, result.w_bb)

    def test_evaluate_reproduces_synthesize_report(self, tmp_path):
        config = config_from_dict(SMALL_DOC)
        result = synthesize(config)
        path = tmp_path / "solution.json"
        save_solution(path, result)
        report, table = evaluate_solution(config, load_solution(path))
        assert np.array_equal(report.gains_db, result.report.gains_db)
        assert report.to_dict() == result.report.to_dict()

    def test_jsr_sweep_row_count(self):
        config = config_from_dict(SMALL_DOC)
        result = synthesize(config)
        table = sinr_table(config, result.analog_weights, result.w_bb)
        assert len(table) == 3
        assert [row.jsr_db for row in table] == [0.0, 10.0, 20.0]
        # stronger jamming cannot improve the rate
        rates = [row.sum_rate for row in table]
        assert rates[0] >= rates[1] >= rates[2]

    def test_corrupted_solution_rejected(self, tmp_path):
        path = tmp_path / "solution.json"
        path.write_text(json.dumps({"format_version": "1", "num_aps": 1}))
        with pytest.raises(ConfigurationError):
            load_solution(path)

    def test_non_unit_weights_rejected(self, tmp_path):
        config = config_from_dict(SMALL_DOC)
        result = synthesize(config)
        path = tmp_path / "solution.json"
        save_solution(path, result)
        doc = json.loads(path.read_text())
        doc["analog"][0]["real"] = [2.0] * 16
        doc["analog"][0]["imag"] = [0.0] * 16
        path.write_text(json.dumps(doc))
        with pytest.raises(ConfigurationError):
            load_solution(path)

    def test_workers_do_not_change_result(self):
        seq = synthesize(config_from_dict({**SMALL_DOC, "workers": 1}))
        par = synthesize(config_from_dict({**SMALL_DOC, "workers": 2}))
        for a, b in zip(seq.analog_weights, par.analog_weights):
            assert np.array_equal(a, b)
        assert np.array_equal(seq.w_bb, par.w_bb)

    def test_outputs_written(self, tmp_path):
        config = config_from_dict(SMALL_DOC)
        result = synthesize(config)
        paths = write_synthesis_outputs(tmp_path, result)
        for key in ("solution", "pattern", "report", "trace_digital"):
            assert paths[key].exists()
        pattern = paths["pattern"].read_text().splitlines()
        assert pattern[0] == "angle_deg,gain_db"
        assert len(pattern) == result.report_angles.size + 1


class TestCli:
    def test_synthesize_writes_files_and_figures(self, tmp_path, capsys):
        config = write_config(tmp_path)
        out = tmp_path / "out"
        code = cli_main(["synthesize", "--config", str(config), "--out", str(out)])
        assert code in (0, 3)  # small scenario may miss thresholds
        for name in ("solution.json", "pattern.csv", "report.json",
                     "pattern.png", "convergence.png", "trace_analog_ap0.csv"):
            assert (out / name).exists(), name

    def test_evaluate_bit_exact_outputs(self, tmp_path):
        config = write_config(tmp_path)
        out1 = tmp_path / "a"
        cli_main(["synthesize", "--config", str(config), "--out", str(out1)])
        out2 = tmp_path / "b"
        code = cli_main(["evaluate", "--config", str(config), "--out", str(out2),
                         "--solution", str(out1 / "solution.json")])
        assert code in (0, 3)
        assert (out1 / "report.json").read_bytes() == (out2 / "report.json").read_bytes()
        assert (out1 / "pattern.csv").read_bytes() == (out2 / "pattern.csv").read_bytes()
        assert (out2 / "sinr.csv").read_text().splitlines()[0].startswith("jsr_db,")

    def test_missing_config_is_usage_error(self, tmp_path):
        code = cli_main(["synthesize", "--config", str(tmp_path / "missing.json"),
                         "--out", str(tmp_path)])
        assert code == 1

    def test_corrupted_solution_is_usage_error(self, tmp_path):
        config = write_config(tmp_path)
        bad = tmp_path / "bad.json"
        bad.write_text("{}")
        code = cli_main(["evaluate", "--config", str(config), "--out", str(tmp_path),
                         "--solution", str(bad)])
        assert code == 1

    def test_verdict_failure_exit_code(self, tmp_path):
        doc = json.loads(json.dumps(SMALL_DOC))
        doc["spec"]["eta_z_db"] = -90.0  # unreachable null depth
        doc["spec"]["eta_sl_db"] = -80.0
        config = write_config(tmp_path, doc)
        code = cli_main(["synthesize", "--config", str(config),
                         "--out", str(tmp_path / "out")])
        assert code == 3

    def test_bench_scaling_csv(self, tmp_path):
        doc = json.loads(json.dumps(SMALL_DOC))
        doc["system"]["num_antennas"] = 8
        doc["admm"]["itermax"] = 3
        config = write_config(tmp_path, doc)
        out = tmp_path / "bench"
        code = cli_main(["bench-scaling", "--config", str(config), "--out", str(out),
                         "--node-counts", "1,2,3", "--runs", "2"])
        assert code == 0
        lines = (out / "scaling.csv").read_text().splitlines()
        assert lines[0] == "num_aps,median_time_s,slope,intercept,r_squared"
        assert len(lines) == 4
        assert (out / "scaling.png").exists()

    def test_impairment_study_outputs(self, tmp_path):
        imp = tmp_path / "imp.json"
        imp.write_text(json.dumps({"rows": 4, "cols": 4, "sigma_p": 0.2,
                                   "itermax": 10, "eta_z_db": -30.0}))
        config = write_config(tmp_path)
        out = tmp_path / "imp_out"
        code = cli_main(["impairment-study", "--config", str(config), "--out", str(out),
                         "--impairments", str(imp)])
        assert code == 0
        for name in ("pattern_ideal.csv", "pattern_uncorrected.csv",
                     "pattern_compensated.csv", "impairment.png"):
            assert (out / name).exists()
        lines = (out / "pattern_ideal.csv").read_text().splitlines()
        assert lines[0] == "az_deg,el_deg,gain_db"

    def test_compare_requires_weights(self, tmp_path):
        config = write_config(tmp_path)
        code = cli_main(["compare-stepsize", "--config", str(config),
                         "--out", str(tmp_path), "--instances", "2"])
        assert code == 1
