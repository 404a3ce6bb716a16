import json

import jsonschema
import numpy as np
import pytest

from cvpbt import bounds, two_port
from cvpbt.cli import EXIT_BUDGET, EXIT_OK, EXIT_TOLERANCE, EXIT_VALIDATION, main, read_table, result_table_schema


def run(tmp_path, *argv, name="out.csv"):
    out = tmp_path / name
    code = main(list(argv) + ["--out", str(out)])
    return code, out


def strip_timestamp(text: str) -> str:
    return "\n".join(
        line for line in text.splitlines() if not line.startswith("# timestamp=") and '"timestamp"' not in line
    )


class TestTwoPortCoherent:
    def test_vacuum_table(self, tmp_path):
        code, out = run(
            tmp_path,
            "twoport-coherent",
            "--lambda-x", "0.5",
            "--lambda-y", "0.5",
            "--alpha", "0",
            "--cutoff", "20",
        )
        assert code == EXIT_OK
        table = read_table(str(out))
        assert table.metadata["trace"] == pytest.approx(1.0, abs=1e-9)
        assert table.metadata["regime"] == "positive"
        assert table.metadata["trace_norm_vs_vacuum"] == pytest.approx(0.21488, abs=1e-3)
        # diagonal output: every off-diagonal row is zero
        for row, col, real, imag in table.rows:
            if row != col:
                assert real == 0 and imag == 0

    def test_formats_round_trip(self, tmp_path):
        _, csv_out = run(
            tmp_path, "twoport-coherent", "--lambda-x", "0.4", "--lambda-y", "0.6",
            "--alpha", "0.3+0.2j", "--cutoff", "12",
        )
        _, json_out = run(
            tmp_path, "twoport-coherent", "--lambda-x", "0.4", "--lambda-y", "0.6",
            "--alpha", "0.3+0.2j", "--cutoff", "12", "--format", "json", name="out.json",
        )
        a, b = read_table(str(csv_out)), read_table(str(json_out))
        assert a.columns == b.columns
        assert np.allclose(np.array(a.rows, float), np.array(b.rows, float), atol=0)

    def test_validation_error(self, tmp_path):
        code, _ = run(tmp_path, "twoport-coherent", "--lambda-x", "1.5", "--lambda-y", "0.5")
        assert code == EXIT_VALIDATION


class TestEnergy:
    def test_zero_resource_row(self, tmp_path):
        code, out = run(
            tmp_path, "energy", "--lambda-x-range", "0:0:1", "--lambda-y-range", "0.2:0.8:4",
        )
        assert code == EXIT_OK
        table = read_table(str(out))
        assert all(row[2] == 0 for row in table.rows)

    def test_monotone_in_resource(self, tmp_path):
        code, out = run(
            tmp_path, "energy", "--lambda-x-range", "0.1:0.7:7", "--lambda-y-range", "0.5:0.5:1",
        )
        table = read_table(str(out))
        vals = [row[2] for row in table.rows]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_matches_module(self, tmp_path):
        _, out = run(tmp_path, "energy", "--lambda-x-range", "0.5:0.5:1", "--lambda-y-range", "0.5:0.5:1")
        table = read_table(str(out))
        expected = two_port.max_output_energy(two_port.ChannelParams(0.5, 0.5))
        assert table.rows[0][2] == pytest.approx(expected, abs=1e-12)


class TestBounds:
    def test_lossy_positive(self, tmp_path):
        code, out = run(
            tmp_path, "bounds", "--kind", "lossy", "--lambda-x", "0.5", "--lambda-y", "0.5",
            "--energy-range", "0:4:5",
        )
        assert code == EXIT_OK
        table = read_table(str(out))
        assert table.metadata["variant"] == "positive"
        assert table.rows[0][1] == pytest.approx(
            bounds.lossy_diamond_bound_positive(0, two_port.ChannelParams(0.5, 0.5)), abs=1e-12
        )

    def test_lossy_routes_negative_regime(self, tmp_path):
        code, out = run(
            tmp_path, "bounds", "--kind", "lossy", "--lambda-x", "0.1", "--lambda-y", "0.1",
            "--energy-range", "0:1:3",
        )
        assert code == EXIT_OK
        assert read_table(str(out)).metadata["variant"] == "negative-envelope"

    def test_edrc_equals_direct_norm(self, tmp_path):
        from cvpbt.fock import Cutoff, trace_norm
        from cvpbt.two_port import apply_coherent

        code, out = run(tmp_path, "bounds", "--kind", "edrc", "--lambda-x", "0.5", "--lambda-y", "0.5")
        assert code == EXIT_OK
        value = read_table(str(out)).rows[0][1]
        p = two_port.ChannelParams(0.5, 0.5)
        delta = apply_coherent(0, p, Cutoff(60)).matrix - bounds.edrc_apply(
            0, bounds.EdrcParams.matched(p), Cutoff(60)
        ).matrix
        assert value == pytest.approx(trace_norm(delta), abs=1e-10)

    def test_sim_zero_delta(self, tmp_path):
        lam = 2**-0.25
        code, out = run(
            tmp_path, "bounds", "--kind", "sim", "--lambda-x", str(lam), "--lambda-y", str(lam),
            "--delta-range", "0:0.1:3",
        )
        assert code == EXIT_OK
        table = read_table(str(out))
        expected = 2 * bounds.edrc_diamond_norm(two_port.ChannelParams(lam, lam))
        assert table.rows[0][1] == pytest.approx(expected, abs=1e-12)

    def test_missing_range_is_validation_error(self, tmp_path):
        code, _ = run(tmp_path, "bounds", "--kind", "lossy", "--lambda-x", "0.5", "--lambda-y", "0.5")
        assert code == EXIT_VALIDATION


class TestFidelitySweep:
    def test_values_in_unit_interval(self, tmp_path):
        code, out = run(
            tmp_path, "fidelity-sweep", "--input", "bell2", "--ports", "3",
            "--lambda-x-range", "0.2:0.6:3", "--lambda-y-range", "0.2:0.6:3",
        )
        assert code == EXIT_OK
        table = read_table(str(out))
        assert all(0 <= row[2] <= 1 for row in table.rows)
        assert table.metadata["cap_policy"] == "adaptive(1e-10)"

    def test_tmsv_requires_lambda_in(self, tmp_path):
        code, _ = run(
            tmp_path, "fidelity-sweep", "--input", "tmsv",
            "--lambda-x-range", "0.3:0.3:1", "--lambda-y-range", "0.3:0.3:1",
        )
        assert code == EXIT_VALIDATION


class TestOracleVerify:
    def test_passes_at_adequate_cutoff(self, tmp_path):
        code, out = run(
            tmp_path, "oracle-verify", "--lambda-x", "0.5", "--lambda-y", "0.5",
            "--cutoff", "12", "--a-max", "2", "--b-max", "2", "--format", "json", name="report.json",
        )
        assert code == EXIT_OK
        table = read_table(str(out))
        assert table.metadata["passed"] is True

    def test_three_port_verification_run(self, tmp_path):
        code, out = run(
            tmp_path, "oracle-verify", "--ports", "3", "--lambda-x", "0.4", "--lambda-y", "0.4",
            "--cutoff", "8", "--a-max", "2", "--b-max", "2", "--tol", "1e-5",
            "--format", "json", name="r3.json",
        )
        assert code == EXIT_OK
        meta = read_table(str(out)).metadata
        assert meta["passed"] is True
        assert meta["max_deviation"] <= 1e-5

    def test_negative_control_small_cutoff(self, tmp_path):
        code, _ = run(
            tmp_path, "oracle-verify", "--lambda-x", "0.5", "--lambda-y", "0.5",
            "--cutoff", "4", "--a-max", "1", "--b-max", "1",
        )
        assert code == EXIT_TOLERANCE

    def test_budget_refusal(self, tmp_path, monkeypatch):
        monkeypatch.setenv("CVPBT_MEM_BUDGET_MB", "0.05")
        code, _ = run(
            tmp_path, "oracle-verify", "--lambda-x", "0.5", "--lambda-y", "0.5",
            "--cutoff", "12", "--a-max", "1", "--b-max", "1",
        )
        assert code == EXIT_BUDGET


class TestTableFormat:
    def test_deterministic_modulo_timestamp(self, tmp_path):
        _, out1 = run(tmp_path, "energy", "--lambda-x-range", "0.1:0.6:4", "--lambda-y-range", "0.2:0.7:4", name="a.csv")
        _, out2 = run(tmp_path, "energy", "--lambda-x-range", "0.1:0.6:4", "--lambda-y-range", "0.2:0.7:4", name="b.csv")
        a = strip_timestamp(out1.read_text())
        b = strip_timestamp(out2.read_text())
        assert a == b

    def test_json_validates_against_schema(self, tmp_path):
        _, out = run(
            tmp_path, "energy", "--lambda-x-range", "0.2:0.4:2", "--lambda-y-range", "0.5:0.5:1",
            "--format", "json", name="e.json",
        )
        doc = json.loads(out.read_text())
        jsonschema.validate(doc, result_table_schema())

    def test_metadata_carries_tolerances(self, tmp_path):
        _, out = run(tmp_path, "energy", "--lambda-x-range", "0.2:0.4:2", "--lambda-y-range", "0.5:0.5:1")
        assert "tol" in read_table(str(out)).metadata

    def test_csv_seventeen_digit_roundtrip(self, tmp_path):
        _, out = run(tmp_path, "energy", "--lambda-x-range", "0.123456789:0.2:2", "--lambda-y-range", "0.5:0.5:1")
        table = read_table(str(out))
        direct = two_port.max_output_energy(two_port.ChannelParams(0.123456789, 0.5))
        assert table.rows[0][2] == direct  # bit-exact through the text round trip


class TestConfigFile:
    def test_config_supplies_defaults_cli_overrides(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text(json.dumps({"lambda_x": 0.3, "lambda_y": 0.5, "cutoff": 10}))
        code, out = run(
            tmp_path, "twoport-coherent", "--config", str(cfg), "--lambda-x", "0.4", name="c.csv",
        )
        assert code == EXIT_OK
        meta = read_table(str(out)).metadata
        assert meta["lambda_x"] == 0.4  # flag wins
        assert meta["lambda_y"] == 0.5  # config fills the gap
        assert meta["cutoff"] == 10

    def test_bad_config_is_validation_error(self, tmp_path):
        cfg = tmp_path / "cfg.json"
        cfg.write_text("[1, 2]")
        code = main(["twoport-coherent", "--config", str(cfg), "--lambda-x", "0.4", "--lambda-y", "0.5"])
        assert code == EXIT_VALIDATION
