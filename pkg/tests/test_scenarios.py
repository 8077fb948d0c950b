"""Scenario runner: CSV output, manifests, ensembles, failure handling."""
import json
import math

import numpy as np
import pytest

from nlspin.config import parse_config
from nlspin.errors import IntegrationDivergedError
from nlspin.scenarios import member_seeds, run_scenario

ONE_SPIN = """\
scenario: one_spin_fixed_point
seed: 3
sample_stride: 5
integrator:
  dt: 1.0e-3
  t_final: 1.0
model:
  omega: [0.0, 0.0, 1.0]
  target_axis: [0.8, 0.0, -0.6]
  drive_rate: 0.25
  initial_bloch: [0.6, -0.64, 0.48]
"""

DISENTANGLE = """\
scenario: disentangle
seed: 9
sample_stride: 10
integrator:
  dt: 5.0e-3
  t_final: 5.0
model:
  drive_rate: 1.0
  initial_entanglement: 0.3
"""

THERMAL_SMALL = """\
scenario: thermalization
seed: 101
ensemble_size: 3
sample_stride: 20
integrator:
  dt: 1.0e-3
  t_final: 5.0
model:
  omega: [0.0, 0.0, 10.0]
  target_axis: [0.0, 0.0, 1.0]
  drive_rate: 5.0
  initial_bloch: [1.0, 0.0, 0.0]
noise:
  variance: 10.0
  correlation_time: 5.0
  t_total: 500.0
  n_grid: 2048
"""


def read_csv(path):
    lines = path.read_text(encoding="utf-8").splitlines()
    header = lines[0].split(",")
    data = np.array([[float(x) for x in line.split(",")] for line in lines[1:]])
    return header, data


class TestSingleRun:
    def test_one_spin_outputs(self, tmp_path):
        result = run_scenario(parse_config(ONE_SPIN), output=tmp_path / "run")
        header, data = read_csv(result.output_dir / "trajectory.csv")
        assert header == ["t", "k_x", "k_y", "k_z"]
        assert data.shape == (201, 4)
        assert data[0, 0] == 0.0
        assert data[-1, 0] == pytest.approx(1.0)
        # on-sphere throughout
        norms = np.linalg.norm(data[:, 1:], axis=1)
        assert np.max(np.abs(norms - 1)) < 1e-8

    def test_manifest_checksums(self, tmp_path):
        import hashlib

        result = run_scenario(parse_config(ONE_SPIN), output=tmp_path / "run")
        manifest = json.loads((result.output_dir / "run_manifest.json").read_text())
        assert manifest["scenario"] == "one_spin_fixed_point"
        assert manifest["schema_version"] == 1
        for name, digest in manifest["files"].items():
            payload = (result.output_dir / name).read_bytes()
            assert hashlib.sha256(payload).hexdigest() == digest

    def test_rerun_byte_identical(self, tmp_path):
        a = run_scenario(parse_config(ONE_SPIN), output=tmp_path / "a")
        b = run_scenario(parse_config(ONE_SPIN), output=tmp_path / "b")
        assert (a.output_dir / "trajectory.csv").read_bytes() == \
            (b.output_dir / "trajectory.csv").read_bytes()
        assert a.files == b.files

    def test_two_spin_columns(self, tmp_path):
        result = run_scenario(parse_config(DISENTANGLE), output=tmp_path / "run")
        header, data = read_csv(result.output_dir / "trajectory.csv")
        assert header == ["t", "s1_x", "s1_y", "s1_z", "s2_x", "s2_y", "s2_z",
                          "purity", "abs_E", "R"]
        abs_e = data[:, 8]
        assert abs_e[0] == pytest.approx(0.3, abs=1e-12)
        assert np.all(np.diff(abs_e) <= 1e-9)
        purity = data[:, 7]
        assert np.all((purity >= 0.5 - 1e-12) & (purity <= 1.0 + 1e-12))

    def test_butterfly_report_written(self, tmp_path):
        cfg = parse_config("""\
scenario: butterfly
sample_stride: 4
integrator: {dt: 5.0e-3, t_final: 2.0}
model:
  drive_rate: 1.0
  base: singlet
  epsilon: 0.1
  psi_p: [[0.3, 0.4], [0.2, -0.1], [-0.5, 0.2], [0.1, 0.6]]
""")
        result = run_scenario(cfg, output=tmp_path / "run")
        report = json.loads((result.output_dir / "report.json").read_text())
        assert report["guarded_stationary"] is False
        meas = report["initial_s1"]
        pred = report["predicted_s1_plus"]
        assert abs(complex(meas[0], meas[1]) - complex(pred[0], pred[1])) < 0.03

    @pytest.mark.filterwarnings("ignore:overflow", "ignore:invalid value")
    def test_divergence_exit_path(self, tmp_path):
        cfg = parse_config("""\
scenario: custom
integrator: {dt: 1.0, t_final: 40.0, renormalize: false}
model:
  dim: 2
  drive_rate: 0.0
  hamiltonian:
    - [[900.0, 0.0], [0.0, 0.0]]
    - [[0.0, 0.0], [-900.0, 0.0]]
  rule: {type: fixed, target: [[1.0, 0.0], [0.0, 0.0]]}
  initial_state: [[0.6, 0.0], [0.8, 0.0]]
""")
        with pytest.raises(IntegrationDivergedError):
            run_scenario(cfg, output=tmp_path / "run")
        marker = json.loads((tmp_path / "run" / "FAILED.json").read_text())
        assert marker["failed"] is True
        assert (tmp_path / "run" / "run_manifest.json").exists()


class TestEnsemble:
    def test_member_seeds_deterministic(self):
        assert member_seeds(5, 4) == member_seeds(5, 4)
        assert member_seeds(5, 4) != member_seeds(6, 4)

    def test_aggregate_and_members(self, tmp_path):
        result = run_scenario(parse_config(THERMAL_SMALL), output=tmp_path / "run")
        header, data = read_csv(result.output_dir / "aggregate.csv")
        assert header == ["n_members", "kpar_mean", "kpar_stderr"]
        assert data[0, 0] == 3
        for i in range(3):
            assert (result.output_dir / f"member_{i:03d}" / "trajectory.csv").exists()
        # aggregate equals the mean of member time averages (second half)
        values = []
        for i in range(3):
            _, member = read_csv(result.output_dir / f"member_{i:03d}" / "trajectory.csv")
            kz = member[:, 3]
            values.append(kz[len(kz) // 2:].mean())
        assert data[0, 1] == pytest.approx(np.mean(values), abs=1e-12)
        assert data[0, 2] == pytest.approx(
            np.std(values, ddof=1) / math.sqrt(3), abs=1e-12)

    def test_ensemble_of_one_equals_single(self, tmp_path):
        single = THERMAL_SMALL.replace("ensemble_size: 3", "ensemble_size: 1")
        result = run_scenario(parse_config(single), output=tmp_path / "run")
        header, data = read_csv(result.output_dir / "trajectory.csv")
        assert header[0] == "t"
        assert result.summaries[0]["longitudinal_average"] == pytest.approx(
            data[len(data) // 2:, 3].mean(), abs=1e-12)

    def test_parallel_matches_serial(self, tmp_path):
        serial = run_scenario(parse_config(THERMAL_SMALL), output=tmp_path / "s", jobs=1)
        parallel = run_scenario(parse_config(THERMAL_SMALL), output=tmp_path / "p", jobs=2)
        assert serial.files == parallel.files

    def test_identical_master_seed_identical_aggregate(self, tmp_path):
        a = run_scenario(parse_config(THERMAL_SMALL), output=tmp_path / "a")
        b = run_scenario(parse_config(THERMAL_SMALL), output=tmp_path / "b")
        assert (a.output_dir / "aggregate.csv").read_bytes() == \
            (b.output_dir / "aggregate.csv").read_bytes()


class TestSeedSensitivity:
    def test_seed_changes_noisy_trajectory(self, tmp_path):
        base = parse_config(THERMAL_SMALL.replace("ensemble_size: 3", "ensemble_size: 1"))
        other = parse_config(
            THERMAL_SMALL.replace("ensemble_size: 3", "ensemble_size: 1"),
            seed_override=999,
        )
        a = run_scenario(base, output=tmp_path / "a")
        b = run_scenario(other, output=tmp_path / "b")
        assert (a.output_dir / "trajectory.csv").read_bytes() != \
            (b.output_dir / "trajectory.csv").read_bytes()
