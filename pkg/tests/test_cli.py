import json

import numpy as np
import pandas as pd
import pytest
import yaml

from ldg2of import ldg_driver
from ldg2of.common.errors import EXIT_ANALYSIS, EXIT_IO, EXIT_NO_CONVERGENCE, EXIT_OK, EXIT_USAGE
from ldg2of.common.types import EscapeConfig, MaterialParams
from ldg2of.conformal.construct import b0_conformal_cfield, conformal_field
from ldg2of.energy.b0 import q_from_cfield
from ldg2of.energy.functionals import limit_energy
from ldg2of.grid.fieldio import read_field, read_sidecar, write_field
from ldg2of.grid.fields import DirectorField, QField


def run(*argv):
    return ldg_driver.run(list(argv) + ["-q"])


@pytest.fixture
def radial_file(tmp_path):
    path = tmp_path / "n.bin"
    assert run("conformal", "--grid", "24", "--out", str(path)) == EXIT_OK
    return path


def test_conformal(radial_file):
    n = read_field(radial_file)
    assert isinstance(n, DirectorField)
    meta = read_sidecar(radial_file)
    assert meta.command == "conformal"
    assert meta.resolution == 24
    assert meta.results["boundary_degree"] == 1
    assert meta.results["escape_nodes"] == [list(n.grid.node_of(0.0, 0.0))]


def test_conformal_with_q_output(tmp_path):
    q_path = tmp_path / "q.bin"
    assert run("conformal", "--grid", "24", "--m", "-2", "--escape", "0.3,0;-0.3,0",
               "--out", str(tmp_path / "n.bin"), "--q-out", str(q_path)) == EXIT_OK
    assert isinstance(read_field(q_path), QField)
    assert read_sidecar(q_path).results["boundary_degree"] == -2


def test_mixed_field(tmp_path):
    path = tmp_path / "mixed.bin"
    assert run("conformal", "--grid", "24", "--escape=-0.3,0", "--poles", "0.3,0", "--out", str(path)) == EXIT_OK
    assert read_sidecar(path).results["boundary_degree"] == 0


def test_escape_point_count_must_match(tmp_path):
    assert run("conformal", "--grid", "24", "--m", "2", "--escape", "0,0",
               "--out", str(tmp_path / "n.bin")) == EXIT_USAGE
    assert not (tmp_path / "n.bin").exists()


def test_missing_output(tmp_path):
    assert run("conformal", "--grid", "24") == EXIT_USAGE


def test_short_eps_ladder(tmp_path):
    assert run("verify-expansion", "--grid", "16", "--eps-list", "0.2,0.1") == EXIT_ANALYSIS


def test_minimize_writes_partial_result(tmp_path):
    out = tmp_path / "q.bin"
    status = run("minimize", "--grid", "16", "--eps", "0.1", "--max-iterations", "20", "--out", str(out))
    assert status == EXIT_NO_CONVERGENCE
    q = read_field(out)
    assert isinstance(q, QField)
    with open(tmp_path / "q.report.json", "r", encoding="utf-8") as f:
        report = json.load(f)
    assert report["converged"] is False
    assert report["solve"]["iterations"] == 20
    assert read_sidecar(out).results["status"] == "max iterations"


def test_minimize_from_input(tmp_path, radial_file):
    out = tmp_path / "q.bin"
    status = run("minimize", "--grid", "24", "--init", "input", "--input", str(radial_file),
                 "--max-iterations", "5", "--out", str(out))
    assert status == EXIT_NO_CONVERGENCE
    assert read_sidecar(out).inputs == [str(radial_file)]
    assert run("minimize", "--grid", "32", "--init", "input", "--input", str(radial_file),
               "--out", str(out)) == EXIT_USAGE


def test_failed_ladder_still_writes_its_report(tmp_path):
    report_path = tmp_path / "ladder.json"
    status = run("verify-expansion", "--grid", "12", "--eps-list", "0.2,0.15,0.1", "--max-iterations", "5",
                 "--flow-time", "0", "--report", str(report_path))
    assert status == EXIT_NO_CONVERGENCE
    with open(report_path, "r", encoding="utf-8") as f:
        report = json.load(f)
    assert report["eps"] == []
    assert report["checks"][-1]["name"] == "solver_converged"
    assert report["checks"][-1]["passed"] is False
    assert report["solves"][-1]["converged"] is False
    meta = read_sidecar(report_path)
    assert meta.results == {"passed": False, "completed": 0}


def test_ladder_starts_warm_unless_told_otherwise():
    args = ldg_driver.parse_args(["verify-expansion"])
    assert args.warm_start is True
    assert args.flow_time is None
    args = ldg_driver.parse_args(["verify-expansion", "--cold-start", "--flow-time", "2.5"])
    assert args.warm_start is False
    assert args.flow_time == 2.5


def test_minimize_is_deterministic(tmp_path):
    first, second = tmp_path / "a.bin", tmp_path / "b.bin"
    for out in (first, second):
        assert run("minimize", "--grid", "16", "--eps", "0.2", "--max-iterations", "30",
                   "--out", str(out)) == EXIT_NO_CONVERGENCE
    assert first.read_bytes() == second.read_bytes()


def test_minimize_without_b2_uses_the_c_field_limit(tmp_path):
    out = tmp_path / "q0.bin"
    status = run("minimize", "--grid", "16", "--b2", "0", "--eps", "0.1", "--max-iterations", "20",
                 "--out", str(out))
    assert status == EXIT_NO_CONVERGENCE
    q = read_field(out)
    params = MaterialParams(a2=1.0, b2=0.0, c2=1.0, eps=0.1)
    limit = b0_conformal_cfield(1, [(0.0, 0.0)], q.grid)
    expected = 0.5 * q.grid.dirichlet_energy(q_from_cfield(limit, params).values)
    reference = read_sidecar(out).results["energy"]["reference"]
    assert reference == pytest.approx(expected, rel=1e-12)
    assert reference != pytest.approx(limit_energy(conformal_field(EscapeConfig(m=1, points=[(0.0, 0.0)]), q.grid),
                                                   MaterialParams(eps=0.1)), rel=1e-6)
    assert run("minimize", "--grid", "16", "--b2", "0", "--init", "lift", "--out", str(out)) == EXIT_USAGE


def test_schlieren(tmp_path, radial_file):
    png = tmp_path / "n.png"
    assert run("schlieren", "--input", str(radial_file), "--out", str(png)) == EXIT_OK
    assert png.read_bytes()[:4] == b"\x89PNG"
    meta = read_sidecar(png)
    assert meta.results["undefined_pixels"] == 1


def test_schlieren_of_a_vertical_field(tmp_path, radial_file):
    n = read_field(radial_file)
    values = np.zeros(n.grid.shape + (3,))
    values[n.grid.active] = [0.0, 0.0, 1.0]
    path = tmp_path / "vertical.bin"
    write_field(path, DirectorField(n.grid, values))
    assert run("schlieren", "--input", str(path), "--out", str(tmp_path / "v.png")) == EXIT_USAGE


def test_schlieren_of_a_missing_file(tmp_path):
    assert run("schlieren", "--input", str(tmp_path / "none.bin"), "--out", str(tmp_path / "x.png")) == EXIT_IO


def test_radius_sweep(tmp_path):
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--grid", "32", "--radius-range", "0,0.6,0.2", "--out", str(out)) == EXIT_OK
    frame = pd.read_csv(out)
    assert len(frame) == 4
    assert list(frame.columns[:5]) == ["cfg_id", "m", "points", "E0", "W_ldg"]
    assert "boundary_approach" in read_sidecar(out).results


def test_sweep_from_config_file(tmp_path):
    configs = tmp_path / "configs.yaml"
    configs.write_text(yaml.safe_dump([{"m": 1, "points": [[0.1, 0.0]]},
                                       {"m": 2, "points": [[0.3, 0.0], [-0.3, 0.0]], "alpha": 0.5}]))
    out = tmp_path / "sweep.csv"
    assert run("sweep", "--grid", "24", "--configs", str(configs), "--out", str(out)) == EXIT_OK
    assert pd.read_csv(out)["m"].tolist() == [1, 2]


class TestConfigFile:

    @pytest.fixture
    def config(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_text(yaml.safe_dump({"common": {"grid": 20, "a2": 2.0},
                                        "conformal": {"m": 1, "escape": "0.1,0"},
                                        "minimize": {"max-iterations": 7}}))
        return path

    def test_defaults_from_yaml(self, config):
        args = ldg_driver.parse_args(["conformal", "--config", str(config), "--out", "n.bin"])
        assert args.grid == 20
        assert args.a2 == 2.0
        assert args.escape == "0.1,0"

    def test_command_line_wins(self, config):
        args = ldg_driver.parse_args(["conformal", "--config", str(config), "--grid", "24", "--out", "n.bin"])
        assert args.grid == 24
        args = ldg_driver.parse_args(["minimize", "--config", str(config), "--out", "q.bin"])
        assert args.max_iterations == 7
        assert args.grid == 20

    def test_unknown_key(self, tmp_path):
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump({"conformal": {"resolution": 20}}))
        with pytest.raises(SystemExit) as info:
            ldg_driver.parse_args(["conformal", "--config", str(path), "--out", "n.bin"])
        assert info.value.code == EXIT_USAGE

    def test_missing_config(self, tmp_path):
        with pytest.raises(SystemExit) as info:
            ldg_driver.parse_args(["conformal", "--config", str(tmp_path / "none.yaml"), "--out", "n.bin"])
        assert info.value.code == EXIT_IO


def test_main_exit_code(tmp_path, monkeypatch):
    monkeypatch.setattr("sys.argv", ["ldg2of", "conformal", "--grid", "16", "-q", "--out", str(tmp_path / "n.bin")])
    with pytest.raises(SystemExit) as info:
        ldg_driver.main()
    assert info.value.code == EXIT_OK
