import subprocess
import sys

import numpy as np
import pytest
import yaml

from vanslbm import cli
from vanslbm.core import BlowUp
from vanslbm.demo import bundled_demo
from vanslbm.geometry import COIL, CoilWire, read_mask, write_coil_csv
from vanslbm.solver import Simulation

from conftest import write_tube_case


def test_validate_bundled_demo(capsys):
    assert cli.main(["validate", bundled_demo()]) == cli.EXIT_OK
    assert "active cells" in capsys.readouterr().out


def test_validate_config_flag(tube_case):
    assert cli.main(["validate", "--config", tube_case]) == cli.EXIT_OK


def test_usage_errors(capsys):
    assert cli.main(["run", "--bogus"]) == cli.EXIT_USAGE
    assert cli.main([]) == cli.EXIT_USAGE
    assert cli.main(["run"]) == cli.EXIT_USAGE
    assert "usage" in capsys.readouterr().err


def test_missing_config_is_io_error(tmp_path):
    assert cli.main(["run", str(tmp_path / "none.yaml")]) == cli.EXIT_IO


def test_bad_config_is_config_error(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"run": {"outlet": "free"}}))
    assert cli.main(["validate", str(path)]) == cli.EXIT_CONFIG


def test_missing_mask_is_io_error(tmp_path):
    path = tmp_path / "c.yaml"
    path.write_text(yaml.safe_dump({"geometry": {"mask": "gone.vmask"}}))
    assert cli.main(["validate", str(path)]) == cli.EXIT_IO


def test_run_writes_outputs(tmp_path):
    path = write_tube_case(str(tmp_path), stop_time=0.0025, output_every=50)
    out = tmp_path / "out"
    assert cli.main(["run", path, "--output-dir", str(out), "--threads", "2"]) == cli.EXIT_OK
    assert len((out / "series.csv").read_text().splitlines()) == 1 + 3


def test_blow_up_exit_code(tmp_path, monkeypatch):
    path = write_tube_case(str(tmp_path), stop_time=0.0025)

    def boom(self, nsteps=1, trace=None):
        raise BlowUp("numerical blow-up in 1 cells", cell=(1, 2, 3))

    monkeypatch.setattr(Simulation, "step", boom)
    assert cli.main(["run", path, "--output-dir", str(tmp_path / "o")]) == cli.EXIT_RUNTIME


def test_voxelize_and_porosity(tmp_path):
    path = write_tube_case(str(tmp_path))
    mask = str(tmp_path / "tube.vmask")
    coil = str(tmp_path / "coil.csv")
    write_coil_csv(coil, CoilWire(np.array([[4e-4, 4.5e-4, 4.5e-4], [1e-3, 4.5e-4, 4.5e-4]])))
    out = str(tmp_path / "coiled.vmask")
    assert cli.main(["voxelize", coil, mask, "-o", out]) == cli.EXIT_OK
    assert np.count_nonzero(read_mask(out).data == COIL) > 0
    phi_path = str(tmp_path / "phi.npy")
    assert cli.main(["porosity", out, "-o", phi_path, "--window", "5e-4"]) == cli.EXIT_OK
    phi = np.load(phi_path)
    assert phi.shape == read_mask(out).dims and phi.min() < 1.0


def test_demo_geometry(tmp_path, capsys):
    assert cli.main(["demo-geometry", str(tmp_path / "d"), "--seed", "3",
                     "--packings", "0.2"]) == cli.EXIT_OK
    printed = capsys.readouterr().out.split()
    assert [p.rsplit("/", 1)[1] for p in printed] == ["uncoiled.yaml", "va_20.yaml", "fr_20.yaml"]
    assert cli.main(["validate", printed[1]]) == cli.EXIT_OK


def test_module_entry_point():
    res = subprocess.run([sys.executable, "-m", "vanslbm.cli", "--help"], capture_output=True,
                         text=True)
    assert res.returncode == 0 and "demo-geometry" in res.stdout


def test_bundled_demo_matches_generator(tmp_path):
    import filecmp
    import os

    from vanslbm.demo import write_demo

    fresh = write_demo(str(tmp_path), seed=0)
    shipped = os.path.dirname(bundled_demo())
    names = sorted(os.listdir(tmp_path))
    assert names == sorted(os.listdir(shipped)) and len(fresh) == 5
    _, mismatch, errors = filecmp.cmpfiles(str(tmp_path), shipped, names, shallow=False)
    assert not mismatch and not errors
