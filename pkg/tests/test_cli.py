"""Subprocess smoke tests for every subcommand plus the exit-code contract."""

import json
import os
import subprocess

import numpy as np
import pytest

from modalsound import box_mesh, save_stl, wav_read

CLI = "modalsound"


def run(*argv, env=None, cwd=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run([CLI, *argv], capture_output=True, text=True,
                          env=full_env, cwd=cwd, timeout=300)


@pytest.fixture(scope="module")
def workdir(tmp_path_factory):
    """shapes -> modal -> ffat -> render chain on a plastic plate."""
    d = tmp_path_factory.mktemp("cli")
    r = run("shapes", "plate", str(d / "plate.vgrid"), "--res", "6")
    assert r.returncode == 0, r.stderr
    r = run("modal", str(d / "plate.vgrid"), str(d / "plate.modes"),
            "--material", "plastic", "--modes", "4", "--tol", "1e-6",
            "--threads", "1")
    assert r.returncode == 0, r.stderr
    (d / "events.json").write_text(json.dumps(
        [{"t": 0.0, "vertex": 0, "dir": [0, 0, -1], "amp": 1.0}]))
    return d


def test_shapes_writes_grid(workdir):
    assert (workdir / "plate.vgrid").exists()
    r = run("shapes", "cube", str(workdir / "cube.vgrid"), "--res", "4")
    assert r.returncode == 0
    assert "64 voxels" in r.stdout


def test_modal_reports_modes(workdir):
    r = run("modal", str(workdir / "plate.vgrid"), str(workdir / "again.modes"),
            "--material", "plastic", "--modes", "4", "--threads", "1")
    assert r.returncode == 0, r.stderr
    assert "4 modes" in r.stdout
    assert "freq_hz" in r.stdout


def test_check_equivalence_passes(workdir):
    r = run("check-equivalence", str(workdir / "plate.vgrid"), "--trials", "3",
            "--material", "plastic")
    assert r.returncode == 0, r.stderr
    assert "PASS" in r.stdout
    assert "stiffness" in r.stdout and "mass" in r.stdout


def test_ffat_writes_maps(workdir):
    r = run("ffat", str(workdir / "plate.vgrid"), str(workdir / "plate.modes"),
            str(workdir / "plate"), "--mode-index", "0", "--png")
    assert r.returncode == 0, r.stderr
    assert (workdir / "plate_mode00.ffat").exists()
    assert (workdir / "plate_mode00.png").exists()


def test_render_writes_wav(workdir):
    # depends on the map from the ffat test; regenerate to stay order-free
    run("ffat", str(workdir / "plate.vgrid"), str(workdir / "plate.modes"),
        str(workdir / "plate"), "--mode-index", "0")
    r = run("render", str(workdir / "plate.modes"), str(workdir / "plate"),
            str(workdir / "events.json"), str(workdir / "tap.wav"),
            "--duration", "0.3")
    assert r.returncode == 0, r.stderr
    assert "excluded" in r.stdout          # modes 1..3 have no maps
    rate, pcm = wav_read(workdir / "tap.wav")
    assert rate == 44100
    assert np.abs(pcm).max() > 0


def test_voxelize_mesh(tmp_path):
    save_stl(box_mesh(size=(0.1, 0.1, 0.1)), tmp_path / "box.stl")
    r = run("voxelize", str(tmp_path / "box.stl"), str(tmp_path / "box.vgrid"),
            "--res", "4")
    assert r.returncode == 0, r.stderr
    assert "64 voxels" in r.stdout
    assert (tmp_path / "box.vgrid").exists()


def test_pipeline_end_to_end(tmp_path):
    r = run("pipeline", "--shape", "plate", "--res", "6", "--material", "plastic",
            "--modes", "4", "--duration", "0.3", "--out", str(tmp_path),
            "--threads", "1")
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "plate.vgrid").exists()
    assert (tmp_path / "plate.modes").exists()
    assert (tmp_path / "plate.wav").exists()
    assert (tmp_path / "plate_mode00.ffat").exists()
    assert "wrote" in r.stdout


def test_bench_writes_tables(tmp_path):
    r = run("bench", "--out", str(tmp_path), "--shapes", "bar", "--seeds", "2",
            "--res", "6", "--tols", "1e-2", "--threads", "1")
    assert r.returncode == 0, r.stderr
    assert (tmp_path / "bench.csv").exists()
    assert (tmp_path / "bench.md").exists()
    assert "lobpcg-random" in (tmp_path / "bench.csv").read_text()


def test_global_flags_position_independent(tmp_path):
    r1 = run("--seed", "3", "shapes", "blob", str(tmp_path / "a.vgrid"), "--res", "8")
    r2 = run("shapes", "blob", str(tmp_path / "b.vgrid"), "--res", "8", "--seed", "3")
    assert r1.returncode == 0 and r2.returncode == 0
    assert (tmp_path / "a.vgrid").read_bytes() == (tmp_path / "b.vgrid").read_bytes()


def test_exit_code_2_on_input_errors(tmp_path):
    r = run("modal", str(tmp_path / "missing.vgrid"), str(tmp_path / "o.modes"))
    assert r.returncode == 2
    r = run("shapes", "cube", str(tmp_path / "x.vgrid"), "--res", "200")
    assert r.returncode == 2
    assert "error" in r.stderr
    r = run("shapes", "cube", str(tmp_path / "y.vgrid"), "--threads", "0")
    assert r.returncode == 2


def test_exit_code_2_on_unknown_material(workdir, tmp_path):
    r = run("modal", str(workdir / "plate.vgrid"), str(tmp_path / "o.modes"),
            "--material", "adamantium")
    assert r.returncode == 2
    assert "adamantium" in r.stderr


def test_exit_code_3_on_numerical_failure(tmp_path):
    # ceramic cube at coarse resolution: no mode passes the radiation bounds
    r = run("pipeline", "--shape", "cube", "--res", "3", "--material", "ceramic",
            "--modes", "4", "--duration", "0.2", "--out", str(tmp_path))
    assert r.returncode == 3
    assert "numerical failure" in r.stderr


def test_env_override_validation(workdir, tmp_path):
    r = run("ffat", str(workdir / "plate.vgrid"), str(workdir / "plate.modes"),
            str(tmp_path / "m"), env={"MODALSOUND_SOUND_SPEED": "fast"})
    assert r.returncode == 2
    assert "MODALSOUND_SOUND_SPEED" in r.stderr


def test_env_override_changes_physics(workdir, tmp_path):
    # a slow medium pushes kappa*h past the panel bound for every mode
    r = run("ffat", str(workdir / "plate.vgrid"), str(workdir / "plate.modes"),
            str(tmp_path / "m"), env={"MODALSOUND_SOUND_SPEED": "20"})
    assert r.returncode == 3
    assert "kappa*h" in (r.stdout + r.stderr)


def test_pipeline_deterministic_across_runs(tmp_path):
    args = ("pipeline", "--shape", "plate", "--res", "6", "--material", "plastic",
            "--modes", "4", "--duration", "0.3", "--seed", "9", "--threads", "1")
    r1 = run(*args, "--out", str(tmp_path / "r1"))
    r2 = run(*args, "--out", str(tmp_path / "r2"))
    assert r1.returncode == 0 and r2.returncode == 0
    for name in ("plate.modes", "plate.wav", "plate_mode00.ffat"):
        assert (tmp_path / "r1" / name).read_bytes() == \
               (tmp_path / "r2" / name).read_bytes()
