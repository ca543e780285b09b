import csv
import json

import numpy as np
import pytest

from voxradar import cli, formats
from voxradar.config import (
    ConfigError,
    PipelineConfig,
    config_from_dict,
    config_to_dict,
    load_config,
    save_config,
)
from voxradar.framefilter import Pooling, init_model, read_model, write_model
from voxradar.framefilter.network import PARAM_ORDER
from voxradar.reconstruct import reconstruct_grid
from voxradar.scenesim import SceneScript, Trajectory, scene_script_to_dict
from voxradar.synthetic import DEG, Rig, body, room_clutter


@pytest.fixture
def setup(tmp_path):
    rig = Rig()
    cfg_path = tmp_path / "cfg.json"
    save_config(cfg_path, PipelineConfig(rig.chirp, rig.geom, rig.spec))
    bg_scene = tmp_path / "bg.json"
    bg_scene.write_text(json.dumps(scene_script_to_dict(SceneScript(room_clutter()))))
    return tmp_path, str(cfg_path), str(bg_scene)


def run(*argv):
    return cli.main([str(a) for a in argv])


def person_script(ghost_epoch=None, epochs=5):
    parts = body(1.5, 0.0, 10 * DEG)
    trajs = [Trajectory(((0, (p.r, p.theta, p.phi)), (epochs - 1, (p.r, p.theta, p.phi))),
                        p.amplitude, p.tag) for p in parts]
    ghosts = []
    if ghost_epoch is not None:
        # source index 5 is the torso: 4 clutter reflectors come first
        ghosts.append({"epoch": ghost_epoch, "source": 5, "detour_m": 0.3, "dtheta_rad": 0.1,
                       "dphi_rad": 0.1, "amplitude_fraction": 2.0})
    return scene_script_to_dict(SceneScript(room_clutter(), trajs, ghosts))


def calibrated(tmp_path, cfg, bg_scene):
    assert run("--config", cfg, "simulate", bg_scene, "--out", tmp_path / "bgf", "--epochs", 3) == 0
    frames = sorted((tmp_path / "bgf").glob("*.hicf"))
    assert run("--config", cfg, "calibrate", *frames, "--out", tmp_path / "bg.hgrd") == 0
    return tmp_path / "bg.hgrd"


# -- config -------------------------------------------------------------------------

def test_config_roundtrip(tmp_path):
    cfg = PipelineConfig(keep_fraction=0.25, seed=9)
    back = config_from_dict(config_to_dict(cfg))
    assert back.grid.dims == cfg.grid.dims and back.keep_fraction == 0.25 and back.seed == 9
    save_config(tmp_path / "c.json", cfg)
    assert load_config(tmp_path / "c.json").seed == 9
    assert load_config(None) == PipelineConfig()


def test_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        config_from_dict({"keep_fraction": 2})
    with pytest.raises(ConfigError):
        config_from_dict({"grid": {"r_res_m": -1}})
    (tmp_path / "bad.json").write_text("{not json")
    with pytest.raises(ConfigError):
        load_config(tmp_path / "bad.json")


def test_invalid_config_exit_2(tmp_path):
    (tmp_path / "c.json").write_text('{"iso_fraction": 0}')
    assert run("--config", tmp_path / "c.json", "inspect", tmp_path / "c.json") == 2
    assert run("--config", tmp_path / "missing.json", "inspect", tmp_path / "c.json") == 2


# -- simulate ----------------------------------------------------------------------------

def test_simulate_empty_scene(setup):
    tmp, cfg, _ = setup
    (tmp / "empty.json").write_text("{}")
    assert run("--config", cfg, "simulate", tmp / "empty.json", "--out", tmp / "o", "--epochs", 3) == 0
    files = sorted((tmp / "o").glob("*.hicf"))
    assert [f.name for f in files] == ["frame_0000.hicf", "frame_0001.hicf", "frame_0002.hicf"]
    for f in files:
        assert not formats.read_frame(f).samples.any()


def test_simulate_deterministic_and_distinct(setup):
    tmp, cfg, _ = setup
    script = scene_script_to_dict(SceneScript(
        [], [Trajectory(((0, (1.0, 0.0, 0.0)), (4, (2.0, 0.1, 0.5))))]))
    (tmp / "t.json").write_text(json.dumps(script))
    for out in ("a", "b"):
        assert run("--config", cfg, "--seed", 3, "simulate", tmp / "t.json", "--out", tmp / out,
                   "--epochs", 5) == 0
    a = [p.read_bytes() for p in sorted((tmp / "a").iterdir())]
    b = [p.read_bytes() for p in sorted((tmp / "b").iterdir())]
    assert a == b and len(a) == 5
    assert len(set(a)) == 5


def test_simulate_unreadable_scene(setup):
    tmp, cfg, _ = setup
    (tmp / "bad.json").write_text('{"reflectors": [{"r_m": "x"}]}')
    assert run("--config", cfg, "simulate", tmp / "bad.json", "--out", tmp / "o") == 2
    assert run("--config", cfg, "simulate", tmp / "nope.json", "--out", tmp / "o") == 2


# -- calibrate -------------------------------------------------------------------------

def test_calibrate_single_frame_equals_reconstruction(setup):
    tmp, cfg, bg_scene = setup
    run("--config", cfg, "simulate", bg_scene, "--out", tmp / "f", "--epochs", 1)
    f = tmp / "f" / "frame_0000.hicf"
    assert run("--config", cfg, "calibrate", f, "--out", tmp / "bg.hgrd") == 0
    conf = load_config(cfg)
    expected = reconstruct_grid(formats.read_frame(f), conf.geometry, conf.chirp, conf.grid)
    got = formats.read_grid(tmp / "bg.hgrd")
    np.testing.assert_array_equal(got.values, expected.values.astype(np.float32))
    assert formats.read_sidecar(tmp / "bg.hgrd") == {"frame_count": 1, "creation_epoch": 0}


def test_calibrate_duplicates_idempotent(setup):
    tmp, cfg, bg_scene = setup
    run("--config", cfg, "simulate", bg_scene, "--out", tmp / "f", "--epochs", 1)
    f = tmp / "f" / "frame_0000.hicf"
    run("--config", cfg, "calibrate", f, "--out", tmp / "one.hgrd")
    run("--config", cfg, "calibrate", f, f, f, f, "--out", tmp / "four.hgrd")
    assert (tmp / "one.hgrd").read_bytes() == (tmp / "four.hgrd").read_bytes()


def test_calibrate_shape_mismatch_exit_3(setup):
    tmp, cfg, bg_scene = setup
    run("--config", cfg, "simulate", bg_scene, "--out", tmp / "f", "--epochs", 1)
    other = PipelineConfig(geometry=load_config(cfg).geometry.__class__(2, 6, 0.02, 0.02),
                           grid=load_config(cfg).grid)
    save_config(tmp / "other.json", other)
    run("--config", tmp / "other.json", "simulate", bg_scene, "--out", tmp / "g", "--epochs", 1)
    code = run("--config", cfg, "calibrate", tmp / "f" / "frame_0000.hicf",
               tmp / "g" / "frame_0000.hicf", "--out", tmp / "bg.hgrd")
    assert code == 3


def test_calibrate_corrupt_exit_5(setup):
    tmp, cfg, _ = setup
    (tmp / "x.hicf").write_bytes(b"JUNK" + bytes(64))
    assert run("--config", cfg, "calibrate", tmp / "x.hicf", "--out", tmp / "bg.hgrd") == 5


# -- pipeline --------------------------------------------------------------------------

def test_pipeline_missing_background_exit_4(setup):
    tmp, cfg, bg_scene = setup
    run("--config", cfg, "simulate", bg_scene, "--out", tmp / "f", "--epochs", 1)
    assert run("--config", cfg, "pipeline", tmp / "f" / "frame_0000.hicf",
               "--background", tmp / "nope.hgrd", "--out", tmp / "o") == 4


def test_pipeline_corrupt_frame_exit_5(setup):
    tmp, cfg, bg_scene = setup
    bg = calibrated(tmp, cfg, bg_scene)
    (tmp / "x_0001.hicf").write_bytes(b"HGRD" + bytes(64))
    assert run("--config", cfg, "pipeline", tmp / "x_0001.hicf", "--background", bg,
               "--out", tmp / "o") == 5


def test_pipeline_background_spec_mismatch_exit_3(setup):
    tmp, cfg, bg_scene = setup
    bg = calibrated(tmp, cfg, bg_scene)
    conf = load_config(cfg)
    d = config_to_dict(conf)
    d["grid"]["r_res_m"] = 0.1
    (tmp / "c2.json").write_text(json.dumps(d))
    frame = sorted((tmp / "bgf").glob("*.hicf"))[0]
    assert run("--config", tmp / "c2.json", "pipeline", frame, "--background", bg,
               "--out", tmp / "o") == 3


def test_pipeline_background_only_gives_empty_meshes(setup):
    tmp, cfg, bg_scene = setup
    bg = calibrated(tmp, cfg, bg_scene)
    run("--config", cfg, "simulate", bg_scene, "--out", tmp / "live", "--epochs", 3, "--start", 10)
    frames = sorted((tmp / "live").glob("*.hicf"))
    assert run("--config", cfg, "pipeline", *frames, "--background", bg, "--out", tmp / "o") == 0
    for e in (10, 11, 12):
        assert formats.read_obj(tmp / "o" / f"mesh_{e:04d}.obj").is_empty
        assert not formats.read_grid(tmp / "o" / f"grid_{e:04d}.hgrd").values.any()
        assert not formats.read_pgm(tmp / "o" / f"heatmap_{e:04d}.pgm").any()
    rows = list(csv.reader(open(tmp / "o" / "flags.csv")))
    assert rows[0] == ["epoch", "verdict", "flag"]
    assert rows[1:] == [[str(e), "regular", "fresh"] for e in (10, 11, 12)]


def test_pipeline_outputs_with_person(setup):
    tmp, cfg, bg_scene = setup
    bg = calibrated(tmp, cfg, bg_scene)
    (tmp / "p.json").write_text(json.dumps(person_script()))
    run("--config", cfg, "simulate", tmp / "p.json", "--out", tmp / "live", "--epochs", 2)
    frames = sorted((tmp / "live").glob("*.hicf"))
    assert run("--config", cfg, "pipeline", *frames, "--background", bg, "--out", tmp / "o") == 0
    mesh = formats.read_obj(tmp / "o" / "mesh_0000.obj")
    assert not mesh.is_empty and mesh.is_watertight()
    grid = formats.read_grid(tmp / "o" / "grid_0000.hgrd")
    assert grid.values.max() > 0
    assert formats.read_pgm(tmp / "o" / "heatmap_0000.pgm").max() == 65535


def test_pipeline_jobs_equal_sequential(setup):
    tmp, cfg, bg_scene = setup
    bg = calibrated(tmp, cfg, bg_scene)
    (tmp / "p.json").write_text(json.dumps(person_script(ghost_epoch=2)))
    run("--config", cfg, "simulate", tmp / "p.json", "--out", tmp / "live", "--epochs", 4)
    frames = sorted((tmp / "live").glob("*.hicf"))
    run("--config", cfg, "pipeline", *frames, "--background", bg, "--out", tmp / "seq")
    run("--config", cfg, "--jobs", 2, "pipeline", *frames, "--background", bg, "--out", tmp / "par")
    names = sorted(p.name for p in (tmp / "seq").iterdir())
    assert names == sorted(p.name for p in (tmp / "par").iterdir())
    for n in names:
        assert (tmp / "seq" / n).read_bytes() == (tmp / "par" / n).read_bytes(), n


def test_pipeline_no_model_equals_all_regular_model(setup):
    tmp, cfg, bg_scene = setup
    bg = calibrated(tmp, cfg, bg_scene)
    (tmp / "p.json").write_text(json.dumps(person_script(ghost_epoch=1)))
    run("--config", cfg, "simulate", tmp / "p.json", "--out", tmp / "live", "--epochs", 3)
    frames = sorted((tmp / "live").glob("*.hicf"))
    m = init_model(Pooling.MAX)
    for k in PARAM_ORDER:
        m.params[k] = np.zeros_like(m.params[k])
    m.params["fc_b"] = np.array([1.0, 0.0])
    write_model(tmp / "reg.hmdl", m)
    run("--config", cfg, "pipeline", *frames, "--background", bg, "--out", tmp / "a")
    run("--config", cfg, "pipeline", *frames, "--background", bg, "--model", tmp / "reg.hmdl",
        "--out", tmp / "b")
    for p in (tmp / "a").iterdir():
        assert p.read_bytes() == (tmp / "b" / p.name).read_bytes(), p.name


def test_pipeline_ghost_epoch_is_held(setup, trained_max):
    tmp, cfg, bg_scene = setup
    model, _, _ = trained_max
    write_model(tmp / "m.hmdl", model)
    bg = calibrated(tmp, cfg, bg_scene)
    (tmp / "p.json").write_text(json.dumps(person_script(ghost_epoch=2)))
    run("--config", cfg, "simulate", tmp / "p.json", "--out", tmp / "live", "--epochs", 5)
    frames = sorted((tmp / "live").glob("*.hicf"))
    assert run("--config", cfg, "pipeline", *frames, "--background", bg, "--model", tmp / "m.hmdl",
               "--out", tmp / "o") == 0
    rows = list(csv.DictReader(open(tmp / "o" / "flags.csv")))
    assert rows[2]["flag"] == "held" and rows[2]["verdict"] == "ambiguous"
    assert [r["flag"] for r in rows[:2]] == ["fresh", "fresh"]
    # the held epoch re-emits the last regular grid
    assert (tmp / "o" / "grid_0002.hgrd").read_bytes() == (tmp / "o" / "grid_0001.hgrd").read_bytes()


# -- train ---------------------------------------------------------------------------

@pytest.fixture
def small_manifest(setup):
    tmp, cfg, _ = setup
    assert run("--config", cfg, "dataset", "--out", tmp / "ds", "--count", 24) == 0
    return tmp / "ds" / "manifest.txt"


def test_train_zero_epochs(setup, small_manifest):
    tmp, cfg, _ = setup
    assert run("--config", cfg, "--seed", 5, "train", small_manifest, "--out", tmp / "m.hmdl",
               "--epochs", 0, "--history", tmp / "h.csv") == 0
    assert (tmp / "h.csv").read_text().splitlines() == ["epoch,running_loss,accuracy"]
    written = read_model(tmp / "m.hmdl")
    init = init_model(Pooling.MAX, seed=5)
    for k in PARAM_ORDER:
        np.testing.assert_array_equal(written.params[k], init.params[k].astype(np.float32))


def test_train_deterministic(setup, small_manifest):
    tmp, cfg, _ = setup
    for name in ("a", "b"):
        assert run("--config", cfg, "train", small_manifest, "--out", tmp / f"{name}.hmdl",
                   "--epochs", 2, "--batch-size", 8, "--pooling", "avg") == 0
    assert (tmp / "a.hmdl").read_bytes() == (tmp / "b.hmdl").read_bytes()
    assert (tmp / "a.history.csv").read_bytes() == (tmp / "b.history.csv").read_bytes()
    assert len((tmp / "a.history.csv").read_text().splitlines()) == 3


def test_train_single_class_exit_6(setup, small_manifest):
    tmp, cfg, _ = setup
    lines = [l for l in small_manifest.read_text().splitlines() if l.endswith("regular")]
    one = small_manifest.parent / "one.txt"
    one.write_text("\n".join(lines) + "\n")
    assert run("--config", cfg, "train", one, "--out", tmp / "m.hmdl") == 6


def test_train_bad_manifest_exit_2(setup):
    tmp, cfg, _ = setup
    (tmp / "m.txt").write_text("only-one-field\n")
    assert run("--config", cfg, "train", tmp / "m.txt", "--out", tmp / "m.hmdl") == 2


# -- inspect -------------------------------------------------------------------------

def test_inspect_headers(setup, capsys):
    tmp, cfg, bg_scene = setup
    bg = calibrated(tmp, cfg, bg_scene)
    write_model(tmp / "m.hmdl", init_model(Pooling.AVG))
    capsys.readouterr()
    frame = sorted((tmp / "bgf").glob("*.hicf"))[0]
    assert run("inspect", frame, bg, tmp / "m.hmdl") == 0
    out = [json.loads(l) for l in capsys.readouterr().out.splitlines()]
    assert out[0]["format"] == "HICF" and out[0]["T"] == 128
    assert out[1]["format"] == "HGRD" and out[1]["sidecar"]["frame_count"] == 3
    assert out[2]["format"] == "HMDL" and out[2]["pooling"] == "avg"


def test_inspect_corrupt_exit_5(tmp_path):
    (tmp_path / "x.bin").write_bytes(b"\x00\x01garbage")
    assert run("inspect", tmp_path / "x.bin") == 5


def test_epoch_from_filename():
    assert cli._epoch_of("out/frame_0042.hicf", 7) == 42
    assert cli._epoch_of("noepoch.hicf", 7) == 7
