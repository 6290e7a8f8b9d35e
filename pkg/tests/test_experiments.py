import json

import numpy as np
import pytest

from spscan import ConfigurationError
from spscan.cli import cli_main
from spscan.experiments import (
    ALGORITHMS,
    RunConfig,
    SweepSection,
    build_dataset,
    run_algorithm,
    run_probe_sweep,
)
from spscan.io import read_csv

SMALL = {
    "seed": 3,
    "dataset": {"width": 24, "height": 24, "n_images": 10, "r_max": 8.0},
    "grid": 10,
    "square_side": 1.25,
    "circle_diameter": 1.4,
    "bayes": {"n_chains": 1, "n_steps": 1500, "burn_in": 300, "thin": 1},
    "sweep": {"start": 1.0, "stop": 1.4, "step": 0.2,
              "band_mcmc": {"n_chains": 1, "n_steps": 1000, "burn_in": 200, "thin": 1}},
    "explore": {"single_steps": 6, "multi_steps": 8, "subset_size": 3, "hist_bins": 5},
}


@pytest.fixture
def small_config(tmp_path):
    path = tmp_path / "c.json"
    path.write_text(json.dumps({**SMALL, "output_dir": str(tmp_path / "run")}))
    return path


def test_config_roundtrip_and_hash(tmp_path):
    cfg = RunConfig.from_dict(SMALL)
    (tmp_path / "c.json").write_text(cfg.to_json())
    back = RunConfig.load(tmp_path / "c.json")
    assert back == cfg
    assert cfg.replace(output_dir="elsewhere").config_hash() == cfg.config_hash()
    assert cfg.replace(seed=4).config_hash() != cfg.config_hash()
    assert cfg.sub_seed("a") != cfg.sub_seed("b")


@pytest.mark.parametrize("bad", [{"nonsense": 1}, {"dataset": {"depth": 3}}, {"fdri": {"mu": 2.0}}])
def test_config_rejects_bad_keys(bad):
    with pytest.raises((ConfigurationError, ValueError)):
        RunConfig.from_dict(bad)


def test_sweep_sizes():
    assert SweepSection().sizes()[:3] == [1.0, 1.1, 1.2]
    assert len(SweepSection().sizes()) == 51 and SweepSection().sizes()[-1] == 6.0


def test_algorithms_produce_images(tmp_path):
    cfg = RunConfig.from_dict({**SMALL, "output_dir": str(tmp_path)})
    images = build_dataset(cfg)
    assert images.shape == (10, 24, 24)
    for name in ALGORITHMS:
        rec = run_algorithm(cfg, name, images[:2])
        assert rec.shape == (2, 24, 24) and np.isfinite(rec).all()


def test_single_size_sweep(tmp_path):
    cfg = RunConfig.from_dict({**SMALL, "output_dir": str(tmp_path)})
    res = run_probe_sweep("circle", [1.5], cfg, build_dataset(cfg))
    assert res.argmax_size == 1.5 and res.band == []
    with pytest.raises(ConfigurationError):
        run_probe_sweep("hexagon", [1.5], cfg, build_dataset(cfg))


def test_cli_usage_errors(capsys):
    assert cli_main(["frobnicate"]) == 2
    assert cli_main(["table1", "--bogus"]) == 2
    assert cli_main([]) == 2
    assert cli_main(["--version"]) == 0


def test_cli_runtime_error(tmp_path, capsys):
    (tmp_path / "bad.json").write_text('{"grid": -1}')
    assert cli_main(["table1", "--config", str(tmp_path / "bad.json"), "--out", str(tmp_path / "o")]) == 1
    assert "error" in capsys.readouterr().err


def test_cli_gen_data(small_config, tmp_path):
    assert cli_main(["gen-data", "--config", str(small_config)]) == 0
    manifest = json.loads((tmp_path / "run" / "dataset" / "manifest.json").read_text())
    assert len(manifest["files"]) == 10
    assert manifest["config_hash"] == RunConfig.load(small_config).config_hash()


def test_cli_table1(small_config, tmp_path, capsys):
    assert cli_main(["table1", "--config", str(small_config)]) == 0
    rows = read_csv(tmp_path / "run" / "table1.csv")
    diag = [r for r in rows if r["row"] == r["column"]]
    cells = [r for r in rows if r["row"] != r["column"]]
    assert len(diag) == 7 and len(cells) == 21
    assert {(r["row"], r["column"]) for r in cells} == {
        (a, b) for i, a in enumerate(ALGORITHMS) for b in ALGORITHMS[:i]}
    header = (tmp_path / "run" / "table1.csv").read_text().splitlines()[0]
    assert RunConfig.load(small_config).config_hash() in header
    assert "CS-Square" in capsys.readouterr().out


def test_cli_sweep(small_config, tmp_path, capsys):
    assert cli_main(["sweep", "--shape", "square", "--config", str(small_config)]) == 0
    rows = read_csv(tmp_path / "run" / "sweep_square.csv")
    assert [float(r["size_px"]) for r in rows] == [1.0, 1.2, 1.4]
    assert sum(int(r["is_argmax"]) for r in rows) == 1
    assert "argmax size" in capsys.readouterr().out


def test_cli_multilevel_row_counts(small_config, tmp_path):
    assert cli_main(["multilevel", "--config", str(small_config)]) == 0
    cfg = RunConfig.load(small_config)
    single = read_csv(tmp_path / "run" / "chain_single.csv")
    multi = read_csv(tmp_path / "run" / "chain_multi.csv")
    e = cfg.explore
    assert len(single) == e.single_steps - int(e.single_steps * e.burn_in_fraction)
    assert len(multi) == e.multi_steps - int(e.multi_steps * e.burn_in_fraction)
    hist = read_csv(tmp_path / "run" / "psnr_distribution.csv")
    assert len(hist) == 5
    assert sum(int(r["single_count"]) for r in hist) == len(single)
    pairs = read_csv(tmp_path / "run" / "multilevel_pairs.csv")
    assert len(pairs) == 10 * len(multi)


def test_cli_reconstruct_and_overrides(small_config, tmp_path, capsys):
    out = tmp_path / "rec"
    assert cli_main(["reconstruct", "--config", str(small_config), "--out", str(out),
                     "--image", "2", "--algorithm", "Lanczos", "--seed", "9"]) == 0
    assert (out / "recon_lanczos_0002.pgm").exists()
    assert "dB" in capsys.readouterr().out
    assert cli_main(["reconstruct", "--config", str(small_config), "--image", "99"]) == 1


def test_show_config(capsys):
    assert cli_main(["show-config", "--seed", "7"]) == 0
    assert json.loads(capsys.readouterr().out)["seed"] == 7
