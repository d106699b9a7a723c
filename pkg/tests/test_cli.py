import hashlib
import json

import numpy as np
import pytest

from freqspec import bench, cli, perturb
from freqspec.raster import Raster, read_image, write_png


def _run(capsys, *argv):
    code = cli.main([str(a) for a in argv])
    out, err = capsys.readouterr()
    return code, out, err


def _digest(root):
    h = hashlib.sha256()
    for p in sorted(root.rglob("*")):
        if p.is_file():
            h.update(p.relative_to(root).as_posix().encode())
            h.update(p.read_bytes())
    return h.hexdigest()


@pytest.fixture(scope="module")
def corpus(tmp_path_factory):
    out = tmp_path_factory.mktemp("cli") / "corpus"
    code = cli.main(["synth", "--out", str(out), "--n-natural", "12", "--n-fake", "12",
                     "--kinds", "hf_noise,grid", "--size", "32", "--split", "0.5,0.1,0.4",
                     "--resolution", "32", "--seed", "5"])
    assert code == 0
    return out


@pytest.mark.parametrize("command", [None] + sorted(cli.COMMANDS))
def test_help_exits_zero(capsys, command):
    argv = ["--help"] if command is None else [command, "--help"]
    code, out, _ = _run(capsys, *argv)
    assert code == 0
    assert "usage" in out


def test_usage_errors_exit_one(capsys, tmp_path):
    assert _run(capsys, "spectrum", "--bogus")[0] == 1
    assert _run(capsys)[0] == 1
    assert _run(capsys, "perturb", "--in", tmp_path, "--out", tmp_path / "o")[0] == 1
    assert _run(capsys, "synth", "--out", tmp_path, "--split", "1,2")[0] == 1
    bad = tmp_path / "cfg.json"
    bad.write_text(json.dumps({"nonsense": 1}))
    assert _run(capsys, "spectrum", "--in", "x.png", "--out", "y.pgm", "--config", bad)[0] == 1


def test_runtime_errors_exit_two(capsys, tmp_path):
    code, _, err = _run(capsys, "spectrum", "--in", tmp_path / "missing.png", "--out", tmp_path / "s.pgm")
    assert code == 2
    assert "IoFailure" in err
    (tmp_path / "junk.png").write_bytes(b"not an image")
    assert _run(capsys, "spectrum", "--in", tmp_path / "junk.png", "--out", tmp_path / "s.pgm")[0] == 2
    assert _run(capsys, "report", "--in", tmp_path / "none.csv")[0] == 2


def test_echo_resolved_config(capsys, tmp_path):
    img = tmp_path / "a.png"
    write_png(Raster(np.random.default_rng(0).uniform(0, 255, (16, 16))), img)
    code, out, _ = _run(capsys, "spectrum", "--in", img, "--out", tmp_path / "s.pgm")
    assert code == 0
    echoed = json.loads(out.splitlines()[0])
    assert echoed["command"] == "spectrum"
    assert echoed["eval_config"] == {
        "resolution": 256, "median_k": 3, "epsilon": 1e-8, "bands": 32,
        "seed": 0, "sample_cap": None, "threads": 1,
    }
    assert read_image(tmp_path / "s.pgm").width == 16


def test_config_precedence(capsys, tmp_path):
    img = tmp_path / "a.png"
    write_png(Raster(np.full((8, 8), 9.0)), img)
    cfg = tmp_path / "cfg.json"
    cfg.write_text(json.dumps({"seed": 11, "median_k": 5, "threads": 2}))
    _, out, _ = _run(capsys, "spectrum", "--in", img, "--out", tmp_path / "s.pgm",
                     "--config", cfg, "--seed", "4")
    resolved = json.loads(out.splitlines()[0])["eval_config"]
    assert (resolved["seed"], resolved["median_k"], resolved["threads"]) == (4, 5, 2)


def test_synth_writes_manifest(corpus):
    m = bench.Manifest.load(corpus / "manifest.json")
    assert m.sources() == ["grid", "hf_noise", "real"]
    assert len(m.entries) == 36
    assert json.loads((corpus / "manifest.json").read_text())["root"] == "."


def test_perturb_single_and_sweep(capsys, corpus, tmp_path):
    src = corpus / "real"
    before = _digest(src)
    code, _, _ = _run(capsys, "perturb", "--kind", "noise", "--param", "10", "--in", src,
                      "--out", tmp_path / "one", "--seed", "2")
    assert code == 0
    assert len(list((tmp_path / "one").glob("*.png"))) == 12
    code, _, _ = _run(capsys, "perturb", "--sweep", "--kind", "blur", "--in", src,
                      "--out", tmp_path / "sweep", "--threads", "3")
    assert code == 0
    dirs = sorted(p.name for p in (tmp_path / "sweep").iterdir())
    assert dirs == sorted(f"blur_{k}" for k in perturb.SWEEP_GRIDS["blur"])
    assert _digest(src) == before


def test_perturb_threads_do_not_change_output(capsys, corpus, tmp_path):
    for t in (1, 4):
        assert _run(capsys, "perturb", "--kind", "noise", "--param", "15", "--in", corpus / "grid",
                    "--out", tmp_path / f"t{t}", "--threads", t)[0] == 0
    assert _digest(tmp_path / "t1") == _digest(tmp_path / "t4")


def test_mean_spectrum_sampling(capsys, corpus, tmp_path):
    outs = []
    for name in ("a", "b"):
        code, out, _ = _run(capsys, "mean-spectrum", "--in", corpus / "real", "--n", "5",
                            "--out", tmp_path / f"{name}.pgm", "--seed", "1")
        assert code == 0 and "averaged 5" in out
        outs.append((tmp_path / f"{name}.pgm").read_bytes())
    assert outs[0] == outs[1]
    assert _run(capsys, "mean-spectrum", "--in", corpus / "real", "--n", "0",
                "--out", tmp_path / "c.pgm")[0] == 1


def test_train_eval_robustness_report(capsys, corpus, tmp_path):
    manifest = corpus / "manifest.json"
    common = ["--resolution", "32"]
    assert _run(capsys, "train", "--manifest", manifest, "--train-sources", "hf_noise",
                "--out", tmp_path / "m.txt", *common)[0] == 0
    assert _run(capsys, "train", "--manifest", manifest, "--train-sources", "nope",
                "--out", tmp_path / "x.txt", *common)[0] == 1
    assert _run(capsys, "eval", "--manifest", manifest, "--train-sources", "hf_noise",
                "--model", tmp_path / "m.txt", "--out", tmp_path / "g.csv", *common)[0] == 0
    rows = bench.read_report(tmp_path / "g.csv").rows
    assert [r.test_source for r in rows] == ["grid", "hf_noise", "average"]
    assert _run(capsys, "robustness", "--manifest", manifest, "--model", tmp_path / "m.txt",
                "--kinds", "jpeg,resize", "--out", tmp_path / "r.json", *common)[0] == 0
    rob = bench.read_report(tmp_path / "r.json")
    assert len(rob.rows) == 1 + 9 + 6
    assert _run(capsys, "robustness", "--manifest", manifest, "--model", tmp_path / "m.txt",
                "--kinds", "sharpen", "--out", tmp_path / "r2.csv", *common)[0] == 1
    code, out, _ = _run(capsys, "report", "--in", tmp_path / "r.json")
    assert code == 0
    assert out.splitlines()[1] == ",".join(bench.CSV_COLUMNS)
    assert len(out.splitlines()) == 2 + len(rob.rows)
    assert _run(capsys, "report", "--in", tmp_path / "r.json", "--out", tmp_path / "r.csv")[0] == 0
    assert (tmp_path / "r.csv").read_text().count("\n") == 1 + len(rob.rows)
