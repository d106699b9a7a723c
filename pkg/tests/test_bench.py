import json
import shutil

import numpy as np
import pytest
from hypothesis import given, strategies as st

from freqspec import bench, perturb, synth
from freqspec.errors import (EmptySource, InvalidInput, IoFailure, MissingRealSet,
                             SchemaMismatch, UnknownSource)
from freqspec.raster import Raster, write_png

RATIOS = (0.5, 0.1, 0.4)


@pytest.fixture(scope="module")
def small_corpus(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    synth.write_corpus(root, kinds=("hf_noise", "grid"), n_natural=80, n_fake=80, size=64, seed=7)
    return root


@pytest.fixture(scope="module")
def manifest(small_corpus):
    return bench.build_manifest(small_corpus, RATIOS, resolution=64)


def test_split_counts_small_and_large():
    assert bench.split_counts(40, (0.95, 0.025, 0.025)) == [38, 1, 1]
    assert bench.split_counts(40000, (0.95, 0.025, 0.025)) == [38000, 1000, 1000]


@given(st.integers(0, 5000), st.lists(st.floats(0.01, 10), min_size=1, max_size=5))
def test_split_counts_sum_and_closeness(n, ratios):
    counts = bench.split_counts(n, ratios)
    assert sum(counts) == n
    quotas = n * np.asarray(ratios) / sum(ratios)
    assert np.all(np.abs(np.asarray(counts) - quotas) < 1.0 + 1e-9)


def test_split_counts_rejects_bad_ratios():
    with pytest.raises(InvalidInput):
        bench.split_counts(10, (-1, 2))
    with pytest.raises(InvalidInput):
        bench.split_counts(10, (0, 0))


def test_manifest_deterministic_and_disjoint(small_corpus, manifest):
    again = bench.build_manifest(small_corpus, RATIOS, resolution=64)
    assert again.to_dict() == manifest.to_dict()
    paths = [e.path for e in manifest.entries]
    assert len(paths) == len(set(paths)) == 240
    for src in ("real", "hf_noise", "grid"):
        per = [e for e in manifest.entries if e.source == src]
        assert [sum(e.split == s for e in per) for s in bench.SPLITS] == [40, 8, 32]


def test_manifest_independent_of_listing_order(small_corpus, tmp_path):
    # copying in reverse order changes inode/listing order but not the split
    dst = tmp_path / "copy"
    for p in sorted(small_corpus.rglob("*.png"), reverse=True):
        target = dst / p.relative_to(small_corpus)
        target.parent.mkdir(parents=True, exist_ok=True)
        shutil.copy(p, target)
    a = bench.build_manifest(small_corpus, RATIOS, resolution=64).entries
    b = bench.build_manifest(dst, RATIOS, resolution=64).entries
    assert a == b


def test_manifest_save_load_roundtrip(manifest, tmp_path):
    path = tmp_path / "m.json"
    manifest.save(path)
    loaded = bench.Manifest.load(path)
    assert loaded.entries == manifest.entries


def test_manifest_validation(manifest, tmp_path):
    d = manifest.to_dict()
    dup = dict(d, entries=d["entries"] + d["entries"][:1])
    with pytest.raises(SchemaMismatch):
        bench.Manifest.from_dict(dup)
    bad = json.loads(json.dumps(d))
    bad["entries"][0]["split"] = "holdout"
    with pytest.raises(SchemaMismatch):
        bench.Manifest.from_dict(bad)
    gone = json.loads(json.dumps(d))
    gone["entries"][0]["path"] = "real/nope.png"
    with pytest.raises(IoFailure):
        bench.Manifest.from_dict(gone)
    with pytest.raises(SchemaMismatch):
        bench.Manifest.from_dict({"entries": []})
    (tmp_path / "x.json").write_text("{not json")
    with pytest.raises(SchemaMismatch):
        bench.Manifest.load(tmp_path / "x.json")


def test_manifest_missing_real_and_empty_source(tmp_path):
    img = Raster(np.full((8, 8), 100.0))
    (tmp_path / "a" / "fake").mkdir(parents=True)
    write_png(img, tmp_path / "a" / "fake" / "x.png")
    with pytest.raises(MissingRealSet):
        bench.build_manifest(tmp_path / "a")
    (tmp_path / "a" / "real").mkdir()
    with pytest.raises(EmptySource):
        bench.build_manifest(tmp_path / "a")
    with pytest.raises(IoFailure):
        bench.build_manifest(tmp_path / "missing")


def test_downscale_flag(tmp_path):
    for src, n in (("real", 48), ("big", 80)):
        (tmp_path / src).mkdir()
        write_png(Raster(np.full((n, n), 50.0)), tmp_path / src / "a.png")
    m = bench.build_manifest(tmp_path, resolution=64)
    flags = {e.source: e.downscale for e in m.entries}
    assert flags == {"real": False, "big": True}
    cfg = bench.EvalConfig(resolution=64)
    big = [e for e in m.entries if e.source == "big"][0]
    assert bench.load_entry(m, big, cfg).width == 64


def test_select_cap(manifest):
    picked = manifest.select("train", ["real", "grid"], cap=3)
    assert len(picked) == 6
    assert manifest.select("train", ["nope"]) == []


def test_eval_config_from_dict():
    cfg = bench.EvalConfig.from_dict({"seed": 3, "threads": 2})
    assert (cfg.seed, cfg.threads, cfg.resolution) == (3, 2, 256)
    with pytest.raises(InvalidInput):
        bench.EvalConfig.from_dict({"sed": 3})
    for bad in ({"threads": 0}, {"resolution": 0}, {"sample_cap": 0}):
        with pytest.raises(InvalidInput):
            bench.EvalConfig.from_dict(bad)


def test_compute_features_thread_independent(manifest):
    entries = manifest.select("test", ["real", "grid"])
    a = bench.compute_features(manifest, entries, bench.EvalConfig(resolution=64, threads=1))
    b = bench.compute_features(manifest, entries, bench.EvalConfig(resolution=64, threads=4))
    assert a.shape == (len(entries), 41)
    assert np.array_equal(a, b)
    assert bench.compute_features(manifest, [], bench.EvalConfig()).shape == (0, 0)
    with pytest.raises(InvalidInput):
        bench.compute_features(manifest, entries, bench.EvalConfig(), kind="wavelet")


@pytest.fixture(scope="module")
def generalization(manifest):
    return bench.run_generalization(manifest, ["hf_noise"], bench.EvalConfig(resolution=64))


def test_generalization_rows(generalization):
    report, _ = generalization
    assert [r.test_source for r in report.rows] == ["grid", "hf_noise", "average"]
    same = report.find("hf_noise")
    assert same.auc >= 0.99
    assert same.n_real == 32 and same.n_fake == 32
    avg = report.find("average")
    assert avg.auc == pytest.approx(np.mean([r.auc for r in report.rows[:-1]]))
    assert avg.ap == pytest.approx(np.mean([r.ap for r in report.rows[:-1]]))
    assert all(r.train_sources == "hf_noise" for r in report.rows)


def test_generalization_unknown_source(manifest):
    with pytest.raises(UnknownSource):
        bench.run_generalization(manifest, ["stylegan"])
    with pytest.raises(UnknownSource):
        bench.run_generalization(manifest, [])


def test_generalization_reuses_model(manifest, generalization):
    report, model = generalization
    again, same = bench.run_generalization(manifest, ["hf_noise"], bench.EvalConfig(resolution=64),
                                           trained=model)
    assert same is model
    assert [r.auc for r in again.rows] == [r.auc for r in report.rows]


def test_robustness_baseline_and_size(manifest, generalization):
    report, model = generalization
    cfg = bench.EvalConfig(resolution=64)
    rob = bench.run_robustness(manifest, model, cfg=cfg, test_sources=["hf_noise"],
                               train_label="hf_noise")
    assert len(rob.rows) == 1 + len(perturb.standard_sweep())
    assert rob.rows[0].perturbation == "none"
    assert rob.rows[0].auc == pytest.approx(report.find("hf_noise").auc)
    assert bench.is_finite_report(rob)
    with pytest.raises(UnknownSource):
        bench.run_robustness(manifest, model, cfg=cfg, test_sources=["nope"])


def test_robustness_thread_independent(manifest, generalization):
    _, model = generalization
    sweep = [perturb.PerturbationSpec.from_grid("noise", 5.0, seed=1),
             perturb.PerturbationSpec.from_grid("jpeg", 50)]
    a = bench.run_robustness(manifest, model, sweep, bench.EvalConfig(resolution=64, threads=1))
    b = bench.run_robustness(manifest, model, sweep, bench.EvalConfig(resolution=64, threads=3))
    assert a.rows == b.rows


def _report():
    return bench.EvalReport([
        bench.ReportRow("a", "b", "none", "", 0.123456789, 0.9, 10, 12),
        bench.ReportRow("a", "b", "jpeg", "90", 1 / 3, 2 / 3, 10, 12),
    ])


def test_report_csv_four_decimals(tmp_path):
    path = tmp_path / "r.csv"
    bench.write_report(_report(), path)
    lines = path.read_text().splitlines()
    assert lines[0] == ",".join(bench.CSV_COLUMNS)
    assert lines[1] == "a,b,none,,0.1235,0.9000,10,12"
    back = bench.read_report(path)
    assert back.rows[1].auc == 0.3333 and back.rows[1].param == "90"


def test_report_json_roundtrip(tmp_path):
    path = tmp_path / "r.json"
    bench.write_report(_report(), path)
    assert bench.read_report(path).rows == _report().rows


def test_empty_report_header_only(tmp_path):
    path = tmp_path / "e.csv"
    bench.write_report(bench.EvalReport(), path)
    assert path.read_text() == ",".join(bench.CSV_COLUMNS) + "\n"
    assert bench.read_report(path).rows == []


def test_report_bad_inputs(tmp_path):
    with pytest.raises(InvalidInput):
        bench.write_report(_report(), tmp_path / "r.csv", fmt="xml")
    (tmp_path / "bad.csv").write_text("x,y\n1,2\n")
    with pytest.raises(SchemaMismatch):
        bench.read_report(tmp_path / "bad.csv")
    with pytest.raises(KeyError):
        _report().find("zzz")


def test_monotone_violations():
    rows = [bench.ReportRow("t", "s", "jpeg", q, auc, 0.5, 1, 1)
            for q, auc in (("90", 0.9), ("70", 0.8), ("50", 0.85), ("30", 0.7))]
    bad = bench.monotone_violations(bench.EvalReport(rows), 0.02)
    assert len(bad) == 1 and "70->50" in bad[0]
    assert bench.monotone_violations(bench.EvalReport(rows), 0.06) == []
