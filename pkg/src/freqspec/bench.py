"""Benchmark orchestration: manifests, the generalisation matrix and the
robustness sweep, plus CSV/JSON report I/O.
"""
from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np
from PIL import Image

from . import metrics, model as detector, perturb, spectrum
from .errors import EmptySource, InvalidInput, IoFailure, MissingRealSet, SchemaMismatch, UnknownSource
from .raster import IMAGE_SUFFIXES, Raster, read_image, resize, to_grayscale

SPLITS = ("train", "val", "test")
DEFAULT_RATIOS = (0.95, 0.025, 0.025)
REAL_SOURCE = "real"
FEATURE_KINDS = ("spectral", "pixel")


@dataclass(frozen=True)
class EvalConfig:
    resolution: int = 256
    median_k: int = spectrum.DEFAULT_MEDIAN_K
    epsilon: float = spectrum.DEFAULT_EPSILON
    bands: int = spectrum.DEFAULT_BANDS
    seed: int = 0
    sample_cap: int | None = None
    threads: int = 1

    def __post_init__(self):
        if self.resolution <= 0:
            raise InvalidInput("resolution must be positive")
        if self.sample_cap is not None and self.sample_cap < 1:
            raise InvalidInput("sample_cap must be >= 1")
        if self.threads < 1:
            raise InvalidInput("threads must be >= 1")

    @classmethod
    def from_dict(cls, data: dict) -> "EvalConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise InvalidInput(f"unknown EvalConfig keys: {sorted(unknown)}")
        return cls(**data)


# --- manifests --------------------------------------------------------------

@dataclass(frozen=True)
class Entry:
    path: str
    label: str
    source: str
    split: str
    downscale: bool = False

    @property
    def target(self) -> int:
        return 0 if self.label == "real" else 1

    @property
    def stream(self) -> int:
        """Stable 64-bit id used to key per-image noise streams."""
        return int.from_bytes(hashlib.sha256(self.path.encode()).digest()[:8], "little")


@dataclass
class Manifest:
    root: str
    entries: list = field(default_factory=list)

    def sources(self) -> list[str]:
        return sorted({e.source for e in self.entries})

    def fake_sources(self) -> list[str]:
        return [s for s in self.sources() if s != REAL_SOURCE]

    def select(self, split: str, sources, cap: int | None = None) -> list[Entry]:
        sources = set(sources)
        picked, counts = [], {}
        for e in self.entries:
            if e.split != split or e.source not in sources:
                continue
            if cap is not None and counts.get(e.source, 0) >= cap:
                continue
            counts[e.source] = counts.get(e.source, 0) + 1
            picked.append(e)
        return picked

    def resolve(self, entry: Entry) -> Path:
        return Path(self.root) / entry.path

    def to_dict(self) -> dict:
        return {"root": self.root, "entries": [asdict(e) for e in self.entries]}

    def save(self, path) -> None:
        try:
            Path(path).write_text(json.dumps(self.to_dict(), indent=1, sort_keys=True) + "\n")
        except OSError as exc:
            raise IoFailure(f"cannot write manifest {path}: {exc}") from exc

    @classmethod
    def from_dict(cls, data: dict, check_files: bool = True) -> "Manifest":
        try:
            entries = [Entry(**e) for e in data["entries"]]
            root = str(data["root"])
        except (KeyError, TypeError) as exc:
            raise SchemaMismatch(f"malformed manifest: {exc}") from exc
        seen = set()
        for e in entries:
            if e.split not in SPLITS:
                raise SchemaMismatch(f"bad split {e.split!r} for {e.path}")
            if e.path in seen:
                raise SchemaMismatch(f"duplicate path {e.path}")
            seen.add(e.path)
            if check_files and not (Path(root) / e.path).is_file():
                raise IoFailure(f"manifest entry {e.path} not found under {root}")
        return cls(root, entries)

    @classmethod
    def load(cls, path) -> "Manifest":
        try:
            data = json.loads(Path(path).read_text())
        except OSError as exc:
            raise IoFailure(f"cannot read manifest {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise SchemaMismatch(f"manifest {path} is not JSON: {exc}") from exc
        root = Path(data.get("root", "."))
        if not root.is_absolute():
            data["root"] = str((Path(path).parent / root).resolve())
        return cls.from_dict(data)


def split_counts(n: int, ratios) -> list[int]:
    """Largest-remainder apportionment of ``n`` items over ``ratios``."""
    ratios = np.asarray(ratios, dtype=np.float64)
    if ratios.ndim != 1 or np.any(ratios < 0) or ratios.sum() <= 0:
        raise InvalidInput(f"bad split ratios {ratios}")
    quotas = n * ratios / ratios.sum()
    counts = np.floor(quotas + 1e-9).astype(int)
    short = n - counts.sum()
    # ties go to the earlier split
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - counts[i]), i))
    for i in order[:short]:
        counts[i] += 1
    return counts.tolist()


def _path_hash(rel: str) -> str:
    return hashlib.sha256(rel.encode()).hexdigest()


def build_manifest(root_dir, split_ratios=DEFAULT_RATIOS, resolution: int = 256) -> Manifest:
    """Scan ``root_dir/<source>/...`` (one directory per source, plus ``real/``).

    Within each source, files are ordered by a hash of their relative path and
    cut into train/val/test by largest-remainder counts, so the split does not
    depend on directory listing order.
    """
    root = Path(root_dir)
    if not root.is_dir():
        raise IoFailure(f"{root} is not a directory")
    dirs = sorted(p for p in root.iterdir() if p.is_dir())
    if REAL_SOURCE not in {d.name for d in dirs}:
        raise MissingRealSet(f"{root} has no '{REAL_SOURCE}/' directory")
    entries = []
    for d in dirs:
        files = [p for p in d.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
        if not files:
            raise EmptySource(f"source directory {d.name}/ has no images")
        rels = sorted((p.relative_to(root).as_posix() for p in files), key=_path_hash)
        counts = split_counts(len(rels), split_ratios)
        splits = [s for s, c in zip(SPLITS, counts) for _ in range(c)]
        label = "real" if d.name == REAL_SOURCE else "fake"
        for rel, split in zip(rels, splits):
            with Image.open(root / rel) as im:
                w, h = im.size
            entries.append(Entry(rel, label, d.name, split, w > resolution or h > resolution))
    entries.sort(key=lambda e: (e.source, e.path))
    return Manifest(str(root), entries)


# --- features ---------------------------------------------------------------

def load_entry(manifest: Manifest, entry: Entry, cfg: EvalConfig) -> Raster:
    img = read_image(manifest.resolve(entry))
    if entry.downscale:
        img = resize(img, cfg.resolution, cfg.resolution, "bilinear")
    return img


def pixel_features(img: Raster) -> np.ndarray:
    """Baseline descriptor: gray mean, variance and mean squared gradient."""
    g = to_grayscale(img).plane
    gx = np.diff(g, axis=1)
    gy = np.diff(g, axis=0)
    return np.array([g.mean(), g.var(), (gx * gx).mean() + (gy * gy).mean()])


def describe(img: Raster, cfg: EvalConfig, kind: str = "spectral") -> np.ndarray:
    if kind == "pixel":
        return pixel_features(img)
    return spectrum.image_features(img, cfg.median_k, cfg.epsilon, cfg.bands)


def compute_features(manifest: Manifest, entries, cfg: EvalConfig,
                     spec: perturb.PerturbationSpec | None = None,
                     kind: str = "spectral") -> np.ndarray:
    """Feature matrix in entry order; parallel over images, identical for any thread count."""
    if kind not in FEATURE_KINDS:
        raise InvalidInput(f"unknown feature kind {kind!r}")

    def one(entry):
        img = load_entry(manifest, entry, cfg)
        if spec is not None:
            img = perturb.apply(spec, img, stream=entry.stream)
        return describe(img, cfg, kind)

    entries = list(entries)
    if not entries:
        return np.empty((0, 0))
    with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
        return np.vstack(list(pool.map(one, entries)))


# --- reports ----------------------------------------------------------------

CSV_COLUMNS = ("train_sources", "test_source", "perturbation", "param", "auc", "ap", "n_real", "n_fake")


@dataclass
class ReportRow:
    train_sources: str
    test_source: str
    perturbation: str
    param: str
    auc: float
    ap: float
    n_real: int
    n_fake: int


@dataclass
class EvalReport:
    rows: list = field(default_factory=list)

    def find(self, test_source: str, perturbation: str = "none", param: str = ""):
        for r in self.rows:
            if (r.test_source, r.perturbation, r.param) == (test_source, perturbation, param):
                return r
        raise KeyError((test_source, perturbation, param))


def _row(train_label, test_label, pert, param, y, s):
    return ReportRow(train_label, test_label, pert, param,
                     metrics.auc(y, s), metrics.average_precision(y, s),
                     int((y == 0).sum()), int((y == 1).sum()))


def run_generalization(manifest: Manifest, train_sources, cfg: EvalConfig = EvalConfig(),
                       train_cfg: detector.TrainConfig = detector.TrainConfig(),
                       trained=None, features: str = "spectral"):
    """Train on real + ``train_sources`` (train split), score every fake source's test split.

    Returns ``(report, model)``. The real test images are shared by all rows.
    Pass ``trained`` to evaluate an existing model instead of fitting one.
    """
    train_sources = sorted(set(train_sources))
    known = set(manifest.fake_sources())
    missing = [s for s in train_sources if s not in known]
    if missing or not train_sources:
        raise UnknownSource(f"unknown training sources {missing or train_sources}")
    train_label = "+".join(train_sources)

    if trained is None:
        tr = manifest.select("train", [REAL_SOURCE] + train_sources, cfg.sample_cap)
        x = compute_features(manifest, tr, cfg, kind=features)
        y = np.array([e.target for e in tr])
        trained = detector.train(x, y, train_cfg)

    real = manifest.select("test", [REAL_SOURCE], cfg.sample_cap)
    if not real:
        raise EmptySource("no real test images")
    real_scores = detector.score_batch(trained, compute_features(manifest, real, cfg, kind=features))
    rows = []
    for src in manifest.fake_sources():
        fake = manifest.select("test", [src], cfg.sample_cap)
        if not fake:
            continue
        fake_scores = detector.score_batch(trained, compute_features(manifest, fake, cfg, kind=features))
        y = np.r_[np.zeros(len(real), dtype=int), np.ones(len(fake), dtype=int)]
        rows.append(_row(train_label, src, "none", "", y, np.r_[real_scores, fake_scores]))
    if rows:
        rows.append(ReportRow(train_label, "average", "none", "",
                              float(np.mean([r.auc for r in rows])),
                              float(np.mean([r.ap for r in rows])),
                              len(real), int(sum(r.n_fake for r in rows))))
    return EvalReport(rows), trained


def run_robustness(manifest: Manifest, trained, sweep=None, cfg: EvalConfig = EvalConfig(),
                   test_sources=None, train_label: str = "", features: str = "spectral") -> EvalReport:
    """Unperturbed baseline row plus one row per sweep point.

    Each perturbation is applied to every test image of both classes; the fake
    test images of ``test_sources`` (default: all fake sources) are pooled.
    """
    if sweep is None:
        sweep = perturb.standard_sweep(cfg.seed)
    test_sources = sorted(set(test_sources or manifest.fake_sources()))
    unknown = [s for s in test_sources if s not in manifest.fake_sources()]
    if unknown:
        raise UnknownSource(f"unknown test sources {unknown}")
    real = manifest.select("test", [REAL_SOURCE], cfg.sample_cap)
    fake = manifest.select("test", test_sources, cfg.sample_cap)
    if not real or not fake:
        raise EmptySource("robustness sweep needs real and fake test images")
    entries = real + fake
    y = np.r_[np.zeros(len(real), dtype=int), np.ones(len(fake), dtype=int)]
    label = "+".join(test_sources)
    rows = []
    for spec in [None] + list(sweep):
        x = compute_features(manifest, entries, cfg, spec, kind=features)
        s = detector.score_batch(trained, x)
        pert = "none" if spec is None else spec.kind
        param = "" if spec is None else perturb._fmt(spec.param)
        rows.append(_row(train_label, label, pert, param, y, s))
    return EvalReport(rows)


def _fmt4(x: float) -> str:
    return f"{x:.4f}"


def write_report(report: EvalReport, path, fmt: str | None = None) -> None:
    """CSV (4-decimal metrics) or JSON (full precision); format from suffix by default."""
    fmt = fmt or ("json" if str(path).lower().endswith(".json") else "csv")
    try:
        if fmt == "json":
            Path(path).write_text(json.dumps({"rows": [asdict(r) for r in report.rows]}, indent=1) + "\n")
            return
        if fmt != "csv":
            raise InvalidInput(f"unknown report format {fmt!r}")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_COLUMNS)
            for r in report.rows:
                w.writerow([r.train_sources, r.test_source, r.perturbation, r.param,
                            _fmt4(r.auc), _fmt4(r.ap), r.n_real, r.n_fake])
    except OSError as exc:
        raise IoFailure(f"cannot write report {path}: {exc}") from exc


def read_report(path) -> EvalReport:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise IoFailure(f"cannot read report {path}: {exc}") from exc
    if path.suffix.lower() == ".json":
        try:
            return EvalReport([ReportRow(**r) for r in json.loads(text)["rows"]])
        except (KeyError, TypeError, json.JSONDecodeError) as exc:
            raise SchemaMismatch(f"malformed JSON report {path}") from exc
    reader = csv.DictReader(text.splitlines())
    if tuple(reader.fieldnames or ()) != CSV_COLUMNS:
        raise SchemaMismatch(f"unexpected CSV header in {path}")
    rows = []
    for rec in reader:
        rows.append(ReportRow(rec["train_sources"], rec["test_source"], rec["perturbation"],
                              rec["param"], float(rec["auc"]), float(rec["ap"]),
                              int(rec["n_real"]), int(rec["n_fake"])))
    return EvalReport(rows)


def monotone_violations(report: EvalReport, tolerance: float = 0.02) -> list[str]:
    """Grid points where AUC rises by more than ``tolerance`` as severity grows."""
    bad = []
    for kind in perturb.KINDS:
        rows = {r.param: r for r in report.rows if r.perturbation == kind}
        params = perturb.severity_order(kind, [float(p) for p in rows])
        ordered = [rows[perturb._fmt(p)] for p in params]
        for milder, harsher in zip(ordered, ordered[1:]):
            if harsher.auc > milder.auc + tolerance:
                bad.append(f"{kind}: AUC {milder.param}->{harsher.param} "
                           f"rose {milder.auc:.4f}->{harsher.auc:.4f}")
    return bad


def is_finite_report(report: EvalReport) -> bool:
    return all(math.isfinite(r.auc) and math.isfinite(r.ap) for r in report.rows)
