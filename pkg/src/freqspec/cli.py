"""``freqspec`` command line.

Exit codes: 0 success, 1 usage error, 2 runtime failure. Every run echoes its
resolved configuration (defaults and seed included) as one JSON line first.
"""
from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, fields
from pathlib import Path

import numpy as np

from . import bench, model as detector, perturb, spectrum, synth
from .errors import FreqSpecError, InvalidInput, IoFailure
from .raster import IMAGE_SUFFIXES, read_image, write_png

USAGE_ERROR = 1
RUNTIME_ERROR = 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _csv(text):
    return [t for t in (s.strip() for s in text.split(",")) if t]


def _ratios(text):
    vals = [float(v) for v in _csv(text)]
    if len(vals) != 3:
        raise argparse.ArgumentTypeError("expected three comma-separated ratios")
    return vals


def _common(p, eval_flags=True):
    p.add_argument("--seed", type=int, default=None, help="root seed for all randomness (default 0)")
    p.add_argument("--threads", type=int, default=None, help="worker threads; outputs do not depend on it")
    p.add_argument("--config", type=Path, default=None, help="JSON file with EvalConfig fields")
    if eval_flags:
        p.add_argument("--median-k", type=int, default=None, help="median window for the residual (default 3)")
        p.add_argument("--epsilon", type=float, default=None, help="log offset (default 1e-8)")
        p.add_argument("--bands", type=int, default=None, help="radial bands in the descriptor (default 32)")
        p.add_argument("--resolution", type=int, default=None, help="working resolution (default 256)")
        p.add_argument("--sample-cap", type=int, default=None, help="max images per source and split")


def _train_flags(p):
    p.add_argument("--kind", choices=detector.KINDS, default="linear")
    p.add_argument("--lr", type=float, default=detector.TrainConfig.learning_rate)
    p.add_argument("--epochs", type=int, default=detector.TrainConfig.epochs)
    p.add_argument("--l2", type=float, default=detector.TrainConfig.l2)
    p.add_argument("--hidden", type=int, default=detector.TrainConfig.hidden)
    p.add_argument("--features", choices=bench.FEATURE_KINDS, default="spectral")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="freqspec", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True

    p = sub.add_parser("synth", help="render a synthetic corpus and its manifest")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--n-natural", type=int, default=500)
    p.add_argument("--n-fake", type=int, default=500)
    p.add_argument("--kinds", type=_csv, default=list(synth.FAKE_KINDS))
    p.add_argument("--size", type=int, default=128)
    p.add_argument("--split", type=_ratios, default=list(bench.DEFAULT_RATIOS),
                   help="train,val,test ratios (default 0.95,0.025,0.025)")
    _common(p)

    p = sub.add_parser("spectrum", help="export the residual log spectrum of one image")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    _common(p)

    p = sub.add_parser("mean-spectrum", help="export the mean spectrum of sampled images")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--n", type=int, default=spectrum.DEFAULT_MEAN_SAMPLES)
    p.add_argument("--out", required=True, type=Path)
    _common(p)

    p = sub.add_parser("perturb", help="apply one perturbation (or a sweep) to a directory")
    p.add_argument("--kind", choices=perturb.KINDS)
    p.add_argument("--param", type=float)
    p.add_argument("--sweep", action="store_true", help="emit <kind>_<param>/ for every grid point")
    p.add_argument("--in", "--in-dir", dest="input", required=True, type=Path)
    p.add_argument("--out", "--out-dir", dest="output", required=True, type=Path)
    _common(p, eval_flags=False)

    p = sub.add_parser("train", help="train a detector on the manifest's train split")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--train-sources", required=True, type=_csv)
    p.add_argument("--out", required=True, type=Path)
    _train_flags(p)
    _common(p)

    p = sub.add_parser("eval", help="generalisation matrix: train (or load) and test every source")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--train-sources", required=True, type=_csv)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--model", type=Path, default=None, help="evaluate this model instead of training")
    p.add_argument("--save-model", type=Path, default=None)
    _train_flags(p)
    _common(p)

    p = sub.add_parser("robustness", help="perturbation sweep over the test split")
    p.add_argument("--manifest", required=True, type=Path)
    p.add_argument("--model", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--test-sources", type=_csv, default=None)
    p.add_argument("--kinds", type=_csv, default=list(perturb.KINDS))
    p.add_argument("--train-label", default="")
    p.add_argument("--features", choices=bench.FEATURE_KINDS, default="spectral")
    _common(p)

    p = sub.add_parser("report", help="convert or print a report file")
    p.add_argument("--in", dest="input", required=True, type=Path)
    p.add_argument("--out", type=Path, default=None)
    _common(p, eval_flags=False)
    return parser


def resolve_config(args) -> bench.EvalConfig:
    """Defaults < config file < flags."""
    merged = asdict(bench.EvalConfig())
    if args.config is not None:
        try:
            data = json.loads(args.config.read_text())
        except OSError as exc:
            raise IoFailure(f"cannot read config {args.config}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {args.config} is not JSON: {exc}") from exc
        try:
            merged.update(asdict(bench.EvalConfig.from_dict(data)))
        except (InvalidInput, TypeError) as exc:
            raise UsageError(str(exc)) from exc
    for f in fields(bench.EvalConfig):
        value = getattr(args, f.name, None)
        if value is not None:
            merged[f.name] = value
    try:
        return bench.EvalConfig(**merged)
    except InvalidInput as exc:
        raise UsageError(str(exc)) from exc


def _echo(args, cfg):
    shown = {k: (str(v) if isinstance(v, Path) else v) for k, v in vars(args).items()
             if k not in {f.name for f in fields(bench.EvalConfig)}}
    shown["eval_config"] = asdict(cfg)
    print(json.dumps(shown, sort_keys=True))
    sys.stdout.flush()


def _images_in(root: Path):
    if not root.is_dir():
        raise IoFailure(f"{root} is not a directory")
    files = [p for p in root.rglob("*") if p.is_file() and p.suffix.lower() in IMAGE_SUFFIXES]
    return sorted(files, key=lambda p: p.relative_to(root).as_posix())


def _train_cfg(args, cfg):
    return detector.TrainConfig(args.lr, args.epochs, args.l2, cfg.seed, args.kind, args.hidden)


def cmd_synth(args, cfg):
    kinds = args.kinds
    bad = [k for k in kinds if k not in synth.FAKE_KINDS]
    if bad:
        raise UsageError(f"unknown synth kinds {bad}")
    synth.write_corpus(args.out, kinds, args.n_natural, args.n_fake, args.size, cfg.seed,
                       threads=cfg.threads)
    manifest = bench.build_manifest(args.out, args.split, cfg.resolution)
    manifest.root = "."
    manifest.save(args.out / "manifest.json")
    print(f"wrote {len(manifest.entries)} images and manifest to {args.out}")


def cmd_spectrum(args, cfg):
    spec = spectrum.image_spectrum(read_image(args.input), cfg.median_k, cfg.epsilon)
    spectrum.export_spectrum_image(spec, args.out)


def cmd_mean_spectrum(args, cfg):
    files = _images_in(args.input)
    if args.n < 1:
        raise UsageError("--n must be >= 1")
    if len(files) > args.n:
        rng = np.random.default_rng(cfg.seed)
        pick = np.sort(rng.choice(len(files), size=args.n, replace=False))
        files = [files[i] for i in pick]
    images = (read_image(p) for p in files)
    spec = spectrum.mean_spectrum(images, cfg.median_k, cfg.epsilon, cfg.threads)
    spectrum.export_spectrum_image(spec, args.out)
    print(f"averaged {len(files)} spectra into {args.out}")


def cmd_perturb(args, cfg):
    if args.sweep:
        kinds = [args.kind] if args.kind else list(perturb.KINDS)
        specs = perturb.standard_sweep(cfg.seed, kinds)
        targets = [(s, args.output / s.label) for s in specs]
    else:
        if args.kind is None or args.param is None:
            raise UsageError("--kind and --param are required unless --sweep is given")
        targets = [(perturb.PerturbationSpec(args.kind, args.param, cfg.seed), args.output)]
    files = _images_in(args.input)
    for spec, out_dir in targets:
        def one(path, spec=spec, out_dir=out_dir):
            rel = path.relative_to(args.input).as_posix()
            stream = bench.Entry(rel, "", "", "train").stream
            img = perturb.apply(spec, read_image(path), stream=stream)
            dest = (out_dir / rel).with_suffix(".png")
            dest.parent.mkdir(parents=True, exist_ok=True)
            write_png(img, dest)

        out_dir.mkdir(parents=True, exist_ok=True)
        with ThreadPoolExecutor(max_workers=cfg.threads) as pool:
            list(pool.map(one, files))
    print(f"perturbed {len(files)} images x {len(targets)} setting(s)")


def cmd_train(args, cfg):
    manifest = bench.Manifest.load(args.manifest)
    unknown = [s for s in args.train_sources if s not in manifest.fake_sources()]
    if unknown:
        raise UsageError(f"unknown training sources {unknown}")
    entries = manifest.select("train", [bench.REAL_SOURCE] + args.train_sources, cfg.sample_cap)
    x = bench.compute_features(manifest, entries, cfg, kind=args.features)
    y = np.array([e.target for e in entries])
    trained = detector.train(x, y, _train_cfg(args, cfg))
    detector.save_model(trained, args.out)
    print(f"trained {args.kind} model on {len(entries)} images -> {args.out}")


def cmd_eval(args, cfg):
    manifest = bench.Manifest.load(args.manifest)
    existing = detector.load_model(args.model) if args.model else None
    report, trained = bench.run_generalization(manifest, args.train_sources, cfg,
                                               _train_cfg(args, cfg), existing, args.features)
    bench.write_report(report, args.out)
    if args.save_model:
        detector.save_model(trained, args.save_model)
    for r in report.rows:
        print(f"{r.test_source:>16s}  AUC {r.auc:.4f}  AP {r.ap:.4f}")


def cmd_robustness(args, cfg):
    manifest = bench.Manifest.load(args.manifest)
    trained = detector.load_model(args.model)
    bad = [k for k in args.kinds if k not in perturb.KINDS]
    if bad:
        raise UsageError(f"unknown perturbation kinds {bad}")
    report = bench.run_robustness(manifest, trained, perturb.standard_sweep(cfg.seed, args.kinds), cfg,
                                  args.test_sources, args.train_label, args.features)
    bench.write_report(report, args.out)
    print(f"{len(report.rows)} rows -> {args.out}")


def cmd_report(args, cfg):
    report = bench.read_report(args.input)
    if args.out is not None:
        bench.write_report(report, args.out)
        return
    print(",".join(bench.CSV_COLUMNS))
    for r in report.rows:
        print(f"{r.train_sources},{r.test_source},{r.perturbation},{r.param},"
              f"{r.auc:.4f},{r.ap:.4f},{r.n_real},{r.n_fake}")


COMMANDS = {
    "synth": cmd_synth,
    "spectrum": cmd_spectrum,
    "mean-spectrum": cmd_mean_spectrum,
    "perturb": cmd_perturb,
    "train": cmd_train,
    "eval": cmd_eval,
    "robustness": cmd_robustness,
    "report": cmd_report,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = resolve_config(args)
        _echo(args, cfg)
        COMMANDS[args.command](args, cfg)
    except UsageError as exc:
        print(f"freqspec {args.command}: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (FreqSpecError, OSError, ValueError) as exc:
        print(f"freqspec {args.command}: {type(exc).__name__}: {exc}", file=sys.stderr)
        return RUNTIME_ERROR
    return 0


if __name__ == "__main__":
    sys.exit(main())
