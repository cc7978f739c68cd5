"""Command-line interface: gen-data, train, eval, and detect.

Every command resolves one RunConfig (file, then flag overrides), echoes
the fully resolved document to an effective-config sidecar next to its
output, and reports failures through a fixed exit-code contract:

    0 success          3 invalid configuration   5 numeric failure
    1 fake detected    4 bad or missing data     6 checkpoint version
    2 I/O failure
"""

import argparse
import os
import sys

from . import checkpoint as ckpt
from .config import RunConfig, load_run_config
from .data import SPLITS, generate_corpus, load_corpus, load_pgm, normalize
from .data import split as split_dataset
from .data import write_corpus
from .errors import (ConfigError, DataError, NumericError, PayguardError,
                     VersionError)
from .gan import (DEFAULT_SEED, GanModel, TrainConfig, detect, sample_latent,
                  train)
from .metrics import MetricsReport, build_report
from .nn import forward
from .rng import Rng, derive_seed
from .tensor import Tensor

EXIT_OK = 0
EXIT_FAKE_DETECTED = 1
EXIT_IO = 2
EXIT_CONFIG = 3
EXIT_DATA = 4
EXIT_NUMERIC = 5
EXIT_VERSION = 6

SIDECAR_NAME = "effective-config.json"


class _Parser(argparse.ArgumentParser):
    """Routes argparse usage errors into the exit-code contract."""

    def error(self, message):
        raise ConfigError(message)


def _u64(text: str) -> int:
    value = int(text)
    if not 0 <= value < 2 ** 64:
        raise argparse.ArgumentTypeError(
            f"seed must fit in an unsigned 64-bit integer, got {text}")
    return value


def _build_parser() -> _Parser:
    parser = _Parser(prog="payguard",
                     description="GAN-trained detector for manipulated "
                                 "payment images.")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen-data", help="generate the synthetic corpus")
    gen.add_argument("--config", help="run configuration JSON")
    gen.add_argument("--seed", type=_u64, help="override every seed")
    gen.add_argument("--out", help="corpus output directory")
    gen.set_defaults(func=cmd_gen_data)

    tr = sub.add_parser("train", help="train the adversarial pair")
    tr.add_argument("data_dir", nargs="?", help="corpus directory")
    tr.add_argument("--config", help="run configuration JSON")
    tr.add_argument("--seed", type=_u64, help="override every seed")
    tr.add_argument("--out", help="checkpoint output path")
    tr.set_defaults(func=cmd_train)

    ev = sub.add_parser("eval", help="score a split and write reports")
    ev.add_argument("checkpoint", nargs="?", help="checkpoint path")
    ev.add_argument("data_dir", nargs="?", help="corpus directory")
    ev.add_argument("--config", help="run configuration JSON")
    ev.add_argument("--split", choices=SPLITS, default="test",
                    help="which split to score")
    ev.add_argument("--threshold", type=float,
                    help="real/fake decision threshold")
    ev.add_argument("--seed", type=_u64, help="override every seed")
    ev.add_argument("--out", help="report output directory")
    ev.add_argument("--manipulated-only", action="store_true",
                    help="score only the stored corpus, without fresh "
                         "generator samples")
    ev.set_defaults(func=cmd_eval)

    de = sub.add_parser("detect", help="classify individual PGM images")
    de.add_argument("checkpoint", help="checkpoint path")
    de.add_argument("images", nargs="*", help="PGM files to score")
    de.add_argument("--config", help="run configuration JSON")
    de.add_argument("--threshold", type=float,
                    help="real/fake decision threshold")
    de.add_argument("--out", help="optional directory for the config sidecar")
    de.set_defaults(func=cmd_detect)
    return parser


def _resolve_config(args) -> RunConfig:
    cfg = load_run_config(args.config) if args.config else RunConfig()
    if getattr(args, "seed", None) is not None:
        cfg = cfg.with_seed(args.seed)
    threshold = getattr(args, "threshold", None)
    if threshold is not None:
        if not 0.0 < threshold < 1.0:
            raise ConfigError(
                f"threshold must lie in (0, 1), got {threshold}")
        cfg = RunConfig(cfg.corpus,
                        TrainConfig.from_dict(
                            {**cfg.train.to_dict(), "threshold": threshold}),
                        cfg.split, cfg.paths)
    return cfg


def _write_sidecar(cfg: RunConfig, directory) -> None:
    os.makedirs(directory, exist_ok=True)
    with open(os.path.join(directory, SIDECAR_NAME), "w",
              encoding="utf-8") as fh:
        fh.write(cfg.effective_json())


def cmd_gen_data(args) -> int:
    cfg = _resolve_config(args)
    out_dir = args.out or cfg.paths.corpus_dir
    dataset = split_dataset(generate_corpus(cfg.corpus), cfg.split,
                            seed=cfg.corpus.seed)
    write_corpus(dataset, out_dir, cfg.corpus)
    _write_sidecar(cfg, out_dir)
    print(f"wrote {dataset.n} images to {out_dir}")
    for name in SPLITS:
        rows = [i for i in range(dataset.n) if dataset.split[i] == name]
        real = sum(1 for i in rows if dataset.labels[i] == 1)
        print(f"  {name}: {real} real / {len(rows) - real} fake")
    return EXIT_OK


def cmd_train(args) -> int:
    cfg = _resolve_config(args)
    data_dir = args.data_dir or cfg.paths.corpus_dir
    ckpt_path = args.out or cfg.paths.checkpoint
    dataset, _ = load_corpus(data_dir)
    _, height, width = dataset.images.shape
    model = GanModel.build(height * width, seed=cfg.train.seed)
    result = train(model, dataset, cfg.train)

    parent = os.path.dirname(ckpt_path)
    if parent:
        os.makedirs(parent, exist_ok=True)
    ckpt.save(ckpt.Checkpoint(model=result.model, g_state=result.g_state,
                              d_state=result.d_state,
                              rng_state=result.rng_state,
                              iteration=result.iteration,
                              height=height, width=width), ckpt_path)
    _write_trace(result.trace, _sibling(ckpt_path, ".trace.csv"))
    _write_sidecar(cfg, parent or ".")
    if result.trace:
        last = result.trace[-1]
        print(f"trained {result.iteration} iterations: "
              f"d_loss={last.d_loss:.4f} g_loss={last.g_loss:.4f}")
    else:
        print(f"trained {result.iteration} iterations")
    print(f"checkpoint written to {ckpt_path}")
    return EXIT_OK


def _sibling(path, suffix):
    stem, _ = os.path.splitext(path)
    return stem + suffix


def _write_trace(trace, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("iteration,d_loss,g_loss\n")
        for entry in trace:
            fh.write(f"{entry.iteration},{entry.d_loss!r},{entry.g_loss!r}\n")


def evaluate_split(model: GanModel, dataset, split_name: str,
                   threshold: float = 0.5, include_generated: bool = False,
                   seed: int = DEFAULT_SEED) -> MetricsReport:
    """Score one split with the discriminator and build its report.

    With include_generated, as many fresh generator samples as the split
    has fake images are scored alongside it under the kind "generated".
    """
    rows = [i for i in range(dataset.n) if dataset.split[i] == split_name]
    if not rows:
        raise DataError(f"split {split_name!r} is empty")
    labels = [dataset.labels[i] for i in rows]
    kinds = [dataset.fake_kind[i] for i in rows]
    results = detect(model, dataset.flat(rows), threshold)
    scores = [score for score, _ in results]

    n_generated = labels.count(0)
    if include_generated and n_generated > 0:
        z = sample_latent(n_generated, model.latent_dim,
                          Rng(derive_seed(seed, "eval", split_name)))
        samples, _ = forward(model.generator, z)
        scores += [score for score, _ in detect(model, samples, threshold)]
        labels += [0] * n_generated
        kinds += ["generated"] * n_generated
    return build_report(scores, labels, kinds, threshold)


def cmd_eval(args) -> int:
    cfg = _resolve_config(args)
    ckpt_path = args.checkpoint or cfg.paths.checkpoint
    data_dir = args.data_dir or cfg.paths.corpus_dir
    out_dir = args.out or cfg.paths.report_dir
    loaded = ckpt.load(ckpt_path)
    dataset, _ = load_corpus(data_dir)
    _, height, width = dataset.images.shape
    if (height, width) != (loaded.height, loaded.width):
        raise DataError(
            f"corpus images are {height}x{width} but the checkpoint was "
            f"trained on {loaded.height}x{loaded.width}")

    report = evaluate_split(loaded.model, dataset, args.split,
                            cfg.train.threshold,
                            include_generated=not args.manipulated_only,
                            seed=cfg.train.seed)
    os.makedirs(out_dir, exist_ok=True)
    with open(os.path.join(out_dir, "report.json"), "w",
              encoding="utf-8") as fh:
        fh.write(report.to_json())
    with open(os.path.join(out_dir, "report.csv"), "w",
              encoding="utf-8") as fh:
        fh.write(report.to_csv())
    with open(os.path.join(out_dir, "roc.csv"), "w", encoding="utf-8") as fh:
        fh.write("fpr,tpr\n")
        for fpr, tpr in report.roc_points:
            fh.write(f"{fpr!r},{tpr!r}\n")
    _write_sidecar(cfg, out_dir)

    print(f"split={args.split} n={report.confusion.total}")
    for name in ("accuracy", "precision", "recall", "f1", "auc"):
        print(f"  {name:<9} {getattr(report, name):.4f}")
    return EXIT_OK


def cmd_detect(args) -> int:
    cfg = _resolve_config(args)
    loaded = ckpt.load(args.checkpoint)
    if args.out:
        _write_sidecar(cfg, args.out)
    if not args.images:
        return EXIT_OK

    pixels = []
    for path in args.images:
        raw, height, width = load_pgm(path)
        if (height, width) != (loaded.height, loaded.width):
            raise DataError(
                f"{path}: image is {height}x{width} but the checkpoint "
                f"expects {loaded.height}x{loaded.width}")
        pixels.extend(normalize(raw, height, width).data)
    batch = Tensor((len(args.images), loaded.height * loaded.width), pixels)
    results = detect(loaded.model, batch, cfg.train.threshold)

    any_fake = False
    for path, (score, label) in zip(args.images, results):
        any_fake = any_fake or label == "fake"
        print(f"{path}\t{score:.6f}\t{label}")
    return EXIT_FAKE_DETECTED if any_fake else EXIT_OK


def main(argv=None) -> int:
    try:
        args = _build_parser().parse_args(argv)
        return args.func(args)
    except ConfigError as err:
        return _fail(err, EXIT_CONFIG)
    except VersionError as err:
        return _fail(err, EXIT_VERSION)
    except NumericError as err:
        return _fail(err, EXIT_NUMERIC)
    except PayguardError as err:
        return _fail(err, EXIT_DATA)
    except OSError as err:
        return _fail(err, EXIT_IO)


def _fail(err, code: int) -> int:
    print(f"error: {err}", file=sys.stderr)
    return code


def entry() -> None:
    sys.exit(main(sys.argv[1:]))
