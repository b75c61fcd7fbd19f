"""
Face Beauty Cascade - Command Line Entry Point
Subcommands: decompose, train, cascade, eval, crossval, predict, visualize, synth
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Callable, Dict, List, Optional

import numpy as np
import pandas as pd
from dotenv import load_dotenv

from app.config import RunConfig, resolve_run_config, settings
from app.db.cache import DecompositionCache
from app.db.model_store import load_model
from app.errors import ArgumentError, ConfigError, FbpError
from app.ingestion.dataset import kfold, load_index, split_train_test
from app.net.architectures import get_spec
from app.predictor import BeautyPredictor
from app.tensor import set_precision
from app.tools.cascade import cascade_train
from app.tools.evaluate import EvalReport, evaluate
from app.tools.extract import ChannelExtractionTool
from app.tools.synth import synth_dataset
from app.tools.train import make_extractor, train
from app.viz.feature_maps import feature_maps
from app.viz.scatter import scatter_report

logger = logging.getLogger("app")

RESOLVED_NAME = "config.resolved"
CHECKSUM_NAME = "config.sha256"
MAX_VISUALIZED_LAYERS = 4

# Extra spellings for a few RunConfig fields
FLAG_ALIASES = {
    "k_folds": ["--k"],
    "viz_layer": ["--layer"],
    "viz_post_pool": ["--post-pool"],
}
BOOL_FIELDS = {"fixed_crops", "multi_crop", "viz_post_pool"}


def setup_logging(level: str) -> None:
    """Single stderr handler; data never goes to this stream"""
    logging.basicConfig(
        level=level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    logging.getLogger().setLevel(level.upper())


def prepare_run_dir(config: RunConfig, resume: bool) -> Path:
    """
    Create the run directory and record the resolved config

    A directory that already holds a run is only reused with --resume, and
    only when its recorded checksum equals this config's.
    """
    run_dir = Path(config.out_dir)
    checksum = config.checksum()
    marker = run_dir / CHECKSUM_NAME
    if marker.exists():
        recorded = marker.read_text(encoding="utf-8").strip()
        if not resume:
            raise ConfigError([f"{run_dir} already holds a run; pass --resume to reuse it"])
        if recorded != checksum:
            raise ConfigError([f"{run_dir} was run with a different config (sha256 {recorded[:12]}...)"])
        logger.info("resuming %s", run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    (run_dir / RESOLVED_NAME).write_text(config.to_text(), encoding="utf-8")
    marker.write_text(checksum + "\n", encoding="utf-8")
    return run_dir


def require_index(config: RunConfig):
    if not config.index:
        raise ConfigError(["index: required for this command"])
    index = load_index(config.index)
    logger.info("index %s: %d %s records", config.index, len(index), index.provenance)
    return index


def require_model(config: RunConfig) -> Path:
    if not config.model:
        raise ConfigError(["model: required for this command"])
    return Path(config.model)


def build_extractor(config: RunConfig, size: int) -> ChannelExtractionTool:
    return ChannelExtractionTool(
        config.wls_params(), size, cache=DecompositionCache(settings.cache_dir), threads=config.threads
    )


def write_report(report: EvalReport, run_dir: Path, name: str = "report") -> None:
    report.save(run_dir / f"{name}.json")
    if report.samples:
        scatter_report(report, run_dir / f"{name}.scatter.ppm")
    if report.pearson_r is None:
        logger.warning("%s: pearson undefined (%s)", name, report.error)
    else:
        logger.info("%s: pearson=%.4f mae=%.4f rmse=%.4f", name, report.pearson_r, report.mae, report.rmse)


def cmd_decompose(config: RunConfig, args: argparse.Namespace) -> int:
    """Write base/detail/a/b PGM planes for every input image"""
    run_dir = prepare_run_dir(config, args.resume)
    extractor = build_extractor(config, get_spec(config.spec).input_size)
    result = extractor.decompose_multiple(args.images, run_dir)
    logger.info("decomposed %d/%d images", result["successful"], result["total_files"])
    return 0 if result["failed"] == 0 else 1


def cmd_train(config: RunConfig, args: argparse.Namespace) -> int:
    """Train one channel set on a seeded train/test split"""
    index = require_index(config)
    run_dir = prepare_run_dir(config, args.resume)
    split = split_train_test(index, config.n_train, config.seed)
    cfg = config.train_config()
    extractor = make_extractor(cfg, DecompositionCache(settings.cache_dir))

    result = train(cfg, index, split, extractor=extractor, out_dir=run_dir)
    report = evaluate(result.network, result.descriptor, index, split.test, extractor, cfg.multi_crop, cfg.fingerprint())
    write_report(report, run_dir)
    return 0


def cmd_cascade(config: RunConfig, args: argparse.Namespace) -> int:
    """Train the stage list, fine-tuning each stage from the previous one"""
    index = require_index(config)
    run_dir = prepare_run_dir(config, args.resume)
    split = split_train_test(index, config.n_train, config.seed)
    cfg = config.train_config()
    extractor = make_extractor(cfg, DecompositionCache(settings.cache_dir))

    result = cascade_train(
        cfg,
        index,
        split,
        stages=config.stage_list(),
        extractor=extractor,
        out_dir=run_dir,
        finetune_lr_factor=config.finetune_lr_factor,
        adapt_mode=config.adapt_mode,
    )
    final = result.final
    report = evaluate(final.network, final.descriptor, index, split.test, extractor, cfg.multi_crop, cfg.fingerprint())
    write_report(report, run_dir)
    return 0


def cmd_eval(config: RunConfig, args: argparse.Namespace) -> int:
    """Score a saved model on every record of an index"""
    model_path = require_model(config)
    index = require_index(config)
    run_dir = prepare_run_dir(config, args.resume)
    network, descriptor = load_model(model_path)
    extractor = build_extractor(config, network.spec.input_size)
    report = evaluate(
        network, descriptor, index, list(range(len(index))), extractor,
        config.multi_crop, config.train_config(descriptor.channel_set).fingerprint(),
    )
    write_report(report, run_dir)
    return 0


def cmd_crossval(config: RunConfig, args: argparse.Namespace) -> int:
    """k-fold protocol: one model per fold plus a summary table with an average row"""
    index = require_index(config)
    run_dir = prepare_run_dir(config, args.resume)
    cfg = config.train_config()
    extractor = make_extractor(cfg, DecompositionCache(settings.cache_dir))

    rows = []
    for number, split in enumerate(kfold(index, config.k_folds, config.seed), start=1):
        fold_dir = run_dir / f"fold{number}"
        logger.info("fold %d/%d: %d train, %d test", number, config.k_folds, len(split.train), len(split.test))
        result = train(cfg, index, split, extractor=extractor, out_dir=fold_dir)
        report = evaluate(result.network, result.descriptor, index, split.test, extractor, cfg.multi_crop, cfg.fingerprint())
        write_report(report, fold_dir)
        pearson_r = report.pearson_r if report.pearson_r is not None else float("nan")
        rows.append((str(number), pearson_r, report.mae, report.rmse))

    frame = pd.DataFrame(rows, columns=["fold", "pearson", "mae", "rmse"])
    average = ("average", *frame[["pearson", "mae", "rmse"]].mean(skipna=True).tolist())
    frame.loc[len(frame)] = average
    frame.to_csv(run_dir / "crossval.csv", index=False, float_format="%.17g")
    logger.info("crossval: mean pearson=%.4f over %d folds", average[1], config.k_folds)
    return 0


def cmd_predict(config: RunConfig, args: argparse.Namespace) -> int:
    """Print `path score` for every image"""
    predictor = BeautyPredictor(
        require_model(config),
        config.wls_params(),
        cache=DecompositionCache(settings.cache_dir),
        threads=config.threads,
        multi_crop=config.multi_crop,
    )
    for path, score in predictor.predict(args.images):
        print(f"{path} {score:.6f}")
    return 0


def cmd_visualize(config: RunConfig, args: argparse.Namespace) -> int:
    """Feature-map grids of one conv layer, or of the first four when no layer is given"""
    model_path = require_model(config)
    run_dir = prepare_run_dir(config, args.resume)
    network, descriptor = load_model(model_path)
    n_conv = len(network.spec.conv_layers())
    if config.viz_layer:
        layers = [config.viz_layer]
    else:
        layers = list(range(1, min(MAX_VISUALIZED_LAYERS, n_conv) + 1))
    extractor = build_extractor(config, network.spec.input_size)

    image = Path(args.image)
    for layer in layers:
        out_path = run_dir / f"{image.stem}.conv{layer}.pgm"
        grid = feature_maps(network, descriptor, image, layer, out_path, extractor, config.viz_post_pool)
        logger.info("conv%d: %d maps in a %dx%d grid -> %s", layer, len(grid.maps), grid.rows, grid.cols, out_path)
    return 0


def cmd_synth(config: RunConfig, args: argparse.Namespace) -> int:
    """Write a synthetic corpus and its index.csv into the run directory"""
    run_dir = prepare_run_dir(config, args.resume)
    index = synth_dataset(config.synth_n, config.synth_size, config.seed, run_dir)
    scores = np.array([r.score for r in index.records])
    logger.info("synthetic scores span [%.3f, %.3f]", scores.min(), scores.max())
    return 0


COMMANDS: Dict[str, Callable[[RunConfig, argparse.Namespace], int]] = {
    "decompose": cmd_decompose,
    "train": cmd_train,
    "cascade": cmd_cascade,
    "eval": cmd_eval,
    "crossval": cmd_crossval,
    "predict": cmd_predict,
    "visualize": cmd_visualize,
    "synth": cmd_synth,
}


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="flat key = value config file")
    common.add_argument(
        "--set", action="append", default=[], metavar="KEY=VALUE", help="override one config key (repeatable)"
    )
    common.add_argument("--resume", action="store_true", help="reuse a run directory with the same config")
    common.add_argument("--log-level", default=None, help="logging level (default FBP_LOG_LEVEL or INFO)")

    fields = common.add_argument_group("config keys")
    for name, info in RunConfig.model_fields.items():
        flags = [f"--{name.replace('_', '-')}"] + FLAG_ALIASES.get(name, [])
        if name in BOOL_FIELDS:
            fields.add_argument(*flags, dest=name, nargs="?", const="true", default=None, metavar="BOOL")
        else:
            fields.add_argument(*flags, dest=name, default=None, help=info.description)
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_flags()
    parser = argparse.ArgumentParser(
        prog="fbp", description="Facial attractiveness prediction with cascaded fine-tuning"
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("decompose", parents=[common], help=cmd_decompose.__doc__).add_argument("images", nargs="+")
    sub.add_parser("train", parents=[common], help=cmd_train.__doc__)
    sub.add_parser("cascade", parents=[common], help=cmd_cascade.__doc__)
    sub.add_parser("eval", parents=[common], help=cmd_eval.__doc__)
    sub.add_parser("crossval", parents=[common], help=cmd_crossval.__doc__)
    sub.add_parser("predict", parents=[common], help=cmd_predict.__doc__).add_argument("images", nargs="+")
    sub.add_parser("visualize", parents=[common], help=cmd_visualize.__doc__).add_argument("image")
    sub.add_parser("synth", parents=[common], help=cmd_synth.__doc__)
    return parser


def collect_overrides(args: argparse.Namespace) -> Dict[str, Optional[str]]:
    """--set pairs first, then dedicated flags, so flags win"""
    overrides: Dict[str, Optional[str]] = {}
    for item in args.set:
        key, sep, value = item.partition("=")
        if not sep:
            raise ConfigError([f"--set expects KEY=VALUE, got {item!r}"])
        overrides[key.strip()] = value.strip()
    for name in RunConfig.model_fields:
        value = getattr(args, name, None)
        if value is not None:
            overrides[name] = value
    return overrides


def run(argv: Optional[List[str]] = None) -> int:
    """
    Parse arguments and dispatch one subcommand

    Returns:
        Process exit status: 0 iff the command raised nothing
    """
    load_dotenv()
    args = build_parser().parse_args(argv)
    setup_logging(args.log_level or settings.log_level)

    try:
        config = resolve_run_config(args.config, collect_overrides(args))
        is_valid, error_msg = config.validate_paths()
        if not is_valid:
            raise ArgumentError(error_msg)
        for image in getattr(args, "images", None) or [getattr(args, "image", None)]:
            if image is not None and args.command != "decompose" and not Path(image).exists():
                raise ArgumentError(f"image not found: {image}")
        set_precision(config.precision)
        return COMMANDS[args.command](config, args)
    except ConfigError as e:
        for problem in e.problems:
            logger.error("config: %s", problem)
        return 1
    except (FbpError, OSError) as e:
        logger.error("%s failed: %s", args.command, e)
        return 1


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
