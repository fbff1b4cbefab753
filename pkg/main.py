"""Main

Main file. Run this file with a subcommand, e.g. ``python main.py train --data d.csv``
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import replace
from pathlib import Path

import pandas as pd

from analysis.temporal import OverlapConfig, average_overlap, interval_distribution, \
    overlap_curve, user_overlaps, write_interval_csv, write_overlap_csv, write_summary_json
from data.dataset import Dataset, load_dataset, preprocess, save_dataset, write_stats
from data.interactions import read_frame, write_interactions
from data.sequences import SPLITS
from data.synth import synth_generate
from evaluation.evaluator import evaluate
from includes.config import RunConfig
from includes.exceptions import TemProxError
from model.network import load_checkpoint
from training.includes.constants import ABLATIONS
from training.sweep import SEARCH_SPACE, sweep
from training.trainer import train_model

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# flag destination -> dotted config key
OVERRIDES = {
    "seed": "seed",
    "out": "out",
    "delta": "train.delta",
    "lam": "train.lam",
    "tau": "train.tau",
    "kt": "model.clip_time",
    "rho": "train.rho",
    "ablation": "train.ablation",
    "k": "train.k",
    "num_neg": "train.num_negatives",
    "epochs": "train.epochs",
    "preset": "data.preset",
    "workers": "sweep.workers",
    "top_u": "analysis.top_u",
    "data": "data.path",
    "input": "data.path",
    "checkpoint": "evaluate.checkpoint",
    "split": "evaluate.split",
    "variants": "ablate.variants",
    "deltas": "analysis.curve_deltas",
    "full_grid": "sweep.full_grid",
}


def comma_list(kind):
    """argparse type for ``a,b,c`` lists"""
    def parse(text: str) -> list:
        try:
            return [kind(part.strip()) for part in text.split(",") if part.strip()]
        except ValueError as error:
            raise argparse.ArgumentTypeError(f"bad list {text!r}: {error}") from error
    return parse


class Main:
    """Main
    Command-line entry point

    Args:
        argv (list[str]): arguments without the program name
    """
    def __init__(self, argv: list[str] | None = None):
        self.__argv = list(sys.argv[1:] if argv is None else argv)
        self.__parser = self.build_parser()

    @staticmethod
    def build_parser() -> argparse.ArgumentParser:
        common = argparse.ArgumentParser(add_help=False)
        common.add_argument("--config", help="YAML run configuration")
        common.add_argument("--seed", type=int)
        common.add_argument("--out", help="output directory (a CSV path for synth)")
        common.add_argument("--log-level", default="INFO",
                            choices=["DEBUG", "INFO", "WARNING", "ERROR"])
        common.add_argument("--quiet", action="store_true", help="no progress bars")

        data = argparse.ArgumentParser(add_help=False)
        data.add_argument("--data", help="dataset .npz or interaction CSV")
        data.add_argument("--preset", help="benchmark thresholds for CSV input")

        model = argparse.ArgumentParser(add_help=False)
        model.add_argument("--delta", type=int)
        model.add_argument("--lambda", dest="lam", type=float)
        model.add_argument("--tau", type=float)
        model.add_argument("--kt", type=int)
        model.add_argument("--rho", type=float)
        model.add_argument("--epochs", type=int)
        model.add_argument("--k", type=int)
        model.add_argument("--num-neg", dest="num_neg", type=int)

        parser = argparse.ArgumentParser(prog="main.py", description="Temporal proximity "
                                         "aware sequential recommendation")
        commands = parser.add_subparsers(dest="command", required=True)

        preprocess_cmd = commands.add_parser("preprocess", parents=[common],
                                             help="filter a CSV log into a dataset")
        preprocess_cmd.add_argument("--in", dest="input", help="interaction CSV (data.path)")
        preprocess_cmd.add_argument("--preset")

        commands.add_parser("synth", parents=[common], help="write a synthetic CSV log")

        commands.add_parser("train", parents=[common, data, model], help="fit a model") \
            .add_argument("--ablation", choices=ABLATIONS)

        evaluate_cmd = commands.add_parser("evaluate", parents=[common, data],
                                           help="score a checkpoint")
        evaluate_cmd.add_argument("--checkpoint")
        evaluate_cmd.add_argument("--split", choices=SPLITS)
        evaluate_cmd.add_argument("--k", type=int)
        evaluate_cmd.add_argument("--num-neg", dest="num_neg", type=int)

        ablate_cmd = commands.add_parser("ablate", parents=[common, data, model],
                                         help="fit every ablation variant")
        ablate_cmd.add_argument("--variants", type=comma_list(str),
                                help=f"comma-separated subset of {','.join(ABLATIONS)}")

        analyze_cmd = commands.add_parser("analyze", parents=[common, data],
                                          help="temporal statistics of a dataset")
        analyze_cmd.add_argument("analysis", choices=["intervals", "overlap"])
        analyze_cmd.add_argument("--delta", type=int)
        analyze_cmd.add_argument("--top-u", dest="top_u", type=int)
        analyze_cmd.add_argument("--deltas", type=comma_list(int),
                                 help="comma-separated radii for the overlap curve")

        sweep_cmd = commands.add_parser("sweep", parents=[common, data, model],
                                        help="grid search with early stopping")
        sweep_cmd.add_argument("--workers", type=int)
        sweep_cmd.add_argument("--full-grid", action="store_true", default=None,
                               help="search every grid key over its full range")
        return parser

    def configure(self, args: argparse.Namespace) -> RunConfig:
        cfg = RunConfig.load(args.config)
        overrides = {key: getattr(args, dest) for dest, key in OVERRIDES.items()
                     if hasattr(args, dest)}
        if args.command == "analyze":
            overrides["analysis.window_radius_days"] = overrides.pop("train.delta", None)
        if args.quiet:
            overrides["train.progress"] = False
        return cfg.override(overrides).resolve()

    @staticmethod
    def load_data(cfg: RunConfig) -> Dataset:
        path = cfg.data.path
        if path is None:
            raise TemProxError("no dataset given; pass --data or set data.path")
        if Path(path).suffix == ".npz":
            return load_dataset(path)
        data = cfg.data.with_preset()
        return preprocess(read_frame(path), data.min_user, data.min_item, data.date_range,
                          data.iterate)

    def start_preprocess(self, args, cfg: RunConfig):
        if cfg.data.path is None:
            raise TemProxError("no interaction log given; pass --in or set data.path")
        data = cfg.data.with_preset()
        dataset = preprocess(read_frame(cfg.data.path), data.min_user, data.min_item,
                             data.date_range, data.iterate)
        out = Path(cfg.out)
        save_dataset(dataset, out / "dataset.npz")
        write_stats(dataset, out / "stats.json")
        cfg.dump(out)

    def start_synth(self, args, cfg: RunConfig):
        path = Path(args.out) if args.out else Path(cfg.out) / "synthetic.csv"
        write_interactions(synth_generate(cfg.synth), path)
        cfg.out = str(path.parent)
        cfg.dump(path.parent)

    def start_train(self, args, cfg: RunConfig):
        dataset = self.load_data(cfg)
        out = Path(cfg.out)
        cfg.dump(out)
        result = train_model(dataset, cfg.model, cfg.train, out)
        result.validation.write(out / "validation.json")
        result.test.write(out / "test.json")

    def start_evaluate(self, args, cfg: RunConfig):
        if cfg.evaluate.checkpoint is None:
            raise TemProxError("no checkpoint given; pass --checkpoint or set evaluate.checkpoint")
        dataset = self.load_data(cfg)
        model = load_checkpoint(cfg.evaluate.checkpoint)
        out = Path(cfg.out)
        cfg.dump(out)
        split = cfg.evaluate.split
        report = evaluate(model, dataset, split, cfg.train.k, cfg.train.num_negatives,
                          cfg.seed, cfg.train.eval_batch_size, strategy=cfg.train.negative_strategy,
                          progress=cfg.train.progress)
        report.write(out / f"eval_{split}.json")

    def start_ablate(self, args, cfg: RunConfig):
        dataset = self.load_data(cfg)
        out = Path(cfg.out)
        cfg.dump(out)
        rows = []
        for variant in cfg.ablate.variants:
            result = train_model(dataset, cfg.model, replace(cfg.train, ablation=variant),
                                 out / variant)
            rows.append({"ablation": variant, "best_epoch": result.best_epoch,
                         f"val_hr@{cfg.train.k}": result.validation.hr_at_k,
                         f"val_ndcg@{cfg.train.k}": result.validation.ndcg_at_k,
                         f"test_hr@{cfg.train.k}": result.test.hr_at_k,
                         f"test_ndcg@{cfg.train.k}": result.test.ndcg_at_k})
        pd.DataFrame(rows).to_csv(out / "ablation.csv", index=False)
        logger.info("Wrote %s", out / "ablation.csv")

    def start_analyze(self, args, cfg: RunConfig):
        dataset = self.load_data(cfg)
        out = Path(cfg.out)
        cfg.dump(out)
        if args.analysis == "intervals":
            histogram = interval_distribution(dataset)
            write_interval_csv(histogram, out / "intervals.csv")
            write_summary_json({"zero_count": histogram.zero_count, "total": histogram.total},
                               out / "intervals_summary.json")
            return
        overlap: OverlapConfig = cfg.analysis
        summary = {"window_radius_days": overlap.window_radius_days, "top_u": overlap.top_u,
                   "average_overlap": average_overlap(dataset, overlap),
                   "curve": overlap_curve(dataset, overlap.curve_deltas, overlap.top_u)}
        write_overlap_csv(dataset, user_overlaps(dataset, overlap.window_radius_days),
                          out / "overlap.csv")
        write_summary_json(summary, out / "overlap_summary.json")
        logger.info("Average overlap within %d days: %.4f", overlap.window_radius_days,
                    summary["average_overlap"])

    def start_sweep(self, args, cfg: RunConfig):
        dataset = self.load_data(cfg)
        out = Path(cfg.out)
        cfg.dump(out)
        grid = cfg.sweep.grid
        if cfg.sweep.full_grid:
            grid = {**SEARCH_SPACE, "seeds": grid.get("seeds", [cfg.seed])}
        sweep(dataset, grid, cfg.model, cfg.train, cfg.sweep.workers, out)

    def run(self) -> int:
        """Dispatch the subcommand

        Returns:
            int: 0 on success, 1 on a configuration or runtime error, 2 on bad usage
        """
        try:
            args = self.__parser.parse_args(self.__argv)
        except SystemExit as exit_:
            return int(exit_.code or 0)
        logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
        try:
            cfg = self.configure(args)
            getattr(self, f"start_{args.command}")(args, cfg)
        except (TemProxError, OSError, KeyError) as error:
            message = error.args[0] if isinstance(error, KeyError) and error.args else error
            print(f"error: {message}", file=sys.stderr)
            return 1
        return 0


if __name__ == "__main__":
    sys.exit(Main().run())
