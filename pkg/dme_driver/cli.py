"""Command-line entry point: ``dme-driver <command>``.

Exit codes: 0 success, 1 gated threshold failure, 2 usage or input error,
3 numeric failure.
"""
from __future__ import annotations

import argparse
import asyncio
import logging
import sys
from pathlib import Path
from typing import Sequence

import pandas as pd

from . import __version__
from .clients.text_generation import TextGenerationClient
from .config import RunConfig, dump_run_config, get_settings, load_run_config
from .database import TRACE_FILE, init_db, make_engine, record_traces, trace_join_coverage
from .dataset import VOCAB_FILE, build_vocabulary, generate_dataset, load_dataset
from .decision.scripted import ground_truth_logic
from .encoding.vocab import Vocabulary
from .evaluation.judge import OfflineJudge, RemoteJudge
from .evaluation.report import emit_report, judge_table, read_report, report_format
from .evaluation.runner import evaluate
from .exceptions import (
    ContractError,
    DmeDriverError,
    NonFiniteError,
    RecordFormatError,
    TrainingDivergedError,
)
from .hbd.gaze import gaze_to_bbox, read_gaze_csv
from .hbd.records import read_records
from .models.training import AblationMode
from .planner.params import load_checkpoint, save_checkpoint
from .planner.train import train, write_loss_log
from .plots import plot_loss_curves, plot_metric_bars

logger = logging.getLogger(__name__)

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
CHECKPOINT_FILE = "planner.dmep"
LOSS_FILE = "loss.csv"
CONFIG_FILE = "config.toml"
RUN_LOG = "run.log"

EXIT_OK, EXIT_GATE, EXIT_USAGE, EXIT_NUMERIC = 0, 1, 2, 3


def configure_logging(verbose: bool) -> None:
    """INFO by default; DEBUG with --verbose or DME_DEBUG=true."""
    debug = verbose or get_settings().debug
    logging.basicConfig(level=logging.DEBUG if debug else logging.INFO, format=LOG_FORMAT, force=True)


def attach_run_log(run_dir: Path) -> logging.Handler:
    run_dir.mkdir(parents=True, exist_ok=True)
    handler = logging.FileHandler(run_dir / RUN_LOG, encoding="utf-8")
    handler.setFormatter(logging.Formatter(LOG_FORMAT))
    logging.getLogger().addHandler(handler)
    return handler


def _load_config(path: Path | None) -> RunConfig:
    return load_run_config(path) if path is not None else RunConfig()


def _load_vocab(data_dir: Path) -> Vocabulary:
    path = data_dir / VOCAB_FILE
    if path.exists():
        return Vocabulary.load(path)
    logger.warning(f"{path} not found; rebuilding the template vocabulary")
    return build_vocabulary()


def cmd_gen_data(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    if args.scenario:
        config = config.model_copy(update={"data": config.data.model_copy(update={"scenario": args.scenario})})
    manifest = generate_dataset(args.seed, args.scenes, args.out, config)
    dump_run_config(config.model_copy(update={"seed": args.seed, "out_dir": args.out}), args.out / CONFIG_FILE)
    print(manifest.model_dump_json(indent=2))
    return EXIT_OK


def _train_run(config: RunConfig, data_dir: Path, run_dir: Path) -> None:
    dataset = load_dataset(data_dir)
    vocab = _load_vocab(data_dir)
    result = train(dataset, config.train, vocab, config.model, config.loss, config.rules)
    run_dir.mkdir(parents=True, exist_ok=True)
    save_checkpoint(result.params, run_dir / CHECKPOINT_FILE)
    write_loss_log(result.log, run_dir / LOSS_FILE)
    vocab.save(run_dir / VOCAB_FILE)
    dump_run_config(config.model_copy(update={"out_dir": run_dir}), run_dir / CONFIG_FILE)


def cmd_train(args: argparse.Namespace) -> int:
    config = load_run_config(args.config)
    run_dir = args.out or config.out_dir
    handler = attach_run_log(run_dir)
    try:
        data_dir = config.train.dataset or config.data.train_path
        logger.info(f"Training {config.train.ablation.value} on {data_dir} into {run_dir}")
        _train_run(config, data_dir, run_dir)
    finally:
        logging.getLogger().removeHandler(handler)
        handler.close()
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    if args.checkpoint is None and not args.expert:
        raise ContractError("eval needs --checkpoint unless --expert is given")
    run_dir = args.out or args.report.parent
    handler = attach_run_log(run_dir)
    try:
        if args.expert:
            params = None
            config = _load_config(args.config)
            vocab = _load_vocab(args.data)
            run_id = "expert"
        else:
            if not args.checkpoint.exists():
                raise ContractError(f"checkpoint {args.checkpoint} does not exist")
            config = load_run_config(args.config or args.checkpoint.parent / CONFIG_FILE)
            params = load_checkpoint(args.checkpoint)
            vocab = Vocabulary.load(args.checkpoint.parent / VOCAB_FILE)
            run_id = args.checkpoint.parent.name
        mode = config.train.ablation
        result = evaluate(load_dataset(args.data), params, vocab, mode, config.rules, args.jobs)
        emit_report(result.metrics, args.report, report_format(args.report))

        engine = make_engine(run_dir / TRACE_FILE)
        init_db(engine)
        record_traces(engine, run_id, mode.value, result.entries)
        coverage = trace_join_coverage(engine, run_id)
        logger.info(f"Decision-trace join coverage for {run_id}: {100.0 * coverage:.1f} %")
    finally:
        logging.getLogger().removeHandler(handler)
        handler.close()

    if args.fail_if_l2_above is not None and result.metrics.l2_avg > args.fail_if_l2_above:
        logger.error(f"L2 avg {result.metrics.l2_avg:.2f} m exceeds the gate {args.fail_if_l2_above:.2f} m")
        return EXIT_GATE
    return EXIT_OK


PRESETS = {"table3": list(AblationMode)}


def cmd_ablate(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    out: Path = args.out
    handler = attach_run_log(out)
    try:
        train_dir = config.train.dataset or config.data.train_path
        eval_dir = args.eval_data or config.data.eval_path
        eval_set = load_dataset(eval_dir)
        logger.info(f"All ablation rows share {len(eval_set)} eval scenes: {[s.scene_id for s, _ in eval_set]}")
        engine = make_engine(out / TRACE_FILE)
        init_db(engine)

        rows = []
        for mode in PRESETS[args.preset]:
            run_dir = out / mode.value
            run_config = config.with_ablation(mode, run_dir)
            logger.info(f"Ablation row {mode.label!r} -> {run_dir}")
            _train_run(run_config, train_dir, run_dir)
            params = load_checkpoint(run_dir / CHECKPOINT_FILE)
            vocab = Vocabulary.load(run_dir / VOCAB_FILE)
            result = evaluate(eval_set, params, vocab, mode, config.rules, args.jobs)
            record_traces(engine, mode.value, mode.value, result.entries)
            rows.append((mode.label, result.metrics))

        emit_report(rows, out / "ablation.csv", "csv")
        emit_report(rows, out / "ablation.md", "markdown")
        dump_run_config(config.model_copy(update={"out_dir": out}), out / CONFIG_FILE)
    finally:
        logging.getLogger().removeHandler(handler)
        handler.close()
    return EXIT_OK


async def _remote_scores(judge: RemoteJudge, pairs):
    return await asyncio.gather(*(judge.ascore(pred, ref) for pred, ref in pairs))


def cmd_judge(args: argparse.Namespace) -> int:
    config = _load_config(args.config)
    dataset = load_dataset(args.data)
    pairs = [(staged, ground_truth_logic(scene)) for scene, staged in dataset]
    if args.remote:
        if not config.clients.judge_endpoint:
            raise ContractError("--remote needs clients.judge_endpoint in the config")
        client = TextGenerationClient(config.clients.judge_endpoint, config.clients.timeout_s, config.clients.audit_log)
        scores = asyncio.run(_remote_scores(RemoteJudge(client, config.clients.max_retries), pairs))
    else:
        judge = OfflineJudge()
        scores = [judge.score(pred, ref) for pred, ref in pairs]
    table = judge_table(scores)
    if args.report:
        emit_report(table, args.report, report_format(args.report))
    print(table.to_string(index=False, float_format=lambda v: f"{v:.2f}"))
    return EXIT_OK


def cmd_plot(args: argparse.Namespace) -> int:
    if args.loss is None and args.report is None:
        raise ContractError("plot needs --loss and/or --report")
    args.out.mkdir(parents=True, exist_ok=True)
    if args.loss is not None:
        plot_loss_curves(pd.read_csv(args.loss), args.out / "loss_curves.svg")
    if args.report is not None:
        plot_metric_bars(read_report(args.report), args.out / "metrics.svg")
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    result = read_records(args.path, strict=not args.lenient)
    review = sum(1 for record in result.records if record.needs_review)
    print(f"{len(result.records)} records valid, {len(result.diagnostics)} rejected, {review} flagged for review")
    return EXIT_OK if result.ok else EXIT_USAGE


def cmd_gaze_bbox(args: argparse.Namespace) -> int:
    rows = []
    for window, trace in enumerate(read_gaze_csv(args.path)):
        box = gaze_to_bbox(trace)
        rows.append({"window": window, "first_frame": trace.frames[0], "points": len(trace.points), **box.model_dump()})
    table = pd.DataFrame(rows, columns=["window", "first_frame", "points", "x_min", "y_min", "x_max", "y_max"])
    if args.out:
        table.to_csv(args.out, index=False)
        logger.info(f"Wrote {len(table)} gaze boxes to {args.out}")
    else:
        print(table.to_csv(index=False), end="")
    return EXIT_OK


def cmd_check_trace(args: argparse.Namespace) -> int:
    if not args.db.exists():
        raise ContractError(f"trace database {args.db} does not exist")
    coverage = trace_join_coverage(make_engine(args.db), args.run_id)
    print(f"join coverage {100.0 * coverage:.2f} %")
    return EXIT_OK if coverage >= 1.0 else EXIT_GATE


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dme-driver", description="Desk-scale decision-maker / executor driving pipeline.")
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument("-v", "--verbose", action="store_true", help="log at DEBUG level")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen-data", help="generate scenes, Decision-Maker outputs and dialogues")
    p.add_argument("--seed", type=int, default=7)
    p.add_argument("--scenes", type=int, required=True)
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    p.add_argument("--scenario", help="decision category for every scene, default random")
    p.set_defaults(handler=cmd_gen_data)

    p = sub.add_parser("train", help="train the planner from a TOML run config")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--out", type=Path, help="run directory, default out_dir from the config")
    p.set_defaults(handler=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint (or the expert labels) on held-out scenes")
    p.add_argument("--checkpoint", type=Path)
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--report", type=Path, required=True, help=".csv or .md")
    p.add_argument("--config", type=Path, help="default: config.toml next to the checkpoint")
    p.add_argument("--expert", action="store_true", help="score the expert trajectories themselves")
    p.add_argument("--fail-if-l2-above", type=float, metavar="METERS")
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--out", type=Path, help="directory for run.log and the decision trace, default the report's")
    p.set_defaults(handler=cmd_eval)

    p = sub.add_parser("ablate", help="train and evaluate every ablation row")
    p.add_argument("--preset", choices=sorted(PRESETS), default="table3")
    p.add_argument("--out", type=Path, required=True)
    p.add_argument("--config", type=Path)
    p.add_argument("--eval-data", type=Path)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(handler=cmd_ablate)

    p = sub.add_parser("judge", help="score staged Decision-Maker outputs against ground-truth texts")
    p.add_argument("--data", type=Path, required=True)
    p.add_argument("--report", type=Path)
    p.add_argument("--config", type=Path)
    p.add_argument("--remote", action="store_true", help="use the judge endpoint from the config")
    p.set_defaults(handler=cmd_judge)

    p = sub.add_parser("plot", help="render SVG loss curves and metric bars")
    p.add_argument("--loss", type=Path)
    p.add_argument("--report", type=Path)
    p.add_argument("--out", type=Path, required=True)
    p.set_defaults(handler=cmd_plot)

    p = sub.add_parser("validate", help="check a dialogue record file")
    p.add_argument("path", type=Path)
    p.add_argument("--lenient", action="store_true", help="skip bad lines instead of failing on the first")
    p.set_defaults(handler=cmd_validate)

    p = sub.add_parser("gaze-bbox", help="bounding boxes of 24-frame windows from a frame,x,y CSV")
    p.add_argument("path", type=Path)
    p.add_argument("--out", type=Path)
    p.set_defaults(handler=cmd_gaze_bbox)

    p = sub.add_parser("check-trace", help="fail unless every planned trajectory joins its logic texts")
    p.add_argument("db", type=Path)
    p.add_argument("--run-id")
    p.set_defaults(handler=cmd_check_trace)
    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose)
    if args.command == "gen-data" and args.scenes < 1:
        parser.error(f"--scenes must be >= 1, got {args.scenes}")
    try:
        return args.handler(args)
    except (TrainingDivergedError, NonFiniteError) as e:
        logger.error(f"Numeric failure: {e}")
        return EXIT_NUMERIC
    except (ContractError, RecordFormatError, FileNotFoundError) as e:
        logger.error(f"Input error: {e}")
        return EXIT_USAGE
    except DmeDriverError as e:
        logger.error(f"{type(e).__name__}: {e}")
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
