"""
gtseg command-line entry point.

Exit codes: 0 success, 1 usage or configuration error, 2 data or check failure.
"""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from pydantic import ValidationError

from gtseg.config import RunConfig, apply_overrides
from gtseg.data.dataset import load_dataset, save_dataset
from gtseg.data.folds import kfold_split
from gtseg.data.pgm import PGMFormatError, load_mask
from gtseg.data.synth import synth_generate
from gtseg.evaluation import evaluate_samples, mean_dice, write_evaluation
from gtseg.loss.contour import NoForegroundError
from gtseg.loss.fd_loss import DEFAULT_BETA, DEFAULT_K, DEFAULT_N, compare_shapes
from gtseg.model.complexity import complexity, complexity_table, verify_complexity
from gtseg.model.config import GTUNetConfig, size_problems
from gtseg.selftest import TESTS, run_selftest
from gtseg.storage.checkpoint import CheckpointError, load_checkpoint
from gtseg.trainer import FoldTrainer, load_samples
from gtseg.utils.helpers import log_progress, log_success, log_warning, read_json, resolve_seed

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_FAILURE = 2

DESK_SCALE_NOTE = (
    "Defaults follow the reference protocol (200 epochs, batch 12, 248 images of 256×256), "
    "which is far beyond desk scale on CPU; shrink them with --set training.epochs=... "
    "--set data.count=... --set data.size=..."
)


class UsageError(Exception):
    """Bad arguments detected after parsing."""


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        log_warning(f"{self.prog}: {message}")
        raise SystemExit(EXIT_USAGE)


# -------------------------------------------------------------------
# Internal helpers
# -------------------------------------------------------------------
def _emit(payload: Dict[str, Any]) -> None:
    print(json.dumps(payload, ensure_ascii=False, indent=2, sort_keys=True))


def _run_config(args: argparse.Namespace) -> RunConfig:
    try:
        raw: Dict[str, Any] = read_json(Path(args.config)) if args.config else {}
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {args.config}: {exc}") from exc
    try:
        raw = apply_overrides(raw, args.set or [])
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if args.data:
        data = dict(raw.get("data") or {})
        if args.data == "synth":
            data["source"] = "synth"
        else:
            data.update(source="directory", path=str(args.data))
        raw["data"] = data
    return RunConfig.model_validate(raw)


# -------------------------------------------------------------------
# Commands
# -------------------------------------------------------------------
def cmd_train(args: argparse.Namespace) -> int:
    config = _run_config(args)
    seed = resolve_seed(args.seed, config.training.seed)
    out_dir = Path(args.out)
    log_progress(
        f"training {config.training.folds} folds × {config.training.epochs} epochs "
        f"(loss={config.training.loss}, seed={seed}) into {out_dir}"
    )
    samples, split = load_samples(config, seed)
    results = FoldTrainer(config, out_dir, seed, workers=args.workers).run(samples, split)
    _emit(
        {
            "out": str(out_dir),
            "folds": [
                {"fold": r.fold, "best_epoch": r.best_epoch, "best_val_dice": r.best_val_dice}
                for r in results
            ],
        }
    )
    return EXIT_OK


def cmd_eval(args: argparse.Namespace) -> int:
    model, meta = load_checkpoint(Path(args.checkpoint))
    seed = resolve_seed(args.seed)
    if args.data == "synth":
        size = args.size or model.config.input_size[0]
        samples = synth_generate(seed, args.count, size)
        split = kfold_split([s.id for s in samples], args.folds, seed) if args.fold is not None else None
    else:
        samples, split = load_dataset(Path(args.data))
    if args.fold is not None:
        if split is None:
            raise UsageError("--fold needs a dataset with folds.txt")
        keep = set(split.fold_ids(args.fold))
        samples = [s for s in samples if s.id in keep]
        if not samples:
            raise UsageError(f"fold {args.fold} holds no samples")

    log_progress(f"evaluating {len(samples)} samples with {args.checkpoint}")
    results = evaluate_samples(model, samples, batch_size=args.batch_size, threshold=args.threshold)
    paths = write_evaluation(
        Path(args.out),
        results,
        meta={
            "checkpoint": str(args.checkpoint),
            "checkpoint_meta": meta,
            "threshold": args.threshold,
            "samples": len(results),
            "seed": seed,
        },
        dump_masks=args.dump_masks,
    )
    flagged = sum(1 for r in results if r.report.flags)
    if flagged:
        log_warning(f"{flagged} samples have zero-denominator metrics (see the flags column)")
    log_success(f"mean DICE {mean_dice(results):.4f}, reports in {paths['csv'].parent}")
    return EXIT_OK


def _format_vector(values) -> str:
    return " ".join(f"{v:.6f}" for v in values)


def _parse_phis(raw: str) -> List[int]:
    try:
        phis = [int(p) for p in raw.split(",") if p.strip()]
    except ValueError as exc:
        raise UsageError(f"--sweep-phi expects comma-separated integers, got {raw!r}") from exc
    if not phis:
        raise UsageError("--sweep-phi needs at least one value")
    return phis


def cmd_complexity(args: argparse.Namespace) -> int:
    dims = (args.H, args.W, args.C, args.h, args.w, args.phi)
    try:
        report = complexity(*dims)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    for key in ("omega_mhsa", "omega_gt_per_group", "omega_gt_total", "num_groups"):
        print(f"{key:<20} {getattr(report, key)}")
    print(f"{'ratio':<20} {report.ratio:.6f}")

    if args.sweep_phi:
        try:
            table = complexity_table(args.H, args.W, args.C, args.h, args.w, _parse_phis(args.sweep_phi))
        except ValueError as exc:
            raise UsageError(str(exc)) from exc
        print()
        print(table[["phi", "omega_gt_per_group", "omega_gt_total", "ratio"]].to_string(index=False))

    if args.verify:
        result = verify_complexity(*dims)
        measured = result["measured"]
        print(f"{'measured_projection':<20} {measured['projection']}")
        print(f"{'measured_attention':<20} {measured['attention']}")
        print(f"{'measured_position':<20} {measured['position']}")
        if not result["ok"]:
            log_warning(f"instrumented MAC counts disagree with the closed form: {result['expected']}")
            return EXIT_FAILURE
        log_success("instrumented MAC counts match the closed form")
    return EXIT_OK


def cmd_fd(args: argparse.Namespace) -> int:
    predicted = load_mask(Path(args.mask_a))
    reference = load_mask(Path(args.mask_b))
    comparison = compare_shapes(predicted, reference, beta=args.beta, k=args.k, n_points=args.n)
    print(f"contour_points_a    {comparison.predicted_points}")
    print(f"contour_points_b    {comparison.reference_points}")
    if comparison.degenerate:
        print(f"degenerate          {comparison.reason}")
        print(f"penalty_delta_z     {comparison.delta_z:.6g}")
    else:
        print(f"descriptor_a        {_format_vector(comparison.predicted_descriptor)}")
        print(f"descriptor_b        {_format_vector(comparison.reference_descriptor)}")
        print(f"delta_z             {comparison.delta_z:.6g}")
    print(f"factor              {comparison.factor:.6f}")
    return EXIT_OK


def cmd_synth(args: argparse.Namespace) -> int:
    default_model = GTUNetConfig()
    problems = size_problems(default_model, args.size, args.size)
    if problems:
        log_warning(f"size {args.size} does not fit the default model: " + "; ".join(problems))
    seed = resolve_seed(args.seed)
    samples = synth_generate(seed, args.count, args.size)
    split = kfold_split([s.id for s in samples], args.folds, seed) if args.count >= args.folds else None
    if split is None:
        log_warning(f"{args.count} samples cannot fill {args.folds} folds; folds.txt not written")
    root = save_dataset(Path(args.out), samples, split)
    log_success(f"wrote {len(samples)} samples to {root}")
    return EXIT_OK


def cmd_selftest(args: argparse.Namespace) -> int:
    payload = run_selftest(seed=resolve_seed(args.seed, 7), test=args.test)
    _emit(payload)
    return EXIT_OK if payload["ok"] else EXIT_FAILURE


# -------------------------------------------------------------------
# Parser
# -------------------------------------------------------------------
def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gtseg", description="GT U-Net segmentation with FD loss on a numpy tensor engine.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    train = sub.add_parser("train", help="k-fold training", description=DESK_SCALE_NOTE)
    train.add_argument("--config", help="JSON RunConfig file")
    train.add_argument("--data", help="'synth' or a dataset directory (images/, masks/, folds.txt)")
    train.add_argument("--set", action="append", metavar="KEY=VALUE", help="dotted config override, repeatable")
    train.add_argument("--out", default="runs/train", help="output directory")
    train.add_argument("--seed", type=int, default=None)
    train.add_argument("--workers", type=int, default=1, help="folds trained in parallel threads")
    train.set_defaults(handler=cmd_train)

    evaluate = sub.add_parser("eval", help="evaluate a checkpoint")
    evaluate.add_argument("--checkpoint", required=True)
    evaluate.add_argument("--data", default="synth", help="'synth' or a dataset directory")
    evaluate.add_argument("--count", type=int, default=12, help="synthetic sample count")
    evaluate.add_argument("--size", type=int, default=None, help="synthetic size (default: checkpoint input size)")
    evaluate.add_argument("--folds", type=int, default=3, help="fold count for synthetic --fold selection")
    evaluate.add_argument("--fold", type=int, default=None, help="evaluate only this fold of the split")
    evaluate.add_argument("--seed", type=int, default=None)
    evaluate.add_argument("--threshold", type=float, default=0.5)
    evaluate.add_argument("--batch-size", type=int, default=4)
    evaluate.add_argument("--dump-masks", action="store_true", help="write predicted masks as PGM")
    evaluate.add_argument("--out", default="runs/eval")
    evaluate.set_defaults(handler=cmd_eval)

    comp = sub.add_parser("complexity", help="attention cost of global MHSA vs grouped attention")
    for name in ("H", "W", "C", "h", "w", "phi"):
        comp.add_argument(name, type=int)
    comp.add_argument("--verify", action="store_true", help="check against an instrumented forward pass")
    comp.add_argument("--sweep-phi", default=None, metavar="LIST", help="comma-separated phi values")
    comp.set_defaults(handler=cmd_complexity)

    fd = sub.add_parser("fd", help="Fourier-descriptor distance between two mask files")
    fd.add_argument("mask_a")
    fd.add_argument("mask_b")
    fd.add_argument("--n", type=int, default=DEFAULT_N, help="resampled contour points")
    fd.add_argument("--k", type=int, default=DEFAULT_K, help="descriptor length")
    fd.add_argument("--beta", type=float, default=DEFAULT_BETA)
    fd.set_defaults(handler=cmd_fd)

    synth = sub.add_parser("synth", help="write a synthetic dataset directory")
    synth.add_argument("--seed", type=int, default=None)
    synth.add_argument("--count", type=int, default=48)
    synth.add_argument("--size", type=int, default=64)
    synth.add_argument("--folds", type=int, default=3)
    synth.add_argument("--out", required=True)
    synth.set_defaults(handler=cmd_synth)

    selftest = sub.add_parser("selftest", help="run the built-in verification suite")
    selftest.add_argument("--test", choices=TESTS, default="suite")
    selftest.add_argument("--seed", type=int, default=None)
    selftest.set_defaults(handler=cmd_selftest)
    return parser


def main(argv: Optional[Sequence[str]] = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.handler(args)
    except UsageError as exc:
        log_warning(str(exc))
        return EXIT_USAGE
    except ValidationError as exc:
        log_warning(f"invalid configuration:\n{exc}")
        return EXIT_USAGE
    except (CheckpointError, PGMFormatError, NoForegroundError, OSError, ValueError, RuntimeError) as exc:
        log_warning(f"{type(exc).__name__}: {exc}")
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
