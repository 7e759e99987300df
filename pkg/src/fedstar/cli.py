"""Command-line entry point.

Subcommands: run, sweep, pretrain, validate. Exit code 0 on success,
nonzero with a diagnostic on stderr for validation or runtime failures.
The FEDSTAR_OUTPUT_DIR environment variable overrides the spec's
output_dir; the --output-dir flag overrides both.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

from .errors import FedstarError
from .experiment import (
    SWEEPABLE,
    load_spec,
    parse_sweep_values,
    run_experiment,
    sweep,
)
from .nn import save_params
from .pretrain import contrastive_pretrain, init_encoder
from .rngutil import derive_seed


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fedstar",
        description=(
            "Desk-scale simulator for federated semi-supervised "
            "self-training experiments"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    run_p = sub.add_parser("run", help="run all trials and modes of a spec")
    run_p.add_argument("spec", help="experiment spec file")
    run_p.add_argument("--output-dir", help="override the spec's output_dir")

    sweep_p = sub.add_parser("sweep", help="re-run a spec across one parameter")
    sweep_p.add_argument("spec")
    sweep_p.add_argument("--param", required=True, choices=SWEEPABLE)
    sweep_p.add_argument(
        "--values", required=True, help="comma-separated parameter values"
    )
    sweep_p.add_argument("--output-dir")

    pre_p = sub.add_parser(
        "pretrain", help="contrastively pretrain encoder weights"
    )
    pre_p.add_argument("spec")
    pre_p.add_argument("--output-dir")

    val_p = sub.add_parser("validate", help="parse and validate a spec file")
    val_p.add_argument("spec")
    return parser


def _load(args):
    spec = load_spec(args.spec)
    if getattr(args, "output_dir", None):
        spec = replace(spec, output_dir=args.output_dir)
    return spec


def _cmd_run(args) -> int:
    spec = _load(args)
    print(f"running {spec.trials} trial(s), modes: {', '.join(spec.modes)}")
    report = run_experiment(spec, quiet=False)
    for res in report.results:
        print(
            f"{res.mode:>14}: mean accuracy {res.mean_accuracy:.4f} "
            f"(std {res.std_accuracy:.4f} over {report.trials} trials) "
            f"at L={res.labeled_fraction:g}"
        )
    print(f"outputs written to {spec.output_dir}")
    return 0


def _cmd_sweep(args) -> int:
    spec = _load(args)
    values = parse_sweep_values(args.param, args.values)
    reports = sweep(spec, args.param, values, quiet=False)
    for value, report in zip(values, reports):
        summary = "  ".join(
            f"{res.mode}={res.mean_accuracy:.4f}" for res in report.results
        )
        print(f"{args.param}={value:g}: {summary}")
    print(f"outputs written to {spec.output_dir}")
    return 0


def _cmd_pretrain(args) -> int:
    from .data import make_blobs
    from .nn import ArchSpec
    from .plots import plot_pretrain_loss

    spec = _load(args)
    out = Path(spec.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    cfg = replace(
        spec.pretrain_cfg, seed=derive_seed(spec.seed, "pretrain-cli")
    )
    corpus_n = spec.corpus_n if spec.corpus_n is not None else spec.blob.n
    corpus = make_blobs(
        corpus_n,
        spec.blob.num_classes,
        spec.blob.dim,
        spec.blob.spread,
        derive_seed(spec.seed, "pretrain-cli-corpus"),
    )
    arch = ArchSpec(spec.blob.dim, spec.hidden, spec.blob.num_classes)
    encoder = init_encoder(arch, cfg)
    print(
        f"pretraining: {cfg.epochs} epochs, batch {cfg.batch_size}, "
        f"embedding dim {cfg.embedding_dim}"
    )
    params, losses = contrastive_pretrain(
        corpus.features, cfg, encoder, return_history=True
    )
    weights_path = out / "pretrained_params.txt"
    save_params(weights_path, params)
    loss_lines = ["epoch,loss"] + [
        f"{i},{loss:.6f}" for i, loss in enumerate(losses)
    ]
    (out / "pretrain_loss.csv").write_text(
        "\n".join(loss_lines) + "\n", encoding="utf-8"
    )
    plot_pretrain_loss(losses, out / "plots" / "pretrain_loss.png")
    print(f"loss {losses[0]:.4f} -> {losses[-1]:.4f}")
    print(f"encoder weights written to {weights_path}")
    print("use them via [federation] init_file =", weights_path)
    return 0


def _cmd_validate(args) -> int:
    spec = load_spec(args.spec)
    print(
        f"spec OK: N={spec.n_clients} R={spec.rounds} "
        f"q={spec.participation:g} L={spec.split.L:g} U={spec.split.U:g} "
        f"sigma={spec.sigma:g} trials={spec.trials} "
        f"modes={','.join(spec.modes)}"
    )
    return 0


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "pretrain": _cmd_pretrain,
    "validate": _cmd_validate,
}


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except (FedstarError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
