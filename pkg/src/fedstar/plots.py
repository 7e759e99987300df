"""Figure rendering for experiment outputs.

Figures are written next to the CSV output as PNG files via the Agg
backend, with version metadata stripped so repeated runs produce
byte-identical images.
"""

from __future__ import annotations

from pathlib import Path

import matplotlib
import numpy as np

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

_MODE_COLORS = {
    "supervised_fl": "tab:orange",
    "fedstar": "tab:blue",
}
_SAVE_OPTS = {"dpi": 130, "metadata": {"Software": None}}


def _color(mode: str):
    return _MODE_COLORS.get(mode, "tab:green")


def _save(fig, path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.savefig(path, **_SAVE_OPTS)
    plt.close(fig)


def plot_round_curves(histories_by_mode: dict, path):
    """Accuracy, train loss, and pseudo-label acceptance per round.

    Per mode the trial mean is drawn solid with individual trials faint;
    the right panel overlays the confidence threshold schedule.
    """
    fig, axes = plt.subplots(1, 3, figsize=(13.5, 4.0))
    ax_acc, ax_loss, ax_pl = axes
    tau_drawn = False
    for mode, hists in histories_by_mode.items():
        hists = [h for h in hists if h.records]
        if not hists:
            continue
        rounds = np.array([rec.round for rec in hists[0].records])
        acc = np.array([[rec.global_test_accuracy for rec in h.records] for h in hists])
        loss = np.array([[rec.mean_train_loss for rec in h.records] for h in hists])
        rate = np.array(
            [[rec.pseudo_acceptance_rate for rec in h.records] for h in hists]
        )
        c = _color(mode)
        for row in acc:
            ax_acc.plot(rounds, row, color=c, alpha=0.25, lw=0.8)
        ax_acc.plot(rounds, acc.mean(axis=0), color=c, lw=1.8, label=mode)
        for row in loss:
            ax_loss.plot(rounds, row, color=c, alpha=0.25, lw=0.8)
        ax_loss.plot(rounds, loss.mean(axis=0), color=c, lw=1.8, label=mode)
        if rate.max() > 0:
            ax_pl.plot(rounds, rate.mean(axis=0), color=c, lw=1.8, label=f"{mode} acceptance")
        if not tau_drawn:
            ax_pl.plot(
                rounds,
                [rec.tau for rec in hists[0].records],
                color="black",
                ls="--",
                lw=1.2,
                label="threshold",
            )
            tau_drawn = True
    ax_acc.set_xlabel("round")
    ax_acc.set_ylabel("test accuracy")
    ax_acc.set_title("Global model accuracy")
    ax_loss.set_xlabel("round")
    ax_loss.set_ylabel("mean local train loss")
    ax_loss.set_title("Train loss")
    ax_pl.set_xlabel("round")
    ax_pl.set_ylabel("rate / threshold")
    ax_pl.set_title("Pseudo-label acceptance")
    ax_pl.set_ylim(-0.02, 1.02)
    for ax in axes:
        ax.grid(True, alpha=0.3)
        ax.legend(fontsize=8)
    fig.tight_layout()
    _save(fig, path)


def plot_sweep(reports, parameter: str, values, path):
    """Mean final accuracy (with trial std bars) against the swept value."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    modes = [res.mode for res in reports[0].results]
    x = list(range(len(values)))
    for mode in modes:
        means = [rep.result(mode).mean_accuracy for rep in reports]
        stds = [rep.result(mode).std_accuracy for rep in reports]
        ax.errorbar(
            x, means, yerr=stds, marker="o", capsize=3,
            color=_color(mode), label=mode,
        )
    ax.set_xticks(x)
    ax.set_xticklabels([f"{v:g}" if isinstance(v, float) else str(v) for v in values])
    ax.set_xlabel(parameter)
    ax.set_ylabel("final test accuracy")
    ax.set_title(f"Sweep over {parameter}")
    ax.grid(True, alpha=0.3)
    ax.legend(fontsize=9)
    fig.tight_layout()
    _save(fig, path)


def plot_pretrain_loss(losses, path):
    """Contrastive training curve: mean batch loss per epoch."""
    fig, ax = plt.subplots(figsize=(6.0, 4.0))
    ax.plot(range(len(losses)), losses, color="tab:blue", lw=1.6)
    ax.set_xlabel("epoch")
    ax.set_ylabel("contrastive loss")
    ax.set_title("Pretraining loss")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    _save(fig, path)
