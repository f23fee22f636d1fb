"""Report figures.  Everything renders off-screen to files."""

from __future__ import annotations

import io
from typing import Sequence

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

from .artifacts import atomic_write  # noqa: E402
from .interpret import CategoryReport, category_string  # noqa: E402
from .patterns import Pattern  # noqa: E402

CLASS_LABELS = tuple(p.short for p in Pattern)


def _save(fig, path) -> None:
    fmt = str(path).rsplit(".", 1)[-1] if "." in str(path) else "png"
    buf = io.BytesIO()
    fig.savefig(buf, format=fmt, dpi=150, bbox_inches="tight")
    plt.close(fig)
    atomic_write(path, lambda fh: fh.write(buf.getvalue()), binary=True)


def confusion_figure(matrix: np.ndarray, path, title: str = "") -> None:
    """Row-normalized heatmap; x is the predicted label, y the ground truth."""
    m = np.asarray(matrix, dtype=np.float64)
    rows = m.sum(1, keepdims=True)
    frac = np.divide(m, rows, out=np.zeros_like(m), where=rows > 0)
    fig, ax = plt.subplots(figsize=(3.6, 3.2))
    im = ax.imshow(frac, vmin=0, vmax=1, cmap="Blues")
    for i in range(m.shape[0]):
        for j in range(m.shape[1]):
            ax.text(j, i, f"{frac[i, j]:.2f}", ha="center", va="center",
                    color="white" if frac[i, j] > 0.6 else "black", fontsize=8)
    ax.set_xticks(range(len(CLASS_LABELS)), CLASS_LABELS)
    ax.set_yticks(range(len(CLASS_LABELS)), CLASS_LABELS)
    ax.set_xlabel("predicted")
    ax.set_ylabel("ground truth")
    if title:
        ax.set_title(title, fontsize=9)
    fig.colorbar(im, ax=ax, fraction=0.046, pad=0.04)
    _save(fig, path)


def category_figure(reports: Sequence[CategoryReport], m: int, path, k: int = 5, title: str = "") -> None:
    """Top-k and bottom-k categories by mean score, colored by class ratio."""
    reports = list(reports)
    shown = reports if len(reports) <= 2 * k else reports[:k] + reports[-k:]
    fig, ax = plt.subplots(figsize=(6.0, 0.32 * max(len(shown), 1) + 1.0))
    y = np.arange(len(shown))[::-1]
    ratio = np.array([r.class_ratio for r in shown])
    bars = ax.barh(y, [r.mean_score for r in shown], color=plt.cm.coolwarm(ratio))
    ax.set_yticks(y, [category_string(r.category, m) for r in shown], fontsize=7, family="monospace")
    for b, r in zip(bars, shown):
        ax.annotate(f"{r.class_ratio:.2f}", (b.get_width(), b.get_y() + b.get_height() / 2),
                    xytext=(3 if b.get_width() >= 0 else -3, 0), textcoords="offset points",
                    ha="left" if b.get_width() >= 0 else "right", va="center", fontsize=6)
    ax.axvline(0, color="k", lw=0.6)
    ax.set_xlabel("mean walk score")
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)


def time_figure(t: np.ndarray, t_hat: np.ndarray, pattern: np.ndarray, path, names: Sequence[str] = (),
                title: str = "") -> None:
    """Predicted against true formation offsets on log axes, one color per pattern."""
    fig, ax = plt.subplots(figsize=(3.8, 3.6))
    pattern = np.asarray(pattern)
    for j in np.unique(pattern):
        sel = pattern == j
        label = names[j] if j < len(names) else str(j)
        ax.scatter(t[sel], t_hat[sel], s=8, alpha=0.7, label=label)
    lo = float(min(np.min(t), np.min(t_hat)))
    hi = float(max(np.max(t), np.max(t_hat)))
    ax.plot([lo, hi], [lo, hi], "k--", lw=0.6)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("true offset")
    ax.set_ylabel("predicted offset")
    ax.legend(fontsize=7, frameon=False)
    if title:
        ax.set_title(title, fontsize=9)
    _save(fig, path)


def history_figure(history: Sequence[dict], path, metric_name: str = "validation") -> None:
    epochs = [h["epoch"] for h in history]
    fig, ax = plt.subplots(figsize=(4.2, 2.8))
    loss = [(h["epoch"], h["train_loss"]) for h in history if h["train_loss"] is not None]
    if loss:
        ax.plot(*zip(*loss), color="C0", label="train loss")
    ax.set_xlabel("epoch")
    ax.set_ylabel("train loss")
    ax2 = ax.twinx()
    ax2.plot(epochs, [h["valid_metric"] for h in history], color="C1", label=metric_name)
    ax2.set_ylabel(metric_name)
    _save(fig, path)
