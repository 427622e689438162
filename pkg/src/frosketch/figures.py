"""Figure rendering for benchmark reports."""
from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402


def save_spectrum_figure(data_sigma, sketch_sigma, path) -> None:
    """Top singular values of the input next to those of its sketch."""
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(range(1, len(data_sigma) + 1), data_sigma, marker="o", label="input")
    ax.plot(range(1, len(sketch_sigma) + 1), sketch_sigma, marker="s", label="sketch")
    ax.set_xlabel("index")
    ax.set_ylabel("singular value")
    ax.set_yscale("log")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_rounds_figure(rows, path) -> None:
    """MAP against evaluation round for every method in the rows."""
    fig, ax = plt.subplots(figsize=(6, 4))
    methods = sorted({row["method"] for row in rows})
    for method in methods:
        pts = sorted(
            ((row["round"], row["map"]) for row in rows if row["method"] == method)
        )
        ax.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label=method)
    ax.set_xlabel("round")
    ax.set_ylabel("MAP")
    ax.set_ylim(0.0, 1.0)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)


def save_pr_figure(curves, path) -> None:
    """Precision-recall curves keyed by method name."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for method, points in sorted(curves.items()):
        ax.plot([p[0] for p in points], [p[1] for p in points], marker=".", label=method)
    ax.set_xlabel("recall")
    ax.set_ylabel("precision")
    ax.set_xlim(0.0, 1.05)
    ax.set_ylim(0.0, 1.05)
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, dpi=150)
    plt.close(fig)
