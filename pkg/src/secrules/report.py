"""Figures reconciling measured protocol costs with the closed forms."""
from __future__ import annotations

import os

from .simnet import improvement_factor


def _pyplot():
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    return plt


# PNG metadata is stripped so repeated runs produce identical bytes.
_SAVE_KWARGS = {"dpi": 120, "metadata": {"Software": None}}


def _protocol_rows(rows: list[dict]) -> list[dict]:
    return [r for r in rows if r["protocol"] in ("unifi", "unifi-kc")]


def render_bits_figure(rows: list[dict], path: str) -> str | None:
    """Grouped bars of measured vs predicted bits per protocol iteration."""
    rows = _protocol_rows(rows)
    if not rows:
        return None
    plt = _pyplot()
    labels = [f"{r['protocol']}\nk={r['k']}" for r in rows]
    measured = [int(r["bits_measured"]) for r in rows]
    predicted = [
        float(r["bits_predicted_exact"] or r["bits_predicted_paper"] or "nan")
        for r in rows
    ]
    xs = range(len(rows))
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(rows)), 4))
    ax.bar([x - 0.2 for x in xs], measured, width=0.4, label="measured")
    ax.bar([x + 0.2 for x in xs], predicted, width=0.4, label="predicted")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_ylabel("bits per iteration")
    ax.set_yscale("log")
    ax.set_title("Union protocol communication, measured vs predicted")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def render_rounds_figure(rows: list[dict], path: str) -> str | None:
    """Measured vs predicted synchronization rounds per protocol iteration."""
    rows = _protocol_rows(rows)
    if not rows:
        return None
    plt = _pyplot()
    labels = [f"{r['protocol']}\nk={r['k']}" for r in rows]
    measured = [int(r["rounds_measured"]) for r in rows]
    predicted = [int(r["rounds_predicted"]) for r in rows]
    xs = range(len(rows))
    fig, ax = plt.subplots(figsize=(max(6, 1.2 * len(rows)), 4))
    ax.bar([x - 0.2 for x in xs], measured, width=0.4, label="measured")
    ax.bar([x + 0.2 for x in xs], predicted, width=0.4, label="predicted")
    ax.set_xticks(list(xs))
    ax.set_xticklabels(labels)
    ax.set_ylabel("rounds per iteration")
    ax.set_title("Synchronization rounds, measured vs predicted")
    ax.legend()
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def render_improvement_figure(path: str, t_bits: int = 1024, h_bits: int = 160) -> str:
    """Predicted communication advantage of the share-based union by M."""
    plt = _pyplot()
    ms = list(range(3, 17))
    factors = [improvement_factor(m, t_bits, h_bits) for m in ms]
    fig, ax = plt.subplots(figsize=(6, 4))
    ax.plot(ms, factors, marker="o")
    ax.set_xlabel("players M")
    ax.set_ylabel("predicted bit-cost ratio")
    ax.set_title(f"Cipher-based over share-based union (t={t_bits}, h={h_bits})")
    ax.grid(True, alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, **_SAVE_KWARGS)
    plt.close(fig)
    return path


def render_cost_figures(rows: list[dict], out_dir: str) -> list[str]:
    """Render every cost figure into `out_dir`; returns the written paths."""
    os.makedirs(out_dir, exist_ok=True)
    written = []
    for result in (
        render_bits_figure(rows, os.path.join(out_dir, "cost_bits.png")),
        render_rounds_figure(rows, os.path.join(out_dir, "cost_rounds.png")),
        render_improvement_figure(os.path.join(out_dir, "improvement_factor.png")),
    ):
        if result:
            written.append(result)
    return written
