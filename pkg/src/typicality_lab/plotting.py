"""Figures for the CLI report path.  matplotlib is imported lazily."""
from __future__ import annotations

import math
from pathlib import Path


def _pyplot():
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
    return plt


def _nan_to_none(xs):
    return [None if (x is None or (isinstance(x, float) and math.isnan(x))) else x for x in xs]


def plot_scan(records: list[dict], title: str, path: Path) -> Path:
    """Analytic curve with a one-sigma tube plus Monte Carlo means with error bars."""
    plt = _pyplot()
    theta = [r["theta"] for r in records]
    mean = [r["analytic_mean"] for r in records]
    std = _nan_to_none([r["analytic_std"] for r in records])
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.plot(theta, mean, color="tab:blue", label="analytic average")
    if all(s is not None for s in std):
        ax.fill_between(theta, [m - s for m, s in zip(mean, std)],
                        [m + s for m, s in zip(mean, std)],
                        color="tab:blue", alpha=0.15, label="analytic std")
    ax.errorbar(theta, [r["mc_mean"] for r in records],
                yerr=[r["mc_std_error"] for r in records],
                fmt="D", ms=4, color="tab:green", label="Monte Carlo mean")
    ax.set_xlabel(r"$\theta$")
    ax.set_ylabel(r"$|\langle\chi|U|\psi\rangle|^2$")
    ax.set_xlim(0, math.pi / 2)
    top = ax.secondary_xaxis("top", functions=(lambda t: t, lambda t: t))
    ticks = [0, math.pi / 8, math.pi / 4, 3 * math.pi / 8, math.pi / 2]
    top.set_xticks(ticks)
    top.set_xticklabels([f"{math.cos(t):.2f}" for t in ticks])
    top.set_xlabel("|z|")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_histogram(records: list[dict], title: str, path: Path) -> Path:
    plt = _pyplot()
    left = [r["bin_left"] for r in records]
    width = [r["bin_right"] - r["bin_left"] for r in records]
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.bar(left, [r["density"] for r in records], width=width, align="edge",
           color="tab:red", alpha=0.6, label="samples")
    analytic = _nan_to_none([r["analytic_density"] for r in records])
    if all(a is not None for a in analytic):
        centers = [l + w / 2 for l, w in zip(left, width)]
        ax.plot(centers, analytic, color="tab:blue", label="Kumaraswamy")
    ax.set_xlabel("s")
    ax.set_ylabel("p(s)")
    ax.set_title(title, fontsize=10)
    ax.legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_form_factor(records: list[dict], title: str, path: Path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy([r["T"] for r in records], [max(r["form_factor"], 1e-300) for r in records], "o-")
    ax.set_xlabel("T")
    ax.set_ylabel("K(T)")
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def plot_rho(records: list[dict], title: str, path: Path) -> Path:
    plt = _pyplot()
    fig, ax = plt.subplots(figsize=(6.4, 4.2))
    ax.semilogy([r["eigenvalue"] for r in records], [r["probability"] for r in records], "s-")
    ax.set_xlabel("eigenvalue of M")
    ax.set_ylabel(r"eigenvalue of $\rho$")
    ax.set_title(title, fontsize=10)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


PLOTTERS = {
    "scan": plot_scan,
    "histogram": plot_histogram,
    "form-factor": plot_form_factor,
    "rho-solve": plot_rho,
}
