# --- Standard Library ---
import logging
import os
from pathlib import Path
from typing import List, Union

# --- Third-Party Libraries ---
import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
import pandas as pd  # noqa: E402
import seaborn as sns  # noqa: E402

# --- Local ---
from src.approximation.approximator import ApproximationCertificate  # noqa: E402
from src.core.core_types import YTarget, eval_network  # noqa: E402
from src.metrics.weighted_norm import CompactGrid  # noqa: E402

logger = logging.getLogger(__name__)

PLOT_RESOLUTION = 4000


def _plot_frame(certificate: ApproximationCertificate, target: YTarget) -> pd.DataFrame:
    grid = CompactGrid(n=PLOT_RESOLUTION)
    x = grid.finite_x
    t = grid.t[1:-1]
    weight = 1.0 + np.abs(x)
    f_vals = np.asarray(target.evaluate(x), dtype=float) * np.ones_like(x)
    n_vals = eval_network(certificate.network, x)
    return pd.DataFrame({
        "t": t,
        "x": x,
        "target_weighted": f_vals / weight,
        "network_weighted": n_vals / weight,
        "weighted_residual": (f_vals - n_vals) / weight,
    })


def generate_and_store_plots(
        certificate: ApproximationCertificate,
        target: YTarget,
        out_dir: Union[str, Path],
    ) -> List[Path]:
    """
    Generate two plots of a certificate using seaborn/matplotlib:
        1. A f and A(network) over the compact coordinate t = x/(1+|x|),
           with the radius [-R, R] shaded.
        2. The weighted residual A(f - network) with the +/-tolerance band.

    Args:
        certificate (ApproximationCertificate): Result of `approximate`.
        target (YTarget): The target the certificate was built for.
        out_dir (str | Path): Folder for the PNG files (created if missing).

    Returns:
        List[Path]: The two written image paths.
    """
    out_dir = Path(out_dir)
    os.makedirs(out_dir, exist_ok=True)
    df = _plot_frame(certificate, target)
    t_radius = certificate.radius / (1.0 + certificate.radius)

    sns.set_theme(style="white")

    # -----------------------
    # Target vs network on the compactified line
    # -----------------------
    plt.figure(figsize=(12, 6))
    ax = sns.lineplot(data=df, x="t", y="target_weighted", linewidth=2.5,
                      color="royalblue", label=f"A f  ({certificate.target_label})")
    sns.lineplot(data=df, x="t", y="network_weighted", linewidth=1.5, linestyle="--",
                 color="orange", label=f"A network ({len(certificate.network)} units)", ax=ax)
    ax.axvspan(-t_radius, t_radius, color="royalblue", alpha=0.08)
    ax.grid(axis="x", linestyle="--", alpha=0.5)
    plt.title("Target and network, weighted by 1/(1+|x|)", fontsize=14, weight="bold")
    plt.xlabel("t = x / (1 + |x|)")
    plt.ylabel("f(x) / (1 + |x|)")
    plt.tight_layout()

    approximation_png = out_dir / "approximation.png"
    plt.savefig(approximation_png, dpi=300)
    plt.close()

    # -----------------------
    # Weighted residual with tolerance band
    # -----------------------
    plt.figure(figsize=(12, 6))
    ax = sns.lineplot(data=df, x="t", y="weighted_residual", linewidth=1.5, color="royalblue")
    ax.fill_between(df["t"], df["weighted_residual"], color="royalblue", alpha=0.2)
    for level in (-certificate.tolerance, certificate.tolerance):
        ax.axhline(level, color="red", linestyle="--", linewidth=1)
    ax.axvline(-t_radius, color="gray", linestyle=":")
    ax.axvline(t_radius, color="gray", linestyle=":")
    status = "certified" if certificate.success else "NOT certified"
    plt.title(
        f"Weighted residual: {certificate.measured_error:.3g} vs tolerance "
        f"{certificate.tolerance:.3g} ({status})",
        fontsize=14, weight="bold",
    )
    plt.xlabel("t = x / (1 + |x|)")
    plt.ylabel("(f - network)(x) / (1 + |x|)")
    plt.tight_layout()

    residual_png = out_dir / "weighted_residual.png"
    plt.savefig(residual_png, dpi=300)
    plt.close()

    logger.info("plots written to %s", out_dir.resolve())
    return [approximation_png, residual_png]
