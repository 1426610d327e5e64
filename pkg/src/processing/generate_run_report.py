"""
Module: generate_run_report

Machine-readable outputs of a CLI run:

    RunReport      {"format": 1, "subcommand", "tool_version", "inputs",
                    "outputs", "wall_time"} as JSON
    samples CSV    x,target,network,weighted_residual at 17 significant digits

Both are written through `atomic_write_text`, so a failed run never leaves a
half-written file behind.
"""

# Standard library imports
import io
import logging
from pathlib import Path
from typing import Any, Dict, Union

# Third-party imports
import numpy as np
import pandas as pd
from pydantic import BaseModel, ConfigDict, Field

# Local
from src import __version__
from src.core.core_types import ReLUNetwork, YTarget, eval_network
from src.core.file_formats import FORMAT_VERSION, atomic_write_text, dumps_json
from src.metrics.weighted_norm import CompactGrid

logger = logging.getLogger(__name__)

SAMPLE_COLUMNS = ["x", "target", "network", "weighted_residual"]
SAMPLE_FLOAT_FORMAT = "%.17g"


class RunReport(BaseModel):
    """Echo of a subcommand's inputs and outputs; wall_time is the only clock-dependent field."""

    model_config = ConfigDict(frozen=True)

    format: int = FORMAT_VERSION
    subcommand: str
    tool_version: str = __version__
    inputs: Dict[str, Any] = Field(default_factory=dict)
    outputs: Dict[str, Any] = Field(default_factory=dict)
    wall_time: float = Field(default=0.0, ge=0)

    def to_json(self) -> dict:
        return {
            "format": self.format,
            "subcommand": self.subcommand,
            "tool_version": self.tool_version,
            "inputs": self.inputs,
            "outputs": self.outputs,
            "wall_time": self.wall_time,
        }


def write_report(path: Union[str, Path], report: RunReport) -> None:
    atomic_write_text(path, dumps_json(report.to_json()))
    logger.info("report written to %s", path)


def samples_frame(target: YTarget, network: ReLUNetwork, resolution: int) -> pd.DataFrame:
    """
    Target, network and weighted residual on the finite points of a CompactGrid.

    Args:
        target (YTarget): Approximated function.
        network (ReLUNetwork): Its approximation.
        resolution (int): n of the grid (2n - 1 finite rows).

    Returns:
        pd.DataFrame: Columns x, target, network, weighted_residual.
    """
    x = CompactGrid(n=resolution).finite_x
    f_vals = np.asarray(target.evaluate(x), dtype=float) * np.ones_like(x)
    n_vals = eval_network(network, x)
    return pd.DataFrame({
        "x": x,
        "target": f_vals,
        "network": n_vals,
        "weighted_residual": (f_vals - n_vals) / (1.0 + np.abs(x)),
    }, columns=SAMPLE_COLUMNS)


def write_samples(path: Union[str, Path], df: pd.DataFrame) -> None:
    """CSV with 17 significant digits, so every double reads back bit-identical."""
    buffer = io.StringIO()
    df.to_csv(buffer, index=False, float_format=SAMPLE_FLOAT_FORMAT, lineterminator="\n")
    atomic_write_text(path, buffer.getvalue())
    logger.info("%d samples written to %s", len(df), path)
