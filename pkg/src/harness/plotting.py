import csv
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from src.exceptions import ArtifactIOError, CsvParseError, UsageError  # noqa: E402

logger = logging.getLogger(__name__)

TRAJECTORY_COLUMNS = ("x", "y", "x_d", "y_d")
LEARNING_COLUMNS = ("episode", "total_reward")
TIME_SERIES_COLUMNS = ("t", "err_norm", "thrust", "rudder")
PLOT_KINDS = ("trajectory", "timeseries", "learning")


def read_columns(path: Path, columns: tuple[str, ...]) -> dict[str, list[float]]:
    """Numeric columns of a CSV; row numbers in errors count the header as row 1."""
    path = Path(path)
    data = {name: [] for name in columns}
    try:
        with path.open(newline="") as f:
            reader = csv.DictReader(f)
            missing = [name for name in columns if name not in (reader.fieldnames or [])]
            if missing:
                raise CsvParseError(path, 1, f"missing columns {missing}")
            for row_number, row in enumerate(reader, start=2):
                for name in columns:
                    try:
                        data[name].append(float(row[name]))
                    except (TypeError, ValueError):
                        raise CsvParseError(path, row_number, f"{name}={row.get(name)!r} is not a number")
    except OSError as e:
        raise ArtifactIOError(path, str(e))
    return data


def csv_header(path: Path) -> list[str]:
    try:
        with Path(path).open(newline="") as f:
            return next(csv.reader(f), [])
    except OSError as e:
        raise ArtifactIOError(path, str(e))


def _save(fig, svg_path: Path) -> Path:
    svg_path = Path(svg_path)
    try:
        svg_path.parent.mkdir(parents=True, exist_ok=True)
        fig.savefig(svg_path, format="svg", metadata={"Date": None})
    except OSError as e:
        raise ArtifactIOError(svg_path, str(e))
    finally:
        plt.close(fig)
    logger.info(f"Wrote {svg_path}")
    return svg_path


def plot_trajectory(csv_path: Path, svg_path: Path) -> Path:
    data = read_columns(csv_path, TRAJECTORY_COLUMNS)
    fig, ax = plt.subplots(figsize=(6, 6))
    if len(data["x"]) == 1:
        ax.plot(data["x_d"], data["y_d"], "o", color="tab:red", label="reference")
        ax.plot(data["x"], data["y"], "o", color="tab:blue", label="AUV")
    elif data["x"]:
        ax.plot(data["x_d"], data["y_d"], "--", color="tab:red", label="reference")
        ax.plot(data["x"], data["y"], "-", color="tab:blue", label="AUV")
        ax.plot(data["x"][0], data["y"][0], "o", color="tab:blue")
    if data["x"]:
        ax.legend(loc="best")
    ax.set_aspect("equal", adjustable="datalim")
    ax.set_xlabel("x (m)")
    ax.set_ylabel("y (m)")
    ax.grid(True)
    return _save(fig, svg_path)


def plot_learning_curve(csv_path: Path, svg_path: Path) -> Path:
    data = read_columns(csv_path, LEARNING_COLUMNS)
    fig, ax = plt.subplots(figsize=(8, 4))
    if data["episode"]:
        ax.plot(data["episode"], data["total_reward"], "-", label="total reward")
        ax.legend(loc="lower right")
    ax.set_xlabel("episode")
    ax.set_ylabel("total reward")
    ax.grid(True)
    return _save(fig, svg_path)


def plot_time_series(csv_path: Path, svg_path: Path) -> Path:
    """Tracking error and both control inputs against time, one panel each."""
    data = read_columns(csv_path, TIME_SERIES_COLUMNS)
    fig, axes = plt.subplots(3, 1, figsize=(8, 7), sharex=True)
    panels = (("err_norm", "tracking error (m)"), ("thrust", "thrust (N)"), ("rudder", "rudder (rad)"))
    for ax, (name, label) in zip(axes, panels):
        if data["t"]:
            ax.plot(data["t"], data[name], "-", color="tab:blue")
        ax.set_ylabel(label)
        ax.grid(True)
    axes[-1].set_xlabel("t (s)")
    fig.tight_layout()
    return _save(fig, svg_path)


def emit_svg(csv_path: Path, svg_path: Path, kind: str | None = None) -> Path:
    """Render a CSV as SVG; without a kind, training CSVs get a learning curve and rollouts an x-y overlay."""
    if kind is None:
        header = csv_header(csv_path)
        kind = "learning" if "total_reward" in header and "x" not in header else "trajectory"
    if kind == "learning":
        return plot_learning_curve(csv_path, svg_path)
    if kind == "timeseries":
        return plot_time_series(csv_path, svg_path)
    if kind == "trajectory":
        return plot_trajectory(csv_path, svg_path)
    raise UsageError(f"unknown plot kind {kind!r}, expected one of {PLOT_KINDS}")
