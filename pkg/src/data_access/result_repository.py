import logging
import sys
import xml.etree.ElementTree as ET
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import pandas as pd
from pydantic import BaseModel, TypeAdapter

from src.core.errors import ResultWriteError
from src.models.schemas import BoundaryCurve, BoundaryKind, DiagramGrid, Trajectory

logger = logging.getLogger(__name__)

DIAGRAM_COLUMNS = ["alpha", "beta", "trace", "class"]
BOUNDARY_COLUMNS = ["curve_id", "kind", "alpha", "beta"]
TRAJECTORY_COLUMNS = ["t", "theta", "omega"]

FLOAT_FORMAT = "%.12g"

CELL_FILL = {"S": "#ffffff", "U": "#bfbfbf", "B": "#808080"}
CURVE_STROKE = "#000000"

_curves_adapter = TypeAdapter(List[BoundaryCurve])


def _monotone_pieces(points: Sequence[Tuple[float, float]]) -> List[List[Tuple[float, float]]]:
    """
    Splits a polyline where alpha changes direction and orients every piece
    by increasing alpha, so sorting a piece by alpha keeps its drawing order.
    """
    pieces, current, direction = [], [points[0]], 0
    for prev, point in zip(points, points[1:]):
        step = (point[0] > prev[0]) - (point[0] < prev[0])
        if step and direction and step != direction:
            pieces.append((current, direction))
            current, direction = [prev], 0
        direction = direction or step
        current.append(point)
    pieces.append((current, direction))
    return [piece[::-1] if direction < 0 else piece for piece, direction in pieces]


class ResultRepository:
    """
    Reads and writes run results: diagram, boundary and trajectory CSV,
    JSON dumps and SVG renderings. A path of None means stdout.
    """

    def __init__(self, stdout=None):
        """
        Args:
            stdout: Stream used when no output path is given (sys.stdout if None).
        """
        self.stdout = stdout

    def _emit(self, text: str, path: Optional[Path]) -> None:
        """Writes text as UTF-8 with LF line ends, to path or to stdout."""
        if path is None:
            (self.stdout or sys.stdout).write(text)
            return
        try:
            path = Path(path)
            with open(path, "w", encoding="utf-8", newline="\n") as handle:
                handle.write(text)
        except OSError as e:
            raise ResultWriteError(f"cannot write {path}: {e}")
        logger.info("wrote %s (%d bytes)", path, len(text.encode("utf-8")))

    def _read_csv(self, path: Path, columns: List[str]) -> pd.DataFrame:
        try:
            frame = pd.read_csv(path)
        except (OSError, pd.errors.ParserError, pd.errors.EmptyDataError) as e:
            raise ResultWriteError(f"cannot read {path}: {e}")
        missing = [column for column in columns if column not in frame.columns]
        if missing:
            raise ResultWriteError(f"{path} lacks the columns {missing}")
        return frame[columns]

    @staticmethod
    def _to_csv(frame: pd.DataFrame) -> str:
        return frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")

    # --- Diagrams ---
    def diagram_frame(self, grid: DiagramGrid) -> pd.DataFrame:
        """One row per grid node, beta rows in order with alpha varying fastest."""
        alphas, betas = grid.alphas, grid.betas
        return pd.DataFrame(
            {
                "alpha": list(alphas) * len(betas),
                "beta": [beta for beta in betas for _ in alphas],
                "trace": grid.traces,
                "class": [kind.value for kind in grid.classes],
            },
            columns=DIAGRAM_COLUMNS,
        )

    def write_diagram_csv(self, grid: DiagramGrid, path: Optional[Path] = None) -> None:
        self._emit(self._to_csv(self.diagram_frame(grid)), path)

    def read_diagram_csv(self, path: Path) -> pd.DataFrame:
        frame = self._read_csv(path, DIAGRAM_COLUMNS)
        if not frame["class"].isin(list(CELL_FILL)).all():
            raise ResultWriteError(f"{path} holds classes other than S, U, B")
        return frame

    # --- Boundaries ---
    def boundary_frame(self, curves: Sequence[BoundaryCurve]) -> pd.DataFrame:
        """Rows (curve_id, kind, alpha, beta) sorted by curve_id then alpha."""
        rows = []
        curve_id = 0
        for curve in curves:
            for piece in _monotone_pieces(curve.points):
                rows.extend((curve_id, curve.kind.value, alpha, beta) for alpha, beta in piece)
                curve_id += 1
        frame = pd.DataFrame(rows, columns=BOUNDARY_COLUMNS)
        return frame.sort_values(["curve_id", "alpha"], kind="mergesort").reset_index(drop=True)

    def write_boundary_csv(self, curves: Sequence[BoundaryCurve], path: Optional[Path] = None) -> None:
        self._emit(self._to_csv(self.boundary_frame(curves)), path)

    def read_boundary_csv(self, path: Path) -> List[BoundaryCurve]:
        frame = self._read_csv(path, BOUNDARY_COLUMNS)
        curves = []
        for _, rows in frame.groupby("curve_id", sort=True):
            curves.append(
                BoundaryCurve(
                    kind=BoundaryKind(rows["kind"].iloc[0]),
                    points=list(zip(rows["alpha"].tolist(), rows["beta"].tolist())),
                    closed_form=False,
                )
            )
        return curves

    # --- Trajectories ---
    def write_trajectory_csv(self, trajectory: Trajectory, path: Optional[Path] = None) -> None:
        frame = pd.DataFrame({"t": trajectory.t, "theta": trajectory.theta, "omega": trajectory.omega}, columns=TRAJECTORY_COLUMNS)
        self._emit(self._to_csv(frame), path)

    # --- JSON ---
    def write_json(self, result, path: Optional[Path] = None) -> None:
        """Dumps a model, or a list of boundary curves, as indented JSON."""
        if isinstance(result, BaseModel):
            text = result.model_dump_json(indent=2)
        else:
            text = _curves_adapter.dump_json(list(result), indent=2).decode("utf-8")
        self._emit(text + "\n", path)

    # --- SVG ---
    def render_svg(
        self,
        diagram: pd.DataFrame,
        curves: Sequence[BoundaryCurve] = (),
        path: Optional[Path] = None,
        cell_px: int = 4,
    ) -> None:
        """
        SVG 1.1 image of a diagram frame: one rect per node coloured by class
        (stable white, unstable grey, boundary dark grey), beta pointing up,
        and the curves drawn as black polylines on top.
        """
        alphas = sorted(diagram["alpha"].unique().tolist())
        betas = sorted(diagram["beta"].unique().tolist())
        if len(alphas) < 2 or len(betas) < 2:
            raise ResultWriteError("a diagram needs at least two nodes along each axis to render")
        width, height = len(alphas) * cell_px, len(betas) * cell_px
        column = {alpha: i for i, alpha in enumerate(alphas)}
        row = {beta: j for j, beta in enumerate(betas)}

        def to_px(alpha: float, beta: float) -> Tuple[float, float]:
            x = (alpha - alphas[0]) / (alphas[-1] - alphas[0]) * (len(alphas) - 1) * cell_px + cell_px / 2
            y = (betas[-1] - beta) / (betas[-1] - betas[0]) * (len(betas) - 1) * cell_px + cell_px / 2
            return x, y

        svg = ET.Element(
            "svg",
            {
                "xmlns": "http://www.w3.org/2000/svg",
                "version": "1.1",
                "width": str(width),
                "height": str(height),
                "viewBox": f"0 0 {width} {height}",
            },
        )
        cells = ET.SubElement(svg, "g", {"id": "cells", "shape-rendering": "crispEdges"})
        for alpha, beta, kind in zip(diagram["alpha"].tolist(), diagram["beta"].tolist(), diagram["class"].tolist()):
            ET.SubElement(
                cells,
                "rect",
                {
                    "x": str(column[alpha] * cell_px),
                    "y": str((len(betas) - 1 - row[beta]) * cell_px),
                    "width": str(cell_px),
                    "height": str(cell_px),
                    "fill": CELL_FILL[kind],
                },
            )

        overlay = ET.SubElement(svg, "g", {"id": "boundaries", "fill": "none", "stroke": CURVE_STROKE, "stroke-width": "1"})
        for curve in curves:
            points = " ".join("{:.3f},{:.3f}".format(*to_px(alpha, beta)) for alpha, beta in curve.points)
            ET.SubElement(overlay, "polyline", {"class": curve.kind.value, "points": points})

        text = ET.tostring(svg, encoding="unicode")
        self._emit('<?xml version="1.0" encoding="UTF-8"?>\n' + text + "\n", path)
