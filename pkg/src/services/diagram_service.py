import logging
from pathlib import Path
from typing import List, Optional

from src.core.errors import UnsupportedWaveformError
from src.data_access.result_repository import ResultRepository
from src.models.schemas import BoundaryCurve, BoundaryKind, DiagramGrid, RectangularApprox, RunConfig, StabilityKind, Triangular
from src.services.stability import boundary_contour, boundary_triangular, diagram
from src.utils.contour import extract_contours

logger = logging.getLogger(__name__)

BOUNDARY_KINDS = (BoundaryKind.TRACE_PLUS_2, BoundaryKind.TRACE_MINUS_2)


class DiagramService:
    """
    Builds diagrams and boundary curves from a RunConfig and hands them to
    a ResultRepository for output.
    """

    def __init__(self, repository: ResultRepository):
        """
        Args:
            repository: Where results are written.
        """
        self.repository = repository

    def build_diagram(self, config: RunConfig) -> DiagramGrid:
        return diagram(config.waveform, config.window, config.resolution, config.effective_tol, config.integrator)

    def overlay_curves(self, grid: DiagramGrid) -> List[BoundaryCurve]:
        """Tr = +-2 polylines interpolated on the sampled traces, for drawing only."""
        traces = grid.trace_array()
        curves = []
        for kind in BOUNDARY_KINDS:
            for line in extract_contours(grid.alphas, grid.betas, traces - kind.target):
                curves.append(BoundaryCurve(kind=kind, points=line, closed_form=False))
        return curves

    def export_diagram(self, config: RunConfig) -> DiagramGrid:
        """
        Computes the diagram, writes it as CSV or JSON (config.output, stdout
        if unset) and, when config.svg is set, renders it with boundary overlays.
        """
        grid = self.build_diagram(config)
        if config.format == "json":
            self.repository.write_json(grid, config.output)
        else:
            self.repository.write_diagram_csv(grid, config.output)
        if config.svg is not None:
            self.repository.render_svg(self.repository.diagram_frame(grid), self.overlay_curves(grid), config.svg)
        counts = {kind.value: grid.classes.count(kind) for kind in StabilityKind}
        logger.info("diagram %s: %s", grid.waveform.label, counts)
        return grid

    def boundaries(
        self,
        config: RunConfig,
        kind: BoundaryKind,
        form: Optional[str] = None,
        corrected: bool = True,
    ) -> List[BoundaryCurve]:
        """
        Boundary curves inside config.window.

        Args:
            config: Run settings (waveform, window, resolution, refine_tol, integrator).
            kind: Which trace level.
            form: 'closed' (triangular only) or 'contour'; closed for the
                triangular wave and contour otherwise when None.
            corrected: False contours the uncorrected rectangular form.
        """
        w = config.waveform
        form = form or ("closed" if isinstance(w, Triangular) else "contour")
        if not corrected and not isinstance(w, RectangularApprox):
            raise UnsupportedWaveformError("the uncorrected closed form exists only for rect:<n>")
        if form == "closed":
            if not isinstance(w, Triangular):
                raise UnsupportedWaveformError(f"{w.label} has no closed-form boundary, use --form contour")
            window = config.window
            return boundary_triangular(
                kind, (window.alpha_min, window.alpha_max), config.resolution.n_alpha, (window.beta_min, window.beta_max)
            )
        return boundary_contour(
            w, kind, config.window, config.resolution, config.refine_tol, config.integrator, corrected=corrected
        )

    def export_boundaries(
        self,
        config: RunConfig,
        kinds=BOUNDARY_KINDS,
        form: Optional[str] = None,
        corrected: bool = True,
    ) -> List[BoundaryCurve]:
        curves: List[BoundaryCurve] = []
        for kind in kinds:
            curves.extend(self.boundaries(config, kind, form, corrected))
        if config.format == "json":
            self.repository.write_json(curves, config.output)
        else:
            self.repository.write_boundary_csv(curves, config.output)
        return curves

    def render(self, diagram_csv: Path, boundary_csv: Optional[Path], output: Optional[Path]) -> None:
        """SVG from previously written diagram (and optional boundary) CSV files."""
        frame = self.repository.read_diagram_csv(diagram_csv)
        curves = self.repository.read_boundary_csv(boundary_csv) if boundary_csv is not None else []
        self.repository.render_svg(frame, curves, output)
