import logging

from src.core.config import DATA_DIR, DETAIL_WINDOW, GLOBAL_WINDOW
from src.core.errors import PivotStabilityError
from src.data_access.result_repository import ResultRepository
from src.models.schemas import RunConfig
from src.services.diagram_service import DiagramService

# --- Configuration ---
# (file stem, waveform, window); every run uses the default resolution and tolerances
REFERENCE_RUNS = [
    ("triangular_global", "triangular", GLOBAL_WINDOW),
    ("triangular_detail", "triangular", DETAIL_WINDOW),
    ("rect4_global", "rect:4", GLOBAL_WINDOW),
    ("rect4_detail", "rect:4", DETAIL_WINDOW),
    ("rect100_global", "rect:100", GLOBAL_WINDOW),
    ("rect100_detail", "rect:100", DETAIL_WINDOW),
    ("cosine_detail", "cosine", DETAIL_WINDOW),
]


# --- Reference diagram script ---
def make_reference_set(service: DiagramService) -> int:
    """Writes <stem>.csv and <stem>.svg for every reference run. Returns the number of failures."""
    failures = 0
    for stem, waveform, window in REFERENCE_RUNS:
        config = RunConfig(
            waveform=waveform,
            window=window,
            output=DATA_DIR / f"{stem}.csv",
            svg=DATA_DIR / f"{stem}.svg",
        )
        print(f"Computing {stem} ({config.waveform.label}, window {window})...")
        try:
            grid = service.export_diagram(config)
        except PivotStabilityError as e:
            print(f"Error: {stem} failed: {e.detail}")
            failures += 1
            continue
        stable = grid.classes.count("S")
        print(f"Wrote {config.output.name} and {config.svg.name}: {stable} of {len(grid.classes)} nodes stable.")
    return failures


if __name__ == "__main__":
    logging.basicConfig(level=logging.WARNING)

    # Ensure the data directory exists
    DATA_DIR.mkdir(parents=True, exist_ok=True)

    failed = make_reference_set(DiagramService(ResultRepository()))

    print("Reference diagrams finished.")
    print(f"Files written to: {DATA_DIR}")
    if failed:
        raise SystemExit(1)
