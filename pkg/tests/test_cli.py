import io
import json
import math
import xml.etree.ElementTree as ET

import pandas as pd
import pytest

from src.main import main

SVG_NS = "{http://www.w3.org/2000/svg}"


# --- Test Setup ---
@pytest.fixture
def run(capsys):
    """
    Runs the command line in-process and returns (exit code, stdout, stderr).
    Output written by earlier calls in the same test is discarded first.
    """

    def _run(*argv):
        capsys.readouterr()
        code = main([str(arg) for arg in argv])
        captured = capsys.readouterr()
        return code, captured.out, captured.err

    return _run


# --- trace ---
def test_trace_triangular_values(run):
    """Twelve significant digits on stdout, exit code 0."""
    assert run("trace", "--waveform", "triangular", "--alpha", 1, "--beta", 3) == (0, "2.00000000000\n", "")
    code, out, _ = run("trace", "--waveform", "triangular", "--alpha", 0.25, "--beta", 0.5)
    assert code == 0
    assert out == "-3.00000000000\n"


def test_trace_rectangular_without_forcing(run):
    code, out, _ = run("trace", "--waveform", "rect:10", "--alpha", 0.5, "--beta", 0)
    assert code == 0
    assert float(out) == pytest.approx(-0.532511, abs=1e-6)


def test_trace_methods_agree(run):
    traces = []
    for method in ("product", "closed", "numeric"):
        code, out, _ = run("trace", "--waveform", "rect:4", "--alpha", 0.5, "--beta", 0.7, "--method", method)
        assert code == 0
        traces.append(float(out))
    assert traces[1] == pytest.approx(traces[0], abs=1e-11)
    assert traces[2] == pytest.approx(traces[0], abs=1e-8)


def test_trace_cosine_defaults_to_numeric(run):
    code, out, _ = run("trace", "--waveform", "cosine", "--alpha", 0.5, "--beta", 0, "--steps", 1024)
    assert code == 0
    assert float(out) == pytest.approx(2.0 * math.cos(2.0 * math.pi * math.sqrt(0.5)), abs=1e-8)


def test_trace_usage_errors(run):
    """Bad flags and missing parameters exit with 2."""
    code, _, err = run("trace", "--alpha", 0.5)
    assert code == 2
    assert "--alpha and --beta" in err
    assert run("trace", "--waveform", "sine", "--alpha", 0.5, "--beta", 0.1)[0] == 2
    assert run("trace", "--waveform", "triangular", "--alpha", 0.5, "--beta", 0.1, "--method", "uncorrected")[0] == 2
    assert run("trace", "--waveform", "cosine", "--alpha", 0.5, "--beta", 0.1, "--method", "product")[0] == 2
    assert run("no-such-command")[0] == 2


# --- classify ---
def test_classify_prints_kind_trace_and_multiplier(run):
    code, out, _ = run("classify", "--waveform", "triangular", "--alpha", 0.25, "--beta", 0.5)
    assert code == 0
    kind, trace, multiplier = out.split()
    assert kind == "U"
    assert float(trace) == pytest.approx(-3.0)
    assert float(multiplier) == pytest.approx((3.0 + math.sqrt(5.0)) / 2.0)


def test_classify_physical_parameters(run):
    """A 10 cm pivot stroke on a 1 m pendulum: stable hanging, unstable upright."""
    physical = ["--physical", 0.1, 1.0, 9.81, 10.0]
    code, out, _ = run("classify", "--waveform", "triangular", *physical)
    assert code == 0
    assert out.split()[0] == "S"
    code, out, _ = run("classify", "--waveform", "triangular", *physical, "--inverted")
    assert code == 0
    assert out.split()[0] == "U"


# --- diagram ---
def test_diagram_csv_is_deterministic(run, tmp_path):
    """Two runs write byte-identical LF-terminated files."""
    args = ["diagram", "--waveform", "triangular", "--window", -1, 4, -4, 4, "--resolution", 11, 9]
    first, second = tmp_path / "a.csv", tmp_path / "b.csv"
    assert run(*args, "--output", first)[0] == 0
    assert run(*args, "--output", second)[0] == 0
    data = first.read_bytes()
    assert data == second.read_bytes()
    assert b"\r\n" not in data

    frame = pd.read_csv(first)
    assert list(frame.columns) == ["alpha", "beta", "trace", "class"]
    assert len(frame) == 11 * 9
    assert set(frame["class"]) <= {"S", "U", "B"}
    row = frame[(frame["alpha"] == 1.0) & (frame["beta"] == 3.0)]
    assert row["class"].tolist() == ["B"]


def test_diagram_to_stdout(run):
    code, out, _ = run("diagram", "--waveform", "rect:4", "--window", 0, 1, 0, 1, "--resolution", 3, 2)
    assert code == 0
    lines = out.splitlines()
    assert lines[0] == "alpha,beta,trace,class"
    assert len(lines) == 1 + 6


def test_diagram_json_and_svg(run, tmp_path):
    output, svg = tmp_path / "grid.json", tmp_path / "grid.svg"
    code, _, _ = run(
        "diagram", "--waveform", "triangular", "--window", -1, 4, -2, 2, "--resolution", 11, 9,
        "--format", "json", "--output", output, "--svg", svg,
    )
    assert code == 0
    payload = json.loads(output.read_text())
    assert payload["waveform"] == {"kind": "triangular"}
    assert len(payload["traces"]) == len(payload["classes"]) == 99

    root = ET.parse(svg).getroot()
    assert root.tag == f"{SVG_NS}svg"
    assert len(root.findall(f".//{SVG_NS}rect")) == 99
    fills = {rect.get("fill") for rect in root.iter(f"{SVG_NS}rect")}
    assert fills <= {"#ffffff", "#bfbfbf", "#808080"}


def test_diagram_unwritable_output(run, tmp_path):
    """Failing to write the result is a computation failure (exit 1)."""
    code, _, err = run("diagram", "--resolution", 3, 3, "--output", tmp_path / "missing" / "grid.csv")
    assert code == 1
    assert "cannot write" in err


# --- boundary ---
def test_triangular_boundary_closed_form(run, tmp_path):
    output = tmp_path / "minus2.csv"
    code, _, _ = run(
        "boundary", "--waveform", "triangular", "--kind", "minus2",
        "--window", 0, 1, -4, 4, "--resolution", 161, 11, "--output", output,
    )
    assert code == 0
    frame = pd.read_csv(output)
    assert list(frame.columns) == ["curve_id", "kind", "alpha", "beta"]
    assert set(frame["kind"]) == {"minus2"}
    assert ((frame["alpha"] - 0.0625).abs() < 1e-12).any()
    assert ((frame["beta"] - 0.5).abs() < 1e-9).any()
    for _, rows in frame.groupby("curve_id"):
        assert rows["alpha"].is_monotonic_increasing


def test_rectangular_boundary_contour(run, tmp_path):
    """The uncorrected rect:10 Tr = 2 contour crosses alpha = 0 at sqrt(2 / (10 pi - 2))."""
    output = tmp_path / "plus2.csv"
    code, _, _ = run(
        "boundary", "--waveform", "rect:10", "--kind", "plus2", "--uncorrected",
        "--window", -0.5, 0.5, -0.5, 0.5, "--resolution", 11, 21, "--output", output,
    )
    assert code == 0
    frame = pd.read_csv(output)
    expected = math.sqrt(2.0 / (10.0 * math.pi - 2.0))
    on_axis = frame[(frame["alpha"].abs() < 1e-12) & ((frame["beta"] - expected).abs() < 1e-6)]
    assert len(on_axis) >= 1


def test_boundary_rejects_unsupported_forms(run):
    assert run("boundary", "--waveform", "triangular", "--uncorrected", "--resolution", 5, 5)[0] == 2
    assert run("boundary", "--waveform", "rect:4", "--form", "closed", "--resolution", 5, 5)[0] == 2


# --- render-svg ---
def test_render_svg_from_csv_files(run, tmp_path):
    grid, curves, svg = tmp_path / "grid.csv", tmp_path / "curves.csv", tmp_path / "out.svg"
    window = ["--window", -1, 4, -4, 4]
    assert run("diagram", "--waveform", "triangular", *window, "--resolution", 21, 17, "--output", grid)[0] == 0
    assert run("boundary", "--waveform", "triangular", *window, "--resolution", 21, 17, "--output", curves)[0] == 0
    assert run("render-svg", "--diagram", grid, "--boundary", curves, "--output", svg)[0] == 0

    root = ET.parse(svg).getroot()
    assert len(root.findall(f".//{SVG_NS}rect")) == 21 * 17
    overlay = root.find(f"{SVG_NS}g[@id='boundaries']")
    assert len(overlay.findall(f"{SVG_NS}polyline")) >= 1


def test_render_svg_rejects_bad_diagram(run, tmp_path):
    bad = tmp_path / "bad.csv"
    bad.write_text("alpha,beta,trace,class\n0,0,0,X\n1,1,0,S\n")
    assert run("render-svg", "--diagram", bad)[0] == 1


# --- verify ---
def test_verify_suite_passes(run):
    code, out, _ = run("verify", "--suite", "ab-identity", "--suite", "stability-gap")
    assert code == 0
    assert "FAIL" not in out
    assert "ab-identity" in out and "stability-gap" in out


def test_verify_default_runs_every_suite(run):
    """No --suite runs all of them; every check passes."""
    code, out, _ = run("verify")
    assert code == 0
    assert "FAIL" not in out
    for name in ("closed-vs-product", "numeric-oracle", "mollification", "beta-parity", "axis-crossings", "large-n", "cosine-tongue"):
        assert name in out


def test_verify_reports_perturbed_failure(run):
    """A perturbed trace fails the suite; the failing check is named on stderr."""
    code, out, err = run("verify", "--suite", "stability-gap", "--perturb", 1e-3)
    assert code == 1
    assert "FAIL" in out
    assert "stability-gap" in err


def test_verify_rect_neg2_search(run):
    code, out, _ = run("verify", "--suite", "rect-neg2-search", "--n", 100)
    assert code == 0
    assert "no nontrivial Tr=-2 solutions near alpha=0.25" in out


def test_verify_unknown_suite(run):
    assert run("verify", "--suite", "everything")[0] == 2


# --- simulate ---
def test_simulate_writes_trajectory(run, tmp_path):
    output = tmp_path / "trajectory.csv"
    code, _, _ = run(
        "simulate", "--waveform", "triangular", "--alpha", 0.5, "--beta", 0.2,
        "--t-end", 2 * math.pi, "--steps", 256, "--output", output,
    )
    assert code == 0
    frame = pd.read_csv(output)
    assert list(frame.columns) == ["t", "theta", "omega"]
    assert frame["t"].iloc[0] == 0.0
    assert frame["theta"].iloc[0] == pytest.approx(0.1)
    assert frame["t"].iloc[-1] == pytest.approx(2 * math.pi)
    assert frame["t"].is_monotonic_increasing


def test_simulate_rejects_bad_sampling(run):
    assert run("simulate", "--alpha", 0.5, "--beta", 0.2, "--sample-every", 0)[0] == 2
    assert run("simulate", "--alpha", 0.5, "--beta", 0.2, "--t-end", -1)[0] == 2


# --- Run configuration ---
def test_config_file_with_flag_override(run, tmp_path):
    """Flags win over the file; the rest of the file still applies."""
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"waveform": "rect:4", "window": [0, 1, 0, 1], "resolution": [5, 3]}))
    code, out, _ = run("diagram", "--config", config, "--resolution", 7, 3)
    assert code == 0
    frame = pd.read_csv(io.StringIO(out))
    assert len(frame) == 21
    assert frame["alpha"].max() == 1.0


def test_config_file_rejects_unknown_keys(run, tmp_path):
    config = tmp_path / "run.json"
    config.write_text(json.dumps({"waveform": "triangular", "colour": "blue"}))
    code, _, err = run("diagram", "--config", config)
    assert code == 2
    assert "invalid run configuration" in err


def test_config_file_must_exist(run, tmp_path):
    assert run("diagram", "--config", tmp_path / "nope.json")[0] == 2
