"""Static figures and a single summary page from fracflow run artifacts.

Reads the documented output files of a run directory (manifest.json,
trajectory.csv, summary.json, extinction.json, deficit.json,
residual_history.csv) and renders the requested panels as PNG plus one
summary.html. Rendering is read-only and deterministic: identical inputs
yield identical bytes.
"""

__version__ = "0.1.0"

from .render import PANELS, ReportError, ReportSpec, render

__all__ = ["PANELS", "ReportError", "ReportSpec", "render"]
