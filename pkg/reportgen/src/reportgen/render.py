"""Panel rendering from run artifacts.

Trajectory parsing is header-driven: column order in the CSV is irrelevant,
only names matter. Panels whose data is absent are omitted with a note on
the summary page, never an error; a malformed cell is an error naming its
row and column.
"""

from __future__ import annotations

import csv
import html
import json
from dataclasses import dataclass, field
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402

PANELS = ("energies", "harnack", "residual", "extinction", "deficits")

_STYLE = {
    "figure.figsize": (6.4, 4.0),
    "figure.dpi": 110,
    "axes.grid": True,
    "grid.alpha": 0.3,
    "font.size": 9,
}


class ReportError(Exception):
    """Malformed input artifact."""


@dataclass
class ReportSpec:
    """What to render: a run directory, an output directory, a panel subset."""

    input_dir: Path
    output: Path
    which: tuple = field(default_factory=tuple)

    def __post_init__(self):
        self.input_dir = Path(self.input_dir)
        self.output = Path(self.output)
        bad = [w for w in self.which if w not in PANELS]
        if bad:
            raise ReportError(
                f"unknown panel(s) {', '.join(bad)}; available: {', '.join(PANELS)}"
            )


def _read_trajectory(path: Path) -> dict:
    """Parse trajectory.csv into named float columns (None for empty cells)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ReportError(f"{path.name}: empty file") from None
        cols: dict = {name: [] for name in header}
        for i, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise ReportError(
                    f"{path.name} row {i}: expected {len(header)} cells, got {len(row)}"
                )
            for name, cell in zip(header, row):
                if cell == "":
                    cols[name].append(None)
                    continue
                try:
                    cols[name].append(float(cell))
                except ValueError:
                    raise ReportError(
                        f"{path.name} row {i}, column '{name}': cannot parse {cell!r}"
                    ) from None
    return cols


def _series(cols: dict, name: str):
    """(clock, value) pairs for a column, dropping empty cells."""
    if name not in cols or "clock" not in cols:
        return [], []
    t = [a for a, b in zip(cols["clock"], cols[name]) if b is not None]
    v = [b for b in cols[name] if b is not None]
    return t, v


def _load_json(path: Path):
    if not path.exists():
        return None
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ReportError(f"{path.name}: invalid JSON ({exc})") from exc


def _panel_energies(spec: ReportSpec, cols: dict) -> str | None:
    present = [name for name in ("J", "S_func", "H", "F") if _series(cols, name)[1]]
    if not present:
        return None
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        for name in present:
            t, v = _series(cols, name)
            ax.plot(t, v, label=name)
        ax.set_xlabel("clock")
        ax.set_ylabel("functional value")
        ax.set_title("energy and mass functionals")
        ax.legend()
        out = spec.output / "energies.png"
        fig.savefig(out)
        plt.close(fig)
    return out.name


def _panel_harnack(spec: ReportSpec, cols: dict) -> str | None:
    t, v = _series(cols, "harnack_ratio")
    if not v:
        return None
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.plot(t, v, color="tab:red")
        ax.set_xlabel("clock")
        ax.set_ylabel("max/min")
        ax.set_title("Harnack ratio along the flow")
        out = spec.output / "harnack.png"
        fig.savefig(out)
        plt.close(fig)
    return out.name


def _panel_residual(spec: ReportSpec, cols: dict) -> str | None:
    t, v = _series(cols, "fit_residual")
    if not v:
        hist = spec.input_dir / "residual_history.csv"
        if hist.exists():
            hcols = _read_trajectory(hist)
            if "s" in hcols and "sup_residual" in hcols:
                t = [a for a, b in zip(hcols["s"], hcols["sup_residual"]) if b is not None]
                v = [b for b in hcols["sup_residual"] if b is not None]
    v_pos = [(a, b) for a, b in zip(t, v) if b is not None and b > 0]
    if not v_pos:
        return None
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.semilogy([a for a, _ in v_pos], [b for _, b in v_pos], color="tab:blue")
        ax.set_xlabel("clock")
        ax.set_ylabel("sup profile residual")
        ax.set_title("distance to the steady profile family")
        out = spec.output / "residual.png"
        fig.savefig(out)
        plt.close(fig)
    return out.name


def _panel_extinction(spec: ReportSpec) -> str | None:
    report = _load_json(spec.input_dir / "extinction.json")
    if report is None:
        return None
    labels, values = [], []
    for key in ("T_lower", "T_hat", "T_upper"):
        if report.get(key) is not None:
            labels.append(key)
            values.append(report[key])
    if not values:
        return None
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        colors = {"T_lower": "tab:green", "T_hat": "tab:blue", "T_upper": "tab:orange"}
        ax.bar(labels, values, color=[colors[x] for x in labels])
        ax.set_ylabel("time")
        ax.set_title("extinction time and its bounds")
        out = spec.output / "extinction.png"
        fig.savefig(out)
        plt.close(fig)
    return out.name


def _panel_deficits(spec: ReportSpec) -> str | None:
    payload = _load_json(spec.input_dir / "deficit.json")
    if payload is None:
        return None
    report = payload.get("report", payload)
    labels, values = [], []
    for key in ("sobolev_deficit", "hls_deficit", "remainder_lhs", "remainder_rhs_bound"):
        if report.get(key) is not None:
            labels.append(key)
            values.append(report[key])
    if not values:
        return None
    with plt.rc_context(_STYLE):
        fig, ax = plt.subplots()
        ax.bar(labels, values, color="tab:purple")
        ax.set_ylabel("deficit")
        ax.set_title("sharp-inequality deficits")
        ax.tick_params(axis="x", labelrotation=20)
        out = spec.output / "deficits.png"
        fig.savefig(out)
        plt.close(fig)
    return out.name


def _badges(summary: dict | None) -> str:
    if not summary or "checks" not in summary:
        return "<p>no summary checks recorded</p>"
    rows = []
    for name, ok in sorted(summary["checks"].items()):
        cls = "pass" if ok else "fail"
        rows.append(
            f'<span class="badge {cls}">{html.escape(name)}: '
            f'{"pass" if ok else "FAIL"}</span>'
        )
    overall = summary.get("pass")
    head = ""
    if overall is not None:
        cls = "pass" if overall else "fail"
        head = f'<p class="overall {cls}">overall: {"pass" if overall else "FAIL"}</p>'
    return head + "\n".join(rows)


_PAGE = """<!DOCTYPE html>
<html><head><meta charset="utf-8"><title>run report</title>
<style>
body {{ font-family: sans-serif; margin: 2em; }}
.badge {{ display: inline-block; padding: 2px 8px; margin: 2px; border-radius: 4px; }}
.badge.pass {{ background: #d4edda; }}
.badge.fail {{ background: #f8d7da; }}
p.overall.pass {{ color: #155724; font-weight: bold; }}
p.overall.fail {{ color: #721c24; font-weight: bold; }}
.note {{ color: #666; font-style: italic; }}
img {{ max-width: 640px; display: block; margin: 1em 0; }}
</style></head>
<body>
<h1>run report</h1>
<p>experiment: {experiment} &middot; seed: {seed}</p>
{badges}
{panels}
</body></html>
"""


def render(spec: ReportSpec) -> Path:
    """Render requested panels plus summary.html; returns the summary path.

    The input directory must contain manifest.json. Panels whose data is not
    present in this run are listed as omitted on the summary page.
    """
    manifest = _load_json(spec.input_dir / "manifest.json")
    if manifest is None:
        raise ReportError(f"{spec.input_dir} does not contain manifest.json")
    spec.output.mkdir(parents=True, exist_ok=True)

    traj_path = spec.input_dir / "trajectory.csv"
    cols = _read_trajectory(traj_path) if traj_path.exists() else {}
    summary = _load_json(spec.input_dir / "summary.json")

    rendered: dict = {}
    for panel in spec.which:
        if panel == "energies":
            rendered[panel] = _panel_energies(spec, cols)
        elif panel == "harnack":
            rendered[panel] = _panel_harnack(spec, cols)
        elif panel == "residual":
            rendered[panel] = _panel_residual(spec, cols)
        elif panel == "extinction":
            rendered[panel] = _panel_extinction(spec)
        elif panel == "deficits":
            rendered[panel] = _panel_deficits(spec)

    blocks = []
    for panel in spec.which:
        name = rendered.get(panel)
        if name is None:
            blocks.append(
                f'<p class="note">panel "{panel}" omitted: no matching data in this run</p>'
            )
        else:
            blocks.append(f"<h2>{panel}</h2><img src=\"{name}\" alt=\"{panel}\">")

    experiment = "unknown"
    cfg = manifest.get("config", {})
    if isinstance(cfg.get("experiment"), dict):
        experiment = cfg["experiment"].get("kind", "unknown")
    page = _PAGE.format(
        experiment=html.escape(str(experiment)),
        seed=html.escape(str(manifest.get("seed", "?"))),
        badges=_badges(summary),
        panels="\n".join(blocks),
    )
    out = spec.output / "summary.html"
    out.write_text(page, newline="\n")
    return out
