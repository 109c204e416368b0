"""Write a MissionReport to disk as a bundle of text, CSV and PNG files.

Layout::

    summary.txt        verdict lines, extra checks, totals, notes
    pass.csv           one row per pass (QKD kinds)
    series.csv         per-sample series
    budget.csv         link budget at the best sample
    keys/              key material via KeyStore
    plots/*.csv        columnar plot data
    plots/*.png        rendered plots

Numbers are written with 12 significant digits so that they survive a
round trip through ``float``.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

from .keystore import KeyStore  # noqa: E402
from .mission import MissionReport  # noqa: E402

PNG_METADATA = {"Software": None}


@dataclass(frozen=True)
class ReportBundle:
    directory: Path
    files: tuple[Path, ...]

    @property
    def summary(self) -> Path:
        return self.directory / "summary.txt"


def _cell(x) -> str:
    if isinstance(x, str):
        return x
    if isinstance(x, bool):
        return str(int(x))
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".12g")


def write_csv(path: Path, header, rows) -> Path:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(header))
        for r in rows:
            w.writerow([_cell(x) for x in r])
    return path


def summary_text(report: MissionReport) -> str:
    lines = [f"mission: {report.name}", f"kind: {report.kind}", f"seed: {report.seed}", ""]
    lines.append("requirements:")
    if report.verdicts:
        lines.extend("  " + v.line() for v in report.verdicts)
    else:
        lines.append("  (no mission requirement applies)")
    if report.checks:
        lines.append("checks:")
        for name, ok in report.checks.items():
            lines.append(f"  [{'PASS' if ok else 'FAIL'}] {name}")
    lines.append("")
    lines.append("totals:")
    width = max((len(k) for k in report.totals), default=0)
    for k, v in report.totals.items():
        lines.append(f"  {k.ljust(width)} = {_cell(v)}")
    if report.notes:
        lines.append("")
        lines.append("notes:")
        lines.extend(f"  {n}" for n in report.notes)
    lines.append("")
    lines.append(f"overall: {'PASS' if report.passed else 'FAIL'}")
    return "\n".join(lines) + "\n"


def render_plot(path: Path, name: str, header, rows) -> Path | None:
    if not rows:
        return None
    cols = list(zip(*rows))
    fig, ax = plt.subplots(figsize=(6.4, 4.0), dpi=100)
    if name == "fidelity.csv":
        ax.bar(cols[0], cols[1], yerr=cols[2], color="tab:blue", capsize=3)
        ax.axhline(2.0 / 3.0, color="tab:red", ls="--", label="classical limit 2/3")
        ax.set_ylim(0, 1)
        ax.set_xlabel("input state")
        ax.set_ylabel("fidelity")
        ax.legend(loc="lower right")
    elif name == "bell.csv":
        labels = [f"{a:g}/{b:g}" for a, b in zip(cols[0], cols[1])]
        ax.bar(labels, cols[2], yerr=cols[3], color="tab:green", capsize=3)
        ax.axhline(0, color="black", lw=0.8)
        ax.set_xlabel("analyser settings a/b (deg)")
        ax.set_ylabel("E(a, b)")
    elif isinstance(cols[0][0], str):
        plt.close(fig)
        return None
    else:
        for j in range(1, len(header)):
            ax.plot(cols[0], cols[j], marker=".", label=header[j])
        ax.set_xlabel(header[0])
        if len(header) == 2:
            ax.set_ylabel(header[1])
        else:
            ax.legend()
    ax.set_title(name[:-4].replace("_", " "))
    fig.tight_layout()
    out = path.with_suffix(".png")
    fig.savefig(out, format="png", metadata=PNG_METADATA)
    plt.close(fig)
    return out


def emit_report(report: MissionReport, directory: str | Path, plots: bool = True) -> ReportBundle:
    """Write the report bundle; reruns with the same seed give identical files."""
    root = Path(directory)
    (root / "plots").mkdir(parents=True, exist_ok=True)
    files: list[Path] = []
    summary = root / "summary.txt"
    summary.write_text(summary_text(report))
    files.append(summary)
    files.append(write_csv(root / "pass.csv", report.pass_header, report.pass_rows))
    if report.series:
        keys = list(report.series)
        files.append(write_csv(root / "series.csv", keys, zip(*(report.series[k] for k in keys))))
    if report.budget is not None:
        report.budget.to_csv(root / "budget.csv")
        files.append(root / "budget.csv")
    if report.keys:
        store = KeyStore(root / "keys")
        for km in report.keys:
            if km.key_id not in store:
                store.add(km)
        files.extend(sorted((root / "keys").iterdir()))
    for name, (header, rows) in sorted(report.plots.items()):
        p = write_csv(root / "plots" / name, header, rows)
        files.append(p)
        if plots:
            png = render_plot(p, name, header, rows)
            if png is not None:
                files.append(png)
    return ReportBundle(root, tuple(files))
