"""Plain-text tables for evaluation output."""

from __future__ import annotations

from ..ent90b import ABBREVIATIONS, ESTIMATOR_ORDER

__all__ = [
    "render_battery",
    "render_entropy",
    "render_frequency_summary",
    "render_heatmap",
    "render_table",
]


def _fmt(value, digits: int = 4) -> str:
    if value is None:
        return "-"
    if isinstance(value, float):
        return f"{value:.{digits}f}"
    return str(value)


def _fmt_p(value) -> str:
    if value is None:
        return "NA"
    return f"{value:.3g}"


def render_table(headers: list[str], rows: list[list[str]]) -> str:
    """Align columns: first column left, the rest right."""
    table = [headers] + rows
    widths = [max(len(row[j]) for row in table) for j in range(len(headers))]

    def line(cells):
        out = []
        for j, (cell, width) in enumerate(zip(cells, widths)):
            out.append(cell.ljust(width) if j == 0 else cell.rjust(width))
        return "  ".join(out).rstrip()

    rule = "  ".join("-" * w for w in widths)
    return "\n".join([line(headers), rule] + [line(r) for r in rows])


def _summary_block(block: dict) -> str:
    headers = [""] + list(block["columns"]) + ["avg", "sd"]
    rows = []
    for row in block["rows"]:
        rows.append([row["label"]] + [_fmt(c) for c in row["cells"]]
                    + [_fmt(row["avg"]), _fmt(row["sd"])])
    rows.append(["avg"] + [_fmt(v) for v in block["column_avg"]] + ["", ""])
    rows.append(["sd"] + [_fmt(v) for v in block["column_sd"]] + ["", ""])
    return render_table(headers, rows)


def render_frequency_summary(summary: dict) -> str:
    """Both ones-fraction tables: per-qubit main grid, then GHZ subsets."""
    parts = []
    if summary["main"]["rows"]:
        parts.append("Ones fraction by qubit and circuit column")
        parts.append(_summary_block(summary["main"]))
    if summary["ghz"]["rows"]:
        parts.append("Ones fraction by GHZ subset (majority stream)")
        parts.append(_summary_block(summary["ghz"]))
    return "\n\n".join(parts)


def render_heatmap(heatmap: dict) -> str:
    """Worst p-value (or estimate) per stream and column."""
    headers = ["stream"] + list(heatmap["columns"])
    rows = [[row["label"]] + [_fmt_p(c) for c in row["cells"]]
            for row in heatmap["rows"]]
    return render_table(headers, rows)


def render_battery(doc: dict) -> str:
    """One line per battery subtest plus a status tally."""
    headers = ["subtest", "p", "status"]
    rows = []
    tally = {"pass": 0, "fail": 0, "NA": 0}
    for sub in doc["subtests"]:
        rows.append([sub["label"], _fmt_p(sub["p_value"]), sub["status"]])
        tally[sub["status"]] += 1
    table = render_table(headers, rows)
    summary = (f"{doc['bits']} bits: {tally['pass']} pass, "
               f"{tally['fail']} fail, {tally['NA']} not applicable")
    return f"{table}\n\n{summary}"


def render_entropy(doc: dict) -> str:
    """Per-estimator min-entropy estimates plus the assessed minimum."""
    rows = []
    for name in ESTIMATOR_ORDER:
        rows.append([name, _fmt_p(doc.get(ABBREVIATIONS[name]))])
    rows.append(["bits", str(doc["bits"])])
    rows.append(["min entropy", _fmt_p(doc["minE"])])
    return render_table(["estimator", "value"], rows)
