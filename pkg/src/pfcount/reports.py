"""Rendering of analysis reports as JSON, aligned text tables, or CSV.

All renderers take the plain ``dict`` produced by a report's ``to_dict`` so
the three formats always agree.
"""

from __future__ import annotations

import csv
import io
import json


def to_json(report: dict) -> str:
    return json.dumps(report, indent=2) + "\n"


def table(headers, rows) -> str:
    cells = [[str(h) for h in headers]] + [["" if c is None else str(c) for c in r] for r in rows]
    widths = [max(len(r[i]) for r in cells) for i in range(len(headers))]
    lines = ["  ".join(c.ljust(w) for c, w in zip(r, widths)).rstrip() for r in cells]
    lines.insert(1, "  ".join("-" * w for w in widths))
    return "\n".join(lines) + "\n"


def to_csv(headers, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(headers)
    w.writerows(rows)
    return buf.getvalue()


def _fmt_tuple(t) -> str:
    return "(" + ",".join(str(x) for x in t) + ")"


def _kv(pairs) -> str:
    width = max(len(k) for k, _ in pairs)
    return "".join(f"{k.ljust(width)}  {v}\n" for k, v in pairs)


# --------------------------------------------------------------------------
# per-command layouts: (header block, column headers, rows)
# --------------------------------------------------------------------------


def _count_layout(r):
    head = [("formula", r["formula"]), ("index", r["index"]), ("object_vars", ",".join(r["object_vars"]))]
    return head, ["index", "count"], [[r["index"], r["count"]]]


def _spectrum_layout(r):
    s = r["spectrum"]
    head = [
        ("formula", r["formula"]),
        ("index", r["index"]),
        ("object | param", f"{','.join(s['object_vars'])} | {','.join(s['parameter_vars'])}"),
        ("total_pairs", s["total_pairs"]),
        ("sum identity", f"{r['sum_identity']['holds']} ({r['sum_identity']['direct_total']} = "
                         f"{r['sum_identity']['weighted_sum']})"),
        ("quotient identity", f"applicable={r['quotient_identity']['applicable']} "
                              f"holds={r['quotient_identity']['holds']} B={r['quotient_identity']['B']} "
                              f"projection={r['quotient_identity']['projection_count']}"),
    ]
    rows = [[c["cardinality"], c["size"], _fmt_tuple(c["witness"])] for c in s["classes"]]
    return head, ["cardinality", "class_size", "witness"], rows


def _fit_layout(r):
    head = [
        ("formula", r["formula"]),
        ("object | param", f"{','.join(r['object_vars'])} | {','.join(r['parameter_vars'])}"),
        ("q", r["selector"]["theta"] if r["selector"] else "member index"),
        ("indices", f"{r['sampled_indices'][0]}..{r['sampled_indices'][-1]}" if r["sampled_indices"] else "-"),
        ("class_count_stable", r["class_count_stable"]),
        ("ok", r["ok"]),
    ]
    rows = []
    for c in r["classes"]:
        rows.append([c["rank"], c["polynomial"] or "no fit", c["degree"], c["leading_sign"],
                     c["size_polynomial"] or "-", ",".join(str(x) for x in c["counts"])])
    cols = ["class", "polynomial", "degree(rank proxy)", "lead_sign", "class_size_poly", "counts"]
    return head, cols, rows


def _ndim_layout(r):
    head = [
        ("formula", r["formula"]),
        ("N", r["N"]),
        ("universe polynomial", r["universe_polynomial"]),
        ("rel_tol", r["rel_tol"]),
        ("pass", r["pass"]),
    ]
    if r["error"]:
        head.append(("error", r["error"]))
    rows = [[e["rank"], e["polynomial"], e["mu_exact"] or repr(e["mu"]), e["d"],
             repr(e["relative_errors"][-1]) if e["relative_errors"] else "", e["pass"]] for e in r["entries"]]
    return head, ["class", "polynomial", "mu", "d", "final_rel_error", "pass"], rows


def _zero_one_layout(r):
    rows = [[s["sentence"], s["stabilized"], s["value"], s["first_stable_index"],
             "".join("1" if v else "0" for v in s["values"])] for s in r["sentences"]]
    head = [("indices", f"{r['sampled_indices'][0]}..{r['sampled_indices'][-1]}")]
    return head, ["sentence", "stabilized", "value", "from_index", "trace"], rows


def _num_bound_layout(r):
    head = [("formula", r["formula"]), ("note", r["note"])]
    return head, ["bound", "caveat", "small_cardinalities", "class_count_stable"], [
        [r["bound"], r["caveat"], ",".join(str(x) for x in r["small_cardinalities"]), r["class_count_stable"]]
    ]


def _validate_layout(r):
    head = [("family", r["family_kind"]), ("valid", r["valid"])]
    rows = [[m["index"], m["size"], "ok" if not m["violations"] else "; ".join(m["violations"]),
             "".join("1" if v else "0" for v in m.get("sentences", []))] for m in r["members"]]
    return head, ["index", "size", "violations", "sentences"], rows


_LAYOUTS = {
    "count": _count_layout,
    "spectrum": _spectrum_layout,
    "fit": _fit_layout,
    "mec": _fit_layout,
    "ndim": _ndim_layout,
    "zero-one": _zero_one_layout,
    "num-bound": _num_bound_layout,
    "validate": _validate_layout,
}


def csv_rows(r: dict):
    """Flat rows for external plotting."""
    cmd = r["command"]
    if cmd in ("fit", "mec"):
        headers = ["index", "size", "q"] + [f"class{c['rank']}_count" for c in r["classes"]] + [
            f"class{c['rank']}_size" for c in r["classes"]]
        rows = []
        for i, idx in enumerate(r["sampled_indices"]):
            rows.append([idx, r["sizes"][i], r["q_values"][i]]
                        + [c["counts"][i] for c in r["classes"]]
                        + [c["class_sizes"][i] for c in r["classes"]])
        return headers, rows
    if cmd == "ndim":
        headers = ["index", "size"] + [f"class{e['rank']}_rel_error" for e in r["entries"]]
        rows = [[idx, r["sizes"][i]] + [repr(e["relative_errors"][i]) for e in r["entries"]]
                for i, idx in enumerate(r["sampled_indices"])] if r["entries"] else []
        return headers, rows
    if cmd == "zero-one":
        return ["sentence", "index", "value"], [
            [s["sentence"], idx, int(v)] for s in r["sentences"] for idx, v in zip(r["sampled_indices"], s["values"])
        ]
    _, cols, rows = _LAYOUTS[cmd](r)
    return cols, rows


def render(report: dict, fmt: str) -> str:
    if fmt == "json":
        return to_json(report)
    if fmt == "csv":
        return to_csv(*csv_rows(report))
    if report["command"] == "count":
        return f"{report['count']}\n"
    head, cols, rows = _LAYOUTS[report["command"]](report)
    out = _kv(head) if head else ""
    if rows:
        out += "\n" + table(cols, rows)
    diags = report.get("diagnostics") or []
    if diags:
        out += "\ndiagnostics:\n" + "".join(f"  - {d}\n" for d in diags)
    return out
