"""Report rendering: human text, machine-readable JSON, CSV, figures.

Figures are rendered to files only (Agg backend); the delimited outputs
(trace and relation CSVs) sit alongside them in the report directory.
"""

from __future__ import annotations

import csv
import json
import os

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt

from .formula import StateRelation, StateSet
from .prog import render_program
from .satcheck import CheckReport
from .semantics import ConfigGraph, LabeledEdge
from .sorts import Structure

EXIT_FOR_VERDICT = {"valid": 0, "invalid": 1, "resource-exceeded": 3}


def _state_row(st: Structure, state) -> dict:
    def enc(v):
        if isinstance(v, frozenset):
            return "{" + ",".join(str(x) for x in sorted(v, key=repr)) + "}"
        if isinstance(v, tuple):
            return "[" + ",".join(str(x) for x in v) + "]"
        return v
    return {k: enc(v) for k, v in st.as_dict(state).items()}


def trace_rows(trace: list[LabeledEdge], st: Structure) -> list[dict]:
    rows = []
    if not trace:
        return rows
    first = trace[0].src
    rows.append({"step": 0, "label": "",
                 "program": "eps" if first.program is None
                 else render_program(first.program),
                 **_state_row(st, first.state)})
    for i, e in enumerate(trace):
        rows.append({"step": i + 1, "label": e.label,
                     "program": "eps" if e.dst.program is None
                     else render_program(e.dst.program),
                     **_state_row(st, e.dst.state)})
    return rows


def report_json(command: str, rep: CheckReport, st: Structure,
                extra: dict | None = None) -> dict:
    out = {
        "command": command,
        "verdict": rep.verdict,
        "clause": rep.clause,
        "exit": EXIT_FOR_VERDICT[rep.verdict],
        "detail": rep.detail,
        "statistics": {
            "initial_states": rep.stats.initial_states,
            "nodes": rep.stats.nodes,
            "edges": rep.stats.edges,
            "graphs": rep.stats.graphs,
            "obligations": rep.stats.obligations,
        },
        "notes": rep.notes,
        "trace": trace_rows(rep.counterexample, st),
        "cycle_start": rep.cycle_start,
    }
    if rep.initial_state is not None:
        out["initial_state"] = _state_row(st, rep.initial_state)
    if extra:
        out.update(extra)
    return out


def render_text(rep: CheckReport, st: Structure) -> str:
    lines = [f"verdict: {rep.verdict}"]
    if rep.clause:
        lines.append(f"violated clause: {rep.clause}")
    if rep.detail:
        lines.append(rep.detail)
    s = rep.stats
    if s.graphs or s.nodes:
        lines.append(
            f"explored {s.nodes} configurations, {s.edges} edges "
            f"across {s.graphs} graphs ({s.initial_states} initial states)")
    if s.obligations:
        lines.append(f"discharged {s.obligations} obligations")
    for n in rep.notes:
        lines.append(f"note: {n}")
    if rep.counterexample:
        lines.append("counterexample trace:")
        for row in trace_rows(rep.counterexample, st):
            mark = ""
            if rep.cycle_start is not None and row["step"] == rep.cycle_start:
                mark = "  <- cycle starts here"
            label = f"--{row['label']}->" if row["label"] else "      "
            vals = " ".join(f"{k}={v}" for k, v in row.items()
                            if k not in ("step", "label", "program"))
            lines.append(f"  {row['step']:3} {label} {vals}  "
                         f"[{row['program']}]"
                         + mark)
    return "\n".join(lines)


def write_trace_csv(path: str, trace: list[LabeledEdge], st: Structure) -> None:
    rows = trace_rows(trace, st)
    if not rows:
        return
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)


def write_stats_csv(path: str, rep: CheckReport) -> None:
    s = rep.stats
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["initial_states", "nodes", "edges", "graphs", "obligations"])
        w.writerow([s.initial_states, s.nodes, s.edges, s.graphs, s.obligations])


def plot_trace(path: str, trace: list[LabeledEdge], st: Structure) -> None:
    """Step plot of numeric and boolean variables along the trace."""
    rows = trace_rows(trace, st)
    if not rows:
        return
    steps = [r["step"] for r in rows]
    fig, ax = plt.subplots(figsize=(8, 4.5))
    plotted = False
    for v in st.var_order:
        vals = [r[v] for r in rows]
        if all(isinstance(x, bool) for x in vals):
            ax.step(steps, [int(x) for x in vals], where="post", label=v)
            plotted = True
        elif all(isinstance(x, int) for x in vals):
            ax.step(steps, vals, where="post", label=v)
            plotted = True
    if not plotted:
        plt.close(fig)
        return
    for i, e in enumerate(trace):
        ax.annotate(e.label, (i + 0.5, ax.get_ylim()[0]),
                    ha="center", fontsize=8, color="grey")
    ax.set_xlabel("step")
    ax.set_ylabel("value")
    ax.set_title("counterexample trace")
    ax.legend(loc="best", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def relation_rows(rel: StateRelation | StateSet) -> tuple[list[str], list[list]]:
    def enc(v):
        if isinstance(v, frozenset):
            return "{" + ",".join(str(x) for x in sorted(v, key=repr)) + "}"
        if isinstance(v, tuple):
            return "[" + ",".join(str(x) for x in v) + "]"
        return v
    if isinstance(rel, StateSet):
        header = list(rel.vars)
        rows = sorted([list(map(enc, m)) for m in rel.members], key=repr)
        return header, rows
    header = [f"{v}~" for v in rel.vars] + list(rel.vars)
    rows = sorted([list(map(enc, a)) + list(map(enc, b))
                   for (a, b) in rel.pairs], key=repr)
    return header, rows


def write_relation_csv(path: str, rel: StateRelation | StateSet) -> None:
    header, rows = relation_rows(rel)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        w.writerows(rows)


def plot_relation(path: str, rel: StateRelation | StateSet,
                  st: Structure) -> None:
    """Membership heat map over enumerated projected states."""
    import numpy as np
    from .formula import _grid
    pts = _grid(st, rel.vars)
    if len(pts) > 400:
        return
    idx = {p: i for i, p in enumerate(pts)}
    fig, ax = plt.subplots(figsize=(6, 5.5))
    if isinstance(rel, StateSet):
        m = np.zeros((1, len(pts)))
        for mem in rel.members:
            if mem in idx:
                m[0, idx[mem]] = 1
        ax.imshow(m, cmap="Blues", aspect="auto", vmin=0, vmax=1)
        ax.set_yticks([])
        ax.set_xlabel("state index")
    else:
        m = np.zeros((len(pts), len(pts)))
        for (a, b) in rel.pairs:
            # transient values outside the declared carrier stay unplotted
            if a in idx and b in idx:
                m[idx[a], idx[b]] = 1
        ax.imshow(m, cmap="Blues", vmin=0, vmax=1)
        ax.set_xlabel("new state index")
        ax.set_ylabel("old state index")
    ax.set_title("relation over " + ", ".join(rel.vars))
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def plot_graph(path: str, g: ConfigGraph, st: Structure) -> None:
    """Configuration-graph drawing; solid internal, dashed external edges."""
    import networkx as nx
    if len(g.nodes) > 300:
        return
    G = nx.MultiDiGraph()
    labels = {}
    ids = {cfg: i for i, cfg in enumerate(g.nodes)}
    for cfg, i in ids.items():
        G.add_node(i)
        vals = ",".join(str(v) for v in cfg.state.vals)
        labels[i] = ("eps" if cfg.program is None else
                     f"{hash(cfg.program) & 0xffff:04x}") + f"\n{vals}"
    for e in g.edges:
        G.add_edge(ids[e.src], ids[e.dst], label=e.label)
    pos = nx.spring_layout(G, seed=7)
    fig, ax = plt.subplots(figsize=(8, 8))
    colors = ["#88c999" if cfg.program is None
              else ("#e39b9b" if g.blocked(cfg) else "#9bb8e3")
              for cfg in ids]
    nx.draw_networkx_nodes(G, pos, node_size=450, node_color=colors, ax=ax)
    nx.draw_networkx_labels(G, pos, labels, font_size=6, ax=ax)
    internal = [(u, v) for u, v, d in G.edges(data=True) if d["label"] == "i"]
    external = [(u, v) for u, v, d in G.edges(data=True) if d["label"] == "e"]
    nx.draw_networkx_edges(G, pos, edgelist=internal, ax=ax,
                           arrowsize=9, edge_color="black")
    nx.draw_networkx_edges(G, pos, edgelist=external, ax=ax, style="dashed",
                           arrowsize=9, edge_color="grey")
    ax.set_axis_off()
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    plt.close(fig)


def emit_report_dir(dirpath: str, command: str, rep: CheckReport,
                    st: Structure, extra: dict | None = None) -> None:
    os.makedirs(dirpath, exist_ok=True)
    with open(os.path.join(dirpath, "report.json"), "w") as fh:
        json.dump(report_json(command, rep, st, extra), fh, indent=2,
                  default=str)
    write_stats_csv(os.path.join(dirpath, "stats.csv"), rep)
    if rep.counterexample:
        write_trace_csv(os.path.join(dirpath, "counterexample.csv"),
                        rep.counterexample, st)
        plot_trace(os.path.join(dirpath, "trace.png"), rep.counterexample, st)
