"""PNG summaries of reports, one figure per experiment kind.

Separated from report emission so the data path never imports matplotlib;
the backend is forced to Agg here because reports render headless.
"""

from __future__ import annotations

from pathlib import Path

from .errors import LaminaError


def render(report, out_dir, base: str) -> list[Path]:
    """Write the figures for a report and return their paths."""
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    renderer = {
        "filling": _render_filling,
        "quasiconvexity": _render_quasiconvexity,
        "factor": _render_factor,
    }.get(report.kind)
    if renderer is None:
        return []
    try:
        return renderer(report, Path(out_dir), base, plt)
    except OSError as exc:
        raise LaminaError(
            f"cannot write figures under {out_dir}: {exc}") from exc


def _save(fig, path, plt):
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _render_filling(report, out, base, plt):
    fig, ax = plt.subplots(figsize=(7, 4.5))
    segments_drawn = False
    for table in report.tables:
        kind, _, label = table.name.partition(" ")
        ns = [row[0] for row in table.rows]
        if kind == "filling":
            if not segments_drawn:
                ax.plot(ns, [row[1] for row in table.rows], "k:",
                        label="segment length")
                segments_drawn = True
            ax.plot(ns, [row[2] for row in table.rows], marker="o",
                    label=f"{label} leaf")
        elif kind == "ray":
            ax.plot(ns, [row[2] for row in table.rows], linestyle="--",
                    marker=".", label=f"{label} ray")
    ax.set_yscale("log")
    ax.set_xlabel("n")
    ax.set_ylabel("letters")
    ax.set_title(f"{report.name}: carried length vs segment length")
    ax.legend()
    return [_save(fig, out / f"{base}.filling.png", plt)]


def _render_quasiconvexity(report, out, base, plt):
    fig, (left, right) = plt.subplots(1, 2, figsize=(10, 4.5))

    by_subject: dict[str, list[tuple[int, int]]] = {}
    for subject, radius, _, disto in report.table("profiles").rows:
        if isinstance(disto, int):
            by_subject.setdefault(subject, []).append((radius, disto))
    for subject, pts in by_subject.items():
        left.plot([r for r, _ in pts], [d for _, d in pts], marker="o",
                  label=subject)
    left.set_xlabel("radius R")
    left.set_ylabel("disto(R)")
    left.set_title("distortion profiles")
    left.legend()

    rows = report.table("witness").rows
    ns = [row[0] for row in rows]
    right.plot(ns, [row[1] for row in rows], marker="o",
               label="|phi^n(seed)|")
    right.plot(ns, [row[2] for row in rows], "k--", label="2n+1")
    exact = [(n, row[3]) for n, row in zip(ns, rows)
             if isinstance(row[3], int)]
    if exact:
        right.plot([n for n, _ in exact], [v for _, v in exact], "x",
                   label="exact G-length")
    right.set_xlabel("n")
    right.set_ylabel("length")
    right.set_title("conjugation witness")
    right.legend()

    fig.suptitle(report.name)
    return [_save(fig, out / f"{base}.quasiconvexity.png", plt)]


def _render_factor(report, out, base, plt):
    subjects = [key.split(" ", 1)[1] for key, _ in report.inputs
                if key.startswith("subgroup ")]
    counts = dict.fromkeys(subjects, 0)
    for subject, *_ in report.table("hits").rows:
        counts[subject] = counts.get(subject, 0) + 1

    fig, ax = plt.subplots(figsize=(6, 4))
    ax.bar(range(len(counts)), list(counts.values()))
    ax.set_xticks(range(len(counts)))
    ax.set_xticklabels(list(counts.keys()), rotation=20, ha="right")
    ax.set_ylabel("finite-index hits")
    ax.set_title(f"{report.name}: hits per subgroup")
    return [_save(fig, out / f"{base}.factor.png", plt)]
