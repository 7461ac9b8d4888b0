"""Experiment pipelines: configuration, three runners, and report emission.

A config is an INI file.  ``[experiment]`` picks the pipeline (``filling``,
``quasiconvexity`` or ``factor``), ``[automorphism]`` gives the defining
automorphism either inline (one key per generator, plus an
``[automorphism.inverse]`` section) or via ``file =`` pointing at the
arrow format of ``parse_automorphism``.  Subgroups under test live in
``[subgroup NAME]`` sections, free-factor data for the factor pipeline in
``[factor NAME]`` sections, knobs in ``[limits]``.  See the README for the
full grammar.

Runners return a Report whose verdict is three-valued: ``consistent``
(every checked prediction held), ``inconsistent`` (a concrete
counter-sample is attached), or ``inconclusive`` (the configured caps ran
out before a verdict).  Failed preconditions raise
HypothesisViolationError instead of producing a report.

Subjects are processed independently of one another; results do not
depend on the order in which they are evaluated, only on the config.
"""

from __future__ import annotations

import configparser
import csv
import json
from dataclasses import dataclass, fields
from pathlib import Path
from typing import NamedTuple, Sequence

import numpy as np

from . import extension
from . import stallings
from . import traintrack
from .errors import (
    HypothesisViolationError,
    LaminaError,
    MalformedInputError,
    RankMismatchError,
    ResourceCapError,
    UncertifiedInverseError,
)
from .words import (
    GENERATOR_NAMES,
    Automorphism,
    Word,
    parse_automorphism,
    parse_word,
    parse_words,
)

CONSISTENT = "consistent"
INCONSISTENT = "inconsistent"
INCONCLUSIVE = "inconclusive"

_KIND_ALIASES = {
    "filling": "filling",
    "quasiconvexity": "quasiconvexity",
    "qc": "quasiconvexity",
    "factor": "factor",
}


@dataclass(frozen=True)
class Limits:
    """Caps and thresholds for a run; every field has a working default."""

    n_max: int = 14
    r_max: int = 8
    witness_max: int = 8
    realization_points: int = 4
    conjugator_bound: int = 4
    plateau_window: int = 4
    fit_min_radius: int = 3
    linear_residual: float = 0.25
    max_states: int | None = None
    intrinsic_cap: int = extension.DEFAULT_INTRINSIC_CAP


_LIMIT_RANGES = {
    "n_max": (1, 30),
    "r_max": (0, 16),
    "witness_max": (0, 64),
    "realization_points": (0, 16),
    "conjugator_bound": (0, 6),
    "plateau_window": (2, 16),
    "fit_min_radius": (0, 16),
}


def _check_limits(lim: Limits) -> None:
    for name, (lo, hi) in _LIMIT_RANGES.items():
        value = getattr(lim, name)
        if not lo <= value <= hi:
            raise MalformedInputError(
                f"limit {name}={value} outside the supported range "
                f"{lo}..{hi}")
    if not 0 < lim.linear_residual <= 10:
        raise MalformedInputError(
            f"linear_residual must lie in (0, 10], got {lim.linear_residual}")
    if lim.max_states is not None and lim.max_states < 1:
        raise MalformedInputError("max_states must be positive")
    if lim.intrinsic_cap < 1:
        raise MalformedInputError("intrinsic_cap must be positive")


@dataclass(frozen=True)
class ExperimentConfig:
    """A parsed, validated experiment description."""

    kind: str
    name: str
    phi: Automorphism
    seed: str
    graph_map: "traintrack.MarkedGraphMap | None"
    subjects: tuple[tuple[str, tuple[Word, ...]], ...]
    factors: tuple[tuple[str, tuple[Word, ...]], ...]
    hyperbolic: str
    seeds: tuple[Word, ...]
    limits: Limits


@dataclass(frozen=True)
class Table:
    """One named sample table; rows hold ints, floats, strings or Unknown."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple, ...]


@dataclass(frozen=True)
class Report:
    kind: str
    name: str
    inputs: tuple[tuple[str, str], ...]
    tables: tuple[Table, ...]
    verdict: str
    counter_sample: str | None
    notes: tuple[str, ...]
    resource_limited: bool = False

    def table(self, name: str) -> Table:
        for t in self.tables:
            if t.name == name:
                return t
        raise MalformedInputError(f"report has no table named {name!r}")


# ---------------------------------------------------------------------------
# configuration


_TOP_SECTIONS = {
    "experiment", "automorphism", "automorphism.inverse", "map",
    "limits", "hypotheses", "seeds",
}


def _only_keys(section, allowed, where):
    extra = [k for k in section if k not in allowed]
    if extra:
        raise MalformedInputError(
            f"unknown key {extra[0]!r} in [{where}]")


def _get_int(section, key, default, where):
    raw = section.get(key)
    if raw is None:
        return default
    try:
        return int(raw, 0)
    except ValueError:
        raise MalformedInputError(
            f"[{where}] {key} must be an integer, got {raw!r}") from None


def _get_float(section, key, default, where):
    raw = section.get(key)
    if raw is None:
        return default
    try:
        return float(raw)
    except ValueError:
        raise MalformedInputError(
            f"[{where}] {key} must be a number, got {raw!r}") from None


def _read_text(path: Path, what: str) -> str:
    try:
        return path.read_text()
    except OSError as exc:
        raise MalformedInputError(f"cannot read {what} {path}: {exc}") from exc


def _parse_inline_automorphism(cp) -> Automorphism:
    sec = cp["automorphism"]
    names = list(sec.keys())
    rank = len(names)
    if rank == 0:
        raise MalformedInputError("[automorphism] section is empty")
    expected = list(GENERATOR_NAMES[:rank])
    if names != expected:
        raise MalformedInputError(
            f"[automorphism] keys must be {', '.join(expected)} in order, "
            f"got {', '.join(names)}")
    if "automorphism.inverse" not in cp:
        raise MalformedInputError(
            "inline [automorphism] needs an [automorphism.inverse] section")
    inv = cp["automorphism.inverse"]
    if list(inv.keys()) != expected:
        raise MalformedInputError(
            "[automorphism.inverse] must list the same generators in order")
    images = [parse_word(sec[n], rank) for n in names]
    inverse = [parse_word(inv[n], rank) for n in names]
    return Automorphism(images, inverse)


def parse_config(path: "str | Path") -> ExperimentConfig:
    """Read and validate an experiment config file."""
    p = Path(path)
    text = _read_text(p, "config")
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    cp.optionxform = str
    try:
        cp.read_string(text, source=str(p))
    except configparser.Error as exc:
        raise MalformedInputError(f"bad config {p.name}: {exc}") from exc

    for sec in cp.sections():
        if sec in _TOP_SECTIONS:
            continue
        if sec.startswith("subgroup ") or sec.startswith("factor "):
            continue
        raise MalformedInputError(f"unknown section [{sec}]")

    if "experiment" not in cp or "kind" not in cp["experiment"]:
        raise MalformedInputError(
            "config declares no experiment kind; nothing to run")
    exp = cp["experiment"]
    _only_keys(exp, {"kind", "name", "seed"}, "experiment")
    kind_raw = exp["kind"].strip()
    if kind_raw not in _KIND_ALIASES:
        raise MalformedInputError(
            f"unknown experiment kind {kind_raw!r}; expected filling, "
            f"quasiconvexity or factor")
    kind = _KIND_ALIASES[kind_raw]
    name = exp.get("name", p.stem).strip() or p.stem
    seed = exp.get("seed", "a").strip() or "a"

    if "automorphism" not in cp:
        raise MalformedInputError("config has no [automorphism] section")
    aut_sec = cp["automorphism"]
    if "file" in aut_sec:
        _only_keys(aut_sec, {"file"}, "automorphism")
        if "automorphism.inverse" in cp:
            raise MalformedInputError(
                "[automorphism.inverse] conflicts with file =; the file "
                "carries its own inverse block")
        phi = parse_automorphism(
            _read_text(p.parent / aut_sec["file"], "automorphism file"))
    else:
        phi = _parse_inline_automorphism(cp)
    phi.ensure_certified()

    graph_map = None
    if "map" in cp:
        if kind != "filling":
            raise MalformedInputError(
                "[map] sections only apply to filling experiments")
        _only_keys(cp["map"], {"file"}, "map")
        if "file" not in cp["map"]:
            raise MalformedInputError("[map] needs a file = entry")
        graph_map = traintrack.parse_graph_map(
            _read_text(p.parent / cp["map"]["file"], "graph map"))
        if graph_map.marking_rank != phi.rank:
            raise RankMismatchError(
                f"map has rank {graph_map.marking_rank}, "
                f"automorphism has rank {phi.rank}")
        if not graph_map.is_rose:
            raise MalformedInputError(
                "filling experiments need a rose map so that edge paths "
                "and group words coincide")

    subjects: list[tuple[str, tuple[Word, ...]]] = []
    factors: list[tuple[str, tuple[Word, ...]]] = []
    for sec in cp.sections():
        for prefix, into in (("subgroup ", subjects), ("factor ", factors)):
            if not sec.startswith(prefix):
                continue
            label = sec[len(prefix):].strip()
            if not label:
                raise MalformedInputError(f"[{sec}] has an empty name")
            if label == "H":
                raise MalformedInputError(
                    "the name H is reserved for the full fiber")
            _only_keys(cp[sec], {"gens"}, sec)
            if "gens" not in cp[sec]:
                raise MalformedInputError(f"[{sec}] needs a gens = entry")
            gens = tuple(parse_words(cp[sec]["gens"], phi.rank))
            if not gens:
                raise MalformedInputError(f"[{sec}] lists no generators")
            into.append((label, gens))
    if factors and kind != "factor":
        raise MalformedInputError(
            "[factor] sections only apply to factor experiments")

    lim = Limits()
    if "limits" in cp:
        sec = cp["limits"]
        _only_keys(sec, {f.name for f in fields(Limits)}, "limits")
        kw = {}
        for f in fields(Limits):
            if f.name == "linear_residual":
                kw[f.name] = _get_float(sec, f.name, lim.linear_residual,
                                        "limits")
            else:
                kw[f.name] = _get_int(sec, f.name, getattr(lim, f.name),
                                      "limits")
        lim = Limits(**kw)
    _check_limits(lim)

    hyperbolic = "unknown"
    if "hypotheses" in cp:
        _only_keys(cp["hypotheses"], {"hyperbolic"}, "hypotheses")
        hyperbolic = cp["hypotheses"].get("hyperbolic", "unknown").strip()
        if hyperbolic not in ("declared", "unknown"):
            raise MalformedInputError(
                f"hyperbolic must be declared or unknown, got {hyperbolic!r}")

    seeds = tuple(Word([k]) for k in range(1, phi.rank + 1))
    if "seeds" in cp:
        if kind != "quasiconvexity":
            raise MalformedInputError(
                "[seeds] sections only apply to quasiconvexity experiments")
        _only_keys(cp["seeds"], {"words"}, "seeds")
        if "words" in cp["seeds"]:
            seeds = tuple(parse_words(cp["seeds"]["words"], phi.rank))
            if not seeds:
                raise MalformedInputError("[seeds] words lists no words")

    if kind == "quasiconvexity":
        w = parse_word(seed, phi.rank)
        if len(w) != 1 or w.letters[0] < 0:
            raise MalformedInputError(
                f"seed must be a single generator, got {seed!r}")
    if kind == "factor" and not factors:
        raise MalformedInputError(
            "factor experiments need at least one [factor] section")
    if kind in ("filling", "factor") and not subjects:
        raise MalformedInputError(
            f"{kind} experiments need at least one [subgroup] section")

    return ExperimentConfig(
        kind=kind,
        name=name,
        phi=phi,
        seed=seed,
        graph_map=graph_map,
        subjects=tuple(subjects),
        factors=tuple(factors),
        hyperbolic=hyperbolic,
        seeds=seeds,
        limits=lim,
    )


def _one_line(phi: Automorphism, inverse: bool = False) -> str:
    images = phi.inverse_images if inverse else phi.images
    return "; ".join(f"{GENERATOR_NAMES[i]} -> {w}"
                     for i, w in enumerate(images))


def _echo_inputs(config: ExperimentConfig) -> tuple[tuple[str, str], ...]:
    pairs = [
        ("kind", config.kind),
        ("name", config.name),
        ("seed", config.seed),
        ("automorphism", _one_line(config.phi)),
        ("inverse", _one_line(config.phi, inverse=True)),
    ]
    if config.graph_map is not None:
        pairs.append(("map", " ".join(config.graph_map.edge_names)))
    for label, gens in config.subjects:
        pairs.append((f"subgroup {label}", ", ".join(str(g) for g in gens)))
    for label, gens in config.factors:
        pairs.append((f"factor {label}", ", ".join(str(g) for g in gens)))
    pairs.append(("hyperbolic", config.hyperbolic))
    if config.kind == "quasiconvexity":
        pairs.append(("seeds", ", ".join(str(w) for w in config.seeds)))
    lim = config.limits
    pairs.append(("limits", ", ".join(
        f"{f.name}={getattr(lim, f.name)}" for f in fields(Limits)
        if getattr(lim, f.name) is not None)))
    return tuple(pairs)


# ---------------------------------------------------------------------------
# filling


def _plateau_value(carried: Sequence[int], segments: Sequence[int],
                   window: int) -> int | None:
    """The eventual constant of the carried curve, or None if still moving.

    A plateau needs the last ``window`` samples equal and strictly below
    the final segment length (otherwise the curve is just full carrying).
    """
    if len(carried) < window:
        return None
    tail = carried[-window:]
    if any(v != tail[0] for v in tail):
        return None
    if tail[0] >= segments[-1]:
        return None
    return tail[0]


def run_filling(config: ExperimentConfig) -> Report:
    """Carried-length curves for leaf segments and eigenray prefixes.

    An aperiodic map forces a dichotomy per subgroup: finite index means
    the core graph carries every segment whole, infinite index means the
    carried length stops growing.  The verdict checks each configured
    subgroup against its computed index.
    """
    phi = config.phi
    lim = config.limits
    f = config.graph_map or traintrack.from_automorphism(phi)
    seed_dir = f.edge_index(config.seed)

    forward = traintrack.is_primitive(traintrack.transition_matrix(f))
    if not forward.primitive:
        raise HypothesisViolationError(
            "transition matrix of the forward map is not primitive")
    inverse_rose = traintrack.from_automorphism(phi.power(-1))
    backward = traintrack.is_primitive(
        traintrack.transition_matrix(inverse_rose))
    if not backward.primitive:
        raise HypothesisViolationError(
            "transition matrix of the inverse map is not primitive")
    notes = [
        f"forward map primitive at power {forward.witness_power}, "
        f"inverse at power {backward.witness_power}",
    ]

    periods = dict(traintrack.periodic_directions(f))
    if seed_dir in periods:
        ray_dir = seed_dir
    else:
        ray_dir = min(periods)
        notes.append(
            f"seed direction {f.direction_name(seed_dir)} is not periodic; "
            f"eigenray taken at {f.direction_name(ray_dir)}")

    segments = [traintrack.leaf_segment(f, seed_dir, n)
                for n in range(1, lim.n_max + 1)]
    seg_lens = [len(s) for s in segments]
    ray_prefix = traintrack.eigenray_prefix(f, ray_dir, seg_lens[-1])

    tables: list[Table] = []
    verdict = CONSISTENT
    counter = None
    for label, gens in config.subjects:
        core = stallings.fold(gens, phi.rank)
        idx = stallings.index(core)
        leaf_rows = []
        ray_rows = []
        for n, seg in enumerate(segments, start=1):
            carried = stallings.max_carried_length(core, f, seed_dir, n)
            leaf_rows.append((n, len(seg), carried))
            prefix_word = f.path_to_word(ray_prefix[:len(seg)])
            ray_rows.append((n, len(seg), stallings.longest_readable_factor(
                core, prefix_word.letters)))
        tables.append(Table(f"filling {label}",
                            ("n", "segment_length", "carried_length"),
                            tuple(leaf_rows)))
        tables.append(Table(f"ray {label}",
                            ("n", "prefix_length", "carried_length"),
                            tuple(ray_rows)))

        if idx.finite:
            bad = next(((which, n, s, c)
                        for which, rows in (("leaf", leaf_rows),
                                            ("ray", ray_rows))
                        for n, s, c in rows if c != s), None)
            if bad is not None:
                which, n, s, c = bad
                verdict = INCONSISTENT
                if counter is None:
                    counter = (
                        f"subgroup {label}: {which} carried length {c} < "
                        f"segment length {s} at n={n} despite finite "
                        f"index {idx.value}")
            else:
                notes.append(
                    f"subgroup {label}: index {idx.value}, full carrying "
                    f"through n={lim.n_max}")
        else:
            p_leaf = _plateau_value([c for _, _, c in leaf_rows], seg_lens,
                                    lim.plateau_window)
            p_ray = _plateau_value([c for _, _, c in ray_rows], seg_lens,
                                   lim.plateau_window)
            if p_leaf is not None and p_ray is not None:
                notes.append(
                    f"subgroup {label}: infinite index, leaf carrying "
                    f"plateaus at {p_leaf}, ray carrying at {p_ray}")
            else:
                if verdict == CONSISTENT:
                    verdict = INCONCLUSIVE
                notes.append(
                    f"subgroup {label}: infinite index but carried lengths "
                    f"still moving at n_max={lim.n_max}; raise n_max")

    return Report(
        kind="filling",
        name=config.name,
        inputs=_echo_inputs(config),
        tables=tuple(tables),
        verdict=verdict,
        counter_sample=counter,
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# quasiconvexity


class FitResult(NamedTuple):
    r_lo: int
    r_hi: int
    slope: float
    intercept: float
    rel_residual: float
    linear: bool


def _linear_fit(samples, r_lo: int, residual_cap: float) -> FitResult | None:
    """Least-squares line through the integer samples with radius >= r_lo.

    Returns None when fewer than two usable samples exist or any sample
    in range is still Unknown.  The relative residual is the RMS error
    over the mean absolute value; an all-zero profile counts as linear.
    """
    pts = [(r, v) for r, v in samples if r >= r_lo]
    if len(pts) < 2 or any(not isinstance(v, int) for _, v in pts):
        return None
    xs = np.array([r for r, _ in pts], dtype=float)
    ys = np.array([v for _, v in pts], dtype=float)
    slope, intercept = np.polyfit(xs, ys, 1)
    rms = float(np.sqrt(np.mean((slope * xs + intercept - ys) ** 2)))
    scale = float(np.mean(np.abs(ys)))
    rel = 0.0 if rms == 0 else (rms / scale if scale else float("inf"))
    return FitResult(int(xs[0]), int(xs[-1]), float(slope), float(intercept),
                     rel, rel < residual_cap)


def _round_robin(gens: Sequence[Word], n: int) -> Word:
    out = Word()
    for i in range(n):
        out = out * gens[i % len(gens)]
    return out


def run_quasiconvexity(config: ExperimentConfig) -> Report:
    """Distortion profiles, the conjugation witness, and realization depths.

    Builds one ball of the extension and reads everything from it: how
    fast intrinsic length grows inside G-balls for the fiber and each
    subgroup, whether t^n a t^-n certifies super-linear fiber distortion,
    and how deep geodesic realizations of translated segments dive.  With
    ``hyperbolic = declared`` the verdict demands linear subgroup
    profiles and a super-linear witness; otherwise the report is
    informational.
    """
    phi = config.phi
    lim = config.limits
    notes: list[str] = []
    resource_limited = False
    try:
        bl = extension.ball(phi, lim.r_max, lim.max_states)
    except ResourceCapError as err:
        bl = err.partial
        resource_limited = True
        notes.append(
            f"ball truncated at radius {bl.radius} of {lim.r_max} "
            f"by the state cap")
    notes.append(f"ball radius {bl.radius}: {len(bl)} elements")

    profiles = [("H", extension.distortion_profile(
        None, phi, bl.radius, within=bl, intrinsic_cap=lim.intrinsic_cap))]
    for label, gens in config.subjects:
        profiles.append((label, extension.distortion_profile(
            list(gens), phi, bl.radius, within=bl,
            intrinsic_cap=lim.intrinsic_cap)))
    profile_rows = tuple(
        (label, row.radius, row.count, row.disto)
        for label, prof in profiles for row in prof.rows)

    seed_word = parse_word(config.seed, phi.rank)
    witness_rows = []
    superlinear = False
    for n in range(lim.witness_max + 1):
        image = phi.iterate(seed_word, n)
        exact = bl.distance(image)
        if exact is None:
            exact = extension.Unknown(bl.radius + 1)
        left = extension.multiply(extension.NormalForm(n, Word()),
                                  extension.NormalForm(0, seed_word), phi)
        round_trip = extension.multiply(
            left, extension.NormalForm(-n, Word()), phi)
        certified = (round_trip.t_exp == 0 and round_trip.tail == image)
        witness_rows.append((n, len(image), 2 * n + 1, exact,
                             "yes" if certified else "no"))
        superlinear = superlinear or len(image) > 2 * n + 1

    realization_rows = []
    h_depths = []
    for seed in config.seeds:
        for n in range(1, lim.realization_points + 1):
            lam = phi.iterate(seed, n)
            row = _realization_row("H", str(seed), n, lam, phi, bl)
            realization_rows.append(row)
            h_depths.append(row[5])
    for label, gens in config.subjects:
        base = ", ".join(str(g) for g in gens)
        for n in range(1, lim.realization_points + 1):
            lam = _round_robin(gens, n)
            if not len(lam):
                notes.append(
                    f"subgroup {label}: products of its generators cancel "
                    f"to 1 at n={n}; row skipped")
                continue
            realization_rows.append(
                _realization_row(label, base, n, lam, phi, bl))
    if h_depths:
        notes.append("H realization min depths: "
                     + ", ".join(str(d) for d in h_depths))

    fit_rows = []
    fit_failures = []
    fit_pending = []
    for label, prof in profiles:
        fit = _linear_fit(prof.samples, lim.fit_min_radius,
                          lim.linear_residual)
        if fit is None:
            fit_rows.append((label, lim.fit_min_radius, bl.radius,
                             None, None, None, "unknown"))
            if label != "H":
                fit_pending.append(label)
        else:
            fit_rows.append((label, fit.r_lo, fit.r_hi, fit.slope,
                             fit.intercept, fit.rel_residual,
                             "yes" if fit.linear else "no"))
            if label != "H" and not fit.linear:
                fit_failures.append((label, fit))

    tables = (
        Table("profiles", ("subject", "radius", "count", "disto"),
              profile_rows),
        Table("witness", ("n", "h_length", "g_bound", "g_exact", "certified"),
              tuple(witness_rows)),
        Table("realizations",
              ("subject", "seed", "n", "h_length", "g_length", "min_depth"),
              tuple(realization_rows)),
        Table("fits", ("subject", "r_lo", "r_hi", "slope", "intercept",
                       "rel_residual", "linear"),
              tuple(fit_rows)),
    )

    verdict = CONSISTENT
    counter = None
    if resource_limited:
        verdict = INCONCLUSIVE
    elif config.hyperbolic == "declared":
        if fit_failures:
            label, fit = fit_failures[0]
            verdict = INCONSISTENT
            counter = (
                f"subgroup {label}: relative residual {fit.rel_residual:.3g} "
                f">= {lim.linear_residual:g} over radii "
                f"{fit.r_lo}..{fit.r_hi}")
        elif not superlinear:
            verdict = INCONSISTENT
            counter = (
                f"witness: |phi^n({config.seed})| never exceeds 2n+1 "
                f"for n <= {lim.witness_max}")
        elif fit_pending:
            verdict = INCONCLUSIVE
            notes.append(
                "fit inconclusive for: " + ", ".join(fit_pending))
    else:
        notes.append(
            "hyperbolicity not declared; profiles and witness reported "
            "without a hypothesis to test")

    return Report(
        kind="quasiconvexity",
        name=config.name,
        inputs=_echo_inputs(config),
        tables=tables,
        verdict=verdict,
        counter_sample=counter,
        notes=tuple(notes),
        resource_limited=resource_limited,
    )


def _realization_row(label, seed_text, n, lam, phi, bl):
    real = extension.geodesic_realization(lam, phi, bl.radius, within=bl)
    if isinstance(real, extension.Unknown):
        return (label, seed_text, n, len(lam), real, None)
    return (label, seed_text, n, len(lam), real.length, real.min_depth)


# ---------------------------------------------------------------------------
# factor


def _reduced_words_upto(rank: int, max_len: int) -> list[tuple[int, ...]]:
    """All reduced letter tuples of length <= max_len.

    Ordered by length, then by extension alphabet a < a^-1 < b < ...,
    so searches over conjugators are deterministic.
    """
    alphabet = [s * g for g in range(1, rank + 1) for s in (1, -1)]
    out = [()]
    frontier = [()]
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for letter in alphabet:
                if w and w[-1] == -letter:
                    continue
                nxt.append(w + (letter,))
        out.extend(nxt)
        frontier = nxt
    return out


def _restriction(core, phi, label) -> Automorphism:
    """The automorphism induced on the subgroup, over its canonical basis."""
    basis = stallings.generating_set(core)
    forward = []
    backward = []
    for b in basis:
        forward.append(Word(stallings.express_in_basis(core, phi.apply(b))))
        backward.append(Word(stallings.express_in_basis(
            core, phi.apply(b, inverse=True))))
    restricted = Automorphism(forward, backward)
    try:
        restricted.ensure_certified()
    except UncertifiedInverseError as exc:
        raise HypothesisViolationError(
            f"factor {label}: restricted images do not invert each "
            f"other") from exc
    return restricted


def _occurrence_matrix(images: Sequence[Word], rank: int) -> np.ndarray:
    m = np.zeros((rank, rank), dtype=int)
    for j, w in enumerate(images):
        for x in w.letters:
            m[abs(x) - 1, j] += 1
    return m


def run_factor(config: ExperimentConfig) -> Report:
    """Search for finite-index intersections with conjugated free factors.

    For each subgroup under test, walk every conjugator up to the bound,
    intersect with the conjugated factor, and record the cases where the
    intersection has finite index in the conjugate.  A subgroup with no
    hit is not refuted, only unresolved at this bound, so the verdict
    degrades to inconclusive instead of inconsistent.
    """
    phi = config.phi
    lim = config.limits
    notes: list[str] = []

    restriction_rows = []
    factor_cores = []
    for label, gens in config.factors:
        core = stallings.fold(gens, phi.rank)
        for g in gens:
            if not stallings.membership(core, phi.apply(g)):
                raise HypothesisViolationError(
                    f"factor {label}: image of {g} leaves the factor")
            if not stallings.membership(core, phi.apply(g, inverse=True)):
                raise HypothesisViolationError(
                    f"factor {label}: inverse image of {g} leaves the factor")
        restricted = _restriction(core, phi, label)
        forward = traintrack.is_primitive(
            _occurrence_matrix(restricted.images, restricted.rank))
        backward = traintrack.is_primitive(
            _occurrence_matrix(restricted.inverse_images, restricted.rank))
        if not forward.primitive:
            raise HypothesisViolationError(
                f"factor {label}: restriction is not aperiodic")
        if not backward.primitive:
            raise HypothesisViolationError(
                f"factor {label}: inverse restriction is not aperiodic")
        restriction_rows.append((
            label, restricted.rank, _one_line(restricted),
            _one_line(restricted, inverse=True),
            forward.witness_power, backward.witness_power))
        factor_cores.append((label, core))

    conjugators = _reduced_words_upto(phi.rank, lim.conjugator_bound)
    conjugates = []
    for label, core in factor_cores:
        seen = set()
        distinct = []
        for letters in conjugators:
            conj = stallings.conjugate_core(core, Word(letters))
            if conj in seen:
                continue
            seen.add(conj)
            distinct.append((Word(letters), conj))
        conjugates.append((label, distinct))
        notes.append(
            f"factor {label}: {len(distinct)} distinct conjugates from "
            f"{len(conjugators)} conjugators of length <= "
            f"{lim.conjugator_bound}")

    hit_rows = []
    verdict = CONSISTENT
    for s_label, gens in config.subjects:
        s_core = stallings.fold(gens, phi.rank)
        hits = 0
        for f_label, distinct in conjugates:
            for h, conj in distinct:
                rel = stallings.relative_index(s_core, conj)
                if not rel.finite:
                    continue
                meet = stallings.fiber_product(s_core, conj)
                meet_rank = sum(1 for _ in meet.edges()) - meet.n_vertices + 1
                hit_rows.append((s_label, f_label, str(h), rel.value,
                                 meet_rank))
                hits += 1
        if hits == 0:
            verdict = INCONCLUSIVE
            notes.append(
                f"subgroup {s_label}: no finite-index intersection with any "
                f"factor conjugate at bound {lim.conjugator_bound}")
        else:
            notes.append(f"subgroup {s_label}: {hits} finite-index hits")

    tables = (
        Table("restrictions",
              ("factor", "rank", "restriction", "inverse_restriction",
               "forward_witness", "inverse_witness"),
              tuple(restriction_rows)),
        Table("hits",
              ("subject", "factor", "conjugator", "relative_index",
               "intersection_rank"),
              tuple(hit_rows)),
    )
    return Report(
        kind="factor",
        name=config.name,
        inputs=_echo_inputs(config),
        tables=tables,
        verdict=verdict,
        counter_sample=None,
        notes=tuple(notes),
    )


_RUNNERS = {
    "filling": run_filling,
    "quasiconvexity": run_quasiconvexity,
    "factor": run_factor,
}


def run_experiment(config: ExperimentConfig) -> Report:
    """Dispatch to the runner named by the config."""
    return _RUNNERS[config.kind](config)


# ---------------------------------------------------------------------------
# emission


def _slug(text: str) -> str:
    out = "".join(c if c.isalnum() or c in "._-" else "-" for c in text)
    return out.strip("-") or "report"


def _cell_text(value) -> str:
    if value is None:
        return ""
    if isinstance(value, bool):
        return "yes" if value else "no"
    if isinstance(value, float):
        return f"{value:.6g}"
    return str(value)


def _cell_json(value):
    if value is None or isinstance(value, (int, str)):
        return value
    return _cell_text(value)


def emit(report: Report, formats="text", out_dir: "str | Path" = ".",
         basename: str | None = None, figures: bool = False) -> list[Path]:
    """Write the report under out_dir; returns the paths written.

    ``formats`` is a name or iterable of names from json, csv and text.
    CSV gets one file per table.  Cells are formatted the same way in
    every format (floats to six significant digits), so identical reports
    serialize to identical bytes.  With ``figures`` set, PNG summaries
    are rendered next to the data files.
    """
    if isinstance(formats, str):
        formats = (formats,)
    unknown = [f for f in formats if f not in ("json", "csv", "text")]
    if unknown:
        raise MalformedInputError(f"unknown report format {unknown[0]!r}")

    out = Path(out_dir)
    base = _slug(basename if basename is not None else report.name)
    written: list[Path] = []
    try:
        out.mkdir(parents=True, exist_ok=True)
        if "json" in formats:
            written.append(_write_json(report, out / f"{base}.json"))
        if "csv" in formats:
            for table in report.tables:
                written.append(_write_csv(
                    table, out / f"{base}.{_slug(table.name)}.csv"))
        if "text" in formats:
            written.append(_write_text(report, out / f"{base}.txt"))
    except OSError as exc:
        raise LaminaError(f"cannot write report under {out}: {exc}") from exc
    if figures:
        from . import figures as figs
        written.extend(figs.render(report, out, base))
    return written


def _write_json(report: Report, path: Path) -> Path:
    doc = {
        "schema": "lamina-report/1",
        "kind": report.kind,
        "name": report.name,
        "verdict": report.verdict,
        "counter_sample": report.counter_sample,
        "resource_limited": report.resource_limited,
        "notes": list(report.notes),
        "inputs": [[k, v] for k, v in report.inputs],
        "tables": [
            {
                "name": t.name,
                "columns": list(t.columns),
                "rows": [[_cell_json(c) for c in row] for row in t.rows],
            }
            for t in report.tables
        ],
    }
    path.write_text(json.dumps(doc, indent=2) + "\n")
    return path


def _write_csv(table: Table, path: Path) -> Path:
    with path.open("w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell_text(c) for c in row])
    return path


def render_text(report: Report) -> str:
    """The plain-text form of a report, as written by the text format."""
    lines = [
        f"kind: {report.kind}",
        f"name: {report.name}",
        f"verdict: {report.verdict}",
    ]
    if report.counter_sample:
        lines.append(f"counter sample: {report.counter_sample}")
    if report.resource_limited:
        lines.append("resource limited: yes")
    lines.append("")
    lines.append("inputs:")
    lines.extend(f"  {k} = {v}" for k, v in report.inputs)
    for note in report.notes:
        lines.append(f"note: {note}")
    for table in report.tables:
        lines.append("")
        lines.append(f"table {table.name} ({', '.join(table.columns)}):")
        for row in table.rows:
            lines.append("  " + "  ".join(_cell_text(c) or "-" for c in row))
    return "\n".join(lines) + "\n"


def _write_text(report: Report, path: Path) -> Path:
    path.write_text(render_text(report))
    return path
