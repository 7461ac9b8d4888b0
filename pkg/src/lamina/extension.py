"""Exact arithmetic and metric search in a free-by-cyclic extension.

An automorphism phi of the free group F determines the extension
G = F x| Z, generated by the basis of F together with a stable letter t
subject to the conjugation rule t h t^-1 = phi(h).  Every element of G
has a unique normal form t^k * u with u a reduced word in F, so
multiplication, inversion and breadth-first exploration of the word
metric can all be done exactly.  The metric tools here (balls, length
queries, distortion profiles, geodesic realizations) are the desk-scale
counterparts of the qualitative statements about distorted fibers and
quasiconvex factors.

Conventions fixed by this module:

* t h t^-1 = phi(h), equivalently h t = t phi^-1(h).
* The stable letter is written ``t`` in text input and is encoded
  internally as the signed letter rank+1.
* Word lengths in G are measured over the basis of F, t, and their
  inverses (2 * rank + 2 generators).
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from typing import Iterable, Iterator, NamedTuple, Sequence, Union

from . import stallings
from .errors import MalformedInputError, ResourceCapError
from .words import Automorphism, Word, free_reduce, parse_word

DEFAULT_RADIUS = 8
DEFAULT_MAX_STATES = 10_000_000
DEFAULT_INTRINSIC_CAP = 1_000_000
MAX_STATES_ENV = "LAMINA_MAX_STATES"

# The stable letter of a rank-r extension is the signed letter r+1; in
# text it is always written "t", which caps the parseable rank at 19.
_T_NAME_INDEX = 20


def resolved_max_states(value: int | None = None) -> int:
    """The state cap for ball searches: argument, else environment, else default."""
    if value is not None:
        return value
    env = os.environ.get(MAX_STATES_ENV)
    if env is not None:
        try:
            return int(env)
        except ValueError:
            raise MalformedInputError(
                f"{MAX_STATES_ENV} must be an integer, got {env!r}"
            )
    return DEFAULT_MAX_STATES


@dataclass(frozen=True)
class Unknown:
    """A quantity the search could not pin down, known to be >= lower_bound."""

    lower_bound: int

    def __str__(self) -> str:
        return f">={self.lower_bound}"


@dataclass(frozen=True)
class NormalForm:
    """Element of the extension written as t^t_exp * tail, tail reduced in F."""

    t_exp: int
    tail: Word

    @classmethod
    def identity(cls) -> "NormalForm":
        return cls(0, Word())

    @property
    def is_identity(self) -> bool:
        return self.t_exp == 0 and not self.tail

    def __str__(self) -> str:
        parts = []
        if self.t_exp == 1:
            parts.append("t")
        elif self.t_exp:
            parts.append(f"t^{self.t_exp}")
        if self.tail:
            parts.append(str(self.tail))
        return " ".join(parts) if parts else "1"

    def __repr__(self) -> str:
        return f"NormalForm({self})"


GroupWord = Union[NormalForm, Word, Iterable[int]]


def _letter_tables(phi: Automorphism):
    fwd = {}
    inv = {}
    for g in range(1, phi.rank + 1):
        for s in (g, -g):
            fwd[s] = phi.letter_image(s)
            inv[s] = phi.letter_image(s, inverse=True)
    return fwd, inv


def _apply_table(table, letters) -> tuple[int, ...]:
    out: list[int] = []
    for l in letters:
        for x in table[l]:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
    return tuple(out)


def parse_gword(text: str, rank: int) -> tuple[int, ...]:
    """Parse a word over the F-basis and the stable letter ``t``.

    Same token syntax as plain words; ``t`` (and ``T`` or ``t^-1``) names
    the stable letter.  Returns signed letters with t encoded as rank+1.
    """
    if not 1 <= rank < _T_NAME_INDEX:
        raise MalformedInputError(
            f"rank {rank} leaves no free name for the stable letter t"
        )
    out: list[int] = []
    for l in parse_word(text).letters:
        idx = abs(l)
        if idx == _T_NAME_INDEX:
            out.append(rank + 1 if l > 0 else -(rank + 1))
        elif idx <= rank:
            out.append(l)
        else:
            raise MalformedInputError(
                f"letter {Word([l])} is outside the rank-{rank} basis and is not t"
            )
    return tuple(out)


def normalize(raw: GroupWord, phi: Automorphism) -> NormalForm:
    """Normal form of a word over the F-basis and t^{+-1} (letter rank+1).

    Scans left to right, folding each letter into t^k * u: F-letters
    append to u, while t-moves shift k and twist u by phi^{-+1} (from
    u t = t phi^-1(u)).
    """
    phi.ensure_certified()
    if isinstance(raw, NormalForm):
        return raw
    letters = raw.letters if isinstance(raw, Word) else tuple(raw)
    stable = phi.rank + 1
    fwd, inv = _letter_tables(phi)
    k = 0
    tail: list[int] = []
    for x in letters:
        if x == stable:
            k += 1
            tail = list(_apply_table(inv, tail))
        elif x == -stable:
            k -= 1
            tail = list(_apply_table(fwd, tail))
        elif 1 <= abs(x) <= phi.rank:
            if tail and tail[-1] == -x:
                tail.pop()
            else:
                tail.append(x)
        else:
            raise MalformedInputError(
                f"letter {x} is outside the rank-{phi.rank} basis extended by t"
            )
    return NormalForm(k, Word._raw(tuple(tail)))


def multiply(x: NormalForm, y: NormalForm, phi: Automorphism) -> NormalForm:
    """Product in the extension: (t^k u)(t^m v) = t^{k+m} phi^-m(u) v."""
    tail = phi.iterate(x.tail, -y.t_exp) * y.tail
    return NormalForm(x.t_exp + y.t_exp, tail)


def invert_el(x: NormalForm, phi: Automorphism) -> NormalForm:
    """Inverse in the extension: (t^k u)^-1 = t^-k phi^k(u^-1)."""
    return NormalForm(-x.t_exp, phi.iterate(~x.tail, x.t_exp))


def _encode(t_exp: int, letters) -> bytes:
    return bytes((t_exp + 128,)) + bytes(l + 128 for l in letters)


def _decode(key: bytes) -> tuple[int, tuple[int, ...]]:
    return key[0] - 128, tuple(b - 128 for b in key[1:])


def _as_state(el: GroupWord) -> tuple[int, tuple[int, ...]]:
    if isinstance(el, NormalForm):
        return el.t_exp, el.tail.letters
    if isinstance(el, Word):
        return 0, el.letters
    return 0, free_reduce(el).letters


def _successor_fn(phi: Automorphism):
    """Right multiplication by each of the 2*rank+2 generators, on states.

    A state is (t_exp, tail letters); multiplying by t^{+-1} shifts the
    exponent and twists the tail by phi^{-+1}, an F-letter just extends
    the reduced tail.
    """
    fwd, inv = _letter_tables(phi)
    letters = [g for g in range(1, phi.rank + 1)] + \
              [-g for g in range(1, phi.rank + 1)]

    def succs(k: int, tail: tuple[int, ...]):
        out = [(k + 1, _apply_table(inv, tail)),
               (k - 1, _apply_table(fwd, tail))]
        for g in letters:
            if tail and tail[-1] == -g:
                out.append((k, tail[:-1]))
            else:
                out.append((k, tail + (g,)))
        return out

    return succs


class Ball:
    """Every element of G within a fixed word-metric radius of the identity.

    Built by breadth-first search over the 2*rank+2 generators with
    normal-form deduplication, so the recorded distances are exact.
    """

    __slots__ = ("phi", "radius", "counts", "_dist")

    def __init__(self, phi: Automorphism, radius: int,
                 counts: tuple[int, ...], dist: dict):
        self.phi = phi
        self.radius = radius
        #: counts[r] = number of elements at distance exactly r.
        self.counts = counts
        self._dist = dist

    def __len__(self) -> int:
        return len(self._dist)

    def __contains__(self, el: GroupWord) -> bool:
        return self.distance(el) is not None

    def distance(self, el: GroupWord) -> int | None:
        """Exact word length of el, or None when it lies outside the ball."""
        k, letters = _as_state(el)
        return self._dist.get(_encode(k, letters))

    def h_slice(self) -> Iterator[tuple[Word, int]]:
        """Yield (u, |t^0 u|_G) for every fiber element in the ball."""
        for key, d in self._dist.items():
            if key[0] == 128:
                yield Word._raw(tuple(b - 128 for b in key[1:])), d

    def __repr__(self) -> str:
        return (f"Ball(rank={self.phi.rank}, radius={self.radius}, "
                f"size={len(self._dist)})")


def ball(phi: Automorphism, radius: int = DEFAULT_RADIUS,
         max_states: int | None = None) -> Ball:
    """Breadth-first ball of the given radius around the identity of G.

    Raises ResourceCapError carrying the largest complete ball as
    ``partial`` when the state cap (``max_states``, else the
    LAMINA_MAX_STATES environment variable, else 10^7) is hit.
    """
    phi.ensure_certified()
    if radius < 0 or radius > 120:
        raise MalformedInputError(f"radius {radius} out of range 0..120")
    cap = resolved_max_states(max_states)
    succs = _successor_fn(phi)
    dist: dict[bytes, int] = {_encode(0, ()): 0}
    counts = [1]
    frontier: list[tuple[int, tuple[int, ...]]] = [(0, ())]
    for r in range(1, radius + 1):
        nxt: list[tuple[int, tuple[int, ...]]] = []
        added: list[bytes] = []
        for k, tail in frontier:
            for k2, t2 in succs(k, tail):
                key = _encode(k2, t2)
                if key not in dist:
                    if len(dist) >= cap:
                        for kk in added:
                            del dist[kk]
                        partial = Ball(phi, r - 1, tuple(counts), dist)
                        raise ResourceCapError(
                            f"ball search hit the {cap}-state cap at radius {r}",
                            attained_radius=r - 1, partial=partial,
                        )
                    dist[key] = r
                    added.append(key)
                    nxt.append((k2, t2))
        counts.append(len(nxt))
        frontier = nxt
    return Ball(phi, radius, tuple(counts), dist)


class _Meeting(NamedTuple):
    length: int | None
    forward: dict
    backward: dict
    meet: bytes | None


def _bidirectional(phi: Automorphism, target: NormalForm, r_max: int,
                   cap: int) -> _Meeting:
    """Grow balls around the identity and the target until they overlap.

    Expands level by level; once the best meeting sum is at most the sum
    of the two completed radii it equals the true distance (a geodesic
    prefix of that length must already have been discovered).  Returns
    length None when no meeting of sum <= r_max exists.
    """
    succs = _successor_fn(phi)
    start = (0, ())
    goal = (target.t_exp, target.tail.letters)
    fdist: dict[bytes, int] = {_encode(*start): 0}
    bdist: dict[bytes, int] = {_encode(*goal): 0}
    ffront, bfront = [start], [goal]
    rf = rb = 0
    best: int | None = None
    meet: bytes | None = None
    while True:
        if best is not None and best <= rf + rb:
            return _Meeting(best, fdist, bdist, meet)
        if rf + rb >= r_max:
            return _Meeting(None, fdist, bdist, None)
        grow_forward = len(ffront) <= len(bfront)
        own, other = (fdist, bdist) if grow_forward else (bdist, fdist)
        front = ffront if grow_forward else bfront
        radius = (rf if grow_forward else rb) + 1
        nxt = []
        for k, tail in front:
            for k2, t2 in succs(k, tail):
                key = _encode(k2, t2)
                if key not in own:
                    if len(fdist) + len(bdist) >= cap:
                        raise ResourceCapError(
                            f"length search hit the {cap}-state cap",
                            attained_radius=rf + rb,
                        )
                    own[key] = radius
                    nxt.append((k2, t2))
                    across = other.get(key)
                    if across is not None:
                        cand = radius + across
                        if best is None or cand < best:
                            best, meet = cand, key
        if grow_forward:
            ffront, rf = nxt, radius
        else:
            bfront, rb = nxt, radius


def g_length(w: GroupWord, phi: Automorphism,
             r_max: int = 2 * DEFAULT_RADIUS,
             max_states: int | None = None) -> int | Unknown:
    """Exact word length of w in G, or Unknown(r_max + 1) when it exceeds r_max.

    Bidirectional search, so the reachable length is about twice what a
    single ball of the same state budget would certify.
    """
    phi.ensure_certified()
    target = normalize(w, phi)
    if target.is_identity:
        return 0
    found = _bidirectional(phi, target, r_max, resolved_max_states(max_states))
    if found.length is None:
        return Unknown(r_max + 1)
    return found.length


class ProfileRow(NamedTuple):
    radius: int
    count: int
    disto: int | Unknown


@dataclass(frozen=True)
class DistortionProfile:
    """Growth of intrinsic diameter of a subgroup slice across G-balls.

    Row at radius R: how many subject elements lie in the G-ball of
    radius R, and the largest intrinsic length among them.  For the full
    fiber F the intrinsic length of u is |u|; for a finitely generated
    subject it is the shortest expression over the subject's own
    generators.
    """

    subject_label: str
    rows: tuple[ProfileRow, ...]

    @property
    def samples(self) -> tuple[tuple[int, int | Unknown], ...]:
        return tuple((row.radius, row.disto) for row in self.rows)

    def disto(self, radius: int) -> int | Unknown:
        for row in self.rows:
            if row.radius == radius:
                return row.disto
        raise MalformedInputError(f"no profile row at radius {radius}")


Subject = Union[None, stallings.CoreGraph, Sequence[Word]]


def _subject_generators(subject: Subject, rank: int):
    """Resolve a profile subject to (core graph, generating words)."""
    if isinstance(subject, stallings.CoreGraph):
        if subject.rank != rank:
            raise MalformedInputError(
                f"subject graph is over rank {subject.rank}, expected {rank}"
            )
        return subject, stallings.generating_set(subject)
    gens = [w if isinstance(w, Word) else free_reduce(w) for w in subject]
    return stallings.fold(gens, rank), gens


def _intrinsic_lengths(targets: set[tuple[int, ...]], gens: Sequence[Word],
                       cap: int) -> dict[tuple[int, ...], int | Unknown]:
    """Shortest generator-word length for each target element.

    When every generator is a distinct single letter the subject is a
    sub-basis and the intrinsic length is just the letter count.
    Otherwise: breadth-first search over the subject's Cayley graph with
    reduced words as states, capped; targets still missing when the cap
    bites are flagged as Unknown with the depth completed so far.
    """
    out: dict[tuple[int, ...], int | Unknown] = {}
    if all(len(g) == 1 for g in gens) and \
            len({abs(g.letters[0]) for g in gens}) == len(gens):
        return {t: len(t) for t in targets}
    steps = []
    for g in gens:
        steps.append(g.letters)
        steps.append((~g).letters)
    seen = {(): True}
    remaining = set(targets)
    if () in remaining:
        out[()] = 0
        remaining.discard(())
    frontier: list[tuple[int, ...]] = [()]
    depth = 0
    while remaining and frontier:
        depth += 1
        nxt = []
        for state in frontier:
            for step in steps:
                word = list(state)
                for x in step:
                    if word and word[-1] == -x:
                        word.pop()
                    else:
                        word.append(x)
                key = tuple(word)
                if key not in seen:
                    if len(seen) >= cap:
                        for t in remaining:
                            out[t] = Unknown(depth)
                        return out
                    seen[key] = True
                    nxt.append(key)
                    if key in remaining:
                        out[key] = depth
                        remaining.discard(key)
        frontier = nxt
    for t in remaining:
        # Unreachable within the explored component: not a subject member
        # (callers filter by membership first, so this is defensive).
        out[t] = Unknown(depth + 1)
    return out


def distortion_profile(subject: Subject, phi: Automorphism,
                       r_max: int = DEFAULT_RADIUS, *,
                       within: Ball | None = None,
                       max_states: int | None = None,
                       intrinsic_cap: int = DEFAULT_INTRINSIC_CAP,
                       ) -> DistortionProfile:
    """Distortion samples disto(R) for R up to r_max.

    disto(R) is the largest intrinsic length among subject elements
    inside the G-ball of radius R.  ``subject`` is None for the full
    fiber F, or a core graph / generating words for a finitely generated
    subgroup of F.  Pass a prebuilt ball as ``within`` to share one
    search across several profiles.
    """
    phi.ensure_certified()
    if within is not None and within.radius >= r_max:
        bl = within
    else:
        bl = ball(phi, r_max, max_states)
    if subject is None:
        label = "H"
        members = [(d, w.letters) for w, d in bl.h_slice()]
        intrinsic = {letters: len(letters) for _, letters in members}
    else:
        core, gens = _subject_generators(subject, phi.rank)
        label = "H1<" + ", ".join(str(g) for g in gens) + ">"
        members = [(d, w.letters) for w, d in bl.h_slice()
                   if stallings.membership(core, w)]
        intrinsic = _intrinsic_lengths({l for _, l in members}, gens,
                                       intrinsic_cap)
    members.sort(key=lambda pair: pair[0])
    rows = []
    best = 0
    pending_bound = 0
    flagged = False
    i = 0
    for radius in range(r_max + 1):
        while i < len(members) and members[i][0] <= radius:
            value = intrinsic[members[i][1]]
            if isinstance(value, Unknown):
                flagged = True
                pending_bound = max(pending_bound, value.lower_bound)
            else:
                best = max(best, value)
            i += 1
        count = i
        disto: int | Unknown
        if flagged:
            disto = Unknown(max(best, pending_bound))
        else:
            disto = best
        rows.append(ProfileRow(radius, count, disto))
    return DistortionProfile(label, tuple(rows))


@dataclass(frozen=True)
class WitnessRecord:
    """One point of the conjugation-by-t distortion witness.

    t^n a t^-n equals the n-th iterate of a in the fiber, so an element
    of fiber length h_length has G-length at most g_bound = 2n + 1.
    """

    n: int
    h_length: int
    g_bound: int
    g_exact: int | Unknown | None


def witness_distortion(phi: Automorphism, n: int,
                       r_max: int | None = None,
                       max_states: int | None = None) -> WitnessRecord:
    """Distortion witness at exponent n; g_exact only when r_max is given."""
    if n < 0:
        raise MalformedInputError("witness exponent must be nonnegative")
    image = phi.iterate(Word._raw((1,)), n)
    exact = None
    if r_max is not None:
        exact = g_length(image, phi, r_max, max_states)
    return WitnessRecord(n, len(image), 2 * n + 1, exact)


@dataclass(frozen=True)
class Realization:
    """A G-geodesic joining the endpoints of a midpoint-translated segment.

    min_depth is the smallest distance from the identity attained along
    the path; small values mean the geodesic dives deep below the
    segment it replaces.
    """

    path: tuple[NormalForm, ...]
    length: int
    min_depth: int | Unknown


def _walk_back(dist: dict, key: bytes, succs) -> list[bytes]:
    """Trace a state back to distance 0 along any breadth-first shortest path."""
    trail = [key]
    d = dist[key]
    while d > 0:
        k, tail = _decode(trail[-1])
        for k2, t2 in succs(k, tail):
            cand = _encode(k2, t2)
            if dist.get(cand) == d - 1:
                trail.append(cand)
                d -= 1
                break
        else:
            raise AssertionError("breadth-first table lost a predecessor")
    return trail


def geodesic_realization(lam: Word, phi: Automorphism,
                         r_max: int = DEFAULT_RADIUS, *,
                         within: Ball | None = None,
                         max_states: int | None = None,
                         ) -> Realization | Unknown:
    """Replace a fiber segment by a G-geodesic and measure its lowest point.

    The segment lam is translated so its midpoint sits at the identity,
    then a geodesic between its endpoints is found by bidirectional
    search (up to length 2 * r_max; beyond that returns Unknown).  The
    returned min_depth is exact whenever some path vertex lies in the
    reference ball (``within`` if given, else a fresh radius-r_max
    ball); otherwise it is Unknown(ball radius + 1).
    """
    phi.ensure_certified()
    cap = resolved_max_states(max_states)
    target = NormalForm(0, lam)
    half = Word._raw(lam.letters[:len(lam) // 2])
    shift = NormalForm(0, ~half)
    if target.is_identity:
        return Realization((shift,), 0, 0)
    found = _bidirectional(phi, target, 2 * r_max, cap)
    if found.length is None:
        return Unknown(2 * r_max + 1)
    succs = _successor_fn(phi)
    assert found.meet is not None
    to_identity = _walk_back(found.forward, found.meet, succs)
    to_target = _walk_back(found.backward, found.meet, succs)
    keys = list(reversed(to_identity)) + to_target[1:]
    bl = within if within is not None else ball(phi, r_max, max_states)
    path = []
    depths = []
    for key in keys:
        k, tail = _decode(key)
        vertex = multiply(shift, NormalForm(k, Word._raw(tail)), phi)
        path.append(vertex)
        depths.append(bl.distance(vertex))
    known = [d for d in depths if d is not None]
    min_depth: int | Unknown
    min_depth = min(known) if known else Unknown(bl.radius + 1)
    return Realization(tuple(path), found.length, min_depth)
