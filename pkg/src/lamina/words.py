"""Reduced words and automorphisms of finitely generated free groups.

A letter is a nonzero integer: ``k`` stands for the k-th basis generator,
``-k`` for its inverse.  Generator 1 prints as ``a``, generator 2 as ``b``,
and so on, with ``^-1`` marking inverses, so the word (1, -2) renders as
``a b^-1``.  Words are kept freely reduced at all times.

Automorphisms are finite tables mapping each generator to a word, together
with a user-supplied table for the inverse.  The inverse is never computed
here; it is only certified, by checking that the two tables compose to the
identity on generators.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Iterator, Sequence

from .errors import (
    LengthCapExceededError,
    MalformedInputError,
    RankMismatchError,
    UncertifiedInverseError,
)

GENERATOR_NAMES = "abcdefghijklmnopqrstuvwxyz"
MAX_RANK = len(GENERATOR_NAMES)

#: Default cap on the letter count an iterate is allowed to reach.
DEFAULT_LENGTH_CAP = 10**6

_TOKEN_RE = re.compile(r"([A-Za-z])(?:\^(-?\d+))?$")


def letter_name(letter: int) -> str:
    """Render a single letter, e.g. ``-2`` becomes ``b^-1``."""
    if letter == 0 or abs(letter) > MAX_RANK:
        raise MalformedInputError(f"letter out of range: {letter}")
    name = GENERATOR_NAMES[abs(letter) - 1]
    return name if letter > 0 else name + "^-1"


def free_reduce(raw: Iterable[int], rank: int | None = None) -> "Word":
    """Freely reduce a raw letter sequence into a Word.

    Letters must be nonzero integers; when ``rank`` is given their absolute
    value must not exceed it.
    """
    out: list[int] = []
    for letter in raw:
        if not isinstance(letter, int) or isinstance(letter, bool) or letter == 0:
            raise MalformedInputError(f"not a letter: {letter!r}")
        if rank is not None and abs(letter) > rank:
            raise MalformedInputError(f"letter {letter} outside rank-{rank} basis")
        if out and out[-1] == -letter:
            out.pop()
        else:
            out.append(letter)
    return Word._raw(tuple(out))


class Word:
    """A freely reduced word in a free group basis.

    The constructor accepts any letter sequence and reduces it.  Words
    multiply with ``*``, invert with ``~``, and power with ``**``.
    """

    __slots__ = ("letters",)

    def __init__(self, letters: Iterable[int] = ()):
        self.letters = free_reduce(letters).letters

    @classmethod
    def _raw(cls, letters: tuple[int, ...]) -> "Word":
        # Internal fast path: trusts that ``letters`` is already reduced.
        w = object.__new__(cls)
        w.letters = letters
        return w

    @classmethod
    def identity(cls) -> "Word":
        return _EMPTY

    def __len__(self) -> int:
        return len(self.letters)

    def __iter__(self) -> Iterator[int]:
        return iter(self.letters)

    def __getitem__(self, i):
        return self.letters[i]

    def __bool__(self) -> bool:
        return bool(self.letters)

    def __eq__(self, other) -> bool:
        return isinstance(other, Word) and self.letters == other.letters

    def __hash__(self) -> int:
        return hash(self.letters)

    def __mul__(self, other: "Word") -> "Word":
        if not isinstance(other, Word):
            return NotImplemented
        return free_reduce(self.letters + other.letters)

    def __invert__(self) -> "Word":
        return Word._raw(tuple(-l for l in reversed(self.letters)))

    def inverse(self) -> "Word":
        return ~self

    def __pow__(self, n: int) -> "Word":
        if n == 0:
            return _EMPTY
        base = self if n > 0 else ~self
        out = base
        for _ in range(abs(n) - 1):
            out = out * base
        return out

    def conjugate_by(self, h: "Word") -> "Word":
        """Return h^-1 * self * h."""
        return ~h * self * h

    def max_index(self) -> int:
        """Largest generator index used, 0 for the empty word."""
        return max((abs(l) for l in self.letters), default=0)

    def __str__(self) -> str:
        if not self.letters:
            return "1"
        return " ".join(letter_name(l) for l in self.letters)

    def __repr__(self) -> str:
        return f"Word({str(self)!r})"


_EMPTY = Word._raw(())


def parse_word(text: str, rank: int | None = None) -> Word:
    """Parse a word from text.

    Tokens are whitespace separated.  Each token is a generator name with an
    optional integer exponent (``a``, ``b^-1``, ``a^3``), or a compact run of
    single-letter names where upper case means inverse (``abA``).  The token
    ``1`` denotes the empty word.
    """
    letters: list[int] = []
    for token in text.split():
        if token == "1":
            continue
        m = _TOKEN_RE.match(token)
        if m:
            ch, exp = m.group(1), int(m.group(2) or 1)
            letter = _char_letter(ch) if exp >= 0 else -_char_letter(ch)
            letters.extend([letter] * abs(exp))
        elif token.isalpha():
            letters.extend(_char_letter(ch) for ch in token)
        else:
            raise MalformedInputError(f"cannot parse word token {token!r}")
    return free_reduce(letters, rank)


def _char_letter(ch: str) -> int:
    idx = GENERATOR_NAMES.find(ch.lower())
    if idx < 0:
        raise MalformedInputError(f"unknown generator name {ch!r}")
    return -(idx + 1) if ch.isupper() else idx + 1


def parse_words(text: str, rank: int | None = None) -> list[Word]:
    """Parse a comma-separated list of words."""
    parts = [p for p in (s.strip() for s in text.split(",")) if p]
    return [parse_word(p, rank) for p in parts]


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Split w as conj * core * conj^-1 with the core cyclically reduced.

    Returns (core, conj).
    """
    letters = w.letters
    i, j = 0, len(letters)
    while j - i >= 2 and letters[i] == -letters[j - 1]:
        i += 1
        j -= 1
    return Word._raw(letters[i:j]), Word._raw(letters[:i])


class Automorphism:
    """A free group automorphism given by generator images and a certified
    inverse table.

    ``images[k-1]`` is the image of generator k; ``inverse_images`` plays the
    same role for the inverse.  Verification of the pair is explicit via
    :func:`verify_inverse` and is cached on first use.
    """

    def __init__(self, images: Sequence[Word], inverse_images: Sequence[Word]):
        self.rank = len(images)
        if self.rank == 0 or self.rank > MAX_RANK:
            raise MalformedInputError(f"rank {self.rank} out of range")
        if len(inverse_images) != self.rank:
            raise RankMismatchError(
                f"{self.rank} forward images but {len(inverse_images)} inverse images"
            )
        self.images = tuple(Word(w) for w in images)
        self.inverse_images = tuple(Word(w) for w in inverse_images)
        for w in self.images + self.inverse_images:
            if w.max_index() > self.rank:
                raise MalformedInputError(
                    f"image {w} uses a generator beyond rank {self.rank}"
                )
            if not w:
                raise MalformedInputError("a generator image cannot be empty")
        self._fwd = _letter_table(self.images)
        self._inv = _letter_table(self.inverse_images)
        # (letter, n) -> letters of the image of that letter under the n-th
        # power; filled lazily by iterate().
        self._power_cache: dict[tuple[int, int], tuple[int, ...]] = {}
        self._certified: bool | None = None

    @classmethod
    def identity(cls, rank: int) -> "Automorphism":
        gens = [Word([k]) for k in range(1, rank + 1)]
        return cls(gens, gens)

    def letter_image(self, letter: int, inverse: bool = False) -> tuple[int, ...]:
        table = self._inv if inverse else self._fwd
        try:
            return table[letter]
        except KeyError:
            raise MalformedInputError(f"letter {letter} outside rank-{self.rank} basis")

    def apply(self, w: Word, inverse: bool = False,
              cap: int = DEFAULT_LENGTH_CAP) -> Word:
        """Apply the automorphism (or its inverse) to a word."""
        table = self._inv if inverse else self._fwd
        return _substitute(table, w.letters, cap)

    def __call__(self, w: Word) -> Word:
        return self.apply(w)

    def iterate(self, w: Word, n: int, cap: int = DEFAULT_LENGTH_CAP) -> Word:
        """Apply the n-th power to w; n may be negative.

        Images of single generators under powers are memoized, so walking a
        sequence of iterates costs each power only once.  Raises
        LengthCapExceededError when the result would exceed ``cap`` letters.
        """
        if n == 0:
            return Word._raw(w.letters)
        out: list[int] = []
        for letter in w.letters:
            for x in self._letter_power(letter, n, cap):
                if out and out[-1] == -x:
                    out.pop()
                else:
                    out.append(x)
            if len(out) > cap:
                raise LengthCapExceededError(
                    f"iterate exceeded the {cap}-letter cap", len(out), cap
                )
        return Word._raw(tuple(out))

    def _letter_power(self, letter: int, n: int, cap: int) -> tuple[int, ...]:
        key = (letter, n)
        cached = self._power_cache.get(key)
        if cached is not None:
            return cached
        table = self._fwd if n > 0 else self._inv
        step = 1 if n > 0 else -1
        # Find the highest cached power of the same sign to extend from.
        k, current = 0, (letter,)
        for m in range(abs(n) - 1, 0, -1):
            hit = self._power_cache.get((letter, m * step))
            if hit is not None:
                k, current = m, hit
                break
        while k != abs(n):
            current = _substitute(table, current, cap).letters
            k += 1
            self._power_cache[(letter, k * step)] = current
        return current

    def compose(self, other: "Automorphism") -> "Automorphism":
        """Return self after other (apply ``other`` first)."""
        if self.rank != other.rank:
            raise RankMismatchError("cannot compose automorphisms of unequal rank")
        images = [self.apply(w) for w in other.images]
        inverse = [other.apply(w, inverse=True) for w in self.inverse_images]
        return Automorphism(images, inverse)

    def power(self, n: int) -> "Automorphism":
        """The n-th power as a table, certified inverse included."""
        if n == 0:
            return Automorphism.identity(self.rank)
        if n < 0:
            flipped = Automorphism(self.inverse_images, self.images)
            return flipped.power(-n)
        out = self
        for _ in range(n - 1):
            out = out.compose(self)
        return out

    def ensure_certified(self) -> None:
        if self._certified is None:
            self._certified = verify_inverse(self).ok
        if not self._certified:
            raise UncertifiedInverseError(
                "inverse table does not invert the automorphism; "
                "run verify_inverse for the failing generators"
            )

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, Automorphism)
            and self.images == other.images
            and self.inverse_images == other.inverse_images
        )

    def __repr__(self) -> str:
        body = ", ".join(
            f"{letter_name(k + 1)} -> {w}" for k, w in enumerate(self.images)
        )
        return f"Automorphism({body})"


def _letter_table(images: tuple[Word, ...]) -> dict[int, tuple[int, ...]]:
    table: dict[int, tuple[int, ...]] = {}
    for k, w in enumerate(images, start=1):
        table[k] = w.letters
        table[-k] = (~w).letters
    return table


def _substitute(table: dict[int, tuple[int, ...]], letters: Iterable[int],
                cap: int) -> Word:
    out: list[int] = []
    for letter in letters:
        try:
            image = table[letter]
        except KeyError:
            raise MalformedInputError(f"letter {letter} has no image in the table")
        for x in image:
            if out and out[-1] == -x:
                out.pop()
            else:
                out.append(x)
        if len(out) > cap:
            raise LengthCapExceededError(
                f"substitution exceeded the {cap}-letter cap", len(out), cap
            )
    return Word._raw(tuple(out))


@dataclass(frozen=True)
class InverseCheck:
    """Outcome of certifying an inverse table.

    ``failures`` lists (direction, generator, got) witnesses, where direction
    is "fwd o inv" or "inv o fwd".
    """

    ok: bool
    failures: tuple[tuple[str, int, Word], ...] = ()


def verify_inverse(phi: Automorphism) -> InverseCheck:
    """Certify that the inverse table really inverts the automorphism.

    Checks both composites on every generator, which suffices because both
    are homomorphisms.
    """
    failures = []
    for k in range(1, phi.rank + 1):
        gen = Word([k])
        got = phi.apply(phi.inverse_images[k - 1])
        if got != gen:
            failures.append(("fwd o inv", k, got))
        got = phi.apply(phi.images[k - 1], inverse=True)
        if got != gen:
            failures.append(("inv o fwd", k, got))
    return InverseCheck(not failures, tuple(failures))


def homotopy_rep(phi: Automorphism, h: Word, n: int,
                 cap: int = DEFAULT_LENGTH_CAP) -> Word:
    """Shortest representative of the conjugacy class of the n-th iterate of h.

    In a free group that is the cyclic reduction of the iterate.
    """
    core, _ = cyclic_reduce(phi.iterate(h, n, cap))
    return core


def stretch_check(phi: Automorphism, h: Word, n: int, lam: float,
                  cap: int = DEFAULT_LENGTH_CAP) -> bool:
    """Does the n-th power (in one direction or the other) stretch h by lam?

    True when max(|phi^n(h)|, |phi^-n(h)|) > lam * |h|.  Empty h is never
    stretched.
    """
    if not h:
        return False
    fwd = len(phi.iterate(h, n, cap))
    bwd = len(phi.iterate(h, -n, cap))
    return max(fwd, bwd) > lam * len(h)


def parse_automorphism(text: str) -> Automorphism:
    """Parse an automorphism from its textual table.

    The grammar, line by line (``#`` starts a comment):

    * ``a -> a b`` gives the image of a generator; the right side uses the
      word syntax of :func:`parse_word`.
    * a line reading ``inverse:`` switches to the inverse table, which is
      mandatory and must cover the same generators.

    Generators must form an initial segment a, b, c, ... of the basis.
    """
    fwd: dict[int, Word] = {}
    inv: dict[int, Word] = {}
    current = fwd
    for lineno, raw_line in enumerate(text.splitlines(), start=1):
        line = raw_line.split("#", 1)[0].strip()
        if not line:
            continue
        if line.rstrip(":").strip() == "inverse":
            current = inv
            continue
        if "->" not in line:
            raise MalformedInputError(f"line {lineno}: expected 'gen -> word'")
        lhs, rhs = (part.strip() for part in line.split("->", 1))
        if len(lhs) != 1 or lhs not in GENERATOR_NAMES:
            raise MalformedInputError(f"line {lineno}: bad generator name {lhs!r}")
        k = GENERATOR_NAMES.index(lhs) + 1
        if k in current:
            raise MalformedInputError(f"line {lineno}: duplicate image for {lhs!r}")
        current[k] = parse_word(rhs)
    if not fwd:
        raise MalformedInputError("empty automorphism table")
    rank = max(fwd)
    if sorted(fwd) != list(range(1, rank + 1)):
        raise MalformedInputError("generators must form an initial segment a, b, ...")
    if sorted(inv) != sorted(fwd):
        raise MalformedInputError("inverse block must cover the same generators")
    return Automorphism(
        [fwd[k] for k in range(1, rank + 1)],
        [inv[k] for k in range(1, rank + 1)],
    )


def format_automorphism(phi: Automorphism) -> str:
    """Render an automorphism in the same format parse_automorphism reads."""
    lines = [
        f"{letter_name(k + 1)} -> {w}" for k, w in enumerate(phi.images)
    ]
    lines.append("inverse:")
    lines.extend(
        f"{letter_name(k + 1)} -> {w}" for k, w in enumerate(phi.inverse_images)
    )
    return "\n".join(lines) + "\n"
