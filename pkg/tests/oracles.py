"""Brute-force oracles the tests trust instead of the library's fast paths.

Everything here is written for obviousness, not speed: repeated-scan
reduction, plain substitution without memoization, exhaustive product
enumeration, integer matrix powers.  Expected values frozen into the test
suite were computed with these.
"""

import numpy as np


def reduce_scan(letters):
    """Reduce by rescanning for an adjacent cancelling pair until none left."""
    out = list(letters)
    changed = True
    while changed:
        changed = False
        for i in range(len(out) - 1):
            if out[i] == -out[i + 1]:
                del out[i:i + 2]
                changed = True
                break
    return tuple(out)


def substitute_naive(table, letters):
    """Concatenate letter images, then reduce with the slow scanner."""
    expanded = []
    for letter in letters:
        expanded.extend(table[letter])
    return reduce_scan(expanded)


def letter_table(images):
    """Build a letter table from generator image tuples (1-indexed list)."""
    table = {}
    for k, img in enumerate(images, start=1):
        table[k] = tuple(img)
        table[-k] = tuple(-x for x in reversed(img))
    return table


def iterate_naive(fwd_images, inv_images, letters, n):
    """Apply the n-th power by repeated full substitution."""
    table = letter_table(fwd_images if n >= 0 else inv_images)
    current = tuple(letters)
    for _ in range(abs(n)):
        current = substitute_naive(table, current)
    return current


def random_reduced(rng, rank, length):
    """A uniformly chosen reduced word of exactly the given length."""
    letters = []
    for _ in range(length):
        choices = [l for s in (1, -1) for l in range(s, s * (rank + 1), s)
                   if not letters or l != -letters[-1]]
        letters.append(rng.choice(choices))
    return tuple(letters)


def all_reduced_words(rank, max_len):
    """Yield every reduced word of length at most max_len as a tuple."""
    alphabet = [l for k in range(1, rank + 1) for l in (k, -k)]
    frontier = [()]
    yield ()
    for _ in range(max_len):
        nxt = []
        for w in frontier:
            for l in alphabet:
                if w and w[-1] == -l:
                    continue
                nxt.append(w + (l,))
        yield from nxt
        frontier = nxt


def subgroup_products(gen_tuples, depth):
    """All elements expressible as products of at most ``depth`` generators.

    Breadth-first over factor count, deduplicating reduced words level by
    level.  Returns a set of letter tuples (the identity included).
    """
    gens = []
    for g in gen_tuples:
        t = reduce_scan(g)
        gens.append(t)
        gens.append(tuple(-x for x in reversed(t)))
    seen = {()}
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for w in frontier:
            for g in gens:
                prod = reduce_scan(w + g)
                if prod not in seen:
                    seen.add(prod)
                    nxt.append(prod)
        frontier = nxt
    return seen


def primitivity_scan(matrix):
    """Scan integer powers up to the Wielandt bound for a positive one.

    Returns (primitive, witness_power_or_None) using exact integer
    arithmetic.
    """
    m = np.array(matrix, dtype=object)
    n = m.shape[0]
    bound = (n - 1) ** 2 + 1
    power = m.copy()
    for k in range(1, bound + 1):
        if k > 1:
            power = power @ m
        if all(x > 0 for x in power.flat):
            return True, k
    return False, None


def dominant_eigenvalue(matrix):
    """Largest eigenvalue modulus, from the dense eigensolver."""
    return max(abs(v) for v in np.linalg.eigvals(np.array(matrix, dtype=float)))


def substitution_lengths(image_lengths_matrix, start_col, n_max):
    """Lengths of iterated images read off exact matrix powers.

    ``image_lengths_matrix[i][j]`` counts crossings of edge i in the image
    of edge j.  Returns [L_0, ..., L_n_max] for the start column.
    """
    m = np.array(image_lengths_matrix, dtype=object)
    dim = m.shape[0]
    out = []
    power = np.eye(dim, dtype=object)
    for _ in range(n_max + 1):
        out.append(int(sum(power[:, start_col])))
        power = m @ power
    return out


def longest_readable_factor_scan(step, n_vertices, letters):
    """Quadratic scan for the longest factor readable from some vertex.

    ``step(v, letter)`` returns the next vertex or None.  Checks every
    window, longest first.
    """
    n = len(letters)
    for length in range(n, 0, -1):
        for i in range(n - length + 1):
            window = letters[i:i + length]
            for v in range(n_vertices):
                cur = v
                for x in window:
                    cur = step(cur, x)
                    if cur is None:
                        break
                else:
                    return length
    return 0


def fibonacci_lengths(n_max):
    out = [1, 2]
    while len(out) <= n_max:
        out.append(out[-1] + out[-2])
    return out[:n_max + 1]


def tribonacci_lengths(n_max):
    out = [1, 2, 4]
    while len(out) <= n_max:
        out.append(out[-1] + out[-2] + out[-3])
    return out[:n_max + 1]


def enumerate_conjugators(rank, max_len):
    """Reduced words of length <= max_len in deterministic order."""
    return list(all_reduced_words(rank, max_len))


def extension_ball_by_products(phi, radius):
    """Word lengths in the extension by plain product enumeration.

    Grows the ball one multiplication at a time using the normal-form
    product formula, never the search code under test.  Returns a dict
    (t_exp, tail letters) -> exact distance.
    """
    from lamina.extension import NormalForm, multiply
    from lamina.words import Word

    gens = []
    for g in range(1, phi.rank + 1):
        gens.append(NormalForm(0, Word([g])))
        gens.append(NormalForm(0, Word([-g])))
    gens.append(NormalForm(1, Word()))
    gens.append(NormalForm(-1, Word()))
    best = {(0, ()): 0}
    frontier = [NormalForm.identity()]
    for r in range(1, radius + 1):
        nxt = []
        for x in frontier:
            for g in gens:
                y = multiply(x, g, phi)
                key = (y.t_exp, y.tail.letters)
                if key not in best:
                    best[key] = r
                    nxt.append(y)
        frontier = nxt
    return best
