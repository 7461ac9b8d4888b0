"""A small zoo of automorphisms used throughout the tests and docs.

Each entry returns a fresh Automorphism with its certified inverse table.
"""

from .words import Automorphism, parse_automorphism

_FIBONACCI = """
a -> a b
b -> a
inverse:
a -> b
b -> b^-1 a
"""

_TRIBONACCI = """
a -> a b
b -> a c
c -> a
inverse:
a -> c
b -> c^-1 a
c -> c^-1 b
"""

# Rank 4, acting as the Fibonacci map on each free factor <a, b> and <c, d>.
_SPLIT_FIBONACCI = """
a -> a b
b -> a
c -> c d
d -> c
inverse:
a -> b
b -> b^-1 a
c -> d
d -> d^-1 c
"""


def fibonacci() -> Automorphism:
    """a -> ab, b -> a on the free group of rank 2."""
    return parse_automorphism(_FIBONACCI)


def tribonacci() -> Automorphism:
    """a -> ab, b -> ac, c -> a on the free group of rank 3.

    Its lengths grow like the tribonacci numbers; the rose map is a positive
    train track with Perron-Frobenius eigenvalue about 1.8393.
    """
    return parse_automorphism(_TRIBONACCI)


def split_fibonacci() -> Automorphism:
    """Rank-4 automorphism preserving the free factors <a, b> and <c, d>."""
    return parse_automorphism(_SPLIT_FIBONACCI)
