import random

import pytest

import oracles
from lamina import stallings as st
from lamina import traintrack as tt
from lamina.errors import MalformedInputError, RankMismatchError
from lamina.words import Word, parse_word, parse_words


def gens(text):
    return parse_words(text)


class TestFolding:
    def test_even_a_subgroup(self):
        core = st.fold(gens("a a, b"), rank=2)
        assert core.n_vertices == 2
        assert st.membership(core, parse_word("a a"))
        assert st.membership(core, parse_word("b"))
        assert not st.membership(core, parse_word("a"))
        assert not st.membership(core, parse_word("a b a"))
        # a b a^-1 lies in the index-two kernel but not in <a^2, b> itself.
        assert not st.membership(core, parse_word("a b a^-1"))
        assert st.membership(core, parse_word("a a b a^-1 a^-1"))

    def test_whole_group(self):
        core = st.fold(gens("a, b"), rank=2)
        assert core.n_vertices == 1
        assert core.is_complete

    def test_trivial_subgroup(self):
        core = st.fold([], rank=2)
        assert core == st.trivial(2)
        assert st.membership(core, Word())
        assert not st.membership(core, parse_word("a"))

    def test_canonical_form_ignores_presentation(self):
        # Same subgroup, three different generating sets.
        c1 = st.fold(gens("a a, b"), rank=2)
        c2 = st.fold(gens("b, a a b"), rank=2)
        c3 = st.fold(gens("a a, b a a, a a b"), rank=2)
        assert c1 == c2 == c3
        # <a b a, a a> is a genuinely different subgroup.
        assert c1 != st.fold(gens("a b a, a a"), rank=2)

    def test_generators_outside_rank_rejected(self):
        with pytest.raises(RankMismatchError):
            st.fold(gens("a c"), rank=2)

    def test_membership_contains_all_short_products(self):
        rng = random.Random(19)
        for _ in range(25):
            rank = rng.choice((2, 3))
            k = rng.randint(1, 4)
            raw = [oracles.random_reduced(rng, rank, rng.randint(1, 6))
                   for _ in range(k)]
            core = st.fold([Word(g) for g in raw], rank)
            for w in oracles.subgroup_products(raw, depth=4):
                assert st.membership(core, Word(w)), f"missed {w} in <{raw}>"

    def test_membership_respects_exponent_parity(self):
        # Every element of <a^2, b> has even total a-exponent, so words
        # with odd a-exponent are certified non-members.
        core = st.fold(gens("a a, b"), rank=2)
        rng = random.Random(23)
        for _ in range(40):
            w = oracles.random_reduced(rng, 2, rng.randint(1, 9))
            a_exp = sum(1 for l in w if l == 1) - sum(1 for l in w if l == -1)
            if a_exp % 2 != 0:
                assert not st.membership(core, Word(w))


class TestIndex:
    def test_index_two_subgroup(self):
        core = st.fold(gens("a a, b, a b a^-1"), rank=2)
        assert st.index(core) == (True, 2)

    def test_infinite_index(self):
        core = st.fold(gens("a a, b"), rank=2)
        assert st.index(core) == (False, None)

    def test_whole_group_index_one(self):
        assert st.index(st.fold(gens("a, b"), rank=2)) == (True, 1)

    def test_transversal_closure_matches_reported_index(self):
        # Reading all short words must visit exactly `index` end vertices
        # and never fall off the graph.
        core = st.fold(gens("a a, b, a b a^-1"), rank=2)
        report = st.index(core)
        ends = set()
        for w in oracles.all_reduced_words(2, report.value + 2):
            v = core.trace(0, w)
            assert v is not None
            ends.add(v)
        assert len(ends) == report.value


class TestConjugation:
    def test_conjugate_of_single_loop(self):
        core = st.fold(gens("a"), rank=2)
        conj = st.conjugate_core(core, parse_word("b"))
        # b^-1 <a> b: an a-loop reached along one b-edge.
        assert conj.n_vertices == 2
        assert st.membership(conj, parse_word("b^-1 a b"))
        assert st.membership(conj, parse_word("b^-1 a a b"))
        assert not st.membership(conj, parse_word("a"))
        assert not st.membership(conj, parse_word("b^-1 a b b^-1 b b"))  # reduces, still in
        # The previous word freely reduces to b^-1 a b; sanity-check that.
        assert parse_word("b^-1 a b b^-1 b b") == parse_word("b^-1 a b^2")

    def test_conjugation_by_identity_is_identity(self):
        core = st.fold(gens("a a, b"), rank=2)
        assert st.conjugate_core(core, Word()) == core

    def test_conjugation_composes(self):
        core = st.fold(gens("a b, b a"), rank=2)
        h1, h2 = parse_word("a"), parse_word("b a^-1")
        once = st.conjugate_core(st.conjugate_core(core, h1), h2)
        both = st.conjugate_core(core, h1 * h2)
        assert once == both

    def test_membership_transported_under_conjugation(self):
        rng = random.Random(67)
        for _ in range(20):
            raw = [oracles.random_reduced(rng, 2, rng.randint(1, 5))
                   for _ in range(rng.randint(1, 3))]
            core = st.fold([Word(g) for g in raw], 2)
            h = Word(oracles.random_reduced(rng, 2, rng.randint(0, 4)))
            conj = st.conjugate_core(core, h)
            for g in raw:
                assert st.membership(conj, Word(g).conjugate_by(h))


class TestFiberProduct:
    def test_powers_of_a(self):
        c2 = st.fold(gens("a a, b"), rank=2)
        c3 = st.fold(gens("a a a, b"), rank=2)
        meet = st.fiber_product(c2, c3)
        assert meet == st.fold(gens("a^6, b"), rank=2)

    def test_disjoint_letters_meet_trivially(self):
        ca = st.fold(gens("a"), rank=2)
        cb = st.fold(gens("b"), rank=2)
        assert st.fiber_product(ca, cb) == st.trivial(2)

    def test_intersection_membership_is_conjunction(self):
        rng = random.Random(29)
        for _ in range(12):
            rank = 2
            raw1 = [oracles.random_reduced(rng, rank, rng.randint(1, 5))
                    for _ in range(rng.randint(1, 3))]
            raw2 = [oracles.random_reduced(rng, rank, rng.randint(1, 5))
                    for _ in range(rng.randint(1, 3))]
            c1 = st.fold([Word(g) for g in raw1], rank)
            c2 = st.fold([Word(g) for g in raw2], rank)
            meet = st.fiber_product(c1, c2)
            for w in oracles.all_reduced_words(rank, 6):
                word = Word(w)
                both = st.membership(c1, word) and st.membership(c2, word)
                assert st.membership(meet, word) == both

    def test_relative_index_two(self):
        # The even-exponent kernel has index 2 in <a, b>.
        big = st.fold(gens("a, b"), rank=2)
        small = st.fold(gens("a a, b, a b a^-1"), rank=2)
        assert st.relative_index(small, big) == (True, 2)
        assert st.relative_index(big, big) == (True, 1)

    def test_relative_index_infinite_for_proper_free_factor(self):
        # <a^2, b> sits inside the kernel with infinite index over the rose.
        big = st.fold(gens("a, b"), rank=2)
        small = st.fold(gens("a a, b"), rank=2)
        assert st.relative_index(small, big) == (False, None)

    def test_relative_index_infinite_when_not_covering(self):
        ca = st.fold(gens("a"), rank=2)
        big = st.fold(gens("a, b"), rank=2)
        assert st.relative_index(ca, big) == (False, None)


class TestReading:
    def test_reads_is_basepoint_free(self):
        core = st.fold(gens("a a, b"), rank=2)
        # 'a' reads from the basepoint though it is not a member.
        assert st.reads(core, parse_word("a").letters)
        assert not st.membership(core, parse_word("a"))
        # 'a b a' reads only from the non-basepoint vertex.
        assert st.reads(core, parse_word("a b a").letters)
        assert core.trace(0, parse_word("a b a").letters) is None

    def test_reads_can_fail(self):
        core = st.fold(gens("a a, b"), rank=2)
        assert not st.reads(core, parse_word("b a b").letters)
        assert st.reads(core, parse_word("a a b").letters)

    def test_longest_readable_factor_matches_quadratic_scan(self):
        rng = random.Random(71)
        for _ in range(40):
            rank = rng.choice((2, 3))
            raw = [oracles.random_reduced(rng, rank, rng.randint(1, 6))
                   for _ in range(rng.randint(1, 3))]
            core = st.fold([Word(g) for g in raw], rank)
            probe = oracles.random_reduced(rng, rank, rng.randint(0, 40))
            want = oracles.longest_readable_factor_scan(
                core.step, core.n_vertices, probe
            )
            assert st.longest_readable_factor(core, probe) == want

    def test_complete_cover_reads_everything(self):
        core = st.fold(gens("a a, b, a b a^-1"), rank=2)
        rng = random.Random(5)
        probe = oracles.random_reduced(rng, 2, 60)
        assert st.longest_readable_factor(core, probe) == 60


class TestCarriedLength:
    def test_c_free_plateau_for_sub_rose(self, trib):
        rho = tt.from_automorphism(trib)
        core = st.fold(gens("a, b"), rank=3)
        # Segment abacaba at n=3: the longest c-free factor is aba.
        assert st.max_carried_length(core, rho, 1, 3) == 3

    def test_complete_cover_carries_full_segments(self, trib):
        rho = tt.from_automorphism(trib)
        core = st.fold(gens("a a, b, c, a b a^-1, a c a^-1"), rank=3)
        assert st.index(core).finite
        for n in range(9):
            seg = tt.leaf_segment(rho, 1, n)
            assert st.max_carried_length(core, rho, 1, n) == len(seg)

    def test_rank_mismatch_rejected(self, fib):
        rose = tt.from_automorphism(fib)
        core = st.fold(gens("a, b"), rank=3)
        with pytest.raises(RankMismatchError):
            st.max_carried_length(core, rose, 1, 3)


class TestExpressInBasis:
    def test_even_subgroup_expressions(self):
        core = st.fold(gens("a a, b"), rank=2)
        basis = st.generating_set(core)
        for text in ("a a", "b", "a a b a^-1 a^-1", "b a a b b"):
            w = parse_word(text)
            expr = st.express_in_basis(core, w)
            product = Word()
            for idx in expr:
                product = product * (basis[idx - 1] if idx > 0
                                     else ~basis[-idx - 1])
            assert product == w

    def test_expression_is_reduced(self):
        rng = random.Random(59)
        for _ in range(20):
            rank = rng.choice((2, 3))
            raw = [oracles.random_reduced(rng, rank, rng.randint(1, 5))
                   for _ in range(rng.randint(1, 3))]
            core = st.fold([Word(g) for g in raw], rank)
            basis = st.generating_set(core)
            for w in oracles.subgroup_products(raw, depth=4):
                expr = st.express_in_basis(core, Word(w))
                assert all(x != -y for x, y in zip(expr, expr[1:]))
                product = Word()
                for idx in expr:
                    product = product * (basis[idx - 1] if idx > 0
                                         else ~basis[-idx - 1])
                assert product == Word(w)

    def test_rejects_non_members(self):
        core = st.fold(gens("a a, b"), rank=2)
        with pytest.raises(MalformedInputError):
            st.express_in_basis(core, parse_word("a"))
        with pytest.raises(MalformedInputError):
            st.express_in_basis(core, parse_word("a b a"))
