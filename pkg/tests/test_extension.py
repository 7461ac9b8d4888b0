import random

import pytest

import oracles
from lamina import extension as ex
from lamina import stallings as st
from lamina.errors import MalformedInputError, ResourceCapError
from lamina.words import Automorphism, Word, parse_word


def nf(text, phi):
    return ex.normalize(ex.parse_gword(text, phi.rank), phi)


def random_gword(rng, rank, length):
    alphabet = [s * g for g in range(1, rank + 2) for s in (1, -1)]
    return [rng.choice(alphabet) for _ in range(length)]


class TestParsingAndNormalForm:
    def test_parse_gword_maps_t_to_stable_letter(self):
        assert ex.parse_gword("t a T", 2) == (3, 1, -3)
        assert ex.parse_gword("t^-2 b", 3) == (-4, -4, 2)
        assert ex.parse_gword("1", 2) == ()

    def test_parse_gword_rejects_bad_input(self):
        with pytest.raises(MalformedInputError):
            ex.parse_gword("a", 20)  # t would collide with a generator
        with pytest.raises(MalformedInputError):
            ex.parse_gword("c", 2)
        with pytest.raises(MalformedInputError):
            ex.parse_gword("x", 3)

    def test_normalize_examples(self, fib):
        # h t = t phi^-1(h), with phi^-1(a) = b.
        assert nf("a t", fib) == ex.NormalForm(1, parse_word("b"))
        assert nf("t a t^-1", fib) == ex.NormalForm(0, parse_word("a b"))
        assert nf("t t^-1 a", fib) == ex.NormalForm(0, parse_word("a"))

    def test_normalize_of_fiber_word_is_itself(self, fib):
        w = parse_word("a b^-1 a")
        got = ex.normalize(w, fib)
        assert got == ex.NormalForm(0, w)

    def test_normalize_rejects_foreign_letters(self, fib):
        with pytest.raises(MalformedInputError):
            ex.normalize([1, 5], fib)

    def test_str_forms(self, fib):
        assert str(ex.NormalForm.identity()) == "1"
        assert str(nf("t", fib)) == "t"
        assert str(nf("t^-2 a b", fib)) == "t^-2 a b"

    def test_conjugation_by_t_powers_is_iteration(self, fib, trib):
        for phi in (fib, trib):
            for n in range(9):
                got = nf(f"t^{n} a t^-{n}", phi)
                assert got == ex.NormalForm(0, phi.iterate(Word((1,)), n))

    def test_multiply_example(self, fib):
        x = nf("t a", fib)
        y = nf("t^-1", fib)
        assert ex.multiply(x, y, fib) == ex.NormalForm(0, parse_word("a b"))

    def test_inverse_law(self, fib):
        rng = random.Random(41)
        for _ in range(300):
            x = ex.normalize(random_gword(rng, 2, rng.randint(0, 6)), fib)
            assert ex.multiply(x, ex.invert_el(x, fib), fib).is_identity
            assert ex.multiply(ex.invert_el(x, fib), x, fib).is_identity

    def test_associativity(self, trib):
        rng = random.Random(43)
        for _ in range(100):
            x, y, z = (ex.normalize(random_gword(rng, 3, rng.randint(0, 5)),
                                    trib) for _ in range(3))
            left = ex.multiply(ex.multiply(x, y, trib), z, trib)
            right = ex.multiply(x, ex.multiply(y, z, trib), trib)
            assert left == right

    def test_normalize_is_a_homomorphism(self, fib):
        rng = random.Random(47)
        for _ in range(200):
            u = random_gword(rng, 2, rng.randint(0, 5))
            v = random_gword(rng, 2, rng.randint(0, 5))
            whole = ex.normalize(u + v, fib)
            split = ex.multiply(ex.normalize(u, fib), ex.normalize(v, fib),
                                fib)
            assert whole == split


class TestBall:
    def test_radius_zero(self, fib):
        b = ex.ball(fib, 0)
        assert len(b) == 1
        assert b.counts == (1,)
        assert b.distance(ex.NormalForm.identity()) == 0

    def test_fibonacci_counts(self, fib):
        # Sphere sizes by breadth-first search.  At R=2 there are 26
        # elements, not 30 = 36 - 6 cancelling pairs, because a t = t b,
        # a^-1 t = t b^-1, b t^-1 = t^-1 a and b^-1 t^-1 = t^-1 a^-1
        # each merge two products.
        b = ex.ball(fib, 6)
        assert b.counts == (1, 6, 26, 96, 334, 1140, 3876)

    def test_tribonacci_counts(self, trib):
        assert ex.ball(trib, 4).counts == (1, 8, 52, 304, 1718)

    def test_counts_strictly_increase(self, fib):
        b = ex.ball(fib, 5)
        assert all(b.counts[i] > b.counts[i - 1]
                   for i in range(1, len(b.counts)))

    def test_agrees_with_product_enumeration(self, fib):
        want = oracles.extension_ball_by_products(fib, 4)
        b = ex.ball(fib, 4)
        assert len(b) == len(want)
        for (k, letters), d in want.items():
            assert b.distance(ex.NormalForm(k, Word._raw(letters))) == d

    def test_smaller_ball_distances_are_stable(self, trib):
        small = ex.ball(trib, 2)
        big = ex.ball(trib, 4)
        want = oracles.extension_ball_by_products(trib, 2)
        for (k, letters), d in want.items():
            el = ex.NormalForm(k, Word._raw(letters))
            assert small.distance(el) == d == big.distance(el)

    def test_h_slice(self, fib):
        b = ex.ball(fib, 5)
        slice_ = dict(b.h_slice())
        assert slice_[Word()] == 0
        assert slice_[parse_word("a")] == 1
        assert slice_[parse_word("a b")] == 2
        # 489 = all 485 reduced words of length <= 5 plus (ab)^{+-3} and
        # (b^-1 a)^{+-3}, whose t-conjugate expressions t a^{+-3} t^-1 and
        # t^-1 b^{+-3} t use only five generators.
        assert len(slice_) == 489
        assert slice_[parse_word("a b a b a b")] == 5

    def test_distance_accepts_words_and_raw_letters(self, fib):
        b = ex.ball(fib, 3)
        assert b.distance(parse_word("a b")) == 2
        assert b.distance([1, 1, -1, 2]) == 2
        assert b.distance(parse_word("a b a b a b")) is None

    def test_state_cap(self, fib):
        with pytest.raises(ResourceCapError) as err:
            ex.ball(fib, 4, max_states=30)
        partial = err.value.partial
        assert err.value.attained_radius == partial.radius
        fresh = ex.ball(fib, partial.radius)
        assert partial.counts == fresh.counts
        assert len(partial) == len(fresh)

    def test_env_cap_override(self, fib, monkeypatch):
        monkeypatch.setenv(ex.MAX_STATES_ENV, "50")
        assert ex.resolved_max_states() == 50
        with pytest.raises(ResourceCapError):
            ex.ball(fib, 4)
        monkeypatch.setenv(ex.MAX_STATES_ENV, "plenty")
        with pytest.raises(MalformedInputError):
            ex.resolved_max_states()

    def test_radius_out_of_range(self, fib):
        with pytest.raises(MalformedInputError):
            ex.ball(fib, -1)


class TestGLength:
    def test_trivial_cases(self, fib):
        assert ex.g_length(Word(), fib) == 0
        assert ex.g_length(parse_word("a"), fib) == 1
        assert ex.g_length(nf("t a", fib), fib) == 2

    def test_iterates_shorten_through_t(self, fib):
        # |phi^n(a)|_G for n = 0..5; from n=4 on the t-conjugate route
        # beats spelling the fiber word out.
        exact = [1, 2, 3, 5, 7, 9]
        for n, want in enumerate(exact):
            w = fib.iterate(Word((1,)), n)
            got = ex.g_length(w, fib, r_max=12)
            assert got == want
            assert got <= len(w)
            assert got <= 2 * n + 1

    def test_agrees_with_ball(self, fib):
        b = ex.ball(fib, 4)
        rng = random.Random(53)
        for _ in range(100):
            x = ex.normalize(random_gword(rng, 2, rng.randint(0, 4)), fib)
            want = b.distance(x)
            assert want is not None
            assert ex.g_length(x, fib, r_max=8) == want

    def test_unknown_beyond_range(self, fib):
        w = fib.iterate(Word((1,)), 6)
        got = ex.g_length(w, fib, r_max=4)
        assert got == ex.Unknown(5)
        assert str(got) == ">=5"


class TestDistortionProfile:
    def test_full_fiber_profile(self, fib):
        prof = ex.distortion_profile(None, fib, 5)
        assert prof.subject_label == "H"
        assert [tuple(r) for r in prof.rows] == [
            (0, 1, 0), (1, 5, 1), (2, 17, 2), (3, 53, 3), (4, 161, 4),
            (5, 489, 6),
        ]
        assert prof.disto(5) == 6
        assert prof.samples[5] == (5, 6)

    def test_identity_extension_is_undistorted(self):
        # The direct product F x Z: fiber length equals group length.
        ident = Automorphism.identity(2)
        prof = ex.distortion_profile(None, ident, 5)
        assert [r.disto for r in prof.rows] == [0, 1, 2, 3, 4, 5]
        assert prof.rows[5].count == 485

    def test_cyclic_subject(self, fib):
        prof = ex.distortion_profile([parse_word("a")], fib, 5)
        assert prof.subject_label == "H1<a>"
        assert [tuple(r) for r in prof.rows] == [
            (0, 1, 0), (1, 3, 1), (2, 5, 2), (3, 7, 3), (4, 9, 4),
            (5, 11, 5),
        ]

    def test_core_graph_subject_matches_word_subject(self, fib):
        core = st.fold([parse_word("a")], 2)
        assert ex.distortion_profile(core, fib, 4).rows == \
            ex.distortion_profile([parse_word("a")], fib, 4).rows

    def test_proper_subgroup_intrinsic_lengths(self, fib):
        # K = <a^2, b>: at R=2 the members are 1, b^{+-1}, b^{+-2} and
        # a^{+-2}, and b^2 needs two generators while a^2 needs one.
        prof = ex.distortion_profile(
            [parse_word("a a"), parse_word("b")], fib, 4)
        assert prof.subject_label == "H1<a a, b>"
        assert [tuple(r) for r in prof.rows] == [
            (0, 1, 0), (1, 3, 1), (2, 7, 2), (3, 17, 3), (4, 37, 4),
        ]

    def test_profile_dominates_witness(self, trib):
        prof = ex.distortion_profile(None, trib, 5)
        for n in (1, 2):
            record = ex.witness_distortion(trib, n)
            assert prof.disto(record.g_bound) >= record.h_length

    def test_monotone(self, trib):
        prof = ex.distortion_profile(None, trib, 4)
        for prev, cur in zip(prof.rows, prof.rows[1:]):
            assert cur.count >= prev.count
            assert cur.disto >= prev.disto

    def test_intrinsic_cap_flags_samples(self, fib):
        prof = ex.distortion_profile(
            [parse_word("a a"), parse_word("b")], fib, 4, intrinsic_cap=3)
        assert prof.rows[0].disto == 0
        flagged = prof.rows[4].disto
        assert isinstance(flagged, ex.Unknown)
        assert flagged.lower_bound >= 1

    def test_subject_rank_mismatch(self, trib):
        core = st.fold([parse_word("a")], 2)
        with pytest.raises(MalformedInputError):
            ex.distortion_profile(core, trib, 3)

    def test_ball_reuse(self, fib):
        shared = ex.ball(fib, 4)
        reused = ex.distortion_profile(None, fib, 4, within=shared)
        fresh = ex.distortion_profile(None, fib, 4)
        assert reused.rows == fresh.rows


class TestWitness:
    def test_fibonacci_witness_table(self, fib):
        rows = [ex.witness_distortion(fib, n, r_max=10) for n in range(6)]
        assert [r.h_length for r in rows] == [1, 2, 3, 5, 8, 13]
        assert [r.g_bound for r in rows] == [1, 3, 5, 7, 9, 11]
        assert [r.g_exact for r in rows] == [1, 2, 3, 5, 7, 9]

    def test_h_length_matches_recurrence(self, fib, trib):
        fib_want = oracles.fibonacci_lengths(8)
        trib_want = oracles.tribonacci_lengths(8)
        for n in range(9):
            assert ex.witness_distortion(fib, n).h_length == fib_want[n]
            assert ex.witness_distortion(trib, n).h_length == trib_want[n]

    def test_without_r_max_no_exact_value(self, trib):
        record = ex.witness_distortion(trib, 6)
        assert record.h_length == 44
        assert record.g_bound == 13
        assert record.g_exact is None

    def test_exact_beyond_range_is_flagged(self, fib):
        record = ex.witness_distortion(fib, 6, r_max=10)
        assert record.g_exact == ex.Unknown(11)

    def test_negative_exponent_rejected(self, fib):
        with pytest.raises(MalformedInputError):
            ex.witness_distortion(fib, -1)


class TestRealization:
    def test_single_letter(self, fib):
        real = ex.geodesic_realization(parse_word("a"), fib, 3)
        assert real.length == 1
        assert real.min_depth == 0
        assert real.path[0] == ex.NormalForm.identity()

    def test_two_letter_segment(self, fib):
        # Midpoint translation puts the endpoints at a^-1 and b; the only
        # middle vertex at distance one from both is the identity.
        real = ex.geodesic_realization(parse_word("a b"), fib, 3)
        assert real.length == 2
        assert real.min_depth == 0
        assert real.path == (
            ex.NormalForm(0, parse_word("a^-1")),
            ex.NormalForm.identity(),
            ex.NormalForm(0, parse_word("b")),
        )

    def test_iterate_segment_dives(self, fib):
        lam = fib.iterate(Word((1,)), 4)
        real = ex.geodesic_realization(lam, fib, 6)
        assert real.length == 7
        assert real.min_depth == 3
        assert real.min_depth < len(lam) / 2
        half = Word._raw(lam.letters[:len(lam) // 2])
        assert real.path[0] == ex.NormalForm(0, ~half)
        assert real.path[-1] == ex.multiply(
            ex.NormalForm(0, ~half), ex.NormalForm(0, lam), fib)

    def test_path_steps_are_generators(self, fib):
        lam = fib.iterate(Word((1,)), 4)
        real = ex.geodesic_realization(lam, fib, 6)
        assert len(real.path) == real.length + 1
        for u, v in zip(real.path, real.path[1:]):
            step = ex.multiply(ex.invert_el(u, fib), v, fib)
            assert (step.t_exp, len(step.tail)) in ((1, 0), (-1, 0), (0, 1))

    def test_min_depth_needs_a_ball_vertex(self, fib):
        lam = fib.iterate(Word((1,)), 5)
        full = ex.geodesic_realization(lam, fib, 5)
        assert (full.length, full.min_depth) == (9, 4)
        shallow = ex.geodesic_realization(lam, fib, 5, within=ex.ball(fib, 2))
        assert shallow.length == 9
        assert shallow.min_depth == ex.Unknown(3)

    def test_empty_segment(self, fib):
        real = ex.geodesic_realization(Word(), fib, 2)
        assert real.length == 0
        assert real.min_depth == 0

    def test_endpoints_out_of_range(self, fib):
        got = ex.geodesic_realization(fib.iterate(Word((1,)), 6), fib, 2)
        assert got == ex.Unknown(5)
