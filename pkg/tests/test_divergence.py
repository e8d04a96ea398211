import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ldsources.core import DimensionError, NType
from ldsources.divergence import (
    NEG_INF,
    entropy,
    exact_type_probability,
    i_divergence,
    kerridge_inaccuracy,
    l_divergence,
    lambda_score,
    log_multiplicity,
    log_source_likelihood,
    log_type_probability,
    logsumexp,
)
from ldsources.oracle import all_types, exact_log

from conftest import Q_HAT_PUBLISHED, T0

# 200-bit evaluation of sum p log q at the published projection (oracle, frozen)
L_STAR = -1.809893082984111773


def pmfs(m):
    return st.lists(st.floats(0.01, 1.0), min_size=m, max_size=m).map(lambda w: np.array(w) / sum(w))


class TestLogSumExp:
    def test_empty_and_all_neg_inf(self):
        assert logsumexp([]) == NEG_INF
        assert logsumexp([NEG_INF, NEG_INF]) == NEG_INF

    def test_neg_inf_absorbs(self):
        assert logsumexp([NEG_INF, 0.0]) == 0.0

    def test_no_underflow(self):
        np.testing.assert_allclose(logsumexp([-1000.0, -1000.0]), -1000.0 + math.log(2), rtol=1e-15)


class TestIDivergence:
    def test_examples(self):
        assert i_divergence([0.3, 0.7], [0.3, 0.7]) == 0.0
        np.testing.assert_allclose(i_divergence([1, 0], [0.5, 0.5]), math.log(2), rtol=1e-15)
        assert i_divergence([0.5, 0.5], [1, 0]) == math.inf

    def test_mismatch(self):
        with pytest.raises(DimensionError):
            i_divergence([0.5, 0.5], [1 / 3] * 3)

    @given(pmfs(4), pmfs(4))
    def test_non_negative(self, p, q):
        assert i_divergence(p, q) >= 0.0

    def test_zero_only_at_equality(self, rng):
        for _ in range(100):
            p = rng.dirichlet(np.ones(5))
            q = p + 1e-3 * (rng.dirichlet(np.ones(5)) - p)
            assert i_divergence(p, q) > 0.0
            assert i_divergence(p, p) == 0.0


class TestLDivergence:
    def test_examples(self):
        np.testing.assert_allclose(l_divergence([0.25] * 4, [0.25] * 4), -math.log(4), rtol=1e-15)
        assert l_divergence([0, 1], [0.5, 0.5]) == NEG_INF

    def test_published_value_matches_oracle(self):
        np.testing.assert_allclose(l_divergence(Q_HAT_PUBLISHED, [0.1, 0.1, 0.1, 0.7]), L_STAR, rtol=1e-14)

    def test_zero_mass_letters_ignored(self):
        assert l_divergence([0.0, 1.0], [0.0, 1.0]) == 0.0

    def test_kerridge(self):
        np.testing.assert_allclose(kerridge_inaccuracy([0.5, 0.5], [0.5, 0.5]), math.log(2), rtol=1e-15)
        assert kerridge_inaccuracy([0.5, 0.5], [1, 0]) == math.inf

    def test_identity_on_random_pairs(self, rng):
        for _ in range(1000):
            m = rng.integers(2, 8)
            p, q = rng.dirichlet(np.ones(m)), rng.dirichlet(np.ones(m))
            assert abs(i_divergence(p, q) + entropy(p) + l_divergence(q, p)) <= 1e-12

    @pytest.mark.parametrize("n,m", [(6, 3), (5, 4), (12, 2)])
    def test_full_simplex_maximizer_is_type(self, n, m):
        types = [NType(c) for c in all_types(n, m)]
        for t in types:
            best = max(types, key=lambda q: l_divergence(q.pmf(), t.pmf()))
            assert best == t


class TestMultiplicity:
    def test_examples(self):
        assert log_multiplicity(NType((7, 0, 0))) == 0.0
        assert log_multiplicity(NType((7, 0, 0)), exact=True) == 1
        assert log_multiplicity(NType((1, 1)), exact=True) == 2
        assert log_multiplicity(T0, exact=True) == 720
        np.testing.assert_allclose(log_multiplicity(T0), math.log(720), rtol=1e-14)

    @pytest.mark.parametrize("counts", [(3, 4, 5), (100, 0, 1, 20), (1, 1, 1, 1, 1, 1)])
    def test_float_matches_exact(self, counts):
        t = NType(counts)
        np.testing.assert_allclose(
            log_multiplicity(t), exact_log(Fraction(log_multiplicity(t, exact=True))), rtol=1e-13
        )


class TestTypeProbability:
    def test_examples(self):
        assert log_type_probability(NType((5, 0)), [1.0, 0.0]) == 0.0
        np.testing.assert_allclose(log_type_probability(NType((1, 1)), [0.5, 0.5]), math.log(0.5), rtol=1e-15)

    def test_source_likelihood(self):
        np.testing.assert_allclose(log_source_likelihood(T0, T0.pmf()), -10 * entropy([0.1, 0.1, 0.1, 0.7]), rtol=1e-14)
        np.testing.assert_allclose(log_source_likelihood(T0, T0), -9.4044798865532637044, rtol=1e-14)
        assert log_source_likelihood(NType((1, 2)), [0.0, 1.0]) == NEG_INF

    @pytest.mark.parametrize("n,m", [(n, m) for n in range(1, 9) for m in range(1, 5)])
    def test_normalization(self, n, m):
        r = tuple(Fraction(i + 1, m * (m + 1) // 2) for i in range(m))
        types = [NType(c) for c in all_types(n, m)]
        assert sum(exact_type_probability(t, r) for t in types) == 1
        logs = [log_type_probability(t, [float(x) for x in r]) for t in types]
        assert abs(math.exp(logsumexp(logs)) - 1.0) <= 1e-10

    def test_float_exact_agreement(self):
        r = (Fraction(1, 6), Fraction(1, 3), Fraction(1, 2))
        for n in range(1, 13):
            for c in all_types(n, 3):
                t = NType(c)
                exact = exact_log(exact_type_probability(t, r))
                got = log_type_probability(t, [float(x) for x in r])
                assert abs(got - exact) <= 1e-10 * max(1.0, abs(exact))


class TestLambdaScore:
    def test_excluded_source(self):
        assert lambda_score([0.5, 0.5], NType((2, 2)), NEG_INF) == NEG_INF

    def test_hand_example(self):
        t = NType((2, 2))
        q = NType((1, 3)).pmf()
        L = 0.5 * math.log(0.25 * 0.75)
        np.testing.assert_allclose(l_divergence(q, t), L, rtol=1e-15)
        np.testing.assert_allclose(lambda_score(q, t, math.log(0.25)), L - math.log(4) / 4, rtol=1e-15)
        np.testing.assert_allclose(lambda_score(q, t, math.log(0.25)), -1.1835618070658084278, rtol=1e-14)
