import numpy as np
import pytest
from scipy import stats

from ldsources.divergence import entropy, l_divergence
from ldsources.partitions import PartitionSpec, empirical_type, l_m_divergence, l_m_divergence_cdf, quantize


class TestPartitionSpec:
    def test_cells(self):
        part = PartitionSpec(("1/3", "2/3"))
        assert part.m == 3
        assert [part.cell_of(y) for y in (-5, 0, 1 / 3, 0.5, 2 / 3, 9)] == [0, 0, 1, 1, 2, 2]

    def test_bad_edges(self):
        with pytest.raises(ValueError):
            PartitionSpec((1, 1))
        with pytest.raises(ValueError):
            PartitionSpec(())

    def test_labeled(self):
        part = PartitionSpec(membership=lambda y: int(y > 0) + int(y > 1), size=3)
        assert part.cell_of(0.5) == 1
        with pytest.raises(ValueError):
            PartitionSpec(membership=lambda y: 0, size=1)

    def test_refine(self):
        part = PartitionSpec((0,)).refine((-1, 1))
        assert part.m == 4


class TestQuantize:
    def test_point_mass(self):
        np.testing.assert_array_equal(quantize([0, 1, 0], PartitionSpec((0, 1))).weights, [0, 1, 0])

    def test_uniform_thirds(self):
        part = PartitionSpec(("1/3", "2/3"))
        cdf = stats.uniform(0, 1).cdf
        np.testing.assert_allclose(part.cell_masses(cdf), [1 / 3, 1 / 3, 1 / 3], atol=1e-15)

    def test_invalid_masses(self):
        with pytest.raises(ValueError):
            quantize([0.5, 0.6], PartitionSpec((0,)))
        with pytest.raises(ValueError):
            quantize([0.5, 0.5], PartitionSpec((0, 1)))

    def test_empirical_type(self, rng):
        part = PartitionSpec((-1, 0, 1))
        y = rng.standard_normal(500)
        t = empirical_type(y, part)
        assert t.n == 500 and t.m == 4
        assert t.counts[0] == np.sum(y < -1)


class TestLmDivergence:
    def test_single_partition_matches_finite(self):
        part = PartitionSpec((0, 1))
        q, p = [0.2, 0.5, 0.3], [0.1, 0.6, 0.3]
        assert l_m_divergence([q], [p], [part]) == l_divergence(q, p)

    def test_equal_distributions(self):
        parts = [PartitionSpec((0,)), PartitionSpec((-1, 1))]
        cdf = stats.norm().cdf
        val = l_m_divergence_cdf(cdf, cdf, parts)
        want = max(-entropy(part.cell_masses(cdf)) for part in parts)
        np.testing.assert_allclose(val, want, rtol=1e-14)

    def test_adding_partitions_never_decreases(self):
        q, p = stats.norm(0.3, 1.2).cdf, stats.norm().cdf
        parts = [PartitionSpec((0,))]
        vals = [l_m_divergence_cdf(q, p, parts)]
        for extra in ((-1, 1), (-2, 0.5), (-0.5,), (-3, -1, 0, 1, 3)):
            parts.append(parts[-1].refine(extra))
            vals.append(l_m_divergence_cdf(q, p, parts))
        assert all(b >= a for a, b in zip(vals, vals[1:]))

    def test_nested_refinement_lowers_single_value(self):
        # each cell of a refinement has smaller Q-mass, so the single-partition value drops
        q, p = stats.norm(0.3, 1.2).cdf, stats.norm().cdf
        coarse = PartitionSpec((0,))
        fine = coarse.refine((-1, 1))
        assert l_m_divergence_cdf(q, p, [fine]) <= l_m_divergence_cdf(q, p, [coarse])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            l_m_divergence([[0.5, 0.5]], [], [PartitionSpec((0,))])
        with pytest.raises(ValueError):
            l_m_divergence([], [], [])
