import json
import math

import numpy as np
import pytest

from bpdecomp import model, rng
from bpdecomp import simulator as sim
from bpdecomp.errors import DomainError, SimulationLimitError


def sequential_poisson(lam, u):
    # textbook inversion: walk the CDF until it exceeds u
    n, p = 0, math.exp(-lam)
    cdf = p
    while u >= cdf:
        n += 1
        p *= lam / n
        cdf += p
    return n


def seed_with_root_draw(lam, value):
    for seed in range(10_000):
        if sim.simulate_trace(lam, seed, 1).z[1] == value:
            return seed
    raise AssertionError("no seed found")


class TestRng:
    def test_uniform_range_and_moments(self):
        u = rng.uniforms(np.full(200_000, rng.stream_key(3), dtype=np.uint64),
                         np.arange(200_000, dtype=np.uint64))
        assert u.min() >= 0 and u.max() < 1
        assert abs(u.mean() - 0.5) < 4 * math.sqrt(1 / 12 / len(u))

    def test_scalar_mix_matches_array(self):
        xs = [0, 1, 2**63 + 5, 2**64 - 1]
        arr = rng._mix64_array(np.array(xs, dtype=np.uint64))
        assert [int(v) for v in arr] == [rng.mix64(x) for x in xs]

    @pytest.mark.parametrize("lam", [0.7, 2.0, 5.41, 12.0])
    def test_inversion_matches_sequential_search(self, lam):
        u = rng.uniforms(np.full(5000, 99, dtype=np.uint64), np.arange(5000, dtype=np.uint64))
        fast = rng.poisson_from_uniform(lam, u)
        slow = [sequential_poisson(lam, x) for x in u]
        # ties at CDF cut points are measure-zero; allow none here
        assert fast.tolist() == slow

    def test_poisson_sample_moments(self):
        x = rng.poisson_sample(4.5, 200_000, seed=11)
        assert abs(x.mean() - 4.5) < 4 * math.sqrt(4.5 / len(x))
        assert x.var() == pytest.approx(4.5, rel=0.03)

    def test_replicate_keys_vectorized(self):
        keys = sim.replicate_keys(17, 0, 50)
        assert [int(k) for k in keys] == [rng.stream_key(rng.replicate_seed(17, r)) for r in range(50)]


class TestTrace:
    def test_immediate_extinction(self):
        seed = seed_with_root_draw(2.0, 0)
        t = sim.simulate_trace(2.0, seed, 5)
        assert t.z == (1, 0)
        assert t.extinct_at == 1
        assert t.truncated_total(10) == 1

    def test_deterministic(self):
        a = sim.simulate_trace(2.0, 42, 8)
        b = sim.simulate_trace(model.OffspringModel(2.0), 42, 8)
        assert a == b

    def test_structure(self):
        for seed in range(200):
            t = sim.simulate_trace(1.8, seed, 6)
            assert t.z[0] == 1
            if 0 in t.z:
                k = t.z.index(0)
                assert all(v == 0 for v in t.z[k:])
                assert t.extinct_at == k
            else:
                assert len(t.z) == 7

    def test_depth_cap_validation(self):
        with pytest.raises(DomainError):
            sim.simulate_trace(2.0, 1, 0)

    def test_node_budget(self):
        with pytest.raises(SimulationLimitError):
            sim.simulate_trace(8.0, seed_with_root_draw(8.0, 8), 12, max_nodes=1000)

    def test_truncated_total_beyond_cap(self):
        seed = seed_with_root_draw(3.0, 4)
        t = sim.simulate_trace(3.0, seed, 2)
        with pytest.raises(DomainError):
            t.truncated_total(3)

    def test_matches_study_replicate(self):
        keys = sim.replicate_keys(5, 0, 40)
        Z = sim.generation_matrix(2.5, keys, 4)
        for r in range(40):
            t = sim.simulate_trace(2.5, rng.replicate_seed(5, r), 4)
            row = Z[r].tolist()
            assert row[: len(t.z)] == list(t.z)
            assert all(v == 0 for v in row[len(t.z):])


class TestTree:
    def test_agrees_with_trace(self):
        tree = sim.simulate_tree(3.0, 7, 5)
        trace = sim.simulate_trace(3.0, 7, 5)
        assert tree.level_counts() == trace.z[: len(tree.level_counts())]
        assert tree.n_nodes == trace.truncated_total(5)

    @pytest.mark.parametrize("seed", range(20))
    def test_parent_links(self, seed):
        tree = sim.simulate_tree(2.2, seed, 4)
        assert tree.parent[0] == -1 and tree.level[0] == 0
        for child in range(1, tree.n_nodes):
            assert tree.level[child] == tree.level[tree.parent[child]] + 1
        # breadth-first numbering: parents nondecreasing
        assert np.all(np.diff(tree.parent[1:]) >= 0)
        kids = tree.child_lists()
        counts = tree.level_counts()
        for k in range(len(counts) - 1):
            at_k = np.flatnonzero(tree.level == k)
            assert sum(len(kids[i]) for i in at_k) == counts[k + 1]

    def test_mean_node_count_project_one(self):
        s = sim.run_study(5.41, 100_000, 3, master_seed=2024)
        assert s.mean_truncated_total == pytest.approx(194.0, rel=0.01)


class TestExport:
    def test_single_node(self):
        seed = seed_with_root_draw(2.0, 0)
        tree = sim.simulate_tree(2.0, seed, 3)
        assert json.loads(sim.export_tree(tree, "json")) == {"id": 0, "level": 0, "children": []}

    def test_chain_dot(self):
        tree = sim.DecompositionTree(np.array([-1, 0, 1]), np.array([0, 1, 2]), 2)
        dot = sim.export_tree(tree, "dot")
        assert dot.count("->") == 2
        assert "n0 -> n1;" in dot and "n1 -> n2;" in dot

    def test_round_trip_node_count(self):
        tree = sim.simulate_tree(2.0, 42, 4)
        doc = json.loads(sim.export_tree(tree, "json"))

        def count(node):
            return 1 + sum(count(c) for c in node["children"])
        assert count(doc) == tree.n_nodes
        assert sim.export_tree(tree, "dot").count("->") == tree.n_nodes - 1

    def test_child_order_is_generation_order(self):
        tree = sim.simulate_tree(3.0, 1, 3)
        doc = json.loads(sim.export_tree(tree, "json"))
        ids = [c["id"] for c in doc["children"]]
        assert ids == sorted(ids)

    def test_unknown_format(self):
        tree = sim.simulate_tree(2.0, 1, 2)
        with pytest.raises(ValueError):
            sim.export_tree(tree, "xml")


class TestStudy:
    def test_validation(self):
        with pytest.raises(DomainError):
            sim.run_study(2.0, 99, 2)
        with pytest.raises(DomainError):
            sim.run_study(2.0, 1000, 0)

    def test_deterministic_and_chunk_independent(self):
        a = sim.run_study(2.0, 5000, 3, master_seed=9)
        b = sim.run_study(2.0, 5000, 3, master_seed=9)
        c = sim.run_study(2.0, 5000, 3, master_seed=9, chunk_size=777)
        assert a == b == c

    def test_parallel_matches_serial(self):
        a = sim.run_study(2.0, 20_000, 3, master_seed=4, chunk_size=4096)
        b = sim.run_study(2.0, 20_000, 3, master_seed=4, chunk_size=4096, workers=3)
        assert a == b

    def test_seed_changes_result(self):
        assert sim.run_study(2.0, 2000, 2, 1) != sim.run_study(2.0, 2000, 2, 2)

    def test_summary_ranges(self):
        s = sim.run_study(1.5, 2000, 2, 3)
        assert 0 <= s.extinction_frequency <= 1
        assert all(math.isfinite(x) for x in (s.extinction_se, s.totals.mean_se, s.totals.var_se))

    def test_standard_errors_shrink(self):
        small = sim.run_study(2.0, 10_000, 2, 1)
        big = sim.run_study(2.0, 1_000_000, 2, 1)
        assert small.totals.mean_se / big.totals.mean_se == pytest.approx(10, rel=0.1)
        assert small.extinction_se / big.extinction_se == pytest.approx(10, rel=0.1)

    def test_extinction_frequency_lambda_two(self):
        s = sim.run_study(2.0, 100_000, 1, master_seed=77)
        alpha = model.extinction_probability(2.0).alpha
        assert s.extinction_depth == 60
        assert abs(s.extinction_frequency - alpha) < 3 * s.extinction_se

    def test_generation_means(self):
        s = sim.run_study(2.0, 100_000, 4, master_seed=8)
        for k in range(5):
            assert s.generations[k].mean == pytest.approx(2.0 ** k, rel=0.02)

    @pytest.mark.parametrize("lam", [1.5, 2.0, 5.0])
    def test_extinct_by_generation(self, lam):
        s = sim.run_study(lam, 100_000, 1, master_seed=31)
        freq = s.extinct_by
        assert all(b >= a for a, b in zip(freq, freq[1:]))
        for n in (1, 2, 3, 5, 10):
            exact = model.iterated_pgf(lam, n, 0.0)
            se = max(s.extinct_by_se(n), 1 / s.replicates)
            assert abs(freq[n] - exact) < 3 * se

    @pytest.mark.slow
    def test_conditioned_mass_lambda_two(self):
        s = sim.run_study(2.0, 1_000_000, 2, master_seed=5)
        for n in (1, 2, 3):
            est, se = s.cond_mass_estimate(n)
            assert abs(est - model.conditioned_extinction_mass(2.0, n)) < 3 * se
        assert s.var_truncated_total == pytest.approx(22, rel=0.05)

    @pytest.mark.slow
    @pytest.mark.parametrize("lam", [2.0, 5.41])
    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_totals_against_exact_moments(self, lam, n):
        s = sim.run_study(lam, 1_000_000, n, master_seed=100 + n)
        assert s.mean_truncated_total == pytest.approx(model.expected_total_fixed(lam, n), rel=0.01)
        exact = model.exact_variance_total_fixed(lam, n)
        assert abs(s.var_truncated_total - exact) < 4 * s.totals.var_se

    @pytest.mark.slow
    @pytest.mark.parametrize("lam,n", [
        (2.0, 1), (2.0, 2),
        pytest.param(2.0, 3, marks=pytest.mark.xfail(
            strict=True, reason="closed-form variance is 126, exact is 142 (12.7% short)")),
        (5.41, 1), (5.41, 2), (5.41, 3),
    ])
    def test_totals_against_closed_form(self, lam, n):
        s = sim.run_study(lam, 1_000_000, n, master_seed=100 + n)
        assert s.mean_truncated_total == pytest.approx(model.expected_total_fixed(lam, n), rel=0.01)
        assert s.var_truncated_total == pytest.approx(model.variance_total_fixed(lam, n), rel=0.05)


def two_stage_totals(lam, replicates, seed):
    """Draw a horizon G from the triangular law, then a depth-G tree."""
    dist = model.horizon_distribution(model.max_horizon(lam)[1])
    keys = sim.replicate_keys(seed, 0, replicates)
    Z = sim.generation_matrix(lam, keys, dist.k)
    cum = np.cumsum(Z, axis=1)
    g = np.random.default_rng(seed).choice(len(dist.probs), size=replicates, p=dist.probs)
    return cum[np.arange(replicates), g]


@pytest.fixture(scope="module")
def totals():
    return two_stage_totals(2.0, 1_000_000, 12)


@pytest.mark.slow
class TestRandomHorizonOracle:
    def test_mean(self, totals):
        pred = model.totals_random_horizon(2.0)
        se = totals.std(ddof=1) / math.sqrt(len(totals))
        assert abs(totals.mean() - pred.mean_random) < 3 * se

    def test_variance_with_exact_components(self, totals):
        dist = model.horizon_distribution(4)
        mean = sum(p * model.expected_total_fixed(2.0, n) for n, p in enumerate(dist.probs))
        second = sum(p * (model.exact_variance_total_fixed(2.0, n) + model.expected_total_fixed(2.0, n) ** 2)
                     for n, p in enumerate(dist.probs))
        exact = second - mean ** 2
        c = totals - totals.mean()
        se = math.sqrt(((c ** 4).mean() - totals.var() ** 2) / len(totals))
        assert abs(totals.var(ddof=1) - exact) < 3 * se

    @pytest.mark.xfail(strict=True, reason="mixture variance inherits the closed form's depth-3/4 shortfall")
    def test_variance_closed_form(self, totals):
        pred = model.totals_random_horizon(2.0)
        c = totals - totals.mean()
        se = math.sqrt(((c ** 4).mean() - totals.var() ** 2) / len(totals))
        assert abs(totals.var(ddof=1) - pred.var_random) < 3 * se
