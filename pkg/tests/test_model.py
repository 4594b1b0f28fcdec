import json

import numpy as np
import pytest

import oracles
import zoo
from hmmforget import (
    build_model,
    compute_p_r,
    detect_clusters,
    load_model,
    save_model,
    simulate,
    verify_assumption_a,
)
from hmmforget.exceptions import (
    ConfigParseError,
    ModelValidationError,
    NotPrimitiveError,
    PeriodicChainError,
    ReducibleChainError,
    RowSumError,
)


def stationary_by_linear_solve(P):
    """Independent stationary computation: solve (P' - I) pi = 0 with sum 1."""
    K = P.shape[0]
    A = np.vstack([P.T - np.eye(K), np.ones(K)])
    b = np.zeros(K + 1)
    b[-1] = 1.0
    pi, *_ = np.linalg.lstsq(A, b, rcond=None)
    return pi


class TestBuildModel:
    def test_doubly_stochastic_symmetric(self):
        m = build_model([[0.5, 0.5], [0.5, 0.5]], [[0.3, 0.7], [0.6, 0.4]])
        np.testing.assert_allclose(m.stationary, [0.5, 0.5], atol=1e-12)

    def test_identity_is_reducible(self):
        with pytest.raises(ReducibleChainError):
            build_model(np.eye(2), [[0.5, 0.5], [0.5, 0.5]])

    def test_two_state_stationary(self):
        m = build_model([[0.9, 0.1], [0.2, 0.8]], [[0.5, 0.5], [0.5, 0.5]])
        np.testing.assert_allclose(m.stationary, [2 / 3, 1 / 3], atol=1e-11)

    def test_periodic_rejected(self):
        with pytest.raises(PeriodicChainError):
            build_model([[0.0, 1.0], [1.0, 0.0]], [[0.5, 0.5], [0.5, 0.5]])

    def test_row_sum_error(self):
        with pytest.raises(RowSumError):
            build_model([[0.9, 0.2], [0.2, 0.8]], [[0.5, 0.5], [0.5, 0.5]])
        with pytest.raises(RowSumError):
            build_model([[0.9, 0.1], [0.2, 0.8]], [[0.5, 0.6], [0.5, 0.5]])

    def test_negative_entries_rejected(self):
        with pytest.raises(ModelValidationError):
            build_model([[1.1, -0.1], [0.2, 0.8]], [[0.5, 0.5], [0.5, 0.5]])

    def test_invariants_on_random_models(self):
        rng = np.random.default_rng(7)
        for _ in range(25):
            m = zoo.random_model(rng)
            np.testing.assert_allclose(m.transition.sum(axis=1), 1.0, atol=1e-12)
            np.testing.assert_allclose(m.emission.sum(axis=1), 1.0, atol=1e-12)
            assert abs(m.stationary.sum() - 1.0) < 1e-12
            assert np.abs(m.stationary @ m.transition - m.stationary).sum() < 1e-10
            np.testing.assert_allclose(
                m.stationary, stationary_by_linear_solve(m.transition), atol=1e-9
            )

    def test_single_state(self):
        m = build_model([[1.0]], [[0.25, 0.75]])
        np.testing.assert_allclose(m.stationary, [1.0])

    def test_matrices_are_read_only(self):
        m = zoo.two_state()
        with pytest.raises(ValueError):
            m.transition[0, 0] = 0.5


class TestDetectClusters:
    def test_full_common_support_two_states(self):
        m = zoo.two_state()
        clusters = detect_clusters(m)
        assert len(clusters) == 1
        assert clusters[0].states == (0, 1)
        assert clusters[0].common_support == (0, 1)
        assert clusters[0].eps_lower == 0.25
        assert clusters[0].density_ceiling == 0.75

    def test_disjoint_supports_give_singletons(self):
        m = zoo.disjoint_support()
        clusters = detect_clusters(m)
        assert [(c.states, c.common_support) for c in clusters] == [((0,), (0,)), ((1,), (1,))]
        assert all(c.eps_lower == 1.0 for c in clusters)

    def test_three_state_overlapping_clusters(self):
        # verified against the subset-enumeration oracle: the two clusters
        # overlap in state 1
        m = build_model(
            [[0.0, 0.5, 0.5], [0.5, 0.5, 0.0], [0.3, 0.3, 0.4]],
            [[0.5, 0.5, 0.0], [0.5, 0.25, 0.25], [0.0, 0.0, 1.0]],
        )
        got = [(c.states, c.common_support) for c in detect_clusters(m)]
        assert got == oracles.brute_force_clusters(m)
        assert got == [((0, 1), (0, 1)), ((1, 2), (2,))]

    def test_matches_brute_force_on_random_models(self):
        rng = np.random.default_rng(11)
        for i in range(60):
            m = zoo.random_model(rng, K=int(rng.integers(2, 7)), zero_emission=(i % 2 == 0))
            got = [(c.states, c.common_support) for c in detect_clusters(m)]
            assert got == oracles.brute_force_clusters(m)

    def test_cluster_condition_holds_exactly(self):
        rng = np.random.default_rng(13)
        for _ in range(30):
            m = zoo.random_model(rng, zero_emission=True)
            for c in detect_clusters(m):
                inside = np.array(c.states)
                outside = np.setdiff1d(np.arange(m.num_states), inside)
                support = list(c.common_support)
                assert m.emission[np.ix_(inside, support)].sum(axis=1).min() > 0
                if outside.size:
                    assert m.emission[np.ix_(outside, support)].sum() == 0.0
                assert c.eps_lower > 0


class TestAssumptionA:
    def test_all_positive_entries_r1(self):
        m = zoo.two_state()
        c = verify_assumption_a(m, detect_clusters(m)[0])
        assert c.primitivity_exponent == 1
        assert 0 < c.rho < 1

    def test_r2_block(self):
        m = build_model(
            [[0.0, 0.5, 0.5], [0.5, 0.5, 0.0], [0.3, 0.3, 0.4]],
            [[0.5, 0.5, 0.0], [0.5, 0.25, 0.25], [0.0, 0.0, 1.0]],
        )
        cluster = next(c for c in detect_clusters(m) if c.states == (0, 1))
        c = verify_assumption_a(m, cluster)
        assert c.primitivity_exponent == 2

    def test_bipartite_block_not_primitive(self):
        m = build_model(
            [[0.0, 0.5, 0.5], [0.5, 0.0, 0.5], [0.3, 0.3, 0.4]],
            [[0.5, 0.5, 0.0], [0.5, 0.25, 0.25], [0.0, 0.0, 1.0]],
        )
        cluster = next(c for c in detect_clusters(m) if c.states == (0, 1))
        with pytest.raises(NotPrimitiveError):
            verify_assumption_a(m, cluster)

    def test_minimal_exponent(self):
        rng = np.random.default_rng(17)
        for _ in range(40):
            m = zoo.random_model(rng, K=int(rng.integers(2, 6)))
            for c in detect_clusters(m):
                try:
                    v = verify_assumption_a(m, c)
                except NotPrimitiveError:
                    continue
                idx = np.array(v.states)
                R = m.transition[np.ix_(idx, idx)]
                r = v.primitivity_exponent
                assert (np.linalg.matrix_power(R, r) > 0).all()
                if r > 1:
                    assert not (np.linalg.matrix_power(R, r - 1) > 0).all()

    def test_zero_transition_model(self):
        m = zoo.zero_transition()
        clusters = detect_clusters(m)
        assert [c.states for c in clusters] == [(0, 1, 2)]
        c = verify_assumption_a(m, clusters[0])
        assert c.primitivity_exponent == 2
        assert 0 < c.rho < 1
        assert c.p_r > 0


def enum_p_r(model, support, r):
    """Exhaustive path enumeration of the r-block probability."""
    import itertools

    g = model.emission[:, list(support)].sum(axis=1)
    total = 0.0
    for path in itertools.product(range(model.num_states), repeat=r):
        p = model.stationary[path[0]] * g[path[0]]
        for t in range(1, r):
            p *= model.transition[path[t - 1], path[t]] * g[path[t]]
        total += p
    return total


class TestComputePr:
    def test_full_support_gives_one(self):
        m = zoo.two_state()
        c = verify_assumption_a(m, detect_clusters(m)[0])
        assert c.p_r == pytest.approx(1.0, abs=1e-12)
        for r in (1, 2, 5):
            assert compute_p_r(m, c, r=r) == pytest.approx(1.0, abs=1e-12)

    def test_r1_is_stationary_average(self):
        m = zoo.partial_overlap()
        c = verify_assumption_a(m, detect_clusters(m)[0])
        expected = float(m.stationary @ m.emission[:, list(c.common_support)].sum(axis=1))
        assert compute_p_r(m, c, r=1) == pytest.approx(expected, abs=1e-14)
        assert expected == pytest.approx(0.5, abs=1e-12)

    def test_dp_matches_enumeration(self):
        rng = np.random.default_rng(19)
        for _ in range(20):
            m = zoo.random_model(rng, K=int(rng.integers(2, 5)), zero_emission=True)
            for c in detect_clusters(m):
                for r in (1, 2, 3, 4):
                    assert compute_p_r(m, c, r=r) == pytest.approx(
                        enum_p_r(m, c.common_support, r), abs=1e-12
                    )

    def test_dp_matches_monte_carlo(self):
        m = zoo.zero_transition()
        c = verify_assumption_a(m, detect_clusters(m)[0])
        est, se = oracles.mc_block_probability(
            m, c.common_support, c.primitivity_exponent, samples=400_000, seed=5
        )
        assert abs(est - c.p_r) < 4 * se


class TestSimulate:
    def test_reproducible(self):
        m = zoo.two_state()
        a = simulate(m, 500, seed=123)
        b = simulate(m, 500, seed=123)
        np.testing.assert_array_equal(a.states, b.states)
        np.testing.assert_array_equal(a.observations, b.observations)
        c = simulate(m, 500, seed=124)
        assert not np.array_equal(a.observations, c.observations)

    def test_ranges_and_window(self):
        m = zoo.zero_transition()
        p = simulate(m, 100, origin_offset=-20, seed=3)
        assert p.origin_offset == -20 and p.end == 79
        assert p.states.min() >= 0 and p.states.max() < m.num_states
        assert p.observations.min() >= 0 and p.observations.max() < m.num_symbols
        np.testing.assert_array_equal(p.window(-20, 79), p.observations)
        np.testing.assert_array_equal(p.window(1, 5), p.observations[21:26])
        with pytest.raises(IndexError):
            p.window(-21, 0)

    def test_one_hot_emissions_expose_states(self):
        m = zoo.disjoint_support()
        p = simulate(m, 300, seed=9)
        np.testing.assert_array_equal(p.states, p.observations)

    def test_state_frequencies_match_stationary(self):
        m = zoo.two_state()
        n = 10**6
        p = simulate(m, n, seed=2024)
        for s in range(m.num_states):
            freq = float((p.states == s).mean())
            pi_s = m.stationary[s]
            band = 3 * np.sqrt(pi_s * (1 - pi_s) / n)
            assert abs(freq - pi_s) < band


class TestModelIo:
    def test_roundtrip(self, tmp_path):
        m = zoo.zero_transition()
        path = tmp_path / "model.json"
        save_model(m, path)
        m2 = load_model(path)
        np.testing.assert_allclose(m2.transition, m.transition, atol=1e-15)
        np.testing.assert_allclose(m2.emission, m.emission, atol=1e-15)
        assert m2.name == m.name

    def test_malformed_json_reports_position(self, tmp_path):
        path = tmp_path / "bad.json"
        path.write_text('{"transition": [[1.0]],\n  "emission": [[1.0]]')
        with pytest.raises(ConfigParseError, match=r"line \d+ column \d+"):
            load_model(path)

    def test_missing_field(self, tmp_path):
        path = tmp_path / "partial.json"
        path.write_text(json.dumps({"transition": [[1.0]]}))
        with pytest.raises(ConfigParseError, match="emission"):
            load_model(path)
