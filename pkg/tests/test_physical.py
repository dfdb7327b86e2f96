import numpy as np
import pytest

from quboplan import (
    ChimeraGraph,
    Embedding,
    EmbeddingError,
    Qubo,
    brute_force_physical,
    brute_force_qubo,
    decode_physical,
    embed_qubo,
    encode_assignment,
    energy,
    logical_map,
    physical_energy,
    triad_embedding,
)
from quboplan.chimera import LEFT, RIGHT
from quboplan.physical import load_physical, physical_minima, save_physical, spread_logical

TOL = 1e-9


@pytest.fixture
def grid():
    return ChimeraGraph(12, 12)


def single_cell_singletons(graph, n):
    """n singleton chains inside one cell, alternating columns so that
    consecutive variables always share an intra-cell coupler."""
    chains = {}
    for v in range(n):
        side = v % 2
        lane = v // 2
        chains[v] = (graph.qubit(0, 0, side, lane),)
    return Embedding(chains)


class TestSpreadAndChainTerms:
    def test_singleton_chains_copy_logical_weights(self, grid, two_query_instance):
        qubo, _ = logical_map(two_query_instance)
        emb = single_cell_singletons(grid, 4)
        pq = embed_qubo(qubo, emb, grid)
        # One qubit per variable: weights transfer unchanged, no chain couplers.
        for v, chain in emb.chains.items():
            assert pq.qubit_weight[chain[0]] == pytest.approx(qubo.linear[v], abs=TOL)
        assert len(pq.coupler_weight) == len(qubo.quadratic)
        assert sorted(pq.coupler_weight.values()) == pytest.approx(
            sorted(qubo.quadratic.values()), abs=TOL
        )

    def test_even_split_over_chain(self, grid):
        qubo = Qubo(1, {0: -6.0}, {})
        chain = (grid.qubit(0, 0, LEFT, 0), grid.qubit(0, 0, RIGHT, 0), grid.qubit(0, 0, LEFT, 1))
        weights, couplers = spread_logical(qubo, Embedding({0: chain}), grid)
        assert [weights[q] for q in chain] == pytest.approx([-2.0, -2.0, -2.0], abs=TOL)
        assert couplers == {}

    def test_quadratic_lands_on_first_canonical_coupler(self, grid):
        qubo = Qubo(2, {}, {(0, 1): 2.5})
        a = (grid.qubit(0, 0, LEFT, 0),)
        b = (grid.qubit(0, 0, RIGHT, 0), grid.qubit(0, 0, RIGHT, 1))
        _weights, couplers = spread_logical(qubo, Embedding({0: a, 1: b}), grid)
        edges = grid.edges_between(a, b)
        assert list(couplers) == [edges[0]]
        assert couplers[edges[0]] == pytest.approx(2.5, abs=TOL)


class TestChainStrength:
    def test_bare_two_qubit_chain_gets_margin_strength(self, grid):
        qubo = Qubo(1, {}, {})
        chain = (grid.qubit(0, 0, LEFT, 0), grid.qubit(0, 0, RIGHT, 0))
        pq = embed_qubo(qubo, Embedding({0: chain}), grid, margin=0.25)
        assert pq.chain_strength[0] == pytest.approx(0.25, abs=TOL)
        sample_broken = {chain[0]: 1, chain[1]: 0}
        assert physical_energy(pq, sample_broken) == pytest.approx(0.25, abs=TOL)
        assert physical_energy(pq, {chain[0]: 1, chain[1]: 1}) == pytest.approx(0.0, abs=TOL)
        assert physical_energy(pq, {chain[0]: 0, chain[1]: 0}) == pytest.approx(0.0, abs=TOL)

    def test_strength_floor_when_bound_is_negative(self, grid):
        # Strongly negative linear weight: forcing consistency only helps,
        # so the strength falls back to the margin.
        qubo = Qubo(1, {0: -6.0}, {})
        chain = (grid.qubit(0, 0, LEFT, 0), grid.qubit(0, 0, RIGHT, 0), grid.qubit(0, 0, LEFT, 1))
        pq = embed_qubo(qubo, Embedding({0: chain}), grid, margin=0.25)
        assert pq.chain_strength[0] == pytest.approx(0.25, abs=TOL)

    def test_example_chain_strengths(self, grid, two_query_instance):
        qubo, _ = logical_map(two_query_instance, margin=0.25)
        emb = triad_embedding(4, grid)
        pq = embed_qubo(qubo, emb, grid, margin=0.25)
        # Hand-derived from the per-chain flip bounds on the dense packing.
        assert pq.chain_strength == pytest.approx(
            {0: 2.5, 1: 5.5, 2: 6.5, 3: 3.5}, abs=TOL
        )

    def test_monotone_in_logical_weight_magnitude(self, grid):
        rng = np.random.default_rng(5)
        for _ in range(10):
            n = int(rng.integers(2, 7))
            linear = {i: float(rng.uniform(-4, 4)) for i in range(n)}
            quadratic = {
                (u, v): float(rng.uniform(-4, 4))
                for u in range(n)
                for v in range(u + 1, n)
                if rng.random() < 0.7
            }
            emb = triad_embedding(n, grid)
            base = embed_qubo(Qubo(n, linear, quadratic), emb, grid)
            scaled = embed_qubo(
                Qubo(
                    n,
                    {k: 2 * w for k, w in linear.items()},
                    {k: 2 * w for k, w in quadratic.items()},
                ),
                emb,
                grid,
            )
            for v in range(n):
                assert scaled.chain_strength[v] >= base.chain_strength[v] - 1e-12

    def test_failed_verification_raises(self, grid):
        qubo = Qubo(2, {}, {(0, 1): 1.0})
        # Two left-column singletons in different columns: no coupler.
        emb = Embedding({0: (grid.qubit(0, 0, LEFT, 0),), 1: (grid.qubit(0, 1, LEFT, 0),)})
        with pytest.raises(EmbeddingError):
            embed_qubo(qubo, emb, grid)


class TestPhysicalEnergy:
    def test_all_zero_sample(self, grid, two_query_instance):
        qubo, _ = logical_map(two_query_instance)
        emb = triad_embedding(4, grid)
        pq = embed_qubo(qubo, emb, grid)
        assert physical_energy(pq, {q: 0 for q in pq.used_qubits()}) == 0.0

    def test_missing_qubit_value_rejected(self, grid, two_query_instance):
        qubo, _ = logical_map(two_query_instance)
        emb = triad_embedding(4, grid)
        pq = embed_qubo(qubo, emb, grid)
        sample = {q: 0 for q in pq.used_qubits()}
        sample.pop(emb.chains[2][1])
        with pytest.raises(ValueError, match="missing"):
            physical_energy(pq, sample)


class TestDecode:
    def test_consistent_chains_event_free(self, grid):
        emb = triad_embedding(6, grid)
        sample = encode_assignment(emb, [1, 0, 1, 0, 1, 1])
        assignment, report = decode_physical(emb, sample)
        assert list(assignment) == [1, 0, 1, 0, 1, 1]
        assert report.consistent

    def test_majority_vote_flags_chain(self, grid):
        emb = Embedding(
            {0: (grid.qubit(0, 0, LEFT, 0), grid.qubit(0, 0, RIGHT, 0), grid.qubit(0, 0, LEFT, 1))}
        )
        sample = {emb.chains[0][0]: 1, emb.chains[0][1]: 1, emb.chains[0][2]: 0}
        assignment, report = decode_physical(emb, sample)
        assert list(assignment) == [1]
        assert report.inconsistent == (0,)

    def test_tie_resolves_to_zero(self, grid):
        emb = Embedding({0: (grid.qubit(0, 0, LEFT, 0), grid.qubit(0, 0, RIGHT, 0))})
        sample = {emb.chains[0][0]: 1, emb.chains[0][1]: 0}
        assignment, report = decode_physical(emb, sample)
        assert list(assignment) == [0]
        assert report.inconsistent == (0,)

    def test_missing_chain_value_rejected(self, grid):
        emb = triad_embedding(4, grid)
        sample = encode_assignment(emb, [1, 1, 0, 0])
        sample.pop(emb.chains[3][0])
        with pytest.raises(ValueError):
            decode_physical(emb, sample)


class TestRoundTripAndOptima:
    def test_example_physical_optimum_decodes_correctly(self, grid, two_query_instance):
        qubo, mapping = logical_map(two_query_instance, margin=0.25)
        emb = triad_embedding(4, grid)
        pq = embed_qubo(qubo, emb, grid, margin=0.25)
        sample, value = brute_force_physical(pq)
        assignment, report = decode_physical(emb, sample)
        assert list(assignment) == [0, 1, 1, 0]
        assert report.consistent
        assert value == pytest.approx(-6.5, abs=TOL)

    @pytest.mark.parametrize("seed", range(8))
    def test_consistent_samples_reproduce_logical_energy(self, grid, seed):
        rng = np.random.default_rng(seed)
        n = int(rng.integers(2, 9))
        linear = {i: float(rng.uniform(-5, 5)) for i in range(n)}
        quadratic = {
            (u, v): float(rng.uniform(-5, 5))
            for u in range(n)
            for v in range(u + 1, n)
            if rng.random() < 0.8
        }
        qubo = Qubo(n, linear, quadratic)
        emb = triad_embedding(n, grid)
        pq = embed_qubo(qubo, emb, grid)
        assignment = rng.integers(0, 2, size=n)
        sample = encode_assignment(emb, assignment)
        assert physical_energy(pq, sample) == pytest.approx(
            energy(qubo, assignment), abs=TOL
        )
        decoded, report = decode_physical(emb, sample)
        assert np.array_equal(decoded, assignment)
        assert report.consistent

    @pytest.mark.parametrize("seed", range(6))
    def test_every_ground_state_has_consistent_chains(self, grid, seed):
        rng = np.random.default_rng(100 + seed)
        n = int(rng.integers(2, 7))
        qubo = Qubo(
            n,
            {i: float(rng.uniform(-5, 5)) for i in range(n)},
            {
                (u, v): float(rng.uniform(-5, 5))
                for u in range(n)
                for v in range(u + 1, n)
            },
        )
        emb = triad_embedding(n, grid)
        pq = embed_qubo(qubo, emb, grid)
        states, _best = physical_minima(pq, atol=1e-12)
        _bits, logical_best = brute_force_qubo(qubo)
        for state in states:
            decoded, report = decode_physical(emb, state)
            assert report.consistent
            assert energy(qubo, decoded) == pytest.approx(logical_best, abs=TOL)


class TestPhysicalFile:
    def test_round_trip(self, tmp_path, grid, two_query_instance):
        qubo, _ = logical_map(two_query_instance)
        emb = triad_embedding(4, grid)
        pq = embed_qubo(qubo, emb, grid)
        path = tmp_path / "physical.json"
        save_physical(path, pq)
        loaded = load_physical(path)
        assert loaded.qubit_weight == pq.qubit_weight
        assert loaded.coupler_weight == pq.coupler_weight
        assert loaded.chain_strength == pq.chain_strength
        assert (loaded.graph.rows, loaded.graph.cols) == (12, 12)
        save_physical(tmp_path / "again.json", loaded)
        assert (tmp_path / "again.json").read_bytes() == path.read_bytes()
