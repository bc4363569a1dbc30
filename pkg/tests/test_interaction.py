import numpy as np
import pytest

from ergochain.chain import Chain
from ergochain.interaction import (
    IslandPartition,
    StrongInteractionDigraph,
    accumulate_interactions,
    build_digraph,
    interaction_islands,
    islands,
    write_edge_list,
)
from ergochain.models import JLMSchedule, jlm_chain
from ergochain.properties import DIVERGENT, subsymmetry_constant

from oracles import random_stochastic


def two_block_chain(horizon):
    # dense averaging inside {0,1,2} and {3,4,5}, nothing across
    block = np.zeros((6, 6))
    block[:3, :3] = 1 / 3
    block[3:, 3:] = 1 / 3
    return Chain.from_matrices([block] * horizon)


class TestAccumulate:
    def test_identity_chain_totals(self):
        chain = Chain.from_matrices([np.eye(3)] * 40)
        totals = accumulate_interactions(chain, 40)
        np.testing.assert_allclose(np.diag(totals.totals), 40.0)
        off = totals.totals[~np.eye(3, dtype=bool)]
        assert (off == 0).all()

    def test_constant_rate_accumulates_linearly(self):
        a = np.array([[0.7, 0.3], [0.4, 0.6]])
        chain = Chain.from_matrices([a] * 25)
        totals = accumulate_interactions(chain, 25)
        assert totals.totals[0, 1] == pytest.approx(0.3 * 25)
        np.testing.assert_allclose(totals.pair_series(0, 1),
                                   0.3 * np.arange(1, 26))

    def test_jlm_complete_graph_closed_form(self):
        s, horizon = 4, 100
        chain = jlm_chain(JLMSchedule.complete(s), horizon)
        totals = accumulate_interactions(chain, horizon)
        np.testing.assert_allclose(totals.totals, horizon / s)

    def test_totals_monotone_in_horizon(self, rng):
        mats = [random_stochastic(rng, 4) for _ in range(30)]
        chain = Chain.from_matrices(mats)
        totals = accumulate_interactions(chain, 30)
        diffs = np.diff(totals.series, axis=0)
        assert (diffs >= 0).all()


class TestDigraph:
    def test_identity_chain_self_loops_only(self):
        chain = Chain.from_matrices([np.eye(3)] * 200)
        g = build_digraph(accumulate_interactions(chain, 200))
        assert g.edges == frozenset({(0, 0), (1, 1), (2, 2)})

    def test_two_block_chain_edges(self):
        chain = two_block_chain(10_000)
        g = build_digraph(accumulate_interactions(chain, 10_000))
        for i in range(6):
            for j in range(6):
                same_block = (i < 3) == (j < 3)
                assert g.has_edge(i, j) == same_block

    def test_one_directional_pair(self):
        a = np.array([[0.5, 0.5], [0.0, 1.0]])
        chain = Chain.from_matrices([a] * 500)
        g = build_digraph(accumulate_interactions(chain, 500))
        assert g.has_edge(0, 1)
        assert not g.has_edge(1, 0)

    def test_subsymmetric_chain_has_symmetric_edges(self):
        chain = jlm_chain(JLMSchedule.random(5, 0.4, seed=7, length=2000), 2000)
        assert np.isfinite(subsymmetry_constant(chain, 2000))
        g = build_digraph(accumulate_interactions(chain, 2000))
        for (i, j) in g.edges:
            assert g.has_edge(j, i)

    def test_longer_horizon_never_removes_edges(self):
        chain = two_block_chain(8000)
        g1 = build_digraph(accumulate_interactions(chain, 2000))
        g2 = build_digraph(accumulate_interactions(chain, 8000))
        assert g1.edges <= g2.edges


class TestIslands:
    def scc(self, s, edges):
        return islands(StrongInteractionDigraph(s, frozenset(edges)))

    def test_complete_digraph_single_island(self):
        edges = {(i, j) for i in range(4) for j in range(4)}
        part = self.scc(4, edges)
        assert part.classes == ((0, 1, 2, 3),)

    def test_self_loops_only_gives_singletons(self):
        part = self.scc(3, {(i, i) for i in range(3)})
        assert part.classes == ((0,), (1,), (2,))

    def test_two_dense_blocks(self):
        edges = {(i, j) for i in range(3) for j in range(3)}
        edges |= {(i, j) for i in range(3, 5) for j in range(3, 5)}
        part = self.scc(5, edges)
        assert part.classes == ((0, 1, 2), (3, 4))

    def test_directed_cycle_is_one_island(self):
        part = self.scc(4, {(0, 1), (1, 2), (2, 3), (3, 0)})
        assert part.classes == ((0, 1, 2, 3),)

    def test_directed_path_gives_singletons(self):
        part = self.scc(4, {(0, 1), (1, 2), (2, 3)})
        assert part.count == 4

    def test_one_way_bridge_keeps_blocks_separate(self):
        edges = {(0, 1), (1, 0), (2, 3), (3, 2), (1, 2)}
        part = self.scc(4, edges)
        assert part.classes == ((0, 1), (2, 3))

    @pytest.mark.parametrize("seed", range(5))
    def test_partition_is_disjoint_and_covering(self, seed):
        rng = np.random.default_rng(seed)
        s = 7
        edges = {(int(i), int(j))
                 for i, j in rng.integers(0, s, size=(12, 2))}
        part = self.scc(s, edges)
        flat = [i for cls in part.classes for i in cls]
        assert sorted(flat) == list(range(s))

    def test_two_block_pipeline(self):
        chain = two_block_chain(10_000)
        _, _, part = interaction_islands(chain, 10_000)
        assert part.classes == ((0, 1, 2), (3, 4, 5))


class TestEdgeListExport:
    def test_format(self, tmp_path):
        g = StrongInteractionDigraph(3, frozenset({(0, 1), (2, 2)}))
        path = tmp_path / "digraph.edges"
        write_edge_list(g, path)
        lines = path.read_text().splitlines()
        assert lines == [f"0 1 {DIVERGENT}", f"2 2 {DIVERGENT}"]
