import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import barbell_edges, bfs_components
from rfa.errors import DomainError, ParseError
from rfa.generators import gen_barbell, gen_erdos_renyi, gen_role_ring, gen_sbm
from rfa.graph import (Graph, induced_subgraph, is_connected, largest_connected_component,
                       load_edge_list, write_edge_list)


def _write(tmp_path, text, name="g.txt"):
    p = tmp_path / name
    p.write_text(text)
    return p


class TestLoad:
    def test_path_graph(self, tmp_path):
        g = load_edge_list(_write(tmp_path, "0 1\n1 2\n"))
        assert (g.n, g.m) == (3, 2)
        assert g.degrees.tolist() == [1, 2, 1]

    def test_duplicates_and_self_loops_dropped(self, tmp_path):
        g = load_edge_list(_write(tmp_path, "0 1\n1 0\n0 0\n"))
        assert (g.n, g.m) == (2, 1)
        g.validate()

    def test_barbell_file(self, tmp_path):
        text = "".join(f"{u} {v}\n" for u, v in barbell_edges(6, 3))
        g = load_edge_list(_write(tmp_path, text))
        assert (g.n, g.m) == (15, 34)
        assert g.degrees[[5, 9]].tolist() == [6, 6]
        assert g.degrees[6:9].tolist() == [2, 2, 2]
        interior = [i for i in range(15) if i not in (5, 6, 7, 8, 9)]
        assert np.all(g.degrees[interior] == 5)

    def test_comments_and_blank_lines(self, tmp_path):
        g = load_edge_list(_write(tmp_path, "# header\n\n0 1  # trailing\n1 2\n"))
        assert g.m == 2

    def test_one_based(self, tmp_path):
        g = load_edge_list(_write(tmp_path, "1 2\n2 3\n"), base=1, compact=False)
        assert (g.n, g.m) == (3, 2)

    def test_compaction_keeps_original_ids(self, tmp_path):
        g = load_edge_list(_write(tmp_path, "10 30\n30 20\n"))
        assert g.original_ids.tolist() == [10, 20, 30]
        assert g.neighbors(2).tolist() == [0, 1]

    @pytest.mark.parametrize("text, lineno", [
        ("0 1\n1 x\n", 2),
        ("0 1\n1 2 3\n", 2),
        ("5\n", 1),
        ("0 1\n\n-1 2\n", 3),
    ])
    def test_parse_errors_carry_line_number(self, tmp_path, text, lineno):
        p = _write(tmp_path, text)
        with pytest.raises(ParseError) as info:
            load_edge_list(p)
        assert info.value.lineno == lineno
        assert f":{lineno}:" in str(info.value)

    def test_lenient_mode_skips_bad_lines(self, tmp_path):
        g = load_edge_list(_write(tmp_path, "0 1\nbad line here\n1 2\n"), strict=False)
        assert g.m == 2

    def test_empty_file(self, tmp_path):
        with pytest.raises(DomainError):
            load_edge_list(_write(tmp_path, "# nothing\n"))

    def test_write_read_round_trip(self, tmp_path, barbell):
        p = tmp_path / "out.txt"
        write_edge_list(barbell, p)
        g = load_edge_list(p)
        assert np.array_equal(g.indptr, barbell.indptr)
        assert np.array_equal(g.indices, barbell.indices)


@settings(max_examples=60, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 30), st.integers(0, 30)), min_size=1, max_size=120))
def test_from_edges_invariants(pairs):
    src, dst = np.asarray(pairs).T
    g = Graph.from_edges(src, dst)
    g.validate()
    expected = {(min(u, v), max(u, v)) for u, v in pairs if u != v}
    assert g.m == len(expected)
    assert {tuple(e) for e in g.edges().tolist()} == expected
    assert g.degrees.sum() == 2 * g.m


class TestComponents:
    def test_connected_input_returned_as_is(self, barbell):
        h, cmap = largest_connected_component(barbell)
        assert h is barbell
        assert np.array_equal(cmap.remap, np.arange(15))
        assert cmap.num_components == 1

    def test_tie_goes_to_smallest_id(self):
        # two triangles of equal size, listed second-first, plus isolated node 6
        src = [3, 4, 5, 0, 1, 2]
        dst = [4, 5, 3, 1, 2, 0]
        g = Graph.from_edges(src, dst, n=7)
        h, cmap = largest_connected_component(g)
        assert (h.n, h.m) == (3, 3)
        assert cmap.old_ids.tolist() == [0, 1, 2]
        assert cmap.num_components == 3
        assert sorted(cmap.sizes.tolist()) == [1, 3, 3]

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_bfs_oracle(self, seed):
        rng = np.random.default_rng(seed)
        n = 100
        iu, ju = np.triu_indices(n, 1)
        keep = rng.random(iu.size) < 0.01
        edges = list(zip(iu[keep].tolist(), ju[keep].tolist()))
        g = Graph.from_edges(iu[keep], ju[keep], n=n)
        labels = bfs_components(n, edges)
        sizes = np.bincount(labels)
        h, cmap = largest_connected_component(g)
        assert h.n == sizes.max()
        assert is_connected(h)
        assert bfs_components(h.n, h.edges().tolist()).max() == 0
        # remap is a bijection between the kept old ids and 0..n'-1
        assert np.array_equal(cmap.remap[cmap.old_ids], np.arange(h.n))
        assert np.sum(cmap.remap >= 0) == h.n

    def test_single_node(self):
        g = Graph.from_edges([], [], n=1)
        h, _ = largest_connected_component(g)
        assert h.n == 1

    def test_induced_subgraph_keeps_original_ids(self, tmp_path):
        g = load_edge_list(_write(tmp_path, "10 11\n11 12\n20 21\n"))
        h = induced_subgraph(g, [3, 4])
        assert h.original_ids.tolist() == [20, 21]
        assert h.m == 1


class TestBarbell:
    @pytest.mark.parametrize("n, c, nodes, edges", [(6, 3, 15, 34), (3, 1, 7, 8)])
    def test_counts(self, n, c, nodes, edges):
        g = gen_barbell(n, c)
        assert (g.n, g.m) == (nodes, edges)
        g.validate()

    def test_degree_multiset(self, barbell):
        values, counts = np.unique(barbell.degrees, return_counts=True)
        assert dict(zip(values.tolist(), counts.tolist())) == {2: 3, 5: 10, 6: 2}

    def test_matches_hand_built_edges(self, barbell):
        expected = sorted(tuple(sorted(e)) for e in barbell_edges(6, 3))
        assert [tuple(e) for e in barbell.edges().tolist()] == expected

    @pytest.mark.parametrize("n, c", [(2, 1), (3, 0)])
    def test_bounds(self, n, c):
        with pytest.raises(DomainError):
            gen_barbell(n, c)


class TestErdosRenyi:
    def test_mean_degree(self):
        for seed in range(5):
            g = gen_erdos_renyi(10_000, 10, seed)
            assert 9.5 <= g.degrees.mean() <= 10.5

    def test_deterministic(self):
        a = gen_erdos_renyi(2000, 6, 11)
        b = gen_erdos_renyi(2000, 6, 11)
        assert np.array_equal(a.indices, b.indices)
        assert not np.array_equal(a.indices, gen_erdos_renyi(2000, 6, 12).indices)

    def test_p_one_boundary(self):
        g = gen_erdos_renyi(2, 1, 0)
        assert g.m == 1

    def test_complete_when_p_is_one(self):
        assert gen_erdos_renyi(6, 5, 3).m == 15

    @pytest.mark.parametrize("n, avg", [(1, 0.5), (10, 0), (10, 10), (10, -1)])
    def test_invalid(self, n, avg):
        with pytest.raises(DomainError):
            gen_erdos_renyi(n, avg, 0)

    def test_valid_structure(self):
        gen_erdos_renyi(5000, 8, 1).validate()

    def test_pair_frequencies_uniform(self):
        # every unordered pair should be hit with probability p
        n, trials = 8, 3000
        counts = np.zeros((n, n))
        for s in range(trials):
            g = gen_erdos_renyi(n, 2.1, s)
            e = g.edges()
            counts[e[:, 0], e[:, 1]] += 1
        iu = np.triu_indices(n, 1)
        freq = counts[iu] / trials
        p = 2.1 / (n - 1)
        assert np.all(np.abs(freq - p) < 4 * np.sqrt(p * (1 - p) / trials))


class TestSbm:
    def test_within_block_density(self):
        for seed in range(5):
            g, labels = gen_sbm([100, 100, 100], 0.1, 0.01, seed)
            assert g.n == 300
            e = g.edges()
            same = labels[e[:, 0]] == labels[e[:, 1]]
            density = same.sum() / (3 * 100 * 99 / 2)
            assert abs(density - 0.1) <= 0.02

    def test_labels(self):
        _, labels = gen_sbm([3, 4], 0.5, 0.5, 0)
        assert labels.tolist() == [0, 0, 0, 1, 1, 1, 1]

    def test_no_cross_edges_gives_two_components(self):
        for seed in range(5):
            g, _ = gen_sbm([100, 100], 0.2, 0.0, seed)
            assert bfs_components(g.n, g.edges().tolist()).max() == 1

    def test_equal_probabilities_match_er(self):
        means = [gen_sbm([150, 150], 0.03, 0.03, s)[0].degrees.mean() for s in range(5)]
        ers = [gen_erdos_renyi(300, 0.03 * 299, s).degrees.mean() for s in range(5)]
        assert abs(np.mean(means) - np.mean(ers)) < 0.5

    def test_deterministic(self):
        a, _ = gen_sbm([50, 50], 0.2, 0.02, 9)
        b, _ = gen_sbm([50, 50], 0.2, 0.02, 9)
        assert np.array_equal(a.indices, b.indices)

    @pytest.mark.parametrize("blocks, pin, pout", [([], 0.1, 0.1), ([5, 0], 0.1, 0.1),
                                                   ([5], 1.5, 0.1), ([5], 0.1, -0.1)])
    def test_invalid(self, blocks, pin, pout):
        with pytest.raises(DomainError):
            gen_sbm(blocks, pin, pout, 0)


class TestRoleRing:
    def test_counts_and_labels(self):
        g, labels = gen_role_ring(10, 5)
        assert (g.n, g.m) == (60, 60)
        assert np.sum(labels == 0) == 10 and np.sum(labels == 1) == 50
        assert np.all(g.degrees[labels == 0] == 7)
        assert np.all(g.degrees[labels == 1] == 1)
        assert is_connected(g)
        g.validate()

    @pytest.mark.parametrize("s, k", [(2, 5), (3, 0)])
    def test_invalid(self, s, k):
        with pytest.raises(DomainError):
            gen_role_ring(s, k)
