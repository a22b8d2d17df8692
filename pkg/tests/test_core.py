import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrfk.core import (Configuration, FkModel, bridge_diagnostics,
                       cluster_labels, cluster_of, connected, log_weight)
from lrfk.couplings import CouplingSpec
from lrfk.lattice import make_box, norm_value, rank_pair, unrank_pair

from conftest import small_model


def brute_components(n, edges):
    """Reference connected components by repeated closure."""
    comp = list(range(n))
    changed = True
    while changed:
        changed = False
        for a, b in edges:
            lo = min(comp[a], comp[b])
            if comp[a] != lo or comp[b] != lo:
                hi = max(comp[a], comp[b])
                for v in range(n):
                    if comp[v] == hi:
                        comp[v] = lo
                changed = True
    return comp


class TestModel:
    def test_weight_conventions(self):
        m_paper = small_model(convention="paper")
        m_es = small_model(convention="es")
        bj = m_paper.beta * m_paper.edge_couplings()
        assert np.allclose(m_paper.edge_weights(), 1 - np.exp(-bj))
        assert np.allclose(m_es.edge_weights(), np.exp(bj) - 1)
        # paper weights satisfy w <= beta J; es weights exceed beta J
        assert np.all(m_paper.edge_weights() <= bj)
        assert np.all(m_es.edge_weights() >= bj)

    def test_validation(self):
        box = make_box(1, (0,), 3)
        spec = CouplingSpec.power_law(2.0, 1)
        with pytest.raises(ValueError):
            FkModel(box, spec, -0.1, 2)
        with pytest.raises(ValueError):
            FkModel(box, spec, 0.5, 0.5)
        with pytest.raises(ValueError):
            FkModel(box, spec, 0.5, 2, "other")
        with pytest.raises(ValueError):
            FkModel(make_box(2, (0, 0), 2), spec, 0.5, 2)

    def test_edge_couplings_match_pairs(self):
        m = small_model()
        box = m.box
        j = m.edge_couplings()
        from lrfk.couplings import evaluate
        for e in range(box.n_edges):
            i, jdx = unrank_pair(e, box.n)
            x = np.array(box.vertices[jdx]) - np.array(box.vertices[i])
            assert j[e] == pytest.approx(evaluate(m.coupling, x))


class TestConfiguration:
    def test_set_and_query(self):
        box = make_box(1, (0,), 3)
        cfg = Configuration(box)
        cfg.set_edge((-1,), (2,), True)
        assert cfg.is_open((2,), (-1,))
        assert len(cfg.open_edges()) == 1

    def test_hex_roundtrip(self):
        box = make_box(1, (0,), 3)
        rng = np.random.default_rng(5)
        bits = rng.random(box.n_edges) < 0.4
        cfg = Configuration(box, bits)
        assert Configuration.from_hex(box, cfg.to_hex()) == cfg

    def test_wrong_length(self):
        box = make_box(1, (0,), 3)
        with pytest.raises(ValueError):
            Configuration(box, np.zeros(3, dtype=bool))


class TestClusters:
    @given(st.integers(2, 12), st.data())
    @settings(max_examples=60, deadline=None)
    def test_labels_match_brute_force(self, n, data):
        m = n * (n - 1) // 2
        open_ids = data.draw(st.sets(st.integers(0, m - 1), max_size=m))
        from conftest import line_box
        box = line_box(n)
        bits = np.zeros(m, dtype=bool)
        for e in open_ids:
            bits[e] = True
        cfg = Configuration(box, bits)
        labs = cluster_labels(cfg)
        edges = [unrank_pair(e, n) for e in open_ids]
        ref = brute_components(n, edges)
        # same partition: label equality must agree pairwise
        for a in range(n):
            for b in range(a + 1, n):
                assert (labs.labels[a] == labs.labels[b]) == (ref[a] == ref[b])
        assert labs.k == len(set(ref))
        assert labs.sizes[labs.labels].sum() == sum(
            labs.size_of(v) for v in range(n))

    def test_connected_and_cluster_of(self):
        box = make_box(1, (0,), 3)
        cfg = Configuration(box)
        cfg.set_edge((0,), (1,), True)
        cfg.set_edge((1,), (2,), True)
        assert connected(cfg, (0,), (2,))
        assert not connected(cfg, (0,), (-1,))
        assert cluster_of(cfg, (0,)) == {(0,), (1,), (2,)}


class TestLogWeight:
    def test_direct_formula(self):
        m = small_model()
        rng = np.random.default_rng(1)
        bits = rng.random(m.box.n_edges) < 0.3
        cfg = Configuration(m.box, bits)
        k = cluster_labels(cfg).k
        want = k * math.log(m.q) + sum(
            math.log(m.edge_weight(int(e))) for e in cfg.open_edges())
        assert log_weight(m, cfg) == pytest.approx(want)


def _config(box, pairs):
    cfg = Configuration(box)
    for a, b in pairs:
        cfg.set_edge(a, b, True)
    return cfg


class TestBridgeDiagnostics:
    def test_direct_edge(self):
        box = make_box(1, (0,), 6)
        cfg = _config(box, [((0,), (4,))])
        d = bridge_diagnostics(cfg, (0,), (4,), f_value=10.0)
        assert d.L == 4.0
        assert d.maximal_edge == ((0,), (4,))
        # removing the bridge isolates both endpoints
        assert d.R0 == 0.0 and d.Rx == 0.0
        assert d.pigeonhole_premise and d.pigeonhole_ok

    def test_two_hop_path(self):
        box = make_box(1, (0,), 6)
        cfg = _config(box, [((0,), (3,)), ((3,), (5,))])
        d = bridge_diagnostics(cfg, (0,), (5,), f_value=10.0)
        # the longest bridging edge is {0,3}
        assert d.L == 3.0
        assert d.maximal_edge == ((0,), (3,))
        assert d.R0 == 0.0           # origin isolated without the bridge
        assert d.Rx == 2.0           # target still holds {3,5}
        assert d.pigeonhole_ok

    def test_not_connected_reports_radii(self):
        box = make_box(1, (0,), 6)
        cfg = _config(box, [((0,), (1,)), ((4,), (5,))])
        d = bridge_diagnostics(cfg, (0,), (5,), f_value=10.0)
        assert d.L is None and d.maximal_edge is None
        assert d.R0 == 1.0 and d.Rx == 1.0
        assert not d.pigeonhole_premise and d.pigeonhole_ok

    def test_premise_needs_connection_and_small_cluster(self):
        box = make_box(1, (0,), 6)
        cfg = _config(box, [((0,), (1,)), ((1,), (2,)), ((2,), (5,))])
        assert bridge_diagnostics(cfg, (0,), (5,), 2.0).pigeonhole_premise \
            is False  # cluster size 4 >= f=2
        assert bridge_diagnostics(cfg, (0,), (5,), 10.0).pigeonhole_premise

    @given(st.integers(2, 10), st.data())
    @settings(max_examples=80, deadline=None)
    def test_pigeonhole_never_fails(self, n, data):
        """The pigeonhole implication is a theorem: connected in a cluster of
        size < f forces an open edge of length >= |x - 0| / f."""
        from conftest import line_box
        box = line_box(n)
        m = n * (n - 1) // 2
        open_ids = data.draw(st.sets(st.integers(0, m - 1), max_size=m))
        bits = np.zeros(m, dtype=bool)
        for e in open_ids:
            bits[e] = True
        cfg = Configuration(box, bits)
        f = data.draw(st.floats(1.1, n + 1.0))
        d = bridge_diagnostics(cfg, (0,), (n - 1,), f)
        assert d.pigeonhole_ok

    def test_same_vertex_rejected(self):
        box = make_box(1, (0,), 3)
        with pytest.raises(ValueError):
            bridge_diagnostics(Configuration(box), (0,), (0,), 2.0)
