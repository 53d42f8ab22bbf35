import io

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from lpatd.propagate import PropagationError, build_transition, closed_form, label_propagation

PATH = np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=float)


def random_connected_graph(rng, n):
    """Random spanning tree plus extra random edges, positive weights."""
    a = np.zeros((n, n))
    order = rng.permutation(n)
    for i in range(1, n):
        j = order[rng.integers(0, i)]
        a[order[i], j] = a[j, order[i]] = rng.uniform(0.1, 2.0)
    extra = np.triu(rng.random((n, n)) < 0.2, 1) * rng.uniform(0.1, 2.0, (n, n))
    a = np.where(a > 0, a, extra + extra.T)
    return a


def random_labels(rng, n, m):
    nodes = rng.permutation(n)
    n_lab = rng.integers(m, n) if n > m else m
    classes = np.concatenate([np.arange(m), rng.integers(0, m, n_lab - m)])
    return [(int(v), int(c)) for v, c in zip(nodes[:n_lab], classes)]


@pytest.mark.parametrize("norm", ["column-row", "row"])
class TestTransition:
    def test_two_nodes(self, norm):
        for w in (0.3, 7.0):
            t = build_transition(np.array([[0, w], [w, 0]]), norm)
            assert np.array_equal(t.toarray(), [[0, 1], [1, 0]])

    def test_path_middle_row(self, norm):
        np.testing.assert_allclose(build_transition(PATH, norm).toarray()[1], [0.5, 0, 0.5])

    def test_isolated_self_loop(self, norm):
        a = np.zeros((3, 3))
        a[0, 1] = a[1, 0] = 1
        np.testing.assert_array_equal(build_transition(a, norm).toarray()[2], [0, 0, 1])

    def test_row_stochastic(self, norm):
        a = random_connected_graph(np.random.default_rng(0), 9)
        np.testing.assert_allclose(build_transition(a, norm).sum(axis=1), 1.0)


def test_row_normalization_keeps_incident_proportions():
    a = np.array([[0, 1, 3], [1, 0, 0], [3, 0, 0]], dtype=float)
    np.testing.assert_allclose(build_transition(a, "row").toarray()[0], [0, 0.25, 0.75])
    # column-then-row reweights by the neighbours' degrees instead
    np.testing.assert_allclose(build_transition(a, "column-row").toarray()[0], [0, 0.5, 0.5])


def test_unknown_normalization():
    with pytest.raises(PropagationError):
        build_transition(PATH, "col")


class TestLabelPropagation:
    def test_harmonic_midpoint(self):
        r = label_propagation(PATH, [(0, 0), (2, 1)], 2)
        np.testing.assert_allclose(r.y[1], [0.5, 0.5], atol=1e-6)
        assert r.converged

    def test_all_labelled(self):
        r = label_propagation(PATH, [(0, 1), (1, 0), (2, 1)], 2)
        assert r.iterations == 1
        np.testing.assert_array_equal(r.y, [[0, 1], [1, 0], [0, 1]])

    def test_star(self):
        star = np.zeros((5, 5))
        star[0, 1:] = star[1:, 0] = 1
        r = label_propagation(star, [(0, 0)], 2)
        np.testing.assert_allclose(r.y[1:], [[1, 0]] * 4, atol=1e-6)

    def test_labelled_rows_fixed(self):
        a = random_connected_graph(np.random.default_rng(4), 10)
        r = label_propagation(a, [(3, 1), (7, 0)], 2, max_iters=5)
        assert r.y[3].tolist() == [0, 1] and r.y[7].tolist() == [1, 0]

    def test_init_does_not_matter(self):
        rng = np.random.default_rng(5)
        a = random_connected_graph(rng, 12)
        labels = [(0, 0), (5, 1), (9, 2)]
        y0 = rng.dirichlet(np.ones(3), 12)
        a1 = label_propagation(a, labels, 3, tol=1e-10)
        a2 = label_propagation(a, labels, 3, tol=1e-10, y0=y0)
        np.testing.assert_allclose(a1.y, a2.y, atol=1e-7)

    def test_not_converged_is_flagged(self):
        r = label_propagation(random_connected_graph(np.random.default_rng(1), 10), [(0, 0), (1, 1)], 2,
                              max_iters=1)
        assert not r.converged and r.iterations == 1

    def test_trace(self):
        buf = io.StringIO()
        r = label_propagation(PATH, [(0, 0), (2, 1)], 2, trace=buf)
        lines = buf.getvalue().splitlines()
        assert lines[0] == "iteration,max_delta"
        assert len(lines) == r.iterations + 1

    def test_no_labels(self):
        with pytest.raises(PropagationError, match="no labelled"):
            label_propagation(PATH, [], 2)

    def test_isolated_reported(self):
        a = np.zeros((4, 4))
        a[0, 1] = a[1, 0] = 1
        r = label_propagation(a, [(0, 0)], 2)
        assert r.isolated == (2, 3)


class TestClosedForm:
    def test_path(self):
        np.testing.assert_array_equal(closed_form(PATH, [(0, 0), (2, 1)], 2).y[1], [0.5, 0.5])

    def test_fully_labelled(self):
        np.testing.assert_array_equal(closed_form(PATH, [(0, 0), (1, 1), (2, 0)], 2).y, [[1, 0], [0, 1], [1, 0]])

    def test_singular_names_components(self):
        a = sp.block_diag([PATH, np.array([[0, 1], [1, 0]])]).toarray()
        with pytest.raises(PropagationError, match=r"\[\[3, 4\]\]"):
            closed_form(a, [(0, 0)], 1)

    @pytest.mark.parametrize("norm", ["column-row", "row"])
    def test_matches_iteration(self, norm):
        rng = np.random.default_rng(10)
        a = random_connected_graph(rng, 10)
        labels = random_labels(rng, 10, 2)
        it = label_propagation(a, labels, 2, tol=1e-9, normalization=norm)
        np.testing.assert_allclose(it.y, closed_form(a, labels, 2, norm).y, atol=1e-4)

    @settings(max_examples=25, deadline=None)
    @given(st.integers(0, 2**32 - 1), st.integers(1, 20), st.integers(1, 4))
    def test_oracle_property(self, seed, n, m):
        rng = np.random.default_rng(seed)
        n = max(n, m)
        a = random_connected_graph(rng, n)
        labels = random_labels(rng, n, m)
        it = label_propagation(a, labels, m, tol=1e-6)
        assert np.max(np.abs(it.y - closed_form(a, labels, m).y)) <= 1e-4
