"""Label propagation with clamped labelled nodes, and its closed-form fixed point."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence, TextIO

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.sparse.csgraph import connected_components


class PropagationError(ValueError):
    pass


@dataclass(eq=False)
class LabelMatrix:
    y: np.ndarray
    labeled: np.ndarray  # node indices whose rows are clamped
    iterations: int = 0
    converged: bool = True
    isolated: tuple[int, ...] = ()  # unlabelled nodes with no incident weight

    def predictions(self) -> np.ndarray:
        """Argmax class per node, lowest class index on ties."""
        return np.argmax(self.y, axis=1)


NORMALIZATIONS = ("column-row", "row")


def build_transition(a, normalization: str = "column-row") -> sp.csr_matrix:
    """Row-stochastic transition matrix of a weighted graph.

    ``"column-row"`` column-normalises the weights and then row-normalises the
    result. ``"row"`` row-normalises the weights directly, so each row keeps the
    proportions of the node's incident edge weights. A node with no incident
    weight gets a self-loop row so it keeps its label distribution.
    """
    if normalization not in NORMALIZATIONS:
        raise PropagationError(f"unknown normalization {normalization!r}")
    t = sp.csr_matrix(a, dtype=float)
    if normalization == "column-row":
        col = np.asarray(t.sum(axis=0)).ravel()
        inv_col = np.divide(1.0, col, out=np.zeros_like(col), where=col > 0)
        t = (t @ sp.diags(inv_col)).tocsr()
    row = np.asarray(t.sum(axis=1)).ravel()
    inv_row = np.divide(1.0, row, out=np.zeros_like(row), where=row > 0)
    t_bar = (sp.diags(inv_row) @ t).tocsr()
    dead = np.flatnonzero(row == 0)
    if len(dead):
        t_bar = (t_bar + sp.csr_matrix((np.ones(len(dead)), (dead, dead)), shape=t_bar.shape)).tocsr()
    t_bar.sort_indices()
    return t_bar


def _check_labels(n: int, labeled: Sequence[tuple[int, int]], m: int) -> tuple[np.ndarray, np.ndarray]:
    if not len(labeled):
        raise PropagationError("no labelled nodes")
    nodes = np.array([int(i) for i, _ in labeled], dtype=np.int64)
    classes = np.array([int(c) for _, c in labeled], dtype=np.int64)
    if len(np.unique(nodes)) != len(nodes):
        raise PropagationError("labelled node indices must be distinct")
    if nodes.min() < 0 or nodes.max() >= n:
        raise PropagationError("labelled node index out of range")
    if classes.min() < 0 or classes.max() >= m:
        raise PropagationError("class index out of range")
    return nodes, classes


def label_propagation(
    a,
    labeled: Sequence[tuple[int, int]],
    m: int,
    tol: float = 1e-6,
    max_iters: int = 10000,
    y0: np.ndarray | None = None,
    trace: TextIO | None = None,
    normalization: str = "column-row",
) -> LabelMatrix:
    """Iterate Y <- T_bar Y, resetting labelled rows after every step.

    Unlabelled rows start uniform unless ``y0`` is given. Stops when the
    largest entry change drops below ``tol``; hitting ``max_iters`` first is
    reported through ``converged`` rather than raised.
    """
    t_bar = build_transition(a, normalization)
    n = t_bar.shape[0]
    nodes, classes = _check_labels(n, labeled, m)
    clamp = np.zeros((len(nodes), m))
    clamp[np.arange(len(nodes)), classes] = 1.0

    y = np.full((n, m), 1.0 / m) if y0 is None else np.array(y0, dtype=float, copy=True)
    y[nodes] = clamp

    mask = np.zeros(n, dtype=bool)
    mask[nodes] = True
    degree = np.asarray(abs(sp.csr_matrix(a)).sum(axis=1)).ravel()
    isolated = tuple(int(i) for i in np.flatnonzero((degree == 0) & ~mask))

    if trace is not None:
        trace.write("iteration,max_delta\n")
    converged = False
    it = 0
    while it < max_iters:
        nxt = t_bar @ y
        nxt[nodes] = clamp
        delta = float(np.max(np.abs(nxt - y))) if y.size else 0.0
        y = nxt
        it += 1
        if __debug__ and y0 is None:
            assert np.allclose(y.sum(axis=1), 1.0, atol=1e-6)
        if trace is not None:
            trace.write(f"{it},{delta!r}\n")
        if delta < tol:
            converged = True
            break
    return LabelMatrix(y=y, labeled=nodes, iterations=it, converged=converged, isolated=isolated)


def closed_form(
    a, labeled: Sequence[tuple[int, int]], m: int, normalization: str = "column-row"
) -> LabelMatrix:
    """Exact fixed point Y_U = (I - T_UU)^-1 T_UL Y_L of the clamped iteration."""
    a = sp.csr_matrix(a, dtype=float)
    n = a.shape[0]
    nodes, classes = _check_labels(n, labeled, m)
    mask = np.zeros(n, dtype=bool)
    mask[nodes] = True

    n_comp, comp = connected_components(a, directed=False)
    has_label = np.zeros(n_comp, dtype=bool)
    has_label[comp[nodes]] = True
    stranded = [c for c in range(n_comp) if not has_label[c]]
    if stranded:
        groups = [np.flatnonzero(comp == c).tolist() for c in stranded]
        raise PropagationError(f"singular system: components without labelled nodes {groups}")

    y = np.zeros((n, m))
    y[nodes, classes] = 1.0
    unl = np.flatnonzero(~mask)
    if len(unl):
        t_bar = build_transition(a, normalization)
        t_uu = t_bar[unl][:, unl]
        t_ul = t_bar[unl][:, nodes]
        lhs = (sp.identity(len(unl), format="csc") - t_uu).tocsc()
        rhs = t_ul @ y[nodes]
        sol = spla.spsolve(lhs, rhs)
        y[unl] = np.asarray(sol).reshape(len(unl), m)
    return LabelMatrix(y=y, labeled=nodes, iterations=0, converged=True)
