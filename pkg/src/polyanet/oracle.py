"""Exact probability computations on small instances.

These enumerate draw histories, so they are exponential in (nodes x steps)
and guarded by explicit caps; they serve as optimizer objectives and as
ground truth for the Monte Carlo harness.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .engine import UrnState, as_schedule
from .graph import Network

DEFAULT_ENUMERATION_CAP = 24


class EnumerationCapError(ValueError):
    """Requested enumeration is too large; use the Monte Carlo harness instead."""

    def __init__(self, bits, cap):
        super().__init__(
            f"enumeration over 2^{bits} histories exceeds the cap 2^{cap}; "
            f"raise the cap or estimate by Monte Carlo (harness.run_experiment)"
        )


@dataclass(frozen=True)
class PathProbability:
    """A full draw history (node x time) and its probability mass."""

    history: np.ndarray
    probability: float


@lru_cache(maxsize=16)
def _patterns(width: int) -> np.ndarray:
    """All 0/1 row vectors of the given width, in lexicographic order."""
    if width == 0:
        return np.zeros((1, 0), dtype=np.int8)
    return np.array(list(itertools.product((0, 1), repeat=width)), dtype=np.int8)


def _outcome_probabilities(exposure: np.ndarray) -> np.ndarray:
    """Probability of every joint draw vector given per-node red probabilities."""
    pat = _patterns(exposure.shape[0])
    return np.prod(np.where(pat == 1, exposure, 1.0 - exposure), axis=1)


def joint_probability(net: Network, red_init, black_init, schedule, history) -> float:
    """Probability of one complete draw history.

    ``history`` has shape (node_count, steps); the probability is the product
    over time of the per-node super-urn proportions (or their complements)
    along the replayed trajectory.
    """
    history = np.asarray(history)
    if history.ndim != 2 or history.shape[0] != net.node_count:
        raise ValueError(
            f"history must have shape (node_count={net.node_count}, steps), got {history.shape}"
        )
    sched = as_schedule(schedule)
    state = UrnState(net, red_init, black_init)
    prob = 1.0
    for t in range(history.shape[1]):
        z = history[:, t]
        s = state.exposure
        prob *= float(np.prod(np.where(z == 1, s, 1.0 - s)))
        if prob == 0.0:
            return 0.0
        state.advance(z, *sched(t + 1, state))
    return prob


def _walk_histories(net, red_init, black_init, schedule, steps):
    """Depth-first enumeration of all draw histories of the given length.

    Yields ``(history_columns, probability, state)`` at the leaves, where
    ``state`` is the urn state after the full history.  Zero-probability
    branches are pruned; they contribute no mass.
    """
    sched = as_schedule(schedule)
    root = UrnState(net, red_init, black_init)

    def rec(state, prob, depth, cols):
        if depth == steps:
            yield cols, prob, state
            return
        probs = _outcome_probabilities(state.exposure)
        pat = _patterns(net.node_count)
        dr, db = sched(depth + 1, state)
        for k in np.flatnonzero(probs > 0.0):
            child = state.copy()
            child.advance(pat[k], dr, db)
            yield from rec(child, prob * float(probs[k]), depth + 1, cols + [pat[k]])

    yield from rec(root, 1.0, 0, [])


def iter_path_probabilities(net: Network, red_init, black_init, schedule, steps: int,
                            cap: int = DEFAULT_ENUMERATION_CAP):
    """Yield a :class:`PathProbability` for every positive-mass history."""
    bits = net.node_count * steps
    if bits > cap:
        raise EnumerationCapError(bits, cap)
    for cols, prob, _ in _walk_histories(net, red_init, black_init, schedule, steps):
        hist = np.stack(cols, axis=1) if cols else np.zeros((net.node_count, 0), dtype=np.int8)
        yield PathProbability(hist, prob)


def partition_sanity(net: Network, red_init, black_init, schedule, steps: int,
                     cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Total mass over all histories of the given length; should be 1."""
    return float(sum(p.probability for p in
                     iter_path_probabilities(net, red_init, black_init, schedule, steps, cap)))


def average_infection_rate(net: Network, red_init, black_init, schedule, n: int,
                           cap: int = DEFAULT_ENUMERATION_CAP) -> float:
    """Exact mean over nodes of the marginal red-draw probability at time n.

    Enumerates the 2^(node_count*(n-1)) histories of the first n-1 steps and
    averages the resulting super-urn proportions, weighted by history mass.
    """
    if n < 1:
        raise ValueError("time index n must be >= 1")
    bits = net.node_count * (n - 1)
    if bits > cap:
        raise EnumerationCapError(bits, cap)
    acc = np.zeros(net.node_count)
    for _, prob, state in _walk_histories(net, red_init, black_init, schedule, n - 1):
        acc += prob * state.exposure
    return float(acc.mean())


def infection_rate_time1(net: Network, red_init, black_init):
    """Time-1 average infection rate and its gradient in the black masses.

    The value is the mean over nodes of the initial super-urn red
    proportion.  Adding black mass at node j lowers the proportion of every
    super urn containing j, giving the closed-form gradient returned here.
    Requires positive super-urn red mass everywhere.
    """
    n = net.node_count
    red = np.broadcast_to(np.asarray(red_init, dtype=float), (n,))
    black = np.broadcast_to(np.asarray(black_init, dtype=float), (n,))
    if (red < 0).any() or (black < 0).any():
        raise ValueError("ball masses must be nonnegative")
    super_red = net.closed_adjacency @ red
    if (super_red <= 0).any():
        bad = (np.flatnonzero(super_red <= 0) + 1).tolist()
        raise ValueError(f"super-urn red mass must be positive everywhere; zero at nodes {bad}")
    super_total = super_red + net.closed_adjacency @ black
    value = float(np.mean(super_red / super_total))
    grad = -(net.closed_adjacency @ (super_red / super_total**2)) / n
    return value, grad


class ExposureObjective:
    """One-step expected network exposure as a function of the pending
    reinforcement vectors, with exact gradients.

    Given the state after n-1 steps, the next draw of each node is red with
    its current super-urn proportion, independently across nodes.  Each
    node's contribution therefore factorizes over the joint outcomes of its
    closed neighbourhood; nodes whose neighbourhood exceeds ``degree_cap``
    fall back to a seeded Monte Carlo sample of outcomes.

    The objective is convex in the curing (black) vector ``x`` and concave
    in the infection (red) vector ``y``.
    """

    def __init__(self, state: UrnState, *, degree_cap: int = 20,
                 mc_samples: int = 100_000, seed: int = 0):
        net = state.net
        exposure = state.exposure
        rows_y = []      # coefficient pattern of y (red outcomes)
        rows_x = []      # coefficient pattern of x (black outcomes)
        cols = []
        weights = []
        c_rep = []
        d_rep = []
        row_offset = 0
        rng = np.random.default_rng(seed)
        indptr_rows = []
        for i in range(net.node_count):
            nbrs = net.closed_neighbors[i]
            s = exposure[nbrs]
            if nbrs.shape[0] <= degree_cap:
                pat = _patterns(nbrs.shape[0]).astype(float)
                w = np.prod(np.where(pat == 1, s, 1.0 - s), axis=1)
            else:
                pat = (rng.random((mc_samples, nbrs.shape[0])) < s).astype(float)
                w = np.full(pat.shape[0], 1.0 / pat.shape[0])
            k = pat.shape[0]
            rows_y.append(pat)
            rows_x.append(1.0 - pat)
            cols.append(np.tile(nbrs, (k, 1)))
            weights.append(w)
            c_rep.append(np.full(k, state.super_red[i]))
            d_rep.append(np.full(k, state.super_black[i]))
            indptr_rows.append((row_offset, row_offset + k))
            row_offset += k
        import scipy.sparse as sp

        def build(blocks):
            data = np.concatenate([b.ravel() for b in blocks])
            col = np.concatenate([c.ravel() for c in cols])
            row = np.concatenate([
                np.repeat(np.arange(lo, hi), c.shape[1])
                for (lo, hi), c in zip(indptr_rows, cols)
            ])
            mat = sp.coo_matrix((data, (row, col)), shape=(row_offset, net.node_count))
            return mat.tocsr()

        self._my = build(rows_y)
        self._mx = build(rows_x)
        self._w = np.concatenate(weights)
        self._c = np.concatenate(c_rep)
        self._d = np.concatenate(d_rep)
        self._n = net.node_count

    def value(self, x, y) -> float:
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        num = self._c + self._my @ y
        den = num + self._d + self._mx @ x
        return float(self._w @ (num / den)) / self._n

    def value_and_gradients(self, x, y):
        """Objective value with gradients in the curing and infection vectors."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        num = self._c + self._my @ y
        blk = self._d + self._mx @ x
        den = num + blk
        value = float(self._w @ (num / den)) / self._n
        grad_x = -(self._mx.T @ (self._w * num / den**2)) / self._n
        grad_y = (self._my.T @ (self._w * blk / den**2)) / self._n
        return value, grad_x, grad_y


def expected_exposure(state: UrnState, curing_step, infection_step, *,
                      degree_cap: int = 20, mc_samples: int = 100_000, seed: int = 0):
    """One-shot expected exposure: ``(value, grad_curing, grad_infection)``."""
    obj = ExposureObjective(state, degree_cap=degree_cap, mc_samples=mc_samples, seed=seed)
    n = state.node_count
    x = np.broadcast_to(np.asarray(curing_step, dtype=float), (n,))
    y = np.broadcast_to(np.asarray(infection_step, dtype=float), (n,))
    return obj.value_and_gradients(x, y)
