"""Stochastic urn dynamics on a network.

Every node holds an urn of red ("infection") and black ("healthy") ball
mass.  A node's *super urn* pools the urns of its closed neighbourhood.  At
each time step every node draws from its super urn by comparing a uniform
variate against the super-urn red proportion, then adds reinforcement mass
of the drawn colour to its own urn.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .graph import Network

# Periodically rebuild the super-urn sums from the per-node masses so that
# incremental float accumulation cannot drift over very long runs.
REBUILD_INTERVAL = 1 << 16


def as_schedule(schedule):
    """Normalize a reinforcement schedule to a callable ``(t, state) -> (dr, db)``.

    Accepts a callable as-is, or a ``(delta_red, delta_black)`` pair of
    scalars/arrays treated as constant over time.
    """
    if callable(schedule):
        return schedule
    dr, db = schedule
    dr = np.asarray(dr, dtype=float)
    db = np.asarray(db, dtype=float)
    return lambda t, state: (dr, db)


class UrnState:
    """Mutable urn masses for every node of a network at a given time.

    Parameters
    ----------
    net : Network
    red_init, black_init : array-like or scalar
        Nonnegative initial ball masses per node.  Every node must have
        positive total mass and a nonempty super urn.
    keep_history : bool, optional
        Retain the draw matrix and per-step proportion snapshots (needed for
        trace export and from-scratch cross-checks; off by default since the
        running metrics do not require it).
    """

    def __init__(self, net: Network, red_init, black_init, *, keep_history: bool = False):
        n = net.node_count
        red = np.broadcast_to(np.asarray(red_init, dtype=float), (n,)).copy()
        black = np.broadcast_to(np.asarray(black_init, dtype=float), (n,)).copy()
        if (red < 0).any() or (black < 0).any():
            raise ValueError("ball masses must be nonnegative")
        total = red + black
        if (total <= 0).any():
            bad = (np.flatnonzero(total <= 0) + 1).tolist()
            raise ValueError(f"empty urn at nodes {bad}: every node needs positive total mass")
        self.net = net
        self.red = red
        self.total = total
        self.super_red = net.closed_adjacency @ red
        self.super_total = net.closed_adjacency @ total
        if (self.super_total <= 0).any():
            bad = (np.flatnonzero(self.super_total <= 0) + 1).tolist()
            raise ValueError(f"empty super urn at nodes {bad}")
        self.time = 0
        self.keep_history = keep_history
        self.draw_log: list[np.ndarray] = []
        self.susceptibility_log: list[np.ndarray] = []
        self.exposure_log: list[np.ndarray] = []
        self._steps_since_rebuild = 0

    @property
    def node_count(self) -> int:
        return self.net.node_count

    @property
    def exposure(self) -> np.ndarray:
        """Red proportion of each super urn (the next draw probabilities)."""
        return self.super_red / self.super_total

    @property
    def susceptibility(self) -> np.ndarray:
        """Red proportion of each individual urn."""
        return self.red / self.total

    @property
    def super_black(self) -> np.ndarray:
        return self.super_total - self.super_red

    def copy(self) -> "UrnState":
        dup = object.__new__(UrnState)
        dup.net = self.net
        dup.red = self.red.copy()
        dup.total = self.total.copy()
        dup.super_red = self.super_red.copy()
        dup.super_total = self.super_total.copy()
        dup.time = self.time
        dup.keep_history = self.keep_history
        dup.draw_log = list(self.draw_log)
        dup.susceptibility_log = list(self.susceptibility_log)
        dup.exposure_log = list(self.exposure_log)
        dup._steps_since_rebuild = self._steps_since_rebuild
        return dup

    def draw(self, uniforms, strict: bool = False) -> np.ndarray:
        """Draw colours for every node from per-node uniforms; no state change.

        A node draws red when its uniform is <= its super-urn red proportion.
        ``strict`` switches the comparison to ``<``, the mirrored convention
        used when running a colour-swapped process on ``1 - uniforms`` so the
        boundary case maps consistently.
        """
        uniforms = np.asarray(uniforms, dtype=float)
        s = self.exposure
        z = (uniforms < s) if strict else (uniforms <= s)
        return z.astype(np.int8)

    def advance(self, draws, delta_red, delta_black) -> None:
        """Apply a draw vector: add reinforcement of the drawn colour to each
        node's urn and update the super-urn sums incrementally."""
        z = np.asarray(draws)
        n = self.node_count
        dr = np.asarray(delta_red, dtype=float)
        db = np.asarray(delta_black, dtype=float)
        if dr.shape != (n,):
            dr = np.broadcast_to(dr, (n,))
        if db.shape != (n,):
            db = np.broadcast_to(db, (n,))
        if (dr < 0).any() or (db < 0).any():
            raise ValueError("reinforcement masses must be nonnegative")
        red_add = np.where(z == 1, dr, 0.0)
        total_add = np.where(z == 1, dr, db)
        self.red += red_add
        self.total += total_add
        self.super_red += self.net.closed_adjacency @ red_add
        self.super_total += self.net.closed_adjacency @ total_add
        self.time += 1
        self._steps_since_rebuild += 1
        if self._steps_since_rebuild >= REBUILD_INTERVAL:
            self.rebuild()
        if self.keep_history:
            self.draw_log.append(np.asarray(z, dtype=np.int8).copy())
            self.susceptibility_log.append(self.susceptibility)
            self.exposure_log.append(self.exposure)

    def step(self, uniforms, delta_red, delta_black, strict: bool = False) -> np.ndarray:
        """Draw every node once and apply the reinforcements; returns draws."""
        z = self.draw(uniforms, strict=strict)
        self.advance(z, delta_red, delta_black)
        return z

    def rebuild(self) -> None:
        """Recompute super-urn sums from the per-node masses."""
        self.super_red = self.net.closed_adjacency @ self.red
        self.super_total = self.net.closed_adjacency @ self.total
        self._steps_since_rebuild = 0

    def metrics(self):
        """Network susceptibility and exposure: ``(U_mean, S_mean, U, S)``."""
        u = self.susceptibility
        s = self.exposure
        return float(u.mean()), float(s.mean()), u, s

    # -- history-backed exports ------------------------------------------

    def _require_history(self):
        if not self.keep_history:
            raise ValueError("state was created with keep_history=False")

    def draw_history(self) -> np.ndarray:
        """Draw matrix with shape (node_count, time)."""
        self._require_history()
        if not self.draw_log:
            return np.zeros((self.node_count, 0), dtype=np.int8)
        return np.stack(self.draw_log, axis=1)

    def write_trace_csv(self, path) -> Path:
        """Per-(time, node) trace: draw, urn proportion, super-urn proportion."""
        self._require_history()
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "node", "Z", "U", "S"])
            for t, (z, u, s) in enumerate(
                    zip(self.draw_log, self.susceptibility_log, self.exposure_log), start=1):
                for i in range(self.node_count):
                    w.writerow([t, i + 1, int(z[i]), repr(float(u[i])), repr(float(s[i]))])
        return path

    def write_summary_csv(self, path) -> Path:
        """Per-time summary: mean urn / super-urn proportions, fraction infected."""
        self._require_history()
        path = Path(path)
        with path.open("w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["time", "susceptibility", "exposure", "fraction_infected"])
            for t, (z, u, s) in enumerate(
                    zip(self.draw_log, self.susceptibility_log, self.exposure_log), start=1):
                w.writerow([t, repr(float(u.mean())), repr(float(s.mean())),
                            repr(float(z.mean()))])
        return path


def run_trial(net: Network, red_init, black_init, schedule, uniforms,
              *, strict: bool = False, keep_history: bool = False):
    """Run one trial with an explicit matrix of uniforms.

    ``uniforms`` has shape (node_count, steps); column t drives the draws at
    time t+1.  Returns ``(state, draws)`` where draws has the same shape.
    """
    sched = as_schedule(schedule)
    uniforms = np.asarray(uniforms, dtype=float)
    state = UrnState(net, red_init, black_init, keep_history=keep_history)
    steps = uniforms.shape[1]
    draws = np.empty((net.node_count, steps), dtype=np.int8)
    for t in range(steps):
        dr, db = sched(t + 1, state)
        draws[:, t] = state.step(uniforms[:, t], dr, db, strict=strict)
    return state, draws
