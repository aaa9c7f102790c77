"""Shared fixtures and reference implementations for the test suite."""

from __future__ import annotations

import numpy as np
import pytest

from declangevin import (DirectedGraph, NoiseModel, Potential,
                         generate_graph_sequence, step_size)

# Six nodes, three edges: 0 -> 1, 2 -> 3, 5 -> 0.  Small enough to write the
# mixing matrix down by hand, ragged enough to exercise unequal out-degrees
# and nodes with no outgoing edge at all.
SIX_NODE_EDGES = frozenset({(0, 1), (2, 3), (5, 0)})

SIX_NODE_MIXING = np.array([
    [0.5, 0.0, 0.0, 0.0, 0.0, 0.5],
    [0.5, 1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.5, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.5, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.5],
])


@pytest.fixture
def six_node_graph():
    return DirectedGraph(6, SIX_NODE_EDGES)


@pytest.fixture
def alternating_pairs_seq():
    """Four nodes talking in disjoint pairs that swap every iteration.

    Neither graph is strongly connected alone; the union over any window of
    two consecutive iterations is.
    """
    even = DirectedGraph(4, {(0, 1), (1, 0), (2, 3), (3, 2)})
    odd = DirectedGraph(4, {(1, 2), (2, 1), (3, 0), (0, 3)})
    return generate_graph_sequence("periodic-list", 4, 2, graphs=[even, odd])


def reference_ula(grad, sched, seed, num_iters, dim):
    """Plain single-chain unadjusted Langevin iteration.

    Written independently of the network code: one state vector, one seeded
    stream, gradient evaluated before the Gaussian draw, step size taken at
    t + 1.  Returns the iterates stacked as (num_iters + 1, dim) starting
    from zero.
    """
    rng = np.random.default_rng([seed, 0])
    x = np.zeros(dim)
    out = np.zeros((num_iters + 1, dim))
    for t in range(num_iters):
        alpha = step_size(sched, t + 1)
        g = grad(x)
        x = x - alpha * g + np.sqrt(2.0 * alpha) * rng.standard_normal(dim)
        out[t + 1] = x
    return out


class RecordingNoise(NoiseModel):
    """Noise model that remembers every Gaussian vector it hands out.

    Draws are appended in call order, which the update loop fixes as agent
    0..m-1 within each iteration, so ``stacked(m, d)`` recovers the
    (num_iters, m, d) block structure.
    """

    def __init__(self, seed, num_agents, sigma_sq=0.0):
        super().__init__(seed, num_agents, sigma_sq)
        self.draws = []

    def gaussian(self, agent, dim):
        vec = super().gaussian(agent, dim)
        self.draws.append(vec.copy())
        return vec

    def stacked(self, num_agents, dim):
        return np.asarray(self.draws).reshape(-1, num_agents, dim)


class RecordingPotential(Potential):
    """Wraps a potential and remembers every gradient it returns."""

    def __init__(self, inner):
        self.inner = inner
        self.props = inner.props
        self.grads = []

    def grad(self, agent, z, rng):
        g = self.inner.grad(agent, z, rng)
        self.grads.append(np.asarray(g, dtype=float).copy())
        return g

    def stacked(self, num_agents, dim):
        return np.asarray(self.grads).reshape(-1, num_agents, dim)


def central_fd(f, x, h=1e-5):
    """Central finite-difference gradient of a scalar function."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for j in range(x.size):
        e = np.zeros_like(x)
        e[j] = h
        g[j] = (f(x + e) - f(x - e)) / (2.0 * h)
    return g
