"""Push-sum mixing of weighted agent states.

Each agent carries a value vector x, a scalar weight y, the freshly mixed
numerator w and the ratio estimate z = w / y.  One mixing round follows the
neighbor-sum form: every agent j splits x_j and y_j evenly over its
out-neighborhood (itself included) and every receiver i adds up what
arrives.  The ratio z corrects the directional bias of the raw averages, and
the total weight sum stays equal to the number of agents forever.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .graphs import MixingMatrix

__all__ = [
    "AgentState",
    "NetworkState",
    "init_network",
    "pushsum_mix",
    "consensus_error",
]

# below this weight the ratio w/y is numerically meaningless
Y_FLOOR = 1e-300


@dataclass(frozen=True)
class AgentState:
    """Read-only view of one agent's (x, y, w, z) quadruple."""

    x: np.ndarray
    y: float
    w: np.ndarray
    z: np.ndarray


@dataclass(frozen=True)
class NetworkState:
    """Stacked state of all agents at one iteration.

    Rows index agents: ``x`` and ``w`` are (m, d), ``y`` is (m,), ``z`` is
    (m, d) and ``t`` counts completed iterations.
    """

    x: np.ndarray
    y: np.ndarray
    w: np.ndarray
    z: np.ndarray
    t: int

    def __post_init__(self):
        m, d = self.x.shape
        if self.y.shape != (m,) or self.w.shape != (m, d) or self.z.shape != (m, d):
            raise ValueError("inconsistent state array shapes")
        if self.t < 0:
            raise ValueError("iteration counter must be nonnegative")

    @property
    def num_agents(self) -> int:
        return self.x.shape[0]

    @property
    def dim(self) -> int:
        return self.x.shape[1]

    def agent(self, i: int) -> AgentState:
        if not 0 <= i < self.num_agents:
            raise ValueError(f"agent {i} out of range")
        return AgentState(x=self.x[i], y=float(self.y[i]), w=self.w[i], z=self.z[i])


def init_network(num_agents: int, dim: int) -> NetworkState:
    """Fresh network state: all vectors zero, unit weights, t = 0."""
    if num_agents < 1 or dim < 1:
        raise ValueError("num_agents and dim must be at least 1")
    return NetworkState(
        x=np.zeros((num_agents, dim)),
        y=np.ones(num_agents),
        w=np.zeros((num_agents, dim)),
        z=np.zeros((num_agents, dim)),
        t=0,
    )


def pushsum_mix(ns: NetworkState, mix: MixingMatrix) -> NetworkState:
    """One push-sum round over the given mixing topology.

    Every agent j contributes x_j / d_j and y_j / d_j to each of its
    out-neighbors and to itself, where d_j is j's out-degree including the
    self-loop.  The receiver sums are accumulated neighbor by neighbor.
    Returns a state with fresh w, y, z; x and t are left untouched so the
    caller decides how to close the loop.

    Raises
    ------
    ValueError
        If the graph size does not match the state.
    FloatingPointError
        If any weight falls below a representable floor, which would make
        the ratio z meaningless.
    """
    g = mix.graph
    m = ns.num_agents
    if g.num_nodes != m:
        raise ValueError(f"graph has {g.num_nodes} nodes but the state has {m} agents")

    degs = g.out_degrees
    share_x = ns.x / degs[:, None]
    share_y = ns.y / degs

    w_new = np.zeros_like(ns.x)
    y_new = np.zeros_like(ns.y)
    for i, nbrs in enumerate(g.in_neighbors):
        for j in nbrs:
            w_new[i] += share_x[j]
            y_new[i] += share_y[j]

    if np.any(y_new < Y_FLOOR):
        bad = int(np.argmin(y_new))
        raise FloatingPointError(
            f"push-sum weight underflow at agent {bad} (y={y_new[bad]:.3e}, t={ns.t})")

    z_new = w_new / y_new[:, None]
    return replace(ns, w=w_new, y=y_new, z=z_new)


def consensus_error(ns: NetworkState) -> np.ndarray:
    """Per-agent distance ||z_i - xbar||_2 from the network average.

    The ratio estimates z are the agents' working values, so this is the
    disagreement that matters; the raw x_i converge to weighted mass shares
    rather than to the average.  When called right after
    :func:`pushsum_mix`, x still holds the previous iteration's values and
    the result is exactly the deviation the mixing bound controls.
    """
    xbar = ns.x.mean(axis=0)
    return np.linalg.norm(ns.z - xbar, axis=1)
