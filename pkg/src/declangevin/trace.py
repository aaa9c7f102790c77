"""Run traces and their CSV serialization.

A trace keeps thinned state snapshots plus the unthinned per-step series the
bound monitors need.  CSV files start with '#'-prefixed key=value metadata
lines followed by a header row and data rows; all numbers are written with
shortest round-trip precision so identical runs serialize to identical
bytes.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

__all__ = ["Trace", "write_csv"]


@dataclass
class Trace:
    """Recorded history of one sampling run.

    ``ts`` holds the recorded iteration indices (0, stride, 2*stride, ...),
    ``alphas`` the schedule value at each recorded index, ``states`` the
    (n_rec, m, d) agent samples (the ratio estimates z, which are what the
    agents treat as their draws) and ``consensus`` the (n_rec, m) distances
    of those estimates to the network average.  ``z_dev`` and ``pert_norms`` are unthinned
    (num_iters, m) series: row s measures the step from iteration s to s+1,
    namely ||z_i(s+1) - xbar(s)|| and the norm of the update each agent
    applied on top of its mixed value.  ``metrics`` maps a name to an
    (indices, values) pair for any scalar series attached after the run.
    """

    ts: np.ndarray
    alphas: np.ndarray
    states: np.ndarray
    consensus: np.ndarray
    z_dev: np.ndarray
    pert_norms: np.ndarray
    num_iters: int
    stride: int
    metrics: dict = field(default_factory=dict)

    def __post_init__(self):
        n_rec = len(self.ts)
        if n_rec != self.num_iters // self.stride + 1:
            raise ValueError("record count does not match num_iters // stride + 1")
        if np.any(np.diff(self.ts) <= 0):
            raise ValueError("recorded iteration indices must increase strictly")
        if self.states.shape[0] != n_rec or self.consensus.shape[0] != n_rec:
            raise ValueError("snapshot arrays do not match the record grid")
        if self.z_dev.shape != self.pert_norms.shape or self.z_dev.shape[0] != self.num_iters:
            raise ValueError("per-step series must have one row per iteration")

    @property
    def num_agents(self) -> int:
        return self.states.shape[1]

    @property
    def dim(self) -> int:
        return self.states.shape[2]


def _format(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_csv(path, metadata: dict, header, rows) -> None:
    """Write a metadata-plus-table CSV file.

    Parameters
    ----------
    path : str or Path
        Output file, overwritten if present.
    metadata : dict
        Written first as '# key=value' comment lines, in insertion order.
        Keep values free of newlines; no timestamps belong here, the same
        inputs must produce the same bytes.
    header : sequence of str
        Column names.
    rows : iterable of sequences
        Row values; floats are written with repr so they parse back exactly.
    """
    with open(path, "w", newline="") as fh:
        for key, value in metadata.items():
            fh.write(f"# {key}={_format(value)}\r\n")
        writer = csv.writer(fh)
        writer.writerow(list(header))
        for row in rows:
            writer.writerow([_format(v) for v in row])
