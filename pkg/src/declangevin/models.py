"""Data models for the three inference experiments.

Holds dataset containers, seeded generators, the per-model potential
gradients, a libsvm-format loader and the sharding used to spread data over
agents.  Gradient conventions: U is the negative log posterior, so all
gradients returned here are descent directions for sampling; minibatch
estimates are rescaled by shard/batch size so they stay unbiased for the
shard's full-data gradient.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import expit

from .langevin import Potential, PotentialProps

__all__ = [
    "Dataset",
    "Shard",
    "GaussianDist",
    "ParseError",
    "generate_linreg_data",
    "linreg_posterior",
    "grad_U_linreg",
    "generate_mixture_data",
    "grad_U_mixture",
    "grad_U_logistic",
    "load_libsvm",
    "save_libsvm",
    "make_surrogate_classification",
    "partition",
    "LinRegPotential",
    "MixturePotential",
    "LogisticPotential",
    "GaussianPotential",
]


class ParseError(ValueError):
    """Malformed input file; the message carries the offending line number."""


@dataclass(frozen=True)
class Dataset:
    """Feature matrix plus per-row targets.

    ``features`` is (n, d); ``targets`` is length n and holds labels in
    {-1, +1} for classification, real responses for regression, or the raw
    sample values for the mixture model (mirrored into a single feature
    column so both access patterns work).
    """

    features: np.ndarray
    targets: np.ndarray

    def __post_init__(self):
        feats = np.asarray(self.features, dtype=float)
        targs = np.asarray(self.targets, dtype=float)
        if feats.ndim != 2:
            raise ValueError("features must be a 2-d array")
        if targs.shape != (feats.shape[0],):
            raise ValueError("targets length must match the number of rows")
        if not (np.isfinite(feats).all() and np.isfinite(targs).all()):
            raise ValueError("dataset contains non-finite values")
        object.__setattr__(self, "features", feats)
        object.__setattr__(self, "targets", targs)

    @property
    def n(self) -> int:
        return self.features.shape[0]

    @property
    def dim(self) -> int:
        return self.features.shape[1]


@dataclass(frozen=True)
class Shard:
    """One agent's slice of a dataset, by row indices."""

    agent: int
    indices: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "indices", np.asarray(self.indices, dtype=np.int64))


@dataclass(frozen=True)
class GaussianDist:
    """Multivariate normal given by mean and SPD covariance."""

    mean: np.ndarray
    cov: np.ndarray

    def __post_init__(self):
        mean = np.atleast_1d(np.asarray(self.mean, dtype=float))
        cov = np.atleast_2d(np.asarray(self.cov, dtype=float))
        if cov.shape != (mean.shape[0], mean.shape[0]):
            raise ValueError("covariance shape must match the mean")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-10):
            raise ValueError("covariance must be symmetric")
        if np.linalg.eigvalsh(cov).min() <= 0:
            raise ValueError("covariance must be positive definite")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "cov", cov)

    @property
    def dim(self) -> int:
        return self.mean.shape[0]


def generate_linreg_data(n: int, dim: int, sigma: float, true_w: np.ndarray,
                         seed: int) -> Dataset:
    """Gaussian-design linear regression data y = X w + sigma * noise.

    Rows of X are standard normal; ``sigma`` is the response noise standard
    deviation.
    """
    if n < 1 or dim < 1:
        raise ValueError("n and dim must be at least 1")
    if sigma < 0:
        raise ValueError("sigma must be nonnegative")
    true_w = np.asarray(true_w, dtype=float)
    if true_w.shape != (dim,):
        raise ValueError("true_w must have length dim")
    rng = np.random.default_rng(seed)
    feats = rng.standard_normal((n, dim))
    targs = feats @ true_w + sigma * rng.standard_normal(n)
    return Dataset(features=feats, targets=targs)


def linreg_posterior(ds: Dataset, prior: GaussianDist, sigma: float) -> GaussianDist:
    """Conjugate Gaussian posterior of the regression weights.

    Precision adds X^T X / sigma^2 to the prior precision; an empty dataset
    returns the prior unchanged.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    feats, targs = ds.features, ds.targets
    prior_prec = np.linalg.inv(prior.cov)
    prec = prior_prec + feats.T @ feats / sigma ** 2
    cov = np.linalg.inv(prec)
    cov = 0.5 * (cov + cov.T)
    mean = cov @ (prior_prec @ prior.mean + feats.T @ targs / sigma ** 2)
    return GaussianDist(mean=mean, cov=cov)


def grad_U_linreg(z: np.ndarray, batch_features: np.ndarray, batch_targets: np.ndarray,
                  prior: GaussianDist, sigma: float, scale: float = 1.0) -> np.ndarray:
    """Gradient of the negative log posterior for linear regression.

    scale * X_b^T (X_b z - y_b) / sigma^2 + Sigma0^{-1} (z - mu0), where
    ``scale`` is the shard-to-batch size ratio that keeps the minibatch
    estimate unbiased.  An empty batch leaves only the prior term.
    """
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    z = np.asarray(z, dtype=float)
    prior_term = np.linalg.solve(prior.cov, z - prior.mean)
    if batch_features.shape[0] == 0:
        return prior_term
    resid = batch_features @ z - batch_targets
    return scale * (batch_features.T @ resid) / sigma ** 2 + prior_term


def generate_mixture_data(n: int, theta1: float, theta2: float, sigma_x: float,
                          seed: int) -> Dataset:
    """Samples from the two-component location mixture.

    Each draw is N(theta1, sigma_x^2) or N(theta1 + theta2, sigma_x^2) with
    equal probability; ``sigma_x`` is the component standard deviation.  The
    raw samples land in ``targets`` with a mirroring (n, 1) feature column.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if sigma_x <= 0:
        raise ValueError("sigma_x must be positive")
    rng = np.random.default_rng(seed)
    comp = rng.integers(0, 2, size=n)
    samples = theta1 + comp * theta2 + sigma_x * rng.standard_normal(n)
    return Dataset(features=samples[:, None], targets=samples)


def grad_U_mixture(theta: np.ndarray, batch: np.ndarray, sigma_x: float = np.sqrt(2.0),
                   prior_vars: tuple = (10.0, 1.0), scale: float = 1.0) -> np.ndarray:
    """Gradient of the negative log posterior of the location mixture.

    ``theta`` stacks (theta1, theta2); ``batch`` holds raw sample values.
    Component responsibilities are evaluated through the log-density
    difference with a saturating sigmoid, so far-out samples cannot
    overflow.  Independent zero-mean Gaussian priors with variances
    ``prior_vars`` close the posterior.
    """
    if sigma_x <= 0:
        raise ValueError("sigma_x must be positive")
    a, b = float(theta[0]), float(theta[1])
    x = np.asarray(batch, dtype=float).ravel()
    s2 = sigma_x ** 2
    d1 = x - a
    d2 = x - a - b
    # log N(x; a+b) - log N(x; a), feeding the responsibility of component 2
    r2 = expit((d1 ** 2 - d2 ** 2) / (2.0 * s2))
    g1 = -scale * np.sum(d1 - r2 * b) / s2 + a / prior_vars[0]
    g2 = -scale * np.sum(r2 * d2) / s2 + b / prior_vars[1]
    return np.array([g1, g2])


def grad_U_logistic(w: np.ndarray, batch_features: np.ndarray, batch_targets: np.ndarray,
                    scale: float = 1.0) -> np.ndarray:
    """Gradient of the negative log posterior for logistic regression.

    Labels must be -1 or +1.  The likelihood part is
    scale * sum_i [-y_i x_i * sigmoid(-y_i w^T x_i)] and the Laplace prior
    contributes sign(w), with sign(0) = 0.
    """
    w = np.asarray(w, dtype=float)
    y = np.asarray(batch_targets, dtype=float)
    if y.size and not np.all(np.abs(y) == 1.0):
        raise ValueError("logistic labels must be -1 or +1")
    if batch_features.shape[0] == 0:
        return np.sign(w)
    coef = y * expit(-y * (batch_features @ w))
    return -scale * (batch_features.T @ coef) + np.sign(w)


def load_libsvm(path, num_features: int | None = None) -> Dataset:
    """Read a sparse 'label idx:val ...' text file into a dense Dataset.

    Feature indices are 1-based.  Labels may be {-1, +1} or {0, 1}; the
    latter are mapped to {-1, +1}.  ``num_features`` fixes the feature
    dimension; rows indexing past it are rejected.  Without it the maximum
    index seen sets the dimension.

    Raises
    ------
    ParseError
        On malformed tokens, bad labels or out-of-range indices, naming the
        line.
    """
    labels = []
    rows = []
    max_idx = 0
    with open(path) as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            try:
                label = float(parts[0])
            except ValueError:
                raise ParseError(f"line {lineno}: bad label {parts[0]!r}") from None
            if label in (-1.0, 1.0):
                pass
            elif label == 0.0:
                label = -1.0
            else:
                raise ParseError(f"line {lineno}: label {label} is not binary")
            feats = []
            for tok in parts[1:]:
                try:
                    idx_s, val_s = tok.split(":", 1)
                    idx, val = int(idx_s), float(val_s)
                except ValueError:
                    raise ParseError(f"line {lineno}: bad feature token {tok!r}") from None
                if idx < 1:
                    raise ParseError(f"line {lineno}: feature index {idx} is not 1-based")
                if num_features is not None and idx > num_features:
                    raise ParseError(
                        f"line {lineno}: feature index {idx} exceeds declared {num_features}")
                max_idx = max(max_idx, idx)
                feats.append((idx, val))
            labels.append(label)
            rows.append(feats)
    if not rows:
        raise ParseError("file holds no samples")
    dim = num_features if num_features is not None else max_idx
    feats = np.zeros((len(rows), dim))
    for i, row in enumerate(rows):
        for idx, val in row:
            feats[i, idx - 1] = val
    return Dataset(features=feats, targets=np.asarray(labels))


def save_libsvm(ds: Dataset, path) -> None:
    """Write a dataset in the sparse 'label idx:val ...' text format."""
    with open(path, "w") as fh:
        for i in range(ds.n):
            toks = [f"{int(ds.targets[i]):+d}"]
            row = ds.features[i]
            for j in np.nonzero(row)[0]:
                val = row[j]
                toks.append(f"{j + 1}:{int(val) if val == int(val) else repr(float(val))}")
            fh.write(" ".join(toks) + "\n")


def make_surrogate_classification(n: int, dim: int, seed: int,
                                  density: float = 14.0 / 123.0) -> Dataset:
    """Synthetic binary-feature classification data of a given shape.

    Features are Bernoulli(density) indicators and labels are drawn from a
    logistic model with a hidden weight vector, so the task is learnable but
    not separable.  Stands in for a real file when none is on disk.
    """
    rng = np.random.default_rng(seed)
    feats = (rng.random((n, dim)) < density).astype(float)
    hidden = rng.standard_normal(dim)
    logits = feats @ hidden
    logits -= np.median(logits)
    targs = np.where(rng.random(n) < expit(logits), 1.0, -1.0)
    return Dataset(features=feats, targets=targs)


def partition(ds: Dataset, num_shards: int, mode: str = "random", seed: int = 0) -> list:
    """Split a dataset into near-equal shards, one per agent.

    ``random`` permutes the rows with the given seed before splitting into
    contiguous blocks; ``contiguous`` keeps the original order.  Shard sizes
    differ by at most one row.
    """
    if not 1 <= num_shards <= ds.n:
        raise ValueError(f"cannot split {ds.n} rows into {num_shards} shards")
    if mode == "random":
        order = np.random.default_rng(seed).permutation(ds.n)
    elif mode == "contiguous":
        order = np.arange(ds.n)
    else:
        raise ValueError(f"unknown partition mode {mode!r}")
    return [Shard(agent=i, indices=chunk)
            for i, chunk in enumerate(np.array_split(order, num_shards))]


class _ShardedPotential(Potential):
    """Common minibatch plumbing for data-sharded potentials.

    Each agent resamples ``batch_size`` rows of its shard with replacement
    from its own stream (one integers draw per step, before the Gaussian).
    ``batch_size=None`` uses the full shard deterministically and consumes
    no randomness.
    """

    def __init__(self, ds: Dataset, shards, batch_size):
        if batch_size is not None and batch_size < 1:
            raise ValueError("batch_size must be at least 1")
        self.batch_size = batch_size
        self.shard_features = [ds.features[s.indices] for s in shards]
        self.shard_targets = [ds.targets[s.indices] for s in shards]

    def _draw(self, agent: int, rng):
        feats = self.shard_features[agent]
        targs = self.shard_targets[agent]
        if self.batch_size is None:
            return feats, targs, 1.0
        idx = rng.integers(0, feats.shape[0], size=self.batch_size)
        return feats[idx], targs[idx], feats.shape[0] / self.batch_size


class LinRegPotential(_ShardedPotential):
    """Sharded linear-regression posterior potential.

    Each agent's term carries 1/m of the shared prior, so the per-agent
    potentials sum to likelihood + one prior and the network targets the
    same posterior :func:`linreg_posterior` computes.
    """

    def __init__(self, ds: Dataset, shards, prior: GaussianDist, sigma: float,
                 batch_size: int | None = 1):
        super().__init__(ds, shards, batch_size)
        self.prior = prior
        self.sigma = float(sigma)
        # 1/m prior weight == m-times-wider prior covariance in the gradient
        self._agent_prior = GaussianDist(prior.mean, prior.cov * len(shards))
        self.props = PotentialProps(dim=ds.dim)

    def grad(self, agent, z, rng):
        feats, targs, scale = self._draw(agent, rng)
        return grad_U_linreg(z, feats, targs, self._agent_prior, self.sigma,
                             scale)


class MixturePotential(_ShardedPotential):
    """Sharded two-component location-mixture potential over (theta1, theta2).

    As in :class:`LinRegPotential`, the shared prior enters each agent's
    term with weight 1/m so the network potential counts it exactly once.
    """

    def __init__(self, ds: Dataset, shards, sigma_x: float = np.sqrt(2.0),
                 prior_vars: tuple = (10.0, 1.0), batch_size: int | None = 1):
        super().__init__(ds, shards, batch_size)
        self.sigma_x = float(sigma_x)
        self.prior_vars = (float(prior_vars[0]), float(prior_vars[1]))
        m = len(shards)
        self._agent_prior_vars = (self.prior_vars[0] * m, self.prior_vars[1] * m)
        self.props = PotentialProps(dim=2)

    def grad(self, agent, z, rng):
        _, targs, scale = self._draw(agent, rng)
        return grad_U_mixture(z, targs, self.sigma_x, self._agent_prior_vars,
                              scale)


class LogisticPotential(_ShardedPotential):
    """Sharded logistic-regression potential with a Laplace prior.

    Unlike the Gaussian-prior potentials, every agent applies the full
    sign(w) regularizer: the per-agent gradient formula is fixed that way,
    so the network target carries an m-fold L1 weight.
    """

    def __init__(self, ds: Dataset, shards, batch_size: int | None = 32):
        super().__init__(ds, shards, batch_size)
        self.props = PotentialProps(dim=ds.dim)

    def grad(self, agent, z, rng):
        feats, targs, scale = self._draw(agent, rng)
        return grad_U_logistic(z, feats, targs, scale)


class GaussianPotential(Potential):
    """Quadratic target split evenly across agents.

    The network as a whole targets N(mean, cov); each agent holds 1/m of
    the potential, so the declared per-agent constants are the target
    curvature extremes divided by m.
    """

    def __init__(self, mean: np.ndarray, cov: np.ndarray, num_agents: int):
        mean = np.asarray(mean, dtype=float)
        cov = np.atleast_2d(np.asarray(cov, dtype=float))
        self.mean = mean
        self.precision = np.linalg.inv(cov)
        self.num_agents = int(num_agents)
        eigs = np.linalg.eigvalsh(self.precision)
        self.props = PotentialProps(dim=mean.shape[0],
                                    mu=float(eigs.min()) / num_agents,
                                    lipschitz=float(eigs.max()) / num_agents)

    def grad(self, agent, z, rng):
        return self.precision @ (z - self.mean) / self.num_agents
