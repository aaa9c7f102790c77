"""End-to-end acceptance runs at the scales the package is meant for.

Each test checks one contract: exact mixing weights, conserved push-sum
mass, consensus and mean-field identities, gradient correctness against
finite differences, the three experiment pipelines, the deviation-bound
monitor, the ensemble convergence rate and byte-reproducible output.
Measured values are printed so a failing threshold can be read off the
log together with the number that missed it.
"""

import time
from pathlib import Path

import numpy as np
import pytest

from declangevin import (DirectedGraph, GaussianDist, GaussianPotential,
                         LinRegPotential, NetworkState, StepSchedule,
                         ZeroPotential, average_state, build_config,
                         build_mixing_matrix, check_lemma4_bound,
                         empirical_gaussian, generate_graph_sequence,
                         generate_linreg_data, generate_mixture_data,
                         grad_U_linreg, grad_U_logistic, grad_U_mixture,
                         init_network, langevin_step, linreg_w2_series,
                         logistic_auc_series, main, partition, prepare,
                         pushsum_mix, rate_fit, run, run_experiment,
                         run_gaussian_ensemble, step_size, w2_gaussian_bures)
from declangevin.langevin import NoiseModel

from conftest import (SIX_NODE_MIXING, RecordingNoise, RecordingPotential,
                      central_fd, reference_ula)

REPO_ROOT = Path(__file__).resolve().parents[1]


@pytest.fixture(scope="module")
def linreg_run():
    cfg = build_config("linreg")
    setup = prepare(cfg)
    start = time.perf_counter()
    trace = run_experiment(cfg, setup)
    return cfg, setup, trace, time.perf_counter() - start


def _logistic_overrides():
    dataset = REPO_ROOT / "data" / "a9a"
    if dataset.exists():
        return {"dataset": str(dataset)}
    return {"dataset": str(dataset), "surrogate": "on"}


@pytest.fixture(scope="module")
def logistic_run():
    cfg = build_config("logistic", _logistic_overrides())
    start = time.perf_counter()
    setup = prepare(cfg)
    trace = run_experiment(cfg, setup)
    return cfg, setup, trace, time.perf_counter() - start


def test_mixing_matrices_are_exact_and_column_stochastic(six_node_graph):
    start = time.perf_counter()
    np.testing.assert_array_equal(build_mixing_matrix(six_node_graph).entries,
                                  SIX_NODE_MIXING)
    rng = np.random.default_rng(0)
    worst = 0.0
    for _ in range(1000):
        m = int(rng.integers(2, 9))
        edges = frozenset((i, j) for i in range(m) for j in range(m)
                          if i != j and rng.random() < 0.3)
        sums = build_mixing_matrix(DirectedGraph(m, edges)).entries.sum(axis=0)
        worst = max(worst, np.abs(sums - 1.0).max())
    elapsed = time.perf_counter() - start
    print(f"worst column-sum error over 1000 graphs: {worst:.2e} "
          f"({elapsed:.2f}s)")
    assert worst <= 1e-12
    assert elapsed < 1.0


def test_push_sum_conserves_total_weight_over_long_horizons():
    seq = generate_graph_sequence("seeded-random", 6, 2, seed=1)
    rng = np.random.default_rng(1)
    ns = init_network(6, 3)
    ns = NetworkState(x=rng.standard_normal((6, 3)), y=ns.y, w=ns.w, z=ns.z,
                      t=0)
    start = time.perf_counter()
    drift = 0.0
    for t in range(10000):
        mixed = pushsum_mix(ns, seq.mixing_at(t))
        ns = NetworkState(x=mixed.w, y=mixed.y, w=mixed.w, z=mixed.z,
                          t=mixed.t)
        drift = max(drift, abs(ns.y.sum() - 6.0))
    elapsed = time.perf_counter() - start
    print(f"worst total-weight drift over 10000 steps: {drift:.2e} "
          f"({elapsed:.1f}s)")
    assert drift <= 1e-9
    assert elapsed < 5.0


def test_gradient_free_noise_free_network_reaches_consensus():
    seq = generate_graph_sequence("seeded-random", 6, 1, seed=2)
    rng = np.random.default_rng(2)
    x0 = rng.standard_normal((6, 2))
    trace = run(seq, StepSchedule("harmonic", 0.1), ZeroPotential(2), None,
                200, x0=x0)
    gap = np.linalg.norm(trace.states[-1] - x0.mean(axis=0), axis=1).max()
    print(f"worst distance to the initial average after 200 steps: {gap:.2e}")
    assert gap < 1e-6


def test_single_agent_run_is_bitwise_plain_langevin():
    pot = GaussianPotential(np.array([0.4, -0.2]),
                            np.array([[1.0, 0.3], [0.3, 2.0]]), 1)
    sched = StepSchedule("harmonic", alpha0=0.3)
    seq = generate_graph_sequence("seeded-random", 1, 1, seed=7)
    trace = run(seq, sched, pot, NoiseModel(7, 1), 1000)
    ref = reference_ula(lambda x: pot.grad(0, x, None), sched, 7, 1000, 2)
    # the recorded ratio at iteration t is the plain chain after t - 1 steps
    assert np.array_equal(trace.states[1:, 0, :], ref[:-1])
    print("1000 iterations bitwise identical to the plain chain")


def test_network_average_follows_the_mean_field_decomposition():
    m, d = 4, 2
    ds = generate_linreg_data(120, d, 1.0, np.array([1.0, -1.0]), seed=5)
    shards = partition(ds, m, "random", 5)
    prior = GaussianDist(np.zeros(d), np.eye(d))
    pot = RecordingPotential(LinRegPotential(ds, shards, prior, 1.0,
                                             batch_size=1))
    noise = RecordingNoise(5, m)
    sched = StepSchedule("harmonic", alpha0=0.01)
    seq = generate_graph_sequence("seeded-random", m, 1, seed=5)

    ns = init_network(m, d)
    worst = 0.0
    for t in range(1000):
        xbar = average_state(ns)
        ns = langevin_step(ns, seq.mixing_at(t), sched, pot, noise)
        alpha = step_size(sched, t + 1)
        decomp = xbar - alpha * np.mean(pot.grads[-m:], axis=0) \
            + np.sqrt(2.0 * alpha) * np.mean(noise.draws[-m:], axis=0)
        worst = max(worst, np.abs(average_state(ns) - decomp).max())
    print(f"worst decomposition residual over 1000 steps: {worst:.2e}")
    assert worst <= 1e-10


def test_analytic_gradients_match_finite_differences():
    def linreg_u(z, feats, targs, prior, sigma):
        gap = z - prior.mean
        resid = feats @ z - targs
        return 0.5 * resid @ resid / sigma ** 2 \
            + 0.5 * gap @ np.linalg.solve(prior.cov, gap)

    def mixture_u(theta, x, sigma_x, prior_vars):
        a, b = theta
        l1 = -((x - a) ** 2) / (2.0 * sigma_x ** 2)
        l2 = -((x - a - b) ** 2) / (2.0 * sigma_x ** 2)
        return -(np.logaddexp(l1, l2) + np.log(0.5)).sum() \
            + a ** 2 / (2 * prior_vars[0]) + b ** 2 / (2 * prior_vars[1])

    def logistic_u(w, feats, targs):
        return np.logaddexp(0.0, -targs * (feats @ w)).sum() \
            + np.abs(w).sum()

    rng = np.random.default_rng(6)
    worst = 0.0

    ds = generate_linreg_data(120, 3, 0.7, np.array([1.0, -1.0, 0.5]), seed=6)
    prior = GaussianDist(0.3 * np.ones(3), 2.0 * np.eye(3))
    for _ in range(10):
        z = rng.standard_normal(3)
        ana = grad_U_linreg(z, ds.features, ds.targets, prior, 0.7)
        fd = central_fd(lambda v: linreg_u(v, ds.features, ds.targets,
                                          prior, 0.7), z)
        worst = max(worst, np.linalg.norm(ana - fd)
                    / max(1.0, np.linalg.norm(fd)))

    mix = generate_mixture_data(150, 0.0, 1.0, np.sqrt(2.0), seed=6)
    for _ in range(10):
        theta = rng.standard_normal(2)
        ana = grad_U_mixture(theta, mix.targets, np.sqrt(2.0), (10.0, 1.0))
        fd = central_fd(lambda v: mixture_u(v, mix.targets, np.sqrt(2.0),
                                            (10.0, 1.0)), theta)
        worst = max(worst, np.linalg.norm(ana - fd)
                    / max(1.0, np.linalg.norm(fd)))

    feats = rng.standard_normal((80, 6))
    targs = np.where(rng.random(80) < 0.5, 1.0, -1.0)
    for _ in range(10):
        # keep every coordinate away from the kink of |w|
        w = rng.standard_normal(6)
        w += 0.3 * np.sign(w)
        ana = grad_U_logistic(w, feats, targs)
        fd = central_fd(lambda v: logistic_u(v, feats, targs), w)
        worst = max(worst, np.linalg.norm(ana - fd)
                    / max(1.0, np.linalg.norm(fd)))

    print(f"worst relative gradient error over 30 points: {worst:.2e}")
    assert worst < 1e-5


def test_linreg_distance_to_the_posterior_drops_tenfold(linreg_run):
    cfg, setup, trace, elapsed = linreg_run
    start = time.perf_counter()
    paper, _ = linreg_w2_series(trace, setup.extras["posterior"])
    series = paper.mean(axis=1)
    finite = series[np.isfinite(series)]
    elapsed += time.perf_counter() - start
    print(f"mean W2 to the posterior: {finite[0]:.4f} at the first full "
          f"window, {finite[-1]:.4f} at t={cfg.iters} ({elapsed:.1f}s)")
    assert elapsed < 10.0
    assert finite[-1] <= 0.1 * finite[0]


def test_mixture_agents_occupy_both_posterior_modes():
    cfg = build_config("mixture")
    setup = prepare(cfg)
    start = time.perf_counter()
    trace = run_experiment(cfg, setup)
    elapsed = time.perf_counter() - start
    post = trace.states[trace.ts > 2000]
    occ_main = (np.linalg.norm(post - np.array([0.0, 1.0]), axis=2)
                < 0.5).mean(axis=0)
    occ_swap = (np.linalg.norm(post - np.array([1.0, -1.0]), axis=2)
                < 0.5).mean(axis=0)
    for i in range(trace.num_agents):
        print(f"agent {i}: occupancy {occ_main[i]:.2f} near (0, 1), "
              f"{occ_swap[i]:.2f} near (1, -1)")
    print(f"({elapsed:.1f}s)")
    assert elapsed < 60.0
    assert occ_main.min() >= 0.2
    assert occ_swap.min() >= 0.2


def test_logistic_chains_reach_reference_test_auc(logistic_run):
    cfg, setup, trace, elapsed = logistic_run
    start = time.perf_counter()
    eval_ts, aucs = logistic_auc_series(trace, setup.extras["test"],
                                        cfg.eval_every)
    elapsed += time.perf_counter() - start
    final = float(aucs[-1].mean())
    test_set = setup.extras["test"]
    n_pos = int((test_set.targets == 1.0).sum())
    n_neg = test_set.n - n_pos
    null_se = np.sqrt((n_pos + n_neg + 1) / (12.0 * n_pos * n_neg))
    source = "surrogate" if setup.metadata["surrogate"] == "on" else "file"
    print(f"final mean test AUC {final:.4f} on {source} data "
          f"(null AUC se {null_se:.4f}, {elapsed:.1f}s)")
    assert elapsed < 300.0
    if source == "surrogate":
        assert final > 0.5 + 10.0 * null_se
    else:
        assert final >= 0.8336


def test_recorded_runs_respect_the_deviation_bound(linreg_run, logistic_run):
    for name, bundle in (("linreg", linreg_run), ("logistic", logistic_run)):
        report = check_lemma4_bound(bundle[2])
        print(f"{name}: max lhs/bound ratio {report.max_ratio:.2e} "
              f"(delta={report.delta:.3e}, lambda={report.lam:.6f})")
        assert not report.violated


def test_ensemble_distance_to_the_target_decays_polynomially():
    m, d, iters, runs = 4, 2, 10000, 16384
    pot = GaussianPotential(np.zeros(d), np.eye(d), m)
    # largest admissible constant step for the declared curvature bounds
    alpha0 = min(1.0 / (2.0 * pot.props.lipschitz),
                 pot.props.mu / (4.0 * pot.props.lipschitz ** 2))
    seq = generate_graph_sequence("seeded-random", m, 1, seed=0)
    sched = StepSchedule("harmonic", alpha0=alpha0)
    cps = np.unique(np.geomspace(1, iters, 41).astype(int))
    start = time.perf_counter()
    snaps = run_gaussian_ensemble(seq, sched, np.zeros(d), np.eye(d), m,
                                  iters, runs, 125, cps)
    target = GaussianDist(np.zeros(d), np.eye(d))
    w2 = np.array([w2_gaussian_bures(empirical_gaussian(s), target)
                   for s in snaps])
    elapsed = time.perf_counter() - start
    # moments fitted from 16384 runs carry an O(1/sqrt(runs)) floor near
    # 0.01, so the fit stops at t = 1000 where the signal still dominates
    window = (cps >= 10) & (cps <= 1000)
    slope = rate_fit(w2[window], cps[window])
    print(f"log-log slope {slope:.3f} over t in [10, 1000]; "
          f"W2 {w2[cps == 10][0]:.4f} -> {w2[cps == 1000][0]:.4f} "
          f"({elapsed:.0f}s)")
    assert slope <= -0.25


def test_equal_configs_write_byte_identical_results(tmp_path, capsys):
    cases = {
        "linreg": ["linreg", "--n", "120", "--iters", "80", "--seed", "3"],
        "run": ["run", "--iters", "300", "--monitors", "on"],
    }
    for name, flags in cases.items():
        out1 = tmp_path / f"{name}1.csv"
        out2 = tmp_path / f"{name}2.csv"
        assert main(flags + ["--out", str(out1)]) == 0
        assert main(flags + ["--out", str(out2)]) == 0
        assert out1.read_bytes() == out2.read_bytes()
    capsys.readouterr()
    print("repeated linreg and monitored runs wrote identical bytes")
