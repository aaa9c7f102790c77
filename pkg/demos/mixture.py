"""Bimodal mixture posterior: mode hopping against the step-size floor.

The two-component location model has a second posterior mode at the
label-swapped parameters.  With the default decaying schedule the injected
noise fades with the step size, so the network settles onto whichever mode
it reaches first and stays there; the matching acceptance test encodes the
two-sided expectation and is expected to fail for exactly this reason.
Raising the floor the schedule decays to keeps the temperature up and the
hopping alive, at the price of a noisier stationary cloud.
"""

import numpy as np

from declangevin import build_config, prepare, run_experiment


def occupancy(trace, center):
    post = trace.states[trace.ts > 2000]
    return (np.linalg.norm(post - center, axis=2) < 0.5).mean()


def main():
    print("two modes: (0, 1) and the label-swapped (1, -1)\n")
    print(f"{'final step':>10} {'near (0, 1)':>12} {'near (1, -1)':>13}")
    for alpha_end in (0.0001, 0.002, 0.008):
        cfg = build_config("mixture", {"alpha_start": 0.01,
                                       "alpha_end": alpha_end})
        trace = run_experiment(cfg, prepare(cfg))
        main_occ = occupancy(trace, np.array([cfg.theta1, cfg.theta2]))
        swap_occ = occupancy(trace, np.array([cfg.theta1 + cfg.theta2,
                                              -cfg.theta2]))
        print(f"{alpha_end:>10} {main_occ:>12.2f} {swap_occ:>13.2f}")

    print("\nonce the step has decayed the chains freeze onto one mode; "
          "holding the\nstep up keeps both modes occupied")


if __name__ == "__main__":
    main()
