"""Smoke test for the `igl` extension module.

Build and install first:  pip install --no-build-isolation ./crates/python
"""

import math

import igl


def main():
    env = igl.Environment.env_a()
    assert env.action_count == 3
    assert env.true_posterior(0, 1) == [0.0, 0.5, 0.5]
    assert env.optimal_policy() == [0]
    assert igl.sigma_default(1.0, 1.0, 3) == 0.25
    assert igl.lipschitz_clamp(0.5, 0.75, 0.25) == 0.0

    p = igl.igw_distribution([0.9, 0.4, 0.4], 10.0)
    assert all(math.isclose(a, b, abs_tol=1e-12) for a, b in zip(p, [0.75, 0.125, 0.125]))

    assert all(passed for _, passed, _, _ in env.verify(mc_samples=20_000, seed=1))

    bench = igl.Environment.generate(20, 5, 1, 4, seed=0)
    classes = igl.FunctionClasses.make(bench, decoy_f=3, decoy_phi=3)
    assert classes.h_count == 16
    truth = classes.true_h_index(bench)
    assert classes.erm_fit(bench, 4000, seed=1)[0] == truth

    n = igl.tuned_explore_n(20_000, 5, 0.375, classes.h_count)
    off = igl.run_offpolicy(bench, classes, 20_000, n, seed=1)
    on = igl.run_onpolicy(bench, classes, 20_000, n, seed=1)
    assert len(off) == len(on) == 20_000
    assert on.tail_mean_reward(2000) >= 0.9
    assert on.final_regret <= off.final_regret
    assert off.regret_csv().startswith("round,")

    round_trip = igl.Environment.from_json(bench.to_json())
    assert round_trip.reward_mean == bench.reward_mean

    print(f"ok: N={n}, off regret={off.final_regret:.0f}, on regret={on.final_regret:.0f}")


if __name__ == "__main__":
    main()
