"""Quick end-to-end check of the Python bindings.

Build and install first:  cd crates/py && maturin build --release -o dist && pip install dist/*.whl
"""

import json
import math
import pathlib
import random
import sys
import tempfile

import ecofair

ROOT = pathlib.Path(__file__).resolve().parent.parent


def check(cond, what):
    print(("ok   " if cond else "FAIL ") + what)
    if not cond:
        sys.exit(1)


def main():
    check(abs(ecofair.gini([1.0, 1.0, 1.0])) < 1e-12, "gini of equal costs is 0")
    check(abs(ecofair.gini([0.0, 0.0, 0.0, 4.0]) - 0.75) < 1e-12, "gini of one holder is (N-1)/N")
    check(ecofair.minmax([0.0, 0.0]) == 1.0, "minmax of all-zero costs is 1")
    check(abs(ecofair.phi([1.0, 2.0], "minmax") - 0.5) < 1e-12, "phi minmax is 1 - min/max")
    check(abs(ecofair.step_size(3, 0.1) - 0.05) < 1e-15, "dual step size decays as 1/sqrt(t+1)")

    ledger = ecofair.ConstraintLedger(budget=10.0, horizon=10, eta_base=0.5)
    lam = ledger.update_emission(3.0, 0)
    check(abs(lam - 1.0) < 1e-12, "emission dual rises by eta*(e - B/T)")
    check(ledger.update_emission(0.0, 1) >= 0.0, "emission dual stays non-negative")

    pol = ecofair.Policy(3, 4, weights=[0.1 * i for i in range(12)])
    p = pol.probabilities([1.0, -0.5, 2.0])
    check(abs(sum(p) - 1.0) < 1e-12, "policy probabilities sum to 1")
    g = pol.grad_log_prob([1.0, -0.5, 2.0], 2)
    check(len(g) == 12 and all(math.isfinite(v) for v in g), "log-prob gradient is finite")

    env = ecofair.Env.generate(4, 6, seed=1)
    rng = random.Random(0)
    trace = [0.0]
    for _ in range(30):
        out = env.step([rng.randrange(env.num_actions) for _ in range(env.num_vessels)])
        trace.append(env.cumulative_emissions)
    check(all(b >= a for a, b in zip(trace, trace[1:])), "E_t nondecreasing over 30 steps")
    check(len(env.features(0)) == 17, "17 low-level features")
    check(len(out["rewards"]) == 6, "one reward per vessel")

    r = ecofair.verify_regret("emissions", 20000)
    check(r["slope"] is not None and r["slope"] < 1.0, f"emissions regret sublinear (slope {r['slope']:.3f})")

    with tempfile.TemporaryDirectory() as tmp:
        tmp = pathlib.Path(tmp)
        cfg = json.loads((ROOT / "configs" / "desk_4x8.json").read_text())
        cfg.update(env=str(ROOT / "configs" / "desk_4x8_env.json"), episodes=5, seeds=[1])
        cfg["constraint"]["calibration_episodes"] = 3
        (tmp / "run.json").write_text(json.dumps(cfg))
        res = ecofair.run(str(tmp / "run.json"), mode="full", out=str(tmp / "out"))
        check(len(res["seeds"][1]) == 5, "five episode records")
        check(res["capacity_violations"] == 0, "no capacity violations")
        check((tmp / "out" / "episodes_seed1.csv").exists(), "episode CSV written")
    print("smoke test passed")


if __name__ == "__main__":
    main()
