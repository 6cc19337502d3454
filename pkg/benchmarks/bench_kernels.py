"""Time the compiled and pure-Python kernels on identical inputs.

    python benchmarks/bench_kernels.py [--instance eil51] [--steps 20000] [--repeat 3]

Both backends are run on the same draws and their outputs are compared, so
a speedup is only reported for results that agree.
"""
import argparse
import time

import numpy as np

from divtsp._backend import available_backends
from divtsp._pykernels import MUTATION_TWO_OPT, VARIANT_ED, VARIANT_PD
from divtsp.budget import default_budget
from divtsp.local_search import two_opt_moves
from divtsp.tour import tour_cost
from divtsp.tsplib import load_instance


def bench_ea(kern, inst, seed_perm, mu, steps, variant, seed, alpha=0.1):
    rng = np.random.default_rng(seed)
    ma, mb = two_opt_moves(inst.n)
    parents = rng.integers(0, mu, steps)
    ops = rng.integers(0, len(ma), steps)
    perms = np.tile(seed_perm, (mu, 1)).astype(np.int32)
    costs = np.full(mu, tour_cost(inst, seed_perm), dtype=np.int64)
    thr = (1 + alpha) * inst.optimum_cost  # inf: every offspring is accepted
    t0 = time.perf_counter()
    out = kern.ea_steps(perms, costs, inst.dist, ma, mb, parents, ops, thr, variant,
                        MUTATION_TWO_OPT)
    return time.perf_counter() - t0, (tuple(map(int, out)), perms.tobytes())


def bench_two_opt(kern, inst, starts, seed):
    rng = np.random.default_rng(seed)
    ma, mb = two_opt_moves(inst.n)
    elapsed, results = 0.0, []
    for _ in range(starts):
        perm = rng.permutation(inst.n).astype(np.int32)
        cost = tour_cost(inst, perm)
        while True:  # full passes until a local optimum
            order = rng.permutation(len(ma))
            t0 = time.perf_counter()
            cost, looked, improved, _ = kern.two_opt_pass(perm, inst.dist, ma, mb, order,
                                                          cost, -np.inf, 10**12)
            elapsed += time.perf_counter() - t0
            if improved == 0:
                break
        results.append(int(cost))
    return elapsed, results


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--instance", default="eil51")
    ap.add_argument("--steps", type=int, default=20000, help="EA steps per timing")
    ap.add_argument("--starts", type=int, default=3, help="2-opt descents per timing")
    ap.add_argument("--repeat", type=int, default=3)
    args = ap.parse_args()

    inst, best = load_instance(args.instance)
    mu = inst.n // 4
    backends = available_backends()
    print(f"{inst.name}: n={inst.n} mu={mu} default budget={default_budget(mu, inst.n):.0f}")
    print(f"backends: {', '.join(backends)}")

    cases = {
        "ea_steps ED 0.1": lambda k, s: bench_ea(k, inst, best.perm, mu, args.steps, VARIANT_ED, s),
        "ea_steps PD 0.1": lambda k, s: bench_ea(k, inst, best.perm, mu, args.steps, VARIANT_PD, s),
        "ea_steps ED inf": lambda k, s: bench_ea(k, inst, best.perm, mu, args.steps, VARIANT_ED,
                                                 s, np.inf),
        "ea_steps PD inf": lambda k, s: bench_ea(k, inst, best.perm, mu, args.steps, VARIANT_PD,
                                                 s, np.inf),
        "two_opt descent": lambda k, s: bench_two_opt(k, inst, args.starts, s),
    }
    print(f"{'kernel':<18}" + "".join(f"{b + ' (s)':>14}" for b in backends) + f"{'speedup':>10}")
    for name, fn in cases.items():
        times, outputs = {}, {}
        for b, kern in backends.items():
            runs = [fn(kern, s) for s in range(args.repeat)]
            times[b] = min(t for t, _ in runs)
            outputs[b] = [o for _, o in runs]
        agree = len({repr(o) for o in outputs.values()}) == 1
        speed = times["python"] / times["cython"] if "cython" in times else float("nan")
        row = f"{name:<18}" + "".join(f"{times[b]:>14.4f}" for b in backends)
        print(row + f"{speed:>9.1f}x" + ("" if agree else "  OUTPUTS DIFFER"))


if __name__ == "__main__":
    main()
