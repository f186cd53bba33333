"""Time the hot kernels under both backends.

The backend is fixed at import time by CYCLEFLOW_BACKEND, so the
comparison runs each case in a child interpreter per backend:

    python3 benchmarks/bench_kernels.py              # full table
    python3 benchmarks/bench_kernels.py --repeat 9   # steadier numbers

A child invocation (used internally) times one case in one backend:

    CYCLEFLOW_BACKEND=numpy python3 benchmarks/bench_kernels.py \\
        --run-case markov_cycles --repeat 5

Each case warms its kernel on the real inputs before timing, so jit
compilation and cache loading never land in the measurement.  Random
cases reseed per repetition and report the best wall time.
"""

import argparse
import json
import os
import subprocess
import sys
import time

import numpy as np

BACKENDS = ("numba", "numpy")


def time_best(fn, repeat):
    best = float("inf")
    for _ in range(repeat):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


# ---------------------------------------------------------------------------
# cases; each builds inputs once, warms the kernel, then times it


def case_hitting(repeat):
    from cycleflow import _kernels

    rng = np.random.default_rng(1)
    m = 3000
    mapping = rng.permutation(m).astype(np.int64)
    in_set = np.zeros(m, dtype=np.bool_)
    in_set[rng.choice(m, size=30, replace=False)] = True
    _kernels.hitting_times(mapping, in_set)
    return time_best(lambda: _kernels.hitting_times(mapping, in_set), repeat)


def case_excursion(repeat):
    from cycleflow import _kernels

    rng = np.random.default_rng(2)
    m = 10000
    mapping = rng.permutation(m).astype(np.int64)
    members = np.sort(rng.choice(m, size=30, replace=False))
    in_set = np.zeros(m, dtype=np.bool_)
    in_set[members] = True
    start_idx = members.astype(np.int64)
    start_wt = rng.uniform(0.5, 2.0, size=members.size)
    _kernels.excursion_mass(mapping, in_set, start_idx, start_wt)
    return time_best(
        lambda: _kernels.excursion_mass(mapping, in_set, start_idx, start_wt),
        repeat)


def case_markov_cycles(repeat):
    from cycleflow import _kernels

    rng = np.random.default_rng(3)
    n = 50
    row_cum = np.cumsum(rng.dirichlet(np.ones(n), size=n), axis=1)
    n_cycles = 5000
    occ = np.zeros((n_cycles, n), dtype=np.int64)
    lengths = np.zeros(n_cycles, dtype=np.int64)

    def run():
        occ[:] = 0
        lengths[:] = 0
        gen = np.random.default_rng(99)
        steps, status = _kernels.markov_cycle_batch(
            gen, row_cum, 0, occ, lengths, 10 ** 9)
        assert status == 0

    run()
    return time_best(run, repeat)


def case_split_chain(repeat):
    from cycleflow import _kernels

    k = np.array([[0.5, 0.5, 0.0], [0.2, 0.5, 0.3], [0.1, 0.4, 0.5]])
    kpow = np.stack([np.eye(3), k, k @ k])
    k_cum = np.cumsum(k, axis=1)
    lam_cum = np.cumsum(kpow[2, 0])
    res_cum = np.cumsum(kpow[2], axis=1)
    in_regen = np.array([True, False, False])
    n_cycles = 10000
    occ = np.zeros((n_cycles, 3), dtype=np.int64)
    lengths = np.zeros(n_cycles, dtype=np.int64)
    regen = np.zeros(n_cycles, dtype=np.int64)
    traj = np.zeros(1, dtype=np.int64)
    marks = np.zeros(1, dtype=np.int8)

    def run():
        occ[:] = 0
        lengths[:] = 0
        regen[:] = 0
        gen = np.random.default_rng(4096)
        out = _kernels.split_chain_batch(
            gen, k, k_cum, lam_cum, res_cum, kpow, in_regen, 0.5, 2,
            occ, lengths, regen, False, traj, marks, 10 ** 9)
        assert out[3] == 0

    run()
    return time_best(run, repeat)


CASES = {
    "hitting": case_hitting,
    "excursion": case_excursion,
    "markov_cycles": case_markov_cycles,
    "split_chain": case_split_chain,
}


# ---------------------------------------------------------------------------
# orchestration


def run_child(case, backend, repeat):
    env = os.environ.copy()
    env["CYCLEFLOW_BACKEND"] = backend
    proc = subprocess.run(
        [sys.executable, os.path.abspath(__file__),
         "--run-case", case, "--repeat", str(repeat)],
        capture_output=True, text=True, env=env)
    if proc.returncode != 0:
        raise RuntimeError("%s under %s failed:\n%s"
                           % (case, backend, proc.stderr))
    return json.loads(proc.stdout)["best"]


def main(argv=None):
    parser = argparse.ArgumentParser(
        description="compare kernel wall times across backends")
    parser.add_argument("--repeat", type=int, default=5,
                        help="repetitions per case, best time wins")
    parser.add_argument("--run-case", choices=sorted(CASES),
                        help="internal: time one case in this interpreter")
    args = parser.parse_args(argv)
    if args.repeat < 1:
        parser.error("--repeat must be at least 1")

    if args.run_case:
        from cycleflow._backend import BACKEND_NAME
        best = CASES[args.run_case](args.repeat)
        print(json.dumps({"case": args.run_case, "backend": BACKEND_NAME,
                          "best": best}))
        return 0

    print("kernel wall time, best of %d runs per backend" % args.repeat)
    print("%-16s %14s %14s %10s" % ("case", "numba", "numpy", "speedup"))
    for case in sorted(CASES):
        times = {b: run_child(case, b, args.repeat) for b in BACKENDS}
        print("%-16s %12.6f s %12.6f s %9.1fx"
              % (case, times["numba"], times["numpy"],
                 times["numpy"] / times["numba"]))
    return 0


if __name__ == "__main__":
    sys.exit(main())
