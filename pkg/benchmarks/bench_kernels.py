"""Time the numba and numpy truth-table / cube-cover kernels on random inputs.

    python3 benchmarks/bench_kernels.py --vars 12 16 20 --repeat 5
"""

from __future__ import annotations

import argparse
import random
import sys
import time
from pathlib import Path

import numpy as np

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "tests"))

from rulediff import kernels  # noqa: E402
from test_expr import random_expr  # noqa: E402


def best_of(fn, repeat):
    times = []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        times.append(time.perf_counter() - t0)
    return min(times), out


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--vars", type=int, nargs="+", default=[12, 16, 20])
    p.add_argument("--nodes", type=int, default=60, help="expression size")
    p.add_argument("--cubes", type=int, default=200)
    p.add_argument("--repeat", type=int, default=3)
    p.add_argument("--seed", type=int, default=0)
    args = p.parse_args(argv)

    if not kernels.HAVE_NUMBA:
        print("numba unavailable (or RULEDIFF_NO_NUMBA set); only the numpy path is timed")
    rng = random.Random(args.seed)
    print(f"{'kernel':<12}{'vars':>5}{'numpy s':>12}{'numba s':>12}{'speedup':>10}")
    for n in args.vars:
        names = [f"x{i}" for i in range(n)]
        e = random_expr(rng, args.nodes, names)
        order = names
        codes, cargs = kernels.compile_program(e, order)
        cubes = [{v: rng.random() < 0.5 for v in rng.sample(order, rng.randint(1, n))} for _ in range(args.cubes)]
        care, value = kernels.encode_cubes(cubes, order)

        rows = [
            ("truth_table", lambda: kernels.truth_table_numpy(codes, cargs, n), lambda: kernels.truth_table_numba(codes, cargs, n)),
            ("cover_mask", lambda: kernels.cover_mask_numpy(care, value, n), lambda: kernels.cover_mask_numba(care, value, n)),
        ]
        for name, np_fn, nb_fn in rows:
            t_np, r_np = best_of(np_fn, args.repeat)
            if kernels.HAVE_NUMBA:
                nb_fn()  # compile outside the timing
                t_nb, r_nb = best_of(nb_fn, args.repeat)
                if not np.array_equal(r_np, r_nb):
                    raise SystemExit(f"{name}: numba and numpy results differ at {n} vars")
                print(f"{name:<12}{n:>5}{t_np:>12.4f}{t_nb:>12.4f}{t_np / t_nb:>9.1f}x")
            else:
                print(f"{name:<12}{n:>5}{t_np:>12.4f}{'-':>12}{'-':>10}")


if __name__ == "__main__":
    main()
