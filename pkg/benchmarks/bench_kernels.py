"""Time the compiled and pure-Python kernels on the same inputs and check they agree.

    python benchmarks/bench_kernels.py [--repeat 200]
"""
import argparse
import math
import time

import numpy as np

from esls._backend import BACKENDS
from esls.es import bearing
from esls.field import TxSource
from esls.formation import square_offsets


def _inputs(seed=0):
    rng = np.random.default_rng(seed)
    centroid = np.array([25.0, 25.0, 0.0])
    bases = np.ascontiguousarray(square_offsets(10.0) + centroid)
    g = bases + rng.normal(0, 2.0, bases.shape)
    g[:, 2] = 0.0
    bearings = np.ascontiguousarray(bearing(g, 1e-6, -1.0))
    return bearings, bases, centroid


def bench_estimate(k, repeat, N=200):
    b, q, c = _inputs()
    res = np.empty(N)
    t0 = time.perf_counter()
    for _ in range(repeat):
        out = k.estimate(b, q, c, c, 0.5, 50.0, 1e-6, 1e5, N, res)
    return (time.perf_counter() - t0) / repeat, out


def bench_sense(k, repeat):
    tx = TxSource(np.zeros(3))
    _, q, _ = _inputs()
    noise = np.zeros((4, 3))
    gvec = np.array([math.sin(1.0), math.cos(1.0), 0.0])
    grad = np.zeros((4, 3))
    z = np.zeros(4)
    y = np.empty(4)
    t0 = time.perf_counter()
    for _ in range(repeat):
        k.sense_es(q, noise, tx.position, tx.attitude, 1 / (4 * math.pi), True, 1e-6,
                   grad, z, 1e-2, gvec, False, y)
    return (time.perf_counter() - t0) / repeat, grad.copy()


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--repeat", type=int, default=200)
    args = ap.parse_args()
    results = {}
    print(f"{'backend':<8} {'estimate N=200':>16} {'sense_es n=4':>14}")
    for name, k in BACKENDS.items():
        t_est, est = bench_estimate(k, args.repeat)
        t_sen, sen = bench_sense(k, args.repeat * 10)
        results[name] = (t_est, t_sen, est, sen)
        print(f"{name:<8} {t_est * 1e6:>13.1f} us {t_sen * 1e6:>11.2f} us")
    if "cython" in results:
        py, cy = results["python"], results["cython"]
        print(f"speed-up: estimate x{py[0] / cy[0]:.0f}, sense_es x{py[1] / cy[1]:.0f}")
        same = py[2] == cy[2] and np.array_equal(py[3], cy[3])
        print("outputs bit-identical:", same)
    else:
        print("compiled backend not built; only the fallback was timed")


if __name__ == "__main__":
    main()
