"""Compare the compiled kernels against the pure-Python fallback.

Run from the repository root after building the extension:

    python3 benchmarks/bench_backends.py

Each kernel is timed adaptively (enough repeats to fill ~0.3s), and the
two backends are checked for matching output on the way, since
interchangeability is the fallback's whole contract.
"""

import time
from array import array

import sys
import os

sys.path.insert(0, os.path.join(os.path.dirname(__file__), "..", "src"))

from payguard import backend
from payguard.rng import Rng

MIN_SECONDS = 0.3


def _measure(fn):
    """(seconds per call, result) with adaptive repeat count."""
    fn()  # warm up
    repeats = 1
    while True:
        start = time.perf_counter()
        for _ in range(repeats):
            result = fn()
        elapsed = time.perf_counter() - start
        if elapsed >= MIN_SECONDS:
            return elapsed / repeats, result
        repeats = max(repeats * 2, int(repeats * MIN_SECONDS / max(elapsed, 1e-9)))


def _randbuf(n, seed):
    return array("d", Rng(seed).normals(n))


def _flatten(result):
    if isinstance(result, tuple):
        out = []
        for part in result:
            out.extend(part)
        return out
    return list(result)


def _agree(x, y):
    a, b = _flatten(x), _flatten(y)
    return len(a) == len(b) and all(
        abs(p - q) <= 1e-9 * max(1.0, abs(p)) for p, q in zip(a, b))


def bench_case(name, flops, make_fn):
    print(f"\n{name}")
    reference = None
    baseline = None
    for backend_name in backend.available():
        with backend.use(backend_name):
            fn = make_fn(backend.kernels)
            seconds, result = _measure(fn)
        if reference is None:
            reference = result
        else:
            assert _agree(result, reference), f"{name}: backends disagree"
        rate = flops / seconds / 1e9
        note = ""
        if baseline is None:
            baseline = seconds
        else:
            note = f"  ({baseline / seconds:.0f}x vs python)" \
                if seconds < baseline else \
                f"  ({seconds / baseline:.0f}x slower than compiled)"
        print(f"  {backend_name:>8}: {seconds * 1e3:9.3f} ms/call"
              f"  {rate:8.3f} GFLOP/s{note}")


def main():
    names = backend.available()
    print(f"backends: {', '.join(names)}")
    if len(names) < 2:
        print("compiled extension not built; run "
              "`python3 setup.py build_ext --inplace` first")

    m, k, n = 64, 1024, 256
    a = _randbuf(m * k, 1)
    b = _randbuf(k * n, 2)
    bench_case(f"matmul_nn  [{m}x{k}] @ [{k}x{n}]", 2.0 * m * k * n,
               lambda kr: lambda: kr.matmul_nn(a, b, m, k, n))

    big = _randbuf(1 << 18, 3)
    bench_case("act_forward tanh  (262144 elements)", 4.0 * len(big),
               lambda kr: lambda: kr.act_forward(kr.ACT_TANH, big, 0.2))

    theta = _randbuf(1 << 17, 4)
    grad = _randbuf(1 << 17, 5)
    mom = array("d", bytes(8 * len(theta)))
    vel = array("d", bytes(8 * len(theta)))
    bench_case("adam_update  (131072 parameters)", 10.0 * len(theta),
               lambda kr: lambda: kr.adam_update(theta, grad, mom, vel, 1,
                                                 2e-4, 0.5, 0.999, 1e-8))

    state = 12345
    bench_case("fill_normal  (65536 draws)", 8.0 * (1 << 16),
               lambda kr: lambda: kr.fill_normal(state, 1 << 16)[0])


if __name__ == "__main__":
    main()
