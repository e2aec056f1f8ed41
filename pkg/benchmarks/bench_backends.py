"""Timing comparison of the jit kernels against the plain-numpy fallbacks.

Runs the chain sweep on a full wordline and BP decoding on the bundled
desk-scale code, prints a table of median wall times per call, and checks
the two backends agree on the numbers they produce.

    python3 benchmarks/bench_backends.py [--reps N]
"""

import argparse
import time

import numpy as np

from flashdet import _kernels_numba, _kernels_numpy
from flashdet.channel import mlc_device, simulate_wordline, state_stats
from flashdet.ldpc import encode, load_bundled_code


def median_ms(fn, reps):
    times = []
    for _ in range(reps):
        t0 = time.perf_counter()
        fn()
        times.append(time.perf_counter() - t0)
    return 1e3 * float(np.median(times))


def chain_sweep_inputs(n=4608):
    params = mlc_device(beta=1.0, gamma_v=0.1, alpha=0.25)
    rng = np.random.default_rng(1)
    victims = rng.integers(0, 4, n)
    aggressors = rng.integers(0, 4, n)
    y = simulate_wordline(params, victims, aggressors, rng)
    means, variances = state_stats(params)
    logp = -0.5 * ((y[:, None, None] - means[None]) ** 2 / variances[None]
                   + np.log(variances)[None])
    logp -= logp.max(axis=(1, 2), keepdims=True)
    evidence = np.exp(logp).mean(axis=1)  # uniform level prior
    return np.ascontiguousarray(evidence)


def bp_inputs(sigma=0.55):
    code = load_bundled_code(2304)
    rng = np.random.default_rng(2)
    cw = encode(code, rng.integers(0, 2, code.k).astype(np.uint8))
    y = (1.0 - 2.0 * cw) + sigma * rng.standard_normal(code.n)
    llr = np.clip(2.0 * y / sigma**2, -30, 30)
    return code, llr


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--reps", type=int, default=9, help="timing repetitions")
    args = parser.parse_args()

    evidence = chain_sweep_inputs()
    code, llr = bp_inputs()

    jobs = {
        "forward_backward (n=4608, q=4)": {
            "numba": lambda: _kernels_numba.forward_backward(evidence, 4, True, True),
            "numpy": lambda: _kernels_numpy.forward_backward(evidence, 4, True, True),
        },
        "bp_decode (n=2304, 20 iters)": {
            "numba": lambda: _kernels_numba.bp_decode(
                llr, code.check_ptr, code.check_var, 20, 30.0, False),
            "numpy": lambda: _kernels_numpy.bp_decode(
                llr, code.check_ptr, code.check_var, 20, 30.0, False),
        },
    }

    print(f"{'kernel':36} {'backend':8} {'median ms':>10}")
    print("-" * 58)
    for label, impls in jobs.items():
        results = {}
        rows = []
        for backend, fn in impls.items():
            fn()  # warm the jit before timing
            rows.append((backend, median_ms(fn, args.reps)))
            results[backend] = fn()
        for backend, ms in rows:
            print(f"{label:36} {backend:8} {ms:10.2f}")
        a, b = results["numba"], results["numpy"]
        first_a = a if isinstance(a, np.ndarray) else a[0]
        first_b = b if isinstance(b, np.ndarray) else b[0]
        gap = float(np.abs(first_a - first_b).max())
        print(f"{'':36} agreement max|diff| = {gap:.2e}")
    print("\nselect the slow path at import time with FLASHDET_BACKEND=numpy")


if __name__ == "__main__":
    main()
