"""Benchmark the LSTM sequence kernels: compiled backend vs numpy fallback.

Times one forward and one full forward+backward pass over a batch, per
backend, at a few representative shapes.  Run from the repo root:

    python benchmarks/bench_kernels.py
    python benchmarks/bench_kernels.py --shapes 30x32x64 60x150x512 --repeat 5
"""

import argparse
import time

import numpy as np

from segrefine.tagger import kernels


def parse_shape(text):
    t, b, h = (int(x) for x in text.lower().split("x"))
    return t, b, h


def bench(backend, T, B, H, repeat):
    rng = np.random.default_rng(0)
    Wx = np.ascontiguousarray(rng.normal(0, 0.1, (4 * H, H)))
    Wh = np.ascontiguousarray(rng.normal(0, 0.1, (4 * H, H)))
    x = np.ascontiguousarray(rng.normal(0, 1, (T, B, H)))
    mask = np.ones((T, B))
    dh = np.ascontiguousarray(rng.normal(0, 1, (T, B, H)))

    fwd_times, full_times = [], []
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = backend.lstm_forward(Wx, Wh, x, mask)
        t1 = time.perf_counter()
        backend.lstm_backward(Wx, Wh, x, mask, *out, dh)
        t2 = time.perf_counter()
        fwd_times.append(t1 - t0)
        full_times.append(t2 - t0)
    return min(fwd_times), min(full_times)


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--shapes", nargs="+", default=["30x32x64", "60x32x128", "40x150x512"],
                    help="TxBxH triples")
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args()

    names = list(kernels.available_backends())
    print(f"backends: {', '.join(names)}")
    both = "c" in names and "py" in names
    header = f"{'shape (TxBxH)':>16} {'pass':>9}" + "".join(f" {n:>12}" for n in names)
    if both:
        header += f" {'py/c':>7}"
    print(header)
    for shape in args.shapes:
        T, B, H = parse_shape(shape)
        rows = {"forward": {}, "fwd+bwd": {}}
        for name in names:
            f, full = bench(kernels.get_backend(name), T, B, H, args.repeat)
            rows["forward"][name] = f
            rows["fwd+bwd"][name] = full
        for label, vals in rows.items():
            line = f"{shape:>16} {label:>9}" + "".join(f" {vals[n] * 1e3:>10.2f}ms" for n in names)
            if both:
                line += f" {vals['py'] / vals['c']:>6.2f}x"
            print(line)


if __name__ == "__main__":
    main()
