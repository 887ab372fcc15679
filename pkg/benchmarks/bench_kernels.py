"""Compare the compiled and numpy kernel backends.

    python benchmarks/bench_kernels.py [--repeat 5]

Times the batch eigensolver, path continuation, single assignments and a
full loop track under each backend, and reports the speed-up.
"""
import argparse
import contextlib
import timeit

import numpy as np

from epholo import _backend, _pykernels
from epholo.families import paper_3x3
from epholo.tracker import ParameterLoop, track

try:
    from epholo import _ckernels
except ImportError:
    _ckernels = None

NAMES = ("eigvals_batch", "discriminant_batch", "min_gap_batch", "best_assignment", "continue_path")


@contextlib.contextmanager
def use(kernels):
    saved = {n: getattr(_backend, n) for n in NAMES}
    for n in NAMES:
        setattr(_backend, n, getattr(kernels, n))
    try:
        yield
    finally:
        for n, fn in saved.items():
            setattr(_backend, n, fn)


def cases():
    rng = np.random.default_rng(0)
    mats = rng.normal(size=(100_000, 3, 3)) + 1j * rng.normal(size=(100_000, 3, 3))
    vals = _pykernels.eigvals_batch(mats[:20_000])
    pairs = [(vals[k], vals[k + 1]) for k in range(2000)]
    loop = ParameterLoop.rectangle((0.9, 1.55), (2.4, 2.00), samples_per_segment=200)
    f = paper_3x3()
    return {
        "eigvals_batch 1e5 3x3": lambda: _backend.eigvals_batch(mats),
        "continue_path 2e4 rows": lambda: _backend.continue_path(vals),
        "best_assignment x2000": lambda: [_backend.best_assignment(a, b) for a, b in pairs],
        "track two-EP loop": lambda: track(f, loop, precheck=False),
        "track + precheck": lambda: track(f, loop),
    }


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    args = ap.parse_args(argv)

    backends = [("python", _pykernels)]
    if _ckernels is not None:
        backends.append(("cython", _ckernels))
    else:
        print("compiled kernels not built; timing the numpy backend only")

    table = {}
    for label, fn in cases().items():
        for name, mod in backends:
            with use(mod):
                fn()  # warm up
                table[label, name] = min(timeit.repeat(fn, number=1, repeat=args.repeat))

    print(f"{'case':<26}" + "".join(f"{n:>12}" for n, _ in backends) + ("     speed-up" if len(backends) > 1 else ""))
    for label in cases():
        row = f"{label:<26}" + "".join(f"{table[label, n] * 1e3:>10.2f}ms" for n, _ in backends)
        if len(backends) > 1:
            row += f"{table[label, 'python'] / table[label, 'cython']:>12.1f}x"
        print(row)


if __name__ == "__main__":
    main()
