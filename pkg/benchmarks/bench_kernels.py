"""Compiled kernels versus their pure-Python fallbacks.

Times forest growing and SLIC on the same inputs with each backend and checks
the outputs are identical.

    python benchmarks/bench_kernels.py [--repeat 3] [--trees 20]
"""

from __future__ import annotations

import argparse
import importlib
import time

import numpy as np

from bias_probe.explain import synthetic_face
from bias_probe.forest import ForestParams, core

slic_mod = importlib.import_module("bias_probe.explain.slic")


def _best_of(fn, repeat: int) -> tuple[float, object]:
    best, out = float("inf"), None
    for _ in range(repeat):
        t0 = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t0)
    return best, out


def _with_kernel(module, kernel, fn):
    saved = module._kernel
    module._kernel = kernel
    try:
        return fn()
    finally:
        module._kernel = saved


def bench_forest(repeat: int, trees: int) -> dict:
    rng = np.random.default_rng(0)
    X = rng.standard_normal((375, 128))
    y = X[:, 0] + 0.1 * rng.standard_normal(375)
    params = ForestParams(n_trees=trees)
    run = lambda: core.fit_regression(X, y, params)  # noqa: E731
    compiled = importlib.import_module("bias_probe.forest._tree_kernel")
    fallback = importlib.import_module("bias_probe.forest._tree_fallback")
    tc, fc = _with_kernel(core, compiled, lambda: _best_of(run, repeat))
    tp, fp = _with_kernel(core, fallback, lambda: _best_of(run, 1))
    same = np.array_equal(core.predict(fc, X), core.predict(fp, X))
    return {"name": f"forest fit ({trees} trees, 375x128)", "compiled": tc, "python": tp, "identical": same}


def bench_slic(repeat: int) -> dict:
    img = synthetic_face(0, 0, 128)
    run = lambda: slic_mod.slic(img, 300)  # noqa: E731
    compiled = importlib.import_module("bias_probe.explain._slic_kernel")
    fallback = importlib.import_module("bias_probe.explain._slic_fallback")
    tc, sc = _with_kernel(slic_mod, compiled, lambda: _best_of(run, repeat))
    tp, sp = _with_kernel(slic_mod, fallback, lambda: _best_of(run, 1))
    return {"name": "SLIC (128x128, k=300)", "compiled": tc, "python": tp,
            "identical": bool(np.array_equal(sc.labels, sp.labels))}


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.split("\n")[0])
    ap.add_argument("--repeat", type=int, default=3, help="best-of count for the compiled backend")
    ap.add_argument("--trees", type=int, default=20)
    args = ap.parse_args(argv)
    rows = [bench_forest(args.repeat, args.trees), bench_slic(args.repeat)]
    print(f"{'kernel':<36}{'compiled s':>12}{'python s':>12}{'speedup':>10}  identical")
    for r in rows:
        print(f"{r['name']:<36}{r['compiled']:>12.3f}{r['python']:>12.3f}"
              f"{r['python'] / r['compiled']:>9.1f}x  {r['identical']}")


if __name__ == "__main__":
    main()
