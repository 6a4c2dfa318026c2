"""Timing of the compiled kernels against the pure-Python fallback."""

from __future__ import annotations

import time

import numpy as np

from . import kernels


def _subset_case(n, copies, support, seed):
    rng = np.random.default_rng(seed)
    menus = []
    for _ in range(n):
        vals = np.sort(rng.choice(np.arange(1, 101), size=support, replace=False)).astype(float)
        tails = np.sort(rng.random(support))[::-1]
        menus.append(list(zip(vals.tolist(), tails.tolist())))
    return menus, copies


def _gap_case(objects, bins, cap, versions, seed):
    rng = np.random.default_rng(seed)
    options = []
    for _ in range(objects):
        opts = [((0,) * bins, 0.0)]
        for b in range(bins):
            for _ in range(versions):
                d = [0] * bins
                d[b] = int(rng.integers(1, cap + 1))
                opts.append((tuple(d), float(rng.random() * 10)))
        options.append(opts)
    return [cap] * bins, options


def _best_of(fn, repeats):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t = time.perf_counter()
        out = fn()
        best = min(best, time.perf_counter() - t)
    return best, out


def run_benchmark(repeats: int = 3, scale: int = 1):
    """Rows ``(kernel, case, python_s, compiled_s, speedup, agree)``.

    ``compiled_s`` is empty when the extension is not built.
    """
    cases = [
        ("subset_dp", f"n={10 + scale} K=3 L=3", lambda: _subset_case(10 + scale, 3, 3, 0)),
        ("vg_dp", f"objects={20 * scale} bins=3 cap=8", lambda: _gap_case(20 * scale, 3, 8, 3, 0)),
    ]
    rows = []
    for kernel, label, make in cases:
        args = make()
        py_fn = getattr(kernels.python, kernel)
        py_t, py_out = _best_of(lambda: py_fn(*args), repeats)
        row = {"kernel": kernel, "case": label, "python_s": f"{py_t:.6f}",
               "compiled_s": "", "speedup": "", "agree": ""}
        if kernels.compiled is not None:
            c_fn = getattr(kernels.compiled, kernel)
            c_t, c_out = _best_of(lambda: c_fn(*args), repeats)
            row["compiled_s"] = f"{c_t:.6f}"
            row["speedup"] = f"{py_t / c_t:.1f}"
            if kernel == "subset_dp":
                agree = np.allclose(np.asarray(py_out[0], dtype=float), c_out[0]) and np.array_equal(
                    np.asarray(py_out[1]), c_out[1])
            else:
                agree = py_out[1] == c_out[1]
            row["agree"] = str(bool(agree))
        rows.append(row)
    return rows
