"""Benchmark the compiled kernels against the numpy fallback.

Usage: python benchmarks/bench_kernels.py

The two hot loops are the batched classical Kloosterman sums and the
norm-bucketed dihedral sums; both backends are timed on identical inputs
and cross-checked before reporting.
"""

import time

import numpy as np

from genkl import kernels
from genkl.quadext import standard_extensions
from genkl.extchars import enumerate_xi, eta_restriction
from genkl.engine import xi_table


def time_call(fn, *args, repeats=3):
    best = float("inf")
    out = None
    for _ in range(repeats):
        t0 = time.perf_counter()
        out = fn(*args)
        best = min(best, time.perf_counter() - t0)
    return out, best


def bench_kloosterman(backends):
    print("\nkloosterman_many: S(m,n;c) for 300 pairs")
    rng = np.random.default_rng(0)
    for c in (1000, 9973, 59049):
        ms = rng.integers(1, 10**6, size=300)
        ns = rng.integers(1, 10**6, size=300)
        xs, invs = backends["python"].unit_inverses(c)
        row = {}
        vals = {}
        for name, mod in backends.items():
            vals[name], row[name] = time_call(mod.kloosterman_many, ms, ns, c, xs, invs)
        _report(f"c = {c}", row)
        if len(vals) == 2:
            err = np.abs(np.asarray(vals["python"]) - np.asarray(vals["cython"])).max()
            assert err < 1e-8, err


def bench_dihedral(backends):
    print("\ndihedral_bucket: I_xi(t, p^k) for all t")
    cases = [(3, 0, 2, 5), (3, 1, 2, 6), (2, 0, 5, 10), (5, 0, 2, 4)]
    for p, which, cxi, k in cases:
        ext = standard_extensions(p)[which]
        xi = enumerate_xi(ext, cxi, eta_restriction(ext), regular_only=True)[0]
        table = xi_table(xi)
        row = {}
        vals = {}
        for name, mod in backends.items():
            vals[name], row[name] = time_call(
                mod.dihedral_bucket, p, k, ext.A, ext.B, table, xi.group.M, repeats=2
            )
        _report(f"{ext.label()} k={k} ({p**k} buckets)", row)
        if len(vals) == 2:
            err = np.abs(np.asarray(vals["python"]) - np.asarray(vals["cython"])).max()
            assert err < 1e-8, err


def _report(label, row):
    parts = [f"{name}: {dt*1e3:9.2f} ms" for name, dt in row.items()]
    if len(row) == 2:
        parts.append(f"speedup: {row['python'] / row['cython']:.1f}x")
    print(f"  {label:42s} " + "   ".join(parts))


def main():
    backends = kernels.get_backends()
    print(f"available backends: {', '.join(backends)}")
    print(f"selected at import: {kernels.BACKEND}")
    bench_kloosterman(backends)
    bench_dihedral(backends)


if __name__ == "__main__":
    main()
