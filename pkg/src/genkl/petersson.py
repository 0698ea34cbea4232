"""Desk-scale numerical verification of the Petersson formula.

The geometric side is summed over admissible moduli with J-Bessel weights;
eigenvalue data comes from the eta-product / Eisenstein-series expansions
(level 1), with an append-only text cache for anything external.  Only
eigenvalue ratios are ever asserted: the ratio P(m,n)/P(1,1) removes the
harmonic weight and the Petersson norm at one stroke in the
one-dimensional weights.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.special import jv

from .engine import GlobalTestFunction, classical_S_many, h_global

# weights with dim S_kappa(SL_2(Z)) = 1
ONE_DIMENSIONAL_WEIGHTS = (12, 16, 18, 20, 22, 26)


# ---------------------------------------------------------------------------
# Eigenvalue data


def _sparse_eta_cube(n_max: int) -> dict[int, int]:
    """Coefficients of prod (1-q^n)^3 = sum (-1)^k (2k+1) q^{k(k+1)/2}."""
    out = {}
    k = 0
    while k * (k + 1) // 2 <= n_max:
        out[k * (k + 1) // 2] = (-1) ** k * (2 * k + 1)
        k += 1
    return out


def delta_coeffs(n_max: int) -> list[int]:
    """tau(1..n_max): coefficients of q prod (1-q^n)^24, exact integers.

    prod (1-q^n)^24 = (eta-cube series)^8; multiplying the dense series by
    the sparse cube seven times keeps the work near n_max^{3/2}.
    """
    if n_max > 10**5:
        raise ValueError("n_max capped at 1e5")
    cube = _sparse_eta_cube(n_max)
    dense = [0] * n_max
    for i, c in cube.items():
        if i < n_max:
            dense[i] = c
    for _ in range(7):
        nxt = [0] * n_max
        for i, c in cube.items():
            if i >= n_max:
                break
            for j in range(n_max - i):
                if dense[j]:
                    nxt[i + j] += c * dense[j]
        dense = nxt
    return [dense[n - 1] for n in range(1, n_max + 1)]


def _mult_series(a: list[int], b: list[int], n_max: int) -> list[int]:
    out = [0] * n_max
    for i, ai in enumerate(a):
        if ai == 0 or i >= n_max:
            continue
        for j in range(min(len(b), n_max - i)):
            if b[j]:
                out[i + j] += ai * b[j]
    return out


def _sigma_series(power: int, n_max: int) -> list[int]:
    out = [0] * n_max
    for d in range(1, n_max):
        dp = d**power
        for n in range(d, n_max, d):
            out[n] += dp
    return out


@lru_cache(maxsize=16)
def eigenform_coeffs(kappa: int, n_max: int) -> tuple[int, ...]:
    """a(1..n_max) of the normalized eigenform of weight kappa, level 1,
    for the one-dimensional weights: products of E4, E6 with Delta."""
    if kappa not in ONE_DIMENSIONAL_WEIGHTS:
        raise ValueError(f"dim S_kappa != 1 for kappa = {kappa}")
    size = n_max + 1  # exponent-indexed arrays
    series = [0] + delta_coeffs(n_max)
    e4 = [240 * s for s in _sigma_series(3, size)]
    e4[0] = 1
    e6 = [-504 * s for s in _sigma_series(5, size)]
    e6[0] = 1
    extra = {12: [], 16: [e4], 18: [e6], 20: [e4, e4], 22: [e4, e6], 26: [e4, e4, e6]}
    for f in extra[kappa]:
        series = _mult_series(series, f, size)
    return tuple(series[1:])


def hecke_eigenvalues(kappa: int, n_max: int) -> list[float]:
    """lambda(1..n_max) = a(n)/n^{(kappa-1)/2}."""
    coeffs = eigenform_coeffs(kappa, n_max)
    return [coeffs[n - 1] / n ** ((kappa - 1) / 2) for n in range(1, n_max + 1)]


@dataclass(frozen=True)
class EigenData:
    """Hecke-normalized eigenvalues lambda(n), n = 1..n_max."""

    level: int
    weight: int
    lams: tuple[complex, ...]
    source: str = "eta-product"

    def lam(self, n: int) -> complex:
        return self.lams[n - 1]

    def hecke_spot_check(self, tol: float = 1e-9) -> bool:
        """lambda(m) lambda(n) = sum over d | (m,n), (d,N)=1 of
        lambda(mn/d^2), spot-checked on small coprime-and-not pairs."""
        L = len(self.lams)
        for m in range(2, 8):
            for n in range(2, 8):
                if m * n > L:
                    continue
                rhs = sum(
                    self.lam(m * n // (d * d))
                    for d in range(1, min(m, n) + 1)
                    if m % d == 0 and n % d == 0 and math.gcd(d, self.level) == 1
                )
                if abs(self.lam(m) * self.lam(n) - rhs) > tol:
                    return False
        return True


def builtin_eigendata(kappa: int, n_max: int) -> EigenData:
    return EigenData(1, kappa, tuple(hecke_eigenvalues(kappa, n_max)))


def write_eigen_cache(path: str, data: EigenData):
    """Append-only text cache: one self-describing record per line."""
    with open(path, "a") as fh:
        for n, lam in enumerate(data.lams, start=1):
            lam = complex(lam)
            rec = {
                "level": data.level,
                "weight": data.weight,
                "n": n,
                "lambda_re": lam.real,
                "lambda_im": lam.imag,
                "source": data.source,
            }
            fh.write(json.dumps(rec, sort_keys=True) + "\n")


def ingest_eigendata(
    source: str, level: int, weight: int, online: bool = False
) -> EigenData:
    """Read eigenvalues from a cache file, or (opt-in) from the remote
    endpoint named by GENKL_EIGEN_ENDPOINT, writing through to the cache.
    Offline operation never touches the network."""
    if not os.path.exists(source):
        if not online:
            raise FileNotFoundError(f"no cache at {source} (offline mode)")
        _fetch_remote(source, level, weight)
    lams: dict[int, complex] = {}
    src_tag = "external-cache"
    with open(source) as fh:
        for line in fh:
            line = line.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ValueError(f"malformed cache record: {line[:80]}") from exc
            if rec.get("level") != level or rec.get("weight") != weight:
                continue
            lams[int(rec["n"])] = complex(rec["lambda_re"], rec["lambda_im"])
            src_tag = rec.get("source", src_tag)
    if not lams or 1 not in lams:
        raise ValueError("cache holds no usable records for this form")
    n_max = max(lams)
    if any(n not in lams for n in range(1, n_max + 1)):
        raise ValueError("cache is missing intermediate coefficients")
    if abs(lams[1] - 1) > 1e-12:
        raise ValueError("lambda(1) != 1: not Hecke-normalized")
    data = EigenData(level, weight, tuple(lams[n] for n in range(1, n_max + 1)), src_tag)
    if not data.hecke_spot_check():
        raise ValueError("Hecke relation fails: corrupt payload")
    return data


def _fetch_remote(path: str, level: int, weight: int):
    endpoint = os.environ.get("GENKL_EIGEN_ENDPOINT")
    if not endpoint:
        raise RuntimeError("online mode needs GENKL_EIGEN_ENDPOINT")
    import urllib.request

    url = f"{endpoint.rstrip('/')}/eigenvalues?level={level}&weight={weight}"
    with urllib.request.urlopen(url) as resp:
        payload = resp.read().decode()
    with open(path, "w") as fh:
        fh.write(payload)


# ---------------------------------------------------------------------------
# Geometric side


@dataclass(frozen=True)
class PeterssonValue:
    value: complex
    tail_estimate: float


def petersson_geometric(
    gtf: GlobalTestFunction, kappa: int, m: int, n: int, c_max: int
) -> PeterssonValue:
    """delta_{m=n} delta_infty delta_fin + ((kappa-1)/2) i^{-kappa}
    sum over c <= c_max, k(F) | c of H(m,n;c)/c J_{kappa-1}(4 pi sqrt(mn)/c),
    summed in ascending c with compensation; the tail estimate uses the
    small-argument J bound and the trivial bound on H."""
    if kappa % 2 or kappa < 4:
        raise ValueError("kappa must be even and >= 4")
    if math.gcd(m * n, gtf.level) != 1 or m < 1 or n < 1:
        raise ValueError("m, n must be positive and coprime to the level")
    kF = gtf.geometric_conductor
    delta_inf = (kappa - 1) / (4 * math.pi)
    diag = delta_inf * float(gtf.delta_fin) if m == n else 0.0
    x_of = 4 * math.pi * math.sqrt(m * n)
    pref = (kappa - 1) / 2 * (1j) ** (-kappa)
    total = 0j
    comp = 0j
    for c in range(kF, c_max + 1, kF):
        term = pref * h_global(gtf, m, n, c) / c * jv(kappa - 1, x_of / c)
        y = term - comp
        t = total + y
        comp = (t - total) - y
        total = t
    return PeterssonValue(diag + total, _tail_estimate(gtf, kappa, m, n, c_max))


def _tail_estimate(gtf: GlobalTestFunction, kappa: int, m: int, n: int, c_max: int) -> float:
    """Bound sum_{c > c_max} |H(m,n;c)/c J_{kappa-1}(4 pi sqrt(mn)/c)| via
    |J_nu(x)| <= (x/2)^nu / nu! and |H| <= d(c) sqrt(c) * prod_p local
    trivial bounds; crude but safely summable for kappa >= 4."""
    x = 2 * math.pi * math.sqrt(m * n)
    # |S(m,n;c0)| <= d(c0) sqrt(gcd..) sqrt(c0) <= c0; local factors bounded
    # by f_p(1) p^{k+y_p} <= f_p(1) c_p^2 p^{y_p}: fold into C c^2
    C = 1.0
    for tf in gtf.locals:
        C *= float(tf.f_one()) * tf.p ** tf.support_exponent()
    nu = kappa - 1
    log_num = nu * math.log(x)
    log_gam = math.lgamma(nu + 1)
    tail = 0.0
    for j in range(1, 200):
        c = c_max + j
        tail += C * c * math.exp(log_num - log_gam - nu * math.log(c)) / c
    # geometric continuation beyond the window
    c = c_max + 200
    ratio = ((c - 1) / c) ** (nu - 1)
    last = C * math.exp(log_num - log_gam - (nu) * math.log(c))
    tail += last / (1 - ratio) if ratio < 1 else float("inf")
    return tail


def ratio_verify(
    kappas,
    pairs,
    c_max: int = 1000,
    gtf: GlobalTestFunction | None = None,
    eigen: dict[int, EigenData] | None = None,
) -> dict:
    """|P(m,n)/P(1,1) - lambda(m) lambda(n)| for the one-dimensional
    weights; returns the per-pair deviations and the maximum."""
    gtf = gtf if gtf is not None else GlobalTestFunction(())
    if gtf.locals:
        raise ValueError("the ratio oracle needs the all-unramified tensor")
    report = {"max_deviation": 0.0, "entries": []}
    n_need = max(max(m, n) for m, n in pairs)
    for kappa in kappas:
        if kappa not in ONE_DIMENSIONAL_WEIGHTS:
            raise ValueError(f"dim S_kappa != 1 for kappa = {kappa}")
        data = (eigen or {}).get(kappa) or builtin_eigendata(kappa, n_need)
        base = _petersson_batch(kappa, [(1, 1)], c_max)[0]
        vals = _petersson_batch(kappa, pairs, c_max)
        for (m, n), v in zip(pairs, vals):
            lam = (data.lam(m) * data.lam(n).conjugate()).real
            dev = abs(v / base - lam)
            report["entries"].append(
                {"kappa": kappa, "m": m, "n": n, "ratio": (v / base).real, "target": lam, "dev": dev}
            )
            report["max_deviation"] = max(report["max_deviation"], dev)
    return report


def _petersson_batch(kappa: int, pairs, c_max: int) -> np.ndarray:
    """Level-1 geometric side for many (m,n) at once: the Kloosterman sums
    are batched per modulus, J-Bessel vectorized per pair."""
    ms = np.array([p[0] for p in pairs], dtype=np.int64)
    ns = np.array([p[1] for p in pairs], dtype=np.int64)
    delta_inf = (kappa - 1) / (4 * math.pi)
    out = np.where(ms == ns, delta_inf, 0.0).astype(np.complex128)
    pref = (kappa - 1) / 2 * (1j) ** (-kappa)
    xs = 4 * math.pi * np.sqrt(ms * ns)
    acc = np.zeros(len(pairs), dtype=np.complex128)
    for c in range(1, c_max + 1):
        S = classical_S_many(ms, ns, c)
        acc += S / c * jv(kappa - 1, xs / c)
    return out + pref * acc
