"""Exact arithmetic mod p^k and the classical exponential-sum toolbox.

Everything here is desk-scale: moduli are prime powers small enough that
full discrete-log tables and brute-force sums are practical.  Complex
values are double precision; root-of-unity arguments are reduced to [0,1)
as exact fractions before calling exp, so phase error stays at machine
level even for large numerators.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import lru_cache

INF_VALUATION = math.inf

# Discrete-log tables are full maps; beyond this the module refuses.
GROUP_CAPACITY = 10**7


class CapacityError(Exception):
    """Requested group or table exceeds the desk-scale capacity bound."""


def e(num: int, den: int) -> complex:
    """exp(2 pi i num/den) with the argument reduced mod 1 first."""
    return cmath.exp(2j * cmath.pi * ((num % den) / den))


def valuation(n: int, p: int):
    """Largest t with p^t | n; math.inf for n = 0."""
    if n == 0:
        return INF_VALUATION
    n = abs(n)
    t = 0
    while n % p == 0:
        n //= p
        t += 1
    return t


def phi_pk(p: int, k: int) -> int:
    """Euler phi of p^k."""
    return 1 if k == 0 else p ** (k - 1) * (p - 1)


def nu(n: int) -> int:
    """Index [SL2(Z) : Gamma_0(n)] = n * prod_{p|n} (1 + 1/p)."""
    out = Fraction(n)
    m, q = n, 2
    while q * q <= m:
        if m % q == 0:
            out *= Fraction(q + 1, q)
            while m % q == 0:
                m //= q
        q += 1
    if m > 1:
        out *= Fraction(m + 1, m)
    assert out.denominator == 1
    return int(out)


@dataclass(frozen=True)
class ResidueClass:
    """An element of Z/p^k, kept reduced."""

    value: int
    p: int
    k: int

    def __post_init__(self):
        object.__setattr__(self, "value", self.value % self.p**self.k)

    @property
    def modulus(self) -> int:
        return self.p**self.k

    def __add__(self, other: "ResidueClass") -> "ResidueClass":
        assert (self.p, self.k) == (other.p, other.k)
        return ResidueClass(self.value + other.value, self.p, self.k)

    def __mul__(self, other: "ResidueClass") -> "ResidueClass":
        assert (self.p, self.k) == (other.p, other.k)
        return ResidueClass(self.value * other.value, self.p, self.k)

    def inverse(self) -> "ResidueClass":
        return ResidueClass(pow(self.value, -1, self.modulus), self.p, self.k)

    def is_unit(self) -> bool:
        return self.value % self.p != 0


# ---------------------------------------------------------------------------
# Square roots mod p^k


def hensel_sqrt_set(l, p: int, k: int) -> set[int]:
    """All x mod p^k with x^2 = l (mod p^k).  l may be an int or a
    ResidueClass.

    Layered lifting: roots mod p^j extend to roots mod p^{j+1} by scanning
    the p candidates above each root.  Root counts stay bounded by
    2^kappa * p^{min(v(l),k)/2}, so this is cheap at desk scale.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if isinstance(l, ResidueClass):
        l = l.value
    pk = p**k
    l %= pk
    roots = {x for x in range(p) if (x * x - l) % p == 0}
    mod = p
    for _ in range(k - 1):
        nxt = set()
        for r in roots:
            for t in range(p):
                cand = r + t * mod
                if (cand * cand - l) % (mod * p) == 0:
                    nxt.add(cand)
        roots = nxt
        mod *= p
    return roots


def sqrt_mod_pk(l: int, p: int, k: int) -> set[int]:
    """Alias for hensel_sqrt_set (reads better at some call sites)."""
    return hensel_sqrt_set(l, p, k)


# ---------------------------------------------------------------------------
# Classical sums


def ramanujan_sum(q: int, n: int) -> int:
    """R_q(n) = sum over x mod q coprime to q of e(nx/q), for q = p^j."""
    p, j = _as_prime_power(q)
    if j == 0:
        return 1
    t = j if n == 0 else min(valuation(n, p), j)
    if t >= j:
        return phi_pk(p, j)
    if t == j - 1:
        return -(p ** (j - 1))
    return 0


def _as_prime_power(q: int) -> tuple[int, int]:
    if q == 1:
        return 2, 0
    for p in range(2, q + 1):
        if q % p == 0:
            j = valuation(q, p)
            if p**j != q:
                raise ValueError(f"{q} is not a prime power")
            return p, j
    raise ValueError(f"{q} is not a prime power")


def kloosterman_classical(m: int, n: int, c: int) -> complex:
    """S(m,n;c) = sum over x mod c, (x,c)=1 of e((m x + n xbar)/c)."""
    if c < 1:
        raise ValueError("c must be >= 1")
    if c == 1:
        return 1.0 + 0.0j
    from . import kernels

    xs, xinvs = kernels.unit_inverses(c)
    return complex(kernels.kloosterman_many([m], [n], c, xs, xinvs)[0])


def twisted_kloosterman(chi: "DirichletCharacter", m: int, n: int, q: int) -> complex:
    """S_chi(m,n;q) = sum over x mod q coprime of chi(x) e((m x + n xbar)/q).

    chi is a character mod p^j with p^j | q; it is evaluated at x mod p^j.
    """
    p, k = _as_prime_power(q)
    if chi.modulus_exponent > k or chi.p != p and chi.modulus > 1:
        raise ValueError("modulus of chi must divide q")
    total = 0j
    for x in range(1, q):
        if x % p == 0:
            continue
        xinv = pow(x, -1, q)
        total += chi(x) * e(m * x + n * xinv, q)
    return total


def gauss_sum(chi: "DirichletCharacter") -> complex:
    """tau(chi) for chi primitive mod its modulus; |tau| = sqrt(modulus)."""
    if not chi.is_primitive():
        raise ValueError("gauss_sum requires a primitive character")
    return gauss_sum_at_level(chi, chi.modulus_exponent)


def gauss_sum_at_level(chi: "DirichletCharacter", k: int) -> complex:
    """sum over x mod p^k coprime of chi(x) e(x/p^k); chi mod p^j, j <= k."""
    p = chi.p
    q = p**k
    if k < chi.modulus_exponent:
        raise ValueError("level below the modulus of chi")
    if q == 1:
        return 1.0 + 0.0j
    return sum(chi(x) * e(x, q) for x in range(1, q) if x % p != 0)


# ---------------------------------------------------------------------------
# Dirichlet characters of prime-power modulus


@lru_cache(maxsize=None)
def unit_group_zpk(p: int, k: int):
    """Generator decomposition of (Z/p^k)^* with a full dlog table.

    Odd p: cyclic on one primitive root.  p = 2: trivial for k <= 1,
    <-1> for k = 2, <-1> x <5> for k >= 3.
    """
    q = p**k
    if phi_pk(p, k) > GROUP_CAPACITY:
        raise CapacityError(f"(Z/{p}^{k})^* exceeds capacity")
    if k == 0 or (p == 2 and k == 1):
        return (), (), {1 % q: ()}
    if p == 2:
        if k == 2:
            return (3,), (2,), {1: (0,), 3: (1,)}
        gens = ((q - 1) % q, 5)
        orders = (2, 2 ** (k - 2))
    else:
        g = _primitive_root_mod_pk(p, k)
        gens = (g,)
        orders = (phi_pk(p, k),)
    dlog: dict[int, tuple[int, ...]] = {}
    if len(gens) == 1:
        x = 1
        for j in range(orders[0]):
            dlog[x] = (j,)
            x = x * gens[0] % q
    else:
        for j0 in range(orders[0]):
            x0 = pow(gens[0], j0, q)
            x = x0
            for j1 in range(orders[1]):
                dlog[x] = (j0, j1)
                x = x * gens[1] % q
    return gens, orders, dlog


def _primitive_root_mod_pk(p: int, k: int) -> int:
    for g in range(2, p):
        if _is_primitive_root_mod_p(g, p):
            break
    else:
        raise AssertionError("no primitive root found")
    if k == 1:
        return g
    # g works mod p^k iff g^(p-1) != 1 mod p^2
    if pow(g, p - 1, p * p) == 1:
        g += p
    return g


def _is_primitive_root_mod_p(g: int, p: int) -> bool:
    n = p - 1
    m, q = n, 2
    facs = []
    while q * q <= m:
        if m % q == 0:
            facs.append(q)
            while m % q == 0:
                m //= q
        q += 1
    if m > 1:
        facs.append(m)
    return all(pow(g, n // f, p) != 1 for f in facs)


class DirichletCharacter:
    """A character of (Z/p^k)^* stored as exponents against fixed generators.

    chi(g_i) = exp(2 pi i exps[i]/orders[i]); chi is zero off units.
    """

    def __init__(self, p: int, k: int, exps: tuple[int, ...]):
        gens, orders, dlog = unit_group_zpk(p, k)
        if len(exps) != len(orders):
            raise ValueError("exponent vector has wrong length")
        self.p = p
        self.modulus_exponent = k
        self.modulus = p**k
        self.gens = gens
        self.orders = orders
        self.exps = tuple(x % o for x, o in zip(exps, orders))
        self._dlog = dlog
        self._conductor_exponent: int | None = None

    @classmethod
    def trivial(cls, p: int, k: int = 0) -> "DirichletCharacter":
        gens, orders, _ = unit_group_zpk(p, k)
        return cls(p, k, tuple(0 for _ in orders))

    def __call__(self, n: int) -> complex:
        n %= self.modulus
        d = self._dlog.get(n)
        if d is None:
            return 0j
        num, den = self._phase(d)
        return e(num, den)

    def _phase(self, d: tuple[int, ...]) -> tuple[int, int]:
        den = 1
        for o in self.orders:
            den = den * o // math.gcd(den, o)
        num = sum(x * d_i * (den // o) for x, d_i, o in zip(self.exps, d, self.orders))
        return num % den, den

    def phase(self, n: int):
        """Exact phase of chi(n) as a Fraction in [0,1); None off units."""
        from fractions import Fraction

        d = self._dlog.get(n % self.modulus)
        if d is None:
            return None
        num, den = self._phase(d)
        return Fraction(num, den)

    def is_trivial(self) -> bool:
        return all(x == 0 for x in self.exps)

    def conductor_exponent(self) -> int:
        """Smallest j with chi trivial on {x = 1 mod p^j}."""
        if self._conductor_exponent is None:
            j = self.modulus_exponent
            while j > 0 and self._trivial_on_level(j - 1):
                j -= 1
            self._conductor_exponent = j
        return self._conductor_exponent

    def _trivial_on_level(self, j: int) -> bool:
        q = self.modulus
        step = self.p**j
        return all(
            self._phase(self._dlog[x % q])[0] == 0
            for x in range(1, q, step)
            if x % self.p != 0
        )

    @property
    def conductor(self) -> int:
        return self.p ** self.conductor_exponent()

    def is_primitive(self) -> bool:
        return self.conductor_exponent() == self.modulus_exponent

    def order(self) -> int:
        out = 1
        for x, o in zip(self.exps, self.orders):
            ordx = o // math.gcd(x, o)
            out = out * ordx // math.gcd(out, ordx)
        return out

    def __mul__(self, other: "DirichletCharacter") -> "DirichletCharacter":
        a, b = self, other
        if a.modulus_exponent < b.modulus_exponent:
            a, b = b, a
        b_lift = b.extend(a.modulus_exponent)
        return DirichletCharacter(
            a.p, a.modulus_exponent, tuple(x + y for x, y in zip(a.exps, b_lift.exps))
        )

    def inverse(self) -> "DirichletCharacter":
        return DirichletCharacter(
            self.p, self.modulus_exponent, tuple(-x for x in self.exps)
        )

    def conjugate(self) -> "DirichletCharacter":
        return self.inverse()

    def extend(self, k: int) -> "DirichletCharacter":
        """The same character viewed mod p^k, k >= modulus exponent."""
        if k < self.modulus_exponent:
            raise ValueError("can only extend to a larger modulus")
        if k == self.modulus_exponent:
            return self
        gens, orders, _ = unit_group_zpk(self.p, k)
        exps = []
        for g, o in zip(gens, orders):
            val = self._phase(self._dlog[g % self.modulus])
            # chi(g) = e(val); solve exponent x with x/o = val
            exps.append(val[0] * o // val[1])
        return DirichletCharacter(self.p, k, tuple(exps))

    def restrict_to_conductor(self) -> "DirichletCharacter":
        c = self.conductor_exponent()
        gens, orders, _ = unit_group_zpk(self.p, c)
        exps = []
        for g, o in zip(gens, orders):
            num, den = self._phase(self._dlog[g % self.modulus])
            assert (num * o) % den == 0
            exps.append(num * o // den)
        return DirichletCharacter(self.p, c, tuple(exps))

    def __eq__(self, other) -> bool:
        return (
            isinstance(other, DirichletCharacter)
            and self.p == other.p
            and self.modulus_exponent == other.modulus_exponent
            and self.exps == other.exps
        )

    def __hash__(self) -> int:
        return hash((self.p, self.modulus_exponent, self.exps))

    def __repr__(self) -> str:
        return f"DirichletCharacter(p={self.p}, k={self.modulus_exponent}, exps={self.exps})"


def enumerate_dirichlet(p: int, k: int) -> list[DirichletCharacter]:
    """All phi(p^k) characters mod p^k."""
    _, orders, _ = unit_group_zpk(p, k)
    chars = [DirichletCharacter(p, k, ())] if not orders else []
    if orders:
        def rec(prefix):
            i = len(prefix)
            if i == len(orders):
                chars.append(DirichletCharacter(p, k, tuple(prefix)))
                return
            for x in range(orders[i]):
                rec(prefix + [x])

        rec([])
    return chars


def legendre_symbol(a: int, p: int) -> int:
    a %= p
    if a == 0:
        return 0
    r = pow(a, (p - 1) // 2, p)
    return 1 if r == 1 else -1


def hilbert_symbol(a: int, b: int, p: int) -> int:
    """(a,b)_p for nonzero integers a, b; case formulas, eight-case at p=2."""
    if a == 0 or b == 0:
        raise ValueError("hilbert symbol needs nonzero arguments")
    alpha, beta = valuation(a, p), valuation(b, p)
    u, w = a // p**alpha, b // p**beta
    if p != 2:
        s = 1
        if alpha % 2 and beta % 2 and (p - 1) // 2 % 2:
            s = -1
        if beta % 2:
            s *= legendre_symbol(u, p)
        if alpha % 2:
            s *= legendre_symbol(w, p)
        return s
    eps_u, eps_w = ((u - 1) // 2) % 2, ((w - 1) // 2) % 2
    omega_u, omega_w = ((u * u - 1) // 8) % 2, ((w * w - 1) // 8) % 2
    exp = eps_u * eps_w + alpha * omega_w + beta * omega_u
    return -1 if exp % 2 else 1
