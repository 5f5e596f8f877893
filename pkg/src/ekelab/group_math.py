"""Modular arithmetic over the full multiplicative group mod a prime.

Group elements and exponents are plain ``int`` values; the functions here
check ranges against a :class:`GroupParams` where it matters.  The discrete
log oracle is classical baby-step/giant-step and exists to stand in for a
quantum adversary's dlog capability, so every call is counted on a
:class:`DlogMeter`.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass
from functools import lru_cache

PRIME_SEARCH_BUDGET = 10**6
MILLER_RABIN_ROUNDS = 40

_SMALL_PRIMES = (2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47)


class NoPrimeFound(RuntimeError):
    pass


class NotInvertible(ValueError):
    """Raised when an exponent shares a factor with the group order."""


@dataclass(frozen=True)
class GroupParams:
    q: int
    g: int

    @property
    def n(self) -> int:
        return self.q - 1

    @property
    def element_bytes(self) -> int:
        return (self.q.bit_length() + 7) // 8

    def check_element(self, x: int) -> int:
        if not 1 <= x <= self.q - 1:
            raise ValueError(f"{x} is not an element of Z_{self.q}*")
        return x

    def check_exponent(self, e: int) -> int:
        if not 0 <= e <= self.n - 1:
            raise ValueError(f"exponent {e} outside [0, {self.n - 1}]")
        return e

    def validate(self) -> "GroupParams":
        if not is_probable_prime(self.q):
            raise ValueError(f"q={self.q} is not prime")
        if not 1 < self.g < self.q:
            raise ValueError(f"g={self.g} not in (1, q)")
        if not is_generator(self.g, self.q):
            raise ValueError(f"g={self.g} does not generate Z_{self.q}*")
        return self

    def to_json(self) -> dict:
        return {"q": str(self.q), "g": str(self.g), "n": str(self.n)}

    @classmethod
    def from_json(cls, obj: dict) -> "GroupParams":
        params = cls(int(obj["q"]), int(obj["g"]))
        if "n" in obj and int(obj["n"]) != params.n:
            raise ValueError("n must equal q - 1")
        return params.validate()


@dataclass
class DlogMeter:
    """Counts discrete-log oracle invocations.  Meters merge by summation."""

    calls: int = 0

    def tick(self) -> None:
        self.calls += 1

    def __add__(self, other: "DlogMeter") -> "DlogMeter":
        return DlogMeter(self.calls + other.calls)


def is_probable_prime(n: int, rounds: int = MILLER_RABIN_ROUNDS, rng: random.Random | None = None) -> bool:
    if n < 2:
        return False
    for p in _SMALL_PRIMES:
        if n % p == 0:
            return n == p
    d, s = n - 1, 0
    while d % 2 == 0:
        d //= 2
        s += 1
    # witnesses drawn from a fixed-seed stream keep the search reproducible
    rng = rng or random.Random(n)
    for _ in range(rounds):
        a = rng.randrange(2, n - 1)
        x = pow(a, d, n)
        if x in (1, n - 1):
            continue
        for _ in range(s - 1):
            x = x * x % n
            if x == n - 1:
                break
        else:
            return False
    return True


def _pollard_brent(n: int) -> int:
    if n % 2 == 0:
        return 2
    rng = random.Random(n)
    while True:
        y, c, m = rng.randrange(1, n), rng.randrange(1, n), 128
        g = r = q = 1
        while g == 1:
            x = y
            for _ in range(r):
                y = (y * y + c) % n
            k = 0
            while k < r and g == 1:
                ys = y
                for _ in range(min(m, r - k)):
                    y = (y * y + c) % n
                    q = q * abs(x - y) % n
                g = math.gcd(q, n)
                k += m
            r *= 2
        if g == n:
            g = 1
            while g == 1:
                ys = (ys * ys + c) % n
                g = math.gcd(abs(x - ys), n)
        if g != n:
            return g


@lru_cache(maxsize=256)
def factorize(n: int) -> tuple[tuple[int, int], ...]:
    """Prime factorization of ``n`` as sorted ``(prime, exponent)`` pairs.

    Trial division by small divisors, then Pollard-Brent for whatever
    composite cofactor is left (only reachable above ~32 bits).
    """
    if n < 1:
        raise ValueError("n must be positive")
    factors: dict[int, int] = {}
    d = 2
    while d * d <= n and d < 1 << 16:
        while n % d == 0:
            factors[d] = factors.get(d, 0) + 1
            n //= d
        d += 1 if d == 2 else 2
    stack = [n] if n > 1 else []
    while stack:
        m = stack.pop()
        if is_probable_prime(m):
            factors[m] = factors.get(m, 0) + 1
        else:
            f = _pollard_brent(m)
            stack += [f, m // f]
    return tuple(sorted(factors.items()))


def is_generator(g: int, q: int) -> bool:
    n = q - 1
    if q == 2:
        return g == 1
    return all(pow(g, n // p, q) != 1 for p, _ in factorize(n))


def primitive_root(q: int) -> int:
    """Smallest generator of Z_q* for an odd prime q."""
    for g in range(2, q):
        if is_generator(g, q):
            return g
    raise ValueError(f"no generator for q={q}")


def gen_params(bit_length: int, seed: int) -> GroupParams:
    """Pick a random prime of exactly ``bit_length`` bits and its smallest generator.

    Deterministic for a fixed seed.  Bit lengths below 8 are accepted so tiny
    worked examples (q=23, q=3) stay reachable.
    """
    if not 2 <= bit_length <= 64:
        raise ValueError("bit_length must be in [2, 64]")
    rng = random.Random(seed)
    lo, hi = 1 << (bit_length - 1), (1 << bit_length) - 1
    for _ in range(PRIME_SEARCH_BUDGET):
        cand = rng.randint(lo, hi) | 1
        if cand > hi or cand < 3:
            continue
        if is_probable_prime(cand):
            return GroupParams(cand, primitive_root(cand))
    raise NoPrimeFound(f"no {bit_length}-bit prime within {PRIME_SEARCH_BUDGET} candidates")


def pow_mod(params: GroupParams, base: int, e: int) -> int:
    params.check_element(base)
    return pow(base, e, params.q)


def inv_exponent(params: GroupParams, a: int) -> int:
    if math.gcd(a, params.n) != 1:
        raise NotInvertible(f"gcd({a}, {params.n}) != 1")
    return pow(a, -1, params.n)


def element_order(params: GroupParams, x: int) -> int:
    order = params.n
    for p, _ in factorize(params.n):
        while order % p == 0 and pow(x, order // p, params.q) == 1:
            order //= p
    return order


def _bsgs_table(base: int, q: int, m: int) -> dict[int, int]:
    table: dict[int, int] = {}
    cur = 1
    for j in range(m):
        table.setdefault(cur, j)
        cur = cur * base % q
    return table


@lru_cache(maxsize=16)
def _generator_table(q: int, g: int) -> tuple[int, dict[int, int], int]:
    m = math.isqrt(q - 2) + 1
    return m, _bsgs_table(g, q, m), pow(g, -m, q)


def _giant_steps(target: int, q: int, m: int, table: dict[int, int], factor: int) -> int | None:
    gamma = target
    for i in range(m):
        j = table.get(gamma)
        if j is not None:
            return i * m + j
        gamma = gamma * factor % q
    return None


def dlog(params: GroupParams, target: int, meter: DlogMeter) -> int:
    """Return e with g^e = target (mod q).  Costs exactly one oracle call."""
    meter.tick()
    params.check_element(target)
    m, table, factor = _generator_table(params.q, params.g)
    e = _giant_steps(target, params.q, m, table, factor)
    if e is None:  # pragma: no cover - g generates the whole group
        raise AssertionError(f"no discrete log for {target} under a full generator")
    return e


def dlog_base(params: GroupParams, base: int, target: int, meter: DlogMeter) -> int | None:
    """Smallest e in [0, n) with base^e = target, or None if target is outside <base>.

    One oracle call, same as :func:`dlog`; the base need not generate the group.
    """
    meter.tick()
    params.check_element(base)
    params.check_element(target)
    m = math.isqrt(params.n - 1) + 1
    table = _bsgs_table(base, params.q, m)
    return _giant_steps(target, params.q, m, table, pow(base, -m, params.q))
