import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ekelab import group_math
from ekelab.group_math import (
    DlogMeter,
    GroupParams,
    NoPrimeFound,
    NotInvertible,
    dlog,
    dlog_base,
    element_order,
    factorize,
    gen_params,
    inv_exponent,
    is_probable_prime,
    pow_mod,
)
from oracles import brute_dlog_table, order_by_enumeration, primes_upto, slow_pow, trial_prime


def test_gen_params_small_q23():
    p = gen_params(5, 3)
    assert (p.q, p.g, p.n) == (23, 5, 22)
    assert order_by_enumeration(5, 23) == 22


def test_gen_params_two_bits():
    p = gen_params(2, 0)
    assert (p.q, p.g, p.n) == (3, 2, 2)


def test_gen_params_20_bits_generates_full_group():
    p = gen_params(20, 2024)
    assert p.q.bit_length() == 20
    assert trial_prime(p.q)
    assert order_by_enumeration(p.g, p.q) == p.q - 1


@pytest.mark.parametrize("bits", [8, 12, 16, 24, 32, 48, 64])
def test_gen_params_bit_length_and_determinism(bits):
    p = gen_params(bits, 99)
    assert p.q.bit_length() == bits
    assert gen_params(bits, 99) == p
    assert p.validate() is p
    n = p.n
    for prime, _ in factorize(n):
        assert pow(p.g, n // prime, p.q) != 1


def test_gen_params_rejects_out_of_range():
    with pytest.raises(ValueError):
        gen_params(65, 0)
    with pytest.raises(ValueError):
        gen_params(1, 0)


def test_gen_params_budget_exhausted(monkeypatch):
    monkeypatch.setattr(group_math, "PRIME_SEARCH_BUDGET", 50)
    monkeypatch.setattr(group_math, "is_probable_prime", lambda n, *a, **k: False)
    with pytest.raises(NoPrimeFound):
        gen_params(16, 1)


def test_miller_rabin_matches_trial_division():
    for n in range(0, 5000):
        assert is_probable_prime(n) == trial_prime(n), n
    # Carmichael numbers
    for n in (561, 1105, 1729, 2465, 2821, 6601, 8911, 41041, 825265):
        assert not is_probable_prime(n)


def test_factorize_recombines():
    rng = random.Random(5)
    for _ in range(200):
        n = rng.randrange(2, 1 << 40)
        prod = 1
        for p, k in factorize(n):
            assert is_probable_prime(p)
            prod *= p**k
        assert prod == n


def test_pow_mod_examples(q23):
    assert pow_mod(q23, 5, 3) == slow_pow(5, 3, 23) == 10
    assert pow_mod(q23, 9, 5) == slow_pow(9, 5, 23) == 8
    for x in range(1, 23):
        assert pow_mod(q23, x, 0) == 1


def test_pow_mod_rejects_non_element(q23):
    with pytest.raises(ValueError):
        pow_mod(q23, 0, 3)
    with pytest.raises(ValueError):
        pow_mod(q23, 23, 3)


def test_inv_exponent_examples(q23):
    assert inv_exponent(q23, 5) == 9
    assert inv_exponent(q23, 7) == 19
    with pytest.raises(NotInvertible):
        inv_exponent(q23, 2)


@given(st.integers(min_value=1, max_value=2**20))
def test_inv_exponent_property(a):
    p = GroupParams(1048583, 5)  # 2^20 + 7, prime
    try:
        inv = inv_exponent(p, a)
    except NotInvertible:
        return
    assert a * inv % p.n == 1


def test_dlog_examples(q23):
    m = DlogMeter()
    assert dlog(q23, 8, m) == 6
    assert dlog(q23, 5, m) == 1
    assert dlog(q23, 1, m) == 0
    assert m.calls == 3


def test_dlog_round_trip_exhaustive_12_bit():
    p = gen_params(12, 7)
    m = DlogMeter()
    for e in range(p.n):
        assert dlog(p, pow_mod(p, p.g, e), m) == e
    assert m.calls == p.n


def test_dlog_round_trip_random_large():
    p = gen_params(30, 11)
    rng = random.Random(0)
    m = DlogMeter()
    for _ in range(1000):
        e = rng.randrange(p.n)
        assert dlog(p, pow_mod(p, p.g, e), m) == e


def test_dlog_matches_brute_force_small_primes():
    for q in primes_upto(200)[1:]:
        p = GroupParams(q, group_math.primitive_root(q))
        table = brute_dlog_table(p.g, q)
        m = DlogMeter()
        for x in range(1, q):
            assert dlog(p, x, m) == table[x]


@given(st.integers(0, 2**20), st.integers(0, 2**20))
@settings(max_examples=200)
def test_dh_core_commutes(a, b):
    p = gen_params(20, 2024)
    ga, gb = pow_mod(p, p.g, a), pow_mod(p, p.g, b)
    assert pow_mod(p, ga, b) == pow_mod(p, gb, a)


def test_meter_discipline_and_merge(q23):
    m = DlogMeter(5)
    for k in range(7):
        dlog(q23, 1 + k, m)
    assert m.calls == 12
    assert (DlogMeter(3) + DlogMeter(4)).calls == 7


def test_dlog_base_smallest_solution_or_none(q23):
    for base in range(1, 23):
        table = {}
        x = 1
        for e in range(22):
            table.setdefault(x, e)
            x = x * base % 23
        for target in range(1, 23):
            m = DlogMeter()
            assert dlog_base(q23, base, target, m) == table.get(target)
            assert m.calls == 1


def test_element_order_matches_enumeration(q23):
    p = gen_params(16, 3)
    rng = random.Random(1)
    for x in [1, p.q - 1] + [rng.randrange(1, p.q) for _ in range(50)]:
        assert element_order(p, x) == order_by_enumeration(x, p.q)


def test_group_params_json_round_trip():
    p = gen_params(20, 2024)
    obj = p.to_json()
    assert obj == {"q": str(p.q), "g": str(p.g), "n": str(p.q - 1)}
    assert GroupParams.from_json(obj) == p


def test_group_params_validate_rejects():
    with pytest.raises(ValueError):
        GroupParams(21, 2).validate()  # composite
    with pytest.raises(ValueError):
        GroupParams(23, 2).validate()  # 2 has order 11 mod 23
    with pytest.raises(ValueError):
        GroupParams.from_json({"q": "23", "g": "5", "n": "21"})
