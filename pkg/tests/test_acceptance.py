"""End-to-end acceptance criteria, each with its time limit.

Every test records one PASS/FAIL line through the ``criterion`` fixture;
the lines are printed together at the end of the pytest run.
"""

import time

from conftest import make_session, run
from ekelab import cli
from ekelab.adversary import PasswordSpace, attack_dheke, attack_enc_nokey, attack_enhanced_eke, mitm_enc_nokey, mitm_nokey
from ekelab.group_math import DlogMeter, GroupParams, dlog, primitive_root
from ekelab.margin import reference_checks
from ekelab.password_cipher import Password
from ekelab.protocol import Variant
from oracles import brute_dlog_table, primes_upto


def timed(fn):
    start = time.perf_counter()
    value = fn()
    return value, time.perf_counter() - start


def test_c1_reference_numbers(criterion, tmp_path, capsys):
    code, secs = timed(lambda: cli.main(["margin", "--check-paper", "--out", str(tmp_path)]))
    capsys.readouterr()
    failed = [c.name for c in reference_checks() if not c.ok]
    ok = code == 0 and not failed and secs < 1.0
    criterion("C1 cost-model reference numbers", ok, f"exit={code} failed={failed} {secs:.2f}s")
    assert ok


def test_c2_protocol_correctness(criterion, g20):
    cases = [(v, False) for v in Variant] + [(Variant.DH_EKE, True)]

    def sweep():
        bad = []
        for variant, flag in cases:
            for seed in range(1000):
                a, b, _ = run(g20, variant, Password.from_index(seed, 16), seed=seed, encrypt_first_flow=flag)
                if not (a.completed and b.completed and a.key_material(g20) == b.key_material(g20)):
                    bad.append((variant.value, flag, seed))
        return bad

    bad, secs = timed(sweep)
    ok = not bad and secs < 10.0
    criterion("C2 protocol correctness", ok, f"{len(cases)} configs x 1000 sessions, failures={bad[:3]} {secs:.2f}s")
    assert ok


def test_c3_attack_cost(criterion, g20):
    P12 = Password.from_index(0xB17, 12)
    a, _, t = run(g20, Variant.DH_EKE, P12, seed=21)
    dh, dh_secs = timed(lambda: attack_dheke(t, PasswordSpace.exhaustive(12)))
    dh_ok = dh.dlog_calls == 4096 and dh.recovered == {(P12.bytes, a.exchange_key)} and dh_secs < 5.0

    P8 = Password.from_index(0x3C, 8)
    a, _, t = run(g20, Variant.ENC_NOKEY, P8, seed=21)
    enc, enc_secs = timed(lambda: attack_enc_nokey(t, PasswordSpace.exhaustive(8)))
    enc_ok = (
        enc.dlog_calls + enc.not_invertible == 2 * 256
        and (P8.bytes, a.exchange_key) in enc.recovered
        and enc_secs < 5.0
    )
    ok = dh_ok and enc_ok
    criterion(
        "C3 attack cost exactness",
        ok,
        f"dh-eke {dh.accounting_line()} recovered={dh.recovered_count} {dh_secs:.2f}s; "
        f"enc-nokey {enc.accounting_line()} rejected_early={enc.not_invertible} {enc_secs:.2f}s",
    )
    assert ok


def test_c4_first_flow_invariance(criterion, g20):
    P = Password.from_index(0x2A, 10)
    calls = []
    for flag in (False, True):
        _, _, t = run(g20, Variant.DH_EKE, P, seed=8, encrypt_first_flow=flag)
        calls.append(attack_dheke(t, PasswordSpace.exhaustive(10)).dlog_calls)
    ok = calls[0] == calls[1] == 1024
    criterion("C4 first-flow invariance", ok, f"dlog_calls plain={calls[0]} encrypted={calls[1]}")
    assert ok


def test_c5_mitm_dichotomy(criterion, g20):
    P = Password.from_index(0x77, 8)

    def trials(variant, attack):
        wins = 0
        for seed in range(1000):
            cfg_a, cfg_b = make_session(g20, variant, P, seed=seed)
            wins += attack(cfg_a, cfg_b, 65537).success
        return wins / 1000

    (plain, enc), secs = timed(lambda: (trials(Variant.NOKEY, mitm_nokey), trials(Variant.ENC_NOKEY, mitm_enc_nokey)))
    ok = plain == 1.0 and enc == 0.0 and secs < 10.0
    criterion("C5 MITM dichotomy", ok, f"nokey={plain} enc-nokey={enc} {secs:.2f}s")
    assert ok


def test_c6_dlog_oracle_equivalence(criterion):
    def sweep():
        bad, checked = [], 0
        for q in primes_upto(1 << 10)[1:]:
            p = GroupParams(q, primitive_root(q))
            table = brute_dlog_table(p.g, q)
            meter = DlogMeter()
            for x in range(1, q):
                checked += 1
                if dlog(p, x, meter) != table[x]:
                    bad.append((q, x))
        return bad, checked

    (bad, checked), secs = timed(sweep)
    ok = not bad and secs < 5.0
    criterion("C6 dlog oracle equivalence", ok, f"{checked} elements, mismatches={bad[:3]} {secs:.2f}s")
    assert ok


def test_c7_enhanced_staging(criterion, g20):
    P = Password.from_index(0x91, 8)
    a, _, t = run(g20, Variant.ENHANCED_EKE, P, seed=13)
    K = a.exchange_key
    space = PasswordSpace.exhaustive(8)
    report = attack_enhanced_eke(t, a.final_key, range(max(1, K - 1024), K + 1024), space)
    ok = (
        report.stage1_dlog_calls == 0
        and report.stage1_key == K
        and report.dlog_calls == space.size
        and report.recovered == {(P.bytes, K)}
    )
    criterion(
        "C7 enhanced-EKE staging",
        ok,
        f"stage1 dlogs={report.stage1_dlog_calls} keys_tried={report.stage1_keys_tried}; stage2 dlogs={report.dlog_calls}/{space.size}",
    )
    assert ok
