"""Offline password-guessing attacks on captured transcripts, and the no-key middle-man.

Every guessing attack counts its discrete-log oracle calls on a
:class:`~ekelab.group_math.DlogMeter`.  Candidates are independent, so a
space can be cut into chunks scanned by separate worker processes; partial
results merge by set union and counter sums, and the merged report does not
depend on the split.
"""

from __future__ import annotations

import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Iterable, Sequence

from .group_math import DlogMeter, GroupParams, dlog, dlog_base, element_order, inv_exponent
from .password_cipher import Password, decrypt_elem, encrypt_elem, stream_decrypt
from .protocol import (
    AbortReason,
    Channel,
    Message,
    MalformedFlow,
    Party,
    SessionConfig,
    SessionOutcome,
    Transcript,
    TranscriptShapeError,
    Variant,
    elem_ctx,
    elem_to_bytes,
    flow_tag,
    key_bytes,
    nokey_unwrap,
    nokey_wrap,
    parse_flows,
    parse_payload,
    run_session,
    split_even,
)


class KeyNotFound(LookupError):
    pass


@dataclass(frozen=True)
class PasswordSpace:
    """Candidate passwords in a fixed order: ``exhaustive(bits)`` or ``dictionary(words)``."""

    mode: str
    bit_length: int
    words: tuple[bytes, ...] = ()

    @classmethod
    def exhaustive(cls, bit_length: int) -> "PasswordSpace":
        return cls("exhaustive", bit_length)

    @classmethod
    def dictionary(cls, words: Iterable[bytes], bit_length: int | None = None) -> "PasswordSpace":
        words = tuple(words)
        if bit_length is None:
            bit_length = max(1, math.ceil(math.log2(max(len(words), 2))))
        return cls("dictionary", bit_length, words)

    @property
    def size(self) -> int:
        return 1 << self.bit_length if self.mode == "exhaustive" else len(self.words)

    def candidate(self, i: int) -> Password:
        if self.mode == "exhaustive":
            return Password.from_index(i, self.bit_length)
        return Password(self.words[i], self.bit_length)

    def __iter__(self):
        return (self.candidate(i) for i in range(self.size))


@dataclass
class AttackReport:
    variant: Variant
    space_size: int
    guesses_tried: int = 0
    dlog_calls: int = 0
    # (password bytes, recovered exchange key) pairs that survived verification
    recovered: set[tuple[bytes, int]] = field(default_factory=set)
    wall_seconds: float = 0.0
    # candidates dropped after one dlog because the extracted exponent was unusable
    not_invertible: int = 0
    stage1_dlog_calls: int = 0
    stage1_keys_tried: int = 0
    stage1_key: int | None = None

    @property
    def per_guess_dlogs(self) -> Fraction:
        if not self.guesses_tried:
            return Fraction(0)
        return Fraction(self.dlog_calls, self.guesses_tried)

    @property
    def recovered_count(self) -> int:
        return len(self.recovered)

    def recovered_passwords(self) -> set[bytes]:
        return {pw for pw, _ in self.recovered}

    def merge(self, other: "AttackReport") -> "AttackReport":
        if self.variant != other.variant:
            raise ValueError("cannot merge reports of different variants")
        return AttackReport(
            self.variant,
            self.space_size,
            self.guesses_tried + other.guesses_tried,
            self.dlog_calls + other.dlog_calls,
            self.recovered | other.recovered,
            max(self.wall_seconds, other.wall_seconds),
            self.not_invertible + other.not_invertible,
            self.stage1_dlog_calls + other.stage1_dlog_calls,
            self.stage1_keys_tried + other.stage1_keys_tried,
            self.stage1_key if self.stage1_key is not None else other.stage1_key,
        )

    def to_json(self) -> dict:
        pg = self.per_guess_dlogs
        return {
            "variant": self.variant.value,
            "space_size": self.space_size,
            "guesses_tried": self.guesses_tried,
            "dlog_calls": self.dlog_calls,
            "per_guess_dlogs": pg.numerator if pg.denominator == 1 else float(pg),
            "recovered_count": self.recovered_count,
            "wall_seconds": self.wall_seconds,
        }

    def accounting_line(self) -> str:
        pg = self.per_guess_dlogs
        per = str(pg.numerator) if pg.denominator == 1 else f"{float(pg):.4f}"
        return f"dlogs={self.dlog_calls} guesses={self.guesses_tried} per_guess={per}"


# --- per-candidate checks ------------------------------------------------
# Each takes (context, candidate, meter) and returns the recovered key or None.
# They are module-level so worker processes can pickle them.


def _dp(t: Transcript, P: Password, position: int, c: int, slot: int = 0) -> int:
    return decrypt_elem(t.params, P, elem_ctx(t.session_id, position, slot), c)


def _dk(t: Transcript, K: int, position: int, c: bytes) -> bytes:
    return stream_decrypt(key_bytes(t.params, K), (t.session_id, position), c)


def _check_simplified(ctx, P: Password, meter: DlogMeter) -> int | None:
    t, flows = ctx
    (_, y_a), (_, y_b) = flows
    mu_a = dlog(t.params, _dp(t, P, 1, y_a), meter)
    # no verifier exists in this protocol: every candidate key survives
    return pow(_dp(t, P, 2, y_b), mu_a, t.params.q)


def _check_dheke(ctx, P: Password, meter: DlogMeter) -> int | None:
    t, flows = ctx
    (_, x), (y, box_rb), (box_ab,), (box_ra,) = flows
    r_b = dlog(t.params, _dp(t, P, 2, y), meter)
    g_ra = _dp(t, P, 1, x) if t.encrypt_first_flow else x
    K = pow(g_ra, r_b, t.params.q)
    r_b1, r_a1 = _dk(t, K, 2, box_rb), _dk(t, K, 4, box_ra)
    try:
        r_a2, r_b2 = split_even(_dk(t, K, 3, box_ab), 2)
    except MalformedFlow:
        return None
    return K if (r_a1, r_b1) == (r_a2, r_b2) else None


def _check_enhanced_password(ctx, P: Password, meter: DlogMeter) -> int | None:
    t, flows, K = ctx
    (_, x), (y, _), _, _ = flows
    r_b = dlog(t.params, _dp(t, P, 2, y), meter)
    cand = pow(x, r_b, t.params.q)
    return cand if cand == K else None


# returned by a check when the candidate was dropped after its first dlog
_REJECTED_EARLY = object()


def _invertible_lift(params: GroupParams, e: int, base: int) -> int | None:
    """An exponent congruent to ``e`` modulo ord(base) that is invertible mod n."""
    d = element_order(params, base)
    for cand in range(e, params.n, d):
        if math.gcd(cand, params.n) == 1:
            return cand
    return None


def _check_enc_nokey(ctx, P: Password, meter: DlogMeter):
    t, flows = ctx
    (c1,), (c2,), (c3,) = flows
    params = t.params
    k_a, k_ab, k_b = _dp(t, P, 1, c1), _dp(t, P, 2, c2), _dp(t, P, 3, c3)
    a = dlog_base(params, k_b, k_ab, meter)
    if a is not None:
        a = _invertible_lift(params, a, k_b)
    if a is None:
        return _REJECTED_EARLY
    b = dlog_base(params, k_a, k_ab, meter)
    if b is not None:
        b = _invertible_lift(params, b, k_a)
    if b is None:
        return None
    k1 = nokey_unwrap(params, k_a, inv_exponent(params, a))
    k2 = nokey_unwrap(params, k_b, inv_exponent(params, b))
    return k1 if k1 == k2 else None


def _scan(check: Callable, ctx, space: PasswordSpace, variant: Variant, indices: Sequence[int]) -> AttackReport:
    report = AttackReport(variant, space.size)
    meter = DlogMeter()
    for i in indices:
        P = space.candidate(i)
        key = check(ctx, P, meter)
        report.guesses_tried += 1
        if key is _REJECTED_EARLY:
            report.not_invertible += 1
        elif key is not None:
            report.recovered.add((P.bytes, key))
    report.dlog_calls = meter.calls
    return report


def _run(check: Callable, ctx, space: PasswordSpace, variant: Variant, workers: int, order=None) -> AttackReport:
    start = time.perf_counter()
    indices = list(order) if order is not None else list(range(space.size))
    if workers <= 1 or len(indices) < 2:
        report = _scan(check, ctx, space, variant, indices)
    else:
        chunks = [indices[w::workers] for w in range(workers)]
        report = AttackReport(variant, space.size)
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for part in pool.map(_scan, *zip(*[(check, ctx, space, variant, c) for c in chunks])):
                report = report.merge(part)
    report.wall_seconds = time.perf_counter() - start
    return report


def _flows_for(t: Transcript, variant: Variant) -> list[tuple]:
    if t.variant is not variant:
        raise TranscriptShapeError(f"expected a {variant.value} transcript, got {t.variant.value}")
    return parse_flows(t)


# --- attacks -------------------------------------------------------------


def attack_simplified_eke(t: Transcript, space: PasswordSpace, workers: int = 1, order=None) -> AttackReport:
    """One dlog per candidate; all candidate keys are returned since nothing verifies them."""
    ctx = (t, _flows_for(t, Variant.SIMPLIFIED_EKE))
    return _run(_check_simplified, ctx, space, t.variant, workers, order)


def attack_dheke(t: Transcript, space: PasswordSpace, workers: int = 1, order=None) -> AttackReport:
    """One dlog per candidate, then the challenge ciphertexts decide.

    Works whether or not the first flow was password-encrypted; the cost
    is the same either way.
    """
    ctx = (t, _flows_for(t, Variant.DH_EKE))
    return _run(_check_dheke, ctx, space, t.variant, workers, order)


def find_exchange_key(t: Transcript, known_S: bytes, key_space: Iterable[int]) -> tuple[int | None, int]:
    """Search ``key_space`` for the K whose decrypted shares XOR to ``known_S``.  No dlogs."""
    flows = _flows_for(t, Variant.ENHANCED_EKE)
    (_, box2), (box3,), _ = flows[1], flows[2], flows[3]
    tried = 0
    for K in key_space:
        tried += 1
        try:
            _, s_b = split_even(_dk(t, K, 2, box2), 2)
            _, _, s_a = split_even(_dk(t, K, 3, box3), 3)
        except MalformedFlow:
            return None, tried
        if bytes(x ^ y for x, y in zip(s_a, s_b)) == known_S:
            return K, tried
    return None, tried


def attack_enhanced_eke(
    t: Transcript,
    known_S: bytes,
    key_space: Iterable[int],
    space: PasswordSpace,
    workers: int = 1,
    order=None,
) -> AttackReport:
    """Two stages: recover K from an old session key S, then test passwords against K."""
    start = time.perf_counter()
    flows = _flows_for(t, Variant.ENHANCED_EKE)
    K, keys_tried = find_exchange_key(t, known_S, key_space)
    if K is None:
        raise KeyNotFound("no key in the supplied key space reproduces S")
    report = _run(_check_enhanced_password, (t, flows, K), space, t.variant, workers, order)
    report.stage1_key = K
    report.stage1_keys_tried = keys_tried
    report.stage1_dlog_calls = 0
    report.wall_seconds = time.perf_counter() - start
    return report


def attack_enc_nokey(t: Transcript, space: PasswordSpace, workers: int = 1, order=None) -> AttackReport:
    """Two dlogs per candidate: a' from (K^b, K^ab) and b' from (K^a, K^ab).

    A candidate whose first extraction yields no usable inverse is rejected
    after a single dlog and counted in ``not_invertible``.
    """
    ctx = (t, _flows_for(t, Variant.ENC_NOKEY))
    return _run(_check_enc_nokey, ctx, space, t.variant, workers, order)


ATTACKS = {
    Variant.SIMPLIFIED_EKE: attack_simplified_eke,
    Variant.DH_EKE: attack_dheke,
    Variant.ENC_NOKEY: attack_enc_nokey,
}


# --- middle-man against the no-key protocols ------------------------------


@dataclass
class MitmReport:
    success: bool
    stolen_key: int | None
    outcome_a: SessionOutcome
    outcome_b: SessionOutcome
    failure_mode: str | None = None
    sessions_observed: int = 2
    transcripts: tuple[Transcript, ...] = ()

    def to_json(self) -> dict:
        return {
            "success": self.success,
            "stolen_key": None if self.stolen_key is None else str(self.stolen_key),
            "sessions_observed": self.sessions_observed,
            "failure_mode": self.failure_mode,
            "outcome_a": self.outcome_a.to_json(),
            "outcome_b": self.outcome_b.to_json(),
        }


def _mitm(cfg_a: SessionConfig, cfg_b: SessionConfig, e: int, eve_password: Password | None) -> MitmReport:
    params, variant = cfg_a.params, cfg_a.variant
    q = params.q
    encrypted = variant is Variant.ENC_NOKEY
    e_inv = inv_exponent(params, e)
    sid_a, sid_b = f"{cfg_a.seed}-eve", f"eve-{cfg_b.seed}"
    # without the password Eve still has to put something on the wire,
    # so she encrypts under a guess of her own
    pw = eve_password or Password(b"eve-guess", 8)
    kind = ("ct",) if encrypted else ("elem",)

    def open_(sid: str, position: int, m: Message) -> int:
        (x,) = parse_payload(params, kind, m.payload)
        return decrypt_elem(params, pw, elem_ctx(sid, position), x) if encrypted else x

    def seal(sid: str, position: int, x: int, direction: str) -> Message:
        if encrypted:
            x = encrypt_elem(params, pw, elem_ctx(sid, position), x)
        return Message(flow_tag(variant, position), elem_to_bytes(params, x), direction)

    def exchange(party: Party, t: Transcript, m: Message) -> Message | None:
        t.append(m)
        reply = party.receive(m)
        if reply is not None:
            t.append(reply)
        return reply

    A, B = Party(cfg_a, sid_a), Party(cfg_b, sid_b)
    t_a = Transcript(sid_a, variant, params)
    t_b = Transcript(sid_b, variant, params)
    B.start()

    # leg 1: Eve poses as B.  A -> K^a, Eve -> K^ae, A -> K^e
    m1 = A.start()
    t_a.append(m1)
    m3 = exchange(A, t_a, seal(sid_a, 2, pow(open_(sid_a, 1, m1), e, q), "BA"))
    stolen = None
    if m3 is not None:
        k_e = open_(sid_a, 3, m3)
        stolen = pow(k_e, e_inv, q)
        # leg 2: Eve poses as A.  Eve -> K^e, B -> K^eb, Eve -> K^b
        m2 = exchange(B, t_b, seal(sid_b, 1, k_e, "AB"))
        if m2 is not None:
            exchange(B, t_b, seal(sid_b, 3, pow(open_(sid_b, 2, m2), e_inv, q), "AB"))
    for party in (A, B):
        party.abort(AbortReason.CHANNEL)

    success = A.outcome.completed and stolen == A.outcome.exchange_key
    failure = None
    if not success:
        failure = "initiator aborted" if not A.outcome.completed else "recovered key does not match"
    return MitmReport(success, stolen if success else None, A.outcome, B.outcome, failure, 2, (t_a, t_b))


def mitm_nokey(cfg_a: SessionConfig, cfg_b: SessionConfig, e: int) -> MitmReport:
    if cfg_a.variant is not Variant.NOKEY:
        raise ValueError("mitm_nokey targets the unencrypted no-key protocol")
    return _mitm(cfg_a, cfg_b, e, None)


def mitm_enc_nokey(
    cfg_a: SessionConfig,
    cfg_b: SessionConfig,
    e: int,
    eve_password: Password | None = None,
    relay: bool = False,
) -> MitmReport:
    """Middle-man against the password-encrypted no-key protocol.

    ``relay=True`` forwards the honest flows untouched, which completes the
    session but hands Eve nothing.  Passing the real password as
    ``eve_password`` makes Eve an insider and the attack succeeds.
    """
    if cfg_a.variant is not Variant.ENC_NOKEY:
        raise ValueError("mitm_enc_nokey targets the encrypted no-key protocol")
    if relay:
        a, b, t = run_session(cfg_a, cfg_b, Channel())
        return MitmReport(False, None, a, b, "relay only: flows stay password-encrypted", 1, (t,))
    return _mitm(cfg_a, cfg_b, e, eve_password)
