"""Two-party state machines for the password-based key exchanges.

Each role of each variant is a generator: it yields the message it wants to
send and receives the peer's reply from the driver.  :func:`run_session`
shuttles messages between the two parties through a :class:`Channel`, which
tests and adversaries can subclass to drop or rewrite traffic.

Wire format of a frame: 4-byte big-endian payload length, 1-byte tag, payload.
Group elements (and element ciphertexts) travel as fixed-width big-endian
integers of ``params.element_bytes`` bytes.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Iterator

from .group_math import GroupParams, NotInvertible, inv_exponent
from .password_cipher import (
    Password,
    decrypt_elem,
    encrypt_elem,
    hash_password,
    sign_with_password,
    stream_decrypt,
    stream_encrypt,
    verify_signature,
)

NOKEY_MAX_RESAMPLES = 64
DEFAULT_CHALLENGE_BYTES = 16


class Variant(str, Enum):
    SIMPLIFIED_EKE = "simplified-eke"
    GENERIC_EKE = "generic-eke"
    DH_EKE = "dh-eke"
    ENHANCED_EKE = "enhanced-eke"
    A_EKE = "a-eke"
    NOKEY = "nokey"
    ENC_NOKEY = "enc-nokey"


class AbortReason(str, Enum):
    CHALLENGE_MISMATCH = "ABORT_CHALLENGE_MISMATCH"
    SIGNATURE_INVALID = "ABORT_SIGNATURE_INVALID"
    NOT_INVERTIBLE = "ABORT_NOT_INVERTIBLE"
    CHANNEL = "ABORT_CHANNEL"


class ProtocolAbort(Exception):
    def __init__(self, reason: AbortReason, detail: str = ""):
        super().__init__(f"{reason.value}: {detail}" if detail else reason.value)
        self.reason = reason


class MalformedFlow(ValueError):
    pass


class TranscriptShapeError(ValueError):
    pass


class LengthMismatch(ValueError):
    pass


# --- schedules -----------------------------------------------------------

_VARIANT_CODE = {v: i + 1 for i, v in enumerate(Variant)}

_SCHEDULES = {
    Variant.SIMPLIFIED_EKE: [("A", "ID(A) || E_P(g^mu_A)"), ("B", "ID(B) || E_P(g^mu_B)")],
    Variant.GENERIC_EKE: [
        ("A", "ID(A) || E_P(e_A)"),
        ("B", "E_P(E_eA(K))"),
        ("A", "E_K(R_A)"),
        ("B", "E_K(R_A, R_B)"),
        ("A", "E_K(R_B)"),
    ],
    Variant.DH_EKE: [
        ("A", "ID(A) || g^r_A"),
        ("B", "E_P(g^r_B) || E_K(R_B)"),
        ("A", "E_K(R_A, R_B)"),
        ("B", "E_K(R_A)"),
    ],
    Variant.ENHANCED_EKE: [
        ("A", "ID(A) || g^r_A"),
        ("B", "E_P(g^r_B) || E_K(R_B, S_B)"),
        ("A", "E_K(R_A, R_B, S_A)"),
        ("B", "E_K(R_A)"),
    ],
    Variant.A_EKE: [("A", "E_p(g^R_A)"), ("B", "E_p(g^R_B)"), ("A", "E_K(S_P(K))")],
    Variant.NOKEY: [("A", "K^a"), ("B", "K^ab"), ("A", "K^b")],
    Variant.ENC_NOKEY: [("A", "E_P(K^a)"), ("B", "E_P(K^ab)"), ("A", "E_P(K^b)")],
}

# field kinds: id = length-prefixed label, elem = group element,
# ct = element ciphertext, box = stream ciphertext (rest of payload)
_LAYOUTS = {
    Variant.SIMPLIFIED_EKE: [("id", "ct"), ("id", "ct")],
    Variant.GENERIC_EKE: [("id", "ct"), ("ct", "ct"), ("box",), ("box",), ("box",)],
    Variant.DH_EKE: [("id", "elem"), ("ct", "box"), ("box",), ("box",)],
    Variant.ENHANCED_EKE: [("id", "elem"), ("ct", "box"), ("box",), ("box",)],
    Variant.A_EKE: [("ct",), ("ct",), ("box",)],
    Variant.NOKEY: [("elem",), ("elem",), ("elem",)],
    Variant.ENC_NOKEY: [("ct",), ("ct",), ("ct",)],
}


@dataclass(frozen=True)
class Flow:
    position: int
    sender: str
    tag: int
    contents: str


def flow_tag(variant: Variant, position: int) -> int:
    return _VARIANT_CODE[variant] << 4 | position


def schedule(variant: Variant, encrypt_first_flow: bool = False) -> list[Flow]:
    flows = []
    for pos, (sender, contents) in enumerate(_SCHEDULES[variant], start=1):
        if variant is Variant.DH_EKE and pos == 1 and encrypt_first_flow:
            contents = "ID(A) || E_P(g^r_A)"
        flows.append(Flow(pos, sender, flow_tag(variant, pos), contents))
    return flows


def layout(variant: Variant, position: int, encrypt_first_flow: bool = False) -> tuple[str, ...]:
    kinds = _LAYOUTS[variant][position - 1]
    if variant is Variant.DH_EKE and position == 1 and encrypt_first_flow:
        kinds = ("id", "ct")
    return kinds


# --- messages and transcripts -------------------------------------------


@dataclass(frozen=True)
class Message:
    tag: int
    payload: bytes
    direction: str  # "AB" or "BA"

    def frame(self) -> bytes:
        return len(self.payload).to_bytes(4, "big") + bytes([self.tag]) + self.payload

    @classmethod
    def unframe(cls, data: bytes, direction: str) -> "Message":
        if len(data) < 5:
            raise MalformedFlow("frame shorter than header")
        length = int.from_bytes(data[:4], "big")
        if len(data) != 5 + length:
            raise MalformedFlow(f"frame declares {length} payload bytes, has {len(data) - 5}")
        return cls(data[4], data[5:], direction)


@dataclass
class Transcript:
    session_id: str
    variant: Variant
    params: GroupParams
    encrypt_first_flow: bool = False
    messages: list[Message] = field(default_factory=list)

    def append(self, msg: Message) -> None:
        self.messages.append(msg)

    def to_jsonl(self) -> str:
        lines = [
            json.dumps({"seq": i, "dir": m.direction, "tag": m.tag, "payload_hex": m.payload.hex()})
            for i, m in enumerate(self.messages)
        ]
        return "".join(line + "\n" for line in lines)

    def meta(self) -> dict:
        return {
            "session_id": self.session_id,
            "variant": self.variant.value,
            "params": self.params.to_json(),
            "encrypt_first_flow": self.encrypt_first_flow,
        }

    @classmethod
    def from_jsonl(cls, text: str, meta: dict) -> "Transcript":
        t = cls(
            meta["session_id"],
            Variant(meta["variant"]),
            GroupParams.from_json(meta["params"]),
            bool(meta.get("encrypt_first_flow", False)),
        )
        for i, line in enumerate(l for l in text.splitlines() if l.strip()):
            rec = json.loads(line)
            if rec["seq"] != i:
                raise TranscriptShapeError(f"line {i} carries seq {rec['seq']}")
            t.append(Message(rec["tag"], bytes.fromhex(rec["payload_hex"]), rec["dir"]))
        return t

    def save(self, path: str | Path) -> None:
        path = Path(path)
        path.write_text(self.to_jsonl())
        meta_path(path).write_text(json.dumps(self.meta(), indent=2) + "\n")

    @classmethod
    def load(cls, path: str | Path) -> "Transcript":
        path = Path(path)
        return cls.from_jsonl(path.read_text(), json.loads(meta_path(path).read_text()))


def meta_path(transcript_path: Path) -> Path:
    return transcript_path.with_name(transcript_path.stem + ".meta.json")


# --- payload codec -------------------------------------------------------


def elem_to_bytes(params: GroupParams, x: int) -> bytes:
    return x.to_bytes(params.element_bytes, "big")


def label_bytes(label: str) -> bytes:
    raw = label.encode("utf-8")
    if len(raw) > 255:
        raise ValueError("identity label longer than 255 bytes")
    return bytes([len(raw)]) + raw


def parse_payload(params: GroupParams, kinds: tuple[str, ...], payload: bytes) -> tuple:
    out = []
    pos, w = 0, params.element_bytes
    for kind in kinds:
        if kind == "id":
            if pos >= len(payload):
                raise MalformedFlow("missing identity label")
            n = payload[pos]
            raw = payload[pos + 1 : pos + 1 + n]
            if len(raw) != n:
                raise MalformedFlow("truncated identity label")
            try:
                out.append(raw.decode("utf-8"))
            except UnicodeDecodeError as exc:
                raise MalformedFlow("identity label is not UTF-8") from exc
            pos += 1 + n
        elif kind in ("elem", "ct"):
            chunk = payload[pos : pos + w]
            if len(chunk) != w:
                raise MalformedFlow("truncated group element")
            x = int.from_bytes(chunk, "big")
            lo, hi = (1, params.q - 1) if kind == "elem" else (0, params.q - 2)
            if not lo <= x <= hi:
                raise MalformedFlow(f"{kind} value {x} out of range")
            out.append(x)
            pos += w
        elif kind == "box":
            out.append(payload[pos:])
            pos = len(payload)
    if pos != len(payload):
        raise MalformedFlow(f"{len(payload) - pos} trailing payload bytes")
    return tuple(out)


def parse_flows(t: Transcript) -> list[tuple]:
    """Decode every message of a transcript against its variant's layout."""
    flows = schedule(t.variant, t.encrypt_first_flow)
    if len(t.messages) != len(flows):
        raise TranscriptShapeError(f"{t.variant.value} expects {len(flows)} flows, got {len(t.messages)}")
    parsed = []
    for flow, msg in zip(flows, t.messages):
        want_dir = "AB" if flow.sender == "A" else "BA"
        if msg.tag != flow.tag or msg.direction != want_dir:
            raise TranscriptShapeError(f"flow {flow.position}: unexpected tag/direction")
        try:
            parsed.append(parse_payload(t.params, layout(t.variant, flow.position, t.encrypt_first_flow), msg.payload))
        except MalformedFlow as exc:
            raise TranscriptShapeError(f"flow {flow.position}: {exc}") from exc
    return parsed


def split_even(data: bytes, parts: int) -> list[bytes]:
    if len(data) % parts:
        raise MalformedFlow(f"{len(data)} bytes do not split into {parts} equal fields")
    k = len(data) // parts
    return [data[i * k : (i + 1) * k] for i in range(parts)]


# --- key helpers ---------------------------------------------------------


def key_bytes(params: GroupParams, K: int) -> bytes:
    """Fixed-width decimal serialization of a group element used as a stream key."""
    return str(K).zfill(len(str(params.n))).encode("ascii")


def derive_exchange_key(params: GroupParams, secret: int, peer: int) -> int:
    params.check_element(peer)
    return pow(peer, secret, params.q)


def combine_session_key(S_A: bytes, S_B: bytes) -> bytes:
    if len(S_A) != len(S_B):
        raise LengthMismatch(f"{len(S_A)} != {len(S_B)}")
    return bytes(a ^ b for a, b in zip(S_A, S_B))


def nokey_wrap(params: GroupParams, x: int, secret: int) -> int:
    params.check_element(x)
    return pow(x, secret, params.q)


def nokey_unwrap(params: GroupParams, received: int, secret_inv: int) -> int:
    params.check_element(received)
    return pow(received, secret_inv, params.q)


def elem_ctx(session_id: str, position: int, slot: int = 0) -> tuple[str, int]:
    """Cipher context of the ``slot``-th encrypted element in flow ``position``."""
    return (session_id, position * 16 + slot)


# --- sessions ------------------------------------------------------------


@dataclass
class SessionConfig:
    role: str  # "A" (initiator) or "B" (responder)
    params: GroupParams
    password: Password
    seed: int
    variant: Variant
    challenge_bytes: int = DEFAULT_CHALLENGE_BYTES
    encrypt_first_flow: bool = False
    identity: str | None = None
    # fixed values for worked examples; sampled from the seed when None
    secret: int | None = None
    key: int | None = None
    # A-EKE only: the initiator holds nothing but the stored hash p = H(P)
    hash_only: bool = False


@dataclass
class SessionOutcome:
    status: str = "PENDING"
    reason: AbortReason | None = None
    exchange_key: int | None = None
    final_key: bytes | None = None
    verdicts: dict[str, bool] = field(default_factory=dict)

    @property
    def completed(self) -> bool:
        return self.status == "COMPLETED"

    def key_material(self, params: GroupParams) -> bytes:
        out = key_bytes(params, self.exchange_key) if self.exchange_key is not None else b""
        return out + (self.final_key or b"")

    def to_json(self) -> dict:
        return {
            "status": self.status,
            "reason": self.reason.value if self.reason else None,
            "exchange_key": None if self.exchange_key is None else str(self.exchange_key),
            "final_key_hex": self.final_key.hex() if self.final_key is not None else None,
            "verdicts": self.verdicts,
        }


class Party:
    """One side of a session, stepped by the driver via :meth:`start` / :meth:`receive`."""

    def __init__(self, cfg: SessionConfig, session_id: str):
        if cfg.role not in ("A", "B"):
            raise ValueError(f"role must be 'A' or 'B', got {cfg.role!r}")
        self.cfg = cfg
        self.params = cfg.params
        self.session_id = session_id
        self.identity = cfg.identity or cfg.role
        self.rng = random.Random(cfg.seed)
        self.outcome = SessionOutcome()
        self.flows = schedule(cfg.variant, cfg.encrypt_first_flow)
        self._program = _PROGRAMS[cfg.variant][cfg.role](self)

    @property
    def finished(self) -> bool:
        return self.outcome.status != "PENDING"

    def start(self) -> Message | None:
        return self._advance(None)

    def receive(self, msg: Message) -> Message | None:
        if self.finished:
            raise RuntimeError("party already finished")
        return self._advance(msg)

    def abort(self, reason: AbortReason) -> None:
        if not self.finished:
            self.outcome.status = "ABORTED"
            self.outcome.reason = reason

    def _advance(self, value: Message | None) -> Message | None:
        try:
            return self._program.send(value)
        except StopIteration:
            return None
        except ProtocolAbort as exc:
            self.abort(exc.reason)
            return None

    # helpers used by the role programs

    def complete(self, exchange_key: int, final_key: bytes | None = None) -> None:
        self.outcome.status = "COMPLETED"
        self.outcome.exchange_key = exchange_key
        self.outcome.final_key = final_key

    def send(self, position: int, payload: bytes) -> Message:
        flow = self.flows[position - 1]
        assert flow.sender == self.cfg.role, (flow, self.cfg.role)
        return Message(flow.tag, payload, "AB" if flow.sender == "A" else "BA")

    def parse(self, position: int, msg: Message | None) -> tuple:
        flow = self.flows[position - 1]
        if msg is None or msg.tag != flow.tag:
            raise ProtocolAbort(AbortReason.CHANNEL, f"expected flow {position}")
        try:
            return parse_payload(self.params, layout(self.cfg.variant, position, self.cfg.encrypt_first_flow), msg.payload)
        except MalformedFlow as exc:
            raise ProtocolAbort(AbortReason.CHANNEL, str(exc)) from exc

    def split(self, data: bytes, parts: int) -> list[bytes]:
        try:
            return split_even(data, parts)
        except MalformedFlow as exc:
            raise ProtocolAbort(AbortReason.CHANNEL, str(exc)) from exc

    def exponent(self) -> int:
        if self.cfg.secret is not None:
            return self.params.check_exponent(self.cfg.secret)
        return self.rng.randint(1, self.params.n - 1)

    def invertible_exponent(self) -> tuple[int, int]:
        if self.cfg.secret is not None:
            tries = [self.params.check_exponent(self.cfg.secret)]
        else:
            tries = (self.rng.randint(1, self.params.n - 1) for _ in range(NOKEY_MAX_RESAMPLES))
        for e in tries:
            try:
                return e, inv_exponent(self.params, e)
            except NotInvertible:
                continue
        raise ProtocolAbort(AbortReason.NOT_INVERTIBLE)

    def transport_key(self) -> int:
        if self.cfg.key is not None:
            return self.params.check_element(self.cfg.key)
        return self.rng.randint(min(2, self.params.q - 1), self.params.q - 1)

    def challenge(self) -> bytes:
        return self.rng.randbytes(self.cfg.challenge_bytes)

    def elem(self, x: int) -> bytes:
        return elem_to_bytes(self.params, x)

    def ep(self, position: int, x: int, slot: int = 0, password: Password | None = None) -> int:
        return encrypt_elem(self.params, password or self.cfg.password, elem_ctx(self.session_id, position, slot), x)

    def dp(self, position: int, c: int, slot: int = 0, password: Password | None = None) -> int:
        return decrypt_elem(self.params, password or self.cfg.password, elem_ctx(self.session_id, position, slot), c)

    def ek(self, K: int, position: int, m: bytes) -> bytes:
        return stream_encrypt(key_bytes(self.params, K), (self.session_id, position), m)

    def dk(self, K: int, position: int, c: bytes) -> bytes:
        return stream_decrypt(key_bytes(self.params, K), (self.session_id, position), c)

    def check(self, name: str, ok: bool, reason: AbortReason = AbortReason.CHALLENGE_MISMATCH) -> None:
        self.outcome.verdicts[name] = ok
        if not ok:
            raise ProtocolAbort(reason, name)


Program = Iterator  # generator yielding Message | None, receiving Message


def _simplified_a(p: Party) -> Program:
    q, g = p.params.q, p.params.g
    mu = p.exponent()
    reply = yield p.send(1, label_bytes(p.identity) + p.elem(p.ep(1, pow(g, mu, q))))
    _, y_b = p.parse(2, reply)
    p.complete(derive_exchange_key(p.params, mu, p.dp(2, y_b)))


def _simplified_b(p: Party) -> Program:
    q, g = p.params.q, p.params.g
    msg = yield
    _, y_a = p.parse(1, msg)
    mu = p.exponent()
    p.complete(derive_exchange_key(p.params, mu, p.dp(1, y_a)))
    yield p.send(2, label_bytes(p.identity) + p.elem(p.ep(2, pow(g, mu, q))))


def _generic_a(p: Party) -> Program:
    q, g = p.params.q, p.params.g
    d_a = p.exponent()
    reply = yield p.send(1, label_bytes(p.identity) + p.elem(p.ep(1, pow(g, d_a, q))))
    c1, c2 = p.parse(2, reply)
    c1, c2 = p.dp(2, c1, 0), p.dp(2, c2, 1)
    K = c2 * pow(c1, -d_a, q) % q
    r_a = p.challenge()
    reply = yield p.send(3, p.ek(K, 3, r_a))
    (box,) = p.parse(4, reply)
    got_ra, r_b = p.split(p.dk(K, 4, box), 2)
    p.check("R_A", got_ra == r_a)
    p.complete(K)
    yield p.send(5, p.ek(K, 5, r_b))


def _generic_b(p: Party) -> Program:
    q, g = p.params.q, p.params.g
    msg = yield
    _, y = p.parse(1, msg)
    e_a = p.dp(1, y)
    K = p.transport_key()
    k = p.exponent()
    c1, c2 = pow(g, k, q), K * pow(e_a, k, q) % q
    msg = yield p.send(2, p.elem(p.ep(2, c1, 0)) + p.elem(p.ep(2, c2, 1)))
    (box,) = p.parse(3, msg)
    r_a = p.dk(K, 3, box)
    r_b = p.challenge()
    msg = yield p.send(4, p.ek(K, 4, r_a + r_b))
    (box,) = p.parse(5, msg)
    p.check("R_B", p.dk(K, 5, box) == r_b)
    p.complete(K)


def _dh_a(p: Party, enhanced: bool = False) -> Program:
    q, g = p.params.q, p.params.g
    r_a = p.exponent()
    x = pow(g, r_a, q)
    if p.cfg.encrypt_first_flow:
        x = p.ep(1, x)
    reply = yield p.send(1, label_bytes(p.identity) + p.elem(x))
    y, box = p.parse(2, reply)
    K = derive_exchange_key(p.params, r_a, p.dp(2, y))
    r_a_bytes = p.challenge()
    if enhanced:
        r_b, s_b = p.split(p.dk(K, 2, box), 2)
        s_a = p.challenge()
        reply = yield p.send(3, p.ek(K, 3, r_a_bytes + r_b + s_a))
    else:
        r_b = p.dk(K, 2, box)
        reply = yield p.send(3, p.ek(K, 3, r_a_bytes + r_b))
    (box,) = p.parse(4, reply)
    p.check("R_A", p.dk(K, 4, box) == r_a_bytes)
    p.complete(K, combine_session_key(s_a, s_b) if enhanced else None)


def _dh_b(p: Party, enhanced: bool = False) -> Program:
    q, g = p.params.q, p.params.g
    msg = yield
    _, x = p.parse(1, msg)
    if p.cfg.encrypt_first_flow:
        x = p.dp(1, x)
    r_b = p.exponent()
    K = derive_exchange_key(p.params, r_b, x)
    r_b_bytes = p.challenge()
    if enhanced:
        s_b = p.challenge()
        msg = yield p.send(2, p.elem(p.ep(2, pow(g, r_b, q))) + p.ek(K, 2, r_b_bytes + s_b))
        (box,) = p.parse(3, msg)
        r_a, got_rb, s_a = p.split(p.dk(K, 3, box), 3)
    else:
        msg = yield p.send(2, p.elem(p.ep(2, pow(g, r_b, q))) + p.ek(K, 2, r_b_bytes))
        (box,) = p.parse(3, msg)
        r_a, got_rb = p.split(p.dk(K, 3, box), 2)
    p.check("R_B", got_rb == r_b_bytes)
    p.complete(K, combine_session_key(s_a, s_b) if enhanced else None)
    yield p.send(4, p.ek(K, 4, r_a))


def _aeke_a(p: Party) -> Program:
    q, g = p.params.q, p.params.g
    # hash_only models an initiator that stole the verifier record but not P
    P = p.cfg.password
    pw_hash = P if p.cfg.hash_only else hash_password(P)
    r_a = p.exponent()
    reply = yield p.send(1, p.elem(p.ep(1, pow(g, r_a, q), password=pw_hash)))
    (y,) = p.parse(2, reply)
    K = derive_exchange_key(p.params, r_a, p.dp(2, y, password=pw_hash))
    sig = sign_with_password(P, key_bytes(p.params, K))
    p.complete(K)
    yield p.send(3, p.ek(K, 3, sig))


def _aeke_b(p: Party) -> Program:
    q, g = p.params.q, p.params.g
    pw_hash = hash_password(p.cfg.password)
    msg = yield
    (x,) = p.parse(1, msg)
    r_b = p.exponent()
    K = derive_exchange_key(p.params, r_b, p.dp(1, x, password=pw_hash))
    msg = yield p.send(2, p.elem(p.ep(2, pow(g, r_b, q), password=pw_hash)))
    (box,) = p.parse(3, msg)
    ok = verify_signature(p.cfg.password, key_bytes(p.params, K), p.dk(K, 3, box))
    p.check("signature", ok, AbortReason.SIGNATURE_INVALID)
    p.complete(K)


def _nokey_a(p: Party, encrypted: bool = False) -> Program:
    wrap = p.ep if encrypted else (lambda pos, x: x)
    unwrap = p.dp if encrypted else (lambda pos, x: x)
    K = p.transport_key()
    a, a_inv = p.invertible_exponent()
    reply = yield p.send(1, p.elem(wrap(1, nokey_wrap(p.params, K, a))))
    (x,) = p.parse(2, reply)
    k_b = nokey_unwrap(p.params, unwrap(2, x), a_inv)
    p.complete(K)
    yield p.send(3, p.elem(wrap(3, k_b)))


def _nokey_b(p: Party, encrypted: bool = False) -> Program:
    wrap = p.ep if encrypted else (lambda pos, x: x)
    unwrap = p.dp if encrypted else (lambda pos, x: x)
    msg = yield
    (x,) = p.parse(1, msg)
    b, b_inv = p.invertible_exponent()
    msg = yield p.send(2, p.elem(wrap(2, nokey_wrap(p.params, unwrap(1, x), b))))
    (x,) = p.parse(3, msg)
    p.complete(nokey_unwrap(p.params, unwrap(3, x), b_inv))


_PROGRAMS = {
    Variant.SIMPLIFIED_EKE: {"A": _simplified_a, "B": _simplified_b},
    Variant.GENERIC_EKE: {"A": _generic_a, "B": _generic_b},
    Variant.DH_EKE: {"A": _dh_a, "B": _dh_b},
    Variant.ENHANCED_EKE: {"A": lambda p: _dh_a(p, True), "B": lambda p: _dh_b(p, True)},
    Variant.A_EKE: {"A": _aeke_a, "B": _aeke_b},
    Variant.NOKEY: {"A": _nokey_a, "B": _nokey_b},
    Variant.ENC_NOKEY: {"A": lambda p: _nokey_a(p, True), "B": lambda p: _nokey_b(p, True)},
}


class Channel:
    """Pass-through wire.  Override :meth:`transmit` to tamper; return None to drop."""

    def transmit(self, msg: Message) -> Message | None:
        return msg


def drive(a: Party, b: Party, channel: Channel | None = None, transcript: Transcript | None = None) -> None:
    """Run two parties against each other until neither has anything left to send."""
    channel = channel or Channel()
    pending = a.start()
    b.start()
    while pending is not None:
        if transcript is not None:
            transcript.append(pending)
        delivered = channel.transmit(pending)
        if delivered is None:
            break
        target = b if pending.direction == "AB" else a
        if target.finished:
            break
        pending = target.receive(delivered)
    for party in (a, b):
        party.abort(AbortReason.CHANNEL)


def run_session(
    cfg_a: SessionConfig,
    cfg_b: SessionConfig,
    channel: Channel | None = None,
    session_id: str | None = None,
) -> tuple[SessionOutcome, SessionOutcome, Transcript]:
    if cfg_a.role != "A" or cfg_b.role != "B":
        raise ValueError("cfg_a must be the initiator and cfg_b the responder")
    if cfg_a.variant != cfg_b.variant or cfg_a.params != cfg_b.params:
        raise ValueError("both parties must agree on variant and group")
    if cfg_a.encrypt_first_flow != cfg_b.encrypt_first_flow:
        raise ValueError("both parties must agree on first-flow encryption")
    session_id = session_id or f"{cfg_a.seed}-{cfg_b.seed}"
    a, b = Party(cfg_a, session_id), Party(cfg_b, session_id)
    transcript = Transcript(session_id, cfg_a.variant, cfg_a.params, cfg_a.encrypt_first_flow)
    drive(a, b, channel, transcript)
    return a.outcome, b.outcome, transcript
