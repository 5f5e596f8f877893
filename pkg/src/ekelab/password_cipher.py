"""Password-keyed and session-keyed ciphers, plus the password hash and keyed signature.

All digests are SHA-256.  A cipher context is a ``(session_id, flow_index)``
pair; binding it into every pad and keystream keeps identical plaintexts in
different flows from producing identical ciphertexts.

Element encryption maps ``x -> x - 1`` into ``[0, q-2]`` and adds a password
pad mod ``q - 1``.  Decryption under *any* password therefore lands back on a
valid group element, so a wrong guess cannot be discarded for free.
"""

from __future__ import annotations

import hashlib
import hmac
from dataclasses import dataclass

from .group_math import GroupParams

DIGEST_BYTES = 32
SIG_LABEL = b"sig"

Context = tuple[str, int]


@dataclass(frozen=True)
class Password:
    bytes: bytes
    bit_length: int

    def __post_init__(self):
        if not self.bytes:
            raise ValueError("password must be non-empty")
        if self.bit_length < 1:
            raise ValueError("bit_length must be positive")

    @classmethod
    def from_index(cls, index: int, bit_length: int) -> "Password":
        """The exhaustive-space password numbered ``index`` (little-endian bytes)."""
        width = max(1, (bit_length + 7) // 8)
        return cls(index.to_bytes(width, "little"), bit_length)


def _sha256(*parts: bytes) -> bytes:
    h = hashlib.sha256()
    for part in parts:
        h.update(part)
    return h.digest()


def context_bytes(ctx: Context) -> bytes:
    session_id, flow_index = ctx
    return session_id.encode("utf-8") + b"\x00" + flow_index.to_bytes(4, "big")


def hash_password(P: Password) -> Password:
    return Password(_sha256(P.bytes), P.bit_length)


def elem_pad(params: GroupParams, P: Password, ctx: Context) -> int:
    digest = _sha256(P.bytes, b"\x00", context_bytes(ctx))
    return int.from_bytes(digest, "big") % params.n


def mask_elem(params: GroupParams, pad: int, x: int) -> int:
    params.check_element(x)
    return (x - 1 + pad) % params.n


def unmask_elem(params: GroupParams, pad: int, c: int) -> int:
    if not 0 <= c <= params.q - 2:
        raise ValueError(f"ciphertext {c} outside [0, {params.q - 2}]")
    return (c - pad) % params.n + 1


def encrypt_elem(params: GroupParams, P: Password, ctx: Context, x: int) -> int:
    return mask_elem(params, elem_pad(params, P, ctx), x)


def decrypt_elem(params: GroupParams, P: Password, ctx: Context, c: int) -> int:
    return unmask_elem(params, elem_pad(params, P, ctx), c)


def keystream(K: bytes, ctx: Context, length: int) -> bytes:
    cb = context_bytes(ctx)
    blocks = (length + DIGEST_BYTES - 1) // DIGEST_BYTES
    stream = b"".join(_sha256(K, b"\x01", cb, i.to_bytes(8, "big")) for i in range(blocks))
    return stream[:length]


def stream_encrypt(K: bytes, ctx: Context, m: bytes) -> bytes:
    ks = keystream(K, ctx, len(m))
    return bytes(a ^ b for a, b in zip(m, ks))


stream_decrypt = stream_encrypt


def sign_with_password(P: Password, K: bytes) -> bytes:
    # keyed hash; no signature scheme is defined for this flow
    return _sha256(P.bytes, SIG_LABEL, K)


def verify_signature(P: Password, K: bytes, sig: bytes) -> bool:
    return hmac.compare_digest(sign_with_password(P, K), sig)
