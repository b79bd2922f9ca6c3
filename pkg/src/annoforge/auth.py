"""Password hashing and token generation.

Passwords are hashed with scrypt and stored as
``scrypt$<log2_n>$<r>$<p>$<salt_hex>$<hash_hex>`` so parameters can be raised
later without breaking stored values. Comparison is constant-time.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets

_LOG2_N = 14
_R = 8
_P = 1
_SALT_BYTES = 16
_KEY_BYTES = 32


def hash_password(password: str) -> str:
    salt = secrets.token_bytes(_SALT_BYTES)
    key = hashlib.scrypt(password.encode("utf-8"), salt=salt, n=1 << _LOG2_N, r=_R, p=_P, dklen=_KEY_BYTES)
    return f"scrypt${_LOG2_N}${_R}${_P}${salt.hex()}${key.hex()}"


def verify_password(password: str, stored: str) -> bool:
    try:
        scheme, log2_n, r, p, salt_hex, hash_hex = stored.split("$")
        if scheme != "scrypt":
            return False
        expected = bytes.fromhex(hash_hex)
        key = hashlib.scrypt(
            password.encode("utf-8"),
            salt=bytes.fromhex(salt_hex),
            n=1 << int(log2_n),
            r=int(r),
            p=int(p),
            dklen=len(expected),
        )
    except (ValueError, TypeError):
        return False
    return hmac.compare_digest(key, expected)


def new_token() -> str:
    """Opaque, URL-safe, 256 bits of entropy."""
    return secrets.token_urlsafe(32)
