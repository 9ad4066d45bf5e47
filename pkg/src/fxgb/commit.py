"""Hash commitments to datasets and models, and the public statement digest.

``Com(m; r) = SHA-256(tag || len(m) as u64 LE || m || r)`` with 32 random
bytes ``r``. The tag strings below are frozen; changing one changes
every digest.
"""

from __future__ import annotations

import hashlib
import hmac
import secrets
import struct
from dataclasses import dataclass

from .serialize import dataset_bytes, model_bytes
from .train import Dataset, Model

TAG_DATASET = b"fxgb/commit/dataset/v1"
TAG_MODEL = b"fxgb/commit/model/v1"
TAG_STATEMENT = b"fxgb/statement/v1"
TAG_RANDOMNESS = b"fxgb/commit-randomness/v1"


@dataclass(frozen=True)
class Commitment:
    digest: bytes
    tag: bytes

    @property
    def hex(self) -> str:
        return self.digest.hex()


def canonical_bytes(obj) -> bytes:
    if isinstance(obj, Dataset):
        return dataset_bytes(obj)
    if isinstance(obj, Model):
        return model_bytes(obj)
    raise TypeError(f"no canonical encoding for {type(obj).__name__}")


def tag_for(obj) -> bytes:
    return TAG_DATASET if isinstance(obj, Dataset) else TAG_MODEL


def _digest(data: bytes, r: bytes, tag: bytes) -> bytes:
    return hashlib.sha256(tag + struct.pack("<Q", len(data)) + data + r).digest()


def commit(data: bytes, r: bytes, tag: bytes = TAG_DATASET) -> Commitment:
    if len(r) != 32:
        raise ValueError("commitment randomness must be 32 bytes")
    return Commitment(_digest(data, r, tag), tag)


def verify_open(c: Commitment, data: bytes, r: bytes) -> bool:
    return len(r) == 32 and hmac.compare_digest(c.digest, _digest(data, r, c.tag))


def commit_object(obj, r: bytes) -> Commitment:
    return commit(canonical_bytes(obj), r, tag_for(obj))


def fresh_randomness() -> bytes:
    return secrets.token_bytes(32)


def seeded_randomness(seed: int, label: str) -> bytes:
    """Deterministic randomness for reproducible runs; not hiding across reuse of a seed."""
    return hashlib.sha256(TAG_RANDOMNESS + str(int(seed)).encode() + b"/" + label.encode()).digest()


def statement(ds_commit: Commitment, model_commit: Commitment) -> bytes:
    return hashlib.sha256(TAG_STATEMENT + ds_commit.digest + model_commit.digest).digest()
