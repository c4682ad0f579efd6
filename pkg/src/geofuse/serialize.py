"""Canonical JSON artifacts with embedded content hashes.

Every structured artifact this package writes is canonical JSON (sorted
keys, minimal separators) with a ``content_hash`` field covering the rest
of the payload, so reruns with identical inputs produce byte-identical
files and consumers can verify integrity before use.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path


def canonical_json(obj) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=False)


def content_hash_of(payload: dict) -> str:
    """SHA-256 of the canonical payload, ignoring any embedded hash field."""
    body = {k: v for k, v in payload.items() if k != "content_hash"}
    return hashlib.sha256(canonical_json(body).encode("utf-8")).hexdigest()


def write_json_artifact(path: str | Path, payload: dict) -> str:
    """Write a payload with its content hash embedded; returns the hash."""
    digest = content_hash_of(payload)
    body = dict(payload)
    body["content_hash"] = digest
    Path(path).write_text(canonical_json(body) + "\n", encoding="utf-8")
    return digest


def load_json_artifact(path: str | Path, expected_kind: str | None = None, verify: bool = True) -> dict:
    """Load an artifact, optionally checking its kind tag and content hash."""
    path = Path(path)
    payload = json.loads(path.read_text(encoding="utf-8"))
    if not isinstance(payload, dict):
        raise ValueError(f"{path}: artifact must be a JSON object")
    if expected_kind is not None and payload.get("kind") != expected_kind:
        raise ValueError(f"{path}: expected a {expected_kind!r} artifact, got {payload.get('kind')!r}")
    if verify:
        stored = payload.get("content_hash")
        actual = content_hash_of(payload)
        if stored != actual:
            raise ValueError(f"{path}: content hash mismatch (stored {stored}, actual {actual})")
    return payload


def file_sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()
