"""Content-addressed, hash-verified persistence for trained models.

An artifact is one JSON document: version tag, model spec (family, mode,
hyperparameters), the adapter payload (named arrays as lists plus
scalars), and the fingerprint of the training data.  The document's
sha256 doubles as its id, so any byte flipped on disk surfaces as
CorruptArtifact on load.  JSON float serialization uses repr, which
round-trips doubles exactly: restored models forecast bit-identically.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from ..core import FeatureFrame
from ..errors import CorruptArtifactError, VersionMismatchError
from ..ingest import write_csv

ARTIFACT_VERSION = "1"


def frame_fingerprint(frame: FeatureFrame, commodity: str = "") -> str:
    """Stable content hash of a frame via its canonical CSV serialization."""
    return hashlib.sha256(write_csv(frame, commodity).encode()).hexdigest()


def _canonical(document: dict) -> str:
    return json.dumps(document, sort_keys=True, separators=(",", ":"))


def _digest(document: dict) -> str:
    body = {k: v for k, v in document.items() if k != "hash"}
    return hashlib.sha256(_canonical(body).encode()).hexdigest()


def build_artifact(family: str, mode: str, hyper: dict, payload: dict,
                   fingerprint: str, commodity: str = "") -> dict:
    doc = {
        "version": ARTIFACT_VERSION,
        "family": family,
        "mode": mode,
        "commodity": commodity,
        "hyper": hyper,
        "payload": payload,
        "fingerprint": fingerprint,
    }
    doc["hash"] = _digest(doc)
    return doc


class ArtifactStore:
    """Directory of <hash16>.json artifact files."""

    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)

    def save(self, document: dict) -> str:
        if document.get("hash") != _digest(document):
            document = dict(document)
            document["hash"] = _digest(document)
        artifact_id = document["hash"][:16]
        path = self.directory / f"{artifact_id}.json"
        path.write_text(_canonical(document), encoding="utf-8")
        return artifact_id

    def load(self, artifact_id: str) -> dict:
        path = self.directory / f"{artifact_id}.json"
        if not path.exists():
            raise CorruptArtifactError(f"no artifact {artifact_id!r}")
        try:
            document = json.loads(path.read_text(encoding="utf-8"))
        except json.JSONDecodeError:
            raise CorruptArtifactError(f"artifact {artifact_id!r} is not valid JSON") from None
        if not isinstance(document, dict) or "hash" not in document:
            raise CorruptArtifactError(f"artifact {artifact_id!r} has no hash")
        if document["hash"] != _digest(document):
            raise CorruptArtifactError(f"artifact {artifact_id!r} failed its hash check")
        if document.get("version") != ARTIFACT_VERSION:
            raise VersionMismatchError(
                f"artifact version {document.get('version')!r}, expected {ARTIFACT_VERSION!r}"
            )
        return document

    def ids(self) -> list[str]:
        return sorted(p.stem for p in self.directory.glob("*.json"))
