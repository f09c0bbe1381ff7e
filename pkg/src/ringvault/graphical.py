"""Graphical passwords: one image chosen from each of three eight-image sets,
verified against shuffled presentations.

Answers are compared by image id, so display order never affects the verdict.
Shuffles come from an unbiased Fisher-Yates driven by a secure source.
"""

from __future__ import annotations

import json
import random
import secrets
import threading
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Dict, List, Optional, Sequence, Tuple

DEFAULT_TTL_SECONDS = 600
SET_COUNT = 3
SET_SIZE = 8


class InvalidSelection(ValueError):
    pass


@dataclass(frozen=True)
class CatalogEntry:
    image_id: int
    label: str
    asset_ref: str


@dataclass(frozen=True)
class ImageCatalog:
    sets: Tuple[Tuple[CatalogEntry, ...], ...]

    def __post_init__(self):
        if len(self.sets) != SET_COUNT or any(len(s) != SET_SIZE for s in self.sets):
            raise ValueError(f"catalog needs {SET_COUNT} sets of {SET_SIZE} images")
        ids = [e.image_id for s in self.sets for e in s]
        if len(set(ids)) != len(ids):
            raise ValueError("image ids must be distinct across the catalog")

    def set_ids(self, k: int) -> List[int]:
        return [e.image_id for e in self.sets[k]]

    def to_manifest(self) -> dict:
        return {
            "sets": [
                [
                    {"image_id": e.image_id, "label": e.label, "asset_ref": e.asset_ref}
                    for e in s
                ]
                for s in self.sets
            ]
        }


def catalog_from_manifest(manifest: dict) -> ImageCatalog:
    return ImageCatalog(tuple(
        tuple(CatalogEntry(e["image_id"], e["label"], e["asset_ref"]) for e in s)
        for s in manifest["sets"]
    ))


def load_catalog(path: Optional[Path] = None) -> ImageCatalog:
    """Load a catalog manifest; defaults to the bundled one."""
    if path is not None:
        manifest = json.loads(Path(path).read_text())
    else:
        manifest = json.loads(
            resources.files("ringvault").joinpath("data/manifest.json").read_text()
        )
    return catalog_from_manifest(manifest)


@dataclass(frozen=True)
class GraphicalSecret:
    selections: Tuple[int, int, int]


@dataclass
class GraphicalChallenge:
    challenge_id: str
    presented_sets: List[List[int]]
    issued_at: int
    ttl_seconds: int = DEFAULT_TTL_SECONDS
    consumed: bool = False


def enroll(catalog: ImageCatalog, selections: Sequence[int]) -> GraphicalSecret:
    """Validate one chosen id per set; persistence is the caller's job."""
    if len(selections) != SET_COUNT:
        raise InvalidSelection(f"expected {SET_COUNT} selections, got {len(selections)}")
    for k, sel in enumerate(selections):
        if sel not in catalog.set_ids(k):
            raise InvalidSelection(f"id {sel} is not in image set {k + 1}")
    return GraphicalSecret(tuple(selections))


def issue_challenge(
    catalog: ImageCatalog,
    rng: Optional[random.Random] = None,
    issued_at: int = 0,
    ttl_seconds: int = DEFAULT_TTL_SECONDS,
) -> GraphicalChallenge:
    """Present each set in an independent uniform shuffle."""
    rng = rng or random.SystemRandom()
    presented = []
    for k in range(SET_COUNT):
        ids = catalog.set_ids(k)
        rng.shuffle(ids)
        presented.append(ids)
    return GraphicalChallenge(
        challenge_id=secrets.token_urlsafe(16),
        presented_sets=presented,
        issued_at=issued_at,
        ttl_seconds=ttl_seconds,
    )


def matches(secret: GraphicalSecret, submitted: Sequence[int]) -> bool:
    """Position-independent comparison: ids per set, in set order 1..3."""
    return len(submitted) == SET_COUNT and tuple(submitted) == secret.selections


def verify(secret: GraphicalSecret, challenge: GraphicalChallenge,
           submitted: Sequence[int], now: int) -> str:
    """Returns "accept" or "reject:<reason>"; acceptance consumes the challenge."""
    if challenge.consumed:
        return "reject:AlreadyUsed"
    if now >= challenge.issued_at + challenge.ttl_seconds:
        return "reject:Expired"
    if not matches(secret, submitted):
        return "reject:Mismatch"
    challenge.consumed = True
    return "accept"


class GraphicalService:
    """Challenge store with atomic consumption, mirroring the OTP service."""

    def __init__(self, catalog: ImageCatalog, ttl_seconds: int = DEFAULT_TTL_SECONDS):
        self.catalog = catalog
        self.ttl_seconds = ttl_seconds
        self._challenges: Dict[str, GraphicalChallenge] = {}
        self._lock = threading.Lock()

    def issue_challenge(self, now: int,
                        rng: Optional[random.Random] = None) -> GraphicalChallenge:
        challenge = issue_challenge(self.catalog, rng, issued_at=now,
                                    ttl_seconds=self.ttl_seconds)
        with self._lock:
            self._challenges[challenge.challenge_id] = challenge
        return challenge

    def void_challenge(self, challenge_id: str) -> None:
        with self._lock:
            self._challenges.pop(challenge_id, None)

    def verify(self, secret: GraphicalSecret, challenge_id: str,
               submitted: Sequence[int], now: int) -> str:
        with self._lock:
            challenge = self._challenges.get(challenge_id)
            if challenge is None:
                return "reject:Unknown"
            return verify(secret, challenge, submitted, now)
