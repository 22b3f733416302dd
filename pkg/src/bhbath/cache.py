"""On-disk cache of eigensystems keyed by model parameters and basis ordering."""
from __future__ import annotations

import hashlib
import json
import logging
import os
from pathlib import Path

import numpy as np

from .operators import SparseOperator
from .spectra import EigenSystem, diagonalize

log = logging.getLogger(__name__)

CACHE_VERSION = 1
BASIS_ORDERING = "fock-desc-lex/spin-major-up-down"
DEFAULT_CACHE_DIR = Path(os.environ.get("BHBATH_CACHE", ".lab_cache"))


def cache_key(kind: str, params: dict) -> str:
    payload = json.dumps(
        {"v": CACHE_VERSION, "kind": kind, "ordering": BASIS_ORDERING, "params": params},
        sort_keys=True,
    )
    return hashlib.sha256(payload.encode()).hexdigest()[:24]


class EigenCache:
    def __init__(self, root=DEFAULT_CACHE_DIR):
        self.root = Path(root)
        self.hits = 0
        self.misses = 0

    def path(self, key: str) -> Path:
        return self.root / f"{key}.npz"

    def load(self, key: str, op: SparseOperator | None = None) -> EigenSystem | None:
        p = self.path(key)
        if not p.exists():
            return None
        try:
            with np.load(p) as z:
                if int(z["version"]) != CACHE_VERSION:
                    raise ValueError("cache version mismatch")
                es = EigenSystem(z["energies"], z["vectors"], str(z["tag"]))
            if op is not None and not spot_check(es, op):
                raise ValueError("residual spot check failed")
        except Exception as exc:  # any unreadable entry is treated as corrupt
            log.warning("discarding corrupt cache entry %s (%s)", p.name, exc)
            p.unlink(missing_ok=True)
            return None
        return es

    def store(self, key: str, es: EigenSystem) -> None:
        self.root.mkdir(parents=True, exist_ok=True)
        tmp = self.root / f".{key}.tmp.npz"
        np.savez(tmp, version=CACHE_VERSION, energies=es.energies, vectors=es.vectors, tag=es.operator_tag)
        tmp.replace(self.path(key))

    def get_or_compute(self, kind: str, params: dict, op: SparseOperator) -> EigenSystem:
        key = cache_key(kind, params)
        es = self.load(key, op)
        if es is not None:
            self.hits += 1
            return es
        self.misses += 1
        es = diagonalize(op)
        self.store(key, es)
        return es

    def entries(self) -> list[Path]:
        return sorted(self.root.glob("*.npz")) if self.root.exists() else []

    def clear(self) -> int:
        entries = self.entries()
        for p in entries:
            p.unlink()
        return len(entries)


def spot_check(es: EigenSystem, op: SparseOperator, n: int = 5, seed: int = 0) -> bool:
    """Residual check ||H v - E v|| on a few random eigenpairs."""
    if es.vectors.shape[0] != op.dim or es.energies.size != op.dim:
        return False
    rng = np.random.default_rng(seed)
    ks = rng.choice(op.dim, size=min(n, op.dim), replace=False)
    h = op.to_csr()
    scale = max(float(np.abs(op.vals).max(initial=0.0)), 1.0)
    for k in ks:
        v = es.vectors[:, k]
        if np.abs(h @ v - es.energies[k] * v).max() > 1e-8 * scale:
            return False
    return True
