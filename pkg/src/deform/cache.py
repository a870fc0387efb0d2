import hashlib
import json
import os
from pathlib import Path
from typing import Optional

import structlog

from deform.errors import CacheCorrupted
from deform.state import DeformationState, GaugeRecord
from diffalg import codec

logger = structlog.get_logger(__name__)

DEFAULT_CACHE_DIR = ".todakdv-cache"
CACHE_DIR_ENV = "TODAKDV_CACHE_DIR"

# one file per gauge holds the deepest state; any lower order is a truncation of it
TRUNCATION_RULE = "Q mod ε^(order+1), residual mod ε^order"


def default_cache_dir() -> Path:
    return Path(os.getenv(CACHE_DIR_ENV) or DEFAULT_CACHE_DIR)


class StateCache:
    """
    Deformation states on disk, keyed by the gauge and the truncation rule.

    Keys and file contents are SHA-256 hashes of canonical JSON. A file whose
    payload does not match its recorded hash is discarded and recomputed.
    """
    def __init__(self, directory: Optional[Path] = None):
        self.directory = Path(directory) if directory is not None else default_cache_dir()

    def key(self, gauge: GaugeRecord) -> str:
        return codec.content_hash({"gauge": gauge.key_fields(), "rule": TRUNCATION_RULE})

    def path(self, gauge: GaugeRecord) -> Path:
        return self.directory / f"deform-{self.key(gauge)}.json"

    def _read(self, path: Path) -> DeformationState:
        with path.open("r", encoding="utf-8") as fh:
            document = json.load(fh)
        payload = document.get("payload")
        recorded = document.get("content_hash", "")
        actual = codec.content_hash(payload)
        if actual != recorded:
            raise CacheCorrupted(str(path), recorded, actual)
        return DeformationState.from_payload(payload)

    def load(self, gauge: GaugeRecord, max_order: Optional[int] = None) -> Optional[DeformationState]:
        """
        Deepest cached state for this gauge, truncated to max_order.

        Returns None on a miss or when the file was corrupted (it is removed).
        """
        path = self.path(gauge)
        if not path.exists():
            logger.debug("Cache miss", key=self.key(gauge)[:16])
            return None
        try:
            state = self._read(path)
        except (CacheCorrupted, ValueError, KeyError, TypeError) as exc:
            logger.warning("Cache file discarded", path=str(path), error=str(exc))
            path.unlink(missing_ok=True)
            return None
        if max_order is not None:
            state = state.truncated_to(max_order)
        logger.info("Cache hit", key=self.key(gauge)[:16], order=state.order)
        return state

    def save(self, state: DeformationState) -> Path:
        """Write the state unless a deeper one is already stored."""
        self.directory.mkdir(parents=True, exist_ok=True)
        path = self.path(state.gauge)
        if path.exists():
            try:
                if self._read(path).order >= state.order:
                    return path
            except (CacheCorrupted, ValueError, KeyError, TypeError):
                pass
        payload = state.to_payload()
        document = {
            "key": self.key(state.gauge),
            "payload": payload,
            "content_hash": codec.content_hash(payload),
        }
        tmp = path.with_suffix(".tmp")
        tmp.write_text(codec.dumps(document), encoding="utf-8")
        tmp.replace(path)
        logger.debug("State cached", order=state.order, path=str(path))
        return path


def file_sha256(path: Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()
