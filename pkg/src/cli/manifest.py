import time
from contextlib import contextmanager
from datetime import datetime, timezone
from pathlib import Path
from typing import Any, Dict, Iterator, List, Optional

import structlog
from pydantic import BaseModel, Field

from deform.cache import file_sha256
from diffalg import codec

logger = structlog.get_logger(__name__)

MANIFEST_DIR = "manifests"


class ArtifactRecord(BaseModel):
    role: str = Field(..., description="consumed or produced")
    path: str
    sha256: str


class PhaseTiming(BaseModel):
    phase: str
    seconds: float


class RunManifest(BaseModel):
    """Record of one run: what it was asked, what it read and wrote, how long it took"""
    run_id: str
    started_at: str
    config: Dict[str, Any] = Field(..., description="Config echo")
    gauge: Optional[Dict[str, Any]] = Field(None, description="Gauge record of the deformation used")
    artifacts: List[ArtifactRecord] = Field(default_factory=list)
    phases: List[PhaseTiming] = Field(default_factory=list)
    exit_code: int = 0
    content_hash: str = Field("", description="sha256 of config, gauge, artifacts and exit code")

    def hashed_fields(self) -> Dict[str, Any]:
        return self.model_dump(mode="json", include={"config", "gauge", "artifacts", "exit_code"})


class ManifestRecorder:
    """Collects manifest entries while a command runs."""

    def __init__(self, run_id: str, config: Dict[str, Any]):
        self.manifest = RunManifest(
            run_id=run_id,
            started_at=datetime.now(timezone.utc).isoformat(),
            config=config,
        )

    @contextmanager
    def phase(self, name: str) -> Iterator[None]:
        started = time.perf_counter()
        try:
            yield
        finally:
            seconds = round(time.perf_counter() - started, 3)
            self.manifest.phases.append(PhaseTiming(phase=name, seconds=seconds))
            logger.debug("Phase finished", phase=name, seconds=seconds)

    def set_gauge(self, gauge: Dict[str, Any]) -> None:
        self.manifest.gauge = gauge

    def _artifact(self, role: str, path: Path) -> None:
        path = Path(path)
        if not path.is_file():
            return
        record = ArtifactRecord(role=role, path=str(path), sha256=file_sha256(path))
        if record not in self.manifest.artifacts:
            self.manifest.artifacts.append(record)

    def consumed(self, path: Path) -> None:
        self._artifact("consumed", path)

    def produced(self, path: Path) -> None:
        self._artifact("produced", path)

    def finish(self, exit_code: int) -> RunManifest:
        self.manifest.exit_code = int(exit_code)
        self.manifest.content_hash = codec.content_hash(self.manifest.hashed_fields())
        return self.manifest

    def write(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(self.manifest.model_dump_json(indent=2) + "\n", encoding="utf-8")
        logger.info("Manifest written", path=str(path), content_hash=self.manifest.content_hash[:16])
        return path


def default_manifest_path(cache_dir: str, run_id: str) -> Path:
    return Path(cache_dir) / MANIFEST_DIR / f"{run_id}.json"
