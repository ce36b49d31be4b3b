import csv
import hashlib
import io
import json
import math
from collections.abc import Iterable, Mapping, Sequence
from pathlib import Path
from typing import Any

import sigvol
from sigvol.experiments.dataclasses import ExperimentManifest, RunResult

MANIFEST_NAME = "manifest.json"


def _clean(value: Any) -> Any:
    """Non-finite floats become null so the output stays valid JSON."""
    if isinstance(value, float):
        return value if math.isfinite(value) else None
    if isinstance(value, Mapping):
        return {str(k): _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_clean(v) for v in value]
    return value


def encode_json(data: Any) -> bytes:
    """Deterministic JSON: sorted keys, fixed indentation, trailing newline."""
    text = json.dumps(_clean(data), sort_keys=True, indent=2, allow_nan=False)
    return (text + "\n").encode()


def encode_csv(header: Sequence[str], rows: Iterable[Sequence[str]]) -> bytes:
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buffer.getvalue().encode()


def digest(content: bytes) -> str:
    return hashlib.sha256(content).hexdigest()


class FileStorage:
    def __init__(self, out_dir: Path) -> None:
        self.out_dir = Path(out_dir)

    def store_run(
        self,
        *,
        command: str,
        config: Mapping[str, Any],
        result: RunResult,
        seeds: Mapping[str, int],
        wall_clock_seconds: float,
    ) -> ExperimentManifest:
        self.out_dir.mkdir(parents=True, exist_ok=True)
        digests = {}
        for name, content in result.files.items():
            (self.out_dir / name).write_bytes(content)
            digests[name] = digest(content)
        manifest = ExperimentManifest(
            command=command,
            config=dict(config),
            seeds=dict(seeds),
            version=sigvol.__version__,
            wall_clock_seconds=wall_clock_seconds,
            digests=digests,
        )
        (self.out_dir / MANIFEST_NAME).write_bytes(encode_json(manifest.to_json()))
        return manifest


def read_manifest(path: Path) -> ExperimentManifest:
    if path.is_dir():
        path = path / MANIFEST_NAME
    return ExperimentManifest.from_json(json.loads(path.read_text()))
