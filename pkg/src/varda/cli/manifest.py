"""Run manifests: one key=value file per command invocation."""

from __future__ import annotations

import hashlib
import logging
import os
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

from ..config import format_value, read_kv_file

logger = logging.getLogger(__name__)

MANIFEST_FILE = "run_manifest.txt"
MANIFEST_ID_KEY = "run.manifest_id"


def atomic_write_text(path: Path, text: str) -> Path:
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(text, encoding="utf-8")
    os.replace(tmp, path)
    return path


@dataclass
class RunManifest:
    """What a run was asked to do and what it produced.

    The id is a content hash of the command, resolved config, seed, version and
    input dataset hashes, so two identical invocations share an id. Outputs
    carry the id (checkpoints in their manifest) or sit next to this file.
    """

    command: str
    config: dict[str, Any]
    seed: int
    version: str
    inputs: dict[str, str] = field(default_factory=dict)
    dataset_hashes: dict[str, str] = field(default_factory=dict)
    outputs: list[str] = field(default_factory=list)
    started: float = field(default_factory=time.time)
    wall_clock: float | None = None

    @property
    def id(self) -> str:
        digest = hashlib.sha256()
        digest.update(f"{self.command}\n{self.seed}\n{self.version}\n".encode())
        for key in sorted(self.config):
            digest.update(f"{key}={format_value(self.config[key])}\n".encode())
        for key in sorted(self.dataset_hashes):
            digest.update(f"{key}:{self.dataset_hashes[key]}\n".encode())
        return digest.hexdigest()[:16]

    def tag(self) -> dict[str, str]:
        return {MANIFEST_ID_KEY: self.id}

    def lines(self) -> list[str]:
        out = [
            f"id={self.id}",
            f"command={self.command}",
            f"seed={self.seed}",
            f"version={self.version}",
            f"started={time.strftime('%Y-%m-%dT%H:%M:%S', time.gmtime(self.started))}Z",
            f"wall_clock={'running' if self.wall_clock is None else f'{self.wall_clock:.3f}'}",
        ]
        out += [f"input.{k}={self.inputs[k]}" for k in sorted(self.inputs)]
        out += [f"dataset_hash.{k}={self.dataset_hashes[k]}" for k in sorted(self.dataset_hashes)]
        out += [f"config.{k}={format_value(self.config[k])}" for k in sorted(self.config)]
        out += [f"output.{i}={path}" for i, path in enumerate(self.outputs)]
        return out

    def write(self, directory: str | Path) -> Path:
        root = Path(directory)
        root.mkdir(parents=True, exist_ok=True)
        path = atomic_write_text(root / MANIFEST_FILE, "\n".join(self.lines()) + "\n")
        logger.debug(f"Run manifest {self.id} written to {path}")
        return path

    def finish(self, directory: str | Path) -> Path:
        self.wall_clock = time.time() - self.started
        return self.write(directory)


def read_manifest(path: str | Path) -> dict[str, str]:
    return {key: raw for key, (raw, _) in read_kv_file(path).items()}
