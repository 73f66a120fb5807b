"""Dataset directories: ``manifest.txt`` plus one VTEN file per image and label.

Manifest layout::

    varda-dataset <version> <record count>
    <id> <split> <domain> <has_label 0|1>
    ...

Images live at ``<split>/<id>.image.vten`` (float64, C×H×W) and labels at
``<split>/<id>.label.vten`` (uint8 one-hot, K×H×W).
"""

from __future__ import annotations

import hashlib
import logging
from pathlib import Path

import numpy as np

from ..config import flatten, write_kv_lines
from ..errors import ContractViolation, FormatError
from ..tensor import encode_array, load_array
from .synth import SPLITS, LabeledImage, Split, SynthDataset, SynthSpec

logger = logging.getLogger(__name__)

MANIFEST = "manifest.txt"
SPEC_FILE = "spec.txt"
HEADER = "varda-dataset"
VERSION = 1


def _image_path(root: Path, split: str, item_id: str) -> Path:
    return root / split / f"{item_id}.image.vten"


def _label_path(root: Path, split: str, item_id: str) -> Path:
    return root / split / f"{item_id}.label.vten"


def save_dataset(dataset: SynthDataset, path: str | Path, spec: SynthSpec | None = None) -> Path:
    root = Path(path)
    lines = []
    count = 0
    for split in dataset.splits():
        (root / split.name).mkdir(parents=True, exist_ok=True)
        for item in split.items:
            _image_path(root, split.name, item.id).write_bytes(
                encode_array(np.asarray(item.image, dtype=np.float64))
            )
            if item.label is not None:
                _label_path(root, split.name, item.id).write_bytes(
                    encode_array(np.asarray(item.label, dtype=np.uint8))
                )
            lines.append(f"{item.id} {split.name} {item.domain} {int(item.has_label)}")
            count += 1
    text = "\n".join([f"{HEADER} {VERSION} {count}", *lines]) + "\n"
    (root / MANIFEST).write_text(text, encoding="utf-8")
    if spec is not None:
        (root / SPEC_FILE).write_text("\n".join(write_kv_lines(flatten(spec))) + "\n")
    logger.info(f"Dataset written to {root} ({count} records)")
    return root


def _load_vten(path: Path) -> np.ndarray:
    try:
        return load_array(path)
    except FormatError as err:
        wrapped = FormatError(f"{path.name}: {err}")
        wrapped.offset = err.offset
        raise wrapped from err
    except FileNotFoundError as err:
        raise FormatError(f"missing record file {path}") from err


def _read_manifest(root: Path) -> list[tuple[str, str, str, bool]]:
    try:
        lines = (root / MANIFEST).read_text(encoding="utf-8").splitlines()
    except FileNotFoundError as err:
        raise FormatError(f"no {MANIFEST} in {root}") from err
    if not lines:
        raise FormatError("empty manifest", line=1)
    header = lines[0].split()
    if len(header) != 3 or header[0] != HEADER or not header[2].isdigit():
        raise FormatError(f"bad manifest header {lines[0]!r}", line=1)
    if header[1] != str(VERSION):
        raise FormatError(f"unsupported dataset version {header[1]}", line=1)
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        fields = line.split()
        if len(fields) != 4 or fields[1] not in SPLITS or fields[3] not in ("0", "1"):
            raise FormatError(f"bad manifest record {line!r}", line=lineno)
        records.append((fields[0], fields[1], fields[2], fields[3] == "1"))
    if len(records) != int(header[2]):
        raise FormatError(f"manifest declares {header[2]} records but lists {len(records)}")
    return records


def load_dataset(path: str | Path) -> SynthDataset:
    root = Path(path)
    items: dict[str, list[LabeledImage]] = {name: [] for name in SPLITS}
    domains = {"source": "source", "target_train": "target", "target_test": "target"}
    for item_id, split, domain, has_label in _read_manifest(root):
        if domain != domains[split]:
            raise FormatError(f"{item_id}: domain {domain} does not belong to split {split}")
        image = _load_vten(_image_path(root, split, item_id))
        label = _load_vten(_label_path(root, split, item_id)) if has_label else None
        if image.ndim != 3 or (label is not None and label.ndim != 3):
            raise FormatError(f"{item_id}: image and label must be 3-D arrays")
        try:
            items[split].append(LabeledImage(item_id, image, label, domain))
        except ContractViolation as err:
            raise FormatError(f"{item_id}: {err}") from err
    dataset = SynthDataset(*(Split(name, domains[name], items[name]) for name in SPLITS))
    logger.debug(f"Loaded dataset {root}: {[len(s) for s in dataset.splits()]}")
    return dataset


def dataset_hash(path: str | Path) -> str:
    """Content hash over the manifest and every record file, in manifest order."""
    root = Path(path)
    digest = hashlib.sha256()
    digest.update((root / MANIFEST).read_bytes())
    for item_id, split, _, has_label in _read_manifest(root):
        files = [_image_path(root, split, item_id)]
        if has_label:
            files.append(_label_path(root, split, item_id))
        for file in files:
            digest.update(file.relative_to(root).as_posix().encode("utf-8") + b"\0")
            digest.update(file.read_bytes())
    return digest.hexdigest()
