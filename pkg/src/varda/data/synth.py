"""Synthetic two-domain segmentation benchmark.

Every image shows the same kind of nested structure (an outer ring, the disk
inside it and a lobe attached to its side) on a background. Source and target
images share the geometry distribution and differ only in how classes are
rendered to intensities.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ContractViolation, GenerationError

logger = logging.getLogger(__name__)

CLASS_NAMES = ("background", "ring", "disk", "lobe")
SPLITS = ("source", "target_train", "target_test")
_SPLIT_CODES = {name: code for code, name in enumerate(SPLITS)}


@dataclass
class IntensityModel:
    """Per-class mean intensity, then contrast about 0.5, gamma warp and Gaussian noise."""

    class_means: tuple[float, ...] = (0.1, 0.75, 0.35, 0.55)
    contrast: float = 1.0
    gamma: float = 1.0
    noise: float = 0.05

    def validate(self, num_classes: int) -> None:
        if len(self.class_means) != num_classes:
            raise ContractViolation(
                f"class_means has {len(self.class_means)} entries, expected {num_classes}"
            )
        if self.contrast <= 0 or self.gamma <= 0:
            raise ContractViolation("contrast and gamma must be positive")
        if self.noise < 0:
            raise ContractViolation(f"noise must be nonnegative, got {self.noise}")

    def render(self, label_map: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        base = np.asarray(self.class_means, dtype=np.float64)[label_map]
        value = np.clip((base - 0.5) * self.contrast + 0.5, 0.0, 1.0) ** self.gamma
        if self.noise > 0:
            value = value + self.noise * rng.standard_normal(value.shape)
        return value


def _target_intensity() -> IntensityModel:
    return IntensityModel(class_means=(0.65, 0.2, 0.9, 0.4), contrast=0.8, gamma=1.5, noise=0.08)


@dataclass
class GeometryJitter:
    """Ranges of the structure geometry, as fractions of the shorter image side."""

    center: float = 0.06
    outer_radius: tuple[float, float] = (0.19, 0.27)
    ring_width: tuple[float, float] = (0.06, 0.10)
    lobe_radial: tuple[float, float] = (0.10, 0.16)
    lobe_tangential: tuple[float, float] = (0.16, 0.24)
    lobe_angle: float = 0.6

    def validate(self) -> None:
        for name in ("outer_radius", "ring_width", "lobe_radial", "lobe_tangential"):
            lo, hi = getattr(self, name)
            if not 0 < lo <= hi:
                raise ContractViolation(f"{name} must satisfy 0 < lo <= hi, got {(lo, hi)}")
        if self.ring_width[1] >= self.outer_radius[0]:
            raise ContractViolation("ring_width must stay below the smallest outer_radius")


@dataclass
class SynthSpec:
    height: int = 32
    width: int = 32
    channels: int = 1
    num_classes: int = 4
    source: IntensityModel = field(default_factory=IntensityModel)
    target: IntensityModel = field(default_factory=_target_intensity)
    geometry: GeometryJitter = field(default_factory=GeometryJitter)
    n_source: int = 120
    n_target_train: int = 120
    n_target_test: int = 40
    min_fraction: float = 0.01
    max_retries: int = 50
    seed: int = 0

    def validate(self) -> None:
        if self.num_classes != len(CLASS_NAMES):
            raise ContractViolation(f"the benchmark draws {len(CLASS_NAMES)} classes")
        if self.channels != 1:
            raise ContractViolation("the benchmark renders single-channel images")
        if min(self.height, self.width) < 8:
            raise ContractViolation(f"images must be at least 8x8, got {self.height}x{self.width}")
        if min(self.n_source, self.n_target_train, self.n_target_test) < 1:
            raise ContractViolation("every split needs at least one image")
        if not 0 <= self.min_fraction < 1 / self.num_classes:
            raise ContractViolation(f"min_fraction out of range: {self.min_fraction}")
        if self.max_retries < 1:
            raise ContractViolation("max_retries must be >= 1")
        self.source.validate(self.num_classes)
        self.target.validate(self.num_classes)
        self.geometry.validate()

    def count(self, split: str) -> int:
        return {
            "source": self.n_source,
            "target_train": self.n_target_train,
            "target_test": self.n_target_test,
        }[split]


@dataclass
class LabeledImage:
    id: str
    image: np.ndarray  # C×H×W float
    label: np.ndarray | None  # K×H×W one-hot uint8
    domain: str

    def __post_init__(self) -> None:
        if self.domain not in ("source", "target"):
            raise ContractViolation(f"domain must be source or target, got {self.domain!r}")
        if self.label is not None:
            if self.label.shape[1:] != self.image.shape[1:]:
                raise ContractViolation(f"label {self.label.shape} vs image {self.image.shape}")
            if not np.all(self.label.sum(axis=0) == 1):
                raise ContractViolation(f"{self.id}: label is not one-hot")

    @property
    def has_label(self) -> bool:
        return self.label is not None

    @property
    def label_map(self) -> np.ndarray:
        if self.label is None:
            raise ContractViolation(f"{self.id} carries no label")
        return np.argmax(self.label, axis=0)


@dataclass
class Split:
    name: str
    domain: str
    items: list[LabeledImage]

    def __len__(self) -> int:
        return len(self.items)

    @property
    def has_labels(self) -> bool:
        return bool(self.items) and all(item.has_label for item in self.items)

    def images(self, indices=None) -> np.ndarray:
        chosen = self.items if indices is None else [self.items[i] for i in indices]
        return np.stack([item.image for item in chosen])

    def labels(self, indices=None) -> np.ndarray:
        chosen = self.items if indices is None else [self.items[i] for i in indices]
        if not all(item.has_label for item in chosen):
            raise ContractViolation(f"split {self.name} has unlabeled items")
        return np.stack([item.label for item in chosen])

    def label_maps(self) -> np.ndarray:
        return np.stack([item.label_map for item in self.items])


@dataclass
class SynthDataset:
    source: Split
    target_train: Split
    target_test: Split

    def splits(self) -> list[Split]:
        return [self.source, self.target_train, self.target_test]


def one_hot(label_map: np.ndarray, num_classes: int) -> np.ndarray:
    return (np.arange(num_classes)[:, None, None] == label_map[None]).astype(np.uint8)


def draw_label_map(spec: SynthSpec, rng: np.random.Generator) -> np.ndarray:
    """One H×W class map; later classes paint over earlier ones (lobe, ring, disk)."""
    geo = spec.geometry
    h, w = spec.height, spec.width
    side = min(h, w)
    cy = 0.5 * h + rng.uniform(-geo.center, geo.center) * side
    cx = 0.42 * w + rng.uniform(-geo.center, geo.center) * side
    r_out = rng.uniform(*geo.outer_radius) * side
    r_in = r_out - rng.uniform(*geo.ring_width) * side
    a = rng.uniform(*geo.lobe_radial) * side
    b = rng.uniform(*geo.lobe_tangential) * side
    theta = rng.uniform(-geo.lobe_angle, geo.lobe_angle)
    ly = cy + (r_out + 0.3 * a) * np.sin(theta)
    lx = cx + (r_out + 0.3 * a) * np.cos(theta)

    yy, xx = np.mgrid[0:h, 0:w] + 0.5
    radius = np.hypot(yy - cy, xx - cx)
    du = (xx - lx) * np.cos(theta) + (yy - ly) * np.sin(theta)
    dv = -(xx - lx) * np.sin(theta) + (yy - ly) * np.cos(theta)

    label = np.zeros((h, w), dtype=np.int64)
    label[(du / a) ** 2 + (dv / b) ** 2 <= 1.0] = 3
    label[radius <= r_out] = 1
    label[radius < r_in] = 2
    return label


def _class_fractions(label_map: np.ndarray, num_classes: int) -> np.ndarray:
    return np.bincount(label_map.reshape(-1), minlength=num_classes) / label_map.size


def _draw_valid(spec: SynthSpec, rng: np.random.Generator, item_id: str) -> np.ndarray:
    for attempt in range(spec.max_retries):
        label_map = draw_label_map(spec, rng)
        fractions = _class_fractions(label_map, spec.num_classes)
        if fractions.min() >= spec.min_fraction:
            return label_map
        logger.warning(
            f"{item_id}: degenerate geometry on attempt {attempt + 1} "
            f"(smallest class fraction {fractions.min():.4f}), resampling"
        )
    raise GenerationError(f"{item_id}: no valid geometry after {spec.max_retries} attempts")


def generate_split(spec: SynthSpec, split: str) -> Split:
    code = _SPLIT_CODES[split]
    domain = "source" if split == "source" else "target"
    intensity = spec.source if domain == "source" else spec.target
    keep_labels = split != "target_train"
    items = []
    for i in range(spec.count(split)):
        item_id = f"{split}-{i:04d}"
        label_map = _draw_valid(spec, np.random.default_rng([spec.seed, code, i, 0]), item_id)
        image = intensity.render(label_map, np.random.default_rng([spec.seed, code, i, 1]))
        label = one_hot(label_map, spec.num_classes) if keep_labels else None
        items.append(LabeledImage(item_id, image[None], label, domain))
    return Split(split, domain, items)


def generate(spec: SynthSpec) -> SynthDataset:
    """Source, target-train (unlabeled) and target-test splits, deterministic in ``spec.seed``."""
    spec.validate()
    dataset = SynthDataset(*(generate_split(spec, name) for name in SPLITS))
    logger.info(
        f"Generated {len(dataset.source)} source, {len(dataset.target_train)} target-train, "
        f"{len(dataset.target_test)} target-test images (seed={spec.seed})"
    )
    return dataset
