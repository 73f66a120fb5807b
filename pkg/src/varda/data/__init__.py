from .metrics import DiceScore, assd, boundary, dice
from .oracles import brute_assd, brute_boundary, brute_dice
from .store import dataset_hash, load_dataset, save_dataset
from .synth import (
    CLASS_NAMES,
    SPLITS,
    GeometryJitter,
    IntensityModel,
    LabeledImage,
    Split,
    SynthDataset,
    SynthSpec,
    draw_label_map,
    generate,
    one_hot,
)

__all__ = [
    "CLASS_NAMES",
    "DiceScore",
    "GeometryJitter",
    "IntensityModel",
    "LabeledImage",
    "SPLITS",
    "Split",
    "SynthDataset",
    "SynthSpec",
    "assd",
    "boundary",
    "brute_assd",
    "brute_boundary",
    "brute_dice",
    "dataset_hash",
    "dice",
    "draw_label_map",
    "generate",
    "load_dataset",
    "one_hot",
    "save_dataset",
]
