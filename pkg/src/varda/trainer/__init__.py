from .adam import AdamState, adam_step, clip_grad_norm, global_grad_norm, lr_at
from .config import TrainConfig
from .evaluate import (
    LabelOracle,
    NetworkPredictor,
    Predictor,
    evaluate,
    evaluate_predictions,
)
from .loop import (
    CURVE_FILE,
    FINAL_CHECKPOINT,
    TRAIN_PREFIX,
    TrainResult,
    train,
    train_manifest,
)
from .sampling import (
    NOISE_STREAM,
    SOURCE_STREAM,
    TARGET_STREAM,
    Batch,
    BatchStream,
    EpochSampler,
    draw_noise,
)

__all__ = [
    "AdamState",
    "Batch",
    "BatchStream",
    "CURVE_FILE",
    "EpochSampler",
    "FINAL_CHECKPOINT",
    "LabelOracle",
    "NOISE_STREAM",
    "NetworkPredictor",
    "Predictor",
    "SOURCE_STREAM",
    "TARGET_STREAM",
    "TRAIN_PREFIX",
    "TrainConfig",
    "TrainResult",
    "adam_step",
    "clip_grad_norm",
    "draw_noise",
    "evaluate",
    "evaluate_predictions",
    "global_grad_norm",
    "lr_at",
    "train",
    "train_manifest",
]
