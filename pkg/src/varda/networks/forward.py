"""Forward passes of the encoders, the shared segmentor and the decoders."""

from __future__ import annotations

from typing import Any

import numpy as np

from ..errors import ContractViolation
from ..gaussian import DiagGaussianBatch
from ..tensor import Tensor, avg_pool, conv2d, no_grad, ops, upsample_nearest
from .params import DOMAINS, ParameterSet, decoder_prefix, encoder_prefix


def _check_domain(domain: str) -> None:
    if domain not in DOMAINS:
        raise ContractViolation(f"domain must be one of {DOMAINS}, got {domain!r}")


def _check_images(params: ParameterSet, x: Tensor) -> None:
    cfg = params.config
    expected = (cfg.channels, cfg.height, cfg.width)
    if x.ndim != 4 or x.shape[1:] != expected:
        raise ContractViolation(f"images must be B×{'×'.join(map(str, expected))}, got {x.shape}")


def _conv(params: ParameterSet, name: str, h: Tensor, stride: int = 1, pad: int = 0) -> Tensor:
    return conv2d(h, params[f"{name}.weight"], params[f"{name}.bias"], stride=stride, pad=pad)


def encoder_forward(params: ParameterSet, x: Tensor, domain: str = "S") -> DiagGaussianBatch:
    """q(z|x) for a batch of images: stride-2 conv blocks, then 1×1 mean and log-variance heads."""
    _check_domain(domain)
    _check_images(params, x)
    cfg = params.config
    prefix = encoder_prefix(domain)
    h = x
    for i in range(cfg.encoder_blocks):
        h = ops.relu(_conv(params, f"{prefix}.conv{i}", h, stride=2, pad=1))
    mean = _conv(params, f"{prefix}.mean", h)
    log_var = ops.clamp(_conv(params, f"{prefix}.logvar", h), -cfg.logvar_bound, cfg.logvar_bound)
    b, n = x.shape[0], cfg.latent_dim
    return DiagGaussianBatch(ops.reshape(mean, (b, n)), ops.reshape(log_var, (b, n)))


def reparameterize(g: DiagGaussianBatch, eps: Tensor | np.ndarray) -> Tensor:
    """z = u + sqrt(λ) ⊙ ε for ε of shape B×L×n; ε itself carries no gradient."""
    noise = eps.detach() if isinstance(eps, Tensor) else Tensor(eps, dtype=g.means.dtype)
    b, n = g.size, g.dim
    if noise.ndim != 3 or noise.shape[0] != b or noise.shape[2] != n:
        raise ContractViolation(f"noise must be {b}×L×{n}, got {noise.shape}")
    grid = noise.shape
    u = ops.broadcast_to(ops.reshape(g.means, (b, 1, n)), grid)
    std = ops.broadcast_to(ops.reshape(ops.sqrt(g.variances), (b, 1, n)), grid)
    return u + std * noise


def _latent_grid(params: ParameterSet, z: Tensor) -> Tensor:
    cfg = params.config
    if z.ndim != 2 or z.shape[1] != cfg.latent_dim:
        raise ContractViolation(f"latent codes must be B×{cfg.latent_dim}, got {z.shape}")
    gh, gw = cfg.grid
    return ops.reshape(z, (z.shape[0], cfg.latent_channels, gh, gw))


def segmentor_logits(params: ParameterSet, z: Tensor) -> Tensor:
    """Pre-softmax class scores, B×K×H×W."""
    h = _latent_grid(params, z)
    h = ops.relu(_conv(params, "segmentor.conv0", h, pad=1))
    h = ops.relu(_conv(params, "segmentor.conv1", h, pad=1))
    h = upsample_nearest(h, params.config.factor)
    return _conv(params, "segmentor.head", h)


def segmentor_forward(params: ParameterSet, z: Tensor) -> Tensor:
    """Per-pixel class probabilities from latent codes alone."""
    return ops.softmax(segmentor_logits(params, z), axis=1)


def decoder_forward(
    params: ParameterSet, z: Tensor, label: Tensor | None, domain: str = "S"
) -> Tensor:
    """Reconstruct images from latent codes, conditioned on a (soft) label map.

    The label is averaged down to the latent grid and stacked onto the codes;
    the first layer runs at grid resolution, the rest at image resolution, and
    the last layer is linear.
    """
    _check_domain(domain)
    cfg = params.config
    if not cfg.reconstructs:
        raise ContractViolation("decoder depth is 0: reconstruction is disabled")
    h = _latent_grid(params, z)
    if cfg.conditioning == "with_label":
        expected = (z.shape[0], cfg.num_classes, cfg.height, cfg.width)
        if label is None or label.shape != expected:
            raise ContractViolation(
                f"label must be {expected}, got {None if label is None else label.shape}"
            )
        h = ops.concat([h, avg_pool(label, cfg.factor)], axis=1)
    prefix = decoder_prefix(domain)
    last = cfg.decoder_depth - 1
    for i in range(cfg.decoder_depth):
        h = _conv(params, f"{prefix}.conv{i}", h, pad=1)
        if i < last:
            h = ops.relu(h)
        if i == 0:
            h = upsample_nearest(h, cfg.factor)
    return h


def predict(
    params: ParameterSet, x: Tensor | np.ndarray, domain: str = "T"
) -> tuple[np.ndarray, np.ndarray]:
    """Segment images through the posterior mean; no sampling.

    Returns (probabilities B×K×H×W, hard labels B×H×W); ties go to the
    lowest class index.
    """
    images = x if isinstance(x, Tensor) else Tensor(x, dtype=_param_dtype(params))
    with no_grad():
        g = encoder_forward(params, images, domain)
        probs = segmentor_forward(params, g.means).data
    return probs, np.argmax(probs, axis=1)


def _param_dtype(params: ParameterSet) -> Any:
    return params["segmentor.head.weight"].dtype
