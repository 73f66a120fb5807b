"""2-D cross-correlation and nearest/average resampling on B×C×H×W tensors."""

from __future__ import annotations

import numpy as np

from ..errors import ContractViolation
from .core import Tensor, result


def _conv_geometry(x_shape, w_shape, stride: int, pad: int) -> tuple[int, int]:
    if not isinstance(stride, int) or stride < 1:
        raise ContractViolation(f"conv2d: stride must be a positive int, got {stride!r}")
    if not isinstance(pad, int) or pad < 0:
        raise ContractViolation(f"conv2d: pad must be a nonnegative int, got {pad!r}")
    if len(x_shape) != 4 or len(w_shape) != 4:
        raise ContractViolation(f"conv2d: expected 4-D input and kernel, got {x_shape}, {w_shape}")
    _, c, h, w = x_shape
    _, wc, kh, kw = w_shape
    if c != wc:
        raise ContractViolation(f"conv2d: input has {c} channels, kernel expects {wc}")
    if h + 2 * pad < kh or w + 2 * pad < kw:
        raise ContractViolation(f"conv2d: {kh}x{kw} kernel does not fit padded {h}x{w} input")
    return (h + 2 * pad - kh) // stride + 1, (w + 2 * pad - kw) // stride + 1


def conv2d(
    x: Tensor, weight: Tensor, bias: Tensor | None = None, stride: int = 1, pad: int = 0
) -> Tensor:
    """Cross-correlate ``x`` (B×C×H×W) with ``weight`` (F×C×kh×kw), zero padding ``pad``."""
    ho, wo = _conv_geometry(x.shape, weight.shape, stride, pad)
    b, c, _, _ = x.shape
    f, _, kh, kw = weight.shape
    xp = np.pad(x.data, ((0, 0), (0, 0), (pad, pad), (pad, pad)))

    def window(k: int) -> tuple[slice, ...]:
        di, dj = divmod(k, kw)
        rows = slice(di, di + stride * (ho - 1) + 1, stride)
        return (slice(None), slice(None), rows, slice(dj, dj + stride * (wo - 1) + 1, stride))

    # im2col: one (B, C, Ho, Wo) strided slab per kernel offset
    slabs = [xp[window(k)] for k in range(kh * kw)]
    cols = np.stack(slabs, axis=2).reshape(b, c * kh * kw, ho * wo)
    wmat = weight.data.reshape(f, c * kh * kw)
    out = np.matmul(wmat, cols).reshape(b, f, ho, wo)
    if bias is not None:
        if bias.shape != (f,):
            raise ContractViolation(f"conv2d: bias shape {bias.shape} != ({f},)")
        out = out + bias.data.reshape(1, f, 1, 1)

    def backward(g: np.ndarray):
        gmat = g.reshape(b, f, ho * wo)
        gw = np.matmul(gmat, cols.transpose(0, 2, 1)).sum(axis=0).reshape(weight.shape)
        gx = None
        if x.requires_grad:
            dcols = np.matmul(wmat.T, gmat).reshape(b, c, kh * kw, ho, wo)
            gxp = np.zeros_like(xp)
            for k in range(kh * kw):
                gxp[window(k)] += dcols[:, :, k]
            gx = gxp[:, :, pad : pad + x.shape[2], pad : pad + x.shape[3]]
        grads = [gx, gw]
        if bias is not None:
            grads.append(g.sum(axis=(0, 2, 3)))
        return tuple(grads)

    inputs = (x, weight) if bias is None else (x, weight, bias)
    return result(out, inputs, backward)


def upsample_nearest(x: Tensor, factor: int) -> Tensor:
    """Repeat every pixel ``factor`` times along H and W."""
    if x.ndim != 4 or factor < 1:
        raise ContractViolation(f"upsample_nearest: bad input {x.shape} or factor {factor}")
    b, c, h, w = x.shape
    out = x.data.repeat(factor, axis=2).repeat(factor, axis=3)

    def backward(g: np.ndarray):
        return (g.reshape(b, c, h, factor, w, factor).sum(axis=(3, 5)),)

    return result(out, (x,), backward)


def avg_pool(x: Tensor, factor: int) -> Tensor:
    """Average non-overlapping ``factor``×``factor`` blocks."""
    if x.ndim != 4 or factor < 1 or x.shape[2] % factor or x.shape[3] % factor:
        raise ContractViolation(f"avg_pool: {x.shape} is not divisible by factor {factor}")
    b, c, h, w = x.shape
    out = x.data.reshape(b, c, h // factor, factor, w // factor, factor).mean(axis=(3, 5))
    scale = 1.0 / (factor * factor)

    def backward(g: np.ndarray):
        return (g.repeat(factor, axis=2).repeat(factor, axis=3) * scale,)

    return result(out, (x,), backward)
