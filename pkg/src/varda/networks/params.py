"""Named, role-tagged parameter collection for both domain VAEs."""

from __future__ import annotations

import logging
from collections.abc import Iterator
from dataclasses import dataclass

import numpy as np

from ..errors import ContractViolation
from ..tensor import Tensor, get_default_dtype
from .config import NetConfig

logger = logging.getLogger(__name__)

ROLES = ("encoder_S", "encoder_T", "decoder_S", "decoder_T", "segmentor_shared")
DOMAINS = ("S", "T")

BIAS_LOW = 0.05
BIAS_HIGH = 0.2


@dataclass
class ParamEntry:
    name: str
    role: str
    tensor: Tensor


class ParameterSet:
    """Ordered name → tensor map with a role tag per entry.

    Segmentor entries appear once under the ``segmentor_shared`` role; both
    domains' forward paths read the same tensors.
    """

    def __init__(self, config: NetConfig):
        self.config = config
        self._entries: dict[str, ParamEntry] = {}

    def add(self, name: str, role: str, tensor: Tensor) -> Tensor:
        if role not in ROLES:
            raise ContractViolation(f"unknown role {role!r} for {name}")
        if name in self._entries:
            raise ContractViolation(f"duplicate parameter name {name!r}")
        tensor.requires_grad = True
        self._entries[name] = ParamEntry(name, role, tensor)
        return tensor

    def __getitem__(self, name: str) -> Tensor:
        try:
            return self._entries[name].tensor
        except KeyError as err:
            raise ContractViolation(f"no parameter named {name!r}") from err

    def __contains__(self, name: str) -> bool:
        return name in self._entries

    def __len__(self) -> int:
        return len(self._entries)

    def __iter__(self) -> Iterator[str]:
        return iter(self._entries)

    def entries(self) -> list[ParamEntry]:
        return list(self._entries.values())

    def items(self) -> list[tuple[str, Tensor]]:
        return [(e.name, e.tensor) for e in self._entries.values()]

    def role_of(self, name: str) -> str:
        return self._entries[name].role

    def by_role(self, role: str) -> dict[str, Tensor]:
        return {e.name: e.tensor for e in self._entries.values() if e.role == role}

    def zero_grad(self) -> None:
        for e in self._entries.values():
            e.tensor.zero_grad()

    def clear_grad(self) -> None:
        for e in self._entries.values():
            e.tensor.grad = None

    def norms(self) -> dict[str, float]:
        return {e.name: float(np.linalg.norm(e.tensor.data)) for e in self._entries.values()}

    def copy(self) -> ParameterSet:
        out = ParameterSet(self.config)
        for e in self._entries.values():
            out.add(e.name, e.role, Tensor(e.tensor.data, dtype=e.tensor.dtype))
        return out

    def fill(self, value: float) -> None:
        """Set every entry to ``value`` in place."""
        for e in self._entries.values():
            e.tensor.data[...] = value


def encoder_prefix(domain: str) -> str:
    return f"encoder_{domain}"


def decoder_prefix(domain: str) -> str:
    return f"decoder_{domain}"


def _he_uniform(rng: np.random.Generator, shape: tuple[int, ...]) -> np.ndarray:
    fan_in = int(np.prod(shape[1:]))
    bound = np.sqrt(6.0 / fan_in)
    return rng.uniform(-bound, bound, size=shape)


def _conv(
    params: ParameterSet,
    rng: np.random.Generator,
    name: str,
    role: str,
    shape: tuple[int, int, int, int],
    bias: float | None = None,
) -> None:
    dtype = get_default_dtype()
    params.add(f"{name}.weight", role, Tensor(_he_uniform(rng, shape), dtype=dtype))
    if bias is None:
        values = rng.uniform(BIAS_LOW, BIAS_HIGH, size=shape[0])
    else:
        values = np.full(shape[0], bias)
    params.add(f"{name}.bias", role, Tensor(values, dtype=dtype))


def decoder_in_channels(config: NetConfig) -> int:
    extra = config.num_classes if config.conditioning == "with_label" else 0
    return config.latent_channels + extra


def init_params(config: NetConfig) -> ParameterSet:
    """He-uniform weights and small positive biases, drawn from ``config.seed`` in a fixed order.

    Biases are drawn from U(0.05, 0.2) except on the log-variance heads, which
    start at ``config.logvar_init``.
    """
    config.validate()
    rng = np.random.default_rng(config.seed)
    params = ParameterSet(config)
    hid = config.hidden

    for domain in DOMAINS:
        role = encoder_prefix(domain)
        in_ch = config.channels
        for i in range(config.encoder_blocks):
            _conv(params, rng, f"{role}.conv{i}", role, (hid, in_ch, 3, 3))
            in_ch = hid
        _conv(params, rng, f"{role}.mean", role, (config.latent_channels, in_ch, 1, 1))
        _conv(
            params,
            rng,
            f"{role}.logvar",
            role,
            (config.latent_channels, in_ch, 1, 1),
            bias=config.logvar_init,
        )

    seg = "segmentor_shared"
    _conv(params, rng, "segmentor.conv0", seg, (hid, config.latent_channels, 3, 3))
    _conv(params, rng, "segmentor.conv1", seg, (hid, hid, 3, 3))
    _conv(params, rng, "segmentor.head", seg, (config.num_classes, hid, 1, 1))

    for domain in DOMAINS:
        role = decoder_prefix(domain)
        in_ch = decoder_in_channels(config)
        for i in range(config.decoder_depth):
            out_ch = config.channels if i == config.decoder_depth - 1 else hid
            _conv(params, rng, f"{role}.conv{i}", role, (out_ch, in_ch, 3, 3))
            in_ch = out_ch

    total = sum(t.size for _, t in params.items())
    logger.debug(f"Initialised {len(params)} parameter tensors, {total} values, seed={config.seed}")
    return params
