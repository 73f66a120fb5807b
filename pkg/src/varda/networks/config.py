from __future__ import annotations

from dataclasses import dataclass

from ..errors import ContractViolation

CONDITIONING = ("with_label", "without_label")


@dataclass
class NetConfig:
    """Shapes of the two domain VAEs and the shared segmentor.

    The encoder halves the image ``encoder_blocks`` times, so the latent grid
    is (height >> blocks) × (width >> blocks) with ``latent_channels`` maps and
    the latent dimension n is grid area × channels.
    """

    height: int = 32
    width: int = 32
    channels: int = 1
    num_classes: int = 4
    hidden: int = 16
    encoder_blocks: int = 2
    latent_channels: int = 2
    decoder_depth: int = 3
    conditioning: str = "with_label"
    logvar_bound: float = 10.0
    logvar_init: float = -4.0
    seed: int = 0

    @property
    def factor(self) -> int:
        return 2**self.encoder_blocks

    @property
    def grid(self) -> tuple[int, int]:
        return self.height // self.factor, self.width // self.factor

    @property
    def latent_dim(self) -> int:
        gh, gw = self.grid
        return gh * gw * self.latent_channels

    @property
    def reconstructs(self) -> bool:
        return self.decoder_depth > 0

    def validate(self) -> None:
        for name in ("height", "width", "channels", "hidden", "latent_channels"):
            if getattr(self, name) < 1:
                raise ContractViolation(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.num_classes < 2:
            raise ContractViolation(f"num_classes must be >= 2, got {self.num_classes}")
        if self.encoder_blocks < 0:
            raise ContractViolation(f"encoder_blocks must be >= 0, got {self.encoder_blocks}")
        if self.height % self.factor or self.width % self.factor:
            raise ContractViolation(
                f"image {self.height}x{self.width} is not divisible by 2^{self.encoder_blocks}"
            )
        if self.decoder_depth < 0:
            raise ContractViolation(f"decoder_depth must be >= 0, got {self.decoder_depth}")
        if self.conditioning not in CONDITIONING:
            raise ContractViolation(
                f"conditioning must be one of {CONDITIONING}, got {self.conditioning!r}"
            )
        if self.logvar_bound <= 0:
            raise ContractViolation(f"logvar_bound must be positive, got {self.logvar_bound}")
        if abs(self.logvar_init) >= self.logvar_bound:
            raise ContractViolation(
                f"logvar_init {self.logvar_init} must lie inside ±{self.logvar_bound}"
            )
