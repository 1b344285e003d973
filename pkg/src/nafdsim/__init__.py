"""System-level simulator for NAFD / full-duplex / half-duplex cell-free massive MIMO."""

from nafdsim.errors import (
    ConfigError,
    ContractError,
    InvalidInputError,
    ModelConstructionError,
    PlacementError,
    PrecoderError,
    ScaleError,
)

__all__ = [
    "ConfigError",
    "ContractError",
    "InvalidInputError",
    "ModelConstructionError",
    "PlacementError",
    "PrecoderError",
    "ScaleError",
]

__version__ = "0.1.0"
