"""Exception types shared across the package."""


class InvalidInputError(ValueError):
    pass


class ContractError(ValueError):
    """An input violates a documented invariant; ``field`` names the offender."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class PlacementError(RuntimeError):
    pass


class ModelConstructionError(RuntimeError):
    pass


class PrecoderError(RuntimeError):
    pass


class ScaleError(ValueError):
    pass


class ConfigError(ValueError):
    pass
