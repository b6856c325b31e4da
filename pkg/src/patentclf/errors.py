"""Exception types shared across the package."""


class DimensionError(ValueError):
    """Tensor shapes are incompatible for the requested operation."""


class ContractError(ValueError):
    """A caller violated an operation's precondition."""


class ConfigError(ValueError):
    """Inconsistent or out-of-range configuration values."""


class TaxonomyError(ValueError):
    """Taxonomy structure is broken (missing parent, unknown code, bad level)."""


class CorpusError(ValueError):
    """A corpus file is malformed or references unknown codes."""


class CheckpointError(ValueError):
    """A checkpoint file is corrupt or does not match the model."""
