"""Model/training configuration and the flat key=value config-file format."""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields

from .code_correlation import IclMode
from .errors import ConfigError


@dataclass
class ModelConfig:
    """Hyperparameters and ablation switches.

    Desk-scale defaults; the reference large-corpus settings are T=100,
    (D, s)=(50, 10), lr=1e-4 with the same dropout, epoch cap and patience.
    """

    T: int = 32            # word embedding width
    F: int = 16            # LSTM hidden width per direction (code width is 2F)
    N: int = 100           # words kept per text
    D: int = 10            # history length
    s: int = 4             # sliding-window width
    I: int = 2             # graph-convolution layers per channel
    level: int = 3         # taxonomy level to classify at
    batch_size: int = 32
    lr: float = 1e-3
    dropout: float = 0.5
    max_epochs: int = 300
    patience: int = 10
    seed: int = 0
    icl_mode: str = "adaptive_hv"
    history: bool = True
    use_pe: bool = True
    use_text: bool = True
    use_label: bool = True
    loss_reduction: str = "sum"

    def validate(self):
        for name in ("T", "F", "N", "D", "s", "I", "level", "batch_size", "max_epochs"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if self.lr <= 0:
            raise ConfigError(f"lr must be positive, got {self.lr}")
        if not 0.0 <= self.dropout < 1.0:
            raise ConfigError(f"dropout must be in [0, 1), got {self.dropout}")
        if self.patience < 0:
            raise ConfigError(f"patience must be >= 0, got {self.patience}")
        try:
            IclMode(self.icl_mode)
        except ValueError:
            raise ConfigError(
                f"icl_mode must be one of {[m.value for m in IclMode]}, got {self.icl_mode!r}"
            ) from None
        if self.loss_reduction not in ("sum", "mean"):
            raise ConfigError(f"loss_reduction must be 'sum' or 'mean', got {self.loss_reduction!r}")
        if self.history and not (self.use_text or self.use_label):
            raise ConfigError("history needs at least one of use_text/use_label")
        return self

    @property
    def icl(self) -> IclMode:
        return IclMode(self.icl_mode)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ModelConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d).validate()


_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


def _parse_value(name: str, raw: str, kind: type):
    raw = raw.strip()
    if kind is bool:
        low = raw.lower()
        if low in _TRUE:
            return True
        if low in _FALSE:
            return False
        raise ConfigError(f"{name}: expected a boolean, got {raw!r}")
    try:
        return kind(raw)
    except ValueError:
        raise ConfigError(f"{name}: expected {kind.__name__}, got {raw!r}") from None


def parse_config_file(path) -> dict:
    """Read `key=value` lines (``#`` comments allowed) into a config dict."""
    types = {f.name: f.type for f in fields(ModelConfig)}
    # dataclass field types arrive as strings under `from __future__ annotations`
    kinds = {"int": int, "float": float, "bool": bool, "str": str}
    overrides: dict = {}
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            stripped = line.split("#", 1)[0].strip()
            if not stripped:
                continue
            if "=" not in stripped:
                raise ConfigError(f"{path}: line {lineno}: expected key=value")
            key, raw = stripped.split("=", 1)
            key = key.strip()
            if key not in types:
                raise ConfigError(f"{path}: line {lineno}: unknown key {key!r}")
            overrides[key] = _parse_value(key, raw, kinds[str(types[key])])
    return overrides


def config_from_file(path, **extra_overrides) -> ModelConfig:
    overrides = parse_config_file(path)
    overrides.update({k: v for k, v in extra_overrides.items() if v is not None})
    return ModelConfig.from_dict({**ModelConfig().to_dict(), **overrides})
