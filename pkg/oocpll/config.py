"""
Configuration for ooc-pll.

Process-level settings (threads, artifact file names) load from the environment with optional .env overrides.
Experiment settings live in `TrainConfig`, read from flat `key=value` files with `#` comments.
"""

from functools import lru_cache
from pathlib import Path
from typing import Literal

from dotenv import dotenv_values
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from oocpll.exceptions import ConfigError


class AppConfig(BaseSettings):
    """Application metadata and runtime limits."""

    name: str = "ooc-pll"
    version: str = "0.1.0"
    description: str = "Partial-label learning with closed-set and open-set out-of-candidate examples."
    # OOC_PLL_THREADS; 1 keeps BLAS reductions in a fixed order.
    threads: int = Field(default=1, ge=1)

    model_config = SettingsConfigDict(env_file=(".env",), env_prefix="OOC_PLL_", extra="ignore")


class StorageConfig(BaseSettings):
    """File names of every artifact written by the scripts."""

    train_csv: str = "train.csv"
    corruption_csv: str = "train_corruption.csv"
    validation_csv: str = "validation.csv"
    test_csv: str = "test.csv"
    metrics_csv: str = "metrics.csv"
    manifest_json: str = "manifest.json"
    checkpoint_npz: str = "checkpoint.npz"
    confidences_csv: str = "confidences.csv"
    loss_histograms_csv: str = "loss_histograms.csv"
    selection_dir: str = "selection"
    sweep_summary_csv: str = "summary.csv"
    proportions_json: str = "proportions.json"

    model_config = SettingsConfigDict(env_file=(".env",), env_prefix="OOC_PLL_STORAGE__", extra="ignore")


class Config(BaseSettings):
    """Main configuration container."""

    app: AppConfig = Field(default_factory=AppConfig)
    storage: StorageConfig = Field(default_factory=StorageConfig)

    @classmethod
    @lru_cache(maxsize=1)
    def load(cls) -> "Config":
        """Load configuration from environment (with .env support)."""
        return cls()

    def dump(self) -> dict:
        return {
            "app": self.app.model_dump(),
            "storage": self.storage.model_dump(),
        }

    model_config = SettingsConfigDict(env_file=(".env",), env_prefix="OOC_PLL__", extra="ignore")


class TrainConfig(BaseModel):
    """All knobs of one experiment: data generation, selection, losses, optimization and ablations.

    Defaults follow the desk-scale protocol: 10 Gaussian blobs in 2D, 500 examples per class,
    q=0.3, tau1=0.2, tau2=0.4, a 2-64-64-10 network and 100 epochs with a 30-epoch warm-up.
    """

    # data generation
    n_classes: int = Field(default=10, ge=2)
    dim: int = Field(default=2, ge=2)
    n_per_class: int = Field(default=500, ge=1)
    separation: float = Field(default=6.0, gt=0)
    open_classes: int = Field(default=5, ge=0)
    n_val_per_class: int = Field(default=100, ge=0)
    n_test_per_class: int = Field(default=200, ge=1)
    q: float = Field(default=0.3, ge=0, le=1)
    tau1: float = Field(default=0.2, ge=0, le=1)
    tau2: float = Field(default=0.4, ge=0)

    # selection
    gamma1: float | None = Field(default=None, ge=0, le=1)
    gamma2: float | None = Field(default=None, ge=0, le=1)
    eta: float = Field(default=0.9, ge=0, le=1)
    phi: int = Field(default=5, ge=1)
    selection_order: Literal["open_first", "closed_first"] = "open_first"

    # losses and disambiguation
    alpha: float = Field(default=1.0, ge=0)
    beta: float = Field(default=0.1, ge=0)
    rho: float = Field(default=0.5, ge=0, le=1)
    loss_norm: Literal["partition", "batch"] = "batch"
    ld_norm: Literal["masked", "literal"] = "masked"
    rcg_cadence: Literal["epoch", "batch"] = "epoch"

    # optimization
    hidden_sizes: tuple[int, ...] = (64, 64)
    T_warmup: int = Field(default=30, ge=0)
    T_max: int = Field(default=100, ge=1)
    batch_size: int = Field(default=128, ge=1)
    base_lr: float = Field(default=0.01, gt=0)
    momentum: float = Field(default=0.9, ge=0, lt=1)
    weight_decay: float = Field(default=0.001, ge=0)
    seed: int = Field(default=0, ge=0)

    # ablations
    disable_ld: bool = False
    disable_rld: bool = False
    disable_rcg: bool = False
    disable_wce: bool = False
    disable_warmup: bool = False
    drop_closed: bool = False
    drop_open: bool = False

    # proportion estimation
    epsilon: float = Field(default=2.0, ge=0)
    ramp_epochs: int = Field(default=50, ge=1)
    ramp_step_epochs: int = Field(default=3, ge=1)
    normal_start: float = Field(default=0.5, ge=0, le=1)

    # artifacts
    dump_selection: bool = False
    histogram_bins: int = Field(default=30, ge=1)

    model_config = ConfigDict(extra="forbid", frozen=True)

    @field_validator("hidden_sizes", mode="before")
    @classmethod
    def _parse_hidden_sizes(cls, value):
        if isinstance(value, str):
            value = value.strip()
            if not value:
                return ()
            return tuple(int(part) for part in value.split(","))
        return value

    @field_validator("hidden_sizes")
    @classmethod
    def _check_hidden_sizes(cls, value: tuple[int, ...]) -> tuple[int, ...]:
        if any(size < 1 for size in value):
            raise ValueError("hidden layer sizes must be positive")
        return value

    @model_validator(mode="after")
    def _check_consistency(self) -> "TrainConfig":
        if self.gamma1 is None:
            object.__setattr__(self, "gamma1", self._true_proportion("gamma1"))
        if self.gamma2 is None:
            object.__setattr__(self, "gamma2", self._true_proportion("gamma2"))
        if self.disable_warmup:
            object.__setattr__(self, "T_warmup", 0)
        if self.T_warmup > self.T_max:
            raise ValueError(f"T_warmup ({self.T_warmup}) must not exceed T_max ({self.T_max})")
        if self.T_warmup > 0 and self.phi > self.T_warmup:
            raise ValueError(f"phi ({self.phi}) must not exceed T_warmup ({self.T_warmup})")
        if self.gamma1 + self.gamma2 >= 1:
            raise ValueError(f"gamma1 + gamma2 must be < 1, got {self.gamma1} + {self.gamma2}")
        return self

    @property
    def layer_sizes(self) -> tuple[int, ...]:
        return (self.dim, *self.hidden_sizes, self.n_classes)

    @property
    def ablation_switches(self) -> list[str]:
        """Names of the ablation switches that are turned on."""
        names = ["disable_ld", "disable_rld", "disable_rcg", "disable_wce", "disable_warmup", "drop_closed", "drop_open"]
        return [name for name in names if getattr(self, name)]

    def with_updates(self, **updates) -> "TrainConfig":
        """Return a re-validated copy with some keys replaced."""
        values = self.model_dump()
        for key in ("gamma1", "gamma2"):
            # gamma stays tied to tau unless it was set to something else
            if key not in updates and values[key] == self._true_proportion(key):
                values[key] = None
        values.update(updates)
        return validate_train_config(values)

    def _true_proportion(self, gamma_key: str) -> float:
        """Share of closed-set (gamma1) or open-set (gamma2) examples in the corrupted training set."""
        tau = self.tau1 if gamma_key == "gamma1" else self.tau2
        return tau / (1.0 + self.tau2)


def validate_train_config(values: dict, source: str = "config") -> TrainConfig:
    """Validate a mapping into a TrainConfig, converting pydantic errors into a ConfigError naming the key."""
    try:
        return TrainConfig.model_validate(values)
    except ValidationError as exc:
        problems = []
        for error in exc.errors():
            key = ".".join(str(part) for part in error["loc"]) or "config"
            problems.append(f"{key}: {error['msg']}")
        raise ConfigError(f"{source}: " + "; ".join(problems)) from exc


def load_train_config(path: Path, **overrides) -> TrainConfig:
    """Read a flat `key=value` config file with `#` comments into a validated TrainConfig."""
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"Config file not found: {path}")
    values = {key: value for key, value in dotenv_values(path).items() if value is not None}
    values.update({key: value for key, value in overrides.items() if value is not None})
    return validate_train_config(values, source=str(path))


# Global config instance
config = Config.load()

if __name__ == "__main__":
    from pprint import pprint

    pprint(config.dump())
