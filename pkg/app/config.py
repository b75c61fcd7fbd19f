"""
Configuration Management
Environment settings plus the flat key=value run configuration shared by
every command
"""

import hashlib
from pathlib import Path
from typing import Dict, List, Literal, Optional, Tuple, Union

from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator
from pydantic_settings import BaseSettings, SettingsConfigDict

from app.errors import ConfigError
from app.ingestion.wls import WlsParams


class Settings(BaseSettings):
    """Process-wide settings read from FBP_* environment variables and .env"""

    model_config = SettingsConfigDict(env_prefix="FBP_", env_file=".env", extra="ignore")

    cache_dir: str = "./data/cache"
    precision: Literal["f32", "f64"] = "f64"
    threads: int = Field(1, ge=1)
    log_level: str = "INFO"


class TrainConfig(BaseModel):
    """Everything one training run needs"""

    model_config = ConfigDict(frozen=True)

    spec: str = "CNN-3"
    channel_set: str = "detail"
    epochs: int = Field(30, ge=1)
    batch_size: int = Field(32, ge=1)
    lr: float = Field(0.01, gt=0.0)
    lr_gamma: float = Field(0.1, gt=0.0)
    lr_step: int = Field(0, ge=0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(5e-4, ge=0.0)
    keep_rate: float = Field(0.5, gt=0.0, le=1.0)
    crops_per_image: int = Field(10, ge=1)
    fixed_crops: bool = False
    multi_crop: bool = False
    layer_lr_mult: Dict[str, float] = Field(default_factory=dict)
    seed: int = Field(0, ge=0)
    threads: int = Field(1, ge=1)
    wls: WlsParams = Field(default_factory=WlsParams)

    def fingerprint(self) -> str:
        return hashlib.sha256(self.model_dump_json().encode("utf-8")).hexdigest()[:16]


class RunConfig(BaseModel):
    """
    Fully resolved command configuration

    Flat on purpose: every field is one `key = value` line in a config file
    and one `--key` flag on the command line.
    """

    model_config = ConfigDict(extra="forbid")

    # Data and run directory
    index: Optional[str] = None
    out_dir: str = "runs/default"
    model: Optional[str] = None
    seed: int = Field(0, ge=0)
    threads: int = Field(1, ge=1)
    precision: Literal["f32", "f64"] = "f64"

    # Network and training
    spec: str = "CNN-3"
    channel_set: str = "detail"
    epochs: int = Field(30, ge=1)
    batch_size: int = Field(32, ge=1)
    lr: float = Field(0.01, gt=0.0)
    lr_gamma: float = Field(0.1, gt=0.0)
    lr_step: int = Field(0, ge=0)
    momentum: float = Field(0.9, ge=0.0, lt=1.0)
    weight_decay: float = Field(5e-4, ge=0.0)
    keep_rate: float = Field(0.5, gt=0.0, le=1.0)
    crops_per_image: int = Field(10, ge=1)
    fixed_crops: bool = False
    multi_crop: bool = False
    layer_lr_mult: str = ""

    # Protocol
    n_train: int = Field(400, ge=1)
    k_folds: int = Field(5, ge=2)
    stages: str = "detail,base,rgb"
    finetune_lr_factor: float = Field(0.1, gt=0.0)
    adapt_mode: Literal["reinit", "replicate"] = "reinit"

    # Decomposition
    wls_lambda: float = Field(0.125, ge=0.0)
    wls_alpha: float = Field(1.2, gt=0.0)
    wls_eps: float = Field(1e-4, gt=0.0)
    cg_tol: float = Field(1e-6, gt=0.0, lt=1.0)
    cg_max_iters: int = Field(0, ge=0)

    # Visualization
    viz_layer: int = Field(0, ge=0)
    viz_post_pool: bool = False

    # Synthetic corpus
    synth_n: int = Field(32, ge=2)
    synth_size: int = Field(56, ge=8)

    @field_validator("layer_lr_mult")
    @classmethod
    def _check_lr_mult(cls, value: str) -> str:
        parse_lr_mult(value)
        return value

    @field_validator("stages")
    @classmethod
    def _check_stages(cls, value: str) -> str:
        if not [s for s in value.split(",") if s.strip()]:
            raise ValueError("at least one stage is required")
        return value

    def stage_list(self) -> List[str]:
        return [s.strip() for s in self.stages.split(",") if s.strip()]

    def wls_params(self) -> WlsParams:
        return WlsParams(
            lam=self.wls_lambda, alpha=self.wls_alpha, eps=self.wls_eps,
            cg_tol=self.cg_tol, cg_max_iters=self.cg_max_iters,
        )

    def train_config(self, channel_set: Optional[str] = None) -> TrainConfig:
        return TrainConfig(
            spec=self.spec,
            channel_set=channel_set or self.channel_set,
            epochs=self.epochs,
            batch_size=self.batch_size,
            lr=self.lr,
            lr_gamma=self.lr_gamma,
            lr_step=self.lr_step,
            momentum=self.momentum,
            weight_decay=self.weight_decay,
            keep_rate=self.keep_rate,
            crops_per_image=self.crops_per_image,
            fixed_crops=self.fixed_crops,
            multi_crop=self.multi_crop,
            layer_lr_mult=parse_lr_mult(self.layer_lr_mult),
            seed=self.seed,
            threads=self.threads,
            wls=self.wls_params(),
        )

    def validate_paths(self) -> Tuple[bool, str]:
        """
        Check that referenced input files exist

        Returns:
            Tuple of (is_valid, error_message)
        """
        if self.index and not Path(self.index).exists():
            return False, f"index file not found: {self.index}"
        if self.model and not Path(self.model).exists():
            return False, f"model file not found: {self.model}"
        return True, ""

    def to_text(self) -> str:
        """Resolved config as sorted `key = value` lines"""
        values = self.model_dump()
        lines = []
        for key in sorted(values):
            value = values[key]
            if value is None:
                value = ""
            elif isinstance(value, bool):
                value = "true" if value else "false"
            lines.append(f"{key} = {value}")
        return "\n".join(lines) + "\n"

    def checksum(self) -> str:
        return hashlib.sha256(self.to_text().encode("utf-8")).hexdigest()


def parse_lr_mult(text: str) -> Dict[str, float]:
    """Parse "conv1:0.1,fc2:1" into {"conv1": 0.1, "fc2": 1.0}"""
    multipliers = {}
    for item in filter(None, (part.strip() for part in text.split(","))):
        layer, sep, value = item.partition(":")
        if not sep:
            raise ValueError(f"expected layer:multiplier, got {item!r}")
        multipliers[layer.strip()] = float(value)
    return multipliers


def parse_config_text(text: str) -> Tuple[Dict[str, str], List[str]]:
    """
    Parse flat config text

    Args:
        text: `key = value` lines, `#` comments, blank lines ignored

    Returns:
        Tuple of (raw values, problems); problems name the offending line
    """
    values: Dict[str, str] = {}
    problems: List[str] = []
    known = RunConfig.model_fields
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().replace("-", "_")
        if not sep or not key:
            problems.append(f"line {lineno}: expected key = value, got {raw.strip()!r}")
            continue
        if key not in known:
            problems.append(f"line {lineno}: unknown key {key!r}")
            continue
        values[key] = value.strip()
    return values, problems


def resolve_run_config(
    config_path: Optional[Union[str, Path]] = None,
    overrides: Optional[Dict[str, Optional[str]]] = None,
) -> RunConfig:
    """
    Merge defaults, settings, a config file and command-line overrides

    Args:
        config_path: Optional flat config file
        overrides: key -> value from the command line (None values are skipped)

    Returns:
        Validated RunConfig

    Raises:
        ConfigError listing every bad key
    """
    values: Dict[str, str] = {
        "threads": str(settings.threads),
        "precision": settings.precision,
    }
    problems: List[str] = []
    if config_path is not None:
        path = Path(config_path)
        try:
            text = path.read_text(encoding="utf-8")
        except OSError as exc:
            raise ConfigError([f"cannot read config {path}: {exc}"]) from exc
        file_values, file_problems = parse_config_text(text)
        values.update(file_values)
        problems.extend(f"{path}: {p}" for p in file_problems)
    for key, value in (overrides or {}).items():
        if value is None:
            continue
        key = key.replace("-", "_")
        if key not in RunConfig.model_fields:
            problems.append(f"override: unknown key {key!r}")
            continue
        values[key] = str(value)

    # Empty values mean "unset" for optional fields
    values = {k: v for k, v in values.items() if v != ""}
    try:
        config = RunConfig.model_validate(values)
    except ValidationError as exc:
        for error in exc.errors():
            key = ".".join(str(part) for part in error["loc"]) or "config"
            problems.append(f"{key}: {error['msg']}")
        raise ConfigError(problems) from None
    if problems:
        raise ConfigError(problems)
    return config


# Global settings instance
settings = Settings()
