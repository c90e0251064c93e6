import logging
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from functools import lru_cache
from pathlib import Path
from typing import Literal

import tomli_w
from pydantic import BaseModel, ConfigDict, Field, ValidationError
from pydantic_settings import BaseSettings, SettingsConfigDict

from .exceptions import ContractError
from .models.dialogue import Source
from .models.logic import RuleThresholds
from .models.training import AblationMode, LossWeights, TrainConfig

logger = logging.getLogger(__name__)


class Settings(BaseSettings):
    """Credentials and the debug switch; the only values environment variables may set."""

    model_config = SettingsConfigDict(env_prefix="DME_", env_file=".env", case_sensitive=False, extra="ignore")

    # API Credentials
    api_token: str = ""

    # Logging
    debug: bool = False

    @property
    def auth_headers(self) -> dict[str, str]:
        if not self.api_token:
            return {}
        return {"Authorization": f"Bearer {self.api_token}"}


@lru_cache()
def get_settings() -> Settings:
    return Settings()


class _Section(BaseModel):
    model_config = ConfigDict(extra="forbid")


class DataConfig(_Section):
    train_path: Path = Path("data/train")
    eval_path: Path = Path("data/eval")
    scenes: int = Field(256, ge=1)
    eval_scenes: int = Field(64, ge=1)
    max_agents: int = Field(4, ge=0, le=8)
    scenario: str = "random"
    dm_error_rate: float = Field(0.0, ge=0, le=1)
    decision_maker: Literal["scripted", "remote"] = "scripted"
    source: Source = Source.SYNTHETIC
    augment: bool = False


class GridConfig(_Section):
    size: int = Field(32, ge=4)
    resolution: float = Field(0.5, gt=0)


class ModelConfig(_Section):
    dim: int = Field(32, ge=1)
    num_heads: int = Field(4, ge=1)
    hidden: int = Field(64, ge=1)
    max_len: int = Field(64, ge=1)


class ClientConfig(_Section):
    text_endpoint: str | None = None
    paraphrase_endpoint: str | None = None
    judge_endpoint: str | None = None
    timeout_s: float = Field(30.0, gt=0)
    max_retries: int = Field(3, ge=1)
    audit_log: Path | None = None


class RunConfig(_Section):
    seed: int = 7
    out_dir: Path = Path("runs/default")
    data: DataConfig = DataConfig()
    grid: GridConfig = GridConfig()
    model: ModelConfig = ModelConfig()
    train: TrainConfig = TrainConfig()
    loss: LossWeights = LossWeights()
    rules: RuleThresholds = RuleThresholds()
    clients: ClientConfig = ClientConfig()

    def with_ablation(self, mode: AblationMode, out_dir: Path) -> "RunConfig":
        return self.model_copy(
            update={"train": self.train.model_copy(update={"ablation": mode}), "out_dir": out_dir}
        )


def load_run_config(path: Path) -> RunConfig:
    """Parse a TOML run config; unknown keys and bad values are ContractErrors."""
    try:
        with open(path, "rb") as handle:
            raw = tomllib.load(handle)
        return RunConfig.model_validate(raw)
    except (OSError, tomllib.TOMLDecodeError) as e:
        raise ContractError(f"cannot read config {path}: {e}") from e
    except ValidationError as e:
        raise ContractError(f"invalid config {path}: {e}") from e


def dump_run_config(config: RunConfig, path: Path) -> None:
    payload = config.model_dump(mode="json", exclude_none=True)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "wb") as handle:
        tomli_w.dump(payload, handle)
    logger.info(f"Wrote resolved config to {path}")
