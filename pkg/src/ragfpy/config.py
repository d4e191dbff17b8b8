"""
Run configuration files.

A run configuration is one flat JSON object. Engine keys and learner keys
share the object; gateway keys are only consulted in live mode. Any other
key is an error.
"""
import json, os
from dataclasses import dataclass, field
from typing import Optional, Tuple

from .engine import EngineConfig
from .errors import ConfigError, LearnerError
from .learners import LearnerConfig, LearnerKind

API_KEY_ENV = "RAFG_API_KEY"

ENGINE_KEYS = {
    "max_iterations": int,
    "patience": int,
    "top_k": int,
    "metric": str,
    "cv_folds": int,
    "seed": int,
    "task_goal": str,
    "test_fraction": (int, float),
    "info_bins": int,
    "n_jobs": int,
}
LEARNER_KEYS = {
    "learner": str,
    "max_depth": int,
    "min_leaf": int,
    "n_trees": int,
    "feature_fraction": (int, float, type(None)),
}
GATEWAY_KEYS = {
    "llm_endpoint": str,
    "llm_model": str,
    "llm_timeout": (int, float),
    "llm_options": dict,
    "embed_endpoint": str,
    "embed_model": str,
}


@dataclass(frozen=True)
class GatewaySettings:
    llm_endpoint: str = "https://api.openai.com/v1/chat/completions"
    llm_model: str = "gpt-4o"
    llm_timeout: float = 60.0
    llm_options: dict = field(default_factory=dict)
    embed_endpoint: Optional[str] = None
    embed_model: Optional[str] = None


def _check_type(key, value, expected):
    # bool is an int subclass, never a valid count or fraction here
    if isinstance(value, bool) or not isinstance(value, expected):
        raise ConfigError(f"Config key {key!r} has invalid value {value!r}.")


def parse_config(payload: dict) -> Tuple[EngineConfig, GatewaySettings]:
    """Build validated engine and gateway settings from a config mapping."""
    if not isinstance(payload, dict):
        raise ConfigError("A run configuration must be a JSON object.")
    allowed = {**ENGINE_KEYS, **LEARNER_KEYS, **GATEWAY_KEYS}
    unknown = sorted(set(payload) - set(allowed))
    if unknown:
        raise ConfigError(f"Unknown config keys: {', '.join(unknown)}.")
    for key, value in payload.items():
        _check_type(key, value, allowed[key])

    engine = {k: v for k, v in payload.items() if k in ENGINE_KEYS}
    learner = {k: v for k, v in payload.items() if k in LEARNER_KEYS}
    gateway = {k: v for k, v in payload.items() if k in GATEWAY_KEYS}
    try:
        kind = LearnerKind(learner.pop("learner", LearnerKind.RANDOM_FOREST.value))
    except ValueError:
        choices = [k.value for k in LearnerKind]
        raise ConfigError(f"Config key 'learner' must be one of {choices}.") from None
    try:
        learner_config = LearnerConfig(
            kind=kind, seed=engine.get("seed", 0), n_jobs=engine.get("n_jobs", 1), **learner
        )
    except LearnerError as e:
        raise ConfigError(str(e)) from e
    return EngineConfig(learner=learner_config, **engine), GatewaySettings(**gateway)


def load_config(path) -> Tuple[EngineConfig, GatewaySettings]:
    """Read a JSON run configuration.

    Raises
    ------
    FileNotFoundError
        `path` does not exist
    ConfigError
        invalid JSON, unknown keys, or out-of-range values
    """
    with open(path, "r", encoding="utf-8") as f:
        try:
            payload = json.load(f)
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path} is not valid JSON: {e}") from e
    return parse_config(payload)


def api_key() -> str:
    """The live-mode API key, from the environment."""
    key = os.environ.get(API_KEY_ENV, "").strip()
    if not key:
        raise ConfigError(f"Live mode needs the {API_KEY_ENV} environment variable.")
    return key
