import configparser
import dataclasses
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Mapping, Optional, Tuple

from configs.default_config import DEFAULT_CONFIG
from src.core.errors import ValidationError

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}


@dataclass(frozen=True)
class NetConfig:
    hidden: Tuple[int, ...] = (256, 256, 256)
    lr: float = 5e-3
    gamma: float = 0.9
    batch_size: int = 32
    alpha_ent: float = 0.05
    alpha_decay: float = 1.0
    tau0: float = 0.65
    tau_decay: float = 0.995
    tau_floor: float = 0.05
    tau_reading: str = "initial"
    sync_kind: str = "hard"
    sync_period: int = 100
    sync_rate: float = 0.01
    replay_capacity: int = 10000
    warmup: int = 64
    updates_per_step: int = 1
    grad_clip: float = 10.0
    state_squash: bool = True

    def temperature(self, episode: int) -> float:
        """Boltzmann temperature for a 0-based episode index."""
        if self.tau_reading == "decay":
            # tau0 holds a tabulated decay rate; the schedule starts from 1.
            start, rate = 1.0, self.tau0
        else:
            start, rate = self.tau0, self.tau_decay
        return max(self.tau_floor, start * rate ** episode)

    def entropy_coefficient(self, episode: int) -> float:
        return self.alpha_ent * self.alpha_decay ** episode


@dataclass(frozen=True)
class MonitorConfig:
    lam: float = 0.1
    sigma_scale: float = 1.0
    zeta: float = 0.05
    alarm_dof: int = 0

    def dof(self, p: int) -> int:
        return self.alarm_dof if self.alarm_dof > 0 else p


@dataclass(frozen=True)
class DiscoveryConfig:
    alpha_sig: float = 0.05
    max_cond: int = 3
    cpe_refresh: str = "episode"
    context_window: int = 100
    discovery_scope: str = "selected"
    keep_fraction: float = 0.2
    false_fraction: float = 0.85
    adversarial_strength: float = 0.8

    @property
    def refresh_steps(self) -> Optional[int]:
        """Step period of CPE re-estimation, or None for "once"/"episode"."""
        if self.cpe_refresh in ("once", "episode"):
            return None
        return int(self.cpe_refresh)


@dataclass(frozen=True)
class RewardSettings:
    y_value: float = 1.0
    w_value: float = 0.5
    penalty: float = -20.0
    baseline_pre: float = 0.0
    baseline_post: float = 0.0
    scaled_reward: bool = False


@dataclass(frozen=True)
class ExperimentConfig:
    p: int = 10
    m: int = 6
    k: int = 5
    pattern: str = "a"
    delta_train: float = 1.0
    delta_test: float = 1.0
    noise_sigma: float = 0.0
    horizon: int = 200
    episodes: int = 400
    seed: int = 2024
    replications: int = 100
    eval_onset: int = 1
    edge_prob: float = 0.3
    weight_low: float = 0.3
    weight_high: float = 0.8
    mode: str = "causal"
    cpe_source: str = "discovered"
    workers: int = 1
    net: NetConfig = field(default_factory=NetConfig)
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    discovery: DiscoveryConfig = field(default_factory=DiscoveryConfig)
    reward: RewardSettings = field(default_factory=RewardSettings)

    @property
    def causal(self) -> bool:
        return self.mode == "causal"

    def with_overrides(self, **overrides: Any) -> "ExperimentConfig":
        """Return a copy with flat keys replaced, whichever section holds them."""
        return build_config(merge_overrides(self.to_sections(), overrides))

    def to_sections(self) -> Dict[str, Dict[str, Any]]:
        sections: Dict[str, Dict[str, Any]] = {"experiment": {}}
        for f in dataclasses.fields(self):
            if f.name in _SECTION_TYPES:
                sections[f.name] = dataclasses.asdict(getattr(self, f.name))
            else:
                sections["experiment"][f.name] = getattr(self, f.name)
        sections["net"]["hidden"] = ",".join(str(h) for h in self.net.hidden)
        return sections

    def to_flat_dict(self) -> Dict[str, Any]:
        flat: Dict[str, Any] = {}
        for values in self.to_sections().values():
            flat.update(values)
        return flat


_SECTION_TYPES = {
    "net": NetConfig,
    "monitor": MonitorConfig,
    "discovery": DiscoveryConfig,
    "reward": RewardSettings,
}


def default_key_index() -> Dict[str, str]:
    """Map every flat config key to the section that owns it."""
    index: Dict[str, str] = {}
    for section, values in DEFAULT_CONFIG.items():
        for key in values:
            if key in index:
                raise ValidationError(f"Config key '{key}' appears in more than one section")
            index[key] = section
    return index


def parse_value(key: str, raw: Any, default: Any) -> Any:
    """Coerce a raw (usually string) value to the type of its default."""
    if not isinstance(raw, str):
        return raw
    text = raw.strip()
    try:
        if isinstance(default, bool):
            lowered = text.lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ValidationError(f"Config key '{key}' cannot parse value '{raw}' as {type(default).__name__}")
    return text


def merge_overrides(sections: Mapping[str, Mapping[str, Any]], overrides: Mapping[str, Any]) -> Dict[str, Dict[str, Any]]:
    """Apply flat key overrides on top of a sectioned dictionary."""
    index = default_key_index()
    merged = {name: dict(values) for name, values in sections.items()}
    for key, value in overrides.items():
        if value is None:
            continue
        if key not in index:
            raise ValidationError(f"Unknown config key '{key}'")
        section = index[key]
        merged.setdefault(section, {})[key] = parse_value(key, value, DEFAULT_CONFIG[section][key])
    return merged


def load_config_file(path: str) -> Dict[str, Dict[str, Any]]:
    """
    Read an INI config file into a sectioned dictionary of typed values.

    Args:
        path (str): Path of the config file.

    Returns:
        dict: Section name -> {key: value}; only keys present in the file.
    """
    parser = configparser.ConfigParser()
    try:
        with open(path, "r", encoding="utf-8") as handle:
            parser.read_file(handle)
    except (OSError, configparser.Error) as e:
        raise ValidationError(f"Cannot read config file {path}: {e}")

    loaded: Dict[str, Dict[str, Any]] = {}
    for section in parser.sections():
        if section not in DEFAULT_CONFIG:
            raise ValidationError(f"Unknown config section '[{section}]' in {path}")
        for key, raw in parser.items(section):
            if key not in DEFAULT_CONFIG[section]:
                raise ValidationError(f"Unknown config key '{key}' in section '[{section}]' of {path}")
            loaded.setdefault(section, {})[key] = parse_value(key, raw, DEFAULT_CONFIG[section][key])
    logging.info(f"Loaded config file {path}")
    return loaded


def default_sections() -> Dict[str, Dict[str, Any]]:
    return {name: dict(values) for name, values in DEFAULT_CONFIG.items()}


def _parse_hidden(raw: Any) -> Tuple[int, ...]:
    if isinstance(raw, (tuple, list)):
        widths = tuple(int(w) for w in raw)
    else:
        try:
            widths = tuple(int(w) for w in str(raw).split(",") if w.strip())
        except ValueError:
            raise ValidationError(f"Config key 'hidden' must be comma-separated integers, got '{raw}'")
    if any(w <= 0 for w in widths):
        raise ValidationError(f"Hidden layer widths must be positive, got {widths}")
    return widths


def build_config(sections: Optional[Mapping[str, Mapping[str, Any]]] = None) -> ExperimentConfig:
    """
    Build a validated ExperimentConfig from a (partial) sectioned dictionary.

    Missing keys take their DEFAULT_CONFIG values.
    """
    merged = default_sections()
    for name, values in (sections or {}).items():
        if name not in merged:
            raise ValidationError(f"Unknown config section '{name}'")
        for key, value in values.items():
            if key not in merged[name]:
                raise ValidationError(f"Unknown config key '{key}' in section '{name}'")
            merged[name][key] = parse_value(key, value, DEFAULT_CONFIG[name][key])

    net_values = dict(merged["net"])
    net_values["hidden"] = _parse_hidden(net_values["hidden"])
    cfg = ExperimentConfig(
        **merged["experiment"],
        net=NetConfig(**net_values),
        monitor=MonitorConfig(**merged["monitor"]),
        discovery=DiscoveryConfig(**{k: str(v) if k == "cpe_refresh" else v for k, v in merged["discovery"].items()}),
        reward=RewardSettings(**merged["reward"]),
    )
    validate_config(cfg)
    return cfg


def validate_config(cfg: ExperimentConfig) -> None:
    """Raise ValidationError naming the first violated constraint."""
    for name in ("p", "m", "horizon", "replications", "workers"):
        if getattr(cfg, name) < 1:
            raise ValidationError(f"{name} must be positive, got {getattr(cfg, name)}")
    if cfg.episodes < 0:
        raise ValidationError(f"episodes must be non-negative, got {cfg.episodes}")
    if cfg.m > cfg.p:
        raise ValidationError(f"m={cfg.m} cannot exceed p={cfg.p}")
    if not 0 <= cfg.k <= cfg.p:
        raise ValidationError(f"k={cfg.k} must lie in [0, p={cfg.p}]")
    if cfg.pattern not in ("a", "b"):
        raise ValidationError(f"pattern must be 'a' or 'b', got '{cfg.pattern}'")
    if cfg.delta_train < 0 or cfg.delta_test < 0:
        raise ValidationError("Shift magnitudes must be non-negative")
    if cfg.noise_sigma < 0:
        raise ValidationError(f"noise_sigma must be non-negative, got {cfg.noise_sigma}")
    if not 1 <= cfg.eval_onset <= cfg.horizon:
        raise ValidationError(f"eval_onset={cfg.eval_onset} must lie in [1, horizon={cfg.horizon}]")
    if not 0.0 <= cfg.edge_prob <= 1.0:
        raise ValidationError(f"edge_prob must lie in [0, 1], got {cfg.edge_prob}")
    if not 0 < cfg.weight_low <= cfg.weight_high:
        raise ValidationError(f"Need 0 < weight_low <= weight_high, got {cfg.weight_low}, {cfg.weight_high}")
    if cfg.mode not in ("causal", "non_causal"):
        raise ValidationError(f"mode must be 'causal' or 'non_causal', got '{cfg.mode}'")
    if cfg.cpe_source not in ("discovered", "ground_truth", "none", "low_quality", "adversarial"):
        raise ValidationError(f"Unknown cpe_source '{cfg.cpe_source}'")

    net = cfg.net
    if net.lr <= 0:
        raise ValidationError(f"lr must be positive, got {net.lr}")
    if not 0 <= net.gamma < 1:
        raise ValidationError(f"gamma must lie in [0, 1), got {net.gamma}")
    if net.batch_size < 1 or net.replay_capacity < 1 or net.sync_period < 1 or net.updates_per_step < 0:
        raise ValidationError("batch_size, replay_capacity and sync_period must be positive")
    if net.tau0 <= 0 or net.tau_floor <= 0 or net.tau_decay <= 0:
        raise ValidationError("Temperatures and temperature decay must be positive")
    if net.tau_reading not in ("initial", "decay"):
        raise ValidationError(f"tau_reading must be 'initial' or 'decay', got '{net.tau_reading}'")
    if net.sync_kind not in ("hard", "polyak"):
        raise ValidationError(f"sync_kind must be 'hard' or 'polyak', got '{net.sync_kind}'")
    if not 0 <= net.sync_rate <= 1:
        raise ValidationError(f"sync_rate must lie in [0, 1], got {net.sync_rate}")
    if net.alpha_ent < 0 or net.grad_clip < 0:
        raise ValidationError("alpha_ent and grad_clip must be non-negative")

    mon = cfg.monitor
    if not 0 <= mon.lam < 1:
        raise ValidationError(f"lam must lie in [0, 1), got {mon.lam}")
    if mon.sigma_scale <= 0:
        raise ValidationError(f"sigma_scale must be positive, got {mon.sigma_scale}")
    if not 0 < mon.zeta < 1:
        raise ValidationError(f"zeta must lie in (0, 1), got {mon.zeta}")
    if mon.alarm_dof < 0:
        raise ValidationError(f"alarm_dof must be non-negative, got {mon.alarm_dof}")

    disc = cfg.discovery
    if not 0 < disc.alpha_sig < 1:
        raise ValidationError(f"alpha_sig must lie in (0, 1), got {disc.alpha_sig}")
    if disc.max_cond < 0:
        raise ValidationError(f"max_cond must be non-negative, got {disc.max_cond}")
    if disc.cpe_refresh not in ("once", "episode"):
        try:
            steps = int(disc.cpe_refresh)
        except ValueError:
            raise ValidationError(f"cpe_refresh must be 'once', 'episode' or a step count, got '{disc.cpe_refresh}'")
        if steps < 1:
            raise ValidationError(f"cpe_refresh step count must be positive, got {steps}")
    if disc.context_window < 10:
        raise ValidationError(f"context_window must be at least 10 rows, got {disc.context_window}")
    if disc.discovery_scope not in ("selected", "all"):
        raise ValidationError(f"discovery_scope must be 'selected' or 'all', got '{disc.discovery_scope}'")
    if not 0 <= disc.keep_fraction <= 1:
        raise ValidationError(f"keep_fraction must lie in [0, 1], got {disc.keep_fraction}")
    if not 0 <= disc.false_fraction < 1:
        raise ValidationError(f"false_fraction must lie in [0, 1), got {disc.false_fraction}")
    if not 0 < disc.adversarial_strength < 1:
        raise ValidationError(f"adversarial_strength must lie in (0, 1), got {disc.adversarial_strength}")

    rew = cfg.reward
    if rew.penalty >= 0:
        raise ValidationError(f"penalty must be negative, got {rew.penalty}")
    if rew.y_value < 0 or rew.w_value < 0:
        raise ValidationError("Reward weights must be non-negative")
