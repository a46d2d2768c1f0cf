from typing import Any, Dict

from src.core.config import ExperimentConfig
from src.core.cpe_source import CpeSource
from src.core.errors import ValidationError
from src.sources.degraded import AdversarialSource, LowQualitySource, NoGraphSource
from src.sources.discovered import DiscoveredSource
from src.sources.ground_truth import GroundTruthSource


class CpeSourceFactory:
    """Factory class to create instances of the appropriate CPE source."""

    @staticmethod
    def create_source(kind: str, config: Dict[str, Any] = None) -> CpeSource:
        """
        Create instances of the appropriate CPE source.

        Args:
            kind (str): "discovered", "ground_truth", "none", "low_quality" or "adversarial".
            config (dict): Constructor arguments of the source.
        Returns:
            CpeSource: Instance of the source.
        """
        config = config or {}
        if kind == "discovered":
            return DiscoveredSource(**config)
        elif kind == "ground_truth":
            return GroundTruthSource()
        elif kind == "none":
            return NoGraphSource()
        elif kind == "low_quality":
            return LowQualitySource(**config)
        elif kind == "adversarial":
            return AdversarialSource(**config)
        else:
            raise ValidationError(f"Invalid CPE source type '{kind}'.")

    @staticmethod
    def source_config(cfg: ExperimentConfig, seed: int) -> Dict[str, Any]:
        """Constructor arguments for cfg.cpe_source taken from the discovery section."""
        disc = cfg.discovery
        if cfg.cpe_source == "discovered":
            return {"alpha_sig": disc.alpha_sig, "max_cond": disc.max_cond, "discovery_scope": disc.discovery_scope}
        if cfg.cpe_source == "low_quality":
            return {"keep_fraction": disc.keep_fraction, "false_fraction": disc.false_fraction, "seed": seed}
        if cfg.cpe_source == "adversarial":
            return {"adversarial_strength": disc.adversarial_strength, "seed": seed}
        return {}

    @staticmethod
    def from_config(cfg: ExperimentConfig, seed: int) -> CpeSource:
        return CpeSourceFactory.create_source(cfg.cpe_source, CpeSourceFactory.source_config(cfg, seed))
