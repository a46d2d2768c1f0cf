import logging
from dataclasses import dataclass, field
from typing import Any, Dict, List, Mapping, Optional, Tuple

from src.core.config import ExperimentConfig, build_config, default_sections, merge_overrides
from src.core.errors import ValidationError
from src.harness.evaluation import evaluate_add
from src.harness.report import ResultRow, report
from src.harness.trainer import train

DELTA_GRID = (0.25, 0.5, 1.0, 1.5, 2.0)
NOISE_DELTA_GRID = (0.0, 0.25, 0.5, 1.0, 1.5, 2.0)
NOISE_GRID = (0.05, 0.1, 0.15)

SIZE_SETTINGS = {
    10: {"p": 10, "m": 6, "k": 5, "edge_prob": 0.3,
         "alpha_ent": 0.05, "lr": 5e-3, "gamma": 0.9, "batch_size": 32, "tau0": 0.65},
    50: {"p": 50, "m": 12, "k": 10, "edge_prob": 0.05,
         "alpha_ent": 0.1, "lr": 1e-3, "gamma": 0.8, "batch_size": 64, "tau0": 0.75},
    100: {"p": 100, "m": 22, "k": 20, "edge_prob": 0.025,
          "alpha_ent": 0.1, "lr": 1e-3, "gamma": 0.8, "batch_size": 64, "tau0": 0.9},
}

METHOD_LABELS = {"causal": "Causal DQ", "non_causal": "Non-Causal DQ"}
SOURCE_LABELS = {
    "none": "No edges recovered",
    "low_quality": "Low-quality graph",
    "discovered": "Standard discovery",
    "ground_truth": "Ground-truth graph",
    "adversarial": "Adversarial graph",
}


@dataclass(frozen=True)
class Variant:
    """One trained agent of a preset: its mode and CPE source."""

    mode: str = "causal"
    cpe_source: str = "discovered"

    @property
    def label(self) -> str:
        if self.mode == "non_causal":
            return METHOD_LABELS["non_causal"]
        if self.cpe_source == "discovered":
            return METHOD_LABELS["causal"]
        return f"{METHOD_LABELS['causal']} ({SOURCE_LABELS[self.cpe_source]})"


@dataclass(frozen=True)
class Preset:
    """
    A scenario grid: every variant is trained once per (sigma, delta_train)
    and evaluated at every delta_test.
    """

    name: str
    description: str
    overrides: Dict[str, Any]
    deltas: Tuple[float, ...] = DELTA_GRID
    sigmas: Tuple[float, ...] = (0.0,)
    train_deltas: Tuple[float, ...] = (1.0,)
    variants: Tuple[Variant, ...] = field(default_factory=lambda: (Variant("causal"), Variant("non_causal")))


def _size_presets() -> List[Preset]:
    presets = []
    for p, settings in SIZE_SETTINGS.items():
        for case in ("a", "b"):
            presets.append(Preset(
                name=f"p{p}-case-{case}",
                description=f"Noise-free shifts of pattern ({case}) on p={p} streams",
                overrides={**settings, "pattern": case},
            ))
        presets.append(Preset(
            name=f"noise-p{p}",
            description=f"Pattern (a) shifts on p={p} streams with observation noise",
            overrides={**settings, "pattern": "a", "batch_size": 2 * settings["batch_size"]},
            deltas=NOISE_DELTA_GRID,
            sigmas=NOISE_GRID,
        ))
        presets.append(Preset(
            name=f"shift-mismatch-p{p}",
            description=f"Training shifts 0.5 and 1.0 evaluated across test shifts on p={p} streams",
            overrides={**settings, "pattern": "a"},
            train_deltas=(0.5, 1.0),
        ))
    presets.append(Preset(
        name="extreme-p50",
        description="Few sensors on p=50 streams: k=3, m=3, horizon 300",
        overrides={**SIZE_SETTINGS[50], "k": 3, "m": 3, "horizon": 300, "pattern": "a"},
    ))
    presets.append(Preset(
        name="extreme-p100",
        description="Few sensors on p=100 streams: k=6, m=6, horizon 300",
        overrides={**SIZE_SETTINGS[100], "k": 6, "m": 6, "horizon": 300, "pattern": "a"},
    ))
    presets.append(Preset(
        name="null-p50",
        description="No shift with noise 0.1 on p=50 streams; every alarm is false",
        overrides={**SIZE_SETTINGS[50], "pattern": "a", "batch_size": 128},
        deltas=(0.0,),
        sigmas=(0.1,),
        variants=(Variant("causal"),),
    ))
    return presets


def _ablation_presets() -> List[Preset]:
    base = {**SIZE_SETTINGS[50], "pattern": "a", "batch_size": 128, "replications": 50}
    names = {
        "ablation-no-graph": Variant("causal", "none"),
        "ablation-low-quality": Variant("causal", "low_quality"),
        "ablation-standard": Variant("causal", "discovered"),
        "ablation-ground-truth": Variant("causal", "ground_truth"),
        "ablation-adversarial": Variant("causal", "adversarial"),
        "ablation-non-causal": Variant("non_causal"),
    }
    presets = [Preset(name=name, description=f"Graph-quality ablation: {variant.label}", overrides=base,
                      deltas=(1.0,), sigmas=(0.1,), variants=(variant,))
               for name, variant in names.items()]
    presets.append(Preset(name="ablation", description="Every graph quality of the ablation on paired seeds",
                          overrides=base, deltas=(1.0,), sigmas=(0.1,), variants=tuple(names.values())))
    return presets


PRESETS: Dict[str, Preset] = {preset.name: preset for preset in _size_presets() + _ablation_presets()}


def get_preset(name: str) -> Preset:
    if name not in PRESETS:
        raise ValidationError(f"Unknown preset '{name}'. Known presets: {', '.join(sorted(PRESETS))}")
    return PRESETS[name]


def preset_config(name: str, file_sections: Optional[Mapping[str, Mapping[str, Any]]] = None,
                  cli_overrides: Optional[Mapping[str, Any]] = None, **grid: Any) -> ExperimentConfig:
    """
    Configuration of one grid point: defaults < config file < preset < grid point < CLI flags.
    """
    sections = default_sections()
    for section, values in (file_sections or {}).items():
        sections.setdefault(section, {}).update(values)
    sections = merge_overrides(sections, get_preset(name).overrides)
    sections = merge_overrides(sections, grid)
    sections = merge_overrides(sections, cli_overrides or {})
    return build_config(sections)


def run_preset(name: str, output_dir: str, file_sections: Optional[Mapping[str, Mapping[str, Any]]] = None,
               cli_overrides: Optional[Mapping[str, Any]] = None) -> List[str]:
    """
    Train and evaluate every variant of a preset and write its report.

    Args:
        name (str): Preset name, see PRESETS.
        output_dir (str): Directory receiving <name>.csv, <name>_curves.csv and <name>_curves.svg.
        file_sections (dict): Values read from a config file.
        cli_overrides (dict): Flat values given on the command line.

    Returns:
        list: Paths of the files written.
    """
    preset = get_preset(name)
    rows: List[ResultRow] = []
    curves: Dict[str, List[float]] = {}
    logging.info(f"Running preset {name}: {preset.description}")
    for sigma in preset.sigmas:
        for delta_train in preset.train_deltas:
            for variant in preset.variants:
                cfg = preset_config(name, file_sections, cli_overrides, noise_sigma=sigma, delta_train=delta_train,
                                    mode=variant.mode, cpe_source=variant.cpe_source)
                label = variant.label
                if len(preset.sigmas) > 1:
                    label += f" sigma={cfg.noise_sigma:g}"
                if len(preset.train_deltas) > 1:
                    label += f" train={cfg.delta_train:g}"
                logging.info(f"Preset {name}: training {label}")
                result = train(cfg)
                curves[label] = result.curve.values
                for delta in preset.deltas:
                    eval_cfg = cfg.with_overrides(delta_test=delta, **(cli_overrides or {}))
                    add = evaluate_add(result.params, eval_cfg)
                    rows.append(ResultRow(method=label, p=eval_cfg.p, m=eval_cfg.m, delta=eval_cfg.delta_test,
                                          sigma=eval_cfg.noise_sigma, mean_add=add.mean_add, stderr=add.stderr,
                                          false_alarm_rate=add.false_alarm_rate, seed_count=add.replications))
    return report(rows, {k: v for k, v in curves.items() if v}, output_dir, prefix=name)
