"""Experiment configuration and its flat ``key = value`` file format.

Polynomials are written as full comma-separated coefficient lists, lowest
shift power first (``a = 1, -0.9062, 0.4344, -0.1829``). ``inf``/``-inf``
are accepted for the output limits. A leading ``[experiment]`` section
header is optional.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field, fields, replace
from pathlib import Path

from ..plant import ArmaxModel, Controller
from ..poly import Polynomial
from ..sensitivity import Limits

POLICIES = ("designed", "prbs", "zero")


class ConfigError(ValueError):
    pass


def reference_system() -> ArmaxModel:
    """Third-order example plant with noise standard deviation 0.01."""
    return ArmaxModel(
        b=Polynomial([0.0, 0.57, -0.38, 0.118]),
        a=Polynomial([1.0, -0.9062, 0.4344, -0.1829]),
        c=Polynomial([1.0, 0.2]),
        noise_std=0.01,
    )


def reference_controller() -> Controller:
    """PI controller ``0.005607 (1 + q^-1) / (1 - q^-1)``."""
    return Controller(l=Polynomial([0.005607, 0.005607]), m=Polynomial([1.0, -1.0]))


@dataclass(frozen=True)
class ExperimentConfig:
    model: ArmaxModel = field(default_factory=reference_system)
    controller: Controller = field(default_factory=reference_controller)
    k: int = 50
    d_min: float = -0.3
    d_max: float = 0.3
    yd_min: float = -math.inf
    yd_max: float = math.inf
    reference: float | tuple[float, ...] = 1.0
    steps: int = 5000
    warm_up: int = 200
    num_mc_runs: int = 100
    base_seed: int = 0
    policy: str = "designed"
    prbs_amplitude: float = 0.3
    prbs_switch_period: int = 1
    sampling_period: float = 0.01
    ff_base: float = 0.02
    ff_decay: float = 0.998
    theta_init: float = 1e-3
    gain_init: float = 1e4
    lambda_init: float = 1.0
    rho: float = 1e6
    divergence_limit: float = 1e6
    save_trajectories: bool = True
    output_dir: str | None = None

    def __post_init__(self):
        if self.policy not in POLICIES:
            raise ConfigError(f"policy must be one of {POLICIES}, got {self.policy!r}")
        if not self.d_min < self.d_max:
            raise ConfigError(f"need d_min < d_max, got {self.d_min} >= {self.d_max}")
        if not self.yd_min < self.yd_max:
            raise ConfigError(f"need yd_min < yd_max, got {self.yd_min} >= {self.yd_max}")
        if not 0 <= self.warm_up < self.steps:
            raise ConfigError(f"need 0 <= warm_up < steps, got {self.warm_up}, {self.steps}")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if self.num_mc_runs < 1:
            raise ConfigError("num_mc_runs must be >= 1")
        if not isinstance(self.reference, (int, float)) and len(self.reference) < self.steps:
            raise ConfigError("reference samples shorter than the experiment")

    @property
    def limits(self) -> Limits:
        return Limits(self.d_min, self.d_max, self.yd_min, self.yd_max)

    def reference_at(self, t: int) -> float:
        if isinstance(self.reference, (int, float)):
            return float(self.reference)
        return float(self.reference[t])

    def with_(self, **changes) -> ExperimentConfig:
        return replace(self, **changes)


_FLOAT_KEYS = {f.name for f in fields(ExperimentConfig) if f.type in ("float",)}
_INT_KEYS = {f.name for f in fields(ExperimentConfig) if f.type in ("int",)}
_POLY_KEYS = ("a", "b", "c", "l", "m")


def _floats(text: str) -> list[float]:
    return [float(x) for x in text.replace(",", " ").split()]


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {text!r}")


def parse_config(text: str) -> ExperimentConfig:
    """Parse the flat key-value format; unknown keys are an error."""
    if not text.lstrip().startswith("["):
        text = "[experiment]\n" + text
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from exc
    if parser.sections() != ["experiment"]:
        raise ConfigError(f"expected a single [experiment] section, got {parser.sections()}")
    raw = dict(parser["experiment"])

    base_model, base_ctrl = reference_system(), reference_controller()
    kwargs: dict = {}
    try:
        polys = {k: Polynomial(_floats(raw.pop(k))) for k in _POLY_KEYS if k in raw}
        noise_std = float(raw.pop("noise_std", base_model.noise_std))
        kwargs["model"] = ArmaxModel(
            polys.get("b", base_model.b), polys.get("a", base_model.a),
            polys.get("c", base_model.c), noise_std,
        )
        kwargs["controller"] = Controller(polys.get("l", base_ctrl.l), polys.get("m", base_ctrl.m))
        if "reference" in raw:
            ref = _floats(raw.pop("reference"))
            kwargs["reference"] = ref[0] if len(ref) == 1 else tuple(ref)
        # symmetric shorthands
        if "d_bound" in raw:
            v = float(raw.pop("d_bound"))
            kwargs["d_min"], kwargs["d_max"] = -v, v
        if "yd_bound" in raw:
            v = float(raw.pop("yd_bound"))
            kwargs["yd_min"], kwargs["yd_max"] = -v, v
        for key, value in raw.items():
            if key in _FLOAT_KEYS:
                kwargs[key] = float(value)
            elif key in _INT_KEYS:
                kwargs[key] = int(value)
            elif key == "save_trajectories":
                kwargs[key] = _bool(value)
            elif key in ("policy", "output_dir"):
                kwargs[key] = value.strip()
            else:
                raise ConfigError(f"unknown config key {key!r}")
        return ExperimentConfig(**kwargs)
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config(text)


def _fmt(v) -> str:
    if isinstance(v, float) and math.isinf(v):
        return "inf" if v > 0 else "-inf"
    if isinstance(v, (bool, str)):
        return str(v).lower() if isinstance(v, bool) else v
    return repr(v)


def dump_config(cfg: ExperimentConfig) -> str:
    lines = ["[experiment]"]
    for name, poly in (("b", cfg.model.b), ("a", cfg.model.a), ("c", cfg.model.c),
                       ("l", cfg.controller.l), ("m", cfg.controller.m)):
        lines.append(f"{name} = " + ", ".join(repr(float(x)) for x in poly.coeffs))
    lines.append(f"noise_std = {cfg.model.noise_std!r}")
    for f in fields(cfg):
        if f.name in ("model", "controller"):
            continue
        v = getattr(cfg, f.name)
        if v is None:
            continue
        if f.name == "reference" and not isinstance(v, (int, float)):
            v = ", ".join(repr(float(x)) for x in v)
            lines.append(f"reference = {v}")
            continue
        lines.append(f"{f.name} = {_fmt(v)}")
    return "\n".join(lines) + "\n"
