"""Flat ``key = value`` run configuration.

Every tunable parameter has a documented default in :data:`DEFAULTS`.  A
config file overrides any subset; unknown keys are an error.  Lines starting
with ``#`` are comments.  Vectors are comma-separated.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, Mapping, Optional, Union

from .errors import ConfigError
from .grasp import GripperModel, WorkspaceBox, always_reachable
from .placement import SUPPORT_ALLOWANCE, PackingHeuristicParams
from .scoring import AltitudeParams, UnifiedWeights
from .stability import StabilityParams

# key -> (type, default, description)
DEFAULTS: Dict[str, tuple] = {
    "seed": (int, 0, "random seed for every sampler"),
    "stability.k": (float, 12.0, "logistic steepness"),
    "stability.c": (float, 0.75, "logistic center, in (0.5, 1)"),
    "stability.epsilon": (float, 0.003, "support contact band (m)"),
    "stability.samples": (int, 2000, "CoM hypotheses per placement"),
    "stability.sigma_scale": (float, 0.05, "hypothesis std as a fraction of each semi-axis"),
    "stability.proximity": (float, 0.25, "radius factor for the vertical semi-axis"),
    "altitude.z_start": (float, 0.02, "clearance where the weight starts rising (m)"),
    "altitude.z_end": (float, 0.06, "clearance where the weight saturates (m)"),
    "altitude.k": (float, 100.0, "altitude logistic steepness (1/m)"),
    "altitude.w_min": (float, 0.1, "weight for very low grasps"),
    "altitude.w_max": (float, 1.0, "weight for high grasps"),
    "heuristic.mode": (str, "none", "none, dense or sparse"),
    "heuristic.tau": (float, 0.05, "closeness threshold (m)"),
    "heuristic.k": (float, 50.0, "decay rate (1/m)"),
    "heuristic.margin": (float, 0.005, "clearance below which a placement is rejected (m)"),
    "weights.grasp": (float, 1.0, "weight of normalized grasp quality"),
    "weights.place": (float, 1.0, "weight of normalized placeability"),
    "gripper.palm": (tuple, (0.09, 0.09, 0.05), "palm box extents (m)"),
    "gripper.finger": (tuple, (0.02, 0.01, 0.06), "finger box extents (m)"),
    "gripper.max_opening": (float, 0.085, "maximum finger opening (m)"),
    "collision.margin": (float, 0.0, "gripper vs environment margin (m)"),
    "placement.margin": (float, 0.0, "object vs environment margin (m)"),
    "placement.support_allowance": (float, SUPPORT_ALLOWANCE, "lift applied before the object collision test (m)"),
    "pipeline.n_grasps": (int, 100, "synthetic grasps to sample"),
    "pipeline.n_placements": (int, 40, "surface samples; each yields six orientations"),
    "pipeline.top": (int, 10, "ranked pairs written to reports"),
    "reach.mode": (str, "box", "box or always"),
    "reach.lower": (tuple, (-1.0, -1.0, -0.5), "workspace box lower corner (m)"),
    "reach.upper": (tuple, (1.0, 1.0, 1.5), "workspace box upper corner (m)"),
    "sweep.points": (int, 4000, "points in synthetic object clouds"),
    "sweep.noise": (float, 0.0005, "along-normal noise of synthetic clouds (m)"),
    "sweep.steps": (int, 101, "edge sweep steps over [0, 1]"),
    "sweep.angle_max": (float, 60.0, "largest incline angle (deg)"),
    "sweep.angle_steps": (int, 121, "incline sweep steps"),
    "sweep.views": (int, 0, "viewpoints for partial clouds; 0 means full coverage"),
}


def _parse(kind, raw: str, key: str):
    try:
        if kind is tuple:
            vals = tuple(float(x) for x in raw.split(","))
            if len(vals) != 3:
                raise ValueError("expected three comma-separated numbers")
            return vals
        if kind is int:
            return int(raw)
        if kind is float:
            return float(raw)
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"bad value for {key!r}: {raw!r} ({exc})") from exc


def _format(value) -> str:
    if isinstance(value, tuple):
        return ",".join(format(v, ".9g") for v in value)
    if isinstance(value, float):
        return format(value, ".9g")
    return str(value)


@dataclass(frozen=True)
class RunConfig:
    values: Dict[str, object] = field(default_factory=lambda: {k: v[1] for k, v in DEFAULTS.items()})

    @classmethod
    def from_mapping(cls, overrides: Mapping[str, object]) -> "RunConfig":
        vals = {k: v[1] for k, v in DEFAULTS.items()}
        for key, raw in overrides.items():
            if key not in DEFAULTS:
                raise ConfigError(f"unknown config key {key!r}")
            kind = DEFAULTS[key][0]
            vals[key] = _parse(kind, raw, key) if isinstance(raw, str) else (tuple(raw) if kind is tuple else kind(raw))
        cfg = cls(vals)
        cfg.validate()
        return cfg

    @classmethod
    def from_text(cls, text: str, source: str = "<config>") -> "RunConfig":
        pairs = {}
        for lineno, line in enumerate(text.splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{source}:{lineno}: expected key = value")
            key, raw = (s.strip() for s in line.split("=", 1))
            pairs[key] = raw
        return cls.from_mapping(pairs)

    @classmethod
    def load(cls, path: Optional[Union[str, Path]] = None, overrides: Optional[Mapping] = None) -> "RunConfig":
        pairs = {}
        if path is not None:
            pairs.update(cls.from_text(Path(path).read_text(), str(path)).changed())
        pairs.update(overrides or {})
        return cls.from_mapping(pairs)

    def __getitem__(self, key):
        return self.values[key]

    def changed(self) -> Dict[str, object]:
        return {k: v for k, v in self.values.items() if v != DEFAULTS[k][1]}

    def with_overrides(self, **kv) -> "RunConfig":
        return RunConfig.from_mapping({**self.values, **{k.replace("__", "."): v for k, v in kv.items()}})

    def echo(self) -> Dict[str, str]:
        """Every effective key with its value rendered as in a config file."""
        return {k: _format(self.values[k]) for k in sorted(self.values)}

    def to_text(self) -> str:
        return "".join(f"{k} = {v}\n" for k, v in self.echo().items())

    def validate(self):
        try:
            self.stability()
            self.altitude()
            self.heuristic()
            self.weights()
            self.gripper()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        if self["heuristic.mode"] not in ("none", "dense", "sparse"):
            raise ConfigError("heuristic.mode must be none, dense or sparse")
        if self["reach.mode"] not in ("box", "always"):
            raise ConfigError("reach.mode must be box or always")
        for key in ("collision.margin", "placement.margin", "placement.support_allowance"):
            if self[key] < 0:
                raise ConfigError(f"{key} must be non-negative")
        for key in ("pipeline.n_grasps", "pipeline.n_placements", "pipeline.top"):
            if self[key] < 1:
                raise ConfigError(f"{key} must be at least 1")

    # parameter records

    def stability(self) -> StabilityParams:
        return StabilityParams(
            self["stability.k"], self["stability.c"], self["stability.epsilon"], self["stability.samples"],
            self["stability.sigma_scale"], self["stability.proximity"],
        )

    def altitude(self) -> AltitudeParams:
        return AltitudeParams(self["altitude.z_start"], self["altitude.z_end"], self["altitude.k"],
                              self["altitude.w_min"], self["altitude.w_max"])

    def heuristic(self) -> Optional[PackingHeuristicParams]:
        mode = self["heuristic.mode"]
        if mode == "none":
            return None
        return PackingHeuristicParams(self["heuristic.tau"], self["heuristic.k"], self["heuristic.margin"], mode)

    def weights(self) -> UnifiedWeights:
        return UnifiedWeights(self["weights.grasp"], self["weights.place"])

    def gripper(self) -> GripperModel:
        return GripperModel(self["gripper.palm"], self["gripper.finger"], self["gripper.max_opening"])

    def reachability(self):
        if self["reach.mode"] == "always":
            return always_reachable
        return WorkspaceBox(self["reach.lower"], self["reach.upper"])
