"""Scenario configuration: a single JSON document per run.

Parsing validates everything the engine would reject at runtime (grid
alignment, gain stability, initial sagittal speed when the schedule uses
the energy-saving mode) so a bad config fails at load time with a field
path in the message.  ``serialize(parse(text))`` is idempotent.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field
from importlib import resources

import numpy as np

from .baselines import BaselineGains
from .engine import NoiseState, SwitchSchedule, default_gain_set
from .flc import GainSet
from .mecanum import ExtendedState
from .references import ReferenceTrajectory, circle_reference, line_reference, polynomial_reference

BUNDLED = ("sim1_circle", "sim2_line", "switch_demo", "naive_switch_demo")


class ConfigError(ValueError):
    """Configuration document failed validation; message carries the field."""


@dataclass
class NoiseConfig:
    enabled: bool = False
    k: float = 0.1
    q: float = 0.4
    seed: int = 0


@dataclass
class ScenarioConfig:
    name: str = "scenario"
    plant: str = "mecanum"
    controller: str = "unified"                   # or "naive-pair"
    reference: dict = field(default_factory=lambda: {"kind": "circle", "radius": 8.0, "omega": 0.15})
    gains: dict = field(default_factory=dict)     # empty -> controller defaults
    schedule: list = field(default_factory=lambda: [[0.0, 1]])
    noise: NoiseConfig = field(default_factory=NoiseConfig)
    initial_state: list = field(default_factory=lambda: [0.0, -4.0, 0.0, 0.5, 0.0])
    dt: float = 1e-3
    duration: float = 40.0

    # -- runtime objects -------------------------------------------------

    def build_reference(self) -> ReferenceTrajectory:
        kind = self.reference.get("kind")
        try:
            if kind == "circle":
                kw = {}
                if "heading_offset" in self.reference:
                    kw["heading_offset"] = float(self.reference["heading_offset"])
                return circle_reference(float(self.reference["radius"]),
                                        float(self.reference["omega"]), **kw)
            if kind == "line":
                return line_reference()
            if kind == "polynomial":
                return polynomial_reference(self.reference["x_coeffs"],
                                            self.reference["y_coeffs"],
                                            self.reference["heading_coeffs"])
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"reference: {err}") from None
        raise ConfigError(f"reference.kind must be circle, line or polynomial, got {kind!r}")

    def build_controller(self):
        try:
            if self.controller == "unified":
                if not self.gains:
                    return default_gain_set()
                return GainSet(position=tuple(np.asarray(m, dtype=float) for m in self.gains["position"]),
                               heading=(np.atleast_2d(float(self.gains["heading"])),),
                               lateral=(np.atleast_2d(float(self.gains["lateral"])),))
            if self.controller == "naive-pair":
                if not self.gains:
                    return BaselineGains()
                return BaselineGains(**{k: float(v) for k, v in self.gains.items()})
        except (KeyError, TypeError, ValueError) as err:
            raise ConfigError(f"gains: {err}") from None
        raise ConfigError(f"controller must be unified or naive-pair, got {self.controller!r}")

    def build_schedule(self) -> SwitchSchedule:
        try:
            return SwitchSchedule(tuple((float(t), int(s)) for t, s in self.schedule))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"schedule: {err}") from None

    def build_noise(self) -> NoiseState | None:
        if not self.noise.enabled:
            return None
        try:
            return NoiseState(k=float(self.noise.k), q=float(self.noise.q),
                              rng_seed=int(self.noise.seed))
        except ValueError as err:
            raise ConfigError(f"noise: {err}") from None

    def build_initial_state(self) -> ExtendedState:
        if len(self.initial_state) != 5:
            raise ConfigError(f"initial_state needs 5 entries, got {len(self.initial_state)}")
        try:
            return ExtendedState(*(float(v) for v in self.initial_state))
        except (TypeError, ValueError) as err:
            raise ConfigError(f"initial_state: {err}") from None

    def validate(self) -> "ScenarioConfig":
        """Check everything run_scenario would reject; returns self."""
        if self.plant != "mecanum":
            raise ConfigError(f"plant must be mecanum, got {self.plant!r}")
        if not (isinstance(self.dt, (int, float)) and self.dt > 0.0):
            raise ConfigError(f"dt must be positive, got {self.dt!r}")
        if not (isinstance(self.duration, (int, float)) and self.duration > 0.0):
            raise ConfigError(f"duration must be positive, got {self.duration!r}")
        n = round(self.duration / self.dt)
        if n < 1 or abs(self.duration - n * self.dt) > 1e-9 * max(1.0, self.duration):
            raise ConfigError(f"duration {self.duration} is not an integer multiple of dt {self.dt}")
        self.build_reference()
        self.build_controller()
        sched = self.build_schedule()
        try:
            sched.step_indices(self.dt)
        except ValueError as err:
            raise ConfigError(f"schedule: {err}") from None
        s0 = self.build_initial_state()
        if sched.contains_mode(0) and s0.v1 == 0.0:
            raise ConfigError("initial_state: sagittal speed must be nonzero when the schedule "
                              "uses the energy-saving mode (the controller is singular there)")
        self.build_noise()
        return self

    # -- (de)serialization ------------------------------------------------

    @classmethod
    def from_dict(cls, doc: dict) -> "ScenarioConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ConfigError(f"unknown config fields: {sorted(unknown)}")
        kwargs = dict(doc)
        if "noise" in kwargs:
            if not isinstance(kwargs["noise"], dict):
                raise ConfigError("noise must be an object")
            bad = set(kwargs["noise"]) - set(NoiseConfig.__dataclass_fields__)
            if bad:
                raise ConfigError(f"unknown noise fields: {sorted(bad)}")
            kwargs["noise"] = NoiseConfig(**kwargs["noise"])
        return cls(**kwargs).validate()

    @classmethod
    def from_json(cls, text: str) -> "ScenarioConfig":
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as err:
            raise ConfigError(f"invalid JSON at line {err.lineno}, column {err.colno}: {err.msg}") from None
        if not isinstance(doc, dict):
            raise ConfigError("config document must be a JSON object")
        return cls.from_dict(doc)

    @classmethod
    def load(cls, path) -> "ScenarioConfig":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2, sort_keys=True) + "\n"


def bundled_config(name: str) -> ScenarioConfig:
    """Load one of the shipped scenarios by name (see BUNDLED)."""
    if name not in BUNDLED:
        raise ConfigError(f"no bundled config {name!r}; available: {', '.join(BUNDLED)}")
    text = resources.files("dualmode").joinpath(f"configs/{name}.json").read_text(encoding="utf-8")
    return ScenarioConfig.from_json(text)
