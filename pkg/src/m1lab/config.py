"""Run configuration: INI-style sections, presets and round-tripping.

A config file looks like::

    [model]
    name = m1
    alpha = 1.0

    [grid]
    length = auto
    cells = 8192

Unknown sections or keys are rejected so typos surface early.
"""
from __future__ import annotations

import configparser
import hashlib
import io
from dataclasses import asdict, dataclass, field, fields

from .decay import THEOREM_IDS
from .errors import DomainError

SHAPES = ("none", "bump", "dbump")


@dataclass
class ModelConfig:
    name: str = "m1"
    alpha: float = 1.0
    gamma: float = 1.4


@dataclass
class GridConfig:
    length: str = "auto"
    cells: int = 4096
    length_factor: float = 10.0


@dataclass
class StateConfig:
    v_plus: float = 1.0
    u_plus: float = 0.0


@dataclass
class PerturbationConfig:
    v_shape: str = "none"
    v_amplitude: float = 0.0
    v_center: float = 50.0
    v_width: float = 4.0
    u_shape: str = "bump"
    u_amplitude: float = 0.01
    u_center: float = 50.0
    u_width: float = 4.0


@dataclass
class ProfileConfig:
    delta0: str = "auto"
    phi0_center: float = 2.0
    phi0_width: float = 2.0
    m0_support: float = 2.0
    growth: float = 5e-3


@dataclass
class RunSection:
    t_end: float = 100.0
    cfl: float = 0.45
    theta: float = 1.0
    per_decade: int = 32
    t_first: float = 0.1
    seed: int = 0


@dataclass
class DecayConfig:
    theorem: str = "thm2_improved"
    window: str = "auto"
    tolerances: str = ""


@dataclass
class OutputConfig:
    directory: str = "m1lab-out"
    snapshots: bool = False
    svg: bool = True


SECTIONS = {
    "model": ModelConfig, "grid": GridConfig, "state": StateConfig,
    "perturbation": PerturbationConfig, "profile": ProfileConfig, "run": RunSection,
    "decay": DecayConfig, "output": OutputConfig,
}


def _coerce(kind, raw: str):
    if kind is bool or kind == "bool":
        low = raw.strip().lower()
        if low in ("1", "true", "yes", "on"):
            return True
        if low in ("0", "false", "no", "off"):
            return False
        raise DomainError(f"not a boolean: {raw!r}")
    if kind is int or kind == "int":
        return int(raw)
    if kind is float or kind == "float":
        return float(raw)
    return raw.strip()


def _fmt(value) -> str:
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    return str(value)


@dataclass
class RunConfig:
    model: ModelConfig = field(default_factory=ModelConfig)
    grid: GridConfig = field(default_factory=GridConfig)
    state: StateConfig = field(default_factory=StateConfig)
    perturbation: PerturbationConfig = field(default_factory=PerturbationConfig)
    profile: ProfileConfig = field(default_factory=ProfileConfig)
    run: RunSection = field(default_factory=RunSection)
    decay: DecayConfig = field(default_factory=DecayConfig)
    output: OutputConfig = field(default_factory=OutputConfig)
    name: str = "custom"

    def validate(self) -> "RunConfig":
        if self.model.name not in ("m1", "gamma-law"):
            raise DomainError(f"unknown model {self.model.name!r}")
        if self.grid.length != "auto":
            float(self.grid.length)
        if self.profile.delta0 != "auto":
            float(self.profile.delta0)
        for s in (self.perturbation.v_shape, self.perturbation.u_shape):
            if s not in SHAPES:
                raise DomainError(f"perturbation shape must be one of {SHAPES}, got {s!r}")
        if self.decay.theorem not in THEOREM_IDS:
            raise DomainError(f"unknown theorem id {self.decay.theorem!r}")
        self.window()
        self.tolerances()
        if self.run.t_end < 0.0:
            raise DomainError("t_end must be non-negative")
        return self

    def window(self):
        raw = self.decay.window.strip()
        if raw == "auto":
            return None
        lo, hi = (float(p) for p in raw.split(","))
        if not 0.0 <= lo < hi:
            raise DomainError("decay window must satisfy 0 <= t_min < t_max")
        return lo, hi

    def tolerances(self) -> dict:
        out = {}
        for item in filter(None, (p.strip() for p in self.decay.tolerances.split(","))):
            name, _, tol = item.partition("=")
            if not _:
                raise DomainError(f"tolerance entry {item!r} is not name=value")
            out[name.strip()] = float(tol)
        return out

    def to_ini(self) -> str:
        cp = configparser.ConfigParser(interpolation=None)
        cp["meta"] = {"name": self.name}
        for sec in SECTIONS:
            cp[sec] = {k: _fmt(v) for k, v in asdict(getattr(self, sec)).items()}
        buf = io.StringIO()
        cp.write(buf)
        return buf.getvalue()

    def digest(self) -> str:
        return hashlib.sha256(self.to_ini().encode()).hexdigest()


def parse_config(text: str) -> RunConfig:
    cp = configparser.ConfigParser(interpolation=None)
    cp.read_string(text)
    cfg = RunConfig()
    for sec in cp.sections():
        if sec == "meta":
            cfg.name = cp[sec].get("name", cfg.name)
            continue
        if sec not in SECTIONS:
            raise DomainError(f"unknown config section [{sec}]")
        obj = getattr(cfg, sec)
        types = {f.name: f.type for f in fields(obj)}
        for key, raw in cp[sec].items():
            if key not in types:
                raise DomainError(f"unknown key {key!r} in [{sec}]")
            setattr(obj, key, _coerce(types[key], raw))
    return cfg.validate()


def load_config(path) -> RunConfig:
    with open(path) as fh:
        return parse_config(fh.read())


def _preset_m1_small() -> RunConfig:
    # perturbation placed far from the wall so the fit window sees the
    # free-space decay of integrable data
    return RunConfig(
        name="m1-small",
        model=ModelConfig(name="m1", alpha=1.0),
        grid=GridConfig(length="auto", cells=8192),
        state=StateConfig(v_plus=1.0, u_plus=0.02),
        perturbation=PerturbationConfig(u_shape="bump", u_amplitude=0.01, u_center=250.0,
                                        u_width=4.0),
        run=RunSection(t_end=5000.0),
        decay=DecayConfig(theorem="thm2_improved", tolerances="V=0.10, V_x=0.10, z=0.15"),
        output=OutputConfig(directory="m1-small-out"),
    )


def _preset_psystem_faster() -> RunConfig:
    return RunConfig(
        name="psystem-faster",
        model=ModelConfig(name="gamma-law", alpha=1.0, gamma=1.4),
        grid=GridConfig(length="auto", cells=8192),
        state=StateConfig(v_plus=1.0, u_plus=0.0),
        perturbation=PerturbationConfig(u_shape="dbump", u_amplitude=0.01, u_center=320.0,
                                        u_width=4.0),
        run=RunSection(t_end=2000.0),
        decay=DecayConfig(theorem="thm2_faster", tolerances="V=0.12"),
        output=OutputConfig(directory="psystem-faster-out"),
    )


def _preset_lemma21() -> RunConfig:
    return RunConfig(
        name="lemma21",
        model=ModelConfig(name="m1", alpha=1.0),
        grid=GridConfig(length="auto", cells=8192),
        state=StateConfig(v_plus=1.0, u_plus=0.0),
        perturbation=PerturbationConfig(u_shape="none", u_amplitude=0.0),
        profile=ProfileConfig(delta0="0.05"),
        run=RunSection(t_end=1e4, t_first=1.0),
        decay=DecayConfig(theorem="lemma2.1",
                          tolerances="vbar=0.05, vbar_x=0.07, vbar[Linf]=0.07"),
        output=OutputConfig(directory="lemma21-out"),
    )


PRESETS = {
    "m1-small": _preset_m1_small,
    "thm2-improved": _preset_m1_small,
    "psystem-faster": _preset_psystem_faster,
    "lemma21": _preset_lemma21,
}


def preset(name: str) -> RunConfig:
    try:
        return PRESETS[name]().validate()
    except KeyError:
        raise DomainError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
