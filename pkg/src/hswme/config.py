"""Run configuration and the two benchmark presets."""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field

from .model import BoundaryCondition, Case, Grid, ModelParams

SOLVERS = ("fom", "swe", "pod", "dlra")


@dataclass(frozen=True)
class RunConfig:
    """Flat description of one simulation.

    ``params`` and ``grid`` are derived views; every field can be overridden
    through :func:`override`.
    """

    case: str = Case.DAM_BREAK.value
    solver: str = "fom"
    nx: int = 2000
    x_min: float = -1.0
    x_max: float = 1.0
    bc: str = BoundaryCondition.OUTFLOW.value
    g: float = 9.81
    nu: float = 1.0
    lam: float = 0.5
    n_moments: int = 100
    cfl: float = 0.25
    friction_index: str = "dissipative"
    T: float = 0.2
    rank: int = 5
    stride: int = 1
    train_nu: tuple = (0.1, 10.0)
    output_times: tuple = ()
    output_dir: str = "."

    def __post_init__(self):
        object.__setattr__(self, "case", Case(self.case).value)
        object.__setattr__(self, "bc", BoundaryCondition(self.bc).value)
        object.__setattr__(self, "train_nu", tuple(float(v) for v in self.train_nu))
        object.__setattr__(self, "output_times", tuple(sorted(float(v) for v in self.output_times)))
        if self.solver not in SOLVERS:
            raise ValueError(f"solver must be one of {SOLVERS}, got {self.solver!r}")
        if not self.T > 0:
            raise ValueError("final time must be positive")
        if self.rank < 1:
            raise ValueError("rank must be at least 1")
        if self.stride < 1:
            raise ValueError("stride must be at least 1")
        if any(not 0 < t <= self.T for t in self.output_times):
            raise ValueError("output times must lie in (0, T]")
        # validate the derived objects eagerly
        self.params
        self.grid

    @property
    def params(self) -> ModelParams:
        return ModelParams(g=self.g, nu=self.nu, lam=self.lam, n_moments=self.n_moments,
                           cfl=self.cfl, friction_index=self.friction_index)

    @property
    def grid(self) -> Grid:
        return Grid(self.nx, self.x_min, self.x_max, BoundaryCondition(self.bc))

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["train_nu"] = list(self.train_nu)
        d["output_times"] = list(self.output_times)
        return d

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    @classmethod
    def from_dict(cls, d: dict) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)


PRESETS = {
    "paper-dam-break": RunConfig(
        case="dam-break", bc="outflow", nu=1.0, lam=0.5, train_nu=(0.1, 10.0),
    ),
    "paper-smooth-wave": RunConfig(
        case="smooth-wave", bc="periodic", nu=0.1, lam=0.1, train_nu=(0.01, 1.0),
    ),
}

# short flag names accepted by override()
ALIASES = {"nmoments": "n_moments", "N": "n_moments", "lambda": "lam", "r": "rank"}


def override(cfg: RunConfig, **changes) -> RunConfig:
    """Copy of ``cfg`` with fields replaced; ``None`` values are ignored."""
    clean = {}
    for key, value in changes.items():
        if value is None:
            continue
        clean[ALIASES.get(key, key)] = value
    return RunConfig.from_dict({**cfg.to_dict(), **clean})


def preset(name: str, **changes) -> RunConfig:
    try:
        base = PRESETS[name]
    except KeyError:
        raise ValueError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    return override(base, **changes)


def load_config(path) -> RunConfig:
    with open(path) as f:
        return RunConfig.from_dict(json.load(f))
