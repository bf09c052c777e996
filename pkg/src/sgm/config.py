"""Run configuration: initial-condition specs, solver and scan settings.

The JSON form round-trips exactly (parse(serialize(c)) == c); every CLI
flag mirrors one of these paths and wins over the file value.
"""

import json
from dataclasses import asdict, dataclass, field, replace

import numpy as np

from . import fields
from .singular import Thresholds
from .solver import SolverConfig


@dataclass(frozen=True)
class RunConfig:
    ic: str = "mode:1,0.5"
    n_grid: int = 128
    tau: float = 1e-3
    t_end: float = 0.2
    picard_tol: float = 1e-12
    picard_max_iter: int = 200
    step_halving_max: int = 8
    dealias: bool = True
    nonlinear: bool = True
    eps0: float = 0.02
    eps1: float = 0.05
    eps2: float = 0.3
    R0: float = 0.5
    r_scan: tuple = (0.45, 0.35, 0.25)
    x_stride: int = 8
    t_count: int = 5
    deltas: tuple = ()
    output_dir: str = "sgm-out"

    def to_dict(self):
        d = asdict(self)
        d["r_scan"] = list(self.r_scan)
        d["deltas"] = list(self.deltas)
        return d

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        if "r_scan" in d:
            d["r_scan"] = tuple(d["r_scan"])
        if "deltas" in d:
            d["deltas"] = tuple(d["deltas"])
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_json(f.read())

    def override(self, **kwargs):
        return replace(self, **{k: v for k, v in kwargs.items() if v is not None})

    def solver_config(self):
        return SolverConfig(tau=self.tau, t_end=self.t_end,
                            picard_tol=self.picard_tol,
                            picard_max_iter=self.picard_max_iter,
                            step_halving_max=self.step_halving_max,
                            dealias=self.dealias, nonlinear=self.nonlinear)

    def thresholds(self):
        return Thresholds(eps0=self.eps0, eps1=self.eps1, eps2=self.eps2,
                          R0=self.R0, r_scan=self.r_scan)

    def initial_condition(self):
        return build_initial_condition(self.ic, self.n_grid)


def build_initial_condition(spec, n_grid):
    """Parse an initial-condition spec into a mean-zero field.

    Accepted forms: ``mode:k,amp`` for amp*cos(k x); ``random:seed,n_modes,amp``
    for a seeded random trigonometric polynomial; ``file:path`` for the first
    frame of an SGT1 file or a plain-text sample column.
    """
    kind, _, rest = spec.partition(":")
    try:
        if kind == "mode":
            k_str, amp_str = rest.split(",")
            return fields.cosine_mode(n_grid, int(k_str), float(amp_str))
        if kind == "random":
            seed_s, modes_s, amp_s = rest.split(",")
            rng = np.random.default_rng(int(seed_s))
            return fields.random_field(n_grid, n_modes=int(modes_s),
                                       amp=float(amp_s), rng=rng)
        if kind == "file":
            return _load_ic_file(rest, n_grid)
    except (ValueError, OSError) as exc:
        raise ValueError(f"bad initial-condition spec {spec!r}: {exc}") from None
    raise ValueError(f"bad initial-condition spec {spec!r}")


def _load_ic_file(path, n_grid):
    if path.endswith(".sgt1"):
        from .sgt1 import read_sgt1
        traj, _ = read_sgt1(path)
        f = traj.frame(0)
    else:
        samples = np.loadtxt(path)
        f = fields.from_samples(samples)
    if f.n_grid != n_grid:
        f = fields.resample(f, n_grid)
    if not f.is_mean_zero:
        raise ValueError(f"initial data from {path} has mean {f.mean:.3e}")
    return f
