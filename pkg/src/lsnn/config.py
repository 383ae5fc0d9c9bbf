"""Run configuration as a flat ``key = value`` text file.

Lines look like ``h = 0.02`` with optional ``# comments``.  Unknown keys and
unparsable values are rejected with the offending line number.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .network import NetworkShape
from .optim import TrainSchedule
from .problems import PROBLEMS, get_problem
from .quadrature import MeshError, _cells_per_side


class ConfigError(ValueError):
    pass


# (unit, help) per key, also used to render the defaults listing
_DOCS = {
    "problem": ("id", "benchmark identifier, one of: " + ", ".join(PROBLEMS)),
    "shape": ("widths", "network structure d-n1-...-1"),
    "h": ("length", "midpoint mesh size, must divide every box side"),
    "rho": ("length", "difference-quotient step; 'auto' means h/4"),
    "initial_lr": ("1", "ADAM learning rate at iteration 0"),
    "halving_period": ("iterations", "learning rate halves every this many iterations"),
    "total_iters": ("iterations", "iterations of the selected run, warm-up included"),
    "warmup_restarts": ("runs", "independent warm-up runs"),
    "warmup_iters": ("iterations", "length of each warm-up run"),
    "seed": ("1", "base seed; warm-up run r uses seed + r"),
    "output_dir": ("path", "directory for all artifacts"),
    "deterministic": ("bool", "fixed-order gradient reduction"),
    "checkpoint_every": ("iterations", "parameter checkpoint period"),
    "chunk_size": ("points", "batch chunk for the gradient reduction; 0 = no chunking"),
    "n_jobs": ("threads", "threads for chunked gradient reduction"),
}


@dataclass(frozen=True)
class RunConfig:
    """One training run.  Defaults follow the published protocol (full scale)."""

    problem: str = "2d-three-segment"
    shape: str = "2-5-5-1"
    h: float = 0.01
    rho: float | None = None
    initial_lr: float = 0.004
    halving_period: int = 50000
    total_iters: int = 200000
    warmup_restarts: int = 10
    warmup_iters: int = 5000
    seed: int = 0
    output_dir: str = "runs/default"
    deterministic: bool = True
    checkpoint_every: int = 10000
    chunk_size: int = 0
    n_jobs: int = 1

    @property
    def rho_value(self) -> float:
        return self.h / 4.0 if self.rho is None else self.rho

    @property
    def network_shape(self) -> NetworkShape:
        return NetworkShape.parse(self.shape)

    def schedule(self) -> TrainSchedule:
        return TrainSchedule(self.initial_lr, self.halving_period, self.total_iters,
                             self.warmup_restarts, self.warmup_iters)

    def validate(self) -> "RunConfig":
        if self.problem not in PROBLEMS:
            raise ConfigError(f"problem: unknown id {self.problem!r}; choose from {', '.join(PROBLEMS)}")
        prob = get_problem(self.problem)
        try:
            shape = self.network_shape
        except ValueError as exc:
            raise ConfigError(f"shape: {exc}") from None
        if shape.input_dim != prob.dim:
            raise ConfigError(f"shape: input width {shape.input_dim} but problem "
                              f"{self.problem} is {prob.dim}-dimensional")
        try:
            _cells_per_side(prob.box, self.h)
        except MeshError as exc:
            raise ConfigError(f"h: {exc}") from None
        if self.rho is not None and self.rho <= 0:
            raise ConfigError("rho: must be positive")
        try:
            self.schedule()
        except ValueError as exc:
            raise ConfigError(f"schedule: {exc}") from None
        if self.checkpoint_every <= 0 or self.n_jobs < 1 or self.chunk_size < 0:
            raise ConfigError("checkpoint_every and n_jobs must be positive, chunk_size >= 0")
        return self

    def to_text(self) -> str:
        lines = []
        for fld in fields(self):
            value = getattr(self, fld.name)
            unit, text = _DOCS[fld.name]
            if fld.name == "rho" and value is None:
                value = "auto"
            elif isinstance(value, bool):
                value = "true" if value else "false"
            elif isinstance(value, float):
                value = repr(value)
            lines.append(f"{fld.name} = {value}  # [{unit}] {text}")
        return "\n".join(lines) + "\n"


def _coerce(name: str, raw: str, lineno: int):
    kind = {f.name: f.type for f in fields(RunConfig)}[name]
    raw = raw.strip()
    try:
        if name == "rho":
            return None if raw.lower() in ("auto", "none", "") else float(raw)
        if kind == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if kind == "int":
            return int(raw)
        if kind == "float":
            return float(raw)
        return raw
    except ValueError:
        raise ConfigError(f"line {lineno}: cannot parse {name} = {raw!r} as {kind}") from None


def parse_config(text: str, base: RunConfig | None = None) -> RunConfig:
    values = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, raw = (part.strip() for part in line.split("=", 1))
        if key not in _DOCS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        values[key] = _coerce(key, raw, lineno)
    return replace(base or RunConfig(), **values)


def load_config(path) -> RunConfig:
    return parse_config(Path(path).read_text())


def apply_overrides(cfg: RunConfig, pairs) -> RunConfig:
    """Apply ``key=value`` strings (from the command line) to ``cfg``."""
    return parse_config("\n".join(pairs), cfg)


def preset(problem: str, scale: str = "desk", shape: str | None = None) -> RunConfig:
    """Default configuration for a catalog problem.

    ``desk``: h = 1/50 (1/40 for the cylinder), 10 x 2000 warm-up, 60000
    iterations.  ``full``: h = 1/100, 10 x 5000 warm-up and the iteration
    count reported for that problem.
    """
    prob = get_problem(problem)
    shape = shape or prob.shapes[0]
    if scale == "desk":
        h = 0.025 if problem == "3d-cylinder" else 0.02
        return RunConfig(problem=problem, shape=shape, h=h, total_iters=60000,
                         warmup_restarts=10, warmup_iters=2000,
                         output_dir=f"runs/{problem}/{shape}")
    if scale == "full":
        return RunConfig(problem=problem, shape=shape, h=0.01,
                         total_iters=prob.published_iters, warmup_restarts=10,
                         warmup_iters=5000, output_dir=f"runs/{problem}/{shape}")
    raise ConfigError(f"unknown preset {scale!r} (use 'desk' or 'full')")


def as_dict(cfg: RunConfig) -> dict:
    return asdict(cfg)
