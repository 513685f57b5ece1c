"""Run configuration: a JSON document, validated up front."""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field, fields

from ..acquisition import EI, LCB
from ..benchmarks import UnknownBenchmark, get_benchmark
from ..gp import FitSettings
from ..kernels import PRESETS, KernelError, bind
from ..reparam import PrSettings

SOBOL_PRESET = "SOBOL_off"
AF_PREFIXES = {"ei": EI, "lcb": LCB}


class ConfigError(ValueError):
    """Invalid or inconsistent configuration (usage error)."""


def parse_preset(name: str):
    """``'ei_BOSS_on_gam_Mat52' -> ('EI', 'BOSS_on_gam_Mat52')``; Sobol baseline gives ``(None, None)``."""
    if name == SOBOL_PRESET:
        return None, None
    prefix, _, kernel = name.partition("_")
    if prefix.lower() not in AF_PREFIXES or kernel not in PRESETS:
        raise ConfigError(f"unknown model preset {name!r}; expected <ei|lcb>_<kernel> with kernel in {sorted(PRESETS)} or {SOBOL_PRESET}")
    return AF_PREFIXES[prefix.lower()], kernel


def parse_seeds(value) -> list[int]:
    """Seed list from a list, an int, or a range string like ``'0..9'``."""
    if isinstance(value, int):
        return [value]
    if isinstance(value, str):
        m = re.fullmatch(r"\s*(\d+)\s*\.\.\s*(\d+)\s*", value)
        if m:
            a, b = int(m.group(1)), int(m.group(2))
            if b < a:
                raise ConfigError(f"empty seed range {value!r}")
            return list(range(a, b + 1))
        try:
            return [int(tok) for tok in value.split(",") if tok.strip()]
        except ValueError:
            raise ConfigError(f"cannot parse seeds {value!r}") from None
    try:
        return [int(s) for s in value]
    except (TypeError, ValueError):
        raise ConfigError(f"cannot parse seeds {value!r}") from None


@dataclass
class RunConfig:
    benchmark: str
    preset: str
    seeds: list = field(default_factory=lambda: list(range(10)))
    init_points: int | None = None
    iter_budget: int | None = None
    penalty: bool = True
    maf: bool = False
    maf_threshold: float | None = None
    lcb_weight: float = 2.0
    noise_sd: float = 0.0
    noise_init: float = 1e-3
    pr: PrSettings = field(default_factory=PrSettings)
    fit: FitSettings = field(default_factory=FitSettings)
    output_dir: str = "runs"
    record_time: bool = False

    def __post_init__(self):
        self.seeds = parse_seeds(self.seeds)
        if isinstance(self.pr, dict):
            self.pr = _build(PrSettings, self.pr, "pr")
        if isinstance(self.fit, dict):
            self.fit = _build(FitSettings, self.fit, "fit")
        self.validate()

    # -- derived ---------------------------------------------------------------

    @property
    def bench(self):
        return get_benchmark(self.benchmark)

    @property
    def af_kind(self):
        return parse_preset(self.preset)[0]

    @property
    def kernel_preset(self):
        return parse_preset(self.preset)[1]

    @property
    def budget(self) -> tuple[int, int]:
        init, iters = self.bench.budget
        return (self.init_points if self.init_points is not None else init,
                self.iter_budget if self.iter_budget is not None else iters)

    @property
    def effective_maf_threshold(self) -> float | None:
        if not self.maf:
            return None
        if self.maf_threshold is not None:
            return self.maf_threshold
        return getattr(self.bench, "maf_threshold", 0.1)

    @property
    def run_label(self) -> str:
        tag = self.preset
        if self.af_kind is not None:
            tag += "_penalty" if self.penalty else "_nopenalty"
            if self.maf:
                tag += "_maf"
        return f"{self.benchmark}__{tag}"

    def validate(self):
        try:
            bench = get_benchmark(self.benchmark)
        except UnknownBenchmark:
            raise ConfigError(f"unknown benchmark {self.benchmark!r}") from None
        _, kernel = parse_preset(self.preset)
        if kernel is not None:
            try:
                bind(kernel, bench.space)
            except KernelError as exc:
                raise ConfigError(f"preset {self.preset!r} is not valid for {self.benchmark}: {exc}") from None
        if not self.seeds or any(s < 0 for s in self.seeds):
            raise ConfigError("seeds must be a non-empty list of non-negative integers")
        init, iters = self.budget
        if init < 1 or iters < 0:
            raise ConfigError("init_points must be >= 1 and iter_budget >= 0")
        if kernel is not None and init < 2:
            raise ConfigError("model-based runs need at least 2 initial points")
        if self.noise_sd < 0 or self.lcb_weight <= 0 or self.noise_init <= 0:
            raise ConfigError("noise_sd must be >= 0, lcb_weight and noise_init > 0")
        if self.maf_threshold is not None and self.maf_threshold <= 0:
            raise ConfigError("maf_threshold must be positive")

    # -- io -------------------------------------------------------------------

    def to_dict(self) -> dict:
        d = asdict(self)
        return d

    @classmethod
    def from_dict(cls, data: dict) -> "RunConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        for key in ("benchmark", "preset"):
            if key not in data:
                raise ConfigError(f"config is missing {key!r}")
        try:
            return cls(**data)
        except TypeError as exc:
            raise ConfigError(str(exc)) from None

    @classmethod
    def load(cls, path) -> "RunConfig":
        try:
            with open(path) as fh:
                data = json.load(fh)
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read config {path}: {exc}") from None
        return cls.from_dict(data)

    def dump(self, path):
        with open(path, "w") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")


def _build(cls, data: dict, section: str):
    known = {f.name for f in fields(cls)}
    unknown = set(data) - known
    if unknown:
        raise ConfigError(f"unknown keys in {section!r}: {sorted(unknown)}")
    return cls(**data)
