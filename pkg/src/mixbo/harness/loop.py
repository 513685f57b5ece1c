"""The sequential BO loop and its trace."""
from __future__ import annotations

import csv
import io
import logging
import time
from dataclasses import dataclass, field, replace

import numpy as np

from ..acquisition import (
    MAX_VARIANCE,
    PENALTY_VALUE,
    AcquisitionFunction,
    MafController,
    Proposal,
    optimize_acquisition_kr,
    propose_pr,
)
from ..benchmarks.sobol import seed_skip, sobol_points
from ..benchmarks.truth import Optimum
from ..gp import Dataset, GpModel, GpNumericError, fit_map
from ..kernels import bind
from .config import RunConfig

log = logging.getLogger(__name__)

FALLBACK = "fallback"
SOBOL = "sobol"
INIT = "init"


class RunError(RuntimeError):
    """Unrecoverable numeric failure; ``trace`` holds the records gathered so far."""

    def __init__(self, message, trace):
        super().__init__(message)
        self.trace = trace


@dataclass
class TraceRecord:
    iter: int
    candidate: tuple
    y: float
    best_y: float
    regret: float
    af_kind: str
    seconds: float = 0.0


@dataclass
class RunTrace:
    seed: int
    names: list
    records: list = field(default_factory=list)

    @property
    def candidates(self):
        return [r.candidate for r in self.records]

    @property
    def ys(self) -> np.ndarray:
        return np.array([r.y for r in self.records])

    def to_csv(self, record_time=False) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["seed", "iter", *self.names, "y", "best_y", "regret", "af_kind", "seconds"])
        for r in self.records:
            w.writerow([self.seed, r.iter, *[_fmt(v) for v in r.candidate], _fmt(r.y), _fmt(r.best_y),
                        _fmt(r.regret), r.af_kind, _fmt(r.seconds) if record_time else ""])
        return buf.getvalue()

    def write(self, path, record_time=False):
        with open(path, "w", newline="") as fh:
            fh.write(self.to_csv(record_time))

    @classmethod
    def read(cls, path) -> "RunTrace":
        with open(path, newline="") as fh:
            rows = list(csv.reader(fh))
        header, body = rows[0], rows[1:]
        names = header[2:-5]
        seed = int(body[0][0]) if body else 0
        trace = cls(seed, names)
        for row in body:
            cand = tuple(_parse(v) for v in row[2 : 2 + len(names)])
            y, best, regret = (float(v) for v in row[2 + len(names) : 5 + len(names)])
            sec = row[-1]
            trace.records.append(TraceRecord(int(row[1]), cand, y, best, regret, row[-2], float(sec) if sec else 0.0))
        return trace


def _fmt(v):
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return repr(float(v))


def _parse(s):
    try:
        return int(s)
    except ValueError:
        return float(s)


def _iter_seed(seed: int, t: int) -> int:
    return (int(seed) * 1_000_003 + int(t)) % (2**32)


class _Evaluator:
    """Objective with optional additive Gaussian noise; tracks noiseless regret."""

    def __init__(self, bench, noise_sd, seed, truth: Optimum | None):
        self.bench = bench
        self.noise_sd = noise_sd
        self.rng = np.random.default_rng([int(seed), 7919])
        self.truth = truth
        self.best_y = np.inf
        self.best_true = np.inf

    def __call__(self, cand):
        f = float(self.bench(cand))
        y = f + self.noise_sd * float(self.rng.standard_normal()) if self.noise_sd > 0 else f
        self.best_y = min(self.best_y, y)
        self.best_true = min(self.best_true, f)
        regret = self.best_true - self.truth.value if self.truth is not None else float("nan")
        return y, self.best_y, regret


def _fallback_model(kernel, data, jitter):
    return GpModel.from_hp(kernel, kernel.default_hp(1e-2), data, max(jitter, 1e-4))


def run_bo(config: RunConfig, seed: int, truth: Optimum | None = None, bench=None) -> RunTrace:
    """One seeded run: Sobol initial design followed by the configured acquisitions."""
    bench = bench if bench is not None else config.bench
    if truth is None:
        truth = bench.truth()
    space = bench.space
    init, iters = config.budget
    n_total = init + iters
    U = sobol_points(space.dim, n_total, skip=seed_skip(seed, n_total))
    design = space.from_unit(U)
    evaluate = _Evaluator(bench, config.noise_sd, seed, truth)
    trace = RunTrace(seed, space.names)
    X, y = [], []

    def record(point, it, kind, t0):
        cand = space.denormalize(point)
        yv, best, regret = evaluate(cand)
        X.append(np.asarray(point, dtype=float))
        y.append(yv)
        trace.records.append(TraceRecord(it, cand, yv, best, regret, kind, time.perf_counter() - t0))

    af_kind, kernel_name = config.af_kind, config.kernel_preset
    for j in range(init):
        record(design[j], j - init + 1, INIT, time.perf_counter())
    if af_kind is None:
        for t in range(1, iters + 1):
            record(design[init + t - 1], t, SOBOL, time.perf_counter())
        return trace

    kernel = bind(kernel_name, space)
    is_kr = kernel.spec.rounding == "kr"
    maf = MafController(af_kind, config.effective_maf_threshold)
    for t in range(1, iters + 1):
        t0 = time.perf_counter()
        try:
            point, kind = _propose(config, kernel, space, maf, X, y, seed, t, is_kr)
        except (GpNumericError, np.linalg.LinAlgError, FloatingPointError) as exc:
            raise RunError(f"seed {seed} iter {t}: {exc}", trace) from exc
        record(point, t, kind, t0)
    return trace


def _propose(config, kernel, space, maf, X, y, seed, t, is_kr):
    it_seed = _iter_seed(seed, t)
    Xa = np.array(X)
    data = Dataset(Xa, np.array(y))
    kind = maf.next_kind
    flagged = False
    fit = config.fit
    try:
        model = fit_map(kernel, data, space, replace(fit, noise_init=config.noise_init, seed=fit.seed + it_seed))
    except GpNumericError:
        log.warning("seed %d iter %d: surrogate fit failed, exploring instead", seed, t)
        model = _fallback_model(kernel, data, fit.jitter)
        kind, flagged = MAX_VARIANCE, True
    sampled = Xa if config.penalty else None
    af = AcquisitionFunction(model, kind, config.lcb_weight, sampled=sampled,
                             penalty_value=PENALTY_VALUE if config.penalty else None)
    if is_kr:
        point, value = optimize_acquisition_kr(af, space, seed=it_seed)
        point = space.snap(point)
        proposal = Proposal(point, space.denormalize(point), value, kind, kind == MAX_VARIANCE,
                            space.min_distance(point, Xa))
    else:
        proposal = propose_pr(af, space, config.pr, it_seed, used_exploration=kind == MAX_VARIANCE)
    maf.observe(proposal)
    return proposal.point, FALLBACK if flagged else kind
