"""Optimal linearization of deformation paths over a shared knot vector.

Single-path linearization minimizes the squared worst per-segment deviation;
assemblies minimize the mean of the squared worst deviations over the paths
flagged as outliers (those more than one standard deviation above the mean).
Both problems run on a real-valued genetic algorithm with feasibility repair,
since gradient-based solvers tend to stall in local minima of these
max-distance objectives.
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .collapse import TraceSet
from .errors import InvalidInputError
from .geometry import TimedPath, max_deviation

__all__ = [
    "EPS_GAP",
    "ParamVector",
    "DeviationReport",
    "GAConfig",
    "LinearizedPathSet",
    "eval_E_dev",
    "eval_E_ass",
    "ga_minimize",
    "optimize_single",
    "optimize_synchronized",
    "select_n",
    "linearize",
]

# minimal knot separation; realizes the ordering constraints of the
# optimization problems and prevents zero-length segments
EPS_GAP = 1e-3


@dataclass(frozen=True)
class ParamVector:
    """Interior knots t_1 < ... < t_n; boundary values 0 and 1 are implicit."""

    knots: np.ndarray

    def __post_init__(self):
        t = np.atleast_1d(np.asarray(self.knots, dtype=float))
        if t.ndim != 1 or t.size < 1:
            raise InvalidInputError("knot vector needs at least one interior knot")
        full = np.concatenate([[0.0], t, [1.0]])
        if np.any(np.diff(full) < EPS_GAP * (1.0 - 1e-9)):
            raise InvalidInputError(
                f"knots must be separated by at least {EPS_GAP} and stay inside (0, 1)"
            )
        object.__setattr__(self, "knots", t)

    @property
    def n(self) -> int:
        return int(self.knots.size)

    @property
    def full(self) -> np.ndarray:
        return np.concatenate([[0.0], self.knots, [1.0]])


@dataclass(frozen=True)
class DeviationReport:
    """Worst deviations per path plus the outlier selection used by E_ass."""

    d_max: np.ndarray  # (m,) worst deviation per path
    mu: float
    sigma: float
    beta: np.ndarray  # (m,) 0/1 outlier flags
    k: int
    energy: float

    @property
    def m(self) -> int:
        return int(self.d_max.size)


@dataclass(frozen=True)
class GAConfig:
    """Genetic-algorithm settings; defaults sized for desk-scale problems."""

    population: int = 60
    generations: int = 150
    crossover_rate: float = 0.9
    mutation_scale: float = 0.08
    elite: int = 2
    seed: int = 0
    restarts: int = 3

    def __post_init__(self):
        if self.population < 4:
            raise InvalidInputError("population must be at least 4")
        if self.generations < 1:
            raise InvalidInputError("need at least one generation")
        if not 0.0 <= self.crossover_rate <= 1.0:
            raise InvalidInputError("crossover rate must lie in [0, 1]")
        if self.elite < 0 or self.elite >= self.population:
            raise InvalidInputError("elite count must be < population")
        if self.restarts < 1:
            raise InvalidInputError("need at least one restart")


@dataclass(frozen=True)
class OptimizeResult:
    """Best knot vector found, its energy, and the deviation report."""

    knots: ParamVector
    energy: float
    report: DeviationReport
    converged: bool = True


@dataclass(frozen=True)
class SweepResult:
    """Outcome of the vertex-count sweep sqrt(E_ass) < r."""

    n: int
    knots: ParamVector
    energy: float
    report: DeviationReport
    sweep: list
    threshold_met: bool


@dataclass
class LinearizedPathSet:
    """Per-path vertices at the shared knots, with the deviation report."""

    knots: np.ndarray  # full knot times including 0 and 1
    node_refs: list
    positions: np.ndarray  # (m, n+2, 3)
    report: DeviationReport
    provenance: dict = field(default_factory=dict)

    def __post_init__(self):
        self.knots = np.asarray(self.knots, dtype=float)
        self.positions = np.asarray(self.positions, dtype=float)
        if self.knots.ndim != 1 or self.knots[0] != 0.0 or self.knots[-1] != 1.0:
            raise InvalidInputError("knot times must run from 0 to 1")
        if np.any(np.diff(self.knots) <= 0.0):
            raise InvalidInputError("knot times must be strictly increasing")
        m = len(self.node_refs)
        if self.positions.shape != (m, len(self.knots), 3):
            raise InvalidInputError("positions must be (paths, knots, 3)")

    @property
    def n(self) -> int:
        return len(self.knots) - 2


def _paths_of(paths) -> list:
    if isinstance(paths, TraceSet):
        return paths.paths
    return list(paths)


def _dmax_per_path(paths: list, interior: np.ndarray) -> np.ndarray:
    return np.array([max_deviation(p, interior)[1] for p in paths])


def eval_E_dev(path: TimedPath, knots) -> tuple[float, DeviationReport]:
    """Single-path energy: the square of the biggest per-segment deviation."""
    interior = knots.knots if isinstance(knots, ParamVector) else np.asarray(knots, dtype=float)
    _, dmax = max_deviation(path, interior)
    report = DeviationReport(
        d_max=np.array([dmax]),
        mu=dmax,
        sigma=0.0,
        beta=np.array([1]),
        k=1,
        energy=dmax**2,
    )
    return dmax**2, report


def _assemble_report(dmax: np.ndarray) -> DeviationReport:
    mu = float(dmax.mean())
    sigma = float(dmax.std())  # population standard deviation
    beta = (dmax - mu >= sigma).astype(int)
    k = int(beta.sum())
    if k == 0:
        # never fail on an empty selection: punish the single worst path
        beta = np.zeros_like(beta)
        beta[int(np.argmax(dmax))] = 1
        k = 1
    energy = float(np.sum((beta * dmax) ** 2) / k)
    return DeviationReport(d_max=dmax, mu=mu, sigma=sigma, beta=beta, k=k, energy=energy)


def eval_E_ass(paths, knots) -> tuple[float, DeviationReport]:
    """Assembly energy: mean squared worst deviation over the flagged paths."""
    plist = _paths_of(paths)
    if not plist:
        raise InvalidInputError("need at least one path")
    interior = knots.knots if isinstance(knots, ParamVector) else np.asarray(knots, dtype=float)
    report = _assemble_report(_dmax_per_path(plist, interior))
    return report.energy, report


def _pava_nondecreasing(y: np.ndarray) -> np.ndarray:
    """Pool-adjacent-violators projection onto nondecreasing sequences."""
    vals = y.astype(float).copy()
    weights = np.ones_like(vals)
    n = len(vals)
    out_v, out_w = [], []
    for i in range(n):
        v, w = vals[i], weights[i]
        while out_v and out_v[-1] > v:
            pv, pw = out_v.pop(), out_w.pop()
            v = (pv * pw + v * w) / (pw + w)
            w += pw
        out_v.append(v)
        out_w.append(w)
    res = np.empty(n)
    i = 0
    for v, w in zip(out_v, out_w):
        res[i : i + int(w)] = v
        i += int(w)
    return res


def repair(genome: np.ndarray) -> np.ndarray:
    """Project a genome to the feasible set: sorted, gap-separated, in (0, 1).

    Sorts the knots, then applies the minimal monotone projection in the
    gap-shifted coordinates u_i = t_i - i * EPS_GAP.
    """
    t = np.sort(np.asarray(genome, dtype=float))
    n = len(t)
    idx = np.arange(1, n + 1)
    u = t - idx * EPS_GAP
    u = _pava_nondecreasing(u)
    u = np.clip(u, 0.0, 1.0 - (n + 1) * EPS_GAP)
    u = _pava_nondecreasing(u)
    return u + idx * EPS_GAP


def ga_minimize(fitness, n: int, bounds=(0.0, 1.0), config: GAConfig | None = None, seed_genomes=()):
    """Real-valued GA: tournament selection, blend crossover, Gaussian mutation.

    Every genome is repaired to feasibility before evaluation. Deterministic
    for a given config seed. Returns (best genome, best fitness).
    """
    if n < 1:
        raise InvalidInputError("need at least one knot")
    cfg = config or GAConfig()
    rng = np.random.default_rng(cfg.seed)
    lo, hi = bounds

    pop = [repair(np.sort(rng.uniform(lo, hi, n))) for _ in range(cfg.population)]
    for k, g in enumerate(seed_genomes):
        g = np.asarray(g, dtype=float)
        if g.shape == (n,) and k < cfg.population:
            pop[k] = repair(g)
    fit = np.array([fitness(g) for g in pop])

    tournament = 3
    alpha = 0.3  # blend-crossover expansion

    for _ in range(cfg.generations):
        order = np.argsort(fit, kind="stable")
        pop = [pop[i] for i in order]
        fit = fit[order]
        next_pop = [pop[i].copy() for i in range(cfg.elite)]
        while len(next_pop) < cfg.population:
            picks = rng.integers(0, cfg.population, (2, tournament))
            pa = pop[picks[0].min()]
            pb = pop[picks[1].min()]
            if rng.random() < cfg.crossover_rate:
                lo_g = np.minimum(pa, pb)
                hi_g = np.maximum(pa, pb)
                span = hi_g - lo_g
                child = rng.uniform(lo_g - alpha * span, hi_g + alpha * span)
            else:
                child = pa.copy()
            mutate = rng.random(n) < 0.5
            child = np.where(mutate, child + rng.normal(0.0, cfg.mutation_scale, n), child)
            next_pop.append(repair(np.clip(child, lo, hi)))
        pop = next_pop
        fit = np.array([fitness(g) for g in pop])

    best = int(np.argmin(fit))
    return pop[best].copy(), float(fit[best])


def _best_of_restarts(fitness_factory, n, cfg, seed_genomes):
    best_g, best_f = None, np.inf
    for r in range(cfg.restarts):
        run_cfg = replace(cfg, seed=cfg.seed + r)
        g, f = ga_minimize(fitness_factory, n, config=run_cfg, seed_genomes=seed_genomes)
        if f < best_f:
            best_g, best_f = g, f
    return best_g, best_f


def _uniform_knots(n: int) -> np.ndarray:
    return np.arange(1, n + 1) / (n + 1)


def optimize_single(path: TimedPath, n: int, config: GAConfig | None = None) -> OptimizeResult:
    """Find interior knots minimizing the single-path deviation energy."""
    if n < 1:
        raise InvalidInputError("need at least one interior knot")
    cfg = config or GAConfig()

    def fitness(genome):
        return max_deviation(path, genome)[1] ** 2

    seeds = [_uniform_knots(n)]
    best_g, best_f = _best_of_restarts(fitness, n, cfg, seeds)
    uni = repair(_uniform_knots(n))
    f_uni = fitness(uni)
    if f_uni < best_f:
        best_g, best_f = uni, f_uni
    energy, report = eval_E_dev(path, best_g)
    return OptimizeResult(knots=ParamVector(best_g), energy=energy, report=report)


def optimize_synchronized(
    paths, n: int, config: GAConfig | None = None, seed_genomes=()
) -> OptimizeResult:
    """Find one shared knot vector minimizing the assembly energy."""
    if n < 1:
        raise InvalidInputError("need at least one interior knot")
    plist = _paths_of(paths)
    if not plist:
        raise InvalidInputError("need at least one path")
    cfg = config or GAConfig()

    def fitness(genome):
        return _assemble_report(_dmax_per_path(plist, genome)).energy

    seeds = [_uniform_knots(n)] + [np.asarray(g, dtype=float) for g in seed_genomes]
    best_g, best_f = _best_of_restarts(fitness, n, cfg, seeds)
    for cand in seeds:
        if cand.shape != (n,):
            continue
        cand = repair(cand)
        f = fitness(cand)
        if f < best_f:
            best_g, best_f = cand, f
    energy, report = eval_E_ass(plist, best_g)
    return OptimizeResult(knots=ParamVector(best_g), energy=energy, report=report)


def _worst_segment_midpoint(paths, knots: np.ndarray) -> float:
    """Mid-time of the worst segment of the worst path (for knot insertion)."""
    plist = _paths_of(paths)
    full = np.concatenate([[0.0], knots, [1.0]])
    worst_t, worst_d = 0.5, -1.0
    for p in plist:
        d, dmax = max_deviation(p, knots)
        if dmax > worst_d:
            worst_d = dmax
            i = int(np.argmax(d))
            worst_t = 0.5 * (full[i] + full[i + 1])
    return worst_t


def select_n(
    paths, r: float, n_max: int = 15, config: GAConfig | None = None
) -> SweepResult:
    """Increase the knot count until sqrt(E_ass) falls below the thickness r.

    Runs the synchronized optimization for n = 1, 2, ... and stops at the
    first n with sqrt(E_ass) < r, or at n_max. Each n warm-starts from the
    previous optimum with one knot inserted in its worst segment. Returns
    the chosen n, its knots, and the full (n, E_ass) sweep.
    """
    if not r > 0.0:
        raise InvalidInputError("thickness threshold r must be positive")
    if n_max < 1:
        raise InvalidInputError("n_max must be at least 1")
    cfg = config or GAConfig()
    plist = _paths_of(paths)

    sweep = []
    best = None
    warm = []
    for n in range(1, n_max + 1):
        res = optimize_synchronized(plist, n, cfg, seed_genomes=warm)
        sweep.append((n, res.energy))
        if best is None or res.energy < best.energy:
            best = res
        t_new = _worst_segment_midpoint(plist, res.knots.knots)
        warm = [np.sort(np.append(res.knots.knots, t_new))]
        if np.sqrt(res.energy) < r:
            return SweepResult(
                n=n,
                knots=res.knots,
                energy=res.energy,
                report=res.report,
                sweep=sweep,
                threshold_met=True,
            )
    return SweepResult(
        n=best.knots.n,
        knots=best.knots,
        energy=best.energy,
        report=best.report,
        sweep=sweep,
        threshold_met=False,
    )


def linearize(trace: TraceSet, knots: ParamVector, provenance: dict | None = None) -> LinearizedPathSet:
    """Sample every traced path at the shared knots."""
    full = knots.full
    positions = np.array([p.at(full) for p in trace.paths])
    energy, report = eval_E_ass(trace, knots)
    return LinearizedPathSet(
        knots=full,
        node_refs=list(trace.node_refs),
        positions=positions,
        report=report,
        provenance=provenance or {},
    )
