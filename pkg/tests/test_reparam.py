import itertools

import numpy as np
import pytest

from gridguide.errors import InvalidInputError
from gridguide.geometry import TimedPath, max_deviation
from gridguide.models import dome_traceset
from gridguide.reparam import (
    EPS_GAP,
    GAConfig,
    ParamVector,
    eval_E_ass,
    eval_E_dev,
    ga_minimize,
    linearize,
    optimize_single,
    optimize_synchronized,
    repair,
    select_n,
)

FAST_GA = GAConfig(population=30, generations=60, restarts=2, seed=0)


def arc_path(angle=2.0, n=500, radius=1.0):
    t = np.linspace(0.0, 1.0, n)
    phi = angle * t
    pts = np.column_stack([radius * np.cos(phi), radius * np.sin(phi), np.zeros(n)])
    return TimedPath(pts, t)


def synthetic_paths(dmax_targets):
    """Paths whose single-chord worst deviations are the given values.

    Each is a symmetric triangle-wave bump of the requested height, so with
    no interior knots d_max equals the bump height exactly.
    """
    t = np.linspace(0.0, 1.0, 201)
    bump = 1.0 - np.abs(2.0 * t - 1.0)
    paths = []
    for h in dmax_targets:
        pts = np.column_stack([t, h * bump, np.zeros_like(t)])
        paths.append(TimedPath(pts, t))
    return paths


class TestParamVector:
    def test_valid(self):
        pv = ParamVector(np.array([0.2, 0.5, 0.8]))
        assert pv.n == 3
        assert np.allclose(pv.full, [0.0, 0.2, 0.5, 0.8, 1.0])

    def test_gap_violation_rejected(self):
        with pytest.raises(InvalidInputError):
            ParamVector(np.array([0.5, 0.5 + EPS_GAP / 2]))

    def test_boundary_gap_enforced(self):
        with pytest.raises(InvalidInputError):
            ParamVector(np.array([EPS_GAP / 4]))

    def test_unsorted_rejected(self):
        with pytest.raises(InvalidInputError):
            ParamVector(np.array([0.8, 0.2]))


class TestEnergies:
    def test_E_dev_is_squared_worst_deviation(self):
        path = arc_path()
        knots = [0.4, 0.7]
        _, dmax = max_deviation(path, knots)
        e, report = eval_E_dev(path, knots)
        assert e == pytest.approx(dmax**2)
        assert report.k == 1

    def test_E_ass_all_equal_paths(self):
        # d_max = (1, 1, 1): sigma = 0, all flagged, energy = 1
        paths = synthetic_paths([1.0, 1.0, 1.0])
        e, report = eval_E_ass(paths, [])
        assert e == pytest.approx(1.0, rel=1e-9)
        assert report.k == 3
        assert np.array_equal(report.beta, [1, 1, 1])

    def test_E_ass_single_outlier(self):
        # d_max = (0.1, 0.1, 0.4): mu = 0.2, sigma = sqrt(0.02) ~ 0.1414,
        # only the third path satisfies d - mu >= sigma, so energy = 0.16
        paths = synthetic_paths([0.1, 0.1, 0.4])
        e, report = eval_E_ass(paths, [])
        assert report.mu == pytest.approx(0.2, rel=1e-6)
        assert report.sigma == pytest.approx(np.sqrt(0.02), rel=1e-6)
        assert np.array_equal(report.beta, [0, 0, 1])
        assert report.k == 1
        assert e == pytest.approx(0.16, rel=1e-5)

    def test_E_ass_empty_selection_falls_back_to_worst(self):
        # a spread with no value one sigma above the mean
        paths = synthetic_paths([0.1, 0.2, 0.3])
        e, report = eval_E_ass(paths, [])
        assert report.k == 1
        assert int(np.argmax(report.beta)) == 2
        assert e == pytest.approx(0.3**2, rel=1e-5)

    def test_single_path_assembly_reduces_to_E_dev(self):
        path = arc_path()
        knots = [0.3, 0.6]
        e_ass, _ = eval_E_ass([path], knots)
        e_dev, _ = eval_E_dev(path, knots)
        assert abs(e_ass - e_dev) <= 1e-12

    def test_permutation_invariance(self):
        paths = synthetic_paths([0.05, 0.2, 0.45, 0.1])
        knots = [0.25, 0.75]
        base, _ = eval_E_ass(paths, knots)
        for perm in itertools.permutations(range(4)):
            e, _ = eval_E_ass([paths[i] for i in perm], knots)
            assert e == pytest.approx(base, rel=1e-12)

    def test_scale_equivariance(self):
        # scaling all geometry by c scales the energy by c^2
        paths = synthetic_paths([0.1, 0.3, 0.6])
        scaled = [TimedPath(p.vertices * 2.5, p.times) for p in paths]
        knots = [0.5]
        e1, _ = eval_E_ass(paths, knots)
        e2, _ = eval_E_ass(scaled, knots)
        assert e2 == pytest.approx(2.5**2 * e1, rel=1e-9)


class TestRepair:
    def test_sorts_and_separates(self):
        out = repair(np.array([0.9, 0.1]))
        assert np.all(np.diff(out) >= EPS_GAP * (1 - 1e-12))
        assert np.allclose(np.sort(out), out)
        ParamVector(out)  # must be feasible

    def test_feasible_input_unchanged(self):
        g = np.array([0.2, 0.5, 0.8])
        assert np.allclose(repair(g), g, atol=1e-12)

    def test_collapsed_cluster_spread(self):
        out = repair(np.full(5, 0.5))
        ParamVector(out)
        assert out.mean() == pytest.approx(0.5, abs=1e-6)

    def test_out_of_range_clipped_feasible(self):
        out = repair(np.array([-0.3, 1.2, 0.5]))
        ParamVector(out)

    def test_idempotent(self):
        rng = np.random.default_rng(11)
        for _ in range(20):
            g = rng.uniform(-0.2, 1.2, rng.integers(1, 8))
            once = repair(g)
            assert np.allclose(repair(once), once, atol=1e-12)


class TestGA:
    def test_separable_quadratic(self):
        # global optimum at (0.2, 0.6) is feasible, so the GA should find it
        target = np.array([0.2, 0.6])

        def fitness(g):
            return float(np.sum((g - target) ** 2))

        best, f = ga_minimize(fitness, 2, config=GAConfig(seed=3))
        assert np.allclose(best, target, atol=1e-3)
        assert f < 1e-5

    def test_deterministic(self):
        def fitness(g):
            return float(np.sum((g - 0.37) ** 2))

        b1, f1 = ga_minimize(fitness, 3, config=FAST_GA)
        b2, f2 = ga_minimize(fitness, 3, config=FAST_GA)
        assert np.array_equal(b1, b2)
        assert f1 == f2

    def test_results_always_feasible(self):
        def fitness(g):
            return -float(g.sum())  # pushes knots toward 1

        best, _ = ga_minimize(fitness, 4, config=FAST_GA)
        ParamVector(best)

    def test_seed_genome_respected(self):
        # a seeded optimum must never be lost: elitism keeps the best genome
        target = np.array([0.31, 0.62])

        def fitness(g):
            return float(np.sum((g - target) ** 2))

        _, f = ga_minimize(fitness, 2, config=FAST_GA, seed_genomes=[target])
        assert f <= 1e-12


class TestOptimize:
    def test_single_path_beats_uniform(self):
        path = arc_path(angle=3.0)
        for n in (1, 2, 3):
            res = optimize_single(path, n, config=FAST_GA)
            uniform = np.arange(1, n + 1) / (n + 1)
            _, d_uni = max_deviation(path, uniform)
            assert res.energy <= d_uni**2 + 1e-15

    def test_single_path_near_bruteforce(self):
        # grid-search oracle over two interior knots
        path = arc_path(angle=3.0, n=400)
        grid = np.linspace(0.02, 0.98, 49)
        best = np.inf
        for i, t1 in enumerate(grid):
            for t2 in grid[i + 1 :]:
                _, d = max_deviation(path, [t1, t2])
                best = min(best, d**2)
        res = optimize_single(path, 2, config=FAST_GA)
        assert res.energy <= best * 1.02 + 1e-12

    def test_synchronized_beats_uniform(self):
        trace = dome_traceset(m=6, samples=300)
        for n in (2, 4):
            res = optimize_synchronized(trace, n, config=FAST_GA)
            uniform = np.arange(1, n + 1) / (n + 1)
            e_uni, _ = eval_E_ass(trace, uniform)
            assert res.energy <= e_uni + 1e-15

    def test_synchronized_deterministic(self):
        trace = dome_traceset(m=4, samples=200)
        r1 = optimize_synchronized(trace, 3, config=FAST_GA)
        r2 = optimize_synchronized(trace, 3, config=FAST_GA)
        assert np.array_equal(r1.knots.knots, r2.knots.knots)
        assert r1.energy == r2.energy

    def test_more_knots_never_worse(self):
        trace = dome_traceset(m=4, samples=200)
        prev = np.inf
        for n in (1, 2, 3, 4):
            res = optimize_synchronized(trace, n, config=FAST_GA)
            # warm-started sweeps are monotone; independent runs may jitter
            assert res.energy <= prev * 1.05 + 1e-12
            prev = res.energy


class TestSelectN:
    def test_threshold_met_at_small_n(self):
        trace = dome_traceset(m=4, samples=200)
        res1 = optimize_synchronized(trace, 1, config=FAST_GA)
        loose = 2.0 * np.sqrt(res1.energy)
        res = select_n(trace, r=loose, n_max=5, config=FAST_GA)
        assert res.threshold_met
        assert res.n == 1
        assert np.sqrt(res.energy) < loose

    def test_unreachable_threshold_reports_best(self):
        trace = dome_traceset(m=3, samples=150)
        res = select_n(trace, r=1e-12, n_max=3, config=FAST_GA)
        assert not res.threshold_met
        assert len(res.sweep) == 3
        assert res.energy == min(e for _, e in res.sweep)

    def test_sweep_energies_nonincreasing(self):
        trace = dome_traceset(m=3, samples=150)
        res = select_n(trace, r=1e-12, n_max=4, config=FAST_GA)
        energies = [e for _, e in res.sweep]
        for a, b in zip(energies, energies[1:]):
            assert b <= a * 1.05 + 1e-12

    def test_invalid_threshold(self):
        trace = dome_traceset(m=2, samples=100)
        with pytest.raises(InvalidInputError):
            select_n(trace, r=0.0)


class TestLinearize:
    def test_positions_match_interpolation(self):
        trace = dome_traceset(m=3, samples=200)
        pv = ParamVector(np.array([0.25, 0.5, 0.75]))
        lp = linearize(trace, pv)
        assert lp.positions.shape == (3, 5, 3)
        for j, p in enumerate(trace.paths):
            assert np.allclose(lp.positions[j], p.at(pv.full), atol=1e-12)

    def test_endpoints_preserved(self):
        trace = dome_traceset(m=2, samples=100)
        lp = linearize(trace, ParamVector(np.array([0.5])))
        for j, p in enumerate(trace.paths):
            assert np.allclose(lp.positions[j, 0], p.vertices[0])
            assert np.allclose(lp.positions[j, -1], p.vertices[-1])

    def test_report_consistent(self):
        trace = dome_traceset(m=3, samples=200)
        pv = ParamVector(np.array([0.3, 0.7]))
        lp = linearize(trace, pv)
        e, _ = eval_E_ass(trace, pv)
        assert lp.report.energy == pytest.approx(e, rel=1e-12)
