import numpy as np
import pytest

from capsphere import (
    OptimizerSettings, PoleSingularityError, ProblemSpec, SingularityError,
    Source, energy, gradient, minimize, multistart, preset,
)
from capsphere.discrete import _angles, _points, perturb

NORTH = (0.0, 0.0, 1.0)
ANTIPODAL = np.array([[1.0, 0.0, 0.0], [-1.0, 0.0, 0.0]])

FIELD_FREE_LOG = ProblemSpec(2, 0.0, ())
FIELD_FREE_COULOMB = ProblemSpec(2, 1.0, ())


def test_settings_validation():
    OptimizerSettings()
    with pytest.raises(ValueError):
        OptimizerSettings(restart_count=0)
    with pytest.raises(ValueError):
        OptimizerSettings(max_iterations=0)
    with pytest.raises(ValueError):
        OptimizerSettings(perturbation_scale=-0.1)


def test_energy_antipodal_pair():
    assert energy(ANTIPODAL, FIELD_FREE_LOG) == pytest.approx(
        -2.0 * np.log(2.0), abs=1e-15)
    assert energy(ANTIPODAL, FIELD_FREE_COULOMB) == pytest.approx(
        1.0, abs=1e-15)


def test_energy_with_field_hand_value():
    # pair term 2(-log 2) plus field term 2(N-1) q [k(a,x1) + k(a,x2)]
    spec = ProblemSpec(2, 0.0, (Source(NORTH, 0.3),))
    expect = -2.0 * np.log(2.0) + 2.0 * 0.3 * (-np.log(2.0))
    assert energy(ANTIPODAL, spec) == pytest.approx(expect, abs=1e-14)


def test_energy_rejects_coincident_points():
    pts = np.array([NORTH, NORTH], dtype=float)
    with pytest.raises(SingularityError):
        energy(pts, FIELD_FREE_LOG)


def test_energy_rejects_point_on_source():
    spec = ProblemSpec(2, 1.0, (Source(NORTH, 0.3),))
    pts = np.array([NORTH, (1.0, 0.0, 0.0)], dtype=float)
    with pytest.raises(SingularityError):
        energy(pts, spec)


def test_gradient_finite_difference():
    rng = np.random.default_rng(7)
    for spec in (FIELD_FREE_COULOMB, preset("1-left"), preset("3-left")):
        for _ in range(5):
            x = rng.normal(size=(7, 3))
            x /= np.linalg.norm(x, axis=1, keepdims=True)
            th, ph = _angles(x)
            g = gradient(x, spec)
            h = 1e-6
            for i in (0, 4):
                for k in (0, 1):
                    tp, pp = th.copy(), ph.copy()
                    tm, pm = th.copy(), ph.copy()
                    if k == 0:
                        tp[i] += h
                        tm[i] -= h
                    else:
                        pp[i] += h
                        pm[i] -= h
                    fd = (energy(_points(tp, pp), spec)
                          - energy(_points(tm, pm), spec)) / (2.0 * h)
                    assert g[i, k] == pytest.approx(fd, rel=2e-5, abs=1e-8)


def test_gradient_rejects_coordinate_pole():
    pts = np.array([NORTH, (1.0, 0.0, 0.0)], dtype=float)
    with pytest.raises(PoleSingularityError):
        gradient(pts, FIELD_FREE_LOG)


def test_minimize_two_points_go_antipodal():
    start = np.array([[0.6, 0.8, 0.0], [0.0, 0.6, 0.8]])
    cfg = minimize(start, FIELD_FREE_LOG)
    assert cfg.converged
    assert cfg.energy == pytest.approx(-2.0 * np.log(2.0), abs=1e-10)
    assert np.dot(cfg.points[0], cfg.points[1]) == pytest.approx(
        -1.0, abs=1e-6)


def test_minimize_monotone_from_start():
    start = np.array([[0.6, 0.8, 0.0], [0.5, 0.6, 0.62449979983984],
                      [0.0, -0.8, 0.6]])
    start /= np.linalg.norm(start, axis=1, keepdims=True)
    spec = preset("1-left")
    cfg = minimize(start, spec)
    assert cfg.energy <= energy(start, spec)


def test_minimize_repairs_start_on_source():
    # a start point exactly on a source is nudged off deterministically
    start = np.array([NORTH, (0.0, -0.8, 0.6), (0.6, 0.8, 0.0)], dtype=float)
    spec = preset("1-left")
    cfg = minimize(start, spec)
    assert np.isfinite(cfg.energy)
    a = minimize(start, spec)
    assert np.array_equal(cfg.points, a.points)


def test_minimize_input_validation():
    with pytest.raises(ValueError):
        minimize(np.array([NORTH], dtype=float), FIELD_FREE_LOG)
    with pytest.raises(ValueError):
        minimize(ANTIPODAL, ProblemSpec(3, 1.0, ()))


def test_tetrahedron_optimum():
    cfg = multistart(FIELD_FREE_COULOMB, 4,
                     OptimizerSettings(restart_count=6, seed=2))
    assert cfg.converged
    assert cfg.energy == pytest.approx(6.0 * np.sqrt(1.5), abs=1e-8)


def test_multistart_single_restart_equals_minimize(rng):
    from capsphere.sphere import sample_uniform
    settings = OptimizerSettings(restart_count=1, seed=42)
    spec = preset("1-left")
    a = multistart(spec, 12, settings)
    start = sample_uniform(2, 12, np.random.default_rng(42))
    b = minimize(start, spec, settings)
    assert np.array_equal(a.points, b.points)
    assert a.energy == b.energy


def test_multistart_deterministic():
    settings = OptimizerSettings(restart_count=3, seed=11)
    a = multistart(FIELD_FREE_COULOMB, 9, settings)
    b = multistart(FIELD_FREE_COULOMB, 9, settings)
    assert np.array_equal(a.points, b.points)
    assert a.iterations == b.iterations


def test_multistart_threads_reproducible():
    settings = OptimizerSettings(restart_count=4, seed=3)
    a = multistart(FIELD_FREE_COULOMB, 6, settings, threads=2)
    b = multistart(FIELD_FREE_COULOMB, 6, settings, threads=2)
    assert np.array_equal(a.points, b.points)


def test_multistart_never_worse_with_more_restarts():
    spec = preset("2")
    e1 = multistart(spec, 16, OptimizerSettings(restart_count=1, seed=0)).energy
    e5 = multistart(spec, 16, OptimizerSettings(restart_count=5, seed=0)).energy
    assert e5 <= e1 + 1e-12


def test_perturb_stays_on_sphere():
    rng = np.random.default_rng(0)
    pts = np.array([[0.0, 0.0, 1.0], [1.0, 0.0, 0.0]])
    out = perturb(pts, 0.05, rng)
    assert np.allclose(np.linalg.norm(out, axis=1), 1.0, atol=1e-14)
    tiny = perturb(pts, 1e-12, np.random.default_rng(1))
    assert np.allclose(tiny, pts, atol=1e-11)


def test_source_chords_recorded():
    spec = preset("1-left")
    cfg = minimize(ANTIPODAL, spec)
    assert cfg.source_chords is not None
    assert cfg.source_chords.shape == (2, 2)
    expect = np.sqrt(np.maximum(
        2.0 - 2.0 * cfg.points @ spec.positions().T, 0.0))
    assert np.allclose(cfg.source_chords, expect, atol=1e-12)
