import math

import numpy as np
import pytest

from plapx.errors import AnticoercivityError, ConfigurationError
from plapx.exponent import ExponentField, field_from_config_value
from plapx.functional import ProblemConfig, R_value, SolverParams, \
    min_norm_subgradient
from plapx.mesh import GridFunction, Mesh
from plapx.potential import PotentialSpec, builtin_j1
from plapx.solver import (
    PathState,
    certify_inclusion,
    default_direction,
    find_endpoint,
    global_minimize,
    hypothesis_stamps,
    mountain_pass,
    verify_geometry,
)

from conftest import random_zero_boundary


def _mesh(cells=32):
    return Mesh(1, ((0.0, 1.0),), (cells,))


def _const_p(mesh, value):
    return ExponentField(np.full(mesh.n_nodes, float(value)), mesh.dimension)


def _kinked_saddle_config(cells=32, **overrides):
    """Quadratic core, quartic tails, derivative jump at |t| = 1.

    Near zero the diffusion term wins (int u^2 <= pi^-2 int u'^2 < (1/2)
    int u'^2 on the unit interval), far out the quartic tail wins, so the
    zero state sits behind a genuine barrier with negative energy beyond.
    """
    mesh = _mesh(cells)
    pot = PotentialSpec.from_pieces(
        [(-math.inf, -1.0, "t^4"), (-1.0, 1.0, "t^2"),
         (1.0, math.inf, "t^4")],
        name="kinked-well")
    params = dict(seed=0, path_points=16, sphere_samples=60, multistart=4,
                  probe_count=300)
    params.update(overrides)
    return ProblemConfig(mesh=mesh, p=_const_p(mesh, 2.0), lam=0.0,
                         potential=pot, params=SolverParams(**params))


def _coercive_config(cells=32, lam=0.0, **overrides):
    mesh = _mesh(cells)
    pot = PotentialSpec.smooth("-5*abs(t)^5", name="quintic-well")
    params = dict(seed=0, multistart=4, probe_count=300)
    params.update(overrides)
    return ProblemConfig(mesh=mesh, p=_const_p(mesh, 3.0), lam=lam,
                         potential=pot, params=SolverParams(**params))


# ---------------------------------------------------------------------------
# geometry and endpoints
# ---------------------------------------------------------------------------

def test_default_direction_is_admissible():
    config = _kinked_saddle_config()
    u0 = default_direction(config)
    assert u0.has_zero_boundary
    assert np.any(u0.values)
    again = default_direction(config)
    assert np.array_equal(u0.values, again.values)


def test_verify_geometry_rejects_bad_rho():
    config = _kinked_saddle_config()
    with pytest.raises(ConfigurationError):
        verify_geometry(config, rho=0.0)
    with pytest.raises(ConfigurationError):
        verify_geometry(config, rho=1.0)


def test_verify_geometry_positive_barrier():
    config = _kinked_saddle_config()
    report = verify_geometry(config, rho=0.2)
    assert report.eta_hat > 0.0
    assert report.passed
    assert report.samples >= 60


def test_verify_geometry_endpoint_recorded():
    config = _kinked_saddle_config()
    y = find_endpoint(config)
    report = verify_geometry(config, rho=0.2, endpoint=y)
    assert report.r_endpoint < 0.0
    assert report.endpoint_norm > 0.2
    assert report.passed
    d = report.to_dict()
    assert d["r_endpoint"] == report.r_endpoint


def test_verify_geometry_warns_when_endpoint_inside_sphere():
    config = _kinked_saddle_config()
    tiny = GridFunction(config.mesh,
                        1e-3 * default_direction(config).values)
    report = verify_geometry(config, rho=0.9, endpoint=tiny)
    assert any("does not exceed rho" in w for w in report.warnings)


def test_verify_geometry_warns_at_lambda_cap():
    mesh = _mesh()
    pot = builtin_j1(1.0, 2.0, 5.0)
    config = ProblemConfig(mesh=mesh, p=_const_p(mesh, 3.0), lam=3.0,
                           potential=pot, params=SolverParams(seed=0),
                           hypothesis={"nu": 1.0, "h": 2.0, "r": 5.0})
    report = verify_geometry(config, rho=0.3)
    assert any("open interval" in w for w in report.warnings)


def test_find_endpoint_reaches_negative_energy():
    config = _kinked_saddle_config()
    y = find_endpoint(config)
    assert R_value(y, config).total < 0.0


def test_find_endpoint_raises_on_coercive_problem():
    # j = 0, lam = 0: R = diffusion only, nonnegative along every ray
    mesh = _mesh()
    pot = PotentialSpec.smooth("0", name="zero")
    config = ProblemConfig(mesh=mesh, p=_const_p(mesh, 2.0), lam=0.0,
                           potential=pot,
                           params=SolverParams(seed=0, endpoint_cap=20))
    with pytest.raises(AnticoercivityError) as exc_info:
        find_endpoint(config)
    err = exc_info.value
    assert err.potential_name == "zero"
    assert len(err.history) == 21
    assert all(rec["R"] >= 0.0 for rec in err.history)


def test_find_endpoint_rejects_zero_direction():
    config = _kinked_saddle_config()
    with pytest.raises(ConfigurationError):
        find_endpoint(config, GridFunction.zeros(config.mesh))


def test_path_state_pins_endpoints():
    mesh = _mesh(8)
    rows = np.zeros((5, mesh.n_nodes))
    rows[-1, mesh.interior_idx] = 1.0
    path = PathState(rows, mesh.boundary_mask)
    assert path.endpoints_pinned()
    path.vals[2, 4] = 9.0
    assert path.endpoints_pinned()
    path.vals[-1, 4] = 9.0
    assert not path.endpoints_pinned()


def test_path_state_rejects_boundary_violation():
    mesh = _mesh(8)
    rows = np.ones((3, mesh.n_nodes))
    with pytest.raises(ConfigurationError):
        PathState(rows, mesh.boundary_mask)


# ---------------------------------------------------------------------------
# the two routes
# ---------------------------------------------------------------------------

def test_mountain_pass_on_kinked_saddle():
    config = _kinked_saddle_config()
    result = mountain_pass(config)
    assert result.converged
    assert result.route == "mountain_pass"
    assert result.cerami_final <= config.params.tol
    assert result.inclusion.passed
    # the critical value clears the sampled barrier and the endpoints stand
    assert result.critical_value > 0.0
    assert result.geometry.passed
    assert result.critical_value >= result.geometry.eta_hat - config.params.tol
    assert result.path_r_values[0] == 0.0
    assert result.path_r_values[-1] < 0.0
    # the solution is a genuine nonzero critical point
    assert np.max(np.abs(result.u.values)) > 0.1


def test_mountain_pass_history_records():
    config = _kinked_saddle_config()
    result = mountain_pass(config)
    assert result.history
    first = result.history[0]
    assert {"iteration", "phase", "k_star", "R", "m", "cerami",
            "norm"} <= set(first)
    phases = {rec["phase"] for rec in result.history}
    assert 1 in phases


def test_global_minimize_finds_unconstrained_minimum():
    config = _coercive_config(lam=0.0)
    result = global_minimize(config)
    assert result.converged
    assert result.route == "global_min"
    assert result.critical_value <= 0.0 + config.params.tol
    assert result.inclusion.passed
    assert result.probe["count"] > 0
    assert result.probe["certified"]
    assert result.probe["min_R"] >= result.critical_value - config.params.tol


def test_global_minimize_zero_is_minimizer_when_coercive():
    # -j = 5|t|^5 >= 0 with r- = 5 > p+ = 3 and lam = 0: R >= 0 = R(0)
    config = _coercive_config(lam=0.0)
    result = global_minimize(config)
    assert abs(result.critical_value) <= config.params.tol


def _double_route_config(**overrides):
    # barrier at the origin, a deep negative valley at moderate amplitude,
    # and a stabilizing sextic tail: both routes converge on this landscape
    mesh = _mesh(32)
    pot = PotentialSpec.smooth("t^4/4 - 0.001*abs(t)^6", name="valley")
    params = dict(seed=0, path_points=16, sphere_samples=60, multistart=4,
                  probe_count=300)
    params.update(overrides)
    return ProblemConfig(mesh=mesh, p=_const_p(mesh, 2.0), lam=0.0,
                         potential=pot, params=SolverParams(**params))


def test_minimax_dominates_minimum():
    # the path level can only sit above the global minimum
    mp = mountain_pass(_double_route_config())
    gm = global_minimize(_double_route_config())
    assert mp.converged and gm.converged
    assert gm.critical_value < 0.0 < mp.critical_value
    assert mp.critical_value >= gm.critical_value - 1e-9


def test_results_deterministic():
    a = mountain_pass(_kinked_saddle_config()).to_json_dict()
    b = mountain_pass(_kinked_saddle_config()).to_json_dict()
    a.pop("timing")
    b.pop("timing")
    assert a == b


def test_global_minimize_deterministic():
    a = global_minimize(_coercive_config()).to_json_dict()
    b = global_minimize(_coercive_config()).to_json_dict()
    a.pop("timing")
    b.pop("timing")
    assert a == b


def test_history_stride_thins_but_keeps_last():
    result = mountain_pass(_kinked_saddle_config())
    full = result.to_json_dict(history_stride=1)["history"]
    thin = result.to_json_dict(history_stride=10)["history"]
    assert len(thin) < len(full) or len(full) <= 2
    assert thin[-1] == full[-1]


# ---------------------------------------------------------------------------
# certification and stamps
# ---------------------------------------------------------------------------

def test_certify_inclusion_at_solution_and_garbage(rng):
    config = _kinked_saddle_config()
    result = mountain_pass(config)
    assert certify_inclusion(result.u, config).passed
    garbage = GridFunction(config.mesh,
                           random_zero_boundary(config.mesh, rng, amp=3.0))
    report = certify_inclusion(garbage, config)
    assert not report.passed
    assert report.violating > 0
    assert report.max_slack > report.tol


def test_certify_inclusion_tolerance_widening(rng):
    config = _kinked_saddle_config()
    garbage = GridFunction(config.mesh,
                           random_zero_boundary(config.mesh, rng, amp=3.0))
    tight = certify_inclusion(garbage, config)
    loose = certify_inclusion(garbage, config, certify_tol=1e12)
    assert not tight.passed
    assert loose.passed


def test_hypothesis_stamps_full_matrix():
    mesh = _mesh()
    pot = builtin_j1(1.0, 2.0, 5.0)
    config = ProblemConfig(
        mesh=mesh, p=_const_p(mesh, 3.0), lam=1.0, potential=pot,
        params=SolverParams(seed=0),
        hypothesis={"nu": 1.0, "h": 2.0, "r": 5.0, "c": 3.9, "mu": 0.9})
    stamps = hypothesis_stamps(config)
    assert set(stamps) == {"asymptotic-tail", "near-zero-ratio",
                           "tail-negativity"}
    assert all(s["passed"] for s in stamps.values())


def test_hypothesis_stamps_record_checker_errors():
    # r- = p+ = 3 violates the growth ordering; the stamp carries the error
    mesh = _mesh()
    pot = builtin_j1(1.0, 2.0, 5.0)
    config = ProblemConfig(
        mesh=mesh, p=_const_p(mesh, 3.0), lam=1.0, potential=pot,
        params=SolverParams(seed=0),
        hypothesis={"c1": 1.0, "r": 3.0})
    stamps = hypothesis_stamps(config)
    assert "growth-bound" in stamps
    assert "error" in stamps["growth-bound"]
    assert "max p < min r" in stamps["growth-bound"]["error"]


def test_hypothesis_stamps_empty_without_constants():
    config = _kinked_saddle_config()
    assert hypothesis_stamps(config) == {}


def test_solve_results_stamp_checks():
    config = _coercive_config()
    config.hypothesis.update({"mu": 4.9, "r": 5.0})
    result = global_minimize(config)
    assert result.hypothesis_stamps["tail-negativity"]["passed"]
