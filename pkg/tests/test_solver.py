import numpy as np
import pytest

from gsloc import (
    DataError,
    LinearDesign,
    SglProblem,
    kkt_residual,
    objective,
    solve,
)
from reference_solver import (
    l1_zero_certificate,
    labels_to_groups,
    random_instance,
    reference_solve,
)


def random_problem(seed, with_groups=True, **overrides):
    rng = np.random.default_rng(seed)
    design = rng.normal(size=(6, 10))
    observation = rng.normal(size=6)
    params = dict(design=design, observation=observation, lambda1=0.2, lambda2=0.4)
    if with_groups:
        params["groups"] = [range(0, 5), range(5, 10)]
        params["group_weights"] = [1.0, 1.5]
    params.update(overrides)
    return SglProblem(**params)


def test_unregularized_identity_recovers_observation():
    problem = SglProblem(design=np.eye(2), observation=np.array([1.0, 2.0]))
    sol = solve(problem)
    assert np.array_equal(sol.theta, [1.0, 2.0])
    assert sol.objective_value == 0.0
    assert sol.converged
    assert sol.kkt_residual <= 1e-10


def test_orthonormal_lasso_soft_threshold_identity():
    rng = np.random.default_rng(3)
    for trial in range(10):
        y = rng.normal(size=7)
        lam = float(rng.uniform(0.05, 1.0))
        sol = solve(SglProblem(design=np.eye(7), observation=y, lambda1=lam))
        expected = np.sign(y) * np.maximum(np.abs(y) - lam, 0.0)
        assert np.abs(sol.theta - expected).max() <= 1e-8


def test_zero_solution_when_lambda1_dominates():
    rng = np.random.default_rng(4)
    for trial in range(10):
        design = rng.normal(size=(5, 8))
        y = rng.normal(size=5)
        lam1 = float(np.abs(design.T @ y).max()) * (1.0 + rng.uniform(0, 1))
        assert l1_zero_certificate(design, y, lam1)  # the subgradient oracle
        sol = solve(SglProblem(design=design, observation=y, lambda1=lam1))
        assert np.all(sol.theta == 0.0)


def test_matches_slow_reference_oracle_on_random_sgl():
    design, observation, lam1, lam2, labels, weights = random_instance(7)
    _, oracle_obj = reference_solve(
        design, observation, lam1, lam2, labels, weights,
        iterations=50_000, use_numba=False,
    )
    problem = SglProblem(
        design=design,
        observation=observation,
        lambda1=lam1,
        lambda2=lam2,
        groups=labels_to_groups(labels, len(weights)),
        group_weights=weights,
    )
    sol = solve(problem)
    assert sol.converged
    assert abs(sol.objective_value - oracle_obj) <= 1e-4 * abs(oracle_obj)


def test_outlier_block_absorbs_gross_shift():
    rng = np.random.default_rng(9)
    design = rng.normal(size=(8, 12))
    truth = np.zeros(12)
    truth[[2, 7]] = [1.0, -0.5]
    clean = design @ truth + 0.01 * rng.normal(size=8)
    shifted = clean.copy()
    shifted[3] += 100.0
    base = dict(lambda1=0.1, lambda2=0.2,
                groups=[range(0, 6), range(6, 12)], group_weights=[1.0, 1.0])
    clean_sol = solve(SglProblem(design=design, observation=clean, **base))
    naive_sol = solve(SglProblem(design=design, observation=shifted, **base))
    robust_sol = solve(
        SglProblem(design=design, observation=shifted, outlier_lambda3=0.05, **base)
    )
    assert robust_sol.kappa[3] == pytest.approx(100.0, abs=2.0)
    # Block optimality: theta must solve the kappa-cleaned problem exactly.
    cleaned_sol = solve(
        SglProblem(design=design, observation=shifted - robust_sol.kappa, **base)
    )
    assert np.abs(robust_sol.theta - cleaned_sol.theta).max() <= 1e-5
    # And it lands far closer to the clean solution than the naive solve does.
    err_robust = np.abs(robust_sol.theta - clean_sol.theta).max()
    err_naive = np.abs(naive_sol.theta - clean_sol.theta).max()
    assert err_robust <= 0.1 * err_naive


def test_objective_at_origin_is_half_norm_squared():
    problem = random_problem(0)
    y = problem.observation
    assert objective(problem, np.zeros(10)) == pytest.approx(0.5 * float(y @ y))


def test_objective_single_group_formula():
    rng = np.random.default_rng(1)
    design = rng.normal(size=(4, 6))
    y = rng.normal(size=4)
    theta = rng.normal(size=6)
    problem = SglProblem(design=design, observation=y, lambda2=0.7)
    direct = 0.5 * np.linalg.norm(y - design @ theta) ** 2 + 0.7 * np.linalg.norm(theta)
    assert objective(problem, theta) == pytest.approx(direct, rel=1e-12)


def test_objective_nonnegative_at_random_points():
    problem = random_problem(2)
    rng = np.random.default_rng(3)
    for _ in range(20):
        assert objective(problem, rng.normal(size=10)) >= 0.0


def test_solution_invariants():
    problem = random_problem(5)
    sol = solve(problem)
    assert sol.converged
    assert sol.kkt_residual <= problem.tolerance
    recomputed = objective(problem, sol.theta, sol.kappa)
    assert abs(sol.objective_value - recomputed) <= 1e-10 * max(1.0, abs(recomputed))
    assert kkt_residual(problem, sol.theta, sol.kappa) == pytest.approx(sol.kkt_residual)


def test_kkt_zero_at_analytic_optimum():
    problem = SglProblem(design=np.eye(3), observation=np.array([1.0, -2.0, 0.5]))
    assert kkt_residual(problem, np.array([1.0, -2.0, 0.5])) <= 1e-10


def test_kkt_positive_at_origin_when_origin_suboptimal():
    rng = np.random.default_rng(11)
    design = rng.normal(size=(5, 9))
    y = rng.normal(size=5)
    lam1 = 0.5 * float(np.abs(design.T @ y).max())
    problem = SglProblem(design=design, observation=y, lambda1=lam1)
    assert not l1_zero_certificate(design, y, lam1)
    assert kkt_residual(problem, np.zeros(9)) > 0.0


def test_kkt_trace_decreases_overall(tmp_path):
    problem = random_problem(12)
    trace_path = tmp_path / "trace.csv"
    sol = solve(problem, trace_path=trace_path)
    assert sol.trace, "trace should record the certified iterations"
    first_obj = sol.trace[0][1]
    assert sol.trace[-1][1] <= first_obj
    assert sol.trace[-1][2] < sol.trace[0][2]
    header = trace_path.read_text().splitlines()[0]
    assert header == "iter,objective,kkt_residual"


def test_objective_monotone_across_iterations():
    problem = random_problem(13)
    sol = solve(problem)
    objectives = [row[1] for row in sol.trace]
    assert all(b <= a + 1e-12 * max(1.0, abs(a)) for a, b in zip(objectives, objectives[1:]))


def test_group_kill_block_kkt_condition():
    # Groups returned as exactly zero must satisfy the block-zero condition
    # ||soft(g_k, lam1)|| <= lam2 * w_k, and live groups must violate it.
    for seed in range(5):
        design, observation, lam1, lam2, labels, weights = random_instance(100 + seed)
        problem = SglProblem(
            design=design, observation=observation, lambda1=lam1, lambda2=lam2,
            groups=labels_to_groups(labels, len(weights)), group_weights=weights,
        )
        sol = solve(problem)
        grad = -np.asarray(design).T @ (observation - design @ sol.theta)
        for k, group in enumerate(problem.groups):
            idx = list(group)
            if not idx:
                continue
            block = sol.theta[idx]
            frozen = sol.theta.copy()
            frozen[idx] = 0.0
            g_k = (-np.asarray(design).T @ (observation - design @ frozen))[idx]
            s = np.sign(g_k) * np.maximum(np.abs(g_k) - lam1, 0.0)
            if np.all(block == 0.0):
                assert np.linalg.norm(s) <= lam2 * weights[k] + 1e-6
            else:
                assert np.linalg.norm(s) >= lam2 * weights[k] - 1e-6


def test_mgs_with_huge_lambda3_matches_plain_solve():
    problem = random_problem(21)
    plain = solve(problem)
    robust = solve(
        random_problem(21, outlier_lambda3=1e12)
    )
    assert np.all(robust.kappa == 0.0)
    assert abs(robust.objective_value - plain.objective_value) <= 1e-6 * abs(
        plain.objective_value
    )


def test_joint_scaling_relation():
    # Scaling (y, H) by c and the lambdas by c^2 scales the optimum by c^2.
    rng = np.random.default_rng(22)
    design = rng.normal(size=(6, 10))
    y = rng.normal(size=6)
    groups = [range(0, 5), range(5, 10)]
    sol = solve(SglProblem(design=design, observation=y, lambda1=0.2, lambda2=0.4,
                           groups=groups, group_weights=[1.0, 1.5]))
    c = 3.0
    scaled_sol = solve(
        SglProblem(design=c * design, observation=c * y,
                   lambda1=c**2 * 0.2, lambda2=c**2 * 0.4,
                   groups=groups, group_weights=[1.0, 1.5])
    )
    assert scaled_sol.objective_value == pytest.approx(
        c**2 * sol.objective_value, rel=1e-6
    )


def test_optimal_value_agrees_from_different_starts():
    problem = random_problem(23)
    rng = np.random.default_rng(0)
    a = solve(problem, theta0=rng.normal(size=10))
    b = solve(problem, theta0=rng.normal(size=10))
    assert a.objective_value == pytest.approx(b.objective_value, rel=1e-6)


def test_operator_design_matches_dense():
    rng = np.random.default_rng(31)
    dense = rng.normal(size=(7, 11))
    operator = LinearDesign(
        shape=dense.shape,
        forward=lambda v: dense @ v,
        adjoint=lambda r: dense.T @ r,
    )
    y = rng.normal(size=7)
    kwargs = dict(observation=y, lambda1=0.3, lambda2=0.2,
                  groups=[range(0, 4), range(4, 11)], group_weights=[1.0, 0.5])
    a = solve(SglProblem(design=dense, **kwargs))
    b = solve(SglProblem(design=operator, **kwargs))
    assert a.objective_value == pytest.approx(b.objective_value, rel=1e-9)
    assert np.abs(a.theta - b.theta).max() <= 1e-6


def test_empty_groups_are_tolerated():
    problem = random_problem(
        41, groups=[range(0, 10), []], group_weights=[1.0, 5.0]
    )
    sol = solve(problem)
    assert sol.converged


def test_validation_errors():
    with pytest.raises(DataError, match="non-finite"):
        SglProblem(design=np.array([[np.inf]]), observation=np.array([1.0]))
    with pytest.raises(DataError, match="non-finite"):
        SglProblem(design=np.eye(2), observation=np.array([np.nan, 0.0]))
    with pytest.raises(DataError, match="partition"):
        SglProblem(design=np.eye(3), observation=np.zeros(3), groups=[[0, 1]])
    with pytest.raises(DataError, match="partition"):
        SglProblem(design=np.eye(3), observation=np.zeros(3), groups=[[0, 1, 2, 2]])
    with pytest.raises(DataError, match=">="):
        SglProblem(design=np.eye(2), observation=np.zeros(2), lambda1=-0.1)
    with pytest.raises(DataError, match="outlier_rows"):
        SglProblem(design=np.eye(2), observation=np.zeros(2), outlier_rows=[0])
    with pytest.raises(DataError, match="shape"):
        solve(random_problem(1), theta0=np.zeros(3))


def test_outlier_rows_restrict_the_block():
    rng = np.random.default_rng(51)
    design = rng.normal(size=(6, 4))
    y = rng.normal(size=6)
    y[1] += 50.0
    problem = SglProblem(
        design=design, observation=y, lambda1=0.2,
        outlier_lambda3=0.05, outlier_rows=[0, 1, 2],
    )
    sol = solve(problem)
    assert sol.kappa.shape == (3,)
    assert abs(sol.kappa[1]) > 10.0
