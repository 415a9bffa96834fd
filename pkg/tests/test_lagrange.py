import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from splpo import (
    LagrangeMultipliers,
    ProblemSpec,
    SgConfig,
    brute_force,
    cumulative_lambda,
    default_start,
    lr_subgradient,
    solve_lr,
    subgradient_method,
)
from splpo.solution import assign_most_preferred

from conftest import random_instance


def raw_relaxed_objective(inst, mu, lam, x, y):
    """The penalized objective evaluated term by term from its definition,
    with no algebraic regrouping (oracle)."""
    total = float((inst.c * x).sum() + (inst.f * y).sum())
    total += float((mu * (1.0 - x.sum(axis=1))).sum())
    for i in range(inst.m):
        for j in range(inst.n):
            covered = sum(
                x[i, k] for k in range(inst.n) if inst.p[i, k] <= inst.p[i, j]
            )
            total += lam[i, j] * (y[j] - covered)
    return total


def oracle_min_relaxed(inst, mu, lam):
    """Independent minimization over binary (x, y) with x <= y.

    The objective is linear in x, so per-entry coefficients are recovered by
    finite differences of the raw objective; y is enumerated exhaustively.
    """
    zero_x = np.zeros((inst.m, inst.n))
    ones_y = np.ones(inst.n)
    base = raw_relaxed_objective(inst, mu, lam, zero_x, ones_y)
    coef = np.empty((inst.m, inst.n))
    for i in range(inst.m):
        for j in range(inst.n):
            unit = zero_x.copy()
            unit[i, j] = 1.0
            coef[i, j] = raw_relaxed_objective(inst, mu, lam, unit, ones_y) - base
    best = math.inf
    for bits in itertools.product((0.0, 1.0), repeat=inst.n):
        y = np.array(bits)
        value = raw_relaxed_objective(inst, mu, lam, zero_x, y)
        value += np.minimum(coef, 0.0)[:, y > 0].sum()
        best = min(best, value)
    return best


def oracle_min_relaxed_tiny(inst, mu, lam):
    """Fully assumption-free joint enumeration for very small instances."""
    best = math.inf
    cells = inst.m * inst.n
    for ybits in itertools.product((0.0, 1.0), repeat=inst.n):
        y = np.array(ybits)
        for xbits in itertools.product((0.0, 1.0), repeat=cells):
            x = np.array(xbits).reshape(inst.m, inst.n)
            if np.any(x > y[None, :]):
                continue
            best = min(best, raw_relaxed_objective(inst, mu, lam, x, y))
    return best


def random_multipliers(inst, rng):
    scale = float(inst.c.max() + inst.f.max())
    mu = rng.uniform(-0.2 * scale, scale, size=inst.m)
    lam = rng.uniform(0, 0.3 * scale, size=(inst.m, inst.n))
    return LagrangeMultipliers(mu=mu, lam=lam)


def test_cumulative_lambda_zero(toy):
    assert np.array_equal(cumulative_lambda(toy, np.zeros((2, 2))), np.zeros((2, 2)))


def test_cumulative_lambda_toy(toy):
    lam = np.array([[1.0, 2.0], [3.0, 4.0]])
    assert np.array_equal(cumulative_lambda(toy, lam), [[3.0, 2.0], [3.0, 7.0]])


def test_cumulative_lambda_rejects_negative(toy):
    with pytest.raises(ValueError):
        cumulative_lambda(toy, np.array([[-1.0, 0.0], [0.0, 0.0]]))


@given(st.integers(0, 300))
def test_cumulative_lambda_row_checksum(seed):
    inst = random_instance(seed, m_max=6, n_max=7)
    rng = np.random.default_rng(seed)
    lam = rng.random((inst.m, inst.n))
    lam_sums = cumulative_lambda(inst, lam).sum(axis=1)
    expected = (inst.p * lam).sum(axis=1)
    assert np.allclose(lam_sums, expected)


def test_solve_lr_toy(toy):
    lr = solve_lr(toy, LagrangeMultipliers(mu=[6.0, 7.0], lam=np.zeros((2, 2))))
    assert np.array_equal(lr.rho, [-4.0, -5.0])
    assert lr.y.all()
    assert lr.x.all()
    assert lr.value == 4.0
    assert lr.value <= 8.0  # weak duality against the known optimum
    assert lr.value == oracle_min_relaxed_tiny(toy, np.array([6.0, 7.0]), np.zeros((2, 2)))


def test_solve_lr_zero_multipliers(toy):
    lr = solve_lr(toy, LagrangeMultipliers(mu=np.zeros(2), lam=np.zeros((2, 2))))
    assert np.array_equal(lr.rho, toy.f)
    assert not lr.y.any()
    assert not lr.x.any()
    assert lr.value == 0.0


def test_solve_lr_zero_rho_stays_closed():
    # rho_1 == 0 exactly: opening and closing tie, closed is picked
    from splpo import Instance

    inst = Instance(
        f=np.array([0.0, 5.0]),
        c=np.array([[3.0, 4.0], [6.0, 1.0]]),
        p=np.array([[1, 2], [2, 1]]),
    )
    mu = inst.c[:, 0].copy()  # reduced costs vanish in column 0
    lr = solve_lr(inst, LagrangeMultipliers(mu=mu, lam=np.zeros((2, 2))))
    assert lr.rho[0] == 0.0
    assert not lr.y[0]
    assert not lr.x[:, 0].any()


@given(st.integers(0, 200))
def test_solve_lr_matches_oracle(seed):
    inst = random_instance(seed, m_max=4, n_max=4)
    rng = np.random.default_rng(seed + 1)
    mult = random_multipliers(inst, rng)
    lr = solve_lr(inst, mult)
    assert lr.value == pytest.approx(oracle_min_relaxed(inst, mult.mu, mult.lam), abs=1e-7)


def test_solve_lr_matches_joint_enumeration():
    for seed in range(10):
        inst = random_instance(seed, m_max=3, n_max=3)
        rng = np.random.default_rng(seed)
        mult = random_multipliers(inst, rng)
        lr = solve_lr(inst, mult)
        assert lr.value == pytest.approx(
            oracle_min_relaxed_tiny(inst, mult.mu, mult.lam), abs=1e-7
        )


def test_lr_subgradient_toy(toy):
    lr = solve_lr(toy, LagrangeMultipliers(mu=[6.0, 7.0], lam=np.zeros((2, 2))))
    s_mu, s_lam = lr_subgradient(toy, lr)
    assert np.array_equal(s_mu, [-1.0, -1.0])
    assert s_lam[0, 1] == -1.0


def test_lr_subgradient_on_feasible_point(toy):
    # indicators of a feasible solution: zero assignment residual and
    # nonpositive preference residual
    from splpo.lagrange import LrSolution

    open_set = {1}
    assign = assign_most_preferred(toy, open_set)
    x = np.zeros((2, 2), dtype=np.int8)
    x[np.arange(2), assign] = 1
    y = np.array([False, True])
    lr = LrSolution(value=0.0, x=x, y=y, rho=np.zeros(2))
    s_mu, s_lam = lr_subgradient(toy, lr)
    assert np.array_equal(s_mu, np.zeros(2))
    assert np.all(s_lam <= 0)


def test_default_start_toy(toy):
    assert np.array_equal(default_start(toy).mu, [5.0, 3.0])


def test_sg_incumbent_non_decreasing_and_lambda_nonnegative():
    inst = random_instance(11, m_max=8, n_max=8)
    res = subgradient_method(inst, SgConfig(max_iter=120))
    bests = [row.lr_best for row in res.trace]
    assert all(b <= a + 1e-12 for b, a in zip(bests, bests[1:]))
    assert res.best_value >= bests[0]
    assert np.all(res.best_lam >= 0)


def test_sg_iterates_below_optimum():
    inst = random_instance(21, m_max=6, n_max=6)
    opt = brute_force(ProblemSpec.splpo(inst)).value
    res = subgradient_method(inst, SgConfig(max_iter=200))
    for row in res.trace:
        assert row.lr_value <= opt + 1e-9
    assert res.best_value <= opt + 1e-9


def test_sg_aim_exceeded():
    inst = random_instance(31, m_max=5, n_max=5)
    res = subgradient_method(inst, SgConfig(max_iter=50, lr_aim=-1e9))
    assert res.status == "aim_exceeded"
    assert res.iterations == 0


def test_sg_beta_exhaustion():
    inst = random_instance(41, m_max=5, n_max=5)
    cfg = SgConfig(max_iter=100000, beta0=0.01, stall_window=1, beta_decrement=0.005)
    res = subgradient_method(inst, cfg)
    assert res.status in ("beta_exhausted", "optimal")
    assert res.iterations < 100000


def test_sg_iteration_budget():
    inst = random_instance(51, m_max=5, n_max=5)
    res = subgradient_method(inst, SgConfig(max_iter=7))
    assert res.iterations <= 7
    assert res.trace[0].iteration == 0


def test_sg_multiplicative_schedule():
    inst = random_instance(61, m_max=5, n_max=5)
    cfg = SgConfig(max_iter=500, stall_window=5, beta_decrement=0.5, schedule="multiplicative")
    res = subgradient_method(inst, cfg)
    betas = [row.beta for row in res.trace]
    assert betas[0] == 2.0
    assert all(b > 0 for b in betas)


def test_sg_trace_is_csv_friendly():
    inst = random_instance(71, m_max=4, n_max=4)
    res = subgradient_method(inst, SgConfig(max_iter=5))
    for row in res.trace:
        for field in ("iteration", "lr_value", "lr_best", "beta", "alpha", "s_norm_sq"):
            assert getattr(row, field) is not None


def test_sg_best_multipliers_reproduce_best_value():
    inst = random_instance(81, m_max=7, n_max=7)
    res = subgradient_method(inst, SgConfig(max_iter=80))
    lr = solve_lr(inst, LagrangeMultipliers(mu=res.best_mu, lam=res.best_lam))
    assert lr.value == pytest.approx(res.best_value, abs=1e-9)


def test_feasible_relaxation_point_respects_weak_duality():
    # Whenever the relaxed minimizer happens to satisfy the dualized
    # constraints, its true objective must sit at or above the dual value.
    from splpo import objective, Solution

    hits = 0
    for seed in range(200):
        inst = random_instance(seed, m_max=4, n_max=4)
        rng = np.random.default_rng(seed + 17)
        mult = random_multipliers(inst, rng)
        lr = solve_lr(inst, mult)
        if not np.array_equal(lr.x.sum(axis=1), np.ones(inst.m)):
            continue
        assign = np.argmax(lr.x, axis=1)
        open_set = frozenset(np.flatnonzero(lr.y).tolist())
        s_mu, s_lam = lr_subgradient(inst, lr)
        if np.any(s_lam > 0):
            continue
        true_obj = objective(
            inst, Solution(open_facilities=open_set, assign=assign, objective=0.0)
        )
        assert true_obj >= lr.value - 1e-9
        hits += 1
    assert hits > 0  # the property must actually have been exercised
