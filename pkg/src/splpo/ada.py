"""Variable fixing and the accelerated dual ascent pipeline.

The pipeline warms up multipliers with the subgradient method, hands the
best ones to dual ascent, and then alternates single ascent iterations with
a variable-fixing pass: a cheap-keyed fraction of the facilities open in the
current relaxed solution is forced open and the restricted original problem
is solved exactly. The best feasible solution across the sweep history and
the greedy warm-start bound is returned.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field, replace

from .exact import ProblemSpec, branch_and_bound
from .instance import Instance, facility_sort_keys
from .lagrange import SgConfig, SgResult, default_start, subgradient_method
from .semilagrange import DaConfig, DualAscent, SlrSolution
from .solution import Solution, check_feasible, heuristic_hc


@dataclass(frozen=True)
class AdaConfig:
    """Stage budgets and engine limits for the pipeline.

    sg_iter, da_iter, and vfh_iter are iteration budgets for the warm-up,
    the plain ascent stage, and the ascent+fixing rounds. ps is the fraction
    of the currently open facilities forced open by each fixing pass.
    """

    sg_iter: int = 50
    da_iter: int = 3
    vfh_iter: int = 2
    ps: float = 0.25
    epsilon: float | None = None
    node_limit: int | None = None
    time_limit: float | None = None
    top_rule: str = "ceiling"
    prefix: bool = False
    preset: str | None = None

    def __post_init__(self):
        if min(self.sg_iter, self.da_iter, self.vfh_iter) < 0:
            raise ValueError("iteration budgets must be nonnegative")
        if not 0.0 <= self.ps <= 1.0:
            raise ValueError("ps must lie in [0, 1]")


# Empirical budgets per (m, n) bucket; ps = 0.25 throughout.
PRESETS = {
    (75, 50): AdaConfig(sg_iter=50, da_iter=3, vfh_iter=2, ps=0.25, preset="75_50"),
    (100, 75): AdaConfig(sg_iter=100, da_iter=7, vfh_iter=2, ps=0.25, preset="100_75"),
    (125, 100): AdaConfig(sg_iter=170, da_iter=10, vfh_iter=2, ps=0.25, preset="125_100"),
    (150, 100): AdaConfig(sg_iter=170, da_iter=12, vfh_iter=2, ps=0.25, preset="150_100"),
}


def preset_config(name_or_size) -> AdaConfig:
    """Look up a preset by bucket name ("75_50", letter prefixes tolerated)
    or by (m, n); unknown sizes map to the nearest bucket by m * n."""
    if isinstance(name_or_size, str):
        text = name_or_size.strip().lstrip("abc").strip("_")
        parts = text.split("_")
        if len(parts) < 2:
            raise ValueError(f"cannot parse preset name {name_or_size!r}")
        size = (int(parts[0]), int(parts[1]))
        if size in PRESETS:
            return PRESETS[size]
        raise ValueError(f"unknown preset {name_or_size!r}")
    m, n = name_or_size
    if (m, n) in PRESETS:
        return PRESETS[(m, n)]
    area = m * n
    key = min(PRESETS, key=lambda s: abs(s[0] * s[1] - area))
    return replace(PRESETS[key], preset=f"{key[0]}_{key[1]}")


def vfh(
    inst: Instance,
    y_gamma,
    ps: float,
    node_limit: int | None = None,
    time_limit: float | None = None,
) -> Solution:
    """Force open a cheap fraction of the given facilities, then solve exactly.

    The facilities are sorted by sum_i c[i, j] + m * f[j] (ties to the lower
    index) and the first ceil(ps * |y_gamma|) are fixed open. An empty input
    set degenerates to an unrestricted exact solve. If the engine hits its
    limits the incumbent is returned, flagged heuristic in its provenance.
    """
    open_now = sorted(int(j) for j in y_gamma)
    keys = facility_sort_keys(inst)
    open_now.sort(key=lambda j: (keys[j], j))
    count = math.ceil(ps * len(open_now)) if open_now else 0
    fixed = open_now[:count]
    spec = ProblemSpec.splpo(inst, forced_open=fixed)
    res = branch_and_bound(spec, node_limit=node_limit, time_limit=time_limit)
    sol = res.solution
    provenance = {
        "algorithm": "vfh",
        "fixed_open": [j + 1 for j in fixed],
        "engine_status": res.status,
        "heuristic": res.status != "optimal",
    }
    return Solution(
        open_facilities=sol.open_facilities,
        assign=sol.assign,
        objective=sol.objective,
        provenance=provenance,
    )


@dataclass
class AdaResult:
    best_solution: Solution
    best_ub: float
    lb_sg: float
    lb_da: float
    sg: SgResult
    da_trace: list
    da_status: str
    vfh_solutions: list = field(default_factory=list)
    hc_solution: Solution | None = None
    timings: dict = field(default_factory=dict)
    stages_completed: list = field(default_factory=list)
    config: AdaConfig | None = None

    @property
    def best_lb(self) -> float:
        return max(self.lb_sg, self.lb_da)


def ada(inst: Instance, cfg: AdaConfig = AdaConfig()) -> AdaResult:
    """Run the full pipeline and return the best feasible solution found.

    Stages: greedy bound, subgradient warm-up from mu_i = min_j (c[i,j]+f[j]),
    dual ascent seeded with the warm-up's best multipliers, then vfh_iter
    rounds of one ascent iteration followed by a variable-fixing solve. A
    stage failure leaves earlier results intact; completed stages are listed
    in the result.
    """
    timings: dict = {}
    stages: list = []

    t0 = time.perf_counter()
    hc_sol, _ = heuristic_hc(inst)
    timings["hc"] = time.perf_counter() - t0
    stages.append("hc")

    t0 = time.perf_counter()
    sg = subgradient_method(
        inst,
        SgConfig(max_iter=cfg.sg_iter, lr_aim=hc_sol.objective),
        start=default_start(inst),
    )
    timings["sg"] = time.perf_counter() - t0
    stages.append("sg")

    da_cfg = DaConfig(
        epsilon=cfg.epsilon,
        prefix=cfg.prefix,
        node_limit=cfg.node_limit,
        time_limit=cfg.time_limit,
        top_rule=cfg.top_rule,
    )
    driver = DualAscent(inst, sg.best_mu, da_cfg)
    t0 = time.perf_counter()
    for _ in range(cfg.da_iter):
        if driver.done:
            break
        driver.step()
    timings["da"] = time.perf_counter() - t0
    stages.append("da")

    vfh_solutions: list[Solution] = []
    t0 = time.perf_counter()
    for round_no in range(cfg.vfh_iter):
        last: SlrSolution | None = driver.last
        if not driver.done:
            last = driver.step()
        if last is None:
            break
        sol = vfh(
            inst,
            last.open_facilities,
            cfg.ps,
            node_limit=cfg.node_limit,
            time_limit=cfg.time_limit,
        )
        sol.provenance["round"] = round_no
        vfh_solutions.append(sol)
    timings["vfh"] = time.perf_counter() - t0
    stages.append("vfh")

    candidates = [hc_sol] + vfh_solutions
    feasible = [s for s in candidates if not check_feasible(inst, s)]
    best = min(feasible, key=lambda s: s.objective)

    da_result = driver.result()
    return AdaResult(
        best_solution=best,
        best_ub=best.objective,
        lb_sg=sg.best_value,
        lb_da=da_result.best_lower_bound,
        sg=sg,
        da_trace=da_result.trace,
        da_status=da_result.status,
        vfh_solutions=vfh_solutions,
        hc_solution=hc_sol,
        timings=timings,
        stages_completed=stages,
        config=cfg,
    )


__all__ = ["AdaConfig", "AdaResult", "PRESETS", "ada", "preset_config", "vfh"]
