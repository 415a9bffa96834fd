"""Exact optimization over open-facility sets.

Because every customer must be served by its most preferred open facility,
both the original problem and its service-relaxed variant reduce to a search
over open sets: fixing the set fixes the assignment. The engine is a
depth-first branch and bound over facility open/close decisions, with a
full-enumeration oracle for verification. Both share one leaf-evaluation
routine so their objective arithmetic is bit-identical.

Lower bounds used at a node (open set O forced, C forced closed, U undecided):
  * every customer priced at its cheapest facility outside C, plus opening
    costs of O, and
  * when O is non-empty, the cost of serving everyone from O minus, for each
    undecided facility, the best net saving it could possibly contribute
    (per-customer improvements over O, less its opening cost).
Both are valid because preference-forced assignments never cost less than
cost-minimal ones and savings of a set of facilities never exceed the sum of
their individual savings.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from .instance import Instance, facility_sort_keys
from .solution import Solution, UNASSIGNED, heuristic_hc

KIND_SPLPO = "splpo"
KIND_SLR = "slr"


class InfeasibleError(RuntimeError):
    """No open set satisfies the spec (for example, everything forced closed)."""


@dataclass(frozen=True)
class ProblemSpec:
    """What to optimize: the original problem or its service-relaxed variant.

    gamma is only meaningful for kind "slr" (per-customer service credits);
    forced_open facilities are charged and may not be closed; forbidden
    pairs (i, j) make any open set whose forced assignment serves i from j
    infeasible. allow_empty permits the no-facility solution (slr only).
    """

    kind: str
    inst: Instance
    gamma: np.ndarray | None = None
    forced_open: frozenset = frozenset()
    forbidden: frozenset = frozenset()
    allow_empty: bool = False

    def __post_init__(self):
        if self.kind not in (KIND_SPLPO, KIND_SLR):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.kind == KIND_SPLPO:
            if self.gamma is not None:
                raise ValueError("gamma is only valid for the slr kind")
            if self.allow_empty:
                raise ValueError("the empty open set is only valid for the slr kind")
        else:
            if self.gamma is None:
                raise ValueError("the slr kind requires gamma")
            g = np.ascontiguousarray(self.gamma, dtype=float)
            if g.shape != (self.inst.m,):
                raise ValueError(f"gamma must have shape ({self.inst.m},)")
            g.setflags(write=False)
            object.__setattr__(self, "gamma", g)
        bad = [j for j in self.forced_open if not 0 <= j < self.inst.n]
        if bad:
            raise ValueError(f"forced_open contains invalid facilities {bad}")

    @staticmethod
    def splpo(inst: Instance, forced_open=(), forbidden=()) -> "ProblemSpec":
        return ProblemSpec(
            kind=KIND_SPLPO,
            inst=inst,
            forced_open=frozenset(int(j) for j in forced_open),
            forbidden=frozenset((int(i), int(j)) for i, j in forbidden),
        )

    @staticmethod
    def slr(inst: Instance, gamma, forbidden=(), allow_empty=True) -> "ProblemSpec":
        return ProblemSpec(
            kind=KIND_SLR,
            inst=inst,
            gamma=np.asarray(gamma, dtype=float),
            forbidden=frozenset((int(i), int(j)) for i, j in forbidden),
            allow_empty=allow_empty,
        )


@dataclass
class ExactResult:
    value: float
    solution: Solution | None
    status: str  # "optimal" or "incomplete"
    lower_bound: float
    nodes: int


class _Context:
    """Precomputed arrays shared by the evaluator, bounds, and oracles."""

    def __init__(self, spec: ProblemSpec):
        inst = spec.inst
        self.kind = spec.kind
        self.m, self.n = inst.m, inst.n
        self.c = inst.c
        self.f = inst.f
        self.p = inst.p
        self.rows = np.arange(self.m)
        self.big = self.n + 1
        self.allow_empty = spec.allow_empty
        self.forced = np.zeros(self.n, dtype=bool)
        for j in spec.forced_open:
            self.forced[j] = True
        if spec.kind == KIND_SLR:
            self.gamma = spec.gamma
            self.gamma_sum = float(spec.gamma.sum())
            self.reduced = inst.c - spec.gamma[:, None]
        else:
            self.gamma = None
            self.gamma_sum = 0.0
            self.reduced = None
        if spec.forbidden:
            mask = np.zeros((self.m, self.n), dtype=bool)
            for i, j in spec.forbidden:
                mask[i, j] = True
            self.forbidden = mask
        else:
            self.forbidden = None

    def evaluate(self, open_mask: np.ndarray):
        """Value and forced assignment of an open set; None if infeasible."""
        if not open_mask.any():
            if self.allow_empty and not self.forced.any():
                return self.gamma_sum, np.full(self.m, UNASSIGNED, dtype=np.int64)
            return None
        ranked = np.where(open_mask[None, :], self.p, self.big)
        assign = np.argmin(ranked, axis=1)
        if self.forbidden is not None and self.forbidden[self.rows, assign].any():
            return None
        service = self.c[self.rows, assign]
        if self.kind == KIND_SLR:
            value = float(
                (service - self.gamma).sum() + self.f[open_mask].sum() + self.gamma_sum
            )
        else:
            value = float(service.sum() + self.f[open_mask].sum())
        return value, assign


def _result_solution(value, open_mask, assign, provenance) -> Solution:
    return Solution(
        open_facilities=frozenset(int(j) for j in np.flatnonzero(open_mask)),
        assign=assign.copy(),
        objective=value,
        provenance=provenance,
    )


def _node_bound(ctx: _Context, open_mask, closed_mask) -> float:
    """Valid lower bound on every leaf below (open ⊇ open_mask, ∩ closed = ∅).

    Returns +inf when no feasible leaf exists in the subtree.
    """
    avail = ~closed_mask
    if ctx.forbidden is not None:
        allowed = avail[None, :] & ~ctx.forbidden
    else:
        allowed = np.broadcast_to(avail[None, :], (ctx.m, ctx.n))
    open_any = open_mask.any()
    costs = ctx.reduced if ctx.kind == KIND_SLR else ctx.c
    cmin = np.min(np.where(allowed, costs, np.inf), axis=1)
    fopen = float(ctx.f[open_mask].sum())

    if ctx.kind == KIND_SLR:
        if open_any:
            if not np.isfinite(cmin).all():
                return math.inf  # someone cannot be served, yet service is forced
            bound = ctx.gamma_sum + fopen + float(cmin.sum())
        else:
            # The empty set stays reachable, so unserved customers cost nothing.
            bound = ctx.gamma_sum + float(np.minimum(cmin, 0.0).sum())
    else:
        if not np.isfinite(cmin).all():
            return math.inf
        bound = fopen + float(cmin.sum())

    if open_any and ctx.forbidden is None:
        # Savings bound: serve everyone from the open set, then credit each
        # undecided facility with at most its own best-case net saving.
        from_open = np.min(np.where(open_mask[None, :], costs, np.inf), axis=1)
        undecided = avail & ~open_mask
        if undecided.any():
            gains = np.maximum(from_open[:, None] - costs, 0.0)
            per_facility = gains.sum(axis=0, where=undecided[None, :])
            savings = float(np.maximum(per_facility[undecided] - ctx.f[undecided], 0.0).sum())
        else:
            savings = 0.0
        alt = fopen + float(from_open.sum()) + ctx.gamma_sum - savings
        bound = max(bound, alt)
    return bound


def branch_and_bound(
    spec: ProblemSpec,
    node_limit: int | None = None,
    time_limit: float | None = None,
    on_node=None,
) -> ExactResult:
    """Depth-first search over open/close decisions with incumbent pruning.

    Facilities are branched in ascending order of sum_i c[i, j] + m * f[j],
    opening before closing. Entering a node whose bound is not below the
    incumbent prunes its subtree. After each opening decision the current
    open set itself is evaluated as a candidate solution, which covers every
    reachable leaf. With limits exhausted the result is flagged incomplete
    and carries a still-valid lower bound.

    on_node, when given, is called as on_node(depth, open_mask, closed_mask,
    bound, incumbent_value) for every expanded node (instrumentation only).
    """
    ctx = _Context(spec)
    inst = spec.inst
    keys = facility_sort_keys(inst)
    free = [j for j in range(inst.n) if not ctx.forced[j]]
    order = sorted(free, key=lambda j: (keys[j], j))

    incumbent_value = math.inf
    incumbent_mask = None
    incumbent_assign = None

    def consider(mask) -> None:
        nonlocal incumbent_value, incumbent_mask, incumbent_assign
        out = ctx.evaluate(mask)
        if out is None:
            return
        value, assign = out
        if value <= incumbent_value:
            incumbent_value = value
            incumbent_mask = mask.copy()
            incumbent_assign = assign

    if spec.kind == KIND_SPLPO:
        hc_sol, _ = heuristic_hc(inst)
        warm = ctx.forced.copy()
        for j in hc_sol.open_facilities:
            warm[j] = True
        consider(warm)

    deadline = time.monotonic() + time_limit if time_limit is not None else None
    root_open = ctx.forced.copy()
    root_closed = np.zeros(inst.n, dtype=bool)
    # Stack entries: (depth, open_mask, closed_mask, inherited_bound, just_opened)
    stack = [(0, root_open, root_closed, -math.inf, True)]
    nodes = 0
    aborted = False
    frontier_bound = math.inf

    while stack:
        depth, open_mask, closed_mask, inherited, just_opened = stack.pop()
        if (node_limit is not None and nodes >= node_limit) or (
            deadline is not None and time.monotonic() >= deadline
        ):
            aborted = True
            frontier_bound = min(frontier_bound, inherited)
            for entry in stack:
                frontier_bound = min(frontier_bound, entry[3])
            break
        nodes += 1
        bound = _node_bound(ctx, open_mask, closed_mask)
        if on_node is not None:
            on_node(depth, open_mask.copy(), closed_mask.copy(), bound, incumbent_value)
        if just_opened or depth == 0:
            # Evaluate the current open set before the prune check so that a
            # subtree whose bound ties the incumbent still surrenders its
            # equal-valued solution (deterministic tie-breaking).
            consider(open_mask)
        if bound >= incumbent_value:
            continue
        if depth == len(order):
            continue
        j = order[depth]
        closed_child = closed_mask.copy()
        closed_child[j] = True
        stack.append((depth + 1, open_mask, closed_child, bound, False))
        open_child = open_mask.copy()
        open_child[j] = True
        stack.append((depth + 1, open_child, closed_mask, bound, True))

    if incumbent_mask is None and not aborted:
        raise InfeasibleError("no feasible open set exists for this spec")

    if aborted:
        status = "incomplete"
        lower_bound = min(incumbent_value, frontier_bound)
    else:
        status = "optimal"
        lower_bound = incumbent_value

    solution = None
    if incumbent_mask is not None:
        solution = _result_solution(
            incumbent_value,
            incumbent_mask,
            incumbent_assign,
            {"algorithm": "branch_and_bound", "kind": spec.kind, "status": status},
        )
    return ExactResult(
        value=incumbent_value,
        solution=solution,
        status=status,
        lower_bound=lower_bound,
        nodes=nodes,
    )


def brute_force(spec: ProblemSpec, max_sites: int = 20) -> ExactResult:
    """Enumerate every open set (oracle; n capped to keep this tractable).

    Reported values go through the same evaluator as branch_and_bound. Ties
    resolve to the set whose indicator vector (facility order) is smallest.
    """
    inst = spec.inst
    n = inst.n
    if n > max_sites:
        raise ValueError(f"brute force limited to {max_sites} sites, got {n}")
    ctx = _Context(spec)
    total = 1 << n
    shifts = n - 1 - np.arange(n)

    best_k = -1
    best_value = math.inf
    if ctx.forbidden is None:
        forced_idx = np.flatnonzero(ctx.forced)
        chunk = max(1, (1 << 22) // max(1, inst.m * n))
        for start in range(0, total, chunk):
            ks = np.arange(start, min(start + chunk, total), dtype=np.int64)
            masks = ((ks[:, None] >> shifts[None, :]) & 1).astype(bool)
            ok = masks.any(axis=1)
            if ctx.allow_empty and not forced_idx.size:
                ok |= ks == 0
            if forced_idx.size:
                ok &= masks[:, forced_idx].all(axis=1)
            if not ok.any():
                continue
            ranked = np.where(masks[:, None, :], ctx.p[None, :, :], ctx.big)
            assign = np.argmin(ranked, axis=2)
            service = np.take_along_axis(
                ctx.c[None, :, :], assign[:, :, None], axis=2
            )[:, :, 0]
            fsums = masks.astype(float) @ ctx.f
            if ctx.kind == KIND_SLR:
                values = (service - ctx.gamma[None, :]).sum(axis=1) + fsums + ctx.gamma_sum
                if ctx.allow_empty and not forced_idx.size and start == 0:
                    values[0] = ctx.gamma_sum
            else:
                values = service.sum(axis=1) + fsums
            values = np.where(ok, values, np.inf)
            k_local = int(np.argmin(values))
            if values[k_local] < best_value:
                best_value = float(values[k_local])
                best_k = start + k_local
    else:
        for k in range(total):
            mask = ((k >> shifts) & 1).astype(bool)
            if ctx.forced.any() and not mask[ctx.forced].all():
                continue
            out = ctx.evaluate(mask)
            if out is None:
                continue
            value, _ = out
            if value < best_value:
                best_value = value
                best_k = k

    if best_k < 0:
        raise InfeasibleError("no feasible open set exists for this spec")

    mask = ((best_k >> shifts) & 1).astype(bool)
    value, assign = ctx.evaluate(mask)
    solution = _result_solution(
        value,
        mask,
        assign,
        {"algorithm": "brute_force", "kind": spec.kind, "status": "optimal"},
    )
    return ExactResult(
        value=value, solution=solution, status="optimal", lower_bound=value, nodes=total
    )


def to_mps(spec: ProblemSpec, problem_name: str = "SPLPO") -> str:
    """Emit the subproblem in MPS text form for external cross-checking.

    Columns are named x_<i>_<j> and y_<j> with 1-based indices. For the slr
    kind the objective uses the gamma-reduced service costs and omits the
    constant sum of gamma (add it back when comparing values). Emission only;
    nothing in this package consumes the output.
    """
    inst = spec.inst
    m, n = inst.m, inst.n
    slr = spec.kind == KIND_SLR
    costs = inst.c - spec.gamma[:, None] if slr else inst.c
    lines = [f"NAME {problem_name}", "ROWS", " N  COST"]
    assign_kind = "L" if slr else "E"
    for i in range(m):
        lines.append(f" {assign_kind}  ASSIGN_{i + 1}")
    for i in range(m):
        for j in range(n):
            lines.append(f" L  VUB_{i + 1}_{j + 1}")
    for i in range(m):
        for j in range(n):
            lines.append(f" G  PREF_{i + 1}_{j + 1}")
    lines.append("COLUMNS")
    lines.append("    MARKER    'MARKER'    'INTORG'")
    for j in range(n):
        col = f"y_{j + 1}"
        lines.append(f"    {col}  COST  {inst.f[j]:.12g}")
        for i in range(m):
            lines.append(f"    {col}  VUB_{i + 1}_{j + 1}  -1")
            lines.append(f"    {col}  PREF_{i + 1}_{j + 1}  -1")
    lines.append("    MARKER    'MARKER'    'INTEND'")
    for i in range(m):
        for j in range(n):
            col = f"x_{i + 1}_{j + 1}"
            lines.append(f"    {col}  COST  {costs[i, j]:.12g}")
            lines.append(f"    {col}  ASSIGN_{i + 1}  1")
            lines.append(f"    {col}  VUB_{i + 1}_{j + 1}  1")
            for jp in range(n):
                if inst.p[i, jp] >= inst.p[i, j]:
                    lines.append(f"    {col}  PREF_{i + 1}_{jp + 1}  1")
    lines.append("RHS")
    for i in range(m):
        lines.append(f"    RHS  ASSIGN_{i + 1}  1")
    lines.append("BOUNDS")
    for j in range(n):
        kind = "FX" if j in spec.forced_open else "BV"
        val = "  1" if kind == "FX" else ""
        lines.append(f" {kind} BND  y_{j + 1}{val}")
    for i in range(m):
        for j in range(n):
            if (i, j) in spec.forbidden:
                lines.append(f" FX BND  x_{i + 1}_{j + 1}  0")
            else:
                lines.append(f" UP BND  x_{i + 1}_{j + 1}  1")
    lines.append("ENDATA")
    return "\n".join(lines) + "\n"


__all__ = [
    "ExactResult",
    "InfeasibleError",
    "KIND_SLR",
    "KIND_SPLPO",
    "ProblemSpec",
    "branch_and_bound",
    "brute_force",
    "to_mps",
]
