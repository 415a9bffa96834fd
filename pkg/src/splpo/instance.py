"""Problem instances: costs, preference rankings, parsing, and generation.

An instance couples m customers with n candidate facility sites. Each
customer carries a full strict ranking of the sites (rank 1 is the
favourite), which is what distinguishes this problem from plain
uncapacitated facility location: an open facility that a customer prefers
over its assigned server makes the assignment infeasible.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

FORMAT_NAME = "SPLPO"
FORMAT_VERSION = 1


class InstanceFormatError(ValueError):
    """Malformed instance document; remembers the offending line number."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


@dataclass(eq=False, repr=False)
class Instance:
    """Immutable instance data.

    f: opening costs, shape (n,), all >= 0.
    c: service costs, shape (m, n), all >= 0.
    p: preference ranks, shape (m, n); every row is a permutation of 1..n
       with 1 marking the customer's most preferred site.
    """

    f: np.ndarray
    c: np.ndarray
    p: np.ndarray
    name: str = ""

    def __post_init__(self):
        self.f = np.ascontiguousarray(self.f, dtype=float)
        self.c = np.ascontiguousarray(self.c, dtype=float)
        self.p = np.ascontiguousarray(self.p, dtype=np.int64)
        if self.c.ndim != 2:
            raise ValueError("c must be a 2-d cost matrix")
        m, n = self.c.shape
        if m < 1 or n < 1:
            raise ValueError("need at least one customer and one site")
        if self.f.shape != (n,):
            raise ValueError(f"f must have shape ({n},), got {self.f.shape}")
        if self.p.shape != (m, n):
            raise ValueError(f"p must have shape ({m}, {n}), got {self.p.shape}")
        if np.any(self.f < 0):
            raise ValueError("negative opening cost")
        if np.any(self.c < 0):
            raise ValueError("negative service cost")
        expected = np.arange(1, n + 1)
        for i in range(m):
            if not np.array_equal(np.sort(self.p[i]), expected):
                raise ValueError(f"preference row {i + 1} is not a permutation of 1..{n}")
        for a in (self.f, self.c, self.p):
            a.setflags(write=False)

    @property
    def m(self) -> int:
        return self.c.shape[0]

    @property
    def n(self) -> int:
        return self.c.shape[1]

    @cached_property
    def facility_of_rank(self) -> np.ndarray:
        """facility_of_rank[i, r-1] is the facility customer i ranks r-th."""
        out = np.empty_like(self.p)
        out[np.arange(self.m)[:, None], self.p - 1] = np.arange(self.n)[None, :]
        out.setflags(write=False)
        return out

    def __eq__(self, other) -> bool:
        if not isinstance(other, Instance):
            return NotImplemented
        return (
            np.array_equal(self.f, other.f)
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.p, other.p)
        )

    def __repr__(self) -> str:
        tag = f" {self.name!r}" if self.name else ""
        return f"Instance(m={self.m}, n={self.n}{tag})"


class PreferenceSets:
    """Per-(customer, facility) site sets derived from the ranking matrix.

    For customer i and facility j:
      strictly_worse(i, j)   sites ranked below j by i,
      weakly_preferred(i, j) sites ranked at or above j (includes j),
      worse_or_self(i, j)    strictly worse sites plus j itself.
    """

    def __init__(self, inst: Instance):
        self._p = inst.p
        self._all = frozenset(range(inst.n))

    def strictly_worse(self, i: int, j: int) -> frozenset:
        row = self._p[i]
        return frozenset(np.flatnonzero(row > row[j]).tolist())

    def weakly_preferred(self, i: int, j: int) -> frozenset:
        row = self._p[i]
        return frozenset(np.flatnonzero(row <= row[j]).tolist())

    def worse_or_self(self, i: int, j: int) -> frozenset:
        return self.strictly_worse(i, j) | {j}

    @property
    def all_sites(self) -> frozenset:
        return self._all


@dataclass(frozen=True)
class CostLadder:
    """Per-customer sorted service costs plus the cost ceiling vector.

    sorted_costs[i] is customer i's service costs in non-decreasing order,
    order[i, k] the facility delivering the k-th cheapest cost, and
    cp[i] = max_j (c[i, j] + f[j]).
    """

    sorted_costs: np.ndarray
    order: np.ndarray
    cp: np.ndarray


def cost_ladder(inst: Instance) -> CostLadder:
    order = np.argsort(inst.c, axis=1, kind="stable")
    sorted_costs = np.take_along_axis(inst.c, order, axis=1)
    cp = (inst.c + inst.f[None, :]).max(axis=1)
    for a in (sorted_costs, order, cp):
        a.setflags(write=False)
    return CostLadder(sorted_costs=sorted_costs, order=order, cp=cp)


def facility_sort_keys(inst: Instance) -> np.ndarray:
    """Attractiveness key per facility: sum_i c[i, j] + m * f[j] (lower is better)."""
    return inst.c.sum(axis=0) + inst.m * inst.f


# ---------------------------------------------------------------------------
# Canonical text format
#
#   line 1: "SPLPO 1"
#   line 2: "m n"
#   line 3: f_1 ... f_n
#   next m lines: rows of c
#   next m lines: rows of p (each a permutation of 1..n)
# ---------------------------------------------------------------------------


def _fmt(v: float) -> str:
    fv = float(v)
    if fv.is_integer() and abs(fv) < 2**53:
        return str(int(fv))
    return repr(fv)


def write_instance(inst: Instance) -> str:
    lines = [f"{FORMAT_NAME} {FORMAT_VERSION}", f"{inst.m} {inst.n}"]
    lines.append(" ".join(_fmt(v) for v in inst.f))
    for i in range(inst.m):
        lines.append(" ".join(_fmt(v) for v in inst.c[i]))
    for i in range(inst.m):
        lines.append(" ".join(str(int(v)) for v in inst.p[i]))
    return "\n".join(lines) + "\n"


def _parse_row(tokens: list[str], n: int, kind: str, row: int, ln: int) -> list[float]:
    if len(tokens) != n:
        raise InstanceFormatError(
            f"{kind} row {row} has {len(tokens)} values, expected {n}", ln
        )
    out = []
    for t in tokens:
        try:
            out.append(float(t))
        except ValueError:
            raise InstanceFormatError(f"bad number {t!r} in {kind} row {row}", ln) from None
    return out


def parse_instance(text: str, name: str = "") -> Instance:
    """Parse a canonical-format document into a validated Instance."""
    lines = [(i + 1, ln.strip()) for i, ln in enumerate(text.splitlines())]
    lines = [(no, ln) for no, ln in lines if ln]
    if not lines:
        raise InstanceFormatError("empty document")

    no, header = lines[0]
    parts = header.split()
    if len(parts) != 2 or parts[0] != FORMAT_NAME or parts[1] != str(FORMAT_VERSION):
        raise InstanceFormatError(f"malformed header {header!r}", no)

    if len(lines) < 2:
        raise InstanceFormatError("missing dimension line", no)
    no, dims = lines[1]
    try:
        m, n = (int(t) for t in dims.split())
    except ValueError:
        raise InstanceFormatError(f"malformed dimension line {dims!r}", no) from None
    if m < 1 or n < 1:
        raise InstanceFormatError(f"dimensions must be positive, got {m} {n}", no)

    expected = 3 + 2 * m
    if len(lines) != expected:
        raise InstanceFormatError(
            f"expected {expected} non-empty lines for m={m}, got {len(lines)}",
            lines[-1][0],
        )

    no, frow = lines[2]
    f = _parse_row(frow.split(), n, "opening-cost", 1, no)
    if any(v < 0 for v in f):
        raise InstanceFormatError("negative cost in opening-cost row", no)

    c = []
    for i in range(m):
        no, crow = lines[3 + i]
        vals = _parse_row(crow.split(), n, "service-cost", i + 1, no)
        if any(v < 0 for v in vals):
            raise InstanceFormatError(f"negative cost in service-cost row {i + 1}", no)
        c.append(vals)

    p = []
    for i in range(m):
        no, prow = lines[3 + m + i]
        vals = _parse_row(prow.split(), n, "preference", i + 1, no)
        ints = [int(v) for v in vals]
        if any(iv != v for iv, v in zip(ints, vals)) or sorted(ints) != list(range(1, n + 1)):
            raise InstanceFormatError(f"preference row {i + 1} is not a permutation of 1..{n}", no)
        p.append(ints)

    return Instance(f=np.array(f), c=np.array(c), p=np.array(p), name=name)


# ---------------------------------------------------------------------------
# Random generation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GeneratorConfig:
    """Knobs for the seeded instance generator.

    mode "uniform" draws each preference row as a uniform random permutation;
    mode "cost-consistent" ranks facilities by the generated service costs
    (random tie-breaking), so cheaper sites are preferred.
    """

    mode: str = "uniform"
    cost_range: tuple[int, int] = (1000, 2000)
    open_range: tuple[int, int] = (8000, 12000)
    scale: int = 1

    def __post_init__(self):
        if self.mode not in ("uniform", "cost-consistent"):
            raise ValueError(f"unknown generator mode {self.mode!r}")


def generate_instance(
    m: int, n: int, seed: int, params: GeneratorConfig | None = None, name: str = ""
) -> Instance:
    """Deterministically generate an instance from (m, n, seed, params).

    Costs are integers so that round-trips through the text format and
    equality tests are exact. Draw order is fixed: c, then f, then
    preferences, one customer row at a time.
    """
    if m < 1 or n < 1:
        raise ValueError("m and n must be at least 1")
    cfg = params or GeneratorConfig()
    rng = np.random.default_rng(seed)
    lo, hi = cfg.cost_range
    c = rng.integers(lo, hi + 1, size=(m, n)).astype(float) * cfg.scale
    lo, hi = cfg.open_range
    f = rng.integers(lo, hi + 1, size=n).astype(float) * cfg.scale
    p = np.empty((m, n), dtype=np.int64)
    for i in range(m):
        if cfg.mode == "uniform":
            perm = rng.permutation(n)
        else:
            perm = np.lexsort((rng.random(n), c[i]))
        p[i, perm] = np.arange(1, n + 1)
    return Instance(f=f, c=c, p=p, name=name)


# ---------------------------------------------------------------------------
# OR-Library warehouse-location import (secondary path)
# ---------------------------------------------------------------------------


def parse_orlib(text: str, preferences: str, name: str = "") -> Instance:
    """Import an OR-Library uncapacitated warehouse file plus a preference sidecar.

    The main file lists n warehouses then m customers; capacity and demand
    fields are ignored. The sidecar holds m whitespace-separated permutation
    rows of 1..n, in customer order.
    """
    tokens = text.split()
    pos = 0

    def take(what: str) -> str:
        nonlocal pos
        if pos >= len(tokens):
            raise InstanceFormatError(f"unexpected end of file reading {what}")
        tok = tokens[pos]
        pos += 1
        return tok

    def take_float(what: str) -> float:
        tok = take(what)
        try:
            return float(tok)
        except ValueError:
            raise InstanceFormatError(f"bad number {tok!r} reading {what}") from None

    n = int(take_float("warehouse count"))
    m = int(take_float("customer count"))
    f = np.empty(n)
    for j in range(n):
        cap = take("capacity")  # may be the literal word "capacity"
        del cap
        f[j] = take_float(f"fixed cost of warehouse {j + 1}")
    c = np.empty((m, n))
    for i in range(m):
        take_float(f"demand of customer {i + 1}")
        for j in range(n):
            c[i, j] = take_float(f"allocation cost ({i + 1}, {j + 1})")

    prows = preferences.split()
    if len(prows) != m * n:
        raise InstanceFormatError(
            f"preference sidecar has {len(prows)} values, expected {m * n}"
        )
    p = np.array([int(t) for t in prows], dtype=np.int64).reshape(m, n)
    return Instance(f=f, c=c, p=p, name=name)


def default_epsilon(ladder: CostLadder) -> float:
    """Rung offset: half the smallest positive gap between consecutive sorted costs."""
    diffs = np.diff(ladder.sorted_costs, axis=1)
    pos = diffs[diffs > 0]
    if pos.size:
        return float(pos.min()) / 2.0
    top = float(ladder.sorted_costs.max()) if ladder.sorted_costs.size else 0.0
    return 1e-6 * (1.0 + top)


__all__ = [
    "CostLadder",
    "FORMAT_NAME",
    "FORMAT_VERSION",
    "GeneratorConfig",
    "Instance",
    "InstanceFormatError",
    "PreferenceSets",
    "cost_ladder",
    "default_epsilon",
    "facility_sort_keys",
    "generate_instance",
    "parse_instance",
    "parse_orlib",
    "write_instance",
]
