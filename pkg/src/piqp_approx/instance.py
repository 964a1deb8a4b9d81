"""Problem data model for positive 0-1 quadratic programs.

An instance maximizes  sum_{i<j} b_ij x_i x_j + sum_i c_i x_i  over 0-1 vectors x
subject to p nonnegative knapsack rows  sum_j a_ij x_j <= W_i.  B is stored as a
full symmetric matrix whose (i, j) entry is the benefit of the edge ij, so each
edge is counted once in the objective.

Everything here is exact integer arithmetic on int64 arrays.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

log = logging.getLogger(__name__)


class InstanceError(ValueError):
    """Raised for malformed instance data or files."""


def _frozen(a, ndim: int, name: str) -> np.ndarray:
    raw = np.asarray(a)
    if raw.dtype == object or raw.dtype.kind not in "iub":
        if raw.size and (raw.dtype.kind not in "f" or not np.all(np.mod(raw, 1) == 0)):
            raise InstanceError(f"{name} must contain integers")
    arr = np.array(raw, dtype=np.int64, copy=True)
    if arr.ndim != ndim:
        # allow empty lists for 2-d fields like A=[[]] or B=[]
        if arr.size == 0:
            arr = arr.reshape((0,) * ndim) if ndim == 1 else arr.reshape(0, 0)
        else:
            raise InstanceError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True, eq=False)
class PiqpInstance:
    B: np.ndarray
    c: np.ndarray
    A: np.ndarray
    budgets: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "B", _frozen(self.B, 2, "B"))
        object.__setattr__(self, "c", _frozen(self.c, 1, "c"))
        object.__setattr__(self, "A", _frozen(self.A, 2, "A"))
        object.__setattr__(self, "budgets", _frozen(self.budgets, 1, "budgets"))

    @property
    def n(self) -> int:
        return int(self.c.shape[0])

    @property
    def p(self) -> int:
        return int(self.budgets.shape[0])

    @property
    def fixed(self) -> np.ndarray:
        return np.zeros(self.n, dtype=bool)

    def __eq__(self, other):
        if not isinstance(other, PiqpInstance):
            return NotImplemented
        return (
            np.array_equal(self.B, other.B)
            and np.array_equal(self.c, other.c)
            and np.array_equal(self.A, other.A)
            and np.array_equal(self.budgets, other.budgets)
        )

    __hash__ = None


@dataclass(frozen=True, eq=False)
class ScaledInstance:
    """Uniform-budget view of a PiqpInstance.

    ``B`` and ``c`` start as copies of the base data and lose entries when pairs
    are pruned or variables are forced to zero.  Forced variables are tracked in
    ``fixed`` so that indices stay aligned with the base instance.
    """

    base: PiqpInstance
    W: int
    A_hat: np.ndarray
    B: np.ndarray
    c: np.ndarray
    fixed: np.ndarray

    def __post_init__(self):
        for name in ("A_hat", "B", "c"):
            arr = np.array(getattr(self, name), dtype=np.int64, copy=True)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        fx = np.array(self.fixed, dtype=bool, copy=True)
        fx.setflags(write=False)
        object.__setattr__(self, "fixed", fx)

    @property
    def n(self) -> int:
        return self.base.n

    @property
    def p(self) -> int:
        return self.base.p

    @property
    def A(self) -> np.ndarray:
        return self.A_hat

    @property
    def budgets(self) -> np.ndarray:
        return np.full(self.p, self.W, dtype=np.int64)

    @property
    def a_max(self) -> int:
        return int(self.A_hat.max()) if self.A_hat.size else 0

    @property
    def free(self) -> np.ndarray:
        return ~self.fixed

    def replace(self, **changes) -> "ScaledInstance":
        kw = dict(base=self.base, W=self.W, A_hat=self.A_hat, B=self.B, c=self.c, fixed=self.fixed)
        kw.update(changes)
        return ScaledInstance(**kw)

    def force_zero(self, mask) -> "ScaledInstance":
        """Fix every variable in ``mask`` to 0 (benefits, linear term and weights cleared)."""
        mask = np.asarray(mask, dtype=bool)
        B = self.B.copy()
        B[mask, :] = 0
        B[:, mask] = 0
        c = self.c.copy()
        c[mask] = 0
        A = self.A_hat.copy()
        A[:, mask] = 0
        return self.replace(B=B, c=c, A_hat=A, fixed=self.fixed | mask)


@dataclass(frozen=True)
class BinarySolution:
    """A 0-1 assignment with its objective pieces and constraint usage.

    ``quadratic`` is the edge-once benefit sum_{i<j} b_ij x_i x_j; the symmetric
    form x^T B x is twice that.
    """

    x: tuple
    quadratic: int
    linear: int
    usage: tuple
    feasible: bool

    @property
    def objective(self) -> int:
        return self.quadratic + self.linear

    @property
    def symmetric_quadratic(self) -> int:
        return 2 * self.quadratic

    @property
    def support(self) -> list[int]:
        return [i for i, v in enumerate(self.x) if v]


def evaluate(problem, x) -> BinarySolution:
    """Score ``x`` on any object exposing ``B, c, A, budgets, fixed``.

    A vector that sets a fixed variable to 1 is reported infeasible.
    """
    xv = np.asarray(x, dtype=np.int64).reshape(-1)
    if xv.shape[0] != problem.n:
        raise ValueError(f"expected {problem.n} entries, got {xv.shape[0]}")
    if np.any((xv != 0) & (xv != 1)):
        raise ValueError("solution must be 0-1")
    quad = int(xv @ problem.B @ xv) // 2
    lin = int(problem.c @ xv)
    usage = problem.A @ xv if problem.p else np.zeros(0, dtype=np.int64)
    ok = bool(np.all(usage <= problem.budgets)) and not np.any(xv[problem.fixed])
    return BinarySolution(
        x=tuple(int(v) for v in xv),
        quadratic=quad,
        linear=lin,
        usage=tuple(int(u) for u in usage),
        feasible=ok,
    )


def zero_solution(problem) -> BinarySolution:
    return evaluate(problem, np.zeros(problem.n, dtype=np.int64))


@dataclass(frozen=True)
class GraphView:
    """Adjacency over the support of B with per-vertex combined weights."""

    neighbors: tuple
    weight: tuple
    benefit: tuple

    @classmethod
    def of(cls, problem) -> "GraphView":
        B = np.asarray(problem.B)
        nbrs = tuple(tuple(int(u) for u in np.flatnonzero(B[v])) for v in range(problem.n))
        w = np.asarray(problem.A).sum(axis=0) if problem.p else np.zeros(problem.n, dtype=np.int64)
        return cls(neighbors=nbrs, weight=tuple(int(v) for v in w),
                   benefit=tuple(tuple(int(b) for b in row) for row in B))


# -- validation ---------------------------------------------------------------

def validate(inst: PiqpInstance) -> list[str]:
    """Return human-readable invariant violations (empty when the instance is valid)."""
    out = []
    n, p = inst.n, inst.p
    B, A = inst.B, inst.A
    if B.shape != (n, n):
        out.append(f"B: shape {B.shape} does not match n={n}")
    if A.shape != (p, n) and not (p == 0 and A.size == 0):
        out.append(f"A: shape {A.shape} does not match (p, n)=({p}, {n})")
    if p < 1:
        out.append("budgets: at least one constraint is required")
    if out:
        return out
    for i, j in zip(*np.nonzero(B != B.T)):
        if i < j:
            out.append(f"B: asymmetric at ({i},{j})")
    for i in np.flatnonzero(np.diag(B)):
        out.append(f"B: nonzero diagonal at ({i},{i})")
    for i, j in zip(*np.nonzero(B < 0)):
        out.append(f"B: negative benefit at ({i},{j})")
    for j in np.flatnonzero(inst.c < 0):
        out.append(f"c: negative benefit at {j}")
    for i, j in zip(*np.nonzero(A < 0)):
        out.append(f"A: negative weight at ({i},{j})")
    for i in np.flatnonzero(inst.budgets < 1):
        out.append(f"budgets: budget must be positive at {i}")
    if not in_log_regime(inst):
        log.warning("p=%d exceeds ceil(log2 n) for n=%d; outside the logarithmic-constraint regime",
                    p, n)
    return out


def check(inst: PiqpInstance) -> PiqpInstance:
    errs = validate(inst)
    if errs:
        raise InstanceError("; ".join(errs))
    return inst


def in_log_regime(inst) -> bool:
    """True when p <= ceil(log2 n), the regime the approximation analysis covers."""
    return inst.p <= max(1, math.ceil(math.log2(inst.n))) if inst.n > 1 else inst.p <= 1


# -- scaling, pruning, splitting -----------------------------------------------

def scale(inst: PiqpInstance) -> ScaledInstance:
    """Bring every row to the common budget W = max_i W_i via a_ij -> ceil(a_ij W / W_i)."""
    W = int(inst.budgets.max())
    num = inst.A * W
    Wi = inst.budgets[:, None]
    A_hat = -((-num) // Wi)  # exact integer ceiling
    return ScaledInstance(
        base=inst, W=W, A_hat=A_hat, B=inst.B, c=inst.c,
        fixed=np.zeros(inst.n, dtype=bool),
    )


def prune_infeasible_pairs(s: ScaledInstance) -> ScaledInstance:
    """Drop benefits that no feasible solution can collect.

    A variable heavier than W in some row is forced to 0; a pair whose weights
    sum past W in some row loses its edge benefit.
    """
    A = s.A_hat
    too_heavy = (A > s.W).any(axis=0)
    out = s.force_zero(too_heavy) if too_heavy.any() else s
    A = out.A_hat
    # pair_bad[j, k] is True when some row has a_ij + a_ik > W
    pair_bad = np.zeros((s.n, s.n), dtype=bool)
    for row in A:
        pair_bad |= (row[:, None] + row[None, :]) > s.W
    if not (pair_bad & (out.B != 0)).any():
        return out
    B = out.B.copy()
    B[pair_bad] = 0
    return out.replace(B=B)


def heavy_set(s: ScaledInstance) -> np.ndarray:
    """Mask of variables with some scaled weight strictly above W/2."""
    return (2 * s.A_hat > s.W).any(axis=0) & ~s.fixed


def split_piqps_piqpr(s: ScaledInstance) -> tuple[ScaledInstance, ScaledInstance]:
    """Return (light restriction, heavy restriction) of a scaled instance."""
    heavy = heavy_set(s)
    light = s.force_zero(heavy) if heavy.any() else s
    return light, s.force_zero(~heavy)


# -- generators -------------------------------------------------------------------

def complete_graph(k: int) -> list[tuple[int, int]]:
    return [(i, j) for i in range(k) for j in range(i + 1, k)]


def random_graph(n: int, density: float, rng) -> list[tuple[int, int]]:
    mask = rng.random((n, n)) < density
    return [(i, j) for i in range(n) for j in range(i + 1, n) if mask[i, j]]


def _edges_to_matrix(n: int, edges, benefit=1) -> np.ndarray:
    B = np.zeros((n, n), dtype=np.int64)
    for e in edges:
        i, j = int(e[0]), int(e[1])
        b = int(e[2]) if len(e) > 2 else benefit
        if i == j:
            raise InstanceError(f"self-loop at {i}")
        B[i, j] = B[j, i] = b
    return B


def _graph_size(edges) -> int:
    return 1 + max((max(int(e[0]), int(e[1])) for e in edges), default=-1)


def generate(kind: str, seed: int = 0, **params) -> PiqpInstance:
    """Build a reproducible instance.

    kinds
    -----
    qkp     n, density, benefit_range=(1, 9), weight_range=(1, 9), p=1,
            linear_range=None.  Budgets are drawn uniformly from
            [max weight, row sum] (Gallo-style capacities).
    dsp     densest-k-subgraph: edges (or n + density for a random graph), k.
    clique  clique detection: edges (or n + density), t.
    """
    rng = np.random.default_rng(seed)
    if kind == "qkp":
        n = int(params["n"])
        density = float(params.get("density", 0.5))
        p = int(params.get("p", 1))
        blo, bhi = params.get("benefit_range", (1, 9))
        wlo, whi = params.get("weight_range", (1, 9))
        if n < 1 or p < 1:
            raise InstanceError("qkp needs n >= 1 and p >= 1")
        if not 0.0 <= density <= 1.0:
            raise InstanceError(f"density must lie in [0, 1], got {density}")
        if not (0 <= blo <= bhi and 0 <= wlo <= whi):
            raise InstanceError("ranges must be nonnegative and ordered")
        upper = np.triu(rng.random((n, n)) < density, k=1)
        vals = rng.integers(blo, bhi + 1, size=(n, n))
        B = np.where(upper, vals, 0)
        B = B + B.T
        A = rng.integers(wlo, whi + 1, size=(p, n))
        lo = np.maximum(A.max(axis=1), 1)
        hi = np.maximum(A.sum(axis=1), lo)
        budgets = np.array([rng.integers(l, h + 1) for l, h in zip(lo, hi)])
        lr = params.get("linear_range")
        c = rng.integers(lr[0], lr[1] + 1, size=n) if lr else np.zeros(n, dtype=np.int64)
        meta = {"kind": "qkp", "seed": seed, "density": density}
        return check(PiqpInstance(B, c, A, budgets, meta))

    if kind in ("dsp", "clique"):
        edges = params.get("edges")
        if edges is None:
            n = int(params["n"])
            density = float(params.get("density", 0.5))
            if not 0.0 <= density <= 1.0:
                raise InstanceError(f"density must lie in [0, 1], got {density}")
            edges = random_graph(n, density, rng)
        else:
            n = int(params.get("n", _graph_size(edges)))
        size_key = "k" if kind == "dsp" else "t"
        if size_key not in params:
            raise InstanceError(f"{kind} needs parameter {size_key}")
        budget = int(params[size_key])
        if budget < 1:
            raise InstanceError(f"{size_key} must be >= 1")
        B = _edges_to_matrix(n, edges)
        meta = {"kind": kind, "seed": seed, size_key: budget}
        return check(PiqpInstance(B, np.zeros(n, dtype=np.int64),
                                  np.ones((1, n), dtype=np.int64), [budget], meta))

    raise InstanceError(f"unknown instance kind {kind!r}")


# -- file I/O -------------------------------------------------------------------------

_REQUIRED = ("n", "p", "c", "A", "budgets")


def instance_from_dict(d: dict) -> PiqpInstance:
    if not isinstance(d, dict):
        raise InstanceError("instance file must hold a JSON object")
    for key in _REQUIRED:
        if key not in d:
            raise InstanceError(f"missing field {key!r}")
    n, p = d["n"], d["p"]
    if not isinstance(n, int) or not isinstance(p, int):
        raise InstanceError("fields 'n' and 'p' must be integers")
    if "B" in d:
        B = d["B"]
    elif "edges" in d:
        for k, e in enumerate(d["edges"]):
            if len(e) != 3:
                raise InstanceError(f"edges[{k}]: expected [i, j, b]")
            if min(e[0], e[1]) < 0 or max(e[0], e[1]) >= n:
                raise InstanceError(f"edges[{k}]: vertex out of range")
            if e[2] < 0:
                raise InstanceError(f"edges[{k}]: negative benefit")
        B = _edges_to_matrix(n, d["edges"])
    else:
        raise InstanceError("missing field 'B' (or 'edges')")
    try:
        inst = PiqpInstance(B, d["c"], d["A"], d["budgets"], dict(d.get("meta", {})))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, InstanceError):
            raise
        raise InstanceError(f"non-integer or ragged data: {exc}") from None
    if inst.n != n:
        raise InstanceError(f"field 'c' has {inst.n} entries but n={n}")
    if inst.p != p:
        raise InstanceError(f"field 'budgets' has {inst.p} entries but p={p}")
    return check(inst)


def instance_to_dict(inst: PiqpInstance) -> dict:
    return {
        "n": inst.n,
        "p": inst.p,
        "B": inst.B.tolist(),
        "c": inst.c.tolist(),
        "A": inst.A.tolist(),
        "budgets": inst.budgets.tolist(),
        "meta": inst.meta,
    }


def read_instance(path) -> PiqpInstance:
    text = Path(path).read_text()
    try:
        d = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from None
    return instance_from_dict(d)


def write_instance(inst: PiqpInstance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


def dumps_instance(inst: PiqpInstance) -> str:
    return json.dumps(instance_to_dict(inst), sort_keys=True) + "\n"


def solution_indices(x: Sequence[int]) -> list[int]:
    return [i for i, v in enumerate(x) if v]
