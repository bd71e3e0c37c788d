"""Pluggable average-case solvers for the two downstream problems.

The brute-force solvers are exact oracles used to validate the
reductions at desk scale; Karmarkar-Karp is the classical differencing
heuristic extended with sign reconstruction (the differencing recursion
only yields the discrepancy value, but the reduction needs the sign
vector, so each differencing step records an opposite-sign edge and the
resulting forest is 2-colored at the end).

Enumeration order fixes all tie-breaking: entries are tried in
descending value order (+1 before -1), the global sign is normalized so
the first nonzero entry is positive, and the first candidate attaining
the optimum wins. That makes every solver deterministic given its input
(and seed, where randomness is involved).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import SolverError

BRUTE_CAP_M = 30
MITM_CAP_M = 40
ENUM_CANDIDATE_CAP = 1 << 26
_CHUNK = 1 << 18

SOLVER_KINDS = ("brute_sbp", "brute_npp", "karmarkar_karp", "random_search", "always_fail")
ALPHABET_KINDS = ("pm_one", "ternary_nonzero", "bounded")


@dataclass(frozen=True)
class Alphabet:
    kind: str = "pm_one"
    bound: int = 1

    def __post_init__(self):
        if self.kind not in ALPHABET_KINDS:
            raise SolverError(f"unknown alphabet {self.kind!r}")
        if self.kind == "bounded" and self.bound < 1:
            raise SolverError("bounded alphabet needs bound >= 1")

    def entry_values(self) -> list[int]:
        """Admissible entry values in enumeration (descending) order."""
        if self.kind == "pm_one":
            return [1, -1]
        if self.kind == "ternary_nonzero":
            return [1, 0, -1]
        b = self.bound
        return list(range(b, -b - 1, -1))

    @property
    def max_entry(self) -> int:
        return 1 if self.kind != "bounded" else self.bound


PM_ONE = Alphabet("pm_one")
TERNARY = Alphabet("ternary_nonzero")


@dataclass(frozen=True)
class SbpInstance:
    matrix: np.ndarray  # n x m, handed to the solver
    kappa_target: float
    alphabet: Alphabet = PM_ONE

    @property
    def m(self) -> int:
        return self.matrix.shape[1]

    def to_json_obj(self):
        return {
            "kind": "sbp",
            "matrix": [[float(v) for v in row] for row in self.matrix],
            "kappa_target": self.kappa_target,
            "alphabet": self.alphabet.kind,
            "bound": self.alphabet.bound,
        }


@dataclass(frozen=True)
class NppInstance:
    values: np.ndarray  # length m
    kappa_target: float

    @property
    def m(self) -> int:
        return self.values.shape[0]

    def to_json_obj(self):
        return {
            "kind": "npp",
            "values": [float(v) for v in self.values],
            "kappa_target": self.kappa_target,
        }


def instance_from_json_obj(obj):
    if obj["kind"] == "sbp":
        return SbpInstance(
            matrix=np.asarray(obj["matrix"], dtype=float),
            kappa_target=float(obj["kappa_target"]),
            alphabet=Alphabet(obj.get("alphabet", "pm_one"), obj.get("bound", 1)),
        )
    if obj["kind"] == "npp":
        return NppInstance(
            values=np.asarray(obj["values"], dtype=float),
            kappa_target=float(obj["kappa_target"]),
        )
    raise SolverError(f"unknown instance kind {obj.get('kind')!r}")


@dataclass(frozen=True)
class SolverOutput:
    x: np.ndarray
    value: float
    solver: str
    budget_used: int

    def to_json_obj(self):
        return {
            "x": [int(v) for v in self.x],
            "value": float(self.value),
            "solver": self.solver,
            "budget_used": int(self.budget_used),
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_obj(), **kwargs)

    @classmethod
    def from_json_obj(cls, obj) -> "SolverOutput":
        return cls(
            x=np.asarray(obj["x"], dtype=np.int64),
            value=float(obj["value"]),
            solver=obj["solver"],
            budget_used=int(obj["budget_used"]),
        )


def sbp_objective(matrix, x) -> float:
    return float(np.max(np.abs(np.asarray(matrix) @ np.asarray(x, dtype=float))))


def npp_objective(values, x) -> float:
    return float(abs(np.asarray(values) @ np.asarray(x, dtype=float)))


def _sign_chunk(m: int, start: int, count: int) -> np.ndarray:
    """Rows start..start+count of the +-1 enumeration with x_1 = +1 fixed.

    Index bits map 0 -> +1 and 1 -> -1 with x_2 as the most significant
    digit, so ascending index is ascending lexicographic order under
    +1 < -1.
    """
    idx = np.arange(start, start + count, dtype=np.uint64)
    shifts = np.arange(m - 2, -1, -1, dtype=np.uint64)
    bits = (idx[:, None] >> shifts[None, :]) & 1
    x = np.empty((count, m), dtype=np.int8)
    x[:, 0] = 1
    x[:, 1:] = 1 - 2 * bits.astype(np.int8)
    return x


def _digit_chunk(m: int, start: int, count: int, values: list[int]) -> np.ndarray:
    """Mixed-radix enumeration over values^m, most significant digit first."""
    base = len(values)
    idx = np.arange(start, start + count, dtype=np.int64)
    x = np.empty((count, m), dtype=np.int8)
    vals = np.asarray(values, dtype=np.int8)
    for pos in range(m - 1, -1, -1):
        x[:, pos] = vals[idx % base]
        idx //= base
    return x


def _filter_sign_normalized(x: np.ndarray) -> np.ndarray:
    """Keep candidates whose first nonzero entry is positive (drops 0)."""
    nonzero = x != 0
    any_nz = nonzero.any(axis=1)
    first = np.where(any_nz, nonzero.argmax(axis=1), 0)
    lead = x[np.arange(x.shape[0]), first]
    return x[any_nz & (lead > 0)]


def brute_force_sbp(matrix, alphabet: Alphabet = PM_ONE) -> SolverOutput:
    """Exact minimizer of ||A x||_inf over the alphabet by enumeration."""
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    m = a.shape[1]
    if m > BRUTE_CAP_M:
        raise SolverError(f"brute force capped at m <= {BRUTE_CAP_M} (got {m})")
    best_val = math.inf
    best_x = None
    count = 0
    if alphabet.kind == "pm_one":
        total = 1 << (m - 1) if m > 1 else 1
        for start in range(0, total, _CHUNK):
            x = _sign_chunk(m, start, min(_CHUNK, total - start))
            vals = np.max(np.abs(a @ x.T.astype(float)), axis=0)
            i = int(np.argmin(vals))
            count += x.shape[0]
            if vals[i] < best_val:
                best_val = float(vals[i])
                best_x = x[i].copy()
    else:
        base = len(alphabet.entry_values())
        total = base**m
        if total > ENUM_CANDIDATE_CAP:
            raise SolverError(
                f"{alphabet.kind} enumeration needs {total} candidates (cap {ENUM_CANDIDATE_CAP})"
            )
        for start in range(0, total, _CHUNK):
            x = _digit_chunk(m, start, min(_CHUNK, total - start), alphabet.entry_values())
            x = _filter_sign_normalized(x)
            if x.shape[0] == 0:
                continue
            vals = np.max(np.abs(a @ x.T.astype(float)), axis=0)
            i = int(np.argmin(vals))
            count += x.shape[0]
            if vals[i] < best_val:
                best_val = float(vals[i])
                best_x = x[i].copy()
    return SolverOutput(
        x=best_x.astype(np.int64), value=best_val, solver="brute_sbp", budget_used=count
    )


def _npp_direct(a: np.ndarray) -> SolverOutput:
    out = brute_force_sbp(a[None, :], PM_ONE)
    return SolverOutput(x=out.x, value=out.value, solver="brute_npp", budget_used=out.budget_used)


def _npp_mitm(a: np.ndarray) -> SolverOutput:
    """Meet in the middle: sort right-half subset sums, binary search.

    Tie-breaking matches direct enumeration because the (left index,
    right index) pair is exactly the candidate's lexicographic rank.
    """
    m = a.shape[0]
    ml = (m + 1) // 2
    mr = m - ml
    left = _sign_chunk(ml, 0, 1 << (ml - 1) if ml > 1 else 1)
    lsums = left.astype(float) @ a[:ml]
    ridx = np.arange(1 << mr, dtype=np.uint64)
    shifts = np.arange(mr - 1, -1, -1, dtype=np.uint64)
    right = (1 - 2 * ((ridx[:, None] >> shifts[None, :]) & 1).astype(np.int8))
    rsums = right.astype(float) @ a[ml:]
    order = np.argsort(rsums, kind="stable")
    rsorted = rsums[order]

    best = (math.inf, -1, -1)  # value, left index, original right index
    pos = np.searchsorted(rsorted, -lsums)
    for li in range(lsums.shape[0]):
        for p in (pos[li] - 1, pos[li], pos[li] + 1):
            if 0 <= p < rsorted.shape[0]:
                val = abs(lsums[li] + rsorted[p])
                cand = (val, li, int(order[p]))
                if cand < best:
                    best = cand
    _, li, ri = best
    x = np.concatenate([left[li], right[ri]]).astype(np.int64)
    return SolverOutput(
        x=x,
        value=npp_objective(a, x),
        solver="brute_npp",
        budget_used=int(lsums.shape[0] + rsums.shape[0]),
    )


def brute_force_npp(a, method: str = "auto") -> SolverOutput:
    """Exact minimizer of |a . x| over {-1, +1}^m, x_1 = +1 convention."""
    a = np.asarray(a, dtype=float).ravel()
    m = a.shape[0]
    if m < 1:
        raise SolverError("need at least one value")
    if method == "auto":
        method = "direct" if m <= 26 else "mitm"
    if method == "direct":
        if m > BRUTE_CAP_M:
            raise SolverError(f"direct enumeration capped at m <= {BRUTE_CAP_M}")
        return _npp_direct(a)
    if method == "mitm":
        if m > MITM_CAP_M:
            raise SolverError(f"meet-in-the-middle capped at m <= {MITM_CAP_M}")
        if m == 1:
            return _npp_direct(a)
        return _npp_mitm(a)
    raise SolverError(f"unknown method {method!r}")


class _ParityUnionFind:
    """Union-find tracking each node's sign relative to its root."""

    def __init__(self, n: int):
        self.parent = list(range(n))
        self.rank = [0] * n
        self.parity = [0] * n  # xor distance to parent

    def find(self, i: int) -> tuple[int, int]:
        path = []
        while self.parent[i] != i:
            path.append(i)
            i = self.parent[i]
        p = 0
        for node in reversed(path):
            p ^= self.parity[node]
            self.parent[node] = i
            self.parity[node] = p
        return i, self.parity[path[0]] if path else 0

    def union_opposite(self, i: int, j: int):
        ri, pi = self.find(i)
        rj, pj = self.find(j)
        if ri == rj:
            return
        want = pi ^ pj ^ 1
        if self.rank[ri] < self.rank[rj]:
            ri, rj = rj, ri
        self.parent[rj] = ri
        self.parity[rj] = want
        if self.rank[ri] == self.rank[rj]:
            self.rank[ri] += 1


def karmarkar_karp(a) -> SolverOutput:
    """Largest-differencing heuristic with sign reconstruction.

    Repeatedly stable-sorts descending and replaces the two largest
    magnitudes by their difference; each replacement links the two
    survivors' representatives with an opposite-sign constraint. The
    final forest 2-coloring realizes the differencing value exactly.
    """
    a = np.asarray(a, dtype=float).ravel()
    m = a.shape[0]
    if m < 1:
        raise SolverError("need at least one value")
    mags = np.abs(a)
    items = [(float(mags[i]), i) for i in range(m)]
    uf = _ParityUnionFind(m)
    while len(items) > 1:
        items.sort(key=lambda t: t[0], reverse=True)
        (v1, r1), (v2, r2) = items[0], items[1]
        uf.union_opposite(r1, r2)
        items = [(v1 - v2, r1)] + items[2:]
    kk_value = items[0][0]

    colors = np.empty(m, dtype=np.int64)
    for i in range(m):
        _, parity = uf.find(i)
        colors[i] = 1 - 2 * parity
    x = colors * np.where(a >= 0, 1, -1)
    if x[0] < 0:
        x = -x
    achieved = npp_objective(a, x)
    if abs(achieved - kk_value) > 1e-9:
        raise SolverError(
            f"sign reconstruction mismatch: |a.x|={achieved!r} vs differencing {kk_value!r}"
        )
    return SolverOutput(x=x, value=achieved, solver="karmarkar_karp", budget_used=m - 1)


def random_search(instance, budget: int, rng) -> SolverOutput:
    """Best of ``budget`` uniform draws from the instance's alphabet."""
    if budget < 1:
        raise SolverError("budget must be at least 1")
    if isinstance(instance, NppInstance):
        m, alphabet = instance.m, PM_ONE
        objective = lambda xs: np.abs(xs.astype(float) @ instance.values)
    else:
        m, alphabet = instance.m, instance.alphabet
        objective = lambda xs: np.max(np.abs(instance.matrix @ xs.T.astype(float)), axis=0)
    values = np.asarray(alphabet.entry_values(), dtype=np.int8)
    best_val = math.inf
    best_x = None
    remaining = budget
    while remaining > 0:
        take = min(remaining, _CHUNK)
        xs = values[rng.integers(0, len(values), size=(take, m))]
        if alphabet.kind != "pm_one":
            zero_rows = ~np.any(xs != 0, axis=1)
            while np.any(zero_rows):
                xs[zero_rows] = values[
                    rng.integers(0, len(values), size=(int(zero_rows.sum()), m))
                ]
                zero_rows = ~np.any(xs != 0, axis=1)
        vals = objective(xs)
        i = int(np.argmin(vals))
        if vals[i] < best_val:
            best_val = float(vals[i])
            best_x = xs[i].astype(np.int64)
        remaining -= take
    return SolverOutput(x=best_x, value=best_val, solver="random_search", budget_used=budget)


def always_ones(instance) -> SolverOutput:
    """Deliberately input-blind baseline: x = (1, ..., 1)."""
    x = np.ones(instance.m, dtype=np.int64)
    value = (
        npp_objective(instance.values, x)
        if isinstance(instance, NppInstance)
        else sbp_objective(instance.matrix, x)
    )
    return SolverOutput(x=x, value=value, solver="always_fail", budget_used=1)


@dataclass(frozen=True)
class SolverSpec:
    kind: str
    alphabet: Alphabet = PM_ONE
    budget: int = 4096

    def __post_init__(self):
        if self.kind not in SOLVER_KINDS:
            raise SolverError(f"unknown solver kind {self.kind!r} (choose from {SOLVER_KINDS})")

    def to_json_obj(self):
        return {
            "kind": self.kind,
            "alphabet": self.alphabet.kind,
            "bound": self.alphabet.bound,
            "budget": self.budget,
        }


class Solver:
    """Callable wrapper honoring the contract: deterministic given (input, seed)."""

    def __init__(self, spec: SolverSpec):
        self.spec = spec
        self.name = spec.kind

    def solve(self, instance, rng=None) -> SolverOutput:
        kind = self.spec.kind
        if kind == "brute_sbp":
            if isinstance(instance, NppInstance):
                return brute_force_sbp(instance.values[None, :], PM_ONE)
            return brute_force_sbp(instance.matrix, instance.alphabet)
        if kind == "brute_npp":
            if not isinstance(instance, NppInstance):
                raise SolverError("brute_npp expects an NPP instance")
            return brute_force_npp(instance.values)
        if kind == "karmarkar_karp":
            if not isinstance(instance, NppInstance):
                raise SolverError("karmarkar_karp expects an NPP instance")
            return karmarkar_karp(instance.values)
        if kind == "random_search":
            if rng is None:
                raise SolverError("random_search needs an rng")
            return random_search(instance, self.spec.budget, rng)
        return always_ones(instance)


def make_solver(spec: SolverSpec) -> Solver:
    return Solver(spec)
