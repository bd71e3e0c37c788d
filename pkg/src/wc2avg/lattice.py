"""Exact-arithmetic lattice primitives.

Bases are matrices of exact rationals (``fractions.Fraction``); their
inverses are computed exactly once and then applied to float vectors.
All Gaussian-derived data stays in float64. The membership test is the
boundary between the two worlds: a float vector is a lattice point when
its exact-inverse coordinates are within ``tau`` of integers.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

import numpy as np

from .errors import InvalidInstanceError, SingularBasisError
from .rng import stream

DEFAULT_MEMBERSHIP_TOL = 1e-6

_FRAC_MATRIX = tuple  # tuple of tuples of Fraction


def _as_fraction_matrix(entries) -> _FRAC_MATRIX:
    rows = []
    for row in entries:
        rows.append(tuple(Fraction(v) for v in row))
    n = len(rows)
    if n == 0 or any(len(r) != n for r in rows):
        raise InvalidInstanceError("basis entries must form a square matrix")
    return tuple(rows)


def _fraction_matmul(a: _FRAC_MATRIX, b: _FRAC_MATRIX) -> _FRAC_MATRIX:
    n, k, m = len(a), len(b), len(b[0])
    out = []
    for i in range(n):
        row = []
        for j in range(m):
            row.append(sum(a[i][l] * b[l][j] for l in range(k)))
        out.append(tuple(row))
    return tuple(out)


def _fraction_inverse(mat: _FRAC_MATRIX):
    """Gauss-Jordan over the rationals. Returns (inverse, determinant)."""
    n = len(mat)
    aug = [list(mat[i]) + [Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    det = Fraction(1)
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col] != 0), None)
        if pivot is None:
            return None, Fraction(0)
        if pivot != col:
            aug[col], aug[pivot] = aug[pivot], aug[col]
            det = -det
        det *= aug[col][col]
        inv_p = 1 / aug[col][col]
        aug[col] = [v * inv_p for v in aug[col]]
        for r in range(n):
            if r != col and aug[r][col] != 0:
                f = aug[r][col]
                aug[r] = [v - f * w for v, w in zip(aug[r], aug[col])]
    inverse = tuple(tuple(aug[i][n:]) for i in range(n))
    return inverse, det


class Basis:
    """Invertible n x n rational basis matrix (columns generate the lattice)."""

    def __init__(self, entries):
        self.entries = _as_fraction_matrix(entries)
        self.n = len(self.entries)
        inverse, det = _fraction_inverse(self.entries)
        if inverse is None:
            raise SingularBasisError("basis determinant is zero")
        self.det = det
        self.inverse_entries = inverse
        self.matrix = np.array([[float(v) for v in row] for row in self.entries])
        self.inverse_matrix = np.array(
            [[float(v) for v in row] for row in self.inverse_entries]
        )

    @classmethod
    def identity(cls, n: int) -> "Basis":
        return cls([[int(i == j) for j in range(n)] for i in range(n)])

    @classmethod
    def diagonal(cls, diag: Sequence) -> "Basis":
        n = len(diag)
        return cls([[diag[i] if i == j else 0 for j in range(n)] for i in range(n)])

    def column_norms_sq(self) -> list[Fraction]:
        n = self.n
        return [
            sum(self.entries[i][j] ** 2 for i in range(n)) for j in range(n)
        ]

    def max_column_norm(self) -> float:
        return max(float(s) ** 0.5 for s in self.column_norms_sq())

    def to_json_obj(self):
        return [
            [{"num": str(v.numerator), "den": str(v.denominator)} for v in row]
            for row in self.entries
        ]

    @classmethod
    def from_json_obj(cls, obj) -> "Basis":
        return cls(
            [[Fraction(int(c["num"]), int(c["den"])) for c in row] for row in obj]
        )

    def __eq__(self, other):
        return isinstance(other, Basis) and self.entries == other.entries

    def __repr__(self):
        return f"Basis(n={self.n})"


@dataclass(frozen=True)
class LatticeVector:
    """A point of L(B), optionally with its integer coefficient witness."""

    coords: np.ndarray
    coeffs: Optional[np.ndarray] = None

    @classmethod
    def checked(cls, basis: Basis, coords, coeffs, tau: float = DEFAULT_MEMBERSHIP_TOL):
        coords = np.asarray(coords, dtype=float)
        coeffs = np.asarray(coeffs, dtype=np.int64)
        resid = np.max(np.abs(coords - basis.matrix @ coeffs.astype(float)))
        if resid > tau:
            raise InvalidInstanceError(
                f"coefficients do not reproduce the point (residual {resid:g} > {tau:g})"
            )
        return cls(coords=coords, coeffs=coeffs)


def max_column_norm(mat) -> float:
    """Largest Euclidean column norm (not the spectral norm)."""
    arr = np.atleast_2d(np.asarray(mat, dtype=float))
    return float(np.max(np.linalg.norm(arr, axis=0)))


def mod_parallelepiped(basis: Basis, x) -> np.ndarray:
    """Unique representative of x in B[0,1)^n modulo L(B)."""
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise InvalidInstanceError("mod_parallelepiped requires finite input")
    coords = basis.inverse_matrix @ x
    frac = coords - np.floor(coords)
    # floor can leave an exact 1.0 behind for values just under an integer
    frac[frac >= 1.0] -= 1.0
    return basis.matrix @ frac


def lattice_membership(
    basis: Basis, s, tau: float = DEFAULT_MEMBERSHIP_TOL
) -> Optional[np.ndarray]:
    """Integer coefficients z with B z = s (within tau), else None."""
    if tau <= 0:
        raise InvalidInstanceError("tau must be positive")
    s = np.asarray(s, dtype=float)
    z = basis.inverse_matrix @ s
    rounded = np.rint(z)
    if np.max(np.abs(z - rounded)) <= tau:
        return rounded.astype(np.int64)
    return None


def column_hnf(m_int: list[list[int]]) -> list[list[int]]:
    """Lower-triangular column Hermite form of an integer matrix.

    Column operations only, so the column lattice is preserved; the
    diagonal is positive and its product is |det|.
    """
    n = len(m_int)
    h = [list(row) for row in m_int]

    def col_swap(a, b):
        for i in range(n):
            h[i][a], h[i][b] = h[i][b], h[i][a]

    def col_axpy(dst, src, factor):
        for i in range(n):
            h[i][dst] -= factor * h[i][src]

    for i in range(n):
        while True:
            nz = [j for j in range(i, n) if h[i][j] != 0]
            if not nz:
                raise InvalidInstanceError("change-of-basis matrix is singular")
            j_min = min(nz, key=lambda j: abs(h[i][j]))
            if j_min != i:
                col_swap(i, j_min)
            done = True
            for j in range(i + 1, n):
                if h[i][j] != 0:
                    col_axpy(j, i, h[i][j] // h[i][i])
                    if h[i][j] != 0:
                        done = False
            if done:
                break
        if h[i][i] < 0:
            for r in range(n):
                h[r][i] = -h[r][i]
    return h


class SublatticePair:
    """Bases B and S with the exact integer witness M for S = B M."""

    def __init__(self, basis: Basis, sub: Basis):
        if basis.n != sub.n:
            raise InvalidInstanceError("B and S must share a dimension")
        self.basis = basis
        self.sub = sub
        m_frac = _fraction_matmul(basis.inverse_entries, sub.entries)
        for row in m_frac:
            for v in row:
                if v.denominator != 1:
                    raise InvalidInstanceError("L(S) is not a sublattice of L(B)")
        self.m_int = [[int(v) for v in row] for row in m_frac]
        self.hnf = column_hnf(self.m_int)
        self.index = 1
        for i in range(basis.n):
            self.index *= self.hnf[i][i]
        if self.index < 1:
            raise InvalidInstanceError("sublattice index must be at least 1")

    @property
    def n(self) -> int:
        return self.basis.n

    def coset_count(self) -> int:
        return self.index


def sample_coset_matrix(pair: SublatticePair, count: int, rng) -> np.ndarray:
    """count i.i.d. uniform points of L(B) intersected with P(S), as columns.

    The box {0..H_ii-1}^n under the triangular Hermite form H of M is an
    exact transversal of Z^n / M Z^n, so B z mod P(S) is uniform over the
    |det M| coset representatives.
    """
    n = pair.n
    z = np.empty((n, count), dtype=np.int64)
    for i in range(n):
        d = pair.hnf[i][i]
        z[i] = rng.integers(0, d, size=count) if d > 1 else 0
    raw = pair.basis.matrix @ z.astype(float)
    coords = pair.sub.inverse_matrix @ raw
    frac = coords - np.floor(coords)
    frac[frac >= 1.0] -= 1.0
    return pair.sub.matrix @ frac


def sample_coset_uniform(pair: SublatticePair, rng) -> np.ndarray:
    return sample_coset_matrix(pair, 1, rng)[:, 0]


def enumerate_coset_representatives(pair: SublatticePair) -> np.ndarray:
    """All |det M| coset representatives (columns), canonicalized mod P(S)."""
    n = pair.n
    diag = [pair.hnf[i][i] for i in range(n)]
    grids = np.meshgrid(*[np.arange(d) for d in diag], indexing="ij")
    z = np.stack([g.ravel() for g in grids]).astype(float)
    raw = pair.basis.matrix @ z
    coords = pair.sub.inverse_matrix @ raw
    frac = coords - np.floor(coords)
    frac[frac >= 1.0] -= 1.0
    return pair.sub.matrix @ frac


def successive_minima_sq(basis: Basis, max_dim: int = 4) -> list[Fraction]:
    """Exact squared successive minima by enumeration. Exponential; n <= 4.

    The basis columns witness lambda_n <= max column norm, so scanning the
    integer box |z_i| <= sigma_max(B^-1) * R covers every candidate.
    """
    n = basis.n
    if n > max_dim:
        raise InvalidInstanceError(f"enumeration oracle limited to n <= {max_dim}")
    norms_sq = basis.column_norms_sq()
    radius_sq = max(norms_sq)
    radius = float(radius_sq) ** 0.5
    z_bound = int(np.ceil(np.linalg.norm(basis.inverse_matrix, 2) * radius + 1e-9))
    ranges = [np.arange(-z_bound, z_bound + 1)] * n
    grids = np.meshgrid(*ranges, indexing="ij")
    z_all = np.stack([g.ravel() for g in grids]).astype(float)
    vec = basis.matrix @ z_all
    float_norms = np.einsum("ij,ij->j", vec, vec)
    keep = (float_norms <= float(radius_sq) * (1 + 1e-9) + 1e-9) & (
        np.any(z_all != 0, axis=0)
    )
    candidates = z_all[:, keep].astype(np.int64).T

    exact = []
    for z in candidates:
        v = [
            sum(basis.entries[i][j] * int(z[j]) for j in range(n)) for i in range(n)
        ]
        exact.append((sum(c * c for c in v), v))
    exact.sort(key=lambda t: t[0])

    minima: list[Fraction] = []
    echelon: list[list[Fraction]] = []
    for norm_sq, v in exact:
        vec_f = [Fraction(c) for c in v]
        for row in echelon:
            lead = next(i for i, c in enumerate(row) if c != 0)
            if vec_f[lead] != 0:
                f = vec_f[lead] / row[lead]
                vec_f = [a - f * b for a, b in zip(vec_f, row)]
        if any(c != 0 for c in vec_f):
            echelon.append(vec_f)
            minima.append(Fraction(norm_sq))
            if len(minima) == n:
                return minima
    raise InvalidInstanceError("enumeration failed to find n independent vectors")


@dataclass
class IncGDDCheck:
    valid: bool
    dist: float
    bound: float
    is_lattice_point: bool
    coeffs: Optional[np.ndarray]


class PlantedIncGDDInstance:
    """Worst-case decoding instance (B, S, t, r) with planted lambda_n.

    lambda_n is known by construction for the generated families, which
    makes the precondition r > gamma * lambda_n checkable. Instances
    ingested from arbitrary bases may carry lambda_n=None and skip it.
    """

    def __init__(
        self,
        pair: SublatticePair,
        t,
        r: float,
        gamma: float,
        lambda_n: Optional[float],
        profile: str = "custom",
        seed: Optional[int] = None,
        lambda_n_sq_exact: Optional[Fraction] = None,
    ):
        self.pair = pair
        self.t = np.asarray(t, dtype=float)
        self.r = float(r)
        self.gamma = float(gamma)
        self.lambda_n = None if lambda_n is None else float(lambda_n)
        self.profile = profile
        self.seed = seed
        self.lambda_n_sq_exact = lambda_n_sq_exact
        if self.t.shape != (pair.n,):
            raise InvalidInstanceError("target dimension mismatch")
        if self.r <= 0 or self.gamma <= 0:
            raise InvalidInstanceError("r and gamma must be positive")
        if self.lambda_n is not None and not self.r > self.gamma * self.lambda_n:
            raise InvalidInstanceError(
                f"need r > gamma*lambda_n ({self.r:g} <= {self.gamma * self.lambda_n:g})"
            )

    @property
    def n(self) -> int:
        return self.pair.n

    @property
    def basis(self) -> Basis:
        return self.pair.basis

    @property
    def sub(self) -> Basis:
        return self.pair.sub

    def to_json_obj(self):
        return {
            "n": self.n,
            "B": self.basis.to_json_obj(),
            "S": self.sub.to_json_obj(),
            "t": [float(v) for v in self.t],
            "r": self.r,
            "lambda_n": self.lambda_n,
            "gamma": self.gamma,
            "profile": self.profile,
            "seed": self.seed,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_json_obj(), **kwargs)

    @classmethod
    def from_json_obj(cls, obj) -> "PlantedIncGDDInstance":
        pair = SublatticePair(
            Basis.from_json_obj(obj["B"]), Basis.from_json_obj(obj["S"])
        )
        return cls(
            pair,
            np.asarray(obj["t"], dtype=float),
            obj["r"],
            obj["gamma"],
            obj.get("lambda_n"),
            profile=obj.get("profile", "custom"),
            seed=obj.get("seed"),
        )

    @classmethod
    def from_json(cls, text: str) -> "PlantedIncGDDInstance":
        return cls.from_json_obj(json.loads(text))


def verify_incgdd_solution(
    inst: PlantedIncGDDInstance, s, tau: float = DEFAULT_MEMBERSHIP_TOL
) -> IncGDDCheck:
    """Lattice membership plus the distance bound r + ||S||/8."""
    s = np.asarray(s, dtype=float)
    coeffs = lattice_membership(inst.basis, s, tau)
    dist = float(np.linalg.norm(s - inst.t))
    bound = inst.r + inst.sub.max_column_norm() / 8.0
    valid = coeffs is not None and dist <= bound
    return IncGDDCheck(
        valid=valid,
        dist=dist,
        bound=bound,
        is_lattice_point=coeffs is not None,
        coeffs=coeffs,
    )


_PYTHAGOREAN = [(3, 4, 5), (5, 12, 13), (8, 15, 17), (20, 21, 29)]


def _rotation_matrix(n: int, rng) -> _FRAC_MATRIX:
    """Exact orthogonal rational matrix: block-diagonal 2x2 rotations."""
    rows = [[Fraction(int(i == j)) for j in range(n)] for i in range(n)]
    for b in range(n // 2):
        a, bb, c = _PYTHAGOREAN[int(rng.integers(0, len(_PYTHAGOREAN)))]
        i = 2 * b
        rows[i][i] = Fraction(a, c)
        rows[i][i + 1] = Fraction(-bb, c)
        rows[i + 1][i] = Fraction(bb, c)
        rows[i + 1][i + 1] = Fraction(a, c)
    return tuple(tuple(r) for r in rows)


PROFILES = ("diagonal", "qary", "rotated")


def generate_planted_instance(
    n: int,
    profile: str,
    gamma: float,
    seed: int,
    r_factor: float = 2.0,
    sub_diag: Optional[Sequence[int]] = None,
) -> PlantedIncGDDInstance:
    """Planted instance with exactly known lambda_n.

    diagonal: B = diag(d), lambda_n = max d (any vector leaving the span of
    the shorter axes has norm >= max d). rotated: exact rational rotation
    of a diagonal basis, same minima. qary: [[I, H], [0, Q*I]] with lambda_n
    found by exhaustive enumeration (n <= 4). S = B * diag(sub_diag).
    """
    if n < 1:
        raise InvalidInstanceError("n must be at least 1")
    if gamma < 1:
        raise InvalidInstanceError("gamma must be at least 1")
    if r_factor <= 1:
        raise InvalidInstanceError("r_factor must exceed 1 so that r > gamma*lambda_n")
    rng = stream(seed, "instance", profile, n)

    if profile == "diagonal" or profile == "rotated":
        d = [int(v) for v in rng.integers(1, 6, size=n)]
        lam_sq = Fraction(max(d) ** 2)
        diag = Basis.diagonal(d)
        if profile == "diagonal":
            basis = diag
        else:
            basis = Basis(_fraction_matmul(_rotation_matrix(n, rng), diag.entries))
    elif profile == "qary":
        if not 2 <= n <= 4:
            raise InvalidInstanceError("qary profile supports 2 <= n <= 4")
        k = n // 2
        q_mod = int(rng.choice([7, 11, 13]))
        entries = [[0] * n for _ in range(n)]
        for i in range(k):
            entries[i][i] = 1
        for i in range(k, n):
            entries[i][i] = q_mod
        for i in range(k):
            for j in range(k, n):
                entries[i][j] = int(rng.integers(0, q_mod))
        basis = Basis(entries)
        lam_sq = successive_minima_sq(basis)[-1]
    else:
        raise InvalidInstanceError(f"unknown profile {profile!r} (choose from {PROFILES})")

    lam = float(lam_sq) ** 0.5
    if sub_diag is None:
        sub_diag = [2] * n
    sub_entries = [
        [basis.entries[i][j] * int(sub_diag[j]) for j in range(n)] for i in range(n)
    ]
    pair = SublatticePair(basis, Basis(sub_entries))
    t = rng.uniform(-4.0 * lam, 4.0 * lam, size=n)
    r = r_factor * gamma * lam
    return PlantedIncGDDInstance(
        pair,
        t,
        r,
        gamma,
        lam,
        profile=profile,
        seed=seed,
        lambda_n_sq_exact=lam_sq,
    )
