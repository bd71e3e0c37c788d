"""Continuous and discrete Gaussian sampling plus tail-bound checkers.

The discrete Gaussian on Z^n + shift uses exact CDF inversion over a
truncated table: per coordinate the integer offset k is drawn with
probability proportional to exp(-pi*(shift+k)^2/s^2) over
k in [-tail_cut, tail_cut]. With tail_cut >= ceil(8 s) the truncated
mass is below 2^-64 per coordinate, so the table is the law for all
practical purposes and doubles as its own test oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InvalidInstanceError, ParameterError


def smoothing_sigma(n: int, eps: float) -> float:
    """Width above which a Gaussian mod the lattice is eps-close to uniform
    (per unit lambda_n): sqrt(ln(2n(1 + 1/eps)) / (2 pi^2))."""
    if n < 1:
        raise ParameterError("n must be at least 1")
    if not 0 < eps < 1:
        raise ParameterError("eps must lie in (0, 1)")
    return math.sqrt(math.log(2 * n * (1 + 1 / eps)) / (2 * math.pi**2))


def eps_profile(n: int, cap: float = 0.49) -> float:
    """Default closeness parameter exp(-ln^2 n), capped below 1/2.

    The uncapped value exceeds 1/2 for n <= 2 where the closed-form
    threshold still wants a legal eps; the cap only ever loosens the
    resulting sigma threshold at those tiny dimensions.
    """
    return min(math.exp(-math.log(n) ** 2), cap) if n > 1 else cap


@dataclass(frozen=True)
class SmoothingParams:
    n: int
    eps: float
    sigma_threshold: float = field(init=False)

    def __post_init__(self):
        if not 0 < self.eps < 0.5:
            raise ParameterError("eps must lie in (0, 1/2)")
        object.__setattr__(self, "sigma_threshold", smoothing_sigma(self.n, self.eps))


@dataclass(frozen=True)
class DiscreteGaussianSpec:
    """Coset Z^n + shift, scale s = sigma * sqrt(2 pi), truncation cut."""

    shift: np.ndarray
    s: float
    tail_cut: int

    def __post_init__(self):
        shift = np.atleast_1d(np.asarray(self.shift, dtype=float))
        if np.any(shift < 0) or np.any(shift >= 1):
            raise InvalidInstanceError("shift coordinates must lie in [0, 1)")
        if self.s <= 0:
            raise InvalidInstanceError("scale s must be positive")
        if self.tail_cut < math.ceil(8 * self.s):
            raise InvalidInstanceError(
                "tail_cut below ceil(8 s); truncated mass would be non-negligible"
            )
        object.__setattr__(self, "shift", shift)

    @classmethod
    def for_sigma(cls, shift, sigma: float) -> "DiscreteGaussianSpec":
        s = sigma * math.sqrt(2 * math.pi)
        return cls(shift=np.asarray(shift, dtype=float), s=s, tail_cut=math.ceil(8 * s))


def default_tail_cut(s: float) -> int:
    return math.ceil(8 * s)


def discrete_gaussian_pmf(shift: float, s: float, tail_cut: int):
    """Exact truncated mass table: offsets k and their probabilities."""
    ks = np.arange(-tail_cut, tail_cut + 1)
    logw = -math.pi * (shift + ks) ** 2 / s**2
    w = np.exp(logw - logw.max())
    return ks, w / w.sum()


def sample_discrete_offsets(
    shifts: np.ndarray, s: float, tail_cut: int, rng, chunk: int = 4096
) -> np.ndarray:
    """Integer offsets k per entry of ``shifts`` via exact CDF inversion."""
    flat = np.asarray(shifts, dtype=float).ravel()
    out = np.empty(flat.size, dtype=np.int64)
    ks = np.arange(-tail_cut, tail_cut + 1, dtype=float)[:, None]
    for start in range(0, flat.size, chunk):
        block = flat[start : start + chunk]
        logw = -math.pi * (block[None, :] + ks) ** 2 / s**2
        w = np.exp(logw - logw.max(axis=0, keepdims=True))
        cdf = np.cumsum(w, axis=0)
        u = rng.random(block.size) * cdf[-1]
        idx = (cdf < u[None, :]).sum(axis=0)
        out[start : start + block.size] = idx - tail_cut
    return out.reshape(np.asarray(shifts).shape)


def sample_discrete_gaussian_coset(spec: DiscreteGaussianSpec, rng) -> np.ndarray:
    """One draw from the discrete Gaussian on Z^n + shift."""
    k = sample_discrete_offsets(spec.shift, spec.s, spec.tail_cut, rng)
    return spec.shift + k


def sample_normal_vec(mu, sigma: float, rng) -> np.ndarray:
    """i.i.d. coordinates, mean mu_i, standard deviation sigma."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    if sigma <= 0:
        raise ParameterError("sigma must be positive")
    return mu + sigma * rng.standard_normal(mu.shape)


def spectral_norm(mat) -> float:
    """Largest singular value; exact dense computation at desk sizes."""
    arr = np.atleast_2d(np.asarray(mat, dtype=float))
    if not np.all(np.isfinite(arr)):
        raise InvalidInstanceError("spectral_norm requires finite entries")
    n, m = arr.shape
    if min(n, m) <= 64 and max(n, m) > 4 * min(n, m):
        gram = arr @ arr.T if n <= m else arr.T @ arr
        return float(np.sqrt(max(np.linalg.eigvalsh(gram)[-1], 0.0)))
    return float(np.linalg.norm(arr, 2))


@dataclass
class TailCheckReport:
    n: int
    m: int
    trials: int
    sigma_max_failures: int
    sigma_max_rate: float
    sigma_max_bound: float
    sigma_max_threshold: float
    sigma_max_ok: bool
    norm_failures: int
    norm_rate: float
    norm_bound: float
    norm_threshold: float
    norm_ok: bool

    @property
    def all_ok(self) -> bool:
        return self.sigma_max_ok and self.norm_ok

    def to_json_obj(self):
        return dict(self.__dict__, all_ok=self.all_ok)


def check_gaussian_tails(n: int, m: int, trials: int, rng) -> TailCheckReport:
    """Monte-Carlo failure rates for the two standard-normal tail events.

    Event 1: sigma_max of an n x m standard normal exceeds 3 sqrt(m)/2
    (requires m >= 16n); bound 2 e^{-n/2}. Event 2: an n-dimensional
    standard normal has norm at least sqrt(5/2) sqrt(n); bound e^{-n/4}.
    Each empirical rate must stay below bound + 3 binomial SDs.
    """
    if m < 16 * n:
        raise ParameterError("sigma_max specialization requires m >= 16 n")
    smax_thresh = 1.5 * math.sqrt(m)
    smax_fail = 0
    for _ in range(trials):
        a = rng.standard_normal((n, m))
        gram = a @ a.T
        smax = math.sqrt(max(float(np.linalg.eigvalsh(gram)[-1]), 0.0))
        if smax > smax_thresh:
            smax_fail += 1
    smax_bound = 2 * math.exp(-n / 2)
    smax_limit = smax_bound + 3 * math.sqrt(smax_bound * (1 - smax_bound) / trials)

    v = rng.standard_normal((trials, n))
    norm_fail = int(np.sum(np.linalg.norm(v, axis=1) >= math.sqrt(2.5 * n)))
    norm_bound = math.exp(-n / 4)
    norm_limit = norm_bound + 3 * math.sqrt(norm_bound * (1 - norm_bound) / trials)

    return TailCheckReport(
        n=n,
        m=m,
        trials=trials,
        sigma_max_failures=smax_fail,
        sigma_max_rate=smax_fail / trials,
        sigma_max_bound=smax_bound,
        sigma_max_threshold=smax_limit,
        sigma_max_ok=smax_fail / trials <= smax_limit,
        norm_failures=norm_fail,
        norm_rate=norm_fail / trials,
        norm_bound=norm_bound,
        norm_threshold=norm_limit,
        norm_ok=norm_fail / trials <= norm_limit,
    )
