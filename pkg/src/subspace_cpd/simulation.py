"""Synthetic piecewise-subspace series with controlled basis drift.

Each segment of the generated ``p x n`` series lies in a ``d``-dimensional
subspace: ``x_t = Z_i s_t + e_t`` with orthonormal ``Z_i``, iid standard
normal ``s_t``, and Gaussian noise ``e_t``.  Consecutive bases are separated
by a prescribed chordal distance ``delta``, with
``d - ||Z_i^T Z_{i+1}||_F^2 == delta^2`` and maximum attainable distance
``sqrt(d)``.

Change-points are split offsets: a change-point ``tau`` means the first
``tau`` columns belong to the left segment (``X[:, :tau]``).
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.signal import lfilter

from .errors import DimensionError

__all__ = [
    "SyntheticSpec",
    "GroundTruth",
    "NOISE_VARIANCE",
    "AR_COEFF",
    "random_basis",
    "rotate_basis",
    "noise_matrix",
    "generate",
]

# Per-scenario noise variance: A iid, B AR(1) with the same stationary
# variance, C iid at ten times the level.
NOISE_VARIANCE = {"A": 0.005, "B": 0.005, "C": 0.05}
AR_COEFF = 0.7


@dataclass(frozen=True)
class SyntheticSpec:
    """Generator parameters for one synthetic series.

    ``changepoints`` are split offsets in ``(0, n)``.  ``delta`` is the
    chordal distance between consecutive segment bases and must not exceed
    ``sqrt(d)``.  ``sigma2`` overrides the scenario noise variance when set
    (``0.0`` gives a noiseless series).
    """

    p: int
    d: int
    n: int
    changepoints: tuple[int, ...] = ()
    delta: float = 0.0
    scenario: str = "A"
    seed: int = 0
    sigma2: float | None = None
    distance_convention: str = "squared"

    def __post_init__(self) -> None:
        object.__setattr__(self, "changepoints", tuple(int(t) for t in self.changepoints))
        if self.p < 1 or self.n < 1:
            raise ValueError("p and n must be positive")
        if not 1 <= self.d < self.p:
            raise ValueError(f"need 1 <= d < p, got d={self.d}, p={self.p}")
        if self.scenario not in NOISE_VARIANCE:
            raise ValueError(f"unknown noise scenario {self.scenario!r}")
        cps = self.changepoints
        if any(b <= a for a, b in zip(cps, cps[1:])):
            raise ValueError("changepoints must be strictly increasing")
        if cps and not (0 < cps[0] and cps[-1] < self.n):
            raise ValueError("changepoints must lie strictly inside (0, n)")
        if self.changepoints and self.delta > np.sqrt(self.d) + 1e-12:
            raise ValueError(
                f"delta={self.delta} exceeds the maximum distance sqrt(d)={np.sqrt(self.d):.6g}"
            )
        if self.sigma2 is not None and self.sigma2 < 0:
            raise ValueError("sigma2 must be nonnegative")
        if self.distance_convention not in ("squared", "unsquared"):
            raise ValueError("distance_convention must be 'squared' or 'unsquared'")

    @property
    def noise_variance(self) -> float:
        return NOISE_VARIANCE[self.scenario] if self.sigma2 is None else self.sigma2


@dataclass
class GroundTruth:
    """True segmentation of a generated series.

    ``labels`` is a length-``n`` non-decreasing integer vector of segment
    ids; ``bases`` holds one orthonormal ``p x d`` basis per segment;
    ``sigma`` is the noise standard deviation that was used.
    """

    labels: np.ndarray
    bases: list[np.ndarray] = field(repr=False, default_factory=list)
    sigma: float = 0.0


def _haar_basis(rng: np.random.Generator, p: int, d: int) -> np.ndarray:
    A = rng.standard_normal((p, d))
    Q, R = np.linalg.qr(A)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    return Q * signs


def random_basis(p: int, d: int, seed: int) -> np.ndarray:
    """Haar-distributed orthonormal ``p x d`` basis."""
    if not 1 <= d <= p:
        raise DimensionError(f"need 1 <= d <= p, got d={d}, p={p}")
    return _haar_basis(np.random.default_rng(seed), p, d)


def _rotation_angle(d: int, delta: float, convention: str) -> float:
    if convention == "squared":
        # d - ||Z^T Z'||_F^2 = delta^2  with  ||Z^T Z'||_F^2 = d cos^2(theta)
        sin_theta = delta / np.sqrt(d)
        if not 0.0 <= sin_theta <= 1.0 + 1e-12:
            raise ValueError(f"delta={delta} infeasible for d={d}")
        return float(np.arcsin(min(sin_theta, 1.0)))
    # unsquared reading: d - ||Z^T Z'||_F = delta^2, so cos(theta) = (d - delta^2)/sqrt(d);
    # feasible only when delta^2 >= d - sqrt(d).
    cos_theta = (d - delta**2) / np.sqrt(d)
    if not 0.0 <= cos_theta <= 1.0 + 1e-12:
        raise ValueError(
            f"unsquared distance reading infeasible for d={d}, delta={delta}: "
            f"requires d - sqrt(d) <= delta^2 <= d"
        )
    return float(np.arccos(min(cos_theta, 1.0)))


def _rotate(rng: np.random.Generator, Z: np.ndarray, delta: float, convention: str) -> np.ndarray:
    p, d = Z.shape
    theta = _rotation_angle(d, delta, convention)
    if theta == 0.0:
        return Z.copy()
    # Random orthonormal directions in the orthogonal complement of span(Z).
    B = rng.standard_normal((p, d))
    B -= Z @ (Z.T @ B)
    Q, R = np.linalg.qr(B)
    signs = np.sign(np.diag(R))
    signs[signs == 0] = 1.0
    U = Q * signs
    return Z * np.cos(theta) + U * np.sin(theta)


def rotate_basis(Z, delta: float, seed: int, distance_convention: str = "squared") -> np.ndarray:
    """Rotate an orthonormal basis to a prescribed chordal distance.

    Each column is rotated by a common angle toward a random orthonormal set
    drawn in the orthogonal complement of ``span(Z)``, so the result is again
    orthonormal and satisfies ``d - ||Z^T Z'||_F^2 == delta^2`` exactly
    (under the default squared convention).

    Requires ``p >= 2 d`` so the complement has room for ``d`` directions.
    """
    Z = np.asarray(Z, dtype=float)
    if Z.ndim != 2:
        raise DimensionError("basis must be a 2-d array")
    p, d = Z.shape
    if p < 2 * d:
        raise DimensionError(f"rotation infeasible: need p >= 2d, got p={p}, d={d}")
    return _rotate(np.random.default_rng(seed), Z, delta, distance_convention)


def noise_matrix(
    scenario: str,
    p: int,
    n: int,
    seed: int | np.random.SeedSequence,
    sigma2: float | None = None,
) -> np.ndarray:
    """Draw the ``p x n`` noise block for one scenario.

    Scenarios A and C are iid Gaussian.  Scenario B runs an AR(1) recursion
    per coordinate with coefficient 0.7 and a stationary start, scaled so the
    marginal variance matches the target.
    """
    if scenario not in NOISE_VARIANCE:
        raise ValueError(f"unknown noise scenario {scenario!r}")
    var = NOISE_VARIANCE[scenario] if sigma2 is None else float(sigma2)
    rng = np.random.default_rng(seed)
    if var == 0.0:
        rng.standard_normal((p, n))  # keep the stream layout stable
        return np.zeros((p, n))
    if scenario in ("A", "C"):
        return np.sqrt(var) * rng.standard_normal((p, n))
    # AR(1): e_t = phi e_{t-1} + y_t with stationary variance `var`, so the
    # innovation variance is var * (1 - phi^2); the first column is drawn
    # from the stationary marginal.
    phi = AR_COEFF
    innov = np.sqrt(var * (1.0 - phi**2)) * rng.standard_normal((p, n))
    innov[:, 0] = np.sqrt(var) * rng.standard_normal(p)
    return lfilter([1.0], [1.0, -phi], innov, axis=1)


def _segment_labels(changepoints, n: int) -> np.ndarray:
    cps = np.asarray(changepoints, dtype=int)
    return np.searchsorted(cps, np.arange(n), side="right")


def generate(spec: SyntheticSpec) -> tuple[np.ndarray, GroundTruth]:
    """Generate one series and its ground truth; bit-reproducible per seed."""
    basis_ss, signal_ss, noise_ss = np.random.SeedSequence(spec.seed).spawn(3)
    rng_basis = np.random.default_rng(basis_ss)

    bases = [_haar_basis(rng_basis, spec.p, spec.d)]
    for _ in spec.changepoints:
        if spec.p < 2 * spec.d:
            raise DimensionError(
                f"basis rotation needs p >= 2d, got p={spec.p}, d={spec.d}"
            )
        bases.append(
            _rotate(rng_basis, bases[-1], spec.delta, spec.distance_convention)
        )

    S = np.random.default_rng(signal_ss).standard_normal((spec.d, spec.n))
    X = np.empty((spec.p, spec.n))
    bounds = (0, *spec.changepoints, spec.n)
    for i, (a, b) in enumerate(zip(bounds, bounds[1:])):
        X[:, a:b] = bases[i] @ S[:, a:b]

    var = spec.noise_variance
    X += noise_matrix(spec.scenario, spec.p, spec.n, noise_ss, sigma2=var)

    truth = GroundTruth(
        labels=_segment_labels(spec.changepoints, spec.n),
        bases=bases,
        sigma=float(np.sqrt(var)),
    )
    return X, truth
