"""Adaptive spectral cut-off estimation pipeline.

From a sample of (Y, X, W) triples the pipeline estimates the response
coefficients r_hat, the operator eigenvalues lambda_hat, and the term
variances sigma_sq_hat; truncates the eigenvalue sequence at the first
index where the estimate drops below log(n) / sqrt(n); minimizes a
penalized contrast over truncation levels m; and inverts the retained
coefficients to produce the adaptive estimate.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .basis import CoefficientVector, basis_matrix
from .dgp import IvSample, eigenvalue_profile, true_eigenvalue
from .serialize import format_value, to_plain

__all__ = [
    "DegenerateSampleError",
    "EstimateReport",
    "EstimatorConfig",
    "adaptive_estimate",
    "deterministic_resolution_bounds",
    "estimate_eigenvalues",
    "estimate_r_coeffs",
    "estimate_resolution",
    "estimate_sigma_sq",
    "flat_penalty_criterion",
    "naive_estimator",
    "penalized_criterion",
    "select_level",
    "select_resolution",
    "thresholded_estimator",
]

_CHUNK = 1 << 16
_SCAN_BLOCK = 16


class DegenerateSampleError(ValueError):
    """Raised when the sample is too small for the resolution threshold."""


@dataclass(frozen=True)
class EstimatorConfig:
    """Tuning knobs of the adaptive estimator.

    k_max caps the eigenvalue scan outright; n_cap overrides the
    default scan horizon min(n^4, k_max).  penalty_log_exponent is the
    power p in the penalty weight log(n)^p / n (default 2).
    u0_constant is the constant c of the flat-penalty contrast used as
    a comparative baseline.  allow_empty_model admits m = 0.
    """

    k_max: int = 10**6
    n_cap: int | None = None
    penalty_log_exponent: float = 2.0
    u0_constant: float = 2.0
    allow_empty_model: bool = True

    def __post_init__(self):
        if self.k_max < 1:
            raise ValueError("k_max must be positive")
        if self.n_cap is not None and self.n_cap < 1:
            raise ValueError("n_cap must be positive when given")
        if self.penalty_log_exponent < 0:
            raise ValueError("penalty_log_exponent must be nonnegative")

    def resolution_cap(self, n: int) -> int:
        horizon = int(n) ** 4 if self.n_cap is None else int(self.n_cap)
        return min(horizon, self.k_max)


def _mean_basis_product(x: np.ndarray, w: np.ndarray, ks: np.ndarray) -> np.ndarray:
    total = np.zeros(ks.size)
    n = x.size
    for i0 in range(0, n, _CHUNK):
        sl = slice(i0, min(i0 + _CHUNK, n))
        total += np.sum(basis_matrix(x[sl], ks) * basis_matrix(w[sl], ks), axis=0)
    return total / n


def estimate_r_coeffs(sample: IvSample, K: int) -> np.ndarray:
    """Empirical response coefficients (1/n) sum_i Y_i psi_k(W_i), k = 1..K."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    if K == 0:
        return np.empty(0)
    ks = np.arange(1, K + 1)
    total = np.zeros(K)
    for i0 in range(0, sample.n, _CHUNK):
        sl = slice(i0, min(i0 + _CHUNK, sample.n))
        total += basis_matrix(sample.w[sl], ks).T @ sample.y[sl]
    return total / sample.n


def estimate_eigenvalues(sample: IvSample, K: int) -> np.ndarray:
    """Empirical eigenvalues (1/n) sum_i psi_k(W_i) phi_k(X_i), k = 1..K."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    if K == 0:
        return np.empty(0)
    return _mean_basis_product(sample.x, sample.w, np.arange(1, K + 1))


def _response_moments(sample: IvSample, K: int) -> tuple[np.ndarray, np.ndarray]:
    """r_hat and sigma_sq_hat together, sharing one basis build when possible."""
    if K == 0:
        return np.empty(0), np.empty(0)
    ks = np.arange(1, K + 1)
    if sample.n <= _CHUNK:
        # Single chunk: identical accumulation to the chunked paths below.
        bw = basis_matrix(sample.w, ks)
        r_hat = (bw.T @ sample.y) / sample.n
        dev = sample.y[:, None] * bw - r_hat
        return r_hat, np.sum(dev * dev, axis=0) / sample.n
    r_hat = estimate_r_coeffs(sample, K)
    acc = np.zeros(K)
    for i0 in range(0, sample.n, _CHUNK):
        sl = slice(i0, min(i0 + _CHUNK, sample.n))
        dev = sample.y[sl, None] * basis_matrix(sample.w[sl], ks) - r_hat
        acc += np.sum(dev * dev, axis=0)
    return r_hat, acc / sample.n


def estimate_sigma_sq(sample: IvSample, K: int) -> np.ndarray:
    """Biased empirical variance of {Y_i psi_k(W_i)} (divide by n), k = 1..K."""
    if K < 0:
        raise ValueError("K must be nonnegative")
    return _response_moments(sample, K)[1]


def resolution_threshold(n: int) -> float:
    """Noise level log(n) / sqrt(n) below which estimated eigenvalues are cut."""
    if n < 3:
        raise DegenerateSampleError("need n >= 3 so that log n exceeds 1")
    return math.log(n) / math.sqrt(n)


def select_resolution(lambda_hat, n: int, config: EstimatorConfig | None = None) -> int:
    """First index where |lambda_hat| falls to the noise level, minus one.

    Returns the scan horizon itself when no crossing occurs (permissive
    cap convention); 0 means the empty model.
    """
    config = config or EstimatorConfig()
    lam = np.asarray(lambda_hat, dtype=np.float64)
    thr = resolution_threshold(n)
    horizon = min(lam.size, config.resolution_cap(n))
    below = np.nonzero(np.abs(lam[:horizon]) <= thr)[0]
    return int(below[0]) if below.size else int(horizon)


def _resolution_scan(sample: IvSample, config: EstimatorConfig):
    """Lazy eigenvalue scan up to the threshold crossing or the cap.

    Returns (resolution, lambda_hat[1..resolution], cap_reached).
    """
    thr = resolution_threshold(sample.n)
    cap = config.resolution_cap(sample.n)
    collected: list[np.ndarray] = []
    k0 = 1
    while k0 <= cap:
        ks = np.arange(k0, min(k0 + _SCAN_BLOCK - 1, cap) + 1)
        lam = _mean_basis_product(sample.x, sample.w, ks)
        hit = np.nonzero(np.abs(lam) <= thr)[0]
        if hit.size:
            collected.append(lam[: hit[0]])
            resolution = k0 - 1 + int(hit[0])
            return resolution, np.concatenate(collected), False
        collected.append(lam)
        k0 += ks.size
    return cap, np.concatenate(collected) if collected else np.empty(0), True


def estimate_resolution(sample: IvSample, config: EstimatorConfig | None = None) -> int:
    """Data-driven resolution bound via the lazy eigenvalue scan."""
    resolution, _, _ = _resolution_scan(sample, config or EstimatorConfig())
    return resolution


def deterministic_resolution_bounds(t: float, n: int) -> tuple[int, int]:
    """Deterministic bracket (lower, upper) for the random resolution bound.

    lower uses the inflated threshold log(n)^2 / sqrt(n) and subtracts
    one; upper uses the deflated threshold log(n)^(3/4) / sqrt(n)
    without subtracting (the two thresholds sandwich the data-driven
    one, so lower <= M < upper with high probability).
    """
    if n < 3:
        raise ValueError("bounds need n >= 3 so that log n exceeds 1")
    root_n = math.sqrt(n)
    lower = _first_eigenvalue_crossing(t, math.log(n) ** 2 / root_n) - 1
    upper = _first_eigenvalue_crossing(t, math.log(n) ** 0.75 / root_n)
    return lower, upper


def _first_eigenvalue_crossing(t: float, threshold: float, hard_cap: int = 10**8) -> int:
    block = 1024
    k0 = 1
    while k0 <= hard_cap:
        lam = true_eigenvalue(np.arange(k0, k0 + block), t)
        hit = np.nonzero(lam <= threshold)[0]
        if hit.size:
            return k0 + int(hit[0])
        k0 += block
    raise RuntimeError("no eigenvalue crossing found below the hard cap")


def naive_estimator(r_hat, t: float, m: int) -> CoefficientVector:
    """Known-operator projection estimate r_hat_k / lambda_k for k <= m."""
    r = np.asarray(r_hat, dtype=np.float64)
    if m < 0 or m > r.size:
        raise ValueError("truncation level m exceeds the available coefficients")
    return CoefficientVector(r[:m] / eigenvalue_profile(m, t))


def thresholded_estimator(r_hat, lambda_hat, m: int, resolution: int) -> CoefficientVector:
    """Estimated-operator projection r_hat_k / lambda_hat_k, support <= min(m, resolution)."""
    if m < 0:
        raise ValueError("truncation level m must be nonnegative")
    r = np.asarray(r_hat, dtype=np.float64)
    lam = np.asarray(lambda_hat, dtype=np.float64)
    mm = min(m, resolution, r.size, lam.size)
    return CoefficientVector(r[:mm] / lam[:mm])


def _criterion_values(r_hat, lambda_hat, sigma_sq_hat, weight: float, upto: int) -> np.ndarray:
    # Sequential prefix accumulation; the standalone criterion functions
    # replay the identical operation order so values match bitwise.
    values = np.empty(upto + 1)
    values[0] = 0.0
    acc_data = 0.0
    acc_pen = 0.0
    for k in range(upto):
        lam = float(lambda_hat[k])
        inv_sq = 1.0 / (lam * lam)
        acc_data += float(r_hat[k]) * float(r_hat[k]) * inv_sq
        acc_pen += float(sigma_sq_hat[k]) * inv_sq
        values[k + 1] = -acc_data + weight * acc_pen
    return values


def penalized_criterion(
    r_hat, lambda_hat, sigma_sq_hat, m: int, n: int, config: EstimatorConfig | None = None
) -> float:
    """Contrast -sum_k lambda_hat^-2 r_hat^2 + (log^p n / n) sum_k lambda_hat^-2 sigma_hat^2."""
    config = config or EstimatorConfig()
    if m < 0:
        raise ValueError("truncation level m must be nonnegative")
    weight = math.log(n) ** config.penalty_log_exponent / n
    return float(_criterion_values(r_hat, lambda_hat, sigma_sq_hat, weight, m)[m])


def flat_penalty_criterion(
    r_hat, lambda_hat, sigma_sq_hat, m: int, n: int, config: EstimatorConfig | None = None
) -> float:
    """Comparative baseline contrast with constant penalty weight c / n."""
    config = config or EstimatorConfig()
    if m < 0:
        raise ValueError("truncation level m must be nonnegative")
    weight = config.u0_constant / n
    return float(_criterion_values(r_hat, lambda_hat, sigma_sq_hat, weight, m)[m])


def select_level(criterion_values, allow_empty: bool = True) -> int:
    """Smallest minimizer of the contrast over m = 0..len-1 (ties go small)."""
    values = np.asarray(criterion_values, dtype=np.float64)
    if values.size == 0:
        raise ValueError("criterion values must be nonempty")
    if allow_empty or values.size == 1:
        return int(np.argmin(values))
    return 1 + int(np.argmin(values[1:]))


@dataclass(frozen=True)
class EstimateReport:
    """Everything computed from one sample.

    Arrays r_hat, lambda_hat, sigma_sq_hat cover k = 1..resolution and
    every retained |lambda_hat_k| exceeds log(n) / sqrt(n); criterion
    holds the contrast at m = 0..resolution.  phi_hat has support
    exactly m_selected with coefficients r_hat_k / lambda_hat_k.
    cap_reached flags the no-crossing fallback where the resolution is
    the scan horizon itself.
    """

    n: int
    resolution: int
    r_hat: np.ndarray
    lambda_hat: np.ndarray
    sigma_sq_hat: np.ndarray
    criterion: np.ndarray
    m_selected: int
    phi_hat: CoefficientVector
    config: EstimatorConfig
    cap_reached: bool = False

    @property
    def empty_model(self) -> bool:
        return self.m_selected == 0

    def to_json_dict(self) -> dict:
        return {
            "n": self.n,
            "resolution": self.resolution,
            "r_hat": to_plain(self.r_hat),
            "lambda_hat": to_plain(self.lambda_hat),
            "sigma_sq_hat": to_plain(self.sigma_sq_hat),
            "criterion": to_plain(self.criterion),
            "m_selected": self.m_selected,
            "phi_hat": self.phi_hat.to_json_dict(),
            "empty_model": self.empty_model,
            "cap_reached": self.cap_reached,
            "config": to_plain(self.config),
        }

    def write_phi_csv(self, path) -> None:
        from pathlib import Path

        lines = ["k,coefficient"]
        for k, c in enumerate(self.phi_hat.coeffs, start=1):
            lines.append(f"{k},{format_value(c)}")
        Path(path).write_bytes(("\n".join(lines) + "\n").encode("utf-8"))


def adaptive_estimate(sample: IvSample, config: EstimatorConfig | None = None) -> EstimateReport:
    """Run the full pipeline: scan, coefficients, contrast, selection, inversion."""
    config = config or EstimatorConfig()
    n = sample.n
    if n < 3:
        raise DegenerateSampleError("need n >= 3 so that log n exceeds 1")
    resolution, lambda_hat, cap_reached = _resolution_scan(sample, config)
    r_hat, sigma_sq_hat = _response_moments(sample, resolution)
    weight = math.log(n) ** config.penalty_log_exponent / n
    criterion = _criterion_values(r_hat, lambda_hat, sigma_sq_hat, weight, resolution)
    m_selected = select_level(criterion, allow_empty=config.allow_empty_model)
    phi_hat = thresholded_estimator(r_hat, lambda_hat, m_selected, resolution)
    return EstimateReport(
        n=n,
        resolution=resolution,
        r_hat=r_hat,
        lambda_hat=lambda_hat,
        sigma_sq_hat=sigma_sq_hat,
        criterion=criterion,
        m_selected=m_selected,
        phi_hat=phi_hat,
        config=config,
        cap_reached=cap_reached,
    )
