"""Real trigonometric basis on [0, 1] and finite coefficient vectors.

Single-index convention: the basis index k = 1, 2, ... maps to the
frequency j(k) = ceil(k / 2).  Odd k is the cosine mode
sqrt(2) cos(2 pi j x), even k the sine mode sqrt(2) sin(2 pi j x).
The constant mode is excluded by design, so every represented function
has mean zero on [0, 1] and the index k is in bijection with
(frequency, phase) pairs.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

__all__ = [
    "SUP_NORM_BOUND",
    "CoefficientVector",
    "FunctionFamilySpec",
    "basis_matrix",
    "eval_basis",
    "frequency",
    "make_test_function",
    "parseval_sq_distance",
    "sobolev_seminorm_sq",
    "synthesize",
]

#: Uniform bound achieved by every basis function: sup |e_k| = sqrt(2).
SUP_NORM_BOUND = math.sqrt(2.0)

_SQRT2 = math.sqrt(2.0)
_TWO_PI = 2.0 * math.pi


def frequency(k):
    """Frequency j(k) = ceil(k / 2) of basis index k (scalar or array)."""
    karr = np.asarray(k)
    if np.any(karr < 1):
        raise ValueError("basis index must satisfy k >= 1")
    j = (karr + 1) // 2
    return int(j) if np.ndim(k) == 0 else j


def basis_matrix(x, ks) -> np.ndarray:
    """Evaluate basis functions on a grid: out[i, m] = e_{ks[m]}(x[i])."""
    x = np.asarray(x, dtype=np.float64)
    ks = np.asarray(ks, dtype=np.int64)
    if ks.size and ks.min() < 1:
        raise ValueError("basis index must satisfy k >= 1")
    if x.size and (x.min() < 0.0 or x.max() > 1.0):
        raise ValueError("evaluation points must lie in [0, 1]")
    j = (ks + 1) // 2
    out = np.empty((x.size, ks.size), dtype=np.float64)
    if ks.size == 0 or x.size == 0:
        return out
    jmax = int(j.max())
    odd = (ks % 2) == 1
    if jmax > 4 * ks.size + 64:
        # Sparse index set: evaluate requested frequencies directly.
        jf = j.astype(np.float64)
        if odd.any():
            out[:, odd] = _SQRT2 * np.cos(_TWO_PI * np.multiply.outer(x, jf[odd]))
        even = ~odd
        if even.any():
            out[:, even] = _SQRT2 * np.sin(_TWO_PI * np.multiply.outer(x, jf[even]))
        return out
    # Dense index set: one cos/sin pair per point, higher frequencies by
    # angle-addition recurrence (drift ~ jmax * eps, far below test tolerances).
    ang = _TWO_PI * x
    c1 = np.cos(ang)
    s1 = np.sin(ang)
    cos_tab = np.empty((jmax, x.size))
    sin_tab = np.empty((jmax, x.size))
    cos_tab[0] = c1
    sin_tab[0] = s1
    for m in range(1, jmax):
        cp = cos_tab[m - 1]
        sp = sin_tab[m - 1]
        np.multiply(cp, c1, out=cos_tab[m])
        cos_tab[m] -= sp * s1
        np.multiply(sp, c1, out=sin_tab[m])
        sin_tab[m] += cp * s1
    if odd.any():
        out[:, odd] = _SQRT2 * cos_tab[j[odd] - 1].T
    even = ~odd
    if even.any():
        out[:, even] = _SQRT2 * sin_tab[j[even] - 1].T
    return out


def eval_basis(k: int, x: float) -> float:
    """Value of the k-th basis function at a point x in [0, 1]."""
    if np.ndim(k) != 0 or np.ndim(x) != 0:
        raise ValueError("eval_basis takes scalar arguments; use basis_matrix")
    return float(basis_matrix([x], [k])[0, 0])


@dataclass(frozen=True, eq=False)
class CoefficientVector:
    """A mean-zero function stored as coefficients on indices k = 1..len.

    The squared coefficient sum equals the squared L2 norm of the
    synthesized function (Parseval).  Instances are immutable; the
    backing array is locked against writes.
    """

    coeffs: np.ndarray

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.float64).ravel()
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)

    @classmethod
    def zero(cls) -> "CoefficientVector":
        return cls(np.empty(0))

    @property
    def support(self) -> int:
        """Largest stored index (coefficients beyond it are zero)."""
        return int(self.coeffs.size)

    def coeff(self, k: int) -> float:
        """Coefficient at 1-based index k, zero beyond the support."""
        if k < 1:
            raise ValueError("basis index must satisfy k >= 1")
        return float(self.coeffs[k - 1]) if k <= self.support else 0.0

    def norm_sq(self) -> float:
        return float(np.sum(self.coeffs**2))

    def padded(self, size: int) -> np.ndarray:
        """Writable copy of the coefficients, zero-padded to >= size."""
        out = np.zeros(max(int(size), self.support))
        out[: self.support] = self.coeffs
        return out

    def scaled(self, c: float) -> "CoefficientVector":
        return CoefficientVector(float(c) * self.coeffs)

    def __eq__(self, other):
        if not isinstance(other, CoefficientVector):
            return NotImplemented
        return self.coeffs.shape == other.coeffs.shape and bool(
            np.all(self.coeffs == other.coeffs)
        )

    def __hash__(self):
        return hash((self.coeffs.size, self.coeffs.tobytes()))

    def to_json_dict(self) -> dict:
        return {"coeffs": [float(c) for c in self.coeffs]}

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict())

    @classmethod
    def from_json_dict(cls, payload: dict) -> "CoefficientVector":
        return cls(np.asarray(payload["coeffs"], dtype=np.float64))

    @classmethod
    def from_json(cls, text: str) -> "CoefficientVector":
        return cls.from_json_dict(json.loads(text))


def synthesize(f: CoefficientVector, x):
    """Pointwise value sum_k coeffs[k] e_k(x); x scalar or array in [0, 1]."""
    scalar = np.ndim(x) == 0
    xs = np.atleast_1d(np.asarray(x, dtype=np.float64))
    ks = np.arange(1, f.support + 1)
    vals = np.zeros(xs.size)
    chunk = max(1, (1 << 22) // max(1, f.support))
    for i0 in range(0, xs.size, chunk):
        sl = slice(i0, min(i0 + chunk, xs.size))
        vals[sl] = basis_matrix(xs[sl], ks) @ f.coeffs
    return float(vals[0]) if scalar else vals


def parseval_sq_distance(f: CoefficientVector, g: CoefficientVector) -> float:
    """Squared L2 distance computed in coefficient space (shorter side padded)."""
    size = max(f.support, g.support)
    diff = f.padded(size) - g.padded(size)
    return float(np.sum(diff**2))


def sobolev_seminorm_sq(f: CoefficientVector, s: float) -> float:
    """Weighted coefficient sum sum_k k^(2s) coeffs[k]^2 for smoothness s > 0."""
    if s <= 0:
        raise ValueError("smoothness index s must be positive")
    k = np.arange(1, f.support + 1, dtype=np.float64)
    return float(np.sum(k ** (2.0 * s) * f.coeffs**2))


@dataclass(frozen=True)
class FunctionFamilySpec:
    """Parameters of a canonical test-function family.

    kind "sobolev": coeffs[k] = amplitude (1 + k)^(-q), requiring
    q > s + 1/2 so the function sits strictly inside the smoothness-s
    ellipsoid; q defaults to s + 1.  kind "supersmooth":
    coeffs[k] = amplitude exp(-gamma k^t_exp).
    """

    kind: str
    k_support: int
    amplitude: float = 1.0
    s: float | None = None
    q: float | None = None
    gamma: float | None = None
    t_exp: float | None = None


def make_test_function(spec: FunctionFamilySpec) -> CoefficientVector:
    """Build the coefficient vector described by a FunctionFamilySpec."""
    if spec.k_support < 1:
        raise ValueError("k_support must be a positive integer")
    k = np.arange(1, spec.k_support + 1, dtype=np.float64)
    if spec.kind == "sobolev":
        if spec.s is None or spec.s <= 0:
            raise ValueError("sobolev family needs a smoothness index s > 0")
        q = spec.s + 1.0 if spec.q is None else float(spec.q)
        if q <= spec.s + 0.5:
            raise ValueError("sobolev decay exponent must satisfy q > s + 1/2")
        coeffs = spec.amplitude * (1.0 + k) ** (-q)
    elif spec.kind == "supersmooth":
        if spec.gamma is None or spec.gamma < 0:
            raise ValueError("supersmooth family needs gamma >= 0")
        if spec.t_exp is None or spec.t_exp <= 0:
            raise ValueError("supersmooth family needs t_exp > 0")
        coeffs = spec.amplitude * np.exp(-spec.gamma * k**spec.t_exp)
    else:
        raise ValueError(f"unknown function family: {spec.kind!r}")
    return CoefficientVector(coeffs)
