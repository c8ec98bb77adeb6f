"""Finite Blaschke products: the non-constant critical circle-to-circle maps.

A product is e^{i*theta} * prod_j (z - a_j)/(1 - conj(a_j) z) with all zeros
a_j strictly inside the unit disc, optionally followed by complex conjugation.
This module evaluates products and their derivatives, extracts boundary
traces, winding numbers and degrees, the closed-form trace energy, the
0-homogeneous extension to the upper half-space, a modulus-growth margin,
and the first-moment balance vector of the derivative density.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .conformal import stereo_inv
from .errors import (
    DomainViolation,
    InvalidArgument,
    NumericalFailure,
    Undersampled,
)
from .quadrature import disc_rule, integrate

__all__ = [
    "BlaschkeProduct",
    "CircleSample",
    "eval_product",
    "derivative",
    "boundary_trace",
    "winding_number",
    "degree_of",
    "circle_energy_analytic",
    "homogeneous_extension",
    "modulus_bound_margin",
    "balance_vector",
]

_MAX_WINDING_SAMPLES = 2**20


@dataclass(frozen=True)
class BlaschkeProduct:
    """Rotation angle, ordered zeros in the open disc, and a conjugation flag.

    The analytic product is always stored un-conjugated; `conjugated` records
    that the map is its complex conjugate.
    """

    theta: float = 0.0
    zeros: tuple[complex, ...] = ()
    conjugated: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "theta", float(self.theta) % (2.0 * math.pi))
        zs = tuple(complex(a) for a in self.zeros)
        if any(abs(a) >= 1.0 - 1e-12 for a in zs):
            raise InvalidArgument("every zero must satisfy |a| < 1 - 1e-12")
        object.__setattr__(self, "zeros", zs)
        object.__setattr__(self, "conjugated", bool(self.conjugated))

    @property
    def zero_count(self) -> int:
        return len(self.zeros)

    @property
    def max_zero_modulus(self) -> float:
        return max((abs(a) for a in self.zeros), default=0.0)

    def to_dict(self) -> dict:
        return {
            "theta": self.theta,
            "zeros": [[a.real, a.imag] for a in self.zeros],
            "conjugated": self.conjugated,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    @classmethod
    def from_dict(cls, d: dict) -> "BlaschkeProduct":
        return cls(
            theta=float(d.get("theta", 0.0)),
            zeros=tuple(complex(re, im) for re, im in d.get("zeros", [])),
            conjugated=bool(d.get("conjugated", False)),
        )

    @classmethod
    def from_json(cls, s: str) -> "BlaschkeProduct":
        return cls.from_dict(json.loads(s))


@dataclass(frozen=True)
class CircleSample:
    """Values of a circle map at n uniform angles 2*pi*k/n."""

    values: np.ndarray
    unit_tolerance: float = field(default=float("inf"))

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=complex)
        if vals.ndim != 1 or vals.shape[0] < 8:
            raise InvalidArgument("need at least 8 samples")
        object.__setattr__(self, "values", vals)
        vals.setflags(write=False)
        if np.isfinite(self.unit_tolerance):
            if np.max(np.abs(np.abs(vals) - 1.0)) > self.unit_tolerance:
                raise InvalidArgument("samples exceed the declared unit-modulus tolerance")

    @property
    def n(self) -> int:
        return int(self.values.shape[0])

    @property
    def angles(self) -> np.ndarray:
        return 2.0 * np.pi * np.arange(self.n) / self.n


def _check_closed_disc(z: np.ndarray) -> None:
    if np.any(np.abs(z) > 1.0 + 1e-12):
        raise DomainViolation("point outside the closed unit disc")


def eval_product(B: BlaschkeProduct, z):
    """Evaluate the product at z (|z| <= 1), factor by factor in zero order."""
    zz = np.asarray(z, dtype=complex)
    _check_closed_disc(zz)
    acc = np.full(zz.shape, np.exp(1j * B.theta), dtype=complex)
    for a in B.zeros:
        acc = acc * ((zz - a) / (1.0 - np.conj(a) * zz))
    if B.conjugated:
        acc = np.conj(acc)
    return complex(acc) if acc.ndim == 0 else acc


def _underlying_value(B: BlaschkeProduct, zz: np.ndarray) -> np.ndarray:
    acc = np.full(zz.shape, np.exp(1j * B.theta), dtype=complex)
    for a in B.zeros:
        acc = acc * ((zz - a) / (1.0 - np.conj(a) * zz))
    return acc


def derivative(B: BlaschkeProduct, z):
    """Complex derivative of the underlying (un-conjugated) product at z.

    Uses logarithmic-derivative accumulation; points within 1e-14 of a zero
    switch to the explicit product rule, so a zero of the product is never a
    division error.  For conjugated maps the conjugation tag lives on B; the
    map itself is the conjugate of the product this differentiates.
    """
    zz = np.asarray(z, dtype=complex)
    _check_closed_disc(zz)
    scalar = zz.ndim == 0
    zz = np.atleast_1d(zz)
    if not B.zeros:
        out = np.zeros(zz.shape, dtype=complex)
        return complex(out[0]) if scalar else out

    zeros = np.array(B.zeros)
    dist = np.abs(zz[..., None] - zeros[None, :])
    near_any = np.any(dist <= 1e-14, axis=-1)

    out = np.zeros(zz.shape, dtype=complex)
    far = ~near_any
    if np.any(far):
        zf = zz[far]
        w = _underlying_value(B, zf)
        s = np.zeros(zf.shape, dtype=complex)
        for a in B.zeros:
            s = s + (1.0 - abs(a) ** 2) / ((zf - a) * (1.0 - np.conj(a) * zf))
        out[far] = w * s
    if np.any(near_any):
        for idx in np.nonzero(near_any)[0]:
            z0 = zz[idx]
            total = 0.0 + 0.0j
            for j, a in enumerate(B.zeros):
                fj_prime = (1.0 - abs(a) ** 2) / (1.0 - np.conj(a) * z0) ** 2
                rest = np.exp(1j * B.theta)
                for k, b in enumerate(B.zeros):
                    if k != j:
                        rest = rest * ((z0 - b) / (1.0 - np.conj(b) * z0))
                total = total + fj_prime * rest
            out[idx] = total
    return complex(out[0]) if scalar else out


def boundary_trace(B: BlaschkeProduct, n: int) -> CircleSample:
    """Sample the product on the unit circle at n uniform angles."""
    if n < 8:
        raise InvalidArgument("boundary_trace needs n >= 8")
    angles = 2.0 * np.pi * np.arange(n) / n
    return CircleSample(eval_product(B, np.exp(1j * angles)), unit_tolerance=1e-12)


def winding_number(s: CircleSample) -> int:
    """Total phase increment / 2*pi of the sampled loop, an exact integer.

    Requires every consecutive phase jump to be under pi in absolute value;
    otherwise the sampling cannot distinguish windings and the call refuses.
    """
    v = s.values
    if np.any(np.abs(v) < 1e-300):
        raise InvalidArgument("zero sample has no phase")
    ratios = np.roll(v, -1) * np.conj(v)
    jumps = np.angle(ratios)
    if np.max(np.abs(jumps)) >= np.pi * (1.0 - 1e-12):
        raise Undersampled("phase jump >= pi between consecutive samples; increase n")
    total = float(np.sum(jumps)) / (2.0 * np.pi)
    return int(round(total))


def winding_number_refining(B: BlaschkeProduct, n: int = 64) -> int:
    """Winding of the boundary trace, doubling n on undersampling (cap 2^20)."""
    while True:
        try:
            return winding_number(boundary_trace(B, n))
        except Undersampled:
            if 2 * n > _MAX_WINDING_SAMPLES:
                raise
            n *= 2


def degree_of(B: BlaschkeProduct) -> int:
    """Signed degree: +(number of zeros), negated by conjugation."""
    d = B.zero_count
    return -d if B.conjugated else d


def circle_energy_analytic(B: BlaschkeProduct) -> float:
    """Closed-form nonlocal circle energy of the boundary trace: pi * (zero count)."""
    return math.pi * B.zero_count


def homogeneous_extension(B: BlaschkeProduct, X):
    """0-homogeneous extension to the upper half-space: eval at the chart
    image of X/|X|.  X must be nonzero with nonnegative third coordinate."""
    Xa = np.asarray(X, dtype=float)
    if Xa.shape[-1] != 3:
        raise DomainViolation("expected 3-vectors")
    norms = np.sqrt(np.sum(Xa * Xa, axis=-1))
    if np.any(norms == 0.0):
        raise DomainViolation("the extension is singular at the origin")
    p = Xa / norms[..., None]
    if np.any(p[..., 2] < -1e-12):
        raise DomainViolation("the extension lives on the upper half-space")
    z = stereo_inv(p)
    if Xa.ndim == 1:
        return eval_product(B, complex(z))
    return eval_product(B, np.asarray(z))


def modulus_bound_margin(B: BlaschkeProduct, n_samples: int = 65536) -> float:
    """max over sampled disc points of |w(z)| * ((|z|+3)/(3|z|+1))^d.

    A value <= 1 certifies |w(z)| <= ((3|z|+1)/(|z|+3))^d on the sample set.
    The sample grid includes the origin and full radial lines (the negative
    real axis among them, where the single-zero bound is tight at a = 1/3).
    """
    d = B.zero_count
    if d < 1:
        raise InvalidArgument("modulus bound needs at least one zero")
    n_t = max(16, int(math.sqrt(n_samples)) // 2 * 2)
    n_r = max(16, n_samples // n_t)
    radii = (np.arange(n_r) + 1.0) / (n_r + 1.0)
    angles = 2.0 * np.pi * np.arange(n_t) / n_t  # includes 0 and pi for even n_t
    z = np.concatenate([[0.0 + 0.0j], (radii[:, None] * np.exp(1j * angles)[None, :]).ravel()])
    r = np.abs(z)
    vals = np.abs(eval_product(B, z)) * ((r + 3.0) / (3.0 * r + 1.0)) ** d
    return float(np.max(vals))


def balance_vector(B: BlaschkeProduct, n_r: int = 96, n_t: int = 256) -> complex:
    """Disc integral of |w'(z)|^2 * z/(1+|z|^2), the first-moment balance of
    the derivative density (up to an overall positive constant).

    Vanishes exactly when the single-zero product is centered at the origin.
    """
    rule = disc_rule(n_r, n_t)

    def f(z):
        return np.abs(derivative(B, z)) ** 2 * z / (1.0 + np.abs(z) ** 2)

    out = integrate(rule, f)
    if not np.isfinite(out.real) or not np.isfinite(out.imag):
        raise NumericalFailure("balance integrand produced non-finite samples")
    return complex(out)
