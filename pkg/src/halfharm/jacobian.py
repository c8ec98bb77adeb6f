"""Distributional Jacobian of unit-modulus boundary data on the half-ball.

Boundary data for half-ball maps lives on two faces: a smooth plane-valued
part on the upper hemisphere and a unit-modulus part on the flat disc that
may wind around finitely many vortex points.  Such data carries a
topological charge distribution: pairing the wedge field of any interior
extension against the gradient of a Lipschitz test function gives a number
that depends only on the boundary values.  This module evaluates that
pairing two independent ways — an interior volume quadrature and the
boundary representation (hemisphere determinant plus point charges) —
quantifies its continuity in discrete trace seminorms, and computes the
convex boundary potential whose minimum pins the extension energy of
unit-degree data at pi.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.optimize import minimize

from .blaschke import CircleSample, winding_number
from .energy import _tangent_frames
from .errors import (
    InvalidArgument,
    NumericalFailure,
    PreconditionViolation,
    Undersampled,
)
from .quadrature import disc_rule, gauss_legendre, hemisphere_rule

__all__ = [
    "AtomMeasure",
    "BclReport",
    "BoundaryField",
    "ContinuityReport",
    "EnergyBoundReport",
    "LipschitzTest",
    "bcl_lower_bound",
    "bcl_potential",
    "continuity_gap",
    "coordinate_tests",
    "default_test_dictionary",
    "distance_test",
    "energy_lower_bound_check",
    "halfball_energy_fd",
    "jacobian_report",
    "pairing_surface",
    "pairing_volume",
    "product_vortex_field",
    "trace_seminorm",
    "wedge_field",
]

#: Two atoms closer than this are treated as one ill-posed position.
MIN_ATOM_SEPARATION = 1e-9

#: Atoms with less rim clearance than this cannot be circled for a winding
#: check, so the data is rejected rather than left unvalidated.
MIN_RIM_CLEARANCE = 1e-6


def _thread_count() -> int:
    raw = os.environ.get("HALFHARM_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        return 1
    return max(1, n)


# ---------------------------------------------------------------------------
# domain types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class AtomMeasure:
    """Integer point charges at pairwise-distinct positions in the closed
    unit disc, written as (position, degree) pairs with complex positions."""

    atoms: tuple[tuple[complex, int], ...]

    def __post_init__(self) -> None:
        cleaned = []
        for entry in self.atoms:
            try:
                a, d = entry
            except (TypeError, ValueError) as exc:
                raise InvalidArgument(
                    "each atom must be a (position, degree) pair"
                ) from exc
            a = complex(a)
            if abs(a) > 1.0 + 1e-12:
                raise InvalidArgument(
                    f"atom position {a} lies outside the closed unit disc"
                )
            if d != int(d):
                raise InvalidArgument(f"atom degree {d!r} is not an integer")
            cleaned.append((a, int(d)))
        for i in range(len(cleaned)):
            for j in range(i + 1, len(cleaned)):
                if abs(cleaned[i][0] - cleaned[j][0]) <= MIN_ATOM_SEPARATION:
                    raise InvalidArgument(
                        "atom positions must be pairwise distinct "
                        f"(separation above {MIN_ATOM_SEPARATION})"
                    )
        object.__setattr__(self, "atoms", tuple(cleaned))

    @property
    def total_degree(self) -> int:
        return sum(d for _, d in self.atoms)

    @property
    def positions(self) -> np.ndarray:
        """Atom positions embedded in the flat face as (k, 3) points."""
        return np.array([[a.real, a.imag, 0.0] for a, _ in self.atoms],
                        dtype=float).reshape(-1, 3)

    @property
    def degrees(self) -> tuple[int, ...]:
        return tuple(d for _, d in self.atoms)

    def min_separation(self) -> float:
        """Smallest pairwise distance between atom positions (inf if < 2)."""
        k = len(self.atoms)
        if k < 2:
            return math.inf
        return min(abs(self.atoms[i][0] - self.atoms[j][0])
                   for i in range(k) for j in range(i + 1, k))


@dataclass(frozen=True)
class LipschitzTest:
    """A scalar test function on the closed half-ball together with its
    declared Lipschitz constant and a display name.

    The callable receives an (m, 3) float array and returns (m,) floats.
    """

    func: Callable[[np.ndarray], np.ndarray]
    lip: float
    name: str

    def __post_init__(self) -> None:
        if not callable(self.func):
            raise InvalidArgument("LipschitzTest.func must be callable")
        if not (self.lip > 0.0 and math.isfinite(self.lip)):
            raise InvalidArgument("declared Lipschitz constant must be a "
                                  "positive finite number")

    def __call__(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self.func(pts), dtype=float).reshape(pts.shape[0])

    def validate(self, n_pairs: int = 400, seed: int = 0,
                 slack: float = 1e-6) -> None:
        """Check sampled difference quotients against the declared constant.

        Random point pairs in the closed upper half-ball; a quotient above
        lip * (1 + slack) rejects the declaration.
        """
        rng = np.random.default_rng(seed)
        pts = rng.normal(size=(2 * n_pairs, 3))
        pts /= np.linalg.norm(pts, axis=1, keepdims=True)
        pts *= rng.uniform(0.0, 1.0, size=(2 * n_pairs, 1)) ** (1.0 / 3.0)
        pts[:, 2] = np.abs(pts[:, 2])
        a, b = pts[:n_pairs], pts[n_pairs:]
        dist = np.linalg.norm(a - b, axis=1)
        keep = dist > 1e-9
        quot = np.abs(self(a[keep]) - self(b[keep])) / dist[keep]
        worst = float(np.max(quot)) if quot.size else 0.0
        if worst > self.lip * (1.0 + slack):
            raise PreconditionViolation(
                f"test '{self.name}' has sampled difference quotient "
                f"{worst:.6g} above its declared constant {self.lip:.6g}"
            )


def distance_test(c: complex) -> LipschitzTest:
    """The 1-Lipschitz test x -> |x - c| for a point c on the flat face."""
    c = complex(c)
    anchor = np.array([c.real, c.imag, 0.0])

    def f(pts: np.ndarray) -> np.ndarray:
        return np.linalg.norm(np.atleast_2d(pts) - anchor[None, :], axis=1)

    return LipschitzTest(f, 1.0, f"dist({c.real:g},{c.imag:g})")


def coordinate_tests() -> tuple[LipschitzTest, ...]:
    """The three 1-Lipschitz coordinate functions x1, x2, x3."""
    def pick(i: int) -> Callable[[np.ndarray], np.ndarray]:
        return lambda pts: np.atleast_2d(pts)[:, i]

    return tuple(LipschitzTest(pick(i), 1.0, f"x{i + 1}") for i in range(3))


def default_test_dictionary(grid_n: int = 5) -> tuple[LipschitzTest, ...]:
    """Distance tests on a coarse square grid over the closed disc (origin
    included for odd grid_n) plus the three coordinate functions."""
    if grid_n < 2:
        raise InvalidArgument("dictionary grid needs at least 2 points/axis")
    ticks = np.linspace(-1.0, 1.0, grid_n)
    tests = [distance_test(complex(cx, cy))
             for cx in ticks for cy in ticks
             if math.hypot(cx, cy) <= 1.0 + 1e-12]
    tests.extend(coordinate_tests())
    return tuple(tests)


def _phi_eval(phi) -> Callable[[np.ndarray], np.ndarray]:
    """Accept a LipschitzTest or any (m,3)->(m,) callable."""
    if isinstance(phi, LipschitzTest):
        return phi
    if callable(phi):
        return lambda pts: np.asarray(
            phi(np.atleast_2d(np.asarray(pts, dtype=float))), dtype=float
        ).reshape(np.atleast_2d(pts).shape[0])
    raise InvalidArgument("test function must be callable or a LipschitzTest")


@dataclass(frozen=True)
class BoundaryField:
    """Boundary data on the half-ball: a smooth plane-valued map on the
    upper hemisphere, a flat-face map of unit modulus away from declared
    vortex atoms, and the atom measure itself.

    sphere receives (m, 3) unit vectors with third coordinate >= 0 and
    returns (m,) complex; flat receives (m,) complex disc points and
    returns (m,) complex.
    """

    sphere: Callable[[np.ndarray], np.ndarray]
    flat: Callable[[np.ndarray], np.ndarray]
    atoms: AtomMeasure

    def eval_sphere(self, pts: np.ndarray) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(pts, dtype=float))
        return np.asarray(self.sphere(pts), dtype=complex).reshape(pts.shape[0])

    def eval_flat(self, z: np.ndarray) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        return np.asarray(self.flat(z), dtype=complex).reshape(z.shape[0])

    def validate(self, modulus_tol: float = 1e-6, agree_tol: float = 1e-6,
                 exclusion_radius: float = 0.05, n_equator: int = 256,
                 n_winding: int = 256) -> None:
        """Check the structural invariants of partially regular data.

        Raises PreconditionViolation when the flat part strays from unit
        modulus away from atoms, when the two faces disagree along the
        equator, or when the winding of the flat part around any atom does
        not match its declared degree.  A degree mismatch is always an
        error, never silently corrected.
        """
        rule = disc_rule(16, 48)
        z = rule.nodes
        mask = np.ones(z.shape[0], dtype=bool)
        for a, _ in self.atoms.atoms:
            mask &= np.abs(z - a) > exclusion_radius
        if np.any(mask):
            moduli = np.abs(self.eval_flat(z[mask]))
            worst = float(np.max(np.abs(moduli - 1.0)))
            if worst > modulus_tol:
                raise PreconditionViolation(
                    f"flat part modulus deviates from 1 by {worst:.3g} away "
                    f"from atoms (tolerance {modulus_tol:g})"
                )
        t = 2.0 * np.pi * np.arange(n_equator) / n_equator
        ring = np.exp(1j * t)
        equator3 = np.stack([np.cos(t), np.sin(t), np.zeros_like(t)], axis=1)
        gap = np.max(np.abs(self.eval_flat(ring) - self.eval_sphere(equator3)))
        if gap > agree_tol:
            raise PreconditionViolation(
                f"hemisphere and flat traces disagree on the equator by "
                f"{float(gap):.3g} (tolerance {agree_tol:g})"
            )
        self._validate_windings(n_winding)

    def _validate_windings(self, n_start: int) -> None:
        sep = self.atoms.min_separation()
        for a, d in self.atoms.atoms:
            clearance = 1.0 - abs(a)
            if clearance < MIN_RIM_CLEARANCE:
                raise PreconditionViolation(
                    f"atom at {a} sits too close to the rim to circle for a "
                    "winding check"
                )
            radius = 0.5 * min(sep, clearance, 0.2)
            n = max(64, int(n_start))
            while True:
                circle = a + radius * np.exp(
                    2j * np.pi * np.arange(n) / n)
                try:
                    w = winding_number(CircleSample(self.eval_flat(circle)))
                    break
                except Undersampled:
                    n *= 2
                    if n > 1 << 16:
                        raise
            if w != d:
                raise PreconditionViolation(
                    f"flat part winds {w} times around the atom at {a}, but "
                    f"its declared degree is {d}"
                )


# ---------------------------------------------------------------------------
# canonical test fields with closed-form finite-energy extensions
# ---------------------------------------------------------------------------


def _ball_moebius(a2: complex) -> Callable[[np.ndarray], np.ndarray]:
    """Conformal self-map of the unit ball sending the flat-face point a2
    to the origin; it preserves the upper half-ball, the hemisphere, and
    the flat face because the anchor has no vertical component."""
    a = np.array([a2.real, a2.imag, 0.0])
    aa = float(a @ a)

    def T(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        Xa = X - a[None, :]
        num = (1.0 - aa) * Xa - np.sum(Xa * Xa, axis=1, keepdims=True) * a[None, :]
        den = 1.0 - 2.0 * (X @ a) + aa * np.sum(X * X, axis=1)
        return num / den[:, None]

    return T


def _unit_vortex(X: np.ndarray) -> np.ndarray:
    """The canonical degree-one extension (x1 + i x2) / (|X| + x3)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return (X[:, 0] + 1j * X[:, 1]) / (np.linalg.norm(X, axis=1) + X[:, 2])


def product_vortex_field(
    atoms: AtomMeasure,
) -> tuple[BoundaryField, Callable[[np.ndarray], np.ndarray]]:
    """Boundary data with the prescribed atoms plus a finite-energy
    closed-form extension realizing it.

    Each atom contributes one factor: the canonical unit vortex composed
    with the ball self-map that centers the atom, raised to the atom's
    degree (conjugated for negative degrees so the factor stays bounded).
    Returns the boundary field and the extension callable; the extension
    is smooth on the closed half-ball except at the atom positions.
    """
    factors = [(_ball_moebius(a), d) for a, d in atoms.atoms]

    def extension(X: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(X, dtype=float))
        out = np.ones(X.shape[0], dtype=complex)
        for T, d in factors:
            w = _unit_vortex(T(X))
            out *= w ** d if d > 0 else np.conj(w) ** (-d)
        return out

    def sphere(pts: np.ndarray) -> np.ndarray:
        return extension(pts)

    def flat(z: np.ndarray) -> np.ndarray:
        z = np.atleast_1d(np.asarray(z, dtype=complex))
        pts = np.stack([z.real, z.imag, np.zeros(z.shape[0])], axis=1)
        return extension(pts)

    return BoundaryField(sphere=sphere, flat=flat, atoms=atoms), extension


# ---------------------------------------------------------------------------
# wedge field and volume pairing
# ---------------------------------------------------------------------------


def _singular_positions(atoms) -> np.ndarray:
    if atoms is None:
        return np.zeros((0, 3))
    if isinstance(atoms, AtomMeasure):
        return atoms.positions
    pts = [np.array([complex(a).real, complex(a).imag, 0.0])
           for a in atoms]
    return np.array(pts, dtype=float).reshape(-1, 3)


def _fd_steps(X: np.ndarray, sing: np.ndarray, frac: float,
              floor: float) -> np.ndarray:
    if sing.shape[0] == 0:
        return np.full(X.shape[0], frac)
    d = np.min(np.stack([np.linalg.norm(X - s[None, :], axis=1)
                         for s in sing]), axis=0)
    return frac * np.maximum(d, floor)


def _complex_gradient(v, X: np.ndarray, h: np.ndarray) -> list[np.ndarray]:
    grads = []
    for i in range(3):
        e = np.zeros(3)
        e[i] = 1.0
        plus = np.asarray(v(X + h[:, None] * e), dtype=complex).reshape(-1)
        minus = np.asarray(v(X - h[:, None] * e), dtype=complex).reshape(-1)
        grads.append((plus - minus) / (2.0 * h))
    return grads


def wedge_field(v, atoms=None, step_frac: float = 1e-3,
                step_floor: float = 1e-3) -> Callable[[np.ndarray], np.ndarray]:
    """The 3-vector field H(v) = 2 (d2v ^ d3v, d3v ^ d1v, d1v ^ d2v) of a
    plane-valued interior map, as a callable on (m, 3) points.

    Derivatives come from central differences whose step shrinks with the
    distance to the declared singular flat-face points, so the field stays
    accurate up to the vortices.  For complex-valued v the wedge of two
    derivatives is Im(conj(a) * b).
    """
    sing = _singular_positions(atoms)

    def H(pts: np.ndarray) -> np.ndarray:
        X = np.atleast_2d(np.asarray(pts, dtype=float))
        h = _fd_steps(X, sing, step_frac, step_floor)
        g1, g2, g3 = _complex_gradient(v, X, h)

        def wedge(a: np.ndarray, b: np.ndarray) -> np.ndarray:
            return np.imag(np.conj(a) * b)

        return 2.0 * np.stack(
            [wedge(g2, g3), wedge(g3, g1), wedge(g1, g2)], axis=1)

    return H


def _smooth_step_down(t: np.ndarray) -> np.ndarray:
    """Septic C^3 cutoff: 1 for t <= 0 decreasing to 0 for t >= 1.  A
    polynomial transition keeps Gauss rules accurate on the blended bulk."""
    t = np.clip(t, 0.0, 1.0)
    s = t * t * t * t * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t * t * t)
    return 1.0 - s


def _patch_radii(sing: np.ndarray, skip_radius: float) -> list[tuple[np.ndarray, float]]:
    patches = []
    for i in range(sing.shape[0]):
        a = sing[i]
        if np.linalg.norm(a) <= skip_radius:
            continue  # the global polar rule is already centered there
        m = 0.45
        for j in range(sing.shape[0]):
            if j != i:
                m = min(m, 0.5 * float(np.linalg.norm(a - sing[j])))
        m = min(m, 0.85 * (1.0 - float(np.linalg.norm(a))))
        patches.append((a, max(m, 1e-3)))
    return patches


def _halfball_quadrature(f, sing: np.ndarray, n_r: int, n_hr: int,
                         n_ht: int, n_s: int,
                         skip_radius: float = 0.05) -> float:
    """Integrate f over the upper half unit ball with vortex-adapted cells.

    A global polar rule covers the bulk; around each flat-face singular
    point away from the origin a locally centered polar patch takes over
    through a smooth partition of unity, so integrands concentrating like
    1/dist^2 at the vortices are resolved by the patch's radial Jacobian.
    """
    patches = _patch_radii(sing, skip_radius)

    def chi_sum(X: np.ndarray) -> np.ndarray:
        out = np.zeros(X.shape[0])
        for a, rho in patches:
            s = np.linalg.norm(X - a[None, :], axis=1)
            out += _smooth_step_down(2.0 * s / rho - 1.0)
        return out

    gl = gauss_legendre(n_r)
    r = 0.5 * (gl.nodes + 1.0)
    wr = 0.5 * gl.weights
    hem = hemisphere_rule(n_hr, n_ht)
    X = (r[:, None, None] * hem.nodes[None, :, :]).reshape(-1, 3)
    W = (wr[:, None] * r[:, None] ** 2 * hem.weights[None, :]).ravel()
    total = float(np.sum(W * (1.0 - chi_sum(X)) * f(X)))

    gs = gauss_legendre(n_s)
    for a, rho in patches:
        s = 0.5 * (gs.nodes + 1.0) * rho
        ws = 0.5 * gs.weights * rho
        Xa = (a[None, None, :] + s[:, None, None] * hem.nodes[None, :, :])
        Xa = Xa.reshape(-1, 3)
        Wa = (ws[:, None] * s[:, None] ** 2 * hem.weights[None, :]).ravel()
        sa = np.linalg.norm(Xa - a[None, :], axis=1)
        total += float(np.sum(Wa * _smooth_step_down(2.0 * sa / rho - 1.0)
                              * f(Xa)))
    return total


def pairing_volume(v, phi, atoms=None, *, n_r: int = 24, n_hr: int = 24,
                   n_ht: int = 48, n_s: int = 48,
                   phi_step: float = 1e-6) -> float:
    """Charge pairing through the interior: integral over the upper half
    unit ball of H(v) . grad(phi).

    v is any finite-energy extension of the boundary data; the result
    depends only on the trace.  phi is a LipschitzTest or plain callable on
    (m, 3) points.  atoms (AtomMeasure or complex positions) declares the
    flat-face vortex points of v so the quadrature and difference steps can
    adapt; omit it for smooth extensions.  A constant phi gives exactly 0
    because its central differences vanish identically.
    """
    sing = _singular_positions(atoms)
    H = wedge_field(v, atoms)
    peval = _phi_eval(phi)

    def integrand(X: np.ndarray) -> np.ndarray:
        Hx = H(X)
        grads = []
        for i in range(3):
            e = np.zeros(3)
            e[i] = 1.0
            grads.append((peval(X + phi_step * e) - peval(X - phi_step * e))
                         / (2.0 * phi_step))
        G = np.stack(grads, axis=1)
        return np.sum(Hx * G, axis=1)

    return _halfball_quadrature(integrand, sing, n_r, n_hr, n_ht, n_s)


def halfball_energy_fd(v, atoms=None, *, n_r: int = 24, n_hr: int = 24,
                       n_ht: int = 48, n_s: int = 48) -> float:
    """Discrete Dirichlet energy (1/2) integral of |grad v|^2 over the
    upper half unit ball, with the same vortex-adapted quadrature and
    difference steps as pairing_volume."""
    sing = _singular_positions(atoms)

    def integrand(X: np.ndarray) -> np.ndarray:
        h = _fd_steps(X, sing, 1e-3, 1e-3)
        g = _complex_gradient(v, X, h)
        return sum(np.abs(gi) ** 2 for gi in g)

    return 0.5 * _halfball_quadrature(integrand, sing, n_r, n_hr, n_ht, n_s)


# ---------------------------------------------------------------------------
# surface representation
# ---------------------------------------------------------------------------


def pairing_surface(g: BoundaryField, nu: AtomMeasure | None, phi, *,
                    n_hr: int = 48, n_ht: int = 96,
                    fd_h: float = 1e-5) -> float:
    """Charge pairing through the boundary: twice the hemisphere integral
    of det(tangential gradient of the sphere part) times phi, minus
    2*pi*sum of degree_i * phi(atom_i).

    The determinant uses per-node orthonormal tangent frames (tau1, tau2)
    with (tau1, tau2, x) direct, and tangential central differences along
    renormalized great-circle displacements.  nu defaults to the field's
    own atoms; passing an inconsistent measure is an error.  Atoms closer
    together than the equatorial node spacing cannot be told apart by the
    rule and are rejected.
    """
    if nu is None:
        nu = g.atoms
    elif isinstance(g, BoundaryField) and nu is not g.atoms \
            and nu.atoms != g.atoms.atoms:
        raise PreconditionViolation(
            "the supplied atom measure disagrees with the field's own atoms"
        )
    resolution = 2.0 * np.pi / n_ht
    if nu.min_separation() < resolution:
        raise PreconditionViolation(
            f"atoms are closer ({nu.min_separation():.3g}) than the grid "
            f"resolution ({resolution:.3g}); refine the rule"
        )
    peval = _phi_eval(phi)
    rule = hemisphere_rule(n_hr, n_ht)
    P, W = rule.nodes, rule.weights
    t1, t2 = _tangent_frames(P)

    def tangential(tau: np.ndarray) -> np.ndarray:
        plus = P + fd_h * tau
        minus = P - fd_h * tau
        plus /= np.linalg.norm(plus, axis=1, keepdims=True)
        minus /= np.linalg.norm(minus, axis=1, keepdims=True)
        return (g.eval_sphere(plus) - g.eval_sphere(minus)) / (2.0 * fd_h)

    det = np.imag(np.conj(tangential(t1)) * tangential(t2))
    surface = 2.0 * float(np.sum(W * det * peval(P)))
    if len(nu.atoms) == 0:
        return surface
    atom_values = peval(nu.positions)
    charge = float(sum(d * av for (_, d), av in zip(nu.atoms, atom_values)))
    return surface - 2.0 * np.pi * charge


# ---------------------------------------------------------------------------
# continuity of the pairing in trace seminorms
# ---------------------------------------------------------------------------


def _boundary_nodes(n_hr: int, n_ht: int) -> tuple[np.ndarray, np.ndarray, int]:
    """Quadrature nodes and weights covering the whole half-ball boundary:
    hemisphere nodes first, then flat-face nodes embedded at x3 = 0.
    Returns (points (m,3), weights (m,), hemisphere count)."""
    hem = hemisphere_rule(n_hr, n_ht)
    flat = disc_rule(n_hr, n_ht)
    z = flat.nodes
    flat3 = np.stack([z.real, z.imag, np.zeros(z.shape[0])], axis=1)
    pts = np.concatenate([hem.nodes, flat3], axis=0)
    wts = np.concatenate([hem.weights, flat.weights])
    return pts, wts, hem.nodes.shape[0]


def _field_values(g: BoundaryField, pts: np.ndarray, n_hem: int) -> np.ndarray:
    vals = np.empty(pts.shape[0], dtype=complex)
    vals[:n_hem] = g.eval_sphere(pts[:n_hem])
    z = pts[n_hem:, 0] + 1j * pts[n_hem:, 1]
    vals[n_hem:] = g.eval_flat(z)
    return vals


def _seminorm_from_values(vals: np.ndarray, pts: np.ndarray,
                          wts: np.ndarray, block: int = 512) -> float:
    total = 0.0
    m = pts.shape[0]
    for lo in range(0, m, block):
        hi = min(lo + block, m)
        diff = pts[lo:hi, None, :] - pts[None, :, :]
        dist = np.linalg.norm(diff, axis=2)
        num = np.abs(vals[lo:hi, None] - vals[None, :]) ** 2
        with np.errstate(divide="ignore", invalid="ignore"):
            ker = np.where(dist > 1e-12, num / dist ** 3, 0.0)
        total += float(np.sum(wts[lo:hi, None] * wts[None, :] * ker))
    return math.sqrt(max(total, 0.0))


def trace_seminorm(g: BoundaryField, *, n_hr: int = 24,
                   n_ht: int = 48) -> float:
    """Discrete half-order boundary seminorm of the data: square root of
    the double quadrature sum of |g(x) - g(y)|^2 / |x - y|^3 over the full
    half-ball boundary with the diagonal excluded.

    This fixed-rule double sum is the computable stand-in for the trace
    seminorm; all continuity reports use it consistently.
    """
    pts, wts, n_hem = _boundary_nodes(n_hr, n_ht)
    vals = _field_values(g, pts, n_hem)
    return _seminorm_from_values(vals, pts, wts)


@dataclass(frozen=True)
class ContinuityReport:
    """Observed pairing gap between two boundary data sets, the seminorm
    product bound, and their ratio (the empirical stability constant)."""

    gap: float
    bound: float
    ratio: float
    seminorm_left: float
    seminorm_right: float
    seminorm_diff: float
    test_name: str

    def __float__(self) -> float:
        return float(self.gap)


def continuity_gap(g1: BoundaryField, g2: BoundaryField,
                   phi: LipschitzTest, *, n_hr: int = 24, n_ht: int = 48,
                   surface_n_hr: int = 48,
                   surface_n_ht: int = 96) -> ContinuityReport:
    """Compare the charge pairings of two boundary data sets against the
    seminorm continuity bound.

    gap = |pairing_surface(g1, phi) - pairing_surface(g2, phi)| and
    bound = (seminorm(g1) + seminorm(g2)) * seminorm(g1 - g2) * lip(phi),
    all seminorms taken with the same fixed discrete rule.  The ratio
    gap/bound is reported, never asserted against a universal constant.
    """
    if not isinstance(phi, LipschitzTest):
        raise InvalidArgument(
            "continuity_gap needs a LipschitzTest with a declared constant"
        )
    p1 = pairing_surface(g1, None, phi, n_hr=surface_n_hr, n_ht=surface_n_ht)
    p2 = pairing_surface(g2, None, phi, n_hr=surface_n_hr, n_ht=surface_n_ht)
    gap = abs(p1 - p2)
    pts, wts, n_hem = _boundary_nodes(n_hr, n_ht)
    v1 = _field_values(g1, pts, n_hem)
    v2 = _field_values(g2, pts, n_hem)
    s1 = _seminorm_from_values(v1, pts, wts)
    s2 = _seminorm_from_values(v2, pts, wts)
    sd = _seminorm_from_values(v1 - v2, pts, wts)
    bound = (s1 + s2) * sd * phi.lip
    ratio = gap / bound if bound > 0.0 else 0.0
    return ContinuityReport(gap=gap, bound=bound, ratio=ratio,
                            seminorm_left=s1, seminorm_right=s2,
                            seminorm_diff=sd, test_name=phi.name)


# ---------------------------------------------------------------------------
# sharp lower bound for unit-degree data
# ---------------------------------------------------------------------------


def bcl_potential(c: complex, *, n_hr: int = 48, n_ht: int = 96) -> float:
    """The convex hemisphere potential V(c) = integral over the upper unit
    hemisphere of |x - c| / (1 + x3)^2, for c on the flat face.

    V(0) = pi exactly, and 0 is the unique minimizer.
    """
    c = complex(c)
    anchor = np.array([c.real, c.imag, 0.0])
    rule = hemisphere_rule(n_hr, n_ht)
    d = np.linalg.norm(rule.nodes - anchor[None, :], axis=1)
    return float(np.sum(rule.weights * d / (1.0 + rule.nodes[:, 2]) ** 2))


@dataclass(frozen=True)
class BclReport:
    """Sharp lower bound for the pairing of unit-total-degree data: the
    minimum of the hemisphere potential over the closed disc."""

    value: float
    minimizer: complex
    grid_spacing: float
    grid_minimizer: complex
    grid_value: float

    def __float__(self) -> float:
        return float(self.value)


def bcl_lower_bound(nu: AtomMeasure, *, grid_n: int = 9, n_hr: int = 48,
                    n_ht: int = 96) -> BclReport:
    """Minimize the hemisphere potential V(c) over the closed unit disc for
    an atom measure of total degree one: coarse grid search (origin
    included) refined by simplex descent on the convex potential.

    The minimum sits at c = 0 with V(0) = pi, so the returned value is the
    sharp half-pairing bound pi for unit-degree data.  Total degree other
    than one is rejected.
    """
    if nu.total_degree != 1:
        raise PreconditionViolation(
            f"the sharp bound applies to total degree 1, got "
            f"{nu.total_degree}"
        )
    if grid_n < 3 or grid_n % 2 == 0:
        raise InvalidArgument("grid_n must be an odd integer >= 3 so the "
                              "grid contains the origin")
    rule = hemisphere_rule(n_hr, n_ht)
    nodes, weights = rule.nodes, rule.weights
    kernel = weights / (1.0 + nodes[:, 2]) ** 2

    def V(c_xy: np.ndarray) -> float:
        anchor = np.array([c_xy[0], c_xy[1], 0.0])
        return float(np.sum(kernel * np.linalg.norm(
            nodes - anchor[None, :], axis=1)))

    ticks = np.linspace(-1.0, 1.0, grid_n)
    spacing = float(ticks[1] - ticks[0])
    best_c = None
    best_v = math.inf
    for cx in ticks:
        for cy in ticks:
            if math.hypot(cx, cy) > 1.0 + 1e-12:
                continue
            val = V(np.array([cx, cy]))
            if val < best_v:
                best_v = val
                best_c = (float(cx), float(cy))
    res = minimize(V, np.array(best_c), method="Nelder-Mead",
                   options={"xatol": 1e-7, "fatol": 1e-12, "maxiter": 400})
    if not res.success and res.fun > best_v:
        raise NumericalFailure("descent on the convex potential failed to "
                               "improve on the grid minimum")
    cx, cy = (res.x if res.fun <= best_v else np.array(best_c))
    if math.hypot(cx, cy) > 1.0:
        scale = 1.0 / math.hypot(cx, cy)
        cx, cy = cx * scale, cy * scale
    value = V(np.array([cx, cy]))
    return BclReport(value=value, minimizer=complex(cx, cy),
                     grid_spacing=spacing,
                     grid_minimizer=complex(*best_c), grid_value=best_v)


# ---------------------------------------------------------------------------
# energy lower bound through the test dictionary
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EnergyBoundReport:
    """Discrete half-ball energy of an extension against the best charge
    pairing over a dictionary of 1-Lipschitz tests."""

    energy: float
    lower_bound: float
    sup_pairing: float
    sup_test_name: str
    margin: float
    ok: bool
    tests_evaluated: int

    def __float__(self) -> float:
        return float(self.margin)


def energy_lower_bound_check(v, atoms=None, *,
                             dictionary: Sequence[LipschitzTest] | None = None,
                             n_r: int = 24, n_hr: int = 24, n_ht: int = 48,
                             n_s: int = 48,
                             tol: float = 1e-3) -> EnergyBoundReport:
    """Check the discrete energy of an extension against half the best
    absolute charge pairing over a dictionary of 1-Lipschitz tests.

    Both signs of every test are available (negating a test negates the
    pairing), so the supremum is taken over absolute values.  The energy
    must weakly dominate half the supremum; for the canonical unit vortex
    the two agree and both equal pi.  The dictionary sweep runs on
    HALFHARM_THREADS workers (default 1) in a deterministic order.
    """
    if dictionary is None:
        dictionary = default_test_dictionary()
    if not dictionary:
        raise InvalidArgument("the test dictionary must not be empty")
    for entry in dictionary:
        if not isinstance(entry, LipschitzTest):
            raise InvalidArgument("dictionary entries must be LipschitzTest")
        if entry.lip > 1.0 + 1e-12:
            raise InvalidArgument(
                f"dictionary entry '{entry.name}' declares constant "
                f"{entry.lip} > 1"
            )
    energy = halfball_energy_fd(v, atoms, n_r=n_r, n_hr=n_hr, n_ht=n_ht,
                                n_s=n_s)

    def one(test: LipschitzTest) -> float:
        return pairing_volume(v, test, atoms, n_r=n_r, n_hr=n_hr,
                              n_ht=n_ht, n_s=n_s)

    workers = _thread_count()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            pairings = list(pool.map(one, dictionary))
    else:
        pairings = [one(test) for test in dictionary]
    best = int(np.argmax(np.abs(pairings)))
    sup_pairing = abs(pairings[best])
    lower = 0.5 * sup_pairing
    margin = energy - lower
    return EnergyBoundReport(
        energy=energy,
        lower_bound=lower,
        sup_pairing=sup_pairing,
        sup_test_name=dictionary[best].name,
        margin=margin,
        ok=bool(margin >= -tol * max(1.0, abs(energy))),
        tests_evaluated=len(dictionary),
    )


# ---------------------------------------------------------------------------
# combined JSON report
# ---------------------------------------------------------------------------


def jacobian_report(field: BoundaryField, extension, phi, *,
                    n_r: int = 24, n_hr: int = 24, n_ht: int = 48,
                    n_s: int = 48, surface_n_hr: int = 48,
                    surface_n_ht: int = 96) -> dict:
    """JSON-ready summary: both pairing routes for one test function, their
    gap, the sharp unit-degree bound (when the total degree is one), and
    the winning dictionary test for the energy bound."""
    pv = pairing_volume(extension, phi, field.atoms, n_r=n_r, n_hr=n_hr,
                        n_ht=n_ht, n_s=n_s)
    ps = pairing_surface(field, None, phi, n_hr=surface_n_hr,
                         n_ht=surface_n_ht)
    bcl = (float(bcl_lower_bound(field.atoms))
           if field.atoms.total_degree == 1 else None)
    check = energy_lower_bound_check(extension, field.atoms, n_r=n_r,
                                     n_hr=n_hr, n_ht=n_ht, n_s=n_s)
    return {
        "pairing_volume": pv,
        "pairing_surface": ps,
        "abs_gap": abs(pv - ps),
        "bcl_bound": bcl,
        "sup_test_name": check.sup_test_name,
    }
