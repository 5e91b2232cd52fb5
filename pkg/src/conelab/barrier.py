"""Green's-function barriers on deformed cones.

Elementary barriers are truncated multiples of the radial Green's function
rho^{-(n-2)}; conformally deforming by phi+ = mu * green * chi + 1 pushes
area minimizers off the tip.  The module measures the truncation penalty,
the deflection radius Theta_mu and its scaling law, superposes elementary
barriers along an axis Riemann--Stieltjes style, and runs tube
mean-curvature checks on the superposition.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy.optimize import brentq, minimize_scalar
from scipy.special import gamma as gamma_fn

from .cones import DeformedCone, RadialProfile
from .errors import (
    DomainError,
    NoBarrierError,
    ParameterError,
    ResampleError,
    SingularPointError,
)
from .grids import conformal_shape_shift
from .jets import Jet, jet_power
from .perron import CutoffSpec

#: default sample band for scal and residual checks (deformed distance)
_BAND = (1e-3, 10.0)


# ---------------------------------------------------------------------------
# Green's function and its harmonicity on deformed cones
# ---------------------------------------------------------------------------

def green(n, rho):
    """Radial Green's function rho^{-(n-2)} of the deformed-cone Laplacian."""
    rho = np.asarray(rho, dtype=float)
    if np.any(rho <= 0):
        raise DomainError("deformed distance must be positive")
    return rho ** -(n - 2.0)


def green_laplacian_residual(d: DeformedCone, step=None, samples=200):
    """Sup of the relative residual |Delta green| on [0.1, 10].

    The radial Laplacian of the deformed cone is f'' + (n-1)/rho f', for
    which green is exactly harmonic.  With ``step`` set, derivatives come
    from second-order central stencils instead of the analytic jet, so the
    returned residual measures the stencil error (O(step^2))."""
    n = d.base.n
    rho = np.geomspace(0.1, 10.0, samples)
    if step is None:
        j = jet_power(rho, -(n - 2.0))
        d1, d2 = j.d1, j.d2
    else:
        h = float(step)
        f = lambda x: x ** -(n - 2.0)
        d1 = (f(rho + h) - f(rho - h)) / (2 * h)
        d2 = (f(rho + h) - 2 * f(rho) + f(rho - h)) / h**2
    lap = d2 + (n - 1.0) / rho * d1
    scale = (n - 1.0) * (n - 2.0) * rho ** -float(n)  # size of either term
    return float(np.max(np.abs(lap) / scale))


# ---------------------------------------------------------------------------
# elementary barriers
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BarrierSpec:
    """Truncated elementary barrier phi+ = mu * green * chi(rho - 1) + 1.

    The cutoff acts on the shell rho in [1, 2]; inside B_1 the profile is
    the exact Green multiple plus one, outside B_2 it is constant 1."""

    deformed: DeformedCone
    mu: float
    cutoff: CutoffSpec

    def __post_init__(self):
        if self.mu < 0:
            raise ParameterError("barrier weight mu must be >= 0")

    @property
    def n(self):
        return self.deformed.base.n

    def jet(self, rho):
        """Piecewise-analytic 2-jet of phi+ (one-sided at the shell edges)."""
        rho = np.asarray(rho, dtype=float)
        if np.any(rho <= 0):
            raise DomainError("deformed distance must be positive")
        g = jet_power(rho, -(self.n - 2.0))
        # clamping the cutoff argument to 0 below the shell freezes chi at 1
        # with zero derivatives, reproducing the exact piecewise definition
        t = np.clip(rho - 1.0, 0.0, None)
        inside = rho < 1.0
        targ = Jet(t, np.where(inside, 0.0, 1.0), np.zeros_like(t))
        chi_outer = self.cutoff.jet(targ.f)
        chi = Jet(chi_outer.f, chi_outer.d1 * targ.d1, chi_outer.d2 * targ.d1**2)
        return g * chi * self.mu + 1.0


def truncate(b: BarrierSpec, rho_range=(1e-3, 10.0), nodes=4000):
    """phi+_mu as a RadialProfile together with its truncation-penalty report.

    The penalty is the sup of |Delta phi+| over the shell, which is exactly
    linear in mu; the report also states the scal deficit the transformation
    law attributes to it, in the scale-free form coupling * rho^2 |Delta u|/u.
    """
    n = b.n
    rho = np.geomspace(rho_range[0], rho_range[1], nodes)
    j = b.jet(rho)
    prof = RadialProfile(rho, j.f, tag="conformal-factor", jet_fn=b.jet)

    shell = np.linspace(1.0 + 1e-9, 2.0 - 1e-9, 2000)
    js = b.jet(shell)
    lap = js.d2 + (n - 1.0) / shell * js.d1
    sup_pen = float(np.max(np.abs(lap)))
    coupling = 4.0 * (n - 1.0) / (n - 2.0)
    deficit = float(np.max(coupling * shell**2 * np.abs(lap) / js.f))
    report = {
        "sup_penalty": sup_pen,
        "penalty_per_mu": sup_pen / b.mu if b.mu > 0 else 0.0,
        "scal_deficit": deficit,
        "shell": (1.0, 2.0),
    }
    return prof, report


def scal_quantity(b: BarrierSpec, rho):
    """Scale-free scal of the barrier-deformed metric.

    In the stretched radial gauge rho_hat = rho * u^{2/(n-2)} (the distance
    scale of the new metric), scal(hat g) * rho_hat^2 equals
    (scal - coupling * Delta u / u) * rho^2 with everything computed in the
    undeformed gauge; positivity thresholds compare against iota_H/2."""
    j = b.jet(rho)
    n = b.n
    lap = j.d2 + (n - 1.0) / np.asarray(rho, dtype=float) * j.d1
    coupling = 4.0 * (n - 1.0) / (n - 2.0)
    return b.deformed.scal_rho2() - coupling * np.asarray(rho) ** 2 * lap / j.f


def mu_h(d: DeformedCone, cutoff: CutoffSpec, band=_BAND, samples=2000, tol=1e-10):
    """Largest mu keeping scal(hat g) >= iota_H / (2 rho_hat^2) on the band,
    found by bisection (the threshold constants are not given in closed
    form anywhere; this makes the quantifier executable)."""
    iota = d.scal_rho2()
    if iota <= 0:
        raise NoBarrierError("deformed cone must have positive scal for a barrier")
    rho = np.geomspace(band[0], band[1], samples)

    def ok(mu):
        if mu == 0:
            return True
        q = scal_quantity(BarrierSpec(deformed=d, mu=mu, cutoff=cutoff), rho)
        return bool(np.all(q >= iota / 2.0))

    hi = 1.0
    tries = 0
    while ok(hi):
        hi *= 2.0
        tries += 1
        if tries > 60:
            return hi
    lo = 0.0
    while hi - lo > tol * max(hi, 1.0):
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# obstacle reduction and deflection radius
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ObstacleProblem:
    """Radial reduction of the two-obstacle area problem: minimize the area
    profile over sphere radii between the inner and outer obstacle."""

    inner: float
    outer: float
    area: object  # callable rho -> A(rho) > 0

    def __post_init__(self):
        if not (0 < self.inner < self.outer):
            raise DomainError("need 0 < inner < outer")
        probes = np.geomspace(self.inner, self.outer, 64)
        if np.any(np.asarray([self.area(p) for p in probes]) <= 0):
            raise DomainError("area profile must be positive")

    def minimizer_radius(self, xatol=1e-10):
        res = minimize_scalar(
            self.area, bounds=(self.inner, self.outer), method="bounded",
            options={"xatol": xatol},
        )
        return float(res.x)


def area_profile(b: BarrierSpec, rho):
    """A(rho) = (phi+)^{2(n-1)/(n-2)} rho^{n-1} vol(link) for the deformed
    cone's link."""
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(rho_arr <= 0):
        raise DomainError("rho must be positive")
    n = b.n
    vol = b.deformed.base.link_volume * b.deformed.slope ** (n - 1)
    u = b.jet(rho_arr).f
    return u ** (2.0 * (n - 1.0) / (n - 2.0)) * rho_arr ** (n - 1.0) * vol


def sphere_trace(b: BarrierSpec, rho):
    """Trace of the conformally shifted second form of the distance sphere
    S_rho (radial normal convention matching conformal_shape_shift: the
    plain cone gives -(n-1)/rho, the barrier side +(n-1)/rho)."""
    n = b.n
    j = b.jet(np.array([float(rho)]))
    a_form = -(1.0 / float(rho)) * np.eye(n - 1)
    normal = np.zeros(n)
    normal[0] = 1.0
    grad_u = np.zeros(n)
    grad_u[0] = float(j.d1[0])
    shifted = conformal_shape_shift(
        a_form, np.eye(n - 1), float(j.f[0]), grad_u, normal, n
    )
    return float(np.trace(shifted))


def deflection_radius(b: BarrierSpec, bracket=(1e-6, 10.0)):
    """Smallest rho where the inward mean curvature of S_rho flips from
    positive (barrier side) to negative; agrees with the stationary radius
    of the area profile."""
    if b.mu <= 0:
        raise NoBarrierError("deflection radius needs mu > 0")
    lo, hi = bracket
    f_lo = sphere_trace(b, lo)
    if f_lo <= 0:
        raise NoBarrierError(f"no barrier side at rho = {lo}")
    # walk a geometric ladder to the first sign change
    ladder = np.geomspace(lo, hi, 400)
    vals = [sphere_trace(b, r) for r in ladder]
    idx = next((i for i in range(1, len(vals)) if vals[i - 1] > 0 >= vals[i]), None)
    if idx is None:
        raise NoBarrierError(f"no sign change of the sphere trace on {bracket}")
    return float(brentq(lambda r: sphere_trace(b, r), ladder[idx - 1], ladder[idx], xtol=1e-14))


# ---------------------------------------------------------------------------
# line barriers on the cylinder link x R
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LinePoint:
    """An anchor direction on the round S^{n-1} with weight and exponent shift."""

    direction: tuple
    weight: float
    beta: float = 0.0

    def unit(self):
        v = np.asarray(self.direction, dtype=float)
        norm = np.linalg.norm(v)
        if norm == 0:
            raise DomainError("anchor direction must be nonzero")
        return v / norm


def line_exponent(n, beta):
    """Shifted codimension-(n-1) decay exponent n-3-2 beta/(n+beta-2)."""
    denom = n + beta - 2.0
    if denom <= 0:
        raise ParameterError("beta too negative for the exponent shift")
    return n - 3.0 - 2.0 * beta / denom


@dataclass(frozen=True)
class LineBarrierSpec:
    """Axis-anchored barrier data: anchor points with weights, exponent
    shifts, and the Riemann--Stieltjes discretization level."""

    n: int
    points: tuple
    level: int = 64
    weight_cap: float = 10.0

    def __post_init__(self):
        if self.n < 5:
            raise DomainError("ambient dimension must be >= 5")
        if self.level < 1:
            raise ParameterError("discretization level must be >= 1")
        if any(p.weight <= 0 for p in self.points):
            raise ParameterError("weights must be positive")
        total = sum(p.weight for p in self.points)
        if total > self.weight_cap:
            raise ParameterError(
                f"total weight {total} exceeds the cap {self.weight_cap}"
            )

    @property
    def total_weight(self):
        return sum(p.weight for p in self.points)


def sphere_distance(omega, p):
    """Geodesic distance on the round unit sphere between unit vectors."""
    return float(np.arccos(np.clip(np.dot(omega, p), -1.0, 1.0)))


def line_barrier(ls: LineBarrierSpec, x):
    """The anchored sum of shifted-exponent line Green's functions plus 1.

    x = (omega, t) on S^{n-1} x R; the distance to an anchored axis {p} x R
    is the sphere distance from omega to p (independent of t)."""
    omega, _t = x
    omega = np.asarray(omega, dtype=float)
    total = 1.0
    for pt in ls.points:
        dist = sphere_distance(omega, pt.unit())
        if dist < 1e-9:
            raise SingularPointError("evaluation point lies on an anchored axis")
        total += pt.weight / dist ** line_exponent(ls.n, pt.beta)
    return total


def _axis_kernel_constant(e_line):
    """c(e) = integral (1+s^2)^{-(e+1)/2} ds, normalizing point kernels so the
    full-axis superposition reproduces the d^{-e} line kernel."""
    e_pt = e_line + 1.0
    return math.sqrt(math.pi) * gamma_fn((e_pt - 1.0) / 2.0) / gamma_fn(e_pt / 2.0)


@dataclass(frozen=True)
class Superposition:
    """Left-endpoint Riemann--Stieltjes sum of elementary point barriers
    anchored along {p} x segment."""

    spec: LineBarrierSpec
    segment: tuple = (0.0, 1.0)

    def stations(self):
        a, b_end = self.segment
        l = self.spec.level
        count = max(1, int(round((b_end - a) * l)))
        return a + np.arange(count) / l

    def __call__(self, omega, t):
        omega = np.asarray(omega, dtype=float)
        t = float(t)
        ts = self.stations()
        total = 1.0
        for pt in self.spec.points:
            dist = sphere_distance(omega, pt.unit())
            if dist < 1e-9:
                raise SingularPointError("evaluation point lies on an anchored axis")
            e_line = line_exponent(self.spec.n, pt.beta)
            cn = _axis_kernel_constant(e_line)
            kern = (dist**2 + (t - ts) ** 2) ** (-(e_line + 1.0) / 2.0)
            total += pt.weight / (self.spec.level * cn) * float(np.sum(kern))
        return total

    def segment_limit(self, omega, t):
        """Exact l -> infinity limit: quadrature of the same truncated kernel
        (independent oracle for the Riemann-sum convergence order)."""
        from scipy.integrate import quad

        omega = np.asarray(omega, dtype=float)
        total = 1.0
        for pt in self.spec.points:
            dist = sphere_distance(omega, pt.unit())
            e_line = line_exponent(self.spec.n, pt.beta)
            cn = _axis_kernel_constant(e_line)
            val, _ = quad(
                lambda s: (dist**2 + (t - s) ** 2) ** (-(e_line + 1.0) / 2.0),
                self.segment[0],
                self.segment[1],
                epsabs=1e-13,
                epsrel=1e-13,
            )
            total += pt.weight * val / cn
        return total


def stieltjes_superpose(ls: LineBarrierSpec, segment=(0.0, 1.0)) -> Superposition:
    if not segment[0] < segment[1]:
        raise DomainError("segment must be nondegenerate")
    return Superposition(spec=ls, segment=segment)


# ---------------------------------------------------------------------------
# tube mean-curvature checks
# ---------------------------------------------------------------------------

def tube_barrier_check(
    superposition: Superposition,
    tube_radius,
    axial_samples=64,
    transverse_samples=64,
    seed=0,
    fd_step=1e-5,
    _refined=False,
):
    """Check that the conformally deformed tube around the first anchored
    axis has strictly positive inward mean curvature at every sample.

    Returns (ok, margin) with margin the minimal sampled trace.  Samples sit
    on 64 axial x 64 transverse stations (refined x2 once if the check
    fails, per the resolution policy); directions hitting another anchored
    axis raise a resample error."""
    ls = superposition.spec
    if not ls.points:
        raise DomainError("superposition needs at least one anchor")
    rho = float(tube_radius)
    if not (0 < rho < np.pi / 2):
        raise DomainError("tube radius must lie in (0, pi/2)")
    n = ls.n
    p = ls.points[0].unit()

    rng = np.random.default_rng(seed)
    basis = _orthonormal_complement(p)
    a0, b0 = superposition.segment
    t_vals = a0 + (np.arange(axial_samples) + 0.5) / axial_samples * (b0 - a0)
    coupling_half = 2.0 * (n - 1.0) / (n - 2.0)

    margin = np.inf
    for _ in range(transverse_samples):
        coeff = rng.normal(size=n - 1)
        v = basis.T @ (coeff / np.linalg.norm(coeff))
        omega = lambda r: np.cos(r) * p + np.sin(r) * v
        for other in ls.points[1:]:
            if sphere_distance(omega(rho), other.unit()) < 10 * fd_step:
                raise ResampleError("transverse sample hit another anchored axis")
        for t in t_vals:
            u0 = superposition(omega(rho), t)
            up = superposition(omega(rho + fd_step), t)
            um = superposition(omega(rho - fd_step), t)
            du = (up - um) / (2 * fd_step)
            trace = -(n - 2.0) / np.tan(rho) + coupling_half * (-du) / u0
            margin = min(margin, trace)

    ok = margin > 0
    if not ok and not _refined:
        return tube_barrier_check(
            superposition,
            tube_radius,
            axial_samples=2 * axial_samples,
            transverse_samples=2 * transverse_samples,
            seed=seed,
            fd_step=fd_step,
            _refined=True,
        )
    return ok, float(margin)


def _orthonormal_complement(p):
    """Rows span the orthogonal complement of the unit vector p."""
    n = p.size
    mat = np.eye(n) - np.outer(p, p)
    q, r = np.linalg.qr(mat)
    cols = np.where(np.abs(np.diag(r)) > 1e-10)[0]
    return q[:, cols].T


# ---------------------------------------------------------------------------
# dimension-shift margin
# ---------------------------------------------------------------------------

def conformal_coupling_fraction(n):
    return Fraction(n - 2, 4 * (n - 1))


def dimshift_margin_exact(n):
    """kappa_n - kappa_{n-1} as an exact rational; equals 1/(4(n-1)(n-2))."""
    if n < 4:
        raise DomainError("need n >= 4 for the dimension shift")
    return conformal_coupling_fraction(n) - conformal_coupling_fraction(n - 1)


def dimshift_scal_sign(c_value, n, a=1.0):
    """Sign report for dropping the radial dimension in the link equation.

    The coupling gap kappa_n - kappa_{n-1} is exactly 1/(4(n-1)(n-2)); for
    the constant link mode the residual of the lower-dimensional operator
    shifts by exactly -(kappa_n - kappa_{n-1}) a^2 c, so positive c means
    the (n-1)-dimensional residual moves strictly negative (the inequality
    the barrier anchoring needs)."""
    gap = dimshift_margin_exact(n)
    margin = float(gap) * a**2 * float(c_value)
    return {
        "n": n,
        "kappa_n": conformal_coupling_fraction(n),
        "kappa_prev": conformal_coupling_fraction(n - 1),
        "margin_coefficient": gap,
        "margin": margin,
        "residual_shift": -margin,
        "sign": "negative" if margin > 0 else "nonnegative",
    }


def dimshift_table(n_range=range(5, 13)):
    """Exact margin table; the n^2-scaled margins approach 1/4 from below."""
    return [
        {
            "n": n,
            "margin_coefficient": dimshift_margin_exact(n),
            "n2_scaled": dimshift_margin_exact(n) * n * n,
        }
        for n in n_range
    ]
