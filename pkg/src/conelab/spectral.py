"""Weighted conformal-Laplacian eigenvalues on catalog cones.

The radially reduced problem on an annulus [r_in, r_out] is

    -(r^{n-1} u')' + kappa * scal * r^{n-1} u = lambda * weight * r^{n-1} u

with weight(r) = (eps^2 + p + q)/r^2.  In the logarithmic variable
s = ln r and with v = r^{(n-2)/2} u this becomes the constant-coefficient
Schroedinger form

    -v'' + [ (n-2)^2/4 - kappa (p+q) ] v = lambda (eps^2 + p + q) v,

which the finite-difference solver discretizes; an independent shooting
integrator on the original r-equation serves as cross-check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.integrate import solve_ivp
from scipy.linalg import eigh_tridiagonal
from scipy.optimize import brentq

from .cones import ConeSpec, RadialProfile, cone_scal, second_form_norm2
from .errors import ConvergenceError, DomainError, OutOfBandError, SolverError

#: nodes per finite-difference eigensolve
_NODES = 2000


@dataclass(frozen=True)
class WeightedProblem:
    """Weighted eigenproblem data on an annulus."""

    cone: ConeSpec
    eps: float
    annulus: tuple

    def __post_init__(self):
        r_in, r_out = self.annulus
        if not (0 < r_in < r_out):
            raise DomainError("need 0 < r_in < r_out")
        if self.eps < 0:
            raise DomainError("eps must be >= 0")

    @property
    def kappa(self):
        return self.cone.kappa


@dataclass(frozen=True)
class EigenResult:
    lam: float
    profile: RadialProfile
    m: int

    def __post_init__(self):
        interior = self.profile.values[1:-1]
        if interior.size and interior.min() <= 0:
            raise DomainError("first eigenfunction must be interior-positive")


def weight(c: ConeSpec, eps, r):
    """Smoothed weight (eps^2 + p + q)/r^2 (distance to the tip is r)."""
    r = np.asarray(r, dtype=float)
    if np.any(r <= 0):
        raise DomainError("radius must be positive")
    return (eps**2 + c.p + c.q) / r**2


def rayleigh(c: ConeSpec, f: RadialProfile, eps):
    """Weighted Rayleigh quotient of a compactly supported radial profile."""
    r, v = f.grid, f.values
    if abs(v[0]) > 1e-13 * max(1.0, np.abs(v).max()) or abs(v[-1]) > 1e-13 * max(
        1.0, np.abs(v).max()
    ):
        raise DomainError("test profile must vanish at both annulus ends")
    n = c.n
    dv = np.gradient(v, r, edge_order=1)
    num = np.trapezoid(dv**2 * r ** (n - 1), r) + c.kappa * np.trapezoid(
        cone_scal(c, r) * v**2 * r ** (n - 1), r
    )
    den = np.trapezoid(weight(c, eps, r) * v**2 * r ** (n - 1), r)
    if den <= 1e-300:
        raise DomainError("degenerate test function: zero weighted norm")
    return num / den


# ---------------------------------------------------------------------------
# Dirichlet eigenproblem on exhausting annuli
# ---------------------------------------------------------------------------

def exhaustion_annulus(w: WeightedProblem, m):
    """K_m = [r_out * 4^{-m}, r_out]: the geometric exhaustion schedule."""
    if m < 1:
        raise DomainError("exhaustion index must be >= 1")
    r_out = w.annulus[1]
    return (r_out * 4.0 ** (-m), r_out)


def _fd_smallest(w: WeightedProblem, r_in, r_out, nodes=_NODES):
    """Smallest Dirichlet eigenvalue/eigenfunction via the log-variable FD."""
    n = w.cone.n
    s = np.linspace(np.log(r_in), np.log(r_out), nodes)
    h = s[1] - s[0]
    pot = (n - 2.0) ** 2 / 4.0 - w.kappa * (w.cone.p + w.cone.q)
    wgt = w.eps**2 + w.cone.p + w.cone.q
    diag = 2.0 / h**2 + pot
    off = -np.ones(nodes - 3) / h**2
    vals, vecs = eigh_tridiagonal(
        np.full(nodes - 2, diag), off, select="i", select_range=(0, 0)
    )
    lam = vals[0] / wgt
    v = np.zeros(nodes)
    v[1:-1] = vecs[:, 0]
    if v[1:-1].sum() < 0:
        v = -v
    r = np.exp(s)
    u = v * r ** (-(n - 2.0) / 2.0)
    return lam, r, u


def _shooting_eigen(w: WeightedProblem, r_in, r_out, bracket_scale=4.0):
    """Independent eigenvalue solver: shoot the radial ODE in log coords and
    root-find the outer Dirichlet value in lambda."""
    n = w.cone.n
    pot = (n - 2.0) ** 2 / 4.0 - w.kappa * (w.cone.p + w.cone.q)
    wgt = w.eps**2 + w.cone.p + w.cone.q
    s0, s1 = np.log(r_in), np.log(r_out)

    def end_value(lam):
        def rhs(_, y):
            return [y[1], (pot - lam * wgt) * y[0]]

        sol = solve_ivp(
            rhs, (s0, s1), [0.0, 1.0], rtol=1e-12, atol=1e-14, dense_output=False
        )
        if not sol.success:
            raise SolverError(f"shooting integration failed: {sol.message}")
        return sol.y[0, -1]

    lo = pot / wgt  # at/below the oscillation threshold: end value positive
    step = (np.pi / (s1 - s0)) ** 2 / (2.0 * wgt)  # < gap to the first eigenvalue
    flo = end_value(lo)
    hi, fhi = lo, flo
    tries = 0
    while flo * fhi > 0:  # scan upward to the *first* sign change
        lo, flo = hi, fhi
        hi = hi + step
        fhi = end_value(hi)
        tries += 1
        if tries > int(8 * bracket_scale):
            raise SolverError("shooting bracket did not converge", (lo, hi, flo, fhi))
    return brentq(end_value, lo, hi, xtol=1e-13)


def dirichlet_eigen(w: WeightedProblem, m) -> EigenResult:
    """First Dirichlet eigenvalue/eigenfunction on the m-th exhaustion annulus,
    normalized by the weighted L^2 mass on the reference band [r_out/2, r_out]."""
    r_in, r_out = exhaustion_annulus(w, m)
    lam, r, u = _fd_smallest(w, r_in, r_out)
    band = (r >= r_out / 2.0) & (r <= r_out)
    n = w.cone.n
    mass = np.trapezoid(weight(w.cone, w.eps, r[band]) * u[band] ** 2 * r[band] ** (n - 1), r[band])
    u = u / np.sqrt(mass)
    return EigenResult(lam=lam, profile=RadialProfile(r, u, tag="eigenfunction"), m=m)


# ---------------------------------------------------------------------------
# the limit eigenvalue lambda0
# ---------------------------------------------------------------------------

def lambda0_closed_form(c: ConeSpec):
    """Catalog identity (n-2)(n-3)/(4(n-1)), valid because the link weight is
    constant so the radial Hardy reduction is exact."""
    n = c.n
    return (n - 2.0) * (n - 3.0) / (4.0 * (n - 1.0))


@dataclass(frozen=True)
class Lambda0Result:
    cone: ConeSpec
    eps: float
    schedule: tuple
    lambda_sequence: tuple
    lambda0: float
    error_estimate: float

    def to_dict(self):
        return {
            "cone": [self.cone.p, self.cone.q],
            "eps": self.eps,
            "schedule": list(self.schedule),
            "lambda_sequence": list(self.lambda_sequence),
            "lambda0": self.lambda0,
            "error_estimate": self.error_estimate,
        }


def lambda0_detailed(c: ConeSpec, r_out=1.0, m_max=6, eps=0.0) -> Lambda0Result:
    """Exhaustion limit with Richardson extrapolation in 1/m^2.

    The exhaustion eigenvalues obey lambda_m = lambda_inf + const/m^2 for the
    geometric schedule, so pairwise extrapolants converge fast; the error
    estimate is the gap between the last two.
    """
    w = WeightedProblem(cone=c, eps=eps, annulus=(r_out * 4.0 ** (-m_max), r_out))
    ms = list(range(1, m_max + 1))
    lams = [dirichlet_eigen(w, m).lam for m in ms]
    if np.any(np.diff(lams) > 1e-12):
        raise ConvergenceError("exhaustion eigenvalues not non-increasing", lams)
    extr = [
        (ms[i] ** 2 * lams[i] - ms[i - 1] ** 2 * lams[i - 1])
        / (ms[i] ** 2 - ms[i - 1] ** 2)
        for i in range(1, len(ms))
    ]
    err = abs(extr[-1] - extr[-2])
    return Lambda0Result(
        cone=c,
        eps=eps,
        schedule=tuple(ms),
        lambda_sequence=tuple(lams),
        lambda0=float(extr[-1]),
        error_estimate=float(err),
    )


def lambda0(c: ConeSpec, r_out=1.0, m_max=6):
    """The weighted limit eigenvalue at eps = 0.

    On an exact cone the eps-smoothed weight is the constant multiple
    (eps^2 + p + q)/(p + q) of the eps = 0 weight, so positive eps merely
    rescales the limit; the reference value is the eps = 0 one."""
    return lambda0_detailed(c, r_out=r_out, m_max=m_max, eps=0.0).lambda0


def eigenfunction_below(c: ConeSpec, lam, annulus=(0.01, 1.0), nodes=2000):
    """Positive radial solution r^alpha of -Delta u + kappa scal u = lam |A|^2 u
    for lam below lambda0, with exact-jet residual data attached."""
    lam0 = lambda0_closed_form(c)
    if not (0.125 <= lam < lam0):
        raise OutOfBandError(f"lambda must lie in [1/8, {lam0})")
    from .perron import indicial_exponent  # local import avoids a module cycle

    alpha, _ = indicial_exponent(c, lam)
    r = np.geomspace(annulus[0], annulus[1], nodes)

    from .jets import jet_power

    return RadialProfile(
        r, r**alpha, tag="eigenfunction", jet_fn=lambda x: jet_power(x, alpha)
    )


def radial_operator_residual(c: ConeSpec, lam, profile: RadialProfile):
    """Scale-invariant residual |r^2(-Delta u + kappa scal u - lam |A|^2 u)|/|u|.

    Uses the profile's analytic jet when present, else 4th-order stencils on
    the (assumed geometric) grid so that the residual measures the equation,
    not the probe.
    """
    r = profile.grid
    n = c.n
    if profile.jet_fn is not None:
        j = profile.jet_fn(r)
        u, du, d2u = j.f, j.d1, j.d2
    else:
        s = np.log(r)
        h = np.diff(s)
        if not np.allclose(h, h[0], rtol=1e-8):
            raise DomainError("stencil residual needs a geometric grid")
        h = h[0]
        v = profile.values
        dv = np.full_like(v, np.nan)
        d2v = np.full_like(v, np.nan)
        dv[2:-2] = (-v[4:] + 8 * v[3:-1] - 8 * v[1:-3] + v[:-4]) / (12 * h)
        d2v[2:-2] = (
            -v[4:] + 16 * v[3:-1] - 30 * v[2:-2] + 16 * v[1:-3] - v[:-4]
        ) / (12 * h**2)
        u = v
        du = dv / r
        d2u = (d2v - dv) / r**2
    lap = d2u + (n - 1.0) / r * du
    res = -lap + c.kappa * cone_scal(c, r) * u - lam * second_form_norm2(c, r) * u
    scale = np.abs(u) + 1e-300
    vals = np.abs(res) * r**2 / scale
    return float(np.nanmax(vals))
