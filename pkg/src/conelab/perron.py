"""Perron machinery on catalog cones: local solvability, supersolution
lifts, minimal positive solutions, indicial exponents and crease smoothing.

The radial reduction of the operator is

    (LO)  u'' + (n-1)/r u' + q(r) u = 0,   q(r) = (kappa + lambda)(p+q)/r^2,

an Euler equation whose exact solutions r^{alpha_+}, r^{alpha_-} provide
closed-form oracles for every construction below.  All boundary-value
solves work in the logarithmic variable s = ln r, where (LO) becomes a
constant-coefficient equation, discretized at 2nd order and Richardson
extrapolated.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh_tridiagonal, solve_banded

from .cones import ConeSpec, RadialProfile
from .errors import (
    BallTooLargeError,
    ComplexIndicialError,
    DomainError,
    IterationLimitError,
    NoCreaseError,
    NotSupersolutionError,
    OutOfBandError,
    ParameterError,
    ResolutionError,
)
from .jets import Jet, jet_compose, jet_power
from .spectral import lambda0_closed_form, radial_operator_residual


# ---------------------------------------------------------------------------
# indicial exponents
# ---------------------------------------------------------------------------

def indicial_lambda_max(c: ConeSpec):
    """Largest lambda with real indicial roots: (n-2)^2/(4(p+q)) - kappa.

    On catalog cones this threshold coincides with the weighted limit
    eigenvalue (the Hardy-critical coupling)."""
    n = c.n
    return (n - 2.0) ** 2 / (4.0 * (c.p + c.q)) - c.kappa


def indicial_exponent(c: ConeSpec, lam):
    """Root alpha in (-(n-2)/2, 0] of alpha^2 + (n-2) alpha + (kappa+lam)(p+q) = 0.

    Returns (alpha, conjugate_root).  lambda at the discriminant threshold
    gives the double root -(n-2)/2."""
    n = c.n
    if lam <= 0:
        raise OutOfBandError("lambda must be positive in the working band")
    disc = (n - 2.0) ** 2 / 4.0 - (c.kappa + lam) * (c.p + c.q)
    if disc < 0:
        raise ComplexIndicialError(
            f"complex indicial roots for lambda = {lam}",
            lambda_max=indicial_lambda_max(c),
        )
    root = math.sqrt(disc)
    half = (n - 2.0) / 2.0
    return -half + root, -half - root


# ---------------------------------------------------------------------------
# problems and supersolution sets
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerronProblem:
    """(LO) on an annulus with Dirichlet data at the outer end.

    The inner radius truncates the cone tip; minimal solutions carry the
    indicial Robin condition r u'/u = alpha_+ there, the finite surrogate
    of continuation to the tip with the decaying exponent.
    """

    cone: ConeSpec
    lam: float
    domain: tuple
    boundary_value: float
    nodes: int = 2000

    def __post_init__(self):
        r_in, r_out = self.domain
        if not (0 < r_in < r_out):
            raise DomainError("need 0 < r_in < r_out")
        if self.boundary_value <= 0:
            raise DomainError("boundary value must be positive")
        if not (0.125 <= self.lam < lambda0_closed_form(self.cone)):
            raise OutOfBandError("lambda must lie in [1/8, lambda0)")

    @property
    def grid(self):
        return np.geomspace(self.domain[0], self.domain[1], self.nodes)

    @property
    def coupling(self):
        """(kappa + lambda)(p+q): coefficient of the 1/r^2 potential."""
        return (self.cone.kappa + self.lam) * (self.cone.p + self.cone.q)


@dataclass
class SupersolutionSet:
    """Container for verified supersolutions; closed under pointwise min."""

    problem: PerronProblem
    members: list = field(default_factory=list)

    def add(self, f: RadialProfile, check=True):
        if f.values[-1] < self.problem.boundary_value - 1e-12:
            raise DomainError("member must dominate the boundary value at r_out")
        if check:
            ok, witness = is_supersolution(self.problem, f)
            if not ok:
                raise NotSupersolutionError(f"rejected member: witness {witness}")
        self.members.append(f)

    def minimum(self) -> RadialProfile:
        """Pointwise minimum of the members on the problem grid (the class
        of supersolutions is closed under finite minima)."""
        if not self.members:
            raise DomainError("empty supersolution set")
        grid = self.problem.grid
        vals = np.min([m(grid) for m in self.members], axis=0)
        return RadialProfile(grid, vals, tag="supersolution")


# ---------------------------------------------------------------------------
# admissibility margin and local solves
# ---------------------------------------------------------------------------

_MARGIN_FACTOR = 1.1


def laplace_first_eigen(c: ConeSpec, r0, r1, nodes=400):
    """First Dirichlet eigenvalue of -Delta (radial part) on [r0, r1]."""
    n = c.n
    s = np.linspace(np.log(r0), np.log(r1), nodes)
    h = s[1] - s[0]
    # -v'' + ((n-2)^2/4) v = mu e^{2s} v after u = r^{-(n-2)/2} v
    diag = 2.0 / h**2 + (n - 2.0) ** 2 / 4.0
    b = np.exp(2.0 * s[1:-1])
    scale = 1.0 / np.sqrt(b)
    d = np.full(nodes - 2, diag) * scale**2
    e = -1.0 / h**2 * scale[:-1] * scale[1:]
    vals = eigh_tridiagonal(d, e, select="i", select_range=(0, 0))[0]
    return float(vals[0])


def margin_ratio(pp: PerronProblem, sub):
    """mu_1(-Delta on sub) / sup q: admissible iff >= 1.1."""
    r0, r1 = sub
    if not (pp.domain[0] <= r0 < r1 <= pp.domain[1] * (1 + 1e-12)):
        raise DomainError("sub-annulus not inside the problem domain")
    mu1 = laplace_first_eigen(pp.cone, r0, r1)
    sup_q = pp.coupling / r0**2
    return mu1 / sup_q


def _solve_window(pp: PerronProblem, r0, r1, bc_inner, bc_outer, nodes=1001):
    """Richardson-extrapolated FD solve of (LO) on [r0, r1] in log coords.

    bc_inner is ("dirichlet", value) or ("robin", alpha) with the Robin
    condition r u'/u = alpha; bc_outer is ("dirichlet", value).
    Returns (r_nodes, values) on the coarse grid.
    """

    def solve(npts):
        s = np.linspace(np.log(r0), np.log(r1), npts)
        h = s[1] - s[0]
        a = pp.coupling
        lower = 1.0 / h**2 - (pp.cone.n - 2.0) / (2.0 * h)
        upper = 1.0 / h**2 + (pp.cone.n - 2.0) / (2.0 * h)
        center = -2.0 / h**2 + a
        kind, val = bc_inner
        if kind == "dirichlet":
            ns = npts - 2
            ab = np.zeros((3, ns))
            ab[0, 1:] = upper
            ab[1, :] = center
            ab[2, :-1] = lower
            rhs = np.zeros(ns)
            rhs[0] -= lower * val
            rhs[-1] -= upper * bc_outer[1]
            u = np.empty(npts)
            u[0], u[-1] = val, bc_outer[1]
            u[1:-1] = solve_banded((1, 1), ab, rhs)
        elif kind == "robin":
            alpha = val
            ns = npts - 1  # unknowns u_0..u_{npts-2}
            ab = np.zeros((3, ns))
            ab[1, :] = center
            ab[0, 1:] = upper
            ab[2, :-1] = lower
            # ghost elimination at i = 0: u_{-1} = u_1 - 2 h alpha u_0
            ab[1, 0] = center - 2.0 * h * alpha * lower
            ab[0, 1] = upper + lower
            rhs = np.zeros(ns)
            rhs[-1] -= upper * bc_outer[1]
            u = np.empty(npts)
            u[-1] = bc_outer[1]
            u[:-1] = solve_banded((1, 1), ab, rhs)
        else:
            raise DomainError(f"unknown boundary condition {kind}")
        return u

    coarse = solve(nodes)
    fine = solve(2 * nodes - 1)
    u = (4.0 * fine[::2] - coarse) / 3.0
    r = np.geomspace(r0, r1, nodes)
    return r, u


def local_solve(pp: PerronProblem, sub, boundary, nodes=1001, enforce_margin=True):
    """Unique two-point solution of (LO) on the sub-annulus.

    The admissibility margin (first Laplace eigenvalue of the sub-annulus
    exceeding sup q by factor 1.1) certifies uniqueness; violating it
    raises BallTooLargeError and the caller must shrink the window.
    """
    r0, r1 = sub
    if enforce_margin:
        ratio = margin_ratio(pp, sub)
        if ratio < _MARGIN_FACTOR:
            raise BallTooLargeError(
                f"sub-annulus [{r0}, {r1}] margin {ratio:.3f} < {_MARGIN_FACTOR}"
            )
    r, u = _solve_window(pp, r0, r1, ("dirichlet", boundary[0]), ("dirichlet", boundary[1]), nodes)
    return RadialProfile(r, u, tag="solution")


# ---------------------------------------------------------------------------
# supersolutions, lifts, minimal solution
# ---------------------------------------------------------------------------

def _admissible_windows(pp: PerronProblem, levels=2):
    """Deterministic dyadic family of margin-admissible sub-annuli.

    Window ends are snapped to problem-grid nodes so lifts read boundary
    data exactly rather than through interpolation."""
    s0, s1 = np.log(pp.domain[0]), np.log(pp.domain[1])
    grid = pp.grid
    sg = np.log(grid)

    def snap(s):
        return float(grid[np.argmin(np.abs(sg - s))])

    windows = []
    width = math.log(2.0)
    for level in range(levels):
        w = width / 2.0**level
        step = w / 2.0
        a = s0
        while a < s1 - 1e-12:
            b = min(a + w, s1)
            if b - a > 0.2 * w:
                windows.append((snap(a), snap(b)))
            a += step
    return [win for win in windows if margin_ratio(pp, win) >= _MARGIN_FACTOR]


def is_supersolution(pp: PerronProblem, f: RadialProfile, rtol=1e-7):
    """Defining comparison test: on every admissible sub-annulus the local
    solution with f's end data must stay below f.

    Returns (True, None) or (False, witness) with the violating window and
    the maximal excess."""
    if np.any(f.values <= 0):
        bad = int(np.argmin(f.values))
        return False, {"window": None, "reason": "not positive", "index": bad}
    scale = float(np.abs(f.values).max())
    for r0, r1 in _admissible_windows(pp):
        sol = local_solve(pp, (r0, r1), (f(r0), f(r1)), enforce_margin=False)
        mask = (f.grid >= r0) & (f.grid <= r1)
        excess = np.max(sol(f.grid[mask]) - f.values[mask]) if mask.any() else -np.inf
        if excess > rtol * scale:
            return False, {"window": (r0, r1), "excess": float(excess)}
    return True, None


def lift(pp: PerronProblem, f: RadialProfile, sub, check=True):
    """Replace f on the sub-annulus by the local solution with f's end data.

    The result is pointwise <= f and is again a supersolution."""
    if check:
        ok, witness = is_supersolution(pp, f)
        if not ok:
            raise NotSupersolutionError(f"lift requires a supersolution: {witness}")
        ratio = margin_ratio(pp, sub)
        if ratio < _MARGIN_FACTOR:
            raise BallTooLargeError(f"margin {ratio:.3f} < {_MARGIN_FACTOR}")
    return _lift_raw(pp, f, sub)


def _lift_raw(pp: PerronProblem, f: RadialProfile, sub, inner_bc=None):
    r0, r1 = sub
    sol_bc_inner = inner_bc if inner_bc is not None else ("dirichlet", float(f(r0)))
    r, u = _solve_window(pp, r0, r1, sol_bc_inner, ("dirichlet", float(f(r1))))
    vals = f.values.copy()
    mask = (f.grid >= r0 * (1 - 1e-12)) & (f.grid <= r1 * (1 + 1e-12))
    local = CubicSpline(np.log(r), u)(np.log(f.grid[mask]))
    vals[mask] = np.minimum(vals[mask], local)
    return RadialProfile(f.grid, vals, tag=f.tag)


def default_seed(pp: PerronProblem) -> RadialProfile:
    """Strict supersolution b (r/r_out)^{-(n-2)/2} (the Hardy-critical power:
    its operator excess is lambda0 - lambda > 0)."""
    n = pp.cone.n
    beta = -(n - 2.0) / 2.0
    r_out = pp.domain[1]
    b = pp.boundary_value
    grid = pp.grid
    return RadialProfile(
        grid,
        b * (grid / r_out) ** beta,
        tag="supersolution",
        jet_fn=lambda x: jet_power(x, beta) * (b * r_out**-beta),
    )


@dataclass(frozen=True)
class PerronResult:
    profile: RadialProfile
    alpha: float
    c: float
    iterations: int
    residual: float
    minimality_checks: tuple

    def to_dict(self):
        return {
            "alpha": self.alpha,
            "c": self.c,
            "iterations": self.iterations,
            "residual": self.residual,
            "minimality_checks": list(self.minimality_checks),
        }


def perron_minimal_detailed(
    pp: PerronProblem,
    seeds=None,
    max_sweeps=400,
    decrement_tol=1e-10,
    check_seeds=True,
) -> PerronResult:
    """Iterated lifts over a dyadic sweep schedule, inner-to-outer.

    The innermost window carries the indicial Robin condition (the tip
    surrogate); sweeps stop when the sup-norm decrement drops below the
    tolerance.  A final global Robin--Dirichlet solve polishes the iterate
    (they must agree; the polish removes interface kinks that would
    pollute the high-order residual check).
    """
    alpha, _ = indicial_exponent(pp.cone, pp.lam)
    sset = SupersolutionSet(pp, [])
    for f in seeds if seeds is not None else [default_seed(pp)]:
        sset.add(f, check=check_seeds)

    w = sset.minimum()
    windows = sorted(_admissible_windows(pp), key=lambda ab: ab[0])
    if not windows:
        raise DomainError("no admissible sweep windows; domain too small")

    sweeps = 0
    while sweeps < max_sweeps:
        sweeps += 1
        prev = w.values.copy()
        for i, win in enumerate(windows):
            inner_bc = None
            if abs(win[0] - pp.domain[0]) < 1e-14 * pp.domain[0]:
                inner_bc = ("robin", alpha)
            w = _lift_raw(pp, w, win, inner_bc=inner_bc)
        dec = float(np.max(np.abs(prev - w.values)))
        if dec < decrement_tol:
            break
    else:
        raise IterationLimitError(
            f"perron sweeps did not converge in {max_sweeps} sweeps (last decrement {dec})"
        )

    r, u = _solve_window(
        pp,
        pp.domain[0],
        pp.domain[1],
        ("robin", alpha),
        ("dirichlet", pp.boundary_value),
        nodes=pp.nodes,
    )
    polish = RadialProfile(r, u, tag="solution")
    gap = float(np.max(np.abs(polish(w.grid) - w.values)))
    if gap > 1e-6 * pp.boundary_value * (pp.domain[0] / pp.domain[1]) ** alpha:
        raise IterationLimitError(f"sweep iterate and global solve disagree by {gap}")

    residual = radial_operator_residual(pp.cone, pp.lam, polish)
    checks = tuple(
        bool(np.all(polish(m.grid) <= m.values + 1e-9 * np.abs(m.values)))
        for m in sset.members
    )
    c_fit = pp.boundary_value / pp.domain[1] ** alpha
    return PerronResult(
        profile=polish,
        alpha=alpha,
        c=c_fit,
        iterations=sweeps,
        residual=residual,
        minimality_checks=checks,
    )


def perron_minimal(pp: PerronProblem, seeds=None, **kwargs) -> RadialProfile:
    return perron_minimal_detailed(pp, seeds=seeds, **kwargs).profile


# ---------------------------------------------------------------------------
# cutoff functions (Lemma-style ratio inequalities)
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class CutoffSpec:
    """chi with chi(0) = 1, chi = 0 on [1, inf), chi' < 0, chi'' > 0 and the
    two ratio inequalities chi'' >= -K chi' and chi'' >= K chi on (-1, 1).

    Construction: chi = exp(-(M t + d t/(1-t))) for t < 1, zero beyond; the
    extra linear rate M is fit so both ratio inequalities hold with margin.
    """

    K: float
    delta: float
    rate: float
    pole: float
    samples: tuple
    margins: dict

    def jet(self, t):
        t = np.asarray(t, dtype=float)
        below = t < 1.0
        ts = np.where(below, t, 0.0)
        one_m = 1.0 - ts
        psi = np.minimum(self.rate * ts + self.pole * ts / one_m, 700.0)
        dpsi = self.rate + self.pole / one_m**2
        d2psi = 2.0 * self.pole / one_m**3
        chi = np.exp(-psi)
        d1 = -dpsi * chi
        d2 = (dpsi**2 - d2psi) * chi
        zero = np.zeros_like(chi)
        return Jet(
            np.where(below, chi, zero),
            np.where(below, d1, zero),
            np.where(below, d2, zero),
        )


def make_cutoff(K, delta, n_samples=10000):
    """Construct and certify a CutoffSpec; raises ResolutionError if no
    admissible rate is found."""
    if K <= 0 or delta <= 0:
        raise ParameterError("K and delta must be positive")
    pole = 1.0
    rate = max(2.0 * K, 4.0)
    t = np.linspace(-1.0 + 1e-9, 1.0 - 1e-9, n_samples)
    one_m = 1.0 - t
    for _ in range(8):
        # chi = e^{-psi} > 0, so dividing the four inequalities by chi gives
        # equivalent conditions on psi alone, immune to underflow near t = 1
        dpsi = rate + pole / one_m**2
        d2psi = 2.0 * pole / one_m**3
        curv = dpsi**2 - d2psi  # = chi''/chi
        margins = {
            "chi_prime_negative": float(dpsi.min()),
            "chi_second_positive": float(curv.min()),
            "ratio_vs_slope": float((curv - K * dpsi).min()),
            "ratio_vs_value": float((curv - K).min()),
        }
        if min(margins.values()) > 0:
            spec = CutoffSpec(K=K, delta=delta, rate=rate, pole=pole, samples=(), margins={})
            sampled = spec.jet(np.linspace(-1.0, 1.0, 201))
            return CutoffSpec(
                K=K,
                delta=delta,
                rate=rate,
                pole=pole,
                samples=(sampled.f, sampled.d1, sampled.d2),
                margins=margins,
            )
        rate *= 2.0
    raise ResolutionError(f"no admissible cutoff rate for K = {K}")


# ---------------------------------------------------------------------------
# crease smoothing
# ---------------------------------------------------------------------------

def _quintic_step_jet(y):
    """C^2 smoothstep 6y^5 - 15y^4 + 10y^3 clamped to [0, 1]."""
    y = np.asarray(y, dtype=float)
    yc = np.clip(y, 0.0, 1.0)
    f = ((6.0 * yc - 15.0) * yc + 10.0) * yc**3
    d1 = 30.0 * yc**2 * (yc - 1.0) ** 2
    d2 = 60.0 * yc * (yc - 1.0) * (2.0 * yc - 1.0)
    inside = (y > 0.0) & (y < 1.0)
    zero = np.zeros_like(f)
    return Jet(f, np.where(inside, d1, zero), np.where(inside, d2, zero))


def operator_value_jet(c: ConeSpec, lam_unused, j: Jet, r):
    """-Delta f + kappa scal f evaluated from an analytic radial 2-jet."""
    n = c.n
    lap = j.d2 + (n - 1.0) / r * j.d1
    return -lap + c.kappa * (-(c.p + c.q) / r**2) * j.f


def crease_smooth(
    f1: RadialProfile,
    f2: RadialProfile,
    crossing,
    eta,
    K,
    cone: ConeSpec = None,
    return_report=False,
):
    """Blend two strict supersolutions crossing transversally at ``crossing``.

    f2 is the inner (tip-side) profile, f1 the outer one; both need
    analytic jets.  The blend subtracts eta * chi from each side with the
    cutoff width fixed by C^1 matching of the derivative gap, then merges
    with a C^2 convex step.  The result is positive, agrees with the
    respective side outside the window, and satisfies the strict operator
    inequality -Delta f + kappa scal f > 0 at every sample (margin
    reported)."""
    if f1.jet_fn is None or f2.jet_fn is None:
        raise DomainError("crease smoothing needs analytic jets on both profiles")
    if cone is None:
        raise DomainError("pass the cone providing scal for the operator check")
    rstar = float(crossing)
    j1s, j2s = f1.jet_fn(np.array([rstar])), f2.jet_fn(np.array([rstar]))
    v1, v2 = float(j1s.f[0]), float(j2s.f[0])
    if abs(v1 - v2) > 1e-8 * max(abs(v1), abs(v2)):
        raise DomainError(f"profiles do not cross at {rstar}: {v1} vs {v2}")
    # x1 = rstar - r points toward the tip; gap = d(f1-f2)/dx1 > 0 required
    gap = -(float(j1s.d1[0]) - float(j2s.d1[0]))
    if gap <= 0:
        raise NoCreaseError(f"normal-derivative gap {gap} <= 0")

    chi = make_cutoff(K, 1.0)
    psi0 = chi.rate + chi.pole  # = -chi'(0)
    delta = 2.0 * eta * psi0 / gap
    r_lo, r_hi = rstar - delta, rstar + delta
    if r_lo <= max(f1.grid[0], f2.grid[0]) or r_hi >= min(f1.grid[-1], f2.grid[-1]):
        raise ParameterError(
            f"smoothing window [{r_lo}, {r_hi}] exceeds the common domain; "
            "reduce eta or increase the gap"
        )

    grid = f1.grid[(f1.grid >= f2.grid[0]) & (f1.grid <= f2.grid[-1])]

    # The C^2 merge may evaluate each one-sided blend only a whisker past the
    # crease: chi grows like e^{rate |t|} for t < 0, so the merge halfwidth is
    # scaled down by the cutoff's logarithmic slope at 0.
    merge_half = delta / (4.0 * psi0)

    def chi_clamped(arg: Jet) -> Jet:
        # below t = -1 the merge weight is exactly 0 or 1; freeze the cutoff
        # argument there so its (irrelevant) values stay finite
        lo = arg.f < -1.0
        frozen = Jet(
            np.where(lo, -1.0, arg.f),
            np.where(lo, 0.0, arg.d1),
            np.where(lo, 0.0, arg.d2),
        )
        return jet_compose(chi.jet, frozen)

    def blend_jet(r):
        r = np.asarray(r, dtype=float)
        # x1 = rstar - r, so d/dr = -d/dx1: build jets directly in r
        x1_of_r = Jet(rstar - r, -np.ones_like(r), np.zeros_like(r))
        jf1, jf2 = f1.jet_fn(r), f2.jet_fn(r)
        chi_plus = chi_clamped(x1_of_r * (1.0 / delta))
        chi_minus = chi_clamped(x1_of_r * (-1.0 / delta))
        g_plus = jf2 - chi_plus * eta
        g_minus = jf1 - chi_minus * eta
        y = (x1_of_r + merge_half) * (1.0 / (2.0 * merge_half))
        sigma = jet_compose(_quintic_step_jet, y)
        # two-weight form: where a weight is exactly 0 it annihilates the
        # frozen (large) cutoff values of the opposite side
        co_sigma = Jet(1.0 - sigma.f, -sigma.d1, -sigma.d2)
        return sigma * g_plus + co_sigma * g_minus

    jout = blend_jet(grid)
    if np.any(jout.f <= 0):
        raise ParameterError("blend lost positivity; reduce eta")
    op_vals = operator_value_jet(cone, None, jout, grid)
    margin = float(op_vals.min())
    if margin <= 0:
        raise ParameterError(
            f"operator inequality fails after blending (margin {margin}); "
            "increase K or decrease eta"
        )
    out = RadialProfile(grid, jout.f, tag="supersolution", jet_fn=blend_jet)
    if return_report:
        report = {
            "gap": gap,
            "delta": delta,
            "eta": eta,
            "margin": margin,
            "window": (r_lo, r_hi),
        }
        return out, report
    return out
