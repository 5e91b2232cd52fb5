"""Tests for the Perron machinery: local solves, supersolutions, minimal
solutions, indicial exponents, cutoffs and crease smoothing."""

import numpy as np
import pytest

from conelab import perron as pn
from conelab import spectral as sp
from conelab.cones import RadialProfile, catalog_cones, make_cone
from conelab.errors import (
    BallTooLargeError,
    ComplexIndicialError,
    DomainError,
    NoCreaseError,
    NotSupersolutionError,
    OutOfBandError,
    ParameterError,
)
from conelab.jets import jet_power


@pytest.fixture
def simons():
    return make_cone(3, 3)


@pytest.fixture
def problem(simons):
    return pn.PerronProblem(cone=simons, lam=0.125, domain=(0.01, 1.0), boundary_value=1.0)


# ---------------------------------------------------------------------------
# indicial exponents
# ---------------------------------------------------------------------------

class TestIndicial:
    def test_simons_eighth(self, simons):
        alpha, beta = pn.indicial_exponent(simons, 0.125)
        assert np.isclose(alpha, -2.5 + np.sqrt(6.25 - (5 / 24 + 0.125) * 6))
        assert np.isclose(alpha, -0.4384471871911697)
        assert np.isclose(alpha + beta, -(simons.n - 2))

    def test_defining_quadratic(self, simons):
        for lam in (0.125, 0.3, 0.7):
            alpha, _ = pn.indicial_exponent(simons, lam)
            coupling = (simons.kappa + lam) * 6
            assert abs(alpha**2 + (simons.n - 2) * alpha + coupling) < 1e-12

    def test_double_root_at_threshold(self, simons):
        lam_max = pn.indicial_lambda_max(simons)
        assert np.isclose(lam_max, 5.0 / 6.0)  # coincides with the limit eigenvalue
        alpha, beta = pn.indicial_exponent(simons, lam_max)
        assert np.isclose(alpha, -2.5) and np.isclose(beta, -2.5)

    def test_complex_raises_with_threshold(self, simons):
        with pytest.raises(ComplexIndicialError) as exc:
            pn.indicial_exponent(simons, 0.9)
        assert np.isclose(exc.value.lambda_max, 5.0 / 6.0)

    def test_band_lower_end(self, simons):
        with pytest.raises(OutOfBandError):
            pn.indicial_exponent(simons, 0.0)

    def test_monotone_in_lambda(self, simons):
        lams = np.linspace(0.125, 0.8, 12)
        alphas = [pn.indicial_exponent(simons, l)[0] for l in lams]
        assert np.all(np.diff(alphas) < 0)

    @pytest.mark.parametrize("lam", [0.125, 0.25, 0.5])
    def test_shooting_oracle(self, simons, lam):
        # integrate the radial ODE from r=1 with the r^alpha jet; the solution
        # must remain r^alpha to high accuracy
        from scipy.integrate import solve_ivp

        alpha, _ = pn.indicial_exponent(simons, lam)
        coupling = (simons.kappa + lam) * 6
        n = simons.n

        def rhs(s, y):  # log-radius form: u'' + (n-2) u' + coupling u = 0
            return [y[1], -(n - 2) * y[1] - coupling * y[0]]

        sol = solve_ivp(
            rhs, (0.0, -3.0), [1.0, alpha], rtol=1e-12, atol=1e-14,
            t_eval=np.linspace(0.0, -3.0, 40),
        )
        expected = np.exp(alpha * sol.t)
        assert np.max(np.abs(sol.y[0] - expected) / expected) < 1e-6


# ---------------------------------------------------------------------------
# local solvability
# ---------------------------------------------------------------------------

class TestLocalSolve:
    def test_reproduces_power_solution(self, problem, simons):
        alpha, _ = pn.indicial_exponent(simons, problem.lam)
        sol = pn.local_solve(problem, (0.25, 0.5), (0.25**alpha, 0.5**alpha))
        # compare on the solver's own nodes (interpolation between nodes is
        # only second order and would mask the solver accuracy)
        np.testing.assert_allclose(sol.values, sol.grid**alpha, rtol=1e-10)

    def test_margin_enforced(self, problem):
        # a very wide window fails the 1.1 eigenvalue margin
        with pytest.raises(BallTooLargeError):
            pn.local_solve(problem, (0.01, 1.0), (1.0, 1.0))

    def test_margin_ratio_values(self, problem):
        assert pn.margin_ratio(problem, (0.5, 1.0)) > 1.1
        assert pn.margin_ratio(problem, (0.01, 1.0)) < 1.1

    def test_sub_annulus_validation(self, problem):
        with pytest.raises(DomainError):
            pn.margin_ratio(problem, (0.001, 0.5))

    def test_laplace_eigen_flat_interval(self):
        # n = 1-like sanity: for the cone problem use the scaling law instead
        c = make_cone(3, 3)
        mu1 = pn.laplace_first_eigen(c, 1.0, 2.0)
        mu2 = pn.laplace_first_eigen(c, 2.0, 4.0)
        assert np.isclose(mu2, mu1 / 4.0, rtol=1e-6)  # mu scales like 1/r^2

    def test_problem_validation(self, simons):
        with pytest.raises(DomainError):
            pn.PerronProblem(cone=simons, lam=0.125, domain=(1.0, 0.5), boundary_value=1.0)
        with pytest.raises(OutOfBandError):
            pn.PerronProblem(cone=simons, lam=0.9, domain=(0.1, 1.0), boundary_value=1.0)
        with pytest.raises(DomainError):
            pn.PerronProblem(cone=simons, lam=0.125, domain=(0.1, 1.0), boundary_value=-1.0)


# ---------------------------------------------------------------------------
# supersolutions and lifts
# ---------------------------------------------------------------------------

class TestIsSupersolution:
    def test_exact_solution_passes(self, problem, simons):
        alpha, _ = pn.indicial_exponent(simons, problem.lam)
        grid = problem.grid
        f = RadialProfile(grid, grid**alpha, tag="supersolution")
        ok, witness = pn.is_supersolution(problem, f)
        assert ok and witness is None

    def test_hardy_power_passes(self, problem):
        ok, _ = pn.is_supersolution(problem, pn.default_seed(problem))
        assert ok

    def test_constant_fails_with_witness(self, problem):
        grid = problem.grid
        f = RadialProfile(grid, np.ones_like(grid), tag="supersolution")
        ok, witness = pn.is_supersolution(problem, f)
        assert not ok
        assert witness["excess"] > 0
        r0, r1 = witness["window"]
        assert problem.domain[0] <= r0 < r1 <= problem.domain[1] * (1 + 1e-9)

    def test_shifted_power_fails(self, problem, simons):
        # r^alpha + c is *not* a supersolution: the zeroth-order term acts on
        # the constant with the wrong sign
        alpha, _ = pn.indicial_exponent(simons, problem.lam)
        grid = problem.grid
        f = RadialProfile(grid, grid**alpha + 0.5, tag="supersolution")
        ok, witness = pn.is_supersolution(problem, f)
        assert not ok and witness["excess"] > 0

    def test_nonpositive_rejected(self, problem):
        grid = problem.grid
        vals = np.ones_like(grid)
        vals[3] = -1.0
        ok, witness = pn.is_supersolution(problem, RadialProfile(grid, vals, tag="supersolution"))
        assert not ok and witness["reason"] == "not positive"


class TestLift:
    def test_lowers_strict_supersolution(self, problem):
        seed = pn.default_seed(problem)
        lifted = pn.lift(problem, seed, (0.25, 0.5))
        assert np.all(lifted.values <= seed.values + 1e-12)
        inside = (lifted.grid > 0.26) & (lifted.grid < 0.49)
        assert np.all(lifted.values[inside] < seed.values[inside])

    def test_identity_outside_window(self, problem):
        seed = pn.default_seed(problem)
        lifted = pn.lift(problem, seed, (0.25, 0.5))
        outside = (lifted.grid < 0.25) | (lifted.grid > 0.5)
        np.testing.assert_array_equal(lifted.values[outside], seed.values[outside])

    def test_result_is_still_supersolution(self, problem):
        lifted = pn.lift(problem, pn.default_seed(problem), (0.25, 0.5))
        ok, _ = pn.is_supersolution(problem, lifted)
        assert ok

    def test_rejects_non_supersolution(self, problem):
        grid = problem.grid
        f = RadialProfile(grid, np.ones_like(grid), tag="supersolution")
        with pytest.raises(NotSupersolutionError):
            pn.lift(problem, f, (0.25, 0.5))

    def test_rejects_wide_window(self, problem):
        with pytest.raises(BallTooLargeError):
            pn.lift(problem, pn.default_seed(problem), (0.01, 1.0))


class TestSupersolutionSet:
    def test_minimum_of_members(self, problem, simons):
        alpha, _ = pn.indicial_exponent(simons, problem.lam)
        grid = problem.grid
        s = pn.SupersolutionSet(problem)
        s.add(pn.default_seed(problem))
        s.add(RadialProfile(grid, 2.0 * grid**alpha, tag="supersolution"))
        m = s.minimum()
        assert np.all(m.values <= s.members[0].values + 1e-12)
        assert np.all(m.values <= s.members[1].values + 1e-12)

    def test_add_rejects_bad_member(self, problem):
        s = pn.SupersolutionSet(problem)
        grid = problem.grid
        with pytest.raises(NotSupersolutionError):
            s.add(RadialProfile(grid, np.ones_like(grid) + grid, tag="supersolution"))

    def test_empty_minimum(self, problem):
        with pytest.raises(DomainError):
            pn.SupersolutionSet(problem).minimum()


# ---------------------------------------------------------------------------
# minimal solution
# ---------------------------------------------------------------------------

class TestPerronMinimal:
    def test_recovers_power_solution(self, problem, simons):
        res = pn.perron_minimal_detailed(problem)
        exact = res.c * res.profile.grid**res.alpha
        assert np.max(np.abs(res.profile.values - exact)) < 1e-4
        assert res.residual < 1e-8

    def test_below_all_seeds(self, problem, simons):
        alpha, _ = pn.indicial_exponent(simons, problem.lam)
        grid = problem.grid
        seeds = [
            pn.default_seed(problem),
            RadialProfile(grid, 3.0 * grid**alpha, tag="supersolution"),
        ]
        res = pn.perron_minimal_detailed(problem, seeds=seeds)
        assert all(res.minimality_checks)
        for s in seeds:
            assert np.all(res.profile(s.grid) <= s.values + 1e-9 * np.abs(s.values))

    def test_other_lambda(self, simons):
        pp = pn.PerronProblem(cone=simons, lam=0.4, domain=(0.02, 1.0), boundary_value=2.0)
        res = pn.perron_minimal_detailed(pp)
        exact = res.c * res.profile.grid**res.alpha
        assert np.max(np.abs(res.profile.values - exact) / exact) < 1e-6
        assert res.residual < 1e-8

    def test_profile_api(self, problem):
        prof = pn.perron_minimal(problem)
        assert isinstance(prof, RadialProfile)
        assert prof.values.min() > 0

    def test_report_dict(self, problem):
        d = pn.perron_minimal_detailed(problem).to_dict()
        assert set(d) == {"alpha", "c", "iterations", "residual", "minimality_checks"}


# ---------------------------------------------------------------------------
# cutoffs
# ---------------------------------------------------------------------------

class TestMakeCutoff:
    @pytest.mark.parametrize("K", [0.5, 3.0, 40.0, 200.0])
    def test_margins_positive(self, K):
        spec = pn.make_cutoff(K, 0.2)
        assert min(spec.margins.values()) > 0

    def test_endpoint_values(self):
        spec = pn.make_cutoff(3.0, 1.0)
        j = spec.jet(np.array([0.0, 1.0, 2.0]))
        assert np.isclose(j.f[0], 1.0)
        assert j.f[1] == 0.0 and j.f[2] == 0.0
        assert j.d1[1] == 0.0 and j.d2[1] == 0.0

    def test_invariants_on_dense_samples(self):
        K = 5.0
        spec = pn.make_cutoff(K, 0.3)
        t = np.linspace(-0.999, 0.999, 20011)
        j = spec.jet(t)
        assert np.all(j.f > 0)
        assert np.all(j.d1 < 0)
        assert np.all(j.d2 > 0)
        assert np.all(j.d2 >= -K * j.d1)
        assert np.all(j.d2 >= K * j.f)

    def test_plain_pole_fails_near_zero(self):
        # the bare exp(-K t/(1-t)) profile violates the slope-ratio inequality
        # near t = 0; the linear rate term is what rescues it
        K = 3.0
        t = np.linspace(0.0, 0.5, 1000)
        psi_p = K / (1 - t) ** 2
        psi_pp = 2 * K / (1 - t) ** 3
        assert np.min(psi_p**2 - psi_pp - K * psi_p) < 0

    def test_parameter_validation(self):
        with pytest.raises(ParameterError):
            pn.make_cutoff(-1.0, 0.2)
        with pytest.raises(ParameterError):
            pn.make_cutoff(1.0, 0.0)


# ---------------------------------------------------------------------------
# crease smoothing
# ---------------------------------------------------------------------------

def _crossing_pair(c, rstar=0.3, r_lo=0.05, r_hi=1.0):
    """Two strict supersolution branches crossing transversally at rstar:
    the limit-exponent power and a slower mid-band power."""
    a_fast = -(c.n - 2.0) / 2.0
    a_slow, _ = pn.indicial_exponent(c, pn.indicial_lambda_max(c) / 2.0)
    scale = rstar ** (a_fast - a_slow)
    g = np.geomspace(r_lo, r_hi, 4000)
    f1 = RadialProfile(g, g**a_fast, tag="supersolution", jet_fn=lambda x: jet_power(x, a_fast))
    f2 = RadialProfile(
        g, scale * g**a_slow, tag="supersolution",
        jet_fn=lambda x: jet_power(x, a_slow) * scale,
    )
    return f1, f2


class TestCreaseSmooth:
    def test_margin_positive(self, simons):
        f1, f2 = _crossing_pair(simons)
        out, rep = pn.crease_smooth(f1, f2, 0.3, eta=0.05, K=10.0, cone=simons, return_report=True)
        assert rep["margin"] > 0
        assert rep["gap"] > 0
        assert out.values.min() > 0

    def test_locality(self, simons):
        f1, f2 = _crossing_pair(simons)
        out, rep = pn.crease_smooth(f1, f2, 0.3, eta=0.05, K=10.0, cone=simons, return_report=True)
        r_lo, r_hi = rep["window"]
        g = out.grid
        left, right = g < r_lo * 0.999, g > r_hi * 1.001
        np.testing.assert_allclose(out.values[left], f2(g[left]), rtol=1e-13)
        np.testing.assert_allclose(out.values[right], f1(g[right]), rtol=1e-13)

    def test_window_shrinks_with_eta(self, simons):
        f1, f2 = _crossing_pair(simons)
        _, rep_small = pn.crease_smooth(f1, f2, 0.3, eta=0.01, K=10.0, cone=simons, return_report=True)
        _, rep_big = pn.crease_smooth(f1, f2, 0.3, eta=0.05, K=10.0, cone=simons, return_report=True)
        assert rep_small["delta"] < rep_big["delta"]
        assert np.isclose(rep_big["delta"] / rep_small["delta"], 5.0)

    def test_c2_continuity(self, simons):
        # second differences of the blend stay bounded through the crease
        f1, f2 = _crossing_pair(simons)
        out = pn.crease_smooth(f1, f2, 0.3, eta=0.05, K=10.0, cone=simons)
        r = np.linspace(0.28, 0.32, 2001)
        j = out.jet_fn(r)
        h = r[1] - r[0]
        d2_fd = np.diff(out.jet_fn(r).f, 2) / h**2
        # inside the merge zone the fourth derivative is large, so the FD
        # probe itself carries noticeable error; 1% of the peak is plenty to
        # rule out a jump discontinuity
        assert np.max(np.abs(d2_fd - j.d2[1:-1])) < 1e-2 * np.max(np.abs(j.d2))

    def test_no_crossing_raises(self, simons):
        f1, f2 = _crossing_pair(simons)
        with pytest.raises(DomainError):
            pn.crease_smooth(f1, f2, 0.5, eta=0.05, K=10.0, cone=simons)

    def test_wrong_order_raises(self, simons):
        f1, f2 = _crossing_pair(simons)
        with pytest.raises(NoCreaseError):
            pn.crease_smooth(f2, f1, 0.3, eta=0.05, K=10.0, cone=simons)

    def test_oversized_window_raises(self, simons):
        f1, f2 = _crossing_pair(simons, r_lo=0.28, r_hi=0.32)
        with pytest.raises(ParameterError):
            pn.crease_smooth(f1, f2, 0.3, eta=5.0, K=10.0, cone=simons)

    def test_needs_jets(self, simons, problem):
        g = problem.grid
        bare = RadialProfile(g, g**-1.0, tag="supersolution")
        with pytest.raises(DomainError):
            pn.crease_smooth(bare, bare, 0.3, eta=0.05, K=10.0, cone=simons)

    def test_catalog_sweep(self):
        for c in catalog_cones():
            f1, f2 = _crossing_pair(c)
            _, rep = pn.crease_smooth(f1, f2, 0.3, eta=0.02, K=8.0, cone=c, return_report=True)
            assert rep["margin"] > 0
