"""Finite-difference Riemannian calculus on structured grids.

Metric components are sampled on uniform rectangular charts.  Christoffel
symbols and scalar curvature are assembled pointwise from the metric and
its first/second coordinate derivatives; derivatives come from 2nd-order
central stencils unless the field carries analytic derivative callbacks.

Index conventions for derivative arrays:
    dg[c, a, b]      = d g_ab / d x_c
    d2g[c, d, a, b]  = d^2 g_ab / (d x_c d x_d)
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    BoundaryMarginError,
    DegenerateLevelSetError,
    DomainError,
    SingularMetricError,
)

_PIVOT_TOL = 1e-12


# ---------------------------------------------------------------------------
# charts and fields
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Chart:
    """Uniform rectangular coordinate chart.

    axes: tuple of (min, max, sample count) per coordinate axis.
    """

    axes: tuple

    def __post_init__(self):
        if len(self.axes) < 2:
            raise DomainError("chart needs dimension >= 2")
        for lo, hi, cnt in self.axes:
            if cnt < 5:
                raise DomainError("need >= 5 samples per axis for interior stencils")
            if not hi > lo:
                raise DomainError("axis bounds must be increasing")

    @property
    def dim(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(int(c) for _, _, c in self.axes)

    @property
    def spacings(self):
        return np.array([(hi - lo) / (cnt - 1) for lo, hi, cnt in self.axes])

    def coords_1d(self, axis):
        lo, hi, cnt = self.axes[axis]
        return np.linspace(lo, hi, int(cnt))

    def mesh(self):
        """Coordinates at all nodes, shape grid_shape + (dim,)."""
        grids = np.meshgrid(*[self.coords_1d(i) for i in range(self.dim)], indexing="ij")
        return np.stack(grids, axis=-1)

    def node_coords(self, p):
        p = tuple(int(i) for i in p)
        return np.array([self.coords_1d(ax)[i] for ax, i in enumerate(p)])

    def check_margin(self, p, margin):
        for ax, i in enumerate(p):
            cnt = self.shape[ax]
            if i < margin or i > cnt - 1 - margin:
                raise BoundaryMarginError(
                    f"node {tuple(p)} within {margin} nodes of boundary on axis {ax}"
                )


@dataclass(frozen=True)
class MetricField:
    """Metric components sampled on a chart, with optional analytic jets.

    g has shape chart.shape + (n, n).  When the derivative callbacks are
    present they are used instead of stencils; each maps a coordinate
    point x (length-n array) to arrays with the index conventions above.
    """

    chart: Chart
    g: np.ndarray
    metric_fn: object = None
    dmetric_fn: object = None
    d2metric_fn: object = None

    def __post_init__(self):
        n = self.chart.dim
        expected = self.chart.shape + (n, n)
        if self.g.shape != expected:
            raise DomainError(f"g has shape {self.g.shape}, expected {expected}")
        flat = self.g.reshape(-1, n, n)
        if not np.allclose(flat, np.swapaxes(flat, -1, -2), atol=1e-12, rtol=0.0):
            raise DomainError("metric not symmetric at every node")
        try:
            chol = np.linalg.cholesky(flat)
        except np.linalg.LinAlgError as exc:
            raise SingularMetricError("metric not positive definite") from exc
        pivots = np.einsum("...ii->...i", chol)
        if pivots.min() <= _PIVOT_TOL:
            raise SingularMetricError("metric pivot below tolerance 1e-12")

    @property
    def has_callbacks(self):
        return self.dmetric_fn is not None and self.d2metric_fn is not None

    @classmethod
    def from_function(cls, chart, fn, dfn=None, d2fn=None):
        """Sample a vectorized metric function fn: (..., n) -> (..., n, n)."""
        g = np.asarray(fn(chart.mesh()), dtype=float)
        return cls(chart, g, metric_fn=fn, dmetric_fn=dfn, d2metric_fn=d2fn)

    # -- serialization ------------------------------------------------------

    def to_json(self):
        return json.dumps(
            {
                "chart": [list(ax) for ax in self.chart.axes],
                "components": self.g.reshape(-1).tolist(),
            }
        )

    @classmethod
    def from_json(cls, text):
        doc = json.loads(text)
        chart = Chart(tuple(tuple(ax) for ax in doc["chart"]))
        n = chart.dim
        g = np.array(doc["components"], dtype=float).reshape(chart.shape + (n, n))
        return cls(chart, g)


@dataclass(frozen=True)
class CurvatureSample:
    point: tuple
    christoffel: np.ndarray
    scal: float
    method: str = "stencil-order-2"

    def __post_init__(self):
        if not np.allclose(self.christoffel, np.swapaxes(self.christoffel, 1, 2)):
            raise DomainError("christoffel not symmetric in lower indices")


# ---------------------------------------------------------------------------
# pointwise assembly from (g, dg, d2g)
# ---------------------------------------------------------------------------

def _inverse(g):
    if abs(np.linalg.det(g)) < 1e-300:
        raise SingularMetricError("metric not invertible")
    return np.linalg.inv(g)


def christoffel_from_jet(g, dg):
    """Gamma^gamma_{alpha beta} from the metric and its first derivatives."""
    ginv = _inverse(g)
    t = dg.transpose(1, 0, 2) + dg - dg.transpose(1, 2, 0)
    return 0.5 * np.einsum("gr,abr->gab", ginv, t)


def scal_from_jet(g, dg, d2g):
    """Scalar curvature assembled from the metric 2-jet at one point.

    scal = g^{ij}(d_k Gam^k_ij - d_j Gam^k_ik
                  + Gam^l_ij Gam^k_kl - Gam^l_ik Gam^k_jl)
    """
    ginv = _inverse(g)
    t = dg.transpose(1, 0, 2) + dg - dg.transpose(1, 2, 0)
    gam = 0.5 * np.einsum("gr,abr->gab", ginv, t)

    dginv = -np.einsum("ga,dab,br->dgr", ginv, dg, ginv)
    dt = (
        d2g.transpose(0, 2, 1, 3)
        + d2g
        - d2g.transpose(0, 2, 3, 1)
    )
    dgam = 0.5 * (
        np.einsum("dgr,abr->dgab", dginv, t) + np.einsum("gr,dabr->dgab", ginv, dt)
    )

    contracted = np.einsum("kkl->l", gam)
    t1 = np.einsum("ij,kkij->", ginv, dgam)
    t2 = np.einsum("ij,jkik->", ginv, dgam)
    t3 = np.einsum("ij,lij,l->", ginv, gam, contracted)
    t4 = np.einsum("ij,lik,kjl->", ginv, gam, gam)
    return float(t1 - t2 + t3 - t4)


# ---------------------------------------------------------------------------
# derivative extraction at a node
# ---------------------------------------------------------------------------

def _shift(p, axis, step):
    q = list(p)
    q[axis] += step
    return tuple(q)


def metric_jet(m: MetricField, p):
    """(g, dg, d2g, method) of the metric at node p."""
    p = tuple(int(i) for i in p)
    n = m.chart.dim
    if m.has_callbacks:
        x = m.chart.node_coords(p)
        g = np.asarray(m.metric_fn(x), dtype=float) if m.metric_fn else m.g[p]
        dg = np.asarray(m.dmetric_fn(x), dtype=float)
        d2g = np.asarray(m.d2metric_fn(x), dtype=float)
        return g, dg, d2g, "analytic"

    h = m.chart.spacings
    g = m.g[p]
    dg = np.empty((n, n, n))
    d2g = np.empty((n, n, n, n))
    for c in range(n):
        gp, gm = m.g[_shift(p, c, +1)], m.g[_shift(p, c, -1)]
        dg[c] = (gp - gm) / (2.0 * h[c])
        d2g[c, c] = (gp - 2.0 * g + gm) / h[c] ** 2
        for d in range(c + 1, n):
            gpp = m.g[_shift(_shift(p, c, +1), d, +1)]
            gpm = m.g[_shift(_shift(p, c, +1), d, -1)]
            gmp = m.g[_shift(_shift(p, c, -1), d, +1)]
            gmm = m.g[_shift(_shift(p, c, -1), d, -1)]
            d2g[c, d] = d2g[d, c] = (gpp - gpm - gmp + gmm) / (4.0 * h[c] * h[d])
    return g, dg, d2g, "stencil-order-2"


def christoffel(m: MetricField, p):
    """Christoffel symbols Gamma^gamma_{alpha beta} at grid node p."""
    m.chart.check_margin(p, 2)
    g, dg, _, _ = metric_jet(m, p)
    return christoffel_from_jet(g, dg)


def scalar_curvature(m: MetricField, p):
    """Scalar curvature at grid node p."""
    m.chart.check_margin(p, 3)
    g, dg, d2g, _ = metric_jet(m, p)
    return scal_from_jet(g, dg, d2g)


def curvature_sample(m: MetricField, p):
    m.chart.check_margin(p, 3)
    g, dg, d2g, method = metric_jet(m, p)
    return CurvatureSample(
        point=tuple(int(i) for i in p),
        christoffel=christoffel_from_jet(g, dg),
        scal=scal_from_jet(g, dg, d2g),
        method=method,
    )


# ---------------------------------------------------------------------------
# conformal transformation law
# ---------------------------------------------------------------------------

def conformal_coupling(n):
    """kappa(n) = (n-2)/(4(n-1))."""
    return (n - 2) / (4.0 * (n - 1))


def conformal_scal(scal_g, u, lap_u, n):
    """Scalar curvature of u^{4/(n-2)} g from the transformation law."""
    if n < 3:
        raise DomainError("transformation law needs n >= 3")
    if u <= 0:
        raise DomainError("conformal factor must be positive")
    c = 4.0 * (n - 1) / (n - 2)
    return u ** (-(n + 2.0) / (n - 2.0)) * (-c * lap_u + scal_g * u)


def conformal_deform(m: MetricField, u, n=None):
    """Componentwise g -> u^{4/(n-2)} g for a positive scalar field u.

    u may be a scalar or an array over the grid nodes.  The output field
    is sampled-only (stencil path); the input's analytic callbacks do not
    transfer because u is given by samples.  ``n`` defaults to the chart
    dimension; pass it explicitly on dimensionally reduced grids (radial
    sections of higher-dimensional metrics).
    """
    n = m.chart.dim if n is None else n
    if n < 3:
        raise DomainError("conformal exponent needs n >= 3")
    u = np.asarray(u, dtype=float)
    if np.any(u <= 0):
        raise DomainError("conformal factor must be positive at every node")
    factor = u ** (4.0 / (n - 2.0))
    g = m.g * factor[..., None, None] if factor.ndim else m.g * factor
    return MetricField(m.chart, g)


# ---------------------------------------------------------------------------
# level sets
# ---------------------------------------------------------------------------

def _scalar_jet(m: MetricField, f, p):
    """(df, d2f) of a level function at node p (stencil or analytic)."""
    n = m.chart.dim
    if hasattr(f, "grad") and hasattr(f, "hess"):
        x = m.chart.node_coords(p)
        return np.asarray(f.grad(x), dtype=float), np.asarray(f.hess(x), dtype=float)
    f = np.asarray(f, dtype=float)
    h = m.chart.spacings
    df = np.empty(n)
    d2f = np.empty((n, n))
    for c in range(n):
        fp, fm = f[_shift(p, c, +1)], f[_shift(p, c, -1)]
        df[c] = (fp - fm) / (2.0 * h[c])
        d2f[c, c] = (fp - 2.0 * f[p] + fm) / h[c] ** 2
        for d in range(c + 1, n):
            fpp = f[_shift(_shift(p, c, +1), d, +1)]
            fpm = f[_shift(_shift(p, c, +1), d, -1)]
            fmp = f[_shift(_shift(p, c, -1), d, +1)]
            fmm = f[_shift(_shift(p, c, -1), d, -1)]
            d2f[c, d] = d2f[d, c] = (fpp - fpm - fmp + fmm) / (4.0 * h[c] * h[d])
    return df, d2f


def level_set_shape(m: MetricField, f, p):
    """Second fundamental form and mean curvature of {f = f(p)} at node p.

    Orientation is fixed so that distance spheres (f = |x| in flat space)
    come out with positive trace (n-1)/r: the round-sphere/inward
    convention.  Negating f negates the result exactly.

    Returns (secondform, trace) where secondform is expressed in a
    g-orthonormal tangent frame at p.
    """
    m.chart.check_margin(p, 2)
    p = tuple(int(i) for i in p)
    n = m.chart.dim
    g, dg, _, _ = metric_jet(m, p)
    gam = christoffel_from_jet(g, dg)
    ginv = _inverse(g)

    df, d2f = _scalar_jet(m, f, p)
    norm2 = float(df @ ginv @ df)
    if norm2 < 1e-24:
        raise DegenerateLevelSetError(f"vanishing gradient at node {p}")
    norm = np.sqrt(norm2)
    nu_up = (ginv @ df) / norm  # unit normal, contravariant, along grad f

    hess = d2f - np.einsum("cab,c->ab", gam, df)
    trace = float(np.einsum("ab,ab->", ginv - np.outer(nu_up, nu_up), hess)) / norm

    # Euclidean-coordinate tangent directions (annihilate df), then
    # g-orthonormalize.
    _, _, vt = np.linalg.svd(df.reshape(1, -1))
    tangent = vt[1:].T  # n x (n-1)
    gram = tangent.T @ g @ tangent
    chol = np.linalg.cholesky(gram)
    frame = tangent @ np.linalg.inv(chol).T
    secondform = frame.T @ (hess / norm) @ frame
    return secondform, trace


def conformal_shape_shift(secondform, g_restriction, u, grad_u, normal, n):
    """Second fundamental form after the conformal change u^{4/(n-2)} g.

    A_new(v, w) = A(v, w) - (2/(n-2)) * N(grad u / u) * g(v, w), where N is
    the component of grad u / u along ``normal``.  All vectors are given in
    a common orthonormal frame.
    """
    if u <= 0:
        raise DomainError("conformal factor must be positive")
    normal = np.asarray(normal, dtype=float)
    grad_u = np.asarray(grad_u, dtype=float)
    nshift = float(grad_u @ normal) / u
    return np.asarray(secondform, dtype=float) - (2.0 / (n - 2.0)) * nshift * np.asarray(
        g_restriction, dtype=float
    )
