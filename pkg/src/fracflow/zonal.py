"""Quadrature, spectral transforms, and the nonlocal operator pair on zonal fields.

A zonal field on the n-sphere depends only on the latitude cosine t.  The
natural discretization is Gauss-Jacobi quadrature for the weight
(1-t^2)^{(n-2)/2} together with the orthonormalized Gegenbauer family, which
diagonalizes the fractional conformal operator.  ``apply_psigma_pv`` is a
deliberately independent realization of the same operator through its
hypersingular integral representation; it exists to cross-validate the
spectral path and the kernel constant, not to replace it.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import roots_jacobi

from . import kernels
from .errors import AccuracyError, ConstructionError, DomainError, ShapeError
from .specfun import SphereParams, constants, equator_area, multiplier

__all__ = [
    "ZonalGrid",
    "ZonalField",
    "build_grid",
    "analyze",
    "synthesize",
    "apply_psigma",
    "apply_ksigma",
    "apply_psigma_pv",
    "integrate",
    "lp_norm",
]


@dataclass(frozen=True)
class ZonalGrid:
    """Immutable quadrature + basis data for zonal fields on S^n.

    nodes     latitude cosines t_j in (-1,1), Gauss-Jacobi for the zonal weight
    weights   quadrature weights including the |S^{n-1}| azimuthal factor, so
              sum(weights * f(nodes)) approximates the full sphere integral
    basis     table G[j, k] of the basis orthonormal w.r.t. the sphere
              measure: sum_j weights_j G[j,k] G[j,l] = delta_kl
    """

    params: SphereParams
    degree_max: int
    node_count: int
    nodes: np.ndarray
    weights: np.ndarray
    basis: np.ndarray
    multipliers: np.ndarray
    sqrt_b: np.ndarray = field(repr=False)
    area_sn1: float = field(repr=False)

    def basis_at(self, t) -> np.ndarray:
        """Evaluate the orthonormal basis at arbitrary latitudes."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        return kernels.basis_matrix(t, self.degree_max, self.sqrt_b) / np.sqrt(self.area_sn1)


def build_grid(params: SphereParams, degree_max: int, node_count: int | None = None) -> ZonalGrid:
    """Build the quadrature grid retaining harmonics up to ``degree_max``.

    ``node_count`` defaults to ceil(3(K+1)/2), enough to de-alias the
    quadratic products the flows generate before reprojection.
    """
    if degree_max < 8:
        raise DomainError(f"degree_max must be >= 8, got {degree_max}")
    if node_count is None:
        node_count = int(np.ceil(3 * (degree_max + 1) / 2))
    if node_count < degree_max + 1:
        raise DomainError(
            f"node_count must be >= degree_max+1 ({degree_max + 1}), got {node_count}"
        )
    alpha = (params.n - 2) / 2
    try:
        t, w = roots_jacobi(node_count, alpha, alpha)
    except Exception as exc:  # pragma: no cover - scipy failure surface
        raise ConstructionError(f"Gauss-Jacobi node solve failed: {exc}") from exc
    if not (np.all(np.isfinite(t)) and np.all(w > 0)):
        raise ConstructionError("Gauss-Jacobi node solve produced invalid nodes/weights")
    area = equator_area(params.n)
    sb = kernels.jacobi_sqrt_b(alpha, degree_max + 2)
    basis = kernels.basis_matrix(t, degree_max, sb) / np.sqrt(area)
    lam = np.array([multiplier(params, k) for k in range(degree_max + 1)])
    return ZonalGrid(
        params=params,
        degree_max=degree_max,
        node_count=node_count,
        nodes=t,
        weights=area * w,
        basis=basis,
        multipliers=lam,
        sqrt_b=sb,
        area_sn1=area,
    )


class ZonalField:
    """A zonal scalar field in dual nodal/spectral representation.

    The nodal values are canonical; spectral coefficients (in the grid's
    orthonormal basis) are computed on demand and cached.  Fields are treated
    as immutable: operations return new instances.
    """

    __slots__ = ("grid", "nodal", "_spectral")

    def __init__(self, grid: ZonalGrid, nodal: np.ndarray, spectral: np.ndarray | None = None):
        nodal = np.asarray(nodal, dtype=float)
        if nodal.shape != (grid.node_count,):
            raise ShapeError(
                f"nodal data has shape {nodal.shape}, grid expects ({grid.node_count},)"
            )
        self.grid = grid
        self.nodal = nodal
        self._spectral = spectral

    @property
    def spectral(self) -> np.ndarray:
        if self._spectral is None:
            g = self.grid
            self._spectral = g.basis.T @ (g.weights * self.nodal)
        return self._spectral

    def is_positive(self) -> bool:
        return bool(self.nodal.min() > 0.0)

    def __add__(self, other):
        return ZonalField(self.grid, self.nodal + _nodal_of(other, self.grid))

    def __sub__(self, other):
        return ZonalField(self.grid, self.nodal - _nodal_of(other, self.grid))

    def __mul__(self, scalar: float):
        return ZonalField(self.grid, self.nodal * float(scalar))

    __rmul__ = __mul__

    def __repr__(self):
        return (
            f"ZonalField(n={self.grid.params.n}, sigma={self.grid.params.sigma}, "
            f"K={self.grid.degree_max}, min={self.nodal.min():.3g}, max={self.nodal.max():.3g})"
        )


def _nodal_of(other, grid: ZonalGrid) -> np.ndarray:
    if isinstance(other, ZonalField):
        if other.grid is not grid:
            raise ShapeError("fields live on different grids")
        return other.nodal
    return np.asarray(other, dtype=float)


def analyze(fld: ZonalField) -> np.ndarray:
    """Coefficients <f, G_k> in the orthonormal basis, via the quadrature."""
    return fld.spectral.copy()


def synthesize(grid: ZonalGrid, coeffs) -> ZonalField:
    """Evaluate sum_k coeffs_k G_k at the grid nodes."""
    coeffs = np.asarray(coeffs, dtype=float)
    if coeffs.shape != (grid.degree_max + 1,):
        raise ShapeError(
            f"coefficient vector has shape {coeffs.shape}, grid expects ({grid.degree_max + 1},)"
        )
    return ZonalField(grid, grid.basis @ coeffs, spectral=coeffs.copy())


def project(fld: ZonalField) -> ZonalField:
    """Reproject onto the band-limited space of the grid (degree <= K)."""
    return synthesize(fld.grid, fld.spectral)


def apply_psigma(fld: ZonalField) -> ZonalField:
    """Apply the fractional conformal operator: multiply mode k by lambda_k."""
    return synthesize(fld.grid, fld.grid.multipliers * fld.spectral)


def apply_ksigma(fld: ZonalField) -> ZonalField:
    """Apply the spherical Riesz potential, the exact inverse: divide by lambda_k."""
    return synthesize(fld.grid, fld.spectral / fld.grid.multipliers)


def integrate(fld: ZonalField) -> float:
    """Full-sphere integral of the field."""
    return float(np.dot(fld.grid.weights, fld.nodal))


def lp_norm(fld: ZonalField, p: float) -> float:
    """L^p norm over the sphere, p >= 1."""
    if p < 1:
        raise DomainError(f"lp_norm requires p >= 1, got {p}")
    return float(np.dot(fld.grid.weights, np.abs(fld.nodal) ** p) ** (1.0 / p))


def quadratic_form(fld: ZonalField) -> float:
    """The energy integral of f against the operator, sum lambda_k c_k^2."""
    c = fld.spectral
    return float(np.dot(fld.grid.multipliers, c * c))


def apply_psigma_pv(fld: ZonalField, tol: float = 1e-3, eps_cap: float = 0.02) -> ZonalField:
    """Evaluate the operator through its principal-value integral form.

    At every node this computes

        lambda_0 v(t0) + c_neg * PV int (v(t0) - v(zeta)) |xi - zeta|^{-(n+2s)} dvol

    by reducing to a latitude integral against the azimuthally integrated
    chordal kernel.  The diagonal singularity is handled by node-symmetric
    window exclusion plus Richardson extrapolation in the window size, with
    known leading exponents 2-2s and min(3, 4-2s).  Raises AccuracyError when
    the extrapolation consistency estimate exceeds ``tol`` (relative sup).

    This is the validator for the spectral path; it never feeds the flows.
    """
    grid = fld.grid
    params = grid.params
    n, s = params.n, params.sigma
    cs = constants(params)
    sm2 = equator_area(n - 1) if n > 2 else 2.0
    poly_coeffs = fld.spectral / np.sqrt(grid.area_sn1)

    levels, eps = kernels.pv_levels(
        grid.nodes, poly_coeffs, grid.sqrt_b, n, s, eps_cap, sm2
    )

    q1 = 2.0 - 2.0 * s
    q2 = min(3.0, 4.0 - 2.0 * s)

    def extrapolate(i0: int) -> np.ndarray:
        # solve I(e) = I0 - A e^q1 - B e^q2 on three consecutive window sizes
        e = eps * 2.0**i0
        out = np.empty_like(e)
        for j in range(e.size):
            mat = np.array(
                [
                    [1.0, e[j] ** q1, e[j] ** q2],
                    [1.0, (2 * e[j]) ** q1, (2 * e[j]) ** q2],
                    [1.0, (4 * e[j]) ** q1, (4 * e[j]) ** q2],
                ]
            )
            out[j] = np.linalg.solve(mat, levels[j, i0 : i0 + 3])[0]
        return out

    fine = extrapolate(0)
    coarse = extrapolate(1)
    result = cs.psigma1 * fld.nodal + cs.c_neg * fine
    scale = np.abs(result).max()
    achieved = float(cs.c_neg * np.abs(fine - coarse).max() / scale) if scale > 0 else 0.0
    if achieved > tol:
        raise AccuracyError("principal-value evaluation did not reach tolerance", achieved)
    return ZonalField(grid, result)
