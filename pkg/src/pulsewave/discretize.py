"""Grids and matrix realizations of the divergence-form operators.

Operators are second-order flux-form finite differences with diffusion
coefficients evaluated analytically at cell midpoints (preserves symmetry
and the zero row-sum of the periodic divergence form). 1-D operators are
stored as three diagonals with optional periodic wrap entries; 2-D
operators (diagonal diffusion tensors only) as sparse CSR five-point
stencils. Clamped windows keep the boundary data out of the matrix and
expose it as an affine flux vector.
"""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .errors import IncompatibleGrid, TooLarge
from .io_utils import fmt
from . import kernels

CLAMP = "clamp_to_limits"
ZERO_FLUX = "zero_flux"
DENSE_ROW_CAP = 4096


@dataclass(frozen=True)
class PeriodicGrid:
    """Uniform grid on the periodicity cell, one axis per dimension."""

    n_points: tuple
    periods: tuple

    def __post_init__(self):
        if len(self.n_points) != len(self.periods):
            raise ValueError("n_points and periods must have equal length")
        if any(n < 8 for n in self.n_points):
            raise ValueError("need at least 8 points per axis")

    @property
    def dimension(self):
        return len(self.n_points)

    @property
    def spacing(self):
        return tuple(L / n for L, n in zip(self.periods, self.n_points))

    @property
    def size(self):
        return int(np.prod(self.n_points))

    def axis_nodes(self, axis):
        return np.arange(self.n_points[axis]) * self.spacing[axis]

    def coords(self):
        """Node coordinates as a tuple of arrays shaped like the grid."""
        axes = [self.axis_nodes(i) for i in range(self.dimension)]
        if self.dimension == 1:
            return (axes[0],)
        return tuple(np.meshgrid(*axes, indexing="ij"))


@dataclass(frozen=True)
class LineGrid:
    """Finite window along the propagation axis, periodic transverse axis.

    Node coordinates are integer multiples of h = period / n_per_period,
    anchored at index `offset_nodes`; recentering shifts the anchor by whole
    periods so periodic data always restricts exactly.
    """

    n_per_period: int
    period: float
    n_nodes: int
    offset_nodes: int = 0
    boundary: str = CLAMP
    transverse: PeriodicGrid = None

    def __post_init__(self):
        if self.n_per_period < 8:
            raise ValueError("need at least 8 points per period")
        if self.boundary not in (CLAMP, ZERO_FLUX):
            raise ValueError(f"unknown boundary rule {self.boundary!r}")
        if self.window_length < 20.0 * self.period - 1e-12:
            raise ValueError("window must span at least 20 periods")
        if self.transverse is not None and self.transverse.dimension != 1:
            raise ValueError("transverse grid must be one-dimensional")

    @property
    def spacing(self):
        return self.period / self.n_per_period

    @property
    def window_length(self):
        return (self.n_nodes - 1) * self.spacing

    @property
    def x_lo(self):
        return self.offset_nodes * self.spacing

    @property
    def x_hi(self):
        return (self.offset_nodes + self.n_nodes - 1) * self.spacing

    @property
    def dimension(self):
        return 1 if self.transverse is None else 2

    @property
    def size(self):
        return self.n_nodes * (1 if self.transverse is None else self.transverse.n_points[0])

    def axis_nodes(self, axis=0):
        if axis == 0:
            return (self.offset_nodes + np.arange(self.n_nodes)) * self.spacing
        return self.transverse.axis_nodes(0)

    def coords(self):
        if self.transverse is None:
            return (self.axis_nodes(0),)
        return tuple(np.meshgrid(self.axis_nodes(0), self.axis_nodes(1), indexing="ij"))

    def shifted(self, whole_periods):
        """Same window translated by an integer number of periods."""
        return LineGrid(
            n_per_period=self.n_per_period,
            period=self.period,
            n_nodes=self.n_nodes,
            offset_nodes=self.offset_nodes + whole_periods * self.n_per_period,
            boundary=self.boundary,
            transverse=self.transverse,
        )


@dataclass
class DiscreteOperator:
    """Banded (1-D) or sparse (2-D) realization of an elliptic operator.

    `lower[i]`/`upper[i]` couple row i to its left/right neighbor; with
    `periodic` set, lower[0] and upper[-1] wrap around. `boundary_affine`
    carries the constant flux contributed by clamped boundary values; it is
    not part of the linear action.
    """

    grid: object
    lower: np.ndarray = None
    diag: np.ndarray = None
    upper: np.ndarray = None
    matrix: object = None
    periodic: bool = True
    boundary_affine: np.ndarray = None
    meta: dict = field(default_factory=dict)

    @property
    def n_rows(self):
        return self.diag.size if self.diag is not None else self.matrix.shape[0]

    @property
    def is_banded(self):
        return self.diag is not None

    def matvec(self, v):
        v = np.asarray(v, float)
        if self.is_banded:
            return kernels.tridiag_matvec(self.lower, self.diag, self.upper, v, self.periodic)
        return self.matrix @ v

    def offdiag_bounds(self):
        """(min, max) over all off-diagonal entries; used to orient Perron solves."""
        if self.is_banded:
            off = [self.upper[:-1], self.lower[1:]]
            if self.periodic:
                off += [self.lower[:1], self.upper[-1:]]
            vals = np.concatenate(off)
        else:
            coo = self.matrix.tocoo()
            mask = coo.row != coo.col
            vals = coo.data[mask]
        if vals.size == 0:
            return 0.0, 0.0
        return float(vals.min()), float(vals.max())

    def row_sums(self):
        return self.matvec(np.ones(self.n_rows))

    def scaled(self, factor):
        """factor * operator (affine part scaled too)."""
        aff = None if self.boundary_affine is None else factor * self.boundary_affine
        if self.is_banded:
            return DiscreteOperator(
                grid=self.grid,
                lower=factor * self.lower,
                diag=factor * self.diag,
                upper=factor * self.upper,
                periodic=self.periodic,
                boundary_affine=aff,
                meta=dict(self.meta),
            )
        return DiscreteOperator(
            grid=self.grid,
            matrix=self.matrix * factor,
            periodic=self.periodic,
            boundary_affine=aff,
            meta=dict(self.meta),
        )

    def shifted_diag(self, shift):
        """operator + diag(shift); shift may be a scalar or a per-node array."""
        if self.is_banded:
            return DiscreteOperator(
                grid=self.grid,
                lower=self.lower.copy(),
                diag=self.diag + shift,
                upper=self.upper.copy(),
                periodic=self.periodic,
                boundary_affine=None
                if self.boundary_affine is None
                else self.boundary_affine.copy(),
                meta=dict(self.meta),
            )
        shift_vec = np.broadcast_to(np.asarray(shift, float).ravel(), (self.n_rows,))
        return DiscreteOperator(
            grid=self.grid,
            matrix=(self.matrix + sp.diags(shift_vec)).tocsr(),
            periodic=self.periodic,
            boundary_affine=None
            if self.boundary_affine is None
            else self.boundary_affine.copy(),
            meta=dict(self.meta),
        )


def assemble_divergence(grid, medium, t=None):
    """Flux-form matrix of div(A grad .) on the given grid."""
    if medium.dimension != grid.dimension:
        raise IncompatibleGrid("medium and grid dimensions differ")
    if isinstance(grid, PeriodicGrid):
        _check_spacing(grid, medium)
        if grid.dimension == 1:
            return _divergence_1d(grid, medium, t, periodic=True)
        return _divergence_2d(grid, medium, t)
    if isinstance(grid, LineGrid):
        if abs(grid.period - medium.periods[0]) > 1e-12:
            raise IncompatibleGrid("window period does not match the medium period")
        if grid.transverse is None:
            return _divergence_1d(grid, medium, t, periodic=False)
        return _divergence_2d(grid, medium, t)
    raise TypeError(f"unsupported grid type {type(grid)!r}")


def _check_spacing(grid, medium):
    for h, L, Lm in zip(grid.spacing, grid.periods, medium.periods):
        if abs(L - Lm) > 1e-12:
            raise IncompatibleGrid("grid periods do not match the medium")
        ratio = Lm / h
        if abs(ratio - round(ratio)) > 1e-9:
            raise IncompatibleGrid("spacing does not divide the period")


def _divergence_1d(grid, medium, t, periodic):
    x = grid.axis_nodes(0)
    h = grid.spacing if isinstance(grid, LineGrid) else grid.spacing[0]
    n = x.size
    tt = 0.0 if t is None else t
    a_left = np.broadcast_to(medium.diffusion.value(0, (x - 0.5 * h,), tt), (n,)).copy()
    a_right = np.broadcast_to(medium.diffusion.value(0, (x + 0.5 * h,), tt), (n,)).copy()
    inv_h2 = 1.0 / (h * h)
    lower = a_left * inv_h2
    upper = a_right * inv_h2
    diagv = -(a_left + a_right) * inv_h2
    affine = None
    meta = {"kind": "divergence", "t": t, "medium": medium.name}
    if not periodic:
        if grid.boundary == CLAMP:
            # clamped Dirichlet neighbors; flux filled by attach_clamp_values
            affine = np.zeros(n)
            meta["a_edges"] = (float(a_left[0]), float(a_right[-1]))
        else:  # zero flux: no transport through the outer faces
            diagv[0] += lower[0]
            diagv[-1] += upper[-1]
        lower[0] = 0.0
        upper[-1] = 0.0
    return DiscreteOperator(
        grid=grid,
        lower=lower,
        diag=diagv,
        upper=upper,
        periodic=periodic,
        boundary_affine=affine,
        meta=meta,
    )


def _divergence_2d(grid, medium, t):
    if isinstance(grid, PeriodicGrid):
        n1, n2 = grid.n_points
        h1, h2 = grid.spacing
        x1 = grid.axis_nodes(0)
        x2 = grid.axis_nodes(1)
        windowed = False
        boundary = None
    else:
        n1, n2 = grid.n_nodes, grid.transverse.n_points[0]
        h1, h2 = grid.spacing, grid.transverse.spacing[0]
        x1 = grid.axis_nodes(0)
        x2 = grid.axis_nodes(1)
        windowed = True
        boundary = grid.boundary
    X1, X2 = np.meshgrid(x1, x2, indexing="ij")
    tt = 0.0 if t is None else t
    a1_l = np.broadcast_to(medium.diffusion.value(0, (X1 - 0.5 * h1, X2), tt), (n1, n2)).copy()
    a1_r = np.broadcast_to(medium.diffusion.value(0, (X1 + 0.5 * h1, X2), tt), (n1, n2)).copy()
    a2_l = np.broadcast_to(medium.diffusion.value(1, (X1, X2 - 0.5 * h2), tt), (n1, n2)).copy()
    a2_r = np.broadcast_to(medium.diffusion.value(1, (X1, X2 + 0.5 * h2), tt), (n1, n2)).copy()

    idx = np.arange(n1 * n2).reshape(n1, n2)
    rows, cols, vals = [], [], []

    def add(r, c, v):
        rows.append(r.ravel())
        cols.append(c.ravel())
        vals.append(v.ravel())

    inv_h12, inv_h2sq = 1.0 / (h1 * h1), 1.0 / (h2 * h2)
    diag = -(a1_l + a1_r) * inv_h12 - (a2_l + a2_r) * inv_h2sq
    meta = {"kind": "divergence", "t": t, "medium": medium.name}
    if windowed:
        if boundary == ZERO_FLUX:
            diag[0, :] += a1_l[0, :] * inv_h12
            diag[-1, :] += a1_r[-1, :] * inv_h12
        else:
            meta["a_edges"] = (a1_l[0, :].copy(), a1_r[-1, :].copy())
        # clamp: affine filled by attach_clamp_values; matrix just drops links
        add(idx[1:, :], idx[:-1, :], a1_l[1:, :] * inv_h12)
        add(idx[:-1, :], idx[1:, :], a1_r[:-1, :] * inv_h12)
    else:
        add(idx, np.roll(idx, 1, axis=0), a1_l * inv_h12)
        add(idx, np.roll(idx, -1, axis=0), a1_r * inv_h12)
    add(idx, np.roll(idx, 1, axis=1), a2_l * inv_h2sq)
    add(idx, np.roll(idx, -1, axis=1), a2_r * inv_h2sq)
    add(idx, idx, diag)
    mat = sp.csr_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=(n1 * n2, n1 * n2),
    )
    return DiscreteOperator(
        grid=grid,
        matrix=mat,
        periodic=not windowed,
        boundary_affine=np.zeros(n1 * n2) if windowed and boundary == CLAMP else None,
        meta=meta,
    )


def attach_clamp_values(op, left_value, right_values):
    """Fill the affine flux vector of a clamped-window operator.

    left_value is the scalar clamped at the virtual node before the window,
    right_values the steady-state samples at the virtual node after it
    (scalar in 1-D, one value per transverse node in 2-D).
    """
    grid = op.grid
    if not isinstance(grid, LineGrid) or grid.boundary != CLAMP:
        raise ValueError("operator is not on a clamped window")
    h = grid.spacing
    a_lo, a_hi = op.meta["a_edges"]
    if grid.transverse is None:
        affine = np.zeros(grid.n_nodes)
        affine[0] = a_lo / h**2 * left_value
        affine[-1] = a_hi / h**2 * float(right_values)
        op.boundary_affine = affine
        return op
    n2 = grid.transverse.n_points[0]
    affine = np.zeros((grid.n_nodes, n2))
    affine[0, :] = a_lo / h**2 * left_value
    affine[-1, :] = a_hi / h**2 * np.asarray(right_values, float)
    op.boundary_affine = affine.ravel()
    return op


def assemble_twisted(grid, medium, lam, c, t=None):
    """Matrix of the exponentially twisted linearization (negated form).

    Realizes -(div(A grad .) + 2*lam*a1*d/dx1 + [lam*da1/dx1 + lam^2*a1
    - lam*c + f_u(x,0)] .) on a periodic cell; first-order terms and the
    coefficient derivative use centered differences.
    """
    if not isinstance(grid, PeriodicGrid):
        raise IncompatibleGrid("twisted operators live on the periodic cell")
    if lam < 0:
        raise ValueError("decay rate must be nonnegative")
    _check_spacing(grid, medium)
    tt = 0.0 if t is None else t
    if grid.dimension == 1:
        n = grid.n_points[0]
        h = grid.spacing[0]
        x = grid.axis_nodes(0)
        a_node = np.broadcast_to(medium.diffusion.value(0, (x,), tt), (n,)).copy()
        a_left = np.broadcast_to(medium.diffusion.value(0, (x - 0.5 * h,), tt), (n,)).copy()
        a_right = np.broadcast_to(medium.diffusion.value(0, (x + 0.5 * h,), tt), (n,)).copy()
        da = (
            np.broadcast_to(medium.diffusion.value(0, (x + h,), tt), (n,))
            - np.broadcast_to(medium.diffusion.value(0, (x - h,), tt), (n,))
        ) / (2.0 * h)
        fu0 = np.broadcast_to(medium.fu((x,), 0.0, tt), (n,)).copy()
        inv_h2 = 1.0 / (h * h)
        adv = lam * a_node / h  # centered first difference of 2*lam*a*d/dx
        lower = -(a_left * inv_h2) + adv
        upper = -(a_right * inv_h2) - adv
        _peclet_guard(a_left, a_right, adv, inv_h2)
        zero_order = lam * da + lam * lam * a_node - lam * c + fu0
        diagv = (a_left + a_right) * inv_h2 - zero_order
        return DiscreteOperator(
            grid=grid,
            lower=lower,
            diag=diagv,
            upper=upper,
            periodic=True,
            meta={"kind": "twisted", "lam": lam, "c": c, "t": t, "medium": medium.name},
        )
    # 2-D periodic cell, propagation along axis 0
    n1, n2 = grid.n_points
    h1, h2 = grid.spacing
    X1, X2 = grid.coords()
    div = _divergence_2d(grid, medium, t)
    a1 = np.broadcast_to(medium.diffusion.value(0, (X1, X2), tt), (n1, n2))
    da1 = (
        np.broadcast_to(medium.diffusion.value(0, (X1 + h1, X2), tt), (n1, n2))
        - np.broadcast_to(medium.diffusion.value(0, (X1 - h1, X2), tt), (n1, n2))
    ) / (2.0 * h1)
    fu0 = np.broadcast_to(medium.fu((X1, X2), 0.0, tt), (n1, n2))
    idx = np.arange(n1 * n2).reshape(n1, n2)
    adv = lam * a1 / h1
    rows = np.concatenate([idx.ravel(), idx.ravel()])
    cols = np.concatenate([np.roll(idx, -1, axis=0).ravel(), np.roll(idx, 1, axis=0).ravel()])
    vals = np.concatenate([adv.ravel(), -adv.ravel()])
    first_order = sp.csr_matrix((vals, (rows, cols)), shape=(n1 * n2, n1 * n2))
    zero_order = lam * da1 + lam * lam * a1 - lam * c + fu0
    mat = -(div.matrix + first_order + sp.diags(zero_order.ravel()))
    return DiscreteOperator(
        grid=grid,
        matrix=mat.tocsr(),
        periodic=True,
        meta={"kind": "twisted", "lam": lam, "c": c, "t": t, "medium": medium.name},
    )


def _peclet_guard(a_left, a_right, adv, inv_h2):
    # keeps the negated matrix Metzler so Perron iteration applies
    if np.any(a_left * inv_h2 - adv < 0) or np.any(a_right * inv_h2 - adv < 0):
        raise IncompatibleGrid(
            "advection overwhelms the stencil (cell Peclet >= 2); refine the grid "
            "or reduce the decay rate"
        )


def export_dense(op):
    """Dense copy for brute-force oracles; refuses oversized operators."""
    n = op.n_rows
    if n > DENSE_ROW_CAP:
        raise TooLarge(f"{n} rows exceeds the dense cap {DENSE_ROW_CAP}")
    if not op.is_banded:
        return op.matrix.toarray()
    dense = np.zeros((n, n))
    dense[np.arange(n), np.arange(n)] = op.diag
    dense[np.arange(1, n), np.arange(n - 1)] = op.lower[1:]
    dense[np.arange(n - 1), np.arange(1, n)] = op.upper[:-1]
    if op.periodic:
        dense[0, n - 1] += op.lower[0]
        dense[n - 1, 0] += op.upper[-1]
    return dense


def dump_coo(op, path):
    """Write (row, col, value) triplets, 17 significant digits, LF endings."""
    if op.is_banded:
        n = op.n_rows
        rows, cols, vals = [], [], []
        for i in range(n):
            rows.append(i), cols.append(i), vals.append(op.diag[i])
            if i > 0 or op.periodic:
                rows.append(i), cols.append((i - 1) % n), vals.append(op.lower[i])
            if i < n - 1 or op.periodic:
                rows.append(i), cols.append((i + 1) % n), vals.append(op.upper[i])
    else:
        coo = op.matrix.tocoo()
        rows, cols, vals = coo.row, coo.col, coo.data
    with open(path, "w", newline="\n") as fh:
        for r, c, v in zip(rows, cols, vals):
            fh.write(f"{int(r)} {int(c)} {fmt(float(v))}\n")
