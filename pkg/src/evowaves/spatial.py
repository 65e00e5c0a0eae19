"""Staggered 1D discretization of the acoustic spatial operator.

Pressure lives at cell centers x_c = (c + 1/2) dx, velocity at faces
x_f = f dx, f = 0..n_cells.  The divergence (faces -> cells) and gradient
(cells -> faces) matrices are second-order centered; the gradient rows at
the two boundary faces are zero, which makes the summation-by-parts
identity

    W_cell @ D_div + D_grad.T @ W_face = B

hold exactly with B supported on the two corner entries (boundary cell,
boundary face) with values -1 and +1: the discrete version of
"volume terms integrate to a boundary flux".

The boundary law couples pressure and normal velocity through a scalar
rational kernel g and a spatial profile alpha living on faces:

    (outward normal velocity) = flux_symbol(s) * (n . alpha) * (boundary pressure)

per frequency, where flux_symbol(s) = (i s + rho) * g(1/(i s + rho)).
Eliminating the two boundary-face velocities with this relation (boundary
pressure taken from the adjacent cell) keeps the reduced operator square
and makes the Robin case g(z) = k z exact: its flux symbol is the
constant k.  The elimination also makes the reduced adjoint equal to the
per-frequency conjugate transpose, which the assembly verifies.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .rational import PoleError, RationalMatrixFunction, scalar_rational, scalar_values
from .signals import WeightedSignal
from .transform import SpectralSignal, forward_transform, inverse_transform

__all__ = [
    "SpatialDiscretization",
    "build_grid",
    "BoundaryLaw",
    "assemble_spatial_op",
    "assemble_spatial_op_adjoint",
    "apply_spatial_op_freq",
    "apply_spatial_op_adjoint_freq",
    "apply_spatial_op_time",
    "boundary_sign_functional",
    "cell_to_face",
    "face_to_cell",
    "split_stacked",
    "stack_reduced",
]


@dataclass(frozen=True)
class SpatialDiscretization:
    """Staggered grid on (0, length) with n_cells pressure cells."""

    length: float
    n_cells: int
    dx: float = field(init=False)

    def __post_init__(self) -> None:
        if not self.length > 0:
            raise ValueError(f"domain length must be positive, got {self.length}")
        if self.n_cells < 4:
            raise ValueError(f"need at least 4 cells, got {self.n_cells}")
        object.__setattr__(self, "dx", self.length / self.n_cells)

    @property
    def n_faces(self) -> int:
        return self.n_cells + 1

    @property
    def cell_x(self) -> np.ndarray:
        return (np.arange(self.n_cells) + 0.5) * self.dx

    @property
    def face_x(self) -> np.ndarray:
        return np.arange(self.n_faces) * self.dx

    @property
    def n_reduced(self) -> int:
        """Cells plus interior faces: the two boundary faces are eliminated."""
        return self.n_cells + self.n_faces - 2

    # dense operators (assembled on demand; the hot paths use slicing)

    def d_div(self) -> np.ndarray:
        """(n_cells, n_faces) centered divergence, exact order 2 everywhere."""
        m = np.zeros((self.n_cells, self.n_faces))
        idx = np.arange(self.n_cells)
        m[idx, idx] = -1.0 / self.dx
        m[idx, idx + 1] = 1.0 / self.dx
        return m

    def d_grad(self) -> np.ndarray:
        """(n_faces, n_cells) centered gradient; boundary-face rows are zero."""
        m = np.zeros((self.n_faces, self.n_cells))
        idx = np.arange(1, self.n_cells)
        m[idx, idx - 1] = -1.0 / self.dx
        m[idx, idx] = 1.0 / self.dx
        return m

    def w_cell(self) -> np.ndarray:
        return np.full(self.n_cells, self.dx)

    def w_face(self) -> np.ndarray:
        w = np.full(self.n_faces, self.dx)
        w[0] = w[-1] = 0.5 * self.dx
        return w

    def boundary_matrix(self) -> np.ndarray:
        """The corner flux matrix B in the summation-by-parts identity."""
        b = np.zeros((self.n_cells, self.n_faces))
        b[0, 0] = -1.0
        b[-1, -1] = 1.0
        return b

    def sbp_residual(self) -> float:
        lhs = self.w_cell()[:, None] * self.d_div() + self.d_grad().T * self.w_face()[None, :]
        return float(np.abs(lhs - self.boundary_matrix()).max())


def build_grid(length: float, n_cells: int) -> SpatialDiscretization:
    """Build the staggered discretization and verify the SBP identity."""
    sd = SpatialDiscretization(length, n_cells)
    res = sd.sbp_residual()
    if res > 1e-13:
        raise AssertionError(f"summation-by-parts identity violated: residual {res:.3e}")
    return sd


def cell_to_face(sd: SpatialDiscretization, q: np.ndarray) -> np.ndarray:
    """Average cell values to faces (copy at the two boundary faces).

    The boundary copy is first order, deliberately: it keeps boundary
    quadratic forms perfect squares, which the sign checks rely on.
    """
    q = np.asarray(q)
    out = np.empty(q.shape[:-1] + (sd.n_faces,), dtype=q.dtype)
    out[..., 1:-1] = 0.5 * (q[..., 1:] + q[..., :-1])
    out[..., 0] = q[..., 0]
    out[..., -1] = q[..., -1]
    return out


def face_to_cell(sd: SpatialDiscretization, w: np.ndarray) -> np.ndarray:
    w = np.asarray(w)
    return 0.5 * (w[..., 1:] + w[..., :-1])


@dataclass(frozen=True)
class BoundaryLaw:
    """Impedance-type boundary kernel g(z) with spatial profile alpha.

    alpha lives on velocity faces; div_alpha is its divergence on cells
    (supplied, so that analytic profiles keep their exact derivative).
    Admissibility (nonnegative real part of the flux symbol) is *not*
    enforced at construction: the verification suite must be able to build
    inadmissible laws to demonstrate that its sign check has power.
    """

    g: RationalMatrixFunction
    alpha: np.ndarray
    div_alpha: np.ndarray
    r: float

    def __post_init__(self) -> None:
        if self.g.dim != 1:
            raise ValueError("boundary kernel g must be scalar valued")
        if not self.r > 0:
            raise ValueError(f"holomorphy radius must be positive, got {self.r}")
        self.g.check_holomorphic(self.r)
        a = np.asarray(self.alpha, dtype=float)
        da = np.asarray(self.div_alpha, dtype=float)
        if a.ndim != 1 or da.ndim != 1 or a.size != da.size + 1:
            raise ValueError(
                "alpha must live on faces and div_alpha on cells "
                f"(got {a.shape} and {da.shape})"
            )
        a.setflags(write=False)
        da.setflags(write=False)
        object.__setattr__(self, "alpha", a)
        object.__setattr__(self, "div_alpha", da)

    @property
    def normal_alpha(self) -> tuple[float, float]:
        """Outward-normal component of alpha at the left and right ends."""
        return (-float(self.alpha[0]), float(self.alpha[-1]))

    def g_values(self, zs: np.ndarray) -> np.ndarray:
        return scalar_values(self.g, zs)

    def flux_symbol(self, s: np.ndarray, rho: float) -> np.ndarray:
        """(i s + rho) * g(1/(i s + rho)) on an array of frequencies."""
        w = 1j * np.asarray(s, dtype=float) + rho
        try:
            return w * self.g_values(1.0 / w)
        except PoleError as exc:
            raise PoleError(f"boundary kernel pole hit on the frequency grid: {exc}") from exc

    def min_real_flux(self, rho: float, n_samples: int = 1024) -> float:
        """Sampled min of Re flux_symbol; >= 0 is the frequency-domain sign condition."""
        theta = np.linspace(-np.pi / 2, np.pi / 2, n_samples + 2)[1:-1]
        s = rho * np.tan(theta)
        return float(self.flux_symbol(s, rho).real.min())

    @staticmethod
    def normal_profile(sd: SpatialDiscretization) -> tuple[np.ndarray, np.ndarray]:
        """The linear profile that equals the outward normal at both ends."""
        alpha = 2.0 * sd.face_x / sd.length - 1.0
        div_alpha = np.full(sd.n_cells, 2.0 / sd.length)
        return alpha, div_alpha

    @staticmethod
    def robin(k: float, sd: SpatialDiscretization, r: float = 1.0) -> "BoundaryLaw":
        """g(z) = k z with the normal profile: normal velocity = k * pressure."""
        alpha, div_alpha = BoundaryLaw.normal_profile(sd)
        return BoundaryLaw(scalar_rational(lin=k), alpha, div_alpha, r)

    @staticmethod
    def neumann(sd: SpatialDiscretization, r: float = 1.0) -> "BoundaryLaw":
        """g = 0: vanishing normal velocity on the boundary."""
        alpha, div_alpha = BoundaryLaw.normal_profile(sd)
        return BoundaryLaw(scalar_rational(), alpha, div_alpha, r)

    @staticmethod
    def from_flux_response(
        sd: SpatialDiscretization,
        const: float,
        poles_w: np.ndarray | list | None = None,
        residues_w: np.ndarray | list | None = None,
        r: float = 1.0,
    ) -> "BoundaryLaw":
        """Build g from the flux response c(w) = const + sum res/(w - pole).

        Specifying the boundary memory directly in the Laplace variable
        w = i s + rho is often more natural; this inverts the algebra
        c(w) = w g(1/w) back into the z-domain kernel
        g(z) = const*z + sum res * z^2 / (1 - pole z), expressed in
        partial fractions.
        """
        pw = np.asarray([] if poles_w is None else poles_w, dtype=complex)
        rw = np.asarray([] if residues_w is None else residues_w, dtype=complex)
        if pw.size != rw.size:
            raise ValueError("poles_w and residues_w must have equal length")
        if np.any(np.abs(pw) < 1e-12):
            raise ValueError("flux response poles must be away from w = 0")
        # c(w)/w has partial fractions: const*1 + sum_m [res_m/p_m * (1/(w-p_m) ... )];
        # substituting w = 1/z termwise:  res/(w - p) -> res*z/(1 - p z)
        #   = -(res/p) - (res/p^2)/(z - 1/p)     (checked in tests)
        g_const = complex(-np.sum(rw / pw)) if pw.size else 0.0
        g_lin = complex(const)
        g_poles = 1.0 / pw
        g_res = -rw / pw**2
        g = scalar_rational(const=g_const, lin=g_lin, poles=g_poles, residues=g_res)
        alpha, div_alpha = BoundaryLaw.normal_profile(sd)
        return BoundaryLaw(g, alpha, div_alpha, r)


def _corner_coefficients(
    sd: SpatialDiscretization, bl: BoundaryLaw, flux: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Diagonal corrections at the first/last pressure cell from elimination.

    Eliminating v at a boundary face through
    (n . v) = flux * (n . alpha) * p_cell adds +flux * (n.alpha) / dx to the
    matching diagonal entry of the pressure block, with the same sign at
    both ends (the outward normal absorbs the orientation).
    """
    a0, aL = bl.normal_alpha
    return flux * a0 / sd.dx, flux * aL / sd.dx


def assemble_spatial_op(
    sd: SpatialDiscretization, bl: BoundaryLaw, s: float, rho: float
) -> tuple[np.ndarray, tuple[complex, complex]]:
    """Dense reduced operator at one frequency, plus the elimination map.

    Layout: unknowns are [p (n_cells), v_interior (n_cells - 1)].  The
    returned elimination pair (e0, eL) reconstructs the boundary-face
    velocities as v_0 = e0 * p_0 and v_last = eL * p_last (in x-components).
    """
    flux = complex(bl.flux_symbol(np.asarray([s]), rho)[0])
    nc = sd.n_cells
    dim = sd.n_reduced
    mat = np.zeros((dim, dim), dtype=complex)
    inv_dx = 1.0 / sd.dx
    # pressure rows: divergence of [v_0, v_int, v_last] with eliminated ends
    idx = np.arange(nc)
    vcol = nc + np.arange(nc - 1)
    mat[idx[:-1], vcol] += inv_dx        # cell c gets +v_{c+1}/dx
    mat[idx[1:], vcol] -= inv_dx         # cell c gets -v_c/dx
    c0, cL = _corner_coefficients(sd, bl, flux)
    mat[0, 0] += c0
    mat[nc - 1, nc - 1] += cL
    # interior-face velocity rows: gradient of p
    mat[vcol, idx[1:]] += inv_dx
    mat[vcol, idx[:-1]] -= inv_dx
    a0, aL = bl.normal_alpha
    elim = (-flux * a0, flux * aL)
    return mat, elim


def assemble_spatial_op_adjoint(
    sd: SpatialDiscretization, bl: BoundaryLaw, s: float, rho: float
) -> np.ndarray:
    """Reduced adjoint at one frequency, by its own structural elimination.

    The adjoint flips the sign of the block operator and conjugates the
    boundary kernel; assembling it that way must reproduce the conjugate
    transpose of the forward matrix exactly, which is asserted here.
    """
    flux = complex(bl.flux_symbol(np.asarray([s]), rho)[0])
    nc = sd.n_cells
    dim = sd.n_reduced
    mat = np.zeros((dim, dim), dtype=complex)
    inv_dx = 1.0 / sd.dx
    idx = np.arange(nc)
    vcol = nc + np.arange(nc - 1)
    # adjoint boundary relation: (n . v) = -conj(flux) * (n . alpha) * p
    c0, cL = _corner_coefficients(sd, bl, np.conj(flux))
    mat[idx[:-1], vcol] -= inv_dx
    mat[idx[1:], vcol] += inv_dx
    mat[0, 0] += c0
    mat[nc - 1, nc - 1] += cL
    mat[vcol, idx[1:]] -= inv_dx
    mat[vcol, idx[:-1]] += inv_dx
    forward, _ = assemble_spatial_op(sd, bl, s, rho)
    defect = np.abs(mat - forward.conj().T).max()
    if defect > 1e-12 * max(1.0, np.abs(mat).max()):
        raise AssertionError(
            f"adjoint assembly does not match the conjugate transpose (defect {defect:.3e})"
        )
    return mat


def split_stacked(sd: SpatialDiscretization, values: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split (..., n_reduced) stacked values into pressure and interior velocity."""
    nc = sd.n_cells
    return values[..., :nc], values[..., nc:]


def stack_reduced(p: np.ndarray, v_int: np.ndarray) -> np.ndarray:
    return np.concatenate([p, v_int], axis=-1)


def apply_spatial_op_freq(
    sd: SpatialDiscretization,
    bl: BoundaryLaw,
    u_hat: np.ndarray,
    s: np.ndarray,
    rho: float,
) -> np.ndarray:
    """Vectorized reduced operator on (n_freq, n_reduced) spectral values."""
    flux = bl.flux_symbol(s, rho)
    p, v = split_stacked(sd, u_hat)
    a0, aL = bl.normal_alpha
    v0 = -flux * a0 * p[..., 0]
    vL = flux * aL * p[..., -1]
    v_full = np.concatenate([v0[..., None], v, vL[..., None]], axis=-1)
    out_p = (v_full[..., 1:] - v_full[..., :-1]) / sd.dx
    out_v = (p[..., 1:] - p[..., :-1]) / sd.dx
    return stack_reduced(out_p, out_v)


def apply_spatial_op_adjoint_freq(
    sd: SpatialDiscretization,
    bl: BoundaryLaw,
    u_hat: np.ndarray,
    s: np.ndarray,
    rho: float,
) -> np.ndarray:
    flux = np.conj(bl.flux_symbol(s, rho))
    p, v = split_stacked(sd, u_hat)
    a0, aL = bl.normal_alpha
    v0 = flux * a0 * p[..., 0]
    vL = -flux * aL * p[..., -1]
    v_full = np.concatenate([v0[..., None], v, vL[..., None]], axis=-1)
    out_p = -(v_full[..., 1:] - v_full[..., :-1]) / sd.dx
    out_v = -(p[..., 1:] - p[..., :-1]) / sd.dx
    return stack_reduced(out_p, out_v)


def apply_spatial_op_time(
    sd: SpatialDiscretization, bl: BoundaryLaw, u: WeightedSignal
) -> WeightedSignal:
    """Apply the spatial operator to a full stacked (p, v) signal.

    Input dim must be n_cells + n_faces.  The boundary faces are dropped,
    the reduced per-frequency operator applied, and the result re-stacked
    with zeros at the boundary faces (matching the zero gradient rows
    there).  For inputs that satisfy the boundary relation this equals the
    direct block application of divergence and gradient.
    """
    nc, nf = sd.n_cells, sd.n_faces
    if u.dim != nc + nf:
        raise ValueError(f"expected stacked dim {nc + nf}, got {u.dim}")
    u_hat = forward_transform(u)
    p = u_hat.values[:, :nc]
    v_int = u_hat.values[:, nc + 1 : nc + nf - 1]
    s = u_hat.freqs
    out_red = apply_spatial_op_freq(sd, bl, stack_reduced(p, v_int), s, u.grid.rho)
    out_p, out_v = split_stacked(sd, out_red)
    zeros = np.zeros((u.grid.n, 1), dtype=complex)
    full = np.concatenate([out_p, zeros, out_v, zeros], axis=1)
    spec = SpectralSignal(s, full, u_hat.rho)
    return inverse_transform(spec, u.grid)


def boundary_sign_functional(
    sd: SpatialDiscretization,
    bl: BoundaryLaw,
    p: WeightedSignal,
    cutoff: float = 0.0,
) -> float:
    """Discrete boundary sign functional truncated at the cutoff time.

    Evaluates Re of the time integral (weighted, over t <= cutoff) of

        <grad p | d/dt (a p)> + <p | div d/dt (a p)>

    with a = alpha * g as spatial/temporal kernel.  By the discrete
    integration-by-parts identity this collapses to boundary terms; a
    nonnegative value over a battery of trial pressures is the
    admissibility condition on the boundary law.
    """
    if p.dim != sd.n_cells:
        raise ValueError(f"pressure signal must have dim {sd.n_cells}, got {p.dim}")
    grid = p.grid
    p_hat = forward_transform(p)
    s = p_hat.freqs
    w = 1j * s + grid.rho
    g_vals = bl.g_values(1.0 / w)
    # d/dt (a p) per frequency: (i s + rho) * alpha * (g p interpolated to faces)
    q_hat = g_vals[:, None] * p_hat.values
    ap_faces = bl.alpha[None, :] * cell_to_face(sd, q_hat)
    dap_hat = w[:, None] * ap_faces
    dap = inverse_transform(SpectralSignal(s, dap_hat, grid.rho), grid).values
    p_vals = p.values

    grad_p = np.zeros((grid.n, sd.n_faces), dtype=complex)
    grad_p[:, 1:-1] = (p_vals[:, 1:] - p_vals[:, :-1]) / sd.dx
    div_dap = (dap[:, 1:] - dap[:, :-1]) / sd.dx

    term_face = np.sum(sd.w_face()[None, :] * np.conj(grad_p) * dap, axis=1)
    term_cell = np.sum(sd.w_cell()[None, :] * np.conj(p_vals) * div_dap, axis=1)
    integrand = term_face + term_cell

    wq = grid.weights() * (grid.times <= cutoff)
    return float(np.sum(wq * integrand).real)
