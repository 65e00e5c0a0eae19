import numpy as np
import pytest

from evowaves.material import MaterialLaw
from evowaves.rational import RationalMatrixFunction
from evowaves.signals import WeightedGrid, WeightedSignal
from evowaves.solver import EvoProblem
from evowaves.spatial import BoundaryLaw, build_grid
from evowaves.transform import SpectralSignal, frequencies_for, inverse_transform


def bump(t: np.ndarray, center: float, width: float) -> np.ndarray:
    """Gaussian envelope; effectively compactly supported for width << window."""
    return np.exp(-(((t - center) / width) ** 2))


def interior_signal(
    grid: WeightedGrid,
    dim: int = 1,
    seed: int | None = None,
    center: float | None = None,
    width: float | None = None,
) -> WeightedSignal:
    """Random smooth signal supported well inside the window.

    Band-limited via a Gaussian spectral profile (in the weighted
    representation, which is what the discrete operators act on), then
    enveloped so both window edges are below 1e-12 of the peak.
    """
    rng = np.random.default_rng(seed)
    s = frequencies_for(grid)
    decay = np.exp(-((s / (0.15 * np.abs(s).max())) ** 2))
    coeff = rng.standard_normal((grid.n, dim)) + 1j * rng.standard_normal((grid.n, dim))
    u = inverse_transform(SpectralSignal(s, decay[:, None] * coeff, grid.rho), grid)
    w = grid.window_length
    center = grid.t0 + 0.45 * w if center is None else center
    width = 0.07 * w if width is None else width
    return u.with_values(u.values * bump(grid.times, center, width)[:, None])


def identity_law(dim: int = 2, r: float = 1.0) -> MaterialLaw:
    return MaterialLaw(np.eye(dim), RationalMatrixFunction.zero(dim), r=r)


def memory_law(
    m0=(1.5, 1.0), pole=-0.5, res=(0.2, 0.1), const=(0.1, 0.05), r: float = 1.0
) -> MaterialLaw:
    m1 = RationalMatrixFunction(
        const=np.diag(const).astype(complex),
        lin=np.zeros((2, 2)),
        poles=np.array([pole], dtype=complex),
        residues=np.diag(res).astype(complex)[None, :, :],
    )
    return MaterialLaw(np.diag(m0).astype(complex), m1, r=r)


def make_problem(
    n_cells: int = 32,
    n: int = 512,
    rho: float = 3.0,
    window: float = 16.0,
    t0_frac: float = -0.3,
    robin_k: float | None = 0.8,
    law: MaterialLaw | None = None,
    bl: BoundaryLaw | None = None,
    t_center: float = 1.0,
    t_width: float = 0.4,
    length: float = 1.0,
) -> EvoProblem:
    """Standard test problem: pressure pulse in a memory medium, Robin ends."""
    sd = build_grid(length, n_cells)
    grid = WeightedGrid(t0=t0_frac * window, dt=window / n, n=n, rho=rho)
    if law is None:
        law = memory_law()
    if bl is None:
        bl = BoundaryLaw.neumann(sd) if robin_k is None else BoundaryLaw.robin(robin_k, sd)
    t, x = grid.times, sd.cell_x
    fp = bump(t, t_center, t_width)[:, None] * bump(x, 0.5 * length, 0.12 * length)[None, :]
    f = WeightedSignal(grid, np.concatenate([fp, np.zeros((n, n_cells - 1))], axis=1))
    return EvoProblem(grid, sd, law, bl, f)


@pytest.fixture
def grid() -> WeightedGrid:
    return WeightedGrid(t0=-2.0, dt=0.01, n=1024, rho=2.0)


@pytest.fixture
def problem() -> EvoProblem:
    return make_problem()
