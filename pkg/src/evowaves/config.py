"""Scenario files: a small key-value tree that builds a solvable problem.

The format is deliberately plain so runs are reproducible from a single
text file:

    # comment
    [section]
    key = value            # scalar
    key = v0 v1 v2 ...     # whitespace-separated array

Sections: grid, space, material, boundary, source, output.  Parsing is
strict: unknown sections or keys, duplicates, and malformed values are
rejected with the offending line number.  `Scenario.dump()` emits a
canonical text that re-parses to an equivalent scenario (the config
round-trip used by --dump-config).

Complex data enters as separate real/imaginary arrays: the instantaneous
material matrix is row-major 2x2 (`m0_re`/`m0_im`), memory-kernel pole
and residue lists are flat arrays with one row-major 2x2 block per pole.
The boundary kernel is scalar; `robin_k = <k>` is shorthand for the
proportional kernel g(z) = k z with the normal spatial profile.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .material import MaterialLaw, select_rho
from .rational import RationalMatrixFunction, scalar_rational
from .signals import WeightedGrid, WeightedSignal, read_signal_csv
from .solver import EvoProblem
from .spatial import BoundaryLaw, SpatialDiscretization, build_grid
from .verify import ALL_CHECKS

__all__ = ["ConfigError", "Scenario", "parse_scenario", "load_scenario"]


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        prefix = f"line {line}: " if line is not None else ""
        super().__init__(prefix + message)


_KNOWN_KEYS = {
    "grid": {"t0", "dt", "window", "n", "rho"},
    "space": {"length", "cells"},
    "material": {
        "r",
        "m0_re",
        "m0_im",
        "m1_const_re",
        "m1_const_im",
        "m1_lin_re",
        "m1_lin_im",
        "m1_poles_re",
        "m1_poles_im",
        "m1_res_re",
        "m1_res_im",
    },
    "boundary": {
        "robin_k",
        "g_const_re",
        "g_const_im",
        "g_lin_re",
        "g_lin_im",
        "g_poles_re",
        "g_poles_im",
        "g_res_re",
        "g_res_im",
        "alpha",
        "r",
    },
    "source": {
        "kind",
        "component",
        "amplitude",
        "t_center",
        "t_width",
        "x_center",
        "x_width",
        "path",
    },
    "output": {"checks"},
}


def _tokenize(text: str) -> dict[str, dict[str, tuple[str, int]]]:
    """Split into sections of key -> (raw value, line number)."""
    sections: dict[str, dict[str, tuple[str, int]]] = {}
    current: str | None = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if line.startswith("[") and line.endswith("]"):
            name = line[1:-1].strip()
            if name not in _KNOWN_KEYS:
                raise ConfigError(f"unknown section [{name}]", lineno)
            if name in sections:
                raise ConfigError(f"duplicate section [{name}]", lineno)
            sections[name] = {}
            current = name
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        if current is None:
            raise ConfigError("key outside any [section]", lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        if key not in _KNOWN_KEYS[current]:
            raise ConfigError(f"unknown key {key!r} in section [{current}]", lineno)
        if key in sections[current]:
            raise ConfigError(f"duplicate key {key!r} in section [{current}]", lineno)
        if not value:
            raise ConfigError(f"empty value for {key!r}", lineno)
        sections[current][key] = (value, lineno)
    return sections


class _Section:
    def __init__(self, name: str, data: dict[str, tuple[str, int]]):
        self.name = name
        self.data = data

    def has(self, key: str) -> bool:
        return key in self.data

    def _raw(self, key: str) -> tuple[str, int]:
        if key not in self.data:
            raise ConfigError(f"missing key {key!r} in section [{self.name}]")
        return self.data[key]

    def string(self, key: str, default: str | None = None) -> str:
        if not self.has(key):
            if default is None:
                self._raw(key)
            return default
        return self._raw(key)[0]

    def number(self, key: str, default: float | None = None) -> float:
        if not self.has(key) and default is not None:
            return default
        value, line = self._raw(key)
        try:
            return float(value)
        except ValueError:
            raise ConfigError(f"{key} must be a number, got {value!r}", line) from None

    def integer(self, key: str) -> int:
        value, line = self._raw(key)
        try:
            return int(value)
        except ValueError:
            raise ConfigError(f"{key} must be an integer, got {value!r}", line) from None

    def array(self, key: str, default: list[float] | None = None) -> np.ndarray:
        if not self.has(key) and default is not None:
            return np.asarray(default, dtype=float)
        value, line = self._raw(key)
        try:
            return np.asarray([float(tok) for tok in value.split()], dtype=float)
        except ValueError:
            raise ConfigError(f"{key} must be a list of numbers, got {value!r}", line) from None

    def line_of(self, key: str) -> int | None:
        return self.data[key][1] if key in self.data else None


def _complex_matrix(sec: _Section, stem: str, required: bool) -> np.ndarray | None:
    if not sec.has(f"{stem}_re") and not sec.has(f"{stem}_im"):
        if required:
            raise ConfigError(f"missing key {stem}_re in section [{sec.name}]")
        return None
    re = sec.array(f"{stem}_re", default=[0.0, 0.0, 0.0, 0.0])
    im = sec.array(f"{stem}_im", default=[0.0, 0.0, 0.0, 0.0])
    if re.size != 4 or im.size != 4:
        raise ConfigError(
            f"{stem}_re/_im must be row-major 2x2 (4 numbers)", sec.line_of(f"{stem}_re")
        )
    return (re + 1j * im).reshape(2, 2)


@dataclass(frozen=True)
class Scenario:
    """Parsed scenario; `build()` turns it into a solvable problem."""

    t0: float
    dt: float
    n: int
    rho: float | str            # number or "auto"
    length: float
    cells: int
    material_r: float
    m0: np.ndarray
    m1: RationalMatrixFunction
    boundary_r: float
    robin_k: float | None
    g: RationalMatrixFunction | None
    alpha_spec: str
    source_kind: str
    source_component: str
    amplitude: float
    t_center: float
    t_width: float
    x_center: float
    x_width: float
    source_path: str | None
    checks: tuple[str, ...]

    def boundary_law(self, sd: SpatialDiscretization) -> BoundaryLaw:
        if self.alpha_spec == "normal":
            alpha, div_alpha = BoundaryLaw.normal_profile(sd)
        else:
            value = float(self.alpha_spec.split(":", 1)[1])
            alpha = np.full(sd.n_faces, value)
            div_alpha = np.zeros(sd.n_cells)
        g = scalar_rational(lin=self.robin_k) if self.g is None else self.g
        return BoundaryLaw(g, alpha, div_alpha, self.boundary_r)

    def material_law(self) -> MaterialLaw:
        return MaterialLaw(self.m0, self.m1, self.material_r)

    def resolve_rho(self) -> float:
        if self.rho == "auto":
            law = self.material_law()
            return select_rho(law, min(self.material_r, self.boundary_r))
        return float(self.rho)

    def source_signal(self, grid: WeightedGrid, sd: SpatialDiscretization) -> WeightedSignal:
        n_red = sd.n_reduced
        if self.source_kind == "csv":
            return read_signal_csv(self.source_path, grid)
        t = grid.times
        wt = self.amplitude * np.exp(-(((t - self.t_center) / self.t_width) ** 2))
        gp = np.exp(-(((sd.cell_x - self.x_center) / self.x_width) ** 2))
        gv = np.exp(-(((sd.face_x[1:-1] - self.x_center) / self.x_width) ** 2))
        vals = np.zeros((grid.n, n_red), dtype=complex)
        if self.source_kind == "rightward":
            vals[:, : sd.n_cells] = wt[:, None] * gp[None, :]
            vals[:, sd.n_cells :] = wt[:, None] * gv[None, :]
        elif self.source_component == "p":
            vals[:, : sd.n_cells] = wt[:, None] * gp[None, :]
        else:
            vals[:, sd.n_cells :] = wt[:, None] * gv[None, :]
        return WeightedSignal(grid, vals)

    def build(self) -> EvoProblem:
        sd = build_grid(self.length, self.cells)
        rho = self.resolve_rho()
        grid = WeightedGrid(self.t0, self.dt, self.n, rho)
        law = self.material_law()
        bl = self.boundary_law(sd)
        f = self.source_signal(grid, sd)
        return EvoProblem(grid, sd, law, bl, f)

    def dump(self) -> str:
        def fmt(x: float) -> str:
            return f"{x:.17g}"

        def fmt_list(arr: np.ndarray) -> str:
            return " ".join(fmt(float(v)) for v in np.asarray(arr).reshape(-1))

        lines = ["[grid]"]
        lines.append(f"t0 = {fmt(self.t0)}")
        lines.append(f"dt = {fmt(self.dt)}")
        lines.append(f"n = {self.n}")
        lines.append(f"rho = {self.rho if self.rho == 'auto' else fmt(float(self.rho))}")
        lines += ["", "[space]", f"length = {fmt(self.length)}", f"cells = {self.cells}"]
        lines += ["", "[material]", f"r = {fmt(self.material_r)}"]
        lines.append(f"m0_re = {fmt_list(self.m0.real)}")
        lines.append(f"m0_im = {fmt_list(self.m0.imag)}")
        if np.abs(self.m1.const).max(initial=0.0) > 0:
            lines.append(f"m1_const_re = {fmt_list(self.m1.const.real)}")
            lines.append(f"m1_const_im = {fmt_list(self.m1.const.imag)}")
        if np.abs(self.m1.lin).max(initial=0.0) > 0:
            lines.append(f"m1_lin_re = {fmt_list(self.m1.lin.real)}")
            lines.append(f"m1_lin_im = {fmt_list(self.m1.lin.imag)}")
        if self.m1.n_poles:
            lines.append(f"m1_poles_re = {fmt_list(self.m1.poles.real)}")
            lines.append(f"m1_poles_im = {fmt_list(self.m1.poles.imag)}")
            lines.append(f"m1_res_re = {fmt_list(self.m1.residues.real)}")
            lines.append(f"m1_res_im = {fmt_list(self.m1.residues.imag)}")
        lines += ["", "[boundary]", f"r = {fmt(self.boundary_r)}", f"alpha = {self.alpha_spec}"]
        if self.g is None:
            lines.append(f"robin_k = {fmt(self.robin_k)}")
        else:
            lines.append(f"g_const_re = {fmt(float(self.g.const[0, 0].real))}")
            lines.append(f"g_const_im = {fmt(float(self.g.const[0, 0].imag))}")
            lines.append(f"g_lin_re = {fmt(float(self.g.lin[0, 0].real))}")
            lines.append(f"g_lin_im = {fmt(float(self.g.lin[0, 0].imag))}")
            if self.g.n_poles:
                lines.append(f"g_poles_re = {fmt_list(self.g.poles.real)}")
                lines.append(f"g_poles_im = {fmt_list(self.g.poles.imag)}")
                lines.append(f"g_res_re = {fmt_list(self.g.residues.real)}")
                lines.append(f"g_res_im = {fmt_list(self.g.residues.imag)}")
        lines += ["", "[source]", f"kind = {self.source_kind}"]
        if self.source_kind == "csv":
            lines.append(f"path = {self.source_path}")
        else:
            if self.source_kind == "gaussian":
                lines.append(f"component = {self.source_component}")
            lines.append(f"amplitude = {fmt(self.amplitude)}")
            lines.append(f"t_center = {fmt(self.t_center)}")
            lines.append(f"t_width = {fmt(self.t_width)}")
            lines.append(f"x_center = {fmt(self.x_center)}")
            lines.append(f"x_width = {fmt(self.x_width)}")
        checks_text = " ".join(self.checks) if self.checks else "none"
        lines += ["", "[output]", f"checks = {checks_text}"]
        return "\n".join(lines) + "\n"


def parse_scenario(text: str) -> Scenario:
    sections = _tokenize(text)

    def section(name: str, required: bool = True) -> _Section:
        if name not in sections:
            if required:
                raise ConfigError(f"missing section [{name}]")
            return _Section(name, {})
        return _Section(name, sections[name])

    grid = section("grid")
    t0 = grid.number("t0")
    n = grid.integer("n")
    if n < 2:
        raise ConfigError("n must be at least 2", grid.line_of("n"))
    if grid.has("dt") and grid.has("window"):
        raise ConfigError("give either dt or window, not both", grid.line_of("window"))
    if grid.has("dt"):
        dt = grid.number("dt")
    elif grid.has("window"):
        dt = grid.number("window") / n
    else:
        raise ConfigError("grid needs dt or window")
    if dt <= 0:
        raise ConfigError("dt must be positive", grid.line_of("dt") or grid.line_of("window"))
    rho_raw = grid.string("rho", default="auto")
    rho: float | str
    if rho_raw == "auto":
        rho = "auto"
    else:
        try:
            rho = float(rho_raw)
        except ValueError:
            raise ConfigError(
                f"rho must be a number or 'auto', got {rho_raw!r}", grid.line_of("rho")
            ) from None
        if rho <= 0:
            raise ConfigError("rho must be positive", grid.line_of("rho"))

    space = section("space")
    length = space.number("length")
    cells = space.integer("cells")
    if cells < 4:
        raise ConfigError("need at least 4 cells", space.line_of("cells"))

    mat = section("material")
    material_r = mat.number("r", default=1.0)
    m0 = _complex_matrix(mat, "m0", required=True)
    m1_const = _complex_matrix(mat, "m1_const", required=False)
    m1_lin = _complex_matrix(mat, "m1_lin", required=False)
    poles_re = mat.array("m1_poles_re", default=[])
    poles_im = mat.array("m1_poles_im", default=[0.0] * poles_re.size)
    if poles_im.size != poles_re.size:
        raise ConfigError("m1_poles_im length mismatch", mat.line_of("m1_poles_im"))
    poles = poles_re + 1j * poles_im
    if poles.size:
        res_re = mat.array("m1_res_re")
        res_im = mat.array("m1_res_im", default=[0.0] * res_re.size)
        if res_re.size != 4 * poles.size or res_im.size != res_re.size:
            raise ConfigError(
                "m1_res_re/_im must hold one row-major 2x2 block per pole",
                mat.line_of("m1_res_re"),
            )
        residues = (res_re + 1j * res_im).reshape(poles.size, 2, 2)
    else:
        residues = np.zeros((0, 2, 2), dtype=complex)
    zeros = np.zeros((2, 2), dtype=complex)
    try:
        m1 = RationalMatrixFunction(
            m1_const if m1_const is not None else zeros,
            m1_lin if m1_lin is not None else zeros,
            poles,
            residues,
        )
        m1.check_holomorphic(material_r)
    except ValueError as exc:
        raise ConfigError(f"invalid material memory kernel: {exc}", mat.line_of("m1_poles_re"))

    bnd = section("boundary")
    boundary_r = bnd.number("r", default=material_r)
    alpha_spec = bnd.string("alpha", default="normal")
    if alpha_spec != "normal":
        parts = alpha_spec.split(":")
        if len(parts) != 2 or parts[0] != "constant":
            raise ConfigError(
                f"alpha must be 'normal' or 'constant:<value>', got {alpha_spec!r}",
                bnd.line_of("alpha"),
            )
        try:
            float(parts[1])
        except ValueError:
            raise ConfigError(f"bad alpha value {parts[1]!r}", bnd.line_of("alpha")) from None
    has_g = any(bnd.has(k) for k in ("g_const_re", "g_lin_re", "g_poles_re"))
    robin_k: float | None = None
    g: RationalMatrixFunction | None = None
    if bnd.has("robin_k") and has_g:
        raise ConfigError(
            "give either robin_k or the g_* kernel, not both", bnd.line_of("robin_k")
        )
    if bnd.has("robin_k"):
        robin_k = bnd.number("robin_k")
    elif has_g:
        g_poles_re = bnd.array("g_poles_re", default=[])
        g_poles_im = bnd.array("g_poles_im", default=[0.0] * g_poles_re.size)
        if g_poles_im.size != g_poles_re.size:
            raise ConfigError("g_poles_im length mismatch", bnd.line_of("g_poles_im"))
        g_poles = g_poles_re + 1j * g_poles_im
        g_res_re = bnd.array("g_res_re", default=[0.0] * g_poles.size)
        g_res_im = bnd.array("g_res_im", default=[0.0] * g_poles.size)
        if g_res_re.size != g_poles.size or g_res_im.size != g_poles.size:
            raise ConfigError("g_res_re/_im must match the pole count", bnd.line_of("g_res_re"))
        try:
            g = scalar_rational(
                const=complex(bnd.number("g_const_re", 0.0), bnd.number("g_const_im", 0.0)),
                lin=complex(bnd.number("g_lin_re", 0.0), bnd.number("g_lin_im", 0.0)),
                poles=g_poles,
                residues=g_res_re + 1j * g_res_im,
            )
            g.check_holomorphic(boundary_r)
        except ValueError as exc:
            raise ConfigError(f"invalid boundary kernel: {exc}", bnd.line_of("g_poles_re"))
    else:
        robin_k = 0.0  # no boundary keys: vanishing normal velocity

    src = section("source")
    kind = src.string("kind")
    if kind not in ("gaussian", "rightward", "csv"):
        raise ConfigError(f"unknown source kind {kind!r}", src.line_of("kind"))
    component = src.string("component", default="p")
    if component not in ("p", "v"):
        raise ConfigError(f"source component must be p or v, got {component!r}", src.line_of("component"))
    path = src.string("path", default="") or None
    if kind == "csv" and path is None:
        raise ConfigError("csv source needs a path", src.line_of("kind"))
    amplitude = src.number("amplitude", default=1.0)
    t_center = src.number("t_center", default=0.0)
    t_width = src.number("t_width", default=1.0)
    x_center = src.number("x_center", default=0.5 * length)
    x_width = src.number("x_width", default=0.1 * length)
    if kind != "csv" and (t_width <= 0 or x_width <= 0):
        raise ConfigError("pulse widths must be positive", src.line_of("t_width"))

    out = section("output", required=False)
    if out.has("checks"):
        raw_checks = out.string("checks")
        if raw_checks == "none":
            checks: tuple[str, ...] = ()
        else:
            checks = tuple(raw_checks.split())
            for name in checks:
                if name not in ALL_CHECKS:
                    raise ConfigError(
                        f"unknown check {name!r}; available: {', '.join(ALL_CHECKS)}",
                        out.line_of("checks"),
                    )
    else:
        checks = tuple(ALL_CHECKS)

    return Scenario(
        t0=t0,
        dt=dt,
        n=n,
        rho=rho,
        length=length,
        cells=cells,
        material_r=material_r,
        m0=m0,
        m1=m1,
        boundary_r=boundary_r,
        robin_k=robin_k,
        g=g,
        alpha_spec=alpha_spec,
        source_kind=kind,
        source_component=component,
        amplitude=amplitude,
        t_center=t_center,
        t_width=t_width,
        x_center=x_center,
        x_width=x_width,
        source_path=path,
        checks=checks,
    )


def load_scenario(path: str) -> Scenario:
    with open(path) as fh:
        return parse_scenario(fh.read())
