"""Experiment drivers: configuration, runners, and CSV/SVG output.

Each runner builds its problems from an ExperimentConfig, writes one CSV
(headed by a provenance comment with the config digest), and returns the
rows it wrote.  Identical configs produce byte-identical files: floats
are printed with 17 significant digits and every computation is
deterministic.
"""

from __future__ import annotations

import dataclasses
import hashlib
import math
import os
from dataclasses import dataclass, field

import numpy as np

from . import __version__, analytic, assembly, geometry, metrics, nonlinear, pml, svgplot


# ----------------------------------------------------------------------
# configuration
# ----------------------------------------------------------------------

EXPERIMENTS = ("solve", "convergence", "pollution", "pml-study", "newton-table",
               "bistability")


@dataclass
class ExperimentConfig:
    """One experiment run; defaults reproduce the two study setups."""

    experiment: str = "solve"
    # problem
    k: float = 10.0
    k_list: list = field(default_factory=lambda: [10.0, 50.0, 100.0])
    k_kerr: float | None = None
    epsilon: str = "k^-2"          # "k^-2" or a literal number
    sigma0: float = 4.0
    thickness: float = 1.0
    r0: float = 0.5
    big_r: float = 1.0
    incident: str = "bessel"       # bessel | plane
    amplitude: float = 1.0
    load: str = "manufactured"
    # discretization
    method: str = "cip"            # fem | cip
    base_h: float = 0.4
    level: int = 3
    levels: list = field(default_factory=lambda: [4, 5, 6])
    h_target: float | None = None
    # iteration / experiment
    scheme: str = "newton"
    tol: float = 1e-6
    max_iter: int | None = None
    amplitudes: list = field(default_factory=lambda: [200000.0, 310000.0, 5000.0])
    sigma0_list: list = field(default_factory=lambda: [0.5, 1.0, 2.0, 4.0])
    fine: bool = False
    out_dir: str = "out"
    seed: int = 0

    def digest(self) -> str:
        body = "\n".join(f"{f.name}={getattr(self, f.name)!r}"
                         for f in dataclasses.fields(self))
        return hashlib.sha256(body.encode()).hexdigest()[:12]

    def epsilon_value(self, k: float) -> float:
        rule = str(self.epsilon).strip()
        if rule == "k^-2":
            return k ** -2
        return float(rule)

    @property
    def r_hat(self) -> float:
        return self.big_r + self.thickness


def bistability_defaults(cfg: ExperimentConfig) -> ExperimentConfig:
    """Fill in the transmission-scattering setup used by the amplitude
    sweep and the iteration-order table, unless the user set values."""
    cfg = dataclasses.replace(cfg)
    cfg.k = 5.4
    if cfg.k_kerr is None:
        cfg.k_kerr = 3.5 * 5.4
    if str(cfg.epsilon) == "k^-2":
        cfg.epsilon = "1e-12"
    cfg.sigma0 = 10.0 if cfg.sigma0 == 4.0 else cfg.sigma0
    cfg.thickness = 0.25 if cfg.thickness == 1.0 else cfg.thickness
    cfg.incident = "plane"
    cfg.load = "transmission"
    if cfg.h_target is None:
        cfg.h_target = 0.00675 if cfg.fine else 0.0135
    return cfg


_SECTION_FIELDS = {
    "problem": {"k", "k_list", "k_kerr", "epsilon", "sigma0", "thickness", "r0",
                "big_r", "incident", "amplitude", "load"},
    "discretization": {"method", "base_h", "level", "levels", "h_target"},
    "experiment": {"experiment", "scheme", "tol", "max_iter", "amplitudes",
                   "sigma0_list", "fine", "out_dir", "seed"},
}


def _parse_value(name: str, raw: str):
    raw = raw.strip()
    if raw == "":
        return None
    if name in ("k_list", "levels", "sigma0_list", "amplitudes"):
        parts = [p for p in raw.replace(":", ",").split(",") if p.strip()]
        vals = [float(p) for p in parts]
        return [int(v) for v in vals] if name == "levels" else vals
    if name in ("incident", "load", "method", "scheme", "experiment", "out_dir", "epsilon"):
        return raw
    if name in ("level", "max_iter", "seed"):
        return int(raw)
    if name == "fine":
        return raw.lower() in ("1", "true", "yes", "on")
    return float(raw)


def read_config(path: str) -> ExperimentConfig:
    """Parse the flat key-value config file (INI sections)."""
    import configparser

    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    with open(path) as fh:
        parser.read_file(fh)
    cfg = ExperimentConfig()
    known = {name: section for section, names in _SECTION_FIELDS.items() for name in names}
    for section in parser.sections():
        if section not in _SECTION_FIELDS:
            raise ValueError(f"unknown config section [{section}]")
        for name, raw in parser.items(section):
            if name not in _SECTION_FIELDS[section]:
                raise ValueError(f"unknown key {name!r} in section [{section}] "
                                 f"(belongs in [{known.get(name, '?')}])")
            value = _parse_value(name, raw)
            if value is not None:
                setattr(cfg, name, value)
    return cfg


# ----------------------------------------------------------------------
# problem construction helpers
# ----------------------------------------------------------------------

_mesh_cache: dict = {}


def mesh_for(cfg: ExperimentConfig, level: int | None = None,
             h_target: float | None = None) -> geometry.Mesh:
    """Build (and memoize) a mesh: refinement chain from base_h, or direct."""
    radii = (cfg.r0, cfg.big_r, cfg.r_hat)
    if h_target is not None:
        key = ("direct", radii, h_target)
        if key not in _mesh_cache:
            _mesh_cache[key] = geometry.build_disk_mesh(radii, h_target)
        return _mesh_cache[key]
    level = cfg.level if level is None else level
    key = ("chain", radii, cfg.base_h, level)
    if key not in _mesh_cache:
        best = None
        for lev in range(level + 1):
            k2 = ("chain", radii, cfg.base_h, lev)
            if k2 in _mesh_cache:
                best = lev
        if best is None:
            _mesh_cache[("chain", radii, cfg.base_h, 0)] = \
                geometry.build_disk_mesh(radii, cfg.base_h)
            best = 0
        mesh = _mesh_cache[("chain", radii, cfg.base_h, best)]
        for lev in range(best + 1, level + 1):
            mesh = geometry.refine(mesh)
            _mesh_cache[("chain", radii, cfg.base_h, lev)] = mesh
    return _mesh_cache[key]


def build_problem(cfg: ExperimentConfig, k: float, mesh: geometry.Mesh,
                  method: str | None = None) -> assembly.NlhProblem:
    method = method or cfg.method
    if cfg.incident == "bessel":
        wave = analytic.IncidentWave.bessel(k)
    else:
        wave = analytic.IncidentWave.plane(cfg.amplitude, k)
    return assembly.NlhProblem(
        mesh=mesh,
        pml=pml.PmlProfile(cfg.sigma0, cfg.big_r, cfg.r_hat),
        wavenumber=assembly.Wavenumber(k, cfg.k_kerr),
        kerr_epsilon=cfg.epsilon_value(k),
        incident=wave,
        load=assembly.Load(cfg.load),
        penalty=assembly.penalty_gamma if method == "cip" else None,
    )


# ----------------------------------------------------------------------
# CSV output
# ----------------------------------------------------------------------

def _fmt_cell(v) -> str:
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.17g}"
    return str(v)


def write_csv(path: str, header, rows, cfg: ExperimentConfig, comments=()) -> None:
    lines = [f"# kerrhelm {__version__} experiment={cfg.experiment} config={cfg.digest()}"]
    lines += [f"# {c}" for c in comments]
    lines.append(",".join(header))
    lines += [",".join(_fmt_cell(v) for v in row) for row in rows]
    os.makedirs(os.path.dirname(path) or ".", exist_ok=True)
    with open(path, "w") as fh:
        fh.write("\n".join(lines) + "\n")


def _warn_lines(cfg: ExperimentConfig, k_values) -> list:
    out = []
    for k in k_values:
        report = pml.validate_params(k, pml.PmlProfile(cfg.sigma0, cfg.big_r, cfg.r_hat))
        if not report.passed:
            failed = ", ".join(c.name for c in report.checks if not c.satisfied)
            out.append(f"WARNING: layer-regime check failed at k={k:g}: {failed} "
                       "(sufficient condition only; run proceeds)")
    return out


# ----------------------------------------------------------------------
# runners
# ----------------------------------------------------------------------

def _solve_and_error(prob, cfg, k):
    exact = lambda p: analytic.exact_scattered(k, p)
    egrad = lambda p: analytic.exact_gradient(k, p)
    u, trace = nonlinear.solve_nlh(prob, scheme=cfg.scheme, tol=cfg.tol,
                                   max_iter=cfg.max_iter)
    rep = metrics.error_against_exact(prob, u, exact, egrad, "omega")
    return u, trace, rep


def run_convergence(cfg: ExperimentConfig) -> str:
    """Refinement ladder per wave number; FEM, CIP and interpolant errors."""
    rows = []
    for k in cfg.k_list:
        exact = lambda p: analytic.exact_scattered(k, p)
        egrad = lambda p: analytic.exact_gradient(k, p)
        for level in cfg.levels:
            mesh = mesh_for(cfg, level=level)
            for method in ("fem", "cip"):
                prob = build_problem(cfg, k, mesh, method=method)
                try:
                    u, trace, rep = _solve_and_error(prob, cfg, k)
                    rows.append((k, mesh.h_max, rep.dofs, method.upper(), rep.rel_h1,
                                 trace.steps, trace.converged))
                except RuntimeError as exc:
                    rows.append((k, mesh.h_max, prob.discretization.n, method.upper(),
                                 math.nan, None, False))
            prob = build_problem(cfg, k, mesh, method="fem")
            rep = metrics.interpolation_error(prob, exact, egrad, "omega")
            rows.append((k, mesh.h_max, rep.dofs, "INTERP", rep.rel_h1, None, None))
    path = os.path.join(cfg.out_dir, "convergence.csv")
    write_csv(path, ["k", "h", "dofs", "method", "rel_h1", "iterations", "converged"],
              rows, cfg, comments=_warn_lines(cfg, cfg.k_list))
    return path


def run_pollution(cfg: ExperimentConfig) -> str:
    """Fixed resolution k*h = pi/5 over an increasing wave-number list."""
    rows = []
    for k in cfg.k_list:
        h_t = math.pi / (5.0 * k) / 1.5     # build targets overshoot ~1.5x; h_max lands at pi/(5k)
        mesh = mesh_for(cfg, h_target=h_t)
        exact = lambda p: analytic.exact_scattered(k, p)
        egrad = lambda p: analytic.exact_gradient(k, p)
        for method in ("fem", "cip"):
            prob = build_problem(cfg, k, mesh, method=method)
            try:
                u, trace, rep = _solve_and_error(prob, cfg, k)
                rows.append((k, mesh.h_max, rep.dofs, method.upper(), rep.rel_h1,
                             trace.steps, trace.converged))
            except RuntimeError:
                rows.append((k, mesh.h_max, prob.discretization.n, method.upper(),
                             math.nan, None, False))
        prob = build_problem(cfg, k, mesh, method="fem")
        rep = metrics.interpolation_error(prob, exact, egrad, "omega")
        rows.append((k, mesh.h_max, rep.dofs, "INTERP", rep.rel_h1, None, None))
    path = os.path.join(cfg.out_dir, "pollution.csv")
    write_csv(path, ["k", "h", "dofs", "method", "rel_h1", "iterations", "converged"],
              rows, cfg, comments=_warn_lines(cfg, cfg.k_list))
    return path


def run_pml_study(cfg: ExperimentConfig) -> str:
    """Error against the reference field as the layer strength varies."""
    k = cfg.k
    mesh = mesh_for(cfg, level=cfg.level, h_target=cfg.h_target)
    rows = []
    for sigma0 in cfg.sigma0_list:
        sub = dataclasses.replace(cfg, sigma0=sigma0)
        prob = build_problem(sub, k, mesh)
        try:
            u, trace, rep = _solve_and_error(prob, sub, k)
            rows.append((sigma0, cfg.thickness, mesh.h_max, rep.rel_h1,
                         trace.steps, trace.converged))
        except RuntimeError:
            rows.append((sigma0, cfg.thickness, mesh.h_max, math.nan, None, False))
    path = os.path.join(cfg.out_dir, "pml_study.csv")
    write_csv(path, ["sigma0", "L", "h", "rel_h1", "iterations", "converged"], rows, cfg)
    return path


def run_newton_table(cfg: ExperimentConfig) -> str:
    """Per-step errors and orders of the three schemes on the sweep problem."""
    cfg = bistability_defaults(cfg)
    mesh = mesh_for(cfg, h_target=cfg.h_target)
    cfg2 = dataclasses.replace(cfg, amplitude=263000.0)
    prob = build_problem(cfg2, cfg2.k, mesh)
    table = nonlinear.newton_order_table(prob)
    rows = []
    for scheme in nonlinear.SCHEMES:
        entry = table[scheme]
        for step, (err, order) in enumerate(zip(entry.errors, entry.orders), start=1):
            rows.append((scheme, step, err, order))
    path = os.path.join(cfg.out_dir, "newton_table.csv")
    write_csv(path, ["scheme", "step", "rel_error", "order"], rows, cfg,
              comments=_warn_lines(cfg, [cfg.k]))
    return path


def run_bistability(cfg: ExperimentConfig) -> str:
    """Amplitude sweep both ways; CSV plus an SVG of the hysteresis loop."""
    cfg = bistability_defaults(cfg)
    mesh = mesh_for(cfg, h_target=cfg.h_target)
    prob = build_problem(cfg, cfg.k, mesh)
    if len(cfg.amplitudes) == 3 and cfg.amplitudes[0] < cfg.amplitudes[1]:
        lo, hi, step = cfg.amplitudes
        amps = list(np.arange(lo, hi + 0.5 * step, step))
    else:
        amps = sorted(float(a) for a in cfg.amplitudes)
    up, down, summary = nonlinear.bistability_sweep(
        prob, amps, scheme=cfg.scheme, tol=cfg.tol, max_iter=cfg.max_iter)
    rows = [(p.direction.upper(), p.amplitude, p.energy_omega, p.steps, p.converged)
            for p in up + down]
    comments = _warn_lines(cfg, [cfg.k]) + [
        f"up_jump={_fmt_cell(summary.up_jump)}",
        f"down_jump={_fmt_cell(summary.down_jump)}",
        f"hysteresis={_fmt_cell(summary.hysteresis)}",
    ]
    path = os.path.join(cfg.out_dir, "bistability.csv")
    write_csv(path, ["direction", "amplitude", "energy_omega", "iterations", "converged"],
              rows, cfg, comments=comments)
    svg = os.path.join(cfg.out_dir, "bistability.svg")
    svgplot.line_plot(
        svg,
        [("up", [p.amplitude for p in up], [p.energy_omega for p in up]),
         ("down", [p.amplitude for p in down], [p.energy_omega for p in down])],
        xlabel="incident amplitude", ylabel="scattered-field energy norm",
        title="amplitude sweep")
    return path


def run_solve(cfg: ExperimentConfig, export_mesh: bool = False,
              mesh_files: tuple | None = None) -> str:
    """Single solve; dumps nodal values and, when the reference field
    applies, an error report."""
    k = cfg.k
    if mesh_files:
        mesh = geometry.load_mesh(*mesh_files)
    else:
        mesh = mesh_for(cfg, level=cfg.level, h_target=cfg.h_target)
    prob = build_problem(cfg, k, mesh)
    u, trace = nonlinear.solve_nlh(prob, scheme=cfg.scheme, tol=cfg.tol,
                                   max_iter=cfg.max_iter)
    full = prob.discretization.expand(u)
    os.makedirs(cfg.out_dir, exist_ok=True)
    sol_path = os.path.join(cfg.out_dir, "solution.txt")
    with open(sol_path, "w") as fh:
        for i, z in enumerate(full):
            fh.write(f"{i} {z.real:.17g} {z.imag:.17g}\n")
    comments = _warn_lines(cfg, [k])
    rows = [("converged", trace.converged), ("iterations", trace.steps),
            ("residual", trace.residuals[-1] if trace.residuals else None),
            ("dofs", prob.discretization.n), ("h_max", mesh.h_max)]
    if cfg.load == "manufactured":
        rep = metrics.error_against_exact(
            prob, u, lambda p: analytic.exact_scattered(k, p),
            lambda p: analytic.exact_gradient(k, p), "omega")
        rows += [("rel_l2", rep.rel_l2), ("rel_h1", rep.rel_h1),
                 ("rel_energy", rep.rel_energy)]
    write_csv(os.path.join(cfg.out_dir, "solve_report.csv"),
              ["quantity", "value"], rows, cfg, comments=comments)
    if export_mesh:
        geometry.save_mesh(mesh, os.path.join(cfg.out_dir, "mesh_nodes.txt"),
                           os.path.join(cfg.out_dir, "mesh_elements.txt"))
    return sol_path


RUNNERS = {
    "solve": run_solve,
    "convergence": run_convergence,
    "pollution": run_pollution,
    "pml-study": run_pml_study,
    "newton-table": run_newton_table,
    "bistability": run_bistability,
}
