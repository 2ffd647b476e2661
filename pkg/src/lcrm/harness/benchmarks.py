"""Benchmark scenarios: set-up, run, comparison against oracles.

``--res`` always means the number of cells along x; the other axes follow
from the box aspect ratio of each scenario.
"""

import csv
import json
import logging
import time as _time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .. import simulation as sim
from ..config import parse_config
from ..errors import ConfigError, GeometryError
from . import oracles

log = logging.getLogger(__name__)


@dataclass
class BenchReport:
    name: str
    params: dict
    metric: str
    tolerance: str
    resolutions: list
    series: dict = field(default_factory=dict)    # res -> [(t or r, measured, oracle)]
    l1: dict = field(default_factory=dict)        # res -> float (or {t: float})
    linf: dict = field(default_factory=dict)
    value: dict = field(default_factory=dict)     # res -> scenario metric
    orders: list = field(default_factory=list)
    passed: bool = False
    notes: list = field(default_factory=list)
    wall_time: float = 0.0

    def to_dict(self):
        d = asdict(self)
        d["series"] = {str(k): v for k, v in self.series.items()}
        for key in ("l1", "linf", "value"):
            d[key] = {str(k): v for k, v in d[key].items()}
        return d

    def write(self, out_dir):
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "bench_report.json").write_text(json.dumps(self.to_dict(), indent=2, default=float))
        with open(out / "bench_series.csv", "w", newline="") as f:
            w = csv.writer(f)
            w.writerow(["resolution", "coordinate", "measured", "oracle"])
            for res, rows in self.series.items():
                for t, m, o in rows:
                    w.writerow([res, repr(float(t)), repr(float(m)), repr(float(o))])
        return out


def _config(text, overrides):
    cfg = parse_config(text)
    for key, val in (overrides or {}).items():
        sec, _, name = key.partition(".")
        obj = getattr(cfg, sec, None)
        if obj is None or not hasattr(obj, name):
            raise ConfigError(f"unknown override {key!r}")
        setattr(obj, name, type(getattr(obj, name))(val) if not isinstance(getattr(obj, name), tuple)
                else tuple(val))
    return cfg


def _advance_to(state, t_target, callback=None):
    while state.time < t_target * (1 - 1e-12):
        dt = min(sim.choose_dt(state), t_target - state.time)
        state = sim.step(state, dt)
        if callback is not None:
            callback(state)
    return state


def _finish(state, out, t0):
    if out is None:
        return
    out.mkdir(parents=True, exist_ok=True)
    sim.write_diagnostics(state, out)
    sim.write_snapshot(state, out)
    (out / "report.json").write_text(json.dumps(sim.make_report(state, _time.time() - t0), indent=2))


# ---------------------------------------------------------------- expanding sphere

def _expanding_sphere(n, overrides, out, deterministic):
    R0, v, g0 = 0.5, 0.01, 1.0
    cfg = _config(f"""
[grid]
nx = {n}
ny = {n}
nz = {n}
lx = 2.5
ly = 2.5
lz = 2.5
bc_x = zero_gradient
bc_y = zero_gradient
bc_z = zero_gradient
[surfactant]
gamma0 = {g0}
[run]
mode = kinematic
radial_speed = {v}
center = 1.25, 1.25, 1.25
radius = {R0}
steps = 1000
dt = 0.025
reconstruct_every = 20
deterministic = {str(deterministic).lower()}
""", overrides)
    rows = []

    def sample(s):
        if s.step % 10 == 0:
            rows.append((s.time, float(s.mesh.gamma.mean()),
                         float(oracles.oracle_expanding_sphere(s.time, R0, v, g0))))

    t0 = _time.time()
    state, _ = sim.run(cfg, out_dir=out, callback=sample)
    m = np.array([r[1] for r in rows])
    o = np.array([r[2] for r in rows])
    rel = float(np.max(np.abs(m / o - 1.0)))
    return {"series": rows, "l1": oracles.l1_error(m, o), "linf": oracles.linf_error(m, o),
            "value": rel, "wall": _time.time() - t0, "steps": state.step}


# ---------------------------------------------------------------- surface diffusion

DIFFUSION_TIMES = (0.05, 0.1, 0.2)


def _sphere_diffusion(n, overrides, out, deterministic):
    R, D_s, L = 0.5, 1.0, 2.5
    c = np.full(3, L / 2)
    cfg = _config(f"""
[grid]
nx = {n}
ny = {n}
nz = {n}
lx = {L}
ly = {L}
lz = {L}
[surfactant]
D_s = {D_s}
[run]
mode = static
center = {c[0]}, {c[1]}, {c[2]}
radius = {R}
dt_safety = 1.0
deterministic = {str(deterministic).lower()}
""", overrides)
    t0 = _time.time()
    state = sim.initial_state(cfg)

    def cos_theta(mesh):
        x = mesh.centroids() - c
        return x[:, 2] / np.linalg.norm(x, axis=1)

    state.mesh.gamma = 0.5 * (1.0 - cos_theta(state.mesh))
    sim._derived(state)
    ct = cos_theta(state.mesh)
    theta = np.arccos(np.clip(ct, -1.0, 1.0))
    rows, l1, linf = [], {}, {}
    for t in DIFFUSION_TIMES:
        state = _advance_to(state, t)
        ex = oracles.oracle_sphere_diffusion(theta, t, D_s, R)
        l1[t] = oracles.l1_error(state.mesh.gamma, ex)
        linf[t] = oracles.linf_error(state.mesh.gamma, ex)
        # pole value as the time-series sample
        k = int(np.argmin(ct))
        rows.append((t, float(state.mesh.gamma[k]), float(ex[k])))
    _finish(state, out, t0)
    return {"series": rows, "l1": l1, "linf": linf, "value": l1[DIFFUSION_TIMES[-1]],
            "wall": _time.time() - t0, "steps": state.step}


# ---------------------------------------------------------------- bulk adsorption

BULK_ADSORPTION = {"k_a": 0.5, "D_c2": 0.1, "R": 0.5, "C_inf": 1.0, "t": 0.05}
# a saturation level far above any reached Gamma makes k_a' C (Gamma_inf - Gamma) = k_a C
_GAMMA_INF_LARGE = 1e6


def _bulk_adsorption(n, overrides, out, deterministic):
    p = BULK_ADSORPTION
    L = 5.0
    cfg = _config(f"""
[grid]
nx = {n}
ny = {n}
nz = {n}
lx = {L}
ly = {L}
lz = {L}
bc_x = zero_gradient
bc_y = zero_gradient
bc_z = zero_gradient
[surfactant]
soluble = true
D_c2 = {p['D_c2']}
C0 = {p['C_inf']}
gamma_inf = {_GAMMA_INF_LARGE}
k_a = {p['k_a'] / _GAMMA_INF_LARGE!r}
[run]
mode = static
center = {L / 2}, {L / 2}, {L / 2}
radius = {p['R']}
dt_safety = 0.6
deterministic = {str(deterministic).lower()}
""", overrides)
    t0 = _time.time()
    state = sim.initial_state(cfg)
    state = _advance_to(state, p["t"])
    grid = state.grid
    X = grid.cell_center_grid()
    r = np.sqrt(sum((X[ax] - L / 2) ** 2 for ax in range(3)))
    sel = (state.dist.phi.interior > 0) & (r >= p["R"]) & (r <= 2 * p["R"])
    C = state.bulk.C.interior[sel]
    rs = r[sel]
    approx = oracles.oracle_bulk_adsorption(rs, p["t"], p["k_a"], p["D_c2"], p["R"], p["C_inf"], sign=-1.0)
    exact = oracles.exact_bulk_adsorption(rs, p["t"], p["k_a"], p["D_c2"], p["R"], p["C_inf"])
    order = np.argsort(rs)
    rows = [(float(rs[i]), float(C[i]), float(approx[i])) for i in order]
    _finish(state, out, t0)
    d = state.diagnostics.bulk
    return {"series": rows, "l1": oracles.l1_error(C, approx) / p["C_inf"],
            "linf": oracles.linf_error(C, approx) / p["C_inf"],
            "value": oracles.l1_error(C, approx) / p["C_inf"],
            "extra": {"l1_vs_exact": oracles.l1_error(C, exact) / p["C_inf"],
                      "approx_vs_exact": oracles.l1_error(approx, exact) / p["C_inf"],
                      "total_mass_change": (d[-1][2] - d[0][2]) / d[0][2]},
            "wall": _time.time() - t0, "steps": state.step}


# ---------------------------------------------------------------- Marangoni migration

MARANGONI = {"R": 0.5, "sigma_s": 0.125, "beta_s": 0.8, "rho": 0.2, "mu": 0.1, "t_end": 1.0, "window": 0.1}


def _marangoni(n, overrides, out, deterministic):
    p = MARANGONI
    R = p["R"]
    lx, lz = 5 * R, 10 * R
    cfg = _config(f"""
[grid]
nx = {n}
ny = {n}
nz = {2 * n}
lx = {lx}
ly = {lx}
lz = {lz}
bc_z = no_slip_wall
[fluids]
rho1 = {p['rho']}
rho2 = {p['rho']}
mu1 = {p['mu']}
mu2 = {p['mu']}
[surfactant]
gamma_inf = 1.0
prescribed_gradient = true
[tension]
sigma_s = {p['sigma_s']}
beta_s = {p['beta_s']}
[run]
center = {lx / 2}, {lx / 2}, {lz / 2}
radius = {R}
steps = 100000000
t_end = {p['t_end']}
reconstruct_every = 25
deterministic = {str(deterministic).lower()}
""", overrides)
    V = oracles.oracle_ygb(cfg.tension.sigma_s, cfg.tension.beta_s, R, lz, p["mu"], p["mu"])
    rows = []
    col = sim.SERIES_COLUMNS.index("drop_w")

    def sample(s):
        rows.append((s.time, s.diagnostics.series[-1][col], V))

    t0 = _time.time()
    state, _ = sim.run(cfg, out_dir=out, callback=sample)
    t_end = state.time
    w = np.array([r[1] for r in rows if r[0] >= t_end - p["window"]])
    ratio = float(w.mean() / V)
    return {"series": rows[::10] + [rows[-1]], "l1": float(abs(ratio - 1.0)), "linf": float(abs(ratio - 1.0)),
            "value": ratio, "wall": _time.time() - t0, "steps": state.step}


# ---------------------------------------------------------------- shear drop

SHEAR = {"R": 4.88e-4, "rho": 1030.0, "sigma_s": 3.12e-2, "beta_s": 0.8, "mu1": 0.4, "lam": 3.335,
         "shear_rate": 15.97, "strain": 10.0}


def _shear_drop(n, overrides, out, deterministic, surfactant=True):
    p = SHEAR
    R = p["R"]
    lx, lz = 8 * R, 4 * R
    cfg = _config(f"""
[grid]
nx = {n}
ny = {n}
nz = {n // 2}
lx = {lx!r}
ly = {lx!r}
lz = {lz!r}
bc_z = no_slip_wall
[fluids]
rho1 = {p['rho']}
rho2 = {p['rho']}
mu1 = {p['mu1']}
mu2 = {p['mu1'] * p['lam']!r}
shear_rate = {p['shear_rate']}
[surfactant]
gamma_inf = 1.0
gamma0 = {0.5 if surfactant else 0.0}
[tension]
sigma_s = {p['sigma_s']}
beta_s = {p['beta_s'] if surfactant else 0.0}
[run]
center = {lx / 2!r}, {lx / 2!r}, {lz / 2!r}
radius = {R!r}
steps = 100000000
t_end = {p['strain'] / p['shear_rate']!r}
reconstruct_every = 25
deterministic = {str(deterministic).lower()}
""", overrides)
    rows = []

    def sample(s):
        if s.step % 50 == 0:
            shape = measure_drop_ellipsoid(s.mesh)
            rows.append((s.time * p["shear_rate"], shape.theta, s.mesh.total_surfactant_mass))

    t0 = _time.time()
    state, _ = sim.run(cfg, out_dir=out, callback=sample)
    shape = measure_drop_ellipsoid(state.mesh)
    masses = np.array([r[2] for r in rows]) if rows else np.zeros(1)
    drift = float(np.max(np.abs(masses / masses[0] - 1.0))) if surfactant and masses[0] > 0 else 0.0
    target = 0.26 if surfactant else 0.65
    return {"series": [(r[0], r[1], target) for r in rows], "l1": abs(shape.theta - target),
            "linf": abs(shape.theta - target), "value": shape.theta,
            "extra": {"L": shape.L, "B": shape.B, "W": shape.W, "mass_drift": drift},
            "wall": _time.time() - t0, "steps": state.step}


# ---------------------------------------------------------------- drop shape

@dataclass
class DropShape:
    L: float
    B: float
    W: float
    theta: float
    degenerate: bool
    axes: np.ndarray


def measure_drop_ellipsoid(mesh, flow_axis=0, shear_axis=2, degenerate_tol=1e-3):
    """Ellipsoid fitted through the second moments of the enclosed volume.

    Uses cones from the volume centroid to each element, so the moments are
    exact for the polyhedron; semi-axes are ``sqrt(5 lambda)``. ``W`` is the
    axis closest to the vorticity direction, ``L`` the larger of the two in
    the shear plane, ``theta`` the angle of ``L`` from the flow direction.
    """
    if len(mesh) == 0:
        raise GeometryError("cannot measure an empty front")
    v = mesh.verts
    ref = v.reshape(-1, 3).mean(axis=0)
    a, b, c = (v[:, i] - ref for i in range(3))
    vol = np.einsum("ij,ij->i", a, np.cross(b, c)) / 6.0
    V = vol.sum()
    if abs(V) <= 0:
        raise GeometryError("front encloses no volume")
    cen = ref + (vol[:, None] * (a + b + c) / 4.0).sum(axis=0) / V
    a, b, c = (v[:, i] - cen for i in range(3))
    s = a + b + c
    M = (vol[:, None, None] * (np.einsum("ei,ej->eij", a, a) + np.einsum("ei,ej->eij", b, b)
                                + np.einsum("ei,ej->eij", c, c) + np.einsum("ei,ej->eij", s, s))).sum(axis=0) / 20.0
    lam, vec = np.linalg.eigh(M / V)
    semi = np.sqrt(5.0 * np.maximum(lam, 0.0))
    vort = 3 - flow_axis - shear_axis
    iw = int(np.argmax(np.abs(vec[vort])))
    rest = [i for i in range(3) if i != iw]
    il, ib = sorted(rest, key=lambda i: -semi[i])
    degenerate = (semi.max() - semi.min()) <= degenerate_tol * semi.max()
    e = vec[:, il]
    if e[flow_axis] < 0:
        e = -e
    theta = 0.0 if degenerate else float(np.arctan2(e[shear_axis], e[flow_axis]))
    return DropShape(2 * semi[il], 2 * semi[ib], 2 * semi[iw], theta, bool(degenerate), vec)


# ---------------------------------------------------------------- registry

@dataclass(frozen=True)
class Scenario:
    name: str
    description: str
    resolutions: tuple
    runner: object
    metric: str
    tolerance: str
    longrun: bool = False


def _check_max_dev(vals, orders):
    return all(v <= 0.02 for v in vals.values())


def _check_orders(vals, orders):
    return len(orders) > 0 and all(1.0 <= o <= 2.0 for o in orders)


def _check_bulk(vals, orders):
    return all(v <= 0.05 for v in vals.values())


def _check_ygb(vals, orders):
    r = [vals[k] for k in sorted(vals)]
    inside = all(0.8 <= x <= 1.0 for x in r)
    monotone = all(abs(1 - b) < abs(1 - a) for a, b in zip(r, r[1:]))
    return inside and monotone


def _check_angle(target):
    return lambda vals, orders: all(abs(v - target) <= 0.05 for v in vals.values())


SCENARIOS = {
    "expanding_sphere": Scenario(
        "expanding_sphere", "sphere R0=0.5 expanding at 0.01 in a 2.5^3 box, kinematic, 1000 steps",
        (64,), _expanding_sphere, "max relative deviation of mean element Gamma from area dilution", "<= 0.02"),
    "sphere_diffusion": Scenario(
        "sphere_diffusion", "static sphere R=0.5, D_s=1, Gamma0=(1-cos theta)/2, L1 at t=0.05,0.1,0.2",
        (64, 128), _sphere_diffusion, "L1 error at t=0.2 and observed order", "order in [1, 2]"),
    "bulk_adsorption": Scenario(
        "bulk_adsorption", "static clean drop R=0.5 in a 5^3 box, adsorption-only source k_a C_s, t=0.05",
        (64,), _bulk_adsorption, "L1 of C/C_inf over r in [R, 2R] against the short-time profile", "<= 0.05"),
    "marangoni": Scenario(
        "marangoni", "drop in a prescribed linear Gamma(z), 5R x 5R x 10R, migration speed vs YGB",
        (30, 40, 50), _marangoni, "V_rise / V_YGB averaged over the last 0.1 time units",
        "in [0.8, 1.0], approaching 1 with refinement"),
    "shear_drop": Scenario(
        "shear_drop", "insoluble-surfactant drop in simple shear, Ca=0.1, lambda=3.335, 8R x 8R x 4R",
        (96,), _shear_drop, "steady rotation angle (rad)", "0.26 +- 0.05", longrun=True),
    "shear_drop_clean": Scenario(
        "shear_drop_clean", "clean drop in simple shear, Ca=0.1, lambda=3.335, 8R x 8R x 4R",
        (96,), lambda n, o, out, d: _shear_drop(n, o, out, d, surfactant=False),
        "steady rotation angle (rad)", "0.65 +- 0.05", longrun=True),
}

_CHECKS = {
    "expanding_sphere": _check_max_dev,
    "sphere_diffusion": _check_orders,
    "bulk_adsorption": _check_bulk,
    "marangoni": _check_ygb,
    "shear_drop": _check_angle(0.26),
    "shear_drop_clean": _check_angle(0.65),
}


def list_benchmarks():
    return [(s.name, s.description, s.resolutions, s.longrun) for s in SCENARIOS.values()]


def run_benchmark(name, resolutions=None, overrides=None, out_dir=None, deterministic=False):
    """Run scenario ``name`` at each resolution and compare with its oracle."""
    if name not in SCENARIOS:
        raise ConfigError(f"unknown benchmark {name!r}; valid: {', '.join(SCENARIOS)}")
    sc = SCENARIOS[name]
    res = list(resolutions or sc.resolutions)
    rep = BenchReport(name, {"overrides": dict(overrides or {}), "deterministic": deterministic},
                      sc.metric, sc.tolerance, res)
    t0 = _time.time()
    for n in res:
        out = Path(out_dir) / f"res_{n}" if out_dir is not None else None
        log.info("benchmark %s at resolution %d", name, n)
        r = sc.runner(n, overrides, out, deterministic)
        rep.series[n] = r["series"]
        rep.l1[n] = r["l1"]
        rep.linf[n] = r["linf"]
        rep.value[n] = r["value"]
        if "extra" in r:
            rep.notes.append({"resolution": n, **r["extra"]})
    if name == "sphere_diffusion" and len(res) >= 2:
        for t in DIFFUSION_TIMES:
            rep.orders.append(oracles.convergence_orders(res, [rep.l1[n][t] for n in res])[-1])
    elif len(res) >= 2:
        errs = [rep.l1[n] for n in res]
        if all(e > 0 for e in errs):
            rep.orders = oracles.convergence_orders(res, errs)
    rep.passed = bool(_CHECKS[name](rep.value, rep.orders))
    rep.wall_time = _time.time() - t0
    if out_dir is not None:
        rep.write(out_dir)
    return rep
