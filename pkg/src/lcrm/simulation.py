"""Coupled time stepping of front, surfactant and flow, plus run output and checkpoints."""

import csv
import json
import logging
import struct
import time as _time
import zlib
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import config as _config
from . import kernels
from .bulk import BulkField, adjacent_concentration, bulk_dt_limit, phase2_mass, step_bulk
from .errors import CheckpointCorrupt, CheckpointVersionError, ConfigError, LcrmError
from .flow import FlowParams, ProjectionCache, predictor, project, timestep_limit
from .forces import TensionParams, surface_forces
from .front import FrontMesh, advect_front, mesh_frames
from .grid import GHOST, MacVelocity, ScalarField, apply_boundary, divergence, write_vtk
from .poisson import PoissonSettings
from .reconstruction import (build_distance, build_indicator, enclosed_volume, front_from_levelset, reconstruct,
                             volume_axis)
from .surfactant import SurfactantParams, surface_step
from .transfer import normalized_surface_field

log = logging.getLogger(__name__)

CHECKPOINT_MAGIC = b"LCRMCKPT"
CHECKPOINT_VERSION = 1

SURFACE_COLUMNS = ("t", "surface_mass", "clamped_mass", "min_gamma", "max_gamma")
BULK_COLUMNS = ("t", "bulk_mass", "total_mass")
SERIES_COLUMNS = ("step", "t", "dt", "surface_mass", "bulk_mass", "total_mass", "max_velocity",
                  "front_area", "elements", "drop_x", "drop_y", "drop_z", "drop_u", "drop_v", "drop_w",
                  "max_divergence", "poisson_iterations")


@dataclass
class Physics:
    flow: FlowParams
    surfactant: SurfactantParams
    tension: TensionParams
    poisson: PoissonSettings

    @classmethod
    def from_config(cls, cfg):
        f, s, t = cfg.fluids, cfg.surfactant, cfg.tension
        try:
            return cls(
                FlowParams(f.rho1, f.rho2, f.mu1, f.mu2, f.gravity, (f.body_force1, f.body_force2)),
                SurfactantParams(s.D_s, s.gamma_inf, s.k_a, s.k_d, s.probe_dl or None, s.diffusion_mode),
                TensionParams(t.sigma_s, t.beta_s, t.eos, s.gamma_inf),
                PoissonSettings(f.poisson_tolerance, f.poisson_max_iterations),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from None


@dataclass
class Diagnostics:
    surface: list = field(default_factory=list)
    bulk: list = field(default_factory=list)
    series: list = field(default_factory=list)
    clamped_total: float = 0.0
    reconstructions: int = 0
    dt_limiters: dict = field(default_factory=dict)


@dataclass
class SimulationState:
    time: float
    step: int
    vel: MacVelocity
    pressure: ScalarField
    mesh: FrontMesh
    dist: object
    indicator: object
    surf: object
    bulk: BulkField
    config: _config.Config
    diagnostics: Diagnostics = field(default_factory=Diagnostics)
    physics: Physics = None
    cache: ProjectionCache = field(default_factory=ProjectionCache)
    last_poisson_iterations: int = 0
    frames: object = None         # element frames, reused while a static front stays put

    @property
    def grid(self):
        return self.vel.grid


# ---------------------------------------------------------------- set-up

def _interface_function(cfg):
    r = cfg.run
    cx, cy, cz = r.center
    if r.interface == "sphere":
        def fn(X, Y, Z):
            return np.sqrt((X - cx) ** 2 + (Y - cy) ** 2 + (Z - cz) ** 2) - r.radius
    elif r.interface == "two_spheres":
        dx, dy, dz = r.center2

        def fn(X, Y, Z):
            a = np.sqrt((X - cx) ** 2 + (Y - cy) ** 2 + (Z - cz) ** 2) - r.radius
            b = np.sqrt((X - dx) ** 2 + (Y - dy) ** 2 + (Z - dz) ** 2) - r.radius2
            return np.minimum(a, b)
    elif r.interface == "annulus":
        def fn(X, Y, Z):
            return np.sqrt((X - cx) ** 2 + (Y - cy) ** 2) - r.radius + 0.0 * Z
    else:
        def fn(X, Y, Z):
            return Z - r.plane_z + 0.0 * X
    if r.drop_phase == 2:
        return lambda X, Y, Z: -fn(X, Y, Z)
    return fn


def _gamma_profile(cfg, grid):
    """Prescribed ``Gamma = gamma_inf (z - z0) / L_z`` as a function of centroids."""
    g_inf = cfg.surfactant.gamma_inf
    z0, Lz = grid.origin[2], grid.lengths[2]
    return lambda c: g_inf * (c[:, 2] - z0) / Lz


def _wall_velocity(cfg, grid):
    rate = cfg.fluids.shear_rate
    if rate == 0.0 or grid.periodic[2]:
        return {}
    half = 0.5 * rate * grid.lengths[2]
    return {"z+": (half, 0.0, 0.0), "z-": (-half, 0.0, 0.0)}


def _initial_velocity(cfg, grid):
    r = cfg.run
    if r.mode == "kinematic":
        c = np.asarray(r.center)

        def radial(X, Y, Z):
            d = np.stack([X - c[0], Y - c[1], Z - c[2]])
            rr = np.maximum(np.sqrt((d ** 2).sum(axis=0)), grid.hmin)
            return r.radial_speed * d / rr
        return MacVelocity.from_function(grid, radial)
    U = np.asarray(r.initial_velocity)
    rate = cfg.fluids.shear_rate
    zmid = grid.origin[2] + 0.5 * grid.lengths[2]
    return MacVelocity.from_function(
        grid, lambda X, Y, Z: (U[0] + rate * (Z - zmid), U[1] + 0.0 * X, U[2] + 0.0 * X),
        wall_velocity=_wall_velocity(cfg, grid))


def _derived(state):
    """Distance, indicator and Eulerian Gamma for the current front."""
    cfg = state.config
    f = cfg.fluids
    state.dist = build_distance(state.mesh, state.grid)
    state.indicator = build_indicator(state.dist, f.rho1, f.rho2, f.mu1, f.mu2)
    state.surf = normalized_surface_field(state.mesh, state.grid)
    return state


def initial_state(cfg):
    grid = cfg.grid_spec()
    physics = Physics.from_config(cfg)
    s = cfg.surfactant
    gamma0 = _gamma_profile(cfg, grid) if s.prescribed_gradient else s.gamma0
    mesh = front_from_levelset(grid, _interface_function(cfg), gamma0)
    vel = _initial_velocity(cfg, grid)
    bulk = None
    state = SimulationState(0.0, 0, vel, ScalarField(grid), mesh, None, None, None, bulk, cfg,
                            physics=physics)
    _derived(state)
    if s.soluble:
        C = ScalarField(grid)
        C.interior[...] = np.where(state.dist.phi.interior > 0, s.C0, 0.0)
        apply_boundary(C)
        state.bulk = BulkField(C, s.D_c2)
    _record(state, 0.0)
    return state


# ---------------------------------------------------------------- stepping

def choose_dt(state):
    """Time step from ``[run] dt`` or the stability envelope; records the limiter."""
    cfg = state.config
    if cfg.run.dt > 0:
        return cfg.run.dt
    f, s, t = cfg.fluids, cfg.surfactant, cfg.tension
    mode = cfg.run.mode
    dynamic = mode == "dynamic"
    max_u = state.vel.max_abs() if mode != "static" else 0.0
    dt, which = timestep_limit(
        max_u, state.grid.hmin, f.rho1, f.rho2,
        max(f.mu1, f.mu2) if dynamic else 0.0,
        t.sigma_s if dynamic else 0.0,
        0.0 if s.prescribed_gradient else s.D_s,
        s.D_c2 if s.soluble else 0.0,
        safety=cfg.run.dt_safety)
    if s.soluble and dt > bulk_dt_limit(state.grid.hmin, s.D_c2):
        # the explicit 3-D bulk stencil is stricter than the envelope at large safety factors
        dt, which = bulk_dt_limit(state.grid.hmin, s.D_c2), "bulk_diffusion"
    if not np.isfinite(dt):
        raise ConfigError("no stability limit applies; set [run] dt")
    lim = state.diagnostics.dt_limiters
    lim[which] = lim.get(which, 0) + 1
    return dt


def _body_force(state, ind):
    """Per-phase body force blended with the indicator onto faces."""
    b1, b2 = (np.asarray(b, dtype=float) for b in state.physics.flow.body_force)
    if not (b1.any() or b2.any()):
        return None
    grid = state.grid
    out = []
    I = ind.values
    for ax in range(3):
        arr = grid.zeros(grid.face_shape(ax))
        sl_hi = [slice(GHOST, GHOST + n) for n in grid.n]
        sl_lo = list(sl_hi)
        sl_hi[ax] = slice(GHOST, GHOST + grid.n[ax] + 1)
        sl_lo[ax] = slice(GHOST - 1, GHOST + grid.n[ax])
        If = 0.5 * (I[tuple(sl_lo)] + I[tuple(sl_hi)])
        arr[tuple(sl_hi)] = b1[ax] + (b2[ax] - b1[ax]) * If
        out.append(arr)
    return out


def step(state, dt):
    """One coupled step; returns a new state and leaves ``state`` untouched."""
    cfg = state.config
    ph = state.physics
    grid = state.grid
    h = grid.hmin
    mode = cfg.run.mode
    s = cfg.surfactant
    f = cfg.fluids

    # (1) front advection with the area ratio of this move
    if mode == "static":
        mesh = state.mesh.copy()
        A_r = np.ones(len(mesh))
        dist, ind = state.dist, state.indicator
    else:
        mesh = advect_front(state.mesh, state.vel, dt)
        A_r = mesh.area_ratios(h)
        # (2) distance and material fields of the moved front
        dist = build_distance(mesh, grid)
        ind = build_indicator(dist, f.rho1, f.rho2, f.mu1, f.mu2)
    phi = dist.phi

    # (3) normalized surface field and element frames
    static = mode == "static"
    frames = state.frames if (static and state.frames is not None) else mesh_frames(mesh, phi)
    clamped = 0.0
    source = np.zeros(len(mesh))
    if s.prescribed_gradient:
        mesh.gamma = _gamma_profile(cfg, grid)(mesh.centroids())
    else:
        # a static front still carries the field built at the end of the last step
        surf = state.surf if (static and state.surf is not None) else normalized_surface_field(mesh, grid)
        C_s = adjacent_concentration(state.bulk.C, mesh, normals=frames.normal,
                                     phi=state.dist.phi) if state.bulk else None
        # (4)-(5) probed diffusion, sorption source and the Leibniz update
        res = surface_step(mesh, phi, surf, ph.surfactant, dt, C_s, frames, A_r)
        clamped = res.clamped_mass
        source = res.source

    # (6) bulk transport with the ghost-cell flux condition
    bulk = None
    if state.bulk is not None:
        bulk = BulkField(state.bulk.C.copy(), state.bulk.D_c2)
        uptake = float(np.dot(source, frames.area))
        step_bulk(bulk, state.vel if mode != "static" else None, phi, dt, source, dist, uptake=uptake)

    vel, pressure = state.vel, state.pressure
    iters = 0
    if mode == "dynamic":
        # (7) surface tension with sigma(Gamma^{n+1})
        surf_new = normalized_surface_field(mesh, grid)
        ff = surface_forces(mesh, frames, ind.ind, surf_new, ph.tension, phi, ph.surfactant.dl,
                            marangoni=cfg.tension.marangoni)
        force = list(ff.total_face_force())
        body = _body_force(state, ind.ind)
        if body is not None:
            force = [a + b for a, b in zip(force, body)]
        # (8) momentum predictor and projection
        us = predictor(state.vel, ind.rho, ind.mu, force, dt, ph.flow)
        vel, pressure, info = project(us, ind.rho, dt, ph.poisson, state.cache, state.pressure.interior)
        iters = info.iterations

    diag = state.diagnostics
    diag = Diagnostics(diag.surface, diag.bulk, diag.series, diag.clamped_total + clamped,
                       diag.reconstructions, diag.dt_limiters)
    # (9) periodic rebuild of the front from the distance field
    nstep = state.step + 1
    if mode != "static" and nstep % cfg.run.reconstruct_every == 0:
        gfield = normalized_surface_field(mesh, grid).gamma
        axis = volume_axis(mesh, grid) if cfg.run.preserve_volume else None
        vol = enclosed_volume(mesh, grid, axis) if axis is not None else None
        mesh = reconstruct(dist, gfield, old_mass=mesh.total_surfactant_mass, target_volume=vol, axis=axis)
        if s.prescribed_gradient:
            mesh.gamma = _gamma_profile(cfg, grid)(mesh.centroids())
        diag.reconstructions += 1

    new = SimulationState(state.time + dt, nstep, vel, pressure, mesh, dist, ind,
                          normalized_surface_field(mesh, grid), bulk, cfg, diag, ph, state.cache, iters,
                          frames if static else None)
    # (10) diagnostics
    _record(new, dt)
    return new


def drop_motion(state):
    """Phase-1 volume-weighted centroid and mean velocity."""
    grid = state.grid
    w = 1.0 - state.indicator.ind.interior
    tot = w.sum()
    if tot <= 0:
        return np.full(3, np.nan), np.full(3, np.nan)
    cen = np.array([np.dot(grid.centers(ax), w.sum(axis=tuple(a for a in range(3) if a != ax))) / tot
                    for ax in range(3)])
    if state.config.run.mode == "static":
        # the front is held in place
        return cen, np.zeros(3)
    uc = state.vel.cell_centered()
    vel = np.array([(uc[..., ax] * w).sum() / tot for ax in range(3)])
    return cen, vel


def _record(state, dt):
    d = state.diagnostics
    mesh = state.mesh
    gm = mesh.gamma
    smass = mesh.total_surfactant_mass
    bmass = phase2_mass(state.bulk.C, state.dist.phi) if state.bulk is not None else 0.0
    d.surface.append((state.time, smass, d.clamped_total,
                      float(gm.min()) if len(gm) else 0.0, float(gm.max()) if len(gm) else 0.0))
    d.bulk.append((state.time, bmass, smass + bmass))
    cen, dv = drop_motion(state)
    div = float(np.abs(divergence(state.vel).interior).max()) if state.config.run.mode == "dynamic" else 0.0
    d.series.append((state.step, state.time, dt, smass, bmass, smass + bmass, state.vel.max_abs(),
                     mesh.total_area, len(mesh), *cen, *dv, div, state.last_poisson_iterations))


# ---------------------------------------------------------------- output

def write_csv(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow(header)
        for r in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in r])
    return path


def write_snapshot(state, out_dir):
    """VTK fields ``<field>_<step>.vtk`` plus the front as OBJ and a sidecar CSV."""
    out = Path(out_dir)
    grid = state.grid
    n = state.step
    fields_ = {
        "velocity": state.vel.cell_centered(),
        "pressure": state.pressure.interior,
        "phi": state.dist.phi.interior,
        "indicator": state.indicator.ind.interior,
        "gamma": state.surf.gamma.interior,
    }
    if state.bulk is not None:
        fields_["concentration"] = state.bulk.C.interior
    for name, arr in fields_.items():
        write_vtk(out / f"{name}_{n:06d}.vtk", grid, {name: arr})
    state.mesh.write_obj(out / f"front_{n:06d}.obj")
    state.mesh.write_csv(out / f"front_{n:06d}.csv")


def write_diagnostics(state, out_dir):
    out = Path(out_dir)
    d = state.diagnostics
    write_csv(out / "series.csv", SERIES_COLUMNS, d.series)
    write_csv(out / "surface_diagnostics.csv", SURFACE_COLUMNS, d.surface)
    if state.bulk is not None:
        write_csv(out / "bulk_diagnostics.csv", BULK_COLUMNS, d.bulk)


# ---------------------------------------------------------------- checkpoints

def _arrays(state):
    arrs = {"u": state.vel.u, "v": state.vel.v, "w": state.vel.w, "pressure": state.pressure.values,
            "verts": state.mesh.verts, "gamma": state.mesh.gamma, "prev_area": state.mesh.prev_area}
    if state.bulk is not None:
        arrs["C"] = state.bulk.C.values
    return arrs


def checkpoint(state, path):
    """Binary snapshot: magic, version, JSON header, raw arrays, CRC-32."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    arrs = _arrays(state)
    specs = []
    blobs = []
    for name, a in arrs.items():
        a = np.asarray(a, dtype=np.float64)
        blob = a.tobytes(order="F")
        specs.append({"name": name, "shape": list(a.shape), "nbytes": len(blob)})
        blobs.append(blob)
    d = state.diagnostics
    header = {
        "time": state.time, "step": state.step, "config": state.config.to_dict(),
        "clamped_total": d.clamped_total, "reconstructions": d.reconstructions,
        "dt_limiters": d.dt_limiters, "mesh_flags": state.mesh.flags,
        "wall_velocity": {k: list(v) for k, v in state.vel.wall_velocity.items()},
        "poisson_iterations": state.last_poisson_iterations,
        "arrays": specs,
    }
    hb = json.dumps(header).encode()
    body = CHECKPOINT_MAGIC + struct.pack("<IQ", CHECKPOINT_VERSION, len(hb)) + hb + b"".join(blobs)
    path.write_bytes(body + struct.pack("<I", zlib.crc32(body)))
    return path


def _config_from_dict(d):
    cfg = _config.Config()
    for sec, vals in d.items():
        obj = getattr(cfg, sec)
        names = {f.name for f in fields(obj)}
        for k, v in vals.items():
            if k not in names:
                raise CheckpointCorrupt(f"unknown config key {sec}.{k} in checkpoint")
            setattr(obj, k, tuple(v) if isinstance(v, list) else v)
    return cfg


def restore(path):
    """Rebuild a state from :func:`checkpoint`; raises on corrupt or foreign files."""
    data = Path(path).read_bytes()
    fixed = len(CHECKPOINT_MAGIC) + 12
    if len(data) < fixed + 4 or not data.startswith(CHECKPOINT_MAGIC):
        raise CheckpointCorrupt(f"{path}: not a checkpoint (bad magic or truncated)")
    version, hlen = struct.unpack_from("<IQ", data, len(CHECKPOINT_MAGIC))
    if version != CHECKPOINT_VERSION:
        raise CheckpointVersionError(f"{path}: checkpoint version {version}, expected {CHECKPOINT_VERSION}")
    body, crc = data[:-4], struct.unpack("<I", data[-4:])[0]
    if zlib.crc32(body) != crc:
        raise CheckpointCorrupt(f"{path}: checksum mismatch (truncated or damaged)")
    try:
        header = json.loads(body[fixed:fixed + hlen].decode())
    except (UnicodeDecodeError, json.JSONDecodeError) as exc:
        raise CheckpointCorrupt(f"{path}: unreadable header ({exc})") from None
    pos = fixed + hlen
    arrs = {}
    for spec in header["arrays"]:
        nb = spec["nbytes"]
        if pos + nb > len(body):
            raise CheckpointCorrupt(f"{path}: array {spec['name']} runs past the end of the file")
        arrs[spec["name"]] = np.frombuffer(body[pos:pos + nb], dtype=np.float64).reshape(
            spec["shape"], order="F").copy(order="F")
        pos += nb
    cfg = _config_from_dict(header["config"])
    grid = cfg.grid_spec()
    wall = {k: tuple(v) for k, v in header["wall_velocity"].items()}
    vel = MacVelocity(grid, arrs["u"], arrs["v"], arrs["w"], wall)
    pressure = ScalarField(grid, arrs["pressure"])
    mesh = FrontMesh(arrs["verts"], arrs["gamma"], arrs["prev_area"])
    mesh.flags.update(header["mesh_flags"])
    diag = Diagnostics(clamped_total=header["clamped_total"], reconstructions=header["reconstructions"],
                       dt_limiters=header["dt_limiters"])
    state = SimulationState(header["time"], header["step"], vel, pressure, mesh, None, None, None, None,
                            cfg, diag, Physics.from_config(cfg),
                            last_poisson_iterations=header["poisson_iterations"])
    _derived(state)
    if "C" in arrs:
        state.bulk = BulkField(ScalarField(grid, arrs["C"]), cfg.surfactant.D_c2)
    return state


# ---------------------------------------------------------------- driver

def _done(state):
    r = state.config.run
    if r.t_end > 0:
        return state.time >= r.t_end * (1 - 1e-12)
    return state.step >= r.steps


def run(cfg, out_dir=None, state=None, callback=None):
    """Run to ``[run] steps`` (or ``t_end``); writes outputs when ``out_dir`` is set."""
    t0 = _time.time()
    state = state or initial_state(cfg)
    r = cfg.run
    out = Path(out_dir) if out_dir is not None else None
    if out is not None:
        out.mkdir(parents=True, exist_ok=True)
        (out / "config.ini").write_text(_config.dump_config(cfg))
        if r.output_every > 0 and state.step == 0:
            write_snapshot(state, out)
    while not _done(state):
        dt = choose_dt(state)
        if r.t_end > 0:
            dt = min(dt, r.t_end - state.time)
        try:
            state = step(state, dt)
        except LcrmError as exc:
            if out is not None:
                dump = checkpoint(state, out / f"failed_step_{state.step + 1:06d}.ckpt")
                log.error("step %d failed (%s); state dumped to %s", state.step + 1, exc, dump)
            raise
        if out is not None:
            if r.output_every > 0 and state.step % r.output_every == 0:
                write_snapshot(state, out)
            if r.checkpoint_every > 0 and state.step % r.checkpoint_every == 0:
                checkpoint(state, out / f"checkpoint_{state.step:06d}.ckpt")
        if callback is not None:
            callback(state)
    report = make_report(state, _time.time() - t0)
    if out is not None:
        write_diagnostics(state, out)
        (out / "report.json").write_text(json.dumps(report, indent=2))
    return state, report


def make_report(state, wall_time):
    d = state.diagnostics
    first, last = d.bulk[0], d.bulk[-1]
    return {
        "steps": state.step,
        "time": state.time,
        "wall_time_s": wall_time,
        "backend": kernels.BACKEND_NAME,
        "workers": kernels.worker_count(),
        "deterministic": state.config.run.deterministic,
        "elements": len(state.mesh),
        "reconstructions": d.reconstructions,
        "dt_limiters": d.dt_limiters,
        "surface_mass": d.surface[-1][1],
        "bulk_mass": last[1],
        "total_mass": last[2],
        "total_mass_change": (last[2] - first[2]) / first[2] if first[2] else 0.0,
        "clamped_mass": d.clamped_total,
        "config": state.config.to_dict(),
    }
