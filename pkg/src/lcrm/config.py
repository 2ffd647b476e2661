"""INI run configuration: sections ``[grid] [fluids] [surfactant] [tension] [run]``.

Every key has a typed default below; unknown sections or keys are errors.
Vectors are written as comma-separated numbers.
"""

import configparser
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

from .errors import ConfigError
from .grid import BOUNDARY_KINDS, GridSpec


@dataclass
class GridSection:
    nx: int = 32
    ny: int = 32
    nz: int = 32
    lx: float = 1.0
    ly: float = 1.0
    lz: float = 1.0
    origin: tuple = (0.0, 0.0, 0.0)
    bc_x: str = "periodic"
    bc_y: str = "periodic"
    bc_z: str = "periodic"


@dataclass
class FluidsSection:
    rho1: float = 1.0
    rho2: float = 1.0
    mu1: float = 1.0
    mu2: float = 1.0
    gravity: tuple = (0.0, 0.0, 0.0)
    body_force1: tuple = (0.0, 0.0, 0.0)
    body_force2: tuple = (0.0, 0.0, 0.0)
    shear_rate: float = 0.0
    poisson_tolerance: float = 1e-8
    poisson_max_iterations: int = 200


@dataclass
class SurfactantSection:
    D_s: float = 0.0
    D_c2: float = 0.0
    gamma_inf: float = 1.0
    k_a: float = 0.0
    k_d: float = 0.0
    gamma0: float = 0.0
    C0: float = 0.0
    soluble: bool = False
    probe_dl: float = 0.0  # 0 means one cell
    diffusion_mode: str = "smoothed"
    prescribed_gradient: bool = False   # hold Gamma = gamma_inf (z - z0) / L_z on the front


@dataclass
class TensionSection:
    sigma_s: float = 1.0
    beta_s: float = 0.0
    eos: str = "linear"
    marangoni: bool = True


@dataclass
class RunSection:
    mode: str = "dynamic"              # dynamic | kinematic | static
    radial_speed: float = 0.0          # kinematic mode: outward speed about ``center``
    interface: str = "sphere"          # sphere | two_spheres | plane | annulus
    center: tuple = (0.5, 0.5, 0.5)
    radius: float = 0.25
    center2: tuple = (0.0, 0.0, 0.0)
    radius2: float = 0.0
    plane_z: float = 0.5
    drop_phase: int = 1                # phase inside the sphere / annulus core
    steps: int = 100
    t_end: float = 0.0                 # > 0 stops on time instead of steps
    dt: float = 0.0                    # > 0 fixes the step
    dt_safety: float = 0.5
    reconstruct_every: int = 25
    preserve_volume: bool = True       # offset rebuilt fronts to keep the enclosed volume
    output_every: int = 0
    output_dir: str = "run"
    deterministic: bool = False
    initial_velocity: tuple = (0.0, 0.0, 0.0)
    checkpoint_every: int = 0


SECTIONS = {
    "grid": GridSection,
    "fluids": FluidsSection,
    "surfactant": SurfactantSection,
    "tension": TensionSection,
    "run": RunSection,
}


@dataclass
class Config:
    grid: GridSection = field(default_factory=GridSection)
    fluids: FluidsSection = field(default_factory=FluidsSection)
    surfactant: SurfactantSection = field(default_factory=SurfactantSection)
    tension: TensionSection = field(default_factory=TensionSection)
    run: RunSection = field(default_factory=RunSection)

    def grid_spec(self):
        g = self.grid
        kinds = []
        for ax, name in enumerate("xyz"):
            kind = getattr(g, f"bc_{name}")
            if kind not in BOUNDARY_KINDS:
                raise ConfigError(f"[grid] bc_{name}: unknown boundary kind {kind!r}")
            kinds += [kind, kind]
        return GridSpec(g.nx, g.ny, g.nz, g.lx / g.nx, g.ly / g.ny, g.lz / g.nz, origin=g.origin,
                        boundary=tuple(kinds))

    def to_dict(self):
        return {name: asdict(getattr(self, name)) for name in SECTIONS}


def _convert(raw, default, where):
    try:
        if isinstance(default, bool):
            low = raw.strip().lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError(raw)
        if isinstance(default, int):
            return int(raw)
        if isinstance(default, float):
            return float(raw)
        if isinstance(default, tuple):
            vals = tuple(float(v) for v in raw.replace(" ", "").split(",") if v)
            if len(vals) != len(default):
                raise ValueError(f"expected {len(default)} components")
            return vals
        return raw.strip()
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot read {raw!r} ({exc})") from None


def parse_config(text, source="<string>"):
    cp = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (D_s vs d_s)
    try:
        cp.read_string(text, source=source)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    cfg = Config()
    for sec in cp.sections():
        if sec not in SECTIONS:
            raise ConfigError(f"unknown section [{sec}] (valid: {', '.join(SECTIONS)})")
        obj = getattr(cfg, sec)
        known = {f.name: f for f in fields(obj)}
        for key, raw in cp.items(sec):
            if key not in known:
                raise ConfigError(f"unknown key {key!r} in [{sec}]")
            setattr(obj, key, _convert(raw, getattr(obj, key), f"[{sec}] {key}"))
    _validate(cfg)
    return cfg


def load_config(path):
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    return parse_config(path.read_text(), str(path))


def _validate(cfg):
    if cfg.run.reconstruct_every < 1:
        raise ConfigError("[run] reconstruct_every must be >= 1")
    if cfg.tension.eos not in ("linear", "langmuir"):
        raise ConfigError(f"[tension] eos must be linear or langmuir, got {cfg.tension.eos!r}")
    if cfg.run.interface not in ("sphere", "two_spheres", "plane", "annulus"):
        raise ConfigError(f"[run] unknown interface {cfg.run.interface!r}")
    if cfg.run.mode not in ("dynamic", "kinematic", "static"):
        raise ConfigError(f"[run] mode must be dynamic, kinematic or static, got {cfg.run.mode!r}")
    if cfg.run.drop_phase not in (1, 2):
        raise ConfigError("[run] drop_phase must be 1 or 2")
    if cfg.surfactant.diffusion_mode not in ("smoothed", "element"):
        raise ConfigError("[surfactant] diffusion_mode must be smoothed or element")
    try:
        cfg.grid_spec()
    except ValueError as exc:
        raise ConfigError(f"[grid] {exc}") from None


def dump_config(cfg):
    """INI text that parses back to ``cfg``."""
    lines = []
    for sec in SECTIONS:
        lines.append(f"[{sec}]")
        for k, v in asdict(getattr(cfg, sec)).items():
            if isinstance(v, (tuple, list)):
                v = ", ".join(repr(float(x)) for x in v)
            elif isinstance(v, bool):
                v = "true" if v else "false"
            elif isinstance(v, float):
                v = repr(v)
            lines.append(f"{k} = {v}")
        lines.append("")
    return "\n".join(lines)
