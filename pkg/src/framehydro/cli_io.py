"""Configuration, initial data, snapshot/ledger persistence, and the CLI.

Config files are flat ``section.key = value`` text (UTF-8, ``#`` comments).
Snapshots are little-endian binary: magic ``BFH1``, a u16 format version,
the grid shape and box lengths, the time stamp, then the nine director
lattices followed by the three velocity lattices as row-major float64, and
a trailing CRC32 of that payload.  Ledgers are plain CSV with a fixed,
documented header; floats are written with shortest round-trip formatting
so repeated runs produce bit-identical files.
"""

from __future__ import annotations

import argparse
import struct
import sys
import zlib
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import diagnostics as diag
from .constitutive import ViscousParams
from .dynamics import tendency
from .elastic_energy import ElasticParams
from .errors import (BadSpec, ChecksumMismatch, FormatError, IoError,
                     SimulationError, StepUnstable)
from .frame_algebra import exp_update_field, identity_field
from .integrator import StateSnapshot, StepConfig, run
from .spectral_grid import Grid

SNAPSHOT_MAGIC = b"BFH1"
SNAPSHOT_VERSION = 1

DEFAULT_CONFIG = """\
# framehydro run configuration
grid.dims = 64 64
grid.lengths = 6.283185307179586 6.283185307179586
grid.dealias = 0.6666666666666666

elastic.k = 1 1 1 1 1 1 1 1 1 1 1 1

viscous.beta = 0.7071067811865476 1 1 1 1 1
viscous.chi = 1 1 1
viscous.eta_rot = 0.7071067811865476 0.7071067811865476 0.7071067811865476
viscous.eta = 1.0

step.dt = 0.001
step.t_end = 1.0
step.scheme = imex_rk2
step.cfl_target = 0.9
step.retract_every = 100

initial.mode = random
initial.amplitude = 0.01
initial.seed = 42
initial.band = 4

output.snapshot_interval = 200
output.ledger_interval = 10
output.dir = runs/default

diagnostics.s = 0 2
"""


@dataclass
class InitialSpec:
    mode: str = "random"
    amplitude: float = 0.01
    seed: int = 42
    band: int = 4


@dataclass
class OutputSpec:
    snapshot_interval: int = 200
    ledger_interval: int = 10
    directory: str = "runs/default"


@dataclass
class SimConfig:
    grid_dims: tuple = (64, 64)
    grid_lengths: tuple = (2 * np.pi, 2 * np.pi)
    grid_dealias: float = 2.0 / 3.0
    elastic: ElasticParams = field(default_factory=ElasticParams.isotropic)
    viscous: ViscousParams = field(default_factory=ViscousParams.default)
    step: StepConfig = field(default_factory=lambda: StepConfig(dt=1e-3))
    initial: InitialSpec = field(default_factory=InitialSpec)
    output: OutputSpec = field(default_factory=OutputSpec)
    s_values: tuple = (0, 2)

    def make_grid(self):
        return Grid(self.grid_dims, self.grid_lengths, self.grid_dealias)

    def validate(self):
        """Coefficient violations (empty list means the config is runnable)."""
        bad = list(self.viscous.validate())
        if self.initial.amplitude < 0:
            bad.append("initial.amplitude >= 0")
        if self.initial.mode not in ("zero", "random", "taylor_green"):
            bad.append(f"unknown initial.mode {self.initial.mode!r}")
        return bad


def _fmt(x):
    return repr(float(x))


def config_to_text(cfg):
    lines = [
        "grid.dims = " + " ".join(str(n) for n in cfg.grid_dims),
        "grid.lengths = " + " ".join(_fmt(x) for x in cfg.grid_lengths),
        "grid.dealias = " + _fmt(cfg.grid_dealias),
        "elastic.k = " + " ".join(_fmt(x) for x in cfg.elastic.K),
        "viscous.beta = " + " ".join(_fmt(x) for x in cfg.viscous.beta),
        "viscous.chi = " + " ".join(_fmt(x) for x in cfg.viscous.chi),
        "viscous.eta_rot = " + " ".join(_fmt(x) for x in cfg.viscous.eta_rot),
        "viscous.eta = " + _fmt(cfg.viscous.eta),
        "step.dt = " + _fmt(cfg.step.dt),
        "step.t_end = " + _fmt(cfg.step.t_end),
        "step.scheme = " + cfg.step.scheme,
        "step.cfl_target = " + _fmt(cfg.step.cfl_target),
        "step.retract_every = " + str(cfg.step.retract_every),
        "initial.mode = " + cfg.initial.mode,
        "initial.amplitude = " + _fmt(cfg.initial.amplitude),
        "initial.seed = " + str(cfg.initial.seed),
        "initial.band = " + str(cfg.initial.band),
        "output.snapshot_interval = " + str(cfg.output.snapshot_interval),
        "output.ledger_interval = " + str(cfg.output.ledger_interval),
        "output.dir = " + cfg.output.directory,
        "diagnostics.s = " + " ".join(str(s) for s in cfg.s_values),
    ]
    return "\n".join(lines) + "\n"


def config_from_text(text):
    entries = {}
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise BadSpec(f"line {lineno}: expected 'section.key = value'")
        key, val = (part.strip() for part in line.split("=", 1))
        entries[key] = val

    def take(key, conv, default=None):
        if key not in entries:
            if default is None:
                raise BadSpec(f"missing config key {key!r}")
            return default
        try:
            return conv(entries.pop(key))
        except (ValueError, TypeError) as exc:
            raise BadSpec(f"bad value for {key!r}: {exc}") from exc

    ints = lambda s: tuple(int(tok) for tok in s.split())
    floats = lambda s: tuple(float(tok) for tok in s.split())

    dims = take("grid.dims", ints)
    lengths = take("grid.lengths", floats, (2 * np.pi,) * len(dims))
    dealias = take("grid.dealias", float, 2.0 / 3.0)
    try:
        elastic = ElasticParams(np.array(take("elastic.k", floats)))
    except ValueError as exc:
        raise BadSpec(f"elastic.k: {exc}") from exc
    viscous = ViscousParams(
        np.array(take("viscous.beta", floats)),
        np.array(take("viscous.chi", floats)),
        np.array(take("viscous.eta_rot", floats)),
        take("viscous.eta", float))
    step = StepConfig(
        dt=take("step.dt", float),
        t_end=take("step.t_end", float, 1.0),
        scheme=take("step.scheme", str, "imex_rk2"),
        cfl_target=take("step.cfl_target", float, 0.9),
        retract_every=take("step.retract_every", int, 100))
    initial = InitialSpec(
        mode=take("initial.mode", str, "random"),
        amplitude=take("initial.amplitude", float, 0.01),
        seed=take("initial.seed", int, 42),
        band=take("initial.band", int, 4))
    output = OutputSpec(
        snapshot_interval=take("output.snapshot_interval", int, 200),
        ledger_interval=take("output.ledger_interval", int, 10),
        directory=take("output.dir", str, "runs/default"))
    s_values = take("diagnostics.s", ints, (0, 2))
    if entries:
        raise BadSpec(f"unknown config keys: {sorted(entries)}")
    return SimConfig(dims, lengths, dealias, elastic, viscous, step, initial,
                     output, s_values)


def load_config(path):
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise IoError(f"cannot read config {path}: {exc}") from exc
    return config_from_text(text)


# -- initial data -----------------------------------------------------------

def random_band_limited(grid, comp_shape, band, rng):
    """Mean-free random field with integer modes up to ``band`` per axis,
    normalized to unit maximum amplitude."""
    if band <= 0:
        raise BadSpec("band limit must be a positive integer")
    white = rng.standard_normal(tuple(comp_shape) + grid.dims)
    hat = grid.fft(white)
    mask = np.ones(grid._hat_dims, dtype=bool)
    for a in range(grid.ndim):
        mask &= np.abs(grid._kint[a]) <= band
    zero = tuple([0] * grid.ndim)
    out = grid.ifft(hat * mask)
    out -= out.mean(axis=tuple(range(-grid.ndim, 0)), keepdims=True)
    peak = np.max(np.abs(out))
    if peak == 0.0:
        raise BadSpec("degenerate random field (empty band?)")
    return out / peak


def taylor_green_velocity(grid, amplitude=1.0):
    """The classical decaying vortex (third component zero)."""
    X = grid.mesh()
    kx = 2 * np.pi / grid.lengths[0]
    ky = 2 * np.pi / grid.lengths[1]
    v = np.zeros((3,) + grid.dims)
    if grid.ndim == 2:
        v[0] = np.sin(kx * X[0]) * np.cos(ky * X[1])
        v[1] = -np.cos(kx * X[0]) * np.sin(ky * X[1]) * (kx / ky)
    else:
        kz = 2 * np.pi / grid.lengths[2]
        v[0] = np.sin(kx * X[0]) * np.cos(ky * X[1]) * np.cos(kz * X[2])
        v[1] = -np.cos(kx * X[0]) * np.sin(ky * X[1]) * np.cos(kz * X[2]) * (kx / ky)
    return amplitude * v


def gen_initial(grid, spec):
    """Initial state: exactly orthonormal frame, divergence-free velocity."""
    if spec.amplitude < 0:
        raise BadSpec("amplitude must be nonnegative")
    if spec.mode == "zero" or spec.amplitude == 0.0:
        return StateSnapshot(identity_field(grid.dims), np.zeros((3,) + grid.dims), 0.0)
    if spec.mode == "taylor_green":
        return StateSnapshot(identity_field(grid.dims),
                             taylor_green_velocity(grid, spec.amplitude), 0.0)
    if spec.mode != "random":
        raise BadSpec(f"unknown initial mode {spec.mode!r}")
    rng = np.random.default_rng(spec.seed)
    angles = spec.amplitude * random_band_limited(grid, (3,), spec.band, rng)
    F = exp_update_field(identity_field(grid.dims), angles)
    v = grid.leray_project(random_band_limited(grid, (3,), spec.band, rng))
    peak = np.max(np.abs(v))
    v = spec.amplitude * v / peak if peak > 0 else v
    return StateSnapshot(F, v, 0.0)


# -- snapshots ---------------------------------------------------------------

def write_snapshot(path, state, grid):
    header = SNAPSHOT_MAGIC
    header += struct.pack("<HH", SNAPSHOT_VERSION, grid.ndim)
    header += struct.pack("<" + "I" * grid.ndim, *grid.dims)
    header += struct.pack("<" + "d" * grid.ndim, *grid.lengths)
    header += struct.pack("<d", state.t)
    payload = state.F.astype("<f8").tobytes() + state.v.astype("<f8").tobytes()
    crc = zlib.crc32(payload) & 0xFFFFFFFF
    try:
        with open(path, "wb") as fh:
            fh.write(header)
            fh.write(payload)
            fh.write(struct.pack("<I", crc))
    except OSError as exc:
        raise IoError(f"cannot write snapshot {path}: {exc}") from exc


def read_snapshot(path):
    """Returns (state, dims, lengths); checks magic, version, and CRC."""
    try:
        blob = Path(path).read_bytes()
    except OSError as exc:
        raise IoError(f"cannot read snapshot {path}: {exc}") from exc
    if len(blob) < 8 or blob[:4] != SNAPSHOT_MAGIC:
        raise FormatError(f"{path}: not a BFH1 snapshot")
    version, ndim = struct.unpack_from("<HH", blob, 4)
    if version != SNAPSHOT_VERSION:
        raise FormatError(f"{path}: unsupported snapshot version {version}")
    if ndim not in (2, 3):
        raise FormatError(f"{path}: bad dimension count {ndim}")
    off = 8
    need = off + 4 * ndim + 8 * ndim + 8
    if len(blob) < need:
        raise FormatError(f"{path}: truncated header")
    dims = struct.unpack_from("<" + "I" * ndim, blob, off)
    off += 4 * ndim
    lengths = struct.unpack_from("<" + "d" * ndim, blob, off)
    off += 8 * ndim
    (t,) = struct.unpack_from("<d", blob, off)
    off += 8
    count = 12 * int(np.prod(dims))
    payload_end = off + 8 * count
    if len(blob) < payload_end + 4:
        raise FormatError(f"{path}: truncated payload")
    payload = blob[off:payload_end]
    (crc_stored,) = struct.unpack_from("<I", blob, payload_end)
    if zlib.crc32(payload) & 0xFFFFFFFF != crc_stored:
        raise ChecksumMismatch(f"{path}: CRC32 mismatch")
    data = np.frombuffer(payload, dtype="<f8").astype(np.float64)
    F = data[: 9 * int(np.prod(dims))].reshape((3, 3) + dims)
    v = data[9 * int(np.prod(dims)):].reshape((3,) + dims)
    return StateSnapshot(F.copy(), v.copy(), float(t)), dims, lengths


# -- ledger -------------------------------------------------------------------

class Ledger:
    """In-memory ledger table with CSV persistence (fixed column order)."""

    def __init__(self, columns):
        self.columns = list(columns)
        self.rows = []

    def append(self, row_dict):
        self.rows.append([float(row_dict[c]) for c in self.columns])

    def column(self, name):
        i = self.columns.index(name)
        return np.array([r[i] for r in self.rows])

    def to_csv(self, path):
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(",".join(self.columns) + "\n")
                for r in self.rows:
                    fh.write(",".join(repr(x) for x in r) + "\n")
        except OSError as exc:
            raise IoError(f"cannot write ledger {path}: {exc}") from exc

    @classmethod
    def from_csv(cls, path):
        try:
            lines = Path(path).read_text(encoding="utf-8").splitlines()
        except OSError as exc:
            raise IoError(f"cannot read ledger {path}: {exc}") from exc
        led = cls(lines[0].split(","))
        for line in lines[1:]:
            if line.strip():
                led.rows.append([float(tok) for tok in line.split(",")])
        return led


class LedgerRecorder:
    """Observer that appends a diagnostics row per sample and accumulates the
    blow-up integral with the trapezoidal rule."""

    def __init__(self, grid, elastic, visc, s_values, path=None):
        self.grid, self.elastic, self.visc = grid, elastic, visc
        self.s_values = tuple(s_values)
        self.ledger = Ledger(diag.sample_columns(self.s_values))
        self.path = path
        self._prev = None
        self._cum = 0.0
        self._fh = None
        if path is not None:
            self._fh = open(path, "w", encoding="utf-8")
            self._fh.write(",".join(self.ledger.columns) + "\n")

    def __call__(self, state, step_index):
        row = diag.compute_sample(state, self.grid, self.elastic, self.visc,
                                  self.s_values)
        rate = row["curl_v_inf"] + row["grad_f_sq_inf"]
        if self._prev is not None:
            t0, r0 = self._prev
            self._cum += 0.5 * (rate + r0) * (row["t"] - t0)
        self._prev = (row["t"], rate)
        row["blowup_integral"] = self._cum
        self.ledger.append(row)
        if self._fh is not None:
            vals = [float(row[c]) for c in self.ledger.columns]
            self._fh.write(",".join(repr(x) for x in vals) + "\n")
            self._fh.flush()

    def close(self):
        if self._fh is not None:
            self._fh.close()
            self._fh = None


# -- CLI ----------------------------------------------------------------------

def _cmd_validate(args):
    cfg = load_config(args.config)
    bad = cfg.validate()
    if bad:
        for b in bad:
            print(f"violated: {b}", file=sys.stderr)
        return 1
    print("configuration valid")
    return 0


def _cmd_gen_initial(args):
    cfg = load_config(args.config)
    if args.seed is not None:
        cfg.initial.seed = args.seed
    grid = cfg.make_grid()
    state = gen_initial(grid, cfg.initial)
    out = Path(args.out or cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    write_snapshot(out / "initial.bfh", state, grid)
    (out / "config.txt").write_text(config_to_text(cfg), encoding="utf-8")
    print(f"wrote {out / 'initial.bfh'}")
    return 0


def _cmd_simulate(args):
    cfg = load_config(args.config)
    bad = cfg.validate()
    if bad:
        for b in bad:
            print(f"violated: {b}", file=sys.stderr)
        return 1
    if args.seed is not None:
        cfg.initial.seed = args.seed
    grid = cfg.make_grid()
    if args.resume:
        state, dims, lengths = read_snapshot(args.resume)
        if tuple(dims) != grid.dims:
            raise BadSpec(f"snapshot grid {dims} != config grid {grid.dims}")
    else:
        state = gen_initial(grid, cfg.initial)
    if args.steps is not None:
        cfg.step.t_end = state.t + args.steps * cfg.step.dt
    out = Path(args.out or cfg.output.directory)
    out.mkdir(parents=True, exist_ok=True)
    (out / "config.txt").write_text(config_to_text(cfg), encoding="utf-8")

    rec = LedgerRecorder(grid, cfg.elastic, cfg.viscous, cfg.s_values,
                         path=out / "ledger.csv")
    snap_every = max(1, cfg.output.snapshot_interval)

    def observer(st, i):
        rec(st, i)
        if i % snap_every == 0 or st.t >= cfg.step.t_end - 0.5 * cfg.step.dt:
            write_snapshot(out / f"snap_{i:08d}.bfh", st, grid)

    try:
        state = run(state, grid, cfg.elastic, cfg.viscous, cfg.step,
                    observer=observer,
                    observe_every=max(1, cfg.output.ledger_interval))
    except StepUnstable as exc:
        rec.close()
        print(f"unstable: {exc}", file=sys.stderr)
        print(f"partial ledger in {out / 'ledger.csv'}", file=sys.stderr)
        return 3
    rec.close()
    print(f"finished at t = {state.t:.6g}; ledger in {out / 'ledger.csv'}")
    return 0


def _cmd_audit(args):
    run_dir = Path(args.run)
    cfg = load_config(run_dir / "config.txt")
    grid = cfg.make_grid()
    snaps = sorted(run_dir.glob("snap_*.bfh"))
    if not snaps:
        raise IoError(f"no snapshots in {run_dir}")
    rec = LedgerRecorder(grid, cfg.elastic, cfg.viscous, cfg.s_values)
    for snap in snaps:
        state, dims, _ = read_snapshot(snap)
        if tuple(dims) != grid.dims:
            raise FormatError(f"{snap}: grid {dims} != config grid {grid.dims}")
        rec(state, 0)
    audit_path = run_dir / "audit.csv"
    rec.ledger.to_csv(audit_path)
    print(f"wrote {audit_path} ({len(rec.ledger.rows)} rows)")
    if args.columns:
        cols = [c.strip() for c in args.columns.split(",")]
        slice_path = Path(args.slice_out) if args.slice_out else run_dir / "audit_slice.csv"
        sub = Ledger(cols)
        for i in range(len(rec.ledger.rows)):
            sub.rows.append([rec.ledger.rows[i][rec.ledger.columns.index(c)]
                             for c in cols])
        sub.to_csv(slice_path)
        print(f"wrote {slice_path}")
    return 0


def _cmd_convergence(args):
    cfg = load_config(args.config)
    bad = cfg.validate()
    if bad:
        for b in bad:
            print(f"violated: {b}", file=sys.stderr)
        return 1
    grid = cfg.make_grid()
    state0 = gen_initial(grid, cfg.initial)
    t_end = args.t_end if args.t_end is not None else 20 * cfg.step.dt
    finals = []
    dts = [cfg.step.dt / 2 ** level for level in range(args.levels)]
    for dt in dts:
        step_cfg = StepConfig(dt=dt, t_end=t_end, scheme=cfg.step.scheme,
                              cfl_target=cfg.step.cfl_target, retract_every=0)
        finals.append(run(state0.copy(), grid, cfg.elastic, cfg.viscous, step_cfg,
                          check_cfl_every=0))
    errs = [grid.l2_norm(a.v - b.v) + grid.l2_norm(a.F - b.F)
            for a, b in zip(finals[:-1], finals[1:])]
    print(f"scheme {cfg.step.scheme}, horizon {t_end}")
    for dt, err in zip(dts[:-1], errs):
        print(f"  dt = {dt:.3e}  diff-to-half = {err:.6e}")
    for i in range(len(errs) - 1):
        print(f"  observed order: {np.log2(errs[i] / errs[i + 1]):.3f}")
    return 0


def _cmd_energy(args):
    cfg = load_config(args.config)
    state, dims, lengths = read_snapshot(args.snapshot)
    grid = Grid(dims, lengths, cfg.grid_dealias)
    row = diag.compute_sample(state, grid, cfg.elastic, cfg.viscous, cfg.s_values)
    for key in diag.sample_columns(cfg.s_values):
        print(f"{key} = {row[key]!r}")
    return 0


def build_parser():
    p = argparse.ArgumentParser(prog="framehydro",
                                description="biaxial frame hydrodynamics solver")
    sub = p.add_subparsers(dest="command", required=True)

    pv = sub.add_parser("validate", help="check coefficient conditions")
    pv.add_argument("--config", required=True)
    pv.set_defaults(func=_cmd_validate)

    pg = sub.add_parser("gen-initial", help="write the initial snapshot")
    pg.add_argument("--config", required=True)
    pg.add_argument("--out", default=None)
    pg.add_argument("--seed", type=int, default=None)
    pg.set_defaults(func=_cmd_gen_initial)

    ps = sub.add_parser("simulate", help="advance the system and record a ledger")
    ps.add_argument("--config", required=True)
    ps.add_argument("--out", default=None)
    ps.add_argument("--seed", type=int, default=None)
    ps.add_argument("--steps", type=int, default=None)
    ps.add_argument("--resume", default=None)
    ps.set_defaults(func=_cmd_simulate)

    pa = sub.add_parser("audit", help="recompute diagnostics from saved snapshots")
    pa.add_argument("--run", required=True)
    pa.add_argument("--columns", default=None,
                    help="comma-separated column subset to slice out")
    pa.add_argument("--slice-out", default=None)
    pa.set_defaults(func=_cmd_audit)

    pc = sub.add_parser("convergence", help="time-step refinement study")
    pc.add_argument("--config", required=True)
    pc.add_argument("--levels", type=int, default=4)
    pc.add_argument("--t-end", type=float, default=None)
    pc.set_defaults(func=_cmd_convergence)

    pe = sub.add_parser("energy", help="one-shot functionals on a snapshot")
    pe.add_argument("--config", required=True)
    pe.add_argument("--snapshot", required=True)
    pe.set_defaults(func=_cmd_energy)
    return p


def main(argv=None):
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except StepUnstable as exc:
        print(f"unstable: {exc}", file=sys.stderr)
        return 3
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
