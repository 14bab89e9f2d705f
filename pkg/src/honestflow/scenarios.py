"""Config-driven scenario runner: geometry + boundary rule + initial density,
bound into reproducible experiments with machine-readable reports.

Config grammar (INI-style sections, ``key = value`` entries, ``#`` comments):

    [geometry]
    kind = interval-union | billiard
    # interval-union keys
    rule = affine | geometric | explicit
    start = 0.0            # first left endpoint (affine / geometric)
    spacing = 2.0          # left-endpoint spacing (affine) or base (geometric)
    length = 1.0           # interval length (affine) or first length (geometric)
    ratio = 0.5            # length ratio per step (geometric)
    intervals = 0,1; 2,3   # explicit interval list, semicolon separated
    # billiard keys
    shape = disk | polygon
    center = 0, 0
    radius = 1.0
    vertices = x,y; x,y; x,y
    speeds = 1.0, 2.0      # finite speed set (isotropic directions), or
    speed_band = 0.5, 2.0  # speeds uniform on an annulus

    [boundary]
    kind = shift | kernel | specular
    scale = 1.0            # per-crossing weight, in (0, 1]
    row_0 = 1:0.5, 2:0.5   # kernel rows (outgoing index -> incoming weights)

    [density]
    kind = piecewise | ensemble
    pieces = 0, 1, 1.0     # lo, hi, value triples, semicolon separated
    count = 100000         # ensemble size
    seed = 42              # required for ensembles
    region = domain | disk:cx,cy,r | box:x0,y0,x1,y1

    [run]
    times = 0.5, 1.5, 3    # report times (time-series rows)
    tol = 1e-8             # expansion / diagnostic tolerance
    n_cap = 128            # order cap
    lambdas = 0.5, 1, 2    # resolvent test parameters (ladders only)
    windows = 0,1.5; 1,2   # honesty windows, semicolon separated
    grid_points = 8        # subwindow grid for window verdicts
    output_dir = reports
    label = my-scenario

Report files are deterministic: rerunning the same config and seed yields
byte-identical bytes (17 significant digits, fixed column order, no
timestamps).  Every number in them comes from a library operation; rendering
only formats.
"""

from __future__ import annotations

import configparser
import io
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from importlib import resources
from pathlib import Path

from .boundary import BoundaryRule
from .densities import PiecewiseDensity, ParticleEnsemble, sample_ensemble, transport_ensemble
from .expansion import DEFAULT_N_CAP, DEFAULT_TOL, Expansion
from .geometry import Billiard, IntervalUnion, VelocitySpec
from . import honesty as _hon

BUILTIN_NAMES = ("unit-ladder-honest", "geometric-ladder-dishonest", "disk-billiard")


class ConfigError(ValueError):
    """Raised when a scenario config fails validation; names the field."""


# -- parsing helpers --------------------------------------------------------


def _floats(text: str, where: str) -> tuple:
    try:
        return tuple(float(x) for x in text.split(",") if x.strip())
    except ValueError as exc:
        raise ConfigError(f"{where}: expected comma separated numbers, got {text!r}") from exc


def _pairs(text: str, where: str) -> tuple:
    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = _floats(chunk, where)
        if len(vals) != 2:
            raise ConfigError(f"{where}: expected pairs 'a,b', got {chunk.strip()!r}")
        out.append((vals[0], vals[1]))
    return tuple(out)


def _triples(text: str, where: str) -> tuple:
    out = []
    for chunk in text.split(";"):
        if not chunk.strip():
            continue
        vals = _floats(chunk, where)
        if len(vals) != 3:
            raise ConfigError(f"{where}: expected triples 'lo,hi,value', got {chunk.strip()!r}")
        out.append((vals[0], vals[1], vals[2]))
    return tuple(out)


class _Section:
    """One config section with used-key tracking and typed lookups."""

    def __init__(self, name: str, items: dict):
        self.name = name
        self.items = items
        self.used: set = set()

    def has(self, key: str) -> bool:
        return key in self.items

    def raw(self, key: str, default=None):
        self.used.add(key)
        return self.items.get(key, default)

    def require(self, key: str) -> str:
        if key not in self.items:
            raise ConfigError(f"[{self.name}] missing required key {key!r}")
        return self.raw(key)

    def text(self, key: str, default=None):
        v = self.raw(key, default)
        return v if v is None else str(v).strip()

    def number(self, key: str, default=None):
        v = self.raw(key, default)
        if v is None or isinstance(v, float):
            return v
        try:
            return float(v)
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key}: expected a number, got {v!r}") from exc

    def integer(self, key: str, default=None):
        v = self.raw(key, default)
        if v is None or isinstance(v, int):
            return v
        try:
            return int(str(v).strip())
        except ValueError as exc:
            raise ConfigError(f"[{self.name}] {key}: expected an integer, got {v!r}") from exc

    def reject_unused(self):
        stray = sorted(set(self.items) - self.used)
        if stray:
            raise ConfigError(f"[{self.name}] unknown key {stray[0]!r}")


@dataclass(frozen=True)
class ScenarioConfig:
    """Validated scenario: geometry, boundary rule, initial density, run plan."""

    label: str
    geometry: object  # IntervalUnion | Billiard
    boundary: BoundaryRule
    density_kind: str  # "piecewise" | "ensemble"
    pieces: tuple = ()
    count: int = 0
    seed: int | None = None
    region: str = "domain"
    times: tuple = ()
    tol: float = DEFAULT_TOL
    n_cap: int = DEFAULT_N_CAP
    lambdas: tuple = ()
    windows: tuple = ()
    grid_points: int = 8
    output_dir: str = "reports"

    @property
    def is_billiard(self) -> bool:
        return isinstance(self.geometry, Billiard)


def _parse_geometry(sec: _Section):
    kind = sec.text("kind")
    if kind == "interval-union":
        rule = sec.text("rule")
        if rule not in ("affine", "geometric", "explicit"):
            raise ConfigError(f"[geometry] rule: expected affine|geometric|explicit, got {rule!r}")
        try:
            if rule == "explicit":
                ivs = _pairs(sec.require("intervals"), "[geometry] intervals")
                geom = IntervalUnion("explicit", intervals=ivs)
            else:
                kwargs = dict(
                    start=sec.number("start", 0.0),
                    spacing=float(sec.require("spacing")),
                    length=float(sec.require("length")),
                )
                if rule == "geometric":
                    kwargs["ratio"] = float(sec.require("ratio"))
                geom = IntervalUnion(rule, **kwargs)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[geometry] {exc}") from exc
        sec.reject_unused()
        return geom
    if kind == "billiard":
        shape = sec.text("shape")
        if shape not in ("disk", "polygon"):
            raise ConfigError(f"[geometry] shape: expected disk|polygon, got {shape!r}")
        if sec.has("speeds") == sec.has("speed_band"):
            raise ConfigError("[geometry] give exactly one of speeds / speed_band")
        if sec.has("speeds"):
            vel = VelocitySpec("speeds", speeds=_floats(sec.require("speeds"), "[geometry] speeds"))
        else:
            lo_hi = _floats(sec.require("speed_band"), "[geometry] speed_band")
            if len(lo_hi) != 2:
                raise ConfigError("[geometry] speed_band: expected 'lo, hi'")
            vel = VelocitySpec("annulus", speed_min=lo_hi[0], speed_max=lo_hi[1])
        try:
            if shape == "disk":
                center = _floats(sec.text("center", "0, 0"), "[geometry] center")
                if len(center) != 2:
                    raise ConfigError("[geometry] center: expected 'x, y'")
                geom = Billiard("disk", center=center, radius=float(sec.require("radius")), velocities=vel)
            else:
                verts = _pairs(sec.require("vertices"), "[geometry] vertices")
                geom = Billiard("polygon", vertices=verts, velocities=vel)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(f"[geometry] {exc}") from exc
        sec.reject_unused()
        return geom
    raise ConfigError(f"[geometry] kind: expected interval-union|billiard, got {kind!r}")


def _parse_boundary(sec: _Section) -> BoundaryRule:
    kind = sec.text("kind")
    if kind not in ("shift", "kernel", "specular"):
        raise ConfigError(f"[boundary] kind: expected shift|kernel|specular, got {kind!r}")
    scale = sec.number("scale", 1.0)
    rows = {}
    for key in list(sec.items):
        if not key.startswith("row_"):
            continue
        try:
            k = int(key[4:])
        except ValueError as exc:
            raise ConfigError(f"[boundary] {key}: row keys look like row_<outgoing index>") from exc
        entries = []
        for chunk in str(sec.raw(key)).split(","):
            if not chunk.strip():
                continue
            if ":" not in chunk:
                raise ConfigError(f"[boundary] {key}: entries look like 'incoming:weight'")
            j, p = chunk.split(":", 1)
            try:
                entries.append((int(j), float(p)))
            except ValueError as exc:
                raise ConfigError(f"[boundary] {key}: bad entry {chunk.strip()!r}") from exc
        rows[k] = tuple(entries)
    if rows and kind != "kernel":
        raise ConfigError("[boundary] row_* entries are only valid with kind = kernel")
    if kind == "kernel" and not rows:
        raise ConfigError("[boundary] kernel rule needs at least one row_<k> entry")
    try:
        rule = BoundaryRule(kind, scale=scale, rows=tuple(rows.items()))
    except ValueError as exc:
        raise ConfigError(f"[boundary] {exc}") from exc
    sec.reject_unused()
    return rule


def _parse_density(sec: _Section, geometry) -> dict:
    kind = sec.text("kind")
    if kind == "piecewise":
        if isinstance(geometry, Billiard):
            raise ConfigError("[density] piecewise densities need an interval-union geometry")
        pieces = _triples(sec.require("pieces"), "[density] pieces")
        try:
            PiecewiseDensity.from_pieces(geometry, pieces)
        except ValueError as exc:
            raise ConfigError(f"[density] pieces: {exc}") from exc
        sec.reject_unused()
        return dict(density_kind="piecewise", pieces=pieces)
    if kind == "ensemble":
        if not isinstance(geometry, Billiard):
            raise ConfigError("[density] ensembles need a billiard geometry")
        count = sec.integer("count", 0)
        if count is None or count < 1:
            raise ConfigError("[density] count: ensembles need count >= 1")
        if not sec.has("seed"):
            raise ConfigError("[density] seed: required whenever an ensemble is requested")
        seed = sec.integer("seed")
        region = sec.text("region", "domain")
        for prefix in ("domain", "disk:", "box:"):
            if region == "domain" or region.startswith(prefix):
                break
        else:
            raise ConfigError(f"[density] region: expected domain|disk:...|box:..., got {region!r}")
        sec.reject_unused()
        return dict(density_kind="ensemble", count=count, seed=seed, region=region)
    raise ConfigError(f"[density] kind: expected piecewise|ensemble, got {kind!r}")


def parse_config(text: str, label: str | None = None) -> ScenarioConfig:
    """Parse and validate a scenario config from its text form."""
    cp = configparser.ConfigParser(interpolation=None, delimiters=("=",), comment_prefixes=("#",))
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"config syntax: {exc}") from exc
    sections = {name: _Section(name, dict(cp.items(name))) for name in cp.sections()}
    for required in ("geometry", "boundary", "density", "run"):
        if required not in sections:
            raise ConfigError(f"missing required section [{required}]")
    for name in sections:
        if name not in ("geometry", "boundary", "density", "run"):
            raise ConfigError(f"unknown section [{name}]")

    geometry = _parse_geometry(sections["geometry"])
    boundary = _parse_boundary(sections["boundary"])
    if isinstance(geometry, Billiard) and boundary.kind != "specular":
        raise ConfigError("[boundary] kind: billiard scenarios use the specular rule")
    if isinstance(geometry, IntervalUnion) and boundary.kind == "specular":
        raise ConfigError("[boundary] kind: interval-union scenarios use shift or kernel rules")
    density = _parse_density(sections["density"], geometry)

    run = sections["run"]
    times = _floats(run.text("times", ""), "[run] times")
    if not times:
        raise ConfigError("[run] times: need at least one report time")
    if any(t < 0 for t in times):
        raise ConfigError("[run] times: times must be nonnegative")
    tol = run.number("tol", DEFAULT_TOL)
    if not tol > 0:
        raise ConfigError("[run] tol: must be positive")
    n_cap = run.integer("n_cap", DEFAULT_N_CAP)
    if n_cap < 1:
        raise ConfigError("[run] n_cap: must be at least 1")
    lambdas = _floats(run.text("lambdas", ""), "[run] lambdas")
    if any(l <= 0 for l in lambdas):
        raise ConfigError("[run] lambdas: resolvent parameters must be positive")
    windows = _pairs(run.text("windows", ""), "[run] windows")
    for s, t in windows:
        if not 0 <= s < t:
            raise ConfigError(f"[run] windows: need 0 <= s < t, got {s},{t}")
    grid_points = run.integer("grid_points", 8)
    if grid_points < 2:
        raise ConfigError("[run] grid_points: need at least 2")
    out_dir = run.text("output_dir", "reports")
    cfg_label = run.text("label", None) or label
    if not cfg_label:
        raise ConfigError("[run] label: required (or pass a label when parsing)")
    run.reject_unused()

    if isinstance(geometry, Billiard) and lambdas:
        raise ConfigError("[run] lambdas: resolvent diagnostics are not defined for billiards")
    if isinstance(geometry, Billiard) and any(s != 0.0 for s, _ in windows):
        raise ConfigError("[run] windows: billiard honesty windows must start at 0")

    return ScenarioConfig(
        label=cfg_label,
        geometry=geometry,
        boundary=boundary,
        times=tuple(times),
        tol=float(tol),
        n_cap=int(n_cap),
        lambdas=tuple(lambdas),
        windows=tuple(windows),
        grid_points=int(grid_points),
        output_dir=out_dir,
        **density,
    )


def load_config(path) -> ScenarioConfig:
    p = Path(path)
    return parse_config(p.read_text(), label=p.stem)


def builtin_config_text(name: str) -> str:
    if name not in BUILTIN_NAMES:
        raise ConfigError(f"unknown builtin scenario {name!r}; have {', '.join(BUILTIN_NAMES)}")
    return (resources.files("honestflow") / "configs" / f"{name}.cfg").read_text()


def resolve_config(name_or_path: str) -> ScenarioConfig:
    """Builtin scenario name, or a path to a config file."""
    if name_or_path in BUILTIN_NAMES:
        return parse_config(builtin_config_text(name_or_path), label=name_or_path)
    p = Path(name_or_path)
    if not p.exists():
        raise ConfigError(
            f"{name_or_path!r} is neither a builtin scenario ({', '.join(BUILTIN_NAMES)}) nor a config file"
        )
    return load_config(p)


def with_overrides(cfg: ScenarioConfig, tol=None, n_cap=None, seed=None) -> ScenarioConfig:
    changes = {}
    if tol is not None:
        if not tol > 0:
            raise ConfigError("tol override must be positive")
        changes["tol"] = float(tol)
    if n_cap is not None:
        if n_cap < 1:
            raise ConfigError("n_cap override must be at least 1")
        changes["n_cap"] = int(n_cap)
    if seed is not None:
        if cfg.density_kind != "ensemble":
            raise ConfigError("seed override only applies to ensemble scenarios")
        changes["seed"] = int(seed)
    return replace(cfg, **changes) if changes else cfg


def initial_density(cfg: ScenarioConfig):
    """Materialize the configured initial state."""
    if cfg.density_kind == "piecewise":
        return PiecewiseDensity.from_pieces(cfg.geometry, cfg.pieces)
    return sample_ensemble(cfg.geometry, cfg.count, cfg.seed, cfg.region)


# -- running ----------------------------------------------------------------


@dataclass(frozen=True)
class TimeRow:
    """One time-series row: partial-sum state at time t."""

    t: float
    mass: float
    mass_defect: float
    residual_bound: float
    n_used: int
    converged: bool
    order_masses: tuple
    trace_norms: tuple


@dataclass(frozen=True)
class EnsembleRow:
    """One time-series row for a transported particle ensemble."""

    t: float
    mass: float
    mass_defect: float
    degenerate_weight: float
    max_rebounds: int
    rebound_masses: tuple
    tail_weights: tuple


@dataclass(frozen=True)
class ScenarioResult:
    config: ScenarioConfig
    kind: str  # "ladder" | "ensemble"
    initial_mass: float
    rows: tuple
    n_orders: int
    window_reports: tuple = ()
    resolvent_reports: tuple = ()
    decay_report: object = None

    @property
    def verdict(self) -> str:
        """Worst verdict across all diagnostics in the bundle."""
        verdicts = [r.verdict for r in self.window_reports]
        verdicts += [r.verdict for r in self.resolvent_reports]
        if self.decay_report is not None:
            verdicts.append(self.decay_report.verdict)
        if _hon.DISHONEST in verdicts:
            return _hon.DISHONEST
        if _hon.INCONCLUSIVE in verdicts:
            return _hon.INCONCLUSIVE
        return _hon.HONEST


def _ladder_row(ex: Expansion, f: PiecewiseDensity, t: float, tol: float, n_cap: int) -> TimeRow:
    masses = []
    traces = []
    absorbed = 0.0
    converged = False
    residual = float("nan")
    for n in range(n_cap + 1):
        masses.append(ex.order_mass(n, t))
        tr = ex.integrated_trace(n, 0.0, t)
        traces.append(tr.norm())
        residual = traces[-1]
        if residual < tol:
            converged = True
            break
        absorbed += _hon.flux_gap(tr, ex.rule, ex.geom)
    mass = float(sum(masses))
    return TimeRow(
        t=float(t),
        mass=mass,
        mass_defect=mass + absorbed - f.mass(),
        residual_bound=residual,
        n_used=len(masses) - 1,
        converged=converged,
        order_masses=tuple(masses),
        trace_norms=tuple(traces),
    )


def _pad_orders(rows, ex: Expansion, n_orders: int):
    """Extend every row's per-order columns to a common width with the true
    higher-order values (zero once the expansion is exhausted)."""
    out = []
    for row in rows:
        masses = list(row.order_masses)
        traces = list(row.trace_norms)
        for n in range(len(masses), n_orders + 1):
            masses.append(ex.order_mass(n, row.t))
            traces.append(ex.integrated_trace(n, 0.0, row.t).norm())
        out.append(replace(row, order_masses=tuple(masses), trace_norms=tuple(traces)))
    return tuple(out)


def _run_ladder(cfg: ScenarioConfig) -> ScenarioResult:
    geom, rule = cfg.geometry, cfg.boundary
    f = PiecewiseDensity.from_pieces(geom, cfg.pieces)
    ex = Expansion(geom, rule, f, max(cfg.times))
    rows = [_ladder_row(ex, f, t, cfg.tol, cfg.n_cap) for t in cfg.times]
    n_orders = max(row.n_used for row in rows)
    rows = _pad_orders(rows, ex, n_orders)

    def window_job(window):
        return _hon.honesty_on_interval(
            window, f, geom, rule, tol=cfg.tol, n_cap=cfg.n_cap, grid_points=cfg.grid_points
        )

    def resolvent_job(lam):
        return _hon.resolvent_defect(f, lam, geom, rule, tol=cfg.tol, n_cap=cfg.n_cap)

    window_reports: tuple = ()
    resolvent_reports: tuple = ()
    jobs = len(cfg.windows) + len(cfg.lambdas)
    if jobs:
        with ThreadPoolExecutor(max_workers=min(4, jobs)) as pool:
            wfut = [pool.submit(window_job, w) for w in cfg.windows]
            rfut = [pool.submit(resolvent_job, lam) for lam in cfg.lambdas]
            window_reports = tuple(fut.result() for fut in wfut)
            resolvent_reports = tuple(fut.result() for fut in rfut)

    return ScenarioResult(
        config=cfg,
        kind="ladder",
        initial_mass=f.mass(),
        rows=rows,
        n_orders=n_orders,
        window_reports=window_reports,
        resolvent_reports=resolvent_reports,
    )


def _run_ensemble(cfg: ScenarioConfig) -> ScenarioResult:
    geom, rule = cfg.geometry, cfg.boundary
    ens0 = initial_density(cfg)
    rows = []
    n_orders = 0
    final = ens0
    for t in cfg.times:
        ens_t = transport_ensemble(ens0, t, geom, scale=rule.scale)
        hist = ens_t.rebound_histogram()
        tails = ens_t.tail_weights()
        rows.append(
            EnsembleRow(
                t=float(t),
                mass=ens_t.mass(),
                mass_defect=ens_t.mass() - ens0.mass(),
                degenerate_weight=float(ens_t.weight[ens_t.degenerate].sum()),
                max_rebounds=int(ens_t.rebounds.max()) if len(ens_t) else 0,
                rebound_masses=tuple(float(x) for x in hist),
                tail_weights=tuple(float(x) for x in tails),
            )
        )
        n_orders = max(n_orders, len(rows[-1].rebound_masses) - 1)
        if t == max(cfg.times):
            final = ens_t
    padded = []
    for row in rows:
        pad = n_orders + 1 - len(row.rebound_masses)
        padded.append(
            replace(
                row,
                rebound_masses=row.rebound_masses + (0.0,) * pad,
                tail_weights=row.tail_weights + (0.0,) * max(0, n_orders + 1 - len(row.tail_weights)),
            )
        )
    decay = _hon.ensemble_trace_decay(final, max(cfg.times))
    window_reports = tuple(_window_decay(cfg, ens0, w) for w in cfg.windows)
    return ScenarioResult(
        config=cfg,
        kind="ensemble",
        initial_mass=ens0.mass(),
        rows=tuple(padded),
        n_orders=n_orders,
        window_reports=window_reports,
        decay_report=decay,
    )


def _window_decay(cfg: ScenarioConfig, ens0: ParticleEnsemble, window):
    s, t = window
    if s != 0.0:
        raise ConfigError("[run] windows: billiard honesty windows must start at 0")
    ens_t = transport_ensemble(ens0, t, cfg.geometry, scale=cfg.boundary.scale)
    return _hon.ensemble_trace_decay(ens_t, t)


def run_scenario(cfg: ScenarioConfig) -> ScenarioResult:
    """Execute the full report bundle for one validated config."""
    if cfg.is_billiard:
        return _run_ensemble(cfg)
    return _run_ladder(cfg)


# -- rendering --------------------------------------------------------------


def _fmt(x) -> str:
    if isinstance(x, bool):
        return "yes" if x else "no"
    if isinstance(x, int):
        return str(x)
    return format(float(x), ".17g")


def time_series_csv(result: ScenarioResult) -> str:
    """CSV time series: fixed column order, 17 significant digits."""
    k = result.n_orders
    buf = io.StringIO()
    if result.kind == "ladder":
        head = ["t", "mass", "mass_defect", "residual_bound", "n_used", "converged"]
        head += [f"mass_order_{n}" for n in range(k + 1)]
        head += [f"trace_order_{n}" for n in range(k + 1)]
        buf.write(",".join(head) + "\n")
        for row in result.rows:
            cells = [
                _fmt(row.t), _fmt(row.mass), _fmt(row.mass_defect),
                _fmt(row.residual_bound), str(row.n_used), _fmt(row.converged),
            ]
            cells += [_fmt(m) for m in row.order_masses]
            cells += [_fmt(v) for v in row.trace_norms]
            buf.write(",".join(cells) + "\n")
        return buf.getvalue()
    head = ["t", "mass", "mass_defect", "degenerate_weight", "max_rebounds"]
    head += [f"rebound_mass_{n}" for n in range(k + 1)]
    head += [f"tail_weight_{n}" for n in range(k + 1)]
    buf.write(",".join(head) + "\n")
    for row in result.rows:
        cells = [
            _fmt(row.t), _fmt(row.mass), _fmt(row.mass_defect),
            _fmt(row.degenerate_weight), str(row.max_rebounds),
        ]
        cells += [_fmt(m) for m in row.rebound_masses]
        cells += [_fmt(v) for v in row.tail_weights]
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def _describe_geometry(geom) -> str:
    if isinstance(geom, IntervalUnion):
        if geom.rule == "explicit":
            return f"interval-union explicit n={geom.n_intervals}"
        extra = f" ratio={_fmt(geom.ratio)}" if geom.rule == "geometric" else ""
        return (
            f"interval-union {geom.rule} start={_fmt(geom.start)} "
            f"spacing={_fmt(geom.spacing)} length={_fmt(geom.length)}{extra}"
        )
    if geom.shape == "disk":
        return f"billiard disk center={_fmt(geom.center[0])},{_fmt(geom.center[1])} radius={_fmt(geom.radius)}"
    return f"billiard polygon vertices={len(geom.vertices)}"


def summary_text(result: ScenarioResult) -> str:
    """Structured-text summary: verdicts, limits, truncation bounds."""
    cfg = result.config
    lines = [
        f"scenario: {cfg.label}",
        f"geometry: {_describe_geometry(cfg.geometry)}",
        f"boundary: {cfg.boundary.kind} scale={_fmt(cfg.boundary.scale)}",
        f"initial-mass: {_fmt(result.initial_mass)}",
        f"tolerance: {_fmt(cfg.tol)}",
        f"order-cap: {cfg.n_cap}",
        f"overall-verdict: {result.verdict}",
        "",
        "[time-series]",
    ]
    if result.kind == "ladder":
        for row in result.rows:
            lines.append(
                f"t={_fmt(row.t)} mass={_fmt(row.mass)} mass-defect={_fmt(row.mass_defect)} "
                f"residual-bound={_fmt(row.residual_bound)} n-used={row.n_used} "
                f"converged={_fmt(row.converged)}"
            )
    else:
        for row in result.rows:
            lines.append(
                f"t={_fmt(row.t)} mass={_fmt(row.mass)} mass-defect={_fmt(row.mass_defect)} "
                f"degenerate-weight={_fmt(row.degenerate_weight)} max-rebounds={row.max_rebounds}"
            )
    if result.window_reports:
        lines += ["", "[windows]"]
        for rep in result.window_reports:
            if isinstance(rep, _hon.IntervalHonestyReport):
                s, t = rep.window
                ws, wt = rep.witness_window
                lines.append(
                    f"window={_fmt(s)},{_fmt(t)} verdict={rep.verdict} "
                    f"witness={_fmt(ws)},{_fmt(wt)} witness-limit={_fmt(rep.witness_limit)}"
                )
            else:
                lines.append(
                    f"window=0,{_fmt(rep.elapsed)} verdict={rep.verdict} "
                    f"final-tail={_fmt(rep.tail_weights[-1] if rep.tail_weights else 0.0)} "
                    f"stat-tol={_fmt(rep.stat_tol)}"
                )
    if result.resolvent_reports:
        lines += ["", "[resolvents]"]
        for rep in result.resolvent_reports:
            lines.append(
                f"lambda={_fmt(rep.lam)} verdict={rep.verdict} limit={_fmt(rep.limit_estimate)} "
                f"orders={len(rep.entries) - 1} stabilized={_fmt(rep.stabilized)}"
            )
    if result.decay_report is not None:
        rep = result.decay_report
        lines += [
            "",
            "[trace-decay]",
            f"elapsed={_fmt(rep.elapsed)} verdict={rep.verdict} "
            f"max-rebounds={rep.max_rebounds} degenerate-weight={_fmt(rep.degenerate_weight)} "
            f"stat-tol={_fmt(rep.stat_tol)}",
            "tail-weights=" + ",".join(_fmt(x) for x in rep.tail_weights),
        ]
    return "\n".join(lines) + "\n"


def output_directory(cfg: ScenarioConfig) -> Path:
    """Configured output directory; HONESTFLOW_OUTPUT_DIR overrides."""
    env = os.environ.get("HONESTFLOW_OUTPUT_DIR")
    return Path(env) if env else Path(cfg.output_dir)


def write_reports(result: ScenarioResult, out_dir=None) -> tuple:
    """Write the CSV series and text summary; returns the paths written."""
    base = Path(out_dir) if out_dir is not None else output_directory(result.config)
    base.mkdir(parents=True, exist_ok=True)
    series = base / f"{result.config.label}-series.csv"
    summary = base / f"{result.config.label}-summary.txt"
    with open(series, "w", newline="\n") as fh:
        fh.write(time_series_csv(result))
    with open(summary, "w", newline="\n") as fh:
        fh.write(summary_text(result))
    return series, summary
