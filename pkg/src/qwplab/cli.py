"""
``qwplab`` command line: uncertainty histories, verification suites,
parameter scans and figure data.

Exit status: 0 ok, 1 verification failure, 2 usage, 3 physics, 4 I/O.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import analytic
from .core import (
    INEQUALITY_TOL,
    Harmonic,
    Inverted,
    Linear,
    PhasePoint,
    PotentialSpec,
    QWPError,
    UncertaintyState,
    classify_regime,
)
from .gaussian import (
    GaussianParams,
    chirp_extrema,
    chirp_history,
    moments_from_gaussian,
    sample_superposition,
    sample_wavefunction,
    superposition_moments,
    two_gaussian_superposition,
)
from .grid import dump_snapshot
from .oracle import auto_grid, propagate_to_times, rk4_means, rk4_moments
from .verify import GRID_DT, SUITES, run_suite

EXIT_OK, EXIT_VERIFY, EXIT_USAGE, EXIT_PHYSICS, EXIT_IO = 0, 1, 2, 3, 4
DEFAULTS_ENV = "QWPLAB_DEFAULTS"
MODES = ("analytic", "ode", "grid", "compare")
ORACLES = ("ode", "grid")
SCAN_PARAMS = ("initial_dxp", "product", "k")
COLUMNS = ("t", "dx2", "dp2", "dxp", "a", "K", "U", "mean_x", "mean_p")
DEV_COLUMNS = ("dev_dx2", "dev_dp2", "dev_dxp", "dev_mean_x", "dev_mean_p")
SCAN_COLUMNS = ("value", "dx2", "dp2", "dxp", "U", "T", "T_max",
                "tau_max", "a_max", "tau_min", "a_min")


class UsageError(Exception):
    pass


def _floats(text: str, count: int | None = None) -> tuple[float, ...]:
    try:
        vals = tuple(float(v) for v in str(text).split(","))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")
    if count is not None and len(vals) != count:
        raise argparse.ArgumentTypeError(f"expected {count} values, got {text!r}")
    return vals


def _triple(text):
    return _floats(text, 3)


def _pair(text):
    return _floats(text, 2)


def _bool(text) -> bool:
    if isinstance(text, bool):
        return text
    low = str(text).strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {text!r}")


# Every option: (flags, argparse kwargs).  The type doubles as the parser for
# values read from a defaults file.
POTENTIAL_OPTS = {
    "regime": (("--regime",), dict(choices=("linear", "harmonic", "inverted"))),
    "A": (("--A",), dict(type=float, help="quadratic coefficient of V")),
    "omega": (("--omega",), dict(type=float, help="oscillator frequency")),
    "inverted": (("--inverted",), dict(action="store_true", default=None,
                                       help="with --omega: unstable oscillator")),
    "B": (("--B",), dict(type=float, help="linear coefficient of V")),
    "mass": (("--mass",), dict(type=float)),
    "hbar": (("--hbar",), dict(type=float)),
}
INIT_OPTS = {
    "init_moments": (("--init-moments",), dict(type=_triple, metavar="DX2,DP2,DXP")),
    "init_gaussian": (("--init-gaussian",), dict(type=_pair, metavar="ALPHA,A")),
    "preset": (("--preset",), dict(metavar="NAME",
                                   help="coherent, squeezed:<alpha>, superposition:<sep>, k:<value>")),
    "x0": (("--x0",), dict(type=float, help="initial mean position")),
    "p0": (("--p0",), dict(type=float, help="initial mean momentum")),
}
TIME_OPTS = {
    "t0": (("--t0",), dict(type=float)),
    "t1": (("--t1",), dict(type=float)),
    "samples": (("--samples",), dict(type=int)),
}
EVOLVE_OPTS = {
    "mode": (("--mode",), dict(choices=MODES)),
    "oracle": (("--oracle",), dict(choices=ORACLES, help="reference for compare mode")),
    "dt": (("--dt",), dict(type=float, help="oracle time step")),
    "snapshots": (("--snapshots",), dict(metavar="DIR", help="grid wavefunction dumps")),
}
OUT_OPT = {"out": (("--out",), dict(help="output file ('-' for stdout)"))}
SEED_OPT = {"seed": (("--seed",), dict(type=int))}
BUILTIN = dict(regime=None, A=None, omega=None, inverted=False, B=0.0, mass=1.0, hbar=1.0,
               init_moments=None, init_gaussian=None, preset=None, x0=0.0, p0=0.0,
               t0=0.0, t1=1.0, samples=100, mode="analytic", oracle="ode", dt=None,
               snapshots=None, out="-", seed=0, suite="all", param=None, range=None)


def _add(parser, opts):
    for flags, kw in opts.values():
        parser.add_argument(*flags, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qwplab", description=__doc__.strip().splitlines()[0])
    parser.add_argument("--config", help=f"key=value defaults file (also ${DEFAULTS_ENV})")
    sub = parser.add_subparsers(dest="command", required=True)

    ev = sub.add_parser("evolve", help="uncertainty history as CSV")
    for group in (POTENTIAL_OPTS, INIT_OPTS, TIME_OPTS, EVOLVE_OPTS, OUT_OPT):
        _add(ev, group)

    ve = sub.add_parser("verify", help="run property suites")
    ve.add_argument("--suite", choices=tuple(SUITES) + ("all",))
    _add(ve, SEED_OPT)

    sc = sub.add_parser("scan", help="derived quantities over a parameter range")
    sc.add_argument("--param", choices=SCAN_PARAMS, required=False)
    sc.add_argument("--range", metavar="LO,HI")
    for group in (POTENTIAL_OPTS, INIT_OPTS, {"samples": TIME_OPTS["samples"]}, OUT_OPT):
        _add(sc, group)

    fi = sub.add_parser("figures", help="data and plot scripts for the three figures")
    fi.add_argument("--out", default="figures", help="output directory (default: figures)")
    return parser


def _option_types() -> dict:
    types = {"suite": str, "param": str, "range": str, "config": str}
    for group in (POTENTIAL_OPTS, INIT_OPTS, TIME_OPTS, EVOLVE_OPTS, OUT_OPT, SEED_OPT):
        for dest, (_, kw) in group.items():
            types[dest] = _bool if kw.get("action") == "store_true" else kw.get("type", str)
    return types


def read_defaults(path) -> dict:
    """Parse a ``key = value`` file; ``#`` starts a comment.

    Keys are option names with ``-`` or ``_``; values are converted like
    the corresponding flag.
    """
    types = _option_types()
    out = {}
    for num, raw in enumerate(Path(path).read_text().splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition("=")
        key = key.strip().lstrip("-").replace("-", "_")
        value = value.strip().strip("\"'")
        if not sep or key not in types:
            raise UsageError(f"{path}:{num}: unrecognized entry {raw.strip()!r}")
        try:
            out[key] = types[key](value)
        except (ValueError, argparse.ArgumentTypeError) as exc:
            raise UsageError(f"{path}:{num}: {exc}")
    return out


def resolve_options(args: argparse.Namespace) -> argparse.Namespace:
    """Fill options left unset on the command line from the defaults file,
    then from built-in defaults."""
    path = args.config or os.environ.get(DEFAULTS_ENV)
    file_vals = read_defaults(path) if path else {}
    merged = dict(vars(args))
    for key, value in merged.items():
        if value is None:
            merged[key] = file_vals.get(key, BUILTIN.get(key))
    return argparse.Namespace(**merged)


@dataclass(frozen=True)
class RunConfig:
    pot: PotentialSpec
    hbar: float
    state: UncertaintyState
    phase: PhasePoint
    packets: tuple
    gaussian: bool
    times: np.ndarray
    mode: str
    oracle: str
    dt: float | None
    out: str
    snapshots: str | None


def potential_from(args) -> PotentialSpec:
    m = args.mass
    if args.A is not None and args.omega is not None:
        raise UsageError("give either --A or --omega, not both")
    if args.A is not None:
        pot = PotentialSpec(args.A, args.B, 0.0, m)
        if args.regime is not None:
            kind = type(classify_regime(pot)).__name__.lower()
            if kind != args.regime:
                raise UsageError(f"--A {args.A} is {kind}, not {args.regime}")
        return pot
    regime = args.regime
    if regime is None:
        regime = "linear" if args.omega is None else ("inverted" if args.inverted else "harmonic")
    if regime == "linear":
        if args.omega is not None:
            raise UsageError("--omega needs a harmonic or inverted regime")
        return PotentialSpec(0.0, args.B, 0.0, m)
    if args.omega is None:
        raise UsageError(f"the {regime} regime needs --omega or --A")
    if args.inverted and regime == "harmonic":
        raise UsageError("--inverted conflicts with --regime harmonic")
    make = PotentialSpec.inverted if regime == "inverted" else PotentialSpec.harmonic
    return make(args.omega, m, args.B)


def initial_condition(args, pot: PotentialSpec):
    """Return ``(state, phase, packets, is_gaussian)``.

    ``packets`` lists the Gaussians whose normalized sum is the initial
    wavefunction; it is empty for a bare moment triple.
    """
    hbar = args.hbar
    given = [n for n in ("init_moments", "init_gaussian", "preset") if getattr(args, n) is not None]
    if len(given) > 1:
        raise UsageError("give exactly one of --init-moments, --init-gaussian, --preset")
    phase = PhasePoint(args.x0, args.p0)
    if not given or args.init_gaussian is not None:
        alpha, a = args.init_gaussian or (1.0, 0.0)
        return _gaussian(GaussianParams(alpha, a, args.x0, args.p0), hbar)
    if args.init_moments is not None:
        s = UncertaintyState.physical(*args.init_moments, hbar=hbar)
        gaussian = abs(s.dx2 * s.dp2 - s.dxp**2 - 0.25 * hbar * hbar) <= 1e-9 * hbar * hbar
        packets = ()
        if gaussian:
            g = GaussianParams(2 * s.dx2, s.dxp / (2 * hbar * s.dx2), args.x0, args.p0)
            packets = (g,)
        return s, phase, packets, gaussian
    name, _, value = args.preset.partition(":")
    regime = classify_regime(pot)
    if name == "coherent" and not value:
        if not isinstance(regime, Harmonic):
            raise UsageError("the coherent preset needs a harmonic potential")
        alpha = hbar / (pot.m * regime.omega)
        return _gaussian(GaussianParams(alpha, 0.0, args.x0, args.p0), hbar)
    try:
        number = float(value)
    except ValueError:
        raise UsageError(f"unknown preset {args.preset!r}")
    if name == "squeezed":
        return _gaussian(GaussianParams(number, 0.0, args.x0, args.p0), hbar)
    if name == "superposition":
        packets = tuple(two_gaussian_superposition(number, 1.0, args.x0))
        s, _ = superposition_moments(number, 1.0, args.x0, hbar)
        return s, PhasePoint(args.x0, 0.0), packets, False
    if name == "k":
        s = analytic.gaussian_orbit(number, regime, pot.m, hbar).state_at(0.0)
        g = GaussianParams(2 * s.dx2, s.dxp / (2 * hbar * s.dx2), args.x0, args.p0)
        return s, phase, (g,), True
    raise UsageError(f"unknown preset {args.preset!r}")


def _gaussian(g: GaussianParams, hbar: float):
    s, q = moments_from_gaussian(g, hbar)
    return s, q, (g,), True


def time_samples(t0: float, t1: float, samples: int) -> np.ndarray:
    if t1 < t0:
        raise UsageError(f"--t1 {t1} precedes --t0 {t0}")
    if t0 == t1:
        return np.array([t0])
    if samples < 2:
        raise UsageError("--samples must be at least 2")
    return np.linspace(t0, t1, samples)


def run_config(args) -> RunConfig:
    if not args.hbar > 0 or not args.mass > 0:
        raise UsageError("--hbar and --mass must be positive")
    pot = potential_from(args)
    s, q, packets, gaussian = initial_condition(args, pot)
    return RunConfig(pot, args.hbar, s, q, packets, gaussian,
                     time_samples(args.t0, args.t1, args.samples),
                     args.mode, args.oracle, args.dt, args.out, args.snapshots)


def _analytic_rows(cfg: RunConfig):
    dx2, dp2, dxp = analytic.evolve_series(cfg.state, cfg.pot, cfg.times)
    mx, mp = analytic.trajectory_series(cfg.phase, cfg.pot, cfg.times)
    return np.broadcast_arrays(dx2, dp2, dxp, mx, mp)


def _ode_rows(cfg: RunConfig):
    dt = 1e-4 if cfg.dt is None else cfg.dt
    p, s, q = cfg.pot, cfg.state, cfg.phase
    dx2, dp2, dxp = rk4_moments(s.dx2, s.dp2, s.dxp, p.A, p.m, cfg.times, dt)
    mx, mp = rk4_means(q.x, q.p, p.A, p.B, p.m, cfg.times, dt)
    return dx2, dp2, dxp, mx, mp


def _grid_rows(cfg: RunConfig):
    if not cfg.packets:
        raise UsageError("grid propagation needs a wavefunction; this moment triple "
                         "is not a Gaussian, use --init-gaussian or --preset")
    if cfg.times[0] < 0:
        raise UsageError("grid propagation runs forward from t = 0; use --t0 >= 0")
    kind = type(classify_regime(cfg.pot)).__name__.lower()
    dt = GRID_DT[kind] if cfg.dt is None else cfg.dt
    t_end = float(cfg.times[-1])
    grid = auto_grid(None, cfg.pot, t_end, cfg.hbar, state=cfg.state, phase=cfg.phase)
    if len(cfg.packets) == 1:
        psi = sample_wavefunction(cfg.packets[0], grid, cfg.hbar)
    else:
        psi = sample_superposition(cfg.packets, grid, cfg.hbar)
    hist = propagate_to_times(psi, cfg.pot, cfg.times, cfg.pot.m, cfg.hbar, dt,
                              keep_snapshots=cfg.snapshots is not None)
    if cfg.snapshots is not None:
        folder = Path(cfg.snapshots)
        folder.mkdir(parents=True, exist_ok=True)
        for i, wf in enumerate(hist.snapshots):
            dump_snapshot(wf, folder / f"snap_{i:05d}.bin")
    return hist.dx2, hist.dp2, hist.dxp, hist.mean_x, hist.mean_p


def _fmt(v) -> str:
    return "" if v is None else "%.17g" % (v + 0.0)


def evolve_table(cfg: RunConfig) -> tuple[tuple[str, ...], list[list[str]]]:
    """Header and formatted rows for :func:`cmd_evolve`."""
    if cfg.mode == "analytic":
        cols, ref = _analytic_rows(cfg), None
    elif cfg.mode == "ode":
        cols, ref = _ode_rows(cfg), None
    elif cfg.mode == "grid":
        cols, ref = _grid_rows(cfg), None
    else:
        cols = _analytic_rows(cfg)
        ref = _ode_rows(cfg) if cfg.oracle == "ode" else _grid_rows(cfg)
    dx2, dp2, dxp, mx, mp = cols
    pot, hbar = cfg.pot, cfg.hbar
    K = dp2 + 2 * pot.m * pot.A * dx2
    U = dx2 * dp2 - dxp * dxp
    if cfg.mode == "analytic" and np.any(U - 0.25 * hbar * hbar < -INEQUALITY_TOL):
        raise QWPError("analytic row violates the generalized uncertainty inequality")
    header = COLUMNS + (DEV_COLUMNS if ref is not None else ())
    rows = []
    for i, t in enumerate(cfg.times):
        a = dxp[i] / (2 * hbar * dx2[i]) if cfg.gaussian else None
        row = [t, dx2[i], dp2[i], dxp[i], a, K[i], U[i], mx[i], mp[i]]
        if ref is not None:
            row += [abs(c[i] - r[i]) for c, r in zip(cols, ref)]
        rows.append([_fmt(v) for v in row])
    return header, rows


def write_csv(path: str, header, rows) -> None:
    text = ",".join(header) + "\n" + "".join(",".join(r) + "\n" for r in rows)
    if path == "-":
        sys.stdout.write(text)
    else:
        Path(path).write_text(text)


def cmd_evolve(args) -> int:
    cfg = run_config(args)
    write_csv(cfg.out, *evolve_table(cfg))
    return EXIT_OK


def cmd_verify(args) -> int:
    results = run_suite(args.suite, args.seed)
    for r in results:
        print(r.line())
    failed = sum(not r.passed for r in results)
    print(f"{len(results) - failed}/{len(results)} properties passed")
    return EXIT_OK if not failed else EXIT_VERIFY


def scan_values(text: str | None, samples: int) -> np.ndarray:
    if text is None:
        raise UsageError("scan needs --range LO,HI")
    try:
        lo, hi = _pair(text)
    except argparse.ArgumentTypeError as exc:
        raise UsageError(str(exc))
    if not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise UsageError(f"bad range {text!r}")
    if lo == hi:
        return np.array([lo])
    if samples < 2:
        raise UsageError("--samples must be at least 2")
    return np.linspace(lo, hi, samples)


def _scan_state(param: str, value: float, base: UncertaintyState, pot: PotentialSpec,
                hbar: float) -> UncertaintyState:
    if param == "k":
        return analytic.gaussian_orbit(value, classify_regime(pot), pot.m, hbar).state_at(0.0)
    U = base.dx2 * base.dp2 - base.dxp**2
    if param == "product":
        if value < U:
            raise UsageError(f"product {value} lies below U = {U}")
        # narrowing branch: negative mixed uncertainty
        return UncertaintyState.physical(base.dx2, value / base.dx2,
                                         -math.sqrt(value - U), hbar)
    if base.dx2 * base.dp2 - value * value < 0.25 * hbar * hbar - INEQUALITY_TOL:
        raise UsageError(f"initial dxp = {value} violates the uncertainty inequality")
    return UncertaintyState.physical(base.dx2, base.dp2, value, hbar)


def scan_table(args):
    """Rows for :func:`cmd_scan`.  ``product`` and ``initial_dxp`` vary one
    quantity of the base triple (``--init-moments``, default: a coherent
    width with ``U = hbar^2/4`` for ``product`` and ``U = 3 hbar^2/4`` for
    ``initial_dxp``); ``k`` walks Gaussian orbits at their narrowest point."""
    if args.param is None:
        raise UsageError("scan needs --param")
    hbar = args.hbar
    pot = potential_from(args)
    regime = classify_regime(pot)
    values = scan_values(args.range, args.samples)
    w = 1.0 if isinstance(regime, Linear) else regime.omega
    if args.init_moments is not None:
        base = UncertaintyState.physical(*args.init_moments, hbar=hbar)
    else:
        dx2 = hbar / (2 * pot.m * w)
        dp2 = hbar * pot.m * w / 2 * (1.0 if args.param == "product" else 4.0)
        base = UncertaintyState(dx2, dp2, 0.0)
    rows = []
    for v in values:
        s = _scan_state(args.param, float(v), base, pot, hbar)
        U = s.dx2 * s.dp2 - s.dxp**2
        T = analytic.time_of_zero_mixed(s, pot)
        T_max = analytic.narrowing_time_bound(s, pot) if isinstance(regime, Inverted) else None
        ext = None
        if abs(U - 0.25 * hbar * hbar) <= 1e-9 * hbar * hbar:
            K = s.dp2 + 2 * pot.m * pot.A * s.dx2
            k = K if isinstance(regime, Linear) else K / (pot.m * w * hbar)
            ext = chirp_extrema(k, regime, pot.m, hbar)
        extra = [None] * 4 if ext is None else [ext.tau_max, ext.a_max, ext.tau_min, ext.a_min]
        rows.append([_fmt(x) for x in [v, s.dx2, s.dp2, s.dxp, U, T, T_max] + extra])
    return SCAN_COLUMNS, rows


def cmd_scan(args) -> int:
    write_csv(args.out, *scan_table(args))
    return EXIT_OK


def figure_tables():
    """Data for the three figures, with ``m = hbar = omega = 1``.

    Oscillator panels use the scaled chirp ``2 hbar a/(m w)`` and scaled
    uncertainties ``dx2 2mw/hbar``, ``dp2 2/(m w hbar)``, ``dxp 2/hbar``.
    """
    tables = {}
    tau = np.linspace(-4.0, 4.0, 801)
    orbit = analytic.gaussian_orbit(0.5, Linear())
    dx2, _, _ = analytic.canonical_orbit_series(orbit, tau)
    tables["fig1"] = (("tau", "dx2", "a"), [tau, dx2, chirp_history(0.5, Linear(), tau=tau)])

    for name, regime, ks, k_unc, tau in (
            ("fig2", Harmonic(1.0), (1.2, 1.5, 2.5), 1.2, np.linspace(-math.pi / 2, math.pi / 2, 801)),
            ("fig3", Inverted(1.0), (-1.0, 0.0, 0.8), 1.0, np.linspace(-5.0, 5.0, 801))):
        chirps = [2.0 * chirp_history(k, regime, tau=tau) for k in ks]
        dx2, dp2, dxp = analytic.canonical_orbit_series(analytic.gaussian_orbit(k_unc, regime), tau)
        header = ("tau",) + tuple(f"a_k{k:g}" for k in ks) + ("DX2", "DP2", "DXP")
        tables[name] = (header, [tau, *chirps, 2 * dx2, 2 * dp2, 2 * dxp])
    return tables


def _gnuplot(name: str, header) -> str:
    csv = f"{name}.csv"

    def plot(cols, extra=""):
        return "plot " + ", ".join(f"'{csv}' using 1:{c} with lines title '{header[c - 1]}'"
                                   for c in cols) + extra

    lines = ["set datafile separator ','", "set terminal pngcairo size 1200,450",
             f"set output '{name}.png'", "set xlabel 'tau'"]
    if name == "fig1":
        # chirp extremes at tau = -+hbar m/(2K) = -+1, where dx2 reaches 2 dx2_min = 2
        lines += ["set arrow from 1, graph 0 to 1, graph 1 nohead dashtype 2",
                  "set arrow from -1, graph 0 to -1, graph 1 nohead dashtype 2",
                  plot([3, 2], ", 2 title '2 dx2_min' dashtype 3")]
    else:
        lines += ["set multiplot layout 1,2", plot([2, 3, 4]), plot([5, 6, 7]), "unset multiplot"]
    return "\n".join(lines) + "\n"


def cmd_figures(args) -> int:
    folder = Path(args.out)
    folder.mkdir(parents=True, exist_ok=True)
    for name, (header, cols) in figure_tables().items():
        rows = [[_fmt(float(c[i])) for c in cols] for i in range(len(cols[0]))]
        write_csv(str(folder / f"{name}.csv"), header, rows)
        (folder / f"{name}.gp").write_text(_gnuplot(name, header))
    return EXIT_OK


COMMANDS = {"evolve": cmd_evolve, "verify": cmd_verify, "scan": cmd_scan, "figures": cmd_figures}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        args = resolve_options(args)
        return COMMANDS[args.command](args)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        print(f"qwplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except QWPError as exc:
        print(f"qwplab: physics error: {exc}", file=sys.stderr)
        return EXIT_PHYSICS
    except OSError as exc:
        print(f"qwplab: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ValueError as exc:
        print(f"qwplab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
