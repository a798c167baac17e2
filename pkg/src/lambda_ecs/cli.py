"""Command line: figure data, parameter sweeps and verification suites.

Subcommands::

    lambda-ecs fig2    concurrence of the projected cat state (lossless)
    lambda-ecs fig3    concurrence with cavity loss for several kappa
    lambda-ecs sweep   closed-form quantities over a parameter grid
    lambda-ecs verify  closed form versus numerical oracles

Exit codes: 0 success, 1 configuration error, 2 verification failure,
3 numerical failure.  ``LAMBDA_ECS_WORKERS`` sets the sweep pool size.
"""

from __future__ import annotations

import argparse
import csv
import io
import itertools
import json
import math
import os
import sys
import time
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Sequence

import numpy as np

from . import analytic as an
from .core import CoherentPair, SystemParams, read_config
from .exceptions import (
    ConfigError,
    CrosscheckError,
    DegenerateOutcomeError,
    IntegrationError,
    RegimeWarning,
    TruncationError,
)

__all__ = ["RunConfig", "build_parser", "main", "cmd_fig2", "cmd_fig3", "cmd_sweep", "cmd_verify"]

EXIT_OK, EXIT_CONFIG, EXIT_VERIFY, EXIT_NUMERIC = 0, 1, 2, 3
SCHEMA_VERSION = 1
WORKERS_ENV = "LAMBDA_ECS_WORKERS"
FIG3_KAPPAS = (0.1, 0.2, 0.5)


@dataclass(frozen=True)
class RunConfig:
    """Everything a subcommand needs; validated on construction."""

    command: str
    alpha: float = 1.0
    beta: float = 1.5
    g_eff: float = 2.5
    kappa: float = 0.0
    kappas: tuple = FIG3_KAPPAS
    t_start: float = 0.0
    t_end: float | None = None
    n_points: int = 400
    n_max: int | None = None
    out: str | None = None
    fmt: str = "csv"
    sign: str = "plus"
    oracle: bool = True
    grid: dict = field(default_factory=dict)
    max_rows: int = 200_000
    integrator: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.n_points < 2:
            raise ConfigError("points must be at least 2")
        if self.t_start < 0:
            raise ConfigError("t_start must be non-negative")
        if self.t_end is not None and not self.t_end > self.t_start:
            raise ConfigError("t_max must exceed t_start")
        if self.sign not in ("plus", "minus"):
            raise ConfigError("sign must be 'plus' or 'minus'")
        if self.fmt not in ("csv", "json"):
            raise ConfigError("format must be 'csv' or 'json'")
        if self.n_max is not None and self.n_max < 1:
            raise ConfigError("n_max must be a positive integer")
        if self.kappa < 0 or any(k < 0 for k in self.kappas):
            raise ConfigError("kappa must be non-negative")
        for name in ("alpha", "beta", "g_eff", "kappa"):
            if not math.isfinite(getattr(self, name)):
                raise ConfigError(f"{name} must be finite")

    @property
    def initial(self) -> CoherentPair:
        return CoherentPair(self.alpha, self.beta)

    @property
    def outcome(self) -> str:
        return "g" if self.sign == "plus" else "e"

    def times(self) -> np.ndarray:
        return np.linspace(self.t_start, self.t_end, self.n_points)


# -- output ------------------------------------------------------------------


class Table(NamedTuple):
    name: str
    columns: list
    rows: list
    meta: dict


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return repr(float(x))
    return str(x)


def render(table: Table, fmt: str) -> str:
    schema = f"lambda-ecs {table.name} v{SCHEMA_VERSION}"
    if fmt == "json":
        rows = [[None if isinstance(v, float) and math.isnan(v) else v for v in r] for r in table.rows]
        doc = {"schema": schema, "columns": table.columns, "rows": rows, "meta": table.meta}
        return json.dumps(doc, indent=1, default=float) + "\n"
    buf = io.StringIO()
    meta = " ".join(f"{k}={_fmt(v)}" for k, v in table.meta.items())
    buf.write(f"# schema: {schema}" + (f" {meta}" if meta else "") + "\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(table.columns)
    w.writerows([_fmt(v) for v in r] for r in table.rows)
    return buf.getvalue()


def emit(table: Table, cfg: RunConfig) -> None:
    text = render(table, cfg.fmt)
    if cfg.out:
        with open(cfg.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


# -- figure data -------------------------------------------------------------


def cmd_fig2(cfg: RunConfig) -> Table:
    """Lossless concurrence ``C(t)`` with an optional Wootters column.

    With the oracle on, any row where the two differ by more than ``1e-8``
    raises :class:`CrosscheckError`.
    """
    from .entanglement import concurrence_profile

    times = cfg.times()
    s = 1 if cfg.sign == "plus" else -1
    closed = [
        an.concurrence_pure(an.evolve_amplitudes(cfg.initial, cfg.g_eff, t), s).concurrence
        for t in times
    ]
    if cfg.oracle:
        rows = concurrence_profile(cfg.initial, cfg.g_eff, 0.0, times, cfg.outcome)
        oracle = [r.wootters_c for r in rows]
        diffs = [abs(p - w) for p, w in zip(closed, oracle) if not math.isnan(w)]
        worst = max(diffs, default=0.0)
        if worst > 1e-8:
            raise CrosscheckError(f"closed form and Wootters concurrence differ by {worst:.2e}")
    else:
        oracle = [math.nan] * len(times)
    return Table(
        "fig2",
        ["t", "C_paper", "C_wootters"],
        [[float(t), p, w] for t, p, w in zip(times, closed, oracle)],
        {"alpha": cfg.alpha, "beta": cfg.beta, "g_eff": cfg.g_eff, "sign": cfg.sign},
    )


def _kappa_label(k: float) -> str:
    return f"{k:g}"


def cmd_fig3(cfg: RunConfig) -> Table:
    """Lossy concurrence for each kappa; with the oracle on, also the
    Wootters concurrence of the Lindblad-integrated state."""
    times = cfg.times()
    cols, data = ["t"], []
    for k in cfg.kappas:
        cols.append(f"C_k{_kappa_label(k)}")
        data.append(an.concurrence_series(cfg.initial, cfg.g_eff, k, times, cfg.outcome))
    if cfg.oracle:
        from .dynamics import IntegratorConfig, oracle_trajectory

        icfg = IntegratorConfig.from_mapping(cfg.integrator)
        for k in cfg.kappas:
            cols.append(f"O_k{_kappa_label(k)}")
            rows = oracle_trajectory(
                cfg.initial, cfg.g_eff, k, times, cfg.n_max, icfg, outcome=cfg.outcome,
                with_fidelity=False,
            )
            data.append([r.concurrence for r in rows])
    return Table(
        "fig3",
        cols,
        [[float(t)] + [col[i] for col in data] for i, t in enumerate(times)],
        {"alpha": cfg.alpha, "beta": cfg.beta, "g_eff": cfg.g_eff, "sign": cfg.sign},
    )


# -- sweep -------------------------------------------------------------------

SWEEP_COLUMNS = [
    "alpha", "beta", "g_eff", "kappa", "t",
    "C_pure", "C_lossy", "eta_abs", "N", "prob_g", "prob_e",
]


def sweep_point(point: tuple) -> list:
    """Closed-form quantities at one ``(alpha, beta, g_eff, kappa, t, sign)``."""
    alpha, beta, g_eff, kappa, t, sign = point
    nan = math.nan
    ini = CoherentPair(alpha, beta)
    s = 1 if sign == "plus" else -1
    c_pure = an.concurrence_pure(an.evolve_amplitudes(ini, g_eff, t), s).concurrence
    try:
        state = an.lossy_density_state(ini, g_eff, kappa, t)
    except ValueError:
        return [alpha, beta, g_eff, kappa, t, c_pure, nan, nan, nan, nan, nan]
    n_g = an.normalization_n(state.evolved, state.eta, kappa, t, 1)
    n_e = an.normalization_n(state.evolved, state.eta, kappa, t, -1)
    try:
        c_lossy = an.concurrence_lossy(an.project_lossy(state, "g" if s > 0 else "e")).concurrence
    except DegenerateOutcomeError:
        c_lossy = nan
    return [
        alpha, beta, g_eff, kappa, t, c_pure, c_lossy, abs(state.eta),
        n_g if s > 0 else n_e, n_g / 4.0, n_e / 4.0,
    ]


def _workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    if n < 1:
        raise ConfigError(f"{WORKERS_ENV} must be at least 1")
    return n


def cmd_sweep(cfg: RunConfig) -> Table:
    """One row per grid point, in lexicographic ``(alpha, beta, g_eff,
    kappa, t)`` order regardless of how many workers evaluate it."""
    g = cfg.grid
    axes = [
        g.get("alphas") or [cfg.alpha],
        g.get("betas") or [cfg.beta],
        g.get("g_effs") or [cfg.g_eff],
        g.get("kappas") or [cfg.kappa],
        g.get("times") or list(cfg.times()),
    ]
    n_rows = math.prod(len(a) for a in axes)
    if n_rows > cfg.max_rows:
        raise ConfigError(f"grid has {n_rows} points, above the cap of {cfg.max_rows}")
    points = [tuple(float(v) for v in p) + (cfg.sign,) for p in itertools.product(*axes)]
    workers = _workers()
    if workers == 1 or n_rows < 64:
        rows = [sweep_point(p) for p in points]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(sweep_point, points, chunksize=max(1, n_rows // (4 * workers))))
    return Table("sweep", SWEEP_COLUMNS, rows, {"sign": cfg.sign})


# -- verification suites -----------------------------------------------------


class SuiteResult(NamedTuple):
    name: str
    status: str  # pass, fail or error
    measured: float
    threshold: float
    detail: str


def _suite(name: str, threshold: float, fn: Callable[[], tuple[float, bool, str]]) -> SuiteResult:
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RegimeWarning)
            measured, ok, detail = fn()
    except TruncationError as exc:
        return SuiteResult(name, "error", math.nan, threshold, f"truncation failure: {exc}")
    except (IntegrationError, DegenerateOutcomeError, FloatingPointError) as exc:
        return SuiteResult(name, "error", math.nan, threshold, f"numerical failure: {exc}")
    return SuiteResult(name, "pass" if ok else "fail", float(measured), threshold, detail)


def _verify_suites(cfg: RunConfig) -> list[SuiteResult]:
    from .dynamics import (
        HamiltonianSpec,
        IntegratorConfig,
        adiabatic_elimination_check,
        branch_coherence,
        master_trajectory,
        project_atom_numeric,
        propagate,
        rotating_frame,
    )
    from .entanglement import concurrence_profile
    from .fock import (
        default_n_max,
        fidelity,
        field_vector,
        product_state,
        superposition_to_matrix,
        superposition_to_vector,
    )
    from .fock import su2_disentangle_check as su2_check

    ini, g = cfg.initial, cfg.g_eff
    n_max = cfg.n_max or default_n_max(ini.alpha, ini.beta)
    icfg = IntegratorConfig.from_mapping(cfg.integrator)
    results = []

    def su2():
        n = cfg.n_max or 20
        psi = field_vector(ini, n)
        direct, factored = su2_check(math.pi / 4, psi, n)
        err = float(np.linalg.norm(direct - factored))
        return err, err < 1e-8, f"n_max={n}, theta=pi/4"

    results.append(_suite("su2_disentangle", 1e-8, su2))

    def pure():
        spec = HamiltonianSpec.from_rates("rwa", g, n_max)
        psi0 = product_state("g", ini, spec.hilbert)
        worst = 0.0
        for t in np.linspace(0, 2 * math.pi / abs(g), 9)[1:] if g else [1.0]:
            exact = superposition_to_vector(an.full_evolution_state(ini, g, t), spec.hilbert)
            worst = max(worst, 1 - fidelity(propagate(spec, psi0, t), exact))
        return worst, worst <= 1e-8, f"8 times, n_max={n_max}"

    results.append(_suite("pure_evolution", 1e-8, pure))

    kappa = cfg.kappa
    t_eta = math.pi / abs(g) if g else 1.0
    lossy_cache = {}

    def lossy_rho():
        if "rho" not in lossy_cache:
            spec = HamiltonianSpec.from_rates("rwa", g, n_max, kappa=kappa)
            psi0 = product_state("g", ini, spec.hilbert)
            (rho,) = master_trajectory(np.outer(psi0, psi0.conj()), spec, [t_eta], kappa, icfg)
            lossy_cache.update(rho=rho, hilbert=spec.hilbert)
        return lossy_cache["rho"], lossy_cache["hilbert"]

    def eta():
        state = an.lossy_density_state(ini, g, kappa, t_eta)
        if kappa == 0:
            err = abs(state.eta - 1)
            return err, err <= 1e-12, "lossless: eta = 1"
        rho, hs = lossy_rho()
        est = branch_coherence(rho, hs, state.plus_branch, state.minus_branch)
        err = abs(est / state.eta - 1)
        return err, err <= 1e-5, f"kappa={kappa}, t={t_eta:.4g}"

    results.append(_suite("eta_extraction", 1e-5, eta))

    def lossy_fidelity():
        state = an.lossy_density_state(ini, g, kappa, t_eta)
        rho, hs = lossy_rho()
        f_full = fidelity(superposition_to_matrix(state, hs, None), rho)
        field, _ = project_atom_numeric(rho, "g")
        f_proj = fidelity(superposition_to_matrix(an.project_lossy(state, "g"), hs, None), field)
        err = max(1 - f_full, 1 - f_proj)
        return err, 1 - f_full <= 1e-4 and 1 - f_proj <= 1e-4, f"1-F = {1 - f_full:.2e} / {1 - f_proj:.2e}"

    results.append(_suite("lossy_state_fidelity", 1e-4, lossy_fidelity))

    def wootters():
        times = np.linspace(0, 4 * math.pi / abs(g) if g else 1.0, 400)
        rows = concurrence_profile(ini, g, 0.0, times, "g")
        worst = max(r.diff for r in rows if not math.isnan(r.diff))
        return worst, worst <= 1e-8, "pure grid, 400 points"

    results.append(_suite("wootters_pure", 1e-8, wootters))

    def rwa_trend():
        n = n_max
        rwa = HamiltonianSpec.from_rates("rwa", 1.0, n)
        psi0 = product_state("g", ini, rwa.hilbert)
        ref = propagate(rwa, psi0, math.pi)
        errs = []
        for r in (10.0, 30.0, 100.0):
            eff = HamiltonianSpec.from_rates("effective", 1.0, n, omega_eff=r)
            psi = rotating_frame(propagate(eff, psi0, math.pi), r, math.pi)
            errs.append(1 - fidelity(ref, psi))
        ok = errs[0] > errs[1] > errs[2] and errs[2] <= 1e-2
        return errs[2], ok, "errors " + ", ".join(f"{e:.2e}" for e in errs)

    results.append(_suite("rwa_trend", 1e-2, rwa_trend))

    def adiabatic():
        pops = []
        t_final = math.pi / 0.05**2
        for ratio in (0.05, 0.025):
            p = SystemParams(
                g1=ratio, g2=ratio, omega1_rabi=2 * ratio, omega2_rabi=2 * ratio,
                delta=1.0, delta_prime=2.0,
            )
            pops.append(adiabatic_elimination_check(p, None, t_final, icfg, ini).max_c_population)
        factor = pops[0] / pops[1]
        return factor, 3 <= factor <= 5, f"max |c> population {pops[0]:.3g} -> {pops[1]:.3g}"

    results.append(_suite("adiabatic_scaling", 4.0, adiabatic))
    return results


def cmd_verify(cfg: RunConfig) -> tuple[Table, int]:
    results = _verify_suites(cfg)
    code = EXIT_OK
    if any(r.status == "error" for r in results):
        code = EXIT_NUMERIC
    elif any(r.status == "fail" for r in results):
        code = EXIT_VERIFY
    table = Table(
        "verify",
        list(SuiteResult._fields),
        [list(r) for r in results],
        {"alpha": cfg.alpha, "beta": cfg.beta, "g_eff": cfg.g_eff, "kappa": cfg.kappa},
    )
    return table, code


# -- argument handling -------------------------------------------------------


def _float_list(text: str) -> list[float]:
    """``"0.1,0.2"`` or ``"start:stop:num"`` (inclusive linspace)."""
    text = text.strip()
    try:
        if ":" in text:
            a, b, n = text.split(":")
            return [float(x) for x in np.linspace(float(a), float(b), int(n))]
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(f"cannot parse number list {text!r}") from exc


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value file; flags override its entries")
    common.add_argument("--alpha", type=float)
    common.add_argument("--beta", type=float)
    common.add_argument("--g-eff", dest="g_eff", type=float)
    common.add_argument("--kappa", type=float)
    common.add_argument("--t-max", dest="t_max", type=float)
    common.add_argument("--points", type=int)
    common.add_argument("--n-max", dest="n_max", type=int)
    common.add_argument("--sign", choices=("plus", "minus"))
    common.add_argument("--format", dest="format", choices=("csv", "json"))
    common.add_argument("--out", help="output file (default: stdout)")
    common.add_argument("--oracle", choices=("on", "off"))

    parser = argparse.ArgumentParser(prog="lambda-ecs", description=__doc__.split("\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("fig2", parents=[common], help="lossless concurrence time series")
    p3 = sub.add_parser("fig3", parents=[common], help="lossy concurrence for several kappa")
    p3.add_argument("--kappas", help="comma list, default 0.1,0.2,0.5")
    sub.add_parser("verify", parents=[common], help="run the oracle verification suites")
    ps = sub.add_parser("sweep", parents=[common], help="closed-form values over a grid")
    for name in ("alphas", "betas", "g-effs", "kappas", "times"):
        ps.add_argument(f"--{name}", dest=name.replace("-", "_"), help="comma list or start:stop:num")
    ps.add_argument("--max-rows", dest="max_rows", type=int)
    return parser


_DEFAULTS = {
    "fig2": dict(g_eff=2.5, kappa=0.0, n_points=400, oracle=True),
    "fig3": dict(g_eff=1.0, n_points=500, t_end=10.0, oracle=False),
    "verify": dict(g_eff=1.0, kappa=0.1, n_points=2, t_end=1.0),
    "sweep": dict(g_eff=2.5, kappa=0.0, n_points=2, t_end=1.0, oracle=False),
}
_INTEGRATOR_KEYS = {
    "dt", "method", "dt_scale", "trace_tolerance", "hermiticity_tolerance",
    "negativity_tolerance", "norm_tolerance",
}
_FILE_KEYS = {
    "alpha", "beta", "g_eff", "kappa", "kappas", "t_start", "t_max", "points", "n_max",
    "sign", "format", "out", "oracle", "max_rows", "alphas", "betas", "g_effs", "times",
} | _INTEGRATOR_KEYS


def _parse_bool(v) -> bool:
    if isinstance(v, bool):
        return v
    s = str(v).strip().lower()
    if s in ("on", "true", "yes", "1"):
        return True
    if s in ("off", "false", "no", "0"):
        return False
    raise ConfigError(f"oracle must be on/off, got {v!r}")


def config_from_args(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if args.config:
        try:
            values.update(read_config(args.config))
        except OSError as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        unknown = set(values) - _FILE_KEYS
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
    for key in _FILE_KEYS - _INTEGRATOR_KEYS:
        v = getattr(args, key, None)
        if v is not None:
            values[key] = v

    d = dict(_DEFAULTS[args.command])
    try:
        if "alpha" in values:
            d["alpha"] = float(values["alpha"])
        if "beta" in values:
            d["beta"] = float(values["beta"])
        if "g_eff" in values:
            d["g_eff"] = float(values["g_eff"])
        if "kappa" in values:
            d["kappa"] = float(values["kappa"])
        if "t_start" in values:
            d["t_start"] = float(values["t_start"])
        if "t_max" in values:
            d["t_end"] = float(values["t_max"])
        if "points" in values:
            d["n_points"] = int(values["points"])
        if "n_max" in values:
            d["n_max"] = int(values["n_max"])
        if "max_rows" in values:
            d["max_rows"] = int(values["max_rows"])
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    if "kappas" in values:
        d["kappas"] = tuple(_float_list(str(values["kappas"])))
    for key, out in (("sign", "sign"), ("format", "fmt"), ("out", "out")):
        if key in values:
            d[out] = str(values[key])
    if "oracle" in values:
        d["oracle"] = _parse_bool(values["oracle"])
    if args.command == "fig2" and "t_end" not in d:
        g = d["g_eff"]
        if g == 0:
            raise ConfigError("fig2 needs a non-zero g_eff for its default time grid")
        d["t_end"] = 4 * math.pi / abs(g)
    if args.command == "sweep":
        d["grid"] = {
            k: _float_list(str(values[k]))
            for k in ("alphas", "betas", "g_effs", "kappas", "times")
            if k in values
        }
    d["integrator"] = {k: values[k] for k in _INTEGRATOR_KEYS if k in values}
    return RunConfig(command=args.command, **d)


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        cfg = config_from_args(args)
        if cfg.command == "verify":
            started = time.perf_counter()
            table, code = cmd_verify(cfg)
            emit(table, cfg)
            for r in table.rows:
                if r[1] != "pass":
                    print(f"{r[0]}: {r[1]} ({r[4]})", file=sys.stderr)
            print(f"verify finished in {time.perf_counter() - started:.1f}s", file=sys.stderr)
            return code
        cmd = {"fig2": cmd_fig2, "fig3": cmd_fig3, "sweep": cmd_sweep}[cfg.command]
        emit(cmd(cfg), cfg)
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except CrosscheckError as exc:
        print(f"verification failure: {exc}", file=sys.stderr)
        return EXIT_VERIFY
    except (TruncationError, IntegrationError, DegenerateOutcomeError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
