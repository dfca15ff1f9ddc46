"""Flux sweeps of the rate pipeline, feature extraction and resonance maps."""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Iterable, Literal, Sequence

import numpy as np
from scipy.interpolate import PchipInterpolator
from scipy.optimize import brentq, minimize_scalar

from .circuit import CircuitParameters, derive_energies, solve_equilibrium
from .errors import InvalidParametersError, SquidCouplerError, UnknownQuantityError
from .rates import MHZ_PER_GHZ, RateSet, compute_rate_set
from .schrodinger import Grid, PotentialSpec, solve_metastable

Axis = Literal["flux_cpl", "flux_ext"]
THREADS_ENV = "SQUIDCOUPLER_THREADS"


def thread_cap(requested: int | None = None) -> int:
    env = os.environ.get(THREADS_ENV)
    cap = int(env) if env else min(4, os.cpu_count() or 1)
    if requested is not None:
        cap = min(cap, requested) if env else requested
    return max(1, cap)


@dataclass(frozen=True)
class SweepSpec:
    axis: Axis
    start: float
    stop: float
    n_points: int
    base: CircuitParameters
    freeze_zpf: bool = False
    numeric_every: int = 0      # 0 disables the numerical atom frequency
    grid_points: int = 4096
    name: str = "sweep"

    def __post_init__(self):
        if self.axis not in ("flux_cpl", "flux_ext"):
            raise InvalidParametersError(f"unknown sweep axis {self.axis!r}")
        if not self.start < self.stop:
            raise InvalidParametersError("sweep start must be below stop")
        if self.n_points < 2:
            raise InvalidParametersError("a sweep needs at least two points")
        if self.numeric_every < 0:
            raise InvalidParametersError("numeric_every must be non-negative")

    @property
    def fluxes(self) -> np.ndarray:
        return np.linspace(self.start, self.stop, self.n_points)

    def params_at(self, flux: float) -> CircuitParameters:
        return self.base.replace(**{self.axis: float(flux)})


@dataclass
class SweepRow:
    flux: float
    values: dict[str, float] | None = None
    error: str | None = None
    flags: tuple[str, ...] = ()
    omega_a_num_base: float | None = None   # E_e - E_g, GHz
    numeric_sampled: bool = False

    @property
    def ok(self) -> bool:
        return self.error is None

    @property
    def seed(self) -> tuple[float, float] | None:
        if self.values is None:
            return None
        return self.values["phi_r_min"], self.values["phi_a_min"]


@dataclass
class SweepResult:
    spec: SweepSpec
    rows: list[SweepRow]

    @property
    def fluxes(self) -> np.ndarray:
        return np.array([r.flux for r in self.rows])

    def quantities(self) -> list[str]:
        for r in self.rows:
            if r.values is not None:
                names = list(r.values)
                if any(x.omega_a_num_base is not None for x in self.rows):
                    names += ["omega_a_num", "detuning_num"]
                return names
        return []

    def column(self, name: str) -> np.ndarray:
        if name not in self.quantities():
            raise UnknownQuantityError(f"quantity {name!r} not in sweep")
        return np.array([_row_value(r, name) for r in self.rows])


def _row_value(row: SweepRow, name: str) -> float:
    if row.values is None:
        return math.nan
    if name == "omega_a_num":
        if row.omega_a_num_base is None:
            return math.nan
        return row.omega_a_num_base - row.values["K0X"] / 2 / MHZ_PER_GHZ
    if name == "detuning_num":
        w = _row_value(row, "omega_a_num")
        return (w - 2 * row.values["omega_r_tilde"]) * MHZ_PER_GHZ
    return row.values[name]


def _row_from(flux: float, rs: RateSet) -> SweepRow:
    values = rs.scalars()
    flags = tuple(f"validity:{f.name}" for f in rs.validity.flags if not f.passed) + rs.small.warnings
    return SweepRow(flux, values, None, flags)


def _numeric_base(rs: RateSet, grid_points: int) -> float:
    pot = PotentialSpec.from_energies(rs.energies, rs.equilibrium)
    grid = Grid.for_potential(pot, grid_points)
    return solve_metastable(pot, rs.energies.E_C_a, grid)[1].omega_ge


def run_sweep(spec: SweepSpec, *, threads: int | None = None, reverse: bool = False) -> SweepResult:
    """Evaluate the full pipeline at every flux of ``spec``.

    Equilibria are continued point to point in sweep order (``reverse`` runs
    from ``stop`` to ``start``); the remaining per-point work runs on a thread
    pool.  Failed points become error rows.  Rows are always ordered by flux.
    """
    fluxes = spec.fluxes
    order = range(len(fluxes) - 1, -1, -1) if reverse else range(len(fluxes))
    seeds: dict[int, tuple[float, float] | None] = {}
    errors: dict[int, str] = {}
    prev = None
    for i in order:
        try:
            energies = derive_energies(spec.params_at(fluxes[i]))
            try:
                eq = solve_equilibrium(energies, seed=prev)
            except SquidCouplerError:
                if prev is None:
                    raise
                # the seed sits in the wrong well, e.g. after the wells swap roles
                eq = solve_equilibrium(energies)
            prev = seeds[i] = (eq.phi_r_min, eq.phi_a_min)
        except SquidCouplerError as exc:
            errors[i] = f"{type(exc).__name__}: {exc}"

    def work(i):
        if i in errors:
            return i, None, errors[i]
        try:
            rs = compute_rate_set(spec.params_at(fluxes[i]), seed=seeds[i],
                                  freeze_zpf=spec.freeze_zpf)
            return i, rs, None
        except SquidCouplerError as exc:
            return i, None, f"{type(exc).__name__}: {exc}"

    n_threads = thread_cap(threads)
    with ThreadPoolExecutor(max_workers=n_threads) as pool:
        results = list(pool.map(work, range(len(fluxes))))

    rows = []
    sets: dict[int, RateSet] = {}
    for i, rs, err in results:
        if rs is None:
            rows.append(SweepRow(float(fluxes[i]), None, err))
        else:
            rows.append(_row_from(float(fluxes[i]), rs))
            sets[i] = rs

    if spec.numeric_every:
        picks = sorted({*range(0, len(fluxes), spec.numeric_every), len(fluxes) - 1} & set(sets))

        def solve(i):
            try:
                return i, _numeric_base(sets[i], spec.grid_points), None
            except SquidCouplerError as exc:
                return i, None, f"{type(exc).__name__}: {exc}"

        with ThreadPoolExecutor(max_workers=n_threads) as pool:
            numeric = list(pool.map(solve, picks))
        good = [(i, v) for i, v, err in numeric if v is not None]
        for i, v, err in numeric:
            rows[i].numeric_sampled = v is not None
            rows[i].omega_a_num_base = v
            if err:
                rows[i].flags += (f"numeric:{err}",)
        if len(good) >= 2:
            idx, vals = zip(*good)
            interp = PchipInterpolator(fluxes[list(idx)], vals, extrapolate=False)
            for i in sets:
                if rows[i].omega_a_num_base is None:
                    v = float(interp(fluxes[i]))
                    rows[i].omega_a_num_base = None if math.isnan(v) else v
    return SweepResult(spec, rows)


# --------------------------------------------------------------------------
# features

@dataclass(frozen=True)
class Zero:
    quantity: str
    flux: float
    bracket: tuple[float, float]


@dataclass(frozen=True)
class Extremum:
    quantity: str
    kind: Literal["max", "min"]
    flux: float
    value: float


@dataclass
class FeatureSet:
    zeros: list[Zero] = field(default_factory=list)
    extrema: list[Extremum] = field(default_factory=list)
    resonance_windows: list[tuple[float, float]] = field(default_factory=list)

    def zeros_of(self, quantity: str) -> list[float]:
        return [z.flux for z in self.zeros if z.quantity == quantity]

    def extrema_of(self, quantity: str, kind: str | None = None) -> list[Extremum]:
        return [e for e in self.extrema if e.quantity == quantity and (kind is None or e.kind == kind)]


class _Evaluator:
    """Continuous pipeline evaluation seeded from the nearest sweep sample."""

    def __init__(self, result: SweepResult):
        self.result = result
        self.spec = result.spec
        self.fluxes = result.fluxes
        self._interp = None
        base = [(r.flux, r.omega_a_num_base) for r in result.rows if r.omega_a_num_base is not None]
        if len(base) >= 2:
            x, y = zip(*base)
            self._interp = PchipInterpolator(x, y, extrapolate=False)

    def rate_set(self, flux: float) -> RateSet:
        ok = [r for r in self.result.rows if r.ok]
        near = min(ok, key=lambda r: abs(r.flux - flux))
        return compute_rate_set(self.spec.params_at(flux), seed=near.seed,
                                freeze_zpf=self.spec.freeze_zpf)

    def __call__(self, name: str, flux: float) -> float:
        values = self.rate_set(flux).scalars()
        if name in ("omega_a_num", "detuning_num"):
            if self._interp is None:
                raise UnknownQuantityError(f"{name} needs numerical samples")
            w = float(self._interp(flux)) - values["K0X"] / 2 / MHZ_PER_GHZ
            if name == "omega_a_num":
                return w
            return (w - 2 * values["omega_r_tilde"]) * MHZ_PER_GHZ
        return values[name]


def find_features(result: SweepResult, quantities: Sequence[str], *,
                  windows: bool = True, use_numeric: bool | None = None,
                  xtol: float = 1e-12) -> FeatureSet:
    """Zeros (bracketed, refined by Brent bisection), extrema (golden section)
    and resonance windows |ω̃_a - 2ω̃_r| < g̃₂ of a sweep."""
    known = result.quantities()
    for q in quantities:
        if q not in known:
            raise UnknownQuantityError(f"quantity {q!r} not in sweep")
    ev = _Evaluator(result)
    x = result.fluxes
    fs = FeatureSet()
    for q in quantities:
        y = result.column(q)
        for i in range(len(x) - 1):
            a, b = y[i], y[i + 1]
            if not (np.isfinite(a) and np.isfinite(b)):
                continue
            if a == 0:
                fs.zeros.append(Zero(q, float(x[i]), (float(x[i]), float(x[i]))))
                continue
            if a * b < 0:
                f = lambda t: ev(q, t)
                fa, fb = f(x[i]), f(x[i + 1])
                if fa * fb >= 0:
                    continue
                root = brentq(f, x[i], x[i + 1], xtol=xtol)
                fs.zeros.append(Zero(q, float(root), (float(x[i]), float(x[i + 1]))))
        for i in range(1, len(x) - 1):
            trio = y[i - 1:i + 2]
            if not np.all(np.isfinite(trio)) or np.ptp(trio) == 0:
                continue
            for kind, sign in (("max", -1.0), ("min", 1.0)):
                mid = sign * trio[1]
                if mid < sign * trio[0] and mid <= sign * trio[2]:
                    opt = minimize_scalar(lambda t: sign * ev(q, t),
                                          bracket=(x[i - 1], x[i], x[i + 1]),
                                          method="golden", tol=1e-10)
                    fs.extrema.append(Extremum(q, kind, float(opt.x), float(sign * opt.fun)))
    if windows:
        fs.resonance_windows = resonance_windows(result, ev, use_numeric=use_numeric, xtol=xtol)
    return fs


def resonance_windows(result: SweepResult, ev: _Evaluator | None = None, *,
                      use_numeric: bool | None = None, xtol: float = 1e-12
                      ) -> list[tuple[float, float]]:
    """Flux intervals with |detuning| < |g̃₂|; edges refined on the continuous pipeline."""
    ev = ev or _Evaluator(result)
    if use_numeric is None:
        use_numeric = ev._interp is not None
    det_name = "detuning_num" if use_numeric else "detuning"
    x = result.fluxes
    det = result.column(det_name)
    g2t = result.column("g2_tilde")
    inside = np.isfinite(det) & (np.abs(det) < np.abs(g2t))

    def margin(t):
        return abs(ev(det_name, t)) - abs(ev("g2_tilde", t))

    out = []
    i = 0
    while i < len(x):
        if not inside[i]:
            i += 1
            continue
        j = i
        while j + 1 < len(x) and inside[j + 1]:
            j += 1
        lo, hi = float(x[i]), float(x[j])
        if i > 0 and np.isfinite(det[i - 1]):
            try:
                lo = brentq(margin, x[i - 1], x[i], xtol=xtol)
            except (ValueError, SquidCouplerError):
                pass
        if j + 1 < len(x) and np.isfinite(det[j + 1]):
            try:
                hi = brentq(margin, x[j], x[j + 1], xtol=xtol)
            except (ValueError, SquidCouplerError):
                pass
        out.append((float(lo), float(hi)))
        i = j + 1
    return out


# --------------------------------------------------------------------------
# resonance maps and figure helpers

def resonance_report(base: CircuitParameters, atom_energy_perturbation: float = 0.0, *,
                     axis: Axis = "flux_cpl", start: float = -1.0, stop: float = 1.0,
                     n_points: int = 81, numeric_every: int = 8, grid_points: int = 4096,
                     freeze_zpf: bool = False, threads: int | None = None) -> SweepResult:
    """Sweep with the numerical atom frequency for an E_J^a scaled by ``1 + perturbation``."""
    if not abs(atom_energy_perturbation) < 0.05:
        raise InvalidParametersError("atom energy perturbation must be below 5%")
    params = base.replace(I0_a=base.I0_a * (1 + atom_energy_perturbation))
    spec = SweepSpec(axis, start, stop, n_points, params, freeze_zpf=freeze_zpf,
                     numeric_every=max(1, numeric_every),
                     grid_points=grid_points, name=f"resonance_{axis}")
    return run_sweep(spec, threads=threads)


FIG4_SCALES = {
    "g1c": (1, 1), "g1i": (1, 1), "g1i_tilde": (1, 1), "g_minus": (1, 1),
    "K0": (2, 2), "K0X": (2, 2), "K_tilde": (2, 2),
    "g2": (2, 1), "g2_tilde": (2, 1),
    "J": (1, 2), "G2": (1, 2),
}


def dimensionless_rates(result: SweepResult) -> dict[str, np.ndarray]:
    """Rates divided by 2E_1J φ_r,zpf^m φ_a,zpf^n, the natural units of each coupling."""
    E1 = derive_energies(result.spec.base).E_1J_c * MHZ_PER_GHZ
    fr, fa = result.column("phi_r_zpf"), result.column("phi_a_zpf")
    out = {}
    for name, (m, n) in FIG4_SCALES.items():
        out[name] = result.column(name) / (2 * E1 * fr**m * fa**n)
    return out
