"""Circuit parameters, energy scales, static equilibrium and mode profiles.

Energies are E/h in GHz, phases in radians, fluxes in units of the flux
quantum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, fields, replace
from typing import Literal

import numpy as np

from .constants import DEFAULT_CONSTANTS, GHZ, PhysicalConstants
from .errors import (
    ConvergenceError,
    InvalidParametersError,
    NoMetastableWellError,
    UnstableModeError,
)

TWO_PI = 2 * math.pi


@dataclass(frozen=True)
class CircuitParameters:
    """Raw SI circuit inputs.

    ``C_a_total`` is the full atom capacitance including the junction and
    ``C_c_total`` the full coupler capacitance C_c + 2C_1J.  ``I0_c`` is the
    critical current of one coupler junction.  ``I0_c = 0`` and
    ``C_c_total = 0`` are accepted and describe a detached coupler.
    """

    L_r: float
    C_r: float
    L_a: float
    C_a_total: float
    I0_a: float
    I0_c: float
    C_c_total: float
    flux_ext: float
    flux_cpl: float

    def __post_init__(self):
        for name in ("L_r", "C_r", "L_a", "C_a_total", "I0_a"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParametersError(f"{name} must be positive and finite, got {value!r}")
        for name in ("I0_c", "C_c_total"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidParametersError(f"{name} must be non-negative and finite, got {value!r}")
        for name in ("flux_ext", "flux_cpl"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidParametersError(f"{name} must be finite")

    def replace(self, **changes) -> "CircuitParameters":
        return replace(self, **changes)

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def reference_parameters(**overrides) -> CircuitParameters:
    """Design point of the two-photon coupler studied throughout the package."""
    values = dict(
        L_r=0.84868e-9,
        C_r=692.8e-15,
        L_a=1.0000e-9,
        C_a_total=300.0e-15,
        I0_a=1.1000e-6,
        I0_c=30e-9,
        C_c_total=5e-15,
        flux_ext=0.7150,
        flux_cpl=0.0,
    )
    values.update(overrides)
    return CircuitParameters(**values)


@dataclass(frozen=True)
class DerivedEnergies:
    """Energy scales in GHz.  Loaded inductive energies stay ``None`` until an
    equilibrium is attached with :meth:`with_equilibrium`."""

    E_C_r: float
    E_C_a: float
    E_C_c: float
    E_L_r: float
    E_L_a: float
    E_J_a: float
    E_J_c: float
    E_1J_c: float
    flux_ext: float
    flux_cpl: float
    E_L_r_tilde: float | None = None
    E_L_a_tilde: float | None = None

    def with_equilibrium(self, eq: "EquilibriumState") -> "DerivedEnergies":
        cd = math.cos(eq.delta)
        return replace(
            self,
            E_L_r_tilde=self.E_L_r + self.E_J_c * cd,
            E_L_a_tilde=self.E_L_a + self.E_J_a * math.cos(eq.phi_a_min) + self.E_J_c * cd,
        )

    @property
    def loaded(self) -> bool:
        return self.E_L_r_tilde is not None


def inductive_energy(L: float, consts: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    return consts.flux_quantum**2 / (4 * math.pi**2 * L) / consts.planck / GHZ


def charging_energy(C: float, consts: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    return consts.electron_charge**2 / (2 * C) / consts.planck / GHZ


def josephson_energy(I0: float, consts: PhysicalConstants = DEFAULT_CONSTANTS) -> float:
    return I0 * consts.flux_quantum / TWO_PI / consts.planck / GHZ


def loaded_capacitances(params: CircuitParameters) -> tuple[float, float, float]:
    """Return (C̃_r, C̃_a, C̃_c) for the resonator/coupler/atom capacitive network."""
    Cr, Ca, Cc = params.C_r, params.C_a_total, params.C_c_total
    if Cc == 0:
        return Cr, Ca, 0.0
    Cr_t = Cr + Ca * Cc / (Ca + Cc)
    Ca_t = Ca + Cr * Cc / (Cr + Cc)
    Cc_t = 1.0 / (1.0 / Cc + 1.0 / Cr + 1.0 / Ca)
    return Cr_t, Ca_t, Cc_t


def derive_energies(params: CircuitParameters,
                    consts: PhysicalConstants = DEFAULT_CONSTANTS) -> DerivedEnergies:
    Cr_t, Ca_t, Cc_t = loaded_capacitances(params)
    if min(Cr_t, Ca_t) <= 0 or Cc_t < 0:
        raise InvalidParametersError("non-positive loaded capacitance")
    e, h = consts.electron_charge, consts.planck
    E_C_c = 4 * e**2 * Cc_t / (params.C_a_total * params.C_r) / h / GHZ
    E_1J_c = josephson_energy(params.I0_c, consts)
    return DerivedEnergies(
        E_C_r=charging_energy(Cr_t, consts),
        E_C_a=charging_energy(Ca_t, consts),
        E_C_c=E_C_c,
        E_L_r=inductive_energy(params.L_r, consts),
        E_L_a=inductive_energy(params.L_a, consts),
        E_J_a=josephson_energy(params.I0_a, consts),
        E_J_c=2 * E_1J_c * math.cos(math.pi * params.flux_cpl),
        E_1J_c=E_1J_c,
        flux_ext=params.flux_ext,
        flux_cpl=params.flux_cpl,
    )


# --------------------------------------------------------------------------
# equilibrium

@dataclass(frozen=True)
class EquilibriumState:
    phi_r_min: float
    phi_a_min: float
    delta: float
    residual_r: float
    residual_a: float
    iterations: int = 0
    branch: str = "metastable"


def wrap_phase(x: float) -> float:
    """Map to the interval (-π, π]."""
    y = math.remainder(x, TWO_PI)
    return math.pi if y == -math.pi else y


def coupler_phase(phi_r: float, phi_a: float, flux_cpl: float) -> float:
    return wrap_phase(phi_r - phi_a - math.pi * flux_cpl)


def equilibrium_residuals(energies: DerivedEnergies, phi_r: float, phi_a: float) -> np.ndarray:
    d = phi_r - phi_a - math.pi * energies.flux_cpl
    sd = math.sin(d)
    return np.array([
        energies.E_L_r * phi_r + energies.E_J_c * sd,
        energies.E_L_a * (phi_a - TWO_PI * energies.flux_ext)
        + energies.E_J_a * math.sin(phi_a) - energies.E_J_c * sd,
    ])


def potential_hessian(energies: DerivedEnergies, phi_r: float, phi_a: float) -> np.ndarray:
    """Hessian of the static two-phase potential; also the Jacobian of the residuals."""
    c = energies.E_J_c * math.cos(phi_r - phi_a - math.pi * energies.flux_cpl)
    return np.array([
        [energies.E_L_r + c, -c],
        [-c, energies.E_L_a + energies.E_J_a * math.cos(phi_a) + c],
    ])


def atom_potential(phi, E_L_a: float, E_J_a: float, flux_ext: float):
    """Uncoupled rf-SQUID potential in GHz."""
    return 0.5 * E_L_a * (phi - TWO_PI * flux_ext) ** 2 - E_J_a * np.cos(phi)


@dataclass(frozen=True)
class AtomWells:
    minima: tuple[float, ...]
    values: tuple[float, ...]
    maxima: tuple[float, ...]

    @property
    def metastable(self) -> float | None:
        if len(self.minima) < 2:
            return None
        return self.minima[int(np.argmax(self.values))]

    @property
    def global_min(self) -> float:
        return self.minima[int(np.argmin(self.values))]


def scan_atom_wells(E_L_a: float, E_J_a: float, flux_ext: float, n: int = 8001) -> AtomWells:
    """Locate local minima and maxima of the uncoupled atom potential.

    Every stationary point satisfies |φ - 2πΦ_e| <= E_J/E_L, so a dense scan
    over that interval (plus one radian) finds them all; each bracket is
    polished with Newton steps on the derivative.
    """
    centre = TWO_PI * flux_ext
    half = E_J_a / E_L_a + 1.0
    phi = np.linspace(centre - half, centre + half, n)
    dU = E_L_a * (phi - TWO_PI * flux_ext) + E_J_a * np.sin(phi)
    minima, maxima = [], []
    for i in np.nonzero(np.sign(dU[:-1]) != np.sign(dU[1:]))[0]:
        x = 0.5 * (phi[i] + phi[i + 1])
        for _ in range(50):
            f = E_L_a * (x - TWO_PI * flux_ext) + E_J_a * math.sin(x)
            fp = E_L_a + E_J_a * math.cos(x)
            if fp == 0:
                break
            step = f / fp
            x = min(max(x - step, phi[i]), phi[i + 1])
            if abs(step) < 1e-15:
                break
        (minima if dU[i] < 0 else maxima).append(x)
    values = tuple(float(atom_potential(x, E_L_a, E_J_a, flux_ext)) for x in minima)
    return AtomWells(tuple(minima), values, tuple(maxima))


def _newton(energies: DerivedEnergies, x0, tol: float, max_iter: int, max_halvings: int = 30):
    scale = max(energies.E_L_r, energies.E_L_a)
    x = np.array(x0, dtype=float)
    F = equilibrium_residuals(energies, *x)
    norm = np.linalg.norm(F) / scale
    for it in range(max_iter):
        if norm < tol:
            return x, F, it
        step = np.linalg.solve(potential_hessian(energies, *x), F)
        t = 1.0
        for _ in range(max_halvings):
            trial = x - t * step
            Ft = equilibrium_residuals(energies, *trial)
            nt = np.linalg.norm(Ft) / scale
            if nt < norm:
                break
            t *= 0.5
        else:
            raise ConvergenceError("Newton line search stalled", last_iterate=tuple(x))
        x, F, norm = trial, Ft, nt
    if norm < tol:
        return x, F, max_iter
    raise ConvergenceError(f"Newton did not converge in {max_iter} iterations "
                           f"(scaled residual {norm:.3e})", last_iterate=tuple(x))


def solve_equilibrium(energies: DerivedEnergies, params: CircuitParameters | None = None, *,
                      branch: Literal["metastable", "global"] = "metastable",
                      seed: tuple[float, float] | None = None,
                      tol: float = 1e-12, max_iter: int = 200) -> EquilibriumState:
    """Static phases minimizing the two-phase potential.

    With ``branch="metastable"`` the solution tracks the shallow well of the
    rf SQUID and raises :class:`NoMetastableWellError` if the bias leaves only
    one well.  ``seed`` overrides the uncoupled starting point (used for
    continuation along sweeps).
    """
    if params is not None and (params.flux_ext != energies.flux_ext
                               or params.flux_cpl != energies.flux_cpl):
        raise InvalidParametersError("energies and params describe different biases")
    wells = scan_atom_wells(energies.E_L_a, energies.E_J_a, energies.flux_ext)
    if branch == "metastable":
        phi_a0 = wells.metastable
        if phi_a0 is None:
            raise NoMetastableWellError(
                f"single-well regime at flux_ext={energies.flux_ext}")
    elif branch == "global":
        phi_a0 = wells.global_min
    else:
        raise ValueError(f"unknown branch {branch!r}")

    if seed is not None:
        starts = [tuple(seed)]
    else:
        starts = [(0.0, phi_a0)]
    x = None
    for start in starts:
        try:
            x, F, iters = _newton(energies, start, tol, max_iter)
            break
        except ConvergenceError:
            x = None
    if x is None:
        # homotopy in the coupler Josephson energy from the uncoupled well
        guess = (0.0, phi_a0)
        for frac in np.linspace(0.125, 1.0, 8):
            partial = replace(energies, E_J_c=energies.E_J_c * frac)
            guess, F, iters = _newton(partial, guess, tol, max_iter)
        x = guess

    phi_r, phi_a = float(x[0]), float(x[1])
    if np.any(np.linalg.eigvalsh(potential_hessian(energies, phi_r, phi_a)) <= 0):
        raise ConvergenceError("converged to a non-minimum stationary point",
                               last_iterate=(phi_r, phi_a))
    if branch == "metastable":
        # stay on the shallow side of the barrier that separates the wells
        barriers = [m for m in wells.maxima
                    if min(phi_a0, wells.global_min) < m < max(phi_a0, wells.global_min)]
        if barriers and (phi_a - barriers[0]) * (phi_a0 - barriers[0]) <= 0:
            raise NoMetastableWellError("equilibrium escaped the metastable well")
    F = equilibrium_residuals(energies, phi_r, phi_a)
    return EquilibriumState(
        phi_r_min=phi_r,
        phi_a_min=phi_a,
        delta=coupler_phase(phi_r, phi_a, energies.flux_cpl),
        residual_r=float(F[0]),
        residual_a=float(F[1]),
        iterations=int(iters),
        branch=branch,
    )


# --------------------------------------------------------------------------
# mode profiles

@dataclass(frozen=True)
class ModeProfile:
    omega_p: float  # GHz
    n_zpf: float
    phi_zpf: float


def harmonic_profile(E_C: float, E_L_tilde: float) -> ModeProfile:
    if not E_L_tilde > 0:
        raise UnstableModeError(f"loaded inductive energy {E_L_tilde!r} is not positive")
    return ModeProfile(
        omega_p=math.sqrt(8 * E_C * E_L_tilde),
        n_zpf=(E_L_tilde / (32 * E_C)) ** 0.25,
        phi_zpf=(2 * E_C / E_L_tilde) ** 0.25,
    )


def mode_profiles(energies: DerivedEnergies, eq: EquilibriumState | None = None
                  ) -> tuple[ModeProfile, ModeProfile]:
    """Return (resonator, atom) profiles about the equilibrium."""
    if eq is not None:
        energies = energies.with_equilibrium(eq)
    if not energies.loaded:
        raise ValueError("attach an equilibrium first")
    return (harmonic_profile(energies.E_C_r, energies.E_L_r_tilde),
            harmonic_profile(energies.E_C_a, energies.E_L_a_tilde))


# --------------------------------------------------------------------------
# validity

@dataclass(frozen=True)
class ValidityFlag:
    name: str
    ratio: float
    threshold: float
    passed: bool
    margin: float  # threshold / ratio, inf when the ratio vanishes


@dataclass(frozen=True)
class ValidityReport:
    flags: tuple[ValidityFlag, ...]

    @property
    def all_passed(self) -> bool:
        return all(f.passed for f in self.flags)

    def __getitem__(self, name: str) -> ValidityFlag:
        for f in self.flags:
            if f.name == name:
                return f
        raise KeyError(name)


def _flag(name, ratio, threshold):
    ratio = abs(ratio)
    margin = math.inf if ratio == 0 else threshold / ratio
    return ValidityFlag(name, ratio, threshold, ratio < threshold, margin)


def check_validity(energies: DerivedEnergies, eq: EquilibriumState,
                   profiles: tuple[ModeProfile, ModeProfile], *,
                   much_less: float = 0.1, far_less: float = 0.01) -> ValidityReport:
    """Compare the small ratios the perturbative treatment relies on with thresholds."""
    loaded = energies.with_equilibrium(eq)
    res, atom = profiles
    mu = loaded.E_J_a / loaded.E_L_a_tilde * math.sin(eq.phi_a_min)
    return ValidityReport((
        _flag("resonator_heavy", loaded.E_C_r / loaded.E_L_r, far_less),
        _flag("atom_heavy", loaded.E_C_a / loaded.E_J_a, far_less),
        _flag("no_ultrastrong",
              (loaded.E_J_c / loaded.E_L_a_tilde) / (2 * atom.phi_zpf / res.phi_zpf), much_less),
        _flag("small_lambda_a", mu * atom.phi_zpf / 12, much_less),
    ))
