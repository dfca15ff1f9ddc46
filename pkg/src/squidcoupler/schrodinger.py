"""Finite-difference eigenproblem of the (coupler-perturbed) rf-SQUID potential.

H = -4 E_C d²/dφ² + U(φ) is discretized with second-order central
differences on a uniform grid with hard walls, giving a symmetric
tridiagonal matrix that is diagonalized by bisection and inverse iteration.
Energies are in GHz.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np
from scipy.linalg import eigh_tridiagonal

from .circuit import DerivedEnergies, EquilibriumState, ModeProfile
from .errors import InvalidParametersError, NoBarrierError

TWO_PI = 2 * math.pi
CONVERGENCE_TOL_GHZ = 0.5e-3
MIN_POINTS = 512


class ConvergenceWarning(UserWarning):
    pass


@dataclass(frozen=True)
class CouplerTerm:
    E_J_c: float
    phi_r_min: float
    flux_cpl: float


@dataclass(frozen=True)
class PotentialSpec:
    E_L_a: float
    E_J_a: float
    flux_ext: float
    coupler: CouplerTerm | None = None

    def __post_init__(self):
        if not (self.E_L_a > 0 and self.E_J_a > 0):
            raise InvalidParametersError("E_L_a and E_J_a must be positive")

    def __call__(self, phi):
        phi = np.asarray(phi, dtype=float)
        U = 0.5 * self.E_L_a * (phi - TWO_PI * self.flux_ext) ** 2 - self.E_J_a * np.cos(phi)
        if self.coupler is not None:
            c = self.coupler
            U = U - c.E_J_c * np.cos(c.phi_r_min - phi - math.pi * c.flux_cpl)
        return U

    def derivatives(self, phi: float) -> tuple[float, float, float, float]:
        """First four derivatives of U at ``phi``."""
        d1 = self.E_L_a * (phi - TWO_PI * self.flux_ext) + self.E_J_a * math.sin(phi)
        d2 = self.E_L_a + self.E_J_a * math.cos(phi)
        d3 = -self.E_J_a * math.sin(phi)
        d4 = -self.E_J_a * math.cos(phi)
        if self.coupler is not None:
            c = self.coupler
            t = c.phi_r_min - phi - math.pi * c.flux_cpl
            d1 -= c.E_J_c * math.sin(t)
            d2 += c.E_J_c * math.cos(t)
            d3 += c.E_J_c * math.sin(t)
            d4 -= c.E_J_c * math.cos(t)
        return d1, d2, d3, d4

    @classmethod
    def from_energies(cls, energies: DerivedEnergies, eq: EquilibriumState | None = None,
                      with_coupler: bool = True) -> "PotentialSpec":
        coupler = None
        if with_coupler and eq is not None:
            coupler = CouplerTerm(energies.E_J_c, eq.phi_r_min, energies.flux_cpl)
        return cls(energies.E_L_a, energies.E_J_a, energies.flux_ext, coupler)


@dataclass(frozen=True)
class QuadraticPotential:
    """U = ½ E_L (φ - centre)², used as an exact oracle."""

    E_L: float
    centre: float = 0.0

    def __call__(self, phi):
        return 0.5 * self.E_L * (np.asarray(phi, dtype=float) - self.centre) ** 2


@dataclass(frozen=True)
class Grid:
    phi_min: float
    phi_max: float
    n_points: int = 4096

    def __post_init__(self):
        if not self.phi_min < self.phi_max:
            raise InvalidParametersError("phi_min must be below phi_max")
        if self.n_points < MIN_POINTS:
            raise InvalidParametersError(f"n_points must be at least {MIN_POINTS}")

    @property
    def points(self) -> np.ndarray:
        return np.linspace(self.phi_min, self.phi_max, self.n_points)

    @property
    def spacing(self) -> float:
        return (self.phi_max - self.phi_min) / (self.n_points - 1)

    def refined(self, factor: int = 2) -> "Grid":
        return Grid(self.phi_min, self.phi_max, factor * (self.n_points - 1) + 1)

    def widened(self, margin: float) -> "Grid":
        """Same spacing, window extended by ``margin`` on both sides."""
        extra = int(round(margin / self.spacing))
        h = self.spacing
        return Grid(self.phi_min - extra * h, self.phi_max + extra * h, self.n_points + 2 * extra)

    @classmethod
    def for_potential(cls, pot: PotentialSpec, n_points: int = 4096, margin: float = 4.0) -> "Grid":
        """Window from the metastable minimum minus ``margin`` to the global minimum plus ``margin``."""
        lm = landmarks(pot)
        lo = min(lm.metastable_phi, lm.global_phi) - margin
        hi = max(lm.metastable_phi, lm.global_phi) + margin
        return cls(lo, hi, n_points)


@dataclass(frozen=True)
class Landmarks:
    minima: tuple[float, ...]
    metastable_phi: float
    global_phi: float
    barrier_phi: float

    def values(self, pot) -> tuple[float, float, float]:
        return float(pot(self.metastable_phi)), float(pot(self.global_phi)), float(pot(self.barrier_phi))


def _stationary_points(pot: PotentialSpec, lo: float, hi: float, n: int = 20001):
    phi = np.linspace(lo, hi, n)
    U = pot(phi)
    dU = np.gradient(U, phi)
    minima, maxima = [], []
    for i in np.nonzero(np.sign(dU[:-1]) != np.sign(dU[1:]))[0]:
        x = 0.5 * (phi[i] + phi[i + 1])
        for _ in range(60):
            d1, d2, _, _ = pot.derivatives(x)
            if d2 == 0:
                break
            step = d1 / d2
            x = min(max(x - step, phi[max(i - 1, 0)]), phi[min(i + 2, n - 1)])
            if abs(step) < 1e-14:
                break
        (minima if dU[i] < 0 else maxima).append(x)
    return minima, maxima


def landmarks(pot: PotentialSpec, lo: float | None = None, hi: float | None = None) -> Landmarks:
    """Metastable minimum, global minimum and the barrier between them."""
    if lo is None or hi is None:
        extra = (pot.coupler.E_J_c if pot.coupler else 0.0)
        half = (pot.E_J_a + abs(extra)) / pot.E_L_a + 1.0
        lo, hi = TWO_PI * pot.flux_ext - half, TWO_PI * pot.flux_ext + half
    minima, maxima = _stationary_points(pot, lo, hi)
    if len(minima) < 2:
        raise NoBarrierError("potential has a single well")
    values = [float(pot(m)) for m in minima]
    g = int(np.argmin(values))
    # the metastable well is the shallowest minimum adjacent to the global one
    candidates = [i for i in (g - 1, g + 1) if 0 <= i < len(minima)]
    m = max(candidates, key=lambda i: values[i])
    a, b = sorted((minima[m], minima[g]))
    between = [x for x in maxima if a < x < b]
    if not between:
        raise NoBarrierError("no interior maximum between the wells")
    barrier = max(between, key=lambda x: float(pot(x)))
    return Landmarks(tuple(minima), minima[m], minima[g], barrier)


@dataclass
class EigenSolution:
    energies: np.ndarray          # ascending, GHz
    wavefunctions: np.ndarray     # shape (n_points, k); Σ ψ² dφ = 1
    grid: Grid
    warnings: list[str] = field(default_factory=list)

    def overlap(self) -> np.ndarray:
        return self.wavefunctions.T @ self.wavefunctions * self.grid.spacing


def _tridiagonal(pot: Callable, E_C: float, grid: Grid):
    x = grid.points
    h = grid.spacing
    diag = 8 * E_C / h**2 + pot(x)
    off = np.full(grid.n_points - 1, -4 * E_C / h**2)
    return diag, off


def _eig(pot, E_C, grid, k, window):
    diag, off = _tridiagonal(pot, E_C, grid)
    if window is not None:
        w, v = eigh_tridiagonal(diag, off, select="v", select_range=window,
                                lapack_driver="stebz")
    else:
        w, v = eigh_tridiagonal(diag, off, select="i", select_range=(0, k - 1),
                                lapack_driver="stebz")
    v = v / math.sqrt(grid.spacing)
    # fix the sign so the largest lobe is positive; keeps outputs bit-stable
    signs = np.sign(v[np.argmax(np.abs(v), axis=0), np.arange(v.shape[1])])
    return w, v * signs


def solve_spectrum(pot: Callable, E_C_a: float, grid: Grid, k: int | None = None, *,
                   window: tuple[float, float] | None = None,
                   check_convergence: bool = False) -> EigenSolution:
    """Lowest ``k`` eigenpairs, or every eigenpair with energy inside ``window``.

    With ``check_convergence`` the problem is re-solved on a grid with twice
    the resolution and a :class:`ConvergenceWarning` is attached (and
    emitted) when any requested level moves by more than 0.5 MHz.
    """
    if (k is None) == (window is None):
        raise ValueError("give exactly one of k or window")
    if k is not None and not 1 <= k <= grid.n_points // 4:
        raise ValueError(f"k must be between 1 and n_points/4 = {grid.n_points // 4}")
    w, v = _eig(pot, E_C_a, grid, k, window)
    sol = EigenSolution(w, v, grid)
    if check_convergence and len(w):
        fine = grid.refined()
        if window is not None:
            lo, hi = window
            pad = 0.01 * (hi - lo) + 0.05
            w2, _ = _eig(pot, E_C_a, fine, None, (lo - pad, hi + pad))
            shifts = [np.min(np.abs(w2 - e)) for e in w] if len(w2) else [math.inf]
        else:
            w2, _ = _eig(pot, E_C_a, fine, k, None)
            shifts = np.abs(w2 - w)
        worst = float(np.max(shifts))
        if worst > CONVERGENCE_TOL_GHZ:
            msg = (f"grid not converged: levels move by {worst * 1e3:.3f} MHz "
                   f"between {grid.n_points} and {fine.n_points} points")
            sol.warnings.append(msg)
            warnings.warn(msg, ConvergenceWarning, stacklevel=2)
    return sol


# --------------------------------------------------------------------------
# metastable ladder

@dataclass(frozen=True)
class Level:
    energy: float
    left_weight: float
    metastable: bool


@dataclass(frozen=True)
class MetastableLadder:
    barrier_top: float
    barrier_phi: float
    well_bottom: float
    levels: tuple[Level, ...]

    @property
    def metastable_levels(self) -> list[Level]:
        return [lv for lv in self.levels if lv.metastable]

    @property
    def count(self) -> int:
        return len(self.metastable_levels)

    @property
    def omega_ge(self) -> float:
        m = self.metastable_levels
        if len(m) < 2:
            raise ValueError("fewer than two metastable levels")
        return m[1].energy - m[0].energy

    @property
    def anharmonicity_num(self) -> float:
        """(E_e - E_g) - (E_f - E_e) in MHz."""
        m = self.metastable_levels
        if len(m) < 3:
            raise ValueError("fewer than three metastable levels")
        return ((m[1].energy - m[0].energy) - (m[2].energy - m[1].energy)) * 1e3


def classify_metastable(sol: EigenSolution, pot: PotentialSpec, grid: Grid | None = None, *,
                        threshold: float = 0.5) -> MetastableLadder:
    """Flag levels below the barrier top whose weight on the metastable side is at least ``threshold``.

    ``left_weight`` is the probability on the metastable side of the barrier,
    which is the left side whenever the shallow well lies at smaller phase.
    """
    grid = grid or sol.grid
    lm = landmarks(pot)
    x = grid.points
    side = x < lm.barrier_phi if lm.metastable_phi < lm.barrier_phi else x > lm.barrier_phi
    top = float(pot(lm.barrier_phi))
    weights = (sol.wavefunctions[side] ** 2).sum(axis=0) * grid.spacing
    levels = tuple(Level(float(E), float(wt), bool(E < top and wt >= threshold))
                   for E, wt in zip(sol.energies, weights))
    return MetastableLadder(top, lm.barrier_phi, float(pot(lm.metastable_phi)), levels)


def solve_metastable(pot: PotentialSpec, E_C_a: float, grid: Grid | None = None, *,
                     margin: float = 2.0, check_convergence: bool = False
                     ) -> tuple[EigenSolution, MetastableLadder]:
    """Solve for every level from the metastable well bottom up to ``margin`` GHz above the barrier."""
    grid = grid or Grid.for_potential(pot)
    lm = landmarks(pot)
    bottom, _, top = lm.values(pot)
    sol = solve_spectrum(pot, E_C_a, grid, window=(bottom, top + margin),
                         check_convergence=check_convergence)
    return sol, classify_metastable(sol, pot, grid)


def numerical_atom_frequency(pot: PotentialSpec, E_C_a: float, grid: Grid | None = None) -> float:
    """E_e - E_g of the two lowest metastable levels, in GHz."""
    if pot.coupler is None:
        raise ValueError("potential has no coupler term")
    return solve_metastable(pot, E_C_a, grid)[1].omega_ge


# --------------------------------------------------------------------------
# perturbative ladder

@dataclass(frozen=True)
class PerturbativeLadder:
    energies: tuple[float, ...]   # GHz above the well bottom
    zero_point: float             # GHz
    Xi: float                     # MHz
    barrier: float | None = None  # quartic-approximation barrier height, GHz

    def count_below_barrier(self) -> int:
        if self.barrier is None:
            raise ValueError("no quartic barrier available")
        return sum(E < self.barrier for E in self.energies)


def quartic_barrier_height(pot: PotentialSpec, phi_min: float) -> float | None:
    """Barrier of the quartic Taylor polynomial of U around ``phi_min`` (GHz above the bottom)."""
    _, d2, d3, d4 = pot.derivatives(phi_min)
    # dU/dx of ½d2 x² + ⅙d3 x³ + (1/24)d4 x⁴ = x (d2 + ½d3 x + ⅙d4 x²)
    roots = np.roots([d4 / 6, d3 / 2, d2])
    real = [r.real for r in roots if abs(r.imag) < 1e-12 and r.real != 0]
    if not real:
        return None
    x = min(real, key=abs)
    return float(0.5 * d2 * x**2 + d3 * x**3 / 6 + d4 * x**4 / 24)


def perturbative_ladder(energies: DerivedEnergies, eq: EquilibriumState,
                        profiles: tuple[ModeProfile, ModeProfile] | ModeProfile,
                        n_levels: int, *, Xi_a: float | None = None,
                        X_a: float | None = None, Y_a: float | None = None) -> PerturbativeLadder:
    """E_n = ω_zpf + n(ω^p_a - Ξ_a) - Ξ_a n(n-1)/2 measured from the well bottom.

    ``Xi_a``, ``X_a``, ``Y_a`` are in MHz and computed from the circuit when omitted.
    """
    from .rates import anharmonicities, bare_rates  # local import avoids a cycle

    if n_levels < 2:
        raise ValueError("n_levels must be at least 2")
    atom = profiles[1] if isinstance(profiles, tuple) else profiles
    if Xi_a is None:
        Xi_a = anharmonicities(energies, eq)[0]
    if X_a is None or Y_a is None:
        res = profiles[0] if isinstance(profiles, tuple) else atom
        b = bare_rates(energies, eq, (res, atom))
        X_a = b.X_a if X_a is None else X_a
        Y_a = b.Y_a if Y_a is None else Y_a
    w = atom.omega_p
    xi = Xi_a / 1e3
    zpf = w / 2 - 11 * (X_a / 1e3) ** 2 / w - 3 * Y_a / 1e3
    levels = tuple(zpf + n * (w - xi) - xi * n * (n - 1) / 2 for n in range(n_levels))
    pot = PotentialSpec.from_energies(energies, eq)
    return PerturbativeLadder(levels, zpf, Xi_a, quartic_barrier_height(pot, eq.phi_a_min))
