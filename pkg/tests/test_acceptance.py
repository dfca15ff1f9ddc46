"""Acceptance criteria 1-12 at their stated tolerances."""

import itertools
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from squidcoupler.algebra import apply_to_fock, apply_word, ladder_ops, OperatorPolynomial
from squidcoupler.circuit import (
    charging_energy,
    derive_energies,
    harmonic_profile,
    inductive_energy,
    josephson_energy,
    reference_parameters,
)
from squidcoupler.errors import BoundUndefinedError
from squidcoupler.identities import FULL_SUITE, verify_all
from squidcoupler.rates import anharmonicities, compute_rate_set, mu_coefficient, photon_number_bound
from squidcoupler.schrodinger import (
    Grid,
    PotentialSpec,
    QuadraticPotential,
    numerical_atom_frequency,
    perturbative_ladder,
    solve_metastable,
    solve_spectrum,
)
from squidcoupler.sweep import SweepSpec, find_features, run_sweep

MHZ = 1e3


@pytest.fixture(scope="module")
def fig2(uncoupled):
    _, E, eq, profiles = uncoupled
    pot = PotentialSpec.from_energies(E, eq, with_coupler=False)
    grid = Grid.for_potential(pot, 4096)
    sol, ladder = solve_metastable(pot, E.E_C_a, grid)
    return E, eq, profiles, pot, grid, ladder


@pytest.fixture(scope="module")
def features(fig4_sweep):
    return find_features(fig4_sweep, ["g1i_tilde", "g_minus", "g2_tilde"])


def test_criterion_01_unit_conversions(criterion, reference):
    c = criterion(1)
    E = derive_energies(reference)
    for label, value, target in [
        ("E_L^a [GHz]", inductive_energy(1.0e-9), 163.46),
        ("E_J^a [GHz]", josephson_energy(1.1e-6), 546.35),
        ("E_L^r [GHz]", inductive_energy(0.84868e-9), 192.61),
        ("E_C^r [MHz]", charging_energy(692.8e-15) * MHZ, 27.05),
        ("E_C^a [MHz]", charging_energy(300.0e-15) * MHZ, 64.57),
        ("E_1J^c [GHz]", josephson_energy(30e-9), 14.90),
        ("E_C^c [MHz]", E.E_C_c * MHZ, 2.70),
    ]:
        c.check(label, value, target, 1e-3 * target)
    c.finish()


def test_criterion_02_uncoupled_profiles(criterion, uncoupled):
    c = criterion(2)
    res, atom = uncoupled[3]
    for label, value, target in [
        ("omega_p_a [GHz]", atom.omega_p, 12.80), ("n_a_zpf", atom.n_zpf, 3.520),
        ("phi_a_zpf", atom.phi_zpf, 0.1420), ("omega_p_r [GHz]", res.omega_p, 6.56),
        ("n_r_zpf", res.n_zpf, 3.830), ("phi_r_zpf", res.phi_zpf, 0.1305),
    ]:
        c.check(label, value, target, 5e-3 * target)
    c.finish()


def test_criterion_03_equilibrium(criterion, uncoupled):
    c = criterion(3)
    _, E, eq, _ = uncoupled
    c.check("phi_a_min / pi", eq.phi_a_min / math.pi, 0.4091, 0.001)
    c.check("E_J^a cos(phi_a_min) / E_L^a", E.E_J_a * math.cos(eq.phi_a_min) / E.E_L_a, 0.9411, 0.002)
    c.finish()


def test_criterion_04_cubic_coefficient(criterion, uncoupled):
    c = criterion(4)
    _, E, eq, _ = uncoupled
    c.check("mu", mu_coefficient(E, eq).mu, 1.651, 0.003)
    c.finish()


def test_criterion_05_anharmonicities(criterion, fig2):
    c = criterion(5)
    E, eq, _, _, _, ladder = fig2
    xi_a, _ = anharmonicities(E, eq)
    c.check("perturbative Xi_a [MHz]", xi_a, 325.04, 0.5)
    c.check("numerical anharmonicity [MHz]", ladder.anharmonicity_num, 391.28, 1.5)
    quartic = abs(E.E_C_a * (E.E_L_a - E.E_L_a_tilde) / E.E_L_a_tilde) * MHZ
    c.check("quartic contribution [MHz]", quartic, 30.0, 5.0)
    c.finish()


def test_criterion_06_metastable_count(criterion, fig2):
    c = criterion(6)
    E, eq, profiles, *_, ladder = fig2
    c.require("numerical metastable levels == 7", ladder.count == 7, str(ladder.count))
    below = perturbative_ladder(E, eq, profiles, 12).count_below_barrier()
    c.require("perturbative levels below barrier == 6", below == 6, str(below))
    c.finish()


def test_criterion_07_headline_rates(criterion, rate_set):
    c = criterion(7)
    r = rate_set.rates
    c.check("g2_tilde [MHz]", r.g2_tilde, 27.0, 1.0)
    c.check("K0X [MHz]", r.K0X, 15.7, 0.7)
    c.check("|omega_a - 2 omega_r| [MHz]", abs(r.detuning), 1.5, 1.0)
    c.check("g1c [MHz]", rate_set.bare.g1c, 50.0, 3.0)
    c.finish()


def test_criterion_08_numerical_atom_frequency(criterion, rate_set):
    c = criterion(8)
    pot = PotentialSpec.from_energies(rate_set.energies, rate_set.equilibrium)
    numeric = numerical_atom_frequency(pot, rate_set.energies.E_C_a)
    analytic = rate_set.profiles[1].omega_p - rate_set.rates.Xi_a / MHZ
    c.check("analytic - numerical [MHz]", (analytic - numeric) * MHZ, 13.0, 4.0)
    c.check("numerical omega_a base [GHz]", numeric, 13.47, 0.01)
    c.finish()


def test_criterion_09_sweep_features(criterion, fig4_sweep, features):
    c = criterion(9)
    g2 = fig4_sweep.column("g2_tilde")
    peak = max(e.value for e in features.extrema_of("g2_tilde", "max"))
    at_zero = g2[int(np.argmin(np.abs(fig4_sweep.fluxes)))]
    c.check("g2_tilde drop below max [%]", 100 * (1 - at_zero / peak), 11.0, 3.0)

    zeros = [x for x in features.zeros_of("g1i_tilde") if abs(abs(x) - 0.5) > 1e-6]
    worst = 0.0
    for x in zeros:
        rs = compute_rate_set(reference_parameters(flux_cpl=x))
        lhs = 1 / math.tan(rs.equilibrium.delta)
        rhs = 5 / 6 * rs.rates.mu * rs.zpf_profiles[1].phi_zpf ** 2
        worst = max(worst, abs(lhs - rhs))
    c.require("g1i_tilde zeros satisfy cot(delta) = (5/6) mu phi_a_zpf^2",
              bool(zeros) and worst < 1e-8, f"{len(zeros)} zeros, worst {worst:.2e}")

    n_minus = len([x for x in features.zeros_of("g_minus") if 0 <= x < 1])
    c.require("g_minus zeros per period >= 2", n_minus >= 2, str(n_minus))

    half = compute_rate_set(reference_parameters(flux_cpl=0.5)).bare
    largest = max(abs(getattr(half, n)) for n in ("g1i", "K0", "g2", "G2", "g3", "G3"))
    c.require("inductive rates at flux_cpl = 0.5 < 1e-9 MHz", largest < 1e-9, f"{largest:.1e}")
    c.finish()


def test_criterion_10_resonator_anharmonicity(criterion, fig4_sweep, rate_set):
    c = criterion(10)
    c.check("max |Xi_r| [MHz]", float(np.nanmax(np.abs(fig4_sweep.column("Xi_r")))), 4.0, 1.5)
    try:
        bound = photon_number_bound(rate_set.energies, rate_set.equilibrium, rate_set.profiles)
    except BoundUndefinedError:
        bound = math.inf
    c.require("photon-number bound >= 20", bound >= 20, f"{bound:.4g}")
    c.finish()


def test_criterion_11_symbolic_suite(criterion):
    c = criterion(11)
    for report in verify_all():
        c.require(report.name, report.passed, "" if report.passed else report.difference)
    needed = {"sa-form", "anharmonicity", "zero-point", "cross-kerr-24", "g2-tilde-correction",
              "j-correction", "wick-table"}
    c.require("required identities registered", needed <= set(FULL_SUITE))
    c.finish()


def test_criterion_12_property_suites(criterion, fig2, fig4_sweep):
    c = criterion(12)

    E_C, E_L = 0.0646, 160.0
    width = 12 * (2 * E_C / E_L) ** 0.25
    omega = math.sqrt(8 * E_C * E_L)
    sol = solve_spectrum(QuadraticPotential(E_L), E_C, Grid(-width, width, 4096), 8)
    err = max(abs(e - omega * (n + 0.5)) / (omega * (n + 0.5)) for n, e in enumerate(sol.energies))
    c.require("harmonic oracle within 0.05%", err < 5e-4, f"{err:.2e}")

    worst = max(abs(harmonic_profile(ec, el).n_zpf * harmonic_profile(ec, el).phi_zpf - 0.5)
                for ec in (0.001, 0.03, 0.5) for el in (10.0, 163.46, 900.0))
    c.require("ZPF product = 1/2 within 1e-12", worst < 1e-12, f"{worst:.1e}")

    E, _, _, pot, grid, ladder = fig2
    start = time.perf_counter()
    _, fine = solve_metastable(pot, E.E_C_a, Grid(grid.phi_min, grid.phi_max, 2 * grid.n_points))
    elapsed = time.perf_counter() - start
    drift = abs(fine.metastable_levels[0].energy - ladder.metastable_levels[0].energy) * MHZ
    c.require("grid-doubling drift < 0.1 MHz", drift < 0.1, f"{drift:.3f} MHz")
    c.require("8192-point eigen-solve well under budget", elapsed < 2.0, f"{elapsed:.2f} s")

    rev = run_sweep(fig4_sweep.spec, reverse=True)
    gap = max(float(np.max(np.abs(rev.column(n) - fig4_sweep.column(n)))) for n in ("phi_r_min", "phi_a_min"))
    c.require("direction reversal < 1e-8 rad", gap < 1e-8, f"{gap:.1e}")

    ops = ladder_ops()
    letters = {("a", False): ops["a"], ("a", True): ops["ad"], ("b", False): ops["b"], ("b", True): ops["bd"]}
    mismatches = 0
    for length in range(5):
        for word in itertools.product(letters, repeat=length):
            op = OperatorPolynomial.identity()
            for letter in word:
                op = op * letters[letter]
            for occ in itertools.product(range(5), repeat=2):
                state = {occ: Fraction(1)}
                mismatches += apply_to_fock(op, state) != apply_word(list(word), state)
    c.require("numeric shadow exact on Fock states n <= 4", mismatches == 0, f"{mismatches} mismatches")
    c.finish()
