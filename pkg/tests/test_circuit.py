import math

import numpy as np
import pytest
import scipy.constants as sc
from hypothesis import given, strategies as st
from scipy.optimize import brentq, minimize

from squidcoupler.circuit import (
    CircuitParameters,
    check_validity,
    coupler_phase,
    derive_energies,
    equilibrium_residuals,
    harmonic_profile,
    loaded_capacitances,
    mode_profiles,
    potential_hessian,
    reference_parameters,
    scan_atom_wells,
    solve_equilibrium,
    wrap_phase,
)
from squidcoupler.constants import DEFAULT_CONSTANTS
from squidcoupler.errors import InvalidParametersError, NoMetastableWellError, UnstableModeError

PHI0 = sc.h / (2 * sc.e)


def two_phase_potential(x, E):
    phi_r, phi_a = x
    return (0.5 * E.E_L_r * phi_r**2 + 0.5 * E.E_L_a * (phi_a - 2 * math.pi * E.flux_ext) ** 2
            - E.E_J_a * math.cos(phi_a) - E.E_J_c * math.cos(phi_r - phi_a - math.pi * E.flux_cpl))


def test_constants_match_codata():
    assert DEFAULT_CONSTANTS.flux_quantum == pytest.approx(PHI0, rel=1e-12)


def test_energy_scales_against_direct_formulas(reference):
    E = derive_energies(reference)
    assert E.E_L_a == pytest.approx(PHI0**2 / (4 * math.pi**2 * 1e-9) / sc.h / 1e9, rel=1e-12)
    assert E.E_J_a == pytest.approx(1.1e-6 * PHI0 / (2 * math.pi) / sc.h / 1e9, rel=1e-12)
    assert E.E_1J_c == pytest.approx(30e-9 * PHI0 / (2 * math.pi) / sc.h / 1e9, rel=1e-12)
    assert E.E_J_c == pytest.approx(2 * E.E_1J_c, rel=1e-12)


def test_loaded_capacitances_match_matrix_inverse(reference):
    Cr, Ca, Cc = reference.C_r, reference.C_a_total, reference.C_c_total
    inv = np.linalg.inv(np.array([[Cr + Cc, -Cc], [-Cc, Ca + Cc]]))
    Cr_t, Ca_t, _ = loaded_capacitances(reference)
    assert Cr_t == pytest.approx(1 / inv[0, 0], rel=1e-12)
    assert Ca_t == pytest.approx(1 / inv[1, 1], rel=1e-12)
    E = derive_energies(reference)
    assert E.E_C_c == pytest.approx(4 * sc.e**2 * inv[0, 1] / sc.h / 1e9, rel=1e-10)
    assert E.E_C_r == pytest.approx(sc.e**2 * inv[0, 0] / 2 / sc.h / 1e9, rel=1e-10)


def test_detached_coupler_leaves_capacitances_bare():
    p = reference_parameters(C_c_total=0.0)
    assert loaded_capacitances(p)[:2] == (p.C_r, p.C_a_total)
    assert derive_energies(p).E_C_c == 0.0


@pytest.mark.parametrize("fc, sign", [(0.0, 1), (0.25, 1), (0.75, -1), (1.0, -1)])
def test_coupler_energy_sign(fc, sign):
    E = derive_energies(reference_parameters(flux_cpl=fc))
    assert math.copysign(1, E.E_J_c) == sign


def test_coupler_energy_vanishes_at_half_flux():
    assert abs(derive_energies(reference_parameters(flux_cpl=0.5)).E_J_c) < 1e-12


@pytest.mark.parametrize("field, value", [("L_r", 0.0), ("C_r", -1e-15), ("I0_a", math.nan),
                                          ("I0_c", -1e-9), ("flux_ext", math.inf)])
def test_invalid_parameters_rejected(field, value):
    with pytest.raises(InvalidParametersError):
        reference_parameters(**{field: value})


def test_uncoupled_equilibrium_matches_root_oracle(uncoupled):
    _, E, eq, _ = uncoupled
    f = lambda x: x + (E.E_J_a / E.E_L_a) * math.sin(x) - 2 * math.pi * E.flux_ext
    wells = scan_atom_wells(E.E_L_a, E.E_J_a, E.flux_ext)
    root = brentq(f, wells.metastable - 0.3, wells.metastable + 0.3, xtol=1e-15)
    assert eq.phi_a_min == pytest.approx(root, abs=1e-12)
    assert eq.phi_r_min == 0.0


def test_metastable_well_is_the_higher_minimum(uncoupled):
    _, E, eq, _ = uncoupled
    wells = scan_atom_wells(E.E_L_a, E.E_J_a, E.flux_ext)
    assert len(wells.minima) == 2
    assert wells.metastable != wells.global_min
    assert solve_equilibrium(E, branch="global").phi_a_min == pytest.approx(wells.global_min, abs=1e-10)


def test_coupled_equilibrium_matches_direct_minimization(reference):
    E = derive_energies(reference)
    eq = solve_equilibrium(E)
    res = minimize(two_phase_potential, x0=[0.0, 0.4 * math.pi], args=(E,), method="BFGS",
                   options={"gtol": 1e-12})
    assert eq.phi_r_min == pytest.approx(res.x[0], abs=1e-6)
    assert eq.phi_a_min == pytest.approx(res.x[1], abs=1e-6)


def test_coupled_equilibrium_frozen_values(reference):
    # frozen from the Newton solver, cross-checked by direct minimization above
    eq = solve_equilibrium(derive_energies(reference))
    assert eq.phi_a_min / math.pi == pytest.approx(0.38445, abs=2e-5)
    assert eq.phi_r_min == pytest.approx(0.13587, abs=2e-5)
    assert eq.delta / math.pi == pytest.approx(-0.34121, abs=2e-5)


def test_equilibrium_is_a_minimum(reference):
    E = derive_energies(reference)
    eq = solve_equilibrium(E)
    assert np.max(np.abs(equilibrium_residuals(E, eq.phi_r_min, eq.phi_a_min))) < 1e-9
    assert np.all(np.linalg.eigvalsh(potential_hessian(E, eq.phi_r_min, eq.phi_a_min)) > 0)


@given(st.floats(-1.0, 1.0))
def test_flux_cpl_period_one(fc):
    E0 = derive_energies(reference_parameters(flux_cpl=fc))
    E1 = derive_energies(reference_parameters(flux_cpl=fc + 1))
    a, b = solve_equilibrium(E0), solve_equilibrium(E1)
    assert a.phi_r_min == pytest.approx(b.phi_r_min, abs=1e-9)
    assert a.phi_a_min == pytest.approx(b.phi_a_min, abs=1e-9)


@given(st.floats(0.69, 0.74))
def test_flux_ext_period_shifts_atom_phase(fe):
    a = solve_equilibrium(derive_energies(reference_parameters(flux_ext=fe)))
    b = solve_equilibrium(derive_energies(reference_parameters(flux_ext=fe + 1)))
    assert b.phi_a_min - a.phi_a_min == pytest.approx(2 * math.pi, abs=1e-9)
    assert b.phi_r_min == pytest.approx(a.phi_r_min, abs=1e-9)


def test_single_well_bias_has_no_metastable_branch():
    with pytest.raises(NoMetastableWellError):
        solve_equilibrium(derive_energies(reference_parameters(flux_ext=0.0)))


def test_seeded_newton_reproduces_cold_start(reference):
    E = derive_energies(reference)
    cold = solve_equilibrium(E)
    warm = solve_equilibrium(E, seed=(cold.phi_r_min + 0.01, cold.phi_a_min - 0.01))
    assert warm.phi_a_min == pytest.approx(cold.phi_a_min, abs=1e-12)


@given(st.floats(-20, 20))
def test_wrap_phase_range(x):
    y = wrap_phase(x)
    assert -math.pi < y <= math.pi
    assert math.isclose(math.sin(y), math.sin(x), abs_tol=1e-9)


def test_coupler_phase_definition():
    assert coupler_phase(0.3, 0.1, 0.0) == pytest.approx(0.2)
    assert coupler_phase(0.0, 0.0, 1.0) == pytest.approx(math.pi)


@given(st.floats(1e-3, 10.0), st.floats(1.0, 1e3))
def test_zpf_product_is_one_half(E_C, E_L):
    p = harmonic_profile(E_C, E_L)
    assert abs(p.n_zpf * p.phi_zpf - 0.5) < 1e-12
    assert p.omega_p == pytest.approx(2 * E_L * p.phi_zpf**2, rel=1e-12)


def test_unstable_mode_rejected():
    with pytest.raises(UnstableModeError):
        harmonic_profile(0.05, -1.0)


def test_mode_profiles_need_an_equilibrium(reference):
    with pytest.raises(ValueError):
        mode_profiles(derive_energies(reference))


def test_validity_flags_pass_at_design_point(rate_set):
    report = check_validity(rate_set.energies, rate_set.equilibrium, rate_set.profiles)
    assert report.all_passed
    assert report["small_lambda_a"].margin > 1


def test_parameters_round_trip_through_dict(reference):
    assert CircuitParameters(**reference.as_dict()) == reference
