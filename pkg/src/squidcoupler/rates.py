"""Bare and renormalized interaction rates at a single bias point.

Rates are rate/2π in MHz and frequencies ω/2π in GHz.  Formulas that mix
the two convert frequencies to MHz internally.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass, field, replace

from .circuit import (
    CircuitParameters,
    DerivedEnergies,
    EquilibriumState,
    ModeProfile,
    ValidityReport,
    check_validity,
    derive_energies,
    mode_profiles,
    solve_equilibrium,
    wrap_phase,
)
from .constants import DEFAULT_CONSTANTS, PhysicalConstants
from .errors import BoundUndefinedError, NearDegenerateDenominatorError

MHZ_PER_GHZ = 1000.0
GUARD_MHZ = 1.0
STRAIN_THRESHOLD = 0.3


@dataclass(frozen=True)
class BareRates:
    g1c: float
    g1i: float
    K0: float
    g2: float
    g3: float
    G2: float
    G3: float
    X_r: float
    Y_r: float
    X_a: float
    Y_a: float


def _loaded(energies: DerivedEnergies, eq: EquilibriumState) -> DerivedEnergies:
    return energies if energies.loaded else energies.with_equilibrium(eq)


def bare_rates(energies: DerivedEnergies, eq: EquilibriumState,
               profiles: tuple[ModeProfile, ModeProfile]) -> BareRates:
    res, atom = profiles
    fr, fa = res.phi_zpf, atom.phi_zpf
    E = energies.E_J_c * MHZ_PER_GHZ
    sd, cd = math.sin(eq.delta), math.cos(eq.delta)
    Ea = energies.E_J_a * MHZ_PER_GHZ
    return BareRates(
        g1c=energies.E_C_c * MHZ_PER_GHZ * res.n_zpf * atom.n_zpf,
        g1i=E * fr * fa * cd,
        K0=E * fr**2 * fa**2 * cd,
        g2=-0.5 * E * fr**2 * fa * sd,
        g3=-E * fr**3 * fa * cd / 6,
        G2=0.5 * E * fr * fa**2 * sd,
        G3=-E * fr * fa**3 * cd / 6,
        X_r=E * fr**3 * sd / 6,
        Y_r=E * fr**4 * cd / 24,
        X_a=(Ea * math.sin(eq.phi_a_min) - E * sd) * fa**3 / 6,
        Y_a=(Ea * math.cos(eq.phi_a_min) + E * cd) * fa**4 / 24,
    )


@dataclass(frozen=True)
class CubicCoefficient:
    mu: float        # E_J^a sin φ_a / Ẽ_L^a
    mu_full: float   # includes the coupler-induced cubic term
    lambda_a: float | None = None  # μ φ_a,zpf / 12


def mu_coefficient(energies: DerivedEnergies, eq: EquilibriumState,
                   atom: ModeProfile | None = None) -> CubicCoefficient:
    loaded = _loaded(energies, eq)
    mu = loaded.E_J_a / loaded.E_L_a_tilde * math.sin(eq.phi_a_min)
    mu_full = (loaded.E_J_a * math.sin(eq.phi_a_min)
               - loaded.E_J_c * math.sin(eq.delta)) / loaded.E_L_a_tilde
    lam = None if atom is None else mu * atom.phi_zpf / 12
    return CubicCoefficient(mu, mu_full, lam)


def lambda_from_cubic(bare: BareRates, atom: ModeProfile) -> float:
    """Λ_a = X_a / ω^p_a, evaluated from the full cubic rate."""
    return bare.X_a / (atom.omega_p * MHZ_PER_GHZ)


def anharmonicities(energies: DerivedEnergies, eq: EquilibriumState,
                    params: CircuitParameters | None = None) -> tuple[float, float]:
    """Return (Ξ_a, Ξ_r) in MHz."""
    L = _loaded(energies, eq)
    ratio_a = L.E_L_a / L.E_L_a_tilde
    offset = eq.phi_a_min - 2 * math.pi * L.flux_ext
    xi_a = L.E_C_a * (5 / 3 * ratio_a**2 * offset**2
                      - (L.E_L_a - L.E_L_a_tilde) / L.E_L_a_tilde)
    xi_r = L.E_C_r * (5 / 3 * (L.E_L_r / L.E_L_r_tilde * eq.phi_r_min) ** 2
                      - (L.E_L_r - L.E_L_r_tilde) / L.E_L_r_tilde)
    return xi_a * MHZ_PER_GHZ, xi_r * MHZ_PER_GHZ


def resonator_anharmonicity_small_coupling(energies: DerivedEnergies,
                                           eq: EquilibriumState) -> float:
    """Leading terms of Ξ_r for small E_J^c / E_L^r, in MHz."""
    r = energies.E_J_c / energies.E_L_r
    return energies.E_C_r * MHZ_PER_GHZ * (5 / 3 * r**2 * math.sin(eq.delta) ** 2
                                            + r * math.cos(eq.delta))


def cross_kerr_0x(bare: BareRates, lambda_a: float) -> float:
    return bare.K0 + 24 * lambda_a * bare.g2


def effective_frequencies(profiles: tuple[ModeProfile, ModeProfile], Xi_a: float,
                          K0X: float) -> tuple[float, float]:
    """(ω̃_r, ω̃_a) in GHz from the plasma frequencies, Ξ_a and K_0,X (MHz)."""
    res, atom = profiles
    shift = K0X / 2 / MHZ_PER_GHZ
    return res.omega_p - shift, atom.omega_p - Xi_a / MHZ_PER_GHZ - shift


@dataclass(frozen=True)
class RenormalizedRates:
    mu: float
    lambda_a: float
    lambda_r: float
    g1i_tilde: float
    g_minus: float
    g_plus: float
    J: float
    F: float
    G2_tilde_minus: float
    G2_tilde_plus: float
    K0X: float
    K_lin: float
    K_mix: float
    K_quad: float
    K_tilde: float
    g2_tilde: float
    Xi_a: float
    Xi_r: float
    omega_r_tilde: float
    omega_a_tilde: float

    @property
    def detuning(self) -> float:
        """ω̃_a - 2ω̃_r in MHz."""
        return (self.omega_a_tilde - 2 * self.omega_r_tilde) * MHZ_PER_GHZ


def _guarded(term: str, value: float, guard: float = GUARD_MHZ) -> float:
    if not abs(value) >= guard:
        raise NearDegenerateDenominatorError(term, value)
    return value


def renormalized_rates(bare: BareRates, profiles: tuple[ModeProfile, ModeProfile],
                       mu: float | CubicCoefficient,
                       anharmonicities: tuple[float, float],
                       frequencies: tuple[float, float] | None = None, *,
                       guard: float = GUARD_MHZ) -> RenormalizedRates:
    """Dress the bare rates by the atom cubic nonlinearity and the nonresonant couplings.

    ``frequencies`` are the (ω̃_r, ω̃_a) pair in GHz used in every
    denominator; when omitted they follow from :func:`effective_frequencies`.
    """
    if isinstance(mu, CubicCoefficient):
        mu = mu.mu
    res, atom = profiles
    Xi_a, Xi_r = anharmonicities
    lam = mu * atom.phi_zpf / 12
    if not abs(lam) < 1:
        raise ValueError(f"|Λ_a| = {abs(lam):.3g} is not below 1")
    lam_r = bare.X_r / (res.omega_p * MHZ_PER_GHZ)
    b = bare

    K0X = cross_kerr_0x(b, lam)
    if frequencies is None:
        frequencies = effective_frequencies(profiles, Xi_a, K0X)
    wr, wa = (f * MHZ_PER_GHZ for f in frequencies)

    g1i_t = b.g1i - 20 * lam * b.G2
    g_m, g_p = b.g1c - g1i_t, b.g1c + g1i_t
    J = b.G2 + 6 * lam * b.g1i
    F = 3 * b.G3 + 20 * lam * b.G2
    Gm = b.G2 - 2 * lam * (b.g1i - 2 * b.g1c)
    Gp = b.G2 - 2 * lam * (b.g1i + 2 * b.g1c)

    d_minus = _guarded("K_lin (ω̃_a - ω̃_r)", wa - wr, guard)
    d_minus_xi = _guarded("K_lin (ω̃_a - ω̃_r - Ξ_a)", wa - wr - Xi_a, guard)
    d_plus = _guarded("K_lin (ω̃_a + ω̃_r)", wa + wr, guard)
    d_plus_xi = _guarded("K_lin (ω̃_a + ω̃_r - Ξ_a)", wa + wr - Xi_a, guard)
    K_lin = (2 * Xi_a * g_m**2 / (d_minus * d_minus_xi)
             + 2 * Xi_a * g_p**2 / (d_plus * d_plus_xi))
    K_mix = 4 * (g_m / d_minus + g_p / d_plus) * F
    K_quad = (4 * b.g2**2 / _guarded("K_quad (ω̃_a + 2ω̃_r)", wa + 2 * wr, guard)
              + 16 * b.g2**2 * Xi_a / _guarded("K_quad (ω̃_a)", wa, guard) ** 2
              + 4 * Gm**2 / _guarded("K_quad (2ω̃_a - ω̃_r)", 2 * wa - wr, guard)
              + 4 * Gp**2 / _guarded("K_quad (2ω̃_a + ω̃_r)", 2 * wa + wr, guard))

    # g_± inside the two-photon corrections use the bare inductive rate
    gm_b, gp_b = b.g1c - b.g1i, b.g1c + b.g1i
    w = _guarded("g2_tilde (ω̃_r)", wr, guard)
    g2_t = (b.g2 - 2 * gm_b * J / w + 2 * gp_b * b.G2 / (3 * w)
            - mu * atom.phi_zpf * gp_b * (b.g1i - 2 * b.g1c) / (9 * w))

    return RenormalizedRates(
        mu=mu, lambda_a=lam, lambda_r=lam_r,
        g1i_tilde=g1i_t, g_minus=g_m, g_plus=g_p, J=J, F=F,
        G2_tilde_minus=Gm, G2_tilde_plus=Gp,
        K0X=K0X, K_lin=K_lin, K_mix=K_mix, K_quad=K_quad,
        K_tilde=K0X + K_lin + K_mix + K_quad,
        g2_tilde=g2_t, Xi_a=Xi_a, Xi_r=Xi_r,
        omega_r_tilde=frequencies[0], omega_a_tilde=frequencies[1],
    )


@dataclass(frozen=True)
class SmallParameters:
    lambda_minus: float
    lambda_plus: float
    zeta_minus: float
    zeta_plus: float
    lambda_res: float
    lambda_atom: float
    lambda_2: float
    eta_minus: float
    eta_plus: float
    lambda_prime_minus: float
    lambda_prime_plus: float
    warnings: tuple[str, ...] = ()

    def values(self) -> dict[str, float]:
        d = asdict(self)
        d.pop("warnings")
        return d


def _ratio(name, num, den):
    if den == 0:
        raise NearDegenerateDenominatorError(name, den)
    return num / den


def small_parameters(rates: RenormalizedRates, frequencies: tuple[float, float] | None = None,
                     Xi_a: float | None = None, *, g2: float | None = None,
                     strain: float = STRAIN_THRESHOLD) -> SmallParameters:
    """Schrieffer-Wolff parameters of the nonresonant eliminations.

    ``g2`` is the bare two-photon rate; defaults to ``rates.g2_tilde`` only if
    not supplied (the difference is a higher-order effect).
    """
    if frequencies is None:
        frequencies = (rates.omega_r_tilde, rates.omega_a_tilde)
    if Xi_a is None:
        Xi_a = rates.Xi_a
    if g2 is None:
        g2 = rates.g2_tilde
    wr, wa = (f * MHZ_PER_GHZ for f in frequencies)
    lm = _ratio("lambda_minus", rates.g_minus, wa - wr)
    lp = _ratio("lambda_plus", rates.g_plus, wa + wr)
    values = dict(
        lambda_minus=lm,
        lambda_plus=lp,
        zeta_minus=_ratio("zeta_minus", rates.F, wa - wr - Xi_a),
        zeta_plus=_ratio("zeta_plus", rates.F, wa + wr - Xi_a),
        lambda_res=_ratio("lambda_res", -2 * g2, wa),
        lambda_atom=_ratio("lambda_atom", -2 * rates.J, wr),
        lambda_2=_ratio("lambda_2", g2, wa + 2 * wr),
        eta_minus=_ratio("eta_minus", rates.G2_tilde_minus, 2 * wa - wr - Xi_a),
        eta_plus=_ratio("eta_plus", rates.G2_tilde_plus, 2 * wa + wr - Xi_a),
        lambda_prime_minus=lm * _ratio("lambda_prime_minus", Xi_a, wa - wr - Xi_a),
        lambda_prime_plus=lp * _ratio("lambda_prime_plus", Xi_a, wa + wr - Xi_a),
    )
    warnings = tuple(f"{k}={v:.3g} strains perturbation theory"
                     for k, v in values.items() if abs(v) >= strain)
    return SmallParameters(**values, warnings=warnings)


@dataclass(frozen=True)
class HigherOrderFrequencies:
    omega_r: float        # ω^p_r - Ξ_r - K_0,X/2
    omega_a: float        # ω^p_a - Ξ_a - K_0,X/2
    omega_r_tilde: float
    omega_a_prime: float
    omega_a_tilde: float
    Xi_r_tilde: float     # MHz
    small: SmallParameters


def higher_order_frequencies(bare: BareRates, rates: RenormalizedRates,
                             profiles: tuple[ModeProfile, ModeProfile]) -> HigherOrderFrequencies:
    """Frequencies after the second-order shifts of the nonresonant eliminations.

    Small parameters are evaluated with the intermediate frequencies
    ω_r, ω_a that already include the self-Kerr and K_0,X shifts.
    """
    res, atom = profiles
    K = rates.K0X / 2 / MHZ_PER_GHZ
    w_r = res.omega_p - rates.Xi_r / MHZ_PER_GHZ - K
    w_a = atom.omega_p - rates.Xi_a / MHZ_PER_GHZ - K
    s = small_parameters(rates, (w_r, w_a), rates.Xi_a, g2=bare.g2)
    g2, Xi = bare.g2, rates.Xi_a
    r = rates
    shift_r = (-s.lambda_minus * r.g_minus - s.lambda_plus * r.g_plus
               + 2 * (2 * s.lambda_res - s.lambda_2) * g2
               - 2 * (s.lambda_2 * g2 + s.eta_plus * r.G2_tilde_plus
                      + s.eta_minus * r.G2_tilde_minus))
    shift_a = (s.lambda_minus * r.g_minus - s.lambda_plus * r.g_plus
               + 4 * s.lambda_atom * r.J - 2 * s.lambda_2 * g2
               - 2 * (s.zeta_plus * r.g_plus + s.lambda_plus * r.F + s.eta_plus * r.G2_tilde_plus)
               - 2 * s.lambda_plus**2 * Xi)
    w_a_prime = w_a + shift_a / MHZ_PER_GHZ
    w_a_tilde = w_a_prime - 2 * s.lambda_plus * s.lambda_prime_plus * Xi / MHZ_PER_GHZ
    return HigherOrderFrequencies(
        omega_r=w_r, omega_a=w_a,
        omega_r_tilde=w_r + shift_r / MHZ_PER_GHZ,
        omega_a_prime=w_a_prime, omega_a_tilde=w_a_tilde,
        Xi_r_tilde=rates.Xi_r - 2 * (2 * s.lambda_res - s.lambda_2) * g2,
        small=s,
    )


def two_photon_rate_explicit(bare: BareRates, rates: RenormalizedRates,
                             small: SmallParameters) -> float:
    """g̃₂ written through the small parameters, before the two-photon-regime simplification."""
    s = small
    return (bare.g2 + s.lambda_atom / 2 * rates.g_minus - s.lambda_minus * rates.J
            + s.eta_minus * rates.g_plus + s.lambda_plus * rates.G2_tilde_minus)


# --------------------------------------------------------------------------
# photon-number bound

def photon_number_bound(energies: DerivedEnergies, eq: EquilibriumState,
                        profiles: tuple[ModeProfile, ModeProfile], *,
                        guard: float = 1e-9) -> float:
    """Photon number at which n_r Ξ_r reaches g₂ in the linearized estimate."""
    res, atom = profiles
    alpha = 5 * energies.E_J_c / (3 * energies.E_L_r)
    base = math.pi / 2 + alpha / 2
    distance = min(abs(wrap_phase(s * base - eq.delta)) for s in (1, -1))
    if distance < guard:
        raise BoundUndefinedError(
            f"coupler phase {eq.delta:.6g} lies within {guard:g} rad of the Ξ_r zero")
    return (energies.E_L_r / energies.E_C_r) * res.phi_zpf**2 * atom.phi_zpf / (2 * distance)


def nearest_xi_r_zero(energies: DerivedEnergies, delta: float) -> float:
    alpha = 5 * energies.E_J_c / (3 * energies.E_L_r)
    base = math.pi / 2 + alpha / 2
    return min((base, -base), key=lambda d0: abs(wrap_phase(d0 - delta)))


# --------------------------------------------------------------------------
# full pipeline

@dataclass(frozen=True)
class RateSet:
    params: CircuitParameters
    energies: DerivedEnergies
    equilibrium: EquilibriumState
    profiles: tuple[ModeProfile, ModeProfile]
    zpf_profiles: tuple[ModeProfile, ModeProfile]
    cubic: CubicCoefficient
    bare: BareRates
    rates: RenormalizedRates
    small: SmallParameters
    validity: ValidityReport
    freeze_zpf: bool = False
    higher_order: HigherOrderFrequencies | None = None

    def scalars(self) -> dict[str, float]:
        """Flat mapping of every reported number (rates MHz, frequencies GHz)."""
        out = {
            "phi_r_min": self.equilibrium.phi_r_min,
            "phi_a_min": self.equilibrium.phi_a_min,
            "delta": self.equilibrium.delta,
            "E_J_c": self.energies.E_J_c,
            "E_L_r_tilde": self.energies.E_L_r_tilde,
            "E_L_a_tilde": self.energies.E_L_a_tilde,
            "omega_p_r": self.profiles[0].omega_p,
            "omega_p_a": self.profiles[1].omega_p,
            "phi_r_zpf": self.zpf_profiles[0].phi_zpf,
            "phi_a_zpf": self.zpf_profiles[1].phi_zpf,
            "n_r_zpf": self.zpf_profiles[0].n_zpf,
            "n_a_zpf": self.zpf_profiles[1].n_zpf,
            "mu_full": self.cubic.mu_full,
        }
        out.update(asdict(self.bare))
        out.update(asdict(self.rates))
        out["detuning"] = self.rates.detuning
        return out


def frozen_zpf_profiles(params: CircuitParameters,
                        consts: PhysicalConstants = DEFAULT_CONSTANTS
                        ) -> tuple[ModeProfile, ModeProfile]:
    """Profiles evaluated with the coupler Josephson energy switched off."""
    energies = replace(derive_energies(params, consts), E_J_c=0.0)
    eq = solve_equilibrium(energies, branch="metastable")
    return mode_profiles(energies, eq)


def compute_rate_set(params: CircuitParameters, *, seed: tuple[float, float] | None = None,
                     freeze_zpf: bool = False, plasma_denominators: bool = False,
                     higher_order: bool = False, branch: str = "metastable",
                     consts: PhysicalConstants = DEFAULT_CONSTANTS) -> RateSet:
    """Equilibrium, profiles, bare and renormalized rates at one bias point.

    With ``freeze_zpf`` the zero-point amplitudes entering the rates come
    from the uncoupled circuit while all δ-dependent factors and the mode
    frequencies still follow the actual equilibrium.  ``plasma_denominators``
    replaces ω̃ by ω^p in every denominator for sensitivity checks.
    """
    bare_energies = derive_energies(params, consts)
    eq = solve_equilibrium(bare_energies, branch=branch, seed=seed)
    energies = bare_energies.with_equilibrium(eq)
    profiles = mode_profiles(energies)
    zpf = frozen_zpf_profiles(params, consts) if freeze_zpf else profiles
    cubic = mu_coefficient(energies, eq, zpf[1])
    bare = bare_rates(energies, eq, zpf)
    xi = anharmonicities(energies, eq)
    K0X = cross_kerr_0x(bare, cubic.lambda_a)
    if plasma_denominators:
        freqs = (profiles[0].omega_p, profiles[1].omega_p)
    else:
        freqs = effective_frequencies(profiles, xi[0], K0X)
    renorm = renormalized_rates(bare, zpf, cubic, xi, freqs)
    if plasma_denominators:
        # report the effective frequencies even when denominators use ω^p
        eff = effective_frequencies(profiles, xi[0], K0X)
        renorm = replace(renorm, omega_r_tilde=eff[0], omega_a_tilde=eff[1])
    small = small_parameters(renorm, g2=bare.g2)
    ho = higher_order_frequencies(bare, renorm, profiles) if higher_order else None
    return RateSet(
        params=params, energies=energies, equilibrium=eq, profiles=profiles,
        zpf_profiles=zpf, cubic=cubic, bare=bare, rates=renorm, small=small,
        validity=check_validity(energies, eq, profiles),
        freeze_zpf=freeze_zpf, higher_order=ho,
    )
