"""Command-line entry point: ``squidcoupler {rates,sweep,levels,resonance,verify}``."""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from . import __version__
from .circuit import derive_energies, mode_profiles, solve_equilibrium
from .config import RunConfig, SweepConfig, config_hash, parse_config, shipped_config_path
from .errors import BoundUndefinedError, ConfigError, SquidCouplerError, UnknownIdentityError
from .identities import FULL_SUITE, verify_identity
from .rates import MHZ_PER_GHZ, compute_rate_set, photon_number_bound
from .report import Column, Table, format_aligned, unit_of, write_table
from .schrodinger import Grid, PotentialSpec, QuadraticPotential, perturbative_ladder, solve_metastable, solve_spectrum
from .sweep import SweepResult, SweepSpec, find_features, resonance_report, run_sweep

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC, EXIT_VERIFY = 0, 2, 3, 4

FIG4_COLUMNS = ("g1c", "g1i", "g1i_tilde", "g_minus", "K0", "K0X", "K_tilde", "g2", "g2_tilde", "J", "G2")
FEATURE_QUANTITIES = ("g1i", "g1i_tilde", "g_minus", "g2_tilde", "K_tilde", "Xi_r")
MIN_FEATURE_POINTS = 16


def _provenance(cfg: RunConfig, command: str, **extra) -> dict[str, str]:
    prov = {
        "command": command,
        "config_hash": config_hash(cfg),
        "tool_version": __version__,
        "defaults_applied": " ".join(cfg.defaults_applied) or "none",
    }
    prov.update({k: str(v) for k, v in extra.items()})
    return prov


def _load(args) -> RunConfig:
    cfg = parse_config(args.config or shipped_config_path())
    changes = {}
    if getattr(args, "flux_cpl", None) is not None:
        changes["flux_cpl"] = args.flux_cpl
    if getattr(args, "flux_ext", None) is not None:
        changes["flux_ext"] = args.flux_ext
    if changes:
        cfg = replace(cfg, circuit=cfg.circuit.replace(**changes))
    if getattr(args, "freeze_zpf", False):
        cfg = replace(cfg, sweeps=tuple(replace(s, freeze_zpf=True) for s in cfg.sweeps))
    return cfg


def _emit(table: Table, cfg: RunConfig, args) -> None:
    formats = (args.format,) if args.format else cfg.output.formats
    out = args.out or cfg.output.directory
    for path in write_table(table, out, formats):
        print(f"wrote {path}")


# --------------------------------------------------------------------------
# rates

def rate_quantities(rs) -> dict[str, tuple[float, str]]:
    """Every reported number at one bias point with its unit."""
    out = {name: (value, unit_of(name)) for name, value in rs.scalars().items()}
    try:
        bound = photon_number_bound(rs.energies, rs.equilibrium, rs.profiles)
    except BoundUndefinedError:
        bound = math.inf
    out["photon_number_bound"] = (bound, "1")
    for name, value in rs.small.values().items():
        out[f"small.{name}"] = (value, "1")
    for flag in rs.validity.flags:
        out[f"validity.{flag.name}.ratio"] = (flag.ratio, "1")
        out[f"validity.{flag.name}.passed"] = (flag.passed, "bool")
    return out


def cmd_rates(args) -> int:
    cfg = _load(args)
    rs = compute_rate_set(cfg.circuit, freeze_zpf=args.freeze_zpf)
    p = cfg.circuit
    quantities = rate_quantities(rs)
    prov = _provenance(cfg, "rates", freeze_zpf=args.freeze_zpf,
                       flux_cpl=repr(p.flux_cpl), flux_ext=repr(p.flux_ext))
    view = Table("rates", [Column("quantity", "text"), Column("value", "text"), Column("unit", "text")])
    for name, (value, unit) in quantities.items():
        shown = str(value).lower() if unit == "bool" else f"{value:.6g}"
        view.add(name, shown, unit)
    print(format_aligned(view))
    for w in rs.small.warnings:
        print(f"warning: {w}")
    if abs(math.cos(math.pi * p.flux_cpl)) < 1e-12:
        print("pure capacitive regime: coupler Josephson energy vanishes, inductive rates are zero")
    # machine-readable form: one row, one unit-tagged column per quantity
    table = Table("rates", [Column(n, u) for n, (_, u) in quantities.items()], provenance=prov)
    table.add(*(v for v, _ in quantities.values()))
    _emit(table, cfg, args)
    return EXIT_OK


# --------------------------------------------------------------------------
# sweep and resonance

def _spec(cfg: RunConfig, s: SweepConfig) -> SweepSpec:
    return SweepSpec(s.axis, s.start_Phi0, s.stop_Phi0, s.n_points, cfg.circuit,
                     freeze_zpf=s.freeze_zpf, numeric_every=s.numeric_every,
                     grid_points=cfg.grid.n_points, name=s.name)


def _rates_table(result: SweepResult, prov) -> Table:
    axis = result.spec.axis
    cols = [Column(axis, "Phi0")] + [Column(q, unit_of(q)) for q in FIG4_COLUMNS] + [Column("error", "text")]
    table = Table(result.spec.name, cols, provenance=prov)
    for row in result.rows:
        vals = [row.values[q] if row.ok else None for q in FIG4_COLUMNS]
        table.add(row.flux, *vals, row.error)
    return table


def _resonance_table(result: SweepResult, name: str, prov) -> Table:
    cols = [Column("flux", "Phi0"), Column("omega_a_num", "GHz"), Column("two_omega_r", "GHz"),
            Column("g2_tilde", "MHz"), Column("in_resonance", "bool"), Column("error", "text")]
    table = Table(name, cols, provenance=prov)
    w_num = result.column("omega_a_num")
    for row, w in zip(result.rows, w_num):
        if not row.ok:
            table.add(row.flux, None, None, None, None, row.error)
            continue
        two_r = 2 * row.values["omega_r_tilde"]
        g2t = row.values["g2_tilde"]
        w = None if math.isnan(w) else float(w)
        inside = None if w is None else abs(w - two_r) * MHZ_PER_GHZ < abs(g2t)
        table.add(row.flux, w, two_r, g2t, inside, None)
    return table


def _features_table(result: SweepResult, name: str, prov) -> Table:
    fs = find_features(result, [q for q in FEATURE_QUANTITIES if q in result.quantities()])
    cols = [Column("feature", "text"), Column("quantity", "text"), Column("flux", "Phi0"),
            Column("flux_hi", "Phi0"), Column("value", "MHz")]
    table = Table(name, cols, provenance=prov)
    for z in fs.zeros:
        table.add("zero", z.quantity, z.flux, None, 0.0)
    for e in fs.extrema:
        table.add(e.kind, e.quantity, e.flux, None, e.value)
    for lo, hi in fs.resonance_windows:
        table.add("resonance_window", "detuning", lo, hi, None)
    return table


def _run_block(cfg: RunConfig, s: SweepConfig, args) -> list[Table]:
    tables = []
    prov = lambda **kw: _provenance(cfg, args.command, sweep=s.name, axis=s.axis,
                                    freeze_zpf=s.freeze_zpf, **kw)
    if s.kind == "rates":
        result = run_sweep(_spec(cfg, s))
        tables.append(_rates_table(result, prov()))
        if s.n_points >= MIN_FEATURE_POINTS:
            tables.append(_features_table(result, f"{s.name}.features", prov()))
        return tables
    for p in s.perturbations:
        result = resonance_report(cfg.circuit, p, axis=s.axis, start=s.start_Phi0, stop=s.stop_Phi0,
                                  n_points=s.n_points, numeric_every=s.numeric_every or 8,
                                  grid_points=cfg.grid.n_points, freeze_zpf=s.freeze_zpf)
        tag = f"{s.name}_dEJ{p:+.4f}"
        tables.append(_resonance_table(result, tag, prov(atom_energy_perturbation=repr(p))))
        if s.n_points >= MIN_FEATURE_POINTS:
            tables.append(_features_table(result, f"{tag}.features",
                                          prov(atom_energy_perturbation=repr(p))))
    return tables


def cmd_sweep(args) -> int:
    cfg = _load(args)
    blocks = [s for s in cfg.sweeps if args.only in (None, s.name)]
    if args.command == "resonance":
        blocks = [s for s in blocks if s.kind == "resonance"]
    if not blocks:
        raise ConfigError("no matching sweep blocks", args.config or str(shipped_config_path()))
    for s in blocks:
        for table in _run_block(cfg, s, args):
            errors = sum(1 for e in table.column("error") if e) if "error" in [c.name for c in table.columns] else 0
            print(f"{table.name}: {len(table.rows)} rows" + (f", {errors} failed points" if errors else ""))
            _emit(table, cfg, args)
    return EXIT_OK


# --------------------------------------------------------------------------
# levels

def cmd_levels(args) -> int:
    cfg = _load(args)
    g = cfg.grid
    params = cfg.circuit if g.coupled else cfg.circuit.replace(I0_c=0.0, C_c_total=0.0)
    energies = derive_energies(params)
    prov = _provenance(cfg, "levels", potential=g.potential, coupled=g.coupled)
    cols = [Column("index", "1"), Column("energy", "GHz"), Column("left_weight", "1"),
            Column("metastable", "bool"), Column("perturbative_energy", "GHz")]
    levels = Table("levels", cols, provenance=prov)

    if g.potential == "harmonic":
        pot = QuadraticPotential(energies.E_L_a)
        lo, hi = (g.phi_min_rad, g.phi_max_rad) if g.phi_min_rad is not None else (-6.0, 6.0)
        grid = Grid(lo, hi, g.n_points)
        sol = solve_spectrum(pot, energies.E_C_a, grid, g.n_levels)
        omega = math.sqrt(8 * energies.E_C_a * energies.E_L_a)
        for i, E in enumerate(sol.energies):
            levels.add(i, E, None, False, omega * (i + 0.5))
    else:
        eq = solve_equilibrium(energies)
        loaded = energies.with_equilibrium(eq)
        pot = PotentialSpec.from_energies(loaded, eq, with_coupler=g.coupled)
        if g.phi_min_rad is not None:
            grid = Grid(g.phi_min_rad, g.phi_max_rad, g.n_points)
        else:
            grid = Grid.for_potential(pot, g.n_points, g.margin_rad)
        sol, ladder = solve_metastable(pot, energies.E_C_a, grid)
        pert = perturbative_ladder(loaded, eq, mode_profiles(loaded), max(g.n_levels, ladder.count))
        k = 0
        for i, lv in enumerate(ladder.levels):
            pe = None
            if lv.metastable and k < len(pert.energies):
                pe = pert.energies[k]
                k += 1
            levels.add(i, lv.energy - ladder.well_bottom, lv.left_weight, lv.metastable, pe)
        levels.provenance["energy_reference"] = "metastable well bottom"
        levels.provenance["metastable_count"] = str(ladder.count)
        if pert.barrier is not None:
            levels.provenance["quartic_barrier_GHz"] = repr(pert.barrier)
            levels.provenance["perturbative_below_barrier"] = str(pert.count_below_barrier())
        print(f"metastable levels: {ladder.count}; numerical anharmonicity "
              f"{ladder.anharmonicity_num:.3f} MHz")

    potential = Table("potential", [Column("phi", "rad"), Column("U", "GHz")], provenance=prov)
    x = grid.points
    step = max(1, len(x) // 1024)
    for phi, u in zip(x[::step], np.asarray(pot(x[::step]), dtype=float)):
        potential.add(phi, u)
    print(format_aligned(levels))
    _emit(levels, cfg, args)
    _emit(potential, cfg, args)
    return EXIT_OK


# --------------------------------------------------------------------------
# verify

def cmd_verify(args) -> int:
    names = args.only or list(FULL_SUITE)
    reports = [verify_identity(n) for n in names]
    for r in reports:
        print(r.row())
    if args.out:
        table = Table("verify", [Column("identity", "text"), Column("passed", "bool"),
                                 Column("difference", "text")],
                      provenance={"command": "verify", "tool_version": __version__})
        for r in reports:
            table.add(r.name, r.passed, r.difference)
        for path in write_table(table, args.out, (args.format,) if args.format else ("csv",)):
            print(f"wrote {path}")
    return EXIT_OK if all(r.passed for r in reports) else EXIT_VERIFY


# --------------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="squidcoupler", description=__doc__)
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, flux=True):
        p.add_argument("--config", help="run configuration (default: shipped reference_circuit.cfg)")
        p.add_argument("--out", help="output directory (default from config)")
        p.add_argument("--format", choices=("csv", "record"), help="write only this format")
        if flux:
            p.add_argument("--flux-cpl", type=float, help="coupler bias in flux quanta")
            p.add_argument("--flux-ext", type=float, help="atom bias in flux quanta")
            p.add_argument("--freeze-zpf", action="store_true",
                           help="zero-point amplitudes of the uncoupled circuit")

    p = sub.add_parser("rates", help="full rate set at one bias point")
    common(p)
    p.set_defaults(func=cmd_rates)
    for name, helptext in (("sweep", "every sweep block of the config"),
                           ("resonance", "resonance maps for the resonance sweep blocks")):
        p = sub.add_parser(name, help=helptext)
        common(p)
        p.add_argument("--only", help="run a single sweep block by name")
        p.set_defaults(func=cmd_sweep)
    p = sub.add_parser("levels", help="rf SQUID eigenlevels and potential samples")
    common(p)
    p.set_defaults(func=cmd_levels)
    p = sub.add_parser("verify", help="symbolic identity suite")
    p.add_argument("--only", action="append", metavar="NAME", help="run only this identity (repeatable)")
    p.add_argument("--out", help="also write the table to this directory")
    p.add_argument("--format", choices=("csv", "record"))
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, UnknownIdentityError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except SquidCouplerError as exc:
        print(f"numeric failure: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC


if __name__ == "__main__":
    sys.exit(main())
