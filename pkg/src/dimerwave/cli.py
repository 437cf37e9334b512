"""Command-line front end for the dimer traveling-wave toolkit.

Each subcommand drives one analysis stage and leaves its artifacts in the
output directory: CSV tables (comma-separated, header row, LF endings,
17 significant digits) for plot-ready data, JSON for structured reports,
and always a manifest.json recording the package version, the full echoed
configuration, wall time, and the pass/fail verdict of the sanity checks
embedded in that stage.  The process exits 0 when every embedded check
passes, 2 on configuration errors, and 3 on numerical failures, in which
case a diagnostic failure.json is written before exiting.

Configuration comes from an INI-style file (--config) holding
section.key pairs; every command-line flag mirrors exactly one such
dotted key (shown in --help) and overrides the file.  Unknown file keys
are rejected.  Runs are deterministic: random probe states use the
configured seed and iteration orders are fixed, so identical
configurations produce bit-identical CSV output.
"""

import argparse
import configparser
import json
import sys
import time
from dataclasses import dataclass
from importlib import metadata
from pathlib import Path

import numpy as np

from .collocation import amplitude_scan, nanopteron_solve
from .dispersion import (
    DimerParams,
    dispersion_poly,
    sound_speed,
    spectral_report,
)
from .errors import ConfigInvalid, DimerwaveError, Unsupported
from .invariants import mass_amplitude_prefactor, nondegeneracy_report
from .profiles import (
    DimerKind,
    ProfileSpec,
    assemble_nanopteron,
    truncated_normalform_check,
)
from .simulate import (
    init_from_profile,
    integrate,
    kdv_residual_scan,
    stegoton_ratio,
    traveling_error,
)
from .statespace import (
    SymmetryKind,
    apply_evolution,
    calibration_report,
    jordan_chain,
    symmetry_apply,
)

COMMANDS = (
    "dispersion",
    "spectral",
    "nondegeneracy",
    "profile",
    "beale",
    "simulate",
    "full-report",
)

# commands that assemble profiles or reduced constants, which exist only
# for the two symmetric dimer families
SYMMETRY_REQUIRED = {"nondegeneracy", "profile", "beale", "simulate", "full-report"}


def _float_list(text):
    items = [part.strip() for part in str(text).split(",") if part.strip()]
    try:
        return tuple(float(part) for part in items)
    except ValueError as exc:
        raise ConfigInvalid(f"bad number in list {text!r}: {exc}") from None


# dotted config key -> (caster, default); the manifest echoes these in order
SCHEMA = {
    "material.kappa": (float, 1.0),
    "material.beta": (float, 1.0),
    "material.w": (float, 2.0),
    "material.alpha": (float, 1.0),
    "material.dimer": (str, "auto"),
    "scan.nu_list": (_float_list, (0.3,)),
    "scan.eps_list": (_float_list, (0.4, 0.3, 0.2)),
    "solver.modes": (int, 512),
    "solver.domain_half_length": (float, 120.0),
    "solver.tol": (float, 1e-10),
    "output.dir": (str, "dimerwave-out"),
    "output.format": (str, "both"),
    "run.seed": (int, 21910684),
}

FLAG_KEYS = {
    "kappa": "material.kappa",
    "beta": "material.beta",
    "w": "material.w",
    "alpha": "material.alpha",
    "dimer": "material.dimer",
    "nu_list": "scan.nu_list",
    "eps_list": "scan.eps_list",
    "modes": "solver.modes",
    "domain_half_length": "solver.domain_half_length",
    "tol": "solver.tol",
    "out": "output.dir",
    "format": "output.format",
    "seed": "run.seed",
}


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for one CLI invocation."""

    command: str
    values: dict

    def __getitem__(self, key):
        return self.values[key]

    @property
    def params(self) -> DimerParams:
        alpha = self.values["material.alpha"]
        force1 = None if alpha == 1.0 else (1.0, alpha)
        try:
            return DimerParams(
                kappa=self.values["material.kappa"],
                beta=self.values["material.beta"],
                w=self.values["material.w"],
                force1=force1,
            )
        except ValueError as exc:
            raise ConfigInvalid(str(exc)) from None

    @property
    def kind(self) -> DimerKind | None:
        choice = self.values["material.dimer"]
        kappa = self.values["material.kappa"]
        w = self.values["material.w"]
        if choice == "mass":
            if kappa != 1.0:
                raise ConfigInvalid(
                    f"mass dimer has equal springs (kappa == 1); got kappa={kappa:g}"
                )
            return DimerKind.MASS
        if choice == "spring":
            if w != 1.0:
                raise ConfigInvalid(
                    f"spring dimer has equal masses (w == 1); got w={w:g}"
                )
            return DimerKind.SPRING
        if kappa == 1.0:
            return DimerKind.MASS
        if w == 1.0:
            return DimerKind.SPRING
        return None

    def require_kind(self) -> DimerKind:
        kind = self.kind
        if kind is None:
            raise Unsupported(
                "general dimer (kappa != 1 and w != 1) is outside the "
                f"symmetric families the '{self.command}' command needs; "
                "set kappa=1 (mass dimer) or w=1 (spring dimer)"
            )
        return kind

    @property
    def out_dir(self) -> Path:
        return Path(self.values["output.dir"])

    def wants(self, fmt: str) -> bool:
        chosen = self.values["output.format"]
        return chosen == "both" or chosen == fmt


def parse_config(argv) -> RunConfig:
    parser = build_parser()
    args = parser.parse_args(argv)

    values = {key: default for key, (_, default) in SCHEMA.items()}
    if args.config is not None:
        values.update(_read_config_file(args.config))
    for flag, key in FLAG_KEYS.items():
        given = getattr(args, flag)
        if given is not None:
            values[key] = SCHEMA[key][0](given)

    if not values["scan.nu_list"]:
        raise ConfigInvalid("scan.nu_list must not be empty")
    if not values["scan.eps_list"]:
        raise ConfigInvalid("scan.eps_list must not be empty")
    if values["solver.tol"] <= 0:
        raise ConfigInvalid("solver.tol must be positive")
    if values["solver.modes"] <= 0:
        raise ConfigInvalid("solver.modes must be positive")
    if values["solver.domain_half_length"] <= 0:
        raise ConfigInvalid("solver.domain_half_length must be positive")
    if values["material.dimer"] not in ("auto", "mass", "spring"):
        raise ConfigInvalid(
            f"material.dimer must be auto, mass, or spring; "
            f"got {values['material.dimer']!r}"
        )
    if values["output.format"] not in ("csv", "json", "both"):
        raise ConfigInvalid(
            f"output.format must be csv, json, or both; "
            f"got {values['output.format']!r}"
        )

    config = RunConfig(command=args.command, values=values)
    config.params  # material invariants checked up front
    if values["material.dimer"] != "auto":
        config.kind  # an explicit family choice must match the material
    if config.command in SYMMETRY_REQUIRED:
        config.require_kind()
    return config


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="dimerwave",
        description="Numerical toolkit for traveling waves on diatomic chains.",
    )
    parser.add_argument("command", choices=COMMANDS, help="analysis stage to run")
    parser.add_argument("--config", default=None, metavar="FILE",
                        help="INI-style config file with section.key entries")

    def flag(name, key, **kwargs):
        _, default = SCHEMA[key]
        help_text = kwargs.pop("help")
        parser.add_argument(name, default=None,
                            help=f"{help_text} [{key}, default {default}]",
                            **kwargs)

    flag("--kappa", "material.kappa", type=float,
         help="linear coefficient of the even spring")
    flag("--beta", "material.beta", type=float,
         help="quadratic coefficient of the even spring")
    flag("--w", "material.w", type=float,
         help="reciprocal mass of the even particles")
    flag("--alpha", "material.alpha", type=float,
         help="quadratic coefficient of the odd spring")
    flag("--dimer", "material.dimer", choices=["auto", "mass", "spring"],
         help="dimer family; auto infers it from kappa and w")
    flag("--nu-list", "scan.nu_list",
         help="comma-separated ripple-scale values for profile solves")
    flag("--eps-list", "scan.eps_list",
         help="comma-separated long-wave amplitudes for scans")
    flag("--modes", "solver.modes", type=int,
         help="Fourier modes per component in collocation solves")
    flag("--domain-half-length", "solver.domain_half_length", type=float,
         help="half period of the collocation domain")
    flag("--tol", "solver.tol", type=float,
         help="Newton convergence tolerance")
    flag("--out", "output.dir", help="output directory for artifacts")
    flag("--format", "output.format", choices=["csv", "json", "both"],
         help="artifact formats to write")
    flag("--seed", "run.seed", type=int,
         help="seed for the random probe states used by embedded checks")
    return parser


def _read_config_file(path) -> dict:
    parser = configparser.ConfigParser(interpolation=None)
    parser.optionxform = str
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigInvalid(f"cannot read config file: {exc}") from None
    except configparser.Error as exc:
        raise ConfigInvalid(f"malformed config file: {exc}") from None
    values = {}
    for section in parser.sections():
        for option, raw in parser.items(section):
            key = f"{section}.{option}"
            if key not in SCHEMA:
                raise ConfigInvalid(f"unknown config key '{key}'")
            try:
                values[key] = SCHEMA[key][0](raw)
            except (TypeError, ValueError) as exc:
                raise ConfigInvalid(f"bad value for '{key}': {exc}") from None
    return values


# ---------------------------------------------------------------------------
# artifact helpers


def _fmt(value) -> str:
    if isinstance(value, (bool, int, np.integer)):
        return str(int(value))
    return format(float(value), ".17g")


def write_csv(path, header, rows) -> None:
    with open(path, "w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(cell if isinstance(cell, str) else _fmt(cell)
                              for cell in row) + "\n")


def write_json(path, payload) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def check(name, value, bound, passed) -> dict:
    return {
        "name": name,
        "value": None if value is None else float(value),
        "bound": bound,
        "passed": bool(passed),
    }


def _package_version() -> str:
    try:
        return metadata.version("artifact")
    except metadata.PackageNotFoundError:
        return "unreleased"


# ---------------------------------------------------------------------------
# subcommands


def _cmd_dispersion(config: RunConfig):
    params = config.params
    report = spectral_report(params)
    checks = []

    zero = report["zero_root"]
    checks.append(check("zero_root_multiplicity_4", zero["multiplicity"], "== 4",
                        zero["multiplicity"] == 4))
    quartic = report["taylor_at_zero"][4]
    checks.append(check("quartic_coefficient_negative", quartic, "< 0", quartic < 0))
    crit = report["critical_frequency"]
    if "error" in crit:
        checks.append(check("critical_frequency_found", None, "one root", False))
    else:
        checks.append(check("critical_frequency_found", crit["location"],
                            "one root", crit["multiplicity"] == 1))
        checks.append(check("critical_frequency_residual", crit["residual"],
                            "< 1e-10", crit["residual"] < 1e-10))

    if config.wants("json"):
        write_json(config.out_dir / "spectral_report.json", report)
    if config.wants("csv"):
        top = 1.2 * crit["location"] if "location" in crit else 10.0
        grid = np.linspace(0.0, top, 241)
        values = dispersion_poly(grid, params, report["c_s"])
        write_csv(config.out_dir / "dispersion_scan.csv",
                  ["k", "dispersion_poly"], zip(grid, values))
    return checks


def _cmd_spectral(config: RunConfig):
    params = config.params
    cs = sound_speed(params)
    chain = jordan_chain(params)

    residuals = [apply_evolution(params, cs, chain[0]).norm()]
    for k in range(1, 4):
        residuals.append((apply_evolution(params, cs, chain[k]) - chain[k - 1]).norm())

    symmetry = None
    parity_defects = None
    if params.kappa == 1.0:
        symmetry = SymmetryKind.MASS
    elif params.w == 1.0:
        symmetry = SymmetryKind.SPRING
    if symmetry is not None:
        parity_defects = [
            (symmetry_apply(symmetry, chain[k]) - (-1.0) ** (k + 1) * chain[k]).norm()
            for k in range(4)
        ]

    calibration = calibration_report(params, n_states=20, seed=config["run.seed"])

    checks = [
        check("jordan_chain_residual", max(residuals), "< 1e-12",
              max(residuals) < 1e-12)
    ]
    if parity_defects is not None:
        checks.append(check("chain_parity_alternates", max(parity_defects),
                            "< 1e-12", max(parity_defects) < 1e-12))
    spread = max(calibration["ratio_spread"])
    checks.append(check("projection_ratio_constant", spread, "< 1e-6",
                        spread < 1e-6))
    recon = calibration["reconstruction_worst"]
    checks.append(check("projection_reconstructs_contour", recon, "< 1e-6",
                        recon < 1e-6))

    if config.wants("json"):
        write_json(config.out_dir / "chain_report.json", {
            "params": params.to_json(),
            "c_s": cs,
            "evolution_residuals": residuals,
            "parity_defects": parity_defects,
            "symmetry": None if symmetry is None else symmetry.value,
            "calibration": calibration,
        })
    if config.wants("csv"):
        if parity_defects is None:
            header = ["index", "evolution_residual"]
            rows = [[k, residuals[k]] for k in range(4)]
        else:
            header = ["index", "evolution_residual", "parity_defect"]
            rows = [[k, residuals[k], parity_defects[k]] for k in range(4)]
        write_csv(config.out_dir / "chain_residuals.csv", header, rows)
    return checks


def _cmd_nondegeneracy(config: RunConfig):
    params = config.params
    report = nondegeneracy_report(params)
    data = report.to_json()

    linear_rel = abs(data["lfrak0_closed"] / data["lfrak0_oracle"] - 1.0)
    checks = [
        check("linear_constant_positive", data["lfrak0_oracle"], "> 0",
              data["lfrak0_oracle"] > 0),
        check("quadratic_constant_nonzero", data["qfrak0_oracle"], "|.| > 1e-10",
              abs(data["qfrak0_oracle"]) > 1e-10),
        check("linear_routes_agree", linear_rel, "< 1e-8", linear_rel < 1e-8),
    ]

    payload = {"constants": data}
    if params.is_mass_dimer:
        # two inequivalent routes to the amplitude prefactor; reported only
        payload["amplitude_prefactor"] = mass_amplitude_prefactor(params.w)
    if config.wants("json"):
        write_json(config.out_dir / "nondegeneracy.json", payload)
    if config.wants("csv"):
        write_csv(config.out_dir / "nondegeneracy.csv",
                  report.csv_header(), [report.csv_row()])
    return checks


def _cmd_profile(config: RunConfig):
    params = config.params
    kind = config.require_kind()
    checks = []
    rows = []
    for eps in config["scan.eps_list"]:
        spec = ProfileSpec(epsilon=eps, params=params, dimer_kind=kind)
        leading = assemble_nanopteron(spec, half_width=60.0, n_points=2001)
        peak = float(np.abs(leading.values_odd).max())
        rows.append([eps, spec.wave_speed, spec.decay_rate, peak])
        tag = format(eps, "g")
        if config.wants("csv"):
            leading.write_csv(config.out_dir / f"leading_profile_eps{tag}.csv")
        if config.wants("json"):
            leading.write_metadata(
                config.out_dir / f"leading_profile_eps{tag}.json"
            )
        checks.append(check(f"supersonic_eps{tag}", spec.wave_speed,
                            f"> c_s = {sound_speed(params):.6g}",
                            spec.wave_speed > sound_speed(params)))

    nu = config["scan.nu_list"][0]
    normalform = truncated_normalform_check(
        nu, np.linspace(-20.0, 20.0, 801), params=params
    )
    checks.append(check("normalform_orbit_residual", normalform["max_residual"],
                        "< 1e-10", normalform["max_residual"] < 1e-10))

    if config.wants("csv"):
        write_csv(config.out_dir / "leading_profiles.csv",
                  ["epsilon", "wave_speed", "decay_rate", "odd_peak"], rows)
    return checks


def _cmd_beale(config: RunConfig):
    params = config.params
    config.require_kind()
    tol = config["solver.tol"]
    nu_list = config["scan.nu_list"]

    profile = nanopteron_solve(
        nu_list[0],
        config["solver.domain_half_length"],
        config["solver.modes"],
        params,
        tol=tol,
    )
    tag = format(nu_list[0], "g")
    if config.wants("csv"):
        profile.write_csv(config.out_dir / f"nanopteron_nu{tag}.csv")
    if config.wants("json"):
        profile.write_sidecar(config.out_dir / f"nanopteron_nu{tag}.json")

    residual_bound = max(1e-9, 10.0 * tol)
    checks = [
        check(f"nanopteron_residual_nu{tag}", profile.info["residual"],
              f"< {residual_bound:g}", profile.info["residual"] < residual_bound)
    ]

    scan = None
    if len(nu_list) > 1:
        scan = amplitude_scan(nu_list, params, tol=tol)
        amplitudes = [row["amplitude"] for row in scan["rows"]]
        worst = max(row["residual"] for row in scan["rows"])
        ordered = all(a > b for a, b in zip(amplitudes, amplitudes[1:]))
        checks.append(check("scan_residuals", worst, f"< {residual_bound:g}",
                            worst < residual_bound))
        checks.append(check("ripple_amplitude_decreasing", min(amplitudes),
                            "strictly decreasing along nu_list", ordered))
        checks.append(check("exponential_fit_quality", scan["r_squared"],
                            "> 0.95", scan["r_squared"] > 0.95))
        if config.wants("csv"):
            write_csv(
                config.out_dir / "ripple_scan.csv",
                ["nu", "amplitude", "L", "modes", "residual"],
                [[r["nu"], r["amplitude"], r["L"], r["modes"], r["residual"]]
                 for r in scan["rows"]],
            )

    if config.wants("json"):
        write_json(config.out_dir / "beale_report.json", {
            "params": params.to_json(),
            "nu": nu_list[0],
            "c": profile.info["c"],
            "residual": profile.info["residual"],
            "ripple_amplitude": profile.info["ripple_amplitude"],
            "scan": scan,
        })
    return checks


def _cmd_simulate(config: RunConfig):
    params = config.params
    kind = config.require_kind()
    half_length = config["solver.domain_half_length"]

    profile = nanopteron_solve(
        config["scan.nu_list"][0],
        half_length,
        config["solver.modes"],
        params,
        tol=config["solver.tol"],
    )
    c = profile.info["c"]
    n_sites = int((2.0 * half_length - 16.0) // 4) * 4
    state = init_from_profile(profile, c, n_sites, params=params)
    trace = integrate(state, 0.02, 50.0 / c, n_snapshots=26)
    report = traveling_error(trace, c)

    speed_rel = abs(report["fitted_speed"] - c) / c
    checks = [
        check("shape_error", report["shape_error"], "< 0.05",
              report["shape_error"] < 0.05),
        check("fitted_speed_matches", speed_rel, "< 1e-3", speed_rel < 1e-3),
    ]

    ratios = None
    if kind is DimerKind.SPRING:
        ratios = stegoton_ratio(trace)
        worst = float(np.abs(ratios / params.kappa - 1.0).max())
        checks.append(check("stegoton_ratio_near_kappa", worst, "< 0.1",
                            worst < 0.1))

    table = kdv_residual_scan(config["scan.eps_list"], params)
    scan_ratios = [row["ratio"] for row in table["rows"]]
    ordered = all(a > b for a, b in zip(scan_ratios, scan_ratios[1:]))
    checks.append(check("longwave_ratio_decreasing", min(scan_ratios),
                        "strictly decreasing along eps_list", ordered))

    if config.wants("csv"):
        rows = []
        for t, snapshot in zip(trace.times, trace.snapshots):
            for j, value in enumerate(snapshot):
                rows.append([t, j, value])
        write_csv(config.out_dir / "trace.csv", ["t", "j", "value"], rows)
        write_csv(
            config.out_dir / "longwave_scan.csv",
            ["epsilon", "discrepancy", "ratio", "sites", "dt", "t_max"],
            [[r["epsilon"], r["discrepancy"], r["ratio"], r["sites"],
              r["dt"], r["t_max"]] for r in table["rows"]],
        )
    if config.wants("json"):
        write_json(config.out_dir / "simulate_report.json", {
            "params": params.to_json(),
            "nu": config["scan.nu_list"][0],
            "c": c,
            "n_sites": n_sites,
            "shape_error": report["shape_error"],
            "fitted_speed": report["fitted_speed"],
            "shifts": [float(s) for s in report["shifts"]],
            "stegoton_ratios": None if ratios is None
            else [float(r) for r in ratios],
            "longwave_rows": table["rows"],
            "energy_drift": trace.diagnostics.get("energy_drift"),
        })
    return checks


def _cmd_full_report(config: RunConfig):
    checks = []
    summary_rows = []
    for name, command in (
        ("dispersion", _cmd_dispersion),
        ("spectral", _cmd_spectral),
        ("nondegeneracy", _cmd_nondegeneracy),
        ("profile", _cmd_profile),
        ("beale", _cmd_beale),
        ("simulate", _cmd_simulate),
    ):
        for item in command(config):
            item = dict(item)
            item["name"] = f"{name}.{item['name']}"
            checks.append(item)
            summary_rows.append([
                name,
                item["name"],
                "" if item["value"] is None else _fmt(item["value"]),
                str(item["bound"]),
                "pass" if item["passed"] else "FAIL",
            ])
    write_csv(config.out_dir / "summary.csv",
              ["stage", "check", "value", "bound", "verdict"], summary_rows)
    return checks


DISPATCH = {
    "dispersion": _cmd_dispersion,
    "spectral": _cmd_spectral,
    "nondegeneracy": _cmd_nondegeneracy,
    "profile": _cmd_profile,
    "beale": _cmd_beale,
    "simulate": _cmd_simulate,
    "full-report": _cmd_full_report,
}


def run(config: RunConfig) -> int:
    """Execute one configured command; returns the process exit status."""
    config.out_dir.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    try:
        checks = DISPATCH[config.command](config)
    except ConfigInvalid:
        raise
    except DimerwaveError as exc:
        write_json(config.out_dir / "failure.json", {
            "error": type(exc).__name__,
            "message": str(exc),
            "command": config.command,
            "config": {key: _echo(value) for key, value in config.values.items()},
        })
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    all_passed = all(item["passed"] for item in checks)
    manifest = {
        "version": _package_version(),
        "command": config.command,
        "config": {key: _echo(value) for key, value in config.values.items()},
        "wall_time_s": round(time.perf_counter() - started, 3),
        "checks": checks,
        "all_passed": all_passed,
    }
    write_json(config.out_dir / "manifest.json", manifest)

    for item in checks:
        verdict = "pass" if item["passed"] else "FAIL"
        shown = "" if item["value"] is None else f" value={item['value']:.6g}"
        print(f"[{verdict}] {config.command}: {item['name']}{shown} "
              f"(bound {item['bound']})")
    # a failed embedded invariant is a numerical failure, not a config one
    return 0 if all_passed else 3


def _echo(value):
    if isinstance(value, tuple):
        return list(value)
    return value


def main(argv=None) -> int:
    try:
        config = parse_config(sys.argv[1:] if argv is None else argv)
        return run(config)
    except ConfigInvalid as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
