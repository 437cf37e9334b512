"""Tests for the command-line front end.

Most cases drive main() in-process with a temp output directory; one
subprocess case proves the module entry point works end to end.  Frozen
numbers come from the library's own tested functions, so these tests
focus on wiring: artifact layout, config precedence, exit codes, and the
determinism guarantee on CSV output.
"""

import json
import subprocess
import sys

import numpy as np
import pytest

from dimerwave.cli import SCHEMA, main, parse_config
from dimerwave.dispersion import DimerParams, sound_speed
from dimerwave.errors import ConfigInvalid
from dimerwave.profiles import DimerKind


def read_json(path):
    with open(path) as fh:
        return json.load(fh)


# ---------------------------------------------------------------------------
# configuration


def test_defaults_are_the_standard_mass_dimer():
    config = parse_config(["dispersion"])
    assert config["material.kappa"] == 1.0
    assert config["material.beta"] == 1.0
    assert config["material.w"] == 2.0
    assert config.kind is DimerKind.MASS
    assert config["run.seed"] == 21910684


def test_flags_override_config_file(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[material]\nw = 3\nkappa = 1\n")
    config = parse_config(["dispersion", "--config", str(ini), "--w", "2"])
    assert config["material.w"] == 2.0


def test_config_file_alone_sets_values(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[solver]\nmodes = 256\n[scan]\nnu_list = 0.4,0.2\n")
    config = parse_config(["beale", "--config", str(ini)])
    assert config["solver.modes"] == 256
    assert config["scan.nu_list"] == (0.4, 0.2)


def test_unknown_config_key_is_rejected(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[material]\nbogus = 3\n")
    with pytest.raises(ConfigInvalid, match="material.bogus"):
        parse_config(["dispersion", "--config", str(ini)])


def test_empty_nu_list_is_rejected():
    with pytest.raises(ConfigInvalid, match="nu_list"):
        parse_config(["beale", "--nu-list", ","])


def test_general_dimer_refused_where_symmetry_matters():
    with pytest.raises(ConfigInvalid, match="general dimer"):
        parse_config(["beale", "--kappa", "2", "--w", "3"])
    # the same material is fine for plain dispersion analysis
    config = parse_config(["dispersion", "--kappa", "2", "--w", "3"])
    assert config.kind is None


def test_dimer_flag_must_match_material():
    with pytest.raises(ConfigInvalid, match="kappa == 1"):
        parse_config(["dispersion", "--dimer", "mass", "--kappa", "2", "--w", "1"])


def test_invalid_w_exits_2_naming_the_invariant(tmp_path, capsys):
    code = main(["dispersion", "--w", "-1", "--out", str(tmp_path)])
    assert code == 2
    assert "positive" in capsys.readouterr().err


def test_bad_format_value_exits_2(tmp_path):
    ini = tmp_path / "run.ini"
    ini.write_text("[output]\nformat = xml\n")
    code = main(["dispersion", "--config", str(ini), "--out", str(tmp_path)])
    assert code == 2


# ---------------------------------------------------------------------------
# dispersion artifacts


@pytest.fixture(scope="module")
def dispersion_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("dispersion")
    assert main(["dispersion", "--out", str(out)]) == 0
    return out


def test_dispersion_writes_spectral_report(dispersion_dir):
    report = read_json(dispersion_dir / "spectral_report.json")
    cs = sound_speed(DimerParams())
    assert report["c_s"] == pytest.approx(cs, rel=1e-14)
    assert report["zero_root"]["multiplicity"] == 4
    # frozen critical frequency of the default material at sonic speed
    assert report["critical_frequency"]["location"] == pytest.approx(
        1.7607542224019326, rel=1e-10
    )


def test_manifest_echoes_every_knob(dispersion_dir):
    manifest = read_json(dispersion_dir / "manifest.json")
    assert manifest["all_passed"] is True
    assert manifest["command"] == "dispersion"
    assert set(manifest["config"]) == set(SCHEMA)
    assert manifest["wall_time_s"] >= 0
    assert all("name" in c and "passed" in c for c in manifest["checks"])


def test_csv_uses_lf_and_full_precision(dispersion_dir):
    raw = (dispersion_dir / "dispersion_scan.csv").read_bytes()
    assert b"\r" not in raw
    lines = raw.decode().strip().split("\n")
    assert lines[0] == "k,dispersion_poly"
    assert len(lines) == 242
    for cell in lines[120].split(","):
        assert format(float(cell), ".17g") == cell


def test_identical_runs_are_bit_identical(tmp_path):
    first = tmp_path / "a"
    second = tmp_path / "b"
    assert main(["dispersion", "--out", str(first)]) == 0
    assert main(["dispersion", "--out", str(second)]) == 0
    a = (first / "dispersion_scan.csv").read_bytes()
    b = (second / "dispersion_scan.csv").read_bytes()
    assert a == b


def test_csv_only_format_skips_json(tmp_path):
    assert main(["dispersion", "--format", "csv", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "dispersion_scan.csv").exists()
    assert not (tmp_path / "spectral_report.json").exists()
    assert (tmp_path / "manifest.json").exists()  # the run record always lands


# ---------------------------------------------------------------------------
# other stages


def test_spectral_stage_passes(tmp_path):
    assert main(["spectral", "--out", str(tmp_path)]) == 0
    report = read_json(tmp_path / "chain_report.json")
    assert max(report["evolution_residuals"]) < 1e-12
    assert max(report["parity_defects"]) < 1e-12
    assert report["symmetry"] == "mass"


def test_nondegeneracy_stage_reports_both_routes(tmp_path):
    assert main(["nondegeneracy", "--out", str(tmp_path)]) == 0
    payload = read_json(tmp_path / "nondegeneracy.json")
    assert payload["constants"]["lfrak0_oracle"] > 0
    assert "amplitude_prefactor" in payload  # reported, not asserted
    header = (tmp_path / "nondegeneracy.csv").read_text().splitlines()[0]
    assert header.startswith("kappa,beta,w,")


def test_profile_stage_writes_one_file_per_epsilon(tmp_path):
    assert main(["profile", "--eps-list", "0.3,0.2", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "leading_profile_eps0.3.csv").exists()
    assert (tmp_path / "leading_profile_eps0.2.csv").exists()
    table = (tmp_path / "leading_profiles.csv").read_text().splitlines()
    assert len(table) == 3


def test_beale_stage_writes_profile_and_sidecar(tmp_path):
    assert main(["beale", "--out", str(tmp_path)]) == 0
    sidecar = read_json(tmp_path / "nanopteron_nu0.3.json")
    assert sidecar["residual"] < 1e-9
    assert sidecar["L"] == 120.0


def test_beale_scan_orders_ripple_amplitudes(tmp_path):
    assert main(["beale", "--nu-list", "0.4,0.3", "--out", str(tmp_path)]) == 0
    lines = (tmp_path / "ripple_scan.csv").read_text().splitlines()
    assert lines[0] == "nu,amplitude,L,modes,residual"
    amplitudes = [float(line.split(",")[1]) for line in lines[1:]]
    assert len(amplitudes) == 2
    assert amplitudes[0] > amplitudes[1]


def test_underresolved_solve_exits_3_with_diagnostic(tmp_path):
    code = main(["beale", "--modes", "32", "--out", str(tmp_path)])
    assert code == 3
    failure = read_json(tmp_path / "failure.json")
    assert failure["error"] == "UnderResolved"
    assert failure["command"] == "beale"


def test_simulate_stage_reports_persistence(tmp_path):
    assert main(["simulate", "--eps-list", "0.4,0.3", "--out", str(tmp_path)]) == 0
    report = read_json(tmp_path / "simulate_report.json")
    assert report["shape_error"] < 0.05
    assert report["n_sites"] == 224
    trace_lines = (tmp_path / "trace.csv").read_text().splitlines()
    assert trace_lines[0] == "t,j,value"
    n_rows = len(trace_lines) - 1
    assert n_rows % 224 == 0
    assert n_rows // 224 >= 26  # stride rounding can add one extra snapshot


def test_full_report_collects_all_stages(tmp_path):
    code = main([
        "full-report",
        "--eps-list", "0.3",
        "--out", str(tmp_path),
    ])
    assert code == 0
    summary = (tmp_path / "summary.csv").read_text().splitlines()
    assert summary[0] == "stage,check,value,bound,verdict"
    stages = {line.split(",")[0] for line in summary[1:]}
    assert stages == {
        "dispersion", "spectral", "nondegeneracy", "profile", "beale", "simulate"
    }
    assert all(line.endswith("pass") for line in summary[1:])
    manifest = read_json(tmp_path / "manifest.json")
    assert manifest["all_passed"] is True


def test_module_entry_point_runs(tmp_path):
    result = subprocess.run(
        [sys.executable, "-m", "dimerwave.cli", "dispersion",
         "--out", str(tmp_path)],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0
    assert "[pass]" in result.stdout
