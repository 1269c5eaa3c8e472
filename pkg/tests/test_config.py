
import pytest
from hypothesis import given
from hypothesis import strategies as st

from wgmcqed.config import RunConfig, dump_config, load_config, parse_config
from wgmcqed.errors import ConfigError
from wgmcqed.model import GHZ, DriveSpec, SystemParams, bare_cavity_photon_number


def test_defaults_are_nominal():
    cfg = RunConfig()
    assert cfg.params == SystemParams.nominal()
    assert cfg.laser_grid().size == 161
    assert cfg.laser_grid()[0] == pytest.approx(-8 * GHZ)
    assert cfg.saturation_delta_ca() == cfg.params.gamma_beta


def test_parse_values_and_comments():
    text = """
[system]
kappa_e = 0.2   # inline comment
g_tw = 2.5
[sweep]
powers = 0.01, 0.1
laser_points = 11
[solver]
allow_above_ceiling = yes
"""
    cfg = parse_config(text)
    assert cfg.system.kappa_e == 0.2
    assert cfg.params.coupling == pytest.approx(2.5 * GHZ)
    assert cfg.sweep.powers == (0.01, 0.1)
    assert cfg.sweep.laser_points == 11
    assert cfg.solver.allow_above_ceiling is True


@pytest.mark.parametrize("text, line", [
    ("[system]\nkappa_e = 0.2\nkapa_i = 1\n", 3),
    ("\n[plot]\nx = 1\n", 2),
    ("[solver]\nn_fock = six\n", 2),
])
def test_unknown_or_bad_keys_report_line(text, line):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    assert info.value.line == line


@pytest.mark.parametrize("override", [
    {"system.gamma_perp": "0.1"},      # below gamma_par / 2
    {"solver.basis": "polar"},
    {"solver.n_fock": "1"},
    {"sweep.laser_unit": "mev"},
    {"output.float_format": "q"},
    {"bogus.key": "1"},
    {"system.nope": "1"},
])
def test_invalid_overrides(override):
    with pytest.raises(ConfigError):
        parse_config("", override)


def test_units():
    cfg = parse_config("", {"drive.delta_ca": "13", "drive.delta_ca_unit": "pm"})
    assert cfg.delta_ca() / GHZ == pytest.approx(2.3060958307692307, rel=1e-12)
    cfg = parse_config("", {"drive.power": "0.25"})
    n = bare_cavity_photon_number(cfg.params, DriveSpec(cfg.drive_power(), -cfg.params.gamma_beta)).n_cav
    assert n == pytest.approx(0.25, rel=1e-10)
    cfg = parse_config("", {"drive.power": "1e-9", "drive.power_unit": "w"})
    assert cfg.drive_power() == 1e-9


def test_empty_grid():
    assert load_config(None, {"sweep.laser_points": "0"}).laser_grid().size == 0


floats = st.floats(0.01, 5.0, allow_nan=False)


@given(floats, floats, st.integers(2, 9), st.sampled_from(["traveling", "standing"]),
       st.lists(st.floats(1e-4, 2.0), min_size=1, max_size=5))
def test_dump_round_trip(ke, gb, n, basis, powers):
    cfg = (RunConfig()
           .replace("system", kappa_e=ke, gamma_beta=gb)
           .replace("solver", n_fock=n, basis=basis)
           .replace("sweep", powers=tuple(powers)))
    assert parse_config(dump_config(cfg)) == cfg


def test_shipped_config_matches_defaults():
    import pathlib

    path = pathlib.Path(__file__).resolve().parents[1] / "configs" / "default.ini"
    assert load_config(str(path)) == RunConfig()
