import pytest

from qadapose.config import FULL_STEP, FULL_TRIALS, ScenarioConfig
from qadapose.errors import ConfigError
from qadapose.qada import REFERENCE_CALIBRATION


def test_defaults_are_desk_scale():
    cfg = ScenarioConfig()
    assert cfg.grid_step == 0.25 and cfg.realizations == 20
    assert cfg.gammas_deg == (0.0, 120.0, 240.0)
    assert cfg.calibration == REFERENCE_CALIBRATION
    assert len(cfg.grid()) == 81


def test_paper_scale():
    cfg = ScenarioConfig().paper_scale()
    assert (cfg.grid_step, cfg.realizations) == (FULL_STEP, FULL_TRIALS)
    assert len(cfg.grid()) == 21 * 21


def test_round_trip():
    cfg = ScenarioConfig(seed=7, solvers=("ippe",), gammas_deg=(10, 20), code_seed=3, redraw=False, snr_db=12.5)
    assert ScenarioConfig.from_text(cfg.to_text()) == cfg


def test_partial_file_keeps_base():
    base = ScenarioConfig(seed=5)
    cfg = ScenarioConfig.from_text("[scenario]\nrealizations = 2\n", base)
    assert cfg.realizations == 2 and cfg.seed == 5


def test_beacons_follow_room():
    cfg = ScenarioConfig(room_x=3.0, room_y=3.0, beacon_side=1.0)
    assert cfg.center == (1.5, 1.5)
    assert cfg.beacons().positions[0, :2].tolist() == [1.0, 1.0]


@pytest.mark.parametrize("text, key", [
    ("[scenario]\ngrid_stp = 0.1\n", "grid_stp"),
    ("[scenario]\ngrid_step = -1\n", "grid_step"),
    ("[scenario]\nrealizations = many\n", "realizations"),
    ("[scenario]\nsolvers = ippe p3p\n", "solvers"),
    ("[signals]\ndetector = psychic\n", "detector"),
    ("[optics]\nf = 1\n", "optics"),
])
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_text(text)
    assert info.value.key == key


def test_calibration_section_errors_name_the_key():
    text = ScenarioConfig().to_text().replace("lambda = 1.25", "lambda = -1")
    with pytest.raises(ConfigError) as info:
        ScenarioConfig.from_text(text)
    assert info.value.key == "lambda"


def test_unreadable_text():
    with pytest.raises(ConfigError):
        ScenarioConfig.from_text("no section header\n")


def test_inline_comments():
    cfg = ScenarioConfig.from_text("[scenario]\ngrid_step = 0.5   ; m\nseed = 4 # master\n")
    assert cfg.grid_step == 0.5 and cfg.seed == 4
