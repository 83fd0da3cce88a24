import subprocess
import sys

import numpy as np
import pytest

from rotramsey import units
from rotramsey.cli import main
from rotramsey.config import ConfigError, parse_config
from rotramsey.interferometry import Interferogram

SHORT_SCAN = """
initial = pure
[pulse1]
i0_Wcm2 = 0.55e13
[delay]
start_fs = 300
stop_fs = 800
step_fs = 10
"""


def write(tmp_path, text, name="run.cfg"):
    p = tmp_path / name
    p.write_text(text)
    return str(p)


def data_lines(path):
    return [ln for ln in path.read_text().splitlines() if not ln.startswith("#")]


def test_defaults_applied():
    cfg = parse_config("[pulse1]\ni0_Wcm2 = 0.5e13\n", mode="delay")
    assert cfg.j_max == 20
    assert units.au_to_fs(cfg.settings.dt) == pytest.approx(0.5)
    assert cfg.pulse2.i0 == cfg.pulse1.i0
    assert units.au_to_fs(cfg.delays[0]) == pytest.approx(300.0)
    assert cfg.params.alpha_perp == 32.40


def test_thermal_selector():
    cfg = parse_config("initial = thermal:20\n[pulse1]\ni0_Wcm2 = 0.5e13\n", mode="delay")
    assert cfg.distribution.population(0) == pytest.approx(0.38, abs=0.015)


def test_missing_distribution_file(tmp_path):
    missing = tmp_path / "dist.txt"
    with pytest.raises(ConfigError, match="dist.txt"):
        parse_config(f"initial = file:{missing}\n[pulse1]\ni0_Wcm2 = 0.5e13\n", mode="delay")


def test_unknown_key_reports_line():
    with pytest.raises(ConfigError) as exc:
        parse_config("[pulse1]\ni0_Wcm2 = 0.5e13\nbogus_fs = 3\n", mode="delay")
    assert exc.value.line == 3 and exc.value.key == "bogus_fs"
    assert "line 3" in str(exc.value)


def test_type_mismatch_reports_key():
    with pytest.raises(ConfigError, match="tau_fs"):
        parse_config("[pulse1]\ni0_Wcm2 = 0.5e13\ntau_fs = fast\n", mode="delay")


def test_landscape_intensity_cap():
    with pytest.raises(ConfigError):
        parse_config("mode = landscape\n[pulse1]\ni0_Wcm2 = 1e13\n[landscape]\ni0_max_Wcm2 = 5e13\n")


def test_conflicting_mode():
    with pytest.raises(ConfigError):
        parse_config("mode = landscape\n[pulse1]\ni0_Wcm2 = 1e13\n", mode="sensitivity")


def test_presets_resolve():
    for name, mode in [("fig2", "landscape"), ("fig3", "landscape"), ("fig4", "delay"),
                       ("fig6", "sensitivity"), ("fig8", "sensitivity")]:
        assert parse_config(preset=name, mode=mode).mode == mode


def test_interferogram_command(tmp_path, capsys):
    cfg = write(tmp_path, SHORT_SCAN)
    assert main(["interferogram", "--config", cfg, "--out", str(tmp_path / "a")]) == 0
    out = tmp_path / "a" / "interferogram.csv"
    text = out.read_text()
    assert text.startswith("# rotramsey")
    assert "i0_Wcm2 = 5500000000000" in text
    ig = Interferogram.from_csv(text)
    np.testing.assert_allclose(ig.populations.sum(axis=1), 1.0, atol=1e-8)
    assert data_lines(tmp_path / "a" / "visibility.csv")[0] == "j,visibility"
    assert (tmp_path / "a" / "spectrum.csv").read_text().startswith("#")


def test_byte_identical_reruns(tmp_path):
    cfg = write(tmp_path, SHORT_SCAN)
    main(["interferogram", "--config", cfg, "--out", str(tmp_path / "a")])
    main(["interferogram", "--config", cfg, "--out", str(tmp_path / "b"), "--threads", "3"])
    for name in ("interferogram.csv", "visibility.csv", "spectrum.csv"):
        assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()


def test_spectrum_from_existing_csv(tmp_path):
    cfg = write(tmp_path, SHORT_SCAN)
    main(["interferogram", "--config", cfg, "--out", str(tmp_path)])
    assert main(["spectrum", "--input", str(tmp_path / "interferogram.csv"),
                 "--out", str(tmp_path / "s")]) == 0
    rows = data_lines(tmp_path / "s" / "spectrum.csv")
    assert rows[0].startswith("energy_in_B_units,S_j0")
    assert main(["spectrum", "--input", str(tmp_path / "nope.csv"), "--out", str(tmp_path)]) == 4


def test_landscape_command(tmp_path):
    cfg = write(tmp_path, "mode = landscape\n[pulse1]\ni0_Wcm2 = 1e13\n[landscape]\n"
                          "i0_list_Wcm2 = 0, 0.55e13\ntau_list_fs = 100\n")
    assert main(["landscape", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = data_lines(tmp_path / "landscape.csv")
    assert rows[0] == "I0_Wcm2,tauI_fs,p_j0,p_j2,p_j4,p_j6"
    assert float(rows[1].split(",")[2]) == 1.0


def test_sensitivity_command_zero_noise(tmp_path):
    cfg = write(tmp_path, "initial = surrogate\n[pulse1]\ni0_Wcm2 = 0.55e13\n[delay]\n"
                          "start_fs = 1500\nstop_fs = 1700\nstep_fs = 10\n[sensitivity]\n"
                          "init_uncertainty = 0\nmeas_uncertainty = 0\nn_samples = 3\n")
    assert main(["sensitivity", "--config", cfg, "--out", str(tmp_path)]) == 0
    rows = [r.split(",") for r in data_lines(tmp_path / "sensitivity_bands.csv")[1:]]
    assert all(r[2] == r[3] == r[4] for r in rows)
    assert data_lines(tmp_path / "separability.csv")[0].startswith("dalpha_a,dalpha_b")


def test_thermal_dist_command(capsys):
    assert main(["thermal-dist", "--temperature", "20"]) == 0
    out = capsys.readouterr().out
    assert out.startswith("#")
    row0 = [ln for ln in out.splitlines() if ln.startswith("0,")][0]
    assert float(row0.split(",")[1]) == pytest.approx(0.392, abs=1e-3)


@pytest.mark.parametrize("text,code", [
    ("[pulse1]\ni0_Wcm2 = 0.5e13\nbogus = 1\n", 2),
    ("[pulse1]\ni0_Wcm2 = -1\n", 2),
    ("initial = file:/nonexistent/d.txt\n[pulse1]\ni0_Wcm2 = 0.5e13\n", 2),
])
def test_exit_codes(tmp_path, capsys, text, code):
    assert main(["interferogram", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == code
    err = capsys.readouterr().err
    assert err.startswith("rotramsey: error[")


def test_missing_config_file_is_io_error(tmp_path, capsys):
    assert main(["interferogram", "--config", str(tmp_path / "none.cfg")]) == 4
    assert "error[io]" in capsys.readouterr().err


def test_unknown_key_message_has_line(tmp_path, capsys):
    main(["interferogram", "--config", write(tmp_path, "[pulse1]\ni0_Wcm2 = 1e13\nfoo = 2\n")])
    err = capsys.readouterr().err
    assert "error[config]" in err and "line 3" in err and "'foo'" in err


def test_module_entry_point():
    r = subprocess.run([sys.executable, "-m", "rotramsey", "--version"], capture_output=True,
                       text=True)
    assert r.returncode == 0 and "rotramsey" in r.stdout


def test_propagation_failure_exit_code(tmp_path, capsys):
    text = ("[pulse1]\ni0_Wcm2 = 4e13\n[propagation]\ndt_fs = 50\ntol = 1e-16\n"
            "[delay]\nstart_fs = 400\nstop_fs = 500\nstep_fs = 50\n")
    assert main(["interferogram", "--config", write(tmp_path, text), "--out", str(tmp_path)]) == 3
    assert "error[propagation]" in capsys.readouterr().err
