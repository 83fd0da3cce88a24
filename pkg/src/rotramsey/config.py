"""Run configuration: parsing, validation, defaults and figure presets.

Format: INI-like ``key = value`` lines grouped under ``[section]`` headers,
``#`` comments. Keys before the first header belong to ``[run]``. Physical
quantities carry their unit in the key name (``_fs``, ``_Wcm2``, ``_a03``,
``_cm``).
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import units
from .dynamics import PropagationSettings
from .ensemble import (
    DistributionError,
    InitialDistribution,
    load_distribution,
    pure_ground,
    surrogate_experimental,
    thermal,
)
from .interferometry import delay_grid
from .pulse import PulseSpec
from .rotor import MolecularParams
from .sensitivity import SensitivityConfig

MODES = ("landscape", "delay", "sensitivity")
MAX_VALIDATED_I0_WCM2 = 4e13


class ConfigError(ValueError):
    def __init__(self, message, key=None, line=None):
        where = []
        if key:
            where.append(f"key '{key}'")
        if line:
            where.append(f"line {line}")
        super().__init__(f"{', '.join(where)}: {message}" if where else message)
        self.key = key
        self.line = line


_REQUIRED = object()
_INHERIT = object()  # pulse2 falls back to pulse1

# section -> key -> (type, default)
SCHEMA = {
    "run": {
        "mode": (str, None),
        "initial": (str, "pure"),
        "j_ini_max": (int, 6),
        "seed": (int, 0),
    },
    "molecule": {
        "b_cm": (float, 6.3685),
        "dalpha_a03": (float, 16.20),
        "alpha_perp_a03": (float, 32.40),
    },
    "pulse1": {
        "i0_Wcm2": (float, _REQUIRED),
        "tau_fs": (float, 100.0),
        "t_center_fs": (float, 0.0),
        "lambda_nm": (float, 800.0),
    },
    "pulse2": {
        "i0_Wcm2": (float, _INHERIT),
        "tau_fs": (float, _INHERIT),
        "lambda_nm": (float, _INHERIT),
    },
    "propagation": {
        "j_max": (int, 20),
        "dt_fs": (float, 0.5),
        "tol": (float, 1e-10),
        "window_multiplier": (float, 3.0),
    },
    "delay": {
        "start_fs": (float, 300.0),
        "stop_fs": (float, 4000.0),
        "step_fs": (float, 5.0),
        "allow_overlap": (bool, False),
        "spectrum": (bool, True),
    },
    "landscape": {
        "i0_min_Wcm2": (float, 0.05e13),
        "i0_max_Wcm2": (float, 2.0e13),
        "i0_num": (int, 40),
        "i0_list_Wcm2": (list, None),
        "tau_min_fs": (float, 50.0),
        "tau_max_fs": (float, 500.0),
        "tau_num": (int, 10),
        "tau_list_fs": (list, None),
    },
    "sensitivity": {
        "dalpha_list_a03": (list, [16.20, 17.01, 15.39]),
        "reference_dalpha_a03": (float, None),
        "intensity_ratio": (float, 1.6),
        "init_uncertainty": (float, 0.02),
        "meas_uncertainty": (float, 0.02),
        "n_samples": (int, 500),
        "target_j": (int, 0),
        "window_start_fs": (float, None),
        "window_stop_fs": (float, None),
        "noise": (str, "gaussian"),
        "band_k": (float, 1.0),
        "min_separable_fs": (float, 50.0),
    },
}

PRESETS = {
    "fig2": """
        mode = landscape
        initial = pure
        [pulse1]
        i0_Wcm2 = 0.5e13
        [landscape]
        i0_min_Wcm2 = 0.05e13
        i0_max_Wcm2 = 2.0e13
        i0_num = 40
        tau_min_fs = 50
        tau_max_fs = 500
        tau_num = 10
    """,
    "fig3": """
        mode = landscape
        initial = pure
        [pulse1]
        i0_Wcm2 = 0.5e13
        [landscape]
        i0_min_Wcm2 = 0.02e13
        i0_max_Wcm2 = 2.0e13
        i0_num = 100
        tau_list_fs = 100
    """,
    "fig4": """
        mode = delay
        initial = pure
        [pulse1]
        i0_Wcm2 = 0.55e13
        tau_fs = 100
        [delay]
        spectrum = true
    """,
    "fig6": """
        mode = sensitivity
        initial = surrogate
        [pulse1]
        i0_Wcm2 = 0.55e13
        tau_fs = 100
        [sensitivity]
        dalpha_list_a03 = 16.20, 17.01, 15.39
        intensity_ratio = 1.6
        init_uncertainty = 0.02
        meas_uncertainty = 0.02
        n_samples = 500
    """,
    "fig8": """
        mode = sensitivity
        initial = surrogate
        [pulse1]
        i0_Wcm2 = 0.55e13
        tau_fs = 100
        [sensitivity]
        dalpha_list_a03 = 16.20, 17.01, 15.39, 16.52, 15.88
        intensity_ratio = 1.6
        init_uncertainty = 0.02
        meas_uncertainty = 0.02
        n_samples = 500
        window_start_fs = 3450
        window_stop_fs = 3750
    """,
}


@dataclass
class RunConfig:
    mode: str
    params: MolecularParams
    pulse1: PulseSpec
    pulse2: PulseSpec
    initial: str
    distribution: InitialDistribution
    settings: PropagationSettings
    j_max: int
    seed: int
    delays: np.ndarray
    allow_overlap: bool
    want_spectrum: bool
    intensities: np.ndarray  # landscape, W/cm^2
    durations: np.ndarray  # landscape, fs
    sensitivity: Optional[SensitivityConfig]
    reference_dalpha: float
    min_separable: float
    values: dict = field(default_factory=dict)

    def echo(self) -> str:
        """The resolved configuration as '#'-prefixed lines."""
        lines = []
        for section, entries in self.values.items():
            lines.append(f"# [{section}]")
            for key, value in entries.items():
                lines.append(f"#   {key} = {_format(value)}")
        return "\n".join(lines) + "\n"


def _format(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return f"{value:.15g}"
    if isinstance(value, (list, tuple)):
        return ", ".join(_format(v) for v in value)
    return str(value)


def _tokenize(text: str):
    """Yield (section, key, raw_value, line_number)."""
    section = "run"
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError(f"malformed section header {line!r}", line=lineno)
            section = line[1:-1].strip()
            if section not in SCHEMA:
                raise ConfigError(f"unknown section [{section}]", line=lineno)
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", line=lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if "#" in value:
            value = value.split("#", 1)[0].strip()
        yield section, key, value, lineno


def _convert(kind, value, key, line):
    try:
        if kind is bool:
            low = value.lower()
            if low in ("true", "yes", "1", "on"):
                return True
            if low in ("false", "no", "0", "off"):
                return False
            raise ValueError(value)
        if kind is list:
            items = [v.strip() for v in value.split(",") if v.strip()]
            if not items:
                raise ValueError(value)
            return [float(v) for v in items]
        if kind is int:
            f = float(value)
            if f != int(f):
                raise ValueError(value)
            return int(f)
        return kind(value)
    except ValueError:
        raise ConfigError(f"expected {kind.__name__}, got {value!r}", key=key, line=line) from None


def read_values(text: str, into: Optional[dict] = None, origin: str = "config") -> dict:
    """Parse config text into {section: {key: (value, line)}}, overlaying ``into``."""
    out = {s: dict(v) for s, v in (into or {}).items()}
    seen = set()
    for section, key, value, line in _tokenize(text):
        if key not in SCHEMA[section]:
            raise ConfigError(f"unknown key in [{section}] ({origin})", key=key, line=line)
        if (section, key) in seen:
            raise ConfigError(f"duplicate key in [{section}] ({origin})", key=key, line=line)
        seen.add((section, key))
        kind = SCHEMA[section][key][0]
        out.setdefault(section, {})[key] = (_convert(kind, value, key, line), line)
    return out


def resolve_initial(selector: str, params: MolecularParams, j_ini_max: int,
                    line=None) -> InitialDistribution:
    """pure | thermal:<K> | file:<path> | surrogate"""
    sel = selector.strip()
    try:
        if sel == "pure":
            return pure_ground()
        if sel == "surrogate":
            return surrogate_experimental()
        if sel.startswith("thermal:"):
            return thermal(float(sel.split(":", 1)[1]), params, j_ini_max)
        if sel.startswith("file:"):
            path = sel.split(":", 1)[1].strip()
            if not os.path.isfile(path):
                raise ConfigError(f"distribution file not found: {path}", key="initial",
                                  line=line)
            return load_distribution(path, j_ini_max)
    except (DistributionError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc), key="initial", line=line) from exc
    raise ConfigError(f"unknown initial state selector {selector!r}", key="initial", line=line)


def parse_config(source: str = "", *, preset: Optional[str] = None,
                 mode: Optional[str] = None, seed: Optional[int] = None) -> RunConfig:
    """Build a validated RunConfig from config text, an optional preset, and overrides.

    Precedence: explicit arguments > config text > preset > defaults.
    """
    raw = {}
    if preset is not None:
        if preset not in PRESETS:
            raise ConfigError(f"unknown preset {preset!r}; choose from {sorted(PRESETS)}")
        text = "\n".join(line.strip() for line in PRESETS[preset].splitlines())
        raw = read_values(text, origin=f"preset {preset}")
    raw = read_values(source or "", into=raw)

    def get(section, key):
        entry = raw.get(section, {}).get(key)
        if entry is not None:
            return entry
        default = SCHEMA[section][key][1]
        if default is _REQUIRED:
            raise ConfigError(f"missing required key in [{section}]", key=key)
        return (default, None)

    values = {}

    def val(section, key):
        v, _ = get(section, key)
        if v is not None and v is not _INHERIT:
            values.setdefault(section, {})[key] = v
        return v

    cfg_mode = val("run", "mode")
    if mode is not None:
        if cfg_mode is not None and cfg_mode != mode:
            raise ConfigError(f"config mode {cfg_mode!r} conflicts with requested {mode!r}",
                              key="mode", line=get("run", "mode")[1])
        cfg_mode = mode
        values.setdefault("run", {})["mode"] = mode
    if cfg_mode not in MODES:
        raise ConfigError(f"mode must be one of {MODES}, got {cfg_mode!r}", key="mode",
                          line=get("run", "mode")[1])

    def checked(section, key, test, message):
        v = val(section, key)
        if v is not None and v is not _INHERIT and not test(v):
            raise ConfigError(message, key=key, line=get(section, key)[1])
        return v

    b = checked("molecule", "b_cm", lambda x: x > 0, "must be positive")
    da = val("molecule", "dalpha_a03")
    ap = checked("molecule", "alpha_perp_a03", lambda x: x >= 0, "must be non-negative")
    params = MolecularParams.from_lab(b, da, ap)

    positive = (lambda x: x > 0, "must be positive")
    nonneg = (lambda x: x >= 0, "must be non-negative")
    i1 = checked("pulse1", "i0_Wcm2", *nonneg)
    t1 = checked("pulse1", "tau_fs", *positive)
    c1 = val("pulse1", "t_center_fs")
    l1 = val("pulse1", "lambda_nm")
    pulse1 = PulseSpec.from_lab(i1, t1, c1, l1)

    def inherit(key, fallback):
        v = checked("pulse2", key, *((positive) if key == "tau_fs" else nonneg))
        if v is _INHERIT:
            values.setdefault("pulse2", {})[key] = fallback
            return fallback
        return v

    pulse2 = PulseSpec.from_lab(inherit("i0_Wcm2", i1), inherit("tau_fs", t1), 0.0,
                                inherit("lambda_nm", l1))

    j_max = checked("propagation", "j_max", lambda x: x >= 2, "must be at least 2")
    dt = checked("propagation", "dt_fs", *positive)
    tol = checked("propagation", "tol", *positive)
    wm = checked("propagation", "window_multiplier", *positive)
    settings = PropagationSettings(dt=units.fs_to_au(dt), tol=tol, window_multiplier=wm)

    j_ini_max = checked("run", "j_ini_max", lambda x: 0 <= x <= j_max,
                        "must lie between 0 and j_max")
    initial = val("run", "initial")
    dist = resolve_initial(initial, params, j_ini_max, line=get("run", "initial")[1])
    run_seed = val("run", "seed") if seed is None else seed
    values["run"]["seed"] = run_seed

    delays = np.zeros(0)
    allow_overlap = False
    want_spectrum = False
    if cfg_mode in ("delay", "sensitivity"):
        start = checked("delay", "start_fs", *nonneg)
        stop = val("delay", "stop_fs")
        step = checked("delay", "step_fs", *positive)
        if stop <= start:
            raise ConfigError("must exceed start_fs", key="stop_fs", line=get("delay", "stop_fs")[1])
        delays = units.fs_to_au(delay_grid(start, stop, step))
        allow_overlap = val("delay", "allow_overlap")
        want_spectrum = val("delay", "spectrum")

    intensities = np.zeros(0)
    durations = np.zeros(0)
    if cfg_mode == "landscape":
        ilist = val("landscape", "i0_list_Wcm2")
        if ilist is None:
            lo = checked("landscape", "i0_min_Wcm2", *nonneg)
            hi = val("landscape", "i0_max_Wcm2")
            n = checked("landscape", "i0_num", lambda x: x >= 1, "must be at least 1")
            intensities = np.linspace(lo, hi, n)
        else:
            intensities = np.asarray(ilist)
        if np.any(intensities < 0):
            raise ConfigError("intensities must be non-negative", key="i0_min_Wcm2")
        if np.any(intensities > MAX_VALIDATED_I0_WCM2):
            k = "i0_list_Wcm2" if ilist is not None else "i0_max_Wcm2"
            raise ConfigError(
                f"intensity above the validated range {MAX_VALIDATED_I0_WCM2:g} W/cm2",
                key=k, line=get("landscape", k)[1])
        tlist = val("landscape", "tau_list_fs")
        if tlist is None:
            lo = checked("landscape", "tau_min_fs", *positive)
            hi = val("landscape", "tau_max_fs")
            n = checked("landscape", "tau_num", lambda x: x >= 1, "must be at least 1")
            durations = np.linspace(lo, hi, n)
        else:
            durations = np.asarray(tlist)
        if np.any(durations <= 0):
            raise ConfigError("durations must be positive", key="tau_list_fs")

    sens = None
    reference = params.dalpha
    min_sep = units.fs_to_au(50.0)
    if cfg_mode == "sensitivity":
        ws, we = val("sensitivity", "window_start_fs"), val("sensitivity", "window_stop_fs")
        window = None
        if ws is not None or we is not None:
            ws = units.au_to_fs(delays[0]) if ws is None else ws
            we = units.au_to_fs(delays[-1]) if we is None else we
            window = (units.fs_to_au(ws), units.fs_to_au(we))
        dalphas = val("sensitivity", "dalpha_list_a03")
        try:
            sens = SensitivityConfig(
                dalpha_values=tuple(dalphas),
                intensity_ratio=val("sensitivity", "intensity_ratio"),
                init_uncertainty=val("sensitivity", "init_uncertainty"),
                meas_uncertainty=val("sensitivity", "meas_uncertainty"),
                n_samples=val("sensitivity", "n_samples"),
                rng_seed=run_seed,
                target_j=val("sensitivity", "target_j"),
                window=window,
                noise=val("sensitivity", "noise"),
                band_k=val("sensitivity", "band_k"),
            )
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
        ref = val("sensitivity", "reference_dalpha_a03")
        reference = dalphas[0] if ref is None else ref
        if not any(abs(reference - d) < 1e-9 for d in dalphas):
            raise ConfigError("reference must be one of dalpha_list_a03",
                              key="reference_dalpha_a03")
        min_sep = units.fs_to_au(checked("sensitivity", "min_separable_fs", *nonneg))

    # keep only sections relevant to the mode in the echo
    relevant = {"run", "molecule", "pulse1", "propagation"}
    relevant |= {"landscape": {"landscape"}, "delay": {"pulse2", "delay"},
                 "sensitivity": {"delay", "sensitivity"}}[cfg_mode]
    values = {s: values[s] for s in SCHEMA if s in values and s in relevant}

    return RunConfig(
        mode=cfg_mode, params=params, pulse1=pulse1, pulse2=pulse2, initial=initial,
        distribution=dist, settings=settings, j_max=j_max, seed=run_seed, delays=delays,
        allow_overlap=allow_overlap, want_spectrum=want_spectrum, intensities=intensities,
        durations=durations, sensitivity=sens, reference_dalpha=reference,
        min_separable=min_sep, values=values,
    )
