"""Command-line front end.

    rotramsey landscape     --preset fig3 --out results/
    rotramsey interferogram --config run.ini --out results/
    rotramsey spectrum      --input results/interferogram.csv --out results/
    rotramsey sensitivity   --preset fig8 --seed 7 --threads 4
    rotramsey thermal-dist  --temperature 20

Every CSV starts with a '#' block echoing the resolved configuration.
Errors go to stderr as ``rotramsey: error[<category>]: <message>`` with a
nonzero exit status (2 config/validation, 3 propagation, 4 i/o).
"""
from __future__ import annotations

import argparse
import csv
import io
import sys
import warnings
from pathlib import Path

from . import __version__, units
from .config import ConfigError, RunConfig, parse_config
from .dynamics import ConvergenceError
from .ensemble import DistributionError, pulse_landscape, thermal
from .interferometry import Interferogram, scan_interferogram, spectrum, visibility
from .rotor import MolecularParams
from .sensitivity import monte_carlo_bands, separability, separability_csv

EXIT_CONFIG = 2
EXIT_PROPAGATION = 3
EXIT_IO = 4

LANDSCAPE_LEVELS = (0, 2, 4, 6)


def _header(command: str, cfg: RunConfig | None = None) -> str:
    head = f"# rotramsey {__version__} {command}\n"
    return head + (cfg.echo() if cfg is not None else "")


def _write(out_dir: Path, name: str, header: str, body: str) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(header)
        fh.write(body)
    return path


def run_pulse_landscape(cfg: RunConfig, workers: int = 1) -> str:
    """Single-pulse final populations on the configured intensity x duration grid."""
    pops = pulse_landscape(cfg.distribution, cfg.params, units.wcm2_to_au(cfg.intensities),
                           units.fs_to_au(cfg.durations), j_max=cfg.j_max,
                           settings=cfg.settings, workers=workers)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["I0_Wcm2", "tauI_fs"] + [f"p_j{j}" for j in LANDSCAPE_LEVELS])
    for i, i0 in enumerate(cfg.intensities):
        for k, tau in enumerate(cfg.durations):
            w.writerow([f"{i0:.15g}", f"{tau:.15g}"]
                       + [f"{pops[i, k, j]:.15g}" for j in LANDSCAPE_LEVELS])
    return buf.getvalue()


def visibility_csv(ig: Interferogram) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "visibility"])
    for j in range(ig.j_max + 1):
        w.writerow([j, f"{visibility(ig, j):.15g}"])
    return buf.getvalue()


def run_interferogram(cfg: RunConfig, workers: int = 1) -> dict:
    """Returns {'interferogram': csv, 'visibility': csv[, 'spectrum': csv]}."""
    ig = scan_interferogram(cfg.distribution, cfg.params, cfg.pulse1, cfg.pulse2, cfg.delays,
                            j_max=cfg.j_max, settings=cfg.settings,
                            allow_overlap=cfg.allow_overlap, workers=workers)
    out = {"interferogram": ig.to_csv(), "visibility": visibility_csv(ig)}
    if cfg.want_spectrum:
        out["spectrum"] = spectrum(ig).to_csv(cfg.params.b)
    return out


def run_sensitivity(cfg: RunConfig, workers: int = 1) -> dict:
    """Returns {'bands': csv, 'separability': csv}."""
    report = monte_carlo_bands(cfg.sensitivity, cfg.params, cfg.pulse1, cfg.distribution,
                               cfg.delays, j_max=cfg.j_max, settings=cfg.settings,
                               workers=workers)
    rows = []
    for da in cfg.sensitivity.dalpha_values:
        if abs(da - cfg.reference_dalpha) < 1e-9:
            continue
        _, intervals = separability(report, cfg.reference_dalpha, da,
                                    min_length=cfg.min_separable)
        rows.append((cfg.reference_dalpha, da, intervals))
    return {"bands": report.to_csv(), "separability": separability_csv(rows)}


def _load_config(args, mode):
    text = ""
    if args.config:
        path = Path(args.config)
        if not path.is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        text = path.read_text(encoding="utf-8")
    return parse_config(text, preset=args.preset, mode=mode, seed=args.seed)


def _cmd_landscape(args):
    cfg = _load_config(args, "landscape")
    body = run_pulse_landscape(cfg, args.threads)
    return [_write(args.out, "landscape.csv", _header("landscape", cfg), body)]


def _cmd_interferogram(args):
    cfg = _load_config(args, "delay")
    parts = run_interferogram(cfg, args.threads)
    head = _header("interferogram", cfg)
    return [_write(args.out, f"{name}.csv", head, body) for name, body in parts.items()]


def _cmd_spectrum(args):
    if args.input:
        src = Path(args.input)
        if not src.is_file():
            raise FileNotFoundError(f"interferogram file not found: {src}")
        ig = Interferogram.from_csv(src.read_text(encoding="utf-8"))
        b = units.cm1_to_hartree(args.b_cm)
        head = _header("spectrum") + f"# input = {src}\n# b_cm = {args.b_cm:.15g}\n"
        return [_write(args.out, "spectrum.csv", head, spectrum(ig).to_csv(b))]
    cfg = _load_config(args, "delay")
    cfg.want_spectrum = True
    parts = run_interferogram(cfg, args.threads)
    head = _header("spectrum", cfg)
    return [_write(args.out, f"{name}.csv", head, parts[name])
            for name in ("spectrum", "interferogram")]


def _cmd_sensitivity(args):
    cfg = _load_config(args, "sensitivity")
    parts = run_sensitivity(cfg, args.threads)
    head = _header("sensitivity", cfg)
    return [
        _write(args.out, "sensitivity_bands.csv", head, parts["bands"]),
        _write(args.out, "separability.csv", head, parts["separability"]),
    ]


def _cmd_thermal(args):
    if args.temperature is None:
        raise ConfigError("--temperature is required", key="temperature")
    params = MolecularParams.from_lab(args.b_cm, 16.20)
    try:
        dist = thermal(args.temperature, params, args.j_cut)
    except DistributionError as exc:
        raise ConfigError(str(exc), key="temperature") from exc
    buf = io.StringIO()
    buf.write(_header("thermal-dist"))
    buf.write(f"# temperature_K = {args.temperature:.15g}\n# b_cm = {args.b_cm:.15g}\n"
              f"# j_cut = {args.j_cut}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "weight"])
    for j, a in enumerate(dist.padded(args.j_cut + 1)):
        w.writerow([j, f"{a:.15g}"])
    sys.stdout.write(buf.getvalue())
    return []


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="rotramsey",
                                 description="Rotational wavepacket Ramsey interferometry")
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="configuration file")
        p.add_argument("--preset", help="built-in parameter set (fig2, fig3, fig4, fig6, fig8)")
        p.add_argument("--out", type=Path, default=Path("."), help="output directory")
        p.add_argument("--seed", type=int, default=None, help="random seed override")
        p.add_argument("--threads", type=int, default=1, help="worker threads")
        return p

    common(sub.add_parser("landscape", help="single-pulse intensity/duration landscape"))
    common(sub.add_parser("interferogram", help="two-pulse delay scan"))
    sp = common(sub.add_parser("spectrum", help="population spectra of a delay scan"))
    sp.add_argument("--input", help="existing interferogram CSV instead of a new scan")
    sp.add_argument("--b-cm", type=float, default=6.3685,
                    help="rotational constant for the energy axis with --input")
    common(sub.add_parser("sensitivity", help="dalpha scan with Monte-Carlo error bands"))
    tp = common(sub.add_parser("thermal-dist", help="print a thermal level distribution"))
    tp.add_argument("--temperature", type=float, help="rotational temperature in K")
    tp.add_argument("--b-cm", type=float, default=6.3685)
    tp.add_argument("--j-cut", type=int, default=6)
    return ap


_COMMANDS = {
    "landscape": _cmd_landscape,
    "interferogram": _cmd_interferogram,
    "spectrum": _cmd_spectrum,
    "sensitivity": _cmd_sensitivity,
    "thermal-dist": _cmd_thermal,
}


def _fail(category, code, exc):
    sys.stderr.write(f"rotramsey: error[{category}]: {exc}\n")
    return code


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.threads < 1:
        return _fail("config", EXIT_CONFIG, "--threads must be at least 1")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("default")
            written = _COMMANDS[args.command](args)
    except ConfigError as exc:
        return _fail("config", EXIT_CONFIG, exc)
    except (DistributionError, ValueError) as exc:
        return _fail("validation", EXIT_CONFIG, exc)
    except ConvergenceError as exc:
        return _fail("propagation", EXIT_PROPAGATION, exc)
    except OSError as exc:
        return _fail("io", EXIT_IO, exc)
    for path in written:
        print(path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
