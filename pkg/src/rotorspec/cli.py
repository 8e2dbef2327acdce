"""Command-line interface.

Subcommands: symmetry, levels, spectrum, fit, plan.  One sectioned config
file feeds every subcommand; flags override file values.  Outputs are written
atomically (temp then rename) and identical inputs produce byte-identical
files.  Exit status: 0 success, 1 validation error, 2 numerical
non-convergence.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
import warnings

import numpy as np

from . import config as config_mod
from . import fitting, qubitplan, rotor, spectrum, symmetry, units

LEVELS_CSV_HEADER = "energy_cm1,degeneracy,label,spin,ordinal"
STICKS_CSV_HEADER = "frequency_cm1,intensity,lower,upper,activity"
SPECTRUM_CSV_HEADER = "frequency_cm1,amplitude"
PEAKS_CSV_HEADER = ("frequency_cm1", "intensity", "label")

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_NOCONV = 2


def _atomic_write(path: str, text: str):
    tmp = path + ".tmp"
    with open(tmp, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)
    os.replace(tmp, path)


def _emit(text: str, out_path: str | None):
    if out_path:
        _atomic_write(out_path, text)
    else:
        sys.stdout.write(text)


def _json_dumps(payload) -> str:
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _load_config(path: str) -> config_mod.RunConfig:
    with open(path, encoding="utf-8") as fh:
        return config_mod.parse_config(fh.read())


def _fmt(x: float) -> str:
    return f"{x:.6g}"


# ----------------------------------------------------------------------------
# symmetry
# ----------------------------------------------------------------------------

def _table_payload(table: symmetry.GroupTable) -> dict:
    return {
        "name": table.name,
        "order": table.order,
        "classes": [{"label": l, "size": s, "angle_rad": a} for l, s, a in table.classes],
        "irreps": [
            {"label": l, "dimension": d,
             "characters": [[c.real, c.imag] for c in map(complex, ch)]}
            for l, d, ch in table.irreps
        ],
    }


def _format_table_text(table: symmetry.GroupTable) -> str:
    out = [f"group {table.name} (order {table.order})"]
    head = "  ".join(f"{label:>8s}" for label, _, _ in table.classes)
    out.append(f"{'':8s}  {head}")
    for label, dim, chars in table.irreps:
        row = []
        for c in map(complex, chars):
            row.append(f"{c.real:8.3f}" if abs(c.imag) < 1e-12 else f"{c:>8.2f}")
        out.append(f"{label:8s}  " + "  ".join(row))
    return "\n".join(out) + "\n"


def cmd_symmetry(args) -> int:
    groups = ["T", "Td", "D2d", "C3v", "TxT"]
    species = symmetry.spin_decomposition()
    correlations = {
        label: symmetry.correlate(symmetry.irrep_label("Td", label))
        for label, _, _ in symmetry.character_table("Td").irreps
    }
    raman_count = None
    if args.raman_count:
        content = [x.strip() for x in args.raman_count.split(",") if x.strip()]
        raman_count = symmetry.raman_active_count(content, args.raman_group)
    if args.json:
        payload = {
            "tables": [_table_payload(symmetry.character_table(g)) for g in groups],
            "correlation_Td_to_D2d": correlations,
            "spin_species": [
                {"label": s.label, "spin_weight": s.spin_weight, "total_count": s.total_count}
                for s in species
            ],
            "raman_active": {g: sorted(v) for g, v in symmetry.RAMAN_ACTIVE.items()},
            "level_labels": [
                {"name": lab.name, "dimension": lab.dimension, "spin": lab.spin,
                 "constituents": list(lab.constituents)}
                for lab in symmetry.LEVEL_LABELS.values()
            ],
        }
        if raman_count is not None:
            payload["raman_count"] = {"content": args.raman_count,
                                      "group": args.raman_group, "count": raman_count}
        _emit(_json_dumps(payload), args.out)
        return EXIT_OK
    buf = io.StringIO()
    for g in groups:
        buf.write(_format_table_text(symmetry.character_table(g)) + "\n")
    buf.write("descent Td -> D2d (z-axis S4):\n")
    for label, corr in correlations.items():
        target = " + ".join(f"{m}x{lab}" if m > 1 else lab for lab, m in sorted(corr.items()))
        buf.write(f"  {label:4s} -> {target}\n")
    buf.write("\nnuclear spin species (4 protons):\n")
    for s in species:
        buf.write(f"  {s.label}: weight {s.spin_weight}, total {s.total_count} of 16\n")
    buf.write("\nRaman-active irreps:\n")
    for g, active in symmetry.RAMAN_ACTIVE.items():
        buf.write(f"  {g}: {', '.join(sorted(active))}\n")
    if raman_count is not None:
        buf.write(f"\nRaman-allowed bands in [{args.raman_count}] under "
                  f"{args.raman_group}: {raman_count}\n")
    _emit(buf.getvalue(), args.out)
    return EXIT_OK


# ----------------------------------------------------------------------------
# levels
# ----------------------------------------------------------------------------

def _classified_levels(cfg: config_mod.RunConfig, max_energy: float):
    system = rotor.diagonalize(cfg.model)
    return rotor.classify_levels(system, max_energy=max_energy)


def cmd_levels(args) -> int:
    cfg = _load_config(args.config)
    levels = _classified_levels(cfg, args.max_energy)
    rows = [(lev.energy, lev.degeneracy, lev.rovib_label, lev.spin_species or "?",
             lev.ordinal) for lev in levels]
    if args.format == "csv":
        buf = io.StringIO()
        buf.write(LEVELS_CSV_HEADER + "\n")
        for e, d, lab, spin, ordn in rows:
            buf.write(f"{e!r},{d},{lab},{spin},{ordn}\n")
        _emit(buf.getvalue(), args.out)
    elif args.format == "json":
        payload = {
            "model": {"B_cm1": cfg.model.B, "beta": cfg.model.beta,
                      "Jmax": cfg.model.Jmax,
                      "potential": [list(t) for t in cfg.model.potential]},
            "levels": [
                {"energy_cm1": e, "degeneracy": d, "label": lab, "spin": spin,
                 "ordinal": ordn}
                for e, d, lab, spin, ordn in rows
            ],
        }
        _emit(_json_dumps(payload), args.out)
    else:
        buf = io.StringIO()
        buf.write(f"{'energy_cm1':>12s} {'deg':>4s} {'label':>6s} {'spin':>4s} {'n':>3s}\n")
        for e, d, lab, spin, ordn in rows:
            buf.write(f"{_fmt(e):>12s} {d:4d} {lab:>6s} {spin:>4s} {ordn:3d}\n")
        _emit(buf.getvalue(), args.out)
    return EXIT_OK


# ----------------------------------------------------------------------------
# spectrum
# ----------------------------------------------------------------------------

def _all_lines(cfg: config_mod.RunConfig, levels):
    ir = spectrum.vibration_orientation_lines(levels, cfg.band, cfg.population)
    raman = spectrum.rotational_raman_lines(levels, cfg.population)
    lines = list(ir) + list(raman)
    if cfg.lattice_freq is not None:
        lines += spectrum.sum_band_lines(ir, cfg.lattice_freq, cfg.sum_band_scale)
    lines.sort(key=lambda l: (l.frequency, l.lower, l.upper))
    return lines


def _sticks_csv(lines) -> str:
    buf = io.StringIO()
    buf.write(STICKS_CSV_HEADER + "\n")
    for l in lines:
        buf.write(f"{l.frequency!r},{l.intensity!r},{l.lower},{l.upper},{l.activity}\n")
    return buf.getvalue()


def _spectrum_csv(freqs, amps) -> str:
    buf = io.StringIO()
    buf.write(SPECTRUM_CSV_HEADER + "\n")
    for f, a in zip(freqs, amps):
        buf.write(f"{float(f)!r},{float(a)!r}\n")
    return buf.getvalue()


def _spectrum_svg(freqs, amps, lines, synth: spectrum.SpectrumConfig) -> str:
    width, height, pad = 900, 360, 45
    fmax = max(amps.max(), max((l.intensity for l in lines), default=0.0), 1e-300)
    x0, x1 = synth.start, synth.stop

    def xpix(f):
        return pad + (f - x0) / (x1 - x0) * (width - 2 * pad)

    def ypix(a):
        return height - pad - (a / fmax) * (height - 2 * pad)

    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<line x1="{pad}" y1="{height-pad}" x2="{width-pad}" y2="{height-pad}" '
        'stroke="black"/>',
        f'<line x1="{pad}" y1="{pad}" x2="{pad}" y2="{height-pad}" stroke="black"/>',
        f'<text x="{width//2}" y="{height-8}" text-anchor="middle" font-size="12">'
        "frequency / cm-1</text>",
    ]
    for l in lines:
        if x0 <= l.frequency <= x1:
            parts.append(
                f'<line x1="{xpix(l.frequency):.2f}" y1="{ypix(0):.2f}" '
                f'x2="{xpix(l.frequency):.2f}" y2="{ypix(l.intensity):.2f}" '
                'stroke="steelblue" stroke-width="1.5"/>'
            )
    pts = " ".join(f"{xpix(f):.2f},{ypix(a):.2f}" for f, a in zip(freqs, amps))
    parts.append(f'<polyline points="{pts}" fill="none" stroke="crimson" stroke-width="1"/>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def cmd_spectrum(args) -> int:
    cfg = _load_config(args.config)
    levels = _classified_levels(cfg, args.max_energy)
    lines = _all_lines(cfg, levels)
    clip_notes: list[str] = []
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        freqs, amps = spectrum.synthesize(lines, cfg.synthesis)
        clip_notes = [str(w.message) for w in caught]
    _atomic_write(args.sticks, _sticks_csv(lines))
    _atomic_write(args.out_spectrum, _spectrum_csv(freqs, amps))
    if args.svg:
        _atomic_write(args.svg, _spectrum_svg(freqs, amps, lines, cfg.synthesis))
    sys.stdout.write(
        f"lines: {len(lines)} (sticks -> {args.sticks})\n"
        f"grid: {cfg.synthesis.start} .. {cfg.synthesis.stop} cm-1, "
        f"step {cfg.synthesis.step} (samples -> {args.out_spectrum})\n"
        f"fwhm: {_fmt(cfg.synthesis.fwhm)} cm-1 = {cfg.synthesis.fwhm_ghz:.2f} GHz "
        f"({cfg.synthesis.shape})\n"
    )
    for note in clip_notes:
        sys.stderr.write(f"warning: {note}\n")
    return EXIT_OK


# ----------------------------------------------------------------------------
# fit
# ----------------------------------------------------------------------------

def _read_peaks_csv(path: str) -> fitting.PeakList:
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise fitting.FitError(f"{path}: empty peak list") from None
        if tuple(h.strip() for h in header) != PEAKS_CSV_HEADER:
            raise fitting.FitError(
                f"{path}: header must be {','.join(PEAKS_CSV_HEADER)}, "
                f"got {','.join(header)}"
            )
        peaks = []
        for row in reader:
            if not row or not any(cell.strip() for cell in row):
                continue
            freq = float(row[0])
            intensity = float(row[1]) if len(row) > 1 and row[1].strip() else None
            label = row[2].strip() if len(row) > 2 and row[2].strip() else None
            peaks.append(fitting.Peak(freq, intensity, label))
    return fitting.PeakList(tuple(peaks))


def _read_envelope_csv(path: str):
    freqs, amps = [], []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(h.strip() for h in header) != tuple(SPECTRUM_CSV_HEADER.split(",")):
            raise fitting.FitError(
                f"{path}: header must be {SPECTRUM_CSV_HEADER}, got {','.join(header)}")
        for row in reader:
            if not row:
                continue
            freqs.append(float(row[0]))
            amps.append(float(row[1]))
    return np.array(freqs), np.array(amps)


def _fit_report_payload(report: fitting.FitReport) -> dict:
    return {
        "values": report.values,
        "free_parameters": list(report.free),
        "residuals": [
            {"transition": n, "observed_cm1": o, "modeled_cm1": m, "residual_cm1": r}
            for n, o, m, r in report.residuals
        ],
        "objective": report.objective,
        "iterations": report.iterations,
        "converged": report.converged,
        "message": report.message,
        "nearest_assigned": list(report.nearest_assigned),
        "best_start": report.best_start,
    }


def cmd_fit(args) -> int:
    cfg = _load_config(args.config)
    free = tuple(x.strip() for x in args.free.split(",") if x.strip())
    initial = {
        "B": cfg.model.B,
        "beta": cfg.model.beta,
        "nu0": cfg.band.nu0,
        "excited_scale": cfg.band.excited_scale,
        "fwhm": cfg.synthesis.fwhm,
    }
    for key in ("dw_L1_star", "dw_LE3_star"):
        if cfg.band.extra_offsets.get(key) is not None:
            initial[key] = cfg.band.extra_offsets[key]
    bounds = {}
    for name, lo, hi in args.bound or ():
        bounds[name] = (float(lo), float(hi))
    spec = fitting.FitSpec(free_params=free, bounds=bounds, initial=initial,
                           max_iterations=args.max_iter, tolerance=args.tol,
                           n_starts=args.starts)
    if args.mode == "positions":
        peaks = _read_peaks_csv(args.peaks)
        model = fitting.TransitionModel(potential=cfg.model.potential,
                                        jmax=cfg.model.Jmax)
        report = fitting.fit_line_positions(peaks, spec, model, seed=args.seed)
    else:
        freqs, amps = _read_envelope_csv(args.envelope)
        model = fitting.EnvelopeModel(potential=cfg.model.potential,
                                      jmax=min(cfg.model.Jmax, 8),
                                      pop=cfg.population, shape=cfg.synthesis.shape)
        report = fitting.fit_envelope(freqs, amps, spec, model, seed=args.seed)
    if args.out:
        _atomic_write(args.out, _json_dumps(_fit_report_payload(report)))
    buf = io.StringIO()
    buf.write(f"converged: {report.converged} (objective {report.objective:.6e}, "
              f"{report.iterations} iterations, best start {report.best_start})\n")
    for name in sorted(report.values):
        buf.write(f"  {name:14s} = {_fmt(report.values[name])}\n")
    if report.residuals:
        buf.write("residuals (cm-1):\n")
        for n, o, m, r in report.residuals:
            buf.write(f"  {n:18s} obs {_fmt(o):>9s}  model {_fmt(m):>9s}  "
                      f"resid {r:+.3g}\n")
    if report.nearest_assigned:
        buf.write("nearest-frequency assignments (no label given): "
                  + ", ".join(report.nearest_assigned) + "\n")
    if report.message and not report.converged:
        buf.write(f"note: {report.message}\n")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK if report.converged else EXIT_NOCONV


# ----------------------------------------------------------------------------
# plan
# ----------------------------------------------------------------------------

def _read_lines_csv(path: str):
    out = []
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if tuple(h.strip() for h in header) != tuple(STICKS_CSV_HEADER.split(",")):
            raise qubitplan.PlanError(
                f"{path}: header must be {STICKS_CSV_HEADER}, got {','.join(header)}")
        for row in reader:
            if not row:
                continue
            out.append(spectrum.Line(frequency=float(row[0]), intensity=float(row[1]),
                                     lower=row[2], upper=row[3], activity=row[4]))
    return out


def _plan_payload(report: qubitplan.PlanReport, mc: dict | None) -> dict:
    payload = {
        "delta_omega_pairs": [
            {"upper_line": a, "lower_line": b, "delta_cm1": d, "delta_ghz": g}
            for a, b, d, g in report.delta_omega_pairs
        ],
        "channels": report.channels,
        "r12_nm": {
            "characteristic": report.r12_characteristic_nm,
            "poisson_mean": report.r12_poisson_mean_nm,
        },
        "couplings_hz": [
            {"at": label, "r_nm": r, "coupling_hz": hz}
            for label, r, hz in report.couplings
        ],
    }
    if mc:
        payload["monte_carlo"] = mc
    return payload


def cmd_plan(args) -> int:
    cfg = _load_config(args.config)
    lines = _read_lines_csv(args.lines)
    if args.activity != "all":
        lines = [l for l in lines if l.activity == args.activity]
    report = qubitplan.build_plan_report(
        lines, cfg.crystal, band_fwhm_cm1=cfg.synthesis.fwhm,
        source_linewidth_ghz=cfg.source_linewidth_ghz,
        mu_debye=cfg.mu_debye, max_pairs=args.max_pairs)
    mc = None
    if args.mc_samples:
        mc_mean = qubitplan.nn_distance_mc(cfg.crystal, args.mc_samples, seed=args.seed)
        mc = {
            "samples": args.mc_samples,
            "seed": args.seed,
            "mean_nm": mc_mean,
            "relative_deviation": abs(mc_mean - report.r12_poisson_mean_nm)
            / report.r12_poisson_mean_nm,
        }
    if args.out:
        _atomic_write(args.out, _json_dumps(_plan_payload(report, mc)))
    buf = io.StringIO()
    buf.write(f"addressable channels per band: {report.channels} "
              f"(fwhm {_fmt(cfg.synthesis.fwhm)} cm-1 = "
              f"{units.cm1_to_ghz(cfg.synthesis.fwhm):.2f} GHz, "
              f"source {_fmt(cfg.source_linewidth_ghz)} GHz)\n")
    buf.write(f"r12 characteristic: {_fmt(report.r12_characteristic_nm)} nm, "
              f"poisson mean: {_fmt(report.r12_poisson_mean_nm)} nm "
              f"(a = {_fmt(cfg.crystal.a_nm)} nm, c = {_fmt(cfg.crystal.c)})\n")
    if mc:
        buf.write(f"monte carlo mean: {_fmt(mc['mean_nm'])} nm "
                  f"({mc['samples']} samples, dev {100*mc['relative_deviation']:.2f}%)\n")
    for label, r, hz in report.couplings:
        buf.write(f"coupling at {label} r = {_fmt(r)} nm: {_fmt(hz/1e9)} GHz "
                  f"(mu = {_fmt(cfg.mu_debye)} D)\n")
    buf.write("largest line separations:\n")
    for a, b, d, g in report.delta_omega_pairs[:10]:
        buf.write(f"  {_fmt(d):>8s} cm-1 = {g:10.2f} GHz   {a}  vs  {b}\n")
    sys.stdout.write(buf.getvalue())
    return EXIT_OK


# ----------------------------------------------------------------------------
# entry point
# ----------------------------------------------------------------------------

def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rotorspec",
        description="Hindered-rotor levels, tunneling spectra and qubit planning "
                    "for tetrahedral rotors in crystal fields.",
    )
    sub = parser.add_subparsers(dest="command")

    p_sym = sub.add_parser("symmetry", help="character tables, correlations, spin weights")
    p_sym.add_argument("--json", action="store_true")
    p_sym.add_argument("--out")
    p_sym.add_argument("--raman-count", help="comma-separated irrep labels to count")
    p_sym.add_argument("--raman-group", default="Td", choices=("Td", "D2d"))
    p_sym.set_defaults(func=cmd_symmetry)

    p_lev = sub.add_parser("levels", help="labeled orientation level table")
    p_lev.add_argument("--config", required=True)
    p_lev.add_argument("--format", default="text", choices=("text", "csv", "json"))
    p_lev.add_argument("--out")
    p_lev.add_argument("--max-energy", type=float, default=150.0,
                       help="classify levels up to this energy in cm-1")
    p_lev.set_defaults(func=cmd_levels)

    p_spec = sub.add_parser("spectrum", help="stick list and synthesized envelope")
    p_spec.add_argument("--config", required=True)
    p_spec.add_argument("--sticks", default="sticks.csv")
    p_spec.add_argument("--out-spectrum", default="spectrum.csv")
    p_spec.add_argument("--svg")
    p_spec.add_argument("--max-energy", type=float, default=150.0)
    p_spec.set_defaults(func=cmd_spectrum)

    p_fit = sub.add_parser("fit", help="calibrate parameters against peaks or envelope")
    p_fit.add_argument("--config", required=True)
    p_fit.add_argument("--peaks", help="peak CSV (frequency_cm1,intensity,label)")
    p_fit.add_argument("--envelope", help="sampled spectrum CSV for mode=envelope")
    p_fit.add_argument("--mode", default="positions", choices=("positions", "envelope"))
    p_fit.add_argument("--free", default="B,beta,nu0,extra_offsets")
    p_fit.add_argument("--starts", type=int, default=8)
    p_fit.add_argument("--max-iter", type=int, default=2000)
    p_fit.add_argument("--tol", type=float, default=1e-10)
    p_fit.add_argument("--seed", type=int, default=0)
    p_fit.add_argument("--bound", nargs=3, action="append",
                       metavar=("NAME", "LO", "HI"))
    p_fit.add_argument("--out", help="write the fit report JSON here")
    p_fit.set_defaults(func=cmd_fit)

    p_plan = sub.add_parser("plan", help="qubit-addressability report")
    p_plan.add_argument("--config", required=True)
    p_plan.add_argument("--lines", required=True, help="stick-list CSV")
    p_plan.add_argument("--out", help="write the plan JSON here")
    p_plan.add_argument("--activity", default="all", choices=("all", "IR", "Raman"))
    p_plan.add_argument("--max-pairs", type=int, default=None)
    p_plan.add_argument("--mc-samples", type=int, default=0,
                        help="validate the poisson mean with this many samples")
    p_plan.add_argument("--seed", type=int, default=0)
    p_plan.set_defaults(func=cmd_plan)
    return parser


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        # argparse exits 2 on usage errors (including unknown subcommands);
        # the contract here is exit 1 for every validation failure
        return EXIT_OK if exc.code == 0 else EXIT_INVALID
    if not getattr(args, "command", None):
        parser.print_usage(sys.stderr)
        return EXIT_INVALID
    if args.command == "fit":
        if args.mode == "positions" and not args.peaks:
            sys.stderr.write("fit --mode positions requires --peaks\n")
            return EXIT_INVALID
        if args.mode == "envelope" and not args.envelope:
            sys.stderr.write("fit --mode envelope requires --envelope\n")
            return EXIT_INVALID
    try:
        return args.func(args)
    except (config_mod.ConfigError, fitting.FitError, qubitplan.PlanError,
            spectrum.SpectrumError, symmetry.GroupError, rotor.PotentialError,
            FileNotFoundError, ValueError) as exc:
        sys.stderr.write(f"error: {exc}\n")
        return EXIT_INVALID
    except rotor.RotorError as exc:
        sys.stderr.write(f"numerical failure: {exc}\n")
        return EXIT_NOCONV


if __name__ == "__main__":
    raise SystemExit(main())
