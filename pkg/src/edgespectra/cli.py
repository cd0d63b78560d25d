"""Command-line driver.

Every subcommand resolves a RunConfig (model, grids, window, output
directory), writes its data files into the output directory and finishes
with a `<command>-manifest.json` recording the inputs, library versions,
wall times and the list of files it wrote; each output file belongs to
exactly one manifest.  Data files are CSV (UTF-8, headered, fixed number
formatting) so reruns with the same configuration are byte-identical;
timings live only in the manifest.  Failures exit nonzero after printing a
one-line JSON error object to stderr.
"""

import argparse
import csv
import json
import os
import platform
import sys
import time

import numpy as np

from . import __version__
from .model import BlochModel, build_constant, build_harper, validate_gaps
from .bands import bulk_ranges, chern_numbers, decompose
from .monodromy import asymptotic_spectrum, exact_spectrum
from .discrete import build_truncation, edge_dispersion, spurious_filter, \
    window_spectrum
from .tracking import TruncationFamily, seed_pairs, transport
from .flow import edge_flows, flow_window, hall_conductance, side_of, \
    spectral_flow
from .current import central_charge

TWO_PI = 2.0 * np.pi


# ---------------------------------------------------------------- helpers

def _jsonable(x):
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating,)):
        return float(x)
    if isinstance(x, np.ndarray):
        return x.tolist()
    raise TypeError("cannot serialize %r" % type(x))


def _fmt(x):
    if isinstance(x, (float, np.floating)):
        return "%.12g" % x
    if isinstance(x, (int, np.integer)):
        return "%d" % x
    return x


def _write_csv(path, header, rows):
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        w.writerow(header)
        for row in rows:
            w.writerow([_fmt(x) for x in row])


def _versions():
    import scipy
    return {"artifact": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
            "scipy": scipy.__version__}


def _pair(text):
    lo, hi = (float(s) for s in text.split(","))
    if hi <= lo:
        raise ValueError("window %r must be lo,hi with lo < hi" % text)
    return lo, hi


class RunConfig:
    """Resolved run parameters shared by the subcommands."""

    def __init__(self, args):
        if args.model_file:
            self.model = BlochModel.from_json(args.model_file)
            self.model_desc = {"model_file": args.model_file}
        elif args.constant is not None:
            diag = [float(s) for s in args.constant.split(",")]
            self.model = build_constant(diag)
            self.model_desc = {"constant": diag}
        else:
            p, q = (int(s) for s in args.harper.split(","))
            self.model = build_harper(p, q, args.ef)
            self.model_desc = {"harper": [p, q], "ef": args.ef}
        self.L = args.L
        self.Nx = args.Nx
        self.Ny = args.Ny
        self.window = _pair(args.window) if args.window else None
        self.kys = [float(s) for s in args.ky.split(",")]
        self.step = args.step if args.step else TWO_PI / 200.0
        self.outdir = args.outdir
        os.makedirs(self.outdir, exist_ok=True)

    def path(self, name):
        return os.path.join(self.outdir, name)

    def window_or(self, default):
        return self.window if self.window else default


def _finish(cfg, args, command, outputs, timings, line):
    manifest = {
        "command": command,
        "inputs": {k: v for k, v in sorted(vars(args).items())
                   if k != "func"},
        "model": cfg.model_desc,
        "versions": _versions(),
        "timings": {k: round(v, 3) for k, v in timings.items()},
        "outputs": sorted(os.path.basename(p) for p in outputs),
    }
    path = cfg.path(command + "-manifest.json")
    with open(path, "w", encoding="utf-8") as f:
        json.dump(manifest, f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    if line:
        print(line)
    return 0


def _int_list(chern):
    return "[" + ", ".join("%d" % c for c in chern) + "]"


# ------------------------------------------------------------- subcommands

def cmd_bands(args):
    cfg = RunConfig(args)
    t0 = time.time()
    rows = []
    for ky in np.linspace(0.0, TWO_PI, cfg.Ny, endpoint=False):
        bd = decompose(cfg.model, ky, cfg.Nx)
        lo = bd.energies.min(axis=0)
        hi = bd.energies.max(axis=0)
        for j in range(cfg.model.n):
            rows.append((ky, j, lo[j], hi[j], bd.berry_phase[j]))
    out = cfg.path("bands.csv")
    _write_csv(out, ["ky", "band", "e_min", "e_max", "theta"], rows)
    return _finish(cfg, args, "bands", [out], {"total_s": time.time() - t0},
                   "bands: %d bands on %d ky points -> %s"
                   % (cfg.model.n, cfg.Ny, out))


def cmd_chern(args):
    cfg = RunConfig(args)
    t0 = time.time()
    rec = chern_numbers(cfg.model, Nx=cfg.Nx)
    try:
        kappa = hall_conductance(cfg.model)
        kappa_txt = "%d" % kappa
    except ValueError:
        kappa = None
        kappa_txt = "undefined (0 not inside a gap)"
    out = cfg.path("chern.json")
    with open(out, "w", encoding="utf-8") as f:
        json.dump({"chern": rec.chern, "windings_raw": rec.windings_raw,
                   "max_rounding_error": rec.max_rounding_error,
                   "reliable": rec.reliable, "kappa": kappa},
                  f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    return _finish(cfg, args, "chern", [out], {"total_s": time.time() - t0},
                   "chern = %s, kappa = %s" % (_int_list(rec.chern),
                                               kappa_txt))


def cmd_gapcheck(args):
    cfg = RunConfig(args)
    t0 = time.time()
    rep = validate_gaps(cfg.model, Nx=max(cfg.Nx, 64), Ny=max(cfg.Ny, 64))
    out = cfg.path("gapcheck.json")
    with open(out, "w", encoding="utf-8") as f:
        json.dump({"assumption_satisfied": rep.assumption_satisfied,
                   "gap_index": rep.gap_index_k,
                   "min_abs_energy": rep.min_abs_energy,
                   "band_gaps": rep.band_gaps,
                   "grid": list(rep.grid_resolution)},
                  f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    return _finish(cfg, args, "gapcheck", [out],
                   {"total_s": time.time() - t0},
                   "assumption_satisfied = %s"
                   % ("true" if rep.assumption_satisfied else "false"))


def cmd_spectrum_exact(args):
    cfg = RunConfig(args)
    window = cfg.window_or((20.0, 30.0))
    t0 = time.time()
    rows = []
    for ky in cfg.kys:
        for p in exact_spectrum(cfg.model, ky, window):
            rows.append((ky, p.E,
                         "" if p.m is None else p.m,
                         "" if p.j is None else p.j, p.defect))
    out = cfg.path("spectrum_exact.csv")
    _write_csv(out, ["ky", "E", "m", "j", "defect"], rows)
    return _finish(cfg, args, "spectrum-exact", [out],
                   {"total_s": time.time() - t0},
                   "%d exact roots in (%g, %g) over %d ky -> %s"
                   % (len(rows), window[0], window[1], len(cfg.kys), out))


def cmd_spectrum_approx(args):
    cfg = RunConfig(args)
    window = cfg.window_or((20.0, 30.0))
    t0 = time.time()
    rows = []
    for ky in cfg.kys:
        for p in asymptotic_spectrum(cfg.model, ky, window).points:
            rows.append((ky, p.E, p.m, p.j))
    out = cfg.path("spectrum_approx.csv")
    _write_csv(out, ["ky", "E", "m", "j"], rows)
    return _finish(cfg, args, "spectrum-approx", [out],
                   {"total_s": time.time() - t0},
                   "%d ladder points in (%g, %g) over %d ky -> %s"
                   % (len(rows), window[0], window[1], len(cfg.kys), out))


def cmd_spectrum_discrete(args):
    cfg = RunConfig(args)
    window = cfg.window_or((20.0, 30.0))
    t0 = time.time()
    rows = []
    for ky in cfg.kys:
        op = build_truncation(cfg.model, args.kind, cfg.L, ky)
        w, v = window_spectrum(op, window, vectors=True)
        for i in range(len(w)):
            rows.append((ky, w[i], int(spurious_filter(op, v[:, i]))))
    out = cfg.path("spectrum_discrete.csv")
    _write_csv(out, ["ky", "E", "spurious"], rows)
    return _finish(cfg, args, "spectrum-discrete", [out],
                   {"total_s": time.time() - t0},
                   "%d eigenvalues (%s, L=%d) in (%g, %g) -> %s"
                   % (len(rows), args.kind, cfg.L, window[0], window[1],
                      out))


def cmd_edge_dispersion(args):
    cfg = RunConfig(args)
    t0 = time.time()
    disp = edge_dispersion(cfg.model, L=cfg.L, Ny=cfg.Ny)
    mode_rows = []
    for bid in sorted(disp.branches):
        kk, Es = disp.branches[bid]
        mode_rows.extend((bid, k, E) for k, E in zip(kk, Es))
    modes_csv = cfg.path("edge_modes.csv")
    _write_csv(modes_csv, ["branch_id", "ky", "E"], mode_rows)
    band_rows = []
    for ky in np.linspace(0.0, TWO_PI, cfg.Ny, endpoint=False):
        lo, hi = bulk_ranges(cfg.model, ky, Nk=256)
        for j in range(cfg.model.n):
            band_rows.append((ky, j, lo[j], hi[j]))
    bands_csv = cfg.path("bulk_bands.csv")
    _write_csv(bands_csv, ["ky", "band", "e_min", "e_max"], band_rows)
    rec_json = cfg.path("edge_records.json")
    sums = {g: disp.chirality_sum(g) for g in range(cfg.model.n - 1)
            if disp.gaps[g] is not None}
    with open(rec_json, "w", encoding="utf-8") as f:
        json.dump({"gaps": [list(g) if g else None for g in disp.gaps],
                   "records": [{"branch_id": r.branch_id,
                                "gap": r.gap_index,
                                "k_minus": r.k_minus, "k_plus": r.k_plus,
                                "chirality": r.chirality}
                               for r in disp.records],
                   "chirality_sums": {str(g): s for g, s in sums.items()},
                   "warnings": disp.warnings},
                  f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    outs = [modes_csv, bands_csv, rec_json]
    return _finish(cfg, args, "edge-dispersion", outs,
                   {"total_s": time.time() - t0},
                   "%d branches, chirality sums %s"
                   % (len(disp.branches),
                      {g: int(s) for g, s in sums.items()}))


def cmd_track(args):
    cfg = RunConfig(args)
    window = cfg.window_or(flow_window(cfg.model)[:2])
    t0 = time.time()
    fam = TruncationFamily(cfg.model, args.kind, cfg.L)
    seeds = seed_pairs(fam(0.0), window)
    rows = []
    summary = []
    for i, seed in enumerate(seeds):
        br = transport(fam, seed, cfg.step)
        rows.extend((i, k, E, r) for k, E, r in
                    zip(br.k_samples, br.E_values, br.residuals))
        summary.append({"branch": i, "E_start": br.E_values[0],
                        "E_end": br.E_values[-1], "closed": br.closed,
                        "aborted": br.aborted,
                        "abort_reason": br.abort_reason})
    out = cfg.path("tracked.csv")
    _write_csv(out, ["branch_id", "ky", "E", "residual"], rows)
    out_json = cfg.path("tracked.json")
    with open(out_json, "w", encoding="utf-8") as f:
        json.dump({"window": list(window), "kind": args.kind, "L": cfg.L,
                   "step": cfg.step, "branches": summary},
                  f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    n_closed = sum(1 for s in summary if s["closed"])
    return _finish(cfg, args, "track", [out, out_json],
                   {"total_s": time.time() - t0},
                   "tracked %d branches (%d closed) -> %s"
                   % (len(summary), n_closed, out))


def _crossing_rows(report):
    return [{"ky": kc, "direction": d, "branch": b}
            for kc, d, b in report.crossings]


def cmd_flow(args):
    cfg = RunConfig(args)
    t0 = time.time()
    if args.side == "plus":
        window = cfg.window_or(flow_window(cfg.model)[:2])
        fiducial = args.fiducial if args.fiducial is not None \
            else 0.5 * (window[0] + window[1])
        fam = TruncationFamily(cfg.model, "modulated_edge", cfg.L)
        branches = []
        aborted = 0
        for seed in seed_pairs(fam(0.0), window):
            br = transport(fam, seed, cfg.step, keep_vectors=False)
            br.side = "edge_plus"
            aborted += br.aborted
            branches.append(br)
        rep = spectral_flow(branches, fiducial, model=cfg.model)
        payload = {"side": "edge_plus", "fiducial": fiducial,
                   "window": list(window), "flow": rep.flow,
                   "kappa": rep.kappa, "agrees": rep.agrees,
                   "crossings": _crossing_rows(rep),
                   "n_branches": len(branches), "aborted": aborted,
                   "warnings": rep.warnings}
        line = "flow = %d, kappa = %d, agrees = %s" % (
            rep.flow, rep.kappa, "true" if rep.agrees else "false")
    else:
        res = edge_flows(cfg.model, L=cfg.L, step=cfg.step,
                         window=cfg.window, fiducial_E=args.fiducial)
        payload = {"fiducial": res["fiducial_E"],
                   "window": list(res["window"]),
                   "kappa": res["kappa"], "aborted": res["aborted"]}
        for side in ("edge_plus", "edge_minus"):
            rep = res[side]
            payload[side] = {"flow": rep.flow, "agrees": rep.agrees,
                             "crossings": _crossing_rows(rep),
                             "warnings": rep.warnings}
        if args.side == "minus":
            rep = res["edge_minus"]
            line = "flow = %d, kappa = %d, agrees = %s" % (
                rep.flow, res["kappa"], "true" if rep.agrees else "false")
        else:
            line = ("flow: edge_plus = %d, edge_minus = %d, kappa = %d"
                    % (res["edge_plus"].flow, res["edge_minus"].flow,
                       res["kappa"]))
    out = cfg.path("flow.json")
    with open(out, "w", encoding="utf-8") as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_jsonable)
        f.write("\n")
    return _finish(cfg, args, "flow", [out], {"total_s": time.time() - t0},
                   line)


def cmd_current(args):
    cfg = RunConfig(args)
    t0 = time.time()
    if args.gap is not None:
        gap = args.gap
    else:
        rep = validate_gaps(cfg.model)
        if rep.gap_index_k is None:
            raise ValueError("0 is not inside a gap; pass --gap explicitly")
        gap = rep.gap_index_k - 2  # 0-based gap above band (k-2)
    temps = [float(s) for s in args.temps.split(",")]
    disp = edge_dispersion(cfg.model, L=cfg.L, Ny=cfg.Ny)
    samples, c = central_charge(cfg.model, gap, temps, dispersion=disp)
    chi = disp.chirality_sum(gap)
    out = cfg.path("current.csv")
    _write_csv(out, ["T", "J", "c_estimate"],
               [(s.T, s.J, s.c_estimate) for s in samples])
    out_json = cfg.path("current.json")
    with open(out_json, "w", encoding="utf-8") as f:
        json.dump({"gap": gap, "temps": temps, "c": c,
                   "chirality_sum": chi}, f, indent=2, sort_keys=True,
                  default=_jsonable)
        f.write("\n")
    return _finish(cfg, args, "current", [out, out_json],
                   {"total_s": time.time() - t0},
                   "c = %.4f (chirality sum %+d) -> %s" % (c, chi, out))


def cmd_figures_data(args):
    """One-stop data export for the five standard figures.

    Produces, for the Harper pair E_F = +/-ef: the half-chain dispersion
    with bulk bands (figure 1), exact vs ladder spectra in the window
    (figure 2), side-classified full-chain spectra (figures 3 and 4) and a
    tracked-branch overlay against the pointwise-sorted spectrum with its
    spurious flags (figure 5).
    """
    cfg = RunConfig(args)
    if args.constant is not None or args.model_file:
        raise ValueError("figures-data renders the Harper pair; use "
                         "--harper/--ef")
    p, q = (int(s) for s in args.harper.split(","))
    ef = abs(args.ef)
    model_p = build_harper(p, q, ef)
    model_m = build_harper(p, q, -ef)
    window = cfg.window_or((20.0, 30.0))
    L = min(cfg.L, 150)  # states in the window live within x < E/|E|_min
    t0 = time.time()
    timings = {}
    outs = []

    disp = edge_dispersion(model_p, L=L, Ny=cfg.Ny)
    rows = []
    for bid in sorted(disp.branches):
        kk, Es = disp.branches[bid]
        rows.extend((bid, k, E) for k, E in zip(kk, Es))
    f1e = cfg.path("fig1_edges.csv")
    _write_csv(f1e, ["branch_id", "ky", "E"], rows)
    rows = []
    for ky in np.linspace(0.0, TWO_PI, cfg.Ny, endpoint=False):
        lo, hi = bulk_ranges(model_p, ky, Nk=256)
        for j in range(model_p.n):
            rows.append((ky, j, lo[j], hi[j]))
    f1b = cfg.path("fig1_bands.csv")
    _write_csv(f1b, ["ky", "band", "e_min", "e_max"], rows)
    outs += [f1b, f1e]
    timings["fig1_s"] = time.time() - t0

    t1 = time.time()
    kys = np.linspace(0.0, TWO_PI, 16, endpoint=False)
    for tag, model in (("p", model_p), ("m", model_m)):
        rows_e, rows_a = [], []
        for ky in kys:
            for pt in exact_spectrum(model, ky, window):
                rows_e.append((ky, pt.E))
            for pt in asymptotic_spectrum(model, ky, window).points:
                rows_a.append((ky, pt.E, pt.m, pt.j))
        fe = cfg.path("fig2_exact_%s.csv" % tag)
        fa = cfg.path("fig2_asym_%s.csv" % tag)
        _write_csv(fe, ["ky", "E"], rows_e)
        _write_csv(fa, ["ky", "E", "m", "j"], rows_a)
        outs += [fe, fa]
    timings["fig2_s"] = time.time() - t1

    t2 = time.time()
    for fig, model in (("fig3", model_p), ("fig4", model_m)):
        rows = []
        for ky in np.linspace(0.0, TWO_PI, cfg.Ny, endpoint=False):
            op = build_truncation(model, "modulated_full", L, ky)
            w, v = window_spectrum(op, window, vectors=True)
            for i in range(len(w)):
                if spurious_filter(op, v[:, i]):
                    continue
                rows.append((ky, w[i], side_of(op, v[:, i])))
        fpath = cfg.path(fig + "_sides.csv")
        _write_csv(fpath, ["ky", "E", "side"], rows)
        outs.append(fpath)
    timings["fig34_s"] = time.time() - t2

    t3 = time.time()
    rows = []
    for ky in np.linspace(0.0, TWO_PI, cfg.Ny, endpoint=False):
        op = build_truncation(model_p, "modulated_edge", L, ky)
        w, v = window_spectrum(op, window, vectors=True)
        for i in range(len(w)):
            rows.append((ky, w[i], int(spurious_filter(op, v[:, i]))))
    f5s = cfg.path("fig5_sorted.csv")
    _write_csv(f5s, ["ky", "E", "spurious"], rows)
    fam = TruncationFamily(model_p, "modulated_edge", L)
    seeds = seed_pairs(fam(0.0), window)
    mid = len(seeds) // 2
    rows = []
    for i, seed in enumerate(seeds[max(0, mid - 2):mid + 2]):
        br = transport(fam, seed, cfg.step, keep_vectors=False)
        rows.extend((i, k, E) for k, E in zip(br.k_samples, br.E_values))
    f5t = cfg.path("fig5_tracked.csv")
    _write_csv(f5t, ["branch_id", "ky", "E"], rows)
    outs += [f5s, f5t]
    timings["fig5_s"] = time.time() - t3
    timings["total_s"] = time.time() - t0

    return _finish(cfg, args, "figures-data", outs, timings,
                   "figure data for harper %d/%d at E_F = +/-%g -> %s"
                   % (p, q, ef, cfg.outdir))


# ------------------------------------------------------------------ parser

def _add_common(sp):
    sp.add_argument("--harper", default="1,3", metavar="P,Q",
                    help="Harper flux p/q (default 1,3)")
    sp.add_argument("--ef", type=float, default=1.5,
                    help="Fermi energy subtracted from V (default 1.5)")
    sp.add_argument("--constant", default=None, metavar="E1,E2,...",
                    help="flat-band model with these on-site energies")
    sp.add_argument("--model-file", default=None,
                    help="JSON file with V/A harmonic coefficients")
    sp.add_argument("--L", type=int, default=500,
                    help="truncation half-length (default 500)")
    sp.add_argument("--Nx", type=int, default=256,
                    help="kx quadrature points (default 256)")
    sp.add_argument("--Ny", type=int, default=200,
                    help="ky grid points (default 200)")
    sp.add_argument("--window", default=None, metavar="LO,HI",
                    help="energy window (default depends on command)")
    sp.add_argument("--ky", default="1.0",
                    help="comma list of ky values (default 1.0)")
    sp.add_argument("--step", type=float, default=None,
                    help="tracking step in ky (default 2pi/200)")
    sp.add_argument("--outdir", default="out",
                    help="output directory (default ./out)")


def _parser():
    ap = argparse.ArgumentParser(
        prog="edgespectra",
        description="spectra, flow and currents of distance-modulated "
                    "edge Hamiltonians")
    sub = ap.add_subparsers(dest="command", required=True)

    def add(name, func, help_txt, extra=None):
        sp = sub.add_parser(name, help=help_txt)
        _add_common(sp)
        if extra:
            extra(sp)
        sp.set_defaults(func=func)
        return sp

    add("bands", cmd_bands, "bulk band ranges and Berry phases per ky")
    add("chern", cmd_chern, "Chern numbers and the Hall conductance")
    add("gapcheck", cmd_gapcheck, "verify the gapped-bands assumption")
    add("spectrum-exact", cmd_spectrum_exact,
        "monodromy roots in an energy window")
    add("spectrum-approx", cmd_spectrum_approx,
        "high-energy ladder approximation in a window")
    add("spectrum-discrete", cmd_spectrum_discrete,
        "truncated-operator eigenvalues with spurious flags",
        lambda sp: sp.add_argument("--kind", default="modulated_full",
                                   choices=("modulated_full",
                                            "modulated_edge",
                                            "plain_edge")))
    add("edge-dispersion", cmd_edge_dispersion,
        "in-gap edge branches of the plain half chain")
    add("track", cmd_track, "continue window eigenpairs around the ky circle",
        lambda sp: sp.add_argument("--kind", default="modulated_edge",
                                   choices=("modulated_full",
                                            "modulated_edge",
                                            "plain_edge")))
    add("flow", cmd_flow, "spectral flow against the Hall conductance",
        lambda sp: (sp.add_argument("--side", default="plus",
                                    choices=("plus", "minus", "full")),
                    sp.add_argument("--fiducial", type=float, default=None)))
    add("current", cmd_current, "edge energy current and central charge",
        lambda sp: (sp.add_argument("--gap", type=int, default=None),
                    sp.add_argument("--temps", default="0.1,0.05,0.025")))
    add("figures-data", cmd_figures_data,
        "export every CSV the standard figures consume")
    return ap


_VALUE_FLAGS = ("--constant", "--window", "--temps", "--fiducial", "--ef",
                "--ky")


def _absorb_negative_values(argv):
    # argparse rejects values like "-1,3" as unknown options; glue them to
    # their flag so `gapcheck --constant -1,3` parses
    out = []
    i = 0
    while i < len(argv):
        tok = argv[i]
        if tok in _VALUE_FLAGS and i + 1 < len(argv) \
                and argv[i + 1].startswith("-"):
            out.append(tok + "=" + argv[i + 1])
            i += 2
        else:
            out.append(tok)
            i += 1
    return out


def main(argv=None):
    if argv is None:
        argv = sys.argv[1:]
    args = _parser().parse_args(_absorb_negative_values(list(argv)))
    try:
        return args.func(args)
    except Exception as exc:
        json.dump({"error": type(exc).__name__, "message": str(exc)},
                  sys.stderr)
        sys.stderr.write("\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
