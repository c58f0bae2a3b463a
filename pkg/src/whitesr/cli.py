"""Command-line interface: ``simulate``, ``solve``, ``sweep`` and ``compare``.

Exit codes: 0 success, 2 usage or input error, 3 numerical failure. Errors
print one line ``whitesr: error=<usage|numerical> reason=<text>`` on stderr
and remove any files the failing command had already written.
"""

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor

import numpy as np

from . import __version__, io, metrics
from .admm import AdmmConfig, Problem, dp_tik, exact_rwp_tik, irwp_admm_run, tik_fixed
from .grid import KernelSpec
from .irl1 import Irl1Options, irwp_irl1_run
from .operators import Decimator
from .prox import RegularizerKind
from .sim import DegradationSpec, degrade, make_phantom
from .whiteness import UnattainableTarget, WhitenessError, tau_star, whiteness_of_image

MODELS = {"tik": "TIK", "tvi": "TVI", "tva": "TVA", "wtv": "WTV", "wl1": "WL1", "cel0": "CEL0"}


class UsageError(Exception):
    pass


class Outputs:
    """Remembers files and directories created by a command so a failure can undo them."""

    def __init__(self):
        self.files = []
        self.dirs = []

    def dir(self, path):
        missing = []
        p = os.path.abspath(path)
        while not os.path.exists(p):
            missing.append(p)
            p = os.path.dirname(p)
        os.makedirs(path, exist_ok=True)
        self.dirs.extend(reversed(missing))
        return path

    def file(self, path):
        parent = os.path.dirname(path)
        if parent:
            self.dir(parent)
        self.files.append(path)
        return path

    def remove(self):
        for f in self.files:
            if os.path.isfile(f):
                os.remove(f)
        for d in reversed(self.dirs):
            if os.path.isdir(d) and not os.listdir(d):
                os.rmdir(d)


def worker_count():
    raw = os.environ.get("WHITESR_THREADS", "1")
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"WHITESR_THREADS must be an integer, got {raw!r}")
    if n < 1:
        raise UsageError("WHITESR_THREADS must be >= 1")
    return n


def parallel_map(fn, items):
    """Map in grid order, fanning out to at most WHITESR_THREADS workers."""
    n = worker_count()
    if n == 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


def parse_select(text):
    """``rwp`` or ``dp:tau:sigma``."""
    if text == "rwp":
        return "rwp", None, None
    parts = text.split(":")
    if len(parts) == 3 and parts[0] == "dp":
        try:
            tau, sigma = float(parts[1]), float(parts[2])
        except ValueError:
            raise UsageError(f"bad --select {text!r}")
        if not (tau > 0 and sigma > 0):
            raise UsageError("dp needs positive tau and sigma")
        return "dp", tau, sigma
    raise UsageError(f"--select must be 'rwp' or 'dp:tau:sigma', got {text!r}")


def parse_grid(text):
    try:
        lo, hi, count = text.split(":")
        lo, hi, count = float(lo), float(hi), int(count)
    except ValueError:
        raise UsageError(f"--grid must be lo:hi:count, got {text!r}")
    if not (0 < lo < hi and count >= 2):
        raise UsageError("--grid needs 0 < lo < hi and count >= 2")
    return np.logspace(math.log10(lo), math.log10(hi), count)


def parse_noise(text):
    """``0.1`` (absolute sigma) or ``2%`` (percent of the noiseless LR maximum)."""
    try:
        if text.endswith("%"):
            return None, float(text[:-1])
        return float(text), None
    except ValueError:
        raise UsageError(f"bad --noise {text!r}")


# ---------------------------------------------------------------- data sets


class Dataset:
    """A directory written by ``simulate``: b, optional truth, and the forward model."""

    def __init__(self, path):
        meta_path = os.path.join(path, "meta.txt")
        if not os.path.exists(meta_path):
            raise UsageError(f"{path} has no meta.txt")
        self.path = path
        self.meta = io.read_metadata(meta_path)
        self.b = io.read_matrix(os.path.join(path, "b.txt"))
        truth = os.path.join(path, "x.txt")
        self.truth = io.read_matrix(truth) if os.path.exists(truth) else None
        pts = os.path.join(path, "points.csv")
        self.points = None
        if os.path.exists(pts):
            data = np.loadtxt(pts, delimiter=",", skiprows=1, ndmin=2)
            self.points = data[:, :2].astype(int) if data.size else np.zeros((0, 2), int)
        try:
            self.kernel = KernelSpec.parse(self.meta["kernel"])
            self.dec = Decimator.parse(self.meta["decimate"])
            pixel = self.meta.get("pixel_blur", "true") == "true"
        except KeyError as exc:
            raise UsageError(f"meta.txt lacks {exc}")
        hr = (self.b.shape[0] * self.dec.dr, self.b.shape[1] * self.dec.dc)
        self.spec = DegradationSpec(self.kernel, self.dec.dr, self.dec.dc, pixel)
        self.otf = self.spec.otf(hr)

    def sigma(self):
        """Realised noise level; only evaluation commands (sweep, compare) read it."""
        s = float(self.meta.get("sigma", "nan"))
        return s if s > 0 else None


# ---------------------------------------------------------------- commands


def cmd_simulate(args, out):
    sigma, percent = parse_noise(args.noise)
    params = {}
    if args.cell is not None:
        params["cell"] = args.cell
    if args.phantom == "points":
        params.update(k=args.points, s_min=args.s_min, margin=args.margin)
    made = make_phantom(args.phantom, args.size, seed=args.seed, **params)
    x, pts = made if args.phantom == "points" else (made, None)
    spec = DegradationSpec(
        KernelSpec.parse(args.kernel), *_factors(args.decimate), not args.no_pixel_blur,
        sigma=sigma or 0.0, noise_percent=percent, seed=args.seed,
    )
    b, s = degrade(x, spec)
    out.dir(args.out)
    io.write_matrix(out.file(os.path.join(args.out, "x.txt")), x)
    io.write_pgm(out.file(os.path.join(args.out, "x.pgm")), x)
    io.write_matrix(out.file(os.path.join(args.out, "b.txt")), b)
    io.write_pgm(out.file(os.path.join(args.out, "b.pgm")), b)
    if pts is not None:
        io.write_points_csv(out.file(os.path.join(args.out, "points.csv")), x, pts)
    meta = {
        "version": __version__,
        "phantom": args.phantom,
        "size": args.size,
        "seed": args.seed,
        "kernel": str(spec.kernel),
        "decimate": str(spec.decimator),
        "pixel_blur": str(spec.pixel_blur).lower(),
        "noise": args.noise,
        "sigma": f"{s:.17g}",
    }
    meta.update({k: v for k, v in params.items()})
    io.write_metadata(out.file(os.path.join(args.out, "meta.txt")), meta)
    return 0


def _factors(text):
    dec = Decimator.parse(text)
    return dec.dr, dec.dc


def _admm_config(args, select, tau=1.0, sigma=None):
    return AdmmConfig(beta=args.beta, tol=args.tol, max_iter=args.max_iter, select=select, sigma=sigma, tau=tau)


def run_model(data, model, select, tau, sigma, args):
    """Reconstruct with one model; ``sigma`` is used only when ``select == 'dp'``."""
    tag = MODELS[model]
    if tag == "TIK":
        if select == "rwp":
            return exact_rwp_tik(data.b, data.otf, data.dec)
        return dp_tik(data.b, data.otf, data.dec, sigma, tau)
    if tag == "CEL0":
        if select != "rwp":
            raise UsageError("cel0 supports --select rwp only")
        opts = Irl1Options(beta=args.beta)
        return irwp_irl1_run(data.b, data.otf, data.dec, opts)
    cfg = _admm_config(args, select, tau, sigma)
    return irwp_admm_run(data.b, data.otf, data.dec, RegularizerKind(tag), cfg, truth=data.truth, sigma=sigma)


def quality(data, x):
    if data.truth is None:
        return {}
    b_bar = metrics.bicubic_upsample(data.b, data.dec.dr, data.dec.dc)
    return {
        "psnr": metrics.psnr(data.truth, x),
        "isnr": metrics.isnr(data.truth, x, b_bar),
        "ssim": metrics.ssim(data.truth, x),
    }


def cmd_solve(args, out):
    select, tau, sigma = parse_select(args.select)
    if args.model not in MODELS:
        raise UsageError(f"unknown model {args.model!r}")
    data = Dataset(args.inp)
    rep = run_model(data, args.model, select, tau, sigma, args)
    out.dir(args.out)
    io.write_matrix(out.file(os.path.join(args.out, "x_star.txt")), rep.x_star)
    io.write_pgm(out.file(os.path.join(args.out, "x_star.pgm")), rep.x_star)
    traces = os.path.join(args.out, "traces.csv")
    rep.write_traces_csv(out.file(traces))
    report = {
        "version": __version__,
        "model": args.model,
        "select": args.select,
        "mu_star": f"{rep.mu_star:.17g}",
        "tau_star": f"{rep.tau_star:.17g}" if select == "dp" else "nan",
        "iterations": rep.iterations,
        "converged": str(rep.converged).lower(),
        "boundary_hit": str(rep.boundary_hit).lower(),
        "beta": args.beta,
    }
    if args.model == "cel0":
        pts = metrics.detections(rep.x_star)
        io.write_points_csv(out.file(os.path.join(args.out, "points.csv")), rep.x_star, pts)
        report["detections"] = len(pts)
        if data.points is not None:
            report["jaccard_2"] = f"{metrics.jaccard(data.points, pts, 2.0):.17g}"
    for k, v in quality(data, rep.x_star).items():
        report[k] = f"{v:.17g}"
    io.write_metadata(out.file(os.path.join(args.out, "report.txt")), report)
    return 0


def sweep_rows(data, model, mus, args):
    """(mu, tau, W, isnr, ssim) per grid point; fixed-mu runs for the non-quadratic models."""
    sigma = data.sigma()
    tag = MODELS[model]
    if tag == "CEL0":
        raise UsageError("sweep supports tik, tvi, tva, wtv and wl1")
    problem = Problem.build(data.b, data.otf, data.dec, "gradient")
    x0 = exact_rwp_tik(data.b, data.otf, data.dec, problem=problem).x_star if tag != "TIK" else None
    b_bar = metrics.bicubic_upsample(data.b, data.dec.dr, data.dec.dc)

    def one(mu):
        if tag == "TIK":
            x = tik_fixed(problem, mu)
        else:
            cfg = AdmmConfig(beta=args.beta, tol=args.tol, max_iter=args.max_iter, select="fixed", mu=float(mu))
            x = irwp_admm_run(data.b, data.otf, data.dec, RegularizerKind(tag), cfg, x0=x0).x_star
        r = problem.residual(x)
        row = [float(mu), tau_star(np.linalg.norm(r), r.size, sigma) if sigma else math.nan, whiteness_of_image(r)]
        if data.truth is not None:
            row += [metrics.isnr(data.truth, x, b_bar), metrics.ssim(data.truth, x)]
        else:
            row += [math.nan, math.nan]
        return row

    return parallel_map(one, list(mus))


def cmd_sweep(args, out):
    mus = parse_grid(args.grid)
    if args.model not in MODELS:
        raise UsageError(f"unknown model {args.model!r}")
    data = Dataset(args.inp)
    rows = sweep_rows(data, args.model, mus, args)
    io.write_csv(out.file(args.out), ["mu", "tau", "W", "isnr", "ssim"], rows)
    return 0


def cmd_compare(args, out):
    models = [m.strip() for m in args.models.split(",") if m.strip()]
    bad = [m for m in models if m not in MODELS or m == "cel0"]
    if bad or not models:
        raise UsageError(f"compare models must be among tik,tvi,tva,wtv,wl1; got {args.models!r}")
    data = Dataset(args.inp)
    if data.truth is None:
        raise UsageError("compare needs the ground truth x.txt")
    sigma = data.sigma()
    jobs = [(m, "rwp") for m in models] + ([(m, "dp") for m in models] if sigma else [])

    def one(job):
        model, select = job
        rep = run_model(data, model, select, 1.0, sigma, args)
        r = np.linalg.norm(Problem.build(data.b, data.otf, data.dec, "identity").residual(rep.x_star))
        q = quality(data, rep.x_star)
        tau = tau_star(r, data.b.size, sigma) if sigma else math.nan
        return [model, select, rep.mu_star, tau, q["psnr"], q["isnr"], q["ssim"]]

    rows = parallel_map(one, jobs)
    b_bar = metrics.bicubic_upsample(data.b, data.dec.dr, data.dec.dc)
    rows.append(["bicubic", "-", math.nan, math.nan, metrics.psnr(data.truth, b_bar), 0.0,
                 metrics.ssim(data.truth, b_bar)])
    io.write_csv(out.file(args.out), ["model", "select", "mu", "tau", "psnr", "isnr", "ssim"], rows)
    return 0


# ---------------------------------------------------------------- entry point


def build_parser():
    p = argparse.ArgumentParser(prog="whitesr", description="Super-resolution with residual-whiteness parameter selection.")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("simulate", help="make a phantom and its degraded observation")
    s.add_argument("--phantom", choices=["blocks", "geometric", "points"], default="blocks")
    s.add_argument("--size", type=int, default=256)
    s.add_argument("--kernel", default="gaussian:13:3")
    s.add_argument("--decimate", default="4x4")
    s.add_argument("--noise", default="0.1", help="absolute sigma, or N%% of the noiseless LR maximum")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--cell", type=int, default=None, help="blocks cell size")
    s.add_argument("--points", type=int, default=5)
    s.add_argument("--s-min", type=float, default=8.0)
    s.add_argument("--margin", type=int, default=0)
    s.add_argument("--no-pixel-blur", action="store_true")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    def admm_opts(q, max_iter=500):
        q.add_argument("--beta", type=float, default=1.0)
        q.add_argument("--tol", type=float, default=1e-5)
        q.add_argument("--max-iter", type=int, default=max_iter)

    s = sub.add_parser("solve", help="reconstruct with one model")
    s.add_argument("--model", required=True, choices=sorted(MODELS))
    s.add_argument("--select", default="rwp")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    admm_opts(s)
    s.set_defaults(func=cmd_solve)

    s = sub.add_parser("sweep", help="tau, W, ISNR and SSIM over a mu grid")
    s.add_argument("--model", default="tvi", choices=sorted(MODELS))
    s.add_argument("--grid", default="1e-4:1e4:100")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    admm_opts(s, max_iter=200)
    s.set_defaults(func=cmd_sweep)

    s = sub.add_parser("compare", help="metrics table for several models under rwp and dp")
    s.add_argument("--models", default="tik,tvi,tva")
    s.add_argument("--in", dest="inp", required=True)
    s.add_argument("--out", required=True)
    admm_opts(s)
    s.set_defaults(func=cmd_compare)
    return p


def _fail(kind, reason, out):
    out.remove()
    reason = " ".join(str(reason).split())
    print(f"whitesr: error={kind} reason={reason}", file=sys.stderr)
    return 2 if kind == "usage" else 3


def run(argv=None):
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    out = Outputs()
    try:
        worker_count()
        return args.func(args, out)
    except (FloatingPointError, WhitenessError, UnattainableTarget, np.linalg.LinAlgError) as exc:
        return _fail("numerical", exc, out)
    except (UsageError, ValueError, KeyError, OSError) as exc:
        return _fail("usage", exc, out)


def main():
    sys.exit(run())
