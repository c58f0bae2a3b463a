"""W, tau, ISNR and SSIM against mu for TIK and TVI on a seeded blocks problem.

Writes one CSV per model. The TVI curve comes from fixed-mu ADMM runs with
continuation (each grid point warm-starts from the previous one).

    python3 scripts/whiteness_curves.py --out results/curves --points 33
"""

import argparse
import copy
import os

import numpy as np

from whitesr import io, metrics
from whitesr.admm import AdmmConfig, Problem, exact_rwp_tik, irwp_admm_run, run_admm, tik_fixed
from whitesr.grid import KernelSpec
from whitesr.prox import RegularizerKind
from whitesr.sim import DegradationSpec, degrade, make_phantom
from whitesr.whiteness import tau_star, whiteness_of_image


def row(x, xs, problem, sigma, b_bar, mu):
    r = problem.residual(xs)
    return [mu, tau_star(np.linalg.norm(r), r.size, sigma), whiteness_of_image(r),
            metrics.isnr(x, xs, b_bar), metrics.ssim(x, xs)]


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--points", type=int, default=33)
    p.add_argument("--decades", type=float, default=2.0, help="half-width of the mu window around mu_RWP")
    p.add_argument("--iters", type=int, default=100, help="ADMM iterations per TVI grid point")
    p.add_argument("--beta", type=float, default=10.0)
    p.add_argument("--out", default="results/curves")
    args = p.parse_args()

    x = make_phantom("blocks", 256, seed=args.seed, cell=16)
    spec = DegradationSpec(KernelSpec("gaussian", 13, 3.0), 4, 4, sigma=0.1, seed=1000 + args.seed)
    b, sigma = degrade(x, spec)
    otf, dec = spec.otf(x.shape), spec.decimator
    b_bar = metrics.bicubic_upsample(b, 4)
    problem = Problem.build(b, otf, dec)
    os.makedirs(args.out, exist_ok=True)
    header = ["mu", "tau", "W", "isnr", "ssim"]

    tik = exact_rwp_tik(b, otf, dec, problem=problem)
    mus = tik.mu_star * np.logspace(-args.decades, args.decades, args.points)
    rows = [row(x, tik_fixed(problem, m), problem, sigma, b_bar, m) for m in mus]
    io.write_csv(os.path.join(args.out, "tik.csv"), header, rows)
    print(f"TIK  mu_RWP={tik.mu_star:.4g} isnr={metrics.isnr(x, tik.x_star, b_bar):.3f}")

    cfg = AdmmConfig(beta=args.beta, tol=0.0)
    tvi = irwp_admm_run(b, otf, dec, "TVI", cfg, x0=tik.x_star)
    mus = tvi.mu_star * np.logspace(-args.decades, args.decades, args.points)
    centre = int(np.argmin(np.abs(np.log(mus / tvi.mu_star))))
    rows = {}
    reg = RegularizerKind("TVI")
    for order in (range(centre, len(mus)), range(centre - 1, -1, -1)):
        state = copy.deepcopy(tvi.state)
        for i in order:
            fixed = AdmmConfig(beta=args.beta, tol=0.0, select="fixed", mu=float(mus[i]))
            run_admm(tvi.metadata["problem"], reg, state, fixed, max_iter=args.iters)
            rows[i] = row(x, state.x, problem, sigma, b_bar, mus[i])
    io.write_csv(os.path.join(args.out, "tvi.csv"), header, [rows[i] for i in sorted(rows)])
    print(f"TVI  mu_RWP={tvi.mu_star:.4g} isnr={metrics.isnr(x, tvi.x_star, b_bar):.3f}")


if __name__ == "__main__":
    main()
