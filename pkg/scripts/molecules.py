"""Jaccard index of the nonnegative-l1 initialisation and of IRWP-IRL1 on seeded point phantoms.

    python3 scripts/molecules.py --seeds 0 1 2 3 4 --noise 1 2
"""

import argparse

from whitesr import metrics
from whitesr.grid import KernelSpec
from whitesr.irl1 import irwp_irl1_run
from whitesr.sim import DegradationSpec, degrade, make_phantom


def main():
    p = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    p.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    p.add_argument("--noise", type=float, nargs="+", default=[1.0, 2.0], help="percent of the noiseless LR maximum")
    p.add_argument("--size", type=int, default=64)
    p.add_argument("--points", type=int, default=5)
    args = p.parse_args()

    print("noise% seed  J2_init  J2_irl1  J4_init  J4_irl1  outer  mu")
    for noise in args.noise:
        for seed in args.seeds:
            x, pts = make_phantom("points", args.size, seed=seed, k=args.points, s_min=8, margin=4)
            spec = DegradationSpec(KernelSpec("gaussian", 9, 2.0), 2, 2, noise_percent=noise, seed=seed)
            b, sigma = degrade(x, spec)
            rep = irwp_irl1_run(b, spec.otf(x.shape), spec.decimator, sigma=sigma)
            init = metrics.detections(rep.metadata["init"].t_star[0])
            final = metrics.detections(rep.x_star)
            j = [metrics.jaccard(pts, d, delta) for delta in (2, 4) for d in (init, final)]
            print(f"{noise:6g} {seed:4d}  {j[0]:7.3f}  {j[1]:7.3f}  {j[2]:7.3f}  {j[3]:7.3f}  {rep.iterations:5d}  {rep.mu_star:.4g}")


if __name__ == "__main__":
    main()
