"""Plane-wave scattering by a dielectric sphere compared with the Mie series."""

import argparse
import json

from wgf3d.config import RunConfig
from wgf3d.experiments import sphere_mie_metrics


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--degree", type=int, default=16)
    ap.add_argument("--patches-per-face", type=int, default=1)
    ap.add_argument("--radius", type=float, default=0.5)
    ap.add_argument("--eval-radius", type=float, default=1.5)
    args = ap.parse_args()
    cfg = RunConfig()
    cfg.geometry.shape = "sphere"
    cfg.discretization.degree = args.degree
    cfg.discretization.patches_per_face = args.patches_per_face
    r = sphere_mie_metrics(cfg, radius=args.radius, eval_radius=args.eval_radius)
    print(json.dumps({k: v for k, v in r.items() if k not in ("mesh", "solution")}, indent=2))


if __name__ == "__main__":
    main()
