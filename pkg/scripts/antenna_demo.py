"""Terminated guide: a bound mode hits a rounded cap and radiates.

Reports reflected, radiated and net guided power over a closed surface
around the termination.
"""

import argparse
import json

from wgf3d.config import RunConfig
from wgf3d.experiments import setup_guide, tables_for, terminated_energy


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--A", type=float, default=3.0, help="window size in modal wavelengths")
    ap.add_argument("--extra-length", type=float, default=0.5, help="guide beyond the window, in units of A")
    ap.add_argument("--degree", type=int, default=12)
    ap.add_argument("--dtype", default="complex64", choices=["complex128", "complex64"])
    args = ap.parse_args()
    cfg = RunConfig()
    cfg.geometry.shape = "terminated"
    cfg.geometry.extra_length = args.extra_length
    cfg.window.A = args.A
    cfg.discretization.degree = args.degree
    cfg.discretization.azimuthal_patches = 4
    cfg.discretization.dtype = args.dtype
    setup = setup_guide(cfg)
    tables = tables_for(setup.mesh, setup.materials, cfg)
    print(json.dumps(terminated_energy(setup, tables, cfg), indent=2))


if __name__ == "__main__":
    main()
