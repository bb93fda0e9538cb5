"""Command-line entry point ``wgf3d``.

Commands: ``toy``, ``modes``, ``mesh``, ``solve`` and ``fields``.  Each reads
a configuration file, writes a JSON summary plus CSV tables into the output
directory and exits with status 0.  Failures exit nonzero after printing a
one-line JSON error record with a category to stderr; no output files are
left behind.  Numerical libraries are imported only after the thread count
has been fixed.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import shutil
import sys
import tempfile
import time

EXIT_CODES = {"config": 2, "domain": 3, "solver": 4, "internal": 1}


def _parser():
    p = argparse.ArgumentParser(prog="wgf3d", description="Windowed Green function solver for dielectric waveguides")
    p.add_argument("command", choices=["toy", "modes", "mesh", "solve", "fields"])
    p.add_argument("--config", required=True, help="INI configuration file")
    p.add_argument("--out", default="wgf3d-out", help="output directory")
    p.add_argument("--threads", type=int, default=None, help="BLAS/OpenMP thread count")
    p.add_argument("--timing", action="store_true", help="add wall-clock times to the summary")
    p.add_argument("--verbose", action="store_true")
    return p


def _json_default(o):
    import numpy as np

    if isinstance(o, np.generic):
        return o.item()
    if isinstance(o, np.ndarray):
        return o.tolist()
    if isinstance(o, complex):
        return [o.real, o.imag]
    raise TypeError(type(o).__name__)


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(data, fh, indent=2, sort_keys=True, default=_json_default)
        fh.write("\n")


def _strip_timing(d):
    if isinstance(d, dict):
        return {k: _strip_timing(v) for k, v in d.items() if k != "wall_time"}
    return d


def cmd_toy(cfg, tmp):
    import numpy as np

    from .toy import ToyParams, convergence_study, write_toy_csv

    t = cfg.toy
    A = tuple(np.logspace(np.log10(t.A_min), np.log10(t.A_max), t.A_count))
    out = {}
    for q in t.kz_over_k0:
        table = convergence_study(ToyParams(k0=t.k0, kz=q * t.k0, A_values=A, alpha=t.alpha))
        name = f"toy_kz{q:g}.csv"
        write_toy_csv(os.path.join(tmp, name), table)
        out[name] = {"kz_over_k0": q, "final_err_tr": float(table.err_tr[-1]), "final_err_w": float(table.err_w[-1])}
    return {"tables": out}


def cmd_modes(cfg, tmp):
    import csv

    from .experiments import guide_radius, materials_of
    from .modes import solve_modes

    mats = materials_of(cfg)
    a = guide_radius(cfg)
    modes = solve_modes(mats.interior, mats.exterior, a, m_az_max=cfg.modes.m_az_max)
    with open(os.path.join(tmp, "modes.csv"), "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["m_az", "family", "kz", "n_eff", "u", "w", "residual"])
        for m in modes:
            w.writerow([m.m_az, m.family, f"{m.kz:.15e}", f"{m.kz / m.k0:.15e}", f"{m.u:.15e}", f"{m.w:.15e}",
                        f"{m.residual:.3e}"])
    return {"radius": a, "count": len(modes), "modes": [{"m_az": m.m_az, "family": m.family, "n_eff": m.kz / m.k0}
                                                        for m in modes]}


def _build_mesh(cfg):
    from .experiments import setup_guide
    from .geometry import build_sphere

    if cfg.geometry.shape == "sphere":
        if not cfg.geometry.radius > 0:
            from .geometry import GeometryConfigurationError

            raise GeometryConfigurationError("sphere needs geometry.radius > 0")
        return build_sphere(cfg.geometry.radius, cfg.discretization.patches_per_face, cfg.discretization.degree), None
    setup = setup_guide(cfg)
    return setup.mesh, setup


def cmd_mesh(cfg, tmp):
    import numpy as np

    from .geometry import watertight_audit

    mesh, setup = _build_mesh(cfg)
    mesh.dump_csv(os.path.join(tmp, "mesh.csv"))
    info = {"nodes": mesh.size, "patches": mesh.npatch, "area": mesh.area(),
            "retained_nodes": int(np.count_nonzero(mesh.retained()))}
    if setup is not None:
        info.update({"A": setup.A, "radius": setup.radius, "gamma_perp_nodes": setup.gamma_perp.size})
    else:
        ok, open_edges, gap = watertight_audit(mesh)
        info.update({"watertight": bool(ok), "max_edge_mismatch": float(gap)})
    return info


def _solve(cfg):
    import numpy as np

    from .experiments import excitation_of, materials_of, solve_guide, solver_config, tables_for
    from .muller import MullerOperator, rhs_type1, solve

    mesh, setup = _build_mesh(cfg)
    mats = materials_of(cfg)
    tables = tables_for(mesh, mats, cfg)
    W = mesh.window if cfg.solver.windowed else np.ones(mesh.size)
    if cfg.run.kind == "solve-type2":
        sol, inc, rep, W = solve_guide(setup, tables, cfg, cfg.solver.windowed)
        exc = setup.excitation
    else:
        exc = excitation_of(cfg)
        sol, rep = solve(MullerOperator(tables, window=W), rhs_type1(exc, mesh, mats), solver_config(cfg))
        inc = None
    return {"mesh": mesh, "setup": setup, "mats": mats, "sol": sol, "inc": inc, "rep": rep, "W": W, "exc": exc}


def cmd_solve(cfg, tmp):
    import numpy as np

    r = _solve(cfg)
    np.savez(os.path.join(tmp, "densities.npz"), points=r["mesh"].points, m=r["sol"].m, j=r["sol"].j)
    out = {"solver": r["rep"].as_dict(), "unknowns": 4 * r["mesh"].size}
    if r["setup"] is not None:
        out["A"] = r["setup"].A
    return out


def cmd_fields(cfg, tmp):
    import numpy as np

    from .postprocess import eval_fields, write_csv

    r = _solve(cfg)
    f = cfg.fields
    s = np.linspace(0.0, 1.0, f.points)[:, None]
    P = np.asarray(f.start)[None, :] * (1 - s) + np.asarray(f.stop)[None, :] * s
    gp = r["setup"].gamma_perp if r["setup"] is not None else None
    grid = eval_fields(r["sol"], r["exc"], r["mesh"], P, r["mats"], window=r["W"], gamma_perp=gp, inc=r["inc"],
                       clearance=f.clearance)
    write_csv(grid, os.path.join(tmp, "fields.csv"))
    out = {"solver": r["rep"].as_dict(), "points": int(len(P)), "flagged": int(grid.flagged.sum())}
    if r["setup"] is not None and cfg.geometry.shape == "guide":
        from .postprocess import error_vs_mode

        out["error_vs_mode"] = error_vs_mode(grid, r["exc"])
    return out


COMMANDS = {"toy": cmd_toy, "modes": cmd_modes, "mesh": cmd_mesh, "solve": cmd_solve, "fields": cmd_fields}


def _category(exc) -> str:
    from .config import ConfigError
    from .excitation import ExcitationConfigurationError
    from .geometry import GeometryConfigurationError
    from .modes import ModeDomainError
    from .muller import SolveError
    from .toy import ToyDomainError
    from .windowing import SIWConfigurationError, WindowDomainError

    if isinstance(exc, ConfigError):
        return "config"
    if isinstance(exc, (GeometryConfigurationError, ExcitationConfigurationError, SIWConfigurationError,
                        WindowDomainError, ModeDomainError, ToyDomainError)):
        return "domain"
    if isinstance(exc, SolveError):
        return "solver"
    return "internal"


def run(argv=None) -> int:
    """Parse arguments, run one command and return the exit status."""
    args = _parser().parse_args(argv)
    if args.threads:
        for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
            os.environ[var] = str(args.threads)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    from .config import load_config

    try:
        cfg = load_config(args.config)
        with tempfile.TemporaryDirectory() as tmp:
            t0 = time.perf_counter()
            result = COMMANDS[args.command](cfg, tmp)
            summary = {"command": args.command, "config": cfg.as_dict(), "result": result}
            if args.timing:
                summary["wall_time"] = time.perf_counter() - t0
            else:
                summary = _strip_timing(summary)
            _write_json(os.path.join(tmp, "summary.json"), summary)
            os.makedirs(args.out, exist_ok=True)
            for name in sorted(os.listdir(tmp)):
                shutil.move(os.path.join(tmp, name), os.path.join(args.out, name))
    except Exception as exc:  # report every failure with a category
        cat = _category(exc)
        print(json.dumps({"status": "error", "category": cat, "message": str(exc)}), file=sys.stderr)
        if args.verbose:
            logging.exception("run failed")
        return EXIT_CODES[cat]
    return 0


def main():  # pragma: no cover - console script
    sys.exit(run())


if __name__ == "__main__":  # pragma: no cover
    main()
