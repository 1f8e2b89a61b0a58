import argparse
import sys
import traceback

from dotenv import load_dotenv
from pydantic import ValidationError

from elastfem_module.study_runner import StudyRunner
from elastfem_module.solver_submodule.saddle_solver import SOLVER_METHODS
from elastfem_module.utils_module.config import load_settings
from elastfem_module.utils_module.custom_logger import get_elastfem_logger
from elastfem_module.utils_module.errors import ElastfemError
from elastfem_module.utils_module.utils import DEFAULT_MAX_LEVEL, ElementKind

ELEMENT_CHOICES = [e.value for e in ElementKind]


def build_parser():
    parser = argparse.ArgumentParser(prog="elastfem", description="Mixed finite elements for linear elasticity")
    subparsers = parser.add_subparsers(dest="command", required=True)

    mesh = subparsers.add_parser("mesh", help="Build a structured mesh of the unit cube/square")
    mesh.add_argument("--kind", choices=ELEMENT_CHOICES, required=True, help="Mesh kind")
    mesh.add_argument("--n", type=int, required=True, help="Cells per axis")
    mesh.add_argument("--out", default=None, help="Mesh JSON path")

    verify = subparsers.add_parser("verify", help="Element certificate")
    verify.add_argument("--element", choices=ELEMENT_CHOICES, required=True, help="Element kind")
    verify.add_argument("--tol", type=float, default=1e-10, help="Residual tolerance of the checks")
    verify.add_argument("--out", default=None, help="Certificate JSON path")

    converge = subparsers.add_parser("converge", help="Manufactured-solution convergence table")
    converge.add_argument("--element", choices=ELEMENT_CHOICES, required=True, help="Element kind")
    converge.add_argument("--levels", type=int, default=DEFAULT_MAX_LEVEL, help="Number of refinement levels")
    converge.add_argument("--out", default=None, help="Table CSV path")
    converge.add_argument("--dump-system", default=None, help="Path prefix for the assembled matrices")
    converge.add_argument("--resume", action="store_true", help="Reuse levels from the progress file")
    converge.add_argument("--allow-level-5", action="store_true", help="Allow the level 5 run")
    converge.add_argument("--solver", choices=SOLVER_METHODS, default="direct", help="Saddle-point solver")
    converge.add_argument("--progress", action="store_true", help="Show progress bars")

    infsup = subparsers.add_parser("infsup", help="Discrete inf-sup constants")
    infsup.add_argument("--element", choices=ELEMENT_CHOICES, default="prism", help="Element kind")
    infsup.add_argument("--levels", type=int, default=3, help="Number of refinement levels")
    infsup.add_argument("--ablate-tau3", action="store_true", help="Also compute the constant without the tau3 fields")
    infsup.add_argument("--allow-level-5", action="store_true", help="Allow the level 5 run")
    infsup.add_argument("--out", default=None, help="Table CSV path")
    infsup.add_argument("--progress", action="store_true", help="Show progress bars")
    return parser


def run_command(args, settings):
    if args.command == "mesh":
        counts, path = StudyRunner(args.kind, settings).run_mesh(args.n, args.out)
        print(f"{args.kind} mesh n={args.n}: {counts} -> {path}")
        return 0

    runner = StudyRunner(args.element, settings)
    if args.command == "verify":
        certificate, path = runner.run_verify(args.tol, args.out)
        for name, ok in certificate["checks"].items():
            print(f"{name}: {'ok' if ok else 'FAILED'}")
        print(f"certificate -> {path}")
        return 0 if certificate["passed"] else 1

    if args.command == "converge":
        rows, path = runner.run_converge(
            args.levels,
            out=args.out,
            dump_system=args.dump_system,
            resume=args.resume,
            allow_level_5=args.allow_level_5,
            solver=args.solver,
            progress=args.progress,
        )
        for row in rows:
            print(
                f"{row.level},{row.h:.8f},{row.err_sigma_l2:.8f},{row.order_sigma:.2f},"
                f"{row.err_u_l2:.8f},{row.order_u:.2f},{row.err_div_l2:.8f},{row.order_div:.2f}"
            )
        print(f"table -> {path}")
        return 0

    rows, path = runner.run_infsup(
        args.levels, out=args.out, ablate_tau3=args.ablate_tau3, allow_level_5=args.allow_level_5,
        progress=args.progress,
    )
    for row in rows:
        ablated = "" if row.beta_h_ablated is None else f",{row.beta_h_ablated:.6e}"
        print(f"{row.level},{row.h:.8f},{row.beta_h:.6e},{row.eig_residual:.2e},{row.n_sigma},{row.n_u}{ablated}")
    print(f"table -> {path}")
    return 0


def main(argv=None):
    load_dotenv()
    args = build_parser().parse_args(argv)
    logger = get_elastfem_logger()
    try:
        settings = load_settings()
        return run_command(args, settings)
    except (ElastfemError, ValueError, ValidationError) as e:
        logger.error(f"{args.command} failed: {e}\n{traceback.format_exc()}")
        print(f"error: {e}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
