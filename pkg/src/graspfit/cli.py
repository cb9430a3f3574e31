"""The graspfit command line tool.

    graspfit plan --object scene.ply --gripper model.json --out result.json
    graspfit make-fixture --kind cylinder --out fixtures/

Exit codes: 0 when at least one collision-free grasp was found, 2 when
planning finished with none, 1 on any usage or input error.
"""

from __future__ import annotations

import argparse
import sys

from . import fixtures
from .errors import GraspFitError
from .io import (export_pose_plys, load_gripper, load_object, save_gripper,
                 save_ply, save_result)
from .isf import IsfConfig, write_trace_csv
from .planner import plan, write_plan_log_csv

FIXTURE_KINDS = ("cylinder", "plane-pair", "sphere", "blob-scene", "gripper")


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on usage errors; the planner reserves 2 for
    # "no feasible grasp", so usage problems exit 1 instead
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def _build_parser() -> _Parser:
    parser = _Parser(prog="graspfit",
                     description="Grasp planning by iterative surface fitting.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", parents=[], help="plan grasps on an object cloud",
                       description="Run the full planning loop and write a "
                                   "result file.")
    p.add_argument("--object", required=True, help="object cloud (.ply or .obj)")
    p.add_argument("--gripper", required=True, help="gripper model file (.json)")
    p.add_argument("--out", required=True, help="result file to write (.json)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--samples", type=int, default=60, help="sampling iterations")
    p.add_argument("--centers", type=int, default=6, help="k-means seed centers")
    p.add_argument("--alpha", type=float, default=0.01, help="normal-alignment weight")
    p.add_argument("--gamma", type=float, default=0.2, help="collision regret penalty")
    p.add_argument("--levels", type=int, default=4, help="resolution pyramid depth")
    p.add_argument("--penetration", type=float, default=1e-3,
                   help="collision penetration tolerance (m)")
    p.add_argument("--batch", type=int, default=1,
                   help="samples per regret snapshot (>1 evaluates concurrently)")
    p.add_argument("--export-poses", metavar="DIR",
                   help="write posed-gripper PLYs for the top grasps")
    p.add_argument("--top", type=int, default=5, help="how many poses to export")
    p.add_argument("--trace", metavar="FILE",
                   help="write the best grasp's fitting trace as CSV")
    p.add_argument("--log", metavar="FILE", help="write the planning log as CSV")
    p.add_argument("--timing", action="store_true",
                   help="include wall-clock stats in the result file "
                        "(breaks byte-for-byte reproducibility)")
    p.add_argument("--export-matrices", action="store_true",
                   help="also store rotation matrices in the result file")

    f = sub.add_parser("make-fixture", help="write analytic test fixtures",
                       description="Generate analytic point clouds (and the "
                                   "bundled gripper model) for tests and demos.")
    f.add_argument("--kind", required=True, choices=FIXTURE_KINDS)
    f.add_argument("--out", required=True, metavar="DIR", help="output directory")
    f.add_argument("--points", type=int, default=2000)
    f.add_argument("--radius", type=float, default=0.01)
    f.add_argument("--height", type=float, default=0.06)
    f.add_argument("--gap", type=float, default=0.02)
    f.add_argument("--size", type=float, default=0.02)
    return parser


def _cmd_plan(args) -> int:
    if args.samples < 1:
        raise GraspFitError("--samples must be >= 1")
    if args.centers < 1:
        raise GraspFitError("--centers must be >= 1")
    obj = load_object(args.object)
    gripper = load_gripper(args.gripper)
    cfg = IsfConfig(levels=args.levels, normal_weight=args.alpha)
    result = plan(obj, gripper, n_centers=args.centers, n_samples=args.samples,
                  collision_penalty=args.gamma, cfg=cfg, seed=args.seed,
                  penetration=args.penetration, batch_size=args.batch)
    config_echo = {
        "object": args.object, "gripper": args.gripper,
        "n_centers": args.centers, "n_samples": args.samples,
        "collision_penalty": args.gamma, "levels": args.levels,
        "normal_weight": args.alpha, "penetration": args.penetration,
        "batch_size": args.batch,
    }
    save_result(result, args.out, config=config_echo,
                include_timing=args.timing,
                include_matrices=args.export_matrices)
    if args.log:
        write_plan_log_csv(result, args.log)
    if args.export_poses:
        export_pose_plys(result, gripper, args.export_poses, top=args.top)
    if args.trace and result.best is not None:
        best_record = next(r for r in result.records
                           if r.sample_index == result.best.sample_index)
        write_trace_csv(best_record.trace, args.trace)

    free = len(result.collision_free)
    print(f"{free}/{len(result.records)} collision-free grasps "
          f"({result.elapsed:.2f} s) -> {args.out}")
    if free == 0:
        print("no feasible grasp found", file=sys.stderr)
        return 2
    best = result.best
    print(f"best: error {best.fitting_error:.3e}, width {best.width * 1e3:.1f} mm, "
          f"center {best.center_index}")
    return 0


def _cmd_make_fixture(args) -> int:
    import os
    os.makedirs(args.out, exist_ok=True)
    if args.kind == "gripper":
        path = save_gripper(fixtures.default_gripper(), args.out)
    else:
        if args.kind == "cylinder":
            cloud = fixtures.cylinder(radius=args.radius, height=args.height,
                                      n_points=args.points)
        elif args.kind == "plane-pair":
            cloud = fixtures.plane_pair(gap=args.gap, size=args.size)
        elif args.kind == "sphere":
            cloud = fixtures.sphere(radius=args.radius, n_points=args.points)
        else:
            cloud = fixtures.blob_scene(n_points_each=max(1, args.points // 3))
        path = os.path.join(args.out, f"{args.kind}.ply")
        save_ply(path, cloud)
    print(path)
    return 0


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        if args.command == "plan":
            return _cmd_plan(args)
        return _cmd_make_fixture(args)
    except (GraspFitError, OSError, ValueError) as exc:
        print(f"graspfit: error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
