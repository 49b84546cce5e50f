"""Command-line front end.

    spucsim run <scenario> [--out DIR] [--seed N] [--spuc-ratio R] [--quiet]
    spucsim validate <scenario>
    spucsim tuning-curve <crystal> <pump-nm> [--cut-angle DEG] [--pump-incidence DEG] ...

``<scenario>`` is a scenario file or the name of a shipped one (argon789,
yag1064, normal789).  Exit codes: 0 success, 1 invalid configuration,
2 physics/runtime error (e.g. phase matching impossible), 3 I/O error.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import replace

import numpy as np

from .dispersion import CrystalSpec, DispersionError, load_dispersion
from .kinematics import (BeamSpec, PhaseMatchError, angle_between, direction_from_angles, exit_beam,
                         idler_wavelength, solve_emission_angles)
from .scenario import ScenarioError, emit_outputs, load_scenario, run_scenario

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 1, 2, 3


def _build_parser():
    parser = argparse.ArgumentParser(prog="spucsim", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a scenario and write frames, profiles and the limit report")
    run.add_argument("scenario")
    run.add_argument("--out", default=".", help="output directory (default: current directory)")
    run.add_argument("--seed", type=int, help="override the scenario seed")
    run.add_argument("--spuc-ratio", type=float, help="override the injected SPUC/SPDC intensity ratio")
    run.add_argument("--quiet", action="store_true", help="print nothing on success")

    val = sub.add_parser("validate", help="check a scenario file without running it")
    val.add_argument("scenario")
    val.add_argument("--quiet", action="store_true")

    tc = sub.add_parser("tuning-curve", help="tabulate emission angles against signal wavelength")
    tc.add_argument("crystal", help="dispersion table name or path")
    tc.add_argument("pump", type=float, help="pump wavelength, nm")
    tc.add_argument("--cut-angle", type=float, default=51.0, help="degrees (default 51)")
    tc.add_argument("--pump-incidence", type=float, default=0.0,
                    help="external pump angle from the face normal, degrees, tilted away from the optic axis")
    tc.add_argument("--start", type=float, help="first signal wavelength, nm (default 2 x pump)")
    tc.add_argument("--stop", type=float, help="last signal wavelength, nm (default 3.2 x pump)")
    tc.add_argument("--step", type=float, default=10.0, help="wavelength step, nm")
    tc.add_argument("--quiet", action="store_true")
    return parser


def _tuning_curve(args, out):
    model = load_dispersion(args.crystal)
    crystal = CrystalSpec(model, args.cut_angle)
    pump = BeamSpec(args.pump, direction_from_angles(args.pump_incidence, 180.0))
    start = args.start if args.start is not None else 2.0 * args.pump
    stop = args.stop if args.stop is not None else 3.2 * args.pump
    if args.step <= 0 or stop < start:
        raise ScenarioError("tuning curve needs step > 0 and stop >= start")
    out.write("# signal_nm\tidler_nm\tsignal_int_deg\tidler_int_deg\tsignal_ext_deg\tidler_ext_deg\tresidual\n"
              "# internal angles from the pump inside the crystal; external angles from the pump in air\n")
    for wl in np.arange(start, stop + 0.5 * args.step, args.step):
        wl = float(wl)
        if wl <= args.pump:
            continue
        try:
            sol = solve_emission_angles(crystal, pump, wl)
        except PhaseMatchError:
            out.write(f"{wl:.3f}\t{idler_wavelength(args.pump, wl):.3f}\tnan\tnan\tnan\tnan\tnan\n")
            continue
        ext = [math.degrees(angle_between(exit_beam(b, crystal).direction, pump.direction))
               for b in (sol.signal, sol.idler)]
        t2, t3 = (math.degrees(a) for a in sol.internal_angles)
        out.write(f"{wl:.3f}\t{sol.idler.wavelength:.3f}\t{t2:.6f}\t{t3:.6f}\t{ext[0]:.6f}\t{ext[1]:.6f}"
                  f"\t{sol.residual:.2e}\n")


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    say = (lambda *a: None) if args.quiet else print
    try:
        if args.command == "tuning-curve":
            _tuning_curve(args, sys.stdout)
            return EXIT_OK
        scenario = load_scenario(args.scenario)
        if args.command == "validate":
            say(f"{scenario.name}: ok")
            return EXIT_OK
        if args.seed is not None:
            scenario = replace(scenario, seed=args.seed)
        if args.spuc_ratio is not None:
            scenario = replace(scenario, spuc_ratio=args.spuc_ratio)
        scenario.validate()
        result = run_scenario(scenario)
        files = emit_outputs(result, args.out)
        say(f"{scenario.name}: {result.report.summary()}")
        for path in files:
            say(f"  wrote {path}")
        return EXIT_OK
    except (ScenarioError, DispersionError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (PhaseMatchError, ValueError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
