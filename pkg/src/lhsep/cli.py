"""Command-line entry points.

Usage:
    lhsep bell-example
    lhsep ghz-scan --n 16 --blocks 1,2,4,8,16 --wh 1:16,2:8 --p-steps 101 --output fig1.csv
    lhsep criterion lambda-sep --state rho.json --partition "B1|B2" --direction z
    lhsep export-state ghz --n 4 --p 0.8 --output ghz.json

Exit status 0 means the criterion was evaluated, whether or not it is
violated; 2 means bad input.
"""

from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from .assemblage import SettingSearch
from .criteria import (
    assisted_entanglement_test,
    format_reports,
    lambda_sep_test,
    reduced_sep_test,
    reid_sep_test,
    steering_test,
    wh_sep_test,
)
from .partitions import parse_partition
from .quantum_core import (
    InvalidStateError,
    LayoutError,
    QubitLayout,
    collective_spin,
    partial_trace,
    read_state,
    unit_vector,
    write_state,
)
from .scenarios import (
    GhzParams,
    build_bell_counterexample,
    build_noisy_ghz,
    fig1_scan,
    scan_to_csv,
)

CRITERIA = ("lambda-sep", "steering", "reduced-sep", "reid", "wh-sep", "assisted")


@dataclass(frozen=True)
class RunConfig:
    subcommand: str
    state_path: Optional[Path] = None
    partition: Optional[str] = None
    direction: tuple = (0.0, 0.0, 1.0)
    n_theta: int = 64
    n_phi: int = 32
    refine_tolerance: float = 1e-6
    output: Optional[Path] = None

    def __post_init__(self):
        if self.n_theta < 2 or self.n_phi < 2:
            raise ValueError("search resolutions must be >= 2")
        if not self.refine_tolerance > 0:
            raise ValueError("refine tolerance must be positive")

    def search(self) -> SettingSearch:
        return SettingSearch(self.n_theta, self.n_phi, refine_tolerance=self.refine_tolerance)


def parse_direction(text: str) -> tuple:
    """``x``, ``y``, ``z``, ``theta,phi`` in radians, or an explicit ``nx,ny,nz`` unit vector."""
    text = text.strip()
    if text.lower() in ("x", "y", "z"):
        return tuple(unit_vector(text.lower()))
    parts = [float(p) for p in text.split(",")]
    if not all(math.isfinite(v) for v in parts):
        raise ValueError(f"direction components must be finite, got {text!r}")
    if len(parts) == 3:
        return tuple(float(v) for v in unit_vector(parts))
    if len(parts) != 2:
        raise ValueError(f"direction must be x, y, z, 'theta,phi' or 'nx,ny,nz', got {text!r}")
    theta, phi = parts
    return (math.sin(theta) * math.cos(phi), math.sin(theta) * math.sin(phi), math.cos(theta))


def _int_list(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _wh_list(text: str) -> list[tuple[int, int]]:
    out = []
    for item in text.split(","):
        if not item.strip():
            continue
        w, h = item.split(":")
        out.append((int(w), int(h)))
    return out


def _emit(text: str, output: Optional[Path]) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        Path(output).write_text(text)


def _add_search_args(p: argparse.ArgumentParser) -> None:
    p.add_argument("--n-theta", type=int, default=64, help="polar grid points for Alice's setting")
    p.add_argument("--n-phi", type=int, default=32, help="azimuthal grid points for Alice's setting")
    p.add_argument("--refine-tol", type=float, default=1e-6, help="pattern-search step floor (radians)")
    p.add_argument("--output", type=Path, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="lhsep", description="Criteria for separable local-hidden-state models.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("bell-example", help="reports for the Bell-pair counterexample")
    _add_search_args(p)

    p = sub.add_parser("ghz-scan", help="analytic noisy-GHZ bounds as CSV")
    p.add_argument("--n", type=int, default=16)
    p.add_argument("--blocks", type=_int_list, default=[1, 2, 4, 8, 16], help="block counts k, e.g. 1,2,4")
    p.add_argument("--wh", type=_wh_list, default=[(1, 16), (16, 1)], help="(w,h) pairs, e.g. 1:16,2:8")
    p.add_argument("--p-steps", type=int, default=101)
    p.add_argument("--output", type=Path, default=None)

    p = sub.add_parser("criterion", help="evaluate one criterion on a state file")
    p.add_argument("name", choices=CRITERIA)
    p.add_argument("--state", type=Path, required=True, help="state document (parties, matrix_re, matrix_im)")
    p.add_argument("--a-party", default="A", help="label of the untrusted qubit")
    p.add_argument("--partition", default=None, help='blocks of Bob\'s parties, e.g. "B1|B2"')
    p.add_argument("--direction", default="z", help="generator axis: x, y, z, theta,phi or nx,ny,nz")
    p.add_argument("--meas-direction", default="y", help="axis of the measured collective spin (reid)")
    p.add_argument("--w", type=int, default=None)
    p.add_argument("--h", type=int, default=None)
    p.add_argument("--cut", default=None, help="one side of Bob's bipartition, e.g. B1 (assisted)")
    _add_search_args(p)

    p = sub.add_parser("export-state", help="write a scenario state document")
    p.add_argument("scenario", choices=("bell", "ghz"))
    p.add_argument("--n", type=int, default=4)
    p.add_argument("--p", type=float, default=1.0)
    p.add_argument("--phi", type=float, default=0.0)
    p.add_argument("--output", type=Path, required=True)
    return parser


def cmd_bell_example(config: RunConfig) -> str:
    rho = build_bell_counterexample()
    search = config.search()
    partition = parse_partition("B1|B2")
    reports = [
        lambda_sep_test(rho, "A", partition, "z", search),
        steering_test(rho, "A", "z", search),
        reduced_sep_test(partial_trace(rho, ["B1", "B2"]), partition, "z"),
        assisted_entanglement_test(rho, "A", ["B1"], search),
    ]
    return format_reports(reports)


def cmd_ghz_scan(n: int, blocks: Sequence[int], wh: Sequence[tuple[int, int]], p_steps: int) -> str:
    return scan_to_csv(fig1_scan(n, blocks, wh, p_steps))


def cmd_criterion(config: RunConfig, name: str, a_party: str, **opts) -> str:
    rho = read_state(config.state_path)
    rho.layout.index(a_party)
    bob = QubitLayout(tuple(p for p in rho.layout.parties if p != a_party))
    search = config.search()
    direction = config.direction

    def partition():
        if config.partition is None:
            raise ValueError(f"criterion {name} needs --partition")
        part = parse_partition(config.partition)
        if not part.covers(bob.parties):
            raise LayoutError(f"partition {config.partition!r} does not match Bob's parties {bob.parties}")
        return part

    if name == "lambda-sep":
        report = lambda_sep_test(rho, a_party, partition(), direction, search)
    elif name == "steering":
        report = steering_test(rho, a_party, direction, search)
    elif name == "reduced-sep":
        report = reduced_sep_test(partial_trace(rho, bob.parties), partition(), direction)
    elif name == "reid":
        meas = collective_spin(bob, opts["meas_direction"])
        report = reid_sep_test(rho, a_party, partition(), direction, meas, search)
    elif name == "wh-sep":
        if opts.get("w") is None or opts.get("h") is None:
            raise ValueError("wh-sep needs --w and --h")
        report = wh_sep_test(rho, a_party, opts["w"], opts["h"], search)
    elif name == "assisted":
        if not opts.get("cut"):
            raise ValueError("assisted needs --cut")
        report = assisted_entanglement_test(rho, a_party, opts["cut"].split(","), search)
    else:
        raise ValueError(f"unknown criterion {name!r}")
    return report.to_text()


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "ghz-scan":
            _emit(cmd_ghz_scan(args.n, args.blocks, args.wh, args.p_steps), args.output)
            return 0
        if args.command == "export-state":
            if args.scenario == "bell":
                state = build_bell_counterexample()
            else:
                state = build_noisy_ghz(GhzParams(args.n, args.p, args.phi))
            write_state(args.output, state)
            return 0
        config = RunConfig(
            subcommand=args.command,
            state_path=getattr(args, "state", None),
            partition=getattr(args, "partition", None),
            direction=parse_direction(getattr(args, "direction", "z")),
            n_theta=args.n_theta,
            n_phi=args.n_phi,
            refine_tolerance=args.refine_tol,
            output=args.output,
        )
        if args.command == "bell-example":
            _emit(cmd_bell_example(config), config.output)
        else:
            text = cmd_criterion(
                config,
                args.name,
                args.a_party,
                meas_direction=parse_direction(args.meas_direction),
                w=args.w,
                h=args.h,
                cut=args.cut,
            )
            _emit(text, config.output)
    except InvalidStateError as exc:
        print(f"error: invalid state: {exc}", file=sys.stderr)
        return 2
    except (LayoutError, ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())
