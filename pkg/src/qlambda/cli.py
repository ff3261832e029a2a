"""Command-line driver: simulations, amplitude evaluations, and scans.

Subcommands: lambda-sim, compton, moller, vacpol, boost-scan. Every command
is deterministic for a given configuration; repeated runs produce
byte-identical artifacts. Exit codes: 0 success, 2 configuration error,
3 integration guard, 4 physics-domain error, 5 convergence guard.
"""
from __future__ import annotations

import argparse
import io
import math
import os
import sys

import numpy as np

from . import amplitudes, dynamics, vacuum
from .errors import ConfigError, GridTooCoarse, PhysicsDomainError, StepTooLarge
from .jsonio import dump_json
from .lorentz import CONSTANT_KEYS, Boost, Constants, load_constants


def _resolve_constants(args) -> Constants:
    constants = load_constants(args.config) if args.config else Constants()
    if args.constant:
        overrides = {}
        for key, value in args.constant:
            try:
                overrides[key] = float(value)
            except ValueError as exc:
                raise ConfigError(f"constant override {key!r} needs a number: {value!r}") from exc
        # flags win over the config file
        base = {k: getattr(constants, k) for k in CONSTANT_KEYS}
        unknown = sorted(set(overrides) - set(base))
        if unknown:
            raise ConfigError(f"unknown constants key {unknown[0]!r}")
        base.update(overrides)
        constants = Constants(**base)
    return constants


def _thread_cap() -> int:
    raw = os.environ.get("QLAMBDA_THREADS")
    if raw is None:
        return 1
    try:
        value = int(raw)
    except ValueError as exc:
        raise ConfigError(f"QLAMBDA_THREADS must be an integer, got {raw!r}") from exc
    if value < 1:
        raise ConfigError(f"QLAMBDA_THREADS must be >= 1, got {value}")
    return value


def _write_text(path: str, text: str) -> None:
    try:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    except OSError as exc:
        raise ConfigError(f"cannot write {path!r}: {exc}") from exc


def _amplitude_csv(doc: dict) -> str:
    lines = ["key,value"]

    def emit(prefix: str, value) -> None:
        if isinstance(value, dict):
            for k, v in value.items():
                emit(f"{prefix}.{k}" if prefix else str(k), v)
        elif isinstance(value, (list, tuple)):
            if all(isinstance(v, (int, float)) for v in value):
                lines.append(f"{prefix},{';'.join(f'{float(v):.17g}' for v in value)}")
            else:
                for i, v in enumerate(value):
                    emit(f"{prefix}[{i}]", v)
        elif isinstance(value, float):
            lines.append(f"{prefix},{value:.17g}")
        else:
            lines.append(f"{prefix},{value}")

    emit("", doc)
    return "\n".join(lines) + "\n"


def _emit_result_doc(doc: dict, out: str, fmt: str) -> None:
    if fmt == "csv":
        _write_text(out, _amplitude_csv(doc))
    else:
        _write_text(out, dump_json(doc))


def cmd_lambda_sim(args) -> int:
    constants = _resolve_constants(args)
    try:
        with open(args.system, "r", encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read system file {args.system!r}: {exc}") from exc
    system = dynamics.LevelSystem.from_json(text)
    n = system.n_levels
    start = args.initial_level - 1
    target = (args.target_level if args.target_level is not None else n) - 1
    if not (0 <= start < n and 0 <= target < n):
        raise ConfigError("initial/target level out of range")
    psi0 = np.zeros(n, dtype=complex)
    psi0[start] = 1.0

    effective = dynamics.magnus_second_order(system, hbar=constants.hbar)
    analytic = complex(effective.matrix[target, start])

    t_final = args.t_final
    if t_final is None:
        if analytic == 0.0:
            raise ConfigError("no effective coupling; give --t-final explicitly")
        t_final = 1.05 * math.pi * constants.hbar / (2.0 * abs(analytic))
    dt = args.dt if args.dt is not None else t_final / 4096.0

    trajectory = dynamics.evolve(system, psi0, t_final, dt, hbar=constants.hbar)
    buffer = io.StringIO()
    trajectory.write_csv(buffer)
    _write_text(args.out, buffer.getvalue())

    populations = trajectory.populations()[:, target]
    fitted = _fit_rabi_rate(trajectory.times, populations, constants.hbar)
    deviation = None if analytic == 0.0 else abs(fitted - abs(analytic)) / abs(analytic)
    summary = {
        "analytic_coupling": [analytic.real, analytic.imag],
        "fitted_rate": fitted,
        "relative_deviation": deviation,
        "period": effective.period,
        "t_final": float(t_final),
        "dt": float(dt),
        "target_level": target + 1,
    }
    _write_text(args.summary, dump_json(summary))
    return 0


def _fit_rabi_rate(times: np.ndarray, populations: np.ndarray, hbar: float) -> float:
    """Rate from the first transfer maximum, with parabolic peak refinement."""
    idx = int(np.argmax(populations))
    if idx == 0:
        return 0.0
    if 0 < idx < len(times) - 1:
        y0, y1, y2 = populations[idx - 1 : idx + 2]
        denom = y0 - 2.0 * y1 + y2
        offset = 0.0 if denom == 0.0 else 0.5 * (y0 - y2) / denom
        t_peak = times[idx] + offset * (times[1] - times[0])
    else:
        t_peak = times[idx]
    return math.pi * hbar / (2.0 * t_peak)


def _beta_from_args(args) -> Boost | None:
    if args.beta == 0.0:
        return None
    return Boost.along_z(args.beta)


def cmd_compton(args) -> int:
    constants = _resolve_constants(args)
    from .lorentz import compton_cm_kinematics, compton_kinematics

    frame = _beta_from_args(args)
    maker = compton_cm_kinematics if args.frame == "cm" else compton_kinematics
    vectors = maker(args.photon_energy, args.theta, frame, m=constants.m_e)
    result = amplitudes.compton_total(
        *vectors,
        spins=tuple(args.spins),
        pols=tuple(args.pols),
        constants=constants,
        frame=frame,
    )
    _emit_result_doc(result.to_json_dict(), args.out, args.format)
    return 0


def cmd_moller(args) -> int:
    constants = _resolve_constants(args)
    from .lorentz import moller_kinematics

    frame = _beta_from_args(args)
    vectors = moller_kinematics(args.e_cm, args.theta, frame, m=constants.m_e)
    result = amplitudes.moller_total(
        *vectors, spins=tuple(args.spins), constants=constants, frame=frame
    )
    _emit_result_doc(result.to_json_dict(), args.out, args.format)
    return 0


def cmd_vacpol(args) -> int:
    constants = _resolve_constants(args)
    grid = vacuum.GridSpec(
        n_radial=args.n_radial, n_theta=args.n_theta, n_phi=args.n_phi
    )
    k3 = np.array(args.k, dtype=float)
    shift, report = vacuum.total_shift(
        k3,
        args.cutoff,
        grid,
        constants,
        photon_energy=args.photon_energy,
        refine_tol=args.refine_tol,
        n_threads=_thread_cap(),
    )
    buffer = io.StringIO()
    report.write_csv(buffer)
    _write_text(args.out, buffer.getvalue())
    summary = {
        "pair_shift": shift,
        "fitted_slope": report.fitted_slope,
        "cutoff": float(args.cutoff),
        "photon_energy": args.photon_energy
        if args.photon_energy is not None
        else float(np.linalg.norm(k3)),
        "grid": {
            "n_radial": grid.n_radial,
            "n_theta": grid.n_theta,
            "n_phi": grid.n_phi,
        },
    }
    _write_text(args.summary, dump_json(summary))
    return 0


def cmd_boost_scan(args) -> int:
    constants = _resolve_constants(args)
    for b in args.betas:
        if not 0.0 <= b < 1.0:
            raise ConfigError(f"beta values must lie in [0, 1), got {b!r}")
    table = amplitudes.boost_scan(
        args.process,
        args.betas,
        normalization=args.normalization,
        constants=constants,
        photon_energy=args.photon_energy,
        e_cm=args.e_cm,
        theta=args.theta,
    )
    buffer = io.StringIO()
    table.write_csv(buffer)
    _write_text(args.out, buffer.getvalue())
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qlambda",
        description="Few-level effective couplings, scattering amplitudes, and "
        "momentum-sum convergence diagnostics.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON file with flat constants keys")
        p.add_argument(
            "--constant",
            nargs=2,
            action="append",
            metavar=("KEY", "VALUE"),
            help="override one constant (repeatable; wins over --config)",
        )
        p.add_argument("--format", choices=("csv", "json"), default="json")

    p = sub.add_parser("lambda-sim", help="evolve a level system and fit the transfer rate")
    common(p)
    p.add_argument("--system", required=True, help="LevelSystem JSON file")
    p.add_argument("--t-final", type=float, default=None)
    p.add_argument("--dt", type=float, default=None)
    p.add_argument("--initial-level", type=int, default=1)
    p.add_argument("--target-level", type=int, default=None)
    p.add_argument("--out", default="trajectory.csv")
    p.add_argument("--summary", default="lambda_summary.json")
    p.set_defaults(func=cmd_lambda_sim)

    p = sub.add_parser("compton", help="photon-electron scattering amplitude")
    common(p)
    p.add_argument("--photon-energy", type=float, default=1.0)
    p.add_argument("--theta", type=float, default=math.pi / 3.0)
    p.add_argument("--beta", type=float, default=0.0, help="z boost applied to the kinematics")
    p.add_argument("--frame", choices=("cm", "rest"), default="cm")
    p.add_argument("--spins", type=int, nargs=2, default=(1, 1))
    p.add_argument("--pols", type=int, nargs=2, default=(1, 1))
    p.add_argument("--out", default="amplitude.json")
    p.set_defaults(func=cmd_compton)

    p = sub.add_parser("moller", help="electron-electron exchange amplitude")
    common(p)
    p.add_argument("--e-cm", type=float, default=4.0)
    p.add_argument("--theta", type=float, default=math.pi / 3.0)
    p.add_argument("--beta", type=float, default=0.0)
    p.add_argument("--spins", type=int, nargs=4, default=(1, 1, 1, 1))
    p.add_argument("--out", default="amplitude.json")
    p.set_defaults(func=cmd_moller)

    p = sub.add_parser("vacpol", help="pair-shift momentum integral with convergence report")
    common(p)
    p.add_argument("--k", type=float, nargs=3, default=(0.0, 0.0, 0.5), metavar=("KX", "KY", "KZ"))
    p.add_argument("--cutoff", type=float, default=1e4)
    p.add_argument("--photon-energy", type=float, default=None,
                   help="off-shell photon energy; defaults to |k|")
    p.add_argument("--n-radial", type=int, default=96)
    p.add_argument("--n-theta", type=int, default=16)
    p.add_argument("--n-phi", type=int, default=8)
    p.add_argument("--refine-tol", type=float, default=0.01)
    p.add_argument("--out", default="convergence.csv")
    p.add_argument("--summary", default="vacpol_summary.json")
    p.set_defaults(func=cmd_vacpol)

    p = sub.add_parser("boost-scan", help="amplitude magnitude across boosted frames")
    common(p)
    p.add_argument("--process", choices=("compton", "moller"), required=True)
    p.add_argument("--betas", type=float, nargs="+", default=[0.0, 0.3, 0.6, 0.9])
    p.add_argument("--normalization", choices=("box", "covariant"), default="box")
    p.add_argument("--photon-energy", type=float, default=1.0)
    p.add_argument("--e-cm", type=float, default=4.0)
    p.add_argument("--theta", type=float, default=math.pi / 3.0)
    p.add_argument("--out", default="boost_scan.csv")
    p.set_defaults(func=cmd_boost_scan)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return 2
    except StepTooLarge as exc:
        print(f"integration guard: {exc}", file=sys.stderr)
        return 3
    except GridTooCoarse as exc:
        print(f"convergence guard: {exc}", file=sys.stderr)
        return 5
    except PhysicsDomainError as exc:
        context = ", ".join(
            f"{name}={getattr(args, name)}"
            for name in ("photon_energy", "e_cm", "theta", "beta", "k", "cutoff")
            if getattr(args, name, None) is not None
        )
        print(f"physics domain error: {exc} [{context}]", file=sys.stderr)
        return 4


if __name__ == "__main__":
    raise SystemExit(main())
