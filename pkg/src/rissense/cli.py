"""Command-line interface: point evaluations and reproducible sweeps.

Exit codes: 0 success, 2 configuration/usage error, 3 numerical failure
(singular information or a failed trend assertion).
"""

from __future__ import annotations

import argparse
import json
import sys
from importlib import resources

import numpy as np

from . import __version__
from .cooperation import CooperationPlan, efim_plan
from .detection import DetectionConfig, detection_probability
from .estimation import ml_single_path, position_from_measurements
from .channel import differential_signal
from .fisher import SingularFimError, crlb, efim_position, peb, position_fim
from .scenario import ConfigError, Scenario, link_state, load_scenario
from .sweeps import (
    TrendError,
    run_deployment,
    run_detection_fig10,
    run_detection_fig9,
    run_fig4,
    run_fig5,
    run_fig6,
    run_rmse7,
    run_self_error,
)
from .utils import rng_stream

_SWEEPS = ("fig4", "fig5", "fig6", "deploy", "selferr", "detect9", "detect10", "rmse7")
_STOCHASTIC_SWEEPS = ("selferr", "detect9", "detect10", "rmse7")
_DEFAULT_SCENARIO = {
    "peb": "baseline.toml",
    "ellipsoid": "baseline.toml",
    "cooperate": "deploy.toml",
    "detect": "detect9.toml",
    "estimate": "rmse7.toml",
}


def _packaged_scenario(name: str):
    return resources.files("rissense").joinpath("scenarios", name)


def _load(args, command: str) -> Scenario:
    if args.scenario is not None:
        return load_scenario(args.scenario)
    ref = _packaged_scenario(_DEFAULT_SCENARIO[command])
    with resources.as_file(ref) as path:
        return load_scenario(path)


def _write_json(payload: dict, out):
    text = json.dumps(payload, indent=1, sort_keys=True)
    if out:
        with open(out, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    else:
        print(text)


def _cmd_peb(args) -> int:
    scenario = _load(args, "peb")
    ell = efim_position(scenario)
    pairs = scenario.instants - 1
    single = ell.peb()
    budget = float(np.sqrt(crlb(pairs * ell.matrix(), allow_singular=True)))
    payload = {
        "scenario": scenario.digest(),
        "peb_single_pair_m": single,
        "peb_with_instants_m": budget,
        "instants": scenario.instants,
        "crlb_single_pair_m2": ell.crlb(),
    }
    _write_json(payload, args.out)
    return 0


def _cmd_ellipsoid(args) -> int:
    scenario = _load(args, "ellipsoid")
    ell = efim_position(scenario)
    payload = {
        "scenario": scenario.digest(),
        "u_tau": ell.u_tau.tolist(),
        "u_az": ell.u_az.tolist(),
        "u_el": ell.u_el.tolist(),
        "rii": ell.rii,
        "aii_az": ell.aii_az,
        "aii_el": ell.aii_el,
        "peb_m": ell.peb(),
    }
    _write_json(payload, args.out)
    return 0


def _cmd_cooperate(args) -> int:
    scenario = _load(args, "cooperate")
    plan = CooperationPlan(receivers=scenario.receivers, instants=scenario.instants)
    total = efim_plan(scenario, plan)
    per_receiver = []
    for node in scenario.receivers:
        from .cooperation import efim_with_self_error

        contribution = efim_with_self_error(scenario, node)
        per_receiver.append(
            {
                "position": node.position.tolist(),
                "anchor": node.is_anchor,
                "peb_m": float(np.sqrt(crlb(contribution, allow_singular=True))),
            }
        )
    payload = {
        "scenario": scenario.digest(),
        "receivers": per_receiver,
        "network_peb_m": float(np.sqrt(crlb(total, allow_singular=True))),
        "instants": scenario.instants,
    }
    _write_json(payload, args.out)
    return 0


def _cmd_detect(args) -> int:
    scenario = _load(args, "detect")
    config = DetectionConfig(p_fa=args.p_fa, trials=args.trials)
    rng = rng_stream(args.seed, 0xDE)
    out = detection_probability(scenario, args.deform, config, rng)
    payload = {
        "scenario": scenario.digest(),
        "seed": args.seed,
        "deformation_m": list(args.deform),
        "threshold": out.threshold,
        "median_wald": out.wald,
        "decision": out.decision.value,
        "posterior_u": out.posterior_u,
        "posterior_d": out.posterior_d,
        "p_detect": out.p_detect,
        "ci": [out.ci_low, out.ci_high],
        "trials": out.trials,
    }
    _write_json(payload, args.out)
    return 0


def _cmd_estimate(args) -> int:
    scenario = _load(args, "estimate")
    rng = rng_stream(args.seed, 0xE57)
    snap = differential_signal(scenario, rng=rng)
    result = ml_single_path(snap, scenario)
    link = link_state(scenario)
    r_hat = position_from_measurements(
        result.tau_hat, result.az_hat, result.el_hat,
        scenario.rx_position(), link.path.tau_tr,
    )
    payload = {
        "scenario": scenario.digest(),
        "seed": args.seed,
        "tau_hat_s": result.tau_hat,
        "az_hat_rad": result.az_hat,
        "el_hat_rad": result.el_hat,
        "gain_hat": [result.gain_hat.real, result.gain_hat.imag],
        "converged": result.converged,
        "iterations": result.iterations,
        "residual_energy": result.residual_energy,
        "position_hat_m": r_hat.tolist(),
        "position_error_m": float(np.linalg.norm(r_hat - scenario.actual_pose().position)),
        "truth": {
            "tau_s": link.path.tau_r,
            "az_rad": link.path.rx_aoa_az,
            "el_rad": link.path.rx_aoa_el,
        },
    }
    _write_json(payload, args.out)
    return 0


def _cmd_sweep(args) -> int:
    strict = not args.no_strict
    name = args.name
    if name == "fig4":
        result = run_fig4(strict=strict)
    elif name == "fig5":
        result = run_fig5(strict=strict)
    elif name == "fig6":
        result = run_fig6(strict=strict)
    elif name == "deploy":
        result = run_deployment(strict=strict)
    elif name == "selferr":
        result = run_self_error(seed=args.seed, strict=strict)
    elif name == "detect9":
        result = run_detection_fig9(seed=args.seed, trials=args.trials or 2000, strict=strict)
    elif name == "detect10":
        result = run_detection_fig10(seed=args.seed, trials=args.trials or 2000, strict=strict)
    elif name == "rmse7":
        result = run_rmse7(seed=args.seed, trials=args.trials or 200, strict=strict)
    else:  # pragma: no cover - argparse restricts choices
        raise ConfigError(f"unknown sweep {name!r}")
    if args.seed is not None:
        result.metadata["seed"] = args.seed
    if args.out.endswith(".json"):
        result.to_json(args.out)
    else:
        result.to_csv(args.out)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="rissense",
        description="RIS-aided sensing bounds, estimation, and deformation detection",
    )
    parser.add_argument("--version", action="version", version=f"rissense {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, scenario=True):
        if scenario:
            p.add_argument("--scenario", help="scenario TOML file (defaults to a packaged one)")
        p.add_argument("--out", help="output file (.json; sweeps also accept .csv)")

    p = sub.add_parser("peb", help="position error bound for a scenario")
    common(p)
    p = sub.add_parser("ellipsoid", help="information-ellipsoid directions and intensities")
    common(p)
    p = sub.add_parser("cooperate", help="network PEB over the scenario's receivers")
    common(p)

    p = sub.add_parser("detect", help="Monte-Carlo deformation detection probability")
    common(p)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--deform", type=float, nargs=3, default=[0.0, 0.0, 5e-3], metavar=("X", "Y", "Z"))
    p.add_argument("--trials", type=int, default=2000)
    p.add_argument("--p-fa", type=float, default=1e-2, dest="p_fa")

    p = sub.add_parser("estimate", help="single-snapshot delay/angle/position estimate")
    common(p)
    p.add_argument("--seed", type=int, required=True)

    p = sub.add_parser("sweep", help="run a canonical parameter sweep")
    p.add_argument("name", choices=_SWEEPS)
    p.add_argument("--out", required=True, help="output CSV or JSON file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--trials", type=int, default=None)
    p.add_argument("--no-strict", action="store_true", help="downgrade trend assertions to warnings")
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.command == "sweep" and args.name in _STOCHASTIC_SWEEPS and args.seed is None:
        parser.error(f"sweep {args.name} is stochastic: --seed is required")

    handlers = {
        "peb": _cmd_peb,
        "ellipsoid": _cmd_ellipsoid,
        "cooperate": _cmd_cooperate,
        "detect": _cmd_detect,
        "estimate": _cmd_estimate,
        "sweep": _cmd_sweep,
    }
    try:
        return handlers[args.command](args)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (SingularFimError, TrendError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
