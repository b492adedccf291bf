"""Command line front end.

Three subcommands share one output convention: delimited text plus a JSON
summary in --out-dir, with the run configuration embedded in every file
(a leading ``# config: {...}`` line in CSVs, a ``config`` key in JSON),
and matplotlib figures rendered alongside unless --no-figures is given.

Exit codes: 0 on success, 2 for invalid inputs or configuration, 3 for
numerical failures (optimizer, curve, or chain diagnostics).
"""
from __future__ import annotations

import argparse
import json
import os
import sys
import time
from dataclasses import asdict, dataclass

import numpy as np
from scipy.special import ndtr
from scipy.stats import ks_2samp

from .core import GridPolicy, build_rstar_curve, hota_sample, laplace_marginal_density
from .errors import NumericalError, ValidationError
from .models import build_model, resolve_dataset
from .oracles import MHConfig, exact_linkage_sample, mh_sample
from .priors import PriorSpec, parse_prior
from .summary import SummaryReport, summarize

DEFAULT_FIXTURE = {"linkage": "linkage-paper", "censreg": "motorette", "logistic": "urine"}
DEFAULT_T = 100_000


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run; embedded in all outputs."""

    command: str
    model: str
    data: str
    param: str
    prior: str
    method: str
    T: int
    seed: int
    out_dir: str
    figures: bool

    def to_dict(self) -> dict:
        return asdict(self)


def _slug(text: str) -> str:
    out = "".join(c if c.isalnum() or c in "._-" else "-" for c in text)
    return out.strip("-") or "run"


def _resolve(args) -> tuple:
    data_name = args.data or DEFAULT_FIXTURE[args.model]
    data = resolve_dataset(data_name, args.model)
    model = build_model(args.model, data)
    param = args.param
    if param is None:
        if model.dim == 1:
            param = model.param_names[0]
        else:
            raise ValidationError(
                f"--param is required for the {args.model} model "
                f"(one of {', '.join(model.param_names)})"
            )
    idx = model.param_index(param)
    return model, data, data_name, model.param_names[idx], idx


def _policy(args) -> GridPolicy:
    if getattr(args, "grid_points", None) is None:
        return GridPolicy()
    return GridPolicy(n_grid=args.grid_points)


def _mh_config(args, T: int, seed: int) -> MHConfig:
    scale = None
    if getattr(args, "proposal_scale", None):
        scale = np.asarray([float(v) for v in args.proposal_scale.split(",")], dtype=float)
    return MHConfig(
        iterations=args.burn_in + T * args.thin,
        burn_in=args.burn_in,
        thin=args.thin,
        proposal_scale=scale,
        seed=seed,
    )


def _write_samples_csv(path: str, draws: np.ndarray, config: RunConfig) -> None:
    with open(path, "w") as fh:
        fh.write("# config: " + json.dumps(config.to_dict(), sort_keys=True) + "\n")
        fh.write("psi\n")
        for value in draws:
            fh.write(f"{value:.12e}\n")


def _write_json(path: str, payload: dict) -> None:
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _summary_payload(report: SummaryReport, *, param: str, prior: str,
                     method: str, seed: int) -> dict:
    return {
        "param": param,
        "prior": prior,
        "method": method,
        "mean": report.mean,
        "sd": report.sd,
        "q025": report.q025,
        "median": report.median,
        "q975": report.q975,
        "hpd": [report.hpd[0], report.hpd[1]],
        "T": report.T,
        "seed": seed,
    }


def _print_report(label: str, report: SummaryReport) -> None:
    print(
        f"{label}: mean={report.mean:.4f} sd={report.sd:.4f} "
        f"q025={report.q025:.4f} median={report.median:.4f} q975={report.q975:.4f} "
        f"hpd=[{report.hpd[0]:.4f}, {report.hpd[1]:.4f}]"
    )


def _run_one(method: str, model, data, idx: int, prior: PriorSpec,
             T: int, seed: int, args) -> tuple[np.ndarray, float]:
    """Draw one marginal sample set; returns (draws, elapsed_ms)."""
    t0 = time.perf_counter()
    if method == "hota":
        curve = build_rstar_curve(model, idx, prior, policy=_policy(args))
        sample = hota_sample(curve, T, seed)
        if sample.warning:
            print(f"warning: {sample.warning}", file=sys.stderr)
        draws = sample.draws
    elif method == "exact":
        if model.name != "linkage":
            raise ValidationError("method 'exact' is only available for the linkage model")
        if prior.kind != "flat":
            raise ValidationError("method 'exact' integrates the flat-prior posterior only")
        draws = exact_linkage_sample(T, seed, data).draws
    elif method == "mh":
        joint = mh_sample(model, prior, _mh_config(args, T, seed))
        draws = joint[:, idx]
    else:
        raise ValidationError(f"unknown method {method!r}")
    return draws, (time.perf_counter() - t0) * 1000.0


def cmd_sample(args) -> int:
    t0 = time.perf_counter()
    model, data, data_name, param, idx = _resolve(args)
    prior = parse_prior(args.prior)
    config = RunConfig(
        command="sample", model=args.model, data=data_name, param=param,
        prior=prior.label(), method=args.method, T=args.T, seed=args.seed,
        out_dir=args.out_dir, figures=not args.no_figures,
    )
    draws, _ = _run_one(args.method, model, data, idx, prior, args.T, args.seed, args)
    report = summarize(draws)

    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "samples.csv")
    json_path = os.path.join(args.out_dir, "summary.json")
    _write_samples_csv(csv_path, draws, config)
    payload = _summary_payload(report, param=param, prior=prior.label(),
                               method=args.method, seed=args.seed)
    payload["config"] = config.to_dict()
    _write_json(json_path, payload)
    written = [csv_path, json_path]

    if not args.no_figures:
        from .plots import density_figure, figure_path

        fig_path = figure_path(args.out_dir, "density")
        density_figure(
            draws, fig_path, report=report, param_label=param,
            title=f"{args.model} {param} ({args.method}, prior {prior.label()})",
        )
        written.append(fig_path)

    _print_report(f"{args.model}/{param} {args.method} prior={prior.label()} T={report.T}",
                  report)
    elapsed = (time.perf_counter() - t0) * 1000.0
    print(f"wrote {', '.join(written)} ({elapsed:.0f} ms)")
    return 0


def cmd_compare(args) -> int:
    t0 = time.perf_counter()
    if bool(args.methods) == bool(args.priors):
        raise ValidationError("give exactly one of --methods or --priors")
    model, data, data_name, param, idx = _resolve(args)

    if args.methods:
        methods = [m.strip() for m in args.methods.split(",")]
        if len(methods) != 2 or len(set(methods)) != 2:
            raise ValidationError("--methods takes two distinct names, e.g. hota,mh")
        prior = parse_prior(args.prior)
        plan = [(m, m, prior) for m in methods]
        mode = "methods"
    else:
        labels = [p.strip() for p in args.priors.split(",")]
        if len(labels) != 2 or len(set(labels)) != 2:
            raise ValidationError("--priors takes two distinct specs, e.g. flat,normal:k=35")
        priors = [parse_prior(p) for p in labels]
        plan = [(pr.label(), "hota", pr) for pr in priors]
        mode = "priors"

    config = RunConfig(
        command="compare", model=args.model, data=data_name, param=param,
        prior=";".join(pr.label() for _, _, pr in plan) if mode == "priors" else plan[0][2].label(),
        method=";".join(label for label, _, _ in plan) if mode == "methods" else "hota",
        T=args.T, seed=args.seed, out_dir=args.out_dir, figures=not args.no_figures,
    )

    os.makedirs(args.out_dir, exist_ok=True)
    runs: dict[str, dict] = {}
    timing: dict[str, float] = {}
    drawn: dict[str, np.ndarray] = {}
    written = []
    for label, method, prior in plan:
        draws, ms = _run_one(method, model, data, idx, prior, args.T, args.seed, args)
        report = summarize(draws)
        csv_path = os.path.join(args.out_dir, f"samples_{_slug(label)}.csv")
        _write_samples_csv(csv_path, draws, config)
        written.append(csv_path)
        entry = _summary_payload(report, param=param, prior=prior.label(),
                                 method=method, seed=args.seed)
        entry["samples_csv"] = os.path.basename(csv_path)
        runs[label] = entry
        timing[f"{_slug(label)}_ms"] = ms
        drawn[label] = draws
        _print_report(f"{args.model}/{param} {label} T={report.T}", report)

    (label_a, draws_a), (label_b, draws_b) = drawn.items()
    ks = float(ks_2samp(draws_a, draws_b).statistic)
    payload = {
        "runs": runs,
        "ks_distance": ks,
        "timing": timing,
        "config": config.to_dict(),
    }
    json_path = os.path.join(args.out_dir, "comparison.json")
    _write_json(json_path, payload)
    written.append(json_path)

    if not args.no_figures:
        from .plots import figure_path, overlay_figure

        fig_path = figure_path(args.out_dir, "overlay")
        overlay_figure(
            drawn, fig_path, param_label=param,
            title=f"{args.model} {param}: {label_a} vs {label_b}",
        )
        written.append(fig_path)

    print(f"ks_distance={ks:.5f} " +
          " ".join(f"{k}={v:.0f}" for k, v in timing.items()))
    elapsed = (time.perf_counter() - t0) * 1000.0
    print(f"wrote {', '.join(written)} ({elapsed:.0f} ms)")
    return 0


def cmd_curve(args) -> int:
    t0 = time.perf_counter()
    model, data, data_name, param, idx = _resolve(args)
    prior = parse_prior(args.prior)
    config = RunConfig(
        command="curve", model=args.model, data=data_name, param=param,
        prior=prior.label(), method="hota", T=0, seed=args.seed,
        out_dir=args.out_dir, figures=not args.no_figures,
    )
    curve = build_rstar_curve(model, idx, prior, policy=_policy(args))
    psis = curve.psi_grid
    ell_p = np.asarray(curve.profile.ell_p_spline(psis), dtype=float)
    tail = ndtr(curve.direction * np.asarray(curve.forward(psis), dtype=float))
    if prior.kind == "matching":
        laplace = np.full(psis.shape, np.nan)
    else:
        laplace = laplace_marginal_density(psis, curve.profile, prior)

    os.makedirs(args.out_dir, exist_ok=True)
    csv_path = os.path.join(args.out_dir, "curve.csv")
    with open(csv_path, "w") as fh:
        fh.write("# config: " + json.dumps(config.to_dict(), sort_keys=True) + "\n")
        fh.write("psi,ell_p,r_p,q_b,r_star,tail_prob,laplace_density\n")
        for row in zip(psis, ell_p, curve.r_p, curve.q_b, curve.r_star, tail, laplace):
            fh.write(",".join(f"{v:.12e}" for v in row) + "\n")
    written = [csv_path]

    if not args.no_figures:
        from .plots import curve_figure, figure_path

        # implied sampling density: standard-normal pull-back through the pivot
        slope = np.gradient(curve.r_star, psis)
        implied = np.exp(-0.5 * curve.r_star**2) / np.sqrt(2 * np.pi) * np.abs(slope)
        fig_path = figure_path(args.out_dir, "curve")
        curve_figure(
            psis, curve.r_p, curve.r_star, implied, fig_path, param_label=param,
            title=f"{args.model} {param} pivot diagnostics (prior {prior.label()})",
        )
        written.append(fig_path)

    clamps = []
    if curve.clamped_left:
        clamps.append("left")
    if curve.clamped_right:
        clamps.append("right")
    note = f" clamped at domain boundary: {', '.join(clamps)}" if clamps else ""
    print(
        f"{args.model}/{param} prior={prior.label()}: {psis.size} grid points, "
        f"r* range [{curve.r_range[0]:.3f}, {curve.r_range[1]:.3f}]{note}"
    )
    elapsed = (time.perf_counter() - t0) * 1000.0
    print(f"wrote {', '.join(written)} ({elapsed:.0f} ms)")
    return 0


def _add_common(p: argparse.ArgumentParser, *, with_T: bool) -> None:
    p.add_argument("--model", required=True, choices=("linkage", "censreg", "logistic"),
                   help="which likelihood to use")
    p.add_argument("--data", default=None,
                   help="fixture name (linkage-paper, motorette, urine) or CSV path; "
                        "defaults to the model's fixture")
    p.add_argument("--param", default=None,
                   help="interest parameter, by name or zero-based index")
    p.add_argument("--prior", default="flat",
                   help="flat | normal:k=<float>[,mu0=<float>] | matching")
    if with_T:
        p.add_argument("--T", type=int, default=DEFAULT_T, help="number of draws")
    p.add_argument("--seed", type=int, default=42, help="RNG seed")
    p.add_argument("--out-dir", default="hota_out", help="directory for output files")
    p.add_argument("--no-figures", action="store_true",
                   help="skip rendering PNG figures")
    p.add_argument("--grid-points", type=int, default=None,
                   help="initial profile grid size (default 50)")


def _add_mh_opts(p: argparse.ArgumentParser) -> None:
    p.add_argument("--burn-in", type=int, default=20_000,
                   help="MH burn-in iterations")
    p.add_argument("--thin", type=int, default=10, help="MH thinning stride")
    p.add_argument("--proposal-scale", default=None,
                   help="comma-separated per-coordinate MH step sds "
                        "(disables joint-covariance proposals and adaptation)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hota",
        description="Tail-area posterior sampling for scalar parameters "
                    "with nuisance components",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_sample = sub.add_parser("sample", help="draw from one marginal posterior")
    _add_common(p_sample, with_T=True)
    p_sample.add_argument("--method", default="hota", choices=("hota", "exact", "mh"),
                          help="sampling method (exact: linkage only)")
    _add_mh_opts(p_sample)
    p_sample.set_defaults(func=cmd_sample)

    p_compare = sub.add_parser(
        "compare", help="run two samplers (or two priors) and report the KS distance")
    _add_common(p_compare, with_T=True)
    p_compare.add_argument("--methods", default=None,
                           help="two method names, e.g. hota,mh")
    p_compare.add_argument("--priors", default=None,
                           help="two prior specs, e.g. flat,normal:k=35")
    _add_mh_opts(p_compare)
    p_compare.set_defaults(func=cmd_compare)

    p_curve = sub.add_parser("curve", help="tabulate the pivot curve diagnostics")
    _add_common(p_curve, with_T=False)
    p_curve.set_defaults(func=cmd_curve)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
