"""Command-line front end.

Subcommands: run, sweep, ablate-mu, compare, verify {lemma1,rate,hutchinson}.
Every subcommand takes --config FILE (JSON), --out DIR, --seed N (overrides
the config's base_seed), and --threads N (falls back to DIAGOCP_THREADS,
then 1). Exit codes: 0 success / check passed, 1 verification check failed,
2 configuration or runtime error (a JSON error line goes to stderr).

Config documents are flat JSON objects:

  run / sweep / ablate-mu:
    {"problem": {"kind": "quadratic", ...},
     "optimizer": {"kind": "diag_ocp", "alpha": 0.05, ...},
     "max_steps": 200, "base_seed": 7, "n_seeds": 3, "record_every": 1}
  sweep adds      {"sweep": {"coarse_grid": [...], "refine_factors": [...],
                             "metric": "min_val"}}
  ablate-mu adds  {"mu_values": [...], "control_clip_lo": 1e-12}
  compare swaps "optimizer" for "optimizers": [{...}, ...] and takes "sweep"
  (entries may omit lr/alpha there; the sweep sets it)
  verify reads its check's knobs (trials/tol, T_list/n_seeds/ratio_threshold,
  n_probes/dim/tol) and runs on defaults when --config is omitted.

Problem and optimizer sub-objects accept every keyword of the matching
constructor; "kind" selects it.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from pathlib import Path

from .baselines import BASELINE_KINDS, BaselineConfig
from .diag_ocp import OptimizerConfig
from .harness import (RunConfig, SweepSpec, ablate_mu, compare,
                      emit_ablation, emit_heatmap, emit_results, emit_sweep,
                      lr_sweep, run_experiment,
                      verify_closed_form_equivalence,
                      verify_probe_unbiasedness, verify_rate_trend)
from .problems import make_problem


def _load_config(path: str | None) -> dict:
    if path is None:
        raise ValueError("--config is required for this subcommand")
    with open(path) as fh:
        doc = json.load(fh)
    if not isinstance(doc, dict):
        raise ValueError("config must be a JSON object")
    return doc


def _build_problem(doc):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValueError("problem config needs a 'kind' key")
    params = {k: v for k, v in doc.items() if k != "kind"}
    return make_problem(doc["kind"], **params)


def _build_optimizer(doc):
    if not isinstance(doc, dict) or "kind" not in doc:
        raise ValueError("optimizer config needs a 'kind' key")
    kind = doc["kind"]
    params = {k: v for k, v in doc.items() if k != "kind"}
    if kind == "diag_ocp":
        return kind, OptimizerConfig(**params)
    if kind in BASELINE_KINDS:
        return kind, BaselineConfig(kind=kind, **params)
    raise ValueError(f"unknown optimizer kind {kind!r}")


def _build_run(doc: dict, seed_override: int | None) -> RunConfig:
    problem = _build_problem(doc.get("problem"))
    key, opt_cfg = _build_optimizer(doc.get("optimizer"))
    base_seed = seed_override if seed_override is not None else doc.get("base_seed", 0)
    return RunConfig(problem=problem, optimizer=key, opt_cfg=opt_cfg,
                     max_steps=int(doc.get("max_steps", 100)),
                     base_seed=int(base_seed),
                     n_seeds=int(doc.get("n_seeds", 1)),
                     record_every=int(doc.get("record_every", 1)),
                     x0=doc.get("x0"))


def _build_sweep_spec(doc: dict) -> SweepSpec:
    sw = doc.get("sweep", {})
    if not isinstance(sw, dict):
        raise ValueError("'sweep' must be a JSON object")
    kwargs = {}
    if "coarse_grid" in sw:
        kwargs["coarse_grid"] = tuple(sw["coarse_grid"])
    if "refine_factors" in sw:
        kwargs["refine_factors"] = tuple(sw["refine_factors"])
    if "metric" in sw:
        kwargs["metric"] = sw["metric"]
    return SweepSpec(**kwargs)


def _resolve_threads(args) -> int:
    if getattr(args, "threads", None) is not None:
        return max(1, int(args.threads))
    env = os.environ.get("DIAGOCP_THREADS")
    return max(1, int(env)) if env else 1


def _cmd_run(args) -> int:
    cfg = _build_run(_load_config(args.config), args.seed)
    records = run_experiment(cfg, _resolve_threads(args))
    paths = emit_results(records, args.format, args.out)
    n_div = sum(r.diverged for r in records)
    print(f"wrote {', '.join(str(p) for p in paths)}")
    print(f"{len(records)} runs, {n_div} diverged, final val loss "
          f"{records[0].final_val:.6g} (seed 0)")
    return 0


def _cmd_sweep(args) -> int:
    doc = _load_config(args.config)
    base = _build_run(doc, args.seed)
    spec = _build_sweep_spec(doc)
    result = lr_sweep(spec, base, _resolve_threads(args))
    flat = [rec for lr in sorted(result.records, reverse=True)
            for rec in result.records[lr]]
    paths = emit_results(flat, "csv", args.out)
    paths.append(emit_sweep(result, args.out))
    paths.append(emit_heatmap({base.optimizer: result}, args.out))
    print(f"wrote {', '.join(str(p) for p in paths)}")
    print(f"selected lr {result.selected_lr:g} for {base.optimizer} "
          f"({spec.metric} over {len(result.records)} grid points)")
    return 0


def _cmd_ablate_mu(args) -> int:
    doc = _load_config(args.config)
    if "mu_values" not in doc:
        raise ValueError("ablate-mu config needs 'mu_values'")
    base = _build_run(doc, args.seed)
    ablation = ablate_mu(doc["mu_values"], base,
                         control_clip_lo=float(doc.get("control_clip_lo", 1e-12)),
                         threads=_resolve_threads(args))
    paths = emit_ablation(ablation, args.out)
    print(f"wrote {', '.join(str(p) for p in paths)}")
    print(f"{len(ablation.values)} clip floors plus control "
          f"(clip_lo {ablation.control_clip_lo:g})")
    return 0


def _cmd_compare(args) -> int:
    doc = _load_config(args.config)
    if "optimizers" not in doc or not isinstance(doc["optimizers"], list):
        raise ValueError("compare config needs an 'optimizers' list")
    problem = _build_problem(doc.get("problem"))
    base_seed = args.seed if args.seed is not None else doc.get("base_seed", 0)
    spec = _build_sweep_spec(doc)
    entries = []
    for opt_doc in doc["optimizers"]:
        # the sweep overwrites the learning rate, so entries may omit it
        opt_doc = dict(opt_doc)
        opt_doc.setdefault("alpha" if opt_doc.get("kind") == "diag_ocp" else "lr",
                           spec.coarse_grid[0])
        key, opt_cfg = _build_optimizer(opt_doc)
        entries.append(RunConfig(
            problem=problem, optimizer=key, opt_cfg=opt_cfg,
            max_steps=int(doc.get("max_steps", 100)),
            base_seed=int(base_seed),
            n_seeds=int(doc.get("n_seeds", 1)),
            record_every=int(doc.get("record_every", 1))))
    result = compare(entries, spec, _resolve_threads(args))
    flat = [rec for key in sorted(result.records) for rec in result.records[key]]
    paths = emit_results(flat, "csv", args.out)
    paths.append(emit_heatmap(result.sweeps, args.out))
    print(f"wrote {', '.join(str(p) for p in paths)}")
    chosen = ", ".join(f"{k}={v:g}" for k, v in sorted(result.selected.items()))
    print(f"selected lrs: {chosen}")
    return 0


def _cmd_verify(args) -> int:
    doc = {} if args.config is None else _load_config(args.config)
    seed = args.seed if args.seed is not None else int(doc.get("seed", doc.get("base_seed", 0)))
    if args.check == "lemma1":
        report = verify_closed_form_equivalence(
            trials=int(doc.get("trials", 200)), seed=seed,
            tol=float(doc.get("tol", 1e-9)))
        headline = (f"closed-form equivalence: max deviation "
                    f"{report['max_abs_deviation']:.3e} (tol {report['tolerance']:g}, "
                    f"{report['trials']} trials, "
                    f"{report['excluded_safeguarded']} safeguarded excluded)")
    elif args.check == "rate":
        problem = _build_problem(doc["problem"]) if "problem" in doc else None
        opt_cfg = None
        if "optimizer" in doc:
            key, opt_cfg = _build_optimizer(doc["optimizer"])
            if key != "diag_ocp":
                raise ValueError("the rate check runs the diag_ocp optimizer")
        report = verify_rate_trend(
            problem=problem, opt_cfg=opt_cfg,
            T_list=tuple(doc.get("T_list", (100, 200, 400))),
            n_seeds=int(doc.get("n_seeds", 20)), base_seed=seed,
            ratio_threshold=float(doc.get("ratio_threshold", 0.6)))
        headline = (f"rate trend: min-grad-norm^2 ratio "
                    f"{report['ratio_last_to_first']:.3f} over T={report['T_list']} "
                    f"(threshold {report['ratio_threshold']:g}, "
                    f"log-log slope {report['loglog_slope']:.2f})")
    elif args.check == "hutchinson":
        report = verify_probe_unbiasedness(
            n_probes=int(doc.get("n_probes", 100_000)), seed=seed,
            dim=int(doc.get("dim", 8)), tol=float(doc.get("tol", 0.05)))
        headline = (f"probe unbiasedness: max relative error "
                    f"{report['max_relative_error']:.4f} (tol {report['tolerance']:g}), "
                    f"diagonal exact error {report['diagonal_exact_error']:g}")
    else:
        raise ValueError(f"unknown verify check {args.check!r}")
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        target = out / f"verify_{args.check}.json"
        target.write_text(json.dumps(report, indent=1) + "\n")
        print(f"wrote {target}")
    status = "PASS" if report["pass"] else "FAIL"
    print(f"{status} {headline}")
    return 0 if report["pass"] else 1


_COMMANDS = {
    "run": _cmd_run,
    "sweep": _cmd_sweep,
    "ablate-mu": _cmd_ablate_mu,
    "compare": _cmd_compare,
    "verify": _cmd_verify,
}


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="diagocp",
        description="Benchmark harness for the diagonal-curvature optimizer "
                    "and its baselines.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp, config_required=True):
        sp.add_argument("--config", required=config_required,
                        help="JSON config file")
        sp.add_argument("--out", default=None if not config_required else "results",
                        help="output directory")
        sp.add_argument("--seed", type=int, default=None,
                        help="override the config's base seed")
        sp.add_argument("--threads", type=int, default=None,
                        help="replicate parallelism (default: DIAGOCP_THREADS or 1)")

    sp = sub.add_parser("run", help="execute one experiment config")
    common(sp)
    sp.add_argument("--format", choices=("csv", "json"), default="csv",
                    help="emission format")
    common(sub.add_parser("sweep", help="staged learning-rate sweep"))
    common(sub.add_parser("ablate-mu", help="curvature clip-floor ablation"))
    common(sub.add_parser("compare", help="sweep-tuned optimizer comparison"))
    sp = sub.add_parser("verify", help="run a verification check")
    sp.add_argument("check", choices=("lemma1", "rate", "hutchinson"))
    common(sp, config_required=False)
    return p


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except Exception as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
