"""Command-line entry point: score corpora, fit models, run simulations.

The canonical output is JSON; the human-readable tables printed on stdout
are renderings of the same report, never a separate computation.
"""

import argparse
import csv
import json
import math
import os
import sys

import numpy as np

from . import __version__, glm, glmm, inference, simulation
from .backend import backend_name
from .dataset import LoadOptions, load_corpus, summarize
from .errors import ConvergenceError, CorpusError, WerfairError

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_CONVERGENCE = 3
EXIT_INTERNAL = 4


def _default_seed() -> int:
    return int(os.environ.get("WERFAIR_SEED", "0"))


def _emit(report: dict, out_path, quiet_stdout=False):
    text = json.dumps(report, indent=2, sort_keys=True)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as fh:
            fh.write(text + "\n")
    if not quiet_stdout:
        print(text)


def _load(args):
    options = LoadOptions(
        normalize=not args.no_normalize,
        reference_level=getattr(args, "control", None),
    )
    return load_corpus(args.input, options)


def cmd_wer(args) -> int:
    corpus = _load(args)
    summary = summarize(corpus)
    report = {
        "command": "wer",
        "version": __version__,
        "input": args.input,
        "summary": summary,
    }
    _emit(report, args.out, quiet_stdout=True)
    print(f"corpus WER: {summary['wer']:.4f}  "
          f"({summary['errors']} errors / {summary['words']} words)")
    print(f"utterances: {summary['n_utterances']}  speakers: {summary['n_speakers']}  "
          f"excluded (empty reference): {summary['n_excluded']}")
    for row in summary["levels"]:
        print(f"  {row['level']:>12}: WER {row['wer']:.4f}  "
              f"utts {row['n_utterances']}  speakers {row['n_speakers']}")
    return EXIT_OK


def _ratio_dict(est: inference.RatioEstimate) -> dict:
    return {
        "ratio": est.ratio,
        "ci_low": est.ci_low,
        "ci_high": est.ci_high,
        "level": est.level,
        "method": est.method,
        "significant": est.significant,
    }


def cmd_analyze(args) -> int:
    corpus = _load(args)
    covariates = tuple(c for c in (args.covariates or "").split(",") if c)
    seed = args.seed if args.seed is not None else _default_seed()
    report = {
        "command": "analyze",
        "version": __version__,
        "backend": backend_name(),
        "input": args.input,
        "config": {
            "case": args.case,
            "control": args.control,
            "method": args.method,
            "covariates": list(covariates),
            "nodes": args.nodes,
            "bootstrap": args.bootstrap,
            "seed": seed,
            "normalize": not args.no_normalize,
        },
        "summary": summarize(corpus),
    }
    if args.method == "baseline":
        est = inference.baseline_ratio(
            corpus, args.case, args.control, replicates=args.bootstrap, seed=seed
        )
        report["ratio"] = _ratio_dict(est)
    else:
        spec = glm.ModelSpec(covariates=covariates)
        reduced_spec = glm.ModelSpec(use_factor=False, covariates=covariates)
        if args.method == "glm":
            fit = glm.fit_glm(corpus, spec)
            reduced = glm.fit_glm(corpus, reduced_spec)
            coefs, cov, ll = fit.coefficients, fit.covariance, fit.log_likelihood
        else:
            fit = glmm.fit_glmm(corpus, glmm.MixedModelSpec(spec), nodes=args.nodes)
            reduced = glmm.fit_glmm(
                corpus, glmm.MixedModelSpec(reduced_spec), nodes=args.nodes
            )
            coefs, cov, ll = (
                fit.fixed_coefficients,
                fit.fixed_covariance,
                fit.log_marginal_likelihood,
            )
            report["sigma"] = fit.sigma
            report["boundary"] = fit.boundary
            report["conditional_modes"] = {
                k: v for k, v in sorted(fit.conditional_modes.items())
            }
        est = inference.model_ratio(fit, args.case, args.control)
        test = inference.lrt(fit, reduced)
        report["ratio"] = _ratio_dict(est)
        report["log_likelihood"] = ll
        report["coefficients"] = {
            name: {"estimate": float(coefs[i]), "se": float(math.sqrt(max(cov[i, i], 0.0)))}
            for i, name in enumerate(fit.coef_names)
        }
        report["lrt"] = {
            "statistic": test.statistic,
            "df": test.df,
            "p_value": test.p_value,
            "significant_at_05": test.significant_at_05,
        }
    _emit(report, args.out, quiet_stdout=True)
    r = report["ratio"]
    print(f"{args.method}: WER ratio {r['ratio']:.3f}  "
          f"CI ({r['ci_low']:.3f}, {r['ci_high']:.3f})  "
          f"significant: {r['significant']}")
    if "lrt" in report:
        t = report["lrt"]
        print(f"LRT: statistic {t['statistic']:.3f}  df {t['df']}  "
              f"p-value {t['p_value']:.4g}")
    return EXIT_OK


def cmd_simulate(args) -> int:
    seed = args.seed if args.seed is not None else _default_seed()
    if args.experiment == "confounding":
        config = simulation.ConfoundingConfig(
            n_per_group=args.n_per_group,
            words_per_utt=args.words,
            base_mu=args.base_mu,
            theta=args.theta,
            p_case=args.p_case,
            p_control=args.p_control,
        )
        default_methods = ("baseline", "glm")
    else:
        config = simulation.SpeakerEffectConfig(
            n_speakers_per_group=args.speakers,
            n_per_group=args.n_per_group,
            words_per_utt=args.words,
            base_mu=args.base_mu,
            sigma=args.sigma,
        )
        default_methods = ("baseline", "glmm")
    methods = (
        tuple(m for m in args.methods.split(",") if m) if args.methods else default_methods
    )
    report = simulation.run_experiment(
        config,
        methods=methods,
        replications=args.reps,
        seed=seed,
        bootstrap_replicates=args.bootstrap,
        nodes=args.nodes,
        threads=args.threads,
    )
    payload = {
        "command": "simulate",
        "version": __version__,
        "backend": backend_name(),
        **report.to_dict(),
    }
    _emit(payload, args.out, quiet_stdout=True)
    if args.per_rep_csv:
        with open(args.per_rep_csv, "w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(
                ["replication", "method", "ratio", "ci_low", "ci_high", "significant"]
            )
            for i, rec in enumerate(report.per_replication):
                for m in methods:
                    r = rec.get(m)
                    if r is None:
                        writer.writerow([i, m, "", "", "", "failed"])
                    else:
                        writer.writerow(
                            [i, m, r.ratio, r.ci_low, r.ci_high, int(r.significant)]
                        )

    def fmt(x, pct=False):
        if x is None:
            return "-"
        return f"{100 * x:.1f}%" if pct else f"{x:.3f}"

    print(f"experiment: {report.experiment}  replications: {report.replications}  "
          f"seed: {report.seed}")
    print(f"{'method':>10}  {'mean ratio':>10}  {'% false positive':>16}")
    if "baseline" in methods:
        print(f"{'baseline':>10}  {fmt(report.mean_ratio_baseline):>10}  "
              f"{fmt(report.fp_rate_baseline, pct=True):>16}")
    if report.model_method:
        print(f"{report.model_method:>10}  {fmt(report.mean_ratio_model):>10}  "
              f"{fmt(report.fp_rate_model, pct=True):>16}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="werfair",
        description="Measure ASR fairness: WER scoring, Poisson (mixed) "
        "regression, bootstrap baseline, and simulation studies.",
    )
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    p_wer = sub.add_parser("wer", help="score a corpus file and print WER")
    p_wer.add_argument("input")
    p_wer.add_argument("--no-normalize", action="store_true")
    p_wer.add_argument("--out", default=None, help="write the JSON report here")
    p_wer.set_defaults(func=cmd_wer)

    p_an = sub.add_parser("analyze", help="estimate the WER ratio between groups")
    p_an.add_argument("input")
    p_an.add_argument("--case", required=True)
    p_an.add_argument("--control", required=True)
    p_an.add_argument(
        "--method", choices=("baseline", "glm", "glmm"), default="glmm"
    )
    p_an.add_argument("--covariates", default="", help="comma-separated column names")
    p_an.add_argument("--nodes", type=int, default=glmm.DEFAULT_NODES)
    p_an.add_argument("--bootstrap", type=int, default=inference.DEFAULT_REPLICATES)
    p_an.add_argument("--seed", type=int, default=None)
    p_an.add_argument("--no-normalize", action="store_true")
    p_an.add_argument("--out", default=None)
    p_an.set_defaults(func=cmd_analyze)

    p_sim = sub.add_parser("simulate", help="run a synthetic false-positive study")
    p_sim.add_argument(
        "--experiment", choices=("confounding", "speaker"), required=True
    )
    p_sim.add_argument("--reps", type=int, default=1000)
    p_sim.add_argument("--seed", type=int, default=None)
    p_sim.add_argument("--threads", type=int, default=1)
    p_sim.add_argument("--methods", default=None, help="comma-separated subset")
    p_sim.add_argument("--n-per-group", type=int, default=5000)
    p_sim.add_argument("--words", type=int, default=10)
    p_sim.add_argument("--base-mu", type=float, default=math.log(0.05))
    p_sim.add_argument("--theta", type=float, default=0.1)
    p_sim.add_argument("--p-case", type=float, default=0.5)
    p_sim.add_argument("--p-control", type=float, default=0.5)
    p_sim.add_argument("--speakers", type=int, default=100)
    p_sim.add_argument("--sigma", type=float, default=0.4)
    p_sim.add_argument("--bootstrap", type=int, default=inference.DEFAULT_REPLICATES)
    p_sim.add_argument("--nodes", type=int, default=glmm.DEFAULT_NODES)
    p_sim.add_argument("--out", default=None)
    p_sim.add_argument("--per-rep-csv", default=None)
    p_sim.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (CorpusError, FileNotFoundError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONVERGENCE
    except WerfairError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
