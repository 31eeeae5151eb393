"""Command-line pipeline driver.

Subcommands cover the full study: ``synth`` writes a synthetic ageing
study, ``fit-real``/``fit-imag`` fit one spectrum's parts, ``extract``
builds the feature table from a manifest, ``select`` runs the exhaustive
leave-one-out subset search, and ``predict`` applies a stored selection
to new feature rows. All output files embed the run configuration and
are written atomically with canonical formatting, so identical inputs
reproduce identical bytes.

Exit codes: 0 success, 1 unexpected internal error, 2 input parse error,
3 fit error, 4 no feature row succeeded, 5 no feasible subset,
6 prediction schema mismatch.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

import numpy as np

from . import __version__
from .errors import FcLifeError, FormatError, NoFeasibleSubset, SpectrumError
from .features import extract_features, feature_names
from .fileio import (
    FEATURES_HEADER,
    atomic_write_text,
    dumps_canonical,
    read_features_csv,
    read_manifest,
    read_spectrum_csv,
    write_csv,
    write_features_csv,
    write_json,
    write_manifest,
    write_spectrum_csv,
)
from .logsig import LogsigParams, fit_logsig, logsig_eval
from .regression import LinearModel, predict
from .rhlp import RhlpConfig, approximate, fit_em, logistic_probs, segment
from .selection import exhaustive_select
from .simplex import SimplexConfig
from .spectra import log_axis
from .synth import AgeRule, SynthSpec, plan_study, study_spectrum

EXIT_INTERNAL = 1
EXIT_PARSE = 2
EXIT_FIT = 3
EXIT_NO_ROWS = 4
EXIT_NO_FEASIBLE = 5
EXIT_SCHEMA = 6


@dataclass(frozen=True)
class RunConfig:
    rhlp: RhlpConfig
    simplex: SimplexConfig
    seed: int
    output_dir: Path
    jobs: int

    def echo(self) -> dict:
        return {
            "seed": self.seed,
            "rhlp": asdict(self.rhlp),
            "simplex": asdict(self.simplex),
            "output_dir": str(self.output_dir),
        }


def _dataclass_from_doc(cls, doc: dict, what: str):
    try:
        return cls(**doc)
    except TypeError as exc:
        raise FormatError(f"bad {what} config: {exc}") from exc


def load_run_config(args) -> RunConfig:
    doc = {}
    if getattr(args, "config", None):
        try:
            doc = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise FormatError(f"cannot parse config {args.config}: {exc}") from exc
        unknown = set(doc) - {"seed", "rhlp", "simplex"}
        if unknown:
            raise FormatError(f"unknown config keys: {sorted(unknown)}")
    seed = args.seed if args.seed is not None else int(doc.get("seed", 0))
    rhlp_doc = dict(doc.get("rhlp", {}))
    simplex_doc = dict(doc.get("simplex", {}))
    rhlp_doc.setdefault("seed", seed)
    simplex_doc.setdefault("seed", seed)
    return RunConfig(
        rhlp=_dataclass_from_doc(RhlpConfig, rhlp_doc, "rhlp"),
        simplex=_dataclass_from_doc(SimplexConfig, simplex_doc, "simplex"),
        seed=seed,
        output_dir=Path(args.out) if getattr(args, "out", None) else Path("."),
        jobs=max(1, getattr(args, "jobs", 1) or 1),
    )


def cmd_fit_real(args) -> int:
    rc = load_run_config(args)
    s = read_spectrum_csv(args.spectrum)
    logf = log_axis(s)
    params, mse = fit_logsig(logf, s.re_ohm, rc.simplex)
    fitted = logsig_eval(params, logf)
    out = rc.output_dir
    write_json(
        out / "logsig.json",
        {
            "a1": params.a1,
            "a2": params.a2,
            "a3": params.a3,
            "a4": params.a4,
            "mse": mse,
            "run_config": rc.echo(),
        },
    )
    write_csv(
        out / "logsig_curve.csv",
        ["logf", "observed_re_ohm", "fitted_re_ohm"],
        zip(logf, s.re_ohm, fitted),
        rc.echo(),
    )
    return 0


def cmd_fit_imag(args) -> int:
    rc = load_run_config(args)
    s = read_spectrum_csv(args.spectrum)
    logf = log_axis(s)
    model = fit_em(logf, s.im_ohm, rc.rhlp)
    seg = segment(model, logf)
    approx = approximate(model, logf)
    pis = logistic_probs(model.w, logf)
    out = rc.output_dir

    runs = [
        {k: r[k] for k in ("run", "iterations", "converged", "failed", "loglik")}
        for r in model.diagnostics["runs"]
    ]
    write_json(
        out / "rhlp.json",
        {
            "K": model.K,
            "p": model.p,
            "w": model.w,
            "betas": model.betas,
            "sigma2": model.sigma2,
            "loglik": model.loglik,
            "boundaries_logf": seg.boundaries,
            "boundaries_hz": np.exp(seg.boundaries),
            "diagnostics": {"best_run": model.diagnostics["best_run"], "runs": runs},
            "run_config": rc.echo(),
        },
    )
    header = ["logf", "observed_im_ohm", "approx_im_ohm"]
    header += [f"pi_{k + 1}" for k in range(model.K)] + ["label"]
    rows = [
        [logf[i], s.im_ohm[i], approx[i], *pis[i], int(seg.labels[i])]
        for i in range(s.n_points)
    ]
    write_csv(out / "segmentation.csv", header, rows, rc.echo())
    return 0


def _extract_row(entry, rc: RunConfig):
    try:
        s = read_spectrum_csv(entry.spectrum_file, entry.age_hours, entry.cell_id)
        fv = extract_features(s, rc.rhlp, rc.simplex)
        return fv.values(), entry.age_hours, entry.cell_id, ""
    except Exception as exc:  # noqa: BLE001 - recorded in the flag column
        return None, entry.age_hours, entry.cell_id, type(exc).__name__


def cmd_extract(args) -> int:
    rc = load_run_config(args)
    entries = read_manifest(args.manifest)
    if rc.jobs > 1:
        with ThreadPoolExecutor(max_workers=rc.jobs) as pool:
            rows = list(pool.map(lambda e: _extract_row(e, rc), entries))
    else:
        rows = [_extract_row(e, rc) for e in entries]
    n_ok = sum(1 for r in rows if r[3] == "")
    write_features_csv(rc.output_dir / "features.csv", rows, rc.echo())
    for r in rows:
        if r[3]:
            print(f"warning: {r[2]}: {r[3]}", file=sys.stderr)
    return 0 if n_ok >= 1 else EXIT_NO_ROWS


def _model_doc(m: LinearModel) -> dict:
    return {
        "feature_indices": list(m.feature_indices),
        "feature_names": [feature_names()[i] for i in m.feature_indices]
        if max(m.feature_indices) < 18
        else list(map(str, m.feature_indices)),
        "weights": m.weights,
        "intercept": m.intercept,
        "x_mean": m.x_mean,
        "x_std": m.x_std,
        "y_mean": m.y_mean,
        "y_std": m.y_std,
        "rank_deficient": m.rank_deficient,
    }


def cmd_select(args) -> int:
    rc = load_run_config(args)
    data, n_dropped = read_features_csv(args.features, allow_flagged=args.allow_flagged)
    report = exhaustive_select(data, max_dim=args.max_dim, jobs=rc.jobs)
    out = rc.output_dir

    write_json(
        out / "selection.json",
        {
            "best_subset": {
                "indices": list(report.best_subset),
                "names": list(report.best_names),
            },
            "train_me": report.train_me,
            "test_me": report.test_me,
            "train_mse": report.train_mse,
            "test_mse": report.test_mse,
            "per_dimension_best": [
                {
                    "dimension": len(e.subset),
                    "indices": list(e.subset),
                    "names": list(e.names),
                    "test_me": e.test_me,
                    "train_me": e.train_me,
                    "test_mse": e.test_mse,
                    "train_mse": e.train_mse,
                }
                for e in report.per_dimension_best
            ],
            "final_model": _model_doc(report.final_model),
            "diagnostics": {
                "infeasible_columns": list(report.infeasible_columns),
                "n_evaluated": report.n_evaluated,
                "n_skipped": report.n_skipped,
                "n_exact_fallback": report.n_exact_fallback,
                "n_tied_best": report.n_tied_best,
                "full_subset_test_me": report.full_subset_test_me,
                "n_dropped_flagged_rows": n_dropped,
                "backend": report.backend,
            },
            "run_config": rc.echo(),
        },
    )
    write_csv(
        out / "figure6.csv",
        ["cell_id", "age_hours", "loo_prediction", "abs_error"],
        [
            [data.cell_ids[i], data.y[i], report.per_sample_predictions[i], report.per_sample_errors[i]]
            for i in range(data.n_rows)
        ],
        rc.echo(),
    )
    write_csv(
        out / "figure7.csv",
        ["dimension", "best_test_me", "best_subset_names"],
        [[len(e.subset), e.test_me, "+".join(e.names)] for e in report.per_dimension_best],
        rc.echo(),
    )
    return 0


def cmd_predict(args) -> int:
    try:
        doc = json.loads(Path(args.selection).read_text(encoding="utf-8"))
        md = doc["final_model"]
        model = LinearModel(
            weights=np.asarray(md["weights"], dtype=float),
            intercept=float(md["intercept"]),
            feature_indices=tuple(int(i) for i in md["feature_indices"]),
            x_mean=np.asarray(md["x_mean"], dtype=float),
            x_std=np.asarray(md["x_std"], dtype=float),
            y_mean=float(md["y_mean"]),
            y_std=float(md["y_std"]),
        )
    except (OSError, json.JSONDecodeError, KeyError, TypeError, ValueError) as exc:
        print(f"error: selection file lacks a usable final model: {exc}", file=sys.stderr)
        return EXIT_SCHEMA

    from .fileio import _read_rows  # same strict header contract as extract

    try:
        rows = _read_rows(Path(args.features), FEATURES_HEADER)
    except FormatError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA

    lines = []
    for r in rows:
        cell = r[19]
        if r[20]:
            lines.append((cell, None))
            continue
        x = np.array([float(c) for c in r[:18]])
        lines.append((cell, predict(model, x)))
    from .fileio import fmt_float

    for cell, est in lines:
        print(f"{cell},{'nan' if est is None else fmt_float(est)}")
    if args.out:
        write_csv(
            Path(args.out) / "predictions.csv",
            ["cell_id", "estimated_hours"],
            [[c, float("nan") if e is None else e] for c, e in lines],
            None,
        )
    return 0


def _load_synth_spec(path) -> tuple[SynthSpec, int, list, AgeRule | None]:
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise FormatError(f"cannot parse synth spec {path}: {exc}") from exc
    known = {
        "n_points", "freq_range_hz", "logsig", "regimes", "boundaries_logf",
        "noise_sigma", "transition_sharpness", "heteroscedastic", "seed",
        "n_spectra", "planted", "age_rule",
    }
    unknown = set(doc) - known
    if unknown:
        raise FormatError(f"unknown synth spec keys: {sorted(unknown)}")
    kwargs = {}
    for key in ("n_points", "noise_sigma", "heteroscedastic", "seed"):
        if key in doc:
            kwargs[key] = doc[key]
    if "freq_range_hz" in doc:
        kwargs["freq_range_hz"] = tuple(doc["freq_range_hz"])
    if "logsig" in doc:
        kwargs["logsig_truth"] = LogsigParams(*doc["logsig"])
    if "regimes" in doc:
        kwargs["regimes"] = tuple(tuple(r) for r in doc["regimes"])
    if "boundaries_logf" in doc:
        kwargs["boundaries_logf"] = tuple(doc["boundaries_logf"])
    if "transition_sharpness" in doc:
        v = doc["transition_sharpness"]
        kwargs["transition_sharpness"] = math.inf if v is None else float(v)
    try:
        spec = SynthSpec(**kwargs)
    except (TypeError, ValueError) as exc:
        raise FormatError(f"bad synth spec: {exc}") from exc
    n_spectra = int(doc.get("n_spectra", 29))
    planted = doc.get("planted", ["a1", "a3", "a4"])
    rule = None
    if "age_rule" in doc:
        try:
            rule = AgeRule(
                intercept=float(doc["age_rule"]["intercept"]),
                coefficients=tuple(float(c) for c in doc["age_rule"]["coefficients"]),
                noise_hours=float(doc["age_rule"].get("noise_hours", 0.0)),
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise FormatError(f"bad age_rule: {exc}") from exc
    return spec, n_spectra, planted, rule


def cmd_synth(args) -> int:
    rc = load_run_config(args)
    spec, n_spectra, planted, rule = _load_synth_spec(args.spec)
    if args.seed is not None:
        spec = replace(spec, seed=args.seed)
    plan = plan_study(spec, n_spectra, planted, rule)
    out = rc.output_dir

    from .fileio import ManifestEntry

    entries = []
    for i in range(n_spectra):
        s, labels = study_spectrum(spec, plan, i)
        name = f"spectrum_{i:03d}.csv"
        write_spectrum_csv(out / name, s, rc.echo())
        entries.append(ManifestEntry(out / name, float(plan.ages_hours[i]), plan.cell_ids[i]))
    write_manifest(out / "manifest.csv", entries, rc.echo())
    write_json(
        out / "truth.json",
        {
            "planted": list(plan.planted),
            "planted_names": [feature_names()[j] for j in plan.planted],
            "age_rule": {
                "intercept": plan.age_rule.intercept,
                "coefficients": list(plan.age_rule.coefficients),
                "noise_hours": plan.age_rule.noise_hours,
            },
            "slot_values": plan.slot_values,
            "ages_hours": plan.ages_hours,
            "cell_ids": list(plan.cell_ids),
            "spec": {
                "n_points": spec.n_points,
                "freq_range_hz": list(spec.freq_range_hz),
                "logsig": list(spec.logsig_truth.as_array()),
                "regimes": [list(r) for r in spec.regimes],
                "boundaries_logf": list(spec.boundaries_logf),
                "noise_sigma": spec.noise_sigma,
                "transition_sharpness": None
                if math.isinf(spec.transition_sharpness)
                else spec.transition_sharpness,
                "heteroscedastic": spec.heteroscedastic,
                "seed": spec.seed,
            },
            "run_config": rc.echo(),
        },
    )
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="fclife",
        description="Fuel-cell lifetime estimation from impedance spectra",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON run configuration")
        p.add_argument("--seed", type=int, default=None, help="seed override")
        p.add_argument("--out", default=".", help="output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="parallelism hint; never affects results")

    p = sub.add_parser("fit-real", help="fit the logsig model to a spectrum's real part")
    p.add_argument("spectrum")
    common(p)
    p.set_defaults(func=cmd_fit_real)

    p = sub.add_parser("fit-imag", help="fit the gated mixture to a spectrum's imaginary part")
    p.add_argument("spectrum")
    common(p)
    p.set_defaults(func=cmd_fit_imag)

    p = sub.add_parser("extract", help="build the 18-feature table from a manifest")
    p.add_argument("manifest")
    common(p)
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("select", help="exhaustive LOO feature-subset selection")
    p.add_argument("features")
    common(p)
    p.add_argument("--allow-flagged", action="store_true", help="drop flagged rows instead of failing")
    p.add_argument("--max-dim", type=int, default=None, help="cap subset cardinality")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("predict", help="apply a stored selection to feature rows")
    p.add_argument("selection")
    p.add_argument("features")
    p.add_argument("--out", default=None, help="also write predictions.csv here")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("synth", help="write a synthetic ageing study")
    p.add_argument("spec")
    common(p)
    p.set_defaults(func=cmd_synth)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (FormatError, SpectrumError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except NoFeasibleSubset as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NO_FEASIBLE
    except (FcLifeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FIT
    except Exception as exc:  # noqa: BLE001 - unexpected internal failure
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
