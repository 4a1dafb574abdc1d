"""Command-line front end.

Every command reads an optional JSON config (merged over the defaults below),
writes its artifacts under ``--out`` and exits with 0 on success, 2 on a
validation error and 3 on a numerical failure.
"""

from __future__ import annotations

import argparse
import copy
import hashlib
import json
import math
import sys
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__
from .benchmark import outcome_risk_ratio, overlay_benchmarks, rank_benchmarks
from .bounds import (array_grid, evalue, evalue_contour, extreme_scenario,
                     ovb_adjusted_estimate, ovb_contour, ovb_robustness_value,
                     simulate_confounder_adjustment, zeta_from_partial_r2)
from .bounds.grid import ContourGrid
from .datagen import GenConfig, calibrate, generate_main, generate_registry, study_manifest
from .design import classify_confounders, parse_dag, prestudy_evalue, required_n_for_robustness
from .estimators import aipw_ate, ancova, ipw_ate, ps_match_att
from .fusion import (bayes_twin_regression, control_variate_estimate, multiple_impute_u,
                     registry_prevalence)
from .model import (DEFAULT_ALPHA, Dataset, EffectEstimate, NumericalError, SensitivityPoint,
                    ValidationError, load_dataset, ols, write_dataset)
from .rng import set_threads
from .svg import render_contour_svg

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICAL = 0, 2, 3
COMMANDS = ("simulate", "estimate", "evalue", "ovb", "simframe", "array", "benchmark",
            "fuse", "design", "report")
ESTIMATORS = ("ancova", "ps_match", "ipw", "aipw")

DEFAULT_CONFIG: dict[str, Any] = {
    "seed": 1,
    "alpha": DEFAULT_ALPHA,
    "data": {"main": None, "registry": None},
    "datagen": {},
    "estimate": {"methods": list(ESTIMATORS), "bootstrap": 500, "caliper": None, "trim": 0.01},
    "evalue": {"effect": None, "sd_outcome": None, "scale": "difference",
               "resolution": 61, "max_rr": 4.0},
    "ovb": {"effect": None, "estimates_path": None, "method": "ANCOVA", "resolution": 101,
            "max_r2_tu": 0.3, "max_r2_yu": 0.3, "extreme_levels": [1.0, 0.75, 0.5]},
    "simframe": {"target_r2_tu": None, "target_r2_yu": None, "prevalence": None,
                 "draws": 50, "burn_in": 10},
    "array": {"prevalences": None, "resolution": 51, "max_imbalance": 0.5, "max_rr_ud": 4.0},
    "benchmark": {"candidates": None, "outcome_cutpoint": None, "multiples": [1.0, 2.0, 3.0]},
    "fusion": {"mi_m": 20, "cv_bootstrap": 1000,
               "bayes": {"chains": 4, "draws": 30000, "burn_in": 7500, "priors": {}}},
    "design": {"dag": None, "dag_path": None, "expected_d": 0.25, "sd": 1.2,
               "n_treated": 200, "n_control": 400, "target_e_lcl": None,
               "allocation_ratio": 0.5},
}

_NUM = (int, float)
_OPT_NUM = (int, float, type(None))
_OPT_STR = (str, type(None))
_OPT_LIST = (list, type(None))
_OPT_DICT = (dict, type(None))

SCHEMA: dict[str, Any] = {
    "seed": int, "alpha": float,
    "data": {"main": _OPT_STR, "registry": _OPT_STR},
    "datagen": dict,
    "estimate": {"methods": list, "bootstrap": int, "caliper": _OPT_NUM, "trim": _NUM},
    "evalue": {"effect": _OPT_DICT, "sd_outcome": _OPT_NUM, "scale": str,
               "resolution": int, "max_rr": _NUM},
    "ovb": {"effect": _OPT_DICT, "estimates_path": _OPT_STR, "method": str, "resolution": int,
            "max_r2_tu": _NUM, "max_r2_yu": _NUM, "extreme_levels": list},
    "simframe": {"target_r2_tu": _OPT_NUM, "target_r2_yu": _OPT_NUM, "prevalence": _OPT_NUM,
                 "draws": int, "burn_in": int},
    "array": {"prevalences": _OPT_LIST, "resolution": int, "max_imbalance": _NUM,
              "max_rr_ud": _NUM},
    "benchmark": {"candidates": _OPT_LIST, "outcome_cutpoint": _OPT_NUM, "multiples": list},
    "fusion": {"mi_m": int, "cv_bootstrap": int,
               "bayes": {"chains": int, "draws": int, "burn_in": int, "priors": dict}},
    "design": {"dag": _OPT_STR, "dag_path": _OPT_STR, "expected_d": _NUM, "sd": _OPT_NUM,
               "n_treated": int, "n_control": int, "target_e_lcl": _OPT_NUM,
               "allocation_ratio": _NUM},
}


# ---------------------------------------------------------------------------
# Config handling


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in override.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict) and k != "datagen":
            out[k] = _merge(out[k], v)
        else:
            out[k] = copy.deepcopy(v)
    return out


def _validate(cfg: Any, schema: Any, path: str) -> None:
    if isinstance(schema, dict):
        if not isinstance(cfg, dict):
            raise ValidationError(f"config field {path or '<root>'}: expected an object")
        for k in cfg:
            if k not in schema:
                raise ValidationError(f"config field {path + '.' if path else ''}{k}: unknown field")
        for k, sub in schema.items():
            _validate(cfg[k], sub, f"{path + '.' if path else ''}{k}")
        return
    ok = isinstance(cfg, schema) and not (isinstance(cfg, bool) and schema is not bool)
    if schema is float and isinstance(cfg, int) and not isinstance(cfg, bool):
        ok = True
    if not ok:
        raise ValidationError(f"config field {path}: unexpected value {cfg!r}")


def load_config(path: str | None, seed: int | None) -> dict:
    user: dict = {}
    if path is not None:
        p = Path(path)
        if not p.is_file():
            raise ValidationError(f"config file not found: {path}")
        try:
            user = json.loads(p.read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from exc
        if not isinstance(user, dict):
            raise ValidationError("config must be a JSON object")
    cfg = _merge(DEFAULT_CONFIG, user)
    if seed is not None:
        cfg["seed"] = seed
    _validate(cfg, SCHEMA, "")
    if not 0 < cfg["alpha"] < 1:
        raise ValidationError("config field alpha: must lie in (0, 1)")
    for m in cfg["estimate"]["methods"]:
        if m not in ESTIMATORS:
            raise ValidationError(f"config field estimate.methods: unknown estimator {m!r}")
    for key in ("main", "registry"):
        p = cfg["data"][key]
        if p is not None and not Path(p).is_file():
            raise ValidationError(f"config field data.{key}: file not found: {p}")
    return cfg


# ---------------------------------------------------------------------------
# Output helpers


def _clean(obj: Any) -> Any:
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {str(k): _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _clean(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        return v if math.isfinite(v) else None
    return obj


def _write_json(path: Path, obj: Any) -> None:
    path.write_text(json.dumps(_clean(obj), indent=2, sort_keys=True, allow_nan=False) + "\n",
                    encoding="utf-8")


def _write_grid(out: Path, stem: str, grid: ContourGrid) -> dict:
    grid.write_csv(out / f"{stem}.csv")
    (out / f"{stem}.svg").write_text(render_contour_svg(grid), encoding="utf-8")
    side = grid.sidecar()
    _write_json(out / f"{stem}.json", side)
    return {"csv": f"{stem}.csv", "svg": f"{stem}.svg", **side}


def _sha256(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


# ---------------------------------------------------------------------------
# Shared pipeline pieces


class _Context:
    """Lazily computed shared inputs for one command invocation."""

    def __init__(self, cfg: dict, out: Path):
        self.cfg, self.out = cfg, out
        self.seed = int(cfg["seed"])
        self.alpha = float(cfg["alpha"])
        self._main: Dataset | None = None
        self._registry: Dataset | None = None
        self._naive: EffectEstimate | None = None
        self.manifest: dict = {}

    def gen_config(self) -> GenConfig:
        d = dict(self.cfg["datagen"])
        d.setdefault("seed", self.seed)
        return GenConfig.from_dict(d)

    def _load(self) -> None:
        paths = self.cfg["data"]
        if paths["main"] is not None:
            self._main = load_dataset(paths["main"])
            self._registry = (load_dataset(paths["registry"]) if paths["registry"] is not None
                              else None)
            self.manifest = {"source": "files",
                             "main": {"path": paths["main"], "sha256": _sha256(Path(paths["main"]))}}
            if paths["registry"] is not None:
                self.manifest["registry"] = {"path": paths["registry"],
                                             "sha256": _sha256(Path(paths["registry"]))}
            return
        gc = self.gen_config()
        cal = calibrate(gc)
        self._main = generate_main(gc, cal).hide_u()
        self._registry = generate_registry(gc, cal)
        self.out.mkdir(parents=True, exist_ok=True)
        write_dataset(self._main, self.out / "main.csv")
        write_dataset(self._registry, self.out / "registry.csv")
        self.manifest = {"source": "generated", **study_manifest(gc, cal[4]),
                         "main": {"path": "main.csv", "sha256": _sha256(self.out / "main.csv")},
                         "registry": {"path": "registry.csv",
                                      "sha256": _sha256(self.out / "registry.csv")}}

    @property
    def main(self) -> Dataset:
        if self._main is None:
            self._load()
        return self._main

    @property
    def registry(self) -> Dataset:
        if self._main is None:
            self._load()
        if self._registry is None:
            raise ValidationError("this command needs a registry dataset (config data.registry)")
        return self._registry

    @property
    def covariates(self) -> list[str]:
        return list(self.main.covariates)

    def naive(self) -> EffectEstimate:
        if self._naive is None:
            self._naive = ancova(self.main, self.covariates, alpha=self.alpha)
        return self._naive

    def sd_outcome(self) -> float:
        return float(np.std(self.main.main_rows().y, ddof=1))

    def outcome_cutpoint(self) -> float:
        c = self.cfg["benchmark"]["outcome_cutpoint"]
        return float(c) if c is not None else self.gen_config().outcome_cutpoint


def _effect_from_dict(d: dict, alpha: float) -> EffectEstimate:
    try:
        est = float(d["estimate"])
        df = int(d.get("df", 1_000_000))
        a = float(d.get("alpha", alpha))
        if "se" in d and d["se"] is not None:
            return EffectEstimate.from_t(est, float(d["se"]), df, a, method=d.get("method", ""))
        return EffectEstimate.from_ci(est, float(d["ci_low"]), float(d["ci_high"]), df, a,
                                      method=d.get("method", ""))
    except (KeyError, TypeError) as exc:
        raise ValidationError(f"effect block needs estimate with se or ci_low/ci_high: {exc}") from exc


def _effect_from_estimates(path: str, method: str, alpha: float) -> EffectEstimate:
    p = Path(path)
    if not p.is_file():
        raise ValidationError(f"estimates file not found: {path}")
    data = json.loads(p.read_text(encoding="utf-8"))
    for block in data.get("estimates", []):
        if block.get("method") == method:
            return _effect_from_dict(block, alpha)
    raise ValidationError(f"no {method!r} block in {path}")


def _internal_strength(main: Dataset, covariates: list[str]) -> SensitivityPoint:
    """Partial R2 of U with treatment and outcome, measured on the internal subsample."""
    rows = main.main_rows()
    k = rows.u_observed
    if k.sum() < len(covariates) + 5:
        raise ValidationError("too few internal rows to measure the strength of U")
    sub = rows.subset(k)
    X = sub.design(covariates)
    u = sub.u.astype(float)
    z = sub.z.astype(float)
    r2_tu = float(ols(np.column_stack([X, u]), z).partial_r2[-1])
    r2_yu = float(ols(np.column_stack([X[:, :1], z, X[:, 1:], u]), sub.y).partial_r2[-1])
    return SensitivityPoint("partial_r2", r2_tu, r2_yu, label="U (internal subsample)")


def default_dag(covariates: list[str]) -> str:
    lines = ["# measured covariates feed treatment choice and outcome",
             "node treatment treatment", "node outcome outcome",
             "node u_hypothetical unmeasured"]
    lines += [f"node {c}" for c in covariates]
    lines += [f"edge {c} -> {t}" for c in covariates for t in ("treatment", "outcome")]
    lines += ["edge u_hypothetical -> treatment", "edge u_hypothetical -> outcome",
              "edge treatment -> outcome"]
    return "\n".join(lines) + "\n"


# ---------------------------------------------------------------------------
# Commands


def cmd_simulate(ctx: _Context) -> dict:
    ctx.main  # generates and writes the CSVs
    _write_json(ctx.out / "manifest.json", ctx.manifest)
    return {"data_manifest": ctx.manifest}


def run_estimates(ctx: _Context) -> list[dict]:
    ec = ctx.cfg["estimate"]
    out = []
    for m in ec["methods"]:
        if m == "ancova":
            e = ctx.naive()
        elif m == "ps_match":
            e = ps_match_att(ctx.main, ctx.covariates, caliper=ec["caliper"],
                             bootstrap=ec["bootstrap"], seed=ctx.seed, alpha=ctx.alpha)
        elif m == "ipw":
            e = ipw_ate(ctx.main, ctx.covariates, trim=ec["trim"], bootstrap=ec["bootstrap"],
                        seed=ctx.seed, alpha=ctx.alpha)
        else:
            e = aipw_ate(ctx.main, ctx.covariates, trim=ec["trim"], alpha=ctx.alpha)
        out.append(e.to_dict())
    return out


def cmd_estimate(ctx: _Context) -> dict:
    res = {"estimates": run_estimates(ctx)}
    _write_json(ctx.out / "estimates.json", res)
    return res


def run_evalue(ctx: _Context, effect: EffectEstimate | None = None) -> dict:
    ec = ctx.cfg["evalue"]
    if effect is None and ec["effect"] is not None:
        d = ec["effect"]
        if ec["scale"] == "rr":
            rr = float(d["estimate"])
            lo = float(d.get("ci_low", rr))
            hi = float(d.get("ci_high", rr))
            return {"evalue": evalue(EffectEstimate(rr, 0.0, lo, hi, 1), scale="rr").to_dict()}
        effect = _effect_from_dict(d, ctx.alpha)
    if effect is None:
        effect = ctx.naive()
    if ec["scale"] == "smd":
        sd = 1.0
        res = evalue(effect, scale="smd")
    else:
        sd = float(ec["sd_outcome"]) if ec["sd_outcome"] is not None else ctx.sd_outcome()
        res = evalue(effect, sd, scale="difference")
    grid = evalue_contour(effect, sd, resolution=ec["resolution"], max_rr=ec["max_rr"])
    return {"evalue": {**res.to_dict(), "sd_outcome": sd, "effect": effect.to_dict(),
                       "grid": _write_grid(ctx.out, "evalue_grid", grid)}}


def cmd_evalue(ctx: _Context) -> dict:
    ctx.out.mkdir(parents=True, exist_ok=True)
    res = run_evalue(ctx)
    _write_json(ctx.out / "evalue.json", res)
    return res


def _ovb_effect(ctx: _Context) -> EffectEstimate:
    oc = ctx.cfg["ovb"]
    if oc["effect"] is not None:
        return _effect_from_dict(oc["effect"], ctx.alpha)
    if oc["estimates_path"] is not None:
        return _effect_from_estimates(oc["estimates_path"], oc["method"], ctx.alpha)
    return ctx.naive()


def run_ovb(ctx: _Context, effect: EffectEstimate, benchmarks=(), internal=None) -> dict:
    oc = ctx.cfg["ovb"]
    rv = ovb_robustness_value(effect, alpha=ctx.alpha)
    grid = ovb_contour(effect, resolution=oc["resolution"], max_r2_tu=oc["max_r2_tu"],
                       max_r2_yu=oc["max_r2_yu"], alpha=ctx.alpha)
    if benchmarks:
        grid = overlay_benchmarks(grid, benchmarks)
    res = {"effect": effect.to_dict(), "robustness": rv.to_dict(),
           "extreme_scenario": extreme_scenario(effect, oc["extreme_levels"], alpha=ctx.alpha),
           "grid": _write_grid(ctx.out, "ovb_grid", grid)}
    if internal is not None:
        res["internal_strength"] = {
            "point": internal.to_dict(),
            "adjusted": ovb_adjusted_estimate(effect, internal.assoc_outcome,
                                              internal.assoc_treatment).to_dict()}
    return res


def cmd_ovb(ctx: _Context) -> dict:
    ctx.out.mkdir(parents=True, exist_ok=True)
    res = {"ovb": run_ovb(ctx, _ovb_effect(ctx))}
    _write_json(ctx.out / "ovb.json", res)
    return res


def _prevalence(ctx: _Context, explicit) -> tuple[float, dict | None]:
    if explicit is not None:
        return float(explicit), None
    prev = registry_prevalence(ctx.registry, ctx.alpha)
    return prev.estimate, prev.to_dict()


def run_simframe(ctx: _Context) -> dict:
    sc = ctx.cfg["simframe"]
    tu, yu = sc["target_r2_tu"], sc["target_r2_yu"]
    if tu is None or yu is None:
        pt = _internal_strength(ctx.main, ctx.covariates)
        tu = pt.assoc_treatment if tu is None else tu
        yu = pt.assoc_outcome if yu is None else yu
    p, _ = _prevalence(ctx, sc["prevalence"])
    zz, zy = zeta_from_partial_r2(ctx.main, ctx.covariates, tu, yu, p, seed=ctx.seed)
    est = simulate_confounder_adjustment(ctx.main, ctx.covariates, zz, zy, p, draws=sc["draws"],
                                         burn_in=sc["burn_in"], seed=ctx.seed, alpha=ctx.alpha)
    return {"target_r2_tu": tu, "target_r2_yu": yu, "prevalence": p,
            "zeta_z": zz, "zeta_y": zy, "estimate": est.to_dict()}


def cmd_simframe(ctx: _Context) -> dict:
    ctx.out.mkdir(parents=True, exist_ok=True)
    res = {"simframe": run_simframe(ctx)}
    _write_json(ctx.out / "simframe.json", res)
    return res


def _rr_benchmark(ctx: _Context, covariate: str) -> SensitivityPoint | None:
    reps = rank_benchmarks(ctx.main, [covariate], ctx.outcome_cutpoint(),
                           effect=ctx.naive(), covariates=ctx.covariates)
    return reps[0].strength.rr


def run_array(ctx: _Context, rr_benchmarks=()) -> list[dict]:
    ac = ctx.cfg["array"]
    prevs = ac["prevalences"]
    if prevs is None:
        prevs = [_prevalence(ctx, None)[0]]
    grids = array_grid(ctx.naive(), ctx.sd_outcome(), prevs, resolution=ac["resolution"],
                       max_imbalance=ac["max_imbalance"], max_rr_ud=ac["max_rr_ud"],
                       benchmarks=rr_benchmarks, alpha=ctx.alpha)
    return [_write_grid(ctx.out, f"array_grid_{k + 1}", g) for k, g in enumerate(grids)]


def cmd_array(ctx: _Context) -> dict:
    ctx.out.mkdir(parents=True, exist_ok=True)
    res = {"array": run_array(ctx)}
    _write_json(ctx.out / "array.json", res)
    return res


def run_benchmarks(ctx: _Context) -> list[dict]:
    bc = ctx.cfg["benchmark"]
    cands = bc["candidates"] if bc["candidates"] is not None else ctx.covariates
    reps = rank_benchmarks(ctx.main, cands, ctx.outcome_cutpoint(), effect=ctx.naive(),
                           covariates=ctx.covariates, multiples=bc["multiples"])
    out = []
    for r in reps:
        d = r.to_dict()
        if ctx._registry is not None:
            try:
                d["registry_outcome_rr"] = outcome_risk_ratio(ctx.registry, r.covariate,
                                                              ctx.outcome_cutpoint())
            except ValidationError:
                d["registry_outcome_rr"] = None
        out.append(d)
    return out


def cmd_benchmark(ctx: _Context) -> dict:
    ctx.out.mkdir(parents=True, exist_ok=True)
    res = {"benchmarks": run_benchmarks(ctx)}
    _write_json(ctx.out / "benchmarks.json", res)
    return res


def run_fusion(ctx: _Context) -> dict:
    fc = ctx.cfg["fusion"]
    bc = fc["bayes"]
    mi = multiple_impute_u(ctx.main, m=fc["mi_m"], seed=ctx.seed, alpha=ctx.alpha)
    cv, detail = control_variate_estimate(ctx.main, bootstrap_b=fc["cv_bootstrap"],
                                          seed=ctx.seed, alpha=ctx.alpha, detail=True)
    post, bayes = bayes_twin_regression(ctx.main, priors=bc["priors"], chains=bc["chains"],
                                        draws=bc["draws"], burn_in=bc["burn_in"],
                                        seed=ctx.seed, alpha=ctx.alpha)
    res = {"multiple_imputation": mi.to_dict(),
           "control_variate": {**cv.to_dict(), "detail": detail.to_dict()},
           "bayes_twin_regression": {**bayes.to_dict(), "posterior": post.to_dict()}}
    if ctx._registry is not None or ctx.cfg["data"]["registry"] is not None:
        res["registry_prevalence"] = registry_prevalence(ctx.registry, ctx.alpha).to_dict()
    return res


def cmd_fuse(ctx: _Context) -> dict:
    ctx.out.mkdir(parents=True, exist_ok=True)
    res = {"fusion": run_fusion(ctx)}
    _write_json(ctx.out / "fusion.json", res)
    return res


def run_design(ctx: _Context, covariates: list[str] | None = None) -> dict:
    dc = ctx.cfg["design"]
    if dc["dag"] is not None:
        text = dc["dag"]
    elif dc["dag_path"] is not None:
        p = Path(dc["dag_path"])
        if not p.is_file():
            raise ValidationError(f"config field design.dag_path: file not found: {p}")
        text = p.read_text(encoding="utf-8")
    else:
        text = default_dag(covariates if covariates is not None
                           else list(ctx.gen_config().covariate_names))
    dag = parse_dag(text)
    pre = prestudy_evalue(dc["expected_d"], dc["n_treated"], dc["n_control"], ctx.alpha,
                          sd=dc["sd"])
    res = {"dag": {"nodes": len(dag.nodes), "edges": len(dag.edges),
                   **classify_confounders(dag)},
           "prestudy_evalue": pre.to_dict()}
    if dc["target_e_lcl"] is not None:
        res["sample_size"] = required_n_for_robustness(
            dc["expected_d"], dc["target_e_lcl"], ctx.alpha, dc["allocation_ratio"]).to_dict()
    return res


def cmd_design(ctx: _Context) -> dict:
    ctx.out.mkdir(parents=True, exist_ok=True)
    res = {"design": run_design(ctx)}
    _write_json(ctx.out / "design.json", res)
    return res


def cmd_report(ctx: _Context) -> dict:
    """Full pilot pipeline: data, estimates, bounds, benchmarks, fusion and design."""
    ctx.out.mkdir(parents=True, exist_ok=True)
    main = ctx.main
    naive = ctx.naive()
    benchmarks = run_benchmarks(ctx)
    strongest = rank_benchmarks(main, [benchmarks[0]["covariate"]], ctx.outcome_cutpoint(),
                                effect=naive, covariates=ctx.covariates,
                                multiples=ctx.cfg["benchmark"]["multiples"])[0]
    internal = _internal_strength(main, ctx.covariates)
    report = {
        "meta": {"tool": "rwesens", "version": __version__, "command": "report",
                 "seed": ctx.seed, "alpha": ctx.alpha},
        "data_manifest": ctx.manifest,
        "estimates": run_estimates(ctx),
        "evalue": run_evalue(ctx, naive)["evalue"],
        "ovb": run_ovb(ctx, naive, [strongest.point], internal),
        "simframe": run_simframe(ctx),
        "array": run_array(ctx, [strongest.strength.rr]),
        "benchmarks": benchmarks,
        "fusion": run_fusion(ctx),
        "design": run_design(ctx, ctx.covariates),
    }
    _write_json(ctx.out / "report.json", report)
    return report


_HANDLERS = {
    "simulate": cmd_simulate, "estimate": cmd_estimate, "evalue": cmd_evalue, "ovb": cmd_ovb,
    "simframe": cmd_simframe, "array": cmd_array, "benchmark": cmd_benchmark, "fuse": cmd_fuse,
    "design": cmd_design, "report": cmd_report,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rwesens",
                                     description="Sensitivity analysis for unmeasured confounding.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", metavar="command")
    sub.required = True
    for name in COMMANDS:
        p = sub.add_parser(name, help=(_HANDLERS[name].__doc__ or name).strip().splitlines()[0])
        p.add_argument("--config", help="JSON config merged over the defaults")
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="overrides the config seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads (results do not depend on it)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)  # unknown command exits with status 2
    try:
        if args.threads < 1:
            raise ValidationError("--threads must be at least 1")
        if args.seed is not None and args.seed < 0:
            raise ValidationError("--seed must be non-negative")
        cfg = load_config(args.config, args.seed)
        set_threads(args.threads)
        ctx = _Context(cfg, Path(args.out))
        _HANDLERS[args.command](ctx)
    except ValidationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (NumericalError, ArithmeticError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    finally:
        set_threads(1)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
