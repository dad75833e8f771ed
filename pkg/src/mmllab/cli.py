"""Command-line experiment harness.

A single JSON config names the experiment, the environment, the function
classes and the sweep sizes; the harness runs every (seed, size, grid) cell,
writes one CSV row per cell in a fixed column order, and drops a manifest
with the resolved config next to it.  Identical config + master seed gives
byte-identical CSV output regardless of the thread count, which is why
per-cell wall times are only recorded when ``record_timings`` is set.

Exit codes: 0 success, 2 invalid config, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import importlib.resources
import json
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Any

import numpy as np

from . import __version__, _backend
from .ci import ci_bounds
from .classes import FunctionClassHandle
from .losses import IdentityVariant, LossKind
from .lqr import LqrSystem, lqr_literal_return_mc, lqr_model_selection
from .mdp import (
    Policy,
    TabularMdp,
    evaluate_policy,
    random_model,
    random_policy,
)
from .minimax import LossContext
from .pipelines import (
    exact_ope_adversaries,
    exact_opo_adversaries,
    run_ope,
    run_opo,
    run_opo_morel,
)
from .rkhs import KernelKind, KernelSpec, median_bandwidth

EXPERIMENTS = (
    "ope",
    "opo",
    "opo-morel",
    "lqr-figure",
    "lqr-verifiability",
    "ci",
    "bench-losses",
)

CSV_COLUMNS = (
    "experiment",
    "loss_kind",
    "seed",
    "n_transitions",
    "grid_param",
    "j_true",
    "j_estimate",
    "abs_error",
    "bound",
    "log_relative_mse",
    "lower",
    "upper",
    "wall_ms",
    "config_hash",
)

LOSS_KINDS = {k.value: k for k in LossKind}


class ConfigError(ValueError):
    pass


def _fail(path: str, message: str) -> "ConfigError":
    return ConfigError(f"config field '{path}': {message}")


DEFAULTS: dict[str, Any] = {
    "loss_kinds": ["mml"],
    "behavior": "uniform",
    "target": {"type": "random", "seed": 7},
    "models": {"type": "true-plus-random", "count": 4},
    "adversaries": {"type": "exact-ope"},
    "loss_mode": "exact",
    "data_sampling": "iid",
    "n_transitions": [1000],
    "n_seeds": 1,
    "master_seed": 0,
    "output": "out",
    "record_timings": False,
    "resolution": 1,
    # pessimistic-pipeline knobs
    "ensemble_size": 4,
    "penalty": -100.0,
    "episode_length": 8,
    # linear-quadratic knobs
    "model_grid_max": 19,
    "k_target": -1.3,
    "eps_list": [0.0, 0.5, 1.0],
    "mc_rollouts": 20000,
    "mc_horizon": 200,
    # benchmark knobs
    "bench_sizes": {"n_transitions": 50000, "gram_records": 400},
}

LQR_DEFAULTS = {
    "sigma_star": 0.1,
    "sigma_k": 0.1,
    "sigma_0": 0.1,
    "gamma": 0.9,
}


def load_config(path: str) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config root must be a JSON object")
    return doc


def resolve_config(doc: dict[str, Any], base_dir: Path) -> dict[str, Any]:
    """Apply defaults and validate; raises ConfigError with the field named."""
    cfg = dict(DEFAULTS)
    cfg.update(doc)
    if "experiment" not in doc:
        raise _fail("experiment", "missing (one of %s)" % ", ".join(EXPERIMENTS))
    if cfg["experiment"] not in EXPERIMENTS:
        raise _fail("experiment", f"unknown experiment {cfg['experiment']!r}")
    allowed_kinds = {"mml", "mle", "vaml", "vaml-l2", "vaml-l1"}
    for kind in cfg["loss_kinds"]:
        if kind not in allowed_kinds:
            raise _fail(
                "loss_kinds",
                f"unknown loss kind {kind!r} (one of {sorted(allowed_kinds)})",
            )
    if not isinstance(cfg["n_seeds"], int) or cfg["n_seeds"] < 1:
        raise _fail("n_seeds", "must be an integer >= 1")
    if not isinstance(cfg["master_seed"], int):
        raise _fail("master_seed", "must be an integer")
    if cfg["loss_mode"] not in ("exact", "empirical"):
        raise _fail("loss_mode", "must be 'exact' or 'empirical'")
    if not isinstance(cfg["n_transitions"], list) or not all(
        isinstance(n, int) and n >= 1 for n in cfg["n_transitions"]
    ):
        raise _fail("n_transitions", "must be a list of integers >= 1")
    env = cfg.get("environment")
    needs_tabular = cfg["experiment"] in ("ope", "opo", "opo-morel", "ci", "bench-losses")
    if needs_tabular:
        if env is None:
            cfg["environment"] = env = {"type": "bundled", "name": "chain3"}
        etype = env.get("type")
        if etype == "tabular" and "path" in env:
            target = (base_dir / env["path"]).resolve()
            if not target.exists():
                raise _fail("environment.path", f"file {target} does not exist")
        elif etype == "tabular" and "inline" not in env:
            raise _fail("environment", "tabular environment needs 'path' or 'inline'")
        elif etype == "bundled":
            name = env.get("name", "chain3")
            if name != "chain3":
                raise _fail("environment.name", f"unknown bundled environment {name!r}")
        elif etype in ("random",):
            for key in ("n_states", "n_actions", "gamma"):
                if key not in env:
                    raise _fail(f"environment.{key}", "required for random environments")
        elif etype not in ("tabular",):
            raise _fail("environment.type", f"unsupported type {etype!r}")
    else:
        merged = dict(LQR_DEFAULTS)
        merged.update(env or {})
        cfg["environment"] = merged
    adv = cfg["adversaries"]
    if adv.get("type") == "rkhs":
        uses_median = any(
            adv.get(f"bandwidth_{c}", 1.0) == "median" for c in ("s", "a", "snext")
        )
        if uses_median and cfg["loss_mode"] != "empirical":
            raise _fail(
                "adversaries", "median bandwidths need empirical data (loss_mode='empirical')"
            )
    if cfg["experiment"] == "lqr-verifiability":
        if not all(e >= 0 for e in cfg["eps_list"]):
            raise _fail("eps_list", "noise scales must be nonnegative")
    return cfg


def config_hash(cfg: dict[str, Any]) -> str:
    # presentation-only fields must not perturb the hash (or the CSV bytes)
    semantic = {k: v for k, v in cfg.items() if k not in ("output", "record_timings")}
    canon = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:12]


def bundled_mdp(name: str) -> TabularMdp:
    text = (
        importlib.resources.files("mmllab").joinpath(f"fixtures/{name}.json").read_text()
    )
    return TabularMdp.from_json(text)


def _build_mdp(cfg: dict[str, Any], base_dir: Path) -> TabularMdp:
    env = cfg["environment"]
    if env["type"] == "bundled":
        return bundled_mdp(env.get("name", "chain3"))
    if env["type"] == "tabular":
        if "path" in env:
            return TabularMdp.from_json((base_dir / env["path"]).read_text())
        return TabularMdp.from_json(json.dumps(env["inline"]))
    if env["type"] == "random":
        from .mdp import random_mdp

        return random_mdp(
            env["n_states"], env["n_actions"], env["gamma"], env.get("seed", 0),
            min_prob=env.get("min_prob", 0.05),
        )
    raise ConfigError(f"unsupported environment type {env['type']!r}")


def _build_policy(spec: Any, mdp: TabularMdp) -> Policy:
    if spec == "uniform":
        return Policy.uniform(mdp.n_states, mdp.n_actions)
    if isinstance(spec, list):
        return Policy(np.array(spec, dtype=np.float64))
    if isinstance(spec, dict) and spec.get("type") == "random":
        return random_policy(mdp.n_states, mdp.n_actions, spec.get("seed", 7))
    raise ConfigError(f"unsupported policy spec {spec!r}")


def _build_models(cfg: dict[str, Any], mdp: TabularMdp, seed: int):
    spec = cfg["models"]
    kind = spec.get("type")
    if kind == "count":
        return "count-model"
    if kind == "random":
        return [
            random_model(mdp.n_states, mdp.n_actions, seed * 1000 + i)
            for i in range(spec.get("count", 4))
        ]
    if kind == "true-plus-random":
        return [mdp.true_model()] + [
            random_model(mdp.n_states, mdp.n_actions, seed * 1000 + i)
            for i in range(spec.get("count", 4))
        ]
    raise ConfigError(f"unsupported model class {kind!r}")


def _build_adversaries(
    cfg: dict[str, Any],
    mdp: TabularMdp,
    behavior: Policy,
    target: Policy,
    models,
    data=None,
):
    spec = cfg["adversaries"]
    kind = spec.get("type")
    if kind == "exact-ope":
        variant = IdentityVariant(spec.get("variant", "wstar-vp"))
        grid = models if isinstance(models, list) else [mdp.true_model()]
        return exact_ope_adversaries(mdp, target, behavior, grid, variant)
    if kind == "exact-opo":
        grid = models if isinstance(models, list) else [mdp.true_model()]
        handle, _ = exact_opo_adversaries(mdp, behavior, grid)
        return handle
    if kind == "tabular-ball":
        return FunctionClassHandle.tabular_ball(
            spec.get("bound", 1.0), mdp.n_states, mdp.n_actions
        )
    if kind == "rkhs":
        bandwidths = {}
        for coord, field in (("s", "bandwidth_s"), ("a", "bandwidth_a"), ("snext", "bandwidth_snext")):
            value = spec.get(field, 1.0)
            if value == "median":
                if data is None:
                    raise ConfigError("median bandwidths need empirical data")
                value = median_bandwidth(data, coord.upper() if coord != "snext" else "SNEXT")
            bandwidths[field] = float(value)
        kernel = KernelSpec.identity(
            mdp.n_states, mdp.n_actions, KernelKind.RBF_PRODUCT, **bandwidths
        )
        return FunctionClassHandle.rkhs_unit_ball(kernel)
    raise ConfigError(f"unsupported adversary class {kind!r}")


def _loss_kind(name: str) -> LossKind:
    if name == "vaml":
        return LossKind.VAML_L2
    return LOSS_KINDS[name]


def _empty_row(cfg_hash: str, experiment: str) -> dict[str, Any]:
    row = {c: "" for c in CSV_COLUMNS}
    row["experiment"] = experiment
    row["config_hash"] = cfg_hash
    return row


def _fmt(x: float | None) -> str:
    if x is None:
        return ""
    return repr(float(x))


def _tabular_cells(cfg):
    cells = []
    for seed_idx in range(cfg["n_seeds"]):
        for n in cfg["n_transitions"]:
            for kind in cfg["loss_kinds"]:
                cells.append({"seed": cfg["master_seed"] + seed_idx, "n": n, "loss": kind})
    return cells


def _run_tabular_cell(cfg, mdp, cell, cfg_hash):
    behavior = _build_policy(cfg["behavior"], mdp)
    target = _build_policy(cfg["target"], mdp)
    models = _build_models(cfg, mdp, cell["seed"])
    kind = _loss_kind(cell["loss"])
    row = _empty_row(cfg_hash, cfg["experiment"])
    row.update(loss_kind=cell["loss"], seed=cell["seed"], n_transitions=cell["n"])
    grid_desc = cfg["models"].get("type")
    row["grid_param"] = grid_desc
    if cfg["experiment"] == "ope":
        adv = _build_adversaries(cfg, mdp, behavior, target, models)
        report, _ = run_ope(
            mdp, behavior, target, models, adv, kind,
            cell["n"], cell["seed"], cfg["loss_mode"], cfg["data_sampling"],
            cfg["resolution"],
        )
        row.update(
            j_true=_fmt(report.j_true),
            j_estimate=_fmt(report.j_model),
            abs_error=_fmt(report.abs_error),
            bound=_fmt(report.bound),
            log_relative_mse=_fmt(report.log_relative_mse),
        )
    elif cfg["experiment"] == "opo":
        grid = models if isinstance(models, list) else [mdp.true_model()]
        adv = _build_adversaries(cfg, mdp, behavior, target, grid)
        report, _ = run_opo(
            mdp, behavior, grid, adv, kind,
            cell["n"], cell["seed"], cfg["loss_mode"], cfg["data_sampling"],
            cfg["resolution"],
        )
        row.update(
            j_true=_fmt(report.j_optimal),
            j_estimate=_fmt(report.j_achieved),
            abs_error=_fmt(report.suboptimality),
            bound=_fmt(report.bound),
        )
    elif cfg["experiment"] == "opo-morel":
        grid = models if isinstance(models, list) else [mdp.true_model()]
        adv = _build_adversaries(cfg, mdp, behavior, target, grid)
        report = run_opo_morel(
            mdp, behavior, grid, adv, kind, cell["n"], cell["seed"],
            cfg["ensemble_size"], cfg["penalty"],
            resolution=cfg["resolution"], episode_length=cfg["episode_length"],
        )
        row.update(
            grid_param=f"ensemble={cfg['ensemble_size']}",
            j_true=_fmt(report.j_optimal),
            j_estimate=_fmt(report.j_policy),
            abs_error=_fmt(abs(report.j_optimal - report.j_policy)),
            lower=_fmt(report.j_behavior),
        )
    elif cfg["experiment"] == "ci":
        grid = models if isinstance(models, list) else [mdp.true_model()]
        adv = _build_adversaries(cfg, mdp, behavior, target, grid)
        if cfg["loss_mode"] == "exact":
            context = LossContext.exact(mdp, behavior)
        else:
            from .pipelines import _make_context

            context = _make_context(
                mdp, behavior, "empirical", cell["n"], cell["seed"], cfg["data_sampling"]
            )
        j_true = evaluate_policy(mdp, target)
        result = ci_bounds(context, grid, adv, mdp.gamma, cfg["resolution"], j_true)
        row.update(
            j_true=_fmt(j_true),
            j_estimate=_fmt(result.midpoint),
            abs_error=_fmt(abs(result.midpoint - j_true)),
            lower=_fmt(result.lower),
            upper=_fmt(result.upper),
        )
    else:
        raise ConfigError(f"unsupported experiment {cfg['experiment']!r}")
    return row


def _lqr_system(cfg) -> LqrSystem:
    env = cfg["environment"]
    return LqrSystem.benchmark_1d(
        sigma_star=env["sigma_star"],
        sigma_k=env["sigma_k"],
        sigma_0=env["sigma_0"],
        gamma=env["gamma"],
    )


def _run_lqr_figure(cfg, cfg_hash):
    from .lqr import lqr_model_grid

    system = _lqr_system(cfg)
    k_target = np.array([[cfg["k_target"]]])
    j_lit_true = lqr_literal_return_mc(
        system, system.a_true, system.b_true, k_target, system.sigma_star,
        cfg["mc_horizon"], cfg["mc_rollouts"], cfg["master_seed"],
    )
    grid = lqr_model_grid(cfg["model_grid_max"])
    lit_cache: dict[int, float] = {}
    rows = []
    for kind in cfg["loss_kinds"]:
        selection = lqr_model_selection(
            system, k_target, cfg["model_grid_max"], loss_kind=kind,
            seed=cfg["master_seed"],
        )
        for sel in selection:
            row = _empty_row(cfg_hash, "lqr-figure")
            row.update(
                loss_kind=kind,
                seed=cfg["master_seed"],
                grid_param=sel.m,
                j_true=_fmt(sel.j_true),
                j_estimate=_fmt(sel.j_chosen),
                abs_error=_fmt(sel.ope_error),
                bound=_fmt(sel.inner_value),
            )
            rows.append(row)
            if sel.chosen_index not in lit_cache:
                a_sel, b_sel = grid[sel.chosen_index]
                lit_cache[sel.chosen_index] = lqr_literal_return_mc(
                    system, a_sel, b_sel, k_target, 0.0,
                    cfg["mc_horizon"], cfg["mc_rollouts"], cfg["master_seed"] + 1,
                )
            j_lit_model = lit_cache[sel.chosen_index]
            lit = _empty_row(cfg_hash, "lqr-figure-literal")
            lit.update(
                loss_kind=kind,
                seed=cfg["master_seed"],
                grid_param=sel.m,
                j_true=_fmt(j_lit_true),
                j_estimate=_fmt(j_lit_model),
                abs_error=_fmt(abs(j_lit_true - j_lit_model)),
            )
            rows.append(lit)
    return rows


def _run_lqr_verifiability(cfg, cfg_hash):
    system = _lqr_system(cfg)
    k_target = np.array([[cfg["k_target"]]])
    rows = []
    for kind in cfg["loss_kinds"]:
        for eps in cfg["eps_list"]:
            for seed_idx in range(cfg["n_seeds"]):
                seed = cfg["master_seed"] + seed_idx
                selection = lqr_model_selection(
                    system, k_target, cfg["model_grid_max"], loss_kind=kind,
                    v_noise_eps=eps, seed=seed,
                )
                for sel in selection:
                    row = _empty_row(cfg_hash, "lqr-verifiability")
                    row.update(
                        loss_kind=kind,
                        seed=seed,
                        grid_param=f"M={sel.m};eps={eps}",
                        j_true=_fmt(sel.j_true),
                        j_estimate=_fmt(sel.j_chosen),
                        abs_error=_fmt(sel.ope_error),
                        bound=_fmt(sel.inner_value),
                    )
                    rows.append(row)
    return rows


def _run_bench(cfg, cfg_hash, out_dir: Path):
    """Compare the kernel backends on seeded workloads.

    Agreement numbers go into the CSV (deterministic); wall-clock timings go
    to bench_timings.json, which is excluded from the byte-identity contract.
    """
    from .mdp import random_mdp

    sizes = cfg["bench_sizes"]
    mdp = random_mdp(6, 3, 0.9, cfg["master_seed"], min_prob=0.02)
    behavior = Policy.uniform(6, 3)
    rows = []
    timings: dict[str, dict[str, float]] = {}
    backends = _backend.available_backends()
    results: dict[str, dict[str, float]] = {name: {} for name in backends}
    for name in backends:
        impl = _backend.get_backend(name)
        rng = np.random.default_rng(cfg["master_seed"])
        n = sizes["n_transitions"]
        episode_length = 50
        n_episodes = -(-n // episode_length)
        u_init = rng.random(n_episodes)
        u_act = rng.random((n_episodes, episode_length))
        u_next = rng.random((n_episodes, episode_length))
        t0 = time.perf_counter()
        s, a, sn, ep = impl.simulate_episodes(
            mdp.transition, behavior.probs, mdp.d0, u_init, u_act, u_next,
            episode_length, n,
        )
        t1 = time.perf_counter()
        results[name]["simulate"] = float(np.asarray(s).sum() + np.asarray(sn).sum())
        m = 2000
        u_init2 = rng.random(m)
        u_act2 = rng.random((m, 101))
        u_next2 = rng.random((m, 101))
        t2 = time.perf_counter()
        ret = impl.rollout_returns(
            mdp.transition, behavior.probs, mdp.d0, mdp.reward_mean, mdp.gamma,
            100, u_init2, u_act2, u_next2,
        )
        t3 = time.perf_counter()
        results[name]["rollout"] = float(np.asarray(ret).mean())
        ng = sizes["gram_records"]
        gsa = rng.random((ng, ng))
        gsa = 0.5 * (gsa + gsa.T)
        rows_p = rng.dirichlet(np.ones(6), size=ng)
        k3 = np.exp(-0.5 * (np.arange(6.0)[:, None] - np.arange(6.0)[None, :]) ** 2)
        snext = rng.integers(0, 6, size=ng)
        mrows = rows_p @ k3
        t4 = time.perf_counter()
        gram = impl.gram_accumulate(
            np.ascontiguousarray(gsa), np.ascontiguousarray(mrows),
            np.ascontiguousarray(rows_p), np.ascontiguousarray(k3),
            np.ascontiguousarray(snext),
        )
        t5 = time.perf_counter()
        results[name]["gram"] = float(gram)
        timings[name] = {
            "simulate_ms": (t1 - t0) * 1e3,
            "rollout_ms": (t3 - t2) * 1e3,
            "gram_ms": (t5 - t4) * 1e3,
        }
    reference = "python"
    other = "compiled" if "compiled" in backends else None
    for kernel, size in (("simulate", sizes["n_transitions"]), ("rollout", 2000), ("gram", sizes["gram_records"])):
        row = _empty_row(cfg_hash, "bench-losses")
        row.update(
            loss_kind=kernel,
            seed=cfg["master_seed"],
            grid_param=size,
            j_true=_fmt(results[reference][kernel]),
        )
        if other:
            row["j_estimate"] = _fmt(results[other][kernel])
            row["abs_error"] = _fmt(abs(results[other][kernel] - results[reference][kernel]))
        rows.append(row)
    (out_dir / "bench_timings.json").write_text(
        json.dumps({"backends": backends, "timings": timings}, indent=2), encoding="utf-8"
    )
    return rows


def run(cfg: dict[str, Any], base_dir: Path, threads: int) -> tuple[list[dict], Path]:
    cfg_hash = config_hash(cfg)
    out_dir = base_dir / cfg["output"]
    out_dir.mkdir(parents=True, exist_ok=True)
    experiment = cfg["experiment"]
    if experiment in ("ope", "opo", "opo-morel", "ci"):
        mdp = _build_mdp(cfg, base_dir)
        cells = _tabular_cells(cfg)

        def work(cell):
            start = time.perf_counter()
            row = _run_tabular_cell(cfg, mdp, cell, cfg_hash)
            if cfg["record_timings"]:
                row["wall_ms"] = _fmt((time.perf_counter() - start) * 1e3)
            return row

        if threads > 1:
            with ThreadPoolExecutor(max_workers=threads) as pool:
                rows = list(pool.map(work, cells))
        else:
            rows = [work(cell) for cell in cells]
    elif experiment == "lqr-figure":
        rows = _run_lqr_figure(cfg, cfg_hash)
    elif experiment == "lqr-verifiability":
        rows = _run_lqr_verifiability(cfg, cfg_hash)
    elif experiment == "bench-losses":
        rows = _run_bench(cfg, cfg_hash, out_dir)
    else:
        raise ConfigError(f"unsupported experiment {experiment!r}")
    return rows, out_dir


def write_outputs(cfg, rows, out_dir: Path) -> Path:
    csv_path = out_dir / "results.csv"
    with open(csv_path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=list(CSV_COLUMNS), lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)
    manifest = {
        "config": cfg,
        "config_hash": config_hash(cfg),
        "version": __version__,
        "master_seed": cfg["master_seed"],
        "backend": _backend.BACKEND,
        "csv": csv_path.name,
    }
    (out_dir / "manifest.json").write_text(
        json.dumps(manifest, indent=2, sort_keys=True), encoding="utf-8"
    )
    return csv_path


def validate(cfg: dict[str, Any]) -> str:
    """Schema/referential checks only; returns the resolved-parameter dump."""
    return "OK\n" + json.dumps(cfg, indent=2, sort_keys=True)


def main(argv: list[str] | None = None) -> int:
    parser = argparse.ArgumentParser(
        prog="mmllab", description="off-policy model-learning experiment harness"
    )
    parser.add_argument("--config", required=True, help="path to the JSON config")
    parser.add_argument("--seed", type=int, default=None, help="override master_seed")
    parser.add_argument("--out", default=None, help="override the output directory")
    parser.add_argument("--threads", type=int, default=None,
                        help="worker threads (default: MMLLAB_THREADS or 1)")
    parser.add_argument("--validate", action="store_true",
                        help="validate the config and print resolved defaults")
    args = parser.parse_args(argv)
    try:
        doc = load_config(args.config)
        base_dir = Path(args.config).resolve().parent
        cfg = resolve_config(doc, base_dir)
        if args.seed is not None:
            cfg["master_seed"] = args.seed
        if args.out is not None:
            cfg["output"] = args.out
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    if args.validate:
        print(validate(cfg))
        return 0
    threads = args.threads
    if threads is None:
        threads = int(os.environ.get("MMLLAB_THREADS", "1"))
    try:
        rows, out_dir = run(cfg, base_dir, max(threads, 1))
        csv_path = write_outputs(cfg, rows, out_dir)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (ArithmeticError, np.linalg.LinAlgError, ValueError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3
    print(f"wrote {csv_path}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
