"""Experiment harness: dataset generation, algorithm runs, the target-size
sweep, and the lower-bound scaling study, all driven by flat key=value
config files and emitting deterministic CSVs.

Subcommands: gen, run, table1, lowerbound, disc.  MSA_THREADS caps the
harness-level parallelism (per-seed / per-cover-point maps); outputs are
written in deterministic order regardless of completion order.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import os
import sys
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import replace
from pathlib import Path

import numpy as np

from .baselines import BaselineKind, run_baseline
from .core import (
    ConfigError,
    Dataset,
    DomainCollection,
    LossSpec,
    MsaError,
    REGRESSION,
    empirical_loss,
    load_dataset,
    save_dataset,
)
from .erm import MixtureSolver, TrainConfig, save_model, train_dataset
from .discrepancy import disc_estimate
from .lmsa import (
    EnsembleHypothesis,
    MinmaxConfig,
    lmsa_boost,
    lmsa_minmax,
    lmsa_select,
)
from .lowerbound import simulate_penalty
from .simplex import default_cover_epsilon, make_cover
from .synth import ToyRegressionSpec, gen_example1, gen_toy_regression, subset_target

ALGORITHMS = (
    "lmsa", "lmsa_boost", "lmsa_minmax",
    "target_only", "best_single_source", "combined_sources",
    "sources_plus_target", "sources_plus_target_equal", "pairwise_disc", "conv_disc",
)


def _threads() -> int:
    try:
        return max(1, int(os.environ.get("MSA_THREADS", "1")))
    except ValueError:
        return 1


# ---------------------------------------------------------------------------
# Flat key=value config files: `#` comments, unknown keys are hard errors.
# ---------------------------------------------------------------------------

def _parse_bool(v: str) -> bool:
    if v.lower() in ("1", "true", "yes", "on"):
        return True
    if v.lower() in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"expected a boolean, got {v!r}")


def _parse_float_list(v: str):
    return tuple(float(x) for x in v.split(",") if x.strip())


def _parse_int_list(v: str):
    return tuple(int(x) for x in v.split(",") if x.strip())


def _positive(x, key):
    if x <= 0:
        raise ConfigError(f"{key} must be > 0, got {x}")
    return x


def _nonneg(x, key):
    if x < 0:
        raise ConfigError(f"{key} must be >= 0, got {x}")
    return x


_COMMON_SOLVER_KEYS = {
    "seed": (int, lambda v, k: _nonneg(v, k)),
    "erm.reg": (float, lambda v, k: _nonneg(v, k)),
    "erm.tol": (float, _positive),
    "erm.max_iters": (int, _positive),
    "loss.M": (float, _positive),
    "loss.B": (float, _positive),
    "loss.mu": (float, lambda v, k: _nonneg(v, k)),
    "minmax.steps": (int, _positive),
    "minmax.eta_h": (float, _positive),
    "minmax.eta_lambda": (float, _positive),
    "minmax.eta_gamma": (float, _positive),
    "minmax.gamma_init": (float, lambda v, k: _nonneg(v, k)),
    "minmax.gamma_max": (float, _positive),
    "minmax.inner_h_steps": (int, _positive),
    "minmax.loss_band": (float, lambda v, k: _nonneg(v, k)),
}

RUN_KEYS = {
    **_COMMON_SOLVER_KEYS,
    "data": (str, None),
    "out": (str, None),
    "algorithm": (str, None),
    "target-split": (_parse_bool, None),
    "cover.epsilon": (float, _positive),
    "boost.s": (int, _positive),
    "boost.T": (int, lambda v, k: _nonneg(v, k)),
    "boost.hierarchical": (_parse_bool, None),
    "disc.restarts": (int, _positive),
    "disc.iters": (int, _positive),
    "pairwise.gamma": (float, _positive),
    "conv.c": (float, _positive),
    "conv.d_proxy": (float, _positive),
    "conv.epsilon": (float, _positive),
    "conv.delta": (float, _positive),
}

TABLE1_KEYS = {
    **_COMMON_SOLVER_KEYS,
    "out": (str, None),
    "seeds": (int, _positive),
    "m0.list": (_parse_int_list, None),
    "test.n": (int, _positive),
    "toy.p": (int, _positive),
    "toy.d": (int, _positive),
    "toy.m_k": (int, _positive),
    "toy.sigma_sq": (float, lambda v, k: _nonneg(v, k)),
    "toy.lambda_star": (_parse_float_list, None),
}

LOWERBOUND_KEYS = {
    "out": (str, None),
    "p.list": (_parse_int_list, None),
    "m0.list": (_parse_int_list, None),
    "trials": (int, _positive),
    "seed": (int, lambda v, k: _nonneg(v, k)),
    "algorithm": (str, None),
    "plot": (_parse_bool, None),
}


def parse_config_file(path) -> dict[str, str]:
    if not Path(path).exists():
        raise ConfigError(f"config file not found: {path}")
    out: dict[str, str] = {}
    with open(path, "r", encoding="utf-8") as fh:
        for ln, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigError(f"{path}:{ln}: expected key=value, got {raw.strip()!r}")
            key, value = line.split("=", 1)
            out[key.strip()] = value.strip()
    return out


def validate_config(raw: dict[str, str], schema: dict, what: str) -> dict:
    conf = {}
    for key, value in raw.items():
        if key not in schema:
            raise ConfigError(f"unknown {what} config key {key!r}")
        parser, check = schema[key]
        try:
            parsed = parser(value)
        except ConfigError:
            raise
        except Exception as exc:
            raise ConfigError(f"bad value for {key}: {value!r} ({exc})") from exc
        if check is not None:
            parsed = check(parsed, key)
        conf[key] = parsed
    return conf


def _gather_config(args) -> dict[str, str]:
    """Optional config file merged with --set key=value overrides."""
    raw = parse_config_file(args.config) if getattr(args, "config", None) else {}
    for item in getattr(args, "set", None) or []:
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, value = item.split("=", 1)
        raw[key.strip()] = value.strip()
    return raw


def _mkdir(path: str) -> Path:
    p = Path(path)
    if p.exists():
        return p
    try:
        p.mkdir(parents=False, exist_ok=True)
    except FileNotFoundError as exc:
        raise ConfigError(f"output directory {p} cannot be created: missing parent {p.parent}") from exc
    return p


def _loss_from_conf(conf: dict, task: str) -> LossSpec:
    kind = "squared" if task == REGRESSION else "multinomial-log"
    kw = {
        "bound_M": conf.get("loss.M", 1.0),
        "norm_ball_B": conf.get("loss.B", 100.0),
        "regularization": conf.get("erm.reg", 1e-3),
    }
    if "loss.mu" in conf:
        kw["strong_convexity_mu"] = conf["loss.mu"]
    return LossSpec(kind=kind, **kw)


def _train_cfg(conf: dict) -> TrainConfig:
    return TrainConfig(max_iters=conf.get("erm.max_iters", 5000),
                       tol=conf.get("erm.tol", 1e-8),
                       seed=conf.get("seed", 0))


def _minmax_cfg(conf: dict) -> MinmaxConfig:
    return MinmaxConfig(
        steps=conf.get("minmax.steps", 1500),
        eta_h=conf.get("minmax.eta_h", 0.5),
        eta_lambda=conf.get("minmax.eta_lambda", 0.5),
        eta_gamma=conf.get("minmax.eta_gamma", 1.0),
        gamma_init=conf.get("minmax.gamma_init", 10.0),
        gamma_max=conf.get("minmax.gamma_max", 100.0),
        inner_h_steps=conf.get("minmax.inner_h_steps", 5),
        loss_band=conf.get("minmax.loss_band", 0.05),
        seed=conf.get("seed", 0))


# ---------------------------------------------------------------------------
# gen
# ---------------------------------------------------------------------------

def cmd_gen(args) -> int:
    out = _mkdir(args.out)
    if args.what == "toy":
        if args.lambda_star is not None:
            lam = tuple(float(v) for v in args.lambda_star.split(","))
        elif args.p == 4:
            lam = (0.7, 0.1, 0.1, 0.1)
        else:
            lam = tuple(1.0 / args.p for _ in range(args.p))
        spec = ToyRegressionSpec(p=args.p, d=args.d, m_k=args.m_k, m0=args.m0,
                                 lambda_star=lam, sigma_sq=args.sigma_sq,
                                 seed=args.seed, test_n=args.test_n)
        coll, oracle = gen_toy_regression(spec)
        for k, ds in enumerate(coll.sources, start=1):
            save_dataset(ds, out / f"source_{k}.txt")
        save_dataset(coll.target, out / "target.txt")
        save_dataset(oracle.test, out / "test.txt")
        sidecar = {
            "kind": "toy", "p": spec.p, "d": spec.d, "m_k": spec.m_k, "m0": spec.m0,
            "sigma_sq": spec.sigma_sq, "seed": spec.seed,
            "lambda_star": list(spec.lambda_star),
            "w": [[float(v) for v in row] for row in oracle.w],
        }
        with open(out / "oracle.json", "w", encoding="utf-8") as fh:
            json.dump(sidecar, fh, indent=1, sort_keys=True)
    else:
        coll, oracle = gen_example1(args.n, seed=args.seed, sigma_sq=args.sigma_sq)
        for k, ds in enumerate(coll.sources, start=1):
            save_dataset(ds, out / f"source_{k}.txt")
        save_dataset(coll.target, out / "target.txt")
        save_dataset(oracle.test, out / "test.txt")
        report = {
            "kind": "example1", "n": args.n, "seed": args.seed, "sigma_sq": args.sigma_sq,
            "w1": list(map(float, oracle.w1)), "w2": list(map(float, oracle.w2)),
            "w3": list(map(float, oracle.w3)), "offset": oracle.offset,
            "disc01": oracle.disc01, "disc02": oracle.disc02, "disc03": oracle.disc03,
            "goal": oracle.goal,
            "norm_ball_B": oracle.loss.norm_ball_B, "bound_M": oracle.loss.bound_M,
        }
        with open(out / "calibration.json", "w", encoding="utf-8") as fh:
            json.dump(report, fh, indent=1, sort_keys=True)
    return 0


# ---------------------------------------------------------------------------
# run
# ---------------------------------------------------------------------------

def _load_collection(data_dir) -> tuple[DomainCollection, Dataset]:
    data = Path(data_dir)
    if not data.is_dir():
        raise ConfigError(f"data directory not found: {data}")
    sources = []
    k = 1
    while (data / f"source_{k}.txt").exists():
        sources.append(load_dataset(data / f"source_{k}.txt", domain_id=k))
        k += 1
    if not sources:
        raise ConfigError(f"no source_<k>.txt files in {data}")
    target_path = data / "target.txt"
    test_path = data / "test.txt"
    if not target_path.exists() or not test_path.exists():
        raise ConfigError(f"{data} must contain target.txt and test.txt")
    target = load_dataset(target_path, domain_id=0)
    test = load_dataset(test_path, domain_id=0)
    coll = DomainCollection(target=target, sources=tuple(sources), task=target.task)
    return coll, test


def _collapse_ensemble(ens: EnsembleHypothesis):
    """A convex combination of affine regressors is the affine regressor with
    the mixed parameters; classification ensembles do not collapse."""
    from .core import Hypothesis
    w = sum(a * h.weights for a, h in ens.members)
    b = sum(a * float(h.intercept) for a, h in ens.members)
    return Hypothesis(weights=w, intercept=b, task=REGRESSION)


def _save_ensemble(ens: EnsembleHypothesis, path) -> None:
    lines = ["msa-ensemble v1", f"members={len(ens.members)}"]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
        for a, h in ens.members:
            fh.write(f"alpha={a:.17g}\n")
            if h.task == REGRESSION:
                fh.write(",".join(f"{v:.17g}" for v in h.weights) + "\n")
                fh.write(f"{float(h.intercept):.17g}\n")
            else:
                for row in h.weights:
                    fh.write(",".join(f"{v:.17g}" for v in row) + "\n")
                fh.write(",".join(f"{v:.17g}" for v in np.asarray(h.intercept)) + "\n")


def _run_algorithm(name: str, coll: DomainCollection, loss: LossSpec, conf: dict,
                   out: Path, tag: str):
    cfg = _train_cfg(conf)
    seed = conf.get("seed", 0)
    lam = None
    if name == "lmsa":
        epsilon = conf.get("cover.epsilon", default_cover_epsilon(coll.p))
        cover = make_cover(coll.p, epsilon)
        model, report = lmsa_select(coll, cover, loss, cfg)
        report.save_csv(out / f"report_{tag}.csv")
        lam = report.chosen_lambda
    elif name == "lmsa_boost":
        epsilon = conf.get("cover.epsilon", default_cover_epsilon(coll.p))
        cover = make_cover(coll.p, epsilon)
        ens, _trace = lmsa_boost(coll, cover, loss, cfg, s=conf.get("boost.s", 8),
                                 rounds=conf.get("boost.T", 20), seed=seed,
                                 hierarchical=conf.get("boost.hierarchical", False))
        if coll.task == REGRESSION:
            model = _collapse_ensemble(ens)
        else:
            _save_ensemble(ens, out / f"model_{tag}.txt")
            model = ens
    elif name == "lmsa_minmax":
        model, state = lmsa_minmax(coll, loss, _minmax_cfg(conf))
        lam = state.lam
    else:
        hyper = {"seed": seed,
                 "disc_restarts": conf.get("disc.restarts", 8),
                 "disc_iters": conf.get("disc.iters", 300)}
        if name == "pairwise_disc" and "pairwise.gamma" in conf:
            hyper["gamma"] = conf["pairwise.gamma"]
        if name == "conv_disc":
            hyper.update({"c": conf.get("conv.c", 1.0),
                          "epsilon": conf.get("conv.epsilon", 0.1),
                          "delta": conf.get("conv.delta", 0.1)})
            if "conv.d_proxy" in conf:
                hyper["d_proxy"] = conf["conv.d_proxy"]
        model, meta = run_baseline(BaselineKind(name), coll, loss, cfg, hyper)
        lam = meta.get("lambda")
    return model, lam


def cmd_run(args) -> int:
    conf = validate_config(_gather_config(args), RUN_KEYS, "run")
    for req in ("data", "out", "algorithm"):
        if req not in conf:
            raise ConfigError(f"run config needs {req}=...")
    name = conf["algorithm"]
    if name not in ALGORITHMS:
        raise ConfigError(f"unknown algorithm {name!r}; choose from {ALGORITHMS}")
    out = _mkdir(conf["out"])
    coll, test = _load_collection(conf["data"])
    loss = _loss_from_conf(conf, coll.task)
    seed = conf.get("seed", 0)

    protocols = [("full", coll)]
    if conf.get("target-split", False):
        rng = np.random.default_rng([seed, 99])
        perm = rng.permutation(coll.m0)
        n_extra = int(math.floor(0.8 * coll.m0))
        if n_extra < 1 or coll.m0 - n_extra < 1:
            raise ConfigError("target too small for the 80/20 split protocol")
        t = coll.target
        extra = Dataset(domain_id=coll.p + 1, X=t.X[perm[:n_extra]], y=t.y[perm[:n_extra]],
                        task=t.task, n_classes=t.n_classes)
        rest = Dataset(domain_id=0, X=t.X[perm[n_extra:]], y=t.y[perm[n_extra:]],
                       task=t.task, n_classes=t.n_classes)
        split = DomainCollection(target=rest, sources=(*coll.sources, extra), task=coll.task)
        protocols.append(("split", split))

    rows = []
    for tag, c in protocols:
        t0 = time.perf_counter()
        model, lam = _run_algorithm(name, c, loss, conf, out, tag)
        wall = time.perf_counter() - t0
        if not isinstance(model, EnsembleHypothesis):
            save_model(model, out / f"model_{tag}.txt")
        train_loss = empirical_loss(model, c.target, loss)
        test_loss = empirical_loss(model, test, loss)
        rows.append({
            "algorithm": name, "protocol": tag, "seed": seed,
            "lambda": "|".join(f"{v:.17g}" for v in lam) if lam is not None else "",
            "train_loss": f"{train_loss:.17g}", "test_loss": f"{test_loss:.17g}",
            "wall_time_s": f"{wall:.3f}",
        })
    if len(rows) > 1:
        better = min(rows, key=lambda r: float(r["test_loss"]))
        rows.append({**better, "protocol": "better"})

    with open(out / "results.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=["algorithm", "protocol", "seed", "lambda",
                                                "train_loss", "test_loss", "wall_time_s"])
        writer.writeheader()
        writer.writerows(rows)
    return 0


# ---------------------------------------------------------------------------
# table1: test loss as a function of the target sample size
# ---------------------------------------------------------------------------

def cmd_table1(args) -> int:
    conf = validate_config(_gather_config(args), TABLE1_KEYS, "table1")
    if "out" not in conf:
        raise ConfigError("table1 config needs out=...")
    out = _mkdir(conf["out"])
    m0_list = sorted(conf.get("m0.list", (50, 100, 200, 300, 400)))
    n_seeds = conf.get("seeds", 10)
    base_seed = conf.get("seed", 0)
    p = conf.get("toy.p", 4)
    lam_star = conf.get("toy.lambda_star",
                        (0.7, 0.1, 0.1, 0.1) if p == 4 else tuple(1.0 / p for _ in range(p)))
    spec0 = ToyRegressionSpec(
        p=p, d=conf.get("toy.d", 100), m_k=conf.get("toy.m_k", 10000),
        m0=max(m0_list), lambda_star=lam_star,
        sigma_sq=conf.get("toy.sigma_sq", 0.01), test_n=conf.get("test.n", 20000))
    loss = _loss_from_conf(conf, REGRESSION)
    mm_cfg = _minmax_cfg(conf)
    cfg = _train_cfg(conf)

    def one_seed(i: int):
        spec = replace(spec0, seed=base_seed + i)
        coll, oracle = gen_toy_regression(spec)
        solver = MixtureSolver(coll, loss, include_target=False)
        h_oracle = solver.solve(np.array(oracle.lambda_star))
        oracle_loss = empirical_loss(h_oracle, oracle.test, loss)
        out_rows = {}
        for m0 in m0_list:
            sub = subset_target(coll, m0)
            h_t = train_dataset(sub.target, loss, cfg)
            h_mm, _state = lmsa_minmax(sub, loss, mm_cfg)
            out_rows[m0] = (empirical_loss(h_t, oracle.test, loss),
                            empirical_loss(h_mm, oracle.test, loss),
                            oracle_loss)
        return out_rows

    workers = _threads()
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            per_seed = list(pool.map(one_seed, range(n_seeds)))
    else:
        per_seed = [one_seed(i) for i in range(n_seeds)]

    with open(out / "table1.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m0", "target_only_x1000", "lmsa_minmax_x1000", "oracle_x1000",
                         "n_seeds", "base_seed"])
        for m0 in m0_list:
            t = 1000.0 * float(np.mean([rows[m0][0] for rows in per_seed]))
            mm = 1000.0 * float(np.mean([rows[m0][1] for rows in per_seed]))
            orc = 1000.0 * float(np.mean([rows[m0][2] for rows in per_seed]))
            writer.writerow([m0, f"{t:.6g}", f"{mm:.6g}", f"{orc:.6g}", n_seeds, base_seed])
    return 0


# ---------------------------------------------------------------------------
# lowerbound: empirical sqrt(p/m0) scaling
# ---------------------------------------------------------------------------

def cmd_lowerbound(args) -> int:
    conf = validate_config(_gather_config(args), LOWERBOUND_KEYS, "lowerbound")
    if "out" not in conf:
        raise ConfigError("lowerbound config needs out=...")
    algorithm = conf.get("algorithm", "plugin")
    if algorithm not in ("plugin", "lmsa"):
        raise ConfigError("lowerbound algorithm must be plugin or lmsa")
    out = _mkdir(conf["out"])
    rows = simulate_penalty(conf.get("p.list", (4, 8, 16)),
                            conf.get("m0.list", (50, 100, 200, 400)),
                            trials=conf.get("trials", 500),
                            algorithm=algorithm,
                            seed=conf.get("seed", 0))
    with open(out / "lowerbound.csv", "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["p", "m0", "epsilon", "mean_excess", "stderr"])
        for r in rows:
            writer.writerow([r.p, r.m0, f"{r.epsilon:.17g}", f"{r.mean_excess:.17g}",
                             f"{r.stderr:.17g}"])
    if conf.get("plot", True):
        import matplotlib
        matplotlib.use("Agg")
        import matplotlib.pyplot as plt
        fig, ax = plt.subplots(figsize=(5, 4))
        for p in sorted(set(r.p for r in rows)):
            sub = [r for r in rows if r.p == p]
            x = [math.sqrt(r.p / r.m0) for r in sub]
            y = [r.mean_excess for r in sub]
            ax.plot(x, y, marker="o", label=f"p={p}")
        ax.set_xlabel("sqrt(p / m0)")
        ax.set_ylabel("mean excess risk")
        ax.legend()
        fig.tight_layout()
        fig.savefig(out / "scaling.png", dpi=120)
        plt.close(fig)
    return 0


# ---------------------------------------------------------------------------
# disc: one discrepancy estimate between two dataset files
# ---------------------------------------------------------------------------

def cmd_disc(args) -> int:
    a = load_dataset(args.a, domain_id=1)
    b = load_dataset(args.b, domain_id=2)
    kind = "squared" if a.task == REGRESSION else ("zero-one" if args.zero_one else "multinomial-log")
    loss = LossSpec(kind=kind, bound_M=args.M, norm_ball_B=args.B)
    est = disc_estimate(a, b, loss, method=args.method, restarts=args.restarts,
                        iters=args.iters, resolution=args.resolution, seed=args.seed,
                        with_intercept=not args.no_intercept)
    print(f"disc={est.value:.12g} method={est.method} restarts={est.restarts_used}")
    if args.out:
        save_model(est.witness, args.out)
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="msadapt",
                                     description="multiple-source adaptation experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    gen = sub.add_parser("gen", help="generate synthetic dataset files")
    gsub = gen.add_subparsers(dest="what", required=True)
    toy = gsub.add_parser("toy", help="Gaussian mixture-of-linear-tasks benchmark")
    toy.add_argument("--out", required=True)
    toy.add_argument("--seed", type=int, default=0)
    toy.add_argument("--p", type=int, default=4)
    toy.add_argument("--d", type=int, default=100)
    toy.add_argument("--m-k", dest="m_k", type=int, default=10000)
    toy.add_argument("--m0", type=int, default=100)
    toy.add_argument("--sigma-sq", dest="sigma_sq", type=float, default=0.01)
    toy.add_argument("--lambda-star", dest="lambda_star", default=None,
                     help="comma-separated mixture; default 0.7,0.1,0.1,0.1 for p=4, else uniform")
    toy.add_argument("--test-n", dest="test_n", type=int, default=20000)
    toy.set_defaults(func=cmd_gen)
    ex1 = gsub.add_parser("example1", help="three-source counterexample instance")
    ex1.add_argument("--out", required=True)
    ex1.add_argument("--n", type=int, default=2000)
    ex1.add_argument("--seed", type=int, default=0)
    ex1.add_argument("--sigma-sq", dest="sigma_sq", type=float, default=0.01)
    ex1.set_defaults(func=cmd_gen)

    run = sub.add_parser("run", help="run one algorithm or baseline on generated data")
    run.add_argument("--config", required=True)
    run.add_argument("--set", action="append", metavar="KEY=VALUE",
                     help="override a config entry")
    run.set_defaults(func=cmd_run)

    t1 = sub.add_parser("table1", help="target-size sweep on the toy benchmark")
    t1.add_argument("--config")
    t1.add_argument("--set", action="append", metavar="KEY=VALUE")
    t1.set_defaults(func=cmd_table1)

    lb = sub.add_parser("lowerbound", help="model-selection penalty scaling study")
    lb.add_argument("--config")
    lb.add_argument("--set", action="append", metavar="KEY=VALUE")
    lb.set_defaults(func=cmd_lowerbound)

    dsc = sub.add_parser("disc", help="estimate the discrepancy between two dataset files")
    dsc.add_argument("--a", required=True)
    dsc.add_argument("--b", required=True)
    dsc.add_argument("--method", choices=("ascent", "grid-oracle"), default="ascent")
    dsc.add_argument("--restarts", type=int, default=16)
    dsc.add_argument("--iters", type=int, default=500)
    dsc.add_argument("--resolution", type=float, default=1e-2)
    dsc.add_argument("--seed", type=int, default=0)
    dsc.add_argument("--M", type=float, default=1.0)
    dsc.add_argument("--B", type=float, default=100.0)
    dsc.add_argument("--no-intercept", action="store_true")
    dsc.add_argument("--zero-one", action="store_true",
                     help="use zero-one loss (classification, grid-oracle only)")
    dsc.add_argument("--out", help="write the witness model file here")
    dsc.set_defaults(func=cmd_disc)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except MsaError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
