"""Command-line interface.

Settings come from built-in defaults, then an optional INI file
(``--config``), then ``--section.key`` flags. Exit status is 0 on success,
1 for computation errors and 2 for usage or I/O errors.
"""

from __future__ import annotations

import argparse
import configparser
import json
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable

import numpy as np

from . import __version__
from .dag import Dag, count_dags
from .dataset import DatasetError, load_csv
from .exact import exact_posterior
from .experiments import DEFAULT_GRID, SCENARIO_SEED, calibrate_gamma, get_scenario, run_scenario
from .mcmc import ChainOutput, McmcConfig, class_distribution, effective_sample_size, empirical_distribution, run_chain
from .score import HyperParams, PriorSpec
from .synth import RELEASE_MODES, chain_from_distribution, dump_json, posterior_predictive, release_output
from .utility import StatisticSpec


class ConfigError(ValueError):
    pass


def _opt_int(text: str) -> int | None:
    return None if str(text).strip().lower() in ("", "none", "auto") else int(text)


def _opt_str(text: str) -> str | None:
    return None if str(text).strip() == "" else str(text)


# dotted key -> (parser, default, help)
KEYS: dict[str, tuple[Callable[[str], Any], Any, str]] = {
    "data.path": (_opt_str, None, "CSV file of 0/1 columns with a header row"),
    "hyper.alpha": (float, 1.0, "Beta prior first parameter"),
    "hyper.beta": (float, 1.0, "Beta prior second parameter"),
    "prior.gamma": (float, 0.0, "network penalty weight (0 = uniform prior)"),
    "prior.exponent": (float, 1.0, "network penalty exponent"),
    "mcmc.iterations": (int, 20_000, "total Gibbs iterations"),
    "mcmc.burn_in": (int, 2_000, "discarded initial iterations"),
    "mcmc.lag": (_opt_int, None, "thinning interval (default keeps about 1000 samples)"),
    "mcmc.block_size": (int, 1, "rows resampled jointly per iteration (1-3)"),
    "mcmc.max_parents": (int, 3, "maximum parents per node"),
    "mcmc.seed": (int, 0, "root random seed"),
    "synth.statistics": (str, "", "semicolon-separated statistics, e.g. 'mle:X2|X1=0;chi2:X1,X2'"),
    "synth.mode": (int, 5, "release mode 1-5"),
    "synth.keep_datasets": (_opt_int, None, "synthetic datasets kept in memory (default from mode)"),
    "synth.subset": (int, 5, "datasets released by mode 3 (5-10)"),
    "synth.n": (_opt_int, None, "synthetic row count (default: original n)"),
    "output.dir": (str, "out", "output directory"),
    "run.threads": (int, 1, "worker cap; results do not depend on it"),
}

ALIASES = {
    "--data": "data.path",
    "--seed": "mcmc.seed",
    "--out": "output.dir",
    "--threads": "run.threads",
    "--gamma": "prior.gamma",
    "--mode": "synth.mode",
}


@dataclass
class RunConfig:
    values: dict[str, Any]

    def __getitem__(self, key: str) -> Any:
        return self.values[key]

    @property
    def hyper(self) -> HyperParams:
        return _checked("hyper", lambda: HyperParams(self["hyper.alpha"], self["hyper.beta"]))

    @property
    def prior(self) -> PriorSpec:
        return _checked("prior", lambda: PriorSpec(self["prior.gamma"], self["prior.exponent"]))

    @property
    def mcmc(self) -> McmcConfig:
        return _checked(
            "mcmc",
            lambda: McmcConfig(
                iterations=self["mcmc.iterations"],
                burn_in=self["mcmc.burn_in"],
                lag=self["mcmc.lag"],
                block_size=self["mcmc.block_size"],
                max_parents=self["mcmc.max_parents"],
                seed=self["mcmc.seed"],
            ),
        )

    @property
    def out_dir(self) -> Path:
        p = Path(self["output.dir"])
        p.mkdir(parents=True, exist_ok=True)
        return p


def _checked(section: str, build: Callable[[], Any]) -> Any:
    try:
        return build()
    except ValueError as exc:
        raise ConfigError(f"[{section}] {exc}") from None


def load_config(path: str | None, overrides: dict[str, str]) -> RunConfig:
    raw: dict[str, str] = {}
    if path:
        cp = configparser.ConfigParser()
        if not Path(path).is_file():
            raise FileNotFoundError(f"config file not found: {path}")
        cp.read(path, encoding="utf-8")
        for section in cp.sections():
            for key, val in cp.items(section):
                dotted = f"{section}.{key}"
                if dotted not in KEYS:
                    raise ConfigError(f"{path}: unknown setting {dotted}")
                raw[dotted] = val
    raw.update(overrides)
    values = {}
    for key, (parse, default, _) in KEYS.items():
        if key in raw:
            try:
                values[key] = parse(raw[key])
            except ValueError:
                raise ConfigError(f"{key}: cannot parse {raw[key]!r}") from None
        else:
            values[key] = default
    return RunConfig(values)


def _data(cfg: RunConfig):
    path = cfg["data.path"]
    if not path:
        raise ConfigError("data.path is required (use --data)")
    return load_csv(path)


def _write(obj: dict, path: Path) -> Path:
    dump_json(obj, path)
    print(f"wrote {path}")
    return path


def _statistics(cfg: RunConfig, names) -> list[StatisticSpec]:
    text = cfg["synth.statistics"]
    try:
        specs = [StatisticSpec.parse(t, names) for t in text.split(";") if t.strip()]
        for s in specs:
            s.validate(len(names))
    except ValueError as exc:
        raise ConfigError(f"synth.statistics: {exc}") from None
    return specs


def cmd_fit(cfg: RunConfig, args) -> int:
    data = _data(cfg)
    chain = run_chain(data, cfg.hyper, cfg.prior, cfg.mcmc)
    out = cfg.out_dir
    _write(chain.to_dict(), out / "chain.json")
    by_class = class_distribution(chain.samples)
    dags = empirical_distribution(chain.samples)
    reps: dict = {}
    for code in dags:
        key = Dag.decode(code, chain.d).equivalence_key()
        reps.setdefault(key, code)
    ess = effective_sample_size(chain.log_posterior) if len(chain.log_posterior) >= 10 else None
    summary = {
        "d": chain.d,
        "names": list(data.names),
        "n": data.n,
        "M": len(chain.samples),
        "seed": chain.seed,
        "ess_log_posterior": ess,
        "top_classes": [
            {"class": str(k), "probability": p, "representative": reps[k]}
            for k, p in list(by_class.items())[:10]
        ],
        "top_dags": [{"dag": c, "probability": p} for c, p in list(dags.items())[:10]],
    }
    _write(summary, out / "summary.json")
    return 0


def cmd_synth(cfg: RunConfig, args) -> int:
    data = _data(cfg)
    mode = cfg["synth.mode"]
    if mode not in RELEASE_MODES:
        raise ConfigError(f"synth.mode must be 1..5, got {mode}")
    if args.posterior:
        obj = json.loads(Path(args.posterior).read_text(encoding="utf-8"))
        chain = chain_from_distribution(
            obj["distribution"], int(obj["d"]), args.draws or int(obj["M"]), cfg["mcmc.seed"], data.names, cfg.hyper
        )
    elif args.chain:
        chain = ChainOutput.from_dict(json.loads(Path(args.chain).read_text(encoding="utf-8")))
    else:
        raise ConfigError("synth needs --chain or --posterior")
    if chain.d != data.d:
        raise ConfigError(f"chain has {chain.d} nodes but the data has {data.d} columns")
    out = cfg.out_dir
    print(f"release mode {mode}: {RELEASE_MODES[mode]}")
    result = None
    if mode != 1:
        specs = _statistics(cfg, data.names)
        keep = cfg["synth.keep_datasets"]
        if keep is None:
            keep = {2: len(chain.samples), 3: cfg["synth.subset"]}.get(mode, 0)
        result = posterior_predictive(
            data, chain, cfg.hyper, specs, keep_datasets=keep, n=cfg["synth.n"], threads=cfg["run.threads"]
        )
    paths = release_output(mode, out, chain, result, subset=cfg["synth.subset"])
    for p in paths:
        print(f"wrote {p}")
    return 0


def cmd_exact(cfg: RunConfig, args) -> int:
    data = _data(cfg)
    ep = exact_posterior(data, cfg.hyper, cfg.prior, cfg["mcmc.max_parents"])
    obj = ep.to_dict()
    obj["names"] = list(data.names)
    obj["prior"] = {"gamma": cfg.prior.gamma, "exponent": cfg.prior.exponent}
    _write(obj, cfg.out_dir / "exact.json")
    return 0


def cmd_simulate(cfg: RunConfig, args) -> int:
    s = get_scenario(args.scenario, args.scenario_seed, args.replications)
    methods = tuple(m for m in args.methods.split(",") if m) if args.methods else ()
    report = run_scenario(
        s, cfg.prior, cfg.hyper, cfg.mcmc, methods, threads=cfg["run.threads"], with_exact=not args.no_exact
    )
    out = cfg.out_dir
    _write(report.to_dict(), out / f"scenario_{s.id}.json")
    csv_path = out / f"scenario_{s.id}.csv"
    csv_path.write_text(report.to_csv(), encoding="utf-8")
    print(f"wrote {csv_path}")
    return 0


def parse_grid(text: str) -> list[float]:
    """``start:stop:step`` (inclusive) or a comma-separated list."""
    if ":" in text:
        start, stop, step = (float(x) for x in text.split(":"))
        if step <= 0:
            raise ValueError("grid step must be positive")
        count = int(np.floor((stop - start) / step + 1e-9)) + 1
        return [round(start + i * step, 10) for i in range(count)]
    return [float(x) for x in text.split(",") if x.strip()]


def cmd_calibrate(cfg: RunConfig, args) -> int:
    s = get_scenario(args.scenario, args.scenario_seed, args.replications)
    try:
        grid = parse_grid(args.grid) if args.grid else list(DEFAULT_GRID)
    except ValueError as exc:
        raise ConfigError(f"--grid: {exc}") from None
    res = calibrate_gamma(
        s,
        grid,
        args.threshold,
        cfg.hyper,
        use_mcmc=args.mcmc,
        mcmc_config=cfg.mcmc,
        threads=cfg["run.threads"],
    )
    _write(res.to_dict(), cfg.out_dir / f"calibration_{s.id}.json")
    return 0


def cmd_count_dags(cfg: RunConfig, args) -> int:
    if args.d < 1:
        raise ConfigError("d must be at least 1")
    width = len(f"{count_dags(args.d):,}")
    print(f"{'nodes':>5}  {'DAGs':>{width}}")
    for k in range(1, args.d + 1):
        print(f"{k:>5}  {count_dags(k):>{width},}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="INI file of settings")
    for key, (_, default, help_) in KEYS.items():
        common.add_argument(f"--{key}", dest=key, default=argparse.SUPPRESS, metavar="VALUE", help=f"{help_} [{default}]")
    for flag, key in ALIASES.items():
        common.add_argument(flag, dest=key, default=argparse.SUPPRESS, metavar="VALUE", help=f"alias of --{key}")

    parser = argparse.ArgumentParser(prog="bnsynth", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("fit", parents=[common], help="sample the structure posterior").set_defaults(func=cmd_fit)

    p = sub.add_parser("synth", parents=[common], help="posterior-predictive release")
    p.add_argument("--chain", help="chain.json written by fit")
    p.add_argument("--posterior", help="mode-1 release to resample structures from")
    p.add_argument("--draws", type=int, help="structures drawn from --posterior (default: its M)")
    p.set_defaults(func=cmd_synth)

    sub.add_parser("exact", parents=[common], help="exact posterior by enumeration (d <= 5)").set_defaults(
        func=cmd_exact
    )

    for name, func, help_ in (
        ("simulate", cmd_simulate, "run a built-in simulation scenario"),
        ("calibrate", cmd_calibrate, "gamma calibration curve for a scenario"),
    ):
        p = sub.add_parser(name, parents=[common], help=help_)
        p.add_argument("--scenario", required=True, help="scenario id, e.g. d3_n1000")
        p.add_argument("--replications", type=int, default=10)
        p.add_argument("--scenario-seed", type=int, default=SCENARIO_SEED, help="root seed of the scenario")
        p.set_defaults(func=func)
        if name == "simulate":
            p.add_argument("--methods", default="S1,S2", help="comma-separated subset of S1,S2 ('' for none)")
            p.add_argument("--no-exact", action="store_true", help="skip the exact oracle")
        else:
            p.add_argument("--grid", help="start:stop:step or comma list [0:10:0.5]")
            p.add_argument("--threshold", type=float, default=0.85)
            p.add_argument("--mcmc", action="store_true", help="estimate with the sampler instead of enumeration")

    p = sub.add_parser("count-dags", help="number of DAGs on 1..d nodes")
    p.add_argument("d", type=int)
    p.set_defaults(func=cmd_count_dags, config=None)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k in KEYS}
    try:
        cfg = load_config(getattr(args, "config", None), overrides)
        return args.func(cfg, args)
    except (ConfigError, DatasetError, KeyError, OSError) as exc:
        msg = exc.args[0] if isinstance(exc, KeyError) and exc.args else exc
        print(f"bnsynth: error: {msg}", file=sys.stderr)
        return 2
    except (ValueError, ArithmeticError, RuntimeError) as exc:
        print(f"bnsynth: computation failed: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
