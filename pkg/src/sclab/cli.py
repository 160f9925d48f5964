"""Command-line front end: strict INI configs, scenario runners, CSV outputs.

Configs are flat INI sections (syntax in the README). Parsing is strict:
unknown sections or keys are fatal, and every problem found is reported, not
just the first. Exit codes: 0 success, 2 config error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import io
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass
from pathlib import Path

import numpy as np
import scipy

from . import __version__, bounds, kernels, loop
from .distributions import Gauss1D, Gauss2D, GaussMixture1D, TargetDensity, kl_gauss1d
from .divergences import kl_quadrature, tv_quadrature
from .kernels import KernelSpec
from .loop import (
    BalancedSizes,
    ConstantSizes,
    DiffusionGenerator,
    ExplicitSizes,
    KdeGenerator,
    LoopConfig,
    QuarticSizes,
)
from .mixing import MixtureSchedule
from . import diffusion as diffusion_mod

SCENARIOS = (
    "kde_rate",
    "full_synthetic",
    "balanced",
    "fixed_ratio_sweep",
    "real_each_gen",
    "diffusion_1d",
    "bounds_report",
    "phase_transition",
)

LOOP_SCENARIOS = ("full_synthetic", "balanced", "real_each_gen", "diffusion_1d")

RESULT_COLUMNS = (
    "scenario",
    "replicate",
    "generation",
    "n_total",
    "n_real",
    "tv_est",
    "tv_method",
    "tv_tol",
    "bound_value",
    "kl_prior",
    "seed",
    "runtime_ms",
)

BOUND_COLUMNS = ("schedule", "i", "k", "A_k", "bound_term", "total_bound")

PHASE_COLUMNS = ("i", "lam", "f_value", "lambda_star")

SEED_ENV_VAR = "SCLAB_SEED"

_ROW_KEY = re.compile(r"row[0-9]+")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_RUNTIME = 3


class ConfigError(ValueError):
    """Carries every validation problem found in a config document."""

    def __init__(self, errors):
        self.errors = list(errors)
        super().__init__("; ".join(self.errors))


# ----------------------------------------------------------------------------
# value parsers


def _p_int(text):
    return int(text)


def _p_pos_int(text):
    v = int(text)
    if v < 1:
        raise ValueError(f"{v} is not a positive count")
    return v


def _p_float(text):
    v = float(text)
    if not math.isfinite(v):
        raise ValueError(f"{text!r} is not a finite number")
    return v


def _p_pos_float(text):
    v = _p_float(text)
    if not v > 0:
        raise ValueError(f"{v} must be positive")
    return v


def _p_seed(text):
    v = int(text)
    if not 0 <= v < 2**64:
        raise ValueError("seed must fit in 64 bits")
    return v


def _p_enum(*choices):
    def parse(text):
        if text not in choices:
            raise ValueError(f"{text!r} not one of {choices}")
        return text

    return parse


def _p_int_list(text):
    vals = [int(v.strip()) for v in text.split(",") if v.strip()]
    if not vals:
        raise ValueError("empty list")
    return tuple(vals)


def _p_float_list(text):
    vals = [_p_float(v.strip()) for v in text.split(",") if v.strip()]
    if not vals:
        raise ValueError("empty list")
    return tuple(vals)


def _p_components(text):
    comps = []
    for chunk in text.split(","):
        parts = chunk.strip().split(":")
        if len(parts) != 3:
            raise ValueError(f"component {chunk.strip()!r} is not weight:mean:std")
        comps.append(tuple(float(p) for p in parts))
    return tuple(comps)


def _p_size_rule(text):
    head, _, rest = text.partition(":")
    if head == "constant":
        return ConstantSizes(_p_pos_int(rest))
    if head == "list":
        return ExplicitSizes(_p_int_list(rest))
    if head == "quartic":
        return QuarticSizes(_p_pos_float(rest))
    if head == "balanced":
        return BalancedSizes(_p_pos_float(rest))
    raise ValueError(
        f"{text!r}: expected constant:N, list:n0,n1,..., quartic:eps or balanced:eps"
    )


# ----------------------------------------------------------------------------
# schema: section -> key -> (required, parser, default-as-string)

_RUN_KEYS = {
    "scenario": (True, _p_enum(*SCENARIOS), None),
    "out_dir": (False, str, "out"),
    "base_seed": (True, _p_seed, None),
    "replicates": (False, _p_pos_int, "1"),
}

_TARGET_KEYS = {
    "kind": (True, _p_enum("gauss1d", "gauss_mixture1d", "gauss2d"), None),
    "mean": (False, str, None),
    "std": (False, _p_pos_float, None),
    "components": (False, _p_components, None),
    "var": (False, _p_float_list, None),
}

_SCHEDULE_KEYS = {
    "kind": (
        True,
        _p_enum("general", "full_synthetic", "balanced", "fixed_ratio", "real_each_gen"),
        None,
    ),
    "max_generation": (True, _p_pos_int, None),
    "n_real": (False, _p_pos_int, None),
    "m_synth": (False, _p_int, None),
    "alpha": (False, _p_pos_float, None),
}

_LOOP_KEYS = {
    "generator": (True, _p_enum("kde", "diffusion"), None),
    "sample_sizes": (True, _p_size_rule, None),
    "delta": (False, _p_pos_float, "0.1"),
    "eval_nodes": (False, _p_pos_int, "4096"),
    "eval_samples": (False, _p_pos_int, "100000"),
}

_KDE_KEYS = {
    "kernel": (
        False,
        _p_enum("gaussian", "epanechnikov", "higher_order_gaussian"),
        "gaussian",
    ),
    "order": (False, _p_pos_int, None),
}

_DIFFUSION_KEYS = {
    "horizon": (False, _p_pos_float, "3.0"),
    "reverse_steps": (False, _p_pos_int, "500"),
    "embed_dim": (False, _p_pos_int, "8"),
    "width_factor": (False, _p_pos_float, "1.0"),
    "tau_factor": (False, _p_pos_float, "1.0"),
    "lr": (False, _p_pos_float, None),
}

_KDE_RATE_KEYS = {
    "sizes": (True, _p_int_list, None),
    "seeds": (False, _p_pos_int, "10"),
}

_SWEEP_KEYS = {
    "n_real": (True, _p_pos_int, None),
    "lambdas": (True, _p_float_list, None),
    "max_generation": (True, _p_pos_int, None),
}

_PHASE_KEYS = {
    "i_values": (True, _p_int_list, None),
    "lambda_max": (False, _p_pos_float, "20.0"),
    "lambda_steps": (False, _p_pos_int, "201"),
}

_BOUNDS_KEYS = {
    "family": (False, _p_enum("diffusion", "kde", "flow"), "diffusion"),
    "n": (True, _p_size_rule, None),
    "d": (False, _p_pos_int, "1"),
    "delta": (False, _p_pos_float, "0.1"),
    "kl": (False, _p_float_list, "0.0"),
    "s": (False, _p_pos_int, None),
    "r_cap": (False, _p_pos_float, None),
    "i": (False, _p_pos_int, None),
}


def _schema_for(scenario: str) -> dict[str, dict]:
    schema = {"run": _RUN_KEYS}
    if scenario == "kde_rate":
        schema.update(target=_TARGET_KEYS, kde=_KDE_KEYS, kde_rate=_KDE_RATE_KEYS)
    elif scenario in LOOP_SCENARIOS:
        schema.update(
            target=_TARGET_KEYS,
            schedule=_SCHEDULE_KEYS,
            loop=_LOOP_KEYS,
            kde=_KDE_KEYS,
            diffusion=_DIFFUSION_KEYS,
        )
    elif scenario == "fixed_ratio_sweep":
        schema.update(
            target=_TARGET_KEYS,
            loop=_LOOP_KEYS,
            kde=_KDE_KEYS,
            diffusion=_DIFFUSION_KEYS,
            sweep=_SWEEP_KEYS,
        )
    elif scenario == "bounds_report":
        schema.update(schedule=_SCHEDULE_KEYS, bounds=_BOUNDS_KEYS)
    elif scenario == "phase_transition":
        schema.update(phase=_PHASE_KEYS)
    return schema


@dataclass
class ExperimentConfig:
    scenario: str
    out_dir: Path
    base_seed: int
    replicates: int
    values: dict  # parsed per-section key values
    echo: dict  # canonical resolved strings, for the manifest

    def manifest_text(self, comments: tuple[str, ...] = ()) -> str:
        buf = io.StringIO()
        for line in comments:
            buf.write(f"; {line}\n")
        for section, keys in self.echo.items():
            buf.write(f"[{section}]\n")
            for key, value in keys.items():
                buf.write(f"{key} = {value}\n")
            buf.write("\n")
        return buf.getvalue()


def _read_sections(text: str, errors: list[str]) -> dict[str, dict[str, str]]:
    parser = configparser.ConfigParser(interpolation=None, delimiters=("=",))
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        errors.append(f"syntax: {exc}")
        return {}
    return {s: dict(parser.items(s)) for s in parser.sections()}


def parse_config(text: str, overrides: dict | None = None) -> ExperimentConfig:
    """Validate a config document, reporting every error it contains.

    ``overrides`` maps [run] keys (base_seed, replicates, out_dir) to
    replacement string values before validation, which is how the CLI flags
    and the seed environment variable take precedence.
    """
    errors: list[str] = []
    sections = _read_sections(text, errors)
    if errors:
        raise ConfigError(errors)

    run = sections.get("run", {})
    if overrides:
        run = {**run, **{k: str(v) for k, v in overrides.items()}}
        sections = {**sections, "run": run}
    scenario = run.get("scenario")
    if "run" not in sections:
        errors.append("missing [run] section")
    if scenario not in SCENARIOS:
        errors.append(
            f"run.scenario: {scenario!r} not one of {SCENARIOS}"
            if scenario
            else "run.scenario: missing required key"
        )
        raise ConfigError(errors)

    schema = _schema_for(scenario)
    values: dict[str, dict] = {}
    echo: dict[str, dict[str, str]] = {}

    for section, keys in schema.items():
        present = sections.get(section, {})
        values[section] = {}
        echo[section] = {}
        for key, (required, parse, default) in keys.items():
            raw = present.get(key, default)
            if raw is None:
                if required:
                    errors.append(f"{section}.{key}: missing required key")
                continue
            try:
                values[section][key] = parse(raw)
                echo[section][key] = raw
            except (ValueError, TypeError) as exc:
                errors.append(f"{section}.{key}: {exc}")
        for key in present:
            if key in keys:
                continue
            # general schedules carry one explicit weight row per generation
            if section == "schedule" and _ROW_KEY.fullmatch(key):
                values[section].setdefault("_rows", {})[int(key[3:])] = present[key]
                echo[section][key] = present[key]
                continue
            errors.append(f"{section}.{key}: unknown key")
    for section in sections:
        if section not in schema:
            errors.append(f"[{section}]: unknown section for scenario {scenario}")

    if not errors:
        _validate_semantics(scenario, values, errors)
    if errors:
        raise ConfigError(errors)

    return ExperimentConfig(
        scenario=scenario,
        out_dir=Path(values["run"]["out_dir"]),
        base_seed=values["run"]["base_seed"],
        replicates=values["run"]["replicates"],
        values=values,
        echo=echo,
    )


def _build_target(v: dict, errors: list[str]) -> TargetDensity | None:
    kind = v.get("kind")
    try:
        if kind == "gauss1d":
            mean = float(v.get("mean", "0.0") or 0.0)
            return Gauss1D(mean=mean, std=v.get("std", 1.0) or 1.0)
        if kind == "gauss_mixture1d":
            if "components" not in v:
                errors.append("target.components: missing required key for mixtures")
                return None
            return GaussMixture1D(components=v["components"])
        if kind == "gauss2d":
            mean = _p_float_list(v.get("mean", "0,0") if isinstance(v.get("mean"), str) else "0,0")
            var = v.get("var", (1.0, 1.0))
            return Gauss2D(mean=tuple(mean), var=tuple(var))
    except ValueError as exc:
        errors.append(f"target: {exc}")
    return None


def _build_schedule(v: dict, errors: list[str]) -> MixtureSchedule | None:
    kind = v.get("kind")
    gens = v.get("max_generation")
    if kind is None or gens is None:
        return None
    rows_raw = v.get("_rows", {})
    if kind != "general" and rows_raw:
        errors.append("schedule: explicit rows are only valid for kind general")
        return None
    try:
        if kind == "full_synthetic":
            return MixtureSchedule.full_synthetic(gens)
        if kind == "balanced":
            return MixtureSchedule.balanced(gens)
        if kind == "fixed_ratio":
            if v.get("n_real") is None or v.get("m_synth") is None:
                errors.append("schedule: fixed_ratio needs n_real and m_synth")
                return None
            return MixtureSchedule.fixed_ratio(v["n_real"], v["m_synth"], gens)
        if kind == "real_each_gen":
            if v.get("alpha") is None:
                errors.append("schedule: real_each_gen needs alpha")
                return None
            return MixtureSchedule.real_each_gen(v["alpha"], gens)
        # general: row<i> = alpha, beta_1, ..., beta_i for every generation
        rows = []
        ok = True
        for i in range(1, gens + 1):
            if i not in rows_raw:
                errors.append(f"schedule.row{i}: missing required key")
                ok = False
                continue
            try:
                weights = _p_float_list(rows_raw[i])
            except ValueError as exc:
                errors.append(f"schedule.row{i}: {exc}")
                ok = False
                continue
            rows.append((weights[0], tuple(weights[1:])))
        for i in rows_raw:
            if i > gens:
                errors.append(f"schedule.row{i}: beyond max_generation {gens}")
                ok = False
        if not ok:
            return None
        return MixtureSchedule.general(rows)
    except ValueError as exc:
        errors.append(f"schedule: {exc}")
    return None


def _validate_semantics(scenario: str, values: dict, errors: list[str]) -> None:
    if "target" in values:
        target = _build_target(values["target"], errors)
        values["target_obj"] = target
        if scenario == "diffusion_1d" and target is not None and target.dim != 1:
            errors.append("target: diffusion_1d needs a one-dimensional target")
    if "schedule" in values:
        schedule = _build_schedule(values["schedule"], errors)
        values["schedule_obj"] = schedule
        if schedule is not None and scenario in LOOP_SCENARIOS:
            expect = {
                "full_synthetic": "full_synthetic",
                "balanced": "balanced",
                "real_each_gen": "real_each_gen",
            }.get(scenario)
            if expect and schedule.kind != expect:
                errors.append(
                    f"schedule.kind: scenario {scenario} requires kind {expect}"
                )
    if scenario in LOOP_SCENARIOS or scenario == "fixed_ratio_sweep":
        gen_kind = values.get("loop", {}).get("generator")
        if scenario == "diffusion_1d" and gen_kind != "diffusion":
            errors.append("loop.generator: diffusion_1d requires the diffusion generator")
        if gen_kind == "kde":
            try:
                values["generator_obj"] = KdeGenerator(
                    kernel=KernelSpec(
                        values["kde"].get("kernel", "gaussian"),
                        values["kde"].get(
                            "order",
                            2 if values["kde"].get("kernel", "gaussian") != "higher_order_gaussian" else 4,
                        ),
                    )
                )
            except ValueError as exc:
                errors.append(f"kde: {exc}")
        elif gen_kind == "diffusion":
            dv = values.get("diffusion", {})
            try:
                values["generator_obj"] = DiffusionGenerator(
                    cfg=diffusion_mod.DiffusionConfig(
                        horizon=dv.get("horizon", 3.0),
                        reverse_steps=dv.get("reverse_steps", 500),
                        embed_dim=dv.get("embed_dim", 8),
                    ),
                    width_factor=dv.get("width_factor", 1.0),
                    tau_factor=dv.get("tau_factor", 1.0),
                    lr=dv.get("lr"),
                )
            except ValueError as exc:
                errors.append(f"diffusion: {exc}")
    if scenario == "bounds_report":
        bv = values.get("bounds", {})
        family = bv.get("family", "diffusion")
        if family == "kde" and bv.get("s") is None:
            errors.append("bounds.s: required for the kde family")
        if family == "flow" and bv.get("r_cap") is None:
            errors.append("bounds.r_cap: required for the flow family")


# ----------------------------------------------------------------------------
# output helpers


def _format_cell(v) -> str:
    if isinstance(v, float):
        return repr(float(v))  # builtin float: shortest round-trip repr
    return str(v)


def write_csv_atomic(path: Path, columns, rows) -> None:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([_format_cell(row[c]) for c in columns])
    tmp = path.with_name(path.name + ".tmp")
    tmp.write_text(buf.getvalue(), encoding="utf-8")
    os.replace(tmp, path)


def _write_manifest(cfg: ExperimentConfig, out_dir: Path, started: float) -> None:
    comments = (
        f"sclab {__version__}, numpy {np.__version__}, scipy {scipy.__version__}, "
        f"python {sys.version.split()[0]}",
        f"wall time {time.time() - started:.3f} s",
    )
    tmp = out_dir / "manifest.ini.tmp"
    tmp.write_text(cfg.manifest_text(comments), encoding="utf-8")
    os.replace(tmp, out_dir / "manifest.ini")


# ----------------------------------------------------------------------------
# scenario runners


def _loop_config(cfg: ExperimentConfig, schedule: MixtureSchedule, scenario_sizes=None):
    lv = cfg.values["loop"]
    return LoopConfig(
        generator=cfg.values["generator_obj"],
        schedule=schedule,
        p0=cfg.values["target_obj"],
        sample_sizes=scenario_sizes or lv["sample_sizes"],
        max_generation=schedule.max_generation,
        replicates=cfg.replicates,
        base_seed=cfg.base_seed,
        delta=lv["delta"],
        eval_nodes=lv["eval_nodes"],
        eval_samples=lv["eval_samples"],
    )


def _bound_rows_for(schedule, sizes, d, delta, generator, kl_terms=None):
    i = max(0, schedule.max_generation - 1)
    inputs = bounds.BoundInputs(
        n=tuple(sizes[: i + 1]),
        d=d,
        delta=delta,
        kl_terms=kl_terms,
        s=generator.smoothness if isinstance(generator, KdeGenerator) else None,
    )
    family = "kde" if isinstance(generator, KdeGenerator) else "diffusion"
    return bounds.bound_table_rows(schedule, inputs, family)


def _run_loop_scenario(cfg: ExperimentConfig, out_dir: Path) -> None:
    schedule = cfg.values["schedule_obj"]
    lcfg = _loop_config(cfg, schedule)
    traces, _ = loop.run_replicates(lcfg)
    rows = []
    for trace in traces:
        rows.extend(loop.trace_rows(trace, cfg.scenario))
    write_csv_atomic(out_dir / "results.csv", RESULT_COLUMNS, rows)
    sizes = lcfg.resolved_sizes()
    write_csv_atomic(
        out_dir / "bounds.csv",
        BOUND_COLUMNS,
        _bound_rows_for(schedule, sizes, lcfg.p0.dim, lcfg.delta, lcfg.generator),
    )


def _run_kde_rate(cfg: ExperimentConfig, out_dir: Path) -> None:
    target = cfg.values["target_obj"]
    kv = cfg.values["kde"]
    kernel = KernelSpec(
        kv.get("kernel", "gaussian"),
        kv.get("order", 2 if kv.get("kernel", "gaussian") != "higher_order_gaussian" else 4),
    )
    sizes = cfg.values["kde_rate"]["sizes"]
    n_seeds = cfg.values["kde_rate"]["seeds"]
    seed_grid = np.random.default_rng([cfg.base_seed, 0x6B5E]).integers(
        0, 2**63, size=(len(sizes), n_seeds)
    )
    rows = []
    for j, n in enumerate(sizes):
        for r in range(n_seeds):
            seed = int(seed_grid[j, r])
            data = target.sample(n, seed)
            model = kernels.fit(data, kernel)
            err = kernels.l1_error(model, target)
            rows.append(
                {
                    "scenario": cfg.scenario,
                    "replicate": r,
                    "generation": 1,
                    "n_total": n,
                    "n_real": n,
                    "tv_est": err,
                    "tv_method": "quadrature",
                    "tv_tol": 1e-4,
                    "bound_value": bounds.bound_kde(
                        MixtureSchedule.full_synthetic(1),
                        bounds.BoundInputs(n=(n,), d=target.dim, s=kernel.order),
                    ),
                    "kl_prior": "",
                    "seed": seed,
                    "runtime_ms": 0,
                }
            )
    write_csv_atomic(out_dir / "results.csv", RESULT_COLUMNS, rows)


def _run_fixed_ratio_sweep(cfg: ExperimentConfig, out_dir: Path) -> None:
    sw = cfg.values["sweep"]
    n_real = sw["n_real"]
    rows = []
    bound_rows = []
    for lam in sw["lambdas"]:
        m = int(round(lam * n_real))
        schedule = MixtureSchedule.fixed_ratio(n_real, m, sw["max_generation"])
        label = f"{cfg.scenario}:lambda={lam:g}"
        lcfg = _loop_config(cfg, schedule, scenario_sizes=ConstantSizes(n_real + m))
        traces, _ = loop.run_replicates(lcfg)
        for trace in traces:
            rows.extend(loop.trace_rows(trace, label))
        for row in _bound_rows_for(
            schedule, lcfg.resolved_sizes(), lcfg.p0.dim, lcfg.delta, lcfg.generator
        ):
            bound_rows.append({**row, "schedule": label})
    write_csv_atomic(out_dir / "results.csv", RESULT_COLUMNS, rows)
    write_csv_atomic(out_dir / "bounds.csv", BOUND_COLUMNS, bound_rows)


def _run_bounds_report(cfg: ExperimentConfig, out_dir: Path) -> None:
    schedule = cfg.values["schedule_obj"]
    bv = cfg.values["bounds"]
    i = bv.get("i", schedule.max_generation)
    if i > schedule.max_generation:
        raise ConfigError([f"bounds.i: {i} exceeds schedule.max_generation"])
    kl = bv["kl"]
    kl_terms = tuple(kl) * (i + 1) if len(kl) == 1 else tuple(kl)
    try:
        sizes = bv["n"].resolve(i + 1, bv["d"])
        inputs = bounds.BoundInputs(
            n=sizes,
            d=bv["d"],
            delta=bv["delta"],
            kl_terms=kl_terms,
            s=bv.get("s"),
            R=bv.get("r_cap"),
        )
    except ValueError as exc:
        raise ConfigError([f"bounds: {exc}"]) from exc
    write_csv_atomic(
        out_dir / "bounds.csv",
        BOUND_COLUMNS,
        bounds.bound_table_rows(schedule, inputs, bv["family"]),
    )


def _run_phase_transition(cfg: ExperimentConfig, out_dir: Path) -> None:
    pv = cfg.values["phase"]
    grid = np.linspace(0.0, pv["lambda_max"], pv["lambda_steps"])
    rows = []
    for i in pv["i_values"]:
        star = bounds.lambda_star(i)
        for lam in grid:
            rows.append(
                {
                    "i": i,
                    "lam": float(lam),
                    "f_value": bounds.f_lambda(float(lam), i),
                    "lambda_star": star,
                }
            )
    write_csv_atomic(out_dir / "phase.csv", PHASE_COLUMNS, rows)


def run_scenario(cfg: ExperimentConfig) -> int:
    """Run the configured scenario; writes output files plus a manifest."""
    started = time.time()
    out_dir = cfg.out_dir
    out_dir.mkdir(parents=True, exist_ok=True)
    if cfg.scenario in LOOP_SCENARIOS:
        _run_loop_scenario(cfg, out_dir)
    elif cfg.scenario == "kde_rate":
        _run_kde_rate(cfg, out_dir)
    elif cfg.scenario == "fixed_ratio_sweep":
        _run_fixed_ratio_sweep(cfg, out_dir)
    elif cfg.scenario == "bounds_report":
        _run_bounds_report(cfg, out_dir)
    elif cfg.scenario == "phase_transition":
        _run_phase_transition(cfg, out_dir)
    else:  # pragma: no cover - scenario enum is validated at parse time
        raise ConfigError([f"run.scenario: unhandled scenario {cfg.scenario}"])
    _write_manifest(cfg, out_dir, started)
    return EXIT_OK


# ----------------------------------------------------------------------------
# selftest: quick oracle suites


def _selftest_checks():
    rng = np.random.default_rng(17)

    def random_general(i):
        rows = []
        for g in range(1, i + 1):
            w = rng.dirichlet(np.ones(g + 1))
            rows.append((float(w[0]), tuple(float(x) for x in w[1:])))
        return MixtureSchedule.general(rows)

    def coefficient_oracle():
        for schedule in (
            MixtureSchedule.full_synthetic(8),
            MixtureSchedule.balanced(8),
            MixtureSchedule.fixed_ratio(100, 300, 8),
            *(random_general(6) for _ in range(50)),
        ):
            i = min(8, schedule.max_generation)
            a = bounds.coefficients(schedule, i).values
            b = bounds.coefficients_bruteforce(schedule, i).values
            if any(abs(x - y) > 1e-12 for x, y in zip(a, b)):
                return False
        return True

    def balanced_gamma():
        # the printed closed form matches the recursion only through i = 2;
        # beyond that, check it against direct factorial arithmetic
        for i in (1, 2):
            a = bounds.coefficients(MixtureSchedule.balanced(i), i).values
            g = bounds.balanced_coefficients_gamma(i)
            if any(abs(x - y) > 1e-12 for x, y in zip(a, g)):
                return False
        for i in range(3, 11):
            g = bounds.balanced_coefficients_gamma(i)
            ref = [
                sum(math.factorial(j + 1) for j in range(k, i)) / math.factorial(i + 1)
                for k in range(i)
            ] + [1.0]
            if any(abs(x - y) > 1e-12 for x, y in zip(g, ref)):
                return False
        return True

    def kernel_orders():
        specs = (
            KernelSpec.gaussian(),
            KernelSpec.epanechnikov(),
            KernelSpec.higher_order_gaussian(4),
            KernelSpec.higher_order_gaussian(6),
        )
        return all(kernels.verify_kernel_order(k).passed for k in specs)

    def phase_curve():
        ok = abs(bounds.f_lambda(0.0, 3) - 1.0) < 1e-15
        ok &= abs(bounds.f_lambda(1.0, 2) - 7.0 / 2**2.25) < 1e-10
        stars = [bounds.lambda_star(i) for i in range(1, 7)]
        ok &= all(b > a for a, b in zip(stars, stars[1:]))
        return ok

    def pinsker_spot():
        for _ in range(20):
            a = Gauss1D(float(rng.uniform(-2, 2)), float(rng.uniform(0.5, 2.0)))
            b = Gauss1D(float(rng.uniform(-2, 2)), float(rng.uniform(0.5, 2.0)))
            lo = min(a.support_hint[0][0], b.support_hint[0][0])
            hi = max(a.support_hint[0][1], b.support_hint[0][1])
            tv = tv_quadrature(a.pdf, b.pdf, ((lo, hi),), nodes=2048)
            if tv.value > math.sqrt(kl_gauss1d(a, b) / 2.0) + tv.tolerance + 1e-9:
                return False
        return True

    return (
        ("coefficient recursion vs path expansion", coefficient_oracle),
        ("uniform-mixture gamma closed form", balanced_gamma),
        ("kernel moment conditions", kernel_orders),
        ("phase-transition curve and peak", phase_curve),
        ("pinsker inequality spot check", pinsker_spot),
    )


def selftest() -> int:
    failed = 0
    for name, check in _selftest_checks():
        try:
            ok = check()
        except Exception as exc:  # noqa: BLE001 - report and continue
            ok = False
            print(f"FAIL {name}: {exc}")
            failed += 1
            continue
        print(f"{'PASS' if ok else 'FAIL'} {name}")
        failed += 0 if ok else 1
    return EXIT_OK if failed == 0 else EXIT_RUNTIME


# ----------------------------------------------------------------------------
# entry point


def _error_record(kind: str, **fields) -> str:
    return json.dumps({"error": kind, **fields}, sort_keys=True)


def _cmd_run(args) -> int:
    try:
        text = Path(args.config).read_text(encoding="utf-8")
    except OSError as exc:
        print(_error_record("io", message=str(exc)), file=sys.stderr)
        return EXIT_CONFIG
    overrides = {}
    env_seed = os.environ.get(SEED_ENV_VAR)
    if env_seed is not None:
        overrides["base_seed"] = env_seed
    if args.seed is not None:
        overrides["base_seed"] = args.seed
    if args.replicates is not None:
        overrides["replicates"] = args.replicates
    if args.out is not None:
        overrides["out_dir"] = args.out
    try:
        cfg = parse_config(text, overrides=overrides)
    except ConfigError as exc:
        print(_error_record("config", errors=exc.errors), file=sys.stderr)
        return EXIT_CONFIG
    try:
        return run_scenario(cfg)
    except ConfigError as exc:
        print(_error_record("config", errors=exc.errors), file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - boundary: report and exit nonzero
        print(
            _error_record("runtime", type=type(exc).__name__, message=str(exc),
                          scenario=cfg.scenario),
            file=sys.stderr,
        )
        return EXIT_RUNTIME


def _cmd_bounds(args) -> int:
    try:
        gens = args.i
        if args.schedule == "fixed_ratio":
            if args.n_real is None or args.m_synth is None:
                raise ValueError("fixed_ratio needs --n-real and --m-synth")
            schedule = MixtureSchedule.fixed_ratio(args.n_real, args.m_synth, max(1, gens))
        elif args.schedule == "real_each_gen":
            if args.alpha is None:
                raise ValueError("real_each_gen needs --alpha")
            schedule = MixtureSchedule.real_each_gen(args.alpha, max(1, gens))
        elif args.schedule == "full_synthetic":
            schedule = MixtureSchedule.full_synthetic(max(1, gens))
        elif args.schedule == "balanced":
            schedule = MixtureSchedule.balanced(max(1, gens))
        else:
            raise ValueError("general schedules need a config file")
        counts = _p_int_list(args.n)
        sizes = counts * (gens + 1) if len(counts) == 1 else counts
        kl = _p_float_list(args.kl)
        kl_terms = kl * (gens + 1) if len(kl) == 1 else kl
        inputs = bounds.BoundInputs(
            n=sizes, d=args.d, delta=args.delta, kl_terms=kl_terms,
            s=args.s, R=args.r_cap,
        )
        rows = bounds.bound_table_rows(schedule, inputs, args.family)
    except (ValueError, ConfigError) as exc:
        print(_error_record("config", errors=[str(exc)]), file=sys.stderr)
        return EXIT_CONFIG
    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    write_csv_atomic(out_dir / "bounds.csv", BOUND_COLUMNS, rows)
    return EXIT_OK


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="sclab",
        description="Self-consuming generative-model training loop laboratory",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run a configured scenario")
    p_run.add_argument("--config", required=True, help="path to an INI config")
    p_run.add_argument("--out", help="output directory (overrides config)")
    p_run.add_argument("--seed", type=int, help="base seed (overrides config)")
    p_run.add_argument("--replicates", type=int, help="replicate count (overrides config)")
    p_run.set_defaults(func=_cmd_run)

    p_bounds = sub.add_parser("bounds", help="emit a closed-form bound table")
    p_bounds.add_argument(
        "--schedule",
        required=True,
        choices=("full_synthetic", "balanced", "fixed_ratio", "real_each_gen"),
    )
    p_bounds.add_argument("--i", type=int, required=True, help="final generation index")
    p_bounds.add_argument("--n", default="4096", help="sample counts (single or list)")
    p_bounds.add_argument("--d", type=int, default=1)
    p_bounds.add_argument("--delta", type=float, default=0.1)
    p_bounds.add_argument("--kl", default="0.0", help="prior KL terms (single or list)")
    p_bounds.add_argument("--family", choices=("diffusion", "kde", "flow"), default="diffusion")
    p_bounds.add_argument("--s", type=int, help="smoothness order (kde family)")
    p_bounds.add_argument("--r-cap", type=float, dest="r_cap", help="norm cap (flow family)")
    p_bounds.add_argument("--n-real", type=int, dest="n_real")
    p_bounds.add_argument("--m-synth", type=int, dest="m_synth")
    p_bounds.add_argument("--alpha", type=float)
    p_bounds.add_argument("--out", default=".")
    p_bounds.set_defaults(func=_cmd_bounds)

    p_self = sub.add_parser("selftest", help="run the built-in oracle suites")
    p_self.set_defaults(func=lambda args: selftest())

    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
