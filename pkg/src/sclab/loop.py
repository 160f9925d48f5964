"""The self-consuming training loop.

Model 1 trains on real data only. Each later generation draws its training
set from the scheduled mixture of the real density and previously trained
models, trains a fresh model from scratch, and records the measured distance
to the real density alongside the matching closed-form bound. Synthetic
draws always come from the stored generator objects, never from cached
sample files.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Union

import numpy as np

from . import bounds, diffusion, kernels
from .distributions import SampleSet, TargetDensity
from .divergences import TVEstimate, tv_histogram, tv_quadrature
from .kernels import KdeModel, KernelSpec
from .mixing import MixtureSchedule, sample_mixture


class LoopError(RuntimeError):
    """Generator training failure, annotated with the failing generation."""


class _ReverseSampler:
    """Mixture-component adapter: draws from a trained score net by reverse SDE."""

    def __init__(self, net: diffusion.ScoreNet, cfg: diffusion.DiffusionConfig):
        self.net = net
        self.cfg = cfg

    def draw(self, n: int, rng: np.random.Generator) -> np.ndarray:
        seed = int(rng.integers(0, 2**63))
        return diffusion.reverse_sample(self.net, self.cfg, n, seed, dim=self.net.dim).points


@dataclass(frozen=True)
class KdeGenerator:
    kernel: KernelSpec
    order: int | None = None  # bandwidth order; defaults to the kernel's own

    @property
    def smoothness(self) -> int:
        return self.kernel.order if self.order is None else self.order


@dataclass(frozen=True)
class DiffusionGenerator:
    cfg: diffusion.DiffusionConfig = field(default_factory=diffusion.DiffusionConfig)
    width_factor: float = 1.0  # network width = ceil(factor * n)
    tau_factor: float = 1.0  # descent steps = ceil(factor * sqrt(n))
    lr: float | None = None  # None: 1 / top-eigenvalue estimate


Generator = Union[KdeGenerator, DiffusionGenerator]


@dataclass(frozen=True)
class ConstantSizes:
    n: int

    def resolve(self, generations: int, dim: int) -> tuple[int, ...]:
        return (self.n,) * generations


@dataclass(frozen=True)
class ExplicitSizes:
    values: tuple[int, ...]

    def resolve(self, generations: int, dim: int) -> tuple[int, ...]:
        if len(self.values) != generations:
            raise ValueError(
                f"need {generations} sample counts, got {len(self.values)}"
            )
        return tuple(int(v) for v in self.values)


@dataclass(frozen=True)
class QuarticSizes:
    """Uniform counts sized for the fully synthetic cycle at error order eps."""

    eps: float

    def resolve(self, generations: int, dim: int) -> tuple[int, ...]:
        n = bounds.required_samples_quartic(max(1, generations - 1), dim, self.eps)
        return (n,) * generations


@dataclass(frozen=True)
class BalancedSizes:
    """Front-loaded counts sized for the uniform-mixture cycle at error order eps."""

    eps: float

    def resolve(self, generations: int, dim: int) -> tuple[int, ...]:
        full = bounds.required_samples_balanced(max(1, generations - 1), dim, self.eps)
        return full[:generations]


SizeRule = Union[ConstantSizes, ExplicitSizes, QuarticSizes, BalancedSizes]


@dataclass(frozen=True)
class LoopConfig:
    generator: Generator
    schedule: MixtureSchedule
    p0: TargetDensity
    sample_sizes: SizeRule
    max_generation: int
    replicates: int = 1
    base_seed: int = 0
    delta: float = 0.1  # confidence level fed to the bound evaluators
    eval_nodes: int = 4096  # quadrature grid per dim (kernel generator)
    eval_samples: int = 100_000  # histogram draw size (diffusion generator)

    def __post_init__(self):
        if self.max_generation < 1:
            raise ValueError("max_generation must be >= 1")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.schedule.max_generation < self.max_generation - 1:
            raise ValueError(
                "schedule must define rows up to max_generation - 1"
            )
        sizes = self.sample_sizes.resolve(self.max_generation, self.p0.dim)
        if any(v < 1 for v in sizes):
            raise ValueError("every resolved sample count must be >= 1")

    def resolved_sizes(self) -> tuple[int, ...]:
        return self.sample_sizes.resolve(self.max_generation, self.p0.dim)


@dataclass(frozen=True)
class GenerationRecord:
    i: int  # model index, 1-based; model 1 trains on real data only
    n_total: int
    n_real: int
    n_synth: tuple[int, ...]  # draws taken from each earlier model
    tv_to_p0: TVEstimate
    tv_to_prev_mixture: TVEstimate
    bound_value: float
    kl_prior: float | None  # diffusion generator only
    train_diagnostics: dict
    seed: int  # draw seed for this generation's training set

    def __post_init__(self):
        if self.n_real + sum(self.n_synth) != self.n_total:
            raise ValueError("per-source counts must sum to the total draw")


@dataclass(frozen=True)
class LoopTrace:
    config: LoopConfig
    replicate: int
    replicate_seed: int
    records: tuple[GenerationRecord, ...]


def _gen_seeds(replicate_seed: int, generations: int) -> np.ndarray:
    """Fixed-order per-generation seed block: draw / net-init / train columns."""
    root = np.random.default_rng(replicate_seed)
    return root.integers(0, 2**63, size=(generations, 3))


def _eval_seeds(base_seed: int, generations: int) -> np.ndarray:
    """Measurement seeds, disjoint from every training stream by construction."""
    root = np.random.default_rng([base_seed, 0xE7A1])
    return root.integers(0, 2**63, size=(2 * generations + 1,))


def _mixture_pdf(p0: TargetDensity, weights, models: dict[int, KdeModel]):
    alpha, betas = weights

    def pdf(pts):
        out = alpha * np.asarray(p0.pdf(pts), dtype=float)
        for k, b in enumerate(betas, start=1):
            if b > 0.0:
                out = out + b * models[k].pdf(pts)
        return out

    return pdf


def run_loop(cfg: LoopConfig, replicate: int = 0) -> LoopTrace:
    """Run one replicate of the loop and return its per-generation records."""
    gen = cfg.generator
    p0 = cfg.p0
    d = p0.dim
    sizes = cfg.resolved_sizes()
    total_gens = cfg.max_generation
    replicate_seed = cfg.base_seed + replicate
    seeds = _gen_seeds(replicate_seed, total_gens)
    eval_seeds = _eval_seeds(cfg.base_seed, total_gens)

    is_kde = isinstance(gen, KdeGenerator)
    models: dict[int, object] = {}  # retained generators, keyed by model index
    records: list[GenerationRecord] = []
    kl_history: list[float] = []

    if not is_kde:
        ref = p0.sample(cfg.eval_samples, int(eval_seeds[0]))

    for g in range(1, total_gens + 1):
        n_g = sizes[g - 1]
        draw_seed = int(seeds[g - 1, 0])
        if g == 1:
            data = p0.sample(n_g, draw_seed)
            counts = np.array([n_g])
            weights = (1.0, ())
        else:
            weights = cfg.schedule.weights_at(g - 1)
            components = [models.get(k) for k in range(1, g)]
            data, counts = sample_mixture(
                p0, components, weights, n_g, draw_seed, return_counts=True
            )

        if is_kde:
            model = kernels.fit(data, gen.kernel, gen.smoothness)
            diagnostics = {"bandwidth": model.bandwidth}
            kl_prior = None
        else:
            width = max(1, math.ceil(gen.width_factor * n_g))
            tau = math.ceil(gen.tau_factor * math.sqrt(n_g))
            net = diffusion.init_scorenet(
                width, d, gen.cfg.embed_dim, int(seeds[g - 1, 1])
            )
            try:
                report = diffusion.train(
                    net, data, gen.cfg, lr=gen.lr, tau_steps=tau,
                    seed=int(seeds[g - 1, 2]),
                )
            except diffusion.TrainingDivergence as exc:
                raise LoopError(f"generation {g}: {exc}") from exc
            model = _ReverseSampler(net, gen.cfg)
            diagnostics = {
                "steps": report.steps_run,
                "final_loss": report.losses[-1],
                "rkhs_norm": report.rkhs_norm,
                "lr": report.lr,
            }
            mu = float(data.points.mean())
            sd = float(data.points.std())
            kl_prior = (
                diffusion.prior_kl_gauss(mu, max(sd, 1e-12), gen.cfg)
                if d == 1
                else sum(
                    diffusion.prior_kl_gauss(
                        float(data.points[:, j].mean()),
                        max(float(data.points[:, j].std()), 1e-12),
                        gen.cfg,
                    )
                    for j in range(d)
                )
            )
            kl_history.append(kl_prior)

        box = p0.support_hint
        if is_kde:
            tv0 = tv_quadrature(model.pdf, p0.pdf, box, nodes=cfg.eval_nodes)
            if g == 1:
                tv_prev = tv0
            else:
                prev_pdf = _mixture_pdf(p0, weights, models)
                tv_prev = tv_quadrature(model.pdf, prev_pdf, box, nodes=cfg.eval_nodes)
        else:
            model_pts = diffusion.reverse_sample(
                model.net, gen.cfg, cfg.eval_samples, int(eval_seeds[g]), dim=d
            )
            tv0 = tv_histogram(model_pts, ref, box=box)
            if g == 1:
                tv_prev = tv0
            else:
                mix_pts = sample_mixture(
                    p0,
                    [models.get(k) for k in range(1, g)],
                    weights,
                    cfg.eval_samples,
                    int(eval_seeds[total_gens + g]),
                )
                tv_prev = tv_histogram(model_pts, mix_pts, box=box)

        inputs = bounds.BoundInputs(
            n=sizes[:g],
            d=d,
            delta=cfg.delta,
            kl_terms=tuple(kl_history) if not is_kde else None,
            s=gen.smoothness if is_kde else None,
        )
        bound_value = (
            bounds.bound_kde(cfg.schedule, inputs)
            if is_kde
            else bounds.bound_diffusion(cfg.schedule, inputs)
        )

        records.append(
            GenerationRecord(
                i=g,
                n_total=n_g,
                n_real=int(counts[0]),
                n_synth=tuple(int(c) for c in counts[1:]),
                tv_to_p0=tv0,
                tv_to_prev_mixture=tv_prev,
                bound_value=bound_value,
                kl_prior=kl_prior,
                train_diagnostics=diagnostics,
                seed=draw_seed,
            )
        )

        models[g] = model
        if not cfg.schedule.needs_history:
            models = {g: model}

    return LoopTrace(
        config=cfg,
        replicate=replicate,
        replicate_seed=replicate_seed,
        records=tuple(records),
    )


@dataclass(frozen=True)
class LoopSummary:
    """Per-generation spread of the measured distance across replicates."""

    generations: tuple[int, ...]
    tv_median: tuple[float, ...]
    tv_q25: tuple[float, ...]
    tv_q75: tuple[float, ...]


def run_replicates(cfg: LoopConfig) -> tuple[list[LoopTrace], LoopSummary]:
    """Run every replicate (seed = base_seed + r) and summarize the TV traces."""
    traces = [run_loop(cfg, r) for r in range(cfg.replicates)]
    gens = tuple(range(1, cfg.max_generation + 1))
    by_gen = np.array(
        [[t.records[g - 1].tv_to_p0.value for t in traces] for g in gens]
    )
    return traces, LoopSummary(
        generations=gens,
        tv_median=tuple(float(v) for v in np.median(by_gen, axis=1)),
        tv_q25=tuple(float(v) for v in np.percentile(by_gen, 25, axis=1)),
        tv_q75=tuple(float(v) for v in np.percentile(by_gen, 75, axis=1)),
    )


def trace_rows(trace: LoopTrace, scenario: str) -> list[dict]:
    """One CSV-ready row per generation record (schema fixed by the CLI)."""
    rows = []
    for rec in trace.records:
        rows.append(
            {
                "scenario": scenario,
                "replicate": trace.replicate,
                "generation": rec.i,
                "n_total": rec.n_total,
                "n_real": rec.n_real,
                "tv_est": rec.tv_to_p0.value,
                "tv_method": rec.tv_to_p0.method,
                "tv_tol": rec.tv_to_p0.tolerance,
                "bound_value": rec.bound_value,
                "kl_prior": "" if rec.kl_prior is None else rec.kl_prior,
                "seed": rec.seed,
                "runtime_ms": 0,
            }
        )
    return rows
