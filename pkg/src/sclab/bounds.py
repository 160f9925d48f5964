"""Closed-form machinery for error propagation across training generations.

Covers the coefficient recursion that folds per-generation estimation errors
into a final total-variation bound, an independent path-expansion oracle for
that recursion, bound evaluators for the diffusion / kernel-estimate / flow
generator families, sample-size schedules, and the synthetic-data
phase-transition curve with its numerically located peak.

Every evaluator fixes the hidden proportionality constants to 1: outputs are
comparable across configurations ("up to constant"), never absolutely
calibrated against a measured distance.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.special import gammaln

from .mixing import MixtureSchedule

_ORACLE_LIMIT = 12  # path expansion is exponential in the generation count


@dataclass(frozen=True)
class CoefficientTable:
    """Weights A_0..A_i propagating generation-k error into the final bound."""

    generation: int
    values: tuple[float, ...]  # index k holds A_k; values[generation] == 1

    def __post_init__(self):
        if len(self.values) != self.generation + 1:
            raise ValueError("coefficient table must hold generation + 1 entries")
        if self.values[self.generation] != 1.0:
            raise ValueError("the final coefficient must equal 1")
        if any(v < 0 or not math.isfinite(v) for v in self.values):
            raise ValueError("coefficients must be finite and nonnegative")


def _beta(schedule: MixtureSchedule, row: int, model: int) -> float:
    """Weight the generation-``row`` mixture puts on model ``model`` (1-based)."""
    _, betas = schedule.weights_at(row)
    return betas[model - 1]


def coefficients(schedule: MixtureSchedule, i: int) -> CoefficientTable:
    """Backward recursion: A_i = 1, A_t = sum_{j=t+1}^{i} beta_j^{t+1} A_j."""
    if i < 0:
        raise ValueError("generation must be >= 0")
    if i > 0 and i > schedule.max_generation:
        raise ValueError(f"schedule only defines rows up to {schedule.max_generation}")
    a = np.zeros(i + 1)
    a[i] = 1.0
    for t in range(i - 1, -1, -1):
        a[t] = sum(_beta(schedule, j, t + 1) * a[j] for j in range(t + 1, i + 1))
    return CoefficientTable(generation=i, values=tuple(float(v) for v in a))


def coefficients_bruteforce(schedule: MixtureSchedule, i: int) -> CoefficientTable:
    """Independent oracle: expand the error recursion path by path.

    The bound recursion reads E_{j+1} <= f(n_j) + sum_m beta_j^m E_m with
    E_1 <= f(n_0). Fully substituting, the coefficient of f(n_k) is the sum
    over all descending chains i -> m_1 -> ... -> m_r = k+1 of the product of
    the step weights. Exponential in ``i``; limited to small generations.
    """
    if i < 0:
        raise ValueError("generation must be >= 0")
    if i > _ORACLE_LIMIT:
        raise ValueError(f"path expansion supports i <= {_ORACLE_LIMIT}")
    coeff = np.zeros(i + 1)
    coeff[i] = 1.0

    def expand(row: int, weight: float) -> None:
        # ``row`` is the mixture row feeding the current expansion step
        _, betas = schedule.weights_at(row)
        for m in range(1, row + 1):
            w = weight * betas[m - 1]
            if w == 0.0:
                continue
            coeff[m - 1] += w
            if m >= 2:
                expand(m - 1, w)

    if i >= 1:
        expand(i, 1.0)
    return CoefficientTable(generation=i, values=tuple(float(v) for v in coeff))


def balanced_coefficients_gamma(i: int) -> tuple[float, ...]:
    """Gamma-ratio coefficient sums for the uniform-mixture schedule.

    A_k = sum_{j=k}^{i-1} Gamma(j+2) / Gamma(i+2) for k < i, and A_i = 1,
    computed via log-Gamma differences. Counts only consecutive substitution
    chains, so it matches ``coefficients`` exactly for i <= 2 and for the
    entries k >= i - 2, and under-counts earlier entries; the front-loaded
    sample schedule ``required_samples_balanced`` is defined in its terms.
    """
    vals = []
    for k in range(i):
        ratios = [math.exp(gammaln(j + 2) - gammaln(i + 2)) for j in range(k, i)]
        vals.append(math.fsum(ratios))
    vals.append(1.0)
    return tuple(vals)


@dataclass(frozen=True)
class BoundInputs:
    """Per-generation inputs shared by the bound evaluators."""

    n: tuple[int, ...]  # sample counts n_0 .. n_i
    d: int = 1
    delta: float = 0.1
    kl_terms: tuple[float, ...] | None = None  # per-generation prior mismatch
    s: int | None = None  # smoothness order (kernel-estimate variant)
    R: float | None = None  # velocity-field norm cap (flow variant)

    def __post_init__(self):
        n = tuple(int(v) for v in self.n)
        if not n or any(v < 1 for v in n):
            raise ValueError("all sample counts must be >= 1")
        object.__setattr__(self, "n", n)
        if self.d < 1:
            raise ValueError("dimension must be >= 1")
        if not 0.0 < self.delta < 1.0:
            raise ValueError("delta must lie in (0, 1)")
        if self.kl_terms is not None:
            kl = tuple(float(v) for v in self.kl_terms)
            if len(kl) != len(n):
                raise ValueError("kl_terms must match the sample-count list")
            if any(v < 0 for v in kl):
                raise ValueError("kl_terms must be nonnegative")
            object.__setattr__(self, "kl_terms", kl)

    @property
    def generation(self) -> int:
        return len(self.n) - 1

    def kl_at(self, k: int) -> float:
        return 0.0 if self.kl_terms is None else self.kl_terms[k]


def _weighted_sum(schedule: MixtureSchedule, inputs: BoundInputs, term) -> float:
    """A-weighted sum of per-generation terms.

    The fully synthetic cycle follows its dedicated one-term-per-generation
    form, summing generations 1..i (all weights 1) rather than 0..i.
    """
    i = inputs.generation
    if schedule.kind == "full_synthetic" and i >= 1:
        return math.fsum(term(k) for k in range(1, i + 1))
    table = coefficients(schedule, i)
    return math.fsum(table.values[k] * term(k) for k in range(i + 1))


def bound_diffusion(schedule: MixtureSchedule, inputs: BoundInputs) -> float:
    """Up-to-constant TV bound for the diffusion generator family.

    Per-generation term: n_k**(-1/4) * sqrt(d * log(d * i / delta)) plus the
    square root of the prior-mismatch KL.
    """
    i = max(inputs.generation, 1)
    log_term = math.sqrt(inputs.d * math.log(inputs.d * i / inputs.delta))

    def term(k: int) -> float:
        return inputs.n[k] ** -0.25 * log_term + math.sqrt(inputs.kl_at(k))

    return _weighted_sum(schedule, inputs, term)


def bound_kde(schedule: MixtureSchedule, inputs: BoundInputs) -> float:
    """Up-to-constant TV bound for the kernel-estimate generator family.

    Per-generation term: n_k**(-s/(2s+2d)) * sqrt(log(i / delta)) plus
    n_k**(-(2s+d)/(4s+4d)).
    """
    if inputs.s is None:
        raise ValueError("kernel-estimate bound needs the smoothness order s")
    s, d = inputs.s, inputs.d
    i = max(inputs.generation, 1)
    log_term = math.sqrt(math.log(i / inputs.delta))
    rate = s / (2 * s + 2 * d)
    var_rate = (2 * s + d) / (4 * s + 4 * d)

    def term(k: int) -> float:
        n = inputs.n[k]
        return n**-rate * log_term + n**-var_rate

    return _weighted_sum(schedule, inputs, term)


def bound_flow(schedule: MixtureSchedule, inputs: BoundInputs) -> float:
    """Up-to-constant TV bound for the normalizing-flow family (evaluator only).

    Per-generation term: n_k**(-1/4) * R * sqrt(1 + R^2) * log(i/delta)**(1/4).
    """
    if inputs.R is None:
        raise ValueError("flow bound needs the norm cap R")
    R = inputs.R
    i = max(inputs.generation, 1)
    log_term = math.log(i / inputs.delta) ** 0.25

    def term(k: int) -> float:
        return inputs.n[k] ** -0.25 * R * math.sqrt(1.0 + R * R) * log_term

    return _weighted_sum(schedule, inputs, term)


def bound_fixed_ratio(
    n: int, m: int, i: int, d: int = 1, delta: float = 0.1, kl: float = 0.0
) -> float:
    """Closed form for the fixed real/synthetic split: geometric-series prefactor.

    Equals the generic diffusion bound under the matching schedule with all
    generations holding n + m samples.
    """
    if n < 1 or m < 0:
        raise ValueError("need n >= 1 real samples and m >= 0 synthetic samples")
    if i < 1:
        raise ValueError("generation must be >= 1")
    prefactor = (1.0 + m / n) * (1.0 - (m / (n + m)) ** (i + 1))
    term = (n + m) ** -0.25 * math.sqrt(d * math.log(d * i / delta)) + math.sqrt(kl)
    return prefactor * term


def bound_real_each_gen(
    alpha: float, i: int, n: int, d: int = 1, delta: float = 0.1, kl: float = 0.0
) -> float:
    """Closed form when every generation keeps an alpha share of real data."""
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must lie strictly inside (0, 1)")
    if i < 1 or n < 1:
        raise ValueError("need generation >= 1 and n >= 1")
    factor = (1.0 - (1.0 - alpha) ** (i + 1)) / alpha
    term = n**-0.25 * math.sqrt(d * math.log(d * i / delta)) + math.sqrt(kl)
    return factor * term


def f_lambda(lam: float, i: int) -> float:
    """Phase-transition factor of the synthetic-to-real ratio ``lam``.

    Stabilized factored form (1+lam)**(3/4) * (1 - (lam/(1+lam))**(i+1)),
    exact for all lam >= 0.
    """
    if lam < 0:
        raise ValueError("lambda must be >= 0")
    if i < 1:
        raise ValueError("generation must be >= 1")
    ratio = lam / (1.0 + lam)
    return (1.0 + lam) ** 0.75 * (1.0 - ratio ** (i + 1))


def f_lambda_direct(lam: float, i: int) -> float:
    """Unstabilized evaluation ((1+lam)**(i+1) - lam**(i+1)) / (1+lam)**(i+1/4)."""
    return ((1.0 + lam) ** (i + 1) - lam ** (i + 1)) / (1.0 + lam) ** (i + 0.25)


_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _golden_section_max(f, a: float, b: float, tol: float) -> float:
    """Locate the maximizer of a unimodal ``f`` on [a, b] to within ``tol``."""
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = f(c), f(d)
    while b - a > tol:
        if fc < fd:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = f(d)
        else:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = f(c)
    return 0.5 * (a + b)


def lambda_star(
    i: int, upper: float = 1e6, tol: float = 1e-8, bracket_samples: int = 2048
) -> float:
    """Peak of the phase-transition curve, found by bracketing plus golden section.

    The curve is sampled on a dense grid over [0, upper] to verify a single
    rise-then-fall shape before refining; a peak on the boundary or a
    non-unimodal sample pattern raises.
    """
    if i < 1:
        raise ValueError("generation must be >= 1")
    grid = np.concatenate(
        [
            np.linspace(0.0, 1.0, bracket_samples // 2, endpoint=False),
            np.geomspace(1.0, upper, bracket_samples // 2),
        ]
    )
    vals = np.array([f_lambda(g, i) for g in grid])
    k = int(np.argmax(vals))
    if k == 0 or k == len(grid) - 1:
        raise RuntimeError(f"failed to bracket the peak inside (0, {upper}]")
    rising = np.diff(vals[: k + 1])
    falling = np.diff(vals[k:])
    if np.any(rising < 0) or np.any(falling > 0):
        raise RuntimeError("sampled curve is not unimodal on the bracket")
    return float(
        _golden_section_max(
            lambda lam: f_lambda(lam, i), float(grid[k - 1]), float(grid[k + 1]), tol
        )
    )


def _ceil_snap(x: float, rtol: float = 1e-9) -> int:
    """Ceiling that forgives float round-off just above an exact integer."""
    nearest = round(x)
    if abs(x - nearest) <= rtol * max(1.0, abs(x)):
        return int(nearest)
    return math.ceil(x)


def required_samples_quartic(i: int, d: int, eps: float) -> int:
    """Per-generation sample count (i * sqrt(d) / eps)**4 controlling the
    fully synthetic cycle's error to order eps."""
    if i < 1 or d < 1 or not eps > 0:
        raise ValueError("need i >= 1, d >= 1, eps > 0")
    return max(1, _ceil_snap((i * math.sqrt(d) / eps) ** 4))


def required_samples_balanced(i: int, d: int, eps: float) -> tuple[int, ...]:
    """Sample schedule n_0..n_i for the uniform-mixture cycle at error order eps.

    Earlier generations need more data: their output feeds every later
    mixture. Gamma ratios are computed in log space to avoid overflow.
    """
    if i < 1 or d < 1 or not eps > 0:
        raise ValueError("need i >= 1, d >= 1, eps > 0")
    base = math.sqrt(d) / eps
    counts = []
    for k in range(i):
        inner = math.fsum(
            math.exp(gammaln(j + 2) - gammaln(i + 2)) for j in range(k, i)
        )
        counts.append(max(1, _ceil_snap(((i + 1) * base * inner) ** 4)))
    counts.append(max(1, _ceil_snap(base**4)))
    return tuple(counts)


def alpha_requirement(i: int) -> float:
    """Real-data share needed in the final generation: (i - 1) / i."""
    if i < 1:
        raise ValueError("generation must be >= 1")
    return (i - 1) / i


def bound_table_rows(
    schedule: MixtureSchedule, inputs: BoundInputs, family: str = "diffusion"
) -> list[dict]:
    """Per-generation breakdown rows for the bounds report CSV."""
    evaluators = {"diffusion": bound_diffusion, "kde": bound_kde, "flow": bound_flow}
    if family not in evaluators:
        raise ValueError(f"unknown bound family {family!r}")
    total = evaluators[family](schedule, inputs)
    i = inputs.generation
    table = coefficients(schedule, i)
    log_i = max(i, 1)
    rows = []
    for k in range(i + 1):
        n = inputs.n[k]
        if family == "diffusion":
            term = n**-0.25 * math.sqrt(
                inputs.d * math.log(inputs.d * log_i / inputs.delta)
            ) + math.sqrt(inputs.kl_at(k))
        elif family == "kde":
            s, d = inputs.s, inputs.d
            term = n ** -(s / (2 * s + 2 * d)) * math.sqrt(
                math.log(log_i / inputs.delta)
            ) + n ** -((2 * s + d) / (4 * s + 4 * d))
        else:
            R = inputs.R
            term = n**-0.25 * R * math.sqrt(1 + R * R) * math.log(
                log_i / inputs.delta
            ) ** 0.25
        rows.append(
            {
                "schedule": schedule.kind,
                "i": i,
                "k": k,
                "A_k": table.values[k],
                "bound_term": term,
                "total_bound": total,
            }
        )
    return rows
