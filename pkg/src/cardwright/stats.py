"""Quantitative dataset procedures: test-set sample size, run variance, learning curves."""

from __future__ import annotations

import math
import statistics
import sys
from collections.abc import Iterable, Sequence
from dataclasses import dataclass
from decimal import ROUND_CEILING, Decimal
from enum import Enum


class DomainError(ValueError):
    pass


class InsufficientRuns(ValueError):
    pass


class DegenerateInput(ValueError):
    pass


class Confidence(str, Enum):
    C90 = "C90"
    C95 = "C95"
    C99 = "C99"

    @classmethod
    def parse(cls, text: str | int) -> Confidence:
        """Accept ``C95``, ``95``, ``0.95`` or ``95%``."""
        raw = str(text).strip().upper().rstrip("%").removeprefix("C")
        try:
            level = Decimal(raw)
        except ArithmeticError:
            raise ValueError(f"unknown confidence level {text!r}") from None
        if level < 1:
            level *= 100
        for member in cls:
            if Decimal(member.value[1:]) == level:
                return member
        raise ValueError(f"unsupported confidence level {text!r}; choose 90, 95 or 99")


# Two-sided standard-normal quantiles, rounded as commonly tabulated.
Z_TABLE: dict[Confidence, Decimal] = {
    Confidence.C90: Decimal("1.645"),
    Confidence.C95: Decimal("1.960"),
    Confidence.C99: Decimal("2.58"),
}


def z_quantile(confidence: Confidence) -> float:
    return float(Z_TABLE[confidence])


@dataclass(frozen=True)
class SampleSizeSpec:
    p: float
    epsilon: float
    confidence: Confidence
    z: float
    n: int

    def to_dict(self) -> dict:
        return {"p": self.p, "epsilon": self.epsilon, "confidence": self.confidence.value, "z": self.z, "n": self.n}


def sample_size(p: float = 0.5, epsilon: float = 0.05, confidence: Confidence = Confidence.C95) -> SampleSizeSpec:
    """Smallest n with z * sqrt(p(1-p)/n) <= epsilon.

    Decimal arithmetic keeps exact products such as 1.96**2 * 0.25 / 0.05**2 = 384.16
    from drifting across an integer boundary.
    """
    for name, value in (("p", p), ("epsilon", epsilon)):
        if isinstance(value, bool) or not isinstance(value, (int, float)) or not 0 < value < 1:
            raise DomainError(f"{name} must lie strictly between 0 and 1, got {value!r}")
    z = Z_TABLE[confidence]
    dp, de = Decimal(repr(p)), Decimal(repr(epsilon))
    exact = z * z * dp * (1 - dp) / (de * de)
    n = int(exact.to_integral_value(rounding=ROUND_CEILING))
    return SampleSizeSpec(p, epsilon, confidence, float(z), max(n, 1))


@dataclass(frozen=True)
class VarianceCheck:
    scores: tuple[float, ...]
    mean: float
    sample_std: float
    threshold: float
    flagged: bool

    def to_dict(self) -> dict:
        return {
            "scores": list(self.scores),
            "mean": self.mean,
            "sample_std": self.sample_std,
            "threshold": self.threshold,
            "flagged": self.flagged,
        }


DEFAULT_VARIANCE_THRESHOLD = 0.01


def variance_check(scores: Iterable[float], threshold: float = DEFAULT_VARIANCE_THRESHOLD) -> VarianceCheck:
    values = tuple(float(s) for s in scores)
    if len(values) < 2:
        raise InsufficientRuns(f"need at least 2 evaluation runs, got {len(values)}")
    if not all(0.0 <= v <= 1.0 for v in values):
        raise DomainError("scores must lie in [0, 1]")
    if not threshold >= 0:
        raise DomainError("threshold must be non-negative")
    # sort so the result does not depend on run order at the last bit
    ordered = sorted(values)
    std = statistics.stdev(ordered)
    return VarianceCheck(values, statistics.fmean(ordered), std, threshold, std > threshold)


@dataclass(frozen=True)
class CurveFit:
    """perf = a + b * ln(n), fitted by ordinary least squares."""

    points: tuple[tuple[float, float], ...]
    a: float
    b: float

    def predict(self, n: float) -> float:
        if n <= 0:
            raise DomainError("n must be positive")
        return self.a + self.b * math.log(n)

    def residuals(self) -> list[float]:
        return [perf - self.predict(n) for n, perf in self.points]

    @property
    def residual_norm(self) -> float:
        return math.sqrt(math.fsum(r * r for r in self.residuals()))

    def to_dict(self) -> dict:
        return {"points": [list(p) for p in self.points], "a": self.a, "b": self.b, "residual_norm": self.residual_norm}


def fit_learning_curve(points: Sequence[tuple[float, float]]) -> CurveFit:
    pts = tuple((float(n), float(perf)) for n, perf in points)
    if any(n <= 0 or not math.isfinite(n) for n, _ in pts):
        raise DomainError("every n must be a positive finite number")
    if len({n for n, _ in pts}) < 2:
        raise DegenerateInput("need at least two distinct n values")
    xs = [math.log(n) for n, _ in pts]
    ys = [perf for _, perf in pts]
    if min(ys) == max(ys):
        return CurveFit(pts, ys[0], 0.0)
    # centred form avoids cancellation in the normal equations
    x_bar = math.fsum(xs) / len(xs)
    y_bar = math.fsum(ys) / len(ys)
    sxx = math.fsum((x - x_bar) ** 2 for x in xs)
    sxy = math.fsum((x - x_bar) * (y - y_bar) for x, y in zip(xs, ys))
    b = sxy / sxx
    return CurveFit(pts, y_bar - b * x_bar, b)


def predict(fit: CurveFit, n: float) -> float:
    return fit.predict(n)


DEFAULT_EXTRAPOLATION_CAP = 100.0
_LOG_FLOAT_MAX = math.log(sys.float_info.max)


def required_n(fit: CurveFit, target_perf: float, cap: float = DEFAULT_EXTRAPOLATION_CAP) -> float | None:
    """Dataset size at which the fitted curve reaches ``target_perf``; None means unreachable."""
    max_n = max(n for n, _ in fit.points)
    if fit.b <= 0:
        observed = [(n, perf) for n, perf in fit.points if fit.predict(n) >= target_perf]
        if target_perf > max(perf for _, perf in fit.points) or not observed:
            return None
        return min(n for n, _ in observed)
    log_n = (target_perf - fit.a) / fit.b
    # beyond the float range counts as unreachable whatever the cap
    if log_n > math.log(cap * max_n) or log_n > _LOG_FLOAT_MAX:
        return None
    return math.exp(log_n)


def one_in_ten(num_parameters: int) -> int:
    if isinstance(num_parameters, bool) or not isinstance(num_parameters, int) or num_parameters < 1:
        raise DomainError("num_parameters must be an integer >= 1")
    return 10 * num_parameters
