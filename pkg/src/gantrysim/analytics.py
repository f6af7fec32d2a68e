"""Production-rate metrics, class weights, and exact binomial confidence
intervals. The beta quantiles behind Clopper-Pearson are computed by a
self-contained routine (continued-fraction incomplete beta plus bisection)
so no statistics dependency is needed."""

import math
from dataclasses import dataclass
from typing import Mapping


@dataclass(frozen=True)
class RunAccounting:
    """Timing totals and image counts of one production run.

    t_p: imaging time including robot motion; t_d: bulk download time;
    t_c: cropping time; all seconds.
    """

    t_p: float
    t_d: float
    t_c: float
    n_masters: int
    n_subimages: int

    def __post_init__(self):
        for name in ("t_p", "t_d", "t_c"):
            if getattr(self, name) < 0.0:
                raise ValueError(f"{name} must be >= 0")
        if self.n_masters < 0 or self.n_subimages < 0:
            raise ValueError("image counts must be >= 0")

    @classmethod
    def from_run_log_dict(cls, log: dict, t_c: float = 0.0) -> "RunAccounting":
        """Accounting from a run_log.json document; download time is the
        per-image rate times the master count, cropping time is supplied."""
        n_masters = int(log["n_masters"])
        n_subimages = int(log["n_subimages"])
        t_d = float(log["timing"]["download_time_per_image"]) * n_masters
        return cls(
            t_p=float(log["t_p"]),
            t_d=t_d,
            t_c=t_c,
            n_masters=n_masters,
            n_subimages=n_subimages,
        )


def master_rate(acc: RunAccounting) -> float:
    """Average seconds per master image: (t_p + t_d) / N_m."""
    if acc.n_masters < 1:
        raise ValueError("master_rate needs at least one master image")
    return (acc.t_p + acc.t_d) / acc.n_masters


def subimage_rate(acc: RunAccounting) -> float:
    """Average seconds per subimage: (t_p + t_d + t_c) / N_s."""
    if acc.n_subimages < 1:
        raise ValueError("subimage_rate needs at least one subimage")
    return (acc.t_p + acc.t_d + acc.t_c) / acc.n_subimages


def class_weights(counts: Mapping[str, int]) -> dict[str, float]:
    """Per-class weights total/count, unnormalized, for imbalance correction."""
    if not counts:
        raise ValueError("class_weights needs at least one class")
    total = sum(counts.values())
    weights = {}
    for name, count in counts.items():
        if count < 1:
            raise ValueError(f"class {name!r} has zero images")
        weights[name] = total / count
    return weights


_BETA_CF_MAX_ITER = 400
_BETA_CF_EPS = 3e-16
_BETA_TINY = 1e-300
BETA_PPF_TOL = 1e-8


def _beta_continued_fraction(a: float, b: float, x: float) -> float:
    """Lentz evaluation of the incomplete-beta continued fraction."""
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _BETA_TINY:
        d = _BETA_TINY
    d = 1.0 / d
    h = d
    for m in range(1, _BETA_CF_MAX_ITER + 1):
        m2 = 2 * m
        for numerator in (
            m * (b - m) * x / ((qam + m2) * (a + m2)),
            -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2)),
        ):
            d = 1.0 + numerator * d
            if abs(d) < _BETA_TINY:
                d = _BETA_TINY
            c = 1.0 + numerator / c
            if abs(c) < _BETA_TINY:
                c = _BETA_TINY
            d = 1.0 / d
            step = d * c
            h *= step
        if abs(step - 1.0) < _BETA_CF_EPS:
            return h
    raise ArithmeticError(f"incomplete beta failed to converge for a={a}, b={b}, x={x}")


def regularized_incomplete_beta(a: float, b: float, x: float) -> float:
    """I_x(a, b), accurate to ~1e-13 over the parameter ranges used here."""
    if a <= 0.0 or b <= 0.0:
        raise ValueError("shape parameters must be > 0")
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    ln_front = (
        math.lgamma(a + b)
        - math.lgamma(a)
        - math.lgamma(b)
        + a * math.log(x)
        + b * math.log1p(-x)
    )
    front = math.exp(ln_front)
    # the continued fraction converges fast only below the distribution mean,
    # so use the symmetry I_x(a,b) = 1 - I_{1-x}(b,a) on the other side
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _beta_continued_fraction(a, b, x) / a
    return 1.0 - front * _beta_continued_fraction(b, a, 1.0 - x) / b


def beta_quantile(p: float, a: float, b: float, tol: float = BETA_PPF_TOL) -> float:
    """Inverse of the regularized incomplete beta by bisection on [0, 1]."""
    if not 0.0 <= p <= 1.0:
        raise ValueError("p must be in [0, 1]")
    if p == 0.0:
        return 0.0
    if p == 1.0:
        return 1.0
    lo, hi = 0.0, 1.0
    while hi - lo > tol / 4.0:
        mid = 0.5 * (lo + hi)
        if regularized_incomplete_beta(a, b, mid) < p:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def clopper_pearson(successes: int, trials: int, alpha: float) -> tuple[float, float]:
    """Exact two-sided binomial proportion interval.

    lower = BetaInv(alpha/2; k, n-k+1) with the k = 0 boundary at exactly 0,
    upper = BetaInv(1-alpha/2; k+1, n-k) with the k = n boundary at exactly 1.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    if not 0 <= successes <= trials:
        raise ValueError("successes must be in [0, trials]")
    if not 0.0 < alpha < 1.0:
        raise ValueError("alpha must be in (0, 1)")
    k, n = successes, trials
    lower = 0.0 if k == 0 else beta_quantile(alpha / 2.0, k, n - k + 1)
    upper = 1.0 if k == n else beta_quantile(1.0 - alpha / 2.0, k + 1, n - k)
    return (lower, upper)
