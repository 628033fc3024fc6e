"""Statistical noticeability measures: two-sample KS tests and the degree LR test."""

from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum

import numpy as np

from . import _kernels, gstats
from .graph import AttackPair


class MeasureKind(str, Enum):
    DEGREE_KS = "degree_ks"
    CLSCOEF_KS = "clscoef_ks"
    DEGREE_LR = "degree_lr"
    HOMOPH_KS = "homophily_ks"


@dataclass
class NoticeabilityReport:
    measure_name: str
    statistic: float
    p_value: float | None = None
    noticeable_at_05: bool | None = None
    degenerate: bool = False

    def to_dict(self):
        return {
            "measure_name": self.measure_name,
            "statistic": self.statistic,
            "p_value": self.p_value,
            "noticeable_at_05": self.noticeable_at_05,
            "degenerate": self.degenerate,
        }


@dataclass
class PowerLawFit:
    alpha: float
    d_min: int
    sample_size: int
    log_likelihood: float


def kolmogorov_sf(lam: float) -> float:
    """Asymptotic Kolmogorov survival function Q(lam) = 2 sum (-1)^{j-1} e^{-2 j^2 lam^2}."""
    if lam <= 0:
        return 1.0
    total = 0.0
    for j in range(1, 101):
        term = 2.0 * (-1.0) ** (j - 1) * math.exp(-2.0 * j * j * lam * lam)
        total += term
        if abs(term) < 1e-16:
            break
    return min(1.0, max(0.0, total))


def ks_two_sample(x, y) -> tuple[float, float]:
    """Two-sample KS D statistic and its asymptotic p-value.

    D is the sup over the union of sample points of the absolute difference
    of the right-continuous ECDFs.
    """
    x = np.sort(np.asarray(x, dtype=np.float64))
    y = np.sort(np.asarray(y, dtype=np.float64))
    if x.size == 0 or y.size == 0:
        raise ValueError("KS test requires nonempty samples")
    d = _kernels.ks_statistic_sorted(x, y)
    n_e = x.size * y.size / (x.size + y.size)
    lam = (math.sqrt(n_e) + 0.12 + 0.11 / math.sqrt(n_e)) * d
    return float(d), kolmogorov_sf(lam)


def powerlaw_alpha_mle(degree_values, d_min: int = 2) -> PowerLawFit:
    """Continuous power-law MLE on degrees >= d_min with the d_min - 1/2 correction.

    alpha = 1 + m / sum ln(d_i / (d_min - 1/2)) over retained degrees.
    """
    deg = np.asarray(degree_values, dtype=np.float64)
    retained = deg[deg >= d_min]
    if retained.size == 0:
        raise ValueError(f"no degrees >= d_min={d_min}")
    x_min = d_min - 0.5
    log_ratio = np.log(retained / x_min)
    s = float(log_ratio.sum())
    m = retained.size
    alpha = 1.0 + m / s
    ll = m * math.log((alpha - 1.0) / x_min) - alpha * s
    return PowerLawFit(alpha=alpha, d_min=int(d_min), sample_size=m, log_likelihood=ll)


def _chi2_sf_1df(x: float) -> float:
    return math.erfc(math.sqrt(max(x, 0.0) / 2.0))


def lr_degree_test(g, g_hat, d_min: int = 2) -> NoticeabilityReport:
    """Likelihood-ratio test: separate power-law fits vs a pooled fit.

    Lambda = 2(l(H1) - l(H0)) against chi-square with 1 degree of freedom.
    """
    deg_g = gstats.degrees(g)
    deg_h = gstats.degrees(g_hat)
    fit_g = powerlaw_alpha_mle(deg_g, d_min)
    fit_h = powerlaw_alpha_mle(deg_h, d_min)
    fit_0 = powerlaw_alpha_mle(np.concatenate([deg_g, deg_h]), d_min)
    lam = 2.0 * (fit_g.log_likelihood + fit_h.log_likelihood - fit_0.log_likelihood)
    if lam < -1e-9:
        raise ValueError(f"negative LR statistic {lam}")
    lam = max(lam, 0.0)
    p = _chi2_sf_1df(lam)
    return NoticeabilityReport(
        measure_name=MeasureKind.DEGREE_LR.value,
        statistic=float(lam),
        p_value=p,
        noticeable_at_05=p < 0.05,
    )


def statistical_measure(kind: MeasureKind, pair: AttackPair,
                        d_min: int = 2) -> NoticeabilityReport:
    """Dispatch one of the four per-node-statistic measures on (G, G_hat)."""
    kind = MeasureKind(kind)
    g, gh = pair.original, pair.attacked
    if kind is MeasureKind.DEGREE_LR:
        return lr_degree_test(g, gh, d_min)
    if kind is MeasureKind.DEGREE_KS:
        x, y = gstats.degrees(g), gstats.degrees(gh)
    elif kind is MeasureKind.CLSCOEF_KS:
        x, y = gstats.clustering_coefficients(g), gstats.clustering_coefficients(gh)
    elif kind is MeasureKind.HOMOPH_KS:
        x, y = gstats.node_homophily(g), gstats.node_homophily(gh)
    else:  # pragma: no cover
        raise ValueError(kind)
    d, p = ks_two_sample(x, y)
    return NoticeabilityReport(
        measure_name=kind.value, statistic=d, p_value=p, noticeable_at_05=p < 0.05)


def ks_permutation_pvalue(x, y, n_perm: int, rng) -> float:
    """Permutation-test p-value for the KS D statistic (test oracle)."""
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    d_obs = _kernels.ks_statistic_sorted(np.sort(x), np.sort(y))
    pooled = np.concatenate([x, y])
    count = 0
    gen = rng.generator
    for _ in range(n_perm):
        perm = gen.permutation(pooled)
        d = _kernels.ks_statistic_sorted(np.sort(perm[:x.size]), np.sort(perm[x.size:]))
        if d >= d_obs - 1e-12:
            count += 1
    return (count + 1) / (n_perm + 1)
