"""Brute-force reference implementations used only by the tests.

Everything here is written as explicit per-unit Python loops, independent of
the package's vectorized code paths, so the two can be compared as genuinely
different routes to the same quantities.
"""

from __future__ import annotations

import math

from scipy import stats


def _mean(values):
    return sum(values) / len(values)


def oracle_phi(z, e, obs, g1, g0, w):
    """Per-unit weighted augmented contrast, term by term."""
    n = len(z)
    w_bar = sum(w) / n
    out = []
    for i in range(n):
        term = (
            z[i] / e[i] * (obs[i] - g1[i])
            - (1.0 - z[i]) / (1.0 - e[i]) * (obs[i] - g0[i])
            + g1[i]
            - g0[i]
        )
        out.append(w[i] / w_bar * term)
    return out


def oracle_gamma(z, d, y, mu1, mu0, m1, m0, e, w, beta):
    """Per-unit centered influence values of the ratio estimator."""
    n = len(z)
    normalizer = _mean([w[i] * (m1[i] - m0[i]) for i in range(n)])
    out = []
    for i in range(n):
        e_obs = e[i] * z[i] + (1.0 - e[i]) * (1.0 - z[i])
        mu_obs = mu1[i] if z[i] == 1.0 else mu0[i]
        m_obs = m1[i] if z[i] == 1.0 else m0[i]
        core = (2.0 * z[i] - 1.0) / e_obs * (
            y[i] - mu_obs - beta * (d[i] - m_obs)
        ) + mu1[i] - mu0[i] - beta * (m1[i] - m0[i])
        out.append(w[i] * core / normalizer)
    return out


def oracle_swlate(z, d, y, mu1, mu0, m1, m0, e, w, alpha=0.05):
    """Point, SE and Wald CI computed by direct summation."""
    n = len(z)
    phin = oracle_phi(z, e, y, mu1, mu0, w)
    phid = oracle_phi(z, e, d, m1, m0, w)
    point = _mean(phin) / _mean(phid)
    gamma = oracle_gamma(z, d, y, mu1, mu0, m1, m0, e, w, point)
    se = math.sqrt(_mean([g * g for g in gamma]) / n)
    q = float(stats.norm.ppf(1.0 - alpha / 2.0))
    return point, se, (point - q * se, point + q * se)


def oracle_envelopes(y, d):
    """The four envelope targets per unit of a [0, 1]-scaled sample."""
    v_u1 = [y[i] * d[i] + 1.0 - d[i] for i in range(len(y))]
    v_l1 = [y[i] * d[i] for i in range(len(y))]
    v_u0 = [y[i] * (1.0 - d[i]) for i in range(len(y))]
    v_l0 = [y[i] * (1.0 - d[i]) + d[i] for i in range(len(y))]
    return v_u1, v_l1, v_u0, v_l0


def oracle_bound(z, d, y_scaled, vhat1, vhat0, e, w, side, alpha=0.05, span=1.0):
    """One ATE bound with its interval, by direct summation; ``span`` maps back
    to original outcome units."""
    n = len(z)
    v_u1, v_l1, v_u0, v_l0 = oracle_envelopes(y_scaled, d)
    obs1 = v_u1 if side == "upper" else v_l1
    obs0 = v_u0 if side == "upper" else v_l0
    w_bar = sum(w) / n
    phi = []
    for i in range(n):
        term = (
            z[i] / e[i] * (obs1[i] - vhat1[i])
            - (1.0 - z[i]) / (1.0 - e[i]) * (obs0[i] - vhat0[i])
            + vhat1[i]
            - vhat0[i]
        )
        phi.append(w[i] / w_bar * term)
    point = _mean(phi)
    delta = [p - point for p in phi]
    se = math.sqrt(_mean([v * v for v in delta]) / n)
    q = float(stats.norm.ppf(1.0 - alpha / 2.0))
    return point * span, se * span, ((point - q * se) * span, (point + q * se) * span)
