"""Evaluation and analysis utilities.

Average precision, Pearson correlation, a one-tailed paired t-test backed
by a continued-fraction incomplete beta, stratified splits, and hexagonal
binning of labeled planar points.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import SingleClass, ZeroVariance, ZeroVarianceDiff


def average_precision(scores, truths) -> float:
    """Area under the precision-recall step function of a ranked binary prediction.

    Equal scores are grouped at a single threshold, so the result is invariant
    under any strictly monotone transform of the scores.
    """
    scores = np.asarray(scores, dtype=float)
    truths = np.asarray(truths, dtype=int)
    if scores.shape != truths.shape or scores.ndim != 1:
        raise ValueError("scores and truths must be 1-D of equal length")
    n_pos = int(truths.sum())
    if n_pos == 0:
        raise ValueError("average precision needs at least one positive")

    order = np.argsort(-scores, kind="stable")
    s = scores[order]
    t = truths[order]
    # last index of each tie group: thresholds sweep distinct score values
    boundaries = np.nonzero(np.diff(s))[0]
    cuts = np.append(boundaries, len(s) - 1)
    cum_pos = np.cumsum(t)

    ap = 0.0
    prev_recall = 0.0
    for c in cuts:
        tp = cum_pos[c]
        precision = tp / (c + 1)
        recall = tp / n_pos
        ap += (recall - prev_recall) * precision
        prev_recall = recall
    return float(ap)


def pearson_r(x, y) -> float:
    """Sample Pearson correlation of two equal-length vectors."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1 or len(x) < 2:
        raise ValueError("need two 1-D vectors of equal length >= 2")
    dx = x - x.mean()
    dy = y - y.mean()
    sx = math.sqrt(float(dx @ dx))
    sy = math.sqrt(float(dy @ dy))
    if sx == 0.0 or sy == 0.0:
        raise ZeroVariance("pearson_r requires nonzero variance in both inputs")
    return float((dx @ dy) / (sx * sy))


def _betacf(a: float, b: float, x: float) -> float:
    """Continued fraction for the regularized incomplete beta (modified Lentz)."""
    tiny = 1e-300
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < tiny:
        d = tiny
    d = 1.0 / d
    h = d
    for m in range(1, 300):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < tiny:
            d = tiny
        c = 1.0 + aa / c
        if abs(c) < tiny:
            c = tiny
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < 3e-16:
            break
    return h


def betainc_reg(a: float, b: float, x: float) -> float:
    """Regularized incomplete beta function I_x(a, b)."""
    if x <= 0.0:
        return 0.0
    if x >= 1.0:
        return 1.0
    front = math.exp(math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b)
                     + a * math.log(x) + b * math.log1p(-x))
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_sf(t: float, df: int) -> float:
    """Upper-tail probability P(T_df > t) of the Student t distribution."""
    if df < 1:
        raise ValueError("df must be >= 1")
    x = df / (df + t * t)
    half_tail = 0.5 * betainc_reg(df / 2.0, 0.5, x)
    return half_tail if t >= 0 else 1.0 - half_tail


def paired_t_one_tailed(a, b) -> tuple[float, float]:
    """One-tailed paired t-test of mean(a) > mean(b).

    Returns (t, p) with p the upper-tail probability under T_{n-1}.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape or a.ndim != 1 or len(a) < 2:
        raise ValueError("need paired 1-D vectors of equal length >= 2")
    d = a - b
    sd = float(d.std(ddof=1))
    if sd == 0.0:
        raise ZeroVarianceDiff("paired differences are constant")
    n = len(d)
    t = float(d.mean() / (sd / math.sqrt(n)))
    return t, t_sf(t, n - 1)


def stratified_split(ids, labels, fraction: float = 0.8, seed: int = 0):
    """Per-class proportional train/validation split, deterministic per seed."""
    ids = list(ids)
    labels = list(labels)
    if len(ids) != len(labels):
        raise ValueError("ids and labels must align")
    classes = sorted(set(labels), key=repr)
    if len(classes) < 2:
        raise SingleClass("stratified_split needs both classes present")
    rng = np.random.default_rng(seed)
    train, valid = [], []
    for cls in classes:
        members = [i for i, lab in zip(ids, labels) if lab == cls]
        members.sort(key=repr)
        perm = rng.permutation(len(members))
        n_train = int(fraction * len(members) + 1e-9)
        chosen = set(perm[:n_train].tolist())
        for k, m in enumerate(members):
            (train if k in chosen else valid).append(m)
    return train, valid


# -- hexagonal binning ------------------------------------------------------

SQRT3 = math.sqrt(3.0)


@dataclass
class HexGrid:
    """Signed counts (stable minus unstable) on a pointy-top hex lattice."""

    side: float
    counts: dict = field(default_factory=dict)  # (q, r) axial -> int

    def center(self, q: int, r: int) -> tuple[float, float]:
        x = self.side * SQRT3 * (q + r / 2.0)
        y = self.side * 1.5 * r
        return x, y

    def total_abs(self) -> int:
        return sum(abs(c) for c in self.counts.values())


def _axial_round(qf: float, rf: float) -> tuple[int, int]:
    # cube rounding: x+y+z = 0
    xf, zf = qf, rf
    yf = -xf - zf
    x, y, z = round(xf), round(yf), round(zf)
    dx, dy, dz = abs(x - xf), abs(y - yf), abs(z - zf)
    if dx > dy and dx > dz:
        x = -y - z
    elif dy > dz:
        y = -x - z
    else:
        z = -x - y
    return int(x), int(z)


def hex_of_point(u: float, v: float, side: float) -> tuple[int, int]:
    """Axial coordinates of the hexagon containing (u, v)."""
    qf = (SQRT3 / 3.0 * u - v / 3.0) / side
    rf = (2.0 / 3.0 * v) / side
    return _axial_round(qf, rf)


def hexbin(points, labels, side: float) -> HexGrid:
    """Bin labeled planar points; each hex accumulates +1 per stable point
    and -1 per unstable point."""
    if side <= 0:
        raise ValueError("hex side must be positive")
    grid = HexGrid(side=side)
    for (u, v), lab in zip(points, labels):
        key = hex_of_point(float(u), float(v), side)
        grid.counts[key] = grid.counts.get(key, 0) + (1 if lab else -1)
    return grid


def signed_log(count: int) -> float:
    """Color value for a signed count: sign(c) * log(1 + |c|), natural log."""
    if count == 0:
        return 0.0
    return math.copysign(math.log1p(abs(count)), count)


def hexgrid_rows(grid: HexGrid):
    """Plot-ready rows (center_u, center_v, signed_count, log_signed_value)."""
    rows = []
    for (q, r), c in sorted(grid.counts.items()):
        x, y = grid.center(q, r)
        rows.append((x, y, c, signed_log(c)))
    return rows
