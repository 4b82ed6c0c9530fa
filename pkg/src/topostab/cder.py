"""Entropy-guided Gaussian coordinates on labeled diagram point sets.

Training pools every transformed-diagram point under per-point weights
w(x) = 1/(L * N_l * |X_i|), builds one cover tree over the pool, then
walks it breadth first. A node's region is the closed ball of radius
2^(level+1) around its center. Regions too light are pruned; regions whose
label entropy falls at or below the threshold emit one Gaussian coordinate
for the dominant label and end their branch; everything else descends.

Evaluation of a sample against a coordinate g is the empirical integral
(1/|X|) * sum g(x), zero for empty samples.
"""

from __future__ import annotations

import json
import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from . import covertree
from .errors import EmptyClass, NoRegionsFound

COV_EIGENVALUE_FLOOR = 1e-4


@dataclass
class LabeledDiagramSet:
    clouds: list            # (m_i, 2) arrays, possibly empty
    labels: list            # one label per cloud
    domain: list            # sorted distinct labels, length L
    weights: list           # per-cloud weight arrays, same shapes as clouds

    @property
    def n_labels(self) -> int:
        return len(self.domain)

    def pooled(self):
        """(points, weights, label indices) over all non-empty clouds."""
        pts, wts, lab = [], [], []
        for cloud, label, w in zip(self.clouds, self.labels, self.weights):
            if len(cloud):
                pts.append(cloud)
                wts.append(w)
                lab.append(np.full(len(cloud), self.domain.index(label)))
        if not pts:
            return (np.zeros((0, 2)), np.zeros(0), np.zeros(0, dtype=int))
        return (np.vstack(pts), np.concatenate(wts),
                np.concatenate(lab).astype(int))


@dataclass
class RegionStats:
    ball: covertree.CoverBall
    masses: np.ndarray      # per domain label
    total: float
    entropy: float


@dataclass
class GaussianCoordinate:
    label: object
    mean: np.ndarray
    cov: np.ndarray
    weight: float
    _inv: np.ndarray = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        self.mean = np.asarray(self.mean, dtype=float).reshape(2)
        self.cov = np.asarray(self.cov, dtype=float).reshape(2, 2)
        if self._inv is None:
            self._inv = np.linalg.inv(self.cov)

    def __call__(self, points: np.ndarray) -> np.ndarray:
        diff = np.asarray(points, dtype=float).reshape(-1, 2) - self.mean
        quad = np.einsum("ij,jk,ik->i", diff, self._inv, diff)
        return np.exp(-0.5 * quad)


@dataclass
class CderModel:
    coordinates: list
    meta: dict

    def __len__(self):
        return len(self.coordinates)


def assign_weights(clouds, labels, domain=None) -> LabeledDiagramSet:
    """Attach w(x) = 1/(L * N_l * |X_i|) to every point.

    Empty clouds are retained with empty weight arrays so the per-label
    sample counts N_l stay honest.
    """
    clouds = [np.asarray(c, dtype=float).reshape(-1, 2) for c in clouds]
    if len(clouds) != len(labels):
        raise ValueError("one label per cloud required")
    if domain is None:
        domain = sorted(set(labels))
    else:
        domain = sorted(domain)
    if len(domain) < 2:
        raise EmptyClass("need at least two labels")
    counts = {l: 0 for l in domain}
    for label in labels:
        if label not in counts:
            raise ValueError(f"label {label!r} outside domain {domain}")
        counts[label] += 1
    for label, n in counts.items():
        if n == 0:
            raise EmptyClass(f"label {label!r} has no clouds")

    n_labels = len(domain)
    weights = []
    for cloud, label in zip(clouds, labels):
        if len(cloud):
            w = 1.0 / (n_labels * counts[label] * len(cloud))
            weights.append(np.full(len(cloud), w))
        else:
            weights.append(np.zeros(0))
    return LabeledDiagramSet(clouds=clouds, labels=list(labels),
                             domain=domain, weights=weights)


def entropy(masses, n_labels: int) -> float:
    """Label entropy of mass vector, log base n_labels; empty mass -> 1."""
    masses = np.asarray(masses, dtype=float)
    total = masses.sum()
    if total <= 0:
        return 1.0
    p = masses[masses > 0] / total
    return float(-(p * np.log(p)).sum() / math.log(n_labels))


def region_entropy(dset: LabeledDiagramSet, ball: covertree.CoverBall,
                   _pooled=None) -> RegionStats:
    points, weights, label_idx = _pooled if _pooled else dset.pooled()
    if len(points):
        inside = (np.linalg.norm(points - ball.center, axis=1)
                  <= ball.region_radius)
        masses = np.bincount(label_idx[inside], weights=weights[inside],
                             minlength=dset.n_labels)
    else:
        masses = np.zeros(dset.n_labels)
    total = float(masses.sum())
    return RegionStats(ball=ball, masses=masses, total=total,
                       entropy=entropy(masses, dset.n_labels))


def _coordinate_from_region(dset, ball, stats, pooled) -> GaussianCoordinate:
    points, weights, label_idx = pooled
    dominant = int(np.argmax(stats.masses))  # argmax takes smaller on ties
    inside = (np.linalg.norm(points - ball.center, axis=1)
              <= ball.region_radius)
    pick = inside & (label_idx == dominant)
    pts = points[pick]
    w = weights[pick]
    p = w / w.sum()
    mean = p @ pts
    diff = pts - mean
    cov = (diff * p[:, None]).T @ diff
    eigval, eigvec = np.linalg.eigh(cov)
    eigval = np.maximum(eigval, COV_EIGENVALUE_FLOOR)
    cov = (eigvec * eigval) @ eigvec.T
    return GaussianCoordinate(label=dset.domain[dominant], mean=mean,
                              cov=cov, weight=float(stats.masses[dominant]))


def fit(dset: LabeledDiagramSet, entropy_threshold: float = 0.3,
        min_mass: float = 0.01) -> CderModel:
    """Breadth-first parsimonious descent emitting low-entropy coordinates."""
    if not 0 < entropy_threshold < 1:
        raise ValueError("entropy_threshold must lie in (0, 1)")
    if min_mass <= 0:
        raise ValueError("min_mass must be positive")
    pooled = dset.pooled()
    tree = covertree.build(pooled[0])

    coordinates = []
    queue = deque([tree.root_ball()])
    while queue:
        ball = queue.popleft()
        stats = region_entropy(dset, ball, _pooled=pooled)
        if stats.total < min_mass:
            continue
        if stats.entropy <= entropy_threshold:
            coordinates.append(
                _coordinate_from_region(dset, ball, stats, pooled))
            continue
        queue.extend(covertree.descend(tree, ball))

    if not coordinates:
        raise NoRegionsFound(
            f"no region reached entropy <= {entropy_threshold} "
            f"with mass >= {min_mass}")
    return CderModel(coordinates=coordinates,
                     meta={"entropy_threshold": entropy_threshold,
                           "min_mass": min_mass,
                           "cov_floor": COV_EIGENVALUE_FLOOR})


def evaluate(model: CderModel, cloud) -> np.ndarray:
    cloud = np.asarray(cloud, dtype=float).reshape(-1, 2)
    if len(cloud) == 0:
        return np.zeros(len(model.coordinates))
    return np.array([coord(cloud).sum() / len(cloud)
                     for coord in model.coordinates])


def vectorize_sample(models_by_dim: dict, points_by_dim: dict) -> np.ndarray:
    """Concatenate evaluate() outputs in ascending homological dimension."""
    blocks = []
    for dim in sorted(models_by_dim):
        cloud = points_by_dim.get(dim, np.zeros((0, 2)))
        blocks.append(evaluate(models_by_dim[dim], cloud))
    if not blocks:
        return np.zeros(0)
    return np.concatenate(blocks)


def feature_names(models_by_dim: dict) -> list:
    names = []
    for dim in sorted(models_by_dim):
        for j, coord in enumerate(models_by_dim[dim].coordinates):
            names.append(f"cder_h{dim}_{j}_{coord.label}")
    return names


def models_to_json(models_by_dim: dict) -> str:
    payload = {"dims": {}}
    for dim in sorted(models_by_dim):
        model = models_by_dim[dim]
        payload["dims"][str(dim)] = {
            "meta": model.meta,
            "coordinates": [
                {
                    "label": coord.label,
                    "mean": [float(x) for x in coord.mean],
                    "cov": [[float(x) for x in row] for row in coord.cov],
                    "weight": float(coord.weight),
                }
                for coord in model.coordinates
            ],
        }
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def models_from_json(text: str) -> dict:
    payload = json.loads(text)
    out = {}
    for dim, body in payload["dims"].items():
        coords = [
            GaussianCoordinate(label=c["label"], mean=np.array(c["mean"]),
                               cov=np.array(c["cov"]), weight=c["weight"])
            for c in body["coordinates"]
        ]
        out[int(dim)] = CderModel(coordinates=coords, meta=body["meta"])
    return out
