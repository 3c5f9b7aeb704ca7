"""Linear cyclic ioSCM construction, equilibrium sampling, interventional
sampling, and the Fisher-z partial correlation test used to validate
separation statements numerically.

The model is X = B X + E with E ~ N(0, Sigma): cycles are solved at the
unique fixed point X = (I - B)^{-1} E, which exists because construction
caps the spectral radius of |B| at 0.9 (the cap on |B| rather than B keeps
every do()-mutilated system a contraction as well). One Gaussian latent
factor per bidirected edge realizes the correlated-noise pattern.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

import numpy as np
from scipy import stats

from .graphs import GraphError, INTERVENTION, MixedGraph, underlying

SPECTRAL_CAP = 0.9
_BATCH = 8192  # sampling batch size; per-batch seeds keep results order-free


class SimulationError(ValueError):
    """Bad model construction or sampling request."""


@dataclass(frozen=True)
class Dataset:
    """An n x |V| numeric table with vertex-name columns."""

    columns: tuple[str, ...]
    values: np.ndarray

    def column(self, name: str) -> np.ndarray:
        try:
            return self.values[:, self.columns.index(name)]
        except ValueError:
            raise SimulationError(f"unknown column {name!r}") from None

    def __len__(self) -> int:
        return self.values.shape[0]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.columns)
        for row in self.values:
            writer.writerow([f"{x:.6g}" for x in row])
        return buf.getvalue()


@dataclass(frozen=True)
class LinearIoScm:
    """Coefficient matrix + correlated-noise covariance over a DMG.

    ``coeffs[i, j]`` is nonzero exactly when vertex j -> vertex i is an edge;
    ``noise_cov[i, j]`` (i != j) is nonzero exactly for bidirected pairs.
    """

    graph: MixedGraph
    coeffs: np.ndarray
    noise_cov: np.ndarray
    seed: int

    def __post_init__(self):
        names = self.graph.vertices
        n = len(names)
        if self.coeffs.shape != (n, n) or self.noise_cov.shape != (n, n):
            raise SimulationError("matrix shapes must match the vertex count")
        idx = {v: i for i, v in enumerate(names)}
        directed = {(idx[t], idx[h]) for t, h in self.graph.directed_edges}
        for i in range(n):
            for j in range(n):
                has_edge = (j, i) in directed
                if has_edge != (self.coeffs[i, j] != 0):
                    raise SimulationError(
                        f"coefficient pattern mismatch at ({names[i]}, {names[j]})")
        bidirected = {frozenset((idx[a], idx[b])) for a, b in self.graph.bidirected_edges}
        for i in range(n):
            for j in range(i + 1, n):
                has_edge = frozenset((i, j)) in bidirected
                if has_edge != (self.noise_cov[i, j] != 0):
                    raise SimulationError(
                        f"noise covariance pattern mismatch at ({names[i]}, {names[j]})")
        if not np.allclose(self.noise_cov, self.noise_cov.T):
            raise SimulationError("noise covariance must be symmetric")
        if np.min(np.linalg.eigvalsh(self.noise_cov)) <= 0:
            raise SimulationError("noise covariance must be positive definite")
        if np.max(np.abs(np.linalg.eigvals(self.coeffs))) >= 1:
            raise SimulationError("spectral radius of the coefficient matrix must be < 1")

    def to_json_dict(self) -> dict:
        return {"vertices": list(self.graph.vertices),
                "B": self.coeffs.tolist(),
                "Sigma": self.noise_cov.tolist(),
                "seed": self.seed}


def model_to_json(m: LinearIoScm) -> str:
    return json.dumps(m.to_json_dict(), indent=2) + "\n"


def random_linear_ioscm(g, coeff_range=(0.1, 0.8), seed: int = 0) -> LinearIoScm:
    """Sample coefficients uniformly in +/-[lo, hi] for every edge, shrink B
    uniformly until the spectral radius of |B| is within the cap, and build
    Sigma = D + Lambda Lambda^T with one latent factor per bidirected edge.
    Deterministic in ``seed``."""
    mg = underlying(g)
    if any(mg.kind_of(v) == INTERVENTION for v in mg.vertices):
        raise SimulationError("models are built over graphs without intervention vertices")
    if any(t == h for t, h in mg.directed_edges) or any(
            a == b for a, b in mg.bidirected_edges):
        raise SimulationError("models need a micro-level graph without self-loops")
    lo, hi = coeff_range
    if not (0 < lo <= hi):
        raise SimulationError("coefficient range must satisfy 0 < lo <= hi")
    rng = np.random.default_rng(seed)
    names = mg.vertices
    idx = {v: i for i, v in enumerate(names)}
    n = len(names)

    coeffs = np.zeros((n, n))
    for t, h in mg.directed_edges:
        magnitude = rng.uniform(lo, hi)
        sign = 1.0 if rng.random() < 0.5 else -1.0
        coeffs[idx[h], idx[t]] = sign * magnitude
    radius = np.max(np.abs(np.linalg.eigvals(np.abs(coeffs)))) if n else 0.0
    if radius > SPECTRAL_CAP:
        coeffs *= SPECTRAL_CAP / radius

    noise = np.diag(rng.uniform(0.5, 1.5, size=n))
    for a, b in mg.bidirected_edges:
        lam = np.zeros(n)
        lam[idx[a]] = rng.uniform(0.3, 0.9) * (1.0 if rng.random() < 0.5 else -1.0)
        lam[idx[b]] = rng.uniform(0.3, 0.9)
        noise += np.outer(lam, lam)
    return LinearIoScm(mg, coeffs, noise, seed)


def sample(m: LinearIoScm, n: int, do=None, seed: int | None = None) -> Dataset:
    """Draw ``n`` equilibrium samples; ``do`` maps vertices to constants and
    replaces their equations (coefficients and noise) before solving.

    Deterministic in (model, seed, n, do); rows are produced in fixed-size
    batches whose seeds derive from the root seed, so a parallel driver
    splitting on batches reproduces the same table.
    """
    if n < 1:
        raise SimulationError("sample count must be at least 1")
    do = dict(do or {})
    names = m.graph.vertices
    idx = {v: i for i, v in enumerate(names)}
    for v in do:
        if v not in idx:
            raise SimulationError(f"do() target {v!r} is not a model vertex")

    coeffs = m.coeffs.copy()
    intervened = sorted(idx[v] for v in do)
    coeffs[intervened, :] = 0.0
    solver = np.linalg.inv(np.eye(len(names)) - coeffs)
    chol = np.linalg.cholesky(m.noise_cov)
    root_seed = m.seed if seed is None else seed

    rows = []
    produced = 0
    batch_index = 0
    while produced < n:
        take = min(_BATCH, n - produced)
        rng = np.random.default_rng((root_seed, batch_index))
        noise = rng.standard_normal((take, len(names))) @ chol.T
        for v, value in do.items():
            noise[:, idx[v]] = float(value)
        rows.append(noise @ solver.T)
        produced += take
        batch_index += 1
    return Dataset(tuple(names), np.vstack(rows))


def partial_correlation_test(data: Dataset, x: str, y: str, cond=(),
                             alpha: float = 0.01):
    """Fisher-z test of the partial correlation of x and y given ``cond``.

    Returns (statistic, p_value, independent) with independent = p >= alpha.
    """
    cond = list(cond)
    n = len(data)
    if n <= len(cond) + 3:
        raise SimulationError("need more samples than conditioning variables plus 3")
    xs = data.column(x)
    ys = data.column(y)
    for name, col in ((x, xs), (y, ys)):
        if np.isclose(np.std(col), 0.0):
            raise SimulationError(f"column {name!r} is degenerate (constant)")
    if cond:
        design = np.column_stack([np.ones(n)] + [data.column(c) for c in cond])
        xs = xs - design @ np.linalg.lstsq(design, xs, rcond=None)[0]
        ys = ys - design @ np.linalg.lstsq(design, ys, rcond=None)[0]
        if np.isclose(np.std(xs), 0.0) or np.isclose(np.std(ys), 0.0):
            raise SimulationError("residuals are degenerate after conditioning")
    r = float(np.corrcoef(xs, ys)[0, 1])
    r = min(max(r, -1 + 1e-12), 1 - 1e-12)
    statistic = math.atanh(r) * math.sqrt(n - len(cond) - 3)
    p_value = 2.0 * float(stats.norm.sf(abs(statistic)))
    return statistic, p_value, p_value >= alpha
