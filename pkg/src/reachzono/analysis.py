"""Applications of reachable sets: verification, reliability, extents, ranking.

Robustness scores measure the worst-case logit margin of the predicted class
over a reachable set; certificates follow from their sign on the over- or
under-approximated set. Output extents and interval-hull volumes drive the
regression, autoencoder and feature-importance analyses.
"""

from __future__ import annotations

import csv
import time
from dataclasses import dataclass, replace

import numpy as np

from .network import Network, forward
from .relu_reach import (
    OVER,
    UNDER,
    Budget,
    ReachSet,
    ResourceLimitError,
    UNLIMITED,
    propagate_limited,
)
from .zonotope import Zonotope, scaled_volume

ROBUST = "robust"
NON_ROBUST = "non_robust"
UNKNOWN = "unknown"

INPUT_SHAPES = ("cube", "box", "box_pca", "free")


class EmptyReachSetError(ValueError):
    """Scores or extents were requested for an empty reachable set."""


@dataclass(frozen=True)
class InputSpec:
    """Perturbation description that expands to an input zonotope around anchor.

    cube: generator matrix eps * I (L-inf ball of radius eps).
    box: diag(radii), one independent perturbation per feature.
    box_pca: box with radii from the dataset covariance, volume-matched to
        the eps cube.
    free: [delta * I; eps * ones] - a coupled shift of all features by up to
        eps plus a small independent perturbation delta per feature.
    """

    shape: str
    anchor: np.ndarray | None = None
    eps: float | None = None
    delta: float | None = None
    radii: np.ndarray | None = None

    def __post_init__(self):
        if self.shape not in INPUT_SHAPES:
            raise ValueError(f"shape must be one of {INPUT_SHAPES}")
        if self.anchor is not None:
            anchor = np.asarray(self.anchor, dtype=float).reshape(-1)
            anchor.flags.writeable = False
            object.__setattr__(self, "anchor", anchor)
        if self.radii is not None:
            radii = np.asarray(self.radii, dtype=float).reshape(-1)
            radii.flags.writeable = False
            object.__setattr__(self, "radii", radii)

    def with_anchor(self, anchor) -> "InputSpec":
        return replace(self, anchor=np.asarray(anchor, dtype=float))


def build_input_set(spec: InputSpec, dataset=None) -> Zonotope:
    """Expand an input specification into its zonotope.

    eps = 0 is tolerated (a degenerate point set, useful in tests); negative
    parameters are rejected. box_pca needs a dataset of at least two points
    with a nondegenerate covariance.
    """
    if spec.anchor is None:
        raise ValueError("input spec has no anchor point")
    x = spec.anchor
    d = x.shape[0]
    if spec.shape == "cube":
        if spec.eps is None or spec.eps < 0:
            raise ValueError("cube requires eps >= 0")
        return Zonotope(x, spec.eps * np.eye(d))
    if spec.shape == "box":
        if spec.radii is None or spec.radii.shape[0] != d:
            raise ValueError("box requires one radius per feature")
        if np.any(spec.radii < 0):
            raise ValueError("box radii must be nonnegative")
        return Zonotope(x, np.diag(spec.radii))
    if spec.shape == "free":
        if spec.eps is None or spec.eps < 0 or spec.delta is None or spec.delta < 0:
            raise ValueError("free requires eps >= 0 and delta >= 0")
        G = np.vstack([spec.delta * np.eye(d), spec.eps * np.ones((1, d))])
        return Zonotope(x, G)
    # box_pca
    if spec.eps is None or spec.eps <= 0:
        raise ValueError("box_pca requires eps > 0")
    radii = _pca_box_radii(dataset, d)
    target = 2.0 * spec.eps  # scaled volume of the eps cube
    current = float(np.exp(np.log(2.0 * radii).mean()))
    return Zonotope(x, np.diag(radii * (target / current)))


def _pca_box_radii(dataset, d: int) -> np.ndarray:
    if dataset is None:
        raise ValueError("box_pca requires a dataset")
    X = np.asarray(dataset, dtype=float)
    if X.ndim != 2 or X.shape[0] < 2:
        raise ValueError("box_pca requires a dataset with at least 2 points")
    if X.shape[1] != d:
        raise ValueError("dataset feature count does not match anchor length")
    cov = np.cov(X, rowvar=False, ddof=1).reshape(d, d)
    evals, evecs = np.linalg.eigh(cov)
    order = np.argsort(-evals, kind="stable")
    evals = np.clip(evals[order], 0.0, None)
    V = evecs[:, order]
    # Sign convention: first component above noise level is positive.
    for k in range(d):
        col = V[:, k]
        nz = np.flatnonzero(np.abs(col) > 1e-12)
        if nz.size and col[nz[0]] < 0:
            V[:, k] = -col
    gens = np.sqrt(evals)[:, None] * V.T
    radii = np.abs(gens).sum(axis=0)
    if np.any(radii <= 0.0):
        raise ValueError("degenerate covariance: a principal direction has zero spread")
    return radii


def robustness_scores(rs: ReachSet, a: int) -> dict:
    """Worst-case margin of class a against every other class over the set.

    s_b = min over zonotopes of (c_a - c_b - sum_i |g_i^a - g_i^b|).
    """
    if len(rs) == 0:
        raise EmptyReachSetError("cannot score an empty reachable set")
    n_classes = rs.zonotopes[0].dim
    if not 0 <= a < n_classes:
        raise ValueError(f"class {a} out of range for {n_classes} outputs")
    scores = {b: np.inf for b in range(n_classes) if b != a}
    for z in rs.zonotopes:
        c = z.center
        G = z.generators
        for b in scores:
            s = c[a] - c[b] - np.abs(G[:, a] - G[:, b]).sum()
            if s < scores[b]:
                scores[b] = s
    return {b: float(s) for b, s in scores.items()}


@dataclass(frozen=True)
class VerificationReport:
    """Per-sample verification outcome.

    certificate is ROBUST only if every over-approximation score is
    positive, NON_ROBUST only if some under-approximation score is
    negative, and UNKNOWN otherwise (including empty under sets and
    resource failures, which are described in diagnostic).
    """

    predicted: int
    scores_over: dict | None
    scores_under: dict | None
    certificate: str
    robust_against: dict
    non_robust_against: dict
    wall_time_s: float
    diagnostic: str | None = None


def verify(
    net: Network,
    spec: InputSpec,
    budget: Budget = UNLIMITED,
    modes=(OVER, UNDER),
    max_total: int | None = None,
    dataset=None,
) -> VerificationReport:
    """Propagate the input set in the requested directions and certify."""
    t0 = time.perf_counter()
    z0 = build_input_set(spec, dataset)
    logits = forward(net, spec.anchor)
    a = int(np.argmax(logits))  # ties break to the lowest index

    scores_over = scores_under = None
    notes = []
    if OVER in modes:
        try:
            rs = propagate_limited(net, z0, OVER, budget, max_total)
            scores_over = robustness_scores(rs, a)
        except ResourceLimitError as exc:
            notes.append(f"over: {exc}")
    if UNDER in modes:
        try:
            rs = propagate_limited(net, z0, UNDER, budget, max_total)
            if len(rs) == 0:
                notes.append("under: set empty after budget drops (no witness)")
            else:
                scores_under = robustness_scores(rs, a)
        except ResourceLimitError as exc:
            notes.append(f"under: {exc}")

    robust_against = (
        {b: s > 0.0 for b, s in scores_over.items()} if scores_over else {}
    )
    non_robust_against = (
        {b: s < 0.0 for b, s in scores_under.items()} if scores_under else {}
    )
    if scores_over and all(robust_against.values()):
        certificate = ROBUST
    elif scores_under and any(non_robust_against.values()):
        certificate = NON_ROBUST
    else:
        certificate = UNKNOWN
    return VerificationReport(
        predicted=a,
        scores_over=scores_over,
        scores_under=scores_under,
        certificate=certificate,
        robust_against=robust_against,
        non_robust_against=non_robust_against,
        wall_time_s=time.perf_counter() - t0,
        diagnostic="; ".join(notes) if notes else None,
    )


@dataclass(frozen=True)
class ClassMatrix:
    """Per-(true class, tested class) certificate fractions; diagonal is NaN,
    rows of absent classes are NaN with count 0."""

    robust: np.ndarray
    non_robust: np.ndarray
    counts: np.ndarray


def class_specific_matrix(
    net: Network,
    points,
    labels,
    spec_template: InputSpec,
    budget: Budget = UNLIMITED,
    max_total: int | None = None,
) -> ClassMatrix:
    """Fraction of samples per true class certified (non-)robust per class."""
    X = np.asarray(points, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if X.shape[0] != labels.shape[0]:
        raise ValueError("points and labels must have the same length")
    k = net.output_dim
    rob = np.zeros((k, k))
    non = np.zeros((k, k))
    counts = np.zeros(k, dtype=int)
    for x, t in zip(X, labels):
        report = verify(net, spec_template.with_anchor(x), budget, (OVER, UNDER), max_total)
        counts[t] += 1
        for b, flag in report.robust_against.items():
            rob[t, b] += bool(flag)
        for b, flag in report.non_robust_against.items():
            non[t, b] += bool(flag)
    with np.errstate(invalid="ignore", divide="ignore"):
        rob = rob / counts[:, None]
        non = non / counts[:, None]
    for matrix in (rob, non):
        np.fill_diagonal(matrix, np.nan)
        matrix[counts == 0, :] = np.nan
    return ClassMatrix(rob, non, counts)


@dataclass(frozen=True)
class ReliabilityCurve:
    """Score-threshold sweep: per-theta true-above and false-above rates.

    A rate is None when its population (correctly resp. wrongly predicted
    samples) is empty; theta_star maximizes TA - FA (absent rate counts as
    zero), ties resolved to the smallest theta.
    """

    thresholds: np.ndarray
    ta_rates: np.ndarray | None
    fa_rates: np.ndarray | None
    theta_star: float


def reliability_rates(scores, correct, thetas) -> ReliabilityCurve:
    """Rates of theta-robust samples among correct and wrong predictions."""
    scores = np.asarray(scores, dtype=float)
    correct = np.asarray(correct, dtype=bool)
    thetas = np.asarray(thetas, dtype=float)
    if scores.size == 0 or thetas.size == 0:
        raise ValueError("reliability needs at least one sample and one threshold")
    if scores.shape != correct.shape:
        raise ValueError("scores and correctness flags must align")
    n_c = int(correct.sum())
    n_w = int((~correct).sum())
    above = scores[None, :] > thetas[:, None]
    ta = above[:, correct].sum(axis=1) / n_c if n_c else None
    fa = above[:, ~correct].sum(axis=1) / n_w if n_w else None
    gain = (ta if ta is not None else 0.0) - (fa if fa is not None else 0.0)
    best = gain.max()
    theta_star = float(thetas[gain == best].min())
    return ReliabilityCurve(thetas, ta, fa, theta_star)


def classification_robust_loss(
    rs_over: ReachSet, a: int, correct: bool, pred_loss: float
) -> float:
    """pred_loss plus the worst negative margin, charged only when correct."""
    if rs_over.direction != OVER:
        raise ValueError("robust loss must be computed on an over-approximation")
    if not correct:
        return float(pred_loss)
    scores = robustness_scores(rs_over, a)
    return float(pred_loss + max(max(-s, 0.0) for s in scores.values()))


def output_extensions(rs: ReachSet) -> np.ndarray:
    """Per-output-dimension extent of the set union (hull width per dim)."""
    if len(rs) == 0:
        raise EmptyReachSetError("cannot measure an empty reachable set")
    lows = np.array([z.center - z.radius() for z in rs.zonotopes])
    upps = np.array([z.center + z.radius() for z in rs.zonotopes])
    return upps.max(axis=0) - lows.min(axis=0)


def regression_robust_loss(rs_over: ReachSet, l_in: float, val_loss: float) -> float:
    """val_loss plus the excess of the largest output extent over l_in."""
    if rs_over.direction != OVER:
        raise ValueError("robust loss must be computed on an over-approximation")
    if l_in <= 0:
        raise ValueError("l_in must be positive")
    excess = float(output_extensions(rs_over).max()) - l_in
    return float(val_loss + max(excess, 0.0))


@dataclass(frozen=True)
class FeatureRank:
    feature: int
    volume: float | None
    error: str | None = None


def rank_features(
    net: Network,
    anchor,
    delta: float,
    eps_small: float,
    budget: Budget = UNLIMITED,
    max_total: int | None = None,
) -> list:
    """Rank input features by reachable-set volume under a widened box.

    Feature f gets radius delta while all others get eps_small; the volume
    of the over-approximated reachable set (sum of per-zonotope scaled
    interval-hull volumes) measures f's influence. Descending volume, ties
    to the lower feature index; per-feature resource failures are reported
    in the entry.
    """
    anchor = np.asarray(anchor, dtype=float).reshape(-1)
    if not delta > eps_small > 0:
        raise ValueError("need delta > eps_small > 0")
    d = anchor.shape[0]
    if d != net.input_dim:
        raise ValueError("anchor length does not match network input width")
    entries = []
    for f in range(d):
        radii = np.full(d, eps_small)
        radii[f] = delta
        z0 = Zonotope(anchor, np.diag(radii))
        try:
            rs = propagate_limited(net, z0, OVER, budget, max_total)
            volume = float(sum(scaled_volume(z) for z in rs.zonotopes))
            entries.append(FeatureRank(f, volume))
        except ResourceLimitError as exc:
            entries.append(FeatureRank(f, None, str(exc)))
    valid = sorted(
        (e for e in entries if e.error is None),
        key=lambda e: (-e.volume, e.feature),
    )
    failed = [e for e in entries if e.error is not None]
    return valid + failed


def load_dataset(path):
    """Read the dataset CSV: header row, float features, optional final
    integer column named 'label'. Returns (X, labels_or_None, feature_names)."""
    with open(path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ValueError(f"{path}: empty dataset file") from None
        rows = [row for row in reader if row]
    has_labels = bool(header) and header[-1].strip().lower() == "label"
    names = [h.strip() for h in (header[:-1] if has_labels else header)]
    if not names:
        raise ValueError(f"{path}: no feature columns")
    X, labels = [], []
    for i, row in enumerate(rows):
        expected = len(names) + (1 if has_labels else 0)
        if len(row) != expected:
            raise ValueError(f"{path}: row {i + 2} has {len(row)} fields, expected {expected}")
        try:
            X.append([float(v) for v in row[: len(names)]])
            if has_labels:
                labels.append(int(row[-1]))
        except ValueError as exc:
            raise ValueError(f"{path}: row {i + 2}: {exc}") from None
    X = np.asarray(X, dtype=float)
    return X, (np.asarray(labels, dtype=int) if has_labels else None), names
