"""Simulation-based search for Pareto-optimal scheduling policies.

Policies are encoded as raw vectors in the unit cube and decoded through the
normalizing constructors in :mod:`slaforge.model`, so any point in the cube
is a valid policy. Each policy is replayed on the arrival and capacity
traces, scored by :func:`slaforge.metrics.compute_losses`, and the archive
of all evaluations is filtered to its nondominated set (both losses
minimized). Progress is tracked by the dominated hypervolume against a
reference point fixed after the first batch.

The seed for a policy's simulation is derived from the policy's own bytes,
not its position in the batch, so evaluating the same policy in a different
batch order gives the same losses.

For city policies, pairs with no arrivals in the trace get their GPS weight
zeroed before normalization (capacity aimed at an empty queue cannot be
spent as intended); the decoded policy carries no inspection fractions —
they are derived from whichever traces the policy is evaluated on.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.stats import qmc

from . import errors
from .metrics import MetricsConfig, compute_losses
from .model import (
    ArrivalTrace,
    CapacityTrace,
    CityBudgetPolicy,
    borough_policy_from_vector,
    city_policy_from_vector,
    normalize_weights,
)
from .simulator import (
    SimulationConfig,
    derive_city_inspection_fractions,
    simulate_borough_policy,
    simulate_city_policy,
)
from .simulator._rng import derive_seed

_POLICY_CLASSES = ("borough", "city")
_SAMPLERS = ("sobol_random", "evolutionary")
_MUTATION_SCALE = 0.1
_CROSSOVER_PROB = 0.5


@dataclass(frozen=True)
class SearchConfig:
    """Search run parameters."""

    policy_class: str = "borough"
    batch_size: int = 64
    iterations: int = 10
    seeds_per_policy: int = 1
    sampler: str = "sobol_random"
    seed: int = 0

    def __post_init__(self):
        if self.policy_class not in _POLICY_CLASSES:
            raise errors.FractionOutOfRange(
                f"policy_class must be one of {_POLICY_CLASSES}, got"
                f" {self.policy_class!r}"
            )
        if self.sampler not in _SAMPLERS:
            raise errors.FractionOutOfRange(
                f"sampler must be one of {_SAMPLERS}, got {self.sampler!r}"
            )
        for name in ("batch_size", "iterations", "seeds_per_policy"):
            if int(getattr(self, name)) < 1:
                raise errors.FractionOutOfRange(f"{name} must be >= 1")


@dataclass(eq=False)
class FrontEntry:
    """One nondominated policy: raw cube coordinates and its losses."""

    vector: np.ndarray
    efficiency_loss: float
    equity_loss: float


@dataclass(eq=False)
class ParetoFront:
    """Result of a search run.

    entries are sorted by efficiency loss ascending; hypervolume_history has
    one (non-decreasing) value per iteration, measured against
    reference_point = (1.1 x the first batch's worst finite losses).
    """

    policy_class: str
    n_categories: int
    n_boroughs: int
    entries: list[FrontEntry]
    reference_point: np.ndarray
    hypervolume_history: np.ndarray
    evaluations: int
    city_presence: np.ndarray | None = field(default=None, repr=False)

    def policy(self, i: int):
        """Decode entry i into the policy object that was evaluated."""
        vec = self.entries[i].vector
        if self.policy_class == "borough":
            return borough_policy_from_vector(
                vec, self.n_categories, self.n_boroughs
            )
        return _decode_city(vec, self.n_categories, self.n_boroughs,
                            self.city_presence)


def policy_dimension(policy_class: str, n_categories: int, n_boroughs: int) -> int:
    """Length of the raw vector encoding one policy of the given class."""
    if policy_class == "borough":
        return n_boroughs + 2 * n_categories * n_boroughs
    if policy_class == "city":
        return n_categories * n_boroughs
    raise errors.FractionOutOfRange(
        f"policy_class must be one of {_POLICY_CLASSES}, got {policy_class!r}"
    )


def pareto_filter(points: np.ndarray) -> np.ndarray:
    """Boolean mask of nondominated rows of an (n, 2) loss array.

    Minimization in both coordinates; a point is dominated if another is no
    worse in both and strictly better in one. Exact duplicates do not
    dominate each other, so all copies survive. Rows with NaN never survive.
    """
    pts = np.asarray(points, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2:
        raise errors.DimensionMismatch(
            f"expected an (n, 2) array, got shape {pts.shape}"
        )
    n = pts.shape[0]
    keep = np.zeros(n, dtype=bool)
    finite = np.isfinite(pts).all(axis=1)
    if not finite.any():
        return keep
    g = pts[:, 0]
    f = pts[:, 1]
    for i in np.flatnonzero(finite):
        le = (g <= g[i]) & (f <= f[i]) & finite
        strict = (g < g[i]) | (f < f[i])
        keep[i] = not (le & strict).any()
    return keep


def hypervolume(points: np.ndarray, reference: np.ndarray) -> float:
    """Area dominated by `points` up to `reference` (both losses minimized).

    Every point must be componentwise <= the reference; otherwise
    PointOutsideReference is raised.
    """
    pts = np.asarray(points, dtype=float)
    ref = np.asarray(reference, dtype=float)
    if pts.ndim != 2 or pts.shape[1] != 2 or ref.shape != (2,):
        raise errors.DimensionMismatch(
            f"expected (n, 2) points and (2,) reference, got {pts.shape} and"
            f" {ref.shape}"
        )
    if pts.shape[0] == 0:
        return 0.0
    if not np.isfinite(pts).all():
        raise errors.PointOutsideReference("points must be finite")
    if (pts > ref[None, :]).any():
        raise errors.PointOutsideReference(
            "every point must be componentwise <= the reference point"
        )
    order = np.lexsort((pts[:, 1], pts[:, 0]))
    area = 0.0
    prev_f = ref[1]
    for i in order:
        gi, fi = pts[i]
        if fi < prev_f:
            area += (ref[0] - gi) * (prev_f - fi)
            prev_f = fi
    return float(area)


def _vector_digest(vec: np.ndarray) -> str:
    payload = np.ascontiguousarray(vec, dtype=np.float64).tobytes()
    return hashlib.blake2b(payload, digest_size=16).hexdigest()


def _decode_city(raw, n_categories, n_boroughs, presence):
    """City policy from a raw vector, masking pairs absent from the trace.

    `presence` is a (K, B) boolean array; None means all pairs present.
    raw is borough-major like the policy vector layout.
    """
    vec = np.asarray(raw, dtype=float)
    if presence is not None:
        mask = np.asarray(presence, dtype=bool).T.ravel()
        vec = np.where(mask, vec, 0.0)
        if not (vec > 0).any():
            vec = np.where(mask, 1.0, 0.0)
        if not (vec > 0).any():  # trace has no arrivals anywhere
            vec = np.ones_like(vec)
    gps = normalize_weights(vec).reshape(n_boroughs, n_categories).T
    return CityBudgetPolicy(np.ascontiguousarray(gps), None)


def evaluate_policy_batch(
    vectors: np.ndarray,
    arrivals: ArrivalTrace,
    capacity: CapacityTrace,
    risk_ratings: np.ndarray,
    policy_class: str,
    metrics_config: MetricsConfig | None = None,
    sim_config: SimulationConfig | None = None,
    seeds_per_policy: int = 1,
    backend: str | None = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Losses of each policy vector on the given traces.

    Returns (efficiency, equity) arrays of length n. A policy whose
    evaluation raises a package error is marked NaN in both. Losses are
    averaged over `seeds_per_policy` simulation seeds, each derived from the
    master seed and the policy's own bytes.
    """
    metrics_config = metrics_config or MetricsConfig()
    sim_config = sim_config or SimulationConfig()
    K, B = arrivals.n_categories, arrivals.n_boroughs
    vecs = np.asarray(vectors, dtype=float)
    if vecs.ndim != 2 or vecs.shape[1] != policy_dimension(policy_class, K, B):
        raise errors.DimensionMismatch(
            f"expected (n, {policy_dimension(policy_class, K, B)}) vectors for"
            f" the {policy_class} class, got shape {vecs.shape}"
        )
    presence = arrivals.counts.sum(axis=0) > 0
    n = vecs.shape[0]
    g_out = np.full(n, np.nan)
    f_out = np.full(n, np.nan)
    for i in range(n):
        vec = vecs[i]
        digest = _vector_digest(vec)
        try:
            if policy_class == "borough":
                policy = borough_policy_from_vector(vec, K, B)
            else:
                base = _decode_city(vec, K, B, presence)
                target = derive_city_inspection_fractions(
                    arrivals, capacity, base.gps
                )
                policy = CityBudgetPolicy(base.gps, target)
            g_acc = 0.0
            f_acc = 0.0
            for rep in range(int(seeds_per_policy)):
                seed = derive_seed(sim_config.seed, "policy", digest, str(rep))
                cfg = replace(sim_config, seed=seed)
                if policy_class == "borough":
                    outcome = simulate_borough_policy(
                        arrivals, capacity, policy, cfg, backend=backend
                    )
                else:
                    outcome = simulate_city_policy(
                        arrivals, capacity, policy, cfg, backend=backend
                    )
                m = compute_losses(outcome, risk_ratings, metrics_config)
                g_acc += m.efficiency_loss
                f_acc += m.equity_loss
            g_out[i] = g_acc / seeds_per_policy
            f_out[i] = f_acc / seeds_per_policy
        except errors.SlaforgeError:
            continue
    return g_out, f_out


def _evolve_batch(rng, parents, batch_size, dim):
    """Children of the current front: crossover then Gaussian mutation."""
    out = np.empty((batch_size, dim))
    n_par = len(parents)
    for i in range(batch_size):
        a = parents[rng.integers(n_par)]
        if n_par > 1 and rng.random() < _CROSSOVER_PROB:
            b = parents[rng.integers(n_par)]
            mask = rng.random(dim) < 0.5
            child = np.where(mask, a, b)
        else:
            child = a.copy()
        child = child + rng.normal(0.0, _MUTATION_SCALE, dim)
        out[i] = np.clip(child, 0.0, 1.0)
    return out


def _sobol_batch(sampler, n):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UserWarning)
        return sampler.random(n)


def run_search(
    arrivals: ArrivalTrace,
    capacity: CapacityTrace,
    risk_ratings: np.ndarray,
    config: SearchConfig | None = None,
    metrics_config: MetricsConfig | None = None,
    sim_config: SimulationConfig | None = None,
    backend: str | None = None,
) -> ParetoFront:
    """Search the policy cube for the efficiency/equity Pareto front."""
    config = config or SearchConfig()
    metrics_config = metrics_config or MetricsConfig()
    sim_config = sim_config or SimulationConfig()
    K, B = arrivals.n_categories, arrivals.n_boroughs
    dim = policy_dimension(config.policy_class, K, B)
    master = config.seed
    sobol = qmc.Sobol(
        d=dim, scramble=True, seed=derive_seed(master, "sobol")
    )
    evo_rng = np.random.default_rng(derive_seed(master, "evolve"))
    eval_cfg = replace(sim_config, seed=derive_seed(master, "evaluate"))
    presence = arrivals.counts.sum(axis=0) > 0

    arch_vecs: list[np.ndarray] = []
    arch_pts = np.empty((0, 2))
    arch_digests: set[str] = set()
    reference = None
    history = []
    evaluations = 0

    for it in range(config.iterations):
        if config.sampler == "evolutionary" and it > 0 and arch_vecs:
            batch = _evolve_batch(evo_rng, arch_vecs, config.batch_size, dim)
        else:
            batch = _sobol_batch(sobol, config.batch_size)
        g, f = evaluate_policy_batch(
            batch,
            arrivals,
            capacity,
            risk_ratings,
            config.policy_class,
            metrics_config,
            eval_cfg,
            config.seeds_per_policy,
            backend=backend,
        )
        evaluations += config.batch_size * config.seeds_per_policy
        finite = np.isfinite(g) & np.isfinite(f)
        if reference is None:
            if not finite.any():
                raise errors.NoFeasiblePolicy(
                    "no policy in the first batch could be evaluated"
                )
            ref = 1.1 * np.array([g[finite].max(), f[finite].max()])
            ref[ref <= 0.0] = 1.0
            reference = ref
        # merge the batch into the archive, skipping exact re-evaluations
        for i in np.flatnonzero(finite):
            d = _vector_digest(batch[i])
            if d in arch_digests:
                continue
            arch_digests.add(d)
            arch_vecs.append(batch[i].copy())
            arch_pts = np.vstack([arch_pts, [g[i], f[i]]])
        keep = pareto_filter(arch_pts)
        arch_vecs = [v for v, k in zip(arch_vecs, keep) if k]
        arch_pts = arch_pts[keep]
        arch_digests = {_vector_digest(v) for v in arch_vecs}
        inside = (arch_pts <= reference[None, :]).all(axis=1)
        history.append(hypervolume(arch_pts[inside], reference))

    order = np.argsort(arch_pts[:, 0], kind="stable")
    entries = [
        FrontEntry(
            vector=arch_vecs[i],
            efficiency_loss=float(arch_pts[i, 0]),
            equity_loss=float(arch_pts[i, 1]),
        )
        for i in order
    ]
    return ParetoFront(
        policy_class=config.policy_class,
        n_categories=K,
        n_boroughs=B,
        entries=entries,
        reference_point=reference,
        hypervolume_history=np.asarray(history),
        evaluations=evaluations,
        city_presence=presence if config.policy_class == "city" else None,
    )


@dataclass(eq=False)
class OutOfSampleReport:
    """Front losses re-measured on held-out traces, with a uniform baseline.

    Ratios below 1 mean the front entry beats the uniform policy on the new
    traces; a NaN entry failed to evaluate there.
    """

    efficiency_loss: np.ndarray
    equity_loss: np.ndarray
    baseline_efficiency: float
    baseline_equity: float
    efficiency_ratio: np.ndarray
    equity_ratio: np.ndarray


def out_of_sample(
    front: ParetoFront,
    arrivals: ArrivalTrace,
    capacity: CapacityTrace,
    risk_ratings: np.ndarray,
    metrics_config: MetricsConfig | None = None,
    sim_config: SimulationConfig | None = None,
    backend: str | None = None,
) -> OutOfSampleReport:
    """Re-evaluate a front on new traces against the uniform policy."""
    sim_config = sim_config or SimulationConfig()
    dim = policy_dimension(
        front.policy_class, front.n_categories, front.n_boroughs
    )
    vecs = np.array([e.vector for e in front.entries]).reshape(-1, dim)
    base_vec = np.ones((1, dim))
    g, f = evaluate_policy_batch(
        vecs, arrivals, capacity, risk_ratings, front.policy_class,
        metrics_config, sim_config, backend=backend,
    )
    bg, bf = evaluate_policy_batch(
        base_vec, arrivals, capacity, risk_ratings, front.policy_class,
        metrics_config, sim_config, backend=backend,
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        g_ratio = g / bg[0]
        f_ratio = f / bf[0]
    return OutOfSampleReport(
        efficiency_loss=g,
        equity_loss=f,
        baseline_efficiency=float(bg[0]),
        baseline_equity=float(bf[0]),
        efficiency_ratio=g_ratio,
        equity_ratio=f_ratio,
    )
