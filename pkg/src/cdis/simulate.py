"""Synthetic structural equation models with selection, and their samplers.

Observational rows are drawn from the model, kept only if every selection
score falls in its acceptance interval, and returned together with their
exogenous noise.  Interventional data replays the *same* noise rows through
the model with one mechanism changed, so rows stay paired with the selected
units they came from.
"""

from __future__ import annotations

import hashlib
import json
import math
import os
from collections.abc import Sequence
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .ci import Dataset, default_alpha
from .errors import DataError, InvalidArgument, SelectionTooStrict
from .graph import DagWithSelection, descendants, topological_order
from .twin import TargetCollection

__all__ = [
    "ExperimentConfig",
    "SelectionSpec",
    "Mechanism",
    "ScmInstance",
    "generate_scm",
    "sample_observational",
    "sample_interventional",
    "simulate_dataset",
    "pest_scm",
    "MIN_ACCEPTANCE",
]

MIN_ACCEPTANCE = 1e-4


@dataclass(frozen=True)
class ExperimentConfig:
    """Parameters of one synthetic run; ``None`` fields take size-dependent defaults."""

    d: int
    seed: int = 0
    n_selected: int = 5000
    num_interventions: int | None = None
    num_selections: int | None = None
    selection_parent_count: tuple[int, int] = (1, 2)
    alpha: float | None = None
    intervention_shift: tuple[float, float] = (4.0, 1.0)
    mechanism: str = "shift"
    scale_factor: float = 0.0
    acceptance_rate: float = 0.5
    pilot_rows: int = 100_000
    edge_probability: float | None = None
    coefficient_range: tuple[float, float] = (0.5, 2.0)
    noise_variance_range: tuple[float, float] = (1.0, 4.0)

    def __post_init__(self):
        for name in ("selection_parent_count", "intervention_shift", "coefficient_range",
                     "noise_variance_range"):
            object.__setattr__(self, name, tuple(getattr(self, name)))
        if self.d < 2:
            raise InvalidArgument("d must be at least 2")
        if self.n_selected < 1:
            raise InvalidArgument("n_selected must be positive")
        if not 0.0 < self.acceptance_rate <= 1.0:
            raise InvalidArgument("acceptance_rate must lie in (0, 1]")
        if self.mechanism not in ("shift", "scale"):
            raise InvalidArgument(f"unknown mechanism {self.mechanism!r}")
        lo, hi = self.selection_parent_count
        if not 1 <= lo <= hi:
            raise InvalidArgument("selection_parent_count must satisfy 1 <= low <= high")

    @property
    def interventions(self) -> int:
        return self.d // 2 if self.num_interventions is None else self.num_interventions

    @property
    def selections(self) -> int:
        return self.d // 5 if self.num_selections is None else self.num_selections

    @property
    def effective_alpha(self) -> float:
        return default_alpha(self.d) if self.alpha is None else self.alpha

    @property
    def effective_edge_probability(self) -> float:
        return 2.0 / (self.d - 1) if self.edge_probability is None else self.edge_probability

    def to_json(self) -> dict:
        out = asdict(self)
        for k, v in out.items():
            if isinstance(v, tuple):
                out[k] = list(v)
        return out

    @classmethod
    def from_json(cls, obj: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(obj) - known
        if unknown:
            raise InvalidArgument(f"unknown config keys: {sorted(unknown)}")
        if "d" not in obj:
            raise InvalidArgument("config needs 'd'")
        return cls(**obj)

    def dumps(self) -> str:
        return json.dumps(self.to_json(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ExperimentConfig":
        try:
            obj = json.loads(Path(path).read_text())
        except json.JSONDecodeError as exc:
            raise DataError(f"{path}: line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
        return cls.from_json(obj)

    def config_hash(self) -> str:
        canon = json.dumps(self.to_json(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class SelectionSpec:
    """Unit kept iff ``low <= weights . X[parents] + noise < high``."""

    parents: tuple[int, ...]
    weights: tuple[float, ...]
    noise_std: float
    low: float = -math.inf
    high: float = math.inf


@dataclass(frozen=True)
class Mechanism:
    """How an intervention changes its target's equation.

    ``shift``: add a per-row draw from Normal(mean, var).  ``scale``: multiply
    the target's incoming coefficients by ``factor``.
    """

    kind: str = "shift"
    mean: float = 4.0
    var: float = 1.0
    factor: float = 0.0

    def __post_init__(self):
        if self.kind not in ("shift", "scale"):
            raise InvalidArgument(f"unknown mechanism {self.kind!r}")
        if self.var < 0:
            raise InvalidArgument("shift variance must be non-negative")

    @classmethod
    def from_config(cls, cfg: ExperimentConfig) -> "Mechanism":
        mean, var = cfg.intervention_shift
        return cls(cfg.mechanism, float(mean), float(var), float(cfg.scale_factor))


_LINKS = {
    "identity": lambda v: v,
    "sigmoid": lambda v: 1.0 / (1.0 + np.exp(-v)),
}


@dataclass(frozen=True, eq=False)
class ScmInstance:
    dag: DagWithSelection
    coefficients: dict[tuple[int, int], float]
    noise_variances: tuple[float, ...]
    selection_specs: tuple[SelectionSpec, ...]
    noise: str = "gaussian"
    links: tuple[str, ...] | None = None
    interventions: tuple[int, ...] = ()
    order: tuple[int, ...] = field(default=())

    def __post_init__(self):
        d = self.dag.d
        if len(self.noise_variances) != d:
            raise InvalidArgument("one noise variance per observed vertex required")
        if len(self.selection_specs) != self.dag.t:
            raise InvalidArgument("one selection spec per selection vertex required")
        if self.noise not in ("gaussian", "uniform"):
            raise InvalidArgument(f"unknown noise family {self.noise!r}")
        if self.links is not None and (len(self.links) != d or any(l not in _LINKS for l in self.links)):
            raise InvalidArgument("links must name one known link per observed vertex")
        for a, b in self.dag.observed_subgraph_edges():
            if (a, b) not in self.coefficients:
                raise InvalidArgument(f"missing coefficient for edge {a}->{b}")
        if not self.order:
            object.__setattr__(self, "order", tuple(v for v in topological_order(self.dag) if v < d))

    @property
    def d(self) -> int:
        return self.dag.d

    def targets(self) -> TargetCollection:
        return TargetCollection.of(*[{t} for t in self.interventions])

    def draw_noise(self, rng: np.random.Generator, n: int) -> np.ndarray:
        sd = np.sqrt(np.asarray(self.noise_variances, dtype=float))
        if self.noise == "gaussian":
            return rng.standard_normal((n, self.d)) * sd
        half = np.sqrt(3.0) * sd  # uniform on [-h, h] has variance h^2 / 3
        return rng.uniform(-1.0, 1.0, (n, self.d)) * half

    def forward(self, eps: np.ndarray, target: int | None = None, mechanism: Mechanism | None = None,
                shift: np.ndarray | None = None) -> np.ndarray:
        """Evaluate the equations in causal order for the given noise rows."""
        x = np.empty_like(eps)
        parents = self.dag.parents
        for v in self.order:
            acc = eps[:, v].copy()
            scale = 1.0
            if v == target and mechanism is not None and mechanism.kind == "scale":
                scale = mechanism.factor
            for p in parents[v]:
                acc += (scale * self.coefficients[(p, v)]) * x[:, p]
            if self.links is not None and self.links[v] != "identity":
                acc = _LINKS[self.links[v]](acc)
            if v == target and shift is not None:
                acc = acc + shift
            x[:, v] = acc
        return x

    def selection_scores(self, x: np.ndarray, rng: np.random.Generator | None) -> np.ndarray:
        n = x.shape[0]
        out = np.empty((n, len(self.selection_specs)))
        for j, spec in enumerate(self.selection_specs):
            s = x[:, list(spec.parents)] @ np.asarray(spec.weights, dtype=float)
            if spec.noise_std > 0 and rng is not None:
                s = s + rng.standard_normal(n) * spec.noise_std
            out[:, j] = s
        return out

    def accepted(self, scores: np.ndarray) -> np.ndarray:
        keep = np.ones(scores.shape[0], dtype=bool)
        for j, spec in enumerate(self.selection_specs):
            keep &= (scores[:, j] >= spec.low) & (scores[:, j] < spec.high)
        return keep

    def to_json(self) -> dict:
        return {
            "graph": self.dag.to_json(),
            "coefficients": [[a, b, c] for (a, b), c in sorted(self.coefficients.items())],
            "noise_variances": list(self.noise_variances),
            "selection_specs": [{**asdict(s), "parents": list(s.parents), "weights": list(s.weights),
                                 "low": _num(s.low), "high": _num(s.high)} for s in self.selection_specs],
            "noise": self.noise,
            "links": list(self.links) if self.links is not None else None,
            "interventions": list(self.interventions),
        }


def _num(x: float):
    return x if math.isfinite(x) else ("inf" if x > 0 else "-inf")


def _signed_uniform(rng: np.random.Generator, lo: float, hi: float) -> float:
    mag = rng.uniform(lo, hi)
    return float(mag if rng.random() < 0.5 else -mag)


def generate_scm(config: ExperimentConfig) -> ScmInstance:
    """Random linear-Gaussian model following the configured protocol.

    Edges come from an undirected Erdos-Renyi graph oriented along a random
    permutation; selection vertices draw 1-2 parents from the earliest
    ``d - d//2`` vertices of that order; interventions pick distinct
    single variables.
    """
    d = config.d
    rng = np.random.default_rng([config.seed, 0])
    perm = [int(v) for v in rng.permutation(d)]
    p = config.effective_edge_probability
    edges = []
    for a in range(d):
        for b in range(a + 1, d):
            if rng.random() < p:
                edges.append((perm[a], perm[b]))
    eligible = perm[: d - d // 2]
    lo, hi = config.selection_parent_count
    sel_parents = []
    for _ in range(config.selections):
        k = int(rng.integers(lo, hi + 1))
        k = min(k, len(eligible))
        sel_parents.append(tuple(sorted(int(v) for v in rng.choice(eligible, size=k, replace=False))))
    dag = DagWithSelection.from_parents(d, edges, sel_parents)

    clo, chi = config.coefficient_range
    vlo, vhi = config.noise_variance_range
    coefficients = {e: _signed_uniform(rng, clo, chi) for e in sorted(edges)}
    variances = tuple(float(rng.uniform(vlo, vhi)) for _ in range(d))
    raw_specs = []
    for ps in sel_parents:
        weights = tuple(_signed_uniform(rng, clo, chi) for _ in ps)
        raw_specs.append(SelectionSpec(ps, weights, float(math.sqrt(rng.uniform(vlo, vhi)))))
    n_int = min(config.interventions, d)
    interventions = tuple(sorted(int(v) for v in rng.choice(d, size=n_int, replace=False)))

    scm = ScmInstance(dag, coefficients, variances, tuple(raw_specs), interventions=interventions)
    if raw_specs:
        scm = _calibrate(scm, config.acceptance_rate, config.pilot_rows,
                         np.random.default_rng([config.seed, 1]))
    return scm


def _calibrate(scm: ScmInstance, rate: float, rows: int, rng: np.random.Generator) -> ScmInstance:
    """Set each selection interval to the top ``rate`` quantile of its score on a pilot sample."""
    x = scm.forward(scm.draw_noise(rng, rows))
    scores = scm.selection_scores(x, rng)
    specs = []
    for j, spec in enumerate(scm.selection_specs):
        low = -math.inf if rate >= 1.0 else float(np.quantile(scores[:, j], 1.0 - rate))
        specs.append(SelectionSpec(spec.parents, spec.weights, spec.noise_std, low, math.inf))
    return ScmInstance(scm.dag, scm.coefficients, scm.noise_variances, tuple(specs), scm.noise,
                       scm.links, scm.interventions, scm.order)


def sample_observational(scm: ScmInstance, n_selected: int, seed: int | Sequence[int],
                         ) -> tuple[np.ndarray, np.ndarray]:
    """Draw units until ``n_selected`` pass selection.

    Returns ``(data, noise)``: the retained rows and the exogenous noise
    that produced them.
    """
    if n_selected < 1:
        raise InvalidArgument("n_selected must be positive")
    rng = np.random.default_rng(seed)
    kept_x, kept_e = [], []
    have = 0
    drawn = 0
    per_sel = np.zeros(len(scm.selection_specs))
    batch = max(2 * n_selected, 10_000)
    while have < n_selected:
        eps = scm.draw_noise(rng, batch)
        x = scm.forward(eps)
        if scm.selection_specs:
            scores = scm.selection_scores(x, rng)
            keep = scm.accepted(scores)
            for j, spec in enumerate(scm.selection_specs):
                per_sel[j] += np.count_nonzero((scores[:, j] >= spec.low) & (scores[:, j] < spec.high))
        else:
            keep = np.ones(batch, dtype=bool)
        drawn += batch
        kept_x.append(x[keep])
        kept_e.append(eps[keep])
        have += int(keep.sum())
        if drawn >= 100_000 and have / drawn < MIN_ACCEPTANCE:
            worst = int(np.argmin(per_sel))
            raise SelectionTooStrict(
                f"acceptance rate {have / drawn:.2e} below {MIN_ACCEPTANCE:g}; "
                f"selection S{worst + 1} accepts {per_sel[worst] / drawn:.2e} of units",
                selection_index=worst)
    x = np.vstack(kept_x)[:n_selected]
    e = np.vstack(kept_e)[:n_selected]
    return x, e


def sample_interventional(scm: ScmInstance, retained_noise: np.ndarray, target: int,
                          mechanism: Mechanism | None = None, seed: int | Sequence[int] = 0) -> np.ndarray:
    """Replay the retained noise with ``target``'s mechanism changed."""
    if not 0 <= target < scm.dag.n:
        raise InvalidArgument(f"unknown target {target}")
    if target >= scm.d:
        raise InvalidArgument(f"target {target} is a selection vertex")
    mechanism = mechanism or Mechanism()
    rng = np.random.default_rng(seed)
    shift = None
    if mechanism.kind == "shift" and (mechanism.mean != 0.0 or mechanism.var != 0.0):
        shift = mechanism.mean + math.sqrt(mechanism.var) * rng.standard_normal(retained_noise.shape[0])
    return scm.forward(retained_noise, target, mechanism, shift)


def simulate_dataset(config: ExperimentConfig, scm: ScmInstance | None = None
                     ) -> tuple[ScmInstance, Dataset]:
    """Generate (or reuse) a model and sample every configured setting."""
    scm = scm or generate_scm(config)
    x0, eps = sample_observational(scm, config.n_selected, [config.seed, 2])
    mech = Mechanism.from_config(config)
    settings = [x0]
    for k, t in enumerate(scm.interventions, start=1):
        settings.append(sample_interventional(scm, eps, t, mech, [config.seed, 3, k]))
    names = tuple(f"X{i + 1}" for i in range(scm.d))
    targets = (frozenset(),) + tuple(frozenset({t}) for t in scm.interventions)
    return scm, Dataset(tuple(settings), names, targets)


def pest_scm() -> ScmInstance:
    """Three-variable chain with a thresholded selection on the last variable.

    ``X1 = E1``, ``X2 = sigmoid(X1 + E2)``, ``X3 = sigmoid(-2 X2 + E3)``,
    ``E ~ U[-1, 1]``, units kept iff ``X3 > 0.4``; the intervention shifts
    ``X1``.
    """
    dag = DagWithSelection(3, 1, [(0, 1), (1, 2), (2, 3)])
    return ScmInstance(
        dag,
        {(0, 1): 1.0, (1, 2): -2.0},
        (1.0 / 3.0,) * 3,
        (SelectionSpec((2,), (1.0,), 0.0, low=math.nextafter(0.4, math.inf)),),
        noise="uniform",
        links=("identity", "sigmoid", "sigmoid"),
        interventions=(0,),
    )


def affected_columns(scm: ScmInstance, target: int) -> frozenset[int]:
    return frozenset(v for v in descendants(scm.dag, target) if v < scm.d)
