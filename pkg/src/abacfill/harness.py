"""Evaluation harness: hide known cells, predict them back, score the result.

A removal run marks a seeded sample of eligible cells unknown (anything
known and applicable except ids), runs the full pipeline on the damaged
model against the reference entitlements of the intact one, and scores
each hidden cell.  A single-valued prediction must match exactly; a
multi-valued one counts as correct when it is a non-empty subset of the
true set (exact equality when subset scoring is off).  Unpredicted cells
lower coverage but not accuracy.
"""

from __future__ import annotations

import random
import time
from dataclasses import dataclass, field

from .clustering import ClusteringConfig, cluster_objects
from .features import FeatureConfig
from .model import MISSING, NULL, AttrKind, ConfigError, ObjectModel, Policy, Side
from .prediction import Confidence, PredictionConfig, predict_missing


def eligible_cells(om: ObjectModel) -> list:
    """Cells a removal run may hide: known, applicable, and not the id."""
    out = []
    for side in (Side.USER, Side.RESOURCE):
        table = om.side_objects(side)
        for oid in sorted(table):
            for attr in sorted(table[oid].attrs):
                if attr == "id":
                    continue
                v = table[oid].attrs[attr]
                if v is NULL or v is MISSING:
                    continue
                out.append((side, oid, attr))
    return out


# below this many eligible cells a rounded-to-zero plan is bumped to one
# cell, so tiny fixtures still exercise the pipeline; larger models keep
# the honest zero
DESK_SCALE_CELLS = 100


def removal_count(eligible: int, fraction: float) -> int:
    """Round half up, with a floor of one cell on desk-scale models."""
    if not 0.0 <= fraction <= 1.0:
        raise ConfigError(f"removal fraction must be in [0, 1]: {fraction}")
    count = int(eligible * fraction + 0.5)
    if count == 0 and 0 < eligible <= DESK_SCALE_CELLS:
        count = 1
    return min(count, eligible)


def remove_cells(om: ObjectModel, fraction: float, rng: random.Random) -> list:
    """Hide a seeded sample of eligible cells.  Returns (side, id, attr,
    original value) tuples; apply restore_cells to undo."""
    cells = eligible_cells(om)
    picked = rng.sample(cells, removal_count(len(cells), fraction))
    removed = []
    for side, oid, attr in picked:
        obj = om.side_objects(side)[oid]
        removed.append((side, oid, attr, obj.attrs[attr]))
        obj.attrs[attr] = MISSING
    return removed


def restore_cells(om: ObjectModel, removed) -> None:
    for side, oid, attr, value in removed:
        om.side_objects(side)[oid].attrs[attr] = value


def score_prediction(kind: AttrKind, predicted, truth, subset_ok: bool = True) -> bool:
    if kind is AttrKind.SINGLE:
        return predicted == truth
    if subset_ok:
        return bool(predicted) and predicted <= truth
    return predicted == truth


@dataclass
class CellOutcome:
    side: Side
    object_id: str
    attr: str
    truth: object
    predicted: object
    confidence: Confidence
    correct: object  # bool, or None when nothing was predicted


@dataclass
class RunResult:
    scale: int
    fraction: float
    run_index: int
    seed: int
    cells: list
    elapsed: float

    @property
    def removed(self) -> int:
        return len(self.cells)

    @property
    def predicted(self) -> int:
        return sum(1 for c in self.cells if c.correct is not None)

    @property
    def correct(self) -> int:
        return sum(1 for c in self.cells if c.correct)

    @property
    def coverage(self) -> float:
        return self.predicted / self.removed if self.removed else 1.0

    @property
    def accuracy(self) -> float:
        return self.correct / self.predicted if self.predicted else 1.0


@dataclass(frozen=True)
class HarnessConfig:
    # Removal experiments run with a lower grouping threshold than the
    # library default: desk-scale objects carry only a handful of
    # attributes, so a single hidden cell shifts mean similarity by
    # roughly 1/(2n) and a 0.25 cutoff would expel exactly the objects
    # under test from their groups.
    clustering: ClusteringConfig = field(
        default_factory=lambda: ClusteringConfig(threshold=0.1)
    )
    features: FeatureConfig = field(default_factory=FeatureConfig)
    prediction: PredictionConfig = field(default_factory=PredictionConfig)
    subset_ok: bool = True


def evaluate_run(
    policy: Policy,
    entitlements,
    fraction: float,
    seed: int,
    scale: int = 0,
    run_index: int = 0,
    config: HarnessConfig = None,
) -> RunResult:
    """One removal run on the policy's model.  The model is restored
    afterwards even if prediction fails."""
    config = config or HarnessConfig()
    om = policy.model
    rng = random.Random(seed)
    start = time.perf_counter()
    removed = remove_cells(om, fraction, rng)
    try:
        clustering = cluster_objects(om, config.clustering)
        predictions = predict_missing(
            om, clustering, entitlements, config.prediction, config.features
        )
        by_cell = {(p.side, p.object_id, p.attr): p for p in predictions}
        outcomes = []
        for side, oid, attr, truth in removed:
            p = by_cell[(side, oid, attr)]
            if p.predicted:
                kind = om.schema.kind(side, attr)
                ok = score_prediction(kind, p.value, truth, config.subset_ok)
            else:
                ok = None
            outcomes.append(CellOutcome(side, oid, attr, truth, p.value, p.confidence, ok))
    finally:
        restore_cells(om, removed)
    elapsed = time.perf_counter() - start
    return RunResult(scale, fraction, run_index, seed, outcomes, elapsed)


@dataclass
class MatrixResult:
    template: str
    runs: list

    def pooled(self, scale: int, fraction: float):
        """(coverage, accuracy) over all runs of one (scale, fraction)."""
        rows = [r for r in self.runs if r.scale == scale and abs(r.fraction - fraction) < 1e-12]
        removed = sum(r.removed for r in rows)
        predicted = sum(r.predicted for r in rows)
        correct = sum(r.correct for r in rows)
        coverage = predicted / removed if removed else 1.0
        accuracy = correct / predicted if predicted else 1.0
        return coverage, accuracy

    @property
    def scales(self):
        return sorted({r.scale for r in self.runs})

    @property
    def fractions(self):
        return sorted({r.fraction for r in self.runs})


def run_seed(base_seed: int, scale: int, fraction: float, run_index: int) -> int:
    """Stable per-run seed derivation."""
    return base_seed * 1_000_003 + scale * 10_007 + int(round(fraction * 1000)) * 101 + run_index


def evaluate_matrix(
    template: str,
    scales,
    fractions,
    runs: int,
    base_seed: int = 0,
    config: HarnessConfig = None,
    generate_policy=None,
    jobs: int = 1,
) -> MatrixResult:
    """Removal sweep over scales x fractions x run indices.

    generate_policy(scale) may be supplied to evaluate custom models; by
    default the named template is generated per scale with a seed derived
    from base_seed.  With jobs > 1 runs execute concurrently, each on a
    private copy of the model; results are merged in grid order either way.
    """
    from .generator import GeneratorConfig, generate

    if generate_policy is None:
        def generate_policy(scale):
            return generate(GeneratorConfig(template=template, scale=scale, seed=base_seed + scale))

    results = []
    for scale in scales:
        policy = generate_policy(scale)
        ents = _entitlements_of(policy)
        tasks = [
            (fraction, run_index, run_seed(base_seed, scale, fraction, run_index))
            for fraction in fractions
            for run_index in range(runs)
        ]
        if jobs > 1:
            from concurrent.futures import ThreadPoolExecutor

            from .policy_io import policy_from_dict, policy_to_dict

            doc = policy_to_dict(policy)

            def one(task):
                fraction, run_index, seed = task
                # private model: evaluate_run mutates cells in place
                own = policy_from_dict(doc)
                return evaluate_run(own, ents, fraction, seed, scale, run_index, config)

            with ThreadPoolExecutor(max_workers=jobs) as pool:
                results.extend(pool.map(one, tasks))
        else:
            for fraction, run_index, seed in tasks:
                results.append(
                    evaluate_run(policy, ents, fraction, seed, scale, run_index, config)
                )
    return MatrixResult(template=template, runs=results)


def _entitlements_of(policy: Policy):
    from .generator import reference_entitlements

    return reference_entitlements(policy)
