"""Three-stage coarse-to-fine search over SE(3).

Pipeline: optional full grid search over rotations (1-degree default
stride, translation held fixed), then two random-search stages with
shrinking angle perturbation sets. Each random-search iteration scores 216
candidates:

* rotations: all 6^3 combinations of the stage's angle set added to the
  current best Euler angles, arranged so candidate i >= 108 carries exactly
  the negated angle triple of candidate i - 108;
* translations: 108 uniform draws from [-B, B]^3, each shared by the
  mirrored candidate pair, always applied to the stage's *initial*
  translation rather than the running best (empirically more robust, and
  it keeps every candidate inside the declared translation box).

The best transform is replaced only on strict loss improvement; ties among
candidates go to the lowest index. Everything is driven by a single seeded
generator (the fine stage derives its stream from seed + 1), so identical
inputs reproduce bit-identical results.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import BadInputError
from .geometry import RigidTransform, euler_to_matrix, matrix_to_euler
from .objective import ObjectiveConfig, ObjectiveEvaluator

CANDIDATES_PER_ITERATION = 216
_HALF = CANDIDATES_PER_ITERATION // 2

COARSE_ANGLE_SET = (-0.5, -0.2, -0.1, 0.1, 0.2, 0.5)
FINE_ANGLE_SET = (-0.1, -0.04, -0.02, 0.02, 0.04, 0.1)


@dataclass(frozen=True)
class SearchConfig:
    """Knobs for the three stages; defaults follow the reference protocol."""

    grid_enabled: bool = True
    grid_range_deg: float = 15.0
    grid_stride_deg: float = 1.0
    trans_range_m: float = 0.2
    coarse_iters: int = 150
    fine_iters: int = 150
    coarse_angle_set: tuple = COARSE_ANGLE_SET
    fine_angle_set: tuple = FINE_ANGLE_SET
    seed: int = 0

    def __post_init__(self):
        for name in ("coarse_angle_set", "fine_angle_set"):
            _validate_angle_set(getattr(self, name), name)
        if self.grid_range_deg < 0 or self.grid_stride_deg <= 0 or self.trans_range_m < 0:
            raise BadInputError("search ranges must be nonnegative and stride positive")
        if self.coarse_iters < 0 or self.fine_iters < 0:
            raise BadInputError("iteration counts must be nonnegative")


def _validate_angle_set(angle_set, name: str) -> None:
    values = tuple(float(a) for a in angle_set)
    if len(values) != 6:
        raise BadInputError(f"{name} must hold exactly 6 angles")
    if set(values) != {-a for a in values}:
        raise BadInputError(f"{name} must be symmetric: for each angle its negation")


@dataclass
class TraceRecord:
    iteration: int
    best_loss: float
    euler_deg: tuple
    translation_m: tuple

    def to_dict(self) -> dict:
        return {
            "iteration": self.iteration,
            "best_loss": self.best_loss,
            "euler_deg": list(self.euler_deg),
            "translation_m": list(self.translation_m),
        }


@dataclass
class StageTrace:
    """One stage's outcome plus its per-iteration best-loss history."""

    name: str
    loss: float
    euler_deg: tuple
    translation_m: tuple
    n_evaluations: int
    records: list = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "loss": self.loss,
            "euler_deg": list(self.euler_deg),
            "translation_m": list(self.translation_m),
            "n_evaluations": self.n_evaluations,
            "records": [r.to_dict() for r in self.records],
        }


@dataclass
class SearchTrace:
    stages: list = field(default_factory=list)

    def stage(self, name: str) -> StageTrace:
        for s in self.stages:
            if s.name == name:
                return s
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {"stages": [s.to_dict() for s in self.stages]}


def rotation_combo_table(angle_set) -> np.ndarray:
    """All 216 angle-triple perturbations, mirrored at offset 108.

    The set is sorted ascending; the first 108 lexicographic combinations
    (those with a negative first component) are followed by their exact
    negations, so row i + 108 == -row i and the rows cover all 6^3
    combinations.
    """
    _validate_angle_set(angle_set, "angle_set")
    ordered = sorted(float(a) for a in angle_set)
    first = np.array(list(itertools.product(ordered, repeat=3))[:_HALF])
    return np.vstack([first, -first])


def draw_candidate_translations(rng: np.random.Generator, trans_range: float) -> np.ndarray:
    """216 translation perturbations: 108 uniform draws, each repeated once."""
    first = rng.uniform(-trans_range, trans_range, size=(_HALF, 3))
    return np.vstack([first, first])


def make_serial_batch_loss(evaluator: ObjectiveEvaluator):
    """Loss over candidate (euler, translation) rows, evaluated in order."""

    def batch(eulers: np.ndarray, translations: np.ndarray) -> np.ndarray:
        out = np.empty(len(eulers))
        for i in range(len(eulers)):
            out[i] = evaluator.evaluate(euler_to_matrix(eulers[i]), translations[i])
        return out

    return batch


def _grid_deltas(range_deg: float, stride_deg: float) -> np.ndarray:
    n = int(round(2.0 * range_deg / stride_deg)) + 1
    return -range_deg + stride_deg * np.arange(n)


def grid_search_core(batch_loss, start_euler, translation, range_deg, stride_deg):
    """Exhaustive rotation grid around start_euler with translation fixed.

    Candidates are scanned in lexicographic (d_roll, d_pitch, d_yaw) order;
    np.argmin keeps the first minimum, which realizes the tie rule.
    """
    deltas = _grid_deltas(range_deg, stride_deg)
    combos = np.array(list(itertools.product(deltas, repeat=3)))
    eulers = np.asarray(start_euler, dtype=float)[None, :] + combos
    translations = np.broadcast_to(np.asarray(translation, dtype=float), (len(combos), 3))
    losses = batch_loss(eulers, translations)
    best = int(np.argmin(losses))
    return eulers[best].copy(), float(losses[best]), len(combos)


def random_search_core(
    batch_loss,
    start_euler,
    start_translation,
    start_loss: float,
    anchor_translation,
    angle_set,
    trans_range: float,
    iters: int,
    seed: int,
):
    """One random-search stage; returns (euler, translation, loss, records, n_evals)."""
    combos = rotation_combo_table(angle_set)
    rng = np.random.default_rng(seed)
    best_euler = np.asarray(start_euler, dtype=float).copy()
    best_translation = np.asarray(start_translation, dtype=float).copy()
    best_loss = float(start_loss)
    anchor = np.asarray(anchor_translation, dtype=float)
    records = []
    for k in range(iters):
        eulers = best_euler[None, :] + combos
        translations = anchor[None, :] + draw_candidate_translations(rng, trans_range)
        losses = batch_loss(eulers, translations)
        i = int(np.argmin(losses))
        if losses[i] < best_loss:
            best_loss = float(losses[i])
            best_euler = eulers[i].copy()
            best_translation = translations[i].copy()
        records.append(
            TraceRecord(k, best_loss, tuple(best_euler), tuple(best_translation))
        )
    return best_euler, best_translation, best_loss, records, iters * CANDIDATES_PER_ITERATION


def grid_search_rotation(
    frames,
    initial: RigidTransform,
    search_cfg: SearchConfig,
    objective_cfg: ObjectiveConfig,
) -> RigidTransform:
    """Spec-level grid search: best rotation on the grid, translation kept."""
    evaluator = ObjectiveEvaluator(frames, objective_cfg)
    euler, _, _ = grid_search_core(
        make_serial_batch_loss(evaluator),
        initial.euler.as_array(),
        initial.translation,
        search_cfg.grid_range_deg,
        search_cfg.grid_stride_deg,
    )
    return RigidTransform.from_euler_translation(euler, initial.translation)


def random_search_stage(
    frames,
    initial: RigidTransform,
    start: RigidTransform,
    angle_set,
    trans_range: float,
    iters: int,
    seed: int,
    objective_cfg: ObjectiveConfig,
) -> tuple[RigidTransform, StageTrace]:
    """Spec-level single random-search stage.

    ``initial`` anchors the translation perturbations; ``start`` seeds the
    running best (they coincide in the standard pipeline).
    """
    evaluator = ObjectiveEvaluator(frames, objective_cfg)
    batch = make_serial_batch_loss(evaluator)
    start_euler = start.euler.as_array()
    start_loss = float(batch(start_euler[None, :], start.translation[None, :])[0])
    euler, translation, loss, records, n_evals = random_search_core(
        batch,
        start_euler,
        start.translation,
        start_loss,
        initial.translation,
        angle_set,
        trans_range,
        iters,
        seed,
    )
    trace = StageTrace("stage", loss, tuple(euler), tuple(translation), n_evals + 1, records)
    return RigidTransform.from_euler_translation(euler, translation), trace


def calibrate(
    frames,
    initial: RigidTransform,
    search_cfg: SearchConfig,
    objective_cfg: ObjectiveConfig,
    batch_loss=None,
) -> tuple[RigidTransform, SearchTrace]:
    """Full pipeline: T0 -> (grid) -> T1 -> coarse -> T2 -> fine -> T3.

    The trace carries S0..S3 snapshots (S1 == S0 when the grid is off).
    ``batch_loss`` may override the candidate scorer (used for parallel
    evaluation and test stubs); by default a serial evaluator over
    ``frames`` is built.
    """
    if batch_loss is None:
        batch_loss = make_serial_batch_loss(ObjectiveEvaluator(frames, objective_cfg))
    trace = SearchTrace()

    euler0 = initial.euler.as_array()
    t0 = initial.translation.copy()
    loss0 = float(batch_loss(euler0[None, :], t0[None, :])[0])
    trace.stages.append(StageTrace("S0", loss0, tuple(euler0), tuple(t0), 1))

    if search_cfg.grid_enabled:
        euler1, loss1, n_grid = grid_search_core(
            batch_loss, euler0, t0, search_cfg.grid_range_deg, search_cfg.grid_stride_deg
        )
    else:
        euler1, loss1, n_grid = euler0.copy(), loss0, 0
    trace.stages.append(StageTrace("S1", loss1, tuple(euler1), tuple(t0), n_grid))

    euler2, t2, loss2, rec2, n2 = random_search_core(
        batch_loss, euler1, t0, loss1, t0,
        search_cfg.coarse_angle_set, search_cfg.trans_range_m,
        search_cfg.coarse_iters, search_cfg.seed,
    )
    trace.stages.append(StageTrace("S2", loss2, tuple(euler2), tuple(t2), n2, rec2))

    euler3, t3, loss3, rec3, n3 = random_search_core(
        batch_loss, euler2, t2, loss2, t2,
        search_cfg.fine_angle_set, search_cfg.trans_range_m,
        search_cfg.fine_iters, search_cfg.seed + 1,
    )
    trace.stages.append(StageTrace("S3", loss3, tuple(euler3), tuple(t3), n3, rec3))

    return RigidTransform.from_euler_translation(euler3, t3), trace
