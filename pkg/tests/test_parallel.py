"""Worker-count independence of candidate scoring."""

import numpy as np

from lcalign import ObjectiveConfig, SearchConfig, SyntheticSceneSpec, calibrate
from lcalign.objective import ObjectiveEvaluator
from lcalign.parallel import ParallelBatchLoss
from lcalign.search import make_serial_batch_loss
from lcalign.synthetic import generate_synthetic_scene


def test_parallel_equals_serial_bitwise():
    scene = generate_synthetic_scene(SyntheticSceneSpec(seed=4))
    cfg = ObjectiveConfig(patch_size=40)
    evaluator = ObjectiveEvaluator([scene.packet], cfg)
    rng = np.random.default_rng(0)
    eulers = np.array([90.0, 0.0, 90.0]) + rng.uniform(-5, 5, (40, 3))
    translations = rng.uniform(-0.2, 0.2, (40, 3))
    serial = make_serial_batch_loss(evaluator)(eulers, translations)
    with ParallelBatchLoss(evaluator, workers=2) as parallel:
        par = parallel(eulers, translations)
    np.testing.assert_array_equal(serial, par)


def test_calibrate_result_independent_of_workers():
    scene = generate_synthetic_scene(SyntheticSceneSpec(seed=4))
    ocfg = ObjectiveConfig(patch_size=40)
    scfg = SearchConfig(grid_enabled=False, coarse_iters=4, fine_iters=4, seed=9)
    init_euler = scene.truth.euler.as_array() + 1.0
    from lcalign import RigidTransform

    init = RigidTransform.from_euler_translation(init_euler, scene.truth.translation)
    serial_result, _ = calibrate([scene.packet], init, scfg, ocfg)
    evaluator = ObjectiveEvaluator([scene.packet], ocfg)
    with ParallelBatchLoss(evaluator, workers=2) as batch:
        parallel_result, _ = calibrate([scene.packet], init, scfg, ocfg, batch_loss=batch)
    np.testing.assert_array_equal(serial_result.as_matrix(), parallel_result.as_matrix())
