"""Objective tests: composition, sentinels, caching, multi-frame mean."""

import numpy as np
import pytest

from lcalign import (
    BadInputError,
    CameraIntrinsics,
    DenseImage,
    FramePacket,
    ObjectiveConfig,
    ObjectiveEvaluator,
    PatchGridSpec,
    PointCloud,
    RigidTransform,
    evaluate,
    generate_synthetic_scene,
    nid,
    project_points,
    rasterize,
    structure_loss,
    SyntheticSceneSpec,
)


def self_consistent_packet(seed=0, w=64, h=48):
    """Frame whose LDP subsamples MI and LIP subsamples GI exactly.

    Points are placed on camera pixel rays with depth/intensity read off the
    dense images, so the losses at identity must vanish.
    """
    rng = np.random.default_rng(seed)
    intr = CameraIntrinsics(60.0, 60.0, (w - 1) / 2, (h - 1) / 2, w, h)
    # smooth dense fields with unique-ish values
    vs, us = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    mi = 0.2 + 0.6 * (0.3 * us / w + 0.7 * vs / h) + 0.05 * np.sin(us / 3.0)
    mi = (mi - mi.min()) / (mi.max() - mi.min()) * 0.9 + 0.05
    gi = np.roll(mi, 7, axis=1)  # different but equally smooth signal
    pick = rng.choice(w * h, size=w * h // 2, replace=False)
    pu = pick % w
    pv = pick // w
    inv = mi.reshape(-1)[pick]          # treat MI as exact inverse depth
    z = 1.0 / (inv * 2.0 + 0.5)          # positive affine keeps SPCC at 1
    xyz = np.stack([(pu - intr.cx) / intr.fx * z, (pv - intr.cy) / intr.fy * z, z], axis=1)
    intensity = gi.reshape(-1)[pick]     # LIP equals GI at sampled pixels
    cloud = PointCloud(xyz, intensity)
    return FramePacket(
        gi=DenseImage(gi), mi=DenseImage(mi), cloud=cloud, intrinsics=intr
    )


class TestEvaluate:
    def test_self_consistent_frame_zero_loss(self):
        packet = self_consistent_packet()
        cfg = ObjectiveConfig(patch_size=16, min_patch_points=10)
        total, breakdown = evaluate([packet], RigidTransform.identity(), cfg)
        b = breakdown[0]
        assert b.structure_a == pytest.approx(0.0, abs=1e-9)
        assert b.structure_b == pytest.approx(0.0, abs=1e-9)
        assert b.texture == pytest.approx(0.0, abs=1e-9)
        assert total == pytest.approx(0.0, abs=1e-9)

    def test_no_projected_points_sentinel(self):
        packet = self_consistent_packet()
        cfg = ObjectiveConfig(patch_size=16, min_patch_points=10)
        away = RigidTransform.from_euler_translation((0, 180, 0), (0, 0, -100))
        total, breakdown = evaluate([packet], away, cfg)
        b = breakdown[0]
        assert (b.structure_a, b.structure_b, b.texture) == (2.0, 2.0, 1.0)
        assert total == pytest.approx(cfg.lambda1 * 4.0 + cfg.lambda2 * 1.0)

    def test_multi_frame_mean(self):
        packets = [self_consistent_packet(seed=s) for s in range(4)]
        t = RigidTransform.from_euler_translation((1.0, -0.5, 0.5), (0.02, 0, 0.01))
        cfg = ObjectiveConfig(patch_size=16, min_patch_points=10)
        singles = [evaluate([p], t, cfg)[0] for p in packets]
        total, breakdown = evaluate(packets, t, cfg)
        assert len(breakdown) == 4
        assert total == pytest.approx(np.mean(singles), abs=1e-12)

    def test_decomposition_exact(self):
        scene = generate_synthetic_scene(SyntheticSceneSpec(seed=3))
        cfg = ObjectiveConfig(patch_size=40)
        total, bd = evaluate([scene.packet], scene.truth, cfg)
        b = bd[0]
        assert b.total == cfg.lambda1 * (b.structure_a + b.structure_b) + cfg.lambda2 * b.texture
        assert total == b.total

    def test_matches_public_loss_path(self):
        # the cached evaluator and the module-level ops must agree exactly
        scene = generate_synthetic_scene(SyntheticSceneSpec(seed=1))
        packet = scene.packet
        cfg = ObjectiveConfig(patch_size=40)
        t = RigidTransform.from_euler_translation(
            scene.truth.euler.as_array() + [0.5, -1.0, 2.0], scene.truth.translation + 0.05
        )
        _, bd = evaluate([packet], t, cfg)
        proj = project_points(packet.cloud, t, packet.intrinsics)
        ldp, lip = rasterize(proj, packet.intrinsics.width, packet.intrinsics.height)
        g1, g2 = cfg.grids()
        s_a, nv_a = structure_loss(packet.mi, ldp, g1)
        s_b, nv_b = structure_loss(packet.mi, ldp, g2)
        tex = nid(packet.gi, lip, cfg.histogram_bins)
        assert bd[0].structure_a == s_a and bd[0].n_valid_a == nv_a
        assert bd[0].structure_b == s_b and bd[0].n_valid_b == nv_b
        assert bd[0].texture == tex

    def test_determinism_bit_identical(self):
        scene = generate_synthetic_scene(SyntheticSceneSpec(seed=2))
        cfg = ObjectiveConfig(patch_size=40)
        ev = ObjectiveEvaluator([scene.packet], cfg)
        r, t = scene.truth.rotation, scene.truth.translation
        assert ev.evaluate(r, t) == ev.evaluate(r, t)
        assert ev.evaluate(r, t) == evaluate([scene.packet], scene.truth, cfg)[0]

    def test_ablation_flags_zero_terms(self):
        scene = generate_synthetic_scene(SyntheticSceneSpec(seed=4))
        t = scene.truth
        structure_only = ObjectiveConfig(patch_size=40, use_texture=False)
        total_s, bd_s = evaluate([scene.packet], t, structure_only)
        assert bd_s[0].texture == 0.0
        assert total_s == pytest.approx(
            structure_only.lambda1 * (bd_s[0].structure_a + bd_s[0].structure_b)
        )
        texture_only = ObjectiveConfig(patch_size=40, use_structure=False)
        total_t, bd_t = evaluate([scene.packet], t, texture_only)
        assert bd_t[0].structure_a == 0.0 and bd_t[0].structure_b == 0.0
        assert total_t == pytest.approx(texture_only.lambda2 * bd_t[0].texture)

    def test_empty_frame_list_raises(self):
        with pytest.raises(BadInputError):
            evaluate([], RigidTransform.identity(), ObjectiveConfig())

    def test_config_rejects_all_dead_terms(self):
        with pytest.raises(BadInputError):
            ObjectiveConfig(use_structure=False, use_texture=False)
        with pytest.raises(BadInputError):
            ObjectiveConfig(lambda1=0.0, use_texture=False)

    def test_second_grid_origin_floor_of_half(self):
        cfg = ObjectiveConfig(patch_size=33)
        g1, g2 = cfg.grids()
        assert (g1.u0, g1.v0) == (0, 0)
        assert (g2.u0, g2.v0) == (16, 16)


class TestFramePacket:
    def test_dimension_mismatch_rejected(self):
        intr = CameraIntrinsics(50, 50, 16, 12, 32, 24)
        good = DenseImage(np.full((24, 32), 0.5))
        bad = DenseImage(np.full((24, 33), 0.5))
        cloud = PointCloud(np.zeros((1, 3)), np.array([0.5]))
        with pytest.raises(Exception):
            FramePacket(gi=good, mi=bad, cloud=cloud, intrinsics=intr)
