"""Secondary-component acceptance: emitted files match the consumer contract."""

import numpy as np
import pytest
from PIL import Image

from monodepth_prep import PrepJob, normalize_to_u16, prep
from monodepth_prep.cli import main


@pytest.fixture
def sample_images(tmp_path):
    rng = np.random.default_rng(0)
    paths = []
    for i, size in enumerate([(40, 30), (64, 48), (32, 32)]):
        w, h = size
        img = rng.integers(0, 255, (h, w, 3), dtype=np.uint8)
        p = tmp_path / f"img{i}.png"
        Image.fromarray(img).save(p)
        paths.append(p)
    return paths


class TestPrep:
    def test_three_images_accepted_by_primary_loader(self, sample_images, tmp_path):
        out = tmp_path / "depth"
        summary = prep(PrepJob(inputs=tuple(sample_images), output_dir=out, model="luma"))
        assert len(summary.written) == 3 and not summary.failed

        lcalign_raster = pytest.importorskip(
            "lcalign.raster", reason="primary package not installed"
        )
        for src in sample_images:
            dst = out / (src.stem + ".png")
            src_img = Image.open(src)
            loaded = lcalign_raster.load_monodepth(dst, expected_size=src_img.size)
            # full-range min-max contract
            assert loaded.values.min() == 0.0
            assert loaded.values.max() == 1.0

    def test_output_is_16bit_single_channel_same_size(self, sample_images, tmp_path):
        out = tmp_path / "depth"
        prep(PrepJob(inputs=tuple(sample_images), output_dir=out, model="luma"))
        for src in sample_images:
            img = Image.open(out / (src.stem + ".png"))
            arr = np.asarray(img)
            assert arr.dtype in (np.uint16, np.int32)
            assert arr.ndim == 2
            assert img.size == Image.open(src).size
            assert arr.max() == 65535 and arr.min() == 0

    def test_constant_image_degenerate_case(self, tmp_path):
        p = tmp_path / "flat.png"
        Image.fromarray(np.full((24, 32, 3), 128, dtype=np.uint8)).save(p)
        summary = prep(PrepJob(inputs=(p,), output_dir=tmp_path / "d", model="luma"))
        assert len(summary.written) == 1 and not summary.failed
        arr = np.asarray(Image.open(tmp_path / "d" / "flat.png"))
        assert np.unique(arr).tolist() == [0]  # range guard, no division by zero

    def test_failures_collected_without_aborting(self, sample_images, tmp_path):
        inputs = (sample_images[0], tmp_path / "missing.png", sample_images[1])
        summary = prep(PrepJob(inputs=inputs, output_dir=tmp_path / "d", model="luma"))
        assert len(summary.written) == 2
        assert len(summary.failed) == 1
        assert "missing.png" in summary.failed[0][0]

    def test_normalize_full_range(self):
        arr = normalize_to_u16(np.array([[1.0, 3.0], [2.0, 5.0]]))
        assert arr.min() == 0 and arr.max() == 65535

    def test_unknown_model_rejected(self, sample_images, tmp_path):
        with pytest.raises(ValueError, match="unknown model"):
            prep(PrepJob(inputs=tuple(sample_images), output_dir=tmp_path, model="nope"))


class TestCli:
    def test_glob_and_summary(self, sample_images, tmp_path, capsys):
        pattern = str(sample_images[0].parent / "img*.png")
        code = main([pattern, "--out", str(tmp_path / "d"), "--model", "luma"])
        assert code == 0
        out = capsys.readouterr().out
        assert "3 written, 0 failed" in out
        assert "raw range" in out

    def test_exit_nonzero_on_failures(self, tmp_path, capsys):
        code = main([str(tmp_path / "absent.png"), "--out", str(tmp_path / "d"),
                     "--model", "luma"])
        assert code == 1
