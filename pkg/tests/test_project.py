import json

import numpy as np
import pytest

from texweave.pipeline import MASK_NAMES, ParameterMaskSet, PipelineConfig
from texweave.project import (
    FormatError,
    Project,
    load_image,
    load_mask_container,
    load_project,
    save_image,
    save_mask_container,
    save_project,
)
from texweave.slic import slic_segment
from texweave.tensor import InvalidArgument


def _random_masks(rng, h=12, w=10):
    masks = ParameterMaskSet.initialize(h, w)
    for n in MASK_NAMES:
        masks.latents[n] = rng.normal(size=(h, w)).astype(np.float32)
    return masks


def _small_project(rng, tmp_path):
    image = rng.random((24, 24, 3)).astype(np.float32)
    save_image(image, tmp_path / "src.png")
    image = load_image(tmp_path / "src.png")   # settle 8-bit quantization
    seg = slic_segment(image, 4)
    masks = ParameterMaskSet.initialize(24, 24)
    return Project(image=image, config=PipelineConfig(), base_seg=seg,
                   base_masks=masks, seg_params={"s": 4, "m": 10.0},
                   root=tmp_path / "proj")


def test_container_round_trip_bit_identical(rng, tmp_path):
    masks = _random_masks(rng)
    path = tmp_path / "m.twv"
    save_mask_container(masks, path)
    back = load_mask_container(path)
    for n in MASK_NAMES:
        assert np.array_equal(back.latents[n], masks.latents[n])
        assert back.latents[n].dtype == np.float32
    # a second save of the loaded set produces identical bytes
    save_mask_container(back, tmp_path / "m2.twv")
    assert (tmp_path / "m2.twv").read_bytes() == path.read_bytes()


def test_container_magic_and_version_checks(rng, tmp_path):
    masks = _random_masks(rng)
    path = tmp_path / "m.twv"
    save_mask_container(masks, path)
    raw = bytearray(path.read_bytes())

    bad = tmp_path / "bad.twv"
    bad.write_bytes(b"JUNK" + raw[4:])
    with pytest.raises(FormatError, match="magic"):
        load_mask_container(bad)

    raw2 = bytearray(raw)
    raw2[4] = 99
    bad.write_bytes(bytes(raw2))
    with pytest.raises(FormatError, match="version"):
        load_mask_container(bad)


def test_container_truncation_reports_offset_and_plane(rng, tmp_path):
    masks = _random_masks(rng)
    path = tmp_path / "m.twv"
    save_mask_container(masks, path)
    raw = path.read_bytes()
    bad = tmp_path / "bad.twv"

    bad.write_bytes(raw[:10])
    with pytest.raises(FormatError) as exc:
        load_mask_container(bad)
    assert exc.value.offset == 4

    bad.write_bytes(raw[:-3])
    with pytest.raises(FormatError, match=r"plane 7 \(contrast\)"):
        load_mask_container(bad)

    bad.write_bytes(raw + b"\x00")
    with pytest.raises(FormatError, match="trailing"):
        load_mask_container(bad)


def test_image_round_trip_is_8bit_exact(rng, tmp_path):
    img = rng.random((9, 11, 3))
    save_image(img, tmp_path / "a.png")
    back = load_image(tmp_path / "a.png")
    assert np.max(np.abs(back - img)) <= 0.5 / 255.0 + 1e-7
    save_image(back, tmp_path / "b.png")
    assert np.array_equal(load_image(tmp_path / "b.png"), back)


def test_save_load_project_round_trip(rng, tmp_path):
    project = _small_project(rng, tmp_path)
    project.apply_edit({"op": "global", "mask": "contrast", "factor": 1.3})
    root = tmp_path / "proj"
    save_project(project, root)

    manifest = json.loads((root / "manifest.json").read_text())
    assert manifest["version"] == "1.0"
    assert manifest["height"] == 24 and manifest["width"] == 24
    assert [e["op"] for e in manifest["edit_log"]] == ["global"]

    back = load_project(root)
    assert np.array_equal(back.image, project.image)
    assert np.array_equal(back.base_seg.labels, project.base_seg.labels)
    assert np.array_equal(back.render(), project.render())


def test_load_project_rejects_missing_or_wrong_version(tmp_path):
    with pytest.raises(FormatError):
        load_project(tmp_path / "nothing")
    root = tmp_path / "p"
    root.mkdir()
    (root / "manifest.json").write_text(json.dumps({"version": "9.0"}))
    with pytest.raises(FormatError, match="version"):
        load_project(root)


def test_edit_replay_reproduces_render(rng, tmp_path):
    project = _small_project(rng, tmp_path)
    base_render = project.render()
    project.apply_edit({"op": "global", "mask": "bump_scale", "factor": 1.4})
    project.apply_edit({"op": "brush", "mask": "contrast", "x": 10, "y": 10,
                        "radius": 5, "value": 1.5})
    project.apply_edit({"op": "copy", "labels": [0], "dx": 3, "dy": 3})
    edited = project.render()
    assert not np.array_equal(edited, base_render)

    project.replay()
    assert np.array_equal(project.render(), edited)
    project.replay(upto=0)
    assert np.array_equal(project.render(), base_render)
    project.replay()
    assert np.array_equal(project.render(), edited)


def test_unknown_edit_op_rejected(rng, tmp_path):
    project = _small_project(rng, tmp_path)
    with pytest.raises(InvalidArgument):
        project.apply_edit({"op": "teleport"})


def test_lod_edit_refines_selection(rng, tmp_path):
    project = _small_project(rng, tmp_path)
    before = project.seg.segment_count
    project.apply_edit({"op": "lod", "labels": [0], "s_local": 4})
    assert project.seg.segment_count >= before
    # base segmentation untouched; replay reproduces the refinement
    labels_after = project.seg.labels.copy()
    project.replay()
    assert np.array_equal(project.seg.labels, labels_after)


def test_metrics_keys_and_values(rng, tmp_path):
    project = _small_project(rng, tmp_path)
    m = project.metrics()
    assert set(m) == {"l1", "tv", "noise_sigma"}
    assert all(np.isfinite(v) and v >= 0 for v in m.values())
    perfect = project.metrics(against=project.render())
    assert perfect["l1"] == 0.0
