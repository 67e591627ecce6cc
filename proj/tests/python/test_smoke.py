import math
import os
import subprocess

import pytest

import rboxkit as rb

SQUARE = [0, 0, 1, 0, 1, 1, 0, 1]


def test_iou_fixtures():
    assert rb.rotated_iou(SQUARE, SQUARE) == 1.0
    assert rb.rotated_iou(SQUARE, [5, 5, 6, 5, 6, 6, 5, 6]) == 0.0
    r = 0.5 * math.sqrt(2.0)
    centered = [-0.5, -0.5, 0.5, -0.5, 0.5, 0.5, -0.5, 0.5]
    diamond = [0, -r, r, 0, 0, r, -r, 0]
    assert rb.rotated_iou(centered, diamond) == pytest.approx(0.707107, abs=1e-6)
    assert rb.hbb_iou((0, 0, 2, 2), (1, 1, 2, 2)) == pytest.approx(1 / 7)


def test_invalid_quad_raises():
    assert not rb.is_valid_quad([0, 0, 1, 1, 0, 1, 1, 0])
    with pytest.raises(rb.ValidationError):
        rb.quad_area([0, 0, 1, 1, 0, 1, 1, 0])
    with pytest.raises(ValueError):
        rb.quad_area([0, 0, 1, 1, 0, 1, 1, 0])


def test_min_area_rect_and_round_trip():
    quad = rb.rrect_to_quad((3, 4, 10, 5, 30))
    cx, cy, w, h, _ = rb.min_area_rect(quad)
    assert (cx, cy) == pytest.approx((3, 4))
    assert sorted((w, h)) == pytest.approx([5, 10])
    assert sum(rb.interior_angles(quad)) == pytest.approx(360)


def test_codec_round_trip():
    anchor = (10, 10, 20, 8, 45)
    target = rb.rrect_to_quad((12, 9, 18, 9, 40))
    deltas = rb.encode_obb(anchor, target)
    assert rb.decode_obb(anchor, deltas) == pytest.approx(target, abs=1e-9)
    assert rb.encode_obb(anchor, rb.rrect_to_quad(anchor)) == pytest.approx([0] * 8, abs=1e-12)


def test_angle_loss():
    loss, grad = rb.angle_loss([0, 0, 4, 0, 4, 2, 0, 2])
    assert loss == 0.0
    assert len(grad) == 8
    with pytest.raises(ValueError):
        rb.angle_loss(SQUARE, "cosine")


def test_grad_check_suite():
    errors = rb.grad_check_suite("all", trials=10, seed=1)
    assert len(errors) == 6
    assert max(errors.values()) < 1e-5


def test_r_nms_chain():
    quads = [[0, 0, 2, 0, 2, 1, 0, 1], [0, 0, 4, 0, 4, 1, 0, 1], [2, 0, 4, 0, 4, 1, 2, 1]]
    assert rb.r_nms(quads, [0.9, 0.8, 0.7]) == [0, 2]
    assert rb.r_nms(quads, [0.9, 0.8, 0.7], iou_thresh=0.6) == [0, 1, 2]
    assert sorted(rb.r_nms(quads, [0.9, 0.8, 0.7], class_ids=[0, 1, 0])) == [0, 1, 2]
    with pytest.raises(ValueError):
        rb.r_nms(quads, [0.9])


def test_soft_nms_linear_decay():
    out = rb.soft_nms([(0, 0, 3, 1), (1, 0, 3, 1)], [0.9, 0.8])
    assert out[0] == (0, pytest.approx(0.9))
    assert out[1] == (1, pytest.approx(0.4))


def test_kmeans_recovers_distinct_shapes():
    shapes = [(10, 10)] * 5 + [(40, 10)] * 5 + [(20, 60)] * 5
    result = rb.kmeans_iou(shapes, k=3, seed=0)
    assert sorted(result["priors"]) == [(10, 10), (20, 60), (40, 10)]
    assert result["cost"] == 0.0
    assert rb.kmeans_iou(shapes, k=3, seed=0) == result


def test_voc_ap_fixture():
    assert rb.voc_ap([0.5, 0.5, 1.0], [1.0, 0.5, 2 / 3]) == pytest.approx(0.848485, abs=1e-6)


def test_parse_annotations_reports_line():
    recs = rb.parse_annotations("imagesource:x\n0 0 10 0 10 10 0 10 plane 1\n")
    assert recs == [([0, 0, 10, 0, 10, 10, 0, 10], "plane", True)]
    with pytest.raises(rb.ParseError, match="line 2"):
        rb.parse_annotations("0 0 10 0 10 10 0 10 plane 0\n0 0 1\n")


def test_evaluate_dirs_hand_fixture(tmp_path):
    (tmp_path / "gt").mkdir()
    (tmp_path / "det").mkdir()
    (tmp_path / "gt" / "img.txt").write_text("0 0 10 0 10 10 0 10 plane 0\n50 50 60 50 60 60 50 60 plane 0\n")
    (tmp_path / "det" / "Task1_plane.txt").write_text(
        "img 0.9 0 0 10 0 10 10 0 10\n"
        "img 0.8 100 100 110 100 110 110 100 110\n"
        "img 0.7 50 50 60 50 60 60 50 60\n"
    )
    report = rb.evaluate_dirs(tmp_path / "det", tmp_path / "gt")
    assert report["map"] == pytest.approx(0.848485, abs=1e-6)
    assert report["classes"]["plane"]["true_positives"] == 2
    assert len(report["recall_curve"]) == 10


@pytest.mark.skipif(not os.environ.get("RBOXKIT_CLI"), reason="command-line tool not built")
def test_cli_synth_evaluate(tmp_path):
    cli = os.environ["RBOXKIT_CLI"]
    subprocess.run([cli, "synth", "--out", str(tmp_path), "--seed", "2", "--images", "2"], check=True)
    report = rb.evaluate_dirs(tmp_path / "detections", tmp_path / "annotations")
    assert report["map"] == 1.0
