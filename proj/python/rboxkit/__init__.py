"""Rotated box geometry, losses, anchors, NMS and DOTA-style evaluation.

Quads are 8 floats (x0, y0, ..., x3, y3); rotated rectangles are
(cx, cy, w, h, angle_degrees); axis-aligned boxes are (xmin, ymin, w, h).
"""

from ._core import (
    DegenerateError,
    Error,
    ParseError,
    ValidationError,
    angle_loss,
    decode_obb,
    encode_obb,
    evaluate_dirs,
    grad_check_suite,
    hbb_iou,
    interior_angles,
    is_valid_quad,
    kmeans_iou,
    match_corner_order,
    min_area_rect,
    parse_annotations,
    quad_area,
    r_nms,
    rotated_iou,
    rrect_to_quad,
    soft_nms,
    voc_ap,
)

__all__ = [
    "DegenerateError",
    "Error",
    "ParseError",
    "ValidationError",
    "angle_loss",
    "decode_obb",
    "encode_obb",
    "evaluate_dirs",
    "grad_check_suite",
    "hbb_iou",
    "interior_angles",
    "is_valid_quad",
    "kmeans_iou",
    "match_corner_order",
    "min_area_rect",
    "parse_annotations",
    "quad_area",
    "r_nms",
    "rotated_iou",
    "rrect_to_quad",
    "soft_nms",
    "voc_ap",
]
