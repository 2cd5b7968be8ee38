"""Building footprint polygon reconstruction toolkit.

Attraction field maps, dynamic polygon initialization from masks and corner
heatmaps, graph-based vertex refinement with an orthogonality regularizer,
and raster/vector evaluation metrics (pixel P/R, PoLiS, MaxTangent, AP/AR).
"""
from ._backend import BACKEND
from .afm import afm_loss, afm_loss_grad, decode_afm, encode_afm
from .corners import Corner, InitConfig, corners_from_heatmap, init_polygon, nms_corners, trace_outline
from .errors import DimensionError, FormatError, GeometryError, PlacementError, PolyfieldError
from .geometry import as_ring, closest_point_on_ring, is_simple, signed_area, simplify_dp, turn_angle
from .losses import LossWeights, mask_bce, ortho_loss, ortho_loss_grad, resample_ring, total_loss, vertex_l1
from .metrics import Detection, EvalConfig, MetricsReport, ap_ar, evaluate_scene, max_tangent, pixel_pr, polis
from .raster import bilinear_sample, iou, rasterize
from .refine import GcnLayer, GcnWeights, RefineConfig, RingGraph, build_graph, energy_refine, gcn_layer, gcn_refine
from .synth import Scene, SceneSpec, gen_rectilinear, render_scene

__version__ = "0.1.0"
