"""Desk-scale coarse geometry: cones, deck quotients, lifts, homotopies.

Everything runs on finite geodesic graphs that truncate the infinite
models; certifications either hold on the whole truncation or come back
refuted with a witness.
"""

from .actions import (GroupAction, GroupElement, LiftCertificate,
                      QuotientSpace, SoftnessTable, build_lift_certificate,
                      certify_scattered_fibres, certify_soft_quotient,
                      certify_uniform_coarse_discontinuity,
                      check_saturation_identity, min_displacement,
                      quotient_space, saturation)
from .cones import (HeightFunction, PCylinder, check_cat0_convexity,
                    check_cone_inequalities, circle_model, cone_descriptor,
                    cone_from_descriptor, cone_interval, geodesic_point,
                    line_model, metric_cone, p_cylinder, plane_model,
                    torus_model)
from .homotopies import (boundary_fix, boundary_fix_report, check_pasting,
                         concatenate, contraction_bound_report,
                         contraction_homotopy, lipschitz_scan,
                         reparametrize_to_lipschitz, reverse,
                         straight_line_homotopy, stretch_to_unit_slope)
from .instances import (CoverInstance, boundary_fix_instance, circle_cover,
                        contraction_loop, reparametrization_instance,
                        torus_cover, winding_loop)
from .lifting import (Homotopy, LoopMap, RayMap, StuckLift, classify_lift,
                      lift_homotopy, lifting_correspondence, lifts_equivalent,
                      uniqueness_defect, verify_lift, verify_ses_instance,
                      vertical_step_sup)
from .maps import (Certification, CoarseMapData, ControlProfile, Refuted,
                   certify_coarse, closeness, closeness_trend, compose,
                   constant_map, control_profile, default_radii, fibres_of,
                   identity_map, is_relative_coarse)
from .metric import (BoundedSet, MetricSpace, ball, build_grid_space,
                     load_space, outside, point_space, ray_grid, save_space,
                     space_from_descriptor, space_from_edges,
                     space_to_descriptor)

__version__ = "0.1.0"

__all__ = [name for name in dir() if not name.startswith("_")]
