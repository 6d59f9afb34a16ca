"""Critical site percolation on the triangular lattice, its exploration
interfaces, and the Loewner-evolution numerics they converge to.

The pieces, bottom up:

- lattice: axial coordinates, regions with named boundary arcs, honeycomb
  faces.
- sampling: seeded, lazily evaluated colourings with boundary overrides.
- connectivity: clusters, crossings, circuits, disjoint-crossing counts,
  pivotality.
- exploration: chordal and radial interface walks.
- cardy: separation observables on the equilateral triangle and the
  Schwarz-Christoffel crossing map.
- loewner: chordal/radial Loewner solvers, driving extraction, and the
  boundary-repelled diffusion.
- estimators: the seeded Monte Carlo harness, exponent fits, and the
  near-critical pipeline.
- cli: the ``percolab`` command.
"""

from .lattice import (Face, Region, Site, adjacent_faces, disc,
                      disc_annulus, face_center, face_sites, half_hexagon,
                      hex_annulus, hex_distance, hexagon, neighbors,
                      parallelogram, region_faces, split_arc, to_plane,
                      triangle)
from .sampling import Color, Configuration, derive_seed, site_color
from .connectivity import (cluster_at, clusters, count_crossing_interfaces,
                           count_disjoint_crossings, has_circuit, has_path,
                           is_pivotal)
from .exploration import (ExplorationPath, boundary_cracks,
                          chordal_exploration, disconnection_time,
                          radial_exploration, winding_angle)
from .cardy import (cardy_predict, color_switch_check, detect_Ej,
                    estimate_Hj, schwarz_christoffel, sc_normalization,
                    snap_to_face)
from .loewner import (DiffusionRun, DrivingSample, ExponentPair,
                      RadialChainState, chordal_trace, driving_ensemble,
                      driving_statistics, estimate_Jt, extract_driving,
                      f_identity, f_identity_prediction, forward_slit,
                      generator_residual, inverse_slit, neumann_residual,
                      percolation_driving, q_lambda, sample_bm_driving,
                      simulate_Y, slit_distance, solve_radial_chain,
                      survival_curve)
from .estimators import (ArmSpec, Estimate, ExperimentPlan, ExponentFit,
                         NearCriticalResult, arm_probability,
                         correlation_length, exponent_fit,
                         hard_crossing_estimate, mc_estimate,
                         russo_derivative, theta_density)

__version__ = "0.1.0"

__all__ = [
    "Face", "Region", "Site", "adjacent_faces", "disc", "disc_annulus",
    "face_center", "face_sites", "half_hexagon", "hex_annulus",
    "hex_distance", "hexagon", "neighbors", "parallelogram", "region_faces",
    "split_arc", "to_plane", "triangle",
    "Color", "Configuration", "derive_seed", "site_color",
    "cluster_at", "clusters", "count_crossing_interfaces",
    "count_disjoint_crossings", "has_circuit", "has_path", "is_pivotal",
    "ExplorationPath", "boundary_cracks", "chordal_exploration",
    "disconnection_time", "radial_exploration", "winding_angle",
    "cardy_predict", "color_switch_check", "detect_Ej", "estimate_Hj",
    "schwarz_christoffel", "sc_normalization", "snap_to_face",
    "DiffusionRun", "DrivingSample", "ExponentPair", "RadialChainState",
    "chordal_trace", "driving_ensemble", "driving_statistics", "estimate_Jt",
    "extract_driving", "f_identity", "f_identity_prediction", "forward_slit",
    "generator_residual", "inverse_slit", "neumann_residual",
    "percolation_driving", "q_lambda", "sample_bm_driving", "simulate_Y",
    "slit_distance", "solve_radial_chain", "survival_curve",
    "ArmSpec", "Estimate", "ExperimentPlan", "ExponentFit",
    "NearCriticalResult", "arm_probability", "correlation_length",
    "exponent_fit", "hard_crossing_estimate", "mc_estimate",
    "russo_derivative", "theta_density",
]
