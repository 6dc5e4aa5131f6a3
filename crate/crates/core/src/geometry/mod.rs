//! Curve lengths, certified distance brackets, polycylinders, metric balls
//! and the sampling checks built on them.

mod checks;
mod curve;
mod distance;
mod optimize;
mod regions;

pub use checks::{
    carleson_box_check, carleson_polycylinder_check, inclusion_check, volume_estimate, volume_scaling, Region, VolumeEstimate, VolumeRow,
    VolumeScaling,
    INCONCLUSIVE_ALLOWANCE,
};
pub use curve::{curve_length, segment_lengths, Curve};
pub use distance::{
    automorphism_modulus, candidate_curves, chord_upper, comparison_factor, distance_bracket, distance_bracket_with,
    exhaustion_lower, invariant_distance, local_comparison_lower, lower_bound, polycylinder_comparison_lower,
    radial_bounds, radial_distance,
    radial_profile_lower, upper_bound, DistanceBracket,
};
pub use optimize::{OptimizerSettings, NODE_RADIUS};
pub use regions::{
    frame, in_ball_certified, in_polycylinder, unit_ball_volume, GeodesicBall, Membership, PolyCylinder,
};
