//! Salient orientation symbol (SOS) scripts for skeletal motion.
//!
//! The extraction pipeline turns a [`Motion`] into per-part orientation
//! features, detects salient frames by temporally constrained Ward
//! clustering, quantizes directions onto a 26-symbol template set, and keeps
//! the symbols whose saliency clears a threshold. The [`optimizer`] runs the
//! other direction: it edits a motion until it realizes a given script.

pub mod autodiff;
pub mod bvh;
pub mod error;
pub mod features;
pub mod math;
pub mod motion;
pub mod optimizer;
pub mod periodic;
pub mod pipeline;
pub mod quantizer;
pub mod saliency;
pub mod script;
pub mod skeleton;
pub mod sms;
pub mod svg;
pub mod synth;

pub use error::{Error, Result};
pub use features::{extract_orientation_features, OrientationFeatures, Part};
pub use motion::{forward_kinematics, parse_motion_json, serialize_motion_json, Motion};
pub use optimizer::{optimize, OptimizationProblem, OptimizationResult, OptimizerSettings};
pub use pipeline::{extract, Extraction, Selection};
pub use script::{parse_sos_json, serialize_sos_json, SosScript};
pub use skeleton::Skeleton;
