//! Motion to SOS script in one call.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::features::{extract_orientation_features, OrientationFeatures};
use crate::motion::Motion;
use crate::saliency::{saliency_all_parts, Saliency};
use crate::script::SosScript;
use crate::sms::{sms_mask, sms_mask_percentile, synthesize_sos, SmsMask, SynthesisOptions};

/// How salient cells are selected.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Selection {
    /// Relative to the maximum saliency over all parts.
    Threshold(f64),
    /// Per-part quantiles of each part's own positive saliency values.
    Percentiles([f64; 6]),
}

#[derive(Debug, Clone)]
pub struct Extraction {
    pub features: OrientationFeatures,
    pub saliency: Saliency,
    pub mask: SmsMask,
    pub script: SosScript,
}

pub fn extract(m: &Motion, selection: Selection, include_first_frame: bool) -> Result<Extraction> {
    let features = extract_orientation_features(m)?;
    let saliency = saliency_all_parts(&features);
    let mask = match selection {
        Selection::Threshold(theta) => sms_mask(&saliency, theta)?,
        Selection::Percentiles(p) => sms_mask_percentile(&saliency, p)?,
    };
    let script = synthesize_sos(
        &features,
        &mask,
        &SynthesisOptions {
            fps: m.fps(),
            text: None,
            include_first_frame,
        },
    )?;
    Ok(Extraction {
        features,
        saliency,
        mask,
        script,
    })
}
