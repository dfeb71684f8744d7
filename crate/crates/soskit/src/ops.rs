//! Operations shared by the CLI and the HTTP service, so both paths emit
//! the same bytes for the same inputs.

use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use soskit_core::bvh::parse_bvh_with;
use soskit_core::features::Part;
use soskit_core::optimizer::{optimize, OptimizationProblem, OptimizationResult, OptimizerSettings};
use soskit_core::quantizer::{hard_symbols, soft_quantize};
use soskit_core::saliency::Saliency;
use soskit_core::script::SosScript;
use soskit_core::sms::{sms_mask_percentile, synthesize_sos, PercentileSampler, SynthesisOptions};
use soskit_core::{extract, extract_orientation_features, parse_motion_json, Error, Motion, Selection};

use crate::config::Config;

/// Extraction parameters as they arrive from a flag set or a request body.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExtractParams {
    pub theta: Option<f64>,
    pub percentiles: Option<[f64; 6]>,
    /// Keep only these columns.
    pub parts: Option<Vec<Part>>,
    #[serde(default)]
    pub include_first_frame: bool,
    pub text: Option<String>,
}

/// The parameters actually used, defaults filled in.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExtractEcho {
    pub selection: Selection,
    pub parts: Vec<Part>,
    pub include_first_frame: bool,
    pub text: Option<String>,
}

#[derive(Debug, Clone)]
pub struct ExtractOutcome {
    pub script: SosScript,
    pub saliency: Saliency,
    pub dense_symbols: Vec<[u8; 6]>,
    pub echo: ExtractEcho,
}

impl ExtractParams {
    pub fn resolve(&self, default_theta: f64) -> Result<ExtractEcho, Error> {
        let selection = match (self.theta, self.percentiles) {
            (Some(_), Some(_)) => {
                return Err(Error::Parameter("give either theta or percentiles, not both".into()));
            }
            (None, Some(p)) => Selection::Percentiles(p),
            (theta, None) => Selection::Threshold(theta.unwrap_or(default_theta)),
        };
        let parts = match &self.parts {
            Some(p) if p.is_empty() => return Err(Error::Parameter("parts must name at least one column".into())),
            Some(p) => {
                let mut p = p.clone();
                p.sort();
                p.dedup();
                p
            }
            None => Part::ALL.to_vec(),
        };
        Ok(ExtractEcho {
            selection,
            parts,
            include_first_frame: self.include_first_frame,
            text: self.text.clone(),
        })
    }
}

pub fn run_extract(m: &Motion, params: &ExtractParams, cfg: &Config) -> Result<ExtractOutcome, Error> {
    let echo = params.resolve(cfg.theta)?;
    let x = extract(m, echo.selection, echo.include_first_frame)?;
    let entries = x
        .script
        .entries()
        .iter()
        .filter(|e| echo.parts.contains(&e.part))
        .copied()
        .collect();
    let script = SosScript::new(m.fps(), m.num_frames(), echo.text.clone(), entries)?;
    Ok(ExtractOutcome {
        script,
        dense_symbols: hard_symbols(&x.features),
        saliency: x.saliency,
        echo,
    })
}

/// `{"RT": [...], "LA": [...], ...}` in staff order.
pub fn saliency_json(s: &Saliency) -> Value {
    let mut map = Map::new();
    for p in Part::ALL {
        map.insert(p.code().into(), json!(s.track(p)));
    }
    Value::Object(map)
}

pub fn saliency_dump(s: &Saliency) -> Value {
    json!({
        "tracks": saliency_json(s),
        "global_max": s.global_max,
    })
}

/// `n` scripts, each masked at per-part percentiles drawn from `seed`.
pub fn run_augment(m: &Motion, seed: u64, n: usize) -> Result<Vec<(SosScript, [f64; 6])>, Error> {
    let features = extract_orientation_features(m)?;
    let saliency = soskit_core::saliency::saliency_all_parts(&features);
    let mut sampler = PercentileSampler::new(seed);
    let opts = SynthesisOptions {
        fps: m.fps(),
        text: None,
        include_first_frame: false,
    };
    (0..n)
        .map(|_| {
            let p = sampler.sample();
            let mask = sms_mask_percentile(&saliency, p)?;
            Ok((synthesize_sos(&features, &mask, &opts)?, p))
        })
        .collect()
}

/// Overlays request options on the configured optimizer defaults.
pub fn optimizer_settings(cfg: &Config, options: Option<&Value>) -> Result<OptimizerSettings, serde_path_to_error::Error<serde_json::Error>> {
    let mut base = serde_json::to_value(&cfg.optimizer).expect("settings serialize");
    if let (Some(Value::Object(over)), Value::Object(base_map)) = (options, &mut base) {
        for (k, v) in over {
            let key = if k == "iters" { "max_iters".to_string() } else { k.clone() };
            base_map.insert(key, v.clone());
        }
    }
    serde_path_to_error::deserialize(base)
}

pub fn run_optimize(initial: Motion, script: SosScript, settings: OptimizerSettings) -> Result<OptimizationResult, Error> {
    optimize(&OptimizationProblem { initial, script, settings })
}

/// Quantized symbols per frame, plus the soft vectors when `beta` is set.
pub fn run_quantize(m: &Motion, beta: Option<f64>) -> Result<Value, Error> {
    let features = extract_orientation_features(m)?;
    let mut out = json!({ "symbols": hard_symbols(&features) });
    if let Some(b) = beta {
        let q = soft_quantize(&features, b)?;
        out["beta"] = json!(b);
        out["soft"] = json!(q.q);
    }
    Ok(out)
}

/// Loads a motion from JSON or, by extension, BVH.
pub fn parse_motion_file(path: &Path, text: &str, cfg: &Config) -> anyhow::Result<Motion> {
    let is_bvh = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("bvh"));
    if is_bvh {
        Ok(parse_bvh_with(text, &cfg.bvh_options()?)?)
    } else {
        Ok(parse_motion_json(text)?)
    }
}
