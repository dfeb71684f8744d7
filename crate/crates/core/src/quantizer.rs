//! Direction templates, symbol naming, and soft (differentiable) or hard
//! quantization of orientation features.

use std::f64::consts::FRAC_1_SQRT_2;
use std::sync::OnceLock;

use serde::Serialize;

use crate::autodiff::Scalar;
use crate::error::{Error, Result};
use crate::features::{OrientationFeatures, Part};
use crate::math::{self, Vec3};

pub const NUM_LIMB_SYMBOLS: usize = 26;
pub const NUM_ROOT_SYMBOLS: usize = 8;
pub const PLACE_LOW: u8 = 24;
pub const PLACE_HIGH: u8 = 25;

/// Horizontal directions in id order.
pub const DIRECTION_NAMES: [&str; 8] = [
    "Forward",
    "ForwardRight",
    "Right",
    "BackRight",
    "Back",
    "BackLeft",
    "Left",
    "ForwardLeft",
];

pub const LEVEL_NAMES: [&str; 3] = ["Low", "Middle", "Top"];

const S: f64 = FRAC_1_SQRT_2;
const HORIZONTAL: [[f64; 2]; 8] = [
    [0.0, 1.0],
    [S, S],
    [1.0, 0.0],
    [S, -S],
    [0.0, -1.0],
    [-S, -S],
    [-1.0, 0.0],
    [-S, S],
];

#[derive(Debug, Clone, PartialEq)]
pub struct TemplateSet {
    /// Limb templates indexed by symbol id.
    pub limb: [[f64; 3]; NUM_LIMB_SYMBOLS],
    /// Root templates (the Middle-level rows) indexed by root symbol id.
    pub root: [[f64; 3]; NUM_ROOT_SYMBOLS],
}

impl TemplateSet {
    pub fn for_part(&self, part: Part) -> &[[f64; 3]] {
        if part.is_root() {
            &self.root
        } else {
            &self.limb
        }
    }
}

pub fn build_templates() -> TemplateSet {
    let inv = 1.0 / 10f64.sqrt();
    let up = 3.0 / 10f64.sqrt();
    let mut limb = [[0.0; 3]; NUM_LIMB_SYMBOLS];
    for (d, h) in HORIZONTAL.iter().enumerate() {
        limb[d] = [h[0] * inv, h[1] * inv, -up];
        limb[8 + d] = [h[0], h[1], 0.0];
        limb[16 + d] = [h[0] * inv, h[1] * inv, up];
    }
    limb[PLACE_LOW as usize] = [0.0, 0.0, -1.0];
    limb[PLACE_HIGH as usize] = [0.0, 0.0, 1.0];
    let mut root = [[0.0; 3]; NUM_ROOT_SYMBOLS];
    root.copy_from_slice(&limb[8..16]);
    TemplateSet { limb, root }
}

/// Shared template constant.
pub fn templates() -> &'static TemplateSet {
    static T: OnceLock<TemplateSet> = OnceLock::new();
    T.get_or_init(build_templates)
}

pub fn num_symbols(part: Part) -> usize {
    if part.is_root() {
        NUM_ROOT_SYMBOLS
    } else {
        NUM_LIMB_SYMBOLS
    }
}

pub fn symbol_name(id: u8, part: Part) -> Result<String> {
    let id = id as usize;
    if id >= num_symbols(part) {
        return Err(Error::Parameter(format!(
            "symbol id {id} out of range for part {part} (0..{})",
            num_symbols(part)
        )));
    }
    Ok(if part.is_root() {
        DIRECTION_NAMES[id].to_string()
    } else if id == PLACE_LOW as usize {
        "Place-Low".into()
    } else if id == PLACE_HIGH as usize {
        "Place-High".into()
    } else {
        format!("{}-{}", DIRECTION_NAMES[id % 8], LEVEL_NAMES[id / 8])
    })
}

pub fn symbol_id(name: &str, part: Part) -> Result<u8> {
    (0..num_symbols(part) as u8)
        .find(|&id| symbol_name(id, part).is_ok_and(|n| n == name))
        .ok_or_else(|| Error::UnknownSymbol {
            name: name.to_string(),
            part: part.to_string(),
            valid: (0..num_symbols(part) as u8)
                .map(|id| symbol_name(id, part).expect("in range"))
                .collect::<Vec<_>>()
                .join(", "),
        })
}

/// Left/right mirror image of a symbol (reflection across x = 0).
pub fn mirror_symbol(id: u8, part: Part) -> u8 {
    let mirror_dir = |d: u8| (8 - d) % 8;
    if part.is_root() {
        mirror_dir(id)
    } else if id >= PLACE_LOW {
        id
    } else {
        (id / 8) * 8 + mirror_dir(id % 8)
    }
}

/// Index of the template with the largest dot product; ties go to the
/// lowest id.
pub fn hard_quantize(o: [f64; 3], templates: &[[f64; 3]]) -> u8 {
    let mut best = 0;
    let mut best_dot = f64::NEG_INFINITY;
    for (k, u) in templates.iter().enumerate() {
        let d = math::dot(o, *u);
        if d > best_dot {
            best_dot = d;
            best = k;
        }
    }
    best as u8
}

/// Softmax-weighted mixture of templates for one feature vector.
///
/// The input is normalized first; callers guarantee a non-degenerate norm.
pub fn soft_quantize_vec<S: Scalar>(o: Vec3<S>, templates: &[[f64; 3]], beta: f64) -> Vec3<S> {
    let n = math::norm(o);
    let unit = math::scale(o, S::constant(1.0) / n);
    let logits: Vec<S> = templates
        .iter()
        .map(|u| math::dot(unit, math::lift3(*u)) * beta)
        .collect();
    // Softmax is shift invariant; the shift is treated as a constant.
    let shift = logits.iter().map(|l| l.value()).fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<S> = logits.iter().map(|l| (*l - shift).exp()).collect();
    let mut total = S::zero();
    let mut acc = [S::zero(); 3];
    for (w, u) in weights.iter().zip(templates) {
        total = total + *w;
        acc = math::add(acc, math::scale(math::lift3(*u), *w));
    }
    math::scale(acc, S::constant(1.0) / total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuantizedFeatures {
    /// Soft template mixtures, or the argmax template when `beta` is infinite.
    pub q: Vec<[[f64; 3]; 6]>,
    pub hard_ids: Vec<[u8; 6]>,
    pub beta: f64,
}

/// Quantizes every part of every frame. Degenerate feature vectors use the
/// held direction from [`OrientationFeatures::unit_directions`].
pub fn soft_quantize(o: &OrientationFeatures, beta: f64) -> Result<QuantizedFeatures> {
    if !(beta > 0.0) {
        return Err(Error::Parameter(format!("sharpness must be positive, got {beta}")));
    }
    let set = templates();
    let dirs = o.unit_directions();
    let mut q = Vec::with_capacity(dirs.len());
    let mut hard_ids = Vec::with_capacity(dirs.len());
    for row in &dirs {
        let mut qr = [[0.0; 3]; 6];
        let mut ids = [0u8; 6];
        for part in Part::ALL {
            let p = part.index();
            let tpl = set.for_part(part);
            ids[p] = hard_quantize(row[p], tpl);
            qr[p] = if beta.is_infinite() {
                tpl[ids[p] as usize]
            } else {
                soft_quantize_vec::<f64>(row[p], tpl, beta)
            };
        }
        q.push(qr);
        hard_ids.push(ids);
    }
    Ok(QuantizedFeatures { q, hard_ids, beta })
}

/// Hard symbol ids for every frame and part.
pub fn hard_symbols(o: &OrientationFeatures) -> Vec<[u8; 6]> {
    let set = templates();
    o.unit_directions()
        .iter()
        .map(|row| {
            let mut ids = [0u8; 6];
            for part in Part::ALL {
                ids[part.index()] = hard_quantize(row[part.index()], set.for_part(part));
            }
            ids
        })
        .collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct SymbolInfo {
    pub id: u8,
    pub name: String,
    pub vector: [f64; 3],
}

/// Canonical symbol table shared by serializers and clients.
#[derive(Debug, Clone, Serialize)]
pub struct SymbolTable {
    pub limb: Vec<SymbolInfo>,
    pub root: Vec<SymbolInfo>,
}

pub fn symbol_table() -> SymbolTable {
    let set = templates();
    let table = |part: Part| {
        set.for_part(part)
            .iter()
            .enumerate()
            .map(|(id, v)| SymbolInfo {
                id: id as u8,
                name: symbol_name(id as u8, part).expect("in range"),
                vector: *v,
            })
            .collect()
    };
    SymbolTable {
        limb: table(Part::LeftArm),
        root: table(Part::Root),
    }
}
