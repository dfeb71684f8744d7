//! SOS script data model and its JSON form.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Part;
use crate::quantizer::{num_symbols, symbol_id, symbol_name};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Entry {
    pub part: Part,
    pub frame: usize,
    pub symbol: u8,
}

/// Sparse orientation symbols on a six-column staff.
///
/// Entries are kept sorted by `(frame, part)` with at most one per cell.
#[derive(Debug, Clone, PartialEq)]
pub struct SosScript {
    fps: f64,
    num_frames: usize,
    text: Option<String>,
    entries: Vec<Entry>,
}

impl SosScript {
    pub fn new(fps: f64, num_frames: usize, text: Option<String>, mut entries: Vec<Entry>) -> Result<Self> {
        if !(fps.is_finite() && fps > 0.0) {
            return Err(Error::Script(format!("fps must be positive, got {fps}")));
        }
        let mut cells = BTreeSet::new();
        for e in &entries {
            if e.frame >= num_frames {
                return Err(Error::Script(format!(
                    "entry {}@{} is outside the {num_frames}-frame range",
                    e.part, e.frame
                )));
            }
            if e.symbol as usize >= num_symbols(e.part) {
                return Err(Error::Script(format!(
                    "entry {}@{} has invalid symbol id {}",
                    e.part, e.frame, e.symbol
                )));
            }
            if !cells.insert((e.part, e.frame)) {
                return Err(Error::Script(format!("duplicate entry for {}@{}", e.part, e.frame)));
            }
        }
        entries.sort_by_key(|e| (e.frame, e.part));
        Ok(Self {
            fps,
            num_frames,
            text,
            entries,
        })
    }

    pub fn fps(&self) -> f64 {
        self.fps
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn text(&self) -> Option<&str> {
        self.text.as_deref()
    }

    pub fn entries(&self) -> &[Entry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries per staff cell: `len / (T * 6)`.
    pub fn density(&self) -> f64 {
        self.entries.len() as f64 / (self.num_frames * Part::ALL.len()) as f64
    }
}

#[derive(Serialize, Deserialize)]
struct ScriptDoc {
    fps: f64,
    num_frames: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    text: Option<String>,
    entries: Vec<EntryDoc>,
}

#[derive(Serialize, Deserialize)]
struct EntryDoc {
    part: String,
    frame: usize,
    symbol: String,
}

impl SosScript {
    fn to_doc(&self) -> ScriptDoc {
        ScriptDoc {
            fps: self.fps,
            num_frames: self.num_frames,
            text: self.text.clone(),
            entries: self
                .entries
                .iter()
                .map(|e| EntryDoc {
                    part: e.part.code().to_string(),
                    frame: e.frame,
                    symbol: symbol_name(e.symbol, e.part).expect("validated on construction"),
                })
                .collect(),
        }
    }

    fn from_doc(doc: ScriptDoc) -> Result<Self> {
        let entries = doc
            .entries
            .into_iter()
            .map(|e| {
                let part: Part = e.part.parse()?;
                Ok(Entry {
                    part,
                    frame: e.frame,
                    symbol: symbol_id(&e.symbol, part)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        SosScript::new(doc.fps, doc.num_frames, doc.text, entries)
    }
}

impl Serialize for SosScript {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_doc().serialize(s)
    }
}

impl<'de> Deserialize<'de> for SosScript {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        SosScript::from_doc(ScriptDoc::deserialize(d)?).map_err(serde::de::Error::custom)
    }
}

pub fn parse_sos_json(text: &str) -> Result<SosScript> {
    SosScript::from_doc(serde_json::from_str(text)?)
}

/// Pretty-printed canonical JSON.
pub fn serialize_sos_json(s: &SosScript) -> String {
    serde_json::to_string_pretty(&s.to_doc()).expect("script documents always serialize")
}
