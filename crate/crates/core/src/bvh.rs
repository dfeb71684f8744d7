//! BVH ingestion.
//!
//! End sites are dropped; every `ROOT`/`JOINT` becomes a skeleton joint.
//! Euler channels compose in declaration order and the file's axes are
//! remapped into the x-right, y-forward, z-up world convention.

use std::collections::BTreeMap;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::math::{self};
use crate::motion::{matrix_to_quat, Frame, Motion};
use crate::skeleton::{Joint, Skeleton};

/// Signed axis permutation from file coordinates into world coordinates.
///
/// Written as three comma separated terms, e.g. `-x,z,y`: world x is the
/// negated file x, world y the file z, world z the file y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRemap {
    matrix: [[f64; 3]; 3],
}

impl AxisRemap {
    pub fn identity() -> Self {
        Self {
            matrix: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    pub fn matrix(&self) -> &[[f64; 3]; 3] {
        &self.matrix
    }

    fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        math::mat_vec(&self.matrix, v)
    }

    fn conjugate(&self, r: &[[f64; 3]; 3]) -> [[f64; 3]; 3] {
        let m = &self.matrix;
        let mt = [
            [m[0][0], m[1][0], m[2][0]],
            [m[0][1], m[1][1], m[2][1]],
            [m[0][2], m[1][2], m[2][2]],
        ];
        math::mat_mul(&math::mat_mul(m, r), &mt)
    }
}

/// Y-up files (the common case) mapped to z-up with the character's left
/// on world -x.
impl Default for AxisRemap {
    fn default() -> Self {
        "-x,z,y".parse().expect("default remap is valid")
    }
}

impl FromStr for AxisRemap {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("axis remap {s:?} must look like \"-x,z,y\""));
        let terms: Vec<&str> = s.split(',').map(str::trim).collect();
        if terms.len() != 3 {
            return Err(bad());
        }
        let mut matrix = [[0.0; 3]; 3];
        let mut used = [false; 3];
        for (row, term) in terms.iter().enumerate() {
            let (sign, axis) = match term.strip_prefix('-') {
                Some(rest) => (-1.0, rest),
                None => (1.0, term.strip_prefix('+').unwrap_or(term)),
            };
            let col = match axis {
                "x" | "X" => 0,
                "y" | "Y" => 1,
                "z" | "Z" => 2,
                _ => return Err(bad()),
            };
            if used[col] {
                return Err(bad());
            }
            used[col] = true;
            matrix[row][col] = sign;
        }
        let det = math::dot(matrix[0], math::cross(matrix[1], matrix[2]));
        if det < 0.0 {
            return Err(Error::Parameter(format!("axis remap {s:?} is a reflection")));
        }
        Ok(Self { matrix })
    }
}

#[derive(Debug, Clone)]
pub struct BvhOptions {
    /// Meters per file unit.
    pub scale: f64,
    pub remap: AxisRemap,
    /// Fill the role map from conventional joint names.
    pub infer_roles: bool,
}

impl Default for BvhOptions {
    fn default() -> Self {
        Self {
            scale: 1.0,
            remap: AxisRemap::default(),
            infer_roles: true,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Channel {
    Pos(usize),
    Rot(usize),
}

struct Tokens<'a> {
    toks: Vec<(&'a str, usize)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let toks: Vec<_> = text
            .lines()
            .enumerate()
            .flat_map(|(i, l)| l.split_whitespace().map(move |t| (t, i + 1)))
            .collect();
        let last_line = text.lines().count().max(1);
        Self { toks, pos: 0, last_line }
    }

    fn line(&self) -> usize {
        self.toks.get(self.pos).map(|t| t.1).unwrap_or(self.last_line)
    }

    fn err(&self, msg: impl Into<String>) -> Error {
        Error::Bvh {
            line: self.line(),
            msg: msg.into(),
        }
    }

    fn peek(&self) -> Option<&'a str> {
        self.toks.get(self.pos).map(|t| t.0)
    }

    fn next(&mut self) -> Result<&'a str> {
        let t = self.peek().ok_or_else(|| self.err("unexpected end of file"))?;
        self.pos += 1;
        Ok(t)
    }

    fn expect(&mut self, want: &str) -> Result<()> {
        let line = self.line();
        let got = self.next()?;
        if got.eq_ignore_ascii_case(want) {
            Ok(())
        } else {
            Err(Error::Bvh {
                line,
                msg: format!("expected {want:?}, found {got:?}"),
            })
        }
    }

    fn number(&mut self) -> Result<f64> {
        let line = self.line();
        let tok = self.next()?;
        tok.parse::<f64>().map_err(|_| Error::Bvh {
            line,
            msg: format!("expected a number, found {tok:?}"),
        })
    }
}

struct RawJoint {
    name: String,
    parent: Option<usize>,
    offset: [f64; 3],
    channels: Vec<Channel>,
}

fn parse_joint(toks: &mut Tokens<'_>, name: String, parent: Option<usize>, out: &mut Vec<RawJoint>) -> Result<()> {
    toks.expect("{")?;
    toks.expect("OFFSET")?;
    let offset = [toks.number()?, toks.number()?, toks.number()?];
    let mut channels = Vec::new();
    if toks.peek().is_some_and(|t| t.eq_ignore_ascii_case("CHANNELS")) {
        toks.next()?;
        let line = toks.line();
        let n = toks.number()?;
        if n < 0.0 || n.fract() != 0.0 {
            return Err(Error::Bvh {
                line,
                msg: format!("invalid channel count {n}"),
            });
        }
        for _ in 0..n as usize {
            let line = toks.line();
            let c = match toks.next()?.to_ascii_lowercase().as_str() {
                "xposition" => Channel::Pos(0),
                "yposition" => Channel::Pos(1),
                "zposition" => Channel::Pos(2),
                "xrotation" => Channel::Rot(0),
                "yrotation" => Channel::Rot(1),
                "zrotation" => Channel::Rot(2),
                other => {
                    return Err(Error::Bvh {
                        line,
                        msg: format!("unknown channel {other:?}"),
                    })
                }
            };
            channels.push(c);
        }
        if parent.is_some() && channels.iter().any(|c| matches!(c, Channel::Pos(_))) {
            return Err(toks.err(format!("joint {name:?}: position channels are only supported on the root")));
        }
    }
    let me = out.len();
    out.push(RawJoint {
        name,
        parent,
        offset,
        channels,
    });
    loop {
        let line = toks.line();
        let tok = toks.next()?;
        if tok == "}" {
            return Ok(());
        }
        if tok.eq_ignore_ascii_case("JOINT") {
            let child = toks.next()?.to_string();
            parse_joint(toks, child, Some(me), out)?;
        } else if tok.eq_ignore_ascii_case("End") {
            toks.expect("Site")?;
            toks.expect("{")?;
            toks.expect("OFFSET")?;
            for _ in 0..3 {
                toks.number()?;
            }
            toks.expect("}")?;
        } else {
            return Err(Error::Bvh {
                line,
                msg: format!("unexpected token {tok:?} in joint block"),
            });
        }
    }
}

fn axis_rotation(axis: usize, radians: f64) -> [[f64; 3]; 3] {
    let (s, c) = radians.sin_cos();
    match axis {
        0 => [[1.0, 0.0, 0.0], [0.0, c, -s], [0.0, s, c]],
        1 => [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]],
        _ => [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
    }
}

/// Parses BVH text with the default axis remap and role inference.
pub fn parse_bvh(text: &str, scale: f64) -> Result<Motion> {
    parse_bvh_with(
        text,
        &BvhOptions {
            scale,
            ..BvhOptions::default()
        },
    )
}

pub fn parse_bvh_with(text: &str, opts: &BvhOptions) -> Result<Motion> {
    if !(opts.scale.is_finite() && opts.scale > 0.0) {
        return Err(Error::Parameter(format!("scale must be positive, got {}", opts.scale)));
    }
    let mut toks = Tokens::new(text);
    toks.expect("HIERARCHY")?;
    toks.expect("ROOT")?;
    let root_name = toks.next()?.to_string();
    let mut raw = Vec::new();
    parse_joint(&mut toks, root_name, None, &mut raw)?;
    toks.expect("MOTION")?;
    toks.expect("Frames:")?;
    let count_line = toks.line();
    let n_frames = toks.number()?;
    if n_frames < 0.0 || n_frames.fract() != 0.0 {
        return Err(Error::Bvh {
            line: count_line,
            msg: format!("invalid frame count {n_frames}"),
        });
    }
    let n_frames = n_frames as usize;
    toks.expect("Frame")?;
    toks.expect("Time:")?;
    let dt_line = toks.line();
    let dt = toks.number()?;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::Bvh {
            line: dt_line,
            msg: format!("frame time must be positive, got {dt}"),
        });
    }

    // Frame rows are validated line by line so errors can name the row.
    let per_frame: usize = raw.iter().map(|j| j.channels.len()).sum();
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(n_frames);
    let start = toks.pos;
    let mut i = start;
    while i < toks.toks.len() {
        let line = toks.toks[i].1;
        let mut row = Vec::with_capacity(per_frame);
        while i < toks.toks.len() && toks.toks[i].1 == line {
            let tok = toks.toks[i].0;
            row.push(tok.parse::<f64>().map_err(|_| Error::Bvh {
                line,
                msg: format!("expected a number, found {tok:?}"),
            })?);
            i += 1;
        }
        if row.len() != per_frame {
            return Err(Error::Bvh {
                line,
                msg: format!("frame has {} values, hierarchy declares {per_frame} channels", row.len()),
            });
        }
        rows.push((line, row));
    }
    if rows.len() != n_frames {
        return Err(Error::Bvh {
            line: rows.last().map(|r| r.0).unwrap_or(toks.last_line),
            msg: format!("header declares {n_frames} frames, found {} rows", rows.len()),
        });
    }

    let scale = opts.scale;
    let remap = &opts.remap;
    let joints: Vec<Joint> = raw
        .iter()
        .map(|j| Joint {
            name: j.name.clone(),
            parent: j.parent,
            offset: remap.apply(math::scale(j.offset, scale)),
        })
        .collect();
    let mut skeleton = Skeleton::new(joints, BTreeMap::new()).map_err(|e| Error::Bvh {
        line: 1,
        msg: e.to_string(),
    })?;
    if opts.infer_roles {
        skeleton.infer_roles();
    }

    let frames = rows
        .iter()
        .map(|(_, row)| {
            let mut values = row.iter();
            let mut root_translation = [0.0; 3];
            let rotations = raw
                .iter()
                .map(|j| {
                    let mut rot = math::identity::<f64>();
                    for c in &j.channels {
                        let v = *values.next().expect("row length checked");
                        match *c {
                            Channel::Pos(a) => root_translation[a] = v * scale,
                            Channel::Rot(a) => rot = math::mat_mul(&rot, &axis_rotation(a, v.to_radians())),
                        }
                    }
                    matrix_to_quat(&remap.conjugate(&rot))
                })
                .collect();
            Frame {
                root_translation: remap.apply(root_translation),
                rotations,
            }
        })
        .collect();
    Motion::new(skeleton, 1.0 / dt, frames)
}
