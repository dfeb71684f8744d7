//! Staff rendering.
//!
//! Frame 0 sits at the bottom and time runs upward. Limb glyph outlines
//! encode the horizontal direction, with a bar marking Low (below) or Top
//! (above); fill encodes the level. Root symbols are arrows.

use std::f64::consts::FRAC_PI_4;
use std::fmt::Write;

use crate::features::Part;
use crate::quantizer::{PLACE_HIGH, PLACE_LOW};
use crate::script::SosScript;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgOptions {
    pub pixels_per_frame: f64,
    pub column_width: f64,
}

impl Default for SvgOptions {
    fn default() -> Self {
        Self {
            pixels_per_frame: 6.0,
            column_width: 40.0,
        }
    }
}

const MARGIN: f64 = 12.0;
const LABEL_BAND: f64 = 22.0;

fn num(v: f64) -> String {
    let s = format!("{v:.3}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" || s.is_empty() {
        "0".into()
    } else {
        s.to_string()
    }
}

fn polygon(points: &[(f64, f64)], angle: f64) -> String {
    // Paper "up" is forward; in SVG coordinates that is -y. Clockwise turns
    // on the page take forward to right.
    let (s, c) = angle.sin_cos();
    let mut d = String::new();
    for (i, (x, y)) in points.iter().enumerate() {
        let (rx, ry) = (x * c - y * s, x * s + y * c);
        let _ = write!(d, "{}{},{} ", if i == 0 { 'M' } else { 'L' }, num(rx), num(ry));
    }
    d.push('Z');
    d
}

const DIRECTION_SHAPE: [(f64, f64); 5] = [(-0.8, 0.9), (0.8, 0.9), (0.8, -0.3), (0.0, -1.0), (-0.8, -0.3)];
const ARROW_SHAPE: [(f64, f64); 7] = [
    (0.0, -1.0),
    (0.8, -0.1),
    (0.3, -0.1),
    (0.3, 1.0),
    (-0.3, 1.0),
    (-0.3, -0.1),
    (-0.8, -0.1),
];
const LOW_MARK: &str = " M-0.6,1.2 L0.6,1.2";
const TOP_MARK: &str = " M-0.6,-1.2 L0.6,-1.2";

/// Glyph outline in a unit box centred on the origin. Depends only on the
/// symbol, never on its position.
pub fn glyph_path(part: Part, symbol: u8) -> String {
    if part.is_root() {
        return polygon(&ARROW_SHAPE, symbol as f64 * FRAC_PI_4);
    }
    match symbol {
        PLACE_LOW => format!("M-0.8,-0.9 L0.8,-0.9 L0.8,0.9 L-0.8,0.9 Z{LOW_MARK}"),
        PLACE_HIGH => format!("M-0.8,-0.9 L0.8,-0.9 L0.8,0.9 L-0.8,0.9 Z{TOP_MARK}"),
        _ => {
            let body = polygon(&DIRECTION_SHAPE, (symbol % 8) as f64 * FRAC_PI_4);
            match symbol / 8 {
                0 => body + LOW_MARK,
                2 => body + TOP_MARK,
                _ => body,
            }
        }
    }
}

fn glyph_fill(part: Part, symbol: u8) -> &'static str {
    if part.is_root() {
        return "#555555";
    }
    match symbol {
        PLACE_LOW => "#222222",
        PLACE_HIGH => "#eeeeee",
        s if s / 8 == 0 => "#222222",
        s if s / 8 == 1 => "url(#hatch)",
        _ => "#eeeeee",
    }
}

fn escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;").replace('"', "&quot;")
}

/// Deterministic SVG 1.1 staff.
pub fn render_staff_svg(script: &SosScript, opts: &SvgOptions) -> String {
    let cw = opts.column_width;
    let ppf = opts.pixels_per_frame;
    let t = script.num_frames();
    let staff_h = t as f64 * ppf;
    let width = 2.0 * MARGIN + 6.0 * cw;
    let height = 2.0 * MARGIN + staff_h + LABEL_BAND;
    let bottom = MARGIN + staff_h;
    let gw = 0.35 * cw;
    let gh = (0.35 * cw).min(12.0);

    let mut out = String::new();
    let _ = writeln!(out, r#"<?xml version="1.0" encoding="UTF-8"?>"#);
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = num(width),
        h = num(height)
    );
    out.push_str("<title>SOS staff</title>\n");
    if let Some(text) = script.text() {
        let _ = writeln!(out, "<desc>{}</desc>", escape(text));
    }
    out.push_str(concat!(
        "<defs><pattern id=\"hatch\" width=\"4\" height=\"4\" patternUnits=\"userSpaceOnUse\">",
        "<rect width=\"4\" height=\"4\" fill=\"#ffffff\"/><circle cx=\"2\" cy=\"2\" r=\"0.9\" fill=\"#222222\"/>",
        "</pattern></defs>\n"
    ));
    let _ = writeln!(
        out,
        r##"<rect x="{x}" y="{y}" width="{w}" height="{h}" fill="#ffffff" stroke="#000000" stroke-width="1"/>"##,
        x = num(MARGIN),
        y = num(MARGIN),
        w = num(6.0 * cw),
        h = num(staff_h)
    );
    for c in 1..6 {
        let x = MARGIN + c as f64 * cw;
        let _ = writeln!(
            out,
            r##"<line x1="{x}" y1="{y1}" x2="{x}" y2="{y2}" stroke="#999999" stroke-width="0.5"/>"##,
            x = num(x),
            y1 = num(MARGIN),
            y2 = num(bottom)
        );
    }
    let step = (script.fps().round() as usize).max(1);
    for f in (step..t).step_by(step) {
        let y = bottom - f as f64 * ppf;
        let _ = writeln!(
            out,
            r##"<line x1="{x1}" y1="{y}" x2="{x2}" y2="{y}" stroke="#dddddd" stroke-width="0.5"/>"##,
            x1 = num(MARGIN),
            x2 = num(MARGIN + 6.0 * cw),
            y = num(y)
        );
    }
    for part in Part::ALL {
        let x = MARGIN + (part.index() as f64 + 0.5) * cw;
        let _ = writeln!(
            out,
            r#"<text x="{x}" y="{y}" font-family="sans-serif" font-size="11" text-anchor="middle">{label}</text>"#,
            x = num(x),
            y = num(bottom + 15.0),
            label = part.code()
        );
    }
    for e in script.entries() {
        let x = MARGIN + (e.part.index() as f64 + 0.5) * cw;
        let y = bottom - (e.frame as f64 + 0.5) * ppf;
        let _ = writeln!(
            out,
            r##"<path class="glyph" data-part="{part}" data-frame="{frame}" transform="translate({x},{y}) scale({sx},{sy})" d="{d}" fill="{fill}" stroke="#000000" stroke-width="{sw}" vector-effect="non-scaling-stroke"/>"##,
            part = e.part.code(),
            frame = e.frame,
            x = num(x),
            y = num(y),
            sx = num(gw),
            sy = num(gh),
            d = glyph_path(e.part, e.symbol),
            fill = glyph_fill(e.part, e.symbol),
            sw = 1
        );
    }
    out.push_str("</svg>\n");
    out
}
