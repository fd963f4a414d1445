//! SVG pictures of planar diagrams.

use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laguerre::LaguerreDiagram;

/// Fill colours from low to high height quantile.
pub const PALETTE: [&str; 8] = ["#313695", "#4575b4", "#74add1", "#abd9e9", "#fee090", "#fdae61", "#f46d43", "#d73027"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColorMode {
    Uniform,
    ByHeight,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    pub stroke_width: f64,
    /// `[x_min, y_min, x_max, y_max]`; `None` fits the observation ball.
    pub viewport: Option<[f64; 4]>,
    pub color_mode: ColorMode,
    /// Clip the picture to the disk of this radius about the origin.
    pub clip_radius: Option<f64>,
    /// Output width in pixels.
    pub width_px: u32,
    pub draw_nuclei: bool,
}

impl Default for RenderStyle {
    fn default() -> Self {
        RenderStyle {
            stroke_width: 0.02,
            viewport: None,
            color_mode: ColorMode::ByHeight,
            clip_radius: None,
            width_px: 800,
            draw_nuclei: false,
        }
    }
}

fn clip_to_rect(poly: &[[f64; 2]], r: [f64; 4]) -> Vec<[f64; 2]> {
    // Sutherland-Hodgman against the four sides.
    let sides: [(usize, f64, bool); 4] = [(0, r[0], false), (0, r[2], true), (1, r[1], false), (1, r[3], true)];
    let mut out = poly.to_vec();
    for (axis, bound, upper) in sides {
        let inside = |p: &[f64; 2]| if upper { p[axis] <= bound } else { p[axis] >= bound };
        let input = std::mem::take(&mut out);
        for i in 0..input.len() {
            let (a, b) = (input[i], input[(i + 1) % input.len()]);
            match (inside(&a), inside(&b)) {
                (true, true) => out.push(b),
                (true, false) | (false, true) => {
                    let t = (bound - a[axis]) / (b[axis] - a[axis]);
                    out.push([a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])]);
                    if inside(&b) {
                        out.push(b);
                    }
                }
                (false, false) => {}
            }
        }
    }
    out
}

fn num(x: f64) -> String {
    let s = format!("{x:.6}");
    if s == "-0.000000" { "0.000000".into() } else { s }
}

/// Renders a planar diagram: one closed path per nonempty cell, clipped to
/// the viewport, y axis pointing up.
pub fn render_svg(diag: &LaguerreDiagram, style: &RenderStyle) -> Result<String> {
    if diag.dim != 2 {
        return Err(Error::Dimension(diag.dim));
    }
    let r = diag.window.r_obs;
    let vp = style.viewport.unwrap_or([-r, -r, r, r]);
    if !(vp[2] > vp[0] && vp[3] > vp[1]) {
        return Err(Error::Domain(format!("empty viewport {vp:?}")));
    }
    let (w, h) = (vp[2] - vp[0], vp[3] - vp[1]);
    let height_px = (style.width_px as f64 * h / w).round().max(1.0) as u32;

    // Rank of each nonempty cell's height among nonempty cells.
    let mut order: Vec<(f64, usize)> = diag.nonempty_cells().map(|c| (diag.nuclei[c.nucleus_index].h, c.nucleus_index)).collect();
    order.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut colour = vec![PALETTE[3]; diag.cells.len()];
    if style.color_mode == ColorMode::ByHeight {
        let n = order.len().max(1);
        for (rank, (_, i)) in order.iter().enumerate() {
            colour[*i] = PALETTE[rank * PALETTE.len() / n];
        }
    }

    let mut s = String::new();
    writeln!(s, r#"<?xml version="1.0" encoding="UTF-8"?>"#).unwrap();
    writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}" viewBox="{} {} {} {}">"#,
        style.width_px,
        height_px,
        num(vp[0]),
        num(-vp[3]),
        num(w),
        num(h)
    )
    .unwrap();
    if let Some(cr) = style.clip_radius {
        writeln!(s, r#"<defs><clipPath id="ball"><circle cx="0" cy="0" r="{}"/></clipPath></defs>"#, num(cr)).unwrap();
    }
    let clip_attr = if style.clip_radius.is_some() { r#" clip-path="url(#ball)""# } else { "" };
    writeln!(
        s,
        r#"<g transform="scale(1,-1)" stroke="black" stroke-width="{}" stroke-linejoin="round"{clip_attr}>"#,
        num(style.stroke_width)
    )
    .unwrap();
    for cell in diag.nonempty_cells() {
        let poly: Vec<[f64; 2]> = cell.vertices.iter().map(|v| [v[0], v[1]]).collect();
        let poly = clip_to_rect(&poly, vp);
        if poly.len() < 3 {
            continue;
        }
        let mut d = String::new();
        for (k, p) in poly.iter().enumerate() {
            write!(d, "{}{} {} ", if k == 0 { "M" } else { "L" }, num(p[0]), num(p[1])).unwrap();
        }
        d.push('Z');
        writeln!(s, r#"<path d="{d}" fill="{}"/>"#, colour[cell.nucleus_index]).unwrap();
    }
    if style.draw_nuclei {
        for p in &diag.nuclei {
            if (vp[0]..=vp[2]).contains(&p.v[0]) && (vp[1]..=vp[3]).contains(&p.v[1]) {
                writeln!(s, r#"<circle cx="{}" cy="{}" r="{}" fill="black"/>"#, num(p.v[0]), num(p.v[1]), num(2.0 * style.stroke_width))
                    .unwrap();
            }
        }
    }
    s.push_str("</g>\n</svg>\n");
    Ok(s)
}
