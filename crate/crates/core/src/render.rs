//! SVG pictures of books and trajectories.
//!
//! Side-by-side layout draws every leaf in its own panel with the segments
//! travelled on it; overlay draws the whole book in one panel together with
//! the caustic.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::book::{BilliardBook, Leaf, LeafId};
use crate::dynamics::Trajectory;
use crate::geometry::{ConfocalFamily, Point};

pub const MAX_LEAVES: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
pub enum Layout {
    #[default]
    SideBySide,
    Overlay,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RenderSpec {
    pub layout: Layout,
    /// Pixels per unit length.
    pub scale: f64,
    pub boundary_width: f64,
    pub trajectory_width: f64,
    /// Points per drawn conic.
    pub samples: usize,
    /// Panels per row in side-by-side layout.
    pub columns: usize,
}

impl Default for RenderSpec {
    fn default() -> Self {
        Self {
            layout: Layout::SideBySide,
            scale: 40.0,
            boundary_width: 1.5,
            trajectory_width: 0.8,
            samples: 128,
            columns: 4,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("{0} leaves exceed the limit of {MAX_LEAVES} per canvas")]
    TooManyLeaves(usize),
    #[error("render parameters must be positive")]
    BadSpec,
    #[error("book has no leaves")]
    EmptyBook,
}

const PALETTE: [&str; 6] = ["#c0392b", "#2471a3", "#1e8449", "#8e44ad", "#d68910", "#17202a"];
const PAD: f64 = 16.0;

struct Frame {
    ox: f64,
    oy: f64,
    scale: f64,
    half_w: f64,
    half_h: f64,
}

impl Frame {
    fn map(&self, p: Point) -> (f64, f64) {
        (
            self.ox + PAD + (p.x + self.half_w) * self.scale,
            self.oy + PAD + (self.half_h - p.y) * self.scale,
        )
    }

    fn width(&self) -> f64 {
        2.0 * (self.half_w * self.scale + PAD)
    }

    fn height(&self) -> f64 {
        2.0 * (self.half_h * self.scale + PAD)
    }
}

fn polyline(out: &mut String, frame: &Frame, pts: &[Point], stroke: &str, width: f64, closed: bool) {
    if pts.len() < 2 {
        return;
    }
    let coords: Vec<String> = pts
        .iter()
        .map(|&p| {
            let (x, y) = frame.map(p);
            format!("{x:.2},{y:.2}")
        })
        .collect();
    let tag = if closed { "polygon" } else { "polyline" };
    let _ = writeln!(
        out,
        "  <{tag} points=\"{}\" fill=\"none\" stroke=\"{stroke}\" stroke-width=\"{width}\"/>",
        coords.join(" ")
    );
}

fn ellipse_points(family: &ConfocalFamily, lambda: f64, samples: usize) -> Vec<Point> {
    let (sa, sb) = family.semi_axes(lambda);
    (0..samples)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / samples as f64;
            Point::new(sa * t.cos(), sb * t.sin())
        })
        .collect()
}

/// Two branches of the confocal hyperbola, clipped to `|y| ≤ half_h`.
fn hyperbola_branches(family: &ConfocalFamily, lambda: f64, half_h: f64, samples: usize) -> [Vec<Point>; 2] {
    let sa = (family.a() - lambda).sqrt();
    let sb = (lambda - family.b()).sqrt();
    let umax = (half_h / sb).asinh();
    let branch = |sign: f64| {
        (0..=samples)
            .map(|i| {
                let u = -umax + 2.0 * umax * i as f64 / samples as f64;
                Point::new(sign * sa * u.cosh(), sb * u.sinh())
            })
            .collect()
    };
    [branch(1.0), branch(-1.0)]
}

fn leaf_outline(out: &mut String, frame: &Frame, family: &ConfocalFamily, leaf: &Leaf, spec: &RenderSpec) {
    for lambda in leaf.boundaries() {
        let pts = ellipse_points(family, lambda, spec.samples);
        polyline(out, frame, &pts, "#555555", spec.boundary_width, true);
    }
}

/// Segments of a trajectory, each tagged with the leaf it runs on.
fn segments(t: &Trajectory) -> Vec<(LeafId, Point, Point)> {
    let mut from = t.initial.position;
    t.events
        .iter()
        .map(|e| {
            let s = (e.leaf_before, from, e.hit_point);
            from = e.hit_point;
            s
        })
        .collect()
}

pub fn render_svg(book: &BilliardBook, trajectories: &[Trajectory], spec: &RenderSpec) -> Result<String, RenderError> {
    let n = book.leaves.len();
    if n == 0 {
        return Err(RenderError::EmptyBook);
    }
    if n > MAX_LEAVES {
        return Err(RenderError::TooManyLeaves(n));
    }
    if !(spec.scale > 0.0 && spec.samples >= 8 && spec.columns > 0 && spec.boundary_width > 0.0 && spec.trajectory_width > 0.0) {
        return Err(RenderError::BadSpec);
    }
    let family = &book.family;
    let outermost = book.boundary_params()[0];
    let (half_w, half_h) = family.semi_axes(outermost);
    let (half_w, half_h) = (half_w * 1.05, half_h * 1.05);
    let frame_at = |ox, oy| Frame {
        ox,
        oy,
        scale: spec.scale,
        half_w,
        half_h,
    };
    let probe = frame_at(0.0, 0.0);
    let (panels, cols) = match spec.layout {
        Layout::SideBySide => (n, spec.columns.min(n)),
        Layout::Overlay => (1, 1),
    };
    let rows = panels.div_ceil(cols);
    let (w, h) = (probe.width() * cols as f64, probe.height() * rows as f64);

    let mut out = String::new();
    let _ = writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.0} {h:.0}\">"
    );
    let _ = writeln!(out, "  <rect width=\"100%\" height=\"100%\" fill=\"white\"/>");

    match spec.layout {
        Layout::SideBySide => {
            for (i, leaf) in book.leaves.iter().enumerate() {
                let frame = frame_at(probe.width() * (i % cols) as f64, probe.height() * (i / cols) as f64);
                let _ = writeln!(out, "  <g id=\"leaf-{}\">", leaf.id.0);
                let _ = writeln!(
                    out,
                    "  <text x=\"{:.1}\" y=\"{:.1}\" font-family=\"sans-serif\" font-size=\"12\">{}</text>",
                    frame.ox + 4.0,
                    frame.oy + 12.0,
                    leaf.id
                );
                leaf_outline(&mut out, &frame, family, leaf, spec);
                for (k, t) in trajectories.iter().enumerate() {
                    let colour = PALETTE[k % PALETTE.len()];
                    for (l, p, q) in segments(t) {
                        if l == leaf.id {
                            polyline(&mut out, &frame, &[p, q], colour, spec.trajectory_width, false);
                        }
                    }
                }
                out.push_str("  </g>\n");
            }
        }
        Layout::Overlay => {
            let frame = probe;
            for lambda in book.boundary_params() {
                let pts = ellipse_points(family, lambda, spec.samples);
                polyline(&mut out, &frame, &pts, "#555555", spec.boundary_width, true);
            }
            for (k, t) in trajectories.iter().enumerate() {
                let colour = PALETTE[k % PALETTE.len()];
                if t.caustic < family.b() {
                    let pts = ellipse_points(family, t.caustic, spec.samples);
                    polyline(&mut out, &frame, &pts, colour, spec.trajectory_width / 2.0, true);
                } else if t.caustic < family.a() {
                    for b in hyperbola_branches(family, t.caustic, half_h, spec.samples) {
                        polyline(&mut out, &frame, &b, colour, spec.trajectory_width / 2.0, false);
                    }
                }
                for (_, p, q) in segments(t) {
                    polyline(&mut out, &frame, &[p, q], colour, spec.trajectory_width, false);
                }
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
