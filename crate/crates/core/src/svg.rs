//! SVG rendering of polygons with Doppler arrows.
//!
//! World +y points up in the picture. Output is deterministic: coordinates
//! are printed with a fixed number of decimals.

use std::fmt::Write as _;

use crate::geometry::{FreeSpaceMask, Point2, RadarPolygon, SectorConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvgStyle {
    /// Pixels per meter.
    pub scale: f64,
    /// Arrow length per m/s of Doppler, in meters.
    pub arrow_seconds: f64,
    pub fill: &'static str,
    pub margin: f64,
}

impl Default for SvgStyle {
    fn default() -> Self {
        Self {
            scale: 20.0,
            arrow_seconds: 1.0,
            fill: "#9ecae1",
            margin: 1.0,
        }
    }
}

struct Canvas {
    lo: Point2,
    hi: Point2,
    scale: f64,
    body: String,
}

impl Canvas {
    fn new(lo: Point2, hi: Point2, style: &SvgStyle) -> Self {
        let m = Point2::new(style.margin, style.margin);
        Self {
            lo: lo - m,
            hi: hi + m,
            scale: style.scale,
            body: String::new(),
        }
    }

    fn px(&self, p: Point2) -> (f64, f64) {
        (
            (p.x - self.lo.x) * self.scale,
            (self.hi.y - p.y) * self.scale,
        )
    }

    fn finish(self) -> String {
        let w = (self.hi.x - self.lo.x) * self.scale;
        let h = (self.hi.y - self.lo.y) * self.scale;
        format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w:.0}\" height=\"{h:.0}\" viewBox=\"0 0 {w:.2} {h:.2}\">\n\
             <defs><marker id=\"head\" markerWidth=\"6\" markerHeight=\"6\" refX=\"5\" refY=\"3\" orient=\"auto\">\
             <path d=\"M0,0 L6,3 L0,6 z\" fill=\"red\"/></marker></defs>\n\
             <rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n{}</svg>\n",
            self.body
        )
    }
}

/// Free cells drawn as light squares under the polygon.
fn draw_mask(c: &mut Canvas, mask: &FreeSpaceMask) {
    let r = mask.spec.resolution;
    let side = r * c.scale;
    for iy in 0..mask.spec.height {
        for ix in 0..mask.spec.width {
            if mask.get(ix, iy) {
                let center = mask.spec.cell_center(ix, iy);
                let (x, y) = c.px(center + Point2::new(-r / 2.0, r / 2.0));
                let _ = writeln!(
                    c.body,
                    "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{side:.2}\" height=\"{side:.2}\" fill=\"#d9d9d9\"/>"
                );
            }
        }
    }
}

/// Renders one polygon inside the field-of-view box of `sector`. An
/// optional ground-truth mask is drawn underneath.
pub fn polygon_svg(
    poly: &RadarPolygon,
    sector: &SectorConfig,
    gt: Option<&FreeSpaceMask>,
    style: &SvgStyle,
) -> String {
    let (mut lo, mut hi) = sector.bounding_box();
    for p in poly.ring() {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let mut c = Canvas::new(lo, hi, style);
    if let Some(mask) = gt {
        draw_mask(&mut c, mask);
    }
    let ring = poly.ring();
    if ring.len() >= 3 {
        let pts: Vec<String> = ring
            .iter()
            .map(|&p| {
                let (x, y) = c.px(p);
                format!("{x:.2},{y:.2}")
            })
            .collect();
        let _ = writeln!(
            c.body,
            "<polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.6\" stroke=\"#3182bd\" stroke-width=\"1\"/>",
            pts.join(" "),
            style.fill
        );
    }
    for v in &poly.vertices {
        let (x, y) = c.px(v.position);
        let color = if v.is_virtual { "#969696" } else { "black" };
        let _ = writeln!(
            c.body,
            "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"2\" fill=\"{color}\"/>"
        );
        let radial = v.position - poly.sensor_origin;
        let r = radial.norm();
        if v.is_virtual || v.doppler == 0.0 || r == 0.0 {
            continue;
        }
        let tip = v.position + radial * (v.doppler * style.arrow_seconds / r);
        let (tx, ty) = c.px(tip);
        let _ = writeln!(
            c.body,
            "<line x1=\"{x:.2}\" y1=\"{y:.2}\" x2=\"{tx:.2}\" y2=\"{ty:.2}\" stroke=\"red\" stroke-width=\"1.5\" marker-end=\"url(#head)\"/>"
        );
    }
    let (sx, sy) = c.px(poly.sensor_origin);
    let _ = writeln!(
        c.body,
        "<rect x=\"{:.2}\" y=\"{:.2}\" width=\"6\" height=\"6\" fill=\"#e6550d\"/>",
        sx - 3.0,
        sy - 3.0
    );
    let _ = writeln!(
        c.body,
        "<text x=\"4\" y=\"14\" font-family=\"monospace\" font-size=\"12\">t = {:.2} s</text>",
        poly.timestamp
    );
    c.finish()
}
