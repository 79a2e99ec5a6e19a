//! Deterministic SVG rendering of 3-class credal regions on the simplex.
//!
//! Barycentric convention: label 0 at the bottom-left corner, label 1 at the
//! bottom-right, label 2 at the top. The shaded region polygon comes from
//! the exact extreme points (no discretization), ordered by angle around
//! their centroid. Identical inputs produce byte-identical SVG.

use crate::error::{CredalError, Result};
use crate::region::CredalRegion;
use crate::simplex::ProbabilityVector;
use std::fmt::Write as _;
use std::path::Path;

const CANVAS_WIDTH: f64 = 640.0;
const CANVAS_HEIGHT: f64 = 600.0;
const MARGIN: f64 = 60.0;
const SIDE: f64 = CANVAS_WIDTH - 2.0 * MARGIN;
const SQRT3_2: f64 = 0.866_025_403_784_438_6;

/// Barycentric to canvas coordinates (y axis flipped for SVG).
pub fn to_canvas(lambda: &[f64]) -> (f64, f64) {
    let x = lambda[1] + 0.5 * lambda[2];
    let y = SQRT3_2 * lambda[2];
    (
        MARGIN + SIDE * x,
        CANVAS_HEIGHT - MARGIN - SIDE * y,
    )
}

fn coord(v: f64) -> String {
    format!("{v:.4}")
}

/// Render the region (and an optional plausibility marker) as an SVG
/// document. Only 3-class regions can be drawn.
pub fn render_ternary(region: &CredalRegion, lambda: Option<&ProbabilityVector>) -> Result<String> {
    if region.k() != 3 {
        return Err(CredalError::UnsupportedDimension {
            required: 3,
            got: region.k(),
        });
    }
    if let Some(lambda) = lambda {
        if lambda.k() != 3 {
            return Err(CredalError::DimensionMismatch {
                expected: 3,
                got: lambda.k(),
            });
        }
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{CANVAS_WIDTH}\" height=\"{CANVAS_HEIGHT}\" viewBox=\"0 0 {CANVAS_WIDTH} {CANVAS_HEIGHT}\">"
    );
    let _ = writeln!(
        svg,
        "<!-- ternary plot: corner 1 bottom-left, corner 2 bottom-right, corner 3 top (labels shown 1-indexed) -->"
    );
    let _ = writeln!(
        svg,
        "<rect width=\"{CANVAS_WIDTH}\" height=\"{CANVAS_HEIGHT}\" fill=\"white\"/>"
    );

    // simplex outline
    let corners = [
        to_canvas(&[1.0, 0.0, 0.0]),
        to_canvas(&[0.0, 1.0, 0.0]),
        to_canvas(&[0.0, 0.0, 1.0]),
    ];
    let _ = writeln!(
        svg,
        "<polygon points=\"{} {},{} {},{} {}\" fill=\"#f4f0fa\" stroke=\"#4a3d6b\" stroke-width=\"1.5\"/>",
        coord(corners[0].0),
        coord(corners[0].1),
        coord(corners[1].0),
        coord(corners[1].1),
        coord(corners[2].0),
        coord(corners[2].1),
    );

    // shaded region from the exact vertices
    let vertices = region.extreme_points();
    let mut planar: Vec<(f64, f64)> = vertices
        .vertices()
        .iter()
        .map(|v| to_canvas(v.entries()))
        .collect();
    let centroid = (
        planar.iter().map(|p| p.0).sum::<f64>() / planar.len() as f64,
        planar.iter().map(|p| p.1).sum::<f64>() / planar.len() as f64,
    );
    planar.sort_by(|a, b| {
        let angle_a = (a.1 - centroid.1).atan2(a.0 - centroid.0);
        let angle_b = (b.1 - centroid.1).atan2(b.0 - centroid.0);
        angle_a
            .total_cmp(&angle_b)
            .then(a.0.total_cmp(&b.0))
            .then(a.1.total_cmp(&b.1))
    });

    match planar.len() {
        1 => {
            let _ = writeln!(
                svg,
                "<circle cx=\"{}\" cy=\"{}\" r=\"4\" fill=\"#e8862d\" stroke=\"#1e1e1e\" stroke-width=\"1\"/>",
                coord(planar[0].0),
                coord(planar[0].1),
            );
        }
        2 => {
            let _ = writeln!(
                svg,
                "<line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"#e8862d\" stroke-width=\"4\" stroke-linecap=\"round\"/>",
                coord(planar[0].0),
                coord(planar[0].1),
                coord(planar[1].0),
                coord(planar[1].1),
            );
        }
        _ => {
            let mut points = String::new();
            for (i, p) in planar.iter().enumerate() {
                if i > 0 {
                    points.push(',');
                }
                let _ = write!(points, "{} {}", coord(p.0), coord(p.1));
            }
            let _ = writeln!(
                svg,
                "<polygon points=\"{points}\" fill=\"#e8862d\" fill-opacity=\"0.55\" stroke=\"#1e1e1e\" stroke-width=\"1.5\"/>"
            );
        }
    }

    // optional marker for the annotated distribution
    if let Some(lambda) = lambda {
        let (x, y) = to_canvas(lambda.entries());
        let _ = writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"5\" fill=\"none\" stroke=\"#0c5da5\" stroke-width=\"2\"/>",
            coord(x),
            coord(y),
        );
        let _ = writeln!(
            svg,
            "<circle cx=\"{}\" cy=\"{}\" r=\"1.5\" fill=\"#0c5da5\"/>",
            coord(x),
            coord(y),
        );
    }

    // corner labels, 1-indexed unless the label space names them
    let space = region.label_space();
    let offsets = [(-14.0, 18.0), (6.0, 18.0), (-4.0, -10.0)];
    for (label, (corner, offset)) in corners.iter().zip(offsets).enumerate() {
        let _ = writeln!(
            svg,
            "<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"16\" fill=\"#1e1e1e\">{}</text>",
            coord(corner.0 + offset.0),
            coord(corner.1 + offset.1),
            space.display_name(label),
        );
    }

    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Render and write atomically.
pub fn write_ternary_svg(
    region: &CredalRegion,
    lambda: Option<&ProbabilityVector>,
    path: &Path,
) -> Result<()> {
    let svg = render_ternary(region, lambda)?;
    crate::dataset::write_atomic(path, svg.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calibration::ConformityScores;

    fn region(scores: &[f64], tau: f64) -> CredalRegion {
        CredalRegion::from_scores(ConformityScores::new(scores.to_vec()).unwrap(), tau).unwrap()
    }

    fn fixture_region() -> CredalRegion {
        region(&[0.7, 0.2, 0.1], 0.25)
    }

    #[test]
    fn rejects_non_ternary_regions() {
        let r = region(&[0.6, 0.4], 0.5);
        assert!(matches!(
            render_ternary(&r, None),
            Err(CredalError::UnsupportedDimension { required: 3, got: 2 })
        ));
    }

    #[test]
    fn vacuous_region_fills_the_triangle() {
        let r = region(&[0.5, 0.3, 0.2], f64::NEG_INFINITY);
        let svg = render_ternary(&r, None).unwrap();
        // two polygons: the simplex outline and the shaded region; for the
        // vacuous region they have identical vertex sets
        let polygons: Vec<&str> = svg
            .lines()
            .filter(|l| l.starts_with("<polygon"))
            .collect();
        assert_eq!(polygons.len(), 2);
        let coords = |s: &str| -> Vec<(f64, f64)> {
            let start = s.find("points=\"").unwrap() + 8;
            let end = s[start..].find('"').unwrap() + start;
            s[start..end]
                .split(',')
                .map(|pair| {
                    let mut it = pair.split_whitespace();
                    (
                        it.next().unwrap().parse().unwrap(),
                        it.next().unwrap().parse().unwrap(),
                    )
                })
                .collect()
        };
        let mut outline = coords(polygons[0]);
        let mut shaded = coords(polygons[1]);
        outline.sort_by(|a, b| a.partial_cmp(b).unwrap());
        shaded.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(outline, shaded);
    }

    #[test]
    fn fixture_polygon_matches_extreme_points() {
        let r = fixture_region();
        let svg = render_ternary(&r, None).unwrap();
        let shaded = svg
            .lines()
            .filter(|l| l.starts_with("<polygon"))
            .nth(1)
            .unwrap();
        let start = shaded.find("points=\"").unwrap() + 8;
        let end = shaded[start..].find('"').unwrap() + start;
        let points: Vec<(f64, f64)> = shaded[start..end]
            .split(',')
            .map(|pair| {
                let mut it = pair.split_whitespace();
                (
                    it.next().unwrap().parse().unwrap(),
                    it.next().unwrap().parse().unwrap(),
                )
            })
            .collect();
        let expected: Vec<(f64, f64)> = r
            .extreme_points()
            .vertices()
            .iter()
            .map(|v| to_canvas(v.entries()))
            .collect();
        assert_eq!(points.len(), 3);
        for want in expected {
            let close = points
                .iter()
                .any(|p| (p.0 - want.0).abs() < 1e-6 + 1e-4 && (p.1 - want.1).abs() < 1e-6 + 1e-4);
            assert!(close, "vertex {want:?} missing from polygon {points:?}");
        }
    }

    #[test]
    fn single_point_region_renders_marker() {
        let r = region(&[1.0, 0.0, 0.0], 1.0);
        let svg = render_ternary(&r, None).unwrap();
        assert!(svg.contains("<circle"));
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn rendering_is_byte_deterministic() {
        let r = fixture_region();
        let lambda = ProbabilityVector::new(vec![0.5, 0.3, 0.2]).unwrap();
        let a = render_ternary(&r, Some(&lambda)).unwrap();
        let b = render_ternary(&r, Some(&lambda)).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("stroke=\"#0c5da5\""));
    }
}
