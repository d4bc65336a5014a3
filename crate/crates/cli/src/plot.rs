//! CSV tables and SVG heatmaps.

use std::fmt::Write as _;

use confplane::asymptotics::RadialMaxProfile;
use confplane::oracle::EscapeReport;
use confplane::ScalarGrid;

pub fn profile_csv(p: &RadialMaxProfile) -> String {
    let mut out = String::from("r,log_r,max_u\n");
    for (r, v) in p.radii.iter().zip(&p.values) {
        writeln!(out, "{r},{},{v}", r.ln()).unwrap();
    }
    out
}

pub fn rays_csv(report: &EscapeReport) -> String {
    let mut out = String::from("ray,angle,radius,partial_length\n");
    for ray in &report.rays {
        for (r, len) in report.checkpoints.iter().zip(&ray.partial) {
            writeln!(out, "{},{},{r},{len}", ray.index, ray.angle).unwrap();
        }
    }
    out
}

const MAX_CELLS: usize = 160;
const CELL: f64 = 4.0;

// Five-stop blue → white → red scale for signed data, sequential otherwise.
fn colour(t: f64, signed: bool) -> String {
    if !t.is_finite() {
        return "#999999".into();
    }
    let stops: [(f64, [f64; 3]); 3] = if signed {
        [(0.0, [33.0, 102.0, 172.0]), (0.5, [247.0, 247.0, 247.0]), (1.0, [178.0, 24.0, 43.0])]
    } else {
        [(0.0, [13.0, 8.0, 135.0]), (0.5, [204.0, 71.0, 120.0]), (1.0, [240.0, 249.0, 33.0])]
    };
    let t = t.clamp(0.0, 1.0);
    let k = if t <= 0.5 { 0 } else { 1 };
    let (t0, c0) = stops[k];
    let (t1, c1) = stops[k + 1];
    let w = (t - t0) / (t1 - t0);
    let c: Vec<u8> = (0..3).map(|i| (c0[i] + w * (c1[i] - c0[i])).round() as u8).collect();
    format!("#{:02x}{:02x}{:02x}", c[0], c[1], c[2])
}

/// Heatmap of a grid, `y` increasing upwards. Large grids are subsampled;
/// signed data is centred on zero.
pub fn heatmap(grid: &ScalarGrid, title: &str) -> String {
    let lattice = grid.lattice();
    let n = lattice.n();
    let stride = n.div_ceil(MAX_CELLS);
    let idx: Vec<usize> = (0..n).step_by(stride).collect();
    let finite = || grid.values().iter().copied().filter(|v| v.is_finite() && v.abs() < f64::MAX);
    let lo = finite().fold(f64::INFINITY, f64::min);
    let hi = finite().fold(f64::NEG_INFINITY, f64::max);
    let signed = lo < 0.0 && hi > 0.0;
    let scale = |v: f64| {
        if signed {
            let m = lo.abs().max(hi.abs());
            0.5 + 0.5 * v / m
        } else if hi > lo {
            (v - lo) / (hi - lo)
        } else {
            0.5
        }
    };
    let side = idx.len() as f64 * CELL;
    let mut svg = String::new();
    writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" shape-rendering="crispEdges">"#,
        side + 20.0,
        side + 60.0
    )
    .unwrap();
    writeln!(svg, r#"<text x="10" y="20" font-family="monospace" font-size="12">{title}</text>"#).unwrap();
    for (row, &j) in idx.iter().enumerate() {
        let y = 30.0 + (idx.len() - 1 - row) as f64 * CELL;
        for (col, &i) in idx.iter().enumerate() {
            let v = grid.get(i, j);
            let t = if v.is_finite() && v.abs() < f64::MAX { scale(v) } else { f64::NAN };
            writeln!(
                svg,
                r#"<rect x="{}" y="{y}" width="{CELL}" height="{CELL}" fill="{}"/>"#,
                10.0 + col as f64 * CELL,
                colour(t, signed)
            )
            .unwrap();
        }
    }
    writeln!(
        svg,
        r#"<text x="10" y="{}" font-family="monospace" font-size="11">min {lo:.6e}  max {hi:.6e}  window [-{L}, {L}]²</text>"#,
        side + 48.0,
        L = lattice.half_width()
    )
    .unwrap();
    svg.push_str("</svg>\n");
    svg
}

#[cfg(test)]
mod tests {
    use super::*;
    use confplane::Lattice;

    #[test]
    fn heatmap_has_one_rect_per_sampled_cell() {
        let g = ScalarGrid::try_from_fn(Lattice::new(1.0, 9).unwrap(), |_, _, x, y| {
            Ok::<_, ()>(x - y)
        })
        .unwrap();
        let svg = heatmap(&g, "x-y");
        assert_eq!(svg.matches("<rect").count(), 81);
        assert!(svg.starts_with("<svg"));
        assert!(svg.trim_end().ends_with("</svg>"));
    }

    #[test]
    fn colours_are_hex() {
        assert_eq!(colour(0.5, true), "#f7f7f7");
        assert_eq!(colour(f64::NAN, false), "#999999");
        assert_eq!(colour(0.0, false), "#0d0887");
    }
}
