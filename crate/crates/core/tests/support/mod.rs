//! Helpers shared by the integration tests.

#![allow(dead_code)]

use confplane::field::{Lattice, MetricGrid};

/// Gauss curvature of `E dx² + 2F dx dy + G dy²` by the Brioschi formula,
/// with fourth-order centred differences. Entries on the two outer rings
/// are `NaN`.
pub fn brioschi(g: &MetricGrid) -> Vec<f64> {
    let l: Lattice = *g.lattice();
    let n = l.n();
    let h = l.spacing();
    let mut out = vec![f64::NAN; l.len()];
    for j in 2..n - 2 {
        for i in 2..n - 2 {
            let at = |c: &confplane::ScalarGrid, di: isize, dj: isize| {
                c.get((i as isize + di) as usize, (j as isize + dj) as usize)
            };
            // Fourth-order centred stencils.
            let w = [(-2isize, 1.0), (-1, -8.0), (1, 8.0), (2, -1.0)];
            let dx = |c| w.iter().map(|&(k, a)| a * at(c, k, 0)).sum::<f64>() / (12.0 * h);
            let dy = |c| w.iter().map(|&(k, a)| a * at(c, 0, k)).sum::<f64>() / (12.0 * h);
            let w2 = [(-2isize, -1.0), (-1, 16.0), (0, -30.0), (1, 16.0), (2, -1.0)];
            let dxx = |c| w2.iter().map(|&(k, a)| a * at(c, k, 0)).sum::<f64>() / (12.0 * h * h);
            let dyy = |c| w2.iter().map(|&(k, a)| a * at(c, 0, k)).sum::<f64>() / (12.0 * h * h);
            let dxy = |c| {
                let mut acc = 0.0;
                for &(p, a) in &w {
                    for &(q, b) in &w {
                        acc += a * b * at(c, p, q);
                    }
                }
                acc / (144.0 * h * h)
            };
            let (e, f, gg) = g.at(i, j);
            let (ex, ey) = (dx(&g.e), dy(&g.e));
            let (fx, fy) = (dx(&g.f), dy(&g.f));
            let (gx, gy) = (dx(&g.g), dy(&g.g));
            let a = [
                [-0.5 * dyy(&g.e) + dxy(&g.f) - 0.5 * dxx(&g.g), 0.5 * ex, fx - 0.5 * ey],
                [fy - 0.5 * gx, e, f],
                [0.5 * gy, f, gg],
            ];
            let b = [[0.0, 0.5 * ey, 0.5 * gx], [0.5 * ey, e, f], [0.5 * gx, f, gg]];
            let det = e * gg - f * f;
            out[l.index(i, j)] = (det3(a) - det3(b)) / (det * det);
        }
    }
    out
}

fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}
