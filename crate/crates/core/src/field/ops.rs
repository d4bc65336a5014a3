use rayon::prelude::*;
use serde::Serialize;

use super::{FieldError, Lattice, ScalarGrid};
use crate::expr::Expr;

/// Samples `expr` on `[-L, L]²` with `n` nodes per axis.
pub fn sample(expr: &Expr, half_width: f64, n: usize) -> Result<ScalarGrid, FieldError> {
    ScalarGrid::from_expr(expr, Lattice::new(half_width, n)?)
}

/// Five-point Laplacian on interior nodes; the boundary ring is invalid.
pub fn laplacian(u: &ScalarGrid) -> ScalarGrid {
    let lattice = *u.lattice();
    let n = lattice.n();
    let inv_h2 = 1.0 / (lattice.spacing() * lattice.spacing());
    let values: Vec<f64> = (0..n)
        .into_par_iter()
        .flat_map_iter(|j| {
            (0..n).map(move |i| {
                if i == 0 || j == 0 || i + 1 == n || j + 1 == n {
                    return 0.0;
                }
                let c = u.get(i, j);
                (u.get(i + 1, j) + u.get(i - 1, j) + u.get(i, j + 1) + u.get(i, j - 1) - 4.0 * c)
                    * inv_h2
            })
        })
        .collect();
    ScalarGrid::interior_only(lattice, values)
}

/// Default subharmonicity tolerance: `1e-8 · max|u| / h²`, the size of
/// round-off in the stencil.
pub fn default_tolerance(u: &ScalarGrid) -> f64 {
    let scale = u.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let h = u.lattice().spacing();
    1e-8 * scale / (h * h)
}

/// Gauss curvature `K = e^{2u} Δu` of the metric `e^{-2u} g₀`.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    /// Curvature on interior nodes. Unbounded nodes hold `±f64::MAX`.
    pub k: ScalarGrid,
    /// Interior nodes where `e^{2u} Δu` overflows.
    pub unbounded: Vec<(usize, usize)>,
    pub min: f64,
    pub max: f64,
}

impl CurvatureField {
    pub fn is_bounded(&self) -> bool {
        self.unbounded.is_empty()
    }

    /// `max |K| ≤ tol` on interior nodes.
    pub fn is_flat(&self, tol: f64) -> bool {
        self.is_bounded() && self.min.abs() <= tol && self.max.abs() <= tol
    }
}

pub fn curvature(u: &ScalarGrid) -> CurvatureField {
    let lap = laplacian(u);
    let lattice = *u.lattice();
    let mut unbounded = Vec::new();
    let mut values = vec![0.0; lattice.len()];
    for (i, j, d) in lap.valid_nodes() {
        let k = if d == 0.0 {
            0.0
        } else {
            // e^{2u}|Δu| computed in log space.
            let log_mag = 2.0 * u.get(i, j) + d.abs().ln();
            if log_mag >= f64::MAX.ln() {
                unbounded.push((i, j));
                f64::MAX.copysign(d)
            } else {
                log_mag.exp().copysign(d)
            }
        };
        values[lattice.index(i, j)] = k;
    }
    let k = ScalarGrid::interior_only(lattice, values);
    let ((min, _), (max, _)) = k.extremes();
    CurvatureField {
        k,
        unbounded,
        min,
        max,
    }
}

/// Outcome of the discrete subharmonicity test.
#[derive(Debug, Clone, Serialize)]
pub struct SubharmonicVerdict {
    pub pass: bool,
    pub min_laplacian: f64,
    pub argmin: (usize, usize),
    pub argmin_point: (f64, f64),
    pub tol: f64,
}

/// Passes iff the interior minimum of `Δu` is at least `-tol`.
pub fn is_subharmonic(u: &ScalarGrid, tol: Option<f64>) -> SubharmonicVerdict {
    let tol = tol.unwrap_or_else(|| default_tolerance(u));
    let lap = laplacian(u);
    let ((min, argmin), _) = lap.extremes();
    SubharmonicVerdict {
        pass: min >= -tol,
        min_laplacian: min,
        argmin,
        argmin_point: u.lattice().point(argmin.0, argmin.1),
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{laplacian as symbolic_laplacian, parse};

    fn grid(src: &str, l: f64, n: usize) -> ScalarGrid {
        sample(&parse(src).unwrap(), l, n).unwrap()
    }

    #[test]
    fn sample_examples() {
        let z = grid("0", 1.0, 5);
        assert!(z.values().iter().all(|&v| v == 0.0));
        let x = grid("x", 1.0, 3);
        for j in 0..3 {
            assert_eq!(
                (x.get(0, j), x.get(1, j), x.get(2, j)),
                (-1.0, 0.0, 1.0)
            );
        }
        let g = grid("log(1+x^2+y^2)", 2.0, 65);
        assert_eq!(g.get(32, 32), 0.0);
        assert!((g.get(64, 64) - 9f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn sample_reports_failing_node() {
        let err = sample(&parse("log(x)").unwrap(), 1.0, 3).unwrap_err();
        assert!(matches!(err, FieldError::Eval { i: 0, j: 0, .. }));
    }

    #[test]
    fn laplacian_examples() {
        let c = laplacian(&grid("7", 1.0, 9));
        assert!(c.valid_nodes().all(|(_, _, v)| v == 0.0));
        let q = laplacian(&grid("x^2+y^2", 1.0, 17));
        assert!(q.valid_nodes().all(|(_, _, v)| (v - 4.0).abs() < 1e-10));
        assert!(!q.ring_valid());
        // Symbolic oracle: Δ log(1+r²) = 4 at the origin.
        let n = 65;
        let l = laplacian(&grid("log(1+x^2+y^2)", 2.0, n));
        let h = 4.0 / (n - 1) as f64;
        assert!((l.get(32, 32) - 4.0).abs() < 10.0 * h * h);
    }

    #[test]
    fn laplacian_matches_symbolic_at_second_order() {
        let e = parse("sin(x)*exp(0.5*y)+atan(x*y)").unwrap();
        let sym = symbolic_laplacian(&e);
        let mut errs = Vec::new();
        for n in [33, 65, 129] {
            let g = sample(&e, 1.0, n).unwrap();
            let lap = laplacian(&g);
            let err = lap
                .valid_nodes()
                .map(|(i, j, v)| {
                    let (x, y) = g.lattice().point(i, j);
                    (v - sym.eval(x, y).unwrap()).abs()
                })
                .fold(0.0, f64::max);
            errs.push(err);
        }
        assert!(errs[0] / errs[1] > 3.0 && errs[1] / errs[2] > 3.0, "{errs:?}");
    }

    #[test]
    fn curvature_examples() {
        let flat = curvature(&grid("3", 1.0, 9));
        assert!(flat.is_flat(0.0));
        let harmonic = curvature(&grid("x", 1.0, 9));
        assert!(harmonic.is_flat(1e-9));
        let sphere = curvature(&grid("log(1+x^2+y^2)", 2.0, 257));
        assert!((sphere.min - 4.0).abs() <= 1e-3 && (sphere.max - 4.0).abs() <= 1e-3);
    }

    #[test]
    fn curvature_overflow_is_flagged_not_nan() {
        let k = curvature(&grid("400*(x^2+y^2)", 2.0, 9));
        assert!(!k.is_bounded());
        assert!(k.k.values().iter().all(|v| v.is_finite()));
        assert_eq!(k.max, f64::MAX);
    }

    #[test]
    fn subharmonic_examples() {
        let v = is_subharmonic(&grid("x^2+y^2", 1.0, 17), None);
        assert!(v.pass);
        assert!((v.min_laplacian - 4.0).abs() < 1e-9);
        let v = is_subharmonic(&grid("-(x^2)", 1.0, 17), None);
        assert!(!v.pass);
        assert!((v.min_laplacian + 2.0).abs() < 1e-9);
        let v = is_subharmonic(&grid("0.5*log(1+x^2+y^2)", 2.0, 65), None);
        assert!(v.pass && v.min_laplacian > 0.0);
    }

    #[test]
    fn curvature_sign_agrees_with_verdict() {
        for src in ["x^2-y^2+0.1*x^2", "0.3*log(1+x^2+y^2)", "-(x^2)-y^2", "x*y"] {
            let u = grid(src, 1.5, 41);
            let verdict = is_subharmonic(&u, None);
            let k = curvature(&u);
            let scale = u.values().iter().map(|v| (2.0 * v).exp()).fold(0.0, f64::max);
            assert_eq!(k.min >= -verdict.tol * scale, verdict.pass, "{src}");
        }
    }
}
