use num_complex::Complex64;
use rayon::prelude::*;

use super::inverse::ImageMesh;
use super::{
    decompose, solve_beltrami, BeltramiError, ConformalDecomposition, Normalization, PlaneDiffeo,
    SolveReport, SolverOptions,
};
use crate::field::{Lattice, MetricGrid, ScalarGrid};

/// `f = log(λ |φ_z|⁻²) ∘ φ⁻¹` on the largest centred square, with the map's
/// spacing, that the image of the map's window is known to cover.
pub fn recover_factor(
    d: &ConformalDecomposition,
    phi: &PlaneDiffeo,
) -> Result<ScalarGrid, BeltramiError> {
    let target = covered_lattice(phi)?;
    recover_factor_on(d, phi, &target)
}

/// As [`recover_factor`], on a caller-chosen lattice in the image plane.
pub fn recover_factor_on(
    d: &ConformalDecomposition,
    phi: &PlaneDiffeo,
    target: &Lattice,
) -> Result<ScalarGrid, BeltramiError> {
    let source = phi.lattice();
    let n = source.n();
    let factor: Vec<f64> = (0..source.len())
        .map(|k| {
            let (x, y) = source.point(k % n, k / n);
            match d.lambda.interpolate(x, y) {
                Some(l) => l.ln() - 2.0 * phi.dz()[k].norm().ln(),
                None => f64::NAN,
            }
        })
        .collect();
    let mesh = ImageMesh::new(n, phi.map().values(), |k| factor[k].is_finite());
    ScalarGrid::try_from_fn(*target, |_, _, x, y| {
        let (v, bary) = mesh
            .locate(Complex64::new(x, y))
            .ok_or(BeltramiError::InverseOutside { x, y })?;
        Ok(v.iter().zip(bary).map(|(&k, b)| b * factor[k]).sum())
    })
}

/// Half-width of a centred square inside the image of the map's window:
/// the smallest sup-norm of the image of the window boundary.
fn covered_lattice(phi: &PlaneDiffeo) -> Result<Lattice, BeltramiError> {
    let l = phi.lattice();
    let n = l.n();
    let mut rho = f64::INFINITY;
    for k in 0..n {
        for (i, j) in [(k, 0), (k, n - 1), (0, k), (n - 1, k)] {
            let w = phi.at(i, j);
            rho = rho.min(w.re.abs().max(w.im.abs()));
        }
    }
    let h = l.spacing();
    let steps = (rho / h + 1e-9).floor() as usize;
    if steps == 0 {
        return Err(BeltramiError::InvalidParameter(
            "image of the window does not cover a neighbourhood of 0".into(),
        ));
    }
    Ok(Lattice::new(steps as f64 * h, 2 * steps + 1)?)
}

/// `φ*g` at every node of the map's lattice.
pub fn pullback(g: &MetricGrid, phi: &PlaneDiffeo) -> Result<MetricGrid, BeltramiError> {
    let l = *phi.lattice();
    pullback_on(g, phi, l, 0)
}

/// `φ*g` on the sub-lattice `sub` placed at node offset `offset` of the map's
/// lattice (see [`Lattice::inner`]).
pub fn pullback_on(
    g: &MetricGrid,
    phi: &PlaneDiffeo,
    sub: Lattice,
    offset: usize,
) -> Result<MetricGrid, BeltramiError> {
    let n = phi.lattice().n();
    let forms: Vec<(f64, f64, f64)> = (0..sub.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % sub.n() + offset, k / sub.n() + offset);
            let w = phi.at(i, j);
            let (e, f, gg) = g.interpolate(w.re, w.im).ok_or(BeltramiError::ImageOutside {
                i,
                j,
                x: w.re,
                y: w.im,
            })?;
            let idx = j * n + i;
            Ok(pull_form((e, f, gg), phi.dz()[idx], phi.dzbar()[idx]))
        })
        .collect::<Result<_, BeltramiError>>()?;
    let grid = |sel: fn(&(f64, f64, f64)) -> f64| {
        ScalarGrid::from_values(sub, forms.iter().map(sel).collect())
    };
    Ok(MetricGrid::new(grid(|t| t.0)?, grid(|t| t.1)?, grid(|t| t.2)?)?)
}

/// `(E, F, G)` of `g(Dφ·, Dφ·)` with `φ_x = φ_z + φ_z̄`, `φ_y = i(φ_z − φ_z̄)`.
fn pull_form(g: (f64, f64, f64), dz: Complex64, dzbar: Complex64) -> (f64, f64, f64) {
    let (e, f, gg) = g;
    let px = dz + dzbar;
    let py = Complex64::new(0.0, 1.0) * (dz - dzbar);
    let form = |a: Complex64, b: Complex64| {
        e * a.re * b.re + f * (a.re * b.im + a.im * b.re) + gg * a.im * b.im
    };
    (form(px, px), form(px, py), form(py, py))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct RoundtripOptions {
    /// Half-width of the comparison window as a fraction of the grid's.
    pub inner_fraction: f64,
    pub tol: f64,
    pub max_iterations: usize,
}

impl Default for RoundtripOptions {
    fn default() -> Self {
        Self {
            inner_fraction: 0.5,
            tol: 1e-10,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct RoundtripReport {
    /// `max |Δ(E, F, G)| / max(E, G)` over the comparison window.
    pub deviation: f64,
    pub worst_node: (usize, usize),
    pub worst_point: (f64, f64),
    pub inner_half_width: f64,
    pub solve: SolveReport,
    pub normalization: Normalization,
    pub factor_window: Lattice,
    pub factor_min: f64,
    pub factor_max: f64,
}

/// decompose → solve → recover `f` → pull back `e^f g₀` and compare with `g`.
///
/// The solver runs on the grid's own lattice, so `n − 1` must be even.
pub fn pi_roundtrip(
    g: &MetricGrid,
    opts: &RoundtripOptions,
) -> Result<RoundtripReport, BeltramiError> {
    let lattice = *g.lattice();
    let d = decompose(g)?;
    let mut solver = SolverOptions::new(lattice.half_width(), lattice.n() - 1);
    solver.tol = opts.tol;
    solver.max_iterations = opts.max_iterations;
    let phi = solve_beltrami(&d.mu, &solver)?;
    let f = recover_factor(&d, &phi)?;
    let (inner, offset) = lattice.inner(opts.inner_fraction * lattice.half_width())?;
    let pulled = pullback_on(&MetricGrid::conformal(f.map(f64::exp))?, &phi, inner, offset)?;

    let mut deviation = 0.0;
    let mut worst = (0, 0);
    for j in 0..inner.n() {
        for i in 0..inner.n() {
            let (e, ff, gg) = g.at(i + offset, j + offset);
            let (e2, f2, g2) = pulled.at(i, j);
            let dev = (e - e2).abs().max((ff - f2).abs()).max((gg - g2).abs()) / e.max(gg);
            if dev > deviation {
                deviation = dev;
                worst = (i + offset, j + offset);
            }
        }
    }
    let ((factor_min, _), (factor_max, _)) = f.extremes();
    Ok(RoundtripReport {
        deviation,
        worst_node: worst,
        worst_point: lattice.point(worst.0, worst.1),
        inner_half_width: inner.half_width(),
        solve: phi.solve_report().cloned().expect("solver output"),
        normalization: phi.normalization(),
        factor_window: *f.lattice(),
        factor_min,
        factor_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::{reconstruct, BeltramiCoefficient, ComplexGrid};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn linear_pullbacks_match_matrix_products() {
        let lattice = Lattice::new(1.0, 9).unwrap();
        let g0 = MetricGrid::euclidean(Lattice::new(3.0, 9).unwrap());
        let phi = PlaneDiffeo::from_fn(lattice, |z| z + 0.3 * z.conj()).unwrap();
        let p = pullback(&g0, &phi).unwrap();
        let (e, f, g) = p.at(4, 2);
        assert!((e - 1.69).abs() < 1e-13 && f.abs() < 1e-13 && (g - 0.49).abs() < 1e-13);

        // z + 0.2i z̄ is the real matrix [[1, 0.2], [0.2, 1]].
        let phi = PlaneDiffeo::from_fn(lattice, |z| z + c(0.0, 0.2) * z.conj()).unwrap();
        let p = pullback(&g0, &phi).unwrap();
        let (e, f, g) = p.at(7, 1);
        assert!((e - 1.04).abs() < 1e-13, "{e}");
        assert!((f - 0.4).abs() < 1e-13, "{f}");
        assert!((g - 1.04).abs() < 1e-13, "{g}");
    }

    #[test]
    fn pullback_outside_grid_is_reported() {
        let lattice = Lattice::new(2.0, 9).unwrap();
        let g0 = MetricGrid::euclidean(Lattice::new(1.0, 9).unwrap());
        let phi = PlaneDiffeo::from_fn(lattice, |z| z).unwrap();
        assert!(matches!(
            pullback(&g0, &phi),
            Err(BeltramiError::ImageOutside { .. })
        ));
    }

    #[test]
    fn conformal_metric_recovers_minus_two_u() {
        let lattice = Lattice::new(2.0, 33).unwrap();
        let u = |x: f64, y: f64| 0.3 * x - 0.1 * y * y;
        let lambda = ScalarGrid::try_from_fn(lattice, |_, _, x, y| {
            Ok::<_, BeltramiError>((-2.0 * u(x, y)).exp())
        })
        .unwrap();
        let mu = BeltramiCoefficient::constant(lattice, c(0.0, 0.0)).unwrap();
        let d = ConformalDecomposition::new(lambda, mu).unwrap();
        let phi = PlaneDiffeo::from_fn(lattice, |z| z).unwrap();
        let f = recover_factor(&d, &phi).unwrap();
        assert_eq!(f.lattice(), &lattice);
        for (i, j, v) in f.valid_nodes() {
            let (x, y) = lattice.point(i, j);
            assert!((v + 2.0 * u(x, y)).abs() < 1e-12);
        }
    }

    #[test]
    fn roundtrip_of_euclidean_metric_is_exact() {
        let g = MetricGrid::euclidean(Lattice::new(4.0, 65).unwrap());
        let r = pi_roundtrip(&g, &RoundtripOptions::default()).unwrap();
        assert!(r.deviation < 1e-12, "{}", r.deviation);
        assert_eq!(r.inner_half_width, 2.0);
    }

    #[test]
    fn roundtrip_of_sheared_metric() {
        let lattice = Lattice::new(4.0, 129).unwrap();
        let d = ConformalDecomposition::new(
            ScalarGrid::constant(lattice, 1.0),
            BeltramiCoefficient::new(ComplexGrid::from_fn(lattice, |z| {
                c(0.0, 0.2) * (-(z.norm_sqr() / 2.0)).exp()
            }))
            .unwrap(),
        )
        .unwrap();
        let g = reconstruct(&d).unwrap();
        let r = pi_roundtrip(&g, &RoundtripOptions::default()).unwrap();
        assert!(r.deviation < 1e-2, "{}", r.deviation);
    }
}
