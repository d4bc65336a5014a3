//! Normal form of a metric on the plane.
//!
//! A positive definite metric `E dx² + 2F dx dy + G dy²` is written as
//! `λ |dz + μ dz̄|²` with `λ > 0` and `|μ| < 1`. Solving the Beltrami equation
//! `φ_z̄ = μ φ_z` gives a diffeomorphism `φ` fixing 0 and 1, and the metric
//! becomes the pullback of the conformal metric `e^f g₀` with
//! `f = log(λ |φ_z|⁻²) ∘ φ⁻¹`.

mod fft;
mod inverse;
mod pipeline;
mod solver;

use num_complex::Complex64;
use rayon::prelude::*;
use thiserror::Error;

use crate::field::{FieldError, Lattice, MetricGrid, ScalarGrid};

pub use pipeline::{
    pi_roundtrip, pullback, pullback_on, recover_factor, recover_factor_on, RoundtripOptions,
    RoundtripReport,
};
pub use solver::{solve_beltrami, SolveReport, SolverOptions, Taper};

#[derive(Debug, Error)]
pub enum BeltramiError {
    #[error("metric is not positive definite at node ({i}, {j})")]
    NotPositiveDefinite { i: usize, j: usize },
    #[error("|mu| = {modulus} is not below 1 at node ({i}, {j})")]
    NotContracting { i: usize, j: usize, modulus: f64 },
    #[error("map reverses orientation at node ({i}, {j}): Jacobian {jacobian}")]
    Orientation { i: usize, j: usize, jacobian: f64 },
    #[error(
        "fixed-point iteration stopped after {iterations} iterations with residual {residual:e} \
         (contraction estimate {contraction})"
    )]
    NoConvergence {
        iterations: usize,
        residual: f64,
        contraction: f64,
    },
    #[error("no preimage of ({x}, {y}) inside the map's window")]
    InverseOutside { x: f64, y: f64 },
    #[error("image ({x}, {y}) of node ({i}, {j}) lies outside the metric grid")]
    ImageOutside { i: usize, j: usize, x: f64, y: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Field(#[from] FieldError),
}

/// Complex values at the nodes of a [`Lattice`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexGrid {
    lattice: Lattice,
    values: Vec<Complex64>,
}

impl ComplexGrid {
    pub fn from_values(lattice: Lattice, values: Vec<Complex64>) -> Result<Self, FieldError> {
        if values.len() != lattice.len() {
            return Err(FieldError::InvalidLattice(format!(
                "expected {} values, got {}",
                lattice.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
            return Err(FieldError::NonFinite {
                i: k % lattice.n(),
                j: k / lattice.n(),
            });
        }
        Ok(Self { lattice, values })
    }

    pub fn from_fn(lattice: Lattice, f: impl Fn(Complex64) -> Complex64 + Sync) -> Self {
        let n = lattice.n();
        let values = (0..lattice.len())
            .into_par_iter()
            .map(|k| {
                let (x, y) = lattice.point(k % n, k / n);
                f(Complex64::new(x, y))
            })
            .collect();
        Self { lattice, values }
    }

    /// Pairs a real and an imaginary part grid.
    pub fn from_parts(re: &ScalarGrid, im: &ScalarGrid) -> Result<Self, FieldError> {
        if re.lattice() != im.lattice() {
            return Err(FieldError::LatticeMismatch);
        }
        let values = re
            .values()
            .iter()
            .zip(im.values())
            .map(|(&a, &b)| Complex64::new(a, b))
            .collect();
        Ok(Self {
            lattice: *re.lattice(),
            values,
        })
    }

    pub fn re(&self) -> ScalarGrid {
        ScalarGrid::from_values(self.lattice, self.values.iter().map(|v| v.re).collect())
            .expect("finite by construction")
    }

    pub fn im(&self) -> ScalarGrid {
        ScalarGrid::from_values(self.lattice, self.values.iter().map(|v| v.im).collect())
            .expect("finite by construction")
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[self.lattice.index(i, j)]
    }

    pub fn interpolate(&self, x: f64, y: f64) -> Option<Complex64> {
        let (i, j, s, t) = self.lattice.locate(x, y)?;
        let v = |a, b| self.get(a, b);
        Some(
            v(i, j) * ((1.0 - s) * (1.0 - t))
                + v(i + 1, j) * (s * (1.0 - t))
                + v(i, j + 1) * ((1.0 - s) * t)
                + v(i + 1, j + 1) * (s * t),
        )
    }

    pub fn max_modulus(&self) -> (f64, (usize, usize)) {
        let n = self.lattice.n();
        self.values
            .iter()
            .enumerate()
            .fold((0.0, (0, 0)), |best, (k, v)| {
                let m = v.norm();
                if m > best.0 {
                    (m, (k % n, k / n))
                } else {
                    best
                }
            })
    }

    pub fn restrict(&self, sub: Lattice, offset: usize) -> Self {
        let n = sub.n();
        let values = (0..sub.len())
            .map(|k| self.get(k % n + offset, k / n + offset))
            .collect();
        Self {
            lattice: sub,
            values,
        }
    }
}

/// A Beltrami coefficient with `sup |μ| < 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BeltramiCoefficient {
    grid: ComplexGrid,
    max_modulus: f64,
    support_radius: f64,
}

impl BeltramiCoefficient {
    pub fn new(grid: ComplexGrid) -> Result<Self, BeltramiError> {
        let (max_modulus, (i, j)) = grid.max_modulus();
        if max_modulus >= 1.0 {
            return Err(BeltramiError::NotContracting {
                i,
                j,
                modulus: max_modulus,
            });
        }
        let n = grid.lattice.n();
        let support_radius = grid
            .values
            .iter()
            .enumerate()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|(k, _)| {
                let (x, y) = grid.lattice.point(k % n, k / n);
                x.hypot(y)
            })
            .fold(0.0, f64::max);
        Ok(Self {
            grid,
            max_modulus,
            support_radius,
        })
    }

    pub fn from_fn(
        lattice: Lattice,
        f: impl Fn(Complex64) -> Complex64 + Sync,
    ) -> Result<Self, BeltramiError> {
        Self::new(ComplexGrid::from_fn(lattice, f))
    }

    pub fn constant(lattice: Lattice, c: Complex64) -> Result<Self, BeltramiError> {
        Self::from_fn(lattice, |_| c)
    }

    pub fn grid(&self) -> &ComplexGrid {
        &self.grid
    }

    pub fn lattice(&self) -> &Lattice {
        &self.grid.lattice
    }

    pub fn max_modulus(&self) -> f64 {
        self.max_modulus
    }

    /// Largest `|z|` over nodes where `μ ≠ 0`; zero for `μ ≡ 0`.
    pub fn support_radius(&self) -> f64 {
        self.support_radius
    }
}

/// `g = λ |dz + μ dz̄|²`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalDecomposition {
    pub lambda: ScalarGrid,
    pub mu: BeltramiCoefficient,
}

impl ConformalDecomposition {
    pub fn new(lambda: ScalarGrid, mu: BeltramiCoefficient) -> Result<Self, BeltramiError> {
        if lambda.lattice() != mu.lattice() {
            return Err(FieldError::LatticeMismatch.into());
        }
        let n = lambda.lattice().n();
        if let Some(k) = lambda.values().iter().position(|&v| v <= 0.0) {
            return Err(BeltramiError::NotPositiveDefinite { i: k % n, j: k / n });
        }
        Ok(Self { lambda, mu })
    }
}

/// `λ` and `μ` of a single symmetric form `(E, F, G)`.
pub fn decompose_form(e: f64, f: f64, g: f64) -> Option<(f64, Complex64)> {
    let det = e * g - f * f;
    if !(e > 0.0 && g > 0.0 && det > 0.0) {
        return None;
    }
    let lambda = 0.25 * (e + g + 2.0 * det.sqrt());
    let mu = Complex64::new(e - g, 2.0 * f) / (4.0 * lambda);
    Some((lambda, mu))
}

/// `(E, F, G)` of `λ |dz + μ dz̄|²`.
pub fn reconstruct_form(lambda: f64, mu: Complex64) -> (f64, f64, f64) {
    let one = Complex64::new(1.0, 0.0);
    (
        lambda * (one + mu).norm_sqr(),
        2.0 * lambda * mu.im,
        lambda * (one - mu).norm_sqr(),
    )
}

pub fn decompose(g: &MetricGrid) -> Result<ConformalDecomposition, BeltramiError> {
    let lattice = *g.lattice();
    let n = lattice.n();
    let mut lambda = Vec::with_capacity(lattice.len());
    let mut mu = Vec::with_capacity(lattice.len());
    for k in 0..lattice.len() {
        let (e, f, gg) = (g.e.values()[k], g.f.values()[k], g.g.values()[k]);
        let (l, m) = decompose_form(e, f, gg)
            .ok_or(BeltramiError::NotPositiveDefinite { i: k % n, j: k / n })?;
        lambda.push(l);
        mu.push(m);
    }
    ConformalDecomposition::new(
        ScalarGrid::from_values(lattice, lambda)?,
        BeltramiCoefficient::new(ComplexGrid::from_values(lattice, mu)?)?,
    )
}

pub fn reconstruct(d: &ConformalDecomposition) -> Result<MetricGrid, BeltramiError> {
    let lattice = *d.lambda.lattice();
    let mut e = Vec::with_capacity(lattice.len());
    let mut f = Vec::with_capacity(lattice.len());
    let mut g = Vec::with_capacity(lattice.len());
    for (&l, &m) in d.lambda.values().iter().zip(d.mu.grid.values()) {
        let (a, b, c) = reconstruct_form(l, m);
        e.push(a);
        f.push(b);
        g.push(c);
    }
    Ok(MetricGrid::new(
        ScalarGrid::from_values(lattice, e)?,
        ScalarGrid::from_values(lattice, f)?,
        ScalarGrid::from_values(lattice, g)?,
    )?)
}

/// Post-composed affine map `w ↦ scale·w + shift`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Normalization {
    pub scale: (f64, f64),
    pub shift: (f64, f64),
}

impl Normalization {
    fn identity() -> Self {
        Self {
            scale: (1.0, 0.0),
            shift: (0.0, 0.0),
        }
    }
}

/// How the Wirtinger derivatives of a [`PlaneDiffeo`] were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DerivativeSource {
    CentralDifference,
    Spectral,
}

/// An orientation-preserving map sampled on a lattice, with `φ_z` and `φ_z̄`.
#[derive(Debug, Clone)]
pub struct PlaneDiffeo {
    map: ComplexGrid,
    dz: Vec<Complex64>,
    dzbar: Vec<Complex64>,
    normalization: Normalization,
    derivatives: DerivativeSource,
    report: Option<SolveReport>,
}

impl PlaneDiffeo {
    /// Wraps map values, taking derivatives by central differences
    /// (second-order one-sided on the outer ring).
    pub fn from_map(map: ComplexGrid) -> Result<Self, BeltramiError> {
        let (dz, dzbar) = wirtinger(&map);
        let phi = Self {
            map,
            dz,
            dzbar,
            normalization: Normalization::identity(),
            derivatives: DerivativeSource::CentralDifference,
            report: None,
        };
        phi.check_orientation()?;
        Ok(phi)
    }

    pub fn from_fn(
        lattice: Lattice,
        f: impl Fn(Complex64) -> Complex64 + Sync,
    ) -> Result<Self, BeltramiError> {
        Self::from_map(ComplexGrid::from_fn(lattice, f))
    }

    pub(crate) fn from_parts(
        map: ComplexGrid,
        dz: Vec<Complex64>,
        dzbar: Vec<Complex64>,
        report: SolveReport,
    ) -> Result<Self, BeltramiError> {
        let phi = Self {
            map,
            dz,
            dzbar,
            normalization: Normalization::identity(),
            derivatives: DerivativeSource::Spectral,
            report: Some(report),
        };
        phi.check_orientation()?;
        Ok(phi)
    }

    pub fn lattice(&self) -> &Lattice {
        &self.map.lattice
    }

    pub fn map(&self) -> &ComplexGrid {
        &self.map
    }

    pub fn at(&self, i: usize, j: usize) -> Complex64 {
        self.map.get(i, j)
    }

    pub fn dz(&self) -> &[Complex64] {
        &self.dz
    }

    pub fn dzbar(&self) -> &[Complex64] {
        &self.dzbar
    }

    pub fn normalization(&self) -> Normalization {
        self.normalization
    }

    pub fn derivative_source(&self) -> DerivativeSource {
        self.derivatives
    }

    /// Iteration record when the map came from [`solve_beltrami`].
    pub fn solve_report(&self) -> Option<&SolveReport> {
        self.report.as_ref()
    }

    /// `|φ_z|² − |φ_z̄|²` at every node.
    pub fn jacobian(&self) -> Vec<f64> {
        self.dz
            .iter()
            .zip(&self.dzbar)
            .map(|(a, b)| a.norm_sqr() - b.norm_sqr())
            .collect()
    }

    fn check_orientation(&self) -> Result<(), BeltramiError> {
        let n = self.lattice().n();
        for (k, jac) in self.jacobian().into_iter().enumerate() {
            let (i, j) = (k % n, k / n);
            let interior = i > 0 && j > 0 && i + 1 < n && j + 1 < n;
            if interior && !(jac > 0.0) {
                return Err(BeltramiError::Orientation { i, j, jacobian: jac });
            }
        }
        Ok(())
    }

    /// Post-composes with `w ↦ a·w + b`.
    pub fn post_compose(&self, a: Complex64, b: Complex64) -> Self {
        let values = self.map.values.iter().map(|&w| a * w + b).collect();
        let (s, t) = (
            Complex64::new(self.normalization.scale.0, self.normalization.scale.1),
            Complex64::new(self.normalization.shift.0, self.normalization.shift.1),
        );
        let (s, t) = (a * s, a * t + b);
        Self {
            map: ComplexGrid {
                lattice: self.map.lattice,
                values,
            },
            dz: self.dz.iter().map(|&d| a * d).collect(),
            dzbar: self.dzbar.iter().map(|&d| a * d).collect(),
            normalization: Normalization {
                scale: (s.re, s.im),
                shift: (t.re, t.im),
            },
            derivatives: self.derivatives,
            report: self.report.clone(),
        }
    }

    /// Post-composes with the unique complex affine map sending
    /// `φ(0) ↦ 0` and `φ(1) ↦ 1`.
    pub fn normalized(&self) -> Result<Self, BeltramiError> {
        let outside = || {
            BeltramiError::InvalidParameter(
                "the window must contain 0 and 1 to normalize the map".into(),
            )
        };
        let p0 = self.map.interpolate(0.0, 0.0).ok_or_else(outside)?;
        let p1 = self.map.interpolate(1.0, 0.0).ok_or_else(outside)?;
        let d = p1 - p0;
        if d.norm() == 0.0 {
            return Err(BeltramiError::InvalidParameter(
                "map identifies 0 and 1".into(),
            ));
        }
        let a = d.inv();
        Ok(self.post_compose(a, -a * p0))
    }
}

/// `μ_φ = φ_z̄ / φ_z`.
pub fn dilatation(phi: &PlaneDiffeo) -> Result<BeltramiCoefficient, BeltramiError> {
    phi.check_orientation()?;
    let lattice = *phi.lattice();
    let n = lattice.n();
    let mut values = Vec::with_capacity(lattice.len());
    for (k, (a, b)) in phi.dz.iter().zip(&phi.dzbar).enumerate() {
        if a.norm_sqr() <= b.norm_sqr() {
            return Err(BeltramiError::Orientation {
                i: k % n,
                j: k / n,
                jacobian: a.norm_sqr() - b.norm_sqr(),
            });
        }
        values.push(b / a);
    }
    BeltramiCoefficient::new(ComplexGrid::from_values(lattice, values)?)
}

fn wirtinger(map: &ComplexGrid) -> (Vec<Complex64>, Vec<Complex64>) {
    let lattice = map.lattice;
    let n = lattice.n();
    let h = lattice.spacing();
    let d = |v: &dyn Fn(usize) -> Complex64, k: usize| -> Complex64 {
        if k == 0 {
            (-3.0 * v(0) + 4.0 * v(1) - v(2)) / (2.0 * h)
        } else if k == n - 1 {
            (3.0 * v(n - 1) - 4.0 * v(n - 2) + v(n - 3)) / (2.0 * h)
        } else {
            (v(k + 1) - v(k - 1)) / (2.0 * h)
        }
    };
    let i_unit = Complex64::new(0.0, 1.0);
    (0..lattice.len())
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % n, k / n);
            let px = d(&|a| map.get(a, j), i);
            let py = d(&|b| map.get(i, b), j);
            (0.5 * (px - i_unit * py), 0.5 * (px + i_unit * py))
        })
        .unzip()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn decompose_examples() {
        let (l, m) = decompose_form(1.0, 0.0, 1.0).unwrap();
        assert_eq!((l, m), (1.0, c(0.0, 0.0)));
        let (l, m) = decompose_form(2.0, 0.0, 1.0).unwrap();
        assert!((l - (3.0 + 2.0 * 2f64.sqrt()) / 4.0).abs() < 1e-15);
        assert!((m - c(3.0 - 2.0 * 2f64.sqrt(), 0.0)).norm() < 1e-15);
        let w = (-2.0f64 * 0.7).exp();
        let (l, m) = decompose_form(w, 0.0, w).unwrap();
        assert!((l - w).abs() < 1e-16 && m.norm() == 0.0);
        assert!(decompose_form(1.0, 1.0, 1.0).is_none());
    }

    #[test]
    fn reconstruct_examples() {
        let (e, f, g) = reconstruct_form((3.0 + 2.0 * 2f64.sqrt()) / 4.0, c(3.0 - 2.0 * 2f64.sqrt(), 0.0));
        assert!((e - 2.0).abs() < 1e-14 && f == 0.0 && (g - 1.0).abs() < 1e-14);
        let (e, f, g) = reconstruct_form(1.0, c(0.0, 0.5));
        assert!((e - 1.25).abs() < 1e-15 && (f - 1.0).abs() < 1e-15 && (g - 1.25).abs() < 1e-15);
    }

    #[test]
    fn grid_decomposition_reports_bad_node() {
        let lattice = Lattice::new(1.0, 5).unwrap();
        let g = MetricGrid::euclidean(lattice);
        let d = decompose(&g).unwrap();
        assert!(d.lambda.values().iter().all(|&v| v == 1.0));
        assert_eq!(d.mu.max_modulus(), 0.0);
        assert_eq!(d.mu.support_radius(), 0.0);
        let back = reconstruct(&d).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn linear_maps_have_constant_dilatation() {
        let lattice = Lattice::new(2.0, 33).unwrap();
        let id = PlaneDiffeo::from_fn(lattice, |z| z).unwrap();
        assert!(dilatation(&id).unwrap().max_modulus() < 1e-14);
        for k in [c(0.3, 0.0), c(0.0, 0.2)] {
            let phi = PlaneDiffeo::from_fn(lattice, |z| z + k * z.conj()).unwrap();
            let mu = dilatation(&phi).unwrap();
            for v in mu.grid().values() {
                assert!((v - k).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn orientation_reversal_is_rejected() {
        let lattice = Lattice::new(2.0, 9).unwrap();
        let err = PlaneDiffeo::from_fn(lattice, |z| z.conj()).unwrap_err();
        assert!(matches!(err, BeltramiError::Orientation { .. }));
        let err = BeltramiCoefficient::constant(lattice, c(1.0, 0.0)).unwrap_err();
        assert!(matches!(err, BeltramiError::NotContracting { .. }));
    }

    #[test]
    fn normalization_fixes_zero_and_one() {
        let lattice = Lattice::new(2.0, 17).unwrap();
        let phi = PlaneDiffeo::from_fn(lattice, |z| c(2.0, 1.0) * (z + 0.3 * z.conj()) + c(0.5, -1.0))
            .unwrap()
            .normalized()
            .unwrap();
        let i0 = lattice.node_at(0.0).unwrap();
        let i1 = lattice.node_at(1.0).unwrap();
        assert!(phi.at(i0, i0).norm() < 1e-15);
        assert!((phi.at(i1, i0) - 1.0).norm() < 1e-15);
        // (z + 0.3 z̄)/1.3 everywhere.
        let (x, y) = lattice.point(3, 11);
        let z = c(x, y);
        assert!((phi.at(3, 11) - (z + 0.3 * z.conj()) / 1.3).norm() < 1e-14);
    }
}
