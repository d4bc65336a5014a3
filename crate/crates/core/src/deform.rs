//! Deformation paths and example metrics: convex combinations of conformal
//! factors, the completion path `(s + e^{-2u}) g₀`, and graphs of revolution.

use thiserror::Error;

use crate::expr::{diff, EvalError, Expr, Var};
use crate::field::{curvature, laplacian, CurvatureField, FieldError, Lattice, MetricGrid, ScalarGrid};
use crate::oracle::CompletionDensity;

#[derive(Debug, Error)]
pub enum DeformError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("profile is not convex: f''({r}) = {second_derivative}")]
    ConvexityViolation { r: f64, second_derivative: f64 },
    #[error("profile is negative: f({r}) = {value}")]
    NegativeProfile { r: f64, value: f64 },
    #[error("profile must be flat at the axis, found f'(0) = {slope}")]
    NotSmoothAtOrigin { slope: f64 },
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Field(#[from] FieldError),
}

fn check_unit(s: f64) -> Result<(), DeformError> {
    if (0.0..=1.0).contains(&s) {
        Ok(())
    } else {
        Err(DeformError::InvalidParameter(format!(
            "path parameter must lie in [0, 1], got {s}"
        )))
    }
}

/// `s·u1 + (1 − s)·u0`; the endpoints are returned unchanged.
pub fn convex_path(u0: &Expr, u1: &Expr, s: f64) -> Result<Expr, DeformError> {
    check_unit(s)?;
    Ok(if s == 0.0 {
        u0.clone()
    } else if s == 1.0 {
        u1.clone()
    } else {
        u1.affine_blend(u0, s)
    })
}

/// Nodewise `s·u1 + (1 − s)·u0`; the endpoints are returned unchanged.
pub fn convex_path_grid(u0: &ScalarGrid, u1: &ScalarGrid, s: f64) -> Result<ScalarGrid, DeformError> {
    check_unit(s)?;
    if u0.lattice() != u1.lattice() {
        return Err(FieldError::LatticeMismatch.into());
    }
    if s == 0.0 {
        return Ok(u0.clone());
    }
    if s == 1.0 {
        return Ok(u1.clone());
    }
    let values = u0
        .values()
        .iter()
        .zip(u1.values())
        .map(|(a, b)| s * b + (1.0 - s) * a)
        .collect();
    Ok(ScalarGrid::from_values(*u0.lattice(), values)?)
}

/// The conformal metric `(s + e^{-2u}) g₀`.
pub fn completion_path(u: &Expr, s: f64, lattice: Lattice) -> Result<MetricGrid, DeformError> {
    if !(s >= 0.0 && s.is_finite()) {
        return Err(DeformError::InvalidParameter(format!(
            "completion parameter must be nonnegative, got {s}"
        )));
    }
    let factor = ScalarGrid::try_from_fn(lattice, |_, _, x, y| {
        Ok::<_, DeformError>(s + (-2.0 * u.eval(x, y)?).exp())
    })?;
    Ok(MetricGrid::conformal(factor)?)
}

/// Length density of the completion metric, for the path-length oracle.
pub fn completion_density(u: &Expr, s: f64) -> CompletionDensity<'_> {
    CompletionDensity { u, s }
}

/// Gauss curvature of `(s + e^{-2u}) g₀`, written as `e^{-2v} g₀` with
/// `v = -½ log(s + e^{-2u})`.
pub fn completion_curvature(u: &Expr, s: f64, lattice: Lattice) -> Result<CurvatureField, DeformError> {
    let g = completion_path(u, s, lattice)?;
    Ok(curvature(&g.e.map(|w| -0.5 * w.ln())))
}

/// Samples of a one-parameter family of metrics.
#[derive(Debug, Clone)]
pub enum DeformationPath {
    /// `s ↦ s·u1 + (1 − s)·u0`.
    Convex { u0: Expr, u1: Expr, samples: Vec<f64> },
    /// `s ↦ (s + e^{-2u}) g₀`.
    Completion { u: Expr, samples: Vec<f64> },
}

impl DeformationPath {
    pub fn convex(u0: Expr, u1: Expr, samples: Vec<f64>) -> Result<Self, DeformError> {
        samples.iter().try_for_each(|&s| check_unit(s))?;
        Ok(Self::Convex { u0, u1, samples })
    }

    pub fn completion(u: Expr, samples: Vec<f64>) -> Result<Self, DeformError> {
        if let Some(&s) = samples.iter().find(|s| !(**s >= 0.0 && s.is_finite())) {
            return Err(DeformError::InvalidParameter(format!(
                "completion parameter must be nonnegative, got {s}"
            )));
        }
        Ok(Self::Completion { u, samples })
    }

    /// `k ≥ 2` equispaced parameters in `[0, 1]`, both ends included.
    pub fn uniform_samples(k: usize) -> Vec<f64> {
        let k = k.max(2);
        (0..k).map(|i| i as f64 / (k - 1) as f64).collect()
    }

    pub fn samples(&self) -> &[f64] {
        match self {
            Self::Convex { samples, .. } | Self::Completion { samples, .. } => samples,
        }
    }

    /// Metric at every sample.
    pub fn metrics(&self, lattice: Lattice) -> Result<Vec<MetricGrid>, DeformError> {
        match self {
            Self::Convex { u0, u1, samples } => samples
                .iter()
                .map(|&s| {
                    let u = convex_path(u0, u1, s)?;
                    let w = ScalarGrid::try_from_fn(lattice, |_, _, x, y| {
                        Ok::<_, DeformError>((-2.0 * u.eval(x, y)?).exp())
                    })?;
                    Ok(MetricGrid::conformal(w)?)
                })
                .collect(),
            Self::Completion { u, samples } => samples
                .iter()
                .map(|&s| completion_path(u, s, lattice))
                .collect(),
        }
    }
}

#[derive(Debug, Clone)]
enum Shape {
    Expr { f: Expr, df: Expr, d2f: Expr },
    DiscCone,
}

/// Profile `f(r)` of the graph `z = f(√(x² + y²))`.
///
/// Expression profiles are written in the variable `x`, standing for `r`.
#[derive(Debug, Clone)]
pub struct RevolutionProfile {
    shape: Shape,
}

impl RevolutionProfile {
    pub fn from_expr(f: Expr) -> Self {
        let df = diff(&f, Var::X);
        let d2f = diff(&df, Var::X);
        Self {
            shape: Shape::Expr { f, df, d2f },
        }
    }

    /// `f = 2` on `[0, 1]`, `f = r` on `[3, ∞)`, and in between the convex
    /// bridge whose slope is the degree-7 smoothstep of `(r − 1)/2`, so
    /// that `f` is C⁴.
    pub fn disc_cone() -> Self {
        Self {
            shape: Shape::DiscCone,
        }
    }

    pub fn value(&self, r: f64) -> Result<f64, DeformError> {
        match &self.shape {
            Shape::Expr { f, .. } => Ok(f.eval(r, 0.0)?),
            Shape::DiscCone => Ok(bridge(r).0),
        }
    }

    pub fn slope(&self, r: f64) -> Result<f64, DeformError> {
        match &self.shape {
            Shape::Expr { df, .. } => Ok(df.eval(r, 0.0)?),
            Shape::DiscCone => Ok(bridge(r).1),
        }
    }

    pub fn second_derivative(&self, r: f64) -> Result<f64, DeformError> {
        match &self.shape {
            Shape::Expr { d2f, .. } => Ok(d2f.eval(r, 0.0)?),
            Shape::DiscCone => Ok(bridge(r).2),
        }
    }

    /// Checks `f ≥ 0` and `f'' ≥ −tol` at `samples` points of `[0, r_max]`.
    pub fn check_convexity(&self, r_max: f64, samples: usize, tol: f64) -> Result<(), DeformError> {
        let samples = samples.max(2);
        for k in 0..samples {
            let r = r_max * k as f64 / (samples - 1) as f64;
            let value = self.value(r)?;
            if value < 0.0 {
                return Err(DeformError::NegativeProfile { r, value });
            }
            let d2 = self.second_derivative(r)?;
            if d2 < -tol {
                return Err(DeformError::ConvexityViolation {
                    r,
                    second_derivative: d2,
                });
            }
        }
        Ok(())
    }
}

fn bridge(r: f64) -> (f64, f64, f64) {
    if r <= 1.0 {
        (2.0, 0.0, 0.0)
    } else if r >= 3.0 {
        (r, 1.0, 0.0)
    } else {
        let t = 0.5 * (r - 1.0);
        let f = 2.0 + 2.0 * t.powi(5) * (7.0 - 14.0 * t + 10.0 * t * t - 2.5 * t.powi(3));
        let df = t.powi(4) * (35.0 - 84.0 * t + 70.0 * t * t - 20.0 * t.powi(3));
        let d2f = 70.0 * (t * (1.0 - t)).powi(3);
        (f, df, d2f)
    }
}

/// Induced metric of the graph `z = f(r)`:
/// `E = 1 + f'² x²/r²`, `F = f'² xy/r²`, `G = 1 + f'² y²/r²`, and `g₀` at `r = 0`.
///
/// Requires `f'(0) = 0` and a convex profile on the sampled radii.
pub fn revolve(profile: &RevolutionProfile, lattice: Lattice) -> Result<MetricGrid, DeformError> {
    let slope0 = profile.slope(0.0)?;
    if slope0.abs() > 1e-12 {
        return Err(DeformError::NotSmoothAtOrigin { slope: slope0 });
    }
    let r_max = lattice.half_width() * std::f64::consts::SQRT_2;
    profile.check_convexity(r_max, 4 * lattice.n(), 1e-9)?;
    let comp = |which: u8| {
        ScalarGrid::try_from_fn(lattice, |_, _, x, y| {
            let r = x.hypot(y);
            let base = if which == 1 { 0.0 } else { 1.0 };
            if r == 0.0 {
                return Ok::<_, DeformError>(base);
            }
            let d = profile.slope(r)?;
            let (a, b) = match which {
                0 => (x, x),
                1 => (x, y),
                _ => (y, y),
            };
            Ok(base + d * d * a * b / (r * r))
        })
    };
    Ok(MetricGrid::new(comp(0)?, comp(1)?, comp(2)?)?)
}

/// Gauss curvature `f' f'' / (r (1 + f'²)²)` of the graph of revolution,
/// continued by `f''(0)²` at the axis.
pub fn revolve_curvature(profile: &RevolutionProfile, r: f64) -> Result<f64, DeformError> {
    if r < 0.0 {
        return Err(DeformError::InvalidParameter(format!(
            "radius must be nonnegative, got {r}"
        )));
    }
    let d2 = profile.second_derivative(r)?;
    if r == 0.0 {
        return Ok(d2 * d2);
    }
    let d = profile.slope(r)?;
    Ok(d * d2 / (r * (1.0 + d * d).powi(2)))
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Flatness {
    pub flat: bool,
    pub max_abs_laplacian: f64,
    pub tol: f64,
}

/// `max |Δu| ≤ tol` over interior nodes (the metric `e^{-2u} g₀` is flat
/// exactly when `u` is harmonic).
pub fn flatness_test(u: &Expr, lattice: Lattice, tol: f64) -> Result<Flatness, DeformError> {
    let grid = ScalarGrid::from_expr(u, lattice)?;
    let lap = laplacian(&grid);
    let max_abs_laplacian = lap
        .valid_nodes()
        .map(|(_, _, v)| v.abs())
        .fold(0.0, f64::max);
    Ok(Flatness {
        flat: max_abs_laplacian <= tol,
        max_abs_laplacian,
        tol,
    })
}
