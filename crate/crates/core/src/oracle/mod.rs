//! Brute-force completeness evidence.
//!
//! A metric is incomplete exactly when some path leaving every compact set
//! has finite length. For `e^{-2u} g₀` the length of a path is the line
//! integral of `e^{-u}`. This module integrates that density along
//! polylines and along rays, independently of the growth classifier in
//! [`crate::asymptotics`].

mod quadrature;

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::asymptotics::{
    alpha_estimate, classify_completeness, AlphaConfig, AlphaEstimate, AsymptoticsError,
    Completeness, CompletenessVerdict,
};
use crate::expr::{EvalError, Expr};
use crate::field::{is_subharmonic, Lattice, ScalarGrid, SubharmonicVerdict};

pub use quadrature::{adaptive_simpson, Quadrature, Tolerance};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("invalid path: {0}")]
    InvalidPath(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Asymptotics(#[from] AsymptoticsError),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

/// Length element of a conformal metric `ρ(z)² g₀`, given through `log ρ`.
pub trait LengthDensity: Sync {
    fn log_density(&self, x: f64, y: f64) -> Result<f64, EvalError>;

    /// `ρ(x, y)`; `+∞` once the exponent leaves the f64 range.
    fn density(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let l = self.log_density(x, y)?;
        Ok(if l >= f64::MAX.ln() { f64::INFINITY } else { l.exp() })
    }
}

/// Density `e^{-u}` of the metric `e^{-2u} g₀`.
#[derive(Debug, Clone, Copy)]
pub struct ConformalFactor<'a>(pub &'a Expr);

impl LengthDensity for ConformalFactor<'_> {
    fn log_density(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        Ok(-self.0.eval(x, y)?)
    }
}

/// Density `√(s + e^{-2u})` of the metric `(s + e^{-2u}) g₀`.
#[derive(Debug, Clone, Copy)]
pub struct CompletionDensity<'a> {
    pub u: &'a Expr,
    pub s: f64,
}

impl LengthDensity for CompletionDensity<'_> {
    fn log_density(&self, x: f64, y: f64) -> Result<f64, EvalError> {
        let b = -2.0 * self.u.eval(x, y)?;
        if self.s <= 0.0 {
            return Ok(0.5 * b);
        }
        let a = self.s.ln();
        let (hi, lo) = if a > b { (a, b) } else { (b, a) };
        Ok(0.5 * (hi + (lo - hi).exp().ln_1p()))
    }
}

/// Polyline through at least two points, consecutive points distinct.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathPolyline {
    vertices: Vec<(f64, f64)>,
    /// Evaluation budget per segment.
    pub budget: usize,
}

impl PathPolyline {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self, OracleError> {
        if vertices.len() < 2 {
            return Err(OracleError::InvalidPath("need at least two vertices".into()));
        }
        if let Some(k) = vertices.windows(2).position(|w| w[0] == w[1]) {
            return Err(OracleError::InvalidPath(format!(
                "vertices {k} and {} coincide",
                k + 1
            )));
        }
        if vertices.iter().any(|(x, y)| !(x.is_finite() && y.is_finite())) {
            return Err(OracleError::InvalidPath("non-finite vertex".into()));
        }
        Ok(Self {
            vertices,
            budget: 1 << 18,
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    pub fn euclidean_length(&self) -> f64 {
        self.vertices
            .windows(2)
            .map(|w| (w[1].0 - w[0].0).hypot(w[1].1 - w[0].1))
            .sum()
    }

    /// The same path with every segment split in two.
    pub fn refined(&self) -> Self {
        let mut vertices = Vec::with_capacity(2 * self.vertices.len() - 1);
        for w in self.vertices.windows(2) {
            vertices.push(w[0]);
            vertices.push((0.5 * (w[0].0 + w[1].0), 0.5 * (w[0].1 + w[1].1)));
        }
        vertices.push(*self.vertices.last().expect("nonempty"));
        Self {
            vertices,
            budget: self.budget,
        }
    }
}

/// Length of `path` in the metric with density `rho`.
///
/// Each segment is integrated by adaptive Simpson; the segment tolerances
/// add up to `tol`.
pub fn metric_length<D: LengthDensity + ?Sized>(
    rho: &D,
    path: &PathPolyline,
    tol: f64,
) -> Result<Quadrature, OracleError> {
    let segments = path.vertices.len() - 1;
    let mut total = Quadrature {
        value: 0.0,
        error: 0.0,
        converged: true,
        evaluations: 0,
    };
    for w in path.vertices.windows(2) {
        let ((x0, y0), (x1, y1)) = (w[0], w[1]);
        let len = (x1 - x0).hypot(y1 - y0);
        let q = adaptive_simpson(
            |t| rho.density(x0 + t * (x1 - x0), y0 + t * (y1 - y0)).map(|d| d * len),
            0.0,
            1.0,
            Tolerance {
                abs: tol / segments as f64,
                rel: 0.0,
                budget: path.budget,
            },
        )?;
        total.value += q.value;
        total.error += q.error;
        total.converged &= q.converged;
        total.evaluations += q.evaluations;
    }
    Ok(total)
}

/// Length of `path` in `e^{-2u} g₀`, i.e. the line integral of `e^{-u}`.
pub fn conformal_length(u: &Expr, path: &PathPolyline, tol: f64) -> Result<Quadrature, OracleError> {
    metric_length(&ConformalFactor(u), path, tol)
}

/// Parameters of the escaping-ray search.
#[derive(Debug, Clone, Serialize)]
pub struct RaySearchConfig {
    pub angles: usize,
    pub r_max: f64,
    /// Ratio between consecutive checkpoints.
    pub ratio: f64,
    pub finite_threshold: f64,
    pub diverge_threshold: f64,
    pub tol: f64,
    pub rel_tol: f64,
    /// Multiplier on `finite_threshold` in the reported witness bound.
    pub safety: f64,
}

impl Default for RaySearchConfig {
    fn default() -> Self {
        Self {
            angles: 64,
            r_max: 1e6,
            ratio: 2.0,
            finite_threshold: 1e-6,
            diverge_threshold: 1e3,
            tol: 1e-9,
            rel_tol: 1e-10,
            safety: 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RayBehaviour {
    /// Tail increment below the finite threshold.
    Converging,
    /// Partial length above the divergence threshold.
    Diverging,
    Undecided,
}

/// Partial lengths `∫_1^R ρ(r e^{iθ}) dr` at the checkpoints of one ray.
#[derive(Debug, Clone, Serialize)]
pub struct RayRecord {
    pub index: usize,
    pub angle: f64,
    pub partial: Vec<f64>,
    pub behaviour: RayBehaviour,
    pub quadrature_converged: bool,
}

impl RayRecord {
    pub fn last_increment(&self) -> f64 {
        let k = self.partial.len();
        if k < 2 {
            return f64::INFINITY;
        }
        let d = self.partial[k - 1] - self.partial[k - 2];
        if d.is_nan() {
            f64::INFINITY
        } else {
            d
        }
    }

    pub fn length(&self) -> f64 {
        *self.partial.last().unwrap_or(&0.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum EscapeVerdict {
    IncompleteWitness,
    NoWitnessFound,
    Inconclusive,
}

#[derive(Debug, Clone, Serialize)]
pub struct Witness {
    pub ray: usize,
    pub angle: f64,
    /// Partial length at `r_max`.
    pub length: f64,
    /// `length + safety · finite_threshold`.
    pub length_bound: f64,
    pub last_increment: f64,
    /// Every recorded partial length lies below `length_bound`.
    pub bound_holds: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct EscapeReport {
    pub verdict: EscapeVerdict,
    pub witness: Option<Witness>,
    /// Checkpoint radii shared by all rays.
    pub checkpoints: Vec<f64>,
    pub rays: Vec<RayRecord>,
    pub r_max: f64,
    /// Rays are not all escaping paths: a missing witness is evidence of
    /// completeness, not proof.
    pub one_sided: bool,
    pub config: RaySearchConfig,
}

fn checkpoints(cfg: &RaySearchConfig) -> Vec<f64> {
    let mut out = vec![1.0];
    let mut r = cfg.ratio;
    while r < cfg.r_max * (1.0 - 1e-12) {
        out.push(r);
        r *= cfg.ratio;
    }
    out.push(cfg.r_max);
    out
}

/// Integrates the density along `angles` equispaced rays from `r = 1`.
pub fn ray_escape_search<D: LengthDensity + ?Sized>(
    rho: &D,
    cfg: &RaySearchConfig,
) -> Result<EscapeReport, OracleError> {
    if cfg.angles < 8 {
        return Err(OracleError::InvalidParameter(format!(
            "need at least 8 rays, got {}",
            cfg.angles
        )));
    }
    if !(cfg.r_max > 1.0 && cfg.ratio > 1.0) {
        return Err(OracleError::InvalidParameter(
            "ray search needs r_max > 1 and ratio > 1".into(),
        ));
    }
    let radii = checkpoints(cfg);
    let rays = (0..cfg.angles)
        .into_par_iter()
        .map(|index| integrate_ray(rho, index, &radii, cfg))
        .collect::<Result<Vec<_>, _>>()?;

    let witness = rays
        .iter()
        .find(|r| r.behaviour == RayBehaviour::Converging)
        .map(|r| {
            let bound = r.length() + cfg.safety * cfg.finite_threshold;
            Witness {
                ray: r.index,
                angle: r.angle,
                length: r.length(),
                length_bound: bound,
                last_increment: r.last_increment(),
                bound_holds: r.partial.iter().all(|&p| p <= bound),
            }
        });
    let verdict = if witness.is_some() {
        EscapeVerdict::IncompleteWitness
    } else if rays.iter().all(|r| r.behaviour == RayBehaviour::Diverging) {
        EscapeVerdict::NoWitnessFound
    } else {
        EscapeVerdict::Inconclusive
    };
    Ok(EscapeReport {
        verdict,
        witness,
        checkpoints: radii,
        rays,
        r_max: cfg.r_max,
        one_sided: true,
        config: cfg.clone(),
    })
}

fn integrate_ray<D: LengthDensity + ?Sized>(
    rho: &D,
    index: usize,
    radii: &[f64],
    cfg: &RaySearchConfig,
) -> Result<RayRecord, OracleError> {
    let angle = 2.0 * PI * index as f64 / cfg.angles as f64;
    let (c, s) = (angle.cos(), angle.sin());
    let mut partial = vec![0.0];
    let mut total = 0.0f64;
    let mut converged = true;
    for w in radii.windows(2) {
        if total.is_infinite() {
            partial.push(total);
            continue;
        }
        let q = adaptive_simpson(
            |r| rho.density(r * c, r * s),
            w[0],
            w[1],
            Tolerance {
                abs: cfg.tol,
                rel: cfg.rel_tol,
                budget: 1 << 16,
            },
        )?;
        converged &= q.converged;
        total += q.value;
        partial.push(total);
    }
    let mut record = RayRecord {
        index,
        angle,
        partial,
        behaviour: RayBehaviour::Undecided,
        quadrature_converged: converged,
    };
    record.behaviour = if record.length() > cfg.diverge_threshold {
        RayBehaviour::Diverging
    } else if record.last_increment() < cfg.finite_threshold {
        RayBehaviour::Converging
    } else {
        RayBehaviour::Undecided
    };
    Ok(record)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Agreement {
    Agree,
    Disagree,
    Inconclusive,
}

/// Parameters of [`cross_validate`].
#[derive(Debug, Clone, Serialize)]
pub struct CrossConfig {
    pub alpha: AlphaConfig,
    pub alpha_r_max: f64,
    pub alpha_window: usize,
    pub rays: RaySearchConfig,
    /// Window `[-L, L]²` and resolution for the subharmonicity check.
    pub window: f64,
    pub n: usize,
}

impl Default for CrossConfig {
    fn default() -> Self {
        Self {
            alpha: AlphaConfig::default(),
            alpha_r_max: 1e6,
            alpha_window: 4,
            rays: RaySearchConfig::default(),
            window: 4.0,
            n: 129,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossReport {
    pub agreement: Agreement,
    pub completeness: CompletenessVerdict,
    pub alpha: AlphaEstimate,
    pub oracle: EscapeReport,
    pub subharmonic: SubharmonicVerdict,
    /// The classifier's guarantee needs a subharmonic input.
    pub heuristic: bool,
}

/// Pairs the growth classifier with the escaping-ray oracle.
pub fn cross_validate(u: &Expr, cfg: &CrossConfig) -> Result<CrossReport, OracleError> {
    let grid = ScalarGrid::from_expr(u, Lattice::new(cfg.window, cfg.n)?)?;
    let subharmonic = is_subharmonic(&grid, None);
    let alpha = alpha_estimate(u, cfg.alpha_r_max, cfg.alpha_window, &cfg.alpha)?;
    let completeness = classify_completeness(&alpha);
    let oracle = ray_escape_search(&ConformalFactor(u), &cfg.rays)?;
    let agreement = agreement(completeness.class, oracle.verdict);
    Ok(CrossReport {
        agreement,
        completeness,
        heuristic: alpha.heuristic || !subharmonic.pass,
        alpha,
        oracle,
        subharmonic,
    })
}

pub fn agreement(class: Completeness, oracle: EscapeVerdict) -> Agreement {
    match (class.is_complete(), oracle) {
        (_, EscapeVerdict::Inconclusive) => Agreement::Inconclusive,
        (true, EscapeVerdict::NoWitnessFound) | (false, EscapeVerdict::IncompleteWitness) => {
            Agreement::Agree
        }
        _ => Agreement::Disagree,
    }
}
