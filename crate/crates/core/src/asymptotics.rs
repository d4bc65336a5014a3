//! Radial growth of a conformal factor.
//!
//! For a subharmonic `u` the circle maximum `M(r, u)` is increasing in `r`
//! and `μ(t) = M(e^t, u)` is convex in `t`, so secant slopes of `μ` are
//! nondecreasing and converge to `α(u) = lim M(r, u) / log r ∈ [0, ∞]`.
//! The metric `e^{-2u} g₀` is complete exactly when `α(u) ≤ 1`.

use std::f64::consts::PI;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::expr::{EvalError, Expr};
use crate::field::{is_subharmonic, Lattice, ScalarGrid};

#[derive(Debug, Error)]
pub enum AsymptoticsError {
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("circle of radius {radius} leaves the grid window")]
    OutsideWindow { radius: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Field(#[from] crate::field::FieldError),
}

/// A real function on (part of) the plane.
pub trait PlaneFunction: Sync {
    fn value(&self, x: f64, y: f64) -> Result<f64, AsymptoticsError>;

    /// True when the function is only known on a bounded window.
    fn window_limited(&self) -> bool {
        false
    }
}

impl PlaneFunction for Expr {
    fn value(&self, x: f64, y: f64) -> Result<f64, AsymptoticsError> {
        Ok(self.eval(x, y)?)
    }
}

impl PlaneFunction for ScalarGrid {
    fn value(&self, x: f64, y: f64) -> Result<f64, AsymptoticsError> {
        self.interpolate(x, y)
            .ok_or(AsymptoticsError::OutsideWindow {
                radius: x.hypot(y),
            })
    }

    fn window_limited(&self) -> bool {
        true
    }
}

const GOLDEN: f64 = 0.618_033_988_749_894_9;

/// Maximum of `u` on the circle `|z| = r`.
///
/// Dense sampling at `m` equispaced angles followed by a golden-section
/// polish around the best sample. The result never exceeds the true maximum
/// and the gap is `O(m⁻²)` for smooth `u`.
pub fn max_on_circle<F: PlaneFunction + ?Sized>(
    u: &F,
    r: f64,
    m: usize,
) -> Result<f64, AsymptoticsError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "radius must be positive, got {r}"
        )));
    }
    if m < 16 {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "need at least 16 circle samples, got {m}"
        )));
    }
    let at = |theta: f64| u.value(r * theta.cos(), r * theta.sin());
    let step = 2.0 * PI / m as f64;
    let mut best = (f64::NEG_INFINITY, 0.0);
    for k in 0..m {
        let theta = k as f64 * step;
        let v = at(theta)?;
        if v > best.0 {
            best = (v, theta);
        }
    }
    // Golden-section search on the bracket around the best sample.
    let (mut a, mut b) = (best.1 - step, best.1 + step);
    let mut c = b - GOLDEN * (b - a);
    let mut d = a + GOLDEN * (b - a);
    let (mut fc, mut fd) = (at(c)?, at(d)?);
    let mut top = best.0.max(fc).max(fd);
    for _ in 0..60 {
        if (b - a).abs() < 1e-13 {
            break;
        }
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - GOLDEN * (b - a);
            fc = at(c)?;
            top = top.max(fc);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + GOLDEN * (b - a);
            fd = at(d)?;
            top = top.max(fd);
        }
    }
    Ok(top)
}

/// Sampled `M(r_k, u)` on geometrically spaced radii `r_k = r₀ ρ^k`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialMaxProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub samples: usize,
}

impl RadialMaxProfile {
    /// Builds a profile from precomputed values; radii must increase strictly.
    pub fn from_parts(
        radii: Vec<f64>,
        values: Vec<f64>,
        samples: usize,
    ) -> Result<Self, AsymptoticsError> {
        if radii.len() != values.len() {
            return Err(AsymptoticsError::InvalidParameter(
                "radii and values differ in length".into(),
            ));
        }
        if radii.windows(2).any(|w| w[1] <= w[0]) || radii.first().is_some_and(|&r| r <= 0.0) {
            return Err(AsymptoticsError::InvalidParameter(
                "radii must be positive and strictly increasing".into(),
            ));
        }
        Ok(Self {
            radii,
            values,
            samples,
        })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// `t_k = log r_k`.
    pub fn log_radii(&self) -> Vec<f64> {
        self.radii.iter().map(|r| r.ln()).collect()
    }

    /// Secant slope of `μ` between profile indices `a < b`.
    pub fn secant(&self, a: usize, b: usize) -> f64 {
        (self.values[b] - self.values[a]) / (self.radii[b].ln() - self.radii[a].ln())
    }

    /// True if `M_k` never decreases by more than `tol`.
    pub fn is_monotone(&self, tol: f64) -> bool {
        self.values.windows(2).all(|w| w[1] >= w[0] - tol)
    }

    pub fn is_strictly_increasing(&self) -> bool {
        self.values.windows(2).all(|w| w[1] > w[0])
    }
}

/// Profile of `u` at `count` radii `r0·rho^k`, `m` samples per circle.
pub fn profile<F: PlaneFunction + ?Sized>(
    u: &F,
    r0: f64,
    rho: f64,
    count: usize,
    m: usize,
) -> Result<RadialMaxProfile, AsymptoticsError> {
    if !(r0 > 0.0 && rho > 1.0) || count < 4 {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "profile needs r0 > 0, rho > 1, count >= 4 (got {r0}, {rho}, {count})"
        )));
    }
    let radii: Vec<f64> = (0..count).map(|k| r0 * rho.powi(k as i32)).collect();
    profile_on(u, radii, m)
}

/// Profile of `u` on the given radii, `m` samples per circle.
pub fn profile_on<F: PlaneFunction + ?Sized>(
    u: &F,
    radii: Vec<f64>,
    m: usize,
) -> Result<RadialMaxProfile, AsymptoticsError> {
    let values = radii
        .par_iter()
        .map(|&r| max_on_circle(u, r, m))
        .collect::<Result<Vec<_>, _>>()?;
    RadialMaxProfile::from_parts(radii, values, m)
}

/// Largest failure of discrete convexity of `μ(t)`, in units of `μ`.
///
/// For uniform `t` spacing this is `max(0, -(μ_{k-1} + μ_{k+1} - 2μ_k))`.
pub fn convexity_defect(p: &RadialMaxProfile) -> f64 {
    let t = p.log_radii();
    let mu = &p.values;
    (1..p.len().saturating_sub(1))
        .map(|k| {
            let right = (mu[k + 1] - mu[k]) / (t[k + 1] - t[k]);
            let left = (mu[k] - mu[k - 1]) / (t[k] - t[k - 1]);
            -(right - left) * 0.5 * (t[k + 1] - t[k - 1])
        })
        .fold(0.0, f64::max)
}

/// Sampling tolerance for [`convexity_defect`].
pub fn convexity_tolerance(p: &RadialMaxProfile) -> f64 {
    let scale = p.values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    1e-8 * (1.0 + scale)
}

/// Parameters of the growth-exponent estimator.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaConfig {
    pub r0: f64,
    /// Nominal radius ratio; adjusted so that the last radius is `r_max`.
    pub rho: f64,
    pub samples: usize,
    /// Slope above which a still-increasing slope sequence is reported as `+∞`.
    pub infinity_cap: f64,
}

impl Default for AlphaConfig {
    fn default() -> Self {
        Self {
            r0: 1.0,
            rho: 2.0,
            samples: 512,
            infinity_cap: 50.0,
        }
    }
}

/// Estimate of `α(u)` with an uncertainty band.
#[derive(Debug, Clone, Serialize)]
pub struct AlphaEstimate {
    /// Last-window secant slope; `None` when flagged infinite.
    pub value: Option<f64>,
    /// Lower end of the band.
    pub lower: f64,
    /// Upper end of the band; `None` means unbounded.
    pub upper: Option<f64>,
    pub infinite: bool,
    /// Secant slopes over consecutive windows, oldest first.
    pub windows: Vec<f64>,
    /// Set when the profile is not convex within tolerance, i.e. the input
    /// is not subharmonic and the estimate has no theoretical backing.
    pub heuristic: bool,
    /// Set when the input is only known on a bounded grid window.
    pub window_limited: bool,
    pub window: usize,
    pub r_max: f64,
    pub monotone: bool,
    pub convexity_defect: f64,
    pub convexity_tol: f64,
}

impl AlphaEstimate {
    /// Hand-built estimate with band `[lower, upper]`.
    pub fn from_band(lower: f64, value: f64, upper: f64) -> Self {
        Self {
            value: Some(value),
            lower,
            upper: Some(upper),
            infinite: false,
            windows: vec![value],
            heuristic: false,
            window_limited: false,
            window: 2,
            r_max: f64::NAN,
            monotone: true,
            convexity_defect: 0.0,
            convexity_tol: 0.0,
        }
    }

    pub fn upper_or_inf(&self) -> f64 {
        self.upper.unwrap_or(f64::INFINITY)
    }
}

// Round-off allowance on secant slopes.
const SLOPE_SLACK: f64 = 1e-9;

/// Estimates `α(u)` from the profile on radii `r0 … r_max`.
pub fn alpha_estimate<F: PlaneFunction + ?Sized>(
    u: &F,
    r_max: f64,
    window: usize,
    cfg: &AlphaConfig,
) -> Result<AlphaEstimate, AsymptoticsError> {
    if !(r_max > cfg.r0 * cfg.rho) {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "r_max {r_max} too small for r0 {} and rho {}",
            cfg.r0, cfg.rho
        )));
    }
    let p = profile_on(u, alpha_radii(r_max, cfg), cfg.samples)?;
    let mut est = estimate_from_profile(&p, window, cfg.infinity_cap)?;
    est.window_limited = u.window_limited();
    Ok(est)
}

/// Radii used by [`alpha_estimate`]: from `r0` to exactly `r_max`, ratio
/// close to `rho`.
pub fn alpha_radii(r_max: f64, cfg: &AlphaConfig) -> Vec<f64> {
    let intervals = ((r_max / cfg.r0).ln() / cfg.rho.ln()).ceil().max(3.0) as usize;
    let ratio = (r_max / cfg.r0).powf(1.0 / intervals as f64);
    let mut radii: Vec<f64> = (0..=intervals)
        .map(|k| cfg.r0 * ratio.powi(k as i32))
        .collect();
    *radii.last_mut().expect("nonempty") = r_max;
    radii
}

/// Growth estimate for a grid-sampled factor, from circles inside its
/// window. Always annotated as window-limited.
pub fn alpha_estimate_grid(
    u: &ScalarGrid,
    window: usize,
    cfg: &AlphaConfig,
) -> Result<AlphaEstimate, AsymptoticsError> {
    let l = u.lattice().half_width();
    let r0 = (4.0 * u.lattice().spacing()).max(l / 64.0);
    let cfg = AlphaConfig { r0, ..cfg.clone() };
    alpha_estimate(u, l, window, &cfg)
}

/// Band estimate from an existing profile.
pub fn estimate_from_profile(
    p: &RadialMaxProfile,
    window: usize,
    infinity_cap: f64,
) -> Result<AlphaEstimate, AsymptoticsError> {
    if window < 2 || p.len() < window + 1 {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "window {window} needs at least {} profile points, have {}",
            window + 1,
            p.len()
        )));
    }
    let last = p.len() - 1;
    let span = window - 1;
    let mut windows = Vec::new();
    let mut end = last;
    while end >= span {
        windows.push(p.secant(end - span, end));
        end -= span;
    }
    windows.reverse();
    let slope = *windows.last().expect("at least one window");
    let increment = if windows.len() >= 2 {
        slope - windows[windows.len() - 2]
    } else {
        0.0
    };
    let dt = p.radii[last].ln() - p.radii[last - span].ln();
    let slack = SLOPE_SLACK + 1e-12 * (p.values[last].abs() + p.values[last - span].abs()) / dt;

    let defect = convexity_defect(p);
    let tol = convexity_tolerance(p);
    let infinite = slope > infinity_cap && increment > 0.0;
    let (value, upper) = if infinite {
        (None, None)
    } else {
        (Some(slope), Some(slope + increment.max(0.0) + slack))
    };
    Ok(AlphaEstimate {
        value,
        lower: slope - slack,
        upper,
        infinite,
        windows,
        heuristic: defect > tol,
        window_limited: false,
        window,
        r_max: p.radii[last],
        monotone: p.is_monotone(tol),
        convexity_defect: defect,
        convexity_tol: tol,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Completeness {
    Complete,
    Incomplete,
    /// The band contains 1; complete, since `α = 1` still gives a complete
    /// metric, but with the threshold inside the uncertainty.
    BorderlineComplete,
}

impl Completeness {
    pub fn is_complete(self) -> bool {
        !matches!(self, Completeness::Incomplete)
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct CompletenessVerdict {
    pub class: Completeness,
    pub heuristic: bool,
}

pub fn classify_completeness(a: &AlphaEstimate) -> CompletenessVerdict {
    let class = if a.infinite || a.lower > 1.0 {
        Completeness::Incomplete
    } else if a.upper_or_inf() < 1.0 {
        Completeness::Complete
    } else {
        Completeness::BorderlineComplete
    };
    CompletenessVerdict {
        class,
        heuristic: a.heuristic,
    }
}

/// Parameters of the `S_α` membership test.
#[derive(Debug, Clone, Serialize)]
pub struct MembershipConfig {
    /// Half-width of the window on which subharmonicity is checked.
    pub window: f64,
    pub n: usize,
    pub r_max: f64,
    pub alpha_window: usize,
    pub alpha: AlphaConfig,
}

impl Default for MembershipConfig {
    fn default() -> Self {
        Self {
            window: 4.0,
            n: 129,
            r_max: 1e6,
            alpha_window: 4,
            alpha: AlphaConfig::default(),
        }
    }
}

/// Membership in `S_α`: subharmonic on the analysis window and growth
/// exponent at most `alpha` (upper band within `tol`).
pub fn s_alpha_member(
    u: &Expr,
    alpha: f64,
    tol: f64,
    cfg: &MembershipConfig,
) -> Result<bool, AsymptoticsError> {
    if alpha < 0.0 {
        return Err(AsymptoticsError::InvalidParameter(format!(
            "alpha must be nonnegative, got {alpha}"
        )));
    }
    let grid = ScalarGrid::from_expr(u, Lattice::new(cfg.window, cfg.n)?)?;
    if !is_subharmonic(&grid, None).pass {
        return Ok(false);
    }
    let est = alpha_estimate(u, cfg.r_max, cfg.alpha_window, &cfg.alpha)?;
    Ok(!est.infinite && est.upper_or_inf() <= alpha + tol)
}
