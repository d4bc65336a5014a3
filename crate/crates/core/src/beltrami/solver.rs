use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use super::fft::PeriodicTransforms;
use super::{BeltramiCoefficient, BeltramiError, ComplexGrid, PlaneDiffeo};
use crate::field::Lattice;

/// Radial cut-off: `1` for `r ≤ plateau·radius`, a half cosine down to `0`
/// at `r = radius`, and `0` beyond.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Taper {
    pub radius: f64,
    pub plateau: f64,
}

impl Taper {
    /// Support radius equal to the window half-width, flat on the inner 80%.
    pub fn for_window(half_width: f64) -> Self {
        Self {
            radius: half_width,
            plateau: 0.8,
        }
    }

    pub fn weight(&self, r: f64) -> f64 {
        let r0 = self.plateau * self.radius;
        if r <= r0 {
            1.0
        } else if r >= self.radius {
            0.0
        } else {
            0.5 * (1.0 + (PI * (r - r0) / (self.radius - r0)).cos())
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct SolverOptions {
    pub half_width: f64,
    /// Periodic grid size; the returned map lives on `n + 1` nodes per axis.
    pub n: usize,
    pub taper: Taper,
    /// The periodic domain is `padding` times the window, zero-filled.
    pub padding: usize,
    pub tol: f64,
    pub max_iterations: usize,
}

impl SolverOptions {
    pub fn new(half_width: f64, n: usize) -> Self {
        Self {
            half_width,
            n,
            taper: Taper::for_window(half_width),
            padding: 2,
            tol: 1e-10,
            max_iterations: 200,
        }
    }

    /// Lattice of the returned map: `[-L, L]²` with `n + 1` nodes.
    pub fn lattice(&self) -> Result<Lattice, BeltramiError> {
        Ok(Lattice::new(self.half_width, self.n + 1)?)
    }
}

#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    /// `max |ω − μ S(ω) − μ|` at the returned iterate.
    pub residual: f64,
    /// `sup |μ|` after tapering; the iteration's contraction ratio.
    pub contraction: f64,
    pub residual_history: Vec<f64>,
    pub taper: Taper,
}

/// Solves `φ_z̄ = μ φ_z` on `[-L, L]²` and normalizes `φ(0) = 0`, `φ(1) = 1`.
///
/// `μ` is resampled onto the solver lattice (zero outside its own window) and
/// multiplied by the taper, on a zero-padded periodic domain. With `ω = φ_z̄` the equation becomes
/// `ω = μ S(ω) + μ`, iterated from `ω = μ`; then
/// `φ = z + mean(ω)·z̄ + C(ω − mean(ω))`, `φ_z = 1 + S(ω)`, `φ_z̄ = ω`.
pub fn solve_beltrami(
    mu: &BeltramiCoefficient,
    opts: &SolverOptions,
) -> Result<PlaneDiffeo, BeltramiError> {
    let n = opts.n;
    if n < 8 || !n.is_multiple_of(2) {
        return Err(BeltramiError::InvalidParameter(format!(
            "periodic grid size must be even and at least 8, got {n}"
        )));
    }
    if opts.padding == 0 {
        return Err(BeltramiError::InvalidParameter("padding must be at least 1".into()));
    }
    if !(opts.half_width > 1.0) {
        return Err(BeltramiError::InvalidParameter(
            "the window must contain the point 1".into(),
        ));
    }
    let lattice = opts.lattice()?;
    let h = lattice.spacing();
    let same = mu.lattice() == &lattice;
    let taper = opts.taper;
    let big = n * opts.padding;
    let outer = opts.half_width * opts.padding as f64;
    let offset = (opts.padding - 1) * n / 2;
    let m: Vec<Complex64> = (0..big * big)
        .into_par_iter()
        .map(|k| {
            let (i, j) = (k % big, k / big);
            let (x, y) = (-outer + i as f64 * h, -outer + j as f64 * h);
            let inside = (offset..=offset + n).contains(&i) && (offset..=offset + n).contains(&j);
            let raw = if same && inside {
                mu.grid().get(i - offset, j - offset)
            } else {
                mu.grid()
                    .interpolate(x, y)
                    .unwrap_or(Complex64::new(0.0, 0.0))
            };
            raw * taper.weight(x.hypot(y))
        })
        .collect();
    let contraction = m.iter().map(|v| v.norm()).fold(0.0, f64::max);
    if contraction >= 1.0 {
        return Err(BeltramiError::InvalidParameter(format!(
            "sup |mu| = {contraction} after tapering"
        )));
    }

    let t = PeriodicTransforms::new(big, outer);
    let mut omega = m.clone();
    let mut s_omega = t.beurling(&omega);
    let mut history = Vec::new();
    let mut iterations = 0;
    let residual = loop {
        let res = omega
            .par_iter()
            .zip(&m)
            .zip(&s_omega)
            .map(|((w, mu), s)| (w - mu * s - mu).norm())
            .reduce(|| 0.0, f64::max);
        history.push(res);
        if res <= opts.tol {
            break res;
        }
        if iterations >= opts.max_iterations {
            return Err(BeltramiError::NoConvergence {
                iterations,
                residual: res,
                contraction,
            });
        }
        omega = m
            .par_iter()
            .zip(&s_omega)
            .map(|(mu, s)| mu * s + mu)
            .collect();
        s_omega = t.beurling(&omega);
        iterations += 1;
    };

    let mean = omega.iter().sum::<Complex64>() / (big * big) as f64;
    let centred: Vec<Complex64> = omega.iter().map(|w| w - mean).collect();
    let p = t.cauchy(&centred);
    let nodes = lattice.n();
    let wrap = |i: usize, j: usize| ((j + offset) % big) * big + (i + offset) % big;
    let values: Vec<Complex64> = (0..lattice.len())
        .map(|k| {
            let (i, j) = (k % nodes, k / nodes);
            let z = Complex64::new(-opts.half_width + i as f64 * h, -opts.half_width + j as f64 * h);
            z + mean * z.conj() + p[wrap(i, j)]
        })
        .collect();
    let dz = (0..lattice.len())
        .map(|k| 1.0 + s_omega[wrap(k % nodes, k / nodes)])
        .collect();
    let dzbar = (0..lattice.len())
        .map(|k| omega[wrap(k % nodes, k / nodes)])
        .collect();
    let report = SolveReport {
        iterations,
        residual,
        contraction,
        residual_history: history,
        taper,
    };
    PlaneDiffeo::from_parts(ComplexGrid::from_values(lattice, values)?, dz, dzbar, report)?
        .normalized()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::beltrami::dilatation;

    fn inner_error(phi: &PlaneDiffeo, w: f64, exact: impl Fn(Complex64) -> Complex64) -> f64 {
        let l = phi.lattice();
        let n = l.n();
        let mut err: f64 = 0.0;
        for j in 0..n {
            for i in 0..n {
                let (x, y) = l.point(i, j);
                if x.abs() <= w && y.abs() <= w {
                    err = err.max((phi.at(i, j) - exact(Complex64::new(x, y))).norm());
                }
            }
        }
        err
    }

    #[test]
    fn zero_coefficient_gives_identity() {
        let opts = SolverOptions::new(2.0, 32);
        let mu = BeltramiCoefficient::constant(opts.lattice().unwrap(), Complex64::new(0.0, 0.0))
            .unwrap();
        let phi = solve_beltrami(&mu, &opts).unwrap();
        assert_eq!(phi.solve_report().unwrap().iterations, 0);
        assert!(inner_error(&phi, 2.0, |z| z) < 1e-14);
    }

    #[test]
    fn constant_coefficient_reproduces_affine_map_inside() {
        let opts = SolverOptions::new(4.0, 128);
        let c = Complex64::new(0.3, 0.0);
        let mu = BeltramiCoefficient::constant(opts.lattice().unwrap(), c).unwrap();
        let phi = solve_beltrami(&mu, &opts).unwrap();
        let report = phi.solve_report().unwrap();
        assert!(report.residual <= 1e-10);
        assert!(report.iterations <= 60, "{}", report.iterations);
        let err = inner_error(&phi, 2.0, |z| (z + c * z.conj()) / (1.0 + c));
        assert!(err < 1e-2, "{err}");
    }

    #[test]
    fn dilatation_of_solution_matches_coefficient() {
        let opts = SolverOptions::new(4.0, 128);
        let c = Complex64::new(0.0, 0.2);
        let mu = BeltramiCoefficient::constant(opts.lattice().unwrap(), c).unwrap();
        let phi = solve_beltrami(&mu, &opts).unwrap();
        let back = dilatation(&phi).unwrap();
        let l = phi.lattice();
        let (inner, off) = l.inner(2.0).unwrap();
        let err = back
            .grid()
            .restrict(inner, off)
            .values()
            .iter()
            .map(|v| (v - c).norm())
            .fold(0.0, f64::max);
        assert!(err < 1e-9, "{err}");
    }

    #[test]
    fn tiny_grids_are_rejected() {
        let opts = SolverOptions::new(2.0, 6);
        let lattice = Lattice::new(2.0, 7).unwrap();
        let mu = BeltramiCoefficient::constant(lattice, Complex64::new(0.1, 0.0)).unwrap();
        assert!(solve_beltrami(&mu, &opts).is_err());
    }

    #[test]
    fn taper_shape() {
        let t = Taper::for_window(5.0);
        assert_eq!(t.weight(0.0), 1.0);
        assert_eq!(t.weight(4.0), 1.0);
        assert!((t.weight(4.5) - 0.5).abs() < 1e-15);
        assert_eq!(t.weight(5.0), 0.0);
        assert_eq!(t.weight(7.0), 0.0);
    }
}
