//! Uniform square grids, the five-point Laplacian, conformal curvature and
//! subharmonicity checks.

mod io;
mod ops;

use rayon::prelude::*;
use thiserror::Error;

use crate::expr::{EvalError, Expr};

pub use io::{read_cpg1, read_csv, write_cpg1, write_csv};
pub use ops::{
    curvature, default_tolerance, is_subharmonic, laplacian, sample, CurvatureField,
    SubharmonicVerdict,
};

#[derive(Debug, Error)]
pub enum FieldError {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),
    #[error("non-finite value at node ({i}, {j})")]
    NonFinite { i: usize, j: usize },
    #[error("cannot evaluate at node ({i}, {j}): {source}")]
    Eval {
        i: usize,
        j: usize,
        #[source]
        source: EvalError,
    },
    #[error("metric is not positive definite at node ({i}, {j}): E={e}, F={f}, G={g}")]
    NotPositiveDefinite {
        i: usize,
        j: usize,
        e: f64,
        f: f64,
        g: f64,
    },
    #[error("grids live on different lattices")]
    LatticeMismatch,
    #[error("grid file, line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Square lattice `[-L, L]²` with `n` nodes per axis, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Lattice {
    half_width: f64,
    n: usize,
}

impl Lattice {
    pub fn new(half_width: f64, n: usize) -> Result<Self, FieldError> {
        if !(half_width.is_finite() && half_width > 0.0) {
            return Err(FieldError::InvalidLattice(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if n < 3 {
            return Err(FieldError::InvalidLattice(format!(
                "need at least 3 nodes per axis, got {n}"
            )));
        }
        Ok(Self { half_width, n })
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> f64 {
        2.0 * self.half_width / (self.n - 1) as f64
    }

    /// Coordinate of node index `i` along either axis. The centre node of an
    /// odd lattice is exactly zero.
    pub fn coord(&self, i: usize) -> f64 {
        let m = (self.n - 1) as f64;
        self.half_width * (2.0 * i as f64 - m) / m
    }

    pub fn point(&self, i: usize, j: usize) -> (f64, f64) {
        (self.coord(i), self.coord(j))
    }

    /// Row-major index; `j` selects the row (y), `i` the column (x).
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.n + i
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x.abs() <= self.half_width && y.abs() <= self.half_width
    }

    /// Index of the node at `value` if one sits there (within `1e-9·h`).
    pub fn node_at(&self, value: f64) -> Option<usize> {
        let t = (value + self.half_width) / self.spacing();
        let k = t.round();
        if k < 0.0 || k > (self.n - 1) as f64 || (t - k).abs() > 1e-9 {
            return None;
        }
        Some(k as usize)
    }

    /// Cell containing `(x, y)` and the local coordinates inside it.
    pub(crate) fn locate(&self, x: f64, y: f64) -> Option<(usize, usize, f64, f64)> {
        if !self.contains(x, y) {
            return None;
        }
        let h = self.spacing();
        let cell = |v: f64| {
            let t = (v + self.half_width) / h;
            let k = (t.floor() as usize).min(self.n - 2);
            (k, (t - k as f64).clamp(0.0, 1.0))
        };
        let (i, s) = cell(x);
        let (j, t) = cell(y);
        Some((i, j, s, t))
    }

    /// Largest sub-lattice with the same spacing inside `[-w, w]²`.
    pub fn inner(&self, w: f64) -> Result<(Lattice, usize), FieldError> {
        let h = self.spacing();
        let k = ((w / h) + 1e-9).floor() as usize;
        let centre2 = self.n - 1;
        if !centre2.is_multiple_of(2) {
            return Err(FieldError::InvalidLattice(
                "sub-lattices need an odd node count".into(),
            ));
        }
        let centre = centre2 / 2;
        if k == 0 || k > centre {
            return Err(FieldError::InvalidLattice(format!(
                "inner half-width {w} does not fit"
            )));
        }
        Ok((Lattice::new(k as f64 * h, 2 * k + 1)?, centre - k))
    }
}

/// Values of a scalar function at every node of a [`Lattice`].
///
/// Grids produced by stencils carry `ring_valid = false`: the outermost ring
/// of nodes holds zeros and must not enter any verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarGrid {
    lattice: Lattice,
    values: Vec<f64>,
    ring_valid: bool,
}

impl ScalarGrid {
    pub fn from_values(lattice: Lattice, values: Vec<f64>) -> Result<Self, FieldError> {
        if values.len() != lattice.len() {
            return Err(FieldError::InvalidLattice(format!(
                "expected {} values, got {}",
                lattice.len(),
                values.len()
            )));
        }
        if let Some(k) = values.iter().position(|v| !v.is_finite()) {
            return Err(FieldError::NonFinite {
                i: k % lattice.n,
                j: k / lattice.n,
            });
        }
        Ok(Self {
            lattice,
            values,
            ring_valid: true,
        })
    }

    pub(crate) fn interior_only(lattice: Lattice, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), lattice.len());
        Self {
            lattice,
            values,
            ring_valid: false,
        }
    }

    pub fn constant(lattice: Lattice, value: f64) -> Self {
        Self {
            lattice,
            values: vec![value; lattice.len()],
            ring_valid: true,
        }
    }

    /// Evaluates `f` at every node, in parallel by rows.
    pub fn try_from_fn<E, F>(lattice: Lattice, f: F) -> Result<Self, E>
    where
        F: Fn(usize, usize, f64, f64) -> Result<f64, E> + Sync,
        E: Send,
    {
        let n = lattice.n;
        let rows: Result<Vec<Vec<f64>>, E> = (0..n)
            .into_par_iter()
            .map(|j| {
                (0..n)
                    .map(|i| {
                        let (x, y) = lattice.point(i, j);
                        f(i, j, x, y)
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            lattice,
            values: rows?.concat(),
            ring_valid: true,
        })
    }

    pub fn from_expr(expr: &Expr, lattice: Lattice) -> Result<Self, FieldError> {
        Self::try_from_fn(lattice, |i, j, x, y| {
            expr.eval(x, y)
                .map_err(|source| FieldError::Eval { i, j, source })
        })
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn ring_valid(&self) -> bool {
        self.ring_valid
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[self.lattice.index(i, j)]
    }

    /// True for nodes that carry meaningful values.
    pub fn is_valid_node(&self, i: usize, j: usize) -> bool {
        let n = self.lattice.n;
        self.ring_valid || (i > 0 && j > 0 && i + 1 < n && j + 1 < n)
    }

    /// `(i, j, value)` for every valid node.
    pub fn valid_nodes(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.lattice.n;
        (0..n)
            .flat_map(move |j| (0..n).map(move |i| (i, j)))
            .filter(|&(i, j)| self.is_valid_node(i, j))
            .map(|(i, j)| (i, j, self.get(i, j)))
    }

    /// Bilinear interpolation; `None` outside the window.
    pub fn interpolate(&self, x: f64, y: f64) -> Option<f64> {
        let (i, j, s, t) = self.lattice.locate(x, y)?;
        let v00 = self.get(i, j);
        let v10 = self.get(i + 1, j);
        let v01 = self.get(i, j + 1);
        let v11 = self.get(i + 1, j + 1);
        Some((1.0 - t) * ((1.0 - s) * v00 + s * v10) + t * ((1.0 - s) * v01 + s * v11))
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            lattice: self.lattice,
            values: self.values.iter().map(|&v| f(v)).collect(),
            ring_valid: self.ring_valid,
        }
    }

    /// Restriction to a sub-lattice starting at node `(offset, offset)`.
    pub fn restrict(&self, sub: Lattice, offset: usize) -> Self {
        let values = (0..sub.n)
            .flat_map(|j| (0..sub.n).map(move |i| (i, j)))
            .map(|(i, j)| self.get(i + offset, j + offset))
            .collect();
        Self {
            lattice: sub,
            values,
            ring_valid: true,
        }
    }

    /// Extreme values over valid nodes: `(min, argmin, max, argmax)`.
    pub fn extremes(&self) -> ((f64, (usize, usize)), (f64, (usize, usize))) {
        let mut lo = (f64::INFINITY, (0, 0));
        let mut hi = (f64::NEG_INFINITY, (0, 0));
        for (i, j, v) in self.valid_nodes() {
            if v < lo.0 {
                lo = (v, (i, j));
            }
            if v > hi.0 {
                hi = (v, (i, j));
            }
        }
        (lo, hi)
    }

    /// Rows (y increasing) as nested vectors.
    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.values
            .chunks(self.lattice.n)
            .map(|r| r.to_vec())
            .collect()
    }
}

/// First fundamental form `E dx² + 2F dx dy + G dy²` sampled on a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricGrid {
    pub e: ScalarGrid,
    pub f: ScalarGrid,
    pub g: ScalarGrid,
}

impl MetricGrid {
    /// Checks shared lattice and pointwise positive definiteness.
    pub fn new(e: ScalarGrid, f: ScalarGrid, g: ScalarGrid) -> Result<Self, FieldError> {
        if e.lattice != f.lattice || e.lattice != g.lattice {
            return Err(FieldError::LatticeMismatch);
        }
        let n = e.lattice.n;
        for k in 0..e.lattice.len() {
            let (ev, fv, gv) = (e.values[k], f.values[k], g.values[k]);
            if !(ev > 0.0 && gv > 0.0 && ev * gv - fv * fv > 0.0) {
                return Err(FieldError::NotPositiveDefinite {
                    i: k % n,
                    j: k / n,
                    e: ev,
                    f: fv,
                    g: gv,
                });
            }
        }
        Ok(Self { e, f, g })
    }

    /// Conformal metric `factor · g₀`.
    pub fn conformal(factor: ScalarGrid) -> Result<Self, FieldError> {
        let zero = ScalarGrid::constant(factor.lattice, 0.0);
        Self::new(factor.clone(), zero, factor)
    }

    pub fn euclidean(lattice: Lattice) -> Self {
        Self {
            e: ScalarGrid::constant(lattice, 1.0),
            f: ScalarGrid::constant(lattice, 0.0),
            g: ScalarGrid::constant(lattice, 1.0),
        }
    }

    pub fn from_exprs(e: &Expr, f: &Expr, g: &Expr, lattice: Lattice) -> Result<Self, FieldError> {
        Self::new(
            ScalarGrid::from_expr(e, lattice)?,
            ScalarGrid::from_expr(f, lattice)?,
            ScalarGrid::from_expr(g, lattice)?,
        )
    }

    pub fn lattice(&self) -> &Lattice {
        &self.e.lattice
    }

    /// `(E, F, G)` at node `(i, j)`.
    pub fn at(&self, i: usize, j: usize) -> (f64, f64, f64) {
        (self.e.get(i, j), self.f.get(i, j), self.g.get(i, j))
    }

    pub fn interpolate(&self, x: f64, y: f64) -> Option<(f64, f64, f64)> {
        Some((
            self.e.interpolate(x, y)?,
            self.f.interpolate(x, y)?,
            self.g.interpolate(x, y)?,
        ))
    }

    pub fn restrict(&self, sub: Lattice, offset: usize) -> Self {
        Self {
            e: self.e.restrict(sub, offset),
            f: self.f.restrict(sub, offset),
            g: self.g.restrict(sub, offset),
        }
    }
}
