use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

/// Completeness, curvature and normal forms of conformal metrics e^{-2u}g₀.
///
/// Every subcommand writes one JSON report to standard output. Numeric
/// parameters can also be set through CONFPLANE_* environment variables;
/// flags take precedence over the environment.
#[derive(Debug, Parser)]
#[command(name = "confplane", version, propagate_version = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Subharmonicity, growth exponent, completeness, ray oracle and flatness of u.
    Analyze(AnalyzeArgs),
    /// Growth exponent α(u) and the completeness class it implies.
    Alpha(AlphaArgs),
    /// Gauss curvature K = e^{2u}Δu on a grid.
    Curvature(CurvatureArgs),
    /// Escaping-ray test of the completion metrics (s + e^{-2u})g₀.
    Complete(CompleteArgs),
    /// Conformal decomposition, Beltrami solver and the normal-form round trip.
    #[command(subcommand)]
    Beltrami(BeltramiCommand),
    /// Deformation paths and surfaces of revolution.
    #[command(subcommand)]
    Deform(DeformCommand),
    /// Conformal path lengths and the escaping-ray search.
    Oracle(OracleArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Analyze(_) => "analyze",
            Command::Alpha(_) => "alpha",
            Command::Curvature(_) => "curvature",
            Command::Complete(_) => "complete",
            Command::Beltrami(BeltramiCommand::Decompose(_)) => "beltrami decompose",
            Command::Beltrami(BeltramiCommand::Solve(_)) => "beltrami solve",
            Command::Beltrami(BeltramiCommand::Roundtrip(_)) => "beltrami roundtrip",
            Command::Deform(DeformCommand::Convex(_)) => "deform convex",
            Command::Deform(DeformCommand::CompletePath(_)) => "deform complete-path",
            Command::Deform(DeformCommand::Revolve(_)) => "deform revolve",
            Command::Oracle(_) => "oracle",
        }
    }
}

/// Growth estimator settings shared by several subcommands.
#[derive(Debug, Clone, Args, Serialize)]
pub struct GrowthArgs {
    /// Largest radius of the M(r,u) profile.
    #[arg(long, env = "CONFPLANE_R_MAX", default_value_t = 1e6)]
    pub r_max: f64,
    /// Number of trailing profile windows inspected by the estimator.
    #[arg(long, env = "CONFPLANE_ALPHA_WINDOW", default_value_t = 4)]
    pub alpha_window: usize,
    /// First radius of the profile.
    #[arg(long, env = "CONFPLANE_R0", default_value_t = 1.0)]
    pub r0: f64,
    /// Nominal ratio between consecutive radii.
    #[arg(long, env = "CONFPLANE_RHO", default_value_t = 2.0)]
    pub rho: f64,
    /// Samples per circle when maximizing u.
    #[arg(long, env = "CONFPLANE_SAMPLES", default_value_t = 512)]
    pub samples: usize,
    /// Slope above which an increasing slope sequence is reported as +∞.
    #[arg(long, env = "CONFPLANE_INFINITY_CAP", default_value_t = 50.0)]
    pub infinity_cap: f64,
}

/// Escaping-ray search settings.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RayArgs {
    /// Number of equally spaced ray directions.
    #[arg(long, env = "CONFPLANE_ANGLES", default_value_t = 64)]
    pub angles: usize,
    /// Radius at which every ray stops.
    #[arg(long, env = "CONFPLANE_RAY_R_MAX", default_value_t = 1e6)]
    pub ray_r_max: f64,
    /// Ratio between consecutive checkpoints.
    #[arg(long, env = "CONFPLANE_RAY_RATIO", default_value_t = 2.0)]
    pub ray_ratio: f64,
    /// Last increment below which a ray counts as finite.
    #[arg(long, env = "CONFPLANE_FINITE_THRESHOLD", default_value_t = 1e-6)]
    pub finite_threshold: f64,
    /// Partial length above which a ray counts as divergent.
    #[arg(long, env = "CONFPLANE_DIVERGE_THRESHOLD", default_value_t = 1e3)]
    pub diverge_threshold: f64,
    /// Absolute quadrature tolerance per segment.
    #[arg(long, env = "CONFPLANE_QUAD_TOL", default_value_t = 1e-9)]
    pub quad_tol: f64,
    /// Write one row per ray and checkpoint to this CSV file.
    #[arg(long)]
    pub rays_csv: Option<PathBuf>,
}

/// Sampling window `[-L, L]²` with `n` nodes per axis.
#[derive(Debug, Clone, Args, Serialize)]
pub struct WindowArgs {
    /// Half-width L of the square window.
    #[arg(long, env = "CONFPLANE_WINDOW", default_value_t = 4.0)]
    pub window: f64,
    /// Nodes per axis.
    #[arg(long, env = "CONFPLANE_N", default_value_t = 129)]
    pub n: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnalyzeArgs {
    /// Conformal factor u(x, y).
    #[arg(long)]
    pub u: String,
    #[command(flatten)]
    pub grid: WindowArgs,
    #[command(flatten)]
    pub growth: GrowthArgs,
    #[command(flatten)]
    pub rays: RayArgs,
    /// Bound on max |Δu| for the flatness verdict.
    #[arg(long, env = "CONFPLANE_FLAT_TOL", default_value_t = 1e-6)]
    pub flat_tol: f64,
    /// Write the radial maximum profile to this CSV file.
    #[arg(long)]
    pub profile_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AlphaArgs {
    /// Conformal factor u(x, y).
    #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
    pub u: Option<String>,
    /// CPG1 grid of u; the estimate is limited to circles inside its window.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    #[command(flatten)]
    pub growth: GrowthArgs,
    /// Also test membership in S_α for this α.
    #[arg(long)]
    pub member_of: Option<f64>,
    /// Tolerance on the upper band for the membership test.
    #[arg(long, env = "CONFPLANE_MEMBER_TOL", default_value_t = 1e-6)]
    pub member_tol: f64,
    /// Half-width of the subharmonicity window for the membership test.
    #[arg(long, env = "CONFPLANE_WINDOW", default_value_t = 4.0)]
    pub window: f64,
    /// Nodes per axis of the subharmonicity window.
    #[arg(long, env = "CONFPLANE_N", default_value_t = 129)]
    pub n: usize,
    /// Write the radial maximum profile to this CSV file.
    #[arg(long)]
    pub profile_csv: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CurvatureArgs {
    /// Conformal factor u(x, y).
    #[arg(long, required_unless_present = "grid", conflicts_with = "grid")]
    pub u: Option<String>,
    /// CPG1 grid of u instead of an expression.
    #[arg(long)]
    pub grid: Option<PathBuf>,
    /// Half-width L of the window (ignored with --grid).
    #[arg(long, env = "CONFPLANE_WINDOW", default_value_t = 2.0)]
    pub window: f64,
    /// Nodes per axis (ignored with --grid).
    #[arg(long, env = "CONFPLANE_N", default_value_t = 129)]
    pub n: usize,
    /// Bound on max |K| for the flatness verdict.
    #[arg(long, env = "CONFPLANE_FLAT_TOL", default_value_t = 1e-6)]
    pub flat_tol: f64,
    /// Subharmonicity tolerance; defaults to a round-off bound from the grid.
    #[arg(long)]
    pub subharmonic_tol: Option<f64>,
    /// Write K as a CPG1 grid.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a heatmap of K.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompleteArgs {
    /// Conformal factor u(x, y).
    #[arg(long)]
    pub u: String,
    /// Completion parameters s ≥ 0, comma separated.
    #[arg(long, env = "CONFPLANE_S", value_delimiter = ',', default_value = "1")]
    pub s: Vec<f64>,
    #[command(flatten)]
    pub grid: WindowArgs,
    #[command(flatten)]
    pub rays: RayArgs,
    /// Curvature above -tol counts as nonnegative.
    #[arg(long, env = "CONFPLANE_CURVATURE_TOL", default_value_t = 1e-9)]
    pub curvature_tol: f64,
}

#[derive(Debug, Subcommand)]
pub enum BeltramiCommand {
    /// Split a metric into its conformal factor λ and Beltrami coefficient μ.
    Decompose(DecomposeArgs),
    /// Solve φ_z̄ = μ φ_z with φ(0) = 0, φ(1) = 1.
    Solve(SolveArgs),
    /// decompose, solve, recover the factor and pull back; report the deviation.
    Roundtrip(RoundtripArgs),
}

/// Metric components as CPG1 grids on a common lattice.
#[derive(Debug, Clone, Args, Serialize)]
pub struct MetricFiles {
    #[arg(long = "E", value_name = "FILE")]
    pub e: PathBuf,
    #[arg(long = "F", value_name = "FILE")]
    pub f: PathBuf,
    #[arg(long = "G", value_name = "FILE")]
    pub g: PathBuf,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DecomposeArgs {
    #[command(flatten)]
    pub metric: MetricFiles,
    /// Write PREFIX.lambda.cpg, PREFIX.mu.re.cpg and PREFIX.mu.im.cpg.
    #[arg(long)]
    pub out_prefix: Option<String>,
    /// Write a heatmap of |μ|.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolveArgs {
    /// Constant coefficient `re,im`.
    #[arg(long, conflicts_with_all = ["mu_re", "mu_im"], required_unless_present = "mu_re")]
    pub mu: Option<String>,
    /// CPG1 grid of Re μ.
    #[arg(long, requires = "mu_im")]
    pub mu_re: Option<PathBuf>,
    /// CPG1 grid of Im μ.
    #[arg(long, requires = "mu_re")]
    pub mu_im: Option<PathBuf>,
    /// Half-width L of the solver window; defaults to the μ grid's.
    #[arg(long, env = "CONFPLANE_WINDOW")]
    pub window: Option<f64>,
    /// Periodic grid size (even); the map has n + 1 nodes per axis.
    #[arg(long, env = "CONFPLANE_N")]
    pub n: Option<usize>,
    #[command(flatten)]
    pub solver: SolverArgs,
    /// Write PREFIX.phi.re.cpg and PREFIX.phi.im.cpg.
    #[arg(long)]
    pub out_prefix: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SolverArgs {
    /// Zero-padding factor of the periodic domain.
    #[arg(long, env = "CONFPLANE_PADDING", default_value_t = 2)]
    pub padding: usize,
    /// Fixed-point residual target.
    #[arg(long, env = "CONFPLANE_SOLVER_TOL", default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, env = "CONFPLANE_MAX_ITERATIONS", default_value_t = 200)]
    pub max_iterations: usize,
    /// Taper support radius; defaults to the window half-width.
    #[arg(long, env = "CONFPLANE_TAPER_RADIUS")]
    pub taper_radius: Option<f64>,
    /// Fraction of the taper radius on which the taper equals 1.
    #[arg(long, env = "CONFPLANE_TAPER_PLATEAU", default_value_t = 0.8)]
    pub taper_plateau: f64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RoundtripArgs {
    #[command(flatten)]
    pub metric: MetricFiles,
    /// Comparison window as a fraction of the grid half-width.
    #[arg(long, env = "CONFPLANE_INNER_FRACTION", default_value_t = 0.5)]
    pub inner_fraction: f64,
    /// Fixed-point residual target.
    #[arg(long, env = "CONFPLANE_SOLVER_TOL", default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, env = "CONFPLANE_MAX_ITERATIONS", default_value_t = 200)]
    pub max_iterations: usize,
}

#[derive(Debug, Subcommand)]
pub enum DeformCommand {
    /// Points (1−s)u₀ + s u₁ of the straight path, with their growth exponents.
    Convex(ConvexArgs),
    /// Conformal factors s + e^{-2u} of the completion path, with curvature.
    CompletePath(CompletePathArgs),
    /// Induced metric of the surface of revolution z = f(r).
    Revolve(RevolveArgs),
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ConvexArgs {
    #[arg(long)]
    pub u0: String,
    #[arg(long)]
    pub u1: String,
    /// Path parameters in [0, 1], comma separated.
    #[arg(long, env = "CONFPLANE_S", value_delimiter = ',', default_value = "0,0.25,0.5,0.75,1")]
    pub s: Vec<f64>,
    #[command(flatten)]
    pub grid: WindowArgs,
    #[command(flatten)]
    pub growth: GrowthArgs,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CompletePathArgs {
    #[arg(long)]
    pub u: String,
    /// Completion parameters s ≥ 0, comma separated.
    #[arg(long, env = "CONFPLANE_S", value_delimiter = ',', default_value = "0,0.5,1")]
    pub s: Vec<f64>,
    #[command(flatten)]
    pub grid: WindowArgs,
    /// Curvature above -tol counts as nonnegative.
    #[arg(long, env = "CONFPLANE_CURVATURE_TOL", default_value_t = 1e-9)]
    pub curvature_tol: f64,
    /// Write PREFIX.s<k>.factor.cpg for the k-th parameter.
    #[arg(long)]
    pub out_prefix: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct RevolveArgs {
    /// Profile f in the variable x (standing for r), or `disc-cone` for the
    /// flat-disc profile that becomes a cone.
    #[arg(long, default_value = "disc-cone")]
    pub profile: String,
    /// Half-width L of the window.
    #[arg(long, env = "CONFPLANE_WINDOW", default_value_t = 5.0)]
    pub window: f64,
    /// Nodes per axis.
    #[arg(long, env = "CONFPLANE_N", default_value_t = 257)]
    pub n: usize,
    /// Write PREFIX.E.cpg, PREFIX.F.cpg and PREFIX.G.cpg.
    #[arg(long)]
    pub out_prefix: Option<String>,
    /// Write a heatmap of the curvature.
    #[arg(long)]
    pub svg: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OracleArgs {
    /// Conformal factor u(x, y).
    #[arg(long)]
    pub u: String,
    /// Polyline `x0,y0;x1,y1;...` whose length ∫e^{-u}ds is computed.
    #[arg(long)]
    pub path: Option<String>,
    /// Absolute tolerance for the polyline length.
    #[arg(long, env = "CONFPLANE_PATH_TOL", default_value_t = 1e-9)]
    pub path_tol: f64,
    #[command(flatten)]
    pub rays: RayArgs,
}
