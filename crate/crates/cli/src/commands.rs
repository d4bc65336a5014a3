use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::{json, Value};

use confplane::asymptotics::{
    alpha_estimate, alpha_radii, classify_completeness, profile_on, s_alpha_member, AlphaConfig,
    AsymptoticsError, MembershipConfig, RadialMaxProfile,
};
use confplane::beltrami::{
    decompose, pi_roundtrip, solve_beltrami, BeltramiCoefficient, BeltramiError, ComplexGrid,
    RoundtripOptions, SolverOptions, Taper,
};
use confplane::deform::{
    completion_curvature, completion_density, completion_path, convex_path, flatness_test,
    revolve, revolve_curvature, DeformError, RevolutionProfile,
};
use confplane::field::{curvature, is_subharmonic, sample, FieldError};
use confplane::oracle::{
    conformal_length, cross_validate, ray_escape_search, ConformalFactor, CrossConfig,
    EscapeReport, OracleError, PathPolyline, RayBehaviour, RaySearchConfig,
};
use confplane::{Lattice, MetricGrid, ScalarGrid};

use crate::args::*;
use crate::plot;
use crate::report::{usage, Context};

type Outcome = anyhow::Result<Value>;

/// Library errors caused by bad input map to usage errors, the rest are
/// numeric failures.
trait Classify<T> {
    fn classify(self) -> anyhow::Result<T>;
}

macro_rules! classify_by {
    ($err:ty, $($pat:pat),+) => {
        impl<T> Classify<T> for Result<T, $err> {
            fn classify(self) -> anyhow::Result<T> {
                self.map_err(|e| match e {
                    $($pat)|+ => usage(e.to_string()),
                    other => other.into(),
                })
            }
        }
    };
}

classify_by!(
    FieldError,
    FieldError::InvalidLattice(_),
    FieldError::LatticeMismatch,
    FieldError::NotPositiveDefinite { .. }
);
classify_by!(
    AsymptoticsError,
    AsymptoticsError::InvalidParameter(_),
    AsymptoticsError::Field(FieldError::InvalidLattice(_))
);
classify_by!(
    OracleError,
    OracleError::InvalidParameter(_),
    OracleError::InvalidPath(_),
    OracleError::Asymptotics(AsymptoticsError::InvalidParameter(_)),
    OracleError::Field(FieldError::InvalidLattice(_))
);
classify_by!(
    BeltramiError,
    BeltramiError::InvalidParameter(_),
    BeltramiError::NotContracting { .. },
    BeltramiError::NotPositiveDefinite { .. },
    BeltramiError::Field(FieldError::InvalidLattice(_))
);
classify_by!(
    DeformError,
    DeformError::InvalidParameter(_),
    DeformError::ConvexityViolation { .. },
    DeformError::NegativeProfile { .. },
    DeformError::NotSmoothAtOrigin { .. },
    DeformError::Field(FieldError::InvalidLattice(_))
);

fn lattice(window: f64, n: usize) -> anyhow::Result<Lattice> {
    Lattice::new(window, n).classify()
}

fn alpha_config(g: &GrowthArgs) -> AlphaConfig {
    AlphaConfig {
        r0: g.r0,
        rho: g.rho,
        samples: g.samples,
        infinity_cap: g.infinity_cap,
    }
}

fn ray_config(r: &RayArgs) -> RaySearchConfig {
    RaySearchConfig {
        angles: r.angles,
        r_max: r.ray_r_max,
        ratio: r.ray_ratio,
        finite_threshold: r.finite_threshold,
        diverge_threshold: r.diverge_threshold,
        tol: r.quad_tol,
        ..RaySearchConfig::default()
    }
}

#[derive(Serialize)]
struct RaySummary {
    index: usize,
    angle: f64,
    length: f64,
    behaviour: RayBehaviour,
    quadrature_converged: bool,
}

fn oracle_summary(rep: &EscapeReport) -> Value {
    let rays: Vec<RaySummary> = rep
        .rays
        .iter()
        .map(|r| RaySummary {
            index: r.index,
            angle: r.angle,
            length: r.length(),
            behaviour: r.behaviour,
            quadrature_converged: r.quadrature_converged,
        })
        .collect();
    json!({
        "verdict": rep.verdict,
        "witness": rep.witness,
        "one_sided": rep.one_sided,
        "r_max": rep.r_max,
        "checkpoints": rep.checkpoints.len(),
        "config": rep.config,
        "rays": rays,
    })
}

fn write_rays(ctx: &mut Context, path: Option<&Path>, rep: &EscapeReport) -> anyhow::Result<()> {
    if let Some(p) = path {
        ctx.write_text(p, &plot::rays_csv(rep))?;
    }
    Ok(())
}

fn write_profile(ctx: &mut Context, path: Option<&Path>, p: &RadialMaxProfile) -> anyhow::Result<()> {
    if let Some(path) = path {
        ctx.write_text(path, &plot::profile_csv(p))?;
    }
    Ok(())
}

/// Grid rows with `null` at nodes that carry no value.
fn node_rows(grid: &ScalarGrid) -> Vec<Vec<Option<f64>>> {
    let n = grid.lattice().n();
    (0..n)
        .map(|j| {
            (0..n)
                .map(|i| grid.is_valid_node(i, j).then(|| grid.get(i, j)))
                .collect()
        })
        .collect()
}

fn extremes(grid: &ScalarGrid) -> Value {
    let ((min, argmin), (max, argmax)) = grid.extremes();
    json!({ "min": min, "argmin": argmin, "max": max, "argmax": argmax })
}

pub fn analyze(a: &AnalyzeArgs, ctx: &mut Context) -> Outcome {
    let u = ctx.expression("u", &a.u)?;
    let cfg = CrossConfig {
        alpha: alpha_config(&a.growth),
        alpha_r_max: a.growth.r_max,
        alpha_window: a.growth.alpha_window,
        rays: ray_config(&a.rays),
        window: a.grid.window,
        n: a.grid.n,
    };
    let cross = ctx.time("cross_validate", || cross_validate(&u, &cfg)).classify()?;
    let grid = lattice(a.grid.window, a.grid.n)?;
    let flatness = ctx.time("flatness", || flatness_test(&u, grid, a.flat_tol)).classify()?;
    write_rays(ctx, a.rays.rays_csv.as_deref(), &cross.oracle)?;
    if a.profile_csv.is_some() {
        let profile = profile_on(&u, alpha_radii(a.growth.r_max, &cfg.alpha), cfg.alpha.samples).classify()?;
        write_profile(ctx, a.profile_csv.as_deref(), &profile)?;
    }
    Ok(json!({
        "subharmonic": cross.subharmonic,
        "alpha": cross.alpha,
        "completeness": cross.completeness,
        "oracle": oracle_summary(&cross.oracle),
        "agreement": cross.agreement,
        "flatness": flatness,
        "heuristic": cross.heuristic,
    }))
}

pub fn alpha(a: &AlphaArgs, ctx: &mut Context) -> Outcome {
    let mut cfg = alpha_config(&a.growth);
    let window = a.growth.alpha_window;
    let mut membership = Value::Null;
    let (estimate, r_max) = if let Some(text) = &a.u {
        let u = ctx.expression("u", text)?;
        let est = ctx.time("alpha_estimate", || alpha_estimate(&u, a.growth.r_max, window, &cfg));
        if a.profile_csv.is_some() {
            let p = profile_on(&u, alpha_radii(a.growth.r_max, &cfg), cfg.samples).classify()?;
            write_profile(ctx, a.profile_csv.as_deref(), &p)?;
        }
        if let Some(alpha) = a.member_of {
            let mcfg = MembershipConfig {
                window: a.window,
                n: a.n,
                r_max: a.growth.r_max,
                alpha_window: window,
                alpha: cfg.clone(),
            };
            let member = ctx
                .time("s_alpha_member", || s_alpha_member(&u, alpha, a.member_tol, &mcfg))
                .classify()?;
            membership = json!({ "alpha": alpha, "tol": a.member_tol, "member": member });
        }
        (est.classify()?, a.growth.r_max)
    } else if let Some(path) = &a.grid {
        if a.member_of.is_some() {
            return Err(usage("--member-of needs an expression input (--u)"));
        }
        let grid = ctx.grid("u", path)?;
        let l = *grid.lattice();
        // Circles must stay inside the window.
        cfg.r0 = (4.0 * l.spacing()).max(l.half_width() / 64.0);
        let r_max = l.half_width();
        let est = ctx.time("alpha_estimate", || alpha_estimate(&grid, r_max, window, &cfg));
        if a.profile_csv.is_some() {
            let p = profile_on(&grid, alpha_radii(r_max, &cfg), cfg.samples).classify()?;
            write_profile(ctx, a.profile_csv.as_deref(), &p)?;
        }
        (est.classify()?, r_max)
    } else {
        return Err(usage("one of --u or --grid is required"));
    };
    let completeness = classify_completeness(&estimate);
    Ok(json!({
        "estimate": estimate,
        "completeness": completeness,
        "membership": membership,
        "effective_r0": cfg.r0,
        "effective_r_max": r_max,
    }))
}

pub fn curvature_cmd(a: &CurvatureArgs, ctx: &mut Context) -> Outcome {
    let grid = match (&a.u, &a.grid) {
        (Some(text), _) => {
            let u = ctx.expression("u", text)?;
            ctx.time("sample", || sample(&u, a.window, a.n)).classify()?
        }
        (None, Some(path)) => ctx.grid("u", path)?,
        (None, None) => return Err(usage("one of --u or --grid is required")),
    };
    let k = ctx.time("curvature", || curvature(&grid));
    let sub = is_subharmonic(&grid, a.subharmonic_tol);
    if let Some(p) = &a.out {
        ctx.write_grid(p, &k.k)?;
    }
    if let Some(p) = &a.svg {
        ctx.write_text(p, &plot::heatmap(&k.k, "Gauss curvature K"))?;
    }
    Ok(json!({
        "lattice": grid.lattice(),
        "min": k.min,
        "max": k.max,
        "bounded": k.is_bounded(),
        "unbounded_nodes": k.unbounded,
        "flat": k.is_flat(a.flat_tol),
        "flat_tol": a.flat_tol,
        "subharmonic": sub,
        "k": node_rows(&k.k),
    }))
}

pub fn complete(a: &CompleteArgs, ctx: &mut Context) -> Outcome {
    let u = ctx.expression("u", &a.u)?;
    let grid = lattice(a.grid.window, a.grid.n)?;
    let cfg = ray_config(&a.rays);
    let mut rows = Vec::new();
    for (k, &s) in a.s.iter().enumerate() {
        if !(s >= 0.0 && s.is_finite()) {
            return Err(usage(format!("completion parameter must be nonnegative, got {s}")));
        }
        let field = ctx
            .time(&format!("curvature s={s}"), || completion_curvature(&u, s, grid))
            .classify()?;
        let density = completion_density(&u, s);
        let rep = ctx
            .time(&format!("rays s={s}"), || ray_escape_search(&density, &cfg))
            .classify()?;
        if k == 0 {
            write_rays(ctx, a.rays.rays_csv.as_deref(), &rep)?;
        }
        // Partial length over the Euclidean lower bound √s (R − 1).
        let min_ratio = (s > 0.0).then(|| {
            rep.rays
                .iter()
                .flat_map(|ray| rep.checkpoints.iter().zip(&ray.partial))
                .filter(|(r, _)| **r > 1.0)
                .map(|(r, len)| len / (s.sqrt() * (r - 1.0)))
                .fold(f64::INFINITY, f64::min)
        });
        rows.push(json!({
            "s": s,
            "curvature": {
                "min": field.min,
                "max": field.max,
                "bounded": field.is_bounded(),
                "nonnegative": field.is_bounded() && field.min >= -a.curvature_tol,
                "tol": a.curvature_tol,
            },
            "oracle": oracle_summary(&rep),
            "min_length_ratio": min_ratio,
            "lower_bound_holds": min_ratio.map(|m| m >= 1.0 - 1e-6),
        }));
    }
    Ok(json!({ "path": rows }))
}

fn read_metric(ctx: &mut Context, m: &MetricFiles) -> anyhow::Result<MetricGrid> {
    let e = ctx.grid("E", &m.e)?;
    let f = ctx.grid("F", &m.f)?;
    let g = ctx.grid("G", &m.g)?;
    MetricGrid::new(e, f, g).classify()
}

fn modulus_grid(mu: &ComplexGrid) -> anyhow::Result<ScalarGrid> {
    ScalarGrid::from_values(*mu.lattice(), mu.values().iter().map(|v| v.norm()).collect()).classify()
}

pub fn beltrami_decompose(a: &DecomposeArgs, ctx: &mut Context) -> Outcome {
    let g = read_metric(ctx, &a.metric)?;
    let d = ctx.time("decompose", || decompose(&g)).classify()?;
    let (max_mu, at) = d.mu.grid().max_modulus();
    if let Some(prefix) = &a.out_prefix {
        ctx.write_grid(format!("{prefix}.lambda.cpg"), &d.lambda)?;
        ctx.write_grid(format!("{prefix}.mu.re.cpg"), &d.mu.grid().re())?;
        ctx.write_grid(format!("{prefix}.mu.im.cpg"), &d.mu.grid().im())?;
    }
    if let Some(p) = &a.svg {
        ctx.write_text(p, &plot::heatmap(&modulus_grid(d.mu.grid())?, "|mu|"))?;
    }
    Ok(json!({
        "lattice": g.lattice(),
        "lambda": extremes(&d.lambda),
        "max_mu": max_mu,
        "max_mu_node": at,
        "max_mu_point": g.lattice().point(at.0, at.1),
        "contracting": max_mu < 1.0,
    }))
}

fn parse_complex(text: &str) -> anyhow::Result<Complex64> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| {
        s.parse::<f64>()
            .map_err(|_| usage(format!("--mu expects `re,im`, found `{text}`")))
    };
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(usage(format!("--mu expects `re,im`, found `{text}`"))),
    }
}

pub fn beltrami_solve(a: &SolveArgs, ctx: &mut Context) -> Outcome {
    let (mu, constant) = match (&a.mu, &a.mu_re, &a.mu_im) {
        (Some(text), _, _) => {
            let c = parse_complex(text)?;
            let opts = SolverOptions::new(a.window.unwrap_or(4.0), a.n.unwrap_or(256));
            let l = lattice(opts.half_width, opts.n + 1)?;
            (BeltramiCoefficient::constant(l, c).classify()?, Some(c))
        }
        (None, Some(re), Some(im)) => {
            let re = ctx.grid("mu_re", re)?;
            let im = ctx.grid("mu_im", im)?;
            let grid = ComplexGrid::from_parts(&re, &im).classify()?;
            (BeltramiCoefficient::new(grid).classify()?, None)
        }
        _ => return Err(usage("give --mu or both --mu-re and --mu-im")),
    };
    let l = mu.lattice();
    let window = a.window.unwrap_or(l.half_width());
    let n = a.n.unwrap_or(l.n() - 1);
    let mut opts = SolverOptions::new(window, n);
    opts.padding = a.solver.padding;
    opts.tol = a.solver.tol;
    opts.max_iterations = a.solver.max_iterations;
    opts.taper = Taper {
        radius: a.solver.taper_radius.unwrap_or(window),
        plateau: a.solver.taper_plateau,
    };
    let phi = ctx.time("solve", || solve_beltrami(&mu, &opts)).classify()?;
    let jac = phi.jacobian();
    let min_jacobian = jac.iter().copied().fold(f64::INFINITY, f64::min);
    let at = |x: f64, y: f64| phi.map().interpolate(x, y).map(|w| (w.re, w.im));
    // A constant coefficient has the affine solution (z + μ z̄)/(1 + μ)
    // wherever the taper is flat.
    let affine_error = constant.map(|c| {
        let lat = phi.lattice();
        let flat = opts.taper.radius * opts.taper.plateau / std::f64::consts::SQRT_2;
        let w = (0.5 * window).min(flat);
        let mut err: f64 = 0.0;
        for j in 0..lat.n() {
            for i in 0..lat.n() {
                let (x, y) = lat.point(i, j);
                if x.abs() <= w && y.abs() <= w {
                    let z = Complex64::new(x, y);
                    err = err.max((phi.at(i, j) - (z + c * z.conj()) / (1.0 + c)).norm());
                }
            }
        }
        json!({ "half_width": w, "max_error": err })
    });
    if let Some(prefix) = &a.out_prefix {
        ctx.write_grid(format!("{prefix}.phi.re.cpg"), &phi.map().re())?;
        ctx.write_grid(format!("{prefix}.phi.im.cpg"), &phi.map().im())?;
    }
    Ok(json!({
        "lattice": phi.lattice(),
        "solver": opts,
        "report": phi.solve_report(),
        "normalization": phi.normalization(),
        "derivatives": phi.derivative_source(),
        "phi_at_0": at(0.0, 0.0),
        "phi_at_1": at(1.0, 0.0),
        "min_jacobian": min_jacobian,
        "orientation_preserving": min_jacobian > 0.0,
        "affine_reference": affine_error,
    }))
}

pub fn beltrami_roundtrip(a: &RoundtripArgs, ctx: &mut Context) -> Outcome {
    let g = read_metric(ctx, &a.metric)?;
    let opts = RoundtripOptions {
        inner_fraction: a.inner_fraction,
        tol: a.tol,
        max_iterations: a.max_iterations,
    };
    let rep = ctx.time("pi_roundtrip", || pi_roundtrip(&g, &opts)).classify()?;
    Ok(json!({ "lattice": g.lattice(), "roundtrip": rep }))
}

pub fn deform_convex(a: &ConvexArgs, ctx: &mut Context) -> Outcome {
    let u0 = ctx.expression("u0", &a.u0)?;
    let u1 = ctx.expression("u1", &a.u1)?;
    let cfg = alpha_config(&a.growth);
    let grid = lattice(a.grid.window, a.grid.n)?;
    let growth = |u: &confplane::Expr| alpha_estimate(u, a.growth.r_max, a.growth.alpha_window, &cfg);
    let ends = [growth(&u0).classify()?, growth(&u1).classify()?];
    // α is convex along the path, so it never exceeds the larger endpoint.
    let bound = ends[0].upper_or_inf().max(ends[1].upper_or_inf());
    let mut rows = Vec::new();
    for &s in &a.s {
        let u = convex_path(&u0, &u1, s).classify()?;
        let est = ctx.time(&format!("alpha s={s}"), || growth(&u)).classify()?;
        let values = ScalarGrid::from_expr(&u, grid).classify()?;
        rows.push(json!({
            "s": s,
            "u": u.to_string(),
            "alpha": est.value,
            "alpha_lower": est.lower,
            "alpha_upper": est.upper,
            "infinite": est.infinite,
            "completeness": classify_completeness(&est),
            "subharmonic": is_subharmonic(&values, None),
            "within_endpoint_bound": est.lower <= bound + 1e-9,
        }));
    }
    Ok(json!({ "endpoint_alpha_bound": bound, "path": rows }))
}

pub fn deform_complete_path(a: &CompletePathArgs, ctx: &mut Context) -> Outcome {
    let u = ctx.expression("u", &a.u)?;
    let grid = lattice(a.grid.window, a.grid.n)?;
    let mut rows = Vec::new();
    for (k, &s) in a.s.iter().enumerate() {
        let g = ctx.time(&format!("metric s={s}"), || completion_path(&u, s, grid)).classify()?;
        let field = ctx
            .time(&format!("curvature s={s}"), || completion_curvature(&u, s, grid))
            .classify()?;
        if let Some(prefix) = &a.out_prefix {
            ctx.write_grid(format!("{prefix}.s{k}.factor.cpg"), &g.e)?;
        }
        rows.push(json!({
            "s": s,
            "factor": extremes(&g.e),
            "curvature": {
                "min": field.min,
                "max": field.max,
                "bounded": field.is_bounded(),
                "nonnegative": field.is_bounded() && field.min >= -a.curvature_tol,
                "tol": a.curvature_tol,
            },
        }));
    }
    Ok(json!({ "lattice": grid, "path": rows }))
}

pub fn deform_revolve(a: &RevolveArgs, ctx: &mut Context) -> Outcome {
    let profile = if a.profile == "disc-cone" {
        ctx.input.expressions.insert("profile".into(), "disc-cone".into());
        RevolutionProfile::disc_cone()
    } else {
        RevolutionProfile::from_expr(ctx.expression("profile", &a.profile)?)
    };
    let grid = lattice(a.window, a.n)?;
    let g = ctx.time("revolve", || revolve(&profile, grid)).classify()?;
    let k = ctx
        .time("curvature", || {
            ScalarGrid::try_from_fn(grid, |_, _, x, y| revolve_curvature(&profile, x.hypot(y)))
        })
        .classify()?;
    // Deviation from g₀ on nodes of the unit disc.
    let mut disc = 0.0f64;
    for j in 0..grid.n() {
        for i in 0..grid.n() {
            let (x, y) = grid.point(i, j);
            if x.hypot(y) < 1.0 {
                let (e, f, gg) = g.at(i, j);
                disc = disc.max((e - 1.0).abs()).max(f.abs()).max((gg - 1.0).abs());
            }
        }
    }
    if let Some(prefix) = &a.out_prefix {
        ctx.write_grid(format!("{prefix}.E.cpg"), &g.e)?;
        ctx.write_grid(format!("{prefix}.F.cpg"), &g.f)?;
        ctx.write_grid(format!("{prefix}.G.cpg"), &g.g)?;
    }
    if let Some(p) = &a.svg {
        ctx.write_text(p, &plot::heatmap(&k, "Gauss curvature of the surface of revolution"))?;
    }
    let ((kmin, _), (kmax, _)) = k.extremes();
    Ok(json!({
        "lattice": grid,
        "convex": true,
        "unit_disc_deviation": disc,
        "curvature": {
            "min": kmin,
            "max": kmax,
            "nonnegative": kmin >= -1e-9,
            "tol": 1e-9,
        },
    }))
}

fn parse_path(text: &str) -> anyhow::Result<PathPolyline> {
    let bad = || usage(format!("--path expects `x0,y0;x1,y1;...`, found `{text}`"));
    let pts = text
        .split(';')
        .map(|p| {
            let xy: Vec<f64> = p
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| bad())?;
            match xy.as_slice() {
                [x, y] => Ok((*x, *y)),
                _ => Err(bad()),
            }
        })
        .collect::<anyhow::Result<Vec<_>>>()?;
    PathPolyline::new(pts).classify()
}

pub fn oracle(a: &OracleArgs, ctx: &mut Context) -> Outcome {
    let u = ctx.expression("u", &a.u)?;
    let path_length = match &a.path {
        Some(text) => {
            let path = parse_path(text)?;
            let q = ctx.time("conformal_length", || conformal_length(&u, &path, a.path_tol)).classify()?;
            json!({
                "vertices": path.vertices(),
                "euclidean_length": path.euclidean_length(),
                "length": q,
            })
        }
        None => Value::Null,
    };
    let rep = ctx
        .time("ray_escape_search", || ray_escape_search(&ConformalFactor(&u), &ray_config(&a.rays)))
        .classify()?;
    write_rays(ctx, a.rays.rays_csv.as_deref(), &rep)?;
    Ok(json!({ "path": path_length, "escape": oracle_summary(&rep) }))
}
