/// Result of an adaptive quadrature.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct Quadrature {
    pub value: f64,
    /// Sum of the local Richardson error estimates.
    pub error: f64,
    /// False when the evaluation budget ran out before the tolerance was met.
    pub converged: bool,
    pub evaluations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    /// Maximum number of integrand evaluations.
    pub budget: usize,
}

impl Tolerance {
    pub fn absolute(abs: f64) -> Self {
        Self {
            abs,
            rel: 0.0,
            budget: 1 << 20,
        }
    }
}

const MIN_DEPTH: u32 = 3;
const MAX_DEPTH: u32 = 60;

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
///
/// A panel is accepted when its two halves agree with the whole to within
/// `15·tol`, with `tol` halved at each level. An infinite integrand value
/// ends the integration with an infinite result.
pub fn adaptive_simpson<E>(
    f: impl Fn(f64) -> Result<f64, E>,
    a: f64,
    b: f64,
    tol: Tolerance,
) -> Result<Quadrature, E> {
    let mut evals = 3;
    let infinite = |evals| Quadrature {
        value: f64::INFINITY,
        error: 0.0,
        converged: true,
        evaluations: evals,
    };
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a)?, f(m)?, f(b)?);
    if [fa, fm, fb].iter().any(|v| v.is_infinite()) {
        return Ok(infinite(evals));
    }
    let mut stack = vec![Panel {
        a,
        b,
        fa,
        fm,
        fb,
        whole: (b - a) * (fa + 4.0 * fm + fb) / 6.0,
        tol: tol.abs,
        depth: 0,
    }];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut converged = true;
    while let Some(p) = stack.pop() {
        let (lm, rm) = (0.5 * (p.a + p.fm_x()), 0.5 * (p.fm_x() + p.b));
        let (flm, frm) = (f(lm)?, f(rm)?);
        evals += 2;
        if flm.is_infinite() || frm.is_infinite() {
            return Ok(infinite(evals));
        }
        let mid = p.fm_x();
        let left = (mid - p.a) * (p.fa + 4.0 * flm + p.fm) / 6.0;
        let right = (p.b - mid) * (p.fm + 4.0 * frm + p.fb) / 6.0;
        let diff = left + right - p.whole;
        let local_tol = p.tol.max(tol.rel * (left + right).abs());
        let out_of_budget = evals >= tol.budget;
        if p.depth >= MIN_DEPTH && diff.abs() <= 15.0 * local_tol
            || p.depth >= MAX_DEPTH
            || out_of_budget
        {
            if diff.abs() > 15.0 * local_tol {
                converged = false;
            }
            value += left + right + diff / 15.0;
            error += diff.abs() / 15.0;
            continue;
        }
        stack.push(Panel {
            a: mid,
            b: p.b,
            fa: p.fm,
            fm: frm,
            fb: p.fb,
            whole: right,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
        stack.push(Panel {
            a: p.a,
            b: mid,
            fa: p.fa,
            fm: flm,
            fb: p.fm,
            whole: left,
            tol: 0.5 * p.tol,
            depth: p.depth + 1,
        });
    }
    Ok(Quadrature {
        value,
        error,
        converged,
        evaluations: evals,
    })
}

impl Panel {
    fn fm_x(&self) -> f64 {
        0.5 * (self.a + self.b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::convert::Infallible;

    fn ok(f: impl Fn(f64) -> f64) -> impl Fn(f64) -> Result<f64, Infallible> {
        move |x| Ok(f(x))
    }

    #[test]
    fn integrates_smooth_functions() {
        let q = adaptive_simpson(ok(|x: f64| (-x).exp()), 0.0, 10.0, Tolerance::absolute(1e-10))
            .unwrap();
        assert!((q.value - (1.0 - (-10f64).exp())).abs() < 1e-10);
        assert!(q.converged);
        let q = adaptive_simpson(ok(|x: f64| 1.0 / (1.0 + x * x)), 0.0, 1.0, Tolerance::absolute(1e-12))
            .unwrap();
        assert!((q.value - std::f64::consts::FRAC_PI_4).abs() < 1e-12);
    }

    #[test]
    fn cubic_is_exact() {
        let q = adaptive_simpson(ok(|x: f64| x * x * x - x), -1.0, 2.0, Tolerance::absolute(1e-14))
            .unwrap();
        assert!((q.value - (4.0 - 2.0 - 0.25 + 0.5)).abs() < 1e-13);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        let tol = Tolerance {
            abs: 1e-15,
            rel: 0.0,
            budget: 50,
        };
        let q = adaptive_simpson(ok(|x: f64| (20.0 * x).sin().abs()), 0.0, 3.0, tol).unwrap();
        assert!(!q.converged);
        assert!(q.evaluations < 50 + 2 * MAX_DEPTH as usize);
    }

    #[test]
    fn infinite_integrand_short_circuits() {
        let q = adaptive_simpson(
            ok(|x: f64| if x > 0.5 { f64::INFINITY } else { 1.0 }),
            0.0,
            1.0,
            Tolerance::absolute(1e-9),
        )
        .unwrap();
        assert!(q.value.is_infinite());
    }
}
