use crate::error::{Error, Result};

/// Adaptive Simpson integration of `f` on `[a, b]` to absolute tolerance `tol`.
pub fn integrate<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::numerical("integration endpoints must be finite"));
    }
    if a == b {
        return Ok(0.0);
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    if !(fa.is_finite() && fb.is_finite() && fm.is_finite()) {
        return Err(Error::numerical(
            "integrand not finite at endpoints; use integrate_singular",
        ));
    }
    let whole = simpson(a, b, fa, fm, fb);
    Ok(adaptive(f, a, b, fa, fm, fb, whole, tol, 52))
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

#[allow(clippy::too_many_arguments)]
fn adaptive<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = simpson(a, m, fa, flm, fm);
    let right = simpson(m, b, fm, frm, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + adaptive(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
}

/// Tanh-sinh (double-exponential) quadrature on the open interval `(a, b)`:
/// never evaluates the endpoints, and pushes any endpoint blow-up into
/// double-exponentially small weights. Non-finite integrand values near the
/// endpoints are treated as zero (their true contribution is below the
/// weight's underflow).
pub fn integrate_open<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> Result<f64> {
    if !(a.is_finite() && b.is_finite() && b > a) {
        return Err(Error::numerical("integrate_open needs finite a < b"));
    }
    let r = 0.5 * (b - a);
    let half_pi = std::f64::consts::FRAC_PI_2;
    let term = |t: f64| -> f64 {
        let u = half_pi * t.sinh();
        // Distance from the nearer endpoint: r * (1 - tanh|u|), computed
        // without cancellation; sech likewise without overflow.
        let eu = (-2.0 * u.abs()).exp();
        let dist = r * 2.0 * eu / (1.0 + eu);
        let sech = 2.0 * (-u.abs()).exp() / (1.0 + eu);
        let w = r * half_pi * t.cosh() * sech * sech;
        if w == 0.0 {
            return 0.0;
        }
        let x = if t >= 0.0 { b - dist } else { a + dist };
        if x <= a || x >= b {
            return 0.0;
        }
        let v = f(x);
        if v.is_finite() {
            v * w
        } else {
            0.0
        }
    };
    const T_MAX: f64 = 6.5;
    let mut h = 0.5;
    let mut sum = term(0.0);
    let mut k = 1;
    loop {
        let t = k as f64 * h;
        if t > T_MAX {
            break;
        }
        sum += term(t) + term(-t);
        k += 1;
    }
    let mut best = h * sum;
    for _ in 0..10 {
        // Halve the step; only odd multiples of the new step are new nodes.
        let h2 = 0.5 * h;
        let mut j = 1;
        loop {
            let t = (2 * j - 1) as f64 * h2;
            if t > T_MAX {
                break;
            }
            sum += term(t) + term(-t);
            j += 1;
        }
        h = h2;
        let cur = h * sum;
        if (cur - best).abs() <= tol.max(4.0 * f64::EPSILON * cur.abs()) {
            return Ok(cur);
        }
        best = cur;
    }
    Ok(best)
}

/// Integrate a function with integrable power blow-ups at the endpoints,
/// `~ (x-a)^(-pa)` at `a` and `~ (b-x)^(-pb)` at `b` with `pa, pb < 1`.
///
/// The integrand is called as `f(x, x - a, b - x)` with the two endpoint
/// distances computed exactly; any singular factor should be built from the
/// distances rather than from `x`, otherwise re-deriving `b - x` from a
/// rounded `x` loses half the significant digits right where the integrand
/// is largest.
///
/// The interval is split at the midpoint; each half is regularized by the
/// substitution `x = a + u^(1/(1-pa))` (resp. mirrored), which turns the
/// singular factor into a bounded one, and the transformed half is handled
/// by open tanh-sinh quadrature so the endpoint limit is never needed.
pub fn integrate_singular_dist<F: Fn(f64, f64, f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    pa: f64,
    pb: f64,
    tol: f64,
) -> Result<f64> {
    if !(pa < 1.0 && pb < 1.0) {
        return Err(Error::numerical(format!(
            "endpoint singularity exponents must be < 1 (got {pa}, {pb})"
        )));
    }
    if b <= a {
        return Err(Error::numerical("integrate_singular needs a < b"));
    }
    let len = b - a;
    let half = 0.5 * len;
    // Left half: x = a + u^s with s = 1/(1-pa); dx = s*u^(s-1) du.
    let left = {
        let s = 1.0 / (1.0 - pa.max(0.0));
        let u_max = half.powf(1.0 / s);
        let g = |u: f64| {
            let da = u.powf(s);
            f(a + da, da, len - da) * s * u.powf(s - 1.0)
        };
        integrate_open(&g, 0.0, u_max, tol / 2.0)?
    };
    // Right half, mirrored.
    let right = {
        let s = 1.0 / (1.0 - pb.max(0.0));
        let u_max = half.powf(1.0 / s);
        let g = |u: f64| {
            let db = u.powf(s);
            f(b - db, len - db, db) * s * u.powf(s - 1.0)
        };
        integrate_open(&g, 0.0, u_max, tol / 2.0)?
    };
    Ok(left + right)
}

/// Like [`integrate_singular_dist`] for integrands expressed in `x` alone.
/// Accuracy near a singular endpoint is then limited by the cancellation in
/// re-deriving the endpoint distance from `x` (roughly single precision);
/// use the distance-aware form when full double precision matters.
pub fn integrate_singular<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    pa: f64,
    pb: f64,
    tol: f64,
) -> Result<f64> {
    integrate_singular_dist(&|x, _, _| f(x), a, b, pa, pb, tol)
}

/// Integrate `f` on `(a, +infinity)` where `f` decays at least polynomially;
/// maps to a finite interval via `x = a + t/(1-t)`.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: &F, a: f64, tol: f64) -> Result<f64> {
    let g = |t: f64| {
        if t >= 1.0 {
            return 0.0;
        }
        let x = a + t / (1.0 - t);
        let jac = 1.0 / ((1.0 - t) * (1.0 - t));
        let v = f(x) * jac;
        if v.is_finite() {
            v
        } else {
            0.0
        }
    };
    integrate(&g, 0.0, 1.0 - 1e-12, tol)
}
