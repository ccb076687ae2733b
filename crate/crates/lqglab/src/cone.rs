//! Correlated planar Brownian motion killed on the boundary of the positive
//! quadrant: exit laws, corner and bulk-to-boundary hitting estimates, the
//! closed-form excursion kernel they are compared against, and the shear /
//! power map that straightens the correlated quadrant process into standard
//! Brownian motion in the upper half-plane.
//!
//! Sampling uses exact Gaussian increments over step sizes that shrink with
//! the distance to the boundary (a power-of-two multiple of the base
//! resolution `dt`), plus a per-axis Brownian-bridge crossing correction, so
//! exits are detected without the O(sqrt(dt)) bias of a naive Euler walk. A
//! step committed to a crossing is then resolved by exact bridge bisection
//! down to the base resolution, so exit positions carry no imprint of the
//! large step that first detected them. Every rule in the stepper is
//! invariant under the diffusive rescaling `(x, t) -> (lambda x, lambda^2 t)`,
//! which makes rescaled reruns with a shared seed agree exactly, not just in
//! law.

use crate::error::{Error, Result};
use crate::rng::{fold_chunks, task_rng};
use crate::stats::{std_normal, OnlineCov, OnlineStats};
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::f64::consts::PI;

/// Covariance structure of the coordinate pair per unit time: each coordinate
/// has variance rate `a2` and the two have covariance rate
/// `-cos(pi gamma^2/4) * a2`. The default `a2 = 2/sin(pi gamma^2/4)` is the
/// normalization under which the sheared process has identity covariance at
/// unit scale.
#[derive(Debug, Clone, Serialize)]
pub struct CovSpec {
    pub gamma: f64,
    pub a2: f64,
    /// Covariance rate matrix [[a2, -cos(theta) a2], [-cos(theta) a2, a2]].
    pub cov: [[f64; 2]; 2],
    #[serde(skip)]
    cos_t: f64,
    #[serde(skip)]
    sin_t: f64,
}

/// `theta = pi gamma^2 / 4`, the angle parameter of the correlation.
fn theta_of(gamma: f64) -> f64 {
    PI * gamma * gamma / 4.0
}

/// Default variance rate `2 / sin(pi gamma^2 / 4)`.
pub fn default_a2(gamma: f64) -> f64 {
    2.0 / theta_of(gamma).sin()
}

impl CovSpec {
    /// Covariance with the default variance rate for this `gamma`.
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 2.0) {
            return Err(Error::param(format!(
                "gamma must lie in (0, 2), got {gamma}"
            )));
        }
        Self::with_a2(gamma, default_a2(gamma))
    }

    /// Covariance with an explicit variance rate `a2 > 0`.
    pub fn with_a2(gamma: f64, a2: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma < 2.0) {
            return Err(Error::param(format!(
                "gamma must lie in (0, 2), got {gamma}"
            )));
        }
        if !(a2 > 0.0 && a2.is_finite()) {
            return Err(Error::param(format!(
                "variance rate must be positive and finite, got {a2}"
            )));
        }
        let theta = theta_of(gamma);
        let (sin_t, cos_t) = (theta.sin(), theta.cos());
        let off = -cos_t * a2;
        Ok(CovSpec {
            gamma,
            a2,
            cov: [[a2, off], [off, a2]],
            cos_t,
            sin_t,
        })
    }

    pub fn theta(&self) -> f64 {
        theta_of(self.gamma)
    }

    /// Correlation coefficient of the two coordinates, `-cos(theta)`.
    pub fn corr(&self) -> f64 {
        -self.cos_t
    }
}

/// One sampled path in the open quadrant, stopped on the boundary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConePath {
    pub start: (f64, f64),
    /// Base time resolution: the smallest step duration used near the
    /// boundary. Interior steps are integer multiples of it.
    pub dt: f64,
    /// Number of Gaussian steps taken before the exit.
    pub steps: u64,
    /// Boundary point where the path left the quadrant; exactly on an axis.
    pub exit_point: (f64, f64),
    pub exit_time: f64,
}

/// A Monte Carlo hitting estimate with its normalization parameters. For the
/// bulk-to-boundary kernel, `value` is `P[hit window] / (delta * eps)` from
/// the start `(ell, delta)` and the window `(r, r + eps]` on the vertical
/// axis. For the corner-exit probability, `(ell, r)` store the start point,
/// `delta` is zero, and `value` is the raw probability of exiting in
/// `(0, eps]` on the vertical axis.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KernelEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n_paths: u64,
    pub ell: f64,
    pub r: f64,
    pub delta: f64,
    pub eps: f64,
}

/// Shear the quadrant onto the wedge of opening `theta = pi gamma^2/4` with
/// the matrix `(1/a)[[1/sin theta, 1/tan theta], [0, 1]]`, then straighten
/// the wedge onto the upper half-plane with `w -> w^{4/gamma^2}`. Requires
/// `gamma` in (0, 2), `a2 > 0`, and a point in the closed quadrant.
pub fn shear_and_power(point: (f64, f64), gamma: f64, a2: f64) -> (f64, f64) {
    let theta = theta_of(gamma);
    let a = a2.sqrt();
    let (x, y) = point;
    let xs = (x + y * theta.cos()) / (theta.sin() * a);
    let ys = y / a;
    let w = Complex64::new(xs, ys).powf(4.0 / (gamma * gamma));
    (w.re, w.im)
}

/// Per-step standard deviation as a fraction of the distance to the boundary.
const STEP_FRACTION: f64 = 0.5;
/// Cap on the step-duration multiplier (largest step is `2^20 * dt`).
const MAX_MULTIPLIER: u64 = 1 << 20;
/// Hard cap on steps per path; hitting it is a numerical failure, not a law.
const MAX_PATH_STEPS: u64 = 4_000_000;
/// Treat a crossing probability below exp(-40) as zero (far beneath any
/// attainable sample size), skipping its random draw.
const BRIDGE_EXP_CUTOFF: f64 = 40.0;
/// Paths per deterministic accumulation chunk.
const PATH_CHUNK: u64 = 1024;
/// Cap on bridge-midpoint redraws while refining one crossing step. The
/// rejection is exact with expected O(1) draws per bisection level, so this
/// only guards against degenerate states.
const MAX_REFINE_DRAWS: u64 = 1_000_000;

struct ExitRecord {
    point: (f64, f64),
    time: f64,
    steps: u64,
}

/// Probability that one coordinate's Brownian bridge between positive
/// endpoints `u0 -> u1` over a span with per-coordinate variance `var`
/// touches 0; exactly 1 when the endpoint has already crossed.
fn cross_prob(u0: f64, u1: f64, var: f64) -> f64 {
    if u1 <= 0.0 {
        return 1.0;
    }
    cross_prob_pos(u0, u1, var)
}

/// Crossing probability `exp(-2 u0 u1 / var)` for strictly positive
/// endpoints, with exponents past the cutoff treated as never crossing.
fn cross_prob_pos(u0: f64, u1: f64, var: f64) -> f64 {
    let e = 2.0 * u0 * u1 / var;
    if e >= BRIDGE_EXP_CUTOFF {
        0.0
    } else {
        (-e).exp()
    }
}

/// First-crossing fraction through a base step: the linear crossing point
/// when the endpoint is past the axis, else the kink of the extremal
/// touching bridge.
fn crossing_fraction(u0: f64, u1: f64) -> f64 {
    if u1 <= 0.0 {
        u0 / (u0 - u1)
    } else {
        u0 / (u0 + u1)
    }
}

/// Midpoint of one coordinate's bridge `u0 -> u1` committed to touch 0,
/// together with whether the first touch lies in the first half. Drawn by
/// the reflection construction: a bridge conditioned to touch is the
/// pre-passage reflection of an unconditioned bridge from `-u0`, so the
/// draw costs O(1) no matter how unlikely the committed touch was. `shift`
/// offsets the midpoint mean (the regression on the other coordinate) and
/// `var_h` / `sd` are the half-span path variance and the midpoint
/// standard deviation.
fn crossing_midpoint(
    u0: f64,
    u1: f64,
    var_h: f64,
    sd: f64,
    shift: f64,
    rng: &mut ChaCha8Rng,
) -> (f64, bool) {
    if u1 <= 0.0 {
        // The endpoint is already past the axis, so the plain bridge
        // midpoint is the conditioned one.
        let um = 0.5 * (u0 + u1) + shift + sd * std_normal(rng);
        let first = um <= 0.0 || rng.gen::<f64>() < cross_prob_pos(u0, um, var_h);
        (um, first)
    } else {
        let tm = 0.5 * (u1 - u0) + shift + sd * std_normal(rng);
        if tm >= 0.0 {
            // The reflected path changed sign in the first half, so the
            // passage happened there and the midpoint is past it,
            // unreflected.
            (tm, true)
        } else if rng.gen::<f64>() < cross_prob_pos(u0, -tm, var_h) {
            // Both reflected endpoints sit below the axis but the first
            // half still touched it.
            (tm, true)
        } else {
            // Passage in the second half: the midpoint is pre-passage and
            // reflects back above the axis.
            (-tm, false)
        }
    }
}

/// Midpoint of one coordinate's bridge `u0 -> u1` committed to stay
/// positive, drawn by rejection against the exact both-halves survival
/// factor. The step-size control keeps whole-step survival probabilities
/// away from 0, so the acceptance rate is bounded below and the cap is
/// only a safety net.
fn survival_midpoint(
    u0: f64,
    u1: f64,
    var_h: f64,
    sd: f64,
    shift: f64,
    rng: &mut ChaCha8Rng,
    draws: &mut u64,
) -> Result<f64> {
    let mean = 0.5 * (u0 + u1) + shift;
    loop {
        *draws += 1;
        if *draws > MAX_REFINE_DRAWS {
            return Err(Error::numerical(
                "crossing refinement failed to accept a surviving midpoint",
            ));
        }
        let um = mean + sd * std_normal(rng);
        if um <= 0.0 {
            continue;
        }
        let w = (1.0 - cross_prob_pos(u0, um, var_h)) * (1.0 - cross_prob_pos(um, u1, var_h));
        if w >= 1.0 || (w > 0.0 && rng.gen::<f64>() < w) {
            return Ok(um);
        }
    }
}

/// Resolve the exit inside one committed crossing step by bridge bisection.
/// On entry the segment `(x0, y0) -> (x1, y1)` spans duration `h` (a
/// power-of-two multiple of `dt`), `cx`/`cy` say which coordinates are
/// committed to cross it (at least one), and a `false` flag means that
/// coordinate is committed to survive the whole segment. Each level draws
/// the bridge midpoint coordinate-wise under the committed events — the
/// reflection construction for a committed crossing, survival rejection
/// otherwise, the second coordinate regressed on the first's deviation —
/// locates the half holding the earliest committed crossing, and descends,
/// so exit positions are resolved at the base `dt` scale no matter how
/// large the step that first detected the crossing was. For uncorrelated
/// coordinates every conditional draw here is exact; with correlation the
/// regression carries the same per-coordinate bridge approximation used by
/// the crossing detection itself.
#[allow(clippy::too_many_arguments)]
fn refine_exit(
    cov: &CovSpec,
    dt: f64,
    mut x0: f64,
    mut y0: f64,
    mut x1: f64,
    mut y1: f64,
    mut h: f64,
    mut cx: bool,
    mut cy: bool,
    rng: &mut ChaCha8Rng,
) -> Result<((f64, f64), f64)> {
    debug_assert!(cx || cy);
    // correlation of the two coordinates per unit time
    let rho = -cov.cos_t;
    let resid = (1.0 - rho * rho).sqrt();
    let mut offset = 0.0f64;
    let mut draws = 0u64;
    while h > 1.5 * dt {
        let hh = 0.5 * h;
        let var_h = cov.a2 * hh;
        // per-coordinate midpoint standard deviation: a2 * h / 4
        let sdm = (0.5 * var_h).sqrt();
        let xbar = 0.5 * (x0 + x1);
        let (xm, x_first) = if cx {
            crossing_midpoint(x0, x1, var_h, sdm, 0.0, rng)
        } else {
            (
                survival_midpoint(x0, x1, var_h, sdm, 0.0, rng, &mut draws)?,
                false,
            )
        };
        let yshift = rho * (xm - xbar);
        let sdy = sdm * resid;
        let (ym, y_first) = if cy {
            crossing_midpoint(y0, y1, var_h, sdy, yshift, rng)
        } else {
            (
                survival_midpoint(y0, y1, var_h, sdy, yshift, rng, &mut draws)?,
                false,
            )
        };
        // Descend into the half holding the earliest committed crossing; a
        // crossing scheduled for the later half is preempted if the path
        // dies first, which the recursion settles at the base scale.
        if x_first || y_first {
            x1 = xm;
            y1 = ym;
            cx = x_first;
            cy = y_first;
        } else {
            x0 = xm;
            y0 = ym;
            offset += hh;
        }
        h = hh;
    }
    // base step: assign positions by linear interpolation to the crossing
    let fx = if cx {
        crossing_fraction(x0, x1)
    } else {
        f64::INFINITY
    };
    let fy = if cy {
        crossing_fraction(y0, y1)
    } else {
        f64::INFINITY
    };
    Ok(if fx <= fy {
        ((0.0, (y0 + fx * (y1 - y0)).max(0.0)), offset + fx * h)
    } else {
        (((x0 + fy * (x1 - x0)).max(0.0), 0.0), offset + fy * h)
    })
}

/// Advance one path from `start` to its boundary exit. `observe` sees every
/// raw Gaussian increment as `(dx, dy, h)` with `h` the step duration, before
/// any exit processing, so observed increments are unbiased draws from the
/// configured covariance.
fn run_path_with<F: FnMut(f64, f64, f64)>(
    start: (f64, f64),
    cov: &CovSpec,
    dt: f64,
    rng: &mut ChaCha8Rng,
    observe: &mut F,
) -> Result<ExitRecord> {
    let (mut x, mut y) = start;
    let mut t = 0.0f64;
    let mut steps = 0u64;
    loop {
        steps += 1;
        if steps > MAX_PATH_STEPS {
            return Err(Error::numerical(format!(
                "path from ({:.3}, {:.3}) exceeded {MAX_PATH_STEPS} steps without exiting",
                start.0, start.1
            )));
        }
        // Step duration: the largest power-of-two multiple of dt keeping the
        // per-coordinate standard deviation below STEP_FRACTION times the
        // distance to the boundary. Powers of two let a committed crossing
        // bisect exactly down to dt, and every rule here is invariant under
        // the diffusive rescaling (x, t) -> (lambda x, lambda^2 t).
        let d = x.min(y);
        let m_raw = (STEP_FRACTION * d) * (STEP_FRACTION * d) / (cov.a2 * dt);
        let m = if m_raw >= 2.0 {
            let b = (m_raw as u64).min(MAX_MULTIPLIER);
            1u64 << (63 - b.leading_zeros())
        } else {
            1
        };
        let h = m as f64 * dt;
        let var = cov.a2 * h;
        let sd = var.sqrt();
        let z1 = std_normal(rng);
        let z2 = std_normal(rng);
        let dx = sd * z1;
        let dy = sd * (cov.sin_t * z2 - cov.cos_t * z1);
        observe(dx, dy, h);
        let xn = x + dx;
        let yn = y + dy;
        // Commit each coordinate's crossing of its axis during the step: an
        // endpoint past the axis crosses surely, interior endpoints cross
        // with the exact bridge probability exp(-2 u u' / var).
        let px = cross_prob(x, xn, var);
        let py = cross_prob(y, yn, var);
        let cx = px >= 1.0 || (px > 0.0 && rng.gen::<f64>() < px);
        let cy = py >= 1.0 || (py > 0.0 && rng.gen::<f64>() < py);
        if cx || cy {
            let (point, t_off) = refine_exit(cov, dt, x, y, xn, yn, h, cx, cy, rng)?;
            return Ok(ExitRecord {
                point,
                time: t + t_off,
                steps,
            });
        }
        x = xn;
        y = yn;
        t += h;
    }
}

fn run_path(
    start: (f64, f64),
    cov: &CovSpec,
    dt: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ExitRecord> {
    run_path_with(start, cov, dt, rng, &mut |_, _, _| {})
}

fn validate_start(start: (f64, f64)) -> Result<()> {
    if !(start.0 > 0.0 && start.1 > 0.0 && start.0.is_finite() && start.1.is_finite()) {
        return Err(Error::param(format!(
            "start point must lie in the open quadrant, got ({}, {})",
            start.0, start.1
        )));
    }
    Ok(())
}

fn validate_dt_n(dt: f64, n: u64) -> Result<()> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    if n == 0 {
        return Err(Error::param("need at least one path"));
    }
    Ok(())
}

/// Sample one path of the correlated motion from `start`, stopped on the
/// boundary of the quadrant.
pub fn sample_cone_path(
    start: (f64, f64),
    cov: &CovSpec,
    dt: f64,
    seed: u64,
) -> Result<ConePath> {
    validate_start(start)?;
    validate_dt_n(dt, 1)?;
    let mut rng = task_rng(seed, 0);
    let rec = run_path(start, cov, dt, &mut rng)?;
    Ok(ConePath {
        start,
        dt,
        steps: rec.steps,
        exit_point: rec.point,
        exit_time: rec.time,
    })
}

/// Count, over `n` paths, exits satisfying `hit`, deterministically in chunk
/// order. Paths that trip the step cap abort the whole estimate.
fn count_hits<H: Fn(&ExitRecord) -> bool + Sync>(
    start: (f64, f64),
    cov: &CovSpec,
    dt: f64,
    n: u64,
    seed: u64,
    hit: H,
) -> Result<u64> {
    let acc = fold_chunks(
        seed,
        n,
        PATH_CHUNK,
        None,
        || Ok(0u64),
        |acc: &mut Result<u64>, _, rng| {
            if let Ok(hits) = acc {
                match run_path(start, cov, dt, rng) {
                    Ok(rec) => {
                        if hit(&rec) {
                            *hits += 1;
                        }
                    }
                    Err(e) => *acc = Err(e),
                }
            }
        },
        |a, b| match (a, b) {
            (Ok(x), Ok(y)) => Ok(x + y),
            (Err(e), _) | (_, Err(e)) => Err(e),
        },
    );
    acc
}

fn binomial_estimate(hits: u64, n: u64, scale: f64) -> (f64, f64) {
    let p = hits as f64 / n as f64;
    if hits == 0 {
        // Zero observed hits: report 0 with the 95% one-sided upper bound
        // 3/n as the uncertainty.
        (0.0, 3.0 / n as f64 * scale)
    } else {
        (p * scale, (p * (1.0 - p) / n as f64).sqrt() * scale)
    }
}

/// Probability that a path from `start` exits through the corner window
/// `(0, eps]` on the vertical axis.
pub fn exit_corner_prob(
    start: (f64, f64),
    eps: f64,
    cov: &CovSpec,
    dt: f64,
    n: u64,
    seed: u64,
) -> Result<KernelEstimate> {
    validate_start(start)?;
    validate_dt_n(dt, n)?;
    if !(eps > 0.0) {
        return Err(Error::param(format!("eps must be positive, got {eps}")));
    }
    let hits = count_hits(start, cov, dt, n, seed, |rec| {
        rec.point.0 == 0.0 && rec.point.1 > 0.0 && rec.point.1 <= eps
    })?;
    let (value, stderr) = binomial_estimate(hits, n, 1.0);
    Ok(KernelEstimate {
        value,
        stderr,
        n_paths: n,
        ell: start.0,
        r: start.1,
        delta: 0.0,
        eps,
    })
}

/// Finite-difference bulk-to-boundary kernel: paths start at `(ell, delta)`
/// and the estimate is `P[exit in (r, r + eps] on the vertical axis]`
/// normalized by `delta * eps`. The exact kernel is the joint limit
/// `delta, eps -> 0`; callers pair two resolutions and Richardson-extrapolate.
pub fn kernel_estimate(
    ell: f64,
    r: f64,
    delta: f64,
    eps: f64,
    cov: &CovSpec,
    dt: f64,
    n: u64,
    seed: u64,
) -> Result<KernelEstimate> {
    if !(ell > 0.0 && r > 0.0) {
        return Err(Error::param(format!(
            "kernel arguments must be positive, got ({ell}, {r})"
        )));
    }
    if !(delta > 0.0 && eps > 0.0) {
        return Err(Error::param(format!(
            "finite-difference widths must be positive, got ({delta}, {eps})"
        )));
    }
    validate_dt_n(dt, n)?;
    let hi = r + eps;
    let hits = count_hits((ell, delta), cov, dt, n, seed, |rec| {
        rec.point.0 == 0.0 && rec.point.1 > r && rec.point.1 <= hi
    })?;
    let (value, stderr) = binomial_estimate(hits, n, 1.0 / (delta * eps));
    Ok(KernelEstimate {
        value,
        stderr,
        n_paths: n,
        ell,
        r,
        delta,
        eps,
    })
}

/// Closed-form bulk-to-boundary kernel shape (overall constant set to 1):
/// `ell^{q-1} r^{q-1} / (ell^q + r^q)^2` with `q = 4/gamma^2`. Arguments must
/// be positive.
pub fn closed_form_kernel(ell: f64, r: f64, gamma: f64) -> f64 {
    let q = 4.0 / (gamma * gamma);
    ell.powf(q - 1.0) * r.powf(q - 1.0) / (ell.powf(q) + r.powf(q)).powi(2)
}

/// Exit times of paths from `(ell, ell/20)` accepted when they leave through
/// the vertical-axis window `(r_window.0, r_window.1]` — the duration law of
/// the normalized excursion estimate at that boundary point. `n` is the
/// number of attempted paths; the accepted subset is returned.
pub fn duration_samples(
    ell: f64,
    r_window: (f64, f64),
    cov: &CovSpec,
    dt: f64,
    n: u64,
    seed: u64,
) -> Result<Vec<f64>> {
    if !(ell > 0.0) {
        return Err(Error::param(format!("ell must be positive, got {ell}")));
    }
    let (lo, hi) = r_window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::param(format!(
            "r_window must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    validate_dt_n(dt, n)?;
    let start = (ell, ell / 20.0);
    let acc = fold_chunks(
        seed,
        n,
        PATH_CHUNK,
        None,
        || Ok(Vec::new()),
        |acc: &mut Result<Vec<f64>>, _, rng| {
            if let Ok(times) = acc {
                match run_path(start, cov, dt, rng) {
                    Ok(rec) => {
                        if rec.point.0 == 0.0 && rec.point.1 > lo && rec.point.1 <= hi {
                            times.push(rec.time);
                        }
                    }
                    Err(e) => *acc = Err(e),
                }
            }
        },
        |a, b| match (a, b) {
            (Ok(mut x), Ok(y)) => {
                x.extend_from_slice(&y);
                Ok(x)
            }
            (Err(e), _) | (_, Err(e)) => Err(e),
        },
    )?;
    if acc.is_empty() {
        return Err(Error::insufficient_data(format!(
            "no path of {n} exited the vertical window ({lo}, {hi}]; widen the window or increase n"
        )));
    }
    Ok(acc)
}

/// Empirical per-unit-time variance and correlation of raw path increments.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IncrementStats {
    pub var_rate_l: f64,
    pub var_rate_r: f64,
    pub corr: f64,
    pub n: u64,
}

/// Accumulate `n` raw increments (normalized by the square root of each step
/// duration, so each is an exact draw from the covariance matrix) from paths
/// restarted on exit, and return their empirical rates.
pub fn increment_covariance(cov: &CovSpec, dt: f64, n: u64, seed: u64) -> Result<IncrementStats> {
    validate_dt_n(dt, n)?;
    let mut rng = task_rng(seed, 0);
    let start = (2.0, 2.0);
    let mut sl = OnlineStats::default();
    let mut sr = OnlineStats::default();
    let mut cv = OnlineCov::default();
    let mut left = n;
    while left > 0 {
        let mut budget = left;
        run_path_with(start, cov, dt, &mut rng, &mut |dx, dy, h| {
            if budget > 0 {
                let s = h.sqrt();
                let (u, v) = (dx / s, dy / s);
                sl.push(u);
                sr.push(v);
                cv.push(u, v);
                budget -= 1;
            }
        })?;
        left = budget;
    }
    let corr = cv.covariance() / (sl.variance() * sr.variance()).sqrt();
    Ok(IncrementStats {
        var_rate_l: sl.variance(),
        var_rate_r: sr.variance(),
        corr,
        n,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_test_weighted, ks_two_sample_weighted, weighted_linfit};

    const SQRT2: f64 = std::f64::consts::SQRT_2;

    #[test]
    fn default_variance_follows_the_angle_formula() {
        // theta = pi/2 at gamma = sqrt(2): sin = 1, variance rate 2, and the
        // coordinates decouple.
        let c = CovSpec::new(SQRT2).unwrap();
        assert!((c.a2 - 2.0).abs() < 1e-12);
        assert!(c.cov[0][1].abs() < 1e-12);
        // theta = 3 pi/4 at gamma = sqrt(3): rate 2 sqrt(2), covariance +2.
        let c3 = CovSpec::new(3f64.sqrt()).unwrap();
        assert!((c3.a2 - 2.0 * SQRT2).abs() < 1e-12);
        assert!((c3.cov[0][1] - 2.0).abs() < 1e-12);
        assert!((c3.corr() - 1.0 / SQRT2).abs() < 1e-12);
    }

    #[test]
    fn covariance_matrix_is_positive_definite_across_gamma() {
        for k in 1..40 {
            let gamma = 0.05 * k as f64;
            let c = CovSpec::new(gamma).unwrap();
            let det = c.cov[0][0] * c.cov[1][1] - c.cov[0][1] * c.cov[1][0];
            assert!(c.cov[0][0] > 0.0 && det > 0.0, "gamma = {gamma}");
            assert!((c.cov[0][1] - c.cov[1][0]).abs() == 0.0);
        }
    }

    #[test]
    fn shear_at_gamma_sqrt2_is_pure_scaling_and_square() {
        // cos(pi/2) = 0 kills the shear term, leaving w -> (w/a)^2.
        let a2 = default_a2(SQRT2);
        for &(x, y) in &[(0.3, 0.7), (1.0, 1.0), (2.5, 0.1)] {
            let got = shear_and_power((x, y), SQRT2, a2);
            let w = Complex64::new(x, y) / a2.sqrt();
            let expect = w * w;
            assert!((got.0 - expect.re).abs() < 1e-12, "re at ({x}, {y})");
            assert!((got.1 - expect.im).abs() < 1e-12, "im at ({x}, {y})");
        }
    }

    #[test]
    fn shear_and_power_fixes_the_corner_and_boundary_rays() {
        for &gamma in &[0.9, 1.3, SQRT2, 1.8] {
            let a2 = default_a2(gamma);
            let o = shear_and_power((0.0, 0.0), gamma, a2);
            assert_eq!(o, (0.0, 0.0), "corner fixed at gamma = {gamma}");
            // horizontal boundary ray stays on the positive real axis
            let h = shear_and_power((1.7, 0.0), gamma, a2);
            assert!(h.0 > 0.0 && h.1.abs() < 1e-12, "gamma = {gamma}: {h:?}");
            // vertical boundary ray lands on the negative real axis, so the
            // two axes together map onto the full boundary line
            let v = shear_and_power((0.0, 1.7), gamma, a2);
            assert!(v.0 < 0.0 && v.1.abs() < 1e-9, "gamma = {gamma}: {v:?}");
            // interior goes to the open upper half-plane
            let i = shear_and_power((0.4, 0.9), gamma, a2);
            assert!(i.1 > 0.0, "gamma = {gamma}");
        }
    }

    #[test]
    fn shear_normalizes_the_covariance() {
        // Lambda Sigma Lambda^T = I: the sheared coordinates are standard.
        for &gamma in &[0.9, SQRT2, 3f64.sqrt(), 1.8] {
            let c = CovSpec::new(gamma).unwrap();
            let (s, t) = (c.sin_t, c.cos_t);
            let a = c.a2.sqrt();
            let l = [[1.0 / (s * a), t / (s * a)], [0.0, 1.0 / a]];
            let mut out = [[0.0f64; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    for p in 0..2 {
                        for q in 0..2 {
                            out[i][j] += l[i][p] * c.cov[p][q] * l[j][q];
                        }
                    }
                }
            }
            for i in 0..2 {
                for j in 0..2 {
                    let want = if i == j { 1.0 } else { 0.0 };
                    assert!(
                        (out[i][j] - want).abs() < 1e-12,
                        "gamma = {gamma}: ({i}, {j}) = {}",
                        out[i][j]
                    );
                }
            }
        }
    }

    #[test]
    fn increment_covariance_matches_the_configured_matrix() {
        let cov = CovSpec::new(3f64.sqrt()).unwrap();
        let st = increment_covariance(&cov, 1e-4, 1_000_000, 11).unwrap();
        assert!(
            (st.var_rate_l / cov.a2 - 1.0).abs() < 0.01,
            "left rate {}",
            st.var_rate_l
        );
        assert!(
            (st.var_rate_r / cov.a2 - 1.0).abs() < 0.01,
            "right rate {}",
            st.var_rate_r
        );
        assert!(
            (st.corr - cov.corr()).abs() < 0.01,
            "corr {} vs {}",
            st.corr,
            cov.corr()
        );
    }

    #[test]
    fn gamma_sqrt2_increments_are_uncorrelated() {
        let cov = CovSpec::new(SQRT2).unwrap();
        let st = increment_covariance(&cov, 1e-4, 1_000_000, 5).unwrap();
        assert!(st.corr.abs() < 0.02, "corr = {}", st.corr);
    }

    #[test]
    fn cone_paths_exit_on_an_axis_with_positive_duration() {
        let cov = CovSpec::new(1.3).unwrap();
        for seed in 0..200 {
            let p = sample_cone_path((1.0, 0.7), &cov, 1e-4, seed).unwrap();
            let on_axis = p.exit_point.0.abs() <= 1e-9 || p.exit_point.1.abs() <= 1e-9;
            assert!(on_axis, "exit {:?}", p.exit_point);
            assert!(p.exit_point.0 >= 0.0 && p.exit_point.1 >= 0.0);
            assert!(p.exit_time > 0.0 && p.exit_time.is_finite());
            assert!(p.steps > 0);
            assert_eq!(p.start, (1.0, 0.7));
            // determinism in the seed
            let q = sample_cone_path((1.0, 0.7), &cov, 1e-4, seed).unwrap();
            assert_eq!(p, q);
        }
    }

    #[test]
    fn exit_windows_partition_the_vertical_axis_mass() {
        // With a shared seed the window estimates rerun the same paths, so
        // window counts over a partition must add up exactly to the count of
        // the union: this pins the window edge conventions.
        let cov = CovSpec::new(SQRT2).unwrap();
        let (ell, delta, dt, n, seed) = (1.0, 0.1, 1e-4, 20_000u64, 3u64);
        let eps = 0.25;
        let mut total = 0.0;
        for k in 1..8 {
            let r = k as f64 * eps;
            let w = kernel_estimate(ell, r, delta, eps, &cov, dt, n, seed).unwrap();
            total += w.value * delta * eps;
        }
        let first = exit_corner_prob((ell, delta), eps, &cov, dt, n, seed).unwrap();
        let union = exit_corner_prob((ell, delta), 8.0 * eps, &cov, dt, n, seed).unwrap();
        total += first.value;
        assert!(
            (total - union.value).abs() < 1e-12,
            "sum {total} vs union {}",
            union.value
        );
    }

    #[test]
    fn corner_exit_probability_has_the_predicted_log_slope() {
        // 4/gamma^2 = 2 at gamma = sqrt(2).
        let cov = CovSpec::new(SQRT2).unwrap();
        let epss = [0.1, 0.2, 0.4];
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut ws = Vec::new();
        let mut last = 0.0;
        for &eps in &epss {
            let e = exit_corner_prob((1.0, 1.0), eps, &cov, 2.5e-5, 400_000, 17).unwrap();
            assert!(e.value >= last, "monotone in eps");
            last = e.value;
            // exact law from (1,1): the square map sends the quadrant to the
            // half-plane and the start to 2i, so P = arctan(eps^2/2)/pi
            let exact = (eps * eps / 2.0).atan() / PI;
            assert!(
                (e.value - exact).abs() < 4.0 * e.stderr,
                "window {eps}: estimate {} vs exact {exact}",
                e.value
            );
            xs.push(eps.ln());
            ys.push(e.value.ln());
            ws.push((e.value / e.stderr).powi(2));
        }
        let (_, slope, _) = weighted_linfit(&xs, &ys, &ws).unwrap();
        assert!((slope - 2.0).abs() < 0.15, "slope = {slope}");
    }

    #[test]
    fn closed_form_kernel_values_and_symmetry() {
        // q = 2 at gamma = sqrt(2): (1,1) -> 1/(1+1)^2 = 1/4 and
        // (2,1) -> 2/(4+1)^2 = 2/25.
        assert!((closed_form_kernel(1.0, 1.0, SQRT2) - 0.25).abs() < 1e-15);
        assert!((closed_form_kernel(2.0, 1.0, SQRT2) - 0.08).abs() < 1e-15);
        for &gamma in &[0.9, SQRT2, 3f64.sqrt()] {
            for &(l, r) in &[(0.5, 1.7), (2.0, 3.0), (0.1, 0.2)] {
                assert_eq!(
                    closed_form_kernel(l, r, gamma),
                    closed_form_kernel(r, l, gamma),
                    "symmetry at gamma = {gamma}"
                );
            }
        }
    }

    #[test]
    fn kernel_estimates_track_closed_form_ratios() {
        let cov = CovSpec::new(SQRT2).unwrap();
        let (delta, eps, dt, n) = (0.1, 0.1, 2.5e-5, 1_000_000u64);
        let k11 = kernel_estimate(1.0, 1.0, delta, eps, &cov, dt, n, 23).unwrap();
        let k21 = kernel_estimate(2.0, 1.0, delta, eps, &cov, dt, n, 29).unwrap();
        let k22 = kernel_estimate(2.0, 2.0, delta, eps, &cov, dt, n, 31).unwrap();
        let r21 = k21.value / k11.value;
        assert!((r21 - 0.32).abs() < 0.07, "K(2,1)/K(1,1) = {r21}");
        let r22 = k22.value / k11.value;
        assert!((r22 - 0.25).abs() < 0.05, "K(2,2)/K(1,1) = {r22}");
    }

    #[test]
    fn kernel_estimate_is_symmetric_under_argument_swap() {
        let cov = CovSpec::new(SQRT2).unwrap();
        let (delta, eps, dt, n) = (0.05, 0.05, 2.5e-5, 4_000_000u64);
        let a = kernel_estimate(1.0, 2.0, delta, eps, &cov, dt, n, 41).unwrap();
        let b = kernel_estimate(2.0, 1.0, delta, eps, &cov, dt, n, 43).unwrap();
        let ratio = a.value / b.value;
        assert!((ratio - 1.0).abs() < 0.05, "swap ratio = {ratio}");
    }

    #[test]
    fn brownian_rescaling_is_exact_for_matched_seeds() {
        // Every stepper rule is invariant under (x, t) -> (2x, 4t), so the
        // doubled run with the same seed replays identical randomness and the
        // normalized kernel value divides by exactly 4.
        let cov = CovSpec::new(1.3).unwrap();
        let (delta, eps) = (0.1, 0.15);
        let base = kernel_estimate(1.0, 1.0, delta, eps, &cov, 1e-4, 50_000, 7).unwrap();
        let scaled = kernel_estimate(
            2.0,
            2.0,
            2.0 * delta,
            2.0 * eps,
            &cov,
            4e-4,
            50_000,
            7,
        )
        .unwrap();
        assert_eq!(scaled.value.to_bits(), (base.value / 4.0).to_bits());
    }

    #[test]
    fn duration_samples_scale_diffusively_and_reproduce() {
        let cov = CovSpec::new(SQRT2).unwrap();
        let base = duration_samples(1.0, (0.85, 1.15), &cov, 1e-4, 150_000, 2).unwrap();
        assert!(base.iter().all(|&t| t > 0.0 && t.is_finite()));
        // diffusive rescaling: durations at doubled lengths match 4x the
        // base durations in law (independent seeds, two-sample KS)
        let scaled = duration_samples(2.0, (1.7, 2.3), &cov, 4e-4, 150_000, 1002).unwrap();
        let rescaled: Vec<f64> = base.iter().map(|&t| 4.0 * t).collect();
        let wa = vec![1.0; rescaled.len()];
        let wb = vec![1.0; scaled.len()];
        let ks = ks_two_sample_weighted(&rescaled, &wa, &scaled, &wb).unwrap();
        assert!(ks.p_value > 0.01, "scaling KS p = {}", ks.p_value);
        // reproducibility across seeds within 3 combined standard errors
        let other = duration_samples(1.0, (0.85, 1.15), &cov, 1e-4, 150_000, 9002).unwrap();
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let se = |v: &[f64]| {
            let m = mean(v);
            (v.iter().map(|&x| (x - m) * (x - m)).sum::<f64>()
                / (v.len() as f64 - 1.0)
                / v.len() as f64)
                .sqrt()
        };
        let diff = (mean(&base) - mean(&other)).abs();
        let tol = 3.0 * (se(&base).powi(2) + se(&other).powi(2)).sqrt();
        assert!(diff < tol, "means differ by {diff} vs tol {tol}");
    }

    #[test]
    fn mapped_exit_positions_follow_the_half_plane_hitting_law() {
        // Shearing and powering the stopped paths must produce the standard
        // half-plane exit law from the mapped start: the Cauchy distribution
        // centered at the mapped point. This exercises the full reduction.
        let gamma = 1.3;
        let cov = CovSpec::new(gamma).unwrap();
        let start = (0.8, 1.3);
        let (x0, y0) = shear_and_power(start, gamma, cov.a2);
        assert!(y0 > 0.0);
        let n = 4000u64;
        let samples: Vec<f64> = (0..n)
            .map(|s| {
                let p = sample_cone_path(start, &cov, 1e-5, 100 + s).unwrap();
                shear_and_power(p.exit_point, gamma, cov.a2).0
            })
            .collect();
        let w = vec![1.0; samples.len()];
        let cdf = |t: f64| 0.5 + ((t - x0) / y0).atan() / PI;
        let ks = ks_test_weighted(&samples, &w, &cdf).unwrap();
        assert!(ks.p_value > 0.01, "half-plane hitting KS p = {}", ks.p_value);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(CovSpec::new(0.0).is_err());
        assert!(CovSpec::new(2.0).is_err());
        assert!(CovSpec::with_a2(1.0, 0.0).is_err());
        assert!(CovSpec::with_a2(1.0, -3.0).is_err());
        let cov = CovSpec::new(1.0).unwrap();
        assert!(sample_cone_path((0.0, 1.0), &cov, 1e-4, 0).is_err());
        assert!(sample_cone_path((1.0, -1.0), &cov, 1e-4, 0).is_err());
        assert!(sample_cone_path((1.0, 1.0), &cov, 0.0, 0).is_err());
        assert!(exit_corner_prob((1.0, 1.0), 0.0, &cov, 1e-4, 10, 0).is_err());
        assert!(exit_corner_prob((1.0, 1.0), 0.1, &cov, 1e-4, 0, 0).is_err());
        assert!(kernel_estimate(0.0, 1.0, 0.1, 0.1, &cov, 1e-4, 10, 0).is_err());
        assert!(kernel_estimate(1.0, 1.0, -0.1, 0.1, &cov, 1e-4, 10, 0).is_err());
        assert!(duration_samples(1.0, (0.5, 0.4), &cov, 1e-4, 10, 0).is_err());
        // a window nothing reaches reports insufficient data, not a panic
        let far = duration_samples(1.0, (500.0, 500.1), &cov, 1e-3, 200, 0);
        assert!(far.is_err());
    }
}
