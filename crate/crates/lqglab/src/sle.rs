//! Chordal Loewner evolution with two boundary force points, curve tracing,
//! boundary-hitting statistics, and the recursive multiple-curve sampler.
//!
//! The driving function follows
//! `dW = sqrt(kappa) dB + [rho_-/(W - V_-) + rho_+/(W - V_+)] dt`,
//! `dV_i = 2 dt/(V_i - W)`, for `rho_+- > -2`. Near a collision the naive
//! Euler step is singular, so whenever a gap `|W - V_i|` falls below a
//! threshold the (W, V_i) pair advances by one exact step of the squared
//! Bessel process of dimension `1 + 2(rho_i + 2)/kappa` that the gap follows
//! (noncentral chi-square transition), which keeps the gap nonnegative with
//! the correct law. Force points start at `-+iota` for a microscopic
//! `iota = sqrt(kappa dt)/64`, so the first steps are exact Bessel entrances.

use crate::error::{Error, Result};
use crate::rng::{map_tasks, task_rng};
use crate::stats::std_normal;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

/// Discretized driving function of an SLE_kappa(rho_-; rho_+) chain.
/// `w`, `v_minus`, `v_plus` each hold `n_steps + 1` values on the uniform
/// time grid `k * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct DrivingPath {
    pub dt: f64,
    pub kappa: f64,
    pub rho_minus: f64,
    pub rho_plus: f64,
    pub w: Vec<f64>,
    pub v_minus: Vec<f64>,
    pub v_plus: Vec<f64>,
}

impl DrivingPath {
    pub fn n_steps(&self) -> usize {
        self.w.len() - 1
    }
}

/// A traced curve: `points[k]` approximates the tip at capacity time `k*dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct LoewnerCurve {
    pub points: Vec<Complex64>,
    pub driving: DrivingPath,
    /// Whether the driving gap on each side returned below `touch_tolerance`
    /// after having separated (the discrete signature of a boundary touch).
    pub touched_left: bool,
    pub touched_right: bool,
    pub touch_tolerance: f64,
}

/// Gap size below which the pair step switches to the exact Bessel move.
fn collision_scale(kappa: f64, dt: f64) -> f64 {
    4.0 * (kappa * dt).sqrt()
}

/// Exact one-step transition of the gap process. `gap / sqrt(kappa)` is a
/// Bessel process of dimension `dim` in ordinary time, so its square moves
/// by the squared-Bessel (noncentral chi-square) kernel: with `y = gap^2 /
/// kappa`, draw `N ~ Poisson(y / (2 dt))`, `G ~ Gamma(dim/2 + N, 2)`, and
/// return `sqrt(kappa * dt * G)`.
fn bessel_gap_step(gap: f64, dim: f64, kappa: f64, dt: f64, rng: &mut ChaCha8Rng) -> f64 {
    let lambda = gap * gap / (kappa * dt);
    let n = if lambda > 0.0 {
        Poisson::new(0.5 * lambda).expect("positive mean").sample(rng)
    } else {
        0.0
    };
    let shape = 0.5 * dim + n;
    let g = Gamma::new(shape, 2.0).expect("positive shape").sample(rng);
    (kappa * dt * g).sqrt()
}

/// Mutable state of one driving-function simulation.
struct DrivingStepper {
    kappa: f64,
    rho_minus: f64,
    rho_plus: f64,
    dt: f64,
    eps_c: f64,
    dim_minus: f64,
    dim_plus: f64,
    w: f64,
    v_minus: f64,
    v_plus: f64,
}

const TINY_GAP: f64 = 1e-12;

impl DrivingStepper {
    fn new(kappa: f64, rho_minus: f64, rho_plus: f64, dt: f64) -> Result<Self> {
        if !(kappa > 0.0 && kappa <= 4.0) {
            return Err(Error::param(format!(
                "kappa must lie in (0, 4], got {kappa}"
            )));
        }
        if !(rho_minus > -2.0 && rho_plus > -2.0) {
            return Err(Error::param(format!(
                "force-point weights must exceed -2, got ({rho_minus}, {rho_plus})"
            )));
        }
        if !(dt > 0.0) {
            return Err(Error::param(format!("dt must be positive, got {dt}")));
        }
        let iota = (kappa * dt).sqrt() / 64.0;
        Ok(DrivingStepper {
            kappa,
            rho_minus,
            rho_plus,
            dt,
            eps_c: collision_scale(kappa, dt),
            dim_minus: 1.0 + 2.0 * (rho_minus + 2.0) / kappa,
            dim_plus: 1.0 + 2.0 * (rho_plus + 2.0) / kappa,
            w: 0.0,
            v_minus: -iota,
            v_plus: iota,
        })
    }

    /// Advance (W, V_-, V_+) by one time step, preserving V_- <= W <= V_+.
    fn step(&mut self, rng: &mut ChaCha8Rng) {
        let (dt, kappa) = (self.dt, self.kappa);
        let gm = self.w - self.v_minus;
        let gp = self.v_plus - self.w;
        let lc = gm < self.eps_c;
        let rc = gp < self.eps_c;
        // During a double collision the smaller gap moves first; an exact tie
        // (the symmetric start) is broken by a fair coin so the transition
        // kernel stays invariant under the left-right reflection.
        let left_first =
            lc && (!rc || gm < gp || (gm == gp && rng.gen::<bool>()));
        let (w2, vm2, vp2);
        if !lc && !rc {
            let z: f64 = std_normal(rng);
            let mut w_new = self.w
                + (kappa * dt).sqrt() * z
                + dt * (self.rho_minus / gm - self.rho_plus / gp);
            let vm_new = self.v_minus - 2.0 * dt / gm;
            let vp_new = self.v_plus + 2.0 * dt / gp;
            w_new = w_new.clamp(vm_new, vp_new);
            (w2, vm2, vp2) = (w_new, vm_new, vp_new);
        } else if left_first {
            let g_new = bessel_gap_step(gm, self.dim_minus, kappa, dt, rng);
            let mut vm_new = self.v_minus - 2.0 * dt / (0.5 * (gm + g_new)).max(TINY_GAP);
            let mut w_new = vm_new + g_new;
            let vp_new;
            if !rc {
                let shift = -self.rho_plus * dt / gp;
                vm_new += shift;
                w_new += shift;
                vp_new = self.v_plus + 2.0 * dt / gp;
                if w_new > vp_new {
                    w_new = vp_new;
                }
            } else {
                // double collision: give the right gap its own exact move
                // from the post-update gap, attributed to the force point
                let gap_r = (self.v_plus - w_new).max(0.0);
                let g_r = bessel_gap_step(gap_r, self.dim_plus, kappa, dt, rng);
                vp_new = w_new + g_r;
            }
            (w2, vm2, vp2) = (w_new, vm_new, vp_new);
        } else {
            let g_new = bessel_gap_step(gp, self.dim_plus, kappa, dt, rng);
            let mut vp_new = self.v_plus + 2.0 * dt / (0.5 * (gp + g_new)).max(TINY_GAP);
            let mut w_new = vp_new - g_new;
            let vm_new;
            if !lc {
                let shift = self.rho_minus * dt / gm;
                vp_new += shift;
                w_new += shift;
                vm_new = self.v_minus - 2.0 * dt / gm;
                if w_new < vm_new {
                    w_new = vm_new;
                }
            } else {
                let gap_l = (w_new - self.v_minus).max(0.0);
                let g_l = bessel_gap_step(gap_l, self.dim_minus, kappa, dt, rng);
                vm_new = w_new - g_l;
            }
            (w2, vm2, vp2) = (w_new, vm_new, vp_new);
        }
        debug_assert!(vm2 <= w2 && w2 <= vp2);
        self.w = w2;
        self.v_minus = vm2;
        self.v_plus = vp2;
    }
}

/// Sample the driving function of SLE_kappa(rho_-; rho_+) over `n_steps`
/// uniform steps of size `dt`.
pub fn sample_driving(
    kappa: f64,
    rho_minus: f64,
    rho_plus: f64,
    n_steps: usize,
    dt: f64,
    seed: u64,
) -> Result<DrivingPath> {
    if n_steps == 0 {
        return Err(Error::param("n_steps must be at least 1"));
    }
    let mut st = DrivingStepper::new(kappa, rho_minus, rho_plus, dt)?;
    let mut rng = task_rng(seed, 0);
    let mut w = Vec::with_capacity(n_steps + 1);
    let mut v_minus = Vec::with_capacity(n_steps + 1);
    let mut v_plus = Vec::with_capacity(n_steps + 1);
    w.push(st.w);
    v_minus.push(st.v_minus);
    v_plus.push(st.v_plus);
    for _ in 0..n_steps {
        st.step(&mut rng);
        w.push(st.w);
        v_minus.push(st.v_minus);
        v_plus.push(st.v_plus);
    }
    Ok(DrivingPath {
        dt,
        kappa,
        rho_minus,
        rho_plus,
        w,
        v_minus,
        v_plus,
    })
}

/// Inverse of the single-slit map over one step with constant driving `w`:
/// maps the upper half-plane onto the half-plane minus a vertical slit of
/// capacity `dt` rooted at `w`, with the branch that fixes infinity.
fn inv_slit(z: Complex64, w: f64, dt: f64) -> Complex64 {
    let zeta = z - w;
    let mut s = (zeta * zeta - 4.0 * dt).sqrt();
    if s.im < 0.0 {
        s = -s;
    }
    if s.im == 0.0 && zeta.re < 0.0 {
        s = -s;
    }
    Complex64::new(w + s.re, s.im)
}

/// Forward single-slit map over one step with constant driving `w`.
#[cfg(test)]
fn fwd_slit(z: Complex64, w: f64, dt: f64) -> Complex64 {
    let zeta = z - w;
    let mut s = (zeta * zeta + 4.0 * dt).sqrt();
    if s.im < 0.0 {
        s = -s;
    }
    if s.im == 0.0 && zeta.re < 0.0 {
        s = -s;
    }
    Complex64::new(w + s.re, s.im)
}

/// Map a point through the inverse of the full forward flow of `driving`
/// (backward composition over all steps).
fn backward_map(driving: &DrivingPath, z: Complex64) -> Complex64 {
    let mut z = z;
    for k in (1..driving.w.len()).rev() {
        z = inv_slit(z, driving.w[k - 1], driving.dt);
    }
    z
}

/// Detect whether a gap track returned below `tol` after first separating
/// beyond `sep` — the discrete signature of a boundary touch.
fn gap_retouches(gaps: impl Iterator<Item = f64>, sep: f64, tol: f64) -> bool {
    let mut separated = false;
    for g in gaps {
        if g >= sep {
            separated = true;
        } else if separated && g < tol {
            return true;
        }
    }
    false
}

/// Trace the curve of a driving path by backward composition of per-step
/// slit maps: the tip at time `k*dt` is the image of `W(k*dt)` under the
/// inverses of steps `k, k-1, ..., 1`. Cost is quadratic in the step count.
pub fn trace_curve(driving: &DrivingPath) -> Result<LoewnerCurve> {
    let n = driving.n_steps();
    let dt = driving.dt;
    let mut points = Vec::with_capacity(n + 1);
    points.push(Complex64::new(driving.w[0], 0.0));
    for k in 1..=n {
        let mut z = Complex64::new(driving.w[k], 0.0);
        for j in (1..=k).rev() {
            z = inv_slit(z, driving.w[j - 1], dt);
        }
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(Error::numerical(format!(
                "curve tracing blew up at step {k}"
            )));
        }
        points.push(z);
    }
    let eps_c = collision_scale(driving.kappa, dt);
    let tol = eps_c / 4.0;
    let touched_left = gap_retouches(
        driving.w.iter().zip(&driving.v_minus).map(|(w, v)| w - v),
        2.0 * eps_c,
        tol,
    );
    let touched_right = gap_retouches(
        driving.w.iter().zip(&driving.v_plus).map(|(w, v)| v - w),
        2.0 * eps_c,
        tol,
    );
    Ok(LoewnerCurve {
        points,
        driving: driving.clone(),
        touched_left,
        touched_right,
        touch_tolerance: tol,
    })
}

/// One tracked boundary point: its Loewner image, the log-derivative of the
/// flow there, and the smallest Koebe-type distance estimate seen so far.
struct Probe {
    g: f64,
    log_deriv: f64,
    min_dist: f64,
    last_k: u64,
    next_k: u64,
    alive: bool,
}

/// Fraction of curves whose Koebe-estimated distance to each boundary ray
/// dipped below `threshold`, plus the per-curve minimal distances so that
/// fractions at other thresholds can be re-read without resampling.
#[derive(Debug, Clone)]
pub struct BoundaryHitStats {
    pub threshold: f64,
    pub n_curves: u64,
    pub left_fraction: f64,
    pub right_fraction: f64,
    pub min_left_dists: Vec<f64>,
    pub min_right_dists: Vec<f64>,
}

/// Number of driving steps used by `boundary_hit_stats` (fixed protocol).
pub const HIT_STEPS: u64 = 100_000;
/// Step size used by `boundary_hit_stats` (fixed protocol).
pub const HIT_DT: f64 = 1e-4;
const PROBES_PER_SIDE: usize = 50;
const PROBE_X_MIN: f64 = 0.05;
const PROBE_X_MAX: f64 = 6.0;
const PROBE_LATCH: f64 = 1e-4;

/// Estimate boundary-ray hitting fractions for SLE_kappa(rho_-; rho_+).
///
/// Each curve runs `HIT_STEPS` steps of size `HIT_DT`. Along each ray a set
/// of log-spaced boundary points `x` (excluding a fixed neighborhood of the
/// curve base, which every curve trivially approaches) is tracked through
/// the forward flow; the distance from the curve to `x` is estimated by the
/// Koebe quotient `(W - g_t(x)) / g_t'(x)`, and a curve counts as hitting a
/// ray when the smallest estimate over that ray's points falls below
/// `threshold`. Probes are refreshed on an adaptive stride so the cost stays
/// near-linear in the step count.
pub fn boundary_hit_stats(
    kappa: f64,
    rho_minus: f64,
    rho_plus: f64,
    n_curves: u64,
    threshold: f64,
    seed: u64,
) -> Result<BoundaryHitStats> {
    if !(threshold > 0.0) {
        return Err(Error::param(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    DrivingStepper::new(kappa, rho_minus, rho_plus, HIT_DT)?;
    let mins: Vec<(f64, f64)> = map_tasks(seed, n_curves, None, |_, rng| {
        let mut st = DrivingStepper::new(kappa, rho_minus, rho_plus, HIT_DT).expect("validated");
        let new_probe = |x: f64| Probe {
            g: x,
            log_deriv: 0.0,
            min_dist: f64::INFINITY,
            last_k: 0,
            next_k: 1,
            alive: true,
        };
        let ratio = (PROBE_X_MAX / PROBE_X_MIN).powf(1.0 / (PROBES_PER_SIDE as f64 - 1.0));
        let xs: Vec<f64> = (0..PROBES_PER_SIDE)
            .map(|i| PROBE_X_MIN * ratio.powi(i as i32))
            .collect();
        let mut left: Vec<Probe> = xs.iter().map(|&x| new_probe(-x)).collect();
        let mut right: Vec<Probe> = xs.iter().map(|&x| new_probe(x)).collect();
        for k in 1..=HIT_STEPS {
            st.step(rng);
            let w = st.w;
            for (probes, is_left) in [(&mut left, true), (&mut right, false)] {
                for p in probes.iter_mut() {
                    if !p.alive || p.next_k > k {
                        continue;
                    }
                    let span = (k - p.last_k) as f64 * HIT_DT;
                    let h0 = if is_left { w - p.g } else { p.g - w };
                    if h0 <= TINY_GAP {
                        p.min_dist = 0.0;
                        p.alive = false;
                        continue;
                    }
                    let drift = 2.0 * span / h0;
                    p.g += if is_left { -drift } else { drift };
                    p.log_deriv -= 2.0 * span / (h0 * h0);
                    let h = if is_left { w - p.g } else { p.g - w };
                    if h <= TINY_GAP {
                        p.min_dist = 0.0;
                        p.alive = false;
                        continue;
                    }
                    let dist = h * (-p.log_deriv).exp();
                    if dist < p.min_dist {
                        p.min_dist = dist;
                    }
                    if p.min_dist < PROBE_LATCH {
                        p.alive = false;
                        continue;
                    }
                    let stride = (h * h / (64.0 * kappa * HIT_DT)).floor();
                    let stride = (stride as u64).clamp(1, 1024);
                    p.last_k = k;
                    p.next_k = k + stride;
                }
            }
        }
        let min_of = |probes: &[Probe]| {
            probes
                .iter()
                .map(|p| p.min_dist)
                .fold(f64::INFINITY, f64::min)
        };
        (min_of(&left), min_of(&right))
    });
    let n = n_curves.max(1) as f64;
    let left_hits = mins.iter().filter(|m| m.0 < threshold).count() as f64;
    let right_hits = mins.iter().filter(|m| m.1 < threshold).count() as f64;
    Ok(BoundaryHitStats {
        threshold,
        n_curves,
        left_fraction: left_hits / n,
        right_fraction: right_hits / n,
        min_left_dists: mins.iter().map(|m| m.0).collect(),
        min_right_dists: mins.iter().map(|m| m.1).collect(),
    })
}

fn subseed(seed: u64, tag: u64) -> u64 {
    task_rng(seed, tag).gen()
}

/// Sample the recursive multiple-curve law for boundary weights `weights`
/// (n weights give n-1 ordered curves from the base point). The last curve
/// is drawn first as SLE_kappa(sum of left weights - 2; last weight - 2)
/// with kappa = gamma^2; the remaining curves are drawn recursively in the
/// region left of it and mapped back through the terminal Loewner flow
/// (left region uniformized by squaring, since the completed curve leaves
/// the half-plane split at the final driving position).
pub fn sample_multiple(
    weights: &[f64],
    gamma: f64,
    n_steps: usize,
    dt: f64,
    seed: u64,
) -> Result<Vec<LoewnerCurve>> {
    if weights.len() < 2 {
        return Err(Error::param("need at least two boundary weights"));
    }
    if weights.iter().any(|&w| !(w > 0.0)) {
        return Err(Error::param("all boundary weights must be positive"));
    }
    if !(gamma > 0.0 && gamma < 2.0) {
        return Err(Error::param(format!("gamma must lie in (0,2), got {gamma}")));
    }
    let kappa = gamma * gamma;
    let n = weights.len();
    let left_sum: f64 = weights[..n - 1].iter().sum();
    let driving = sample_driving(
        kappa,
        left_sum - 2.0,
        weights[n - 1] - 2.0,
        n_steps,
        dt,
        subseed(seed, n as u64),
    )?;
    let outer = trace_curve(&driving)?;
    if n == 2 {
        return Ok(vec![outer]);
    }
    if outer.touched_left {
        return Err(Error::numerical(format!(
            "the separating curve touched the left boundary (gap tolerance {:.3e}), so the \
             left complement splits into several components; recursion at this resolution \
             only supports a single left component",
            outer.touch_tolerance
        )));
    }
    let w_t = *driving.w.last().expect("nonempty");
    let gap = w_t - *driving.v_minus.last().expect("nonempty");
    if gap <= TINY_GAP {
        return Err(Error::numerical(
            "terminal left gap vanished; left component is degenerate at this resolution",
        ));
    }
    let inner = sample_multiple(&weights[..n - 1], gamma, n_steps, dt, subseed(seed, 1))?;
    let gap2 = gap * gap;
    let mapped: Result<Vec<LoewnerCurve>> = inner
        .into_iter()
        .map(|curve| {
            let points: Vec<Complex64> = curve
                .points
                .iter()
                .map(|&z| {
                    // inverse of the uniformization: affine to the squared
                    // coordinates, square root into the left quarter at the
                    // final driving position, then the backward flow
                    let u = gap2 * (z - 1.0);
                    let zeta = Complex64::i() * u.sqrt();
                    backward_map(&driving, zeta + w_t)
                })
                .collect();
            if points
                .iter()
                .any(|z| !z.re.is_finite() || !z.im.is_finite())
            {
                return Err(Error::numerical(
                    "mapping a nested curve back through the outer flow blew up",
                ));
            }
            Ok(LoewnerCurve { points, ..curve })
        })
        .collect();
    let mut curves = mapped?;
    curves.push(outer);
    Ok(curves)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{ks_test_weighted, ks_two_sample_weighted, OnlineStats};
    use statrs::distribution::{ChiSquared, ContinuousCDF};

    #[test]
    fn zero_rho_driving_is_brownian() {
        // variance of W at T = 1 over many runs, and Gaussian shape of
        // span-increments (pooled over 10-step spans)
        let (kappa, dt, n_steps) = (2.0f64, 0.01, 100);
        let mut var = OnlineStats::default();
        let mut incs = Vec::new();
        for seed in 0..10_000u64 {
            let d = sample_driving(kappa, 0.0, 0.0, n_steps, dt, seed).unwrap();
            var.push(*d.w.last().unwrap());
            if seed < 1000 {
                for j in (10..=n_steps).step_by(10) {
                    incs.push(d.w[j] - d.w[j - 10]);
                }
            }
        }
        let ratio = var.variance() / kappa;
        assert!(
            (0.97..=1.03).contains(&ratio),
            "Var(W_1)/kappa = {ratio:.4}"
        );
        let sd = (kappa * 10.0 * dt).sqrt();
        let normal = statrs::distribution::Normal::new(0.0, sd).unwrap();
        let weights = vec![1.0; incs.len()];
        let report = ks_test_weighted(&incs, &weights, &|x| normal.cdf(x)).unwrap();
        assert!(report.p_value > 1e-3, "increment KS p = {}", report.p_value);
    }

    #[test]
    fn mirror_symmetry_of_asymmetric_weights() {
        let (kappa, dt, n_steps) = (2.0f64, 5e-4, 1000);
        let a: Vec<f64> = (0..4000u64)
            .map(|s| {
                *sample_driving(kappa, -1.5, 0.5, n_steps, dt, s)
                    .unwrap()
                    .w
                    .last()
                    .unwrap()
            })
            .collect();
        let b: Vec<f64> = (0..4000u64)
            .map(|s| {
                -*sample_driving(kappa, 0.5, -1.5, n_steps, dt, 7_000_000 + s)
                    .unwrap()
                    .w
                    .last()
                    .unwrap()
            })
            .collect();
        let wts = vec![1.0; a.len()];
        let report = ks_two_sample_weighted(&a, &wts, &b, &wts).unwrap();
        assert!(report.p_value > 0.01, "mirror KS p = {}", report.p_value);
    }

    #[test]
    fn force_point_ordering_preserved() {
        // strongly attracting weights exercise the collision branch
        for seed in 0..20u64 {
            let d = sample_driving(3.0, -1.9, -1.9, 2000, 1e-3, seed).unwrap();
            for k in 0..d.w.len() {
                assert!(d.v_minus[k] <= d.w[k] + 1e-12, "left ordering at {k}");
                assert!(d.w[k] <= d.v_plus[k] + 1e-12, "right ordering at {k}");
            }
        }
    }

    #[test]
    fn gap_marginal_matches_exact_bessel_law() {
        // with rho_+ = 0 the left gap over sqrt(kappa) is a Bessel process
        // of dimension 1 + 2(rho+2)/kappa from an infinitesimal start, so
        // gap(T) ~ sqrt(kappa T chi2_d). Touching regime d < 2 included.
        let (kappa, dt, n_steps) = (2.0f64, 5e-4, 1000);
        let t = dt * n_steps as f64;
        for rho in [-1.7f64, -1.0, 0.5] {
            let dim = 1.0 + 2.0 * (rho + 2.0) / kappa;
            let gaps: Vec<f64> = (0..4000u64)
                .map(|s| {
                    let d = sample_driving(kappa, rho, 0.0, n_steps, dt, 31_000 + s).unwrap();
                    (d.w.last().unwrap() - d.v_minus.last().unwrap()).powi(2) / (kappa * t)
                })
                .collect();
            let chi2 = ChiSquared::new(dim).unwrap();
            let wts = vec![1.0; gaps.len()];
            let report = ks_test_weighted(&gaps, &wts, &|x| chi2.cdf(x)).unwrap();
            assert!(
                report.p_value > 1e-3,
                "rho = {rho}: gap^2/(kappa T) vs chi2_{dim}: p = {}",
                report.p_value
            );
        }
    }

    #[test]
    fn zero_driving_traces_the_vertical_slit() {
        let (n, dt) = (2000usize, 1e-4);
        let driving = DrivingPath {
            dt,
            kappa: 2.0,
            rho_minus: 0.0,
            rho_plus: 0.0,
            w: vec![0.0; n + 1],
            v_minus: vec![0.0; n + 1],
            v_plus: vec![0.0; n + 1],
        };
        let curve = trace_curve(&driving).unwrap();
        for (k, z) in curve.points.iter().enumerate() {
            assert!(z.re.abs() < 1e-3, "slit should be vertical, Re = {}", z.re);
            let t = k as f64 * dt;
            let expect = 2.0 * t.sqrt();
            assert!(
                (z.im - expect).abs() <= 1e-9 + 0.01 * expect,
                "capacity parametrization: Im tip = {} vs 2 sqrt(t) = {expect}",
                z.im
            );
        }
    }

    #[test]
    fn traced_curve_stays_in_the_closed_half_plane() {
        let d = sample_driving(2.0, -1.0, 0.5, 1500, 1e-4, 5).unwrap();
        let curve = trace_curve(&d).unwrap();
        for z in &curve.points {
            assert!(z.im >= -1e-9, "curve left the half-plane: Im = {}", z.im);
        }
    }

    #[test]
    fn forward_flow_returns_the_tip_to_the_driving_value() {
        let d = sample_driving(2.0, -0.5, 0.5, 800, 1e-4, 11).unwrap();
        let curve = trace_curve(&d).unwrap();
        for &k in &[200usize, 500, 800] {
            let mut z = curve.points[k] + Complex64::new(0.0, 1e-9);
            for j in 1..=k {
                z = fwd_slit(z, d.w[j - 1], d.dt);
            }
            // tracing carries an O(sqrt(dt)) discretization error, so the
            // recovered preimage lands near W_k rather than exactly on it;
            // a wrong branch cut would be off at the scale of the path.
            assert!(
                (z.re - d.w[k]).abs() < 6.0 * d.dt.sqrt(),
                "forward-mapped tip at step {k}: {} vs W = {}",
                z.re,
                d.w[k]
            );
            assert!(
                z.im.abs() < 6.0 * d.dt.sqrt(),
                "forward-mapped tip should return to the boundary, Im = {}",
                z.im
            );
        }
    }

    #[test]
    fn hitting_fractions_separate_the_phases() {
        let kappa = 2.0; // critical rho is kappa/2 - 2 = -1
        let hit = boundary_hit_stats(kappa, -1.5, 0.0, 100, 1e-2, 99).unwrap();
        assert!(
            hit.left_fraction > 0.8,
            "attracting side should hit: {}",
            hit.left_fraction
        );
        let miss = boundary_hit_stats(kappa, 0.5, 0.0, 100, 1e-2, 99).unwrap();
        assert!(
            miss.left_fraction < 0.2,
            "repelling side should not hit: {}",
            miss.left_fraction
        );
        // monotone in threshold, recomputed from the stored minima
        let frac_at = |stats: &BoundaryHitStats, thr: f64| {
            stats.min_left_dists.iter().filter(|&&d| d < thr).count() as f64
                / stats.n_curves as f64
        };
        let (f1, f2, f3) = (
            frac_at(&hit, 5e-3),
            frac_at(&hit, 1e-2),
            frac_at(&hit, 5e-2),
        );
        assert!(f1 <= f2 && f2 <= f3, "monotone in threshold: {f1} {f2} {f3}");
    }

    #[test]
    fn two_weight_case_is_a_single_traced_curve() {
        let curves = sample_multiple(&[1.5, 2.5], std::f64::consts::SQRT_2, 300, 1e-3, 42).unwrap();
        assert_eq!(curves.len(), 1);
        let c = &curves[0];
        assert!((c.driving.kappa - 2.0).abs() < 1e-12);
        assert_eq!(c.driving.rho_minus, 1.5 - 2.0);
        assert_eq!(c.driving.rho_plus, 2.5 - 2.0);
        let retraced = trace_curve(&c.driving).unwrap();
        assert_eq!(retraced.points, c.points);
        let again = sample_multiple(&[1.5, 2.5], std::f64::consts::SQRT_2, 300, 1e-3, 42).unwrap();
        assert_eq!(again[0].points, c.points);
    }

    #[test]
    fn three_thick_weights_give_ordered_disjoint_curves() {
        let gamma = std::f64::consts::SQRT_2;
        let curves = sample_multiple(&[1.2, 1.2, 1.2], gamma, 1200, 2e-4, 7).unwrap();
        assert_eq!(curves.len(), 2);
        let (inner, outer) = (&curves[0], &curves[1]);
        // interiors stay apart (common endpoints excluded by a base cutoff)
        let mut min_dist = f64::INFINITY;
        for a in inner.points.iter().filter(|z| z.norm() > 0.05) {
            for b in outer.points.iter().filter(|z| z.norm() > 0.05) {
                min_dist = min_dist.min((a - b).norm());
            }
        }
        assert!(
            min_dist > 1e-4,
            "thick-weight curves should not intersect: min distance {min_dist:.2e}"
        );
        // ordering: forward-flowing nested-curve points through the
        // separating curve's driving lands them left of its final position
        let d = &outer.driving;
        let w_t = *d.w.last().unwrap();
        for &z in inner.points.iter().filter(|z| z.im > 1e-6) {
            let mut y = z;
            for j in 1..d.w.len() {
                y = fwd_slit(y, d.w[j - 1], d.dt);
            }
            assert!(
                y.re <= w_t + 1e-6,
                "nested point {z} flowed to {y}, right of W_T = {w_t}"
            );
        }
        for c in &curves {
            for z in &c.points {
                assert!(z.im >= -1e-9);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(sample_driving(2.0, -2.0, 0.0, 10, 1e-3, 0).is_err());
        assert!(sample_driving(0.0, 0.0, 0.0, 10, 1e-3, 0).is_err());
        assert!(sample_driving(5.0, 0.0, 0.0, 10, 1e-3, 0).is_err());
        assert!(sample_multiple(&[1.0], 1.0, 10, 1e-3, 0).is_err());
        assert!(sample_multiple(&[1.0, -1.0], 1.0, 10, 1e-3, 0).is_err());
        assert!(boundary_hit_stats(2.0, 0.0, 0.0, 1, 0.0, 0).is_err());
    }
}
