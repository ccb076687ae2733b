//! Horizontal average processes on the truncated strip/cylinder.
//!
//! All four surface kinds share one engine: a Brownian motion with variance
//! `2t` and constant downward drift `a`, conditioned to stay negative for all
//! positive times. The engine is exact in law at the grid times:
//!
//! * the one-step kernel is the Doob transform of the kernel killed at 0 by
//!   the scale function `h(y) = 1 - e^{a y}` (the probability of never
//!   reaching 0 from `y < 0`), sampled by rejection from the free Gaussian
//!   step with acceptance probability `(1 - e^{-x y / dt})(1 - e^{a y})`;
//! * the entrance law out of 0 has density proportional to
//!   `(-y)(1 - e^{a y}) exp(-(y + a t)^2 / (4 t))` on `y < 0`, sampled by a
//!   tabulated inverse CDF;
//! * the driftless boundary case `a = 0` is minus a 3-dimensional Bessel
//!   process run at speed 2, sampled exactly through Gaussian triples.
//!
//! Cylinder kinds (sphere, cone) want variance `1·dt` per grid step and drift
//! `q - alpha`; they reuse the same engine on a half-speed clock (step
//! `dt/2`, drift `2(q - alpha)`) with the grid labels unchanged.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::params::LqgParams;
use crate::rng::task_rng;
use crate::stats::std_normal;
use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Horizontal average process sampled on an increasing time grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizontalProcess {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
}

/// The four surface constructions handled by the field samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SurfaceKind {
    ThickDisk,
    Wedge,
    Sphere,
    Cone,
}

impl SurfaceKind {
    /// Sphere and cone fields live on the cylinder of circumference `2*pi`;
    /// disk and wedge fields live on the strip of height `pi`.
    pub fn is_cylinder(self) -> bool {
        matches!(self, SurfaceKind::Sphere | SurfaceKind::Cone)
    }

    /// Vertical extent of the domain carrying this kind.
    pub fn domain_height(self) -> f64 {
        if self.is_cylinder() {
            2.0 * PI
        } else {
            PI
        }
    }
}

const ENTRANCE_CELLS: usize = 4096;

/// Time-`t` marginal of variance-`2` Brownian motion with drift `-a < 0`,
/// started at `0^-` and conditioned to stay negative forever: the normalized
/// density `C (-y)(1 - e^{a y}) exp(-(y + a t)^2 / (4 t))` on `y < 0`.
///
/// Holds a cumulative Simpson table on `[support_lower(), 0]` used for
/// inverse-CDF sampling and cheap CDF evaluation; the density mass below
/// `support_lower()` is smaller than `e^{-72}` and is ignored.
#[derive(Debug, Clone)]
pub struct EntranceLaw {
    a: f64,
    t: f64,
    lo: f64,
    cell: f64,
    /// Unnormalized cumulative mass through the right edge of each cell.
    cum: Vec<f64>,
}

impl EntranceLaw {
    pub fn new(a: f64, t: f64) -> Result<Self> {
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::param(format!(
                "entrance law needs a strictly positive drift, got {a}"
            )));
        }
        if !(t > 0.0) || !t.is_finite() {
            return Err(Error::param(format!(
                "entrance law needs a strictly positive time, got {t}"
            )));
        }
        let lo = -(a * t + 12.0 * (2.0 * t).sqrt());
        let cell = -lo / ENTRANCE_CELLS as f64;
        let f = |y: f64| unnormalized_entrance(a, t, y);
        let mut cum = Vec::with_capacity(ENTRANCE_CELLS);
        let mut acc = 0.0;
        for i in 0..ENTRANCE_CELLS {
            let l = lo + i as f64 * cell;
            let r = l + cell;
            acc += cell / 6.0 * (f(l) + 4.0 * f(0.5 * (l + r)) + f(r));
            cum.push(acc);
        }
        Ok(EntranceLaw { a, t, lo, cell, cum })
    }

    /// Left end of the tabulated support.
    pub fn support_lower(&self) -> f64 {
        self.lo
    }

    fn norm(&self) -> f64 {
        *self.cum.last().expect("table is never empty")
    }

    /// Normalized density at `y` (zero for `y >= 0`).
    pub fn density(&self, y: f64) -> f64 {
        unnormalized_entrance(self.a, self.t, y) / self.norm()
    }

    /// CDF at `y`, from the cumulative table plus a partial Simpson cell.
    pub fn cdf(&self, y: f64) -> f64 {
        if y >= 0.0 {
            return 1.0;
        }
        if y <= self.lo {
            return 0.0;
        }
        let idx = (((y - self.lo) / self.cell) as usize).min(ENTRANCE_CELLS - 1);
        let l = self.lo + idx as f64 * self.cell;
        let base = if idx == 0 { 0.0 } else { self.cum[idx - 1] };
        let w = y - l;
        let f = |z: f64| unnormalized_entrance(self.a, self.t, z);
        let partial = w / 6.0 * (f(l) + 4.0 * f(l + 0.5 * w) + f(y));
        ((base + partial) / self.norm()).clamp(0.0, 1.0)
    }

    /// Inverse-CDF draw (piecewise-linear within one table cell).
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let target = rng.gen::<f64>() * self.norm();
        let idx = self.cum.partition_point(|&c| c < target);
        let idx = idx.min(ENTRANCE_CELLS - 1);
        let before = if idx == 0 { 0.0 } else { self.cum[idx - 1] };
        let mass = self.cum[idx] - before;
        let frac = if mass > 0.0 {
            ((target - before) / mass).clamp(0.0, 1.0)
        } else {
            0.5
        };
        (self.lo + (idx as f64 + frac) * self.cell).min(-1e-300)
    }
}

fn unnormalized_entrance(a: f64, t: f64, y: f64) -> f64 {
    if y >= 0.0 {
        return 0.0;
    }
    let z = y + a * t;
    (-y) * (-f64::exp_m1(a * y)) * (-z * z / (4.0 * t)).exp()
}

/// Exact one-step transition density in `y` of the conditioned-negative
/// process over a step of length `dt`, from a state `x < 0`. Normalized in
/// `y` over `(-inf, 0)`; zero for `y >= 0`. The drift `a` may be zero, in
/// which case the scale-function ratio degenerates to `y / x`.
pub fn conditioned_transition_density(a: f64, dt: f64, x: f64, y: f64) -> f64 {
    debug_assert!(x < 0.0 && dt > 0.0 && a >= 0.0);
    if y >= 0.0 {
        return 0.0;
    }
    let d = y - x + a * dt;
    let gauss = (-d * d / (4.0 * dt)).exp() / (4.0 * PI * dt).sqrt();
    let survival = -f64::exp_m1(-x * y / dt);
    let h_ratio = if a == 0.0 {
        y / x
    } else {
        f64::exp_m1(a * y) / f64::exp_m1(a * x)
    };
    gauss * survival * h_ratio
}

/// Sampler for variance-`2` Brownian motion with downward drift `a >= 0`,
/// conditioned to stay negative, advanced on a fixed time step `dt`.
#[derive(Debug, Clone)]
pub struct ConditionedNegativeSampler {
    a: f64,
    dt: f64,
    entrance: Option<EntranceLaw>,
}

impl ConditionedNegativeSampler {
    pub fn new(a: f64, dt: f64) -> Result<Self> {
        if !(a >= 0.0) || !a.is_finite() {
            return Err(Error::param(format!(
                "conditioned sampler needs drift a >= 0, got {a}"
            )));
        }
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::param(format!("step dt must be positive, got {dt}")));
        }
        let entrance = if a > 0.0 {
            Some(EntranceLaw::new(a, dt)?)
        } else {
            None
        };
        Ok(ConditionedNegativeSampler { a, dt, entrance })
    }

    /// First value after leaving 0, i.e. one draw from the entrance law at
    /// time `dt`. For `a = 0` this is `-sqrt(2 dt)` times a chi(3) variate.
    pub fn entrance_sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match &self.entrance {
            Some(law) => law.sample(rng),
            None => {
                let s = (2.0 * self.dt).sqrt();
                -norm3(
                    s * std_normal(rng),
                    s * std_normal(rng),
                    s * std_normal(rng),
                )
            }
        }
    }

    /// One exact transition from `x < 0`. Rejection from the free Gaussian
    /// step for `a > 0`; an exact 3-dimensional Bessel move for `a = 0`.
    pub fn step<R: Rng>(&self, x: f64, rng: &mut R) -> f64 {
        assert!(
            x < 0.0,
            "conditioned step must start strictly below 0, got {x}"
        );
        let s = (2.0 * self.dt).sqrt();
        if self.a == 0.0 {
            return -norm3(
                -x + s * std_normal(rng),
                s * std_normal(rng),
                s * std_normal(rng),
            );
        }
        let mut tries: u64 = 0;
        loop {
            let y = x - self.a * self.dt + s * std_normal(rng);
            if y < 0.0 {
                let accept = (-f64::exp_m1(-x * y / self.dt)) * (-f64::exp_m1(self.a * y));
                if rng.gen::<f64>() < accept {
                    return y;
                }
            }
            tries += 1;
            assert!(
                tries < 100_000_000,
                "conditioned-step rejection stalled from x = {x} at dt = {}",
                self.dt
            );
        }
    }

    /// Path `[0, X_dt, ..., X_{n dt}]` out of the entrance boundary.
    pub fn path<R: Rng>(&self, n_steps: usize, rng: &mut R) -> Vec<f64> {
        let mut values = Vec::with_capacity(n_steps + 1);
        values.push(0.0);
        if n_steps == 0 {
            return values;
        }
        let mut x = self.entrance_sample(rng);
        values.push(x);
        for _ in 1..n_steps {
            x = self.step(x, rng);
            values.push(x);
        }
        values
    }
}

fn norm3(a: f64, b: f64, c: f64) -> f64 {
    (a * a + b * b + c * c).sqrt()
}

/// Unconditioned branch: values of `B_{2t} - a t` on `0, dt, ..., n dt`.
fn free_branch<R: Rng>(a: f64, dt: f64, n_steps: usize, rng: &mut R) -> Vec<f64> {
    let s = (2.0 * dt).sqrt();
    let mut values = Vec::with_capacity(n_steps + 1);
    let mut x = 0.0;
    values.push(x);
    for _ in 0..n_steps {
        x += -a * dt + s * std_normal(rng);
        values.push(x);
    }
    values
}

/// Sample `B_{2t} - a t` conditioned to stay negative on the time grid
/// `0, dt, 2 dt, ...` extending to at least `horizon`.
pub fn sample_conditioned_negative_bm(
    a: f64,
    dt: f64,
    horizon: f64,
    seed: u64,
) -> Result<HorizontalProcess> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::param(format!("dt must be positive, got {dt}")));
    }
    if !(horizon >= dt) || !horizon.is_finite() {
        return Err(Error::param(format!(
            "horizon must be at least dt, got horizon = {horizon}, dt = {dt}"
        )));
    }
    let sampler = ConditionedNegativeSampler::new(a, dt)?;
    let n = ((horizon / dt) - 1e-9).ceil().max(1.0) as usize;
    let mut rng = task_rng(seed, 0);
    Ok(HorizontalProcess {
        times: (0..=n).map(|i| i as f64 * dt).collect(),
        values: sampler.path(n, &mut rng),
    })
}

/// Two-sided horizontal process glued at `t = 0`, per surface kind:
/// disk and sphere take two independent conditioned-negative branches;
/// wedge and cone take a free branch for `t >= 0` and a conditioned-positive
/// branch (the negative of a conditioned-negative one) for `t < 0`.
/// Strip kinds have per-step variance `2 dt`; cylinder kinds run the engine
/// on a half-speed clock so per-step variance is `1 dt` and the drift rate
/// is `q - alpha`.
pub fn sample_horizontal(
    kind: SurfaceKind,
    params: &LqgParams,
    grid: &GridSpec,
    seed: u64,
) -> Result<HorizontalProcess> {
    let n = grid.nx / 2;
    let (a_base, dt_base) = if kind.is_cylinder() {
        (2.0 * params.cylinder_drift(), grid.dt / 2.0)
    } else {
        (params.strip_drift(), grid.dt)
    };
    if a_base < 0.0 {
        return Err(Error::param(format!(
            "{kind:?} needs a nonnegative horizontal drift, which requires weight \
             W >= gamma^2/2; got W = {}, gamma = {}",
            params.w, params.gamma
        )));
    }
    let mut rng_pos = task_rng(seed, 1);
    let mut rng_neg = task_rng(seed, 2);
    let sampler = ConditionedNegativeSampler::new(a_base, dt_base)?;
    let (pos, neg) = match kind {
        SurfaceKind::ThickDisk | SurfaceKind::Sphere => (
            sampler.path(n, &mut rng_pos),
            sampler.path(n, &mut rng_neg),
        ),
        SurfaceKind::Wedge | SurfaceKind::Cone => {
            let free = free_branch(a_base, dt_base, n, &mut rng_pos);
            let conditioned_positive: Vec<f64> =
                sampler.path(n, &mut rng_neg).iter().map(|v| -v).collect();
            (free, conditioned_positive)
        }
    };
    let mut values = Vec::with_capacity(grid.nx + 1);
    for i in (1..=n).rev() {
        values.push(neg[i]);
    }
    values.extend_from_slice(&pos);
    Ok(HorizontalProcess {
        times: grid.x_nodes(),
        values,
    })
}
