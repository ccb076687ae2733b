//! Full field samples: horizontal average process + lateral field + the
//! additive constant `c`, with window-based handling of the non-normalizable
//! `c` laws.
//!
//! Disk fields carry `c` with density `(gamma/2) e^{(beta - q) c} dc` and
//! sphere fields `(gamma/2) e^{2 (alpha - q) c} dc` — infinite measures that
//! diverge toward `c -> -infinity` and integrate toward `+infinity`. A sample
//! is therefore drawn from a window `(c_min, c_max]` with finite `c_min`, and
//! the window's total mass is recorded as the sample's `importance_weight`
//! so downstream statistics can unwind the truncation. Wedge and cone laws
//! are probability measures with no `c`; their weight is 1.
//!
//! RNG stream allocation per master seed: stream 0 drives the lateral field,
//! streams 1 and 2 the two horizontal branches, stream 3 the `c` draw.

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::horizontal::{sample_horizontal, HorizontalProcess, SurfaceKind};
use crate::lateral::{sample_lateral, LateralDomain, LateralField};
use crate::params::{derive_params, LqgParams};
use crate::rng::task_rng;
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Which strip boundary line a trace or measure refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BoundarySide {
    /// The line `y = 0`.
    Lower,
    /// The line `y = pi`.
    Upper,
}

/// A discretized field: everything needed to evaluate cell and boundary
/// averages of `h = horizontal + lateral + c`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldSample {
    pub grid: GridSpec,
    pub kind: SurfaceKind,
    pub params: LqgParams,
    pub horizontal: HorizontalProcess,
    pub lateral: LateralField,
    pub c_const: f64,
    /// Mass of the `c` window this sample was drawn from (1 for wedge/cone).
    pub importance_weight: f64,
}

impl FieldSample {
    /// Average of the horizontal process over x-cell `ix` (trapezoid on the
    /// two cell-edge values).
    pub fn horizontal_cell_avg(&self, ix: usize) -> f64 {
        0.5 * (self.horizontal.values[ix] + self.horizontal.values[ix + 1])
    }

    /// Cell-averaged total field on bulk cell `(ix, iy)`.
    pub fn cell_value(&self, ix: usize, iy: usize) -> f64 {
        self.horizontal_cell_avg(ix) + self.lateral.cells[ix][iy] + self.c_const
    }

    /// Cell-averaged total field on the boundary segment above x-cell `ix`
    /// (strip kinds only).
    pub fn boundary_value(&self, side: BoundarySide, ix: usize) -> Result<f64> {
        let trace = match side {
            BoundarySide::Lower => self.lateral.lower_trace.as_ref(),
            BoundarySide::Upper => self.lateral.upper_trace.as_ref(),
        };
        let trace = trace.ok_or_else(|| {
            Error::param(format!(
                "{:?} fields live on the cylinder and have no boundary",
                self.kind
            ))
        })?;
        Ok(self.horizontal_cell_avg(ix) + trace[ix] + self.c_const)
    }

    /// Shift the additive constant; no other component changes.
    pub fn with_added_constant(&self, c: f64) -> FieldSample {
        let mut out = self.clone();
        out.c_const += c;
        out
    }
}

/// Exponential rate of the `c` density for a kind: `beta - q` for the disk,
/// `2 (alpha - q)` for the sphere. Wedge and cone carry no `c` law.
fn c_rate(kind: SurfaceKind, params: &LqgParams) -> Result<f64> {
    match kind {
        SurfaceKind::ThickDisk => Ok(params.beta - params.q),
        SurfaceKind::Sphere => Ok(2.0 * (params.alpha - params.q)),
        SurfaceKind::Wedge | SurfaceKind::Cone => Err(Error::param(format!(
            "{kind:?} is a probability law without an additive-constant density"
        ))),
    }
}

/// Unnormalized `c` density `(gamma/2) e^{rate * c}` for disk/sphere kinds.
pub fn c_density(kind: SurfaceKind, params: &LqgParams, c: f64) -> Result<f64> {
    let rate = c_rate(kind, params)?;
    Ok(0.5 * params.gamma * (rate * c).exp())
}

/// Closed-form mass of the `c` density over `(c_min, c_max]`. `c_max` may be
/// `+inf` when the rate is negative (every sphere; disks with W > gamma^2/2).
pub fn c_window_mass(kind: SurfaceKind, params: &LqgParams, window: (f64, f64)) -> Result<f64> {
    let rate = c_rate(kind, params)?;
    let (lo, hi) = window;
    if !lo.is_finite() {
        return Err(Error::param(format!(
            "c window must have a finite lower end, got {lo}; the density diverges toward -infinity"
        )));
    }
    if !(hi > lo) {
        return Err(Error::param(format!("empty c window ({lo}, {hi}]")));
    }
    let half_gamma = 0.5 * params.gamma;
    if hi.is_infinite() {
        if rate >= 0.0 {
            return Err(Error::param(format!(
                "c window ({lo}, inf) has infinite mass at rate {rate} (weight at the thick boundary)"
            )));
        }
        return Ok(half_gamma * (rate * lo).exp() / (-rate));
    }
    if rate == 0.0 {
        return Ok(half_gamma * (hi - lo));
    }
    // (gamma/2) * (e^{rate*hi} - e^{rate*lo}) / rate, written to stay stable
    // for strongly negative rate * lo
    Ok(half_gamma * (rate * lo).exp() * f64::exp_m1(rate * (hi - lo)) / rate)
}

/// Draw `c` from the density restricted to the window (inverse CDF).
fn sample_c<R: Rng>(rate: f64, window: (f64, f64), rng: &mut R) -> f64 {
    let (lo, hi) = window;
    let u: f64 = rng.gen();
    if hi.is_infinite() {
        // truncated exponential on (lo, inf) with negative rate
        return lo + f64::ln_1p(-u) / rate;
    }
    if rate == 0.0 {
        return lo + u * (hi - lo);
    }
    lo + f64::ln_1p(u * f64::exp_m1(rate * (hi - lo))) / rate
}

/// Assemble a full field sample of the given kind.
///
/// Disk and sphere kinds require a `c` window `(c_min, c_max]` with finite
/// `c_min` (`c_max = +inf` is allowed whenever the window mass converges) and
/// record that mass as `importance_weight`. Wedge and cone kinds must be
/// called with `c_window = None`.
pub fn sample_surface(
    kind: SurfaceKind,
    gamma: f64,
    w: f64,
    grid: &GridSpec,
    c_window: Option<(f64, f64)>,
    seed: u64,
) -> Result<FieldSample> {
    let params = derive_params(gamma, w)?;
    let horizontal = sample_horizontal(kind, &params, grid, seed)?;
    let domain = if kind.is_cylinder() {
        LateralDomain::Cylinder
    } else {
        LateralDomain::Strip
    };
    let lateral = sample_lateral(grid, domain, seed);
    let (c_const, importance_weight) = match kind {
        SurfaceKind::ThickDisk | SurfaceKind::Sphere => {
            let window = c_window.ok_or_else(|| {
                Error::param(format!(
                    "{kind:?} needs a c window (c_min, c_max]; its c law is an infinite measure"
                ))
            })?;
            let mass = c_window_mass(kind, &params, window)?;
            let rate = c_rate(kind, &params)?;
            let mut rng = task_rng(seed, 3);
            (sample_c(rate, window, &mut rng), mass)
        }
        SurfaceKind::Wedge | SurfaceKind::Cone => {
            if c_window.is_some() {
                return Err(Error::param(format!(
                    "{kind:?} is a probability law; passing a c window is a mistake"
                )));
            }
            (0.0, 1.0)
        }
    };
    Ok(FieldSample {
        grid: *grid,
        kind,
        params,
        horizontal,
        lateral,
        c_const,
        importance_weight,
    })
}
