//! Disk samples conditioned on both boundary arc lengths.
//!
//! A thick-disk field is drawn from the `c`-window `(-zeta, inf)`; writing
//! `nu` for its boundary length measures, the sample is rejected unless
//! `d1 = ell1 - nu_lower(outside [0,1])` and `d2 = ell2 - nu_upper(outside
//! [0,1])` are both positive. Two fixed smooth bumps `f1` (supported in
//! `[0,1] x [0, pi/2]`, positive on the lower boundary segment) and `f2`
//! (its mirror at the upper boundary) are then scaled by coefficients
//! `alpha1, alpha2` chosen so the `[0,1]` arc masses become exactly `d1` and
//! `d2`; the map `alpha -> mass` is strictly increasing, so each coefficient
//! is a unique root. The sample is weighted by
//! `phi(alpha1) phi(alpha2) / (J1 J2)` — the Gaussian density of the forced
//! coefficients over the Jacobians `J_i = d(mass)/d(alpha_i)` — times the
//! `c`-window mass, making weighted statistics estimate the two-length
//! disintegration of the disk measure.

use crate::error::{Error, Result};
use crate::gmc::boundary_measure;
use crate::grid::GridSpec;
use crate::horizontal::SurfaceKind;
use crate::params::derive_params;
use crate::quad;
use crate::rng::task_rng;
use crate::surface::{sample_surface, BoundarySide, FieldSample};
use rand::Rng;
use std::f64::consts::PI;

/// Horizontal bump profile `s(x) = x^2 (1-x)^2` on `(0,1)`.
fn s_profile(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    let v = x * (1.0 - x);
    v * v
}

fn s_profile_deriv(x: f64) -> f64 {
    if x <= 0.0 || x >= 1.0 {
        return 0.0;
    }
    2.0 * x * (1.0 - x) * (1.0 - 2.0 * x)
}

/// Vertical profile `q(y) = (1 - 2y/pi)^2` on `[0, pi/2]`, zero above; `q`
/// and `q'` both vanish at `pi/2`, so the product bump is C^1.
fn q_profile(y: f64) -> f64 {
    if !(0.0..PI / 2.0).contains(&y) {
        return 0.0;
    }
    let v = 1.0 - 2.0 * y / PI;
    v * v
}

fn q_profile_deriv(y: f64) -> f64 {
    if !(0.0..PI / 2.0).contains(&y) {
        return 0.0;
    }
    -(4.0 / PI) * (1.0 - 2.0 * y / PI)
}

/// Grid-ready data for the two conditioning bumps, Dirichlet-normalized.
#[derive(Debug, Clone)]
pub struct BumpPair {
    /// Cell-averaged lower-boundary trace of the normalized `f1`.
    pub trace1: Vec<f64>,
    /// Cell-averaged upper-boundary trace of the normalized `f2`.
    pub trace2: Vec<f64>,
    /// Bulk cell averages of normalized `f1` and `f2`.
    pub cells1: Vec<Vec<f64>>,
    pub cells2: Vec<Vec<f64>>,
    /// Fraction of each x-cell covered by `[0, 1]`.
    pub frac: Vec<f64>,
}

/// Build the bump pair for a strip grid. The normalization makes each bump's
/// Dirichlet energy `(1/2pi) int |grad f|^2` equal to 1, evaluated by
/// numerical quadrature.
pub fn bump_pair(grid: &GridSpec) -> Result<BumpPair> {
    let tol = 1e-12;
    let i_s2 = quad::integrate(&|x| s_profile(x).powi(2), 0.0, 1.0, tol)?;
    let i_ds2 = quad::integrate(&|x| s_profile_deriv(x).powi(2), 0.0, 1.0, tol)?;
    let i_q2 = quad::integrate(&|y| q_profile(y).powi(2), 0.0, PI / 2.0, tol)?;
    let i_dq2 = quad::integrate(&|y| q_profile_deriv(y).powi(2), 0.0, PI / 2.0, tol)?;
    let norm = ((i_ds2 * i_q2 + i_s2 * i_dq2) / (2.0 * PI)).sqrt();

    let dx = grid.dt;
    let dy = grid.dy(PI);
    let mut sx = Vec::with_capacity(grid.nx);
    let mut frac = Vec::with_capacity(grid.nx);
    for ix in 0..grid.nx {
        let l = grid.x_left(ix);
        let r = l + dx;
        let a = l.max(0.0);
        let b = r.min(1.0);
        if b > a {
            sx.push(quad::integrate(&s_profile, a, b, tol)? / dx);
            frac.push((b - a) / dx);
        } else {
            sx.push(0.0);
            frac.push(0.0);
        }
    }
    let mut qy1 = Vec::with_capacity(grid.ny);
    let mut qy2 = Vec::with_capacity(grid.ny);
    for iy in 0..grid.ny {
        let b0 = iy as f64 * dy;
        let b1 = b0 + dy;
        let (a, b) = (b0, b1.min(PI / 2.0));
        qy1.push(if b > a {
            quad::integrate(&q_profile, a, b, tol)? / dy
        } else {
            0.0
        });
        // f2's vertical profile is q(pi - y), supported in [pi/2, pi]
        let (a2, b2) = (b0.max(PI / 2.0), b1);
        qy2.push(if b2 > a2 {
            quad::integrate(&|y| q_profile(PI - y), a2, b2, tol)? / dy
        } else {
            0.0
        });
    }
    let cells = |qy: &[f64]| -> Vec<Vec<f64>> {
        sx.iter()
            .map(|&s| qy.iter().map(|&q| s * q / norm).collect())
            .collect()
    };
    Ok(BumpPair {
        trace1: sx.iter().map(|&s| s * q_profile(0.0) / norm).collect(),
        trace2: sx.iter().map(|&s| s * q_profile(0.0) / norm).collect(),
        cells1: cells(&qy1),
        cells2: cells(&qy2),
        frac,
    })
}

/// `[0,1]`-arc mass after adding `alpha` times the bump trace to the field
/// behind `base_masses`.
fn arc_mass_with_bump(
    gamma: f64,
    base_masses: &[f64],
    frac: &[f64],
    trace: &[f64],
    alpha: f64,
) -> f64 {
    let mut m = 0.0;
    for ((&mass, &fr), &t) in base_masses.iter().zip(frac).zip(trace) {
        if fr > 0.0 {
            m += mass * fr * (0.5 * gamma * alpha * t).exp();
        }
    }
    m
}

/// Jacobian `d(arc mass)/d(alpha)` at `alpha`.
fn arc_mass_jacobian(
    gamma: f64,
    base_masses: &[f64],
    frac: &[f64],
    trace: &[f64],
    alpha: f64,
) -> f64 {
    let mut j = 0.0;
    for ((&mass, &fr), &t) in base_masses.iter().zip(frac).zip(trace) {
        if fr > 0.0 {
            j += 0.5 * gamma * t * mass * fr * (0.5 * gamma * alpha * t).exp();
        }
    }
    j
}

/// Solve `arc_mass_with_bump(alpha) = target` for the unique root; the map
/// is strictly increasing because the bump trace is positive on `(0,1)`.
fn solve_bump_coefficient(
    gamma: f64,
    base_masses: &[f64],
    frac: &[f64],
    trace: &[f64],
    target: f64,
) -> Result<f64> {
    let g = |alpha: f64| arc_mass_with_bump(gamma, base_masses, frac, trace, alpha) - target;
    let (mut lo, mut hi) = (-1.0, 1.0);
    let mut widen = 0;
    while g(lo) > 0.0 {
        lo *= 2.0;
        widen += 1;
        if widen > 60 {
            return Err(Error::numerical(format!(
                "bump coefficient not bracketed below: mass({lo}) still above {target}"
            )));
        }
    }
    while g(hi) < 0.0 {
        hi *= 2.0;
        widen += 1;
        if widen > 120 {
            return Err(Error::numerical(format!(
                "bump coefficient not bracketed above: mass({hi}) still below {target}"
            )));
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let v = g(mid);
        if v.abs() <= 1e-13 * target {
            return Ok(mid);
        }
        if v < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-15 * (1.0 + mid.abs()) {
            return Ok(mid);
        }
    }
    Ok(0.5 * (lo + hi))
}

/// A two-length conditioned disk sample: the adjusted field, the forced bump
/// coefficients, and how many windowed proposals were consumed.
#[derive(Debug, Clone)]
pub struct TwoLengthSample {
    pub field: FieldSample,
    pub alpha1: f64,
    pub alpha2: f64,
    pub attempts: u32,
}

/// Sample a thick disk conditioned to have lower arc `[0,1]` length `ell1`
/// and upper arc length `ell2`, by rejection plus two monotone root solves.
/// The result's `importance_weight` folds in the `c`-window mass and the
/// coefficient densities over the mass Jacobians.
pub fn sample_disk_two_lengths(
    gamma: f64,
    w: f64,
    ell1: f64,
    ell2: f64,
    zeta: f64,
    grid: &GridSpec,
    seed: u64,
) -> Result<TwoLengthSample> {
    derive_params(gamma, w)?;
    if w <= gamma * gamma / 2.0 {
        return Err(Error::param(format!(
            "two-length conditioning needs W > gamma^2/2, got W = {w} at gamma = {gamma}"
        )));
    }
    if !(ell1 > 0.0 && ell2 > 0.0) {
        return Err(Error::param(format!(
            "arc lengths must be positive, got ({ell1}, {ell2})"
        )));
    }
    if !(zeta > 0.0) {
        return Err(Error::param(format!("zeta must be positive, got {zeta}")));
    }
    if grid.t_cut <= 1.0 {
        return Err(Error::param(format!(
            "grid must contain the unit arc [0,1]: t_cut = {} <= 1",
            grid.t_cut
        )));
    }
    let bumps = bump_pair(grid)?;
    let mut seeder = task_rng(seed, 0x7417);
    const MAX_ATTEMPTS: u32 = 100_000;
    for attempt in 1..=MAX_ATTEMPTS {
        let sub_seed: u64 = seeder.gen();
        let field = sample_surface(
            SurfaceKind::ThickDisk,
            gamma,
            w,
            grid,
            Some((-zeta, f64::INFINITY)),
            sub_seed,
        )?;
        let lower = boundary_measure(&field, BoundarySide::Lower)?;
        let upper = boundary_measure(&field, BoundarySide::Upper)?;
        let inside = |m: &crate::gmc::BoundaryMeasure| {
            m.cell_masses
                .iter()
                .zip(&bumps.frac)
                .map(|(&mass, &fr)| mass * fr)
                .sum::<f64>()
        };
        let d1 = ell1 - (lower.total - inside(&lower));
        let d2 = ell2 - (upper.total - inside(&upper));
        if d1 <= 0.0 || d2 <= 0.0 {
            continue;
        }
        let alpha1 =
            solve_bump_coefficient(gamma, &lower.cell_masses, &bumps.frac, &bumps.trace1, d1)?;
        let alpha2 =
            solve_bump_coefficient(gamma, &upper.cell_masses, &bumps.frac, &bumps.trace2, d2)?;
        let j1 = arc_mass_jacobian(gamma, &lower.cell_masses, &bumps.frac, &bumps.trace1, alpha1);
        let j2 = arc_mass_jacobian(gamma, &upper.cell_masses, &bumps.frac, &bumps.trace2, alpha2);
        let phi = |a: f64| (-0.5 * a * a).exp() / (2.0 * PI).sqrt();

        let mut out = field;
        for ix in 0..grid.nx {
            for iy in 0..grid.ny {
                out.lateral.cells[ix][iy] +=
                    alpha1 * bumps.cells1[ix][iy] + alpha2 * bumps.cells2[ix][iy];
            }
        }
        if let Some(tr) = out.lateral.lower_trace.as_mut() {
            for (t, &b) in tr.iter_mut().zip(&bumps.trace1) {
                *t += alpha1 * b;
            }
        }
        if let Some(tr) = out.lateral.upper_trace.as_mut() {
            for (t, &b) in tr.iter_mut().zip(&bumps.trace2) {
                *t += alpha2 * b;
            }
        }
        out.importance_weight *= phi(alpha1) * phi(alpha2) / (j1 * j2);
        return Ok(TwoLengthSample {
            field: out,
            alpha1,
            alpha2,
            attempts: attempt,
        });
    }
    Err(Error::numerical(format!(
        "two-length rejection failed to accept in {MAX_ATTEMPTS} attempts; \
         the requested arcs ({ell1}, {ell2}) are far below the typical outside mass"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gmc::arc_length;
    use crate::stats::OnlineStats;
    use approx::assert_relative_eq;
    use std::f64::consts::SQRT_2;

    fn test_grid() -> GridSpec {
        GridSpec::new(2.0, 64, 8).unwrap()
    }

    #[test]
    fn bump_mass_is_strictly_increasing_in_alpha() {
        let grid = test_grid();
        let bumps = bump_pair(&grid).unwrap();
        let field =
            sample_surface(SurfaceKind::ThickDisk, SQRT_2, 2.0, &grid, Some((-1.0, f64::INFINITY)), 1)
                .unwrap();
        let lower = boundary_measure(&field, BoundarySide::Lower).unwrap();
        let mut prev = 0.0;
        for i in 0..20 {
            let alpha = -5.0 + i as f64 * 0.5;
            let m = arc_mass_with_bump(SQRT_2, &lower.cell_masses, &bumps.frac, &bumps.trace1, alpha);
            assert!(m > prev, "mass must increase with alpha");
            prev = m;
        }
    }

    #[test]
    fn conditioned_sample_hits_requested_arc_lengths() {
        let grid = test_grid();
        let (ell1, ell2) = (0.6, 0.45);
        let s = sample_disk_two_lengths(SQRT_2, 2.0, ell1, ell2, 1.0, &grid, 12).unwrap();
        let lower = boundary_measure(&s.field, BoundarySide::Lower).unwrap();
        let upper = boundary_measure(&s.field, BoundarySide::Upper).unwrap();
        assert_relative_eq!(lower.total, ell1, max_relative = 1e-6);
        assert_relative_eq!(upper.total, ell2, max_relative = 1e-6);
        assert!(s.field.importance_weight > 0.0 && s.field.importance_weight.is_finite());
        assert!(s.attempts >= 1);
    }

    #[test]
    fn deterministic_in_seed() {
        let grid = test_grid();
        let a = sample_disk_two_lengths(SQRT_2, 2.0, 0.6, 0.45, 1.0, &grid, 3).unwrap();
        let b = sample_disk_two_lengths(SQRT_2, 2.0, 0.6, 0.45, 1.0, &grid, 3).unwrap();
        assert_eq!(a.field, b.field);
        assert_eq!(a.attempts, b.attempts);
        assert_eq!(a.alpha1, b.alpha1);
    }

    #[test]
    fn rejects_bad_parameters() {
        let grid = test_grid();
        assert!(sample_disk_two_lengths(SQRT_2, 0.9, 0.6, 0.45, 1.0, &grid, 1).is_err());
        assert!(sample_disk_two_lengths(SQRT_2, 2.0, -0.6, 0.45, 1.0, &grid, 1).is_err());
        assert!(sample_disk_two_lengths(SQRT_2, 2.0, 0.6, 0.45, 0.0, &grid, 1).is_err());
        let small = GridSpec::new(0.9, 16, 8).unwrap();
        assert!(sample_disk_two_lengths(SQRT_2, 2.0, 0.6, 0.45, 1.0, &small, 1).is_err());
    }

    #[test]
    fn bumps_are_supported_on_the_unit_arc_and_its_half_strip() {
        let grid = test_grid();
        let bumps = bump_pair(&grid).unwrap();
        for ix in 0..grid.nx {
            let l = grid.x_left(ix);
            let outside = l + grid.dt <= 0.0 || l >= 1.0;
            if outside {
                assert_eq!(bumps.trace1[ix], 0.0);
                assert_eq!(bumps.frac[ix], 0.0);
                assert!(bumps.cells1[ix].iter().all(|&v| v == 0.0));
            } else {
                assert!(bumps.trace1[ix] > 0.0);
            }
            // f1 lives below mid-height, f2 above
            for iy in 0..grid.ny {
                if iy < grid.ny / 2 {
                    assert_eq!(bumps.cells2[ix][iy], 0.0);
                } else {
                    assert_eq!(bumps.cells1[ix][iy], 0.0);
                }
            }
        }
        // the forced arc is the remainder after the untouched outside mass
        let s = sample_disk_two_lengths(SQRT_2, 2.0, 0.6, 0.45, 1.0, &grid, 21).unwrap();
        let lower = boundary_measure(&s.field, BoundarySide::Lower).unwrap();
        let outside = arc_length(&lower, (-2.0, 0.0)) + arc_length(&lower, (1.0, 2.0));
        assert_relative_eq!(
            arc_length(&lower, (0.0, 1.0)),
            0.6 - outside,
            max_relative = 1e-6
        );
    }

    #[test]
    fn weighted_density_matches_unconditioned_binning() {
        // Oracle: the mean importance weight of the conditioned sampler at
        // (l1, l2) estimates the joint length density up to one global
        // constant; binned unconditioned windowed samples estimate the same
        // density with the window mass as their (identical) weight. The
        // ratio of the two estimates must be flat across bins.
        let grid = GridSpec::new(2.0, 32, 8).unwrap();
        let (gamma, w, zeta) = (SQRT_2, 2.0, 1.0);
        let bins: [(f64, f64); 3] = [(0.35, 0.35), (0.6, 0.35), (0.35, 0.6)];
        let half = 0.075;

        let mut hist = [0usize; 3];
        let n_free = 30_000u64;
        for seed in 0..n_free {
            let f = sample_surface(
                SurfaceKind::ThickDisk,
                gamma,
                w,
                &grid,
                Some((-zeta, f64::INFINITY)),
                seed,
            )
            .unwrap();
            let l1 = boundary_measure(&f, BoundarySide::Lower).unwrap().total;
            let l2 = boundary_measure(&f, BoundarySide::Upper).unwrap().total;
            for (i, &(c1, c2)) in bins.iter().enumerate() {
                if (l1 - c1).abs() <= half && (l2 - c2).abs() <= half {
                    hist[i] += 1;
                }
            }
        }

        let mut ratios = Vec::new();
        for (i, &(c1, c2)) in bins.iter().enumerate() {
            assert!(hist[i] >= 50, "unconditioned bin {i} too empty: {}", hist[i]);
            let mut stats = OnlineStats::default();
            let mut attempts_budget = 0u32;
            for k in 0..400u64 {
                let s = sample_disk_two_lengths(
                    gamma,
                    w,
                    c1,
                    c2,
                    zeta,
                    &grid,
                    0xb1b0 + 1000 * i as u64 + k,
                )
                .unwrap();
                attempts_budget += s.attempts;
                stats.push(s.field.importance_weight);
            }
            assert!(attempts_budget > 0);
            let density_conditioned = stats.mean();
            let density_free = hist[i] as f64 / (n_free as f64 * (2.0 * half) * (2.0 * half));
            let se_rel = stats.stderr() / stats.mean()
                + (hist[i] as f64).sqrt() / hist[i] as f64;
            ratios.push((density_free / density_conditioned, se_rel));
        }
        // all pairwise ratios-of-ratios consistent with 1 within 4 combined
        // relative errors
        for i in 0..ratios.len() {
            for j in i + 1..ratios.len() {
                let (ri, ei) = ratios[i];
                let (rj, ej) = ratios[j];
                let rel = (ri / rj - 1.0).abs();
                assert!(
                    rel < 4.0 * (ei + ej),
                    "bins {i} and {j} disagree: ratios {ri:.4} vs {rj:.4} (rel {rel:.3}, budget {:.3})",
                    4.0 * (ei + ej)
                );
            }
        }
    }
}
