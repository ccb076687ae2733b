use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Running mean/variance accumulator (Welford). Merging is associative enough
/// for our use as long as merge order is fixed, which `rng::fold_chunks`
/// guarantees.
#[derive(Debug, Clone, Copy, Default)]
pub struct OnlineStats {
    pub n: u64,
    mean: f64,
    m2: f64,
}

impl OnlineStats {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(mut self, other: OnlineStats) -> OnlineStats {
        if other.n == 0 {
            return self;
        }
        if self.n == 0 {
            return other;
        }
        let n = (self.n + other.n) as f64;
        let d = other.mean - self.mean;
        self.mean += d * other.n as f64 / n;
        self.m2 += other.m2 + d * d * self.n as f64 * other.n as f64 / n;
        self.n += other.n;
        self
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.m2 / (self.n as f64 - 1.0)
        }
    }

    pub fn stderr(&self) -> f64 {
        (self.variance() / self.n as f64).sqrt()
    }
}

/// Covariance accumulator for paired samples.
#[derive(Debug, Clone, Copy, Default)]
pub struct OnlineCov {
    pub n: u64,
    mean_x: f64,
    mean_y: f64,
    c2: f64,
}

impl OnlineCov {
    pub fn push(&mut self, x: f64, y: f64) {
        self.n += 1;
        let dx = x - self.mean_x;
        self.mean_x += dx / self.n as f64;
        self.mean_y += (y - self.mean_y) / self.n as f64;
        self.c2 += dx * (y - self.mean_y);
    }

    pub fn merge(mut self, o: OnlineCov) -> OnlineCov {
        if o.n == 0 {
            return self;
        }
        if self.n == 0 {
            return o;
        }
        let n = (self.n + o.n) as f64;
        let dx = o.mean_x - self.mean_x;
        let dy = o.mean_y - self.mean_y;
        self.c2 += o.c2 + dx * dy * self.n as f64 * o.n as f64 / n;
        self.mean_x += dx * o.n as f64 / n;
        self.mean_y += dy * o.n as f64 / n;
        self.n += o.n;
        self
    }

    pub fn covariance(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            self.c2 / (self.n as f64 - 1.0)
        }
    }
}

/// Result of a Kolmogorov-Smirnov comparison.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KsReport {
    pub statistic: f64,
    pub p_value: f64,
    pub n_eff: f64,
}

/// Survival function of the Kolmogorov distribution, Q(lambda) = P(K > lambda).
pub fn kolmogorov_sf(lambda: f64) -> f64 {
    if lambda <= 0.0 {
        return 1.0;
    }
    if lambda < 1.18 {
        // Jacobi-theta form, fast for small lambda.
        let v = std::f64::consts::PI * std::f64::consts::PI / (8.0 * lambda * lambda);
        let sum = (-v).exp() + (-9.0 * v).exp() + (-25.0 * v).exp() + (-49.0 * v).exp();
        1.0 - (2.0 * std::f64::consts::PI).sqrt() / lambda * sum
    } else {
        let mut sum = 0.0;
        for j in 1..=100u32 {
            let term = (-2.0 * (j as f64) * (j as f64) * lambda * lambda).exp();
            let signed = if j % 2 == 1 { term } else { -term };
            sum += signed;
            if term < 1e-16 {
                break;
            }
        }
        (2.0 * sum).clamp(0.0, 1.0)
    }
}

fn ks_p_value(d: f64, n_eff: f64) -> f64 {
    let sq = n_eff.sqrt();
    kolmogorov_sf((sq + 0.12 + 0.11 / sq) * d)
}

/// Effective sample size of a weighted sample: (sum w)^2 / sum(w^2).
pub fn effective_n(weights: &[f64]) -> f64 {
    let s: f64 = weights.iter().sum();
    let s2: f64 = weights.iter().map(|w| w * w).sum();
    if s2 > 0.0 {
        s * s / s2
    } else {
        0.0
    }
}

/// One-sample KS test of a weighted empirical distribution against an
/// analytic CDF. Weights must be nonnegative; requires >= 30 effective samples.
pub fn ks_test_weighted<F: Fn(f64) -> f64>(
    values: &[f64],
    weights: &[f64],
    cdf: F,
) -> Result<KsReport> {
    if values.len() != weights.len() || values.is_empty() {
        return Err(Error::param("values/weights length mismatch or empty"));
    }
    let n_eff = effective_n(weights);
    if n_eff < 30.0 {
        return Err(Error::InsufficientData(format!(
            "KS needs >= 30 effective samples, got {n_eff:.1}"
        )));
    }
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let total: f64 = weights.iter().sum();
    let mut cum = 0.0;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let x = values[idx[i]];
        let before = cum / total;
        // absorb ties
        while i < idx.len() && values[idx[i]] == x {
            cum += weights[idx[i]];
            i += 1;
        }
        let after = cum / total;
        let f = cdf(x);
        d = d.max((f - before).abs()).max((after - f).abs());
    }
    Ok(KsReport {
        statistic: d,
        p_value: ks_p_value(d, n_eff),
        n_eff,
    })
}

/// Two-sample KS test between weighted empirical distributions.
pub fn ks_two_sample_weighted(
    a_values: &[f64],
    a_weights: &[f64],
    b_values: &[f64],
    b_weights: &[f64],
) -> Result<KsReport> {
    if a_values.len() != a_weights.len() || b_values.len() != b_weights.len() {
        return Err(Error::param("values/weights length mismatch"));
    }
    let na = effective_n(a_weights);
    let nb = effective_n(b_weights);
    if na < 30.0 || nb < 30.0 {
        return Err(Error::InsufficientData(format!(
            "KS needs >= 30 effective samples per side, got {na:.1}, {nb:.1}"
        )));
    }
    let mut a: Vec<(f64, f64)> = a_values.iter().copied().zip(a_weights.iter().copied()).collect();
    let mut b: Vec<(f64, f64)> = b_values.iter().copied().zip(b_weights.iter().copied()).collect();
    a.sort_by(|x, y| x.0.total_cmp(&y.0));
    b.sort_by(|x, y| x.0.total_cmp(&y.0));
    let wa: f64 = a.iter().map(|p| p.1).sum();
    let wb: f64 = b.iter().map(|p| p.1).sum();
    let (mut ia, mut ib) = (0usize, 0usize);
    let (mut fa, mut fb) = (0.0f64, 0.0f64);
    let mut d: f64 = 0.0;
    while ia < a.len() || ib < b.len() {
        let xa = a.get(ia).map(|p| p.0).unwrap_or(f64::INFINITY);
        let xb = b.get(ib).map(|p| p.0).unwrap_or(f64::INFINITY);
        let x = xa.min(xb);
        while ia < a.len() && a[ia].0 == x {
            fa += a[ia].1;
            ia += 1;
        }
        while ib < b.len() && b[ib].0 == x {
            fb += b[ib].1;
            ib += 1;
        }
        d = d.max((fa / wa - fb / wb).abs());
    }
    let n_eff = na * nb / (na + nb);
    Ok(KsReport {
        statistic: d,
        p_value: ks_p_value(d, n_eff),
        n_eff,
    })
}

/// Weighted least-squares line fit `y ~ intercept + slope*x`.
/// Returns (intercept, slope, slope standard error).
pub fn weighted_linfit(xs: &[f64], ys: &[f64], ws: &[f64]) -> Result<(f64, f64, f64)> {
    let n = xs.len();
    if n < 3 || ys.len() != n || ws.len() != n {
        return Err(Error::InsufficientData(
            "line fit needs >= 3 points with matching weights".into(),
        ));
    }
    let sw: f64 = ws.iter().sum();
    if sw <= 0.0 {
        return Err(Error::numerical("line fit weights sum to zero"));
    }
    let mx = xs.iter().zip(ws).map(|(x, w)| x * w).sum::<f64>() / sw;
    let my = ys.iter().zip(ws).map(|(y, w)| y * w).sum::<f64>() / sw;
    let sxx: f64 = xs.iter().zip(ws).map(|(x, w)| w * (x - mx) * (x - mx)).sum();
    if sxx <= 0.0 {
        return Err(Error::numerical("degenerate abscissae in line fit"));
    }
    let sxy: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| w * (x - mx) * (y - my))
        .sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs
        .iter()
        .zip(ys)
        .zip(ws)
        .map(|((x, y), w)| {
            let r = y - intercept - slope * x;
            w * r * r
        })
        .sum();
    let dof = (n as f64 - 2.0).max(1.0);
    let se = (rss / dof / sxx).sqrt();
    Ok((intercept, slope, se))
}

/// A fitted power-law tail exponent with a bootstrap standard error.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TailFit {
    pub slope: f64,
    pub stderr: f64,
    pub n_eff_window: f64,
    pub n_bins_used: usize,
}

/// Fit the log-log slope of a weighted empirical *density* over log-spaced
/// bins inside `window = (lo, hi)`. The reported `stderr` is a Poisson
/// bootstrap over bin masses (deterministic given `seed`).
pub fn fit_tail_exponent(
    values: &[f64],
    weights: &[f64],
    window: (f64, f64),
    n_bins: usize,
    seed: u64,
) -> Result<TailFit> {
    let (lo, hi) = window;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::param(format!(
            "tail window must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    if n_bins < 4 {
        return Err(Error::param("tail fit needs at least 4 bins"));
    }
    if values.len() != weights.len() {
        return Err(Error::param("values/weights length mismatch"));
    }
    let log_lo = lo.ln();
    let log_step = (hi / lo).ln() / n_bins as f64;
    let mut mass = vec![0.0f64; n_bins];
    let mut sq_mass = vec![0.0f64; n_bins];
    for (&x, &w) in values.iter().zip(weights) {
        if x >= lo && x < hi {
            let j = (((x.ln() - log_lo) / log_step) as usize).min(n_bins - 1);
            mass[j] += w;
            sq_mass[j] += w * w;
        }
    }
    let window_eff: f64 = {
        let s: f64 = mass.iter().sum();
        let s2: f64 = sq_mass.iter().sum();
        if s2 > 0.0 {
            s * s / s2
        } else {
            0.0
        }
    };
    if window_eff < 1e3 {
        return Err(Error::InsufficientData(format!(
            "tail fit needs >= 1e3 effective samples in window, got {window_eff:.0}"
        )));
    }
    let edges: Vec<f64> = (0..=n_bins)
        .map(|j| (log_lo + j as f64 * log_step).exp())
        .collect();
    let fit_once = |mass: &[f64]| -> Result<f64> {
        let mut xs = Vec::new();
        let mut ys = Vec::new();
        let mut ws = Vec::new();
        for j in 0..n_bins {
            if mass[j] <= 0.0 {
                continue;
            }
            let width = edges[j + 1] - edges[j];
            let mid = (edges[j] * edges[j + 1]).sqrt();
            xs.push(mid.ln());
            ys.push((mass[j] / width).ln());
            // Approximate per-bin effective count for weighting.
            let eff = if sq_mass[j] > 0.0 {
                mass[j] * mass[j] / sq_mass[j]
            } else {
                1.0
            };
            ws.push(eff);
        }
        if xs.len() < 4 {
            return Err(Error::InsufficientData(
                "fewer than 4 nonempty bins in tail window".into(),
            ));
        }
        weighted_linfit(&xs, &ys, &ws).map(|(_, s, _)| s)
    };
    let slope = fit_once(&mass)?;
    // Poisson bootstrap on bin effective counts.
    let mut rng = crate::rng::task_rng(seed, 0x7a11);
    let n_boot = 100;
    let mut boots = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let resampled: Vec<f64> = mass
            .iter()
            .zip(&sq_mass)
            .map(|(&m, &s2)| {
                if m <= 0.0 || s2 <= 0.0 {
                    return 0.0;
                }
                let eff = m * m / s2;
                let scale = m / eff;
                let draw = Poisson::new(eff).map(|p| p.sample(&mut rng)).unwrap_or(eff);
                draw * scale
            })
            .collect();
        if let Ok(s) = fit_once(&resampled) {
            boots.push(s);
        }
    }
    let stderr = if boots.len() >= 10 {
        let m = boots.iter().sum::<f64>() / boots.len() as f64;
        (boots.iter().map(|b| (b - m) * (b - m)).sum::<f64>() / (boots.len() as f64 - 1.0)).sqrt()
    } else {
        f64::NAN
    };
    let n_bins_used = mass.iter().filter(|&&m| m > 0.0).count();
    Ok(TailFit {
        slope,
        stderr,
        n_eff_window: window_eff,
        n_bins_used,
    })
}

/// Chi-square goodness-of-fit p-value for observed vs expected counts.
pub fn chi2_gof_p(observed: &[f64], expected: &[f64]) -> Result<f64> {
    if observed.len() != expected.len() || observed.len() < 2 {
        return Err(Error::param("chi2 needs matching arrays of length >= 2"));
    }
    let mut stat = 0.0;
    let mut dof = 0usize;
    for (&o, &e) in observed.iter().zip(expected) {
        if e <= 0.0 {
            return Err(Error::param("chi2 expected counts must be positive"));
        }
        stat += (o - e) * (o - e) / e;
        dof += 1;
    }
    let dist = ChiSquared::new((dof - 1) as f64)
        .map_err(|e| Error::numerical(format!("chi2 dof: {e}")))?;
    Ok(1.0 - dist.cdf(stat))
}

/// Empirical quantile (linear interpolation) of unweighted data.
pub fn quantile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    let q = q.clamp(0.0, 1.0);
    let pos = q * (sorted.len() as f64 - 1.0);
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] * (1.0 - frac) + sorted[hi] * frac
}

/// Draw one standard normal.
pub fn std_normal<R: Rng>(rng: &mut R) -> f64 {
    rand_distr::StandardNormal.sample(rng)
}
