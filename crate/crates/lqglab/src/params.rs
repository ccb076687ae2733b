use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Coupling parameters for a weight-`W` surface at coupling constant `gamma`.
///
/// `q = gamma/2 + 2/gamma` is the background charge. Strip surfaces (disks,
/// wedges) are described by `beta = gamma/2 + q - W/gamma`; cylinder surfaces
/// (spheres, cones) by `alpha = q - W/(2*gamma)`. A disk/wedge is "thick"
/// when `W >= gamma^2/2`, equivalently `beta <= q` (nonnegative drift).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LqgParams {
    pub gamma: f64,
    pub q: f64,
    pub w: f64,
    pub beta: f64,
    pub alpha: f64,
    pub thick: bool,
}

/// Fill in the derived parameters for coupling `gamma` and weight `w`.
pub fn derive_params(gamma: f64, w: f64) -> Result<LqgParams> {
    if !(gamma > 0.0 && gamma < 2.0) || !gamma.is_finite() {
        return Err(Error::param(format!("gamma must lie in (0,2), got {gamma}")));
    }
    if !(w > 0.0) || !w.is_finite() {
        return Err(Error::param(format!("weight W must be positive, got {w}")));
    }
    let q = gamma / 2.0 + 2.0 / gamma;
    let beta = gamma / 2.0 + q - w / gamma;
    let alpha = q - w / (2.0 * gamma);
    Ok(LqgParams {
        gamma,
        q,
        w,
        beta,
        alpha,
        thick: w >= gamma * gamma / 2.0,
    })
}

impl LqgParams {
    /// Drift rate `q - beta = W/gamma - gamma/2` of the strip horizontal process.
    pub fn strip_drift(&self) -> f64 {
        self.q - self.beta
    }

    /// Drift rate `q - alpha = W/(2*gamma)` of the cylinder horizontal process.
    pub fn cylinder_drift(&self) -> f64 {
        self.q - self.alpha
    }

    /// Weight above which the disk boundary-length law stops being normalizable.
    pub fn w_length_critical(&self) -> f64 {
        self.gamma * self.q
    }
}
