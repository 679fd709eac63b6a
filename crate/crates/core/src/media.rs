//! Wave-speed fields for the homogeneous and layered heterogeneous media.
//!
//! The heterogeneous profiles are piecewise constant over ten bands with
//! wave speed between 1 and the contrast factor `rho`:
//!
//! * increasing layers: horizontal bands, `c` steps linearly from `rho` in
//!   the top band down to 1 in the bottom band;
//! * alternating layers: horizontal bands alternating `rho` and 1, starting
//!   with `rho` at the top;
//! * diagonal layers: bands of constant `x - y` running from the
//!   bottom-right corner, with the shade sequence
//!   (1.0, 0.6, 1.0, 0.2, 1.0, 0.05, 1.0, 0.4, 1.0, 0.8) mapped so the
//!   darkest shade gives `c = 1` and the lightest `c = rho`.
//!
//! The wave number field is `k(x) = omega / c(x)`, evaluated per element at
//! the centroid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Mesh;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MediumKind {
    Homogeneous,
    IncreasingLayers,
    AlternatingLayers,
    DiagonalLayers,
}

/// Medium description: profile kind, contrast `rho >= 1`, and angular
/// frequency `omega > 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MediumSpec {
    pub kind: MediumKind,
    /// Contrast factor; the wave speed ranges over [1, contrast].
    pub contrast: f64,
    /// Angular frequency.
    pub omega: f64,
}

impl MediumSpec {
    pub fn homogeneous(omega: f64) -> Self {
        Self {
            kind: MediumKind::Homogeneous,
            contrast: 1.0,
            omega,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.contrast >= 1.0) {
            return Err(Error::Config(format!(
                "contrast must be >= 1, got {}",
                self.contrast
            )));
        }
        if !(self.omega > 0.0) {
            return Err(Error::Config(format!(
                "angular frequency must be positive, got {}",
                self.omega
            )));
        }
        Ok(())
    }
}

/// Diagonal-band opacities, listed from the bottom-right corner
/// (`x - y = 1`) to the top-left corner (`x - y = -1`).
const DIAGONAL_SHADES: [f64; 10] = [1.0, 0.6, 1.0, 0.2, 1.0, 0.05, 1.0, 0.4, 1.0, 0.8];

/// Map a shade to a wave speed: the darkest (opacity 1) gives `c = 1`, the
/// lightest (opacity 0.05) gives `c = rho`.
fn shade_to_speed(opacity: f64, rho: f64) -> f64 {
    let lightest = DIAGONAL_SHADES.iter().copied().fold(f64::MAX, f64::min);
    1.0 + (1.0 - opacity) / (1.0 - lightest) * (rho - 1.0)
}

/// Wave speed at a point of the closed unit square.
pub fn wave_speed(spec: &MediumSpec, point: (f64, f64)) -> Result<f64> {
    let (x, y) = point;
    if !(0.0..=1.0).contains(&x) || !(0.0..=1.0).contains(&y) {
        return Err(Error::PointOutsideDomain(x, y));
    }
    let rho = spec.contrast;
    Ok(match spec.kind {
        MediumKind::Homogeneous => 1.0,
        MediumKind::IncreasingLayers => {
            // band 0 at the top (lightest, c = rho), band 9 at the bottom
            let band = ((10.0 * (1.0 - y)).floor() as i64).clamp(0, 9) as usize;
            rho - band as f64 * (rho - 1.0) / 9.0
        }
        MediumKind::AlternatingLayers => {
            let band = ((10.0 * (1.0 - y)).floor() as i64).clamp(0, 9) as usize;
            if band % 2 == 0 {
                rho
            } else {
                1.0
            }
        }
        MediumKind::DiagonalLayers => {
            // bands of constant x - y, width 0.2, starting at the
            // bottom-right corner where x - y = 1
            let band = ((5.0 * (1.0 - (x - y))).floor() as i64).clamp(0, 9) as usize;
            shade_to_speed(DIAGONAL_SHADES[band], rho)
        }
    })
}

/// Per-element wave number `k_e = omega / c(centroid)`.
pub fn wavenumber_field(spec: &MediumSpec, mesh: &Mesh) -> Result<Vec<f64>> {
    (0..mesh.n_triangles())
        .map(|t| {
            let c = wave_speed(spec, mesh.centroid(t))?;
            Ok(spec.omega / c)
        })
        .collect()
}
