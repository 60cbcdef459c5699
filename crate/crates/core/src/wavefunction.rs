//! Complex amplitude fields on a periodic lattice.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::Lattice;

/// Exponential-profile metadata for an initial state: the certified bound
/// `sup_x exp(mu |x|) |psi(x)| <= a_mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpProfile {
    pub mu: f64,
    pub a_mu: f64,
}

/// A complex amplitude field on a lattice, optionally carrying an
/// exponential-profile certificate.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveFunction {
    lattice: Lattice,
    amp: Vec<C64>,
    profile: Option<ExpProfile>,
}

impl WaveFunction {
    /// Wrap raw amplitudes. When a profile is supplied, the bound
    /// `exp(mu |x|) |psi(x)| <= a_mu` is verified on the stored data.
    pub fn from_amplitudes(lattice: Lattice, amp: Vec<C64>, profile: Option<ExpProfile>) -> Result<Self> {
        if amp.len() != lattice.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} amplitudes for a lattice of {} sites",
                amp.len(),
                lattice.len()
            )));
        }
        if let Some(p) = profile {
            if !(p.mu > 0.0) || !(p.a_mu > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "exponential profile requires mu > 0 and a_mu > 0, got mu={}, a_mu={}",
                    p.mu, p.a_mu
                )));
            }
            if p.mu.is_finite() {
                for (i, a) in amp.iter().enumerate() {
                    let w = (p.mu * lattice.min_image_norm(i)).exp() * a.norm();
                    if w > p.a_mu * (1.0 + 1e-12) {
                        return Err(Error::InvalidParameter(format!(
                            "stored amplitudes violate the exponential profile at site {i}: \
                             exp(mu|x|)|psi| = {w} > a_mu = {}",
                            p.a_mu
                        )));
                    }
                }
            }
        }
        Ok(WaveFunction { lattice, amp, profile })
    }

    /// Point mass at `coord`. A delta is exponentially bounded for every
    /// weight, so it carries `mu = infinity, a_mu = |amplitude| = 1`.
    pub fn delta(lattice: Lattice, coord: &[i64]) -> Result<Self> {
        if coord.len() != lattice.dim() {
            return Err(Error::DimensionMismatch(format!(
                "coordinate {coord:?} for a {}-dimensional lattice",
                lattice.dim()
            )));
        }
        let mut amp = vec![C64::new(0.0, 0.0); lattice.len()];
        amp[lattice.index(coord)] = C64::new(1.0, 0.0);
        Ok(WaveFunction {
            lattice,
            amp,
            profile: Some(ExpProfile { mu: f64::INFINITY, a_mu: 1.0 }),
        })
    }

    /// The profile state `psi(x) = a_mu exp(-mu |x|)` (minimal-image `|x|`),
    /// which saturates its own certificate at the origin.
    pub fn exponential(lattice: Lattice, mu: f64, a_mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!("mu must be positive and finite, got {mu}")));
        }
        let amp: Vec<C64> = (0..lattice.len())
            .map(|i| C64::new(a_mu * (-mu * lattice.min_image_norm(i)).exp(), 0.0))
            .collect();
        WaveFunction::from_amplitudes(lattice, amp, Some(ExpProfile { mu, a_mu }))
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn amplitudes(&self) -> &[C64] {
        &self.amp
    }

    pub fn profile(&self) -> Option<ExpProfile> {
        self.profile
    }

    pub fn norm_sq(&self) -> f64 {
        self.amp.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    pub(crate) fn with_amplitudes(&self, amp: Vec<C64>) -> WaveFunction {
        WaveFunction { lattice: self.lattice.clone(), amp, profile: None }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn delta_has_unit_norm() {
        let lat = Lattice::line(8).unwrap();
        let psi = WaveFunction::delta(lat, &[0]).unwrap();
        assert_eq!(psi.norm_sq(), 1.0);
        assert!(psi.profile().unwrap().mu.is_infinite());
    }

    #[test]
    fn exponential_profile_saturates_certificate() {
        let lat = Lattice::line(32).unwrap();
        let psi = WaveFunction::exponential(lat, 0.4, 1.0).unwrap();
        let p = psi.profile().unwrap();
        let sup = psi
            .amplitudes()
            .iter()
            .enumerate()
            .map(|(i, a)| (p.mu * psi.lattice().min_image_norm(i)).exp() * a.norm())
            .fold(0.0f64, f64::max);
        assert!((sup - p.a_mu).abs() < 1e-12);
    }

    #[test]
    fn profile_violation_rejected() {
        let lat = Lattice::line(8).unwrap();
        let mut amp = vec![C64::new(0.0, 0.0); 8];
        amp[4] = C64::new(1.0, 0.0);
        let r = WaveFunction::from_amplitudes(lat, amp, Some(ExpProfile { mu: 0.5, a_mu: 1.0 }));
        assert!(r.is_err());
    }

    #[test]
    fn amplitude_count_must_match() {
        let lat = Lattice::line(8).unwrap();
        assert!(WaveFunction::from_amplitudes(lat, vec![C64::new(1.0, 0.0); 7], None).is_err());
    }
}
