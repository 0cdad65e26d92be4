//! Activity-scaled Gaussian linking measure.
//!
//! Every mother cell spreads an unnormalized isotropic Gaussian around its
//! centroid whose width grows with the cell's activity. The linking loss of a
//! mother/daughter pair is the negated Gaussian evaluated at the daughter's
//! centroid; values below a fixed cutoff are treated as "no link".

use std::cmp::Ordering;

use crate::error::{Error, Result};
use crate::model::{CellInstance, Point};
use crate::scalar::Real;

pub const DEFAULT_K: f64 = 2.5;
pub const DEFAULT_G_CUTOFF: f64 = 0.01;
pub const DEFAULT_SIGMA_FLOOR: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkConfig<T> {
    /// Activity-to-width divisor: `sigma = activity / k`.
    pub k: T,
    pub g_cutoff: T,
    /// Lower bound on sigma in pixels, so idle cells can still match their
    /// unmoved successor.
    pub sigma_floor: T,
}

impl<T: Real> Default for LinkConfig<T> {
    fn default() -> Self {
        Self {
            k: T::from_f64_lossy(DEFAULT_K),
            g_cutoff: T::from_f64_lossy(DEFAULT_G_CUTOFF),
            sigma_floor: T::from_f64_lossy(DEFAULT_SIGMA_FLOOR),
        }
    }
}

impl<T: Real> LinkConfig<T> {
    pub fn new(k: T, g_cutoff: T, sigma_floor: T) -> Result<Self> {
        let cfg = Self {
            k,
            g_cutoff,
            sigma_floor,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.k > T::zero() && self.k.is_finite()) {
            return Err(Error::InvalidParameter(format!("k must be positive, got {}", self.k)));
        }
        if !(self.g_cutoff > T::zero() && self.g_cutoff < T::one()) {
            return Err(Error::InvalidParameter(format!(
                "g-cutoff must lie in (0, 1), got {}",
                self.g_cutoff
            )));
        }
        if !(self.sigma_floor > T::zero() && self.sigma_floor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "sigma-floor must be positive, got {}",
                self.sigma_floor
            )));
        }
        Ok(())
    }

    /// `true` when `g` clears the (inclusive) cutoff. Values within a
    /// relative `sqrt(eps)` below it still count, so a daughter placed at
    /// exactly [`cutoff_radius`](Self::cutoff_radius) survives rounding in
    /// its centroid.
    pub fn admits(&self, g: T) -> bool {
        let slack = self.g_cutoff * T::epsilon().sqrt();
        g >= self.g_cutoff - slack
    }

    /// Distance from a mother's centroid at which its Gaussian hits the cutoff.
    pub fn cutoff_radius(&self, sigma: T) -> T {
        sigma * (T::from_f64_lossy(2.0) * (T::one() / self.g_cutoff).ln()).sqrt()
    }
}

pub fn sigma_of<T: Real>(activity: T, config: &LinkConfig<T>) -> T {
    (activity / config.k).max(config.sigma_floor)
}

/// Unnormalized 2-D Gaussian: 1 at `center`, decaying with distance.
pub fn gaussian_value<T: Real>(center: Point<T>, sigma: T, point: Point<T>) -> T {
    let two = T::from_f64_lossy(2.0);
    (-center.distance_squared(&point) / (two * sigma * sigma)).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkCandidate<T> {
    pub mother_label: u32,
    pub daughter_label: u32,
    pub g_value: T,
    /// Always `-g_value`.
    pub loss: T,
}

/// Gaussian value of `mother` at `daughter`, or `None` below the cutoff.
pub fn link_gain<T: Real>(mother: &CellInstance<T>, daughter: &CellInstance<T>, config: &LinkConfig<T>) -> Option<T> {
    let sigma = sigma_of(mother.activity, config);
    let g = gaussian_value(mother.centroid, sigma, daughter.centroid);
    config.admits(g).then_some(g)
}

/// Admissible daughters of `mother`, best (lowest loss) first; ties by
/// daughter label.
pub fn candidates_for<T: Real>(
    mother: &CellInstance<T>,
    daughters: &[CellInstance<T>],
    config: &LinkConfig<T>,
) -> Vec<LinkCandidate<T>> {
    let mut out: Vec<_> = daughters
        .iter()
        .filter_map(|d| {
            link_gain(mother, d, config).map(|g| LinkCandidate {
                mother_label: mother.label,
                daughter_label: d.label,
                g_value: g,
                loss: -g,
            })
        })
        .collect();
    out.sort_by(|a, b| {
        a.loss
            .partial_cmp(&b.loss)
            .unwrap_or(Ordering::Equal)
            .then(a.daughter_label.cmp(&b.daughter_label))
    });
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn cell(label: u32, x: f64, y: f64, activity: f64) -> CellInstance<f64> {
        CellInstance {
            frame: 1,
            label,
            centroid: Point::new(x, y),
            area: 10,
            activity,
        }
    }

    #[test]
    fn sigma_examples() {
        let cfg = LinkConfig::<f64>::default();
        assert_eq!(sigma_of(5.0, &cfg), 2.0);
        assert_eq!(sigma_of(0.0, &cfg), 0.5);
        assert_eq!(sigma_of(1.0, &cfg), 0.5);
    }

    #[test]
    fn gaussian_examples() {
        let c = Point::new(0.0, 0.0);
        assert_eq!(gaussian_value(c, 1.0, c), 1.0);
        assert_relative_eq!(gaussian_value(c, 1.0, Point::new(1.0, 0.0)), (-0.5f64).exp());
        let sigma = 3.0;
        let d = sigma * (2.0 * 100f64.ln()).sqrt();
        assert_relative_eq!(gaussian_value(c, sigma, Point::new(d, 0.0)), 0.01, max_relative = 1e-12);
    }

    #[test]
    fn peak_candidate_has_loss_minus_one() {
        let cfg = LinkConfig::default();
        let m = cell(1, 4.0, 4.0, 0.0);
        let got = candidates_for(&m, &[cell(9, 4.0, 4.0, 0.0)], &cfg);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].loss, -1.0);
        assert_eq!(got[0].daughter_label, 9);
    }

    #[test]
    fn far_daughters_pruned() {
        let cfg = LinkConfig::default();
        let m = cell(1, 0.0, 0.0, 5.0); // sigma 2
        let r = cfg.cutoff_radius(2.0);
        let ds = [cell(2, r * 1.01, 0.0, 0.0), cell(3, 0.0, -r * 1.5, 0.0)];
        assert!(candidates_for(&m, &ds, &cfg).is_empty());
    }

    #[test]
    fn ties_break_by_label() {
        let cfg = LinkConfig::default();
        let m = cell(1, 0.0, 0.0, 5.0);
        let ds = [cell(8, 1.0, 0.0, 0.0), cell(3, -1.0, 0.0, 0.0), cell(5, 0.0, 0.5, 0.0)];
        let order: Vec<_> = candidates_for(&m, &ds, &cfg).iter().map(|c| c.daughter_label).collect();
        assert_eq!(order, vec![5, 3, 8]);
    }

    #[test]
    fn config_validation() {
        assert!(LinkConfig::new(0.0, 0.01, 0.5).is_err());
        assert!(LinkConfig::new(2.5, 1.0, 0.5).is_err());
        assert!(LinkConfig::new(2.5, 0.01, 0.0).is_err());
        assert!(LinkConfig::new(2.5f32, 0.01, 0.5).is_ok());
    }
}
