//! Large-bandwidth behaviour of Gaussian CKA.
//!
//! A sweep evaluates Gaussian CKA over a grid of `log2(sigma)` values and
//! compares it with linear CKA through the base-2 log of the relative
//! difference. Centered Gaussian CKA approaches linear CKA like `1/sigma^2`,
//! so in the tail that curve is a line of slope -2. From the curve we extract
//! the fitted tail slope and the convergence onset: the smallest grid
//! bandwidth from which the curve stays within a threshold of the `1/sigma^2`
//! asymptote extrapolated back from the largest bandwidth.

use serde::{Deserialize, Serialize};

use crate::alignment::cka_with;
use crate::error::{Error, Result};
use crate::exec::{try_map_range, Execution};
use crate::kernels::{
    gaussian_gram, gram_with, pairwise_distances_with, Centering, DistanceMatrix, Kernel, KernelSpec,
    MedianConvention,
};
use crate::matrix::FeatureMatrix;
use crate::numeric::ols_slope;

/// Differences below `PRECISION_FLOOR * cka_linear` are roundoff.
pub const PRECISION_FLOOR: f64 = 1e-13;
/// Linear CKA at or below this makes the relative difference undefined.
pub const ZERO_LINEAR_CKA: f64 = 1e-12;
pub const DEFAULT_THRESHOLD: f64 = 0.25;
pub const DEFAULT_TAIL_POINTS: usize = 4;

/// `lo, lo + step, ..., hi` (inclusive, up to rounding of the step count).
pub fn log2_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0 && lo.is_finite() && hi.is_finite() && hi >= lo) {
        return Err(Error::InvalidConfig(format!("bad grid {lo}:{hi}:{step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| lo + k as f64 * step).collect())
}

/// How the two Gram matrices depend on the swept bandwidth.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum Arrangement {
    /// Both Gaussian with equal bandwidth; reference is linear vs linear.
    BothGaussian,
    /// X Gaussian at `sigma`, Y Gaussian at `ratio * sigma` (`ratio >= 1`);
    /// reference is linear vs linear.
    MixedBandwidth { ratio: f64 },
    /// X Gaussian at `sigma`, Y under a fixed kernel; reference is linear
    /// vs that kernel.
    GaussianVsFixed { kernel: Kernel },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub log2_sigma_grid: Vec<f64>,
    pub centering: Centering,
    pub arrangement: Arrangement,
    pub median: MedianConvention,
    pub tail_points: usize,
    pub threshold: f64,
    #[serde(skip, default)]
    pub execution: Execution,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            log2_sigma_grid: (-4..=8).map(f64::from).collect(),
            centering: Centering::Column,
            arrangement: Arrangement::BothGaussian,
            median: MedianConvention::OffDiagonal,
            tail_points: DEFAULT_TAIL_POINTS,
            threshold: DEFAULT_THRESHOLD,
            execution: Execution::default(),
        }
    }
}

impl SweepConfig {
    pub fn validate(&self) -> Result<()> {
        let g = &self.log2_sigma_grid;
        if g.len() < 4 {
            return Err(Error::InvalidConfig(format!("grid needs at least 4 points, got {}", g.len())));
        }
        if g.iter().any(|v| !v.is_finite()) || g.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidConfig("grid must be finite and strictly increasing".into()));
        }
        if self.tail_points < 2 {
            return Err(Error::InvalidConfig("tail fit needs at least 2 points".into()));
        }
        if !(self.threshold > 0.0 && self.threshold.is_finite()) {
            return Err(Error::InvalidConfig(format!("threshold must be positive, got {}", self.threshold)));
        }
        match self.arrangement {
            Arrangement::MixedBandwidth { ratio } if !(ratio >= 1.0 && ratio.is_finite()) => {
                Err(Error::InvalidConfig(format!("bandwidth ratio must be >= 1, got {ratio}")))
            }
            Arrangement::GaussianVsFixed { kernel: Kernel::Gaussian { sigma } } if !(sigma > 0.0 && sigma.is_finite()) => {
                Err(Error::InvalidConfig(format!("fixed gaussian bandwidth must be positive, got {sigma}")))
            }
            _ => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub log2_sigma: f64,
    pub cka_gaussian: f64,
    pub rel_diff: f64,
    /// `None` when the difference is below the precision floor.
    pub log_rel_diff: Option<f64>,
}

impl SweepPoint {
    pub fn below_precision_floor(&self) -> bool {
        self.log_rel_diff.is_none()
    }

    pub fn curve_point(&self) -> CurvePoint {
        CurvePoint { log2_sigma: self.log2_sigma, log_rel_diff: self.log_rel_diff }
    }
}

/// One point of a `log2 rel. difference` vs `log2 sigma` curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub log2_sigma: f64,
    pub log_rel_diff: Option<f64>,
}

/// Largest-bandwidth point the `1/sigma^2` asymptote is extrapolated from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Anchor {
    pub log2_sigma: f64,
    pub rel_diff: f64,
}

impl Anchor {
    /// The last point of the curve above the precision floor.
    pub fn from_curve(curve: &[CurvePoint]) -> Option<Self> {
        curve.iter().rev().find_map(|p| {
            p.log_rel_diff.map(|l| Anchor { log2_sigma: p.log2_sigma, rel_diff: l.exp2() })
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Onset {
    /// `log2` of the onset bandwidth (a grid value).
    At(f64),
    NotReached,
}

impl Onset {
    pub fn log2_sigma(&self) -> Option<f64> {
        match self {
            Onset::At(v) => Some(*v),
            Onset::NotReached => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cka_linear: f64,
    pub points: Vec<SweepPoint>,
    /// `None` when fewer than `tail_points` points clear the precision floor.
    pub tail_slope: Option<f64>,
    pub onset: Onset,
    /// Relative difference at the largest grid bandwidth.
    pub r_max: f64,
    pub anchor: Option<Anchor>,
}

impl SweepResult {
    pub fn curve(&self) -> Vec<CurvePoint> {
        self.points.iter().map(SweepPoint::curve_point).collect()
    }
}

/// `log2 r - 2 (log2 sigma - anchor_exponent)`.
pub fn predicted_asymptote(r_anchor: f64, log2_sigma: f64, anchor_exponent: f64) -> f64 {
    r_anchor.log2() - 2.0 * (log2_sigma - anchor_exponent)
}

/// Smallest grid `log2 sigma` from which every point deviates from the
/// asymptote through `anchor` by less than `threshold`.
///
/// Points below the precision floor pass. The anchor lies on its own
/// asymptote by construction and so cannot establish onset by itself: a
/// candidate must lie strictly below the anchor bandwidth.
pub fn convergence_onset(curve: &[CurvePoint], anchor: Anchor, threshold: f64) -> Onset {
    let within = |p: &CurvePoint| match p.log_rel_diff {
        None => true,
        Some(obs) => {
            let pred = predicted_asymptote(anchor.rel_diff, p.log2_sigma, anchor.log2_sigma);
            (obs - pred).abs() < threshold
        }
    };
    let mut onset = Onset::NotReached;
    for p in curve.iter().rev() {
        if !within(p) {
            break;
        }
        if p.log2_sigma < anchor.log2_sigma {
            onset = Onset::At(p.log2_sigma);
        }
    }
    onset
}

/// OLS slope over the last `tail_points` points above the precision floor.
pub fn tail_slope(curve: &[CurvePoint], tail_points: usize) -> Result<f64> {
    let finite: Vec<(f64, f64)> =
        curve.iter().filter_map(|p| p.log_rel_diff.map(|l| (p.log2_sigma, l))).collect();
    if tail_points < 2 || finite.len() < tail_points {
        return Err(Error::InsufficientTail { needed: tail_points.max(2), found: finite.len() });
    }
    let tail = &finite[finite.len() - tail_points..];
    let x: Vec<f64> = tail.iter().map(|t| t.0).collect();
    let y: Vec<f64> = tail.iter().map(|t| t.1).collect();
    Ok(ols_slope(&x, &y))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometryReport {
    pub diam_x: f64,
    pub median_x: f64,
    pub diam_y: f64,
    pub median_y: f64,
    pub rho_x: f64,
    pub rho_y: f64,
    /// Representation eccentricity, `max(rho_x, rho_y)`.
    pub rho: f64,
}

pub fn eccentricity(x: &FeatureMatrix, y: &FeatureMatrix, median: MedianConvention) -> Result<GeometryReport> {
    let exec = Execution::default();
    let dx = pairwise_distances_with(x, median, exec);
    let dy = pairwise_distances_with(y, median, exec);
    eccentricity_from_distances(&dx, &dy)
}

pub fn eccentricity_from_distances(dx: &DistanceMatrix, dy: &DistanceMatrix) -> Result<GeometryReport> {
    let median_x = dx.positive_median()?;
    let median_y = dy.positive_median()?;
    let rho_x = dx.diameter() / median_x;
    let rho_y = dy.diameter() / median_y;
    Ok(GeometryReport {
        diam_x: dx.diameter(),
        median_x,
        diam_y: dy.diameter(),
        median_y,
        rho_x,
        rho_y,
        rho: rho_x.max(rho_y),
    })
}

pub fn sweep(x: &FeatureMatrix, y: &FeatureMatrix, cfg: &SweepConfig) -> Result<SweepResult> {
    cfg.validate()?;
    if x.n() != y.n() {
        return Err(Error::DimensionMismatch { left: x.n(), right: y.n() });
    }
    let exec = cfg.execution;
    let c = cfg.centering;
    let dist_x = pairwise_distances_with(x, cfg.median, exec);
    dist_x.positive_median()?;

    let k_lin = gram_with(x, &KernelSpec::linear(c), exec)?;
    let (l_ref, dist_y) = match cfg.arrangement {
        Arrangement::BothGaussian | Arrangement::MixedBandwidth { .. } => {
            let dy = pairwise_distances_with(y, cfg.median, exec);
            dy.positive_median()?;
            (gram_with(y, &KernelSpec::linear(c), exec)?, Some(dy))
        }
        Arrangement::GaussianVsFixed { kernel } => {
            (gram_with(y, &KernelSpec::new(kernel, c).with_median(cfg.median), exec)?, None)
        }
    };
    let cka_linear = cka_with(&k_lin, &l_ref, exec)?.value;
    if cka_linear <= ZERO_LINEAR_CKA {
        return Err(Error::ZeroLinearCka(cka_linear));
    }

    let grid = &cfg.log2_sigma_grid;
    let points = try_map_range(exec, grid.len(), |idx| {
        let log2_sigma = grid[idx];
        let sigma = log2_sigma.exp2();
        let gauss = |s: f64| KernelSpec::gaussian(s, c).with_median(cfg.median);
        let k = gaussian_gram(&dist_x, &gauss(sigma), exec)?;
        let value = match (cfg.arrangement, &dist_y) {
            (Arrangement::BothGaussian, Some(dy)) => cka_with(&k, &gaussian_gram(dy, &gauss(sigma), exec)?, exec)?,
            (Arrangement::MixedBandwidth { ratio }, Some(dy)) => {
                cka_with(&k, &gaussian_gram(dy, &gauss(ratio * sigma), exec)?, exec)?
            }
            _ => cka_with(&k, &l_ref, exec)?,
        };
        let cka_gaussian = value.value;
        let diff = (cka_gaussian - cka_linear).abs();
        let rel_diff = diff / cka_linear;
        let log_rel_diff = (diff >= PRECISION_FLOOR * cka_linear).then(|| rel_diff.log2());
        Ok::<_, Error>(SweepPoint { log2_sigma, cka_gaussian, rel_diff, log_rel_diff })
    })?;

    let curve: Vec<CurvePoint> = points.iter().map(SweepPoint::curve_point).collect();
    let anchor = Anchor::from_curve(&curve);
    let onset = match anchor {
        Some(a) => convergence_onset(&curve, a, cfg.threshold),
        // No point differs beyond roundoff: converged over the whole grid.
        None => Onset::At(grid[0]),
    };
    let tail_slope = tail_slope(&curve, cfg.tail_points).ok();
    let r_max = points.last().map_or(0.0, |p| p.rel_diff);
    Ok(SweepResult { cka_linear, points, tail_slope, onset, r_max, anchor })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn line(c: f64, slope: f64) -> Vec<CurvePoint> {
        (-4..=8)
            .map(|p| CurvePoint { log2_sigma: p as f64, log_rel_diff: Some(c + slope * p as f64) })
            .collect()
    }

    #[test]
    fn predicted_asymptote_values() {
        let r8 = 2f64.powi(-20);
        assert_eq!(predicted_asymptote(r8, 8.0, 8.0), -20.0);
        assert_eq!(predicted_asymptote(r8, 6.0, 8.0), -16.0);
        assert_eq!(predicted_asymptote(r8, 7.0, 8.0), -18.0);
    }

    #[test]
    fn onset_on_exact_asymptote_is_grid_minimum() {
        let curve = line(-4.0, -2.0);
        let a = Anchor::from_curve(&curve).unwrap();
        assert_eq!(convergence_onset(&curve, a, 0.25), Onset::At(-4.0));
    }

    #[test]
    fn onset_after_deviation() {
        let mut curve = line(-4.0, -2.0);
        // deviate by 1.0 at log2 sigma = 2, small wiggles above
        for p in curve.iter_mut() {
            let v = p.log_rel_diff.as_mut().unwrap();
            if p.log2_sigma == 2.0 {
                *v += 1.0;
            } else if p.log2_sigma >= 3.0 && p.log2_sigma < 8.0 {
                *v += 0.2;
            }
        }
        let a = Anchor::from_curve(&curve).unwrap();
        assert_eq!(convergence_onset(&curve, a, 0.25), Onset::At(3.0));
        assert_eq!(convergence_onset(&curve, a, 0.1), Onset::NotReached);
        assert_eq!(convergence_onset(&curve, a, 1.5), Onset::At(-4.0));
    }

    #[test]
    fn flat_curve_never_reaches_onset() {
        let curve = line(-2.0, 0.0);
        let a = Anchor::from_curve(&curve).unwrap();
        assert_eq!(convergence_onset(&curve, a, 0.25), Onset::NotReached);
    }

    #[test]
    fn floor_points_pass_onset_and_skip_fit() {
        let mut curve = line(-4.0, -2.0);
        curve[12].log_rel_diff = None;
        curve[5].log_rel_diff = None;
        let a = Anchor::from_curve(&curve).unwrap();
        assert_eq!(a.log2_sigma, 7.0);
        assert_eq!(convergence_onset(&curve, a, 0.25), Onset::At(-4.0));
        assert!((tail_slope(&curve, 4).unwrap() + 2.0).abs() < 1e-12);
    }

    #[test]
    fn tail_slope_exact_lines() {
        assert!((tail_slope(&line(3.0, -2.0), 4).unwrap() + 2.0).abs() < 1e-12);
        assert!((tail_slope(&line(3.0, -1.0), 4).unwrap() + 1.0).abs() < 1e-12);
        let mut short = line(0.0, -2.0);
        for p in short.iter_mut().skip(2) {
            p.log_rel_diff = None;
        }
        assert_eq!(tail_slope(&short, 4), Err(Error::InsufficientTail { needed: 4, found: 2 }));
    }

    #[test]
    fn grid_helper() {
        assert_eq!(log2_grid(-4.0, 8.0, 1.0).unwrap().len(), 13);
        assert_eq!(log2_grid(0.0, 2.0, 0.5).unwrap(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(log2_grid(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn config_validation() {
        let mut cfg = SweepConfig { log2_sigma_grid: vec![0.0, 1.0, 2.0], ..Default::default() };
        assert!(cfg.validate().is_err());
        cfg.log2_sigma_grid = vec![0.0, 2.0, 1.0, 3.0];
        assert!(cfg.validate().is_err());
        cfg.log2_sigma_grid = vec![0.0, 1.0, 2.0, 3.0];
        assert!(cfg.validate().is_ok());
        cfg.arrangement = Arrangement::MixedBandwidth { ratio: 0.5 };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn collinear_eccentricity() {
        let x = FeatureMatrix::new(array![[0.0], [1.0], [10.0]]).unwrap();
        let g = eccentricity(&x, &x, MedianConvention::OffDiagonal).unwrap();
        assert_eq!(g.diam_x, 10.0);
        assert_eq!(g.median_x, 9.0);
        assert!((g.rho - 10.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn identical_representations_sweep() {
        let x = FeatureMatrix::new(array![[0.0, 1.0], [2.0, 0.5], [1.0, -1.0], [3.0, 3.0], [0.5, 0.2]]).unwrap();
        let r = sweep(&x, &x, &SweepConfig::default()).unwrap();
        assert!((r.cka_linear - 1.0).abs() < 1e-12);
        assert!(r.points.iter().all(|p| p.below_precision_floor()));
        assert_eq!(r.onset, Onset::At(-4.0));
        assert_eq!(r.tail_slope, None);
    }

    #[test]
    fn sweep_mismatched_rows() {
        let x = FeatureMatrix::new(array![[0.0], [1.0], [3.0]]).unwrap();
        let y = FeatureMatrix::new(array![[0.0], [1.0]]).unwrap();
        assert!(matches!(sweep(&x, &y, &SweepConfig::default()), Err(Error::DimensionMismatch { .. })));
    }
}
