//! Pairwise distances, Gram matrices for the linear, Gaussian RBF and
//! Euclidean (quadratic) kernels, and mean-centering.
//!
//! Gaussian bandwidths are expressed in units of the median pairwise
//! distance `d_X` of the representation, so `sigma = 2` means a bandwidth of
//! twice the median distance. This makes Gaussian Gram matrices invariant
//! under isotropic rescaling of the features.

use std::fmt;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::matrix::FeatureMatrix;
use crate::numeric::{dot, pairwise_sum_by, sorted_median, squared_distance};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "family")]
pub enum Kernel {
    Linear,
    /// Bandwidth in units of the median pairwise distance.
    Gaussian { sigma: f64 },
    Euclidean,
}

impl Kernel {
    pub fn gaussian(sigma: f64) -> Self {
        Kernel::Gaussian { sigma }
    }

    /// Positive semidefinite families (the Euclidean kernel is not).
    pub fn is_psd(&self) -> bool {
        !matches!(self, Kernel::Euclidean)
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Linear => f.write_str("linear"),
            Kernel::Gaussian { sigma } => write!(f, "gaussian(sigma={sigma})"),
            Kernel::Euclidean => f.write_str("euclidean"),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    None,
    /// Subtract column means (`H K`).
    #[default]
    Column,
    /// Subtract row means (`K H`).
    Row,
    /// `H K H`.
    Double,
}

impl fmt::Display for Centering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Centering::None => "none",
            Centering::Column => "column",
            Centering::Row => "row",
            Centering::Double => "double",
        })
    }
}

/// Which entries of the distance matrix enter the median `d_X`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MedianConvention {
    /// The N(N-1) off-diagonal entries.
    #[default]
    OffDiagonal,
    /// All N^2 entries, diagonal zeros included.
    IncludeDiagonal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KernelSpec {
    pub kernel: Kernel,
    pub centering: Centering,
    #[serde(default)]
    pub median: MedianConvention,
}

impl KernelSpec {
    pub fn new(kernel: Kernel, centering: Centering) -> Self {
        Self { kernel, centering, median: MedianConvention::default() }
    }

    pub fn linear(centering: Centering) -> Self {
        Self::new(Kernel::Linear, centering)
    }

    pub fn gaussian(sigma: f64, centering: Centering) -> Self {
        Self::new(Kernel::gaussian(sigma), centering)
    }

    pub fn euclidean(centering: Centering) -> Self {
        Self::new(Kernel::Euclidean, centering)
    }

    pub fn with_median(mut self, median: MedianConvention) -> Self {
        self.median = median;
        self
    }

    pub fn with_centering(mut self, centering: Centering) -> Self {
        self.centering = centering;
        self
    }

    fn validate(&self) -> Result<()> {
        if let Kernel::Gaussian { sigma } = self.kernel {
            if !(sigma > 0.0 && sigma.is_finite()) {
                return Err(Error::InvalidConfig(format!(
                    "gaussian bandwidth must be positive and finite, got {sigma}"
                )));
            }
        }
        Ok(())
    }
}

/// Euclidean distances between rows plus the summary scalars used for
/// bandwidth scaling and eccentricity.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    dist: Array2<f64>,
    squared: Array2<f64>,
    median: f64,
    diameter: f64,
    convention: MedianConvention,
}

impl DistanceMatrix {
    pub fn n(&self) -> usize {
        self.dist.nrows()
    }

    pub fn distances(&self) -> &Array2<f64> {
        &self.dist
    }

    pub fn squared(&self) -> &Array2<f64> {
        &self.squared
    }

    /// `d_X` under [`Self::convention`].
    pub fn median(&self) -> f64 {
        self.median
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn convention(&self) -> MedianConvention {
        self.convention
    }

    /// `d_X`, or an error when all examples coincide.
    pub fn positive_median(&self) -> Result<f64> {
        if self.median > 0.0 {
            Ok(self.median)
        } else {
            Err(Error::DegenerateRepresentation(format!(
                "median pairwise distance is zero ({} convention)",
                match self.convention {
                    MedianConvention::OffDiagonal => "off-diagonal",
                    MedianConvention::IncludeDiagonal => "diagonal-inclusive",
                }
            )))
        }
    }
}

pub fn pairwise_distances(x: &FeatureMatrix) -> DistanceMatrix {
    pairwise_distances_with(x, MedianConvention::OffDiagonal, Execution::default())
}

pub fn pairwise_distances_with(
    x: &FeatureMatrix,
    convention: MedianConvention,
    exec: Execution,
) -> DistanceMatrix {
    let n = x.n();
    let squared = symmetric_from_upper(exec, n, |i, j| {
        if i == j {
            0.0
        } else {
            squared_distance(x.row(i), x.row(j))
        }
    });
    let dist = squared.mapv(f64::sqrt);

    let mut pairs: Vec<f64> = Vec::with_capacity(n * (n - 1) / 2);
    for i in 0..n {
        for j in i + 1..n {
            pairs.push(dist[[i, j]]);
        }
    }
    pairs.sort_unstable_by(f64::total_cmp);
    let diameter = pairs.last().copied().unwrap_or(0.0);
    let median = match convention {
        // every unordered pair appears twice among the off-diagonal entries
        MedianConvention::OffDiagonal => sorted_median(&pairs),
        MedianConvention::IncludeDiagonal => {
            let mut all = Vec::with_capacity(n * n);
            all.extend(std::iter::repeat_n(0.0, n));
            for &p in &pairs {
                all.push(p);
                all.push(p);
            }
            sorted_median(&all)
        }
    };
    DistanceMatrix { dist, squared, median, diameter, convention }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix {
    values: Array2<f64>,
    spec: KernelSpec,
    source_median: Option<f64>,
    scale: f64,
}

impl GramMatrix {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn spec(&self) -> &KernelSpec {
        &self.spec
    }

    pub fn n(&self) -> usize {
        self.values.nrows()
    }

    /// The `d_X` used to scale a Gaussian bandwidth.
    pub fn source_median(&self) -> Option<f64> {
        self.source_median
    }

    /// Largest entry magnitude before centering. Gaussian matrices centered
    /// at construction measure this on `exp(-u) - 1`, the part that survives
    /// centering.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Wrap an arbitrary square matrix, e.g. a precomputed kernel. The
    /// matrix is taken as uncentered.
    pub fn from_values(values: Array2<f64>, kernel: Kernel) -> Result<Self> {
        let (r, c) = values.dim();
        if r != c {
            return Err(Error::InvalidShape(format!("gram matrix must be square, got {r}x{c}")));
        }
        if let Some(((row, col), _)) = values.indexed_iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::NonFiniteInput { row, col });
        }
        let scale = max_abs(&values);
        Ok(Self {
            values,
            spec: KernelSpec::new(kernel, Centering::None),
            source_median: None,
            scale,
        })
    }
}

pub fn gram(x: &FeatureMatrix, spec: &KernelSpec) -> Result<GramMatrix> {
    gram_with(x, spec, Execution::default())
}

pub fn gram_with(x: &FeatureMatrix, spec: &KernelSpec, exec: Execution) -> Result<GramMatrix> {
    spec.validate()?;
    let n = x.n();
    match spec.kernel {
        Kernel::Linear => {
            let raw = symmetric_from_upper(exec, n, |i, j| dot(x.row(i), x.row(j)));
            Ok(finish(raw, *spec, None, exec))
        }
        Kernel::Euclidean => {
            let raw = symmetric_from_upper(exec, n, |i, j| {
                if i == j {
                    0.0
                } else {
                    squared_distance(x.row(i), x.row(j))
                }
            });
            Ok(finish(raw, *spec, None, exec))
        }
        Kernel::Gaussian { .. } => {
            let dist = pairwise_distances_with(x, spec.median, exec);
            gaussian_gram(&dist, spec, exec)
        }
    }
}

/// Gaussian Gram matrix from precomputed distances, reusable across a
/// bandwidth sweep.
///
/// When centering is requested the kernel is evaluated as `exp(-u) - 1`
/// before centering. Centering removes constants exactly, so the result is
/// the centered Gaussian Gram matrix without the cancellation that
/// `exp(-u) ~ 1` suffers at large bandwidths.
pub fn gaussian_gram(dist: &DistanceMatrix, spec: &KernelSpec, exec: Execution) -> Result<GramMatrix> {
    spec.validate()?;
    let Kernel::Gaussian { sigma } = spec.kernel else {
        return Err(Error::InvalidConfig(format!("expected a gaussian kernel, got {}", spec.kernel)));
    };
    if dist.convention() != spec.median {
        return Err(Error::InvalidConfig("distance matrix median convention differs from kernel spec".into()));
    }
    let d_x = dist.positive_median()?;
    let bw = d_x * sigma;
    let denom = 2.0 * bw * bw;
    let sq = dist.squared();
    let n = dist.n();
    if spec.centering == Centering::None {
        let values = fill(exec, n, |i, j| (-sq[[i, j]] / denom).exp());
        return Ok(GramMatrix { values, spec: *spec, source_median: Some(d_x), scale: 1.0 });
    }
    let shifted = fill(exec, n, |i, j| (-sq[[i, j]] / denom).exp_m1());
    let scale = max_abs(&shifted);
    let values = center_values(&shifted, spec.centering, exec);
    Ok(GramMatrix { values, spec: *spec, source_median: Some(d_x), scale })
}

pub fn center(g: &GramMatrix, mode: Centering) -> Result<GramMatrix> {
    center_with(g, mode, Execution::default())
}

pub fn center_with(g: &GramMatrix, mode: Centering, exec: Execution) -> Result<GramMatrix> {
    if g.spec.centering != Centering::None {
        return Err(Error::AlreadyCentered(g.spec.centering.to_string()));
    }
    Ok(GramMatrix {
        values: center_values(&g.values, mode, exec),
        spec: g.spec.with_centering(mode),
        source_median: g.source_median,
        scale: g.scale,
    })
}

fn finish(raw: Array2<f64>, spec: KernelSpec, source_median: Option<f64>, exec: Execution) -> GramMatrix {
    let scale = max_abs(&raw);
    let values = center_values(&raw, spec.centering, exec);
    GramMatrix { values, spec, source_median, scale }
}

fn center_values(k: &Array2<f64>, mode: Centering, exec: Execution) -> Array2<f64> {
    let n = k.nrows();
    match mode {
        Centering::None => k.clone(),
        Centering::Column => {
            let means = map_range(exec, n, |j| pairwise_sum_by(n, |r| k[[r, j]]) / n as f64);
            fill(exec, n, |i, j| k[[i, j]] - means[j])
        }
        Centering::Row => {
            let means = map_range(exec, n, |i| pairwise_sum_by(n, |c| k[[i, c]]) / n as f64);
            fill(exec, n, |i, j| k[[i, j]] - means[i])
        }
        Centering::Double => {
            let cols = center_values(k, Centering::Column, exec);
            center_values(&cols, Centering::Row, exec)
        }
    }
}

/// Build a dense matrix row by row.
fn fill<F>(exec: Execution, n: usize, f: F) -> Array2<f64>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let rows = map_range(exec, n, |i| (0..n).map(|j| f(i, j)).collect::<Vec<_>>());
    Array2::from_shape_vec((n, n), rows.concat()).expect("square")
}

/// Evaluate `f` on the upper triangle and mirror, giving exact symmetry.
fn symmetric_from_upper<F>(exec: Execution, n: usize, f: F) -> Array2<f64>
where
    F: Fn(usize, usize) -> f64 + Sync + Send,
{
    let upper = map_range(exec, n, |i| (i..n).map(|j| f(i, j)).collect::<Vec<_>>());
    let mut out = Array2::zeros((n, n));
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            out[[i, j]] = v;
            out[[j, i]] = v;
        }
    }
    out
}

fn max_abs(m: &Array2<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
}
