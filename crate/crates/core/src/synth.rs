//! Seeded synthetic representation pairs with controllable similarity and
//! eccentricity.
//!
//! Generator: ChaCha8 seeded with `ChaCha8Rng::seed_from_u64(seed)`, one
//! stream per matrix (`set_stream`):
//!
//! | stream | draws                                   |
//! |--------|-----------------------------------------|
//! | 0      | X, N x dX, row-major                    |
//! | 1      | mixing matrix W, dX x dY, row-major     |
//! | 2      | noise E, N x dY, row-major              |
//! | 3      | outlier direction for X, dX entries     |
//! | 4      | outlier direction for Y, dY entries     |
//!
//! Uniforms are `((next_u64() >> 11) + 0.5) * 2^-53`, strictly inside
//! (0, 1); normals are the standard normal inverse CDF of those uniforms.
//!
//! Construction: `X ~ N(0, 1)`. W is orthonormalized by modified
//! Gram-Schmidt along its shorter side, so `X W` keeps the geometry of X
//! whenever `dY >= dX`. `Z = X W / rms(X W)` and
//! `Y = coupling * Z + (1 - coupling) * E`. ReLU (optional) is applied
//! elementwise to both. Finally the first `outlier_count` rows of each matrix
//! are shifted by `outlier_offset * scale` along that matrix's unit
//! direction, where `scale` is the root-mean-square distance of rows to
//! their centroid.

use std::fmt::Write as _;

use ndarray::{Array1, Array2, Axis};
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};
use crate::matrix::FeatureMatrix;
use crate::numeric::{dot, pairwise_sum_by};

const STREAM_X: u64 = 0;
const STREAM_W: u64 = 1;
const STREAM_NOISE: u64 = 2;
const STREAM_OUTLIER_X: u64 = 3;
const STREAM_OUTLIER_Y: u64 = 4;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Nonlinearity {
    #[default]
    None,
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub seed: u64,
    pub n: usize,
    pub dx: usize,
    pub dy: usize,
    pub coupling: f64,
    pub outlier_count: usize,
    pub outlier_offset: f64,
    pub nonlinearity: Nonlinearity,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            n: 200,
            dx: 64,
            dy: 16,
            coupling: 0.5,
            outlier_count: 0,
            outlier_offset: 20.0,
            nonlinearity: Nonlinearity::None,
        }
    }
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidConfig(format!("synthetic N must be >= 4, got {}", self.n)));
        }
        if self.dx == 0 || self.dy == 0 {
            return Err(Error::InvalidConfig("synthetic dimensions must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.coupling) {
            return Err(Error::InvalidConfig(format!("coupling must lie in [0, 1], got {}", self.coupling)));
        }
        if self.outlier_count >= self.n {
            return Err(Error::InvalidConfig("outlier count must be below N".into()));
        }
        if !(self.outlier_offset >= 0.0 && self.outlier_offset.is_finite()) {
            return Err(Error::InvalidConfig("outlier offset must be finite and >= 0".into()));
        }
        Ok(())
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Parse `key = value` lines. If the text has `[section]` headers only
    /// the `[synth]` section is read. Unspecified keys keep their defaults.
    pub fn from_kv_str(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        let sectioned = text.lines().any(|l| l.trim_start().starts_with('['));
        let mut active = !sectioned;
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
                active = name.trim() == "synth";
                continue;
            }
            if !active {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| Error::Parse {
                line: line_no,
                message: format!("expected key = value, got {line:?}"),
            })?;
            spec.set(key.trim(), value.trim()).map_err(|message| Error::Parse { line: line_no, message })?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_kv_string(&self) -> String {
        let mut out = String::from("[synth]\n");
        writeln!(out, "seed = {}", self.seed).unwrap();
        writeln!(out, "n = {}", self.n).unwrap();
        writeln!(out, "dx = {}", self.dx).unwrap();
        writeln!(out, "dy = {}", self.dy).unwrap();
        writeln!(out, "coupling = {}", self.coupling).unwrap();
        writeln!(out, "outlier_count = {}", self.outlier_count).unwrap();
        writeln!(out, "outlier_offset = {}", self.outlier_offset).unwrap();
        let nl = match self.nonlinearity {
            Nonlinearity::None => "none",
            Nonlinearity::Relu => "relu",
        };
        writeln!(out, "nonlinearity = {nl}").unwrap();
        out
    }

    fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        fn num<T: std::str::FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
            value.parse().map_err(|_| format!("{key}: cannot parse {value:?}"))
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "n" => self.n = num(key, value)?,
            "dx" => self.dx = num(key, value)?,
            "dy" => self.dy = num(key, value)?,
            "coupling" => self.coupling = num(key, value)?,
            "outlier_count" | "outliers" => self.outlier_count = num(key, value)?,
            "outlier_offset" => self.outlier_offset = num(key, value)?,
            "nonlinearity" => {
                self.nonlinearity = match value.to_ascii_lowercase().as_str() {
                    "none" => Nonlinearity::None,
                    "relu" => Nonlinearity::Relu,
                    other => return Err(format!("unknown nonlinearity {other:?}")),
                }
            }
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }
}

struct NormalStream {
    rng: ChaCha8Rng,
    normal: Normal,
}

impl NormalStream {
    fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng, normal: Normal::standard() }
    }

    fn uniform(&mut self) -> f64 {
        ((self.rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
    }

    fn next(&mut self) -> f64 {
        let u = self.uniform();
        self.normal.inverse_cdf(u)
    }

    fn matrix(&mut self, rows: usize, cols: usize) -> Array2<f64> {
        Array2::from_shape_simple_fn((rows, cols), || self.next())
    }
}

pub fn generate_pair(spec: &SynthSpec) -> Result<(FeatureMatrix, FeatureMatrix)> {
    spec.validate()?;
    let x = NormalStream::new(spec.seed, STREAM_X).matrix(spec.n, spec.dx);
    let w = semi_orthogonal(NormalStream::new(spec.seed, STREAM_W).matrix(spec.dx, spec.dy));
    let noise = NormalStream::new(spec.seed, STREAM_NOISE).matrix(spec.n, spec.dy);

    let z = x.dot(&w);
    let rms = (pairwise_sum_by(z.len(), |k| {
        let v = z.as_slice().unwrap()[k];
        v * v
    }) / z.len() as f64)
        .sqrt();
    let c = spec.coupling;
    let mut y = z.mapv(|v| c * v / rms) + &noise.mapv(|v| (1.0 - c) * v);
    let mut x = x;

    if spec.nonlinearity == Nonlinearity::Relu {
        x.mapv_inplace(|v| v.max(0.0));
        y.mapv_inplace(|v| v.max(0.0));
    }
    if spec.outlier_count > 0 {
        plant_outliers(&mut x, spec, STREAM_OUTLIER_X);
        plant_outliers(&mut y, spec, STREAM_OUTLIER_Y);
    }
    Ok((FeatureMatrix::new(x)?, FeatureMatrix::new(y)?))
}

fn plant_outliers(m: &mut Array2<f64>, spec: &SynthSpec, stream: u64) {
    let (n, d) = m.dim();
    let mut dir: Array1<f64> = Array1::from_shape_simple_fn(d, {
        let mut s = NormalStream::new(spec.seed, stream);
        move || s.next()
    });
    let norm = dot(dir.as_slice().unwrap(), dir.as_slice().unwrap()).sqrt();
    dir /= norm;
    let centroid = m.mean_axis(Axis(0)).expect("non-empty");
    let ms = pairwise_sum_by(n, |i| {
        let r = m.row(i);
        pairwise_sum_by(d, |k| (r[k] - centroid[k]).powi(2))
    }) / n as f64;
    let shift = dir * (spec.outlier_offset * ms.sqrt());
    for i in 0..spec.outlier_count {
        let mut row = m.row_mut(i);
        row += &shift;
    }
}

/// Orthonormalize the columns of `g` (dY <= dX) or its rows (dY > dX).
fn semi_orthogonal(g: Array2<f64>) -> Array2<f64> {
    let (r, c) = g.dim();
    if c <= r {
        orthonormal_columns(g)
    } else {
        orthonormal_columns(g.reversed_axes().as_standard_layout().into_owned())
            .reversed_axes()
            .as_standard_layout()
            .into_owned()
    }
}

fn orthonormal_columns(mut g: Array2<f64>) -> Array2<f64> {
    let cols = g.ncols();
    for j in 0..cols {
        for k in 0..j {
            let proj = g.column(k).dot(&g.column(j));
            let qk = g.column(k).to_owned();
            g.column_mut(j).scaled_add(-proj, &qk);
        }
        let norm = g.column(j).dot(&g.column(j)).sqrt();
        g.column_mut(j).mapv_inplace(|v| v / norm);
    }
    g
}
