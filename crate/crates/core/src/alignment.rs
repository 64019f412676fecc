//! HSIC, CKA and non-centered kernel alignment over Gram matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::{map_range, Execution};
use crate::kernels::{Centering, GramMatrix, KernelSpec};
use crate::numeric::{pairwise_sum, pairwise_sum_by};

/// Self-similarity traces at or below `SELF_SIMILARITY_TOL * N^2 * scale^2`
/// count as zero; `scale` is the Gram matrix magnitude before centering.
pub const SELF_SIMILARITY_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlignmentKind {
    Hsic,
    Cka,
    NonCenteredAlignment,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AlignmentValue {
    pub value: f64,
    pub kind: AlignmentKind,
    pub kernel_k: KernelSpec,
    pub kernel_l: KernelSpec,
    pub n: usize,
}

impl AlignmentValue {
    /// Value clamped to [-1, 1] for display. Stored values are never clamped.
    pub fn reported(&self) -> f64 {
        match self.kind {
            AlignmentKind::Hsic => self.value,
            _ => self.value.clamp(-1.0, 1.0),
        }
    }
}

/// `tr(K L) = sum_ij K[i,j] L[j,i]` in O(N^2) without forming `K L`.
///
/// Terms are grouped by unordered index pair, `K[i,j] L[j,i] + K[j,i] L[i,j]`,
/// so swapping the arguments yields the same bits.
pub fn trace_product(k: &GramMatrix, l: &GramMatrix) -> Result<f64> {
    trace_product_with(k, l, Execution::default())
}

pub fn trace_product_with(k: &GramMatrix, l: &GramMatrix, exec: Execution) -> Result<f64> {
    check_same_n(k, l)?;
    let (a, b) = (k.values(), l.values());
    let n = k.n();
    let rows = map_range(exec, n, |i| {
        pairwise_sum_by(n - i, |off| {
            let j = i + off;
            if off == 0 {
                a[[i, i]] * b[[i, i]]
            } else {
                a[[i, j]] * b[[j, i]] + a[[j, i]] * b[[i, j]]
            }
        })
    });
    Ok(pairwise_sum(&rows))
}

/// `tr(K̄ L̄) / (N-1)^2` on centered Gram matrices.
pub fn hsic(k: &GramMatrix, l: &GramMatrix) -> Result<AlignmentValue> {
    hsic_with(k, l, Execution::default())
}

pub fn hsic_with(k: &GramMatrix, l: &GramMatrix, exec: Execution) -> Result<AlignmentValue> {
    check_same_n(k, l)?;
    check_same_centering(k, l)?;
    let n = k.n();
    let denom = ((n - 1) * (n - 1)) as f64;
    let value = trace_product_with(k, l, exec)? / denom;
    Ok(AlignmentValue { value, kind: AlignmentKind::Hsic, kernel_k: *k.spec(), kernel_l: *l.spec(), n })
}

/// `HSIC(K, L) / sqrt(HSIC(K, K) HSIC(L, L))`.
///
/// Both matrices must carry the same centering. With [`Centering::None`] this
/// is the non-centered alignment.
pub fn cka(k: &GramMatrix, l: &GramMatrix) -> Result<AlignmentValue> {
    cka_with(k, l, Execution::default())
}

pub fn cka_with(k: &GramMatrix, l: &GramMatrix, exec: Execution) -> Result<AlignmentValue> {
    check_same_n(k, l)?;
    check_same_centering(k, l)?;
    let value = normalized_trace(k, l, exec)?;
    Ok(AlignmentValue { value, kind: AlignmentKind::Cka, kernel_k: *k.spec(), kernel_l: *l.spec(), n: k.n() })
}

/// `tr(K L) / sqrt(tr(K K) tr(L L))` on uncentered Gram matrices.
pub fn non_centered_alignment(k: &GramMatrix, l: &GramMatrix) -> Result<AlignmentValue> {
    check_same_n(k, l)?;
    for g in [k, l] {
        if g.spec().centering != Centering::None {
            return Err(Error::AlreadyCentered(g.spec().centering.to_string()));
        }
    }
    let value = normalized_trace(k, l, Execution::default())?;
    Ok(AlignmentValue {
        value,
        kind: AlignmentKind::NonCenteredAlignment,
        kernel_k: *k.spec(),
        kernel_l: *l.spec(),
        n: k.n(),
    })
}

fn normalized_trace(k: &GramMatrix, l: &GramMatrix, exec: Execution) -> Result<f64> {
    let kl = trace_product_with(k, l, exec)?;
    let kk = self_trace(k, exec)?;
    let ll = self_trace(l, exec)?;
    Ok(kl / (kk * ll).sqrt())
}

fn self_trace(g: &GramMatrix, exec: Execution) -> Result<f64> {
    let t = trace_product_with(g, g, exec)?;
    let n = g.n() as f64;
    let floor = SELF_SIMILARITY_TOL * n * n * g.scale() * g.scale();
    if t <= floor {
        Err(Error::ZeroSelfSimilarity)
    } else {
        Ok(t)
    }
}

fn check_same_n(k: &GramMatrix, l: &GramMatrix) -> Result<()> {
    if k.n() != l.n() {
        return Err(Error::DimensionMismatch { left: k.n(), right: l.n() });
    }
    Ok(())
}

fn check_same_centering(k: &GramMatrix, l: &GramMatrix) -> Result<()> {
    let (a, b) = (k.spec().centering, l.spec().centering);
    if a != b {
        return Err(Error::CenteringMismatch { left: a.to_string(), right: b.to_string() });
    }
    Ok(())
}
