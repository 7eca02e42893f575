//! Key-rate bounds for block Bell-diagonal states.
//!
//! Lower bound: advantage distillation followed by Devetak-Winter one-way
//! distillation (`K_AD-DW`), a function of the privacy-squeezed Bell
//! parameters only. Upper bound on the key of the partially transposed state:
//! `2β`, valid when the `A`/`B` blocks are separable and `D = 0`. A PPT state
//! whose lower bound exceeds the upper bound separates device-dependent from
//! device-independent key.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::linalg::{
    binary_entropy, min_eigenvalue, partial_transpose_dims, shannon_entropy, tol, ComplexMatrix, ProbabilityVector,
};
use crate::states::{BellParams, BlockBellState, BOB_CUT};
use crate::{Error, Result};

/// Margin by which a gap must exceed zero before it is reported.
pub const TAU_GAP: f64 = 1e-9;

/// Comparison of a key lower bound against a key upper bound for the
/// partially transposed state, in bits per copy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub lower: f64,
    pub upper: f64,
    pub gap: f64,
    pub gap_established: bool,
}

impl BoundReport {
    pub fn new(lower: f64, upper: f64) -> Self {
        let gap = lower - upper;
        BoundReport { lower, upper, gap, gap_established: gap > TAU_GAP }
    }
}

fn check_copies(m: u32) -> Result<()> {
    if m == 0 {
        Err(Error::InvalidParameter("number of copies m must be at least 1".into()))
    } else {
        Ok(())
    }
}

/// `1 − H((α^m+γ^m, α^m−γ^m, β^m+δ^m, β^m−δ^m) / (2α^m+2β^m))`.
///
/// May be negative, in which case no key is guaranteed.
pub fn k_ad_dw(p: &BellParams, m: u32) -> Result<f64> {
    check_copies(m)?;
    let scale = p.alpha.max(p.beta);
    let pw = |x: f64| (x / scale).powi(m as i32);
    let (a, b, g, d) = (pw(p.alpha), pw(p.beta), pw(p.gamma), pw(p.delta));
    let weights = [a + g, (a - g).max(0.0), b + d, (b - d).max(0.0)];
    let probs = ProbabilityVector::from_weights(&weights)?;
    Ok(1.0 - shannon_entropy(&probs))
}

/// The same bound written with `ε = β^m/(α^m+β^m)`, `λ_eq = γ/α` and
/// `λ_dif = δ/β`:
/// `1 − h(ε) − (1−ε) h((1−λ_eq^m)/2) − ε h((1−λ_dif^m)/2)`.
pub fn k_ad_dw_unsimplified(p: &BellParams, m: u32) -> Result<f64> {
    check_copies(m)?;
    if p.alpha <= 0.0 {
        return Err(Error::InvalidParameter("α must be positive".into()));
    }
    let mi = m as i32;
    // ε = 1 / (1 + (α/β)^m), written to stay finite for tiny β
    let eps = if p.beta == 0.0 { 0.0 } else { 1.0 / (1.0 + (p.alpha / p.beta).powi(mi)) };
    let lambda_eq = (p.gamma / p.alpha).min(1.0);
    let mut k = 1.0 - binary_entropy(eps)? - (1.0 - eps) * binary_entropy((1.0 - lambda_eq.powi(mi)) / 2.0)?;
    if p.beta > 0.0 {
        let lambda_dif = (p.delta / p.beta).min(1.0);
        k -= eps * binary_entropy((1.0 - lambda_dif.powi(mi)) / 2.0)?;
    }
    Ok(k)
}

/// `2β` for Bell parameters of a block state with `D = 0`.
pub fn k_upper_ppt_params(p: &BellParams) -> Result<f64> {
    if p.delta > tol::PROB {
        return Err(Error::InvalidParameter(format!("upper bound requires δ = 0, got δ = {}", p.delta)));
    }
    Ok(2.0 * p.beta)
}

/// `2β` upper bound on the key of `s^Γ`.
///
/// Separability of the `A1, A2, B1, B2` blocks is a hypothesis the caller
/// vouches for; it is not checked.
pub fn k_upper_ppt_block(s: &BlockBellState) -> Result<f64> {
    let norms = s.block_norms();
    if norms.d > tol::PROB {
        return Err(Error::InvalidParameter(format!("upper bound requires D = 0, got ‖D‖₁ = {}", norms.d)));
    }
    Ok(2.0 * norms.b1)
}

/// Numerical check of the decomposition `ρ^Γ = 2α ρ'_corr + 2β ρ'_acorr`.
///
/// The summands are rebuilt from the individual blocks (each partially
/// transposed on Bob's shield) and compared with the partial transpose of the
/// assembled state. A summand is `None` when its weight vanishes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub alpha: f64,
    pub beta: f64,
    /// Smallest eigenvalue of `ρ^Γ`.
    pub ppt_min_eigenvalue: f64,
    /// `max |ρ^Γ − (2α ρ'_corr + 2β ρ'_acorr)|`.
    pub reconstruction_residual: f64,
    /// `|tr ρ'_corr − 1|`.
    pub corr_trace_residual: Option<f64>,
    /// `|tr ρ'_acorr − 1|`.
    pub acorr_trace_residual: Option<f64>,
    pub corr_min_eigenvalue: Option<f64>,
    pub acorr_min_eigenvalue: Option<f64>,
}

impl DecompositionReport {
    /// All residuals at most `tol` and both summands PSD within `tol`.
    pub fn holds(&self, tol: f64) -> bool {
        self.reconstruction_residual <= tol
            && self.corr_trace_residual.is_none_or(|r| r <= tol)
            && self.acorr_trace_residual.is_none_or(|r| r <= tol)
            && self.corr_min_eigenvalue.is_none_or(|e| e >= -tol)
            && self.acorr_min_eigenvalue.is_none_or(|e| e >= -tol)
    }
}

pub fn verify_decomposition(s: &BlockBellState) -> Result<DecompositionReport> {
    let norms = s.block_norms();
    if norms.d > tol::PROB {
        return Err(Error::InvalidParameter(format!("decomposition requires D = 0, got ‖D‖₁ = {}", norms.d)));
    }
    let rho = s.density_matrix();
    let full_pt = partial_transpose_dims(rho.matrix(), rho.dims(), &BOB_CUT)?;
    let ppt_min = min_eigenvalue(&full_pt)?;
    if ppt_min < -tol::PSD {
        return Err(Error::NotPpt { min_eigenvalue: ppt_min });
    }

    let d = s.shield_dim();
    let n = d * d;
    let shield_pt = |b: &ComplexMatrix| partial_transpose_dims(b, &[d, d], &[1]);
    let blocks = s.blocks();
    let place = |parts: &[(usize, usize, ComplexMatrix)]| {
        let mut m = ComplexMatrix::zeros(4 * n, 4 * n);
        for (r, c, b) in parts {
            m.view_mut((r * n, c * n), (n, n)).copy_from(b);
        }
        m
    };
    // with weights folded into blocks: 2α ρ'_corr = |00⟩⟨00|⊗A1^Γ + |11⟩⟨11|⊗A2^Γ
    let corr_w = place(&[(0, 0, shield_pt(&blocks.a1)?), (3, 3, shield_pt(&blocks.a2)?)]);
    // Γ on key_B sends |00⟩⟨11| to |01⟩⟨10|, so C lands in the anti-correlated sector
    let acorr_w = place(&[
        (1, 1, shield_pt(&blocks.b1)?),
        (1, 2, shield_pt(&blocks.c)?),
        (2, 1, shield_pt(&blocks.c.adjoint())?),
        (2, 2, shield_pt(&blocks.b2)?),
    ]);
    let reconstruction_residual = crate::linalg::max_abs_diff(&full_pt, &(&corr_w + &acorr_w));

    let alpha = (norms.a1 + norms.a2) / 2.0;
    let beta = (norms.b1 + norms.b2) / 2.0;
    let summand = |w: &ComplexMatrix, weight: f64| -> Result<(Option<f64>, Option<f64>)> {
        if weight <= tol::PROB {
            return Ok((None, None));
        }
        let state = w.scale(1.0 / (2.0 * weight));
        Ok((Some((state.trace().re - 1.0).abs()), Some(min_eigenvalue(&state)?)))
    };
    let (corr_trace_residual, corr_min_eigenvalue) = summand(&corr_w, alpha)?;
    let (acorr_trace_residual, acorr_min_eigenvalue) = summand(&acorr_w, beta)?;
    Ok(DecompositionReport {
        alpha,
        beta,
        ppt_min_eigenvalue: ppt_min,
        reconstruction_residual,
        corr_trace_residual,
        acorr_trace_residual,
        corr_min_eigenvalue,
        acorr_min_eigenvalue,
    })
}

/// Closed-form bounds for `ρ_d` at the PPT mixing weight `p = 1/(√d+1)`:
/// lower `1 − H((√d, 1/2, 1/2)/(√d+1))`, upper `1/(√d+1)`.
///
/// No matrices are built, so any `d ≥ 1` is accepted.
pub fn rho_d_bounds(d: u64) -> Result<BoundReport> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be at least 1".into()));
    }
    let r = (d as f64).sqrt();
    let probs = ProbabilityVector::from_weights(&[r, 0.5, 0.5])?;
    let lower = 1.0 - shannon_entropy(&probs);
    let upper = 1.0 / (r + 1.0);
    Ok(BoundReport::new(lower, upper))
}

/// One `(a, α)` point of the gap region, with `γ = αa` and `β = 1/2 − α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionPoint {
    pub a: f64,
    pub alpha: f64,
    /// `H((1+a)α, (1−a)α, 1/2−α, 1/2−α)`.
    pub entropy_value: f64,
    /// `2α`.
    pub threshold_value: f64,
    pub in_gap: bool,
}

pub fn gap_condition(alpha: f64, a: f64) -> Result<RegionPoint> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::InvalidParameter(format!("a = {a} outside [0, 1]")));
    }
    if !(0.0..=0.5).contains(&alpha) {
        return Err(Error::InvalidParameter(format!("alpha = {alpha} outside [0, 1/2]")));
    }
    let beta = 0.5 - alpha;
    let probs = ProbabilityVector::from_weights(&[(1.0 + a) * alpha, (1.0 - a) * alpha, beta, beta])?;
    let entropy_value = shannon_entropy(&probs);
    let threshold_value = 2.0 * alpha;
    Ok(RegionPoint { a, alpha, entropy_value, threshold_value, in_gap: entropy_value < threshold_value - TAU_GAP })
}

fn grid(count: usize, hi: f64) -> impl Fn(usize) -> f64 {
    move |i| if i + 1 == count { hi } else { hi * i as f64 / (count - 1) as f64 }
}

/// Evaluates [`gap_condition`] on a uniform grid over `[0,1] x [0,1/2]`,
/// `a` outer and `α` inner. Output order does not depend on scheduling.
pub fn region_sweep(a_grid: usize, alpha_grid: usize) -> Result<Vec<RegionPoint>> {
    if a_grid < 2 || alpha_grid < 2 {
        return Err(Error::InvalidParameter(format!("grid counts must be at least 2, got {a_grid} x {alpha_grid}")));
    }
    let a_at = grid(a_grid, 1.0);
    let alpha_at = grid(alpha_grid, 0.5);
    (0..a_grid * alpha_grid)
        .into_par_iter()
        .map(|k| gap_condition(alpha_at(k % alpha_grid), a_at(k / alpha_grid)))
        .collect()
}

/// Smallest `α` in the gap region for fixed `a`, located by bisection to
/// within `tol`. Returns `None` if even `α = 1/2` is outside the region.
///
/// Assumes the region is an interval `(α*, 1/2]` in `α` for fixed `a`.
pub fn gap_boundary_alpha(a: f64, tol: f64) -> Result<Option<f64>> {
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("bisection tolerance {tol} must be positive")));
    }
    if !gap_condition(0.5, a)?.in_gap {
        return Ok(None);
    }
    let (mut lo, mut hi) = (0.0, 0.5);
    if gap_condition(lo, a)?.in_gap {
        return Ok(Some(lo));
    }
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        if gap_condition(mid, a)?.in_gap {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(Some(hi))
}

/// Least `d` in `[lo, hi]` whose report establishes a gap.
///
/// The gap is first scanned at a coarse stride and must be nondecreasing
/// there; the threshold is then located by bisection.
pub fn threshold_search<F>(predicate: F, lo: u64, hi: u64) -> Result<u64>
where
    F: Fn(u64) -> Result<BoundReport>,
{
    if lo > hi {
        return Err(Error::InvalidParameter(format!("empty range [{lo}, {hi}]")));
    }
    const SCAN_POINTS: u64 = 64;
    let stride = ((hi - lo) / SCAN_POINTS).max(1);
    let mut prev: Option<(u64, f64)> = None;
    let mut d = lo;
    loop {
        let gap = predicate(d)?.gap;
        if let Some((pd, pg)) = prev {
            if gap < pg - TAU_GAP {
                return Err(Error::NotMonotone { prev: pd, at: d });
            }
        }
        prev = Some((d, gap));
        if d == hi {
            break;
        }
        d = d.saturating_add(stride).min(hi);
    }

    if predicate(lo)?.gap_established {
        return Ok(lo);
    }
    if !predicate(hi)?.gap_established {
        return Err(Error::NoThreshold { lo, hi });
    }
    // invariant: lo has no gap, hi has one
    let (mut l, mut h) = (lo, hi);
    while h - l > 1 {
        let mid = l + (h - l) / 2;
        if predicate(mid)?.gap_established {
            h = mid;
        } else {
            l = mid;
        }
    }
    Ok(h)
}
