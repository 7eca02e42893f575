//! Channels in Choi form and the channel version of the transpose attack.
//!
//! The Choi matrix is normalized: `J(Λ) = (id ⊗ Λ)(Φ)` with `Φ` the maximally
//! entangled state on `d_in ⊗ d_in`, input factor first. Then `Λ` is
//! completely positive iff `J ≥ 0`, trace preserving iff `tr_out J = I/d_in`,
//! and completely co-positive (`θ∘Λ` is a channel, `θ` the transpose in the
//! computational basis) iff `J^Γ ≥ 0` with `Γ` on the output factor.

use crate::devices::{statistics, ConditionalDistribution, MeasurementSet, Povm};
use crate::linalg::{
    self, hermitize, min_eigenvalue, partial_trace, partial_transpose_dims, tol, ComplexMatrix, DensityMatrix, C64,
};
use crate::{Error, Result};

/// Tolerance on trace preservation and Kraus completeness.
const TP_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelChoi {
    choi: ComplexMatrix,
    d_in: usize,
    d_out: usize,
}

impl ChannelChoi {
    pub fn new(choi: ComplexMatrix, d_in: usize, d_out: usize) -> Result<Self> {
        if d_in == 0 || d_out == 0 || choi.shape() != (d_in * d_out, d_in * d_out) {
            return Err(Error::DimensionMismatch(format!(
                "Choi matrix of shape {:?} does not match d_in = {d_in}, d_out = {d_out}",
                choi.shape()
            )));
        }
        let choi = hermitize(&choi)?;
        let reduced = partial_trace(&choi, &[d_in, d_out], 1)?;
        let target = ComplexMatrix::identity(d_in, d_in).scale(1.0 / d_in as f64);
        let deviation = linalg::max_abs_diff(&reduced, &target);
        if deviation > TP_TOL {
            return Err(Error::InvalidParameter(format!(
                "channel is not trace preserving (deviation {deviation:.3e})"
            )));
        }
        let min = min_eigenvalue(&choi)?;
        if min < -tol::PSD {
            return Err(Error::NotPositive { min_eigenvalue: min });
        }
        Ok(ChannelChoi { choi, d_in, d_out })
    }

    pub fn choi(&self) -> &ComplexMatrix {
        &self.choi
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn identity(d: usize) -> Self {
        let choi = choi_of_map(d, |x| x.clone());
        ChannelChoi { choi, d_in: d, d_out: d }
    }

    /// `ρ ↦ tr(ρ) I/d_out`.
    pub fn fully_depolarizing(d_in: usize, d_out: usize) -> Self {
        let n = d_in * d_out;
        ChannelChoi { choi: ComplexMatrix::identity(n, n).scale(1.0 / n as f64), d_in, d_out }
    }

    /// `ρ ↦ Σ_k tr(E_k ρ) σ_k`; its Choi matrix is `(1/d_in) Σ_k E_k^T ⊗ σ_k`.
    pub fn measure_and_prepare(povm: &Povm, outputs: &[DensityMatrix]) -> Result<Self> {
        if outputs.len() != povm.outcomes() {
            return Err(Error::DimensionMismatch(format!(
                "{} outputs for {} POVM outcomes",
                outputs.len(),
                povm.outcomes()
            )));
        }
        let d_in = povm.dim();
        let d_out = outputs[0].side();
        if outputs.iter().any(|s| s.side() != d_out) {
            return Err(Error::DimensionMismatch("prepared states differ in dimension".into()));
        }
        let mut choi = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
        for (e, s) in povm.effects().iter().zip(outputs) {
            choi += e.transpose().kronecker(s.matrix());
        }
        ChannelChoi::new(choi.scale(1.0 / d_in as f64), d_in, d_out)
    }
}

/// Choi matrix `(1/d_in) Σ_ij |i⟩⟨j| ⊗ f(|i⟩⟨j|)` of an arbitrary linear map,
/// without any positivity check.
pub fn choi_of_map<F>(d_in: usize, f: F) -> ComplexMatrix
where
    F: Fn(&ComplexMatrix) -> ComplexMatrix,
{
    let mut choi: Option<ComplexMatrix> = None;
    for i in 0..d_in {
        for j in 0..d_in {
            let mut eij = ComplexMatrix::zeros(d_in, d_in);
            eij[(i, j)] = C64::new(1.0, 0.0);
            let term = eij.kronecker(&f(&eij));
            choi = Some(match choi {
                Some(acc) => acc + term,
                None => term,
            });
        }
    }
    choi.expect("d_in must be positive").scale(1.0 / d_in as f64)
}

/// Choi matrix of the channel with Kraus operators `kraus` (each `d_out x d_in`).
pub fn choi_from_kraus(kraus: &[ComplexMatrix]) -> Result<ChannelChoi> {
    let Some(first) = kraus.first() else {
        return Err(Error::InvalidParameter("need at least one Kraus operator".into()));
    };
    let (d_out, d_in) = first.shape();
    if kraus.iter().any(|k| k.shape() != (d_out, d_in)) {
        return Err(Error::DimensionMismatch("Kraus operators differ in shape".into()));
    }
    let sum = kraus.iter().fold(ComplexMatrix::zeros(d_in, d_in), |acc, k| acc + k.adjoint() * k);
    let deviation = linalg::max_abs_diff(&sum, &ComplexMatrix::identity(d_in, d_in));
    if deviation > TP_TOL {
        return Err(Error::KrausIncomplete { deviation });
    }
    let choi = choi_of_map(d_in, |x| {
        kraus.iter().fold(ComplexMatrix::zeros(d_out, d_out), |acc, k| acc + k * x * k.adjoint())
    });
    ChannelChoi::new(choi, d_in, d_out)
}

/// `(id ⊗ Λ)(ρ)` with `Λ` acting on factor `subsystem`, computed by
/// contracting with the Choi matrix.
pub fn apply_channel(c: &ChannelChoi, rho: &DensityMatrix, subsystem: usize) -> Result<DensityMatrix> {
    let dims = rho.dims();
    if subsystem >= dims.len() {
        return Err(Error::SubsystemOutOfRange { index: subsystem, count: dims.len() });
    }
    if dims[subsystem] != c.d_in {
        return Err(Error::DimensionMismatch(format!(
            "factor {subsystem} has dimension {}, channel expects {}",
            dims[subsystem], c.d_in
        )));
    }
    let left: usize = dims[..subsystem].iter().product();
    let right: usize = dims[subsystem + 1..].iter().product();
    let (di, dout) = (c.d_in, c.d_out);
    let m = rho.matrix();
    let j = &c.choi;
    let side = left * dout * right;
    let mut out = ComplexMatrix::zeros(side, side);
    let at = |l: usize, k: usize, r: usize, d: usize| (l * d + k) * right + r;
    for l in 0..left {
        for r in 0..right {
            for l2 in 0..left {
                for r2 in 0..right {
                    for i in 0..di {
                        for i2 in 0..di {
                            let x = m[(at(l, i, r, di), at(l2, i2, r2, di))];
                            if x == C64::new(0.0, 0.0) {
                                continue;
                            }
                            for o in 0..dout {
                                for o2 in 0..dout {
                                    out[(at(l, o, r, dout), at(l2, o2, r2, dout))] +=
                                        x * j[(i * dout + o, i2 * dout + o2)];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    let mut new_dims = dims.to_vec();
    new_dims[subsystem] = dout;
    DensityMatrix::new(out.scale(di as f64), new_dims)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CopositivityTest {
    pub copositive: bool,
    /// Smallest eigenvalue of the output-transposed Choi matrix.
    pub min_eigenvalue: f64,
}

pub fn is_completely_copositive(c: &ChannelChoi) -> CopositivityTest {
    let pt = partial_transpose_dims(&c.choi, &[c.d_in, c.d_out], &[1]).expect("Choi layout checked at construction");
    let min = min_eigenvalue(&pt).expect("partial transpose of a Hermitian matrix is Hermitian");
    CopositivityTest { copositive: min >= -tol::PSD, min_eigenvalue: min }
}

/// `θ∘Λ`, the channel followed by transposition of its output.
pub fn transpose_output(c: &ChannelChoi) -> Result<ChannelChoi> {
    let pt = partial_transpose_dims(&c.choi, &[c.d_in, c.d_out], &[1])?;
    let min = min_eigenvalue(&pt)?;
    if min < -tol::PSD {
        return Err(Error::NotCopositive { min_eigenvalue: min });
    }
    ChannelChoi::new(pt, c.d_in, c.d_out)
}

/// Alice measures her half of `ρ`; Bob measures the output of `Λ` applied to
/// the other half.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelDevice {
    measurements: MeasurementSet,
    state: DensityMatrix,
    channel: ChannelChoi,
}

impl ChannelDevice {
    pub fn new(measurements: MeasurementSet, state: DensityMatrix, channel: ChannelChoi) -> Result<Self> {
        if state.dims() != [measurements.dim_a(), channel.d_in] {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?} must be [{}, {}]",
                state.dims(),
                measurements.dim_a(),
                channel.d_in
            )));
        }
        if measurements.dim_b() != channel.d_out {
            return Err(Error::DimensionMismatch(format!(
                "Bob measures dimension {} but the channel outputs {}",
                measurements.dim_b(),
                channel.d_out
            )));
        }
        Ok(ChannelDevice { measurements, state, channel })
    }

    pub fn measurements(&self) -> &MeasurementSet {
        &self.measurements
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }

    pub fn channel(&self) -> &ChannelChoi {
        &self.channel
    }
}

/// `p(ab|xy) = tr[(id ⊗ Λ)(ρ) · A_a^x ⊗ B_b^y]`.
pub fn channel_device_statistics(
    m: &MeasurementSet,
    rho: &DensityMatrix,
    c: &ChannelChoi,
) -> Result<ConditionalDistribution> {
    let dev = ChannelDevice::new(m.clone(), rho.clone(), c.clone())?;
    device_channel_statistics(&dev)
}

pub fn device_channel_statistics(dev: &ChannelDevice) -> Result<ConditionalDistribution> {
    let out = apply_channel(&dev.channel, &dev.state, 1)?;
    Ok(statistics(&dev.measurements, out.matrix()))
}

/// Replaces `(Λ, B_b^y)` by `(θ∘Λ, (B_b^y)^T)`, keeping Alice and `ρ`.
/// Requires `Λ` completely co-positive.
pub fn transpose_channel_attack(dev: &ChannelDevice) -> Result<ChannelDevice> {
    let channel = transpose_output(&dev.channel)?;
    Ok(ChannelDevice { measurements: dev.measurements.with_bob_transposed(), state: dev.state.clone(), channel })
}
