//! Bell-diagonal and block Bell-diagonal state families.
//!
//! A block Bell-diagonal state lives on two key qubits and two shield qudits
//! of dimension `d`. Its matrix is assembled with factor order
//! `(key_A, key_B, shield_A, shield_B)`, so dims are `[2, 2, d, d]` and the
//! `4 x 4` grid of `d² x d²` blocks is indexed by the key pair
//! `00, 01, 10, 11`:
//!
//! ```text
//!   [ A1   0    0    C  ]
//!   [ 0    B1   D    0  ]
//!   [ 0    D†   B2   0  ]
//!   [ C†   0    0    A2 ]
//! ```
//!
//! Inside each block the shield index is `a' * d + b'`. Bob's side of the
//! A|B cut is factors `{1, 3}` ([`BOB_CUT`]).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::linalg::{
    self, permute_subsystems, psd_sqrt, real, tol, trace_norm, ComplexMatrix, DenseLimit, DensityMatrix, C64,
};
use crate::{Error, Result};

/// Factors transposed by the A|B partial transpose of a block state.
pub const BOB_CUT: [usize; 2] = [1, 3];

/// Normalized Bell-diagonal parameters.
///
/// The Bell-state probabilities are `λ = (α+γ, α−γ, β+δ, β−δ)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BellParams {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl BellParams {
    pub fn new(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let p = BellParams { alpha, beta, gamma, delta };
        p.validate()?;
        Ok(p)
    }

    /// Rescales so that `2α + 2β = 1`.
    pub fn normalized(alpha: f64, beta: f64, gamma: f64, delta: f64) -> Result<Self> {
        let s = 2.0 * alpha + 2.0 * beta;
        if !(s > 0.0) || !s.is_finite() {
            return Err(Error::InvalidParameter(format!("cannot normalize: 2α+2β = {s}")));
        }
        BellParams::new(alpha / s, beta / s, gamma / s, delta / s)
    }

    fn validate(&self) -> Result<()> {
        let BellParams { alpha, beta, gamma, delta } = *self;
        for (name, v) in [("alpha", alpha), ("beta", beta), ("gamma", gamma), ("delta", delta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {v} must be a nonnegative number")));
            }
        }
        if (2.0 * alpha + 2.0 * beta - 1.0).abs() > tol::PROB {
            return Err(Error::InvalidParameter(format!("2α+2β = {} ≠ 1", 2.0 * alpha + 2.0 * beta)));
        }
        if gamma > alpha + tol::PROB || delta > beta + tol::PROB {
            return Err(Error::InvalidParameter(format!(
                "need γ ≤ α and δ ≤ β, got (α,β,γ,δ) = ({alpha}, {beta}, {gamma}, {delta})"
            )));
        }
        Ok(())
    }

    /// Bell-state probabilities `(α+γ, α−γ, β+δ, β−δ)`.
    pub fn lambdas(&self) -> [f64; 4] {
        [
            self.alpha + self.gamma,
            (self.alpha - self.gamma).max(0.0),
            self.beta + self.delta,
            (self.beta - self.delta).max(0.0),
        ]
    }
}

/// Two-qubit Bell-diagonal state with diagonal `(α, β, β, α)`, corners `γ` and
/// inner off-diagonal `δ`.
pub fn make_bell_diagonal(p: &BellParams) -> DensityMatrix {
    let s = 2.0 * p.alpha + 2.0 * p.beta;
    let mut m = ComplexMatrix::zeros(4, 4);
    m[(0, 0)] = real(p.alpha / s);
    m[(3, 3)] = real(p.alpha / s);
    m[(1, 1)] = real(p.beta / s);
    m[(2, 2)] = real(p.beta / s);
    m[(0, 3)] = real(p.gamma / s);
    m[(3, 0)] = real(p.gamma / s);
    m[(1, 2)] = real(p.delta / s);
    m[(2, 1)] = real(p.delta / s);
    DensityMatrix::new(m, vec![2, 2]).expect("valid BellParams give a state")
}

/// `(α^m, β^m, γ^m, δ^m) / (2α^m + 2β^m)`.
pub fn bell_power_params(p: &BellParams, m: u32) -> Result<BellParams> {
    if m == 0 {
        return Err(Error::InvalidParameter("power m must be at least 1".into()));
    }
    if m == 1 {
        return Ok(*p);
    }
    // scale by the largest entry first so the powers cannot underflow together
    let scale = p.alpha.max(p.beta);
    let pw = |x: f64| (x / scale).powi(m as i32);
    BellParams::normalized(pw(p.alpha), pw(p.beta), pw(p.gamma), pw(p.delta))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitaryKind {
    Fourier,
    Hadamard,
}

/// A `d x d` unitary whose entries all have modulus `1/√d`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct UnitaryChoice {
    kind: UnitaryKind,
    d: usize,
}

impl UnitaryChoice {
    pub fn new(kind: UnitaryKind, d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidParameter("unitary dimension must be positive".into()));
        }
        if kind == UnitaryKind::Hadamard && !d.is_power_of_two() {
            return Err(Error::InvalidParameter(format!("Hadamard power needs d a power of two, got {d}")));
        }
        Ok(UnitaryChoice { kind, d })
    }

    pub fn kind(&self) -> UnitaryKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> ComplexMatrix {
        let d = self.d;
        let norm = 1.0 / (d as f64).sqrt();
        match self.kind {
            UnitaryKind::Fourier => ComplexMatrix::from_fn(d, d, |j, k| {
                // reduce the exponent mod d before taking the angle
                let angle = 2.0 * PI * ((j * k) % d) as f64 / d as f64;
                C64::from_polar(norm, angle)
            }),
            UnitaryKind::Hadamard => ComplexMatrix::from_fn(d, d, |j, k| {
                let sign = if (j & k).count_ones() % 2 == 0 { 1.0 } else { -1.0 };
                real(sign * norm)
            }),
        }
    }
}

/// The blocks of a block Bell-diagonal state. Weights are folded into the
/// blocks, so `‖A1‖₁ = α` and `‖B1‖₁ = β`.
#[derive(Debug, Clone, PartialEq)]
pub struct Blocks {
    pub a1: ComplexMatrix,
    pub a2: ComplexMatrix,
    pub b1: ComplexMatrix,
    pub b2: ComplexMatrix,
    pub c: ComplexMatrix,
    /// Absent means zero.
    pub d: Option<ComplexMatrix>,
}

/// A block Bell-diagonal state: key qubits plus a `d`-dimensional shield on
/// each side.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockBellState {
    shield_dim: usize,
    blocks: Blocks,
    state: DensityMatrix,
}

impl BlockBellState {
    /// Assembles and validates the full `4d² x 4d²` state.
    ///
    /// Trace-norm symmetry between `A1/A2` and `B1/B2` is not enforced here;
    /// [`privacy_squeeze`] checks it.
    pub fn new(shield_dim: usize, blocks: Blocks, limit: DenseLimit) -> Result<Self> {
        if shield_dim == 0 {
            return Err(Error::InvalidParameter("shield dimension must be positive".into()));
        }
        let n = shield_dim * shield_dim;
        limit.check(4 * n)?;
        let all = [&blocks.a1, &blocks.a2, &blocks.b1, &blocks.b2, &blocks.c];
        if all.iter().copied().chain(blocks.d.as_ref()).any(|b| b.shape() != (n, n)) {
            return Err(Error::DimensionMismatch(format!("every block must be {n}x{n}")));
        }
        let mut m = ComplexMatrix::zeros(4 * n, 4 * n);
        let mut put = |row: usize, col: usize, b: &ComplexMatrix| {
            m.view_mut((row * n, col * n), (n, n)).copy_from(b);
        };
        put(0, 0, &blocks.a1);
        put(1, 1, &blocks.b1);
        put(2, 2, &blocks.b2);
        put(3, 3, &blocks.a2);
        put(0, 3, &blocks.c);
        put(3, 0, &blocks.c.adjoint());
        if let Some(d) = &blocks.d {
            put(1, 2, d);
            put(2, 1, &d.adjoint());
        }
        let state = DensityMatrix::new(m, vec![2, 2, shield_dim, shield_dim])?;
        Ok(BlockBellState { shield_dim, blocks, state })
    }

    pub fn shield_dim(&self) -> usize {
        self.shield_dim
    }

    pub fn blocks(&self) -> &Blocks {
        &self.blocks
    }

    pub fn density_matrix(&self) -> &DensityMatrix {
        &self.state
    }

    /// Trace norms of `(A1, A2, B1, B2, C, D)`.
    pub fn block_norms(&self) -> BlockNorms {
        let b = &self.blocks;
        BlockNorms {
            a1: trace_norm(&b.a1),
            a2: trace_norm(&b.a2),
            b1: trace_norm(&b.b1),
            b2: trace_norm(&b.b2),
            c: trace_norm(&b.c),
            d: b.d.as_ref().map_or(0.0, trace_norm),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockNorms {
    pub a1: f64,
    pub a2: f64,
    pub b1: f64,
    pub b2: f64,
    pub c: f64,
    pub d: f64,
}

/// `X = (1/(d√d)) Σ u_ij |ij⟩⟨ji|` on the shield pair, with `u` the chosen
/// unitary scaled to have entries of modulus `1/√d`.
pub fn shield_x(u: &UnitaryChoice) -> ComplexMatrix {
    let d = u.dim();
    let um = u.matrix();
    let scale = 1.0 / (d as f64 * (d as f64).sqrt());
    let mut x = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            x[(i * d + j, j * d + i)] = um[(i, j)] * scale;
        }
    }
    x
}

/// `Y = (1/d) Σ |ii⟩⟨ii|`.
pub fn shield_y(d: usize) -> ComplexMatrix {
    let mut y = ComplexMatrix::zeros(d * d, d * d);
    for i in 0..d {
        y[(i * d + i, i * d + i)] = real(1.0 / d as f64);
    }
    y
}

/// Mixing weight that makes `ρ_d` PPT: `1/(√d + 1)`.
pub fn default_p(d: usize) -> f64 {
    1.0 / ((d as f64).sqrt() + 1.0)
}

/// The `ρ_d` family: `A1 = (1−p)√(XX†)/2`, `A2 = (1−p)√(X†X)/2`,
/// `B1 = B2 = pY/2`, `C = (1−p)X/2`, `D = 0`.
pub fn make_rho_d(d: usize, u: &UnitaryChoice, p: f64, limit: DenseLimit) -> Result<BlockBellState> {
    if u.dim() != d {
        return Err(Error::DimensionMismatch(format!("unitary has dimension {}, expected {d}", u.dim())));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("p = {p} outside [0, 1]")));
    }
    limit.check(4 * d * d)?;
    let x = shield_x(u);
    let y = shield_y(d);
    let w = (1.0 - p) / 2.0;
    let blocks = Blocks {
        a1: psd_sqrt(&(&x * x.adjoint()))?.scale(w),
        a2: psd_sqrt(&(x.adjoint() * &x))?.scale(w),
        b1: y.scale(p / 2.0),
        b2: y.scale(p / 2.0),
        c: x.scale(w),
        d: None,
    };
    BlockBellState::new(d, blocks, limit)
}

/// Replaces each block by its trace norm: `(α, β, γ, δ) = (‖A1‖₁, ‖B1‖₁, ‖C‖₁, ‖D‖₁)`.
pub fn privacy_squeeze(s: &BlockBellState) -> Result<BellParams> {
    const SYM_TOL: f64 = 1e-10;
    let n = s.block_norms();
    if (n.a1 - n.a2).abs() > SYM_TOL {
        return Err(Error::NormAsymmetry(format!("‖A1‖₁ = {} but ‖A2‖₁ = {}", n.a1, n.a2)));
    }
    if (n.b1 - n.b2).abs() > SYM_TOL {
        return Err(Error::NormAsymmetry(format!("‖B1‖₁ = {} but ‖B2‖₁ = {}", n.b1, n.b2)));
    }
    BellParams::new(n.a1, n.b1, n.c, n.d)
}

fn tensor_power(m: &ComplexMatrix, k: u32) -> ComplexMatrix {
    let mut out = m.clone();
    for _ in 1..k {
        out = out.kronecker(m);
    }
    out
}

/// Advantage distillation on the key qubits of `m` copies: each block becomes
/// its `m`-fold tensor power and the result is renormalized.
///
/// The shield factors of the copies are regrouped as `(A'_1..A'_m, B'_1..B'_m)`
/// so the output is again a block state with shield dimension `d^m`.
pub fn advantage_distill_block(s: &BlockBellState, m: u32, limit: DenseLimit) -> Result<BlockBellState> {
    if m == 0 {
        return Err(Error::InvalidParameter("number of copies m must be at least 1".into()));
    }
    if m == 1 {
        return Ok(s.clone());
    }
    let d = s.shield_dim;
    let new_d = d
        .checked_pow(m)
        .filter(|nd| nd.checked_mul(*nd).and_then(|x| x.checked_mul(4)).is_some())
        .ok_or(Error::DenseLimitExceeded { side: usize::MAX, limit: limit.0 })?;
    limit.check(4 * new_d * new_d)?;

    let dims = vec![d; 2 * m as usize];
    let perm: Vec<usize> = (0..m as usize).map(|k| 2 * k).chain((0..m as usize).map(|k| 2 * k + 1)).collect();
    let power = |b: &ComplexMatrix| permute_subsystems(&tensor_power(b, m), &dims, &perm);

    let b = &s.blocks;
    let mut blocks = Blocks {
        a1: power(&b.a1)?,
        a2: power(&b.a2)?,
        b1: power(&b.b1)?,
        b2: power(&b.b2)?,
        c: power(&b.c)?,
        d: b.d.as_ref().map(power).transpose()?,
    };
    let total = (blocks.a1.trace() + blocks.a2.trace() + blocks.b1.trace() + blocks.b2.trace()).re;
    if !(total > 0.0) {
        return Err(Error::NotNormalized { trace: total });
    }
    let inv = 1.0 / total;
    for blk in [&mut blocks.a1, &mut blocks.a2, &mut blocks.b1, &mut blocks.b2, &mut blocks.c] {
        *blk = blk.scale(inv);
    }
    if let Some(dd) = blocks.d.as_mut() {
        *dd = dd.scale(inv);
    }
    BlockBellState::new(new_d, blocks, limit)
}

/// Block state with a one-dimensional shield holding the given Bell
/// parameters; useful as a trivial-shield reference.
pub fn trivial_shield(p: &BellParams) -> Result<BlockBellState> {
    let one = |v: f64| ComplexMatrix::from_element(1, 1, real(v));
    let blocks = Blocks {
        a1: one(p.alpha),
        a2: one(p.alpha),
        b1: one(p.beta),
        b2: one(p.beta),
        c: one(p.gamma),
        d: (p.delta != 0.0).then(|| one(p.delta)),
    };
    BlockBellState::new(1, blocks, DenseLimit::default())
}

/// Unitarity defect `‖UU† − I‖_max` and the worst deviation of `|u_ij|` from `1/√d`.
pub fn unitary_defects(u: &ComplexMatrix) -> (f64, f64) {
    let d = u.nrows();
    let id = ComplexMatrix::identity(d, d);
    let unitarity = linalg::max_abs_diff(&(u * u.adjoint()), &id);
    let target = 1.0 / (d as f64).sqrt();
    let modulus = u.iter().map(|z| (z.norm() - target).abs()).fold(0.0, f64::max);
    (unitarity, modulus)
}
