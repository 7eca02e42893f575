//! Measurement devices on bipartite states and the partial-transpose attack.
//!
//! A device is a family of POVMs on each side plus a shared state. Its only
//! observable content is the table `p(a,b|x,y) = tr[(A_a^x ⊗ B_b^y) ρ]`. If
//! `ρ` is PPT, replacing `ρ` by `ρ^Γ` and every Bob effect by its transpose
//! yields another valid device with the same table.

use std::io::{self, Write};

use crate::linalg::{self, hermitize, min_eigenvalue, partial_transpose, tol, ComplexMatrix, DensityMatrix, C64};
use crate::{Error, Result};

/// Tolerance on `Σ_k E_k = I`.
const COMPLETENESS_TOL: f64 = 1e-10;

/// A positive operator-valued measure.
#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    effects: Vec<ComplexMatrix>,
}

impl Povm {
    /// Validates the effects and stores them symmetrized.
    pub fn new(effects: Vec<ComplexMatrix>) -> Result<Self> {
        let Some(first) = effects.first() else {
            return Err(Error::InvalidParameter("POVM needs at least one effect".into()));
        };
        let dim = first.nrows();
        let mut sym = Vec::with_capacity(effects.len());
        for e in &effects {
            if e.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch(format!("POVM effects must all be {dim}x{dim}")));
            }
            let h = hermitize(e)?;
            let min = min_eigenvalue(&h)?;
            if min < -tol::PSD {
                return Err(Error::NotPositive { min_eigenvalue: min });
            }
            sym.push(h);
        }
        let total = sym.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, e| acc + e);
        let deviation = linalg::max_abs_diff(&total, &ComplexMatrix::identity(dim, dim));
        if deviation > COMPLETENESS_TOL {
            return Err(Error::InvalidParameter(format!("POVM effects sum to identity only within {deviation:.3e}")));
        }
        Ok(Povm { effects: sym })
    }

    /// Projective measurement in the computational basis.
    pub fn computational(dim: usize) -> Self {
        let effects = (0..dim)
            .map(|k| {
                let mut e = ComplexMatrix::zeros(dim, dim);
                e[(k, k)] = C64::new(1.0, 0.0);
                e
            })
            .collect();
        Povm { effects }
    }

    /// The one-outcome measurement `{I}`.
    pub fn trivial(dim: usize) -> Self {
        Povm { effects: vec![ComplexMatrix::identity(dim, dim)] }
    }

    pub fn effects(&self) -> &[ComplexMatrix] {
        &self.effects
    }

    pub fn outcomes(&self) -> usize {
        self.effects.len()
    }

    pub fn dim(&self) -> usize {
        self.effects[0].nrows()
    }

    /// Every effect transposed. Transposition preserves positivity and
    /// completeness, so no revalidation is needed.
    pub fn transposed(&self) -> Povm {
        Povm { effects: self.effects.iter().map(|e| e.transpose()).collect() }
    }
}

/// Alice's measurements (indexed by `x`) and Bob's (indexed by `y`).
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    alice: Vec<Povm>,
    bob: Vec<Povm>,
}

impl MeasurementSet {
    pub fn new(alice: Vec<Povm>, bob: Vec<Povm>) -> Result<Self> {
        if alice.is_empty() || bob.is_empty() {
            return Err(Error::InvalidParameter("each side needs at least one measurement".into()));
        }
        for (side, povms) in [("Alice", &alice), ("Bob", &bob)] {
            let dim = povms[0].dim();
            if povms.iter().any(|p| p.dim() != dim) {
                return Err(Error::DimensionMismatch(format!("{side}'s measurements act on different dimensions")));
            }
        }
        Ok(MeasurementSet { alice, bob })
    }

    pub fn alice(&self) -> &[Povm] {
        &self.alice
    }

    pub fn bob(&self) -> &[Povm] {
        &self.bob
    }

    pub fn dim_a(&self) -> usize {
        self.alice[0].dim()
    }

    pub fn dim_b(&self) -> usize {
        self.bob[0].dim()
    }

    /// Same set with every Bob effect transposed.
    pub fn with_bob_transposed(&self) -> MeasurementSet {
        MeasurementSet { alice: self.alice.clone(), bob: self.bob.iter().map(Povm::transposed).collect() }
    }
}

/// Measurements acting on a shared bipartite state.
#[derive(Debug, Clone, PartialEq)]
pub struct StateDevice {
    measurements: MeasurementSet,
    state: DensityMatrix,
}

impl StateDevice {
    pub fn new(measurements: MeasurementSet, state: DensityMatrix) -> Result<Self> {
        let want = [measurements.dim_a(), measurements.dim_b()];
        if state.dims() != want {
            return Err(Error::DimensionMismatch(format!(
                "state dims {:?} do not match measurement dims {:?}",
                state.dims(),
                want
            )));
        }
        Ok(StateDevice { measurements, state })
    }

    pub fn measurements(&self) -> &MeasurementSet {
        &self.measurements
    }

    pub fn state(&self) -> &DensityMatrix {
        &self.state
    }
}

/// The table `p(a,b|x,y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalDistribution {
    alice_outcomes: Vec<usize>,
    bob_outcomes: Vec<usize>,
    /// `rows[x * n_y + y][a * n_b(y) + b]`
    rows: Vec<Vec<f64>>,
}

impl ConditionalDistribution {
    /// Builds a table from explicit rows, checking shape and normalization.
    pub fn from_rows(alice_outcomes: Vec<usize>, bob_outcomes: Vec<usize>, rows: Vec<Vec<f64>>) -> Result<Self> {
        if rows.len() != alice_outcomes.len() * bob_outcomes.len() {
            return Err(Error::DimensionMismatch("row count does not match settings".into()));
        }
        for (k, row) in rows.iter().enumerate() {
            let (x, y) = (k / bob_outcomes.len(), k % bob_outcomes.len());
            if row.len() != alice_outcomes[x] * bob_outcomes[y] {
                return Err(Error::DimensionMismatch(format!("row ({x},{y}) has the wrong number of outcomes")));
            }
            let sum: f64 = row.iter().sum();
            if row.iter().any(|p| !(*p >= -tol::PROB)) || (sum - 1.0).abs() > tol::PROB {
                return Err(Error::InvalidProbabilities(format!("row ({x},{y}) is not a distribution")));
            }
        }
        Ok(ConditionalDistribution { alice_outcomes, bob_outcomes, rows })
    }

    pub fn settings(&self) -> (usize, usize) {
        (self.alice_outcomes.len(), self.bob_outcomes.len())
    }

    pub fn outcomes(&self, x: usize, y: usize) -> (usize, usize) {
        (self.alice_outcomes[x], self.bob_outcomes[y])
    }

    /// `p(a,b|x,y)`.
    pub fn get(&self, x: usize, y: usize, a: usize, b: usize) -> f64 {
        let ny = self.bob_outcomes.len();
        self.rows[x * ny + y][a * self.bob_outcomes[y] + b]
    }

    /// The distribution over `(a, b)` for settings `(x, y)`, `a` major.
    pub fn row(&self, x: usize, y: usize) -> &[f64] {
        &self.rows[x * self.bob_outcomes.len() + y]
    }

    /// Iterates `(x, y, a, b, p)` in lexicographic order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, usize, usize, f64)> + '_ {
        let ny = self.bob_outcomes.len();
        self.rows.iter().enumerate().flat_map(move |(k, row)| {
            let (x, y) = (k / ny, k % ny);
            let nb = self.bob_outcomes[y];
            row.iter().enumerate().map(move |(i, &p)| (x, y, i / nb, i % nb, p))
        })
    }

    fn same_shape(&self, other: &Self) -> bool {
        self.alice_outcomes == other.alice_outcomes && self.bob_outcomes == other.bob_outcomes
    }

    /// CSV with header `x,y,a,b,p` and shortest round-trip floats.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "x,y,a,b,p")?;
        for (x, y, a, b, p) in self.entries() {
            writeln!(w, "{x},{y},{a},{b},{p}")?;
        }
        Ok(())
    }
}

/// Statistics of `measurements` on the bipartite matrix `rho` (dims `dA x dB`).
pub(crate) fn statistics(measurements: &MeasurementSet, rho: &ComplexMatrix) -> ConditionalDistribution {
    let da = measurements.dim_a();
    let db = measurements.dim_b();
    debug_assert_eq!(rho.nrows(), da * db);
    let bob_outcomes: Vec<usize> = measurements.bob.iter().map(Povm::outcomes).collect();
    let alice_outcomes: Vec<usize> = measurements.alice.iter().map(Povm::outcomes).collect();
    let mut rows = vec![Vec::new(); alice_outcomes.len() * bob_outcomes.len()];
    for (x, povm_a) in measurements.alice.iter().enumerate() {
        // reduced operators tr_A[(A ⊗ I) ρ] for each Alice outcome
        let reduced: Vec<ComplexMatrix> = povm_a
            .effects
            .iter()
            .map(|ea| {
                let mut mb = ComplexMatrix::zeros(db, db);
                for k in 0..db {
                    for l in 0..db {
                        let mut acc = C64::new(0.0, 0.0);
                        for i in 0..da {
                            for j in 0..da {
                                acc += ea[(i, j)] * rho[(j * db + k, i * db + l)];
                            }
                        }
                        mb[(k, l)] = acc;
                    }
                }
                mb
            })
            .collect();
        for (y, povm_b) in measurements.bob.iter().enumerate() {
            let row = &mut rows[x * bob_outcomes.len() + y];
            for mb in &reduced {
                for eb in &povm_b.effects {
                    // Re tr[B M] = Re Σ B_kl M_lk
                    let mut acc = C64::new(0.0, 0.0);
                    for k in 0..db {
                        for l in 0..db {
                            acc += eb[(k, l)] * mb[(l, k)];
                        }
                    }
                    row.push(acc.re);
                }
            }
        }
    }
    ConditionalDistribution { alice_outcomes, bob_outcomes, rows }
}

pub fn device_statistics(dev: &StateDevice) -> ConditionalDistribution {
    statistics(&dev.measurements, dev.state.matrix())
}

/// Replaces `(ρ, B_b^y)` by `(ρ^Γ, (B_b^y)^T)`. Requires `ρ` PPT.
pub fn transpose_attack(dev: &StateDevice) -> Result<StateDevice> {
    let pt = partial_transpose(&dev.state, 1)?;
    let min = min_eigenvalue(&pt)?;
    if min < -tol::PSD {
        return Err(Error::NotPpt { min_eigenvalue: min });
    }
    let state = DensityMatrix::new(pt, dev.state.dims().to_vec())?;
    Ok(StateDevice { measurements: dev.measurements.with_bob_transposed(), state })
}

/// `sup_{x,y} ‖p(·|x,y) − q(·|x,y)‖₁`.
pub fn distribution_distance(p: &ConditionalDistribution, q: &ConditionalDistribution) -> Result<f64> {
    if !p.same_shape(q) {
        return Err(Error::DimensionMismatch("distributions have different settings or outcomes".into()));
    }
    Ok(p.rows
        .iter()
        .zip(&q.rows)
        .map(|(r, s)| r.iter().zip(s).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .fold(0.0, f64::max))
}

/// Whether the two devices' statistics are within `eps` of each other.
pub fn devices_equivalent(d1: &StateDevice, d2: &StateDevice, eps: f64) -> Result<bool> {
    if !(eps >= 0.0) {
        return Err(Error::InvalidParameter(format!("eps = {eps} must be nonnegative")));
    }
    Ok(distribution_distance(&device_statistics(d1), &device_statistics(d2))? <= eps)
}
