//! Seeded random generators shared by the integration tests.
#![allow(dead_code)]

use dikey::channels::ChannelChoi;
use dikey::devices::{MeasurementSet, Povm, StateDevice};
use dikey::linalg::{permute_subsystems, psd_sqrt, ComplexMatrix, DenseLimit, DensityMatrix, C64};
use dikey::states::{default_p, make_rho_d, UnitaryChoice, UnitaryKind};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub use rand::SeedableRng;

pub type TestRng = ChaCha8Rng;

pub fn rng(seed: u64) -> TestRng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn ginibre(rng: &mut TestRng, rows: usize, cols: usize) -> ComplexMatrix {
    ComplexMatrix::from_fn(rows, cols, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    })
}

pub fn random_density(rng: &mut TestRng, dims: Vec<usize>) -> DensityMatrix {
    let n: usize = dims.iter().product();
    let g = ginibre(rng, n, n);
    let w = &g * g.adjoint();
    let tr = w.trace().re;
    DensityMatrix::new(w.unscale(tr), dims).unwrap()
}

pub fn random_pure(rng: &mut TestRng, n: usize) -> ComplexMatrix {
    let v = ginibre(rng, n, 1);
    let norm = v.norm();
    let v = v.unscale(norm);
    &v * v.adjoint()
}

/// Convex mixture of `terms` random pure product states (separable, hence PPT).
pub fn random_separable(rng: &mut TestRng, da: usize, db: usize, terms: usize) -> DensityMatrix {
    let mut weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    let mut m = ComplexMatrix::zeros(da * db, da * db);
    for w in weights {
        m += random_pure(rng, da).kronecker(&random_pure(rng, db)).scale(w);
    }
    DensityMatrix::new(m, vec![da, db]).unwrap()
}

/// Random POVM: `E_k = S^{-1/2} W_k S^{-1/2}` with `W_k` random positive and
/// `S = Σ W_k`.
pub fn random_povm(rng: &mut TestRng, dim: usize, outcomes: usize) -> Povm {
    let ws: Vec<ComplexMatrix> = (0..outcomes)
        .map(|_| {
            let g = ginibre(rng, dim, dim);
            &g * g.adjoint()
        })
        .collect();
    let s = ws.iter().fold(ComplexMatrix::zeros(dim, dim), |acc, w| acc + w);
    let inv_sqrt = psd_sqrt(&s).unwrap().try_inverse().unwrap();
    let effects = ws.iter().map(|w| &inv_sqrt * w * &inv_sqrt).collect();
    Povm::new(effects).unwrap()
}

pub fn random_measurements(rng: &mut TestRng, da: usize, db: usize) -> MeasurementSet {
    let nx = rng.random_range(1..=3);
    let ny = rng.random_range(1..=3);
    let alice = (0..nx).map(|_| {
        let k = rng.random_range(2..=3);
        random_povm(rng, da, k)
    });
    let alice: Vec<Povm> = alice.collect();
    let bob: Vec<Povm> = (0..ny)
        .map(|_| {
            let k = rng.random_range(2..=3);
            random_povm(rng, db, k)
        })
        .collect();
    MeasurementSet::new(alice, bob).unwrap()
}

/// `ρ_d` regrouped as a bipartite state on `(key_A shield_A) ⊗ (key_B shield_B)`.
pub fn rho_d_bipartite(kind: UnitaryKind, d: usize) -> DensityMatrix {
    let u = UnitaryChoice::new(kind, d).unwrap();
    let s = make_rho_d(d, &u, default_p(d), DenseLimit::default()).unwrap();
    let m = permute_subsystems(s.density_matrix().matrix(), &[2, 2, d, d], &[0, 2, 1, 3]).unwrap();
    DensityMatrix::new(m, vec![2 * d, 2 * d]).unwrap()
}

/// PPT devices: mostly random separable states, plus `ρ_d` instances.
pub fn random_ppt_device(rng: &mut TestRng, index: usize) -> StateDevice {
    let state = match index % 10 {
        0 => rho_d_bipartite(UnitaryKind::Hadamard, 2),
        5 => rho_d_bipartite(UnitaryKind::Fourier, 3),
        _ => {
            let da = rng.random_range(2..=3);
            let db = rng.random_range(2..=3);
            let terms = rng.random_range(1..=6);
            random_separable(rng, da, db, terms)
        }
    };
    let (da, db) = (state.dims()[0], state.dims()[1]);
    StateDevice::new(random_measurements(rng, da, db), state).unwrap()
}

/// Measure-and-prepare channel with a random POVM and random output states.
pub fn random_measure_prepare(rng: &mut TestRng, d_in: usize, d_out: usize) -> (Povm, Vec<DensityMatrix>) {
    let k = rng.random_range(2..=4);
    let povm = random_povm(rng, d_in, k);
    let outputs = (0..k).map(|_| random_density(rng, vec![d_out])).collect();
    (povm, outputs)
}

/// Convex mixture of measure-and-prepare channels; always co-positive.
pub fn random_copositive_channel(rng: &mut TestRng, d_in: usize, d_out: usize) -> ChannelChoi {
    let terms = rng.random_range(1..=3);
    let mut choi = ComplexMatrix::zeros(d_in * d_out, d_in * d_out);
    let mut total = 0.0;
    for _ in 0..terms {
        let (povm, outputs) = random_measure_prepare(rng, d_in, d_out);
        let w = rng.random::<f64>() + 0.1;
        total += w;
        choi += ChannelChoi::measure_and_prepare(&povm, &outputs).unwrap().choi().scale(w);
    }
    ChannelChoi::new(choi.unscale(total), d_in, d_out).unwrap()
}

/// Kraus operators of a random channel, from a random isometry.
pub fn random_kraus(rng: &mut TestRng, d_in: usize, d_out: usize, count: usize) -> Vec<ComplexMatrix> {
    // an isometry needs at least d_in output rows
    let count = count.max(d_in.div_ceil(d_out));
    let g = ginibre(rng, count * d_out, d_in);
    let gram = g.adjoint() * &g;
    let v = &g * psd_sqrt(&gram).unwrap().try_inverse().unwrap();
    (0..count).map(|k| v.rows(k * d_out, d_out).into_owned()).collect()
}

/// `(id ⊗ Λ)(ρ)` on the last factor, straight from the Kraus operators.
pub fn apply_kraus_last(kraus: &[ComplexMatrix], rho: &ComplexMatrix, d_left: usize) -> ComplexMatrix {
    let id = ComplexMatrix::identity(d_left, d_left);
    kraus
        .iter()
        .fold(None, |acc: Option<ComplexMatrix>, k| {
            let big = id.kronecker(k);
            let term = &big * rho * big.adjoint();
            Some(match acc {
                Some(a) => a + term,
                None => term,
            })
        })
        .unwrap()
}
