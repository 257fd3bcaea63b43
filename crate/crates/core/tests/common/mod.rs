//! Shared oracles for the integration tests.
#![allow(dead_code)]

use qlink::herald::{HeraldKind, HeraldMode};
use qlink::qstate::{CMatrix, DensityMatrix, C64};
use qlink::sampling::{derive_stream, RngStream};
use qlink::AttemptParams;
use rand_distr::{Distribution, StandardNormal};

pub const ORACLE_TAIL: f64 = 1e-12;

pub fn rng(seed: u64) -> RngStream {
    derive_stream(seed, 0, 0xAB)
}

fn gaussian(rng: &mut RngStream) -> C64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(re, im)
}

/// Haar-random normalized ket.
pub fn random_ket(rng: &mut RngStream, dim: usize) -> Vec<C64> {
    let v: Vec<C64> = (0..dim).map(|_| gaussian(rng)).collect();
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    v.into_iter().map(|z| z / norm).collect()
}

/// Ginibre-ensemble density matrix `G G† / tr(G G†)`.
pub fn random_density(rng: &mut RngStream, n_qubits: usize) -> DensityMatrix {
    let dim = 1 << n_qubits;
    let mut g = CMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in 0..dim {
            g[(i, j)] = gaussian(rng);
        }
    }
    DensityMatrix::from_unnormalized(g.mul(&g.adjoint())).unwrap()
}

pub fn random_pure(rng: &mut RngStream, n_qubits: usize) -> DensityMatrix {
    DensityMatrix::from_ket(&random_ket(rng, 1 << n_qubits)).unwrap()
}

/// Random two-qubit state supported on `span{|ge>, |eg>}`.
pub fn random_single_excitation(rng: &mut RngStream) -> DensityMatrix {
    let mut g = CMatrix::zeros(4, 4);
    for i in [1, 2] {
        for j in [1, 2] {
            g[(i, j)] = gaussian(rng);
        }
    }
    DensityMatrix::from_unnormalized(g.mul(&g.adjoint())).unwrap()
}

/// Poisson pmf up to cumulative mass `1 - ORACLE_TAIL`.
pub fn poisson_pmf(mean: f64) -> Vec<f64> {
    let mut out = vec![(-mean).exp()];
    let mut cum = out[0];
    let mut k = 0u32;
    while cum < 1.0 - ORACLE_TAIL {
        k += 1;
        let next = out[k as usize - 1] * mean / f64::from(k);
        out.push(next);
        cum += next;
        if k > 10_000 {
            break;
        }
    }
    out
}

fn binomial_pmf(n: usize, p: f64) -> Vec<f64> {
    let mut out = vec![0.0; n + 1];
    let mut c = 1.0;
    for (k, slot) in out.iter_mut().enumerate() {
        *slot = c * p.powi(k as i32) * (1.0 - p).powi((n - k) as i32);
        c = c * (n - k) as f64 / (k + 1) as f64;
    }
    out
}

/// Round outcome: `[no click, click without noise, click with noise]`.
fn round_law(excited: usize, params: &AttemptParams) -> [f64; 3] {
    let signal = binomial_pmf(excited, params.eta);
    // noise from both transducers, then thinned by eta
    let mut no_noise = 0.0;
    for (n, pn) in poisson_pmf(2.0 * params.n_add).iter().enumerate() {
        no_noise += pn * binomial_pmf(n, params.eta)[0];
    }
    let some_noise = 1.0 - no_noise;
    let s0 = signal[0];
    [s0 * no_noise, (1.0 - s0) * no_noise, some_noise]
}

/// Exact per-sequence outcome law by enumeration over excitations, detected
/// signal photons and noise counts.
pub fn enumerate_outcomes(params: &AttemptParams, mode: HeraldMode) -> [f64; 5] {
    let mut p = [0.0; 5];
    for x0 in [false, true] {
        for x1 in [false, true] {
            let px = [x0, x1]
                .iter()
                .map(|&x| if x { params.p_e } else { 1.0 - params.p_e })
                .product::<f64>();
            let k = usize::from(x0) + usize::from(x1);
            let r1 = round_law(k, params);
            match mode {
                HeraldMode::OneClick => {
                    p[0] += px * r1[0];
                    let click = r1[1] + r1[2];
                    match k {
                        0 => p[HeraldKind::GroundGround.index()] += px * click,
                        2 => p[HeraldKind::DoubleExcited.index()] += px * click,
                        _ => {
                            p[HeraldKind::Bell.index()] += px * r1[1];
                            p[HeraldKind::Dephased.index()] += px * r1[2];
                        }
                    }
                }
                HeraldMode::TwoClick => {
                    let r2 = round_law(2 - k, params);
                    let both = (r1[1] + r1[2]) * (r2[1] + r2[2]);
                    p[0] += px * (1.0 - both);
                    match k {
                        0 => p[HeraldKind::DoubleExcited.index()] += px * both,
                        2 => p[HeraldKind::GroundGround.index()] += px * both,
                        _ => {
                            let clean = r1[1] * r2[1];
                            p[HeraldKind::Bell.index()] += px * clean;
                            p[HeraldKind::Dephased.index()] += px * (both - clean);
                        }
                    }
                }
            }
        }
    }
    p
}

pub fn mean_sem(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}
