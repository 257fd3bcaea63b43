//! Memory and gate noise: generalized amplitude damping, pure dephasing,
//! depolarizing, and the noisy CNOT.

use serde::{Deserialize, Serialize};

use crate::error::{check_range, Result};
use crate::qstate::{
    apply_local_channel, apply_permutation, cnot_permutation, gates, CMatrix, DensityMatrix,
    KrausChannel, C64,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemoryParams {
    /// Relaxation time in seconds; `f64::INFINITY` disables relaxation.
    pub t1: f64,
    /// Pure-dephasing time in seconds; `f64::INFINITY` disables dephasing.
    pub t2phi: f64,
    /// Probability that the environment excites rather than relaxes the qubit.
    pub env_excitation: f64,
}

impl Default for MemoryParams {
    fn default() -> Self {
        Self::IDEAL
    }
}

impl MemoryParams {
    pub const IDEAL: MemoryParams = MemoryParams {
        t1: f64::INFINITY,
        t2phi: f64::INFINITY,
        env_excitation: 0.0,
    };

    pub fn validate(&self) -> Result<()> {
        check_positive_time("t1", self.t1)?;
        check_positive_time("t2phi", self.t2phi)?;
        check_range("env_excitation", self.env_excitation, 0.0, 1.0, "[0, 1]")
    }

    pub fn is_ideal(&self) -> bool {
        self.t1 == f64::INFINITY && self.t2phi == f64::INFINITY
    }
}

fn check_positive_time(what: &'static str, t: f64) -> Result<()> {
    if t > 0.0 {
        Ok(())
    } else {
        Err(crate::Error::Domain {
            what,
            value: t,
            range: "(0, inf]",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateNoiseParams {
    /// `1 - p` for the per-qubit depolarizing probability `p`; 1 is a perfect gate.
    pub epsilon: f64,
}

impl Default for GateNoiseParams {
    fn default() -> Self {
        Self::PERFECT
    }
}

impl GateNoiseParams {
    pub const PERFECT: GateNoiseParams = GateNoiseParams { epsilon: 1.0 };

    pub fn validate(&self) -> Result<()> {
        check_range("gate_epsilon", self.epsilon, 0.0, 1.0, "[0, 1]")
    }

    pub fn depolarizing_p(&self) -> f64 {
        1.0 - self.epsilon
    }
}

fn c(x: f64) -> C64 {
    C64::new(x, 0.0)
}

fn check_time(t: f64) -> Result<()> {
    check_range("t", t, 0.0, f64::INFINITY, "[0, inf]")
}

/// `e^{-t/tau}` with `tau = inf` treated as no decay even at `t = inf`.
fn survival(t: f64, tau: f64) -> f64 {
    if tau == f64::INFINITY {
        1.0
    } else {
        (-t / tau).exp()
    }
}

/// Generalized amplitude damping over time `t` with `gamma = 1 - e^{-t/t1}`.
///
/// `M0, M1` (weight `1 - p_env`) relax toward `|g>`; `M2, M3` (weight
/// `p_env`) excite toward `|e>`.
pub fn gad_channel(t1: f64, t: f64, p_env: f64) -> Result<KrausChannel> {
    check_positive_time("t1", t1)?;
    check_time(t)?;
    check_range("env_excitation", p_env, 0.0, 1.0, "[0, 1]")?;
    let gamma = 1.0 - survival(t, t1);
    let a = (1.0 - p_env).sqrt();
    let b = p_env.sqrt();
    let keep = (1.0 - gamma).sqrt();
    let jump = gamma.sqrt();
    let ops = vec![
        CMatrix::from_real(2, &[a, 0.0, 0.0, a * keep]),
        CMatrix::from_real(2, &[0.0, a * jump, 0.0, 0.0]),
        CMatrix::from_real(2, &[b * keep, 0.0, 0.0, b]),
        CMatrix::from_real(2, &[0.0, 0.0, b * jump, 0.0]),
    ];
    KrausChannel::new(ops, true)
}

/// Pure dephasing over time `t`: off-diagonals scale by `e^{-t/t2phi}`.
///
/// Kraus form `diag(1, sqrt(1 - lambda))`, `diag(0, sqrt(lambda))` with
/// `lambda = 1 - e^{-2t/t2phi}`.
pub fn dephasing_channel(t2phi: f64, t: f64) -> Result<KrausChannel> {
    check_positive_time("t2phi", t2phi)?;
    check_time(t)?;
    let coherence = survival(t, t2phi);
    let lambda = 1.0 - coherence * coherence;
    let ops = vec![
        CMatrix::from_real(2, &[1.0, 0.0, 0.0, coherence]),
        CMatrix::from_real(2, &[0.0, 0.0, 0.0, lambda.sqrt()]),
    ];
    KrausChannel::new(ops, true)
}

/// `rho -> (1-p) rho + p/3 (X rho X + Y rho Y + Z rho Z)`.
pub fn depolarizing_channel(p: f64) -> Result<KrausChannel> {
    check_range("p", p, 0.0, 1.0, "[0, 1]")?;
    let w = (p / 3.0).sqrt();
    let ops = vec![
        CMatrix::identity(2).scale(c((1.0 - p).sqrt())),
        gates::pauli_x().scale(c(w)),
        gates::pauli_y().scale(c(w)),
        gates::pauli_z().scale(c(w)),
    ];
    KrausChannel::new(ops, true)
}

/// Ideal CNOT (control = first qubit) followed by independent
/// depolarizing(`1 - epsilon`) on control and target.
pub fn noisy_cnot(gate: GateNoiseParams) -> Result<KrausChannel> {
    gate.validate()?;
    let cnot = KrausChannel::unitary(gates::cnot())?;
    if gate.epsilon == 1.0 {
        return Ok(cnot);
    }
    let dep = depolarizing_channel(gate.depolarizing_p())?;
    dep.tensor(&dep).after(&cnot)
}

/// Applies a noisy CNOT to two qubits of `rho` without building the
/// embedded 16-operator family.
pub fn apply_noisy_cnot(
    rho: &DensityMatrix,
    control: usize,
    target: usize,
    gate: GateNoiseParams,
) -> Result<DensityMatrix> {
    gate.validate()?;
    let perm = cnot_permutation(control, target, rho.n_qubits());
    let out = apply_permutation(rho, &perm);
    depolarize_qubits(&out, &[control, target], gate)
}

/// Depolarizes each listed qubit independently; identity for a perfect gate.
pub fn depolarize_qubits(
    rho: &DensityMatrix,
    qubits: &[usize],
    gate: GateNoiseParams,
) -> Result<DensityMatrix> {
    if gate.epsilon == 1.0 {
        return Ok(rho.clone());
    }
    let dep = depolarizing_channel(gate.depolarizing_p())?;
    qubits
        .iter()
        .try_fold(rho.clone(), |acc, &q| apply_local_channel(&acc, &dep, q))
}

/// Stores the listed qubits for time `t`: GAD then dephasing on each.
pub fn decay_qubits(
    rho: &DensityMatrix,
    mem: &MemoryParams,
    t: f64,
    qubits: &[usize],
) -> Result<DensityMatrix> {
    mem.validate()?;
    check_time(t)?;
    if t == 0.0 || mem.is_ideal() {
        return Ok(rho.clone());
    }
    let mut out = rho.clone();
    if mem.t1 != f64::INFINITY {
        let gad = gad_channel(mem.t1, t, mem.env_excitation)?;
        for &q in qubits {
            out = apply_local_channel(&out, &gad, q)?;
        }
    }
    if mem.t2phi != f64::INFINITY {
        let deph = dephasing_channel(mem.t2phi, t)?;
        for &q in qubits {
            out = apply_local_channel(&out, &deph, q)?;
        }
    }
    Ok(out)
}

/// Decays the memory qubits (0 and 1) of a four-qubit distillation state.
pub fn decay_memory_pair(rho4: &DensityMatrix, mem: &MemoryParams, t: f64) -> Result<DensityMatrix> {
    if rho4.n_qubits() != 4 {
        return Err(crate::Error::DimensionMismatch {
            expected: 16,
            got: rho4.dim(),
        });
    }
    decay_qubits(rho4, mem, t, &[0, 1])
}

/// Overlap `<psi| GAD_t(|psi><psi|) |psi>` for a pure qubit with populations
/// `(rho00, rho11)`.
pub fn gad_fidelity(rho00: f64, rho11: f64, t1: f64, t: f64, p_env: f64) -> f64 {
    let e = survival(t, t1);
    let relax = 1.0 - p_env;
    rho00 * rho00 * (e + relax * (1.0 - e))
        + rho11 * rho11 * (1.0 - relax * (1.0 - e))
        + rho00 * rho11 * (2.0 * e.sqrt() + 1.0 - e)
}

/// Pure-state overlap after dephasing: `1 - 2 rho00 rho11 (1 - e^{-t/t2phi})`.
pub fn dephasing_fidelity(rho00: f64, rho11: f64, t2phi: f64, t: f64) -> f64 {
    1.0 - 2.0 * rho00 * rho11 * (1.0 - survival(t, t2phi))
}

/// Population-linear dephasing formula
/// `(1 + e)/2 + (1 - e)/2 (rho00 - rho11)` with `e = e^{-t/t2phi}`.
///
/// Agrees with [`dephasing_fidelity`] for `|g>` and for equator states only.
pub fn dephasing_fidelity_linear(rho00: f64, rho11: f64, t2phi: f64, t: f64) -> f64 {
    let e = survival(t, t2phi);
    0.5 * (1.0 + e) + 0.5 * (1.0 - e) * (rho00 - rho11)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qstate::{apply_channel, apply_unitary, embed_single_qubit_channel, tensor};

    fn random_qubit(seed: u64) -> DensityMatrix {
        let mut rng = crate::sampling::derive_stream(seed, 0, 0);
        let th = std::f64::consts::PI * rng.uniform();
        let ph = 2.0 * std::f64::consts::PI * rng.uniform();
        DensityMatrix::from_ket(&[
            C64::new((th / 2.0).cos(), 0.0),
            C64::from_polar((th / 2.0).sin(), ph),
        ])
        .unwrap()
    }

    fn overlap(psi: &DensityMatrix, out: &DensityMatrix) -> f64 {
        psi.matrix().mul(out.matrix()).trace().re
    }

    #[test]
    fn zero_time_is_identity() {
        for ch in [gad_channel(1e-3, 0.0, 0.2).unwrap(), dephasing_channel(1e-3, 0.0).unwrap()] {
            let psi = random_qubit(1);
            let (out, _) = apply_channel(&psi, &ch).unwrap();
            assert!(out.matrix().max_abs_diff(psi.matrix()) < 1e-15);
        }
    }

    #[test]
    fn full_damping_reaches_ground() {
        let ch = gad_channel(1e-6, f64::INFINITY, 0.0).unwrap();
        for s in 0..10 {
            let (out, _) = apply_channel(&random_qubit(s), &ch).unwrap();
            assert!((out.matrix()[(0, 0)].re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn gad_closed_form_matches() {
        for s in 0..100 {
            let psi = random_qubit(100 + s);
            let (r00, r11) = (psi.matrix()[(0, 0)].re, psi.matrix()[(1, 1)].re);
            for &t in &[0.0, 1e-5, 1e-4, 1e-3, 1e-2] {
                let ch = gad_channel(1e-3, t, 0.1).unwrap();
                let (out, _) = apply_channel(&psi, &ch).unwrap();
                assert!((overlap(&psi, &out) - gad_fidelity(r00, r11, 1e-3, t, 0.1)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dephasing_closed_form_matches() {
        for s in 0..100 {
            let psi = random_qubit(300 + s);
            let (r00, r11) = (psi.matrix()[(0, 0)].re, psi.matrix()[(1, 1)].re);
            for &t in &[0.0, 1e-5, 1e-4, 1e-3, 1e-2] {
                let (out, _) = apply_channel(&psi, &dephasing_channel(1e-3, t).unwrap()).unwrap();
                assert!((overlap(&psi, &out) - dephasing_fidelity(r00, r11, 1e-3, t)).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn linear_dephasing_form_holds_on_poles_and_equator_only() {
        let g = DensityMatrix::basis(1, 0).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let plus = DensityMatrix::from_ket(&[c(h), c(h)]).unwrap();
        for psi in [g, plus] {
            let (r00, r11) = (psi.matrix()[(0, 0)].re, psi.matrix()[(1, 1)].re);
            let (out, _) = apply_channel(&psi, &dephasing_channel(1e-3, 2e-3).unwrap()).unwrap();
            assert!((overlap(&psi, &out) - dephasing_fidelity_linear(r00, r11, 1e-3, 2e-3)).abs() < 1e-12);
        }
        let e = DensityMatrix::basis(1, 1).unwrap();
        let (out, _) = apply_channel(&e, &dephasing_channel(1e-3, 2e-3).unwrap()).unwrap();
        assert!((overlap(&e, &out) - 1.0).abs() < 1e-12);
        assert!(dephasing_fidelity_linear(0.0, 1.0, 1e-3, 2e-3) < 0.2);
    }

    #[test]
    fn dephasing_keeps_populations() {
        for s in 0..20 {
            let psi = random_qubit(500 + s);
            let (out, _) = apply_channel(&psi, &dephasing_channel(1e-4, 3e-4).unwrap()).unwrap();
            for i in 0..2 {
                assert!((out.matrix()[(i, i)] - psi.matrix()[(i, i)]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn depolarizing_edges() {
        for k in 0..=10 {
            let ch = depolarizing_channel(k as f64 / 10.0).unwrap();
            assert!(ch.completeness_defect().max_abs_diff(&CMatrix::zeros(2, 2)) < 1e-12);
        }
        let psi = random_qubit(7);
        let (out, w) = apply_channel(&psi, &depolarizing_channel(0.0).unwrap()).unwrap();
        assert!(out.matrix().max_abs_diff(psi.matrix()) < 1e-15);
        assert!((w - 1.0).abs() < 1e-12);
        let (out, _) = apply_channel(&psi, &depolarizing_channel(0.75).unwrap()).unwrap();
        assert!(out.matrix().max_abs_diff(&CMatrix::identity(2).scale_real(0.5)) < 1e-12);
    }

    #[test]
    fn noisy_cnot_edges() {
        let eg = DensityMatrix::basis(2, 0b10).unwrap();
        let (out, _) = apply_channel(&eg, &noisy_cnot(GateNoiseParams::PERFECT).unwrap()).unwrap();
        assert!(out.matrix().max_abs_diff(DensityMatrix::excited_excited().matrix()) < 1e-15);

        let eps = GateNoiseParams { epsilon: 0.25 };
        let (out, _) = apply_channel(&DensityMatrix::psi_plus(), &noisy_cnot(eps).unwrap()).unwrap();
        assert!(out.matrix().max_abs_diff(&CMatrix::identity(4).scale_real(0.25)) < 1e-12);
    }

    #[test]
    fn fast_noisy_cnot_matches_kraus_form() {
        let gate = GateNoiseParams { epsilon: 0.9 };
        let a = random_qubit(11);
        let b = random_qubit(12);
        let rho = tensor(&a, &b).unwrap();
        let (slow, _) = apply_channel(&rho, &noisy_cnot(gate).unwrap()).unwrap();
        let fast = apply_noisy_cnot(&rho, 0, 1, gate).unwrap();
        assert!(slow.matrix().max_abs_diff(fast.matrix()) < 1e-13);
        let ideal = apply_unitary(&rho, &gates::cnot()).unwrap();
        let fast = apply_noisy_cnot(&rho, 0, 1, GateNoiseParams::PERFECT).unwrap();
        assert!(ideal.matrix().max_abs_diff(fast.matrix()) < 1e-15);
    }

    #[test]
    fn memory_decay_edges_and_semigroup() {
        let rho = tensor(&DensityMatrix::psi_plus(), &DensityMatrix::dephased_mixed()).unwrap();
        let mem = MemoryParams {
            t1: 1e-3,
            t2phi: 5e-4,
            env_excitation: 0.05,
        };
        assert_eq!(decay_memory_pair(&rho, &mem, 0.0).unwrap(), rho);
        assert_eq!(decay_memory_pair(&rho, &MemoryParams::IDEAL, 1.0).unwrap(), rho);

        let once = decay_memory_pair(&rho, &mem, 3e-4).unwrap();
        let twice = decay_memory_pair(&decay_memory_pair(&rho, &mem, 1e-4).unwrap(), &mem, 2e-4).unwrap();
        assert!(once.matrix().max_abs_diff(twice.matrix()) < 1e-9);
        assert!(decay_memory_pair(&DensityMatrix::psi_plus(), &mem, 1e-4).is_err());
    }

    #[test]
    fn local_decay_matches_embedded_kraus() {
        let rho = tensor(&DensityMatrix::psi_plus(), &DensityMatrix::psi_plus()).unwrap();
        let mem = MemoryParams {
            t1: 1e-3,
            t2phi: 2e-3,
            env_excitation: 0.1,
        };
        let t = 4e-4;
        let fast = decay_memory_pair(&rho, &mem, t).unwrap();
        let mut slow = rho.clone();
        for ch in [gad_channel(mem.t1, t, mem.env_excitation).unwrap(), dephasing_channel(mem.t2phi, t).unwrap()] {
            for q in [0, 1] {
                slow = apply_channel(&slow, &embed_single_qubit_channel(&ch, q, 4).unwrap()).unwrap().0;
            }
        }
        assert!(fast.matrix().max_abs_diff(slow.matrix()) < 1e-13);
    }

    #[test]
    fn gad_then_dephasing_order_barely_matters() {
        let rho = random_qubit(21);
        let g = gad_channel(1e-3, 1e-5, 0.1).unwrap();
        let d = dephasing_channel(1e-3, 1e-5).unwrap();
        let a = apply_channel(&apply_channel(&rho, &g).unwrap().0, &d).unwrap().0;
        let b = apply_channel(&apply_channel(&rho, &d).unwrap().0, &g).unwrap().0;
        assert!(a.matrix().max_abs_diff(b.matrix()) < 1e-9);
    }

    #[test]
    fn params_validation() {
        assert!(MemoryParams { t1: 0.0, ..MemoryParams::IDEAL }.validate().is_err());
        assert!(MemoryParams { env_excitation: 2.0, ..MemoryParams::IDEAL }.validate().is_err());
        assert!(GateNoiseParams { epsilon: 1.1 }.validate().is_err());
        assert!(gad_channel(1e-3, -1.0, 0.0).is_err());
    }
}
