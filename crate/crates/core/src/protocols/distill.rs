//! Bilateral-CNOT parity check shared by the EPL and Chi protocols, and the
//! EPL Kraus filter.

use crate::channels::{apply_noisy_cnot, GateNoiseParams};
use crate::error::{Error, Result};
use crate::herald::HeraldKind;
use crate::qstate::{
    apply_channel, fidelity_to_bell, measure_and_project, tensor, CMatrix, DensityMatrix,
    KrausChannel, C64,
};

/// Result of one parity check: probability of memory "11" and the data pair
/// conditioned on it.
#[derive(Clone, Debug)]
pub struct ParityCheck {
    pub prob: f64,
    pub data: Option<DensityMatrix>,
}

/// Interferes a stored pair with a data pair.
///
/// The joint state is `memory ⊗ data` in the order (Alice memory, Bob
/// memory, Alice data, Bob data). Each side applies a noisy CNOT with the data
/// qubit as control and the memory qubit as target; the memory pair is then
/// measured and the check passes on "11".
pub fn parity_check(
    memory: &DensityMatrix,
    data: &DensityMatrix,
    gate: GateNoiseParams,
) -> Result<ParityCheck> {
    if memory.n_qubits() != 2 || data.n_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: memory.dim().max(data.dim()),
        });
    }
    let joint = tensor(memory, data)?;
    let joint = apply_noisy_cnot(&joint, 2, 0, gate)?;
    let joint = apply_noisy_cnot(&joint, 3, 1, gate)?;
    let p = measure_and_project(&joint, &[0, 1], &[1, 1])?;
    Ok(ParityCheck {
        prob: p.prob,
        data: p.post,
    })
}

/// Acceptance probability and Bell fidelity of the kept pair on acceptance.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Distilled {
    pub prob: f64,
    pub fidelity: f64,
}

impl Distilled {
    const REJECT: Distilled = Distilled {
        prob: 0.0,
        fidelity: 0.0,
    };

    fn from_check(check: &ParityCheck) -> Self {
        match &check.data {
            Some(rho) if check.prob > 0.0 => Distilled {
                prob: check.prob,
                fidelity: fidelity_to_bell(rho),
            },
            _ => Self::REJECT,
        }
    }
}

fn herald_state(kind: HeraldKind) -> DensityMatrix {
    kind.state().expect("heralded kinds carry a state")
}

pub(crate) const HERALDED: [HeraldKind; 4] = [
    HeraldKind::Bell,
    HeraldKind::GroundGround,
    HeraldKind::DoubleExcited,
    HeraldKind::Dephased,
];

pub(crate) fn slot(kind: HeraldKind) -> usize {
    debug_assert!(kind.is_herald());
    kind.index() - 1
}

/// EPL outcome for every (memory, data) herald pair without memory decay.
pub(crate) fn epl_table(gate: GateNoiseParams) -> Result<[[Distilled; 4]; 4]> {
    let mut table = [[Distilled::REJECT; 4]; 4];
    for mem in HERALDED {
        for data in HERALDED {
            let check = parity_check(&herald_state(mem), &herald_state(data), gate)?;
            table[slot(mem)][slot(data)] = Distilled::from_check(&check);
        }
    }
    Ok(table)
}

/// Local unitaries applied to the kept pair between the two Chi checks.
#[derive(Clone, Debug)]
pub struct ChiLocals {
    pub alice: CMatrix,
    pub bob: CMatrix,
}

/// Two parity checks of the data pair against two stored pairs.
pub fn chi_checks(
    first: &DensityMatrix,
    second: &DensityMatrix,
    data: &DensityMatrix,
    gate: GateNoiseParams,
    locals: Option<&ChiLocals>,
) -> Result<Distilled> {
    let c1 = parity_check(first, data, gate)?;
    let kept = match c1.data {
        Some(rho) if c1.prob > 0.0 => rho,
        _ => return Ok(Distilled::REJECT),
    };
    let kept = match locals {
        Some(l) => crate::qstate::apply_unitary(&kept, &l.alice.kron(&l.bob))?,
        None => kept,
    };
    let c2 = parity_check(second, &kept, gate)?;
    let d = Distilled::from_check(&c2);
    Ok(Distilled {
        prob: c1.prob * d.prob,
        fidelity: d.fidelity,
    })
}

/// Chi outcome for every (first, second, data) herald triple without decay.
pub(crate) fn chi_table(
    gate: GateNoiseParams,
    locals: Option<&ChiLocals>,
) -> Result<Vec<Distilled>> {
    let mut table = Vec::with_capacity(64);
    for a in HERALDED {
        for b in HERALDED {
            for d in HERALDED {
                table.push(chi_checks(
                    &herald_state(a),
                    &herald_state(b),
                    &herald_state(d),
                    gate,
                    locals,
                )?);
            }
        }
    }
    Ok(table)
}

pub(crate) fn chi_slot(a: HeraldKind, b: HeraldKind, d: HeraldKind) -> usize {
    16 * slot(a) + 4 * slot(b) + slot(d)
}

/// `K = |ge><ge| ⊗ <eg| + |eg><eg| ⊗ <ge|` acting on `keep ⊗ measured`.
pub fn epl_kraus_operator() -> CMatrix {
    let mut k = CMatrix::zeros(4, 16);
    // keep |ge> (1) with measured |eg> (2); keep |eg> (2) with measured |ge> (1)
    k[(1, 4 + 2)] = C64::new(1.0, 0.0);
    k[(2, 2 * 4 + 1)] = C64::new(1.0, 0.0);
    k
}

/// Filter map keeping the components where the two copies disagree.
///
/// Returns `(p_succ, rho_out)`; `rho_out` is `None` when the filter
/// annihilates the input.
pub fn epl_kraus_map(
    rho_keep: &DensityMatrix,
    rho_measured: &DensityMatrix,
) -> Result<(f64, Option<DensityMatrix>)> {
    if rho_keep.n_qubits() != 2 || rho_measured.n_qubits() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 4,
            got: rho_keep.dim().max(rho_measured.dim()),
        });
    }
    let filter = KrausChannel::new(vec![epl_kraus_operator()], false)?;
    match apply_channel(&tensor(rho_keep, rho_measured)?, &filter) {
        Ok((rho, w)) => Ok((w, Some(rho))),
        Err(Error::Annihilated { weight }) => Ok((weight.max(0.0), None)),
        Err(e) => Err(e),
    }
}
