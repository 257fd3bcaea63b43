//! Dense density-matrix engine for up to four qubits.
//!
//! Qubit 0 is the most significant bit of a basis index, so `a ⊗ b` puts the
//! qubits of `a` first. Single-qubit basis: `|0> = |g>`, `|1> = |e>`.
//!
//! Four-qubit distillation states use the order
//! `(Alice memory, Bob memory, Alice data, Bob data)`.

mod matrix;

pub use matrix::{gates, CMatrix, C64};

use matrix::{ONE, ZERO};

use crate::error::{Error, Result};

pub const MAX_QUBITS: usize = 4;

/// Tolerance for the Hermitian / unit-trace / completeness checks.
pub const STATE_TOL: f64 = 1e-9;

/// Filter channels with output weight below this are treated as annihilating.
pub const ANNIHILATION_TOL: f64 = 1e-12;

fn qubits_for_dim(dim: usize) -> Result<usize> {
    if !dim.is_power_of_two() {
        return Err(Error::InvalidMatrix("a power-of-two dimension"));
    }
    let n = dim.trailing_zeros() as usize;
    if n > MAX_QUBITS {
        return Err(Error::UnsupportedDimension {
            qubits: n,
            max: MAX_QUBITS,
        });
    }
    Ok(n)
}

/// Hermitian, unit-trace density matrix on `n_qubits <= 4` qubits.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    m: CMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity and unit trace. Positivity is checked separately
    /// by [`DensityMatrix::check_positive`] since it needs an eigensolve.
    pub fn from_matrix(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::InvalidMatrix("square"));
        }
        let n_qubits = qubits_for_dim(m.rows())?;
        if !m.is_hermitian(STATE_TOL) {
            return Err(Error::InvalidMatrix("Hermitian"));
        }
        if (m.trace() - ONE).norm() > STATE_TOL {
            return Err(Error::InvalidMatrix("unit trace"));
        }
        Ok(Self { n_qubits, m })
    }

    /// Normalizes `m` by its trace first.
    pub fn from_unnormalized(m: CMatrix) -> Result<Self> {
        let tr = m.trace().re;
        if tr <= 0.0 {
            return Err(Error::Degenerate("zero-trace matrix"));
        }
        Self::from_matrix(m.scale_real(1.0 / tr))
    }

    pub(crate) fn from_parts(n_qubits: usize, m: CMatrix) -> Self {
        debug_assert_eq!(m.rows(), 1 << n_qubits);
        Self { n_qubits, m }
    }

    /// Pure state `|ψ><ψ|`; the ket is normalized here.
    pub fn from_ket(ket: &[C64]) -> Result<Self> {
        let norm: f64 = ket.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Degenerate("zero ket"));
        }
        let n_qubits = qubits_for_dim(ket.len())?;
        let k: Vec<C64> = ket.iter().map(|z| z / norm).collect();
        Ok(Self {
            n_qubits,
            m: CMatrix::outer(&k, &k),
        })
    }

    /// Computational basis state `|index>` on `n_qubits`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        if n_qubits > MAX_QUBITS {
            return Err(Error::UnsupportedDimension {
                qubits: n_qubits,
                max: MAX_QUBITS,
            });
        }
        if index >= dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: index,
            });
        }
        let mut m = CMatrix::zeros(dim, dim);
        m[(index, index)] = ONE;
        Ok(Self { n_qubits, m })
    }

    pub fn maximally_mixed(n_qubits: usize) -> Result<Self> {
        let dim = 1usize << n_qubits;
        qubits_for_dim(dim)?;
        Ok(Self {
            n_qubits,
            m: CMatrix::identity(dim).scale_real(1.0 / dim as f64),
        })
    }

    /// `|Ψ+> = (|ge> + |eg>)/√2`
    pub fn psi_plus() -> Self {
        Self::from_parts(2, CMatrix::from_real(4, &bell_entries(0.5)))
    }

    /// `|Ψ-> = (|ge> - |eg>)/√2`
    pub fn psi_minus() -> Self {
        Self::from_parts(2, CMatrix::from_real(4, &bell_entries(-0.5)))
    }

    pub fn ground_ground() -> Self {
        Self::basis(2, 0b00).unwrap()
    }

    pub fn excited_excited() -> Self {
        Self::basis(2, 0b11).unwrap()
    }

    /// `½(|ge><ge| + |eg><eg|)`
    pub fn dephased_mixed() -> Self {
        Self::from_parts(2, CMatrix::from_real(4, &diag4([0.0, 0.5, 0.5, 0.0])))
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.m.rows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace().re
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.m.hermitian_eigenvalues()[0]
    }

    /// Full invariant check: Hermitian, unit trace, eigenvalues ≥ -1e-9.
    pub fn check_positive(&self) -> Result<()> {
        if !self.m.is_hermitian(STATE_TOL) {
            return Err(Error::InvalidMatrix("Hermitian"));
        }
        if (self.trace() - 1.0).abs() > STATE_TOL {
            return Err(Error::InvalidMatrix("unit trace"));
        }
        if self.min_eigenvalue() < -STATE_TOL {
            return Err(Error::InvalidMatrix("positive semidefinite"));
        }
        Ok(())
    }

    /// Diagonal populations.
    pub fn populations(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.m[(i, i)].re).collect()
    }
}

/// `|Ψ±><Ψ±|` entries with coherence `c = ±½`.
fn bell_entries(c: f64) -> [f64; 16] {
    let mut out = [0.0; 16];
    out[5] = 0.5;
    out[10] = 0.5;
    out[6] = c;
    out[9] = c;
    out
}

fn diag4(d: [f64; 4]) -> [f64; 16] {
    let mut out = [0.0; 16];
    for (i, v) in d.into_iter().enumerate() {
        out[i * 4 + i] = v;
    }
    out
}

/// A Kraus map `ρ -> Σ K ρ K†`, possibly trace-decreasing (a filter).
/// Operators may be rectangular (e.g. a map from two copies onto one).
#[derive(Clone, Debug)]
pub struct KrausChannel {
    ops: Vec<CMatrix>,
    trace_preserving: bool,
}

impl KrausChannel {
    pub fn new(ops: Vec<CMatrix>, trace_preserving: bool) -> Result<Self> {
        let first = ops
            .first()
            .ok_or(Error::InvalidMatrix("a non-empty Kraus family"))?;
        let (rows, cols) = (first.rows(), first.cols());
        qubits_for_dim(rows)?;
        qubits_for_dim(cols)?;
        if ops.iter().any(|k| (k.rows(), k.cols()) != (rows, cols)) {
            return Err(Error::InvalidMatrix("a family of equal-shape operators"));
        }
        let ch = Self {
            ops,
            trace_preserving,
        };
        let defect = ch.completeness_defect();
        if trace_preserving {
            if defect.max_abs_diff(&CMatrix::zeros(cols, cols)) > STATE_TOL {
                return Err(Error::InvalidMatrix("trace preserving (Σ K†K = I)"));
            }
        } else if defect.hermitian_eigenvalues()[0] < -STATE_TOL {
            return Err(Error::InvalidMatrix("trace non-increasing (Σ K†K ≼ I)"));
        }
        Ok(ch)
    }

    pub fn identity(n_qubits: usize) -> Self {
        Self {
            ops: vec![CMatrix::identity(1 << n_qubits)],
            trace_preserving: true,
        }
    }

    pub fn unitary(u: CMatrix) -> Result<Self> {
        if !u.is_unitary(STATE_TOL) {
            return Err(Error::InvalidMatrix("unitary"));
        }
        Self::new(vec![u], true)
    }

    /// `I - Σ K†K`
    pub fn completeness_defect(&self) -> CMatrix {
        let d = self.in_dim();
        let mut acc = CMatrix::identity(d);
        for k in &self.ops {
            acc.add_assign(&k.adjoint().mul(k).scale_real(-1.0));
        }
        acc
    }

    pub fn ops(&self) -> &[CMatrix] {
        &self.ops
    }

    pub fn is_trace_preserving(&self) -> bool {
        self.trace_preserving
    }

    pub fn in_dim(&self) -> usize {
        self.ops[0].cols()
    }

    pub fn out_dim(&self) -> usize {
        self.ops[0].rows()
    }

    pub fn in_qubits(&self) -> usize {
        self.in_dim().trailing_zeros() as usize
    }

    /// Applies `self` after `first`: Kraus family `{B_j A_i}`.
    pub fn after(&self, first: &KrausChannel) -> Result<KrausChannel> {
        if self.in_dim() != first.out_dim() {
            return Err(Error::DimensionMismatch {
                expected: self.in_dim(),
                got: first.out_dim(),
            });
        }
        let ops = self
            .ops
            .iter()
            .flat_map(|b| first.ops.iter().map(move |a| b.mul(a)))
            .collect();
        Ok(KrausChannel {
            ops,
            trace_preserving: self.trace_preserving && first.trace_preserving,
        })
    }

    /// Tensor product of two channels acting on disjoint registers.
    pub fn tensor(&self, rhs: &KrausChannel) -> KrausChannel {
        let ops = self
            .ops
            .iter()
            .flat_map(|a| rhs.ops.iter().map(move |b| a.kron(b)))
            .collect();
        KrausChannel {
            ops,
            trace_preserving: self.trace_preserving && rhs.trace_preserving,
        }
    }
}

/// `a ⊗ b` with the qubits of `a` first.
pub fn tensor(a: &DensityMatrix, b: &DensityMatrix) -> Result<DensityMatrix> {
    let n = a.n_qubits + b.n_qubits;
    if n > MAX_QUBITS {
        return Err(Error::UnsupportedDimension {
            qubits: n,
            max: MAX_QUBITS,
        });
    }
    Ok(DensityMatrix::from_parts(n, a.m.kron(&b.m)))
}

/// `U ρ U†`
pub fn apply_unitary(rho: &DensityMatrix, u: &CMatrix) -> Result<DensityMatrix> {
    if u.rows() != rho.dim() || !u.is_square() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            got: u.rows(),
        });
    }
    if !u.is_unitary(STATE_TOL) {
        return Err(Error::InvalidMatrix("unitary"));
    }
    Ok(DensityMatrix::from_parts(rho.n_qubits, u.sandwich(&rho.m)))
}

/// Applies a Kraus map and returns `(σ / Tr σ, Tr σ)`.
///
/// A filter whose output weight falls below [`ANNIHILATION_TOL`] yields
/// [`Error::Annihilated`]; callers treat that as a certain rejection.
pub fn apply_channel(rho: &DensityMatrix, ch: &KrausChannel) -> Result<(DensityMatrix, f64)> {
    if ch.in_dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: ch.in_dim(),
            got: rho.dim(),
        });
    }
    let out_dim = ch.out_dim();
    let mut sigma = CMatrix::zeros(out_dim, out_dim);
    for k in &ch.ops {
        sigma.add_assign(&k.sandwich(&rho.m));
    }
    let weight = sigma.trace().re;
    if weight < ANNIHILATION_TOL {
        if ch.trace_preserving {
            return Err(Error::Degenerate("trace-preserving channel produced zero trace"));
        }
        return Err(Error::Annihilated { weight });
    }
    let n = out_dim.trailing_zeros() as usize;
    Ok((
        DensityMatrix::from_parts(n, sigma.scale_real(1.0 / weight)),
        weight,
    ))
}

fn bit_of(index: usize, qubit: usize, n_qubits: usize) -> usize {
    (index >> (n_qubits - 1 - qubit)) & 1
}

/// Lifts an operator on the listed qubits (in the listed order) to the full
/// `n_qubits` register, acting as identity elsewhere.
pub fn embed_operator(op: &CMatrix, qubits: &[usize], n_qubits: usize) -> Result<CMatrix> {
    if n_qubits > MAX_QUBITS {
        return Err(Error::UnsupportedDimension {
            qubits: n_qubits,
            max: MAX_QUBITS,
        });
    }
    let k = qubits.len();
    if !op.is_square() || op.rows() != 1 << k {
        return Err(Error::DimensionMismatch {
            expected: 1 << k,
            got: op.rows(),
        });
    }
    for (i, &q) in qubits.iter().enumerate() {
        if q >= n_qubits {
            return Err(Error::QubitIndex { index: q, n_qubits });
        }
        if qubits[..i].contains(&q) {
            return Err(Error::InvalidMatrix("targeted at distinct qubits"));
        }
    }
    let dim = 1usize << n_qubits;
    let target_mask: usize = qubits
        .iter()
        .map(|&q| 1usize << (n_qubits - 1 - q))
        .fold(0, |a, b| a | b);
    let sub = |idx: usize| -> usize {
        qubits
            .iter()
            .fold(0, |acc, &q| (acc << 1) | bit_of(idx, q, n_qubits))
    };
    let mut out = CMatrix::zeros(dim, dim);
    for r in 0..dim {
        for c in 0..dim {
            if r & !target_mask == c & !target_mask {
                out[(r, c)] = op[(sub(r), sub(c))];
            }
        }
    }
    Ok(out)
}

/// Tensors every Kraus operator of a single-qubit channel with identities.
pub fn embed_single_qubit_channel(
    ch: &KrausChannel,
    qubit_index: usize,
    n_qubits: usize,
) -> Result<KrausChannel> {
    if ch.in_dim() != 2 || ch.out_dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: ch.in_dim(),
        });
    }
    let ops = ch
        .ops
        .iter()
        .map(|k| embed_operator(k, &[qubit_index], n_qubits))
        .collect::<Result<Vec<_>>>()?;
    Ok(KrausChannel {
        ops,
        trace_preserving: ch.trace_preserving,
    })
}

/// Applies a trace-preserving single-qubit channel to one qubit in place of
/// building the embedded Kraus family. Same result as
/// `apply_channel(rho, &embed_single_qubit_channel(ch, qubit, n))`.
pub fn apply_local_channel(
    rho: &DensityMatrix,
    ch: &KrausChannel,
    qubit: usize,
) -> Result<DensityMatrix> {
    let n = rho.n_qubits;
    if qubit >= n {
        return Err(Error::QubitIndex {
            index: qubit,
            n_qubits: n,
        });
    }
    if ch.in_dim() != 2 || ch.out_dim() != 2 {
        return Err(Error::DimensionMismatch {
            expected: 2,
            got: ch.in_dim(),
        });
    }
    let dim = rho.dim();
    let shift = n - 1 - qubit;
    let mask = 1usize << shift;
    let mut out = CMatrix::zeros(dim, dim);
    for k in &ch.ops {
        for r in 0..dim {
            let rq = (r >> shift) & 1;
            let r0 = r & !mask;
            for c in 0..dim {
                let cq = (c >> shift) & 1;
                let c0 = c & !mask;
                let mut acc = ZERO;
                for u in 0..2 {
                    let ku = k[(rq, u)];
                    if ku == ZERO {
                        continue;
                    }
                    for v in 0..2 {
                        let kv = k[(cq, v)];
                        if kv == ZERO {
                            continue;
                        }
                        acc += ku * rho.m[(r0 | (u << shift), c0 | (v << shift))] * kv.conj();
                    }
                }
                out[(r, c)] += acc;
            }
        }
    }
    Ok(DensityMatrix::from_parts(n, out))
}

/// Applies a basis permutation unitary (e.g. CNOT) given as `|i> -> |perm[i]>`.
pub fn apply_permutation(rho: &DensityMatrix, perm: &[usize]) -> DensityMatrix {
    DensityMatrix::from_parts(rho.n_qubits, rho.m.permute_basis(perm))
}

/// Basis permutation for a CNOT on an `n_qubits` register.
pub fn cnot_permutation(control: usize, target: usize, n_qubits: usize) -> Vec<usize> {
    let cbit = 1usize << (n_qubits - 1 - control);
    let tbit = 1usize << (n_qubits - 1 - target);
    (0..1usize << n_qubits)
        .map(|i| if i & cbit != 0 { i ^ tbit } else { i })
        .collect()
}

/// Outcome of a projective measurement on a subset of qubits.
#[derive(Clone, Debug)]
pub struct Projection {
    pub prob: f64,
    /// Post-measurement state of the unmeasured qubits (original order);
    /// `None` when the outcome has zero probability.
    pub post: Option<DensityMatrix>,
}

/// Projects the listed qubits onto `outcome` (bit per qubit, 1 = |e>) and
/// traces them out.
pub fn measure_and_project(
    rho: &DensityMatrix,
    qubit_indices: &[usize],
    outcome: &[u8],
) -> Result<Projection> {
    let n = rho.n_qubits;
    if qubit_indices.len() != outcome.len() {
        return Err(Error::DimensionMismatch {
            expected: qubit_indices.len(),
            got: outcome.len(),
        });
    }
    for (i, &q) in qubit_indices.iter().enumerate() {
        if q >= n {
            return Err(Error::QubitIndex { index: q, n_qubits: n });
        }
        if qubit_indices[..i].contains(&q) {
            return Err(Error::InvalidMatrix("measured on distinct qubits"));
        }
    }
    if outcome.iter().any(|&b| b > 1) {
        return Err(Error::InvalidMatrix("a bitstring outcome"));
    }
    let rest: Vec<usize> = (0..n).filter(|q| !qubit_indices.contains(q)).collect();
    let fixed: usize = qubit_indices
        .iter()
        .zip(outcome)
        .map(|(&q, &b)| (b as usize) << (n - 1 - q))
        .fold(0, |a, b| a | b);
    let full_index = |sub: usize| -> usize {
        rest.iter().enumerate().fold(fixed, |acc, (i, &q)| {
            let bit = (sub >> (rest.len() - 1 - i)) & 1;
            acc | (bit << (n - 1 - q))
        })
    };
    let sub_dim = 1usize << rest.len();
    let idx: Vec<usize> = (0..sub_dim).map(full_index).collect();
    let mut block = CMatrix::zeros(sub_dim, sub_dim);
    for (a, &ia) in idx.iter().enumerate() {
        for (b, &ib) in idx.iter().enumerate() {
            block[(a, b)] = rho.m[(ia, ib)];
        }
    }
    let prob = block.trace().re.max(0.0);
    let post = (prob > 0.0)
        .then(|| DensityMatrix::from_parts(rest.len(), block.scale_real(1.0 / prob)));
    Ok(Projection { prob, post })
}

/// Which detector heralded the pair; `Minus` states get a Z correction.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BellSign {
    Plus,
    Minus,
}

/// Applies Z on qubit 0, mapping Ψ- onto Ψ+.
pub fn phase_correct(rho: &DensityMatrix) -> DensityMatrix {
    let z = embed_operator(&gates::pauli_z(), &[0], rho.n_qubits).expect("qubit 0 exists");
    DensityMatrix::from_parts(rho.n_qubits, z.sandwich(&rho.m))
}

/// `Tr[ρ |Ψ+><Ψ+|]` for a two-qubit state.
///
/// # Panics
/// If `rho` is not a two-qubit state.
pub fn fidelity_to_bell(rho: &DensityMatrix) -> f64 {
    assert_eq!(rho.n_qubits, 2, "Bell fidelity needs a two-qubit state");
    let m = &rho.m;
    0.5 * (m[(1, 1)] + m[(2, 2)] + m[(1, 2)] + m[(2, 1)]).re
}

/// Bell fidelity after the feed-forward correction for the given herald sign.
pub fn fidelity_to_bell_tagged(rho: &DensityMatrix, sign: BellSign) -> f64 {
    match sign {
        BellSign::Plus => fidelity_to_bell(rho),
        BellSign::Minus => fidelity_to_bell(&phase_correct(rho)),
    }
}
