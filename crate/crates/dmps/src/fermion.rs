//! Second-quantized fermionic operators and the Jordan-Wigner mapping.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::pauli::{PauliOp, PauliString, QubitHamiltonian};

/// One creation (`dagger = true`) or annihilation operator on a mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Ladder {
    pub mode: usize,
    pub dagger: bool,
}

impl Ladder {
    pub fn create(mode: usize) -> Self {
        Ladder { mode, dagger: true }
    }
    pub fn annihilate(mode: usize) -> Self {
        Ladder { mode, dagger: false }
    }
}

/// A sum of products of ladder operators with complex coefficients.
#[derive(Debug, Clone, Default)]
pub struct FermionOperator {
    pub terms: Vec<(Complex64, Vec<Ladder>)>,
}

impl FermionOperator {
    pub fn new() -> Self {
        FermionOperator { terms: Vec::new() }
    }

    pub fn add_term(&mut self, coeff: Complex64, ops: Vec<Ladder>) {
        if coeff.norm() > 0.0 {
            self.terms.push((coeff, ops));
        }
    }

    pub fn n_modes(&self) -> usize {
        self.terms
            .iter()
            .flat_map(|(_, ops)| ops.iter().map(|l| l.mode + 1))
            .max()
            .unwrap_or(0)
    }

    /// Hermitian conjugate: reverse each product and conjugate coefficients.
    pub fn adjoint(&self) -> FermionOperator {
        FermionOperator {
            terms: self
                .terms
                .iter()
                .map(|(c, ops)| {
                    let rev: Vec<Ladder> = ops
                        .iter()
                        .rev()
                        .map(|l| Ladder { mode: l.mode, dagger: !l.dagger })
                        .collect();
                    (c.conj(), rev)
                })
                .collect(),
        }
    }

    pub fn sub(&self, other: &FermionOperator) -> FermionOperator {
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().map(|(c, ops)| (-c, ops.clone())));
        FermionOperator { terms }
    }
}

/// Jordan-Wigner image of a single ladder operator:
/// `a†_p -> (X_p - iY_p)/2 ⊗ Z_{p-1}...Z_0`, `a_p -> (X_p + iY_p)/2 ⊗ Z...`.
fn ladder_strings(l: Ladder) -> [PauliString; 2] {
    let half = Complex64::new(0.5, 0.0);
    let half_i = Complex64::new(0.0, 0.5);
    let y_coeff = if l.dagger { -half_i } else { half_i };
    let z_tail = |op: PauliOp| {
        let mut ops: Vec<(usize, PauliOp)> = (0..l.mode).map(|q| (q, PauliOp::Z)).collect();
        ops.push((l.mode, op));
        ops
    };
    [
        PauliString::new(half, z_tail(PauliOp::X)),
        PauliString::new(y_coeff, z_tail(PauliOp::Y)),
    ]
}

/// Map a fermionic operator to a qubit Hamiltonian on `n_qubits` qubits
/// (defaults to the operator's mode count when larger).
pub fn jordan_wigner(op: &FermionOperator, n_qubits: usize) -> Result<QubitHamiltonian> {
    let modes = op.n_modes();
    if modes > n_qubits {
        return Err(Error::invalid(format!(
            "operator acts on {modes} modes but only {n_qubits} qubits requested"
        )));
    }
    let mut strings: Vec<PauliString> = Vec::new();
    for (coeff, ladders) in &op.terms {
        let mut partial = vec![PauliString::identity(*coeff)];
        for &l in ladders {
            let imgs = ladder_strings(l);
            let mut next = Vec::with_capacity(partial.len() * 2);
            for p in &partial {
                for img in &imgs {
                    next.push(p.multiply(img));
                }
            }
            partial = next;
        }
        strings.extend(partial);
    }
    QubitHamiltonian::from_strings(n_qubits, strings)
}
