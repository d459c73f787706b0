//! Hartree-Fock reference state and the Trotterized UCCSD circuit.
//!
//! An excitation's cluster operator `T - T†` maps under Jordan-Wigner to a sum
//! of Pauli strings with purely imaginary coefficients `i*c`. Per Trotter step
//! each string is compiled to the standard V-shaped block: basis changes
//! (H for X, Rx(pi/2) for Y), a CNOT ladder onto the string's last qubit, an
//! Rz bound to the excitation's parameter slot with scale `-2c/k`, and the
//! unwinding gates. All strings of one excitation share one slot.

use num_complex::Complex64;

use crate::circuit::{Gate, Param, ParametricCircuit};
use crate::error::{Error, Result};
use crate::fermion::{jordan_wigner, FermionOperator, Ladder};
use crate::pauli::{PauliOp, PauliString};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ExcitationKind {
    /// occupied spin-orbital i -> virtual a
    Single { i: usize, a: usize },
    /// occupied i < j -> virtual a < b
    Double { i: usize, j: usize, a: usize, b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Excitation {
    pub kind: ExcitationKind,
    pub slot: usize,
}

/// Lowest `n_electrons` spin-orbitals occupied.
pub fn hf_reference(n_electrons: usize, n_qubits: usize) -> Result<Vec<u8>> {
    if n_electrons > n_qubits {
        return Err(Error::invalid(format!(
            "hf_reference: {n_electrons} electrons exceed {n_qubits} spin-orbitals"
        )));
    }
    Ok((0..n_qubits).map(|q| u8::from(q < n_electrons)).collect())
}

/// All spin-preserving singles and doubles over interleaved spin-orbitals,
/// singles first, lexicographically ordered, slots assigned in that order.
pub fn uccsd_pool(n_electrons: usize, n_qubits: usize) -> Result<Vec<Excitation>> {
    if n_electrons > n_qubits {
        return Err(Error::invalid("uccsd_pool: more electrons than spin-orbitals"));
    }
    let spin = |q: usize| q % 2;
    let mut pool = Vec::new();
    for i in 0..n_electrons {
        for a in n_electrons..n_qubits {
            if spin(i) == spin(a) {
                pool.push(ExcitationKind::Single { i, a });
            }
        }
    }
    for i in 0..n_electrons {
        for j in i + 1..n_electrons {
            for a in n_electrons..n_qubits {
                for b in a + 1..n_qubits {
                    if spin(i) + spin(j) == spin(a) + spin(b) {
                        pool.push(ExcitationKind::Double { i, j, a, b });
                    }
                }
            }
        }
    }
    Ok(pool
        .into_iter()
        .enumerate()
        .map(|(slot, kind)| Excitation { kind, slot })
        .collect())
}

/// The anti-Hermitian generator `T_e - T_e†` as a fermionic operator.
pub fn cluster_operator(e: &Excitation) -> FermionOperator {
    let one = Complex64::new(1.0, 0.0);
    let mut t = FermionOperator::new();
    match e.kind {
        ExcitationKind::Single { i, a } => {
            t.add_term(one, vec![Ladder::create(a), Ladder::annihilate(i)]);
        }
        ExcitationKind::Double { i, j, a, b } => {
            t.add_term(
                one,
                vec![
                    Ladder::create(a),
                    Ladder::create(b),
                    Ladder::annihilate(j),
                    Ladder::annihilate(i),
                ],
            );
        }
    }
    t.sub(&t.adjoint())
}

/// Jordan-Wigner image of `T_e - T_e†`; every returned coefficient is purely
/// imaginary (anti-Hermiticity), which is asserted here.
pub fn cluster_to_pauli(e: &Excitation, n_qubits: usize) -> Result<Vec<PauliString>> {
    let gen = cluster_operator(e);
    let h = jordan_wigner_raw(&gen, n_qubits)?;
    for s in &h {
        if s.coeff.re.abs() > 1e-12 {
            return Err(Error::Numerical(format!(
                "cluster generator has a non-imaginary coefficient {}",
                s.coeff
            )));
        }
    }
    Ok(h)
}

/// JW expansion without the Hermiticity restriction of `QubitHamiltonian`.
fn jordan_wigner_raw(op: &FermionOperator, n_qubits: usize) -> Result<Vec<PauliString>> {
    // jordan_wigner targets Hermitian operators; reuse its expansion by
    // mapping i*op (Hermitian for anti-Hermitian op) and undoing the factor.
    let mut scaled = FermionOperator::new();
    for (c, ops) in &op.terms {
        scaled.add_term(c * Complex64::new(0.0, 1.0), ops.clone());
    }
    let h = jordan_wigner(&scaled, n_qubits)?;
    if h.constant.abs() > 1e-12 {
        return Err(Error::Numerical("cluster generator has an identity component".into()));
    }
    Ok(h
        .terms
        .into_iter()
        .map(|mut s| {
            s.coeff *= Complex64::new(0.0, -1.0);
            s
        })
        .collect())
}

/// Compile `R_P(phi) = exp(-i phi P / 2)` for one Pauli string onto the
/// circuit; `phi` is either fixed or slot-bound through `param`.
fn push_string_rotation(c: &mut ParametricCircuit, p: &PauliString, param: Param) {
    let qubits: Vec<usize> = p.ops.keys().copied().collect();
    let last = *qubits.last().expect("non-identity string");
    for (&q, op) in &p.ops {
        match op {
            PauliOp::X => c.push(Gate::h(q)),
            PauliOp::Y => c.push(Gate::rx(q, Param::Fixed(std::f64::consts::FRAC_PI_2))),
            PauliOp::Z => {}
        }
    }
    for w in qubits.windows(2) {
        c.push(Gate::cnot(w[0], w[1]));
    }
    c.push(Gate::rz(last, param));
    for w in qubits.windows(2).rev() {
        c.push(Gate::cnot(w[0], w[1]));
    }
    for (&q, op) in &p.ops {
        match op {
            PauliOp::X => c.push(Gate::h(q)),
            PauliOp::Y => c.push(Gate::rx(q, Param::Fixed(-std::f64::consts::FRAC_PI_2))),
            PauliOp::Z => {}
        }
    }
}

/// Trotterized UCCSD circuit: `k` repetitions of the per-excitation string
/// products, approximating `exp(sum_e theta_e (T_e - T_e†))`. Two-qubit gates
/// may be long range; run `route_to_nearest_neighbor` before MPS application.
pub fn trotterized_circuit(pool: &[Excitation], n_qubits: usize, k: usize) -> Result<ParametricCircuit> {
    if k < 1 {
        return Err(Error::invalid("trotterized_circuit: k must be >= 1"));
    }
    let n_slots = pool.iter().map(|e| e.slot + 1).max().unwrap_or(0);
    let mut c = ParametricCircuit::new(n_qubits, n_slots);
    let strings: Vec<Vec<PauliString>> = pool
        .iter()
        .map(|e| cluster_to_pauli(e, n_qubits))
        .collect::<Result<_>>()?;
    for _ in 0..k {
        for (e, ss) in pool.iter().zip(&strings) {
            for s in ss {
                // string coefficient is i*c; exp(theta/k * i c P) = R_P(-2 c theta / k)
                let coef = s.coeff.im;
                if coef.abs() < 1e-12 {
                    continue;
                }
                let scale = -2.0 * coef / k as f64;
                push_string_rotation(&mut c, s, Param::Slot { slot: e.slot, scale });
            }
        }
    }
    c.validate()?;
    Ok(c)
}
