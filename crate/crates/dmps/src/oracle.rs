//! Brute-force dense reference implementations: state-vector circuit
//! simulation, dense operator matrices, exact diagonalization and a Fock-space
//! fermionic oracle. Correctness only, no performance tuning; everything in
//! the tensor-network path is validated against this module.
//!
//! Basis convention everywhere: qubit 0 is the most significant digit of the
//! amplitude index, matching `Mps::to_statevector`.

use ndarray::Array1;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::circuit::ParametricCircuit;
use crate::error::{Error, Result};
use crate::fermion::FermionOperator;
use crate::linalg::{herm_eigh, CMat, C_ONE, C_ZERO};
use crate::pauli::{PauliString, QubitHamiltonian};

const MAX_SV_QUBITS: usize = 26;

#[derive(Debug, Clone)]
pub struct StateVector {
    pub n_qubits: usize,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis_state(bits: &[u8]) -> Result<StateVector> {
        let n = bits.len();
        if n == 0 || n > MAX_SV_QUBITS {
            return Err(Error::Resource(format!("state vector limited to 1..={MAX_SV_QUBITS} qubits, got {n}")));
        }
        let mut idx = 0usize;
        for &b in bits {
            if b > 1 {
                return Err(Error::invalid("basis_state: bits must be 0 or 1"));
            }
            idx = (idx << 1) | b as usize;
        }
        let mut amps = vec![C_ZERO; 1 << n];
        amps[idx] = C_ONE;
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<StateVector> {
        let n = amps.len().trailing_zeros() as usize;
        if amps.len() == 0 || amps.len() != 1 << n || n > MAX_SV_QUBITS {
            return Err(Error::invalid("from_amplitudes: length must be a power of two within the qubit limit"));
        }
        Ok(StateVector { n_qubits: n, amps })
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn bitpos(&self, q: usize) -> usize {
        self.n_qubits - 1 - q
    }

    pub fn apply_1q(&mut self, m: &CMat, q: usize) -> Result<()> {
        if q >= self.n_qubits {
            return Err(Error::invalid(format!("apply_1q: qubit {q} out of range")));
        }
        let bit = 1usize << self.bitpos(q);
        for idx in 0..self.amps.len() {
            if idx & bit == 0 {
                let (a0, a1) = (self.amps[idx], self.amps[idx | bit]);
                self.amps[idx] = m[[0, 0]] * a0 + m[[0, 1]] * a1;
                self.amps[idx | bit] = m[[1, 0]] * a0 + m[[1, 1]] * a1;
            }
        }
        Ok(())
    }

    /// Apply a 4x4 matrix to qubits (`qa`, `qb`), `qa` being the more
    /// significant bit of the gate's index.
    pub fn apply_2q(&mut self, m: &CMat, qa: usize, qb: usize) -> Result<()> {
        if qa >= self.n_qubits || qb >= self.n_qubits || qa == qb {
            return Err(Error::invalid("apply_2q: bad qubit pair"));
        }
        let ba = 1usize << self.bitpos(qa);
        let bb = 1usize << self.bitpos(qb);
        for idx in 0..self.amps.len() {
            if idx & ba == 0 && idx & bb == 0 {
                let ids = [idx, idx | bb, idx | ba, idx | ba | bb];
                let old = ids.map(|i| self.amps[i]);
                for r in 0..4 {
                    let mut acc = C_ZERO;
                    for cc in 0..4 {
                        acc += m[[r, cc]] * old[cc];
                    }
                    self.amps[ids[r]] = acc;
                }
            }
        }
        Ok(())
    }
}

/// Exact dense evolution of a circuit (gates may be long range).
pub fn sv_apply_circuit(sv: &StateVector, c: &ParametricCircuit, params: &[f64]) -> Result<StateVector> {
    if c.n_qubits != sv.n_qubits {
        return Err(Error::invalid("sv_apply_circuit: qubit count mismatch"));
    }
    if params.len() != c.n_slots {
        return Err(Error::invalid("sv_apply_circuit: wrong parameter count"));
    }
    let mut out = sv.clone();
    for g in &c.gates {
        let m = g.matrix(params)?;
        match g.qubits.len() {
            1 => out.apply_1q(&m, g.qubits[0])?,
            _ => out.apply_2q(&m, g.qubits[0], g.qubits[1])?,
        }
    }
    Ok(out)
}

/// Accumulate `p|v>` (including the string's coefficient) into `out`.
fn accumulate_pauli(p: &PauliString, n: usize, v: &[Complex64], out: &mut [Complex64]) {
    let mut flip = 0usize;
    let mut ys: Vec<usize> = Vec::new();
    let mut zs: Vec<usize> = Vec::new();
    for (&q, op) in &p.ops {
        let bit = 1usize << (n - 1 - q);
        match op {
            crate::pauli::PauliOp::X => flip |= bit,
            crate::pauli::PauliOp::Y => {
                flip |= bit;
                ys.push(bit);
            }
            crate::pauli::PauliOp::Z => zs.push(bit),
        }
    }
    let i = Complex64::new(0.0, 1.0);
    for idx in 0..v.len() {
        let mut phase = p.coeff;
        for &b in &ys {
            phase *= if idx & b == 0 { i } else { -i };
        }
        for &b in &zs {
            if idx & b != 0 {
                phase = -phase;
            }
        }
        out[idx ^ flip] += phase * v[idx];
    }
}

/// `H|v>` without the constant term.
pub fn sv_apply_hamiltonian(h: &QubitHamiltonian, sv: &StateVector) -> Result<StateVector> {
    if h.n_qubits != sv.n_qubits {
        return Err(Error::invalid("sv_apply_hamiltonian: qubit count mismatch"));
    }
    let mut out = vec![C_ZERO; sv.amps.len()];
    for t in &h.terms {
        accumulate_pauli(t, sv.n_qubits, &sv.amps, &mut out);
    }
    Ok(StateVector { n_qubits: sv.n_qubits, amps: out })
}

/// `<v|H|v>` including the constant. The state must be normalized by the
/// caller if a physical expectation is wanted.
pub fn sv_expectation(sv: &StateVector, h: &QubitHamiltonian) -> Result<f64> {
    let hv = sv_apply_hamiltonian(h, sv)?;
    let n2: f64 = sv.amps.iter().map(|a| a.norm_sqr()).sum();
    Ok(sv.inner(&hv).re + h.constant * n2)
}

/// Dense 2^N x 2^N matrix of one weighted Pauli string.
pub fn dense_pauli_matrix(p: &PauliString, n_qubits: usize) -> Result<CMat> {
    if n_qubits > 12 {
        return Err(Error::Resource("dense_pauli_matrix limited to 12 qubits".into()));
    }
    let dim = 1usize << n_qubits;
    let mut m = CMat::zeros((dim, dim));
    let mut col = vec![C_ZERO; dim];
    for j in 0..dim {
        col.iter_mut().for_each(|x| *x = C_ZERO);
        let mut basis = vec![C_ZERO; dim];
        basis[j] = C_ONE;
        accumulate_pauli(p, n_qubits, &basis, &mut col);
        for (i2, &x) in col.iter().enumerate() {
            m[[i2, j]] = x;
        }
    }
    Ok(m)
}

/// Dense matrix of the whole Hamiltonian including its constant.
pub fn dense_hamiltonian(h: &QubitHamiltonian) -> Result<CMat> {
    if h.n_qubits > 12 {
        return Err(Error::Resource("dense_hamiltonian limited to 12 qubits".into()));
    }
    let dim = 1usize << h.n_qubits;
    let mut m = CMat::eye(dim).mapv(|x| x * Complex64::new(h.constant, 0.0));
    for t in &h.terms {
        m = m + dense_pauli_matrix(t, h.n_qubits)?;
    }
    Ok(m)
}

const DENSE_DIAG_LIMIT: usize = 8;
const LANCZOS_LIMIT: usize = 24;

/// Lowest eigenvalue of the qubit Hamiltonian: dense diagonalization at small
/// sizes, restarted Lanczos with a matrix-free Pauli action beyond. The
/// returned value satisfies `||Hv - Ev|| <= 1e-8` for the internal Ritz
/// vector.
pub fn exact_ground_energy(h: &QubitHamiltonian) -> Result<f64> {
    let n = h.n_qubits;
    if h.terms.is_empty() {
        return Ok(h.constant);
    }
    if n <= DENSE_DIAG_LIMIT {
        let m = dense_hamiltonian(h)?;
        let (vals, _) = herm_eigh(&m)?;
        return Ok(vals[0]);
    }
    if n > LANCZOS_LIMIT {
        return Err(Error::Resource(format!("exact_ground_energy limited to {LANCZOS_LIMIT} qubits, got {n}")));
    }
    lanczos_ground(h).map(|(e, _)| e + h.constant)
}

/// Restarted Lanczos for the lowest eigenpair of the string part of `h`
/// (constant excluded). Deterministic start vector.
fn lanczos_ground(h: &QubitHamiltonian) -> Result<(f64, Vec<Complex64>)> {
    let n = h.n_qubits;
    let dim = 1usize << n;
    let mut rng = ChaCha8Rng::seed_from_u64(0x4c414e43);
    let mut v: Vec<Complex64> = (0..dim)
        .map(|_| Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5))
        .collect();
    normalize(&mut v)?;

    let window = 30usize;
    let max_restarts = 400usize;
    let tol = 1e-8;
    let mut last_energy = f64::INFINITY;

    for _ in 0..max_restarts {
        // One Lanczos pass with full reorthogonalization inside the window.
        let mut basis: Vec<Vec<Complex64>> = vec![v.clone()];
        let mut alphas: Vec<f64> = Vec::new();
        let mut betas: Vec<f64> = Vec::new();
        for j in 0..window {
            let mut w = apply_strings(h, &basis[j]);
            let alpha = dot(&basis[j], &w).re;
            alphas.push(alpha);
            for b in &basis {
                let ov = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= ov * bi;
                }
            }
            // second orthogonalization pass for stability
            for b in &basis {
                let ov = dot(b, &w);
                for (wi, bi) in w.iter_mut().zip(b) {
                    *wi -= ov * bi;
                }
            }
            let beta = norm(&w);
            if beta < 1e-13 {
                break;
            }
            betas.push(beta);
            let inv = Complex64::new(1.0 / beta, 0.0);
            w.iter_mut().for_each(|x| *x *= inv);
            basis.push(w);
        }

        // Tridiagonal Ritz problem.
        let k = alphas.len();
        let mut t = CMat::zeros((k, k));
        for i in 0..k {
            t[[i, i]] = Complex64::new(alphas[i], 0.0);
            if i + 1 < k && i < betas.len() {
                t[[i, i + 1]] = Complex64::new(betas[i], 0.0);
                t[[i + 1, i]] = Complex64::new(betas[i], 0.0);
            }
        }
        let (vals, vecs) = herm_eigh(&t)?;
        let theta = vals[0];
        let mut ritz = vec![C_ZERO; dim];
        for (j, b) in basis.iter().take(k).enumerate() {
            let w = vecs[[j, 0]];
            for (ri, bi) in ritz.iter_mut().zip(b) {
                *ri += w * bi;
            }
        }
        normalize(&mut ritz)?;

        let hv = apply_strings(h, &ritz);
        let resid2: f64 = hv
            .iter()
            .zip(&ritz)
            .map(|(a, b)| (a - b * Complex64::new(theta, 0.0)).norm_sqr())
            .sum();
        if resid2.sqrt() <= tol && (theta - last_energy).abs() <= tol {
            return Ok((theta, ritz));
        }
        last_energy = theta;
        v = ritz;
    }
    Err(Error::Numerical("Lanczos did not reach the residual tolerance".into()))
}

fn apply_strings(h: &QubitHamiltonian, v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![C_ZERO; v.len()];
    for t in &h.terms {
        accumulate_pauli(t, h.n_qubits, v, &mut out);
    }
    out
}

fn dot(a: &[Complex64], b: &[Complex64]) -> Complex64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

fn normalize(v: &mut [Complex64]) -> Result<()> {
    let n = norm(v);
    if n < 1e-300 {
        return Err(Error::Degenerate("cannot normalize a zero vector".into()));
    }
    let inv = Complex64::new(1.0 / n, 0.0);
    v.iter_mut().for_each(|x| *x *= inv);
    Ok(())
}

/// Dense Fock-space matrix of a fermionic operator on `n_modes` modes.
/// Occupation-number basis with mode 0 as the most significant bit, matching
/// the qubit ordering after the Jordan-Wigner mapping.
pub fn fock_matrix(op: &FermionOperator, n_modes: usize) -> Result<CMat> {
    if n_modes > 12 {
        return Err(Error::Resource("fock_matrix limited to 12 modes".into()));
    }
    if op.n_modes() > n_modes {
        return Err(Error::invalid("fock_matrix: operator acts beyond n_modes"));
    }
    let dim = 1usize << n_modes;
    let mut m = CMat::zeros((dim, dim));
    for (coeff, ladders) in &op.terms {
        for j in 0..dim {
            // apply the product right-to-left to basis state j
            let mut idx = j;
            let mut sign = 1.0f64;
            let mut dead = false;
            for l in ladders.iter().rev() {
                let bit = 1usize << (n_modes - 1 - l.mode);
                let occupied = idx & bit != 0;
                if l.dagger == occupied {
                    dead = true;
                    break;
                }
                // parity of occupations on modes below l.mode
                let higher_mask = !((bit << 1) - 1) & (dim - 1);
                if (idx & higher_mask).count_ones() % 2 == 1 {
                    sign = -sign;
                }
                idx ^= bit;
            }
            if !dead {
                m[[idx, j]] += coeff * Complex64::new(sign, 0.0);
            }
        }
    }
    Ok(m)
}

/// Lowest eigenvalue of the Fock-space matrix; FCI reference at desk scale.
pub fn fock_ground_energy(op: &FermionOperator, n_modes: usize) -> Result<f64> {
    let m = fock_matrix(op, n_modes)?;
    let (vals, _) = herm_eigh(&m)?;
    Ok(vals[0])
}

/// Eigenvector check helper shared by tests: `||Hv - Ev||`.
pub fn residual_norm(h: &QubitHamiltonian, v: &[Complex64], e: f64) -> f64 {
    let hv = apply_strings(h, v);
    hv.iter()
        .zip(v)
        .map(|(a, b)| (a + b * Complex64::new(h.constant - e, 0.0)).norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// Ascending spectrum of a small Hamiltonian, dense path.
pub fn dense_spectrum(h: &QubitHamiltonian) -> Result<Array1<f64>> {
    let m = dense_hamiltonian(h)?;
    Ok(herm_eigh(&m)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::{random_circuit, Gate, ParametricCircuit};
    use crate::fermion::{jordan_wigner, Ladder};
    use crate::pauli::PauliOp;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn zq(q: usize) -> PauliString {
        PauliString::new(C_ONE, [(q, PauliOp::Z)])
    }

    #[test]
    fn bell_construction() {
        let sv = StateVector::basis_state(&[0, 0]).unwrap();
        let mut circ = ParametricCircuit::new(2, 0);
        circ.push(Gate::h(0));
        circ.push(Gate::cnot(0, 1));
        let out = sv_apply_circuit(&sv, &circ, &[]).unwrap();
        let inv = 1.0 / 2.0_f64.sqrt();
        assert!((out.amps[0].re - inv).abs() < 1e-14);
        assert!((out.amps[3].re - inv).abs() < 1e-14);
        let h = QubitHamiltonian::from_strings(
            2,
            vec![PauliString::new(C_ONE, [(0, PauliOp::X), (1, PauliOp::X)])],
        )
        .unwrap();
        assert!((sv_expectation(&out, &h).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn x_chain_parity() {
        let sv = StateVector::basis_state(&[0, 0, 0]).unwrap();
        let mut circ = ParametricCircuit::new(3, 0);
        for q in 0..3 {
            circ.push(Gate::x(q));
        }
        let out = sv_apply_circuit(&sv, &circ, &[]).unwrap();
        assert!((out.amps[7] - C_ONE).norm() < 1e-14);
        let h = QubitHamiltonian::from_strings(3, vec![zq(0), zq(1), zq(2)]).unwrap();
        assert!((sv_expectation(&out, &h).unwrap() + 3.0).abs() < 1e-12);
    }

    #[test]
    fn long_range_gate_acts_correctly() {
        // CNOT(0,2) on |100> -> |101>
        let sv = StateVector::basis_state(&[1, 0, 0]).unwrap();
        let mut circ = ParametricCircuit::new(3, 0);
        circ.push(Gate::cnot(0, 2));
        let out = sv_apply_circuit(&sv, &circ, &[]).unwrap();
        assert!((out.amps[0b101] - C_ONE).norm() < 1e-14);
    }

    #[test]
    fn expectation_matches_dense_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let circ = random_circuit(&mut rng, 4, 25, 2);
        let params = [0.4, -1.2];
        let sv = sv_apply_circuit(&StateVector::basis_state(&[0; 4]).unwrap(), &circ, &params).unwrap();
        let strings = vec![
            PauliString::new(c(0.7, 0.0), [(0, PauliOp::X), (2, PauliOp::Y)]),
            PauliString::new(c(-0.3, 0.0), [(1, PauliOp::Z), (3, PauliOp::Z)]),
            PauliString::new(c(0.1, 0.0), [(2, PauliOp::X)]),
        ];
        let h = QubitHamiltonian::from_strings(4, strings).unwrap();
        let m = dense_hamiltonian(&h).unwrap();
        let mut want = C_ZERO;
        for i in 0..16 {
            for j in 0..16 {
                want += sv.amps[i].conj() * m[[i, j]] * sv.amps[j];
            }
        }
        assert!((sv_expectation(&sv, &h).unwrap() - want.re).abs() < 1e-12);
    }

    #[test]
    fn ground_energy_of_simple_models() {
        let h = QubitHamiltonian::from_strings(1, vec![zq(0)]).unwrap();
        assert!((exact_ground_energy(&h).unwrap() + 1.0).abs() < 1e-12);

        // X0 X1 + Z0 + Z1 against its dense 4x4 spectrum
        let h = QubitHamiltonian::from_strings(
            2,
            vec![
                PauliString::new(C_ONE, [(0, PauliOp::X), (1, PauliOp::X)]),
                zq(0),
                zq(1),
            ],
        )
        .unwrap();
        let spec = dense_spectrum(&h).unwrap();
        assert!((exact_ground_energy(&h).unwrap() - spec[0]).abs() < 1e-12);
        // analytic: eigenvalues of that matrix are ±1, ±sqrt(5)
        assert!((spec[0] + 5.0_f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn lanczos_agrees_with_dense() {
        // 9 qubits forces the iterative path; compare against the dense value
        // computed directly (dense_hamiltonian allows up to 12).
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 9;
        let mut strings = Vec::new();
        for q in 0..n - 1 {
            strings.push(PauliString::new(
                c(rng.gen_range(-1.0..1.0), 0.0),
                [(q, PauliOp::X), (q + 1, PauliOp::X)],
            ));
            strings.push(PauliString::new(c(rng.gen_range(-1.0..1.0), 0.0), [(q, PauliOp::Z)]));
        }
        let h = QubitHamiltonian::from_strings(n, strings).unwrap();
        let e_it = exact_ground_energy(&h).unwrap();
        let m = dense_hamiltonian(&h).unwrap();
        let (vals, _) = herm_eigh(&m).unwrap();
        assert!((e_it - vals[0]).abs() < 1e-7, "iterative {e_it} vs dense {}", vals[0]);
    }

    #[test]
    fn constant_only_hamiltonian() {
        let mut h = QubitHamiltonian::new(3);
        h.constant = -2.5;
        assert_eq!(exact_ground_energy(&h).unwrap(), -2.5);
    }

    #[test]
    fn number_operator_fock_matrix() {
        let mut op = FermionOperator::new();
        op.add_term(C_ONE, vec![Ladder::create(0), Ladder::annihilate(0)]);
        let m = fock_matrix(&op, 2).unwrap();
        // mode 0 is the most significant bit: indices 2,3 are occupied
        for j in 0..4 {
            let want = if j >= 2 { C_ONE } else { C_ZERO };
            assert!((m[[j, j]] - want).norm() < 1e-14);
        }
    }

    #[test]
    fn anticommutator_is_identity() {
        let mut ab = FermionOperator::new();
        ab.add_term(C_ONE, vec![Ladder::annihilate(0), Ladder::create(0)]);
        ab.add_term(C_ONE, vec![Ladder::create(0), Ladder::annihilate(0)]);
        let m = fock_matrix(&ab, 2).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let want = if i == j { C_ONE } else { C_ZERO };
                assert!((m[[i, j]] - want).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn jordan_wigner_matches_fock_matrix() {
        let mut op = FermionOperator::new();
        op.add_term(c(0.8, 0.0), vec![Ladder::create(0), Ladder::annihilate(2)]);
        op.add_term(c(0.8, 0.0), vec![Ladder::create(2), Ladder::annihilate(0)]);
        op.add_term(c(-0.5, 0.0), vec![Ladder::create(1), Ladder::annihilate(1)]);
        let want = fock_matrix(&op, 3).unwrap();
        let h = jordan_wigner(&op, 3).unwrap();
        let got = dense_hamiltonian(&h).unwrap();
        for i in 0..8 {
            for j in 0..8 {
                assert!(
                    (want[[i, j]] - got[[i, j]]).norm() < 1e-10,
                    "mismatch at ({i},{j}): {} vs {}",
                    want[[i, j]],
                    got[[i, j]]
                );
            }
        }
    }

    #[test]
    fn mps_exact_mode_agrees_with_statevector() {
        use crate::circuit::{apply_circuit, route_to_nearest_neighbor};
        use crate::mps::{Mps, MpsSettings};
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..5 {
            let n = rng.gen_range(3..=6);
            let circ = random_circuit(&mut rng, n, 30, 2);
            let params = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let bits = vec![0u8; n];
            let sv = sv_apply_circuit(&StateVector::basis_state(&bits).unwrap(), &circ, &params).unwrap();
            let routed = route_to_nearest_neighbor(&circ);
            let mut mps = Mps::product_state(&bits, MpsSettings::exact(n)).unwrap();
            apply_circuit(&mut mps, &routed, &params).unwrap();
            let got = StateVector::from_amplitudes(mps.to_statevector().unwrap()).unwrap();
            let fid = got.fidelity(&sv);
            assert!(fid > 1.0 - 1e-10, "fidelity {fid}");
        }
    }
}
