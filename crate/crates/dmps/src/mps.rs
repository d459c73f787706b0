//! Right-canonical matrix product state with stored bond Schmidt vectors.
//!
//! A state on `N` qubits is a chain of rank-3 site tensors `B[n]` with index
//! order (left bond, physical, right bond); here each site is stored as a pair
//! of matrices, one per physical index. Every site tensor satisfies the
//! right-canonical condition `sum_i B^i B^i† = I` and the per-bond Schmidt
//! vectors are kept alongside, TEBD-style, so that a two-qubit gate can be
//! applied with the Hastings update: weight the two-site tensor by the *left*
//! bond Schmidt vector, SVD, take the right factor as the new right tensor and
//! reconstruct the left tensor as `C·V†` without ever dividing by a Schmidt
//! value.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{dagger, truncated_svd, unitarity_error, CMat, C_ONE, C_ZERO};
use crate::pauli::PauliString;

/// Bond-dimension cap and relative SVD threshold for truncating operations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MpsSettings {
    pub d_max: usize,
    pub eps: f64,
}

impl MpsSettings {
    pub fn new(d_max: usize, eps: f64) -> Self {
        MpsSettings { d_max, eps }
    }

    /// Bond dimension sufficient for exact simulation of `n` qubits.
    pub fn exact(n: usize) -> Self {
        MpsSettings { d_max: 1usize << (n / 2), eps: 0.0 }
    }
}

/// One site: `b[i]` is the (left bond) x (right bond) matrix for physical
/// index `i`.
pub type SiteTensor = [CMat; 2];

#[derive(Debug, Clone)]
pub struct Mps {
    sites: Vec<SiteTensor>,
    /// N+1 Schmidt vectors; `schmidt[n]` sits on the bond left of site `n`,
    /// boundaries are the singleton `[1.0]`.
    schmidt: Vec<Vec<f64>>,
    pub settings: MpsSettings,
    /// When set, gate matrices are checked for unitarity before application.
    pub validate_gates: bool,
}

const UNITARY_TOL: f64 = 1e-12;
/// Below this canonical defect the post-truncation reorthogonalization of the
/// left tensor is skipped.
const LOWDIN_SKIP: f64 = 1e-13;

impl Mps {
    /// Computational-basis product state `|bits>` with bond dimension 1.
    pub fn product_state(bits: &[u8], settings: MpsSettings) -> Result<Mps> {
        if bits.is_empty() {
            return Err(Error::invalid("product_state: empty bit list"));
        }
        if settings.d_max < 1 {
            return Err(Error::invalid("product_state: d_max must be >= 1"));
        }
        let sites = bits
            .iter()
            .map(|&b| {
                if b > 1 {
                    return Err(Error::invalid(format!("product_state: bit value {b} not in {{0,1}}")));
                }
                let mut site = [CMat::zeros((1, 1)), CMat::zeros((1, 1))];
                site[b as usize][[0, 0]] = C_ONE;
                Ok(site)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Mps {
            schmidt: vec![vec![1.0]; bits.len() + 1],
            sites,
            settings,
            validate_gates: true,
        })
    }

    /// Reassemble a state from raw tensors, checking shape consistency; used
    /// by the snapshot loader.
    pub fn from_parts(sites: Vec<SiteTensor>, schmidt: Vec<Vec<f64>>, settings: MpsSettings) -> Result<Mps> {
        let n = sites.len();
        if n == 0 || schmidt.len() != n + 1 {
            return Err(Error::invalid("from_parts: need N sites and N+1 Schmidt vectors"));
        }
        if sites[0][0].nrows() != 1 || sites[n - 1][0].ncols() != 1 {
            return Err(Error::invalid("from_parts: boundary bonds must have dimension 1"));
        }
        for (i, site) in sites.iter().enumerate() {
            if site[0].dim() != site[1].dim() {
                return Err(Error::invalid(format!("from_parts: mismatched physical blocks at site {i}")));
            }
            if site[0].nrows() != schmidt[i].len() {
                return Err(Error::invalid(format!("from_parts: bond {i} dimension disagrees with Schmidt vector")));
            }
            if i + 1 < n && site[0].ncols() != sites[i + 1][0].nrows() {
                return Err(Error::invalid(format!("from_parts: bond mismatch between sites {i} and {}", i + 1)));
            }
        }
        if schmidt[n].len() != 1 {
            return Err(Error::invalid("from_parts: right boundary Schmidt vector must be [1]"));
        }
        Ok(Mps { sites, schmidt, settings, validate_gates: true })
    }

    pub fn n_qubits(&self) -> usize {
        self.sites.len()
    }

    pub fn site(&self, n: usize) -> &SiteTensor {
        &self.sites[n]
    }

    pub fn schmidt_vector(&self, bond: usize) -> &[f64] {
        &self.schmidt[bond]
    }

    /// Right-bond dimension of site `n`.
    pub fn bond_dim(&self, n: usize) -> usize {
        self.sites[n][0].ncols()
    }

    pub fn max_bond_dim(&self) -> usize {
        (0..self.n_qubits()).map(|n| self.bond_dim(n)).max().unwrap_or(1)
    }

    /// Max-norm deviation of site `n` from the right-canonical condition.
    pub fn canonical_defect(&self, n: usize) -> f64 {
        let [b0, b1] = &self.sites[n];
        let l = b0.nrows();
        let acc = b0.dot(&dagger(b0)) + b1.dot(&dagger(b1));
        let mut defect: f64 = 0.0;
        for i in 0..l {
            for j in 0..l {
                let target = if i == j { C_ONE } else { C_ZERO };
                defect = defect.max((acc[[i, j]] - target).norm());
            }
        }
        defect
    }

    pub fn max_canonical_defect(&self) -> f64 {
        (0..self.n_qubits()).map(|n| self.canonical_defect(n)).fold(0.0, f64::max)
    }

    pub fn norm(&self) -> f64 {
        self.inner(self).norm().sqrt()
    }

    /// Apply a 2x2 gate on `site` in place. No truncation occurs and the
    /// canonical form is preserved.
    pub fn apply_1q(&mut self, gate: &CMat, site: usize) -> Result<()> {
        if site >= self.n_qubits() {
            return Err(Error::invalid(format!("apply_1q: site {site} out of range")));
        }
        if gate.dim() != (2, 2) {
            return Err(Error::invalid("apply_1q: gate must be 2x2"));
        }
        if self.validate_gates && unitarity_error(gate) > UNITARY_TOL {
            return Err(Error::invalid("apply_1q: gate is not unitary"));
        }
        let [b0, b1] = &self.sites[site];
        let n0 = b0.mapv(|x| x * gate[[0, 0]]) + b1.mapv(|x| x * gate[[0, 1]]);
        let n1 = b0.mapv(|x| x * gate[[1, 0]]) + b1.mapv(|x| x * gate[[1, 1]]);
        self.sites[site] = [n0, n1];
        Ok(())
    }

    /// Apply a 4x4 gate on the neighbouring pair (`left_site`, `left_site+1`)
    /// using the Hastings update. The gate's row/column index is
    /// `i_left * 2 + i_right` with the left site as the more significant bit.
    /// Returns the discarded weight of the truncation.
    pub fn apply_2q_nn(&mut self, gate: &CMat, left_site: usize) -> Result<f64> {
        let n = left_site;
        if n + 1 >= self.n_qubits() {
            return Err(Error::invalid(format!("apply_2q_nn: site pair ({n},{}) out of range", n + 1)));
        }
        if gate.dim() != (4, 4) {
            return Err(Error::invalid("apply_2q_nn: gate must be 4x4"));
        }
        if self.validate_gates && unitarity_error(gate) > UNITARY_TOL {
            return Err(Error::invalid("apply_2q_nn: gate is not unitary"));
        }
        let l = self.sites[n][0].nrows();
        let r = self.sites[n + 1][0].ncols();

        // Two-site tensor with the gate contracted in: C^{i'j'} = sum_{ij} Q B^i B^j.
        let mut c = vec![CMat::zeros((l, r)), CMat::zeros((l, r)), CMat::zeros((l, r)), CMat::zeros((l, r))];
        for i in 0..2 {
            for j in 0..2 {
                let prod = self.sites[n][i].dot(&self.sites[n + 1][j]);
                for (oi, cm) in c.iter_mut().enumerate() {
                    let q = gate[[oi, i * 2 + j]];
                    if q != C_ZERO {
                        cm.scaled_add(q, &prod);
                    }
                }
            }
        }

        // Weight by the left-bond Schmidt vector and matricize:
        // rows (i', left bond), columns (j', right bond).
        let lam = &self.schmidt[n];
        let mut theta = CMat::zeros((2 * l, 2 * r));
        for ip in 0..2 {
            for jp in 0..2 {
                let cm = &c[ip * 2 + jp];
                for a in 0..l {
                    let w = Complex64::new(lam[a], 0.0);
                    for cc in 0..r {
                        theta[[ip * l + a, jp * r + cc]] = w * cm[[a, cc]];
                    }
                }
            }
        }

        let svd = truncated_svd(&theta, self.settings.d_max, self.settings.eps)?;
        let k = svd.rank();
        let snorm: f64 = svd.s.iter().map(|x| x * x).sum::<f64>().sqrt();
        self.schmidt[n + 1] = svd.s.iter().map(|x| x / snorm).collect();

        // Right tensor directly from V^H (right-canonical by construction).
        let mut right = [CMat::zeros((k, r)), CMat::zeros((k, r))];
        for jp in 0..2 {
            for b in 0..k {
                for cc in 0..r {
                    right[jp][[b, cc]] = svd.vh[[b, jp * r + cc]];
                }
            }
        }

        // Left tensor as C·V† (never dividing by the Schmidt vector).
        let mut left = [CMat::zeros((l, k)), CMat::zeros((l, k))];
        for ip in 0..2 {
            for jp in 0..2 {
                // conj-transpose of the j' block of V^H: (r x k)
                let mut vblk = CMat::zeros((r, k));
                for b in 0..k {
                    for cc in 0..r {
                        vblk[[cc, b]] = svd.vh[[b, jp * r + cc]].conj();
                    }
                }
                left[ip] = &left[ip] + &c[ip * 2 + jp].dot(&vblk);
            }
        }

        self.sites[n] = left;
        self.sites[n + 1] = right;

        // After a real truncation the reconstructed left tensor is canonical
        // only up to the discarded weight; restore the condition exactly with
        // a symmetric reorthogonalization. This also renormalizes the state.
        if self.canonical_defect(n) > LOWDIN_SKIP {
            let [b0, b1] = &self.sites[n];
            let acc = b0.dot(&dagger(b0)) + b1.dot(&dagger(b1));
            let (vals, vecs) = crate::linalg::herm_eigh(&acc)?;
            let max_eig = vals.iter().cloned().fold(0.0, f64::max);
            let min_eig = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            if min_eig >= 1e-6 * max_eig {
                // Well conditioned: symmetric reorthogonalization
                // T = acc^{-1/2} restores canonicality without touching
                // anything to the left of this bond.
                let mut scaled = vecs.clone();
                for (j, &v) in vals.iter().enumerate() {
                    let f = Complex64::new(1.0 / v.sqrt(), 0.0);
                    scaled.column_mut(j).mapv_inplace(|x| x * f);
                }
                let t = scaled.dot(&dagger(&vecs));
                self.sites[n] = [t.dot(b0), t.dot(b1)];
            } else {
                // Heavy truncation left acc rank deficient; the local
                // correction would amplify noise, so rebuild the whole
                // canonical form (and every Schmidt vector) from scratch.
                let snapshot = self.clone();
                let (fixed, _log_norm) =
                    add_and_compress(&[(C_ONE, &snapshot)], self.settings)?;
                let validate = self.validate_gates;
                *self = fixed;
                self.validate_gates = validate;
            }
        }
        Ok(svd.discarded_weight)
    }

    /// `<self|other>`; both states must share the qubit count.
    pub fn inner(&self, ket: &Mps) -> Complex64 {
        assert_eq!(self.n_qubits(), ket.n_qubits(), "inner: qubit count mismatch");
        let mut env = CMat::from_elem((1, 1), C_ONE);
        for n in 0..self.n_qubits() {
            let mut next = CMat::zeros((self.sites[n][0].ncols(), ket.sites[n][0].ncols()));
            for i in 0..2 {
                next = next + dagger(&self.sites[n][i]).dot(&env).dot(&ket.sites[n][i]);
            }
            env = next;
        }
        env[[0, 0]]
    }

    /// `<self| (op on site) |ket>` with an arbitrary 2x2 operator inserted.
    pub fn inner_with_1q(&self, ket: &Mps, op: &CMat, site: usize) -> Complex64 {
        assert_eq!(self.n_qubits(), ket.n_qubits(), "inner_with_1q: qubit count mismatch");
        let mut env = CMat::from_elem((1, 1), C_ONE);
        for n in 0..self.n_qubits() {
            let mut next = CMat::zeros((self.sites[n][0].ncols(), ket.sites[n][0].ncols()));
            if n == site {
                for ip in 0..2 {
                    for i in 0..2 {
                        let o = op[[ip, i]];
                        if o != C_ZERO {
                            next = next + dagger(&self.sites[n][ip]).dot(&env).dot(&ket.sites[n][i]).mapv(|x| x * o);
                        }
                    }
                }
            } else {
                for i in 0..2 {
                    next = next + dagger(&self.sites[n][i]).dot(&env).dot(&ket.sites[n][i]);
                }
            }
            env = next;
        }
        env[[0, 0]]
    }

    /// Expectation value of a weighted Pauli string via a left-to-right
    /// transfer contraction, O(N D^3). Sites right of the string's support are
    /// skipped using the right-canonical condition.
    pub fn expectation_pauli(&self, p: &PauliString) -> Result<Complex64> {
        let n_q = self.n_qubits();
        if p.support_end() > n_q {
            return Err(Error::invalid(format!(
                "expectation_pauli: string acts on qubit {} of {}",
                p.support_end() - 1,
                n_q
            )));
        }
        let last = p.support_end(); // contract up to here, then trace
        let mut env = CMat::from_elem((1, 1), C_ONE);
        for n in 0..last {
            let d = self.sites[n][0].ncols();
            let mut next = CMat::zeros((d, d));
            match p.ops.get(&n) {
                Some(op) => {
                    let m = op.matrix();
                    for ip in 0..2 {
                        for i in 0..2 {
                            let o = m[[ip, i]];
                            if o != C_ZERO {
                                next = next
                                    + dagger(&self.sites[n][ip]).dot(&env).dot(&self.sites[n][i]).mapv(|x| x * o);
                            }
                        }
                    }
                }
                None => {
                    for i in 0..2 {
                        next = next + dagger(&self.sites[n][i]).dot(&env).dot(&self.sites[n][i]);
                    }
                }
            }
            env = next;
        }
        let trace: Complex64 = env.diag().iter().sum();
        Ok(p.coeff * trace)
    }

    /// Apply a Pauli string's operator content to a copy of the state; the
    /// string's coefficient is returned as a separate scalar weight. Bond
    /// dimensions are unchanged (a Pauli string is a product of single-qubit
    /// unitaries).
    pub fn apply_pauli_string(&self, p: &PauliString) -> Result<(Complex64, Mps)> {
        if p.support_end() > self.n_qubits() {
            return Err(Error::invalid("apply_pauli_string: string exceeds qubit count"));
        }
        let mut out = self.clone();
        for (&q, &op) in &p.ops {
            out.apply_1q(&op.matrix(), q)?;
        }
        Ok((p.coeff, out))
    }

    /// Dense amplitude vector with qubit 0 as the most significant digit.
    pub fn to_statevector(&self) -> Result<Vec<Complex64>> {
        let n = self.n_qubits();
        if n > 26 {
            return Err(Error::Resource(format!("to_statevector: {n} qubits exceeds the 26-qubit guard")));
        }
        let mut prefix = CMat::from_elem((1, 1), C_ONE);
        for site in &self.sites {
            let rows = prefix.nrows();
            let r = site[0].ncols();
            let mut next = CMat::zeros((rows * 2, r));
            for i in 0..2 {
                let part = prefix.dot(&site[i]);
                for a in 0..rows {
                    for cc in 0..r {
                        next[[a * 2 + i, cc]] = part[[a, cc]];
                    }
                }
            }
            prefix = next;
        }
        Ok(prefix.column(0).to_vec())
    }

    /// Renormalize in place (divides by the current norm).
    pub fn renormalize(&mut self) -> Result<()> {
        let norm = self.norm();
        if norm < 1e-300 {
            return Err(Error::Degenerate("renormalize: zero-norm state".into()));
        }
        let inv = Complex64::new(1.0 / norm, 0.0);
        for i in 0..2 {
            self.sites[0][i].mapv_inplace(|x| x * inv);
        }
        Ok(())
    }
}

/// Form `sum_j w_j |psi_j>` by bond-wise direct sum, then compress to the
/// given settings with a left-to-right QR sweep followed by a right-to-left
/// truncated-SVD sweep that repopulates every bond's Schmidt vector.
///
/// Returns a normalized right-canonical state `m` and `log_norm` such that
/// `exp(log_norm) * m` approximates the sum.
pub fn add_and_compress(
    terms: &[(Complex64, &Mps)],
    settings: MpsSettings,
) -> Result<(Mps, f64)> {
    if terms.is_empty() {
        return Err(Error::invalid("add_and_compress: empty term list"));
    }
    let n_q = terms[0].1.n_qubits();
    for (_, m) in terms {
        if m.n_qubits() != n_q {
            return Err(Error::invalid("add_and_compress: mismatched qubit counts"));
        }
    }

    // Direct sum: block-diagonal inner sites, concatenated boundary sites,
    // term weights absorbed into site 0.
    let mut sites: Vec<SiteTensor> = Vec::with_capacity(n_q);
    for n in 0..n_q {
        let l_tot: usize = if n == 0 { 1 } else { terms.iter().map(|(_, m)| m.sites[n][0].nrows()).sum() };
        let r_tot: usize = if n == n_q - 1 { 1 } else { terms.iter().map(|(_, m)| m.sites[n][0].ncols()).sum() };
        let mut site = [CMat::zeros((l_tot, r_tot)), CMat::zeros((l_tot, r_tot))];
        let (mut lo, mut ro) = (0usize, 0usize);
        for (w, m) in terms {
            let b = &m.sites[n];
            let (bl, br) = b[0].dim();
            for i in 0..2 {
                for a in 0..bl {
                    for cc in 0..br {
                        let dst_l = if n == 0 { 0 } else { lo + a };
                        let dst_r = if n == n_q - 1 { 0 } else { ro + cc };
                        let mut v = b[i][[a, cc]];
                        if n == 0 {
                            v *= w;
                        }
                        site[i][[dst_l, dst_r]] += v;
                    }
                }
            }
            lo += bl;
            ro += br;
        }
        sites.push(site);
    }

    let mut out = Mps {
        sites,
        schmidt: vec![vec![1.0]; n_q + 1],
        settings,
        validate_gates: terms[0].1.validate_gates,
    };

    // Left-to-right QR sweep: bring every site into left-canonical form so
    // the following SVD sweep yields true Schmidt vectors.
    use ndarray_linalg::QRInto;
    let mut carry: Option<CMat> = None;
    for n in 0..n_q {
        let [b0, b1] = &out.sites[n];
        let (b0, b1) = match &carry {
            Some(r) => (r.dot(b0), r.dot(b1)),
            None => (b0.clone(), b1.clone()),
        };
        if n == n_q - 1 {
            out.sites[n] = [b0, b1];
            break;
        }
        let (l, r) = b0.dim();
        let mut m = CMat::zeros((2 * l, r));
        for a in 0..l {
            for cc in 0..r {
                m[[a, cc]] = b0[[a, cc]];
                m[[l + a, cc]] = b1[[a, cc]];
            }
        }
        let (q, rr) = m
            .qr_into()
            .map_err(|e| Error::Numerical(format!("QR failed during compression sweep: {e}")))?;
        let k = q.ncols();
        let mut site = [CMat::zeros((l, k)), CMat::zeros((l, k))];
        for a in 0..l {
            for cc in 0..k {
                site[0][[a, cc]] = q[[a, cc]];
                site[1][[a, cc]] = q[[l + a, cc]];
            }
        }
        out.sites[n] = site;
        carry = Some(rr);
    }

    // Right-to-left truncated SVD sweep: restores the right-canonical form
    // and stores the Schmidt vector at every bond.
    let mut carry: Option<CMat> = None;
    for n in (1..n_q).rev() {
        let [b0, b1] = &out.sites[n];
        let (b0, b1) = match &carry {
            Some(t) => (b0.dot(t), b1.dot(t)),
            None => (b0.clone(), b1.clone()),
        };
        let (l, r) = b0.dim();
        let mut m = CMat::zeros((l, 2 * r));
        for a in 0..l {
            for cc in 0..r {
                m[[a, cc]] = b0[[a, cc]];
                m[[a, r + cc]] = b1[[a, cc]];
            }
        }
        let svd = truncated_svd(&m, settings.d_max, settings.eps)?;
        let k = svd.rank();
        let snorm: f64 = svd.s.iter().map(|x| x * x).sum::<f64>().sqrt();
        if snorm < 1e-300 {
            return Err(Error::Degenerate("add_and_compress: the sum is numerically zero".into()));
        }
        out.schmidt[n] = svd.s.iter().map(|x| x / snorm).collect();
        let mut site = [CMat::zeros((k, r)), CMat::zeros((k, r))];
        for i in 0..2 {
            for b in 0..k {
                for cc in 0..r {
                    site[i][[b, cc]] = svd.vh[[b, i * r + cc]];
                }
            }
        }
        out.sites[n] = site;
        let mut us = svd.u.clone();
        for (mut col, &sv) in us.columns_mut().into_iter().zip(svd.s.iter()) {
            col.mapv_inplace(|x| x * sv);
        }
        carry = Some(us);
    }
    if let Some(t) = carry {
        out.sites[0] = [out.sites[0][0].dot(&t), out.sites[0][1].dot(&t)];
    }

    let norm2: f64 = out.sites[0][0].iter().chain(out.sites[0][1].iter()).map(|x| x.norm_sqr()).sum();
    let norm = norm2.sqrt();
    if norm < 1e-300 {
        return Err(Error::Degenerate("add_and_compress: the sum is numerically zero".into()));
    }
    let inv = Complex64::new(1.0 / norm, 0.0);
    for i in 0..2 {
        out.sites[0][i].mapv_inplace(|x| x * inv);
    }
    Ok((out, norm.ln()))
}
