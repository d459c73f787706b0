//! FCIDUMP parsing and construction of the second-quantized molecular
//! Hamiltonian from one- and two-electron integrals.
//!
//! The FCIDUMP body carries integrals in chemist notation `(pq|rs)` with the
//! standard 8-fold permutational symmetry; the conversion to the physicist
//! two-body form with its 1/2 prefactor happens in
//! [`build_fermionic_hamiltonian`]. Spin-orbitals are interleaved: spatial
//! orbital `p` maps to spin-orbitals `2p` (alpha) and `2p+1` (beta).

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::fermion::{FermionOperator, Ladder};

/// One-/two-electron integrals plus core energy in the molecular orbital basis.
#[derive(Debug, Clone)]
pub struct MolecularIntegrals {
    pub n_orbitals: usize,
    pub n_electrons: usize,
    pub ms2: i64,
    /// One-electron matrix h[p][q], symmetric.
    pub h: Vec<Vec<f64>>,
    /// Two-electron tensor (pq|rs) in chemist notation, dense n^4.
    pub g: Vec<f64>,
    /// Core (nuclear repulsion) energy in Hartree.
    pub e_core: f64,
}

impl MolecularIntegrals {
    pub fn empty(n_orbitals: usize, n_electrons: usize) -> Self {
        MolecularIntegrals {
            n_orbitals,
            n_electrons,
            ms2: 0,
            h: vec![vec![0.0; n_orbitals]; n_orbitals],
            g: vec![0.0; n_orbitals.pow(4)],
            e_core: 0.0,
        }
    }

    #[inline]
    fn g_idx(&self, p: usize, q: usize, r: usize, s: usize) -> usize {
        ((p * self.n_orbitals + q) * self.n_orbitals + r) * self.n_orbitals + s
    }

    /// Chemist-notation (pq|rs).
    pub fn g_chem(&self, p: usize, q: usize, r: usize, s: usize) -> f64 {
        self.g[self.g_idx(p, q, r, s)]
    }

    /// Store (pq|rs) together with all 8 symmetry-equivalent entries.
    pub fn set_g_chem(&mut self, p: usize, q: usize, r: usize, s: usize, value: f64) {
        for (a, b, c, d) in [
            (p, q, r, s),
            (q, p, r, s),
            (p, q, s, r),
            (q, p, s, r),
            (r, s, p, q),
            (s, r, p, q),
            (r, s, q, p),
            (s, r, q, p),
        ] {
            let idx = self.g_idx(a, b, c, d);
            self.g[idx] = value;
        }
    }

    /// Restricted Hartree-Fock determinant energy computed directly from the
    /// integrals (doubly occupied lowest spatial orbitals).
    pub fn hf_energy(&self) -> f64 {
        let n_occ = self.n_electrons / 2;
        let mut e = self.e_core;
        for i in 0..n_occ {
            e += 2.0 * self.h[i][i];
            for j in 0..n_occ {
                e += 2.0 * self.g_chem(i, i, j, j) - self.g_chem(i, j, i, j);
            }
        }
        e
    }

    pub fn symmetry_defect(&self) -> f64 {
        let n = self.n_orbitals;
        let mut defect: f64 = 0.0;
        for p in 0..n {
            for q in 0..n {
                defect = defect.max((self.h[p][q] - self.h[q][p]).abs());
            }
        }
        defect
    }
}

fn parse_header_value(body: &str, key: &str) -> Option<i64> {
    // Header entries look like `NORB=4,` or `NORB = 4`.
    let upper = body.to_uppercase();
    let pos = upper.find(key)?;
    let rest = &body[pos + key.len()..];
    let rest = rest.trim_start().strip_prefix('=')?.trim_start();
    let num: String = rest
        .chars()
        .take_while(|c| c.is_ascii_digit() || *c == '-' || *c == '+')
        .collect();
    num.parse().ok()
}

/// Parse a Molpro-style FCIDUMP file.
///
/// Body lines are `value i j k l` with 1-based indices in chemist notation;
/// `i j 0 0` is a one-electron entry and `0 0 0 0` the core energy.
pub fn parse_fcidump(text: &str) -> Result<MolecularIntegrals> {
    // Split the namelist header (terminated by `&END` or `/`) from the body.
    let upper = text.to_uppercase();
    if !upper.trim_start().starts_with("&FCI") {
        return Err(Error::parse(1, "missing &FCI namelist header"));
    }
    let (header_end, body_start) = if let Some(p) = upper.find("&END") {
        (p, p + 4)
    } else if let Some(p) = upper.find("/\n").or_else(|| upper.find("/\r")) {
        (p, p + 1)
    } else {
        return Err(Error::parse(1, "namelist header not terminated by &END or /"));
    };
    let header = &text[..header_end];
    let header_lines = text[..body_start].lines().count();

    let norb = parse_header_value(header, "NORB")
        .ok_or_else(|| Error::parse(1, "missing NORB in header"))?;
    let nelec = parse_header_value(header, "NELEC")
        .ok_or_else(|| Error::parse(1, "missing NELEC in header"))?;
    let ms2 = parse_header_value(header, "MS2")
        .ok_or_else(|| Error::parse(1, "missing MS2 in header"))?;
    if norb < 1 {
        return Err(Error::parse(1, "NORB must be >= 1"));
    }
    if nelec < 0 || nelec > 2 * norb {
        return Err(Error::parse(1, format!("NELEC={nelec} out of range for NORB={norb}")));
    }

    let mut mi = MolecularIntegrals::empty(norb as usize, nelec as usize);
    mi.ms2 = ms2;

    for (off, raw) in text[body_start..].lines().enumerate() {
        let line_no = header_lines + off;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != 5 {
            return Err(Error::parse(line_no, format!("expected 5 fields, found {}", tokens.len())));
        }
        let value: f64 = tokens[0]
            .replace(['D', 'd'], "E")
            .parse()
            .map_err(|_| Error::parse(line_no, format!("malformed number `{}`", tokens[0])))?;
        let idx: Vec<i64> = tokens[1..]
            .iter()
            .map(|t| t.parse().map_err(|_| Error::parse(line_no, format!("malformed index `{t}`"))))
            .collect::<Result<_>>()?;
        let (i, j, k, l) = (idx[0], idx[1], idx[2], idx[3]);
        for &x in &idx {
            if x < 0 || x > norb {
                return Err(Error::parse(line_no, format!("orbital index {x} out of range 0..={norb}")));
            }
        }
        match (i, j, k, l) {
            (0, 0, 0, 0) => mi.e_core = value,
            (i, j, 0, 0) if i > 0 && j > 0 => {
                let (p, q) = (i as usize - 1, j as usize - 1);
                mi.h[p][q] = value;
                mi.h[q][p] = value;
            }
            (i, j, k, l) if i > 0 && j > 0 && k > 0 && l > 0 => {
                mi.set_g_chem(i as usize - 1, j as usize - 1, k as usize - 1, l as usize - 1, value);
            }
            _ => return Err(Error::parse(line_no, "mixed zero/nonzero index pattern")),
        }
    }
    Ok(mi)
}

/// Spin-orbital index for spatial orbital `p` with spin `sigma` (0 = alpha).
#[inline]
pub fn spin_orbital(p: usize, sigma: usize) -> usize {
    2 * p + sigma
}

/// Build the second-quantized Hamiltonian on `2 * n_orbitals` spin-orbital
/// modes. The two-body part is
/// `1/2 sum_{pqrs, st} (pq|rs) a†_{p,s} a†_{r,t} a_{s,t} a_{q,s}`
/// which is the physicist form with its 1/2 prefactor once the chemist tensor
/// is relabeled.
pub fn build_fermionic_hamiltonian(mi: &MolecularIntegrals) -> FermionOperator {
    let n = mi.n_orbitals;
    let mut op = FermionOperator::new();
    // core energy rides along as an identity (empty ladder product) term
    op.add_term(Complex64::new(mi.e_core, 0.0), Vec::new());
    for p in 0..n {
        for q in 0..n {
            if mi.h[p][q] == 0.0 {
                continue;
            }
            for sigma in 0..2 {
                op.add_term(
                    Complex64::new(mi.h[p][q], 0.0),
                    vec![
                        Ladder::create(spin_orbital(p, sigma)),
                        Ladder::annihilate(spin_orbital(q, sigma)),
                    ],
                );
            }
        }
    }
    for p in 0..n {
        for q in 0..n {
            for r in 0..n {
                for s in 0..n {
                    let v = mi.g_chem(p, q, r, s);
                    if v == 0.0 {
                        continue;
                    }
                    for sigma in 0..2 {
                        for tau in 0..2 {
                            op.add_term(
                                Complex64::new(0.5 * v, 0.0),
                                vec![
                                    Ladder::create(spin_orbital(p, sigma)),
                                    Ladder::create(spin_orbital(r, tau)),
                                    Ladder::annihilate(spin_orbital(s, tau)),
                                    Ladder::annihilate(spin_orbital(q, sigma)),
                                ],
                            );
                        }
                    }
                }
            }
        }
    }
    op
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn core_only_dump() {
        let text = "&FCI NORB=1,NELEC=0,MS2=0,\n&END\n -1.0 0 0 0 0\n";
        let mi = parse_fcidump(text).unwrap();
        assert_eq!(mi.n_orbitals, 1);
        assert_eq!(mi.e_core, -1.0);
        assert_eq!(mi.h[0][0], 0.0);
    }

    #[test]
    fn one_electron_index_shift() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.5 1 1 0 0\n";
        let mi = parse_fcidump(text).unwrap();
        assert_eq!(mi.h[0][0], 0.5);
        assert_eq!(mi.h[1][1], 0.0);
    }

    #[test]
    fn eightfold_symmetry_expansion() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.25 1 2 1 1\n";
        let mi = parse_fcidump(text).unwrap();
        assert_eq!(mi.g_chem(0, 1, 0, 0), 0.25);
        assert_eq!(mi.g_chem(1, 0, 0, 0), 0.25);
        assert_eq!(mi.g_chem(0, 0, 0, 1), 0.25);
        assert_eq!(mi.g_chem(0, 0, 1, 0), 0.25);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.5 1 1 0 0\n junk 1 1 0 0\n";
        match parse_fcidump(text).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn index_out_of_range() {
        let text = "&FCI NORB=2,NELEC=2,MS2=0,\n&END\n 0.5 3 1 0 0\n";
        assert!(parse_fcidump(text).is_err());
    }

    #[test]
    fn missing_header_key() {
        let text = "&FCI NORB=2,MS2=0,\n&END\n";
        assert!(parse_fcidump(text).is_err());
    }

    #[test]
    fn single_orbital_one_body_operator() {
        let mut mi = MolecularIntegrals::empty(1, 0);
        mi.h[0][0] = 0.75;
        let op = build_fermionic_hamiltonian(&mi);
        assert_eq!(op.terms.len(), 2);
        for (c, ops) in &op.terms {
            assert!((c.re - 0.75).abs() < 1e-15);
            assert_eq!(ops.len(), 2);
            assert_eq!(ops[0].mode, ops[1].mode);
        }
    }
}
