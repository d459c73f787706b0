//! Pauli-string algebra and qubit Hamiltonians.
//!
//! A [`PauliString`] is a complex weight times a sparse tensor product of
//! X/Y/Z factors (absent sites are identity). A [`QubitHamiltonian`] is a sum
//! of such strings plus a real identity coefficient which carries the core
//! energy of a molecular problem.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::CMat;
use ndarray::array;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PauliOp {
    X,
    Y,
    Z,
}

impl PauliOp {
    pub fn matrix(self) -> CMat {
        let z = Complex64::new(0.0, 0.0);
        let o = Complex64::new(1.0, 0.0);
        let i = Complex64::new(0.0, 1.0);
        match self {
            PauliOp::X => array![[z, o], [o, z]],
            PauliOp::Y => array![[z, -i], [i, z]],
            PauliOp::Z => array![[o, z], [z, -o]],
        }
    }

    fn letter(self) -> char {
        match self {
            PauliOp::X => 'X',
            PauliOp::Y => 'Y',
            PauliOp::Z => 'Z',
        }
    }

    fn from_letter(ch: char) -> Option<PauliOp> {
        match ch {
            'X' => Some(PauliOp::X),
            'Y' => Some(PauliOp::Y),
            'Z' => Some(PauliOp::Z),
            _ => None,
        }
    }
}

/// Product of two single-site Paulis: returns (phase, result op or None for identity).
fn single_product(a: PauliOp, b: PauliOp) -> (Complex64, Option<PauliOp>) {
    use PauliOp::*;
    let i = Complex64::new(0.0, 1.0);
    let one = Complex64::new(1.0, 0.0);
    match (a, b) {
        (X, X) | (Y, Y) | (Z, Z) => (one, None),
        (X, Y) => (i, Some(Z)),
        (Y, X) => (-i, Some(Z)),
        (Y, Z) => (i, Some(X)),
        (Z, Y) => (-i, Some(X)),
        (Z, X) => (i, Some(Y)),
        (X, Z) => (-i, Some(Y)),
    }
}

/// A weighted Pauli string. Sites map qubit index to the non-identity factor.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliString {
    pub coeff: Complex64,
    pub ops: BTreeMap<usize, PauliOp>,
}

impl PauliString {
    pub fn identity(coeff: Complex64) -> Self {
        PauliString { coeff, ops: BTreeMap::new() }
    }

    pub fn new(coeff: Complex64, ops: impl IntoIterator<Item = (usize, PauliOp)>) -> Self {
        PauliString { coeff, ops: ops.into_iter().collect() }
    }

    pub fn is_identity(&self) -> bool {
        self.ops.is_empty()
    }

    /// Largest acted-on qubit index plus one, 0 for the identity.
    pub fn support_end(&self) -> usize {
        self.ops.keys().next_back().map_or(0, |&q| q + 1)
    }

    /// Ordering key: the operator content without the coefficient.
    pub fn key(&self) -> Vec<(usize, PauliOp)> {
        self.ops.iter().map(|(&q, &p)| (q, p)).collect()
    }

    /// Product of two strings, accumulating single-site phases.
    pub fn multiply(&self, other: &PauliString) -> PauliString {
        let mut coeff = self.coeff * other.coeff;
        let mut ops = self.ops.clone();
        for (&q, &b) in &other.ops {
            match ops.remove(&q) {
                None => {
                    ops.insert(q, b);
                }
                Some(a) => {
                    let (phase, res) = single_product(a, b);
                    coeff *= phase;
                    if let Some(p) = res {
                        ops.insert(q, p);
                    }
                }
            }
        }
        PauliString { coeff, ops }
    }

    /// Hermitian conjugate (coefficient conjugated; X/Y/Z are self-adjoint).
    pub fn adjoint(&self) -> PauliString {
        PauliString { coeff: self.coeff.conj(), ops: self.ops.clone() }
    }
}

pub const COEFF_PRUNE: f64 = 1e-12;

/// Combine like strings, drop coefficients below [`COEFF_PRUNE`], fold
/// identity strings into a scalar. Returns (constant, sorted terms).
pub fn simplify(strings: impl IntoIterator<Item = PauliString>) -> (Complex64, Vec<PauliString>) {
    let mut map: BTreeMap<Vec<(usize, PauliOp)>, Complex64> = BTreeMap::new();
    let mut constant = Complex64::new(0.0, 0.0);
    for s in strings {
        if s.is_identity() {
            constant += s.coeff;
        } else {
            *map.entry(s.key()).or_insert(Complex64::new(0.0, 0.0)) += s.coeff;
        }
    }
    let terms = map
        .into_iter()
        .filter(|(_, c)| c.norm() >= COEFF_PRUNE)
        .map(|(key, coeff)| PauliString { coeff, ops: key.into_iter().collect() })
        .collect();
    (constant, terms)
}

/// A sum of Pauli strings acting on `n_qubits` qubits.
///
/// `constant` is the identity coefficient; after [`QubitHamiltonian::simplified`]
/// all term coefficients of a physical Hamiltonian are real.
#[derive(Debug, Clone, PartialEq)]
pub struct QubitHamiltonian {
    pub n_qubits: usize,
    pub terms: Vec<PauliString>,
    pub constant: f64,
}

impl QubitHamiltonian {
    pub fn new(n_qubits: usize) -> Self {
        QubitHamiltonian { n_qubits, terms: Vec::new(), constant: 0.0 }
    }

    pub fn from_strings(n_qubits: usize, strings: Vec<PauliString>) -> Result<Self> {
        for s in &strings {
            if s.support_end() > n_qubits {
                return Err(Error::invalid(format!(
                    "Pauli string acts on qubit {} but the Hamiltonian has {} qubits",
                    s.support_end() - 1,
                    n_qubits
                )));
            }
        }
        let (constant, terms) = simplify(strings);
        if constant.im.abs() > 1e-10 {
            return Err(Error::invalid(format!(
                "identity coefficient has imaginary part {:.3e}",
                constant.im
            )));
        }
        Ok(QubitHamiltonian { n_qubits, terms, constant: constant.re })
    }

    /// Deterministic re-simplification (sorted by string content).
    pub fn simplified(&self) -> QubitHamiltonian {
        let mut all = self.terms.clone();
        all.push(PauliString::identity(Complex64::new(self.constant, 0.0)));
        let (constant, terms) = simplify(all);
        QubitHamiltonian { n_qubits: self.n_qubits, terms, constant: constant.re }
    }

    /// Number of strings including the identity when its coefficient is nonzero.
    pub fn n_strings(&self) -> usize {
        self.terms.len() + usize::from(self.constant != 0.0)
    }

    /// Max absolute imaginary part over the term coefficients.
    pub fn hermiticity_defect(&self) -> f64 {
        self.terms.iter().map(|t| t.coeff.im.abs()).fold(0.0, f64::max)
    }
}

/// Partition the string list (identity included when present) into groups of
/// `group_size` in listed order; the last group may be smaller. The union of
/// the groups reproduces the input exactly.
pub fn split_groups(h: &QubitHamiltonian, group_size: usize) -> Vec<QubitHamiltonian> {
    assert!(group_size >= 1, "group_size must be >= 1");
    let mut all: Vec<PauliString> = Vec::with_capacity(h.n_strings());
    if h.constant != 0.0 {
        all.push(PauliString::identity(Complex64::new(h.constant, 0.0)));
    }
    all.extend(h.terms.iter().cloned());
    all.chunks(group_size)
        .map(|chunk| {
            let mut g = QubitHamiltonian::new(h.n_qubits);
            for s in chunk {
                if s.is_identity() {
                    g.constant += s.coeff.re;
                } else {
                    g.terms.push(s.clone());
                }
            }
            g
        })
        .collect()
}

/// Parse the line-oriented Pauli text format:
/// `<coeff_re> <coeff_im> X0 Z3 ...`, one string per line, `I` for the
/// identity, `#` starts a comment. An optional `qubits N` header pins the
/// register width; without it the width is inferred from the largest index.
pub fn parse_pauli_text(text: &str) -> Result<QubitHamiltonian> {
    let mut strings = Vec::new();
    let mut n_qubits = 0usize;
    let mut declared: Option<usize> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("qubits") {
            if declared.is_some() {
                return Err(Error::parse(line_no, "duplicate qubits header"));
            }
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| Error::parse(line_no, "bad qubits header"))?;
            declared = Some(n);
            continue;
        }
        let mut tokens = line.split_whitespace();
        let re: f64 = tokens
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing real coefficient"))?
            .parse()
            .map_err(|_| Error::parse(line_no, "bad real coefficient"))?;
        let im: f64 = tokens
            .next()
            .ok_or_else(|| Error::parse(line_no, "missing imaginary coefficient"))?
            .parse()
            .map_err(|_| Error::parse(line_no, "bad imaginary coefficient"))?;
        let mut ops = BTreeMap::new();
        for tok in tokens {
            if tok == "I" {
                continue;
            }
            let mut chars = tok.chars();
            let op = chars
                .next()
                .and_then(PauliOp::from_letter)
                .ok_or_else(|| Error::parse(line_no, format!("bad operator token `{tok}`")))?;
            let q: usize = chars
                .as_str()
                .parse()
                .map_err(|_| Error::parse(line_no, format!("bad qubit index in `{tok}`")))?;
            if ops.insert(q, op).is_some() {
                return Err(Error::parse(line_no, format!("duplicate qubit index {q}")));
            }
        }
        let s = PauliString { coeff: Complex64::new(re, im), ops };
        n_qubits = n_qubits.max(s.support_end());
        strings.push(s);
    }
    if strings.is_empty() {
        return Err(Error::invalid("empty Pauli text: no strings found"));
    }
    if let Some(n) = declared {
        if n < n_qubits {
            return Err(Error::invalid(format!(
                "qubits header {n} smaller than largest support {n_qubits}"
            )));
        }
        n_qubits = n;
    }
    QubitHamiltonian::from_strings(n_qubits, strings)
}

/// Serialize to the text format accepted by [`parse_pauli_text`]; round-trips
/// exactly at 17 significant digits.
pub fn serialize_pauli_text(h: &QubitHamiltonian) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "qubits {}", h.n_qubits);
    if h.constant != 0.0 || h.terms.is_empty() {
        let _ = writeln!(out, "{:.17e} {:.17e} I", h.constant, 0.0);
    }
    for t in &h.terms {
        let _ = write!(out, "{:.17e} {:.17e}", t.coeff.re, t.coeff.im);
        for (&q, &p) in &t.ops {
            let _ = write!(out, " {}{}", p.letter(), q);
        }
        out.push('\n');
    }
    out
}
