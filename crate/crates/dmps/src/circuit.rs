//! Parametric circuit representation: gate set, shared parameter slots,
//! derivative rules, SWAP routing and forward evolution of an MPS.
//!
//! A rotation gate's angle is either frozen (`Param::Fixed`) or taken from a
//! parameter slot as `scale * params[slot]`. The scale factor lets several
//! gates share one optimization variable with different prefactors, which is
//! exactly what a Trotterized cluster operator needs. Rotation convention:
//! `R_P(theta) = exp(-i theta P / 2)`.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use ndarray::array;
use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::{dagger, CMat, C_ONE, C_ZERO};
use crate::mps::Mps;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Param {
    Fixed(f64),
    Slot { slot: usize, scale: f64 },
}

impl Param {
    pub fn resolve(&self, params: &[f64]) -> Result<f64> {
        match *self {
            Param::Fixed(a) => Ok(a),
            Param::Slot { slot, scale } => params
                .get(slot)
                .map(|&p| scale * p)
                .ok_or_else(|| Error::invalid(format!("parameter slot {slot} out of range"))),
        }
    }

    pub fn slot(&self) -> Option<usize> {
        match *self {
            Param::Slot { slot, .. } => Some(slot),
            Param::Fixed(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum GateKind {
    H,
    X,
    Y,
    Z,
    S,
    Sdg,
    Rx(Param),
    Ry(Param),
    Rz(Param),
    Cnot,
    Cz,
    Swap,
    Generic1q(CMat),
    Generic2q(CMat),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gate {
    pub kind: GateKind,
    /// One or two qubit indices; for two-qubit kinds the order is
    /// (control, target) where that distinction exists.
    pub qubits: Vec<usize>,
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

impl Gate {
    pub fn h(q: usize) -> Gate {
        Gate { kind: GateKind::H, qubits: vec![q] }
    }
    pub fn x(q: usize) -> Gate {
        Gate { kind: GateKind::X, qubits: vec![q] }
    }
    pub fn y(q: usize) -> Gate {
        Gate { kind: GateKind::Y, qubits: vec![q] }
    }
    pub fn z(q: usize) -> Gate {
        Gate { kind: GateKind::Z, qubits: vec![q] }
    }
    pub fn s(q: usize) -> Gate {
        Gate { kind: GateKind::S, qubits: vec![q] }
    }
    pub fn sdg(q: usize) -> Gate {
        Gate { kind: GateKind::Sdg, qubits: vec![q] }
    }
    pub fn rx(q: usize, p: Param) -> Gate {
        Gate { kind: GateKind::Rx(p), qubits: vec![q] }
    }
    pub fn ry(q: usize, p: Param) -> Gate {
        Gate { kind: GateKind::Ry(p), qubits: vec![q] }
    }
    pub fn rz(q: usize, p: Param) -> Gate {
        Gate { kind: GateKind::Rz(p), qubits: vec![q] }
    }
    pub fn cnot(control: usize, target: usize) -> Gate {
        Gate { kind: GateKind::Cnot, qubits: vec![control, target] }
    }
    pub fn cz(a: usize, b: usize) -> Gate {
        Gate { kind: GateKind::Cz, qubits: vec![a, b] }
    }
    pub fn swap(a: usize, b: usize) -> Gate {
        Gate { kind: GateKind::Swap, qubits: vec![a, b] }
    }

    pub fn n_qubits(&self) -> usize {
        self.qubits.len()
    }

    pub fn param(&self) -> Option<&Param> {
        match &self.kind {
            GateKind::Rx(p) | GateKind::Ry(p) | GateKind::Rz(p) => Some(p),
            _ => None,
        }
    }

    pub fn is_parametric(&self) -> bool {
        matches!(self.param(), Some(Param::Slot { .. }))
    }

    /// Replace a rotation gate's parameter with a frozen angle; used by the
    /// parameter-shift rule.
    pub fn with_fixed_angle(&self, angle: f64) -> Result<Gate> {
        let kind = match &self.kind {
            GateKind::Rx(_) => GateKind::Rx(Param::Fixed(angle)),
            GateKind::Ry(_) => GateKind::Ry(Param::Fixed(angle)),
            GateKind::Rz(_) => GateKind::Rz(Param::Fixed(angle)),
            _ => return Err(Error::invalid("with_fixed_angle: not a rotation gate")),
        };
        Ok(Gate { kind, qubits: self.qubits.clone() })
    }

    /// Pauli generator matrix of a rotation gate.
    fn generator(&self) -> Option<CMat> {
        match &self.kind {
            GateKind::Rx(_) => Some(crate::pauli::PauliOp::X.matrix()),
            GateKind::Ry(_) => Some(crate::pauli::PauliOp::Y.matrix()),
            GateKind::Rz(_) => Some(crate::pauli::PauliOp::Z.matrix()),
            _ => None,
        }
    }

    /// Dense matrix of the gate (2x2 or 4x4, row index is the output physical
    /// index with the first listed qubit as the more significant bit).
    pub fn matrix(&self, params: &[f64]) -> Result<CMat> {
        let s2 = 1.0 / 2.0_f64.sqrt();
        Ok(match &self.kind {
            GateKind::H => array![[c(s2, 0.0), c(s2, 0.0)], [c(s2, 0.0), c(-s2, 0.0)]],
            GateKind::X => crate::pauli::PauliOp::X.matrix(),
            GateKind::Y => crate::pauli::PauliOp::Y.matrix(),
            GateKind::Z => crate::pauli::PauliOp::Z.matrix(),
            GateKind::S => array![[C_ONE, C_ZERO], [C_ZERO, c(0.0, 1.0)]],
            GateKind::Sdg => array![[C_ONE, C_ZERO], [C_ZERO, c(0.0, -1.0)]],
            GateKind::Rx(p) => {
                let a = p.resolve(params)? / 2.0;
                array![
                    [c(a.cos(), 0.0), c(0.0, -a.sin())],
                    [c(0.0, -a.sin()), c(a.cos(), 0.0)]
                ]
            }
            GateKind::Ry(p) => {
                let a = p.resolve(params)? / 2.0;
                array![
                    [c(a.cos(), 0.0), c(-a.sin(), 0.0)],
                    [c(a.sin(), 0.0), c(a.cos(), 0.0)]
                ]
            }
            GateKind::Rz(p) => {
                let a = p.resolve(params)? / 2.0;
                array![
                    [Complex64::from_polar(1.0, -a), C_ZERO],
                    [C_ZERO, Complex64::from_polar(1.0, a)]
                ]
            }
            GateKind::Cnot => {
                let mut m = CMat::zeros((4, 4));
                m[[0, 0]] = C_ONE;
                m[[1, 1]] = C_ONE;
                m[[2, 3]] = C_ONE;
                m[[3, 2]] = C_ONE;
                m
            }
            GateKind::Cz => {
                let mut m = CMat::eye(4);
                m[[3, 3]] = -C_ONE;
                m
            }
            GateKind::Swap => {
                let mut m = CMat::zeros((4, 4));
                m[[0, 0]] = C_ONE;
                m[[1, 2]] = C_ONE;
                m[[2, 1]] = C_ONE;
                m[[3, 3]] = C_ONE;
                m
            }
            GateKind::Generic1q(m) | GateKind::Generic2q(m) => m.clone(),
        })
    }
}

/// Derivative of a rotation gate with respect to its own angle:
/// `dU/da = (-i P / 2) U(a)`. Errors for non-parametric gate kinds.
pub fn gate_derivative(g: &Gate, params: &[f64]) -> Result<CMat> {
    let gen = g
        .generator()
        .ok_or_else(|| Error::invalid("gate_derivative: gate has no angle"))?;
    let u = g.matrix(params)?;
    Ok(gen.dot(&u).mapv(|x| x * c(0.0, -0.5)))
}

/// Gate whose matrix is the conjugate transpose of `g`.
pub fn inverse_gate(g: &Gate) -> Gate {
    let flip = |p: &Param| match *p {
        Param::Fixed(a) => Param::Fixed(-a),
        Param::Slot { slot, scale } => Param::Slot { slot, scale: -scale },
    };
    let kind = match &g.kind {
        GateKind::S => GateKind::Sdg,
        GateKind::Sdg => GateKind::S,
        GateKind::Rx(p) => GateKind::Rx(flip(p)),
        GateKind::Ry(p) => GateKind::Ry(flip(p)),
        GateKind::Rz(p) => GateKind::Rz(flip(p)),
        GateKind::Generic1q(m) => GateKind::Generic1q(dagger(m)),
        GateKind::Generic2q(m) => GateKind::Generic2q(dagger(m)),
        other => other.clone(),
    };
    Gate { kind, qubits: g.qubits.clone() }
}

#[derive(Debug, Clone)]
pub struct ParametricCircuit {
    pub n_qubits: usize,
    pub gates: Vec<Gate>,
    /// Number of independent parameters (slots).
    pub n_slots: usize,
}

/// Per-gate and cumulative discarded weights from one circuit application.
#[derive(Debug, Clone, Default)]
pub struct TruncationReport {
    pub per_gate: Vec<f64>,
    pub total: f64,
}

impl ParametricCircuit {
    pub fn new(n_qubits: usize, n_slots: usize) -> Self {
        ParametricCircuit { n_qubits, gates: Vec::new(), n_slots }
    }

    pub fn push(&mut self, g: Gate) {
        self.gates.push(g);
    }

    /// Number of parametric gates M (each slot-bound rotation counts once,
    /// even when slots are shared).
    pub fn n_parametric_gates(&self) -> usize {
        self.gates.iter().filter(|g| g.is_parametric()).count()
    }

    pub fn validate(&self) -> Result<()> {
        let mut seen = vec![false; self.n_slots];
        for (i, g) in self.gates.iter().enumerate() {
            if g.qubits.is_empty() || g.qubits.len() > 2 {
                return Err(Error::invalid(format!("gate {i}: must act on 1 or 2 qubits")));
            }
            let expect = match g.kind {
                GateKind::Cnot | GateKind::Cz | GateKind::Swap | GateKind::Generic2q(_) => 2,
                _ => 1,
            };
            if g.qubits.len() != expect {
                return Err(Error::invalid(format!("gate {i}: wrong qubit count for kind")));
            }
            for &q in &g.qubits {
                if q >= self.n_qubits {
                    return Err(Error::invalid(format!("gate {i}: qubit {q} out of range")));
                }
            }
            if g.qubits.len() == 2 && g.qubits[0] == g.qubits[1] {
                return Err(Error::invalid(format!("gate {i}: repeated qubit index")));
            }
            if let Some(Param::Slot { slot, .. }) = g.param() {
                let slot = *slot;
                if slot >= self.n_slots {
                    return Err(Error::invalid(format!("gate {i}: slot {slot} >= n_slots {}", self.n_slots)));
                }
                seen[slot] = true;
            }
        }
        if let Some(unused) = seen.iter().position(|&s| !s) {
            return Err(Error::invalid(format!("parameter slot {unused} is referenced by no gate")));
        }
        Ok(())
    }

    pub fn is_nearest_neighbor(&self) -> bool {
        self.gates
            .iter()
            .filter(|g| g.qubits.len() == 2)
            .all(|g| g.qubits[0].abs_diff(g.qubits[1]) == 1)
    }

    /// Circuit applying the inverse unitary: reversed gate order, each gate
    /// inverted.
    pub fn inverse(&self) -> ParametricCircuit {
        ParametricCircuit {
            n_qubits: self.n_qubits,
            gates: self.gates.iter().rev().map(inverse_gate).collect(),
            n_slots: self.n_slots,
        }
    }
}

/// Rewrite every long-range two-qubit gate as a symmetric SWAP chain around a
/// nearest-neighbor gate, leaving the qubit labeling at circuit end unchanged.
/// The higher-indexed qubit is moved down next to the lower one and back.
pub fn route_to_nearest_neighbor(c: &ParametricCircuit) -> ParametricCircuit {
    let mut out = ParametricCircuit::new(c.n_qubits, c.n_slots);
    for g in &c.gates {
        if g.qubits.len() != 2 || g.qubits[0].abs_diff(g.qubits[1]) == 1 {
            out.push(g.clone());
            continue;
        }
        let (lo, hi) = (g.qubits[0].min(g.qubits[1]), g.qubits[0].max(g.qubits[1]));
        for b in (lo + 2..=hi).rev() {
            out.push(Gate::swap(b - 1, b));
        }
        let relabel = |q: usize| if q == hi { lo + 1 } else { q };
        out.push(Gate { kind: g.kind.clone(), qubits: g.qubits.iter().map(|&q| relabel(q)).collect() });
        for b in lo + 2..=hi {
            out.push(Gate::swap(b - 1, b));
        }
    }
    out
}

/// Conjugate a 4x4 gate matrix by the qubit swap, so a gate listed as
/// (high, low) can be applied with the low site on the left.
fn swap_conjugate(m: &CMat) -> CMat {
    let perm = [0usize, 2, 1, 3];
    let mut out = CMat::zeros((4, 4));
    for i in 0..4 {
        for j in 0..4 {
            out[[i, j]] = m[[perm[i], perm[j]]];
        }
    }
    out
}

/// Apply a routed circuit to an MPS in place.
pub fn apply_circuit(state: &mut Mps, c: &ParametricCircuit, params: &[f64]) -> Result<TruncationReport> {
    if c.n_qubits != state.n_qubits() {
        return Err(Error::invalid(format!(
            "apply_circuit: circuit on {} qubits, state on {}",
            c.n_qubits,
            state.n_qubits()
        )));
    }
    if params.len() != c.n_slots {
        return Err(Error::invalid(format!(
            "apply_circuit: {} parameters supplied, circuit has {} slots",
            params.len(),
            c.n_slots
        )));
    }
    let mut report = TruncationReport { per_gate: Vec::with_capacity(c.gates.len()), total: 0.0 };
    for g in &c.gates {
        let w = apply_gate(state, g, params)?;
        report.per_gate.push(w);
        report.total += w;
    }
    Ok(report)
}

/// Apply one gate; returns the discarded weight (0 for single-qubit gates).
pub fn apply_gate(state: &mut Mps, g: &Gate, params: &[f64]) -> Result<f64> {
    let m = g.matrix(params)?;
    match g.qubits.len() {
        1 => {
            state.apply_1q(&m, g.qubits[0])?;
            Ok(0.0)
        }
        2 => {
            let (a, b) = (g.qubits[0], g.qubits[1]);
            if a.abs_diff(b) != 1 {
                return Err(Error::invalid(format!(
                    "apply_gate: long-range gate on ({a},{b}); route the circuit first"
                )));
            }
            if a < b {
                state.apply_2q_nn(&m, a)
            } else {
                state.apply_2q_nn(&swap_conjugate(&m), b)
            }
        }
        n => Err(Error::invalid(format!("apply_gate: unsupported qubit count {n}"))),
    }
}

/// Multiply runs of adjacent non-parametric single-qubit gates on the same
/// qubit into one generic gate. Parametric gates are never fused so their
/// derivative rule survives.
pub fn fuse_single_qubit_gates(c: &ParametricCircuit) -> ParametricCircuit {
    let mut out = ParametricCircuit::new(c.n_qubits, c.n_slots);
    let mut pending: BTreeMap<usize, CMat> = BTreeMap::new();
    let flush = |out: &mut ParametricCircuit, pending: &mut BTreeMap<usize, CMat>, q: usize| {
        if let Some(m) = pending.remove(&q) {
            out.push(Gate { kind: GateKind::Generic1q(m), qubits: vec![q] });
        }
    };
    for g in &c.gates {
        let fusable = g.qubits.len() == 1 && g.param().is_none();
        if fusable {
            let m = g.matrix(&[]).expect("non-parametric matrix");
            pending
                .entry(g.qubits[0])
                .and_modify(|acc| *acc = m.dot(acc))
                .or_insert(m);
        } else {
            for &q in &g.qubits {
                flush(&mut out, &mut pending, q);
            }
            out.push(g.clone());
        }
    }
    let rest: Vec<usize> = pending.keys().copied().collect();
    for q in rest {
        flush(&mut out, &mut pending, q);
    }
    out
}

/// Parse the one-gate-per-line circuit text format.
///
/// `H 0`, `CNOT 0 1`, `RZ 3 slot=7`, `RZ 3 slot=7 scale=-0.5`,
/// `RX 2 angle=1.5707963267948966`; `#` starts a comment. The qubit count is
/// `max index + 1` unless a `qubits N` line raises it.
pub fn parse_circuit_text(text: &str) -> Result<ParametricCircuit> {
    let mut gates = Vec::new();
    let mut n_qubits = 0usize;
    let mut n_slots = 0usize;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        let kind_tok = tokens[0].to_uppercase();
        if kind_tok == "QUBITS" {
            let n: usize = tokens
                .get(1)
                .and_then(|t| t.parse().ok())
                .ok_or_else(|| Error::parse(line_no, "qubits line needs a count"))?;
            n_qubits = n_qubits.max(n);
            continue;
        }
        let n_idx = match kind_tok.as_str() {
            "CNOT" | "CX" | "CZ" | "SWAP" => 2,
            _ => 1,
        };
        if tokens.len() < 1 + n_idx {
            return Err(Error::parse(line_no, format!("{kind_tok} needs {n_idx} qubit index(es)")));
        }
        let mut qubits = Vec::with_capacity(n_idx);
        for t in &tokens[1..1 + n_idx] {
            let q: usize = t
                .parse()
                .map_err(|_| Error::parse(line_no, format!("malformed qubit index `{t}`")))?;
            n_qubits = n_qubits.max(q + 1);
            qubits.push(q);
        }
        let mut angle: Option<f64> = None;
        let mut slot: Option<usize> = None;
        let mut scale: f64 = 1.0;
        for t in &tokens[1 + n_idx..] {
            let (key, val) = t
                .split_once('=')
                .ok_or_else(|| Error::parse(line_no, format!("unexpected token `{t}`")))?;
            match key {
                "angle" => {
                    angle = Some(val.parse().map_err(|_| Error::parse(line_no, format!("malformed angle `{val}`")))?)
                }
                "slot" => {
                    slot = Some(val.parse().map_err(|_| Error::parse(line_no, format!("malformed slot `{val}`")))?)
                }
                "scale" => {
                    scale = val.parse().map_err(|_| Error::parse(line_no, format!("malformed scale `{val}`")))?
                }
                other => return Err(Error::parse(line_no, format!("unknown key `{other}`"))),
            }
        }
        let param = match (slot, angle) {
            (Some(s), None) => {
                n_slots = n_slots.max(s + 1);
                Some(Param::Slot { slot: s, scale })
            }
            (None, Some(a)) => Some(Param::Fixed(a)),
            (None, None) => None,
            (Some(_), Some(_)) => return Err(Error::parse(line_no, "gate has both slot and angle")),
        };
        let kind = match kind_tok.as_str() {
            "H" => GateKind::H,
            "X" => GateKind::X,
            "Y" => GateKind::Y,
            "Z" => GateKind::Z,
            "S" => GateKind::S,
            "SDG" => GateKind::Sdg,
            "RX" | "RY" | "RZ" => {
                let p = param.ok_or_else(|| Error::parse(line_no, "rotation gate needs slot= or angle="))?;
                match kind_tok.as_str() {
                    "RX" => GateKind::Rx(p),
                    "RY" => GateKind::Ry(p),
                    _ => GateKind::Rz(p),
                }
            }
            "CNOT" | "CX" => GateKind::Cnot,
            "CZ" => GateKind::Cz,
            "SWAP" => GateKind::Swap,
            other => return Err(Error::parse(line_no, format!("unknown gate `{other}`"))),
        };
        if !matches!(kind, GateKind::Rx(_) | GateKind::Ry(_) | GateKind::Rz(_)) && param.is_some() {
            return Err(Error::parse(line_no, "only rotation gates take slot/angle"));
        }
        gates.push(Gate { kind, qubits });
    }
    let c = ParametricCircuit { n_qubits, gates, n_slots };
    c.validate()?;
    Ok(c)
}

pub fn serialize_circuit_text(c: &ParametricCircuit) -> Result<String> {
    let mut out = String::new();
    writeln!(out, "qubits {}", c.n_qubits).unwrap();
    for g in &c.gates {
        let name = match &g.kind {
            GateKind::H => "H",
            GateKind::X => "X",
            GateKind::Y => "Y",
            GateKind::Z => "Z",
            GateKind::S => "S",
            GateKind::Sdg => "SDG",
            GateKind::Rx(_) => "RX",
            GateKind::Ry(_) => "RY",
            GateKind::Rz(_) => "RZ",
            GateKind::Cnot => "CNOT",
            GateKind::Cz => "CZ",
            GateKind::Swap => "SWAP",
            GateKind::Generic1q(_) | GateKind::Generic2q(_) => {
                return Err(Error::invalid("generic gates have no text form"))
            }
        };
        write!(out, "{name}").unwrap();
        for q in &g.qubits {
            write!(out, " {q}").unwrap();
        }
        match g.param() {
            Some(Param::Fixed(a)) => write!(out, " angle={a:.17e}").unwrap(),
            Some(Param::Slot { slot, scale }) => {
                write!(out, " slot={slot}").unwrap();
                if *scale != 1.0 {
                    write!(out, " scale={scale:.17e}").unwrap();
                }
            }
            None => {}
        }
        writeln!(out).unwrap();
    }
    Ok(out)
}

/// Random circuit over {H, S, Rx, Ry, Rz, CNOT, CZ} with `n_slots` shared
/// parameters; two-qubit gates may be long range. Used by benchmarks and
/// cross-validation tests.
pub fn random_circuit(rng: &mut impl Rng, n_qubits: usize, n_gates: usize, n_slots: usize) -> ParametricCircuit {
    assert!(n_qubits >= 2);
    let mut c = ParametricCircuit::new(n_qubits, n_slots);
    // Guarantee every slot is referenced before topping up with random gates.
    for slot in 0..n_slots {
        let q = rng.gen_range(0..n_qubits);
        let p = Param::Slot { slot, scale: 1.0 };
        c.push(match rng.gen_range(0..3) {
            0 => Gate::rx(q, p),
            1 => Gate::ry(q, p),
            _ => Gate::rz(q, p),
        });
    }
    while c.gates.len() < n_gates {
        match rng.gen_range(0..7) {
            0 => c.push(Gate::h(rng.gen_range(0..n_qubits))),
            1 => c.push(Gate::s(rng.gen_range(0..n_qubits))),
            2 | 3 => {
                let q = rng.gen_range(0..n_qubits);
                let p = if n_slots > 0 && rng.gen_bool(0.7) {
                    Param::Slot { slot: rng.gen_range(0..n_slots), scale: 1.0 }
                } else {
                    Param::Fixed(rng.gen_range(-3.0..3.0))
                };
                c.push(match rng.gen_range(0..3) {
                    0 => Gate::rx(q, p),
                    1 => Gate::ry(q, p),
                    _ => Gate::rz(q, p),
                });
            }
            _ => {
                let a = rng.gen_range(0..n_qubits);
                let mut b = rng.gen_range(0..n_qubits - 1);
                if b >= a {
                    b += 1;
                }
                if rng.gen_bool(0.5) {
                    c.push(Gate::cnot(a, b));
                } else {
                    c.push(Gate::cz(a, b));
                }
            }
        }
    }
    c
}
