//! Differentiable matrix-product-state simulation for variational quantum
//! eigensolver workloads.
//!
//! The crate evolves parametric circuits on an MPS kept in right-canonical
//! form, evaluates Pauli-sum Hamiltonian expectations, and differentiates
//! them by a reverse sweep that holds exactly two states, so the gradient
//! cost is independent of the parameter count. A dense state-vector oracle,
//! the parameter-shift rule, and finite differences cross-check every path
//! in the test suite.
//!
//! ```
//! use dmps::circuit::{Gate, Param, ParametricCircuit};
//! use dmps::grad::grad_total;
//! use dmps::mps::MpsSettings;
//! use dmps::pauli::{PauliOp, PauliString, QubitHamiltonian};
//! use num_complex::Complex64;
//!
//! // d/dtheta <+| Rz(theta)^dag X Rz(theta) |+> = -sin(theta)
//! let mut c = ParametricCircuit::new(1, 1);
//! c.push(Gate::h(0));
//! c.push(Gate::rz(0, Param::Slot { slot: 0, scale: 1.0 }));
//! let h = QubitHamiltonian::from_strings(
//!     1,
//!     vec![PauliString::new(Complex64::new(1.0, 0.0), [(0, PauliOp::X)])],
//! )
//! .unwrap();
//! let g = grad_total(&c, &[0.3], &h, 1, &[0], MpsSettings::exact(1), 1).unwrap();
//! assert!((g.grads[0] + 0.3f64.sin()).abs() < 1e-10);
//! ```
//!
//! The guide under `book/` walks through each layer; its code blocks are
//! compiled as doc-tests below so the text cannot drift from the API.

pub mod ansatz;
pub mod circuit;
pub mod error;
pub mod fcidump;
pub mod fermion;
pub mod grad;
pub mod linalg;
pub mod mps;
pub mod optim;
pub mod oracle;
pub mod pool;
pub mod pauli;
pub mod snapshot;

// Every fenced Rust block in the book runs under `cargo test --doc`.
#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/overview.md")]
    mod overview {}
    #[doc = include_str!("../../../book/src/mps.md")]
    mod mps {}
    #[doc = include_str!("../../../book/src/circuits.md")]
    mod circuits {}
    #[doc = include_str!("../../../book/src/hamiltonians.md")]
    mod hamiltonians {}
    #[doc = include_str!("../../../book/src/gradients.md")]
    mod gradients {}
    #[doc = include_str!("../../../book/src/vqe.md")]
    mod vqe {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
