//! Gauge-fixed perturbative decomposition of the interaction-picture
//! evolution operator.
//!
//! Given interaction-picture Hamiltonian orders H̃(λ;t) = Σ λⁿ H̃_n(t)
//! (each an operator-valued trig polynomial) the evolution operator is
//! written, without time ordering, as
//!
//! ```text
//! T(λ;t) = exp(−i Z(λ;t)) · exp(−i C(λ) t) · exp(+i Z(λ;0))
//! ```
//!
//! fixed uniquely by three gauge conditions: C time-independent, Z(t)/t → 0,
//! and Z zero-mean. For trig-polynomial input those conditions force every
//! Z_n to be a zero-mean trig polynomial, so all secular growth lives in C.
//! The closed-form solutions implemented here:
//!
//! ```text
//! C₁ = ⟨H̃₁⟩            Z₁ = ∫(H̃₁ − C₁)        (zero-mean primitive)
//! G₂ = (i/2)[Z₁, H̃₁ + C₁] + H̃₂
//! C₂ = ⟨G₂⟩             Z₂ = ∫(G₂ − C₂)
//! ```
//!
//! Higher orders have no closed form here and are rejected.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{matrix_exponential, Operator};
use crate::trigpoly::TrigPolyOp;

/// Relative tolerance for the Hermitian-valuedness check on input orders.
const HERMITICITY_TOL: f64 = 1e-13;

/// Interaction-picture Hamiltonian orders with their perturbative parameter
/// and the reference Hamiltonian H₀ (ħ = 1 throughout; λ·H̃₁ is the physical
/// first-order interaction Hamiltonian in angular-frequency units).
#[derive(Debug, Clone)]
pub struct HamiltonianOrders {
    pub lambda: f64,
    pub orders: Vec<TrigPolyOp>,
    pub h0: Operator,
}

impl HamiltonianOrders {
    pub fn new(lambda: f64, orders: Vec<TrigPolyOp>, h0: Operator) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidHamiltonian("at least one order required".into()));
        }
        let space = orders[0].space();
        let basis = orders[0].basis().clone();
        for ord in &orders {
            if ord.space() != space || ord.basis() != &basis {
                return Err(Error::Mismatch("orders disagree on basis or space"));
            }
        }
        if h0.space != space {
            return Err(Error::SpaceMismatch);
        }
        if !lambda.is_finite() {
            return Err(Error::NumericError("non-finite lambda".into()));
        }
        Ok(HamiltonianOrders { lambda, orders, h0 })
    }

    /// H̃_n(t), or the zero polynomial when that order was not supplied.
    pub fn order(&self, n: usize) -> TrigPolyOp {
        self.orders.get(n - 1).cloned().unwrap_or_else(|| {
            TrigPolyOp::new(self.orders[0].basis().clone(), self.orders[0].space())
        })
    }

    pub fn warnings(&self) -> Vec<String> {
        let mut w = Vec::new();
        if self.lambda.abs() >= 1.0 {
            w.push(format!(
                "perturbative parameter |lambda| = {} is not small; the expansion is unreliable",
                self.lambda.abs()
            ));
        }
        w
    }
}

/// The computed generators: C_n Hermitian and time-independent, Z_n(t)
/// zero-mean Hermitian-valued trig polynomials.
#[derive(Debug, Clone)]
pub struct PerturbativeDecomposition {
    pub c: Vec<Operator>,
    pub z: Vec<TrigPolyOp>,
    pub lambda: f64,
    pub h0: Operator,
}

/// Solve the gauge-fixed recursion for the first `n_orders` ∈ {1, 2} orders.
pub fn compute_cz_orders(
    h: &HamiltonianOrders,
    n_orders: usize,
) -> Result<PerturbativeDecomposition> {
    if n_orders == 0 || n_orders > 2 {
        return Err(Error::UnsupportedOrder(n_orders));
    }
    for (n, ord) in h.orders.iter().enumerate() {
        if !ord.is_hermitian_valued(HERMITICITY_TOL) {
            return Err(Error::InvalidHamiltonian(format!(
                "order {} is not Hermitian-valued",
                n + 1
            )));
        }
    }

    let h1 = h.order(1);
    let c1 = h1.mean()?;
    let z1 = h1.without_zero_key().zero_mean_primitive()?;

    let mut c = vec![c1.clone()];
    let mut z = vec![z1.clone()];

    if n_orders == 2 {
        let h2 = h.order(2);
        let g2 = z1
            .commutator(&h1.plus_const(&c1)?)?
            .scaled(C64::new(0.0, 0.5))
            .add(&h2)?;
        let c2 = g2.mean()?;
        let z2 = g2.without_zero_key().zero_mean_primitive()?;
        c.push(c2);
        z.push(z2);
    }

    Ok(PerturbativeDecomposition { c, z, lambda: h.lambda, h0: h.h0.clone() })
}

impl PerturbativeDecomposition {
    /// C^(N)(λ) = Σ λⁿ C_n.
    pub fn c_total(&self) -> Operator {
        let mut acc = Operator::zeros(self.h0.space);
        let mut w = 1.0;
        for cn in &self.c {
            w *= self.lambda;
            acc = &acc + &cn.scaled(C64::new(w, 0.0));
        }
        acc
    }

    /// Z^(N)(λ;t) = Σ λⁿ Z_n(t).
    pub fn z_at(&self, t: f64) -> Operator {
        let mut acc = Operator::zeros(self.h0.space);
        let mut w = 1.0;
        for zn in &self.z {
            w *= self.lambda;
            acc = &acc + &zn.eval(t).scaled(C64::new(w, 0.0));
        }
        acc
    }

    /// exp(−i H₀ t), the unperturbed evolution.
    pub fn u0(&self, t: f64) -> Result<Operator> {
        matrix_exponential(&self.h0.scaled(C64::new(0.0, -t)))
    }

    /// Interaction-picture evolutor exp(−iZ(t)) exp(−iCt) exp(+iZ(0)).
    pub fn truncated_evolutor(&self, t: f64) -> Result<Operator> {
        let left = matrix_exponential(&self.z_at(t).scaled(C64::new(0.0, -1.0)))?;
        let mid = matrix_exponential(&self.c_total().scaled(C64::new(0.0, -t)))?;
        let right = matrix_exponential(&self.z_at(0.0).scaled(C64::new(0.0, 1.0)))?;
        Ok(left.matmul(&mid).matmul(&right))
    }

    /// Schrödinger-picture approximant U₀(t) · T(λ;t).
    pub fn full_evolutor(&self, t: f64) -> Result<Operator> {
        Ok(self.u0(t)?.matmul(&self.truncated_evolutor(t)?))
    }

    /// U₀(t) · exp(−i C(λ) t): the evolution generated by the effective
    /// Hamiltonian H₀ + C̆. H₀ and C need not commute, so the two factors
    /// are kept as an ordered product.
    pub fn effective_evolutor(&self, t: f64) -> Result<Operator> {
        let mid = matrix_exponential(&self.c_total().scaled(C64::new(0.0, -t)))?;
        Ok(self.u0(t)?.matmul(&mid))
    }

    /// exp(−i Z̆(λ;t)) with Z̆ = U₀ Z U₀†; conjugation commutes with the
    /// exponential, so this is U₀ exp(−iZ(t)) U₀†.
    pub fn dressing_operator(&self, t: f64) -> Result<Operator> {
        let u0 = self.u0(t)?;
        let ez = matrix_exponential(&self.z_at(t).scaled(C64::new(0.0, -1.0)))?;
        Ok(u0.matmul(&ez).matmul(&u0.dagger()))
    }
}

/// First-order Magnus approximant (the Z = 0 gauge): U₀(t) · exp(−i λ ∫₀ᵗ H̃₁),
/// with the secular part of the integral kept explicitly.
pub fn magnus1_evolutor(h: &HamiltonianOrders, t: f64) -> Result<Operator> {
    let u0 = matrix_exponential(&h.h0.scaled(C64::new(0.0, -t)))?;
    let integral = h.order(1).integral_from_zero_eval(t)?;
    let phase = matrix_exponential(&integral.scaled(C64::new(0.0, -h.lambda)))?;
    Ok(u0.matmul(&phase))
}
