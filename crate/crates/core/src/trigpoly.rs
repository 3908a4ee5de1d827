//! Operator-valued trigonometric polynomials f(t) = Σ_k A_k e^{i ω_k t}.
//!
//! Every frequency is an exact integer combination of declared base
//! frequencies, so the zero (secular) frequency is detected by integer
//! arithmetic rather than floating-point comparison. Time averaging and the
//! zero-mean primitive are then exact symbolic operations: the long-time
//! average of a trig polynomial is precisely its zero-key coefficient, and
//! ∫ B e^{iωt} dt picks up the factor 1/(iω) term by term.

use std::collections::BTreeMap;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hilbert::{Operator, SpaceSpec};

/// Relative threshold below which a coefficient is dropped during
/// canonicalization (scaled by the largest coefficient norm present).
pub const EPS_DROP: f64 = 1e-14;

/// Relative threshold (scaled by the largest base frequency) below which a
/// nonzero key counts as near-resonant and secular extraction refuses to
/// proceed.
pub const EPS_RES: f64 = 1e-9;

/// Ordered set of named base angular frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqBasis {
    labels: Vec<String>,
    values: Vec<f64>,
}

impl FreqBasis {
    pub fn new(labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if labels.len() != values.len() {
            return Err(Error::Mismatch("basis labels/values length"));
        }
        if values.iter().any(|v| !v.is_finite() || *v == 0.0) {
            return Err(Error::NumericError(
                "base frequencies must be finite and nonzero".into(),
            ));
        }
        Ok(FreqBasis { labels, values })
    }

    pub fn empty() -> Self {
        FreqBasis { labels: Vec::new(), values: Vec::new() }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Angular frequency realized by a key.
    pub fn value_of(&self, key: &FreqKey) -> f64 {
        key.coeffs()
            .iter()
            .zip(&self.values)
            .map(|(&c, &v)| c as f64 * v)
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Human-readable form of a key, e.g. `+1·Delta1 -2·Delta2`.
    pub fn describe(&self, key: &FreqKey) -> String {
        if key.is_zero() {
            return "0".into();
        }
        let mut parts = Vec::new();
        for (c, l) in key.coeffs().iter().zip(&self.labels) {
            if *c != 0 {
                parts.push(format!("{c:+}·{l}"));
            }
        }
        parts.join(" ")
    }
}

/// Integer coefficient vector over a [`FreqBasis`]; the all-zero vector is
/// the one and only zero frequency.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FreqKey(Vec<i32>);

impl FreqKey {
    pub fn new(coeffs: Vec<i32>) -> Self {
        FreqKey(coeffs)
    }

    pub fn zero(len: usize) -> Self {
        FreqKey(vec![0; len])
    }

    /// Key with a single entry `c` at basis position `idx`.
    pub fn unit(len: usize, idx: usize, c: i32) -> Self {
        let mut v = vec![0; len];
        v[idx] = c;
        FreqKey(v)
    }

    pub fn coeffs(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    pub fn negated(&self) -> Self {
        FreqKey(self.0.iter().map(|c| -c).collect())
    }

    pub fn plus(&self, other: &FreqKey) -> Self {
        FreqKey(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }
}

/// Finite trigonometric polynomial with dense-operator coefficients, kept in
/// canonical form (no negligible terms; keys sorted by the map).
#[derive(Debug, Clone, PartialEq)]
pub struct TrigPolyOp {
    basis: FreqBasis,
    space: SpaceSpec,
    terms: BTreeMap<FreqKey, Operator>,
}

impl TrigPolyOp {
    pub fn new(basis: FreqBasis, space: SpaceSpec) -> Self {
        TrigPolyOp { basis, space, terms: BTreeMap::new() }
    }

    pub fn basis(&self) -> &FreqBasis {
        &self.basis
    }

    pub fn space(&self) -> SpaceSpec {
        self.space
    }

    pub fn terms(&self) -> impl Iterator<Item = (&FreqKey, &Operator)> {
        self.terms.iter()
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn coefficient(&self, key: &FreqKey) -> Option<&Operator> {
        self.terms.get(key)
    }

    pub fn has_zero_key(&self) -> bool {
        self.terms.contains_key(&FreqKey::zero(self.basis.len()))
    }

    /// Accumulate `op` into the coefficient at `key`.
    pub fn add_term(&mut self, key: FreqKey, op: Operator) -> Result<()> {
        if key.len() != self.basis.len() {
            return Err(Error::Mismatch("key length vs basis"));
        }
        if op.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        match self.terms.get_mut(&key) {
            Some(existing) => *existing = &*existing + &op,
            None => {
                self.terms.insert(key, op);
            }
        }
        Ok(())
    }

    fn max_term_norm(&self) -> f64 {
        self.terms
            .values()
            .fold(0.0f64, |m, op| m.max(op.frobenius_norm()))
    }

    /// Drop terms whose Frobenius norm is ≤ [`EPS_DROP`] times the largest.
    pub fn canonicalize(&mut self) {
        let scale = self.max_term_norm();
        if scale == 0.0 {
            self.terms.clear();
            return;
        }
        let cut = EPS_DROP * scale;
        self.terms.retain(|_, op| op.frobenius_norm() > cut);
    }

    fn check_compatible(&self, other: &TrigPolyOp) -> Result<()> {
        if self.basis != other.basis {
            return Err(Error::Mismatch("frequency bases differ"));
        }
        if self.space != other.space {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// Keys whose realized frequency is too close to zero without being the
    /// exact zero key.
    fn near_resonant_keys(&self) -> Vec<String> {
        let cut = EPS_RES * self.basis.max_abs();
        self.terms
            .keys()
            .filter(|k| !k.is_zero() && self.basis.value_of(k).abs() < cut)
            .map(|k| self.basis.describe(k))
            .collect()
    }

    fn reject_near_resonance(&self) -> Result<()> {
        let keys = self.near_resonant_keys();
        if keys.is_empty() {
            Ok(())
        } else {
            Err(Error::NearResonance { keys })
        }
    }

    /// Pointwise product; frequency keys add component-wise.
    pub fn product(&self, other: &TrigPolyOp) -> Result<TrigPolyOp> {
        self.check_compatible(other)?;
        let mut out = TrigPolyOp::new(self.basis.clone(), self.space);
        for (kf, af) in &self.terms {
            for (kg, bg) in &other.terms {
                out.add_term(kf.plus(kg), af.matmul(bg))?;
            }
        }
        out.canonicalize();
        Ok(out)
    }

    /// [f, g] = f·g − g·f, accumulated per key pair.
    pub fn commutator(&self, other: &TrigPolyOp) -> Result<TrigPolyOp> {
        self.check_compatible(other)?;
        let mut out = TrigPolyOp::new(self.basis.clone(), self.space);
        for (kf, af) in &self.terms {
            for (kg, bg) in &other.terms {
                out.add_term(kf.plus(kg), af.commutator(bg))?;
            }
        }
        out.canonicalize();
        Ok(out)
    }

    /// Long-time average: exactly the zero-key coefficient.
    pub fn mean(&self) -> Result<Operator> {
        self.reject_near_resonance()?;
        Ok(self
            .terms
            .get(&FreqKey::zero(self.basis.len()))
            .cloned()
            .unwrap_or_else(|| Operator::zeros(self.space)))
    }

    /// The unique primitive F with dF/dt = f and zero mean:
    /// B e^{iωt} ↦ (B/(iω)) e^{iωt}. The input must itself be zero-mean.
    pub fn zero_mean_primitive(&self) -> Result<TrigPolyOp> {
        if self.has_zero_key() {
            return Err(Error::SecularTerm);
        }
        self.reject_near_resonance()?;
        let mut out = TrigPolyOp::new(self.basis.clone(), self.space);
        for (k, op) in &self.terms {
            let w = self.basis.value_of(k);
            // 1/(iω) = −i/ω
            out.add_term(k.clone(), op.scaled(C64::new(0.0, -1.0 / w)))?;
        }
        out.canonicalize();
        Ok(out)
    }

    /// Σ_k A_k e^{i ω_k t}.
    pub fn eval(&self, t: f64) -> Operator {
        let mut acc = Operator::zeros(self.space);
        for (k, op) in &self.terms {
            let w = self.basis.value_of(k);
            let phase = C64::new(0.0, w * t).exp();
            acc = &acc + &op.scaled(phase);
        }
        acc
    }

    /// ∫₀^t f(τ) dτ evaluated explicitly, secular part included: the
    /// zero-key term contributes B·t, every other B(e^{iωt}−1)/(iω).
    pub fn integral_from_zero_eval(&self, t: f64) -> Result<Operator> {
        self.reject_near_resonance()?;
        let mut acc = Operator::zeros(self.space);
        for (k, op) in &self.terms {
            if k.is_zero() {
                acc = &acc + &op.scaled(C64::new(t, 0.0));
            } else {
                let w = self.basis.value_of(k);
                let f = (C64::new(0.0, w * t).exp() - C64::new(1.0, 0.0))
                    * C64::new(0.0, -1.0 / w);
                acc = &acc + &op.scaled(f);
            }
        }
        Ok(acc)
    }

    pub fn add(&self, other: &TrigPolyOp) -> Result<TrigPolyOp> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (k, op) in &other.terms {
            out.add_term(k.clone(), op.clone())?;
        }
        out.canonicalize();
        Ok(out)
    }

    pub fn scaled(&self, c: C64) -> TrigPolyOp {
        let mut out = TrigPolyOp::new(self.basis.clone(), self.space);
        for (k, op) in &self.terms {
            out.terms.insert(k.clone(), op.scaled(c));
        }
        out.canonicalize();
        out
    }

    /// Add a time-independent operator at the zero key.
    pub fn plus_const(&self, op: &Operator) -> Result<TrigPolyOp> {
        if op.space != self.space {
            return Err(Error::SpaceMismatch);
        }
        let mut out = self.clone();
        out.add_term(FreqKey::zero(self.basis.len()), op.clone())?;
        out.canonicalize();
        Ok(out)
    }

    /// Copy with the zero-frequency term removed (f − mean(f), exactly).
    pub fn without_zero_key(&self) -> TrigPolyOp {
        let mut out = self.clone();
        out.terms.remove(&FreqKey::zero(self.basis.len()));
        out
    }

    /// f is Hermitian-valued iff coefficient(−k) = coefficient(k)† for every
    /// key. `tol` is relative to the largest coefficient norm.
    pub fn is_hermitian_valued(&self, tol: f64) -> bool {
        let scale = self.max_term_norm();
        if scale == 0.0 {
            return true;
        }
        for (k, op) in &self.terms {
            let mirror = match self.terms.get(&k.negated()) {
                Some(m) => m.clone(),
                None => Operator::zeros(self.space),
            };
            if (&mirror - &op.dagger()).frobenius_norm() > tol * scale {
                return false;
            }
        }
        true
    }

    pub fn to_document(&self) -> TrigPolyDoc {
        TrigPolyDoc {
            basis_labels: self.basis.labels.clone(),
            basis_values: self.basis.values.clone(),
            space: self.space,
            terms: self
                .terms
                .iter()
                .map(|(k, op)| TrigTermDoc {
                    coeffs: k.coeffs().to_vec(),
                    re: op
                        .matrix
                        .rows()
                        .into_iter()
                        .map(|r| r.iter().map(|z| z.re).collect())
                        .collect(),
                    im: op
                        .matrix
                        .rows()
                        .into_iter()
                        .map(|r| r.iter().map(|z| z.im).collect())
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_document(doc: &TrigPolyDoc) -> Result<TrigPolyOp> {
        let basis = FreqBasis::new(doc.basis_labels.clone(), doc.basis_values.clone())?;
        let mut poly = TrigPolyOp::new(basis, doc.space);
        let n = doc.space.total_dim();
        for term in &doc.terms {
            if term.re.len() != n || term.im.len() != n {
                return Err(Error::Mismatch("matrix dimension vs space"));
            }
            let mut m = Array2::zeros((n, n));
            for i in 0..n {
                if term.re[i].len() != n || term.im[i].len() != n {
                    return Err(Error::Mismatch("matrix dimension vs space"));
                }
                for j in 0..n {
                    m[[i, j]] = C64::new(term.re[i][j], term.im[i][j]);
                }
            }
            poly.add_term(FreqKey::new(term.coeffs.clone()), Operator::new(doc.space, m)?)?;
        }
        Ok(poly)
    }
}

/// Serializable form of a [`TrigPolyOp`]; round-trips losslessly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigPolyDoc {
    pub basis_labels: Vec<String>,
    pub basis_values: Vec<f64>,
    pub space: SpaceSpec,
    pub terms: Vec<TrigTermDoc>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigTermDoc {
    pub coeffs: Vec<i32>,
    pub re: Vec<Vec<f64>>,
    pub im: Vec<Vec<f64>>,
}
