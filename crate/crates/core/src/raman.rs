//! Trapped-ion Λ-Raman model builders.
//!
//! A scheme is a pair of travelling-wave lasers coupling levels |1⟩ and |2⟩
//! to the auxiliary level |3⟩ with one shared detuning Δ per scheme. In the
//! interaction picture with respect to the atomic Hamiltonian H₀ the model
//! becomes (ħ = 1)
//!
//! ```text
//! H̃(t) = ν Σ_α a_α†a_α + Σ_s Σ_j ( g_j3ˢ e^{−i k_j3ˢ·r} σ_j3 e^{−iΔˢt} + h.c. )
//! ```
//!
//! an operator-valued trig polynomial with frequencies {0, ±Δˢ}. The natural
//! perturbative parameter is λ = g/Δ with g = max{ν, |g_j3ˢ|}; we store
//! H̃₁ = H̃/λ so that λ·H̃₁ is the physical interaction Hamiltonian.
//!
//! Wave vectors enter only through the Lamb-Dicke components η = k·x₀ per
//! mode; laser frequencies are derived from the detunings (ω_j3 = ω₃ − ω_j − Δ)
//! so the equal-detuning constraint cannot be violated by construction.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{
    build_basic_operator, displacement_phase, total_number_operator, BasicOperator, Operator,
    SpaceSpec,
};
use crate::perturb::HamiltonianOrders;
use crate::trigpoly::{FreqBasis, FreqKey, TrigPolyOp};

/// One Λ pair of travelling-wave lasers sharing a detuning.
#[derive(Debug, Clone, PartialEq)]
pub struct LaserPair {
    /// Complex strength of the |1⟩↔|3⟩ leg (angular frequency units).
    pub g13: C64,
    /// Complex strength of the |2⟩↔|3⟩ leg.
    pub g23: C64,
    /// Lamb-Dicke components of k₁₃, one per mode.
    pub eta13: Vec<f64>,
    /// Lamb-Dicke components of k₂₃, one per mode.
    pub eta23: Vec<f64>,
    /// Shared ion-laser detuning Δ ≠ 0.
    pub detuning: f64,
}

/// Full model configuration: level energies, trap frequency, laser schemes
/// and the truncated space everything is built on.
#[derive(Debug, Clone, PartialEq)]
pub struct RamanConfig {
    /// ω₁, ω₂, ω₃ (rad/time), pairwise distinct.
    pub level_freqs: [f64; 3],
    /// Trap frequency ν > 0.
    pub trap_freq: f64,
    pub schemes: Vec<LaserPair>,
    pub space: SpaceSpec,
}

/// Second-order analytic model: AC Stark shifts and one effective coupling
/// per scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveModel {
    /// ω̆₁, ω̆₂, ω̆₃.
    pub shifts: [f64; 3],
    pub couplings: Vec<EffectiveCoupling>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EffectiveCoupling {
    /// Effective two-photon strength multiplying e^{−i k₁₂·r} σ₁₂.
    pub g12: C64,
    /// k₁₂ = k₁₃ − k₂₃ in Lamb-Dicke components.
    pub eta12: Vec<f64>,
    /// Effective drive frequency ω₁₂ = ω₂ − ω₁.
    pub omega12: f64,
}

impl RamanConfig {
    /// Structural validation; returns advisory warnings on success.
    pub fn validate(&self) -> Result<Vec<String>> {
        if self.space.atomic_dim != 3 {
            return Err(Error::InvalidScheme(
                "the Λ model needs exactly 3 atomic levels".into(),
            ));
        }
        if !(self.trap_freq > 0.0) || !self.trap_freq.is_finite() {
            return Err(Error::InvalidScheme("trap frequency must be positive".into()));
        }
        let w = self.level_freqs;
        if w.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidScheme("non-finite level frequency".into()));
        }
        if w[0] == w[1] || w[0] == w[2] || w[1] == w[2] {
            return Err(Error::InvalidScheme(
                "level frequencies must be pairwise distinct".into(),
            ));
        }
        if self.schemes.is_empty() {
            return Err(Error::InvalidScheme("at least one laser scheme required".into()));
        }
        for (i, s) in self.schemes.iter().enumerate() {
            if s.g13 == C64::new(0.0, 0.0) || s.g23 == C64::new(0.0, 0.0) {
                return Err(Error::InvalidScheme(format!(
                    "scheme {i}: both laser strengths must be nonzero"
                )));
            }
            if s.detuning == 0.0 || !s.detuning.is_finite() {
                return Err(Error::InvalidScheme(format!(
                    "scheme {i}: detuning must be finite and nonzero"
                )));
            }
            if s.eta13.len() != self.space.mode_count || s.eta23.len() != self.space.mode_count {
                return Err(Error::InvalidScheme(format!(
                    "scheme {i}: Lamb-Dicke vectors must have one component per mode"
                )));
            }
        }
        for i in 0..self.schemes.len() {
            for j in i + 1..self.schemes.len() {
                if self.schemes[i].detuning == self.schemes[j].detuning {
                    return Err(Error::DuplicateDetuning);
                }
            }
        }
        let mut warnings = Vec::new();
        for (i, s) in self.schemes.iter().enumerate() {
            let gmax = s.g13.norm().max(s.g23.norm()).max(self.trap_freq);
            if s.detuning.abs() < 10.0 * gmax {
                warnings.push(format!(
                    "scheme {i}: |detuning| = {} is not large against max(|g|, nu) = {gmax}; \
                     the high-detuning expansion may be inaccurate",
                    s.detuning.abs()
                ));
            }
        }
        Ok(warnings)
    }

    /// g = max{ν, |g₁₃ˢ|, |g₂₃ˢ| over schemes}.
    pub fn coupling_scale(&self) -> f64 {
        self.schemes
            .iter()
            .flat_map(|s| [s.g13.norm(), s.g23.norm()])
            .fold(self.trap_freq, f64::max)
    }

    /// Detuning of largest magnitude (signed), the reference for λ.
    pub fn reference_detuning(&self) -> f64 {
        self.schemes
            .iter()
            .map(|s| s.detuning)
            .fold(0.0, |best, d| if d.abs() > best.abs() { d } else { best })
    }

    /// λ = g/Δ, the dimensionless perturbative parameter.
    pub fn lambda(&self) -> f64 {
        self.coupling_scale() / self.reference_detuning()
    }

    /// Fastest declared frequency: max over {|Δˢ|, ν, |ω_l − ω_r|}.
    pub fn max_frequency(&self) -> f64 {
        let w = self.level_freqs;
        let wdiff = (w[0] - w[1]).abs().max((w[0] - w[2]).abs()).max((w[1] - w[2]).abs());
        self.schemes
            .iter()
            .map(|s| s.detuning.abs())
            .fold(self.trap_freq.max(wdiff), f64::max)
    }

    /// Atomic reference Hamiltonian H₀ = Σ ω_l σ_ll.
    pub fn h0(&self) -> Result<Operator> {
        let mut acc = Operator::zeros(self.space);
        for (l, &w) in self.level_freqs.iter().enumerate() {
            let sig =
                build_basic_operator(BasicOperator::Sigma { l: l + 1, m: l + 1 }, self.space)?;
            acc = &acc + &sig.scaled(C64::new(w, 0.0));
        }
        Ok(acc)
    }

    /// Interaction-picture Hamiltonian orders: H̃₁ = H̃/λ with frequency
    /// basis {Δˢ}; H̃₂ = 0 (absent).
    pub fn interaction_orders(&self) -> Result<HamiltonianOrders> {
        self.validate()?;
        let lambda = self.lambda();
        let inv_lambda = 1.0 / lambda;
        let n_schemes = self.schemes.len();
        let basis = FreqBasis::new(
            (1..=n_schemes).map(|i| format!("Delta{i}")).collect(),
            self.schemes.iter().map(|s| s.detuning).collect(),
        )?;
        let mut h1 = TrigPolyOp::new(basis, self.space);

        if self.space.mode_count > 0 {
            let trap = total_number_operator(self.space)
                .scaled(C64::new(self.trap_freq * inv_lambda, 0.0));
            h1.add_term(FreqKey::zero(n_schemes), trap)?;
        }

        for (s_idx, scheme) in self.schemes.iter().enumerate() {
            let sig13 = build_basic_operator(BasicOperator::Sigma { l: 1, m: 3 }, self.space)?;
            let sig23 = build_basic_operator(BasicOperator::Sigma { l: 2, m: 3 }, self.space)?;
            let d13 = displacement_phase(&scheme.eta13, self.space)?;
            let d23 = displacement_phase(&scheme.eta23, self.space)?;
            let lower = &d13.matmul(&sig13).scaled(scheme.g13 * inv_lambda)
                + &d23.matmul(&sig23).scaled(scheme.g23 * inv_lambda);
            // e^{−iΔˢ t} on the lowering part, h.c. mirrored exactly.
            h1.add_term(FreqKey::unit(n_schemes, s_idx, -1), lower.clone())?;
            h1.add_term(FreqKey::unit(n_schemes, s_idx, 1), lower.dagger())?;
        }

        HamiltonianOrders::new(lambda, vec![h1], self.h0()?)
    }

    /// Closed-form second-order effective model. Per scheme,
    /// ω̆_j gains −|g_j3|²/Δ (j = 1, 2), ω̆₃ gains +(|g₁₃|²+|g₂₃|²)/Δ, and
    /// the effective coupling is g₁₂ = −g₁₃ g₂₃*/Δ with k₁₂ = k₁₃ − k₂₃
    /// (the coupling carries the same −1/Δ prefactor as the shifts).
    pub fn analytic_effective_model(&self) -> Result<EffectiveModel> {
        self.validate()?;
        let mut shifts = [0.0f64; 3];
        let mut couplings = Vec::with_capacity(self.schemes.len());
        for s in &self.schemes {
            let d = s.detuning;
            shifts[0] -= s.g13.norm_sqr() / d;
            shifts[1] -= s.g23.norm_sqr() / d;
            shifts[2] += (s.g13.norm_sqr() + s.g23.norm_sqr()) / d;
            couplings.push(EffectiveCoupling {
                g12: -s.g13 * s.g23.conj() / C64::new(d, 0.0),
                eta12: s.eta13.iter().zip(&s.eta23).map(|(a, b)| a - b).collect(),
                omega12: self.level_freqs[1] - self.level_freqs[0],
            });
        }
        Ok(EffectiveModel { shifts, couplings })
    }

    /// Schrödinger-picture Hamiltonian H(t) = H₀ + H_B + H_R(t) with laser
    /// frequencies ω_j3ˢ = ω₃ − ω_j − Δˢ.
    pub fn schroedinger_hamiltonian(&self, t: f64) -> Result<Operator> {
        Ok(self.drive_terms()?.eval(t))
    }

    /// Static part plus oscillating pairs (ω, A) of H(t) = static +
    /// Σ (A e^{iωt} + A† e^{−iωt}), for the benchmark propagator.
    pub fn drive_terms(&self) -> Result<DriveTerms> {
        let mut static_part = self.h0()?;
        if self.space.mode_count > 0 {
            static_part = &static_part
                + &total_number_operator(self.space).scaled(C64::new(self.trap_freq, 0.0));
        }
        let mut oscillating = Vec::new();
        let w = self.level_freqs;
        for scheme in &self.schemes {
            let sig13 = build_basic_operator(BasicOperator::Sigma { l: 1, m: 3 }, self.space)?;
            let sig23 = build_basic_operator(BasicOperator::Sigma { l: 2, m: 3 }, self.space)?;
            let d13 = displacement_phase(&scheme.eta13, self.space)?;
            let d23 = displacement_phase(&scheme.eta23, self.space)?;
            let w13 = w[2] - w[0] - scheme.detuning;
            let w23 = w[2] - w[1] - scheme.detuning;
            oscillating.push((w13, d13.matmul(&sig13).scaled(scheme.g13)));
            oscillating.push((w23, d23.matmul(&sig23).scaled(scheme.g23)));
        }
        Ok(DriveTerms { space: self.space, static_part, oscillating })
    }
}

/// λ²C₂ assembled from the analytic model:
/// Σ_j ω̆_j σ_jj + Σ_s ( g₁₂ˢ e^{−i k₁₂ˢ·r} σ₁₂ + h.c. ).
pub fn effective_c2_operator(model: &EffectiveModel, cfg: &RamanConfig) -> Result<Operator> {
    for cc in &model.couplings {
        if cc.eta12.len() != cfg.space.mode_count {
            return Err(Error::SpaceMismatch);
        }
    }
    let mut acc = Operator::zeros(cfg.space);
    for (j, &shift) in model.shifts.iter().enumerate() {
        let sig = build_basic_operator(BasicOperator::Sigma { l: j + 1, m: j + 1 }, cfg.space)?;
        acc = &acc + &sig.scaled(C64::new(shift, 0.0));
    }
    let sig12 = build_basic_operator(BasicOperator::Sigma { l: 1, m: 2 }, cfg.space)?;
    for cc in &model.couplings {
        let disp = displacement_phase(&cc.eta12, cfg.space)?;
        let k = disp.matmul(&sig12).scaled(cc.g12);
        acc = &acc + &(&k + &k.dagger());
    }
    Ok(acc)
}

/// Time-dependent Hamiltonian in precombined form, cheap to evaluate.
#[derive(Debug, Clone)]
pub struct DriveTerms {
    pub space: SpaceSpec,
    pub static_part: Operator,
    /// Pairs (ω, A): contributes A e^{iωt} + A† e^{−iωt}.
    pub oscillating: Vec<(f64, Operator)>,
}

impl DriveTerms {
    pub fn eval(&self, t: f64) -> Operator {
        let n = self.space.total_dim();
        let mut out = Array2::zeros((n, n));
        self.eval_into(t, &mut out);
        Operator { space: self.space, matrix: out }
    }

    /// Fill `out` with H(t); `out` must be total_dim × total_dim.
    pub fn eval_into(&self, t: f64, out: &mut Array2<C64>) {
        out.assign(&self.static_part.matrix);
        let n = out.nrows();
        for (w, a) in &self.oscillating {
            let phase = C64::new(0.0, w * t).exp();
            for i in 0..n {
                for j in 0..n {
                    let v = a.matrix[[i, j]];
                    if v != C64::new(0.0, 0.0) {
                        let x = phase * v;
                        out[[i, j]] += x;
                        out[[j, i]] += x.conj();
                    }
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::{interior_distance, matrix_exponential};
    use crate::perturb::compute_cz_orders;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn single_scheme_config(space: SpaceSpec) -> RamanConfig {
        let m = space.mode_count;
        RamanConfig {
            level_freqs: [0.0, 0.5, 1.5],
            trap_freq: 1.0,
            schemes: vec![LaserPair {
                g13: c(1.0, 0.0),
                g23: c(1.0, 0.0),
                eta13: vec![0.1; m],
                eta23: vec![-0.1; m],
                detuning: 100.0,
            }],
            space,
        }
    }

    #[test]
    fn lambda_follows_the_max_over_scale_definition() {
        let mut cfg = single_scheme_config(SpaceSpec::new(3, 0, 1, 0).unwrap());
        cfg.schemes[0].g13 = c(0.0, 2.0); // |g13| = 2
        cfg.schemes[0].detuning = 200.0;
        assert_eq!(cfg.lambda(), 0.01);
    }

    #[test]
    fn single_scheme_no_modes_has_two_keys_with_four_summands() {
        let space = SpaceSpec::new(3, 0, 1, 0).unwrap();
        let mut cfg = single_scheme_config(space);
        cfg.schemes[0].g13 = c(2.0, 0.0);
        cfg.schemes[0].detuning = 200.0;
        let h = cfg.interaction_orders().unwrap();
        let h1 = h.order(1);
        // No trap term with M = 0: keys are exactly ∓Δ.
        assert_eq!(h1.term_count(), 2);
        let inv_lambda = 1.0 / cfg.lambda();
        let sig13 = build_basic_operator(BasicOperator::Sigma { l: 1, m: 3 }, space).unwrap();
        let sig23 = build_basic_operator(BasicOperator::Sigma { l: 2, m: 3 }, space).unwrap();
        let want = &sig13.scaled(c(2.0 * inv_lambda, 0.0)) + &sig23.scaled(c(inv_lambda, 0.0));
        let lower = h1.coefficient(&FreqKey::unit(1, 0, -1)).unwrap();
        assert_eq!(lower, &want);
        let upper = h1.coefficient(&FreqKey::unit(1, 0, 1)).unwrap();
        assert_eq!(upper, &want.dagger());
    }

    #[test]
    fn two_schemes_have_five_frequency_keys() {
        let space = SpaceSpec::new(3, 1, 4, 2).unwrap();
        let mut cfg = single_scheme_config(space);
        cfg.schemes.push(LaserPair {
            g13: c(0.5, 0.0),
            g23: c(0.5, 0.5),
            eta13: vec![0.05],
            eta23: vec![0.0],
            detuning: -137.0,
        });
        let h1 = cfg.interaction_orders().unwrap().order(1);
        assert_eq!(h1.term_count(), 5);
        assert!(h1.has_zero_key());
        for key in [
            FreqKey::new(vec![1, 0]),
            FreqKey::new(vec![-1, 0]),
            FreqKey::new(vec![0, 1]),
            FreqKey::new(vec![0, -1]),
        ] {
            assert!(h1.coefficient(&key).is_some(), "missing {key:?}");
        }
        assert!(h1.is_hermitian_valued(1e-13));
    }

    #[test]
    fn interaction_picture_identity_reconstructs_schroedinger_hamiltonian() {
        let space = SpaceSpec::new(3, 1, 5, 3).unwrap();
        let cfg = single_scheme_config(space);
        let h = cfg.interaction_orders().unwrap();
        let t = 1.3 / 100.0;
        let u0 = matrix_exponential(&h.h0.scaled(c(0.0, -t))).unwrap();
        let lhs = u0
            .matmul(&h.order(1).eval(t).scaled(c(cfg.lambda(), 0.0)))
            .matmul(&u0.dagger());
        let rhs = &cfg.schroedinger_hamiltonian(t).unwrap() - &h.h0;
        assert!((&lhs - &rhs).frobenius_norm() <= 1e-12);
    }

    #[test]
    fn analytic_model_single_scheme_values() {
        let cfg = single_scheme_config(SpaceSpec::new(3, 0, 1, 0).unwrap());
        let model = cfg.analytic_effective_model().unwrap();
        // g₁₂ = −g₁₃ g₂₃*/Δ = −0.01: same −1/Δ prefactor as the shifts.
        assert_eq!(model.couplings[0].g12, c(-0.01, 0.0));
        assert_eq!(model.shifts[0], -0.01);
        assert_eq!(model.shifts[1], -0.01);
        assert_eq!(model.shifts[2], 0.02);
        assert_eq!(model.couplings[0].omega12, 0.5);
        // ω̆₃ balances the other two shifts.
        assert!((model.shifts[2] + model.shifts[0] + model.shifts[1]).abs() < 1e-15);
    }

    #[test]
    fn opposite_detunings_cancel_shifts() {
        let space = SpaceSpec::new(3, 0, 1, 0).unwrap();
        let mut cfg = single_scheme_config(space);
        cfg.schemes.push(LaserPair { detuning: -100.0, ..cfg.schemes[0].clone() });
        let model = cfg.analytic_effective_model().unwrap();
        assert_eq!(model.shifts[0], 0.0);
        assert_eq!(model.shifts[1], 0.0);
        assert_eq!(model.shifts[2], 0.0);
        assert_eq!(model.couplings[1].g12, -model.couplings[0].g12);
    }

    #[test]
    fn copropagating_beams_decouple_motion() {
        let space = SpaceSpec::new(3, 1, 4, 2).unwrap();
        let mut cfg = single_scheme_config(space);
        cfg.schemes[0].eta13 = vec![0.07];
        cfg.schemes[0].eta23 = vec![0.07];
        let model = cfg.analytic_effective_model().unwrap();
        assert_eq!(model.couplings[0].eta12, vec![0.0]);
    }

    #[test]
    fn effective_c2_matrix_without_modes() {
        let space = SpaceSpec::new(3, 0, 1, 0).unwrap();
        let cfg = single_scheme_config(space);
        let model = cfg.analytic_effective_model().unwrap();
        let op = effective_c2_operator(&model, &cfg).unwrap();
        let g12 = model.couplings[0].g12;
        let want = [
            [c(model.shifts[0], 0.0), g12, c(0.0, 0.0)],
            [g12.conj(), c(model.shifts[1], 0.0), c(0.0, 0.0)],
            [c(0.0, 0.0), c(0.0, 0.0), c(model.shifts[2], 0.0)],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(op.matrix[[i, j]], want[i][j]);
            }
        }
    }

    #[test]
    fn effective_c2_commutes_with_block_projectors() {
        let space = SpaceSpec::new(3, 1, 4, 2).unwrap();
        let cfg = single_scheme_config(space);
        let model = cfg.analytic_effective_model().unwrap();
        let op = effective_c2_operator(&model, &cfg).unwrap();
        let sig = |l, m| build_basic_operator(BasicOperator::Sigma { l, m }, space).unwrap();
        let p12 = &sig(1, 1) + &sig(2, 2);
        let sig33 = sig(3, 3);
        assert_eq!(op.commutator(&p12), Operator::zeros(space));
        assert_eq!(op.commutator(&sig33), Operator::zeros(space));
    }

    #[test]
    fn zero_coupling_model_gives_diagonal_operator() {
        let space = SpaceSpec::new(3, 0, 1, 0).unwrap();
        let cfg = single_scheme_config(space);
        let model = EffectiveModel {
            shifts: [-0.3, -0.1, 0.4],
            couplings: vec![EffectiveCoupling { g12: c(0.0, 0.0), eta12: vec![], omega12: 0.5 }],
        };
        let op = effective_c2_operator(&model, &cfg).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                if i != j {
                    assert_eq!(op.matrix[[i, j]], c(0.0, 0.0));
                }
            }
        }
    }

    #[test]
    fn additivity_of_effective_models_is_bit_exact() {
        let space = SpaceSpec::new(3, 1, 4, 2).unwrap();
        let mut cfg = single_scheme_config(space);
        cfg.schemes.push(LaserPair {
            g13: c(0.4, -0.2),
            g23: c(0.3, 0.6),
            eta13: vec![0.03],
            eta23: vec![0.12],
            detuning: -61.0,
        });

        let combined = cfg.analytic_effective_model().unwrap();
        let single1 = RamanConfig { schemes: vec![cfg.schemes[0].clone()], ..cfg.clone() };
        let single2 = RamanConfig { schemes: vec![cfg.schemes[1].clone()], ..cfg.clone() };
        let m1 = single1.analytic_effective_model().unwrap();
        let m2 = single2.analytic_effective_model().unwrap();

        for j in 0..3 {
            assert_eq!(combined.shifts[j], m1.shifts[j] + m2.shifts[j]);
        }
        assert_eq!(combined.couplings[0], m1.couplings[0]);
        assert_eq!(combined.couplings[1], m2.couplings[0]);

        let op = effective_c2_operator(&combined, &cfg).unwrap();
        let op1 = effective_c2_operator(&m1, &single1).unwrap();
        let op2 = effective_c2_operator(&m2, &single2).unwrap();
        assert_eq!(op.matrix, (&op1 + &op2).matrix);
    }

    #[test]
    fn replacing_the_scheme_list_reproduces_single_scheme_bitwise() {
        let space = SpaceSpec::new(3, 1, 4, 2).unwrap();
        let mut two = single_scheme_config(space);
        two.schemes.push(LaserPair {
            g13: c(0.2, 0.0),
            g23: c(0.2, 0.1),
            eta13: vec![0.0],
            eta23: vec![0.04],
            detuning: 55.0,
        });
        let single = single_scheme_config(space);
        let reduced = RamanConfig { schemes: vec![two.schemes[0].clone()], ..two.clone() };
        assert_eq!(reduced, single);
        let ma = reduced.analytic_effective_model().unwrap();
        let mb = single.analytic_effective_model().unwrap();
        assert_eq!(ma, mb);
    }

    #[test]
    fn schroedinger_hamiltonian_without_lasers_is_diagonal() {
        let space = SpaceSpec::new(3, 1, 4, 2).unwrap();
        let cfg = RamanConfig { schemes: vec![], ..single_scheme_config(space) };
        let h = cfg.schroedinger_hamiltonian(0.77).unwrap();
        let n_op = total_number_operator(space).scaled(c(cfg.trap_freq, 0.0));
        let want = &cfg.h0().unwrap() + &n_op;
        assert_eq!(h, want);
    }

    #[test]
    fn schroedinger_hamiltonian_is_hermitian_at_all_times() {
        let space = SpaceSpec::new(3, 1, 4, 2).unwrap();
        let cfg = single_scheme_config(space);
        for &t in &[0.0, 0.37 / 1.0, 5.0 / 100.0] {
            let h = cfg.schroedinger_hamiltonian(t).unwrap();
            assert_eq!((&h - &h.dagger()).frobenius_norm(), 0.0);
        }
    }

    #[test]
    fn engine_c2_matches_analytic_formula_on_the_interior() {
        let space = SpaceSpec::new(3, 1, 8, 6).unwrap();
        let cfg = single_scheme_config(space);
        let h = cfg.interaction_orders().unwrap();
        let d = compute_cz_orders(&h, 2).unwrap();
        let lambda = cfg.lambda();
        let engine = d.c[1].scaled(c(lambda * lambda, 0.0));
        let analytic =
            effective_c2_operator(&cfg.analytic_effective_model().unwrap(), &cfg).unwrap();
        let dist = interior_distance(&engine, &analytic, 4).unwrap();
        assert!(dist <= 1e-9, "interior distance {dist}");
    }

    #[test]
    fn engine_c1_is_the_trap_hamiltonian() {
        let space = SpaceSpec::new(3, 1, 6, 3).unwrap();
        let cfg = single_scheme_config(space);
        let h = cfg.interaction_orders().unwrap();
        let d = compute_cz_orders(&h, 2).unwrap();
        let lambda_c1 = d.c[0].scaled(c(cfg.lambda(), 0.0));
        let want = total_number_operator(space).scaled(c(cfg.trap_freq, 0.0));
        assert_eq!(lambda_c1, want);
    }

    /// Spectral norm by power iteration on M†M (deterministic start).
    fn spectral_norm(op: &Operator) -> f64 {
        let n = op.dim();
        let mtm = op.dagger().matmul(op);
        let mut v: Vec<C64> = (0..n)
            .map(|i| C64::new(1.0 + (i as f64) * 0.013, 0.7 - (i as f64) * 0.002))
            .collect();
        let mut lam = 0.0f64;
        for _ in 0..200 {
            let mut w = vec![C64::new(0.0, 0.0); n];
            for i in 0..n {
                for j in 0..n {
                    w[i] += mtm.matrix[[i, j]] * v[j];
                }
            }
            let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if norm == 0.0 {
                return 0.0;
            }
            lam = norm;
            for (vi, wi) in v.iter_mut().zip(&w) {
                *vi = wi / C64::new(norm, 0.0);
            }
        }
        lam.sqrt()
    }

    #[test]
    fn first_order_dressing_stays_small() {
        let space = SpaceSpec::new(3, 1, 6, 3).unwrap();
        let cfg = single_scheme_config(space);
        let h = cfg.interaction_orders().unwrap();
        let d = compute_cz_orders(&h, 2).unwrap();
        let lambda = cfg.lambda();
        for &t in &[0.0, 0.011, 0.4, 3.7] {
            let z1 = d.z[0].eval(t).scaled(c(lambda, 0.0));
            assert!(spectral_norm(&z1) <= 2.0 * lambda);
        }
    }

    /// Central-difference check of i·dT/d(Δt) = (H̃/Δ)·T at truncation order 2.
    #[test]
    fn defining_equation_residual_is_third_order() {
        let space = SpaceSpec::new(3, 1, 5, 3).unwrap();
        let cfg = single_scheme_config(space);
        let delta = cfg.schemes[0].detuning;
        let lambda = cfg.lambda();
        let h = cfg.interaction_orders().unwrap();
        let d = compute_cz_orders(&h, 2).unwrap();
        let h1 = h.order(1);
        let fd_step = 1e-6 / delta;
        let bound = 50.0 * lambda.powi(3);
        for k in 0..10 {
            let t = (k as f64 + 0.31) * 2.0 / delta;
            let plus = d.truncated_evolutor(t + fd_step).unwrap();
            let minus = d.truncated_evolutor(t - fd_step).unwrap();
            let deriv = (&plus - &minus).scaled(c(0.0, 1.0 / (2.0 * fd_step * delta)));
            let rhs = h1
                .eval(t)
                .scaled(c(lambda / delta, 0.0))
                .matmul(&d.truncated_evolutor(t).unwrap());
            let res = (&deriv - &rhs).frobenius_norm();
            assert!(res <= bound, "residual {res} > {bound} at t = {t}");
        }
    }

    #[test]
    fn validation_rejects_bad_schemes() {
        let space = SpaceSpec::new(3, 1, 4, 2).unwrap();
        let mut dup = single_scheme_config(space);
        dup.schemes.push(dup.schemes[0].clone());
        assert!(matches!(dup.validate(), Err(Error::DuplicateDetuning)));

        let mut zero_g = single_scheme_config(space);
        zero_g.schemes[0].g23 = c(0.0, 0.0);
        assert!(matches!(zero_g.validate(), Err(Error::InvalidScheme(_))));

        let mut zero_d = single_scheme_config(space);
        zero_d.schemes[0].detuning = 0.0;
        assert!(matches!(zero_d.validate(), Err(Error::InvalidScheme(_))));

        let mut degenerate = single_scheme_config(space);
        degenerate.level_freqs = [0.0, 0.5, 0.5];
        assert!(matches!(degenerate.validate(), Err(Error::InvalidScheme(_))));
    }

    #[test]
    fn low_detuning_raises_a_warning() {
        let space = SpaceSpec::new(3, 0, 1, 0).unwrap();
        let mut cfg = single_scheme_config(space);
        cfg.schemes[0].detuning = 5.0;
        let warnings = cfg.validate().unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("high-detuning"));
    }
}
