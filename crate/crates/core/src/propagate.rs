//! Exact benchmark propagation of time-dependent Hamiltonians.
//!
//! Midpoint-exponential stepping, U ← exp(−i H(t + δt/2) δt) · U, with the
//! per-step exponential applied by a shifted Taylor series to machine
//! precision, so the only method error is the O(δt²) midpoint quadrature.
//! Accuracy is monitorable by step halving.
//!
//! This module is the independent oracle for the perturbative machinery: it
//! depends only on [`crate::hilbert`] and a caller-supplied H(t), never on
//! the trig-polynomial or decomposition code it is used to check.

use ndarray::{Array1, Array2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hilbert::{gemm_into, one_norm, Operator, SpaceSpec};

/// Margin of the step-size rule: δt ≤ 0.05 / max|ω|.
const STEP_RULE: f64 = 0.05;

/// Sampled benchmark evolution: unitaries at the requested sample times.
#[derive(Debug, Clone)]
pub struct PropagationRun {
    pub space: SpaceSpec,
    pub times: Vec<f64>,
    pub step: f64,
    pub unitaries: Vec<Operator>,
    /// ‖U†U − I‖_F at the final sample.
    pub final_unitarity_defect: f64,
}

fn check_grid(t_final: f64, dt: f64, max_freq: f64, samples: &[f64]) -> Result<()> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(Error::NumericError("dt must be positive and finite".into()));
    }
    if max_freq > 0.0 {
        let limit = STEP_RULE / max_freq;
        if dt > limit {
            return Err(Error::StepTooLarge { dt, limit });
        }
    }
    if samples.is_empty() {
        return Err(Error::InvalidState("no sample times requested".into()));
    }
    let mut prev = 0.0;
    for (i, &s) in samples.iter().enumerate() {
        if !s.is_finite() || s < 0.0 || s > t_final + 1e-12 * t_final.abs().max(1.0) {
            return Err(Error::InvalidState(format!(
                "sample {i} = {s} outside [0, {t_final}]"
            )));
        }
        if i > 0 && s < prev {
            return Err(Error::InvalidState("sample times must be ascending".into()));
        }
        prev = s;
    }
    Ok(())
}

/// Core engine: carry an arbitrary block of columns through the midpoint
/// scheme, invoking `on_sample` at every requested time (ascending).
///
/// `h_of_t` must fill its output with H(t) for the given time.
pub fn exact_propagate_block<H, F>(
    mut h_of_t: H,
    space: SpaceSpec,
    max_freq: f64,
    t_final: f64,
    dt: f64,
    samples: &[f64],
    block: &Array2<C64>,
    mut on_sample: F,
) -> Result<()>
where
    H: FnMut(f64, &mut Array2<C64>),
    F: FnMut(usize, f64, &Array2<C64>),
{
    let n = space.total_dim();
    if block.nrows() != n {
        return Err(Error::SpaceMismatch);
    }
    check_grid(t_final, dt, max_freq, samples)?;

    let mut state = block.clone();
    let mut ws = StepWorkspace::new(n, block.ncols());
    let mut hbuf = Array2::zeros((n, n));
    let mut t = 0.0f64;
    for (s_idx, &ts) in samples.iter().enumerate() {
        let gap = ts - t;
        if gap > 0.0 {
            let nsteps = (gap / dt).ceil().max(1.0) as usize;
            let h_step = gap / nsteps as f64;
            for k in 0..nsteps {
                let mid = t + (k as f64 + 0.5) * h_step;
                h_of_t(mid, &mut hbuf);
                apply_exp_step(&hbuf, h_step, &mut state, &mut ws);
            }
            t = ts;
        }
        on_sample(s_idx, ts, &state);
    }
    Ok(())
}

/// Full-unitary benchmark run (the block is the identity).
pub fn exact_propagate<H>(
    h_of_t: H,
    space: SpaceSpec,
    max_freq: f64,
    t_final: f64,
    dt: f64,
    samples: &[f64],
) -> Result<PropagationRun>
where
    H: FnMut(f64, &mut Array2<C64>),
{
    let n = space.total_dim();
    let eye = Array2::from_diag_elem(n, C64::new(1.0, 0.0));
    let mut frames: Vec<Operator> = Vec::with_capacity(samples.len());
    exact_propagate_block(h_of_t, space, max_freq, t_final, dt, samples, &eye, |_, _, u| {
        frames.push(Operator { space, matrix: u.clone() });
    })?;
    let defect = match frames.last() {
        Some(u) => (&u.dagger().matmul(u) - &Operator::identity(space)).frobenius_norm(),
        None => 0.0,
    };
    Ok(PropagationRun {
        space,
        times: samples.to_vec(),
        step: dt,
        unitaries: frames,
        final_unitarity_defect: defect,
    })
}

/// State-vector benchmark run; returns ψ(t) at each sample.
pub fn exact_propagate_state<H>(
    h_of_t: H,
    space: SpaceSpec,
    max_freq: f64,
    t_final: f64,
    dt: f64,
    samples: &[f64],
    psi0: &Array1<C64>,
) -> Result<Vec<Array1<C64>>>
where
    H: FnMut(f64, &mut Array2<C64>),
{
    let n = space.total_dim();
    if psi0.len() != n {
        return Err(Error::SpaceMismatch);
    }
    check_normalized(psi0)?;
    let col = Array2::from_shape_fn((n, 1), |(i, _)| psi0[i]);
    let mut states = Vec::with_capacity(samples.len());
    exact_propagate_block(h_of_t, space, max_freq, t_final, dt, samples, &col, |_, _, u| {
        states.push(Array1::from_iter(u.column(0).iter().copied()));
    })?;
    Ok(states)
}

fn check_normalized(psi: &Array1<C64>) -> Result<()> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidState(format!("state norm {norm} is not 1")));
    }
    Ok(())
}

struct StepWorkspace {
    term: Array2<C64>,
    prod: Array2<C64>,
    acc: Array2<C64>,
    shifted: Array2<C64>,
}

impl StepWorkspace {
    fn new(n: usize, m: usize) -> Self {
        StepWorkspace {
            term: Array2::zeros((n, m)),
            prod: Array2::zeros((n, m)),
            acc: Array2::zeros((n, m)),
            shifted: Array2::zeros((n, n)),
        }
    }
}

/// state ← exp(−i h_step H) · state, by Taylor series on the trace-shifted
/// generator, substepping so each series argument has norm ≤ 1/2.
fn apply_exp_step(h: &Array2<C64>, h_step: f64, state: &mut Array2<C64>, ws: &mut StepWorkspace) {
    let n = h.nrows();
    let mut shift = C64::new(0.0, 0.0);
    for i in 0..n {
        shift += h[[i, i]];
    }
    shift /= C64::new(n as f64, 0.0);

    ws.shifted.assign(h);
    for i in 0..n {
        ws.shifted[[i, i]] -= shift;
    }
    let norm_est = one_norm(&ws.shifted) * h_step.abs();
    let substeps = (norm_est / 0.5).ceil().max(1.0) as usize;
    let h_sub = h_step / substeps as f64;
    let phase = (C64::new(0.0, -h_sub) * shift).exp();

    for _ in 0..substeps {
        ws.acc.assign(state);
        ws.term.assign(state);
        let scale0 = state.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        for k in 1..=40u32 {
            gemm_into(&ws.shifted, &ws.term, &mut ws.prod);
            let f = C64::new(0.0, -h_sub / k as f64);
            for (t_el, p_el) in ws.term.iter_mut().zip(ws.prod.iter()) {
                *t_el = f * *p_el;
            }
            ws.acc.zip_mut_with(&ws.term, |a, t| *a += *t);
            let tn = ws.term.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
            if tn <= 1e-16 * scale0.max(1e-300) {
                break;
            }
        }
        for (s_el, a_el) in state.iter_mut().zip(ws.acc.iter()) {
            *s_el = phase * *a_el;
        }
    }
}

/// Interior-projected fidelity |tr(P U† V P)| / tr(P): 1 iff U and V agree
/// on the interior up to a global phase.
pub fn fidelity(u: &Operator, v: &Operator, n_phys: usize) -> Result<f64> {
    if u.space != v.space {
        return Err(Error::SpaceMismatch);
    }
    let interior = u.space.interior_indices(n_phys);
    Ok(fidelity_columns(&u.matrix, &v.matrix, &interior))
}

/// Same as [`fidelity`] for matrices whose columns at `interior` positions
/// hold U|j⟩ and V|j⟩.
pub fn fidelity_columns(u: &Array2<C64>, v: &Array2<C64>, interior: &[usize]) -> f64 {
    let mut tr = C64::new(0.0, 0.0);
    for &j in interior {
        let mut dot = C64::new(0.0, 0.0);
        for i in 0..u.nrows() {
            dot += u[[i, j]].conj() * v[[i, j]];
        }
        tr += dot;
    }
    tr.norm() / interior.len() as f64
}

/// Level populations P_l(t) = ⟨ψ(t)| (σ_ll ⊗ 1) |ψ(t)⟩ along a benchmark
/// run, for a normalized initial state and a 1-based level index.
pub fn populations(
    run: &PropagationRun,
    initial_state: &Array1<C64>,
    level: usize,
) -> Result<Vec<f64>> {
    let n = run.space.total_dim();
    if initial_state.len() != n {
        return Err(Error::SpaceMismatch);
    }
    if level == 0 || level > run.space.atomic_dim {
        return Err(Error::InvalidIndex(format!("level {level}")));
    }
    check_normalized(initial_state)?;
    let mut out = Vec::with_capacity(run.unitaries.len());
    for u in &run.unitaries {
        let mut p = 0.0;
        for i in 0..n {
            if run.space.atom_of(i) == level - 1 {
                let mut amp = C64::new(0.0, 0.0);
                for j in 0..n {
                    amp += u.matrix[[i, j]] * initial_state[j];
                }
                p += amp.norm_sqr();
            }
        }
        out.push(p);
    }
    Ok(out)
}

/// Population of one level from a state vector.
pub fn level_population(space: SpaceSpec, psi: &Array1<C64>, level: usize) -> f64 {
    (0..space.total_dim())
        .filter(|&i| space.atom_of(i) == level - 1)
        .map(|i| psi[i].norm_sqr())
        .sum()
}
