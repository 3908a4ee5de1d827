//! Dense operators on a truncated (atom) ⊗ (Fock modes) tensor space.
//!
//! The tensor ordering is fixed: atomic factor first, then modes in declared
//! order. Each mode keeps Fock states `0..=n_max + n_buf`; the buffer states
//! exist so that products of truncated exponentials stay accurate on the
//! interior (`n ≤ n_phys`) where all comparisons happen.

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Shape of the truncated tensor space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpaceSpec {
    /// Number of atomic levels (3 for the Λ model; ≥ 1 accepted).
    pub atomic_dim: usize,
    /// Number of bosonic modes M.
    pub mode_count: usize,
    /// Highest physical Fock index kept per mode (n_max ≥ 1).
    pub fock_cutoff: usize,
    /// Extra Fock states per mode used during construction (n_buf ≥ 0).
    pub buffer: usize,
}

impl SpaceSpec {
    pub fn new(
        atomic_dim: usize,
        mode_count: usize,
        fock_cutoff: usize,
        buffer: usize,
    ) -> Result<Self> {
        if atomic_dim == 0 {
            return Err(Error::InvalidIndex("atomic_dim must be ≥ 1".into()));
        }
        if fock_cutoff == 0 {
            return Err(Error::InvalidIndex("fock_cutoff must be ≥ 1".into()));
        }
        Ok(SpaceSpec { atomic_dim, mode_count, fock_cutoff, buffer })
    }

    /// Kept Fock states per mode, buffer included.
    pub fn mode_dim(&self) -> usize {
        self.fock_cutoff + self.buffer + 1
    }

    /// Dimension of the full (buffered) space.
    pub fn total_dim(&self) -> usize {
        self.atomic_dim * self.mode_dim().pow(self.mode_count as u32)
    }

    /// Atomic level (0-based) of a basis index.
    pub fn atom_of(&self, idx: usize) -> usize {
        idx / self.mode_dim().pow(self.mode_count as u32)
    }

    /// Fock occupation of `mode` (0-based) at a basis index.
    pub fn fock_of(&self, idx: usize, mode: usize) -> usize {
        let d = self.mode_dim();
        let mut rest = idx % d.pow(self.mode_count as u32);
        for _ in 0..self.mode_count - mode - 1 {
            rest /= d;
        }
        rest % d
    }

    /// Basis indices whose every mode occupation is ≤ `n_phys`.
    pub fn interior_indices(&self, n_phys: usize) -> Vec<usize> {
        (0..self.total_dim())
            .filter(|&i| (0..self.mode_count).all(|m| self.fock_of(i, m) <= n_phys))
            .collect()
    }
}

/// Dense complex operator tied to a [`SpaceSpec`].
#[derive(Debug, Clone, PartialEq)]
pub struct Operator {
    pub space: SpaceSpec,
    pub matrix: Array2<C64>,
}

impl Operator {
    pub fn new(space: SpaceSpec, matrix: Array2<C64>) -> Result<Self> {
        let n = space.total_dim();
        if matrix.nrows() != n || matrix.ncols() != n {
            return Err(Error::SpaceMismatch);
        }
        Ok(Operator { space, matrix })
    }

    pub fn zeros(space: SpaceSpec) -> Self {
        let n = space.total_dim();
        Operator { space, matrix: Array2::zeros((n, n)) }
    }

    pub fn identity(space: SpaceSpec) -> Self {
        let n = space.total_dim();
        Operator { space, matrix: Array2::from_diag_elem(n, C64::new(1.0, 0.0)) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let n = self.dim();
        let m = Array2::from_shape_fn((n, n), |(i, j)| self.matrix[[j, i]].conj());
        Operator { space: self.space, matrix: m }
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.matrix.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn scaled(&self, c: C64) -> Self {
        Operator { space: self.space, matrix: self.matrix.mapv(|z| z * c) }
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        let n = self.dim();
        for i in 0..n {
            for j in i..n {
                if (self.matrix[[i, j]] - self.matrix[[j, i]].conj()).norm() > tol {
                    return false;
                }
            }
        }
        true
    }

    /// Matrix product; panics on space mismatch (a programming error, unlike
    /// the checked public operations which return `SpaceMismatch`).
    pub fn matmul(&self, other: &Operator) -> Operator {
        assert_eq!(self.space, other.space, "operator space mismatch");
        Operator { space: self.space, matrix: gemm(&self.matrix, &other.matrix) }
    }

    pub fn commutator(&self, other: &Operator) -> Operator {
        let ab = self.matmul(other);
        let ba = other.matmul(self);
        &ab - &ba
    }

    pub fn has_finite_entries(&self) -> bool {
        self.matrix.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }
}

impl std::ops::Add for &Operator {
    type Output = Operator;
    fn add(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        Operator { space: self.space, matrix: &self.matrix + &rhs.matrix }
    }
}

impl std::ops::Sub for &Operator {
    type Output = Operator;
    fn sub(self, rhs: &Operator) -> Operator {
        assert_eq!(self.space, rhs.space, "operator space mismatch");
        Operator { space: self.space, matrix: &self.matrix - &rhs.matrix }
    }
}

/// Elementary operator kinds, embedded into the full tensor space.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasicOperator {
    /// σ_lm ≡ |l⟩⟨m| with 1-based level indices.
    Sigma { l: usize, m: usize },
    Annihilate(usize),
    Create(usize),
    Number(usize),
    Identity,
}

/// Build σ_lm, a ladder operator, a number operator, or the identity on the
/// full (buffered) space. Identity on all non-target tensor factors.
pub fn build_basic_operator(kind: BasicOperator, space: SpaceSpec) -> Result<Operator> {
    match kind {
        BasicOperator::Sigma { l, m } => {
            if l == 0 || m == 0 || l > space.atomic_dim || m > space.atomic_dim {
                return Err(Error::InvalidIndex(format!(
                    "sigma({l},{m}) outside 1..={}",
                    space.atomic_dim
                )));
            }
            let mut atom = Array2::zeros((space.atomic_dim, space.atomic_dim));
            atom[[l - 1, m - 1]] = C64::new(1.0, 0.0);
            Ok(embed_atomic(&atom, space))
        }
        BasicOperator::Annihilate(mode) => {
            check_mode(mode, space)?;
            Ok(embed_mode(&ladder_down(space.mode_dim()), mode, space))
        }
        BasicOperator::Create(mode) => {
            check_mode(mode, space)?;
            let up = ladder_down(space.mode_dim()).t().mapv(|z| z.conj());
            Ok(embed_mode(&up, mode, space))
        }
        BasicOperator::Number(mode) => {
            check_mode(mode, space)?;
            let d = space.mode_dim();
            let mut n = Array2::zeros((d, d));
            for k in 0..d {
                n[[k, k]] = C64::new(k as f64, 0.0);
            }
            Ok(embed_mode(&n, mode, space))
        }
        BasicOperator::Identity => Ok(Operator::identity(space)),
    }
}

/// Total number operator Σ_α a_α† a_α on the full space.
pub fn total_number_operator(space: SpaceSpec) -> Operator {
    let mut acc = Operator::zeros(space);
    for m in 0..space.mode_count {
        let n = build_basic_operator(BasicOperator::Number(m), space)
            .expect("mode index in range");
        acc = &acc + &n;
    }
    acc
}

fn check_mode(mode: usize, space: SpaceSpec) -> Result<()> {
    if mode >= space.mode_count {
        Err(Error::InvalidIndex(format!(
            "mode {mode} outside 0..{}",
            space.mode_count
        )))
    } else {
        Ok(())
    }
}

fn ladder_down(dim: usize) -> Array2<C64> {
    let mut a = Array2::zeros((dim, dim));
    for n in 1..dim {
        a[[n - 1, n]] = C64::new((n as f64).sqrt(), 0.0);
    }
    a
}

fn embed_atomic(atom: &Array2<C64>, space: SpaceSpec) -> Operator {
    let modes = space.mode_dim().pow(space.mode_count as u32);
    let eye = Array2::from_diag_elem(modes, C64::new(1.0, 0.0));
    Operator { space, matrix: kron(atom, &eye) }
}

fn embed_mode(op: &Array2<C64>, mode: usize, space: SpaceSpec) -> Operator {
    let d = space.mode_dim();
    let mut full = Array2::from_diag_elem(space.atomic_dim, C64::new(1.0, 0.0));
    for m in 0..space.mode_count {
        let factor = if m == mode {
            op.clone()
        } else {
            Array2::from_diag_elem(d, C64::new(1.0, 0.0))
        };
        full = kron(&full, &factor);
    }
    Operator { space, matrix: full }
}

/// Kronecker product.
pub fn kron(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    let mut out = Array2::zeros((ar * br, ac * bc));
    for i in 0..ar {
        for j in 0..ac {
            let aij = a[[i, j]];
            if aij == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..br {
                for l in 0..bc {
                    out[[i * br + k, j * bc + l]] = aij * b[[k, l]];
                }
            }
        }
    }
    out
}

/// Travelling-wave phase operator e^{-i k·r} = ∏_α exp(−i η_α (a_α + a_α†))
/// with one Lamb-Dicke component η_α per mode.
pub fn displacement_phase(eta: &[f64], space: SpaceSpec) -> Result<Operator> {
    if eta.len() != space.mode_count {
        return Err(Error::InvalidIndex(format!(
            "expected {} Lamb-Dicke components, got {}",
            space.mode_count,
            eta.len()
        )));
    }
    if eta.iter().any(|x| !x.is_finite()) {
        return Err(Error::NumericError("non-finite Lamb-Dicke component".into()));
    }
    let mut gen = Operator::zeros(space);
    for (m, &e) in eta.iter().enumerate() {
        if e == 0.0 {
            continue;
        }
        let a = build_basic_operator(BasicOperator::Annihilate(m), space)?;
        let x = &a + &a.dagger();
        gen = &gen + &x.scaled(C64::new(e, 0.0));
    }
    matrix_exponential(&gen.scaled(C64::new(0.0, -1.0)))
}

/// exp(A) by scaling-and-squaring with Padé approximants (degrees 3–13).
pub fn matrix_exponential(a: &Operator) -> Result<Operator> {
    if !a.has_finite_entries() {
        return Err(Error::NumericError("non-finite entries in exponent".into()));
    }
    Ok(Operator { space: a.space, matrix: expm(&a.matrix)? })
}

/// Frobenius norm of P(A−B)P where P projects every mode onto Fock index
/// ≤ n_phys (the atomic factor is untouched).
pub fn interior_distance(a: &Operator, b: &Operator, n_phys: usize) -> Result<f64> {
    if a.space != b.space {
        return Err(Error::SpaceMismatch);
    }
    if n_phys > a.space.fock_cutoff {
        return Err(Error::InvalidIndex(format!(
            "n_phys {n_phys} exceeds fock_cutoff {}",
            a.space.fock_cutoff
        )));
    }
    let idx = a.space.interior_indices(n_phys);
    let mut sum = 0.0;
    for &i in &idx {
        for &j in &idx {
            sum += (a.matrix[[i, j]] - b.matrix[[i, j]]).norm_sqr();
        }
    }
    Ok(sum.sqrt())
}

// ---------------------------------------------------------------------------
// Dense kernels: gemm, one-norm, LU solve, Padé exponential
// ---------------------------------------------------------------------------

/// Row-major triple loop; deterministic accumulation order.
pub(crate) fn gemm(a: &Array2<C64>, b: &Array2<C64>) -> Array2<C64> {
    let mut out = Array2::zeros((a.nrows(), b.ncols()));
    gemm_into(a, b, &mut out);
    out
}

/// out = a · b, overwriting `out`.
pub(crate) fn gemm_into(a: &Array2<C64>, b: &Array2<C64>, out: &mut Array2<C64>) {
    let (n, ka) = a.dim();
    let (kb, m) = b.dim();
    assert_eq!(ka, kb, "gemm shape mismatch");
    assert_eq!(out.dim(), (n, m), "gemm output shape mismatch");
    out.fill(C64::new(0.0, 0.0));
    let b_std = b.as_standard_layout();
    let bs = b_std.as_slice().expect("standard layout");
    let os = out.as_slice_mut().expect("standard layout");
    for i in 0..n {
        let orow = &mut os[i * m..(i + 1) * m];
        for k in 0..ka {
            let aik = a[[i, k]];
            if aik == C64::new(0.0, 0.0) {
                continue;
            }
            let brow = &bs[k * m..(k + 1) * m];
            for j in 0..m {
                orow[j] += aik * brow[j];
            }
        }
    }
}

pub(crate) fn one_norm(a: &Array2<C64>) -> f64 {
    let (n, m) = a.dim();
    let mut best = 0.0f64;
    for j in 0..m {
        let mut s = 0.0;
        for i in 0..n {
            s += a[[i, j]].norm();
        }
        best = best.max(s);
    }
    best
}

/// Solve A X = B by Gaussian elimination with partial pivoting.
pub(crate) fn lu_solve(a: &Array2<C64>, b: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    let m = b.ncols();
    let mut lu = a.clone();
    let mut x = b.clone();
    for col in 0..n {
        let mut pmax = lu[[col, col]].norm();
        let mut prow = col;
        for r in col + 1..n {
            let v = lu[[r, col]].norm();
            if v > pmax {
                pmax = v;
                prow = r;
            }
        }
        if pmax == 0.0 {
            return Err(Error::NumericError("singular matrix in LU solve".into()));
        }
        if prow != col {
            for j in 0..n {
                lu.swap([col, j], [prow, j]);
            }
            for j in 0..m {
                x.swap([col, j], [prow, j]);
            }
        }
        let pivot = lu[[col, col]];
        for r in col + 1..n {
            let f = lu[[r, col]] / pivot;
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            lu[[r, col]] = f;
            for j in col + 1..n {
                let v = lu[[col, j]];
                lu[[r, j]] -= f * v;
            }
            for j in 0..m {
                let v = x[[col, j]];
                x[[r, j]] -= f * v;
            }
        }
    }
    for col in (0..n).rev() {
        let pivot = lu[[col, col]];
        for j in 0..m {
            let mut s = x[[col, j]];
            for k in col + 1..n {
                s -= lu[[col, k]] * x[[k, j]];
            }
            x[[col, j]] = s / pivot;
        }
    }
    Ok(x)
}

// Padé coefficient tables and 1-norm thresholds from Higham's
// scaling-and-squaring analysis.
const THETA: [(usize, f64); 5] = [
    (3, 1.495_585_217_958_292e-2),
    (5, 2.539_398_330_063_23e-1),
    (7, 9.504_178_996_162_932e-1),
    (9, 2.097_847_961_257_068e0),
    (13, 5.371_920_351_148_152e0),
];

/// b_0..b_m for the [m/m] Padé approximant of exp.
fn pade_coeffs(m: usize) -> Vec<f64> {
    (0..=m).map(|k| factorial_ratio(m, k)).collect()
}

/// b_k = (2m−k)! m! / ((2m)! k! (m−k)!), evaluated in f64 via incremental
/// products (exact enough for m ≤ 13).
fn factorial_ratio(m: usize, k: usize) -> f64 {
    let mut num = 1.0f64;
    // (2m-k)!/(2m)! = 1/∏_{i=2m-k+1}^{2m} i
    for i in (2 * m - k + 1)..=(2 * m) {
        num /= i as f64;
    }
    // m!/(m-k)! = ∏_{i=m-k+1}^{m} i
    for i in (m - k + 1)..=m {
        num *= i as f64;
    }
    // 1/k!
    for i in 1..=k {
        num /= i as f64;
    }
    num
}

fn is_diagonal(a: &Array2<C64>) -> bool {
    let n = a.nrows();
    for i in 0..n {
        for j in 0..n {
            if i != j && a[[i, j]] != C64::new(0.0, 0.0) {
                return false;
            }
        }
    }
    true
}

pub(crate) fn expm(a: &Array2<C64>) -> Result<Array2<C64>> {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "expm requires a square matrix");
    if n == 0 {
        return Ok(Array2::zeros((0, 0)));
    }
    if is_diagonal(a) {
        let mut out = Array2::zeros((n, n));
        for i in 0..n {
            out[[i, i]] = a[[i, i]].exp();
        }
        return Ok(out);
    }

    let norm = one_norm(a);
    if !norm.is_finite() {
        return Err(Error::NumericError("non-finite norm in expm".into()));
    }

    let (degree, theta13) = { (THETA.iter().find(|(_, th)| norm <= *th), THETA[4].1) };
    let (m, scaled, squarings) = match degree {
        Some(&(m, _)) => (m, a.clone(), 0u32),
        None => {
            let s = ((norm / theta13).log2().ceil() as u32).max(1);
            let f = C64::new((0.5f64).powi(s as i32), 0.0);
            (13, a.mapv(|z| z * f), s)
        }
    };

    let b = pade_coeffs(m);
    let eye = Array2::from_diag_elem(n, C64::new(1.0, 0.0));
    let a2 = gemm(&scaled, &scaled);

    // U = A * (odd-coefficient polynomial in A²), V = even polynomial in A².
    let (u, v) = if m <= 9 {
        let mut pow = eye.clone(); // A^0
        let mut upoly: Array2<C64> = &eye * C64::new(b[1], 0.0);
        let mut vpoly: Array2<C64> = &eye * C64::new(b[0], 0.0);
        let mut k = 2;
        while k <= m {
            pow = gemm(&pow, &a2);
            vpoly = vpoly + &pow * C64::new(b[k], 0.0);
            if k + 1 <= m {
                upoly = upoly + &pow * C64::new(b[k + 1], 0.0);
            }
            k += 2;
        }
        (gemm(&scaled, &upoly), vpoly)
    } else {
        let a4 = gemm(&a2, &a2);
        let a6 = gemm(&a2, &a4);
        let w1 = &a6 * C64::new(b[13], 0.0)
            + &a4 * C64::new(b[11], 0.0)
            + &a2 * C64::new(b[9], 0.0);
        let w2 = gemm(&w1, &a6)
            + &a6 * C64::new(b[7], 0.0)
            + &a4 * C64::new(b[5], 0.0)
            + &a2 * C64::new(b[3], 0.0)
            + &eye * C64::new(b[1], 0.0);
        let u = gemm(&scaled, &w2);
        let v1 = &a6 * C64::new(b[12], 0.0)
            + &a4 * C64::new(b[10], 0.0)
            + &a2 * C64::new(b[8], 0.0);
        let v = gemm(&v1, &a6)
            + &a6 * C64::new(b[6], 0.0)
            + &a4 * C64::new(b[4], 0.0)
            + &a2 * C64::new(b[2], 0.0)
            + &eye * C64::new(b[0], 0.0);
        (u, v)
    };

    let num = &v + &u;
    let den = &v - &u;
    let mut r = lu_solve(&den, &num)?;
    for _ in 0..squarings {
        r = gemm(&r, &r);
    }
    Ok(r)
}
