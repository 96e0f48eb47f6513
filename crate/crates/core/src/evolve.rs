//! Time evolution under the sparse Hamiltonian.
//!
//! The production path is a Lanczos (Hermitian Krylov) approximation of the
//! matrix-exponential action with adaptive internal substepping; output
//! sampling is decoupled from the internal steps. A dense eigendecomposition
//! oracle covers small instances for testing.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::model::{SparseHamiltonian, StateVector};
use crate::scalar::Real;
use crate::C;

/// Propagator knobs: output sampling step, per-step local error target, and
/// Krylov subspace size.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PropagatorConfig<T> {
    pub dt: T,
    pub tolerance: T,
    pub krylov_dim: usize,
}

impl<T: Real> PropagatorConfig<T> {
    pub fn new(dt: T, tolerance: T, krylov_dim: usize) -> Result<Self> {
        if !(dt > T::zero()) {
            return Err(Error::invalid(format!("dt must be > 0, got {dt}")));
        }
        if !(tolerance > T::zero() && tolerance < T::one()) {
            return Err(Error::invalid(format!("tolerance must lie in (0,1), got {tolerance}")));
        }
        if krylov_dim < 2 {
            return Err(Error::invalid(format!("krylov_dim must be >= 2, got {krylov_dim}")));
        }
        Ok(Self { dt, tolerance, krylov_dim })
    }

    /// Default accuracy for the scalar: 1e-10 for f64, scaled up for f32.
    pub fn default_with_dt(dt: T) -> Self {
        let tol = T::of(1e-10).max(T::default_epsilon() * T::of(100.0));
        Self { dt, tolerance: tol, krylov_dim: 20 }
    }
}

/// Norm-drift bound every exposed state must satisfy.
pub fn norm_tolerance<T: Real>() -> T {
    T::of(1e-9).max(T::default_epsilon() * T::of(100.0))
}

const MAX_SUBSTEPS_PER_INTERVAL: usize = 100_000;

/// Evolve `psi0` to every time in `t_grid` (strictly ascending, t ≥ 0).
///
/// Each output state approximates e^{−iHt}·psi0 with local error per internal
/// substep bounded by `cfg.tolerance`.
pub fn evolve<T: Real>(
    h: &SparseHamiltonian<T>,
    psi0: &StateVector<T>,
    t_grid: &[T],
    cfg: &PropagatorConfig<T>,
) -> Result<Vec<StateVector<T>>> {
    PropagatorConfig::new(cfg.dt, cfg.tolerance, cfg.krylov_dim)?;
    if psi0.dimension() != h.dimension() {
        return Err(Error::invalid(format!(
            "state dimension {} does not match Hamiltonian dimension {}",
            psi0.dimension(),
            h.dimension()
        )));
    }
    if t_grid.is_empty() {
        return Err(Error::invalid("t_grid must contain at least one time"));
    }
    if !(t_grid[0] >= T::zero()) {
        return Err(Error::invalid("t_grid must start at a nonnegative time"));
    }
    for w in t_grid.windows(2) {
        if !(w[1] > w[0]) {
            return Err(Error::invalid(format!(
                "t_grid must be strictly ascending, got {} after {}",
                w[1], w[0]
            )));
        }
    }
    let norm0 = psi0.norm();
    if (norm0 - T::one()).abs() > T::of(1e-6) {
        return Err(Error::invalid(format!("psi0 must be normalized, got norm {norm0}")));
    }

    let mut work = Lanczos::new(h, cfg.krylov_dim);
    let mut psi = psi0.clone();
    let mut current = T::zero();
    let mut out = Vec::with_capacity(t_grid.len());
    let ntol = norm_tolerance::<T>();
    for &t in t_grid {
        let dt = t - current;
        if dt > T::zero() {
            work.propagate(psi.amplitudes_mut(), dt, cfg.tolerance)?;
            current = t;
        }
        let drift = (psi.norm() - T::one()).abs();
        if drift > ntol {
            return Err(Error::convergence(format!(
                "norm drift {drift:e} exceeds {ntol:e} at t={t}"
            )));
        }
        out.push(psi.clone());
    }
    Ok(out)
}

/// Lanczos workspace reused across substeps.
struct Lanczos<'h, T: Real> {
    h: &'h SparseHamiltonian<T>,
    m: usize,
    basis: Vec<Vec<C<T>>>,
    w: Vec<C<T>>,
    hnorm: T,
}

impl<'h, T: Real> Lanczos<'h, T> {
    fn new(h: &'h SparseHamiltonian<T>, krylov_dim: usize) -> Self {
        let m = krylov_dim.min(h.dimension()).max(1);
        let dim = h.dimension();
        let zero = C::new(T::zero(), T::zero());
        Self {
            h,
            m,
            basis: (0..=m).map(|_| vec![zero; dim]).collect(),
            w: vec![zero; dim],
            hnorm: gershgorin_bound(h).max(T::default_epsilon()),
        }
    }

    /// Advance psi by dt_total, substepping adaptively.
    fn propagate(&mut self, psi: &mut [C<T>], dt_total: T, tol: T) -> Result<()> {
        let mut remaining = dt_total;
        // Initial guess: the m-dimensional subspace resolves ~m/||H|| of time.
        let mut tau = (T::of_usize(self.m) / self.hnorm).min(dt_total);
        let floor = dt_total * T::of(1e-14);
        for _ in 0..MAX_SUBSTEPS_PER_INTERVAL {
            if !(remaining > T::zero()) {
                return Ok(());
            }
            let fact = self.factorize(psi);
            loop {
                // A happy breakdown means the Krylov space is invariant and
                // the projected exponential is exact for any step.
                let step = if fact.happy { remaining } else { tau.min(remaining) };
                let u = fact.exp_e1(step);
                let err = if fact.happy {
                    T::zero()
                } else {
                    fact.residual_norm * u[fact.m_eff - 1].norm_sqr().sqrt()
                };
                if err <= tol {
                    self.assemble_result(psi, &fact, &u);
                    remaining -= step;
                    if err < tol * T::of(0.01) {
                        tau = (tau * T::of(2.0)).min(dt_total);
                    }
                    break;
                }
                tau *= T::of(0.5);
                if tau < floor {
                    return Err(Error::convergence(format!(
                        "step size underflow: tau={tau:e} below floor at tolerance {tol:e}"
                    )));
                }
            }
        }
        Err(Error::convergence(format!(
            "exceeded {MAX_SUBSTEPS_PER_INTERVAL} substeps for one interval at tolerance {tol:e}"
        )))
    }

    /// Run the Lanczos recurrence with full reorthogonalization from `psi`.
    fn factorize(&mut self, psi: &[C<T>]) -> Factorization<T> {
        let nrm = norm(psi);
        let breakdown = T::default_epsilon() * T::of(64.0) * self.hnorm;
        scale_into(&mut self.basis[0], psi, T::one() / nrm);
        let mut alphas: Vec<T> = Vec::with_capacity(self.m);
        let mut betas: Vec<T> = Vec::with_capacity(self.m);
        let mut m_eff = self.m;
        let mut residual_norm = T::zero();
        let mut happy = false;
        for j in 0..self.m {
            let (vj, w) = (&self.basis[j], &mut self.w);
            self.h.matvec(vj, w);
            let mut alpha = dot(&self.basis[j], w).re;
            axpy(w, -alpha, &self.basis[j]);
            if j > 0 {
                axpy(w, -betas[j - 1], &self.basis[j - 1]);
            }
            // One full reorthogonalization pass keeps the small projected
            // matrix faithful over the whole subspace.
            for i in 0..=j {
                let c = dot(&self.basis[i], w);
                caxpy(w, -c, &self.basis[i]);
                if i == j {
                    alpha += c.re;
                }
            }
            alphas.push(alpha);
            let beta = norm(w);
            residual_norm = beta;
            if beta <= breakdown {
                m_eff = j + 1;
                happy = true;
                break;
            }
            if j + 1 < self.m {
                betas.push(beta);
                let inv = T::one() / beta;
                let (w, next) = (&self.w, &mut self.basis[j + 1]);
                scale_into(next, w, inv);
            }
        }
        Factorization { alphas, betas, m_eff, residual_norm, happy, nrm }
    }

    fn assemble_result(&self, psi: &mut [C<T>], fact: &Factorization<T>, u: &[C<T>]) {
        let zero = C::new(T::zero(), T::zero());
        psi.fill(zero);
        for (k, uk) in u.iter().enumerate().take(fact.m_eff) {
            let coeff = *uk * C::new(fact.nrm, T::zero());
            caxpy(psi, coeff, &self.basis[k]);
        }
    }
}

struct Factorization<T> {
    alphas: Vec<T>,
    betas: Vec<T>,
    m_eff: usize,
    residual_norm: T,
    happy: bool,
    nrm: T,
}

impl<T: Real> Factorization<T> {
    /// u(τ) = exp(−iτT_m)·e_1 via eigendecomposition of the real symmetric
    /// tridiagonal projection.
    fn exp_e1(&self, tau: T) -> Vec<C<T>> {
        let m = self.m_eff;
        let mut tm = DMatrix::from_element(m, m, T::zero());
        for i in 0..m {
            tm[(i, i)] = self.alphas[i];
            if i + 1 < m {
                tm[(i + 1, i)] = self.betas[i];
                tm[(i, i + 1)] = self.betas[i];
            }
        }
        let eig = tm.symmetric_eigen();
        let mut u = vec![C::new(T::zero(), T::zero()); m];
        for l in 0..m {
            let lambda = eig.eigenvalues[l];
            let weight = eig.eigenvectors[(0, l)];
            let arg = -tau * lambda;
            let phase = C::new(arg.cos(), arg.sin()) * C::new(weight, T::zero());
            for k in 0..m {
                u[k] += phase * C::new(eig.eigenvectors[(k, l)], T::zero());
            }
        }
        u
    }
}

/// Upper bound on the spectral radius from Gershgorin disks.
fn gershgorin_bound<T: Real>(h: &SparseHamiltonian<T>) -> T {
    let mut bound = T::zero();
    for r in 0..h.dimension() {
        let mut acc = T::zero();
        for (_, v) in h.row(r) {
            acc += v.re.abs() + v.im.abs();
        }
        bound = bound.max(acc);
    }
    bound
}

fn norm<T: Real>(x: &[C<T>]) -> T {
    x.iter().map(|a| a.norm_sqr()).fold(T::zero(), |s, v| s + v).sqrt()
}

fn dot<T: Real>(x: &[C<T>], y: &[C<T>]) -> C<T> {
    x.iter()
        .zip(y)
        .map(|(a, b)| a.conj() * *b)
        .fold(C::new(T::zero(), T::zero()), |s, v| s + v)
}

fn axpy<T: Real>(y: &mut [C<T>], a: T, x: &[C<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += *xi * C::new(a, T::zero());
    }
}

fn caxpy<T: Real>(y: &mut [C<T>], a: C<T>, x: &[C<T>]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += *xi * a;
    }
}

fn scale_into<T: Real>(dst: &mut [C<T>], src: &[C<T>], s: T) {
    for (d, x) in dst.iter_mut().zip(src) {
        *d = *x * C::new(s, T::zero());
    }
}

/// Cap above which the dense oracle refuses to run.
pub const DENSE_ORACLE_DIMENSION_CAP: usize = 4096;

/// Reference evolution e^{−iHt}·psi0 by dense eigendecomposition.
///
/// The Hermitian matrix is embedded as a real symmetric one of twice the
/// size, so only the real symmetric eigensolver is relied on.
pub fn dense_oracle<T: Real>(
    h: &SparseHamiltonian<T>,
    psi0: &StateVector<T>,
    t: T,
) -> Result<StateVector<T>> {
    if !(t >= T::zero()) {
        return Err(Error::invalid(format!("time must be >= 0, got {t}")));
    }
    if psi0.dimension() != h.dimension() {
        return Err(Error::invalid("state and Hamiltonian dimensions differ"));
    }
    let eig = HermitianEigen::new(&h.to_dense())?;
    let amps = eig.apply_evolution(t, psi0.amplitudes());
    StateVector::from_amplitudes(amps, std::sync::Arc::clone(psi0.basis()))
}

/// Eigendecomposition of a Hermitian matrix via its real symmetric embedding
/// [[X, −Y], [Y, X]] of H = X + iY; every eigenvalue appears twice.
pub struct HermitianEigen<T: Real> {
    n: usize,
    eigenvalues: DVector<T>,
    q: DMatrix<T>,
}

impl<T: Real> HermitianEigen<T> {
    pub fn new(dense: &DMatrix<C<T>>) -> Result<Self> {
        let n = dense.nrows();
        if n != dense.ncols() {
            return Err(Error::invalid("matrix must be square"));
        }
        if n > DENSE_ORACLE_DIMENSION_CAP {
            return Err(Error::resource(format!(
                "dimension {n} exceeds dense-oracle cap {DENSE_ORACLE_DIMENSION_CAP}"
            )));
        }
        let mut embed = DMatrix::from_element(2 * n, 2 * n, T::zero());
        for r in 0..n {
            for c in 0..n {
                let v = dense[(r, c)];
                embed[(r, c)] = v.re;
                embed[(r + n, c + n)] = v.re;
                embed[(r, c + n)] = -v.im;
                embed[(r + n, c)] = v.im;
            }
        }
        let eig = embed.symmetric_eigen();
        Ok(Self { n, eigenvalues: eig.eigenvalues, q: eig.eigenvectors })
    }

    /// Eigenvalues of the Hermitian matrix, ascending (duplicates collapsed).
    pub fn eigenvalues(&self) -> Vec<T> {
        let mut all: Vec<T> = self.eigenvalues.iter().copied().collect();
        all.sort_by(|a, b| a.partial_cmp(b).expect("finite eigenvalues"));
        all.into_iter().step_by(2).collect()
    }

    /// e^{−iHt}·psi through the embedded spectral decomposition.
    pub fn apply_evolution(&self, t: T, psi: &[C<T>]) -> Vec<C<T>> {
        let n = self.n;
        assert_eq!(psi.len(), n);
        let two_n = 2 * n;
        let mut z = DVector::from_element(two_n, T::zero());
        let mut jz = DVector::from_element(two_n, T::zero());
        for k in 0..n {
            z[k] = psi[k].re;
            z[k + n] = psi[k].im;
            jz[k] = -psi[k].im;
            jz[k + n] = psi[k].re;
        }
        let c_re = self.q.transpose() * &z;
        let c_im = -(self.q.transpose() * &jz);
        let mut gamma = DVector::from_element(two_n, T::zero());
        let mut delta = DVector::from_element(two_n, T::zero());
        for k in 0..two_n {
            let arg = -t * self.eigenvalues[k];
            let (s, c) = (arg.sin(), arg.cos());
            gamma[k] = c * c_re[k] - s * c_im[k];
            delta[k] = c * c_im[k] + s * c_re[k];
        }
        let a = &self.q * gamma;
        let b = &self.q * delta;
        let half = T::of(0.5);
        (0..n)
            .map(|k| C::new(half * (a[k] - b[k + n]), half * (a[k + n] + b[k])))
            .collect()
    }
}
