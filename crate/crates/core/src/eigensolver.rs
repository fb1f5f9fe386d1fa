//! Lowest eigenpairs of a sparse symmetric operator.
//!
//! Lanczos with full reorthogonalization against both the current Krylov
//! basis and every previously locked eigenvector. A single Krylov space only
//! sees one copy of a degenerate eigenvalue, so the solver restarts in the
//! orthogonal complement of what it has locked until a confirmation run
//! shows nothing lower is left. This resolves exact multiplets (for example
//! the spin multiplet of the undriven Mott state) as well as the
//! near-degenerate pairs around each transport threshold.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::hamiltonian::SparseOperator;
use crate::scalar::Real;
use crate::tridiag::tridiag_eigen;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("requested {requested} eigenpairs from an operator of dimension {dim}")]
    BadCount { requested: usize, dim: usize },
    #[error("tolerance must be positive and finite")]
    BadTolerance,
    #[error("Lanczos did not converge within {iterations} iterations (best residual {best_residual:e})")]
    NotConverged { iterations: usize, best_residual: f64 },
    #[error("dimension {dim} exceeds the dense oracle cap {cap}")]
    TooLarge { dim: usize, cap: usize },
    #[error("tridiagonal eigenproblem failed to converge")]
    Tridiagonal,
}

/// Lowest eigenpairs in ascending order.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSolution<T> {
    pub energies: Vec<T>,
    pub vectors: Vec<Vec<T>>,
    /// Explicit residual norms `||H v - E v||`.
    pub residuals: Vec<T>,
    /// Operator applications spent across all Lanczos runs.
    pub iterations: usize,
}

impl<T: Real> EigenSolution<T> {
    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn ground_energy(&self) -> T {
        self.energies[0]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Seed of the pseudo-random starting vectors.
    pub seed: u64,
    /// Extra eigenpairs resolved beyond the requested ones.
    pub extra: usize,
    /// Krylov dimension cap per run; `None` means the full complement.
    pub max_krylov: Option<usize>,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self { seed: 0x5eed_1a2c, extra: 2, max_krylov: None }
    }
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

fn axpy<T: Real>(alpha: T, x: &[T], y: &mut [T]) {
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi = *yi + alpha * xi;
    }
}

/// Classical Gram-Schmidt against `against`, repeated once when the first
/// pass removes most of the vector.
fn orthogonalize<'a, T: Real>(v: &mut [T], against: impl Iterator<Item = &'a Vec<T>> + Clone) {
    for _ in 0..2 {
        let before = norm(v);
        let coeffs: Vec<T> = against.clone().map(|q| dot(q, v)).collect();
        for (q, c) in against.clone().zip(coeffs) {
            axpy(-c, q, v);
        }
        if norm(v) > T::of(0.7) * before {
            break;
        }
    }
}

/// Flips `v` so its largest-magnitude component is positive.
pub fn fix_sign<T: Real>(v: &mut [T]) {
    let mut best = T::zero();
    let mut sign = T::one();
    for &x in v.iter() {
        if x.abs() > best {
            best = x.abs();
            sign = x.signum();
        }
    }
    if sign < T::zero() {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

fn residual<T: Real>(op: &SparseOperator<T>, v: &[T], energy: T, scratch: &mut [T]) -> T {
    op.apply_into(v, scratch);
    scratch.iter().zip(v).map(|(&hv, &x)| (hv - energy * x).powi(2)).sum::<T>().sqrt()
}

struct RitzPair<T> {
    value: T,
    vector: Vec<T>,
    estimate: T,
}

struct RunOutcome<T> {
    pairs: Vec<RitzPair<T>>,
    iterations: usize,
}

/// One Lanczos run restricted to the complement of `locked`. Returns the
/// lowest `want` Ritz pairs (fewer if the complement is smaller).
fn lanczos_run<T: Real>(
    op: &SparseOperator<T>,
    locked: &[Vec<T>],
    rng: &mut ChaCha8Rng,
    want: usize,
    tol: T,
    max_krylov: usize,
    floor: Option<T>,
) -> Result<Option<RunOutcome<T>>, SolverError> {
    let dim = op.dim();
    let room = dim - locked.len();
    let cap = max_krylov.min(room);
    if cap == 0 {
        return Ok(None);
    }

    let mut q: Vec<T> = (0..dim).map(|_| T::of(rng.gen_range(-1.0..1.0))).collect();
    orthogonalize(&mut q, locked.iter());
    let qn = norm(&q);
    if qn <= T::epsilon() {
        return Ok(None);
    }
    q.iter_mut().for_each(|x| *x = *x / qn);

    let mut basis: Vec<Vec<T>> = vec![q];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut w = vec![T::zero(); dim];
    let mut next_check = 8usize;
    let scale_floor = T::of(1e-300).max(T::min_positive_value());

    loop {
        let j = basis.len() - 1;
        op.apply_into(&basis[j], &mut w);
        let a = dot(&basis[j], &w);
        alpha.push(a);
        axpy(-a, &basis[j], &mut w);
        if j > 0 {
            axpy(-beta[j - 1], &basis[j - 1], &mut w);
        }
        orthogonalize(&mut w, locked.iter().chain(basis.iter()));
        let b = norm(&w);
        let size = j + 1;

        let anorm = alpha.iter().chain(beta.iter()).fold(T::zero(), |m, x| m.max(x.abs()));
        let exhausted = b <= T::epsilon() * anorm.max(scale_floor) * T::of(16.0) || size == cap;
        let take = want.min(size);

        if exhausted || size >= next_check {
            let est = tridiag_eigen(&alpha, &beta, &[size - 1]).ok_or(SolverError::Tridiagonal)?;
            let converged = (0..take).all(|i| {
                let r = (b * est.rows[0][i]).abs();
                // a confirmation run only has to separate its lowest value from `floor`
                let slack = floor.map_or(T::zero(), |f| (est.values[i] - f) * T::of(0.5));
                r <= (tol * T::of(0.1)).max(slack)
            });
            if exhausted || (size >= want && converged) {
                let all: Vec<usize> = (0..size).collect();
                let full = tridiag_eigen(&alpha, &beta, &all).ok_or(SolverError::Tridiagonal)?;
                let pairs = (0..take)
                    .map(|i| {
                        let mut v = vec![T::zero(); dim];
                        for (k, qk) in basis.iter().enumerate() {
                            axpy(full.rows[k][i], qk, &mut v);
                        }
                        let n = norm(&v);
                        v.iter_mut().for_each(|x| *x = *x / n);
                        RitzPair { value: full.values[i], vector: v, estimate: (b * full.rows[size - 1][i]).abs() }
                    })
                    .collect();
                return Ok(Some(RunOutcome { pairs, iterations: size }));
            }
            next_check = size + (size / 8).max(4);
        }

        beta.push(b);
        let inv = T::one() / b;
        basis.push(w.iter().map(|&x| x * inv).collect());
    }
}

/// The `k` lowest eigenpairs of `op`, each with explicit residual `<= tol`.
pub fn lowest_eigenpairs<T: Real>(op: &SparseOperator<T>, k: usize, tol: T) -> Result<EigenSolution<T>, SolverError> {
    lowest_eigenpairs_with(op, k, tol, &LanczosOptions::default())
}

pub fn lowest_eigenpairs_with<T: Real>(
    op: &SparseOperator<T>,
    k: usize,
    tol: T,
    opts: &LanczosOptions,
) -> Result<EigenSolution<T>, SolverError> {
    let dim = op.dim();
    if k == 0 || k > dim {
        return Err(SolverError::BadCount { requested: k, dim });
    }
    if !(tol > T::zero() && tol.is_finite()) {
        return Err(SolverError::BadTolerance);
    }
    let target = (k + opts.extra).min(dim);
    let max_krylov = opts.max_krylov.unwrap_or(usize::MAX);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut scratch = vec![T::zero(); dim];

    let mut values: Vec<T> = Vec::new();
    let mut vectors: Vec<Vec<T>> = Vec::new();
    let mut residuals: Vec<T> = Vec::new();
    let mut best = f64::INFINITY;
    let mut iterations = 0usize;

    // Gather `target` pairs, then keep confirming until the complement holds
    // nothing below the k-th locked value.
    loop {
        let confirming = values.len() >= target;
        let want = if confirming { 1 } else { target - values.len() };
        let kth = if confirming {
            let mut sorted = values.clone();
            sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
            Some(sorted[k - 1])
        } else {
            None
        };
        let outcome = match lanczos_run(op, &vectors, &mut rng, want, tol, max_krylov, kth)? {
            Some(o) => o,
            None => break,
        };
        iterations += outcome.iterations;

        let mut locked_any = false;
        for pair in outcome.pairs {
            if let Some(kth) = kth {
                if pair.value >= kth - tol {
                    return Ok(finish(values, vectors, residuals, k, iterations));
                }
            }
            op.apply_into(&pair.vector, &mut scratch);
            let energy = dot(&pair.vector, &scratch);
            let r = residual(op, &pair.vector, energy, &mut scratch);
            best = best.min(r.to_f64_lossy()).min(pair.estimate.to_f64_lossy());
            if r > tol {
                break;
            }
            values.push(energy);
            vectors.push(pair.vector);
            residuals.push(r);
            locked_any = true;
        }
        if !locked_any {
            return Err(SolverError::NotConverged { iterations, best_residual: best });
        }
    }

    if values.len() < k {
        return Err(SolverError::NotConverged { iterations, best_residual: best });
    }
    Ok(finish(values, vectors, residuals, k, iterations))
}

fn finish<T: Real>(
    values: Vec<T>,
    vectors: Vec<Vec<T>>,
    residuals: Vec<T>,
    k: usize,
    iterations: usize,
) -> EigenSolution<T> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
    order.truncate(k);
    let mut vectors_out = Vec::with_capacity(k);
    for &i in &order {
        let mut v = vectors[i].clone();
        fix_sign(&mut v);
        vectors_out.push(v);
    }
    EigenSolution {
        energies: order.iter().map(|&i| values[i]).collect(),
        vectors: vectors_out,
        residuals: order.iter().map(|&i| residuals[i]).collect(),
        iterations,
    }
}

/// Full spectrum from a dense symmetric solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpectrum<T> {
    pub values: Vec<T>,
    pub vectors: Vec<Vec<T>>,
}

pub const DENSE_CAP: usize = 4000;

/// Dense oracle with the default dimension cap.
pub fn dense_oracle<T: Real>(op: &SparseOperator<T>) -> Result<DenseSpectrum<T>, SolverError> {
    dense_oracle_capped(op, DENSE_CAP)
}

/// Diagonalizes the dense copy of `op` in `f64` and converts back.
pub fn dense_oracle_capped<T: Real>(op: &SparseOperator<T>, cap: usize) -> Result<DenseSpectrum<T>, SolverError> {
    let dim = op.dim();
    if dim > cap {
        return Err(SolverError::TooLarge { dim, cap });
    }
    let mut a = DMatrix::<f64>::zeros(dim, dim);
    for (r, c, v) in op.entries() {
        a[(r, c)] = v.to_f64_lossy();
    }
    let eig = SymmetricEigen::new(a);
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&x, &y| eig.eigenvalues[x].partial_cmp(&eig.eigenvalues[y]).unwrap());
    let values = order.iter().map(|&i| T::of(eig.eigenvalues[i])).collect();
    let vectors = order
        .iter()
        .map(|&i| {
            let mut v: Vec<T> = eig.eigenvectors.column(i).iter().map(|&x| T::of(x)).collect();
            fix_sign(&mut v);
            v
        })
        .collect();
    Ok(DenseSpectrum { values, vectors })
}
