//! Schrödinger evolution under a linear drive ramp `Omega(t) = Omega_0 + v t`
//! on the last site.
//!
//! `H(t) = H_static + Omega(t) H_drive` where `H_static` carries every
//! coupling of the parameter set (including any initial drive) and
//! `H_drive` is the unit-strength `e^dag g + h.c.` coupling on site M. Each
//! step applies the Krylov exponential of the midpoint Hamiltonian
//! `H(t + dt/2)`. The step is bounded by `dt_max` and by a budget on
//! `||H(t)|| dt`; a step whose Krylov error estimate stays above tolerance
//! at full Krylov dimension is retried at half the size.

use std::sync::Arc;

use thiserror::Error;

use crate::basis::BasisTable;
use crate::eigensolver::{lowest_eigenpairs, SolverError};
use crate::hamiltonian::{build_hamiltonian, drive_operator, Boundary, ModelParams, OperatorError, SparseOperator};
use crate::observables::{self, ObservableError, StateVector};
use crate::scalar::{Complex, Real};
use crate::tridiag::tridiag_eigen;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DynamicsError {
    #[error("invalid ramp: {0}")]
    InvalidRamp(&'static str),
    #[error("step size fell to {dt:e} at t = {t}")]
    StepUnderflow { t: f64, dt: f64 },
    #[error("initial state belongs to a different basis")]
    BasisMismatch,
    #[error(transparent)]
    Operator(#[from] OperatorError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// Linear ramp and integrator controls. Times are in units of `1/J`.
#[derive(Debug, Clone, PartialEq)]
pub struct RampSchedule<T> {
    /// Ramp rate `v`; zero freezes the Hamiltonian.
    pub rate: T,
    pub t_final: T,
    pub dt_max: T,
    /// Upper bound on `||H(t)|| dt` per step.
    pub norm_budget: T,
    pub krylov_dim: usize,
    /// Local error target of one Krylov exponential.
    pub krylov_tol: T,
    /// Spacing of recorded samples; `t = 0` and `t_final` are always kept.
    pub sample_interval: T,
}

impl<T: Real> RampSchedule<T> {
    pub fn new(rate: T, t_final: T, dt_max: T) -> Result<Self, DynamicsError> {
        let ramp = Self {
            rate,
            t_final,
            dt_max,
            norm_budget: T::of(0.5),
            krylov_dim: 16,
            krylov_tol: T::of(1e-12).max(T::epsilon() * T::of(10.0)),
            sample_interval: t_final / T::of(200.0),
        };
        ramp.validate()?;
        Ok(ramp)
    }

    /// Ends the ramp when the drive reaches `1.2 * Omega*_{N-1}`.
    pub fn to_full_transport(rate: T, atoms: usize, interaction: T, detuning: T, dt_max: T) -> Result<Self, DynamicsError> {
        let last = crate::analytic::omega_star(atoms.max(2) - 1, interaction, detuning)
            .map_err(|_| DynamicsError::InvalidRamp("no transport threshold for these parameters"))?;
        if !(rate > T::zero()) {
            return Err(DynamicsError::InvalidRamp("rate must be positive to reach a threshold"));
        }
        Self::new(rate, T::of(1.2) * last / rate, dt_max)
    }

    pub fn with_samples(mut self, interval: T) -> Self {
        self.sample_interval = interval;
        self
    }

    pub fn validate(&self) -> Result<(), DynamicsError> {
        if !(self.rate >= T::zero() && self.rate.is_finite()) {
            return Err(DynamicsError::InvalidRamp("rate must be finite and non-negative"));
        }
        if !(self.t_final > T::zero() && self.t_final.is_finite()) {
            return Err(DynamicsError::InvalidRamp("t_final must be positive"));
        }
        if !(self.dt_max > T::zero()) {
            return Err(DynamicsError::InvalidRamp("dt_max must be positive"));
        }
        if !(self.norm_budget > T::zero()) {
            return Err(DynamicsError::InvalidRamp("norm budget must be positive"));
        }
        if self.krylov_dim < 2 {
            return Err(DynamicsError::InvalidRamp("Krylov dimension must be at least 2"));
        }
        if !(self.sample_interval > T::zero()) {
            return Err(DynamicsError::InvalidRamp("sample interval must be positive"));
        }
        Ok(())
    }
}

/// Quantities that can be recorded along a trajectory. Sites are 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Observable {
    Occupation(usize),
    OccupationExcited(usize),
    OccupationGround(usize),
    ParityCorrelation(usize),
    Entropy(usize),
    Energy,
    Norm,
}

impl Observable {
    pub fn label(&self) -> String {
        match self {
            Self::Occupation(i) => format!("n_{i}"),
            Self::OccupationExcited(i) => format!("n_e_{i}"),
            Self::OccupationGround(i) => format!("n_g_{i}"),
            Self::ParityCorrelation(d) => format!("C_{d}"),
            Self::Entropy(l) => format!("S_{l}"),
            Self::Energy => "energy".into(),
            Self::Norm => "norm".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimeSeries<T> {
    pub observables: Vec<Observable>,
    pub times: Vec<T>,
    /// Drive strength on site M at each sample.
    pub drive: Vec<T>,
    /// `values[s][o]`: observable `o` at sample `s`.
    pub values: Vec<Vec<T>>,
    pub steps: usize,
    pub final_state: StateVector<T>,
}

impl<T: Real> TimeSeries<T> {
    pub fn column(&self, obs: Observable) -> Option<Vec<T>> {
        let o = self.observables.iter().position(|&x| x == obs)?;
        Some(self.values.iter().map(|row| row[o]).collect())
    }

    pub fn last(&self, obs: Observable) -> Option<T> {
        self.column(obs).and_then(|c| c.last().copied())
    }
}

/// The time-dependent Hamiltonian split into its static and ramped parts.
pub struct RampedHamiltonian<T> {
    pub static_part: SparseOperator<T>,
    pub drive_part: SparseOperator<T>,
    /// Drive strength on site M already contained in `static_part`.
    pub offset: T,
    static_norm: T,
    drive_norm: T,
}

impl<T: Real> RampedHamiltonian<T> {
    pub fn new(params: &ModelParams<T>, basis: &BasisTable, boundary: Boundary) -> Result<Self, DynamicsError> {
        let static_part = build_hamiltonian(params, basis, boundary)?;
        let drive_part = drive_operator(basis, basis.sites())?;
        Ok(Self {
            static_norm: static_part.norm_bound(),
            drive_norm: drive_part.norm_bound(),
            offset: params.omega[basis.sites() - 1],
            static_part,
            drive_part,
        })
    }

    /// `y = (H_static + extra * H_drive) x`
    fn apply(&self, extra: T, x: &[Complex<T>], y: &mut [Complex<T>], scratch: &mut [Complex<T>]) {
        self.static_part.apply_complex_into(x, y);
        if extra != T::zero() {
            self.drive_part.apply_complex_into(x, scratch);
            for (a, b) in y.iter_mut().zip(scratch.iter()) {
                *a = *a + *b * extra;
            }
        }
    }

    fn norm_bound(&self, extra: T) -> T {
        self.static_norm + extra.abs() * self.drive_norm
    }

    /// `<x| H_static + extra H_drive |x>`
    pub fn energy(&self, extra: T, x: &[Complex<T>]) -> T {
        let mut y = vec![Complex::new(T::zero(), T::zero()); x.len()];
        let mut s = y.clone();
        self.apply(extra, x, &mut y, &mut s);
        cdot(x, &y).re
    }
}

fn cdot<T: Real>(a: &[Complex<T>], b: &[Complex<T>]) -> Complex<T> {
    a.iter().zip(b).fold(Complex::new(T::zero(), T::zero()), |acc, (x, y)| acc + x.conj() * y)
}

fn cnorm<T: Real>(a: &[Complex<T>]) -> T {
    a.iter().map(|x| x.norm_sqr()).sum::<T>().sqrt()
}

enum KrylovStep<T> {
    Done(Vec<Complex<T>>),
    Unconverged,
}

/// `exp(-i dt H) psi` by a Lanczos projection of at most `max_dim` vectors.
fn krylov_exp<T: Real>(
    ham: &RampedHamiltonian<T>,
    extra: T,
    psi: &[Complex<T>],
    dt: T,
    max_dim: usize,
    tol: T,
) -> Result<KrylovStep<T>, DynamicsError> {
    let dim = psi.len();
    let zero = Complex::new(T::zero(), T::zero());
    let psi_norm = cnorm(psi);
    let mut basis: Vec<Vec<Complex<T>>> = vec![psi.iter().map(|&a| a / psi_norm).collect()];
    let mut alpha: Vec<T> = Vec::new();
    let mut beta: Vec<T> = Vec::new();
    let mut w = vec![zero; dim];
    let mut scratch = vec![zero; dim];
    let max_dim = max_dim.min(dim);

    loop {
        let j = basis.len() - 1;
        ham.apply(extra, &basis[j], &mut w, &mut scratch);
        let a = cdot(&basis[j], &w).re;
        alpha.push(a);
        for (wi, qi) in w.iter_mut().zip(&basis[j]) {
            *wi = *wi - *qi * a;
        }
        if j > 0 {
            let b = beta[j - 1];
            for (wi, qi) in w.iter_mut().zip(&basis[j - 1]) {
                *wi = *wi - *qi * b;
            }
        }
        for q in &basis {
            let c = cdot(q, &w);
            for (wi, qi) in w.iter_mut().zip(q) {
                *wi = *wi - *qi * c;
            }
        }
        let b = cnorm(&w);
        let size = j + 1;

        let all: Vec<usize> = (0..size).collect();
        let eig = tridiag_eigen(&alpha, &beta, &all).ok_or(SolverError::Tridiagonal)?;
        // coefficients of exp(-i dt T) e_0 in the Krylov basis
        let coeffs: Vec<Complex<T>> = (0..size)
            .map(|r| {
                (0..size).fold(zero, |acc, i| {
                    let phase = Complex::new(T::zero(), -dt * eig.values[i]).exp();
                    acc + phase * (eig.rows[r][i] * eig.rows[0][i])
                })
            })
            .collect();
        let scale = alpha.iter().chain(&beta).fold(T::one(), |m, x| m.max(x.abs()));
        let invariant = b <= T::epsilon() * scale * T::of(16.0);
        let error = b * coeffs[size - 1].norm();

        if invariant || error <= tol {
            let mut out = vec![zero; dim];
            for (q, c) in basis.iter().zip(&coeffs) {
                let c = *c * psi_norm;
                for (o, qi) in out.iter_mut().zip(q) {
                    *o = *o + *qi * c;
                }
            }
            return Ok(KrylovStep::Done(out));
        }
        if size == max_dim {
            return Ok(KrylovStep::Unconverged);
        }
        beta.push(b);
        basis.push(w.iter().map(|&x| x / b).collect());
    }
}

fn measure<T: Real>(
    ham: &RampedHamiltonian<T>,
    extra: T,
    state: &StateVector<T>,
    record: &[Observable],
) -> Result<Vec<T>, DynamicsError> {
    record
        .iter()
        .map(|obs| {
            Ok(match *obs {
                Observable::Occupation(i) => observables::site_occupation(state, i)?.total,
                Observable::OccupationExcited(i) => observables::site_occupation(state, i)?.excited,
                Observable::OccupationGround(i) => observables::site_occupation(state, i)?.ground,
                Observable::ParityCorrelation(d) => observables::parity_correlation(state, d)?,
                Observable::Entropy(l) => {
                    observables::entanglement_entropy(&observables::schmidt_spectrum(state, l)?)
                }
                Observable::Energy => ham.energy(extra, state.amplitudes()),
                Observable::Norm => state.norm(),
            })
        })
        .collect()
}

/// Propagates `psi0` over the ramp and samples `record` along the way.
pub fn evolve<T: Real>(
    params: &ModelParams<T>,
    basis: &Arc<BasisTable>,
    boundary: Boundary,
    ramp: &RampSchedule<T>,
    psi0: &StateVector<T>,
    record: &[Observable],
) -> Result<TimeSeries<T>, DynamicsError> {
    ramp.validate()?;
    if psi0.basis().as_ref() != basis.as_ref() {
        return Err(DynamicsError::BasisMismatch);
    }
    let ham = RampedHamiltonian::new(params, basis, boundary)?;
    let mut psi: Vec<Complex<T>> = psi0.amplitudes().to_vec();
    let mut t = T::zero();
    let mut steps = 0usize;
    let half = T::of(0.5);
    let dt_floor = T::epsilon() * T::of(64.0) * ramp.t_final;

    let mut times = vec![t];
    let mut drive = vec![ham.offset];
    let mut values = vec![measure(&ham, T::zero(), psi0, record)?];
    // sample times are k * interval, computed fresh to avoid drift
    let sample_time = |k: usize| {
        let s = T::of_usize(k) * ramp.sample_interval;
        if ramp.t_final - s <= dt_floor.max(ramp.sample_interval * T::of(1e-9)) {
            ramp.t_final
        } else {
            s
        }
    };
    let mut sample_index = 1usize;
    let mut next_sample = sample_time(sample_index);

    while t < ramp.t_final {
        let mut dt = ramp.dt_max.min(next_sample - t);
        loop {
            let extra_end = ramp.rate * (t + dt);
            dt = dt.min(ramp.norm_budget / ham.norm_bound(extra_end).max(T::min_positive_value()));
            if dt < dt_floor {
                return Err(DynamicsError::StepUnderflow { t: t.to_f64_lossy(), dt: dt.to_f64_lossy() });
            }
            let extra_mid = ramp.rate * (t + half * dt);
            match krylov_exp(&ham, extra_mid, &psi, dt, ramp.krylov_dim, ramp.krylov_tol)? {
                KrylovStep::Done(next) => {
                    psi = next;
                    break;
                }
                KrylovStep::Unconverged => dt = dt * half,
            }
        }
        t = if next_sample - (t + dt) <= dt_floor { next_sample } else { t + dt };
        steps += 1;

        if t >= next_sample {
            let extra = ramp.rate * t;
            let state = StateVector::from_parts(basis.clone(), psi.clone());
            times.push(t);
            drive.push(ham.offset + extra);
            values.push(measure(&ham, extra, &state, record)?);
            sample_index += 1;
            next_sample = sample_time(sample_index);
        }
    }

    Ok(TimeSeries {
        observables: record.to_vec(),
        times,
        drive,
        values,
        steps,
        final_state: StateVector::from_parts(basis.clone(), psi),
    })
}

/// Ground state of `H_static + lift * H_drive`.
///
/// With `lift = 0` this is the undriven ground state; a small positive
/// `lift` selects, inside a degenerate ground level, the member that the
/// drive connects to as it is switched on.
pub fn initial_ground_state<T: Real>(
    params: &ModelParams<T>,
    basis: &Arc<BasisTable>,
    boundary: Boundary,
    lift: T,
    tol: T,
) -> Result<StateVector<T>, DynamicsError> {
    let mut p = params.clone();
    let m = basis.sites();
    p.omega[m - 1] = p.omega[m - 1] + lift;
    let h = build_hamiltonian(&p, basis, boundary)?;
    let sol = lowest_eigenpairs(&h, 1, tol)?;
    Ok(StateVector::from_real(basis.clone(), &sol.vectors[0])?)
}
