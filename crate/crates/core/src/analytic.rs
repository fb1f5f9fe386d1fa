//! Closed-form results for the hopping-free chain.
//!
//! With `J = 0` and no trap, the only coupling that moves atoms between
//! internal states sits on the driven site. When `n` atoms occupy that site
//! and every other site holds at most one, the lowest energy is
//!
//! ```text
//! E_n(Omega) = Delta n / 2 - (n / 2) sqrt(Delta^2 + 4 Omega^2) + U n (n - 1) / 2
//! ```
//!
//! Index convention: `omega_star(n)` is the drive at which the `n` and
//! `n + 1` branches cross, i.e. where the `(n + 1)`-th atom moves onto the
//! driven site.

use thiserror::Error;

use crate::scalar::Real;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticError {
    #[error("threshold index must be at least 1")]
    ZeroIndex,
    #[error("interaction must be positive, got {0}")]
    NonPositiveInteraction(f64),
    #[error("threshold n={n} has negative radicand {radicand}")]
    NegativeRadicand { n: usize, radicand: f64 },
}

/// Drive strength at which the ground state takes its `(n + 1)`-th atom:
/// `sqrt((2 U n + Delta)^2 - Delta^2) / 2`.
pub fn omega_star<T: Real>(n: usize, interaction: T, detuning: T) -> Result<T, AnalyticError> {
    if n == 0 {
        return Err(AnalyticError::ZeroIndex);
    }
    if !(interaction > T::zero()) {
        return Err(AnalyticError::NonPositiveInteraction(interaction.to_f64_lossy()));
    }
    let a = T::of(2.0) * interaction * T::of_usize(n) + detuning;
    let radicand = a * a - detuning * detuning;
    if radicand < T::zero() {
        return Err(AnalyticError::NegativeRadicand { n, radicand: radicand.to_f64_lossy() });
    }
    Ok(radicand.sqrt() / T::of(2.0))
}

/// Energy of the branch with `n` atoms localized on the driven site.
pub fn ground_energy_localized<T: Real>(n: usize, interaction: T, detuning: T, omega: T) -> T {
    let nn = T::of_usize(n);
    let half = T::of(0.5);
    let dressed = (detuning * detuning + T::of(4.0) * omega * omega).sqrt();
    half * detuning * nn - half * nn * dressed + half * interaction * nn * T::of_usize(n.saturating_sub(1))
}

/// Lowest branch energy over `n = 0..=atoms`, with the minimizing `n`.
pub fn lowest_branch<T: Real>(atoms: usize, interaction: T, detuning: T, omega: T) -> (usize, T) {
    (0..=atoms)
        .map(|n| (n, ground_energy_localized(n, interaction, detuning, omega)))
        .fold((0, T::infinity()), |best, cur| if cur.1 < best.1 { cur } else { best })
}

/// Thresholds `Omega*_1 .. Omega*_{N-1}` for one parameter set.
#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSet<T> {
    pub interaction: T,
    pub detuning: T,
    pub thresholds: Vec<T>,
}

impl<T: Real> ThresholdSet<T> {
    pub fn new(atoms: usize, interaction: T, detuning: T) -> Result<Self, AnalyticError> {
        let thresholds = (1..atoms)
            .map(|n| omega_star(n, interaction, detuning))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { interaction, detuning, thresholds })
    }

    /// Threshold `Omega*_n` for 1-based `n`.
    pub fn get(&self, n: usize) -> Option<T> {
        n.checked_sub(1).and_then(|i| self.thresholds.get(i).copied())
    }
}
