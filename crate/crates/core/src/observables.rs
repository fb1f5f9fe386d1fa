//! Measured quantities of a state: occupations, parity correlations,
//! Schmidt spectrum and entanglement entropy, and the spectral gap.
//!
//! Site labels are 1-based. Parity uses the total occupation of a site,
//! summed over both internal states.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::basis::{BasisTable, Occupation};
use crate::eigensolver::EigenSolution;
use crate::scalar::{Complex, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ObservableError {
    #[error("site {site} out of range 1..={sites}")]
    SiteOutOfRange { site: usize, sites: usize },
    #[error("distance {distance} out of range 1..={max}")]
    DistanceOutOfRange { distance: usize, max: usize },
    #[error("cut {cut} out of range 1..={max}")]
    CutOutOfRange { cut: usize, max: usize },
    #[error("amplitude vector has length {got}, basis has {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("state norm {0} is not 1")]
    NotNormalized(f64),
    #[error("state has zero norm")]
    ZeroNorm,
    #[error("need at least two eigenpairs for a gap, got {0}")]
    TooFewEigenpairs(usize),
}

/// Normalized complex amplitudes over a basis table.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector<T> {
    amplitudes: Vec<Complex<T>>,
    basis: Arc<BasisTable>,
}

fn norm_tolerance<T: Real>() -> T {
    T::of(1e-10).max(T::epsilon() * T::of(100.0))
}

impl<T: Real> StateVector<T> {
    /// Wraps amplitudes that are already normalized.
    pub fn new(basis: Arc<BasisTable>, amplitudes: Vec<Complex<T>>) -> Result<Self, ObservableError> {
        if amplitudes.len() != basis.dim() {
            return Err(ObservableError::LengthMismatch { expected: basis.dim(), got: amplitudes.len() });
        }
        let n = amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if (n - T::one()).abs() > norm_tolerance::<T>() {
            return Err(ObservableError::NotNormalized(n.to_f64_lossy()));
        }
        Ok(Self { amplitudes, basis })
    }

    /// Rescales `amplitudes` to unit norm.
    pub fn normalized(basis: Arc<BasisTable>, mut amplitudes: Vec<Complex<T>>) -> Result<Self, ObservableError> {
        if amplitudes.len() != basis.dim() {
            return Err(ObservableError::LengthMismatch { expected: basis.dim(), got: amplitudes.len() });
        }
        let n = amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt();
        if n == T::zero() || !n.is_finite() {
            return Err(ObservableError::ZeroNorm);
        }
        amplitudes.iter_mut().for_each(|a| *a = *a / n);
        Ok(Self { amplitudes, basis })
    }

    pub fn from_real(basis: Arc<BasisTable>, amplitudes: &[T]) -> Result<Self, ObservableError> {
        Self::normalized(basis, amplitudes.iter().map(|&x| Complex::new(x, T::zero())).collect())
    }

    /// The Fock state at `index`.
    pub fn basis_state(basis: Arc<BasisTable>, index: usize) -> Self {
        let mut amps = vec![Complex::new(T::zero(), T::zero()); basis.dim()];
        amps[index] = Complex::new(T::one(), T::zero());
        Self { amplitudes: amps, basis }
    }

    /// Skips the norm check; for propagators that preserve the norm.
    pub(crate) fn from_parts(basis: Arc<BasisTable>, amplitudes: Vec<Complex<T>>) -> Self {
        debug_assert_eq!(amplitudes.len(), basis.dim());
        Self { amplitudes, basis }
    }

    pub fn into_amplitudes(self) -> Vec<Complex<T>> {
        self.amplitudes
    }

    pub fn amplitudes(&self) -> &[Complex<T>] {
        &self.amplitudes
    }

    pub fn basis(&self) -> &Arc<BasisTable> {
        &self.basis
    }

    pub fn norm(&self) -> T {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum::<T>().sqrt()
    }

    fn probabilities(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.amplitudes.iter().enumerate().map(|(k, a)| (k, a.norm_sqr()))
    }

    fn check_site(&self, site: usize) -> Result<usize, ObservableError> {
        let sites = self.basis.sites();
        if site == 0 || site > sites {
            return Err(ObservableError::SiteOutOfRange { site, sites });
        }
        Ok(site - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SiteOccupation<T> {
    pub excited: T,
    pub ground: T,
    pub total: T,
}

/// `<n^e_i>`, `<n^g_i>` and their sum on 1-based site `site`.
pub fn site_occupation<T: Real>(psi: &StateVector<T>, site: usize) -> Result<SiteOccupation<T>, ObservableError> {
    let i = psi.check_site(site)?;
    let basis = &psi.basis;
    let (mut ne, mut ng) = (T::zero(), T::zero());
    for (k, p) in psi.probabilities() {
        ne = ne + p * T::of_usize(basis.occ_e(k)[i] as usize);
        ng = ng + p * T::of_usize(basis.occ_g(k)[i] as usize);
    }
    Ok(SiteOccupation { excited: ne, ground: ng, total: ne + ng })
}

fn parity_sign<T: Real>(basis: &BasisTable, k: usize, i: usize) -> T {
    let n = basis.occ_e(k)[i] as usize + basis.occ_g(k)[i] as usize;
    if n.is_multiple_of(2) {
        T::one()
    } else {
        -T::one()
    }
}

/// `<exp(i pi n_site)>` on 1-based `site`.
pub fn parity<T: Real>(psi: &StateVector<T>, site: usize) -> Result<T, ObservableError> {
    let i = psi.check_site(site)?;
    Ok(psi.probabilities().map(|(k, p)| p * parity_sign::<T>(&psi.basis, k, i)).sum())
}

/// `C(d) = |<s_M s_{M-d}> - <s_M><s_{M-d}>|` between the driven end and the
/// site `d` steps away from it.
pub fn parity_correlation<T: Real>(psi: &StateVector<T>, distance: usize) -> Result<T, ObservableError> {
    let m = psi.basis.sites();
    if distance == 0 || distance + 1 > m {
        return Err(ObservableError::DistanceOutOfRange { distance, max: m.saturating_sub(1) });
    }
    let (a, b) = (m - 1, m - 1 - distance);
    let (mut sa, mut sb, mut sab) = (T::zero(), T::zero(), T::zero());
    for (k, p) in psi.probabilities() {
        let pa = parity_sign::<T>(&psi.basis, k, a);
        let pb = parity_sign::<T>(&psi.basis, k, b);
        sa = sa + p * pa;
        sb = sb + p * pb;
        sab = sab + p * pa * pb;
    }
    Ok((sab - sa * sb).abs())
}

/// Schmidt coefficients across the cut that leaves the last `cut` sites in
/// the right part.
#[derive(Debug, Clone, PartialEq)]
pub struct SchmidtSpectrum<T> {
    pub cut: usize,
    /// Descending, non-negative, squares summing to one.
    pub coefficients: Vec<T>,
    /// Number of distinct occupation patterns seen on each side.
    pub left_patterns: usize,
    pub right_patterns: usize,
}

/// Singular values below this are treated as exact zeros.
pub const SCHMIDT_FLOOR: f64 = 1e-12;

/// Which side's patterns index the rows of the coefficient matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Grouping {
    LeftRows,
    RightRows,
}

pub fn schmidt_spectrum<T: Real>(psi: &StateVector<T>, cut: usize) -> Result<SchmidtSpectrum<T>, ObservableError> {
    schmidt_spectrum_grouped(psi, cut, Grouping::LeftRows)
}

/// Schmidt decomposition by SVD of the coefficient matrix, one block per
/// atom number in the right part (the state has fixed total N, so blocks
/// with different right-part atom numbers never mix).
pub fn schmidt_spectrum_grouped<T: Real>(
    psi: &StateVector<T>,
    cut: usize,
    grouping: Grouping,
) -> Result<SchmidtSpectrum<T>, ObservableError> {
    let m = psi.basis.sites();
    if cut == 0 || cut + 1 > m {
        return Err(ObservableError::CutOutOfRange { cut, max: m.saturating_sub(1) });
    }
    let split = m - cut;
    let basis = &psi.basis;

    type Pattern = Vec<Occupation>;
    // left index, right index, amplitude entries for one right-part atom number
    type Block = (HashMap<Pattern, usize>, HashMap<Pattern, usize>, Vec<(usize, usize, Complex<f64>)>);
    let mut blocks: Vec<Block> =
        (0..=basis.atoms()).map(|_| Default::default()).collect();
    let mut left_all: HashMap<Pattern, ()> = HashMap::new();
    let mut right_all: HashMap<Pattern, ()> = HashMap::new();

    for k in 0..basis.dim() {
        let (e, g) = (basis.occ_e(k), basis.occ_g(k));
        let left: Pattern = e[..split].iter().chain(&g[..split]).copied().collect();
        let right: Pattern = e[split..].iter().chain(&g[split..]).copied().collect();
        let n_right: usize = right.iter().map(|&x| x as usize).sum();
        left_all.entry(left.clone()).or_default();
        right_all.entry(right.clone()).or_default();
        let a = psi.amplitudes[k];
        let (lmap, rmap, entries) = &mut blocks[n_right];
        let next = lmap.len();
        let li = *lmap.entry(left).or_insert(next);
        let next = rmap.len();
        let ri = *rmap.entry(right).or_insert(next);
        if a.norm_sqr() > T::zero() {
            entries.push((li, ri, Complex::new(a.re.to_f64_lossy(), a.im.to_f64_lossy())));
        }
    }

    let mut coefficients: Vec<f64> = Vec::new();
    for (lmap, rmap, entries) in blocks {
        if entries.is_empty() {
            continue;
        }
        let (rows, cols) = match grouping {
            Grouping::LeftRows => (lmap.len(), rmap.len()),
            Grouping::RightRows => (rmap.len(), lmap.len()),
        };
        let mut mat = DMatrix::<Complex<f64>>::zeros(rows, cols);
        for (li, ri, a) in entries {
            match grouping {
                Grouping::LeftRows => mat[(li, ri)] = a,
                Grouping::RightRows => mat[(ri, li)] = a,
            }
        }
        coefficients.extend(mat.singular_values().iter().copied());
    }
    coefficients.retain(|&s| s >= SCHMIDT_FLOOR);
    coefficients.sort_by(|a, b| b.partial_cmp(a).unwrap());

    Ok(SchmidtSpectrum {
        cut,
        coefficients: coefficients.into_iter().map(T::of).collect(),
        left_patterns: left_all.len(),
        right_patterns: right_all.len(),
    })
}

impl<T: Real> SchmidtSpectrum<T> {
    pub fn weight(&self) -> T {
        self.coefficients.iter().map(|&c| c * c).sum()
    }
}

/// Von Neumann entropy `-sum lambda^2 ln lambda^2` (natural log).
pub fn entanglement_entropy<T: Real>(spectrum: &SchmidtSpectrum<T>) -> T {
    let floor = T::of(SCHMIDT_FLOOR);
    let s: T = spectrum
        .coefficients
        .iter()
        .filter(|&&c| c >= floor)
        .map(|&c| {
            let p = c * c;
            -p * p.ln()
        })
        .sum();
    s.max(T::zero())
}

/// `E_1 - E_0`.
pub fn energy_gap<T: Real>(sol: &EigenSolution<T>) -> Result<T, ObservableError> {
    if sol.energies.len() < 2 {
        return Err(ObservableError::TooFewEigenpairs(sol.energies.len()));
    }
    Ok((sol.energies[1] - sol.energies[0]).max(T::zero()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::OccupationState;

    fn table(m: usize, n: usize) -> Arc<BasisTable> {
        Arc::new(BasisTable::enumerate(m, n).unwrap())
    }

    fn superpose(basis: &Arc<BasisTable>, terms: &[(OccupationState, f64)]) -> StateVector<f64> {
        let mut amps = vec![0.0; basis.dim()];
        for (s, a) in terms {
            amps[basis.rank(s).unwrap()] += a;
        }
        StateVector::from_real(basis.clone(), &amps).unwrap()
    }

    fn e_only(occ: &[u16]) -> OccupationState {
        OccupationState::new(occ.to_vec(), vec![0; occ.len()])
    }

    #[test]
    fn fock_state_occupations() {
        let b = table(2, 3);
        let s = OccupationState::new(vec![0, 0], vec![0, 3]);
        let psi = StateVector::<f64>::basis_state(b.clone(), b.rank(&s).unwrap());
        let o = site_occupation(&psi, 2).unwrap();
        assert_eq!((o.excited, o.ground, o.total), (0.0, 3.0, 3.0));
        assert_eq!(site_occupation(&psi, 1).unwrap().total, 0.0);
        assert!(matches!(site_occupation(&psi, 3), Err(ObservableError::SiteOutOfRange { .. })));
        assert!(matches!(site_occupation(&psi, 0), Err(ObservableError::SiteOutOfRange { .. })));
    }

    #[test]
    fn fock_states_have_no_parity_correlation() {
        let b = table(4, 4);
        for k in 0..b.dim() {
            let psi = StateVector::<f64>::basis_state(b.clone(), k);
            for d in 1..4 {
                assert_eq!(parity_correlation(&psi, d).unwrap(), 0.0);
            }
            let n4 = b.occ_e(k)[3] + b.occ_g(k)[3];
            assert_eq!(parity(&psi, 4).unwrap(), if n4.is_multiple_of(2) { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn two_site_superpositions() {
        // the closure below is the brute-force expectation over the listed
        // occupation patterns
        let b = table(2, 2);
        let psi = superpose(&b, &[(e_only(&[1, 1]), 1.0), (e_only(&[0, 2]), 1.0)]);
        let brute = |terms: &[([i32; 2], f64)]| {
            let s1: f64 = terms.iter().map(|(n, p)| p * (-1f64).powi(n[0])).sum();
            let s2: f64 = terms.iter().map(|(n, p)| p * (-1f64).powi(n[1])).sum();
            let s12: f64 = terms.iter().map(|(n, p)| p * (-1f64).powi(n[0] + n[1])).sum();
            (s12 - s1 * s2).abs()
        };
        let c = parity_correlation(&psi, 1).unwrap();
        assert!((c - brute(&[([1, 1], 0.5), ([0, 2], 0.5)])).abs() < 1e-15);
        assert!((c - 1.0).abs() < 1e-15);

        let psi = superpose(&b, &[(e_only(&[1, 1]), 1.0), (e_only(&[2, 0]), 1.0)]);
        let c = parity_correlation(&psi, 1).unwrap();
        assert!((c - brute(&[([1, 1], 0.5), ([2, 0], 0.5)])).abs() < 1e-15);

        let b3 = table(2, 3);
        let psi = superpose(
            &b3,
            &[(e_only(&[1, 2]), 0.6), (OccupationState::new(vec![0, 1], vec![0, 2]), 0.8)],
        );
        let c = parity_correlation(&psi, 1).unwrap();
        assert!((c - brute(&[([1, 2], 0.36), ([0, 3], 0.64)])).abs() < 1e-14);
    }

    #[test]
    fn distance_range() {
        let b = table(3, 3);
        let psi = StateVector::<f64>::basis_state(b, 0);
        assert!(parity_correlation(&psi, 0).is_err());
        assert!(parity_correlation(&psi, 3).is_err());
        assert!(parity_correlation(&psi, 2).is_ok());
    }

    #[test]
    fn product_state_spectrum() {
        let b = table(3, 3);
        let psi = StateVector::<f64>::basis_state(b, 7);
        let s = schmidt_spectrum(&psi, 1).unwrap();
        assert_eq!(s.coefficients.len(), 1);
        assert!((s.coefficients[0] - 1.0).abs() < 1e-14);
        assert_eq!(entanglement_entropy(&s), 0.0);
    }

    #[test]
    fn bell_like_state() {
        let b = table(2, 2);
        let psi = superpose(&b, &[(e_only(&[1, 1]), 1.0), (OccupationState::new(vec![0, 0], vec![1, 1]), 1.0)]);
        let s = schmidt_spectrum(&psi, 1).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(s.coefficients.len(), 2);
        assert!(s.coefficients.iter().all(|c| (c - h).abs() < 1e-14));
        assert!((entanglement_entropy(&s) - std::f64::consts::LN_2).abs() < 1e-14);
    }

    #[test]
    fn cut_range() {
        let b = table(3, 2);
        let psi = StateVector::<f64>::basis_state(b, 0);
        assert!(schmidt_spectrum(&psi, 0).is_err());
        assert!(schmidt_spectrum(&psi, 3).is_err());
    }

    #[test]
    fn gap_needs_two_levels() {
        let sol = EigenSolution { energies: vec![1.0], vectors: vec![vec![1.0]], residuals: vec![0.0], iterations: 0 };
        assert_eq!(energy_gap(&sol), Err(ObservableError::TooFewEigenpairs(1)));
        let sol = EigenSolution { energies: vec![-5.0, 5.0], vectors: vec![], residuals: vec![], iterations: 0 };
        assert_eq!(energy_gap(&sol).unwrap(), 10.0);
    }

    #[test]
    fn state_validation() {
        let b = table(1, 1);
        let bad = vec![Complex::new(1.0, 0.0), Complex::new(1.0, 0.0)];
        assert!(matches!(StateVector::new(b.clone(), bad), Err(ObservableError::NotNormalized(_))));
        assert!(matches!(StateVector::<f64>::from_real(b.clone(), &[0.0, 0.0]), Err(ObservableError::ZeroNorm)));
        assert!(matches!(StateVector::<f64>::from_real(b, &[1.0]), Err(ObservableError::LengthMismatch { .. })));
    }
}
