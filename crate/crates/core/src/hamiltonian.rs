//! Sparse matrix of the driven two-component Bose-Hubbard chain.
//!
//! The operator is the sum of the lattice part (hopping, on-site and
//! inter-component interaction, site energies) and the laser part
//! (detuning on `|e>`, on-site `e^dag g + h.c.` coupling). All couplings are
//! real, so the matrix is real symmetric and stored in CSR form.
//!
//! Site labels in the public API are 1-based: site `M` is the driven end.

use rayon::prelude::*;
use thiserror::Error;

use crate::basis::{BasisTable, Occupation};
use crate::scalar::{Complex, Real};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OperatorError {
    #[error("vector of length {got} does not match operator dimension {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("{field} has length {got}, expected one entry per site ({expected})")]
    SiteArrayLength { field: &'static str, expected: usize, got: usize },
    #[error("parameter {0} is not finite")]
    NonFinite(&'static str),
    #[error("site {site} out of range 1..={sites}")]
    SiteOutOfRange { site: usize, sites: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    #[default]
    Open,
    /// Adds the bond `(M, 1)`. For `M <= 2` the wrap bond coincides with an
    /// existing one and is not added twice.
    Periodic,
}

impl std::str::FromStr for Boundary {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "open" => Ok(Self::Open),
            "periodic" => Ok(Self::Periodic),
            other => Err(format!("unknown boundary '{other}', expected open|periodic")),
        }
    }
}

impl std::fmt::Display for Boundary {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Open => "open",
            Self::Periodic => "periodic",
        })
    }
}

/// Couplings of the lattice and of the laser drive, in units of `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams<T> {
    pub hop_e: T,
    pub hop_g: T,
    pub u_e: T,
    pub u_g: T,
    pub u_eg: T,
    pub eps_e: Vec<T>,
    pub eps_g: Vec<T>,
    pub detuning: T,
    pub omega: Vec<T>,
}

impl<T: Real> ModelParams<T> {
    /// Equal hopping and equal interactions for both components, no trap,
    /// no drive.
    pub fn symmetric(sites: usize, hopping: T, interaction: T) -> Self {
        Self {
            hop_e: hopping,
            hop_g: hopping,
            u_e: interaction,
            u_g: interaction,
            u_eg: interaction,
            eps_e: vec![T::zero(); sites],
            eps_g: vec![T::zero(); sites],
            detuning: T::zero(),
            omega: vec![T::zero(); sites],
        }
    }

    /// All couplings zero on `sites` sites.
    pub fn zero(sites: usize) -> Self {
        Self::symmetric(sites, T::zero(), T::zero())
    }

    pub fn sites(&self) -> usize {
        self.omega.len()
    }

    pub fn with_detuning(mut self, detuning: T) -> Self {
        self.detuning = detuning;
        self
    }

    /// Harmonic site energies `(i - c)^2 * strength` with `c = (M + 1) / 2`,
    /// identical for both components.
    pub fn with_harmonic_trap(mut self, strength: T) -> Self {
        let m = self.sites();
        let center = T::of_usize(m + 1) / T::of(2.0);
        let profile: Vec<T> = (1..=m)
            .map(|i| {
                let x = T::of_usize(i) - center;
                x * x * strength
            })
            .collect();
        self.eps_e = profile.clone();
        self.eps_g = profile;
        self
    }

    /// Drive of strength `omega` on the last site only.
    pub fn with_end_drive(mut self, omega: T) -> Self {
        let m = self.sites();
        self.omega = vec![T::zero(); m];
        if m > 0 {
            self.omega[m - 1] = omega;
        }
        self
    }

    /// Checks array lengths against `sites` and that every value is finite.
    pub fn validate(&self, sites: usize) -> Result<(), OperatorError> {
        for (field, arr) in [("eps_e", &self.eps_e), ("eps_g", &self.eps_g), ("omega", &self.omega)] {
            if arr.len() != sites {
                return Err(OperatorError::SiteArrayLength { field, expected: sites, got: arr.len() });
            }
            if arr.iter().any(|v| !v.is_finite()) {
                return Err(OperatorError::NonFinite(field));
            }
        }
        for (field, v) in [
            ("hop_e", self.hop_e),
            ("hop_g", self.hop_g),
            ("u_e", self.u_e),
            ("u_g", self.u_g),
            ("u_eg", self.u_eg),
            ("detuning", self.detuning),
        ] {
            if !v.is_finite() {
                return Err(OperatorError::NonFinite(field));
            }
        }
        Ok(())
    }
}

/// Real symmetric operator in compressed sparse row form.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseOperator<T> {
    dim: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<T>,
}

impl<T: Real> SparseOperator<T> {
    /// Builds from per-row `(column, value)` lists. Duplicate columns within a
    /// row are summed and exact zeros dropped.
    pub fn from_rows(dim: usize, rows: Vec<Vec<(usize, T)>>) -> Self {
        assert_eq!(rows.len(), dim);
        let mut row_ptr = Vec::with_capacity(dim + 1);
        let mut cols = Vec::new();
        let mut vals = Vec::new();
        row_ptr.push(0);
        for mut row in rows {
            row.sort_by_key(|&(c, _)| c);
            let mut iter = row.into_iter().peekable();
            while let Some((c, mut v)) = iter.next() {
                while let Some(&(c2, v2)) = iter.peek() {
                    if c2 != c {
                        break;
                    }
                    v = v + v2;
                    iter.next();
                }
                if v != T::zero() {
                    assert!(c < dim, "column {c} out of range");
                    cols.push(c);
                    vals.push(v);
                }
            }
            row_ptr.push(cols.len());
        }
        Self { dim, row_ptr, cols, vals }
    }

    pub fn zeros(dim: usize) -> Self {
        Self { dim, row_ptr: vec![0; dim + 1], cols: Vec::new(), vals: Vec::new() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn row_nnz(&self, row: usize) -> usize {
        self.row_ptr[row + 1] - self.row_ptr[row]
    }

    /// Nonzero entries `(row, col, value)` in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (usize, usize, T)> + '_ {
        (0..self.dim).flat_map(move |r| {
            (self.row_ptr[r]..self.row_ptr[r + 1]).map(move |k| (r, self.cols[k], self.vals[k]))
        })
    }

    pub fn get(&self, row: usize, col: usize) -> T {
        let span = &self.cols[self.row_ptr[row]..self.row_ptr[row + 1]];
        match span.binary_search(&col) {
            Ok(k) => self.vals[self.row_ptr[row] + k],
            Err(_) => T::zero(),
        }
    }

    /// True if every stored entry has a bitwise-equal transpose partner.
    pub fn is_symmetric(&self) -> bool {
        self.entries().all(|(r, c, v)| self.get(c, r) == v)
    }

    pub fn trace(&self) -> T {
        (0..self.dim).map(|r| self.get(r, r)).sum()
    }

    /// Largest absolute row sum; an upper bound on the spectral radius.
    pub fn norm_bound(&self) -> T {
        (0..self.dim)
            .map(|r| (self.row_ptr[r]..self.row_ptr[r + 1]).map(|k| self.vals[k].abs()).sum::<T>())
            .fold(T::zero(), T::max)
    }

    /// `y = A x` without length checks beyond debug assertions.
    pub fn apply_into(&self, x: &[T], y: &mut [T]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + self.vals[k] * x[self.cols[k]];
            }
            *out = acc;
        }
    }

    /// `y = A x` for complex amplitudes.
    pub fn apply_complex_into(&self, x: &[Complex<T>], y: &mut [Complex<T>]) {
        debug_assert_eq!(x.len(), self.dim);
        debug_assert_eq!(y.len(), self.dim);
        for (r, out) in y.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for k in self.row_ptr[r]..self.row_ptr[r + 1] {
                acc = acc + x[self.cols[k]] * self.vals[k];
            }
            *out = acc;
        }
    }

    pub fn matvec(&self, x: &[T]) -> Result<Vec<T>, OperatorError> {
        self.check_len(x.len())?;
        let mut y = vec![T::zero(); self.dim];
        self.apply_into(x, &mut y);
        Ok(y)
    }

    pub fn matvec_complex(&self, x: &[Complex<T>]) -> Result<Vec<Complex<T>>, OperatorError> {
        self.check_len(x.len())?;
        let mut y = vec![Complex::new(T::zero(), T::zero()); self.dim];
        self.apply_complex_into(x, &mut y);
        Ok(y)
    }

    /// `<x|A|x>` for complex `x`; real because `A` is symmetric.
    pub fn expectation(&self, x: &[Complex<T>]) -> Result<T, OperatorError> {
        let y = self.matvec_complex(x)?;
        Ok(x.iter().zip(&y).map(|(a, b)| (a.conj() * b).re).sum())
    }

    /// Dense row-major copy.
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut m = vec![vec![T::zero(); self.dim]; self.dim];
        for (r, c, v) in self.entries() {
            m[r][c] = v;
        }
        m
    }

    fn check_len(&self, got: usize) -> Result<(), OperatorError> {
        if got != self.dim {
            return Err(OperatorError::DimensionMismatch { expected: self.dim, got });
        }
        Ok(())
    }
}

fn bonds(sites: usize, boundary: Boundary) -> Vec<(usize, usize)> {
    let mut b: Vec<(usize, usize)> = (0..sites.saturating_sub(1)).map(|i| (i, i + 1)).collect();
    if boundary == Boundary::Periodic && sites > 2 {
        b.push((sites - 1, 0));
    }
    b
}

/// Assembles the full Hamiltonian (lattice plus laser terms).
///
/// Every off-diagonal target is ranked in the same fixed-N table; a failed
/// lookup would mean the construction broke number conservation and panics.
pub fn build_hamiltonian<T: Real>(
    params: &ModelParams<T>,
    basis: &BasisTable,
    boundary: Boundary,
) -> Result<SparseOperator<T>, OperatorError> {
    let m = basis.sites();
    params.validate(m)?;
    let bond_list = bonds(m, boundary);
    let half = T::of(0.5);

    let rows: Vec<Vec<(usize, T)>> = (0..basis.dim())
        .into_par_iter()
        .map(|idx| {
            let modes = basis.modes_of(idx);
            let (ne, ng) = modes.split_at(m);
            let mut row = Vec::with_capacity(1 + 4 * bond_list.len() + 2 * m);

            let mut diag = T::zero();
            let mut n_e_total = 0usize;
            for i in 0..m {
                let (a, b) = (ne[i] as usize, ng[i] as usize);
                n_e_total += a;
                let (ta, tb) = (T::of_usize(a), T::of_usize(b));
                diag = diag
                    + params.u_eg * ta * tb
                    + half * params.u_e * T::of_usize(a * a.saturating_sub(1))
                    + half * params.u_g * T::of_usize(b * b.saturating_sub(1))
                    + params.eps_e[i] * ta
                    + params.eps_g[i] * tb;
            }
            diag = diag + params.detuning * T::of_usize(n_e_total);
            row.push((idx, diag));

            let mut scratch: Vec<Occupation> = modes.to_vec();
            let mut push_hop = |offset: usize, from: usize, to: usize, amp: T, row: &mut Vec<(usize, T)>| {
                // a^dag_to a_from on modes offset+from -> offset+to
                let nf = scratch[offset + from] as u64;
                let nt = scratch[offset + to] as u64;
                if nf == 0 || amp == T::zero() {
                    return;
                }
                scratch[offset + from] -= 1;
                scratch[offset + to] += 1;
                let target = basis
                    .rank_modes(&scratch)
                    .expect("hopping left the fixed-N basis");
                scratch[offset + from] += 1;
                scratch[offset + to] -= 1;
                let factor = T::from_u64(nf * (nt + 1)).expect("occupation product").sqrt();
                row.push((target, amp * factor));
            };

            for &(i, j) in &bond_list {
                for (offset, hop) in [(0, params.hop_e), (m, params.hop_g)] {
                    push_hop(offset, j, i, -hop, &mut row);
                    push_hop(offset, i, j, -hop, &mut row);
                }
            }
            // e^dag_i g_i and g^dag_i e_i move an atom between the two halves
            for i in 0..m {
                let om = params.omega[i];
                push_hop(0, m + i, i, om, &mut row);
                push_hop(0, i, m + i, om, &mut row);
            }
            row
        })
        .collect();

    Ok(SparseOperator::from_rows(basis.dim(), rows))
}

/// Unit-strength laser coupling `e^dag_s g_s + h.c.` on one 1-based site.
pub fn drive_operator<T: Real>(basis: &BasisTable, site: usize) -> Result<SparseOperator<T>, OperatorError> {
    let m = basis.sites();
    if site == 0 || site > m {
        return Err(OperatorError::SiteOutOfRange { site, sites: m });
    }
    let mut params = ModelParams::<T>::zero(m);
    params.omega[site - 1] = T::one();
    build_hamiltonian(&params, basis, Boundary::Open)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::OccupationState;

    fn dense_of(op: &SparseOperator<f64>) -> Vec<Vec<f64>> {
        op.to_dense()
    }

    #[test]
    fn two_level_drive_matrix() {
        let basis = BasisTable::enumerate(1, 1).unwrap();
        let p = ModelParams::<f64>::zero(1).with_detuning(1.5).with_end_drive(2.5);
        let h = build_hamiltonian(&p, &basis, Boundary::Open).unwrap();
        // basis order is {e, g}
        assert_eq!(dense_of(&h), vec![vec![1.5, 2.5], vec![2.5, 0.0]]);
    }

    #[test]
    fn zero_params_give_zero_operator() {
        let basis = BasisTable::enumerate(3, 3).unwrap();
        let h = build_hamiltonian(&ModelParams::<f64>::zero(3), &basis, Boundary::Open).unwrap();
        assert_eq!(h.nnz(), 0);
    }

    #[test]
    fn single_component_two_site_block() {
        // hand-computed block of -J (e1^dag e2 + h.c.) + U/2 sum n(n-1)
        let (j, u) = (0.7, 3.0);
        let basis = BasisTable::enumerate(2, 2).unwrap();
        let mut p = ModelParams::<f64>::zero(2);
        p.hop_e = j;
        p.u_e = u;
        let h = build_hamiltonian(&p, &basis, Boundary::Open).unwrap();
        let idx = |e: [u16; 2]| basis.rank(&OccupationState::new(e.to_vec(), vec![0, 0])).unwrap();
        let (s20, s11, s02) = (idx([2, 0]), idx([1, 1]), idx([0, 2]));
        let expected = [
            [u, -2f64.sqrt() * j, 0.0],
            [-2f64.sqrt() * j, 0.0, -2f64.sqrt() * j],
            [0.0, -2f64.sqrt() * j, u],
        ];
        let ids = [s20, s11, s02];
        for (a, &ra) in ids.iter().enumerate() {
            for (b, &rb) in ids.iter().enumerate() {
                assert!((h.get(ra, rb) - expected[a][b]).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn matvec_dimension_mismatch() {
        let basis = BasisTable::enumerate(2, 1).unwrap();
        let h = build_hamiltonian(&ModelParams::<f64>::symmetric(2, 1.0, 1.0), &basis, Boundary::Open).unwrap();
        assert!(matches!(h.matvec(&[1.0]), Err(OperatorError::DimensionMismatch { .. })));
        assert_eq!(h.matvec(&vec![0.0; basis.dim()]).unwrap(), vec![0.0; basis.dim()]);
    }

    #[test]
    fn rejects_short_site_arrays() {
        let basis = BasisTable::enumerate(3, 1).unwrap();
        let p = ModelParams::<f64>::symmetric(2, 1.0, 1.0);
        assert!(matches!(
            build_hamiltonian(&p, &basis, Boundary::Open),
            Err(OperatorError::SiteArrayLength { .. })
        ));
    }

    #[test]
    fn harmonic_profile_is_centered() {
        let p = ModelParams::<f64>::zero(5).with_harmonic_trap(2.0);
        assert_eq!(p.eps_e, vec![8.0, 2.0, 0.0, 2.0, 8.0]);
        assert_eq!(p.eps_g, p.eps_e);
    }

    #[test]
    fn sparsity_bound_per_row() {
        for m in 1..=4 {
            for n in 0..=4 {
                let basis = BasisTable::enumerate(m, n).unwrap();
                let mut p = ModelParams::<f64>::symmetric(m, 1.0, 3.0).with_detuning(0.3);
                p.omega = vec![0.9; m];
                let h = build_hamiltonian(&p, &basis, Boundary::Open).unwrap();
                let bound = 1 + 4 * (m - 1) + 2 * m;
                assert!((0..h.dim()).all(|r| h.row_nnz(r) <= bound));
            }
        }
    }

    #[test]
    fn periodic_adds_wrap_bond() {
        let basis = BasisTable::enumerate(3, 1).unwrap();
        let p = ModelParams::<f64>::symmetric(3, 1.0, 0.0);
        let open = build_hamiltonian(&p, &basis, Boundary::Open).unwrap();
        let ring = build_hamiltonian(&p, &basis, Boundary::Periodic).unwrap();
        let e1 = basis.rank(&OccupationState::new(vec![1, 0, 0], vec![0, 0, 0])).unwrap();
        let e3 = basis.rank(&OccupationState::new(vec![0, 0, 1], vec![0, 0, 0])).unwrap();
        assert_eq!(open.get(e1, e3), 0.0);
        assert_eq!(ring.get(e1, e3), -1.0);
        assert!(ring.is_symmetric());
    }

    #[test]
    fn drive_operator_site_range() {
        let basis = BasisTable::enumerate(3, 2).unwrap();
        assert!(drive_operator::<f64>(&basis, 0).is_err());
        assert!(drive_operator::<f64>(&basis, 4).is_err());
        let d = drive_operator::<f64>(&basis, 3).unwrap();
        assert!(d.is_symmetric());
        assert_eq!(d.trace(), 0.0);
    }
}
