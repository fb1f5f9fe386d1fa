//! Number-conserving Fock basis for two-component bosons on a chain.
//!
//! A state lists the occupation of every mode; modes are ordered as
//! `e_1 .. e_M, g_1 .. g_M`. The table stores every state with total atom
//! number `N` in descending lexicographic order of that concatenated
//! sequence, so index 0 is the state with all atoms in `|e>` on site 1 and
//! the last index has all atoms in `|g>` on site M.
//!
//! Ranking is combinatorial: the position of a state is the number of
//! compositions that precede it, counted with a precomputed table of
//! stars-and-bars coefficients. Lookup costs `O(M)` and allocates nothing.

use std::fmt;

use thiserror::Error;

/// Occupation number of a single mode.
pub type Occupation = u16;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BasisError {
    #[error("chain needs at least one site")]
    NoSites,
    #[error("basis dimension for M={sites}, N={atoms} exceeds the addressable range")]
    Capacity { sites: usize, atoms: usize },
    #[error("state is not part of the basis: {0}")]
    NotFound(String),
    #[error("index {index} out of range for basis of dimension {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
}

/// Occupations of both internal states on every site.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OccupationState {
    pub occ_e: Vec<Occupation>,
    pub occ_g: Vec<Occupation>,
}

impl OccupationState {
    pub fn new(occ_e: Vec<Occupation>, occ_g: Vec<Occupation>) -> Self {
        assert_eq!(occ_e.len(), occ_g.len(), "component occupation lengths differ");
        Self { occ_e, occ_g }
    }

    /// Rebuilds a state from the concatenated `e ++ g` mode sequence.
    pub fn from_modes(modes: &[Occupation]) -> Self {
        assert!(modes.len().is_multiple_of(2), "mode sequence must have even length");
        let (e, g) = modes.split_at(modes.len() / 2);
        Self { occ_e: e.to_vec(), occ_g: g.to_vec() }
    }

    pub fn sites(&self) -> usize {
        self.occ_e.len()
    }

    pub fn total(&self) -> usize {
        self.occ_e.iter().chain(&self.occ_g).map(|&n| n as usize).sum()
    }

    pub fn modes(&self) -> Vec<Occupation> {
        let mut m = self.occ_e.clone();
        m.extend_from_slice(&self.occ_g);
        m
    }
}

impl fmt::Display for OccupationState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "e{:?} g{:?}", self.occ_e, self.occ_g)
    }
}

/// Binomial coefficient with overflow detection.
pub fn binomial(n: usize, k: usize) -> Option<usize> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    usize::try_from(acc).ok()
}

/// Number of ways to place `atoms` indistinguishable atoms into `modes` modes.
fn compositions(modes: usize, atoms: usize) -> Option<usize> {
    if modes == 0 {
        return Some(usize::from(atoms == 0));
    }
    binomial(modes + atoms - 1, atoms)
}

/// Dimension of the fixed-N basis on `sites` sites: C(2M + N - 1, N).
pub fn basis_dimension(sites: usize, atoms: usize) -> Result<usize, BasisError> {
    if sites == 0 {
        return Err(BasisError::NoSites);
    }
    compositions(2 * sites, atoms).ok_or(BasisError::Capacity { sites, atoms })
}

/// Ordered enumeration of all occupation states at fixed `(M, N)`.
///
/// Immutable after construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BasisTable {
    sites: usize,
    atoms: usize,
    /// Row-major `dim x 2M` occupation storage.
    modes: Vec<Occupation>,
    /// `counts[m][r]`: compositions of `r` atoms into the last `m` modes.
    counts: Vec<Vec<usize>>,
}

impl BasisTable {
    /// Enumerates every state of `atoms` bosons over `2 * sites` modes.
    pub fn enumerate(sites: usize, atoms: usize) -> Result<Self, BasisError> {
        let dim = basis_dimension(sites, atoms)?;
        if atoms > Occupation::MAX as usize {
            return Err(BasisError::Capacity { sites, atoms });
        }
        let n_modes = 2 * sites;
        let len = dim
            .checked_mul(n_modes)
            .filter(|&l| l <= isize::MAX as usize / std::mem::size_of::<Occupation>())
            .ok_or(BasisError::Capacity { sites, atoms })?;

        let mut counts = vec![vec![0usize; atoms + 1]; n_modes + 1];
        for (m, row) in counts.iter_mut().enumerate() {
            for (r, c) in row.iter_mut().enumerate() {
                *c = compositions(m, r).ok_or(BasisError::Capacity { sites, atoms })?;
            }
        }

        let mut modes = Vec::with_capacity(len);
        let mut current = vec![0 as Occupation; n_modes];
        fill_descending(&mut current, 0, atoms, &mut modes);
        debug_assert_eq!(modes.len(), len);

        Ok(Self { sites, atoms, modes, counts })
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn atoms(&self) -> usize {
        self.atoms
    }

    pub fn dim(&self) -> usize {
        self.modes.len() / (2 * self.sites)
    }

    /// Concatenated `e ++ g` occupations of the state at `index`.
    pub fn modes_of(&self, index: usize) -> &[Occupation] {
        let w = 2 * self.sites;
        &self.modes[index * w..(index + 1) * w]
    }

    /// `|e>` occupations of the state at `index`, one entry per site.
    pub fn occ_e(&self, index: usize) -> &[Occupation] {
        &self.modes_of(index)[..self.sites]
    }

    /// `|g>` occupations of the state at `index`, one entry per site.
    pub fn occ_g(&self, index: usize) -> &[Occupation] {
        &self.modes_of(index)[self.sites..]
    }

    pub fn state(&self, index: usize) -> Result<OccupationState, BasisError> {
        if index >= self.dim() {
            return Err(BasisError::IndexOutOfRange { index, dim: self.dim() });
        }
        Ok(OccupationState::from_modes(self.modes_of(index)))
    }

    pub fn iter(&self) -> impl ExactSizeIterator<Item = &[Occupation]> + '_ {
        self.modes.chunks_exact(2 * self.sites)
    }

    /// Position of a concatenated mode sequence, or `None` if it is not in
    /// the table (wrong length or wrong total atom number).
    pub fn rank_modes(&self, modes: &[Occupation]) -> Option<usize> {
        let n_modes = 2 * self.sites;
        if modes.len() != n_modes {
            return None;
        }
        let mut remaining = self.atoms;
        let mut rank = 0usize;
        for (j, &occ) in modes.iter().enumerate() {
            let occ = occ as usize;
            if occ > remaining {
                return None;
            }
            let tail = n_modes - j - 1;
            // every state with a larger value in this mode precedes us
            for bigger in occ + 1..=remaining {
                rank += self.counts[tail][remaining - bigger];
            }
            remaining -= occ;
        }
        (remaining == 0).then_some(rank)
    }

    pub fn rank(&self, state: &OccupationState) -> Result<usize, BasisError> {
        if state.sites() != self.sites {
            return Err(BasisError::NotFound(state.to_string()));
        }
        self.rank_modes(&state.modes())
            .ok_or_else(|| BasisError::NotFound(state.to_string()))
    }

    /// Combinatorial unranking; the inverse of [`BasisTable::rank`].
    pub fn unrank(&self, index: usize) -> Result<OccupationState, BasisError> {
        let dim = self.dim();
        if index >= dim {
            return Err(BasisError::IndexOutOfRange { index, dim });
        }
        let n_modes = 2 * self.sites;
        let mut out = vec![0 as Occupation; n_modes];
        let mut remaining = self.atoms;
        let mut offset = index;
        for (j, slot) in out.iter_mut().enumerate() {
            let tail = n_modes - j - 1;
            let mut occ = remaining;
            loop {
                let block = self.counts[tail][remaining - occ];
                if offset < block {
                    break;
                }
                offset -= block;
                occ -= 1;
            }
            *slot = occ as Occupation;
            remaining -= occ;
        }
        Ok(OccupationState::from_modes(&out))
    }
}

fn fill_descending(current: &mut [Occupation], pos: usize, remaining: usize, out: &mut Vec<Occupation>) {
    if pos + 1 == current.len() {
        current[pos] = remaining as Occupation;
        out.extend_from_slice(current);
        return;
    }
    for occ in (0..=remaining).rev() {
        current[pos] = occ as Occupation;
        fill_descending(current, pos + 1, remaining - occ, out);
    }
    current[pos] = 0;
}
