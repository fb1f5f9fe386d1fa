#![allow(dead_code)]

use std::collections::HashMap;

use bh_drive::{BasisTable, Boundary, Params};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// All occupation vectors of `modes` modes holding `atoms` atoms, by brute recursion.
pub fn brute_force_states(modes: usize, atoms: usize) -> Vec<Vec<u16>> {
    fn go(prefix: &mut Vec<u16>, left: usize, modes: usize, out: &mut Vec<Vec<u16>>) {
        if prefix.len() + 1 == modes {
            prefix.push(left as u16);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for n in 0..=left {
            prefix.push(n as u16);
            go(prefix, left - n, modes, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    if modes > 0 {
        go(&mut Vec::new(), atoms, modes, &mut out);
    }
    out
}

/// Hash index over the table's states; independent of the combinatorial rank.
pub fn index_map(basis: &BasisTable) -> HashMap<Vec<u16>, usize> {
    basis.iter().enumerate().map(|(i, m)| (m.to_vec(), i)).collect()
}

/// a^dag_to a_from on a mode vector; returns the amplitude or None.
fn hop(state: &[u16], from: usize, to: usize) -> Option<(Vec<u16>, f64)> {
    if state[from] == 0 {
        return None;
    }
    let mut s = state.to_vec();
    let amp = (s[from] as f64).sqrt();
    s[from] -= 1;
    let amp = amp * (s[to] as f64 + 1.0).sqrt();
    s[to] += 1;
    Some((s, amp))
}

/// Dense Hamiltonian assembled term by term from ladder operators.
pub fn dense_hamiltonian(params: &Params, basis: &BasisTable, boundary: Boundary) -> DMatrix<f64> {
    let m = basis.sites();
    let index = index_map(basis);
    let dim = basis.dim();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    let mut bonds: Vec<(usize, usize)> = (1..m).map(|i| (i - 1, i)).collect();
    if boundary == Boundary::Periodic && m > 2 {
        bonds.push((m - 1, 0));
    }
    for (col, state) in basis.iter().enumerate() {
        let e = |i: usize| state[i] as f64;
        let g = |i: usize| state[m + i] as f64;
        let mut d = 0.0;
        for i in 0..m {
            d += params.u_eg * e(i) * g(i);
            d += 0.5 * params.u_e * e(i) * (e(i) - 1.0);
            d += 0.5 * params.u_g * g(i) * (g(i) - 1.0);
            d += params.eps_e[i] * e(i) + params.eps_g[i] * g(i);
            d += params.detuning * e(i);
        }
        h[(col, col)] += d;

        let mut add = |from: usize, to: usize, coeff: f64| {
            if let Some((s, amp)) = hop(state, from, to) {
                let row = index[&s];
                h[(row, col)] += coeff * amp;
            }
        };
        for &(i, j) in &bonds {
            add(j, i, -params.hop_e);
            add(i, j, -params.hop_e);
            add(m + j, m + i, -params.hop_g);
            add(m + i, m + j, -params.hop_g);
        }
        for i in 0..m {
            add(m + i, i, params.omega[i]);
            add(i, m + i, params.omega[i]);
        }
    }
    h
}

pub fn sorted_eigenvalues(h: DMatrix<f64>) -> Vec<f64> {
    let mut v: Vec<f64> = h.symmetric_eigen().eigenvalues.iter().copied().collect();
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v
}

/// Basis permutation exchanging the e and g occupations.
pub fn swap_permutation(basis: &BasisTable) -> Vec<usize> {
    let m = basis.sites();
    let index = index_map(basis);
    basis
        .iter()
        .map(|s| {
            let mut t = s[m..].to_vec();
            t.extend_from_slice(&s[..m]);
            index[&t]
        })
        .collect()
}

/// Basis permutation mirroring the chain, site i -> M + 1 - i.
pub fn reflection_permutation(basis: &BasisTable) -> Vec<usize> {
    let m = basis.sites();
    let index = index_map(basis);
    basis
        .iter()
        .map(|s| {
            let mut t: Vec<u16> = s[..m].iter().rev().copied().collect();
            t.extend(s[m..].iter().rev());
            index[&t]
        })
        .collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()
}
