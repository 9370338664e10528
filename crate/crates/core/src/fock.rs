//! Brute-force oracle: the pairing Hamiltonian as a dense matrix in the
//! fixed-seniority pair basis.
//!
//! A basis state is the occupancy vector `n = (n_0, …, n_{L-1})` of pairs per
//! level, `Σ n_α = M`. Pair operators act through the lowest-weight SU(1,1)
//! matrix element [`raise_element`]; a level of charge `C = Ω + ν` holding `n`
//! pairs carries `2n + ν` bosons.

use std::collections::HashMap;
use std::io::{self, Write};

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use thiserror::Error;

use crate::model::{charge, Level, LevelSpectrum, ModelError, PairSector};

pub const DEFAULT_BASIS_CAP: usize = 20_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FockError {
    #[error("basis dimension {dim} exceeds cap {cap}")]
    BasisTooLarge { dim: u128, cap: usize },
    #[error("eigensolver did not converge within {iterations} iterations")]
    NonConvergence { iterations: usize },
    #[error("eigenpair residual {residual:e} exceeds {bound:e}")]
    InaccurateEigenpair { residual: f64, bound: f64 },
    #[error("empty matrix")]
    Empty,
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// `⟨n+1| b⁺ |n⟩ = √((n+1)(n+C))` for a shell of charge `C`.
pub fn raise_element(n: u32, charge: u32) -> f64 {
    let n = n as f64;
    ((n + 1.0) * (n + charge as f64)).sqrt()
}

/// Number of weak compositions of `m` into `l` parts, `C(m+l-1, l-1)`, saturating.
pub fn basis_dimension(l: usize, m: usize) -> u128 {
    if l == 0 {
        return u128::from(m == 0);
    }
    let n = (m + l - 1) as u128;
    let k = ((l - 1).min(m)) as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul(n - i) {
            Some(v) => v / (i + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// All occupancy vectors with `Σ n_α = M`, in descending lexicographic order,
/// so ordinal 0 is the state with every pair on level 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PairBasis {
    levels: usize,
    pairs: usize,
    states: Vec<Vec<u32>>,
    index: HashMap<Vec<u32>, usize>,
}

impl PairBasis {
    pub fn new(levels: usize, pairs: usize, cap: usize) -> Result<Self, FockError> {
        let dim = basis_dimension(levels, pairs);
        if dim > cap as u128 {
            return Err(FockError::BasisTooLarge { dim, cap });
        }
        let mut states = Vec::with_capacity(dim as usize);
        let mut cur = vec![0u32; levels];
        fill(&mut cur, 0, pairs as u32, &mut states);
        let index = states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        Ok(PairBasis { levels, pairs, states, index })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn pairs(&self) -> usize {
        self.pairs
    }

    pub fn state(&self, i: usize) -> &[u32] {
        &self.states[i]
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn index_of(&self, occupancy: &[u32]) -> Option<usize> {
        self.index.get(occupancy).copied()
    }
}

fn fill(cur: &mut Vec<u32>, pos: usize, left: u32, out: &mut Vec<Vec<u32>>) {
    if pos + 1 == cur.len() {
        cur[pos] = left;
        out.push(cur.clone());
        return;
    }
    for k in (0..=left).rev() {
        cur[pos] = k;
        fill(cur, pos + 1, left - k, out);
    }
    cur[pos] = 0;
}

/// Amplitude of `b_to⁺ b_from` on `state`, or `None` if `from` is empty.
///
/// For `to == from` this is the diagonal `n(n − 1 + C)`.
pub fn hop(levels: &[Level], state: &[u32], to: usize, from: usize) -> Option<(Vec<u32>, f64)> {
    let nf = state[from];
    if nf == 0 {
        return None;
    }
    let cf = charge(&levels[from]);
    let lower = raise_element(nf - 1, cf);
    let mut next = state.to_vec();
    next[from] -= 1;
    let raise = raise_element(next[to], charge(&levels[to]));
    next[to] += 1;
    Some((next, raise * lower))
}

/// Boson count `2n_α + ν_α` on each level.
pub fn boson_counts(levels: &[Level], state: &[u32]) -> Vec<f64> {
    levels
        .iter()
        .zip(state)
        .map(|(l, &n)| (2 * n + l.nu) as f64)
        .collect()
}

/// Dense Hamiltonian with the data it was built from.
#[derive(Debug, Clone)]
pub struct DenseHamiltonian {
    pub matrix: DMatrix<f64>,
    pub basis: PairBasis,
    pub levels: Vec<Level>,
    pub g_eff: f64,
}

impl DenseHamiltonian {
    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    /// Coordinate dump `row col value` of the non-zero entries.
    pub fn write_coordinates<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "# row col value (dim {})", self.dim())?;
        for j in 0..self.dim() {
            for i in 0..self.dim() {
                let v = self.matrix[(i, j)];
                if v != 0.0 {
                    writeln!(out, "{i} {j} {v:.17e}")?;
                }
            }
        }
        Ok(())
    }
}

/// `H = Σ ε_α n_α − g_eff B⁺B⁻` in the sector's pair basis.
pub fn build_hamiltonian(
    spectrum: &LevelSpectrum,
    sector: &PairSector,
    g_eff: f64,
) -> Result<DenseHamiltonian, FockError> {
    build_hamiltonian_capped(spectrum, sector, g_eff, DEFAULT_BASIS_CAP)
}

pub fn build_hamiltonian_capped(
    spectrum: &LevelSpectrum,
    sector: &PairSector,
    g_eff: f64,
    cap: usize,
) -> Result<DenseHamiltonian, FockError> {
    sector.check(spectrum)?;
    pairing_matrix(spectrum.levels(), sector.pairs(), g_eff, cap)
}

/// Same as [`build_hamiltonian`] on a raw level list.
///
/// Energies need not be distinct here, which lets a degenerate shell be
/// written out level by level and compared with its collapsed form.
pub fn pairing_matrix(
    levels: &[Level],
    pairs: usize,
    g_eff: f64,
    cap: usize,
) -> Result<DenseHamiltonian, FockError> {
    let basis = PairBasis::new(levels.len(), pairs, cap)?;
    let dim = basis.len();
    let mut h = DMatrix::<f64>::zeros(dim, dim);
    for (col, state) in basis.states().iter().enumerate() {
        let free: f64 = boson_counts(levels, state)
            .iter()
            .zip(levels)
            .map(|(n, l)| l.epsilon * n)
            .sum();
        h[(col, col)] += free;
        if g_eff == 0.0 {
            continue;
        }
        for from in 0..levels.len() {
            for to in 0..levels.len() {
                if let Some((next, amp)) = hop(levels, state, to, from) {
                    let row = basis.index_of(&next).expect("pair hop stays in the sector");
                    h[(row, col)] -= g_eff * amp;
                }
            }
        }
    }
    Ok(DenseHamiltonian {
        matrix: h,
        basis,
        levels: levels.to_vec(),
        g_eff,
    })
}

/// Eigenvalues in ascending order with matching eigenvector columns.
#[derive(Debug, Clone)]
pub struct Eigensystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl Eigensystem {
    pub fn ground_vector(&self) -> DVector<f64> {
        self.vectors.column(0).into_owned()
    }
}

const EIGEN_MAX_SWEEPS: usize = 200;

pub fn diagonalize(h: &DenseHamiltonian) -> Result<Eigensystem, FockError> {
    diagonalize_matrix(&h.matrix)
}

/// Full symmetric eigendecomposition with a per-pair residual check
/// `‖Hv − λv‖ ≤ 1e-10 ‖H‖_F`.
pub fn diagonalize_matrix(m: &DMatrix<f64>) -> Result<Eigensystem, FockError> {
    let n = m.nrows();
    if n == 0 {
        return Err(FockError::Empty);
    }
    let iterations = EIGEN_MAX_SWEEPS * n.max(1);
    let eig = SymmetricEigen::try_new(m.clone(), f64::EPSILON, iterations)
        .ok_or(FockError::NonConvergence { iterations })?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::<f64>::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    let bound = 1e-10 * m.norm().max(f64::MIN_POSITIVE);
    let residuals = m * &vectors - &vectors * DMatrix::from_diagonal(&DVector::from_vec(values.clone()));
    for k in 0..n {
        let r = residuals.column(k).norm();
        if r > bound {
            return Err(FockError::InaccurateEigenpair { residual: r, bound });
        }
    }
    Ok(Eigensystem { values, vectors })
}

/// `⟨2n_α + ν_α⟩` for a normalized vector over `basis`.
pub fn occupations_exact(vector: &DVector<f64>, basis: &PairBasis, levels: &[Level]) -> Vec<f64> {
    let mut occ = vec![0.0; levels.len()];
    for (i, state) in basis.states().iter().enumerate() {
        let w = vector[i] * vector[i];
        for (o, n) in occ.iter_mut().zip(boson_counts(levels, state)) {
            *o += w * n;
        }
    }
    occ
}
