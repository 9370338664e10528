//! Commuting conserved charges of the pairing model, built as dense matrices
//! for numerical verification.
//!
//! With `K_i = Ω_i + n_i` (boson count `n_i`) the pair algebra closes as
//! `[b_i, b_i⁺] = K_i`, and the scalar product
//! `S_i·S_j = −½(b_i⁺b_j + b_j⁺b_i) + ¼ K_i K_j` enters the charges
//!
//! ```text
//! H_i = n_i/g + Σ_{l≠i} S_i·S_l / (ξ_i − ξ_l).
//! ```
//!
//! They commute for any distinct `ξ` and any `g`. Their combination
//! `g Σ_i ε_i H_i` is a Hamiltonian depending on both `ε` and `ξ`; at `ξ = ε`
//! it equals the pairing Hamiltonian at coupling `g/2` plus a multiple of the
//! identity.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use thiserror::Error;

use crate::fock::{boson_counts, hop, raise_element, FockError, PairBasis, DEFAULT_BASIS_CAP};
use crate::model::{charge, Level};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum IntegrabilityError {
    #[error("inhomogeneities must be pairwise distinct (ξ[{0}] = ξ[{1}])")]
    DuplicateXi(usize, usize),
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("matrix dimensions differ: {0}×{0} vs {1}×{1}")]
    DimensionMismatch(usize, usize),
    #[error("charge index {index} out of range for {levels} levels")]
    IndexOutOfRange { index: usize, levels: usize },
    #[error("coupling must be positive and finite, got {0}")]
    InvalidCoupling(f64),
    #[error(transparent)]
    Fock(#[from] FockError),
}

type Result<T> = std::result::Result<T, IntegrabilityError>;

fn check_xi(levels: &[Level], xi: &[f64]) -> Result<()> {
    if xi.len() != levels.len() {
        return Err(IntegrabilityError::LengthMismatch {
            expected: levels.len(),
            got: xi.len(),
        });
    }
    for i in 0..xi.len() {
        for j in i + 1..xi.len() {
            if xi[i] == xi[j] {
                return Err(IntegrabilityError::DuplicateXi(i, j));
            }
        }
    }
    Ok(())
}

/// Conserved charge `H_i` as a dense matrix.
#[derive(Debug, Clone)]
pub struct ChargeMatrix {
    pub index: usize,
    pub xi: Vec<f64>,
    pub matrix: DMatrix<f64>,
}

/// Adds `Σ_{pairs (i,j)} w_ij S_i·S_j` to `m`, with `weight(i, j)` symmetric
/// and `None` meaning the pair is absent.
fn add_spin_products<F: Fn(usize, usize) -> Option<f64>>(
    m: &mut DMatrix<f64>,
    basis: &PairBasis,
    levels: &[Level],
    weight: F,
) {
    let l = levels.len();
    for (col, state) in basis.states().iter().enumerate() {
        let k: Vec<f64> = boson_counts(levels, state)
            .iter()
            .zip(levels)
            .map(|(n, lv)| n + lv.omega as f64)
            .collect();
        for i in 0..l {
            for j in 0..l {
                if i == j {
                    continue;
                }
                let Some(w) = weight(i, j) else { continue };
                // ordered pairs visit each product twice: halve both parts
                m[(col, col)] += 0.5 * w * 0.25 * k[i] * k[j];
                if let Some((next, amp)) = hop(levels, state, i, j) {
                    let row = basis.index_of(&next).expect("hop stays in sector");
                    m[(row, col)] -= 0.5 * w * amp;
                }
            }
        }
    }
}

/// Matrix of `H_index` in the pair basis with `pairs` pairs.
pub fn build_charge(
    index: usize,
    levels: &[Level],
    xi: &[f64],
    g_eff: f64,
    pairs: usize,
) -> Result<ChargeMatrix> {
    check_xi(levels, xi)?;
    if index >= levels.len() {
        return Err(IntegrabilityError::IndexOutOfRange {
            index,
            levels: levels.len(),
        });
    }
    let basis = PairBasis::new(levels.len(), pairs, DEFAULT_BASIS_CAP)?;
    let mut m = DMatrix::<f64>::zeros(basis.len(), basis.len());
    if g_eff.is_finite() {
        if !(g_eff > 0.0) {
            return Err(IntegrabilityError::InvalidCoupling(g_eff));
        }
        for (col, state) in basis.states().iter().enumerate() {
            m[(col, col)] += boson_counts(levels, state)[index] / g_eff;
        }
    } else if g_eff != f64::INFINITY {
        return Err(IntegrabilityError::InvalidCoupling(g_eff));
    }
    add_spin_products(&mut m, &basis, levels, |i, j| {
        if i == index {
            Some(1.0 / (xi[i] - xi[j]))
        } else if j == index {
            Some(1.0 / (xi[j] - xi[i]))
        } else {
            None
        }
    });
    Ok(ChargeMatrix {
        index,
        xi: xi.to_vec(),
        matrix: m,
    })
}

/// `Σ_i ε_i n_i + g Σ_{i<j} (ε_i − ε_j)/(ξ_i − ξ_j) S_i·S_j`.
pub fn build_two_parameter_hamiltonian(
    levels: &[Level],
    xi: &[f64],
    g_eff: f64,
    pairs: usize,
) -> Result<DMatrix<f64>> {
    check_xi(levels, xi)?;
    let basis = PairBasis::new(levels.len(), pairs, DEFAULT_BASIS_CAP)?;
    let mut m = DMatrix::<f64>::zeros(basis.len(), basis.len());
    for (col, state) in basis.states().iter().enumerate() {
        m[(col, col)] += boson_counts(levels, state)
            .iter()
            .zip(levels)
            .map(|(n, l)| l.epsilon * n)
            .sum::<f64>();
    }
    if g_eff != 0.0 {
        add_spin_products(&mut m, &basis, levels, |i, j| {
            Some(g_eff * (levels[i].epsilon - levels[j].epsilon) / (xi[i] - xi[j]))
        });
    }
    Ok(m)
}

/// Frobenius norm of `AB − BA`.
pub fn commutator_norm(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.shape() != b.shape() || a.nrows() != a.ncols() {
        return Err(IntegrabilityError::DimensionMismatch(a.nrows(), b.nrows()));
    }
    Ok((a * b - b * a).norm())
}

/// Eigenvalues closer than this are treated as one degenerate block.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Largest off-diagonal element of any charge in the eigenbasis of `h`,
/// ignoring elements inside degenerate blocks.
pub fn shared_eigenbasis_check(h: &DMatrix<f64>, charges: &[DMatrix<f64>]) -> Result<f64> {
    for c in charges {
        if c.shape() != h.shape() {
            return Err(IntegrabilityError::DimensionMismatch(h.nrows(), c.nrows()));
        }
    }
    let eig = SymmetricEigen::new(h.clone());
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let mut block = vec![0usize; n];
    for w in 1..n {
        let gap = eig.eigenvalues[order[w]] - eig.eigenvalues[order[w - 1]];
        block[order[w]] = block[order[w - 1]] + usize::from(gap > DEGENERACY_TOL);
    }
    let v = &eig.eigenvectors;
    let mut leak = 0.0f64;
    for c in charges {
        let t = v.transpose() * c * v;
        for i in 0..n {
            for j in 0..n {
                if block[i] != block[j] {
                    leak = leak.max(t[(i, j)].abs());
                }
            }
        }
    }
    Ok(leak)
}

/// `Π_k (Σ_α b_α⁺/(t_k − ξ_α)) |ν⟩`, normalized, in the pair basis for
/// `roots.len()` pairs.
pub fn bethe_vector(levels: &[Level], xi: &[f64], roots: &[Complex64]) -> Result<DVector<Complex64>> {
    check_xi(levels, xi)?;
    let l = levels.len();
    let mut basis = PairBasis::new(l, 0, DEFAULT_BASIS_CAP)?;
    let mut psi = DVector::from_element(1, Complex64::new(1.0, 0.0));
    for (m, &t) in roots.iter().enumerate() {
        let next_basis = PairBasis::new(l, m + 1, DEFAULT_BASIS_CAP)?;
        let mut next = DVector::from_element(next_basis.len(), Complex64::new(0.0, 0.0));
        for (i, state) in basis.states().iter().enumerate() {
            if psi[i] == Complex64::new(0.0, 0.0) {
                continue;
            }
            for alpha in 0..l {
                let amp = raise_element(state[alpha], charge(&levels[alpha]));
                let mut raised = state.clone();
                raised[alpha] += 1;
                let row = next_basis.index_of(&raised).expect("raised state in next sector");
                next[row] += psi[i] * amp / (t - xi[alpha]);
            }
        }
        basis = next_basis;
        psi = next;
    }
    let norm = psi.norm();
    Ok(psi / Complex64::new(norm, 0.0))
}

/// `‖Hψ − ⟨ψ|H|ψ⟩ψ‖` for a normalized `ψ`.
pub fn eigen_defect(h: &DMatrix<f64>, psi: &DVector<Complex64>) -> Result<f64> {
    if h.nrows() != psi.len() {
        return Err(IntegrabilityError::DimensionMismatch(h.nrows(), psi.len()));
    }
    let hc = h.map(|x| Complex64::new(x, 0.0));
    let hpsi = &hc * psi;
    let lambda = psi.dotc(&hpsi);
    Ok((hpsi - psi * lambda).norm())
}
