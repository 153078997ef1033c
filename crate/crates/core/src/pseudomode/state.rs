//! Block-diagonal density matrix of the atoms-plus-pseudomode system.
//!
//! The generator conserves the joint excitation number `n + b'b`, so from the
//! all-excited start only the sectors with `i + l = j + m = M`, `M = 0..N`,
//! ever populate. Block `M` is a dense complex `(M+1) x (M+1)` matrix whose
//! row index `i` pairs the Dicke state with `i` excited atoms with the photon
//! Fock state `|M - i>`. Total storage is
//! `sum_M (M+1)^2 = (N+1)(N+2)(2N+3)/6` complex entries.

use num_complex::Complex64;

/// Storage size of the block tower for `n` atoms, in complex entries.
pub fn storage_len(n_atoms: usize) -> usize {
    let n = n_atoms;
    (n + 1) * (n + 2) * (2 * n + 3) / 6
}

/// Offsets of each block inside the flat buffer; `offsets[m]..offsets[m+1]`
/// holds block `m` row-major.
pub fn block_offsets(n_atoms: usize) -> Vec<usize> {
    let mut offsets = Vec::with_capacity(n_atoms + 2);
    let mut acc = 0;
    for m in 0..=n_atoms {
        offsets.push(acc);
        acc += (m + 1) * (m + 1);
    }
    offsets.push(acc);
    offsets
}

#[derive(Debug, Clone)]
pub struct BlockDensityMatrix {
    n_atoms: usize,
    offsets: Vec<usize>,
    data: Vec<Complex64>,
}

impl BlockDensityMatrix {
    /// The all-excited initial state `|N><N| (x) |0><0|`: a single unit entry
    /// at row `N` of block `N`.
    pub fn all_excited(n_atoms: usize) -> Self {
        let offsets = block_offsets(n_atoms);
        let mut data = vec![Complex64::ZERO; storage_len(n_atoms)];
        let dim = n_atoms + 1;
        data[offsets[n_atoms] + n_atoms * dim + n_atoms] = Complex64::ONE;
        Self { n_atoms, offsets, data }
    }

    /// Zero state with the right shape (workspace for derivatives).
    pub fn zeros(n_atoms: usize) -> Self {
        Self {
            n_atoms,
            offsets: block_offsets(n_atoms),
            data: vec![Complex64::ZERO; storage_len(n_atoms)],
        }
    }

    pub(crate) fn from_flat(n_atoms: usize, data: Vec<Complex64>) -> Self {
        debug_assert_eq!(data.len(), storage_len(n_atoms));
        Self { n_atoms, offsets: block_offsets(n_atoms), data }
    }

    pub fn n_atoms(&self) -> usize {
        self.n_atoms
    }

    pub fn as_flat(&self) -> &[Complex64] {
        &self.data
    }

    pub(crate) fn into_flat(self) -> Vec<Complex64> {
        self.data
    }

    pub fn block(&self, m: usize) -> &[Complex64] {
        &self.data[self.offsets[m]..self.offsets[m + 1]]
    }

    pub fn entry(&self, m: usize, i: usize, j: usize) -> Complex64 {
        self.data[self.offsets[m] + i * (m + 1) + j]
    }

    /// Global trace: the sum of every diagonal entry across blocks.
    pub fn trace(&self) -> f64 {
        trace_flat(&self.data, &self.offsets, self.n_atoms)
    }

    /// `<n>`: expected number of excited atoms.
    pub fn expectation_n(&self) -> f64 {
        let mut acc = 0.0;
        for m in 0..=self.n_atoms {
            let dim = m + 1;
            let blk = self.block(m);
            for i in 0..dim {
                acc += i as f64 * blk[i * dim + i].re;
            }
        }
        acc
    }

    /// `<n + b'b>`: joint excitation, conserved at `lambda = 0`.
    pub fn expectation_total(&self) -> f64 {
        let mut acc = 0.0;
        for m in 0..=self.n_atoms {
            let dim = m + 1;
            let blk = self.block(m);
            let mut tr = 0.0;
            for i in 0..dim {
                tr += blk[i * dim + i].re;
            }
            acc += m as f64 * tr;
        }
        acc
    }

    /// `<J+ J->`: collective emission weight, `sum_i i (N - i + 1) rho_ii`.
    pub fn expectation_jpjm(&self) -> f64 {
        let n = self.n_atoms as f64;
        let mut acc = 0.0;
        for m in 0..=self.n_atoms {
            let dim = m + 1;
            let blk = self.block(m);
            for i in 0..dim {
                acc += i as f64 * (n - i as f64 + 1.0) * blk[i * dim + i].re;
            }
        }
        acc
    }

    /// `<b'b>`: pseudomode occupation.
    pub fn expectation_photons(&self) -> f64 {
        self.expectation_total() - self.expectation_n()
    }

    /// Probability in blocks strictly above `m`; non-increasing in time since
    /// photon loss only cascades downward.
    pub fn probability_above(&self, m: usize) -> f64 {
        let mut acc = 0.0;
        for mm in (m + 1)..=self.n_atoms {
            let dim = mm + 1;
            let blk = self.block(mm);
            for i in 0..dim {
                acc += blk[i * dim + i].re;
            }
        }
        acc
    }

    /// Largest deviation from Hermiticity across all blocks.
    pub fn hermiticity_residual(&self) -> f64 {
        let mut worst = 0.0_f64;
        for m in 0..=self.n_atoms {
            let dim = m + 1;
            let blk = self.block(m);
            for i in 0..dim {
                for j in (i + 1)..dim {
                    let d = (blk[i * dim + j] - blk[j * dim + i].conj()).norm();
                    worst = worst.max(d);
                }
                worst = worst.max(blk[i * dim + i].im.abs());
            }
        }
        worst
    }

    /// Smallest eigenvalue of block `m`, via the real symmetric embedding
    /// `[[X, -Y], [Y, X]]` of the Hermitian matrix `X + iY` (each eigenvalue
    /// appears twice). Cheap only for small blocks; meant for validation.
    pub fn block_min_eigenvalue(&self, m: usize) -> f64 {
        let dim = m + 1;
        let blk = self.block(m);
        let mut emb = nalgebra::DMatrix::<f64>::zeros(2 * dim, 2 * dim);
        for i in 0..dim {
            for j in 0..dim {
                let z = blk[i * dim + j];
                emb[(i, j)] = z.re;
                emb[(dim + i, dim + j)] = z.re;
                emb[(i, dim + j)] = -z.im;
                emb[(dim + i, j)] = z.im;
            }
        }
        let eig = nalgebra::SymmetricEigen::new(emb);
        eig.eigenvalues.iter().fold(f64::INFINITY, |a, &b| a.min(b))
    }
}

pub(crate) fn trace_flat(data: &[Complex64], offsets: &[usize], n_atoms: usize) -> f64 {
    let mut acc = 0.0;
    for m in 0..=n_atoms {
        let dim = m + 1;
        let blk = &data[offsets[m]..offsets[m + 1]];
        for i in 0..dim {
            acc += blk[i * dim + i].re;
        }
    }
    acc
}
