//! Perfect-cavity limit.
//!
//! At zero spectral width the damping term vanishes, the feed between blocks
//! switches off, and the all-excited start stays a pure state inside the top
//! block. The dynamics is then the Schroedinger evolution of an `(N+1)`-level
//! chain with the tridiagonal coupling Hamiltonian, solved exactly by one
//! symmetric eigendecomposition; sampling at any `t` costs one
//! matrix-vector product. Identical to the block solver (which is validated
//! against this path), at a vanishing fraction of the cost.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::error::PseudomodeError;
use crate::model::{IntensityTrace, SolverPath, SystemParams, TraceMeta};
use crate::pseudomode::state::{block_offsets, storage_len, BlockDensityMatrix};

#[derive(Debug, Clone)]
pub struct LosslessPropagator {
    n_atoms: usize,
    omega0: f64,
    hops: Vec<f64>,
    eigvals: Vec<f64>,
    eigvecs: DMatrix<f64>,
    /// Eigenbasis coordinates of the all-excited start.
    w0: Vec<f64>,
}

impl LosslessPropagator {
    pub fn new(p: &SystemParams) -> Result<Self, PseudomodeError> {
        p.validate()?;
        let n = p.n_atoms;
        let dim = n + 1;
        let g = p.gamma0 / 2f64.sqrt();
        let nf = n as f64;
        let hops: Vec<f64> = (0..n)
            .map(|k| {
                let kf = k as f64;
                g * ((kf + 1.0) * (nf - kf)).sqrt() * (nf - kf).sqrt()
            })
            .collect();
        let mut h = DMatrix::<f64>::zeros(dim, dim);
        for (k, &hk) in hops.iter().enumerate() {
            h[(k, k + 1)] = hk;
            h[(k + 1, k)] = hk;
        }
        let eig = nalgebra::SymmetricEigen::new(h);
        let eigvals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        // Start vector is the unit basis vector at the all-excited row, so
        // its eigen coordinates are that row of the eigenvector matrix.
        let w0: Vec<f64> = (0..dim).map(|k| eig.eigenvectors[(n, k)]).collect();
        Ok(Self { n_atoms: n, omega0: p.omega0, hops, eigvals, eigvecs: eig.eigenvectors, w0 })
    }

    /// Largest coupling eigenfrequency; sets the sampling density needed to
    /// resolve the intensity oscillations.
    pub fn max_frequency(&self) -> f64 {
        self.eigvals.iter().fold(0.0_f64, |a, &b| a.max(b.abs()))
    }

    /// Amplitudes `c(t) = V exp(-i theta t) V^T c(0)`.
    pub fn amplitudes(&self, t: f64, out: &mut Vec<Complex64>) {
        let dim = self.n_atoms + 1;
        out.clear();
        out.resize(dim, Complex64::ZERO);
        for k in 0..dim {
            let ph = Complex64::new(0.0, -self.eigvals[k] * t).exp() * self.w0[k];
            if ph.norm_sqr() < 1e-60 {
                continue;
            }
            let col = self.eigvecs.column(k);
            for (o, v) in out.iter_mut().zip(col.iter()) {
                *o += v * ph;
            }
        }
    }

    /// `(I, <n>)` from an amplitude vector.
    pub fn observables(&self, c: &[Complex64]) -> (f64, f64) {
        let mut flow = 0.0;
        for (k, &hk) in self.hops.iter().enumerate() {
            flow += hk * (c[k] * c[k + 1].conj()).im;
        }
        let excitation: f64 = c.iter().enumerate().map(|(i, ci)| i as f64 * ci.norm_sqr()).sum();
        (-2.0 * self.omega0 * flow, excitation)
    }

    /// Densely packed pure state in the top block.
    pub fn density_matrix(&self, c: &[Complex64]) -> BlockDensityMatrix {
        let n = self.n_atoms;
        let offsets = block_offsets(n);
        let mut data = vec![Complex64::ZERO; storage_len(n)];
        let dim = n + 1;
        let top = &mut data[offsets[n]..];
        for i in 0..dim {
            for j in 0..dim {
                top[i * dim + j] = c[i] * c[j].conj();
            }
        }
        BlockDensityMatrix::from_flat(n, data)
    }
}

/// Samples the lossless evolution on the given times (must be increasing).
pub fn evolve_lossless(
    p: &SystemParams,
    times: &[f64],
) -> Result<(IntensityTrace, BlockDensityMatrix), PseudomodeError> {
    let prop = LosslessPropagator::new(p)?;
    let mut c = Vec::new();
    let mut out_t = Vec::with_capacity(times.len());
    let mut out_i = Vec::with_capacity(times.len());
    let mut out_n = Vec::with_capacity(times.len());
    for &t in times {
        prop.amplitudes(t, &mut c);
        let (i, n) = prop.observables(&c);
        out_t.push(t);
        out_i.push(i);
        out_n.push(n);
    }
    let t_last = times.last().copied().unwrap_or(0.0);
    prop.amplitudes(t_last, &mut c);
    let rho = prop.density_matrix(&c);
    Ok((
        IntensityTrace {
            times: out_t,
            intensity: out_i,
            excitation: out_n,
            meta: TraceMeta { solver: SolverPath::LosslessEigen, params: p.clone() },
        },
        rho,
    ))
}
