//! The block-reduced generator of the atoms-plus-pseudomode master equation.
//!
//! Within block `M` the coupling Hamiltonian is real symmetric tridiagonal
//! with hopping elements
//!
//! `hop[k] = (gamma0/sqrt 2) sqrt((k+1)(N-k)) sqrt(M-k)`
//!
//! between rows `k` and `k+1` (one atomic excitation traded against one
//! pseudomode photon). Photon damping acts elementwise,
//! `-lambda (l + m) rho_{ij}` with `l = M - i`, `m = M - j`, and feeds block
//! `M-1`: entry `(i, j)` there gains
//! `2 lambda sqrt((M-i)(M-j)) rho^{(M)}_{ij}`. The feed only ever moves
//! probability downward, which is what makes the tower block-triangular and
//! lets every derivative block be computed independently.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::PseudomodeError;
use crate::model::SystemParams;
use crate::pseudomode::state::{block_offsets, storage_len, BlockDensityMatrix};

/// Default memory budget for one solve, counting integrator workspace.
pub const DEFAULT_MEMORY_BUDGET: usize = 6 << 30;

/// Flat complex buffers the adaptive integrator keeps alive per solve.
const SOLVER_BUFFERS: usize = 12;

/// States smaller than this are evolved without the thread pool.
const PAR_MIN_ENTRIES: usize = 1 << 16;

#[derive(Debug, Clone)]
pub struct BlockLiouvillian {
    pub n_atoms: usize,
    pub lambda: f64,
    pub gamma0: f64,
    pub omega0: f64,
    offsets: Vec<usize>,
    /// Per block M: the M tridiagonal hopping elements.
    hops: Vec<Vec<f64>>,
    /// Per block M: `sqrt(M - i)` for i = 0..=M (feed amplitudes).
    feed_sqrt: Vec<Vec<f64>>,
    parallel: bool,
}

/// Builds the per-block operators, checking the memory budget first.
pub fn build_liouvillian(
    p: &SystemParams,
    memory_budget: usize,
) -> Result<BlockLiouvillian, PseudomodeError> {
    p.validate()?;
    let n = p.n_atoms;
    let required_bytes = storage_len(n) * std::mem::size_of::<Complex64>() * SOLVER_BUFFERS;
    if required_bytes > memory_budget {
        return Err(PseudomodeError::Capacity {
            n_atoms: n,
            required_bytes,
            budget_bytes: memory_budget,
        });
    }
    let g = p.gamma0 / 2f64.sqrt();
    let nf = n as f64;
    let mut hops = Vec::with_capacity(n + 1);
    let mut feed_sqrt = Vec::with_capacity(n + 1);
    for m in 0..=n {
        let mf = m as f64;
        let hop: Vec<f64> = (0..m)
            .map(|k| {
                let kf = k as f64;
                g * ((kf + 1.0) * (nf - kf)).sqrt() * (mf - kf).sqrt()
            })
            .collect();
        feed_sqrt.push((0..=m).map(|i| (mf - i as f64).sqrt()).collect());
        hops.push(hop);
    }
    Ok(BlockLiouvillian {
        n_atoms: n,
        lambda: p.lambda,
        gamma0: p.gamma0,
        omega0: p.omega0,
        offsets: block_offsets(n),
        hops,
        feed_sqrt,
        parallel: storage_len(n) >= PAR_MIN_ENTRIES,
    })
}

impl BlockLiouvillian {
    pub fn storage_len(&self) -> usize {
        storage_len(self.n_atoms)
    }

    pub fn hops(&self, m: usize) -> &[f64] {
        &self.hops[m]
    }

    /// Derivative of one block: `-i[H, rho] - lambda(l+m) o rho` plus the
    /// feed read from the block above.
    fn block_derivative(&self, m: usize, state: &[Complex64], out: &mut [Complex64]) {
        let dim = m + 1;
        let blk = &state[self.offsets[m]..self.offsets[m] + dim * dim];
        let hop = &self.hops[m];
        let lam = self.lambda;
        for i in 0..dim {
            let (up, rest) = if i > 0 {
                let (head, tail) = blk.split_at(i * dim);
                (Some(&head[(i - 1) * dim..]), tail)
            } else {
                (None, blk)
            };
            let row = &rest[..dim];
            let down = if i + 1 < dim { Some(&blk[(i + 1) * dim..(i + 2) * dim]) } else { None };
            let hu = if i > 0 { hop[i - 1] } else { 0.0 };
            let hd = if i + 1 < dim { hop[i] } else { 0.0 };
            let li = (m - i) as f64;
            let out_row = &mut out[i * dim..(i + 1) * dim];
            for j in 0..dim {
                // Commutator [H, rho]_{ij} assembled from the four hops.
                let mut c = Complex64::ZERO;
                if let Some(u) = up {
                    c += hu * u[j];
                }
                if let Some(d) = down {
                    c += hd * d[j];
                }
                if j > 0 {
                    c -= row[j - 1] * hop[j - 1];
                }
                if j + 1 < dim {
                    c -= row[j + 1] * hop[j];
                }
                let decay = lam * (li + (m - j) as f64);
                // -i c - decay * rho
                out_row[j] = Complex64::new(c.im, -c.re) - decay * row[j];
            }
        }
        // Feed from block m+1 (photon loss into this sector).
        if m < self.n_atoms {
            let dim_up = m + 2;
            let up_blk = &state[self.offsets[m + 1]..self.offsets[m + 1] + dim_up * dim_up];
            let fs = &self.feed_sqrt[m + 1];
            for i in 0..dim {
                let wi = 2.0 * lam * fs[i];
                let src = &up_blk[i * dim_up..i * dim_up + dim];
                let out_row = &mut out[i * dim..(i + 1) * dim];
                for j in 0..dim {
                    out_row[j] += (wi * fs[j]) * src[j];
                }
            }
        }
    }

    /// Full generator application on the flat buffer.
    pub fn apply_into(&self, state: &[Complex64], out: &mut [Complex64]) {
        debug_assert_eq!(state.len(), self.storage_len());
        debug_assert_eq!(out.len(), self.storage_len());
        if self.parallel {
            // Split the output into per-block slices; every block derivative
            // reads only the shared state.
            let mut slices: Vec<(usize, &mut [Complex64])> = Vec::with_capacity(self.n_atoms + 1);
            let mut rest = out;
            for m in 0..=self.n_atoms {
                let dim = m + 1;
                let (head, tail) = rest.split_at_mut(dim * dim);
                slices.push((m, head));
                rest = tail;
            }
            slices
                .into_par_iter()
                .for_each(|(m, out_blk)| self.block_derivative(m, state, out_blk));
        } else {
            for m in 0..=self.n_atoms {
                let out_blk = &mut out[self.offsets[m]..self.offsets[m + 1]];
                self.block_derivative(m, state, out_blk);
            }
        }
    }

    /// Spec'd allocating form of the generator.
    pub fn apply_generator(&self, rho: &BlockDensityMatrix) -> BlockDensityMatrix {
        let mut out = BlockDensityMatrix::zeros(self.n_atoms);
        let mut flat = out.into_flat();
        self.apply_into(rho.as_flat(), &mut flat);
        out = BlockDensityMatrix::from_flat(self.n_atoms, flat);
        out
    }

    /// Radiated intensity `I = -omega0 Tr[n rho']` without forming the full
    /// derivative: the damping terms are trace-orthogonal to the atomic
    /// number operator, so only the commutator contributes, and that reduces
    /// to the first off-diagonal of every block:
    /// `I = -2 omega0 sum_M sum_k hop_M[k] Im rho^{(M)}_{k,k+1}`.
    pub fn intensity_from_flat(&self, state: &[Complex64]) -> f64 {
        let mut acc = 0.0;
        for m in 1..=self.n_atoms {
            let dim = m + 1;
            let blk = &state[self.offsets[m]..self.offsets[m] + dim * dim];
            let hop = &self.hops[m];
            let mut s = 0.0;
            for k in 0..m {
                s += hop[k] * blk[k * dim + k + 1].im;
            }
            acc += s;
        }
        -2.0 * self.omega0 * acc
    }

    pub fn intensity_from_generator(&self, rho: &BlockDensityMatrix) -> f64 {
        self.intensity_from_flat(rho.as_flat())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pseudomode::state::trace_flat;

    const G0: f64 = 1e-3;

    fn liou(n: usize, lambda_over_g0: f64) -> BlockLiouvillian {
        build_liouvillian(&SystemParams::new(n, G0, lambda_over_g0 * G0), DEFAULT_MEMORY_BUDGET)
            .unwrap()
    }

    #[test]
    fn single_atom_hopping_element() {
        let l = liou(1, 5.0);
        assert_eq!(l.hops(0).len(), 0);
        assert_eq!(l.hops(1).len(), 1);
        assert!((l.hops(1)[0] - G0 / 2f64.sqrt()).abs() < 1e-18);
    }

    #[test]
    fn two_atom_hopping_elements() {
        let l = liou(2, 1.0);
        // Block 2 ladder: between (i=0, l=2) and (i=1, l=1): sqrt(1*2)*sqrt(2);
        // between (i=1, l=1) and (i=2, l=0): sqrt(2*1)*sqrt(1).
        let g = G0 / 2f64.sqrt();
        let h = l.hops(2);
        assert!((h[0] - g * (2f64).sqrt() * (2f64).sqrt()).abs() < 1e-18);
        assert!((h[1] - g * (2f64).sqrt()).abs() < 1e-18);
        // Block 1: single excitation shared between atoms and mode.
        let h1 = l.hops(1);
        assert!((h1[0] - g * (2f64).sqrt()).abs() < 1e-18);
    }

    #[test]
    fn capacity_error_reports_bytes() {
        let p = SystemParams::new(1000, G0, G0);
        let err = build_liouvillian(&p, 1 << 30).unwrap_err();
        match err {
            PseudomodeError::Capacity { n_atoms, required_bytes, budget_bytes } => {
                assert_eq!(n_atoms, 1000);
                assert!(required_bytes > budget_bytes);
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn generator_conserves_trace_pointwise() {
        let l = liou(4, 0.7);
        // A state with weight spread over several blocks and coherences.
        let mut rho = BlockDensityMatrix::all_excited(4);
        let mut d1 = vec![Complex64::ZERO; l.storage_len()];
        l.apply_into(rho.as_flat(), &mut d1);
        // Walk a few Euler steps to populate lower blocks, then re-check.
        let mut flat = rho.clone().into_flat();
        for _ in 0..50 {
            l.apply_into(&flat, &mut d1);
            for (y, d) in flat.iter_mut().zip(&d1) {
                *y += 5.0 * d;
            }
        }
        rho = BlockDensityMatrix::from_flat(4, flat);
        let deriv = l.apply_generator(&rho);
        let offsets = block_offsets(4);
        let tr = trace_flat(deriv.as_flat(), &offsets, 4);
        assert!(tr.abs() < 1e-12, "trace derivative {tr}");
    }

    #[test]
    fn lossless_generator_conserves_joint_excitation() {
        let l = liou(3, 0.0);
        let mut flat = BlockDensityMatrix::all_excited(3).into_flat();
        let mut d = vec![Complex64::ZERO; l.storage_len()];
        for _ in 0..40 {
            l.apply_into(&flat, &mut d);
            for (y, dv) in flat.iter_mut().zip(&d) {
                *y += 3.0 * dv;
            }
        }
        l.apply_into(&flat, &mut d);
        let deriv = BlockDensityMatrix::from_flat(3, d.clone());
        assert!(deriv.expectation_total().abs() < 1e-12);
    }

    #[test]
    fn damping_drains_joint_excitation_at_the_photon_rate() {
        let l = liou(3, 2.0);
        let mut flat = BlockDensityMatrix::all_excited(3).into_flat();
        let mut d = vec![Complex64::ZERO; l.storage_len()];
        for _ in 0..30 {
            l.apply_into(&flat, &mut d);
            for (y, dv) in flat.iter_mut().zip(&d) {
                *y += 2.0 * dv;
            }
        }
        let rho = BlockDensityMatrix::from_flat(3, flat.clone());
        l.apply_into(&flat, &mut d);
        let deriv = BlockDensityMatrix::from_flat(3, d);
        let expect = -2.0 * l.lambda * rho.expectation_photons();
        assert!(
            (deriv.expectation_total() - expect).abs() < 1e-12 * expect.abs().max(1e-12),
            "{} vs {}",
            deriv.expectation_total(),
            expect
        );
    }

    #[test]
    fn single_excited_atom_derivative_matches_hand_computation() {
        // rho = |e, 0><e, 0|: the only motion is the coherent swap into the
        // photon sector, d rho = -i [H, rho] with a 2x2 block-1 commutator.
        let l = liou(1, 3.0);
        let rho = BlockDensityMatrix::all_excited(1);
        let deriv = l.apply_generator(&rho);
        let g = G0 / 2f64.sqrt();
        // Block 1 basis: row 0 = (atom ground, 1 photon), row 1 = (excited, 0).
        assert!((deriv.entry(1, 0, 1) - Complex64::new(0.0, -g)).norm() < 1e-18);
        assert!((deriv.entry(1, 1, 0) - Complex64::new(0.0, g)).norm() < 1e-18);
        assert!(deriv.entry(1, 0, 0).norm() < 1e-18);
        assert!(deriv.entry(1, 1, 1).norm() < 1e-18);
        assert!(deriv.entry(0, 0, 0).norm() < 1e-18);
    }

    #[test]
    fn excited_photon_pair_feeds_the_block_below() {
        // Put weight on (atom excited, 1 photon) inside block 2 of N = 1...
        // for N = 1 block indices stop at 1, so use N = 2 and occupy
        // (i = 1, l = 1) in block 2. Photon damping must feed block 1 at
        // (i = 1, j = 1) with weight 2 lambda * 1 and drain the source at
        // 2 lambda.
        let l = liou(2, 4.0);
        let mut rho = BlockDensityMatrix::zeros(2);
        let mut flat = rho.into_flat();
        let offsets = block_offsets(2);
        flat[offsets[2] + 1 * 3 + 1] = Complex64::ONE;
        rho = BlockDensityMatrix::from_flat(2, flat);
        let deriv = l.apply_generator(&rho);
        let lam = 4.0 * G0;
        assert!((deriv.entry(1, 1, 1).re - 2.0 * lam).abs() < 1e-15);
        assert!((deriv.entry(2, 1, 1).re + 2.0 * lam).abs() < 1e-15);
    }

    #[test]
    fn intensity_vanishes_for_stationary_and_initial_states() {
        let l = liou(3, 1.0);
        let rho0 = BlockDensityMatrix::all_excited(3);
        assert_eq!(l.intensity_from_generator(&rho0), 0.0);
        let ground = BlockDensityMatrix::zeros(3);
        let mut flat = ground.into_flat();
        flat[0] = Complex64::ONE; // block 0 = ground (x) vacuum
        let ground = BlockDensityMatrix::from_flat(3, flat);
        assert_eq!(l.intensity_from_generator(&ground), 0.0);
    }

    #[test]
    fn intensity_equals_trace_of_number_weighted_derivative() {
        // Full-derivative route: I = -omega0 sum_i i (d rho)_{ii}.
        let l = liou(3, 0.8);
        let mut flat = BlockDensityMatrix::all_excited(3).into_flat();
        let mut d = vec![Complex64::ZERO; l.storage_len()];
        for _ in 0..25 {
            l.apply_into(&flat, &mut d);
            for (y, dv) in flat.iter_mut().zip(&d) {
                *y += 4.0 * dv;
            }
        }
        let rho = BlockDensityMatrix::from_flat(3, flat);
        let deriv = l.apply_generator(&rho);
        let direct = -l.omega0 * deriv.expectation_n();
        let fast = l.intensity_from_generator(&rho);
        assert!((fast - direct).abs() < 1e-14 * direct.abs().max(1e-12), "{fast} vs {direct}");
    }
}
