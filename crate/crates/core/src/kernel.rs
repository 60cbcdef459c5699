//! Translation-invariant hopping kernels and the hopping operator.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::lattice::Lattice;
use crate::wavefunction::WaveFunction;

/// A finitely supported hopping kernel `h(zeta)` together with the
/// exponential weight `m` it is declared bounded for.
#[derive(Debug, Clone)]
pub struct HoppingKernel {
    dim: usize,
    entries: Vec<(Vec<i64>, C64)>,
    weight: f64,
}

/// Result of checking the three kernel assumptions.
#[derive(Debug, Clone, serde::Serialize)]
pub struct AssumptionReport {
    /// `h(-zeta) = conj(h(zeta))` holds exactly for every stored entry.
    pub self_adjoint: bool,
    /// Finite support, so every exponential sum converges; always true here.
    pub exponentially_bounded: bool,
    /// The group-velocity constant at the kernel's weight.
    pub group_velocity: f64,
    /// The support of `h` spans all of `R^d`.
    pub non_degenerate: bool,
}

impl AssumptionReport {
    pub fn all_pass(&self) -> bool {
        self.self_adjoint && self.exponentially_bounded && self.non_degenerate
    }
}

impl HoppingKernel {
    /// Build a kernel from explicit `(offset, amplitude)` entries.
    ///
    /// Zero-amplitude entries are dropped; duplicate offsets are rejected.
    pub fn new(dim: usize, entries: Vec<(Vec<i64>, C64)>, weight: f64) -> Result<Self> {
        if weight <= 0.0 {
            return Err(Error::InvalidParameter(format!("kernel weight m must be positive, got {weight}")));
        }
        let mut kept: Vec<(Vec<i64>, C64)> = Vec::new();
        for (off, amp) in entries {
            if off.len() != dim {
                return Err(Error::DimensionMismatch(format!(
                    "offset {off:?} has {} components, kernel dimension is {dim}",
                    off.len()
                )));
            }
            if amp == C64::new(0.0, 0.0) {
                continue;
            }
            if kept.iter().any(|(o, _)| o == &off) {
                return Err(Error::InvalidParameter(format!("duplicate kernel offset {off:?}")));
            }
            kept.push((off, amp));
        }
        Ok(HoppingKernel { dim, entries: kept, weight })
    }

    /// The discrete Laplacian stencil `h(+-e_i) = 1`.
    pub fn laplacian(dim: usize, weight: f64) -> Result<Self> {
        let mut entries = Vec::new();
        for axis in 0..dim {
            for sign in [1i64, -1] {
                let mut off = vec![0i64; dim];
                off[axis] = sign;
                entries.push((off, C64::new(1.0, 0.0)));
            }
        }
        HoppingKernel::new(dim, entries, weight)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(Vec<i64>, C64)] {
        &self.entries
    }

    pub fn weight_m(&self) -> f64 {
        self.weight
    }

    /// Fourier multiplier `sum_zeta h(zeta) exp(-i k.zeta)`.
    pub fn symbol(&self, k: &[f64]) -> C64 {
        debug_assert_eq!(k.len(), self.dim);
        let mut s = C64::new(0.0, 0.0);
        for (off, amp) in &self.entries {
            let phase: f64 = off.iter().zip(k).map(|(&o, &ki)| o as f64 * ki).sum();
            s += amp * C64::new(0.0, -phase).exp();
        }
        s
    }

    /// Group-velocity constant `v = sum_{zeta != 0} exp(m |zeta|) |h(zeta)|`
    /// with the Euclidean norm.
    pub fn group_velocity(&self, m: f64) -> f64 {
        self.entries
            .iter()
            .filter(|(off, _)| off.iter().any(|&o| o != 0))
            .map(|(off, amp)| {
                let norm = off.iter().map(|&o| (o * o) as f64).sum::<f64>().sqrt();
                (m * norm).exp() * amp.norm()
            })
            .sum()
    }

    /// Check self-adjointness, exponential boundedness and non-degeneracy.
    pub fn check_assumptions(&self, m: f64) -> AssumptionReport {
        let self_adjoint = self.entries.iter().all(|(off, amp)| {
            let neg: Vec<i64> = off.iter().map(|&o| -o).collect();
            self.entries
                .iter()
                .find(|(o, _)| o == &neg)
                .is_some_and(|(_, a)| *a == amp.conj())
        });
        AssumptionReport {
            self_adjoint,
            exponentially_bounded: true,
            group_velocity: self.group_velocity(m),
            non_degenerate: self.support_rank() == self.dim,
        }
    }

    /// Rank of the integer span of the support offsets.
    fn support_rank(&self) -> usize {
        let mut rows: Vec<Vec<f64>> = self
            .entries
            .iter()
            .map(|(off, _)| off.iter().map(|&o| o as f64).collect())
            .collect();
        let mut rank = 0usize;
        for col in 0..self.dim {
            let pivot = (rank..rows.len()).max_by(|&a, &b| {
                rows[a][col].abs().partial_cmp(&rows[b][col].abs()).unwrap()
            });
            let Some(p) = pivot else { break };
            if rows[p][col].abs() < 1e-12 {
                continue;
            }
            rows.swap(rank, p);
            let (head, tail) = rows.split_at_mut(rank + 1);
            let prow = &head[rank];
            for row in tail {
                let f = row[col] / prow[col];
                for c in col..self.dim {
                    row[c] -= f * prow[c];
                }
            }
            rank += 1;
        }
        rank
    }

    /// Error unless every offset satisfies `2 max|zeta_i| < L_i`.
    pub fn check_fits(&self, lattice: &Lattice) -> Result<()> {
        if lattice.dim() != self.dim {
            return Err(Error::DimensionMismatch(format!(
                "kernel dimension {} vs lattice dimension {}",
                self.dim,
                lattice.dim()
            )));
        }
        for (off, _) in &self.entries {
            for (&o, &l) in off.iter().zip(lattice.extents()) {
                if 2 * o.unsigned_abs() as usize >= l {
                    return Err(Error::OffsetTooLarge {
                        offset: off.clone(),
                        extents: lattice.extents().to_vec(),
                    });
                }
            }
        }
        Ok(())
    }

    /// Apply the hopping operator: `(K psi)(x) = sum_zeta h(zeta) psi(x - zeta)`.
    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        let lattice = psi.lattice();
        self.check_fits(lattice)?;
        let mut out = vec![C64::new(0.0, 0.0); lattice.len()];
        let amps = psi.amplitudes();
        for (off, amp) in &self.entries {
            let neg: Vec<i64> = off.iter().map(|&o| -o).collect();
            for x in 0..lattice.len() {
                out[x] += amp * amps[lattice.shift(x, &neg)];
            }
        }
        WaveFunction::from_amplitudes(lattice.clone(), out, None)
    }

    /// Dense matrix of the hopping operator on a lattice.
    pub fn dense_matrix(&self, lattice: &Lattice) -> Result<ndarray::Array2<C64>> {
        self.check_fits(lattice)?;
        let n = lattice.len();
        let mut k = ndarray::Array2::zeros((n, n));
        for (off, amp) in &self.entries {
            let neg: Vec<i64> = off.iter().map(|&o| -o).collect();
            for x in 0..n {
                k[[x, lattice.shift(x, &neg)]] += *amp;
            }
        }
        Ok(k)
    }
}
