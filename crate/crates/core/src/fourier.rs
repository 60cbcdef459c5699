//! Multi-axis FFT on the flattened lattice array and the hopping symbol grid.

use std::sync::Arc;

use num_complex::Complex64 as C64;
use rustfft::Fft;

use crate::error::{Error, Result};
use crate::kernel::HoppingKernel;
use crate::lattice::Lattice;

/// Forward/inverse FFT plans for one lattice, applied axis by axis.
pub struct LatticeFft {
    extents: Vec<usize>,
    forward: Vec<Arc<dyn Fft<f64>>>,
    inverse: Vec<Arc<dyn Fft<f64>>>,
    scratch: Vec<C64>,
}

impl LatticeFft {
    pub fn new(lattice: &Lattice) -> Self {
        let mut planner = rustfft::FftPlanner::new();
        let forward = lattice.extents().iter().map(|&l| planner.plan_fft_forward(l)).collect();
        let inverse = lattice.extents().iter().map(|&l| planner.plan_fft_inverse(l)).collect();
        let max = lattice.extents().iter().copied().max().unwrap_or(1);
        LatticeFft {
            extents: lattice.extents().to_vec(),
            forward,
            inverse,
            scratch: vec![C64::new(0.0, 0.0); max],
        }
    }

    fn transform(&mut self, data: &mut [C64], inverse: bool) {
        let total: usize = self.extents.iter().product();
        debug_assert_eq!(data.len(), total);
        let mut stride = 1usize;
        for (axis, &l) in self.extents.iter().enumerate() {
            let plan = if inverse { &self.inverse[axis] } else { &self.forward[axis] };
            let lines = total / l;
            for line in 0..lines {
                // lanes along `axis`: base index fixes the other coordinates
                let block = line / stride;
                let rem = line % stride;
                let base = block * stride * l + rem;
                for j in 0..l {
                    self.scratch[j] = data[base + j * stride];
                }
                plan.process(&mut self.scratch[..l]);
                for j in 0..l {
                    data[base + j * stride] = self.scratch[j];
                }
            }
            stride *= l;
        }
        if inverse {
            let scale = 1.0 / total as f64;
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    pub fn forward(&mut self, data: &mut [C64]) {
        self.transform(data, false);
    }

    /// Inverse transform, normalized so `inverse(forward(x)) = x`.
    pub fn inverse(&mut self, data: &mut [C64]) {
        self.transform(data, true);
    }
}

/// Values of the hopping symbol on the dual grid `k_j = 2 pi n_j / L_j`,
/// ordered like the site index.
///
/// Requires a self-adjoint kernel so the symbol is real (the split-step
/// factor stays exactly unitary).
pub fn symbol_grid(kernel: &HoppingKernel, lattice: &Lattice) -> Result<Vec<f64>> {
    if kernel.dim() != lattice.dim() {
        return Err(Error::DimensionMismatch(format!(
            "kernel dimension {} vs lattice dimension {}",
            kernel.dim(),
            lattice.dim()
        )));
    }
    let n = lattice.len();
    let mut grid = Vec::with_capacity(n);
    for idx in 0..n {
        let coord = lattice.coord(idx);
        let k: Vec<f64> = coord
            .iter()
            .zip(lattice.extents())
            .map(|(&c, &l)| 2.0 * std::f64::consts::PI * c as f64 / l as f64)
            .collect();
        let s = kernel.symbol(&k);
        if s.im.abs() > 1e-10 * (1.0 + s.norm()) {
            return Err(Error::InvalidParameter(format!(
                "hopping symbol is not real at k = {k:?} (im = {}); kernel must be self-adjoint",
                s.im
            )));
        }
        grid.push(s.re);
    }
    Ok(grid)
}
