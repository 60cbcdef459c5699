//! Numerical verification of the finite-group-velocity bound
//! `sum_x exp(m|x-y|) |U(t,0;x,y)| <= exp(v t)`.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::evolve::{evolve_recorded, propagator, EvolutionSpec, Integrator};
use crate::kernel::HoppingKernel;
use crate::lattice::Lattice;
use crate::noise::{trajectory_stream, NoiseProcess};
use crate::wavefunction::WaveFunction;

#[derive(Debug, Clone, Copy, serde::Serialize)]
pub struct LrRow {
    pub realization: usize,
    pub t: f64,
    pub y: usize,
    pub ratio: f64,
}

/// Weighted propagator-column sums over noise realizations.
#[derive(Debug, Clone, serde::Serialize)]
pub struct LrReport {
    pub m: f64,
    pub velocity: f64,
    pub rows: Vec<LrRow>,
    pub max_ratio: f64,
}

fn realization_rows(
    kernel: &HoppingKernel,
    process: &NoiseProcess,
    lattice: &Lattice,
    m: f64,
    t_grid: &[f64],
    velocity: f64,
    weight_by_diff: &[f64],
    master_seed: u64,
    realization: usize,
) -> Result<Vec<LrRow>> {
    let t_max = t_grid.last().copied().unwrap();
    let psi0 = WaveFunction::delta(lattice.clone(), &vec![0; lattice.dim()])?;
    let spec = EvolutionSpec::new(kernel.clone(), process.clone(), t_max, vec![t_max])?
        .with_integrator(Integrator::DenseExponential);
    let (_, path) = evolve_recorded(&psi0, &spec, trajectory_stream(master_seed, realization as u64))?;
    let n = lattice.len();
    let mut rows = Vec::with_capacity(t_grid.len() * n);
    let _ = m;
    for &t in t_grid {
        let u: Array2<C64> = propagator(kernel, lattice, &path, 0.0, t)?.matrix().clone();
        let bound = (velocity * t).exp();
        for y in 0..n {
            let yc = lattice.coord(y);
            let mut sum = 0.0;
            for x in 0..n {
                let xc = lattice.coord(x);
                let diff: Vec<i64> = xc.iter().zip(&yc).map(|(&a, &b)| a - b).collect();
                sum += weight_by_diff[lattice.index(&diff)] * u[[x, y]].norm();
            }
            rows.push(LrRow { realization, t, y, ratio: sum / bound });
        }
    }
    Ok(rows)
}

/// Check the bound for `n_realizations` independent noise paths, all `y`, and
/// every `t` in the grid.
pub fn lr_check(
    kernel: &HoppingKernel,
    process: &NoiseProcess,
    lattice: &Lattice,
    m: f64,
    t_grid: &[f64],
    n_realizations: usize,
    master_seed: u64,
) -> Result<LrReport> {
    if t_grid.is_empty() || n_realizations == 0 {
        return Err(Error::InvalidParameter("need a time grid and at least one realization".into()));
    }
    let mut grid = t_grid.to_vec();
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if grid[0] < 0.0 {
        return Err(Error::InvalidParameter("negative times in the grid".into()));
    }
    let velocity = kernel.group_velocity(m);
    let t_max = *grid.last().unwrap();
    let min_l = lattice.extents().iter().copied().min().unwrap() as f64;
    if t_max * velocity >= 0.4 * min_l {
        return Err(Error::GuardViolated(format!(
            "t v = {:.3} reaches 0.4 L = {:.3}; wrap would contaminate the weighted sums",
            t_max * velocity,
            0.4 * min_l
        )));
    }
    // exp(m |d|) indexed by the wrapped difference site
    let weight_by_diff: Vec<f64> =
        (0..lattice.len()).map(|d| (m * lattice.min_image_norm(d)).exp()).collect();

    let run = |r: usize| {
        realization_rows(
            kernel,
            process,
            lattice,
            m,
            &grid,
            velocity,
            &weight_by_diff,
            master_seed,
            r,
        )
    };
    let results: Vec<Result<Vec<LrRow>>>;
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        results = (0..n_realizations).into_par_iter().map(run).collect();
    }
    #[cfg(not(feature = "parallel"))]
    {
        results = (0..n_realizations).map(run).collect();
    }
    let mut rows = Vec::new();
    for r in results {
        rows.extend(r?);
    }
    let max_ratio = rows.iter().map(|r| r.ratio).fold(0.0f64, f64::max);
    Ok(LrReport { m, velocity, rows, max_ratio })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::DiscreteMeasure;

    #[test]
    fn identity_propagator_has_unit_ratio() {
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let lattice = Lattice::line(16).unwrap();
        let process = NoiseProcess::frozen(DiscreteMeasure::bernoulli_pm1(0.5).unwrap());
        let rep = lr_check(&kernel, &process, &lattice, 0.5, &[0.0, 0.5], 2, 3).unwrap();
        for row in rep.rows.iter().filter(|r| r.t == 0.0) {
            assert_eq!(row.ratio, 1.0);
        }
        assert!(rep.max_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn free_evolution_ratio_strictly_below_one() {
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let lattice = Lattice::line(24).unwrap();
        let process = NoiseProcess::frozen(DiscreteMeasure::point(0.0));
        let rep = lr_check(&kernel, &process, &lattice, 0.5, &[1.0], 1, 1).unwrap();
        let r0 = rep.rows.iter().find(|r| r.y == 0).unwrap();
        assert!(r0.ratio < 1.0, "free ratio {}", r0.ratio);
        assert!(rep.max_ratio <= 1.0 + 1e-9);
    }

    #[test]
    fn flip_realizations_respect_bound_for_two_weights() {
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let lattice = Lattice::line(20).unwrap();
        let process = NoiseProcess::flip(0.5, 0.5).unwrap();
        for m in [0.5, 0.25] {
            let rep = lr_check(&kernel, &process, &lattice, m, &[0.5, 1.0], 5, 7).unwrap();
            assert!(rep.max_ratio <= 1.0 + 1e-9, "m={m}: max ratio {}", rep.max_ratio);
            assert!((rep.velocity - 2.0 * m.exp()).abs() < 1e-14);
        }
    }

    #[test]
    fn wrap_guard_fires() {
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let lattice = Lattice::line(8).unwrap();
        let process = NoiseProcess::flip(0.5, 0.5).unwrap();
        assert!(matches!(
            lr_check(&kernel, &process, &lattice, 0.5, &[2.0], 1, 1),
            Err(Error::GuardViolated(_))
        ));
    }
}
