//! Monte Carlo estimation over independent trajectories.
//!
//! Trajectories use counter-derived RNG streams and are accumulated in
//! fixed-size chunks that are merged in chunk order, so estimates are
//! bit-identical for a given master seed regardless of thread count or
//! whether the parallel feature is enabled.

use ndarray::Array2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::evolve::{evolve, EvolutionSpec};
use crate::kernel::HoppingKernel;
use crate::lattice::Lattice;
use crate::noise::trajectory_stream;
use crate::quadrature::gaussian_expectation;
use crate::wavefunction::{ExpProfile, WaveFunction};

pub const DEFAULT_EPS_BOUNDARY: f64 = 1e-6;
const CHUNK: u64 = 64;

/// Options for an ensemble run.
#[derive(Debug, Clone)]
pub struct EnsembleOptions {
    /// Boundary-mass threshold; exceeding it flags the estimate invalid.
    pub eps_boundary: f64,
    /// Complex arguments at which per-trajectory characteristic-function
    /// statistics are accumulated.
    pub cf_points: Vec<Vec<C64>>,
    /// Run trajectories on the rayon pool (no effect on the result).
    pub parallel: bool,
}

impl Default for EnsembleOptions {
    fn default() -> Self {
        EnsembleOptions {
            eps_boundary: DEFAULT_EPS_BOUNDARY,
            cf_points: Vec::new(),
            parallel: cfg!(feature = "parallel"),
        }
    }
}

/// Streaming mean/variance accumulator over a fixed number of slots.
#[derive(Debug, Clone)]
struct Welford {
    n: u64,
    mean: Vec<f64>,
    m2: Vec<f64>,
}

impl Welford {
    fn new(len: usize) -> Self {
        Welford { n: 0, mean: vec![0.0; len], m2: vec![0.0; len] }
    }

    fn push(&mut self, values: &[f64]) {
        self.n += 1;
        let inv = 1.0 / self.n as f64;
        for ((m, s), &v) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(values) {
            let d = v - *m;
            *m += d * inv;
            *s += d * (v - *m);
        }
    }

    fn merge(&mut self, other: &Welford) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            self.n = other.n;
            self.mean.copy_from_slice(&other.mean);
            self.m2.copy_from_slice(&other.m2);
            return;
        }
        let (na, nb) = (self.n as f64, other.n as f64);
        let n = na + nb;
        for i in 0..self.mean.len() {
            let d = other.mean[i] - self.mean[i];
            self.mean[i] += d * (nb / n);
            self.m2[i] += other.m2[i] + d * d * (na * nb / n);
        }
        self.n += other.n;
    }

    fn std_err(&self, i: usize) -> f64 {
        if self.n > 1 {
            (self.m2[i] / (self.n as f64 * (self.n as f64 - 1.0))).sqrt()
        } else {
            0.0
        }
    }
}

/// Per-chunk accumulator of all tracked statistics.
#[derive(Debug, Clone)]
struct Accumulator {
    density: Vec<Welford>,
    abs_amp: Vec<Welford>,
    boundary: Welford,
    cf: Vec<Welford>, // per cf point: slots [2 * time] = re, [2 * time + 1] = im
}

impl Accumulator {
    fn new(n_times: usize, n_sites: usize, n_cf: usize) -> Self {
        Accumulator {
            density: (0..n_times).map(|_| Welford::new(n_sites)).collect(),
            abs_amp: (0..n_times).map(|_| Welford::new(n_sites)).collect(),
            boundary: Welford::new(n_times),
            cf: (0..n_cf).map(|_| Welford::new(2 * n_times)).collect(),
        }
    }

    fn merge(&mut self, other: &Accumulator) {
        for (a, b) in self.density.iter_mut().zip(&other.density) {
            a.merge(b);
        }
        for (a, b) in self.abs_amp.iter_mut().zip(&other.abs_amp) {
            a.merge(b);
        }
        self.boundary.merge(&other.boundary);
        for (a, b) in self.cf.iter_mut().zip(&other.cf) {
            a.merge(b);
        }
    }
}

/// Characteristic-function statistics accumulated per trajectory at one
/// complex argument.
#[derive(Debug, Clone)]
pub struct CfSeries {
    pub z: Vec<C64>,
    /// Sample mean per snapshot time.
    pub mean: Vec<C64>,
    /// Standard error of the complex mean per time,
    /// `sqrt(se_re^2 + se_im^2)`.
    pub std_err: Vec<f64>,
}

/// Monte Carlo estimate of the mean density `E|psi_t(x)|^2` with standard
/// errors and boundary-mass diagnostics.
#[derive(Debug, Clone)]
pub struct DensityEstimate {
    lattice: Lattice,
    times: Vec<f64>,
    mean: Array2<f64>,
    std_err: Array2<f64>,
    mean_abs: Array2<f64>,
    std_err_abs: Array2<f64>,
    boundary_fraction: Vec<f64>,
    cf_series: Vec<CfSeries>,
    n_traj: u64,
    psi0_norm_sq: f64,
    psi0_profile: Option<ExpProfile>,
    eps_boundary: f64,
    master_seed: u64,
}

impl DensityEstimate {
    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// Mean density, indexed `[time, site]`.
    pub fn mean(&self) -> &Array2<f64> {
        &self.mean
    }

    pub fn std_err(&self) -> &Array2<f64> {
        &self.std_err
    }

    /// Mean modulus `E|psi_t(x)|`, indexed `[time, site]`.
    pub fn mean_abs(&self) -> &Array2<f64> {
        &self.mean_abs
    }

    pub fn std_err_abs(&self) -> &Array2<f64> {
        &self.std_err_abs
    }

    /// Mean mass on sites with any `|x_i| > 0.4 L_i`, per time.
    pub fn boundary_fraction(&self) -> &[f64] {
        &self.boundary_fraction
    }

    pub fn cf_series(&self) -> &[CfSeries] {
        &self.cf_series
    }

    pub fn n_traj(&self) -> u64 {
        self.n_traj
    }

    pub fn psi0_norm_sq(&self) -> f64 {
        self.psi0_norm_sq
    }

    pub fn psi0_profile(&self) -> Option<ExpProfile> {
        self.psi0_profile
    }

    pub fn eps_boundary(&self) -> f64 {
        self.eps_boundary
    }

    pub fn master_seed(&self) -> u64 {
        self.master_seed
    }

    /// The wraparound-contamination flag is clean.
    pub fn is_valid(&self) -> bool {
        self.boundary_fraction.iter().all(|&b| b <= self.eps_boundary)
    }

    pub fn ensure_valid(&self) -> Result<()> {
        if self.is_valid() {
            Ok(())
        } else {
            let worst = self.boundary_fraction.iter().cloned().fold(0.0f64, f64::max);
            Err(Error::InvalidEstimate(format!(
                "boundary mass {worst:.3e} exceeds threshold {:.3e}",
                self.eps_boundary
            )))
        }
    }

    fn time_index(&self, t: f64) -> Result<usize> {
        self.times
            .iter()
            .position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .ok_or_else(|| Error::InvalidParameter(format!("no snapshot at time {t}")))
    }
}

fn boundary_mask(lattice: &Lattice) -> Vec<bool> {
    (0..lattice.len())
        .map(|i| {
            lattice
                .minimal_image(i)
                .iter()
                .zip(lattice.extents())
                .any(|(&c, &l)| c.unsigned_abs() as f64 > 0.4 * l as f64)
        })
        .collect()
}

fn cf_weights(lattice: &Lattice, z: &[C64]) -> Vec<C64> {
    (0..lattice.len())
        .map(|i| {
            let x = lattice.minimal_image(i);
            let phase: C64 = x
                .iter()
                .zip(z)
                .map(|(&xi, &zi)| C64::new(0.0, 1.0) * zi * xi as f64)
                .sum();
            phase.exp()
        })
        .collect()
}

fn run_chunk(
    psi0: &WaveFunction,
    spec: &EvolutionSpec,
    range: std::ops::Range<u64>,
    master_seed: u64,
    mask: &[bool],
    weights: &[Vec<C64>],
    n_times: usize,
) -> Result<Accumulator> {
    let n_sites = psi0.lattice().len();
    let mut acc = Accumulator::new(n_times, n_sites, weights.len());
    let mut dens = vec![0.0; n_sites];
    let mut absamp = vec![0.0; n_sites];
    let mut bvals = vec![0.0; n_times];
    let mut cfvals = vec![vec![0.0; 2 * n_times]; weights.len()];
    for traj in range {
        let trajectory = evolve(psi0, spec, trajectory_stream(master_seed, traj))?;
        for (ti, (_, wf)) in trajectory.snapshots.iter().enumerate() {
            let amps = wf.amplitudes();
            let mut bmass = 0.0;
            for (i, a) in amps.iter().enumerate() {
                dens[i] = a.norm_sqr();
                absamp[i] = a.norm();
                if mask[i] {
                    bmass += dens[i];
                }
            }
            acc.density[ti].push(&dens);
            acc.abs_amp[ti].push(&absamp);
            bvals[ti] = bmass;
            for (k, w) in weights.iter().enumerate() {
                let val: C64 = w.iter().zip(dens.iter()).map(|(wi, &d)| wi * d).sum();
                cfvals[k][2 * ti] = val.re;
                cfvals[k][2 * ti + 1] = val.im;
            }
        }
        acc.boundary.push(&bvals);
        for (k, vals) in cfvals.iter().enumerate() {
            acc.cf[k].push(vals);
        }
    }
    Ok(acc)
}

/// Run `n_traj` independent trajectories and accumulate statistics.
pub fn run_ensemble(
    psi0: &WaveFunction,
    spec: &EvolutionSpec,
    n_traj: u64,
    master_seed: u64,
    opts: &EnsembleOptions,
) -> Result<DensityEstimate> {
    if n_traj < 2 {
        return Err(Error::InvalidParameter(format!("need n_traj >= 2, got {n_traj}")));
    }
    let lattice = psi0.lattice().clone();
    let n_times = spec.snapshots().len();
    let mask = boundary_mask(&lattice);
    let weights: Vec<Vec<C64>> = opts.cf_points.iter().map(|z| cf_weights(&lattice, z)).collect();
    for z in &opts.cf_points {
        check_region(psi0.profile(), z)?;
    }

    let ranges: Vec<std::ops::Range<u64>> = (0..n_traj.div_ceil(CHUNK))
        .map(|c| (c * CHUNK)..((c + 1) * CHUNK).min(n_traj))
        .collect();

    let chunk_results: Vec<Result<Accumulator>>;
    #[cfg(feature = "parallel")]
    {
        if opts.parallel {
            use rayon::prelude::*;
            chunk_results = ranges
                .par_iter()
                .map(|r| run_chunk(psi0, spec, r.clone(), master_seed, &mask, &weights, n_times))
                .collect();
        } else {
            chunk_results = ranges
                .iter()
                .map(|r| run_chunk(psi0, spec, r.clone(), master_seed, &mask, &weights, n_times))
                .collect();
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        chunk_results = ranges
            .iter()
            .map(|r| run_chunk(psi0, spec, r.clone(), master_seed, &mask, &weights, n_times))
            .collect();
    }

    let mut total = Accumulator::new(n_times, lattice.len(), weights.len());
    for r in chunk_results {
        total.merge(&r?);
    }

    let n_sites = lattice.len();
    let mut mean = Array2::zeros((n_times, n_sites));
    let mut std_err = Array2::zeros((n_times, n_sites));
    let mut mean_abs = Array2::zeros((n_times, n_sites));
    let mut std_err_abs = Array2::zeros((n_times, n_sites));
    for ti in 0..n_times {
        for x in 0..n_sites {
            mean[[ti, x]] = total.density[ti].mean[x];
            std_err[[ti, x]] = total.density[ti].std_err(x);
            mean_abs[[ti, x]] = total.abs_amp[ti].mean[x];
            std_err_abs[[ti, x]] = total.abs_amp[ti].std_err(x);
        }
    }
    let cf_series = opts
        .cf_points
        .iter()
        .zip(&total.cf)
        .map(|(z, w)| CfSeries {
            z: z.clone(),
            mean: (0..n_times).map(|ti| C64::new(w.mean[2 * ti], w.mean[2 * ti + 1])).collect(),
            std_err: (0..n_times)
                .map(|ti| (w.std_err(2 * ti).powi(2) + w.std_err(2 * ti + 1).powi(2)).sqrt())
                .collect(),
        })
        .collect();

    Ok(DensityEstimate {
        lattice,
        times: spec.snapshots().to_vec(),
        mean,
        std_err,
        mean_abs,
        std_err_abs,
        boundary_fraction: total.boundary.mean.clone(),
        cf_series,
        n_traj,
        psi0_norm_sq: psi0.norm_sq(),
        psi0_profile: psi0.profile(),
        eps_boundary: opts.eps_boundary,
        master_seed,
    })
}

/// Position-moment series with linearly propagated standard errors.
#[derive(Debug, Clone)]
pub struct MomentSeries {
    pub times: Vec<f64>,
    pub orders: Vec<u32>,
    /// `values[p_index][time_index]`.
    pub values: Vec<Vec<f64>>,
    pub std_err: Vec<Vec<f64>>,
}

impl MomentSeries {
    pub fn value(&self, p: u32, t: f64) -> Option<(f64, f64)> {
        let pi = self.orders.iter().position(|&q| q == p)?;
        let ti = self.times.iter().position(|&s| (s - t).abs() <= 1e-12 * t.abs().max(1.0))?;
        Some((self.values[pi][ti], self.std_err[pi][ti]))
    }
}

/// `sum_x |x|^p rho_t(x)` with minimal-image `|x|`.
pub fn moments(est: &DensityEstimate, orders: &[u32]) -> Result<MomentSeries> {
    est.ensure_valid()?;
    let norms = est.lattice().min_image_norms();
    let mut values = Vec::with_capacity(orders.len());
    let mut errs = Vec::with_capacity(orders.len());
    for &p in orders {
        let w: Vec<f64> = norms.iter().map(|&r| r.powi(p as i32)).collect();
        let mut vals = Vec::with_capacity(est.times.len());
        let mut es = Vec::with_capacity(est.times.len());
        for ti in 0..est.times.len() {
            let v: f64 = (0..w.len()).map(|x| w[x] * est.mean[[ti, x]]).sum();
            let e: f64 = (0..w.len()).map(|x| w[x] * est.std_err[[ti, x]]).sum();
            vals.push(v);
            es.push(e);
        }
        values.push(vals);
        errs.push(es);
    }
    Ok(MomentSeries { times: est.times.clone(), orders: orders.to_vec(), values, std_err: errs })
}

fn check_region(profile: Option<ExpProfile>, z: &[C64]) -> Result<()> {
    let mu = profile.map(|p| p.mu).unwrap_or(0.0);
    for zi in z {
        if zi.im.abs() > 0.0 && zi.im.abs() >= mu {
            return Err(Error::OutsideRegion(format!(
                "|Im z| = {} not inside the analyticity strip (mu = {mu})",
                zi.im.abs()
            )));
        }
    }
    Ok(())
}

/// Characteristic-function values computed from the mean density.
#[derive(Debug, Clone)]
pub struct CharFnSeries {
    pub z: Vec<C64>,
    pub times: Vec<f64>,
    pub values: Vec<C64>,
    /// Linearly propagated error bars.
    pub std_err: Vec<f64>,
}

/// Evaluate `M_t(z) = sum_x exp(i z . x) rho_t(x)` from the density estimate.
pub fn char_fn(est: &DensityEstimate, z: &[C64]) -> Result<CharFnSeries> {
    if z.len() != est.lattice().dim() {
        return Err(Error::DimensionMismatch(format!(
            "z has {} components for a {}-dimensional lattice",
            z.len(),
            est.lattice().dim()
        )));
    }
    check_region(est.psi0_profile(), z)?;
    if z.iter().any(|zi| zi.im != 0.0) {
        est.ensure_valid()?;
    }
    let w = cf_weights(est.lattice(), z);
    let mut values = Vec::with_capacity(est.times.len());
    let mut errs = Vec::with_capacity(est.times.len());
    for ti in 0..est.times.len() {
        let v: C64 = w.iter().enumerate().map(|(x, wi)| wi * est.mean[[ti, x]]).sum();
        let e: f64 = w.iter().enumerate().map(|(x, wi)| wi.norm() * est.std_err[[ti, x]]).sum();
        values.push(v);
        errs.push(e);
    }
    Ok(CharFnSeries { z: z.to_vec(), times: est.times.clone(), values, std_err: errs })
}

/// One row per snapshot of the exponential-moment bounds.
#[derive(Debug, Clone)]
pub struct ExpMomentReport {
    pub mu: f64,
    pub lambda: f64,
    pub velocity: f64,
    pub times: Vec<f64>,
    /// `sup_x exp(mu|x|) E|psi_t(x)|` per time.
    pub sup_value: Vec<f64>,
    /// `A_mu exp(v t)` per time.
    pub sup_bound: Vec<f64>,
    /// `sum_x exp(lambda|x|) rho_t(x)` per time.
    pub sum_value: Vec<f64>,
    /// `||psi_0|| A_mu exp(v t) sum_x exp((lambda - mu)|x|)` per time.
    pub sum_bound: Vec<f64>,
    pub pass: Vec<bool>,
}

impl ExpMomentReport {
    pub fn all_pass(&self) -> bool {
        self.pass.iter().all(|&p| p)
    }
}

/// Check the exponential-moment bounds at a weight `lambda < mu`.
///
/// The group-velocity constant is evaluated at the profile weight `mu`
/// (valid since `mu <= m`), which is the tight version of the bound.
pub fn exp_moment_check(
    est: &DensityEstimate,
    lambda: f64,
    kernel: &HoppingKernel,
) -> Result<ExpMomentReport> {
    let profile = est.psi0_profile().ok_or_else(|| {
        Error::InvalidParameter("initial state carries no exponential-profile metadata".into())
    })?;
    if !profile.mu.is_finite() {
        return Err(Error::InvalidParameter(
            "exponential-moment check needs a finite profile weight mu".into(),
        ));
    }
    if profile.mu > kernel.weight_m() {
        return Err(Error::InvalidParameter(format!(
            "profile weight mu = {} exceeds the kernel weight m = {}",
            profile.mu,
            kernel.weight_m()
        )));
    }
    if !(lambda < profile.mu) {
        return Err(Error::InvalidParameter(format!(
            "need lambda < mu, got lambda = {lambda}, mu = {}",
            profile.mu
        )));
    }
    let v = kernel.group_velocity(profile.mu);
    let norms = est.lattice().min_image_norms();
    let geom: f64 = norms.iter().map(|&r| ((lambda - profile.mu) * r).exp()).sum();
    let psi_norm = est.psi0_norm_sq().sqrt();
    let mut report = ExpMomentReport {
        mu: profile.mu,
        lambda,
        velocity: v,
        times: est.times().to_vec(),
        sup_value: Vec::new(),
        sup_bound: Vec::new(),
        sum_value: Vec::new(),
        sum_bound: Vec::new(),
        pass: Vec::new(),
    };
    for (ti, &t) in est.times().iter().enumerate() {
        let sup = norms
            .iter()
            .enumerate()
            .map(|(x, &r)| (profile.mu * r).exp() * est.mean_abs()[[ti, x]])
            .fold(0.0f64, f64::max);
        let sup_bound = profile.a_mu * (v * t).exp();
        let sum: f64 = norms
            .iter()
            .enumerate()
            .map(|(x, &r)| (lambda * r).exp() * est.mean()[[ti, x]])
            .sum();
        let sum_bound = psi_norm * profile.a_mu * (v * t).exp() * geom;
        let ok = sup <= sup_bound * (1.0 + 1e-12) && sum <= sum_bound * (1.0 + 1e-12);
        report.sup_value.push(sup);
        report.sup_bound.push(sup_bound);
        report.sum_value.push(sum);
        report.sum_bound.push(sum_bound);
        report.pass.push(ok);
    }
    Ok(report)
}

/// Named test functions for the central-limit comparison.
#[derive(Debug, Clone)]
pub enum TestFunction {
    AbsSq,
    AbsFourth,
    GaussianBump { center: Vec<f64>, width: f64 },
}

impl TestFunction {
    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::AbsSq => x.iter().map(|v| v * v).sum(),
            TestFunction::AbsFourth => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                r2 * r2
            }
            TestFunction::GaussianBump { center, width } => {
                let r2: f64 = x.iter().zip(center).map(|(v, c)| (v - c) * (v - c)).sum();
                (-r2 / (2.0 * width * width)).exp()
            }
        }
    }
}

/// Both sides of the central-limit comparison at one snapshot.
#[derive(Debug, Clone)]
pub struct CltComparison {
    pub lhs: f64,
    pub lhs_std_err: f64,
    pub rhs: f64,
}

/// Compare `sum_x f(x / sqrt(t)) rho_t(x)` against the Gaussian expectation
/// `||psi_0||^2 E[f(X)]`, `X ~ N(0, D)` with the unit-mass normal density.
pub fn clt_functional(
    est: &DensityEstimate,
    f: &TestFunction,
    t: f64,
    d_matrix: &Array2<f64>,
) -> Result<CltComparison> {
    use ndarray_linalg::{Eigh, UPLO};
    est.ensure_valid()?;
    let dim = est.lattice().dim();
    if d_matrix.nrows() != dim || d_matrix.ncols() != dim {
        return Err(Error::DimensionMismatch("diffusion matrix vs lattice dimension".into()));
    }
    let asym = d_matrix
        .indexed_iter()
        .map(|((i, j), v)| (v - d_matrix[[j, i]]).abs())
        .fold(0.0f64, f64::max);
    if asym > 1e-10 {
        return Err(Error::InvalidParameter("diffusion matrix must be symmetric".into()));
    }
    let (eigs, vecs) = d_matrix.eigh(UPLO::Lower)?;
    if eigs.iter().any(|&e| e <= 0.0) {
        return Err(Error::IndefiniteDiffusion {
            min_eig: eigs.iter().cloned().fold(f64::INFINITY, f64::min),
        });
    }
    if !(t > 0.0) {
        return Err(Error::InvalidParameter("clt comparison needs t > 0".into()));
    }
    let ti = est.time_index(t)?;

    // sqrt of D for the whitened quadrature
    let mut sqrt_cov = Array2::<f64>::zeros((dim, dim));
    for k in 0..dim {
        let s = eigs[k].sqrt();
        for i in 0..dim {
            for j in 0..dim {
                sqrt_cov[[i, j]] += vecs[[i, k]] * s * vecs[[j, k]];
            }
        }
    }
    let rhs = est.psi0_norm_sq()
        * match f {
            TestFunction::AbsSq => eigs.sum(),
            TestFunction::AbsFourth => {
                let tr = eigs.sum();
                let tr2: f64 = eigs.iter().map(|e| e * e).sum();
                tr * tr + 2.0 * tr2
            }
            TestFunction::GaussianBump { .. } => gaussian_expectation(&sqrt_cov, 64, |x| f.eval(x))?,
        };

    let scale = 1.0 / t.sqrt();
    let mut lhs = 0.0;
    let mut err = 0.0;
    for x in 0..est.lattice().len() {
        let xi: Vec<f64> = est.lattice().minimal_image(x).iter().map(|&c| c as f64 * scale).collect();
        let w = f.eval(&xi);
        lhs += w * est.mean()[[ti, x]];
        err += w.abs() * est.std_err()[[ti, x]];
    }
    Ok(CltComparison { lhs, lhs_std_err: err, rhs })
}

/// Inverse lattice Fourier transform of characteristic-function values on
/// the full dual grid, recovering the density.
pub fn density_from_char_fn(lattice: &Lattice, values: &[C64]) -> Result<Vec<f64>> {
    if values.len() != lattice.len() {
        return Err(Error::DimensionMismatch("need the full dual grid".into()));
    }
    let n = lattice.len();
    let mut out = Vec::with_capacity(n);
    for x in 0..n {
        let img = lattice.minimal_image(x);
        let mut acc = C64::new(0.0, 0.0);
        for k in 0..n {
            let kc = lattice.coord(k);
            let phase: f64 = kc
                .iter()
                .zip(&img)
                .zip(lattice.extents())
                .map(|((&kk, &xx), &l)| {
                    2.0 * std::f64::consts::PI * kk as f64 * xx as f64 / l as f64
                })
                .sum();
            acc += values[k] * C64::new(0.0, -phase).exp();
        }
        out.push(acc.re / n as f64);
    }
    Ok(out)
}

/// The dual grid `k_j = 2 pi n_j / L_j` as complex arguments.
pub fn dual_grid(lattice: &Lattice) -> Vec<Vec<C64>> {
    (0..lattice.len())
        .map(|i| {
            lattice
                .coord(i)
                .iter()
                .zip(lattice.extents())
                .map(|(&c, &l)| C64::new(2.0 * std::f64::consts::PI * c as f64 / l as f64, 0.0))
                .collect()
        })
        .collect()
}
