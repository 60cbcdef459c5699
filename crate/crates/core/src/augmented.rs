//! The augmented generator `L_z = i K_z + i V + B` on
//! `(lattice sites) x (finite configuration space)`, its spectral structure,
//! the diffusion matrix, and the Feynman-Kac-Pillet matrix element.
//!
//! Matrices are represented in the mu-symmetrized basis, so Euclidean inner
//! products realize `L^2(mu)` and the distinguished vector `delta_0 (x) 1`
//! becomes `delta_0 (x) sqrt(mu)`.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eig, Eigh, UPLO};
use num_complex::Complex64 as C64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::kernel::HoppingKernel;
use crate::lattice::Lattice;
use crate::linalg::{
    eigen_near_zero, expm, smallest_singular, spectral_norm, BorderedSolver, SparseMatrix,
};
use crate::noise::{generator_matrix, ConfigSpace, GeneratorMatrix, NoiseProcess};
use crate::wavefunction::WaveFunction;

/// Size caps for the truncated augmented system.
#[derive(Debug, Clone, Copy)]
pub struct AugmentedCaps {
    /// Maximum number of noise configurations.
    pub config_states: usize,
    /// Maximum dense operator dimension.
    pub dense_dim: usize,
}

impl Default for AugmentedCaps {
    fn default() -> Self {
        AugmentedCaps { config_states: crate::noise::DEFAULT_CONFIG_CAP, dense_dim: 8192 }
    }
}

/// Dense/sparse realization of `L_z` with its block data.
pub struct AugmentedOperator {
    lattice: Lattice,
    kernel: HoppingKernel,
    space: ConfigSpace,
    z: Vec<C64>,
    t_scale: f64,
    sparse: SparseMatrix,
    dense: Option<Array2<C64>>,
    b_tilded: Array2<f64>,
    v_diag: Vec<f64>,
    sqmu: Vec<f64>,
}

/// Assemble `L_z` for a jump model. `z` has one complex component per axis.
pub fn build_augmented(
    kernel: &HoppingKernel,
    process: &NoiseProcess,
    lattice: &Lattice,
    z: &[C64],
    caps: AugmentedCaps,
) -> Result<AugmentedOperator> {
    build_impl(kernel, process, lattice, z, caps, true)
}

/// Assemble only the sparse form (no dense cap applies); enough for matvecs
/// and the shift-invert eigenvalue path.
pub fn build_augmented_sparse(
    kernel: &HoppingKernel,
    process: &NoiseProcess,
    lattice: &Lattice,
    z: &[C64],
    caps: AugmentedCaps,
) -> Result<AugmentedOperator> {
    build_impl(kernel, process, lattice, z, caps, false)
}

fn build_impl(
    kernel: &HoppingKernel,
    process: &NoiseProcess,
    lattice: &Lattice,
    z: &[C64],
    caps: AugmentedCaps,
    dense: bool,
) -> Result<AugmentedOperator> {
    kernel.check_fits(lattice)?;
    if z.len() != lattice.dim() {
        return Err(Error::DimensionMismatch(format!(
            "z has {} components for a {}-dimensional lattice",
            z.len(),
            lattice.dim()
        )));
    }
    let gen: GeneratorMatrix = generator_matrix(process, lattice, caps.config_states)?;
    let space = gen.space().clone();
    let nc = space.total();
    let ns = lattice.len();
    let dim = ns * nc;
    if dense && dim > caps.dense_dim {
        return Err(Error::DenseCapExceeded { dim, cap: caps.dense_dim });
    }
    let b_tilded = gen.tilded();
    let sqmu = space.sqrt_weights();

    let mut triplets: Vec<(usize, usize, C64)> = Vec::new();
    // i K_z: sum_zeta h(zeta) [ phi(x - zeta, w) - e^{-i z.zeta} phi(x - zeta, sigma_zeta w) ]
    for (zeta, amp) in kernel.entries() {
        let zdot: C64 = zeta.iter().zip(z).map(|(&o, &zi)| zi * o as f64).sum();
        let twist = (-C64::new(0.0, 1.0) * zdot).exp();
        let neg: Vec<i64> = zeta.iter().map(|&o| -o).collect();
        let mut shift_cfg = vec![0usize; nc];
        for (w, s) in shift_cfg.iter_mut().enumerate() {
            *s = space.shifted(w, zeta, lattice);
        }
        for x in 0..ns {
            let src = lattice.shift(x, &neg);
            for w in 0..nc {
                let row = x * nc + w;
                let ih = C64::new(0.0, 1.0) * amp;
                triplets.push((row, src * nc + w, ih));
                triplets.push((row, src * nc + shift_cfg[w], -ih * twist));
            }
        }
    }
    // i V: diagonal (v_x - v_0)
    let mut v_diag = vec![0.0; dim];
    for x in 0..ns {
        for w in 0..nc {
            let v = space.site_value(w, x) - space.site_value(w, 0);
            v_diag[x * nc + w] = v;
            if v != 0.0 {
                triplets.push((x * nc + w, x * nc + w, C64::new(0.0, v)));
            }
        }
    }
    // B acting on the configuration factor
    for x in 0..ns {
        for w in 0..nc {
            for w2 in 0..nc {
                let b = b_tilded[[w, w2]];
                if b != 0.0 {
                    triplets.push((x * nc + w, x * nc + w2, C64::new(b, 0.0)));
                }
            }
        }
    }
    let sparse = SparseMatrix::from_triplets(dim, &triplets);
    let dense_mat = dense.then(|| sparse.to_dense());
    Ok(AugmentedOperator {
        lattice: lattice.clone(),
        kernel: kernel.clone(),
        space,
        z: z.to_vec(),
        t_scale: process.t_scale().expect("jump model"),
        sparse,
        dense: dense_mat,
        b_tilded,
        v_diag,
        sqmu,
    })
}

impl AugmentedOperator {
    pub fn dim(&self) -> usize {
        self.sparse.dim()
    }

    pub fn lattice(&self) -> &Lattice {
        &self.lattice
    }

    pub fn z(&self) -> &[C64] {
        &self.z
    }

    pub fn t_scale(&self) -> f64 {
        self.t_scale
    }

    pub fn config_space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn sparse(&self) -> &SparseMatrix {
        &self.sparse
    }

    pub fn dense(&self) -> Result<&Array2<C64>> {
        self.dense.as_ref().ok_or(Error::DenseCapExceeded { dim: self.dim(), cap: 0 })
    }

    /// `delta_x (x) 1` in the symmetrized basis, for the site at `coord`.
    pub fn site_vector(&self, coord: &[i64]) -> Array1<C64> {
        let x = self.lattice.index(coord);
        let nc = self.space.total();
        let mut v = Array1::zeros(self.dim());
        for w in 0..nc {
            v[x * nc + w] = C64::new(self.sqmu[w], 0.0);
        }
        v
    }

    /// The distinguished kernel vector `delta_0 (x) 1`.
    pub fn phi0(&self) -> Array1<C64> {
        self.site_vector(&vec![0; self.lattice.dim()])
    }

    /// The potential block `i V` as a real diagonal (without the `i`).
    pub fn v_hat_diagonal(&self) -> &[f64] {
        &self.v_diag
    }

    /// The symmetrized Markov generator acting on the configuration factor.
    pub fn b_config_matrix(&self) -> &Array2<f64> {
        &self.b_tilded
    }

    /// Dense `i K_z` block alone (reconstruction helper).
    pub fn k_hat_dense(&self) -> Array2<C64> {
        let nc = self.space.total();
        let ns = self.lattice.len();
        let dim = ns * nc;
        let mut k = Array2::zeros((dim, dim));
        for (zeta, amp) in self.kernel.entries() {
            let zdot: C64 = zeta.iter().zip(&self.z).map(|(&o, &zi)| zi * o as f64).sum();
            let twist = (-C64::new(0.0, 1.0) * zdot).exp();
            let neg: Vec<i64> = zeta.iter().map(|&o| -o).collect();
            for x in 0..ns {
                let src = self.lattice.shift(x, &neg);
                for w in 0..nc {
                    k[[x * nc + w, src * nc + w]] += amp;
                    k[[x * nc + w, src * nc + self.space.shifted(w, zeta, &self.lattice)]] -=
                        amp * twist;
                }
            }
        }
        k
    }

    /// Project onto `H_0 = l^2 (x) 1`.
    pub fn project_p0(&self, v: &Array1<C64>) -> Array1<C64> {
        let nc = self.space.total();
        let ns = self.lattice.len();
        let mut out = Array1::zeros(self.dim());
        for x in 0..ns {
            let mut ip = C64::new(0.0, 0.0);
            for w in 0..nc {
                ip += C64::new(self.sqmu[w], 0.0) * v[x * nc + w];
            }
            for w in 0..nc {
                out[x * nc + w] = ip * self.sqmu[w];
            }
        }
        out
    }

    pub fn matvec(&self, v: &Array1<C64>) -> Array1<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.sparse.matvec(v.as_slice().unwrap(), &mut out);
        Array1::from_vec(out)
    }

    pub fn adjoint_matvec(&self, v: &Array1<C64>) -> Array1<C64> {
        let mut out = vec![C64::new(0.0, 0.0); self.dim()];
        self.sparse.adjoint_matvec(v.as_slice().unwrap(), &mut out);
        Array1::from_vec(out)
    }
}

/// Autocorrelation field `rho_z(x) = sum_y exp(i z.y) psi0(x + y) conj(psi0(y))`.
pub fn rho_hat(psi0: &WaveFunction, z: &[C64]) -> Result<Vec<C64>> {
    let lattice = psi0.lattice();
    if z.len() != lattice.dim() {
        return Err(Error::DimensionMismatch("z vs lattice dimension".into()));
    }
    let mu = psi0.profile().map(|p| p.mu).unwrap_or(0.0);
    for zi in z {
        if zi.im.abs() > 0.0 && zi.im.abs() >= mu {
            return Err(Error::OutsideRegion(format!(
                "|Im z| = {} outside the analyticity strip (mu = {mu})",
                zi.im.abs()
            )));
        }
    }
    let amps = psi0.amplitudes();
    let n = lattice.len();
    let mut out = vec![C64::new(0.0, 0.0); n];
    for y in 0..n {
        let cy = amps[y].conj();
        if cy == C64::new(0.0, 0.0) {
            continue;
        }
        let ybar = lattice.minimal_image(y);
        let phase: C64 = ybar.iter().zip(z).map(|(&yi, &zi)| C64::new(0.0, 1.0) * zi * yi as f64).sum();
        let w = phase.exp() * cy;
        let ycoord = lattice.coord(y);
        for (x, o) in out.iter_mut().enumerate() {
            let xc = lattice.coord(x);
            let sum: Vec<i64> = xc.iter().zip(&ycoord).map(|(&a, &b)| a + b).collect();
            *o += w * amps[lattice.index(&sum)];
        }
    }
    Ok(out)
}

/// The Feynman-Kac-Pillet matrix element
/// `< delta_0 (x) 1, exp(-t L_z) (rho_z (x) 1) >`.
pub fn fkp_element(op: &AugmentedOperator, t: f64, psi0: &WaveFunction) -> Result<C64> {
    if psi0.lattice() != op.lattice() {
        return Err(Error::DimensionMismatch("psi0 lattice vs operator lattice".into()));
    }
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter("fkp element needs t >= 0".into()));
    }
    let rho = rho_hat(psi0, op.z())?;
    let nc = op.config_space().total();
    let mut vec = Array1::<C64>::zeros(op.dim());
    for (x, r) in rho.iter().enumerate() {
        for w in 0..nc {
            vec[x * nc + w] = r * op.sqmu[w];
        }
    }
    let dense = op.dense()?;
    let e = expm(&dense.mapv(|x| x * (-t)))?;
    let ev = e.dot(&vec);
    let phi0 = op.phi0();
    Ok(phi0.iter().zip(ev.iter()).map(|(a, b)| a.conj() * b).sum())
}

/// Fitted wedge `{ Re w >= gamma / T, |Im w| <= p (Re w + c) }`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct WedgeFit {
    pub p: f64,
    pub c: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ResolventProbe {
    pub w_re: f64,
    pub w_im: f64,
    pub resolvent_norm: f64,
    /// Distance from `w` to `{E(z)} union Sigma_+`.
    pub distance: f64,
}

/// Spectral structure of one `L_z`.
#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub z: Vec<(f64, f64)>,
    pub e_z: (f64, f64),
    /// Minimum real part over the spectrum away from `E(z)` (dense mode).
    pub gap: Option<f64>,
    /// `gap * T`, the dimensionless gap.
    pub gamma: Option<f64>,
    pub wedge: Option<WedgeFit>,
    pub resolvent_probes: Vec<ResolventProbe>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectrum: Option<Vec<(f64, f64)>>,
}

impl SpectralReport {
    pub fn e_z(&self) -> C64 {
        C64::new(self.e_z.0, self.e_z.1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpectralMode {
    /// Full dense spectrum: eigenvalue, gap, wedge fit and resolvent probes.
    Dense,
    /// Targeted shift-invert for `E(z)` only.
    ShiftInvert,
}

/// Distance from a point to the wedge region.
fn dist_to_wedge(w: C64, wedge: &WedgeFit, t_scale: f64) -> f64 {
    let g = wedge.gamma / t_scale;
    let (p, c) = (wedge.p, wedge.c);
    let (x, y) = (w.re, w.im.abs());
    if x >= g && y <= p * (x + c) {
        return 0.0;
    }
    let mut best = f64::INFINITY;
    // vertical face Re = g, |Im| <= p (g + c)
    let cap = p * (g + c);
    let proj_y = y.min(cap);
    best = best.min(((x - g).powi(2) + (y - proj_y).powi(2)).sqrt());
    // slanted face Im = p (Re + c), Re >= g
    let r = ((x + p * (y - p * c)) / (1.0 + p * p)).max(g);
    best = best.min(((x - r).powi(2) + (y - p * (r + c)).powi(2)).sqrt());
    best
}

/// Compute the spectral report for `op`.
///
/// `reference` supplies the unperturbed `gamma` for the identification disk
/// of radius `gamma / (4T)`; when absent (the `z = 0` case) the disk check is
/// skipped and the report's own gap defines `gamma`.
pub fn spectral_report(
    op: &AugmentedOperator,
    mode: SpectralMode,
    reference: Option<&SpectralReport>,
) -> Result<SpectralReport> {
    match mode {
        SpectralMode::Dense => spectral_report_dense(op, reference),
        SpectralMode::ShiftInvert => {
            let (e, _v) = shift_invert_eigen(op)?;
            Ok(SpectralReport {
                z: op.z().iter().map(|c| (c.re, c.im)).collect(),
                e_z: (e.re, e.im),
                gap: None,
                gamma: None,
                wedge: None,
                resolvent_probes: Vec::new(),
                spectrum: None,
            })
        }
    }
}

fn shift_invert_eigen(op: &AugmentedOperator) -> Result<(C64, Array1<C64>)> {
    let dense = op.dense()?;
    let phi0 = op.phi0();
    let solver = BorderedSolver::new(dense, &phi0)?;
    let scale = 1.0 + op.t_scale.recip() + op.kernel.group_velocity(0.0);
    eigen_near_zero(&op.sparse, &solver, &phi0, scale, 1e-13, 60)
}

fn spectral_report_dense(
    op: &AugmentedOperator,
    reference: Option<&SpectralReport>,
) -> Result<SpectralReport> {
    let dense = op.dense()?;
    let (eigs, _) = dense.eig()?;
    let mut order: Vec<usize> = (0..eigs.len()).collect();
    order.sort_by(|&a, &b| eigs[a].norm().partial_cmp(&eigs[b].norm()).unwrap());
    let e_idx = order[0];
    let e_z = eigs[e_idx];

    if let Some(r) = reference {
        let gamma = r.gamma.ok_or_else(|| {
            Error::InvalidParameter("reference report carries no gamma".into())
        })?;
        let radius = gamma / (4.0 * op.t_scale);
        let inside = eigs.iter().filter(|l| l.norm() <= radius).count();
        if inside != 1 {
            return Err(Error::AmbiguousEigenvalue(format!(
                "{inside} eigenvalues in the disk of radius {radius:.3e}"
            )));
        }
    }

    let rest: Vec<C64> = order[1..].iter().map(|&i| eigs[i]).collect();
    let gap = rest.iter().map(|l| l.re).fold(f64::INFINITY, f64::min);
    let gamma = gap * op.t_scale;
    // wedge fit: pin c to 1/T and take the smallest p containing the rest
    let c = 1.0 / op.t_scale;
    let p = rest
        .iter()
        .map(|l| l.im.abs() / (l.re + c))
        .fold(0.0f64, f64::max);
    let wedge = WedgeFit { p, c, gamma };

    // resolvent probes on the circle |w| = gamma_ref / (2T)
    let gamma_probe = reference.and_then(|r| r.gamma).unwrap_or(gamma);
    let radius = gamma_probe / (2.0 * op.t_scale);
    let mut probes = Vec::new();
    for k in 0..8 {
        let theta = 2.0 * std::f64::consts::PI * k as f64 / 8.0;
        let w = C64::new(radius * theta.cos(), radius * theta.sin());
        let mut shifted = dense.clone();
        for i in 0..shifted.nrows() {
            shifted[[i, i]] -= w;
        }
        let sigma = smallest_singular(&shifted)?;
        let dist = (w - e_z).norm().min(dist_to_wedge(w, &wedge, op.t_scale));
        probes.push(ResolventProbe {
            w_re: w.re,
            w_im: w.im,
            resolvent_norm: 1.0 / sigma,
            distance: dist,
        });
    }

    Ok(SpectralReport {
        z: op.z().iter().map(|c| (c.re, c.im)).collect(),
        e_z: (e_z.re, e_z.im),
        gap: Some(gap),
        gamma: Some(gamma),
        wedge: Some(wedge),
        resolvent_probes: probes,
        spectrum: Some(eigs.iter().map(|l| (l.re, l.im)).collect()),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DiffusionMethod {
    Formula,
    Hessian,
}

/// The diffusion matrix with its conditioning diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct DiffusionMatrix {
    pub method: DiffusionMethod,
    /// Row-major `d x d` entries.
    pub matrix: Vec<Vec<f64>>,
    pub min_eigenvalue: f64,
    pub asymmetry: f64,
    /// Relative disagreement between the `h` and `h/2` finite-difference
    /// evaluations (Hessian method on small systems).
    #[serde(skip_serializing_if = "Option::is_none")]
    pub richardson_err: Option<f64>,
}

impl DiffusionMatrix {
    pub fn as_array(&self) -> Array2<f64> {
        let d = self.matrix.len();
        Array2::from_shape_fn((d, d), |(i, j)| self.matrix[i][j])
    }

    pub fn trace(&self) -> f64 {
        (0..self.matrix.len()).map(|i| self.matrix[i][i]).sum()
    }
}

const RICHARDSON_DIM_CAP: usize = 2500;
const HESSIAN_STEP: f64 = 1e-3;

/// Compute the diffusion matrix by the restricted-inverse formula or by
/// finite differences of the eigenvalue `E(z)`.
pub fn diffusion_matrix(
    kernel: &HoppingKernel,
    process: &NoiseProcess,
    lattice: &Lattice,
    method: DiffusionMethod,
    caps: AugmentedCaps,
) -> Result<DiffusionMatrix> {
    let d = lattice.dim();
    let zero = vec![C64::new(0.0, 0.0); d];
    let (mut matrix, richardson) = match method {
        DiffusionMethod::Formula => {
            let op = build_augmented(kernel, process, lattice, &zero, caps)?;
            let phi0 = op.phi0();
            let solver = BorderedSolver::new(op.dense()?, &phi0)?;
            let mut sols: Vec<(Vec<i64>, C64, Array1<C64>)> = Vec::new();
            for (zeta, amp) in kernel.entries() {
                if zeta.iter().all(|&o| o == 0) {
                    continue;
                }
                let rhs = op.site_vector(zeta);
                let (u, _) = solver.solve(&rhs, C64::new(0.0, 0.0))?;
                sols.push((zeta.clone(), *amp, u));
            }
            let mut m = Array2::<f64>::zeros((d, d));
            for (zeta, h1, _) in &sols {
                let lhs = op.site_vector(zeta);
                for (zeta2, h2, u) in &sols {
                    let ip: C64 = lhs.iter().zip(u.iter()).map(|(a, b)| a.conj() * b).sum();
                    let w = h1.conj() * *h2 * ip;
                    for i in 0..d {
                        for j in 0..d {
                            m[[i, j]] += 2.0 * (zeta[i] as f64) * (zeta2[j] as f64) * w.re;
                        }
                    }
                }
            }
            (m, None)
        }
        DiffusionMethod::Hessian => {
            let op0 = build_augmented(kernel, process, lattice, &zero, caps)?;
            let phi0 = op0.phi0();
            let solver = BorderedSolver::new(op0.dense()?, &phi0)?;
            let scale = 1.0 + op0.t_scale.recip() + kernel.group_velocity(0.0);
            let eval = |zvec: &[C64]| -> Result<C64> {
                let opz = build_augmented_sparse(kernel, process, lattice, zvec, caps)?;
                let (e, _) = eigen_near_zero(&opz.sparse, &solver, &phi0, scale, 1e-13, 60)?;
                Ok(e)
            };
            let hess = |h: f64| -> Result<Array2<f64>> {
                let mut m = Array2::<f64>::zeros((d, d));
                let mut e_axis = vec![(C64::new(0.0, 0.0), C64::new(0.0, 0.0)); d];
                for i in 0..d {
                    let mut zp = vec![C64::new(0.0, 0.0); d];
                    zp[i] = C64::new(h, 0.0);
                    let ep = eval(&zp)?;
                    zp[i] = C64::new(-h, 0.0);
                    let em = eval(&zp)?;
                    e_axis[i] = (ep, em);
                    // E(0) = 0 exactly by the kernel identity
                    m[[i, i]] = (ep + em).re / (h * h);
                }
                for i in 0..d {
                    for j in (i + 1)..d {
                        let mut zp = vec![C64::new(0.0, 0.0); d];
                        zp[i] = C64::new(h, 0.0);
                        zp[j] = C64::new(h, 0.0);
                        let epp = eval(&zp)?;
                        zp[i] = C64::new(-h, 0.0);
                        zp[j] = C64::new(-h, 0.0);
                        let emm = eval(&zp)?;
                        let val = (epp + emm
                            - e_axis[i].0
                            - e_axis[i].1
                            - e_axis[j].0
                            - e_axis[j].1)
                            .re
                            / (2.0 * h * h);
                        m[[i, j]] = val;
                        m[[j, i]] = val;
                    }
                }
                Ok(m)
            };
            let m = hess(HESSIAN_STEP)?;
            let richardson = if op0.dim() <= RICHARDSON_DIM_CAP {
                let m2 = hess(HESSIAN_STEP / 2.0)?;
                let scale = m.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1e-300);
                Some(
                    m.iter()
                        .zip(m2.iter())
                        .map(|(a, b)| (a - b).abs() / scale)
                        .fold(0.0f64, f64::max),
                )
            } else {
                None
            };
            (m, richardson)
        }
    };

    let asymmetry = {
        let scale = matrix.iter().map(|v| v.abs()).fold(0.0f64, f64::max).max(1e-300);
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max((matrix[[i, j]] - matrix[[j, i]]).abs() / scale);
            }
        }
        worst
    };
    let sym = 0.5 * (&matrix + &matrix.t());
    matrix = sym;
    let (eigs, _) = matrix.eigh(UPLO::Lower)?;
    let min_eig = eigs.iter().cloned().fold(f64::INFINITY, f64::min);
    if min_eig <= 0.0 {
        return Err(Error::IndefiniteDiffusion { min_eig });
    }
    Ok(DiffusionMatrix {
        method,
        matrix: (0..d).map(|i| (0..d).map(|j| matrix[[i, j]]).collect()).collect(),
        min_eigenvalue: min_eig,
        asymmetry,
        richardson_err: richardson,
    })
}

/// First derivatives of `E(z)` at zero by central differences (they vanish).
pub fn e_gradient_norm(
    kernel: &HoppingKernel,
    process: &NoiseProcess,
    lattice: &Lattice,
    caps: AugmentedCaps,
) -> Result<f64> {
    let d = lattice.dim();
    let zero = vec![C64::new(0.0, 0.0); d];
    let op0 = build_augmented(kernel, process, lattice, &zero, caps)?;
    let phi0 = op0.phi0();
    let solver = BorderedSolver::new(op0.dense()?, &phi0)?;
    let scale = 1.0 + op0.t_scale.recip() + kernel.group_velocity(0.0);
    let h = HESSIAN_STEP;
    let mut worst = 0.0f64;
    for i in 0..d {
        let mut zp = vec![C64::new(0.0, 0.0); d];
        zp[i] = C64::new(h, 0.0);
        let opp = build_augmented_sparse(kernel, process, lattice, &zp, caps)?;
        let (ep, _) = eigen_near_zero(&opp.sparse, &solver, &phi0, scale, 1e-13, 60)?;
        zp[i] = C64::new(-h, 0.0);
        let opm = build_augmented_sparse(kernel, process, lattice, &zp, caps)?;
        let (em, _) = eigen_near_zero(&opm.sparse, &solver, &phi0, scale, 1e-13, 60)?;
        worst = worst.max(((ep - em) / (2.0 * h)).norm());
    }
    Ok(worst)
}

/// Semigroup growth-bound table: `||exp(-t L_z)|| <= exp(t alpha(y))`.
#[derive(Debug, Clone, Serialize)]
pub struct SemigroupReport {
    pub alpha: f64,
    pub rows: Vec<(f64, f64, f64)>, // (t, norm, bound)
    pub pass: bool,
}

/// `alpha(y) = sum_zeta |h(zeta)| |sinh(y . zeta)|` for `y = Im z`.
pub fn alpha_bound(kernel: &HoppingKernel, y: &[f64]) -> f64 {
    kernel
        .entries()
        .iter()
        .map(|(zeta, amp)| {
            let dot: f64 = zeta.iter().zip(y).map(|(&o, &yi)| o as f64 * yi).sum();
            amp.norm() * dot.sinh().abs()
        })
        .sum()
}

pub fn semigroup_growth_check(op: &AugmentedOperator, t_grid: &[f64]) -> Result<SemigroupReport> {
    let y: Vec<f64> = op.z().iter().map(|c| c.im).collect();
    let alpha = alpha_bound(&op.kernel, &y);
    let dense = op.dense()?;
    let mut rows = Vec::new();
    let mut pass = true;
    for &t in t_grid {
        let e = expm(&dense.mapv(|x| x * (-t)))?;
        let norm = spectral_norm(&e)?;
        let bound = (t * alpha).exp();
        if norm > bound * (1.0 + 1e-10) {
            pass = false;
        }
        rows.push((t, norm, bound));
    }
    Ok(SemigroupReport { alpha, rows, pass })
}

/// Lower bound `gamma = 1 / (1 + phi^2)` on the relative spectral gap, with
/// `phi = (1/alpha) (2 delta / w + (9/8) w / delta)`.
pub fn abstract_gap_bound(delta: f64, w_norm: f64, alpha: f64) -> Result<f64> {
    if !(delta > 0.0) || !(w_norm > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need delta > 0 and w_norm > 0, got {delta}, {w_norm}"
        )));
    }
    if !(alpha > 0.0 && alpha <= 1.0) {
        return Err(Error::InvalidParameter(format!("need 0 < alpha <= 1, got {alpha}")));
    }
    let phi = (2.0 * delta / w_norm + 9.0 / 8.0 * w_norm / delta) / alpha;
    Ok(1.0 / (1.0 + phi * phi))
}

/// Data backing the abstract gap certificate for one model.
#[derive(Debug, Clone, Serialize)]
pub struct GapCertificate {
    pub delta: f64,
    pub w_norm: f64,
    pub alpha: f64,
    pub gamma_lower_bound: f64,
    pub measured_gap: f64,
    pub pass: bool,
}

/// Certify the measured gap of `L_0` on the complement of its kernel vector
/// against the abstract operator bound.
pub fn gap_certificate(
    op: &AugmentedOperator,
    report: &SpectralReport,
    generator_gap: f64,
) -> Result<GapCertificate> {
    use ndarray_linalg::SVD;
    if op.z().iter().any(|z| *z != C64::new(0.0, 0.0)) {
        return Err(Error::InvalidParameter("gap certificate applies at z = 0".into()));
    }
    let nc = op.space.total();
    let ns = op.lattice.len();
    let dim = op.dim();
    // W = i V restricted to the mean-zero site vectors: columns delta_x (x) (v_x - v_0)
    let mut w = Array2::<C64>::zeros((dim, ns - 1));
    for x in 1..ns {
        for cfg in 0..nc {
            let val = op.space.site_value(cfg, x) - op.space.site_value(cfg, 0);
            w[[x * nc + cfg, x - 1]] = C64::new(0.0, val * op.sqmu[cfg]);
        }
    }
    let (_, sw, _) = w.svd(false, false)?;
    let w_norm = sw.iter().cloned().fold(0.0f64, f64::max);

    // B^{-1} W column by column on the mean-zero configuration subspace
    let sq = Array1::from_vec(op.sqmu.clone());
    let bord = BorderedSolver::new(
        &op.b_tilded.mapv(|v| C64::new(v, 0.0)),
        &sq.mapv(|v| C64::new(v, 0.0)),
    )?;
    let mut binv_w = Array2::<C64>::zeros((dim, ns - 1));
    for x in 1..ns {
        let mut rhs = Array1::<C64>::zeros(nc);
        for cfg in 0..nc {
            let val = op.space.site_value(cfg, x) - op.space.site_value(cfg, 0);
            rhs[cfg] = C64::new(0.0, val * op.sqmu[cfg]);
        }
        let (y, _) = bord.solve(&rhs, C64::new(0.0, 0.0))?;
        for cfg in 0..nc {
            binv_w[[x * nc + cfg, x - 1]] = y[cfg];
        }
    }
    let (_, sb, _) = binv_w.svd(false, false)?;
    let sigma_min = sb.iter().cloned().fold(f64::INFINITY, f64::min);

    let delta = generator_gap;
    let alpha_raw = delta * sigma_min / w_norm;
    if alpha_raw > 1.0 + 1e-9 {
        return Err(Error::InvalidParameter(format!(
            "computed alpha = {alpha_raw} exceeds 1; inconsistent inputs"
        )));
    }
    let alpha = alpha_raw.min(1.0);
    let gamma_lb = abstract_gap_bound(delta, w_norm, alpha)?;
    let measured_gap = report.gap.ok_or_else(|| {
        Error::InvalidParameter("gap certificate needs a dense spectral report".into())
    })?;
    Ok(GapCertificate {
        delta,
        w_norm,
        alpha,
        gamma_lower_bound: gamma_lb,
        measured_gap,
        pass: measured_gap >= gamma_lb * delta,
    })
}
