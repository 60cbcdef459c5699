//! The three Markov noise models: per-site flips, global resampling and
//! Brownian phases, plus a frozen-disorder variant for static potentials.
//!
//! Jump models are simulated event-driven with exact exponential clocks
//! (aggregate rate with uniform site choice), so potential paths are exact.

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::lattice::Lattice;

pub const DEFAULT_CONFIG_CAP: usize = 1 << 14;

const TWO_PI: f64 = 2.0 * std::f64::consts::PI;

/// A normalized finite discrete measure on the real line.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMeasure {
    values: Vec<f64>,
    probs: Vec<f64>,
}

impl DiscreteMeasure {
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter("measure needs at least one atom".into()));
        }
        if points.iter().any(|&(v, p)| !v.is_finite() || !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::InvalidParameter("measure atoms must be finite with nonnegative mass".into()));
        }
        let total: f64 = points.iter().map(|&(_, p)| p).sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("measure has zero total mass".into()));
        }
        let (values, probs) = points.into_iter().map(|(v, p)| (v, p / total)).unzip();
        Ok(DiscreteMeasure { values, probs })
    }

    pub fn bernoulli_pm1(p_plus: f64) -> Result<Self> {
        if !(p_plus > 0.0 && p_plus < 1.0) {
            return Err(Error::InvalidParameter(format!("flip probability must lie in (0,1), got {p_plus}")));
        }
        DiscreteMeasure::new(vec![(1.0, p_plus), (-1.0, 1.0 - p_plus)])
    }

    /// Degenerate single-atom measure (useful for frozen constant fields).
    pub fn point(value: f64) -> Self {
        DiscreteMeasure { values: vec![value], probs: vec![1.0] }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().zip(&self.probs).map(|(v, p)| v * p).sum()
    }

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (v, p) in self.values.iter().zip(&self.probs) {
            acc += p;
            if u < acc {
                return *v;
            }
        }
        *self.values.last().unwrap()
    }
}

/// Per-site flip model: every site carries an independent Poisson clock of
/// intensity `1/T`; at each tick the site value is resampled from
/// `Bernoulli(p) on {+1,-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct FlipProcess {
    pub t_scale: f64,
    pub p_plus: f64,
}

/// Global resampling: one Poisson clock of intensity `1/T`; at each tick the
/// entire field is redrawn from the product of `nu`.
#[derive(Debug, Clone, PartialEq)]
pub struct GlobalResampleProcess {
    pub t_scale: f64,
    pub nu: DiscreteMeasure,
}

/// Independent Brownian phases: angles diffuse with variance `dt/T`; the
/// potential is `cos(angle)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BrownianPhaseProcess {
    pub t_scale: f64,
}

/// Static disorder drawn once from the product of `nu`; no dynamics.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenDisorder {
    pub nu: DiscreteMeasure,
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseProcess {
    Flip(FlipProcess),
    Resample(GlobalResampleProcess),
    Brownian(BrownianPhaseProcess),
    Frozen(FrozenDisorder),
}

impl NoiseProcess {
    pub fn flip(t_scale: f64, p_plus: f64) -> Result<Self> {
        if !(t_scale > 0.0) {
            return Err(Error::InvalidParameter(format!("T must be positive, got {t_scale}")));
        }
        DiscreteMeasure::bernoulli_pm1(p_plus)?;
        Ok(NoiseProcess::Flip(FlipProcess { t_scale, p_plus }))
    }

    pub fn resample(t_scale: f64, nu: DiscreteMeasure) -> Result<Self> {
        if !(t_scale > 0.0) {
            return Err(Error::InvalidParameter(format!("T must be positive, got {t_scale}")));
        }
        Ok(NoiseProcess::Resample(GlobalResampleProcess { t_scale, nu }))
    }

    pub fn brownian(t_scale: f64) -> Result<Self> {
        if !(t_scale > 0.0) {
            return Err(Error::InvalidParameter(format!("T must be positive, got {t_scale}")));
        }
        Ok(NoiseProcess::Brownian(BrownianPhaseProcess { t_scale }))
    }

    pub fn frozen(nu: DiscreteMeasure) -> Self {
        NoiseProcess::Frozen(FrozenDisorder { nu })
    }

    /// Decorrelation time scale, when the process has one.
    pub fn t_scale(&self) -> Option<f64> {
        match self {
            NoiseProcess::Flip(p) => Some(p.t_scale),
            NoiseProcess::Resample(p) => Some(p.t_scale),
            NoiseProcess::Brownian(p) => Some(p.t_scale),
            NoiseProcess::Frozen(_) => None,
        }
    }

    /// Jump models (1 and 2) admit event clocks and finite generator matrices.
    pub fn is_jump(&self) -> bool {
        matches!(self, NoiseProcess::Flip(_) | NoiseProcess::Resample(_))
    }

    /// The single-site resampling measure for models with one.
    pub fn site_measure(&self) -> Option<DiscreteMeasure> {
        match self {
            NoiseProcess::Flip(p) => Some(DiscreteMeasure::bernoulli_pm1(p.p_plus).unwrap()),
            NoiseProcess::Resample(p) => Some(p.nu.clone()),
            NoiseProcess::Frozen(p) => Some(p.nu.clone()),
            NoiseProcess::Brownian(_) => None,
        }
    }

    fn name(&self) -> &'static str {
        match self {
            NoiseProcess::Flip(_) => "flip",
            NoiseProcess::Resample(_) => "resample",
            NoiseProcess::Brownian(_) => "brownian",
            NoiseProcess::Frozen(_) => "frozen",
        }
    }
}

/// The running configuration of one noise realization, owning its RNG stream.
#[derive(Debug, Clone)]
pub struct NoiseState {
    process: NoiseProcess,
    config: Vec<f64>,
    time: f64,
    next_event: f64,
    rng: ChaCha12Rng,
}

/// Derive the RNG stream for one trajectory from the master seed. Streams
/// are counter-indexed so results do not depend on scheduling.
pub fn trajectory_stream(master_seed: u64, trajectory: u64) -> ChaCha12Rng {
    let mut rng = ChaCha12Rng::seed_from_u64(master_seed);
    rng.set_stream(trajectory);
    rng
}

fn exp_sample<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    let u: f64 = rng.random();
    -(1.0 - u).ln() / rate
}

/// Draw a configuration from the invariant measure with stationary clocks.
pub fn sample_invariant(process: &NoiseProcess, lattice: &Lattice, mut rng: ChaCha12Rng) -> NoiseState {
    let n = lattice.len();
    let config: Vec<f64> = match process {
        NoiseProcess::Flip(p) => {
            let nu = DiscreteMeasure::bernoulli_pm1(p.p_plus).unwrap();
            (0..n).map(|_| nu.sample(&mut rng)).collect()
        }
        NoiseProcess::Resample(p) => (0..n).map(|_| p.nu.sample(&mut rng)).collect(),
        NoiseProcess::Brownian(_) => (0..n).map(|_| rng.random::<f64>() * TWO_PI).collect(),
        NoiseProcess::Frozen(p) => (0..n).map(|_| p.nu.sample(&mut rng)).collect(),
    };
    let next_event = match process {
        NoiseProcess::Flip(p) => exp_sample(&mut rng, n as f64 / p.t_scale),
        NoiseProcess::Resample(p) => exp_sample(&mut rng, 1.0 / p.t_scale),
        _ => f64::INFINITY,
    };
    NoiseState { process: process.clone(), config, time: 0.0, next_event, rng }
}

impl NoiseState {
    pub fn process(&self) -> &NoiseProcess {
        &self.process
    }

    pub fn config(&self) -> &[f64] {
        &self.config
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    /// Holding time until the pending event (jump models only).
    pub fn next_event_time(&self) -> Result<f64> {
        if self.process.is_jump() {
            Ok(self.next_event - self.time)
        } else {
            Err(Error::UnsupportedProcess(format!(
                "{} model has no event clock",
                self.process.name()
            )))
        }
    }

    /// Absolute time of the pending event, `None` for eventless models.
    pub(crate) fn pending_event(&self) -> Option<f64> {
        self.process.is_jump().then_some(self.next_event)
    }

    /// Apply the pending event and redraw the clock. Advances `time` to the
    /// event instant.
    pub(crate) fn apply_pending_event(&mut self) {
        let n = self.config.len();
        match &self.process {
            NoiseProcess::Flip(p) => {
                let site = self.rng.random_range(0..n);
                let nu = DiscreteMeasure::bernoulli_pm1(p.p_plus).unwrap();
                self.config[site] = nu.sample(&mut self.rng);
                self.time = self.next_event;
                self.next_event += exp_sample(&mut self.rng, n as f64 / p.t_scale);
            }
            NoiseProcess::Resample(p) => {
                for c in self.config.iter_mut() {
                    *c = p.nu.sample(&mut self.rng);
                }
                self.time = self.next_event;
                self.next_event += exp_sample(&mut self.rng, 1.0 / p.t_scale);
            }
            _ => unreachable!("eventless process"),
        }
    }

    /// Advance the process by `dt`, applying all events in `(t, t + dt]` in
    /// time order (jump models) or one Gaussian increment (Brownian phases).
    pub fn advance(&mut self, dt: f64) {
        debug_assert!(dt >= 0.0);
        let target = self.time + dt;
        match &self.process {
            NoiseProcess::Flip(_) | NoiseProcess::Resample(_) => {
                while self.next_event <= target {
                    self.apply_pending_event();
                }
                self.time = target;
            }
            NoiseProcess::Brownian(p) => {
                let normal = Normal::new(0.0, (dt / p.t_scale).sqrt()).unwrap();
                for c in self.config.iter_mut() {
                    *c = (*c + normal.sample(&mut self.rng)).rem_euclid(TWO_PI);
                }
                self.time = target;
            }
            NoiseProcess::Frozen(_) => {
                self.time = target;
            }
        }
    }

    /// Brownian substep for the splitting integrator: advances the angles by
    /// one increment and writes the potential at the midpoint angle.
    pub(crate) fn brownian_midpoint_step(&mut self, dt: f64, mid_potential: &mut [f64]) {
        let NoiseProcess::Brownian(p) = &self.process else {
            unreachable!("midpoint step is only for the Brownian model")
        };
        let normal = Normal::new(0.0, (dt / p.t_scale).sqrt()).unwrap();
        for (c, out) in self.config.iter_mut().zip(mid_potential.iter_mut()) {
            let inc = normal.sample(&mut self.rng);
            *out = (*c + 0.5 * inc).cos();
            *c = (*c + inc).rem_euclid(TWO_PI);
        }
        self.time += dt;
    }

    /// The potential `v_x(omega)` over sites.
    pub fn potential_field(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.config.len()];
        self.potential_field_into(&mut out);
        out
    }

    pub fn potential_field_into(&self, out: &mut [f64]) {
        match &self.process {
            NoiseProcess::Brownian(_) => {
                for (o, c) in out.iter_mut().zip(&self.config) {
                    *o = c.cos();
                }
            }
            _ => out.copy_from_slice(&self.config),
        }
    }
}

/// Enumeration of the finite configuration space `(supp nu)^N` for the jump
/// models, with product weights and cyclic shifts.
#[derive(Debug, Clone)]
pub struct ConfigSpace {
    n_sites: usize,
    values: Vec<f64>,
    probs: Vec<f64>,
    powers: Vec<usize>,
    total: usize,
}

impl ConfigSpace {
    pub fn for_process(process: &NoiseProcess, lattice: &Lattice, cap: usize) -> Result<Self> {
        if !process.is_jump() {
            return Err(Error::UnsupportedProcess(format!(
                "{} model has no finite configuration space",
                process.name()
            )));
        }
        let nu = process.site_measure().unwrap();
        let n_sites = lattice.len();
        let s = nu.len();
        let mut total: usize = 1;
        let mut powers = Vec::with_capacity(n_sites);
        for _ in 0..n_sites {
            powers.push(total);
            total = total.checked_mul(s).ok_or(Error::ConfigCapExceeded { states: usize::MAX, cap })?;
            if total > cap {
                return Err(Error::ConfigCapExceeded { states: total, cap });
            }
        }
        Ok(ConfigSpace {
            n_sites,
            values: nu.values().to_vec(),
            probs: nu.probs().to_vec(),
            powers,
            total,
        })
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn states_per_site(&self) -> usize {
        self.values.len()
    }

    #[inline]
    pub fn digit(&self, cfg: usize, site: usize) -> usize {
        cfg / self.powers[site] % self.values.len()
    }

    #[inline]
    pub fn site_value(&self, cfg: usize, site: usize) -> f64 {
        self.values[self.digit(cfg, site)]
    }

    /// Replace the state at one site, returning the new configuration index.
    pub fn replace(&self, cfg: usize, site: usize, state: usize) -> usize {
        let old = self.digit(cfg, site);
        cfg - old * self.powers[site] + state * self.powers[site]
    }

    /// Invariant product weight of a configuration.
    pub fn weight(&self, cfg: usize) -> f64 {
        (0..self.n_sites).map(|x| self.probs[self.digit(cfg, x)]).product()
    }

    pub fn sqrt_weights(&self) -> Vec<f64> {
        (0..self.total).map(|c| self.weight(c).sqrt()).collect()
    }

    /// Configuration index of the shifted configuration
    /// `(sigma_zeta omega)(y) = omega(y + zeta)`.
    pub fn shifted(&self, cfg: usize, offset: &[i64], lattice: &Lattice) -> usize {
        let mut out = 0usize;
        for y in 0..self.n_sites {
            let src = lattice.shift(y, offset);
            out += self.digit(cfg, src) * self.powers[y];
        }
        out
    }
}

/// The Markov generator `B` on the finite configuration space, in both the
/// plain function basis and the mu-symmetrized basis.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    plain: Array2<f64>,
    space: ConfigSpace,
    t_scale: f64,
}

impl GeneratorMatrix {
    /// Matrix acting on functions of the configuration; `B 1 = 0` exactly.
    pub fn plain(&self) -> &Array2<f64> {
        &self.plain
    }

    /// `D^{1/2} B D^{-1/2}` with `D = diag(mu)`: symmetric for reversible
    /// models, and Euclidean inner products agree with `L^2(mu)`.
    pub fn tilded(&self) -> Array2<f64> {
        let sq = self.space.sqrt_weights();
        let n = self.space.total();
        Array2::from_shape_fn((n, n), |(i, j)| self.plain[[i, j]] * sq[i] / sq[j])
    }

    pub fn space(&self) -> &ConfigSpace {
        &self.space
    }

    pub fn t_scale(&self) -> f64 {
        self.t_scale
    }
}

/// Assemble the generator matrix of a jump model on the lattice.
pub fn generator_matrix(process: &NoiseProcess, lattice: &Lattice, cap: usize) -> Result<GeneratorMatrix> {
    let space = ConfigSpace::for_process(process, lattice, cap)?;
    let n = space.total();
    let t_scale = process.t_scale().unwrap();
    let mut b = Array2::<f64>::zeros((n, n));
    if matches!(process, NoiseProcess::Flip(_)) {
        // sum over sites of single-site resampling generators (1/T)(I - P_nu)
        for cfg in 0..n {
            for site in 0..space.n_sites() {
                let cur = space.digit(cfg, site);
                for s in 0..space.states_per_site() {
                    if s != cur {
                        b[[cfg, space.replace(cfg, site, s)]] -= space.probs[s] / t_scale;
                    }
                }
            }
        }
    } else {
        // (1/T)(I - Pi_mu) with Pi_mu the rank-one projection onto constants
        for cfg in 0..n {
            for other in 0..n {
                if other != cfg {
                    b[[cfg, other]] = -space.weight(other) / t_scale;
                }
            }
        }
    }
    // diagonal balances the row so the constant function is annihilated
    for cfg in 0..n {
        let off: f64 = (0..n).filter(|&j| j != cfg).map(|j| b[[cfg, j]]).sum();
        b[[cfg, cfg]] = -off;
    }
    Ok(GeneratorMatrix { plain: b, space, t_scale })
}

/// Gap, sector constants and potential non-degeneracy of the generator.
#[derive(Debug, Clone, serde::Serialize)]
pub struct GeneratorReport {
    /// Smallest real part of the spectrum of `B` on mean-zero functions.
    pub gap: f64,
    /// Sector ratio `max |Im<f,Bf>| / |Re<f,Bf> + b|` over mean-zero eigenvectors.
    pub q: f64,
    pub b: f64,
    /// `min_{x != 0} ||B^{-1}(v_x - v_0)||` in `L^2(mu)`.
    pub chi: f64,
}

pub fn generator_report(process: &NoiseProcess, lattice: &Lattice, cap: usize) -> Result<GeneratorReport> {
    use ndarray::Array1;
    use ndarray_linalg::{Eigh, Solve, UPLO};

    let gen = generator_matrix(process, lattice, cap)?;
    let space = gen.space().clone();
    let n = space.total();
    let tilded = gen.tilded();

    // mean-zero subspace = orthogonal complement of u0 = sqrt(mu), via a
    // Householder reflection sending u0 to e_0
    let u0 = Array1::from_vec(space.sqrt_weights());
    let mut w = u0.clone();
    w[0] -= 1.0; // u0 has unit norm
    let wn = w.dot(&w).sqrt();
    let restricted = if wn < 1e-14 {
        tilded.slice(ndarray::s![1.., 1..]).to_owned()
    } else {
        w /= wn;
        let mut h = Array2::<f64>::eye(n);
        for i in 0..n {
            for j in 0..n {
                h[[i, j]] -= 2.0 * w[i] * w[j];
            }
        }
        h.dot(&tilded).dot(&h).slice(ndarray::s![1.., 1..]).to_owned()
    };

    let asym = restricted
        .indexed_iter()
        .map(|((i, j), v)| (v - restricted[[j, i]]).abs())
        .fold(0.0f64, f64::max);
    let (gap, q) = if asym < 1e-10 {
        let sym = 0.5 * (&restricted + &restricted.t());
        let (eigs, _) = sym.eigh(UPLO::Lower)?;
        (eigs.iter().cloned().fold(f64::INFINITY, f64::min), 0.0)
    } else {
        use ndarray_linalg::Eig;
        let cm = restricted.mapv(|v| num_complex::Complex64::new(v, 0.0));
        let (eigs, vecs) = cm.eig()?;
        let gap = eigs.iter().map(|e| e.re).fold(f64::INFINITY, f64::min);
        let mut q = 0.0f64;
        for k in 0..eigs.len() {
            let f = vecs.column(k);
            let bf = cm.dot(&f);
            let ip: num_complex::Complex64 = f.iter().zip(bf.iter()).map(|(a, c)| a.conj() * c).sum();
            if ip.re.abs() > 1e-14 {
                q = q.max(ip.im.abs() / ip.re.abs());
            }
        }
        (gap, q)
    };

    // chi: bordered solve B y + lam u0 = w_x, u0.y = 0 on the tilded matrix
    let mut bord = Array2::<f64>::zeros((n + 1, n + 1));
    bord.slice_mut(ndarray::s![..n, ..n]).assign(&tilded);
    for i in 0..n {
        bord[[i, n]] = u0[i];
        bord[[n, i]] = u0[i];
    }
    let mut chi = f64::INFINITY;
    for x in 1..space.n_sites() {
        let mut rhs = Array1::<f64>::zeros(n + 1);
        for cfg in 0..n {
            rhs[cfg] = (space.site_value(cfg, x) - space.site_value(cfg, 0)) * u0[cfg];
        }
        let sol = bord.solve(&rhs)?;
        let norm = sol.slice(ndarray::s![..n]).dot(&sol.slice(ndarray::s![..n])).sqrt();
        chi = chi.min(norm);
    }

    Ok(GeneratorReport { gap, q, b: 0.0, chi })
}
