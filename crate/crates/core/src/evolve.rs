//! Single-realization integration of the noisy Schrödinger equation.
//!
//! The Strang mode applies `exp(-i dt/2 V) exp(-i dt K) exp(-i dt/2 V)` per
//! substep with the hopping factor evaluated exactly through its Fourier
//! multiplier, so both factors are unitary and all deterministic error comes
//! from operator splitting. Jump events split substeps at the exact event
//! times, keeping the potential path exact. The dense mode applies the exact
//! matrix exponential between events and serves as the oracle.

use ndarray::{Array1, Array2};
use ndarray_linalg::{Eigh, UPLO};
use num_complex::Complex64 as C64;
use rand_chacha::ChaCha12Rng;

use crate::error::{Error, Result};
use crate::fourier::{symbol_grid, LatticeFft};
use crate::kernel::HoppingKernel;
use crate::lattice::Lattice;
use crate::noise::{sample_invariant, NoiseProcess, NoiseState};
use crate::wavefunction::WaveFunction;

/// Dense-exponential mode is an oracle for small systems only.
pub const DENSE_SITE_CAP: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Integrator {
    Strang,
    DenseExponential,
}

/// Everything needed to evolve one realization.
#[derive(Debug, Clone)]
pub struct EvolutionSpec {
    kernel: HoppingKernel,
    process: NoiseProcess,
    t_final: f64,
    dt: f64,
    integrator: Integrator,
    snapshots: Vec<f64>,
}

impl EvolutionSpec {
    /// Build a spec with the default substep `dt = min(0.01, 0.01 T)` and the
    /// Strang integrator. Empty `snapshots` defaults to `[t_final]`.
    pub fn new(
        kernel: HoppingKernel,
        process: NoiseProcess,
        t_final: f64,
        snapshots: Vec<f64>,
    ) -> Result<Self> {
        if !(t_final >= 0.0) {
            return Err(Error::InvalidParameter(format!("t_final must be >= 0, got {t_final}")));
        }
        if !kernel.check_assumptions(kernel.weight_m()).self_adjoint {
            return Err(Error::InvalidParameter(
                "kernel must be self-adjoint for unitary evolution".into(),
            ));
        }
        let mut snapshots = if snapshots.is_empty() { vec![t_final] } else { snapshots };
        snapshots.sort_by(|a, b| a.partial_cmp(b).unwrap());
        snapshots.dedup();
        if snapshots.iter().any(|&s| !(0.0..=t_final).contains(&s)) {
            return Err(Error::InvalidParameter(format!(
                "snapshot times {snapshots:?} must lie in [0, {t_final}]"
            )));
        }
        let dt = match process.t_scale() {
            Some(t) => (0.01f64).min(0.01 * t),
            None => 0.01,
        };
        Ok(EvolutionSpec { kernel, process, t_final, dt, integrator: Integrator::Strang, snapshots })
    }

    pub fn with_dt(mut self, dt: f64) -> Result<Self> {
        if !(dt > 0.0) {
            return Err(Error::InvalidParameter(format!("dt must be positive, got {dt}")));
        }
        self.dt = dt;
        Ok(self)
    }

    pub fn with_integrator(mut self, integrator: Integrator) -> Self {
        self.integrator = integrator;
        self
    }

    pub fn kernel(&self) -> &HoppingKernel {
        &self.kernel
    }

    pub fn process(&self) -> &NoiseProcess {
        &self.process
    }

    pub fn t_final(&self) -> f64 {
        self.t_final
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn integrator(&self) -> Integrator {
        self.integrator
    }

    pub fn snapshots(&self) -> &[f64] {
        &self.snapshots
    }
}

/// One applied noise event (`site = None` means a whole-field resample).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseEventRecord {
    pub time: f64,
    pub site: Option<usize>,
}

/// Piecewise-constant potential along one realization.
#[derive(Debug, Clone, Default)]
pub struct NoisePath {
    segments: Vec<PathSegment>,
}

#[derive(Debug, Clone)]
pub struct PathSegment {
    pub t_start: f64,
    pub t_end: f64,
    pub potential: Vec<f64>,
}

impl NoisePath {
    pub fn segments(&self) -> &[PathSegment] {
        &self.segments
    }

    pub fn t_end(&self) -> f64 {
        self.segments.last().map_or(0.0, |s| s.t_end)
    }

    fn push(&mut self, t_start: f64, t_end: f64, potential: &[f64]) {
        if t_end <= t_start {
            return;
        }
        if let Some(last) = self.segments.last_mut() {
            if last.t_end == t_start && last.potential == potential {
                last.t_end = t_end;
                return;
            }
        }
        self.segments.push(PathSegment { t_start, t_end, potential: potential.to_vec() });
    }
}

/// The result of evolving one realization.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub snapshots: Vec<(f64, WaveFunction)>,
    pub events: Vec<NoiseEventRecord>,
}

impl Trajectory {
    pub fn at(&self, t: f64) -> Option<&WaveFunction> {
        self.snapshots
            .iter()
            .find(|(s, _)| (s - t).abs() <= 1e-12 * t.abs().max(1.0))
            .map(|(_, w)| w)
    }
}

/// Evolve `psi0` along one noise realization drawn from `stream`.
pub fn evolve(psi0: &WaveFunction, spec: &EvolutionSpec, stream: ChaCha12Rng) -> Result<Trajectory> {
    let noise = sample_invariant(spec.process(), psi0.lattice(), stream);
    evolve_along(psi0, spec, noise, false).map(|(t, _)| t)
}

/// Evolve and record the piecewise-constant potential path.
pub fn evolve_recorded(
    psi0: &WaveFunction,
    spec: &EvolutionSpec,
    stream: ChaCha12Rng,
) -> Result<(Trajectory, NoisePath)> {
    let noise = sample_invariant(spec.process(), psi0.lattice(), stream);
    let (t, p) = evolve_along(psi0, spec, noise, true)?;
    Ok((t, p.unwrap()))
}

/// Evolve from an explicitly prepared noise state.
pub fn evolve_from_state(
    psi0: &WaveFunction,
    spec: &EvolutionSpec,
    noise: NoiseState,
) -> Result<Trajectory> {
    evolve_along(psi0, spec, noise, false).map(|(t, _)| t)
}

enum Engine {
    Strang {
        fft: LatticeFft,
        symbol: Vec<f64>,
        phase: Vec<C64>,
    },
    Dense {
        k_dense: Array2<C64>,
    },
}

impl Engine {
    fn apply_segment(&mut self, psi: &mut [C64], len: f64, v: &[f64]) {
        if len <= 0.0 {
            return;
        }
        match self {
            Engine::Strang { fft, symbol, phase } => {
                apply_potential_phase(psi, v, 0.5 * len);
                for (p, s) in phase.iter_mut().zip(symbol.iter()) {
                    let (sin, cos) = (len * s).sin_cos();
                    *p = C64::new(cos, -sin);
                }
                fft.forward(psi);
                for (a, p) in psi.iter_mut().zip(phase.iter()) {
                    *a *= p;
                }
                fft.inverse(psi);
                apply_potential_phase(psi, v, 0.5 * len);
            }
            Engine::Dense { k_dense } => {
                let mut h = k_dense.clone();
                for (i, &vi) in v.iter().enumerate() {
                    h[[i, i]] += C64::new(vi, 0.0);
                }
                let (w, u) = h.eigh(UPLO::Lower).expect("hermitian eigensolve");
                let psi_vec = Array1::from_vec(psi.to_vec());
                let mut coeff = u.t().mapv(|x| x.conj()).dot(&psi_vec);
                for (c, &e) in coeff.iter_mut().zip(w.iter()) {
                    let (sin, cos) = (len * e).sin_cos();
                    *c *= C64::new(cos, -sin);
                }
                let out = u.dot(&coeff);
                psi.copy_from_slice(out.as_slice().unwrap());
            }
        }
    }
}

/// Multiply by `exp(-i a v(x))` per site, memoizing the exponential over the
/// few distinct potential values of the jump models.
fn apply_potential_phase(psi: &mut [C64], v: &[f64], a: f64) {
    let mut cache: [(f64, C64); 8] = [(f64::NAN, C64::new(0.0, 0.0)); 8];
    let mut cached = 0usize;
    'sites: for (p, &vi) in psi.iter_mut().zip(v) {
        for &(cv, cp) in &cache[..cached] {
            if cv == vi {
                *p *= cp;
                continue 'sites;
            }
        }
        let (sin, cos) = (a * vi).sin_cos();
        let ph = C64::new(cos, -sin);
        if cached < cache.len() {
            cache[cached] = (vi, ph);
            cached += 1;
        }
        *p *= ph;
    }
}

fn evolve_along(
    psi0: &WaveFunction,
    spec: &EvolutionSpec,
    mut noise: NoiseState,
    record: bool,
) -> Result<(Trajectory, Option<NoisePath>)> {
    let lattice = psi0.lattice().clone();
    spec.kernel().check_fits(&lattice)?;
    if psi0.norm_sq() == 0.0 {
        return Err(Error::InvalidParameter("initial state must be nonzero".into()));
    }
    let mut engine = match spec.integrator() {
        Integrator::Strang => Engine::Strang {
            symbol: symbol_grid(spec.kernel(), &lattice)?,
            fft: LatticeFft::new(&lattice),
            phase: vec![C64::new(0.0, 0.0); lattice.len()],
        },
        Integrator::DenseExponential => {
            if lattice.len() > DENSE_SITE_CAP {
                return Err(Error::DenseCapExceeded { dim: lattice.len(), cap: DENSE_SITE_CAP });
            }
            Engine::Dense { k_dense: spec.kernel().dense_matrix(&lattice)? }
        }
    };

    let mut psi: Vec<C64> = psi0.amplitudes().to_vec();
    let mut v = vec![0.0; lattice.len()];
    let mut path = record.then(NoisePath::default);
    let mut events = Vec::new();
    let mut snapshots = Vec::with_capacity(spec.snapshots().len());
    let mut t = 0.0f64;

    for &mark in spec.snapshots() {
        if mark > t {
            // dense mode on piecewise-constant noise is exact between events
            let exact_between_events = spec.integrator() == Integrator::DenseExponential
                && !matches!(spec.process(), NoiseProcess::Brownian(_));
            let n_sub = if exact_between_events {
                1
            } else {
                (((mark - t) / spec.dt()) - 1e-9).ceil().max(1.0) as usize
            };
            let delta = (mark - t) / n_sub as f64;
            for step in 0..n_sub {
                let sub_end = if step + 1 == n_sub { mark } else { t + delta };
                match spec.process() {
                    NoiseProcess::Brownian(_) => {
                        noise.brownian_midpoint_step(sub_end - t, &mut v);
                        engine.apply_segment(&mut psi, sub_end - t, &v);
                        if let Some(p) = path.as_mut() {
                            p.push(t, sub_end, &v);
                        }
                    }
                    _ => {
                        // split exactly at jump events inside the substep
                        let mut cur = t;
                        while let Some(te) = noise.pending_event() {
                            if te > sub_end {
                                break;
                            }
                            noise.potential_field_into(&mut v);
                            engine.apply_segment(&mut psi, te - cur, &v);
                            if let Some(p) = path.as_mut() {
                                p.push(cur, te, &v);
                            }
                            let before = noise.config().to_vec();
                            noise.apply_pending_event();
                            let site = matches!(spec.process(), NoiseProcess::Flip(_))
                                .then(|| {
                                    noise.config().iter().zip(&before).position(|(a, b)| a != b)
                                })
                                .flatten();
                            events.push(NoiseEventRecord { time: te, site });
                            cur = te;
                        }
                        noise.potential_field_into(&mut v);
                        engine.apply_segment(&mut psi, sub_end - cur, &v);
                        if let Some(p) = path.as_mut() {
                            p.push(cur, sub_end, &v);
                        }
                        noise.advance(sub_end - noise.time());
                    }
                }
                t = sub_end;
            }
        }
        let wf = psi0.with_amplitudes(psi.clone());
        debug_assert!(
            (wf.norm() - psi0.norm()).abs() <= 1e-10 * psi0.norm().max(1.0),
            "unitarity violated at t = {mark}"
        );
        snapshots.push((mark, wf));
    }

    Ok((Trajectory { snapshots, events }, path))
}

/// Dense propagator `U(t, s)` along a recorded noise path.
#[derive(Debug, Clone)]
pub struct Propagator {
    matrix: Array2<C64>,
    t_start: f64,
    t_end: f64,
    path: Vec<PathSegment>,
}

impl Propagator {
    pub fn matrix(&self) -> &Array2<C64> {
        &self.matrix
    }

    pub fn times(&self) -> (f64, f64) {
        (self.t_start, self.t_end)
    }

    /// The clipped noise-path segments the propagator was built from.
    pub fn path(&self) -> &[PathSegment] {
        &self.path
    }

    pub fn apply(&self, psi: &WaveFunction) -> Result<WaveFunction> {
        if psi.amplitudes().len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch("propagator vs wave function size".into()));
        }
        let v = Array1::from_vec(psi.amplitudes().to_vec());
        let out = self.matrix.dot(&v);
        Ok(psi.with_amplitudes(out.to_vec()))
    }
}

/// Assemble `U(t, s)` for a kernel along a recorded path (dense mode).
pub fn propagator(
    kernel: &HoppingKernel,
    lattice: &Lattice,
    path: &NoisePath,
    s: f64,
    t: f64,
) -> Result<Propagator> {
    if lattice.len() > DENSE_SITE_CAP {
        return Err(Error::DenseCapExceeded { dim: lattice.len(), cap: DENSE_SITE_CAP });
    }
    if !(s <= t) {
        return Err(Error::InvalidParameter(format!("need s <= t, got s={s}, t={t}")));
    }
    if t > path.t_end() + 1e-12 {
        return Err(Error::InvalidParameter(format!(
            "requested time {t} beyond the recorded path end {}",
            path.t_end()
        )));
    }
    let n = lattice.len();
    let k_dense = kernel.dense_matrix(lattice)?;
    let mut u = Array2::<C64>::eye(n);
    let mut used = Vec::new();
    for seg in path.segments() {
        let a = seg.t_start.max(s);
        let b = seg.t_end.min(t);
        if b <= a {
            continue;
        }
        let mut h = k_dense.clone();
        for (i, &vi) in seg.potential.iter().enumerate() {
            h[[i, i]] += C64::new(vi, 0.0);
        }
        let (w, vmat) = h.eigh(UPLO::Lower)?;
        // U <- V diag(exp(-i (b-a) w)) V^dagger U
        let mut tmp = vmat.t().mapv(|x| x.conj()).dot(&u);
        for (mut row, &e) in tmp.rows_mut().into_iter().zip(w.iter()) {
            let (sin, cos) = ((b - a) * e).sin_cos();
            let ph = C64::new(cos, -sin);
            row.mapv_inplace(|x| x * ph);
        }
        u = vmat.dot(&tmp);
        used.push(PathSegment { t_start: a, t_end: b, potential: seg.potential.clone() });
    }
    Ok(Propagator { matrix: u, t_start: s, t_end: t, path: used })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::noise::{trajectory_stream, DiscreteMeasure};

    /// `J_0 .. J_nmax` by Miller's backward recurrence.
    pub(crate) fn bessel_j_row(x: f64, nmax: usize) -> Vec<f64> {
        if x == 0.0 {
            let mut out = vec![0.0; nmax + 1];
            out[0] = 1.0;
            return out;
        }
        let start = nmax + 20 + (1.5 * x) as usize;
        let mut jp = 0.0f64;
        let mut j = 1e-30f64;
        let mut out = vec![0.0; nmax + 1];
        let mut norm = 0.0;
        for n in (0..=start).rev() {
            let jm = (2.0 * (n as f64 + 1.0) / x) * j - jp;
            jp = j;
            j = jm;
            if n <= nmax {
                out[n] = j;
            }
            if n % 2 == 0 && n > 0 {
                norm += 2.0 * j;
            }
            if j.abs() > 1e250 {
                jp /= 1e250;
                j /= 1e250;
                norm /= 1e250;
                for v in out.iter_mut() {
                    *v /= 1e250;
                }
            }
        }
        norm += j;
        for v in out.iter_mut() {
            *v /= norm;
        }
        out
    }

    fn free_process() -> NoiseProcess {
        NoiseProcess::frozen(DiscreteMeasure::point(0.0))
    }

    #[test]
    fn zero_time_returns_initial_state() {
        let lat = Lattice::line(8).unwrap();
        let psi0 = WaveFunction::delta(lat, &[0]).unwrap();
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let spec = EvolutionSpec::new(kernel, free_process(), 0.0, vec![]).unwrap();
        let traj = evolve(&psi0, &spec, trajectory_stream(0, 0)).unwrap();
        assert_eq!(traj.snapshots.len(), 1);
        assert_eq!(traj.snapshots[0].0, 0.0);
        assert_eq!(traj.snapshots[0].1.amplitudes(), psi0.amplitudes());
    }

    #[test]
    fn free_evolution_matches_bessel() {
        let l = 32;
        let t = 1.5;
        let lat = Lattice::line(l).unwrap();
        let psi0 = WaveFunction::delta(lat.clone(), &[0]).unwrap();
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        for integ in [Integrator::DenseExponential, Integrator::Strang] {
            let spec = EvolutionSpec::new(kernel.clone(), free_process(), t, vec![t])
                .unwrap()
                .with_integrator(integ);
            let traj = evolve(&psi0, &spec, trajectory_stream(1, 0)).unwrap();
            let psi_t = traj.at(t).unwrap();
            let bessel = bessel_j_row(2.0 * t, l / 2);
            for x in 0..l {
                let order = lat.minimal_image(x)[0].unsigned_abs() as usize;
                let expect = bessel[order] * bessel[order];
                assert!(
                    (psi_t.amplitudes()[x].norm_sqr() - expect).abs() < 1e-8,
                    "site {x}: {} vs {expect}",
                    psi_t.amplitudes()[x].norm_sqr()
                );
            }
        }
    }

    #[test]
    fn constant_potential_is_gauge_equivalent_to_free() {
        let l = 16;
        let t = 1.2;
        let lat = Lattice::line(l).unwrap();
        let psi0 = WaveFunction::delta(lat, &[3]).unwrap();
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let free = EvolutionSpec::new(kernel.clone(), free_process(), t, vec![t]).unwrap();
        let shifted = EvolutionSpec::new(
            kernel,
            NoiseProcess::frozen(DiscreteMeasure::point(0.7)),
            t,
            vec![t],
        )
        .unwrap();
        let a = evolve(&psi0, &free, trajectory_stream(2, 0)).unwrap();
        let b = evolve(&psi0, &shifted, trajectory_stream(2, 0)).unwrap();
        for (x, y) in a.at(t).unwrap().amplitudes().iter().zip(b.at(t).unwrap().amplitudes()) {
            assert!((x.norm() - y.norm()).abs() < 1e-12);
        }
    }

    #[test]
    fn norm_conserved_both_modes_all_models() {
        let lat = Lattice::line(12).unwrap();
        let psi0 = WaveFunction::delta(lat, &[0]).unwrap();
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        for process in [
            NoiseProcess::flip(0.5, 0.5).unwrap(),
            NoiseProcess::resample(0.5, DiscreteMeasure::bernoulli_pm1(0.3).unwrap()).unwrap(),
            NoiseProcess::brownian(0.5).unwrap(),
        ] {
            for integ in [Integrator::Strang, Integrator::DenseExponential] {
                let spec =
                    EvolutionSpec::new(kernel.clone(), process.clone(), 2.0, vec![0.5, 1.0, 2.0])
                        .unwrap()
                        .with_integrator(integ);
                let traj = evolve(&psi0, &spec, trajectory_stream(3, 1)).unwrap();
                for (tt, wf) in &traj.snapshots {
                    assert!(
                        (wf.norm() - 1.0).abs() < 1e-10,
                        "norm {} at t={tt} ({process:?}, {integ:?})",
                        wf.norm()
                    );
                }
            }
        }
    }

    #[test]
    fn strang_second_order_against_dense_oracle() {
        let l = 16;
        let t = 2.0;
        let lat = Lattice::line(l).unwrap();
        let psi0 = WaveFunction::delta(lat, &[0]).unwrap();
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let process = NoiseProcess::flip(1.0, 0.5).unwrap();
        // jump models consume the stream identically for every dt, so the
        // noise path is shared across these runs
        let dense = EvolutionSpec::new(kernel.clone(), process.clone(), t, vec![t])
            .unwrap()
            .with_integrator(Integrator::DenseExponential);
        let exact = evolve(&psi0, &dense, trajectory_stream(4, 7)).unwrap();
        let mut errs = Vec::new();
        for dt in [0.02, 0.01, 0.005] {
            let spec = EvolutionSpec::new(kernel.clone(), process.clone(), t, vec![t])
                .unwrap()
                .with_dt(dt)
                .unwrap();
            let traj = evolve(&psi0, &spec, trajectory_stream(4, 7)).unwrap();
            let err = traj
                .at(t)
                .unwrap()
                .amplitudes()
                .iter()
                .zip(exact.at(t).unwrap().amplitudes())
                .map(|(a, b)| (a - b).norm())
                .fold(0.0f64, f64::max);
            errs.push(err);
        }
        assert!(errs[0] / errs[1] >= 3.5, "halving dt gained only {}", errs[0] / errs[1]);
        assert!(errs[1] / errs[2] >= 3.5, "halving dt gained only {}", errs[1] / errs[2]);
    }

    #[test]
    fn deterministic_for_fixed_stream() {
        let lat = Lattice::line(16).unwrap();
        let psi0 = WaveFunction::delta(lat, &[0]).unwrap();
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let process = NoiseProcess::flip(0.7, 0.4).unwrap();
        let spec = EvolutionSpec::new(kernel, process, 1.5, vec![0.5, 1.5]).unwrap();
        let a = evolve(&psi0, &spec, trajectory_stream(9, 3)).unwrap();
        let b = evolve(&psi0, &spec, trajectory_stream(9, 3)).unwrap();
        for ((_, x), (_, y)) in a.snapshots.iter().zip(&b.snapshots) {
            assert_eq!(x.amplitudes(), y.amplitudes());
        }
        assert_eq!(a.events.len(), b.events.len());
    }

    #[test]
    fn propagator_identity_composition_unitarity() {
        let l = 10;
        let lat = Lattice::line(l).unwrap();
        let psi0 = WaveFunction::delta(lat.clone(), &[0]).unwrap();
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let process = NoiseProcess::flip(0.8, 0.5).unwrap();
        let spec = EvolutionSpec::new(kernel.clone(), process, 2.0, vec![2.0])
            .unwrap()
            .with_integrator(Integrator::DenseExponential);
        let (_, path) = evolve_recorded(&psi0, &spec, trajectory_stream(5, 2)).unwrap();

        let eye = propagator(&kernel, &lat, &path, 0.7, 0.7).unwrap();
        for ((i, j), v) in eye.matrix().indexed_iter() {
            let e = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            assert_eq!(*v, e);
        }

        let (r, s, t) = (0.3, 1.1, 1.9);
        let u_ts = propagator(&kernel, &lat, &path, s, t).unwrap();
        let u_sr = propagator(&kernel, &lat, &path, r, s).unwrap();
        let u_tr = propagator(&kernel, &lat, &path, r, t).unwrap();
        let prod = u_ts.matrix().dot(u_sr.matrix());
        let err = prod
            .iter()
            .zip(u_tr.matrix().iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-8, "composition error {err}");

        let udu = u_tr.matrix().t().mapv(|x| x.conj()).dot(u_tr.matrix());
        let uerr = udu
            .indexed_iter()
            .map(|((i, j), v)| {
                (v - if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) }).norm()
            })
            .fold(0.0f64, f64::max);
        assert!(uerr < 1e-8, "unitarity error {uerr}");
    }

    #[test]
    fn forward_then_adjoint_returns_initial_state() {
        let lat = Lattice::line(12).unwrap();
        let psi0 = WaveFunction::delta(lat.clone(), &[2]).unwrap();
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let process = NoiseProcess::flip(0.6, 0.5).unwrap();
        let spec = EvolutionSpec::new(kernel.clone(), process, 1.5, vec![1.5])
            .unwrap()
            .with_integrator(Integrator::DenseExponential);
        let (traj, path) = evolve_recorded(&psi0, &spec, trajectory_stream(6, 4)).unwrap();
        let u = propagator(&kernel, &lat, &path, 0.0, 1.5).unwrap();
        let forward = u.apply(&psi0).unwrap();
        // the recorded trajectory and the assembled propagator agree
        for (a, b) in forward.amplitudes().iter().zip(traj.at(1.5).unwrap().amplitudes()) {
            assert!((a - b).norm() < 1e-9);
        }
        let back = u
            .matrix()
            .t()
            .mapv(|x| x.conj())
            .dot(&Array1::from_vec(forward.amplitudes().to_vec()));
        for (a, b) in back.iter().zip(psi0.amplitudes()) {
            assert!((a - b).norm() < 1e-8);
        }
    }

    #[test]
    fn snapshot_out_of_range_rejected() {
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        assert!(EvolutionSpec::new(kernel, free_process(), 1.0, vec![2.0]).is_err());
    }

    #[test]
    fn brownian_strang_vs_dense_same_stream_agree() {
        // with matched streams the Brownian midpoint potentials coincide, so
        // both integrators walk the same piecewise path
        let lat = Lattice::line(8).unwrap();
        let psi0 = WaveFunction::delta(lat, &[0]).unwrap();
        let kernel = HoppingKernel::laplacian(1, 0.5).unwrap();
        let process = NoiseProcess::brownian(1.0).unwrap();
        let t = 0.5;
        let spec_s = EvolutionSpec::new(kernel.clone(), process.clone(), t, vec![t])
            .unwrap()
            .with_dt(0.002)
            .unwrap();
        let spec_d = EvolutionSpec::new(kernel, process, t, vec![t])
            .unwrap()
            .with_dt(0.002)
            .unwrap()
            .with_integrator(Integrator::DenseExponential);
        let a = evolve(&psi0, &spec_s, trajectory_stream(8, 1)).unwrap();
        let b = evolve(&psi0, &spec_d, trajectory_stream(8, 1)).unwrap();
        let err = a
            .at(t)
            .unwrap()
            .amplitudes()
            .iter()
            .zip(b.at(t).unwrap().amplitudes())
            .map(|(x, y)| (x - y).norm())
            .fold(0.0f64, f64::max);
        assert!(err < 1e-5, "strang vs dense on shared brownian path: {err}");
    }
}
