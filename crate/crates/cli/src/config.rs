//! Experiment configuration: one JSON document per run, with dotted-path
//! overrides and a canonical hash for reproducibility.

use anyhow::{anyhow, bail, Context};
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use malab::evolve::{EvolutionSpec, Integrator};
use malab::noise::{DiscreteMeasure, NoiseProcess};
use malab::{ExpProfile, HoppingKernel, Lattice, WaveFunction};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentKind {
    DiffusionScan,
    Clt,
    FkpCheck,
    Spectral,
    LrBound,
    Assumptions,
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::DiffusionScan => "diffusion-scan",
            ExperimentKind::Clt => "clt",
            ExperimentKind::FkpCheck => "fkp-check",
            ExperimentKind::Spectral => "spectral",
            ExperimentKind::LrBound => "lr-bound",
            ExperimentKind::Assumptions => "assumptions",
        }
    }
}

/// Kernel specification: entries are `[offset components..., re, im]` rows,
/// or the named preset `"laplacian"` expanding to `h(+-e_i) = 1`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub entries: Option<Vec<Vec<f64>>>,
    pub m: f64,
}

impl KernelSpec {
    pub fn build(&self, dim: usize) -> anyhow::Result<HoppingKernel> {
        match (&self.preset, &self.entries) {
            (Some(name), None) => {
                if name == "laplacian" {
                    Ok(HoppingKernel::laplacian(dim, self.m)?)
                } else {
                    bail!("config field kernel.preset: unknown preset {name:?}")
                }
            }
            (None, Some(rows)) => {
                let mut entries = Vec::new();
                for (i, row) in rows.iter().enumerate() {
                    if row.len() != dim + 2 {
                        bail!(
                            "config field kernel.entries[{i}]: expected {} values \
                             (offset components, re, im), got {}",
                            dim + 2,
                            row.len()
                        );
                    }
                    let mut offset = Vec::with_capacity(dim);
                    for (k, &c) in row[..dim].iter().enumerate() {
                        if c.fract() != 0.0 {
                            bail!("config field kernel.entries[{i}][{k}]: offset must be an integer");
                        }
                        offset.push(c as i64);
                    }
                    entries.push((offset, C64::new(row[dim], row[dim + 1])));
                }
                Ok(HoppingKernel::new(dim, entries, self.m)?)
            }
            _ => bail!("config field kernel: give exactly one of `preset` or `entries`"),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum ProcessSpec {
    Flip {
        #[serde(rename = "T")]
        t_scale: f64,
        p: f64,
    },
    Resample {
        #[serde(rename = "T")]
        t_scale: f64,
        nu: Vec<(f64, f64)>,
    },
    Brownian {
        #[serde(rename = "T")]
        t_scale: f64,
    },
    Frozen {
        nu: Vec<(f64, f64)>,
    },
}

impl ProcessSpec {
    pub fn build(&self) -> anyhow::Result<NoiseProcess> {
        Ok(match self {
            ProcessSpec::Flip { t_scale, p } => NoiseProcess::flip(*t_scale, *p)?,
            ProcessSpec::Resample { t_scale, nu } => {
                NoiseProcess::resample(*t_scale, DiscreteMeasure::new(nu.clone())?)?
            }
            ProcessSpec::Brownian { t_scale } => NoiseProcess::brownian(*t_scale)?,
            ProcessSpec::Frozen { nu } => NoiseProcess::frozen(DiscreteMeasure::new(nu.clone())?),
        })
    }

    pub fn is_jump(&self) -> bool {
        matches!(self, ProcessSpec::Flip { .. } | ProcessSpec::Resample { .. })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Psi0Spec {
    Delta {
        #[serde(skip_serializing_if = "Option::is_none")]
        at: Option<Vec<i64>>,
    },
    Exponential {
        mu: f64,
        a_mu: f64,
    },
    Explicit {
        re: Vec<f64>,
        #[serde(default, skip_serializing_if = "Vec::is_empty")]
        im: Vec<f64>,
        #[serde(skip_serializing_if = "Option::is_none")]
        profile: Option<(f64, f64)>,
    },
}

impl Default for Psi0Spec {
    fn default() -> Self {
        Psi0Spec::Delta { at: None }
    }
}

impl Psi0Spec {
    pub fn build(&self, lattice: &Lattice) -> anyhow::Result<WaveFunction> {
        Ok(match self {
            Psi0Spec::Delta { at } => {
                let coord = at.clone().unwrap_or_else(|| vec![0; lattice.dim()]);
                WaveFunction::delta(lattice.clone(), &coord)?
            }
            Psi0Spec::Exponential { mu, a_mu } => {
                WaveFunction::exponential(lattice.clone(), *mu, *a_mu)?
            }
            Psi0Spec::Explicit { re, im, profile } => {
                if !im.is_empty() && im.len() != re.len() {
                    bail!("config field psi0.im: length {} vs re length {}", im.len(), re.len());
                }
                let amps: Vec<C64> = re
                    .iter()
                    .enumerate()
                    .map(|(i, &r)| C64::new(r, im.get(i).copied().unwrap_or(0.0)))
                    .collect();
                let profile = profile.map(|(mu, a_mu)| ExpProfile { mu, a_mu });
                WaveFunction::from_amplitudes(lattice.clone(), amps, profile)?
            }
        })
    }

    /// The analyticity strip half-width of the initial state.
    pub fn mu(&self) -> f64 {
        match self {
            Psi0Spec::Delta { .. } => f64::INFINITY,
            Psi0Spec::Exponential { mu, .. } => *mu,
            Psi0Spec::Explicit { profile, .. } => profile.map(|(mu, _)| mu).unwrap_or(0.0),
        }
    }
}

/// One complex argument: a `[re, im]` pair per lattice axis.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ZPoint(pub Vec<[f64; 2]>);

impl ZPoint {
    pub fn to_c64(&self) -> Vec<C64> {
        self.0.iter().map(|p| C64::new(p[0], p[1])).collect()
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct CapsSpec {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config_states: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dense_dim: Option<usize>,
}

impl CapsSpec {
    pub fn build(&self) -> malab::augmented::AugmentedCaps {
        let mut caps = malab::augmented::AugmentedCaps::default();
        if let Some(c) = self.config_states {
            caps.config_states = c;
        }
        if let Some(d) = self.dense_dim {
            caps.dense_dim = d;
        }
        caps
    }
}

/// Theorem-1 convergence block for the `clt` experiment: compares
/// `M_{tau t}(z / sqrt(tau))` against `exp(-(t/2) z.Dz)` over a `tau` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Theorem1Spec {
    pub z: ZPoint,
    pub t_base: f64,
    pub taus: Vec<f64>,
    #[serde(default = "default_theorem1_tol")]
    pub tol_final: f64,
}

fn default_theorem1_tol() -> f64 {
    0.05
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CltSpec {
    #[serde(default = "default_kurtosis_band")]
    pub kurtosis_band: [f64; 2],
    #[serde(default = "default_bump_width")]
    pub bump_width: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bump_center: Option<Vec<f64>>,
    #[serde(default = "default_quadrature_budget")]
    pub quadrature_budget: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theorem1: Option<Theorem1Spec>,
}

fn default_kurtosis_band() -> [f64; 2] {
    [3.0 * 0.85, 3.0 * 1.15]
}

fn default_bump_width() -> f64 {
    1.0
}

fn default_quadrature_budget() -> f64 {
    0.05
}

impl Default for CltSpec {
    fn default() -> Self {
        CltSpec {
            kurtosis_band: default_kurtosis_band(),
            bump_width: default_bump_width(),
            bump_center: None,
            quadrature_budget: default_quadrature_budget(),
            theorem1: None,
        }
    }
}

fn default_n_traj() -> u64 {
    1000
}

fn default_moments() -> Vec<u32> {
    vec![0, 2, 4]
}

fn default_n_realizations() -> usize {
    20
}

fn default_diffusion_rel_tol() -> f64 {
    0.15
}

fn default_diffusion_agreement_tol() -> f64 {
    1e-5
}

/// The single JSON document defining a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub lattice: Vec<usize>,
    pub kernel: KernelSpec,
    pub process: ProcessSpec,
    #[serde(default)]
    pub psi0: Psi0Spec,
    #[serde(default)]
    pub times: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// `"strang"` or `"dense"`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub integrator: Option<String>,
    #[serde(default = "default_n_traj")]
    pub n_traj: u64,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub z_points: Vec<ZPoint>,
    #[serde(default = "default_moments")]
    pub moments: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_boundary: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub caps: Option<CapsSpec>,
    /// Relative tolerance for `m_2(t)/t` against `tr D` (diffusion-scan).
    #[serde(default = "default_diffusion_rel_tol")]
    pub diffusion_rel_tol: f64,
    /// Entrywise relative tolerance between the two diffusion routes.
    #[serde(default = "default_diffusion_agreement_tol")]
    pub diffusion_agreement_tol: f64,
    /// Lattice for the spectral reference diffusion matrix.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference_lattice: Option<Vec<usize>>,
    /// Weight for the group-velocity bound (lr-bound); defaults to kernel m.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lr_m: Option<f64>,
    #[serde(default = "default_n_realizations")]
    pub n_realizations: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clt: Option<CltSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<Vec<serde_json::Map<String, serde_json::Value>>>,
}

impl ExperimentConfig {
    pub fn lattice(&self) -> anyhow::Result<Lattice> {
        Ok(Lattice::new(&self.lattice)?)
    }

    pub fn kernel(&self) -> anyhow::Result<HoppingKernel> {
        self.kernel.build(self.lattice.len())
    }

    pub fn process(&self) -> anyhow::Result<NoiseProcess> {
        self.process.build()
    }

    pub fn integrator(&self) -> anyhow::Result<Integrator> {
        match self.integrator.as_deref() {
            None => Ok(match self.experiment {
                ExperimentKind::FkpCheck => Integrator::DenseExponential,
                _ => Integrator::Strang,
            }),
            Some("strang") => Ok(Integrator::Strang),
            Some("dense") => Ok(Integrator::DenseExponential),
            Some(other) => bail!("config field integrator: unknown value {other:?}"),
        }
    }

    pub fn evolution_spec(&self) -> anyhow::Result<EvolutionSpec> {
        let t_final = self.times.iter().cloned().fold(0.0f64, f64::max);
        let mut spec = EvolutionSpec::new(
            self.kernel()?,
            self.process()?,
            t_final,
            self.times.clone(),
        )?
        .with_integrator(self.integrator()?);
        if let Some(dt) = self.dt {
            spec = spec.with_dt(dt)?;
        }
        Ok(spec)
    }

    pub fn caps(&self) -> malab::augmented::AugmentedCaps {
        self.caps.unwrap_or_default().build()
    }

    pub fn ensemble_options(&self) -> malab::ensemble::EnsembleOptions {
        let mut opts = malab::ensemble::EnsembleOptions::default();
        if let Some(e) = self.eps_boundary {
            opts.eps_boundary = e;
        }
        opts
    }

    /// Canonical serialization used for hashing and replay.
    pub fn canonical_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }

    pub fn hash_hex(&self) -> String {
        use sha2::{Digest, Sha256};
        let bytes = serde_json::to_vec(&self.canonical_json()).expect("config serializes");
        let digest = Sha256::digest(&bytes);
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn hash8(&self) -> String {
        self.hash_hex()[..8].to_string()
    }
}

/// Parse a config from a JSON value, which may also be a run manifest
/// (anything carrying a `config` object replays that config).
pub fn config_from_value(mut value: serde_json::Value) -> anyhow::Result<ExperimentConfig> {
    if let Some(inner) = value.get("config") {
        value = inner.clone();
    }
    serde_json::from_value(value).context("invalid configuration")
}

/// Apply a `key=value` override with a dotted path into the JSON document.
pub fn apply_override(value: &mut serde_json::Value, spec: &str) -> anyhow::Result<()> {
    let (path, raw) = spec
        .split_once('=')
        .ok_or_else(|| anyhow!("override {spec:?} is not of the form key=value"))?;
    let parsed: serde_json::Value = match serde_json::from_str(raw) {
        Ok(v) => v,
        Err(_) => serde_json::Value::String(raw.to_string()),
    };
    let mut cursor = value;
    let parts: Vec<&str> = path.split('.').collect();
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        if let Ok(idx) = part.parse::<usize>() {
            let arr = cursor
                .as_array_mut()
                .ok_or_else(|| anyhow!("override path {path:?}: {part} indexes a non-array"))?;
            if idx >= arr.len() {
                bail!("override path {path:?}: index {idx} out of bounds");
            }
            if last {
                arr[idx] = parsed;
                return Ok(());
            }
            cursor = &mut arr[idx];
        } else {
            let obj = cursor
                .as_object_mut()
                .ok_or_else(|| anyhow!("override path {path:?}: {part} indexes a non-object"))?;
            if last {
                obj.insert(part.to_string(), parsed);
                return Ok(());
            }
            cursor = obj
                .entry(part.to_string())
                .or_insert(serde_json::Value::Object(Default::default()));
        }
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Warning,
    Error,
}

#[derive(Debug, Clone, Serialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub field: String,
    pub message: String,
}

/// Static checks without running the experiment.
pub fn validate(config: &ExperimentConfig) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    fn err(diags: &mut Vec<Diagnostic>, field: &str, message: String) {
        diags.push(Diagnostic { severity: Severity::Error, field: field.into(), message });
    }

    let lattice = match config.lattice() {
        Ok(l) => Some(l),
        Err(e) => {
            err(&mut diags, "lattice", e.to_string());
            None
        }
    };
    let kernel = match config.kernel() {
        Ok(k) => Some(k),
        Err(e) => {
            err(&mut diags, "kernel", e.to_string());
            None
        }
    };
    if let Err(e) = config.process() {
        err(&mut diags, "process", e.to_string());
    }
    if let (Some(l), Some(k)) = (&lattice, &kernel) {
        if let Err(e) = k.check_fits(l) {
            err(&mut diags, "kernel.entries", e.to_string());
        }
    }
    if let Some(d) = config.dt {
        if !(d > 0.0) {
            err(&mut diags, "dt", format!("dt must be positive, got {d}"));
        }
    }

    let needs_ensemble = matches!(
        config.experiment,
        ExperimentKind::DiffusionScan | ExperimentKind::Clt | ExperimentKind::FkpCheck
    );
    if needs_ensemble {
        if config.n_traj < 2 {
            err(&mut diags, "n_traj", format!("Monte Carlo experiments need n_traj >= 2, got {}", config.n_traj));
        }
        if config.times.is_empty() {
            err(&mut diags, "times", "no snapshot times given".into());
        }
    }
    if config.experiment == ExperimentKind::LrBound && config.times.is_empty() {
        err(&mut diags, "times", "the lr-bound experiment needs a time grid".into());
    }

    // wraparound guard t v vs 0.4 L
    if let (Some(l), Some(k)) = (&lattice, &kernel) {
        let t_max = config.times.iter().cloned().fold(0.0f64, f64::max);
        let m = config.lr_m.unwrap_or(k.weight_m());
        let v = k.group_velocity(if config.experiment == ExperimentKind::LrBound { m } else { 0.0 });
        let min_l = l.extents().iter().copied().min().unwrap_or(0) as f64;
        if t_max > 0.0 && t_max * v >= 0.4 * min_l {
            diags.push(Diagnostic {
                severity: if config.experiment == ExperimentKind::LrBound {
                    Severity::Error
                } else {
                    Severity::Warning
                },
                field: "times".into(),
                message: format!(
                    "ballistic reach t v = {:.4} meets 0.4 min(L) = {:.4}; \
                     wraparound may contaminate weighted sums",
                    t_max * v,
                    0.4 * min_l
                ),
            });
        }
    }

    // analyticity region for requested complex arguments
    let mu = config.psi0.mu();
    for (i, z) in config.z_points.iter().enumerate() {
        if let Some(l) = &lattice {
            if z.0.len() != l.dim() {
                err(
                    &mut diags,
                    &format!("z_points[{i}]"),
                    format!("{} components for a {}-dimensional lattice", z.0.len(), l.dim()),
                );
                continue;
            }
        }
        for comp in &z.0 {
            if comp[1].abs() > 0.0 && comp[1].abs() >= mu {
                err(
                    &mut diags,
                    &format!("z_points[{i}]"),
                    format!(
                        "Im z = {} outside the analyticity region R_mu of psi0 (mu = {mu})",
                        comp[1]
                    ),
                );
            }
        }
    }

    // spectral-side experiments need a jump model and fitting caps
    let spectral_side = matches!(
        config.experiment,
        ExperimentKind::Spectral | ExperimentKind::FkpCheck
    );
    if spectral_side && !config.process.is_jump() {
        err(
            &mut diags,
            "process",
            format!(
                "the {} experiment needs a finite configuration space; \
                 the brownian model is unsupported",
                config.experiment.name()
            ),
        );
    }
    if config.experiment == ExperimentKind::Assumptions && !config.process.is_jump() {
        diags.push(Diagnostic {
            severity: Severity::Warning,
            field: "process".into(),
            message: "generator-based checks are skipped for models without a finite \
                      configuration space"
                .into(),
        });
    }
    if spectral_side {
        if let Some(l) = &lattice {
            if config.process.is_jump() {
                let caps = config.caps();
                let states_per_site = match &config.process {
                    ProcessSpec::Flip { .. } => 2usize,
                    ProcessSpec::Resample { nu, .. } => nu.len(),
                    _ => 0,
                };
                let n = l.len() as u32;
                let total = (states_per_site as f64).powi(n as i32);
                if total > caps.config_states as f64 {
                    err(
                        &mut diags,
                        "lattice",
                        format!(
                            "configuration space {states_per_site}^{n} = {total:.3e} exceeds \
                             the cap {}",
                            caps.config_states
                        ),
                    );
                } else if (total * l.len() as f64) > caps.dense_dim as f64 {
                    err(
                        &mut diags,
                        "lattice",
                        format!(
                            "augmented dimension {} exceeds the dense cap {}",
                            total * l.len() as f64,
                            caps.dense_dim
                        ),
                    );
                }
            }
        }
    }
    if config.experiment == ExperimentKind::Clt {
        if let Some(clt) = &config.clt {
            if let Some(t1) = &clt.theorem1 {
                if t1.taus.is_empty() {
                    err(&mut diags, "clt.theorem1.taus", "empty tau grid".into());
                }
            }
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base_json() -> serde_json::Value {
        serde_json::json!({
            "experiment": "assumptions",
            "lattice": [8],
            "kernel": {"preset": "laplacian", "m": 0.5},
            "process": {"type": "flip", "T": 1.0, "p": 0.5}
        })
    }

    #[test]
    fn config_round_trips_and_hashes_stably() {
        let cfg = config_from_value(base_json()).unwrap();
        let h1 = cfg.hash8();
        let again: ExperimentConfig =
            serde_json::from_value(cfg.canonical_json()).unwrap();
        assert_eq!(h1, again.hash8());
    }

    #[test]
    fn override_changes_hash() {
        let mut v = base_json();
        apply_override(&mut v, "process.T=2.5").unwrap();
        let cfg = config_from_value(v).unwrap();
        let base = config_from_value(base_json()).unwrap();
        assert_ne!(cfg.hash8(), base.hash8());
        match cfg.process {
            ProcessSpec::Flip { t_scale, .. } => assert_eq!(t_scale, 2.5),
            _ => panic!(),
        }
    }

    #[test]
    fn unknown_field_rejected_with_name() {
        let mut v = base_json();
        v.as_object_mut().unwrap().insert("bogus".into(), serde_json::json!(1));
        let err = config_from_value(v).unwrap_err();
        assert!(format!("{err:#}").contains("bogus"), "{err:#}");
    }

    #[test]
    fn manifest_value_replays_config() {
        let manifest = serde_json::json!({
            "experiment": "assumptions",
            "config": base_json(),
            "passed": true
        });
        let cfg = config_from_value(manifest).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Assumptions);
    }

    #[test]
    fn validate_flags_guard_and_region_and_brownian() {
        // wrap guard warning names both numbers
        let mut v = base_json();
        apply_override(&mut v, "experiment=\"diffusion-scan\"").unwrap();
        apply_override(&mut v, "times=[40.0]").unwrap();
        apply_override(&mut v, "n_traj=10").unwrap();
        let cfg = config_from_value(v).unwrap();
        let diags = validate(&cfg);
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Warning && d.message.contains("80") && d.message.contains("3.2")));

        // z outside the strip of an explicit psi0 without profile
        let mut v = base_json();
        apply_override(&mut v, "experiment=\"fkp-check\"").unwrap();
        apply_override(&mut v, "times=[0.5]").unwrap();
        apply_override(&mut v, "n_traj=10").unwrap();
        apply_override(
            &mut v,
            "psi0={\"type\": \"explicit\", \"re\": [1,0,0,0,0,0,0,0]}",
        )
        .unwrap();
        apply_override(&mut v, "z_points=[[[0.0, 0.2]]]").unwrap();
        let cfg = config_from_value(v).unwrap();
        let diags = validate(&cfg);
        assert!(diags.iter().any(|d| d.severity == Severity::Error && d.field.contains("z_points")));

        // brownian + spectral is an unsupported combination
        let mut v = base_json();
        apply_override(&mut v, "experiment=\"spectral\"").unwrap();
        apply_override(&mut v, "process={\"type\": \"brownian\", \"T\": 1.0}").unwrap();
        let cfg = config_from_value(v).unwrap();
        let diags = validate(&cfg);
        assert!(diags
            .iter()
            .any(|d| d.severity == Severity::Error && d.message.contains("brownian")));
    }
}
