//! The six experiment pipelines.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context};
use num_complex::Complex64 as C64;
use serde_json::json;

use malab::augmented::{
    build_augmented, diffusion_matrix, e_gradient_norm, fkp_element, gap_certificate,
    semigroup_growth_check, spectral_report, DiffusionMethod, SpectralMode,
};
use malab::ensemble::{moments, run_ensemble, DensityEstimate, TestFunction};
use malab::io;
use malab::lr::lr_check;
use malab::noise::generator_report;

use crate::config::{validate, ExperimentConfig, ExperimentKind, Severity};
use crate::manifest::{CheckResult, RunManifest};

struct Outputs {
    dir: PathBuf,
    files: Vec<String>,
}

impl Outputs {
    fn create(dir: PathBuf) -> anyhow::Result<Self> {
        fs::create_dir_all(&dir)?;
        Ok(Outputs { dir, files: Vec::new() })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        fs::write(self.dir.join(name), bytes).with_context(|| format!("writing {name}"))?;
        self.files.push(name.to_string());
        Ok(())
    }

    fn write_json<T: serde::Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        self.write(name, &serde_json::to_vec_pretty(value)?)
    }
}

fn check(name: &str, passed: bool, details: String) -> CheckResult {
    CheckResult { name: name.into(), passed, details }
}

fn normalization_check(est: &DensityEstimate) -> CheckResult {
    let mut worst = 0.0f64;
    for ti in 0..est.times().len() {
        let total: f64 = (0..est.lattice().len()).map(|x| est.mean()[[ti, x]]).sum();
        worst = worst.max((total - est.psi0_norm_sq()).abs());
    }
    check(
        "normalization",
        worst <= 1e-9,
        format!("max |sum rho - ||psi0||^2| = {worst:.3e} (tolerance 1e-9)"),
    )
}

fn boundary_check(est: &DensityEstimate) -> CheckResult {
    let worst = est.boundary_fraction().iter().cloned().fold(0.0f64, f64::max);
    check(
        "boundary_mass",
        est.is_valid(),
        format!("max boundary fraction {worst:.3e} vs threshold {:.3e}", est.eps_boundary()),
    )
}

fn reference_diffusion(config: &ExperimentConfig) -> anyhow::Result<(malab::augmented::DiffusionMatrix, String)> {
    let extents = config
        .reference_lattice
        .clone()
        .unwrap_or_else(|| config.lattice.clone());
    let lattice = malab::Lattice::new(&extents)?;
    let kernel = config.kernel()?;
    let process = config.process()?;
    let d = diffusion_matrix(&kernel, &process, &lattice, DiffusionMethod::Formula, config.caps())?;
    Ok((d, format!("{extents:?}")))
}

/// Run one experiment into `<outdir>/<experiment>-<hash8>/`.
pub fn run(config: &ExperimentConfig, outdir: &Path) -> anyhow::Result<RunManifest> {
    let diags = validate(config);
    for d in &diags {
        eprintln!("{:?} [{}]: {}", d.severity, d.field, d.message);
    }
    if diags.iter().any(|d| d.severity == Severity::Error) {
        bail!("configuration rejected by static validation");
    }

    let start = Instant::now();
    let hash = config.hash_hex();
    let dirname = format!("{}-{}", config.experiment.name(), &hash[..8]);
    let mut out = Outputs::create(outdir.join(dirname))?;

    let checks = match config.experiment {
        ExperimentKind::DiffusionScan => run_diffusion_scan(config, &mut out)?,
        ExperimentKind::Clt => run_clt(config, &mut out)?,
        ExperimentKind::FkpCheck => run_fkp_check(config, &mut out)?,
        ExperimentKind::Spectral => run_spectral(config, &mut out)?,
        ExperimentKind::LrBound => run_lr_bound(config, &mut out)?,
        ExperimentKind::Assumptions => run_assumptions(config, &mut out)?,
    };

    let passed = checks.iter().all(|c| c.passed);
    let manifest = RunManifest {
        experiment: config.experiment.name().to_string(),
        config_hash: hash,
        code_version: env!("CARGO_PKG_VERSION").to_string(),
        master_seed: config.master_seed,
        wall_time_s: start.elapsed().as_secs_f64(),
        passed,
        checks,
        files: {
            let mut f = out.files.clone();
            f.push("manifest.json".into());
            f
        },
        config: config.canonical_json(),
    };
    manifest.write_atomic(&out.dir)?;
    Ok(manifest)
}

fn write_density_and_moments(
    config: &ExperimentConfig,
    est: &DensityEstimate,
    out: &mut Outputs,
) -> anyhow::Result<Option<malab::ensemble::MomentSeries>> {
    let mut buf = Vec::new();
    io::write_density_csv(est, &mut buf)?;
    out.write("density.csv", &buf)?;
    if est.is_valid() {
        let mut orders = config.moments.clone();
        for p in [0u32, 2] {
            if !orders.contains(&p) {
                orders.push(p);
            }
        }
        orders.sort_unstable();
        let ms = moments(est, &orders)?;
        let mut buf = Vec::new();
        io::write_moments_csv(&ms, &mut buf)?;
        out.write("moments.csv", &buf)?;
        Ok(Some(ms))
    } else {
        Ok(None)
    }
}

fn run_diffusion_scan(config: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<CheckResult>> {
    let lattice = config.lattice()?;
    let psi0 = config.psi0.build(&lattice)?;
    let spec = config.evolution_spec()?;
    let est = run_ensemble(&psi0, &spec, config.n_traj, config.master_seed, &config.ensemble_options())?;

    let mut checks = vec![normalization_check(&est), boundary_check(&est)];
    let ms = write_density_and_moments(config, &est, out)?;

    let (dref, ref_name) = reference_diffusion(config)?;
    let trd = dref.trace();
    match ms {
        Some(ms) => {
            let t_last = *est.times().last().unwrap();
            let (m2, _) = ms.value(2, t_last).unwrap();
            let ratio = (m2 / t_last - trd).abs() / trd;
            checks.push(check(
                "diffusive_scaling",
                ratio <= config.diffusion_rel_tol,
                format!(
                    "m2({t_last})/t = {:.6}, tr D({ref_name}) = {trd:.6}, relative gap {ratio:.4} \
                     (tolerance {})",
                    m2 / t_last,
                    config.diffusion_rel_tol
                ),
            ));
        }
        None => checks.push(check(
            "diffusive_scaling",
            false,
            "estimate invalid; moments unavailable".into(),
        )),
    }
    Ok(checks)
}

fn run_clt(config: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<CheckResult>> {
    let clt = config.clt.clone().unwrap_or_default();
    let lattice = config.lattice()?;
    let psi0 = config.psi0.build(&lattice)?;

    // snapshot grid: configured times plus the theorem-1 tau grid
    let mut times = config.times.clone();
    let mut cf_points = Vec::new();
    if let Some(t1) = &clt.theorem1 {
        for &tau in &t1.taus {
            times.push(tau * t1.t_base);
            let z = t1.z.to_c64();
            cf_points.push(z.iter().map(|zi| zi / tau.sqrt()).collect::<Vec<C64>>());
        }
    }
    times.sort_by(|a, b| a.partial_cmp(b).unwrap());
    times.dedup();
    let t_final = times.iter().cloned().fold(0.0f64, f64::max);
    let mut spec = malab::evolve::EvolutionSpec::new(
        config.kernel()?,
        config.process()?,
        t_final,
        times,
    )?
    .with_integrator(config.integrator()?);
    if let Some(dt) = config.dt {
        spec = spec.with_dt(dt)?;
    }
    let mut opts = config.ensemble_options();
    opts.cf_points = cf_points;
    let est = run_ensemble(&psi0, &spec, config.n_traj, config.master_seed, &opts)?;

    let mut checks = vec![normalization_check(&est), boundary_check(&est)];
    let ms = write_density_and_moments(config, &est, out)?;
    let (dref, ref_name) = reference_diffusion(config)?;

    let t_last = config.times.iter().cloned().fold(0.0f64, f64::max);
    match &ms {
        Some(ms) if t_last > 0.0 => {
            let (m2, _) = ms.value(2, t_last).unwrap();
            let (m4, _) = ms.value(4, t_last).unwrap();
            let kurt = m4 / (m2 * m2);
            checks.push(check(
                "kurtosis_band",
                (clt.kurtosis_band[0]..=clt.kurtosis_band[1]).contains(&kurt),
                format!(
                    "m4/m2^2 = {kurt:.4} at t = {t_last}, band [{}, {}]",
                    clt.kurtosis_band[0], clt.kurtosis_band[1]
                ),
            ));

            let bump = TestFunction::GaussianBump {
                center: clt.bump_center.clone().unwrap_or_else(|| vec![0.0; lattice.dim()]),
                width: clt.bump_width,
            };
            let cmp = malab::ensemble::clt_functional(&est, &bump, t_last, &dref.as_array())?;
            let tol = 3.0 * cmp.lhs_std_err + clt.quadrature_budget * cmp.rhs.abs();
            let mut buf = Vec::new();
            buf.extend_from_slice(b"quantity,lhs,rhs,std_err,tolerance\n");
            buf.extend_from_slice(
                format!(
                    "kurtosis,{},{},,\nbump,{},{},{},{}\n",
                    io::fmt_f64(kurt),
                    io::fmt_f64(3.0),
                    io::fmt_f64(cmp.lhs),
                    io::fmt_f64(cmp.rhs),
                    io::fmt_f64(cmp.lhs_std_err),
                    io::fmt_f64(tol)
                )
                .as_bytes(),
            );
            out.write("clt.csv", &buf)?;
            checks.push(check(
                "bump_functional",
                (cmp.lhs - cmp.rhs).abs() <= tol,
                format!(
                    "lhs {:.6} vs rhs {:.6} (D from {ref_name}); |diff| {:.3e} <= {:.3e}",
                    cmp.lhs,
                    cmp.rhs,
                    (cmp.lhs - cmp.rhs).abs(),
                    tol
                ),
            ));
        }
        _ => {
            if t_last > 0.0 {
                checks.push(check("kurtosis_band", false, "estimate invalid".into()));
            }
        }
    }

    if let Some(t1) = &clt.theorem1 {
        let z = t1.z.to_c64();
        let zdz: C64 = {
            let d = dref.as_array();
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..z.len() {
                for j in 0..z.len() {
                    acc += z[i] * z[j] * d[[i, j]];
                }
            }
            acc
        };
        let target = (-(0.5 * t1.t_base) * zdz).exp();
        let mut rows = Vec::new();
        let mut errs = Vec::new();
        let mut buf = Vec::new();
        buf.extend_from_slice(b"tau,time,m_re,m_im,std_err,target_re,target_im,abs_err\n");
        for (k, &tau) in t1.taus.iter().enumerate() {
            let t = tau * t1.t_base;
            let series = &est.cf_series()[k];
            let ti = est
                .times()
                .iter()
                .position(|&s| (s - t).abs() <= 1e-12 * t.max(1.0))
                .expect("snapshot for tau");
            let m = series.mean[ti];
            let se = series.std_err[ti];
            let err = (m - target).norm();
            errs.push(err);
            buf.extend_from_slice(
                format!(
                    "{},{},{},{},{},{},{},{}\n",
                    io::fmt_f64(tau),
                    io::fmt_f64(t),
                    io::fmt_f64(m.re),
                    io::fmt_f64(m.im),
                    io::fmt_f64(se),
                    io::fmt_f64(target.re),
                    io::fmt_f64(target.im),
                    io::fmt_f64(err)
                )
                .as_bytes(),
            );
            rows.push((tau, err));
        }
        out.write("theorem1.csv", &buf)?;
        let decreasing = errs.windows(2).all(|w| w[1] < w[0]);
        let final_err = *errs.last().unwrap();
        checks.push(check(
            "theorem1_decreasing",
            decreasing,
            format!("|M - gaussian| over tau: {rows:?}"),
        ));
        checks.push(check(
            "theorem1_final",
            final_err <= t1.tol_final,
            format!("final error {final_err:.4} at tau = {} (tolerance {})", t1.taus.last().unwrap(), t1.tol_final),
        ));
    }
    Ok(checks)
}

fn run_fkp_check(config: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<CheckResult>> {
    if config.z_points.is_empty() {
        bail!("the fkp-check experiment needs z_points");
    }
    let lattice = config.lattice()?;
    let psi0 = config.psi0.build(&lattice)?;
    let spec = config.evolution_spec()?;
    let mut opts = config.ensemble_options();
    opts.cf_points = config.z_points.iter().map(|z| z.to_c64()).collect();
    let est = run_ensemble(&psi0, &spec, config.n_traj, config.master_seed, &opts)?;

    let kernel = config.kernel()?;
    let process = config.process()?;
    let caps = config.caps();

    let mut buf = Vec::new();
    let d = lattice.dim();
    let mut header = vec!["t".to_string()];
    for k in 0..d {
        header.push(format!("z{k}_re"));
        header.push(format!("z{k}_im"));
    }
    header.extend(
        ["mc_re", "mc_im", "mc_std_err", "fkp_re", "fkp_im", "abs_diff", "sigma_ratio"]
            .map(String::from),
    );
    buf.extend_from_slice(header.join(",").as_bytes());
    buf.push(b'\n');

    let mut worst: Option<(f64, f64, Vec<C64>)> = None;
    let mut all_ok = true;
    for (k, zp) in config.z_points.iter().enumerate() {
        let z = zp.to_c64();
        let op = build_augmented(&kernel, &process, &lattice, &z, caps)?;
        let series = &est.cf_series()[k];
        for (ti, &t) in est.times().iter().enumerate() {
            let spectral = fkp_element(&op, t, &psi0)?;
            let mc = series.mean[ti];
            let se = series.std_err[ti];
            let diff = (mc - spectral).norm();
            let ratio = diff / (3.0 * se + 1e-9);
            if ratio > 1.0 {
                all_ok = false;
            }
            if worst.as_ref().map(|w| ratio > w.0).unwrap_or(true) {
                worst = Some((ratio, t, z.clone()));
            }
            let mut row = vec![io::fmt_f64(t)];
            for zi in &z {
                row.push(io::fmt_f64(zi.re));
                row.push(io::fmt_f64(zi.im));
            }
            row.extend([
                io::fmt_f64(mc.re),
                io::fmt_f64(mc.im),
                io::fmt_f64(se),
                io::fmt_f64(spectral.re),
                io::fmt_f64(spectral.im),
                io::fmt_f64(diff),
                io::fmt_f64(ratio),
            ]);
            buf.extend_from_slice(row.join(",").as_bytes());
            buf.push(b'\n');
        }
    }
    out.write("fkp.csv", &buf)?;

    let worst = worst.unwrap();
    Ok(vec![
        normalization_check(&est),
        check(
            "fkp_identity",
            all_ok,
            format!(
                "|MC - spectral| <= 3 sigma at every (t, z); worst ratio {:.3} at t = {}, z = {:?}",
                worst.0, worst.1, worst.2
            ),
        ),
    ])
}

fn run_spectral(config: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<CheckResult>> {
    let lattice = config.lattice()?;
    let kernel = config.kernel()?;
    let process = config.process()?;
    let caps = config.caps();
    let zero = vec![C64::new(0.0, 0.0); lattice.dim()];
    let op0 = build_augmented(&kernel, &process, &lattice, &zero, caps)?;

    let mut checks = Vec::new();

    // kernel identities
    let phi0 = op0.phi0();
    let n1 = op0.matvec(&phi0).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    let n2 = op0.adjoint_matvec(&phi0).iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
    checks.push(check(
        "kernel_identities",
        n1 <= 1e-12 && n2 <= 1e-12,
        format!("||L0 (delta_0 x 1)|| = {n1:.2e}, adjoint {n2:.2e} (tolerance 1e-12)"),
    ));

    // P0 V P0 = 0
    let mut p0vp0 = 0.0f64;
    for x in 0..lattice.len() {
        let mut coord = vec![0i64; lattice.dim()];
        for (c, v) in coord.iter_mut().zip(lattice.coord(x)) {
            *c = v;
        }
        let e = op0.site_vector(&coord);
        let mut ve = e.clone();
        for (i, v) in ve.iter_mut().enumerate() {
            *v *= C64::new(op0.v_hat_diagonal()[i], 0.0);
        }
        let back = op0.project_p0(&ve);
        p0vp0 = p0vp0.max(back.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt());
    }
    checks.push(check(
        "p0_v_p0_zero",
        p0vp0 <= 1e-14,
        format!("max column norm of P0 V P0 = {p0vp0:.2e}"),
    ));

    let rep0 = spectral_report(&op0, SpectralMode::Dense, None)?;
    let gap = rep0.gap.unwrap();
    checks.push(check(
        "spectral_gap_positive",
        gap > 0.0 && rep0.e_z().norm() <= 1e-10,
        format!("E(0) = {:?}, gap = {gap:.6}", rep0.e_z),
    ));

    let gen = generator_report(&process, &lattice, caps.config_states)?;
    let cert = gap_certificate(&op0, &rep0, gen.gap)?;
    checks.push(check(
        "gap_certificate",
        cert.pass,
        format!(
            "measured gap {:.6} >= bound {:.6} (delta {:.4}, ||W|| {:.4}, alpha {:.4})",
            cert.measured_gap,
            cert.gamma_lower_bound * cert.delta,
            cert.delta,
            cert.w_norm,
            cert.alpha
        ),
    ));

    let grad = e_gradient_norm(&kernel, &process, &lattice, caps)?;
    checks.push(check(
        "e_gradient_vanishes",
        grad <= 1e-8,
        format!("max |dE/dz_i(0)| = {grad:.2e} (tolerance 1e-8)"),
    ));

    let df = diffusion_matrix(&kernel, &process, &lattice, DiffusionMethod::Formula, caps)?;
    let dh = diffusion_matrix(&kernel, &process, &lattice, DiffusionMethod::Hessian, caps)?;
    let scale = df
        .matrix
        .iter()
        .flatten()
        .map(|v| v.abs())
        .fold(0.0f64, f64::max);
    let mut worst = 0.0f64;
    for (rf, rh) in df.matrix.iter().zip(&dh.matrix) {
        for (a, b) in rf.iter().zip(rh) {
            worst = worst.max((a - b).abs() / scale);
        }
    }
    checks.push(check(
        "diffusion_methods_agree",
        worst <= config.diffusion_agreement_tol,
        format!(
            "entrywise relative gap {worst:.3e} (tolerance {}); tr D = {:.6}",
            config.diffusion_agreement_tol,
            df.trace()
        ),
    ));
    checks.push(check(
        "diffusion_positive_definite",
        df.min_eigenvalue > 0.0 && dh.min_eigenvalue > 0.0,
        format!("min eigenvalues {:.3e}, {:.3e}", df.min_eigenvalue, dh.min_eigenvalue),
    ));

    let mut z_reports = Vec::new();
    for zp in &config.z_points {
        let z = zp.to_c64();
        let opz = build_augmented(&kernel, &process, &lattice, &z, caps)?;
        match spectral_report(&opz, SpectralMode::Dense, Some(&rep0)) {
            Ok(rep) => {
                let radius = gap * op0.t_scale() / (4.0 * op0.t_scale());
                checks.push(check(
                    &format!("eigenvalue_in_disk[z={z:?}]"),
                    rep.e_z().norm() <= radius,
                    format!("|E(z)| = {:.4e} vs gamma/4T = {radius:.4e}", rep.e_z().norm()),
                ));
                if z.iter().all(|zi| zi.re == 0.0) && z.iter().any(|zi| zi.im != 0.0) {
                    checks.push(check(
                        &format!("e_real_on_imaginary_axis[z={z:?}]"),
                        rep.e_z().im.abs() <= 1e-9,
                        format!("Im E = {:.2e}", rep.e_z().im),
                    ));
                }
                if !config.times.is_empty() {
                    let sg = semigroup_growth_check(&opz, &config.times)?;
                    checks.push(check(
                        &format!("semigroup_growth[z={z:?}]"),
                        sg.pass,
                        format!("alpha = {:.6}, rows (t, norm, bound): {:?}", sg.alpha, sg.rows),
                    ));
                }
                z_reports.push(rep);
            }
            Err(e) => checks.push(check(
                &format!("eigenvalue_in_disk[z={z:?}]"),
                false,
                e.to_string(),
            )),
        }
    }
    if !config.times.is_empty() {
        let sg = semigroup_growth_check(&op0, &config.times)?;
        checks.push(check(
            "semigroup_contraction",
            sg.rows.iter().all(|(_, n, _)| *n <= 1.0 + 1e-10),
            format!("||exp(-t L_0)||: {:?}", sg.rows),
        ));
    }

    let mut buf = Vec::new();
    io::write_spectrum_csv(rep0.spectrum.as_ref().unwrap(), &mut buf)?;
    out.write("spectrum.csv", &buf)?;
    out.write_json(
        "spectral.json",
        &json!({
            "report_zero": rep0,
            "z_reports": z_reports,
            "generator": gen,
            "certificate": cert,
            "diffusion_formula": df,
            "diffusion_hessian": dh,
        }),
    )?;
    Ok(checks)
}

fn run_lr_bound(config: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<CheckResult>> {
    let lattice = config.lattice()?;
    let kernel = config.kernel()?;
    let process = config.process()?;
    let m = config.lr_m.unwrap_or(kernel.weight_m());
    let report = lr_check(
        &kernel,
        &process,
        &lattice,
        m,
        &config.times,
        config.n_realizations,
        config.master_seed,
    )?;
    let mut buf = Vec::new();
    io::write_lr_csv(&report, &mut buf)?;
    out.write("lr.csv", &buf)?;
    Ok(vec![check(
        "group_velocity_bound",
        report.max_ratio <= 1.0 + 1e-9,
        format!(
            "max ratio {:.12} over {} realizations (m = {m}, v = {:.6})",
            report.max_ratio, config.n_realizations, report.velocity
        ),
    )])
}

fn run_assumptions(config: &ExperimentConfig, out: &mut Outputs) -> anyhow::Result<Vec<CheckResult>> {
    let lattice = config.lattice()?;
    let kernel = config.kernel()?;
    let process = config.process()?;
    let rep = kernel.check_assumptions(kernel.weight_m());
    let mut checks = vec![
        check("kernel_self_adjoint", rep.self_adjoint, "h(-zeta) = conj h(zeta)".into()),
        check(
            "kernel_exponentially_bounded",
            rep.exponentially_bounded,
            format!("v(m) = {:.6}", rep.group_velocity),
        ),
        check("kernel_non_degenerate", rep.non_degenerate, "support spans R^d".into()),
    ];
    let gen = if process.is_jump() {
        let g = generator_report(&process, &lattice, config.caps().config_states)?;
        checks.push(check(
            "generator_gap_positive",
            g.gap > 0.0,
            format!("gap = {:.6} (T gap condition)", g.gap),
        ));
        checks.push(check(
            "potential_non_degenerate",
            g.chi > 0.0,
            format!("chi = {:.6}, sector q = {:.2e}", g.chi, g.q),
        ));
        Some(g)
    } else {
        None
    };
    out.write_json(
        "assumptions.json",
        &json!({ "kernel": rep, "generator": gen }),
    )?;
    Ok(checks)
}

/// Fan out a sweep if configured, otherwise run once. Returns overall pass.
pub fn run_with_sweep(config: &ExperimentConfig, outdir: &Path) -> anyhow::Result<(bool, Vec<RunManifest>)> {
    match &config.sweep {
        None => {
            let m = run(config, outdir)?;
            Ok((m.passed, vec![m]))
        }
        Some(entries) => {
            let base_hash = config.hash8();
            let mut manifests = Vec::new();
            let mut rows = vec!["index,config_hash,passed,overrides".to_string()];
            let mut all = true;
            for (i, overrides) in entries.iter().enumerate() {
                let mut value = config.canonical_json();
                value.as_object_mut().unwrap().remove("sweep");
                for (k, v) in overrides {
                    let spec = format!("{k}={v}");
                    crate::config::apply_override(&mut value, &spec)?;
                }
                let sub: ExperimentConfig = serde_json::from_value(value)
                    .with_context(|| format!("sweep entry {i}"))?;
                let m = run(&sub, outdir)?;
                all &= m.passed;
                rows.push(format!(
                    "{i},{},{},{}",
                    m.config_hash[..8].to_string(),
                    m.passed,
                    serde_json::to_string(overrides)?.replace(',', ";")
                ));
                manifests.push(m);
            }
            let dir = outdir.join(format!("{}-sweep-{base_hash}", config.experiment.name()));
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("summary.csv"), rows.join("\n") + "\n")?;
            Ok((all, manifests))
        }
    }
}
