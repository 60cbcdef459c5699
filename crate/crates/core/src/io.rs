//! CSV serialization with round-trip-exact float formatting.

use std::io::Write;

use crate::ensemble::{CharFnSeries, DensityEstimate, MomentSeries};
use crate::error::Result;
use crate::lr::LrReport;

/// Shortest representation that parses back to the same f64.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

fn io_err(e: std::io::Error) -> crate::error::Error {
    crate::error::Error::Linalg(format!("io error: {e}"))
}

/// One row per (time, site): coordinates, minimal image, mean, errors.
pub fn write_density_csv<W: Write>(est: &DensityEstimate, out: &mut W) -> Result<()> {
    let d = est.lattice().dim();
    let mut header = vec!["time".to_string(), "site".to_string()];
    for k in 0..d {
        header.push(format!("x{k}"));
    }
    header.extend(["mean", "std_err", "mean_abs", "std_err_abs"].map(String::from));
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for (ti, &t) in est.times().iter().enumerate() {
        for x in 0..est.lattice().len() {
            let mut row = vec![fmt_f64(t), x.to_string()];
            for c in est.lattice().minimal_image(x) {
                row.push(c.to_string());
            }
            row.push(fmt_f64(est.mean()[[ti, x]]));
            row.push(fmt_f64(est.std_err()[[ti, x]]));
            row.push(fmt_f64(est.mean_abs()[[ti, x]]));
            row.push(fmt_f64(est.std_err_abs()[[ti, x]]));
            writeln!(out, "{}", row.join(",")).map_err(io_err)?;
        }
    }
    Ok(())
}

/// One row per (time, p).
pub fn write_moments_csv<W: Write>(series: &MomentSeries, out: &mut W) -> Result<()> {
    writeln!(out, "time,p,value,std_err").map_err(io_err)?;
    for (pi, &p) in series.orders.iter().enumerate() {
        for (ti, &t) in series.times.iter().enumerate() {
            writeln!(
                out,
                "{},{},{},{}",
                fmt_f64(t),
                p,
                fmt_f64(series.values[pi][ti]),
                fmt_f64(series.std_err[pi][ti])
            )
            .map_err(io_err)?;
        }
    }
    Ok(())
}

/// One row per time for a single complex argument.
pub fn write_char_fn_csv<W: Write>(series: &CharFnSeries, out: &mut W) -> Result<()> {
    let d = series.z.len();
    let mut header = vec!["time".to_string()];
    for k in 0..d {
        header.push(format!("z{k}_re"));
        header.push(format!("z{k}_im"));
    }
    header.extend(["value_re", "value_im", "std_err"].map(String::from));
    writeln!(out, "{}", header.join(",")).map_err(io_err)?;
    for (ti, &t) in series.times.iter().enumerate() {
        let mut row = vec![fmt_f64(t)];
        for z in &series.z {
            row.push(fmt_f64(z.re));
            row.push(fmt_f64(z.im));
        }
        row.push(fmt_f64(series.values[ti].re));
        row.push(fmt_f64(series.values[ti].im));
        row.push(fmt_f64(series.std_err[ti]));
        writeln!(out, "{}", row.join(",")).map_err(io_err)?;
    }
    Ok(())
}

/// One row per eigenvalue.
pub fn write_spectrum_csv<W: Write>(spectrum: &[(f64, f64)], out: &mut W) -> Result<()> {
    writeln!(out, "re,im").map_err(io_err)?;
    for &(re, im) in spectrum {
        writeln!(out, "{},{}", fmt_f64(re), fmt_f64(im)).map_err(io_err)?;
    }
    Ok(())
}

/// One row per (realization, t, y).
pub fn write_lr_csv<W: Write>(report: &LrReport, out: &mut W) -> Result<()> {
    writeln!(out, "realization,t,y,ratio").map_err(io_err)?;
    for row in &report.rows {
        writeln!(
            out,
            "{},{},{},{}",
            row.realization,
            fmt_f64(row.t),
            row.y,
            fmt_f64(row.ratio)
        )
        .map_err(io_err)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, 2.0f64.sqrt() * 1e-15, 1e300, -0.0, 4.720630592083876] {
            let s = fmt_f64(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{x} -> {s}");
        }
    }

    #[test]
    fn density_csv_shape() {
        use crate::ensemble::{run_ensemble, EnsembleOptions};
        use crate::evolve::EvolutionSpec;
        use crate::noise::NoiseProcess;
        let lat = crate::Lattice::line(4).unwrap();
        let psi0 = crate::WaveFunction::delta(lat, &[0]).unwrap();
        let spec = EvolutionSpec::new(
            crate::HoppingKernel::laplacian(1, 0.5).unwrap(),
            NoiseProcess::flip(1.0, 0.5).unwrap(),
            0.2,
            vec![0.1, 0.2],
        )
        .unwrap();
        let est = run_ensemble(&psi0, &spec, 3, 1, &EnsembleOptions::default()).unwrap();
        let mut buf = Vec::new();
        write_density_csv(&est, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 1 + 2 * 4);
        assert!(lines[0].starts_with("time,site,x0,mean"));
    }
}
