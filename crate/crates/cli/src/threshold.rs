use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use spinloc::thresholds::{q_closed_form, s_of_eta, solve_q_eta_ising, solve_q_semilogconcave, SolverOptions};

use crate::Usage;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Ising curve with the Gaussian-smoothed source.
    Ising,
    /// Exact curve for constant semi-log-concavity `rho`.
    ClosedForm,
    /// Numerical curve for constant semi-log-concavity `rho`.
    Semilogconcave,
}

pub struct Curve {
    pub rows: Vec<(f64, f64, f64)>,
    pub blowup_z: Option<f64>,
}

pub fn compute(eta: f64, mode: Mode, rho: f64, z_max: Option<f64>, step: f64) -> Result<Curve> {
    if !(0.0..=1.0).contains(&eta) {
        return Err(Usage(format!("eta = {eta} must lie in [0, 1]")).into());
    }
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(Usage(format!("rho = {rho} must be positive")).into());
    }
    if !(step > 0.0 && step.is_finite()) {
        return Err(Usage(format!("step = {step} must be positive")).into());
    }
    if let Some(z) = z_max {
        if !(z >= 0.0 && z.is_finite()) {
            return Err(Usage(format!("z-max = {z} must be non-negative")).into());
        }
    }
    match mode {
        Mode::ClosedForm => closed_form(eta, rho, z_max, step),
        Mode::Ising | Mode::Semilogconcave => {
            let opts = SolverOptions {
                z_max: z_max.unwrap_or(2.0),
                step,
                ..SolverOptions::default()
            };
            let c = if mode == Mode::Ising {
                solve_q_eta_ising(eta, opts)?
            } else {
                solve_q_semilogconcave(eta, &|_| rho, opts)?
            };
            let rows = (0..c.grid.len())
                .map(|k| (c.grid[k], c.values[k], c.integral[k]))
                .collect();
            Ok(Curve {
                rows,
                blowup_z: c.blowup_z,
            })
        }
    }
}

fn closed_form(eta: f64, rho: f64, z_max: Option<f64>, step: f64) -> Result<Curve> {
    // at eta = 0 the source is the constant rho and q = 1/(1/rho − z)
    let limit = if eta == 0.0 { 1.0 / rho } else { s_of_eta(eta)? / rho };
    let q = |z: f64| -> Result<f64> {
        if eta == 0.0 {
            Ok(1.0 / (1.0 / rho - z))
        } else {
            Ok(q_closed_form(eta, rho, z)?)
        }
    };
    let end = z_max.map_or(limit, |z| z.min(limit));
    let mut rows = Vec::new();
    let mut integral = 0.0;
    let mut prev = q(0.0)?;
    rows.push((0.0, prev, 0.0));
    let mut k = 1u64;
    loop {
        let z = k as f64 * step;
        if z >= end {
            break;
        }
        let v = q(z)?;
        integral += 0.5 * step * (prev + v);
        rows.push((z, v, integral));
        prev = v;
        k += 1;
    }
    let blowup_z = (z_max.is_none_or(|z| z >= limit)).then_some(limit);
    Ok(Curve { rows, blowup_z })
}

pub fn write_csv<W: Write>(out: &mut W, curve: &Curve) -> std::io::Result<()> {
    writeln!(out, "z,q,integral")?;
    for &(z, q, i) in &curve.rows {
        writeln!(out, "{z},{q},{i}")?;
    }
    match curve.blowup_z {
        Some(b) => writeln!(out, "# blowup_z={b}"),
        None => writeln!(out, "# blowup_z=none"),
    }
}
