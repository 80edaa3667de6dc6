//! CSV output. Every number is written with 17 significant digits so that
//! files round-trip exactly and can be compared byte for byte.

use std::io::{self, Write};

use crate::cme::{ProbabilityField, TransitionKernel};
use crate::gausslim::{CovariancePath, EnvelopeRecord};
use crate::kinetics::Trajectory;
use crate::ldp::{HamiltonianTrajectory, Quasipotential1D};
use crate::reversal::PrehistoryField;

pub fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

fn row<W: Write>(w: &mut W, values: impl IntoIterator<Item = f64>) -> io::Result<()> {
    let line: Vec<String> = values.into_iter().map(fmt).collect();
    writeln!(w, "{}", line.join(","))
}

fn header<W: Write>(w: &mut W, names: impl IntoIterator<Item = String>) -> io::Result<()> {
    let names: Vec<String> = names.into_iter().collect();
    writeln!(w, "{}", names.join(","))
}

fn species_header(first: &str, n: usize) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain((1..=n).map(|k| format!("x_{k}")))
        .collect()
}

/// `t,x_1..x_N`, one row per sample.
pub fn write_trajectory<W: Write>(w: &mut W, traj: &Trajectory) -> io::Result<()> {
    let n = traj.states.first().map_or(0, Vec::len);
    header(w, species_header("t", n))?;
    for (t, x) in traj.times.iter().zip(&traj.states) {
        row(w, std::iter::once(*t).chain(x.iter().copied()))?;
    }
    Ok(())
}

/// `t,mean_1..,var_1..` of jump paths sampled on `times`.
pub fn write_ensemble_summary<W: Write>(w: &mut W, times: &[f64], paths: &[Trajectory]) -> io::Result<()> {
    let n = paths.first().and_then(|p| p.states.first()).map_or(0, Vec::len);
    let names = std::iter::once("t".to_string())
        .chain((1..=n).map(|k| format!("mean_{k}")))
        .chain((1..=n).map(|k| format!("var_{k}")));
    header(w, names)?;
    for &t in times {
        let mut means = Vec::with_capacity(n);
        let mut vars = Vec::with_capacity(n);
        for c in 0..n {
            let xs: Vec<f64> = paths.iter().map(|p| p.state_at(t)[c]).collect();
            let (m, v) = if xs.len() > 1 {
                crate::stats::mean_var(&xs)
            } else {
                (xs[0], 0.0)
            };
            means.push(m);
            vars.push(v);
        }
        row(w, std::iter::once(t).chain(means).chain(vars))?;
    }
    Ok(())
}

/// `t,x,alpha,action_so_far` for a scalar Hamiltonian path.
pub fn write_hamiltonian_path<W: Write>(w: &mut W, traj: &HamiltonianTrajectory) -> io::Result<()> {
    header(w, ["t", "x", "alpha", "action_so_far"].map(String::from))?;
    for k in 0..traj.len() {
        row(w, [traj.times[k], traj.x[k][0], traj.alpha[k][0], traj.action[k]])?;
    }
    Ok(())
}

/// `x,S,dS`.
pub fn write_quasipotential<W: Write>(w: &mut W, q: &Quasipotential1D) -> io::Result<()> {
    header(w, ["x", "S", "dS"].map(String::from))?;
    for k in 0..q.grid.len() {
        row(w, [q.grid[k], q.s[k], q.ds[k]])?;
    }
    Ok(())
}

fn cell_header(first: &str, cells: &[f64], last: Option<&str>) -> Vec<String> {
    std::iter::once(first.to_string())
        .chain(cells.iter().map(|&x| fmt(x)))
        .chain(last.map(String::from))
        .collect()
}

/// `t,x(1)..x(Nx),absorbed`; cell columns are labelled by their coordinate.
pub fn write_probability_field<W: Write>(w: &mut W, f: &ProbabilityField) -> io::Result<()> {
    header(w, cell_header("t", &f.dom.cells(), Some("absorbed")))?;
    for (m, slice) in f.values.iter().enumerate() {
        row(w, std::iter::once(f.time(m)).chain(slice.iter().copied()))?;
    }
    Ok(())
}

/// A single law over the cells: `x,p`.
pub fn write_distribution<W: Write>(w: &mut W, cells: &[f64], p: &[f64]) -> io::Result<()> {
    header(w, ["x", "p"].map(String::from))?;
    for (x, v) in cells.iter().zip(p) {
        row(w, [*x, *v])?;
    }
    Ok(())
}

/// `t,x(1)..x(Nx)` (interior cells only).
pub fn write_prehistory<W: Write>(w: &mut W, f: &PrehistoryField) -> io::Result<()> {
    header(w, cell_header("t", &f.dom.cells(), None))?;
    for (m, slice) in f.values.iter().enumerate() {
        row(w, std::iter::once(f.time(m)).chain(slice[..f.dom.nx].iter().copied()))?;
    }
    Ok(())
}

/// `t,x_peak`.
pub fn write_peaks<W: Write>(w: &mut W, peaks: &[(f64, f64)]) -> io::Result<()> {
    header(w, ["t", "x_peak"].map(String::from))?;
    for &(t, x) in peaks {
        row(w, [t, x])?;
    }
    Ok(())
}

/// `t,kappa` (the `(0, 0)` entry).
pub fn write_covariance<W: Write>(w: &mut W, c: &CovariancePath) -> io::Result<()> {
    header(w, ["t", "kappa"].map(String::from))?;
    for (t, k) in c.times.iter().zip(&c.kappa) {
        row(w, [*t, k[(0, 0)]])?;
    }
    Ok(())
}

/// `t,fitted_var,predicted_var,tv_distance`.
pub fn write_envelope<W: Write>(w: &mut W, records: &[EnvelopeRecord]) -> io::Result<()> {
    header(w, ["t", "fitted_var", "predicted_var", "tv_distance"].map(String::from))?;
    for r in records {
        row(w, [r.t, r.fitted_var, r.predicted_var, r.tv_distance])?;
    }
    Ok(())
}

/// The dense one-step table, one row per line, no header.
pub fn write_kernel<W: Write>(w: &mut W, k: &TransitionKernel) -> io::Result<()> {
    for i in 0..k.n_states() {
        row(w, k.row(i).iter().copied())?;
    }
    Ok(())
}

/// Generic table with named columns.
pub fn write_table<W: Write>(w: &mut W, names: &[&str], rows: &[Vec<f64>]) -> io::Result<()> {
    header(w, names.iter().map(|s| s.to_string()))?;
    for r in rows {
        row(w, r.iter().copied())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_round_trip_exactly() {
        for v in [0.1, 1.0 / 3.0, 2.0f64.ln(), 1e-300, -7.25e12] {
            assert_eq!(fmt(v).parse::<f64>().unwrap(), v);
        }
    }

    #[test]
    fn peaks_csv_layout() {
        let mut buf = Vec::new();
        write_peaks(&mut buf, &[(0.0, 1.0), (0.5, 1.5)]).unwrap();
        let s = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[0], "t,x_peak");
        assert_eq!(lines[2], "5.0000000000000000e-1,1.5000000000000000e0");
    }
}
