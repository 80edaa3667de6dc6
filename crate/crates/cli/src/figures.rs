//! Bundled parameter sets of the five figures. Each writes plain CSV; the
//! plotting is left to external tools.

use revpath::cme::suggest_domain;
use revpath::crn::ReactionNetwork;
use revpath::io;
use revpath::ldp::{
    hamiltonian, hamiltonian_grad_alpha, hamiltonian_grad_x, hitting_time, op_path, quasipotential_1d, shoot_nop_with,
    HamiltonianTrajectory, OpOptions, ShootOptions,
};
use revpath::reversal::{npp_compute, peak_trajectory, spp_compute, PrehistoryField};

use crate::args::{FigureArgs, FigureName};
use crate::output::{tag, Outputs};
use crate::CliResult;

pub fn default_network(name: FigureName) -> &'static str {
    match name {
        FigureName::Fig1 | FigureName::Fig2 | FigureName::Fig3 => "mono",
        FigureName::Fig4 | FigureName::Fig5 => "bistable",
    }
}

pub fn run(net: &ReactionNetwork, a: &FigureArgs, out: &mut Outputs) -> CliResult<()> {
    match a.name {
        FigureName::Fig1 => phase_portrait(net, "fig1", (0.05, 3.0), (-1.0, 1.5), 2.0, out),
        FigureName::Fig2 => npp_sweep(net, "fig2", 2.0, a.volumes.as_deref().unwrap_or(&[10.0, 30.0, 150.0]), a.nt, out),
        FigureName::Fig3 => spp_sweep(net, "fig3", a.volumes.as_deref().unwrap_or(&[10.0, 30.0, 150.0]), a.nt, out),
        FigureName::Fig4 => phase_portrait(net, "fig4", (0.05, 4.0), (-1.5, 1.5), 3.0, out),
        FigureName::Fig5 => npp_sweep(net, "fig5", 3.0, a.volumes.as_deref().unwrap_or(&[30.0, 150.0, 360.0]), a.nt, out),
    }
}

const X0: f64 = 1.0;
const T_NOP: f64 = 1.0;
const T_SPP: f64 = 2.0;

fn nop(net: &ReactionNetwork, x_t: f64) -> CliResult<HamiltonianTrajectory> {
    Ok(shoot_nop_with(
        net,
        X0,
        x_t,
        T_NOP,
        &ShootOptions {
            tol: 1e-10,
            ..ShootOptions::default()
        },
    )?)
}

fn steps(lo: f64, hi: f64, h: f64) -> Vec<f64> {
    let n = ((hi - lo) / h + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * h).collect()
}

/// Hamiltonian and its vector field on an `(x, alpha)` grid, the hitting
/// time `T(alpha0)` from `x = 1` to `x_t`, and the NOP for `T = 1`.
fn phase_portrait(
    net: &ReactionNetwork,
    stem: &str,
    xr: (f64, f64),
    ar: (f64, f64),
    x_t: f64,
    out: &mut Outputs,
) -> CliResult<()> {
    let mut field = Vec::new();
    for x in steps(xr.0, xr.1, 0.05) {
        for al in steps(ar.0, ar.1, 0.05) {
            let h = hamiltonian(net, &[x], &[al])?;
            let xdot = hamiltonian_grad_alpha(net, &[x], &[al])?[0];
            let adot = -hamiltonian_grad_x(net, &[x], &[al])?[0];
            field.push(vec![x, al, h, xdot, adot]);
        }
    }
    out.write(&format!("{stem}_field.csv"), |w| {
        io::write_table(w, &["x", "alpha", "H", "x_dot", "alpha_dot"], &field)
    })?;

    let period: Vec<Vec<f64>> = steps(0.01, 2.0, 0.01)
        .into_iter()
        .map(|a0| vec![a0, hitting_time(net, X0, x_t, a0, 1e-3, 20.0)])
        .collect();
    out.write(&format!("{stem}_period.csv"), |w| io::write_table(w, &["alpha0", "T"], &period))?;

    let path = nop(net, x_t)?;
    out.write(&format!("{stem}_nop.csv"), |w| io::write_hamiltonian_path(w, &path))
}

fn write_sweep(
    stem: &str,
    volumes: &[f64],
    fields: &[PrehistoryField],
    out: &mut Outputs,
) -> CliResult<()> {
    let mut peaks = Vec::with_capacity(fields.len());
    for (v, f) in volumes.iter().zip(fields) {
        out.write(&format!("{stem}_V{}.csv", tag(*v)), |w| io::write_prehistory(w, f))?;
        peaks.push(peak_trajectory(f)?);
    }
    let names: Vec<String> = std::iter::once("t".to_string())
        .chain(volumes.iter().map(|v| format!("x_peak_V{}", tag(*v))))
        .collect();
    let rows: Vec<Vec<f64>> = (0..peaks[0].len())
        .map(|m| std::iter::once(peaks[0][m].0).chain(peaks.iter().map(|p| p[m].1)).collect())
        .collect();
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    out.write(&format!("{stem}_peaks.csv"), |w| io::write_table(w, &refs, &rows))
}

/// Non-stationary prehistory from `x = 1` to `x_t` over `T = 1`.
fn npp_sweep(
    net: &ReactionNetwork,
    stem: &str,
    x_t: f64,
    volumes: &[f64],
    nt: usize,
    out: &mut Outputs,
) -> CliResult<()> {
    let path = nop(net, x_t)?;
    let fields = volumes
        .iter()
        .map(|&v| {
            let dom = suggest_domain(net, v, X0, X0, x_t, path.total_action())?;
            npp_compute(net, &dom, X0, x_t, T_NOP, nt)
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_sweep(stem, volumes, &fields, out)?;
    out.write(&format!("{stem}_nop.csv"), |w| io::write_hamiltonian_path(w, &path))
}

/// Stationary prehistory of `x_T = 2` over `T = 2`, with the OP shifted so
/// that it arrives at `t = T`.
fn spp_sweep(net: &ReactionNetwork, stem: &str, volumes: &[f64], nt: usize, out: &mut Outputs) -> CliResult<()> {
    let x_t = 2.0;
    let s_target = quasipotential_1d(net, X0, &[x_t])?.s[0];
    let fields = volumes
        .iter()
        .map(|&v| {
            let dom = suggest_domain(net, v, X0, X0, x_t, s_target)?;
            spp_compute(net, &dom, x_t, T_SPP, nt)
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_sweep(stem, volumes, &fields, out)?;
    let op = op_path(net, x_t, X0, &OpOptions::default())?;
    let rows: Vec<Vec<f64>> = op
        .times
        .iter()
        .zip(&op.x)
        .zip(&op.alpha)
        .filter(|((tau, _), _)| **tau >= -T_SPP)
        .map(|((tau, x), al)| vec![tau + T_SPP, x[0], al[0]])
        .collect();
    out.write(&format!("{stem}_op.csv"), |w| io::write_table(w, &["t", "x", "alpha"], &rows))
}
