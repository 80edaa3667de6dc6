use std::path::Path;

use clap::Parser;
use revpath::cme::{common_jump, stationary_distribution, suggest_domain, LatticeDomain};
use revpath::crn::{parse_network, ReactionNetwork};
use revpath::gausslim::{npp_covariance, spp_covariance};
use revpath::io;
use revpath::kinetics::{
    cle_simulate_with, ode_solve, ssa_simulate_with, tau_leap_simulate_with, SsaOptions, Trajectory,
};
use revpath::ldp::{op_path, quasipotential_1d, shoot_nop_with, OpOptions, ShootOptions};
use revpath::reversal::{npp_compute, peak_trajectory, spp_compute, Anchors, PrehistoryField, PrehistoryMode};
use revpath::revsim::{build_reversed_rates, sample_reversed_ensemble};
use revpath::rng::ensemble;

use crate::args::{
    Cli, Command, CovarianceArgs, JumpArgs, LatticeArgs, Mode, NopArgs, OdeArgs, OpArgs, QuasiArgs, ReversedSimArgs,
    StationaryArgs,
};
use crate::figures;
use crate::manifest::{self, RunManifest};
use crate::output::{tag, Outputs};
use crate::{CliError, CliResult};

pub fn run(cli: Cli, argv: &[String]) -> CliResult<()> {
    if let Command::Replay(r) = &cli.command {
        let m = manifest::read(&r.manifest)?;
        let full: Vec<String> = std::iter::once("revpath".to_string()).chain(m.argv.iter().cloned()).collect();
        let mut inner =
            Cli::try_parse_from(&full).map_err(|e| CliError::Usage(format!("manifest arguments do not parse: {e}")))?;
        if matches!(inner.command, Command::Replay(_)) {
            return Err(CliError::Usage("a manifest cannot record a replay".into()));
        }
        inner.out = cli.out.clone();
        let (net, _) = resolve_network(&inner)?;
        if manifest::network_hash(&net.to_text()) != m.network_hash {
            return Err(CliError::Usage(format!(
                "network {} no longer matches the manifest hash",
                m.network
            )));
        }
        return execute(inner, m.argv);
    }
    execute(cli, manifest::strip_out(argv))
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Ode(_) => "ode",
        Command::Ssa(_) => "ssa",
        Command::Tauleap(_) => "tauleap",
        Command::Cle(_) => "cle",
        Command::Nop(_) => "nop",
        Command::Op(_) => "op",
        Command::Quasipotential(_) => "quasipotential",
        Command::Stationary(_) => "stationary",
        Command::Prehistory(_) => "prehistory",
        Command::ReversedSim(_) => "reversed-sim",
        Command::Covariance(_) => "covariance",
        Command::Figure(_) => "figure",
        Command::Replay(_) => "replay",
    }
}

pub fn load_network(spec: &str) -> CliResult<ReactionNetwork> {
    match spec {
        "mono" | "monostable" => Ok(ReactionNetwork::monostable()),
        "bistable" => Ok(ReactionNetwork::bistable()),
        path => {
            let text = std::fs::read_to_string(Path::new(path))
                .map_err(|e| CliError::Usage(format!("missing network file {path}: {e}")))?;
            Ok(parse_network(&text).map_err(|e| CliError::Usage(format!("{path}: {e}")))?)
        }
    }
}

/// The network named by `--net`, or the bundled default of a figure.
fn resolve_network(cli: &Cli) -> CliResult<(ReactionNetwork, String)> {
    let spec = match (&cli.net, &cli.command) {
        (Some(s), _) => s.clone(),
        (None, Command::Figure(f)) => figures::default_network(f.name).to_string(),
        (None, _) => return Err(CliError::Usage("--net is required for this command".into())),
    };
    Ok((load_network(&spec)?, spec))
}

fn execute(cli: Cli, argv: Vec<String>) -> CliResult<()> {
    let (net, label) = resolve_network(&cli)?;
    let mut out = Outputs::new(&cli.out)?;
    match &cli.command {
        Command::Ode(a) => ode(&net, a, &mut out)?,
        Command::Ssa(a) => jumps(&net, a, Simulator::Ssa, &mut out)?,
        Command::Tauleap(a) => jumps(&net, a, Simulator::TauLeap, &mut out)?,
        Command::Cle(a) => jumps(&net, a, Simulator::Cle, &mut out)?,
        Command::Nop(a) => nop(&net, a, &mut out)?,
        Command::Op(a) => op(&net, a, &mut out)?,
        Command::Quasipotential(a) => quasipotential(&net, a, &mut out)?,
        Command::Stationary(a) => stationary(&net, a, &mut out)?,
        Command::Prehistory(a) => prehistory(&net, &a.lattice, &mut out)?,
        Command::ReversedSim(a) => reversed_sim(&net, a, &mut out)?,
        Command::Covariance(a) => covariance(&net, a, &mut out)?,
        Command::Figure(a) => figures::run(&net, a, &mut out)?,
        Command::Replay(_) => unreachable!("replay is resolved before execution"),
    }
    let m = RunManifest {
        command: command_name(&cli.command).to_string(),
        argv,
        network: label,
        network_hash: manifest::network_hash(&net.to_text()),
        parameters: serde_json::to_value(&cli.command).map_err(|e| CliError::Numeric(e.to_string()))?,
        version: env!("CARGO_PKG_VERSION").to_string(),
        outputs: out.files().to_vec(),
    };
    manifest::write(out.dir(), &m)?;
    for f in out.files() {
        println!("wrote {}", out.dir().join(f).display());
    }
    Ok(())
}

fn ode(net: &ReactionNetwork, a: &OdeArgs, out: &mut Outputs) -> CliResult<()> {
    let traj = ode_solve(net, &a.x0, a.t, a.dt)?;
    out.write("ode.csv", |w| io::write_trajectory(w, &traj))
}

#[derive(Clone, Copy)]
enum Simulator {
    Ssa,
    TauLeap,
    Cle,
}

impl Simulator {
    fn name(self) -> &'static str {
        match self {
            Simulator::Ssa => "ssa",
            Simulator::TauLeap => "tauleap",
            Simulator::Cle => "cle",
        }
    }
}

/// Seed of the `k`-th entry of a volume sweep.
pub fn sweep_seed(seed: u64, k: usize) -> u64 {
    seed ^ (k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

pub fn summary_grid(t_end: f64, points: usize) -> Vec<f64> {
    let n = points.max(1);
    (0..=n).map(|k| t_end * k as f64 / n as f64).collect()
}

fn jumps(net: &ReactionNetwork, a: &JumpArgs, sim: Simulator, out: &mut Outputs) -> CliResult<()> {
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    for (k, &v) in a.volumes.iter().enumerate() {
        let paths: Vec<Trajectory> = ensemble(sweep_seed(a.seed, k), a.count, |_, rng| match sim {
            Simulator::Ssa => ssa_simulate_with(net, &a.x0, v, a.t, rng, &SsaOptions::default()),
            Simulator::TauLeap => tau_leap_simulate_with(net, &a.x0, v, a.t, a.dt, rng),
            Simulator::Cle => cle_simulate_with(net, &a.x0, v, a.t, a.dt, 1, rng),
        })
        .into_iter()
        .collect::<Result<_, _>>()?;
        let stem = format!("{}_V{}", sim.name(), tag(v));
        out.write(&format!("{stem}.csv"), |w| io::write_trajectory(w, &paths[0]))?;
        if a.count > 1 {
            let grid = summary_grid(a.t, a.grid);
            out.write(&format!("{stem}_summary.csv"), |w| io::write_ensemble_summary(w, &grid, &paths))?;
        }
    }
    Ok(())
}

fn nop(net: &ReactionNetwork, a: &NopArgs, out: &mut Outputs) -> CliResult<()> {
    let opts = ShootOptions {
        tol: a.tol,
        dt: a.dt,
        ..ShootOptions::default()
    };
    let traj = shoot_nop_with(net, a.x0, a.x_t, a.t, &opts)?;
    println!("alpha0 = {}", io::fmt(traj.alpha[0][0]));
    println!("action = {}", io::fmt(traj.total_action()));
    out.write("nop.csv", |w| io::write_hamiltonian_path(w, &traj))
}

fn op(net: &ReactionNetwork, a: &OpArgs, out: &mut Outputs) -> CliResult<()> {
    let opts = OpOptions {
        dt: a.dt,
        ..OpOptions::default()
    };
    let traj = op_path(net, a.x_t, a.xeq, &opts)?;
    println!("action = {}", io::fmt(traj.total_action()));
    out.write("op.csv", |w| io::write_hamiltonian_path(w, &traj))
}

fn quasipotential(net: &ReactionNetwork, a: &QuasiArgs, out: &mut Outputs) -> CliResult<()> {
    let g = a.range;
    let n = ((g.hi - g.lo) / g.step + 1e-9).floor() as usize;
    let grid: Vec<f64> = (0..=n).map(|k| g.lo + k as f64 * g.step).collect();
    let q = quasipotential_1d(net, a.xeq, &grid)?;
    out.write("quasipotential.csv", |w| io::write_quasipotential(w, &q))
}

fn stationary(net: &ReactionNetwork, a: &StationaryArgs, out: &mut Outputs) -> CliResult<()> {
    let nu = common_jump(net)?;
    for &v in &a.volumes {
        let dom = LatticeDomain::new(a.domain.lo, a.domain.hi, v, nu)?;
        let pi = stationary_distribution(net, &dom)?;
        out.write(&format!("stationary_V{}.csv", tag(v)), |w| {
            io::write_distribution(w, &dom.cells(), &pi)
        })?;
    }
    Ok(())
}

fn library_mode(m: Mode) -> PrehistoryMode {
    match m {
        Mode::Npp => PrehistoryMode::Npp,
        Mode::Spp => PrehistoryMode::Spp,
    }
}

/// Domain of one volume in a lattice sweep: the explicit `--domain`, or
/// one sized by the action of the relevant optimal path.
struct DomainPlan {
    explicit: Option<(f64, f64)>,
    target_action: f64,
}

impl DomainPlan {
    fn new(net: &ReactionNetwork, a: &LatticeArgs) -> CliResult<Self> {
        if a.mode == Mode::Npp && a.x0.is_none() {
            return Err(CliError::Usage("--mode npp needs --x0".into()));
        }
        if let Some(d) = a.domain {
            return Ok(Self {
                explicit: Some((d.lo, d.hi)),
                target_action: 0.0,
            });
        }
        let target_action = match (a.mode, a.x0) {
            (Mode::Npp, Some(x0)) => shoot_nop_with(
                net,
                x0,
                a.x_t,
                a.t,
                &ShootOptions {
                    tol: 1e-8,
                    with_variational: false,
                    ..ShootOptions::default()
                },
            )?
            .total_action(),
            _ => quasipotential_1d(net, a.xeq, &[a.x_t])?.s[0],
        };
        Ok(Self {
            explicit: None,
            target_action,
        })
    }

    fn domain(&self, net: &ReactionNetwork, a: &LatticeArgs, v: f64) -> CliResult<LatticeDomain> {
        Ok(match self.explicit {
            Some((lo, hi)) => LatticeDomain::new(lo, hi, v, common_jump(net)?)?,
            None => suggest_domain(net, v, a.xeq, a.x0.unwrap_or(a.xeq), a.x_t, self.target_action)?,
        })
    }
}

pub fn prehistory_field(net: &ReactionNetwork, dom: &LatticeDomain, a: &LatticeArgs) -> CliResult<PrehistoryField> {
    Ok(match a.mode {
        Mode::Npp => npp_compute(net, dom, a.x0.expect("checked by DomainPlan"), a.x_t, a.t, a.nt)?,
        Mode::Spp => spp_compute(net, dom, a.x_t, a.t, a.nt)?,
    })
}

fn prehistory(net: &ReactionNetwork, a: &LatticeArgs, out: &mut Outputs) -> CliResult<()> {
    let plan = DomainPlan::new(net, a)?;
    let mode = library_mode(a.mode).as_str();
    for &v in &a.volumes {
        let dom = plan.domain(net, a, v)?;
        let field = prehistory_field(net, &dom, a)?;
        let peaks = peak_trajectory(&field)?;
        let leak = field.forward.absorbed(field.forward.n_steps());
        let renorm = field.renormalization.iter().cloned().fold(0.0, f64::max);
        println!(
            "V = {}: domain [{}, {}], {} cells, leakage {leak:.3e}, largest renormalization {renorm:.3e}",
            tag(v),
            dom.x_l,
            dom.x_r,
            dom.nx
        );
        out.write(&format!("prehistory_{mode}_V{}.csv", tag(v)), |w| io::write_prehistory(w, &field))?;
        out.write(&format!("peaks_{mode}_V{}.csv", tag(v)), |w| io::write_peaks(w, &peaks))?;
    }
    Ok(())
}

fn reversed_sim(net: &ReactionNetwork, a: &ReversedSimArgs, out: &mut Outputs) -> CliResult<()> {
    let l = &a.lattice;
    if a.count == 0 {
        return Err(CliError::Usage("--count must be at least 1".into()));
    }
    let plan = DomainPlan::new(net, l)?;
    let mode = library_mode(l.mode);
    let anchors = Anchors {
        x0: l.x0,
        x_t: l.x_t,
        t_end: l.t,
    };
    for (k, &v) in l.volumes.iter().enumerate() {
        let dom = plan.domain(net, l, v)?;
        let table = build_reversed_rates(mode, net, &dom, &anchors, l.nt)?;
        let paths = sample_reversed_ensemble(&table, l.x_t, l.t, sweep_seed(a.seed, k), a.count)?;
        let stem = format!("revsim_{}_V{}", mode.as_str(), tag(v));
        out.write(&format!("{stem}_path0.csv"), |w| io::write_trajectory(w, &paths[0]))?;
        let grid = summary_grid(l.t, a.grid);
        out.write(&format!("{stem}_summary.csv"), |w| io::write_ensemble_summary(w, &grid, &paths))?;
    }
    Ok(())
}

fn covariance(net: &ReactionNetwork, a: &CovarianceArgs, out: &mut Outputs) -> CliResult<()> {
    match a.mode {
        Mode::Spp => {
            let (xs, cov) = spp_covariance(net, a.x_t, a.t, a.dt)?;
            let rows: Vec<Vec<f64>> = cov
                .times
                .iter()
                .zip(&xs)
                .zip(&cov.kappa)
                .map(|((t, x), k)| vec![*t, *x, k[(0, 0)]])
                .collect();
            out.write("covariance_spp.csv", |w| io::write_table(w, &["t", "x", "kappa"], &rows))
        }
        Mode::Npp => {
            let x0 = a.x0.ok_or_else(|| CliError::Usage("--mode npp needs --x0".into()))?;
            let nop = shoot_nop_with(net, x0, a.x_t, a.t, &ShootOptions { tol: 1e-10, ..ShootOptions::default() })?;
            let cov = npp_covariance(net, &nop, a.dt)?;
            let rows: Vec<Vec<f64>> = cov
                .times
                .iter()
                .zip(&cov.kappa)
                .map(|(t, k)| vec![*t, nop.x_at(*t, 0), k[(0, 0)]])
                .collect();
            out.write("covariance_npp.csv", |w| io::write_table(w, &["t", "x", "kappa"], &rows))
        }
    }
}
