//! Sampling the time-reversed jump processes on the lattice.
//!
//! Out of cell `j` the reversed process jumps up with rate
//! `p(j + 1) r_down(j + 1) / p(j)` and down with rate
//! `p(j - 1) r_up(j - 1) / p(j)`, where `p` is the stationary law (SPP) or
//! the forward marginal at the matching forward time (NPP). Cells outside
//! the interior and cells with zero mass contribute no rate.

use rand::Rng;
use rand_distr::{Distribution, Exp1};

use crate::cme::{build_kernel, forward_evolve, merged_propensities, stationary_distribution, LatticeDomain};
use crate::crn::RateModel;
use crate::error::{Error, Result};
use crate::kinetics::Trajectory;
use crate::reversal::{Anchors, PrehistoryMode, MASS_FLOOR};
use crate::rng::{ensemble, stream, StreamRng};

/// Reversed `(up, down)` rates per interior cell. SPP tables hold one slice;
/// NPP tables hold one slice per forward time index `m = 0..=nt`, and on the
/// reversed-time interval `[k dt, (k + 1) dt)` use slice `nt - k`.
#[derive(Debug, Clone, PartialEq)]
pub struct ReversedRateTable {
    pub dom: LatticeDomain,
    pub mode: PrehistoryMode,
    pub dt: f64,
    pub slices: Vec<Vec<(f64, f64)>>,
}

impl ReversedRateTable {
    pub fn is_homogeneous(&self) -> bool {
        self.slices.len() == 1
    }

    /// Last forward slice index.
    pub fn n_steps(&self) -> usize {
        self.slices.len() - 1
    }

    /// Slice in force at reversed time `s`.
    pub fn slice_index(&self, s: f64) -> usize {
        if self.is_homogeneous() {
            return 0;
        }
        let nt = self.n_steps();
        let k = ((s / self.dt).floor().max(0.0) as usize).min(nt - 1);
        nt - k
    }

    pub fn rates(&self, s: f64, cell: usize) -> (f64, f64) {
        self.slices[self.slice_index(s)][cell]
    }

    /// `r_up - r_down` in concentration units at reversed time `s`.
    pub fn drift(&self, s: f64, cell: usize) -> f64 {
        let (u, d) = self.rates(s, cell);
        (u - d) * self.dom.spacing()
    }
}

/// Reversed rates for each slice of `marginals` (interior masses first,
/// absorbing entry optional).
pub fn rates_from_marginals<M: RateModel + ?Sized>(
    net: &M,
    dom: &LatticeDomain,
    marginals: &[Vec<f64>],
    dt: f64,
    mode: PrehistoryMode,
) -> Result<ReversedRateTable> {
    if marginals.is_empty() || marginals.iter().any(|p| p.len() < dom.nx) {
        return Err(Error::ShapeMismatch(format!("marginals need {} interior entries", dom.nx)));
    }
    let nx = dom.nx;
    let forward: Vec<(f64, f64)> = (0..nx)
        .map(|j| merged_propensities(net, dom.population(j), dom.volume))
        .collect();
    let slices = marginals
        .iter()
        .map(|p| {
            (0..nx)
                .map(|j| {
                    if p[j] < MASS_FLOOR {
                        return (0.0, 0.0);
                    }
                    let up = if j + 1 < nx { p[j + 1] * forward[j + 1].1 / p[j] } else { 0.0 };
                    let down = if j > 0 { p[j - 1] * forward[j - 1].0 / p[j] } else { 0.0 };
                    (up, down)
                })
                .collect()
        })
        .collect();
    Ok(ReversedRateTable {
        dom: dom.clone(),
        mode,
        dt,
        slices,
    })
}

/// Reversed rates for the stationary or non-stationary prehistory. NPP
/// tables evolve the forward law from `anchors.x0` over `anchors.t_end` in
/// `nt` tau-leap steps.
pub fn build_reversed_rates<M: RateModel + ?Sized>(
    mode: PrehistoryMode,
    net: &M,
    dom: &LatticeDomain,
    anchors: &Anchors,
    nt: usize,
) -> Result<ReversedRateTable> {
    match mode {
        PrehistoryMode::Spp => {
            let pi = stationary_distribution(net, dom)?;
            rates_from_marginals(net, dom, &[pi], 0.0, mode)
        }
        PrehistoryMode::Npp => {
            let x0 = anchors
                .x0
                .ok_or_else(|| Error::InvalidArgument("non-stationary rates need x0".into()))?;
            if !(anchors.t_end > 0.0) || nt < 1 {
                return Err(Error::InvalidArgument("need T > 0 and Nt >= 1".into()));
            }
            let dt = anchors.t_end / nt as f64;
            let kernel = build_kernel(net, dom, dt)?;
            let mut init = vec![0.0; dom.nx + 1];
            init[dom.nearest(x0)?] = 1.0;
            let field = forward_evolve(&kernel, &init, nt)?;
            rates_from_marginals(net, dom, &field.values, dt, mode)
        }
    }
}

/// Thinning parameters for time-dependent tables.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThinningOptions {
    /// Number of consecutive slices sharing one rate bound.
    pub block: usize,
    /// Factor applied to each block's maximal rate to form the bound.
    pub inflation: f64,
}

impl Default for ThinningOptions {
    fn default() -> Self {
        Self {
            block: 16,
            inflation: 1.0,
        }
    }
}

/// Reversed path from the lattice point nearest `x_t` over reversed times
/// `[0, t_end]`: direct SSA for homogeneous tables, thinning otherwise.
pub fn sample_reversed(table: &ReversedRateTable, x_t: f64, t_end: f64, seed: u64) -> Result<Trajectory> {
    let mut rng = stream(seed, 0);
    sample_reversed_with(table, x_t, t_end, &mut rng)
}

pub fn sample_reversed_with<R: Rng + ?Sized>(
    table: &ReversedRateTable,
    x_t: f64,
    t_end: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    if table.is_homogeneous() {
        sample_ssa(table, x_t, t_end, rng)
    } else {
        sample_thinned(table, x_t, t_end, &ThinningOptions::default(), rng)
    }
}

/// `count` independent reversed paths, stream `i` of `seed` for path `i`.
pub fn sample_reversed_ensemble(
    table: &ReversedRateTable,
    x_t: f64,
    t_end: f64,
    seed: u64,
    count: usize,
) -> Result<Vec<Trajectory>> {
    ensemble(seed, count, |_, rng: &mut StreamRng| sample_reversed_with(table, x_t, t_end, rng))
        .into_iter()
        .collect()
}

fn check_horizon(table: &ReversedRateTable, t_end: f64) -> Result<()> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidArgument(format!("invalid horizon {t_end}")));
    }
    if !table.is_homogeneous() && t_end > table.n_steps() as f64 * table.dt * (1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "horizon {t_end} exceeds the table span {}",
            table.n_steps() as f64 * table.dt
        )));
    }
    Ok(())
}

fn jump<R: Rng + ?Sized>(cell: usize, up: f64, total: f64, nx: usize, rng: &mut R) -> usize {
    if rng.random::<f64>() * total < up {
        (cell + 1).min(nx - 1)
    } else {
        cell.saturating_sub(1)
    }
}

/// Gillespie direct method over the rates of a homogeneous table.
pub fn sample_ssa<R: Rng + ?Sized>(table: &ReversedRateTable, x_t: f64, t_end: f64, rng: &mut R) -> Result<Trajectory> {
    check_horizon(table, t_end)?;
    if !table.is_homogeneous() {
        return Err(Error::Unsupported("direct SSA needs a time-homogeneous table".into()));
    }
    let dom = &table.dom;
    let mut cell = dom.nearest(x_t)?;
    let mut traj = Trajectory::new(Some(dom.volume), true);
    let mut t = 0.0;
    traj.push_jump(0.0, &[dom.population(cell)], dom.volume);
    loop {
        let (up, down) = table.rates(t, cell);
        let total = up + down;
        let wait = if total > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / total
        } else {
            f64::INFINITY
        };
        if t + wait >= t_end {
            traj.push_jump(t_end, &[dom.population(cell)], dom.volume);
            return Ok(traj);
        }
        t += wait;
        cell = jump(cell, up, total, dom.nx, rng);
        traj.push_jump(t, &[dom.population(cell)], dom.volume);
    }
}

/// Thinning against per-cell bounds that are constant on blocks of
/// `opts.block` slices. A candidate whose rate exceeds the bound is an error.
pub fn sample_thinned<R: Rng + ?Sized>(
    table: &ReversedRateTable,
    x_t: f64,
    t_end: f64,
    opts: &ThinningOptions,
    rng: &mut R,
) -> Result<Trajectory> {
    check_horizon(table, t_end)?;
    if opts.block == 0 || !(opts.inflation >= 1.0) {
        return Err(Error::InvalidArgument("thinning needs block >= 1 and inflation >= 1".into()));
    }
    let dom = &table.dom;
    let (block_len, n_blocks) = if table.is_homogeneous() {
        (t_end.max(f64::MIN_POSITIVE), 1)
    } else {
        let len = opts.block as f64 * table.dt;
        (len, table.n_steps().div_ceil(opts.block))
    };
    let bound = |cell: usize, b: usize| -> f64 {
        let top = if table.is_homogeneous() {
            let (u, d) = table.slices[0][cell];
            u + d
        } else {
            let nt = table.n_steps();
            let k0 = b * opts.block;
            let k1 = ((b + 1) * opts.block).min(nt);
            (k0..k1)
                .map(|k| {
                    let (u, d) = table.slices[nt - k][cell];
                    u + d
                })
                .fold(0.0, f64::max)
        };
        top * opts.inflation
    };
    let mut cell = dom.nearest(x_t)?;
    let mut traj = Trajectory::new(Some(dom.volume), true);
    traj.push_jump(0.0, &[dom.population(cell)], dom.volume);
    let mut t = 0.0;
    while t < t_end {
        let b = ((t / block_len).floor() as usize).min(n_blocks - 1);
        let block_end = ((b + 1) as f64 * block_len).min(t_end);
        let lambda = bound(cell, b);
        let wait = if lambda > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / lambda
        } else {
            f64::INFINITY
        };
        if t + wait >= block_end {
            t = block_end;
            continue;
        }
        t += wait;
        let (up, down) = table.rates(t, cell);
        let total = up + down;
        if total > lambda * (1.0 + 1e-12) {
            return Err(Error::ThinningBound { rate: total, bound: lambda });
        }
        if rng.random::<f64>() * lambda < total {
            cell = jump(cell, up, total, dom.nx, rng);
            traj.push_jump(t, &[dom.population(cell)], dom.volume);
        }
    }
    traj.push_jump(t_end, &[dom.population(cell)], dom.volume);
    Ok(traj)
}
