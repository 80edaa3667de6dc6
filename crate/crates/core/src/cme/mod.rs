//! Truncated master equation on a one-dimensional lattice: domains, Skellam
//! tau-leap kernels, forward probability fields and stationary laws.
//!
//! Interior cells are indexed `0..nx`; index `nx` is the absorbing cell that
//! collects mass leaving the domain. Probability slices therefore have
//! length `nx + 1`.

mod kernel;
mod skellam;

use crate::crn::{Direction, RateModel};
use crate::error::{Error, Result};
use crate::ldp::quasipotential_1d;

pub use kernel::{build_kernel, forward_evolve, stationary_power_iteration, ProbabilityField, TransitionKernel};
pub use skellam::{skellam_pmf, skellam_support};

/// Slack for floors of `x V / nu` that should land on an integer.
const FLOOR_EPS: f64 = 1e-9;

/// The common jump size `|nu|` of a scalar network whose channels all move
/// the state by the same amount. Channels pointing the other way are merged
/// with their directions swapped.
pub fn common_jump<M: RateModel + ?Sized>(net: &M) -> Result<i64> {
    if net.n_species() != 1 {
        return Err(Error::Unsupported("lattice master equation needs a single species".into()));
    }
    let nu = net.stoich(0)[0].abs();
    if (1..net.n_reactions()).any(|i| net.stoich(i)[0].abs() != nu) {
        return Err(Error::Unsupported("channels with different jump sizes".into()));
    }
    Ok(nu)
}

/// Total propensities `(up, down)` at population `n` of the merged channel.
pub fn merged_propensities<M: RateModel + ?Sized>(net: &M, n: i64, volume: f64) -> (f64, f64) {
    let (mut up, mut down) = (0.0, 0.0);
    for i in 0..net.n_reactions() {
        let rp = net.propensity(i, Direction::Forward, &[n], volume);
        let rm = net.propensity(i, Direction::Backward, &[n], volume);
        if net.stoich(i)[0] > 0 {
            up += rp;
            down += rm;
        } else {
            up += rm;
            down += rp;
        }
    }
    (up, down)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LatticeDomain {
    pub x_l: f64,
    pub x_r: f64,
    pub volume: f64,
    pub nu: i64,
    pub nx: usize,
    /// `floor(x_l V / nu)`; cell `j` holds population `(offset + j + 1) nu`.
    pub offset: i64,
}

impl LatticeDomain {
    pub fn new(x_l: f64, x_r: f64, volume: f64, nu: i64) -> Result<Self> {
        if !(x_l < x_r) || !(volume > 0.0 && volume.is_finite()) || nu < 1 {
            return Err(Error::InvalidArgument(format!(
                "invalid lattice domain [{x_l}, {x_r}] with V = {volume}, nu = {nu}"
            )));
        }
        let step = nu as f64 / volume;
        let offset = (x_l / step + FLOOR_EPS).floor() as i64;
        let nx = ((x_r - x_l) / step + FLOOR_EPS).floor() as i64;
        if nx < 2 {
            return Err(Error::InvalidArgument(format!("domain holds only {nx} cells")));
        }
        if (offset + 1) * nu < 0 {
            return Err(Error::InvalidArgument("domain reaches negative populations".into()));
        }
        Ok(Self {
            x_l,
            x_r,
            volume,
            nu,
            nx: nx as usize,
            offset,
        })
    }

    pub fn spacing(&self) -> f64 {
        self.nu as f64 / self.volume
    }

    pub fn absorbing(&self) -> usize {
        self.nx
    }

    pub fn population(&self, cell: usize) -> i64 {
        (self.offset + cell as i64 + 1) * self.nu
    }

    pub fn x(&self, cell: usize) -> f64 {
        self.population(cell) as f64 / self.volume
    }

    pub fn cells(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    /// Cell nearest to `x`; halfway points go to the lower cell.
    pub fn nearest(&self, x: f64) -> Result<usize> {
        if !(x >= self.x_l && x <= self.x_r) {
            return Err(Error::InvalidArgument(format!(
                "x = {x} outside the domain [{}, {}]",
                self.x_l, self.x_r
            )));
        }
        let f = x / self.spacing() - (self.offset + 1) as f64;
        let i = (f - 0.5).ceil();
        Ok(i.clamp(0.0, (self.nx - 1) as f64) as usize)
    }
}

/// Stationary law of the merged birth-death chain on the domain from
/// detailed balance, normalized over the interior. The absorbing entry is 0.
pub fn stationary_distribution<M: RateModel + ?Sized>(net: &M, dom: &LatticeDomain) -> Result<Vec<f64>> {
    let nu = common_jump(net)?;
    if nu != dom.nu {
        return Err(Error::ShapeMismatch(format!("domain step {} vs network jump {nu}", dom.nu)));
    }
    let mut log_pi = vec![0.0; dom.nx];
    for j in 0..dom.nx - 1 {
        let (up, _) = merged_propensities(net, dom.population(j), dom.volume);
        let (_, down) = merged_propensities(net, dom.population(j + 1), dom.volume);
        if !(down > 0.0) {
            return Err(Error::ZeroRate(format!(
                "down rate vanishes at interior cell x = {}",
                dom.x(j + 1)
            )));
        }
        log_pi[j + 1] = log_pi[j] + up.ln() - down.ln();
    }
    let peak = log_pi.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut pi: Vec<f64> = log_pi.iter().map(|&l| (l - peak).exp()).collect();
    let total: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|p| *p /= total);
    pi.push(0.0);
    Ok(pi)
}

/// Domain `[x_l, x_r]` for a prehistory computation anchored at `x0` and
/// `x_t`, using the lower bound `S(x_b) - S(x0)` on the cost of reaching a
/// boundary point. Each side is widened in steps of 0.05 until that bound
/// exceeds `max(1.1 target_action, target_action + 25 / V)`; a side that
/// reaches zero population is closed there instead.
pub fn suggest_domain<M: RateModel + ?Sized>(
    net: &M,
    volume: f64,
    x_eq: f64,
    x0: f64,
    x_t: f64,
    target_action: f64,
) -> Result<LatticeDomain> {
    let nu = common_jump(net)?;
    let need = (1.1 * target_action).max(target_action + 25.0 / volume);
    let s_at = |x: f64| -> Result<f64> { Ok(quasipotential_1d(net, x_eq, &[x])?.s[0]) };
    let s0 = s_at(x0)?;
    const STEP: f64 = 0.05;
    const MAX_STEPS: usize = 2000;

    let mut lo = x0.min(x_t);
    let mut x_l = None;
    for _ in 0..MAX_STEPS {
        let cand = lo - STEP;
        if cand <= STEP {
            break;
        }
        lo = cand;
        match s_at(lo) {
            Ok(s) if s - s0 >= need => {
                x_l = Some(lo);
                break;
            }
            Ok(_) => {}
            Err(Error::ZeroRate(_)) => break,
            Err(e) => return Err(e),
        }
    }
    // Include population zero: x_l sits half a step below it.
    let x_l = x_l.unwrap_or(-0.5 * nu as f64 / volume);

    let mut hi = x0.max(x_t);
    let mut x_r = None;
    for _ in 0..MAX_STEPS {
        hi += STEP;
        if s_at(hi)? - s0 >= need {
            x_r = Some(hi);
            break;
        }
    }
    let x_r = x_r.ok_or(Error::NonConvergence {
        what: "domain widening",
        iterations: MAX_STEPS,
        residual: need,
    })?;
    LatticeDomain::new(x_l, x_r, volume, nu)
}
