//! Bayes-reversed lattice kernels and prehistory probabilities.
//!
//! Given forward marginals `p(m)` produced by a one-step table `P`, the
//! reversed table is `Pbar(m)[i][j] = p_j(m) P[j][i] / p_i(m + 1)` with rows
//! over zero-mass states set to zero. Tables are applied on demand rather
//! than stored: one backward step is `q(m) = p(m) * (P w)` with
//! `w_i = q_i(m + 1) / p_i(m + 1)`.

use std::sync::Arc;

use crate::cme::{build_kernel, forward_evolve, stationary_distribution, LatticeDomain, ProbabilityField, TransitionKernel};
use crate::crn::RateModel;
use crate::error::{Error, Result};

/// Marginal masses below this are treated as zero when dividing.
pub const MASS_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrehistoryMode {
    /// Conditioned on a fixed initial state.
    Npp,
    /// Started from the stationary law.
    Spp,
}

impl PrehistoryMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PrehistoryMode::Npp => "npp",
            PrehistoryMode::Spp => "spp",
        }
    }
}

/// Cell of `dom` nearest to `x`; halfway points go to the lower cell.
pub fn nearest_lattice_point(x: f64, dom: &LatticeDomain) -> Result<usize> {
    dom.nearest(x)
}

/// Time-indexed reversed tables for `m = 0..n_steps`.
#[derive(Debug, Clone)]
pub struct ReversedKernel {
    kernel: Arc<TransitionKernel>,
    marginals: Vec<Vec<f64>>,
}

impl ReversedKernel {
    pub fn n_steps(&self) -> usize {
        self.marginals.len() - 1
    }

    pub fn kernel(&self) -> &TransitionKernel {
        &self.kernel
    }

    pub fn marginal(&self, m: usize) -> &[f64] {
        &self.marginals[m]
    }

    /// Entry `Pbar(m)[i][j]`.
    pub fn entry(&self, m: usize, i: usize, j: usize) -> f64 {
        let pi = self.marginals[m + 1][i];
        if pi < MASS_FLOOR {
            return 0.0;
        }
        self.marginals[m][j] * self.kernel.get(j, i) / pi
    }

    /// Dense row-major `Pbar(m)`.
    pub fn table(&self, m: usize) -> Vec<f64> {
        let n = self.kernel.n_states();
        let mut out = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = self.entry(m, i, j);
            }
        }
        out
    }

    /// `q(m) = q(m + 1) Pbar(m)`. Returns the slice and the mass of `q(m + 1)`
    /// that sat on states with zero forward mass and was dropped.
    pub fn step_back(&self, m: usize, q_next: &[f64]) -> (Vec<f64>, f64) {
        let p_next = &self.marginals[m + 1];
        let mut dropped = 0.0;
        let w: Vec<f64> = q_next
            .iter()
            .zip(p_next)
            .map(|(&q, &p)| {
                if p < MASS_FLOOR {
                    dropped += q;
                    0.0
                } else {
                    q / p
                }
            })
            .collect();
        let pw = self.kernel.apply_column(&w);
        let out = pw.iter().zip(&self.marginals[m]).map(|(a, p)| a * p).collect();
        (out, dropped)
    }
}

/// Reverses `kernel` against the slices of `field`, which must have been
/// produced by that kernel.
pub fn reverse_kernel(field: &ProbabilityField, kernel: impl Into<Arc<TransitionKernel>>) -> Result<ReversedKernel> {
    let kernel = kernel.into();
    if field.dom != kernel.dom {
        return Err(Error::ShapeMismatch("field and kernel live on different domains".into()));
    }
    if field.dt != kernel.dt {
        return Err(Error::ShapeMismatch(format!("field dt {} vs kernel dt {}", field.dt, kernel.dt)));
    }
    if field.values.len() < 2 {
        return Err(Error::ShapeMismatch("field needs at least two slices".into()));
    }
    Ok(ReversedKernel {
        kernel,
        marginals: field.values.clone(),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Anchors {
    /// Initial state for the non-stationary case.
    pub x0: Option<f64>,
    pub x_t: f64,
    pub t_end: f64,
}

/// Backward-evolved conditional law. `values[m]` approximates the law at
/// time `m dt` given the terminal state, with the absorbing cell last.
#[derive(Debug, Clone)]
pub struct PrehistoryField {
    pub dom: LatticeDomain,
    pub dt: f64,
    pub mode: PrehistoryMode,
    pub anchors: Anchors,
    /// Terminal cell (nearest lattice point to `x_t`).
    pub target: usize,
    /// Initial cell for the non-stationary case.
    pub source: Option<usize>,
    pub values: Vec<Vec<f64>>,
    /// Per-slice argmax over interior cells.
    pub peaks: Vec<usize>,
    /// Mass dropped and renormalized away at each backward step.
    pub renormalization: Vec<f64>,
    /// Forward marginals the reversal was built on.
    pub forward: ProbabilityField,
}

impl PrehistoryField {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    pub fn peak_x(&self, m: usize) -> f64 {
        self.dom.x(self.peaks[m])
    }

    pub fn mean(&self, m: usize) -> f64 {
        (0..self.dom.nx).map(|j| self.values[m][j] * self.dom.x(j)).sum()
    }

    pub fn variance(&self, m: usize) -> f64 {
        let mu = self.mean(m);
        (0..self.dom.nx)
            .map(|j| self.values[m][j] * (self.dom.x(j) - mu).powi(2))
            .sum()
    }

    /// Largest `|sum - 1|` over all slices.
    pub fn max_defect(&self) -> f64 {
        self.values
            .iter()
            .map(|s| (s.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// Slice index nearest to time `t`.
    pub fn slice_at(&self, t: f64) -> usize {
        ((t / self.dt).round().max(0.0) as usize).min(self.n_steps())
    }
}

/// Forward evolution from `init` with `kernel`, then the backward pass from
/// a point mass at `target` at the final step.
pub fn prehistory(
    kernel: impl Into<Arc<TransitionKernel>>,
    init: &[f64],
    nt: usize,
    target: usize,
    mode: PrehistoryMode,
    anchors: Anchors,
) -> Result<PrehistoryField> {
    let kernel = kernel.into();
    let dom = kernel.dom.clone();
    if target >= dom.nx {
        return Err(Error::IndexOutOfRange {
            what: "target cell",
            index: target,
            len: dom.nx,
        });
    }
    if nt == 0 {
        return Err(Error::InvalidArgument("need at least one time step".into()));
    }
    let forward = forward_evolve(&kernel, init, nt)?;
    if forward.values[nt][target] < MASS_FLOOR {
        return Err(Error::Unreachable);
    }
    let reversed = reverse_kernel(&forward, kernel)?;
    let n = dom.nx + 1;
    let mut values = vec![Vec::new(); nt + 1];
    let mut renormalization = vec![0.0; nt + 1];
    let mut last = vec![0.0; n];
    last[target] = 1.0;
    values[nt] = last;
    for m in (0..nt).rev() {
        let (mut q, dropped) = reversed.step_back(m, &values[m + 1]);
        let total: f64 = q.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptySlice(m));
        }
        q.iter_mut().for_each(|v| *v /= total);
        renormalization[m] = dropped.max((1.0 - total).abs());
        values[m] = q;
    }
    let peaks = peak_cells(&values, dom.nx, target)?;
    let source = match mode {
        PrehistoryMode::Npp => anchors.x0.map(|x| dom.nearest(x)).transpose()?,
        PrehistoryMode::Spp => None,
    };
    Ok(PrehistoryField {
        dt: forward.dt,
        dom,
        mode,
        anchors,
        target,
        source,
        values,
        peaks,
        renormalization,
        forward,
    })
}

/// Non-stationary prehistory from `x0` to `x_t` over `[0, t_end]` in `nt` steps.
pub fn npp_compute<M: RateModel + ?Sized>(
    net: &M,
    dom: &LatticeDomain,
    x0: f64,
    x_t: f64,
    t_end: f64,
    nt: usize,
) -> Result<PrehistoryField> {
    check_horizon(t_end, nt)?;
    let source = dom.nearest(x0)?;
    let target = dom.nearest(x_t)?;
    let kernel = build_kernel(net, dom, t_end / nt as f64)?;
    let mut init = vec![0.0; dom.nx + 1];
    init[source] = 1.0;
    let anchors = Anchors {
        x0: Some(x0),
        x_t,
        t_end,
    };
    prehistory(kernel, &init, nt, target, PrehistoryMode::Npp, anchors)
}

/// Stationary prehistory ending at `x_t` after `t_end`, with forward
/// marginals evolved from the stationary law on the domain.
pub fn spp_compute<M: RateModel + ?Sized>(
    net: &M,
    dom: &LatticeDomain,
    x_t: f64,
    t_end: f64,
    nt: usize,
) -> Result<PrehistoryField> {
    check_horizon(t_end, nt)?;
    let target = dom.nearest(x_t)?;
    let pi = stationary_distribution(net, dom)?;
    let kernel = build_kernel(net, dom, t_end / nt as f64)?;
    let anchors = Anchors { x0: None, x_t, t_end };
    prehistory(kernel, &pi, nt, target, PrehistoryMode::Spp, anchors)
}

fn check_horizon(t_end: f64, nt: usize) -> Result<()> {
    if !(t_end > 0.0 && t_end.is_finite()) || nt == 0 {
        return Err(Error::InvalidArgument(format!("need T > 0 and Nt > 0, got T = {t_end}, Nt = {nt}")));
    }
    Ok(())
}

/// Per-slice argmax over interior cells, walking back from the terminal
/// slice; equal maxima go to the cell nearest the previous peak.
fn peak_cells(values: &[Vec<f64>], nx: usize, start: usize) -> Result<Vec<usize>> {
    let mut peaks = vec![0; values.len()];
    let mut prev = start;
    for m in (0..values.len()).rev() {
        let slice = &values[m][..nx];
        let top = slice.iter().cloned().fold(0.0, f64::max);
        if !(top > 0.0) {
            return Err(Error::EmptySlice(m));
        }
        let best = (0..nx)
            .filter(|&j| slice[j] == top)
            .min_by_key(|&j| j.abs_diff(prev))
            .unwrap();
        peaks[m] = best;
        prev = best;
    }
    Ok(peaks)
}

/// `(t, x_peak)` for every slice.
pub fn peak_trajectory(field: &PrehistoryField) -> Result<Vec<(f64, f64)>> {
    let peaks = peak_cells(&field.values, field.dom.nx, field.target)?;
    Ok(peaks
        .iter()
        .enumerate()
        .map(|(m, &j)| (field.time(m), field.dom.x(j)))
        .collect())
}
