use rayon::prelude::*;

use super::{common_jump, merged_propensities, skellam_pmf, skellam_support, LatticeDomain};
use crate::crn::RateModel;
use crate::error::{Error, Result};

/// Row-stochastic one-step table on `nx` interior cells plus the absorbing
/// cell, stored densely in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionKernel {
    pub dom: LatticeDomain,
    pub dt: f64,
    /// Merged `(up, down)` propensities per interior cell; empty for kernels
    /// built from a dense table.
    pub rates: Vec<(f64, f64)>,
    data: Vec<f64>,
    /// Interior columns `[lo, hi)` that may be nonzero in each row.
    row_support: Vec<(usize, usize)>,
    /// Interior rows `[lo, hi)` that may be nonzero in each interior column.
    col_support: Vec<(usize, usize)>,
}

impl TransitionKernel {
    /// Kernel from an explicit row-major table of size `(nx + 1)^2`. Rows must
    /// be stochastic within 1e-12 and the last row must be absorbing.
    pub fn from_dense(dom: &LatticeDomain, dt: f64, data: Vec<f64>) -> Result<Self> {
        let nx = dom.nx;
        let n = nx + 1;
        if data.len() != n * n {
            return Err(Error::ShapeMismatch(format!("table has {} entries, expected {}", data.len(), n * n)));
        }
        if data.iter().any(|&v| !(v >= 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument("table entries must be finite and nonnegative".into()));
        }
        if data[nx * n + nx] != 1.0 {
            return Err(Error::InvalidArgument("last row must be absorbing".into()));
        }
        let row_support: Vec<(usize, usize)> = (0..nx)
            .map(|i| {
                let row = &data[i * n..i * n + nx];
                match row.iter().position(|&v| v > 0.0) {
                    Some(lo) => (lo, nx - row.iter().rev().position(|&v| v > 0.0).unwrap()),
                    None => (0, 0),
                }
            })
            .collect();
        let k = Self {
            dom: dom.clone(),
            dt,
            rates: Vec::new(),
            data,
            col_support: column_support(&row_support, nx),
            row_support,
        };
        let defect = k.max_row_defect();
        if defect > 1e-12 {
            return Err(Error::Normalization { slice: 0, defect });
        }
        Ok(k)
    }

    pub fn n_states(&self) -> usize {
        self.dom.nx + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n_states() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.n_states();
        &self.data[i * n..(i + 1) * n]
    }

    pub fn row_support(&self, i: usize) -> (usize, usize) {
        self.row_support[i]
    }

    pub fn col_support(&self, j: usize) -> (usize, usize) {
        self.col_support[j]
    }

    /// Largest `|sum_j P[i, j] - 1|` over all rows.
    pub fn max_row_defect(&self) -> f64 {
        (0..self.n_states())
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `q = p P` for a probability row vector.
    pub fn apply(&self, p: &[f64]) -> Vec<f64> {
        let nx = self.dom.nx;
        let mut out = vec![0.0; nx + 1];
        out[..nx].par_iter_mut().enumerate().for_each(|(j, o)| {
            let (lo, hi) = self.col_support[j];
            *o = (lo..hi).map(|i| p[i] * self.get(i, j)).sum();
        });
        out[nx] = p[nx] + (0..nx).map(|i| p[i] * self.get(i, nx)).sum::<f64>();
        out
    }

    /// `w = P v` for a column vector.
    pub fn apply_column(&self, v: &[f64]) -> Vec<f64> {
        let nx = self.dom.nx;
        let mut out = vec![0.0; nx + 1];
        out[..nx].par_iter_mut().enumerate().for_each(|(i, o)| {
            let (lo, hi) = self.row_support[i];
            *o = (lo..hi).map(|j| self.get(i, j) * v[j]).sum::<f64>() + self.get(i, nx) * v[nx];
        });
        out[nx] = v[nx];
        out
    }
}

/// Euler tau-leap kernel: interior entries are Skellam probabilities of the
/// lattice displacement with means `r_up dt` and `r_down dt`; the absorbing
/// column receives the remaining mass of each row.
pub fn build_kernel<M: RateModel + ?Sized>(net: &M, dom: &LatticeDomain, dt: f64) -> Result<TransitionKernel> {
    let nu = common_jump(net)?;
    if nu != dom.nu {
        return Err(Error::ShapeMismatch(format!("domain step {} vs network jump {nu}", dom.nu)));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let nx = dom.nx;
    let n = nx + 1;
    let rates: Vec<(f64, f64)> = (0..nx)
        .map(|j| merged_propensities(net, dom.population(j), dom.volume))
        .collect();
    if let Some(j) = rates.iter().position(|&(u, d)| !(u >= 0.0 && d >= 0.0 && u.is_finite() && d.is_finite())) {
        return Err(Error::InvalidArgument(format!(
            "propensity at x = {} is negative or not finite",
            dom.x(j)
        )));
    }
    let mut data = vec![0.0; n * n];
    let mut row_support = vec![(0, 0); nx];
    data[nx * n + nx] = 1.0;
    data[..nx * n]
        .par_chunks_mut(n)
        .zip(row_support.par_iter_mut())
        .enumerate()
        .for_each(|(i, (row, support))| {
            let (mu1, mu2) = (rates[i].0 * dt, rates[i].1 * dt);
            let k = skellam_support(mu1, mu2);
            let lo = (i as i64 - k).max(0) as usize;
            let hi = ((i as i64 + k + 1) as usize).min(nx);
            let mut interior = 0.0;
            for j in lo..hi {
                let v = skellam_pmf(j as i64 - i as i64, mu1, mu2);
                let v = if v < f64::MIN_POSITIVE { 0.0 } else { v };
                row[j] = v;
                interior += v;
            }
            row[nx] = (1.0 - interior).max(0.0);
            *support = (lo, hi);
        });
    Ok(TransitionKernel {
        dom: dom.clone(),
        dt,
        rates,
        data,
        col_support: column_support(&row_support, nx),
        row_support,
    })
}

fn column_support(row_support: &[(usize, usize)], nx: usize) -> Vec<(usize, usize)> {
    let mut col_support = vec![(usize::MAX, 0); nx];
    for (i, &(lo, hi)) in row_support.iter().enumerate() {
        for cs in &mut col_support[lo..hi] {
            cs.0 = cs.0.min(i);
            cs.1 = cs.1.max(i + 1);
        }
    }
    for cs in &mut col_support {
        if cs.0 == usize::MAX {
            *cs = (0, 0);
        }
    }
    col_support
}

/// Probability slices `values[m]` at times `m dt`, each of length `nx + 1`
/// (interior cells, then the absorbing cell).
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityField {
    pub dom: LatticeDomain,
    pub dt: f64,
    pub values: Vec<Vec<f64>>,
    /// `|sum - 1|` per slice.
    pub defects: Vec<f64>,
}

impl ProbabilityField {
    pub fn n_steps(&self) -> usize {
        self.values.len() - 1
    }

    pub fn time(&self, m: usize) -> f64 {
        m as f64 * self.dt
    }

    pub fn absorbed(&self, m: usize) -> f64 {
        self.values[m][self.dom.nx]
    }

    pub fn mean(&self, m: usize) -> f64 {
        let slice = &self.values[m];
        let mass: f64 = slice[..self.dom.nx].iter().sum();
        (0..self.dom.nx).map(|j| slice[j] * self.dom.x(j)).sum::<f64>() / mass
    }
}

/// `p(m + 1) = p(m) P` for `m = 0..nt`.
pub fn forward_evolve(kernel: &TransitionKernel, init: &[f64], nt: usize) -> Result<ProbabilityField> {
    let n = kernel.n_states();
    if init.len() != n {
        return Err(Error::ShapeMismatch(format!("initial slice has {} entries, kernel {n}", init.len())));
    }
    let defect0 = (init.iter().sum::<f64>() - 1.0).abs();
    if defect0 > 1e-9 || init.iter().any(|&p| p < 0.0) {
        return Err(Error::Normalization { slice: 0, defect: defect0 });
    }
    let mut values = Vec::with_capacity(nt + 1);
    let mut defects = Vec::with_capacity(nt + 1);
    values.push(init.to_vec());
    defects.push(defect0);
    for m in 0..nt {
        let next = kernel.apply(&values[m]);
        let defect = (next.iter().sum::<f64>() - 1.0).abs();
        if defect > 1e-9 {
            return Err(Error::Normalization { slice: m + 1, defect });
        }
        values.push(next);
        defects.push(defect);
    }
    Ok(ProbabilityField {
        dom: kernel.dom.clone(),
        dt: kernel.dt,
        values,
        defects,
    })
}

/// Quasi-stationary law of the kernel restricted to the interior, by power
/// iteration with renormalization, stopped when the sup change is below `tol`.
pub fn stationary_power_iteration(kernel: &TransitionKernel, tol: f64, max_iter: usize) -> Result<Vec<f64>> {
    let nx = kernel.dom.nx;
    let mut p = vec![1.0 / nx as f64; nx + 1];
    p[nx] = 0.0;
    let mut residual = f64::INFINITY;
    for _ in 0..max_iter {
        let mut next = kernel.apply(&p);
        next[nx] = 0.0;
        let mass: f64 = next.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::EmptySlice(0));
        }
        next.iter_mut().for_each(|v| *v /= mass);
        residual = next.iter().zip(&p).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        p = next;
        if residual < tol {
            return Ok(p);
        }
    }
    Err(Error::NonConvergence {
        what: "stationary power iteration",
        iterations: max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cme::stationary_distribution;
    use crate::crn::{Direction, ReactionNetwork};
    use approx::assert_abs_diff_eq;

    fn delta(n: usize, at: usize) -> Vec<f64> {
        let mut v = vec![0.0; n];
        v[at] = 1.0;
        v
    }

    #[test]
    fn kernel_rows_are_stochastic() {
        for net in [ReactionNetwork::monostable(), ReactionNetwork::bistable()] {
            let dom = LatticeDomain::new(0.2, 4.0, 40.0, 1).unwrap();
            let k = build_kernel(&net, &dom, 1e-3).unwrap();
            assert!(k.max_row_defect() <= 1e-12);
            assert!((0..k.n_states()).all(|i| k.row(i).iter().all(|&v| v >= 0.0)));
            let a = dom.absorbing();
            assert_eq!(k.get(a, a), 1.0);
            assert!((0..a).all(|j| k.get(a, j) == 0.0));
        }
    }

    #[test]
    fn one_step_probability_matches_first_order_rate() {
        let net = ReactionNetwork::monostable();
        let dom = LatticeDomain::new(0.0, 3.0, 10.0, 1).unwrap();
        let k = build_kernel(&net, &dom, 1e-3).unwrap();
        let i = dom.nearest(1.0).unwrap();
        let p = k.get(i, i + 1);
        assert_abs_diff_eq!(p, skellam_pmf(1, 0.01, 0.01), epsilon = 1e-18);
        assert!((p - 0.01).abs() / 0.01 < 0.02);
    }

    #[test]
    fn zero_rates_give_identity() {
        struct Still(ReactionNetwork);
        impl RateModel for Still {
            fn n_species(&self) -> usize {
                1
            }
            fn n_reactions(&self) -> usize {
                1
            }
            fn stoich(&self, r: usize) -> &[i64] {
                self.0.stoich(r)
            }
            fn macro_rate(&self, _: usize, _: Direction, _: &[f64]) -> f64 {
                0.0
            }
            fn propensity(&self, _: usize, _: Direction, _: &[i64], _: f64) -> f64 {
                0.0
            }
        }
        let dom = LatticeDomain::new(0.0, 2.0, 10.0, 1).unwrap();
        let k = build_kernel(&Still(ReactionNetwork::monostable()), &dom, 0.1).unwrap();
        for i in 0..dom.nx {
            for j in 0..=dom.nx {
                assert_eq!(k.get(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn one_step_from_a_point_mass_is_a_kernel_row() {
        let net = ReactionNetwork::bistable();
        let dom = LatticeDomain::new(0.3, 4.0, 20.0, 1).unwrap();
        let k = build_kernel(&net, &dom, 2e-3).unwrap();
        let i = dom.nearest(1.0).unwrap();
        let f = forward_evolve(&k, &delta(k.n_states(), i), 1).unwrap();
        assert_eq!(f.values[1], k.row(i).to_vec());
    }

    #[test]
    fn equilibrium_mean_is_preserved() {
        let net = ReactionNetwork::monostable();
        let dom = LatticeDomain::new(0.2, 3.0, 30.0, 1).unwrap();
        let k = build_kernel(&net, &dom, 1e-3).unwrap();
        let f = forward_evolve(&k, &delta(k.n_states(), dom.nearest(1.0).unwrap()), 1000).unwrap();
        for m in (0..=1000).step_by(50) {
            assert!((f.mean(m) - 1.0).abs() <= 0.02);
        }
        // Leakage through x = 0.2 is of order exp(-V S(0.2)).
        assert!(f.absorbed(1000) <= 1e-5);
        assert!(f.defects.iter().all(|&d| d <= 1e-9));
    }

    #[test]
    fn power_iteration_agrees_with_detailed_balance() {
        let net = ReactionNetwork::monostable();
        let dom = LatticeDomain::new(-0.05, 4.0, 10.0, 1).unwrap();
        // dt small enough that the mean jump count per step stays below 0.1
        let dt = 0.1 / k_max_rate(&net, &dom);
        let k = build_kernel(&net, &dom, dt).unwrap();
        let pi = stationary_distribution(&net, &dom).unwrap();
        let pw = stationary_power_iteration(&k, 1e-13, 200_000).unwrap();
        // The tau-leap kernel's invariant law differs from the exact one at O(dt).
        for (a, b) in pi.iter().zip(&pw) {
            assert_abs_diff_eq!(a, b, epsilon = 5e-3);
        }
    }

    fn k_max_rate(net: &ReactionNetwork, dom: &LatticeDomain) -> f64 {
        (0..dom.nx)
            .map(|j| {
                let (u, d) = crate::cme::merged_propensities(net, dom.population(j), dom.volume);
                u + d
            })
            .fold(0.0, f64::max)
    }
}
