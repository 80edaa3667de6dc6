//! Gaussian limits around optimal paths: the reversed drift and diffusion
//! fields, curvature of the action along characteristics, Lyapunov
//! covariance equations, the equilibrium Riccati relation and a Gaussian
//! fit of prehistory slices.

use nalgebra::{DMatrix, DVector};

use crate::crn::{Direction, RateModel};
use crate::error::{Error, Result};
use crate::kinetics::{diffusion_matrix, ode_jacobian};
use crate::ldp::{hamiltonian_grad_alpha, hamiltonian_hessians, stationary_momentum, HamiltonianTrajectory, Quasipotential1D};
use crate::reversal::PrehistoryField;

fn check_in_grid(quasi: &Quasipotential1D, x: f64) -> Result<()> {
    let g = &quasi.grid;
    if g.is_empty() || !(x >= g[0] && x <= g[g.len() - 1]) {
        return Err(Error::InvalidArgument(format!("x = {x} outside the quasipotential grid")));
    }
    Ok(())
}

/// Stationary reversed drift `G(x) = -dH/dalpha(x, S'(x))`. `S'` is evaluated
/// exactly from the rates; `quasi` fixes the admissible range.
pub fn reversed_drift_stat<M: RateModel + ?Sized>(net: &M, quasi: &Quasipotential1D, x: f64) -> Result<f64> {
    check_in_grid(quasi, x)?;
    let p = stationary_momentum(net, x)?;
    Ok(-hamiltonian_grad_alpha(net, &[x], &[p])?[0])
}

/// Stationary reversed diffusion `J(x) = d^2H/dalpha^2(x, S'(x))`.
pub fn reversed_diffusion_stat<M: RateModel + ?Sized>(net: &M, quasi: &Quasipotential1D, x: f64) -> Result<f64> {
    check_in_grid(quasi, x)?;
    let p = stationary_momentum(net, x)?;
    Ok(hamiltonian_hessians(net, &[x], &[p])?.0[(0, 0)])
}

/// Total rates of jumps up and down and their derivatives for a scalar
/// network whose channels share one jump size: `(nu, U, D, U', D')`.
fn merged_macro<M: RateModel + ?Sized>(net: &M, x: f64) -> Result<(f64, f64, f64, f64, f64)> {
    let nu = crate::cme::common_jump(net)?;
    let (mut u, mut d, mut du, mut dd) = (0.0, 0.0, 0.0, 0.0);
    let mut g = [0.0];
    for i in 0..net.n_reactions() {
        let up_dir = if net.stoich(i)[0] > 0 { Direction::Forward } else { Direction::Backward };
        let down_dir = if up_dir == Direction::Forward { Direction::Backward } else { Direction::Forward };
        u += net.macro_rate(i, up_dir, &[x]);
        d += net.macro_rate(i, down_dir, &[x]);
        net.macro_rate_grad(i, up_dir, &[x], &mut g);
        du += g[0];
        net.macro_rate_grad(i, down_dir, &[x], &mut g);
        dd += g[0];
    }
    Ok((nu as f64, u, d, du, dd))
}

/// `S''(x) = d/dx ln(R_down / R_up) / nu` for a scalar network with a
/// common jump size.
pub fn quasipotential_curvature<M: RateModel + ?Sized>(net: &M, x: f64) -> Result<f64> {
    let (nu, u, d, du, dd) = merged_macro(net, x)?;
    if !(u > 0.0 && d > 0.0) {
        return Err(Error::ZeroRate(format!("merged rates vanish at x = {x}")));
    }
    Ok((dd / d - du / u) / nu)
}

/// `G'(x) = -(H_ax + H_aa S'')` at `(x, S'(x))`.
pub fn reversed_drift_stat_grad<M: RateModel + ?Sized>(net: &M, x: f64) -> Result<f64> {
    let p = stationary_momentum(net, x)?;
    let (haa, hax, _) = hamiltonian_hessians(net, &[x], &[p])?;
    Ok(-(hax[(0, 0)] + haa[(0, 0)] * quasipotential_curvature(net, x)?))
}

/// Gradient and Hessian of `S(., t | x0)` along a characteristic.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionDerivatives {
    pub times: Vec<f64>,
    /// `dS/dx = alpha(t)`.
    pub grad: Vec<Vec<f64>>,
    /// `d^2S/dx^2 = (d alpha / dq)(d x / dq)^{-1}`.
    pub hessian: Vec<DMatrix<f64>>,
}

/// Action derivatives at the samples of `traj` with `t0 <= t <= t1`. The
/// trajectory must carry variational data; a singular `dx/dq` in the window
/// (including the source point at `t = 0`) is a conjugate point.
pub fn grad_s_along_nop(traj: &HamiltonianTrajectory, t0: f64, t1: f64) -> Result<ActionDerivatives> {
    let (Some(dxdq), Some(dadq)) = (traj.dxdq.as_ref(), traj.dadq.as_ref()) else {
        return Err(Error::InvalidArgument("trajectory lacks variational data".into()));
    };
    if let Some(&t) = traj.conjugate_times.iter().find(|&&t| t >= t0 && t <= t1) {
        return Err(Error::ConjugatePoint { t });
    }
    let mut out = ActionDerivatives {
        times: Vec::new(),
        grad: Vec::new(),
        hessian: Vec::new(),
    };
    for (k, &t) in traj.times.iter().enumerate() {
        if t < t0 || t > t1 {
            continue;
        }
        let inv = dxdq[k]
            .clone()
            .try_inverse()
            .filter(|_| dxdq[k].determinant().abs() > 1e-12)
            .ok_or(Error::ConjugatePoint { t })?;
        out.times.push(t);
        out.grad.push(traj.alpha[k].clone());
        out.hessian.push(&dadq[k] * inv);
    }
    Ok(out)
}

/// Which end of the grid carries the zero condition.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Anchor {
    /// `kappa(t_0) = 0`, integrate `kappa' = A kappa + kappa A^T + B` forward.
    Initial,
    /// `kappa(t_N) = 0`, integrate the same equation in the reversed time
    /// `s = t_N - t`; `A` and `B` describe the reversed process at time `t`.
    Terminal,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CovariancePath {
    pub times: Vec<f64>,
    pub kappa: Vec<DMatrix<f64>>,
    pub anchor: Anchor,
}

impl CovariancePath {
    pub fn kappa_scalar(&self) -> Vec<f64> {
        self.kappa.iter().map(|k| k[(0, 0)]).collect()
    }

    /// Linear interpolation of `kappa[(0, 0)]`; `None` outside the grid.
    pub fn kappa_at(&self, t: f64) -> Option<f64> {
        let (lo, hi) = (self.times[0], self.times[self.times.len() - 1]);
        if !(t >= lo - 1e-12 && t <= hi + 1e-12) {
            return None;
        }
        Some(crate::ldp::interp_samples(&self.times, t, |k| self.kappa[k][(0, 0)]))
    }
}

/// RK4 solution of the Lyapunov equation on `t_grid` with `A` and `B` given
/// at the grid points and linearly interpolated between them.
pub fn lyapunov_cov(a: &[DMatrix<f64>], b: &[DMatrix<f64>], t_grid: &[f64], anchor: Anchor) -> Result<CovariancePath> {
    let len = t_grid.len();
    if len < 2 || a.len() != len || b.len() != len {
        return Err(Error::ShapeMismatch("A, B and the time grid must have equal length >= 2".into()));
    }
    if t_grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidArgument("time grid must be increasing".into()));
    }
    let n = a[0].nrows();
    let rhs = |k: &DMatrix<f64>, am: &DMatrix<f64>, bm: &DMatrix<f64>| am * k + k * am.transpose() + bm;
    let mut kappa = vec![DMatrix::zeros(n, n); len];
    let order: Vec<usize> = match anchor {
        Anchor::Initial => (0..len).collect(),
        Anchor::Terminal => (0..len).rev().collect(),
    };
    for w in order.windows(2) {
        let (i, j) = (w[0], w[1]);
        let h = (t_grid[j] - t_grid[i]).abs();
        let (am, bm) = ((&a[i] + &a[j]) * 0.5, (&b[i] + &b[j]) * 0.5);
        let k0 = &kappa[i];
        let k1 = rhs(k0, &a[i], &b[i]);
        let k2 = rhs(&(k0 + &k1 * (h / 2.0)), &am, &bm);
        let k3 = rhs(&(k0 + &k2 * (h / 2.0)), &am, &bm);
        let k4 = rhs(&(k0 + &k3 * h), &a[j], &b[j]);
        let next = k0 + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
        kappa[j] = (&next + next.transpose()) * 0.5;
    }
    Ok(CovariancePath {
        times: t_grid.to_vec(),
        kappa,
        anchor,
    })
}

fn scalar(v: f64) -> DMatrix<f64> {
    DMatrix::from_element(1, 1, v)
}

/// Covariance of the stationary reversed process started at `x_t`: the
/// reversed path solves `x' = G(x)` by RK4 and `kappa` the Lyapunov equation
/// with `A = G'`, `B = J` along it. Returns the path samples and `kappa`.
pub fn spp_covariance<M: RateModel + ?Sized>(
    net: &M,
    x_t: f64,
    t_end: f64,
    dt: f64,
) -> Result<(Vec<f64>, CovariancePath)> {
    if !(t_end > 0.0 && dt > 0.0) {
        return Err(Error::InvalidArgument("need T > 0 and dt > 0".into()));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let h = t_end / steps as f64;
    let g = |x: f64| -> Result<f64> {
        let p = stationary_momentum(net, x)?;
        Ok(-hamiltonian_grad_alpha(net, &[x], &[p])?[0])
    };
    let mut xs = Vec::with_capacity(steps + 1);
    let mut x = x_t;
    xs.push(x);
    for _ in 0..steps {
        let k1 = g(x)?;
        let k2 = g(x + 0.5 * h * k1)?;
        let k3 = g(x + 0.5 * h * k2)?;
        let k4 = g(x + h * k3)?;
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        xs.push(x);
    }
    let times: Vec<f64> = (0..=steps).map(|k| k as f64 * h).collect();
    let mut a = Vec::with_capacity(xs.len());
    let mut b = Vec::with_capacity(xs.len());
    for &x in &xs {
        let p = stationary_momentum(net, x)?;
        let (haa, hax, _) = hamiltonian_hessians(net, &[x], &[p])?;
        a.push(scalar(-(hax[(0, 0)] + haa[(0, 0)] * quasipotential_curvature(net, x)?)));
        b.push(scalar(haa[(0, 0)]));
    }
    Ok((xs, lyapunov_cov(&a, &b, &times, Anchor::Initial)?))
}

/// Covariance of the non-stationary prehistory around a NOP with
/// variational data, on the NOP samples with `t >= t_min`. The reversed
/// drift Jacobian is `-(H_ax + H_aa S_xx)` and the diffusion `H_aa`; the
/// zero condition sits at the terminal time.
pub fn npp_covariance<M: RateModel + ?Sized>(net: &M, nop: &HamiltonianTrajectory, t_min: f64) -> Result<CovariancePath> {
    let t_end = *nop.times.last().ok_or(Error::EmptySlice(0))?;
    let d = grad_s_along_nop(nop, t_min, t_end)?;
    let mut a = Vec::with_capacity(d.times.len());
    let mut b = Vec::with_capacity(d.times.len());
    for (k, &t) in d.times.iter().enumerate() {
        let idx = nop.times.partition_point(|&s| s < t);
        let (haa, hax, _) = hamiltonian_hessians(net, &nop.x[idx], &nop.alpha[idx])?;
        a.push(-(hax + &haa * &d.hessian[k]));
        b.push(haa);
    }
    lyapunov_cov(&a, &b, &d.times, Anchor::Terminal)
}

/// Curvature `iota` of `S` at a stable equilibrium from the algebraic
/// Riccati relation `2 F' + iota J0 = 0`, i.e. `iota = -2 F'(x_eq) / J0(x_eq)`.
pub fn riccati_equilibrium<M: RateModel + ?Sized>(net: &M, x_eq: f64) -> Result<f64> {
    if net.n_species() != 1 {
        return Err(Error::Unsupported("Riccati relation implemented for one species".into()));
    }
    let fp = ode_jacobian(net, &[x_eq])[(0, 0)];
    if !(fp < 0.0) {
        return Err(Error::InvalidArgument(format!(
            "x = {x_eq} is not a stable equilibrium (F' = {fp})"
        )));
    }
    let j0 = diffusion_matrix(net, &[x_eq])[(0, 0)];
    Ok(-2.0 * fp / j0)
}

/// Comparison of one prehistory slice with the predicted Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnvelopeRecord {
    pub t: f64,
    pub fitted_var: f64,
    pub predicted_var: f64,
    pub tv_distance: f64,
}

/// Cells whose mass is at least this fraction of the peak enter the fit.
pub const FIT_WINDOW: f64 = 1e-3;

/// Variance from a least-squares quadratic fit of `ln q` over the
/// contiguous cells around the peak with `q >= FIT_WINDOW * peak`. A point
/// mass has variance 0.
pub fn fitted_variance(xs: &[f64], q: &[f64]) -> Result<f64> {
    let (peak, top) = q
        .iter()
        .enumerate()
        .fold((0, 0.0), |acc, (j, &v)| if v > acc.1 { (j, v) } else { acc });
    if !(top > 0.0) {
        return Err(Error::EmptySlice(0));
    }
    let floor = FIT_WINDOW * top;
    let mut lo = peak;
    while lo > 0 && q[lo - 1] >= floor {
        lo -= 1;
    }
    let mut hi = peak + 1;
    while hi < q.len() && q[hi] >= floor {
        hi += 1;
    }
    let count = hi - lo;
    if count < 5 {
        let total: f64 = q.iter().sum();
        if top >= total * (1.0 - 1e-9) {
            return Ok(0.0);
        }
        return Err(Error::FitWindow(count));
    }
    let x_peak = xs[peak];
    let design = DMatrix::from_fn(count, 3, |r, c| (xs[lo + r] - x_peak).powi(c as i32));
    let rhs = DVector::from_fn(count, |r, _| q[lo + r].ln());
    let coef = design
        .svd(true, true)
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::InvalidArgument(format!("quadratic fit failed: {e}")))?;
    let c2 = coef[2];
    Ok(if c2 < 0.0 { -0.5 / c2 } else { f64::INFINITY })
}

/// Comparison of `field` with the Gaussian of variance `kappa(t) / V`
/// centred on `path(t)` at each of `times` (rounded to the nearest slice).
/// `path` holds `(t, x)` pairs in increasing `t`; `kappa` and the centre are
/// linearly interpolated. The total-variation distance is taken against the
/// lattice Gaussian restricted to four predicted standard deviations.
pub fn gaussian_envelope(
    field: &PrehistoryField,
    cov: &CovariancePath,
    path: &[(f64, f64)],
    times: &[f64],
) -> Result<Vec<EnvelopeRecord>> {
    if path.len() < 2 {
        return Err(Error::ShapeMismatch("path needs at least two samples".into()));
    }
    let dom = &field.dom;
    let xs = dom.cells();
    let path_t: Vec<f64> = path.iter().map(|p| p.0).collect();
    let (p_lo, p_hi) = (path_t[0], path_t[path_t.len() - 1]);
    times
        .iter()
        .map(|&t_req| {
            let m = field.slice_at(t_req);
            let t = field.time(m);
            if t < p_lo - 1e-9 || t > p_hi + 1e-9 {
                return Err(Error::InvalidArgument(format!("t = {t} outside the path samples")));
            }
            let kappa = cov
                .kappa_at(t)
                .ok_or_else(|| Error::InvalidArgument(format!("t = {t} outside the covariance grid")))?;
            let q = &field.values[m][..dom.nx];
            let fitted_var = fitted_variance(&xs, q)?;
            let predicted_var = kappa.max(0.0) / dom.volume;
            let centre = crate::ldp::interp_samples(&path_t, t, |k| path[k].1);
            let mut g = vec![0.0; dom.nx];
            if predicted_var > 0.0 {
                let sd = predicted_var.sqrt();
                for (j, gj) in g.iter_mut().enumerate() {
                    let z = (xs[j] - centre) / sd;
                    if z.abs() <= 4.0 {
                        *gj = (-0.5 * z * z).exp();
                    }
                }
            }
            let z: f64 = g.iter().sum();
            if z > 0.0 {
                g.iter_mut().for_each(|v| *v /= z);
            } else {
                g[dom.nearest(centre.clamp(dom.x_l, dom.x_r))?] = 1.0;
            }
            let tv_distance = 0.5 * q.iter().zip(&g).map(|(a, b)| (a - b).abs()).sum::<f64>();
            Ok(EnvelopeRecord {
                t,
                fitted_var,
                predicted_var,
                tv_distance,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::ReactionNetwork;
    use crate::ldp::{op_path, quasipotential_1d, shoot_nop, shoot_nop_with, OpOptions, ShootOptions};
    use approx::assert_abs_diff_eq;

    fn mono_quasi() -> Quasipotential1D {
        let grid: Vec<f64> = (1..=40).map(|k| k as f64 * 0.1).collect();
        quasipotential_1d(&ReactionNetwork::monostable(), 1.0, &grid).unwrap()
    }

    #[test]
    fn monostable_fields_have_closed_forms() {
        let net = ReactionNetwork::monostable();
        let q = mono_quasi();
        for x in [0.5, 1.0, 1.7, 2.0, 3.3] {
            assert_abs_diff_eq!(reversed_drift_stat(&net, &q, x).unwrap(), -(x - 1.0), epsilon = 1e-14);
            assert_abs_diff_eq!(reversed_diffusion_stat(&net, &q, x).unwrap(), x + 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(reversed_drift_stat_grad(&net, x).unwrap(), -1.0, epsilon = 1e-14);
        }
        assert_eq!(reversed_drift_stat(&net, &q, 1.0).unwrap(), 0.0);
        assert!(reversed_drift_stat(&net, &q, 5.0).is_err());
    }

    #[test]
    fn equilibrium_diffusion_equals_forward_diffusion() {
        let net = ReactionNetwork::bistable();
        let grid: Vec<f64> = (5..=35).map(|k| k as f64 * 0.1).collect();
        let q = quasipotential_1d(&net, 1.0, &grid).unwrap();
        for x in [1.0, 3.0] {
            let j = reversed_diffusion_stat(&net, &q, x).unwrap();
            assert_abs_diff_eq!(j, diffusion_matrix(&net, &[x])[(0, 0)], epsilon = 1e-12);
        }
    }

    #[test]
    fn reversed_op_follows_the_stationary_drift() {
        let net = ReactionNetwork::monostable();
        let q = mono_quasi();
        let op = op_path(&net, 2.0, 1.0, &OpOptions::default()).unwrap();
        // op.times run from -tau to 0; the reversed path is x(-s).
        for k in (0..op.len()).step_by(997) {
            let s = -op.times[k];
            let x = op.x[k][0];
            assert_abs_diff_eq!(x, 1.0 + (-s).exp(), epsilon = 1e-8);
            assert_abs_diff_eq!(-(1.0 + (-s).exp() - 1.0), reversed_drift_stat(&net, &q, x).unwrap(), epsilon = 1e-8);
        }
    }

    #[test]
    fn lyapunov_without_noise_stays_zero() {
        let t: Vec<f64> = (0..=10).map(|k| k as f64 * 0.1).collect();
        let a = vec![scalar(-1.0); 11];
        let b = vec![scalar(0.0); 11];
        for anchor in [Anchor::Initial, Anchor::Terminal] {
            let c = lyapunov_cov(&a, &b, &t, anchor).unwrap();
            assert!(c.kappa_scalar().iter().all(|&k| k == 0.0));
        }
    }

    #[test]
    fn spp_covariance_matches_closed_form() {
        let net = ReactionNetwork::monostable();
        let (xs, c) = spp_covariance(&net, 2.0, 3.0, 1e-4).unwrap();
        let mut err = 0.0f64;
        for (k, &t) in c.times.iter().enumerate() {
            let exact = 1.0 + (-t).exp() - 2.0 * (-2.0 * t).exp();
            err = err.max((c.kappa[k][(0, 0)] - exact).abs());
            assert_abs_diff_eq!(xs[k], 1.0 + (-t).exp(), epsilon = 1e-12);
        }
        assert!(err <= 1e-8, "{err}");
    }

    #[test]
    fn stationary_lyapunov_balances_riccati_curvature() {
        for (net, x_eq, iota) in [
            (ReactionNetwork::monostable(), 1.0, 1.0),
            (ReactionNetwork::bistable(), 1.0, 1.0 / 6.0),
        ] {
            let r = riccati_equilibrium(&net, x_eq).unwrap();
            assert_abs_diff_eq!(r, iota, epsilon = 1e-12);
            assert_abs_diff_eq!(r, quasipotential_curvature(&net, x_eq).unwrap(), epsilon = 1e-12);
            let fp = ode_jacobian(&net, &[x_eq])[(0, 0)];
            let j0 = diffusion_matrix(&net, &[x_eq])[(0, 0)];
            let t: Vec<f64> = (0..=20_000).map(|k| k as f64 * 1e-3).collect();
            let c = lyapunov_cov(&vec![scalar(fp); t.len()], &vec![scalar(j0); t.len()], &t, Anchor::Initial).unwrap();
            assert_abs_diff_eq!(c.kappa.last().unwrap()[(0, 0)] * r, 1.0, epsilon = 1e-6);
        }
        assert!(riccati_equilibrium(&ReactionNetwork::bistable(), 2.0).is_err());
    }

    #[test]
    fn action_gradient_is_the_momentum_and_grows_along_the_nop() {
        let net = ReactionNetwork::monostable();
        let nop = shoot_nop(&net, 1.0, 2.0, 1.0, 1e-10).unwrap();
        assert!(matches!(grad_s_along_nop(&nop, 0.0, 1.0), Err(Error::ConjugatePoint { .. })));
        let d = grad_s_along_nop(&nop, 0.01, 1.0).unwrap();
        assert!(d.grad.windows(2).all(|w| w[1][0] > w[0][0] && w[0][0] > 0.0));
        assert!(d.hessian.iter().all(|h| h[(0, 0)] > 0.0));
        // Close to the source the curvature blows up like 1 / (H_aa t).
        assert!(d.hessian[0][(0, 0)] > 10.0 * d.hessian[d.hessian.len() - 1][(0, 0)]);
    }

    #[test]
    fn long_horizon_nop_gradient_approaches_the_quasipotential_slope() {
        let net = ReactionNetwork::monostable();
        let opts = ShootOptions {
            tol: 1e-9,
            dt: 1e-3,
            with_variational: false,
            ..ShootOptions::default()
        };
        let nop = shoot_nop_with(&net, 1.0 + 1e-6, 2.0, 8.0, &opts).unwrap();
        let k = nop.x.iter().position(|x| x[0] >= 1.5).unwrap();
        let x = nop.x[k][0];
        assert_abs_diff_eq!(nop.alpha[k][0], x.ln(), epsilon = 5e-3);
    }

    #[test]
    fn npp_covariance_vanishes_at_both_ends() {
        let net = ReactionNetwork::monostable();
        let nop = shoot_nop(&net, 1.0, 2.0, 1.0, 1e-10).unwrap();
        let c = npp_covariance(&net, &nop, 1e-3).unwrap();
        let k = c.kappa_scalar();
        assert_eq!(*k.last().unwrap(), 0.0);
        assert!(k[0] < 5e-3, "{}", k[0]);
        assert!(k.iter().all(|&v| v >= 0.0));
        let mid = c.kappa_at(0.5).unwrap();
        assert!(mid > 0.1 && mid < 1.0, "{mid}");
    }

    #[test]
    fn fitted_variance_recovers_a_lattice_gaussian() {
        let xs: Vec<f64> = (0..400).map(|j| j as f64 / 100.0).collect();
        let q: Vec<f64> = xs.iter().map(|x| (-(x - 2.0f64).powi(2) / (2.0 * 0.01)).exp()).collect();
        assert_abs_diff_eq!(fitted_variance(&xs, &q).unwrap(), 0.01, epsilon = 1e-10);
        let mut point = vec![0.0; 400];
        point[7] = 1.0;
        assert_eq!(fitted_variance(&xs, &point).unwrap(), 0.0);
        let mut two = vec![0.0; 400];
        two[7] = 0.5;
        two[8] = 0.5;
        assert!(matches!(fitted_variance(&xs, &two), Err(Error::FitWindow(2))));
    }
}
