use nalgebra::DMatrix;

use super::{hamiltonian, hamiltonian_grad_alpha, hamiltonian_grad_x, hamiltonian_hessians};
use crate::crn::RateModel;
use crate::error::{Error, Result};
use crate::kinetics::step_count;

/// Solution of Hamilton's equations on a time grid.
///
/// `action[k]` is the trapezoidal integral of `alpha . x' - H` up to
/// `times[k]`. When variational data is requested, `dxdq[k]` and `dadq[k]`
/// are the sensitivities of `x` and `alpha` to the initial momentum.
#[derive(Debug, Clone, PartialEq)]
pub struct HamiltonianTrajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub alpha: Vec<Vec<f64>>,
    pub action: Vec<f64>,
    pub dxdq: Option<Vec<DMatrix<f64>>>,
    pub dadq: Option<Vec<DMatrix<f64>>>,
    /// Times where `det(dx/dq)` changed sign.
    pub conjugate_times: Vec<f64>,
}

impl HamiltonianTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn total_action(&self) -> f64 {
        self.action.last().copied().unwrap_or(0.0)
    }

    /// First component of `x`, for scalar networks.
    pub fn x_scalar(&self) -> Vec<f64> {
        self.x.iter().map(|v| v[0]).collect()
    }

    pub fn alpha_scalar(&self) -> Vec<f64> {
        self.alpha.iter().map(|v| v[0]).collect()
    }

    /// Linear interpolation of a scalar path (`component`) at `t`.
    pub fn x_at(&self, t: f64, component: usize) -> f64 {
        interp(&self.times, t, |k| self.x[k][component])
    }

    pub fn alpha_at(&self, t: f64, component: usize) -> f64 {
        interp(&self.times, t, |k| self.alpha[k][component])
    }

    /// `sup_t |H(t) - H(0)|` along the stored samples.
    pub fn hamiltonian_drift<M: RateModel + ?Sized>(&self, net: &M) -> Result<f64> {
        let h0 = hamiltonian(net, &self.x[0], &self.alpha[0])?;
        let mut sup = 0.0f64;
        for (x, a) in self.x.iter().zip(&self.alpha) {
            sup = sup.max((hamiltonian(net, x, a)? - h0).abs());
        }
        Ok(sup)
    }
}

pub(crate) fn interp(times: &[f64], t: f64, value: impl Fn(usize) -> f64) -> f64 {
    let k = times.partition_point(|&s| s <= t);
    if k == 0 {
        return value(0);
    }
    if k >= times.len() {
        return value(times.len() - 1);
    }
    let (t0, t1) = (times[k - 1], times[k]);
    let w = (t - t0) / (t1 - t0);
    value(k - 1) + w * (value(k) - value(k - 1))
}

/// State of the extended flow: position, momentum and optionally the
/// `2N x 2N` fundamental matrix.
#[derive(Clone)]
pub(crate) struct FlowState {
    pub x: Vec<f64>,
    pub a: Vec<f64>,
    pub phi: Option<DMatrix<f64>>,
}

fn rhs<M: RateModel + ?Sized>(net: &M, s: &FlowState) -> Result<FlowState> {
    let dx = hamiltonian_grad_alpha(net, &s.x, &s.a)?;
    let da: Vec<f64> = hamiltonian_grad_x(net, &s.x, &s.a)?.into_iter().map(|v| -v).collect();
    let dphi = match &s.phi {
        None => None,
        Some(phi) => {
            let n = s.x.len();
            let (haa, hax, hxx) = hamiltonian_hessians(net, &s.x, &s.a)?;
            let mut jac = DMatrix::zeros(2 * n, 2 * n);
            jac.view_mut((0, 0), (n, n)).copy_from(&hax);
            jac.view_mut((0, n), (n, n)).copy_from(&haa);
            jac.view_mut((n, 0), (n, n)).copy_from(&(-hxx));
            jac.view_mut((n, n), (n, n)).copy_from(&(-hax.transpose()));
            Some(jac * phi)
        }
    };
    Ok(FlowState { x: dx, a: da, phi: dphi })
}

fn axpy(s: &FlowState, k: &FlowState, h: f64) -> FlowState {
    FlowState {
        x: s.x.iter().zip(&k.x).map(|(a, b)| a + h * b).collect(),
        a: s.a.iter().zip(&k.a).map(|(a, b)| a + h * b).collect(),
        phi: match (&s.phi, &k.phi) {
            (Some(p), Some(q)) => Some(p + q * h),
            _ => None,
        },
    }
}

pub(crate) fn rk4<M: RateModel + ?Sized>(net: &M, s: &FlowState, h: f64) -> Result<FlowState> {
    let k1 = rhs(net, s)?;
    let k2 = rhs(net, &axpy(s, &k1, h / 2.0))?;
    let k3 = rhs(net, &axpy(s, &k2, h / 2.0))?;
    let k4 = rhs(net, &axpy(s, &k3, h))?;
    let mut out = axpy(s, &k1, h / 6.0);
    out = axpy(&out, &k2, h / 3.0);
    out = axpy(&out, &k3, h / 3.0);
    out = axpy(&out, &k4, h / 6.0);
    if out.x.iter().chain(&out.a).any(|v| !v.is_finite()) {
        return Err(Error::Overflow { exponent: f64::INFINITY });
    }
    Ok(out)
}

/// Lagrangian density `alpha . x' - H` at a state.
pub(crate) fn action_density<M: RateModel + ?Sized>(net: &M, x: &[f64], a: &[f64]) -> Result<f64> {
    let v = hamiltonian_grad_alpha(net, x, a)?;
    let av: f64 = a.iter().zip(&v).map(|(p, q)| p * q).sum();
    Ok(av - hamiltonian(net, x, a)?)
}

/// RK4 integration of `x' = dH/dalpha`, `alpha' = -dH/dx` from `(x0, alpha0)`
/// over `[0, t_end]` with step about `dt`.
pub fn hamilton_flow<M: RateModel + ?Sized>(
    net: &M,
    x0: &[f64],
    alpha0: &[f64],
    t_end: f64,
    dt: f64,
    with_variational: bool,
) -> Result<HamiltonianTrajectory> {
    let n = net.n_species();
    if x0.len() != n || alpha0.len() != n {
        return Err(Error::ShapeMismatch("x0 and alpha0 must have one entry per species".into()));
    }
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and t_end >= 0".into()));
    }
    let steps = step_count(t_end, dt);
    let h = if steps == 0 { 0.0 } else { t_end / steps as f64 };
    let mut state = FlowState {
        x: x0.to_vec(),
        a: alpha0.to_vec(),
        phi: with_variational.then(|| DMatrix::identity(2 * n, 2 * n)),
    };
    let mut traj = HamiltonianTrajectory {
        times: Vec::with_capacity(steps + 1),
        x: Vec::with_capacity(steps + 1),
        alpha: Vec::with_capacity(steps + 1),
        action: Vec::with_capacity(steps + 1),
        dxdq: with_variational.then(Vec::new),
        dadq: with_variational.then(Vec::new),
        conjugate_times: Vec::new(),
    };
    let mut density = action_density(net, x0, alpha0)?;
    let mut prev_det: Option<f64> = None;
    for k in 0..=steps {
        let t = k as f64 * h;
        if k > 0 {
            state = rk4(net, &state, h)?;
            let d = action_density(net, &state.x, &state.a)?;
            let acc = traj.action[k - 1] + 0.5 * h * (density + d);
            density = d;
            traj.action.push(acc);
        } else {
            traj.action.push(0.0);
        }
        traj.times.push(t);
        traj.x.push(state.x.clone());
        traj.alpha.push(state.a.clone());
        if let Some(phi) = &state.phi {
            let dxdq = phi.view((0, n), (n, n)).into_owned();
            let dadq = phi.view((n, n), (n, n)).into_owned();
            let det = dxdq.determinant();
            if let Some(p) = prev_det {
                if k > 1 && p * det < 0.0 {
                    traj.conjugate_times.push(t);
                }
            }
            prev_det = Some(det);
            traj.dxdq.as_mut().unwrap().push(dxdq);
            traj.dadq.as_mut().unwrap().push(dadq);
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::ReactionNetwork;
    use approx::assert_abs_diff_eq;

    #[test]
    fn equilibrium_with_zero_momentum_is_stationary() {
        let net = ReactionNetwork::monostable();
        let traj = hamilton_flow(&net, &[1.0], &[0.0], 1.0, 1e-3, false).unwrap();
        assert!(traj.x.iter().all(|x| x[0] == 1.0));
        assert_eq!(traj.total_action(), 0.0);
    }

    #[test]
    fn monostable_momentum_reaches_two() {
        let net = ReactionNetwork::monostable();
        let traj = hamilton_flow(&net, &[1.0], &[0.382], 1.0, 1e-4, false).unwrap();
        assert_abs_diff_eq!(traj.x.last().unwrap()[0], 2.0, epsilon = 5e-3);
    }

    #[test]
    fn hamiltonian_is_conserved() {
        for (net, a0) in [(ReactionNetwork::monostable(), 0.382), (ReactionNetwork::bistable(), 0.0545)] {
            let traj = hamilton_flow(&net, &[1.0], &[a0], 1.0, 1e-4, false).unwrap();
            assert!(traj.hamiltonian_drift(&net).unwrap() <= 1e-10);
        }
    }

    #[test]
    fn variational_data_matches_finite_differences() {
        let net = ReactionNetwork::bistable();
        let (a0, eps) = (0.05, 1e-6);
        let traj = hamilton_flow(&net, &[1.0], &[a0], 0.8, 1e-4, true).unwrap();
        let up = hamilton_flow(&net, &[1.0], &[a0 + eps], 0.8, 1e-4, false).unwrap();
        let dn = hamilton_flow(&net, &[1.0], &[a0 - eps], 0.8, 1e-4, false).unwrap();
        let k = traj.len() - 1;
        let fd_x = (up.x[k][0] - dn.x[k][0]) / (2.0 * eps);
        let fd_a = (up.alpha[k][0] - dn.alpha[k][0]) / (2.0 * eps);
        assert_abs_diff_eq!(traj.dxdq.as_ref().unwrap()[k][(0, 0)], fd_x, epsilon = 1e-6);
        assert_abs_diff_eq!(traj.dadq.as_ref().unwrap()[k][(0, 0)], fd_a, epsilon = 1e-6);
        assert_eq!(traj.dxdq.as_ref().unwrap()[0][(0, 0)], 0.0);
        assert!(traj.conjugate_times.is_empty());
    }
}
