use super::flow::{hamilton_flow, interp, rk4, FlowState, HamiltonianTrajectory};
use crate::crn::RateModel;
use crate::error::{Error, Result};
use crate::kinetics::ode_field;

#[derive(Debug, Clone)]
pub struct ShootOptions {
    /// Target accuracy of the hitting time.
    pub tol: f64,
    /// RK4 step for hitting-time evaluations and the returned path.
    pub dt: f64,
    /// Largest `|alpha0|` tried while bracketing.
    pub alpha_max: f64,
    pub with_variational: bool,
}

impl Default for ShootOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            dt: 1e-4,
            alpha_max: 50.0,
            with_variational: true,
        }
    }
}

/// First time the scalar flow from `(x0, alpha0)` crosses `xt`, located by
/// linear interpolation between RK4 steps. `f64::INFINITY` if the crossing
/// does not happen before `t_cap` or the flow overflows.
pub fn hitting_time<M: RateModel + ?Sized>(
    net: &M,
    x0: f64,
    xt: f64,
    alpha0: f64,
    dt: f64,
    t_cap: f64,
) -> f64 {
    let mut s = FlowState {
        x: vec![x0],
        a: vec![alpha0],
        phi: None,
    };
    let side = (x0 - xt).signum();
    let mut t = 0.0;
    while t < t_cap {
        let next = match rk4(net, &s, dt) {
            Ok(n) => n,
            Err(_) => return f64::INFINITY,
        };
        let (xa, xb) = (s.x[0], next.x[0]);
        if (xb - xt).signum() != side || xb == xt {
            return t + dt * (xt - xa) / (xb - xa);
        }
        s = next;
        t += dt;
    }
    f64::INFINITY
}

/// Shoots the non-stationary optimal path from `x0` to `xt` in time `t_span`
/// for a scalar network.
pub fn shoot_nop<M: RateModel + ?Sized>(
    net: &M,
    x0: f64,
    xt: f64,
    t_span: f64,
    tol: f64,
) -> Result<HamiltonianTrajectory> {
    shoot_nop_with(
        net,
        x0,
        xt,
        t_span,
        &ShootOptions {
            tol,
            ..ShootOptions::default()
        },
    )
}

pub fn shoot_nop_with<M: RateModel + ?Sized>(
    net: &M,
    x0: f64,
    xt: f64,
    t_span: f64,
    opts: &ShootOptions,
) -> Result<HamiltonianTrajectory> {
    if net.n_species() != 1 {
        return Err(Error::Unsupported("NOP shooting needs a single species".into()));
    }
    if !(x0 > 0.0 && xt > 0.0 && t_span > 0.0) {
        return Err(Error::InvalidArgument("need x0, xT > 0 and T > 0".into()));
    }
    let steps = (t_span / opts.dt).ceil().max(1.0);
    let h = t_span / steps;
    if x0 == xt {
        if ode_field(net, &[x0])[0].abs() > 1e-12 {
            return Err(Error::Unsupported(
                "closed-loop NOP between identical non-equilibrium endpoints".into(),
            ));
        }
        return hamilton_flow(net, &[x0], &[0.0], t_span, h, opts.with_variational);
    }

    let t_cap = 2.0 * t_span + 1.0;
    let tau = |a: f64| hitting_time(net, x0, xt, a, h, t_cap);
    // Pushing alpha in direction `dir` moves the flow toward xT faster.
    let dir = (xt - x0).signum();
    let mut history: Vec<(f64, f64)> = Vec::new();
    let eval = |a: f64, history: &mut Vec<(f64, f64)>| -> Result<f64> {
        let t = tau(a);
        // T(alpha) must be non-increasing in dir * alpha.
        for &(b, tb) in history.iter() {
            let ordered = if dir * a > dir * b { t <= tb } else { t >= tb };
            if !ordered && (t - tb).abs() > opts.tol {
                return Err(Error::NonMonotone { alpha: a });
            }
        }
        history.push((a, t));
        Ok(t)
    };

    let t0 = eval(0.0, &mut history)?;
    let (mut slow, mut fast);
    if (t0 - t_span).abs() <= opts.tol {
        return finish(net, x0, 0.0, t_span, h, opts);
    } else if t0 > t_span {
        slow = 0.0;
        let mut step = 0.125;
        loop {
            let a = dir * step;
            if eval(a, &mut history)? < t_span {
                fast = a;
                break;
            }
            slow = a;
            step *= 2.0;
            if step > opts.alpha_max {
                return Err(Error::NoBracket { alpha_max: opts.alpha_max });
            }
        }
    } else {
        fast = 0.0;
        let mut step = 0.125;
        loop {
            let a = -dir * step;
            if eval(a, &mut history)? > t_span {
                slow = a;
                break;
            }
            fast = a;
            step *= 2.0;
            if step > opts.alpha_max {
                return Err(Error::NoBracket { alpha_max: opts.alpha_max });
            }
        }
    }

    for _ in 0..200 {
        let mid = 0.5 * (slow + fast);
        let t = eval(mid, &mut history)?;
        if (t - t_span).abs() <= opts.tol {
            return finish(net, x0, mid, t_span, h, opts);
        }
        if t > t_span {
            slow = mid;
        } else {
            fast = mid;
        }
        if (slow - fast).abs() <= 1e-15 * mid.abs().max(1.0) {
            break;
        }
    }
    let residual = history.last().map_or(f64::INFINITY, |&(_, t)| (t - t_span).abs());
    Err(Error::NonConvergence {
        what: "NOP shooting",
        iterations: history.len(),
        residual,
    })
}

fn finish<M: RateModel + ?Sized>(
    net: &M,
    x0: f64,
    alpha0: f64,
    t_span: f64,
    h: f64,
    opts: &ShootOptions,
) -> Result<HamiltonianTrajectory> {
    hamilton_flow(net, &[x0], &[alpha0], t_span, h, opts.with_variational)
}

/// Partial action `int_0^t (alpha . x' - H) du`, interpolated on the grid.
pub fn nop_action(traj: &HamiltonianTrajectory, t: f64) -> f64 {
    interp(&traj.times, t, |k| traj.action[k])
}

/// Tail action `int_t^T (alpha . x' - H) du`.
pub fn nop_tail_action(traj: &HamiltonianTrajectory, t: f64) -> f64 {
    traj.total_action() - nop_action(traj, t)
}
