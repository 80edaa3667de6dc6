use super::flow::HamiltonianTrajectory;
use super::{hamiltonian, hamiltonian_grad_alpha, EXPONENT_LIMIT};
use crate::crn::{Direction, RateModel};
use crate::error::{Error, Result};

/// Eight-point Gauss-Legendre rule on [-1, 1].
const GL_NODES: [f64; 8] = [
    -0.960_289_856_497_536_3,
    -0.796_666_477_413_626_7,
    -0.525_532_409_916_329,
    -0.183_434_642_495_649_8,
    0.183_434_642_495_649_8,
    0.525_532_409_916_329,
    0.796_666_477_413_626_7,
    0.960_289_856_497_536_3,
];
const GL_WEIGHTS: [f64; 8] = [
    0.101_228_536_290_376_3,
    0.222_381_034_453_374_5,
    0.313_706_645_877_887_3,
    0.362_683_783_378_362,
    0.362_683_783_378_362,
    0.313_706_645_877_887_3,
    0.222_381_034_453_374_5,
    0.101_228_536_290_376_3,
];
const PANEL: f64 = 0.01;

/// Quasipotential of a scalar network sampled on a grid, with `S(x_eq) = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Quasipotential1D {
    pub grid: Vec<f64>,
    pub s: Vec<f64>,
    pub ds: Vec<f64>,
    pub x_eq: f64,
}

impl Quasipotential1D {
    /// Cubic Hermite interpolation of `S` using the stored derivatives.
    pub fn value_at(&self, x: f64) -> Option<f64> {
        let g = &self.grid;
        if g.is_empty() || x < g[0] || x > g[g.len() - 1] {
            return None;
        }
        let k = g.partition_point(|&v| v <= x).clamp(1, g.len() - 1);
        let (x0, x1) = (g[k - 1], g[k]);
        let h = x1 - x0;
        if h == 0.0 {
            return Some(self.s[k]);
        }
        let u = (x - x0) / h;
        let (h00, h10) = (2.0 * u.powi(3) - 3.0 * u * u + 1.0, u.powi(3) - 2.0 * u * u + u);
        let (h01, h11) = (-2.0 * u.powi(3) + 3.0 * u * u, u.powi(3) - u * u);
        Some(h00 * self.s[k - 1] + h10 * h * self.ds[k - 1] + h01 * self.s[k] + h11 * h * self.ds[k])
    }

    /// Linear interpolation of `dS/dx`.
    pub fn slope_at(&self, x: f64) -> Option<f64> {
        let g = &self.grid;
        if g.is_empty() || x < g[0] || x > g[g.len() - 1] {
            return None;
        }
        Some(super::flow::interp(g, x, |k| self.ds[k]))
    }
}

/// Channels of a scalar network as `(|nu|, R_up, R_down)`, where `R_up` is the
/// rate of the jump that increases `x`.
fn oriented_rates<M: RateModel + ?Sized>(net: &M, x: f64) -> Vec<(i64, f64, f64)> {
    (0..net.n_reactions())
        .map(|i| {
            let nu = net.stoich(i)[0];
            let rp = net.macro_rate(i, Direction::Forward, &[x]);
            let rm = net.macro_rate(i, Direction::Backward, &[x]);
            if nu > 0 {
                (nu, rp, rm)
            } else {
                (-nu, rm, rp)
            }
        })
        .collect()
}

/// The momentum `p(x) = dS/dx` solving `H(x, p) = 0` with `p != 0` away from
/// equilibria. For a common jump size `nu` this is `ln(R_down / R_up) / nu`.
pub fn stationary_momentum<M: RateModel + ?Sized>(net: &M, x: f64) -> Result<f64> {
    if net.n_species() != 1 {
        return Err(Error::Unsupported("quasipotential needs a single species".into()));
    }
    let ch = oriented_rates(net, x);
    if ch.iter().any(|&(nu, _, _)| nu == 0) {
        return Err(Error::InvalidNetwork("channel with zero jump".into()));
    }
    let up: f64 = ch.iter().map(|c| c.1).sum();
    let down: f64 = ch.iter().map(|c| c.2).sum();
    if !(up > 0.0 && down > 0.0) {
        return Err(Error::ZeroRate(format!("total up/down rates at x = {x} are {up}/{down}")));
    }
    let nu0 = ch[0].0;
    if ch.iter().all(|c| c.0 == nu0) {
        return Ok((down / up).ln() / nu0 as f64);
    }
    // Mixed jump sizes: H(x, .) is convex with H(x, 0) = 0; the other root
    // lies on the side opposite to the sign of dH/dp at 0 = F(x).
    let f0: f64 = ch.iter().map(|&(nu, u, d)| nu as f64 * (u - d)).sum();
    if f0 == 0.0 {
        return Ok(0.0);
    }
    let h = |p: f64| -> Result<f64> { hamiltonian(net, &[x], &[p]) };
    let dir = -f0.signum();
    let (mut near, mut far) = (0.0, dir * 0.125);
    while h(far)? < 0.0 {
        near = far;
        far *= 2.0;
        if far.abs() > EXPONENT_LIMIT {
            return Err(Error::NonConvergence {
                what: "stationary momentum bracket",
                iterations: 0,
                residual: f64::INFINITY,
            });
        }
    }
    // near has H < 0 (or is 0), far has H >= 0; bisect away from the trivial root.
    if near == 0.0 {
        near = far * 1e-9;
        if h(near)? >= 0.0 {
            return Ok(0.0);
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (near + far);
        if h(mid)? < 0.0 {
            near = mid;
        } else {
            far = mid;
        }
        if (far - near).abs() <= 4.0 * f64::EPSILON * mid.abs() {
            break;
        }
    }
    Ok(0.5 * (near + far))
}

fn integrate(net: &(impl RateModel + ?Sized), a: f64, b: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let panels = ((b - a).abs() / PANEL).ceil().max(1.0) as usize;
    let w = (b - a) / panels as f64;
    let mut sum = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        for (z, wt) in GL_NODES.iter().zip(GL_WEIGHTS) {
            sum += wt * stationary_momentum(net, mid + 0.5 * w * z)?;
        }
    }
    Ok(0.5 * w * sum)
}

/// `S(x) = int_{x_eq}^x p(u) du` on an ascending grid.
pub fn quasipotential_1d<M: RateModel + ?Sized>(net: &M, x_eq: f64, grid: &[f64]) -> Result<Quasipotential1D> {
    if net.n_species() != 1 {
        return Err(Error::Unsupported("quasipotential needs a single species".into()));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be strictly ascending".into()));
    }
    let mut s = Vec::with_capacity(grid.len());
    let mut ds = Vec::with_capacity(grid.len());
    if let Some(&g0) = grid.first() {
        let mut acc = integrate(net, x_eq, g0)?;
        s.push(acc);
        ds.push(stationary_momentum(net, g0)?);
        for w in grid.windows(2) {
            acc += integrate(net, w[0], w[1])?;
            s.push(acc);
            ds.push(stationary_momentum(net, w[1])?);
        }
    }
    Ok(Quasipotential1D {
        grid: grid.to_vec(),
        s,
        ds,
        x_eq,
    })
}

#[derive(Debug, Clone)]
pub struct OpOptions {
    pub dt: f64,
    /// Stop once `|x - x_eq|` drops below this distance.
    pub eq_tol: f64,
    /// Longest backward-time horizon before giving up.
    pub horizon: f64,
}

impl Default for OpOptions {
    fn default() -> Self {
        Self {
            dt: 1e-4,
            eq_tol: 1e-6,
            horizon: 200.0,
        }
    }
}

fn op_velocity<M: RateModel + ?Sized>(net: &M, x: f64) -> Result<f64> {
    let p = stationary_momentum(net, x)?;
    Ok(hamiltonian_grad_alpha(net, &[x], &[p])?[0])
}

/// Stationary optimal path ending at `x_t` at time 0, started near `x_eq`.
/// Times are non-positive and ascending; `action` accumulates from the start.
pub fn op_path<M: RateModel + ?Sized>(net: &M, x_t: f64, x_eq: f64, opts: &OpOptions) -> Result<HamiltonianTrajectory> {
    if net.n_species() != 1 {
        return Err(Error::Unsupported("OP integration needs a single species".into()));
    }
    let h = opts.dt;
    let mut xs = vec![x_t];
    let mut x = x_t;
    let mut tau = 0.0;
    while (x - x_eq).abs() >= opts.eq_tol {
        if tau > opts.horizon {
            return Err(Error::NonConvergence {
                what: "OP approach to equilibrium",
                iterations: xs.len(),
                residual: (x - x_eq).abs(),
            });
        }
        let k1 = -op_velocity(net, x)?;
        let k2 = -op_velocity(net, x + 0.5 * h * k1)?;
        let k3 = -op_velocity(net, x + 0.5 * h * k2)?;
        let k4 = -op_velocity(net, x + h * k3)?;
        x += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        tau += h;
        xs.push(x);
    }
    xs.reverse();
    let n = xs.len();
    let times: Vec<f64> = (0..n).map(|k| -((n - 1 - k) as f64) * h).collect();
    let mut alpha = Vec::with_capacity(n);
    let mut action = Vec::with_capacity(n);
    let mut prev_density = 0.0;
    let mut max_h = 0.0f64;
    for (k, &xk) in xs.iter().enumerate() {
        let p = stationary_momentum(net, xk)?;
        let hval = hamiltonian(net, &[xk], &[p])?;
        max_h = max_h.max(hval.abs());
        let density = p * hamiltonian_grad_alpha(net, &[xk], &[p])?[0] - hval;
        action.push(if k == 0 { 0.0 } else { action[k - 1] + 0.5 * h * (prev_density + density) });
        prev_density = density;
        alpha.push(vec![p]);
    }
    if max_h > 1e-8 {
        return Err(Error::NonConvergence {
            what: "OP zero-energy check",
            iterations: n,
            residual: max_h,
        });
    }
    Ok(HamiltonianTrajectory {
        times,
        x: xs.into_iter().map(|v| vec![v]).collect(),
        alpha,
        action,
        dxdq: None,
        dadq: None,
        conjugate_times: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{parse_network, ReactionNetwork};
    use approx::assert_abs_diff_eq;

    fn grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
        (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect()
    }

    #[test]
    fn monostable_quasipotential_closed_form() {
        let net = ReactionNetwork::monostable();
        let g = grid(0.1, 3.0, 290);
        let q = quasipotential_1d(&net, 1.0, &g).unwrap();
        for ((x, s), ds) in g.iter().zip(&q.s).zip(&q.ds) {
            assert_abs_diff_eq!(*s, x * x.ln() - x + 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(*ds, x.ln(), epsilon = 1e-14);
        }
        let s2 = q.value_at(2.0).unwrap();
        assert_abs_diff_eq!(s2, 2.0 * 2f64.ln() - 1.0, epsilon = 1e-9);
        assert_abs_diff_eq!(q.value_at(1.0).unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn stationary_hj_residual_vanishes() {
        for net in [ReactionNetwork::monostable(), ReactionNetwork::bistable()] {
            for x in grid(0.5, 3.5, 60) {
                let p = stationary_momentum(&net, x).unwrap();
                assert!(hamiltonian(&net, &[x], &[p]).unwrap().abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn bistable_quasipotential_shape_against_riemann_sum() {
        let net = ReactionNetwork::bistable();
        let g = grid(0.5, 3.5, 300);
        let q = quasipotential_1d(&net, 1.0, &g).unwrap();
        let f = |u: f64| ((u.powi(3) + 11.0 * u) / (6.0 * u * u + 6.0)).ln();
        // Midpoint Riemann sum with 1e6 panels over [1, x].
        let riemann = |x: f64| {
            let n = 1_000_000;
            let h = (x - 1.0) / n as f64;
            (0..n).map(|k| f(1.0 + (k as f64 + 0.5) * h)).sum::<f64>() * h
        };
        for x in [0.5, 2.0, 3.0, 3.5] {
            assert_abs_diff_eq!(q.value_at(x).unwrap(), riemann(x), epsilon = 1e-9);
        }
        let at = |x: f64| q.value_at(x).unwrap();
        assert!(at(1.0) < at(0.9) && at(1.0) < at(1.1));
        assert!(at(3.0) < at(2.9) && at(3.0) < at(3.1));
        assert!(at(2.0) > at(1.9) && at(2.0) > at(2.1));
    }

    #[test]
    fn mixed_jump_sizes_use_the_nontrivial_root() {
        let net = parse_network("species X\nreaction 0 <=> X @ kf=1, kb=1\nreaction 0 <=> 2 X @ kf=0.5, kb=0.25").unwrap();
        for x in [0.4, 1.0, 2.5] {
            let p = stationary_momentum(&net, x).unwrap();
            assert!(hamiltonian(&net, &[x], &[p]).unwrap().abs() <= 1e-12);
            let f = crate::kinetics::ode_field(&net, &[x])[0];
            assert!(p == 0.0 || p.signum() == -f.signum());
        }
    }

    #[test]
    fn zero_rate_is_reported() {
        let net = ReactionNetwork::bistable();
        assert!(matches!(quasipotential_1d(&net, 1.0, &[0.0, 1.0]), Err(Error::ZeroRate(_))));
    }

    #[test]
    fn monostable_op_closed_form_and_action() {
        let net = ReactionNetwork::monostable();
        let op = op_path(&net, 2.0, 1.0, &OpOptions::default()).unwrap();
        assert_eq!(*op.times.last().unwrap(), 0.0);
        let mut err = 0.0f64;
        for (t, x) in op.times.iter().zip(&op.x) {
            err = err.max((x[0] - (t.exp() + 1.0)).abs());
        }
        assert!(err <= 1e-6, "max error {err}");
        assert_abs_diff_eq!(op.total_action(), 2.0 * 2f64.ln() - 1.0, epsilon = 1e-7);
        let still = op_path(&net, 1.0, 1.0, &OpOptions::default()).unwrap();
        assert_eq!(still.len(), 1);
    }
}
