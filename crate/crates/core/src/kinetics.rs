//! Forward-time dynamics: the deterministic limit, exact SSA, Euler
//! tau-leaping, the chemical Langevin equation and the linear-noise
//! covariance.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};

use crate::crn::{Direction, RateModel};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryDiagnostics {
    /// Time at which a tau-leap step produced a negative population.
    pub absorbed_at: Option<f64>,
    /// Number of CLE steps where a rate was truncated at zero under the root.
    pub truncations: usize,
}

/// Time series of concentration vectors. `volume` is `None` for the ODE limit;
/// jump simulators also keep the integer populations in `counts`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub volume: Option<f64>,
    pub counts: Option<Vec<Vec<i64>>>,
    pub diagnostics: TrajectoryDiagnostics,
}

impl Trajectory {
    pub(crate) fn new(volume: Option<f64>, jump: bool) -> Self {
        Self {
            times: Vec::new(),
            states: Vec::new(),
            volume,
            counts: jump.then(Vec::new),
            diagnostics: TrajectoryDiagnostics::default(),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Right-continuous piecewise-constant value at `t` (the state of a jump
    /// path). Times before the start return the first state.
    pub fn state_at(&self, t: f64) -> &[f64] {
        let k = self.times.partition_point(|&s| s <= t);
        &self.states[k.saturating_sub(1)]
    }

    /// Linear interpolation between samples, clamped at the ends.
    pub fn interpolate(&self, t: f64) -> Vec<f64> {
        let k = self.times.partition_point(|&s| s <= t);
        if k == 0 {
            return self.states[0].clone();
        }
        if k >= self.times.len() {
            return self.states[self.times.len() - 1].clone();
        }
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = if t1 > t0 { (t - t0) / (t1 - t0) } else { 0.0 };
        self.states[k - 1]
            .iter()
            .zip(&self.states[k])
            .map(|(a, b)| a + w * (b - a))
            .collect()
    }

    /// Sup over time of `|x_component(t) - reference(t)|` for a jump path,
    /// checking both ends of every constant segment up to `t_end`.
    pub fn sup_deviation(&self, component: usize, t_end: f64, reference: impl Fn(f64) -> f64) -> f64 {
        let mut sup = 0.0f64;
        for k in 0..self.times.len() {
            let t0 = self.times[k];
            if t0 > t_end {
                break;
            }
            let t1 = self.times.get(k + 1).copied().unwrap_or(t_end).min(t_end);
            let x = self.states[k][component];
            sup = sup.max((x - reference(t0)).abs()).max((x - reference(t1)).abs());
        }
        sup
    }

    pub(crate) fn push(&mut self, t: f64, x: Vec<f64>) {
        self.times.push(t);
        self.states.push(x);
    }

    pub(crate) fn push_jump(&mut self, t: f64, n: &[i64], volume: f64) {
        self.times.push(t);
        self.states.push(n.iter().map(|&v| v as f64 / volume).collect());
        if let Some(c) = self.counts.as_mut() {
            c.push(n.to_vec());
        }
    }
}

/// Drift `F(x) = sum_i nu_i (R_+i(x) - R_-i(x))`.
pub fn ode_field<M: RateModel + ?Sized>(net: &M, x: &[f64]) -> Vec<f64> {
    let mut f = vec![0.0; net.n_species()];
    for i in 0..net.n_reactions() {
        let flux = net.macro_rate(i, Direction::Forward, x) - net.macro_rate(i, Direction::Backward, x);
        for (fk, &nu) in f.iter_mut().zip(net.stoich(i)) {
            *fk += nu as f64 * flux;
        }
    }
    f
}

/// Jacobian `dF_k / dx_l`.
pub fn ode_jacobian<M: RateModel + ?Sized>(net: &M, x: &[f64]) -> DMatrix<f64> {
    let n = net.n_species();
    let mut jac = DMatrix::zeros(n, n);
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    for i in 0..net.n_reactions() {
        net.macro_rate_grad(i, Direction::Forward, x, &mut gp);
        net.macro_rate_grad(i, Direction::Backward, x, &mut gm);
        for (k, &nu) in net.stoich(i).iter().enumerate() {
            for l in 0..n {
                jac[(k, l)] += nu as f64 * (gp[l] - gm[l]);
            }
        }
    }
    jac
}

/// Forward diffusion matrix `sum_i nu_i nu_i^T (R_+i + R_-i)`.
pub fn diffusion_matrix<M: RateModel + ?Sized>(net: &M, x: &[f64]) -> DMatrix<f64> {
    let n = net.n_species();
    let mut b = DMatrix::zeros(n, n);
    for i in 0..net.n_reactions() {
        let s = net.macro_rate(i, Direction::Forward, x) + net.macro_rate(i, Direction::Backward, x);
        let nu = net.stoich(i);
        for k in 0..n {
            for l in 0..n {
                b[(k, l)] += (nu[k] * nu[l]) as f64 * s;
            }
        }
    }
    b
}

fn rk4_step<M: RateModel + ?Sized>(net: &M, x: &[f64], h: f64) -> Vec<f64> {
    let add = |a: &[f64], b: &[f64], s: f64| a.iter().zip(b).map(|(p, q)| p + s * q).collect::<Vec<_>>();
    let k1 = ode_field(net, x);
    let k2 = ode_field(net, &add(x, &k1, h / 2.0));
    let k3 = ode_field(net, &add(x, &k2, h / 2.0));
    let k4 = ode_field(net, &add(x, &k3, h));
    (0..x.len())
        .map(|j| x[j] + h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
        .collect()
}

/// Number of steps of size about `dt` covering `[0, t_end]`, tolerant of
/// rounding in `t_end / dt`.
pub(crate) fn step_count(t_end: f64, dt: f64) -> usize {
    let r = t_end / dt;
    if (r - r.round()).abs() < 1e-9 * r.max(1.0) {
        r.round() as usize
    } else {
        r.ceil() as usize
    }
}

/// Fixed-step RK4 solution of `x' = F(x)`, sampled every `dt` (the last step
/// is shortened to land on `t_end`).
pub fn ode_solve<M: RateModel + ?Sized>(net: &M, x0: &[f64], t_end: f64, dt: f64) -> Result<Trajectory> {
    check_state(net, x0)?;
    if !(dt > 0.0) || !(t_end >= 0.0) {
        return Err(Error::InvalidArgument("need dt > 0 and t_end >= 0".into()));
    }
    let n = step_count(t_end, dt);
    let mut traj = Trajectory::new(None, false);
    let mut x = x0.to_vec();
    traj.push(0.0, x.clone());
    for k in 0..n {
        let t0 = k as f64 * dt;
        let t1 = if k + 1 == n { t_end } else { (k + 1) as f64 * dt };
        x = rk4_step(net, &x, t1 - t0);
        if x.iter().any(|&v| v < 0.0 || !v.is_finite()) {
            return Err(Error::NegativeState { t: t1 });
        }
        traj.push(t1, x.clone());
    }
    Ok(traj)
}

fn check_state<M: RateModel + ?Sized>(net: &M, x0: &[f64]) -> Result<()> {
    if x0.len() != net.n_species() {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} entries, network has {} species",
            x0.len(),
            net.n_species()
        )));
    }
    if x0.iter().any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidArgument("initial state must be non-negative".into()));
    }
    Ok(())
}

fn to_counts(x0: &[f64], volume: f64) -> Result<Vec<i64>> {
    if !(volume > 0.0 && volume.is_finite()) {
        return Err(Error::InvalidArgument(format!("volume must be positive, got {volume}")));
    }
    x0.iter()
        .map(|&x| {
            let n = x * volume;
            let r = n.round();
            if (n - r).abs() > 1e-9 * r.abs().max(1.0) {
                Err(Error::InvalidArgument(format!("V*x0 = {n} is not an integer")))
            } else {
                Ok(r as i64)
            }
        })
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct SsaOptions {
    /// Abort when the Euclidean norm of the concentration exceeds this bound.
    /// Defaults to `10 |x0| + 10`.
    pub blowup_bound: Option<f64>,
    /// Record the state on a regular grid instead of at every jump.
    pub sample_interval: Option<f64>,
}

/// Gillespie direct-method sample path from `x0` (concentrations) on `[0, t_end]`.
pub fn ssa_simulate<M: RateModel + ?Sized>(
    net: &M,
    x0: &[f64],
    volume: f64,
    t_end: f64,
    seed: u64,
) -> Result<Trajectory> {
    ssa_simulate_with(net, x0, volume, t_end, &mut crate::rng::stream(seed, 0), &SsaOptions::default())
}

pub fn ssa_simulate_with<M: RateModel + ?Sized, R: Rng + ?Sized>(
    net: &M,
    x0: &[f64],
    volume: f64,
    t_end: f64,
    rng: &mut R,
    opts: &SsaOptions,
) -> Result<Trajectory> {
    check_state(net, x0)?;
    let mut n = to_counts(x0, volume)?;
    let norm0 = x0.iter().map(|v| v * v).sum::<f64>().sqrt();
    let bound = opts.blowup_bound.unwrap_or(10.0 * norm0 + 10.0);
    let m = net.n_reactions();
    let mut rates = vec![0.0; 2 * m];
    let mut traj = Trajectory::new(Some(volume), true);
    let mut t = 0.0;
    let mut next_sample = 0.0;
    let mut sample_idx = 0usize;

    let mut record = |traj: &mut Trajectory, t_now: f64, n: &[i64], upto: f64| match opts.sample_interval {
        None => traj.push_jump(t_now, n, volume),
        Some(h) => {
            while next_sample <= upto + 1e-12 * upto.abs().max(1.0) && next_sample <= t_end {
                traj.push_jump(next_sample, n, volume);
                sample_idx += 1;
                next_sample = sample_idx as f64 * h;
            }
        }
    };

    if opts.sample_interval.is_none() {
        record(&mut traj, 0.0, &n, 0.0);
    }
    loop {
        let mut total = 0.0;
        for i in 0..m {
            rates[2 * i] = net.propensity(i, Direction::Forward, &n, volume);
            rates[2 * i + 1] = net.propensity(i, Direction::Backward, &n, volume);
            total += rates[2 * i] + rates[2 * i + 1];
        }
        if !total.is_finite() {
            return Err(Error::RateOverflow { t });
        }
        let wait = if total > 0.0 {
            let e: f64 = Exp1.sample(rng);
            e / total
        } else {
            f64::INFINITY
        };
        if t + wait >= t_end {
            match opts.sample_interval {
                None => traj.push_jump(t_end, &n, volume),
                Some(_) => record(&mut traj, t_end, &n, t_end),
            }
            return Ok(traj);
        }
        // state n holds on [t, t + wait)
        if opts.sample_interval.is_some() {
            let upto = (t + wait) * (1.0 - 1e-15);
            record(&mut traj, t, &n, upto);
        }
        t += wait;
        let target = rng.random::<f64>() * total;
        let mut acc = 0.0;
        let mut chosen = 2 * m - 1;
        for (c, &r) in rates.iter().enumerate() {
            acc += r;
            if target < acc {
                chosen = c;
                break;
            }
        }
        while rates[chosen] == 0.0 {
            chosen -= 1;
        }
        let sign = if chosen.is_multiple_of(2) { 1 } else { -1 };
        for (nk, &nu) in n.iter_mut().zip(net.stoich(chosen / 2)) {
            *nk += sign * nu;
        }
        let norm = n.iter().map(|&v| (v as f64 / volume).powi(2)).sum::<f64>().sqrt();
        if norm > bound {
            return Err(Error::BlowUp { t, bound });
        }
        if opts.sample_interval.is_none() {
            traj.push_jump(t, &n, volume);
        }
    }
}

fn poisson<R: Rng + ?Sized>(mean: f64, rng: &mut R) -> i64 {
    if mean <= 0.0 {
        0
    } else {
        Poisson::new(mean).expect("positive finite mean").sample(rng) as i64
    }
}

/// Euler tau-leaping with fixed step `dt`. A step that would make a
/// population negative ends the path and sets `diagnostics.absorbed_at`.
pub fn tau_leap_simulate<M: RateModel + ?Sized>(
    net: &M,
    x0: &[f64],
    volume: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<Trajectory> {
    tau_leap_simulate_with(net, x0, volume, t_end, dt, &mut crate::rng::stream(seed, 0))
}

pub fn tau_leap_simulate_with<M: RateModel + ?Sized, R: Rng + ?Sized>(
    net: &M,
    x0: &[f64],
    volume: f64,
    t_end: f64,
    dt: f64,
    rng: &mut R,
) -> Result<Trajectory> {
    check_state(net, x0)?;
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument("dt must be positive".into()));
    }
    let mut n = to_counts(x0, volume)?;
    let steps = step_count(t_end, dt);
    let mut traj = Trajectory::new(Some(volume), true);
    traj.push_jump(0.0, &n, volume);
    let mut next = n.clone();
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = if k + 1 == steps { t_end } else { (k + 1) as f64 * dt };
        let h = t1 - t0;
        next.copy_from_slice(&n);
        for i in 0..net.n_reactions() {
            let fwd = poisson(net.propensity(i, Direction::Forward, &n, volume) * h, rng);
            let bwd = poisson(net.propensity(i, Direction::Backward, &n, volume) * h, rng);
            for (nk, &nu) in next.iter_mut().zip(net.stoich(i)) {
                *nk += nu * (fwd - bwd);
            }
        }
        if next.iter().any(|&v| v < 0) {
            traj.diagnostics.absorbed_at = Some(t1);
            return Ok(traj);
        }
        std::mem::swap(&mut n, &mut next);
        traj.push_jump(t1, &n, volume);
    }
    Ok(traj)
}

/// Euler-Maruyama for the chemical Langevin equation. `volume = inf` gives
/// plain Euler stepping of the ODE. States are recorded every `record_every`
/// steps (and at `t_end`).
pub fn cle_simulate<M: RateModel + ?Sized>(
    net: &M,
    x0: &[f64],
    volume: f64,
    t_end: f64,
    dt: f64,
    seed: u64,
) -> Result<Trajectory> {
    cle_simulate_with(net, x0, volume, t_end, dt, 1, &mut crate::rng::stream(seed, 0))
}

pub fn cle_simulate_with<M: RateModel + ?Sized, R: Rng + ?Sized>(
    net: &M,
    x0: &[f64],
    volume: f64,
    t_end: f64,
    dt: f64,
    record_every: usize,
    rng: &mut R,
) -> Result<Trajectory> {
    check_state(net, x0)?;
    if !(dt > 0.0) || !(volume > 0.0) || record_every == 0 {
        return Err(Error::InvalidArgument("need dt > 0, V > 0 and record_every >= 1".into()));
    }
    let noise = volume.recip().sqrt();
    let steps = step_count(t_end, dt);
    let mut traj = Trajectory::new(volume.is_finite().then_some(volume), false);
    let mut x = x0.to_vec();
    traj.push(0.0, x.clone());
    for k in 0..steps {
        let t0 = k as f64 * dt;
        let t1 = if k + 1 == steps { t_end } else { (k + 1) as f64 * dt };
        let h = t1 - t0;
        let sq = h.sqrt();
        let mut dx = vec![0.0; x.len()];
        let mut truncated = false;
        for i in 0..net.n_reactions() {
            let rp = net.macro_rate(i, Direction::Forward, &x);
            let rm = net.macro_rate(i, Direction::Backward, &x);
            let mut inc = (rp - rm) * h;
            if noise > 0.0 {
                truncated |= rp < 0.0 || rm < 0.0;
                let wp: f64 = rng.sample(StandardNormal);
                let wm: f64 = rng.sample(StandardNormal);
                inc += noise * sq * (rp.max(0.0).sqrt() * wp - rm.max(0.0).sqrt() * wm);
            }
            for (d, &nu) in dx.iter_mut().zip(net.stoich(i)) {
                *d += nu as f64 * inc;
            }
        }
        if truncated {
            traj.diagnostics.truncations += 1;
        }
        for (xk, d) in x.iter_mut().zip(&dx) {
            *xk += d;
        }
        if (k + 1) % record_every == 0 || k + 1 == steps {
            traj.push(t1, x.clone());
        }
    }
    Ok(traj)
}

/// Linear-noise covariance `Sigma(t)` of the fluctuation `sqrt(V)(x_V - x_inf)`
/// at each time in `t_grid` (ascending, starting at or after 0), from
/// `Sigma' = A Sigma + Sigma A^T + B` with `Sigma(0) = 0` along the ODE path.
pub fn forward_clt_cov<M: RateModel + ?Sized>(net: &M, x0: &[f64], t_grid: &[f64]) -> Result<Vec<DMatrix<f64>>> {
    check_state(net, x0)?;
    if t_grid.windows(2).any(|w| w[1] < w[0]) || t_grid.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidArgument("time grid must be ascending and non-negative".into()));
    }
    let n = net.n_species();
    let rhs = |x: &[f64], s: &DMatrix<f64>| -> (Vec<f64>, DMatrix<f64>) {
        let a = ode_jacobian(net, x);
        let b = diffusion_matrix(net, x);
        (ode_field(net, x), &a * s + s * a.transpose() + b)
    };
    let mut x = x0.to_vec();
    let mut sigma = DMatrix::zeros(n, n);
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    const H_MAX: f64 = 1e-3;
    for &target in t_grid {
        let span = target - t;
        let sub = (span / H_MAX).ceil().max(0.0) as usize;
        for _ in 0..sub {
            let h = span / sub as f64;
            let axpy = |x: &[f64], k: &[f64], s: f64| x.iter().zip(k).map(|(a, b)| a + s * b).collect::<Vec<_>>();
            let (k1x, k1s) = rhs(&x, &sigma);
            let (k2x, k2s) = rhs(&axpy(&x, &k1x, h / 2.0), &(&sigma + &k1s * (h / 2.0)));
            let (k3x, k3s) = rhs(&axpy(&x, &k2x, h / 2.0), &(&sigma + &k2s * (h / 2.0)));
            let (k4x, k4s) = rhs(&axpy(&x, &k3x, h), &(&sigma + &k3s * h));
            for j in 0..n {
                x[j] += h / 6.0 * (k1x[j] + 2.0 * k2x[j] + 2.0 * k3x[j] + k4x[j]);
            }
            sigma += (k1s + k2s * 2.0 + k3s * 2.0 + k4s) * (h / 6.0);
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::BlowUp { t, bound: f64::INFINITY });
            }
        }
        t = target;
        sigma = (&sigma + sigma.transpose()) * 0.5;
        out.push(sigma.clone());
    }
    Ok(out)
}
