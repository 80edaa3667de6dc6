//! Large-deviation machinery: the Hamiltonian `H(x, alpha)`, its Legendre
//! dual, Hamilton's equations with variational sensitivities, the NOP
//! shooting solver, the one-dimensional quasipotential and the OP.

mod flow;
mod quasi;
mod shoot;

use nalgebra::{DMatrix, DVector};

use crate::crn::{stoich_analysis, Direction, RateModel};
use crate::error::{Error, Result};

pub use flow::{hamilton_flow, HamiltonianTrajectory};
pub(crate) use flow::interp as interp_samples;
pub use quasi::{op_path, quasipotential_1d, stationary_momentum, OpOptions, Quasipotential1D};
pub use shoot::{hitting_time, nop_action, nop_tail_action, shoot_nop, shoot_nop_with, ShootOptions};

/// Largest `|nu . alpha|` accepted before `exp` is considered to overflow.
pub const EXPONENT_LIMIT: f64 = 700.0;

fn dot(nu: &[i64], a: &[f64]) -> f64 {
    nu.iter().zip(a).map(|(&n, &v)| n as f64 * v).sum()
}

/// `(e^{nu_i . alpha}, e^{-nu_i . alpha})` per channel.
fn exponentials<M: RateModel + ?Sized>(net: &M, alpha: &[f64]) -> Result<Vec<(f64, f64)>> {
    (0..net.n_reactions())
        .map(|i| {
            let s = dot(net.stoich(i), alpha);
            if s.abs() > EXPONENT_LIMIT {
                Err(Error::Overflow { exponent: s.abs() })
            } else {
                let e = s.exp();
                Ok((e, 1.0 / e))
            }
        })
        .collect()
}

pub fn hamiltonian<M: RateModel + ?Sized>(net: &M, x: &[f64], alpha: &[f64]) -> Result<f64> {
    let ex = exponentials(net, alpha)?;
    Ok(ex
        .iter()
        .enumerate()
        .map(|(i, &(ep, em))| {
            net.macro_rate(i, Direction::Forward, x) * (ep - 1.0)
                + net.macro_rate(i, Direction::Backward, x) * (em - 1.0)
        })
        .sum())
}

/// `dH/dalpha = sum_i nu_i (R_+i e^{nu.a} - R_-i e^{-nu.a})`, the velocity of
/// Hamilton's equations.
pub fn hamiltonian_grad_alpha<M: RateModel + ?Sized>(net: &M, x: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
    let ex = exponentials(net, alpha)?;
    let mut g = vec![0.0; net.n_species()];
    for (i, &(ep, em)) in ex.iter().enumerate() {
        let w = net.macro_rate(i, Direction::Forward, x) * ep - net.macro_rate(i, Direction::Backward, x) * em;
        for (gk, &nu) in g.iter_mut().zip(net.stoich(i)) {
            *gk += nu as f64 * w;
        }
    }
    Ok(g)
}

pub fn hamiltonian_grad_x<M: RateModel + ?Sized>(net: &M, x: &[f64], alpha: &[f64]) -> Result<Vec<f64>> {
    let ex = exponentials(net, alpha)?;
    let n = net.n_species();
    let mut g = vec![0.0; n];
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    for (i, &(ep, em)) in ex.iter().enumerate() {
        net.macro_rate_grad(i, Direction::Forward, x, &mut gp);
        net.macro_rate_grad(i, Direction::Backward, x, &mut gm);
        for k in 0..n {
            g[k] += gp[k] * (ep - 1.0) + gm[k] * (em - 1.0);
        }
    }
    Ok(g)
}

/// Second derivatives of `H`: `(H_aa, H_ax, H_xx)` with
/// `H_ax[(k, l)] = d^2 H / d alpha_k d x_l`.
pub fn hamiltonian_hessians<M: RateModel + ?Sized>(
    net: &M,
    x: &[f64],
    alpha: &[f64],
) -> Result<(DMatrix<f64>, DMatrix<f64>, DMatrix<f64>)> {
    let ex = exponentials(net, alpha)?;
    let n = net.n_species();
    let mut haa = DMatrix::zeros(n, n);
    let mut hax = DMatrix::zeros(n, n);
    let mut hxx = DMatrix::zeros(n, n);
    let mut gp = vec![0.0; n];
    let mut gm = vec![0.0; n];
    for (i, &(ep, em)) in ex.iter().enumerate() {
        let nu = net.stoich(i);
        let rp = net.macro_rate(i, Direction::Forward, x);
        let rm = net.macro_rate(i, Direction::Backward, x);
        net.macro_rate_grad(i, Direction::Forward, x, &mut gp);
        net.macro_rate_grad(i, Direction::Backward, x, &mut gm);
        let s = rp * ep + rm * em;
        for k in 0..n {
            for l in 0..n {
                haa[(k, l)] += (nu[k] * nu[l]) as f64 * s;
                hax[(k, l)] += nu[k] as f64 * (gp[l] * ep - gm[l] * em);
            }
        }
        hxx += net.macro_rate_hessian(i, Direction::Forward, x) * (ep - 1.0)
            + net.macro_rate_hessian(i, Direction::Backward, x) * (em - 1.0);
    }
    Ok((haa, hax, hxx))
}

/// Legendre transform `L(x, beta) = sup_alpha (alpha . beta - H(x, alpha))`.
/// Returns `f64::INFINITY` when `beta` is outside the increment space or not
/// attainable as a velocity at `x`.
pub fn lagrangian<M: RateModel + ?Sized>(net: &M, x: &[f64], beta: &[f64]) -> Result<f64> {
    if beta.len() != net.n_species() || x.len() != net.n_species() {
        return Err(Error::ShapeMismatch("x and beta must have one entry per species".into()));
    }
    let stoich = stoich_analysis(net);
    if !stoich.in_increment_space(beta, 1e-12) {
        return Ok(f64::INFINITY);
    }
    if net.n_species() == 1 {
        lagrangian_scalar(net, x, beta[0])
    } else {
        lagrangian_newton(net, x, beta, &stoich.increment_basis)
    }
}

fn lagrangian_scalar<M: RateModel + ?Sized>(net: &M, x: &[f64], beta: f64) -> Result<f64> {
    let nu_max = (0..net.n_reactions())
        .map(|i| net.stoich(i)[0].unsigned_abs())
        .max()
        .unwrap_or(1) as f64;
    let a_lim = EXPONENT_LIMIT / nu_max;
    let g = |a: f64| -> Result<f64> { Ok(hamiltonian_grad_alpha(net, x, &[a])?[0] - beta) };

    // Bracket the root of the increasing map alpha -> dH/dalpha - beta.
    let (mut lo, mut hi) = (-1.0, 1.0);
    while g(lo)? > 0.0 {
        hi = lo;
        lo *= 2.0;
        if lo < -a_lim {
            return Ok(f64::INFINITY);
        }
    }
    while g(hi)? < 0.0 {
        lo = hi;
        hi *= 2.0;
        if hi > a_lim {
            return Ok(f64::INFINITY);
        }
    }
    let mut a = 0.5 * (lo + hi);
    let mut residual = f64::INFINITY;
    for _ in 0..100 {
        let r = g(a)?;
        residual = r.abs();
        if residual <= 1e-14 * beta.abs().max(1.0) {
            return Ok(a * beta - hamiltonian(net, x, &[a])?);
        }
        if r > 0.0 {
            hi = a;
        } else {
            lo = a;
        }
        let (haa, _, _) = hamiltonian_hessians(net, x, &[a])?;
        let newton = a - r / haa[(0, 0)];
        a = if newton > lo && newton < hi && haa[(0, 0)] > 0.0 {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if hi - lo <= 4.0 * f64::EPSILON * a.abs().max(1.0) {
            return Ok(a * beta - hamiltonian(net, x, &[a])?);
        }
    }
    Err(Error::NonConvergence {
        what: "Legendre transform",
        iterations: 100,
        residual,
    })
}

/// Damped Newton for the concave dual objective restricted to the increment
/// space, `alpha = E c` with `E` the increment basis.
fn lagrangian_newton<M: RateModel + ?Sized>(
    net: &M,
    x: &[f64],
    beta: &[f64],
    basis: &[Vec<i64>],
) -> Result<f64> {
    let n = net.n_species();
    let r = basis.len();
    let e = DMatrix::from_fn(n, r, |k, j| basis[j][k] as f64);
    let b = DVector::from_column_slice(beta);
    let objective = |c: &DVector<f64>| -> Result<f64> {
        let a = &e * c;
        Ok(a.dot(&b) - hamiltonian(net, x, a.as_slice())?)
    };
    let mut c = DVector::zeros(r);
    let mut f = objective(&c)?;
    let mut residual = f64::INFINITY;
    for _ in 0..100 {
        let a = &e * &c;
        let grad_h = DVector::from_vec(hamiltonian_grad_alpha(net, x, a.as_slice())?);
        let grad = e.transpose() * (&b - grad_h);
        residual = grad.norm();
        if residual <= 1e-12 * b.norm().max(1.0) {
            return Ok(f);
        }
        let (haa, _, _) = hamiltonian_hessians(net, x, a.as_slice())?;
        let hess = e.transpose() * haa * &e;
        let Some(step) = hess.clone().cholesky().map(|ch| ch.solve(&grad)) else {
            return Ok(f64::INFINITY);
        };
        let mut t = 1.0;
        loop {
            let trial = &c + &step * t;
            match objective(&trial) {
                Ok(ft) if ft >= f - 1e-15 * f.abs() => {
                    c = trial;
                    f = ft;
                    break;
                }
                _ => {
                    t *= 0.5;
                    if t < 1e-12 {
                        return Ok(f64::INFINITY);
                    }
                }
            }
        }
    }
    Err(Error::NonConvergence {
        what: "Legendre transform",
        iterations: 100,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{parse_network, ReactionNetwork};
    use crate::kinetics::ode_field;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    #[test]
    fn hamiltonian_values() {
        let mono = ReactionNetwork::monostable();
        assert_eq!(hamiltonian(&mono, &[1.7], &[0.0]).unwrap(), 0.0);
        let e = std::f64::consts::E;
        assert_abs_diff_eq!(hamiltonian(&mono, &[1.0], &[1.0]).unwrap(), (e - 1.0) + (1.0 / e - 1.0), epsilon = 1e-15);
        assert_abs_diff_eq!(hamiltonian(&mono, &[2.0], &[2f64.ln()]).unwrap(), 0.0, epsilon = 1e-15);
        assert!(matches!(hamiltonian(&mono, &[1.0], &[701.0]), Err(Error::Overflow { .. })));
    }

    #[test]
    fn lagrangian_vanishes_on_the_drift() {
        let bi = ReactionNetwork::bistable();
        for x in [0.5, 1.5, 2.7] {
            let f = ode_field(&bi, &[x]);
            assert_abs_diff_eq!(lagrangian(&bi, &[x], &f).unwrap(), 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn lagrangian_inverts_sinh() {
        let mono = ReactionNetwork::monostable();
        let beta = 2.0 * 1f64.sinh();
        let e = std::f64::consts::E;
        let expect = beta - (e - 1.0) - (1.0 / e - 1.0);
        assert_abs_diff_eq!(lagrangian(&mono, &[1.0], &[beta]).unwrap(), expect, epsilon = 1e-12);
        assert_abs_diff_eq!(expect, 1.264241, epsilon = 1e-6);
    }

    #[test]
    fn lagrangian_is_infinite_off_the_increment_space() {
        let net = parse_network("species A, B\nreaction A <=> B @ kf=1, kb=1").unwrap();
        assert_eq!(lagrangian(&net, &[1.0, 1.0], &[0.3, 0.3]).unwrap(), f64::INFINITY);
        assert!(lagrangian(&net, &[1.0, 1.0], &[0.3, -0.3]).unwrap().is_finite());
    }

    #[test]
    fn multispecies_legendre_duality() {
        let net = parse_network(
            "species A, B\nreaction A <=> B @ kf=2, kb=1\nreaction 0 <=> A @ kf=1, kb=0.5",
        )
        .unwrap();
        let x = [0.8, 1.3];
        let alpha = [0.4, -0.2];
        let beta = hamiltonian_grad_alpha(&net, &x, &alpha).unwrap();
        let l = lagrangian(&net, &x, &beta).unwrap();
        let h = hamiltonian(&net, &x, &alpha).unwrap();
        let ab: f64 = alpha.iter().zip(&beta).map(|(a, b)| a * b).sum();
        assert_abs_diff_eq!(l + h, ab, epsilon = 1e-10);
    }

    #[test]
    fn hessians_match_finite_differences() {
        let net = ReactionNetwork::bistable();
        let (x, a) = (1.4, 0.3);
        let (haa, hax, hxx) = hamiltonian_hessians(&net, &[x], &[a]).unwrap();
        let h = 1e-5;
        let ga = |x: f64, a: f64| hamiltonian_grad_alpha(&net, &[x], &[a]).unwrap()[0];
        let gx = |x: f64, a: f64| hamiltonian_grad_x(&net, &[x], &[a]).unwrap()[0];
        assert_abs_diff_eq!(haa[(0, 0)], (ga(x, a + h) - ga(x, a - h)) / (2.0 * h), epsilon = 1e-6);
        assert_abs_diff_eq!(hax[(0, 0)], (ga(x + h, a) - ga(x - h, a)) / (2.0 * h), epsilon = 1e-6);
        assert_abs_diff_eq!(hxx[(0, 0)], (gx(x + h, a) - gx(x - h, a)) / (2.0 * h), epsilon = 1e-6);
    }

    proptest! {
        #[test]
        fn legendre_duality_scalar(x in 0.2f64..4.0, alpha in -3.0f64..3.0) {
            for net in [ReactionNetwork::monostable(), ReactionNetwork::bistable()] {
                let beta = hamiltonian_grad_alpha(&net, &[x], &[alpha]).unwrap()[0];
                let l = lagrangian(&net, &[x], &[beta]).unwrap();
                let h = hamiltonian(&net, &[x], &[alpha]).unwrap();
                prop_assert!((l + h - alpha * beta).abs() <= 1e-8 * (1.0 + (alpha * beta).abs()));
            }
        }

        #[test]
        fn lagrangian_is_nonnegative(x in 0.2f64..4.0, beta in -20.0f64..20.0) {
            let net = ReactionNetwork::bistable();
            prop_assert!(lagrangian(&net, &[x], &[beta]).unwrap() >= -1e-12);
        }
    }
}
