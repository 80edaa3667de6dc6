//! Reaction networks: text format, validated model, stoichiometric analysis
//! and mass-action rate laws.
//!
//! Every downstream algorithm is written against [`RateModel`], so kinetics
//! other than mass action can be plugged in programmatically; the text format
//! only describes mass-action networks.

mod parse;
mod stoich;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub use parse::parse_network;
pub use stoich::{stoich_analysis, StoichMatrix};

/// Source of the single-channel monostable network `A <=> S`.
pub const MONOSTABLE_SRC: &str = "\
# A <=> S with the concentration of A held fixed
species S
const A = 1.0
reaction A <=> S @ kf=1, kb=1
";

/// Source of the bistable network `A + 2S <=> 3S, A <=> S`.
pub const BISTABLE_SRC: &str = "\
# stable equilibria at x = 1 and x = 3, unstable at x = 2
species S
const A = 1.0
reaction A + 2 S <=> 3 S @ kf=6, kb=1
reaction A <=> S @ kf=6, kb=11
";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> i64 {
        match self {
            Direction::Forward => 1,
            Direction::Backward => -1,
        }
    }
}

/// Kinetic description used by every simulator and large-deviation routine.
///
/// `stoich(i)` is the net change `nu_i` of a forward firing of channel `i`;
/// a backward firing changes the state by `-nu_i`.
pub trait RateModel: Send + Sync {
    fn n_species(&self) -> usize;
    fn n_reactions(&self) -> usize;
    fn stoich(&self, reaction: usize) -> &[i64];

    /// Macroscopic rate `R_{+-i}(x)` at concentration `x`.
    fn macro_rate(&self, reaction: usize, dir: Direction, x: &[f64]) -> f64;

    /// Microscopic propensity `r_{+-i}(n, V)` at population `n`.
    fn propensity(&self, reaction: usize, dir: Direction, n: &[i64], volume: f64) -> f64;

    /// Gradient of the macroscopic rate. The default uses central differences.
    fn macro_rate_grad(&self, reaction: usize, dir: Direction, x: &[f64], grad: &mut [f64]) {
        let mut xp = x.to_vec();
        for k in 0..x.len() {
            let h = 1e-6 * x[k].abs().max(1.0);
            xp[k] = x[k] + h;
            let up = self.macro_rate(reaction, dir, &xp);
            xp[k] = x[k] - h;
            let down = self.macro_rate(reaction, dir, &xp);
            xp[k] = x[k];
            grad[k] = (up - down) / (2.0 * h);
        }
    }

    /// Hessian of the macroscopic rate. The default differentiates the gradient.
    fn macro_rate_hessian(&self, reaction: usize, dir: Direction, x: &[f64]) -> DMatrix<f64> {
        let n = x.len();
        let mut hess = DMatrix::zeros(n, n);
        let mut xp = x.to_vec();
        let mut gp = vec![0.0; n];
        let mut gm = vec![0.0; n];
        for k in 0..n {
            let h = 1e-4 * x[k].abs().max(1.0);
            xp[k] = x[k] + h;
            self.macro_rate_grad(reaction, dir, &xp, &mut gp);
            xp[k] = x[k] - h;
            self.macro_rate_grad(reaction, dir, &xp, &mut gm);
            xp[k] = x[k];
            for l in 0..n {
                hess[(l, k)] = (gp[l] - gm[l]) / (2.0 * h);
            }
        }
        (&hess + hess.transpose()) * 0.5
    }
}

/// One reversible mass-action channel. Coefficient vectors are indexed by the
/// network's dynamic species (`reactants`, `products`) and constants
/// (`const_reactants`, `const_products`).
#[derive(Debug, Clone, PartialEq)]
pub struct ReversibleReaction {
    pub reactants: Vec<u32>,
    pub products: Vec<u32>,
    pub const_reactants: Vec<u32>,
    pub const_products: Vec<u32>,
    pub kf: f64,
    pub kb: f64,
    pub const_factor_fwd: f64,
    pub const_factor_bwd: f64,
    stoich: Vec<i64>,
}

impl ReversibleReaction {
    pub fn stoich(&self) -> &[i64] {
        &self.stoich
    }

    fn coeffs(&self, dir: Direction) -> (&[u32], f64, f64) {
        match dir {
            Direction::Forward => (&self.reactants, self.kf, self.const_factor_fwd),
            Direction::Backward => (&self.products, self.kb, self.const_factor_bwd),
        }
    }
}

/// Name-based description of a channel, resolved by [`ReactionNetwork::new`].
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionSpec {
    pub reactants: Vec<(String, u32)>,
    pub products: Vec<(String, u32)>,
    pub kf: f64,
    pub kb: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<String>,
    constants: Vec<(String, f64)>,
    reactions: Vec<ReversibleReaction>,
}

impl ReactionNetwork {
    /// Validates and folds constant species into the rate prefactors.
    pub fn new(
        species: Vec<String>,
        constants: Vec<(String, f64)>,
        reactions: Vec<ReactionSpec>,
    ) -> Result<Self> {
        if species.is_empty() {
            return Err(Error::InvalidNetwork("no dynamic species declared".into()));
        }
        if reactions.is_empty() {
            return Err(Error::InvalidNetwork("no reactions declared".into()));
        }
        let mut seen = std::collections::HashSet::new();
        for name in species.iter().chain(constants.iter().map(|(n, _)| n)) {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidNetwork(format!("duplicate species name `{name}`")));
            }
        }
        for (name, value) in &constants {
            if !(value.is_finite() && *value > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "constant `{name}` must be positive, got {value}"
                )));
            }
        }

        let n = species.len();
        let nc = constants.len();
        let mut resolved = Vec::with_capacity(reactions.len());
        for (idx, spec) in reactions.into_iter().enumerate() {
            if !(spec.kf.is_finite() && spec.kf > 0.0 && spec.kb.is_finite() && spec.kb > 0.0) {
                return Err(Error::InvalidNetwork(format!(
                    "reaction {}: rate constants must be positive (kf={}, kb={})",
                    idx + 1,
                    spec.kf,
                    spec.kb
                )));
            }
            let mut reactants = vec![0u32; n];
            let mut products = vec![0u32; n];
            let mut const_reactants = vec![0u32; nc];
            let mut const_products = vec![0u32; nc];
            for (side, dyn_coeffs, const_coeffs) in [
                (&spec.reactants, &mut reactants, &mut const_reactants),
                (&spec.products, &mut products, &mut const_products),
            ] {
                for (name, coeff) in side {
                    if let Some(j) = species.iter().position(|s| s == name) {
                        dyn_coeffs[j] += coeff;
                    } else if let Some(c) = constants.iter().position(|(s, _)| s == name) {
                        const_coeffs[c] += coeff;
                    } else {
                        return Err(Error::InvalidNetwork(format!("undeclared species `{name}`")));
                    }
                }
            }
            let stoich: Vec<i64> = (0..n)
                .map(|j| i64::from(products[j]) - i64::from(reactants[j]))
                .collect();
            if stoich.iter().all(|&v| v == 0) {
                return Err(Error::InvalidNetwork(format!(
                    "reaction {}: reaction changes no state",
                    idx + 1
                )));
            }
            let fold = |coeffs: &[u32]| {
                coeffs
                    .iter()
                    .zip(&constants)
                    .map(|(&a, (_, value))| value.powi(a as i32))
                    .product::<f64>()
            };
            resolved.push(ReversibleReaction {
                const_factor_fwd: fold(&const_reactants),
                const_factor_bwd: fold(&const_products),
                reactants,
                products,
                const_reactants,
                const_products,
                kf: spec.kf,
                kb: spec.kb,
                stoich,
            });
        }
        Ok(Self {
            species,
            constants,
            reactions: resolved,
        })
    }

    pub fn monostable() -> Self {
        parse_network(MONOSTABLE_SRC).expect("built-in network parses")
    }

    pub fn bistable() -> Self {
        parse_network(BISTABLE_SRC).expect("built-in network parses")
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn constants(&self) -> &[(String, f64)] {
        &self.constants
    }

    pub fn reactions(&self) -> &[ReversibleReaction] {
        &self.reactions
    }

    /// Writes the network back in the line-oriented text format.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("species ");
        out.push_str(&self.species.join(", "));
        out.push('\n');
        for (name, value) in &self.constants {
            out.push_str(&format!("const {name} = {value:?}\n"));
        }
        for r in &self.reactions {
            let side = |dyn_c: &[u32], const_c: &[u32]| {
                let terms: Vec<String> = dyn_c
                    .iter()
                    .zip(&self.species)
                    .chain(const_c.iter().zip(self.constants.iter().map(|(n, _)| n)))
                    .filter(|(&a, _)| a > 0)
                    .map(|(&a, name)| if a == 1 { name.clone() } else { format!("{a} {name}") })
                    .collect();
                if terms.is_empty() {
                    "0".to_string()
                } else {
                    terms.join(" + ")
                }
            };
            out.push_str(&format!(
                "reaction {} <=> {} @ kf={:?}, kb={:?}\n",
                side(&r.reactants, &r.const_reactants),
                side(&r.products, &r.const_products),
                r.kf,
                r.kb
            ));
        }
        out
    }
}

fn falling_factorial_over(n: i64, a: u32, volume: f64) -> f64 {
    if n < i64::from(a) {
        return 0.0;
    }
    let mut acc = 1.0;
    for k in 0..i64::from(a) {
        acc *= (n - k) as f64 / volume;
    }
    acc
}

impl RateModel for ReactionNetwork {
    fn n_species(&self) -> usize {
        self.species.len()
    }

    fn n_reactions(&self) -> usize {
        self.reactions.len()
    }

    fn stoich(&self, reaction: usize) -> &[i64] {
        &self.reactions[reaction].stoich
    }

    fn macro_rate(&self, reaction: usize, dir: Direction, x: &[f64]) -> f64 {
        let (coeffs, k, cf) = self.reactions[reaction].coeffs(dir);
        coeffs
            .iter()
            .zip(x)
            .fold(k * cf, |acc, (&a, &xj)| acc * xj.powi(a as i32))
    }

    fn propensity(&self, reaction: usize, dir: Direction, n: &[i64], volume: f64) -> f64 {
        let (coeffs, k, cf) = self.reactions[reaction].coeffs(dir);
        coeffs
            .iter()
            .zip(n)
            .fold(k * cf * volume, |acc, (&a, &nj)| {
                acc * falling_factorial_over(nj, a, volume)
            })
    }

    fn macro_rate_grad(&self, reaction: usize, dir: Direction, x: &[f64], grad: &mut [f64]) {
        let (coeffs, k, cf) = self.reactions[reaction].coeffs(dir);
        for (m, g) in grad.iter_mut().enumerate() {
            if coeffs[m] == 0 {
                *g = 0.0;
                continue;
            }
            *g = coeffs.iter().zip(x).enumerate().fold(k * cf, |acc, (j, (&a, &xj))| {
                if j == m {
                    acc * f64::from(a) * xj.powi(a as i32 - 1)
                } else {
                    acc * xj.powi(a as i32)
                }
            });
        }
    }

    fn macro_rate_hessian(&self, reaction: usize, dir: Direction, x: &[f64]) -> DMatrix<f64> {
        let (coeffs, k, cf) = self.reactions[reaction].coeffs(dir);
        let n = x.len();
        let mut hess = DMatrix::zeros(n, n);
        for p in 0..n {
            for q in 0..n {
                let mut orders = vec![0u32; n];
                orders[p] += 1;
                orders[q] += 1;
                if orders.iter().zip(coeffs).any(|(&o, &a)| o > a) {
                    continue;
                }
                hess[(p, q)] = coeffs.iter().zip(x).zip(&orders).fold(
                    k * cf,
                    |acc, ((&a, &xj), &o)| {
                        let falling = (0..o).map(|s| f64::from(a - s)).product::<f64>();
                        acc * falling * xj.powi(a as i32 - o as i32)
                    },
                );
            }
        }
        hess
    }
}

/// Propensity with an index check, for callers that take indices from input.
pub fn propensity<M: RateModel + ?Sized>(
    net: &M,
    reaction: usize,
    dir: Direction,
    n: &[i64],
    volume: f64,
) -> Result<f64> {
    if reaction >= net.n_reactions() {
        return Err(Error::IndexOutOfRange {
            what: "reaction",
            index: reaction,
            len: net.n_reactions(),
        });
    }
    if n.len() != net.n_species() {
        return Err(Error::ShapeMismatch(format!(
            "population has {} entries, network has {} species",
            n.len(),
            net.n_species()
        )));
    }
    if n.iter().any(|&v| v < 0) || !(volume > 0.0) {
        return Err(Error::InvalidArgument(
            "populations must be non-negative and the volume positive".into(),
        ));
    }
    Ok(net.propensity(reaction, dir, n, volume))
}

pub fn macroscopic_rate<M: RateModel + ?Sized>(
    net: &M,
    reaction: usize,
    dir: Direction,
    x: &[f64],
) -> Result<f64> {
    if reaction >= net.n_reactions() {
        return Err(Error::IndexOutOfRange {
            what: "reaction",
            index: reaction,
            len: net.n_reactions(),
        });
    }
    Ok(net.macro_rate(reaction, dir, x))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn bistable_backward_propensity_is_falling_factorial() {
        let net = ReactionNetwork::bistable();
        // k_{-1} n(n-1)(n-2) / V^2 at n = 3, V = 1
        assert_eq!(net.propensity(0, Direction::Backward, &[3], 1.0), 6.0);
    }

    #[test]
    fn monostable_forward_propensity_scales_with_volume() {
        let net = ReactionNetwork::monostable();
        for n in [0, 7, 123] {
            assert_eq!(net.propensity(0, Direction::Forward, &[n], 10.0), 10.0);
        }
    }

    #[test]
    fn propensity_vanishes_below_molecularity() {
        let net = ReactionNetwork::bistable();
        assert_eq!(net.propensity(0, Direction::Forward, &[1], 5.0), 0.0);
        assert_eq!(net.propensity(0, Direction::Backward, &[2], 5.0), 0.0);
    }

    #[test]
    fn propensity_checks_index() {
        let net = ReactionNetwork::monostable();
        assert!(matches!(
            propensity(&net, 3, Direction::Forward, &[1], 1.0),
            Err(Error::IndexOutOfRange { index: 3, .. })
        ));
    }

    #[test]
    fn macroscopic_rates_of_the_examples() {
        let mono = ReactionNetwork::monostable();
        assert_eq!(mono.macro_rate(0, Direction::Backward, &[2.0]), 2.0);
        let bi = ReactionNetwork::bistable();
        let back: f64 = (0..2).map(|i| bi.macro_rate(i, Direction::Backward, &[1.0])).sum();
        assert_eq!(back, 12.0);
        assert_eq!(bi.macro_rate(0, Direction::Forward, &[0.0]), 0.0);
    }

    #[test]
    fn analytic_derivatives_match_finite_differences() {
        struct Fd<'a>(&'a ReactionNetwork);
        impl RateModel for Fd<'_> {
            fn n_species(&self) -> usize {
                self.0.n_species()
            }
            fn n_reactions(&self) -> usize {
                self.0.n_reactions()
            }
            fn stoich(&self, r: usize) -> &[i64] {
                self.0.stoich(r)
            }
            fn macro_rate(&self, r: usize, d: Direction, x: &[f64]) -> f64 {
                self.0.macro_rate(r, d, x)
            }
            fn propensity(&self, r: usize, d: Direction, n: &[i64], v: f64) -> f64 {
                self.0.propensity(r, d, n, v)
            }
        }
        let net = parse_network(
            "species X, Y\nreaction 2 X + Y <=> 3 Y @ kf=1.5, kb=0.7\nreaction X <=> 0 @ kf=2, kb=1",
        )
        .unwrap();
        let x = [1.3, 0.8];
        for r in 0..2 {
            for dir in [Direction::Forward, Direction::Backward] {
                let mut g = [0.0; 2];
                let mut gf = [0.0; 2];
                net.macro_rate_grad(r, dir, &x, &mut g);
                Fd(&net).macro_rate_grad(r, dir, &x, &mut gf);
                for k in 0..2 {
                    assert_relative_eq!(g[k], gf[k], epsilon = 1e-7, max_relative = 1e-7);
                }
                let h = net.macro_rate_hessian(r, dir, &x);
                let hf = Fd(&net).macro_rate_hessian(r, dir, &x);
                for k in 0..4 {
                    assert_relative_eq!(h[k], hf[k], epsilon = 1e-5, max_relative = 1e-5);
                }
            }
        }
    }

    #[test]
    fn propensity_approaches_macroscopic_rate() {
        // relative gap shrinks like 1/V for mass action at fixed x > 0
        let net = ReactionNetwork::bistable();
        let x = 1.7;
        let gap = |v: f64| {
            let n = (v * x).floor() as i64;
            let xn = n as f64 / v;
            let micro = net.propensity(0, Direction::Backward, &[n], v) / v;
            let macro_ = net.macro_rate(0, Direction::Backward, &[xn]);
            (micro - macro_).abs() / macro_
        };
        let (g3, g4) = (gap(1e3), gap(1e4));
        let c = g3 * 1e3;
        assert!(g4 <= c / 1e4 * 1.05, "gap at 1e4 = {g4}, C = {c}");
        assert!(g4 < g3);
    }
}
