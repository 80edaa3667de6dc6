//! Exact stoichiometric analysis over the rationals.

use num_integer::Integer;
use num_rational::Ratio;
use num_traits::{One, Zero};

use super::RateModel;

type Q = Ratio<i128>;

/// Column `i` of `gamma` is `nu_i`. Bases are integer vectors with unit gcd.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StoichMatrix {
    /// N x M, row-major.
    pub gamma: Vec<Vec<i64>>,
    pub rank: usize,
    /// Basis of ker(gamma^T): vectors `c` with `c . nu_i = 0` for all `i`.
    pub conservation_basis: Vec<Vec<i64>>,
    /// Basis of the stoichiometric subspace (span of the `nu_i`).
    pub increment_basis: Vec<Vec<i64>>,
}

impl StoichMatrix {
    pub fn n_species(&self) -> usize {
        self.gamma.len()
    }

    /// True when `v` is orthogonal to every conservation law, i.e. lies in
    /// the span of the stoichiometric vectors.
    pub fn in_increment_space(&self, v: &[f64], tol: f64) -> bool {
        let scale = v.iter().fold(1.0f64, |m, x| m.max(x.abs()));
        self.conservation_basis.iter().all(|c| {
            let dot: f64 = c.iter().zip(v).map(|(&a, &b)| a as f64 * b).sum();
            let norm = c.iter().map(|&a| (a * a) as f64).sum::<f64>().sqrt();
            dot.abs() <= tol * scale * norm
        })
    }
}

/// Reduced row echelon form in place; returns pivot columns.
fn rref(m: &mut [Vec<Q>]) -> Vec<usize> {
    let rows = m.len();
    let cols = if rows == 0 { 0 } else { m[0].len() };
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let Some(p) = (r..rows).find(|&i| !m[i][c].is_zero()) else {
            continue;
        };
        m.swap(r, p);
        let inv = Q::one() / m[r][c];
        for v in m[r].iter_mut() {
            *v *= inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c];
                for j in 0..cols {
                    let sub = f * m[r][j];
                    m[i][j] -= sub;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

fn to_primitive_integer(v: &[Q]) -> Vec<i64> {
    let lcm = v.iter().fold(1i128, |acc, q| acc.lcm(q.denom()));
    let ints: Vec<i128> = v.iter().map(|q| q.numer() * (lcm / q.denom())).collect();
    let g = ints.iter().fold(0i128, |acc, &x| acc.gcd(&x)).max(1);
    let mut out: Vec<i64> = ints.iter().map(|&x| (x / g) as i64).collect();
    // first nonzero entry positive
    if out.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
        out.iter_mut().for_each(|x| *x = -*x);
    }
    out
}

/// Rank, conservation laws and increment basis of the stoichiometric matrix.
pub fn stoich_analysis<M: RateModel + ?Sized>(net: &M) -> StoichMatrix {
    let n = net.n_species();
    let m = net.n_reactions();
    let gamma: Vec<Vec<i64>> = (0..n)
        .map(|j| (0..m).map(|i| net.stoich(i)[j]).collect())
        .collect();

    // Null space of gamma^T (M x N) gives the conservation laws.
    let mut gt: Vec<Vec<Q>> = (0..m)
        .map(|i| (0..n).map(|j| Q::from_integer(i128::from(gamma[j][i]))).collect())
        .collect();
    let pivots = rref(&mut gt);
    let rank = pivots.len();
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    let conservation_basis = free
        .iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); n];
            v[f] = Q::one();
            for (row, &p) in pivots.iter().enumerate() {
                v[p] = -gt[row][f];
            }
            to_primitive_integer(&v)
        })
        .collect();

    // Row space of gamma^T = span of the nu_i.
    let increment_basis = gt[..rank]
        .iter()
        .map(|row| to_primitive_integer(row))
        .filter(|v| v.iter().any(|x| !x.is_zero()))
        .collect();

    StoichMatrix {
        gamma,
        rank,
        conservation_basis,
        increment_basis,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::crn::{parse_network, ReactionNetwork};

    #[test]
    fn isomerization_conserves_total() {
        let net = parse_network("species S1, S2\nreaction S1 <=> S2 @ kf=1, kb=2").unwrap();
        let s = stoich_analysis(&net);
        assert_eq!(s.rank, 1);
        assert_eq!(s.conservation_basis, vec![vec![1, 1]]);
        assert_eq!(s.increment_basis, vec![vec![1, -1]]);
        assert!(s.in_increment_space(&[0.3, -0.3], 1e-12));
        assert!(!s.in_increment_space(&[0.3, 0.3], 1e-12));
    }

    #[test]
    fn one_species_examples_have_full_rank() {
        for net in [ReactionNetwork::monostable(), ReactionNetwork::bistable()] {
            let s = stoich_analysis(&net);
            assert_eq!(s.rank, 1);
            assert!(s.conservation_basis.is_empty());
        }
    }

    #[test]
    fn dependent_reactions_lower_rank() {
        let net = parse_network(
            "species A, B, C\n\
             reaction A <=> B @ kf=1, kb=1\n\
             reaction B <=> C @ kf=1, kb=1\n\
             reaction A <=> C @ kf=1, kb=1",
        )
        .unwrap();
        let s = stoich_analysis(&net);
        assert_eq!(s.rank, 2);
        assert_eq!(s.conservation_basis, vec![vec![1, 1, 1]]);
        for c in &s.conservation_basis {
            for i in 0..3 {
                let dot: i64 = (0..3).map(|j| c[j] * s.gamma[j][i]).sum();
                assert_eq!(dot, 0);
            }
        }
    }

    #[test]
    fn rational_pivots_scale_to_integers() {
        let net = parse_network("species X, Y\nreaction 2 X <=> 3 Y @ kf=1, kb=1").unwrap();
        let s = stoich_analysis(&net);
        assert_eq!(s.conservation_basis, vec![vec![3, 2]]);
    }
}
