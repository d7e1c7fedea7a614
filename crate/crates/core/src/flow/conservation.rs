use alloc::string::String;
use alloc::vec::Vec;

use num_rational::Ratio;

use super::StoichiometricMatrix;

type Q = Ratio<i128>;

/// A linear combination `Σ y_s c_s` that no reaction changes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConservationLaw {
    coefficients: Vec<i64>,
}

impl ConservationLaw {
    pub fn coefficients(&self) -> &[i64] {
        &self.coefficients
    }

    pub fn total(&self, c: &[f64]) -> f64 {
        self.coefficients
            .iter()
            .zip(c)
            .map(|(&y, &x)| y as f64 * x)
            .sum()
    }

    pub fn species(&self) -> impl Iterator<Item = usize> + '_ {
        self.coefficients
            .iter()
            .enumerate()
            .filter(|(_, y)| **y != 0)
            .map(|(i, _)| i)
    }

    /// `c_E + c_ES` style rendering against row labels.
    pub fn describe(&self, labels: &[String]) -> String {
        let mut out = String::new();
        for (i, &y) in self.coefficients.iter().enumerate() {
            if y == 0 {
                continue;
            }
            if !out.is_empty() {
                out.push_str(" + ");
            }
            if y != 1 {
                out.push_str(&alloc::format!("{y}·"));
            }
            out.push_str("c_");
            out.push_str(&labels[i]);
        }
        out
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Basis of the left null space of `Ψ` (vectors `y` with `yᵀΨ = 0`),
/// computed in exact rational arithmetic. Only sign-definite basis vectors
/// are returned, scaled to coprime non-negative integers.
pub fn conservation_laws(matrix: &StoichiometricMatrix) -> Vec<ConservationLaw> {
    let n = matrix.nrows();
    let m = matrix.ncols();
    // Rows of Ψᵀ: one equation per column of Ψ.
    let mut a: Vec<Vec<Q>> = (0..m)
        .map(|j| (0..n).map(|i| Q::from_integer(i128::from(matrix.get(i, j)))).collect())
        .collect();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..n {
        let Some(p) = (row..m).find(|&r| a[r][col] != Q::from_integer(0)) else {
            continue;
        };
        a.swap(row, p);
        let inv = a[row][col].recip();
        for x in a[row].iter_mut() {
            *x *= inv;
        }
        for r in 0..m {
            if r != row && a[r][col] != Q::from_integer(0) {
                let f = a[r][col];
                for c in 0..n {
                    let delta = f * a[row][c];
                    a[r][c] -= delta;
                }
            }
        }
        pivots.push(col);
        row += 1;
        if row == m {
            break;
        }
    }
    let mut laws = Vec::new();
    for free in (0..n).filter(|c| !pivots.contains(c)) {
        let mut y = alloc::vec![Q::from_integer(0); n];
        y[free] = Q::from_integer(1);
        for (r, &pc) in pivots.iter().enumerate() {
            y[pc] = -a[r][free];
        }
        let zero = Q::from_integer(0);
        let nonneg = y.iter().all(|v| *v >= zero);
        let nonpos = y.iter().all(|v| *v <= zero);
        if !(nonneg || nonpos) {
            continue;
        }
        let lcm = y
            .iter()
            .fold(1i128, |l, v| l / gcd(l, *v.denom()) * *v.denom());
        let ints: Vec<i128> = y.iter().map(|v| (*v * Q::from_integer(lcm)).to_integer()).collect();
        let g = ints.iter().fold(0, |g, &v| gcd(g, v)).max(1);
        let sign = if nonpos { -1 } else { 1 };
        laws.push(ConservationLaw {
            coefficients: ints.iter().map(|&v| (sign * v / g) as i64).collect(),
        });
    }
    laws
}
