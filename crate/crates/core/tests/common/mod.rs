//! Independent oracles shared by the integration tests.
#![allow(dead_code)]

use dialect_id::rng::SplitMix64;
use dialect_id::{Loss, SparseMatrix, SparseVector};

/// A tiny dense binary problem.
#[derive(Debug, Clone)]
pub struct Problem {
    pub x: Vec<Vec<f64>>,
    pub y: Vec<i8>,
    pub loss: Loss,
    pub c: f64,
}

impl Problem {
    pub fn matrix(&self) -> SparseMatrix {
        let dim = self.x[0].len();
        SparseMatrix::new(self.x.iter().map(|r| SparseVector::from_dense(r)).collect(), dim).unwrap()
    }

    /// Rows with the constant bias feature appended.
    pub fn augmented(&self, bias: bool) -> Vec<Vec<f64>> {
        self.x
            .iter()
            .map(|r| {
                let mut r = r.clone();
                if bias {
                    r.push(1.0);
                }
                r
            })
            .collect()
    }
}

/// Problem `index` of the seeded oracle family: 2–5 instances, 1–3 features,
/// both classes present, losses and C values cycling.
pub fn oracle_problem(index: u64) -> Problem {
    let mut rng = SplitMix64::new(0x0D1A_1EC7 + index);
    let n = 2 + rng.below(4) as usize;
    let d = 1 + rng.below(3) as usize;
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| 2.0 * rng.next_f64() - 1.0).collect())
        .collect();
    let mut y: Vec<i8> = (0..n).map(|_| if rng.below(2) == 0 { 1 } else { -1 }).collect();
    y[0] = 1;
    y[1] = -1;
    let loss = if index % 2 == 0 { Loss::Hinge } else { Loss::SquaredHinge };
    let c = [0.1, 1.0, 10.0][(index % 3) as usize];
    Problem { x, y, loss, c }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

/// `½‖w‖² + C Σ loss(1 − yᵢ w·x̂ᵢ)` evaluated directly.
pub fn primal(p: &Problem, bias: bool, w: &[f64]) -> f64 {
    let rows = p.augmented(bias);
    let reg = 0.5 * dot(w, w);
    let loss: f64 = rows
        .iter()
        .zip(&p.y)
        .map(|(r, &s)| {
            let slack = (1.0 - f64::from(s) * dot(w, r)).max(0.0);
            match p.loss {
                Loss::Hinge => slack,
                Loss::SquaredHinge => slack * slack,
            }
        })
        .sum();
    reg + p.c * loss
}

/// Gaussian elimination with partial pivoting; `None` when singular.
pub fn solve_linear(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-12 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for row in (0..n).rev() {
        let tail: f64 = (row + 1..n).map(|k| a[row][k] * x[k]).sum();
        x[row] = (b[row] - tail) / a[row][row];
    }
    Some(x)
}

/// Exact primal minimum by enumerating margin patterns.
///
/// Hinge: every instance is beyond, on, or inside the margin (3ⁿ patterns);
/// each pattern gives an equality-constrained quadratic. Squared hinge: every
/// instance is active or not (2ⁿ patterns), each a linear system. The minimum of
/// the true objective over all candidate points is the global minimum.
pub fn exact_primal_minimum(p: &Problem, bias: bool) -> (f64, Vec<f64>) {
    let rows = p.augmented(bias);
    let m = rows[0].len();
    let n = rows.len();
    let z: Vec<Vec<f64>> = rows
        .iter()
        .zip(&p.y)
        .map(|(r, &s)| r.iter().map(|v| v * f64::from(s)).collect())
        .collect();
    let mut best = (f64::INFINITY, vec![0.0; m]);
    let mut consider = |w: Vec<f64>| {
        let f = primal(p, bias, &w);
        if f < best.0 {
            best = (f, w);
        }
    };
    match p.loss {
        Loss::Hinge => {
            for code in 0..3usize.pow(n as u32) {
                let mut digits = code;
                let (mut inside, mut on) = (Vec::new(), Vec::new());
                for i in 0..n {
                    match digits % 3 {
                        1 => on.push(i),
                        2 => inside.push(i),
                        _ => {}
                    }
                    digits /= 3;
                }
                let mut base = vec![0.0; m];
                for &i in &inside {
                    for k in 0..m {
                        base[k] += p.c * z[i][k];
                    }
                }
                let gram: Vec<Vec<f64>> = on.iter().map(|&a| on.iter().map(|&b| dot(&z[a], &z[b])).collect()).collect();
                let rhs: Vec<f64> = on.iter().map(|&a| 1.0 - dot(&z[a], &base)).collect();
                let Some(lambda) = solve_linear(gram, rhs) else { continue };
                let mut w = base;
                for (&j, l) in on.iter().zip(&lambda) {
                    for k in 0..m {
                        w[k] += l * z[j][k];
                    }
                }
                consider(w);
            }
        }
        Loss::SquaredHinge => {
            for mask in 0..1usize << n {
                let active: Vec<usize> = (0..n).filter(|i| mask >> i & 1 == 1).collect();
                let mut a = vec![vec![0.0; m]; m];
                let mut b = vec![0.0; m];
                for r in 0..m {
                    a[r][r] = 1.0;
                }
                for &i in &active {
                    for r in 0..m {
                        b[r] += 2.0 * p.c * z[i][r];
                        for s in 0..m {
                            a[r][s] += 2.0 * p.c * z[i][r] * z[i][s];
                        }
                    }
                }
                if let Some(w) = solve_linear(a, b) {
                    consider(w);
                }
            }
        }
    }
    best
}

/// Count votes, then take the lexicographically smallest most-voted label.
pub fn vote_oracle<'a>(votes: &[&'a str]) -> &'a str {
    let mut best: Option<(&str, usize)> = None;
    for &candidate in votes {
        let count = votes.iter().filter(|&&v| v == candidate).count();
        best = match best {
            None => Some((candidate, count)),
            Some((b, bc)) if count > bc || (count == bc && candidate < b) => Some((candidate, count)),
            keep => keep,
        };
    }
    best.expect("at least one vote").0
}

/// Markers of `label` in `markers.tsv` text.
pub fn markers_for<'a>(markers: &'a str, label: &str) -> Vec<&'a str> {
    markers
        .lines()
        .filter_map(|l| l.split_once('\t'))
        .filter(|(l, _)| *l == label)
        .map(|(_, m)| m)
        .collect()
}
