//! Brute-force LP oracle shared by the integration tests.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// Solves `A x = b` by Gaussian elimination with partial pivoting.
pub fn solve_square(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let p = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[p][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, p);
        b.swap(col, p);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    Some(x)
}

/// Best objective over all basic feasible solutions of `A x ≤ b, E x = e, x ≥ 0`.
pub fn enumerate_vertices(c: &[f64], le: &[(Vec<f64>, f64)], eq: &[(Vec<f64>, f64)]) -> Option<(f64, Vec<f64>)> {
    let n = c.len();
    let mut candidates: Vec<(Vec<f64>, f64)> = le.to_vec();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = -1.0;
        candidates.push((e, 0.0));
    }
    if eq.len() > n {
        return None;
    }
    let pick = n - eq.len();
    let feasible = |x: &[f64]| {
        let dot = |a: &[f64]| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>();
        le.iter().all(|(a, b)| dot(a) <= b + 1e-9)
            && eq.iter().all(|(a, b)| (dot(a) - b).abs() <= 1e-9)
            && x.iter().all(|v| *v >= -1e-9)
    };
    let mut best: Option<(f64, Vec<f64>)> = None;
    let mut idx: Vec<usize> = (0..pick).collect();
    loop {
        if pick <= candidates.len() {
            let mut rows: Vec<Vec<f64>> = eq.iter().map(|(a, _)| a.clone()).collect();
            let mut rhs: Vec<f64> = eq.iter().map(|(_, b)| *b).collect();
            for &i in &idx {
                rows.push(candidates[i].0.clone());
                rhs.push(candidates[i].1);
            }
            if let Some(x) = solve_square(rows, rhs) {
                if feasible(&x) {
                    let v: f64 = c.iter().zip(&x).map(|(p, q)| p * q).sum();
                    if best.as_ref().is_none_or(|(bv, _)| v > *bv) {
                        best = Some((v, x));
                    }
                }
            }
        } else {
            return best;
        }
        // Next combination of `pick` indices out of `candidates.len()`.
        let m = candidates.len();
        let mut i = pick;
        loop {
            if i == 0 {
                return best;
            }
            i -= 1;
            if idx[i] < m - pick + i {
                idx[i] += 1;
                for k in i + 1..pick {
                    idx[k] = idx[k - 1] + 1;
                }
                break;
            }
        }
        if pick == 0 {
            return best;
        }
    }
}

#[derive(Debug, PartialEq)]
pub enum Oracle {
    Infeasible,
    Unbounded,
    Optimal(f64),
}

pub fn oracle(c: &[f64], le: &[(Vec<f64>, f64)], eq: &[(Vec<f64>, f64)]) -> Oracle {
    let Some((value, _)) = enumerate_vertices(c, le, eq) else {
        return Oracle::Infeasible;
    };
    // Unbounded iff some recession direction in the unit box improves the objective.
    let n = c.len();
    let mut cone: Vec<(Vec<f64>, f64)> = le.iter().map(|(a, _)| (a.clone(), 0.0)).collect();
    for j in 0..n {
        let mut e = vec![0.0; n];
        e[j] = 1.0;
        cone.push((e, 1.0));
    }
    let eq_cone: Vec<(Vec<f64>, f64)> = eq.iter().map(|(a, _)| (a.clone(), 0.0)).collect();
    match enumerate_vertices(c, &cone, &eq_cone) {
        Some((ray, _)) if ray > 1e-9 => Oracle::Unbounded,
        _ => Oracle::Optimal(value),
    }
}

/// Dense rows `(a, b)` of `a·x ≤ b` or `a·x = b`.
pub type DenseRows = Vec<(Vec<f64>, f64)>;

pub fn random_lp(r: &mut ChaCha8Rng) -> (Vec<f64>, DenseRows, DenseRows) {
    let n = r.random_range(1..=6);
    let rows = r.random_range(1..=8);
    let n_eq = r.random_range(0..=rows.min(2));
    let coef = |r: &mut ChaCha8Rng| r.random_range(-5..=5) as f64;
    let c: Vec<f64> = (0..n).map(|_| coef(r)).collect();
    let make = |r: &mut ChaCha8Rng, k: usize| -> DenseRows {
        (0..k)
            .map(|_| ((0..n).map(|_| coef(r)).collect(), r.random_range(-5..=10) as f64))
            .collect()
    };
    let le = make(r, rows - n_eq);
    let eq = make(r, n_eq);
    (c, le, eq)
}
