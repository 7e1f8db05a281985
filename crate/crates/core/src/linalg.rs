//! Exact linear algebra on small integer matrices, via rationals.

use num_rational::Ratio;
use num_traits::{One, Zero};

type Q = Ratio<i128>;

fn to_q(rows: &[Vec<i64>]) -> Vec<Vec<Q>> {
    rows.iter()
        .map(|r| r.iter().map(|&x| Q::from_integer(x as i128)).collect())
        .collect()
}

/// Reduced row echelon form in place; returns the pivot columns.
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
        let inv = m[r][c].recip();
        for x in m[r].iter_mut() {
            *x *= inv;
        }
        for i in 0..rows {
            if i != r && !m[i][c].is_zero() {
                let f = m[i][c];
                for j in 0..cols {
                    let d = m[r][j] * f;
                    m[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank(rows: &[Vec<i64>]) -> usize {
    let mut m = to_q(rows);
    rref(&mut m).len()
}

pub fn determinant(m: &[Vec<i64>]) -> i128 {
    let n = m.len();
    let mut a = to_q(m);
    let mut det = Q::one();
    for c in 0..n {
        let Some(p) = (c..n).find(|&i| !a[i][c].is_zero()) else {
            return 0;
        };
        if p != c {
            a.swap(p, c);
            det = -det;
        }
        det *= a[c][c];
        for i in c + 1..n {
            let f = a[i][c] / a[c][c];
            for j in c..n {
                let d = a[c][j] * f;
                a[i][j] -= d;
            }
        }
    }
    debug_assert!(det.is_integer());
    det.to_integer()
}

/// Integer inverse of a unimodular matrix.
pub fn unimodular_inverse(m: &[Vec<i64>]) -> Option<Vec<Vec<i64>>> {
    let n = m.len();
    if determinant(m).abs() != 1 {
        return None;
    }
    let mut aug: Vec<Vec<Q>> = to_q(m)
        .into_iter()
        .enumerate()
        .map(|(i, mut r)| {
            r.extend((0..n).map(|j| if i == j { Q::one() } else { Q::zero() }));
            r
        })
        .collect();
    rref(&mut aug);
    Some(
        aug.iter()
            .map(|r| r[n..].iter().map(|x| x.to_integer() as i64).collect())
            .collect(),
    )
}

/// Integer vectors spanning (over ℚ) the space of `x` with `row · x = 0` for
/// every given row; each basis vector is scaled to be primitive.
pub fn integer_nullspace(rows: &[Vec<i64>], n: usize) -> Vec<Vec<i64>> {
    let mut m = to_q(rows);
    let pivots = if m.is_empty() {
        Vec::new()
    } else {
        rref(&mut m)
    };
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Q::zero(); n];
            v[f] = Q::one();
            for (r, &p) in pivots.iter().enumerate() {
                v[p] = -m[r][f];
            }
            let lcm = v
                .iter()
                .fold(1i128, |acc, x| num_integer::lcm(acc, *x.denom()));
            let ints: Vec<i128> = v
                .iter()
                .map(|x| (x * Q::from_integer(lcm)).to_integer())
                .collect();
            let g = ints
                .iter()
                .fold(0i128, |acc, &x| num_integer::gcd(acc, x))
                .max(1);
            ints.iter().map(|&x| (x / g) as i64).collect()
        })
        .collect()
}

/// Integer coefficients `c` with `Σ cⱼ basis[j] = target`, if they exist.
/// The basis vectors must be linearly independent.
pub fn integer_coordinates(basis: &[Vec<i64>], target: &[i64]) -> Option<Vec<i64>> {
    let n = target.len();
    let k = basis.len();
    // Columns are the basis vectors; augmented with the target.
    let mut m: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            let mut row: Vec<Q> = basis
                .iter()
                .map(|b| Q::from_integer(b[i] as i128))
                .collect();
            row.push(Q::from_integer(target[i] as i128));
            row
        })
        .collect();
    let pivots = rref(&mut m);
    if pivots.contains(&k) {
        return None;
    }
    let mut c = vec![0i64; k];
    for (r, &p) in pivots.iter().enumerate() {
        let x = m[r][k];
        if !x.is_integer() {
            return None;
        }
        c[p] = x.to_integer() as i64;
    }
    Some(c)
}

pub fn vec_mat(v: &[i64], m: &[Vec<i64>]) -> Vec<i64> {
    let cols = m.first().map_or(0, Vec::len);
    (0..cols)
        .map(|j| v.iter().zip(m).map(|(a, row)| a * row[j]).sum())
        .collect()
}
