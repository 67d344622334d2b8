//! Dense exact matrices.

use num_traits::{One, Zero};

use crate::scalar::Q;

pub type Matrix = Vec<Vec<Q>>;

pub fn identity(n: usize) -> Matrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { Q::one() } else { Q::zero() }).collect()).collect()
}

pub fn zeros(r: usize, c: usize) -> Matrix {
    vec![vec![Q::zero(); c]; r]
}

pub fn mat_vec(m: &Matrix, v: &[Q]) -> Vec<Q> {
    m.iter().map(|row| row.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

pub fn mat_mul(a: &Matrix, b: &Matrix) -> Matrix {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| (0..n).map(|j| row.iter().zip(b).map(|(x, br)| x * &br[j]).sum()).collect())
        .collect()
}

pub fn transpose(m: &Matrix) -> Matrix {
    let c = m.first().map_or(0, |r| r.len());
    (0..c).map(|j| m.iter().map(|r| r[j].clone()).collect()).collect()
}

pub fn scale(m: &Matrix, s: &Q) -> Matrix {
    m.iter().map(|r| r.iter().map(|x| x * s).collect()).collect()
}

pub fn add(a: &Matrix, b: &Matrix) -> Matrix {
    a.iter().zip(b).map(|(r, s)| r.iter().zip(s).map(|(x, y)| x + y).collect()).collect()
}

/// Reduced row echelon form; returns the nonzero rows and their pivot columns.
pub fn rref(m: &Matrix) -> (Matrix, Vec<usize>) {
    let mut a = m.clone();
    let cols = a.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        let Some(p) = (r..a.len()).find(|&i| !a[i][c].is_zero()) else { continue };
        a.swap(r, p);
        let inv = a[r][c].recip();
        for x in a[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..a.len() {
            if i != r && !a[i][c].is_zero() {
                let f = a[i][c].clone();
                for j in 0..cols {
                    let d = &f * &a[r][j];
                    a[i][j] -= d;
                }
            }
        }
        pivots.push(c);
        r += 1;
        if r == a.len() {
            break;
        }
    }
    a.truncate(r);
    (a, pivots)
}

pub fn rank(m: &Matrix) -> usize {
    rref(m).1.len()
}

pub fn is_zero_vec(v: &[Q]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn fmt_vec(v: &[Q]) -> String {
    let parts: Vec<String> = v.iter().map(|x| x.to_string()).collect();
    format!("[{}]", parts.join(", "))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::q;

    #[test]
    fn rref_of_dependent_rows() {
        let m = vec![vec![q(1), q(2)], vec![q(2), q(4)], vec![q(0), q(1)]];
        let (r, p) = rref(&m);
        assert_eq!(p, vec![0, 1]);
        assert_eq!(r, identity(2));
        assert_eq!(rank(&vec![vec![q(1), q(2)], vec![q(2), q(4)]]), 1);
    }

    #[test]
    fn products() {
        let a = vec![vec![q(0), q(1)], vec![q(1), q(0)]];
        assert_eq!(mat_mul(&a, &a), identity(2));
        assert_eq!(mat_vec(&a, &[q(3), q(4)]), vec![q(4), q(3)]);
        assert_eq!(transpose(&vec![vec![q(1), q(2)]]), vec![vec![q(1)], vec![q(2)]]);
    }
}
