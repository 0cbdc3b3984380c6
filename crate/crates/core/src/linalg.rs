//! Exact rank and determinant: fraction-free (Bareiss) elimination over the
//! integers, plus a rational variant.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, Zero};

/// Rank of an integer matrix by fraction-free elimination. Runs in `i128`
/// and falls back to big integers if an intermediate minor overflows.
pub fn rank_int(rows: &[Vec<i64>]) -> usize {
    if let Some(r) = bareiss_rank_i128(rows) {
        return r;
    }
    let m: Vec<Vec<BigInt>> = rows.iter().map(|r| r.iter().map(|&x| BigInt::from(x)).collect()).collect();
    bareiss(m).0
}

fn bareiss_rank_i128(rows: &[Vec<i64>]) -> Option<usize> {
    let mut m: Vec<Vec<i128>> = rows.iter().map(|r| r.iter().map(|&x| x as i128).collect()).collect();
    let n = m.len();
    if n == 0 {
        return Some(0);
    }
    let cols = m[0].len();
    let mut prev: i128 = 1;
    let mut rank = 0;
    for col in 0..cols {
        if rank == n {
            break;
        }
        let Some(p) = (rank..n).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(p, rank);
        for r in rank + 1..n {
            for c in col + 1..cols {
                let a = m[rank][col].checked_mul(m[r][c])?;
                let b = m[r][col].checked_mul(m[rank][c])?;
                m[r][c] = a.checked_sub(b)? / prev;
            }
            m[r][col] = 0;
        }
        prev = m[rank][col];
        rank += 1;
    }
    Some(rank)
}

/// Determinant of a square integer matrix.
pub fn det_int(rows: &[Vec<BigInt>]) -> BigInt {
    let n = rows.len();
    assert!(rows.iter().all(|r| r.len() == n), "determinant of a non-square matrix");
    if n == 0 {
        return BigInt::one();
    }
    let (rank, sign, last) = bareiss(rows.to_vec());
    if rank < n {
        BigInt::zero()
    } else if sign < 0 {
        -last
    } else {
        last
    }
}

/// Returns (rank, sign of the row permutation, last pivot). For a square
/// nonsingular input the signed last pivot is the determinant.
fn bareiss(mut m: Vec<Vec<BigInt>>) -> (usize, i32, BigInt) {
    let rows = m.len();
    if rows == 0 {
        return (0, 1, BigInt::one());
    }
    let cols = m[0].len();
    let mut prev = BigInt::one();
    let mut rank = 0;
    let mut sign = 1;
    for col in 0..cols {
        if rank == rows {
            break;
        }
        let Some(p) = (rank..rows).find(|&r| !m[r][col].is_zero()) else {
            continue;
        };
        if p != rank {
            m.swap(p, rank);
            sign = -sign;
        }
        for r in rank + 1..rows {
            for c in col + 1..cols {
                let v = (&m[rank][col] * &m[r][c] - &m[r][col] * &m[rank][c]) / &prev;
                m[r][c] = v;
            }
            m[r][col] = BigInt::zero();
        }
        prev = m[rank][col].clone();
        rank += 1;
    }
    (rank, sign, prev)
}

/// Determinant of a rational matrix: clear denominators row by row and use
/// the integer routine.
pub fn det_rational(rows: &[Vec<BigRational>]) -> BigRational {
    let mut scale = BigRational::one();
    let mut ints = Vec::with_capacity(rows.len());
    for r in rows {
        let l = r.iter().fold(BigInt::one(), |acc, x| num::integer::lcm(acc, x.denom().clone()));
        scale /= BigRational::from_integer(l.clone());
        ints.push(r.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect());
    }
    BigRational::from_integer(det_int(&ints)) * scale
}

/// Rank of a rational matrix.
pub fn rank_rational(rows: &[Vec<BigRational>]) -> usize {
    let ints: Vec<Vec<BigInt>> = rows
        .iter()
        .map(|r| {
            let l = r.iter().fold(BigInt::one(), |acc, x| num::integer::lcm(acc, x.denom().clone()));
            r.iter().map(|x| (x * BigRational::from_integer(l.clone())).to_integer()).collect()
        })
        .collect();
    bareiss(ints).0
}

pub fn sign_of(x: &BigRational) -> i32 {
    if x.is_positive() {
        1
    } else if x.is_negative() {
        -1
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Cofactor expansion, used as an independent check.
    fn det_expand(m: &[Vec<BigRational>]) -> BigRational {
        let n = m.len();
        if n == 0 {
            return BigRational::one();
        }
        let mut total = BigRational::zero();
        for j in 0..n {
            let minor: Vec<Vec<BigRational>> =
                m[1..].iter().map(|row| row.iter().enumerate().filter(|(c, _)| *c != j).map(|(_, x)| x.clone()).collect()).collect();
            let term = &m[0][j] * det_expand(&minor);
            if j % 2 == 0 {
                total += term;
            } else {
                total -= term;
            }
        }
        total
    }

    #[test]
    fn ranks() {
        assert_eq!(rank_int(&[vec![1, -1, 0], vec![0, 1, -1], vec![1, 0, -1]]), 2);
        assert_eq!(rank_int(&[vec![0, 0], vec![0, 0]]), 0);
        assert_eq!(rank_int(&[]), 0);
        assert_eq!(rank_int(&[vec![2, 4], vec![1, 3]]), 2);
    }

    #[test]
    fn determinants_match_expansion() {
        let m = vec![
            vec![r(1, 2), r(3, 1), r(-2, 3)],
            vec![r(0, 1), r(5, 7), r(1, 1)],
            vec![r(4, 1), r(-1, 2), r(2, 5)],
        ];
        assert_eq!(det_rational(&m), det_expand(&m));
        let swapped = vec![m[1].clone(), m[0].clone(), m[2].clone()];
        assert_eq!(det_rational(&swapped), -det_expand(&m));
        let singular = vec![m[0].clone(), m[0].clone(), m[2].clone()];
        assert!(det_rational(&singular).is_zero());
    }
}
