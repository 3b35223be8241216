//! Exact Gaussian elimination over the scalar ring (h-homogeneous pivots).

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LinalgError {
    #[error("pivot {0} is not invertible")]
    Pivot(String),
}

/// Reduced row echelon form in place; returns pivot columns.
pub fn rref(rows: &mut Vec<Vec<Scalar>>, ncols: usize) -> Result<Vec<usize>, LinalgError> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].invert().map_err(|_| LinalgError::Pivot(rows[r][c].to_string()))?;
        for x in rows[r].iter_mut() {
            *x = &*x * &inv;
        }
        let prow = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (x, y) in row.iter_mut().zip(&prow) {
                if !y.is_zero() {
                    *x -= &(&f * y);
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    rows.truncate(r);
    Ok(pivots)
}

pub fn rank(rows: &[Vec<Scalar>], ncols: usize) -> Result<usize, LinalgError> {
    let mut m = rows.to_vec();
    Ok(rref(&mut m, ncols)?.len())
}

/// Basis of `{x : A x = 0}` for `A` given by rows.
pub fn nullspace(rows: &[Vec<Scalar>], ncols: usize) -> Result<Vec<Vec<Scalar>>, LinalgError> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m, ncols)?;
    let mut out = Vec::new();
    for free in (0..ncols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![Scalar::zero(); ncols];
        v[free] = Scalar::one();
        for (r, &pc) in pivots.iter().enumerate() {
            v[pc] = -&m[r][free];
        }
        out.push(v);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn s(v: i64) -> Scalar {
        Scalar::from_int(v)
    }

    #[test]
    fn nullspace_small() {
        let a = vec![vec![s(1), s(2), s(3)], vec![s(2), s(4), s(6)]];
        let ns = nullspace(&a, 3).unwrap();
        assert_eq!(ns.len(), 2);
        for v in &ns {
            for row in &a {
                let dot = row.iter().zip(v).fold(Scalar::zero(), |acc, (x, y)| acc + x * y);
                assert!(dot.is_zero());
            }
        }
        assert_eq!(rank(&a, 3).unwrap(), 1);
    }

    #[test]
    fn gaussian_entries() {
        let a = vec![vec![Scalar::one(), Scalar::i()], vec![Scalar::i(), Scalar::from_int(-1)]];
        assert_eq!(rank(&a, 2).unwrap(), 1);
        let b = vec![vec![Scalar::sqrt2(), Scalar::one()], vec![Scalar::one(), Scalar::sqrt2()]];
        assert_eq!(rank(&b, 2).unwrap(), 2);
    }
}
