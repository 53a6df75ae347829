//! Small exact linear-algebra kernels over the rationals.

use num::{One, Signed, Zero};

use super::Scalar;

pub fn dot(a: &[Scalar], b: &[Scalar]) -> Scalar {
    a.iter().zip(b).fold(Scalar::zero(), |acc, (x, y)| acc + x * y)
}

pub fn sq_norm(a: &[Scalar]) -> Scalar {
    dot(a, a)
}

pub fn sub(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn add(a: &[Scalar], b: &[Scalar]) -> Vec<Scalar> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn scale(a: &[Scalar], s: &Scalar) -> Vec<Scalar> {
    a.iter().map(|x| x * s).collect()
}

pub fn unit(d: usize, i: usize) -> Vec<Scalar> {
    (0..d)
        .map(|j| if i == j { Scalar::one() } else { Scalar::zero() })
        .collect()
}

/// Incremental row reduction used for exact rank tests.
///
/// Each accepted vector is stored reduced against the earlier pivots, so a
/// new vector is dependent iff it reduces to zero.
#[derive(Clone, Debug, Default)]
pub struct RowReducer {
    rows: Vec<(usize, Vec<Scalar>)>,
}

impl RowReducer {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    fn reduce(&self, v: &[Scalar]) -> Vec<Scalar> {
        let mut v = v.to_vec();
        for (pivot, row) in &self.rows {
            if !v[*pivot].is_zero() {
                let f = v[*pivot].clone() / &row[*pivot];
                for (x, r) in v.iter_mut().zip(row) {
                    *x -= &f * r;
                }
            }
        }
        v
    }

    /// Adds `v` if it is independent of the stored rows; returns whether it was added.
    pub fn try_add(&mut self, v: &[Scalar]) -> bool {
        let r = self.reduce(v);
        match r.iter().position(|x| !x.is_zero()) {
            Some(p) => {
                self.rows.push((p, r));
                true
            }
            None => false,
        }
    }

    pub fn is_independent(&self, v: &[Scalar]) -> bool {
        self.reduce(v).iter().any(|x| !x.is_zero())
    }
}

pub fn rank(vectors: &[Vec<Scalar>]) -> usize {
    let mut rr = RowReducer::new();
    for v in vectors {
        rr.try_add(v);
    }
    rr.rank()
}

/// Solves the square system `a x = b` by Gauss-Jordan elimination.
pub fn solve(a: &[Vec<Scalar>], b: &[Scalar]) -> Option<Vec<Scalar>> {
    let n = a.len();
    let mut m: Vec<Vec<Scalar>> = a
        .iter()
        .zip(b)
        .map(|(row, bi)| {
            let mut r = row.clone();
            r.push(bi.clone());
            r
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !m[r][col].is_zero())?;
        m.swap(col, piv);
        let p = m[col][col].clone();
        for x in m[col].iter_mut() {
            *x /= &p;
        }
        for r in 0..n {
            if r != col && !m[r][col].is_zero() {
                let f = m[r][col].clone();
                let pivot_row = m[col].clone();
                for (x, y) in m[r].iter_mut().zip(&pivot_row) {
                    *x -= &f * y;
                }
            }
        }
    }
    Some(m.into_iter().map(|mut r| r.pop().unwrap()).collect())
}

/// Basis of `{v : row · v = 0 for every row}` in dimension `d`.
pub fn null_space(rows: &[Vec<Scalar>], d: usize) -> Vec<Vec<Scalar>> {
    // reduced row echelon form
    let mut m: Vec<Vec<Scalar>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..d {
        if r >= m.len() {
            break;
        }
        let Some(piv) = (r..m.len()).find(|&i| !m[i][col].is_zero()) else {
            continue;
        };
        m.swap(r, piv);
        let p = m[r][col].clone();
        for x in m[r].iter_mut() {
            *x /= &p;
        }
        for i in 0..m.len() {
            if i != r && !m[i][col].is_zero() {
                let f = m[i][col].clone();
                let pr = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(&pr) {
                    *x -= &f * y;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    let free: Vec<usize> = (0..d).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![Scalar::zero(); d];
            v[f] = Scalar::one();
            for (row, &pc) in pivots.iter().enumerate() {
                v[pc] = -m[row][f].clone();
            }
            v
        })
        .collect()
}

/// Rescales a nonzero rational vector to a primitive integer vector with a
/// positive first nonzero entry.
pub fn primitive(v: &[Scalar]) -> Vec<Scalar> {
    use num::integer::Integer;
    use num::BigInt;
    let lcm = v
        .iter()
        .fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| (x * Scalar::from(lcm.clone())).to_integer()).collect();
    let g = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if g.is_zero() {
        return v.to_vec();
    }
    let sign = match ints.iter().find(|x| !x.is_zero()) {
        Some(x) if x.is_negative() => -BigInt::one(),
        _ => BigInt::one(),
    };
    ints.into_iter()
        .map(|x| Scalar::from(x / &g * &sign))
        .collect()
}
