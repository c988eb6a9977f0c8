//! Square matrices over arbitrary-precision rationals, and the
//! exact-or-floating matrix handle that group elements evaluate to.

use std::fmt;
use std::ops::Mul;

use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

/// Dense square matrix with `BigRational` entries, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct RatMatrix {
    n: usize,
    data: Vec<BigRational>,
}

impl RatMatrix {
    pub fn identity(n: usize) -> Self {
        let mut data = vec![BigRational::zero(); n * n];
        for i in 0..n {
            data[i * n + i] = BigRational::one();
        }
        RatMatrix { n, data }
    }

    /// Builds a matrix from integer rows. Panics if the rows are not square.
    pub fn from_i64(rows: &[&[i64]]) -> Self {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for row in rows {
            assert_eq!(row.len(), n, "matrix must be square");
            data.extend(row.iter().map(|&x| BigRational::from_integer(BigInt::from(x))));
        }
        RatMatrix { n, data }
    }

    pub fn from_rows(rows: Vec<Vec<BigRational>>) -> Option<Self> {
        let n = rows.len();
        if n == 0 || rows.iter().any(|r| r.len() != n) {
            return None;
        }
        Some(RatMatrix {
            n,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> &BigRational {
        &self.data[i * self.n + j]
    }

    pub fn rows(&self) -> Vec<Vec<BigRational>> {
        self.data.chunks(self.n).map(|c| c.to_vec()).collect()
    }

    pub fn is_identity(&self) -> bool {
        *self == RatMatrix::identity(self.n)
    }

    pub fn neg(&self) -> Self {
        RatMatrix {
            n: self.n,
            data: self.data.iter().map(|x| -x).collect(),
        }
    }

    pub fn determinant(&self) -> BigRational {
        let n = self.n;
        let mut a = self.data.clone();
        let mut det = BigRational::one();
        for col in 0..n {
            let Some(piv) = (col..n).find(|&r| !a[r * n + col].is_zero()) else {
                return BigRational::zero();
            };
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                }
                det = -det;
            }
            let p = a[col * n + col].clone();
            det *= &p;
            for r in col + 1..n {
                let factor = &a[r * n + col] / &p;
                if factor.is_zero() {
                    continue;
                }
                for j in col..n {
                    let sub = &factor * &a[col * n + j];
                    a[r * n + j] -= sub;
                }
            }
        }
        det
    }

    /// Gauss–Jordan inverse; `None` when singular.
    pub fn inverse(&self) -> Option<Self> {
        let n = self.n;
        let mut a = self.data.clone();
        let mut inv = RatMatrix::identity(n).data;
        for col in 0..n {
            let piv = (col..n).find(|&r| !a[r * n + col].is_zero())?;
            if piv != col {
                for j in 0..n {
                    a.swap(piv * n + j, col * n + j);
                    inv.swap(piv * n + j, col * n + j);
                }
            }
            let p = a[col * n + col].clone();
            for j in 0..n {
                a[col * n + j] /= &p;
                inv[col * n + j] /= &p;
            }
            for r in 0..n {
                if r == col || a[r * n + col].is_zero() {
                    continue;
                }
                let factor = a[r * n + col].clone();
                for j in 0..n {
                    let s1 = &factor * &a[col * n + j];
                    a[r * n + j] -= s1;
                    let s2 = &factor * &inv[col * n + j];
                    inv[r * n + j] -= s2;
                }
            }
        }
        Some(RatMatrix { n, data: inv })
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| ratio_to_f64(self.get(i, j)))
    }

    /// Frobenius norm, evaluated in floating point.
    pub fn norm(&self) -> f64 {
        self.data
            .iter()
            .map(|x| {
                let v = ratio_to_f64(x);
                v * v
            })
            .sum::<f64>()
            .sqrt()
    }

    /// Largest absolute numerator or denominator among the entries.
    pub fn height(&self) -> BigInt {
        self.data
            .iter()
            .flat_map(|x| [x.numer().abs(), x.denom().abs()])
            .max()
            .unwrap_or_else(BigInt::zero)
    }
}

impl Mul for &RatMatrix {
    type Output = RatMatrix;

    fn mul(self, rhs: &RatMatrix) -> RatMatrix {
        assert_eq!(self.n, rhs.n, "dimension mismatch");
        let n = self.n;
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let mut acc = BigRational::zero();
                for k in 0..n {
                    let a = &self.data[i * n + k];
                    let b = &rhs.data[k * n + j];
                    if !a.is_zero() && !b.is_zero() {
                        acc += a * b;
                    }
                }
                data.push(acc);
            }
        }
        RatMatrix { n, data }
    }
}

impl fmt::Debug for RatMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<Vec<String>> = self
            .rows()
            .iter()
            .map(|r| r.iter().map(|x| x.to_string()).collect())
            .collect();
        write!(f, "{rows:?}")
    }
}

pub fn ratio_to_f64(x: &BigRational) -> f64 {
    match (x.numer().to_f64(), x.denom().to_f64()) {
        (Some(n), Some(d)) if n.is_finite() && d.is_finite() => n / d,
        _ => f64::NAN,
    }
}

/// Parses `"3"`, `"-1/2"` or a decimal such as `"0.25"` into an exact rational.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let neg = int.starts_with('-');
        let digits = format!("{}{}", int.trim_start_matches(['-', '+']), frac);
        let n: BigInt = digits.parse().ok()?;
        let d = num_traits::pow(BigInt::from(10), frac.len());
        let r = BigRational::new(n, d);
        return Some(if neg { -r } else { r });
    }
    s.parse::<BigInt>().ok().map(BigRational::from_integer)
}

/// A group element's matrix: exact whenever every input was rational.
#[derive(Clone, Debug, PartialEq)]
pub enum GroupMatrix {
    Exact(RatMatrix),
    Float(DMatrix<f64>),
}

impl GroupMatrix {
    pub fn identity(n: usize, exact: bool) -> Self {
        if exact {
            GroupMatrix::Exact(RatMatrix::identity(n))
        } else {
            GroupMatrix::Float(DMatrix::identity(n, n))
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GroupMatrix::Exact(m) => m.dim(),
            GroupMatrix::Float(m) => m.nrows(),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, GroupMatrix::Exact(_))
    }

    pub fn to_f64(&self) -> DMatrix<f64> {
        match self {
            GroupMatrix::Exact(m) => m.to_f64(),
            GroupMatrix::Float(m) => m.clone(),
        }
    }

    pub fn mul(&self, rhs: &GroupMatrix) -> GroupMatrix {
        match (self, rhs) {
            (GroupMatrix::Exact(a), GroupMatrix::Exact(b)) => GroupMatrix::Exact(a * b),
            (a, b) => GroupMatrix::Float(a.to_f64() * b.to_f64()),
        }
    }

    pub fn inverse(&self) -> Option<GroupMatrix> {
        match self {
            GroupMatrix::Exact(m) => m.inverse().map(GroupMatrix::Exact),
            GroupMatrix::Float(m) => m.clone().try_inverse().map(GroupMatrix::Float),
        }
    }

    pub fn neg(&self) -> GroupMatrix {
        match self {
            GroupMatrix::Exact(m) => GroupMatrix::Exact(m.neg()),
            GroupMatrix::Float(m) => GroupMatrix::Float(-m),
        }
    }

    pub fn norm(&self) -> f64 {
        match self {
            GroupMatrix::Exact(m) => m.norm(),
            GroupMatrix::Float(m) => m.norm(),
        }
    }

    /// Element equality: exact comparison for rational pairs, entrywise
    /// tolerance otherwise. `projective` also accepts `a == -b`.
    pub fn same_element(&self, other: &GroupMatrix, tol: f64, projective: bool) -> bool {
        if self.dim() != other.dim() {
            return false;
        }
        match (self, other) {
            (GroupMatrix::Exact(a), GroupMatrix::Exact(b)) => {
                a == b || (projective && *a == b.neg())
            }
            (a, b) => {
                let (a, b) = (a.to_f64(), b.to_f64());
                let direct = (&a - &b).amax();
                if direct < tol {
                    return true;
                }
                projective && (&a + &b).amax() < tol
            }
        }
    }

    pub fn is_identity(&self, tol: f64, projective: bool) -> bool {
        self.same_element(&GroupMatrix::identity(self.dim(), true), tol, projective)
    }
}

/// Serialized matrix: rows of numbers or rational strings such as `"-1/2"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MatrixEntry {
    Number(f64),
    Text(String),
}

/// Converts configuration rows into a matrix, exact when every entry is an
/// integer literal or a rational string.
pub fn matrix_from_entries(rows: &[Vec<MatrixEntry>]) -> Result<GroupMatrix, String> {
    let n = rows.len();
    if n == 0 {
        return Err("empty matrix".into());
    }
    if let Some(bad) = rows.iter().position(|r| r.len() != n) {
        return Err(format!("row {bad} has length {}, expected {n}", rows[bad].len()));
    }
    let mut exact_rows = Vec::with_capacity(n);
    let mut all_exact = true;
    for row in rows {
        let mut out = Vec::with_capacity(n);
        for e in row {
            let q = match e {
                MatrixEntry::Text(s) => {
                    Some(parse_rational(s).ok_or_else(|| format!("cannot parse entry {s:?}"))?)
                }
                MatrixEntry::Number(x) if x.fract() == 0.0 && x.abs() < 9.0e15 => {
                    Some(BigRational::from_integer(BigInt::from(*x as i64)))
                }
                MatrixEntry::Number(_) => None,
            };
            match q {
                Some(q) => out.push(q),
                None => {
                    all_exact = false;
                    out.push(BigRational::zero());
                }
            }
        }
        exact_rows.push(out);
    }
    if all_exact {
        return Ok(GroupMatrix::Exact(RatMatrix::from_rows(exact_rows).expect("square")));
    }
    let mut m = DMatrix::zeros(n, n);
    for (i, row) in rows.iter().enumerate() {
        for (j, e) in row.iter().enumerate() {
            m[(i, j)] = match e {
                MatrixEntry::Number(x) => *x,
                MatrixEntry::Text(s) => ratio_to_f64(&parse_rational(s).expect("checked above")),
            };
        }
    }
    Ok(GroupMatrix::Float(m))
}

pub fn matrix_to_entries(m: &GroupMatrix) -> Vec<Vec<MatrixEntry>> {
    match m {
        GroupMatrix::Exact(r) => r
            .rows()
            .into_iter()
            .map(|row| row.into_iter().map(|q| MatrixEntry::Text(q.to_string())).collect())
            .collect(),
        GroupMatrix::Float(f) => (0..f.nrows())
            .map(|i| (0..f.ncols()).map(|j| MatrixEntry::Number(f[(i, j)])).collect())
            .collect(),
    }
}
