//! Partial flags in R^d: metric, antipodality, the linear action, attracting
//! flags, singular-value gaps and finite nets modelling compact sets.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::numeric::POLICY;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlagError {
    #[error("flag types differ: {0:?} vs {1:?}")]
    TypeMismatch(FlagType, FlagType),
    #[error("invalid flag type: {0}")]
    InvalidType(String),
    #[error("basis is not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
    #[error("matrix is singular")]
    Singular,
    #[error("no eigenvalue gap at dimension {dim} (log gap {gap:e})")]
    NoGap { dim: usize, gap: f64 },
    #[error("empty net")]
    EmptyNet,
}

/// The dimensions of the subspaces in a partial flag of R^d.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "FlagTypeRepr")]
pub struct FlagType {
    pub d: usize,
    pub dims: Vec<usize>,
}

#[derive(Deserialize)]
struct FlagTypeRepr {
    d: usize,
    dims: Vec<usize>,
}

impl TryFrom<FlagTypeRepr> for FlagType {
    type Error = FlagError;

    fn try_from(r: FlagTypeRepr) -> Result<Self, FlagError> {
        FlagType::new(r.d, r.dims)
    }
}

impl FlagType {
    pub fn new(d: usize, dims: Vec<usize>) -> Result<Self, FlagError> {
        if dims.is_empty() {
            return Err(FlagError::InvalidType("no dimensions".into()));
        }
        if dims.windows(2).any(|w| w[0] >= w[1]) {
            return Err(FlagError::InvalidType(format!("{dims:?} is not increasing")));
        }
        if dims[0] == 0 || *dims.last().unwrap() >= d {
            return Err(FlagError::InvalidType(format!("{dims:?} not inside (0, {d})")));
        }
        Ok(FlagType { d, dims })
    }

    /// Full flags `{1, …, d−1}`.
    pub fn full(d: usize) -> Self {
        FlagType {
            d,
            dims: (1..d).collect(),
        }
    }

    pub fn is_iota_invariant(&self) -> bool {
        opposition_involution(self) == *self
    }
}

/// `dims ↦ {d − i}`.
pub fn opposition_involution(t: &FlagType) -> FlagType {
    let mut dims: Vec<usize> = t.dims.iter().map(|&i| t.d - i).collect();
    dims.sort_unstable();
    FlagType { d: t.d, dims }
}

/// A flag given by an orthonormal basis; stage `k` is the span of the first
/// `k` columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "FlagRepr", try_from = "FlagRepr")]
pub struct Flag {
    basis: DMatrix<f64>,
    ty: FlagType,
}

#[derive(Clone, Serialize, Deserialize)]
struct FlagRepr {
    #[serde(rename = "type")]
    ty: FlagType,
    basis: Vec<Vec<f64>>,
}

impl From<Flag> for FlagRepr {
    fn from(f: Flag) -> Self {
        FlagRepr {
            basis: f.rows(),
            ty: f.ty,
        }
    }
}

impl TryFrom<FlagRepr> for Flag {
    type Error = FlagError;

    fn try_from(r: FlagRepr) -> Result<Self, FlagError> {
        let d = r.ty.d;
        if r.basis.len() != d || r.basis.iter().any(|row| row.len() != d) {
            return Err(FlagError::InvalidType(format!("basis is not {d}x{d}")));
        }
        let m = DMatrix::from_fn(d, d, |i, j| r.basis[i][j]);
        Flag::new(m, r.ty)
    }
}

impl Flag {
    /// Checks orthonormality; use [`Flag::from_columns`] for arbitrary bases.
    pub fn new(basis: DMatrix<f64>, ty: FlagType) -> Result<Self, FlagError> {
        let d = ty.d;
        if basis.nrows() != d || basis.ncols() != d {
            return Err(FlagError::InvalidType(format!("basis is not {d}x{d}")));
        }
        let defect = (basis.transpose() * &basis - DMatrix::identity(d, d)).amax();
        if defect > POLICY.orthonormality {
            return Err(FlagError::NotOrthonormal(defect));
        }
        Ok(Flag { basis, ty })
    }

    /// Gram–Schmidt on the columns of an invertible matrix.
    pub fn from_columns(m: DMatrix<f64>, ty: FlagType) -> Result<Self, FlagError> {
        let d = ty.d;
        if m.nrows() != d || m.ncols() != d {
            return Err(FlagError::InvalidType(format!("matrix is not {d}x{d}")));
        }
        let qr = m.qr();
        let r = qr.r();
        let scale = r.amax();
        if (0..d).any(|i| r[(i, i)].abs() <= 1e-14 * scale) {
            return Err(FlagError::Singular);
        }
        Ok(Flag {
            basis: qr.q(),
            ty,
        })
    }

    pub fn standard(ty: FlagType) -> Self {
        let d = ty.d;
        Flag {
            basis: DMatrix::identity(d, d),
            ty,
        }
    }

    /// Basis `e_d, …, e_1`.
    pub fn reversed(ty: FlagType) -> Self {
        let d = ty.d;
        Flag {
            basis: DMatrix::from_fn(d, d, |i, j| if i + j == d - 1 { 1.0 } else { 0.0 }),
            ty,
        }
    }

    pub fn flag_type(&self) -> &FlagType {
        &self.ty
    }

    pub fn basis(&self) -> &DMatrix<f64> {
        &self.basis
    }

    pub fn subspace(&self, k: usize) -> DMatrix<f64> {
        self.basis.columns(0, k).into_owned()
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.basis.row_iter().map(|r| r.iter().copied().collect()).collect()
    }

    /// Same subspaces, viewed as a flag of another type.
    pub fn with_type(&self, ty: FlagType) -> Result<Self, FlagError> {
        if ty.d != self.ty.d {
            return Err(FlagError::TypeMismatch(self.ty.clone(), ty));
        }
        Ok(Flag {
            basis: self.basis.clone(),
            ty,
        })
    }
}

fn same_type(f: &Flag, g: &Flag) -> Result<(), FlagError> {
    if f.ty != g.ty {
        return Err(FlagError::TypeMismatch(f.ty.clone(), g.ty.clone()));
    }
    Ok(())
}

/// Extreme singular values of a small matrix, with closed forms for
/// vectors and 2×2 blocks.
fn sv_extremes(m: &DMatrix<f64>) -> (f64, f64) {
    let (r, c) = m.shape();
    if r == 1 || c == 1 {
        let n = m.norm();
        return (n, n);
    }
    if r == 2 && c == 2 {
        let fro2 = m.norm_squared();
        let det = (m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)]).abs();
        let disc = (fro2 * fro2 - 4.0 * det * det).max(0.0).sqrt();
        let smax = ((fro2 + disc) / 2.0).sqrt();
        let smin = if smax > 0.0 { det / smax } else { 0.0 };
        return (smin, smax);
    }
    let sv = m.singular_values();
    (sv.min(), sv.max())
}

/// `Fᵀ_{[k..d)} G_{[0..n)}`: the complement of stage `k` of `f` against the
/// first `n` columns of `g`.
fn cross_block(f: &Flag, k: usize, g: &Flag, n: usize) -> DMatrix<f64> {
    let d = f.ty.d;
    f.basis.columns(k, d - k).transpose() * g.basis.columns(0, n)
}

/// Largest principal-angle sine between corresponding stages.
pub fn flag_distance(f: &Flag, g: &Flag) -> Result<f64, FlagError> {
    same_type(f, g)?;
    // fixed argument order keeps the result bitwise symmetric
    let (f, g) = match f.basis.as_slice().partial_cmp(g.basis.as_slice()) {
        Some(std::cmp::Ordering::Greater) => (g, f),
        _ => (f, g),
    };
    let mut dist = 0.0f64;
    for &k in &f.ty.dims {
        dist = dist.max(sv_extremes(&cross_block(f, k, g, k)).1);
    }
    Ok(dist.min(1.0))
}

/// `min_k σ_min([F_k | G_{d−k}])`; zero exactly when some stage of `f`
/// meets the complementary stage of `g`.
///
/// With `s` the sine of the smallest principal angle between the two
/// stages, `σ_min² = 1 − cos θ`, evaluated as `s / sqrt(1 + sqrt(1 − s²))`.
pub fn antipodality_margin(f: &Flag, g: &Flag) -> Result<f64, FlagError> {
    let want = opposition_involution(&f.ty);
    if g.ty != want {
        return Err(FlagError::TypeMismatch(want, g.ty.clone()));
    }
    let d = f.ty.d;
    let mut margin = f64::INFINITY;
    for &k in &f.ty.dims {
        let s = sv_extremes(&cross_block(f, k, g, d - k)).0.min(1.0);
        margin = margin.min(s / (1.0 + (1.0 - s * s).sqrt()).sqrt());
    }
    Ok(margin)
}

/// `g·F`, re-orthonormalized.
pub fn act(g: &DMatrix<f64>, f: &Flag) -> Result<Flag, FlagError> {
    let d = f.ty.d;
    if g.nrows() != d || g.ncols() != d {
        return Err(FlagError::InvalidType(format!("matrix is not {d}x{d}")));
    }
    Flag::from_columns(g * &f.basis, f.ty.clone())
}

/// Eigenvalue moduli in descending order.
pub fn eigenvalue_moduli(g: &DMatrix<f64>) -> Vec<f64> {
    let mut m: Vec<f64> = g.complex_eigenvalues().iter().map(|z| z.norm()).collect();
    m.sort_by(|a, b| b.total_cmp(a));
    m
}

/// Singular values in descending order.
pub fn singular_values(g: &DMatrix<f64>) -> Vec<f64> {
    let mut s: Vec<f64> = g.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Fails with `NoGap` unless `log(|λ_k| / |λ_{k+1}|)` exceeds the gap
/// floor at every dimension of `t`.
pub fn check_eigen_gaps(g: &DMatrix<f64>, t: &FlagType) -> Result<Vec<f64>, FlagError> {
    let moduli = eigenvalue_moduli(g);
    let mut gaps = Vec::with_capacity(t.dims.len());
    for &k in &t.dims {
        let gap = (moduli[k - 1] / moduli[k]).ln();
        if !(gap > POLICY.gap_floor) {
            return Err(FlagError::NoGap { dim: k, gap });
        }
        gaps.push(gap);
    }
    Ok(gaps)
}

fn generic_frame(d: usize) -> DMatrix<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x0f1a_9e5e);
    DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0))
}

/// Limit of `gⁿ·F` for generic `F`: the flag of leading eigenspaces.
///
/// Runs orthogonal iteration with a power of `g` whose condition number
/// stays near 1e8, so every stage survives in floating point.
pub fn attracting_flag(g: &DMatrix<f64>, t: &FlagType) -> Result<Flag, FlagError> {
    if g.nrows() != t.d || g.ncols() != t.d {
        return Err(FlagError::InvalidType(format!("matrix is not {0}x{0}", t.d)));
    }
    check_eigen_gaps(g, t)?;
    let sv = singular_values(g);
    if sv[t.d - 1] <= 0.0 {
        return Err(FlagError::Singular);
    }
    let log_kappa = (sv[0] / sv[t.d - 1]).ln();
    let m = if log_kappa > 0.0 {
        ((18.0 / log_kappa).floor() as u32).clamp(1, 64)
    } else {
        1
    };
    let mut h = g / sv[0];
    for _ in 1..m {
        h = &h * (g / sv[0]);
    }
    let full = FlagType::full(t.d);
    let mut q = Flag::from_columns(generic_frame(t.d), full.clone())?;
    // stop at rounding level, or once the steps stop shrinking; badly
    // conditioned powers bottom out well above machine precision
    let mut best = f64::INFINITY;
    let mut stalled = 0;
    for _ in 0..20_000 {
        let next = act(&h, &q)?;
        let moved = flag_distance(&next, &q)?;
        q = next;
        if moved < 1e-14 {
            break;
        }
        if moved < best {
            best = moved;
            stalled = 0;
        } else {
            stalled += 1;
            if stalled > 8 {
                break;
            }
        }
    }
    q.with_type(t.clone())
}

/// Log singular-value gaps `log(σ_k / σ_{k+1})` at the dimensions of a type.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GapVector(pub Vec<f64>);

impl GapVector {
    pub fn min(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn singular_gaps(g: &DMatrix<f64>, t: &FlagType) -> GapVector {
    let s = singular_values(g);
    GapVector(
        t.dims
            .iter()
            .map(|&k| (s[k - 1] / s[k]).ln().max(0.0))
            .collect(),
    )
}

/// Finite net with an inflation radius; models the union of closed balls
/// of radius `r` around the net points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlagSet {
    pub label: String,
    #[serde(rename = "type")]
    pub ty: FlagType,
    pub r: f64,
    pub net: Vec<Flag>,
}

impl FlagSet {
    pub fn new(label: impl Into<String>, ty: FlagType, r: f64, net: Vec<Flag>) -> Result<Self, FlagError> {
        for f in &net {
            if f.ty != ty {
                return Err(FlagError::TypeMismatch(ty, f.ty.clone()));
            }
        }
        if !(r >= 0.0) {
            return Err(FlagError::InvalidType(format!("negative radius {r}")));
        }
        Ok(FlagSet {
            label: label.into(),
            ty,
            r,
            net,
        })
    }

    /// Image of the set under `g`; the radius is kept.
    pub fn image(&self, g: &DMatrix<f64>) -> Result<FlagSet, FlagError> {
        let net = self.net.iter().map(|f| act(g, f)).collect::<Result<_, _>>()?;
        Ok(FlagSet {
            label: self.label.clone(),
            ty: self.ty.clone(),
            r: self.r,
            net,
        })
    }

    /// Nearest net point and its distance.
    pub fn nearest(&self, f: &Flag) -> Result<(usize, f64), FlagError> {
        let mut best: Option<(usize, f64)> = None;
        for (i, p) in self.net.iter().enumerate() {
            let d = flag_distance(f, p)?;
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((i, d));
            }
        }
        best.ok_or(FlagError::EmptyNet)
    }
}

/// `r − min_p d(F, p)`.
pub fn set_membership_margin(s: &FlagSet, f: &Flag) -> Result<f64, FlagError> {
    if f.ty != s.ty {
        return Err(FlagError::TypeMismatch(s.ty.clone(), f.ty.clone()));
    }
    Ok(s.r - s.nearest(f)?.1)
}

/// Largest pairwise net distance plus `2r`.
pub fn set_diameter(s: &FlagSet) -> Result<f64, FlagError> {
    if s.net.is_empty() {
        return Err(FlagError::EmptyNet);
    }
    let mut diam = 0.0f64;
    for (i, p) in s.net.iter().enumerate() {
        for q in &s.net[i + 1..] {
            diam = diam.max(flag_distance(p, q)?);
        }
    }
    Ok(diam + 2.0 * s.r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

    fn line(theta: f64) -> Flag {
        let (s, c) = theta.sin_cos();
        let m = DMatrix::from_row_slice(2, 2, &[c, -s, s, c]);
        Flag::new(m, FlagType::new(2, vec![1]).unwrap()).unwrap()
    }

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&nalgebra::DVector::from_row_slice(v))
    }

    fn random_flag(rng: &mut ChaCha8Rng, ty: &FlagType) -> Flag {
        let d = ty.d;
        let m = DMatrix::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
        Flag::from_columns(m, ty.clone()).unwrap()
    }

    #[test]
    fn flag_type_validation() {
        assert!(FlagType::new(3, vec![2, 1]).is_err());
        assert!(FlagType::new(3, vec![0]).is_err());
        assert!(FlagType::new(3, vec![3]).is_err());
        let t: Result<FlagType, _> = serde_json::from_str(r#"{"d":3,"dims":[3]}"#);
        assert!(t.is_err());
    }

    #[test]
    fn opposition() {
        let t = FlagType::new(3, vec![1]).unwrap();
        assert_eq!(opposition_involution(&t).dims, vec![2]);
        assert!(FlagType::full(3).is_iota_invariant());
        assert!(FlagType::full(5).is_iota_invariant());
        assert!(!t.is_iota_invariant());
    }

    #[test]
    fn distances_between_lines() {
        assert_eq!(flag_distance(&line(0.3), &line(0.3)).unwrap(), 0.0);
        assert!((flag_distance(&line(0.0), &line(FRAC_PI_2)).unwrap() - 1.0).abs() < 1e-15);
        let d = flag_distance(&line(0.0), &line(FRAC_PI_4)).unwrap();
        assert!((d - FRAC_PI_4.sin()).abs() < 1e-15);
    }

    #[test]
    fn antipodality_of_standard_flags() {
        let t = FlagType::full(3);
        let e = Flag::standard(t.clone());
        let r = Flag::reversed(t.clone());
        assert!((antipodality_margin(&e, &r).unwrap() - 1.0).abs() < 1e-12);
        assert!(antipodality_margin(&e, &e).unwrap() < 1e-12);
        let l = Flag::standard(FlagType::new(3, vec![1]).unwrap());
        assert!(matches!(
            antipodality_margin(&l, &l),
            Err(FlagError::TypeMismatch(..))
        ));
    }

    #[test]
    fn action_examples() {
        let t = FlagType::full(3);
        let e = Flag::standard(t.clone());
        let g = act(&diag(&[2.0, 1.0, 0.5]), &e).unwrap();
        assert!(flag_distance(&g, &e).unwrap() < 1e-15);
        let rot = DMatrix::from_row_slice(2, 2, &[0.0, -1.0, 1.0, 0.0]);
        let img = act(&rot, &line(0.0)).unwrap();
        assert!(flag_distance(&img, &line(FRAC_PI_2)).unwrap() < 1e-15);
        assert_eq!(act(&DMatrix::zeros(3, 3), &e), Err(FlagError::Singular));
    }

    #[test]
    fn attracting_and_repelling_flags() {
        let t = FlagType::full(3);
        let g = diag(&[4.0, 1.0, 0.25]);
        let plus = attracting_flag(&g, &t).unwrap();
        assert!(flag_distance(&plus, &Flag::standard(t.clone())).unwrap() < 1e-12);
        let minus = attracting_flag(&g.clone().try_inverse().unwrap(), &t).unwrap();
        assert!(flag_distance(&minus, &Flag::reversed(t.clone())).unwrap() < 1e-12);
        let p = DMatrix::from_row_slice(3, 3, &[1.0, 2.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 3.0]);
        let conj = &p * &g * p.clone().try_inverse().unwrap();
        let expected = act(&p, &Flag::standard(t.clone())).unwrap();
        assert!(flag_distance(&attracting_flag(&conj, &t).unwrap(), &expected).unwrap() < 1e-10);
        assert!(matches!(
            attracting_flag(&diag(&[2.0, 2.0, 0.25]), &t),
            Err(FlagError::NoGap { dim: 1, .. })
        ));
        // a gap only at dimension 2 is enough for type {2}
        let t2 = FlagType::new(3, vec![2]).unwrap();
        assert!(attracting_flag(&diag(&[2.0, 2.0, 0.25]), &t2).is_ok());
    }

    #[test]
    fn gap_examples() {
        let t = FlagType::full(3);
        let g = singular_gaps(&diag(&[4.0, 1.0, 0.25]), &t);
        assert!((g.0[0] - 4f64.ln()).abs() < 1e-12 && (g.0[1] - 4f64.ln()).abs() < 1e-12);
        let rot = DMatrix::from_row_slice(2, 2, &[0.6, -0.8, 0.8, 0.6]);
        assert!(singular_gaps(&rot, &FlagType::full(2)).0[0].abs() < 1e-12);
        // closed form for 2x2: σ1² + σ2² = ‖m‖_F², σ1 σ2 = |det m|
        let m = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.0, 0.5]);
        let (fro2, det) = (4.0 + 1.0 + 0.25, 1.0f64);
        let s1 = ((fro2 + (fro2 * fro2 - 4.0 * det * det).sqrt()) / 2.0).sqrt();
        let s2 = det / s1;
        let gap = singular_gaps(&m, &FlagType::full(2)).0[0];
        assert!((gap - (s1 / s2).ln()).abs() < 1e-12);
    }

    #[test]
    fn sets() {
        let t = FlagType::new(2, vec![1]).unwrap();
        let s = FlagSet::new("S", t.clone(), 0.1, vec![line(0.0)]).unwrap();
        assert!((set_membership_margin(&s, &line(0.0)).unwrap() - 0.1).abs() < 1e-15);
        assert!(set_membership_margin(&s, &line(1.0)).unwrap() < 0.0);
        let edge = line(0.1f64.asin());
        assert!(set_membership_margin(&s, &edge).unwrap().abs() < 1e-15);
        let single = FlagSet::new("P", t.clone(), 0.0, vec![line(0.4)]).unwrap();
        assert_eq!(set_diameter(&single).unwrap(), 0.0);
        let pair = FlagSet::new("Q", t.clone(), 0.0, vec![line(0.0), line(FRAC_PI_2)]).unwrap();
        assert!((set_diameter(&pair).unwrap() - 1.0).abs() < 1e-15);
        let empty = FlagSet::new("E", t, 0.0, vec![]).unwrap();
        assert_eq!(set_diameter(&empty), Err(FlagError::EmptyNet));
    }

    #[test]
    fn serde_round_trip() {
        let t = FlagType::full(3);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = FlagSet::new("A", t.clone(), 0.05, vec![random_flag(&mut rng, &t)]).unwrap();
        let json = serde_json::to_string(&s).unwrap();
        let back: FlagSet = serde_json::from_str(&json).unwrap();
        assert!(flag_distance(&back.net[0], &s.net[0]).unwrap() < 1e-15);
        assert_eq!(back.r, 0.05);
    }

    proptest! {
        #[test]
        fn metric_axioms(seed in any::<u64>()) {
            let t = FlagType::full(4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f, g, h) = (random_flag(&mut rng, &t), random_flag(&mut rng, &t), random_flag(&mut rng, &t));
            let fg = flag_distance(&f, &g).unwrap();
            prop_assert_eq!(fg, flag_distance(&g, &f).unwrap());
            prop_assert!(fg <= flag_distance(&f, &h).unwrap() + flag_distance(&h, &g).unwrap() + 1e-12);
            prop_assert!((0.0..=1.0).contains(&fg));
        }

        #[test]
        fn closed_forms_match_direct_svd(seed in any::<u64>(), d in 2usize..6) {
            let t = FlagType::full(d);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f, g) = (random_flag(&mut rng, &t), random_flag(&mut rng, &t));
            let mut dist = 0.0f64;
            let mut margin = f64::INFINITY;
            for k in 1..d {
                let u = f.subspace(k);
                let p = g.subspace(k) - &u * (u.transpose() * g.subspace(k));
                dist = dist.max(p.singular_values().max());
                let mut m = DMatrix::zeros(d, d);
                m.columns_mut(0, k).copy_from(&u);
                m.columns_mut(k, d - k).copy_from(&g.subspace(d - k));
                margin = margin.min(m.singular_values().min());
            }
            prop_assert!((flag_distance(&f, &g).unwrap() - dist).abs() < 1e-10);
            prop_assert!((antipodality_margin(&f, &g).unwrap() - margin).abs() < 1e-10);
        }

        #[test]
        fn antipodality_is_invariant_in_sign(seed in any::<u64>()) {
            let t = FlagType::full(3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (f, g) = (random_flag(&mut rng, &t), random_flag(&mut rng, &t));
            let h = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let before = antipodality_margin(&f, &g).unwrap();
            let (hf, hg) = (act(&h, &f).unwrap(), act(&h, &g).unwrap());
            if before > 1e-6 {
                prop_assert!(antipodality_margin(&hf, &hg).unwrap() > 0.0);
            }
            prop_assert!(antipodality_margin(&hf, &hf).unwrap() < 1e-7);
        }

        #[test]
        fn action_is_a_group_action(seed in any::<u64>()) {
            let t = FlagType::full(3);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let f = random_flag(&mut rng, &t);
            let g = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let h = DMatrix::from_fn(3, 3, |_, _| rng.gen_range(-1.0..1.0));
            let lhs = act(&(&g * &h), &f).unwrap();
            let rhs = act(&g, &act(&h, &f).unwrap()).unwrap();
            prop_assert!(flag_distance(&lhs, &rhs).unwrap() < 1e-6);
        }

        #[test]
        fn gaps_of_inverse_are_reindexed(seed in any::<u64>()) {
            let t = FlagType::full(4);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let g = DMatrix::from_fn(4, 4, |_, _| rng.gen_range(-1.0..1.0));
            let Some(ginv) = g.clone().try_inverse() else { return Ok(()); };
            let a = singular_gaps(&g, &t).0;
            let b = singular_gaps(&ginv, &t).0;
            for i in 0..3 {
                prop_assert!((a[i] - b[2 - i]).abs() < 1e-6 * (1.0 + a[i].abs()));
            }
        }
    }
}
