//! Matrix representations: word evaluation, the symmetric-power lift, the
//! genus-2 octagon group, loxodromic axes, centralizer charts and bending.

mod limit;

pub use limit::{
    arc_split, limit_set_sample, limit_set_sample_with_shadows, split_circle, Arc, Endpoint,
    LimitPoint, LimitSetSample,
};

use std::f64::consts::PI;

use nalgebra::{Complex, DMatrix, DVector, Matrix2};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::{matrix_from_entries, matrix_to_entries, GroupMatrix, MatrixEntry};
use crate::flags::{antipodality_margin, attracting_flag, eigenvalue_moduli, opposition_involution, Flag, FlagError, FlagType};
use crate::numeric::POLICY;
use crate::words::{AnyPresentation, Element, FactorTag, GenWord, Word, WordError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RepError {
    #[error("generator {0:?} is not bound")]
    UnboundGenerator(String),
    #[error("bending element does not commute with the edge element (defect {0:e})")]
    NotInCentralizer(f64),
    #[error("no circular order: {0}")]
    OrderUnavailable(String),
    #[error("invalid representation: {0}")]
    Invalid(String),
    #[error(transparent)]
    Flag(#[from] FlagError),
    #[error(transparent)]
    Word(#[from] WordError),
}

/// Named generators mapped to `d×d` matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "RepRepr", try_from = "RepRepr")]
pub struct MatrixRep {
    pub names: Vec<String>,
    pub matrices: Vec<GroupMatrix>,
    floats: Vec<DMatrix<f64>>,
    inverses: Vec<DMatrix<f64>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct NamedMatrix {
    name: String,
    matrix: Vec<Vec<MatrixEntry>>,
}

#[derive(Clone, Serialize, Deserialize)]
struct RepRepr {
    generators: Vec<NamedMatrix>,
}

impl From<MatrixRep> for RepRepr {
    fn from(r: MatrixRep) -> Self {
        RepRepr {
            generators: r
                .names
                .iter()
                .zip(&r.matrices)
                .map(|(name, m)| NamedMatrix {
                    name: name.clone(),
                    matrix: matrix_to_entries(m),
                })
                .collect(),
        }
    }
}

impl TryFrom<RepRepr> for MatrixRep {
    type Error = RepError;

    fn try_from(r: RepRepr) -> Result<Self, RepError> {
        let mut names = Vec::new();
        let mut matrices = Vec::new();
        for g in r.generators {
            matrices.push(matrix_from_entries(&g.matrix).map_err(RepError::Invalid)?);
            names.push(g.name);
        }
        MatrixRep::new(names, matrices)
    }
}

impl MatrixRep {
    pub fn new(names: Vec<String>, matrices: Vec<GroupMatrix>) -> Result<Self, RepError> {
        if names.len() != matrices.len() || names.is_empty() {
            return Err(RepError::Invalid("need one matrix per generator name".into()));
        }
        let d = matrices[0].dim();
        let mut floats = Vec::new();
        let mut inverses = Vec::new();
        for (name, m) in names.iter().zip(&matrices) {
            if m.dim() != d {
                return Err(RepError::Invalid(format!("{name} is not {d}x{d}")));
            }
            let f = m.to_f64();
            let det = f.determinant();
            if (det.abs() - 1.0).abs() > 1e-8 {
                return Err(RepError::Invalid(format!("det {name} = {det}, expected ±1")));
            }
            inverses.push(f.clone().try_inverse().expect("unimodular"));
            floats.push(f);
        }
        Ok(MatrixRep {
            names,
            matrices,
            floats,
            inverses,
        })
    }

    pub fn from_floats(names: &[&str], matrices: Vec<DMatrix<f64>>) -> Result<Self, RepError> {
        MatrixRep::new(
            names.iter().map(|s| s.to_string()).collect(),
            matrices.into_iter().map(GroupMatrix::Float).collect(),
        )
    }

    pub fn d(&self) -> usize {
        self.floats[0].nrows()
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn is_exact(&self) -> bool {
        self.matrices.iter().all(GroupMatrix::is_exact)
    }

    pub fn index(&self, name: &str) -> Result<usize, RepError> {
        self.names
            .iter()
            .position(|n| n == name)
            .ok_or_else(|| RepError::UnboundGenerator(name.to_string()))
    }

    pub fn generator(&self, name: &str) -> Result<&DMatrix<f64>, RepError> {
        Ok(&self.floats[self.index(name)?])
    }

    /// Floating product of a word in this representation's own generators.
    pub fn evaluate(&self, w: &GenWord) -> DMatrix<f64> {
        let d = self.d();
        let mut acc = DMatrix::identity(d, d);
        for l in w.letters() {
            let g = if l.inv {
                &self.inverses[l.gen as usize]
            } else {
                &self.floats[l.gen as usize]
            };
            acc *= g;
        }
        acc
    }

    /// Exact product when every generator is rational.
    pub fn evaluate_exact(&self, w: &GenWord) -> GroupMatrix {
        let mut acc = GroupMatrix::identity(self.d(), self.is_exact());
        for l in w.letters() {
            let g = &self.matrices[l.gen as usize];
            acc = if l.inv {
                acc.mul(&g.inverse().expect("unimodular"))
            } else {
                acc.mul(g)
            };
        }
        acc
    }

    /// Rewrites a factor word into this representation's generators by name.
    pub fn translate(&self, w: &GenWord, names: &[String]) -> Result<GenWord, RepError> {
        let mut out = Vec::with_capacity(w.len());
        for l in w.letters() {
            let name = names
                .get(l.gen as usize)
                .ok_or_else(|| RepError::UnboundGenerator(format!("x{}", l.gen + 1)))?;
            out.push(crate::words::Letter {
                gen: self.index(name)? as u16,
                inv: l.inv,
            });
        }
        Ok(GenWord(out))
    }

    /// Rewrites a syllable word of a presentation into this representation's
    /// generators, matching factor generators and the stable letter by name.
    pub fn flatten<'a>(
        &self,
        w: &Word,
        p: impl Into<AnyPresentation<'a>>,
    ) -> Result<GenWord, RepError> {
        let p = p.into();
        let mut out = GenWord::empty();
        for s in &w.syllables {
            let piece = match (&s.element, s.factor, p) {
                (Element::Word(word), FactorTag::A | FactorTag::B, AnyPresentation::Amalgam(ap)) => {
                    self.translate(word, &ap.factor(s.factor).names)?
                }
                (Element::Word(word), FactorTag::M, AnyPresentation::Hnn(hp)) => {
                    self.translate(word, &hp.m.names)?
                }
                (Element::Exponent(e), FactorTag::StableLetter, AnyPresentation::Hnn(hp)) => {
                    let f = GenWord::gen(self.index(&hp.stable_name)? as u16);
                    f.pow(*e as i64)
                }
                _ => {
                    return Err(RepError::Invalid(format!(
                        "{:?} syllable does not fit the presentation",
                        s.factor
                    )))
                }
            };
            out = out.mul(&piece);
        }
        Ok(out)
    }

    pub fn evaluate_word<'a>(
        &self,
        w: &Word,
        p: impl Into<AnyPresentation<'a>>,
    ) -> Result<DMatrix<f64>, RepError> {
        Ok(self.evaluate(&self.flatten(w, p)?))
    }

    /// Generator-wise symmetric-power lift to dimension `d`.
    pub fn lift(&self, d: usize) -> MatrixRep {
        MatrixRep::new(
            self.names.clone(),
            self.floats
                .iter()
                .map(|m| GroupMatrix::Float(sym_power_lift(m, d)))
                .collect(),
        )
        .expect("lift of a unimodular 2x2 matrix is unimodular")
    }

    /// Same names, with some generators replaced.
    pub fn with_generators(&self, replace: &[(usize, DMatrix<f64>)]) -> Result<MatrixRep, RepError> {
        let mut matrices = self.matrices.clone();
        for (i, m) in replace {
            matrices[*i] = GroupMatrix::Float(m.clone());
        }
        MatrixRep::new(self.names.clone(), matrices)
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Coefficients of `(px + qy)^n` in the basis `x^n, x^(n-1) y, …, y^n`.
fn linear_power(p: f64, q: f64, n: usize) -> Vec<f64> {
    (0..=n)
        .map(|j| binomial(n, j) * p.powi((n - j) as i32) * q.powi(j as i32))
        .collect()
}

fn poly_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// Action of `m = [[a,b],[c,d]]` on homogeneous polynomials of degree `d−1`
/// by `p(x,y) ↦ p(ax + cy, bx + dy)`, in the monomial basis
/// `x^(d−1), x^(d−2) y, …, y^(d−1)`.
pub fn sym_power_lift(m: &DMatrix<f64>, d: usize) -> DMatrix<f64> {
    assert!(m.nrows() == 2 && m.ncols() == 2 && d >= 1, "lift needs a 2x2 matrix");
    let n = d - 1;
    let (a, b, c, dd) = (m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    let mut out = DMatrix::zeros(d, d);
    for j in 0..d {
        let col = poly_mul(&linear_power(a, c, n - j), &linear_power(b, dd, j));
        for (i, v) in col.into_iter().enumerate() {
            out[(i, j)] = v;
        }
    }
    out
}

/// Side length of the regular octagon with interior angles π/4.
fn octagon_side() -> f64 {
    (1.0 / (PI / 8.0).tan()).acosh()
}

/// Isometry of the disc model pairing side `i` of the octagon with side `j`,
/// transported to the upper half-plane.
fn side_pairing(i: usize, j: usize) -> DMatrix<f64> {
    let ell = octagon_side();
    let rot = |t: f64| {
        Matrix2::new(
            Complex::from_polar(1.0, t / 2.0),
            Complex::new(0.0, 0.0),
            Complex::new(0.0, 0.0),
            Complex::from_polar(1.0, -t / 2.0),
        )
    };
    let (ch, sh) = (Complex::new(ell.cosh(), 0.0), Complex::new(ell.sinh(), 0.0));
    let t = Matrix2::new(ch, sh, sh, ch);
    let one = Complex::new(1.0, 0.0);
    let i_ = Complex::new(0.0, 1.0);
    let k = Matrix2::new(one, -i_, one, i_);
    let kinv = k.try_inverse().expect("Cayley transform");
    let step = PI / 4.0;
    let g = kinv * rot(j as f64 * step) * t * rot(PI - i as f64 * step) * k;
    DMatrix::from_fn(2, 2, |r, c| g[(r, c)].re)
}

/// Fuchsian genus-2 surface group in `SL(2,R)` from the regular octagon;
/// `[a1,b1][a2,b2] = ±I`.
pub fn fuchsian_genus2() -> MatrixRep {
    MatrixRep::from_floats(
        &["a1", "b1", "a2", "b2"],
        vec![
            side_pairing(2, 0),
            side_pairing(1, 3),
            side_pairing(6, 4),
            side_pairing(5, 7),
        ],
    )
    .expect("side pairings lie in SL(2,R)")
}

pub fn commutator(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let xi = x.clone().try_inverse().expect("invertible");
    let yi = y.clone().try_inverse().expect("invertible");
    x * y * xi * yi
}

/// Attracting and repelling flags of a loxodromic element.
#[derive(Clone, Debug, Serialize)]
pub struct LoxodromicData {
    pub element: Vec<Vec<f64>>,
    pub plus: Flag,
    pub minus: Flag,
    pub moduli: Vec<f64>,
}

pub fn axis_flags(g: &DMatrix<f64>, t: &FlagType) -> Result<LoxodromicData, RepError> {
    let plus = attracting_flag(g, t)?;
    let ginv = g.clone().try_inverse().ok_or(FlagError::Singular)?;
    let minus = attracting_flag(&ginv, &opposition_involution(t))?;
    let margin = antipodality_margin(&plus, &minus)?;
    if margin <= 0.0 {
        return Err(RepError::Invalid("axis flags are not antipodal".into()));
    }
    Ok(LoxodromicData {
        element: g.row_iter().map(|r| r.iter().copied().collect()).collect(),
        plus,
        minus,
        moduli: eigenvalue_moduli(g),
    })
}

/// `s ↦ P·diag(e^{s_1}, …, e^{s_{d−1}}, e^{−Σs})·P⁻¹`, the identity component
/// of the centralizer of a loxodromic `η` with real simple spectrum.
#[derive(Clone, Debug)]
pub struct CentralizerChart {
    pub eta: DMatrix<f64>,
    pub p: DMatrix<f64>,
    p_inv: DMatrix<f64>,
}

impl CentralizerChart {
    pub fn new(eta: &DMatrix<f64>) -> Result<Self, RepError> {
        let d = eta.nrows();
        let mut eig: Vec<Complex<f64>> = eta.complex_eigenvalues().iter().copied().collect();
        if eig.iter().any(|z| z.im.abs() > 1e-9 * (1.0 + z.norm())) {
            return Err(RepError::Invalid("edge element has non-real eigenvalues".into()));
        }
        eig.sort_by(|a, b| b.norm().total_cmp(&a.norm()));
        for w in eig.windows(2) {
            if (w[0].norm() / w[1].norm()).ln() <= POLICY.gap_floor {
                return Err(FlagError::NoGap { dim: 0, gap: 0.0 }.into());
            }
        }
        let mut p = DMatrix::zeros(d, d);
        for (j, z) in eig.iter().enumerate() {
            let shifted = eta - DMatrix::identity(d, d) * z.re;
            let svd = shifted.svd(false, true);
            let vt = svd.v_t.expect("requested");
            let (k, _) = svd
                .singular_values
                .iter()
                .enumerate()
                .min_by(|a, b| a.1.total_cmp(b.1))
                .expect("nonempty");
            p.set_column(j, &vt.row(k).transpose());
        }
        let p_inv = p.clone().try_inverse().ok_or(FlagError::Singular)?;
        Ok(CentralizerChart {
            eta: eta.clone(),
            p,
            p_inv,
        })
    }

    pub fn element(&self, s: &[f64]) -> DMatrix<f64> {
        let d = self.eta.nrows();
        assert_eq!(s.len(), d - 1, "chart has dimension d-1");
        let mut diag: Vec<f64> = s.iter().map(|x| x.exp()).collect();
        diag.push((-s.iter().sum::<f64>()).exp());
        &self.p * DMatrix::from_diagonal(&DVector::from_vec(diag)) * &self.p_inv
    }
}

/// How a bending deformation modifies the generators.
#[derive(Clone, Debug)]
pub enum BendStructure {
    /// `ρ_t(β) = t ρ(β) t⁻¹` on the listed `Γ_B` generators.
    Amalgam { b_generators: Vec<String>, eta: DMatrix<f64> },
    /// `ρ_t(f) = ρ(f)·t` on the stable letter.
    Hnn { stable: String, eta: DMatrix<f64> },
}

pub fn centralizer_defect(t: &DMatrix<f64>, eta: &DMatrix<f64>) -> f64 {
    (t * eta - eta * t).amax() / (t.amax() * eta.amax())
}

pub fn bend(rep: &MatrixRep, structure: &BendStructure, t: &DMatrix<f64>) -> Result<MatrixRep, RepError> {
    let eta = match structure {
        BendStructure::Amalgam { eta, .. } | BendStructure::Hnn { eta, .. } => eta,
    };
    let defect = centralizer_defect(t, eta);
    if defect > POLICY.float_compare {
        return Err(RepError::NotInCentralizer(defect));
    }
    let t_inv = t.clone().try_inverse().ok_or(FlagError::Singular)?;
    match structure {
        BendStructure::Amalgam { b_generators, .. } => {
            let mut replace = Vec::new();
            for name in b_generators {
                let i = rep.index(name)?;
                replace.push((i, t * rep.generator(name)? * &t_inv));
            }
            rep.with_generators(&replace)
        }
        BendStructure::Hnn { stable, .. } => {
            let i = rep.index(stable)?;
            rep.with_generators(&[(i, rep.generator(stable)? * t)])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flags::{act, flag_distance};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn m2(a: f64, b: f64, c: f64, d: f64) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[a, b, c, d])
    }

    #[test]
    fn lift_examples() {
        let m = m2(0.3, 1.2, -0.7, 2.0);
        assert_eq!(sym_power_lift(&m, 2), m);
        let l = sym_power_lift(&m2(3.0, 0.0, 0.0, 1.0 / 3.0), 3);
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![9.0, 1.0, 1.0 / 9.0]));
        assert!((l - expected).amax() < 1e-14);
        // (x, y) ↦ (x, x + y): x² ↦ x², xy ↦ x² + xy, y² ↦ x² + 2xy + y²
        let u = sym_power_lift(&m2(1.0, 1.0, 0.0, 1.0), 3);
        assert_eq!(u, DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 1.0, 0.0, 1.0, 2.0, 0.0, 0.0, 1.0]));
    }

    #[test]
    fn lift_is_multiplicative() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for d in 2..=5 {
            for _ in 0..50 {
                let x = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-2.0..2.0));
                let y = DMatrix::from_fn(2, 2, |_, _| rng.gen_range(-2.0..2.0));
                let lhs = sym_power_lift(&(&x * &y), d);
                let rhs = sym_power_lift(&x, d) * sym_power_lift(&y, d);
                assert!((lhs - rhs).amax() < 1e-10);
            }
        }
    }

    #[test]
    fn octagon_group() {
        let rep = fuchsian_genus2();
        let g = |n: &str| rep.generator(n).unwrap().clone();
        let rel = commutator(&g("a1"), &g("b1")) * commutator(&g("a2"), &g("b2"));
        let id = DMatrix::identity(2, 2);
        let residual = (&rel - &id).amax().min((&rel + &id).amax());
        assert!(residual < 1e-9, "relator residual {residual}");
        for m in &rep.floats {
            assert!(m.trace().abs() > 2.0);
            assert!((m.determinant() - 1.0).abs() < 1e-12);
        }
        assert!(commutator(&g("a1"), &g("b1")).trace().abs() > 2.0);
    }

    #[test]
    fn axis_examples() {
        let t = FlagType::full(3);
        let g = DMatrix::from_diagonal(&DVector::from_vec(vec![4.0, 1.0, 0.25]));
        let data = axis_flags(&g, &t).unwrap();
        assert!(flag_distance(&data.plus, &Flag::standard(t.clone())).unwrap() < 1e-12);
        assert!(flag_distance(&data.minus, &Flag::reversed(t.clone())).unwrap() < 1e-12);
        let h = sym_power_lift(&m2(2.0, 1.0, 1.0, 1.0), 3);
        let data = axis_flags(&h, &t).unwrap();
        for f in [&data.plus, &data.minus] {
            assert!(flag_distance(&act(&h, f).unwrap(), f).unwrap() < 1e-8);
        }
        // moduli are λ², 1, λ⁻² for the 2x2 eigenvalue λ
        let lambda = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((data.moduli[0] - lambda * lambda).abs() < 1e-9);
        assert!((data.moduli[1] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn centralizer_and_bending() {
        let rep = fuchsian_genus2().lift(3);
        let eta = commutator(rep.generator("a1").unwrap(), rep.generator("b1").unwrap());
        let chart = CentralizerChart::new(&eta).unwrap();
        let t = chart.element(&[0.3, -0.1]);
        assert!(centralizer_defect(&t, &eta) < 1e-12);
        assert!((t.determinant() - 1.0).abs() < 1e-10);
        let structure = BendStructure::Amalgam {
            b_generators: vec!["a2".into(), "b2".into()],
            eta: eta.clone(),
        };
        let same = bend(&rep, &structure, &DMatrix::identity(3, 3)).unwrap();
        assert_eq!(same.floats, rep.floats);
        let bent = bend(&rep, &structure, &t).unwrap();
        let eta_b = commutator(bent.generator("a2").unwrap(), bent.generator("b2").unwrap());
        let eta_b0 = commutator(rep.generator("a2").unwrap(), rep.generator("b2").unwrap());
        assert!((eta_b - eta_b0).amax() < 1e-9);
        assert_eq!(bent.generator("a1").unwrap(), rep.generator("a1").unwrap());
        let not_central = DMatrix::from_row_slice(3, 3, &[1.0, 1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0]);
        assert!(matches!(
            bend(&rep, &structure, &not_central),
            Err(RepError::NotInCentralizer(_))
        ));
        let hnn = BendStructure::Hnn {
            stable: "b1".into(),
            eta: rep.generator("a1").unwrap().clone(),
        };
        let ta = CentralizerChart::new(rep.generator("a1").unwrap()).unwrap().element(&[0.2, 0.1]);
        let bent = bend(&rep, &hnn, &ta).unwrap();
        assert_eq!(bent.generator("b1").unwrap(), &(rep.generator("b1").unwrap() * &ta));
    }

    #[test]
    fn serde_round_trip() {
        let rep = fuchsian_genus2();
        let json = serde_json::to_string(&rep).unwrap();
        let back: MatrixRep = serde_json::from_str(&json).unwrap();
        assert_eq!(back, rep);
        let bad = r#"{"generators":[{"name":"x","matrix":[[2,0],[0,2]]}]}"#;
        assert!(serde_json::from_str::<MatrixRep>(bad).is_err());
    }
}
