use std::f64::consts::FRAC_PI_4;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::CertifyError;
use crate::exact::GroupMatrix;
use crate::flags::{flag_distance, Flag, FlagSet, FlagType};
use crate::numeric::POLICY;
use crate::reps::{
    arc_split, commutator, fuchsian_genus2, limit_set_sample_with_shadows, split_circle, Arc,
    Endpoint, MatrixRep,
};
use crate::words::{AmalgamPresentation, Factor, FactorKind, GenWord, HnnPresentation, Subgroup};

#[derive(Clone, Debug)]
pub struct PairScene {
    pub presentation: AmalgamPresentation,
    pub rep: MatrixRep,
    pub a: FlagSet,
    pub b: FlagSet,
    pub depth: usize,
    pub margin: f64,
    pub seed: u64,
    pub relaxed: bool,
}

#[derive(Clone, Debug)]
pub struct TripleScene {
    pub presentation: HnnPresentation,
    pub rep: MatrixRep,
    pub a: FlagSet,
    pub b_plus: FlagSet,
    pub b_minus: FlagSet,
    pub depth: usize,
    pub margin: f64,
    pub seed: u64,
    pub relaxed: bool,
}

#[derive(Clone, Copy, Debug)]
pub enum SceneRef<'a> {
    Pair(&'a PairScene),
    Triple(&'a TripleScene),
}

fn check_sets(rep: &MatrixRep, sets: &[&FlagSet]) -> Result<(), CertifyError> {
    let ty = &sets[0].ty;
    if !ty.is_iota_invariant() {
        return Err(CertifyError::SceneInvalid(format!(
            "flag type {:?} is not invariant under the opposition involution",
            ty.dims
        )));
    }
    if ty.d != rep.d() {
        return Err(CertifyError::SceneInvalid(format!(
            "flag type has d = {} but the representation has d = {}",
            ty.d,
            rep.d()
        )));
    }
    for s in sets {
        if s.ty != *ty {
            return Err(CertifyError::SceneInvalid(format!("set {} has a different flag type", s.label)));
        }
        if s.net.is_empty() {
            return Err(CertifyError::SceneInvalid(format!("set {} has an empty net", s.label)));
        }
    }
    Ok(())
}

fn check_names(rep: &MatrixRep, names: &[String]) -> Result<(), CertifyError> {
    for n in names {
        rep.index(n)?;
    }
    Ok(())
}

impl PairScene {
    pub fn validate(&self) -> Result<(), CertifyError> {
        check_sets(&self.rep, &[&self.a, &self.b])?;
        check_names(&self.rep, &self.presentation.a.names)?;
        check_names(&self.rep, &self.presentation.b.names)
    }

    pub fn with_rep(&self, rep: MatrixRep) -> Self {
        PairScene { rep, ..self.clone() }
    }

    pub fn with_depth(&self, depth: usize) -> Self {
        PairScene { depth, ..self.clone() }
    }
}

impl TripleScene {
    pub fn validate(&self) -> Result<(), CertifyError> {
        check_sets(&self.rep, &[&self.a, &self.b_plus, &self.b_minus])?;
        check_names(&self.rep, &self.presentation.m.names)?;
        check_names(&self.rep, std::slice::from_ref(&self.presentation.stable_name))
    }

    pub fn with_rep(&self, rep: MatrixRep) -> Self {
        TripleScene { rep, ..self.clone() }
    }

    pub fn with_depth(&self, depth: usize) -> Self {
        TripleScene { depth, ..self.clone() }
    }
}

impl SceneRef<'_> {
    pub fn rep(&self) -> &MatrixRep {
        match self {
            SceneRef::Pair(s) => &s.rep,
            SceneRef::Triple(s) => &s.rep,
        }
    }

    pub fn margin(&self) -> f64 {
        match self {
            SceneRef::Pair(s) => s.margin,
            SceneRef::Triple(s) => s.margin,
        }
    }
}

/// How a net is thinned out of an arc of the limit sample.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetParams {
    /// Minimum distance between consecutive kept points.
    pub spacing: f64,
    /// Points closer than `trim · s_max` to an arc endpoint are dropped.
    pub trim: f64,
    /// `r = inflation · s_max`.
    pub inflation: f64,
}

impl Default for NetParams {
    fn default() -> Self {
        NetParams {
            spacing: 0.05,
            trim: 1.5,
            inflation: 2.0,
        }
    }
}

/// Greedy net along an arc and its largest consecutive spacing `s_max`.
pub fn arc_net(arc: &Arc, params: &NetParams) -> Result<(Vec<Flag>, f64), CertifyError> {
    let mut kept: Vec<Flag> = Vec::new();
    for p in &arc.points {
        match kept.last() {
            Some(last) if flag_distance(last, &p.flag)? < params.spacing => {}
            _ => kept.push(p.flag.clone()),
        }
    }
    if kept.len() < 2 {
        return Err(CertifyError::SceneInvalid(format!(
            "arc holds {} sample points at spacing {}",
            kept.len(),
            params.spacing
        )));
    }
    let mut s_max = 0.0f64;
    for w in kept.windows(2) {
        s_max = s_max.max(flag_distance(&w[0], &w[1])?);
    }
    let cut = params.trim * s_max;
    let mut net = Vec::new();
    for f in kept {
        if flag_distance(&f, &arc.from.flag)? >= cut && flag_distance(&f, &arc.to.flag)? >= cut {
            net.push(f);
        }
    }
    if net.is_empty() {
        return Err(CertifyError::SceneInvalid("trimming removed the whole arc".into()));
    }
    Ok((net, s_max))
}

fn set_from_arcs(label: &str, arcs: &[&Arc], params: &NetParams, ty: &FlagType) -> Result<FlagSet, CertifyError> {
    let mut net = Vec::new();
    let mut s_max = 0.0f64;
    for arc in arcs {
        let (n, s) = arc_net(arc, params)?;
        net.extend(n);
        s_max = s_max.max(s);
    }
    Ok(FlagSet::new(label, ty.clone(), params.inflation * s_max, net)?)
}

/// Grid net around each `center·F_std`: flags of `center·N` for strictly
/// lower triangular `N` with entries on `n` equally spaced values in
/// `[−c, c]`. The radius is `inflation` times the largest nearest-neighbour
/// spacing.
pub fn ball_net(
    label: &str,
    centers: &[DMatrix<f64>],
    c: f64,
    n: usize,
    inflation: f64,
    ty: &FlagType,
) -> Result<FlagSet, CertifyError> {
    let d = ty.d;
    let slots: Vec<(usize, usize)> = (0..d).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    let values: Vec<f64> = if n <= 1 {
        vec![0.0]
    } else {
        (0..n).map(|k| -c + 2.0 * c * k as f64 / (n - 1) as f64).collect()
    };
    let mut net = Vec::new();
    for center in centers {
        let total = values.len().pow(slots.len() as u32);
        for mut code in 0..total {
            let mut m = DMatrix::identity(d, d);
            for &(i, j) in &slots {
                m[(i, j)] = values[code % values.len()];
                code /= values.len();
            }
            net.push(Flag::from_columns(center * m, ty.clone())?);
        }
    }
    let mut spacing = 0.0f64;
    for (i, p) in net.iter().enumerate() {
        let mut nearest = f64::INFINITY;
        for (j, q) in net.iter().enumerate() {
            if i != j {
                nearest = nearest.min(flag_distance(p, q)?);
            }
        }
        if nearest.is_finite() {
            spacing = spacing.max(nearest);
        }
    }
    Ok(FlagSet::new(label, ty.clone(), inflation * spacing, net)?)
}

fn rotation(theta: f64) -> DMatrix<f64> {
    let (s, c) = theta.sin_cos();
    DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
}

fn float_factor(rep: &MatrixRep, names: &[&str], projective: bool) -> Result<Factor, CertifyError> {
    let matrices = names
        .iter()
        .map(|n| Ok(GroupMatrix::Float(rep.generator(n)?.clone())))
        .collect::<Result<Vec<_>, CertifyError>>()?;
    Ok(Factor::new(
        names.iter().map(|s| s.to_string()).collect(),
        matrices,
        FactorKind::Free,
        projective,
    )?)
}

/// Free product `⟨g⟩ ⋆ ⟨h⟩` in `SL(2,R)` with `g = diag(4, 1/4)` and `h` its
/// rotation by `π/4`; `A` is a pair of arcs around the axis of `g`, `B`
/// around the axis of `h`.
pub fn schottky_scene() -> PairScene {
    let g = DMatrix::from_row_slice(2, 2, &[4.0, 0.0, 0.0, 0.25]);
    let h = rotation(FRAC_PI_4) * &g * rotation(-FRAC_PI_4);
    let rep = MatrixRep::from_floats(&["g", "h"], vec![g, h]).expect("unimodular");
    let ty = FlagType::full(2);
    let (c, n) = (0.3f64.tan(), 31);
    let around = |angles: [f64; 2]| angles.map(rotation);
    let a = ball_net("A", &around([0.0, 2.0 * FRAC_PI_4]), c, n, 2.0, &ty).expect("valid net");
    let b = ball_net("B", &around([FRAC_PI_4, 3.0 * FRAC_PI_4]), c, n, 2.0, &ty).expect("valid net");
    let fa = float_factor(&rep, &["g"], true).expect("bound");
    let fb = float_factor(&rep, &["h"], true).expect("bound");
    let presentation =
        AmalgamPresentation::new(fa, fb, Subgroup::trivial(), Subgroup::trivial()).expect("trivial edge group");
    PairScene {
        presentation,
        rep,
        a,
        b,
        depth: 4,
        margin: POLICY.membership_margin,
        seed: 0,
        relaxed: false,
    }
}

/// `⟨f⟩` with `f = diag(4, 1, 1/4)` as an HNN extension of the trivial
/// group: `B_±` are grid balls around the standard and reversed flags, `A` a
/// small ball around the flag `⟨(1,0,1)⟩ ⊂ ⟨(1,0,1), e_2⟩`.
pub fn cyclic_triple_scene() -> TripleScene {
    let f = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0, 0.25]));
    let rep = MatrixRep::from_floats(&["f"], vec![f.clone()]).expect("unimodular");
    let ty = FlagType::full(3);
    let reversal = DMatrix::from_row_slice(3, 3, &[0.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0]);
    let middle = DMatrix::from_row_slice(3, 3, &[1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 1.0, 0.0, -1.0]);
    let a = ball_net("A", &[middle], 0.03, 5, 2.0, &ty).expect("valid net");
    let b_plus = ball_net("B+", &[DMatrix::identity(3, 3)], 0.12, 5, 2.0, &ty).expect("valid net");
    let b_minus = ball_net("B-", &[reversal], 0.12, 5, 2.0, &ty).expect("valid net");
    let m = Factor::new(vec![], vec![], FactorKind::Free, false).expect("trivial group");
    let presentation =
        HnnPresentation::new(m, GroupMatrix::Float(f), "f", Subgroup::trivial(), Subgroup::trivial())
            .expect("trivial associated subgroups");
    TripleScene {
        presentation,
        rep,
        a,
        b_plus,
        b_minus,
        depth: 4,
        margin: POLICY.membership_margin,
        seed: 0,
        relaxed: false,
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Genus2Params {
    /// Dimension of the symmetric-power lift.
    pub d: usize,
    /// Word length of the limit sample the arcs are cut from.
    pub sample_depth: usize,
    pub net: NetParams,
    /// Factor-word length `L` for the certificate.
    pub depth: usize,
    pub margin: f64,
    pub seed: u64,
    pub relaxed: bool,
}

impl Genus2Params {
    pub fn amalgam() -> Self {
        Genus2Params {
            d: 3,
            sample_depth: 5,
            net: NetParams::default(),
            depth: 4,
            margin: POLICY.membership_margin,
            seed: 0,
            relaxed: false,
        }
    }

    pub fn hnn() -> Self {
        Genus2Params {
            net: NetParams {
                spacing: 0.03,
                ..NetParams::default()
            },
            ..Genus2Params::amalgam()
        }
    }
}

/// `F(a1,b1) ⋆ F(a2,b2)` amalgamated along `[a1,b1] = [a2,b2]^-1`.
pub fn genus2_amalgam_presentation(rep: &MatrixRep) -> Result<AmalgamPresentation, CertifyError> {
    let a = float_factor(rep, &["a1", "b1"], true)?;
    let b = float_factor(rep, &["a2", "b2"], true)?;
    Ok(AmalgamPresentation::new(
        a,
        b,
        Subgroup::new(vec![GenWord::from_codes(&[1, 2, -1, -2])]),
        Subgroup::new(vec![GenWord::from_codes(&[2, 1, -2, -1])]),
    )?)
}

/// `F(a1,a2,b2) ⋆_φ` with stable letter `b1`, `H_− = ⟨a1⟩` and
/// `H_+ = ⟨b1 a1 b1^-1⟩ = ⟨[a2,b2] a1⟩`.
pub fn genus2_hnn_presentation(rep: &MatrixRep) -> Result<HnnPresentation, CertifyError> {
    let m = float_factor(rep, &["a1", "a2", "b2"], true)?;
    let stable = GroupMatrix::Float(rep.generator("b1")?.clone());
    Ok(HnnPresentation::new(
        m,
        stable,
        "b1",
        Subgroup::new(vec![GenWord::from_codes(&[1])]),
        Subgroup::new(vec![GenWord::from_codes(&[2, 3, -2, -3, 1])]),
    )?)
}

fn endpoints(
    rep: &MatrixRep,
    shadow: &MatrixRep,
    word: &GenWord,
    ty: &FlagType,
) -> Result<(Endpoint, Endpoint), CertifyError> {
    let inv = word.inverse();
    Ok((
        Endpoint::of(&rep.evaluate(word), &shadow.evaluate(word), ty)?,
        Endpoint::of(&rep.evaluate(&inv), &shadow.evaluate(&inv), ty)?,
    ))
}

/// Genus-2 Hitchin amalgam scene: the lift of the octagon group, cut along
/// the separating curve `[a1,b1]`, with `A`, `B` thinned from the two arcs.
pub fn genus2_amalgam_scene(params: &Genus2Params) -> Result<PairScene, CertifyError> {
    let shadow = fuchsian_genus2();
    let rep = shadow.lift(params.d);
    let ty = FlagType::full(params.d);
    let sample = limit_set_sample_with_shadows(&rep, &shadow, params.sample_depth, &ty)?;
    let eta = commutator(rep.generator("a1")?, rep.generator("b1")?);
    let eta2 = commutator(shadow.generator("a1")?, shadow.generator("b1")?);
    let inv = |m: &DMatrix<f64>| m.clone().try_inverse().expect("unimodular");
    let plus = Endpoint::of(&eta, &eta2, &ty)?;
    let minus = Endpoint::of(&inv(&eta), &inv(&eta2), &ty)?;
    let a_gens = [rep.index("a1")? as u16, rep.index("b1")? as u16];
    let (ca, cb) = arc_split(&sample, &plus, &minus, &a_gens)?;
    Ok(PairScene {
        presentation: genus2_amalgam_presentation(&rep)?,
        a: set_from_arcs("A", &[&ca], &params.net, &ty)?,
        b: set_from_arcs("B", &[&cb], &params.net, &ty)?,
        rep,
        depth: params.depth,
        margin: params.margin,
        seed: params.seed,
        relaxed: params.relaxed,
    })
}

/// Genus-2 Hitchin HNN scene along the non-separating curve `a1` with stable
/// letter `b1`. `B_−` is the arc between the fixed points of `a1` that avoids
/// those of `b1 a1 b1^-1`, `B_+` the arc between the latter avoiding the
/// former, and `A` the two remaining arcs.
pub fn genus2_hnn_scene(params: &Genus2Params) -> Result<TripleScene, CertifyError> {
    let shadow = fuchsian_genus2();
    let rep = shadow.lift(params.d);
    let ty = FlagType::full(params.d);
    let presentation = genus2_hnn_presentation(&rep)?;
    let sample = limit_set_sample_with_shadows(&rep, &shadow, params.sample_depth, &ty)?;
    let eta = rep.translate(&presentation.h_minus.generators[0], &presentation.m.names)?;
    let eta_p = rep.translate(&presentation.h_plus.generators[0], &presentation.m.names)?;
    let (sp, sm) = endpoints(&rep, &shadow, &eta, &ty)?;
    let (tp, tm) = endpoints(&rep, &shadow, &eta_p, &ty)?;
    let arcs = split_circle(&sample, &[sp.clone(), sm.clone(), tp.clone(), tm.clone()])?;
    let is = |e: &Endpoint, x: &Endpoint| e.shadow == x.shadow;
    let joins = |arc: &Arc, x: &Endpoint, y: &Endpoint| {
        (is(&arc.from, x) && is(&arc.to, y)) || (is(&arc.from, y) && is(&arc.to, x))
    };
    let b_minus: Vec<&Arc> = arcs.iter().filter(|a| joins(a, &sp, &sm)).collect();
    let b_plus: Vec<&Arc> = arcs.iter().filter(|a| joins(a, &tp, &tm)).collect();
    if b_minus.len() != 1 || b_plus.len() != 1 {
        return Err(CertifyError::SceneInvalid(
            "fixed points of the associated subgroups interleave on the circle".into(),
        ));
    }
    let rest: Vec<&Arc> = arcs
        .iter()
        .filter(|a| !joins(a, &sp, &sm) && !joins(a, &tp, &tm))
        .collect();
    Ok(TripleScene {
        a: set_from_arcs("A", &rest, &params.net, &ty)?,
        b_plus: set_from_arcs("B+", &b_plus, &params.net, &ty)?,
        b_minus: set_from_arcs("B-", &b_minus, &params.net, &ty)?,
        presentation,
        rep,
        depth: params.depth,
        margin: params.margin,
        seed: params.seed,
        relaxed: params.relaxed,
    })
}
