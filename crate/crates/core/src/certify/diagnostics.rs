use std::collections::BTreeMap;
use std::f64::consts::SQRT_2;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    factor_elements, image_in, verify_interactive_pair, verify_interactive_triple, CertReport,
    CertifyError, SceneRef, Tracker, Verdict, REPORT_SCHEMA,
};
use crate::exact::GroupMatrix;
use crate::flags::{
    act, antipodality_margin, flag_distance, set_membership_margin, singular_gaps, Flag, FlagError,
    FlagSet, FlagType,
};
use crate::numeric::POLICY;
use crate::reps::{axis_flags, bend, BendStructure, CentralizerChart, LimitSetSample, MatrixRep};
use crate::words::{AmalgamPresentation, AnyPresentation, FactorTag, GenWord, HnnPresentation, Letter, Syllable, Word};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct InjectivityParams {
    /// Largest relative length enumerated.
    pub max_rl: usize,
    /// Longest factor word used as a syllable.
    pub syllable_len: usize,
    /// Set images are followed up to this relative length; longer words
    /// only get the direct matrix check.
    pub set_rl: usize,
}

impl Default for InjectivityParams {
    fn default() -> Self {
        InjectivityParams {
            max_rl: 5,
            syllable_len: 1,
            set_rl: 5,
        }
    }
}

/// Signed distance of a matrix from the identity: exact matrices give `-1`
/// on the identity, float ones subtract the comparison tolerance.
fn identity_margin(m: &GroupMatrix, projective: bool) -> f64 {
    let f = m.to_f64();
    let id = DMatrix::identity(f.nrows(), f.ncols());
    let mut dist = (&f - &id).amax();
    if projective {
        dist = dist.min((&f + &id).amax());
    }
    match m {
        GroupMatrix::Exact(_) if m.is_identity(0.0, projective) => -1.0,
        GroupMatrix::Exact(_) => dist,
        GroupMatrix::Float(_) => dist - POLICY.float_compare,
    }
}

struct Syl {
    name: String,
    mat: GroupMatrix,
    float: DMatrix<f64>,
    in_minus: bool,
    in_plus: bool,
}

impl Syl {
    fn new(name: String, mat: GroupMatrix) -> Self {
        let float = mat.to_f64();
        Syl {
            name,
            mat,
            float,
            in_minus: false,
            in_plus: false,
        }
    }
}

fn images(g: &DMatrix<f64>, img: &[Flag]) -> Result<Vec<Flag>, FlagError> {
    img.iter().map(|f| act(g, f)).collect()
}

struct Walk<'a> {
    params: InjectivityParams,
    projective: bool,
    sets: Vec<&'a FlagSet>,
    stack: Vec<String>,
    nontrivial: Tracker,
    itinerary: Tracker,
    words: usize,
}

impl Walk<'_> {
    fn check(&mut self, prefix: &str, mat: &GroupMatrix, img: Option<(&[Flag], usize)>) -> Result<(), FlagError> {
        self.words += 1;
        let stack = &self.stack;
        let name = || {
            let mut parts: Vec<&str> = std::iter::once(prefix).filter(|s| !s.is_empty()).collect();
            parts.extend(stack.iter().rev().map(String::as_str));
            Some(parts.join(" · "))
        };
        self.nontrivial.observe(identity_margin(mat, self.projective), name, None);
        if let Some((img, set)) = img {
            for q in img {
                let m = set_membership_margin(self.sets[set], q)?;
                self.itinerary.observe(m, name, Some(q));
            }
        }
        Ok(())
    }

    fn report(self, kind: &str) -> CertReport {
        let mut diagnostics = BTreeMap::new();
        diagnostics.insert("words".into(), self.words as f64);
        diagnostics.insert("set-rl".into(), self.params.set_rl.min(self.params.max_rl) as f64);
        diagnostics.insert("syllable-len".into(), self.params.syllable_len as f64);
        let conditions = vec![self.nontrivial.finish(0.0), self.itinerary.finish(0.0)];
        CertReport::new(
            kind,
            self.params.max_rl,
            0.0,
            conditions,
            vec![format!(
                "syllables are factor words of length at most {}",
                self.params.syllable_len
            )],
            diagnostics,
        )
    }
}

fn new_walk<'a>(params: InjectivityParams, projective: bool, sets: Vec<&'a FlagSet>) -> Walk<'a> {
    Walk {
        params,
        projective,
        sets,
        stack: Vec::new(),
        nontrivial: Tracker::new("matrix-nontrivial", "a nontrivial normal form evaluates to the identity"),
        itinerary: Tracker::new("itinerary-containment", "a word does not map its set into the expected set"),
        words: 0,
    }
}

fn amalgam_syllables(
    p: &AmalgamPresentation,
    rep: Option<&MatrixRep>,
    len: usize,
) -> Result<[Vec<Syl>; 2], CertifyError> {
    let mut out: [Vec<Syl>; 2] = [Vec::new(), Vec::new()];
    for (i, tag) in [FactorTag::A, FactorTag::B].into_iter().enumerate() {
        let (factor, h) = (p.factor(tag), p.edge_group(tag));
        for w in factor_elements(factor, h, len)? {
            let mat = match rep {
                Some(r) => GroupMatrix::Float(r.evaluate(&r.translate(&w, &factor.names)?)),
                None => factor.evaluate(&w),
            };
            out[i].push(Syl::new(w.display_with(&factor.names), mat));
        }
    }
    Ok(out)
}

/// Depth-first over alternating products, prepending one syllable at a time.
/// Set index `tag` is the factor of the current first syllable.
fn amalgam_dfs(
    walk: &mut Walk,
    syl: &[Vec<Syl>; 2],
    tag: usize,
    rl: usize,
    mat: &GroupMatrix,
    img: Option<&[Flag]>,
) -> Result<(), FlagError> {
    walk.check("", mat, img.map(|i| (i, tag)))?;
    if rl == walk.params.max_rl {
        return Ok(());
    }
    let next = 1 - tag;
    for s in &syl[next] {
        let m2 = s.mat.mul(mat);
        let img2 = match img {
            Some(i) if rl < walk.params.set_rl => Some(images(&s.float, i)?),
            _ => None,
        };
        walk.stack.push(s.name.clone());
        amalgam_dfs(walk, syl, next, rl + 1, &m2, img2.as_deref())?;
        walk.stack.pop();
    }
    Ok(())
}

fn amalgam_walk(
    p: &AmalgamPresentation,
    rep: Option<&MatrixRep>,
    sets: Option<[&FlagSet; 2]>,
    params: InjectivityParams,
) -> Result<CertReport, CertifyError> {
    let syl = amalgam_syllables(p, rep, params.syllable_len)?;
    let mut walk = new_walk(params, p.projective(), sets.map(Vec::from).unwrap_or_default());
    for tag in 0..2 {
        for s in &syl[tag] {
            let img = match sets {
                // α maps B into A, β maps A into B.
                Some(sets) if params.set_rl >= 1 => Some(images(&s.float, &sets[1 - tag].net)?),
                _ => None,
            };
            walk.stack.push(s.name.clone());
            amalgam_dfs(&mut walk, &syl, tag, 1, &s.mat, img.as_deref())?;
            walk.stack.pop();
        }
    }
    Ok(walk.report("ping-pong-injectivity"))
}

const SET_A: usize = 0;
const SET_PLUS: usize = 1;
const SET_MINUS: usize = 2;

fn b_set(eps: i8) -> usize {
    if eps > 0 {
        SET_PLUS
    } else {
        SET_MINUS
    }
}

struct HnnLetters {
    mus: Vec<Syl>,
    f: [Syl; 2],
}

impl HnnLetters {
    fn stable(&self, eps: i8) -> &Syl {
        &self.f[if eps > 0 { 0 } else { 1 }]
    }
}

fn hnn_letters(p: &HnnPresentation, rep: Option<&MatrixRep>, len: usize) -> Result<HnnLetters, CertifyError> {
    let exact = rep.is_none() && p.m.is_exact() && p.stable.is_exact();
    let d = p.stable.dim();
    let mut identity = Syl::new(String::new(), GroupMatrix::identity(d, exact));
    identity.in_minus = true;
    identity.in_plus = true;
    let mut mus = vec![identity];
    for w in factor_elements(&p.m, &crate::words::Subgroup::trivial(), len)? {
        let mat = match rep {
            Some(r) => GroupMatrix::Float(r.evaluate(&r.translate(&w, &p.m.names)?)),
            None => p.m.evaluate(&w),
        };
        let mut s = Syl::new(w.display_with(&p.m.names), mat);
        s.in_minus = p.h_minus.contains(&p.m, &w)?;
        s.in_plus = p.h_plus.contains(&p.m, &w)?;
        mus.push(s);
    }
    let f = match rep {
        Some(r) => GroupMatrix::Float(r.generator(&p.stable_name)?.clone()),
        None => p.stable.clone(),
    };
    let finv = f.inverse().ok_or(FlagError::Singular)?;
    let name = &p.stable_name;
    Ok(HnnLetters {
        mus,
        f: [Syl::new(name.clone(), f), Syl::new(format!("{name}^-1"), finv)],
    })
}

/// Set reached by applying `μ` to `B_ε`.
fn after_mu(mu: &Syl, eps: i8) -> usize {
    let inside = if eps > 0 { mu.in_plus } else { mu.in_minus };
    if inside {
        b_set(eps)
    } else {
        SET_A
    }
}

/// Nodes are suffixes `f^ε_1 μ_1 ⋯ f^ε_n μ_n` whose image of
/// `B_{ε_n}` lies in `B_{ε_1}`; each node is emitted once per choice of `μ_0`.
fn hnn_dfs(
    walk: &mut Walk,
    letters: &HnnLetters,
    eps_first: i8,
    rl: usize,
    mat: &GroupMatrix,
    img: Option<&[Flag]>,
) -> Result<(), FlagError> {
    for mu in &letters.mus {
        let mm = mu.mat.mul(mat);
        let img_mu = match img {
            Some(i) => Some(images(&mu.float, i)?),
            None => None,
        };
        let set = after_mu(mu, eps_first);
        walk.check(&mu.name, &mm, img_mu.as_deref().map(|i| (i, set)))?;
        if rl == walk.params.max_rl {
            continue;
        }
        let inside_first = if eps_first > 0 { mu.in_plus } else { mu.in_minus };
        for eps in [1i8, -1] {
            // Britton: f^-ε μ f^ε with μ ∈ H_ε is not reduced.
            if eps == -eps_first && inside_first {
                continue;
            }
            let f = letters.stable(eps);
            let child = f.mat.mul(&mm);
            let img_child = match &img_mu {
                Some(i) if rl < walk.params.set_rl => Some(images(&f.float, i)?),
                _ => None,
            };
            if !mu.name.is_empty() {
                walk.stack.push(mu.name.clone());
            }
            walk.stack.push(f.name.clone());
            hnn_dfs(walk, letters, eps, rl + 1, &child, img_child.as_deref())?;
            walk.stack.pop();
            if !mu.name.is_empty() {
                walk.stack.pop();
            }
        }
    }
    Ok(())
}

fn hnn_walk(
    p: &HnnPresentation,
    rep: Option<&MatrixRep>,
    sets: Option<[&FlagSet; 3]>,
    params: InjectivityParams,
) -> Result<CertReport, CertifyError> {
    let letters = hnn_letters(p, rep, params.syllable_len)?;
    let mut walk = new_walk(params, p.projective(), sets.map(Vec::from).unwrap_or_default());
    if params.max_rl == 0 {
        return Ok(walk.report("ping-pong-injectivity"));
    }
    for eps in [1i8, -1] {
        let f = letters.stable(eps);
        for mu in &letters.mus {
            let mat = f.mat.mul(&mu.mat);
            let img = match sets {
                Some(sets) if params.set_rl >= 1 => {
                    let start = &sets[b_set(eps)].net;
                    Some(images(&f.float, &images(&mu.float, start)?)?)
                }
                _ => None,
            };
            // The start set's image after μ_n is tracked only for the check below.
            if let Some(sets) = sets {
                if params.set_rl >= 1 {
                    let mid = images(&mu.float, &sets[b_set(eps)].net)?;
                    let target = after_mu(mu, eps);
                    for q in &mid {
                        let m = set_membership_margin(sets[target], q)?;
                        walk.itinerary.observe(m, || Some(mu.name.clone()), Some(q));
                    }
                }
            }
            walk.stack.push(mu.name.clone());
            walk.stack.retain(|s| !s.is_empty());
            walk.stack.push(f.name.clone());
            hnn_dfs(&mut walk, &letters, eps, 1, &mat, img.as_deref())?;
            walk.stack.clear();
        }
    }
    Ok(walk.report("ping-pong-injectivity"))
}

/// Follows every normal form of relative length at most `max_rl` through the
/// ping-pong itinerary of a scene, checking that each image lands in the
/// expected set and that each matrix differs from the identity.
pub fn ping_pong_injectivity(scene: SceneRef, params: InjectivityParams) -> Result<CertReport, CertifyError> {
    match scene {
        SceneRef::Pair(s) => amalgam_walk(&s.presentation, Some(&s.rep), Some([&s.a, &s.b]), params),
        SceneRef::Triple(s) => hnn_walk(
            &s.presentation,
            Some(&s.rep),
            Some([&s.a, &s.b_plus, &s.b_minus]),
            params,
        ),
    }
}

/// Matrix-only variant on a presentation's own (possibly exact) matrices.
pub fn presentation_injectivity<'a>(
    p: impl Into<AnyPresentation<'a>>,
    params: InjectivityParams,
) -> Result<CertReport, CertifyError> {
    match p.into() {
        AnyPresentation::Amalgam(p) => amalgam_walk(p, None, None, params),
        AnyPresentation::Hnn(p) => hnn_walk(p, None, None, params),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShrinkReport {
    pub schema: u32,
    pub pass: bool,
    /// `δ_n` for `n = 1..N`, diameters of the image nets.
    pub diameters: Vec<f64>,
    /// Entry `n−1` is the margin of step `n+1` inside step `n`.
    pub nesting: Vec<f64>,
    pub not_nested_at: Option<usize>,
    pub monotone: bool,
    /// `δ_N / δ_1`.
    pub ratio: f64,
    /// Medoid of the last image net.
    pub limit: Flag,
}

fn syllable_matrix(rep: &MatrixRep, s: &Syllable, p: AnyPresentation) -> Result<DMatrix<f64>, CertifyError> {
    Ok(rep.evaluate_word(&Word::new(vec![s.clone()]), p)?)
}

fn push_through(mats: &[DMatrix<f64>], net: &[Flag]) -> Result<Vec<Flag>, FlagError> {
    let mut img = net.to_vec();
    for m in mats.iter().rev() {
        img = images(m, &img)?;
    }
    Ok(img)
}

fn diameter(net: &[Flag]) -> Result<f64, FlagError> {
    let mut d = 0.0f64;
    for (i, p) in net.iter().enumerate() {
        for q in &net[i + 1..] {
            d = d.max(flag_distance(p, q)?);
        }
    }
    Ok(d)
}

fn medoid(net: &[Flag]) -> Result<Flag, FlagError> {
    let mut best: Option<(f64, &Flag)> = None;
    for p in net {
        let mut worst = 0.0f64;
        for q in net {
            worst = worst.max(flag_distance(p, q)?);
        }
        if best.is_none_or(|(b, _)| worst < b) {
            best = Some((worst, p));
        }
    }
    best.map(|(_, f)| f.clone()).ok_or(FlagError::EmptyNet)
}

fn union(label: &str, sets: &[&FlagSet]) -> Vec<Flag> {
    let _ = label;
    sets.iter().flat_map(|s| s.net.iter().cloned()).collect()
}

/// Diameters of `ω_n·X_n` along prefixes `ω_1, ω_2, …` of an alternating
/// string, where `X_n` is the set the last syllable maps into the previous
/// set. Images are pushed through one syllable at a time and measured with
/// radius zero, since the image of a ball is not a ball of the same radius.
pub fn shrink_diagnostic(scene: SceneRef, seq: &[Word]) -> Result<ShrinkReport, CertifyError> {
    if seq.is_empty() {
        return Err(CertifyError::SceneInvalid("empty sequence".into()));
    }
    for (n, w) in seq.iter().enumerate().skip(1) {
        let prev = &seq[n - 1].syllables;
        if w.syllables.len() <= prev.len() || w.syllables[..prev.len()] != prev[..] {
            return Err(CertifyError::SceneInvalid(format!("word {} does not extend word {n}", n + 1)));
        }
    }
    let rep = scene.rep();
    let (pres, sets): (AnyPresentation, Vec<&FlagSet>) = match scene {
        SceneRef::Pair(s) => ((&s.presentation).into(), vec![&s.a, &s.b]),
        SceneRef::Triple(s) => ((&s.presentation).into(), vec![&s.a, &s.b_plus, &s.b_minus]),
    };
    let last = seq.last().expect("nonempty");
    let mats = last
        .syllables
        .iter()
        .map(|s| syllable_matrix(rep, s, pres))
        .collect::<Result<Vec<_>, _>>()?;

    // Start set of each prefix, as indices into `sets`.
    let start_sets = |w: &Word| -> Result<Vec<usize>, CertifyError> {
        let s = w.syllables.last().expect("nonempty words");
        Ok(match (pres, s.factor) {
            (AnyPresentation::Amalgam(_), FactorTag::A) => vec![1],
            (AnyPresentation::Amalgam(_), FactorTag::B) => vec![0],
            (AnyPresentation::Hnn(_), FactorTag::StableLetter) => {
                vec![0, b_set(s.exponent().expect("stable syllable")) ]
            }
            _ => {
                return Err(CertifyError::SceneInvalid(
                    "HNN prefixes must end with a stable letter".into(),
                ))
            }
        })
    };

    let mut diameters = Vec::new();
    let mut nesting = Vec::new();
    let mut not_nested_at = None;
    let mut final_img = Vec::new();
    for (n, w) in seq.iter().enumerate() {
        let xs = start_sets(w)?;
        let x_net = union("X", &xs.iter().map(|&i| sets[i]).collect::<Vec<_>>());
        let k = w.syllables.len();
        let img = push_through(&mats[..k], &x_net)?;
        diameters.push(diameter(&img)?);
        if n > 0 {
            let prev_len = seq[n - 1].syllables.len();
            let prev_sets = start_sets(&seq[n - 1])?;
            let mut worst = f64::INFINITY;
            for x in &x_net {
                let y = push_through(&mats[prev_len..k], std::slice::from_ref(x))?.remove(0);
                let mut best = f64::NEG_INFINITY;
                for &i in &prev_sets {
                    best = best.max(set_membership_margin(sets[i], &y)?);
                }
                worst = worst.min(best);
            }
            if worst < -POLICY.falsify && not_nested_at.is_none() {
                not_nested_at = Some(n + 1);
            }
            nesting.push(worst);
        }
        final_img = img;
    }
    let monotone = diameters.windows(2).all(|w| w[1] <= w[0] + POLICY.falsify);
    let ratio = diameters.last().expect("nonempty") / diameters[0];
    let shrinks = diameters.len() == 1 || ratio < 0.05;
    Ok(ShrinkReport {
        schema: REPORT_SCHEMA,
        pass: not_nested_at.is_none() && monotone && shrinks,
        diameters,
        nesting,
        not_nested_at,
        monotone,
        ratio,
        limit: medoid(&final_img)?,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapScanParams {
    pub max_len: usize,
    /// Required least-squares slope.
    pub floor: f64,
    /// Random reduced words per length once a length has too many words.
    pub samples: usize,
    /// Lengths with at most this many reduced words are enumerated fully.
    pub exhaustive_cap: usize,
    pub seed: u64,
}

impl Default for GapScanParams {
    fn default() -> Self {
        GapScanParams {
            max_len: 12,
            floor: 0.05,
            samples: 256,
            exhaustive_cap: 4096,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapScanReport {
    pub schema: u32,
    pub lengths: Vec<usize>,
    /// Smallest gap over the flag type and over the words of each length.
    pub min_gaps: Vec<f64>,
    pub words: Vec<usize>,
    pub slope: f64,
    pub intercept: f64,
    /// Smallest gap over all sampled words of length at least 3.
    pub min_gap_from_3: Option<f64>,
    pub pass: bool,
}

fn random_reduced(rng: &mut ChaCha8Rng, rank: u16, n: usize) -> GenWord {
    let mut letters: Vec<Letter> = Vec::with_capacity(n);
    while letters.len() < n {
        let l = Letter {
            gen: rng.gen_range(0..rank),
            inv: rng.gen(),
        };
        if letters.last() == Some(&l.inverse()) {
            continue;
        }
        letters.push(l);
    }
    GenWord(letters)
}

/// Singular-value gaps along reduced words in `generators`: the per-length
/// minimum, its least-squares slope in the length, and a PASS verdict when
/// the slope exceeds the floor and no word of length ≥ 3 has a zero gap.
pub fn anosov_gap_scan(
    rep: &MatrixRep,
    generators: &[String],
    t: &FlagType,
    params: &GapScanParams,
) -> Result<GapScanReport, CertifyError> {
    if generators.is_empty() || params.max_len == 0 {
        return Err(CertifyError::SceneInvalid("gap scan needs generators and a positive length".into()));
    }
    let index = generators
        .iter()
        .map(|g| rep.index(g))
        .collect::<Result<Vec<_>, _>>()?;
    let rank = generators.len() as u16;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let (mut lengths, mut min_gaps, mut counts) = (Vec::new(), Vec::new(), Vec::new());
    let mut from_3: Option<f64> = None;
    for n in 1..=params.max_len {
        let total = 2.0 * rank as f64 * (2.0 * rank as f64 - 1.0).powi(n as i32 - 1);
        let words = if total <= params.exhaustive_cap as f64 {
            crate::words::reduced_words_of_length(rank, n)
        } else {
            (0..params.samples).map(|_| random_reduced(&mut rng, rank, n)).collect()
        };
        let mut min = f64::INFINITY;
        for w in &words {
            let mapped = GenWord(
                w.letters()
                    .iter()
                    .map(|l| Letter {
                        gen: index[l.gen as usize] as u16,
                        inv: l.inv,
                    })
                    .collect(),
            );
            min = min.min(singular_gaps(&rep.evaluate(&mapped), t).min());
        }
        if n >= 3 {
            from_3 = Some(from_3.map_or(min, |m| m.min(min)));
        }
        lengths.push(n);
        min_gaps.push(min);
        counts.push(words.len());
    }
    let k = lengths.len() as f64;
    let mx = lengths.iter().map(|&n| n as f64).sum::<f64>() / k;
    let my = min_gaps.iter().sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (&n, &g) in lengths.iter().zip(&min_gaps) {
        sxy += (n as f64 - mx) * (g - my);
        sxx += (n as f64 - mx).powi(2);
    }
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let pass = slope > params.floor && from_3.is_none_or(|m| m > POLICY.gap_floor);
    Ok(GapScanReport {
        schema: REPORT_SCHEMA,
        lengths,
        min_gaps,
        words: counts,
        slope,
        intercept: my - slope * mx,
        min_gap_from_3: from_3,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub schema: u32,
    pub points: usize,
    pub min_margin: f64,
    /// Source words of the closest pair.
    pub pair: (String, String),
    pub pass: bool,
}

struct Ball {
    center: usize,
    radius: f64,
    items: Vec<usize>,
    children: Option<Box<(Ball, Ball)>>,
}

const LEAF: usize = 16;

fn build_ball(points: &[Flag], items: Vec<usize>) -> Result<Ball, FlagError> {
    let center = items[0];
    let mut radius = 0.0f64;
    let mut far = (center, 0.0);
    for &i in &items {
        let d = flag_distance(&points[center], &points[i])?;
        radius = radius.max(d);
        if d > far.1 {
            far = (i, d);
        }
    }
    if items.len() <= LEAF || radius == 0.0 {
        return Ok(Ball {
            center,
            radius,
            items,
            children: None,
        });
    }
    let a = far.0;
    let mut b = (a, 0.0);
    for &i in &items {
        let d = flag_distance(&points[a], &points[i])?;
        if d > b.1 {
            b = (i, d);
        }
    }
    let (mut left, mut right) = (Vec::new(), Vec::new());
    for &i in &items {
        if flag_distance(&points[a], &points[i])? <= flag_distance(&points[b.0], &points[i])? {
            left.push(i);
        } else {
            right.push(i);
        }
    }
    if left.is_empty() || right.is_empty() {
        return Ok(Ball {
            center,
            radius,
            items,
            children: None,
        });
    }
    Ok(Ball {
        center,
        radius,
        items: Vec::new(),
        children: Some(Box::new((build_ball(points, left)?, build_ball(points, right)?))),
    })
}

struct Best {
    margin: f64,
    pair: (usize, usize),
}

fn leaf_pairs(points: &[Flag], xs: &[usize], ys: &[usize], same: bool, best: &mut Best) -> Result<(), FlagError> {
    for (k, &i) in xs.iter().enumerate() {
        let start = if same { k + 1 } else { 0 };
        for &j in &ys[start..] {
            let m = antipodality_margin(&points[i], &points[j])?;
            if m < best.margin {
                *best = Best { margin: m, pair: (i, j) };
            }
        }
    }
    Ok(())
}

fn all_items(b: &Ball) -> Vec<usize> {
    match &b.children {
        None => b.items.clone(),
        Some(c) => {
            let mut v = all_items(&c.0);
            v.extend(all_items(&c.1));
            v
        }
    }
}

/// Branch and bound over pairs of balls: the margin is √2-Lipschitz in each
/// argument, so a pair of balls is skipped once its bound cannot beat the
/// best pair found so far.
fn search(points: &[Flag], x: &Ball, y: &Ball, same: bool, best: &mut Best) -> Result<(), FlagError> {
    if same {
        return match &x.children {
            None => leaf_pairs(points, &x.items, &x.items, true, best),
            Some(c) => {
                search(points, &c.0, &c.0, true, best)?;
                search(points, &c.1, &c.1, true, best)?;
                search(points, &c.0, &c.1, false, best)
            }
        };
    }
    let bound = antipodality_margin(&points[x.center], &points[y.center])? - SQRT_2 * (x.radius + y.radius);
    if bound >= best.margin {
        return Ok(());
    }
    match (&x.children, &y.children) {
        (None, None) => leaf_pairs(points, &x.items, &y.items, false, best),
        (Some(c), _) if y.children.is_none() || x.radius >= y.radius => {
            search(points, &c.0, y, false, best)?;
            search(points, &c.1, y, false, best)
        }
        (_, Some(c)) => {
            search(points, x, &c.0, false, best)?;
            search(points, x, &c.1, false, best)
        }
        (Some(_), None) => unreachable!("handled by the guarded arm"),
    }
}

/// Minimum antipodality margin over distinct pairs of sample points.
pub fn antipodality_audit(sample: &LimitSetSample) -> Result<AuditReport, CertifyError> {
    let points: Vec<Flag> = sample.points.iter().map(|p| p.flag.clone()).collect();
    if points.len() < 2 {
        return Err(CertifyError::SceneInvalid("audit needs at least two flags".into()));
    }
    let root = build_ball(&points, (0..points.len()).collect())?;
    debug_assert_eq!(all_items(&root).len(), points.len());
    let mut best = Best {
        margin: f64::INFINITY,
        pair: (0, 1),
    };
    search(&points, &root, &root, true, &mut best)?;
    let name = |i: usize| format!("{:?}", sample.points[i].source);
    Ok(AuditReport {
        schema: REPORT_SCHEMA,
        points: points.len(),
        min_margin: best.margin,
        pair: (name(best.pair.0), name(best.pair.1)),
        pass: best.margin > POLICY.falsify,
    })
}

/// Iterates `f` on `B_+` and `f⁻¹` on `B_−` until the images collapse and
/// compares the limits with the axis flags of `f`.
pub fn hnn_cyclic_check(
    f: &DMatrix<f64>,
    b_plus: &FlagSet,
    b_minus: &FlagSet,
    margin: f64,
) -> Result<CertReport, CertifyError> {
    let finv = f.clone().try_inverse().ok_or(FlagError::Singular)?;
    let ax = axis_flags(f, &b_plus.ty)?;
    let mut conditions = Vec::new();
    let mut t = Tracker::new("stable-letter-nests-b", "f^±1(B_±) is not inside B_±°");
    image_in(&mut t, f, "f", b_plus, b_plus)?;
    image_in(&mut t, &finv, "f^-1", b_minus, b_minus)?;
    conditions.push(t.finish(margin));

    let mut diagnostics = BTreeMap::new();
    let mut limits = Tracker::new("limits-match-axis", "lim f^±n B_± differs from the axis flags");
    let mut interior = Tracker::new("axis-interior", "an axis flag is not interior to its set");
    for (g, set, axis, key) in [(f, b_plus, &ax.plus, "plus"), (&finv, b_minus, &ax.minus, "minus")] {
        let mut img = set.net.clone();
        let mut steps = 0;
        while steps < 1000 && diameter(&img)? > 1e-13 {
            img = images(g, &img)?;
            steps += 1;
        }
        let limit = medoid(&img)?;
        let dist = flag_distance(&limit, axis)?;
        limits.observe(1e-6 - dist, || Some(format!("f^{} iterates", if key == "plus" { "n" } else { "-n" })), Some(&limit));
        interior.observe(set_membership_margin(set, axis)?, || Some(key.to_string()), Some(axis));
        diagnostics.insert(format!("limit-distance-{key}"), dist);
        diagnostics.insert(format!("iterations-{key}"), steps as f64);
    }
    conditions.push(limits.finish(0.0));
    conditions.push(interior.finish(margin));
    Ok(CertReport::new("hnn-cyclic", 0, margin, conditions, Vec::new(), diagnostics))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendParams {
    /// Direction in the centralizer chart; normalized before use.
    pub direction: Vec<f64>,
    /// Largest parameter tried.
    pub s_hi: f64,
    pub iterations: usize,
    pub ray_points: usize,
    pub gap: GapScanParams,
}

impl BendParams {
    /// Direction `(1, −2, 1, 0, …)` transverse to the Fuchsian locus, with the
    /// first chart entries scaled to unit length.
    pub fn for_dim(d: usize) -> Self {
        let mut direction = vec![0.0; d - 1];
        direction[0] = 1.0;
        if d >= 3 {
            direction[1] = -2.0;
        }
        BendParams {
            direction,
            s_hi: 1.0,
            iterations: 8,
            ray_points: 5,
            gap: GapScanParams::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendSample {
    pub s: f64,
    pub verdict: Verdict,
    pub min_margin: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BendReport {
    pub schema: u32,
    pub direction: Vec<f64>,
    pub s_max: f64,
    pub bisection: Vec<BendSample>,
    pub ray: Vec<BendSample>,
    pub gap: GapScanReport,
    pub pass: bool,
}

fn bend_structure(scene: SceneRef) -> Result<BendStructure, CertifyError> {
    match scene {
        SceneRef::Pair(s) => {
            let p = &s.presentation;
            if p.h_in_a.generators.len() != 1 {
                return Err(CertifyError::SceneInvalid("bending needs a cyclic edge group".into()));
            }
            let w = s.rep.translate(&p.h_in_a.generators[0], &p.a.names)?;
            Ok(BendStructure::Amalgam {
                b_generators: p.b.names.clone(),
                eta: s.rep.evaluate(&w),
            })
        }
        SceneRef::Triple(s) => {
            let p = &s.presentation;
            if p.h_minus.generators.len() != 1 {
                return Err(CertifyError::SceneInvalid("bending needs a cyclic associated subgroup".into()));
            }
            let w = s.rep.translate(&p.h_minus.generators[0], &p.m.names)?;
            Ok(BendStructure::Hnn {
                stable: p.stable_name.clone(),
                eta: s.rep.evaluate(&w),
            })
        }
    }
}

/// Bends along a ray `s·u` of the centralizer chart, bisects for the largest
/// `s ≤ s_hi` that keeps the certificate, re-verifies on evenly spaced ray
/// points up to it and runs a gap scan of the representation bent by `s_max`.
pub fn bend_scan(scene: SceneRef, params: &BendParams) -> Result<BendReport, CertifyError> {
    let structure = bend_structure(scene)?;
    let eta = match &structure {
        BendStructure::Amalgam { eta, .. } | BendStructure::Hnn { eta, .. } => eta.clone(),
    };
    let chart = CentralizerChart::new(&eta)?;
    let d = scene.rep().d();
    let norm = params.direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if params.direction.len() != d - 1 || norm == 0.0 {
        return Err(CertifyError::SceneInvalid(format!("bend direction must be a nonzero vector of length {}", d - 1)));
    }
    let direction: Vec<f64> = params.direction.iter().map(|x| x / norm).collect();
    let bent = |s: f64| -> Result<MatrixRep, CertifyError> {
        let point: Vec<f64> = direction.iter().map(|x| x * s).collect();
        Ok(bend(scene.rep(), &structure, &chart.element(&point))?)
    };
    let run = |s: f64| -> Result<BendSample, CertifyError> {
        let rep = bent(s)?;
        let report = match scene {
            SceneRef::Pair(p) => verify_interactive_pair(&p.with_rep(rep))?,
            SceneRef::Triple(t) => verify_interactive_triple(&t.with_rep(rep))?,
        };
        Ok(BendSample {
            s,
            verdict: report.verdict,
            min_margin: report.min_margin(),
        })
    };

    let mut bisection = vec![run(0.0)?];
    let mut s_max = 0.0;
    if bisection[0].verdict.is_certified() {
        let top = run(params.s_hi)?;
        let top_ok = top.verdict.is_certified();
        bisection.push(top);
        if top_ok {
            s_max = params.s_hi;
        } else {
            let (mut lo, mut hi) = (0.0, params.s_hi);
            for _ in 0..params.iterations {
                let mid = 0.5 * (lo + hi);
                let sample = run(mid)?;
                if sample.verdict.is_certified() {
                    lo = mid;
                } else {
                    hi = mid;
                }
                bisection.push(sample);
            }
            s_max = lo;
        }
    }
    let mut ray = Vec::new();
    if s_max > 0.0 {
        for k in 1..=params.ray_points {
            ray.push(run(s_max * k as f64 / params.ray_points as f64)?);
        }
    }
    let rep = bent(s_max)?;
    let gap = anosov_gap_scan(&rep, &rep.names, &FlagType::full(d), &params.gap)?;
    let pass = s_max > 0.0 && ray.iter().all(|r| r.verdict.is_certified()) && gap.pass;
    Ok(BendReport {
        schema: REPORT_SCHEMA,
        direction,
        s_max,
        bisection,
        ray,
        gap,
        pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::certify::{cyclic_triple_scene, schottky_scene};
    use crate::fixtures::{bs12_hnn, sl2z_amalgam};
    use crate::reps::limit_set_sample;
    use crate::words::{alternating_sequence, AlternatingSpec, LetterSource, SignSource};
    use nalgebra::DVector;

    fn diag(v: &[f64]) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_row_slice(v))
    }

    #[test]
    fn single_generator_is_nontrivial() {
        let r = presentation_injectivity(
            &sl2z_amalgam(),
            InjectivityParams {
                max_rl: 1,
                syllable_len: 3,
                set_rl: 0,
            },
        )
        .unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedAtDepth);
        assert_eq!(r.diagnostics["words"], 6.0);
    }

    #[test]
    fn bs12_words_are_nontrivial() {
        let r = presentation_injectivity(
            &bs12_hnn(),
            InjectivityParams {
                max_rl: 4,
                syllable_len: 2,
                set_rl: 0,
            },
        )
        .unwrap();
        assert_eq!(r.condition("matrix-nontrivial").unwrap().status, super::super::Status::Pass);
    }

    #[test]
    fn schottky_itinerary() {
        let scene = schottky_scene();
        let r = ping_pong_injectivity(SceneRef::Pair(&scene), InjectivityParams::default()).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedAtDepth, "{r:#?}");
    }

    #[test]
    fn cyclic_itinerary() {
        let scene = cyclic_triple_scene();
        let r = ping_pong_injectivity(SceneRef::Triple(&scene), InjectivityParams::default()).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedAtDepth, "{r:#?}");
        // f^±n for n ≤ 5.
        assert_eq!(r.diagnostics["words"], 10.0);
    }

    #[test]
    fn constant_hnn_string_contracts_at_the_eigenvalue_ratio() {
        let scene = cyclic_triple_scene();
        let spec = AlternatingSpec::Hnn {
            mus: LetterSource::Explicit(vec![GenWord::empty()]),
            epsilons: SignSource::Explicit(vec![1]),
        };
        let seq = alternating_sequence(&spec, 10, &scene.presentation).unwrap();
        let r = shrink_diagnostic(SceneRef::Triple(&scene), &seq).unwrap();
        assert!(r.pass, "{r:#?}");
        let n = r.diameters.len();
        let q = r.diameters[n - 1] / r.diameters[n - 2];
        assert!((q - 0.25).abs() < 0.01, "ratio {q}");
        assert!(flag_distance(&r.limit, &Flag::standard(FlagType::full(3))).unwrap() < 1e-5);
    }

    #[test]
    fn length_one_series_passes() {
        let scene = schottky_scene();
        let spec = AlternatingSpec::TypeA {
            alphas: LetterSource::Explicit(vec![GenWord::gen(0)]),
            betas: LetterSource::Explicit(vec![GenWord::gen(0)]),
        };
        let seq = alternating_sequence(&spec, 1, &scene.presentation).unwrap();
        let r = shrink_diagnostic(SceneRef::Pair(&scene), &seq).unwrap();
        assert!(r.pass && r.nesting.is_empty());
    }

    #[test]
    fn cyclic_gap_slope_is_log_four() {
        let rep = MatrixRep::from_floats(&["g"], vec![diag(&[4.0, 1.0, 0.25])]).unwrap();
        let r = anosov_gap_scan(&rep, &rep.names, &FlagType::full(3), &GapScanParams::default()).unwrap();
        assert!((r.slope - 4f64.ln()).abs() < 1e-9, "{}", r.slope);
        assert!(r.pass);
    }

    #[test]
    fn unipotent_generators_fail_the_gap_scan() {
        let u = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 0.0, 1.0]);
        let v = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 1.0]);
        let rep = MatrixRep::from_floats(&["u", "v"], vec![u, v]).unwrap();
        let r = anosov_gap_scan(&rep, &rep.names, &FlagType::full(2), &GapScanParams::default()).unwrap();
        assert!(!r.pass, "{r:#?}");
    }

    #[test]
    fn audit_of_standard_and_reversed() {
        let ty = FlagType::full(3);
        let rep = MatrixRep::from_floats(&["g"], vec![diag(&[4.0, 1.0, 0.25])]).unwrap();
        let s = limit_set_sample(&rep, 3, &ty);
        let r = antipodality_audit(&s).unwrap();
        assert!(r.pass);
        assert!((r.min_margin - 1.0).abs() < 1e-9, "{}", r.min_margin);
    }

    #[test]
    fn audit_sees_duplicates() {
        let ty = FlagType::full(3);
        let rep = MatrixRep::from_floats(&["g"], vec![diag(&[4.0, 1.0, 0.25])]).unwrap();
        let mut s = limit_set_sample(&rep, 1, &ty);
        s.points.push(s.points[0].clone());
        let r = antipodality_audit(&s).unwrap();
        assert!(!r.pass);
        assert!(r.min_margin.abs() < 1e-12);
    }

    #[test]
    fn audit_matches_brute_force() {
        let shadow = crate::reps::fuchsian_genus2();
        let rep = shadow.lift(3);
        let s = limit_set_sample(&rep, 3, &FlagType::full(3));
        let r = antipodality_audit(&s).unwrap();
        let mut brute = f64::INFINITY;
        for (i, p) in s.points.iter().enumerate() {
            for q in &s.points[i + 1..] {
                brute = brute.min(antipodality_margin(&p.flag, &q.flag).unwrap());
            }
        }
        assert_eq!(r.min_margin, brute);
    }

    #[test]
    fn cyclic_check_finds_standard_flags() {
        let scene = cyclic_triple_scene();
        let f = scene.rep.generator("f").unwrap();
        let r = hnn_cyclic_check(f, &scene.b_plus, &scene.b_minus, scene.margin).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedAtDepth, "{r:#?}");
        assert!(r.diagnostics["limit-distance-plus"] < 1e-9);
    }

    #[test]
    fn conjugated_cyclic_check() {
        let scene = cyclic_triple_scene();
        let (s, c) = 0.3f64.sin_cos();
        let k = DMatrix::from_row_slice(3, 3, &[c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0]);
        let kinv = k.transpose();
        let f = &k * scene.rep.generator("f").unwrap() * &kinv;
        let bp = scene.b_plus.image(&k).unwrap();
        let bm = scene.b_minus.image(&k).unwrap();
        let r = hnn_cyclic_check(&f, &bp, &bm, scene.margin).unwrap();
        assert_eq!(r.verdict, Verdict::CertifiedAtDepth, "{r:#?}");
    }
}
