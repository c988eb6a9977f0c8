//! Bass–Serre trees of amalgams and HNN extensions, handled symbolically
//! through canonical coset representatives.

use serde::{Deserialize, Serialize};

use crate::words::{
    amalgam_normal_form, hnn_britton_reduce, AmalgamPresentation, AnyPresentation, FactorTag,
    GenWord, HnnPresentation, NormalForm, Syllable, Word, WordError,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum VertexType {
    A,
    B,
    M,
}

impl VertexType {
    fn tag(self) -> FactorTag {
        match self {
            VertexType::A => FactorTag::A,
            VertexType::B => FactorTag::B,
            VertexType::M => FactorTag::M,
        }
    }

    fn of(tag: FactorTag) -> VertexType {
        match tag {
            FactorTag::A => VertexType::A,
            FactorTag::B => VertexType::B,
            _ => VertexType::M,
        }
    }
}

/// The coset `rep · Γ_type`. `rep` is the canonical transversal word, so
/// structural equality is coset equality.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeVertex {
    pub rep: Vec<Syllable>,
    #[serde(rename = "type")]
    pub kind: VertexType,
}

impl TreeVertex {
    pub fn base(kind: VertexType) -> Self {
        TreeVertex {
            rep: Vec::new(),
            kind,
        }
    }
}

/// Which subgroup labels an edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeGroup {
    H,
    HPlus,
    HMinus,
}

/// An edge `rep · K` with `K` the edge group.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TreeEdge {
    pub label: Vec<Syllable>,
    pub group: EdgeGroup,
    pub endpoints: (TreeVertex, TreeVertex),
}

/// Canonical vertex `γ · Γ_which` for the element with normal form `nf`.
pub fn vertex_of<'a>(
    nf: &NormalForm,
    which: VertexType,
    p: impl Into<AnyPresentation<'a>>,
) -> Result<TreeVertex, WordError> {
    match p.into() {
        AnyPresentation::Amalgam(p) => amalgam_vertex(nf, which, p),
        AnyPresentation::Hnn(p) => hnn_vertex(nf, p),
    }
}

fn amalgam_vertex(
    nf: &NormalForm,
    which: VertexType,
    p: &AmalgamPresentation,
) -> Result<TreeVertex, WordError> {
    let mut syl: Vec<(FactorTag, GenWord)> = nf
        .syllables
        .iter()
        .map(|s| (s.factor, s.word().cloned().unwrap_or_default()))
        .collect();
    if nf.rl == 0 {
        syl.clear();
    }
    if syl.last().is_some_and(|(t, _)| *t == which.tag()) {
        syl.pop();
    }
    // Push edge-group remainders to the right; they die in Γ_which.
    let mut carry = GenWord::empty();
    let mut carry_from = FactorTag::A;
    let mut rep = Vec::with_capacity(syl.len());
    for (tag, w) in syl {
        let f = p.factor(tag);
        let h = p.edge_group(tag);
        let moved = if carry.is_empty() {
            GenWord::empty()
        } else {
            let hw = p
                .edge_group(carry_from)
                .express(p.factor(carry_from), &carry)?
                .expect("carry lies in the edge group");
            h.embed(&hw)
        };
        let (t, k) = h.coset_rep(f, &moved.mul(&w))?;
        rep.push(Syllable::new(tag, t));
        carry = f.canonical(&h.embed(&k))?;
        carry_from = tag;
    }
    Ok(TreeVertex { rep, kind: which })
}

fn hnn_vertex(nf: &NormalForm, p: &HnnPresentation) -> Result<TreeVertex, WordError> {
    let mut pending = GenWord::empty();
    let mut rep = Vec::new();
    for s in &nf.syllables {
        match (s.word(), s.exponent()) {
            (Some(w), _) => pending = p.m.canonical(&pending.mul(w))?,
            (None, Some(e)) => {
                for _ in 0..e.unsigned_abs() {
                    let unit = e.signum();
                    // h f = f (f^-1 h f) for h ∈ H+; h f^-1 = f^-1 (f h f^-1) for h ∈ H-.
                    let (sub, image) = if unit > 0 {
                        (&p.h_plus, &p.h_minus)
                    } else {
                        (&p.h_minus, &p.h_plus)
                    };
                    let (t, k) = sub.coset_rep(&p.m, &pending)?;
                    if !t.is_empty() {
                        rep.push(Syllable::m(t));
                    }
                    rep.push(Syllable::stable(unit));
                    pending = p.m.canonical(&image.embed(&k))?;
                }
            }
            _ => unreachable!("syllables carry a word or an exponent"),
        }
    }
    Ok(TreeVertex {
        rep,
        kind: VertexType::M,
    })
}

/// Normal form of `rep(v)^-1 · rep(w)`.
fn relative_element<'a>(
    v: &TreeVertex,
    w: &TreeVertex,
    p: &AnyPresentation<'a>,
) -> Result<NormalForm, WordError> {
    let g = Word::new(v.rep.clone())
        .inverse()
        .concat(&Word::new(w.rep.clone()));
    match p {
        AnyPresentation::Amalgam(p) => amalgam_normal_form(&g, p),
        AnyPresentation::Hnn(p) => hnn_britton_reduce(&g, p),
    }
}

/// Combinatorial distance in the Bass–Serre tree.
pub fn tree_distance<'a>(
    v: &TreeVertex,
    w: &TreeVertex,
    p: impl Into<AnyPresentation<'a>>,
) -> Result<usize, WordError> {
    let p = p.into();
    let g = relative_element(v, w, &p)?;
    match p {
        AnyPresentation::Hnn(_) => Ok(g.rl),
        AnyPresentation::Amalgam(_) => {
            let mut syl = if g.rl == 0 { Vec::new() } else { g.syllables };
            if syl.last().is_some_and(|s| s.factor == w.kind.tag()) {
                syl.pop();
            }
            Ok(match syl.first() {
                None => usize::from(v.kind != w.kind),
                Some(first) => syl.len() + usize::from(first.factor != v.kind.tag()),
            })
        }
    }
}

/// The geodesic vertex path `Γ_B, Γ_A, γ_1Γ_B, γ_1γ_2Γ_A, …` (amalgam,
/// starting with `γ_1 ∈ Γ_A`) or `M, μ_0 f^ε_1 M, …` (HNN).
pub fn normal_form_path<'a>(
    nf: &NormalForm,
    p: impl Into<AnyPresentation<'a>>,
) -> Result<Vec<TreeVertex>, WordError> {
    let p = p.into();
    match p {
        AnyPresentation::Amalgam(p) => {
            if nf.rl == 0 {
                return Ok(vec![TreeVertex::base(VertexType::A)]);
            }
            let tags: Vec<FactorTag> = nf.syllables.iter().map(|s| s.factor).collect();
            let mut path = vec![TreeVertex::base(VertexType::of(tags[0].other()))];
            for j in 0..=nf.syllables.len() {
                let kind = match tags.get(j) {
                    Some(t) => VertexType::of(*t),
                    None => VertexType::of(tags[j - 1].other()),
                };
                let prefix = NormalForm {
                    syllables: nf.syllables[..j].to_vec(),
                    rl: j,
                };
                path.push(amalgam_vertex(&prefix, kind, p)?);
            }
            Ok(path)
        }
        AnyPresentation::Hnn(p) => {
            let mut path = vec![TreeVertex::base(VertexType::M)];
            for (j, s) in nf.syllables.iter().enumerate() {
                if s.exponent().is_some() {
                    let prefix = NormalForm {
                        syllables: nf.syllables[..=j].to_vec(),
                        rl: 0,
                    };
                    path.push(hnn_vertex(&prefix, p)?);
                }
            }
            Ok(path)
        }
    }
}

/// The edge joining two adjacent vertices, or `None` if they are not adjacent.
pub fn edge_between<'a>(
    v: &TreeVertex,
    w: &TreeVertex,
    p: impl Into<AnyPresentation<'a>>,
) -> Result<Option<TreeEdge>, WordError> {
    let p = p.into();
    if tree_distance(v, w, p)? != 1 {
        return Ok(None);
    }
    let (short, long) = if v.rep.len() <= w.rep.len() {
        (v, w)
    } else {
        (w, v)
    };
    let (label, group) = match p {
        AnyPresentation::Amalgam(_) => (long.rep.clone(), EdgeGroup::H),
        AnyPresentation::Hnn(_) => {
            // long = short · t · f^±1 with t ∈ M possibly trivial.
            let mut label = long.rep.clone();
            let last = label.pop().and_then(|s| s.exponent()).unwrap_or(1);
            let group = if last > 0 {
                EdgeGroup::HPlus
            } else {
                EdgeGroup::HMinus
            };
            if label.len() < short.rep.len() {
                label = short.rep.clone();
            }
            (label, group)
        }
    };
    Ok(Some(TreeEdge {
        label,
        group,
        endpoints: (v.clone(), w.clone()),
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{bs12_hnn, sl2z_amalgam};

    fn nf_amalgam(p: &AmalgamPresentation, syl: Vec<Syllable>) -> NormalForm {
        amalgam_normal_form(&Word::new(syl), p).unwrap()
    }

    fn s() -> Syllable {
        Syllable::a(GenWord::gen(0))
    }

    fn u() -> Syllable {
        Syllable::b(GenWord::gen(0))
    }

    #[test]
    fn base_vertices_are_adjacent() {
        let p = sl2z_amalgam();
        let a = TreeVertex::base(VertexType::A);
        let b = TreeVertex::base(VertexType::B);
        assert_eq!(tree_distance(&a, &b, &p).unwrap(), 1);
        assert_eq!(tree_distance(&a, &a, &p).unwrap(), 0);
        let e = edge_between(&a, &b, &p).unwrap().unwrap();
        assert!(e.label.is_empty());
    }

    #[test]
    fn identity_gives_base_vertex() {
        let p = sl2z_amalgam();
        let v = vertex_of(&NormalForm::default(), VertexType::A, &p).unwrap();
        assert_eq!(v, TreeVertex::base(VertexType::A));
    }

    #[test]
    fn right_multiplication_by_factor_is_absorbed() {
        let p = sl2z_amalgam();
        let g = nf_amalgam(&p, vec![s(), u(), s()]);
        let v = vertex_of(&g, VertexType::B, &p).unwrap();
        assert_eq!(v.rep.len(), 3);
        for k in 0..6 {
            let gu = nf_amalgam(&p, vec![s(), u(), s(), Syllable::b(GenWord::gen(0).pow(k))]);
            assert_eq!(vertex_of(&gu, VertexType::B, &p).unwrap(), v);
        }
        // S·S² = S³ = -S: same vertex of either type up to the central -I.
        let g2 = nf_amalgam(&p, vec![s(), u(), Syllable::a(GenWord::gen(0).pow(3))]);
        assert_eq!(vertex_of(&g2, VertexType::B, &p).unwrap(), v);
    }

    #[test]
    fn path_of_single_syllable() {
        let p = sl2z_amalgam();
        let path = normal_form_path(&nf_amalgam(&p, vec![s()]), &p).unwrap();
        assert_eq!(path.len(), 3);
        assert_eq!(path[0], TreeVertex::base(VertexType::B));
        assert_eq!(path[1], TreeVertex::base(VertexType::A));
        assert_eq!(path[2].kind, VertexType::B);
        assert_eq!(path[2].rep, vec![s()]);
        let path = normal_form_path(&nf_amalgam(&p, vec![s(), u()]), &p).unwrap();
        assert_eq!(path.len(), 4);
        for w in path.windows(2) {
            assert_eq!(tree_distance(&w[0], &w[1], &p).unwrap(), 1);
        }
        assert_eq!(tree_distance(&path[0], &path[3], &p).unwrap(), 3);
    }

    #[test]
    fn hnn_coset_orientation() {
        let p = bs12_hnn();
        let nf = |syl: Vec<Syllable>| hnn_britton_reduce(&Word::new(syl), &p).unwrap();
        let a = |k: i64| Syllable::m(GenWord::gen(0).pow(k));
        let fm = hnn_vertex(&nf(vec![Syllable::stable(1)]), &p).unwrap();
        let afm = hnn_vertex(&nf(vec![a(1), Syllable::stable(1)]), &p).unwrap();
        let a2fm = hnn_vertex(&nf(vec![a(2), Syllable::stable(1)]), &p).unwrap();
        // a² ∈ H+ passes through f; a does not.
        assert_eq!(a2fm, fm);
        assert_ne!(afm, fm);
        // every a^k f^-1 M equals f^-1 M since H- = M.
        let f_inv = hnn_vertex(&nf(vec![Syllable::stable(-1)]), &p).unwrap();
        let a3f_inv = hnn_vertex(&nf(vec![a(3), Syllable::stable(-1)]), &p).unwrap();
        assert_eq!(a3f_inv, f_inv);
    }

    #[test]
    fn hnn_distance_is_relative_length() {
        let p = bs12_hnn();
        let g = hnn_britton_reduce(
            &Word::new(vec![
                Syllable::stable(1),
                Syllable::m(GenWord::gen(0)),
                Syllable::stable(1),
            ]),
            &p,
        )
        .unwrap();
        let v = vertex_of(&g, VertexType::M, &p).unwrap();
        let m = TreeVertex::base(VertexType::M);
        assert_eq!(tree_distance(&v, &m, &p).unwrap(), 2);
        let path = normal_form_path(&g, &p).unwrap();
        assert_eq!(path.len(), 3);
        let e = edge_between(&path[0], &path[1], &p).unwrap().unwrap();
        assert_eq!(e.group, EdgeGroup::HPlus);
    }

    #[test]
    fn vertex_json_shape() {
        let v = TreeVertex {
            rep: vec![s()],
            kind: VertexType::B,
        };
        let json = serde_json::to_string(&v).unwrap();
        assert_eq!(json, r#"{"rep":[{"factor":"A","element":[1]}],"type":"B"}"#);
    }
}
