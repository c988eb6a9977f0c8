//! Word, tree and Cayley-ball routines against oracles that share no code
//! with them: integer matrices, coset intersection and free reduction.

use std::collections::{HashMap, HashSet, VecDeque};
use std::sync::OnceLock;

use proptest::prelude::*;

use flagpong::cayley::{CayleyBall, FreeGroup};
use flagpong::certify::{presentation_injectivity, InjectivityParams, Verdict};
use flagpong::exact::GroupMatrix;
use flagpong::fixtures::{bs12_hnn, s_matrix, sl2z_amalgam};
use flagpong::tree::{normal_form_path, tree_distance, TreeVertex, VertexType};
use flagpong::words::{
    amalgam_normal_form, AmalgamPresentation, Factor, FactorKind, GenWord, Letter, Subgroup,
    Syllable, Word,
};

type Int2 = [[i64; 2]; 2];

fn to_int(m: &GroupMatrix) -> Int2 {
    let f = m.to_f64();
    let r = |i, j| {
        let x: f64 = f[(i, j)];
        assert_eq!(x, x.round(), "non-integer entry");
        x as i64
    };
    [[r(0, 0), r(0, 1)], [r(1, 0), r(1, 1)]]
}

fn mul(x: &Int2, y: &Int2) -> Int2 {
    let e = |i: usize, j: usize| x[i][0] * y[0][j] + x[i][1] * y[1][j];
    [[e(0, 0), e(0, 1)], [e(1, 0), e(1, 1)]]
}

fn inv(x: &Int2) -> Int2 {
    [[x[1][1], -x[0][1]], [-x[1][0], x[0][0]]]
}

fn cyclic(g: &Int2) -> Vec<Int2> {
    let mut out = vec![[[1, 0], [0, 1]]];
    loop {
        let next = mul(out.last().unwrap(), g);
        if next == out[0] {
            return out;
        }
        out.push(next);
    }
}

/// Normal forms of SL(2,Z) with first syllable in either factor, up to `n`
/// syllables.
fn sl2z_normal_forms(n: usize) -> Vec<Word> {
    let mut out = vec![Word::default()];
    let mut frontier = vec![Vec::<Syllable>::new()];
    for _ in 0..n {
        let mut next = Vec::new();
        for w in &frontier {
            let last = w.last().map(|s| s.factor);
            for (tag, powers) in [(flagpong::words::FactorTag::A, &[1i64, 3][..]), (flagpong::words::FactorTag::B, &[1, 2, 4, 5][..])] {
                if last == Some(tag) {
                    continue;
                }
                for &k in powers {
                    let mut v = w.clone();
                    v.push(Syllable::new(tag, GenWord::gen(0).pow(k)));
                    next.push(v);
                }
            }
        }
        out.extend(next.iter().cloned().map(Word::new));
        frontier = next;
    }
    out
}

/// Vertices `γΓ_A`, `γΓ_B` are adjacent iff the cosets meet, i.e.
/// `γ^-1 γ' ∈ Γ_A Γ_B` (or `Γ_B Γ_A`). Distances come from breadth-first
/// search over this adjacency inside a ball of the tree, which is convex.
#[test]
fn amalgam_tree_distance_matches_coset_bfs() {
    let p = sl2z_amalgam();
    let s = to_int(&p.a.matrices[0]);
    let u = to_int(&p.b.matrices[0]);
    let (ga, gb) = (cyclic(&s), cyclic(&u));
    let mut ab = HashSet::new();
    for x in &ga {
        for y in &gb {
            ab.insert(mul(x, y));
        }
    }

    let mut vertices: Vec<TreeVertex> = Vec::new();
    let mut seen = HashSet::new();
    for w in sl2z_normal_forms(8) {
        let nf = amalgam_normal_form(&w, &p).unwrap();
        for v in normal_form_path(&nf, &p).unwrap() {
            if seen.insert(v.clone()) {
                vertices.push(v);
            }
        }
    }
    let elem = |v: &TreeVertex| to_int(&p.evaluate(&Word::new(v.rep.clone())).unwrap());
    let mats: Vec<Int2> = vertices.iter().map(elem).collect();
    let n = vertices.len();
    let mut adj = vec![Vec::new(); n];
    for i in 0..n {
        for j in 0..n {
            let (vi, vj) = (&vertices[i], &vertices[j]);
            let rel = mul(&inv(&mats[i]), &mats[j]);
            let meet = match (vi.kind, vj.kind) {
                (VertexType::A, VertexType::B) => ab.contains(&rel),
                (VertexType::B, VertexType::A) => ab.contains(&inv(&rel)),
                _ => false,
            };
            if meet {
                adj[i].push(j);
            }
        }
    }
    assert!(n > 100, "{n} vertices");
    for start in 0..n {
        let mut dist = vec![usize::MAX; n];
        dist[start] = 0;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if dist[j] == usize::MAX {
                    dist[j] = dist[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        for j in 0..n {
            assert_eq!(
                tree_distance(&vertices[start], &vertices[j], &p).unwrap(),
                dist[j],
                "{:?} to {:?}",
                vertices[start],
                vertices[j]
            );
        }
    }
}

#[test]
fn sl2z_injectivity_agrees_with_integer_products() {
    let p = sl2z_amalgam();
    let r = presentation_injectivity(
        &p,
        InjectivityParams {
            max_rl: 6,
            syllable_len: 3,
            set_rl: 0,
        },
    )
    .unwrap();
    assert_eq!(r.verdict, Verdict::CertifiedAtDepth, "{r:#?}");
    let id = [[1, 0], [0, 1]];
    for w in sl2z_normal_forms(6).into_iter().skip(1) {
        let m = to_int(&p.evaluate(&w).unwrap());
        assert_ne!(m, id, "{w:?}");
    }
}

#[test]
fn bs12_injectivity_is_certified() {
    let p = bs12_hnn();
    let r = presentation_injectivity(&p, InjectivityParams { max_rl: 6, syllable_len: 2, set_rl: 0 }).unwrap();
    assert_eq!(r.verdict, Verdict::CertifiedAtDepth, "{r:#?}");
}

/// `Z/4 ⋆_{Z/2} Z/4` mapped with both factors onto `<S>`: `S_A S_B^-1` has
/// relative length 2 and trivial image.
#[test]
fn collapsed_amalgam_is_falsified() {
    let factor = || {
        Factor::new(vec!["S".into()], vec![GroupMatrix::Exact(s_matrix())], FactorKind::Enumerated, false).unwrap()
    };
    let h = Subgroup::new(vec![GenWord::gen(0).pow(2)]);
    let p = AmalgamPresentation::new(factor(), factor(), h.clone(), h).unwrap();
    let r = presentation_injectivity(&p, InjectivityParams { max_rl: 3, syllable_len: 1, set_rl: 0 }).unwrap();
    assert_eq!(r.verdict, Verdict::Falsified);
    let w = Word::new(vec![Syllable::a(GenWord::gen(0)), Syllable::b(GenWord::gen(0).inverse())]);
    assert_eq!(amalgam_normal_form(&w, &p).unwrap().rl, 2);
    assert!(p.evaluate(&w).unwrap().is_identity(0.0, false));
}

fn reduced_word() -> impl Strategy<Value = GenWord> {
    prop::collection::vec((0u16..2, any::<bool>()), 0..6)
        .prop_map(|v| GenWord(v.into_iter().map(|(gen, inv)| Letter { gen, inv }).collect()).reduced())
}

fn f2_ball() -> &'static CayleyBall<FreeGroup> {
    static BALL: OnceLock<CayleyBall<FreeGroup>> = OnceLock::new();
    BALL.get_or_init(|| CayleyBall::new(FreeGroup { rank: 2 }, vec![GenWord::gen(0), GenWord::gen(1)], 6))
}

proptest! {
    /// In `F_2`, the nearest point of `<a>` to `w` is the maximal power of
    /// `a` that `w` starts with.
    #[test]
    fn free_projection_is_the_leading_power(w in reduced_word()) {
        let ball = f2_ball();
        let y = ball.subgroup_trace(vec![GenWord::gen(0)]);
        let lead: Vec<Letter> = w
            .letters()
            .iter()
            .take_while(|l| l.gen == 0)
            .copied()
            .collect();
        prop_assert_eq!(ball.nearest_point_projection(&w, &y).unwrap(), GenWord(lead.clone()));
        prop_assert_eq!(ball.projection_displacement(&w, &y).unwrap(), lead.len());
    }
}

#[test]
fn free_ball_lengths_are_reduced_lengths() {
    let ball = CayleyBall::new(FreeGroup { rank: 2 }, vec![GenWord::gen(0), GenWord::gen(1)], 5);
    let mut by_len: HashMap<usize, usize> = HashMap::new();
    for g in ball.elements() {
        assert_eq!(ball.length(g), Some(g.len()));
        *by_len.entry(g.len()).or_default() += 1;
    }
    for n in 1..=5 {
        assert_eq!(by_len[&n], 4 * 3usize.pow(n as u32 - 1));
    }
}
