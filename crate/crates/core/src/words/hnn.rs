use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    Element, FactorTag, GenWord, HnnPresentation, NormalForm, RewriteOrder, Syllable, Word,
    WordError,
};

#[derive(Clone, Debug, PartialEq)]
enum Item {
    M(GenWord),
    F(i8),
}

#[derive(Clone, Copy, Debug)]
enum Redex {
    Identity(usize),
    Merge(usize),
    /// `f^e μ f^-e` starting at the index, with `len` items (2 or 3).
    Pinch { start: usize, len: usize },
}

/// Subgroup word of `μ` when `f^e μ f^-e` is a pinch.
fn pinch_word(p: &HnnPresentation, e: i8, mu: &GenWord) -> Result<Option<GenWord>, WordError> {
    let sub = if e > 0 { &p.h_minus } else { &p.h_plus };
    sub.express(&p.m, mu)
}

fn redexes_at(items: &[Item], p: &HnnPresentation, i: usize) -> Result<Vec<Redex>, WordError> {
    let mut out = Vec::new();
    match &items[i] {
        Item::M(w) => {
            if p.m.is_identity(w)? {
                out.push(Redex::Identity(i));
                return Ok(out);
            }
            if matches!(items.get(i + 1), Some(Item::M(_))) {
                out.push(Redex::Merge(i));
            }
        }
        Item::F(e) => match (items.get(i + 1), items.get(i + 2)) {
            (Some(Item::F(e2)), _) if *e2 == -e => out.push(Redex::Pinch { start: i, len: 2 }),
            (Some(Item::M(mu)), Some(Item::F(e2))) if *e2 == -e
                && pinch_word(p, *e, mu)?.is_some() => {
                    out.push(Redex::Pinch { start: i, len: 3 });
                }
            _ => {}
        },
    }
    Ok(out)
}

fn apply(items: &mut Vec<Item>, p: &HnnPresentation, r: Redex) -> Result<(), WordError> {
    match r {
        Redex::Identity(i) => {
            items.remove(i);
        }
        Redex::Merge(i) => {
            let Item::M(right) = items.remove(i + 1) else {
                unreachable!("merge proposed for two M syllables")
            };
            if let Item::M(left) = &mut items[i] {
                *left = p.m.canonical(&left.mul(&right))?;
            }
        }
        Redex::Pinch { start, len } => {
            let Item::F(e) = items[start] else {
                unreachable!("pinch starts at a stable letter")
            };
            let replacement = if len == 2 {
                GenWord::empty()
            } else {
                let Item::M(mu) = &items[start + 1] else {
                    unreachable!("pinch has an M syllable in the middle")
                };
                let hword = pinch_word(p, e, mu)?.expect("pinch was checked");
                // f η f^-1 = φ(η) for η ∈ H-, and f^-1 φ(η) f = η.
                let image = if e > 0 {
                    p.h_plus.embed(&hword)
                } else {
                    p.h_minus.embed(&hword)
                };
                p.m.canonical(&image)?
            };
            items.splice(start..start + len, [Item::M(replacement)]);
        }
    }
    Ok(())
}

/// Britton reduction with the default leftmost-innermost order.
pub fn hnn_britton_reduce(w: &Word, p: &HnnPresentation) -> Result<NormalForm, WordError> {
    hnn_britton_reduce_with(w, p, RewriteOrder::LeftmostInnermost)
}

pub fn hnn_britton_reduce_with(
    w: &Word,
    p: &HnnPresentation,
    order: RewriteOrder,
) -> Result<NormalForm, WordError> {
    let mut items = to_items(w, p)?;
    let mut rng = match order {
        RewriteOrder::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    loop {
        let chosen = match order {
            RewriteOrder::LeftmostInnermost => first(&items, p, 0..items.len())?,
            RewriteOrder::Rightmost => first(&items, p, (0..items.len()).rev())?,
            RewriteOrder::Seeded(_) => {
                let mut all = Vec::new();
                for i in 0..items.len() {
                    all.extend(redexes_at(&items, p, i)?);
                }
                if all.is_empty() {
                    None
                } else {
                    let k = rng.as_mut().expect("seeded").gen_range(0..all.len());
                    Some(all[k])
                }
            }
        };
        match chosen {
            Some(r) => apply(&mut items, p, r)?,
            None => break,
        }
    }
    Ok(from_items(items))
}

fn first(
    items: &[Item],
    p: &HnnPresentation,
    positions: impl Iterator<Item = usize>,
) -> Result<Option<Redex>, WordError> {
    for i in positions {
        if let Some(r) = redexes_at(items, p, i)?.into_iter().next() {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

fn to_items(w: &Word, p: &HnnPresentation) -> Result<Vec<Item>, WordError> {
    let mut items = Vec::with_capacity(w.syllables.len());
    for (i, s) in w.syllables.iter().enumerate() {
        match (s.factor, &s.element) {
            (FactorTag::M, Element::Word(word)) => {
                p.m.check_word(word)
                    .map_err(|detail| WordError::FactorMismatch { position: i, detail })?;
                items.push(Item::M(p.m.canonical(word)?));
            }
            (FactorTag::StableLetter, Element::Exponent(e)) => {
                let unit = e.signum();
                for _ in 0..e.unsigned_abs() {
                    items.push(Item::F(unit));
                }
            }
            _ => {
                return Err(WordError::FactorMismatch {
                    position: i,
                    detail: format!("{:?} syllable is not legal in an HNN word", s.factor),
                })
            }
        }
    }
    Ok(items)
}

fn from_items(items: Vec<Item>) -> NormalForm {
    let rl = items.iter().filter(|x| matches!(x, Item::F(_))).count();
    NormalForm {
        syllables: items
            .into_iter()
            .map(|x| match x {
                Item::M(w) => Syllable::m(w),
                Item::F(e) => Syllable::stable(e),
            })
            .collect(),
        rl,
    }
}

/// Checks Britton's conditions without rewriting: no trivial or adjacent
/// M syllables and no pinch.
pub fn is_hnn_normal_form(syllables: &[Syllable], p: &HnnPresentation) -> Result<bool, WordError> {
    let items = to_items(&Word::new(syllables.to_vec()), p)?;
    if items.len()
        != syllables
            .iter()
            .map(|s| s.exponent().map_or(1, |e| e.unsigned_abs() as usize))
            .sum::<usize>()
    {
        return Ok(false);
    }
    for i in 0..items.len() {
        if !redexes_at(&items, p, i)?.is_empty() {
            return Ok(false);
        }
    }
    Ok(true)
}
