use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{
    amalgam_syllable, AmalgamPresentation, FactorTag, GenWord, NormalForm, RewriteOrder, Syllable,
    Word, WordError,
};

#[derive(Clone, Copy, Debug)]
enum Redex {
    /// Drop an identity syllable.
    Identity(usize),
    /// Multiply two neighbours from the same factor.
    Merge(usize),
    /// Move an edge-group syllable into a neighbour.
    Absorb(usize),
}

type Items = Vec<(FactorTag, GenWord)>;

fn redexes_at(items: &Items, p: &AmalgamPresentation, i: usize) -> Result<Vec<Redex>, WordError> {
    let mut out = Vec::new();
    let (tag, w) = &items[i];
    let f = p.factor(*tag);
    if f.is_identity(w)? {
        out.push(Redex::Identity(i));
        return Ok(out);
    }
    if i + 1 < items.len() && items[i + 1].0 == *tag {
        out.push(Redex::Merge(i));
    }
    if items.len() >= 2 && p.edge_group(*tag).contains(f, w)? {
        out.push(Redex::Absorb(i));
    }
    Ok(out)
}

fn apply(items: &mut Items, p: &AmalgamPresentation, r: Redex) -> Result<(), WordError> {
    match r {
        Redex::Identity(i) => {
            items.remove(i);
        }
        Redex::Merge(i) => {
            let (tag, right) = items.remove(i + 1);
            let merged = p.factor(tag).canonical(&items[i].1.mul(&right))?;
            items[i].1 = merged;
        }
        Redex::Absorb(i) => {
            let (tag, w) = items.remove(i);
            let j = if i < items.len() { i } else { i - 1 };
            let target = items[j].0;
            let moved = if target == tag {
                w
            } else {
                let hword = p
                    .edge_group(tag)
                    .express(p.factor(tag), &w)?
                    .expect("absorb is only proposed for edge-group syllables");
                p.edge_group(target).embed(&hword)
            };
            let combined = if j == i {
                moved.mul(&items[j].1)
            } else {
                items[j].1.mul(&moved)
            };
            items[j].1 = p.factor(target).canonical(&combined)?;
        }
    }
    Ok(())
}

/// Normal form with the default leftmost-innermost rewriting order.
pub fn amalgam_normal_form(w: &Word, p: &AmalgamPresentation) -> Result<NormalForm, WordError> {
    amalgam_normal_form_with(w, p, RewriteOrder::LeftmostInnermost)
}

pub fn amalgam_normal_form_with(
    w: &Word,
    p: &AmalgamPresentation,
    order: RewriteOrder,
) -> Result<NormalForm, WordError> {
    let mut items: Items = Vec::with_capacity(w.syllables.len());
    for (i, s) in w.syllables.iter().enumerate() {
        let (tag, word) = amalgam_syllable(i, s)?;
        p.factor(tag)
            .check_word(word)
            .map_err(|detail| WordError::FactorMismatch { position: i, detail })?;
        items.push((tag, p.factor(tag).canonical(word)?));
    }
    let mut rng = match order {
        RewriteOrder::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(seed)),
        _ => None,
    };
    loop {
        let chosen = match order {
            RewriteOrder::LeftmostInnermost => first_redex(&items, p, 0..items.len())?,
            RewriteOrder::Rightmost => first_redex(&items, p, (0..items.len()).rev())?,
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
    let rl = match items.len() {
        0 => 0,
        1 => {
            let (tag, w) = &items[0];
            usize::from(!p.edge_group(*tag).contains(p.factor(*tag), w)?)
        }
        n => n,
    };
    Ok(NormalForm {
        syllables: items.into_iter().map(|(t, w)| Syllable::new(t, w)).collect(),
        rl,
    })
}

fn first_redex(
    items: &Items,
    p: &AmalgamPresentation,
    positions: impl Iterator<Item = usize>,
) -> Result<Option<Redex>, WordError> {
    for i in positions {
        if let Some(r) = redexes_at(items, p, i)?.into_iter().next() {
            return Ok(Some(r));
        }
    }
    Ok(None)
}

/// Checks the normal-form conditions without rewriting: syllables alternate
/// between the factors, none is trivial, and none lies in the edge group
/// unless it is the only syllable.
pub fn is_amalgam_normal_form(
    syllables: &[Syllable],
    p: &AmalgamPresentation,
) -> Result<bool, WordError> {
    let mut prev: Option<FactorTag> = None;
    for (i, s) in syllables.iter().enumerate() {
        let (tag, w) = amalgam_syllable(i, s)?;
        let f = p.factor(tag);
        if prev == Some(tag) || f.is_identity(w)? {
            return Ok(false);
        }
        if syllables.len() >= 2 && p.edge_group(tag).contains(f, w)? {
            return Ok(false);
        }
        prev = Some(tag);
    }
    Ok(true)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::sl2z_amalgam;

    fn s() -> Syllable {
        Syllable::a(GenWord::from_codes(&[1]))
    }

    fn u() -> Syllable {
        Syllable::b(GenWord::from_codes(&[1]))
    }

    #[test]
    fn empty_word() {
        let p = sl2z_amalgam();
        let nf = amalgam_normal_form(&Word::default(), &p).unwrap();
        assert!(nf.syllables.is_empty());
        assert_eq!(nf.rl, 0);
    }

    #[test]
    fn sus_has_length_three() {
        let p = sl2z_amalgam();
        let nf = amalgam_normal_form(&Word::new(vec![s(), u(), s()]), &p).unwrap();
        assert_eq!(nf.rl, 3);
        assert!(is_amalgam_normal_form(&nf.syllables, &p).unwrap());
    }

    #[test]
    fn s_times_s_cubed_collapses() {
        let p = sl2z_amalgam();
        let w = Word::new(vec![s(), Syllable::a(GenWord::from_codes(&[1, 1, 1]))]);
        let nf = amalgam_normal_form(&w, &p).unwrap();
        assert_eq!(nf.rl, 0);
        assert!(nf.syllables.is_empty());
    }

    #[test]
    fn central_syllable_is_absorbed() {
        // S · U^3 · S · U = S · (-I) · S · U = U.
        let p = sl2z_amalgam();
        let w = Word::new(vec![s(), Syllable::b(GenWord::from_codes(&[1, 1, 1])), s(), u()]);
        let nf = amalgam_normal_form(&w, &p).unwrap();
        assert_eq!(nf.rl, 1);
        let direct = p.evaluate(&w).unwrap();
        assert_eq!(p.evaluate(&nf.word()).unwrap(), direct);
    }

    #[test]
    fn wrong_factor_tag_is_rejected() {
        let p = sl2z_amalgam();
        let w = Word::new(vec![Syllable::stable(1)]);
        assert!(matches!(
            amalgam_normal_form(&w, &p),
            Err(WordError::FactorMismatch { position: 0, .. })
        ));
        let w = Word::new(vec![Syllable::a(GenWord::from_codes(&[2]))]);
        assert!(matches!(
            amalgam_normal_form(&w, &p),
            Err(WordError::FactorMismatch { .. })
        ));
    }
}
