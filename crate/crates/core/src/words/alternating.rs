use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    AmalgamPresentation, Factor, FactorTag, GenWord, HnnPresentation, Letter, Syllable, Word,
    WordError,
};

/// Where the letters of an alternating sequence come from. Explicit lists
/// are cycled when shorter than the sequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LetterSource {
    Explicit(Vec<GenWord>),
    Seeded { seed: u64, max_len: usize },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SignSource {
    Explicit(Vec<i8>),
    Seeded(u64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlternatingSpec {
    /// α_1 β_1 α_2 β_2 ⋯
    TypeA { alphas: LetterSource, betas: LetterSource },
    /// β_1 α_1 β_2 α_2 ⋯
    TypeB { alphas: LetterSource, betas: LetterSource },
    /// μ_0 f^ε_1 μ_1 f^ε_2 ⋯
    Hnn { mus: LetterSource, epsilons: SignSource },
}

#[derive(Clone, Copy, Debug)]
pub enum AnyPresentation<'a> {
    Amalgam(&'a AmalgamPresentation),
    Hnn(&'a HnnPresentation),
}

impl<'a> From<&'a AmalgamPresentation> for AnyPresentation<'a> {
    fn from(p: &'a AmalgamPresentation) -> Self {
        AnyPresentation::Amalgam(p)
    }
}

impl<'a> From<&'a HnnPresentation> for AnyPresentation<'a> {
    fn from(p: &'a HnnPresentation) -> Self {
        AnyPresentation::Hnn(p)
    }
}

fn random_word(rng: &mut ChaCha8Rng, rank: usize, max_len: usize) -> GenWord {
    let len = rng.gen_range(1..=max_len.max(1));
    let mut w = GenWord::empty();
    while w.len() < len {
        let l = Letter {
            gen: rng.gen_range(0..rank) as u16,
            inv: rng.gen(),
        };
        w = w.mul(&GenWord(vec![l]));
    }
    w
}

struct Letters<'s> {
    source: &'s LetterSource,
    rng: Option<ChaCha8Rng>,
    next: usize,
}

impl<'s> Letters<'s> {
    fn new(source: &'s LetterSource) -> Self {
        let rng = match source {
            LetterSource::Seeded { seed, .. } => Some(ChaCha8Rng::seed_from_u64(*seed)),
            LetterSource::Explicit(_) => None,
        };
        Letters { source, rng, next: 0 }
    }

    /// Next letter; seeded sources redraw until `accept` holds.
    fn draw(
        &mut self,
        factor: &Factor,
        accept: impl Fn(&GenWord) -> Result<bool, WordError>,
    ) -> Result<GenWord, WordError> {
        let index = self.next;
        self.next += 1;
        match self.source {
            LetterSource::Explicit(list) => {
                if list.is_empty() {
                    return Err(WordError::LetterRejected {
                        index,
                        reason: "empty letter list".into(),
                    });
                }
                let w = list[index % list.len()].clone();
                factor
                    .check_word(&w)
                    .map_err(|reason| WordError::LetterRejected { index, reason })?;
                if !accept(&w)? {
                    return Err(WordError::LetterRejected {
                        index,
                        reason: "letter lies in the edge group".into(),
                    });
                }
                Ok(w)
            }
            LetterSource::Seeded { max_len, .. } => {
                let rng = self.rng.as_mut().expect("seeded source");
                for _ in 0..1000 {
                    let w = factor.canonical(&random_word(rng, factor.rank(), *max_len))?;
                    if accept(&w)? {
                        return Ok(w);
                    }
                }
                Err(WordError::LetterRejected {
                    index,
                    reason: "no admissible letter found in 1000 draws".into(),
                })
            }
        }
    }
}

/// Prefixes `ω_1, …, ω_n` of one alternating string; each is already a
/// normal form.
pub fn alternating_sequence<'a>(
    spec: &AlternatingSpec,
    n: usize,
    p: impl Into<AnyPresentation<'a>>,
) -> Result<Vec<Word>, WordError> {
    match (spec, p.into()) {
        (AlternatingSpec::TypeA { alphas, betas }, AnyPresentation::Amalgam(p)) => {
            amalgam_sequence(alphas, betas, FactorTag::A, n, p)
        }
        (AlternatingSpec::TypeB { alphas, betas }, AnyPresentation::Amalgam(p)) => {
            amalgam_sequence(alphas, betas, FactorTag::B, n, p)
        }
        (AlternatingSpec::Hnn { mus, epsilons }, AnyPresentation::Hnn(p)) => {
            hnn_sequence(mus, epsilons, n, p)
        }
        _ => Err(WordError::LetterRejected {
            index: 0,
            reason: "sequence type does not match the presentation".into(),
        }),
    }
}

fn amalgam_sequence(
    alphas: &LetterSource,
    betas: &LetterSource,
    first: FactorTag,
    n: usize,
    p: &AmalgamPresentation,
) -> Result<Vec<Word>, WordError> {
    let mut a = Letters::new(alphas);
    let mut b = Letters::new(betas);
    let mut syllables = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    let mut tag = first;
    for _ in 0..n {
        let f = p.factor(tag);
        let h = p.edge_group(tag);
        let accept = |w: &GenWord| -> Result<bool, WordError> {
            Ok(!f.is_identity(w)? && !h.contains(f, w)?)
        };
        let w = if tag == FactorTag::A {
            a.draw(f, accept)?
        } else {
            b.draw(f, accept)?
        };
        syllables.push(Syllable::new(tag, w));
        out.push(Word::new(syllables.clone()));
        tag = tag.other();
    }
    Ok(out)
}

fn hnn_sequence(
    mus: &LetterSource,
    epsilons: &SignSource,
    n: usize,
    p: &HnnPresentation,
) -> Result<Vec<Word>, WordError> {
    let mut letters = Letters::new(mus);
    let mut sign_rng = match epsilons {
        SignSource::Seeded(seed) => Some(ChaCha8Rng::seed_from_u64(*seed)),
        SignSource::Explicit(_) => None,
    };
    let mut syllables: Vec<Syllable> = Vec::new();
    let mut out = Vec::with_capacity(n);
    let mut prev_sign: Option<i8> = None;
    for k in 0..n {
        let mu = letters.draw(&p.m, |_| Ok(true))?;
        // μ_k sits between f^ε_k and f^ε_(k+1); a pinch there forces the sign.
        let forced = match prev_sign {
            Some(1) if p.h_minus.contains(&p.m, &mu)? => Some(1),
            Some(-1) if p.h_plus.contains(&p.m, &mu)? => Some(-1),
            _ => None,
        };
        let sign = match epsilons {
            SignSource::Explicit(list) => {
                let s = *list.get(k % list.len().max(1)).ok_or(WordError::LetterRejected {
                    index: k,
                    reason: "empty sign list".into(),
                })?;
                if s != 1 && s != -1 {
                    return Err(WordError::LetterRejected {
                        index: k,
                        reason: format!("exponent {s} is not ±1"),
                    });
                }
                if forced.is_some_and(|f| f != s) {
                    return Err(WordError::LetterRejected {
                        index: k,
                        reason: "sign change across an associated-subgroup letter".into(),
                    });
                }
                s
            }
            SignSource::Seeded(_) => forced.unwrap_or_else(|| {
                if sign_rng.as_mut().expect("seeded").gen() {
                    1
                } else {
                    -1
                }
            }),
        };
        if !mu.is_empty() {
            syllables.push(Syllable::m(mu));
        }
        syllables.push(Syllable::stable(sign));
        out.push(Word::new(syllables.clone()));
        prev_sign = Some(sign);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures::{bs12_hnn, sl2z_amalgam};
    use crate::words::{
        amalgam_normal_form, hnn_britton_reduce, is_amalgam_normal_form, is_hnn_normal_form,
    };

    #[test]
    fn type_a_prefixes() {
        let p = sl2z_amalgam();
        let spec = AlternatingSpec::TypeA {
            alphas: LetterSource::Explicit(vec![GenWord::gen(0)]),
            betas: LetterSource::Explicit(vec![GenWord::gen(0)]),
        };
        let seq = alternating_sequence(&spec, 2, &p).unwrap();
        assert_eq!(seq.len(), 2);
        assert_eq!(seq[0].syllables, vec![Syllable::a(GenWord::gen(0))]);
        let rls: Vec<usize> = seq
            .iter()
            .map(|w| amalgam_normal_form(w, &p).unwrap().rl)
            .collect();
        assert_eq!(rls, vec![1, 2]);
    }

    #[test]
    fn edge_group_letter_is_rejected() {
        let p = sl2z_amalgam();
        let spec = AlternatingSpec::TypeA {
            alphas: LetterSource::Explicit(vec![GenWord::from_codes(&[1, 1])]),
            betas: LetterSource::Explicit(vec![GenWord::gen(0)]),
        };
        assert!(matches!(
            alternating_sequence(&spec, 1, &p),
            Err(WordError::LetterRejected { index: 0, .. })
        ));
    }

    #[test]
    fn seeded_amalgam_sequences_are_normal_forms() {
        let p = sl2z_amalgam();
        for seed in 0..20 {
            let spec = AlternatingSpec::TypeB {
                alphas: LetterSource::Seeded { seed, max_len: 3 },
                betas: LetterSource::Seeded { seed: seed + 100, max_len: 3 },
            };
            for (k, w) in alternating_sequence(&spec, 8, &p).unwrap().iter().enumerate() {
                assert!(is_amalgam_normal_form(&w.syllables, &p).unwrap());
                assert_eq!(amalgam_normal_form(w, &p).unwrap().rl, k + 1);
            }
        }
    }

    #[test]
    fn hnn_constant_string() {
        let p = bs12_hnn();
        let spec = AlternatingSpec::Hnn {
            mus: LetterSource::Explicit(vec![GenWord::gen(0)]),
            epsilons: SignSource::Explicit(vec![1]),
        };
        let seq = alternating_sequence(&spec, 3, &p).unwrap();
        for (k, w) in seq.iter().enumerate() {
            assert!(is_hnn_normal_form(&w.syllables, &p).unwrap());
            assert_eq!(hnn_britton_reduce(w, &p).unwrap().rl, k + 1);
        }
    }

    #[test]
    fn hnn_sign_rule_enforced() {
        let p = bs12_hnn();
        // a ∈ H- after f forces the next exponent to stay +1.
        let spec = AlternatingSpec::Hnn {
            mus: LetterSource::Explicit(vec![GenWord::gen(0)]),
            epsilons: SignSource::Explicit(vec![1, -1]),
        };
        assert!(matches!(
            alternating_sequence(&spec, 2, &p),
            Err(WordError::LetterRejected { index: 1, .. })
        ));
    }

    #[test]
    fn seeded_hnn_sequences_are_normal_forms() {
        let p = bs12_hnn();
        for seed in 0..20 {
            let spec = AlternatingSpec::Hnn {
                mus: LetterSource::Seeded { seed, max_len: 3 },
                epsilons: SignSource::Seeded(seed + 7),
            };
            for w in alternating_sequence(&spec, 6, &p).unwrap() {
                assert!(is_hnn_normal_form(&w.syllables, &p).unwrap());
            }
        }
    }
}
