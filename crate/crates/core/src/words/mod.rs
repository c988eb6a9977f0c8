//! Syllable words over amalgamated free products and HNN extensions:
//! normal forms, relative length and alternating sequences.

mod alternating;
mod amalgam;
mod factor;
mod hnn;
mod letters;

pub use alternating::{alternating_sequence, AlternatingSpec, AnyPresentation, LetterSource, SignSource};
pub use amalgam::{amalgam_normal_form, amalgam_normal_form_with, is_amalgam_normal_form};
pub use factor::{Factor, FactorKind, Subgroup, DEFAULT_BUDGET};
pub use hnn::{hnn_britton_reduce, hnn_britton_reduce_with, is_hnn_normal_form};
pub use letters::{reduced_words_of_length, GenWord, Letter};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exact::GroupMatrix;
use crate::numeric::POLICY;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WordError {
    #[error("membership oracle exceeded its budget of {budget}")]
    MembershipUndecidable { budget: usize },
    #[error("syllable {position}: {detail}")]
    FactorMismatch { position: usize, detail: String },
    #[error("letter {index} rejected: {reason}")]
    LetterRejected { index: usize, reason: String },
    #[error("invalid presentation: {0}")]
    InvalidPresentation(String),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FactorTag {
    A,
    B,
    M,
    StableLetter,
}

impl FactorTag {
    pub fn other(self) -> FactorTag {
        match self {
            FactorTag::A => FactorTag::B,
            FactorTag::B => FactorTag::A,
            t => t,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Element {
    Word(GenWord),
    Exponent(i8),
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Syllable {
    pub factor: FactorTag,
    pub element: Element,
}

impl Syllable {
    pub fn new(factor: FactorTag, word: GenWord) -> Self {
        Syllable {
            factor,
            element: Element::Word(word),
        }
    }

    pub fn a(word: GenWord) -> Self {
        Syllable::new(FactorTag::A, word)
    }

    pub fn b(word: GenWord) -> Self {
        Syllable::new(FactorTag::B, word)
    }

    pub fn m(word: GenWord) -> Self {
        Syllable::new(FactorTag::M, word)
    }

    pub fn stable(exp: i8) -> Self {
        Syllable {
            factor: FactorTag::StableLetter,
            element: Element::Exponent(exp),
        }
    }

    pub fn word(&self) -> Option<&GenWord> {
        match &self.element {
            Element::Word(w) => Some(w),
            Element::Exponent(_) => None,
        }
    }

    pub fn exponent(&self) -> Option<i8> {
        match self.element {
            Element::Exponent(e) => Some(e),
            Element::Word(_) => None,
        }
    }

    pub fn inverse(&self) -> Syllable {
        Syllable {
            factor: self.factor,
            element: match &self.element {
                Element::Word(w) => Element::Word(w.inverse()),
                Element::Exponent(e) => Element::Exponent(-e),
            },
        }
    }
}

/// A raw word: a product of syllables, not necessarily reduced.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word {
    pub syllables: Vec<Syllable>,
}

impl Word {
    pub fn new(syllables: Vec<Syllable>) -> Self {
        Word { syllables }
    }

    pub fn inverse(&self) -> Word {
        Word::new(self.syllables.iter().rev().map(Syllable::inverse).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        let mut s = self.syllables.clone();
        s.extend(other.syllables.iter().cloned());
        Word::new(s)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct NormalForm {
    pub syllables: Vec<Syllable>,
    pub rl: usize,
}

impl NormalForm {
    pub fn word(&self) -> Word {
        Word::new(self.syllables.clone())
    }
}

pub fn relative_length(nf: &NormalForm) -> usize {
    nf.rl
}

/// `Γ_A ⋆_H Γ_B`. The `i`-th generators of `h_in_a` and `h_in_b` are
/// identified.
#[derive(Clone, Debug)]
pub struct AmalgamPresentation {
    pub a: Factor,
    pub b: Factor,
    pub h_in_a: Subgroup,
    pub h_in_b: Subgroup,
}

impl AmalgamPresentation {
    pub fn new(a: Factor, b: Factor, h_in_a: Subgroup, h_in_b: Subgroup) -> Result<Self, WordError> {
        if h_in_a.generators.len() != h_in_b.generators.len() {
            return Err(WordError::InvalidPresentation(
                "edge group embeddings have different numbers of generators".into(),
            ));
        }
        if a.dim() != b.dim() {
            return Err(WordError::InvalidPresentation("factor dimensions differ".into()));
        }
        for (i, (wa, wb)) in h_in_a.generators.iter().zip(&h_in_b.generators).enumerate() {
            a.check_word(wa).map_err(WordError::InvalidPresentation)?;
            b.check_word(wb).map_err(WordError::InvalidPresentation)?;
            let (ma, mb) = (a.evaluate(wa), b.evaluate(wb));
            if !ma.same_element(&mb, POLICY.float_compare, a.projective) {
                return Err(WordError::InvalidPresentation(format!(
                    "edge generator {} has different images in the two factors",
                    i + 1
                )));
            }
        }
        Ok(AmalgamPresentation { a, b, h_in_a, h_in_b })
    }

    pub fn factor(&self, tag: FactorTag) -> &Factor {
        match tag {
            FactorTag::B => &self.b,
            _ => &self.a,
        }
    }

    pub fn edge_group(&self, tag: FactorTag) -> &Subgroup {
        match tag {
            FactorTag::B => &self.h_in_b,
            _ => &self.h_in_a,
        }
    }

    pub fn projective(&self) -> bool {
        self.a.projective
    }

    pub fn evaluate(&self, w: &Word) -> Result<GroupMatrix, WordError> {
        let exact = self.a.is_exact() && self.b.is_exact();
        let mut acc = GroupMatrix::identity(self.a.dim(), exact);
        for (i, s) in w.syllables.iter().enumerate() {
            let (tag, word) = amalgam_syllable(i, s)?;
            let f = self.factor(tag);
            f.check_word(word)
                .map_err(|detail| WordError::FactorMismatch { position: i, detail })?;
            acc = acc.mul(&f.evaluate(word));
        }
        Ok(acc)
    }
}

pub(crate) fn amalgam_syllable(i: usize, s: &Syllable) -> Result<(FactorTag, &GenWord), WordError> {
    match (s.factor, &s.element) {
        (FactorTag::A | FactorTag::B, Element::Word(w)) => Ok((s.factor, w)),
        _ => Err(WordError::FactorMismatch {
            position: i,
            detail: format!("{:?} syllable is not legal in an amalgam word", s.factor),
        }),
    }
}

/// `M ⋆_φ` with stable letter `f` and `f·η·f^-1 = φ(η)`; the `i`-th
/// generator of `h_plus` is the image of the `i`-th generator of `h_minus`.
#[derive(Clone, Debug)]
pub struct HnnPresentation {
    pub m: Factor,
    pub stable: GroupMatrix,
    pub stable_name: String,
    pub h_minus: Subgroup,
    pub h_plus: Subgroup,
}

impl HnnPresentation {
    pub fn new(
        m: Factor,
        stable: GroupMatrix,
        stable_name: impl Into<String>,
        h_minus: Subgroup,
        h_plus: Subgroup,
    ) -> Result<Self, WordError> {
        if h_minus.generators.len() != h_plus.generators.len() {
            return Err(WordError::InvalidPresentation(
                "associated subgroups have different numbers of generators".into(),
            ));
        }
        if m.rank() > 0 && stable.dim() != m.dim() {
            return Err(WordError::InvalidPresentation("stable letter has wrong dimension".into()));
        }
        let finv = stable
            .inverse()
            .ok_or_else(|| WordError::InvalidPresentation("stable letter is singular".into()))?;
        for (i, (wm, wp)) in h_minus.generators.iter().zip(&h_plus.generators).enumerate() {
            m.check_word(wm).map_err(WordError::InvalidPresentation)?;
            m.check_word(wp).map_err(WordError::InvalidPresentation)?;
            let conj = stable.mul(&m.evaluate(wm)).mul(&finv);
            if !conj.same_element(&m.evaluate(wp), POLICY.float_compare, m.projective) {
                return Err(WordError::InvalidPresentation(format!(
                    "stable letter does not conjugate generator {} of H- onto H+",
                    i + 1
                )));
            }
        }
        Ok(HnnPresentation {
            m,
            stable,
            stable_name: stable_name.into(),
            h_minus,
            h_plus,
        })
    }

    pub fn projective(&self) -> bool {
        self.m.projective
    }

    pub fn evaluate(&self, w: &Word) -> Result<GroupMatrix, WordError> {
        let exact = self.m.is_exact() && self.stable.is_exact();
        let mut acc = GroupMatrix::identity(self.stable.dim(), exact);
        let finv = self.stable.inverse().expect("checked at construction");
        for (i, s) in w.syllables.iter().enumerate() {
            match (s.factor, &s.element) {
                (FactorTag::M, Element::Word(word)) => {
                    self.m
                        .check_word(word)
                        .map_err(|detail| WordError::FactorMismatch { position: i, detail })?;
                    if !word.is_empty() {
                        acc = acc.mul(&self.m.evaluate(word));
                    }
                }
                (FactorTag::StableLetter, Element::Exponent(e)) => {
                    let g = if *e > 0 { &self.stable } else { &finv };
                    for _ in 0..e.unsigned_abs() {
                        acc = acc.mul(g);
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
        Ok(acc)
    }
}

/// Either kind of presentation, for code that handles both.
#[derive(Clone, Debug)]
pub enum Presentation {
    Amalgam(AmalgamPresentation),
    Hnn(HnnPresentation),
}

impl Presentation {
    pub fn normal_form(&self, w: &Word) -> Result<NormalForm, WordError> {
        match self {
            Presentation::Amalgam(p) => amalgam_normal_form(w, p),
            Presentation::Hnn(p) => hnn_britton_reduce(w, p),
        }
    }

    pub fn evaluate(&self, w: &Word) -> Result<GroupMatrix, WordError> {
        match self {
            Presentation::Amalgam(p) => p.evaluate(w),
            Presentation::Hnn(p) => p.evaluate(w),
        }
    }

    pub fn projective(&self) -> bool {
        match self {
            Presentation::Amalgam(p) => p.projective(),
            Presentation::Hnn(p) => p.projective(),
        }
    }
}

/// Order in which applicable rewrites are chosen. All orders reach normal
/// forms of the same relative length.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RewriteOrder {
    LeftmostInnermost,
    Rightmost,
    Seeded(u64),
}
