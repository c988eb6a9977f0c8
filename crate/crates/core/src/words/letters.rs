use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};

/// A generator of a factor group or its inverse.
///
/// Serialized as a nonzero integer: `k` for generator `k - 1`, `-k` for its
/// inverse. The derived order (generator first, positive before inverse) is
/// the letter order used by every shortlex comparison in the crate.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(into = "i32", try_from = "i32")]
pub struct Letter {
    pub gen: u16,
    pub inv: bool,
}

impl Letter {
    pub fn new(gen: u16) -> Self {
        Letter { gen, inv: false }
    }

    pub fn inverse(self) -> Self {
        Letter {
            gen: self.gen,
            inv: !self.inv,
        }
    }
}

impl From<Letter> for i32 {
    fn from(l: Letter) -> i32 {
        let k = l.gen as i32 + 1;
        if l.inv {
            -k
        } else {
            k
        }
    }
}

impl TryFrom<i32> for Letter {
    type Error = String;

    fn try_from(k: i32) -> Result<Self, String> {
        if k == 0 || k.unsigned_abs() > u16::MAX as u32 {
            return Err(format!("invalid letter code {k}"));
        }
        Ok(Letter {
            gen: (k.unsigned_abs() - 1) as u16,
            inv: k < 0,
        })
    }
}

/// A word in the generators of one factor group.
#[derive(Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct GenWord(pub Vec<Letter>);

impl GenWord {
    pub fn empty() -> Self {
        GenWord(Vec::new())
    }

    pub fn gen(g: u16) -> Self {
        GenWord(vec![Letter::new(g)])
    }

    /// Word from signed codes, e.g. `[1, -2]` for `x1 x2^-1`.
    pub fn from_codes(codes: &[i32]) -> Self {
        GenWord(
            codes
                .iter()
                .map(|&c| Letter::try_from(c).expect("nonzero letter code"))
                .collect(),
        )
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn max_gen(&self) -> Option<u16> {
        self.0.iter().map(|l| l.gen).max()
    }

    /// Free reduction.
    pub fn reduced(&self) -> GenWord {
        let mut out: Vec<Letter> = Vec::with_capacity(self.0.len());
        for &l in &self.0 {
            if out.last() == Some(&l.inverse()) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        GenWord(out)
    }

    pub fn is_reduced(&self) -> bool {
        self.0.windows(2).all(|w| w[0] != w[1].inverse())
    }

    pub fn inverse(&self) -> GenWord {
        GenWord(self.0.iter().rev().map(|l| l.inverse()).collect())
    }

    /// Concatenation followed by free reduction.
    pub fn mul(&self, rhs: &GenWord) -> GenWord {
        let mut out = self.clone();
        for &l in &rhs.0 {
            if out.0.last() == Some(&l.inverse()) {
                out.0.pop();
            } else {
                out.0.push(l);
            }
        }
        out
    }

    pub fn pow(&self, k: i64) -> GenWord {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = GenWord::empty();
        for _ in 0..k.unsigned_abs() {
            out = out.mul(&base);
        }
        out
    }

    pub fn shortlex_cmp(&self, other: &GenWord) -> Ordering {
        self.len().cmp(&other.len()).then_with(|| self.0.cmp(&other.0))
    }

    /// Renders with generator names, e.g. `a1 b1^-1`.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "1".to_string();
        }
        self.0
            .iter()
            .map(|l| {
                let name = names
                    .get(l.gen as usize)
                    .cloned()
                    .unwrap_or_else(|| format!("x{}", l.gen + 1));
                if l.inv {
                    format!("{name}^-1")
                } else {
                    name
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses a whitespace-separated word such as `"a1 b1^-1"`.
    pub fn parse_with(text: &str, names: &[String]) -> Result<GenWord, String> {
        let mut out = Vec::new();
        for tok in text.split_whitespace() {
            if tok == "1" {
                continue;
            }
            let (name, inv) = match tok.strip_suffix("^-1") {
                Some(n) => (n, true),
                None => (tok, false),
            };
            let gen = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| format!("unknown generator {name:?}"))?;
            out.push(Letter {
                gen: gen as u16,
                inv,
            });
        }
        Ok(GenWord(out))
    }
}

impl fmt::Debug for GenWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let codes: Vec<i32> = self.0.iter().map(|&l| l.into()).collect();
        write!(f, "{codes:?}")
    }
}

/// All freely reduced words of length exactly `n` over `rank` generators, in
/// shortlex order.
pub fn reduced_words_of_length(rank: u16, n: usize) -> Vec<GenWord> {
    let letters: Vec<Letter> = (0..rank)
        .flat_map(|g| [Letter::new(g), Letter::new(g).inverse()])
        .collect();
    let mut layer = vec![GenWord::empty()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(layer.len() * letters.len());
        for w in &layer {
            for &l in &letters {
                if w.0.last() == Some(&l.inverse()) {
                    continue;
                }
                let mut v = w.0.clone();
                v.push(l);
                next.push(GenWord(v));
            }
        }
        layer = next;
    }
    layer
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_word() -> impl Strategy<Value = GenWord> {
        prop::collection::vec((0u16..3, any::<bool>()), 0..12)
            .prop_map(|v| GenWord(v.into_iter().map(|(gen, inv)| Letter { gen, inv }).collect()))
    }

    #[test]
    fn letter_codes_round_trip() {
        let w = GenWord::from_codes(&[1, -2, 3]);
        let json = serde_json::to_string(&w).unwrap();
        assert_eq!(json, "[1,-2,3]");
        let back: GenWord = serde_json::from_str(&json).unwrap();
        assert_eq!(back, w);
        assert!(serde_json::from_str::<GenWord>("[0]").is_err());
    }

    #[test]
    fn sphere_sizes_in_free_group() {
        // |S_n| = 4 * 3^(n-1) in F_2.
        assert_eq!(reduced_words_of_length(2, 0).len(), 1);
        assert_eq!(reduced_words_of_length(2, 1).len(), 4);
        assert_eq!(reduced_words_of_length(2, 4).len(), 4 * 27);
    }

    #[test]
    fn parse_and_display() {
        let names = vec!["a".to_string(), "b".to_string()];
        let w = GenWord::parse_with("a b^-1 a", &names).unwrap();
        assert_eq!(w, GenWord::from_codes(&[1, -2, 1]));
        assert_eq!(w.display_with(&names), "a b^-1 a");
        assert!(GenWord::parse_with("c", &names).is_err());
    }

    proptest! {
        #[test]
        fn reduction_is_idempotent(w in arb_word()) {
            let r = w.reduced();
            prop_assert!(r.is_reduced());
            prop_assert_eq!(r.reduced(), r);
        }

        #[test]
        fn inverse_cancels(w in arb_word()) {
            let w = w.reduced();
            prop_assert!(w.mul(&w.inverse()).is_empty());
            prop_assert!(w.inverse().mul(&w).is_empty());
        }

        #[test]
        fn multiplication_is_associative(x in arb_word(), y in arb_word(), z in arb_word()) {
            let (x, y, z) = (x.reduced(), y.reduced(), z.reduced());
            prop_assert_eq!(x.mul(&y).mul(&z), x.mul(&y.mul(&z)));
        }
    }
}
