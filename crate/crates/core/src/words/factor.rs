use std::collections::{HashMap, VecDeque};
use std::sync::OnceLock;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use super::letters::{GenWord, Letter};
use super::WordError;
use crate::exact::{GroupMatrix, RatMatrix};
use crate::numeric::POLICY;

/// Default word-length budget for membership searches.
pub const DEFAULT_BUDGET: usize = 64;

/// Cap on the number of elements an enumeration may visit.
const ELEMENT_CAP: usize = 200_000;

/// How elements of a factor are compared.
///
/// `Free` factors are free on their generators, so the reduced word is a
/// canonical form. `Enumerated` factors are compared through their matrices
/// against a breadth-first table of shortlex-least words.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FactorKind {
    Free,
    Enumerated,
}

#[derive(Debug)]
struct ElementTable {
    exact: HashMap<RatMatrix, GenWord>,
    float: Vec<(DMatrix<f64>, GenWord)>,
    complete: bool,
    /// Multiplication table of a completely enumerated exact group:
    /// `steps[i][2g + inv]` is the index of element `i` times that letter.
    steps: Option<Steps>,
}

#[derive(Debug)]
struct Steps {
    words: Vec<GenWord>,
    norms: Vec<f64>,
    identity: usize,
    next: Vec<Vec<usize>>,
}

fn letter_slot(l: Letter) -> usize {
    2 * l.gen as usize + usize::from(l.inv)
}

/// A factor group given by matrix generators.
#[derive(Debug)]
pub struct Factor {
    pub names: Vec<String>,
    pub matrices: Vec<GroupMatrix>,
    pub kind: FactorKind,
    /// Compare matrices up to sign (PSL).
    pub projective: bool,
    pub budget: usize,
    inverses: Vec<GroupMatrix>,
    table: OnceLock<ElementTable>,
}

impl Clone for Factor {
    fn clone(&self) -> Self {
        Factor::new(
            self.names.clone(),
            self.matrices.clone(),
            self.kind,
            self.projective,
        )
        .expect("already validated")
        .with_budget(self.budget)
    }
}

impl Factor {
    pub fn new(
        names: Vec<String>,
        matrices: Vec<GroupMatrix>,
        kind: FactorKind,
        projective: bool,
    ) -> Result<Self, WordError> {
        if names.len() != matrices.len() {
            return Err(WordError::InvalidPresentation(format!(
                "{} generator names for {} matrices",
                names.len(),
                matrices.len()
            )));
        }
        let dim = matrices.first().map(|m| m.dim()).unwrap_or(0);
        let mut inverses = Vec::with_capacity(matrices.len());
        for (name, m) in names.iter().zip(&matrices) {
            if m.dim() != dim {
                return Err(WordError::InvalidPresentation(format!(
                    "generator {name} has dimension {}, expected {dim}",
                    m.dim()
                )));
            }
            inverses.push(m.inverse().ok_or_else(|| {
                WordError::InvalidPresentation(format!("generator {name} is singular"))
            })?);
        }
        Ok(Factor {
            names,
            matrices,
            kind,
            projective,
            budget: DEFAULT_BUDGET,
            inverses,
            table: OnceLock::new(),
        })
    }

    pub fn with_budget(mut self, budget: usize) -> Self {
        self.budget = budget;
        self.table = OnceLock::new();
        self
    }

    pub fn rank(&self) -> usize {
        self.names.len()
    }

    pub fn dim(&self) -> usize {
        self.matrices.first().map(|m| m.dim()).unwrap_or(0)
    }

    pub fn is_exact(&self) -> bool {
        self.matrices.iter().all(|m| m.is_exact())
    }

    pub fn letter_matrix(&self, l: Letter) -> &GroupMatrix {
        if l.inv {
            &self.inverses[l.gen as usize]
        } else {
            &self.matrices[l.gen as usize]
        }
    }

    /// Rejects words using generators the factor does not have.
    pub fn check_word(&self, w: &GenWord) -> Result<(), String> {
        match w.max_gen() {
            Some(g) if g as usize >= self.rank() => Err(format!(
                "generator index {} out of range for a factor of rank {}",
                g + 1,
                self.rank()
            )),
            _ => Ok(()),
        }
    }

    pub fn evaluate(&self, w: &GenWord) -> GroupMatrix {
        let mut acc = GroupMatrix::identity(self.dim(), self.is_exact());
        for &l in w.letters() {
            acc = acc.mul(self.letter_matrix(l));
        }
        acc
    }

    /// Canonical word of the element represented by `w`.
    pub fn canonical(&self, w: &GenWord) -> Result<GenWord, WordError> {
        match self.kind {
            FactorKind::Free => Ok(w.reduced()),
            FactorKind::Enumerated => {
                if let Some((steps, i)) = self.step_index(w) {
                    return Ok(steps.words[i].clone());
                }
                let m = self.evaluate(w);
                self.lookup(&m).ok_or(WordError::MembershipUndecidable {
                    budget: self.budget,
                })
            }
        }
    }

    fn step_index(&self, w: &GenWord) -> Option<(&Steps, usize)> {
        let steps = self.table.get_or_init(|| self.build_table()).steps.as_ref()?;
        let i = w
            .letters()
            .iter()
            .fold(steps.identity, |i, &l| steps.next[i][letter_slot(l)]);
        Some((steps, i))
    }

    pub fn is_identity(&self, w: &GenWord) -> Result<bool, WordError> {
        Ok(self.canonical(w)?.is_empty())
    }

    /// Size used by escape rules: reduced length for free factors, matrix
    /// norm otherwise.
    pub fn size(&self, w: &GenWord) -> f64 {
        match self.kind {
            FactorKind::Free => w.reduced().len() as f64,
            FactorKind::Enumerated => match self.step_index(w) {
                Some((steps, i)) => steps.norms[i],
                None => self.evaluate(w).norm(),
            },
        }
    }

    fn key(&self, m: &RatMatrix) -> RatMatrix {
        if !self.projective {
            return m.clone();
        }
        let n = m.dim();
        for i in 0..n {
            for j in 0..n {
                let x = m.get(i, j);
                if num_traits::Zero::is_zero(x) {
                    continue;
                }
                return if num_traits::Signed::is_negative(x) {
                    m.neg()
                } else {
                    m.clone()
                };
            }
        }
        m.clone()
    }

    fn lookup(&self, m: &GroupMatrix) -> Option<GenWord> {
        let table = self.table.get_or_init(|| self.build_table());
        match m {
            GroupMatrix::Exact(r) if !table.exact.is_empty() || table.float.is_empty() => {
                table.exact.get(&self.key(r)).cloned()
            }
            _ => {
                let g = GroupMatrix::Float(m.to_f64());
                table
                    .float
                    .iter()
                    .find(|(h, _)| {
                        g.same_element(
                            &GroupMatrix::Float(h.clone()),
                            POLICY.float_compare,
                            self.projective,
                        )
                    })
                    .map(|(_, w)| w.clone())
            }
        }
    }

    /// Breadth-first enumeration in shortlex order up to word length `budget`.
    fn build_table(&self) -> ElementTable {
        let exact = self.is_exact();
        let letters: Vec<Letter> = (0..self.rank() as u16)
            .flat_map(|g| [Letter::new(g), Letter::new(g).inverse()])
            .collect();
        let mut table = ElementTable {
            exact: HashMap::new(),
            float: Vec::new(),
            complete: false,
            steps: None,
        };
        let id = GroupMatrix::identity(self.dim(), exact);
        let mut queue: VecDeque<(GroupMatrix, GenWord)> = VecDeque::new();
        let insert = |table: &mut ElementTable, m: &GroupMatrix, w: &GenWord| -> bool {
            match m {
                GroupMatrix::Exact(r) => {
                    let k = self.key(r);
                    if table.exact.contains_key(&k) {
                        return false;
                    }
                    table.exact.insert(k, w.clone());
                    true
                }
                GroupMatrix::Float(f) => {
                    let dup = table.float.iter().any(|(h, _)| {
                        m.same_element(
                            &GroupMatrix::Float(h.clone()),
                            POLICY.float_compare,
                            self.projective,
                        )
                    });
                    if dup {
                        return false;
                    }
                    table.float.push((f.clone(), w.clone()));
                    true
                }
            }
        };
        insert(&mut table, &id, &GenWord::empty());
        queue.push_back((id, GenWord::empty()));
        let mut count = 1;
        while let Some((m, w)) = queue.pop_front() {
            if w.len() >= self.budget {
                return table;
            }
            for &l in &letters {
                let next = m.mul(self.letter_matrix(l));
                let mut nw = w.clone();
                nw.0.push(l);
                if insert(&mut table, &next, &nw) {
                    count += 1;
                    if count > ELEMENT_CAP {
                        return table;
                    }
                    queue.push_back((next, nw));
                }
            }
        }
        table.complete = true;
        if exact && table.float.is_empty() {
            table.steps = Some(self.build_steps(&table.exact));
        }
        table
    }

    fn build_steps(&self, exact: &HashMap<RatMatrix, GenWord>) -> Steps {
        let keys: Vec<&RatMatrix> = exact.keys().collect();
        let index: HashMap<&RatMatrix, usize> = keys.iter().enumerate().map(|(i, k)| (*k, i)).collect();
        let next = keys
            .iter()
            .map(|k| {
                (0..2 * self.rank())
                    .map(|slot| {
                        let l = Letter {
                            gen: (slot / 2) as u16,
                            inv: slot % 2 == 1,
                        };
                        let GroupMatrix::Exact(m) = self.letter_matrix(l) else {
                            unreachable!("exact factor")
                        };
                        index[&self.key(&(*k * m))]
                    })
                    .collect()
            })
            .collect();
        Steps {
            words: keys.iter().map(|k| exact[*k].clone()).collect(),
            norms: keys.iter().map(|k| k.norm()).collect(),
            identity: index[&self.key(&RatMatrix::identity(self.dim()))],
            next,
        }
    }

    /// Number of elements when the group was enumerated completely.
    pub fn order(&self) -> Option<usize> {
        if self.kind == FactorKind::Free {
            return if self.rank() == 0 { Some(1) } else { None };
        }
        let table = self.table.get_or_init(|| self.build_table());
        table
            .complete
            .then(|| table.exact.len() + table.float.len())
    }
}

/// A subgroup of a factor, generated by words in the factor's generators.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Subgroup {
    pub generators: Vec<GenWord>,
}

impl Subgroup {
    pub fn new(generators: Vec<GenWord>) -> Self {
        Subgroup { generators }
    }

    pub fn trivial() -> Self {
        Subgroup {
            generators: Vec::new(),
        }
    }

    /// Ambient word of an element written over the subgroup's generators.
    pub fn embed(&self, hword: &GenWord) -> GenWord {
        let mut out = GenWord::empty();
        for &l in hword.letters() {
            let g = &self.generators[l.gen as usize];
            out = if l.inv {
                out.mul(&g.inverse())
            } else {
                out.mul(g)
            };
        }
        out
    }

    /// Writes `g` as a word in the subgroup generators, or `None` if `g` is
    /// not in the subgroup.
    pub fn express(&self, factor: &Factor, g: &GenWord) -> Result<Option<GenWord>, WordError> {
        let target = factor.canonical(g)?;
        if target.is_empty() {
            return Ok(Some(GenWord::empty()));
        }
        match self.generators.len() {
            0 => Ok(None),
            1 => self.express_cyclic(factor, &target),
            _ => {
                let elements = self.enumerate(factor)?;
                Ok(elements
                    .into_iter()
                    .find(|(e, _)| *e == target)
                    .map(|(_, h)| h))
            }
        }
    }

    pub fn contains(&self, factor: &Factor, g: &GenWord) -> Result<bool, WordError> {
        Ok(self.express(factor, g)?.is_some())
    }

    fn express_cyclic(
        &self,
        factor: &Factor,
        target: &GenWord,
    ) -> Result<Option<GenWord>, WordError> {
        let h = &self.generators[0];
        if factor.kind == FactorKind::Free {
            return Ok(express_in_free_cyclic(&h.reduced(), target));
        }
        let hinv = h.inverse();
        let target_size = factor.size(target);
        let (mut pos, mut neg) = (GenWord::empty(), GenWord::empty());
        let (mut pos_size, mut neg_size) = (0.0, 0.0);
        for k in 1..=factor.budget as i64 {
            pos = factor.canonical(&pos.mul(h))?;
            neg = factor.canonical(&neg.mul(&hinv))?;
            if pos == *target {
                return Ok(Some(GenWord::gen(0).pow(k)));
            }
            if neg == *target {
                return Ok(Some(GenWord::gen(0).pow(-k)));
            }
            if pos.is_empty() {
                // h has finite order k and every power has been visited.
                return Ok(None);
            }
            let (ps, ns) = (factor.size(&pos), factor.size(&neg));
            let growing = ps > pos_size && ns > neg_size;
            if k > 1 && growing && ps > target_size && ns > target_size {
                return Ok(None);
            }
            pos_size = ps;
            neg_size = ns;
        }
        Err(WordError::MembershipUndecidable {
            budget: factor.budget,
        })
    }

    /// All elements as (canonical ambient word, subgroup word) pairs, when the
    /// subgroup closes within the budget.
    pub fn enumerate(&self, factor: &Factor) -> Result<Vec<(GenWord, GenWord)>, WordError> {
        let letters: Vec<Letter> = (0..self.generators.len() as u16)
            .flat_map(|g| [Letter::new(g), Letter::new(g).inverse()])
            .collect();
        let mut seen: HashMap<GenWord, GenWord> = HashMap::new();
        let mut order = vec![(GenWord::empty(), GenWord::empty())];
        seen.insert(GenWord::empty(), GenWord::empty());
        let mut queue = VecDeque::from([(GenWord::empty(), GenWord::empty())]);
        while let Some((elem, hw)) = queue.pop_front() {
            if hw.len() >= factor.budget || seen.len() > ELEMENT_CAP {
                return Err(WordError::MembershipUndecidable {
                    budget: factor.budget,
                });
            }
            for &l in &letters {
                let g = &self.generators[l.gen as usize];
                let step = if l.inv { g.inverse() } else { g.clone() };
                let next = factor.canonical(&elem.mul(&step))?;
                if seen.contains_key(&next) {
                    continue;
                }
                let mut nh = hw.clone();
                nh.0.push(l);
                seen.insert(next.clone(), nh.clone());
                order.push((next.clone(), nh.clone()));
                queue.push_back((next, nh));
            }
        }
        Ok(order)
    }

    /// Canonical representative `t` of the left coset `x·K` together with the
    /// subgroup word `k` such that `x = t·k`. The representative is the
    /// shortlex-least canonical word in the coset.
    pub fn coset_rep(&self, factor: &Factor, x: &GenWord) -> Result<(GenWord, GenWord), WordError> {
        let x = factor.canonical(x)?;
        match self.generators.len() {
            0 => Ok((x, GenWord::empty())),
            1 => self.coset_rep_cyclic(factor, &x),
            _ => {
                let mut best: Option<(GenWord, GenWord)> = None;
                for (s, sw) in self.enumerate(factor)? {
                    // t = x·s, so x = t·s^-1
                    let t = factor.canonical(&x.mul(&s))?;
                    if best
                        .as_ref()
                        .is_none_or(|(b, _)| t.shortlex_cmp(b).is_lt())
                    {
                        best = Some((t, sw.inverse()));
                    }
                }
                Ok(best.expect("identity is always enumerated"))
            }
        }
    }

    fn coset_rep_cyclic(
        &self,
        factor: &Factor,
        x: &GenWord,
    ) -> Result<(GenWord, GenWord), WordError> {
        let h = &self.generators[0];
        let hinv = h.inverse();
        let mut best = (x.clone(), GenWord::empty());
        let (mut pos, mut neg) = (x.clone(), x.clone());
        let (mut pos_size, mut neg_size) = (factor.size(x), factor.size(x));
        for k in 1..=factor.budget as i64 {
            pos = factor.canonical(&pos.mul(h))?;
            neg = factor.canonical(&neg.mul(&hinv))?;
            if pos == *x {
                break;
            }
            // pos = x·h^k, so x = pos·h^-k
            if pos.shortlex_cmp(&best.0).is_lt() {
                best = (pos.clone(), GenWord::gen(0).pow(-k));
            }
            if neg.shortlex_cmp(&best.0).is_lt() {
                best = (neg.clone(), GenWord::gen(0).pow(k));
            }
            let (ps, ns) = (factor.size(&pos), factor.size(&neg));
            let best_len = best.0.len() as f64;
            let best_size = factor.size(&best.0);
            let growing = ps > pos_size && ns > neg_size;
            let beyond = match factor.kind {
                FactorKind::Free => ps > best_len + 1.0 && ns > best_len + 1.0,
                FactorKind::Enumerated => ps > 4.0 * best_size && ns > 4.0 * best_size,
            };
            if k > 2 && growing && beyond {
                break;
            }
            pos_size = ps;
            neg_size = ns;
        }
        Ok(best)
    }
}

/// Membership of a reduced word in `<h>` inside a free group. Writing
/// `h = c u c^-1` with `u` cyclically reduced, `|h^k| = 2|c| + |k||u|`, so at
/// most two exponents need checking.
fn express_in_free_cyclic(h: &GenWord, target: &GenWord) -> Option<GenWord> {
    if target.is_empty() {
        return Some(GenWord::empty());
    }
    let l = h.letters();
    if l.is_empty() {
        return None;
    }
    let mut c = 0;
    while c < l.len() / 2 && l[c] == l[l.len() - 1 - c].inverse() {
        c += 1;
    }
    let core = l.len() - 2 * c;
    let excess = target.len().checked_sub(2 * c)?;
    if core == 0 || excess == 0 || excess % core != 0 {
        return None;
    }
    let k = (excess / core) as i64;
    [k, -k]
        .into_iter()
        .find(|&k| h.pow(k) == *target)
        .map(|k| GenWord::gen(0).pow(k))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z4() -> Factor {
        let s = GroupMatrix::Exact(RatMatrix::from_i64(&[&[0, -1], &[1, 0]]));
        Factor::new(vec!["S".into()], vec![s], FactorKind::Enumerated, false).unwrap()
    }

    fn free_rank1() -> Factor {
        let a = GroupMatrix::Exact(RatMatrix::from_i64(&[&[1, 1], &[0, 1]]));
        Factor::new(vec!["a".into()], vec![a], FactorKind::Free, false).unwrap()
    }

    #[test]
    fn cyclic_of_order_four() {
        let f = z4();
        assert_eq!(f.order(), Some(4));
        let s3 = GenWord::from_codes(&[1, 1, 1]);
        assert_eq!(f.canonical(&s3).unwrap(), GenWord::from_codes(&[-1]));
        assert!(f.is_identity(&GenWord::from_codes(&[1, 1, 1, 1])).unwrap());
    }

    #[test]
    fn membership_in_center() {
        let f = z4();
        let h = Subgroup::new(vec![GenWord::from_codes(&[1, 1])]);
        assert!(h.contains(&f, &GenWord::from_codes(&[-1, -1])).unwrap());
        assert!(!h.contains(&f, &GenWord::from_codes(&[1])).unwrap());
        let (t, k) = h.coset_rep(&f, &GenWord::from_codes(&[-1])).unwrap();
        assert_eq!(t, GenWord::from_codes(&[1]));
        // x = t·k
        let back = f.canonical(&t.mul(&h.embed(&k))).unwrap();
        assert_eq!(back, GenWord::from_codes(&[-1]));
    }

    #[test]
    fn membership_in_even_powers() {
        let f = free_rank1();
        let h = Subgroup::new(vec![GenWord::from_codes(&[1, 1])]);
        let a6 = GenWord::gen(0).pow(6);
        assert_eq!(h.express(&f, &a6).unwrap(), Some(GenWord::gen(0).pow(3)));
        assert_eq!(h.express(&f, &GenWord::gen(0).pow(-5)).unwrap(), None);
        let (t, k) = h.coset_rep(&f, &GenWord::gen(0).pow(-5)).unwrap();
        assert_eq!(t, GenWord::gen(0));
        assert_eq!(k, GenWord::gen(0).pow(-3));
    }

    #[test]
    fn free_cyclic_membership_matches_power_search() {
        let h = GenWord::from_codes(&[2, 1, 1, -2]);
        for k in -4..=4i64 {
            let t = h.pow(k);
            assert_eq!(express_in_free_cyclic(&h, &t), Some(GenWord::gen(0).pow(k)));
            let off = t.mul(&GenWord::gen(0));
            assert_eq!(express_in_free_cyclic(&h, &off), None);
        }
    }

    #[test]
    fn out_of_range_generator() {
        assert!(z4().check_word(&GenWord::from_codes(&[2])).is_err());
    }
}
