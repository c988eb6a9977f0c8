//! Bounded Cayley balls: word metric, Gromov products, hyperbolicity and
//! quasiconvexity estimates, nearest-point projections to subgroups.

use std::collections::{HashMap, VecDeque};
use std::fmt::Debug;
use std::hash::Hash;

use serde::Serialize;
use thiserror::Error;

use crate::exact::RatMatrix;
use crate::words::{GenWord, Letter};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CayleyError {
    #[error("element outside the stored ball")]
    OutOfBall,
    #[error("sequences have different lengths ({0} and {1})")]
    LengthMismatch(usize, usize),
    #[error("empty subgroup trace")]
    EmptyTrace,
}

pub trait Group {
    type Elem: Clone + Eq + Hash + Debug;

    fn identity(&self) -> Self::Elem;
    fn mul(&self, a: &Self::Elem, b: &Self::Elem) -> Self::Elem;
    fn inverse(&self, a: &Self::Elem) -> Self::Elem;
}

/// Free group on `rank` generators; elements are reduced words.
#[derive(Clone, Copy, Debug)]
pub struct FreeGroup {
    pub rank: u16,
}

impl Group for FreeGroup {
    type Elem = GenWord;

    fn identity(&self) -> GenWord {
        GenWord::empty()
    }

    fn mul(&self, a: &GenWord, b: &GenWord) -> GenWord {
        a.mul(b)
    }

    fn inverse(&self, a: &GenWord) -> GenWord {
        a.inverse()
    }
}

/// Invertible rational matrices of a fixed size.
#[derive(Clone, Copy, Debug)]
pub struct MatrixGroup {
    pub dim: usize,
}

impl Group for MatrixGroup {
    type Elem = RatMatrix;

    fn identity(&self) -> RatMatrix {
        RatMatrix::identity(self.dim)
    }

    fn mul(&self, a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
        a * b
    }

    fn inverse(&self, a: &RatMatrix) -> RatMatrix {
        a.inverse().expect("group elements are invertible")
    }
}

#[derive(Clone, Debug)]
struct Entry<E> {
    elem: E,
    word: GenWord,
    dist: u32,
}

/// Ball of radius `radius` around the identity, with word lengths stored up
/// to `lookup_radius` so that distances between ball elements are exact.
pub struct CayleyBall<G: Group> {
    pub group: G,
    pub generators: Vec<G::Elem>,
    pub radius: usize,
    pub lookup_radius: usize,
    pub delta: Option<f64>,
    entries: Vec<Entry<G::Elem>>,
    index: HashMap<G::Elem, usize>,
    ball_len: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct BallStats {
    pub radius: usize,
    pub lookup_radius: usize,
    pub sphere_sizes: Vec<usize>,
    pub delta: Option<f64>,
}

/// Intersection of a subgroup with the ball.
#[derive(Clone, Debug)]
pub struct SubgroupTrace<E> {
    pub generators: Vec<E>,
    pub elements: Vec<E>,
}

impl<G: Group> CayleyBall<G> {
    /// Ball with distances available between any two of its elements.
    pub fn new(group: G, generators: Vec<G::Elem>, radius: usize) -> Self {
        Self::with_lookup(group, generators, radius, 2 * radius)
    }

    pub fn with_lookup(
        group: G,
        generators: Vec<G::Elem>,
        radius: usize,
        lookup_radius: usize,
    ) -> Self {
        let lookup_radius = lookup_radius.max(radius);
        let letters: Vec<(Letter, G::Elem)> = generators
            .iter()
            .enumerate()
            .flat_map(|(i, g)| {
                let l = Letter::new(i as u16);
                [(l, g.clone()), (l.inverse(), group.inverse(g))]
            })
            .collect();
        let id = group.identity();
        let mut entries = vec![Entry {
            elem: id.clone(),
            word: GenWord::empty(),
            dist: 0,
        }];
        let mut index = HashMap::from([(id, 0usize)]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let (elem, word, dist) = {
                let e = &entries[i];
                (e.elem.clone(), e.word.clone(), e.dist)
            };
            if dist as usize >= lookup_radius {
                continue;
            }
            for (l, g) in &letters {
                let next = group.mul(&elem, g);
                if index.contains_key(&next) {
                    continue;
                }
                let mut w = word.clone();
                w.0.push(*l);
                index.insert(next.clone(), entries.len());
                queue.push_back(entries.len());
                entries.push(Entry {
                    elem: next,
                    word: w,
                    dist: dist + 1,
                });
            }
        }
        let ball_len = entries.partition_point(|e| e.dist as usize <= radius);
        CayleyBall {
            group,
            generators,
            radius,
            lookup_radius,
            delta: None,
            entries,
            index,
            ball_len,
        }
    }

    /// Ball elements in shortlex order of their geodesic words.
    pub fn elements(&self) -> impl Iterator<Item = &G::Elem> {
        self.entries[..self.ball_len].iter().map(|e| &e.elem)
    }

    pub fn len(&self) -> usize {
        self.ball_len
    }

    pub fn is_empty(&self) -> bool {
        self.ball_len == 0
    }

    pub fn contains(&self, g: &G::Elem) -> bool {
        self.index.get(g).is_some_and(|&i| i < self.ball_len)
    }

    /// `|g|`, when within the lookup radius.
    pub fn length(&self, g: &G::Elem) -> Option<usize> {
        self.index.get(g).map(|&i| self.entries[i].dist as usize)
    }

    /// Shortlex-least geodesic word.
    pub fn word(&self, g: &G::Elem) -> Option<&GenWord> {
        self.index.get(g).map(|&i| &self.entries[i].word)
    }

    pub fn element_of(&self, w: &GenWord) -> G::Elem {
        let mut acc = self.group.identity();
        for l in w.letters() {
            let g = &self.generators[l.gen as usize];
            acc = if l.inv {
                self.group.mul(&acc, &self.group.inverse(g))
            } else {
                self.group.mul(&acc, g)
            };
        }
        acc
    }

    pub fn distance(&self, f: &G::Elem, g: &G::Elem) -> Result<usize, CayleyError> {
        let rel = self.group.mul(&self.group.inverse(f), g);
        self.length(&rel).ok_or(CayleyError::OutOfBall)
    }

    pub fn sphere_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.radius + 1];
        for e in &self.entries[..self.ball_len] {
            sizes[e.dist as usize] += 1;
        }
        sizes
    }

    pub fn stats(&self) -> BallStats {
        BallStats {
            radius: self.radius,
            lookup_radius: self.lookup_radius,
            sphere_sizes: self.sphere_sizes(),
            delta: self.delta,
        }
    }

    /// `(f, g)_w = ½(d(f,w) + d(g,w) − d(f,g))`.
    pub fn gromov_product(
        &self,
        f: &G::Elem,
        g: &G::Elem,
        w: &G::Elem,
    ) -> Result<f64, CayleyError> {
        let fw = self.distance(f, w)? as f64;
        let gw = self.distance(g, w)? as f64;
        let fg = self.distance(f, g)? as f64;
        Ok(0.5 * (fw + gw - fg))
    }

    /// Largest defect of the four-point condition
    /// `(x,z)_1 ≥ min((x,y)_1, (y,z)_1) − δ` over the sub-ball of radius
    /// `sub_radius`. Stores and returns the estimate.
    pub fn estimate_delta(&mut self, sub_radius: usize) -> f64 {
        let pts: Vec<&G::Elem> = self
            .entries
            .iter()
            .take_while(|e| e.dist as usize <= sub_radius.min(self.radius))
            .map(|e| &e.elem)
            .collect();
        let id = self.group.identity();
        let n = pts.len();
        let mut prod = vec![0.0f64; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self
                    .gromov_product(pts[i], pts[j], &id)
                    .expect("sub-ball distances are stored");
                prod[i * n + j] = v;
                prod[j * n + i] = v;
            }
        }
        let mut delta = 0.0f64;
        for x in 0..n {
            for y in 0..n {
                let xy = prod[x * n + y];
                for z in 0..n {
                    let defect = xy.min(prod[y * n + z]) - prod[x * n + z];
                    delta = delta.max(defect);
                }
            }
        }
        self.delta = Some(delta);
        delta
    }

    /// Elements of the subgroup generated by `generators` that lie in the
    /// ball, found by breadth-first search inside the lookup table.
    pub fn subgroup_trace(&self, generators: Vec<G::Elem>) -> SubgroupTrace<G::Elem> {
        let mut steps = Vec::new();
        for g in &generators {
            steps.push(g.clone());
            steps.push(self.group.inverse(g));
        }
        let id = self.group.identity();
        let mut seen = HashMap::from([(id.clone(), ())]);
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for s in &steps {
                let y = self.group.mul(&x, s);
                if seen.contains_key(&y) || self.length(&y).is_none() {
                    continue;
                }
                seen.insert(y.clone(), ());
                queue.push_back(y);
            }
        }
        let mut elements: Vec<(usize, G::Elem)> = seen
            .into_keys()
            .filter(|e| self.contains(e))
            .map(|e| (self.index[&e], e))
            .collect();
        elements.sort_by_key(|(i, _)| *i);
        SubgroupTrace {
            generators,
            elements: elements.into_iter().map(|(_, e)| e).collect(),
        }
    }

    /// Point of `y` closest to `g`; ties go to the shortlex-least word.
    pub fn nearest_point_projection(
        &self,
        g: &G::Elem,
        y: &SubgroupTrace<G::Elem>,
    ) -> Result<G::Elem, CayleyError> {
        if !self.contains(g) {
            return Err(CayleyError::OutOfBall);
        }
        let mut best: Option<(usize, &G::Elem)> = None;
        // trace elements are stored in shortlex order, so `<` keeps the first
        for e in &y.elements {
            let d = self.distance(g, e)?;
            if best.is_none_or(|(bd, _)| d < bd) {
                best = Some((d, e));
            }
        }
        best.map(|(_, e)| e.clone()).ok_or(CayleyError::EmptyTrace)
    }

    pub fn projection_displacement(
        &self,
        g: &G::Elem,
        y: &SubgroupTrace<G::Elem>,
    ) -> Result<usize, CayleyError> {
        let p = self.nearest_point_projection(g, y)?;
        self.length(&p).ok_or(CayleyError::OutOfBall)
    }

    /// `min_n (s_n, t_n)_1`.
    pub fn fellow_travel_margin(
        &self,
        s: &[G::Elem],
        t: &[G::Elem],
    ) -> Result<f64, CayleyError> {
        if s.len() != t.len() {
            return Err(CayleyError::LengthMismatch(s.len(), t.len()));
        }
        let id = self.group.identity();
        let mut margin = f64::INFINITY;
        for (a, b) in s.iter().zip(t) {
            margin = margin.min(self.gromov_product(a, b, &id)?);
        }
        Ok(margin)
    }

    /// Vertices of the shortlex geodesic from `f` to `g`.
    pub fn geodesic(&self, f: &G::Elem, g: &G::Elem) -> Result<Vec<G::Elem>, CayleyError> {
        let rel = self.group.mul(&self.group.inverse(f), g);
        let word = self.word(&rel).ok_or(CayleyError::OutOfBall)?;
        let mut out = vec![f.clone()];
        let mut cur = f.clone();
        for l in word.letters() {
            let s = &self.generators[l.gen as usize];
            let s = if l.inv {
                self.group.inverse(s)
            } else {
                s.clone()
            };
            cur = self.group.mul(&cur, &s);
            out.push(cur.clone());
        }
        Ok(out)
    }

    /// Distance from `g` to the trace.
    pub fn distance_to_trace(
        &self,
        g: &G::Elem,
        y: &SubgroupTrace<G::Elem>,
    ) -> Result<usize, CayleyError> {
        y.elements
            .iter()
            .map(|e| self.distance(g, e))
            .filter_map(Result::ok)
            .min()
            .ok_or(CayleyError::OutOfBall)
    }

    /// Largest distance from a point of a stored geodesic `1 → y` (`y` in
    /// the trace) back to the trace. Left-invariance makes this the
    /// quasiconvexity constant of the trace within the ball.
    pub fn quasiconvexity_constant(&self, y: &SubgroupTrace<G::Elem>) -> usize {
        let id = self.group.identity();
        let mut k = 0;
        for e in &y.elements {
            if let Ok(path) = self.geodesic(&id, e) {
                for p in &path {
                    if let Ok(d) = self.distance_to_trace(p, y) {
                        k = k.max(d);
                    }
                }
            }
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f2(radius: usize) -> CayleyBall<FreeGroup> {
        CayleyBall::new(
            FreeGroup { rank: 2 },
            vec![GenWord::gen(0), GenWord::gen(1)],
            radius,
        )
    }

    fn w(codes: &[i32]) -> GenWord {
        GenWord::from_codes(codes)
    }

    #[test]
    fn free_group_spheres() {
        let ball = f2(4);
        assert_eq!(ball.sphere_sizes(), vec![1, 4, 12, 36, 108]);
        // BFS lengths agree with reduced word length.
        for g in ball.elements() {
            assert_eq!(ball.length(g), Some(g.len()));
        }
    }

    #[test]
    fn gromov_products() {
        let ball = f2(6);
        let ab = w(&[1, 2]);
        let ab_inv = w(&[1, -2]);
        let id = GenWord::empty();
        assert_eq!(ball.gromov_product(&ab, &ab_inv, &id).unwrap(), 1.0);
        assert_eq!(ball.gromov_product(&ab, &ab, &id).unwrap(), 2.0);
        assert_eq!(ball.gromov_product(&ab, &ab_inv, &ab).unwrap(), 0.0);
    }

    #[test]
    fn projections_to_cyclic_subgroup() {
        let ball = f2(6);
        let y = ball.subgroup_trace(vec![GenWord::gen(0)]);
        assert_eq!(y.elements.len(), 13);
        let g = w(&[1, 1, 1, 2]);
        assert_eq!(ball.nearest_point_projection(&g, &y).unwrap(), w(&[1, 1, 1]));
        let g = w(&[2, 2, 2, 2, 2]);
        assert_eq!(ball.nearest_point_projection(&g, &y).unwrap(), GenWord::empty());
        let a2 = w(&[1, 1]);
        assert_eq!(ball.nearest_point_projection(&a2, &y).unwrap(), a2);
        assert_eq!(ball.quasiconvexity_constant(&y), 0);
    }

    #[test]
    fn tree_is_zero_hyperbolic() {
        let mut ball = f2(4);
        assert_eq!(ball.estimate_delta(3), 0.0);
    }

    #[test]
    fn fellow_travelling_prefixes() {
        let ball = f2(6);
        let s: Vec<GenWord> = (1..=4).map(|n| GenWord::gen(0).pow(n)).collect();
        let t: Vec<GenWord> = s.iter().map(|g| g.mul(&GenWord::gen(1))).collect();
        assert_eq!(ball.fellow_travel_margin(&s, &s).unwrap(), 1.0);
        assert_eq!(ball.fellow_travel_margin(&s, &t).unwrap(), 1.0);
        assert!(matches!(
            ball.fellow_travel_margin(&s, &t[..2]),
            Err(CayleyError::LengthMismatch(4, 2))
        ));
    }

    #[test]
    fn out_of_ball() {
        let ball = f2(2);
        let far = GenWord::gen(0).pow(5);
        let y = ball.subgroup_trace(vec![GenWord::gen(0)]);
        assert_eq!(
            ball.nearest_point_projection(&far, &y),
            Err(CayleyError::OutOfBall)
        );
    }
}
