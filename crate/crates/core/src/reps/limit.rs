use std::collections::HashMap;
use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::Serialize;

use super::{MatrixRep, RepError};
use crate::flags::{attracting_flag, flag_distance, singular_gaps, Flag, FlagError, FlagType, GapVector};
use crate::numeric::POLICY;
use crate::words::{reduced_words_of_length, GenWord};

/// Shadows closer than this to an arc endpoint count as the endpoint.
const ENDPOINT_TOL: f64 = 1e-7;

#[derive(Clone, Debug, Serialize)]
pub struct LimitPoint {
    pub flag: Flag,
    pub source: GenWord,
    pub gaps: GapVector,
    /// Angle in `[0, π)` of the attracting line of the Fuchsian shadow.
    pub shadow: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct LimitSetSample {
    #[serde(rename = "type")]
    pub ty: FlagType,
    pub points: Vec<LimitPoint>,
    /// Words skipped because a required eigenvalue gap vanished.
    pub skipped: usize,
}

/// Attracting flags of all reduced words of length `1..=depth`, in shortlex
/// order of their source words, with near-duplicates removed.
pub fn limit_set_sample(rep: &MatrixRep, depth: usize, t: &FlagType) -> LimitSetSample {
    sample(rep, None, depth, t).expect("no shadows requested")
}

/// As [`limit_set_sample`], also recording for each point the attracting
/// direction of the same word under a 2×2 `shadow` representation.
pub fn limit_set_sample_with_shadows(
    rep: &MatrixRep,
    shadow: &MatrixRep,
    depth: usize,
    t: &FlagType,
) -> Result<LimitSetSample, RepError> {
    if shadow.d() != 2 {
        return Err(RepError::OrderUnavailable("shadow representation is not 2x2".into()));
    }
    if shadow.names != rep.names {
        return Err(RepError::OrderUnavailable("shadow generators differ".into()));
    }
    sample(rep, Some(shadow), depth, t)
}

fn shadow_angle(m: &DMatrix<f64>) -> Result<f64, FlagError> {
    let f = attracting_flag(m, &FlagType::full(2))?;
    let (x, y) = (f.basis()[(0, 0)], f.basis()[(1, 0)]);
    Ok(y.atan2(x).rem_euclid(PI) % PI)
}

fn grid_key(f: &Flag) -> (i64, i64) {
    let v = f.basis().column(0);
    let cell = 1e-5;
    let p00 = v[0] * v[0];
    let p11 = v[v.len() - 1] * v[v.len() - 1];
    ((p00 / cell).floor() as i64, (p11 / cell).floor() as i64)
}

fn sample(
    rep: &MatrixRep,
    shadow: Option<&MatrixRep>,
    depth: usize,
    t: &FlagType,
) -> Result<LimitSetSample, RepError> {
    let mut points: Vec<LimitPoint> = Vec::new();
    let mut grid: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
    let mut skipped = 0;
    for n in 1..=depth {
        for w in reduced_words_of_length(rep.rank() as u16, n) {
            let g = rep.evaluate(&w);
            let flag = match attracting_flag(&g, t) {
                Ok(f) => f,
                Err(FlagError::NoGap { .. }) => {
                    skipped += 1;
                    continue;
                }
                Err(e) => return Err(e.into()),
            };
            let (kx, ky) = grid_key(&flag);
            let duplicate = (-1..=1).any(|dx| {
                (-1..=1).any(|dy| {
                    grid.get(&(kx + dx, ky + dy)).is_some_and(|cell| {
                        cell.iter().any(|&i| {
                            flag_distance(&points[i].flag, &flag).expect("same type") < POLICY.dedup
                        })
                    })
                })
            });
            if duplicate {
                continue;
            }
            let shadow = match shadow {
                Some(s) => match shadow_angle(&s.evaluate(&w)) {
                    Ok(a) => Some(a),
                    Err(FlagError::NoGap { .. }) => {
                        skipped += 1;
                        continue;
                    }
                    Err(e) => return Err(e.into()),
                },
                None => None,
            };
            grid.entry((kx, ky)).or_default().push(points.len());
            points.push(LimitPoint {
                gaps: singular_gaps(&g, t),
                flag,
                source: w,
                shadow,
            });
        }
    }
    Ok(LimitSetSample {
        ty: t.clone(),
        points,
        skipped,
    })
}

/// A point bounding an arc: its flag and its shadow angle.
#[derive(Clone, Debug, Serialize)]
pub struct Endpoint {
    pub flag: Flag,
    pub shadow: f64,
}

impl Endpoint {
    /// Attracting flag of `g` with the shadow direction of `g2`.
    pub fn of(g: &DMatrix<f64>, g2: &DMatrix<f64>, t: &FlagType) -> Result<Self, RepError> {
        Ok(Endpoint {
            flag: attracting_flag(g, t)?,
            shadow: shadow_angle(g2)?,
        })
    }
}

/// Sample points strictly between two endpoints, ordered from `from` to `to`
/// in increasing shadow angle modulo π.
#[derive(Clone, Debug, Serialize)]
pub struct Arc {
    pub from: Endpoint,
    pub to: Endpoint,
    pub points: Vec<LimitPoint>,
}

impl Arc {
    pub fn len(&self) -> f64 {
        (self.to.shadow - self.from.shadow).rem_euclid(PI)
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Offset of `angle` from the start, when strictly inside the arc.
    pub fn position(&self, angle: f64) -> Option<f64> {
        let off = (angle - self.from.shadow).rem_euclid(PI);
        (off > ENDPOINT_TOL && off < self.len() - ENDPOINT_TOL).then_some(off)
    }
}

/// Cuts the shadow circle at the given endpoints. Arc `i` runs from the
/// `i`-th cut to the next one in increasing angle.
pub fn split_circle(sample: &LimitSetSample, cuts: &[Endpoint]) -> Result<Vec<Arc>, RepError> {
    if cuts.len() < 2 {
        return Err(RepError::OrderUnavailable("need at least two cut points".into()));
    }
    let mut cuts: Vec<Endpoint> = cuts.to_vec();
    cuts.sort_by(|a, b| a.shadow.total_cmp(&b.shadow));
    let mut arcs: Vec<Arc> = (0..cuts.len())
        .map(|i| Arc {
            from: cuts[i].clone(),
            to: cuts[(i + 1) % cuts.len()].clone(),
            points: Vec::new(),
        })
        .collect();
    let mut keyed: Vec<Vec<(f64, &LimitPoint)>> = vec![Vec::new(); arcs.len()];
    for p in &sample.points {
        let angle = p
            .shadow
            .ok_or_else(|| RepError::OrderUnavailable(format!("{:?} has no shadow", p.source)))?;
        for (arc, bucket) in arcs.iter().zip(keyed.iter_mut()) {
            if let Some(off) = arc.position(angle) {
                bucket.push((off, p));
                break;
            }
        }
    }
    for (arc, mut bucket) in arcs.iter_mut().zip(keyed) {
        bucket.sort_by(|a, b| a.0.total_cmp(&b.0));
        arc.points = bucket.into_iter().map(|(_, p)| p.clone()).collect();
    }
    Ok(arcs)
}

/// Splits the sample at `σ_±` into `(c_A, c_B)`, where `c_A` is the arc
/// holding the limit points of words in the generators `a_generators`.
pub fn arc_split(
    sample: &LimitSetSample,
    plus: &Endpoint,
    minus: &Endpoint,
    a_generators: &[u16],
) -> Result<(Arc, Arc), RepError> {
    let mut arcs = split_circle(sample, &[plus.clone(), minus.clone()])?;
    let in_a = |p: &LimitPoint| p.source.letters().iter().all(|l| a_generators.contains(&l.gen));
    let counts: Vec<usize> = arcs
        .iter()
        .map(|a| a.points.iter().filter(|p| in_a(p)).count())
        .collect();
    if counts[0] > 0 && counts[1] > 0 {
        return Err(RepError::OrderUnavailable(format!(
            "factor limit points on both arcs ({} and {})",
            counts[0], counts[1]
        )));
    }
    let second = arcs.pop().expect("two arcs");
    let first = arcs.pop().expect("two arcs");
    Ok(if counts[1] > 0 { (second, first) } else { (first, second) })
}
