//! Small groups with exact matrix oracles, shared by tests and the CLI.

use crate::exact::{GroupMatrix, RatMatrix};
use crate::words::{AmalgamPresentation, Factor, FactorKind, GenWord, HnnPresentation, Subgroup};

pub fn s_matrix() -> RatMatrix {
    RatMatrix::from_i64(&[&[0, -1], &[1, 0]])
}

pub fn u_matrix() -> RatMatrix {
    RatMatrix::from_i64(&[&[0, -1], &[1, 1]])
}

/// `SL(2,Z) = Z/4 ⋆_{Z/2} Z/6` with `S` of order 4, `U` of order 6 and
/// `S^2 = U^3 = -I`.
pub fn sl2z_amalgam() -> AmalgamPresentation {
    let a = Factor::new(
        vec!["S".into()],
        vec![GroupMatrix::Exact(s_matrix())],
        FactorKind::Enumerated,
        false,
    )
    .expect("valid factor");
    let b = Factor::new(
        vec!["U".into()],
        vec![GroupMatrix::Exact(u_matrix())],
        FactorKind::Enumerated,
        false,
    )
    .expect("valid factor");
    AmalgamPresentation::new(
        a,
        b,
        Subgroup::new(vec![GenWord::gen(0).pow(2)]),
        Subgroup::new(vec![GenWord::gen(0).pow(3)]),
    )
    .expect("S^2 = U^3")
}

pub fn bs12_a() -> RatMatrix {
    RatMatrix::from_i64(&[&[1, 1], &[0, 1]])
}

pub fn bs12_f() -> RatMatrix {
    RatMatrix::from_i64(&[&[2, 0], &[0, 1]])
}

/// `BS(1,2)` as the HNN extension of `M = <a>` with `f a f^-1 = a^2`, so
/// `H- = M` and `H+ = <a^2>`.
pub fn bs12_hnn() -> HnnPresentation {
    let m = Factor::new(
        vec!["a".into()],
        vec![GroupMatrix::Exact(bs12_a())],
        FactorKind::Free,
        false,
    )
    .expect("valid factor");
    HnnPresentation::new(
        m,
        GroupMatrix::Exact(bs12_f()),
        "f",
        Subgroup::new(vec![GenWord::gen(0)]),
        Subgroup::new(vec![GenWord::gen(0).pow(2)]),
    )
    .expect("f a f^-1 = a^2")
}
