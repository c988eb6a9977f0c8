//! Scene configuration: a single JSON document, schema version 1.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use flagpong::certify::{
    cyclic_triple_scene, genus2_amalgam_scene, genus2_hnn_scene, schottky_scene, CertifyError,
    Genus2Params, InjectivityParams, NetParams, PairScene, TripleScene,
};
use flagpong::exact::GroupMatrix;
use flagpong::fixtures::{bs12_hnn, sl2z_amalgam};
use flagpong::flags::{FlagSet, FlagType};
use flagpong::numeric::POLICY;
use flagpong::reps::MatrixRep;
use flagpong::words::{
    AlternatingSpec, AmalgamPresentation, Factor, FactorKind, GenWord, HnnPresentation,
    Presentation, Subgroup, Word,
};

pub const CONFIG_SCHEMA: u32 = 1;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}, column {column}, field `{field}`: {message}")]
    Parse {
        line: usize,
        column: usize,
        field: String,
        message: String,
    },
    #[error("field `{field}`: {message}")]
    Invalid { field: String, message: String },
}

fn invalid(field: &str, message: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        message: message.into(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Amalgam,
    Hnn,
}

/// Built-in groups and scenes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// `SL(2,Z) = Z/4 ⋆_{Z/2} Z/6`, exact.
    Sl2z,
    /// `BS(1,2)` as an HNN extension of `Z`, exact.
    Bs12,
    /// Two hyperbolic elements of `SL(2,R)` playing ping-pong.
    Schottky,
    /// `⟨diag(4,1,1/4)⟩` as an HNN extension of the trivial group.
    CyclicTriple,
    Genus2Amalgam,
    Genus2Hnn,
}

impl Preset {
    fn mode(self) -> Mode {
        match self {
            Preset::Sl2z | Preset::Schottky | Preset::Genus2Amalgam => Mode::Amalgam,
            Preset::Bs12 | Preset::CyclicTriple | Preset::Genus2Hnn => Mode::Hnn,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FactorConfig {
    pub generators: MatrixRep,
    pub kind: FactorKind,
    #[serde(default)]
    pub projective: bool,
    #[serde(default)]
    pub budget: Option<usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AmalgamGroup {
    pub a: FactorConfig,
    pub b: FactorConfig,
    /// Generators of `H` as words in `A`'s generators.
    pub h_in_a: Vec<GenWord>,
    /// The same generators as words in `B`'s generators.
    pub h_in_b: Vec<GenWord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HnnGroup {
    pub m: FactorConfig,
    /// One named matrix.
    pub stable: MatrixRep,
    pub h_minus: Vec<GenWord>,
    pub h_plus: Vec<GenWord>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupConfig {
    Amalgam(AmalgamGroup),
    Hnn(HnnGroup),
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SetConfig {
    /// Word length of the limit sample arcs are cut from.
    #[serde(default)]
    pub sample_depth: Option<usize>,
    #[serde(default)]
    pub net: Option<NetParams>,
    /// Explicit sets replace the preset's.
    #[serde(default)]
    pub a: Option<FlagSet>,
    #[serde(default)]
    pub b: Option<FlagSet>,
    #[serde(default)]
    pub b_plus: Option<FlagSet>,
    #[serde(default)]
    pub b_minus: Option<FlagSet>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CertifierConfig {
    /// Factor-word length `L`.
    pub depth: usize,
    pub margin: f64,
    pub relaxed: bool,
    pub slope_floor: f64,
    pub gap_max_len: usize,
    pub gap_samples: usize,
    /// Runs the injectivity walk after the certificate when set.
    pub injectivity: Option<InjectivityParams>,
}

impl Default for CertifierConfig {
    fn default() -> Self {
        CertifierConfig {
            depth: 4,
            margin: POLICY.membership_margin,
            relaxed: false,
            slope_floor: 0.05,
            gap_max_len: 12,
            gap_samples: 256,
            injectivity: None,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BendConfig {
    /// Direction `s` in the centralizer chart; defaults per dimension.
    pub direction: Option<Vec<f64>>,
    pub s_hi: f64,
    pub iterations: usize,
    pub ray_points: usize,
}

impl Default for BendConfig {
    fn default() -> Self {
        BendConfig {
            direction: None,
            s_hi: 1.0,
            iterations: 8,
            ray_points: 5,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequenceConfig {
    pub spec: AlternatingSpec,
    #[serde(default = "default_sequence_length")]
    pub length: usize,
}

fn default_sequence_length() -> usize {
    12
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub dir: Option<PathBuf>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneConfig {
    pub schema: u32,
    pub mode: Mode,
    pub seed: u64,
    #[serde(default)]
    pub preset: Option<Preset>,
    #[serde(default)]
    pub group: Option<GroupConfig>,
    #[serde(default)]
    pub flag_type: Option<FlagType>,
    #[serde(default)]
    pub sets: SetConfig,
    #[serde(default)]
    pub certifier: CertifierConfig,
    #[serde(default)]
    pub bend: BendConfig,
    /// Input words for `normal-form` and `tree-dist`.
    #[serde(default)]
    pub words: Vec<Word>,
    #[serde(default)]
    pub sequence: Option<SequenceConfig>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// What a configuration resolves to.
#[derive(Clone, Debug)]
pub enum Scene {
    Pair(Box<PairScene>),
    Triple(Box<TripleScene>),
    /// A group without sets: enough for the combinatorial commands.
    Group(Presentation, Option<MatrixRep>),
}

impl SceneConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let config: SceneConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = match e.path().to_string() {
                p if p == "." => "<root>".to_string(),
                p => p,
            };
            let inner = e.into_inner();
            ConfigError::Parse {
                line: inner.line(),
                column: inner.column(),
                field,
                message: inner.to_string(),
            }
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), ConfigError> {
        if self.schema != CONFIG_SCHEMA {
            return Err(invalid("schema", format!("unsupported schema {}, expected {CONFIG_SCHEMA}", self.schema)));
        }
        match (&self.preset, &self.group) {
            (Some(_), Some(_)) => return Err(invalid("group", "give either `preset` or `group`, not both")),
            (None, None) => return Err(invalid("group", "one of `preset` or `group` is required")),
            (Some(p), None) if p.mode() != self.mode => {
                return Err(invalid("mode", format!("preset {p:?} is a {:?} scene", p.mode())))
            }
            (None, Some(g)) => {
                let gm = match g {
                    GroupConfig::Amalgam(_) => Mode::Amalgam,
                    GroupConfig::Hnn(_) => Mode::Hnn,
                };
                if gm != self.mode {
                    return Err(invalid("mode", "does not match the kind of `group`"));
                }
            }
            _ => {}
        }
        if let Some(d) = self.declared_dim() {
            for (field, rep) in self.group_reps() {
                if rep.d() != d {
                    return Err(invalid(field, format!("matrices are {0}x{0}, declared d = {d}", rep.d())));
                }
            }
        }
        let sets = [
            ("sets.a", &self.sets.a),
            ("sets.b", &self.sets.b),
            ("sets.b_plus", &self.sets.b_plus),
            ("sets.b_minus", &self.sets.b_minus),
        ];
        for (field, set) in sets {
            if let Some(s) = set {
                FlagSet::new(s.label.clone(), s.ty.clone(), s.r, s.net.clone())
                    .map_err(|e| invalid(field, e.to_string()))?;
                if let Some(d) = self.declared_dim() {
                    if s.ty.d != d {
                        return Err(invalid(field, format!("flags live in R^{}, declared d = {d}", s.ty.d)));
                    }
                }
            }
        }
        let c = &self.certifier;
        if !(c.margin >= 0.0) {
            return Err(invalid("certifier.margin", "must be nonnegative"));
        }
        if c.depth == 0 {
            return Err(invalid("certifier.depth", "must be positive"));
        }
        if let Some(GroupConfig::Hnn(h)) = &self.group {
            if h.stable.rank() != 1 {
                return Err(invalid("group.hnn.stable", "expected exactly one generator"));
            }
        }
        Ok(())
    }

    fn declared_dim(&self) -> Option<usize> {
        self.flag_type.as_ref().map(|t| t.d)
    }

    fn group_reps(&self) -> Vec<(&'static str, &MatrixRep)> {
        match &self.group {
            Some(GroupConfig::Amalgam(g)) => vec![
                ("group.amalgam.a.generators", &g.a.generators),
                ("group.amalgam.b.generators", &g.b.generators),
            ],
            Some(GroupConfig::Hnn(g)) => vec![
                ("group.hnn.m.generators", &g.m.generators),
                ("group.hnn.stable", &g.stable),
            ],
            None => Vec::new(),
        }
    }

    /// Resolves the preset or explicit group, applying set and certifier
    /// overrides.
    pub fn scene(&self) -> Result<Scene, ConfigError> {
        let scene_err = |e: CertifyError| invalid("preset", e.to_string());
        let c = &self.certifier;
        let genus2 = |base: Genus2Params| Genus2Params {
            sample_depth: self.sets.sample_depth.unwrap_or(base.sample_depth),
            net: self.sets.net.unwrap_or(base.net),
            depth: c.depth,
            margin: c.margin,
            seed: self.seed,
            relaxed: c.relaxed,
            ..base
        };
        let scene = match (self.preset, &self.group) {
            (Some(Preset::Sl2z), _) => Scene::Group(Presentation::Amalgam(sl2z_amalgam()), None),
            (Some(Preset::Bs12), _) => Scene::Group(Presentation::Hnn(bs12_hnn()), None),
            (Some(Preset::Schottky), _) => Scene::Pair(Box::new(schottky_scene())),
            (Some(Preset::CyclicTriple), _) => Scene::Triple(Box::new(cyclic_triple_scene())),
            (Some(Preset::Genus2Amalgam), _) => {
                Scene::Pair(Box::new(genus2_amalgam_scene(&genus2(Genus2Params::amalgam())).map_err(scene_err)?))
            }
            (Some(Preset::Genus2Hnn), _) => {
                Scene::Triple(Box::new(genus2_hnn_scene(&genus2(Genus2Params::hnn())).map_err(scene_err)?))
            }
            (None, Some(GroupConfig::Amalgam(g))) => explicit_amalgam(g, &self.sets)?,
            (None, Some(GroupConfig::Hnn(g))) => explicit_hnn(g, &self.sets)?,
            (None, None) => unreachable!("validated"),
        };
        let scene = match scene {
            Scene::Pair(mut s) => {
                if let Some(a) = &self.sets.a {
                    s.a = a.clone();
                }
                if let Some(b) = &self.sets.b {
                    s.b = b.clone();
                }
                s.depth = c.depth;
                s.margin = c.margin;
                s.seed = self.seed;
                s.relaxed = c.relaxed;
                s.validate().map_err(|e| invalid("sets", e.to_string()))?;
                Scene::Pair(s)
            }
            Scene::Triple(mut s) => {
                if let Some(a) = &self.sets.a {
                    s.a = a.clone();
                }
                if let Some(b) = &self.sets.b_plus {
                    s.b_plus = b.clone();
                }
                if let Some(b) = &self.sets.b_minus {
                    s.b_minus = b.clone();
                }
                s.depth = c.depth;
                s.margin = c.margin;
                s.seed = self.seed;
                s.relaxed = c.relaxed;
                s.validate().map_err(|e| invalid("sets", e.to_string()))?;
                Scene::Triple(s)
            }
            g => g,
        };
        Ok(scene)
    }
}

fn factor(field: &str, f: &FactorConfig) -> Result<Factor, ConfigError> {
    let factor = Factor::new(f.generators.names.clone(), f.generators.matrices.clone(), f.kind, f.projective)
        .map_err(|e| invalid(field, e.to_string()))?;
    Ok(match f.budget {
        Some(b) => factor.with_budget(b),
        None => factor,
    })
}

fn joined_rep(field: &str, parts: &[&MatrixRep]) -> Result<MatrixRep, ConfigError> {
    let mut names: Vec<String> = Vec::new();
    let mut matrices: Vec<GroupMatrix> = Vec::new();
    for r in parts {
        for (n, m) in r.names.iter().zip(&r.matrices) {
            if names.contains(n) {
                return Err(invalid(field, format!("generator name {n:?} used twice")));
            }
            names.push(n.clone());
            matrices.push(m.clone());
        }
    }
    MatrixRep::new(names, matrices).map_err(|e| invalid(field, e.to_string()))
}

fn explicit_amalgam(g: &AmalgamGroup, sets: &SetConfig) -> Result<Scene, ConfigError> {
    let p = AmalgamPresentation::new(
        factor("group.amalgam.a", &g.a)?,
        factor("group.amalgam.b", &g.b)?,
        Subgroup::new(g.h_in_a.clone()),
        Subgroup::new(g.h_in_b.clone()),
    )
    .map_err(|e| invalid("group.amalgam", e.to_string()))?;
    let rep = joined_rep("group.amalgam", &[&g.a.generators, &g.b.generators])?;
    Ok(match (&sets.a, &sets.b) {
        (Some(a), Some(b)) => Scene::Pair(Box::new(PairScene {
            presentation: p,
            rep,
            a: a.clone(),
            b: b.clone(),
            depth: 0,
            margin: 0.0,
            seed: 0,
            relaxed: false,
        })),
        (None, None) => Scene::Group(Presentation::Amalgam(p), Some(rep)),
        _ => return Err(invalid("sets", "an explicit pair scene needs both `a` and `b`")),
    })
}

fn explicit_hnn(g: &HnnGroup, sets: &SetConfig) -> Result<Scene, ConfigError> {
    let stable_name = g.stable.names[0].clone();
    let p = HnnPresentation::new(
        factor("group.hnn.m", &g.m)?,
        g.stable.matrices[0].clone(),
        &stable_name,
        Subgroup::new(g.h_minus.clone()),
        Subgroup::new(g.h_plus.clone()),
    )
    .map_err(|e| invalid("group.hnn", e.to_string()))?;
    let rep = joined_rep("group.hnn", &[&g.m.generators, &g.stable])?;
    Ok(match (&sets.a, &sets.b_plus, &sets.b_minus) {
        (Some(a), Some(bp), Some(bm)) => Scene::Triple(Box::new(TripleScene {
            presentation: p,
            rep,
            a: a.clone(),
            b_plus: bp.clone(),
            b_minus: bm.clone(),
            depth: 0,
            margin: 0.0,
            seed: 0,
            relaxed: false,
        })),
        (None, None, None) => Scene::Group(Presentation::Hnn(p), Some(rep)),
        _ => {
            return Err(invalid(
                "sets",
                "an explicit triple scene needs `a`, `b_plus` and `b_minus`",
            ))
        }
    })
}
