//! Command-line pipeline for flagpong scenes: parse a [`SceneConfig`], run
//! one command, and collect the JSON and CSV artifacts it emits.

pub mod config;
pub mod output;

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use flagpong::certify::{
    anosov_gap_scan, antipodality_audit, bend_scan, hnn_cyclic_check, ping_pong_injectivity,
    shrink_diagnostic, verify_interactive_pair, verify_interactive_triple, BendParams, CertReport,
    CertifyError, GapScanParams, GapScanReport, SceneRef, Verdict,
};
use flagpong::exact::GroupMatrix;
use flagpong::flags::FlagType;
use flagpong::numeric::POLICY;
use flagpong::reps::{limit_set_sample, MatrixRep, RepError};
use flagpong::tree::{normal_form_path, tree_distance, vertex_of, TreeVertex, VertexType};
use flagpong::words::{alternating_sequence, AnyPresentation, Presentation, WordError};

pub use config::{ConfigError, Scene, SceneConfig};
use output::{num, opt_num, to_csv, to_json};

pub const REPORT_SCHEMA: u32 = 1;

/// Environment variable overriding the output directory.
pub const OUT_ENV: &str = "FLAGPONG_OUT";

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    NormalForm,
    TreeDist,
    LimitSet,
    CertifyPair,
    CertifyTriple,
    BendScan,
    GapScan,
    Shrink,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::NormalForm => "normal-form",
            Command::TreeDist => "tree-dist",
            Command::LimitSet => "limit-set",
            Command::CertifyPair => "certify-pair",
            Command::CertifyTriple => "certify-triple",
            Command::BendScan => "bend-scan",
            Command::GapScan => "gap-scan",
            Command::Shrink => "shrink",
        }
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Certify(#[from] CertifyError),
    #[error(transparent)]
    Word(#[from] WordError),
    #[error(transparent)]
    Rep(#[from] RepError),
    #[error("writing {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Outcome {
    Pass,
    Inconclusive,
    Fail,
}

impl Outcome {
    pub fn exit_code(self) -> i32 {
        match self {
            Outcome::Pass => 0,
            Outcome::Fail => 2,
            Outcome::Inconclusive => 3,
        }
    }

    pub fn of_verdict(v: Verdict) -> Self {
        match v {
            Verdict::Certified | Verdict::CertifiedAtDepth => Outcome::Pass,
            Verdict::Falsified => Outcome::Fail,
            Verdict::Inconclusive => Outcome::Inconclusive,
        }
    }

    pub fn of_pass(pass: bool) -> Self {
        if pass {
            Outcome::Pass
        } else {
            Outcome::Fail
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Artifact {
    pub name: String,
    pub bytes: Vec<u8>,
}

#[derive(Clone, Debug)]
pub struct RunResult {
    pub outcome: Outcome,
    pub artifacts: Vec<Artifact>,
    /// One line for the terminal.
    pub summary: String,
}

/// Command-line overrides applied on top of the configuration.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    /// The certificate depth `L`; for `limit-set`, the sample word length.
    pub depth: Option<usize>,
    pub json_only: bool,
}

pub fn apply_overrides(config: &mut SceneConfig, command: Command, o: &Overrides) {
    if let Some(seed) = o.seed {
        config.seed = seed;
    }
    if let Some(depth) = o.depth {
        if command == Command::LimitSet {
            config.sets.sample_depth = Some(depth);
        } else {
            config.certifier.depth = depth;
        }
    }
}

/// `--out`, then `FLAGPONG_OUT`, then the config's `output.dir`, then `.`.
pub fn output_dir(cli: Option<&Path>, config: &SceneConfig) -> PathBuf {
    if let Some(p) = cli {
        return p.to_path_buf();
    }
    if let Some(p) = std::env::var_os(OUT_ENV).filter(|v| !v.is_empty()) {
        return PathBuf::from(p);
    }
    config.output.dir.clone().unwrap_or_else(|| PathBuf::from("."))
}

pub fn write_artifacts(dir: &Path, artifacts: &[Artifact]) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    for a in artifacts {
        let path = dir.join(&a.name);
        std::fs::write(&path, &a.bytes).map_err(|source| CliError::Io { path, source })?;
    }
    Ok(())
}

struct Out {
    json_only: bool,
    artifacts: Vec<Artifact>,
}

impl Out {
    fn json<T: Serialize>(&mut self, name: &str, x: &T) -> Result<(), CliError> {
        self.artifacts.push(Artifact {
            name: format!("{name}.json"),
            bytes: to_json(x)?,
        });
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: Vec<Vec<String>>) -> Result<(), CliError> {
        if self.json_only {
            return Ok(());
        }
        let header: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        self.artifacts.push(Artifact {
            name: format!("{name}.csv"),
            bytes: to_csv(&header, &rows)?,
        });
        Ok(())
    }
}

/// Runs one command. Nothing is written; the caller decides where the
/// artifacts go.
pub fn run(command: Command, config: &SceneConfig, json_only: bool) -> Result<RunResult, CliError> {
    let scene = config.scene()?;
    let mut out = Out {
        json_only,
        artifacts: Vec::new(),
    };
    let (outcome, summary) = match command {
        Command::NormalForm => normal_form(config, &scene, &mut out)?,
        Command::TreeDist => tree_dist(config, &scene, &mut out)?,
        Command::LimitSet => limit_set(config, &scene, &mut out)?,
        Command::CertifyPair => certify_pair(config, &scene, &mut out)?,
        Command::CertifyTriple => certify_triple(config, &scene, &mut out)?,
        Command::BendScan => bending(config, &scene, &mut out)?,
        Command::GapScan => gap_scan(config, &scene, &mut out)?,
        Command::Shrink => shrink(config, &scene, &mut out)?,
    };
    Ok(RunResult {
        outcome,
        artifacts: out.artifacts,
        summary: format!("{}: {summary}", command.name()),
    })
}

fn presentation(scene: &Scene) -> Presentation {
    match scene {
        Scene::Pair(s) => Presentation::Amalgam(s.presentation.clone()),
        Scene::Triple(s) => Presentation::Hnn(s.presentation.clone()),
        Scene::Group(p, _) => p.clone(),
    }
}

fn any(p: &Presentation) -> AnyPresentation<'_> {
    match p {
        Presentation::Amalgam(a) => a.into(),
        Presentation::Hnn(h) => h.into(),
    }
}

fn scene_rep(scene: &Scene) -> Result<MatrixRep, CliError> {
    Ok(match scene {
        Scene::Pair(s) => s.rep.clone(),
        Scene::Triple(s) => s.rep.clone(),
        Scene::Group(_, Some(rep)) => rep.clone(),
        Scene::Group(p, None) => {
            let factors: Vec<(&[String], &[GroupMatrix])> = match p {
                Presentation::Amalgam(a) => vec![(&a.a.names, &a.a.matrices), (&a.b.names, &a.b.matrices)],
                Presentation::Hnn(h) => vec![(&h.m.names, &h.m.matrices)],
            };
            let mut names: Vec<String> = Vec::new();
            let mut matrices = Vec::new();
            for (n, m) in factors {
                names.extend(n.iter().cloned());
                matrices.extend(m.iter().cloned());
            }
            if let Presentation::Hnn(h) = p {
                names.push(h.stable_name.clone());
                matrices.push(h.stable.clone());
            }
            MatrixRep::new(names, matrices)?
        }
    })
}

fn scene_ref(scene: &Scene) -> Option<SceneRef<'_>> {
    match scene {
        Scene::Pair(s) => Some(SceneRef::Pair(s)),
        Scene::Triple(s) => Some(SceneRef::Triple(s)),
        Scene::Group(..) => None,
    }
}

fn flag_type(config: &SceneConfig, rep: &MatrixRep) -> FlagType {
    config.flag_type.clone().unwrap_or_else(|| FlagType::full(rep.d()))
}

fn gap_params(config: &SceneConfig) -> GapScanParams {
    let c = &config.certifier;
    GapScanParams {
        max_len: c.gap_max_len,
        floor: c.slope_floor,
        samples: c.gap_samples,
        seed: config.seed,
        ..GapScanParams::default()
    }
}

fn need_words(config: &SceneConfig) -> Result<(), CliError> {
    if config.words.is_empty() {
        return Err(CliError::Usage("the config lists no `words`".into()));
    }
    Ok(())
}

fn normal_form(config: &SceneConfig, scene: &Scene, out: &mut Out) -> Result<(Outcome, String), CliError> {
    need_words(config)?;
    let p = presentation(scene);
    let mut results = Vec::new();
    let mut disagreements = 0;
    for w in &config.words {
        let nf = p.normal_form(w)?;
        let agrees = p
            .evaluate(w)?
            .same_element(&p.evaluate(&nf.word())?, POLICY.float_compare, p.projective());
        if !agrees {
            disagreements += 1;
        }
        results.push(json!({
            "input": w,
            "rl": nf.rl,
            "syllables": nf.syllables,
            "matrix_agrees": agrees,
        }));
    }
    out.json(
        "normal-form",
        &json!({"schema": REPORT_SCHEMA, "kind": "normal-form", "results": results}),
    )?;
    let rls: Vec<String> = results.iter().map(|r| r["rl"].to_string()).collect();
    Ok((
        Outcome::of_pass(disagreements == 0),
        format!("rl = [{}], {disagreements} matrix disagreements", rls.join(", ")),
    ))
}

fn tree_dist(config: &SceneConfig, scene: &Scene, out: &mut Out) -> Result<(Outcome, String), CliError> {
    need_words(config)?;
    let p = presentation(scene);
    let base = match p {
        Presentation::Amalgam(_) => VertexType::A,
        Presentation::Hnn(_) => VertexType::M,
    };
    let mut results = Vec::new();
    let mut rows = Vec::new();
    for w in &config.words {
        let nf = p.normal_form(w)?;
        let v = vertex_of(&nf, base, any(&p))?;
        let d = tree_distance(&TreeVertex::base(base), &v, any(&p))?;
        let path = normal_form_path(&nf, any(&p))?;
        rows.push(vec![nf.rl.to_string(), d.to_string(), (path.len() - 1).to_string()]);
        results.push(json!({
            "input": w,
            "rl": nf.rl,
            "vertex": v,
            "distance": d,
            "path": path,
        }));
    }
    out.json(
        "tree-dist",
        &json!({"schema": REPORT_SCHEMA, "kind": "tree-dist", "base": base, "results": results}),
    )?;
    out.csv("tree-dist", &["rl", "distance", "path_edges"], rows)?;
    Ok((Outcome::Pass, format!("{} words", config.words.len())))
}

fn limit_set(config: &SceneConfig, scene: &Scene, out: &mut Out) -> Result<(Outcome, String), CliError> {
    let rep = scene_rep(scene)?;
    let ty = flag_type(config, &rep);
    let depth = config.sets.sample_depth.unwrap_or(4);
    let sample = limit_set_sample(&rep, depth, &ty);
    let audit = if sample.points.len() >= 2 {
        Some(antipodality_audit(&sample)?)
    } else {
        None
    };
    let d = ty.d;
    let mut header: Vec<String> = (0..d * d).map(|k| format!("b{}{}", k / d, k % d)).collect();
    header.extend((1..=ty.dims.len()).map(|k| format!("gap{k}")));
    header.push("word".into());
    let rows: Vec<Vec<String>> = sample
        .points
        .iter()
        .map(|p| {
            let mut r: Vec<String> = p.flag.rows().into_iter().flatten().map(num).collect();
            r.extend(p.gaps.0.iter().map(|&g| num(g)));
            r.push(p.source.display_with(&rep.names));
            r
        })
        .collect();
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    out.csv("limit-set", &header_refs, rows)?;
    let outcome = match &audit {
        Some(a) => Outcome::of_pass(a.pass),
        None => Outcome::Inconclusive,
    };
    let summary = format!(
        "{} flags, {} skipped, audit margin {}",
        sample.points.len(),
        sample.skipped,
        audit.as_ref().map(|a| num(a.min_margin)).unwrap_or_else(|| "n/a".into())
    );
    out.json(
        "limit-set",
        &json!({"schema": REPORT_SCHEMA, "kind": "limit-set", "depth": depth, "sample": sample, "audit": audit}),
    )?;
    Ok((outcome, summary))
}

fn condition_rows(r: &CertReport) -> Vec<Vec<String>> {
    r.conditions
        .iter()
        .map(|c| {
            vec![
                c.name.clone(),
                serde_json::to_value(c.status)
                    .ok()
                    .and_then(|v| v.as_str().map(String::from))
                    .unwrap_or_default(),
                opt_num(c.margin),
                num(c.required),
                c.checked.to_string(),
            ]
        })
        .collect()
}

const CONDITION_HEADER: [&str; 5] = ["condition", "status", "margin", "required", "checked"];

fn verdict_name(v: Verdict) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|v| v.as_str().map(String::from))
        .unwrap_or_default()
}

fn describe(r: &CertReport) -> String {
    let mut s = format!("{}, min margin {}", verdict_name(r.verdict), opt_num(r.min_margin()));
    if let Some(w) = &r.witness {
        s.push_str(&format!(", witness: {}", w.detail));
        if let Some(word) = &w.word {
            s.push_str(&format!(" at {word}"));
        }
    }
    s
}

fn injectivity(config: &SceneConfig, scene: SceneRef, out: &mut Out) -> Result<Option<Outcome>, CliError> {
    let Some(params) = config.certifier.injectivity else {
        return Ok(None);
    };
    let r = ping_pong_injectivity(scene, params)?;
    out.json("injectivity", &r)?;
    Ok(Some(Outcome::of_verdict(r.verdict)))
}

fn certify_pair(config: &SceneConfig, scene: &Scene, out: &mut Out) -> Result<(Outcome, String), CliError> {
    let Scene::Pair(s) = scene else {
        return Err(CliError::Usage("certify-pair needs an amalgam scene with sets `a` and `b`".into()));
    };
    let r = verify_interactive_pair(s)?;
    out.json("certify-pair", &r)?;
    out.csv("certify-pair", &CONDITION_HEADER, condition_rows(&r))?;
    let mut outcome = Outcome::of_verdict(r.verdict);
    if let Some(o) = injectivity(config, SceneRef::Pair(s), out)? {
        outcome = outcome.max(o);
    }
    Ok((outcome, describe(&r)))
}

fn certify_triple(config: &SceneConfig, scene: &Scene, out: &mut Out) -> Result<(Outcome, String), CliError> {
    let Scene::Triple(s) = scene else {
        return Err(CliError::Usage(
            "certify-triple needs an HNN scene with sets `a`, `b_plus` and `b_minus`".into(),
        ));
    };
    let r = verify_interactive_triple(s)?;
    out.json("certify-triple", &r)?;
    out.csv("certify-triple", &CONDITION_HEADER, condition_rows(&r))?;
    let f = s.rep.generator(&s.presentation.stable_name)?;
    let cyclic = hnn_cyclic_check(f, &s.b_plus, &s.b_minus, s.margin)?;
    out.json("hnn-cyclic", &cyclic)?;
    let mut outcome = Outcome::of_verdict(r.verdict).max(Outcome::of_verdict(cyclic.verdict));
    if let Some(o) = injectivity(config, SceneRef::Triple(s), out)? {
        outcome = outcome.max(o);
    }
    Ok((outcome, describe(&r)))
}

fn bending(config: &SceneConfig, scene: &Scene, out: &mut Out) -> Result<(Outcome, String), CliError> {
    let s = scene_ref(scene).ok_or_else(|| CliError::Usage("bend-scan needs a scene with sets".into()))?;
    let b = &config.bend;
    let mut params = BendParams::for_dim(s.rep().d());
    if let Some(dir) = &b.direction {
        params.direction = dir.clone();
    }
    params.s_hi = b.s_hi;
    params.iterations = b.iterations;
    params.ray_points = b.ray_points;
    params.gap = gap_params(config);
    let r = bend_scan(s, &params)?;
    let rows = r
        .bisection
        .iter()
        .map(|x| ("bisection", x))
        .chain(r.ray.iter().map(|x| ("ray", x)))
        .map(|(phase, x)| vec![phase.to_string(), num(x.s), verdict_name(x.verdict), opt_num(x.min_margin)])
        .collect();
    out.json("bend-scan", &r)?;
    out.csv("bend-scan", &["phase", "s", "verdict", "min_margin"], rows)?;
    Ok((
        Outcome::of_pass(r.pass),
        format!("s_max {}, bent gap slope {}", num(r.s_max), num(r.gap.slope)),
    ))
}

fn gap_rows(r: &GapScanReport) -> Vec<Vec<String>> {
    r.lengths
        .iter()
        .zip(&r.min_gaps)
        .zip(&r.words)
        .map(|((n, g), w)| vec![n.to_string(), num(*g), w.to_string()])
        .collect()
}

fn gap_scan(config: &SceneConfig, scene: &Scene, out: &mut Out) -> Result<(Outcome, String), CliError> {
    let rep = scene_rep(scene)?;
    let ty = flag_type(config, &rep);
    let r = anosov_gap_scan(&rep, &rep.names, &ty, &gap_params(config))?;
    out.json("gap-scan", &r)?;
    out.csv("gap-scan", &["length", "min_gap", "words"], gap_rows(&r))?;
    Ok((Outcome::of_pass(r.pass), format!("slope {}", num(r.slope))))
}

fn shrink(config: &SceneConfig, scene: &Scene, out: &mut Out) -> Result<(Outcome, String), CliError> {
    let s = scene_ref(scene).ok_or_else(|| CliError::Usage("shrink needs a scene with sets".into()))?;
    let seq_config = config
        .sequence
        .as_ref()
        .ok_or_else(|| CliError::Usage("shrink needs a `sequence`".into()))?;
    let p = presentation(scene);
    let seq = alternating_sequence(&seq_config.spec, seq_config.length, any(&p))?;
    let r = shrink_diagnostic(s, &seq)?;
    let rows = r
        .diameters
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let nest = if i == 0 { String::new() } else { num(r.nesting[i - 1]) };
            vec![(i + 1).to_string(), num(*d), nest]
        })
        .collect();
    out.json("shrink", &r)?;
    out.csv("shrink", &["n", "diameter", "nesting_margin"], rows)?;
    Ok((
        Outcome::of_pass(r.pass),
        format!("ratio {}, nested {}", num(r.ratio), r.not_nested_at.is_none()),
    ))
}
