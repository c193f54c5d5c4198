//! Command implementations producing JSON reports and text summaries.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::PathBuf;

use num_bigint::BigUint;
use num_traits::Zero;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use stratasheaf::exactmath::{format_rat, IntMatrix};
use stratasheaf::formulas::{
    bellamy_count, sym_duval_count, torus_surface_profile, DuValType, FormulaError, SurfaceProfile,
};
use stratasheaf::models::{self, BuildError};
use stratasheaf::sheaf::{self, SheafError};
use stratasheaf::stratspace::{ModelError, StratifiedModel, ValidationReport};
use stratasheaf::torusquot::{
    binary_tetrahedral_model, close_group, fixed_locus, gamma, is_symplectic, pgl3_group, singular_orbits,
    MatrixGroup, TorsionPoint, TorusError,
};

use crate::document::{int_rows, DocError, GroupDocument, ModelDocument, FORMAT_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_SCHEMA: i32 = 2;
pub const EXIT_VALIDATION: i32 = 3;
pub const EXIT_GROUP_NOT_FINITE: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Doc(#[from] DocError),
    #[error("model is invalid:\n{0}")]
    Invalid(ValidationReport),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Build(#[from] BuildError),
    #[error(transparent)]
    Torus(#[from] TorusError),
    #[error(transparent)]
    Formula(#[from] FormulaError),
    #[error(transparent)]
    Sheaf(SheafError),
}

impl From<SheafError> for CliError {
    fn from(e: SheafError) -> Self {
        match e {
            SheafError::Model(ModelError::Invalid(r)) => CliError::Invalid(r),
            other => CliError::Sheaf(other),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Doc(DocError::Schema { .. }) | CliError::Usage(_) | CliError::Io { .. } => EXIT_SCHEMA,
            CliError::Build(BuildError::Model(_)) => EXIT_VALIDATION,
            CliError::Build(_) => EXIT_SCHEMA,
            CliError::Doc(DocError::Semantic { .. }) | CliError::Invalid(_) => EXIT_VALIDATION,
            CliError::Torus(TorusError::GroupNotFinite(_)) => EXIT_GROUP_NOT_FINITE,
            CliError::Torus(_) => EXIT_SCHEMA,
            CliError::Formula(_) => EXIT_SCHEMA,
            CliError::Sheaf(_) => EXIT_FAILURE,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Doc(DocError::Schema { .. }) => "SchemaError",
            CliError::Doc(DocError::Semantic { .. }) | CliError::Invalid(_) => "ValidationError",
            CliError::Io { .. } => "InputError",
            CliError::Usage(_) => "UsageError",
            CliError::Build(_) => "BuilderError",
            CliError::Torus(TorusError::GroupNotFinite(_)) => "GroupNotFinite",
            CliError::Torus(_) => "GroupError",
            CliError::Formula(_) => "FormulaError",
            CliError::Sheaf(_) => "EngineError",
        }
    }

    /// Machine-readable error report.
    pub fn to_json(&self, command: &str) -> Value {
        let mut error = json!({
            "kind": self.kind(),
            "message": self.to_string(),
        });
        match self {
            CliError::Doc(DocError::Schema { path, .. } | DocError::Semantic { path, .. }) => {
                error["location"] = json!(path);
            }
            CliError::Invalid(report) => {
                error["violations"] = violations_json(report);
            }
            _ => {}
        }
        json!({
            "format_version": FORMAT_VERSION,
            "command": command,
            "exit_code": self.exit_code(),
            "error": error,
        })
    }
}

/// Where a model or group comes from.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Input {
    File(PathBuf),
    Builtin(String),
}

impl Input {
    pub fn describe(&self) -> String {
        match self {
            Input::File(p) => format!("file:{}", p.display()),
            Input::Builtin(name) => format!("builtin:{name}"),
        }
    }

    fn read(&self) -> Result<String, CliError> {
        match self {
            Input::File(p) => std::fs::read_to_string(p).map_err(|e| CliError::Io {
                path: p.display().to_string(),
                message: e.to_string(),
            }),
            Input::Builtin(_) => unreachable!("builtins are not read from disk"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub code: i32,
    pub report: Value,
    pub text: String,
}

fn digest(command: &str, options: &str, canonical_input: &str) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0]);
    h.update(options.as_bytes());
    h.update([0]);
    h.update(canonical_input.as_bytes());
    format!("sha256:{:x}", h.finalize())
}

fn envelope(command: &str, input: Option<&Input>, options: Value, digest: String, results: Value, warnings: &[String]) -> Value {
    json!({
        "format_version": FORMAT_VERSION,
        "command": {
            "name": command,
            "input": input.map(Input::describe),
            "options": options,
        },
        "inputs_digest": digest,
        "results": results,
        "warnings": warnings,
    })
}

/// Loads a model and its canonical document text.
pub fn load_model(input: &Input) -> Result<(StratifiedModel, String), CliError> {
    match input {
        Input::Builtin(spec) => {
            let m = models::build(spec)?;
            let canonical = ModelDocument::from_model(&m).to_canonical_json();
            Ok((m, canonical))
        }
        Input::File(_) => {
            let doc = ModelDocument::parse(&input.read()?)?;
            let m = doc.to_model()?;
            let canonical = ModelDocument::from_model(&m).to_canonical_json();
            Ok((m, canonical))
        }
    }
}

fn violations_json(report: &ValidationReport) -> Value {
    Value::Array(
        report
            .violations
            .iter()
            .map(|v| {
                json!({
                    "kind": v.kind.to_string(),
                    "location": v.location,
                    "detail": v.detail,
                })
            })
            .collect(),
    )
}

pub fn cmd_validate(input: &Input) -> Result<Outcome, CliError> {
    let (m, canonical) = load_model(input)?;
    let report = m.validate();
    let results = json!({
        "valid": report.is_valid(),
        "strata": m.strata.len(),
        "arrows": m.arrows.len(),
        "violations": violations_json(&report),
    });
    let mut text = format!("{}: {} strata, {} arrows\n", input.describe(), m.strata.len(), m.arrows.len());
    if report.is_valid() {
        text.push_str("valid\n");
    } else {
        writeln!(text, "{} violation(s):", report.violations.len()).unwrap();
        for v in &report.violations {
            writeln!(text, "  {v}").unwrap();
        }
    }
    Ok(Outcome {
        code: if report.is_valid() { EXIT_OK } else { EXIT_VALIDATION },
        report: envelope("validate", Some(input), json!({}), digest("validate", "", &canonical), results, &[]),
        text,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyOptions {
    pub list_sections: bool,
    pub max_list: usize,
}

impl Default for ClassifyOptions {
    fn default() -> Self {
        ClassifyOptions {
            list_sections: false,
            max_list: 10_000,
        }
    }
}

pub fn cmd_classify(input: &Input, opts: ClassifyOptions) -> Result<Outcome, CliError> {
    let (m, canonical) = load_model(input)?;
    let report = m.validate();
    if !report.is_valid() {
        return Err(CliError::Invalid(report));
    }
    let verdicts = sheaf::classify(&m, opts.max_list)?;
    let mut warnings = Vec::new();
    let mut summary: BTreeMap<&'static str, BigUint> = BTreeMap::new();
    let mut listing = Vec::new();
    match &verdicts.sections {
        Some(sections) => {
            for (i, sv) in sections.iter().enumerate() {
                *summary.entry(sv.verdict.as_str()).or_insert_with(BigUint::zero) += 1u32;
                if opts.list_sections {
                    let witness = sv.witness.as_ref().map(|w| {
                        w.vectors
                            .iter()
                            .map(|(k, v)| (k.clone(), json!(v.iter().map(format_rat).collect::<Vec<_>>())))
                            .collect::<serde_json::Map<_, _>>()
                    });
                    listing.push(json!({
                        "index": i,
                        "assignment": sv.section.labels(&m),
                        "verdict": sv.verdict.as_str(),
                        "witness": witness,
                    }));
                }
            }
        }
        None => warnings.push(format!(
            "{} sections exceed --max-list {}; verdicts and listing skipped",
            verdicts.section_count, opts.max_list
        )),
    }
    let summary_json: Option<BTreeMap<&str, String>> = verdicts
        .sections
        .as_ref()
        .map(|_| summary.iter().map(|(k, v)| (*k, v.to_string())).collect());
    let results = json!({
        "section_count": verdicts.section_count.to_string(),
        "verdict_summary": summary_json,
        "sections": if opts.list_sections && verdicts.sections.is_some() { Some(listing) } else { None },
    });
    let mut text = format!("{}\nsections: {}\n", input.describe(), verdicts.section_count);
    if let Some(sections) = &verdicts.sections {
        for (k, v) in &summary {
            writeln!(text, "  {k}: {v}").unwrap();
        }
        if opts.list_sections {
            for (i, sv) in sections.iter().enumerate() {
                let parts: Vec<String> = sv
                    .section
                    .labels(&m)
                    .iter()
                    .map(|(s, e)| format!("{s}={e}"))
                    .collect();
                writeln!(text, "  #{i} [{}] {}", parts.join(", "), sv.verdict).unwrap();
            }
        }
    }
    for w in &warnings {
        writeln!(text, "warning: {w}").unwrap();
    }
    let options = format!("list_sections={} max_list={}", opts.list_sections, opts.max_list);
    Ok(Outcome {
        code: EXIT_OK,
        report: envelope(
            "classify",
            Some(input),
            json!({"list_sections": opts.list_sections, "max_list": opts.max_list}),
            digest("classify", &options, &canonical),
            results,
            &warnings,
        ),
        text,
    })
}

pub const TORUS_BUILTINS: &[&str] = &["gamma1", "gamma2", "gamma3", "gamma4", "gamma6", "pgl3", "binary-tetrahedral"];

/// Generators of a built-in group, or of a group document.
pub fn load_group(input: &Input, cap: usize) -> Result<(MatrixGroup, String), CliError> {
    let group = match input {
        Input::Builtin(name) => match name.as_str() {
            "pgl3" => close_group(4, pgl3_group().generators(), cap)?,
            "binary-tetrahedral" => close_group(4, binary_tetrahedral_model().generators(), cap)?,
            other => {
                let m = other
                    .strip_prefix("gamma")
                    .and_then(|m| m.parse::<u32>().ok())
                    .and_then(gamma)
                    .ok_or_else(|| {
                        CliError::Usage(format!("unknown builtin group {other:?}; known: {}", TORUS_BUILTINS.join(", ")))
                    })?;
                close_group(2, &[m], cap)?
            }
        },
        Input::File(_) => {
            let doc = GroupDocument::parse(&input.read()?)?;
            let gens = doc.generators()?;
            close_group(doc.rank, &gens, cap)?
        }
    };
    let canonical = GroupDocument::from_generators(group.rank(), group.generators()).to_canonical_json();
    Ok((group, canonical))
}

fn point_json(p: &TorsionPoint) -> Value {
    json!(p.coords().iter().map(format_rat).collect::<Vec<_>>())
}

fn conjugacy_classes(g: &MatrixGroup) -> Vec<Vec<usize>> {
    let elements = g.elements();
    let inverses: Vec<IntMatrix> = elements
        .iter()
        .map(|h| h.unimodular_inverse().expect("group elements are unimodular"))
        .collect();
    let mut class_of = vec![usize::MAX; elements.len()];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for i in 0..elements.len() {
        if class_of[i] != usize::MAX {
            continue;
        }
        let mut members = Vec::new();
        for (h, hi) in elements.iter().zip(&inverses) {
            let c = &(h * &elements[i]) * hi;
            let j = elements.iter().position(|e| *e == c).expect("closed under conjugation");
            if class_of[j] == usize::MAX {
                class_of[j] = classes.len();
                members.push(j);
            }
        }
        members.sort_unstable();
        classes.push(members);
    }
    classes
}

pub fn cmd_torus(input: &Input, cap: usize) -> Result<Outcome, CliError> {
    let (g, canonical) = load_group(input, cap)?;
    let mut warnings = Vec::new();
    let symplectic = if g.rank() % 2 == 0 {
        let all = g.elements().iter().all(|h| is_symplectic(h).unwrap_or(false));
        Some(all)
    } else {
        warnings.push(format!("odd rank {}: symplectic check skipped", g.rank()));
        None
    };
    let mut classes = Vec::new();
    let mut text = format!(
        "{}\nrank {}, order {}, symplectic (standard form): {}\n",
        input.describe(),
        g.rank(),
        g.order(),
        symplectic.map_or("n/a".to_string(), |s| s.to_string())
    );
    text.push_str("conjugacy classes:\n");
    for members in conjugacy_classes(&g) {
        let rep = &g.elements()[members[0]];
        let det = rep.minus_identity().det();
        let locus = fixed_locus(rep);
        let order = stratasheaf::torusquot::element_order(rep);
        classes.push(json!({
            "representative": int_rows(rep),
            "size": members.len(),
            "element_order": order,
            "det_g_minus_identity": det.to_string(),
            "fixed_point_count": locus.is_finite().then(|| locus.torsion_reps.len().to_string()),
            "component_count": locus.torsion_reps.len(),
            "subtorus_dimension": locus.subtorus_basis.len(),
            "torsion_points": locus.torsion_reps.iter().map(point_json).collect::<Vec<_>>(),
        }));
        let fixed = if locus.is_finite() {
            format!("{} fixed points", locus.torsion_reps.len())
        } else {
            format!(
                "fixed subtorus of dimension {} with {} component(s)",
                locus.subtorus_basis.len(),
                locus.torsion_reps.len()
            )
        };
        writeln!(text, "  order {order} x{}: det(g-I) = {det}, {fixed}", members.len()).unwrap();
    }
    let report = singular_orbits(&g);
    if report.is_partial() {
        warnings.push(format!(
            "{} element(s) fix positive-dimensional subtori; orbit analysis covers isolated points only",
            report.positive_dimensional.len()
        ));
    }
    text.push_str("singular orbits:\n");
    let orbits: Vec<Value> = report
        .orbits
        .iter()
        .map(|o| {
            writeln!(
                text,
                "  {} point(s) from {}, stabilizer order {}: {}",
                o.orbit.len(),
                o.orbit[0],
                o.stabilizer.order(),
                o.verdict
            )
            .unwrap();
            json!({
                "size": o.orbit.len(),
                "points": o.orbit.iter().map(point_json).collect::<Vec<_>>(),
                "stabilizer_order": o.stabilizer.order(),
                "stabilizer_generators": o.stabilizer.generators().iter().map(int_rows).collect::<Vec<_>>(),
                "verdict": o.verdict.to_string(),
            })
        })
        .collect();
    for w in &warnings {
        writeln!(text, "warning: {w}").unwrap();
    }
    let results = json!({
        "rank": g.rank(),
        "order": g.order(),
        "generators": g.generators().iter().map(int_rows).collect::<Vec<_>>(),
        "symplectic": symplectic,
        "conjugacy_classes": classes,
        "orbits": orbits,
        "partial": report.is_partial(),
    });
    Ok(Outcome {
        code: EXIT_OK,
        report: envelope(
            "torus",
            Some(input),
            json!({"group_cap": cap}),
            digest("torus", &format!("group_cap={cap}"), &canonical),
            results,
            &warnings,
        ),
        text,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum CountRequest {
    Bellamy { ty: String, n: u64 },
    SymDuval { types: Vec<String>, n: u64 },
    WreathTorus { m: u32, n: u64 },
}

pub const COUNT_FAMILIES: &[&str] = &["bellamy", "sym-duval", "wreath-torus"];

fn parse_type(s: &str) -> Result<DuValType, CliError> {
    s.trim().parse::<DuValType>().map_err(CliError::from)
}

fn factor_json(t: DuValType, count: &BigUint) -> Value {
    json!({
        "type": t.to_string(),
        "coxeter_number": t.coxeter_number(),
        "exponents": t.exponents(),
        "count": count.to_string(),
    })
}

fn profile_count(profile: &SurfaceProfile, n: u64) -> Result<(BigUint, Vec<Value>), CliError> {
    let mut factors = Vec::new();
    for t in &profile.points {
        factors.push(factor_json(*t, &bellamy_count(*t, n)?));
    }
    Ok((sym_duval_count(profile, n)?, factors))
}

pub fn cmd_count(req: &CountRequest) -> Result<Outcome, CliError> {
    let (family, params, count, factors) = match req {
        CountRequest::Bellamy { ty, n } => {
            let t = parse_type(ty)?;
            let c = bellamy_count(t, *n)?;
            let f = vec![factor_json(t, &c)];
            ("bellamy", json!({"type": t.to_string(), "n": n}), c, f)
        }
        CountRequest::SymDuval { types, n } => {
            let points = types.iter().map(|s| parse_type(s)).collect::<Result<Vec<_>, _>>()?;
            let profile = SurfaceProfile::new(points);
            let (c, f) = profile_count(&profile, *n)?;
            ("sym-duval", json!({"types": profile.points.iter().map(ToString::to_string).collect::<Vec<_>>(), "n": n}), c, f)
        }
        CountRequest::WreathTorus { m, n } => {
            let profile = torus_surface_profile(*m)?;
            let (c, f) = profile_count(&profile, *n)?;
            ("wreath-torus", json!({"m": m, "n": n, "profile": profile.to_string()}), c, f)
        }
    };
    let mut text = format!("{family} {params}\ncount: {count}\n");
    for f in &factors {
        writeln!(text, "  {} -> {}", f["type"].as_str().unwrap_or_default(), f["count"].as_str().unwrap_or_default()).unwrap();
    }
    let canonical = serde_json::to_string(&params).expect("json");
    Ok(Outcome {
        code: EXIT_OK,
        report: envelope(
            "count",
            None,
            json!({"family": family}),
            digest("count", family, &canonical),
            json!({"family": family, "parameters": params, "count": count.to_string(), "factors": factors}),
            &[],
        ),
        text,
    })
}

/// Canonical JSON document of a model, for golden files.
pub fn cmd_export(input: &Input) -> Result<String, CliError> {
    Ok(load_model(input)?.1)
}
