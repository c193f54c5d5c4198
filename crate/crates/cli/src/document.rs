//! JSON model documents: parsing with located diagnostics and canonical
//! serialization.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use stratasheaf::arrangement::normalize;
use stratasheaf::exactmath::{format_rat, parse_int, parse_rat, IntMatrix, RatMatrix, RatVector};
use stratasheaf::stratspace::{
    Flags, Generalization, HasseArrow, MonodromyGenerator, Stalk, StratifiedModel, Stratum,
};

pub const FORMAT_VERSION: &str = "1";

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DocError {
    /// Malformed or ill-typed document.
    #[error("schema error at {path}: {message}")]
    Schema { path: String, message: String },
    /// Well-formed document describing an impossible model.
    #[error("invalid model at {path}: {message}")]
    Semantic { path: String, message: String },
}

fn schema(path: impl Into<String>, message: impl ToString) -> DocError {
    DocError::Schema {
        path: path.into(),
        message: message.to_string(),
    }
}

fn semantic(path: impl Into<String>, message: impl ToString) -> DocError {
    DocError::Semantic {
        path: path.into(),
        message: message.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub format_version: String,
    pub strata: Vec<StratumDoc>,
    #[serde(default)]
    pub arrows: Vec<ArrowDoc>,
    #[serde(default)]
    pub flags: FlagsDoc,
    #[serde(default)]
    pub metadata: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StratumDoc {
    pub id: String,
    pub dim: u32,
    pub stalk: StalkDoc,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub monodromy: Vec<MonodromyDoc>,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    pub basepoint_note: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StalkDoc {
    Explicit { labels: Vec<String> },
    Chambers { arrangement: ArrangementDoc },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrangementDoc {
    pub dimension: usize,
    pub hyperplanes: Vec<Vec<String>>,
    #[serde(default)]
    pub ambient: Vec<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonodromyDoc {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Vec<Vec<String>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub permutation: Option<BTreeMap<String, String>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArrowDoc {
    pub source: String,
    pub target: String,
    #[serde(default)]
    pub tag: u32,
    pub gen: GenDoc,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GenDoc {
    Explicit { map: BTreeMap<String, String> },
    Linear { matrix: Vec<Vec<String>> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlagsDoc {
    #[serde(default)]
    pub q_factorial_symplectic: bool,
    #[serde(default)]
    pub h2_units_trivial: bool,
}

pub fn rat_rows(m: &RatMatrix) -> Vec<Vec<String>> {
    (0..m.rows()).map(|r| m.row(r).iter().map(format_rat).collect()).collect()
}

pub fn int_rows(m: &IntMatrix) -> Vec<Vec<String>> {
    (0..m.rows()).map(|r| m.row(r).iter().map(ToString::to_string).collect()).collect()
}

fn parse_rat_row(path: &str, row: &[String]) -> Result<RatVector, DocError> {
    row.iter()
        .enumerate()
        .map(|(i, s)| parse_rat(s).map_err(|e| schema(format!("{path}[{i}]"), e)))
        .collect()
}

/// Rational matrix with `cols` columns; `cols` matters only when there are
/// no rows.
fn parse_rat_matrix(path: &str, rows: &[Vec<String>], cols: usize) -> Result<RatMatrix, DocError> {
    let parsed = rows
        .iter()
        .enumerate()
        .map(|(r, row)| parse_rat_row(&format!("{path}[{r}]"), row))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some((r, _)) = parsed.iter().enumerate().find(|(_, row)| row.len() != cols) {
        return Err(schema(
            format!("{path}[{r}]"),
            format!("expected {cols} entries, found {}", parsed[r].len()),
        ));
    }
    if parsed.is_empty() {
        return Ok(RatMatrix::zeros(0, cols));
    }
    RatMatrix::from_rows(&parsed).map_err(|e| schema(path, e))
}

pub fn parse_int_matrix(path: &str, rows: &[Vec<String>]) -> Result<IntMatrix, DocError> {
    let parsed = rows
        .iter()
        .enumerate()
        .map(|(r, row)| {
            row.iter()
                .enumerate()
                .map(|(c, s)| parse_int(s).map_err(|e| schema(format!("{path}[{r}][{c}]"), e)))
                .collect::<Result<Vec<_>, _>>()
        })
        .collect::<Result<Vec<_>, _>>()?;
    IntMatrix::from_rows(&parsed).map_err(|e| schema(path, e))
}

fn label_map(
    path: &str,
    map: &BTreeMap<String, String>,
    source: &Stalk,
    target: &Stalk,
) -> Result<Vec<usize>, DocError> {
    let mut table = Vec::with_capacity(source.len());
    for i in 0..source.len() {
        let label = source.label(i);
        let image = map
            .get(&label)
            .ok_or_else(|| semantic(path, format!("no image for element {label:?}")))?;
        let j = target
            .index_of_label(image)
            .ok_or_else(|| semantic(format!("{path}.{label}"), format!("unknown element {image:?}")))?;
        table.push(j);
    }
    if let Some(extra) = map.keys().find(|k| source.index_of_label(k).is_none()) {
        return Err(semantic(format!("{path}.{extra}"), "not an element of the source stalk"));
    }
    Ok(table)
}

fn table_map(table: &[usize], source: &Stalk, target: &Stalk) -> BTreeMap<String, String> {
    table
        .iter()
        .enumerate()
        .map(|(i, &j)| (source.label(i), target.label(j)))
        .collect()
}

fn json_error(e: serde_json::Error) -> DocError {
    let location = format!("line {} column {}", e.line(), e.column());
    let message = e.to_string();
    let message = message
        .strip_suffix(&format!(" at {location}"))
        .unwrap_or(&message)
        .to_string();
    schema(location, message)
}

impl ModelDocument {
    pub fn parse(text: &str) -> Result<Self, DocError> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(json_error)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(schema(
                "format_version",
                format!("unsupported version {:?}, expected {FORMAT_VERSION:?}", doc.format_version),
            ));
        }
        Ok(doc)
    }

    /// Pretty JSON with a trailing newline; fields in declaration order and
    /// maps sorted, so equal models give equal bytes.
    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn from_model(m: &StratifiedModel) -> Self {
        let strata = m
            .strata
            .iter()
            .map(|s| {
                let stalk = match &s.stalk {
                    Stalk::Explicit(labels) => StalkDoc::Explicit { labels: labels.clone() },
                    Stalk::Chambers(cs) => {
                        let a = cs.arrangement();
                        let ints = |v: &Vec<num_bigint::BigInt>| v.iter().map(ToString::to_string).collect();
                        StalkDoc::Chambers {
                            arrangement: ArrangementDoc {
                                dimension: a.dimension(),
                                hyperplanes: a.hyperplanes().iter().map(|h| ints(h.normal())).collect(),
                                ambient: a.ambient().halfspaces().iter().map(ints).collect(),
                            },
                        }
                    }
                };
                let monodromy = s
                    .monodromy
                    .iter()
                    .map(|g| MonodromyDoc {
                        matrix: g.matrix.as_ref().map(rat_rows),
                        permutation: g.permutation.as_ref().map(|p| table_map(p, &s.stalk, &s.stalk)),
                    })
                    .collect();
                StratumDoc {
                    id: s.id.clone(),
                    dim: s.dim,
                    stalk,
                    monodromy,
                    basepoint_note: s.basepoint_note.clone(),
                }
            })
            .collect();
        let arrows = m
            .arrows
            .iter()
            .map(|a| {
                let gen = match &a.gen {
                    Generalization::Explicit(table) => {
                        let src = &m.stratum(&a.source).expect("valid model").stalk;
                        let tgt = &m.stratum(&a.target).expect("valid model").stalk;
                        GenDoc::Explicit {
                            map: table_map(table, src, tgt),
                        }
                    }
                    Generalization::Linear(map) => GenDoc::Linear { matrix: rat_rows(map) },
                };
                ArrowDoc {
                    source: a.source.clone(),
                    target: a.target.clone(),
                    tag: a.tag,
                    gen,
                }
            })
            .collect();
        ModelDocument {
            format_version: FORMAT_VERSION.to_string(),
            strata,
            arrows,
            flags: FlagsDoc {
                q_factorial_symplectic: m.flags.q_factorial_symplectic,
                h2_units_trivial: m.flags.h2_units_trivial,
            },
            metadata: m.metadata.clone(),
        }
    }

    /// Builds the model; structural checks beyond what is needed to resolve
    /// labels are left to validation.
    pub fn to_model(&self) -> Result<StratifiedModel, DocError> {
        let mut strata: Vec<Stratum> = Vec::with_capacity(self.strata.len());
        for (i, sd) in self.strata.iter().enumerate() {
            let path = format!("strata[{i}]");
            let stalk = match &sd.stalk {
                StalkDoc::Explicit { labels } => {
                    for (k, l) in labels.iter().enumerate() {
                        if labels[..k].contains(l) {
                            return Err(schema(format!("{path}.stalk.labels[{k}]"), format!("duplicate label {l:?}")));
                        }
                    }
                    Stalk::Explicit(labels.clone())
                }
                StalkDoc::Chambers { arrangement } => {
                    let apath = format!("{path}.stalk.arrangement");
                    let rows = |name: &str, rows: &[Vec<String>]| -> Result<Vec<RatVector>, DocError> {
                        rows.iter()
                            .enumerate()
                            .map(|(r, row)| parse_rat_row(&format!("{apath}.{name}[{r}]"), row))
                            .collect()
                    };
                    let normals = rows("hyperplanes", &arrangement.hyperplanes)?;
                    let cone = rows("ambient", &arrangement.ambient)?;
                    let a = normalize(arrangement.dimension, &normals, &cone).map_err(|e| schema(&apath, e))?;
                    Stalk::chambers(&a).map_err(|e| semantic(&apath, e))?
                }
            };
            let d = stalk.picard_dim();
            let mut monodromy = Vec::with_capacity(sd.monodromy.len());
            for (g, md) in sd.monodromy.iter().enumerate() {
                let gpath = format!("{path}.monodromy[{g}]");
                let matrix = match &md.matrix {
                    Some(rows) => {
                        if rows.len() != d {
                            return Err(schema(
                                format!("{gpath}.matrix"),
                                format!("expected {d} rows, found {}", rows.len()),
                            ));
                        }
                        Some(parse_rat_matrix(&format!("{gpath}.matrix"), rows, d)?)
                    }
                    None => None,
                };
                let permutation = match &md.permutation {
                    Some(map) => Some(label_map(&format!("{gpath}.permutation"), map, &stalk, &stalk)?),
                    None => None,
                };
                monodromy.push(MonodromyGenerator { matrix, permutation });
            }
            strata.push(Stratum {
                id: sd.id.clone(),
                dim: sd.dim,
                stalk,
                monodromy,
                basepoint_note: sd.basepoint_note.clone(),
            });
        }
        let find = |path: &str, id: &str| -> Result<&Stratum, DocError> {
            strata
                .iter()
                .find(|s| s.id == id)
                .ok_or_else(|| semantic(path, format!("unknown stratum {id:?}")))
        };
        let mut arrows = Vec::with_capacity(self.arrows.len());
        for (k, ad) in self.arrows.iter().enumerate() {
            let path = format!("arrows[{k}]");
            let src = find(&format!("{path}.source"), &ad.source)?;
            let tgt = find(&format!("{path}.target"), &ad.target)?;
            let gen = match &ad.gen {
                GenDoc::Explicit { map } => {
                    Generalization::Explicit(label_map(&format!("{path}.gen.map"), map, &src.stalk, &tgt.stalk)?)
                }
                GenDoc::Linear { matrix } => {
                    let cols = matrix.first().map_or(src.stalk.picard_dim(), Vec::len);
                    Generalization::Linear(parse_rat_matrix(&format!("{path}.gen.matrix"), matrix, cols)?)
                }
            };
            arrows.push(HasseArrow {
                source: ad.source.clone(),
                target: ad.target.clone(),
                tag: ad.tag,
                gen,
            });
        }
        Ok(StratifiedModel {
            strata,
            arrows,
            flags: Flags {
                q_factorial_symplectic: self.flags.q_factorial_symplectic,
                h2_units_trivial: self.flags.h2_units_trivial,
            },
            metadata: self.metadata.clone(),
        })
    }
}

/// Generators of a finite matrix group acting on a torus.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupDocument {
    pub format_version: String,
    pub rank: usize,
    pub generators: Vec<Vec<Vec<String>>>,
}

impl GroupDocument {
    pub fn parse(text: &str) -> Result<Self, DocError> {
        let doc: GroupDocument = serde_json::from_str(text).map_err(json_error)?;
        if doc.format_version != FORMAT_VERSION {
            return Err(schema(
                "format_version",
                format!("unsupported version {:?}, expected {FORMAT_VERSION:?}", doc.format_version),
            ));
        }
        Ok(doc)
    }

    pub fn from_generators(rank: usize, gens: &[IntMatrix]) -> Self {
        GroupDocument {
            format_version: FORMAT_VERSION.to_string(),
            rank,
            generators: gens.iter().map(int_rows).collect(),
        }
    }

    pub fn to_canonical_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("documents serialize");
        s.push('\n');
        s
    }

    pub fn generators(&self) -> Result<Vec<IntMatrix>, DocError> {
        self.generators
            .iter()
            .enumerate()
            .map(|(i, rows)| {
                let path = format!("generators[{i}]");
                let m = parse_int_matrix(&path, rows)?;
                if m.rows() != self.rank || m.cols() != self.rank {
                    return Err(schema(path, format!("expected a {0}x{0} matrix", self.rank)));
                }
                Ok(m)
            })
            .collect()
    }
}
