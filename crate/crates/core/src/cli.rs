//! The JSON problem-file format, run orchestration, and output
//! rendering behind the `dsmt` binary.
//!
//! A problem file names a frame, a model, a rule, and at least two
//! sources. Masses are JSON numbers or set literals like
//! `"[0.1,0.3] U {0.5}"`. If any source carries a set literal, scalar
//! masses are promoted to degenerate points and the whole run is
//! set-valued.
//!
//! Two output formats exist: `table` is aligned, human-readable rows
//! with values rounded to 12 significant decimals; `machine` is a JSON
//! document whose mass literals reproduce every fused value exactly
//! when re-parsed. Both are byte-deterministic for a given input.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fusion::{
    dsm_classic_imprecise, dsm_classic_precise, dsm_hybrid_imprecise, dsm_hybrid_precise,
    CompletenessReport, FusedMass, FusionError, FusionResult, ImpreciseMass, PreciseMass,
};
use crate::hyper_power_set::{
    enumeration_order, Frame, HyperPowerSet, LatticeError, Proposition, SymbolStyle,
    DEFAULT_FRAME_CAP,
};
use crate::interval_sets::SetValue;
use crate::models::{HybridModel, ModelError};

#[derive(Debug, Error)]
pub enum ProblemError {
    #[error("malformed problem file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Lattice(#[from] LatticeError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Fusion(#[from] FusionError),
    #[error("source {source_name}, proposition '{prop}': {detail}")]
    BadMass {
        source_name: String,
        prop: String,
        detail: String,
    },
    #[error("unknown rule '{0}' (expected 'classic' or 'hybrid')")]
    BadRule(String),
    #[error("unknown model '{0}' (expected 'free', 'shafer', or {{\"empty\": [..]}})")]
    BadModel(String),
    #[error("unknown format '{0}' (expected 'table' or 'machine')")]
    BadFormat(String),
}

/// The on-disk problem schema. Unknown fields are rejected so typos
/// surface as input errors instead of silently changing the run.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemFile {
    pub frame: Vec<String>,
    #[serde(default)]
    pub rule: Option<String>,
    #[serde(default)]
    pub model: Option<ModelField>,
    pub sources: Vec<SourceFile>,
    #[serde(default)]
    pub options: OptionsFile,
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
pub enum ModelField {
    Named(String),
    Empty { empty: Vec<String> },
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceFile {
    #[serde(default)]
    pub name: Option<String>,
    pub masses: BTreeMap<String, MassLiteral>,
}

/// A mass entry: a plain number, or a string holding either a number
/// or a set literal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MassLiteral {
    Number(f64),
    Text(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OptionsFile {
    pub check_admissibility: bool,
    pub require_admissible: bool,
    pub format: Option<String>,
    pub max_frame: Option<usize>,
    pub ascii: bool,
}

/// Command-line settings layered over the file's `options`. Flags win;
/// boolean flags can only switch behaviour on.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub rule: Option<String>,
    pub model: Option<String>,
    pub empty: Vec<String>,
    pub check_admissibility: bool,
    pub require_admissible: bool,
    pub format: Option<String>,
    pub max_frame: Option<usize>,
    pub ascii: bool,
}

#[derive(Debug)]
pub struct RunReport {
    pub rendered: String,
    /// Set when admissibility was required but the result has none.
    pub admissibility_failed: bool,
}

#[derive(Clone, Copy, PartialEq)]
enum Rule {
    Classic,
    Hybrid,
}

#[derive(Clone, Copy, PartialEq)]
enum Format {
    Table,
    Machine,
}

enum MassValue {
    Scalar(f64),
    Set(SetValue),
}

/// Parses, fuses, and renders one problem. Errors map to exit code 2;
/// a report with `admissibility_failed` maps to exit code 1.
pub fn run(input: &str, overrides: &Overrides) -> Result<RunReport, ProblemError> {
    let file: ProblemFile = serde_json::from_str(input)?;

    let format = match overrides
        .format
        .as_deref()
        .or(file.options.format.as_deref())
        .unwrap_or("table")
    {
        "table" => Format::Table,
        "machine" => Format::Machine,
        other => return Err(ProblemError::BadFormat(other.to_string())),
    };
    let style = if overrides.ascii || file.options.ascii {
        SymbolStyle::Ascii
    } else {
        SymbolStyle::Unicode
    };
    let check_admissibility = overrides.check_admissibility
        || overrides.require_admissible
        || file.options.check_admissibility
        || file.options.require_admissible;
    let require_admissible = overrides.require_admissible || file.options.require_admissible;

    let frame = Frame::new(file.frame.clone())?;
    let cap = overrides
        .max_frame
        .or(file.options.max_frame)
        .unwrap_or(DEFAULT_FRAME_CAP);
    let hps = Arc::new(HyperPowerSet::enumerate_capped(&frame, cap)?);

    let model = resolve_model(&hps, &frame, file.model.as_ref(), overrides)?;
    let rule = match overrides
        .rule
        .as_deref()
        .or(file.rule.as_deref())
        .map(str::to_owned)
    {
        Some(r) => match r.as_str() {
            "classic" => Rule::Classic,
            "hybrid" => Rule::Hybrid,
            other => return Err(ProblemError::BadRule(other.to_string())),
        },
        // A model with constraints implies the hybrid rule.
        None if model.constraints().is_empty() => Rule::Classic,
        None => Rule::Hybrid,
    };

    let (names, parsed) = parse_sources(&frame, &file.sources)?;
    let any_set = parsed
        .iter()
        .any(|m| m.values().any(|v| matches!(v, MassValue::Set(_))));

    let mut result = if any_set {
        let sources: Vec<ImpreciseMass> = parsed
            .into_iter()
            .map(|m| {
                ImpreciseMass::from_pairs(m.into_iter().map(|(p, v)| {
                    let s = match v {
                        MassValue::Scalar(x) => SetValue::point(x),
                        MassValue::Set(s) => s,
                    };
                    (p, s)
                }))
            })
            .collect::<Result<_, _>>()?;
        match rule {
            Rule::Classic => dsm_classic_imprecise(&sources)?,
            Rule::Hybrid => dsm_hybrid_imprecise(&sources, &model)?,
        }
    } else {
        let sources: Vec<PreciseMass> = parsed
            .into_iter()
            .map(|m| {
                PreciseMass::from_pairs(m.into_iter().map(|(p, v)| {
                    let x = match v {
                        MassValue::Scalar(x) => x,
                        MassValue::Set(_) => unreachable!("no set masses on this path"),
                    };
                    (p, x)
                }))
            })
            .collect::<Result<_, _>>()?;
        match rule {
            Rule::Classic => dsm_classic_precise(&sources)?,
            Rule::Hybrid => dsm_hybrid_precise(&sources, &model)?,
        }
    };

    if check_admissibility {
        result.evaluate_admissibility();
    }
    let admissibility_failed = require_admissible
        && !result
            .admissibility
            .as_ref()
            .map(|r| r.admissible)
            .unwrap_or(false);

    let ctx = RenderContext {
        frame: &frame,
        model: &model,
        rule,
        style,
        names: &names,
        input_props: collect_input_props(&file.sources, &frame)?,
    };
    let rendered = match format {
        Format::Table => render_table(&ctx, &result),
        Format::Machine => render_machine(&ctx, &result),
    };
    Ok(RunReport {
        rendered,
        admissibility_failed,
    })
}

fn resolve_model(
    hps: &Arc<HyperPowerSet>,
    frame: &Frame,
    file_model: Option<&ModelField>,
    overrides: &Overrides,
) -> Result<HybridModel, ProblemError> {
    if !overrides.empty.is_empty() {
        let constraints = overrides
            .empty
            .iter()
            .map(|t| frame.parse_proposition(t))
            .collect::<Result<Vec<_>, _>>()?;
        return Ok(HybridModel::with_constraints(hps.clone(), constraints)?);
    }
    if let Some(name) = overrides.model.as_deref() {
        return named_model(hps, name);
    }
    match file_model {
        None => Ok(HybridModel::free(hps.clone())),
        Some(ModelField::Named(name)) => named_model(hps, name),
        Some(ModelField::Empty { empty }) => {
            let constraints = empty
                .iter()
                .map(|t| frame.parse_proposition(t))
                .collect::<Result<Vec<_>, _>>()?;
            Ok(HybridModel::with_constraints(hps.clone(), constraints)?)
        }
    }
}

fn named_model(hps: &Arc<HyperPowerSet>, name: &str) -> Result<HybridModel, ProblemError> {
    match name {
        "free" => Ok(HybridModel::free(hps.clone())),
        "shafer" => Ok(HybridModel::shafer(hps.clone())),
        other => Err(ProblemError::BadModel(other.to_string())),
    }
}

type ParsedSources = (Vec<String>, Vec<BTreeMap<Proposition, MassValue>>);

fn parse_sources(frame: &Frame, sources: &[SourceFile]) -> Result<ParsedSources, ProblemError> {
    let mut names = Vec::with_capacity(sources.len());
    let mut parsed = Vec::with_capacity(sources.len());
    for (i, src) in sources.iter().enumerate() {
        let name = src
            .name
            .clone()
            .unwrap_or_else(|| format!("m{}", i + 1));
        let mut map = BTreeMap::new();
        for (text, lit) in &src.masses {
            let bad = |detail: String| ProblemError::BadMass {
                source_name: name.clone(),
                prop: text.clone(),
                detail,
            };
            let prop = frame
                .parse_proposition(text)
                .map_err(|e| bad(e.to_string()))?;
            if prop.is_empty() {
                return Err(bad("mass on the empty proposition is not allowed".into()));
            }
            let value = match lit {
                MassLiteral::Number(x) => MassValue::Scalar(*x),
                MassLiteral::Text(t) => match t.trim().parse::<f64>() {
                    Ok(x) => MassValue::Scalar(x),
                    Err(_) => MassValue::Set(
                        t.parse::<SetValue>().map_err(|e| bad(e.to_string()))?,
                    ),
                },
            };
            match &value {
                MassValue::Scalar(x) if !(0.0..=1.0).contains(x) || !x.is_finite() => {
                    return Err(bad(format!("mass {x} is outside [0, 1]")));
                }
                MassValue::Set(s) if s.is_empty() => {
                    return Err(bad("the empty set is not a mass; use {0}".into()));
                }
                MassValue::Set(s) if s.inf() < 0.0 || s.sup() > 1.0 => {
                    return Err(bad(format!("mass set {s} is not inside [0, 1]")));
                }
                _ => {}
            }
            if map.insert(prop, value).is_some() {
                return Err(bad("duplicate proposition in one source".into()));
            }
        }
        names.push(name);
        parsed.push(map);
    }
    Ok((names, parsed))
}

fn collect_input_props(
    sources: &[SourceFile],
    frame: &Frame,
) -> Result<Vec<Proposition>, ProblemError> {
    let mut props: Vec<Proposition> = Vec::new();
    for src in sources {
        for text in src.masses.keys() {
            // Already validated in parse_sources.
            let p = frame.parse_proposition(text)?;
            if !props.contains(&p) {
                props.push(p);
            }
        }
    }
    props.sort_by(enumeration_order);
    Ok(props)
}

struct RenderContext<'a> {
    frame: &'a Frame,
    model: &'a HybridModel,
    rule: Rule,
    style: SymbolStyle,
    names: &'a [String],
    input_props: Vec<Proposition>,
}

/// Rounds to 12 decimal places and strips trailing zeros, so display
/// output is stable across reruns while sub-tolerance noise vanishes.
fn round12(v: f64) -> String {
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let s = format!("{v:.12}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" {
        "0".into()
    } else {
        s.to_string()
    }
}

/// Set literal for table output: rounded endpoints, and a degenerate
/// point set prints as the bare value.
fn render_set_rounded(s: &SetValue, style: SymbolStyle) -> String {
    if s.is_empty() {
        return "{}".into();
    }
    let pieces = s.pieces();
    if pieces.len() == 1 && pieces[0].is_point() {
        return round12(pieces[0].lo().value);
    }
    let sep = match style {
        SymbolStyle::Unicode => " ∪ ",
        SymbolStyle::Ascii => " U ",
    };
    pieces
        .iter()
        .map(|p| {
            if p.is_point() {
                format!("{{{}}}", round12(p.lo().value))
            } else {
                format!(
                    "{}{},{}{}",
                    if p.lo().open { '(' } else { '[' },
                    round12(p.lo().value),
                    round12(p.hi().value),
                    if p.hi().open { ')' } else { ']' },
                )
            }
        })
        .collect::<Vec<_>>()
        .join(sep)
}

fn forced_empty_marker(style: SymbolStyle) -> &'static str {
    match style {
        SymbolStyle::Unicode => " (≡∅)",
        SymbolStyle::Ascii => " (empty)",
    }
}

/// Rows: the fused support plus any input proposition the model forces
/// empty (those print a zero mass and an empty marker), in enumeration
/// order.
fn table_rows(ctx: &RenderContext, result: &FusionResult) -> Vec<(Proposition, String, bool)> {
    let mut props: Vec<Proposition> = match &result.fused {
        FusedMass::Precise(m) => m.entries().keys().cloned().collect(),
        FusedMass::Imprecise(m) => m.entries().keys().cloned().collect(),
    };
    if ctx.rule == Rule::Hybrid {
        for p in &ctx.input_props {
            if ctx.model.is_empty(p) && !props.contains(p) {
                props.push(p.clone());
            }
        }
    }
    props.sort_by(enumeration_order);
    props
        .into_iter()
        .map(|p| {
            let forced = ctx.rule == Rule::Hybrid && ctx.model.is_empty(&p);
            let mass = if forced {
                "0".to_string()
            } else {
                match &result.fused {
                    FusedMass::Precise(m) => round12(m.get(&p)),
                    FusedMass::Imprecise(m) => render_set_rounded(&m.get(&p), ctx.style),
                }
            };
            (p, mass, forced)
        })
        .collect()
}

fn render_table(ctx: &RenderContext, result: &FusionResult) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "frame: {}", ctx.frame.labels().join(" "));
    let _ = writeln!(
        out,
        "rule: {}",
        match ctx.rule {
            Rule::Classic => "classic",
            Rule::Hybrid => "hybrid",
        }
    );
    if ctx.model.constraints().is_empty() {
        let _ = writeln!(out, "model: free");
    } else {
        let rendered: Vec<String> = ctx
            .model
            .constraints()
            .iter()
            .map(|c| ctx.frame.format_proposition(c, ctx.style))
            .collect();
        let _ = writeln!(out, "model: empty = {}", rendered.join(", "));
    }
    let _ = writeln!(out, "sources: {}", ctx.names.join(" "));
    let _ = writeln!(out);

    let rows: Vec<(String, String)> = table_rows(ctx, result)
        .into_iter()
        .map(|(p, mass, forced)| {
            let mut label = ctx.frame.format_proposition(&p, ctx.style);
            if forced {
                label.push_str(forced_empty_marker(ctx.style));
            }
            (label, mass)
        })
        .collect();
    let width = rows
        .iter()
        .map(|(label, _)| label.chars().count())
        .max()
        .unwrap_or(0)
        .max("proposition".len());
    let pad = |s: &str| {
        let mut t = s.to_string();
        for _ in s.chars().count()..width {
            t.push(' ');
        }
        t
    };
    let _ = writeln!(out, "{}  mass", pad("proposition"));
    for (label, mass) in &rows {
        let _ = writeln!(out, "{}  {}", pad(label), mass);
    }
    let _ = writeln!(out);

    for ev in sorted_clamps(result) {
        let _ = writeln!(
            out,
            "clamped: {} from {} to {}",
            ctx.frame.format_proposition(&ev.proposition, ctx.style),
            render_set_rounded(&ev.before, ctx.style),
            render_set_rounded(&ev.after, ctx.style),
        );
    }
    match &result.completeness {
        CompletenessReport::Precise { total, class } => {
            let _ = writeln!(out, "total: {} ({})", round12(*total), class.label());
        }
        CompletenessReport::Imprecise {
            inf_total,
            inf_class,
            sup_total,
            sup_class,
        } => {
            let _ = writeln!(
                out,
                "total of lower bounds: {} ({})",
                round12(*inf_total),
                inf_class.label()
            );
            let _ = writeln!(
                out,
                "total of upper bounds: {} ({})",
                round12(*sup_total),
                sup_class.label()
            );
        }
    }

    if let Some(report) = &result.admissibility {
        if report.admissible {
            let _ = writeln!(out, "admissibility: admissible");
            if let Some(witness) = &report.witness {
                let mut entries: Vec<(&Proposition, &f64)> = witness.iter().collect();
                entries.sort_by(|a, b| enumeration_order(a.0, b.0));
                let parts: Vec<String> = entries
                    .iter()
                    .map(|(p, v)| {
                        format!("{}={}", ctx.frame.format_proposition(p, ctx.style), round12(**v))
                    })
                    .collect();
                let sum: f64 = witness.values().sum();
                let _ = writeln!(out, "witness: {} (sum {})", parts.join(", "), round12(sum));
            }
        } else {
            let _ = writeln!(
                out,
                "admissibility: inadmissible (no selection of scalar masses sums to 1)"
            );
        }
    }
    out
}

fn sorted_clamps(result: &FusionResult) -> Vec<&crate::fusion::ClampEvent> {
    let mut clamps: Vec<_> = result.clamps.iter().collect();
    clamps.sort_by(|a, b| enumeration_order(&a.proposition, &b.proposition));
    clamps
}

/// The machine document. Mass literals are full-precision: parsing
/// them back yields bit-identical scalars and set values.
#[derive(Debug, Serialize, Deserialize)]
pub struct MachineDoc {
    pub frame: Vec<String>,
    pub rule: String,
    pub model: MachineModel,
    pub sources: Vec<String>,
    pub fused: Vec<MachineRow>,
    pub completeness: MachineCompleteness,
    pub clamps: Vec<MachineClamp>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub admissibility: Option<MachineAdmissibility>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MachineModel {
    pub empty: Vec<String>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MachineRow {
    pub proposition: String,
    pub mass: MassLiteral,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MachineCompleteness {
    Precise {
        total: f64,
        class: String,
    },
    Imprecise {
        inf_total: f64,
        inf_class: String,
        sup_total: f64,
        sup_class: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MachineClamp {
    pub proposition: String,
    pub before: String,
    pub after: String,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MachineAdmissibility {
    pub admissible: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<Vec<MachineWitnessEntry>>,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct MachineWitnessEntry {
    pub proposition: String,
    pub value: f64,
}

impl MachineDoc {
    pub fn parse(text: &str) -> Result<MachineDoc, ProblemError> {
        Ok(serde_json::from_str(text)?)
    }
}

fn render_machine(ctx: &RenderContext, result: &FusionResult) -> String {
    // Machine output always uses ASCII operators so any consumer can
    // re-feed propositions to the parser without charset concerns.
    let ascii = SymbolStyle::Ascii;
    let mut fused_props: Vec<Proposition> = match &result.fused {
        FusedMass::Precise(m) => m.entries().keys().cloned().collect(),
        FusedMass::Imprecise(m) => m.entries().keys().cloned().collect(),
    };
    fused_props.sort_by(enumeration_order);
    let fused = fused_props
        .into_iter()
        .map(|p| {
            let mass = match &result.fused {
                FusedMass::Precise(m) => MassLiteral::Number(m.get(&p)),
                FusedMass::Imprecise(m) => MassLiteral::Text(m.get(&p).to_string()),
            };
            MachineRow {
                proposition: ctx.frame.format_proposition(&p, ascii),
                mass,
            }
        })
        .collect();
    let completeness = match &result.completeness {
        CompletenessReport::Precise { total, class } => MachineCompleteness::Precise {
            total: *total,
            class: class.label().to_string(),
        },
        CompletenessReport::Imprecise {
            inf_total,
            inf_class,
            sup_total,
            sup_class,
        } => MachineCompleteness::Imprecise {
            inf_total: *inf_total,
            inf_class: inf_class.label().to_string(),
            sup_total: *sup_total,
            sup_class: sup_class.label().to_string(),
        },
    };
    let clamps = sorted_clamps(result)
        .into_iter()
        .map(|ev| MachineClamp {
            proposition: ctx.frame.format_proposition(&ev.proposition, ascii),
            before: ev.before.to_string(),
            after: ev.after.to_string(),
        })
        .collect();
    let admissibility = result.admissibility.as_ref().map(|r| MachineAdmissibility {
        admissible: r.admissible,
        witness: r.witness.as_ref().map(|w| {
            let mut entries: Vec<(&Proposition, &f64)> = w.iter().collect();
            entries.sort_by(|a, b| enumeration_order(a.0, b.0));
            entries
                .into_iter()
                .map(|(p, v)| MachineWitnessEntry {
                    proposition: ctx.frame.format_proposition(p, ascii),
                    value: *v,
                })
                .collect()
        }),
    });
    let doc = MachineDoc {
        frame: ctx.frame.labels().to_vec(),
        rule: match ctx.rule {
            Rule::Classic => "classic",
            Rule::Hybrid => "hybrid",
        }
        .to_string(),
        model: MachineModel {
            empty: ctx
                .model
                .constraints()
                .iter()
                .map(|c| ctx.frame.format_proposition(c, ascii))
                .collect(),
        },
        sources: ctx.names.to_vec(),
        fused,
        completeness,
        clamps,
        admissibility,
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("doc serializes");
    text.push('\n');
    text
}
