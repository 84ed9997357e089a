//! Run configuration files: flat key-value text with sections.
//!
//! Grammar, line by line:
//!
//! ```text
//! # comment (whole line; no inline comments)
//! [section]
//! key = value
//! ```
//!
//! Lists are comma-separated. Unknown sections, unknown keys, duplicate
//! sections and duplicate keys are all rejected before anything runs.
//!
//! Sections:
//!
//! ```text
//! [data]       scenario = fig2 | gauss-mixture-minority,  or  csv = PATH
//!              minority_frac / separation / minority_scale (minority scenario)
//!              jitter = true|false
//! [split]      n_mem, n_ref, n_test, n_syn, n_holdout
//! [generator]  kind = additive_noise | smoothed_bootstrap | gaussian_mle
//!                     | closed_form_scenario (fig2 only)
//!              sigma (additive_noise), bandwidth (smoothed_bootstrap)
//! [density]    backend = kde | flow | closed_form
//!              bandwidth (kde);  flows, layers, hidden, epochs, batch, lr (flow)
//! [attackers]  list = domias, pg_only, ...
//! [attacker.X] per-attacker knobs; density attackers may override the backend
//! [subgroup]   column, equals
//! [utility]    enabled = true|false
//! [sweep]      knob = sigma | bandwidth | n_mem | n_ref | n_syn
//!              values = 0.1, 0.5, 2.0
//! [shift]      column, equals, p_group0 = 0, 0.4, 0.8
//! ```
//!
//! The sweep and shift sections describe grids; which of them a run uses is
//! the subcommand's call, checked in `plan_for`.

use std::collections::BTreeMap;

use synth_audit_core::attacks::{ClassifierConfig, PriorFeature, PriorSpec, RadiusConfig};
use synth_audit_core::audit::{
    AttackerSpec, AuditSpec, DataSource, DensityBackend, FlowSettings, MinorityShape, SplitSizes,
    SweepKnob,
};
use synth_audit_core::data::GroupPredicate;
use synth_audit_core::generators::GeneratorSpec;
use synth_audit_core::{AuditError, Result};

fn bad(msg: String) -> AuditError {
    AuditError::Config(msg)
}

/// One parsed `[section]` with duplicate keys already rejected. Keys are
/// consumed by `take*`; whatever is left when `finish` runs is unknown.
struct Section {
    name: String,
    line: usize,
    entries: BTreeMap<String, String>,
}

impl Section {
    fn take(&mut self, key: &str) -> Option<String> {
        self.entries.remove(key)
    }

    fn require(&mut self, key: &str) -> Result<String> {
        self.take(key)
            .ok_or_else(|| bad(format!("[{}] is missing the `{key}` key", self.name)))
    }

    fn take_f64(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|v| parse_f64(&self.name, key, &v)).transpose()
    }

    fn take_usize(&mut self, key: &str) -> Result<Option<usize>> {
        match self.take(key) {
            None => Ok(None),
            Some(v) => v
                .parse::<usize>()
                .map(Some)
                .map_err(|_| bad(format!("[{}] {key} must be a nonnegative integer, got `{v}`", self.name))),
        }
    }

    fn take_bool(&mut self, key: &str) -> Result<Option<bool>> {
        match self.take(key).as_deref() {
            None => Ok(None),
            Some("true") => Ok(Some(true)),
            Some("false") => Ok(Some(false)),
            Some(v) => Err(bad(format!("[{}] {key} must be true or false, got `{v}`", self.name))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_keys().next() {
            None => Ok(()),
            Some(key) => Err(bad(format!("unknown key `{key}` in [{}]", self.name))),
        }
    }
}

fn parse_f64(section: &str, key: &str, v: &str) -> Result<f64> {
    v.parse::<f64>()
        .map_err(|_| bad(format!("[{section}] {key} must be a number, got `{v}`")))
}

fn parse_f64_list(section: &str, key: &str, v: &str) -> Result<Vec<f64>> {
    let items: Vec<&str> = v.split(',').map(str::trim).filter(|s| !s.is_empty()).collect();
    if items.is_empty() {
        return Err(bad(format!("[{section}] {key} must list at least one number")));
    }
    items.iter().map(|s| parse_f64(section, key, s)).collect()
}

/// Parse the raw text into sections, catching duplicates and malformed
/// lines. Keys outside any section are rejected.
fn parse_sections(text: &str) -> Result<Vec<Section>> {
    let mut sections: Vec<Section> = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[') {
            let name = name
                .strip_suffix(']')
                .ok_or_else(|| bad(format!("line {line_no}: unclosed section header `{line}`")))?
                .trim()
                .to_string();
            if name.is_empty() {
                return Err(bad(format!("line {line_no}: empty section name")));
            }
            if sections.iter().any(|s| s.name == name) {
                return Err(bad(format!("line {line_no}: duplicate section [{name}]")));
            }
            sections.push(Section { name, line: line_no, entries: BTreeMap::new() });
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| bad(format!("line {line_no}: expected `key = value`, got `{line}`")))?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        if key.is_empty() {
            return Err(bad(format!("line {line_no}: empty key")));
        }
        let section = sections
            .last_mut()
            .ok_or_else(|| bad(format!("line {line_no}: `{key}` appears before any [section]")))?;
        if section.entries.insert(key.clone(), value).is_some() {
            return Err(bad(format!(
                "line {line_no}: duplicate key `{key}` in [{}]",
                section.name
            )));
        }
    }
    Ok(sections)
}

/// Grid over the one swept knob.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepPlan {
    pub knob: SweepKnob,
    pub values: Vec<f64>,
}

/// Group predicate plus the p_group0 grid from the [shift] section.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftPlan {
    pub group: GroupPredicate,
    pub grid: Vec<f64>,
}

/// Everything a config file can say, before the subcommand decides which
/// grid (if any) it will walk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub spec: AuditSpec,
    pub sweep: Option<SweepPlan>,
    pub shift: Option<ShiftPlan>,
}

pub fn parse_config(text: &str) -> Result<RunPlan> {
    let mut sections = parse_sections(text)?;

    // [attackers] first: per-attacker sections are only legal for listed
    // names, and the list fixes the report order.
    let names: Vec<String> = {
        let mut sec = take_section(&mut sections, "attackers")?
            .ok_or_else(|| bad("missing [attackers] section".into()))?;
        let list = sec.require("list")?;
        sec.finish()?;
        list.split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::to_string)
            .collect()
    };
    if names.is_empty() {
        return Err(bad("[attackers] list is empty".into()));
    }

    let (source, jitter) = {
        let mut sec = take_section(&mut sections, "data")?
            .ok_or_else(|| bad("missing [data] section".into()))?;
        let scenario = sec.take("scenario");
        let csv = sec.take("csv");
        let jitter = sec.take_bool("jitter")?.unwrap_or(false);
        let source = match (scenario.as_deref(), csv) {
            (Some("fig2"), None) => DataSource::Fig2,
            (Some("gauss-mixture-minority"), None) => {
                let mut shape = MinorityShape::default();
                if let Some(v) = sec.take_f64("minority_frac")? {
                    shape.minority_frac = v;
                }
                if let Some(v) = sec.take_f64("separation")? {
                    shape.separation = v;
                }
                if let Some(v) = sec.take_f64("minority_scale")? {
                    shape.minority_scale = v;
                }
                DataSource::MixtureMinority(shape)
            }
            (Some(other), None) => {
                return Err(bad(format!(
                    "unknown scenario `{other}`; expected fig2 or gauss-mixture-minority"
                )))
            }
            (None, Some(path)) => DataSource::Csv { path },
            (None, None) => return Err(bad("[data] needs either `scenario` or `csv`".into())),
            (Some(_), Some(_)) => {
                return Err(bad("[data] takes `scenario` or `csv`, not both".into()))
            }
        };
        sec.finish()?;
        (source, jitter)
    };

    let mut sizes = SplitSizes::default();
    if let Some(mut sec) = take_section(&mut sections, "split")? {
        if let Some(v) = sec.take_usize("n_mem")? {
            sizes.n_mem = v;
        }
        if let Some(v) = sec.take_usize("n_ref")? {
            sizes.n_ref = v;
        }
        if let Some(v) = sec.take_usize("n_test")? {
            sizes.n_test = v;
        }
        if let Some(v) = sec.take_usize("n_syn")? {
            sizes.n_syn = v;
        }
        if let Some(v) = sec.take_usize("n_holdout")? {
            sizes.n_holdout = v;
        }
        sec.finish()?;
    }

    let generator = parse_generator(&mut sections, &source)?;
    let density = match take_section(&mut sections, "density")? {
        Some(mut sec) => {
            let backend = parse_backend(&mut sec)?;
            sec.finish()?;
            backend
        }
        None => DensityBackend::Kde { bandwidth: None },
    };

    let mut attackers = Vec::with_capacity(names.len());
    for name in &names {
        let sec = take_section(&mut sections, &format!("attacker.{name}"))?;
        attackers.push(parse_attacker(name, sec)?);
    }

    let subgroup = match take_section(&mut sections, "subgroup")? {
        Some(mut sec) => {
            let column = sec.require("column")?;
            let equals = parse_f64("subgroup", "equals", &sec.require("equals")?)?;
            sec.finish()?;
            Some(GroupPredicate { column, equals })
        }
        None => None,
    };

    let utility = match take_section(&mut sections, "utility")? {
        Some(mut sec) => {
            let enabled = sec.take_bool("enabled")?.unwrap_or(true);
            sec.finish()?;
            enabled
        }
        None => false,
    };

    let sweep = match take_section(&mut sections, "sweep")? {
        Some(mut sec) => {
            let knob = SweepKnob::parse(&sec.require("knob")?)?;
            let values = parse_f64_list("sweep", "values", &sec.require("values")?)?;
            sec.finish()?;
            Some(SweepPlan { knob, values })
        }
        None => None,
    };

    let shift = match take_section(&mut sections, "shift")? {
        Some(mut sec) => {
            let column = sec.require("column")?;
            let equals = parse_f64("shift", "equals", &sec.require("equals")?)?;
            let grid = parse_f64_list("shift", "p_group0", &sec.require("p_group0")?)?;
            sec.finish()?;
            Some(ShiftPlan { group: GroupPredicate { column, equals }, grid })
        }
        None => None,
    };

    if let Some(sec) = sections.first() {
        return Err(bad(format!("line {}: unknown section [{}]", sec.line, sec.name)));
    }

    let mut spec = AuditSpec::new(source, generator);
    spec.sizes = sizes;
    spec.jitter = jitter;
    spec.density = density;
    spec.attackers = attackers;
    spec.subgroup = subgroup;
    spec.utility = utility;
    Ok(RunPlan { spec, sweep, shift })
}

fn take_section(sections: &mut Vec<Section>, name: &str) -> Result<Option<Section>> {
    Ok(sections
        .iter()
        .position(|s| s.name == name)
        .map(|i| sections.remove(i)))
}

fn parse_generator(
    sections: &mut Vec<Section>,
    source: &DataSource,
) -> Result<Option<GeneratorSpec>> {
    let sec = take_section(sections, "generator")?;
    let is_fig2 = matches!(source, DataSource::Fig2);
    let mut sec = match sec {
        Some(s) => s,
        None if is_fig2 => return Ok(None),
        None => return Err(bad("missing [generator] section".into())),
    };
    let kind = sec.require("kind")?;
    let spec = match kind.as_str() {
        "closed_form_scenario" => {
            if !is_fig2 {
                return Err(bad(
                    "generator kind closed_form_scenario needs scenario = fig2".into(),
                ));
            }
            None
        }
        "additive_noise" => {
            let sigma = parse_f64("generator", "sigma", &sec.require("sigma")?)?;
            Some(GeneratorSpec::AdditiveNoise { sigma })
        }
        "smoothed_bootstrap" => {
            let bandwidth = sec.take_f64("bandwidth")?;
            Some(GeneratorSpec::SmoothedBootstrap { bandwidth })
        }
        "gaussian_mle" => Some(GeneratorSpec::GaussianMle),
        other => {
            return Err(bad(format!(
                "unknown generator kind `{other}`; expected additive_noise, \
                 smoothed_bootstrap, gaussian_mle or closed_form_scenario"
            )))
        }
    };
    sec.finish()?;
    Ok(spec)
}

fn parse_backend(sec: &mut Section) -> Result<DensityBackend> {
    let backend = sec.require("backend")?;
    match backend.as_str() {
        "kde" => Ok(DensityBackend::Kde { bandwidth: sec.take_f64("bandwidth")? }),
        "flow" => {
            let mut s = FlowSettings::default();
            if let Some(v) = sec.take_usize("flows")? {
                s.flows = v;
            }
            if let Some(v) = sec.take_usize("layers")? {
                s.layers = v;
            }
            if let Some(v) = sec.take_usize("hidden")? {
                s.hidden = v;
            }
            if let Some(v) = sec.take_usize("epochs")? {
                s.epochs = v;
            }
            if let Some(v) = sec.take_usize("batch")? {
                s.batch = v;
            }
            if let Some(v) = sec.take_f64("lr")? {
                s.lr = v;
            }
            Ok(DensityBackend::Flow(s))
        }
        "closed_form" => Ok(DensityBackend::ClosedForm),
        other => Err(bad(format!(
            "unknown density backend `{other}`; expected kde, flow or closed_form"
        ))),
    }
}

/// Per-attacker knobs. A missing section means defaults everywhere.
fn parse_attacker(name: &str, sec: Option<Section>) -> Result<AttackerSpec> {
    let section_name = format!("attacker.{name}");
    let mut sec = sec.unwrap_or(Section {
        name: section_name,
        line: 0,
        entries: BTreeMap::new(),
    });
    let spec = match name {
        "domias" => AttackerSpec::Domias { density: parse_density_override(&mut sec)? },
        "pg_only" => AttackerSpec::PgOnly { density: parse_density_override(&mut sec)? },
        "gaussian_prior_domias" => AttackerSpec::GaussianPrior {
            density: parse_density_override(&mut sec)?,
            prior: parse_prior(&mut sec)?,
        },
        "logan0" => AttackerSpec::Logan0(parse_classifier(&mut sec)?),
        "logan_d1" => AttackerSpec::LoganD1(parse_classifier(&mut sec)?),
        "mc_score" => {
            let epsilon = sec.take_f64("epsilon")?;
            let pca_components = sec.take_usize("pca_components")?;
            AttackerSpec::McScore(RadiusConfig { epsilon, pca_components })
        }
        "ganleaks0" => AttackerSpec::Ganleaks0 { k: sec.take_usize("k")? },
        "ganleaks_cal" => AttackerSpec::GanleaksCal { k: sec.take_usize("k")? },
        other => {
            return Err(bad(format!(
                "unknown attacker `{other}`; expected domias, pg_only, \
                 gaussian_prior_domias, logan0, logan_d1, mc_score, ganleaks0 or ganleaks_cal"
            )))
        }
    };
    sec.finish()?;
    Ok(spec)
}

fn parse_density_override(sec: &mut Section) -> Result<Option<DensityBackend>> {
    if sec.entries.contains_key("backend") {
        Ok(Some(parse_backend(sec)?))
    } else {
        Ok(None)
    }
}

/// `prior = standard` or a comma list of `feature:mean:std` triples.
fn parse_prior(sec: &mut Section) -> Result<Option<PriorSpec>> {
    let raw = match sec.take("prior") {
        None => return Ok(None),
        Some(v) => v,
    };
    if raw == "standard" {
        return Ok(None);
    }
    let mut features = Vec::new();
    for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let parts: Vec<&str> = item.split(':').collect();
        if parts.len() != 3 {
            return Err(bad(format!(
                "prior entry `{item}` must be feature:mean:std or the word standard"
            )));
        }
        features.push(PriorFeature {
            name: parts[0].trim().to_string(),
            mean: parse_f64(&sec.name, "prior mean", parts[1].trim())?,
            std: parse_f64(&sec.name, "prior std", parts[2].trim())?,
        });
    }
    Ok(Some(PriorSpec { features }))
}

fn parse_classifier(sec: &mut Section) -> Result<ClassifierConfig> {
    let mut cfg = ClassifierConfig::default();
    if let Some(v) = sec.take_usize("hidden")? {
        cfg.hidden = v;
    }
    if let Some(v) = sec.take_usize("epochs")? {
        cfg.train.epochs = v;
    }
    if let Some(v) = sec.take_usize("batch")? {
        cfg.train.batch = v;
    }
    if let Some(v) = sec.take_f64("lr")? {
        cfg.train.lr = v;
    }
    Ok(cfg)
}

/// What one subcommand will actually execute: the base spec per grid point,
/// all validated up front so nothing runs on a bad config.
#[derive(Debug, Clone, PartialEq)]
pub enum Execution {
    /// Plain audit; the spec may carry a fixed shift level.
    Audit(Box<AuditSpec>),
    /// One spec per grid value, in grid order, under the knob's name.
    Grid { knob_name: String, points: Vec<(f64, AuditSpec)> },
}

pub fn plan_for(command: &str, plan: &RunPlan) -> Result<Execution> {
    match command {
        "audit" => {
            if plan.sweep.is_some() {
                return Err(bad("audit does not take a [sweep] section".into()));
            }
            let spec = fix_shift(&plan.spec, &plan.shift)?;
            spec.validate()?;
            Ok(Execution::Audit(Box::new(spec)))
        }
        "sweep" => {
            let sweep = plan
                .sweep
                .as_ref()
                .ok_or_else(|| bad("sweep needs a [sweep] section".into()))?;
            let base = fix_shift(&plan.spec, &plan.shift)?;
            let points = sweep
                .values
                .iter()
                .map(|&v| {
                    synth_audit_core::audit::apply_knob(&base, sweep.knob, v).map(|s| (v, s))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Execution::Grid { knob_name: sweep.knob.name().to_string(), points })
        }
        "shift" => {
            if plan.sweep.is_some() {
                return Err(bad("shift does not take a [sweep] section".into()));
            }
            let shift = plan
                .shift
                .as_ref()
                .ok_or_else(|| bad("shift needs a [shift] section".into()))?;
            let points = shift
                .grid
                .iter()
                .map(|&p| {
                    let spec = synth_audit_core::audit::with_shift(
                        &plan.spec,
                        shift.group.clone(),
                        p,
                    );
                    spec.validate().map(|()| (p, spec))
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(Execution::Grid { knob_name: "p_group0".to_string(), points })
        }
        other => Err(bad(format!("unknown command `{other}`"))),
    }
}

/// Audit and sweep accept a [shift] section only as a single fixed level;
/// grids belong to the shift subcommand.
fn fix_shift(spec: &AuditSpec, shift: &Option<ShiftPlan>) -> Result<AuditSpec> {
    match shift {
        None => Ok(spec.clone()),
        Some(plan) if plan.grid.len() == 1 => Ok(synth_audit_core::audit::with_shift(
            spec,
            plan.group.clone(),
            plan.grid[0],
        )),
        Some(plan) => Err(bad(format!(
            "a p_group0 grid of {} values only makes sense under the shift command",
            plan.grid.len()
        ))),
    }
}
