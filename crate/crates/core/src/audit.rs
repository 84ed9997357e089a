//! One audit, end to end: build a pool, split it, train the toy generator
//! on the members, fit densities, run every configured attacker against the
//! test rows, and measure the results.
//!
//! Seed discipline: every pipeline stage owns a child stream of the run
//! seed (the constants below), and attackers get per-index children of the
//! attack stream. Toggling utility or appending an attacker therefore never
//! changes what an existing stage draws.

use crate::attacks::{
    domias, ganleaks0, ganleaks_cal, gaussian_prior_domias, logan0, logan_d1, mc_score, pg_only,
    AttackScores, ClassifierConfig, PriorSpec, RadiusConfig,
};
use crate::data::{
    load_csv, make_shifted_split, make_split_and_holdout, standardize_fit_apply, subgroup_mask,
    Dataset, ExperimentSplit, GroupPredicate, GroupedSizes, SchemaHint,
};
use crate::density::{
    log_densities, FlowConfig, FlowModel, GaussianMixture, KdeModel,
};
use crate::error::{AuditError, Result};
use crate::eval::{
    accuracy_at_median, aggregate_attackers, auc, precision_quantile_curve, subgroup_report,
    summarize_utility, wasserstein_utility, AttackerMetrics, AuditReport, ConfigEntry, SeedRun,
    DEFAULT_QUANTILES, REPORT_FORMAT_VERSION,
};
use crate::generators::{
    fig2_generator_density, gauss_mixture_minority, generate, GeneratorSpec, MinorityScenario,
    GROUP_COLUMN,
};
use crate::numcore::{RealMatrix, SeededRng};

const STREAM_SPLIT: u64 = 0;
const STREAM_GENERATOR: u64 = 1;
const STREAM_DENSITY: u64 = 2;
const STREAM_ATTACKS: u64 = 3;
const STREAM_UTILITY: u64 = 4;
const STREAM_POOL: u64 = 5;

/// Additive-noise sigma grid for frontier sweeps when the config does not
/// give one: spans memorization (low) to heavy smoothing (high).
pub const DEFAULT_NOISE_GRID: [f64; 12] =
    [0.7, 0.9, 1.1, 1.3, 1.5, 1.7, 1.9, 2.3, 2.5, 2.9, 3.5, 3.9];

/// Minority-scenario shape without the row count, which the engine sizes
/// from the split itself.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MinorityShape {
    pub minority_frac: f64,
    pub separation: f64,
    pub minority_scale: f64,
}

impl Default for MinorityShape {
    fn default() -> Self {
        MinorityShape {
            minority_frac: 0.1,
            separation: 3.0,
            minority_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DataSource {
    /// 1-D bimodal illustration with known closed-form densities.
    Fig2,
    /// Two-cluster population with a latent minority group column.
    MixtureMinority(MinorityShape),
    /// Arbitrary tabular data from disk.
    Csv { path: String },
}

impl DataSource {
    fn kind(&self) -> &'static str {
        match self {
            DataSource::Fig2 => "fig2",
            DataSource::MixtureMinority(_) => "gauss_mixture_minority",
            DataSource::Csv { .. } => "csv",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSizes {
    pub n_mem: usize,
    pub n_ref: usize,
    pub n_test: usize,
    pub n_syn: usize,
    pub n_holdout: usize,
}

impl Default for SplitSizes {
    fn default() -> Self {
        SplitSizes {
            n_mem: 100,
            n_ref: 2000,
            n_test: 200,
            n_syn: 1000,
            n_holdout: 0,
        }
    }
}

/// Flow hyperparameters minus the data dimension, which is only known once
/// the pool exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FlowSettings {
    pub flows: usize,
    pub layers: usize,
    pub hidden: usize,
    pub epochs: usize,
    pub batch: usize,
    pub lr: f64,
}

impl Default for FlowSettings {
    fn default() -> Self {
        let c = FlowConfig::for_dim(1);
        FlowSettings {
            flows: c.flows,
            layers: c.layers,
            hidden: c.hidden,
            epochs: c.epochs,
            batch: c.batch,
            lr: c.lr,
        }
    }
}

impl FlowSettings {
    fn to_config(self, dim: usize) -> FlowConfig {
        FlowConfig {
            dim,
            flows: self.flows,
            layers: self.layers,
            hidden: self.hidden,
            epochs: self.epochs,
            batch: self.batch,
            lr: self.lr,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DensityBackend {
    /// Gaussian KDE; bandwidth defaults to the Scott rule.
    Kde { bandwidth: Option<f64> },
    Flow(FlowSettings),
    /// Analytic scenario densities; valid only with the fig2 source.
    ClosedForm,
}

impl DensityBackend {
    pub fn label(&self) -> &'static str {
        match self {
            DensityBackend::Kde { .. } => "kde",
            DensityBackend::Flow(_) => "flow",
            DensityBackend::ClosedForm => "closed_form",
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            DensityBackend::Kde { bandwidth: Some(h) } if !(h.is_finite() && *h > 0.0) => {
                Err(AuditError::Config(format!("kde bandwidth must be positive, got {h}")))
            }
            DensityBackend::Flow(s) => {
                // Reuse the flow's own parameter checks at config time.
                s.to_config(1)
                    .validate()
                    .map_err(|e| AuditError::Config(format!("flow density settings: {e}")))
            }
            _ => Ok(()),
        }
    }
}

/// One configured attacker. Density-ratio attackers may override the
/// spec-level density backend; the black-box attacks carry their own knobs.
#[derive(Debug, Clone, PartialEq)]
pub enum AttackerSpec {
    Domias { density: Option<DensityBackend> },
    PgOnly { density: Option<DensityBackend> },
    GaussianPrior { density: Option<DensityBackend>, prior: Option<PriorSpec> },
    Logan0(ClassifierConfig),
    LoganD1(ClassifierConfig),
    McScore(RadiusConfig),
    Ganleaks0 { k: Option<usize> },
    GanleaksCal { k: Option<usize> },
}

impl AttackerSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AttackerSpec::Domias { .. } => "domias",
            AttackerSpec::PgOnly { .. } => "pg_only",
            AttackerSpec::GaussianPrior { .. } => "gaussian_prior_domias",
            AttackerSpec::Logan0(_) => "logan0",
            AttackerSpec::LoganD1(_) => "logan_d1",
            AttackerSpec::McScore(_) => "mc_score",
            AttackerSpec::Ganleaks0 { .. } => "ganleaks0",
            AttackerSpec::GanleaksCal { .. } => "ganleaks_cal",
        }
    }

    fn density_override(&self) -> Option<&DensityBackend> {
        match self {
            AttackerSpec::Domias { density }
            | AttackerSpec::PgOnly { density }
            | AttackerSpec::GaussianPrior { density, .. } => density.as_ref(),
            _ => None,
        }
    }
}

/// Distribution-shift setting: members come from the stratum NOT matching
/// `group`; reference and test non-members mix in matching rows with
/// expected fraction `p_group0`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftSpec {
    pub group: GroupPredicate,
    pub p_group0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditSpec {
    pub source: DataSource,
    pub sizes: SplitSizes,
    /// Jitter binary columns before standardization.
    pub jitter: bool,
    /// Toy generator trained on the members. None only for the fig2 source,
    /// which fixes its own closed-form generator.
    pub generator: Option<GeneratorSpec>,
    pub density: DensityBackend,
    pub attackers: Vec<AttackerSpec>,
    pub quantiles: Vec<f64>,
    pub subgroup: Option<GroupPredicate>,
    pub shift: Option<ShiftSpec>,
    /// Measure Wasserstein distance from d_syn to the holdout.
    pub utility: bool,
}

impl AuditSpec {
    /// Minimal valid spec for a source; callers customize from here.
    pub fn new(source: DataSource, generator: Option<GeneratorSpec>) -> AuditSpec {
        AuditSpec {
            source,
            sizes: SplitSizes::default(),
            jitter: false,
            generator,
            density: DensityBackend::Kde { bandwidth: None },
            attackers: vec![AttackerSpec::Domias { density: None }],
            quantiles: DEFAULT_QUANTILES.to_vec(),
            subgroup: None,
            shift: None,
            utility: false,
        }
    }

    /// Everything checkable without touching data. Errors here are config
    /// errors; size problems that depend on the actual pool surface later
    /// as data errors.
    pub fn validate(&self) -> Result<()> {
        let cfg = |msg: String| Err(AuditError::Config(msg));

        if self.attackers.is_empty() {
            return cfg("no attackers configured".into());
        }
        let mut names: Vec<&str> = self.attackers.iter().map(|a| a.name()).collect();
        names.sort_unstable();
        for pair in names.windows(2) {
            if pair[0] == pair[1] {
                return cfg(format!("attacker {} configured twice", pair[0]));
            }
        }

        let s = &self.sizes;
        if s.n_mem == 0 || s.n_ref == 0 || s.n_test == 0 || s.n_syn == 0 {
            return cfg("n_mem, n_ref, n_test and n_syn must all be positive".into());
        }
        if !s.n_test.is_multiple_of(2) {
            return cfg(format!("n_test must be even to hold 50% members, got {}", s.n_test));
        }
        if s.n_test / 2 > s.n_mem {
            return cfg(format!(
                "n_test/2 = {} member test rows but only {} members",
                s.n_test / 2,
                s.n_mem
            ));
        }

        if self.quantiles.is_empty() {
            return cfg("empty quantile grid".into());
        }
        if let Some(&q) = self.quantiles.iter().find(|&&q| !(q > 0.0 && q <= 1.0)) {
            return cfg(format!("quantile {q} outside (0, 1]"));
        }

        match (&self.source, &self.generator) {
            (DataSource::Fig2, Some(_)) => {
                return cfg("the fig2 scenario fixes its own generator; drop the generator section".into());
            }
            (DataSource::Fig2, None) => {}
            (_, None) => return cfg("a generator is required for this data source".into()),
            (_, Some(g)) => g
                .validate()
                .map_err(|e| AuditError::Config(format!("generator: {e}")))?,
        }
        if let DataSource::MixtureMinority(shape) = &self.source {
            if !(0.0..=0.5).contains(&shape.minority_frac) {
                return cfg(format!(
                    "minority_frac must be in [0, 0.5], got {}",
                    shape.minority_frac
                ));
            }
            if !(shape.separation.is_finite() && shape.separation >= 0.0) {
                return cfg(format!("separation must be >= 0, got {}", shape.separation));
            }
            if !(shape.minority_scale.is_finite() && shape.minority_scale > 0.0) {
                return cfg(format!(
                    "minority_scale must be positive, got {}",
                    shape.minority_scale
                ));
            }
        }

        self.density.validate()?;
        for a in &self.attackers {
            if let Some(b) = a.density_override() {
                b.validate()?;
            }
        }
        // Closed-form densities live in raw coordinates and skip
        // standardization, so they cannot be mixed with fitted backends and
        // only make sense where the truth is known.
        let uses_closed = |b: &DensityBackend| matches!(b, DensityBackend::ClosedForm);
        let any_closed = uses_closed(&self.density)
            || self
                .attackers
                .iter()
                .filter_map(|a| a.density_override())
                .any(uses_closed);
        if any_closed {
            if self.source != DataSource::Fig2 {
                return cfg("closed_form densities are only defined for the fig2 scenario".into());
            }
            if !uses_closed(&self.density) {
                return cfg("closed_form density overrides require the closed_form backend spec-wide".into());
            }
            let mixed = self
                .attackers
                .iter()
                .filter_map(|a| a.density_override())
                .any(|b| !uses_closed(b));
            if mixed {
                return cfg("closed_form and fitted density backends cannot be mixed".into());
            }
            if self.jitter {
                return cfg("jitter applies to standardization, which closed_form skips".into());
            }
        }

        for a in &self.attackers {
            match a {
                AttackerSpec::Logan0(c) | AttackerSpec::LoganD1(c) => c
                    .validate()
                    .map_err(|e| AuditError::Config(format!("{}: {e}", a.name())))?,
                AttackerSpec::McScore(c) => {
                    if let Some(eps) = c.epsilon {
                        if !(eps.is_finite() && eps > 0.0) {
                            return cfg(format!("mc_score epsilon must be positive, got {eps}"));
                        }
                    }
                    if c.pca_components == Some(0) {
                        return cfg("mc_score pca_components must be positive".into());
                    }
                }
                AttackerSpec::Ganleaks0 { k } | AttackerSpec::GanleaksCal { k } => {
                    if *k == Some(0) {
                        return cfg(format!("{} k must be positive", a.name()));
                    }
                }
                AttackerSpec::GaussianPrior { prior: Some(p), .. } => p
                    .validate()
                    .map_err(|e| AuditError::Config(format!("gaussian prior: {e}")))?,
                _ => {}
            }
            if matches!(a, AttackerSpec::GanleaksCal { .. }) && self.generator.is_none() {
                return cfg("ganleaks_cal needs a generator class to calibrate against".into());
            }
        }

        if self.utility && self.sizes.n_holdout == 0 {
            return cfg("utility measurement needs n_holdout > 0".into());
        }
        if self.source == DataSource::Fig2 && (self.subgroup.is_some() || self.shift.is_some()) {
            return cfg("the fig2 scenario has no group column".into());
        }
        if let Some(shift) = &self.shift {
            if !(0.0..=1.0).contains(&shift.p_group0) {
                return cfg(format!("p_group0 must lie in [0, 1], got {}", shift.p_group0));
            }
            if let DataSource::MixtureMinority(shape) = &self.source {
                if shape.minority_frac == 0.0 {
                    return cfg("shift runs need minority_frac > 0".into());
                }
            }
        }
        Ok(())
    }

    /// Every resolved setting as flat key/value pairs, echoed into report
    /// metadata so a run can be reconstructed from the report alone.
    pub fn describe(&self) -> Vec<ConfigEntry> {
        let mut out = Vec::new();

        out.push(entry("source.kind", self.source.kind()));
        match &self.source {
            DataSource::Fig2 => {}
            DataSource::MixtureMinority(m) => {
                out.push(entry("source.minority_frac", m.minority_frac.to_string()));
                out.push(entry("source.separation", m.separation.to_string()));
                out.push(entry("source.minority_scale", m.minority_scale.to_string()));
            }
            DataSource::Csv { path } => out.push(entry("source.path", path.clone())),
        }
        out.push(entry("sizes.n_mem", self.sizes.n_mem.to_string()));
        out.push(entry("sizes.n_ref", self.sizes.n_ref.to_string()));
        out.push(entry("sizes.n_test", self.sizes.n_test.to_string()));
        out.push(entry("sizes.n_syn", self.sizes.n_syn.to_string()));
        out.push(entry("sizes.n_holdout", self.sizes.n_holdout.to_string()));
        out.push(entry("data.jitter", self.jitter.to_string()));

        match &self.generator {
            None => out.push(entry("generator.kind", "closed_form_scenario")),
            Some(g) => {
                out.push(entry("generator.kind", g.name()));
                match g {
                    GeneratorSpec::AdditiveNoise { sigma } => {
                        out.push(entry("generator.sigma", sigma.to_string()))
                    }
                    GeneratorSpec::SmoothedBootstrap { bandwidth } => out.push(entry(
                        "generator.bandwidth",
                        bandwidth.map_or("scott".to_string(), |b| b.to_string()),
                    )),
                    GeneratorSpec::GaussianMle => {}
                }
            }
        }

        describe_backend("density", &self.density, &mut out);

        let names: Vec<&str> = self.attackers.iter().map(|a| a.name()).collect();
        out.push(entry("attackers", names.join(",")));
        for a in &self.attackers {
            let p = format!("attacker.{}", a.name());
            match a {
                AttackerSpec::Domias { density }
                | AttackerSpec::PgOnly { density }
                | AttackerSpec::GaussianPrior { density, .. } => {
                    match density {
                        Some(b) => describe_backend(&p, b, &mut out),
                        None => out.push(entry(format!("{p}.backend"), "default")),
                    }
                    if let AttackerSpec::GaussianPrior { prior, .. } = a {
                        out.push(entry(
                            format!("{p}.prior"),
                            prior
                                .as_ref()
                                .map_or("standard-normal-all".to_string(), |pr| pr.describe()),
                        ));
                    }
                }
                AttackerSpec::Logan0(c) | AttackerSpec::LoganD1(c) => {
                    out.push(entry(format!("{p}.hidden"), c.hidden.to_string()));
                    out.push(entry(format!("{p}.epochs"), c.train.epochs.to_string()));
                    out.push(entry(format!("{p}.batch"), c.train.batch.to_string()));
                    out.push(entry(format!("{p}.lr"), c.train.lr.to_string()));
                }
                AttackerSpec::McScore(c) => {
                    out.push(entry(
                        format!("{p}.epsilon"),
                        c.epsilon.map_or("median-nn".to_string(), |e| e.to_string()),
                    ));
                    out.push(entry(
                        format!("{p}.pca_components"),
                        c.pca_components.map_or("off".to_string(), |k| k.to_string()),
                    ));
                }
                AttackerSpec::Ganleaks0 { k } | AttackerSpec::GanleaksCal { k } => {
                    out.push(entry(
                        format!("{p}.k"),
                        k.map_or("all".to_string(), |k| k.to_string()),
                    ));
                }
            }
        }

        let qs: Vec<String> = self.quantiles.iter().map(|q| q.to_string()).collect();
        out.push(entry("eval.quantiles", qs.join(",")));
        if let Some(g) = &self.subgroup {
            out.push(entry("subgroup.column", g.column.clone()));
            out.push(entry("subgroup.equals", g.equals.to_string()));
        }
        if let Some(s) = &self.shift {
            out.push(entry("shift.column", s.group.column.clone()));
            out.push(entry("shift.equals", s.group.equals.to_string()));
            out.push(entry("shift.p_group0", s.p_group0.to_string()));
        }
        out.push(entry("utility.enabled", self.utility.to_string()));
        out
    }
}

fn entry(key: impl Into<String>, value: impl Into<String>) -> ConfigEntry {
    ConfigEntry { key: key.into(), value: value.into() }
}

fn describe_backend(prefix: &str, b: &DensityBackend, out: &mut Vec<ConfigEntry>) {
    out.push(entry(format!("{prefix}.backend"), b.label()));
    match b {
        DensityBackend::Kde { bandwidth } => out.push(entry(
            format!("{prefix}.bandwidth"),
            bandwidth.map_or("scott".to_string(), |h| h.to_string()),
        )),
        DensityBackend::Flow(s) => {
            out.push(entry(format!("{prefix}.flows"), s.flows.to_string()));
            out.push(entry(format!("{prefix}.layers"), s.layers.to_string()));
            out.push(entry(format!("{prefix}.hidden"), s.hidden.to_string()));
            out.push(entry(format!("{prefix}.epochs"), s.epochs.to_string()));
            out.push(entry(format!("{prefix}.batch"), s.batch.to_string()));
            out.push(entry(format!("{prefix}.lr"), s.lr.to_string()));
        }
        DensityBackend::ClosedForm => {}
    }
}

/// Spec rows needed from a scenario pool. Shifted runs size the shifted
/// stratum for p_group0 = 1 so the pool does not depend on p and the same
/// seed draws the same pool across a whole shift grid.
fn scenario_pool_rows(spec: &AuditSpec) -> Result<usize> {
    let s = &spec.sizes;
    let half = s.n_test / 2;
    let base = s.n_mem + s.n_ref + half + s.n_holdout;
    match (&spec.source, &spec.shift) {
        (_, None) => Ok(base),
        (DataSource::MixtureMinority(shape), Some(_)) => {
            let need_shifted = s.n_ref + half;
            let need_members = s.n_mem + s.n_ref + half + s.n_holdout;
            let frac = shape.minority_frac;
            let mut n = ((need_shifted as f64 / frac).ceil() as usize).max(base);
            loop {
                let in_group = (frac * n as f64).round() as usize;
                if in_group >= need_shifted && n - in_group >= need_members {
                    return Ok(n);
                }
                n += 1;
            }
        }
        (DataSource::Csv { .. }, Some(_)) => Ok(base),
        (DataSource::Fig2, Some(_)) => {
            Err(AuditError::Config("the fig2 scenario has no group column".into()))
        }
    }
}

fn build_pool(spec: &AuditSpec, rng: &mut SeededRng) -> Result<Dataset> {
    match &spec.source {
        DataSource::Fig2 => {
            let n = scenario_pool_rows(spec)?;
            let values = GaussianMixture::standard_normal(1).sample_n(n, rng);
            Dataset::with_values_unchecked(crate::data::Schema::continuous(&["x"]), values, None)
        }
        DataSource::MixtureMinority(shape) => {
            let scenario = MinorityScenario {
                n: scenario_pool_rows(spec)?,
                minority_frac: shape.minority_frac,
                separation: shape.separation,
                minority_scale: shape.minority_scale,
            };
            gauss_mixture_minority(&scenario, rng)
        }
        DataSource::Csv { path } => load_csv(std::path::Path::new(path), &SchemaHint::Infer),
    }
}

/// log p_G and log p_R over the test rows for one density backend.
struct DensityScores {
    log_pg: Vec<f64>,
    log_pr: Vec<f64>,
}

/// Index of `backend` in the cache, fitting and evaluating it on first use.
fn ensure_backend(
    cache: &mut Vec<(DensityBackend, DensityScores)>,
    backend: &DensityBackend,
    d_syn: &Dataset,
    d_ref: &Dataset,
    d_test: &Dataset,
    density_seed: u64,
) -> Result<usize> {
    if let Some(i) = cache.iter().position(|(b, _)| b == backend) {
        return Ok(i);
    }
    let fitted = fit_density_scores(backend, d_syn, d_ref, d_test, density_seed)?;
    cache.push((*backend, fitted));
    Ok(cache.len() - 1)
}

fn fit_density_scores(
    backend: &DensityBackend,
    d_syn: &Dataset,
    d_ref: &Dataset,
    d_test: &Dataset,
    density_seed: u64,
) -> Result<DensityScores> {
    match backend {
        DensityBackend::Kde { bandwidth } => {
            let pg = KdeModel::fit(&d_syn.values, *bandwidth)?;
            let pr = KdeModel::fit(&d_ref.values, *bandwidth)?;
            Ok(DensityScores {
                log_pg: log_densities(&pg, d_test)?,
                log_pr: log_densities(&pr, d_test)?,
            })
        }
        DensityBackend::Flow(settings) => {
            let cfg = settings.to_config(d_syn.n_cols());
            let pg = FlowModel::fit(
                &d_syn.values,
                cfg,
                &mut SeededRng::child(density_seed, 0),
            )?;
            let pr = FlowModel::fit(
                &d_ref.values,
                cfg,
                &mut SeededRng::child(density_seed, 1),
            )?;
            Ok(DensityScores {
                log_pg: log_densities(&pg, d_test)?,
                log_pr: log_densities(&pr, d_test)?,
            })
        }
        DensityBackend::ClosedForm => {
            let pg = fig2_generator_density()?;
            let pr = GaussianMixture::standard_normal(1);
            Ok(DensityScores {
                log_pg: log_densities(&pg, d_test)?,
                log_pr: log_densities(&pr, d_test)?,
            })
        }
    }
}

/// All per-seed results: metrics for the report plus the raw scores for
/// the per-attacker CSV dumps.
#[derive(Debug, Clone, PartialEq)]
pub struct SeedOutcome {
    pub seed: u64,
    pub attackers: Vec<AttackerMetrics>,
    pub scores: Vec<AttackScores>,
    pub utility_wasserstein: Option<f64>,
}

pub fn run_audit_once(spec: &AuditSpec, seed: u64) -> Result<SeedOutcome> {
    spec.validate()?;

    let mut pool_rng = SeededRng::child(seed, STREAM_POOL);
    let mut split_rng = SeededRng::child(seed, STREAM_SPLIT);
    let mut gen_rng = SeededRng::child(seed, STREAM_GENERATOR);
    let density_seed = SeededRng::child_seed(seed, STREAM_DENSITY);
    let attack_seed = SeededRng::child_seed(seed, STREAM_ATTACKS);
    let mut util_rng = SeededRng::child(seed, STREAM_UTILITY);

    let pool = build_pool(spec, &mut pool_rng)?;

    let s = &spec.sizes;
    let (split, holdout) = match &spec.shift {
        Some(shift) => make_shifted_split(
            &pool,
            &shift.group,
            shift.p_group0,
            GroupedSizes {
                n_mem: s.n_mem,
                n_ref: s.n_ref,
                n_test: s.n_test,
                n_holdout: s.n_holdout,
            },
            &mut split_rng,
        )?,
        None => make_split_and_holdout(&pool, s.n_mem, s.n_ref, s.n_test, s.n_holdout, &mut split_rng)?,
    };
    let ExperimentSplit { d_mem, d_ref, d_test, labels } = split;

    // Mask from the raw test rows, before the group column disappears from
    // the attacker-visible features.
    let mask = spec
        .subgroup
        .as_ref()
        .map(|pred| subgroup_mask(&d_test, pred))
        .transpose()?;

    let strip = |d: &Dataset| -> Result<Dataset> {
        if d.schema.index_of(GROUP_COLUMN).is_some() {
            d.drop_column(GROUP_COLUMN)
        } else {
            Ok(d.clone())
        }
    };
    let d_mem = strip(&d_mem)?;
    let d_ref = strip(&d_ref)?;
    let d_test = strip(&d_test)?;
    let holdout = holdout.as_ref().map(&strip).transpose()?;

    // Standardization statistics come from the reference set only: that is
    // the data the attacker actually holds. Closed-form runs stay in raw
    // coordinates so the analytic densities apply.
    let closed_form = matches!(spec.density, DensityBackend::ClosedForm);
    let (d_mem, d_ref, d_test, holdout) = if closed_form {
        (d_mem, d_ref, d_test, holdout)
    } else {
        let mut others: Vec<&Dataset> = vec![&d_mem, &d_test];
        if let Some(h) = &holdout {
            others.push(h);
        }
        let (_, std_ref, mut rest) =
            standardize_fit_apply(&d_ref, &others, spec.jitter, &mut split_rng)?;
        let std_holdout = if holdout.is_some() { Some(rest.remove(2)) } else { None };
        let std_test = rest.remove(1);
        let std_mem = rest.remove(0);
        (std_mem, std_ref, std_test, std_holdout)
    };

    let syn_values: RealMatrix = match &spec.generator {
        None => fig2_generator_density()?.sample_n(s.n_syn, &mut gen_rng),
        Some(g) => generate(g, &d_mem.values, s.n_syn, &mut gen_rng)?,
    };
    let d_syn = Dataset::with_values_unchecked(
        d_test.schema.clone(),
        syn_values,
        d_test.standardization.clone(),
    )?;

    // Fitted density evaluations, shared across attackers on the same
    // backend.
    let mut density_cache: Vec<(DensityBackend, DensityScores)> = Vec::new();

    let mut all_scores = Vec::with_capacity(spec.attackers.len());
    for (idx, attacker) in spec.attackers.iter().enumerate() {
        let mut rng = SeededRng::child(attack_seed, idx as u64);
        let backend = attacker.density_override().unwrap_or(&spec.density);
        let scored = match attacker {
            AttackerSpec::Domias { .. } => {
                let i = ensure_backend(&mut density_cache, backend, &d_syn, &d_ref, &d_test, density_seed)?;
                let d = &density_cache[i].1;
                domias(&d.log_pg, &d.log_pr)?
            }
            AttackerSpec::PgOnly { .. } => {
                let i = ensure_backend(&mut density_cache, backend, &d_syn, &d_ref, &d_test, density_seed)?;
                pg_only(&density_cache[i].1.log_pg)?
            }
            AttackerSpec::GaussianPrior { prior, .. } => {
                let i = ensure_backend(&mut density_cache, backend, &d_syn, &d_ref, &d_test, density_seed)?;
                let prior = match prior {
                    Some(p) => p.clone(),
                    // On standardized data the honest uninformed prior is
                    // standard normal per feature; for fig2 raw data it is
                    // the true reference density, which is the point.
                    None => PriorSpec::standard_on_all(&d_test),
                };
                gaussian_prior_domias(&density_cache[i].1.log_pg, &d_test, &prior)?
            }
            AttackerSpec::Logan0(cfg) => logan0(&d_syn.values, &d_test.values, cfg, &mut rng)?,
            AttackerSpec::LoganD1(cfg) => {
                logan_d1(&d_syn.values, &d_ref.values, &d_test.values, cfg, &mut rng)?
            }
            AttackerSpec::McScore(cfg) => mc_score(&d_syn.values, &d_test.values, cfg)?,
            AttackerSpec::Ganleaks0 { k } => ganleaks0(&d_syn.values, &d_test.values, *k, &mut rng)?,
            AttackerSpec::GanleaksCal { k } => {
                let gen = spec.generator.as_ref().expect("validated: calibration needs a generator");
                ganleaks_cal(&d_syn.values, &d_ref.values, &d_test.values, *k, gen, &mut rng)?
            }
        };
        debug_assert_eq!(scored.name, attacker.name());
        all_scores.push(scored);
    }

    let mut attacker_metrics = Vec::with_capacity(all_scores.len());
    for scored in &all_scores {
        let subgroup = mask
            .as_ref()
            .map(|m| subgroup_report(&scored.scores, &labels, m))
            .transpose()?;
        attacker_metrics.push(AttackerMetrics {
            name: scored.name.clone(),
            config: scored.config.clone(),
            auc: auc(&scored.scores, &labels)?,
            accuracy_at_median: accuracy_at_median(&scored.scores, &labels)?,
            precision_curve: precision_quantile_curve(&scored.scores, &labels, &spec.quantiles)?,
            subgroup,
        });
    }

    let utility_wasserstein = if spec.utility {
        let h = holdout
            .as_ref()
            .ok_or_else(|| AuditError::Size("utility needs a holdout set".into()))?;
        Some(wasserstein_utility(&d_syn, h, &mut util_rng)?)
    } else {
        None
    };

    Ok(SeedOutcome {
        seed,
        attackers: attacker_metrics,
        scores: all_scores,
        utility_wasserstein,
    })
}

/// Fold per-seed outcomes into the JSON report shape.
pub fn assemble_report(
    spec: &AuditSpec,
    command: &str,
    software_version: &str,
    outcomes: &[SeedOutcome],
) -> Result<AuditReport> {
    let runs: Vec<SeedRun> = outcomes
        .iter()
        .map(|o| SeedRun {
            seed: o.seed,
            utility_wasserstein: o.utility_wasserstein,
            attackers: o.attackers.clone(),
        })
        .collect();
    let aggregates = aggregate_attackers(&runs)?;
    let utility = summarize_utility(&runs);
    Ok(AuditReport {
        format_version: REPORT_FORMAT_VERSION,
        software_version: software_version.to_string(),
        command: command.to_string(),
        seeds: outcomes.iter().map(|o| o.seed).collect(),
        config: spec.describe(),
        runs,
        aggregates,
        utility,
    })
}

/// The one knob a sweep run varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKnob {
    /// Additive-noise sigma.
    Sigma,
    /// Smoothed-bootstrap bandwidth.
    Bandwidth,
    NMem,
    NRef,
    NSyn,
}

impl SweepKnob {
    pub fn parse(name: &str) -> Result<SweepKnob> {
        match name {
            "sigma" => Ok(SweepKnob::Sigma),
            "bandwidth" => Ok(SweepKnob::Bandwidth),
            "n_mem" => Ok(SweepKnob::NMem),
            "n_ref" => Ok(SweepKnob::NRef),
            "n_syn" => Ok(SweepKnob::NSyn),
            other => Err(AuditError::Config(format!(
                "unknown sweep knob {other:?}; expected sigma, bandwidth, n_mem, n_ref or n_syn"
            ))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            SweepKnob::Sigma => "sigma",
            SweepKnob::Bandwidth => "bandwidth",
            SweepKnob::NMem => "n_mem",
            SweepKnob::NRef => "n_ref",
            SweepKnob::NSyn => "n_syn",
        }
    }
}

fn knob_count(value: f64, what: &str) -> Result<usize> {
    if !(value.is_finite() && value > 0.0 && value.fract() == 0.0 && value <= 1e9) {
        return Err(AuditError::Config(format!(
            "{what} must be a positive integer, got {value}"
        )));
    }
    Ok(value as usize)
}

/// Spec with one knob replaced; validates the result.
pub fn apply_knob(spec: &AuditSpec, knob: SweepKnob, value: f64) -> Result<AuditSpec> {
    let mut out = spec.clone();
    match knob {
        SweepKnob::Sigma => match &spec.generator {
            Some(GeneratorSpec::AdditiveNoise { .. }) => {
                out.generator = Some(GeneratorSpec::AdditiveNoise { sigma: value });
            }
            _ => {
                return Err(AuditError::Config(
                    "sigma sweeps need the additive_noise generator".into(),
                ))
            }
        },
        SweepKnob::Bandwidth => match &spec.generator {
            Some(GeneratorSpec::SmoothedBootstrap { .. }) => {
                out.generator = Some(GeneratorSpec::SmoothedBootstrap { bandwidth: Some(value) });
            }
            _ => {
                return Err(AuditError::Config(
                    "bandwidth sweeps need the smoothed_bootstrap generator".into(),
                ))
            }
        },
        SweepKnob::NMem => out.sizes.n_mem = knob_count(value, "n_mem")?,
        SweepKnob::NRef => out.sizes.n_ref = knob_count(value, "n_ref")?,
        SweepKnob::NSyn => out.sizes.n_syn = knob_count(value, "n_syn")?,
    }
    if let Some(g) = &out.generator {
        g.validate()
            .map_err(|e| AuditError::Config(format!("swept generator: {e}")))?;
    }
    out.validate()?;
    Ok(out)
}

/// Spec for one point of a shift grid.
pub fn with_shift(spec: &AuditSpec, group: GroupPredicate, p_group0: f64) -> AuditSpec {
    let mut out = spec.clone();
    out.shift = Some(ShiftSpec { group, p_group0 });
    out
}
