//! Batch commands behind the command-line tool, driven by one strict JSON
//! run configuration.
//!
//! Every command writes its outputs and a `manifest.json` into the output
//! directory. Relative paths inside a configuration resolve against the
//! directory of the configuration file.

use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::dependence::{depmap_data, depmap_model, DepMap, EmpiricalMode};
use crate::dist::CdfOptions;
use crate::error::{Error, Result};
use crate::inference::{fit, marginal_transform, FitSpec, Margins, ObservationSet, ThresholdMethod, ZeroPolicy};
use crate::io::{load_observations_with_margins, load_sites, write_json, write_observations, write_table, Manifest};
use crate::model::{BrParams, Model, ModelParams, SiteSet, SpectralModel, VariogramSpec};
use crate::oracle::{exponent_mc_model, finite_diff_partial, kappa_quadrature_model, SpectralDensity, FD_REL_STEP};
use crate::simulate::{sample_maxstable, sample_rpareto_baseline, RiskSpec, SimBatch, Simulator};

/// Smallest replicate count accepted by the acceptance benchmark.
pub const MIN_BENCH_REPS: usize = 10_000;
/// Name of the manifest written by every command.
pub const MANIFEST_FILE: &str = "manifest.json";

/// Where the sites come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SitesSource {
    /// A `site_id,x,y` file.
    File(PathBuf),
    /// The unit grid `{1, …, grid}²`.
    Grid { grid: usize },
}

/// Complete run configuration; unknown keys are rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: Option<u64>,
    pub sites: Option<SitesSource>,
    pub data: Option<PathBuf>,
    /// Margins of the data file; `raw` unless it was produced by `transform`.
    #[serde(default = "raw_margins")]
    pub data_margins: Margins,
    pub model: Option<ModelParams>,
    pub risk: Option<RiskSpec>,
    pub threshold: Option<ThresholdMethod>,
    pub fit: Option<FitSpec>,
    pub simulate: Option<SimulateSection>,
    pub depmap: Option<DepmapSection>,
    pub bench: Option<BenchSection>,
    pub transform: Option<TransformSection>,
    pub oracle: Option<OracleSection>,
    /// Absolute error target of multivariate probabilities.
    pub cdf_tol: Option<f64>,
    pub output: Option<OutputSection>,
}

fn raw_margins() -> Margins {
    Margins::Raw
}

/// Kind of process to simulate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Process {
    Maxstable,
    Rpareto,
}

/// Rejection rule for r-Pareto simulation under a non-L1 risk.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParetoSampler {
    /// Scale by `c₀` and accept when `r > 1/c₀`.
    #[default]
    C0,
    /// Accept when `r ≥ M` and divide by `M`.
    Baseline,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateSection {
    pub process: Process,
    pub n: usize,
    #[serde(default)]
    pub sampler: ParetoSampler,
    /// Baseline bound `M`; the risk's default bound when absent.
    #[serde(default)]
    pub baseline_bound: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DepmapSection {
    /// Reference site ids; one output file per reference.
    pub references: Vec<String>,
    /// Closed-form map from `model` or from the fit document.
    #[serde(default = "yes")]
    pub analytic: bool,
    /// Empirical map from `data` with this estimator.
    #[serde(default)]
    pub empirical: Option<EmpiricalMode>,
    /// A document written by `fit`; its fitted model replaces `model`.
    #[serde(default)]
    pub fit_result: Option<PathBuf>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    /// Site counts; each must be a perfect square (grid `{1, …, √D}²`).
    pub dims: Vec<usize>,
    /// Exponents of the Lp risks.
    pub p: Vec<f64>,
    pub reps: usize,
    #[serde(default = "bench_variogram")]
    pub variogram: VariogramSpec,
}

fn bench_variogram() -> VariogramSpec {
    VariogramSpec::isotropic(2.0, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TransformSection {
    pub target: Margins,
    #[serde(default = "zero_missing")]
    pub zero_policy: ZeroPolicy,
}

fn zero_missing() -> ZeroPolicy {
    ZeroPolicy::Missing
}

/// Quantity evaluated by the hidden `oracle` command.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OracleQuantity {
    Kappa,
    Exponent,
    Partial,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleSection {
    pub quantity: OracleQuantity,
    pub x: Vec<f64>,
    #[serde(default)]
    pub subset: Vec<usize>,
    #[serde(default = "oracle_draws")]
    pub draws: usize,
    #[serde(default = "oracle_tol")]
    pub tol: f64,
    #[serde(default = "oracle_step")]
    pub h_rel: f64,
}

fn oracle_draws() -> usize {
    100_000
}

fn oracle_tol() -> f64 {
    1e-6
}

fn oracle_step() -> f64 {
    FD_REL_STEP
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
}

/// A parsed configuration together with command-line overrides.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub config: RunConfig,
    /// Directory that relative paths resolve against.
    pub base_dir: PathBuf,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl RunContext {
    /// Reads and validates a configuration file; `seed` and `out` override the file.
    pub fn load(path: &Path, seed: Option<u64>, out: Option<PathBuf>) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let config: RunConfig =
            serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(Self::new(config, base_dir, seed, out))
    }

    pub fn new(config: RunConfig, base_dir: PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Self {
        let seed = seed.or(config.seed).unwrap_or(0);
        let out_dir = out
            .or_else(|| config.output.as_ref().map(|o| base_dir.join(&o.dir)))
            .unwrap_or_else(|| PathBuf::from("out"));
        RunContext { config, base_dir, seed, out_dir }
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn cdf_options(&self) -> CdfOptions {
        self.config.cdf_tol.map(CdfOptions::with_tol).unwrap_or_default()
    }

    fn sites(&self) -> Result<SiteSet> {
        match &self.config.sites {
            Some(SitesSource::File(p)) => load_sites(&self.resolve(p)),
            Some(SitesSource::Grid { grid }) => SiteSet::grid(*grid),
            None => Err(Error::Config("configuration needs a \"sites\" entry".into())),
        }
    }

    fn data(&self, sites: &SiteSet) -> Result<ObservationSet> {
        let p = self.config.data.as_ref().ok_or_else(|| Error::Config("configuration needs a \"data\" entry".into()))?;
        load_observations_with_margins(&self.resolve(p), sites, self.config.data_margins)
    }

    fn model_params(&self) -> Result<ModelParams> {
        self.config.model.clone().ok_or_else(|| Error::Config("configuration needs a \"model\" block".into()))
    }

    fn risk(&self) -> RiskSpec {
        self.config.risk.clone().unwrap_or(RiskSpec::L1)
    }

    fn manifest(&self, command: &str) -> Result<Manifest> {
        fs::create_dir_all(&self.out_dir)?;
        Ok(Manifest::new(command, self.seed, serde_json::to_value(&self.config)?))
    }

    fn output(&self, manifest: &mut Manifest, name: &str) -> PathBuf {
        manifest.outputs.push(name.to_string());
        self.out_dir.join(name)
    }

    fn finish(&self, mut manifest: Manifest, clock: Instant) -> Result<Manifest> {
        manifest.wall_time_s = clock.elapsed().as_secs_f64();
        write_json(&self.out_dir.join(MANIFEST_FILE), &manifest)?;
        Ok(manifest)
    }
}

fn replicate_ids(n: usize) -> Vec<String> {
    (1..=n).map(|i| i.to_string()).collect()
}

/// Simulates max-stable or r-Pareto replicates into `samples.csv`.
pub fn cmd_simulate(ctx: &RunContext) -> Result<Manifest> {
    let clock = Instant::now();
    let sec = ctx.config.simulate.as_ref().ok_or_else(|| Error::Config("configuration needs a \"simulate\" block".into()))?;
    let sites = ctx.sites()?;
    let model = Model::build(&ctx.model_params()?, &sites, ctx.cdf_options())?;
    let mut manifest = ctx.manifest("simulate")?;
    let batch: SimBatch = match sec.process {
        Process::Maxstable => sample_maxstable(&model, sec.n, ctx.seed)?,
        Process::Rpareto => {
            let risk = ctx.risk();
            match (&risk, sec.sampler) {
                (RiskSpec::L1, ParetoSampler::C0) => Simulator::new(&model)?.rpareto_l1(sec.n, ctx.seed),
                (_, ParetoSampler::C0) => Simulator::new(&model)?.rpareto_convex(&risk, sec.n, ctx.seed)?,
                (_, ParetoSampler::Baseline) => {
                    sample_rpareto_baseline(&model, &risk, sec.baseline_bound, sec.n, ctx.seed)?
                }
            }
        }
    };
    let mut header = vec!["replicate".to_string()];
    header.extend(sites.ids().iter().cloned());
    let path = ctx.output(&mut manifest, "samples.csv");
    write_table(&path, &header, &replicate_ids(batch.len()), &batch.samples)?;
    manifest.detail("rows", batch.len())?;
    if sec.process == Process::Rpareto {
        manifest.detail("risk", ctx.risk())?;
        manifest.detail("proposals_used", batch.proposals_used)?;
        manifest.detail("acceptance_rate", batch.acceptance_rate())?;
    }
    ctx.finish(manifest, clock)
}

/// Fits the configured family and writes `fit.json` plus the GPD stability table.
///
/// A fit that stops before convergence still succeeds; its document carries `converged = false`.
pub fn cmd_fit(ctx: &RunContext) -> Result<Manifest> {
    let clock = Instant::now();
    let spec = ctx.config.fit.as_ref().ok_or_else(|| Error::Config("configuration needs a \"fit\" block".into()))?;
    let threshold = ctx
        .config
        .threshold
        .clone()
        .ok_or_else(|| Error::Config("configuration needs a \"threshold\" block".into()))?;
    let sites = ctx.sites()?;
    let mut data = ctx.data(&sites)?;
    let mut manifest = ctx.manifest("fit")?;
    if data.margins() == Margins::Raw {
        if let Some(t) = &ctx.config.transform {
            data = marginal_transform(&data, t.target, t.zero_policy)?;
            manifest.detail("margins", t.target)?;
            manifest.detail("zero_policy", t.zero_policy)?;
        }
    }
    let result = fit(spec, &data, &ctx.risk(), &threshold, ctx.seed)?;
    write_json(&ctx.output(&mut manifest, "fit.json"), &result)?;
    if !result.gpd_table.is_empty() {
        let header: Vec<String> =
            ["threshold", "n_exceed", "shape", "scale", "shape_se", "scale_se", "loglik"].map(String::from).to_vec();
        let ids: Vec<String> = result.gpd_table.iter().map(|g| crate::io::fmt_f64(g.threshold)).collect();
        let rows: Vec<Vec<f64>> = result
            .gpd_table
            .iter()
            .map(|g| vec![g.n_exceed as f64, g.shape, g.scale, g.shape_se, g.scale_se, g.loglik])
            .collect();
        write_table(&ctx.output(&mut manifest, "gpd_stability.csv"), &header, &ids, &rows)?;
    }
    manifest.detail("converged", result.converged)?;
    manifest.detail("aic", result.aic)?;
    ctx.finish(manifest, clock)
}

/// File-name-safe form of a site id.
fn file_stem(id: &str) -> String {
    id.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' || c == '_' { c } else { '_' }).collect()
}

/// Writes one `depmap_<reference>.csv` per reference site with analytic and/or empirical columns.
pub fn cmd_depmap(ctx: &RunContext) -> Result<Manifest> {
    let clock = Instant::now();
    let sec = ctx.config.depmap.as_ref().ok_or_else(|| Error::Config("configuration needs a \"depmap\" block".into()))?;
    if sec.references.is_empty() {
        return Err(Error::Config("depmap needs at least one reference site".into()));
    }
    let sites = ctx.sites()?;
    let refs = sec
        .references
        .iter()
        .map(|id| sites.index_of(id).ok_or_else(|| Error::Config(format!("unknown reference site '{id}'"))))
        .collect::<Result<Vec<_>>>()?;
    let model = if sec.analytic {
        let params = match &sec.fit_result {
            Some(p) => {
                let text = fs::read_to_string(ctx.resolve(p))?;
                let doc: serde_json::Value = serde_json::from_str(&text)?;
                let params = doc.get("params").ok_or_else(|| Error::Config("fit document has no \"params\"".into()))?;
                serde_json::from_value(params.clone())?
            }
            None => ctx.model_params()?,
        };
        Some(Model::build(&params, &sites, ctx.cdf_options())?)
    } else {
        None
    };
    let data = match &sec.empirical {
        Some(_) => Some(ctx.data(&sites)?),
        None => None,
    };
    if model.is_none() && data.is_none() {
        return Err(Error::Config("depmap needs analytic = true or an empirical estimator".into()));
    }
    let mut manifest = ctx.manifest("depmap")?;
    let mut used = std::collections::HashSet::new();
    for (id, &r) in sec.references.iter().zip(&refs) {
        let mut maps: Vec<DepMap> = Vec::new();
        if let Some(m) = &model {
            maps.push(depmap_model(m, &sites, r)?);
        }
        if let (Some(d), Some(mode)) = (&data, &sec.empirical) {
            maps.push(depmap_data(d, r, mode)?);
        }
        let mut header = vec!["site_id".to_string(), "x".into(), "y".into()];
        header.extend(maps.iter().map(|m| format!("theta2_{}", m.source.label())));
        let rows: Vec<Vec<f64>> = (0..sites.len())
            .map(|j| {
                let c = sites.coord(j);
                let mut row = vec![c[0], c[1]];
                row.extend(maps.iter().map(|m| m.theta2[j]));
                row
            })
            .collect();
        let mut stem = file_stem(id);
        if !used.insert(stem.clone()) {
            stem = format!("{stem}_{r}");
            used.insert(stem.clone());
        }
        write_table(&ctx.output(&mut manifest, &format!("depmap_{stem}.csv")), &header, sites.ids(), &rows)?;
    }
    ctx.finish(manifest, clock)
}

/// Acceptance percentages of the `c₀` and fixed-bound samplers for Brown–Resnick
/// models on square grids, written to `acceptance.csv`.
pub fn cmd_bench_accept(ctx: &RunContext) -> Result<Manifest> {
    let clock = Instant::now();
    let sec = ctx.config.bench.as_ref().ok_or_else(|| Error::Config("configuration needs a \"bench\" block".into()))?;
    if sec.reps < MIN_BENCH_REPS {
        return Err(Error::Config(format!("bench needs reps ≥ {MIN_BENCH_REPS}, got {}", sec.reps)));
    }
    let risks: Vec<RiskSpec> = sec.p.iter().map(|&p| RiskSpec::Lp { p }).collect();
    let mut manifest = ctx.manifest("bench-accept")?;
    let header: Vec<String> =
        ["D", "p", "accept_baseline_pct", "accept_c0_pct", "reps", "seed"].map(String::from).to_vec();
    let mut w = csv::Writer::from_path(ctx.output(&mut manifest, "acceptance.csv"))?;
    w.write_record(&header)?;
    for &d in &sec.dims {
        let side = (d as f64).sqrt().round() as usize;
        if side * side != d || d == 0 {
            return Err(Error::Config(format!("bench dimension {d} is not a positive perfect square")));
        }
        let sites = SiteSet::grid(side)?;
        let params = ModelParams::Br(BrParams { variogram: sec.variogram, anchor: [0.0, 0.0] });
        let model = Model::build(&params, &sites, ctx.cdf_options())?;
        let cells = Simulator::new(&model)?.acceptance_bench(&risks, sec.reps, ctx.seed)?;
        for (cell, p) in cells.iter().zip(&sec.p) {
            w.write_record([
                d.to_string(),
                p.to_string(),
                format!("{:.4}", cell.pct_baseline()),
                format!("{:.4}", cell.pct_c0()),
                sec.reps.to_string(),
                ctx.seed.to_string(),
            ])?;
        }
    }
    w.flush()?;
    ctx.finish(manifest, clock)
}

/// Empirical marginal standardization of raw data into `transformed.csv`.
pub fn cmd_transform(ctx: &RunContext) -> Result<Manifest> {
    let clock = Instant::now();
    let sec = ctx.config.transform.as_ref().ok_or_else(|| Error::Config("configuration needs a \"transform\" block".into()))?;
    if ctx.config.data_margins != Margins::Raw {
        return Err(Error::Config(format!(
            "data are declared to be on {:?} margins already; transform only accepts raw data",
            ctx.config.data_margins
        )));
    }
    let sites = ctx.sites()?;
    let data = ctx.data(&sites)?;
    let out = marginal_transform(&data, sec.target, sec.zero_policy)?;
    let mut manifest = ctx.manifest("transform")?;
    write_observations(&ctx.output(&mut manifest, "transformed.csv"), "id", &out)?;
    manifest.detail("margins", sec.target)?;
    manifest.detail("zero_policy", sec.zero_policy)?;
    ctx.finish(manifest, clock)
}

/// Oracle value next to the closed form, written to `oracle.json`.
#[derive(Debug, Clone, Serialize)]
struct OracleOutput {
    quantity: OracleQuantity,
    closed_form: f64,
    oracle: crate::oracle::OracleReport,
}

/// Evaluates one brute-force reference for debugging; hidden from the help text.
pub fn cmd_oracle(ctx: &RunContext) -> Result<Manifest> {
    let clock = Instant::now();
    let sec = ctx.config.oracle.as_ref().ok_or_else(|| Error::Config("configuration needs an \"oracle\" block".into()))?;
    let sites = ctx.sites()?;
    let model = Model::build(&ctx.model_params()?, &sites, ctx.cdf_options())?;
    let density = SpectralDensity::from_model(&model);
    let (closed_form, oracle) = match sec.quantity {
        OracleQuantity::Kappa => (model.intensity(&sec.x)?, kappa_quadrature_model(&density, &sec.x, sec.tol)?),
        OracleQuantity::Exponent => {
            (model.exponent(&sec.x)?, exponent_mc_model(&density, &sec.x, sec.draws, ctx.seed)?)
        }
        OracleQuantity::Partial => {
            let closed = model.partial(&sec.x, &sec.subset)?;
            let mut r = finite_diff_partial(|y| model.exponent(y).unwrap_or(f64::NAN), &sec.x, &sec.subset, sec.h_rel)?;
            r.value = -r.value;
            (closed, r)
        }
    };
    let mut manifest = ctx.manifest("oracle")?;
    write_json(&ctx.output(&mut manifest, "oracle.json"), &OracleOutput { quantity: sec.quantity, closed_form, oracle })?;
    ctx.finish(manifest, clock)
}
