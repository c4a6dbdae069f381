//! Experiment drivers behind the `cm2` binary: model loading, run
//! manifests, CSV/JSON/SVG emission.

pub mod plot;

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classical::{self, CROSSCHECK_MAX_STEPS};
use crate::dynamics::{run_trajectory, DEFAULT_PRUNE};
use crate::ensemble::{self, trajectory_ledger, unconditional_ledger, EnsembleConfig};
use crate::error::{Error, Result};
use crate::model::{Cm2Model, ModelFile, ValidationReport};
use crate::presets::{Preset, PresetParams};
use crate::thermo::{self, iss_detect, IssReport, IssThresholds, ThermoSeries, Verdict, VerifierReport};
use plot::{histogram_plot, line_plot, Histogram, Series};

/// Environment variable overriding the worker count.
pub const THREADS_ENV: &str = "CM2_THREADS";
pub const DEFAULT_BINS: usize = 30;
/// Leading points dropped before single-shot histograms and accumulated
/// averages.
pub const DEFAULT_DISCARD: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelSource {
    Preset { preset: Preset, params: PresetParams },
    File(PathBuf),
}

impl ModelSource {
    pub fn load(&self) -> Result<Cm2Model> {
        match self {
            ModelSource::Preset { preset, params } => preset.build(params),
            ModelSource::File(path) => ModelFile::load(path)
                .map_err(|e| match e {
                    Error::Io(io) => Error::InvalidArgument(format!("cannot read {}: {io}", path.display())),
                    other => other,
                })?
                .into_model(),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            ModelSource::Preset { preset, params } => format!(
                "preset {preset} (f={}, g={}, g1={}, g2={})",
                params.f, params.g, params.g1, params.g2
            ),
            ModelSource::File(p) => format!("model file {}", p.display()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Ensemble,
    SingleShot,
    Exact,
    Validate,
    Classical,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: ModelSource,
    pub mode: Mode,
    pub steps: usize,
    pub n_traj: usize,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub bins: usize,
    pub prune: f64,
    pub svg: bool,
    pub discard: usize,
    #[serde(skip, default)]
    pub iss: IssThresholds,
}

impl RunConfig {
    pub fn new(source: ModelSource, mode: Mode) -> Self {
        Self {
            source,
            mode,
            steps: 100,
            n_traj: 2000,
            seed: None,
            out: None,
            bins: DEFAULT_BINS,
            prune: DEFAULT_PRUNE,
            svg: false,
            discard: DEFAULT_DISCARD,
            iss: IssThresholds::default(),
        }
    }

    pub fn check(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(Error::InvalidArgument("--steps must be positive".into()));
        }
        if self.mode == Mode::Ensemble && self.n_traj == 0 {
            return Err(Error::InvalidArgument("--traj must be positive".into()));
        }
        if matches!(self.mode, Mode::Ensemble | Mode::SingleShot) && self.seed.is_none() {
            return Err(Error::InvalidArgument("--seed is required for stochastic runs".into()));
        }
        if self.bins == 0 {
            return Err(Error::InvalidArgument("--bins must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.prune) {
            return Err(Error::InvalidArgument("--prune must lie in [0, 1)".into()));
        }
        Ok(())
    }

    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

/// Loads the model and refuses it when an invariant is violated.
pub fn load_checked(cfg: &RunConfig) -> Result<Cm2Model> {
    let model = cfg.source.load()?;
    model.check()?;
    Ok(model)
}

/// Everything needed to reproduce a run. The worker count is deliberately
/// absent.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub mode: Mode,
    pub source: String,
    pub steps: usize,
    pub n_traj: usize,
    pub seed: Option<u64>,
    pub bins: usize,
    pub prune: f64,
    pub discard: usize,
    /// Fully resolved model.
    pub model: ModelFile,
}

impl Manifest {
    pub fn new(cfg: &RunConfig, model: &Cm2Model) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            mode: cfg.mode,
            source: cfg.source.describe(),
            steps: cfg.steps,
            n_traj: cfg.n_traj,
            seed: cfg.seed,
            bins: cfg.bins,
            prune: cfg.prune,
            discard: cfg.discard,
            model: ModelFile::from_model(model),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }

    /// SHA-256 of the canonical JSON, in hex. The source label is left out:
    /// a replay names the same resolved model differently.
    pub fn hash(&self) -> String {
        let canonical = Manifest {
            source: String::new(),
            ..self.clone()
        };
        Sha256::digest(canonical.to_json().as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::InvalidArgument(format!("manifest: {e}")))
    }

    /// Config and model that reproduce the run; the model is written next
    /// to `dir` as `model.json` so that the source is a plain file.
    pub fn replay_config(&self, dir: &Path, out: Option<PathBuf>) -> Result<RunConfig> {
        fs::create_dir_all(dir)?;
        let path = dir.join("model.json");
        fs::write(&path, self.model.to_json())?;
        Ok(RunConfig {
            source: ModelSource::File(path),
            mode: self.mode,
            steps: self.steps,
            n_traj: self.n_traj,
            seed: self.seed,
            out,
            bins: self.bins,
            prune: self.prune,
            svg: false,
            discard: self.discard,
            iss: IssThresholds::default(),
        })
    }
}

/// Worker count from `CM2_THREADS`, if set.
pub fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .map(Some)
            .ok_or_else(|| Error::InvalidArgument(format!("{THREADS_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

/// Runs `f` on a dedicated pool with `threads` workers (all cores if
/// `None`).
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads.unwrap_or(0))
        .build()
        .map_err(|e| Error::InvalidArgument(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(f))
}

fn fmt_num(v: f64) -> String {
    format!("{v}")
}

/// CSV text with a `#` comment line carrying units and the manifest hash.
pub fn csv_text(hash: &str, header: &[&str], rows: &[Vec<String>]) -> String {
    let mut out = format!("# units=nats manifest={hash}\n");
    out.push_str(&header.join(","));
    out.push('\n');
    for r in rows {
        out.push_str(&r.join(","));
        out.push('\n');
    }
    out
}

struct Writer {
    dir: Option<PathBuf>,
    hash: String,
    written: Vec<PathBuf>,
}

impl Writer {
    fn new(dir: Option<PathBuf>, manifest: &Manifest) -> Result<Self> {
        let hash = manifest.hash();
        let mut w = Self {
            dir,
            hash,
            written: Vec::new(),
        };
        if let Some(d) = &w.dir {
            fs::create_dir_all(d)?;
        }
        w.write("manifest.json", &manifest.to_json())?;
        Ok(w)
    }

    fn write(&mut self, name: &str, text: &str) -> Result<()> {
        if let Some(d) = &self.dir {
            let p = d.join(name);
            fs::write(&p, text)?;
            self.written.push(p);
        }
        Ok(())
    }

    fn csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
        let text = csv_text(&self.hash, header, rows);
        self.write(name, &text)
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut v = serde_json::to_value(value)?;
        if let serde_json::Value::Object(map) = &mut v {
            map.insert("manifest".into(), self.hash.clone().into());
        }
        self.write(name, &serde_json::to_string_pretty(&v)?)
    }

    fn svg(&mut self, name: &str, text: &str) -> Result<()> {
        self.write(
            name,
            &text.replace("<svg ", &format!("<svg data-manifest=\"{}\" ", self.hash)),
        )
    }
}

/// Column order of `series.csv`.
pub const SERIES_COLUMNS: [&str; 15] = [
    "t",
    "S_u",
    "S_c",
    "SE_Sc",
    "I",
    "dI",
    "G",
    "L",
    "dSigma_u",
    "dSigma_c",
    "dPhi_u",
    "dPhi_c",
    "Sigma_u_int",
    "Sigma_c_int",
    "iss_flag",
];

pub fn series_rows(series: &ThermoSeries, iss: &IssReport) -> Vec<Vec<String>> {
    series
        .steps
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let se = series.errors.as_ref().map_or(0.0, |e| e[k].s_c);
            let flag = iss.verdict == Verdict::Iss && s.t >= iss.window_start;
            vec![
                s.t.to_string(),
                fmt_num(s.s_u),
                fmt_num(s.s_c),
                fmt_num(se),
                fmt_num(s.info),
                fmt_num(s.d_info),
                fmt_num(s.gain),
                fmt_num(s.loss),
                fmt_num(s.d_sigma_u),
                fmt_num(s.d_sigma_c),
                fmt_num(s.d_phi_u),
                fmt_num(s.d_phi_c),
                fmt_num(series.sigma_u_int[k]),
                fmt_num(series.sigma_c_int[k]),
                u8::from(flag).to_string(),
            ]
        })
        .collect()
}

fn series_plots(w: &mut Writer, series: &ThermoSeries) -> Result<()> {
    let col = |f: &dyn Fn(usize) -> f64| -> Vec<(f64, f64)> {
        series
            .steps
            .iter()
            .enumerate()
            .map(|(k, s)| (s.t as f64, f(k)))
            .collect()
    };
    let st = &series.steps;
    w.svg(
        "entropy.svg",
        &line_plot(
            "System entropy",
            "t",
            "nats",
            &[
                Series::new("S(X_t)", col(&|k| st[k].s_u)),
                Series::new("S(X_t|zeta_t)", col(&|k| st[k].s_c)),
            ],
        ),
    )?;
    w.svg(
        "information.svg",
        &line_plot(
            "Information rates",
            "t",
            "nats",
            &[
                Series::new("G", col(&|k| st[k].gain)),
                Series::new("L", col(&|k| st[k].loss)),
                Series::new("dI", col(&|k| st[k].d_info)),
            ],
        ),
    )?;
    w.svg(
        "production.svg",
        &line_plot(
            "Entropy production per collision",
            "t",
            "nats",
            &[
                Series::new("dSigma_u", col(&|k| st[k].d_sigma_u)),
                Series::new("dSigma_c", col(&|k| st[k].d_sigma_c)),
                Series::new("I(X:Y')", col(&|k| st[k].mutual_info)),
            ],
        ),
    )?;
    w.svg(
        "integrated.svg",
        &line_plot(
            "Integrated entropy production",
            "t",
            "nats",
            &[
                Series::new("Sigma_u", col(&|k| series.sigma_u_int[k])),
                Series::new("Sigma_c", col(&|k| series.sigma_c_int[k])),
            ],
        ),
    )
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleOutcome {
    pub iss: IssReport,
    pub samples: usize,
    pub measurement_condition: bool,
    #[serde(skip)]
    pub series: ThermoSeries,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

pub fn run_ensemble(cfg: &RunConfig) -> Result<EnsembleOutcome> {
    cfg.check()?;
    let model = load_checked(cfg)?;
    let manifest = Manifest::new(cfg, &model);
    let run = ensemble::run_ensemble(&model, &EnsembleConfig::new(cfg.steps, cfg.n_traj, cfg.seed()))?;
    let iss = iss_detect(&run.series, &cfg.iss);
    let mut w = Writer::new(cfg.out.clone(), &manifest)?;
    w.csv("series.csv", &SERIES_COLUMNS, &series_rows(&run.series, &iss))?;
    let outcome = EnsembleOutcome {
        iss,
        samples: cfg.n_traj,
        measurement_condition: run.unconditional.condition.holds,
        series: run.series,
        files: Vec::new(),
    };
    w.json("iss.json", &outcome)?;
    if cfg.svg {
        series_plots(&mut w, &outcome.series)?;
    }
    Ok(EnsembleOutcome {
        files: w.written,
        ..outcome
    })
}

/// Column order of `single_shot.csv`.
pub const SINGLE_SHOT_COLUMNS: [&str; 18] = [
    "t",
    "z",
    "S_u",
    "S_c",
    "G",
    "L",
    "dI",
    "dSigma_u",
    "dSigma_c",
    "dSigma_c_regular",
    "Z_acc",
    "S_c_acc",
    "G_acc",
    "dSigma_c_acc",
    "dSigma_c_regular_acc",
    "bloch_x",
    "bloch_y",
    "bloch_z",
];

/// Per-step single-realization ledger plus running averages.
#[derive(Debug, Clone, Serialize)]
pub struct SingleShot {
    pub outcomes: Vec<usize>,
    pub s_u: Vec<f64>,
    pub s_c: Vec<f64>,
    pub gain: Vec<f64>,
    pub loss: Vec<f64>,
    pub d_info: Vec<f64>,
    pub d_sigma_u: Vec<f64>,
    pub d_sigma_c: Vec<f64>,
    /// `I(X:Y') - dI_traj`, finite even when the ancilla term diverges.
    pub d_sigma_c_regular: Vec<f64>,
    /// Running mean of the outcome index, `Z_t`.
    pub click_average: Vec<f64>,
    pub bloch: Option<Vec<[f64; 3]>>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct TimeAverage {
    pub mean: f64,
    /// Batch-means standard error over 20 consecutive time blocks.
    pub se: f64,
}

impl SingleShot {
    pub fn compute(model: &Cm2Model, steps: usize, seed: u64) -> Result<Self> {
        let unc = unconditional_ledger(model, steps)?;
        let rec = run_trajectory(model, steps, seed)?;
        let l = trajectory_ledger(&rec, &unc.s_u)?;
        let d_sigma_u: Vec<f64> = unc.steps.iter().map(|u| u.d_sigma_u).collect();
        let d_sigma_c = d_sigma_u.iter().zip(&l.d_info).map(|(u, i)| u - i).collect();
        let d_sigma_c_regular = unc
            .steps
            .iter()
            .zip(&l.d_info)
            .map(|(u, i)| u.mutual_info - i)
            .collect();
        let mut acc = 0.0;
        let click_average = rec
            .outcomes
            .iter()
            .enumerate()
            .map(|(k, &z)| {
                acc += z as f64;
                acc / (k + 1) as f64
            })
            .collect();
        let bloch = rec.states[1..].iter().map(|s| s.bloch()).collect::<Option<Vec<_>>>();
        Ok(Self {
            outcomes: rec.outcomes,
            s_u: unc.s_u[1..].to_vec(),
            s_c: l.s_c[1..].to_vec(),
            gain: l.gain,
            loss: l.loss,
            d_info: l.d_info,
            d_sigma_u,
            d_sigma_c,
            d_sigma_c_regular,
            click_average,
            bloch,
        })
    }

    /// Time average of `values` after dropping the first `discard` points.
    pub fn time_average(values: &[f64], discard: usize) -> TimeAverage {
        let tail = &values[discard.min(values.len())..];
        let n = tail.len();
        let mean = tail.iter().sum::<f64>() / n as f64;
        let blocks = 20.min(n);
        let means: Vec<f64> = (0..blocks)
            .map(|b| {
                let r = (b * n / blocks)..((b + 1) * n / blocks);
                tail[r.clone()].iter().sum::<f64>() / r.len() as f64
            })
            .collect();
        TimeAverage {
            mean,
            se: thermo::standard_error(&means),
        }
    }

    fn running(values: &[f64], discard: usize) -> Vec<f64> {
        let mut acc = 0.0;
        values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                if k < discard {
                    return f64::NAN;
                }
                acc += v;
                acc / (k + 1 - discard) as f64
            })
            .collect()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleShotOutcome {
    pub steps: usize,
    pub seed: u64,
    pub discard: usize,
    pub click_average: f64,
    pub s_c: TimeAverage,
    pub gain: TimeAverage,
    pub d_sigma_c: TimeAverage,
    pub d_sigma_c_regular: TimeAverage,
    pub d_sigma_u: TimeAverage,
    #[serde(skip)]
    pub shot: SingleShot,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

pub fn run_single_shot(cfg: &RunConfig) -> Result<SingleShotOutcome> {
    cfg.check()?;
    let model = load_checked(cfg)?;
    let manifest = Manifest::new(cfg, &model);
    let shot = SingleShot::compute(&model, cfg.steps, cfg.seed())?;
    let d = cfg.discard;
    let running = |v: &[f64]| SingleShot::running(v, d);
    let (s_c_acc, g_acc) = (running(&shot.s_c), running(&shot.gain));
    let (c_acc, reg_acc) = (running(&shot.d_sigma_c), running(&shot.d_sigma_c_regular));
    let rows: Vec<Vec<String>> = (0..cfg.steps)
        .map(|k| {
            let b = shot.bloch.as_ref().map(|b| b[k]);
            let bl = |i: usize| b.map_or(String::new(), |b| fmt_num(b[i]));
            vec![
                (k + 1).to_string(),
                shot.outcomes[k].to_string(),
                fmt_num(shot.s_u[k]),
                fmt_num(shot.s_c[k]),
                fmt_num(shot.gain[k]),
                fmt_num(shot.loss[k]),
                fmt_num(shot.d_info[k]),
                fmt_num(shot.d_sigma_u[k]),
                fmt_num(shot.d_sigma_c[k]),
                fmt_num(shot.d_sigma_c_regular[k]),
                fmt_num(shot.click_average[k]),
                fmt_num(s_c_acc[k]),
                fmt_num(g_acc[k]),
                fmt_num(c_acc[k]),
                fmt_num(reg_acc[k]),
                bl(0),
                bl(1),
                bl(2),
            ]
        })
        .collect();
    let mut w = Writer::new(cfg.out.clone(), &manifest)?;
    w.csv("single_shot.csv", &SINGLE_SHOT_COLUMNS, &rows)?;

    let skip = |v: &[f64]| v[d.min(v.len())..].to_vec();
    let mut hist_rows = Vec::new();
    let mut hists = Vec::new();
    for (name, values) in [
        ("S_c", &shot.s_c),
        ("G", &shot.gain),
        ("dSigma_c", &shot.d_sigma_c),
        ("dSigma_c_regular", &shot.d_sigma_c_regular),
    ] {
        let h = Histogram::new(&skip(values), cfg.bins);
        for (k, &c) in h.counts.iter().enumerate() {
            let (lo, hi) = h.edges(k);
            hist_rows.push(vec![name.to_string(), fmt_num(lo), fmt_num(hi), c.to_string()]);
        }
        hists.push((name, h));
    }
    w.csv("histograms.csv", &["quantity", "bin_lo", "bin_hi", "count"], &hist_rows)?;

    let outcome = SingleShotOutcome {
        steps: cfg.steps,
        seed: cfg.seed(),
        discard: d,
        click_average: *shot.click_average.last().expect("steps > 0"),
        s_c: SingleShot::time_average(&shot.s_c, d),
        gain: SingleShot::time_average(&shot.gain, d),
        d_sigma_c: SingleShot::time_average(&shot.d_sigma_c, d),
        d_sigma_c_regular: SingleShot::time_average(&shot.d_sigma_c_regular, d),
        d_sigma_u: SingleShot::time_average(&shot.d_sigma_u, d),
        shot,
        files: Vec::new(),
    };
    w.json("summary.json", &outcome)?;
    if cfg.svg {
        let t = |v: &[f64]| {
            v.iter()
                .enumerate()
                .map(|(k, &x)| ((k + 1) as f64, x))
                .collect::<Vec<_>>()
        };
        w.svg(
            "single_shot.svg",
            &line_plot(
                "Single realization",
                "t",
                "nats",
                &[
                    Series::new("S(X_t|zeta_t)", t(&outcome.shot.s_c)),
                    Series::new("G_t", t(&outcome.shot.gain)),
                    Series::new("dSigma_c regular", t(&outcome.shot.d_sigma_c_regular)),
                ],
            ),
        )?;
        w.svg(
            "accumulated.svg",
            &line_plot(
                "Accumulated averages",
                "t",
                "",
                &[
                    Series::new("Z_t", t(&outcome.shot.click_average)),
                    Series::new("G", t(&g_acc)),
                    Series::new("S_c", t(&s_c_acc)),
                ],
            ),
        )?;
        for (name, h) in &hists {
            w.svg(&format!("hist_{name}.svg"), &histogram_plot(name, name, h))?;
        }
        if let Some(b) = &outcome.shot.bloch {
            w.svg(
                "bloch.svg",
                &line_plot(
                    "Conditional Bloch vector (x-z plane)",
                    "x",
                    "z",
                    &[Series::new("trajectory", b.iter().map(|v| (v[0], v[2])).collect())],
                ),
            )?;
        }
    }
    Ok(SingleShotOutcome {
        files: w.written,
        ..outcome
    })
}

/// Column order of `exact.csv`.
pub const EXACT_COLUMNS: [&str; 18] = [
    "t",
    "branches",
    "discarded_mass",
    "marginalization",
    "S_u",
    "S_c",
    "I",
    "dI",
    "G",
    "L",
    "dSigma_u",
    "dSigma_c",
    "dPhi_u",
    "dPhi_c",
    "I_XY",
    "D_Y",
    "bound_rhs",
    "bound_rhs_current",
];

#[derive(Debug, Clone, Serialize)]
pub struct ExactOutcome {
    pub report: VerifierReport,
    #[serde(skip)]
    pub series: ThermoSeries,
    #[serde(skip)]
    pub files: Vec<PathBuf>,
}

pub fn run_exact(cfg: &RunConfig) -> Result<ExactOutcome> {
    cfg.check()?;
    let model = load_checked(cfg)?;
    let manifest = Manifest::new(cfg, &model);
    let run = thermo::exact_series(&model, cfg.steps, cfg.prune)?;
    let report = thermo::verify_exact(&run);
    let rows: Vec<Vec<String>> = run
        .series
        .steps
        .iter()
        .map(|s| {
            let e = &run.ensembles[s.t];
            vec![
                s.t.to_string(),
                e.branches.len().to_string(),
                fmt_num(e.discarded_mass),
                fmt_num(run.marginalization[s.t]),
                fmt_num(s.s_u),
                fmt_num(s.s_c),
                fmt_num(s.info),
                fmt_num(s.d_info),
                fmt_num(s.gain),
                fmt_num(s.loss),
                fmt_num(s.d_sigma_u),
                fmt_num(s.d_sigma_c),
                fmt_num(s.d_phi_u),
                fmt_num(s.d_phi_c),
                fmt_num(s.mutual_info),
                fmt_num(s.anc_rel_entropy),
                fmt_num(s.bound_rhs),
                fmt_num(s.bound_rhs_current),
            ]
        })
        .collect();
    let mut w = Writer::new(cfg.out.clone(), &manifest)?;
    w.csv("exact.csv", &EXACT_COLUMNS, &rows)?;
    let outcome = ExactOutcome {
        report,
        series: run.series,
        files: Vec::new(),
    };
    w.json("verifier.json", &outcome)?;
    if cfg.svg {
        series_plots(&mut w, &outcome.series)?;
    }
    Ok(ExactOutcome {
        files: w.written,
        ..outcome
    })
}

pub fn run_classical_crosscheck(cfg: &RunConfig) -> Result<classical::CrossCheck> {
    cfg.check()?;
    if cfg.steps > CROSSCHECK_MAX_STEPS {
        return Err(Error::InvalidArgument(format!(
            "classical crosscheck supports at most {CROSSCHECK_MAX_STEPS} steps"
        )));
    }
    let model = load_checked(cfg)?;
    let manifest = Manifest::new(cfg, &model);
    let check = classical::crosscheck(&model, cfg.steps)?;
    let cm = classical::ClassicalModel::from_model(&model)?;
    let mut w = Writer::new(cfg.out.clone(), &manifest)?;
    let mut rows = Vec::new();
    for xp in 0..cm.w.dx {
        for z in 0..cm.w.nz {
            for x in 0..cm.w.dx {
                rows.push(vec![
                    xp.to_string(),
                    z.to_string(),
                    x.to_string(),
                    fmt_num(cm.w.get(xp, z, x)),
                ]);
            }
        }
    }
    w.csv("transition_w.csv", &["x_next", "z", "x", "W"], &rows)?;
    w.json("crosscheck.json", &check)?;
    Ok(check)
}

pub fn validate(cfg: &RunConfig) -> Result<ValidationReport> {
    let model = cfg.source.load()?;
    let report = model.validate();
    if cfg.out.is_some() {
        let manifest = Manifest::new(cfg, &model);
        let mut w = Writer::new(cfg.out.clone(), &manifest)?;
        w.json("validation.json", &report)?;
    }
    Ok(report)
}

/// Process exit code for a finished command.
pub const EXIT_PASS: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_VERIFIER: i32 = 2;

/// Exit code for an error: everything a user can fix in their input is 1.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::MeasurementCondition { .. } => EXIT_VERIFIER,
        _ => EXIT_INVALID,
    }
}

pub fn presets_table() -> String {
    Preset::ALL
        .iter()
        .map(|p| format!("{:<14}{}\n", p.name(), p.description()))
        .collect()
}
