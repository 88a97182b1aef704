//! Monte Carlo harness producing alignment-probability and post-beamforming
//! SNR curves over an SNR sweep, for the deterministic Kronecker scheme and
//! the random-permutation baseline.
//!
//! Every trial owns a generator seeded from (base seed, SNR index, trial
//! index), so results are independent of execution order: the parallel and
//! sequential paths produce byte-identical tables.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
#[cfg(feature = "parallel")]
use rayon::prelude::*;
use thiserror::Error;

use crate::channel::{
    Channel, ChannelError, ChannelSampler, GridMode, SystemConfig, VecIndexMap,
};
use crate::codebooks::{
    deterministic_schedule, rdperm_schedule, CodebookError, MeasurementSchedule,
};
use crate::recovery::{omp, strongest_index, RecoveryError};
use crate::sensing::{devore_matrix, ColumnView, DeVoreParams, SensingError, SensingScaling};
use crate::simulator::{measure_virtual, snr_to_noise_var, SimulatorError};

/// Reported SNR_AB when the estimate lands on a zero (or floor-breaking)
/// virtual entry; keeps dB-domain averages finite.
pub const DEFAULT_SNR_AB_FLOOR_DB: f64 = -100.0;

/// Exact header of the sweep CSV format.
pub const SWEEP_CSV_HEADER: &str =
    "snr_db,pca,pca_ci95,mean_snr_ab_db,trials,scheme,n_tx,n_rx,k,seed";

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error(transparent)]
    Sensing(#[from] SensingError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Codebook(#[from] CodebookError),
    #[error(transparent)]
    Simulator(#[from] SimulatorError),
    #[error(transparent)]
    Recovery(#[from] RecoveryError),
    #[error("invalid sweep config: {0}")]
    InvalidConfig(String),
    #[error("csv parse error: {0}")]
    CsvParse(String),
}

/// Which measurement design a trial uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    /// Deterministic matrix-by-matrix Kronecker product design.
    Mbmkp,
    /// Random-permutation baseline with the same beam counts and budget.
    RdPerm,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::Mbmkp => "mbmkp",
            Scheme::RdPerm => "rdperm",
        }
    }
}

impl std::str::FromStr for Scheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mbmkp" => Ok(Scheme::Mbmkp),
            "rdperm" => Ok(Scheme::RdPerm),
            other => Err(format!("unknown scheme '{other}' (expected mbmkp or rdperm)")),
        }
    }
}

/// Factor parameters of the Kronecker design; they fix the antenna counts,
/// beam weights, and measurement budget for both schemes.
#[derive(Debug, Clone, Copy)]
pub struct KronParams {
    pub d1: DeVoreParams,
    pub d2: DeVoreParams,
}

impl KronParams {
    pub fn new(d1: DeVoreParams, d2: DeVoreParams) -> Self {
        KronParams { d1, d2 }
    }

    pub fn n_tx(&self) -> usize {
        self.d1.p.pow(self.d1.r + 1) as usize
    }

    pub fn n_rx(&self) -> usize {
        self.d2.p.pow(self.d2.r + 1) as usize
    }

    /// Measurement budget k = p1^2 * p2^2.
    pub fn measurements(&self) -> usize {
        (self.d1.p * self.d1.p * self.d2.p * self.d2.p) as usize
    }

    pub fn scaling(&self) -> SensingScaling {
        SensingScaling::for_devore_pair(&self.d1, &self.d2)
    }
}

/// Outcome of a single alignment trial.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub correct: bool,
    pub snr_ab_db: f64,
    pub true_index: usize,
    pub estimated_index: usize,
}

/// Precomputed immutable state shared by all trials of one configuration.
#[derive(Debug, Clone)]
pub struct TrialContext {
    scheme: Scheme,
    params: KronParams,
    base_cfg: SystemConfig,
    sampler: ChannelSampler,
    det_schedule: Option<MeasurementSchedule>,
    det_view: Option<ColumnView>,
    snr_ab_floor_db: f64,
}

impl TrialContext {
    pub fn new(
        scheme: Scheme,
        params: KronParams,
        n_paths: usize,
        grid_mode: GridMode,
    ) -> Result<Self, ExperimentError> {
        let base_cfg = SystemConfig::new(params.n_tx(), params.n_rx(), n_paths)?;
        let sampler = ChannelSampler::new(base_cfg, grid_mode)?;
        let (det_schedule, det_view) = match scheme {
            Scheme::Mbmkp => {
                let u = devore_matrix(&params.d1)?;
                let v = devore_matrix(&params.d2)?;
                let sched = deterministic_schedule(&u, &v)?;
                let view = sched.stacked_matrix()?.column_normalized();
                (Some(sched), Some(view))
            }
            Scheme::RdPerm => (None, None),
        };
        Ok(TrialContext {
            scheme,
            params,
            base_cfg,
            sampler,
            det_schedule,
            det_view,
            snr_ab_floor_db: DEFAULT_SNR_AB_FLOOR_DB,
        })
    }

    pub fn with_snr_ab_floor(mut self, floor_db: f64) -> Self {
        self.snr_ab_floor_db = floor_db;
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn params(&self) -> &KronParams {
        &self.params
    }
}

/// Post-beamforming SNR in dB for one-hot selections at the estimated flat
/// index: 10 log10(|H_v entry|^2 / noise variance), floored at `floor_db`.
pub fn snr_after_bf(
    ch: &Channel,
    est_index: usize,
    noise_var: f64,
    floor_db: f64,
) -> Result<f64, ExperimentError> {
    let n_rx = ch.virtual_repr().nrows();
    let n_tx = ch.virtual_repr().ncols();
    let (eps_w, eps_g) = VecIndexMap::new(n_tx, n_rx).from_flat(est_index)?;
    let num = ch.virtual_repr()[(eps_g - 1, eps_w - 1)].norm_sqr();
    if num == 0.0 {
        return Ok(floor_db);
    }
    Ok((10.0 * (num / noise_var).log10()).max(floor_db))
}

/// One alignment trial: sample a channel, measure through the scheme's
/// schedule at the given noise level, recover with OMP at sparsity L, and
/// score the strongest recovered index against the channel's strongest
/// virtual entry.
pub fn run_trial<R: Rng>(
    ctx: &TrialContext,
    noise_var: f64,
    rng: &mut R,
) -> Result<TrialResult, ExperimentError> {
    let ch = ctx.sampler.sample(rng)?;
    let cfg = ctx.base_cfg.with_noise_var(noise_var);
    let result = match ctx.scheme {
        Scheme::Mbmkp => {
            let sched = ctx.det_schedule.as_ref().expect("prebuilt schedule");
            let view = ctx.det_view.as_ref().expect("prebuilt view");
            let meas = measure_virtual(&ch, sched, &cfg, rng)?;
            omp(view, &meas.y, cfg.n_paths)?
        }
        Scheme::RdPerm => {
            let scaling = ctx.params.scaling();
            let sched = rdperm_schedule(
                cfg.n_tx,
                cfg.n_rx,
                scaling.z1 as usize,
                scaling.z2 as usize,
                ctx.params.measurements(),
                rng,
            )?;
            let view = sched.stacked_matrix()?.column_normalized();
            let meas = measure_virtual(&ch, &sched, &cfg, rng)?;
            omp(&view, &meas.y, cfg.n_paths)?
        }
    };
    let true_index = ch.strongest_virtual_index();
    let estimated_index = if result.support.is_empty() {
        0
    } else {
        strongest_index(&result)?
    };
    let snr_ab_db = if estimated_index == 0 {
        ctx.snr_ab_floor_db
    } else {
        snr_after_bf(&ch, estimated_index, noise_var, ctx.snr_ab_floor_db)?
    };
    Ok(TrialResult {
        correct: estimated_index == true_index,
        snr_ab_db,
        true_index,
        estimated_index,
    })
}

/// Full description of one sweep invocation.
#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub scheme: Scheme,
    pub params: KronParams,
    pub n_paths: usize,
    pub grid_mode: GridMode,
    pub snr_db: Vec<f64>,
    pub trials: usize,
    pub base_seed: u64,
    pub snr_ab_floor_db: f64,
    pub pilot_power: f64,
}

impl SweepConfig {
    pub fn new(
        scheme: Scheme,
        params: KronParams,
        snr_db: Vec<f64>,
        trials: usize,
        base_seed: u64,
    ) -> Self {
        SweepConfig {
            scheme,
            params,
            n_paths: 1,
            grid_mode: GridMode::On,
            snr_db,
            trials,
            base_seed,
            snr_ab_floor_db: DEFAULT_SNR_AB_FLOOR_DB,
            pilot_power: 1.0,
        }
    }
}

/// One aggregated row of a sweep result.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub snr_db: f64,
    pub pca: f64,
    pub pca_ci95_halfwidth: f64,
    pub mean_snr_ab_db: f64,
    pub trials: usize,
    pub scheme: String,
    pub n_tx: usize,
    pub n_rx: usize,
    pub k: usize,
    pub seed: u64,
}

/// Aggregated sweep results, one row per SNR point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Serializes with the fixed header and shortest round-trip floats, so
    /// identical configurations yield byte-identical files.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(64 * (self.rows.len() + 1));
        out.push_str(SWEEP_CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{},{},{}\n",
                r.snr_db,
                r.pca,
                r.pca_ci95_halfwidth,
                r.mean_snr_ab_db,
                r.trials,
                r.scheme,
                r.n_tx,
                r.n_rx,
                r.k,
                r.seed
            ));
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<SweepTable, ExperimentError> {
        let mut lines = text.lines();
        let header = lines
            .next()
            .ok_or_else(|| ExperimentError::CsvParse("empty input".into()))?;
        if header != SWEEP_CSV_HEADER {
            return Err(ExperimentError::CsvParse(format!(
                "unexpected header '{header}'"
            )));
        }
        let mut rows = Vec::new();
        for (ln, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 10 {
                return Err(ExperimentError::CsvParse(format!(
                    "line {}: expected 10 fields, got {}",
                    ln + 2,
                    fields.len()
                )));
            }
            let parse_f = |s: &str, what: &str| -> Result<f64, ExperimentError> {
                s.parse()
                    .map_err(|_| ExperimentError::CsvParse(format!("bad {what} '{s}'")))
            };
            let parse_u = |s: &str, what: &str| -> Result<usize, ExperimentError> {
                s.parse()
                    .map_err(|_| ExperimentError::CsvParse(format!("bad {what} '{s}'")))
            };
            rows.push(SweepRow {
                snr_db: parse_f(fields[0], "snr_db")?,
                pca: parse_f(fields[1], "pca")?,
                pca_ci95_halfwidth: parse_f(fields[2], "pca_ci95")?,
                mean_snr_ab_db: parse_f(fields[3], "mean_snr_ab_db")?,
                trials: parse_u(fields[4], "trials")?,
                scheme: fields[5].to_string(),
                n_tx: parse_u(fields[6], "n_tx")?,
                n_rx: parse_u(fields[7], "n_rx")?,
                k: parse_u(fields[8], "k")?,
                seed: fields[9]
                    .parse()
                    .map_err(|_| ExperimentError::CsvParse(format!("bad seed '{}'", fields[9])))?,
            });
        }
        Ok(SweepTable { rows })
    }
}

/// splitmix64 finalizer; fixed constants, never change them or every golden
/// sweep output shifts.
fn mix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed from (base seed, SNR point index, trial index).
pub fn derive_seed(base_seed: u64, snr_index: usize, trial_index: usize) -> u64 {
    mix64(mix64(mix64(base_seed) ^ snr_index as u64) ^ trial_index as u64)
}

fn validate(cfg: &SweepConfig) -> Result<(), ExperimentError> {
    if cfg.trials < 1 {
        return Err(ExperimentError::InvalidConfig("trials must be >= 1".into()));
    }
    if cfg.snr_db.is_empty() {
        return Err(ExperimentError::InvalidConfig(
            "need at least one SNR point".into(),
        ));
    }
    if !(cfg.pilot_power > 0.0) {
        return Err(ExperimentError::InvalidConfig(
            "pilot power must be positive".into(),
        ));
    }
    Ok(())
}

fn trial_at(
    ctx: &TrialContext,
    cfg: &SweepConfig,
    snr_index: usize,
    noise_var: f64,
    trial_index: usize,
) -> Result<TrialResult, ExperimentError> {
    let seed = derive_seed(cfg.base_seed, snr_index, trial_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    run_trial(ctx, noise_var, &mut rng)
}

fn aggregate(cfg: &SweepConfig, snr_db: f64, results: &[TrialResult]) -> SweepRow {
    let n = results.len();
    let correct = results.iter().filter(|t| t.correct).count();
    let pca = correct as f64 / n as f64;
    let pca_ci95_halfwidth = 1.96 * (pca * (1.0 - pca) / n as f64).sqrt();
    let mean_snr_ab_db = results.iter().map(|t| t.snr_ab_db).sum::<f64>() / n as f64;
    SweepRow {
        snr_db,
        pca,
        pca_ci95_halfwidth,
        mean_snr_ab_db,
        trials: n,
        scheme: cfg.scheme.label().to_string(),
        n_tx: cfg.params.n_tx(),
        n_rx: cfg.params.n_rx(),
        k: cfg.params.measurements(),
        seed: cfg.base_seed,
    }
}

/// Runs the sweep, parallelizing trials when the `parallel` feature is on.
pub fn sweep(cfg: &SweepConfig) -> Result<SweepTable, ExperimentError> {
    validate(cfg)?;
    let ctx = TrialContext::new(cfg.scheme, cfg.params, cfg.n_paths, cfg.grid_mode)?
        .with_snr_ab_floor(cfg.snr_ab_floor_db);
    let mut rows = Vec::with_capacity(cfg.snr_db.len());
    for (pi, &snr_db) in cfg.snr_db.iter().enumerate() {
        let noise_var = snr_to_noise_var(snr_db, cfg.pilot_power);
        #[cfg(feature = "parallel")]
        let results: Vec<TrialResult> = (0..cfg.trials)
            .into_par_iter()
            .map(|ti| trial_at(&ctx, cfg, pi, noise_var, ti))
            .collect::<Result<_, _>>()?;
        #[cfg(not(feature = "parallel"))]
        let results: Vec<TrialResult> = (0..cfg.trials)
            .map(|ti| trial_at(&ctx, cfg, pi, noise_var, ti))
            .collect::<Result<_, _>>()?;
        rows.push(aggregate(cfg, snr_db, &results));
    }
    Ok(SweepTable { rows })
}

/// Sequential twin of [`sweep`]: same seeds, same aggregation order, same
/// output bytes. Baseline for the benchmark suite and the determinism tests.
pub fn sweep_serial(cfg: &SweepConfig) -> Result<SweepTable, ExperimentError> {
    validate(cfg)?;
    let ctx = TrialContext::new(cfg.scheme, cfg.params, cfg.n_paths, cfg.grid_mode)?
        .with_snr_ab_floor(cfg.snr_ab_floor_db);
    let mut rows = Vec::with_capacity(cfg.snr_db.len());
    for (pi, &snr_db) in cfg.snr_db.iter().enumerate() {
        let noise_var = snr_to_noise_var(snr_db, cfg.pilot_power);
        let results: Vec<TrialResult> = (0..cfg.trials)
            .map(|ti| trial_at(&ctx, cfg, pi, noise_var, ti))
            .collect::<Result<_, _>>()?;
        rows.push(aggregate(cfg, snr_db, &results));
    }
    Ok(SweepTable { rows })
}
