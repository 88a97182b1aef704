//! Training measurement generation.
//!
//! Two equivalent pipelines produce the measurement vector: the physical
//! path applies synthesized beamformers to the dense channel matrix, the
//! virtual path sums virtual-channel entries over the selected beam pairs
//! with the 1/sqrt(z1 z2) row normalization. The virtual path never
//! materializes a Kronecker row and is the Monte Carlo default; the physical
//! path is kept as the cross-check oracle.

use nalgebra::DVector;
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::channel::{dft_matrix, Channel, SystemConfig};
use crate::codebooks::{synthesize_beamformer, MeasurementSchedule};

#[derive(Debug, Error, PartialEq)]
pub enum SimulatorError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
}

/// Which measurement model produced a [`MeasurementSet`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasurementDomain {
    Physical,
    Virtual,
}

/// Stacked complex measurements for one training run.
#[derive(Debug, Clone)]
pub struct MeasurementSet {
    pub y: DVector<Complex64>,
    pub noise_var: f64,
    pub domain: MeasurementDomain,
}

fn check_dims(
    ch: &Channel,
    sched: &MeasurementSchedule,
    cfg: &SystemConfig,
) -> Result<(), SimulatorError> {
    if sched.n_tx() != cfg.n_tx || sched.n_rx() != cfg.n_rx {
        return Err(SimulatorError::DimensionMismatch(format!(
            "schedule is {}x{}, config is {}x{}",
            sched.n_tx(),
            sched.n_rx(),
            cfg.n_tx,
            cfg.n_rx
        )));
    }
    if ch.dense().nrows() != cfg.n_rx || ch.dense().ncols() != cfg.n_tx {
        return Err(SimulatorError::DimensionMismatch(format!(
            "channel is {}x{}, config is {}x{}",
            ch.dense().nrows(),
            ch.dense().ncols(),
            cfg.n_rx,
            cfg.n_tx
        )));
    }
    Ok(())
}

fn complex_gaussian<R: Rng>(var: f64, rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * Complex64::from((var / 2.0).sqrt())
}

/// Physical-domain measurements: y_t = g_t^H H w_t sqrt(P) + g_t^H n_t with
/// a full per-antenna noise vector n_t.
pub fn measure_physical<R: Rng>(
    ch: &Channel,
    sched: &MeasurementSchedule,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<MeasurementSet, SimulatorError> {
    check_dims(ch, sched, cfg)?;
    let f_tx = dft_matrix(cfg.n_tx);
    let f_rx = dft_matrix(cfg.n_rx);
    let amp = Complex64::from(cfg.pilot_power.sqrt());
    let mut y = DVector::<Complex64>::zeros(sched.k());
    for t in 0..sched.k() {
        let w = synthesize_beamformer(&f_tx, &sched.tx()[t]);
        let g = synthesize_beamformer(&f_rx, &sched.rx()[t]);
        let signal = (g.adjoint() * ch.dense() * w)[(0, 0)] * amp;
        let noise = if cfg.noise_var > 0.0 {
            let n = DVector::from_fn(cfg.n_rx, |_, _| complex_gaussian(cfg.noise_var, rng));
            g.dotc(&n)
        } else {
            Complex64::from(0.0)
        };
        y[t] = signal + noise;
    }
    Ok(MeasurementSet {
        y,
        noise_var: cfg.noise_var,
        domain: MeasurementDomain::Physical,
    })
}

/// Virtual-domain measurements: y_t = sqrt(P / (z1 z2)) * sum of h_v at the
/// selected (transmit, receive) grid pairs, plus scalar noise CN(0, sigma^2).
/// The scalar reduction of the projected noise is valid because the receive
/// beamformers have unit norm.
pub fn measure_virtual<R: Rng>(
    ch: &Channel,
    sched: &MeasurementSchedule,
    cfg: &SystemConfig,
    rng: &mut R,
) -> Result<MeasurementSet, SimulatorError> {
    check_dims(ch, sched, cfg)?;
    let scaling = sched.scaling();
    let amp = Complex64::from((cfg.pilot_power / (scaling.z1 * scaling.z2) as f64).sqrt());
    let n_rx = cfg.n_rx;
    let h_v = ch.h_v();
    let mut y = DVector::<Complex64>::zeros(sched.k());
    for t in 0..sched.k() {
        let mut acc = Complex64::from(0.0);
        for &a in sched.tx()[t].ones() {
            let base = a as usize * n_rx;
            for &b in sched.rx()[t].ones() {
                acc += h_v[base + b as usize];
            }
        }
        let noise = if cfg.noise_var > 0.0 {
            complex_gaussian(cfg.noise_var, rng)
        } else {
            Complex64::from(0.0)
        };
        y[t] = acc * amp + noise;
    }
    Ok(MeasurementSet {
        y,
        noise_var: cfg.noise_var,
        domain: MeasurementDomain::Virtual,
    })
}

/// Noise variance realizing a given SNR = P / sigma_n^2 in dB.
pub fn snr_to_noise_var(snr_db: f64, pilot_power: f64) -> f64 {
    assert!(pilot_power > 0.0, "pilot power must be positive");
    pilot_power / 10f64.powf(snr_db / 10.0)
}
