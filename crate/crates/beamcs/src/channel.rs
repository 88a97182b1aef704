//! Clustered mmWave channel model, angle grids, and the DFT-basis virtual
//! channel representation.
//!
//! Angles enter only through pi * sin(theta), i.e. half-wavelength element
//! spacing is absorbed into the phase term; carrier frequency and absolute
//! wavelength never appear. Vectorization is column-major throughout, which
//! is what makes the flat-index arithmetic in [`VecIndexMap`] line up with
//! the Kronecker measurement rows.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ChannelError {
    #[error("invalid system config: {0}")]
    InvalidConfig(String),
    #[error("index {index} out of range 1..={max}")]
    IndexOutOfRange { index: usize, max: usize },
}

/// Antenna counts, path count, and link-budget scalars for one scenario.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    pub n_paths: usize,
    pub pilot_power: f64,
    pub noise_var: f64,
}

impl SystemConfig {
    /// Config with unit pilot power and zero noise; set the noise variance
    /// per operating point with [`SystemConfig::with_noise_var`].
    pub fn new(n_tx: usize, n_rx: usize, n_paths: usize) -> Result<Self, ChannelError> {
        if n_tx < 1 || n_rx < 1 {
            return Err(ChannelError::InvalidConfig(
                "antenna counts must be at least 1".into(),
            ));
        }
        if n_paths < 1 {
            return Err(ChannelError::InvalidConfig(
                "need at least one propagation path".into(),
            ));
        }
        Ok(SystemConfig {
            n_tx,
            n_rx,
            n_paths,
            pilot_power: 1.0,
            noise_var: 0.0,
        })
    }

    pub fn with_noise_var(mut self, noise_var: f64) -> Self {
        assert!(noise_var >= 0.0, "noise variance must be nonnegative");
        self.noise_var = noise_var;
        self
    }
}

/// Whether path angles are drawn from the quantized beamspace grid or
/// continuously over [-pi/2, pi/2].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridMode {
    On,
    Off,
}

/// Departure/arrival angles and complex gains of the L propagation paths.
#[derive(Debug, Clone)]
pub struct PathSet {
    pub aod: Vec<f64>,
    pub aoa: Vec<f64>,
    pub gains: Vec<Complex64>,
}

impl PathSet {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }
}

/// A realized channel: physical matrix H, its beamspace representation H_v,
/// and the column-major vectorization of the latter.
#[derive(Debug, Clone)]
pub struct Channel {
    paths: PathSet,
    h_dense: DMatrix<Complex64>,
    h_virtual: DMatrix<Complex64>,
    h_v_vec: DVector<Complex64>,
}

impl Channel {
    /// Builds H and H_v from explicit paths. H is the gain-weighted sum of
    /// receive/transmit steering outer products; H_v projects each steering
    /// vector onto the DFT basis instead, so both sides cost O(L N^2).
    pub fn from_paths(cfg: &SystemConfig, paths: PathSet) -> Result<Channel, ChannelError> {
        let f_tx = dft_matrix(cfg.n_tx);
        let f_rx = dft_matrix(cfg.n_rx);
        Channel::from_paths_with(cfg, paths, &f_tx, &f_rx)
    }

    /// As [`Channel::from_paths`] but with caller-cached DFT matrices.
    pub fn from_paths_with(
        cfg: &SystemConfig,
        paths: PathSet,
        f_tx: &DMatrix<Complex64>,
        f_rx: &DMatrix<Complex64>,
    ) -> Result<Channel, ChannelError> {
        if paths.aod.len() != paths.gains.len() || paths.aoa.len() != paths.gains.len() {
            return Err(ChannelError::InvalidConfig(
                "path angle and gain lists must have equal length".into(),
            ));
        }
        let (n_rx, n_tx) = (cfg.n_rx, cfg.n_tx);
        let scale = Complex64::from(((n_tx * n_rx) as f64 / paths.len() as f64).sqrt());
        let mut h_dense = DMatrix::<Complex64>::zeros(n_rx, n_tx);
        let mut h_virtual = DMatrix::<Complex64>::zeros(n_rx, n_tx);
        for l in 0..paths.len() {
            let a = array_response_tx(paths.aod[l], n_tx);
            let b = array_response_rx(paths.aoa[l], n_rx);
            let g = scale * paths.gains[l];
            h_dense.gerc(g, &b, &a, Complex64::from(1.0));
            let u = f_rx.adjoint() * &b;
            let v = f_tx.adjoint() * &a;
            h_virtual.gerc(g, &u, &v, Complex64::from(1.0));
        }
        let h_v_vec = DVector::from_column_slice(h_virtual.as_slice());
        Ok(Channel {
            paths,
            h_dense,
            h_virtual,
            h_v_vec,
        })
    }

    pub fn paths(&self) -> &PathSet {
        &self.paths
    }

    pub fn dense(&self) -> &DMatrix<Complex64> {
        &self.h_dense
    }

    pub fn virtual_repr(&self) -> &DMatrix<Complex64> {
        &self.h_virtual
    }

    pub fn h_v(&self) -> &DVector<Complex64> {
        &self.h_v_vec
    }

    /// 1-based flat index of the largest-magnitude entry of h_v; ties go to
    /// the lowest index.
    pub fn strongest_virtual_index(&self) -> usize {
        let mut best = (0usize, f64::NEG_INFINITY);
        for (i, v) in self.h_v_vec.iter().enumerate() {
            let mag = v.norm_sqr();
            if mag > best.1 {
                best = (i, mag);
            }
        }
        best.0 + 1
    }
}

/// Transmit array response: (1/sqrt(N)) [1, e^{j pi sin t}, ..., e^{j (N-1) pi sin t}].
pub fn array_response_tx(theta: f64, n_tx: usize) -> DVector<Complex64> {
    steering(theta, n_tx)
}

/// Receive array response; same ULA construction with N_R elements.
pub fn array_response_rx(phi: f64, n_rx: usize) -> DVector<Complex64> {
    steering(phi, n_rx)
}

fn steering(angle: f64, n: usize) -> DVector<Complex64> {
    let norm = 1.0 / (n as f64).sqrt();
    let step = PI * angle.sin();
    DVector::from_fn(n, |i, _| Complex64::from_polar(norm, step * i as f64))
}

/// Quantized angle grid: sin values uniformly spaced over [-1, 1 - 2/n].
pub fn quantized_grid(n: usize) -> Vec<f64> {
    (1..=n)
        .map(|c| (2.0 * (c - 1) as f64 / n as f64 - 1.0).asin())
        .collect()
}

/// Unitary DFT matrix whose column c is the array response at grid angle c.
pub fn dft_matrix(n: usize) -> DMatrix<Complex64> {
    let grid = quantized_grid(n);
    let mut f = DMatrix::<Complex64>::zeros(n, n);
    for (c, &angle) in grid.iter().enumerate() {
        f.set_column(c, &steering(angle, n));
    }
    f
}

/// Column-major flat-index arithmetic between h_v positions and
/// (transmit grid column, receive grid row) pairs. All indices 1-based.
#[derive(Debug, Clone, Copy)]
pub struct VecIndexMap {
    n_tx: usize,
    n_rx: usize,
}

impl VecIndexMap {
    pub fn new(n_tx: usize, n_rx: usize) -> Self {
        VecIndexMap { n_tx, n_rx }
    }

    /// Flat index of virtual-channel position (receive row, transmit column).
    pub fn to_flat(&self, rx_row: usize, tx_col: usize) -> Result<usize, ChannelError> {
        if rx_row < 1 || rx_row > self.n_rx {
            return Err(ChannelError::IndexOutOfRange {
                index: rx_row,
                max: self.n_rx,
            });
        }
        if tx_col < 1 || tx_col > self.n_tx {
            return Err(ChannelError::IndexOutOfRange {
                index: tx_col,
                max: self.n_tx,
            });
        }
        Ok((tx_col - 1) * self.n_rx + rx_row)
    }

    /// Splits a flat index into (transmit column, receive row).
    pub fn from_flat(&self, eps: usize) -> Result<(usize, usize), ChannelError> {
        let max = self.n_tx * self.n_rx;
        if eps < 1 || eps > max {
            return Err(ChannelError::IndexOutOfRange { index: eps, max });
        }
        let eps_w = (eps - 1) / self.n_rx + 1;
        let eps_g = (eps - 1) % self.n_rx + 1;
        Ok((eps_w, eps_g))
    }
}

/// Draws a random channel realization: gains are circularly-symmetric unit
/// variance complex Gaussians; angles are uniform over the grid (with
/// distinct transmit/receive pairs per path) or uniform over [-pi/2, pi/2].
pub fn sample_channel<R: Rng>(
    cfg: &SystemConfig,
    grid_mode: GridMode,
    rng: &mut R,
) -> Result<Channel, ChannelError> {
    ChannelSampler::new(cfg.clone(), grid_mode)?.sample(rng)
}

/// Channel sampler with cached DFT matrices for Monte Carlo loops.
#[derive(Debug, Clone)]
pub struct ChannelSampler {
    cfg: SystemConfig,
    grid_mode: GridMode,
    grid_tx: Vec<f64>,
    grid_rx: Vec<f64>,
    f_tx: DMatrix<Complex64>,
    f_rx: DMatrix<Complex64>,
}

impl ChannelSampler {
    pub fn new(cfg: SystemConfig, grid_mode: GridMode) -> Result<Self, ChannelError> {
        if grid_mode == GridMode::On && cfg.n_paths > cfg.n_tx * cfg.n_rx {
            return Err(ChannelError::InvalidConfig(format!(
                "{} paths cannot occupy distinct grid pairs on a {}x{} grid",
                cfg.n_paths, cfg.n_tx, cfg.n_rx
            )));
        }
        Ok(ChannelSampler {
            grid_tx: quantized_grid(cfg.n_tx),
            grid_rx: quantized_grid(cfg.n_rx),
            f_tx: dft_matrix(cfg.n_tx),
            f_rx: dft_matrix(cfg.n_rx),
            cfg,
            grid_mode,
        })
    }

    pub fn config(&self) -> &SystemConfig {
        &self.cfg
    }

    pub fn f_tx(&self) -> &DMatrix<Complex64> {
        &self.f_tx
    }

    pub fn f_rx(&self) -> &DMatrix<Complex64> {
        &self.f_rx
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Channel, ChannelError> {
        let l = self.cfg.n_paths;
        let mut aod = Vec::with_capacity(l);
        let mut aoa = Vec::with_capacity(l);
        let mut gains = Vec::with_capacity(l);
        let mut used_pairs: Vec<(usize, usize)> = Vec::with_capacity(l);
        for _ in 0..l {
            match self.grid_mode {
                GridMode::On => loop {
                    let c1 = rng.gen_range(0..self.cfg.n_tx);
                    let c2 = rng.gen_range(0..self.cfg.n_rx);
                    if !used_pairs.contains(&(c1, c2)) {
                        used_pairs.push((c1, c2));
                        aod.push(self.grid_tx[c1]);
                        aoa.push(self.grid_rx[c2]);
                        break;
                    }
                },
                GridMode::Off => {
                    aod.push(rng.gen_range(-FRAC_PI_2..FRAC_PI_2));
                    aoa.push(rng.gen_range(-FRAC_PI_2..FRAC_PI_2));
                }
            }
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            gains.push(Complex64::new(re, im) * Complex64::from(0.5f64.sqrt()));
        }
        Channel::from_paths_with(&self.cfg, PathSet { aod, aoa, gains }, &self.f_tx, &self.f_rx)
    }
}
