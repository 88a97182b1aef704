//! Beam selection codebooks: turning sensing-matrix rows into measurement
//! schedules and multi-finger DFT beamformers.
//!
//! A measurement schedule is the ordered list of (transmit selection,
//! receive selection) pairs the base station and user sweep through. The
//! deterministic schedule is the full cross product of the two factor
//! matrices' rows; the random baseline redraws both selections uniformly for
//! every measurement while keeping the beam counts fixed.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::Rng;
use serde::Serialize;
use thiserror::Error;

use crate::sensing::{SensingError, SensingScaling, SparseBinaryMatrix};

#[derive(Debug, Error, PartialEq)]
pub enum CodebookError {
    #[error("selection weight {z} invalid for length {n}")]
    InvalidWeight { z: usize, n: usize },
    #[error("selection indices must be strictly increasing and within range")]
    InvalidSelection,
    #[error("schedule needs at least one measurement")]
    EmptySchedule,
    #[error("codebook source matrix is not uniform: {0}")]
    NonUniformWeights(String),
    #[error(transparent)]
    Sensing(#[from] SensingError),
}

/// Binary choice of DFT columns (narrow beams switched on), stored as sorted
/// 0-based grid indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SelectionVector {
    length: usize,
    ones: Vec<u32>,
}

impl SelectionVector {
    pub fn new(length: usize, ones: Vec<u32>) -> Result<Self, CodebookError> {
        if ones.is_empty() || ones.len() > length {
            return Err(CodebookError::InvalidWeight {
                z: ones.len(),
                n: length,
            });
        }
        let in_range = ones.last().map_or(true, |&m| (m as usize) < length);
        let increasing = ones.windows(2).all(|w| w[0] < w[1]);
        if !in_range || !increasing {
            return Err(CodebookError::InvalidSelection);
        }
        Ok(SelectionVector { length, ones })
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn ones(&self) -> &[u32] {
        &self.ones
    }

    pub fn weight(&self) -> usize {
        self.ones.len()
    }
}

/// Ordered transmit/receive selection pairs plus the normalization constants
/// shared by every measurement.
#[derive(Debug, Clone)]
pub struct MeasurementSchedule {
    tx: Vec<SelectionVector>,
    rx: Vec<SelectionVector>,
    scaling: SensingScaling,
}

impl MeasurementSchedule {
    pub fn k(&self) -> usize {
        self.tx.len()
    }

    pub fn tx(&self) -> &[SelectionVector] {
        &self.tx
    }

    pub fn rx(&self) -> &[SelectionVector] {
        &self.rx
    }

    pub fn scaling(&self) -> &SensingScaling {
        &self.scaling
    }

    pub fn n_tx(&self) -> usize {
        self.tx[0].length()
    }

    pub fn n_rx(&self) -> usize {
        self.rx[0].length()
    }

    /// The implied stacked binary sensing matrix: row t is the Kronecker row
    /// tx_t^T (x) rx_t^T over the column-major flat index a * N_R + b.
    pub fn stacked_matrix(&self) -> Result<SparseBinaryMatrix, CodebookError> {
        let n_rx = self.n_rx() as u32;
        let n_cols = self.n_tx() * self.n_rx();
        let rows = self
            .tx
            .iter()
            .zip(&self.rx)
            .map(|(t, r)| {
                let mut row = Vec::with_capacity(t.weight() * r.weight());
                for &a in t.ones() {
                    for &b in r.ones() {
                        row.push(a * n_rx + b);
                    }
                }
                row
            })
            .collect();
        Ok(SparseBinaryMatrix::from_row_support(self.k(), n_cols, rows)?)
    }

    pub fn export(&self) -> ScheduleExport {
        ScheduleExport {
            k: self.k(),
            z1: self.scaling.z1,
            z2: self.scaling.z2,
            tx: self.tx.iter().map(|s| s.ones.clone()).collect(),
            rx: self.rx.iter().map(|s| s.ones.clone()).collect(),
        }
    }
}

/// JSON export of a schedule. Field order is the wire format.
#[derive(Debug, Serialize)]
pub struct ScheduleExport {
    pub k: usize,
    pub z1: u64,
    pub z2: u64,
    pub tx: Vec<Vec<u32>>,
    pub rx: Vec<Vec<u32>>,
}

fn uniform_weight(values: &[usize], what: &str) -> Result<usize, CodebookError> {
    let first = values
        .first()
        .copied()
        .ok_or(CodebookError::EmptySchedule)?;
    if values.iter().any(|&w| w != first) {
        return Err(CodebookError::NonUniformWeights(format!(
            "{what} weights are not constant"
        )));
    }
    Ok(first)
}

/// Deterministic schedule: measurement t = i * rows(V) + j pairs row i of
/// U_b with row j of V_b, so each transmit pattern is repeated rows(V_b)
/// times consecutively and the stacked matrix equals the Kronecker product
/// row for row.
pub fn deterministic_schedule(
    u_b: &SparseBinaryMatrix,
    v_b: &SparseBinaryMatrix,
) -> Result<MeasurementSchedule, CodebookError> {
    let z1 = uniform_weight(&u_b.row_weights(), "transmit row")?;
    let z2 = uniform_weight(&v_b.row_weights(), "receive row")?;
    let p1 = uniform_weight(&u_b.col_weights(), "transmit column")?;
    let p2 = uniform_weight(&v_b.col_weights(), "receive column")?;
    let tx_rows: Vec<SelectionVector> = u_b
        .row_support()
        .iter()
        .map(|r| SelectionVector::new(u_b.n_cols(), r.clone()))
        .collect::<Result<_, _>>()?;
    let rx_rows: Vec<SelectionVector> = v_b
        .row_support()
        .iter()
        .map(|r| SelectionVector::new(v_b.n_cols(), r.clone()))
        .collect::<Result<_, _>>()?;
    let mut tx = Vec::with_capacity(tx_rows.len() * rx_rows.len());
    let mut rx = Vec::with_capacity(tx_rows.len() * rx_rows.len());
    for t in &tx_rows {
        for r in &rx_rows {
            tx.push(t.clone());
            rx.push(r.clone());
        }
    }
    Ok(MeasurementSchedule {
        tx,
        rx,
        scaling: SensingScaling::new(z1 as u64, z2 as u64, p1 as u64, p2 as u64),
    })
}

/// Random-permutation baseline: every measurement draws fresh uniform
/// z1- and z2-subsets of the beam indices, independently per measurement.
/// Column weights of the implied matrix vary per realization, so the scaling
/// records only the row normalization (p1 = p2 = 1 placeholders).
pub fn rdperm_schedule<R: Rng>(
    n_tx: usize,
    n_rx: usize,
    z1: usize,
    z2: usize,
    k: usize,
    rng: &mut R,
) -> Result<MeasurementSchedule, CodebookError> {
    if z1 < 1 || z1 > n_tx {
        return Err(CodebookError::InvalidWeight { z: z1, n: n_tx });
    }
    if z2 < 1 || z2 > n_rx {
        return Err(CodebookError::InvalidWeight { z: z2, n: n_rx });
    }
    if k == 0 {
        return Err(CodebookError::EmptySchedule);
    }
    let draw = |n: usize, z: usize, rng: &mut R| -> Result<SelectionVector, CodebookError> {
        let mut idx: Vec<u32> = rand::seq::index::sample(rng, n, z)
            .iter()
            .map(|i| i as u32)
            .collect();
        idx.sort_unstable();
        SelectionVector::new(n, idx)
    };
    let mut tx = Vec::with_capacity(k);
    let mut rx = Vec::with_capacity(k);
    for _ in 0..k {
        tx.push(draw(n_tx, z1, rng)?);
        rx.push(draw(n_rx, z2, rng)?);
    }
    Ok(MeasurementSchedule {
        tx,
        rx,
        scaling: SensingScaling::new(z1 as u64, z2 as u64, 1, 1),
    })
}

/// Unit-norm beamformer from a DFT matrix and a selection: the sum of the
/// selected orthonormal columns divided by sqrt(weight).
pub fn synthesize_beamformer(
    f: &DMatrix<Complex64>,
    sel: &SelectionVector,
) -> DVector<Complex64> {
    assert_eq!(f.ncols(), sel.length(), "selection length must match the DFT size");
    let mut w = DVector::<Complex64>::zeros(f.nrows());
    for &i in sel.ones() {
        w += f.column(i as usize);
    }
    w / Complex64::from((sel.weight() as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::dft_matrix;
    use crate::sensing::{devore_matrix, kron_rows, DeVoreParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn devore(p: u64, r: u32) -> SparseBinaryMatrix {
        devore_matrix(&DeVoreParams::new(p, r).unwrap()).unwrap()
    }

    #[test]
    fn deterministic_schedule_is_the_kronecker_cross_product() {
        let u = devore(3, 2);
        let v = devore(3, 2);
        let sched = deterministic_schedule(&u, &v).unwrap();
        assert_eq!(sched.k(), 81);
        assert_eq!(sched.scaling().z1, 9);
        assert_eq!(sched.scaling().z2, 9);
        // Each transmit row repeated rows(V) = 9 times consecutively.
        for t in 0..81 {
            assert_eq!(sched.tx()[t].ones(), u.row(t / 9));
            assert_eq!(sched.rx()[t].ones(), v.row(t % 9));
        }
        // Row-for-row identical to the Kronecker product.
        let stacked = sched.stacked_matrix().unwrap();
        assert_eq!(stacked, kron_rows(&u, &v).unwrap());
    }

    #[test]
    fn deterministic_schedule_measurement_count_at_n64() {
        let u = devore(4, 2);
        let sched = deterministic_schedule(&u, &u).unwrap();
        assert_eq!(sched.k(), 256);
        assert_eq!(sched.n_tx(), 64);
        assert_eq!(sched.n_rx(), 64);
    }

    #[test]
    fn single_transmit_row_degenerates_to_receive_sweep() {
        let u = SparseBinaryMatrix::from_row_support(1, 2, vec![vec![0, 1]]).unwrap();
        let v = devore(2, 1);
        let sched = deterministic_schedule(&u, &v).unwrap();
        assert_eq!(sched.k(), v.n_rows());
        for t in 0..sched.k() {
            assert_eq!(sched.tx()[t].ones(), &[0, 1]);
            assert_eq!(sched.rx()[t].ones(), v.row(t));
        }
    }

    #[test]
    fn rdperm_schedule_contract() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let sched = rdperm_schedule(27, 27, 9, 9, 81, &mut rng).unwrap();
        assert_eq!(sched.k(), 81);
        for t in 0..81 {
            assert_eq!(sched.tx()[t].weight(), 9);
            assert_eq!(sched.rx()[t].weight(), 9);
            assert!(sched.tx()[t].ones().windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn rdperm_full_weight_is_all_ones() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let sched = rdperm_schedule(4, 4, 4, 2, 3, &mut rng).unwrap();
        for t in 0..3 {
            assert_eq!(sched.tx()[t].ones(), &[0, 1, 2, 3]);
        }
    }

    #[test]
    fn rdperm_is_seed_deterministic() {
        let a = rdperm_schedule(27, 27, 9, 9, 81, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = rdperm_schedule(27, 27, 9, 9, 81, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a.tx(), b.tx());
        assert_eq!(a.rx(), b.rx());
        let c = rdperm_schedule(27, 27, 9, 9, 81, &mut ChaCha8Rng::seed_from_u64(10)).unwrap();
        assert_ne!(a.tx(), c.tx());
    }

    #[test]
    fn rdperm_rejects_bad_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(matches!(
            rdperm_schedule(4, 4, 5, 2, 1, &mut rng),
            Err(CodebookError::InvalidWeight { z: 5, n: 4 })
        ));
        assert!(matches!(
            rdperm_schedule(4, 4, 2, 0, 1, &mut rng),
            Err(CodebookError::InvalidWeight { z: 0, n: 4 })
        ));
    }

    #[test]
    fn beamformers_are_unit_norm() {
        let f = dft_matrix(4);
        // A single selected beam is the DFT column itself.
        let sel = SelectionVector::new(4, vec![2]).unwrap();
        let w = synthesize_beamformer(&f, &sel);
        assert!((&w - f.column(2)).norm() < 1e-15);
        // All beams on at n = 2.
        let f2 = dft_matrix(2);
        let sel = SelectionVector::new(2, vec![0, 1]).unwrap();
        let w = synthesize_beamformer(&f2, &sel);
        assert!((w.norm() - 1.0).abs() < 1e-12);
        // Every row of both schedule flavors synthesizes to unit norm.
        let f27 = dft_matrix(27);
        let det = deterministic_schedule(&devore(3, 2), &devore(3, 2)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let rnd = rdperm_schedule(27, 27, 9, 9, 81, &mut rng).unwrap();
        for sched in [&det, &rnd] {
            for t in (0..sched.k()).step_by(17) {
                let w = synthesize_beamformer(&f27, &sched.tx()[t]);
                let g = synthesize_beamformer(&f27, &sched.rx()[t]);
                assert!((w.norm() - 1.0).abs() < 1e-12);
                assert!((g.norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn schedule_export_key_order() {
        let sched = deterministic_schedule(&devore(2, 1), &devore(2, 1)).unwrap();
        let json = serde_json::to_string(&sched.export()).unwrap();
        let mut last = 0;
        for k in ["\"k\"", "\"z1\"", "\"z2\"", "\"tx\"", "\"rx\""] {
            let pos = json.find(k).unwrap();
            assert!(pos >= last);
            last = pos;
        }
        assert!(json.starts_with("{\"k\":16,\"z1\":2,\"z2\":2,"));
    }

    #[test]
    fn selection_vector_validation() {
        assert!(SelectionVector::new(4, vec![]).is_err());
        assert!(SelectionVector::new(4, vec![0, 0]).is_err());
        assert!(SelectionVector::new(4, vec![4]).is_err());
        assert!(SelectionVector::new(4, vec![1, 3]).is_ok());
    }
}
