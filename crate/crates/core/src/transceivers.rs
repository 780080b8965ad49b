//! Linear precoders and detectors, hardware impairments and fronthaul
//! quantization.

use std::fmt;

use ndarray::{Array1, Array2};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::error::{Error, Result};
use crate::estimation::ChannelEstimate;
use crate::linalg::{frobenius_sq, gram_solve, herm};
use crate::rng::complex_normal;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum FilterKind {
    MF,
    ZF,
}

impl FilterKind {
    pub fn label(self) -> &'static str {
        match self {
            FilterKind::MF => "MF",
            FilterKind::ZF => "ZF",
        }
    }
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// Unit Frobenius norm.
    Matrix,
    /// Every column has norm `1/sqrt(streams)`.
    Vector,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Precoder {
    /// `M x K`, one column per stream.
    pub f: Array2<Complex64>,
    pub kind: FilterKind,
    pub normalization: Normalization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Detector {
    /// `K x M`; row `k` is applied to the received vector of user `k`.
    pub w: Array2<Complex64>,
    pub kind: FilterKind,
}

/// Precoder for an estimated channel `g_hat` (`K x M`, one row per user).
pub fn precoder_for(g_hat: &Array2<Complex64>, kind: FilterKind) -> Result<Precoder> {
    let streams = g_hat.nrows();
    match kind {
        FilterKind::MF => {
            let norm = frobenius_sq(g_hat).sqrt();
            let f = if norm > 0.0 { herm(g_hat) / Complex64::from(norm) } else { herm(g_hat) };
            Ok(Precoder { f, kind, normalization: Normalization::Matrix })
        }
        FilterKind::ZF => {
            let mut f = herm(&gram_solve(g_hat)?);
            let target = 1.0 / (streams as f64).sqrt();
            for mut col in f.columns_mut() {
                let norm = col.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
                if norm == 0.0 {
                    return Err(Error::Singular("zero ZF precoding column".into()));
                }
                col *= Complex64::from(target / norm);
            }
            Ok(Precoder { f, kind, normalization: Normalization::Vector })
        }
    }
}

/// Detector for an estimated channel `g_hat` (`M x K`, one column per user).
pub fn detector_for(g_hat: &Array2<Complex64>, kind: FilterKind) -> Result<Detector> {
    let w = match kind {
        FilterKind::MF => herm(g_hat),
        FilterKind::ZF => gram_solve(&herm(g_hat))?,
    };
    Ok(Detector { w, kind })
}

/// Network-wide DL channel, `K N x M_t N`, from per-pair blocks
/// `blocks[b*N+c]` (`K x M_t`); row `c K + k` is user `(c, k)`.
pub fn joint_dl(n: usize, blocks: &[Array2<Complex64>]) -> Array2<Complex64> {
    let (k, m) = blocks[0].dim();
    let mut g = Array2::zeros((k * n, m * n));
    for b in 0..n {
        for c in 0..n {
            g.slice_mut(ndarray::s![c * k..(c + 1) * k, b * m..(b + 1) * m]).assign(&blocks[b * n + c]);
        }
    }
    g
}

/// Network-wide UL channel, `M_r N x K N`, from per-pair blocks
/// `blocks[b*N+c]` (`M_r x K`); column `c K + k` is user `(c, k)`.
pub fn joint_ul(n: usize, blocks: &[Array2<Complex64>]) -> Array2<Complex64> {
    let (m, k) = blocks[0].dim();
    let mut g = Array2::zeros((m * n, k * n));
    for b in 0..n {
        for c in 0..n {
            g.slice_mut(ndarray::s![b * m..(b + 1) * m, c * k..(c + 1) * k]).assign(&blocks[b * n + c]);
        }
    }
    g
}

/// Per-cell precoders (non-cooperative) or one joint precoder (cooperative).
pub fn build_precoder(est: &ChannelEstimate, kind: FilterKind, scenario: Scenario) -> Result<Vec<Precoder>> {
    match scenario {
        Scenario::NonCooperative => (0..est.n_cells).map(|i| precoder_for(est.dl(i, i), kind)).collect(),
        Scenario::Cooperative => Ok(vec![precoder_for(&joint_dl(est.n_cells, &est.dl), kind)?]),
    }
}

/// Per-cell detectors (non-cooperative) or one joint detector (cooperative).
pub fn build_detector(est: &ChannelEstimate, kind: FilterKind, scenario: Scenario) -> Result<Vec<Detector>> {
    match scenario {
        Scenario::NonCooperative => (0..est.n_cells).map(|i| detector_for(est.ul(i, i), kind)).collect(),
        Scenario::Cooperative => Ok(vec![detector_for(&joint_ul(est.n_cells, &est.ul), kind)?]),
    }
}

/// DL fronthaul quantization: noise variance per Tx antenna and the power
/// left for the data symbols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DlQuantization {
    pub noise_var: f64,
    pub symbol_power: f64,
}

fn check_capacity(capacity: f64) -> Result<()> {
    if capacity.is_nan() || capacity <= 0.0 {
        return Err(Error::Domain(format!("fronthaul capacity must be positive, got {capacity}")));
    }
    Ok(())
}

/// Symbol power `P_s = P_d (1 - 2^-C)` and noise
/// `sigma^2 = P_s E||x||^2 / (2^C - 1)`.
pub fn dl_quantization(capacity: f64, p_d: f64, precoded_energy: f64) -> Result<DlQuantization> {
    check_capacity(capacity)?;
    let symbol_power = p_d * (1.0 - (-capacity).exp2());
    Ok(DlQuantization { noise_var: symbol_power * precoded_energy / capacity.exp_m1_2(), symbol_power })
}

/// `sigma^2 = E||y||^2 / (2^C - 1)`.
pub fn ul_quantization(capacity: f64, received_energy: f64) -> Result<f64> {
    check_capacity(capacity)?;
    Ok(received_energy / capacity.exp_m1_2())
}

trait ExpM1Base2 {
    fn exp_m1_2(self) -> f64;
}

impl ExpM1Base2 for f64 {
    /// `2^x - 1` without cancellation for small `x`.
    fn exp_m1_2(self) -> f64 {
        (self * std::f64::consts::LN_2).exp_m1()
    }
}

/// Random hardware-impairment and quantization draws for one symbol time.
#[derive(Debug, Clone, PartialEq)]
pub struct ImpairmentDraws {
    /// Tx noise per stream.
    pub psi: Array1<Complex64>,
    /// Rx distortion per Rx antenna.
    pub delta: Array1<Complex64>,
    pub q_dl: Option<Array1<Complex64>>,
    pub q_ul: Option<Array1<Complex64>>,
}

/// Draws `psi_k ~ CN(0, alpha |s_k|^2)` and `delta_l ~ CN(0, beta |y_l|^2)`.
pub fn draw_impairments<R: Rng>(
    tx_symbols: &Array1<Complex64>,
    undistorted_rx: &Array1<Complex64>,
    alpha: f64,
    beta: f64,
    rng: &mut R,
) -> ImpairmentDraws {
    let scaled = |x: &Array1<Complex64>, level: f64, rng: &mut R| -> Array1<Complex64> {
        x.mapv(|v| {
            let z = complex_normal(rng);
            if level == 0.0 {
                Complex64::new(0.0, 0.0)
            } else {
                z * (level * v.norm_sqr()).sqrt()
            }
        })
    };
    let psi = scaled(tx_symbols, alpha, rng);
    let delta = scaled(undistorted_rx, beta, rng);
    ImpairmentDraws { psi, delta, q_dl: None, q_ul: None }
}

/// White Gaussian quantization noise of the given per-entry variance.
pub fn draw_quantization<R: Rng>(len: usize, var: f64, rng: &mut R) -> Array1<Complex64> {
    let sd = var.sqrt();
    Array1::from_shape_fn(len, |_| complex_normal(rng) * sd)
}
