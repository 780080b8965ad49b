//! Pilot design, simulated pilot phases and closed-form MMSE statistics.
//!
//! Two training schemes are supported. In the non-simultaneous scheme the
//! SI, UL and DL pilots use separate slots. In the simultaneous scheme SI
//! and UL pilots share one slot of length `tau_max`; the SI channel is
//! estimated first, reconstructed and subtracted, and the UL channel is
//! estimated from the residual.

use std::f64::consts::PI;
use std::fmt;

use ndarray::{s, Array2, Array3, Array4, Axis, Zip};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{Channels, LargeScaleProfile};
use crate::config::{Budget, SystemConfig};
use crate::error::{validation, Result};
use crate::rng::{complex_normal, substream, Family};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Scheme {
    #[serde(rename = "nSPT")]
    NonSimultaneous,
    #[serde(rename = "SPT")]
    Simultaneous,
}

impl Scheme {
    pub fn label(self) -> &'static str {
        match self {
            Scheme::NonSimultaneous => "nSPT",
            Scheme::Simultaneous => "SPT",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// How the simultaneous scheme's second stage sees the first-stage error.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SptResidual {
    /// The SI estimate is formed from an observation whose UL leakage is
    /// spatially white and independent of the UL channels estimated in the
    /// second stage, and the residual carries fresh noise and impairments.
    #[default]
    Independent,
    /// Subtract the SI reconstruction from the very same observation.
    ///
    /// With a full-rank SI pilot the MMSE SI estimate absorbs the UL pilot
    /// energy, so the residual UL pilot is attenuated to roughly the SI NMSE.
    Literal,
}

/// Orthonormal pilot matrices, one column per sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotSet {
    pub phi_uu: Array2<Complex64>,
    pub phi_ud: Array2<Complex64>,
    pub phi_si: Array2<Complex64>,
    pub scheme: Scheme,
    pub tau_max: usize,
}

/// First `cols` columns of the unitary DFT of size `tau`.
pub fn dft_columns(tau: usize, cols: usize) -> Array2<Complex64> {
    let norm = 1.0 / (tau as f64).sqrt();
    Array2::from_shape_fn((tau, cols), |(t, k)| {
        let phase = -2.0 * PI * ((t * k) % tau.max(1)) as f64 / tau as f64;
        Complex64::from_polar(norm, phase)
    })
}

/// Constant-amplitude chirp whose DFT is also constant amplitude.
fn chirp(tau: usize) -> Vec<Complex64> {
    (0..tau)
        .map(|t| {
            let n = if tau.is_multiple_of(2) { t * t } else { t * (t + 1) };
            Complex64::from_polar(1.0, PI * (n % (2 * tau)) as f64 / tau as f64)
        })
        .collect()
}

/// Builds the pilot matrices of a scheme.
///
/// Pilots are DFT columns. In the simultaneous scheme the UL pilots are
/// chirp-modulated DFT columns, so every UL pilot has inner product of
/// magnitude `1/sqrt(tau_max)` with every SI pilot.
pub fn make_pilots(config: &SystemConfig, scheme: Scheme) -> Result<PilotSet> {
    if config.tau_si < config.m_tx {
        return Err(validation("tau_si >= m_tx violated"));
    }
    if config.tau_uu < config.k_ul {
        return Err(validation("tau_uu >= k_ul violated"));
    }
    if config.tau_ud < config.k_dl {
        return Err(validation("tau_ud >= k_dl violated"));
    }
    let phi_ud = dft_columns(config.tau_ud, config.k_dl);
    match scheme {
        Scheme::NonSimultaneous => Ok(PilotSet {
            phi_uu: dft_columns(config.tau_uu, config.k_ul),
            phi_ud,
            phi_si: dft_columns(config.tau_si, config.m_tx),
            scheme,
            tau_max: config.tau_max(),
        }),
        Scheme::Simultaneous => {
            let tau = config.tau_max();
            let c = chirp(tau);
            let mut phi_uu = dft_columns(tau, config.k_ul);
            for (mut row, ct) in phi_uu.rows_mut().into_iter().zip(&c) {
                row *= *ct;
            }
            Ok(PilotSet { phi_uu, phi_ud, phi_si: dft_columns(tau, config.m_tx), scheme, tau_max: tau })
        }
    }
}

/// Closed-form variances of the MMSE estimates (`hat`) and errors (`err`).
///
/// Shapes: `dl_*[[b, c, k]]`, `ul_*[[b, c, k, l]]` (per Rx antenna `l`),
/// `si_*[b][[l, m]]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimateVariances {
    pub dl_hat: Array3<f64>,
    pub dl_err: Array3<f64>,
    pub ul_hat: Array4<f64>,
    pub ul_err: Array4<f64>,
    pub si_hat: Vec<Array2<f64>>,
    pub si_err: Vec<Array2<f64>>,
}

impl EstimateVariances {
    /// Perfect channel knowledge.
    pub fn perfect(profile: &LargeScaleProfile) -> Self {
        let m_r = profile.m_rx();
        let ul_hat = Array4::from_shape_fn(
            (profile.n_cells(), profile.n_cells(), profile.k_ul(), m_r),
            |(b, c, k, _)| profile.d_ul[[b, c, k]],
        );
        EstimateVariances {
            dl_hat: profile.d_dl.clone(),
            dl_err: Array3::zeros(profile.d_dl.raw_dim()),
            ul_err: Array4::zeros(ul_hat.raw_dim()),
            ul_hat,
            si_hat: vec![profile.d_si.dense(); profile.n_cells()],
            si_err: vec![Array2::zeros((profile.m_rx(), profile.m_tx())); profile.n_cells()],
        }
    }

    /// UL estimate variance averaged over Rx antennas, `[[b, c, k]]`.
    pub fn ul_hat_mean(&self) -> Array3<f64> {
        self.ul_hat.mean_axis(Axis(3)).expect("m_rx >= 1")
    }

    /// UL error variance averaged over Rx antennas, `[[b, c, k]]`.
    pub fn ul_err_mean(&self) -> Array3<f64> {
        self.ul_err.mean_axis(Axis(3)).expect("m_rx >= 1")
    }
}

/// MMSE statistics of one scalar observation `y = sqrt(tp) g + w`.
struct Mmse {
    hat: f64,
    err: f64,
    /// Estimator coefficient applied to the correlated observation.
    coef: f64,
}

fn mmse(tp: f64, gain: f64, denom: f64) -> Mmse {
    if denom <= 0.0 || gain == 0.0 {
        // Noise-free and interference-free observation of a zero gain.
        return Mmse { hat: gain, err: 0.0, coef: if tp > 0.0 { 1.0 / tp.sqrt() } else { 0.0 } };
    }
    Mmse {
        hat: tp * gain * gain / denom,
        err: gain * (denom - tp * gain) / denom,
        coef: tp.sqrt() * gain / denom,
    }
}

/// Everything needed to run a pilot phase: powers, pilots and the
/// closed-form statistics that fix the MMSE coefficients.
#[derive(Debug, Clone)]
pub struct PilotPhase {
    pub budget: Budget,
    pub pilots: PilotSet,
    pub variances: EstimateVariances,
    pub residual: SptResidual,
    dl_coef: Array3<f64>,
    ul_coef: Array4<f64>,
    si_coef: Vec<Array2<f64>>,
    /// UL pilot power per entry of the simultaneous observation, per BS.
    ul_leak: Vec<f64>,
    n_cells: usize,
    tau_si: usize,
    tau_uu: usize,
}

/// Closed-form estimate and error variances for a scheme.
pub fn estimate_variances(config: &SystemConfig, profile: &LargeScaleProfile, scheme: Scheme) -> EstimateVariances {
    Coefficients::compute(config, profile, scheme).variances
}

/// SI and UL pilot lengths of a scheme.
fn pilot_lengths(config: &SystemConfig, scheme: Scheme) -> (usize, usize) {
    match scheme {
        Scheme::NonSimultaneous => (config.tau_si, config.tau_uu),
        Scheme::Simultaneous => (config.tau_max(), config.tau_max()),
    }
}

/// UL pilot power leaking into the SI observation of BS `b`.
fn si_ul_leak(bud: &Budget, profile: &LargeScaleProfile, b: usize, scheme: Scheme) -> f64 {
    match scheme {
        Scheme::NonSimultaneous => 0.0,
        Scheme::Simultaneous => bud.p_u * profile.d_ul.slice(s![b, .., ..]).sum(),
    }
}

fn si_entry(bud: &Budget, tp_si: f64, gain: f64, row_sum: f64, leak: f64) -> Mmse {
    let d = leak + (1.0 + bud.beta) * (tp_si * gain + bud.alpha * bud.p_d * row_sum + bud.n0);
    mmse(tp_si, gain, d)
}

/// Interference left at one Rx antenna after SI subtraction in the
/// simultaneous scheme: SI error, Tx noise and Rx distortion.
fn spt_residual(bud: &Budget, row_gain: f64, row_err: f64) -> f64 {
    bud.p_d * row_err + bud.alpha * bud.p_d * row_gain + bud.beta * ((1.0 + bud.alpha) * bud.p_d * row_gain + bud.n0)
}

/// Per-Rx-antenna sums of SI gains and of their estimate/error variances.
#[derive(Debug, Clone, PartialEq)]
pub struct SiRows {
    pub gain: Vec<f64>,
    pub hat: Vec<f64>,
    pub err: Vec<f64>,
}

impl SiRows {
    pub fn total_gain(&self) -> f64 {
        self.gain.iter().sum()
    }
    pub fn total_err(&self) -> f64 {
        self.err.iter().sum()
    }
}

/// Variances in a form whose size is linear in the array size: access
/// links per coefficient and SI links as per-row sums.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceSummary {
    pub dl_hat: Array3<f64>,
    pub dl_err: Array3<f64>,
    pub ul_hat: Array4<f64>,
    pub ul_err: Array4<f64>,
    pub si: Vec<SiRows>,
}

impl VarianceSummary {
    pub fn ul_hat_mean(&self) -> Array3<f64> {
        self.ul_hat.mean_axis(Axis(3)).expect("m_rx >= 1")
    }
    pub fn ul_err_mean(&self) -> Array3<f64> {
        self.ul_err.mean_axis(Axis(3)).expect("m_rx >= 1")
    }
}

/// Closed-form variances without materializing per-pair SI tables.
pub fn variance_summary(config: &SystemConfig, profile: &LargeScaleProfile, scheme: Scheme) -> VarianceSummary {
    let bud = config.budget();
    let (tau_si, _) = pilot_lengths(config, scheme);
    let tp_si = tau_si as f64 * bud.p_d;
    let si_gain = &profile.d_si;
    let si: Vec<SiRows> = (0..profile.n_cells())
        .map(|b| {
            let leak = si_ul_leak(&bud, profile, b, scheme);
            let mut rows = SiRows { gain: Vec::new(), hat: Vec::new(), err: Vec::new() };
            for l in 0..si_gain.m_rx() {
                let row = si_gain.row_sum(l);
                let (mut hat, mut err) = (0.0, 0.0);
                for g in si_gain.row(l) {
                    let e = si_entry(&bud, tp_si, g, row, leak);
                    hat += e.hat;
                    err += e.err;
                }
                rows.gain.push(row);
                rows.hat.push(hat);
                rows.err.push(err);
            }
            rows
        })
        .collect();
    let (dl_hat, dl_err, _) = dl_statistics(config, profile);
    let (ul_hat, ul_err, _) = ul_statistics(config, profile, scheme, &si);
    VarianceSummary { dl_hat, dl_err, ul_hat, ul_err, si }
}

/// UL estimate and error variances of a separate UL pilot slot of length
/// `tau_uu`, as used in half-duplex frames.
pub fn separate_ul_variances(config: &SystemConfig, profile: &LargeScaleProfile) -> (Array4<f64>, Array4<f64>) {
    let (hat, err, _) = ul_statistics(config, profile, Scheme::NonSimultaneous, &[]);
    (hat, err)
}

type Tables3 = (Array3<f64>, Array3<f64>, Array3<f64>);
type Tables4 = (Array4<f64>, Array4<f64>, Array4<f64>);

fn dl_statistics(config: &SystemConfig, profile: &LargeScaleProfile) -> Tables3 {
    let bud = config.budget();
    let n = profile.n_cells();
    let tp_ud = config.tau_ud as f64 * bud.p_u;
    let shape = profile.d_dl.raw_dim();
    let (mut hat, mut err, mut coef) = (Array3::zeros(shape), Array3::zeros(shape), Array3::zeros(shape));
    for b in 0..n {
        for k in 0..profile.k_dl() {
            let d = tp_ud * (0..n).map(|c| profile.d_dl[[b, c, k]]).sum::<f64>() + bud.n0;
            for c in 0..n {
                let e = mmse(tp_ud, profile.d_dl[[b, c, k]], d);
                hat[[b, c, k]] = e.hat;
                err[[b, c, k]] = e.err;
                coef[[b, c, k]] = e.coef;
            }
        }
    }
    (hat, err, coef)
}

fn ul_statistics(config: &SystemConfig, profile: &LargeScaleProfile, scheme: Scheme, si: &[SiRows]) -> Tables4 {
    let bud = config.budget();
    let n = profile.n_cells();
    let (k_u, m_r) = (profile.k_ul(), profile.m_rx());
    let (_, tau_ul) = pilot_lengths(config, scheme);
    let tp_uu = tau_ul as f64 * bud.p_u;
    let shape = (n, n, k_u, m_r);
    let (mut hat, mut err, mut coef) = (Array4::zeros(shape), Array4::zeros(shape), Array4::zeros(shape));
    for b in 0..n {
        let extra: Vec<f64> = match scheme {
            Scheme::NonSimultaneous => vec![0.0; m_r],
            Scheme::Simultaneous => (0..m_r).map(|l| spt_residual(&bud, si[b].gain[l], si[b].err[l])).collect(),
        };
        for k in 0..k_u {
            let contam = tp_uu * (0..n).map(|c| profile.d_ul[[b, c, k]]).sum::<f64>();
            for (l, ex) in extra.iter().enumerate() {
                let d = contam + ex + bud.n0;
                for c in 0..n {
                    let e = mmse(tp_uu, profile.d_ul[[b, c, k]], d);
                    hat[[b, c, k, l]] = e.hat;
                    err[[b, c, k, l]] = e.err;
                    coef[[b, c, k, l]] = e.coef;
                }
            }
        }
    }
    (hat, err, coef)
}

struct Coefficients {
    variances: EstimateVariances,
    dl_coef: Array3<f64>,
    ul_coef: Array4<f64>,
    si_coef: Vec<Array2<f64>>,
}

impl Coefficients {
    fn compute(config: &SystemConfig, profile: &LargeScaleProfile, scheme: Scheme) -> Self {
        let bud = config.budget();
        let n = profile.n_cells();
        let (tau_si, _) = pilot_lengths(config, scheme);
        let tp_si = tau_si as f64 * bud.p_d;
        let rho = profile.d_si.dense();
        let row_sum = rho.sum_axis(Axis(1));
        let mut si_hat = Vec::with_capacity(n);
        let mut si_err = Vec::with_capacity(n);
        let mut si_coef = Vec::with_capacity(n);
        let mut rows = Vec::with_capacity(n);
        for b in 0..n {
            let leak = si_ul_leak(&bud, profile, b, scheme);
            let mut hat = Array2::zeros(rho.raw_dim());
            let mut err = Array2::zeros(rho.raw_dim());
            let mut coef = Array2::zeros(rho.raw_dim());
            for ((l, m), &g) in rho.indexed_iter() {
                let e = si_entry(&bud, tp_si, g, row_sum[l], leak);
                hat[[l, m]] = e.hat;
                err[[l, m]] = e.err;
                coef[[l, m]] = e.coef;
            }
            rows.push(SiRows {
                gain: row_sum.to_vec(),
                hat: hat.sum_axis(Axis(1)).to_vec(),
                err: err.sum_axis(Axis(1)).to_vec(),
            });
            si_hat.push(hat);
            si_err.push(err);
            si_coef.push(coef);
        }
        let (dl_hat, dl_err, dl_coef) = dl_statistics(config, profile);
        let (ul_hat, ul_err, ul_coef) = ul_statistics(config, profile, scheme, &rows);
        Coefficients {
            variances: EstimateVariances { dl_hat, dl_err, ul_hat, ul_err, si_hat, si_err },
            dl_coef,
            ul_coef,
            si_coef,
        }
    }
}

/// Per-coefficient normalized MSE, same shapes as [`EstimateVariances`].
#[derive(Debug, Clone, PartialEq)]
pub struct NmseTable {
    pub dl: Array3<f64>,
    pub ul: Array4<f64>,
    pub si: Vec<Array2<f64>>,
}

impl NmseTable {
    /// Mean SI NMSE over all BSs and antenna pairs.
    pub fn si_mean(&self) -> f64 {
        let total: f64 = self.si.iter().map(|s| s.sum()).sum();
        let count: usize = self.si.iter().map(|s| s.len()).sum();
        total / count as f64
    }
    pub fn ul_mean(&self) -> f64 {
        self.ul.mean().unwrap_or(0.0)
    }
    pub fn dl_mean(&self) -> f64 {
        self.dl.mean().unwrap_or(0.0)
    }
}

/// Normalized estimation error `E|g - g_hat|^2 / E|g|^2` per coefficient,
/// evaluated directly from the ratio form of the MMSE error.
pub fn nmse(config: &SystemConfig, profile: &LargeScaleProfile, scheme: Scheme) -> NmseTable {
    let bud = config.budget();
    let n = profile.n_cells();
    let (n0, alpha, beta) = (bud.n0, bud.alpha, bud.beta);
    let ratio = |num: f64, den: f64| if den > 0.0 { num / den } else { 0.0 };

    let tp_ud = config.tau_ud as f64 * bud.p_u;
    let dl = Array3::from_shape_fn(profile.d_dl.raw_dim(), |(b, c, k)| {
        let others: f64 = (0..n).filter(|&j| j != c).map(|j| profile.d_dl[[b, j, k]]).sum();
        let own = profile.d_dl[[b, c, k]];
        ratio(tp_ud * others + n0, tp_ud * (own + others) + n0)
    });

    let tau = pilot_lengths(config, scheme).0 as f64;
    let mut si = Vec::with_capacity(n);
    let rho = profile.d_si.dense();
    let row = rho.sum_axis(Axis(1));
    for b in 0..n {
        let leak = si_ul_leak(&bud, profile, b, scheme);
        si.push(Array2::from_shape_fn(rho.raw_dim(), |(l, m)| {
            let sig = tau * bud.p_d * rho[[l, m]];
            let imp = alpha * bud.p_d * row[l] + n0;
            ratio(beta * sig + (1.0 + beta) * imp + leak, (1.0 + beta) * (sig + imp) + leak)
        }));
    }

    let m_r = profile.m_rx();
    let tp_uu = pilot_lengths(config, scheme).1 as f64 * bud.p_u;
    let si_err = estimate_variances(config, profile, scheme).si_err;
    let ul = Array4::from_shape_fn((n, n, profile.k_ul(), m_r), |(b, c, k, l)| {
        let others: f64 = (0..n).filter(|&j| j != c).map(|j| profile.d_ul[[b, j, k]]).sum();
        let own = profile.d_ul[[b, c, k]];
        let residual = match scheme {
            Scheme::NonSimultaneous => 0.0,
            Scheme::Simultaneous => {
                let row_err: f64 = si_err[b].row(l).sum();
                spt_residual(&bud, row[l], row_err)
            }
        };
        ratio(tp_uu * others + residual + n0, tp_uu * (own + others) + residual + n0)
    });
    NmseTable { dl, ul, si }
}

/// MMSE channel estimates, same layout as [`Channels`]:
/// `dl[b*N+c]` is `K_DL x M_t`, `ul[b*N+c]` is `M_r x K_UL`, `si[b]` is
/// `M_r x M_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelEstimate {
    pub n_cells: usize,
    pub dl: Vec<Array2<Complex64>>,
    pub ul: Vec<Array2<Complex64>>,
    pub si: Vec<Array2<Complex64>>,
}

impl ChannelEstimate {
    /// Estimates equal to the true channels.
    pub fn perfect(ch: &Channels) -> Self {
        let n = ch.n_cells;
        ChannelEstimate {
            n_cells: n,
            dl: ch.g_dl.clone(),
            ul: ch.g_ul.clone(),
            si: (0..n).map(|b| ch.bs(b, b).clone()).collect(),
        }
    }
    pub fn dl(&self, b: usize, c: usize) -> &Array2<Complex64> {
        &self.dl[b * self.n_cells + c]
    }
    pub fn ul(&self, b: usize, c: usize) -> &Array2<Complex64> {
        &self.ul[b * self.n_cells + c]
    }
}

fn noise_matrix<R: Rng>(rng: &mut R, rows: usize, cols: usize, var: f64) -> Array2<Complex64> {
    let sd = var.sqrt();
    Array2::from_shape_fn((rows, cols), |_| complex_normal(rng) * sd)
}

/// Adds Rx distortion with per-entry variance `beta |y|^2`.
fn add_rx_distortion<R: Rng>(rng: &mut R, y: &mut Array2<Complex64>, undistorted: &Array2<Complex64>, beta: f64) {
    if beta == 0.0 {
        return;
    }
    Zip::from(y).and(undistorted).for_each(|o, u| {
        *o += complex_normal(rng) * (beta * u.norm_sqr()).sqrt();
    });
}

/// Tx-noise matrix with entries `CN(0, alpha |phi|^2)`.
fn tx_noise<R: Rng>(rng: &mut R, phi: &Array2<Complex64>, alpha: f64) -> Array2<Complex64> {
    phi.mapv(|p| complex_normal(rng) * (alpha * p.norm_sqr()).sqrt())
}

fn conj(a: &Array2<Complex64>) -> Array2<Complex64> {
    a.mapv(|z| z.conj())
}

impl PilotPhase {
    pub fn new(config: &SystemConfig, profile: &LargeScaleProfile, scheme: Scheme) -> Result<Self> {
        profile.check_shape(config)?;
        let pilots = make_pilots(config, scheme)?;
        let coefs = Coefficients::compute(config, profile, scheme);
        Ok(PilotPhase {
            budget: config.budget(),
            pilots,
            variances: coefs.variances,
            residual: SptResidual::default(),
            dl_coef: coefs.dl_coef,
            ul_coef: coefs.ul_coef,
            si_coef: coefs.si_coef,
            ul_leak: (0..config.n_cells).map(|b| si_ul_leak(&config.budget(), profile, b, Scheme::Simultaneous)).collect(),
            n_cells: config.n_cells,
            tau_si: config.tau_si,
            tau_uu: config.tau_uu,
        })
    }

    pub fn with_residual(mut self, residual: SptResidual) -> Self {
        self.residual = residual;
        self
    }

    pub fn scheme(&self) -> Scheme {
        self.pilots.scheme
    }

    /// Simulates the received pilot signals and forms MMSE estimates.
    pub fn run(&self, ch: &Channels, seed: u64) -> ChannelEstimate {
        let n = self.n_cells;
        let dl = self.estimate_dl(ch, seed);
        let (ul, si) = match self.pilots.scheme {
            Scheme::NonSimultaneous => {
                let si = (0..n).map(|b| self.estimate_si_separate(ch, b, seed)).collect();
                (self.estimate_ul_separate(ch, seed), si)
            }
            Scheme::Simultaneous => {
                let mut ul = vec![Array2::zeros((0, 0)); n * n];
                let mut si = Vec::with_capacity(n);
                for b in 0..n {
                    let (u, s) = self.estimate_simultaneous(ch, b, seed);
                    for (c, m) in u.into_iter().enumerate() {
                        ul[b * n + c] = m;
                    }
                    si.push(s);
                }
                (ul, si)
            }
        };
        ChannelEstimate { n_cells: n, dl, ul, si }
    }

    /// Only the access links, estimated as in a half-duplex frame
    /// (separate DL and UL slots, no SI training).
    pub fn run_access_only(&self, ch: &Channels, seed: u64) -> (Vec<Array2<Complex64>>, Vec<Array2<Complex64>>) {
        (self.estimate_dl(ch, seed), self.estimate_ul_separate(ch, seed))
    }

    /// DL channels from the DL users' pilots observed at each Tx array.
    fn estimate_dl(&self, ch: &Channels, seed: u64) -> Vec<Array2<Complex64>> {
        let n = self.n_cells;
        let phi = &self.pilots.phi_ud;
        let (tau, k_d) = phi.dim();
        let amp = Complex64::from((tau as f64 * self.budget.p_u).sqrt());
        let mut rng = substream(seed, 0, Family::PilotDl);
        let mut out = Vec::with_capacity(n * n);
        for b in 0..n {
            let m_t = ch.dl(b, 0).ncols();
            let mut y = noise_matrix(&mut rng, m_t, tau, self.budget.n0);
            for c in 0..n {
                // (K x M_t)^T (tau x K)^T
                y = y + ch.dl(b, c).t().dot(&phi.t()) * amp;
            }
            let corr = y.dot(&conj(phi)); // M_t x K
            for c in 0..n {
                let mut g = Array2::zeros((k_d, m_t));
                for k in 0..k_d {
                    let a = self.dl_coef[[b, c, k]];
                    for m in 0..m_t {
                        g[[k, m]] = corr[[m, k]] * a;
                    }
                }
                out.push(g);
            }
        }
        out
    }

    fn estimate_ul_separate(&self, ch: &Channels, seed: u64) -> Vec<Array2<Complex64>> {
        let n = self.n_cells;
        let phi = if self.pilots.scheme == Scheme::NonSimultaneous {
            self.pilots.phi_uu.clone()
        } else {
            dft_columns(self.tau_uu, self.pilots.phi_uu.ncols())
        };
        let (tau, k_u) = phi.dim();
        let amp = Complex64::from((tau as f64 * self.budget.p_u).sqrt());
        let mut rng = substream(seed, 0, Family::PilotUl);
        let mut out = Vec::with_capacity(n * n);
        for b in 0..n {
            let m_r = ch.ul(b, 0).nrows();
            let mut y = noise_matrix(&mut rng, m_r, tau, self.budget.n0);
            for c in 0..n {
                y = y + ch.ul(b, c).dot(&phi.t()) * amp;
            }
            let corr = y.dot(&conj(&phi)); // M_r x K
            for c in 0..n {
                out.push(self.scale_ul(&corr, b, c, k_u, if self.pilots.scheme == Scheme::NonSimultaneous {
                    None
                } else {
                    Some(tau)
                }));
            }
        }
        out
    }

    /// Applies the UL MMSE coefficients to a correlated observation.
    ///
    /// `separate_tau` requests coefficients of a separate-slot UL phase of
    /// that length, used when a simultaneous-scheme phase also needs a
    /// half-duplex reference estimate.
    fn scale_ul(&self, corr: &Array2<Complex64>, b: usize, c: usize, k_u: usize, separate_tau: Option<usize>) -> Array2<Complex64> {
        let m_r = corr.nrows();
        let mut g = Array2::zeros((m_r, k_u));
        for k in 0..k_u {
            let coef_for = |l: usize| -> f64 {
                match separate_tau {
                    None => self.ul_coef[[b, c, k, l]],
                    Some(tau) => self.separate_ul_coef(b, c, k, tau),
                }
            };
            for l in 0..m_r {
                g[[l, k]] = corr[[l, k]] * coef_for(l);
            }
        }
        g
    }

    fn separate_ul_coef(&self, b: usize, c: usize, k: usize, tau: usize) -> f64 {
        // Recover the gains from the stored hat/err decomposition.
        let gain = |j: usize| self.variances.ul_hat[[b, j, k, 0]] + self.variances.ul_err[[b, j, k, 0]];
        let tp = tau as f64 * self.budget.p_u;
        let d = tp * (0..self.n_cells).map(gain).sum::<f64>() + self.budget.n0;
        mmse(tp, gain(c), d).coef
    }

    fn estimate_si_separate(&self, ch: &Channels, b: usize, seed: u64) -> Array2<Complex64> {
        let phi = &self.pilots.phi_si;
        let tau = phi.nrows();
        debug_assert_eq!(tau, self.tau_si);
        let mut rng = substream(seed, b as u64, Family::PilotSi);
        let g = ch.bs(b, b);
        let amp = Complex64::from((tau as f64 * self.budget.p_d).sqrt());
        let psi = tx_noise(&mut rng, phi, self.budget.alpha);
        let clean = g.dot(&(phi + &psi).t()) * amp + noise_matrix(&mut rng, g.nrows(), tau, self.budget.n0);
        let mut y = clean.clone();
        add_rx_distortion(&mut rng, &mut y, &clean, self.budget.beta);
        let corr = y.dot(&conj(phi));
        corr * &self.si_coef[b]
    }

    /// Two-stage estimation at BS `b`: SI first, then UL from the residual.
    fn estimate_simultaneous(&self, ch: &Channels, b: usize, seed: u64) -> (Vec<Array2<Complex64>>, Array2<Complex64>) {
        let n = self.n_cells;
        let bud = &self.budget;
        let phi_si = &self.pilots.phi_si;
        let phi_uu = &self.pilots.phi_uu;
        let tau = self.pilots.tau_max;
        let g = ch.bs(b, b);
        let m_r = g.nrows();
        let k_u = phi_uu.ncols();
        let amp_d = Complex64::from((tau as f64 * bud.p_d).sqrt());
        let amp_u = Complex64::from((tau as f64 * bud.p_u).sqrt());

        let ul_signal = |chans: &[Array2<Complex64>]| -> Array2<Complex64> {
            let mut acc = Array2::<Complex64>::zeros((m_r, tau));
            for gu in chans {
                acc = acc + gu.dot(&phi_uu.t()) * amp_u;
            }
            acc
        };
        let true_ul = ul_signal(&(0..n).map(|c| ch.ul(b, c).clone()).collect::<Vec<_>>());

        let mut rng1 = substream(seed, b as u64, Family::PilotSptStage1);
        let si_pilot = g.dot(&phi_si.t());
        let psi1 = tx_noise(&mut rng1, phi_si, bud.alpha);
        let clean1 = (&si_pilot + &g.dot(&psi1.t())) * amp_d + noise_matrix(&mut rng1, m_r, tau, bud.n0);
        let mut y1 = clean1.clone();
        add_rx_distortion(&mut rng1, &mut y1, &clean1, bud.beta);
        match self.residual {
            SptResidual::Literal => y1 += &true_ul,
            SptResidual::Independent => {
                // White leakage with the UL pilot power per entry. A copy
                // with UL pilot structure would be rebuilt coherently on the
                // UL pilots by a full-rank SI reconstruction.
                let mut shadow_rng = substream(seed, b as u64, Family::PilotSptShadowUl);
                y1 = y1 + noise_matrix(&mut shadow_rng, m_r, tau, self.ul_leak[b]);
            }
        }
        let si_hat = y1.dot(&conj(phi_si)) * &self.si_coef[b];
        let reconstruction = si_hat.dot(&phi_si.t()) * amp_d;

        let residual = match self.residual {
            SptResidual::Literal => y1 - reconstruction,
            SptResidual::Independent => {
                let mut rng2 = substream(seed, b as u64, Family::PilotSptStage2);
                let psi2 = tx_noise(&mut rng2, phi_si, bud.alpha);
                let clean2 = (&si_pilot + &g.dot(&psi2.t())) * amp_d + noise_matrix(&mut rng2, m_r, tau, bud.n0);
                let mut y2 = clean2.clone();
                add_rx_distortion(&mut rng2, &mut y2, &clean2, bud.beta);
                y2 + true_ul - reconstruction
            }
        };
        let corr = residual.dot(&conj(phi_uu)); // M_r x K
        let ul = (0..n).map(|c| self.scale_ul(&corr, b, c, k_u, None)).collect();
        (ul, si_hat)
    }

}

/// Convenience wrapper: builds the pilot phase and runs it once.
pub fn run_pilot_phase(
    config: &SystemConfig,
    profile: &LargeScaleProfile,
    channels: &Channels,
    scheme: Scheme,
    seed: u64,
) -> Result<ChannelEstimate> {
    Ok(PilotPhase::new(config, profile, scheme)?.run(channels, seed))
}
