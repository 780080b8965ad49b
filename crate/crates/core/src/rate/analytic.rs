//! Closed-form ergodic rates from large-scale statistics.
//!
//! Each user's SINR is the ratio of the expected desired power to the sum
//! of expected interference powers, all scaled to the same per-symbol
//! units as the Monte-Carlo breakdown. Expectations over the estimated
//! channels treat distinct coefficients as independent.

use ndarray::{Array3, Array4, Axis};

use super::{Duplex, Link, RateReport, SinrBreakdown, Source, Terms};
use crate::channel::LargeScaleProfile;
use crate::config::{Budget, Scenario, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::{separate_ul_variances, variance_summary, Scheme, VarianceSummary};
use crate::transceivers::FilterKind;

/// Large-scale statistics feeding the closed forms.
#[derive(Debug, Clone)]
pub struct AnalyticInputs<'a> {
    pub config: &'a SystemConfig,
    pub profile: &'a LargeScaleProfile,
    pub scheme: Scheme,
    pub variances: VarianceSummary,
    /// UL variances of a separate UL slot, used in half duplex.
    pub hd_ul: (Array3<f64>, Array3<f64>),
}

fn mean_over_antennas(a: &Array4<f64>) -> Array3<f64> {
    a.mean_axis(Axis(3)).expect("m_rx >= 1")
}

impl<'a> AnalyticInputs<'a> {
    pub fn new(config: &'a SystemConfig, profile: &'a LargeScaleProfile, scheme: Scheme) -> Result<Self> {
        profile.check_shape(config)?;
        let variances = variance_summary(config, profile, scheme);
        let (hat, err) = separate_ul_variances(config, profile);
        Ok(AnalyticInputs {
            config,
            profile,
            scheme,
            variances,
            hd_ul: (mean_over_antennas(&hat), mean_over_antennas(&err)),
        })
    }
}

/// Everything the per-user formulas read, with UL variances already
/// averaged over Rx antennas and SI reduced to per-BS totals.
struct Stats<'a> {
    bud: Budget,
    n: usize,
    m_t: f64,
    m_r: f64,
    k_d: usize,
    k_u: usize,
    p: &'a LargeScaleProfile,
    dlh: &'a Array3<f64>,
    dle: &'a Array3<f64>,
    ulh: Array3<f64>,
    ule: Array3<f64>,
    si_gain: Vec<f64>,
    si_err: Vec<f64>,
    fd: bool,
    c_dl: f64,
    c_ul: f64,
}

fn exp2_m1(c: f64) -> f64 {
    (c * std::f64::consts::LN_2).exp_m1()
}

impl<'a> Stats<'a> {
    fn new(inp: &'a AnalyticInputs, duplex: Duplex) -> Self {
        let cfg = inp.config;
        let v = &inp.variances;
        let fd = duplex == Duplex::Full;
        let (ulh, ule) = if fd {
            (v.ul_hat_mean(), v.ul_err_mean())
        } else {
            inp.hd_ul.clone()
        };
        Stats {
            bud: cfg.budget(),
            n: cfg.n_cells,
            m_t: cfg.m_tx as f64,
            m_r: cfg.m_rx as f64,
            k_d: cfg.k_dl,
            k_u: cfg.k_ul,
            p: inp.profile,
            dlh: &v.dl_hat,
            dle: &v.dl_err,
            ulh,
            ule,
            si_gain: v.si.iter().map(|r| r.total_gain()).collect(),
            si_err: v.si.iter().map(|r| r.total_err()).collect(),
            fd,
            c_dl: cfg.c_dl_bpshz,
            c_ul: cfg.c_ul_bpshz,
        }
    }

    fn ue_ue(&self, i: usize, k: usize) -> f64 {
        if !self.fd {
            return 0.0;
        }
        let p = self.p;
        self.bud.p_u * (0..self.n).map(|j| (0..self.k_u).map(|q| p.d_ue[[i, j, q, k]]).sum::<f64>()).sum::<f64>()
    }

    fn symbol_power(&self) -> f64 {
        self.bud.p_d * (1.0 - (-self.c_dl).exp2())
    }

    /// `E||G_hat_dl||^2` of the network-wide DL estimate.
    fn dl_energy(&self) -> f64 {
        self.m_t * self.dlh.sum()
    }

    /// Expected precoder energy on the Tx array of BS `b` in the
    /// cooperative DL.
    fn coop_precoder_share(&self, filter: FilterKind, b: usize) -> f64 {
        match filter {
            FilterKind::MF => self.m_t * self.dlh.index_axis(Axis(0), b).sum() / self.dl_energy(),
            FilterKind::ZF => 1.0 / self.n as f64,
        }
    }

    fn check_zf(&self, filter: FilterKind, antennas: f64, streams: usize) -> Result<()> {
        if filter == FilterKind::ZF && antennas < streams as f64 {
            return Err(Error::Singular(format!("ZF needs at least {streams} antennas, got {antennas}")));
        }
        Ok(())
    }

    fn dl_noncoop(&self, filter: FilterKind) -> Result<Vec<SinrBreakdown>> {
        self.check_zf(filter, self.m_t, self.k_d)?;
        let b = &self.bud;
        let (m, kf) = (self.m_t, self.k_d as f64);
        let mut out = Vec::new();
        for i in 0..self.n {
            let s: f64 = (0..self.k_d).map(|l| self.dlh[[i, i, l]]).sum();
            for k in 0..self.k_d {
                let (h, e, g) = (self.dlh[[i, i, k]], self.dle[[i, i, k]], self.p.d_dl[[i, i, k]]);
                let inter = b.p_d * (0..self.n).filter(|&j| j != i).map(|j| self.p.d_dl[[j, i, k]]).sum::<f64>();
                let (desired, intra, est) = match filter {
                    FilterKind::MF => (b.p_d * h * h * (m + 1.0) / s, b.p_d * g * (s - h) / s, b.p_d * h * e / s),
                    FilterKind::ZF => (b.p_d * h * (m - kf + 1.0) / kf, b.p_d * e * (kf - 1.0) / kf, b.p_d * e / kf),
                };
                let t = Terms { intra, inter, est_error: est, ue_ue: self.ue_ue(i, k), noise: b.n0, ..Terms::default() };
                out.push(SinrBreakdown::new(desired, t));
            }
        }
        Ok(out)
    }

    fn dl_coop(&self, filter: FilterKind) -> Result<Vec<SinrBreakdown>> {
        let n = self.n;
        let nf = n as f64;
        self.check_zf(filter, self.m_t * nf, self.k_d * n)?;
        let b = &self.bud;
        let m = self.m_t;
        let p_s = self.symbol_power();
        let q = exp2_m1(self.c_dl);
        let energy = self.dl_energy();
        let sigma: Vec<f64> = (0..n).map(|j| p_s * self.coop_precoder_share(filter, j) / q).collect();
        let mut out = Vec::new();
        for i in 0..n {
            for k in 0..self.k_d {
                let quant: f64 = (0..n).map(|j| m * sigma[j] * self.p.d_dl[[j, i, k]]).sum();
                let mut t = Terms { ue_ue: self.ue_ue(i, k), quantization: quant, noise: b.n0, ..Terms::default() };
                let desired = match filter {
                    FilterKind::MF => {
                        let h: Vec<f64> = (0..n).map(|j| self.dlh[[j, i, k]]).collect();
                        let own: f64 = h.iter().map(|x| m * (m + 1.0) * x * x).sum();
                        let sum_h: f64 = h.iter().sum();
                        let cross = m * m * (sum_h * sum_h - h.iter().map(|x| x * x).sum::<f64>());
                        for c in 0..n {
                            for l in 0..self.k_d {
                                if (c, l) == (i, k) {
                                    continue;
                                }
                                let pw: f64 =
                                    (0..n).map(|j| m * self.p.d_dl[[j, i, k]] * self.dlh[[j, c, l]]).sum::<f64>() * p_s / energy;
                                if c == i {
                                    t.intra += pw;
                                } else {
                                    t.inter += pw;
                                }
                            }
                        }
                        t.est_error = p_s * (0..n).map(|j| m * self.dle[[j, i, k]] * h[j]).sum::<f64>() / energy;
                        p_s * (own + cross) / energy
                    }
                    FilterKind::ZF => {
                        let kn = (self.k_d * n) as f64;
                        let h_avg = (0..n).map(|j| self.dlh[[j, i, k]]).sum::<f64>() / nf;
                        let e_avg = (0..n).map(|j| self.dle[[j, i, k]]).sum::<f64>() / nf;
                        // Error leakage through the other streams' columns,
                        // split by the cell of the stream.
                        t.est_error = p_s * e_avg / kn;
                        t.intra = p_s * e_avg * (self.k_d as f64 - 1.0) / kn;
                        t.inter = p_s * e_avg * (kn - self.k_d as f64) / kn;
                        p_s * h_avg * (m * nf - kn + 1.0) / kn
                    }
                };
                out.push(SinrBreakdown::new(desired, t));
            }
        }
        Ok(out)
    }

    /// FD terms at a non-cooperative BS `i`, per unit detector norm.
    fn ul_fd_noncoop(&self, i: usize, t: &mut Terms) {
        if !self.fd {
            return;
        }
        let b = &self.bud;
        let area = self.m_t * self.m_r;
        t.bs_bs = b.p_d * (0..self.n).filter(|&j| j != i).map(|j| self.p.d_bs[[i, j]]).sum::<f64>();
        t.residual_si = b.p_d * self.si_err[i] / area;
        t.tx_noise = b.alpha * b.p_d * self.si_gain[i] / area;
        t.rx_distortion = b.beta * ((1.0 + b.alpha) * b.p_d * self.si_gain[i] / area + b.n0);
    }

    fn ul_noncoop(&self, filter: FilterKind) -> Result<Vec<SinrBreakdown>> {
        self.check_zf(filter, self.m_r, self.k_u)?;
        let b = &self.bud;
        let (m, kf) = (self.m_r, self.k_u as f64);
        let mut out = Vec::new();
        for i in 0..self.n {
            let inter =
                b.p_u * (0..self.n).filter(|&j| j != i).map(|j| (0..self.k_u).map(|l| self.p.d_ul[[i, j, l]]).sum::<f64>()).sum::<f64>();
            for k in 0..self.k_u {
                let h = self.ulh[[i, i, k]];
                let mut t = Terms { inter, noise: b.n0, ..Terms::default() };
                let desired = match filter {
                    FilterKind::MF => {
                        t.intra = b.p_u * (0..self.k_u).filter(|&l| l != k).map(|l| self.p.d_ul[[i, i, l]]).sum::<f64>();
                        t.est_error = b.p_u * self.ule[[i, i, k]];
                        b.p_u * m * h
                    }
                    FilterKind::ZF => {
                        t.intra = b.p_u * (0..self.k_u).filter(|&l| l != k).map(|l| self.ule[[i, i, l]]).sum::<f64>();
                        t.est_error = b.p_u * self.ule[[i, i, k]];
                        b.p_u * h * (m - kf + 1.0)
                    }
                };
                self.ul_fd_noncoop(i, &mut t);
                out.push(SinrBreakdown::new(desired, t));
            }
        }
        Ok(out)
    }

    /// Received energy per BS before UL fronthaul quantization.
    fn ul_coop_energy(&self, filter: FilterKind, p_s: f64) -> Vec<f64> {
        let b = &self.bud;
        let (n, m_r) = (self.n, self.m_r);
        (0..n)
            .map(|j| {
                let users: f64 = (0..n).map(|c| (0..self.k_u).map(|l| self.p.d_ul[[j, c, l]]).sum::<f64>()).sum();
                let mut e = b.p_u * m_r * users + m_r * b.n0;
                if self.fd {
                    let bs: f64 = (0..n)
                        .filter(|&o| o != j)
                        .map(|o| m_r * self.p.d_bs[[j, o]] * self.coop_precoder_share(filter, o))
                        .sum();
                    let si = self.si_gain[j] * self.coop_precoder_share(filter, j) / self.m_t;
                    e += p_s * (bs + si) + b.alpha * p_s * si + b.beta * ((1.0 + b.alpha) * p_s * si + m_r * b.n0);
                }
                e
            })
            .collect()
    }

    fn ul_coop(&self, filter: FilterKind) -> Result<Vec<SinrBreakdown>> {
        let n = self.n;
        let nf = n as f64;
        self.check_zf(filter, self.m_r * nf, self.k_u * n)?;
        let b = &self.bud;
        let m_r = self.m_r;
        let p_s = self.symbol_power();
        let q = exp2_m1(self.c_ul);
        let sigma: Vec<f64> = self.ul_coop_energy(filter, p_s).into_iter().map(|e| e / q).collect();
        // Per-BS precoded power on one Tx antenna.
        let row_pow: Vec<f64> = (0..n).map(|j| self.coop_precoder_share(filter, j) / self.m_t).collect();
        let mut out = Vec::new();
        for i in 0..n {
            for k in 0..self.k_u {
                let h: Vec<f64> = (0..n).map(|j| self.ulh[[j, i, k]]).collect();
                let sum_h: f64 = h.iter().sum();
                // Share of the detector energy on the Rx array of each BS.
                let weight: Vec<f64> = match filter {
                    FilterKind::MF => h.iter().map(|x| x / sum_h).collect(),
                    FilterKind::ZF => vec![1.0 / nf; n],
                };
                let mut t = Terms { noise: b.n0, ..Terms::default() };
                for c in 0..n {
                    for l in 0..self.k_u {
                        if (c, l) == (i, k) {
                            continue;
                        }
                        let pw = match filter {
                            FilterKind::MF => b.p_u * (0..n).map(|j| h[j] * self.p.d_ul[[j, c, l]]).sum::<f64>() / sum_h,
                            FilterKind::ZF => b.p_u * (0..n).map(|j| self.ule[[j, c, l]]).sum::<f64>() / nf,
                        };
                        if c == i {
                            t.intra += pw;
                        } else {
                            t.inter += pw;
                        }
                    }
                }
                t.est_error = match filter {
                    FilterKind::MF => b.p_u * (0..n).map(|j| h[j] * self.ule[[j, i, k]]).sum::<f64>() / sum_h,
                    FilterKind::ZF => b.p_u * (0..n).map(|j| self.ule[[j, i, k]]).sum::<f64>() / nf,
                };
                t.quantization = (0..n).map(|j| weight[j] * sigma[j]).sum();
                if self.fd {
                    for j in 0..n {
                        let w = weight[j];
                        let bs: f64 = (0..n)
                            .filter(|&o| o != j)
                            .map(|o| self.p.d_bs[[j, o]] * self.coop_precoder_share(filter, o))
                            .sum();
                        t.bs_bs += p_s * w * bs;
                        t.residual_si += p_s * w * self.si_err[j] * row_pow[j] / m_r;
                        t.tx_noise += b.alpha * p_s * w * self.si_gain[j] * row_pow[j] / m_r;
                        t.rx_distortion += b.beta * (1.0 + b.alpha) * p_s * w * self.si_gain[j] * row_pow[j] / m_r;
                    }
                    t.rx_distortion += b.beta * b.n0;
                }
                let desired = match filter {
                    FilterKind::MF => b.p_u * m_r * sum_h,
                    FilterKind::ZF => b.p_u * sum_h / nf * (m_r * nf - (self.k_u * n) as f64 + 1.0),
                };
                out.push(SinrBreakdown::new(desired, t));
            }
        }
        Ok(out)
    }
}

/// Per-user closed-form SINR breakdowns, ordered cell-major.
pub fn analytic_breakdown(
    inp: &AnalyticInputs,
    scenario: Scenario,
    link: Link,
    filter: FilterKind,
    duplex: Duplex,
) -> Result<Vec<SinrBreakdown>> {
    let st = Stats::new(inp, duplex);
    match (scenario, link) {
        (Scenario::NonCooperative, Link::DL) => st.dl_noncoop(filter),
        (Scenario::NonCooperative, Link::UL) => st.ul_noncoop(filter),
        (Scenario::Cooperative, Link::DL) => st.dl_coop(filter),
        (Scenario::Cooperative, Link::UL) => st.ul_coop(filter),
    }
}

/// UL fronthaul quantization variance per BS used by the closed forms.
pub(crate) fn coop_ul_sigma(inp: &AnalyticInputs, filter: FilterKind) -> Vec<f64> {
    let st = Stats::new(inp, Duplex::Full);
    let q = exp2_m1(st.c_ul);
    st.ul_coop_energy(filter, st.symbol_power()).into_iter().map(|e| e / q).collect()
}

/// Closed-form ergodic rate report.
pub fn analytic_rate(
    inp: &AnalyticInputs,
    scenario: Scenario,
    link: Link,
    filter: FilterKind,
    duplex: Duplex,
) -> Result<RateReport> {
    let breakdown = analytic_breakdown(inp, scenario, link, filter, duplex)?;
    let per_user_rate: Vec<f64> = breakdown.iter().map(SinrBreakdown::rate).collect();
    Ok(RateReport {
        sum_rate: super::pairwise_sum(&per_user_rate),
        per_user_stderr: vec![0.0; per_user_rate.len()],
        per_user_rate,
        sum_stderr: 0.0,
        link,
        scenario,
        filter,
        scheme: inp.scheme,
        duplex,
        source: Source::Analytic,
        trials: 0,
        breakdown_means: breakdown,
        config_fingerprint: inp.config.fingerprint(),
        trial_sums: Vec::new(),
    })
}
