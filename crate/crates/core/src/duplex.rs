//! Half-duplex baseline and full- versus half-duplex region tests.
//!
//! A full-duplex frame serves DL and UL at once but spends `tau_fd` pilot
//! symbols; the half-duplex baseline splits the data time between links and
//! spends `tau_hd = tau_uu + tau_ud`. Full duplex is preferable on a link
//! when `2 (1 - tau_fd / T) sum R_fd >= (1 - tau_hd / T) sum R_hd`.

use serde::{Deserialize, Serialize};

use crate::config::{Scenario, SystemConfig};
use crate::error::{validation, Error, Result};
use crate::estimation::Scheme;
use crate::rate::{analytic_rate, profile_for, simulate, AnalyticInputs, Combo, Duplex, Link, McRequest, RateReport, SinrBreakdown};
use crate::transceivers::FilterKind;

/// Pilot overheads of the two duplex modes within one coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverheadModel {
    pub scheme: Scheme,
    pub tau_si: usize,
    pub tau_uu: usize,
    pub tau_ud: usize,
    pub tau_fd: usize,
    pub tau_hd: usize,
    /// Symbols per coherence block, `T`.
    pub total: usize,
    /// Seconds per symbol, when known.
    pub t_s: Option<f64>,
}

impl OverheadModel {
    pub fn new(config: &SystemConfig, scheme: Scheme) -> Result<Self> {
        let tau_fd = match scheme {
            Scheme::NonSimultaneous => config.tau_si + config.tau_uu + config.tau_ud,
            Scheme::Simultaneous => config.tau_max() + config.tau_ud,
        };
        let model = OverheadModel {
            scheme,
            tau_si: config.tau_si,
            tau_uu: config.tau_uu,
            tau_ud: config.tau_ud,
            tau_fd,
            tau_hd: config.tau_uu + config.tau_ud,
            total: config.total_symbols,
            t_s: config.symbol_duration_s,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_total(mut self, total: usize) -> Result<Self> {
        self.total = total;
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        if self.tau_fd == 0 || self.tau_fd >= self.total {
            return Err(validation(format!("0 < tau_fd < T violated (tau_fd = {}, T = {})", self.tau_fd, self.total)));
        }
        if self.tau_hd == 0 || self.tau_hd >= self.total {
            return Err(validation(format!("0 < tau_hd < T violated (tau_hd = {}, T = {})", self.tau_hd, self.total)));
        }
        Ok(())
    }

    fn tau_max(&self) -> usize {
        self.tau_si.max(self.tau_uu)
    }

    /// Data-time fractions `(2 (1 - tau_fd / T), 1 - tau_hd / T)`.
    pub fn factors(&self) -> (f64, f64) {
        let t = self.total as f64;
        (2.0 * (1.0 - self.tau_fd as f64 / t), 1.0 - self.tau_hd as f64 / t)
    }
}

/// How a rate is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    MonteCarlo { trials: usize },
    Analytic,
}

/// Half-duplex rate: separate DL and UL pilot slots, no SI training and no
/// terms caused by simultaneous transmission and reception.
///
/// Monte-Carlo runs share the profile and all draws with a full-duplex run
/// of the same seed.
pub fn half_duplex_rate(
    config: &SystemConfig,
    scheme: Scheme,
    scenario: Scenario,
    link: Link,
    filter: FilterKind,
    evaluation: Evaluation,
    seed: u64,
) -> Result<RateReport> {
    match evaluation {
        Evaluation::MonteCarlo { trials } => {
            let combo = Combo { scenario, link, filter, duplex: Duplex::Half };
            Ok(simulate(&McRequest::new(config.clone(), scheme, vec![combo], trials, seed))?.remove(0))
        }
        Evaluation::Analytic => {
            let profile = profile_for(config, seed)?;
            let inp = AnalyticInputs::new(config, &profile, scheme)?;
            analytic_rate(&inp, scenario, link, filter, Duplex::Half)
        }
    }
}

/// Minimum number of symbols per coherence block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Threshold {
    Finite(f64),
    /// Full duplex cannot win on some UL user for any block length.
    NoFiniteThreshold,
}

impl Threshold {
    pub fn symbols(self) -> Option<f64> {
        match self {
            Threshold::Finite(t) => Some(t),
            Threshold::NoFiniteThreshold => None,
        }
    }
}

/// Per-user quantities the interference bounds are stated in.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UserPowers {
    /// Full-duplex desired power.
    pub s_fd: f64,
    /// Interference and noise already present in half duplex.
    pub i_base: f64,
    /// Interference added by full-duplex operation.
    pub i_fd: f64,
    pub sinr_fd: f64,
    pub sinr_hd: f64,
}

impl UserPowers {
    pub fn from_breakdowns(fd: &SinrBreakdown, hd: &SinrBreakdown) -> Self {
        let i_base = hd.terms.total();
        UserPowers {
            s_fd: fd.desired,
            i_base,
            i_fd: (fd.terms.total() - i_base).max(0.0),
            sinr_fd: fd.sinr,
            sinr_hd: hd.sinr,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaInputs {
    pub dl: Vec<UserPowers>,
    pub ul: Vec<UserPowers>,
}

impl LemmaInputs {
    pub fn from_reports(fd_dl: &RateReport, fd_ul: &RateReport, hd_dl: &RateReport, hd_ul: &RateReport) -> Self {
        let pair = |fd: &RateReport, hd: &RateReport| -> Vec<UserPowers> {
            fd.breakdown_means.iter().zip(&hd.breakdown_means).map(|(f, h)| UserPowers::from_breakdowns(f, h)).collect()
        };
        LemmaInputs { dl: pair(fd_dl, hd_dl), ul: pair(fd_ul, hd_ul) }
    }
}

/// Largest tolerable full-duplex interference per user and the shortest
/// coherence block for which full duplex can win.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LemmaBounds {
    pub max_i_fd_dl: Vec<f64>,
    pub max_i_fd_ul: Vec<f64>,
    /// Minimum `T` in symbols.
    pub t_min: Threshold,
    /// Minimum coherence time in seconds, when the symbol duration is known.
    pub t_cohe_min_s: Option<f64>,
}

impl LemmaBounds {
    fn t_ok(&self, total: usize, margin: f64) -> bool {
        match self.t_min {
            Threshold::Finite(t) => total as f64 >= (1.0 + margin) * t,
            Threshold::NoFiniteThreshold => false,
        }
    }

    /// True when `T` clears the threshold and every DL user's FD
    /// interference is at most `(1 - margin)` of its bound, both relative.
    pub fn dl_satisfied(&self, inputs: &LemmaInputs, total: usize, margin: f64) -> bool {
        self.t_ok(total, margin) && within(&self.max_i_fd_dl, &inputs.dl, margin)
    }

    pub fn ul_satisfied(&self, inputs: &LemmaInputs, total: usize, margin: f64) -> bool {
        self.t_ok(total, margin) && within(&self.max_i_fd_ul, &inputs.ul, margin)
    }

    pub fn satisfied(&self, inputs: &LemmaInputs, total: usize, margin: f64) -> bool {
        self.dl_satisfied(inputs, total, margin) && self.ul_satisfied(inputs, total, margin)
    }
}

fn within(bounds: &[f64], users: &[UserPowers], margin: f64) -> bool {
    bounds.iter().zip(users).all(|(b, u)| *b > 0.0 && u.i_fd <= (1.0 - margin) * b)
}

/// Threshold on `T` from the per-user UL condition of the simultaneous
/// scheme: `max_k (2 tau_fd x_k - tau_hd y_k) / (2 x_k - y_k)` with
/// `x = SINR_fd`, `y = SINR_hd`.
pub fn ul_block_threshold(tau_fd: f64, tau_hd: f64, ul: &[UserPowers]) -> Threshold {
    let mut worst = f64::NEG_INFINITY;
    for u in ul {
        let den = 2.0 * u.sinr_fd - u.sinr_hd;
        if den <= 0.0 {
            return Threshold::NoFiniteThreshold;
        }
        worst = worst.max((2.0 * tau_fd * u.sinr_fd - tau_hd * u.sinr_hd) / den);
    }
    Threshold::Finite(worst)
}

/// Interference bounds and coherence threshold for a pilot scheme.
///
/// Each link's half-duplex overhead is its own pilot slot (`tau_ud` for DL,
/// `tau_uu` for UL); the UL block threshold of the simultaneous scheme uses
/// the combined `tau_hd`.
pub fn lemma_bounds(overheads: &OverheadModel, inputs: &LemmaInputs) -> LemmaBounds {
    let t = overheads.total as f64;
    let (tau_ud, tau_uu) = (overheads.tau_ud as f64, overheads.tau_uu as f64);
    let tau_fd = overheads.tau_fd as f64;
    let coef = |tau_link: f64| (t - 2.0 * tau_fd + tau_link) / (t - tau_link);
    let max_i_fd_dl = inputs.dl.iter().map(|u| coef(tau_ud) * u.i_base).collect();
    let (max_i_fd_ul, t_min) = match overheads.scheme {
        Scheme::NonSimultaneous => {
            let si = overheads.tau_si as f64;
            let t_min = (2.0 * (si + tau_uu) + tau_ud).max(2.0 * (si + tau_ud) + tau_uu);
            (inputs.ul.iter().map(|u| coef(tau_uu) * u.i_base).collect(), Threshold::Finite(t_min))
        }
        Scheme::Simultaneous => {
            let bounds = inputs
                .ul
                .iter()
                .map(|u| 2.0 * (t - tau_fd) * u.s_fd / ((t - tau_uu) * u.sinr_hd) - u.i_base)
                .collect();
            let base = 2.0 * overheads.tau_max() as f64 + tau_ud;
            let t_min = match ul_block_threshold(tau_fd, overheads.tau_hd as f64, &inputs.ul) {
                Threshold::Finite(x) => Threshold::Finite(base.max(x)),
                Threshold::NoFiniteThreshold => Threshold::NoFiniteThreshold,
            };
            (bounds, t_min)
        }
    };
    let t_cohe_min_s = match (t_min, overheads.t_s) {
        (Threshold::Finite(x), Some(ts)) => Some(x * ts),
        _ => None,
    };
    LemmaBounds { max_i_fd_dl, max_i_fd_ul, t_min, t_cohe_min_s }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegionVerdict {
    pub dl_holds: bool,
    pub ul_holds: bool,
    pub joint_holds: bool,
    /// Left minus right side of each inequality, bps/Hz.
    pub dl_margin: f64,
    pub ul_margin: f64,
    pub joint_margin: f64,
    pub t_cohe_min_s: Option<f64>,
    pub t_min: Threshold,
    pub max_tolerable_dl: Vec<f64>,
    pub max_tolerable_ul: Vec<f64>,
}

fn expect(report: &RateReport, link: Link, duplex: Duplex, what: &str) -> Result<()> {
    if report.link != link || report.duplex != duplex {
        return Err(Error::Contract(format!(
            "{what} must be a {} {} report, got {} {}",
            duplex.label(),
            link,
            report.duplex.label(),
            report.link
        )));
    }
    Ok(())
}

/// Evaluates the per-link and joint full- versus half-duplex conditions.
pub fn reliable_region_check(
    fd_dl: &RateReport,
    fd_ul: &RateReport,
    hd_dl: &RateReport,
    hd_ul: &RateReport,
    overheads: &OverheadModel,
) -> Result<RegionVerdict> {
    expect(fd_dl, Link::DL, Duplex::Full, "fd_dl")?;
    expect(fd_ul, Link::UL, Duplex::Full, "fd_ul")?;
    expect(hd_dl, Link::DL, Duplex::Half, "hd_dl")?;
    expect(hd_ul, Link::UL, Duplex::Half, "hd_ul")?;
    let fp = fd_dl.config_fingerprint;
    if [fd_ul, hd_dl, hd_ul].iter().any(|r| r.config_fingerprint != fp) {
        return Err(Error::Contract("reports come from different configurations".into()));
    }
    if [fd_ul, hd_dl, hd_ul].iter().any(|r| r.scenario != fd_dl.scenario || r.filter != fd_dl.filter) {
        return Err(Error::Contract("reports mix scenarios or filters".into()));
    }
    if fd_ul.scheme != fd_dl.scheme || fd_dl.scheme != overheads.scheme {
        return Err(Error::Contract("reports and overheads use different pilot schemes".into()));
    }
    let (a, b) = overheads.factors();
    let dl_margin = a * fd_dl.sum_rate - b * hd_dl.sum_rate;
    let ul_margin = a * fd_ul.sum_rate - b * hd_ul.sum_rate;
    let joint_margin = a * (fd_dl.sum_rate + fd_ul.sum_rate) - b * (hd_dl.sum_rate + hd_ul.sum_rate);
    let lemma = lemma_bounds(overheads, &LemmaInputs::from_reports(fd_dl, fd_ul, hd_dl, hd_ul));
    Ok(RegionVerdict {
        dl_holds: dl_margin >= 0.0,
        ul_holds: ul_margin >= 0.0,
        joint_holds: joint_margin >= 0.0,
        dl_margin,
        ul_margin,
        joint_margin,
        t_cohe_min_s: lemma.t_cohe_min_s,
        t_min: lemma.t_min,
        max_tolerable_dl: lemma.max_i_fd_dl,
        max_tolerable_ul: lemma.max_i_fd_ul,
    })
}

/// The four analytic reports of one scenario and filter, FD and HD for both
/// links.
#[derive(Debug, Clone)]
pub struct DuplexReports {
    pub fd_dl: RateReport,
    pub fd_ul: RateReport,
    pub hd_dl: RateReport,
    pub hd_ul: RateReport,
}

impl DuplexReports {
    pub fn analytic(inp: &AnalyticInputs, scenario: Scenario, filter: FilterKind) -> Result<Self> {
        let r = |link, duplex| analytic_rate(inp, scenario, link, filter, duplex);
        Ok(DuplexReports {
            fd_dl: r(Link::DL, Duplex::Full)?,
            fd_ul: r(Link::UL, Duplex::Full)?,
            hd_dl: r(Link::DL, Duplex::Half)?,
            hd_ul: r(Link::UL, Duplex::Half)?,
        })
    }

    pub fn lemma_inputs(&self) -> LemmaInputs {
        LemmaInputs::from_reports(&self.fd_dl, &self.fd_ul, &self.hd_dl, &self.hd_ul)
    }

    pub fn verdict(&self, overheads: &OverheadModel) -> Result<RegionVerdict> {
        reliable_region_check(&self.fd_dl, &self.fd_ul, &self.hd_dl, &self.hd_ul, overheads)
    }

    /// `2 (sum R_fd) / (sum R_hd)` over both links, without pilot overhead.
    pub fn fd_hd_ratio(&self) -> f64 {
        fd_hd_ratio(&self.fd_dl, &self.fd_ul, &self.hd_dl, &self.hd_ul)
    }
}

/// Rate ratio of full to half duplex over both links, without overhead.
pub fn fd_hd_ratio(fd_dl: &RateReport, fd_ul: &RateReport, hd_dl: &RateReport, hd_ul: &RateReport) -> f64 {
    2.0 * (fd_dl.sum_rate + fd_ul.sum_rate) / (hd_dl.sum_rate + hd_ul.sum_rate)
}
