//! SINR decompositions and ergodic rates.

mod analytic;
mod asymptotic;
mod monte_carlo;
mod sinr;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::config::Scenario;
use crate::estimation::Scheme;
use crate::transceivers::FilterKind;

pub use analytic::{analytic_breakdown, analytic_rate, AnalyticInputs};
pub use asymptotic::asymptotic_rate;
pub use monte_carlo::{monte_carlo_rate, profile_for, simulate, simulate_on, Combo, McRequest};
pub use sinr::{dl_sinr, instantaneous_sinr, ul_sinr, SinrInputs};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Link {
    DL,
    UL,
}

impl Link {
    pub fn label(self) -> &'static str {
        match self {
            Link::DL => "DL",
            Link::UL => "UL",
        }
    }
}

impl fmt::Display for Link {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Full duplex keeps every term; half duplex drops those caused by
/// simultaneous transmission and reception.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub enum Duplex {
    Full,
    Half,
}

impl Duplex {
    pub fn label(self) -> &'static str {
        match self {
            Duplex::Full => "FD",
            Duplex::Half => "HD",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Source {
    MonteCarlo,
    Analytic,
    Asymptotic,
}

/// Interference and noise powers seen by one user.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Terms {
    pub intra: f64,
    pub inter: f64,
    pub ue_ue: f64,
    pub residual_si: f64,
    pub bs_bs: f64,
    pub est_error: f64,
    pub tx_noise: f64,
    pub rx_distortion: f64,
    pub quantization: f64,
    pub noise: f64,
}

impl Terms {
    pub const LABELS: [&'static str; 10] = [
        "intra",
        "inter",
        "ue_ue",
        "residual_si",
        "bs_bs",
        "est_error",
        "tx_noise",
        "rx_distortion",
        "quantization",
        "noise",
    ];

    pub fn values(&self) -> [f64; 10] {
        [
            self.intra,
            self.inter,
            self.ue_ue,
            self.residual_si,
            self.bs_bs,
            self.est_error,
            self.tx_noise,
            self.rx_distortion,
            self.quantization,
            self.noise,
        ]
    }

    pub fn from_values(v: [f64; 10]) -> Self {
        Terms {
            intra: v[0],
            inter: v[1],
            ue_ue: v[2],
            residual_si: v[3],
            bs_bs: v[4],
            est_error: v[5],
            tx_noise: v[6],
            rx_distortion: v[7],
            quantization: v[8],
            noise: v[9],
        }
    }

    pub fn labeled(&self) -> impl Iterator<Item = (&'static str, f64)> {
        Self::LABELS.into_iter().zip(self.values())
    }

    pub fn total(&self) -> f64 {
        self.values().iter().sum()
    }

    /// Terms that exist only in full-duplex operation.
    pub fn fd_only(&self) -> f64 {
        self.ue_ue + self.residual_si + self.bs_bs + self.tx_noise + self.rx_distortion
    }

    /// Copy with the full-duplex-only terms set to zero.
    pub fn without_fd(&self) -> Self {
        Terms { ue_ue: 0.0, residual_si: 0.0, bs_bs: 0.0, tx_noise: 0.0, rx_distortion: 0.0, ..*self }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SinrBreakdown {
    pub desired: f64,
    pub terms: Terms,
    pub sinr: f64,
}

impl SinrBreakdown {
    pub fn new(desired: f64, terms: Terms) -> Self {
        let total = terms.total();
        let sinr = if desired == 0.0 {
            0.0
        } else if total == 0.0 {
            f64::INFINITY
        } else {
            desired / total
        };
        SinrBreakdown { desired, terms, sinr }
    }

    pub fn rate(&self) -> f64 {
        (1.0 + self.sinr).log2()
    }
}

/// Per-user and sum rates of one link.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateReport {
    /// Users ordered cell-major: index `c * K + k`.
    pub per_user_rate: Vec<f64>,
    /// Monte-Carlo standard error per user (zero for closed forms).
    pub per_user_stderr: Vec<f64>,
    pub sum_rate: f64,
    pub sum_stderr: f64,
    pub link: Link,
    pub scenario: Scenario,
    pub filter: FilterKind,
    pub scheme: Scheme,
    pub duplex: Duplex,
    pub source: Source,
    pub trials: usize,
    pub breakdown_means: Vec<SinrBreakdown>,
    pub config_fingerprint: u64,
    /// Per-trial sum rates of a Monte-Carlo run, in trial order.
    #[serde(skip)]
    pub trial_sums: Vec<f64>,
}

impl RateReport {
    pub fn users(&self) -> usize {
        self.per_user_rate.len()
    }
}

/// Pairwise (cascade) summation; deterministic for a fixed input order.
pub fn pairwise_sum(x: &[f64]) -> f64 {
    if x.len() <= 8 {
        return x.iter().sum();
    }
    let mid = x.len() / 2;
    pairwise_sum(&x[..mid]) + pairwise_sum(&x[mid..])
}
