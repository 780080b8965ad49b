//! Large-array limits of the closed forms under `P_d = P_u = P_r / sqrt(M)`.
//!
//! Powers are normalized to the noise floor, so `P_r` enters as `P_r / n0`.
//! Terms that vanish with the scaled transmit power are dropped; the
//! estimate variances, and the fronthaul quantization levels, are those of
//! the supplied inputs.

use super::analytic::{coop_ul_sigma, AnalyticInputs};
use super::Link;
use crate::config::{dbm_to_watt, Scenario};
use crate::error::Result;
use crate::transceivers::FilterKind;

/// Limit sum rate over all users of the network, in bps/Hz.
pub fn asymptotic_rate(inp: &AnalyticInputs, scenario: Scenario, link: Link, filter: FilterKind) -> Result<f64> {
    let cfg = inp.config;
    let p = inp.profile;
    let v = &inp.variances;
    let n = cfg.n_cells;
    let nf = n as f64;
    let m = cfg.m_tx as f64;
    let sqrt_m = m.sqrt();
    let bud = cfg.budget();
    let pr = dbm_to_watt(cfg.p_ref_dbm) / bud.n0;
    let dlh = &v.dl_hat;
    let ulh = v.ul_hat_mean();
    let kf = cfg.k_dl as f64;
    let mut sinr = Vec::new();
    match (scenario, link) {
        (Scenario::NonCooperative, Link::DL) => {
            for i in 0..n {
                let s: f64 = (0..cfg.k_dl).map(|l| dlh[[i, i, l]]).sum();
                for k in 0..cfg.k_dl {
                    let h = dlh[[i, i, k]];
                    sinr.push(match filter {
                        FilterKind::MF => share(pr * h * h * sqrt_m, s),
                        FilterKind::ZF => pr * h * sqrt_m / kf,
                    });
                }
            }
        }
        (Scenario::NonCooperative, Link::UL) => {
            for i in 0..n {
                for k in 0..cfg.k_ul {
                    sinr.push(pr * ulh[[i, i, k]] * sqrt_m / (1.0 + bud.beta));
                }
            }
        }
        (Scenario::Cooperative, Link::DL) => {
            let keep = 1.0 - (-cfg.c_dl_bpshz).exp2();
            let q = (cfg.c_dl_bpshz * std::f64::consts::LN_2).exp_m1();
            // Quantization levels normalized by n0, with P_s = P_r keep / sqrt(M).
            let p_s = pr * keep / sqrt_m;
            let total_h = dlh.sum();
            for i in 0..n {
                for k in 0..cfg.k_dl {
                    let h: Vec<f64> = (0..n).map(|j| dlh[[j, i, k]]).collect();
                    let sum_h: f64 = h.iter().sum();
                    sinr.push(match filter {
                        FilterKind::MF => {
                            // Sum over ordered BS pairs of products, own pairs included.
                            let num = pr * keep * sum_h * sum_h * sqrt_m;
                            let quant: f64 = (0..n)
                                .map(|j| {
                                    let sigma = p_s * m * dlh.index_axis(ndarray::Axis(0), j).sum() / q;
                                    sigma * p.d_dl[[j, i, k]]
                                })
                                .sum();
                            share(num, quant + total_h)
                        }
                        FilterKind::ZF => {
                            let sigma = p_s / nf / q;
                            let quant: f64 = (0..n).map(|j| sigma * p.d_dl[[j, i, k]]).sum();
                            pr * keep * (sum_h / nf) * sqrt_m / kf / (m * quant + 1.0)
                        }
                    });
                }
            }
        }
        (Scenario::Cooperative, Link::UL) => {
            let sigma: Vec<f64> = coop_ul_sigma(inp, filter).into_iter().map(|s| s / bud.n0).collect();
            for i in 0..n {
                for k in 0..cfg.k_ul {
                    let h: Vec<f64> = (0..n).map(|j| ulh[[j, i, k]]).collect();
                    let sum_h: f64 = h.iter().sum();
                    let quant = match filter {
                        FilterKind::MF => share((0..n).map(|j| sigma[j] * h[j]).sum::<f64>(), sum_h),
                        FilterKind::ZF => sigma.iter().sum::<f64>() / nf,
                    };
                    sinr.push(pr * sum_h * sqrt_m / (quant + bud.beta + 1.0));
                }
            }
        }
    }
    let rates: Vec<f64> = sinr.iter().map(|s| (1.0 + s).log2()).collect();
    Ok(super::pairwise_sum(&rates))
}

/// `num / den`, with a zero numerator winning over a zero denominator
/// (users whose estimates carry no energy).
fn share(num: f64, den: f64) -> f64 {
    if num == 0.0 {
        0.0
    } else {
        num / den
    }
}
