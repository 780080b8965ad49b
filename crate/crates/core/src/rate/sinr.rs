//! Per-trial SINR from the received-signal expansion.
//!
//! Every term is the power of its contribution to the detected scalar,
//! averaged over data symbols, hardware impairments, quantization and
//! thermal noise, and conditioned on the channels, estimates and filters.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use super::{Duplex, Link, SinrBreakdown, Terms};
use crate::channel::Channels;
use crate::config::{Budget, Scenario, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::ChannelEstimate;
use crate::transceivers::{
    build_detector, build_precoder, dl_quantization, joint_dl, joint_ul, ul_quantization, Detector, FilterKind,
    Precoder,
};

/// Channels, estimates and system constants shared by all SINR terms.
#[derive(Debug, Clone, Copy)]
pub struct SinrInputs<'a> {
    pub budget: Budget,
    pub c_dl: f64,
    pub c_ul: f64,
    pub channels: &'a Channels,
    pub estimate: &'a ChannelEstimate,
}

impl<'a> SinrInputs<'a> {
    pub fn new(config: &SystemConfig, channels: &'a Channels, estimate: &'a ChannelEstimate) -> Self {
        SinrInputs { budget: config.budget(), c_dl: config.c_dl_bpshz, c_ul: config.c_ul_bpshz, channels, estimate }
    }
}

fn sq(v: ArrayView1<Complex64>) -> f64 {
    v.iter().map(|z| z.norm_sqr()).sum()
}

fn frob(a: ArrayView2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum()
}

fn row_powers(a: &Array2<Complex64>) -> Array1<f64> {
    a.rows().into_iter().map(sq).collect()
}

fn expect_filters(have: usize, scenario: Scenario, n: usize) -> Result<()> {
    let want = match scenario {
        Scenario::NonCooperative => n,
        Scenario::Cooperative => 1,
    };
    if have != want {
        return Err(Error::Contract(format!("expected {want} filters for {}, got {have}", scenario.label())));
    }
    Ok(())
}

/// Symbol power and per-BS quantization noise of the cooperative DL.
fn dl_fronthaul(inp: &SinrInputs, f: &Array2<Complex64>, n: usize) -> Result<(f64, Vec<f64>)> {
    let m_t = f.nrows() / n;
    let mut sigma = Vec::with_capacity(n);
    let mut p_s = inp.budget.p_d;
    for b in 0..n {
        let q = dl_quantization(inp.c_dl, inp.budget.p_d, frob(f.slice(s![b * m_t..(b + 1) * m_t, ..])))?;
        p_s = q.symbol_power;
        sigma.push(q.noise_var);
    }
    Ok((p_s, sigma))
}

/// UE-UE interference power at DL user `(i, k)`.
fn ue_ue_power(ch: &Channels, p_u: f64, i: usize, k: usize) -> f64 {
    p_u * (0..ch.n_cells).map(|j| sq(ch.ue(i, j).row(k))).sum::<f64>()
}

/// DL SINR of every user, ordered cell-major.
pub fn dl_sinr(inp: &SinrInputs, precoders: &[Precoder], scenario: Scenario, duplex: Duplex) -> Result<Vec<SinrBreakdown>> {
    let ch = inp.channels;
    let est = inp.estimate;
    let n = ch.n_cells;
    expect_filters(precoders.len(), scenario, n)?;
    let bud = inp.budget;
    let k_d = ch.dl(0, 0).nrows();
    let fd = duplex == Duplex::Full;
    let mut out = Vec::with_capacity(n * k_d);
    match scenario {
        Scenario::NonCooperative => {
            for i in 0..n {
                let own = ch.dl(i, i).dot(&precoders[i].f);
                let est_own = est.dl(i, i).dot(&precoders[i].f);
                let inter: Vec<Array2<Complex64>> =
                    (0..n).filter(|&b| b != i).map(|b| ch.dl(b, i).dot(&precoders[b].f)).collect();
                for k in 0..k_d {
                    let desired = bud.p_d * est_own[[k, k]].norm_sqr();
                    let t = Terms {
                        est_error: bud.p_d * (own[[k, k]] - est_own[[k, k]]).norm_sqr(),
                        intra: bud.p_d * (0..k_d).filter(|&l| l != k).map(|l| own[[k, l]].norm_sqr()).sum::<f64>(),
                        inter: bud.p_d * inter.iter().map(|a| sq(a.row(k))).sum::<f64>(),
                        ue_ue: if fd { ue_ue_power(ch, bud.p_u, i, k) } else { 0.0 },
                        noise: bud.n0,
                        ..Terms::default()
                    };
                    out.push(SinrBreakdown::new(desired, t));
                }
            }
        }
        Scenario::Cooperative => {
            let f = &precoders[0].f;
            let (p_s, sigma) = dl_fronthaul(inp, f, n)?;
            let a = joint_dl(n, &ch.g_dl).dot(f);
            let a_hat = joint_dl(n, &est.dl).dot(f);
            for c in 0..n {
                for k in 0..k_d {
                    let u = c * k_d + k;
                    let (mut intra, mut inter) = (0.0, 0.0);
                    for v in 0..n * k_d {
                        if v == u {
                            continue;
                        }
                        if v / k_d == c {
                            intra += a[[u, v]].norm_sqr();
                        } else {
                            inter += a[[u, v]].norm_sqr();
                        }
                    }
                    let t = Terms {
                        est_error: p_s * (a[[u, u]] - a_hat[[u, u]]).norm_sqr(),
                        intra: p_s * intra,
                        inter: p_s * inter,
                        ue_ue: if fd { ue_ue_power(ch, bud.p_u, c, k) } else { 0.0 },
                        quantization: (0..n).map(|b| sigma[b] * sq(ch.dl(b, c).row(k))).sum(),
                        noise: bud.n0,
                        ..Terms::default()
                    };
                    out.push(SinrBreakdown::new(p_s * a_hat[[u, u]].norm_sqr(), t));
                }
            }
        }
    }
    Ok(out)
}

/// Block matrix of BS-to-BS channels; `diag` selects the SI blocks only,
/// otherwise only the inter-BS blocks are filled.
fn bs_blocks(n: usize, block: impl Fn(usize, usize) -> Option<Array2<Complex64>>, m_r: usize, m_t: usize) -> Array2<Complex64> {
    let mut g = Array2::zeros((m_r * n, m_t * n));
    for i in 0..n {
        for j in 0..n {
            if let Some(b) = block(i, j) {
                g.slice_mut(s![i * m_r..(i + 1) * m_r, j * m_t..(j + 1) * m_t]).assign(&b);
            }
        }
    }
    g
}

/// UL SINR of every user, ordered cell-major.
///
/// `precoders` are the DL precoders active during UL reception; they only
/// matter in full duplex.
pub fn ul_sinr(
    inp: &SinrInputs,
    detectors: &[Detector],
    precoders: &[Precoder],
    scenario: Scenario,
    duplex: Duplex,
) -> Result<Vec<SinrBreakdown>> {
    let ch = inp.channels;
    let est = inp.estimate;
    let n = ch.n_cells;
    expect_filters(detectors.len(), scenario, n)?;
    let fd = duplex == Duplex::Full;
    if fd {
        expect_filters(precoders.len(), scenario, n)?;
    }
    let bud = inp.budget;
    let (m_r, k_u) = ch.ul(0, 0).dim();
    let m_t = ch.bs(0, 0).ncols();
    let mut out = Vec::with_capacity(n * k_u);
    match scenario {
        Scenario::NonCooperative => {
            for i in 0..n {
                let w = &detectors[i].w;
                let wg: Vec<Array2<Complex64>> = (0..n).map(|c| w.dot(ch.ul(i, c))).collect();
                let wg_hat = w.dot(est.ul(i, i));
                let fd_parts = if fd {
                    let f = &precoders[i].f;
                    let gf = ch.bs(i, i).dot(f);
                    let residual = w.dot(&(ch.bs(i, i) - &est.si[i]).dot(f));
                    let bsbs: Vec<Array2<Complex64>> =
                        (0..n).filter(|&j| j != i).map(|j| w.dot(&ch.bs(i, j).dot(&precoders[j].f))).collect();
                    Some((w.dot(&gf), residual, bsbs, row_powers(&gf)))
                } else {
                    None
                };
                for k in 0..k_u {
                    let wk = w.row(k);
                    let mut t = Terms {
                        est_error: bud.p_u * (wg[i][[k, k]] - wg_hat[[k, k]]).norm_sqr(),
                        intra: bud.p_u * (0..k_u).filter(|&l| l != k).map(|l| wg[i][[k, l]].norm_sqr()).sum::<f64>(),
                        inter: bud.p_u * (0..n).filter(|&c| c != i).map(|c| sq(wg[c].row(k))).sum::<f64>(),
                        noise: bud.n0 * sq(wk),
                        ..Terms::default()
                    };
                    if let Some((wgf, residual, bsbs, rows)) = &fd_parts {
                        t.residual_si = bud.p_d * sq(residual.row(k));
                        t.bs_bs = bud.p_d * bsbs.iter().map(|a| sq(a.row(k))).sum::<f64>();
                        t.tx_noise = bud.alpha * bud.p_d * sq(wgf.row(k));
                        t.rx_distortion = bud.beta
                            * wk.iter()
                                .zip(rows.iter())
                                .map(|(x, r)| x.norm_sqr() * ((1.0 + bud.alpha) * bud.p_d * r + bud.n0))
                                .sum::<f64>();
                    }
                    out.push(SinrBreakdown::new(bud.p_u * wg_hat[[k, k]].norm_sqr(), t));
                }
            }
        }
        Scenario::Cooperative => {
            let w = &detectors[0].w;
            let g_u = joint_ul(n, &ch.g_ul);
            let wg = w.dot(&g_u);
            let wg_hat = w.dot(&joint_ul(n, &est.ul));
            // Received energy per BS before fronthaul quantization.
            let mut energy: Vec<f64> = (0..n)
                .map(|b| bud.p_u * frob(g_u.slice(s![b * m_r..(b + 1) * m_r, ..])) + m_r as f64 * bud.n0)
                .collect();
            let fd_parts = if fd {
                let f = &precoders[0].f;
                let (p_s, _) = dl_fronthaul(inp, f, n)?;
                let g_off = bs_blocks(n, |i, j| (i != j).then(|| ch.bs(i, j).clone()), m_r, m_t);
                let g_diag = bs_blocks(n, |i, j| (i == j).then(|| ch.bs(i, i).clone()), m_r, m_t);
                let g_diag_hat = bs_blocks(n, |i, j| (i == j).then(|| est.si[i].clone()), m_r, m_t);
                let off_f = g_off.dot(f);
                let diag_f = g_diag.dot(f);
                let res_f = (&g_diag - &g_diag_hat).dot(f);
                for (b, e) in energy.iter_mut().enumerate() {
                    let rows = s![b * m_r..(b + 1) * m_r, ..];
                    let full = frob((&off_f.slice(rows) + &diag_f.slice(rows)).view());
                    let si = frob(diag_f.slice(rows));
                    *e += p_s * full
                        + bud.alpha * p_s * si
                        + bud.beta * ((1.0 + bud.alpha) * p_s * si + m_r as f64 * bud.n0);
                }
                Some((p_s, w.dot(&off_f), w.dot(&diag_f), w.dot(&res_f), row_powers(&diag_f)))
            } else {
                None
            };
            let sigma: Vec<f64> = energy.iter().map(|&e| ul_quantization(inp.c_ul, e)).collect::<Result<_>>()?;
            for c in 0..n {
                for k in 0..k_u {
                    let u = c * k_u + k;
                    let wu = w.row(u);
                    let (mut intra, mut inter) = (0.0, 0.0);
                    for v in 0..n * k_u {
                        if v == u {
                            continue;
                        }
                        if v / k_u == c {
                            intra += wg[[u, v]].norm_sqr();
                        } else {
                            inter += wg[[u, v]].norm_sqr();
                        }
                    }
                    let mut t = Terms {
                        est_error: bud.p_u * (wg[[u, u]] - wg_hat[[u, u]]).norm_sqr(),
                        intra: bud.p_u * intra,
                        inter: bud.p_u * inter,
                        quantization: (0..n).map(|b| sigma[b] * sq(wu.slice(s![b * m_r..(b + 1) * m_r]))).sum(),
                        noise: bud.n0 * sq(wu),
                        ..Terms::default()
                    };
                    if let Some((p_s, w_off, w_diag, w_res, rows)) = &fd_parts {
                        t.bs_bs = p_s * sq(w_off.row(u));
                        t.residual_si = p_s * sq(w_res.row(u));
                        t.tx_noise = bud.alpha * p_s * sq(w_diag.row(u));
                        t.rx_distortion = bud.beta
                            * wu.iter()
                                .zip(rows.iter())
                                .map(|(x, r)| x.norm_sqr() * ((1.0 + bud.alpha) * p_s * r + bud.n0))
                                .sum::<f64>();
                    }
                    out.push(SinrBreakdown::new(bud.p_u * wg_hat[[u, u]].norm_sqr(), t));
                }
            }
        }
    }
    Ok(out)
}

/// Builds the filters from the estimates and returns every user's SINR.
pub fn instantaneous_sinr(
    link: Link,
    scenario: Scenario,
    filter: FilterKind,
    config: &SystemConfig,
    channels: &Channels,
    estimate: &ChannelEstimate,
    duplex: Duplex,
) -> Result<Vec<SinrBreakdown>> {
    let inp = SinrInputs::new(config, channels, estimate);
    match link {
        Link::DL => dl_sinr(&inp, &build_precoder(estimate, filter, scenario)?, scenario, duplex),
        Link::UL => {
            let detectors = build_detector(estimate, filter, scenario)?;
            let precoders = match duplex {
                Duplex::Full => build_precoder(estimate, filter, scenario)?,
                Duplex::Half => Vec::new(),
            };
            ul_sinr(&inp, &detectors, &precoders, scenario, duplex)
        }
    }
}
