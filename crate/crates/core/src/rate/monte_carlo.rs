//! Monte-Carlo ergodic rates over fading, pilot and impairment draws.
//!
//! The geometry and large-scale profile are fixed by the root seed. Every
//! trial draws fresh fading and pilot-phase randomness from its own
//! substreams, so adding trials never changes earlier ones, and all
//! requested combinations are evaluated on the same draws.

use rayon::prelude::*;

use super::{pairwise_sum, Duplex, Link, RateReport, SinrBreakdown, Source, Terms};
use super::sinr::instantaneous_sinr;
use crate::channel::{build_profile, LargeScaleProfile};
use crate::config::{Scenario, SystemConfig};
use crate::error::{Error, Result};
use crate::estimation::{ChannelEstimate, PilotPhase, Scheme, SptResidual};
use crate::geometry::place_users;
use crate::rng::trial_seed;
use crate::transceivers::FilterKind;

/// One evaluated combination of scenario, link, filter and duplex mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Combo {
    pub scenario: Scenario,
    pub link: Link,
    pub filter: FilterKind,
    pub duplex: Duplex,
}

#[derive(Debug, Clone)]
pub struct McRequest {
    pub config: SystemConfig,
    pub scheme: Scheme,
    pub combos: Vec<Combo>,
    pub trials: usize,
    pub seed: u64,
    pub residual: SptResidual,
}

impl McRequest {
    pub fn new(config: SystemConfig, scheme: Scheme, combos: Vec<Combo>, trials: usize, seed: u64) -> Self {
        McRequest { config, scheme, combos, trials, seed, residual: SptResidual::default() }
    }
}

/// Geometry and large-scale profile drawn from a root seed.
pub fn profile_for(config: &SystemConfig, seed: u64) -> Result<LargeScaleProfile> {
    config.validate()?;
    build_profile(config, &place_users(config, seed), seed)
}

/// Per-user results of one trial for one combination.
type TrialOutput = Vec<SinrBreakdown>;

/// Runs all combinations of a request on a profile.
pub fn simulate_on(req: &McRequest, profile: &LargeScaleProfile) -> Result<Vec<RateReport>> {
    if req.trials == 0 {
        return Err(Error::Domain("trials must be at least 1".into()));
    }
    let cfg = &req.config;
    let phase = PilotPhase::new(cfg, profile, req.scheme)?.with_residual(req.residual);
    let need_hd = req.combos.iter().any(|c| c.duplex == Duplex::Half);
    let per_trial: Vec<Vec<TrialOutput>> = (0..req.trials as u64)
        .into_par_iter()
        .map(|t| -> Result<Vec<TrialOutput>> {
            let ts = trial_seed(req.seed, t);
            let ch = crate::channel::sample_channels(profile, ts).compose(profile);
            let fd = phase.run(&ch, ts);
            let hd = need_hd.then(|| {
                let (dl, ul) = phase.run_access_only(&ch, ts);
                ChannelEstimate { n_cells: fd.n_cells, dl, ul, si: fd.si.clone() }
            });
            req.combos
                .iter()
                .map(|c| {
                    let est = match c.duplex {
                        Duplex::Full => &fd,
                        Duplex::Half => hd.as_ref().expect("half-duplex estimates"),
                    };
                    instantaneous_sinr(c.link, c.scenario, c.filter, cfg, &ch, est, c.duplex)
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    Ok(req
        .combos
        .iter()
        .enumerate()
        .map(|(ci, c)| reduce(req, c, per_trial.iter().map(|t| &t[ci]).collect()))
        .collect())
}

/// Runs a request, drawing the profile from the request seed.
pub fn simulate(req: &McRequest) -> Result<Vec<RateReport>> {
    let profile = profile_for(&req.config, req.seed)?;
    simulate_on(req, &profile)
}

fn mean(x: &[f64]) -> f64 {
    pairwise_sum(x) / x.len() as f64
}

fn stderr(x: &[f64], m: f64) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let dev: Vec<f64> = x.iter().map(|v| (v - m) * (v - m)).collect();
    (pairwise_sum(&dev) / (x.len() - 1) as f64 / x.len() as f64).sqrt()
}

fn reduce(req: &McRequest, c: &Combo, trials: Vec<&TrialOutput>) -> RateReport {
    let users = trials[0].len();
    let column = |f: &dyn Fn(&SinrBreakdown) -> f64, u: usize| -> Vec<f64> { trials.iter().map(|t| f(&t[u])).collect() };
    let mut per_user_rate = Vec::with_capacity(users);
    let mut per_user_stderr = Vec::with_capacity(users);
    let mut breakdown_means = Vec::with_capacity(users);
    for u in 0..users {
        let r = column(&SinrBreakdown::rate, u);
        let m = mean(&r);
        per_user_rate.push(m);
        per_user_stderr.push(stderr(&r, m));
        let mut terms = [0.0; 10];
        for (idx, slot) in terms.iter_mut().enumerate() {
            *slot = mean(&column(&|b: &SinrBreakdown| b.terms.values()[idx], u));
        }
        breakdown_means.push(SinrBreakdown {
            desired: mean(&column(&|b: &SinrBreakdown| b.desired, u)),
            terms: Terms::from_values(terms),
            sinr: mean(&column(&|b: &SinrBreakdown| b.sinr, u)),
        });
    }
    let sums: Vec<f64> = trials.iter().map(|t| pairwise_sum(&t.iter().map(SinrBreakdown::rate).collect::<Vec<_>>())).collect();
    let sum_mean = mean(&sums);
    RateReport {
        sum_rate: pairwise_sum(&per_user_rate),
        sum_stderr: stderr(&sums, sum_mean),
        per_user_rate,
        per_user_stderr,
        link: c.link,
        scenario: c.scenario,
        filter: c.filter,
        scheme: req.scheme,
        duplex: c.duplex,
        source: Source::MonteCarlo,
        trials: req.trials,
        breakdown_means,
        config_fingerprint: req.config.fingerprint(),
        trial_sums: sums,
    }
}

/// Full-duplex Monte-Carlo rate of one combination.
pub fn monte_carlo_rate(
    config: &SystemConfig,
    scheme: Scheme,
    scenario: Scenario,
    link: Link,
    filter: FilterKind,
    trials: usize,
    seed: u64,
) -> Result<RateReport> {
    let combo = Combo { scenario, link, filter, duplex: Duplex::Full };
    let req = McRequest::new(config.clone(), scheme, vec![combo], trials, seed);
    Ok(simulate(&req)?.remove(0))
}
