//! Acceptance checks. Each test prints one `PASS`/`FAIL` line with the
//! measured quantities, then asserts.

use fdmimo_core::channel::{sample_channels, LargeScaleProfile};
use fdmimo_core::config::load_config_value;
use fdmimo_core::duplex::{lemma_bounds, DuplexReports, OverheadModel, Threshold};
use fdmimo_core::estimation::{estimate_variances, nmse, PilotPhase};
use fdmimo_core::rate::{
    analytic_rate, asymptotic_rate, instantaneous_sinr, profile_for, simulate_on, AnalyticInputs, Combo, McRequest,
};
use fdmimo_core::rng::trial_seed;
use fdmimo_core::runner::paired_ratio;
use fdmimo_core::{Duplex, FilterKind, Link, Scenario, Scheme, SystemConfig};
use fdmimo_core::estimation::ChannelEstimate;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

const SEED: u64 = 2024;

/// Relative MC/closed-form tolerance for ergodic sum rates.
const RATE_AGREEMENT: f64 = 0.10;
const MC_TRIALS: usize = 2000;
/// Number of MC standard errors allowed for estimator statistics.
const SE_BOUND: f64 = 3.0;
const PILOT_PHASES: usize = 10_000;
const DECOMPOSITION_TOL: f64 = 1e-12;
const ZF_LEAKAGE: f64 = 1e-18;
const LEMMA_MARGIN: f64 = 0.01;
const ASYMPTOTIC_FINAL_GAP: f64 = 0.05;
/// Allowed size of a single inversion in the FD/HD ratio trend, in MC
/// standard errors.
const RATIO_INVERSION_SE: f64 = 2.0;

fn verdict(id: u32, name: &str, pass: bool, detail: &str) {
    println!("criterion {id} [{name}]: {} {detail}", if pass { "PASS" } else { "FAIL" });
}

fn config(v: serde_json::Value) -> SystemConfig {
    load_config_value(v).expect("valid config")
}

fn figure_config(m: usize) -> SystemConfig {
    config(json!({
        "n_cells": 3, "m_tx": m, "m_rx": m, "k_dl": 5, "k_ul": 5,
        "p_ref_dbm": 40.0, "cell_radius_m": 2000.0,
        "c_dl_bpshz": 20.0, "c_ul_bpshz": 20.0,
    }))
}

const SCENARIOS: [Scenario; 2] = [Scenario::NonCooperative, Scenario::Cooperative];
const FILTERS: [FilterKind; 2] = [FilterKind::MF, FilterKind::ZF];
const LINKS: [Link; 2] = [Link::DL, Link::UL];

#[test]
fn c1_analytic_matches_monte_carlo() {
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    let mut lines = Vec::new();
    for m in [16, 32, 64] {
        let cfg = figure_config(m);
        let profile = profile_for(&cfg, SEED).unwrap();
        let combos: Vec<Combo> = SCENARIOS
            .iter()
            .flat_map(|&scenario| {
                FILTERS.iter().flat_map(move |&filter| {
                    LINKS.iter().map(move |&link| Combo { scenario, link, filter, duplex: Duplex::Full })
                })
            })
            .collect();
        let req = McRequest::new(cfg.clone(), Scheme::NonSimultaneous, combos.clone(), MC_TRIALS, SEED);
        let mc = simulate_on(&req, &profile).unwrap();
        let inp = AnalyticInputs::new(&cfg, &profile, Scheme::NonSimultaneous).unwrap();
        for (c, r) in combos.iter().zip(&mc) {
            let a = analytic_rate(&inp, c.scenario, c.link, c.filter, Duplex::Full).unwrap().sum_rate;
            let rel = (r.sum_rate - a).abs() / a;
            worst = worst.max(rel);
            let line = format!(
                "M={m} {} {} {}: mc={:.4} (se {:.4}) analytic={:.4} rel={:.3}",
                c.scenario.label(),
                c.filter,
                c.link,
                r.sum_rate,
                r.sum_stderr,
                a,
                rel
            );
            if rel > RATE_AGREEMENT {
                failures.push(line.clone());
            }
            lines.push(line);
        }
    }
    for l in &lines {
        println!("  {l}");
    }
    verdict(
        1,
        "analytic/MC agreement",
        failures.is_empty(),
        &format!("worst rel gap {worst:.3} (tol {RATE_AGREEMENT}), {} of {} combos outside", failures.len(), lines.len()),
    );
    assert!(failures.is_empty(), "outside tolerance:\n{}", failures.join("\n"));
}

/// Running mean and standard error of per-trial statistics.
#[derive(Default)]
struct Running {
    n: f64,
    sum: f64,
    sum_sq: f64,
}

impl Running {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        self.sum += x;
        self.sum_sq += x * x;
    }
    fn mean(&self) -> f64 {
        self.sum / self.n
    }
    fn se(&self) -> f64 {
        let m = self.mean();
        ((self.sum_sq / self.n - m * m) * self.n / (self.n - 1.0) / self.n).sqrt()
    }
    /// Distance of the mean from `target`, in standard errors.
    fn z(&self, target: f64) -> f64 {
        (self.mean() - target).abs() / self.se()
    }
}

/// Per-family statistics of one pilot phase: mean normalized estimate
/// power and mean normalized estimate/error cross-moment.
#[derive(Default)]
struct FamilyStats {
    power: Running,
    cross_re: Running,
    cross_im: Running,
}

impl FamilyStats {
    fn push(&mut self, samples: &[(Complex64, Complex64, f64, f64)]) {
        let (mut p, mut c, mut n) = (0.0, Complex64::new(0.0, 0.0), 0.0);
        for &(g_hat, err, hat_var, err_var) in samples {
            if hat_var <= 0.0 || err_var <= 0.0 {
                continue;
            }
            p += g_hat.norm_sqr() / hat_var;
            c += g_hat.conj() * err / (hat_var * err_var).sqrt();
            n += 1.0;
        }
        self.power.push(p / n);
        self.cross_re.push(c.re / n);
        self.cross_im.push(c.im / n);
    }

    fn worst_z(&self) -> (f64, f64) {
        (self.power.z(1.0), self.cross_re.z(0.0).max(self.cross_im.z(0.0)))
    }
}

fn pilot_phase_stats(cfg: &SystemConfig, profile: &LargeScaleProfile, scheme: Scheme) -> [FamilyStats; 3] {
    let phase = PilotPhase::new(cfg, profile, scheme).unwrap();
    let v = &phase.variances;
    let n = cfg.n_cells;
    let mut stats: [FamilyStats; 3] = Default::default();
    for t in 0..PILOT_PHASES as u64 {
        let seed = trial_seed(SEED, t);
        let ch = sample_channels(profile, seed).compose(profile);
        let est: ChannelEstimate = phase.run(&ch, seed);
        let mut dl = Vec::new();
        let mut ul = Vec::new();
        for b in 0..n {
            for c in 0..n {
                let (g, e) = (ch.dl(b, c), est.dl(b, c));
                for ((k, m), gh) in e.indexed_iter() {
                    dl.push((*gh, g[[k, m]] - gh, v.dl_hat[[b, c, k]], v.dl_err[[b, c, k]]));
                }
                let (g, e) = (ch.ul(b, c), est.ul(b, c));
                for ((l, k), gh) in e.indexed_iter() {
                    ul.push((*gh, g[[l, k]] - gh, v.ul_hat[[b, c, k, l]], v.ul_err[[b, c, k, l]]));
                }
            }
        }
        let mut si = Vec::new();
        for b in 0..n {
            let g = ch.bs(b, b);
            for ((l, m), gh) in est.si[b].indexed_iter() {
                si.push((*gh, g[[l, m]] - gh, v.si_hat[b][[l, m]], v.si_err[b][[l, m]]));
            }
        }
        stats[0].push(&dl);
        stats[1].push(&ul);
        stats[2].push(&si);
    }
    stats
}

#[test]
fn c2_mmse_estimator_suite() {
    let mut pass = true;
    let mut worst_power: f64 = 0.0;
    let mut worst_cross: f64 = 0.0;
    let mut worst_decomp: f64 = 0.0;
    for m in [16, 32, 64] {
        let cfg = figure_config(m);
        let profile = profile_for(&cfg, SEED).unwrap();
        for scheme in [Scheme::NonSimultaneous, Scheme::Simultaneous] {
            let v = estimate_variances(&cfg, &profile, scheme);
            let rel = |hat: f64, err: f64, gain: f64| ((hat + err - gain) / gain).abs();
            let mut decomp: f64 = 0.0;
            for ((b, c, k), h) in v.dl_hat.indexed_iter() {
                decomp = decomp.max(rel(*h, v.dl_err[[b, c, k]], profile.d_dl[[b, c, k]]));
            }
            for ((b, c, k, l), h) in v.ul_hat.indexed_iter() {
                decomp = decomp.max(rel(*h, v.ul_err[[b, c, k, l]], profile.d_ul[[b, c, k]]));
            }
            for (b, hat) in v.si_hat.iter().enumerate() {
                for ((l, mm), h) in hat.indexed_iter() {
                    decomp = decomp.max(rel(*h, v.si_err[b][[l, mm]], profile.d_si.get(l, mm)));
                }
            }
            worst_decomp = worst_decomp.max(decomp);
            let stats = pilot_phase_stats(&cfg, &profile, scheme);
            for (name, s) in ["DL", "UL", "SI"].iter().zip(&stats) {
                let (zp, zc) = s.worst_z();
                worst_power = worst_power.max(zp);
                worst_cross = worst_cross.max(zc);
                let ok = zp < SE_BOUND && zc < SE_BOUND;
                println!(
                    "  M={m} {scheme} {name}: mean |g_hat|^2/var = {:.5} ({zp:.2} se), cross-moment z = {zc:.2}",
                    s.power.mean()
                );
                pass &= ok;
            }
            pass &= decomp <= DECOMPOSITION_TOL;
        }
    }
    verdict(
        2,
        "MMSE estimator suite",
        pass,
        &format!(
            "worst variance z {worst_power:.2}, worst cross z {worst_cross:.2} (bound {SE_BOUND}), \
             worst decomposition rel err {worst_decomp:.1e} (tol {DECOMPOSITION_TOL:.0e})"
        ),
    );
    assert!(pass);
}

#[test]
fn c3_nmse_properties() {
    let grid: Vec<f64> = (0..=8).map(|i| 5.0 * i as f64).collect();
    let cfg_at = |p: f64, r: f64| {
        config(json!({
            "n_cells": 3, "m_tx": 16, "m_rx": 16, "k_dl": 5, "k_ul": 5,
            "p_ref_dbm": p, "cell_radius_m": r, "alpha_db": -50.0, "beta_db": -50.0,
        }))
    };
    let mut invariant = true;
    let mut ordered = true;
    let mut decreasing = true;
    for r in [500.0, 1000.0, 2000.0] {
        let mut prev: Option<(f64, f64)> = None;
        for &p in &grid {
            let cfg = cfg_at(p, r);
            let profile = profile_for(&cfg, SEED).unwrap();
            let base = nmse(&cfg, &profile, Scheme::NonSimultaneous);
            let spt = nmse(&cfg, &profile, Scheme::Simultaneous);
            // Every coefficient, every BS.
            for (a, b) in base.si.iter().zip(&spt.si) {
                ordered &= a.iter().zip(b.iter()).all(|(x, y)| y >= x);
            }
            let reference = nmse(&cfg_at(p, 500.0), &profile_for(&cfg_at(p, 500.0), SEED).unwrap(), Scheme::NonSimultaneous);
            invariant &= base.si == reference.si;
            let now = (base.si_mean(), spt.si_mean());
            if let Some((b0, s0)) = prev {
                decreasing &= now.0 < b0 && now.1 < s0;
            }
            println!("  r={r} P_r={p}: nSPT {:.6e} SPT {:.6e}", now.0, now.1);
            prev = Some(now);
        }
    }
    let pass = invariant && ordered && decreasing;
    verdict(
        3,
        "NMSE properties",
        pass,
        &format!("nSPT radius-invariant: {invariant}, SPT >= nSPT: {ordered}, strictly decreasing in P_r: {decreasing}"),
    );
    assert!(pass);
}

#[test]
fn c4_zero_forcing_exactness() {
    let cfg = config(json!({
        "n_cells": 1, "m_tx": 8, "m_rx": 8, "k_dl": 4, "k_ul": 4,
        "p_ref_dbm": 40.0, "cell_radius_m": 2000.0,
    }));
    let profile = profile_for(&cfg, SEED).unwrap();
    let mut clean = 0;
    let mut worst: f64 = 0.0;
    for t in 0..100u64 {
        let ch = sample_channels(&profile, trial_seed(SEED, t)).compose(&profile);
        let est = ChannelEstimate::perfect(&ch);
        let mut ok = true;
        for link in LINKS {
            let users =
                instantaneous_sinr(link, Scenario::NonCooperative, FilterKind::ZF, &cfg, &ch, &est, Duplex::Full).unwrap();
            for u in users {
                let ratio = u.terms.intra / u.desired;
                worst = worst.max(ratio);
                ok &= ratio < ZF_LEAKAGE;
            }
        }
        clean += usize::from(ok);
    }
    let pass = clean == 100;
    verdict(4, "ZF exactness", pass, &format!("{clean}/100 trials clean, worst intra/desired {worst:.2e}"));
    assert!(pass);
}

#[test]
fn c5_fd_hd_ratio_trend() {
    let mut pass = true;
    for scenario in SCENARIOS {
        let mut points = Vec::new();
        for m in [16, 32, 64, 128] {
            let cfg = figure_config(m);
            let profile = profile_for(&cfg, SEED).unwrap();
            let combos: Vec<Combo> = [Duplex::Full, Duplex::Half]
                .iter()
                .flat_map(|&duplex| LINKS.iter().map(move |&link| Combo { scenario, link, filter: FilterKind::ZF, duplex }))
                .collect();
            let req = McRequest::new(cfg.clone(), Scheme::NonSimultaneous, combos, MC_TRIALS, SEED);
            let r = simulate_on(&req, &profile).unwrap();
            let (ratio, se) = paired_ratio(&[&r[0], &r[1]], &[&r[2], &r[3]]);
            points.push((m, ratio, se));
        }
        let inversions: Vec<_> = points.windows(2).filter(|w| w[1].1 <= w[0].1).collect();
        let small = inversions
            .iter()
            .all(|w| w[0].1 - w[1].1 <= RATIO_INVERSION_SE * (w[0].2 * w[0].2 + w[1].2 * w[1].2).sqrt());
        let trend_ok = inversions.len() <= 1 && small;
        let above = points.last().unwrap().1 > 1.0;
        let ok = trend_ok && above;
        let series: Vec<String> = points.iter().map(|(m, r, se)| format!("M={m}: {r:.4}±{se:.4}")).collect();
        verdict(
            5,
            &format!("FD/HD ratio trend, {}", scenario.label()),
            ok,
            &format!("{} | increasing: {trend_ok}, > 1 at M=128: {above}", series.join(", ")),
        );
        pass &= ok;
    }
    assert!(pass);
}

/// Minimum coherence block, in symbols, of a scheme from analytic SINRs.
fn t_cohe(cfg: &SystemConfig, profile: &LargeScaleProfile, scheme: Scheme, scenario: Scenario, filter: FilterKind) -> Threshold {
    let inp = AnalyticInputs::new(cfg, profile, scheme).unwrap();
    let reports = DuplexReports::analytic(&inp, scenario, filter).unwrap();
    lemma_bounds(&OverheadModel::new(cfg, scheme).unwrap(), &reports.lemma_inputs()).t_min
}

#[test]
fn c6_coherence_ordering() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut violations = Vec::new();
    let mut checked = 0;
    for _ in 0..100 {
        let m: usize = rng.random_range(4..=128);
        let k: usize = rng.random_range(1..=10);
        let cfg = config(json!({
            "n_cells": 3, "m_tx": m, "m_rx": m, "k_dl": k, "k_ul": k,
            "p_ref_dbm": 40.0, "cell_radius_m": 2000.0,
        }));
        let profile = profile_for(&cfg, SEED).unwrap();
        for scenario in SCENARIOS {
            for filter in FILTERS {
                if filter == FilterKind::ZF && m < k {
                    continue;
                }
                checked += 1;
                let spt = t_cohe(&cfg, &profile, Scheme::Simultaneous, scenario, filter);
                let base = t_cohe(&cfg, &profile, Scheme::NonSimultaneous, scenario, filter);
                let ok = match (spt, base) {
                    (Threshold::Finite(a), Threshold::Finite(b)) => a <= b,
                    _ => false,
                };
                if !ok {
                    violations.push(format!("M={m} K={k} {} {filter}: SPT {spt:?} nSPT {base:?}", scenario.label()));
                }
            }
        }
    }
    for v in &violations {
        println!("  {v}");
    }
    let pass = violations.is_empty();
    verdict(6, "coherence ordering", pass, &format!("{} violations over {checked} evaluations", violations.len()));
    assert!(pass);
}

#[test]
fn c7_cooperative_crossover() {
    let grid: Vec<f64> = (1..=40).map(f64::from).collect();
    let mut pass = true;
    for filter in FILTERS {
        let mut coop = Vec::new();
        let mut non = 0.0;
        for &c in &grid {
            let cfg = config(json!({
                "n_cells": 3, "m_tx": 128, "m_rx": 128, "k_dl": 5, "k_ul": 5,
                "p_ref_dbm": 40.0, "cell_radius_m": 2000.0, "c_dl_bpshz": c, "c_ul_bpshz": c,
            }));
            let profile = profile_for(&cfg, SEED).unwrap();
            let inp = AnalyticInputs::new(&cfg, &profile, Scheme::NonSimultaneous).unwrap();
            let total = |s| -> f64 {
                LINKS.iter().map(|&l| analytic_rate(&inp, s, l, filter, Duplex::Full).unwrap().sum_rate).sum()
            };
            coop.push(total(Scenario::Cooperative));
            non = total(Scenario::NonCooperative);
        }
        let monotone = coop.windows(2).all(|w| w[1] >= w[0]);
        let crossing = coop
            .windows(2)
            .zip(grid.windows(2))
            .find(|(r, _)| r[0] < non && r[1] >= non)
            .map(|(_, c)| c[1]);
        let ok = monotone && crossing.is_some();
        verdict(
            7,
            &format!("cooperative crossover, {filter}"),
            ok,
            &format!(
                "non-coop {non:.3}, coop from {:.3} to {:.3}, monotone: {monotone}, crossing at C* = {:?} bps/Hz",
                coop[0],
                coop[coop.len() - 1],
                crossing
            ),
        );
        pass &= ok;
    }
    assert!(pass);
}

#[test]
fn c8_asymptotic_consistency() {
    let ms: Vec<usize> = (6..=14).map(|e| 1usize << e).collect();
    let mut gaps: Vec<Vec<f64>> = vec![Vec::new(); 8];
    for &m in &ms {
        let cfg = config(json!({
            "n_cells": 3, "m_tx": m, "m_rx": m, "k_dl": 5, "k_ul": 5,
            "p_ref_dbm": 40.0, "cell_radius_m": 2000.0, "total_symbols": 4 * m + 100,
        }));
        let profile = profile_for(&cfg, SEED).unwrap();
        let inp = AnalyticInputs::new(&cfg, &profile, Scheme::NonSimultaneous).unwrap();
        let mut i = 0;
        for scenario in SCENARIOS {
            for filter in FILTERS {
                for link in LINKS {
                    let exact = analytic_rate(&inp, scenario, link, filter, Duplex::Full).unwrap().sum_rate;
                    let limit = asymptotic_rate(&inp, scenario, link, filter).unwrap();
                    gaps[i].push((exact - limit).abs() / exact);
                    i += 1;
                }
            }
        }
    }
    let mut pass = true;
    let mut i = 0;
    for scenario in SCENARIOS {
        for filter in FILTERS {
            for link in LINKS {
                let g = &gaps[i];
                let monotone = g.windows(2).all(|w| w[1] < w[0]);
                let last = *g.last().unwrap();
                let ok = monotone && last < ASYMPTOTIC_FINAL_GAP;
                let series: Vec<String> = g.iter().map(|x| format!("{x:.4}")).collect();
                verdict(
                    8,
                    &format!("asymptotic consistency, {} {filter} {link}", scenario.label()),
                    ok,
                    &format!("gaps M=2^6..2^14: [{}], decreasing: {monotone}, final < {ASYMPTOTIC_FINAL_GAP}", series.join(", ")),
                );
                pass &= ok;
                i += 1;
            }
        }
    }
    assert!(pass);
}

#[test]
fn c9_lemma_bounds_imply_region() {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED + 9);
    let mut violations = Vec::new();
    let mut covered = 0;
    let mut tried = 0;
    while tried < 50 {
        let n: usize = rng.random_range(1..=3);
        let m: usize = rng.random_range(4..=64);
        let k: usize = rng.random_range(1..=6);
        let total: usize = rng.random_range(2 * m + 4 * k + 10..=4000);
        let scheme = if rng.random_bool(0.5) { Scheme::NonSimultaneous } else { Scheme::Simultaneous };
        let scenario = SCENARIOS[rng.random_range(0..2)];
        let filter = if m >= k { FILTERS[rng.random_range(0..2)] } else { FilterKind::MF };
        let cfg = config(json!({
            "n_cells": n, "m_tx": m, "m_rx": m, "k_dl": k, "k_ul": k,
            "p_ref_dbm": rng.random_range(0.0..40.0),
            "cell_radius_m": rng.random_range(100.0..2000.0),
            "boundary_fraction": rng.random_range(0.05..1.0),
            "alpha_db": rng.random_range(-140.0..-80.0),
            "beta_db": rng.random_range(-140.0..-80.0),
            "c_dl_bpshz": rng.random_range(10.0..60.0),
            "c_ul_bpshz": rng.random_range(10.0..60.0),
            "si_array_gap_m": rng.random_range(0.5..50.0),
            "total_symbols": total,
        }));
        tried += 1;
        let profile = profile_for(&cfg, SEED + tried as u64).unwrap();
        let inp = AnalyticInputs::new(&cfg, &profile, scheme).unwrap();
        let reports = DuplexReports::analytic(&inp, scenario, filter).unwrap();
        let overheads = OverheadModel::new(&cfg, scheme).unwrap();
        let inputs = reports.lemma_inputs();
        let bounds = lemma_bounds(&overheads, &inputs);
        let v = reports.verdict(&overheads).unwrap();
        let dl = bounds.dl_satisfied(&inputs, total, LEMMA_MARGIN);
        let ul = bounds.ul_satisfied(&inputs, total, LEMMA_MARGIN);
        covered += usize::from(dl) + usize::from(ul);
        let label = format!("N={n} M={m} K={k} T={total} {scheme} {} {filter}", scenario.label());
        if dl && !v.dl_holds {
            violations.push(format!("{label}: DL bound holds, region check fails (margin {:.4})", v.dl_margin));
        }
        if ul && !v.ul_holds {
            violations.push(format!("{label}: UL bound holds, region check fails (margin {:.4})", v.ul_margin));
        }
        if dl && ul && !v.joint_holds {
            violations.push(format!("{label}: both bounds hold, joint check fails"));
        }
    }
    for v in &violations {
        println!("  {v}");
    }
    let pass = violations.is_empty();
    verdict(
        9,
        "Lemma/direct-region consistency",
        pass,
        &format!("{} violations; bounds held with margin on {covered} links of {tried} configs", violations.len()),
    );
    assert!(pass);
}
