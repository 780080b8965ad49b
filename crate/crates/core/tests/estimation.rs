use fdmimo_core::channel::{sample_channels, LargeScaleProfile, SiGains};
use fdmimo_core::config::load_config_value;
use fdmimo_core::estimation::{estimate_variances, make_pilots, nmse, run_pilot_phase, Scheme};
use fdmimo_core::rate::profile_for;
use fdmimo_core::{Error, SystemConfig};
use ndarray::{Array2, Array3, Array4};
use num_complex::Complex64;
use proptest::prelude::*;
use serde_json::json;

fn cfg(v: serde_json::Value) -> SystemConfig {
    load_config_value(v).unwrap()
}

fn standard(m: usize, k: usize) -> SystemConfig {
    cfg(json!({"n_cells": 3, "m_tx": m, "m_rx": m, "k_dl": k, "k_ul": k, "p_ref_dbm": 40.0, "cell_radius_m": 2000.0}))
}

/// Turns off Tx noise, Rx distortion and thermal noise.
fn noiseless(mut c: SystemConfig) -> SystemConfig {
    c.alpha_db = f64::NEG_INFINITY;
    c.beta_db = f64::NEG_INFINITY;
    c.noise_floor_dbm = f64::NEG_INFINITY;
    c
}

fn gram_is_identity(phi: &Array2<Complex64>) -> bool {
    let g = phi.t().mapv(|z| z.conj()).dot(phi);
    g.indexed_iter().all(|((i, j), z)| (z - if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) }).norm() < 1e-12)
}

#[test]
fn pilots_are_orthonormal() {
    let mut c = standard(4, 3);
    c.tau_si = 4;
    let p = make_pilots(&c, Scheme::NonSimultaneous).unwrap();
    assert_eq!(p.phi_si.dim(), (4, 4));
    assert!(gram_is_identity(&p.phi_si));
    assert!(gram_is_identity(&p.phi_uu));
    assert!(gram_is_identity(&p.phi_ud));
}

#[test]
fn simultaneous_pilots_share_the_longest_slot() {
    let c = standard(64, 5);
    let p = make_pilots(&c, Scheme::Simultaneous).unwrap();
    assert_eq!(p.tau_max, 64);
    assert_eq!(p.phi_uu.dim(), (64, 5));
    assert_eq!(p.phi_si.dim(), (64, 64));
    assert!(gram_is_identity(&p.phi_uu));
    // Every UL pilot overlaps every SI pilot with magnitude 1/sqrt(tau).
    let cross = p.phi_si.t().mapv(|z| z.conj()).dot(&p.phi_uu);
    assert!(cross.iter().all(|z| (z.norm() - 0.125).abs() < 1e-12));
}

#[test]
fn short_pilots_are_rejected() {
    let mut c = standard(8, 5);
    c.tau_uu = 3;
    assert!(matches!(make_pilots(&c, Scheme::NonSimultaneous), Err(Error::Validation(_))));
    let mut c = standard(8, 5);
    c.tau_si = 4;
    assert!(matches!(make_pilots(&c, Scheme::Simultaneous), Err(Error::Validation(_))));
}

#[test]
fn noiseless_single_cell_dl_is_perfect() {
    let c = noiseless(cfg(json!({
        "n_cells": 1, "m_tx": 4, "m_rx": 4, "k_dl": 1, "k_ul": 1, "p_ref_dbm": 40.0, "cell_radius_m": 2000.0,
    })));
    let p = profile_for(&c, 1).unwrap();
    let v = estimate_variances(&c, &p, Scheme::NonSimultaneous);
    assert!((v.dl_hat[[0, 0, 0]] - p.d_dl[[0, 0, 0]]).abs() <= 1e-12 * p.d_dl[[0, 0, 0]]);
    assert_eq!(v.dl_err[[0, 0, 0]], 0.0);
}

/// Two cells, one antenna and one user each, unit gains everywhere.
fn unit_profile(n: usize, k_ul: usize) -> LargeScaleProfile {
    LargeScaleProfile {
        d_dl: Array3::from_elem((n, n, 1), 1.0),
        d_ul: Array3::from_elem((n, n, k_ul), 1.0),
        d_bs: Array2::from_shape_fn((n, n), |(i, j)| if i == j { 0.0 } else { 1.0 }),
        d_si: SiGains::uniform(1, 1, 1.0),
        d_ue: Array4::from_elem((n, n, k_ul, 1), 1.0),
    }
}

#[test]
fn contaminated_ul_estimate_third() {
    // tau_uu P_u = 1 and n0 = 1 (both 30 dBm = 1 W).
    let c = cfg(json!({
        "n_cells": 2, "m_tx": 1, "m_rx": 1, "k_dl": 1, "k_ul": 1, "p_ref_dbm": 30.0, "noise_floor_dbm": 30.0,
        "cell_radius_m": 2000.0, "power_scaling": "none",
    }));
    let v = estimate_variances(&c, &unit_profile(2, 1), Scheme::NonSimultaneous);
    for b in 0..2 {
        for cc in 0..2 {
            assert!((v.ul_hat[[b, cc, 0, 0]] - 1.0 / 3.0).abs() < 1e-15);
            assert!((v.ul_err[[b, cc, 0, 0]] - 2.0 / 3.0).abs() < 1e-15);
        }
    }
}

#[test]
fn simultaneous_si_without_ul_users_matches_separate() {
    let c = standard(16, 0);
    let p = profile_for(&c, 3).unwrap();
    let a = estimate_variances(&c, &p, Scheme::NonSimultaneous);
    let b = estimate_variances(&c, &p, Scheme::Simultaneous);
    assert_eq!(a.si_hat, b.si_hat);
    assert_eq!(a.si_err, b.si_err);
}

#[test]
fn noiseless_simultaneous_si_estimate_is_exact() {
    let c = noiseless(standard(8, 0));
    let p = profile_for(&c, 3).unwrap();
    let ch = sample_channels(&p, 11).compose(&p);
    let est = run_pilot_phase(&c, &p, &ch, Scheme::Simultaneous, 11).unwrap();
    for b in 0..3 {
        for (x, y) in est.si[b].iter().zip(ch.bs(b, b).iter()) {
            assert!((x - y).norm() <= 1e-9 * y.norm(), "{x} vs {y}");
        }
    }
}

#[test]
fn noiseless_si_nmse_vanishes() {
    let c = noiseless(standard(8, 0));
    let p = profile_for(&c, 3).unwrap();
    let t = nmse(&c, &p, Scheme::NonSimultaneous);
    assert!(t.si.iter().all(|s| s.iter().all(|v| *v == 0.0)));
}

#[test]
fn si_nmse_is_radius_invariant_and_spt_gap_shrinks_with_radius() {
    let at = |p_r: f64, r: f64| {
        cfg(json!({
            "n_cells": 3, "m_tx": 16, "m_rx": 16, "k_dl": 5, "k_ul": 5, "p_ref_dbm": p_r, "cell_radius_m": r,
            "alpha_db": -50.0, "beta_db": -50.0,
        }))
    };
    for p_r in [0.0, 20.0, 40.0] {
        let mut gaps = Vec::new();
        let mut base = None;
        for r in [500.0, 1000.0, 2000.0] {
            let c = at(p_r, r);
            let p = profile_for(&c, 8).unwrap();
            let a = nmse(&c, &p, Scheme::NonSimultaneous);
            let b = nmse(&c, &p, Scheme::Simultaneous);
            match &base {
                None => base = Some(a.si.clone()),
                Some(s) => assert_eq!(s, &a.si),
            }
            for (x, y) in a.si.iter().zip(&b.si) {
                assert!(x.iter().zip(y).all(|(u, v)| v >= u));
            }
            gaps.push(b.si_mean() - a.si_mean());
        }
        assert!(gaps.windows(2).all(|w| w[1] < w[0]), "P_r={p_r}: {gaps:?}");
    }
}

#[test]
fn simultaneous_ul_error_not_below_separate_when_ul_slot_is_longest() {
    let mut c = cfg(json!({
        "n_cells": 3, "m_tx": 4, "m_rx": 4, "k_dl": 5, "k_ul": 5, "p_ref_dbm": 40.0, "cell_radius_m": 2000.0,
        "tau_uu": 8,
    }));
    c.tau_si = 4;
    let p = profile_for(&c, 2).unwrap();
    let a = estimate_variances(&c, &p, Scheme::NonSimultaneous);
    let b = estimate_variances(&c, &p, Scheme::Simultaneous);
    assert!(a.ul_err.iter().zip(&b.ul_err).all(|(x, y)| y >= x));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]
    #[test]
    fn variances_decompose_the_gain(
        n in 1usize..4, m in 1usize..10, k in 0usize..5, p_r in -10.0f64..50.0,
        alpha in -120.0f64..-20.0, beta in -120.0f64..-20.0, seed in any::<u64>(), spt in any::<bool>(),
    ) {
        let c = cfg(json!({
            "n_cells": n, "m_tx": m, "m_rx": m, "k_dl": k, "k_ul": k, "p_ref_dbm": p_r,
            "cell_radius_m": 1000.0, "alpha_db": alpha, "beta_db": beta,
        }));
        let p = profile_for(&c, seed).unwrap();
        let scheme = if spt { Scheme::Simultaneous } else { Scheme::NonSimultaneous };
        let v = estimate_variances(&c, &p, scheme);
        let close = |h: f64, e: f64, g: f64| e >= 0.0 && h >= 0.0 && ((h + e - g) / g).abs() <= 1e-12;
        for ((b, cc, kk), h) in v.dl_hat.indexed_iter() {
            prop_assert!(close(*h, v.dl_err[[b, cc, kk]], p.d_dl[[b, cc, kk]]));
        }
        for ((b, cc, kk, l), h) in v.ul_hat.indexed_iter() {
            prop_assert!(close(*h, v.ul_err[[b, cc, kk, l]], p.d_ul[[b, cc, kk]]));
        }
        for b in 0..n {
            for ((l, mm), h) in v.si_hat[b].indexed_iter() {
                prop_assert!(close(*h, v.si_err[b][[l, mm]], p.d_si.get(l, mm)));
            }
        }
        let t = nmse(&c, &p, scheme);
        for ((b, cc, kk), x) in t.dl.indexed_iter() {
            prop_assert!((x - v.dl_err[[b, cc, kk]] / p.d_dl[[b, cc, kk]]).abs() <= 1e-9);
        }
    }
}
