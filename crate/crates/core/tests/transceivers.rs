use fdmimo_core::linalg::{frobenius_sq, gram_solve, herm};
use fdmimo_core::rng::{complex_normal, substream, Family};
use fdmimo_core::transceivers::{
    detector_for, dl_quantization, draw_impairments, precoder_for, ul_quantization, Normalization,
};
use fdmimo_core::{Error, FilterKind};
use ndarray::{Array1, Array2};
use num_complex::Complex64;
use proptest::prelude::*;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gaussian(rows: usize, cols: usize, seed: u64) -> Array2<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| complex_normal(&mut rng))
}

fn column_norms(f: &Array2<Complex64>) -> Vec<f64> {
    f.columns().into_iter().map(|c| c.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()).collect()
}

#[test]
fn mf_precoder_has_unit_frobenius_norm() {
    let g = gaussian(4, 16, 1);
    let p = precoder_for(&g, FilterKind::MF).unwrap();
    assert_eq!(p.normalization, Normalization::Matrix);
    assert!((frobenius_sq(&p.f) - 1.0).abs() < 1e-12);
}

#[test]
fn zf_precoder_diagonalizes_the_channel() {
    let k = 4;
    let g = gaussian(k, 16, 2);
    let p = precoder_for(&g, FilterKind::ZF).unwrap();
    assert_eq!(p.normalization, Normalization::Vector);
    let target = 1.0 / (k as f64).sqrt();
    assert!(column_norms(&p.f).iter().all(|n| (n - target).abs() < 1e-12 * target));
    let gf = g.dot(&p.f);
    for ((i, j), z) in gf.indexed_iter() {
        if i == j {
            assert!(z.norm() > 0.0);
        } else {
            assert!(z.norm() < 1e-10, "({i},{j}) = {z}");
        }
    }
}

#[test]
fn zf_requires_enough_antennas() {
    let g = gaussian(3, 2, 3);
    assert!(matches!(precoder_for(&g, FilterKind::ZF), Err(Error::Singular(_))));
    let g = gaussian(2, 3, 3);
    assert!(matches!(detector_for(&g, FilterKind::ZF), Err(Error::Singular(_))));
}

#[test]
fn rank_deficient_gram_is_singular() {
    let row = gaussian(1, 8, 4);
    let g = Array2::from_shape_fn((2, 8), |(_, m)| row[[0, m]]);
    assert!(matches!(gram_solve(&g), Err(Error::Singular(_))));
}

#[test]
fn mf_detector_is_conjugate_transpose() {
    let g = gaussian(16, 4, 5);
    assert_eq!(detector_for(&g, FilterKind::MF).unwrap().w, herm(&g));
}

#[test]
fn zf_detector_is_left_inverse() {
    let g = gaussian(16, 4, 6);
    let w = detector_for(&g, FilterKind::ZF).unwrap().w;
    let wg = w.dot(&g);
    for ((i, j), z) in wg.indexed_iter() {
        let e = if i == j { Complex64::new(1.0, 0.0) } else { Complex64::new(0.0, 0.0) };
        assert!((z - e).norm() < 1e-10);
    }
}

#[test]
fn quantization_examples() {
    let q = dl_quantization(1.0, 2.0, 1.0).unwrap();
    assert!((q.symbol_power - 1.0).abs() < 1e-15);
    assert!((q.noise_var - 1.0).abs() < 1e-15);
    let q = dl_quantization(200.0, 3.0, 1.0).unwrap();
    assert!(q.noise_var < 1e-50);
    assert!((q.symbol_power - 3.0).abs() < 1e-15);
    assert!((ul_quantization(1.0, 5.0).unwrap() - 5.0).abs() < 1e-15);
    for c in [0.0, -1.0, f64::NAN] {
        assert!(matches!(dl_quantization(c, 1.0, 1.0), Err(Error::Domain(_))));
        assert!(matches!(ul_quantization(c, 1.0), Err(Error::Domain(_))));
    }
}

#[test]
fn zero_impairment_levels_give_zero_draws() {
    let s = Array1::from_elem(4, Complex64::new(1.0, -1.0));
    let mut rng = substream(1, 0, Family::Impairments);
    let d = draw_impairments(&s, &s, 0.0, 0.0, &mut rng);
    assert!(d.psi.iter().chain(d.delta.iter()).all(|z| *z == Complex64::new(0.0, 0.0)));
}

#[test]
fn tx_noise_variance_follows_symbol_power() {
    let alpha = 1e-3;
    let s = Array1::from_vec(vec![Complex64::new(2.0, 0.0), Complex64::new(0.0, 0.5)]);
    let mut rng = substream(2, 0, Family::Impairments);
    let n = 100_000;
    let mut p = [Vec::new(), Vec::new()];
    for _ in 0..n {
        let d = draw_impairments(&s, &s, alpha, 0.0, &mut rng);
        for (k, z) in d.psi.iter().enumerate() {
            p[k].push(z.norm_sqr());
        }
    }
    for (k, x) in p.iter().enumerate() {
        let mean = x.iter().sum::<f64>() / n as f64;
        let se = (x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64 / n as f64).sqrt();
        let target = alpha * s[k].norm_sqr();
        assert!((mean - target).abs() < 3.0 * se, "stream {k}: {mean} vs {target}");
    }
}

proptest! {
    #[test]
    fn quantization_reproduces_capacity(c in 0.01f64..40.0, p in 1e-6f64..1e3, e in 1e-6f64..1e3) {
        let q = dl_quantization(c, p, e).unwrap();
        let back = (1.0 + q.symbol_power * e / q.noise_var).log2();
        prop_assert!((back - c).abs() < 1e-9);
        let s = ul_quantization(c, e).unwrap();
        prop_assert!(((1.0 + e / s).log2() - c).abs() < 1e-9);
    }

    #[test]
    fn precoder_norm_contracts(k in 1usize..6, extra in 0usize..20, seed in any::<u64>()) {
        let g = gaussian(k, k + extra, seed);
        let mf = precoder_for(&g, FilterKind::MF).unwrap();
        prop_assert!((frobenius_sq(&mf.f) - 1.0).abs() < 1e-12);
        if let Ok(zf) = precoder_for(&g, FilterKind::ZF) {
            let target = 1.0 / (k as f64).sqrt();
            prop_assert!(column_norms(&zf.f).iter().all(|n| (n - target).abs() < 1e-12));
        }
    }
}
