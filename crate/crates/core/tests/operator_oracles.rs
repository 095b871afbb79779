//! Frozen and independently computed reference values for the fractional
//! operator: closed-form constants, an independent mode integration, and
//! spectral/quadrature agreement.

use std::f64::consts::PI;

use fraclab::fractional_operator::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::function::gamma::gamma;

fn closed_form_c1(s: f64) -> f64 {
    4f64.powf(s) * gamma(0.5 + s) * s / (PI.sqrt() * gamma(1.0 - s))
}

/// `∫_0^∞ 2(1 - cos t) t^{-1-2s} dt = s^{-1} ∫_0^∞ sin(t) t^{-2s} dt`,
/// the latter summed over half periods with repeated averaging of the
/// alternating partial sums.
fn mode_integral_by_half_periods(s: f64) -> f64 {
    let (x, w) = gauss_legendre(48);
    let piece = |a: f64, b: f64| -> f64 {
        let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
        x.iter().zip(&w).map(|(xi, wi)| wi * h * (c + h * xi).sin() * (c + h * xi).powf(-2.0 * s)).sum()
    };
    // First half period: substitute t = u^m to tame t^{-2s} at the origin.
    let m = 1.0 / (1.0 - 2.0 * s).max(0.05);
    let first: f64 = {
        let top = PI.powf(1.0 / m);
        let n = 64;
        (0..n)
            .map(|j| {
                let (a, b) = (top * j as f64 / n as f64, top * (j + 1) as f64 / n as f64);
                let (c, h) = (0.5 * (a + b), 0.5 * (b - a));
                x.iter()
                    .zip(&w)
                    .map(|(xi, wi)| {
                        let u = c + h * xi;
                        let t = u.powf(m);
                        wi * h * t.sin() * t.powf(-2.0 * s) * m * u.powf(m - 1.0)
                    })
                    .sum::<f64>()
            })
            .sum()
    };
    let mut partial = vec![first];
    let mut acc = first;
    for k in 1..60 {
        acc += piece(k as f64 * PI, (k + 1) as f64 * PI);
        partial.push(acc);
    }
    while partial.len() > 1 {
        partial = partial.windows(2).map(|p| 0.5 * (p[0] + p[1])).collect();
    }
    partial[0] / s
}

/// `∫_R (1 + h²)^{-1-s} dh` by composite Simpson after `h = tan φ`.
fn slice_integral_simpson(s: f64) -> f64 {
    let n = 20_000;
    let (a, b) = (-0.5 * PI, 0.5 * PI);
    let h = (b - a) / n as f64;
    let f = |phi: f64| phi.cos().max(0.0).powf(2.0 * s);
    let mut sum = f(a) + f(b);
    for i in 1..n {
        sum += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    sum * h / 3.0
}

#[test]
fn calibrated_constant_matches_closed_form() {
    for s in [0.25, 0.5, 0.75] {
        let c = calibrate_constant(s, 1).unwrap();
        let exact = closed_form_c1(s);
        assert!((c / exact - 1.0).abs() < 1e-5, "s={s}: {c} vs {exact}");
    }
}

#[test]
fn calibrated_constant_matches_independent_integration() {
    for s in [0.1, 0.25, 0.4, 0.75] {
        let c = calibrate_constant(s, 1).unwrap();
        let oracle = 1.0 / mode_integral_by_half_periods(s);
        assert!((c / oracle - 1.0).abs() < 1e-5, "s={s}: {c} vs {oracle}");
    }
}

#[test]
fn planar_constant_is_the_sliced_line_constant() {
    let k = slice_integral_simpson(0.5);
    assert!((k - 2.0).abs() < 1e-8);
    let c2 = calibrate_constant(0.5, 2).unwrap();
    let c1 = calibrate_constant(0.5, 1).unwrap();
    assert!((c2 / (c1 / k) - 1.0).abs() < 1e-4, "{c2} vs {}", c1 / k);
    assert!((c2 * 2.0 * PI - 1.0).abs() < 1e-5);
    for s in [0.25, 0.75] {
        let ratio = calibrate_constant(s, 2).unwrap() / (calibrate_constant(s, 1).unwrap() / slice_integral_simpson(s));
        assert!((ratio - 1.0).abs() < 1e-4, "s={s}: {ratio}");
    }
}

#[test]
fn calibration_is_bitwise_deterministic() {
    let a = calibrate_constant(0.3, 2).unwrap();
    let b = calibrate_constant(0.3, 2).unwrap();
    assert_eq!(a.to_bits(), b.to_bits());
}

#[test]
fn constants_are_annihilated_by_quadrature() {
    for (s, d) in [(0.2, 1), (0.75, 1), (0.4, 2)] {
        let scheme = QuadratureScheme::new(s, d, 0.01).unwrap();
        let c = Constant(1.0);
        let prof = if d == 1 { ProfileRef::Line(&c) } else { ProfileRef::Plane(&c) };
        for x in [0.0, 1.5, -30.0] {
            let v = quadrature_apply_at(prof, &[x, 0.7], s, &scheme).unwrap();
            assert!(v.value.abs() <= 1e-12, "{v:?}");
        }
    }
}

#[test]
fn ramp_kink_reproduces_closed_form() {
    // ψ with A1 = 0, A2 = 1, θ = 0.5 and s = 1/4 gives -2 c_s at x = A2.
    let s = 0.25;
    let scheme = QuadratureScheme::new(s, 1, 0.01).unwrap();
    let psi = PiecewiseLinear::ramp(0.0, 1.0, 0.5).unwrap();
    let v = quadrature_apply_at(ProfileRef::Line(&psi), &[1.0], s, &scheme).unwrap();
    let expected = -2.0 * scheme.normalization_constant;
    assert!((v.value / expected - 1.0).abs() < 1e-10, "{} vs {expected}", v.value);
}

#[test]
fn quadrature_matches_spectral_on_gaussians() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for &(d, s) in &[(1usize, 0.25), (1, 0.75), (2, 0.5)] {
        let (l, n) = if d == 1 { (4096.0, 65536) } else { (64.0, 512) };
        let g = Gaussian { center: [0.0, 0.0], width: 1.0, amplitude: 1.0 };
        let field = GridField::from_fn(d, l, n, |p| {
            if d == 1 {
                Profile1d::value(&g, p[0])
            } else {
                g.value_at([p[0], p[1]])
            }
        })
        .unwrap();
        let spec = spectral_apply(&field, s).unwrap();
        let scheme = QuadratureScheme::new(s, d, field.spacing()).unwrap();
        for _ in 0..5 {
            // nodes within one width of the center, where the image is far from zero
            let reach = (1.0 / field.spacing()) as usize;
            let i = n / 2 - reach + rng.gen_range(0..2 * reach);
            let j = if d == 1 { 0 } else { n / 2 - reach / 2 + rng.gen_range(0..reach) };
            let k = if d == 1 { i } else { i * n + j };
            let p = field.point(k);
            let prof = if d == 1 { ProfileRef::Line(&g) } else { ProfileRef::Plane(&g) };
            let q = quadrature_apply_at(prof, &p, s, &scheme).unwrap();
            let reference = spec.values()[k];
            assert!((q.value - reference).abs() <= 1e-3 * reference.abs(), "d={d} s={s} p={p:?}: {} vs {reference}", q.value);
        }
    }
}
