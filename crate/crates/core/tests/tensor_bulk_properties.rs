use proptest::prelude::*;
use qlab_core::vec3::{self, Vec3};
use qlab_core::{BulkPotential, MaterialParams, Phase, QTensor, Rotation};

fn unit_vector() -> impl Strategy<Value = Vec3<f64>> {
    (-1.0f64..1.0, 0.0f64..std::f64::consts::TAU).prop_map(|(z, phi)| {
        let r = (1.0 - z * z).sqrt();
        [r * phi.cos(), r * phi.sin(), z]
    })
}

fn tensor() -> impl Strategy<Value = QTensor<f64>> {
    prop::array::uniform5(-2.0f64..2.0).prop_map(QTensor::from_coeffs)
}

fn rotation() -> impl Strategy<Value = Rotation<f64>> {
    (unit_vector(), -3.2f64..3.2)
        .prop_map(|(axis, angle)| Rotation::about_axis(&axis, angle).expect("unit axis"))
}

fn nonzero_s() -> impl Strategy<Value = f64> {
    prop_oneof![-5.0f64..-1e-3, 1e-3f64..5.0]
}

fn line_distance(a: &Vec3<f64>, b: &Vec3<f64>) -> f64 {
    vec3::norm(&vec3::sub(a, b)).min(vec3::norm(&vec3::add(a, b)))
}

proptest! {
    #[test]
    fn uniaxial_decomposition_round_trip(s in nonzero_s(), n in unit_vector()) {
        let d = QTensor::uniaxial(s, &n).unwrap().decompose(1e-10);
        prop_assert!((d.s - s).abs() <= 1e-9 * s.abs().max(1.0));
        prop_assert!(line_distance(&d.n, &n) <= 1e-8);
        prop_assert_eq!(d.phase, Phase::Uniaxial);
    }

    #[test]
    fn reconstruction_is_symmetric_traceless_and_isometric(q in tensor()) {
        let m = q.to_matrix();
        prop_assert_eq!(m[0][0] + m[1][1] + m[2][2], 0.0);
        for i in 0..3 {
            for j in 0..3 {
                prop_assert_eq!(m[i][j], m[j][i]);
            }
        }
        prop_assert!((vec3::frobenius(&m) - q.norm()).abs() <= 1e-14 * q.norm().max(1.0));
    }

    #[test]
    fn spectral_data_is_consistent(q in tensor()) {
        let d = q.decompose(1e-9);
        prop_assert!(d.eigenvalues.iter().sum::<f64>().abs() <= 1e-12);
        if d.phase != Phase::Isotropic {
            prop_assert!((vec3::norm(&d.n) - 1.0).abs() <= 1e-12);
        }
        let uniaxial_like = matches!(d.phase, Phase::Isotropic | Phase::Uniaxial);
        prop_assert_eq!(uniaxial_like, d.beta <= 1e-9);
    }

    #[test]
    fn biaxiality_is_rotation_invariant(q in tensor(), g in rotation()) {
        prop_assert!((q.rotate(&g).biaxiality() - q.biaxiality()).abs() <= 1e-12);
    }

    #[test]
    fn invariants_are_rotation_invariant(q in tensor(), g in rotation()) {
        let (x0, y0) = q.invariants();
        let (x1, y1) = q.rotate(&g).invariants();
        prop_assert!((x0 - x1).abs() <= 1e-12 * x0.max(1.0));
        prop_assert!((y0 - y1).abs() <= 1e-12 * x0.max(1.0).powf(1.5));
    }

    #[test]
    fn distinct_eigenvalues_are_biaxial(l1 in -2.0f64..2.0, l2 in -2.0f64..2.0, g in rotation()) {
        let l3 = -l1 - l2;
        let gaps = [(l1 - l2).abs(), (l2 - l3).abs(), (l1 - l3).abs()];
        prop_assume!(gaps.iter().all(|&d| d > 1e-3));
        let m = [[l1, 0.0, 0.0], [0.0, l2, 0.0], [0.0, 0.0, l3]];
        let q = QTensor::from_matrix(&m).rotate(&g);
        prop_assert!(q.biaxiality() > 0.0);
    }

    #[test]
    fn uniaxial_is_linear_in_s(s in -5.0f64..5.0, t in -5.0f64..5.0, n in unit_vector()) {
        let sum = QTensor::uniaxial(s, &n).unwrap() + QTensor::uniaxial(t, &n).unwrap();
        let direct = QTensor::uniaxial(s + t, &n).unwrap();
        prop_assert!((sum - direct).norm() <= 1e-13 * (1.0 + s.abs() + t.abs()));
    }

    #[test]
    fn bulk_density_is_frame_invariant(q in tensor(), g in rotation()) {
        let bulk = BulkPotential::quartic(1.0, 1.0, 1.0);
        let a = bulk.density(&q);
        let b = bulk.density(&q.rotate(&g));
        prop_assert!((a - b).abs() <= 1e-11 * (1.0 + a.abs()));
    }

    #[test]
    fn bulk_gradient_is_traceless(q in tensor(), a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.0f64..2.0) {
        let g = BulkPotential::quartic(a, b, c).bulk_gradient(&q);
        let m = g.to_matrix();
        prop_assert!(g.is_finite());
        prop_assert!((m[0][0] + m[1][1] + m[2][2]).abs() <= 1e-14 * (1.0 + g.norm()));
    }

    #[test]
    fn uniaxial_bulk_gradient_is_l_psi_times_direction(s in -3.0f64..3.0, n in unit_vector(), l in 0.1f64..4.0) {
        let p = MaterialParams::new(l, BulkPotential::quartic(1.0, 1.0, 1.0)).unwrap();
        let q = QTensor::uniaxial(s, &n).unwrap();
        let expected = QTensor::uniaxial(1.0, &n).unwrap().scale(l * p.psi(s));
        let got = p.bulk.bulk_gradient(&q);
        prop_assert!((got - expected).norm() <= 1e-12 * (1.0 + expected.norm()));
    }

    #[test]
    fn partial_derivatives_match_central_differences(x in 0.1f64..3.0, y in -1.0f64..1.0, a in -2.0f64..2.0, b in -2.0f64..2.0, c in 0.1f64..2.0) {
        let bulk = BulkPotential::quartic(a, b, c);
        let step = 1e-6;
        let fd1 = (bulk.phi(x + step, y) - bulk.phi(x - step, y)) / (2.0 * step);
        let fd2 = (bulk.phi(x, y + step) - bulk.phi(x, y - step)) / (2.0 * step);
        let rel = |exact: f64, fd: f64| (exact - fd).abs() / exact.abs().max(1.0);
        prop_assert!(rel(bulk.d1(x, y), fd1) <= 1e-6);
        prop_assert!(rel(bulk.d2(x, y), fd2) <= 1e-6);
    }
}

#[test]
fn uniaxial_density_matches_closed_form() {
    // f_b(s) = -(2a/3) s^2 - (2b/9) s^3 + (4c/9) s^4
    let (a, b, c) = (0.7f64, 1.3, 0.9);
    let bulk = BulkPotential::quartic(a, b, c);
    for s in [-1.5f64, -0.3, 0.0, 0.4, 1.1, 2.0] {
        let closed =
            -(2.0 * a / 3.0) * s * s - (2.0 * b / 9.0) * s.powi(3) + (4.0 * c / 9.0) * s.powi(4);
        assert!((bulk.uniaxial_density(s) - closed).abs() < 1e-14);
    }
}

#[test]
fn single_precision_decomposition() {
    let n = [0.0f32, 0.6, 0.8];
    let d = QTensor::uniaxial(1.25f32, &n).unwrap().decompose(1e-5);
    assert!((d.s - 1.25).abs() < 1e-5);
    assert!(line_distance_f32(&d.n, &n) < 1e-4);
}

fn line_distance_f32(a: &Vec3<f32>, b: &Vec3<f32>) -> f32 {
    vec3::norm(&vec3::sub(a, b)).min(vec3::norm(&vec3::add(a, b)))
}
