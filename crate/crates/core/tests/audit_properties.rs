use std::sync::Arc;

use proptest::prelude::*;
use qlab_core::audit::{
    boundary_audit, classify_field, director_constancy, symmetry_deviation, BoundaryAuditOptions,
};
use qlab_core::el::{initial_field, plate_bc};
use qlab_core::hedgehog::lift_to_3d;
use qlab_core::vec3::{self, Vec3};
use qlab_core::{
    relax, solve_profile, DomainSpec, Error, Grid, MaterialParams, ProfileMethod, QField, QTensor,
    Rotation, Shape, SolveOptions,
};

type Params = MaterialParams<f64>;

fn grid(shape: Shape<f64>, h: f64) -> Arc<Grid<f64>> {
    Arc::new(Grid::build(DomainSpec::new(shape, h)).unwrap())
}

fn s_star() -> f64 {
    Params::reference().preferred_s().unwrap()
}

fn direction(theta: f64, phi: f64) -> Vec3<f64> {
    [
        theta.sin() * phi.cos(),
        theta.sin() * phi.sin(),
        theta.cos(),
    ]
}

/// Mixes isotropic, uniaxial and biaxial regions.
fn mixed_field(g: Arc<Grid<f64>>, c: [f64; 5]) -> QField<f64> {
    QField::from_fn(g, |x| {
        let base =
            QTensor::uniaxial(c[0] * x[0] + 0.3, &direction(c[1] * x[1], c[2] * x[2])).unwrap();
        let bump = QTensor::uniaxial(c[3] * x[1] * x[2], &[1.0, 0.0, 0.0]).unwrap();
        if x[0] * c[4] > 0.2 {
            QTensor::zero()
        } else {
            base + bump
        }
    })
}

fn hedgehog_lift(h: f64) -> QField<f64> {
    let p = Params::reference();
    let prof = solve_profile(&p, s_star(), 1.0, 1025, ProfileMethod::Shooting).unwrap();
    lift_to_3d(&prof, grid(Shape::Ball { radius: 1.0 }, h)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn phase_fractions_are_rotation_invariant(
        c in prop::array::uniform5(-2.0f64..2.0),
        ball in any::<bool>(),
        k in 0usize..24,
    ) {
        let shape = if ball { Shape::Ball { radius: 1.0 } } else { Shape::Disk { radius: 1.0 } };
        let f = mixed_field(grid(shape, 0.25), c);
        let g = Rotation::axis_aligned()[k];
        // disks only admit the rotations that keep the plane
        if let Ok(turned) = f.rotate_all(&g) {
            let a = classify_field(&f, 1e-9).fractions();
            let b = classify_field(&turned, 1e-9).fractions();
            for j in 0..3 {
                prop_assert!((a[j] - b[j]).abs() <= 1e-12);
            }
            prop_assert!((a.iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn spread_compares_lines(
        k in 0.0f64..3.0,
        mask in prop::collection::vec(any::<bool>(), 1..13),
    ) {
        let g = grid(Shape::Rectangle { lx: 1.0, ly: 1.0 }, 0.125);
        let n = |x: &Vec3<f64>| direction(0.3 + k * x[0], k * x[1]);
        let a = QField::from_fn(g.clone(), |x| QTensor::uniaxial(0.6, &n(x)).unwrap());
        let mut b = a.clone();
        for (i, v) in b.values_mut().iter_mut().enumerate() {
            if mask[i % mask.len()] {
                let x = g.position(i);
                *v = QTensor::uniaxial(0.6, &vec3::scale(&n(&x), -1.0)).unwrap();
            }
        }
        let (da, db) = (director_constancy(&a, 1e-9, 1e-3), director_constancy(&b, 1e-9, 1e-3));
        prop_assert_eq!(da.components.len(), db.components.len());
        for (x, y) in da.components.iter().zip(&db.components) {
            prop_assert!((x.spread - y.spread).abs() <= 1e-12);
            prop_assert!(x.spread >= 0.0 && x.spread <= std::f64::consts::FRAC_PI_2 + 1e-12);
        }
    }
}

#[test]
fn hybrid_cell_fails_the_constancy_test_at_every_resolution() {
    let p = Params::reference();
    let s = s_star();
    for k in [32.0, 64.0, 128.0] {
        let g = grid(Shape::Interval { length: 1.0 }, 1.0 / k);
        let bc = plate_bc(
            &g,
            QTensor::uniaxial(s, &[1.0, 0.0, 0.0]).unwrap(),
            QTensor::uniaxial(s, &[0.0, 0.0, 1.0]).unwrap(),
        )
        .unwrap();
        let (f, report) = relax(
            &p,
            &initial_field(g, &bc).unwrap(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert!(report.converged);
        assert!(classify_field(&f, 1e-9).fractions()[2] > 0.0);
        let d = director_constancy(&f, 1e-9, 1e-3);
        assert!(!d.uniaxial_constant || !d.dichotomy_holds, "h = 1/{k}");
    }
}

#[test]
fn lift_has_no_radial_director_derivative_in_the_limit() {
    let p = Params::reference();
    let opts = BoundaryAuditOptions::default();
    let d: Vec<f64> = [8.0, 16.0, 32.0]
        .iter()
        .map(|k| {
            boundary_audit(&hedgehog_lift(1.0 / k), &p, s_star(), &opts)
                .unwrap()
                .dn_sup
        })
        .collect();
    // at least first order in h
    for w in d.windows(2) {
        assert!(w[0] / w[1] >= 1.8, "{d:?}");
    }
}

#[test]
fn symmetry_deviation_is_rotation_invariant() {
    let lift = hedgehog_lift(0.125);
    let base = symmetry_deviation(&lift, 16).unwrap();
    for g in Rotation::axis_aligned().into_iter().step_by(3) {
        let turned = symmetry_deviation(&lift.rotate_all(&g).unwrap(), 16).unwrap();
        assert!((turned - base).abs() <= 1e-12, "{turned} vs {base}");
    }
    assert!(base <= 0.2);
    let flat = QField::from_fn(lift.grid().clone(), |_| {
        QTensor::uniaxial(0.7, &[0.0, 0.0, 1.0]).unwrap()
    });
    assert!(symmetry_deviation(&flat, 16).unwrap() >= 0.5);
}

#[test]
fn constant_order_parameter_is_not_an_equilibrium() {
    let p = Params::reference();
    let s0 = s_star();
    let g = grid(Shape::Ball { radius: 1.0 }, 1.0 / 16.0);
    let f = QField::from_fn(g, |x| {
        let r = vec3::norm(x);
        if r == 0.0 {
            QTensor::zero()
        } else {
            QTensor::uniaxial(s0, &vec3::scale(x, 1.0 / r)).unwrap()
        }
    });
    let b = boundary_audit(&f, &p, s0, &BoundaryAuditOptions::default()).unwrap();
    let want = (3.0 * s0 + p.psi(s0) / 2.0).abs();
    assert!(b.s1_mean.abs() <= 1e-8 && b.s2_mean.abs() <= 1e-8);
    assert!((b.star1_discrepancy - want).abs() <= 1e-8 * want);
    assert!(!b.flags.is_empty());
}

#[test]
fn biaxial_shell_is_refused() {
    let p = Params::reference();
    let g = grid(Shape::Ball { radius: 1.0 }, 0.125);
    let m = [[0.5, 0.0, 0.0], [0.0, -0.1, 0.0], [0.0, 0.0, -0.4]];
    let f = QField::from_fn(g, |_| QTensor::from_matrix(&m));
    let err = boundary_audit(&f, &p, 0.5, &BoundaryAuditOptions::default()).unwrap_err();
    assert!(matches!(err, Error::AuditRefused(_)));
    let rect = QField::zeros(grid(Shape::Rectangle { lx: 1.0, ly: 1.0 }, 0.25));
    assert!(symmetry_deviation(&rect, 4).is_err());
}
