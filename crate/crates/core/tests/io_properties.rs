use std::sync::Arc;

use proptest::prelude::*;
use qlab_core::hedgehog::lift_to_3d;
use qlab_core::io::{read_field, write_decomposition, write_field, write_profile, FIELD_HEADER};
use qlab_core::{
    solve_profile, DomainSpec, Error, Grid, MaterialParams, ProfileMethod, QField, QTensor, Shape,
};

fn grid(shape: Shape<f64>, h: f64) -> Arc<Grid<f64>> {
    Arc::new(Grid::build(DomainSpec::new(shape, h)).unwrap())
}

fn shapes() -> impl Strategy<Value = (Shape<f64>, f64)> {
    prop_oneof![
        Just((Shape::Interval { length: 1.0 }, 1.0 / 16.0)),
        Just((Shape::Interval { length: 0.7 }, 0.1)),
        Just((Shape::Rectangle { lx: 1.0, ly: 0.75 }, 0.125)),
        Just((Shape::Disk { radius: 1.0 }, 0.15)),
        Just((Shape::Disk { radius: 0.6 }, 0.1)),
        Just((Shape::Ball { radius: 0.9 }, 0.2)),
    ]
}

fn to_text(field: &QField<f64>) -> String {
    let mut buf = Vec::new();
    write_field(field, &mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn field_text_round_trip_is_exact((shape, h) in shapes(), seed in prop::array::uniform5(-1e3f64..1e3), tiny in any::<bool>()) {
        let g = grid(shape, h);
        let k = if tiny { 1e-300 } else { 1.0 };
        let f = QField::from_fn(g.clone(), |x| {
            QTensor::from_coeffs(std::array::from_fn(|j| k * seed[j] * (1.0 + x[0] - 0.3 * x[1] + x[2] * j as f64).sin()))
        });
        let back: QField<f64> = read_field(to_text(&f).as_bytes()).unwrap();
        prop_assert_eq!(back.grid().len(), g.len());
        prop_assert_eq!(back.grid().cuts().len(), g.cuts().len());
        prop_assert_eq!(back.values(), f.values());
        prop_assert_eq!(back.cut_values(), f.cut_values());
        prop_assert_eq!(to_text(&back), to_text(&f));
    }
}

#[test]
fn malformed_rows_report_their_line() {
    let f = QField::from_fn(grid(Shape::Interval { length: 1.0 }, 0.25), |x| {
        QTensor::uniaxial(x[0], &[1.0, 0.0, 0.0]).unwrap()
    });
    let text = to_text(&f);
    let mut lines: Vec<&str> = text.lines().collect();
    lines[3] = "0.5,0,0,1,2,three,4,5,interior";
    let broken = lines.join("\n");
    match read_field::<f64>(broken.as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    lines[3] = "0.5,0,0,1,2";
    match read_field::<f64>(lines.join("\n").as_bytes()) {
        Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
        other => panic!("{other:?}"),
    }
    assert!(matches!(
        read_field::<f64>("x,y\n".as_bytes()),
        Err(Error::Parse { line: 1, .. })
    ));
    assert!(read_field::<f64>(format!("{FIELD_HEADER}\n").as_bytes()).is_err());
}

#[test]
fn outputs_are_deterministic() {
    let p = MaterialParams::<f64>::reference();
    let s0 = p.preferred_s().unwrap();
    let run = || {
        let prof = solve_profile(&p, s0, 1.0, 129, ProfileMethod::Shooting).unwrap();
        let lift = lift_to_3d(&prof, grid(Shape::Ball { radius: 1.0 }, 0.125)).unwrap();
        let (mut a, mut b, mut c) = (Vec::new(), Vec::new(), Vec::new());
        write_profile(&prof, &mut a).unwrap();
        write_field(&lift, &mut b).unwrap();
        write_decomposition(&lift, 1e-9, &mut c).unwrap();
        (a, b, c)
    };
    assert_eq!(run(), run());
}

#[test]
fn decomposition_of_the_lift_is_radial() {
    let p = MaterialParams::<f64>::reference();
    let prof = solve_profile(
        &p,
        p.preferred_s().unwrap(),
        1.0,
        257,
        ProfileMethod::Shooting,
    )
    .unwrap();
    let lift = lift_to_3d(&prof, grid(Shape::Ball { radius: 1.0 }, 0.25)).unwrap();
    let mut out = Vec::new();
    write_decomposition(&lift, 1e-9, &mut out).unwrap();
    let text = String::from_utf8(out).unwrap();
    let mut rows = 0;
    for line in text.lines().skip(1) {
        let cols: Vec<&str> = line.split(',').collect();
        let v: Vec<f64> = cols[..8].iter().map(|c| c.parse().unwrap()).collect();
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        assert!(v[7] < 1e-10);
        if r > 0.0 {
            let dot = (v[0] * v[4] + v[1] * v[5] + v[2] * v[6]) / r;
            assert!((dot.abs() - 1.0).abs() < 1e-8, "{line}");
        } else {
            assert_eq!(cols[8], "isotropic");
        }
        rows += 1;
    }
    assert_eq!(rows, lift.grid().len());
}
