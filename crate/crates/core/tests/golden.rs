use nclab_core::basis::BasisContext;
use nclab_core::fredholm::{characteristic_pf, SliceTest, TestFunction, TestFunctionSpec};
use nclab_core::kernels::{CorrelationKernel, CorrelationQuery};
use nclab_core::quadrature::{QuadratureSpec, Scheme};
use nclab_core::stochastic::TimePartition;

fn kernel(times: &[f64]) -> CorrelationKernel {
    let p = TimePartition::new(times.to_vec(), 1.0).unwrap();
    CorrelationKernel::new(BasisContext::new(2, &p).unwrap())
}

#[test]
fn one_point_density_at_horizon() {
    let k = kernel(&[1.0]);
    for (x, want) in [(0.0, 0.5641895835), (0.7, 0.5455737879), (-1.3, 0.4225233895)] {
        let got = k.one_point_density(0, x).unwrap();
        assert!((got - want).abs() < 1e-9, "x={x}: {got}");
    }
}

#[test]
fn one_point_density_before_horizon() {
    let k = kernel(&[0.5, 1.0]);
    for (x, want) in [(0.0, 0.6514700159), (0.7, 0.7098004714), (-1.3, 0.4097846160)] {
        let got = k.one_point_density(0, x).unwrap();
        assert!((got - want).abs() < 1e-9, "x={x}: {got}");
    }
}

#[test]
fn two_time_correlation() {
    let k = kernel(&[0.5, 1.0]);
    for (x, y, want) in [(0.0, 0.3, 0.43091061806), (0.5, -0.8, 0.37955297663)] {
        let q = CorrelationQuery::pair(2, 0, x, 1, y).unwrap();
        let got = k.correlation(&q).unwrap().value;
        assert!((got - want).abs() < 1e-10, "({x}, {y}): {got}");
    }
}

#[test]
fn characteristic_function_values() {
    let q = QuadratureSpec::new(Scheme::GaussLegendre, 40, 1e-9).unwrap();
    let bump = TestFunction::Bump { center: 0.2, half_width: 1.5, height: 1.0 };
    let one = TestFunctionSpec::new(vec![SliceTest { function: Some(bump), theta: 1.3 }]).unwrap();
    let psi = characteristic_pf(&one, &kernel(&[1.0]), &q).unwrap();
    assert!((psi.re - 0.53984219125688).abs() < 1e-10 && (psi.im - 0.63996961066692).abs() < 1e-10, "{psi}");

    let two = TestFunctionSpec::new(vec![
        SliceTest { function: Some(bump), theta: 1.3 },
        SliceTest {
            function: Some(TestFunction::Indicator { lo: -0.5, hi: 0.8, height: 1.0 }),
            theta: -0.7,
        },
    ])
    .unwrap();
    let psi = characteristic_pf(&two, &kernel(&[0.5, 1.0]), &q).unwrap();
    assert!((psi.re - 0.70910248047).abs() < 1e-9 && (psi.im - 0.44513755280).abs() < 1e-9, "{psi}");
}
