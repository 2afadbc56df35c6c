use ctd_core::circuits::{CmdParams, Dynamics};
use ctd_core::decode::Proximity;
use ctd_core::scenario::SensorLayout;
use ctd_core::tuning::{
    bands_for_ranges, calibrate, calibrate_for_ranges, onset_rate, pdd_output_rate,
    verify_bands, verify_bands_with, BandSpec, RangeBands, Sweep, TuningError,
};
use proptest::prelude::*;

const DT: f64 = 1e-3;
const LEAK: f64 = 0.9;

#[test]
fn onset_examples() {
    assert!((onset_rate(1.0, 1.0, 0.0, DT).unwrap() - 1000.0).abs() < 1e-9);
    assert!((onset_rate(1.0, 4.0, 0.9, DT).unwrap() - 400.0).abs() < 1e-9);
    assert_eq!(onset_rate(1.0, 1.0, 1.0, DT), Err(TuningError::NoFiniteOnset));
}

proptest! {
    #[test]
    fn doubling_weight_halves_onset(w in 0.01f64..10.0, th in 0.1f64..10.0, leak in 0.0f64..0.99) {
        let a = onset_rate(w, th, leak, DT).unwrap();
        let b = onset_rate(2.0 * w, th, leak, DT).unwrap();
        prop_assert!((a - 2.0 * b).abs() <= 1e-9 * a);
    }
}

#[test]
fn calibration_closes_the_loop() {
    let bands = BandSpec::new(50.0, 120.0, 0.1);
    let params = calibrate(&bands, LEAK, DT).unwrap();
    params.validate().unwrap();
    let report = verify_bands(&params, &bands, LEAK, DT);
    assert!(report.pass, "{report:?}");
    assert!(report.monotone && report.nested);
    let f1 = report.measured_f1.unwrap();
    let f2 = report.measured_f2.unwrap();
    assert!((f1 - 50.0).abs() <= 5.0 && (f2 - 120.0).abs() <= 12.0);
    let sweep = Sweep::for_bands(&bands, DT);
    assert!(sweep.points >= 30);
}

#[test]
fn other_bands_calibrate_too() {
    for (f1, f2) in [(30.0, 90.0), (80.0, 200.0), (150.0, 300.0)] {
        let bands = BandSpec::new(f1, f2, 0.1);
        let params = calibrate(&bands, LEAK, DT).unwrap();
        assert!(verify_bands(&params, &bands, LEAK, DT).pass, "{f1}/{f2}");
    }
}

#[test]
fn degenerate_bands_are_rejected() {
    assert!(matches!(
        calibrate(&BandSpec::new(50.0, 50.0, 0.1), LEAK, DT),
        Err(TuningError::InvalidBands(_))
    ));
    assert!(calibrate(&BandSpec::new(50.0, 700.0, 0.1), LEAK, DT).is_err());
}

#[test]
fn swapped_weights_break_the_bands() {
    let bands = BandSpec::new(50.0, 120.0, 0.1);
    let mut params = calibrate(&bands, LEAK, DT).unwrap();
    std::mem::swap(&mut params.weights.near, &mut params.weights.far);
    assert!(!verify_bands(&params, &bands, LEAK, DT).pass);
}

#[test]
fn below_the_floor_is_quiet_or_far() {
    let bands = BandSpec::new(50.0, 120.0, 0.1);
    let params = calibrate(&bands, LEAK, DT).unwrap();
    let sweep = Sweep {
        rate_min: 1.0,
        rate_max: 9.0,
        points: 9,
        horizon: 2000,
    };
    let report = verify_bands_with(&params, &bands, LEAK, DT, &sweep);
    assert!(report
        .points
        .iter()
        .all(|p| matches!(p.state, Proximity::None | Proximity::Far)));
}

#[test]
fn default_params_are_valid_placeholders() {
    CmdParams::default().validate().unwrap();
    assert_eq!(Dynamics::CMD.leak, LEAK);
}

#[test]
fn pdd_output_falls_with_distance() {
    let layout = SensorLayout::default();
    let rates: Vec<f64> = [0.3, 0.9, 1.5]
        .iter()
        .map(|&d| pdd_output_rate(&layout, d, DT).unwrap())
        .collect();
    assert!(rates[0] > rates[1] && rates[1] > rates[2], "{rates:?}");
    let bands = bands_for_ranges(&layout, &RangeBands::default(), 0.1, DT).unwrap();
    assert!(bands.floor < bands.f1 && bands.f1 < bands.f2);
}

#[test]
fn range_calibration_orders_the_states() {
    let layout = SensorLayout::default();
    let p = calibrate_for_ranges(&layout, &RangeBands::default(), LEAK, DT, 50).unwrap();
    p.validate().unwrap();
    assert!(p.weights.near < p.weights.middle && p.weights.middle < p.weights.far);
    let bad = RangeBands {
        far: 0.5,
        near: 0.6,
    };
    assert!(calibrate_for_ranges(&layout, &bad, LEAK, DT, 50).is_err());
}
