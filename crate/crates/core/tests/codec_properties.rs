use chaoscomm::codec::{
    bit_from_voltage, comparator_bit, threshold_decode, xor_mask, CodecParams, FilterSpec, LowPass,
};
use proptest::prelude::*;

/// Steady-state peak of the discrete filter driven by a unit sine.
fn simulated_gain(filter: FilterSpec, frequency: f64) -> f64 {
    let tau = filter.time_constant().unwrap();
    let period = 1.0 / frequency;
    let dt = (tau / 50.0).min(period / 2000.0);
    let lp = LowPass::new(&filter, dt).unwrap();
    let settle = (10.0 * tau).max(2.0 * period);
    let start = (settle / dt) as usize;
    let end = start + (2.0 * period / dt) as usize;
    let (mut vc, mut peak) = (0.0, 0.0_f64);
    for k in 0..end {
        let vin = (2.0 * std::f64::consts::PI * frequency * k as f64 * dt).sin();
        vc = lp.step(vc, vin);
        if k >= start {
            peak = peak.max(vc.abs());
        }
    }
    peak
}

#[test]
fn filter_gain_matches_rc_response() {
    for filter in [
        FilterSpec::Filter1,
        FilterSpec::Filter2,
        FilterSpec::Filter3,
    ] {
        let (re, ce) = filter.components().unwrap();
        for f in [1e3, 6.222e3, 60e3, 600e3] {
            let w = 2.0 * std::f64::consts::PI * f;
            let oracle = 1.0 / (1.0 + (w * re * ce).powi(2)).sqrt();
            let g = simulated_gain(filter, f);
            assert!(
                ((g - oracle) / oracle).abs() < 0.005,
                "filter {filter} at {f} Hz: {g} vs {oracle}"
            );
            assert!(((filter.gain_at(f) - oracle) / oracle).abs() < 1e-12);
        }
    }
}

#[test]
fn table_gains_at_message_frequency() {
    assert!((FilterSpec::Filter3.gain_at(6222.0) - 0.9646).abs() < 1e-4);
    assert!((FilterSpec::Filter1.gain_at(6222.0) - 0.99994).abs() < 1e-5);
    assert_eq!(FilterSpec::None.gain_at(6222.0), 1.0);
}

#[test]
fn rc_ordering_of_filters() {
    let tau = |f: FilterSpec| f.time_constant().unwrap();
    assert!(tau(FilterSpec::Filter1) < tau(FilterSpec::Filter2));
    assert!(tau(FilterSpec::Filter2) < tau(FilterSpec::Filter3));
}

proptest! {
    #[test]
    fn xor_mask_is_an_involution(m: bool, h: bool) {
        let p = CodecParams::default();
        let sent = bit_from_voltage(xor_mask(m, h, &p), p.decode_threshold);
        let recovered = bit_from_voltage(xor_mask(sent, h, &p), p.decode_threshold);
        prop_assert_eq!(recovered, m);
    }

    #[test]
    fn decode_is_idempotent(v in -20.0..20.0f64) {
        let p = CodecParams::default();
        let once = threshold_decode(v, &p);
        prop_assert_eq!(threshold_decode(once, &p), once);
    }

    #[test]
    fn comparator_splits_at_reference(v in -10.0..10.0f64, vo in -5.0..5.0f64) {
        prop_assert_eq!(comparator_bit(v, vo), v <= vo);
    }

    #[test]
    fn lowpass_stays_between_state_and_input(s in -10.0..10.0f64, u in -10.0..10.0f64) {
        let lp = LowPass::new(&FilterSpec::Filter2, 1e-7).unwrap();
        let next = lp.step(s, u);
        prop_assert!(next >= s.min(u) - 1e-12 && next <= s.max(u) + 1e-12);
    }
}
