use chaoscomm::signals::{generate_message, read_trace_csv, write_trace_csv, MessageSpec, Trace};
use proptest::prelude::*;

fn finite() -> impl Strategy<Value = f64> {
    prop_oneof![
        -1e3..1e3f64,
        any::<f64>().prop_filter("finite", |v| v.is_finite()),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn csv_round_trip_is_exact(
        a in proptest::collection::vec(finite(), 2..40),
        dt_exp in -9i32..-3,
    ) {
        let dt = 10f64.powi(dt_exp);
        let n = a.len();
        let b: Vec<f64> = a.iter().rev().copied().collect();
        let traces = vec![
            ("x".to_string(), Trace::new(dt, 0.0, a.clone()).unwrap()),
            ("y".to_string(), Trace::new(dt, 0.0, b.clone()).unwrap()),
        ];
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace_csv(&traces, &path).unwrap();
        let back = read_trace_csv(&path).unwrap();
        prop_assert_eq!(back.len(), 2);
        prop_assert_eq!(&back[0].0, "x");
        prop_assert_eq!(back[0].1.samples(), &a[..]);
        prop_assert_eq!(back[1].1.samples(), &b[..]);
        prop_assert_eq!(back[0].1.len(), n);
        prop_assert!(((back[0].1.dt() - dt) / dt).abs() < 1e-9);
    }

    #[test]
    fn message_holds_two_levels_with_the_duty_cycle(
        frequency in 100.0..20_000.0f64,
        duty in 0.1..0.9f64,
    ) {
        let spec = MessageSpec { frequency, duty, ..MessageSpec::default() };
        let per_period = 1000usize;
        let dt = 1.0 / (frequency * per_period as f64);
        let m = generate_message(&spec, dt, 10 * per_period).unwrap();
        prop_assert!(m.samples().iter().all(|&v| v == 0.0 || v == 5.0));
        let high = m.samples().iter().filter(|&&v| v == 5.0).count() as f64;
        prop_assert!((high / m.len() as f64 - duty).abs() < 0.01);
    }
}
