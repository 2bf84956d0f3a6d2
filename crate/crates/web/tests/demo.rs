use isatn_web::{capacity_curve_value, carbon_trace_value, Sky};

#[test]
fn carbon_trace_follows_the_affine_map() {
    let v = carbon_trace_value(7, 2).unwrap();
    let regions = v["regions"].as_array().unwrap();
    assert_eq!(regions.len(), 2);
    for r in 0..regions.len() {
        let ci = v["intensity"][r].as_array().unwrap();
        let re = v["renewable"][r].as_array().unwrap();
        assert_eq!(ci.len(), 48);
        for (c, s) in ci.iter().zip(re) {
            let expected = 450.0 * (1.0 - s.as_f64().unwrap()) + 50.0;
            assert!((c.as_f64().unwrap() - expected).abs() < 1e-9);
        }
    }
}

#[test]
fn carbon_trace_is_seeded() {
    assert_eq!(carbon_trace_value(3, 1).unwrap(), carbon_trace_value(3, 1).unwrap());
    assert_ne!(carbon_trace_value(3, 1).unwrap(), carbon_trace_value(4, 1).unwrap());
    assert!(carbon_trace_value(3, 0).is_err());
}

#[test]
fn rain_only_lowers_capacity() {
    let v = capacity_curve_value("satellite", "rural", 800.0, 20.0).unwrap();
    let pts = v["points"].as_array().unwrap();
    assert_eq!(pts.len(), 21);
    let caps: Vec<f64> = pts.iter().map(|p| p[1].as_f64().unwrap()).collect();
    assert!(caps.windows(2).all(|w| w[1] <= w[0]));
    assert!(caps[20] < caps[0]);
    assert!(capacity_curve_value("laser", "rural", 1.0, 5.0).is_err());
    assert!(capacity_curve_value("macro", "lunar", 1.0, 5.0).is_err());
}

#[test]
fn visible_satellites_clear_the_mask() {
    let sky = Sky::build().unwrap();
    let mut any = false;
    for minute in (0..600).step_by(15) {
        let v = sky.visible_value(0, f64::from(minute)).unwrap();
        let mask = v["min_elevation_deg"].as_f64().unwrap();
        let els: Vec<f64> = v["satellites"]
            .as_array()
            .unwrap()
            .iter()
            .map(|s| s["elevation_deg"].as_f64().unwrap())
            .collect();
        assert!(els.iter().all(|&e| e >= mask));
        assert!(els.windows(2).all(|w| w[0] >= w[1]));
        any |= !els.is_empty();
    }
    assert!(any);
    assert!(sky.visible_value(999, 0.0).is_err());
}
