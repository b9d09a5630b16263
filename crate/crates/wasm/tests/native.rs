use ckc_wasm::{cluster_demo, dependence_sweep, warning_demo};

#[test]
fn cluster_demo_is_consistent() {
    let demo = cluster_demo(20, 4, 3, 0.05).unwrap();
    assert_eq!(demo.kernel.len(), 40);
    assert!(demo.kernel.iter().all(|row| row.len() == 40));
    assert_eq!(demo.truth.len(), demo.labels.len());
    assert!((-1.0..=1.0).contains(&demo.ari));
    assert!(serde_json::to_string(&demo).unwrap().contains("\"raw_ari\""));
}

#[test]
fn tight_coupling_is_dependent() {
    let sweep = dependence_sweep(100, 1, 0.05, &[0.1, 0.5]).unwrap();
    assert_eq!(sweep.len(), 2);
    assert!(sweep[0].dependent);
    assert!(sweep[0].aggregate > 0.0);
}

#[test]
fn warning_demo_covers_every_year() {
    let demo = warning_demo(0, 4, 2).unwrap();
    assert_eq!(demo.event_year, 2002);
    assert_eq!(demo.years.len(), 4);
}

#[test]
fn bad_arguments_surface_core_errors() {
    assert_eq!(cluster_demo(2, 4, 0, 0.05).unwrap_err().name(), "DimensionTooSmall");
}
