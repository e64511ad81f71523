use cloudchamber::{run_validation, ValidationOptions};

#[test]
fn suite_passes_on_a_clean_build() {
    let report = run_validation(&ValidationOptions::default());
    for c in &report.checks {
        println!("{c}");
    }
    assert!(report.checks.len() >= 12);
    assert!(report.checks.iter().any(|c| c.name.starts_with("nnz")));
    assert!(report.passed(), "worst: {:?}", report.worst());
}

#[test]
fn perturbed_oracle_coupling_is_caught() {
    let report = run_validation(&ValidationOptions {
        perturb_oracle_kappa: true,
    });
    assert!(!report.passed());
    let failed: Vec<_> = report.failures().map(|c| c.name.as_str()).collect();
    assert!(failed.iter().all(|n| n.starts_with("oracle")), "{failed:?}");
    assert!(report.worst().unwrap().name.starts_with("oracle"));
}
