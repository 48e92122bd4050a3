use std::time::Instant;

use lpdim::dimension::{property_suite, SuiteConfig, CHECK_GROUPS};

#[test]
fn default_suite_is_green() {
    for group in CHECK_GROUPS {
        let cfg = SuiteConfig {
            only: vec![group.to_string()],
            ..SuiteConfig::default()
        };
        let start = Instant::now();
        let report = property_suite(&cfg, 42).unwrap();
        eprintln!("{group}: {:.2?}", start.elapsed());
        for c in &report.checks {
            eprintln!("  {} {} {}", if c.passed { "ok  " } else { "FAIL" }, c.name, c.detail);
        }
        assert!(report.passed, "{group} failed");
    }
}
