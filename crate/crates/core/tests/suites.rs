use delegation::suites::{select, Suite};

fn assert_suite(suite: Suite) {
    let checks = suite.run().unwrap();
    assert!(!checks.is_empty());
    let failed: Vec<String> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.to_string())
        .collect();
    assert!(failed.is_empty(), "{}", failed.join("\n"));
}

#[test]
fn model() {
    assert_suite(Suite::Model);
}

#[test]
fn sets() {
    assert_suite(Suite::Sets);
}

#[test]
fn agent() {
    assert_suite(Suite::Agent);
}

#[test]
fn principal() {
    assert_suite(Suite::Principal);
}

#[test]
fn optimizer() {
    assert_suite(Suite::Optimizer);
}

#[test]
fn bias() {
    assert_suite(Suite::Bias);
}

#[test]
fn oracle() {
    assert_suite(Suite::Oracle);
}

#[test]
fn selection() {
    assert_eq!(select("all").unwrap().len(), Suite::ALL.len());
    assert_eq!(select("oracle").unwrap(), vec![Suite::Oracle]);
    assert!(select("everything").is_err());
}
