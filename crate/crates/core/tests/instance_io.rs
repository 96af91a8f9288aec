use std::io::Cursor;

use cspath::instance::{DistributionSpec, Instance, InstanceError, StorageMode};

fn read(text: &str) -> Result<Instance, InstanceError> {
    Instance::read_from(Cursor::new(text.as_bytes()))
}

fn written(inst: &Instance) -> String {
    let mut buf = Vec::new();
    inst.write_to(&mut buf).unwrap();
    String::from_utf8(buf).unwrap()
}

#[test]
fn materialized_round_trip_is_bit_exact() {
    let d = DistributionSpec::UniformPower(0.37);
    let inst = Instance::generate(9, 77, d, DistributionSpec::Uniform, StorageMode::Materialized).unwrap();
    let text = written(&inst);
    assert_eq!(text.lines().count(), 2 + 36);
    let back = read(&text).unwrap();
    assert_eq!(back.n(), 9);
    assert_eq!(back.seed(), 77);
    assert_eq!(back.length_dist(), d);
    for (u, v, w) in inst.edges() {
        assert_eq!(back.weight(u, v), w);
    }
    assert_eq!(written(&back), text);
}

#[test]
fn implicit_file_holds_only_the_header() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("k.inst");
    let inst = Instance::generate(50, 3, DistributionSpec::Uniform, DistributionSpec::ExpPower(0.5), StorageMode::Implicit).unwrap();
    inst.write_instance(&path).unwrap();
    let text = std::fs::read_to_string(&path).unwrap();
    assert_eq!(text.lines().count(), 2);
    assert!(text.contains("storage=implicit"));
    let back = Instance::read_instance(&path).unwrap();
    assert_eq!(back.storage(), StorageMode::Implicit);
    for (u, v, w) in inst.edges() {
        assert_eq!(back.weight(u, v), w);
    }
}

#[test]
fn truncated_weights_survive_the_file() {
    let d = DistributionSpec::TruncatedExpPower { s: 0.5, threshold: 0.3 };
    let inst = Instance::generate(12, 5, d, DistributionSpec::Uniform, StorageMode::Materialized).unwrap();
    let text = written(&inst);
    assert!(text.contains(" inf "));
    let back = read(&text).unwrap();
    for (u, v, w) in inst.edges() {
        assert_eq!(back.weight(u, v).length.to_bits(), w.length.to_bits());
    }
}

const HEADER: &str = "cspath-instance v1\nn=3 seed=0 ldist=uniform cdist=uniform storage=materialized\n";

#[test]
fn rejects_malformed_files() {
    let cases: &[(&str, &str)] = &[
        ("missing magic", "n=3 seed=0 ldist=uniform cdist=uniform storage=materialized\n"),
        ("no header", "cspath-instance v1\n"),
        ("unknown field", "cspath-instance v1\nn=3 seed=0 ldist=uniform cdist=uniform storage=materialized color=red\n"),
        ("bad dist", "cspath-instance v1\nn=3 seed=0 ldist=normal cdist=uniform storage=materialized\n"),
        ("missing storage", "cspath-instance v1\nn=3 seed=0 ldist=uniform cdist=uniform\n"),
    ];
    for (what, text) in cases {
        assert!(read(text).is_err(), "{what} accepted");
    }
    let edges = format!("{HEADER}0 1 0.5 0.5\n0 2 0.5 0.5\n");
    assert!(matches!(read(&edges), Err(InstanceError::EdgeCount { expected: 3, found: 2 })));
    let extra = format!("{HEADER}0 1 0.5 0.5\n0 2 0.5 0.5\n1 2 0.5 0.5\n1 2 0.5 0.5\n");
    assert!(matches!(read(&extra), Err(InstanceError::EdgeCount { .. })));
    let order = format!("{HEADER}0 2 0.5 0.5\n0 1 0.5 0.5\n1 2 0.5 0.5\n");
    assert!(matches!(read(&order), Err(InstanceError::Malformed { line: 3, .. })));
    let fields = format!("{HEADER}0 1 0.5\n0 2 0.5 0.5\n1 2 0.5 0.5\n");
    assert!(matches!(read(&fields), Err(InstanceError::Malformed { line: 3, .. })));
    let implicit_edges = "cspath-instance v1\nn=3 seed=0 ldist=uniform cdist=uniform storage=implicit\n0 1 0.5 0.5\n";
    assert!(matches!(read(implicit_edges), Err(InstanceError::Malformed { line: 3, .. })));
}

#[test]
fn rejects_weights_outside_the_support() {
    for bad in ["1.5", "0", "-0.25", "inf"] {
        let text = format!("{HEADER}0 1 {bad} 0.5\n0 2 0.5 0.5\n1 2 0.5 0.5\n");
        assert!(matches!(read(&text), Err(InstanceError::Validation { u: 0, v: 1, .. })), "accepted {bad}");
    }
    let nan = format!("{HEADER}0 1 nan 0.5\n0 2 0.5 0.5\n1 2 0.5 0.5\n");
    assert!(matches!(read(&nan), Err(InstanceError::Malformed { line: 3, .. })));
    let ok = format!("{HEADER}0 1 1 0.5\n0 2 0.5 0.5\n1 2 0.5 0.5\n");
    assert!(read(&ok).is_ok());
}
