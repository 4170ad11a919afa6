use mrmp_core::benchmark::{generate_benchmark, write_suite, LayoutParams};
use mrmp_core::constraints::{is_feasible_with, FeasibilityTolerance};
use mrmp_core::projection::check_convex_nonempty;
use mrmp_core::{MapFamily, Trajectory};

#[test]
fn full_benchmark_counts_and_validity() {
    let params = LayoutParams::default();
    let (instances, manifest) = generate_benchmark(7, &params).unwrap();
    assert_eq!(instances.len(), 4000);
    assert_eq!(manifest.entries.len(), 4000);
    for family in MapFamily::ALL {
        let expected = if family == MapFamily::Corridor { 250 } else { 750 };
        assert_eq!(manifest.count(family), expected, "{family}");
    }
    for inst in &instances {
        inst.validate().unwrap();
        check_convex_nonempty(inst).unwrap();
        let line = Trajectory::straight_line(inst);
        assert!(is_feasible_with(&line, inst, FeasibilityTolerance { convex: 1e-9, separation: f64::INFINITY }).unwrap().feasible);
    }
    let retries: u64 = manifest.entries.iter().map(|e| e.retries).sum();
    eprintln!("task redraws across suite: {retries}");
}

#[test]
fn written_suite_is_byte_identical() {
    let params = LayoutParams::default();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let (inst, manifest) = generate_benchmark(11, &params).unwrap();
        write_suite(dir.path(), &inst, &manifest).unwrap();
    }
    let mut names: Vec<_> = std::fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 4001);
    for name in names {
        let x = std::fs::read(a.path().join(&name)).unwrap();
        let y = std::fs::read(b.path().join(&name)).unwrap();
        assert!(x == y, "{name:?} differs");
    }
}
