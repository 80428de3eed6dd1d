use std::f64::consts::PI;

use eigenbreak::analyze::{analyze, AnalysisConfig};
use eigenbreak::ingest::{ingest_daily, write_daily, YearlyCurves};
use eigenbreak::quantiles::simulate_pivot_parallel;
use eigenbreak::synth::seasonal;
use eigenbreak_core::datagen::{generate, DgpSpec, StructuralBreak};

fn curves(n: usize, seed: u64, change: StructuralBreak) -> YearlyCurves {
    let spec = DgpSpec::new(n, seed)
        .with_order(41)
        .with_theta0(0.75)
        .with_break(change);
    let mut buf = Vec::new();
    write_daily(&generate(&spec).unwrap(), 1901, seasonal(9.0, 8.0), &mut buf).unwrap();
    ingest_daily(buf.as_slice(), 41, 360).unwrap()
}

#[test]
fn report_has_table_shapes() {
    let pivot = simulate_pivot_parallel(20, 20_000, 1).unwrap();
    let data = curves(60, 3, StructuralBreak::Rotation(PI / 3.0));
    let report = analyze(&data, &AnalysisConfig::default(), &pivot).unwrap();
    assert_eq!(report.eigenfunction_table.cells.len(), 4);
    assert!(report.eigenfunction_table.cells.iter().all(|r| r.len() == 5));
    assert_eq!(report.eigenfunction_table.len(), 20);
    assert_eq!(report.eigenvalue_table.cells.len(), 3);
    assert!(report.eigenvalue_table.cells.iter().all(|r| r.len() == 12));
    assert_eq!(report.split_year, 1900 + report.k_hat as i32);
    assert!(report.eigenvalues_pre.windows(2).all(|w| w[0] >= w[1]));
    assert!(report.eigenvalues_post.windows(2).all(|w| w[0] >= w[1]));

    // Thresholds follow the angle and divisor rules.
    let quarter = &report.eigenfunction_table.cells[2][0];
    assert!((quarter.delta - (2.0 - 2f64.sqrt())).abs() < 1e-15);
    for (d, row) in [50.0, 100.0, 200.0].iter().zip(&report.eigenvalue_table.cells) {
        for cell in row {
            assert!((cell.delta - report.eigenvalues_pre[cell.j - 1] / d).abs() < 1e-15);
        }
    }
    for cell in report.eigenfunction_table.cells.iter().flatten() {
        assert!((0.0..=1.0).contains(&cell.p_value));
        assert_eq!(cell.retained, cell.class.is_none() || !cell.retained);
    }
}

#[test]
fn too_few_years() {
    let pivot = simulate_pivot_parallel(20, 1000, 1).unwrap();
    let data = curves(7, 1, StructuralBreak::None);
    let err = analyze(&data, &AnalysisConfig::default(), &pivot).unwrap_err().to_string();
    assert!(err.contains("at least 8"), "{err}");
}

#[test]
fn written_report_is_deterministic() {
    let pivot = simulate_pivot_parallel(20, 5000, 2).unwrap();
    let data = curves(30, 5, StructuralBreak::None);
    let cfg = AnalysisConfig {
        epsilon: 0.1,
        j_val: vec![1, 2, 3],
        ..Default::default()
    };
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    analyze(&data, &cfg, &pivot).unwrap().write(a.path()).unwrap();
    analyze(&data, &cfg, &pivot).unwrap().write(b.path()).unwrap();
    for name in [
        "report.json",
        "eigenfunction_table.csv",
        "eigenvalue_table.csv",
        "eigenvalues.csv",
        "eigenfunctions.csv",
    ] {
        let x = std::fs::read(a.path().join(name)).unwrap();
        let y = std::fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name}");
    }
    let table = std::fs::read_to_string(a.path().join("eigenvalue_table.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "divisor,j=1,j=2,j=3");
    assert_eq!(table.lines().count(), 4);
}
