use stepsim_core::drive::{step_clock, Direction, DriveConfig, DriveStage};
use stepsim_core::export::{trace_csv, write_trace_csv, TRACE_HEADER};
use stepsim_core::motor::MotorDefinition;
use stepsim_core::sim::{aligned_state, simulate, SimConfig, Trace};

fn short_trace() -> Trace {
    let p = MotorDefinition::n33hrlg().params;
    let drive = DriveStage::new(DriveConfig::default());
    let initial = aligned_state(&p, &drive);
    let schedule = step_clock(100.0, 3, 0.0, Direction::Forward, 6000.0).unwrap();
    let cfg = SimConfig { dt: 1e-5, duration: 0.05, record_stride: 100 };
    simulate(&p, drive, &schedule, initial, &cfg).unwrap()
}

#[test]
fn trace_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("stepsim-export-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("trace.csv");
    let trace = short_trace();
    write_trace_csv(&trace, &path).unwrap();
    let first = std::fs::read(&path).unwrap();
    write_trace_csv(&short_trace(), &path).unwrap();
    assert_eq!(first, std::fs::read(&path).unwrap());

    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), trace.frames.len());
    assert_eq!(rows.len(), 1 + (0.05f64 / (1e-5 * 100.0)).round() as usize);
    for row in &rows {
        assert_eq!(row.split(',').count(), 13);
        assert!(!row.contains(' '));
    }
    assert!(rows[0].starts_with("0,"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn empty_trace_is_header_only() {
    assert_eq!(trace_csv(&Trace::default()), format!("{TRACE_HEADER}\n"));
}

#[test]
fn write_error_names_the_path() {
    let path = std::path::Path::new("/nonexistent-stepsim-dir/trace.csv");
    let err = write_trace_csv(&short_trace(), path).unwrap_err();
    assert!(err.to_string().contains("/nonexistent-stepsim-dir/trace.csv"), "{err}");
}
