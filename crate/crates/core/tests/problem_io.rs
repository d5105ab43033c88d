use std::io::Cursor;

use altproj::apps::registry::{build_example, ExampleId};
use altproj::problem::{read_trace_csv, write_trace_csv, Method, ProblemError, ProblemSpec, SetSpec};

#[test]
fn trace_csv_round_trips_bit_exactly() {
    for id in [ExampleId::ReverseLines, ExampleId::BallHyperplane, ExampleId::ProductTransport, ExampleId::LpDemo] {
        let spec = build_example(id).unwrap();
        let run = spec.solve(&spec.stop).unwrap().result;
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &run.trace).unwrap();
        let (header, rows) = read_trace_csv(Cursor::new(buf)).unwrap();
        let n = spec.dimension;
        assert_eq!(header[0], "k");
        assert_eq!(header[n + 1..n + 4], ["dist_X", "dist_Y", "step_norm"]);
        assert_eq!(rows.len(), run.trace.len());
        for (row, rec) in rows.iter().zip(&run.trace.records) {
            assert_eq!(row[0] as usize, rec.k);
            for i in 0..n {
                assert_eq!(row[1 + i].to_bits(), rec.iterate[i].to_bits(), "{id:?} k={}", rec.k);
            }
            assert_eq!(row[n + 1].to_bits(), rec.dist_to_x.to_bits());
            assert_eq!(row[n + 2].to_bits(), rec.dist_to_y.to_bits());
            assert_eq!(row[n + 3].to_bits(), rec.step_norm.to_bits());
            for (i, v) in rec.displacement_estimate.iter().enumerate() {
                assert_eq!(row[n + 4 + i].to_bits(), v.to_bits());
            }
        }
    }
}

#[test]
fn problem_json_round_trips() {
    for id in ExampleId::ALL {
        let spec = build_example(id).unwrap();
        let back = ProblemSpec::from_json(&spec.to_json().unwrap()).unwrap();
        assert_eq!(back, spec, "{id:?}");
    }
}

#[test]
fn defaults_fill_in() {
    let spec = ProblemSpec::from_json(
        r#"{"dimension": 1, "sets": [
            {"type": "ball", "center": [0], "radius": 1},
            {"type": "halfspace", "normal": [-1], "offset": -3}
        ], "start": [5]}"#,
    )
    .unwrap();
    assert_eq!(spec.method, Method::Map);
    assert_eq!(spec.stop.max_iter, 1000);
    let run = spec.solve(&spec.stop).unwrap().result;
    assert!((run.final_iterate[0] - 1.0).abs() < 1e-12);
}

#[test]
fn parse_errors() {
    let unknown_field = r#"{"dimension": 1, "sets": [], "start": [0], "colour": 1}"#;
    assert!(matches!(ProblemSpec::from_json(unknown_field), Err(ProblemError::Json(_))));
    let missing_type = r#"{"dimension": 1, "sets": [{"normal": [1], "offset": 0}], "start": [0]}"#;
    assert!(matches!(ProblemSpec::from_json(missing_type), Err(ProblemError::Json(_))));
    let bad_set_field = r#"{"type": "ball", "center": [0], "radius": 1, "extra": 2}"#;
    assert!(serde_json::from_str::<SetSpec>(bad_set_field).is_err());

    let one_set = ProblemSpec::from_json(
        r#"{"dimension": 1, "sets": [{"type": "ball", "center": [0], "radius": 1}], "start": [0]}"#,
    )
    .unwrap();
    assert!(matches!(one_set.build_sets(), Err(ProblemError::Invalid(_))));

    let three_for_map = ProblemSpec::from_json(
        r#"{"dimension": 1, "method": "map", "sets": [
            {"type": "ball", "center": [0], "radius": 1},
            {"type": "ball", "center": [3], "radius": 1},
            {"type": "ball", "center": [6], "radius": 1}
        ], "start": [0]}"#,
    )
    .unwrap();
    assert!(three_for_map.build_sets().is_err());

    let bad_radius = ProblemSpec::from_json(
        r#"{"dimension": 1, "sets": [
            {"type": "ball", "center": [0], "radius": -1},
            {"type": "ball", "center": [3], "radius": 1}
        ], "start": [0]}"#,
    )
    .unwrap();
    assert!(matches!(bad_radius.build_sets(), Err(ProblemError::Geometry(_))));
}

#[test]
fn malformed_trace_csv() {
    assert!(read_trace_csv(Cursor::new("")).is_err());
    assert!(read_trace_csv(Cursor::new("k,x_0\n0,abc\n")).is_err());
    assert!(read_trace_csv(Cursor::new("k,x_0\n0\n")).is_err());
}
