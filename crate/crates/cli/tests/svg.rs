use spacedrl_cli::svg::{emit_svg, Series, MAX_VERTICES};

fn count(s: &str, pat: &str) -> usize {
    s.matches(pat).count()
}

#[test]
fn single_point_renders_one_marker() {
    let svg = emit_svg(
        &[Series {
            label: "only".into(),
            points: vec![(0.0, 0.5)],
        }],
        "one",
    );
    assert!(svg.starts_with("<svg xmlns=\"http://www.w3.org/2000/svg\""));
    assert!(svg.trim_end().ends_with("</svg>"));
    assert_eq!(count(&svg, "<circle"), 1);
    assert_eq!(count(&svg, "<polyline"), 0);
}

#[test]
fn two_series_give_two_polylines_and_two_legend_entries() {
    let s = |label: &str, k: f64| Series {
        label: label.into(),
        points: (0..50).map(|i| (i as f64 * 100.0, (i as f64 * k).sin().abs())).collect(),
    };
    let svg = emit_svg(&[s("SimpleCrossing", 0.1), s("Empty", 0.2)], "pair");
    assert_eq!(count(&svg, "<polyline"), 2);
    assert_eq!(count(&svg, ">SimpleCrossing</text>"), 1);
    assert_eq!(count(&svg, ">Empty</text>"), 1);
}

#[test]
fn values_are_clipped_to_the_unit_interval() {
    let svg = emit_svg(
        &[Series {
            label: "wild".into(),
            points: vec![(0.0, -3.0), (1.0, 7.0)],
        }],
        "clip",
    );
    let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    let ys: Vec<f64> = pts.split(' ').map(|p| p.split(',').nth(1).unwrap().parse().unwrap()).collect();
    // plot area spans y in [28, 320]
    assert_eq!(ys, vec![320.0, 28.0]);
}

#[test]
fn long_traces_are_decimated_under_a_megabyte() {
    let points: Vec<(f64, f64)> = (0..10_000).map(|i| (i as f64 * 2000.0, (i % 100) as f64 / 99.0)).collect();
    let svg = emit_svg(
        &[Series {
            label: "long".into(),
            points,
        }],
        "long",
    );
    assert!(svg.len() < 1_000_000, "{} bytes", svg.len());
    let pts = svg.split("points=\"").nth(1).unwrap().split('"').next().unwrap();
    assert!(pts.split(' ').count() <= MAX_VERTICES);
}
