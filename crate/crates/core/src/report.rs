//! Serialization of run artifacts: request and KPI CSVs, the event log as
//! JSON lines, the sweep summary CSV, and a dependency-free SVG chart of the
//! latency curves. All writers are deterministic for identical inputs.

use std::io::Write;

use crate::error::Result;
use crate::orchestrator::ReconfigEvent;
use crate::sim::{ComparisonRow, KpiWindow, RequestRecord};

pub fn write_requests_csv<W: Write>(writer: W, records: &[RequestRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_kpi_csv<W: Write>(writer: W, windows: &[KpiWindow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for win in windows {
        w.serialize(win)?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(writer: W, rows: &[ComparisonRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

/// One JSON object per line, in decision order.
pub fn write_events_jsonl<W: Write>(mut writer: W, events: &[ReconfigEvent]) -> Result<()> {
    for e in events {
        serde_json::to_writer(&mut writer, e)?;
        writeln!(writer)?;
    }
    Ok(())
}

/// Static-vs-adaptive latency over the swept bandwidth, as a self-contained
/// SVG document.
pub fn render_latency_chart(title: &str, rows: &[ComparisonRow]) -> String {
    const WIDTH: f64 = 720.0;
    const HEIGHT: f64 = 480.0;
    const LEFT: f64 = 80.0;
    const RIGHT: f64 = 40.0;
    const TOP: f64 = 48.0;
    const BOTTOM: f64 = 64.0;
    let plot_w = WIDTH - LEFT - RIGHT;
    let plot_h = HEIGHT - TOP - BOTTOM;

    let xs: Vec<f64> = rows.iter().map(|r| r.bandwidth_mbps).collect();
    let x_min = xs.iter().cloned().fold(f64::INFINITY, f64::min);
    let x_max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let x_span = if x_max > x_min { x_max - x_min } else { 1.0 };
    let y_max = rows
        .iter()
        .flat_map(|r| [r.static_latency_ms, r.adaptive_latency_ms])
        .fold(0.0f64, f64::max)
        * 1.08
        + 1.0;

    let x_of = |bw: f64| LEFT + (bw - x_min) / x_span * plot_w;
    let y_of = |ms: f64| TOP + plot_h - ms / y_max * plot_h;

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" viewBox=\"0 0 {WIDTH} {HEIGHT}\" \
         font-family=\"sans-serif\" font-size=\"13\">\n"
    ));
    s.push_str(&format!(
        "  <rect x=\"0\" y=\"0\" width=\"{WIDTH}\" height=\"{HEIGHT}\" fill=\"white\"/>\n"
    ));
    s.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"26\" text-anchor=\"middle\" font-size=\"16\">{}</text>\n",
        WIDTH / 2.0,
        xml_escape(title)
    ));

    // Horizontal grid and y labels, five even divisions.
    for i in 0..=5 {
        let v = y_max * i as f64 / 5.0;
        let y = y_of(v);
        s.push_str(&format!(
            "  <line x1=\"{LEFT:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"#ddd\" stroke-width=\"1\"/>\n",
            LEFT + plot_w
        ));
        s.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"end\">{v:.0}</text>\n",
            LEFT - 8.0,
            y + 4.0
        ));
    }
    // Vertical grid at each sampled bandwidth.
    for &bw in &xs {
        let x = x_of(bw);
        s.push_str(&format!(
            "  <line x1=\"{x:.1}\" y1=\"{TOP:.1}\" x2=\"{x:.1}\" y2=\"{:.1}\" \
             stroke=\"#eee\" stroke-width=\"1\"/>\n",
            TOP + plot_h
        ));
        s.push_str(&format!(
            "  <text x=\"{x:.1}\" y=\"{:.1}\" text-anchor=\"middle\">{bw:.0}</text>\n",
            TOP + plot_h + 20.0
        ));
    }

    // Axes.
    s.push_str(&format!(
        "  <line x1=\"{LEFT:.1}\" y1=\"{TOP:.1}\" x2=\"{LEFT:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
        TOP + plot_h
    ));
    s.push_str(&format!(
        "  <line x1=\"{LEFT:.1}\" y1=\"{:.1}\" x2=\"{:.1}\" y2=\"{:.1}\" stroke=\"#333\"/>\n",
        TOP + plot_h,
        LEFT + plot_w,
        TOP + plot_h
    ));
    s.push_str(&format!(
        "  <text x=\"{:.1}\" y=\"{:.1}\" text-anchor=\"middle\">backhaul bandwidth (Mb/s)</text>\n",
        LEFT + plot_w / 2.0,
        HEIGHT - 16.0
    ));
    s.push_str(&format!(
        "  <text x=\"20\" y=\"{:.1}\" text-anchor=\"middle\" \
         transform=\"rotate(-90 20 {:.1})\">steady-state latency (ms)</text>\n",
        TOP + plot_h / 2.0,
        TOP + plot_h / 2.0
    ));

    for (name, color, pick) in [
        ("static", "#c0392b", true),
        ("adaptive", "#27ae60", false),
    ] {
        let points: Vec<String> = rows
            .iter()
            .map(|r| {
                let v = if pick { r.static_latency_ms } else { r.adaptive_latency_ms };
                format!("{:.2},{:.2}", x_of(r.bandwidth_mbps), y_of(v))
            })
            .collect();
        s.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"{color}\" stroke-width=\"2.5\"/>\n",
            points.join(" ")
        ));
        for r in rows {
            let v = if pick { r.static_latency_ms } else { r.adaptive_latency_ms };
            s.push_str(&format!(
                "  <circle cx=\"{:.2}\" cy=\"{:.2}\" r=\"4\" fill=\"{color}\"/>\n",
                x_of(r.bandwidth_mbps),
                y_of(v)
            ));
        }
        let _ = name;
    }

    // Legend.
    let lx = LEFT + plot_w - 150.0;
    for (i, (name, color)) in [("static", "#c0392b"), ("adaptive", "#27ae60")]
        .iter()
        .enumerate()
    {
        let y = TOP + 14.0 + i as f64 * 20.0;
        s.push_str(&format!(
            "  <line x1=\"{lx:.1}\" y1=\"{y:.1}\" x2=\"{:.1}\" y2=\"{y:.1}\" \
             stroke=\"{color}\" stroke-width=\"2.5\"/>\n",
            lx + 28.0
        ));
        s.push_str(&format!(
            "  <text x=\"{:.1}\" y=\"{:.1}\">{name}</text>\n",
            lx + 36.0,
            y + 4.0
        ));
    }

    s.push_str("</svg>\n");
    s
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::monitor::TriggerCause;
    use crate::orchestrator::ReconfigKind;

    fn sample_rows() -> Vec<ComparisonRow> {
        vec![
            ComparisonRow {
                bandwidth_mbps: 20.0,
                static_latency_ms: 500.0,
                adaptive_latency_ms: 200.0,
                delta_pct: -60.0,
                throughput_ratio: 2.1,
                max_gpu_util: 0.92,
                reconfig_count: 1,
            },
            ComparisonRow {
                bandwidth_mbps: 200.0,
                static_latency_ms: 180.0,
                adaptive_latency_ms: 110.0,
                delta_pct: -38.9,
                throughput_ratio: 1.8,
                max_gpu_util: 0.86,
                reconfig_count: 1,
            },
        ]
    }

    #[test]
    fn requests_csv_header_and_empty_latency() {
        let records = vec![RequestRecord {
            request_id: 0,
            arrival_s: 0.5,
            workload: 1.0,
            served: false,
            latency_ms: None,
            epoch: 0,
            penalized_by_migration: false,
        }];
        let mut buf = Vec::new();
        write_requests_csv(&mut buf, &records).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "request_id,arrival_s,workload,served,latency_ms,epoch,penalized_by_migration"
        );
        assert_eq!(lines.next().unwrap(), "0,0.5,1.0,false,,0,false");
    }

    #[test]
    fn kpi_csv_header_is_stable() {
        let mut buf = Vec::new();
        write_kpi_csv(
            &mut buf,
            &[KpiWindow {
                start_s: 0.0,
                end_s: 10.0,
                arrivals: 5,
                served: 5,
                mean_latency_ms: Some(10.0),
                p95_latency_ms: Some(12.0),
                ewma_latency_ms: Some(11.0),
                throughput_rps: 0.5,
                max_node_utilization: 0.4,
                mean_node_utilization: 0.2,
                reconfig_count: 0,
            }],
        )
        .unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with(
            "start_s,end_s,arrivals,served,mean_latency_ms,p95_latency_ms,ewma_latency_ms,\
             throughput_rps,max_node_utilization,mean_node_utilization,reconfig_count\n"
        ));
    }

    #[test]
    fn summary_csv_matches_reference_layout() {
        let mut buf = Vec::new();
        write_summary_csv(&mut buf, &sample_rows()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "bandwidth_mbps,static_latency_ms,adaptive_latency_ms,delta_pct,\
             throughput_ratio,max_gpu_util,reconfig_count"
                .replace(['\n'], "")
        );
        assert_eq!(lines.count(), 2);
    }

    #[test]
    fn events_jsonl_round_trips_as_json() {
        let events = vec![ReconfigEvent {
            t_s: 2.0,
            kind: ReconfigKind::Migration,
            causes: vec![TriggerCause::Latency],
            old_boundaries: vec![4, 28],
            new_boundaries: vec![4, 28],
            old_placement: vec!["a".into(), "b".into(), "a".into()],
            new_placement: vec!["a".into(), "c".into(), "a".into()],
            migration_bytes: 1000,
            migration_delay_ms: 10.5,
            migration_eval: None,
            note: None,
        }];
        let mut buf = Vec::new();
        write_events_jsonl(&mut buf, &events).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1);
        let v: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
        assert_eq!(v["kind"], "migration");
        assert_eq!(v["causes"][0], "latency");
        assert_eq!(v["new_placement"][1], "c");
        assert_eq!(v["migration_bytes"], 1000);
    }

    #[test]
    fn chart_is_pure_and_complete() {
        let rows = sample_rows();
        let a = render_latency_chart("urban sweep", &rows);
        let b = render_latency_chart("urban sweep", &rows);
        assert_eq!(a, b);
        assert!(a.starts_with("<svg"));
        assert!(a.ends_with("</svg>\n"));
        assert_eq!(a.matches("<polyline").count(), 2);
        // One marker per row per series.
        assert_eq!(a.matches("<circle").count(), 4);
        assert!(a.contains("backhaul bandwidth (Mb/s)"));
        assert!(a.contains("steady-state latency (ms)"));
        assert!(a.contains("urban sweep"));
    }

    #[test]
    fn chart_handles_single_point() {
        let rows = vec![sample_rows().remove(0)];
        let svg = render_latency_chart("one", &rows);
        assert!(svg.contains("<polyline"));
        assert!(!svg.contains("NaN"));
    }
}
