//! Result tables as CSV or JSON.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ddccast::engine::ExperimentRow;

use crate::config::Format;

pub const CSV_HEADER: &str = "scheduler,lambda,dest_count,slots,repeats,seed,\
total_bandwidth_used,total_traffic_admitted,total_traffic_offered,admit_ratio";

pub fn to_csv(rows: &[ExperimentRow]) -> String {
    let mut out = format!("{CSV_HEADER}\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{:.6},{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            r.scheduler,
            r.lambda,
            r.dest_count,
            r.slots,
            r.repeats,
            r.seed,
            r.total_bandwidth_used,
            r.total_traffic_admitted,
            r.total_traffic_offered,
            r.admit_ratio
        );
    }
    out
}

pub fn to_json(rows: &[ExperimentRow]) -> String {
    serde_json::to_string_pretty(rows).expect("rows serialize") + "\n"
}

pub fn render(rows: &[ExperimentRow], format: Format) -> String {
    match format {
        Format::Csv => to_csv(rows),
        Format::Json => to_json(rows),
    }
}

/// `results.csv` -> `results.csv.meta.json`.
pub fn sidecar_path(out: &Path) -> PathBuf {
    let mut name = out.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use ddccast::SchedulerKind;

    use super::*;

    fn row(scheduler: SchedulerKind, bandwidth: f64) -> ExperimentRow {
        ExperimentRow {
            scheduler,
            lambda: 2.0,
            dest_count: 3,
            slots: 500,
            repeats: 10,
            seed: 1,
            total_bandwidth_used: bandwidth,
            total_traffic_admitted: 1.0 / 3.0,
            total_traffic_offered: 2.0,
            admit_ratio: 1.0 / 6.0,
        }
    }

    #[test]
    fn csv_layout() {
        let csv = to_csv(&[
            row(SchedulerKind::Ddccast, 10.0),
            row(SchedulerKind::P2pAlap, 12.5),
        ]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], CSV_HEADER);
        assert_eq!(
            lines[1],
            "ddccast,2.000000,3,500,10,1,10.000000,0.333333,2.000000,0.166667"
        );
        assert_eq!(
            lines[2],
            "p2p-alap,2.000000,3,500,10,1,12.500000,0.333333,2.000000,0.166667"
        );
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn json_matches_csv() {
        let rows = vec![row(SchedulerKind::Ddccast, 10.0)];
        let back: Vec<ExperimentRow> = serde_json::from_str(&to_json(&rows)).unwrap();
        assert_eq!(to_csv(&back), to_csv(&rows));
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(
            sidecar_path(Path::new("out/r.csv")),
            PathBuf::from("out/r.csv.meta.json")
        );
    }
}
