use std::fmt::Write as _;
use std::time::Duration;

use flowplace::optimizer::{FlowFlags, Status};

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub design: String,
    pub flags: FlowFlags,
    pub hpwl: f64,
    pub overflow: f64,
    pub spread: f64,
    pub iterations: usize,
    pub status: Status,
    pub extraction: Duration,
    pub cluster_place: Duration,
    pub flat_place: Duration,
    pub io: Duration,
    pub wall: Duration,
}

impl RunReport {
    pub fn stage_sum(&self) -> Duration {
        self.extraction + self.cluster_place + self.flat_place + self.io
    }

    /// Everything above the `time` lines is a pure function of the inputs.
    pub fn render(&self) -> String {
        let ms = |d: Duration| d.as_secs_f64() * 1e3;
        let mut s = String::new();
        let _ = writeln!(s, "design {}", self.design);
        let _ = writeln!(
            s,
            "flags dataflow={} datapath={}",
            self.flags.use_dataflow, self.flags.use_datapath
        );
        let _ = writeln!(s, "status {}", status_name(self.status));
        let _ = writeln!(s, "iterations {}", self.iterations);
        let _ = writeln!(s, "hpwl {:.4}", self.hpwl);
        let _ = writeln!(s, "overflow {:.6}", self.overflow);
        let _ = writeln!(s, "spread {:.4}", self.spread);
        let _ = writeln!(s, "time.extraction_ms {:.3}", ms(self.extraction));
        let _ = writeln!(s, "time.cluster_place_ms {:.3}", ms(self.cluster_place));
        let _ = writeln!(s, "time.flat_place_ms {:.3}", ms(self.flat_place));
        let _ = writeln!(s, "time.io_ms {:.3}", ms(self.io));
        let _ = writeln!(s, "time.total_ms {:.3}", ms(self.wall));
        s
    }
}

pub fn status_name(s: Status) -> &'static str {
    match s {
        Status::Converged => "converged",
        Status::MaxIterations => "max-iterations",
        Status::Diverged => "diverged",
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmResult {
    pub arm: &'static str,
    pub hpwl: f64,
    pub spread: f64,
    pub iterations: usize,
    pub status: Status,
}

pub const ARMS: [(&str, FlowFlags); 4] = [
    ("full", FlowFlags::FULL),
    (
        "nf",
        FlowFlags {
            use_dataflow: false,
            use_datapath: true,
        },
    ),
    (
        "np",
        FlowFlags {
            use_dataflow: true,
            use_datapath: false,
        },
    ),
    ("baseline", FlowFlags::BASELINE),
];

/// Partial arms whose spread falls outside `[full, baseline]`.
pub fn inversions(rows: &[ArmResult]) -> Vec<&'static str> {
    let get = |a: &str| rows.iter().find(|r| r.arm == a).map(|r| r.spread);
    let (Some(full), Some(base)) = (get("full"), get("baseline")) else {
        return Vec::new();
    };
    let (lo, hi) = if full <= base { (full, base) } else { (base, full) };
    rows.iter()
        .filter(|r| r.arm == "nf" || r.arm == "np")
        .filter(|r| !(lo..=hi).contains(&r.spread))
        .map(|r| r.arm)
        .collect()
}

/// HPWL and spread per arm, each also divided by the baseline row.
pub fn ablation_table(rows: &[ArmResult]) -> String {
    let base = rows.iter().find(|r| r.arm == "baseline");
    let norm = |v: f64, b: Option<f64>| match b {
        Some(b) if b > 0.0 => v / b,
        _ => f64::NAN,
    };
    let bad = inversions(rows);
    let mut s = String::from("arm       hpwl           hpwl_norm  spread      spread_norm  iters  status          note\n");
    for r in rows {
        let note = if bad.contains(&r.arm) { "inversion" } else { "" };
        let _ = writeln!(
            s,
            "{:<9} {:<14.4} {:<10.4} {:<11.4} {:<12.4} {:<6} {:<15} {}",
            r.arm,
            r.hpwl,
            norm(r.hpwl, base.map(|b| b.hpwl)),
            r.spread,
            norm(r.spread, base.map(|b| b.spread)),
            r.iterations,
            status_name(r.status),
            note
        );
    }
    s.lines().map(str::trim_end).collect::<Vec<_>>().join("\n") + "\n"
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(arm: &'static str, spread: f64) -> ArmResult {
        ArmResult {
            arm,
            hpwl: 100.0 * spread,
            spread,
            iterations: 10,
            status: Status::Converged,
        }
    }

    #[test]
    fn baseline_row_normalizes_to_one() {
        let rows = [row("full", 1.0), row("nf", 2.0), row("np", 0.5), row("baseline", 4.0)];
        let t = ablation_table(&rows);
        let base = t.lines().find(|l| l.starts_with("baseline")).unwrap();
        let cols: Vec<&str> = base.split_whitespace().collect();
        assert_eq!(cols[2], "1.0000");
        assert_eq!(cols[4], "1.0000");
        assert_eq!(inversions(&rows), vec!["np"]);
        assert!(t.lines().find(|l| l.starts_with("np")).unwrap().ends_with("inversion"));
    }

    #[test]
    fn report_lists_stages() {
        let r = RunReport {
            design: "d".into(),
            flags: FlowFlags::FULL,
            hpwl: 1.0,
            overflow: 0.1,
            spread: 2.0,
            iterations: 3,
            status: Status::Converged,
            extraction: Duration::from_millis(1),
            cluster_place: Duration::from_millis(2),
            flat_place: Duration::from_millis(3),
            io: Duration::from_millis(4),
            wall: Duration::from_millis(10),
        };
        assert_eq!(r.stage_sum(), r.wall);
        let text = r.render();
        assert!(text.contains("status converged\n"));
        assert_eq!(text.lines().filter(|l| l.starts_with("time.")).count(), 5);
    }
}
