//! Machine-readable outputs: JSON reports (stable field order), RFC
//! 4180 CSV tables where every numeric cell carries a provenance tag,
//! and plain two-column plot-data files.

use std::fs::File;
use std::io::{BufWriter, Write as IoWrite};
use std::path::Path;

use serde::Serialize;

use crate::certifier::CertReport;
use crate::dyadic::Dyadic;
use crate::entropy::EntropyEstimate;
use crate::systems::DiamValue;

/// How a numeric value was produced.
#[derive(Clone, Copy, Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// closed under exact arithmetic end to end
    Exact,
    /// two-sided enclosure of the stated width
    Bounded { err: f64 },
    /// statistical estimate under the stated RNG stream
    Sampled { seed: u64 },
}

impl std::fmt::Display for Provenance {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Provenance::Exact => write!(f, "exact"),
            Provenance::Bounded { err } => write!(f, "bounded({err:.3e})"),
            Provenance::Sampled { seed } => write!(f, "sampled({seed})"),
        }
    }
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, value)?;
    w.write_all(b"\n")
}

/// One row per recorded (sample, k, gamma) difference.
pub fn write_cert_csv<V: DiamValue + std::fmt::Display>(
    report: &CertReport<V>,
    provenance: Provenance,
    path: &Path,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["sample", "k", "gamma", "kind", "value", "provenance"])?;
    for g in &report.gammas {
        for (kind, list) in [("F1", &g.f1), ("F2", &g.f2)] {
            for d in list {
                w.write_record([
                    d.sample.to_string(),
                    d.k.to_string(),
                    g.gamma.to_string(),
                    kind.to_string(),
                    d.value.to_string(),
                    provenance.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_entropy_csv(
    est: &EntropyEstimate,
    provenance: Provenance,
    path: &Path,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["n", "s", "log_s", "provenance"])?;
    for (n, s) in &est.counts {
        w.write_record([
            n.to_string(),
            s.to_string(),
            format!("{:.6}", (*s as f64).max(1.0).ln()),
            provenance.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Plain-text two-column numeric series with `# key: value` header
/// lines; one point per line.
pub fn write_plotdata(
    path: &Path,
    metadata: &[(&str, String)],
    rows: &[(f64, f64)],
) -> std::io::Result<()> {
    let file = File::create(path)?;
    let mut w = BufWriter::new(file);
    for (k, v) in metadata {
        writeln!(w, "# {k}: {v}")?;
    }
    for (x, y) in rows {
        writeln!(w, "{x} {y}")?;
    }
    Ok(())
}

/// Diameter-trace rows: step index against the exact value (decimal
/// rendering; the exact fraction goes to the CSV/JSON side).
pub fn diam_trace_rows(trace: &[(u64, crate::systems::DiamBound<Dyadic>)]) -> Vec<(f64, f64)> {
    trace.iter().map(|(j, b)| (*j as f64, b.lo.to_f64())).collect()
}

/// First-increase rows with exact fractions for the CSV table.
pub fn write_diam_trace_csv(
    trace: &[(u64, crate::systems::DiamBound<Dyadic>)],
    provenance: Provenance,
    path: &Path,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["j", "diam", "diam_exact", "provenance"])?;
    for (j, b) in trace {
        w.write_record([
            j.to_string(),
            format!("{}", b.lo.to_f64()),
            b.lo.to_string(),
            provenance.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::DiamBound;

    #[test]
    fn plotdata_format() {
        let dir = std::env::temp_dir().join("ftsens-test-plot");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("series.dat");
        write_plotdata(&path, &[("series", "demo".into())], &[(0.0, 1.0), (1.0, 0.5)]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.starts_with("# series: demo\n"));
        assert_eq!(text.lines().count(), 3);
        // header-only when the series is empty
        write_plotdata(&path, &[("series", "empty".into())], &[]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(text.lines().count(), 1);
    }

    #[test]
    fn trace_csv_has_exact_column() {
        let dir = std::env::temp_dir().join("ftsens-test-csv");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("trace.csv");
        let trace = vec![
            (0u64, DiamBound::exact(Dyadic::from_ratio(3, 5))),
            (1u64, DiamBound::exact(Dyadic::from_ratio(3, 4))),
        ];
        write_diam_trace_csv(&trace, Provenance::Exact, &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert!(text.contains("3/2^5"));
        assert!(text.contains("exact"));
    }
}
