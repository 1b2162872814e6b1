//! CSV and manifest export. Floats print with 17 significant digits so that
//! re-running a manifest reproduces its outputs byte-for-byte.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::confidence::{ConfidenceCurve, ConfidenceDistribution};
use crate::error::Result;
use crate::mbc::{CorrectedCurve, GpdPipeline};
use crate::mc::{McConfig, TailStudyResult};

/// 17 significant digits; enough to round-trip any f64.
pub fn fmt_float(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".to_string() } else { "-inf".to_string() }
    } else {
        format!("{x:.16e}")
    }
}

fn write_rows(path: &Path, header: &str, rows: &[Vec<f64>]) -> Result<()> {
    let mut out = String::with_capacity(rows.len() * 80);
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|x| fmt_float(*x)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Curve table `theta,cc,H,C` on the supplied grid.
pub fn write_curve_csv(
    path: &Path,
    grid: &[f64],
    cc: &ConfidenceCurve,
    cd: &ConfidenceDistribution,
) -> Result<()> {
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        rows.push(vec![t, cc.eval(t)?, cc.h(t)?, cd.cdf(t)?]);
    }
    write_rows(path, "theta,cc,H,C", &rows)
}

/// Full comparison table `theta,cc,ccstar,C,H,Hstar`.
pub fn write_comparison_csv(
    path: &Path,
    grid: &[f64],
    cc: &ConfidenceCurve,
    star: &CorrectedCurve,
    cd: &ConfidenceDistribution,
) -> Result<()> {
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        rows.push(vec![t, cc.eval(t)?, star.ccstar(t)?, cd.cdf(t)?, cc.h(t)?, star.hstar(t)?]);
    }
    write_rows(path, "theta,cc,ccstar,C,H,Hstar", &rows)
}

/// Corrected-curve table `theta,wstar,ccstar,Hstar`.
pub fn write_corrected_csv(path: &Path, grid: &[f64], star: &CorrectedCurve) -> Result<()> {
    let mut rows = Vec::with_capacity(grid.len());
    for &t in grid {
        rows.push(vec![t, star.wstar(t)?, star.ccstar(t)?, star.hstar(t)?]);
    }
    write_rows(path, "theta,wstar,ccstar,Hstar", &rows)
}

/// Bartlett-calibrated profile table `theta,w,cc` for the GPD demo.
pub fn write_bartlett_csv(path: &Path, grid: &[f64], pipe: &GpdPipeline) -> Result<()> {
    let mut rows = Vec::with_capacity(grid.len());
    for &p in grid {
        rows.push(vec![p, pipe.study.w_profile(p)?, pipe.cc_bartlett(p)?]);
    }
    write_rows(path, "theta,w,cc", &rows)
}

/// Median-function table `theta,b`.
pub fn write_median_csv(path: &Path, table: &[(f64, f64)]) -> Result<()> {
    let rows: Vec<Vec<f64>> = table.iter().map(|&(p, b)| vec![p, b]).collect();
    write_rows(path, "theta,b", &rows)
}

/// Tail study table `n,alpha,left_miss,right_miss,coverage,se`.
pub fn write_tail_study_csv(path: &Path, results: &[TailStudyResult]) -> Result<()> {
    let mut out = String::new();
    out.push_str("n,alpha,left_miss,right_miss,coverage,se\n");
    for res in results {
        for c in &res.cells {
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                c.n,
                fmt_float(c.alpha),
                fmt_float(c.left_miss),
                fmt_float(c.right_miss),
                fmt_float(c.coverage),
                fmt_float(c.se)
            ));
        }
    }
    let mut f = std::fs::File::create(path)?;
    f.write_all(out.as_bytes())?;
    Ok(())
}

/// Sidecar manifest carrying everything needed to reproduce an output.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub subcommand: String,
    pub argv: Vec<String>,
    pub model: String,
    pub params: serde_json::Map<String, serde_json::Value>,
    pub mc: McConfig,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(subcommand: &str, model: &str, mc: McConfig) -> Self {
        RunManifest {
            tool: "confcurve",
            version: env!("CARGO_PKG_VERSION"),
            subcommand: subcommand.to_string(),
            argv: Vec::new(),
            model: model.to_string(),
            params: serde_json::Map::new(),
            mc,
            outputs: Vec::new(),
        }
    }

    pub fn with_argv(mut self, argv: Vec<String>) -> Self {
        self.argv = argv;
        self
    }

    pub fn param(mut self, key: &str, value: impl Serialize) -> Self {
        self.params.insert(key.to_string(), serde_json::to_value(value).expect("serializable"));
        self
    }

    pub fn output(mut self, path: &str) -> Self {
        self.outputs.push(path.to_string());
        self
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        f.write_all(body.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

/// Sidecar for corrected-curve exports: seed, replicate counts, grid nodes
/// and the median-function table.
#[derive(Debug, Clone, Serialize)]
pub struct CorrectedSidecar {
    pub seed: u64,
    pub replicates: usize,
    pub grid_nodes: Vec<f64>,
    pub median_table: Vec<(f64, f64)>,
}

impl CorrectedSidecar {
    pub fn write(&self, path: &Path) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        let body = serde_json::to_string_pretty(self).expect("sidecar serializes");
        f.write_all(body.as_bytes())?;
        f.write_all(b"\n")?;
        Ok(())
    }
}

/// Load a one-column CSV of reals (optional non-numeric header line).
pub fn read_column_csv(path: &Path) -> Result<Vec<f64>> {
    let body = std::fs::read_to_string(path)?;
    let mut out = Vec::new();
    for (i, line) in body.lines().enumerate() {
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        match t.parse::<f64>() {
            Ok(v) => out.push(v),
            Err(_) if i == 0 => continue, // header
            Err(e) => return Err(crate::error::Error::Invalid(format!("line {}: {e}", i + 1))),
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format_round_trips() {
        for &x in &[0.1, -3.068528194400545, 1e-300, 12345.6789] {
            let s = fmt_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
        }
        assert_eq!(fmt_float(f64::INFINITY), "inf");
    }

    #[test]
    fn curve_csv_schema() {
        use crate::calib::exact_calibration_for;
        use crate::confidence::{cc_from_w, exact_cd};
        use crate::models::NormalVariance;
        let m = NormalVariance::new(10);
        let data = vec![2.0; 10];
        let cc = cc_from_w(&m, &data, &exact_calibration_for(&m, false).unwrap()).unwrap();
        let cd = exact_cd(&m, &data).unwrap();
        let path = std::env::temp_dir().join("confcurve_test_curve.csv");
        write_curve_csv(&path, &[2.0, 4.0, 6.0], &cc, &cd).unwrap();
        let body = std::fs::read_to_string(&path).unwrap();
        assert!(body.starts_with("theta,cc,H,C\n"));
        assert_eq!(body.lines().count(), 4);
        // cc vanishes at the estimate
        let at_mle: Vec<&str> = body.lines().nth(2).unwrap().split(',').collect();
        assert_eq!(at_mle[1].parse::<f64>().unwrap(), 0.0);
        std::fs::remove_file(&path).ok();
    }

    #[test]
    fn column_csv_reads_with_and_without_header() {
        let dir = std::env::temp_dir();
        let p = dir.join("confcurve_test_col.csv");
        std::fs::write(&p, "exceedance\n0.1\n0.25\n\n0.05\n").unwrap();
        let v = read_column_csv(&p).unwrap();
        assert_eq!(v, vec![0.1, 0.25, 0.05]);
        std::fs::write(&p, "1.5\n2.5\n").unwrap();
        assert_eq!(read_column_csv(&p).unwrap(), vec![1.5, 2.5]);
        std::fs::remove_file(&p).ok();
    }
}
