//! CSV form of a sweep report.
//!
//! Run metadata precedes the table as `# key=value` comment lines. Numbers
//! are written with nine significant digits; undefined values are empty.

use std::path::Path;

use super::{ExperimentError, Param, ParamKind, RowStatus, SweepReport, SweepRow};
use crate::grid::PNorm;

pub const CSV_HEADER: [&str; 8] = ["scenario_id", "kind", "param", "status", "z", "jain", "eta_r_pct", "wall_ms"];

const BANNER: &str = "# fairsoc sweep report";

fn sci(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.8e}")).unwrap_or_default()
}

pub fn export_csv(report: &SweepReport) -> Result<String, ExperimentError> {
    let mut out = String::new();
    out.push_str(BANNER);
    out.push('\n');
    let grid: Vec<String> = report.grid.iter().map(|p| p.to_string()).collect();
    out.push_str(&format!("# kind={}\n# grid={}\n", report.kind, grid.join(",")));
    out.push_str(&format!("# case_fingerprint={}\n", report.case_fingerprint));
    if let Some(seed) = report.seed {
        out.push_str(&format!("# seed={seed}\n"));
    }
    for (k, v) in &report.config {
        out.push_str(&format!("# {k}={v}\n"));
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER)?;
    for r in &report.rows {
        w.write_record([
            r.scenario_id.to_string(),
            r.param.kind().to_string(),
            r.param.to_string(),
            r.status.to_string(),
            sci(r.z),
            sci(r.jain),
            sci(r.eta_r_pct),
            r.wall_ms.map(|t| format!("{t:.3}")).unwrap_or_default(),
        ])?;
    }
    let body = w.into_inner().map_err(|e| ExperimentError::Io(e.into_error()))?;
    out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
    Ok(out)
}

fn bad(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Report(msg.into())
}

fn parse_param(kind: ParamKind, s: &str) -> Result<Param, ExperimentError> {
    match kind {
        ParamKind::Eps => s
            .parse::<f64>()
            .ok()
            .filter(|e| (0.0..=1.0).contains(e))
            .map(Param::Eps)
            .ok_or_else(|| bad(format!("invalid eps {s:?}"))),
        ParamKind::P => s.parse::<PNorm>().map(Param::P).map_err(|e| bad(e.to_string())),
    }
}

fn parse_opt(s: &str, what: &str) -> Result<Option<f64>, ExperimentError> {
    if s.is_empty() {
        return Ok(None);
    }
    s.parse::<f64>()
        .map(Some)
        .map_err(|_| bad(format!("invalid {what} {s:?}")))
}

pub fn import_csv(text: &str) -> Result<SweepReport, ExperimentError> {
    let mut kind = None;
    let mut grid_text = None;
    let mut fingerprint = None;
    let mut seed = None;
    let mut config = Vec::new();
    for line in text.lines().take_while(|l| l.starts_with('#')) {
        if line == BANNER {
            continue;
        }
        let Some((key, value)) = line[1..].trim().split_once('=') else {
            return Err(bad(format!("metadata line without key=value: {line:?}")));
        };
        match key {
            "kind" => {
                kind = Some(match value {
                    "eps" => ParamKind::Eps,
                    "p" => ParamKind::P,
                    _ => return Err(bad(format!("unknown kind {value:?}"))),
                })
            }
            "grid" => grid_text = Some(value.to_string()),
            "case_fingerprint" => fingerprint = Some(value.to_string()),
            "seed" => seed = Some(value.parse().map_err(|_| bad(format!("invalid seed {value:?}")))?),
            _ => config.push((key.to_string(), value.to_string())),
        }
    }
    let kind = kind.ok_or_else(|| bad("missing kind"))?;
    let grid = grid_text
        .ok_or_else(|| bad("missing grid"))?
        .split(',')
        .map(|s| parse_param(kind, s))
        .collect::<Result<Vec<_>, _>>()?;

    let mut rd = csv::ReaderBuilder::new().comment(Some(b'#')).from_reader(text.as_bytes());
    if rd.headers()?.iter().ne(CSV_HEADER) {
        return Err(bad("unexpected header"));
    }
    let mut rows = Vec::new();
    for rec in rd.records() {
        let rec = rec?;
        if rec.len() != CSV_HEADER.len() {
            return Err(bad(format!("expected {} fields, found {}", CSV_HEADER.len(), rec.len())));
        }
        if &rec[1] != kind.as_str() {
            return Err(bad(format!("row kind {:?} in a {kind} report", &rec[1])));
        }
        let param = parse_param(kind, &rec[2])?;
        let expected = grid[rows.len() % grid.len()];
        if param != expected {
            return Err(bad(format!("row {} has parameter {param}, expected {expected}", rows.len() + 1)));
        }
        let status = match &rec[3] {
            "optimal" => RowStatus::Optimal,
            "infeasible" => RowStatus::Infeasible,
            "unknown" => RowStatus::Unknown,
            s => return Err(bad(format!("unknown status {s:?}"))),
        };
        rows.push(SweepRow {
            scenario_id: rec[0].parse().map_err(|_| bad(format!("invalid scenario id {:?}", &rec[0])))?,
            param,
            status,
            z: parse_opt(&rec[4], "z")?,
            jain: parse_opt(&rec[5], "jain")?,
            eta_r_pct: parse_opt(&rec[6], "eta_r_pct")?,
            wall_ms: parse_opt(&rec[7], "wall_ms")?,
        });
    }
    if rows.len() % grid.len() != 0 {
        return Err(bad("row count is not a multiple of the grid size"));
    }
    Ok(SweepReport {
        kind,
        grid,
        case_fingerprint: fingerprint.unwrap_or_default(),
        seed,
        config,
        rows,
    })
}

pub fn write_csv_file(path: impl AsRef<Path>, report: &SweepReport) -> Result<(), ExperimentError> {
    std::fs::write(path, export_csv(report)?)?;
    Ok(())
}

pub fn read_csv_file(path: impl AsRef<Path>) -> Result<SweepReport, ExperimentError> {
    import_csv(&std::fs::read_to_string(path)?)
}
