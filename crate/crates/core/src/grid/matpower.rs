//! Reader for the numeric subset of the MATPOWER case format.
//!
//! Only `mpc.baseMVA` and the `mpc.bus`, `mpc.gen` and `mpc.branch`
//! matrices are read; other assignments (cost data, cell arrays, the
//! function header) are skipped. Columns follow the MATPOWER convention:
//!
//! * bus: `bus_i` (0), `Pd` (2)
//! * gen: `bus` (0), `status` (7), `Pmax` (8), `Pmin` (9)
//! * branch: `fbus` (0), `tbus` (1), `x` (3), `rateA` (5), `status` (10)

use std::collections::HashMap;

use super::{Bus, Generator, Line, Load, NetworkCase};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing {0}")]
    MissingSection(&'static str),
    #[error("{section} row {row} (line {line}) has {found} columns, expected {expected}")]
    Arity {
        section: &'static str,
        row: usize,
        line: usize,
        found: usize,
        expected: usize,
    },
    #[error("{section} row {row} (line {line}): {message}")]
    InvalidRow {
        section: &'static str,
        row: usize,
        line: usize,
        message: String,
    },
}

const BUS_MIN_COLS: usize = 3;
const GEN_MIN_COLS: usize = 10;
const BRANCH_MIN_COLS: usize = 11;

struct Row {
    line: usize,
    values: Vec<f64>,
}

#[derive(Default)]
struct Sections {
    base_mva: Option<f64>,
    bus: Option<Vec<Row>>,
    gen: Option<Vec<Row>>,
    branch: Option<Vec<Row>>,
}

fn strip_comment(line: &str) -> &str {
    match line.find('%') {
        Some(p) => &line[..p],
        None => line,
    }
}

fn parse_number(token: &str, line: usize) -> Result<f64, ParseError> {
    let v = match token {
        "Inf" | "inf" => f64::INFINITY,
        "-Inf" | "-inf" => f64::NEG_INFINITY,
        _ => token.parse::<f64>().map_err(|_| ParseError::Syntax {
            line,
            message: format!("invalid number {token:?}"),
        })?,
    };
    if v.is_nan() {
        return Err(ParseError::Syntax {
            line,
            message: "NaN entry".into(),
        });
    }
    Ok(v)
}

fn scan(text: &str) -> Result<Sections, ParseError> {
    let mut sections = Sections::default();
    // (section name, rows so far, tokens of the row being read, its line)
    let mut open: Option<(String, Vec<Row>, Vec<f64>, usize)> = None;

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let mut rest = strip_comment(raw).trim();

        if open.is_none() {
            if rest.is_empty() {
                continue;
            }
            let Some(assign) = rest.strip_prefix("mpc.") else {
                continue;
            };
            let Some((name, value)) = assign.split_once('=') else {
                continue;
            };
            let name = name.trim();
            let value = value.trim();
            if name == "baseMVA" {
                let v = value.trim_end_matches(';').trim();
                sections.base_mva = Some(parse_number(v, line)?);
                continue;
            }
            if !matches!(name, "bus" | "gen" | "branch") {
                continue;
            }
            let Some(body) = value.strip_prefix('[') else {
                return Err(ParseError::Syntax {
                    line,
                    message: format!("mpc.{name} must be a numeric matrix"),
                });
            };
            open = Some((name.to_string(), Vec::new(), Vec::new(), line));
            rest = body;
        }

        let (_, rows, current, start) = open.as_mut().unwrap();
        let mut closed = false;
        let mut body = rest;
        if let Some(p) = body.find(']') {
            closed = true;
            body = &body[..p];
        }
        for (k, chunk) in body.split(';').enumerate() {
            if k > 0 && !current.is_empty() {
                rows.push(Row {
                    line: *start,
                    values: std::mem::take(current),
                });
            }
            for token in chunk.split(|c: char| c.is_whitespace() || c == ',') {
                if token.is_empty() {
                    continue;
                }
                if current.is_empty() {
                    *start = line;
                }
                current.push(parse_number(token, line)?);
            }
        }
        // a newline also ends a row
        if !current.is_empty() {
            rows.push(Row {
                line: *start,
                values: std::mem::take(current),
            });
        }
        if closed {
            let (name, rows, _, _) = open.take().unwrap();
            match name.as_str() {
                "bus" => sections.bus = Some(rows),
                "gen" => sections.gen = Some(rows),
                _ => sections.branch = Some(rows),
            }
        }
    }
    if let Some((name, _, _, start)) = open {
        return Err(ParseError::Syntax {
            line: start,
            message: format!("mpc.{name} matrix is not closed"),
        });
    }
    Ok(sections)
}

fn check_arity(section: &'static str, rows: &[Row], min: usize) -> Result<(), ParseError> {
    let expected = rows.first().map_or(min, |r| r.values.len().max(min));
    for (k, r) in rows.iter().enumerate() {
        if r.values.len() != expected {
            return Err(ParseError::Arity {
                section,
                row: k + 1,
                line: r.line,
                found: r.values.len(),
                expected,
            });
        }
    }
    Ok(())
}

fn invalid(section: &'static str, row: usize, r: &Row, message: String) -> ParseError {
    ParseError::InvalidRow {
        section,
        row: row + 1,
        line: r.line,
        message,
    }
}

fn as_bus_id(v: f64) -> Option<usize> {
    (v >= 1.0 && v.fract() == 0.0 && v < 1e15).then_some(v as usize)
}

/// Parses MATPOWER case text into a per-unit [`NetworkCase`].
pub fn parse_matpower_case(text: &str) -> Result<NetworkCase, ParseError> {
    let sections = scan(text)?;
    let base_mva = sections.base_mva.ok_or(ParseError::MissingSection("mpc.baseMVA"))?;
    if !(base_mva > 0.0 && base_mva.is_finite()) {
        return Err(ParseError::Syntax {
            line: 0,
            message: format!("baseMVA must be positive, got {base_mva}"),
        });
    }
    let bus_rows = sections.bus.ok_or(ParseError::MissingSection("mpc.bus"))?;
    let gen_rows = sections.gen.ok_or(ParseError::MissingSection("mpc.gen"))?;
    let branch_rows = sections.branch.ok_or(ParseError::MissingSection("mpc.branch"))?;
    check_arity("bus", &bus_rows, BUS_MIN_COLS)?;
    check_arity("gen", &gen_rows, GEN_MIN_COLS)?;
    check_arity("branch", &branch_rows, BRANCH_MIN_COLS)?;

    let mut buses = Vec::with_capacity(bus_rows.len());
    let mut index_of: HashMap<usize, usize> = HashMap::new();
    for (k, r) in bus_rows.iter().enumerate() {
        let id = as_bus_id(r.values[0]).ok_or_else(|| invalid("bus", k, r, format!("bad bus number {}", r.values[0])))?;
        let pd = r.values[2];
        if !pd.is_finite() {
            return Err(invalid("bus", k, r, "non-finite demand".into()));
        }
        if index_of.insert(id, k).is_some() {
            return Err(invalid("bus", k, r, format!("duplicate bus {id}")));
        }
        buses.push(Bus {
            id,
            demand: pd / base_mva,
        });
    }
    let lookup = |section: &'static str, k: usize, r: &Row, v: f64| -> Result<usize, ParseError> {
        as_bus_id(v)
            .and_then(|id| index_of.get(&id).copied())
            .ok_or_else(|| invalid(section, k, r, format!("unknown bus {v}")))
    };

    let mut generators = Vec::new();
    for (k, r) in gen_rows.iter().enumerate() {
        let bus = lookup("gen", k, r, r.values[0])?;
        if r.values[7] <= 0.0 {
            continue;
        }
        let (pmax, pmin) = (r.values[8], r.values[9]);
        if !(pmin.is_finite() && pmax.is_finite()) {
            return Err(invalid("gen", k, r, "non-finite generation limits".into()));
        }
        if pmin > pmax {
            return Err(invalid("gen", k, r, format!("Pmin {pmin} exceeds Pmax {pmax}")));
        }
        generators.push(Generator {
            bus,
            p_min: pmin / base_mva,
            p_max: pmax / base_mva,
        });
    }

    let mut lines = Vec::with_capacity(branch_rows.len());
    for (k, r) in branch_rows.iter().enumerate() {
        let from = lookup("branch", k, r, r.values[0])?;
        let to = lookup("branch", k, r, r.values[1])?;
        let x = r.values[3];
        if !(x > 0.0 && x.is_finite()) {
            return Err(invalid("branch", k, r, format!("reactance must be positive, got {x}")));
        }
        let rate = r.values[5];
        if rate < 0.0 || rate.is_nan() {
            return Err(invalid("branch", k, r, format!("negative thermal limit {rate}")));
        }
        if from == to {
            return Err(invalid("branch", k, r, "branch connects a bus to itself".into()));
        }
        lines.push(Line {
            id: k + 1,
            from,
            to,
            susceptance: 1.0 / x,
            // rateA = 0 means unlimited in MATPOWER
            limit: if rate == 0.0 { f64::INFINITY } else { rate / base_mva },
            in_service: r.values[10] > 0.0,
        });
    }

    let loads = buses
        .iter()
        .enumerate()
        .filter(|(_, b)| b.demand > 0.0)
        .map(|(i, b)| Load { bus: i, d_max: b.demand })
        .collect();
    Ok(NetworkCase {
        base_mva,
        buses,
        lines,
        generators,
        loads,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const TINY: &str = "
function mpc = tiny
mpc.baseMVA = 100;
mpc.bus = [
  1 3 0 0;
  2 1 50 0;   % a load
  3 1 -10 0;
];
mpc.gen = [ 1 0 0 0 0 1 100 1 80 0; 3 0 0 0 0 1 100 0 50 0 ];
mpc.gencost = [ 2 0 0 3 0 1 0 ];
mpc.bus_name = { 'a'; 'b'; 'c' };
mpc.branch = [
  1 2 0 0.5 0 30 0 0 0 0 1
  2 3 0 0.25 0 0 0 0 0 0 0
];
";

    #[test]
    fn reads_tiny_case() {
        let c = parse_matpower_case(TINY).unwrap();
        assert_eq!(c.base_mva, 100.0);
        assert_eq!(c.buses.len(), 3);
        assert_eq!(c.buses[2].demand, -0.1);
        // out-of-service generator dropped
        assert_eq!(c.generators.len(), 1);
        assert_eq!(c.generators[0].p_max, 0.8);
        assert_eq!(c.lines.len(), 2);
        assert_eq!(c.lines[0].susceptance, 2.0);
        assert_eq!(c.lines[0].limit, 0.3);
        assert_eq!(c.lines[1].limit, f64::INFINITY);
        assert!(!c.lines[1].in_service);
        assert_eq!(c.loads.len(), 1);
        assert_eq!(c.loads[0].bus, 1);
        assert_eq!(c.loads[0].d_max, 0.5);
    }

    #[test]
    fn wrong_branch_arity_names_the_row() {
        let text = TINY.replace("2 3 0 0.25 0 0 0 0 0 0 0", "2 3 0 0.25 0 0 0 0 0 0");
        let err = parse_matpower_case(&text).unwrap_err();
        assert!(
            matches!(err, ParseError::Arity { section: "branch", row: 2, line: 14, found: 10, .. }),
            "{err}"
        );
    }

    #[test]
    fn missing_sections_and_bad_values() {
        let err = parse_matpower_case("mpc.baseMVA = 100;").unwrap_err();
        assert_eq!(err, ParseError::MissingSection("mpc.bus"));
        let err = parse_matpower_case(&TINY.replace("0 0.5 0 30", "0 -0.5 0 30")).unwrap_err();
        assert!(matches!(err, ParseError::InvalidRow { section: "branch", row: 1, .. }));
        let err = parse_matpower_case(&TINY.replace("2 1 50 0;", "2 1 5x0 0;")).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { line: 6, .. }), "{err}");
        let err = parse_matpower_case(&TINY.replace("];\nmpc.gen", "\nmpc.gen")).unwrap_err();
        assert!(matches!(err, ParseError::Syntax { .. }));
    }
}
