use patrolgame::allocation::{allocate_complete, co_optimize_bipartite};
use patrolgame::strategy::{
    generic_bound, synthesize_bipartite, synthesize_complete, synthesize_star,
};
use patrolgame::{AttackDurations, GraphTopology};

use crate::output::round_sig;
use crate::{exit, Failure, SweepArgs};

const MAX_ROWS: usize = 10_000;
const HEADER: [&str; 7] = ["family", "sizes", "param", "mu", "w", "bound", "ratio"];

/// Parses `a..b` (inclusive), `a,b,c` or `a`.
pub fn parse_range(text: &str) -> Result<Vec<u64>, Failure> {
    let bad = || Failure::usage(format!("bad range '{text}'"));
    let num = |s: &str| s.trim().parse::<u64>().map_err(|_| bad());
    if let Some((lo, hi)) = text.split_once("..") {
        let (lo, hi) = (
            num(lo)?,
            num(hi.trim_start_matches('=')).map_err(|_| bad())?,
        );
        return Ok((lo..=hi).collect());
    }
    text.split(',').map(num).collect()
}

enum Param {
    Tau(u64),
    Budget(u64),
}

struct Row {
    family: &'static str,
    sizes: String,
    param: String,
    mu: f64,
    w: f64,
    bound: f64,
}

fn required(opt: &Option<String>, flag: &str) -> Result<Vec<u64>, Failure> {
    match opt {
        Some(text) => parse_range(text),
        None => Err(Failure::usage(format!("sweep needs {flag}"))),
    }
}

fn as_u32(x: u64) -> u32 {
    u32::try_from(x).unwrap_or(u32::MAX)
}

pub fn sweep(a: &SweepArgs) -> Result<String, Failure> {
    let params: Vec<Param> = match (&a.tau, &a.budget) {
        (Some(t), None) => parse_range(t)?.into_iter().map(Param::Tau).collect(),
        (None, Some(b)) => parse_range(b)?.into_iter().map(Param::Budget).collect(),
        _ => return Err(Failure::usage("sweep needs exactly one of --tau and --B")),
    };
    let family = a.family.to_ascii_lowercase();
    let sizes: Vec<(usize, usize)> = match family.as_str() {
        "complete" | "star" => required(&a.n, "--n")?
            .into_iter()
            .map(|n| (n as usize, 0))
            .collect(),
        "bipartite" | "complete_bipartite" => {
            let nps = required(&a.np, "--np")?;
            let nqs = required(&a.nq, "--nq")?;
            nps.iter()
                .flat_map(|&p| nqs.iter().map(move |&q| (p as usize, q as usize)))
                .collect()
        }
        other => {
            return Err(Failure::new(
                exit::UNSUPPORTED,
                format!("sweep does not support family '{other}'"),
            ))
        }
    };
    let grid = sizes.len().saturating_mul(params.len());
    if grid > MAX_ROWS {
        return Err(Failure::new(
            exit::GUARD,
            format!("grid of {grid} rows exceeds {MAX_ROWS}"),
        ));
    }

    let mut rows = Vec::with_capacity(grid);
    for &(a_size, b_size) in &sizes {
        for param in &params {
            // Grid points outside a family's valid range are skipped.
            if let Ok(row) = evaluate(&family, a_size, b_size, param) {
                rows.push(row);
            }
        }
    }

    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::new(exit::FAILED, e.to_string());
    w.write_record(HEADER).map_err(io)?;
    for r in rows {
        let fmt = |x: f64| round_sig(x).to_string();
        w.write_record([
            r.family.to_string(),
            r.sizes,
            r.param,
            fmt(r.mu),
            fmt(r.w),
            fmt(r.bound),
            fmt(r.mu / r.bound),
        ])
        .map_err(io)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Failure::new(exit::FAILED, e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("CSV of ASCII fields"))
}

fn evaluate(family: &str, a: usize, b: usize, param: &Param) -> Result<Row, Failure> {
    let (family, sizes) = match family {
        "complete" => ("complete", format!("n={a}")),
        "star" => ("star", format!("n={a}")),
        _ => ("bipartite", format!("{a}x{b}")),
    };
    let n = a + b;
    let (tau, mu, w, param) = match *param {
        Param::Tau(t) => {
            let tau = AttackDurations::new(vec![as_u32(t); n])?;
            let r = match family {
                "complete" => synthesize_complete(&tau)?,
                "star" => synthesize_star(&tau)?,
                _ => {
                    let g = GraphTopology::complete_bipartite(a, b)?;
                    synthesize_bipartite(&g, &tau.as_slice()[..a], &tau.as_slice()[a..])?
                }
            };
            (tau, r.mu, r.w, format!("tau={t}"))
        }
        Param::Budget(budget) => {
            let r = match family {
                "complete" => allocate_complete(n, budget)?,
                "bipartite" => co_optimize_bipartite(a, b, budget)?,
                _ => {
                    return Err(Failure::new(
                        exit::UNSUPPORTED,
                        "no allocation rule for stars",
                    ))
                }
            };
            (
                AttackDurations::new(r.tau)?,
                r.mu,
                r.w,
                format!("B={budget}"),
            )
        }
    };
    Ok(Row {
        family,
        sizes,
        param,
        mu,
        w,
        bound: generic_bound(&tau),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(parse_range("3..6").unwrap(), vec![3, 4, 5, 6]);
        assert_eq!(parse_range("3..=4").unwrap(), vec![3, 4]);
        assert_eq!(parse_range("2,4").unwrap(), vec![2, 4]);
        assert_eq!(parse_range("7").unwrap(), vec![7]);
        assert!(parse_range("6..3").unwrap().is_empty());
        assert!(parse_range("x").is_err());
    }
}
