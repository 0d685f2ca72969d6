use clap::ValueEnum;
use patrolgame::allocation::{allocate_complete, modified_bisection};
use patrolgame::oracles::{
    allocation_suite, bound_suite, closed_form_suite, montecarlo_suite, star_optimality_suite,
    BoundSuiteRanges, SuiteReport,
};
use patrolgame::strategy::{
    capture_upper_bound, synthesize_bipartite, synthesize_complete, synthesize_star, StrategyResult,
};
use patrolgame::{
    build_graph, capture_probability, simulate_capture, validate_attack_durations, AttackDurations,
    GraphFamily, GraphSpec, GraphTopology, TransitionMatrix,
};
use serde_json::{json, Map, Value};

use crate::output::{one_based, render, to_value};
use crate::{exit, Failure, Mode, Reported, ScenarioArgs, ScenarioConfig, Suite, VerifyArgs};

const DEFAULT_TOL: f64 = 1e-9;
const DEFAULT_TRIALS: u64 = 100_000;
const MAX_TRIALS: u64 = 10_000_000;
const MAX_BOUND_SIDE: usize = 12;

fn graph_spec(c: &ScenarioConfig) -> Result<&GraphSpec, Failure> {
    c.graph
        .as_ref()
        .ok_or_else(|| Failure::usage("no graph given: pass --family or a scenario file"))
}

/// Builds a graph the closed-form synthesizers handle.
fn structured_graph(spec: &GraphSpec) -> Result<GraphTopology, Failure> {
    match spec.family.to_ascii_lowercase().as_str() {
        "complete" | "bipartite" | "complete_bipartite" | "star" => Ok(build_graph(spec)?),
        other => Err(Failure::new(
            exit::UNSUPPORTED,
            format!(
                "family '{other}' has no closed-form strategy; use complete, bipartite or star"
            ),
        )),
    }
}

fn synthesize(g: &GraphTopology, tau: &AttackDurations) -> Result<StrategyResult, Failure> {
    if tau.len() != g.n() {
        return Err(Failure::usage(format!(
            "tau has {} entries for {} nodes",
            tau.len(),
            g.n()
        )));
    }
    let r = match g.family() {
        GraphFamily::Complete => synthesize_complete(tau)?,
        GraphFamily::CompleteBipartite { n_p, .. } => {
            let (tp, tq) = tau.as_slice().split_at(n_p);
            synthesize_bipartite(g, tp, tq)?
        }
        GraphFamily::Star => synthesize_star(tau)?,
        GraphFamily::General => {
            return Err(Failure::new(
                exit::UNSUPPORTED,
                "general graphs have no closed-form strategy",
            ))
        }
    };
    Ok(r)
}

fn object(v: Value) -> Map<String, Value> {
    match v {
        Value::Object(m) => m,
        _ => unreachable!("result structs serialize to objects"),
    }
}

fn tau_of(c: &ScenarioConfig) -> Result<AttackDurations, Failure> {
    let tau = c
        .tau
        .clone()
        .ok_or_else(|| Failure::usage("no tau given"))?;
    Ok(AttackDurations::new(tau)?)
}

pub fn solve(c: &ScenarioConfig, a: &ScenarioArgs) -> Result<String, Reported> {
    let spec = graph_spec(c)?;
    let g = structured_graph(spec)?;
    c.check_mode(Mode::Solve)?;
    let tau = tau_of(c)?;
    if tau.len() != g.n() {
        return Err(
            Failure::usage(format!("tau has {} entries for {} nodes", tau.len(), g.n())).into(),
        );
    }
    let mut feasibility = validate_attack_durations(&g, &tau)?;
    let synthesized = if feasibility.nontrivial {
        match synthesize(&g, &tau) {
            // The strategy class can demand more than the graph conditions do.
            Err(Failure {
                code: exit::INVALID_INPUT,
                message,
            }) => {
                feasibility.nontrivial = false;
                feasibility.notes = [feasibility.notes.as_str(), message.as_str()]
                    .iter()
                    .filter(|s| !s.is_empty())
                    .copied()
                    .collect::<Vec<_>>()
                    .join("; ");
                None
            }
            other => Some(other?),
        }
    } else {
        None
    };
    let Some(result) = synthesized else {
        let mut report = object(to_value(&feasibility));
        report.insert(
            "condition1_violations".into(),
            json!(feasibility
                .condition1_violations
                .iter()
                .map(|i| i + 1)
                .collect::<Vec<_>>()),
        );
        return Err(Reported {
            code: exit::INVALID_INPUT,
            stdout: String::new(),
            stderr: render(Value::Object(report)),
        });
    };
    let capture = capture_probability(&result.p, &tau)?;
    let bound = capture_upper_bound(&result.pi, &tau)?.with_mu(result.mu);
    let tol = c.tol.unwrap_or(DEFAULT_TOL);

    let mut out = object(to_value(&result));
    out.insert("family".into(), json!(spec.family));
    out.insert("n".into(), json!(g.n()));
    out.insert("tau".into(), json!(tau.as_slice()));
    out.insert("bound".into(), to_value(&bound));
    out.insert("recursion_mu".into(), json!(capture.mu));
    out.insert(
        "agrees".into(),
        json!((capture.mu - result.mu).abs() <= tol),
    );
    out.insert("worst_pair".into(), json!(one_based(capture.worst_pair)));
    if a.emit_cdf {
        out.insert("cdf".into(), json!(capture.cdf));
    }
    Ok(render(Value::Object(out)))
}

pub fn allocate(c: &ScenarioConfig, a: &ScenarioArgs, mode: Mode) -> Result<String, Reported> {
    let spec = graph_spec(c)?;
    let g = structured_graph(spec)?;
    c.check_mode(mode)?;
    let budget = c.budget.ok_or_else(|| Failure::usage("no budget given"))?;
    let n = g.n();

    let (result, strategy, probes) = match g.family() {
        GraphFamily::Complete => {
            let r = allocate_complete(n, budget)?;
            let s = synthesize_complete(&AttackDurations::new(r.tau.clone())?)?;
            (r, s, None)
        }
        GraphFamily::CompleteBipartite { .. } => {
            let (r, probes) = modified_bisection_checked(&g, budget)?;
            let split = r
                .split
                .as_ref()
                .expect("bipartite allocations carry a split");
            let s = synthesize_bipartite(&g, &split.tau_p, &split.tau_q)?;
            (r, s, Some(probes))
        }
        _ => {
            return Err(Failure::new(
                exit::UNSUPPORTED,
                format!("no allocation rule for family '{}'", spec.family),
            )
            .into())
        }
    };
    let tau = AttackDurations::new(result.tau.clone())?;
    let capture = capture_probability(&strategy.p, &tau)?;
    let tol = c.tol.unwrap_or(DEFAULT_TOL);

    let mut out = object(to_value(&result));
    out.insert("family".into(), json!(spec.family));
    out.insert("n".into(), json!(n));
    out.insert("P".into(), to_value(&strategy.p));
    out.insert("pi".into(), to_value(&strategy.pi));
    out.insert("recursion_mu".into(), json!(capture.mu));
    out.insert(
        "agrees".into(),
        json!((capture.mu - result.mu).abs() <= tol),
    );
    if let Some(probes) = probes {
        out.insert("bisection".into(), to_value(&probes));
    }
    if a.compare_uniform {
        let level = u32::try_from(budget / n as u64).unwrap_or(u32::MAX);
        if level == 0 {
            return Err(Failure::usage("budget is too small for a uniform allocation").into());
        }
        let uniform = AttackDurations::new(vec![level; n])?;
        let u = synthesize(&g, &uniform)?;
        out.insert(
            "uniform".into(),
            json!({"tau": uniform.as_slice(), "mu": u.mu}),
        );
        out.insert("mu_gain".into(), json!(result.mu - u.mu));
    }
    Ok(render(Value::Object(out)))
}

fn modified_bisection_checked(
    g: &GraphTopology,
    budget: u64,
) -> Result<
    (
        patrolgame::allocation::AllocationResult,
        Vec<patrolgame::allocation::BisectionProbe>,
    ),
    Failure,
> {
    let (n_p, n_q) = g.sides().expect("bipartite graphs have sides");
    Ok(modified_bisection(n_p, n_q, budget)?)
}

pub fn simulate(c: &ScenarioConfig, _a: &ScenarioArgs) -> Result<String, Reported> {
    let spec = graph_spec(c)?;
    c.check_mode(Mode::Simulate)?;
    let g = build_graph(spec).map_err(Failure::from)?;
    let tau = tau_of(c)?;
    let p = match &c.p {
        Some(rows) => {
            let p = TransitionMatrix::from_rows(rows)?;
            p.check_support(&g)?;
            p
        }
        None => synthesize(&g, &tau)?.p,
    };
    let trials = c.trials.unwrap_or(DEFAULT_TRIALS);
    if trials > MAX_TRIALS {
        return Err(Failure::new(exit::GUARD, format!("trials above {MAX_TRIALS}")).into());
    }
    let seed = c.seed.unwrap_or(0);
    let sim = simulate_capture(&p, &tau, trials, seed)?;
    let exact = capture_probability(&p, &tau)?;

    let mut within = 0usize;
    let mut max_err = 0.0f64;
    for (est_row, exact_row) in sim.estimates.iter().zip(&exact.cdf) {
        for (&est, &prob) in est_row.iter().zip(exact_row) {
            let prob = prob.clamp(0.0, 1.0);
            let band = 3.0 * (prob * (1.0 - prob) / trials as f64).sqrt();
            let err = (est - prob).abs();
            max_err = max_err.max(err);
            if err <= band + DEFAULT_TOL {
                within += 1;
            }
        }
    }
    let out = json!({
        "family": spec.family,
        "n": g.n(),
        "tau": tau.as_slice(),
        "P": to_value(&p),
        "trials": trials,
        "seed": seed,
        "estimates": sim.estimates,
        "exact": exact.cdf,
        "overall": sim.overall,
        "mu": exact.mu,
        "max_abs_error": max_err,
        "within_3sigma": within,
        "pairs": g.n() * g.n(),
    });
    Ok(render(out))
}

fn run_suite(
    suite: Suite,
    seed: u64,
    trials: u64,
    nmax: Option<usize>,
) -> Result<SuiteReport, Failure> {
    let report = match suite {
        Suite::Bounds => {
            let side = nmax.unwrap_or(8);
            if side > MAX_BOUND_SIDE {
                return Err(Failure::new(
                    exit::GUARD,
                    format!("--nmax above {MAX_BOUND_SIDE}"),
                ));
            }
            bound_suite(&BoundSuiteRanges {
                max_baseline_side: side,
                seed,
                ..BoundSuiteRanges::default()
            })?
        }
        Suite::AllocOracle => match nmax {
            Some(n) => allocation_suite(n, n)?,
            None => allocation_suite(5, 4)?,
        },
        Suite::Montecarlo => {
            if trials > MAX_TRIALS {
                return Err(Failure::new(
                    exit::GUARD,
                    format!("trials above {MAX_TRIALS}"),
                ));
            }
            montecarlo_suite(20, trials, seed)?
        }
        Suite::StarOpt => star_optimality_suite(200, seed)?,
        Suite::ClosedForm => closed_form_suite(200, seed)?,
        Suite::All => unreachable!("expanded by the caller"),
    };
    Ok(report)
}

pub fn verify(c: &ScenarioConfig, a: &VerifyArgs) -> Result<String, Reported> {
    let suite = match (a.suite, &c.suite) {
        (Some(s), _) => s,
        (None, Some(name)) => Suite::from_str(name, true)
            .map_err(|_| Failure::usage(format!("unknown suite '{name}'")))?,
        (None, None) => Suite::All,
    };
    let seed = a.seed.or(c.seed).unwrap_or(0);
    let trials = a.trials.or(c.trials).unwrap_or(DEFAULT_TRIALS);
    let nmax = a.nmax.or(c.nmax);
    let selected = match suite {
        Suite::All => vec![
            Suite::ClosedForm,
            Suite::Bounds,
            Suite::AllocOracle,
            Suite::StarOpt,
            Suite::Montecarlo,
        ],
        s => vec![s],
    };

    let mut text = String::new();
    let mut total = SuiteReport::default();
    for s in selected {
        let report = run_suite(s, seed, trials, nmax)?;
        let name = s
            .to_possible_value()
            .expect("no skipped variants")
            .get_name()
            .to_string();
        text.push_str(&format!("{name}: {report}\n"));
        for f in report.failures() {
            text.push_str(&format!(
                "  {} {}: expected {:.9} actual {:.9}\n",
                f.check, f.instance, f.expected, f.actual
            ));
        }
        total.extend(report);
    }
    text.push_str(&format!("{total}\n"));
    if total.all_passed() {
        Ok(text)
    } else {
        Err(Reported {
            code: exit::FAILED,
            stdout: text,
            stderr: String::new(),
        })
    }
}
