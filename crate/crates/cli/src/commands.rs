use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use proper_actions::cartan::{census_of, growth_probe, MarginFn, Mode, DEFAULT_WORD_BUDGET};
use proper_actions::chamber::{build_pair_spec, catalog, decide_existence_capped, Family, Outcome};
use proper_actions::linalg::{from_square_rows, Matrix};
use proper_actions::schottky::{
    construct_verified, evaluate_word_ball, growth_sample, ConstructOptions, PipelineOptions, SchottkyWitness,
};
use proper_actions::Error;
use serde_json::{json, Value};

use crate::report::CliError;
use crate::{CatalogArgs, CensusArgs, Cli, Command, ConstructArgs, DecideArgs, GrowthArgs, ProbeCommand, VerifyArgs};

/// A finished command: its outcome record, the human table, and a failure
/// that still produced an outcome (a failed verification).
pub struct Done {
    pub outcome: Value,
    pub table: String,
    pub failure: Option<CliError>,
}

impl Done {
    fn ok(outcome: Value, table: String) -> Done {
        Done { outcome, table, failure: None }
    }
}

pub fn run(cli: &Cli) -> Result<Done, CliError> {
    let cap = cli.rank_cap;
    match &cli.command {
        Command::Decide(a) => decide(a, cap),
        Command::Construct(a) => construct(a, cap),
        Command::Verify(a) => verify(a, cap),
        Command::Probe(ProbeCommand::Growth(a)) => growth(a),
        Command::Probe(ProbeCommand::Census(a)) => census_cmd(a, cap),
        Command::Catalog(a) => catalog_cmd(a, cap),
    }
}

/// Parses `FAMILY:PARAMS`, also accepting `/` as the separator.
fn parse_target(s: &str) -> Result<Family, Error> {
    if s.contains(':') {
        Family::parse_target(s)
    } else {
        Family::parse_target(&s.replacen('/', ":", 1))
    }
}

fn margin_for(target: &str, n: usize, cap: usize) -> Result<MarginFn, Error> {
    let family = parse_target(target)?;
    let margin = build_pair_spec(family, cap)?
        .margin
        .ok_or_else(|| Error::KindMismatch(format!("{family} has no margin function in SL(n, R)")))?;
    if margin.dim() != n {
        return Err(Error::DimensionMismatch { left: n, right: margin.dim() });
    }
    Ok(margin)
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(CliError::io(path))
}

fn read_witness(path: &Path) -> Result<SchottkyWitness, CliError> {
    Ok(SchottkyWitness::from_json(&read(path)?)?)
}

fn read_matrix(path: &Path) -> Result<Matrix, CliError> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(&read(path)?).map_err(Error::from)?;
    Ok(from_square_rows(&rows)?)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or_else(|| "-".into(), |v| format!("{v:.4}"))
}

fn decide(a: &DecideArgs, cap: usize) -> Result<Done, CliError> {
    let family = Family::parse(&a.family, &a.params)?;
    let spec = build_pair_spec(family, cap)?;
    let decision = decide_existence_capped(&spec, cap)?;
    let outcome = json!({
        "family": family.to_string(),
        "chamber": spec.chamber.label(),
        "decision": decision,
    });
    Ok(Done::ok(outcome, String::new()))
}

fn construct(a: &ConstructArgs, cap: usize) -> Result<Done, CliError> {
    let family = parse_target(&a.target)?;
    let n =
        family.sl_dimension().ok_or_else(|| Error::BadParameters(format!("{family} is not a family in SL(n, R)")))?;
    if n != a.n {
        return Err(Error::BadParameters(format!("--n {} does not match {family}, which lives in SL({n})", a.n)).into());
    }
    let spec = build_pair_spec(family, cap)?;
    let decision = decide_existence_capped(&spec, cap)?;
    if decision.outcome != Outcome::ExistsFreeZariskiDense {
        return Err(Error::PreconditionFailed(format!(
            "{family} is decided {:?}: no free proper group to construct",
            decision.outcome
        ))
        .into());
    }
    let opts = PipelineOptions {
        construct: ConstructOptions { t: a.t, mode: a.mode.into(), max_m: a.max_m, ..ConstructOptions::default() },
        max_len: a.check_len,
        seed: a.seed,
        rank_cap: cap,
        ..PipelineOptions::default()
    };
    let mut w = construct_verified(&spec, &opts).map_err(CliError::Construct)?;
    w.word_ball = None;
    w.empirical_constants = None;
    write(&a.out, &(w.to_json()? + "\n"))?;

    let outcome = json!({
        "witness_file": a.out,
        "target": w.target,
        "n": w.n,
        "t": w.t,
        "mode": w.mode,
        "seed": w.seed,
        "m": w.m,
        "epsilon": w.epsilon,
        "min_transversality": w.min_pair_margin(),
        "cone": w.cone,
        "lambdas": w.lambdas,
    });
    let mut t = String::new();
    writeln!(t, "target      {}", w.target.as_deref().unwrap_or("-")).unwrap();
    writeln!(t, "generators  {} in SL({}), {:?} mode, seed {}", w.t, w.n, w.mode, w.seed).unwrap();
    writeln!(t, "power m     {}", w.m).unwrap();
    writeln!(t, "epsilon     {:.6}", w.epsilon).unwrap();
    writeln!(t, "min margin  {:.6}", w.min_pair_margin()).unwrap();
    writeln!(t, "cone radius {:.6}", w.cone.angular_radius).unwrap();
    writeln!(t, "written to  {}", a.out.display()).unwrap();
    Ok(Done::ok(outcome, t))
}

fn check_name(e: &Error) -> &'static str {
    match e.root() {
        Error::FreenessFailure { .. } => "freeness",
        Error::ConeEscape { .. } => "cone_membership",
        Error::AdditivityFailure { .. } => "additivity",
        Error::MarginDegeneration { .. } => "properness",
        _ => "other",
    }
}

fn verify(a: &VerifyArgs, cap: usize) -> Result<Done, CliError> {
    let w = read_witness(&a.witness)?;
    let margin = match (&a.margin, &w.target) {
        _ if a.no_margin => None,
        (Some(s), _) | (None, Some(s)) => Some(margin_for(s, w.n, cap)?),
        (None, None) => None,
    };
    let mode = a.mode.map_or(w.mode, Mode::from);
    let (report, constants, failure) =
        evaluate_word_ball(&w, margin.as_ref(), a.max_len, mode, DEFAULT_WORD_BUDGET).map_err(CliError::Verify)?;
    if failure.is_none() {
        if let Some(out) = &a.out {
            let mut filled = w.clone();
            filled.word_ball = Some(report.clone());
            filled.empirical_constants = Some(constants.clone());
            write(out, &(filled.to_json()? + "\n"))?;
        }
    }

    let outcome = json!({
        "passed": failure.is_none(),
        "failed_check": failure.as_ref().map(check_name),
        "failure": failure.as_ref().map(|e| e.to_string()),
        "margin": margin,
        "word_ball": report,
        "empirical_constants": constants,
    });
    let mut t = String::new();
    writeln!(t, "{:>3} {:>9} {:>11} {:>11} {:>11}  argmin", "l", "words", "min margin", "residual", "cone off")
        .unwrap();
    for s in &report.per_length {
        writeln!(
            t,
            "{:>3} {:>9} {:>11} {:>11.4} {:>11.4}  {}",
            s.length,
            s.words,
            fmt_opt(s.min_margin),
            s.max_residual,
            s.max_cone_offset,
            s.min_margin_word.as_deref().unwrap_or("-")
        )
        .unwrap();
    }
    writeln!(t, "words {} ({} very reduced), {:?} mode", report.word_count, report.very_reduced_words, report.mode)
        .unwrap();
    let mut checks = vec![
        ("freeness", &report.freeness),
        ("cone membership", &report.cone_membership),
        ("additivity", &report.additivity),
    ];
    if let Some(p) = &report.properness {
        checks.push(("properness", p));
    }
    for (name, c) in checks {
        writeln!(t, "{:<16} {}  {}", name, if c.passed { "pass" } else { "FAIL" }, c.detail).unwrap();
    }
    writeln!(t, "M_box {:.4}", constants.m_box).unwrap();
    Ok(Done { outcome, table: t, failure: failure.map(CliError::Verify) })
}

fn growth(a: &GrowthArgs) -> Result<Done, CliError> {
    let (g, f, fp, source) = match (&a.g, &a.f, &a.fprime, a.sample_n) {
        (Some(g), Some(f), Some(fp), _) => {
            (read_matrix(g)?, read_matrix(f)?, read_matrix(fp)?, json!({ "g": g, "f": f, "fprime": fp }))
        }
        (_, _, _, Some(n)) => {
            let (g, f, fp) = growth_sample(n, a.seed)?;
            (g, f, fp, json!({ "sample_n": n, "seed": a.seed }))
        }
        _ => return Err(Error::BadParameters("give --g, --f and --fprime, or --sample-n".into()).into()),
    };
    let r = growth_probe(&g, &f, &fp, a.pmax)?;
    let outcome = json!({ "source": source, "growth": r });
    let mut t = String::new();
    writeln!(t, "{:>3} {:>12} {:>12} {:>12}", "p", "difference", "B+ dist", "|mu|").unwrap();
    for p in 0..r.p_max {
        writeln!(t, "{:>3} {:>12.6} {:>12.6} {:>12.4}", p + 1, r.differences[p], r.b_plus_distance[p], r.mu_norm[p])
            .unwrap();
    }
    writeln!(t, "sup difference {:.6}", r.sup_difference).unwrap();
    Ok(Done::ok(outcome, t))
}

fn census_cmd(a: &CensusArgs, cap: usize) -> Result<Done, CliError> {
    let w = read_witness(&a.witness)?;
    let margin = margin_for(&a.margin, w.n, cap)?;
    let mode = a.mode.map_or(w.mode, Mode::from);
    let c = census_of(&w.alphabet(mode)?, &margin, a.radius, a.max_len, DEFAULT_WORD_BUDGET)?;
    let outcome = json!({ "seed": w.seed, "m": w.m, "margin": margin, "census": c });
    let mut t = String::new();
    writeln!(t, "{:>3} {:>9} {:>11}", "l", "count", "cumulative").unwrap();
    for (l, (k, cum)) in c.per_length.iter().zip(&c.cumulative).enumerate() {
        writeln!(t, "{l:>3} {k:>9} {cum:>11}").unwrap();
    }
    Ok(Done::ok(outcome, t))
}

const FAMILY_CONSTRAINTS: [(&str, &str, &str); 5] = [
    ("sl_n_over_sl_p_x_sl_np", "SL(n,R)/SL(p,R)xSL(n-p,R)", "1 <= p < n"),
    ("sl_n_over_sl_m_x_i", "SL(n,R)/SL(m,R)", "1 <= m < n"),
    ("sl_2m_over_sp_m", "SL(2m,R)/Sp(m,R)", "m >= 1"),
    ("sl_n_over_so_pq", "SL(p+q,R)/SO(p,q)", "p + q >= 2 (or n, p with p <= n)"),
    ("so_p1q_over_so_pq", "SO(p+1,q)/SO(p,q)", "q >= 1, not p = 0 with q = 1"),
];

fn catalog_cmd(a: &CatalogArgs, cap: usize) -> Result<Done, CliError> {
    let rows = catalog(a.max_n, cap)?;
    let families: Vec<Value> = FAMILY_CONSTRAINTS
        .iter()
        .map(|(tag, space, constraint)| json!({ "tag": tag, "space": space, "constraint": constraint }))
        .collect();
    let listed = rows.iter().filter(|r| r.agrees.is_some()).count();
    let disagreements: Vec<String> =
        rows.iter().filter(|r| r.agrees == Some(false)).map(|r| r.family.to_string()).collect();
    let outcome = json!({
        "max_n": a.max_n,
        "rank_cap": cap,
        "families": families,
        "rows": rows,
        "summary": {
            "rows": rows.len(),
            "listed": listed,
            "agreeing": listed - disagreements.len(),
            "disagreeing": disagreements,
        },
    });
    Ok(Done::ok(outcome, String::new()))
}
