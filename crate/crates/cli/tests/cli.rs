use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

use serde_json::Value;
use tempfile::TempDir;

fn proper(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_proper")).args(args).env_remove("PROPER_RANK_CAP").output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn report(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn decide(family: &str, params: &str) -> Value {
    let o = proper(&["decide", "--family", family, "--params", params]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    report(&o)["outcome"]["decision"].clone()
}

struct Built {
    dir: TempDir,
    witness: PathBuf,
    construct: Value,
}

/// One `construct --seed 7` run shared by the tests below.
fn built() -> &'static Built {
    static B: OnceLock<Built> = OnceLock::new();
    B.get_or_init(|| {
        let dir = TempDir::new().unwrap();
        let witness = dir.path().join("w.json");
        let o = proper(&[
            "--json",
            "construct",
            "--n",
            "4",
            "--target",
            "sl_n_over_sl_m_x_i:n=4,m=3",
            "--t",
            "2",
            "--seed",
            "7",
            "--out",
            witness.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        Built { construct: report(&o), dir, witness }
    })
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn decide_examples() {
    let d = decide("sl_n_over_sl_m_x_i", "n=3,m=2");
    assert_eq!(d["outcome"], "OnlyVirtuallyAbelian");
    assert_eq!(d["no_compact_quotient"], true);
    assert!(d["witness_w"]["word"].is_array());
    assert_eq!(decide("so_p1q_over_so_pq", "p=2,q=4")["outcome"], "ExistsFreeZariskiDense");
    assert_eq!(decide("sl_n_over_sl_p_x_sl_np", "n=6,p=3")["outcome"], "ExistsFreeZariskiDense");
}

#[test]
fn decide_is_json_and_reproducible() {
    let args = ["decide", "--family", "sl_2m_over_sp_m", "--params", "m=3"];
    let (a, b) = (report(&proper(&args)), report(&proper(&args)));
    assert_eq!(a["schema_version"], "1");
    assert_eq!(a["command"], "decide");
    assert_eq!(a["inputs"]["command"]["decide"]["params"], "m=3");
    assert_eq!(a["outcome"], b["outcome"]);
}

#[test]
fn decide_exit_codes() {
    assert_eq!(code(&proper(&["decide", "--family", "sl_n_over_e6", "--params", "n=3"])), 2);
    assert_eq!(code(&proper(&["decide", "--family", "sl_n_over_sl_m_x_i", "--params", "n=3"])), 2);
    assert_eq!(code(&proper(&["decide", "--family", "sl_n_over_sl_m_x_i", "--params", "n=3,m=3"])), 2);
    let capped = proper(&["--rank-cap", "3", "decide", "--family", "sl_n_over_sl_m_x_i", "--params", "n=6,m=2"]);
    assert_eq!(code(&capped), 3);
    assert_eq!(report(&capped)["outcome"]["exit_code"], 3);
    let env = Command::new(env!("CARGO_BIN_EXE_proper"))
        .args(["decide", "--family", "sl_n_over_sl_m_x_i", "--params", "n=6,m=2"])
        .env("PROPER_RANK_CAP", "3")
        .output()
        .unwrap();
    assert_eq!(code(&env), 3);
}

#[test]
fn construct_records_power_and_epsilon() {
    let b = built();
    let out = &b.construct["outcome"];
    assert!(out["m"].as_u64().unwrap() >= 1);
    let eps = out["epsilon"].as_f64().unwrap();
    assert!(eps > 0.0 && eps <= 0.2, "{eps}");
    assert_eq!(b.construct["inputs"]["command"]["construct"]["seed"], 7);
    let w: Value = serde_json::from_str(&std::fs::read_to_string(&b.witness).unwrap()).unwrap();
    assert_eq!(w["schema_version"], "1");
    assert!(w["word_ball"].is_null());
    assert_eq!(w["certificates"].as_array().unwrap().len(), 4 * 3);
}

#[test]
fn construct_is_byte_identical_for_a_seed() {
    let b = built();
    let again = b.dir.path().join("again.json");
    let o = proper(&[
        "construct",
        "--n",
        "4",
        "--target",
        "sl_n_over_sl_m_x_i/n=4,m=3",
        "--t",
        "2",
        "--seed",
        "7",
        "--out",
        path(&again),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(std::fs::read(&b.witness).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn construct_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("x.json");
    let neg = proper(&["construct", "--n", "3", "--target", "sl_n_over_sl_m_x_i:n=3,m=2", "--out", path(&out)]);
    assert_eq!(code(&neg), 4);
    assert!(!out.exists());
    let wrong_n = proper(&["construct", "--n", "5", "--target", "sl_n_over_sl_m_x_i:n=4,m=3", "--out", path(&out)]);
    assert_eq!(code(&wrong_n), 2);
    let not_sl = proper(&["construct", "--n", "5", "--target", "so_p1q_over_so_pq:p=2,q=4", "--out", path(&out)]);
    assert_eq!(code(&not_sl), 2);
}

#[test]
fn verify_fresh_witness() {
    let b = built();
    let filled = b.dir.path().join("filled.json");
    let o = proper(&["--json", "verify", "--witness", path(&b.witness), "--max-len", "6", "--out", path(&filled)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let r = report(&o);
    assert_eq!(r["outcome"]["passed"], true);
    let per_length = r["outcome"]["word_ball"]["per_length"].as_array().unwrap();
    assert_eq!(per_length.len(), 6);
    let margins: Vec<f64> = per_length.iter().map(|s| s["min_margin"].as_f64().unwrap()).collect();
    for l in 2..margins.len() {
        assert!(margins[l] > margins[l - 1], "{margins:?}");
    }
    let w: Value = serde_json::from_str(&std::fs::read_to_string(&filled).unwrap()).unwrap();
    assert_eq!(w["word_ball"]["word_count"], 1456);
}

#[test]
fn verify_prints_a_table_without_json() {
    let o = proper(&["verify", "--witness", path(&built().witness), "--max-len", "3"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("min margin"));
    assert!(text.lines().any(|l| l.starts_with("freeness") && l.contains("pass")));
}

#[test]
fn verify_tampered_witness_fails() {
    let b = built();
    let mut w: Value = serde_json::from_str(&std::fs::read_to_string(&b.witness).unwrap()).unwrap();
    let x = w["generators"][0][0][1].as_f64().unwrap();
    w["generators"][0][0][1] = (x + 50.0).into();
    let bad = b.dir.path().join("bad.json");
    std::fs::write(&bad, serde_json::to_string(&w).unwrap()).unwrap();
    let o = proper(&["--json", "verify", "--witness", path(&bad), "--max-len", "6"]);
    assert_eq!(code(&o), 6);
    let r = report(&o);
    assert_eq!(r["outcome"]["passed"], false);
    let check = r["outcome"]["failed_check"].as_str().unwrap();
    assert!(["freeness", "cone_membership", "additivity"].contains(&check), "{check}");
    assert!(String::from_utf8_lossy(&o.stderr).contains("verification failed"));
}

#[test]
fn verify_semigroup_mode_on_group_witness() {
    let o = proper(&["--json", "verify", "--witness", path(&built().witness), "--max-len", "6", "--mode", "semigroup"]);
    assert_eq!(code(&o), 0);
    let ball = &report(&o)["outcome"]["word_ball"];
    assert_eq!(ball["per_length"][5]["words"], 64);
    assert_eq!(ball["very_reduced_words"], ball["word_count"]);
}

#[test]
fn verify_is_independent_of_thread_count() {
    let w = path(&built().witness);
    let one = report(&proper(&["--json", "--threads", "1", "verify", "--witness", w, "--max-len", "5"]));
    let many = report(&proper(&["--json", "--threads", "4", "verify", "--witness", w, "--max-len", "5"]));
    assert_eq!(one["outcome"], many["outcome"]);
}

#[test]
fn verify_rejects_bad_inputs() {
    let b = built();
    assert_eq!(code(&proper(&["verify", "--witness", path(&b.dir.path().join("missing.json"))])), 2);
    let wrong_dim = proper(&["verify", "--witness", path(&b.witness), "--margin", "sl_2m_over_sp_m:m=3"]);
    assert_eq!(code(&wrong_dim), 2);
}

#[test]
fn growth_with_equal_f_is_zero() {
    let dir = TempDir::new().unwrap();
    let write = |name: &str, m: &str| {
        let p = dir.path().join(name);
        std::fs::write(&p, m).unwrap();
        p
    };
    let g = write("g.json", "[[2.0, 1.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 0.5]]");
    let f = write("f.json", "[[1.0, 1.0, 0.0], [0.0, 1.0, 1.0], [0.0, 0.0, 1.0]]");
    let o =
        proper(&["--json", "probe", "growth", "--g", path(&g), "--f", path(&f), "--fprime", path(&f), "--pmax", "8"]);
    assert_eq!(code(&o), 0);
    let growth = &report(&o)["outcome"]["growth"];
    assert!(growth["differences"].as_array().unwrap().iter().all(|d| d.as_f64() == Some(0.0)));
    assert_eq!(growth["sup_difference"].as_f64(), Some(0.0));
}

#[test]
fn growth_seeded_sl3_is_bounded() {
    let o = proper(&["--json", "probe", "growth", "--sample-n", "3", "--seed", "0", "--pmax", "20"]);
    assert_eq!(code(&o), 0);
    let growth = &report(&o)["outcome"]["growth"];
    assert!(growth["sup_difference"].as_f64().unwrap() < 5.0);
    let far = growth["b_plus_distance"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).fold(0.0, f64::max);
    assert!(far < 5.0, "{far}");
    assert!(growth["mu_norm"][19].as_f64().unwrap() > 10.0);
}

#[test]
fn growth_overflow_exits_7() {
    assert_eq!(code(&proper(&["probe", "growth", "--sample-n", "3", "--pmax", "100"])), 7);
}

#[test]
fn census_of_witness_against_its_target_stabilizes() {
    let o = proper(&[
        "--json",
        "probe",
        "census",
        "--witness",
        path(&built().witness),
        "--radius",
        &2f64.exp().to_string(),
        "--max-len",
        "6",
        "--margin",
        "sl_n_over_sl_m_x_i:n=4,m=3",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let cumulative: Vec<u64> =
        report(&o)["outcome"]["census"]["cumulative"].as_array().unwrap().iter().map(|x| x.as_u64().unwrap()).collect();
    assert_eq!(cumulative[3], *cumulative.last().unwrap(), "{cumulative:?}");
}

#[test]
fn census_rejects_small_radius() {
    let o = proper(&[
        "probe",
        "census",
        "--witness",
        path(&built().witness),
        "--radius",
        "0.5",
        "--margin",
        "sl_n_over_sl_m_x_i:n=4,m=3",
    ]);
    assert_eq!(code(&o), 2);
}

fn catalog_rows(extra: &[&str]) -> (Value, BTreeSet<(String, String)>) {
    let mut args = extra.to_vec();
    args.push("catalog");
    let o = proper(&args);
    assert_eq!(code(&o), 0);
    let r = report(&o);
    let rows = r["outcome"]["rows"]
        .as_array()
        .unwrap()
        .iter()
        .map(|row| (row["family"].to_string(), row["decision"]["outcome"].as_str().unwrap().to_string()))
        .collect();
    (r, rows)
}

#[test]
fn catalog_default_sweep() {
    let (r, rows) = catalog_rows(&[]);
    let out = &r["outcome"];
    assert_eq!(out["families"].as_array().unwrap().len(), 5);
    assert_eq!(out["summary"]["rows"].as_u64().unwrap() as usize, rows.len());
    let positive = rows.iter().filter(|(_, o)| o == "ExistsFreeZariskiDense").count();
    assert!(positive > 0 && positive < rows.len());
}

#[test]
fn catalog_rank_cap_restricts_the_sweep() {
    let (_, full) = catalog_rows(&[]);
    let (_, small) = catalog_rows(&["--rank-cap", "5"]);
    assert!(small.len() < full.len());
    assert!(small.is_subset(&full));
}

#[test]
fn catalog_json_flag_gives_the_same_report() {
    let (a, _) = catalog_rows(&[]);
    let (b, _) = catalog_rows(&["--json"]);
    assert_eq!(a["outcome"], b["outcome"]);
    assert_eq!(b["schema_version"], "1");
    assert_eq!(b["command"], "catalog");
}
