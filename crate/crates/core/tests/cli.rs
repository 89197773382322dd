use std::fs;
use std::path::Path;

use lambda_dp::cli::{self, io};
use lambda_dp::dp::{TableMeta, TransitionSource};
use lambda_dp::problems::Benchmark;

fn run(args: &[&str]) -> i32 {
    cli::run(std::iter::once("lambda-dp").chain(args.iter().copied()))
}

fn lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(String::from).collect()
}

#[test]
fn exact_pipeline_round_trip() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let common = ["--problem", "ruggedness", "--n", "12", "--lambda", "4", "--out-dir", out];
    assert_eq!(run(&[&["solve-exact"][..], &common].concat()), 0);

    let problem = Benchmark::ruggedness(12).unwrap();
    let meta = TableMeta {
        problem: "ruggedness".into(),
        n: 12,
        lambda: 4,
        source: TransitionSource::Exact,
    };
    let tables = io::read_tables(&tmp.path().join("tables.csv"), &problem, meta).unwrap();
    let copy = tmp.path().join("copy.csv");
    io::write_tables(&copy, &tables).unwrap();
    assert_eq!(fs::read(&copy).unwrap(), fs::read(tmp.path().join("tables.csv")).unwrap());
    assert_eq!(lines(&tmp.path().join("optimal.csv")).len(), 14);

    let sim = [&["simulate", "--policy", "two-rate", "--runs", "5", "--budget", "100000"][..], &common].concat();
    assert_eq!(run(&sim), 0);
    let runs = lines(&tmp.path().join("runs.csv"));
    assert_eq!(runs[0], "run_id,iterations_to_optimum");
    let ids: Vec<&str> = runs[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ids, ["0", "1", "2", "3", "4"]);

    for cmd in ["regret", "heatmap", "lowerbound"] {
        assert_eq!(run(&[&[cmd][..], &common].concat()), 0, "{cmd}");
    }
    let regret = lines(&tmp.path().join("regret.csv"));
    assert_eq!(regret[0], "run_id,iteration,fitness,rate,mapped_rate,regret,infinite");
    assert!(regret.len() > 5);
    let heat = lines(&tmp.path().join("heatmap.csv"));
    assert_eq!(heat[0], "fitness,rate,C,alpha_f,T");
    assert_eq!(heat.len(), 1 + 12 * 101);
    let lb = lines(&tmp.path().join("lowerbound.csv"));
    assert_eq!(lb[0], "problem,n,lambda,T_iterations,T_evaluations");
    assert!(lb[1].starts_with("ruggedness,12,4,"));
    let bytes = fs::read(tmp.path().join("heatmap.csv")).unwrap();
    assert!(!bytes.contains(&b'\r'));
}

#[test]
fn optimal_policy_trace_has_zero_regret() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    let common = ["--problem", "onemax", "--n", "8", "--lambda", "2", "--out-dir", out];
    assert_eq!(run(&[&["solve-exact"][..], &common].concat()), 0);
    let optimal = lines(&tmp.path().join("optimal.csv"));
    let mut trace = String::from("run_id,iteration,fitness,rate,best_offspring_fitness,success\n");
    for (i, line) in optimal[1..optimal.len() - 1].iter().enumerate() {
        let cols: Vec<&str> = line.split(',').collect();
        let f: i64 = cols[0].parse().unwrap();
        trace += &format!("0,{},{f},{},{},true\n", i + 1, cols[2], f + 1);
    }
    let trace_path = tmp.path().join("synthetic.csv");
    fs::write(&trace_path, trace).unwrap();
    let args = [&["regret", "--trace", trace_path.to_str().unwrap()][..], &common].concat();
    assert_eq!(run(&args), 0);
    let regret = lines(&tmp.path().join("regret.csv"));
    assert_eq!(regret.len(), 9);
    assert!(regret[1..].iter().all(|l| l.ends_with(",0,false")), "{regret:?}");
}

#[test]
fn infinite_times_are_parsed_back() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("tables.csv");
    fs::write(&path, "fitness,rate,T_iterations\n0,0.5,inf\n0,1,2\n1,0.5,inf\n").unwrap();
    let problem = Benchmark::onemax(2).unwrap();
    let meta = TableMeta {
        problem: "onemax".into(),
        n: 2,
        lambda: 1,
        source: TransitionSource::Exact,
    };
    let tables = io::read_tables(&path, &problem, meta).unwrap();
    assert!(tables.time(0, 0).unwrap().is_infinite());
    assert_eq!(tables.t_star(0).unwrap().value(), 2.0);
    assert!(tables.t_star(1).unwrap().is_infinite());
}

#[test]
fn schema_errors_name_the_column() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("tables.csv");
    let problem = Benchmark::onemax(2).unwrap();
    let meta = || TableMeta {
        problem: "onemax".into(),
        n: 2,
        lambda: 1,
        source: TransitionSource::Exact,
    };
    fs::write(&path, "fitness,p,T_iterations\n0,0.5,1\n").unwrap();
    let err = io::read_tables(&path, &problem, meta()).unwrap_err().to_string();
    assert!(err.contains("'rate'"), "{err}");
    fs::write(&path, "fitness,rate,T_iterations\n0,0.5,abc\n1,0.5,1\n").unwrap();
    let err = io::read_tables(&path, &problem, meta()).unwrap_err().to_string();
    assert!(err.contains("'T_iterations'") && err.contains("line 2"), "{err}");
}

#[test]
fn exit_codes() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().to_str().unwrap();
    assert_eq!(run(&["solve-exact", "--problem", "ruggedness", "--n", "7", "--out-dir", out]), 2);
    assert_eq!(run(&["solve", "--provider", "magic", "--out-dir", out]), 2);
    assert_eq!(run(&["simulate", "--policy", "two-rate", "--lambda", "3", "--n", "6", "--out-dir", out]), 2);
    assert_eq!(run(&["frobnicate"]), 2);
    let missing = tmp.path().join("nope.csv");
    assert_eq!(run(&["heatmap", "--tables", missing.to_str().unwrap(), "--out-dir", out]), 3);
    let bad = tmp.path().join("bad.toml");
    fs::write(&bad, "unknown_key = 3\n").unwrap();
    assert_eq!(run(&["solve-exact", "--config", bad.to_str().unwrap()]), 2);
}

#[test]
fn config_file_with_flag_overrides() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = tmp.path().join("run.toml");
    let out = tmp.path().join("from-file");
    fs::write(
        &cfg,
        format!(
            "seed = 5\nout_dir = \"{}\"\nproblem.name = \"onemax\"\nproblem.n = 30\nea.lambda = 8\n\
             policy.kind = \"ab\"\npolicy.p_min = \"1/n\"\npolicy.runs = 3\n",
            out.display()
        ),
    )
    .unwrap();
    assert_eq!(run(&["simulate", "--config", cfg.to_str().unwrap(), "--runs", "100"]), 0);
    let runs = lines(&out.join("runs.csv"));
    assert_eq!(runs.len(), 101);
    assert!(runs[1..].iter().all(|l| !l.ends_with("budget_exhausted")));
    let trace = lines(&out.join("trace.csv"));
    assert_eq!(trace[0], "run_id,iteration,fitness,rate,best_offspring_fitness,success");
}

#[test]
fn smoke_monte_carlo_solve() {
    let tmp = tempfile::tempdir().unwrap();
    let args = [
        "solve", "--problem", "onemax", "--n", "10", "--lambda", "2", "--iterations", "5000",
        "--successes", "1000", "--out-dir", tmp.path().to_str().unwrap(),
    ];
    assert_eq!(run(&args), 0);
    let optimal = lines(&tmp.path().join("optimal.csv"));
    assert_eq!(optimal[0], "fitness,T_star_iterations,p_opt,T_star_evaluations");
    assert_eq!(optimal.last().unwrap(), "10,0,,0");
}
