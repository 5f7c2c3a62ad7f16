//! `sf`: solve, generate and benchmark Steiner Forest instances.
//!
//! Exit codes: 0 solved, 1 internal failure or failed verification, 2 infeasible,
//! 3 resource cap, 4 input error.

use std::collections::HashSet;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use sforest::baselines::{brute_force_opt, two_approx_primal_dual};
use sforest::epas::{prepare_epas, solve_prepared, write_zeta, DEFAULT_ENUM_CAP};
use sforest::fes::{build_skeleton, solve_fes_with_stats, write_skeleton};
use sforest::generators::{
    parse_dimacs, sat_to_steiner_forest, tsat3_transform, write_layout, gen_random_bounded, Profile, TargetParam,
};
use sforest::partition::write_family;
use sforest::reduce::apply_rule3;
use sforest::td::{parse_pace_td, parse_td, TreeDecomposition};
use sforest::vc::{solve_vc, CoverCertificate};
use sforest::{evaluate_solution, parse_instance, write_instance, Forest, Instance, Ratio, SfError};

const SCHEMA: u32 = 1;

#[derive(Parser)]
#[command(name = "sf", version, about = "Steiner Forest solvers and instance tools")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve one instance.
    Solve(SolveArgs),
    /// Generate instances.
    #[command(subcommand)]
    Gen(GenCmd),
    /// Run algorithms over a directory of instances and append reports.
    Bench(BenchArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Algo {
    Fes,
    Vc,
    Epas,
    TwoApprox,
    Brute,
}

impl Algo {
    fn id(self) -> &'static str {
        match self {
            Algo::Fes => "fes",
            Algo::Vc => "vc",
            Algo::Epas => "epas",
            Algo::TwoApprox => "two-approx",
            Algo::Brute => "brute",
        }
    }
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long, value_enum)]
    algo: Algo,
    #[arg(long)]
    input: PathBuf,
    /// Approximation parameter as `num/den`.
    #[arg(long)]
    eps: Option<String>,
    /// Vertex cover, 1-based ids separated by commas.
    #[arg(long)]
    cover: Option<String>,
    /// Tree decomposition file (TD or PACE layout).
    #[arg(long)]
    td: Option<PathBuf>,
    #[arg(long)]
    json: bool,
    /// Enumeration steps allowed per bag.
    #[arg(long, env = "SF_MAX_SEQ")]
    max_seq: Option<u64>,
    #[arg(long)]
    dump_zeta: Option<PathBuf>,
    #[arg(long)]
    dump_family: Option<PathBuf>,
    #[arg(long)]
    emit_skeleton: Option<PathBuf>,
}

#[derive(Subcommand)]
enum GenCmd {
    /// Connected random instance.
    Random(RandomArgs),
    /// Reduction instance of a 3-CNF formula, with a layout sidecar.
    Sat(SatArgs),
}

#[derive(Args)]
struct RandomArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long, default_value_t = 2)]
    demands: usize,
    #[arg(long, default_value_t = 10)]
    wmax: u64,
    /// Keep the feedback edge set at most this size.
    #[arg(long, conflicts_with = "vc")]
    fes: Option<usize>,
    /// Keep a vertex cover of at most this size.
    #[arg(long)]
    vc: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SatArgs {
    #[arg(long)]
    cnf: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to the output path with `.layout` appended.
    #[arg(long)]
    layout: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long)]
    corpus: PathBuf,
    /// Comma-separated list, e.g. `fes,vc,epas:1/2,two-approx,brute`.
    #[arg(long)]
    algos: String,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, env = "SF_MAX_SEQ")]
    max_seq: Option<u64>,
}

struct Failure {
    code: u8,
    status: &'static str,
    msg: String,
}

impl Failure {
    fn input(msg: impl Into<String>) -> Self {
        Failure { code: 4, status: "input_error", msg: msg.into() }
    }

    fn from_sf(stage: &str, e: SfError) -> Self {
        let (code, status) = match e {
            SfError::Parse { .. } | SfError::Invalid(_) | SfError::Precondition(_) => (4, "input_error"),
            SfError::Infeasible(_) => (2, "infeasible"),
            SfError::ResourceCap(_) => (3, "resource_cap"),
            SfError::Internal(_) => (1, "internal_error"),
        };
        Failure { code, status, msg: format!("{stage}: {e}") }
    }
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
struct Checks {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    oracle_match: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    bound_ok: Option<bool>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct RunReport {
    schema: u32,
    toolkit_version: String,
    instance: String,
    digest: String,
    algo: String,
    params: String,
    status: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    message: Option<String>,
    cost: Option<u64>,
    /// `[u, v, w]` with 1-based vertex ids.
    edges: Vec<[u64; 3]>,
    feasible: bool,
    wall_ms: f64,
    #[serde(default)]
    checks: Checks,
    #[serde(flatten)]
    extra: serde_json::Map<String, Value>,
}

fn digest(text: &str) -> String {
    let d = Sha256::digest(text.as_bytes());
    let hex: String = d.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

fn parse_eps(s: &str) -> Result<Ratio<u64>, Failure> {
    let (a, b) = s.split_once('/').unwrap_or((s, "1"));
    let num: u64 = a.trim().parse().map_err(|_| Failure::input(format!("bad eps '{s}'")))?;
    let den: u64 = b.trim().parse().map_err(|_| Failure::input(format!("bad eps '{s}'")))?;
    if num == 0 || den == 0 {
        return Err(Failure::input(format!("eps must be a positive fraction, got '{s}'")));
    }
    Ok(Ratio::new(num, den))
}

fn parse_cover(s: &str) -> Result<Vec<usize>, Failure> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| match t.trim().parse::<usize>() {
            Ok(v) if v >= 1 => Ok(v - 1),
            _ => Err(Failure::input(format!("bad cover id '{t}'"))),
        })
        .collect()
}

fn read(path: &Path) -> Result<String, Failure> {
    std::fs::read_to_string(path).map_err(|e| Failure::input(format!("read {}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    std::fs::write(path, text).map_err(|e| Failure { code: 1, status: "internal_error", msg: format!("write {}: {e}", path.display()) })
}

fn load_td(path: &Path) -> Result<TreeDecomposition, Failure> {
    let text = read(path)?;
    let pace = text.lines().any(|l| l.trim_start().starts_with("s td"));
    let td = if pace { parse_pace_td(&text) } else { parse_td(&text) };
    td.map_err(|e| Failure::from_sf("parse decomposition", e))
}

#[derive(Default)]
struct SolveOpts {
    eps: Option<Ratio<u64>>,
    cover: Option<Vec<usize>>,
    td: Option<TreeDecomposition>,
    cap: Option<u64>,
    dump_zeta: Option<PathBuf>,
    dump_family: Option<PathBuf>,
    emit_skeleton: Option<PathBuf>,
}

fn run_algo(inst: &Instance, algo: Algo, o: &SolveOpts) -> Result<Forest, Failure> {
    let stage = format!("solve ({})", algo.id());
    let sf = |e| Failure::from_sf(&stage, e);
    match algo {
        Algo::Fes => {
            if let Some(p) = &o.emit_skeleton {
                let red = apply_rule3(inst);
                let sk = build_skeleton(&red.instance).map_err(|e| Failure::from_sf("build skeleton", e))?;
                write(p, &write_skeleton(&sk))?;
            }
            solve_fes_with_stats(inst).map(|r| r.0).map_err(sf)
        }
        Algo::Vc => {
            let cert = match &o.cover {
                Some(c) => Some(CoverCertificate::new(inst, c.iter().copied()).map_err(|e| Failure::from_sf("check cover", e))?),
                None => None,
            };
            solve_vc(inst, cert.as_ref()).map_err(sf)
        }
        Algo::Epas => {
            let eps = o.eps.ok_or_else(|| Failure::input("eps required"))?;
            let prep = prepare_epas(inst, o.td.as_ref(), eps, o.cap.unwrap_or(DEFAULT_ENUM_CAP)).map_err(sf)?;
            if let Some(p) = &o.dump_zeta {
                write(p, &write_zeta(&prep.zetas))?;
            }
            if let Some(p) = &o.dump_family {
                write(p, &write_family(&prep.family))?;
            }
            solve_prepared(inst, &prep).map(|r| r.0).map_err(sf)
        }
        Algo::TwoApprox => two_approx_primal_dual(inst).map_err(sf),
        Algo::Brute => brute_force_opt(inst).map(|r| r.1).map_err(sf),
    }
}

/// Report for one solver run; feasibility is recomputed here.
fn make_report(name: &str, inst: &Instance, algo: Algo, params: &str, out: &Result<Forest, Failure>, ms: f64) -> RunReport {
    let mut r = RunReport {
        schema: SCHEMA,
        toolkit_version: env!("CARGO_PKG_VERSION").to_string(),
        instance: name.to_string(),
        digest: digest(&write_instance(inst)),
        algo: algo.id().to_string(),
        params: params.to_string(),
        status: "solved".into(),
        message: None,
        cost: None,
        edges: Vec::new(),
        feasible: false,
        wall_ms: ms,
        checks: Checks::default(),
        extra: Default::default(),
    };
    match out {
        Ok(f) => match evaluate_solution(inst, f) {
            Ok(ev) => {
                r.cost = Some(ev.cost);
                r.feasible = ev.feasible;
                r.edges = f.edges.iter().map(|&e| inst.edge(e)).map(|e| [e.u as u64 + 1, e.v as u64 + 1, e.w]).collect();
                if !ev.feasible {
                    r.status = "internal_error".into();
                    r.message = Some(format!("returned forest misses {} demands", ev.violations.len()));
                }
            }
            Err(e) => {
                r.status = "internal_error".into();
                r.message = Some(format!("evaluate: {e}"));
            }
        },
        Err(f) => {
            r.status = f.status.into();
            r.message = Some(f.msg.clone());
        }
    }
    r
}

fn params_of(algo: Algo, o: &SolveOpts) -> String {
    let mut p = Vec::new();
    if let Some(e) = o.eps {
        p.push(format!("eps={e}"));
    }
    if let (Algo::Vc, Some(c)) = (algo, &o.cover) {
        p.push(format!("cover={}", c.iter().map(|v| (v + 1).to_string()).collect::<Vec<_>>().join(",")));
    }
    p.join(";")
}

fn cmd_solve(a: SolveArgs) -> Result<u8, Failure> {
    let mut o = SolveOpts {
        eps: a.eps.as_deref().map(parse_eps).transpose()?,
        cover: a.cover.as_deref().map(parse_cover).transpose()?,
        td: a.td.as_deref().map(load_td).transpose()?,
        cap: a.max_seq,
        dump_zeta: a.dump_zeta,
        dump_family: a.dump_family,
        emit_skeleton: a.emit_skeleton,
    };
    if a.algo == Algo::Epas && o.eps.is_none() {
        return Err(Failure::input("eps required"));
    }
    if a.algo != Algo::Epas {
        o.eps = None;
    }
    let inst = parse_instance(&read(&a.input)?).map_err(|e| Failure::from_sf("parse input", e))?;
    let t0 = Instant::now();
    let out = run_algo(&inst, a.algo, &o);
    let ms = t0.elapsed().as_secs_f64() * 1000.0;
    let name = a.input.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let report = make_report(&name, &inst, a.algo, &params_of(a.algo, &o), &out, ms);
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    } else {
        match &report.cost {
            Some(c) => {
                println!("algo {}\ncost {c}\nfeasible {}\nedges {}", report.algo, report.feasible, report.edges.len());
                for [u, v, w] in &report.edges {
                    println!("EDGE {u} {v} {w}");
                }
            }
            None => println!("algo {}\nstatus {}", report.algo, report.status),
        }
    }
    match out {
        Ok(_) if report.feasible => Ok(0),
        Ok(_) => Err(Failure { code: 1, status: "internal_error", msg: report.message.unwrap_or_default() }),
        Err(f) => Err(f),
    }
}

fn cmd_gen(g: GenCmd) -> Result<u8, Failure> {
    match g {
        GenCmd::Random(a) => {
            let (target, k) = match (a.fes, a.vc) {
                (Some(k), _) => (TargetParam::Fes(k), k),
                (_, Some(k)) => (TargetParam::Vc(k), k),
                _ => (TargetParam::None, a.n / 2),
            };
            let full = a.n * a.n.saturating_sub(1) / 2;
            let m = a.m.unwrap_or((a.n.saturating_sub(1) + k).min(full));
            let p = Profile { n: a.n, m, demands: a.demands, weight_max: a.wmax, target };
            let inst = gen_random_bounded(a.seed, &p).map_err(|e| Failure::from_sf("generate", e))?;
            let text = write_instance(&inst);
            match a.out {
                Some(path) => write(&path, &text)?,
                None => print!("{text}"),
            }
        }
        GenCmd::Sat(a) => {
            let mut cnf = parse_dimacs(&read(&a.cnf)?).map_err(|e| Failure::from_sf("parse cnf", e))?;
            if cnf.partition.is_none() {
                cnf = tsat3_transform(&cnf);
            }
            let (inst, layout) = sat_to_steiner_forest(&cnf).map_err(|e| Failure::from_sf("build gadget", e))?;
            write(&a.out, &write_instance(&inst))?;
            let lp = a.layout.unwrap_or_else(|| {
                let mut s = a.out.clone().into_os_string();
                s.push(".layout");
                PathBuf::from(s)
            });
            write(&lp, &write_layout(&layout))?;
            println!("vertices {} edges {} budget {}", inst.n(), inst.m(), layout.budget);
        }
    }
    Ok(0)
}

fn parse_algos(s: &str) -> Result<Vec<(Algo, Option<Ratio<u64>>)>, Failure> {
    let mut out = Vec::new();
    for tok in s.split(',').map(str::trim).filter(|t| !t.is_empty()) {
        let (name, eps) = match tok.split_once(':') {
            Some((n, e)) => (n, Some(parse_eps(e)?)),
            None => (tok, None),
        };
        let algo = Algo::from_str(name, true).map_err(|_| Failure::input(format!("unknown algorithm '{name}'")))?;
        if algo == Algo::Epas && eps.is_none() {
            return Err(Failure::input("eps required for epas (use epas:num/den)"));
        }
        if algo != Algo::Epas && eps.is_some() {
            return Err(Failure::input(format!("'{name}' takes no eps")));
        }
        out.push((algo, eps));
    }
    if out.is_empty() {
        return Err(Failure::input("no algorithms given"));
    }
    Ok(out)
}

fn load_reports(path: &Path) -> Result<Vec<Value>, Failure> {
    if !path.exists() {
        return Ok(Vec::new());
    }
    let text = read(path)?;
    if text.trim().is_empty() {
        return Ok(Vec::new());
    }
    serde_json::from_str(&text).map_err(|e| Failure::input(format!("results file {}: {e}", path.display())))
}

fn save_reports(path: &Path, all: &[Value]) -> Result<(), Failure> {
    let io = |e: std::io::Error| Failure { code: 1, status: "internal_error", msg: format!("write {}: {e}", path.display()) };
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    let text = serde_json::to_string_pretty(all).expect("reports serialize");
    tmp.write_all(text.as_bytes()).map_err(io)?;
    tmp.write_all(b"\n").map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn key_of(v: &Value) -> Option<(String, String, String)> {
    let s = |k: &str| v.get(k).and_then(Value::as_str).map(str::to_string);
    Some((s("digest")?, s("algo")?, s("params")?))
}

/// `None` when the oracle could not decide.
fn oracle_verdict(r: &Result<Forest, Failure>, inst: &Instance) -> Option<Option<u64>> {
    match r {
        Ok(f) => Some(Some(f.cost(inst))),
        Err(f) if f.status == "infeasible" => Some(None),
        Err(_) => None,
    }
}

fn cmd_bench(a: BenchArgs) -> Result<u8, Failure> {
    let algos = parse_algos(&a.algos)?;
    let mut files: Vec<PathBuf> = std::fs::read_dir(&a.corpus)
        .map_err(|e| Failure::input(format!("corpus {}: {e}", a.corpus.display())))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "sfp"))
        .collect();
    files.sort();
    let mut all = load_reports(&a.out)?;
    let mut done: HashSet<(String, String, String)> = all.iter().filter_map(key_of).collect();
    let mut failed = false;
    let mut rows: Vec<[String; 5]> = Vec::new();
    for path in &files {
        let name = path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        let inst = match read(path).and_then(|t| parse_instance(&t).map_err(|e| Failure::from_sf("parse input", e))) {
            Ok(i) => i,
            Err(f) => {
                eprintln!("{name}: {}", f.msg);
                rows.push([name, "-".into(), f.status.into(), "-".into(), "-".into()]);
                continue;
            }
        };
        let dig = digest(&write_instance(&inst));
        let wants_brute = algos.iter().any(|(x, _)| *x == Algo::Brute);
        let t0 = Instant::now();
        let brute = wants_brute.then(|| run_algo(&inst, Algo::Brute, &SolveOpts::default()));
        let brute_ms = t0.elapsed().as_secs_f64() * 1000.0;
        let oracle = brute.as_ref().and_then(|b| oracle_verdict(b, &inst));
        for &(algo, eps) in &algos {
            let o = SolveOpts { eps, cap: a.max_seq, ..Default::default() };
            let params = params_of(algo, &o);
            let key = (dig.clone(), algo.id().to_string(), params.clone());
            if done.contains(&key) {
                rows.push([name.clone(), algo.id().into(), "cached".into(), "-".into(), "-".into()]);
                continue;
            }
            let (out, ms) = if algo == Algo::Brute {
                (brute.as_ref().map_or_else(|| run_algo(&inst, algo, &o), clone_outcome), brute_ms)
            } else {
                let t = Instant::now();
                let out = run_algo(&inst, algo, &o);
                (out, t.elapsed().as_secs_f64() * 1000.0)
            };
            let mut rep = make_report(&name, &inst, algo, &params, &out, ms);
            let mine = oracle_verdict(&out, &inst);
            if let (Some(orc), Some(mine)) = (oracle, mine) {
                match algo {
                    Algo::Fes | Algo::Vc | Algo::Brute => rep.checks.oracle_match = Some(orc == mine),
                    Algo::Epas => {
                        let e = eps.expect("epas has eps");
                        rep.checks.bound_ok = Some(match (mine, orc) {
                            (Some(c), Some(opt)) => {
                                c as u128 * *e.denom() as u128 <= opt as u128 * (*e.numer() + *e.denom()) as u128
                            }
                            (None, None) => true,
                            _ => false,
                        });
                    }
                    Algo::TwoApprox => {
                        rep.checks.bound_ok = Some(match (mine, orc) {
                            (Some(c), Some(opt)) => c <= 2 * opt,
                            (None, None) => true,
                            _ => false,
                        });
                    }
                }
            }
            let bad = rep.checks.oracle_match == Some(false)
                || rep.checks.bound_ok == Some(false)
                || rep.status == "internal_error";
            failed |= bad;
            let check = if bad { "FAIL" } else if rep.checks.oracle_match.is_some() || rep.checks.bound_ok.is_some() { "ok" } else { "-" };
            rows.push([
                name.clone(),
                algo.id().into(),
                rep.status.clone(),
                rep.cost.map_or("-".into(), |c| c.to_string()),
                check.into(),
            ]);
            all.push(serde_json::to_value(&rep).expect("report serializes"));
            done.insert(key);
            save_reports(&a.out, &all)?;
        }
    }
    let widths: Vec<usize> = (0..5).map(|i| rows.iter().map(|r| r[i].len()).chain([10]).max().unwrap_or(10)).collect();
    let head = ["instance", "algo", "status", "cost", "check"];
    let line = |cells: [&str; 5]| cells.iter().zip(&widths).map(|(c, w)| format!("{c:<w$}")).collect::<Vec<_>>().join("  ");
    println!("{}", line(head));
    for r in &rows {
        println!("{}", line([&r[0], &r[1], &r[2], &r[3], &r[4]]));
    }
    Ok(u8::from(failed))
}

fn clone_outcome(r: &Result<Forest, Failure>) -> Result<Forest, Failure> {
    match r {
        Ok(f) => Ok(f.clone()),
        Err(f) => Err(Failure { code: f.code, status: f.status, msg: f.msg.clone() }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(4),
            };
        }
    };
    let res = match cli.cmd {
        Cmd::Solve(a) => cmd_solve(a),
        Cmd::Gen(g) => cmd_gen(g),
        Cmd::Bench(b) => cmd_bench(b),
    };
    match res {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.msg);
            ExitCode::from(f.code)
        }
    }
}
