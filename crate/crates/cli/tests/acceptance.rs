//! Acceptance criteria 1–10. Prints one PASS/FAIL line per criterion and exits nonzero if any fails.

use sflow_cli::config::{Engine, ExperimentConfig, Parameters, TripleSpec};
use sflow_cli::suites::{run_property_suite, Suite, SuiteReport};
use sflow_cli::run_flow_compare;
use sflow_core::constants::{big_c, MultiIndex};
use sflow_core::flow::{crossing_flow, factor_two_integral, path_independence_check, rho_symmetry_check, FlowPath};
use sflow_core::ncexpand::coefficient_table;
use sflow_core::numkernel::{c, C64};
use sflow_core::triples::{c_beta_re, circle_triple, double_up, weighted_sum_triple, Truncation};
use sflow_core::zeta::{full_line_zeta, res_extract, ResidueEngine, DEFAULT_TERMS};
use std::process::Command;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn require(ok: bool, msg: String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg)
    }
}

fn e2s<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn suite_checks(report: &SuiteReport, names: &[&str]) -> Result<Vec<String>, String> {
    names
        .iter()
        .map(|n| {
            let ch = report.check(n).ok_or_else(|| format!("missing check {n:?}"))?;
            require(ch.passed, format!("{n}: {:e} > {:e}", ch.value, ch.tolerance))?;
            Ok(format!("{n} {:.1e}", ch.value))
        })
        .collect()
}

fn circle_config(cutoff: usize, engines: Vec<Engine>, w: Vec<i32>) -> ExperimentConfig {
    ExperimentConfig {
        triple: TripleSpec::Circle { cutoff, truncation: None },
        engines,
        parameters: Parameters { w, ..Parameters::default() },
        seed: 0,
        output: Default::default(),
    }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let cfg = circle_config(256, vec![Engine::Crossing, Engine::Index, Engine::Cp, Engine::Doubled], (-3..=3).collect());
    let cmp = run_flow_compare(&cfg).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for r in &cmp.rows {
        let w = r.w as f64;
        match r.engine {
            Engine::Crossing | Engine::Index => require(r.value == w, format!("{} at w={}: {}", r.engine.name(), r.w, r.value))?,
            Engine::Cp => require((r.value + w).abs() <= 1e-2, format!("cp at w={}: {}", r.w, r.value))?,
            Engine::Doubled => require((r.value - w).abs() <= 1e-2, format!("doubled at w={}: {}", r.w, r.value))?,
            _ => unreachable!(),
        }
        if matches!(r.engine, Engine::Cp | Engine::Doubled) {
            worst = worst.max((r.value * r.engine.orientation() - w).abs());
        }
    }
    let secs = start.elapsed().as_secs_f64();
    require(secs <= 60.0, format!("took {secs:.1} s"))?;
    Ok(format!("28 cells, integer engines exact, worst integral deviation {worst:.2e}, {secs:.1} s"))
}

fn criterion_2() -> Outcome {
    let a = circle_triple(128, Truncation::Plain).map_err(e2s)?;
    let t = weighted_sum_triple(&a, &a, 1.0, 0.5).map_err(e2s)?;
    let path = FlowPath::conjugation(&t, "u", 4).map_err(e2s)?;
    let cross = crossing_flow(&path, &t.weights, 8).map_err(e2s)?.value;
    require(cross == 1.5, format!("crossing {cross}"))?;
    let res = ResidueEngine::new(&t).sf_residue_cocycle(&t, "u").map_err(e2s)?;
    require((res - 1.5).abs() <= 1e-4, format!("residue cocycle {res}"))?;
    Ok(format!("crossing {cross}, residue cocycle {res:.12}"))
}

fn criterion_3() -> Outcome {
    let start = Instant::now();
    let f = |s: C64| full_line_zeta(s, DEFAULT_TERMS);
    let res = res_extract(&f, c(0.5, 0.0), 0).map_err(e2s)?.residues[&0];
    require((res - c(1.0, 0.0)).norm() <= 1e-6, format!("residue of the full-line zeta {res}"))?;
    let base = circle_triple(256, Truncation::Plain).map_err(e2s)?;
    let mut worst_gap: f64 = 0.0;
    for w in -2..=2 {
        let t = base.clone().with_power("u", w, "v").map_err(e2s)?;
        let e = ResidueEngine::new(&t);
        let a = e.sf_residue_cocycle(&t, "v").map_err(e2s)?;
        let b = e.sf_zeta_sum_residue(&t, "v").map_err(e2s)?;
        require((a - w as f64).abs() <= 1e-4, format!("residue cocycle at w={w}: {a}"))?;
        require((b - w as f64).abs() <= 1e-4, format!("zeta-sum residue at w={w}: {b}"))?;
        require((a - b).abs() <= 1e-8, format!("engines differ at w={w}: {a} vs {b}"))?;
        worst_gap = worst_gap.max((a - b).abs());
    }
    let secs = start.elapsed().as_secs_f64();
    require(secs <= 30.0, format!("took {secs:.1} s"))?;
    Ok(format!("res = {:.10}, max |cocycle − zetaSum| {worst_gap:.1e}, {secs:.1} s", res.re))
}

fn criterion_4() -> Outcome {
    let base = circle_triple(256, Truncation::Plain).map_err(e2s)?;
    let mut worst: f64 = 0.0;
    for w in -2..=2 {
        let t = base.clone().with_power("u", w, "v").map_err(e2s)?;
        let e = ResidueEngine::new(&t);
        let l = e.low_dim_flow(&t, "v").map_err(e2s)?;
        require((l - w as f64).abs() <= 1e-4, format!("lowDimFlow at w={w}: {l}"))?;
        let (x, y) = e.residue_rescaling(&t, "v").map_err(e2s)?;
        require((x - y).abs() <= 1e-6, format!("rescaling at w={w}: {x} vs {y}"))?;
        worst = worst.max((l - w as f64).abs()).max((x - y).abs());
    }
    Ok(format!("w = -2..2, worst deviation {worst:.1e}"))
}

fn criterion_5() -> Outcome {
    let r = run_property_suite(Suite::Resolvent, 5).map_err(e2s)?;
    Ok(suite_checks(&r, &["cocycle defect, 10 random 4x4 triples (relative)", "B phi_1 vanishes"])?.join(", "))
}

fn criterion_6() -> Outcome {
    // Depth 12 covers |k| ≤ 4 read either as total order or entrywise.
    let mut compared = 0;
    for m in 1..=3 {
        let rows = coefficient_table(m, 12).map_err(e2s)?;
        for row in &rows {
            let want = big_c(&MultiIndex(row.k.clone())).map_err(e2s)?.to_string();
            require(row.coefficient == want, format!("k = {:?}: {} vs {want}", row.k, row.coefficient))?;
        }
        compared += rows.len();
    }
    require(compared >= 441, format!("only {compared} comparisons"))?;
    let r = run_property_suite(Suite::Ncexpand, 6).map_err(e2s)?;
    let more = suite_checks(&r, &["power-rule binomials, n, j <= 4", "normal + remainder = product, 20 instances"])?;
    Ok(format!("{compared} exact coefficients, {}", more.join(", ")))
}

fn criterion_7() -> Outcome {
    let r = run_property_suite(Suite::Cyclic, 7).map_err(e2s)?;
    suite_checks(&r, &["b^2 = 0", "B^2 = 0", "bB + Bb = 0", "witness (b+B)z = Ch(u*) + Ch(u)"])?;
    Ok("50 random chains exact, witness termwise through degree 5".into())
}

fn criterion_8() -> Outcome {
    let r = run_property_suite(Suite::Resolvent, 8).map_err(e2s)?;
    let names = ["Cauchy oracle vs quadrature (1e-8)", "Laplace oracle vs quadrature (1e-8)", "cBeta vs quadrature", "Gamma(1/2) = sqrt(pi)"];
    Ok(suite_checks(&r, &names)?.join(", "))
}

fn criterion_9() -> Outcome {
    let small = double_up(&circle_triple(8, Truncation::Circulant).map_err(e2s)?, "u").map_err(e2s)?;
    let mut rho: f64 = 0.0;
    for s in [0.0, 0.5, 1.0, 2.5] {
        rho = rho.max(rho_symmetry_check(&small, s, 3.0).map_err(e2s)?);
    }
    require(rho <= 1e-10, format!("rho symmetry {rho:e}"))?;
    let (x0, x1, va, vb) = sflow_cli::suites::path_points(&small).map_err(e2s)?;
    let path = path_independence_check(&small, &x0, &x1, &va, &vb, 3.0).map_err(e2s)?;
    require(path <= 1e-6, format!("path independence {path:e}"))?;

    let t = circle_triple(256, Truncation::Plain).map_err(e2s)?;
    let cross = crossing_flow(&FlowPath::conjugation(&t, "u", 4).map_err(e2s)?, &t.weights, 8).map_err(e2s)?.value;
    let integral = factor_two_integral(&double_up(&t, "u").map_err(e2s)?, 3.0).map_err(e2s)?.value.re;
    let target = 2.0 * c_beta_re(1.5).map_err(e2s)? * cross;
    require((integral - target).abs() <= 2e-2, format!("factor-2: {integral} vs {target}"))?;

    let r = run_property_suite(Suite::Identities, 9).map_err(e2s)?;
    suite_checks(&r, &["even-term supertrace vanishes", "tail bound dominates on 20-point grid"])?;
    Ok(format!("rho {rho:.1e}, path {path:.1e}, factor-2 {integral:.6} vs {target}, even terms and tail bound ok"))
}

fn criterion_10() -> Outcome {
    let dir = tempfile::tempdir().map_err(e2s)?;
    let cfg = circle_config(48, vec![Engine::Crossing, Engine::Index, Engine::Cp, Engine::Doubled, Engine::Residue, Engine::ZetaSum, Engine::Lowdim], (-2..=2).collect());
    let cfg_path = dir.path().join("config.json");
    std::fs::write(&cfg_path, serde_json::to_string(&cfg).map_err(e2s)?).map_err(e2s)?;
    let run = |args: &[&str], threads: &str, out: &str| -> Result<Vec<u8>, String> {
        let out = dir.path().join(out);
        let status = Command::new(env!("CARGO_BIN_EXE_sflow"))
            .args(args)
            .arg("--out")
            .arg(&out)
            .arg("--seed")
            .arg("42")
            .env("SFLOW_THREADS", threads)
            .status()
            .map_err(e2s)?;
        require(status.code() == Some(0), format!("{args:?} with {threads} threads exited with {status}"))?;
        std::fs::read(&out).map_err(e2s)
    };
    let cfg_arg = cfg_path.to_str().ok_or("non-UTF-8 temp path")?;
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "2", "8", "1"].iter().enumerate() {
        let csv = run(&["compare", "--config", cfg_arg, "--format", "csv"], threads, &format!("c{i}.csv"))?;
        let json = run(&["compare", "--config", cfg_arg, "--format", "json"], threads, &format!("c{i}.json"))?;
        let suite = run(&["suite", "cyclic"], threads, &format!("s{i}.json"))?;
        outputs.push((csv, json, suite));
    }
    require(outputs.windows(2).all(|p| p[0] == p[1]), "outputs differ between runs".into())?;
    Ok(format!("csv ({} bytes), json and suite report identical over threads 1, 2, 8, 1", outputs[0].0.len()))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("winding-number flow, four engines", criterion_1),
        ("weighted flow 1.5", criterion_2),
        ("residue pipeline", criterion_3),
        ("low-dimensional formula and residue rescaling", criterion_4),
        ("resolvent cocycle property", criterion_5),
        ("expansion coefficients", criterion_6),
        ("cyclic machinery", criterion_7),
        ("scalar reductions", criterion_8),
        ("doubling lemmas and tail bound", criterion_9),
        ("determinism across thread counts", criterion_10),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        match f() {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {why}", i + 1);
            }
        }
    }
    println!("acceptance: {} of 10 criteria passed", 10 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
