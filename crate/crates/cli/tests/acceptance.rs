//! Acceptance gate: criteria 1 through 11, one line each.
//!
//! Thresholds are re-checked here from the measured values with oracles that
//! do not share code with the library.

use carnot_cli::suite::{CriterionResult, Suite};
use carnot_cli::DEFAULT_SEED;
use serde_json::Value;
use std::io::Write;
use std::process::Command;
use std::time::{Duration, Instant};

/// Lyndon words of length `k` on `m` letters, by brute-force enumeration.
fn lyndon_count(m: usize, k: usize) -> usize {
    let total = m.pow(k as u32);
    (0..total)
        .filter(|&code| {
            let w: Vec<usize> = (0..k).map(|j| code / m.pow(j as u32) % m).collect();
            (1..k).all(|s| {
                let rot: Vec<usize> = w[s..].iter().chain(&w[..s]).copied().collect();
                w < rot
            })
        })
        .count()
}

fn slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}

fn f64s(v: &Value) -> Vec<f64> {
    v.as_array().expect("array").iter().map(|x| x.as_f64().expect("number")).collect()
}

fn u(v: &Value) -> usize {
    v.as_u64().expect("integer") as usize
}

/// Independent verdict on a criterion's measured values.
fn recheck(c: &CriterionResult) -> Result<String, String> {
    let m = &c.measured;
    let fail = |s: String| Err(s);
    match c.id {
        1 => {
            let rows = m.as_array().expect("rows");
            let want = [(2, 2), (2, 3), (2, 4), (3, 2), (3, 3)];
            for (row, &(gm, gr)) in rows.iter().zip(&want) {
                let dims: Vec<usize> = row["layer_dims"].as_array().expect("dims").iter().map(u).collect();
                let oracle: Vec<usize> = (1..=gr).map(|k| lyndon_count(gm, k)).collect();
                if (u(&row["m"]), u(&row["r"])) != (gm, gr) || dims != oracle || u(&row["violations"]) != 0 || row["stratified"] != true {
                    return fail(format!("free({gm},{gr}): dims {dims:?} vs {oracle:?}"));
                }
            }
            (rows.len() == 5).then(|| "5 groups, dims match Lyndon counts".to_string()).ok_or("missing groups".into())
        }
        2 => {
            let rows = m.as_array().expect("rows");
            let bad: usize = rows
                .iter()
                .map(|r| u(&r["associativity_failures"]) + u(&r["dilation_failures"]) + u(&r["gauge_failures"]))
                .sum();
            let all = rows.len() == 5 && rows.iter().all(|r| u(&r["triples"]) == 1000);
            if bad == 0 && all {
                Ok("5000 triples, 0 mismatches".into())
            } else {
                fail(format!("{bad} mismatches"))
            }
        }
        3 => {
            let r = m["volume_r2"]["estimate"].as_f64().unwrap() / m["volume_r1"]["estimate"].as_f64().unwrap();
            let ok = u(&m["samples"]) == 1_000_000 && (r / 16.0 - 1.0).abs() <= 0.03;
            if ok {
                Ok(format!("ratio {r:.4}"))
            } else {
                fail(format!("ratio {r:.4}"))
            }
        }
        4 => {
            let rows = m["commutators"].as_array().expect("rows");
            let ok = rows.len() == 7 && rows.iter().all(|r| r["pass"] == true) && m["residual_zero"] == true;
            if ok {
                Ok("7 groups exact, residual zero".into())
            } else {
                fail(format!("{m}"))
            }
        }
        5 => {
            let per_rule: usize = m["rules"].as_object().expect("rules").values().map(|v| u(&v["failures"])).sum();
            if u(&m["cases"]) == 200 && per_rule == 0 {
                Ok(format!("200 cases over {} rules, 0 failures", m["rules"].as_object().unwrap().len()))
            } else {
                fail(format!("{per_rule} failures"))
            }
        }
        6 => {
            let ok = m["steps"] == serde_json::json!([2, 3, 4])
                && u(&m["max_total"]) == 6
                && u(&m["halted"]) == u(&m["profiles"])
                && u(&m["classification_failures"]) == 0
                && u(&m["measure_violations"]) == 0;
            if ok {
                Ok(format!("{} profiles halted, max trace length {}", u(&m["profiles"]), u(&m["max_depth"])))
            } else {
                fail(format!("{m}"))
            }
        }
        7 => {
            let cases = m["cases"].as_array().expect("cases");
            let circular: Vec<usize> = cases.iter().filter(|c| c["circular"] == true).map(|c| u(&c["z_layer"])).collect();
            let layers: Vec<usize> = cases.iter().map(|c| u(&c["z_layer"])).collect();
            let has_all = [2, 3, 4].iter().all(|z| layers.contains(z));
            let dedup = {
                let mut v = circular.clone();
                v.dedup();
                v
            };
            if dedup == vec![2] && has_all {
                Ok("circular only for Z = X2".into())
            } else {
                fail(format!("circular layers {circular:?}"))
            }
        }
        8 => {
            let grids = m["grids"].as_array().expect("grids");
            let ns: Vec<f64> = grids.iter().map(|g| g["n"].as_f64().unwrap()).collect();
            let errs: Vec<f64> = grids.iter().map(|g| g["l2_error"].as_f64().unwrap_or(f64::NAN)).collect();
            // h = 2/n on the unit box; the order is -d log e / d log n.
            let order = -slope(&ns, &errs);
            if ns == [16.0, 32.0, 64.0] && order >= 1.8 {
                Ok(format!("order {order:.3}"))
            } else {
                fail(format!("order {order:.3}, errors {errs:?}"))
            }
        }
        9 => {
            let c: Vec<f64> = m["grids"].as_array().unwrap().iter().map(|g| g["constant"].as_f64().unwrap_or(f64::NAN)).collect();
            let hi = c.iter().copied().fold(f64::MIN, f64::max);
            let lo = c.iter().copied().fold(f64::MAX, f64::min);
            if c.len() == 3 && lo > 0.0 && hi / lo < 2.0 {
                Ok(format!("constants {c:.4?}, spread {:.3}", hi / lo))
            } else {
                fail(format!("constants {c:?}"))
            }
        }
        10 => {
            let e = slope(&f64s(&m["profile"]["radii"]), &f64s(&m["profile"]["integral"]));
            if f64s(&m["profile"]["radii"]) == [0.25, 0.5, 1.0] && e >= 5.7 {
                Ok(format!("exponent {e:.3}"))
            } else {
                fail(format!("exponent {e:.3}"))
            }
        }
        11 => {
            if m["ball_volume_identical"] == true && m["rewrite_cases_identical"] == true {
                Ok("seeded criteria reproduce in-process".into())
            } else {
                fail(format!("{m}"))
            }
        }
        _ => unreachable!(),
    }
}

fn limit(id: usize) -> Option<Duration> {
    match id {
        1 => Some(Duration::from_secs(10)),
        2 => Some(Duration::from_secs(60)),
        3 => Some(Duration::from_secs(30)),
        6 | 8 => Some(Duration::from_secs(120)),
        _ => None,
    }
}

fn suite_bytes() -> (Vec<u8>, Option<i32>) {
    let out = Command::new(env!("CARGO_BIN_EXE_carnot"))
        .args(["suite", "--format", "json"])
        .env_remove("CARNOT_SEED")
        .output()
        .expect("binary runs");
    (out.stdout, out.status.code())
}

fn main() {
    // The harness is off, so lines go straight to stdout.
    let mut so = std::io::stdout();
    let suite = Suite::new(DEFAULT_SEED);
    let mut failed = Vec::new();
    for id in 1..=11 {
        let t = Instant::now();
        let c = suite.run(id);
        let dt = t.elapsed();
        let mut verdict = recheck(&c);
        if verdict.is_ok() && !c.pass {
            verdict = Err("library verdict fail".into());
        }
        if let (Ok(_), Some(max)) = (&verdict, limit(id)) {
            if dt > max {
                verdict = Err(format!("took {dt:.1?}, limit {max:?}"));
            }
        }
        if id == 11 && verdict.is_ok() {
            let (a, ca) = suite_bytes();
            let (b, cb) = suite_bytes();
            verdict = if a.is_empty() || ca != Some(0) || cb != Some(0) {
                Err(format!("suite exit codes {ca:?}, {cb:?}"))
            } else if a != b {
                Err("two `carnot suite` runs differ".into())
            } else {
                Ok(format!("two `carnot suite` runs byte-identical ({} bytes)", a.len()))
            };
        }
        let dt = t.elapsed();
        let (tag, msg) = match &verdict {
            Ok(m) => ("PASS", m.clone()),
            Err(m) => ("FAIL", m.clone()),
        };
        writeln!(so, "criterion {id:>2} [{tag}] {}: {msg} ({dt:.2?})", c.name).unwrap();
        if verdict.is_err() {
            failed.push(id);
        }
    }
    so.flush().unwrap();
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
