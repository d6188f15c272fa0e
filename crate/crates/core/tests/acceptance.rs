//! The ten acceptance criteria, each at its stated tolerance and runtime.
//!
//! Runs without the libtest harness so every criterion prints one
//! `PASS`/`FAIL` line; the process exits non-zero if any line is `FAIL`.

use std::time::{Duration, Instant};

use serde_json::Value;
use siegel_theta::orders_exact::FiberTarget;
use siegel_theta::verify::{self, IndexSet, Report, RunConfig, Status, VerifyError};

struct Outcome {
    id: u32,
    title: &'static str,
    ok: bool,
    note: String,
    elapsed: Duration,
    limit: Option<Duration>,
}

fn cfg(genus: usize, level: u64, samples: usize, trials: usize) -> RunConfig {
    RunConfig {
        genus,
        level,
        samples,
        trials,
        seed: 2024,
        ..RunConfig::default()
    }
}

fn passed(r: &Report, name: &str) -> bool {
    r.check(name).is_some_and(|c| c.status == Status::Pass)
}

fn detail<'a>(r: &'a Report, name: &str, key: &str) -> &'a Value {
    &r.check(name).expect("check present").detail[key]
}

fn residual(r: &Report, name: &str) -> f64 {
    r.check(name).and_then(|c| c.max_residual).unwrap_or(f64::NAN)
}

fn run(
    id: u32,
    title: &'static str,
    limit: Option<u64>,
    body: impl FnOnce() -> Result<(bool, String), VerifyError>,
) -> Outcome {
    let start = Instant::now();
    let (ok, note) = body().unwrap_or_else(|e| (false, format!("error: {e}")));
    Outcome {
        id,
        title,
        ok,
        note,
        elapsed: start.elapsed(),
        limit: limit.map(Duration::from_secs),
    }
}

fn vanishing_census() -> Result<(bool, String), VerifyError> {
    let mut ok = true;
    let mut counts = Vec::new();
    for (g, want) in [(1usize, 1u64), (2, 6), (3, 28)] {
        let r = verify::cmd_verify("vanishing", &cfg(g, 3, 3, 0))?;
        let got = detail(&r, "vanishing-census", "vanishing").as_u64();
        ok &= passed(&r, "vanishing-census") && got == Some(want);
        counts.push(format!("g={g}: {}/{}", got.unwrap_or(0), detail(&r, "vanishing-census", "characteristics")));
    }
    Ok((ok, counts.join(", ")))
}

fn genus1_collapse() -> Result<(bool, String), VerifyError> {
    let mut ok = true;
    let mut notes = Vec::new();
    for (n, classes) in [(3u64, 4u64), (5, 12)] {
        let r = verify::cmd_verify("genus1", &cfg(1, n, 3, 0))?;
        ok &= passed(&r, "genus1-collapse") && detail(&r, "genus1-collapse", "classes").as_u64() == Some(classes);
        notes.push(format!("N={n}: {classes} classes, max {:.2e}", residual(&r, "genus1-collapse")));
    }
    Ok((ok, notes.join(", ")))
}

fn diagonal_restriction() -> Result<(bool, String), VerifyError> {
    let r = verify::cmd_verify("diag", &cfg(2, 5, 8, 50))?;
    let ok = passed(&r, "diag-product-branch")
        && passed(&r, "diag-zero-branch")
        && detail(&r, "diag-product-branch", "cases").as_u64() == Some(50);
    Ok((
        ok,
        format!(
            "product {:.2e} over {}, zero {:.2e} over {}",
            residual(&r, "diag-product-branch"),
            detail(&r, "diag-product-branch", "cases"),
            residual(&r, "diag-zero-branch"),
            detail(&r, "diag-zero-branch", "cases"),
        ),
    ))
}

fn order_law() -> Result<(bool, String), VerifyError> {
    let r = verify::cmd_verify("orders", &cfg(2, 5, 8, 0))?;
    let ok = passed(&r, "order-law") && detail(&r, "order-law", "max_denominator").as_u64() == Some(7);
    Ok((
        ok,
        format!(
            "{} indices, max |fit - exact| {:.2e} on y = {}",
            detail(&r, "order-law", "indices"),
            residual(&r, "order-law"),
            detail(&r, "order-law", "y_grid"),
        ),
    ))
}

fn sp_action() -> Result<(bool, String), VerifyError> {
    let c = cfg(2, 5, 8, 20);
    let a = verify::cmd_verify("action", &c)?;
    let i = verify::cmd_verify("invariance", &c)?;
    let ok = passed(&a, "sp-action")
        && detail(&a, "sp-action", "cases").as_u64() == Some(20)
        && passed(&i, "gamma-n-invariance")
        && detail(&i, "gamma-n-invariance", "cases").as_u64() == Some(10);
    Ok((
        ok,
        format!(
            "20 words {:.2e}, 10 Γ(5) elements {:.2e}",
            residual(&a, "sp-action"),
            residual(&i, "gamma-n-invariance")
        ),
    ))
}

fn primitivity() -> Result<(bool, String), VerifyError> {
    let r = verify::cmd_primitivity(&cfg(2, 5, 8, 0))?;
    let ok = passed(&r, "primitivity-exhaustion")
        && detail(&r, "primitivity-exhaustion", "classes").as_u64() == Some(312)
        && detail(&r, "primitivity-exhaustion", "surviving_collisions").as_u64() == Some(0);
    Ok((
        ok,
        format!(
            "{} classes, {} signature groups, {} pairs left to sampling, {} surviving",
            detail(&r, "primitivity-exhaustion", "classes"),
            detail(&r, "primitivity-exhaustion", "signature_groups"),
            detail(&r, "primitivity-exhaustion", "pairs_left_by_signatures"),
            detail(&r, "primitivity-exhaustion", "surviving_collisions"),
        ),
    ))
}

fn fibers() -> Result<(bool, String), VerifyError> {
    let c = cfg(2, 3, 8, 0);
    let mut ok = true;
    let mut notes = Vec::new();
    for t in ["e1", "e2", "e3", "e4", "e", "f"] {
        let target: FiberTarget = t.parse()?;
        let r = verify::cmd_fibers(&c, target)?;
        let name = format!("fiber-{target}");
        let matches = detail(&r, &name, "numeric_matches").as_array().map_or(0, Vec::len);
        ok &= passed(&r, &name)
            && passed(&r, &format!("{name}-exact"))
            && matches == 1
            && detail(&r, &name, "classes").as_u64() == Some(40);
        notes.push(format!("{target}:{matches}"));
    }
    Ok((ok, format!("matches among 40 classes: {}", notes.join(" "))))
}

fn stabilizers() -> Result<(bool, String), VerifyError> {
    let dir = tempfile::tempdir()?;
    let c = RunConfig {
        cache_path: Some(dir.path().join("gsp4_3.bin")),
        ..cfg(2, 3, 8, 0)
    };
    let full = verify::cmd_stabilizer(&c, IndexSet::Full)?;
    let g1 = verify::cmd_stabilizer(&c, IndexSet::Gamma1Type)?;
    let ok = passed(&full, "sp-order")
        && detail(&full, "sp-order", "elements").as_u64() == Some(25920)
        && passed(&full, "stabilizer-full")
        && passed(&g1, "stabilizer-gamma1-type")
        && detail(&g1, "stabilizer-gamma1-type", "size").as_u64() == Some(54);
    Ok((
        ok,
        format!(
            "|Sp4(Z/3)/±| = {}, full {}, gamma1-type {}",
            detail(&full, "sp-order", "elements"),
            detail(&full, "stabilizer-full", "size"),
            detail(&g1, "stabilizer-gamma1-type", "size"),
        ),
    ))
}

fn rescale() -> Result<(bool, String), VerifyError> {
    let r = verify::cmd_rescale_check(&cfg(2, 3, 8, 10))?;
    let ok = passed(&r, "rescale-invariance")
        && detail(&r, "rescale-invariance", "words").as_u64() == Some(10)
        && passed(&r, "rescale-negative-control");
    Ok((
        ok,
        format!(
            "10 words {:.2e}, control residuals {}",
            residual(&r, "rescale-invariance"),
            detail(&r, "rescale-negative-control", "residuals")
        ),
    ))
}

fn level_two() -> Result<(bool, String), VerifyError> {
    let r = verify::degenerate_level_two(&cfg(2, 2, 3, 0))?;
    let chars = detail(&r, "level-two-rejected", "characteristics").as_array().map_or(0, Vec::len);
    let ok = passed(&r, "level-two-rejected") && passed(&r, "level-two-vanishes") && chars == 5;
    Ok((
        ok,
        format!(
            "{chars} characteristics rejected, max log|Θ| = {}",
            detail(&r, "level-two-vanishes", "max_log_magnitude")
        ),
    ))
}

fn main() {
    let outcomes = vec![
        run(1, "vanishing census", Some(10), vanishing_census),
        run(2, "genus-1 collapse", Some(5), genus1_collapse),
        run(3, "diagonal restriction", Some(30), diagonal_restriction),
        run(4, "order law", None, order_law),
        run(5, "Sp-action and Γ(5)-invariance", Some(120), sp_action),
        run(6, "primitivity exhaustion (2,5)", Some(600), primitivity),
        run(7, "generator fibers (2,3)", Some(60), fibers),
        run(8, "stabilizers (2,3)", Some(300), stabilizers),
        run(9, "rescale and negative control", None, rescale),
        run(10, "level-2 degeneracy", None, level_two),
    ];
    let mut all = true;
    for o in &outcomes {
        let in_time = o.limit.is_none_or(|l| o.elapsed < l);
        let ok = o.ok && in_time;
        all &= ok;
        let limit = o.limit.map_or(String::new(), |l| format!(" / {}s", l.as_secs()));
        println!(
            "{} criterion {:>2} {}: {} [{:.2}s{}]",
            if ok { "PASS" } else { "FAIL" },
            o.id,
            o.title,
            o.note,
            o.elapsed.as_secs_f64(),
            limit
        );
    }
    if !all {
        eprintln!("at least one acceptance criterion failed");
        std::process::exit(1);
    }
}
