//! One line per acceptance criterion. Runs as a plain binary so the lines
//! show up in `cargo test` output without `--nocapture`.

use std::time::{Duration, Instant};

use ddmd::verify::suite::{self, Outcome, SuiteConfig};

fn pool(threads: usize) -> rayon::ThreadPool {
    rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap()
}

fn report_bytes(cfg: &SuiteConfig, threads: usize) -> String {
    pool(threads).install(|| suite::render(cfg, &suite::run(cfg)))
}

fn main() {
    let cfg = SuiteConfig::default();
    let s = cfg.seed;
    type Check = Box<dyn Fn() -> Outcome>;
    let checks: Vec<(Check, Option<u64>)> = vec![
        (Box::new(move || suite::eta_identity(s)), Some(10)),
        (Box::new(move || suite::refinement_optimality(s)), Some(30)),
        (Box::new(move || suite::rho_optimality(s)), Some(30)),
        (Box::new(move || suite::quotient_from_qr(s)), None),
        (Box::new(move || suite::compression_equivalence(s)), None),
        (Box::new(move || suite::exact_contract(s)), None),
        (Box::new(move || suite::fb_consistency(s)), None),
        (Box::new(move || suite::weighted_chain(s)), None),
        (Box::new(move || suite::bauer_fike(s)), None),
        (Box::new(move || suite::qualitative(s, cfg.n, cfg.m)), Some(120)),
        (Box::new(move || suite::companion_identity(s)), None),
    ];

    let mut failed = 0;
    for (check, limit) in checks {
        let t = Instant::now();
        let o = check();
        let dt = t.elapsed();
        let in_time = limit.map_or(true, |l| dt < Duration::from_secs(l));
        let ok = o.passed && in_time;
        if !ok {
            failed += 1;
        }
        let budget = limit.map_or(String::new(), |l| format!(" (limit {l}s)"));
        println!(
            "criterion {:>2} {} {:<30} {:7.2}s{} {}",
            o.id,
            if ok { "PASS" } else { "FAIL" },
            o.name,
            dt.as_secs_f64(),
            budget,
            o.detail
        );
    }

    // 12: the verify report itself, byte for byte.
    let t = Instant::now();
    let inner = suite::determinism(s);
    let a = report_bytes(&cfg, 1);
    let b = report_bytes(&cfg, 1);
    let c = report_bytes(&cfg, 4);
    let ok = inner.passed && a == b && a == c;
    if !ok {
        failed += 1;
    }
    println!(
        "criterion 12 {} {:<30} {:7.2}s {}; report {} bytes, two runs {}, 1 vs 4 threads {}",
        if ok { "PASS" } else { "FAIL" },
        "determinism of verify report",
        t.elapsed().as_secs_f64(),
        inner.detail,
        a.len(),
        if a == b { "identical" } else { "DIFFER" },
        if a == c { "identical" } else { "DIFFER" }
    );

    println!("acceptance: {} of 12 passed", 12 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
