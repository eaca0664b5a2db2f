//! Acceptance gate: one line per criterion, nonzero exit if any fails.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::time::{Duration, Instant};

use ham_core::diagnostics::{
    closed_form_region, error_bound, pointwise_ratio_limit, series_verdict, truncation_errors, Verdict,
    DEFAULT_BURN_IN,
};
use ham_core::golden::{self, TableRun};
use ham_core::problems::{self, IDS};
use ham_core::reference::closed_form;
use ham_core::residual::{optimal_h, residual_of};
use ham_core::{ExpPoly, HomotopySeries, Rate, SymbolicH, Window};
use rayon::prelude::*;
use rug::{Float, Integer, Rational};

const PREC: u32 = 256;

#[derive(Clone, Copy, PartialEq)]
enum Status {
    Pass,
    Flagged,
    Fail,
}

struct Gate {
    failed: usize,
}

impl Gate {
    fn report(&mut self, n: u32, title: &str, status: Status, detail: String) {
        let label = match status {
            Status::Pass => "PASS",
            Status::Flagged => "FLAGGED",
            Status::Fail => {
                self.failed += 1;
                "FAIL"
            }
        };
        println!("[{label:>7}] {n:>2}. {title}: {detail}");
    }
}

type Built = Vec<(String, HomotopySeries<Rational>, Duration)>;

fn build_timed(name: &str) -> Built {
    let (id, order) = golden::setup(name);
    let p = problems::get(id).unwrap().problem;
    golden::h_labels(name)
        .unwrap()
        .into_par_iter()
        .map(|h| {
            let t = Instant::now();
            let s = HomotopySeries::build(p.clone(), ham_core::expfun::parse_rational(&h).unwrap(), order).unwrap();
            (h, s, t.elapsed())
        })
        .collect()
}

fn compare(name: &str, built: &Built) -> TableRun {
    let series: Vec<_> = built.iter().map(|(h, s, _)| (h.clone(), s.clone())).collect();
    golden::compare(name, &series, PREC).unwrap()
}

fn table_status(run: &TableRun) -> (Status, String) {
    let flagged = run.cells.iter().filter(|c| c.status() == "flagged").count();
    let mut detail = format!("{} cells, {} outside tolerance, {} flagged", run.cells.len(), run.failures(), flagged);
    for c in run.cells.iter().filter(|c| c.status() != "ok") {
        detail.push_str(&format!(
            "; {} h={} {} expected {} got {:.6e} ({})",
            c.cell.column, c.cell.h, c.cell.index, c.cell.expected, c.computed, c.status()
        ));
    }
    let status = if run.failures() > 0 {
        Status::Fail
    } else if flagged > 0 {
        Status::Flagged
    } else {
        Status::Pass
    };
    (status, detail)
}

fn worse(a: Status, b: Status) -> Status {
    match (a, b) {
        (Status::Fail, _) | (_, Status::Fail) => Status::Fail,
        (Status::Flagged, _) | (_, Status::Flagged) => Status::Flagged,
        _ => Status::Pass,
    }
}

fn slowest(built: &Built) -> Duration {
    built.iter().map(|b| b.2).max().unwrap_or_default()
}

fn convergent(built: &Built) -> Vec<(String, &HomotopySeries<Rational>, Verdict)> {
    built
        .iter()
        .filter_map(|(h, s, _)| {
            let v = series_verdict(s, DEFAULT_BURN_IN, PREC).unwrap();
            v.is_convergent().then(|| (h.clone(), s, v))
        })
        .collect()
}

fn main() {
    let mut gate = Gate { failed: 0 };
    let t1 = build_timed("table1");
    let t2 = build_timed("table2");

    // 1
    let run1 = compare("table1", &t1);
    let (mut st, mut detail) = table_status(&run1);
    let slow = slowest(&t1);
    if slow > Duration::from_secs(60) {
        st = Status::Fail;
    }
    detail.push_str(&format!("; slowest build {:.1}s", slow.as_secs_f64()));
    gate.report(1, "ex1 ratio and error table", st, detail);

    // 2
    let run2 = compare("table2", &t2);
    let (st, mut detail) = table_status(&run2);
    let (_, s12, _) = t2.iter().find(|b| b.0 == "6/5").unwrap();
    let v12 = series_verdict(s12, DEFAULT_BURN_IN, PREC).unwrap();
    let ratios12 = &run2.ratios.iter().find(|r| r.0 == "6/5").unwrap().1;
    // tail: the ratios from rat_20 on
    let tail_min = ratios12[19..].iter().cloned().fold(f64::INFINITY, f64::min);
    let divergent = matches!(v12, Verdict::Divergent { .. }) && tail_min > 1.3;
    detail.push_str(&format!("; h=1.2 verdict {} with min rat_20..rat_49 = {tail_min:.5}", v12.label()));
    let st = worse(st, if divergent { Status::Pass } else { Status::Fail });
    gate.report(2, "ex2 ratio and error table", st, detail);

    // 3
    let mut ok = true;
    let mut detail = String::new();
    for (id, a, b, want) in [("ex1", 0.1, 2.5, 1.30405), ("ex2", 0.1, 1.5, 0.73258)] {
        let p = problems::get(id).unwrap().problem;
        match optimal_h(p, 7, a, b, 128) {
            Ok(c) => {
                ok &= (c.optimum.h - want).abs() < 1e-3;
                detail.push_str(&format!("{id} h*={:.6} (want {want}) ", c.optimum.h));
            }
            Err(e) => {
                ok = false;
                detail.push_str(&format!("{id} error {e} "));
            }
        }
    }
    gate.report(3, "optimal h at M=7", if ok { Status::Pass } else { Status::Fail }, detail);

    // 4
    let p3 = problems::get("ex3").unwrap().problem;
    let sym = HomotopySeries::build(p3.clone(), SymbolicH::h(), 5).unwrap();
    let terms_ok = (0..=5).all(|n| common::symbolic_layout(&sym.terms()[n]) == common::burgers_term(n));
    let mut pairs_ok = 0;
    let mut pairs = 0;
    for (h, ts) in [
        (0.25, [0.5, 3.0, 4.0, -0.75]),
        (0.5, [0.1, 1.0, 2.0, -0.8]),
        (1.0, [-0.25, 0.25, 0.75, 1.5]),
        (1.5, [-0.4, 0.1, 0.3, 0.6]),
        (1.75, [-0.3, 0.02, 0.2, 0.5]),
    ] {
        let s = HomotopySeries::build(p3.clone(), Rational::from_f64(h).unwrap(), 12).unwrap();
        let region = closed_form_region("ex3", h).unwrap();
        for t in ts {
            pairs += 1;
            let want = (1.0 - h * (1.0 + 2.0 * t)).abs();
            if let Ok(rho) = pointwise_ratio_limit(&s, t, 4, 1e-9, PREC) {
                if (rho - want).abs() < 1e-8 && region.contains(t) == (rho < 1.0) {
                    pairs_ok += 1;
                }
            }
        }
    }
    let st = if terms_ok && pairs_ok == pairs { Status::Pass } else { Status::Fail };
    gate.report(
        4,
        "ex3 symbolic terms and validity region",
        st,
        format!("terms u_0..u_5 exact: {terms_ok}; ratio limits consistent at {pairs_ok}/{pairs} (h, t) pairs"),
    );

    // 5
    let s4 = HomotopySeries::build(problems::get("ex4").unwrap().problem, Rational::from(1), 11).unwrap();
    let fact = |n: u32| Rational::from((Integer::from(1), Integer::from(Integer::factorial(n))));
    let terms_ok = (0..=5u32).all(|n| {
        let want = ExpPoly::from_terms([(fact(2 * n), 2 * n, Rate::ZERO), (-fact(2 * n + 1), 2 * n + 1, Rate::ZERO)]);
        s4.terms()[n as usize] == want
    });
    let mut worst: f64 = 0.0;
    for i in 1..=40 {
        let t = Float::with_val(PREC, i as f64 * 0.05);
        let a = s4.terms()[10].eval_mp(&t, PREC);
        let b = s4.terms()[11].eval_mp(&t, PREC);
        worst = worst.max(Float::with_val(PREC, &b / &a).abs().to_f64());
    }
    let st = if terms_ok && worst < 1e-3 { Status::Pass } else { Status::Fail };
    gate.report(
        5,
        "ex4 terms and ratio limit",
        st,
        format!("terms u_0..u_5 exact: {terms_ok}; max over 0 < t <= 2 of |u_11/u_10| = {worst:.4e} (need < 1e-3)"),
    );

    // 6
    let p5 = problems::get("ex5").unwrap().problem;
    let neg = HomotopySeries::build(p5.clone(), Rational::from(-1), 10).unwrap();
    let minus_t = ExpPoly::term(Rational::from(-1), 1, Rate::ZERO);
    let exact_ratio = (0..10).all(|n| {
        neg.terms()[n + 1].scale_rational(&Rational::from(n as u32 + 1)) == neg.terms()[n].mul(&minus_t)
    });
    let pos = HomotopySeries::build(p5, Rational::from(1), 20).unwrap();
    let v = series_verdict(&pos, DEFAULT_BURN_IN, PREC).unwrap();
    let mut min_pointwise = f64::INFINITY;
    for t in [0.25, 0.5, 1.0, 2.0] {
        let tf = Float::with_val(PREC, t);
        let a = pos.terms()[19].eval_mp(&tf, PREC);
        let b = pos.terms()[20].eval_mp(&tf, PREC);
        min_pointwise = min_pointwise.min(Float::with_val(PREC, &b / &a).abs().to_f64());
    }
    let ok = exact_ratio && !v.is_convergent() && min_pointwise > 1.0;
    gate.report(
        6,
        "ex5 ratios at h = -1 and h = 1",
        if ok { Status::Pass } else { Status::Fail },
        format!(
            "h=-1 (n+1)u_(n+1) = -t u_n exactly: {exact_ratio}; h=1 verdict {}, min |u_20/u_19| at t>0 = {min_pointwise:.3}",
            v.label()
        ),
    );

    // 7
    let t0 = Instant::now();
    let b6 = build_timed("table3");
    let run3 = compare("table3", &b6);
    let runf = compare("figure1", &b6);
    let elapsed = t0.elapsed();
    let (s3, d3) = table_status(&run3);
    let (sf, df) = table_status(&runf);
    let mut band_ok = true;
    let mut lims = Vec::new();
    for (h, r) in &runf.ratios {
        // settled tail: rat_20 on, as in criterion 2
        let tail = &r[19..];
        let lo = tail.iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = tail.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        band_ok &= lo >= 0.70 && hi <= 0.90;
        lims.push(format!("h={h} rat_20..rat_29 in [{lo:.3}, {hi:.3}]"));
    }
    let mut st = worse(s3, sf);
    if !band_ok || elapsed > Duration::from_secs(300) {
        st = Status::Fail;
    }
    gate.report(
        7,
        "Blasius residual table and ratio limits",
        st,
        format!("residuals: {d3}. limits: {df}. tail bands {}; {:.1}s", lims.join(", "), elapsed.as_secs_f64()),
    );

    // 8
    let mut checked = 0;
    let mut violations = Vec::new();
    for (id, built) in [("ex1", &t1), ("ex2", &t2)] {
        let reference = closed_form(id).unwrap();
        for (h, s, v) in convergent(built) {
            let errs = truncation_errors(s, 40, &reference, 10.0, PREC).unwrap();
            for (m, err) in errs.iter().enumerate() {
                let bound = error_bound(s, m, &v, Window::Finite(10.0), PREC).unwrap();
                checked += 1;
                if !(*err <= bound) {
                    violations.push(format!("{id} h={h} M={m}: {err:.3e} > {bound:.3e}"));
                }
            }
        }
    }
    gate.report(
        8,
        "truncation error below the ratio bound",
        if violations.is_empty() { Status::Pass } else { Status::Fail },
        format!("{checked} (h, M) cases on [0, 10], {} violations {}", violations.len(), violations.join("; ")),
    );

    // 9
    let mut rows = Vec::new();
    let mut ok = true;
    for (id, built) in [("ex1", &t1), ("ex2", &t2)] {
        let results: Vec<(String, f64)> = convergent(built)
            .into_par_iter()
            .map(|(h, s, _)| {
                let r1 = residual_of(s, 1, PREC).unwrap();
                let r40 = residual_of(s, 40, PREC).unwrap();
                (h, r40 / r1)
            })
            .collect();
        for (h, q) in results {
            ok &= q < 1e-6;
            rows.push(format!("{id} h={h} {q:.3e}"));
        }
    }
    gate.report(
        9,
        "Res(S_40)/Res(S_1) below 1e-6",
        if ok { Status::Pass } else { Status::Fail },
        rows.join(", "),
    );

    // 10
    let mut bad = Vec::new();
    for id in IDS {
        for h in [Rational::from(1), Rational::from((-1, 2)), Rational::from((3, 2))] {
            let s = HomotopySeries::build(problems::get(id).unwrap().problem, h.clone(), 3).unwrap();
            let m = common::model(id);
            let defect_free = common::homotopy_defect(&s).iter().all(common::Field::is_zero);
            let bcs = (1..=3).all(|k| (m.homogeneous)(&common::lift(&s.terms()[k], &m.spatial)));
            if !(defect_free && bcs) {
                bad.push(format!("{id} h={h}"));
            }
        }
    }
    gate.report(
        10,
        "deformation terms equal the brute-force p-expansion",
        if bad.is_empty() { Status::Pass } else { Status::Fail },
        format!("6 problems x 3 h values at M <= 3; mismatches: {bad:?}"),
    );

    println!("{} criteria failed", gate.failed);
    if gate.failed > 0 {
        std::process::exit(1);
    }
}
