use std::fs;
use std::io::{self, Write};

use anyhow::{bail, ensure, Context, Result};
use lipdyn::lipschitz::{classify_fixed_point, classify_periodic_orbit, NeighborhoodSpec};
use lipdyn::lyapunov::{
    classify_chaos, lyapunov_number, periodic_orbit_exponent, ChaosConfig, SkipPolicy, DEFAULT_ETA,
};
use lipdyn::maps::{builtin, ParamFamily, ScalarMap};
use lipdyn::orbit::{find_fixed_points, iterate, refine_periodic_orbit, DEFAULT_ESCAPE_RADIUS};
use rayon::prelude::*;
use serde::Serialize;

use crate::args::{AnalyzeArgs, ClassifyArgs, Command, Common, Format, OrbitArgs, SweepArgs};
use crate::report::{
    AnalyzeReport, ClassifyReport, Num, OrbitReport, PointReport, Record, SweepReport, SweepRow,
};
use crate::source::resolve;

const ORBIT_ITERS: usize = 100;
const ANALYZE_ITERS: usize = 100_000;
const ANALYZE_BURN_IN: usize = 1000;
const AUTO_GRID: usize = 4096;

/// How a successful run ended.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Outcome {
    Done,
    Escaped,
}

pub fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Orbit(a) => orbit(a),
        Command::Classify(a) => classify(a),
        Command::Analyze(a) => analyze(a),
        Command::Sweep(a) => sweep(a),
    }
}

fn validate(c: &Common) -> Result<()> {
    for (name, v) in [
        ("--period-tol", c.period_tol),
        ("--fp-tol", c.fp_tol),
        ("--margin", c.margin),
        ("--radius", c.radius),
    ] {
        ensure!(v.is_finite() && v > 0.0, "{name} must be positive, got {v}");
    }
    ensure!(c.margin < 1.0, "--margin must be below 1, got {}", c.margin);
    ensure!(c.max_period >= 1, "--max-period must be at least 1");
    ensure!(c.x0.is_finite(), "--x0 must be finite");
    Ok(())
}

fn load(c: &Common) -> Result<ScalarMap> {
    validate(c)?;
    let spec = c.map.as_deref().context("--map is required")?;
    Ok(resolve(spec)?)
}

fn write_out(c: &Common, bytes: &[u8]) -> Result<()> {
    match &c.out {
        Some(path) => {
            fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(bytes)?;
            Ok(stdout.flush()?)
        }
    }
}

fn emit_json<T: Serialize>(c: &Common, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_out(c, text.as_bytes())
}

fn emit_csv(c: &Common, header: &[&str], rows: Vec<Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| anyhow::anyhow!("{}", e.error()))?;
    write_out(c, &bytes)
}

fn opt<T: ToString>(v: Option<T>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

fn orbit(a: OrbitArgs) -> Result<Outcome> {
    let c = &a.common;
    let map = load(c)?;
    let iters = c.iters.unwrap_or(ORBIT_ITERS);
    let burn_in = c.burn_in.unwrap_or(0);
    ensure!(iters >= 1, "--iters must be at least 1");
    // Index n is f^n(x0), so the first record is f^{B+1}(x0).
    let first = map.eval(c.x0)?;
    let orbit = iterate(&map, first, iters, burn_in, DEFAULT_ESCAPE_RADIUS)?;
    let escaped = orbit.escaped || !first.is_finite() || first.abs() > DEFAULT_ESCAPE_RADIUS;
    let records: Vec<Record> = orbit
        .samples
        .iter()
        .enumerate()
        .map(|(i, &x)| Record {
            index: burn_in + 1 + i,
            x: Num(x),
        })
        .collect();
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => emit_csv(
            c,
            &["index", "x"],
            records
                .iter()
                .map(|r| vec![r.index.to_string(), r.x.to_string()])
                .collect(),
        )?,
        Format::Json => emit_json(
            c,
            &OrbitReport {
                command: "orbit",
                map: map.label().to_string(),
                x0: Num(c.x0),
                burn_in,
                iters,
                escaped,
                records,
            },
        )?,
    }
    Ok(if escaped {
        Outcome::Escaped
    } else {
        Outcome::Done
    })
}

fn parse_interval(s: &str) -> Result<(f64, f64)> {
    let (lo, hi) = s
        .split_once(',')
        .with_context(|| format!("--interval expects lo,hi, got `{s}`"))?;
    let lo: f64 = lo
        .trim()
        .parse()
        .with_context(|| format!("bad interval bound `{lo}`"))?;
    let hi: f64 = hi
        .trim()
        .parse()
        .with_context(|| format!("bad interval bound `{hi}`"))?;
    ensure!(
        lo.is_finite() && hi.is_finite() && lo < hi,
        "--interval needs finite lo < hi"
    );
    Ok((lo, hi))
}

fn classify(a: ClassifyArgs) -> Result<Outcome> {
    let c = &a.common;
    let map = load(c)?;
    let nbhd = NeighborhoodSpec::new(0.0, c.radius).with_seed(c.seed);
    let cycles: Vec<Vec<f64>> = if a.auto {
        let interval = parse_interval(a.interval.as_deref().unwrap_or_default())?;
        find_fixed_points(&map, interval, AUTO_GRID, c.fp_tol)
            .iter()
            .map(|fp| vec![fp.p])
            .collect()
    } else {
        match a.period {
            Some(0) => bail!("--period must be at least 1"),
            Some(k) => a
                .point
                .iter()
                .map(|&seed| Ok(refine_periodic_orbit(&map, k, seed, c.fp_tol)?))
                .collect::<Result<_>>()?,
            None => a.point.iter().map(|&p| vec![p]).collect(),
        }
    };
    let points = cycles
        .iter()
        .map(|cycle| {
            let cl = if a.period.is_some() {
                classify_periodic_orbit(&map, cycle, &nbhd, c.margin)?
            } else {
                classify_fixed_point(&map, cycle[0], &nbhd, c.margin)?
            };
            Ok(PointReport::new(cycle, cl))
        })
        .collect::<Result<Vec<_>>>()?;
    match c.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(
            c,
            &ClassifyReport {
                command: "classify",
                map: map.label().to_string(),
                radius: Num(c.radius),
                seed: c.seed,
                points,
            },
        )?,
        Format::Csv => emit_csv(
            c,
            &[
                "p",
                "period",
                "verdict",
                "method",
                "margin",
                "c_value",
                "c_basis",
                "r_value",
                "r_basis",
                "oracle_verdict",
            ],
            points
                .iter()
                .map(|p| {
                    vec![
                        p.p.to_string(),
                        p.period.to_string(),
                        p.verdict.to_string(),
                        p.method.to_string(),
                        p.margin.to_string(),
                        p.c_evidence.value.to_string(),
                        p.c_evidence.basis.to_string(),
                        p.r_evidence.value.to_string(),
                        p.r_evidence.basis.to_string(),
                        opt(p.smooth_oracle.as_ref().map(|o| o.verdict)),
                    ]
                })
                .collect(),
        )?,
    }
    Ok(Outcome::Done)
}

fn chaos_config(c: &Common) -> ChaosConfig {
    ChaosConfig {
        n: c.iters.unwrap_or(ANALYZE_ITERS),
        burn_in: c.burn_in.unwrap_or(ANALYZE_BURN_IN),
        max_period: c.max_period,
        period_tol: c.period_tol,
        policy: SkipPolicy::with_mode(c.skip_mode.into()),
    }
}

fn analyze(a: AnalyzeArgs) -> Result<Outcome> {
    let c = &a.common;
    let map = load(c)?;
    let cfg = chaos_config(c);
    let rep = classify_chaos(&map, c.x0, &cfg)?;
    let e = &rep.exponent;
    let mut notes: Vec<String> = map.notes().to_vec();
    if rep.float_collapse {
        notes.push(
            "float_collapse: the double-precision orbit settled on a cycle while h_n > 0; \
             the exponent reflects |f'| along the collapsed orbit"
                .to_string(),
        );
    }
    if e.skipped > 0 {
        notes.push(format!(
            "{} terms within eta of a breakpoint were skipped",
            e.skipped
        ));
    }
    if !rep.bounded {
        notes.push("orbit escaped; h_n is the partial mean before escape".to_string());
    }
    let mut report = AnalyzeReport {
        command: "analyze",
        map: map.label().to_string(),
        x0: Num(c.x0),
        iters: cfg.n,
        burn_in: cfg.burn_in,
        h_n: Num(e.h_n),
        l: lyapunov_number(e).ok().map(|l| Num(l.value)),
        status: e.status.as_str(),
        n_used: e.n_used,
        skipped: e.skipped,
        bounded: rep.bounded,
        period: None,
        cycle: Vec::new(),
        cycle_exponent: None,
        chaotic: rep.chaotic,
        float_collapse: rep.float_collapse,
        notes,
    };
    if let Some(d) = &rep.asymptotically_periodic {
        report.set_cycle(&d.cycle);
        report.cycle_exponent = periodic_orbit_exponent(&map, &d.cycle, DEFAULT_ETA)
            .ok()
            .map(Num);
    }
    match c.format.unwrap_or(Format::Json) {
        Format::Json => emit_json(c, &report)?,
        Format::Csv => emit_csv(
            c,
            &[
                "h_n",
                "L",
                "status",
                "skipped",
                "period",
                "chaotic",
                "float_collapse",
            ],
            vec![vec![
                report.h_n.to_string(),
                opt(report.l),
                report.status.to_string(),
                report.skipped.to_string(),
                opt(report.period),
                report.chaotic.to_string(),
                report.float_collapse.to_string(),
            ]],
        )?,
    }
    Ok(if rep.bounded {
        Outcome::Done
    } else {
        Outcome::Escaped
    })
}

/// `steps` values from `from` to `to` inclusive.
fn sweep_values(from: f64, to: f64, steps: usize) -> Result<Vec<f64>> {
    ensure!(
        from.is_finite() && to.is_finite(),
        "--from and --to must be finite"
    );
    ensure!(from < to, "--from must be below --to ({from} >= {to})");
    ensure!(steps >= 2, "--steps must be at least 2");
    let last = (steps - 1) as f64;
    let values: Vec<f64> = (0..steps)
        .map(|i| {
            if i + 1 == steps {
                to
            } else {
                from + (to - from) * (i as f64 / last)
            }
        })
        .collect();
    ensure!(
        values.windows(2).all(|w| w[0] < w[1]),
        "--steps {steps} is too fine to give distinct parameter values"
    );
    Ok(values)
}

fn sweep_row(family: &ParamFamily, param: &str, value: f64, c: &Common) -> SweepRow {
    let failed = |msg: String| SweepRow {
        param: Num(value),
        h_n: Num(f64::NAN),
        status: format!("error: {msg}"),
        detected_period: None,
        escaped: false,
    };
    let map = match builtin(&family.clone().with(param, value)) {
        Ok(m) => m,
        Err(e) => return failed(e.to_string()),
    };
    match classify_chaos(&map, c.x0, &chaos_config(c)) {
        Ok(rep) => SweepRow {
            param: Num(value),
            h_n: Num(rep.exponent.h_n),
            status: rep.exponent.status.as_str().to_string(),
            detected_period: rep.asymptotically_periodic.map(|d| d.period),
            escaped: !rep.bounded,
        },
        Err(e) => failed(e.to_string()),
    }
}

fn sweep(a: SweepArgs) -> Result<Outcome> {
    let c = &a.common;
    validate(c)?;
    ensure!(c.map.is_none(), "sweep takes --family, not --map");
    let family: ParamFamily = a.family.parse()?;
    ensure!(
        family.kind.parameters().contains(&a.param.as_str()),
        "family `{}` has no parameter `{}`",
        family.kind.name(),
        a.param
    );
    let values = sweep_values(a.from, a.to, a.steps)?;
    let rows: Vec<SweepRow> = values
        .par_iter()
        .map(|&v| sweep_row(&family, &a.param, v, c))
        .collect();
    match c.format.unwrap_or(Format::Csv) {
        Format::Csv => emit_csv(
            c,
            &["param", "h_n", "status", "detected_period", "escaped"],
            rows.iter()
                .map(|r| {
                    vec![
                        r.param.to_string(),
                        r.h_n.to_string(),
                        r.status.clone(),
                        opt(r.detected_period),
                        r.escaped.to_string(),
                    ]
                })
                .collect(),
        )?,
        Format::Json => emit_json(
            c,
            &SweepReport {
                command: "sweep",
                family: family.to_string(),
                param: a.param.clone(),
                rows,
            },
        )?,
    }
    Ok(Outcome::Done)
}
