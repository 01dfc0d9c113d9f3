use std::collections::BTreeSet;
use std::fmt;
use std::fs;
use std::io::{self, Write};
use std::path::Path;

use bounded_sketch::eval::{
    bench_update, reports_to_json, run_experiment_with, run_on_stream, run_quantiles, write_csv, Distribution,
    EvalOptions, EvalReport, ExperimentSpec, GeneratorSpec, HarnessError, SketchSpec,
};
use bounded_sketch::stream::{adversarial_stream, read_stream_file, write_stream_file, DeletionPlan};
use bounded_sketch::{
    capacity_for, Execution, ExactCounter, ItemId, SketchConfig, SketchError, SketchPolicy, SpaceSavingSketch,
};
use serde_json::json;

use crate::args::{AdversaryArgs, BenchArgs, Cli, Command, CounterSketch, Dist, GenArgs, GeneratorArgs, QuantileArgs, RunArgs};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags, unreadable or malformed input.
    Usage(String),
    /// An asserted guarantee failed.
    Guarantee(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Guarantee(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => f.write_str(m),
            CliError::Guarantee(m) => write!(f, "guarantee violated: {m}"),
        }
    }
}

impl From<SketchError> for CliError {
    fn from(e: SketchError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Usage(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

pub fn dispatch(cli: Cli) -> CliResult {
    let exec = if cli.sequential { Execution::Sequential } else { Execution::default() };
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Run(a) => cmd_run(a, exec),
        Command::Quantile(a) => cmd_quantile(a, exec),
        Command::Adversary(a) => cmd_adversary(a),
        Command::Bench(a) => cmd_bench(a),
    }
}

fn emit(text: &str, out: Option<&Path>) -> CliResult {
    match out {
        Some(path) => fs::write(path, text)?,
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
        }
    }
    Ok(())
}

fn generator_spec(g: &GeneratorArgs, inserts: u64) -> GeneratorSpec {
    let dist = match g.dist {
        Dist::Zipf => Distribution::Zipf { s: g.s, permute: g.permute },
        Dist::Binomial => Distribution::Binomial { n: g.n, p: g.p },
    };
    GeneratorSpec {
        universe_bits: g.universe_bits,
        inserts,
        dist,
        deletions: DeletionPlan::new(g.ratio, g.pattern.into(), g.order.into()),
    }
}

fn cmd_gen(a: GenArgs) -> CliResult {
    let stream = generator_spec(&a.generator, a.inserts).generate(a.generator.seed)?;
    write_stream_file(&stream, &a.out)?;
    println!("I={} D={} alpha={:?}", stream.inserts(), stream.deletes(), stream.alpha);
    Ok(())
}

fn summarize(r: &EvalReport) {
    let fmt_opt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.4}"));
    eprintln!(
        "{} k={} eps={} alpha={:.4} ratio={:.4}: mse={:.4} max_err={} recall={} precision={} violations={}",
        r.sketch_name,
        r.counters,
        r.epsilon,
        r.alpha,
        r.delete_ratio,
        r.mse,
        r.max_abs_error,
        fmt_opt(r.recall),
        fmt_opt(r.precision),
        r.violations
    );
}

fn render(reports: &[EvalReport], csv: bool, single: bool) -> Result<String, CliError> {
    if csv {
        let mut buf = Vec::new();
        write_csv(reports, &mut buf)?;
        Ok(String::from_utf8(buf).expect("csv is utf-8"))
    } else if single {
        Ok(reports[0].to_json() + "\n")
    } else {
        Ok(reports_to_json(reports) + "\n")
    }
}

fn cmd_run(a: RunArgs, exec: Execution) -> CliResult {
    let (outcome, single) = match &a.experiment {
        Some(path) => {
            let spec = ExperimentSpec::from_json(&fs::read_to_string(path)?)?;
            (run_experiment_with(&spec, exec), false)
        }
        None => {
            let stream = read_stream_file(a.stream.as_ref().expect("required by clap"))?;
            let mut spec = SketchSpec::new(a.sketch.expect("required by clap").into(), a.epsilon);
            spec.alpha = a.alpha;
            spec.delta = a.delta;
            spec.counters = a.counters;
            let opts = EvalOptions { phi: a.phi.unwrap_or(a.epsilon), eval_set: a.eval_set.into(), timing: a.timing };
            (run_on_stream(&spec, &stream, &opts, a.reps, a.seed, exec).map(|r| vec![r]), true)
        }
    };
    let (reports, failure) = match outcome {
        Ok(reports) => (reports, None),
        Err(HarnessError::Guarantee { reports, failures }) => (reports, Some(failures.join("; "))),
        Err(HarnessError::Sketch(e)) => return Err(e.into()),
        Err(other) => return Err(CliError::Usage(other.to_string())),
    };
    reports.iter().for_each(summarize);
    emit(&render(&reports, a.csv, single)?, a.out.as_deref())?;
    match failure {
        Some(m) => Err(CliError::Guarantee(m)),
        None => Ok(()),
    }
}

fn cmd_quantile(a: QuantileArgs, exec: Execution) -> CliResult {
    let stream = read_stream_file(&a.stream)?;
    if stream.universe_bits != a.universe_bits {
        return Err(CliError::Usage(format!(
            "--universe-bits {} does not match the stream header ({})",
            a.universe_bits, stream.universe_bits
        )));
    }
    let mut spec = SketchSpec::new(a.sketch.into(), a.epsilon);
    spec.alpha = a.alpha;
    spec.delta = a.delta;
    spec.counters = a.counters;
    let (report, failure) = match run_quantiles(&spec, &stream, &a.q, a.seed, exec) {
        Ok(r) => (r, None),
        Err(HarnessError::QuantileGuarantee { report, failures }) => (*report, Some(failures.join("; "))),
        Err(HarnessError::Sketch(e)) => return Err(e.into()),
        Err(other) => return Err(CliError::Usage(other.to_string())),
    };
    eprintln!(
        "{} L={} counters={}: ks={:.6} max_rank_error={}",
        report.sketch_name, report.universe_bits, report.counters, report.ks, report.max_rank_error
    );
    for answer in &report.quantiles {
        eprintln!("  q={}: estimate={:?} exact={:?}", answer.q, answer.estimate, answer.exact);
    }
    emit(&(report.to_json() + "\n"), a.out.as_deref())?;
    match failure {
        Some(m) => Err(CliError::Guarantee(m)),
        None => Ok(()),
    }
}

fn cmd_adversary(a: AdversaryArgs) -> CliResult {
    let adv = adversarial_stream(a.epsilon, a.alpha)?;
    if let Some(path) = &a.stream_out {
        write_stream_file(&adv.stream, path)?;
    }
    let policy = match a.sketch {
        CounterSketch::Lazy => SketchPolicy::LazyDelete,
        CounterSketch::Ssp => SketchPolicy::ActiveDelete,
    };
    let config = SketchConfig::with_capacity(a.epsilon, a.alpha, policy, a.counters)?.permissive();
    let mut sketch = SpaceSavingSketch::new(config)?;
    for op in &adv.stream.ops {
        sketch.update(op.item, op.weight())?;
    }
    let oracle = ExactCounter::from_ops(&adv.stream.ops)?;
    let truth = oracle.frequent(a.epsilon);
    let reported: BTreeSet<ItemId> = match policy {
        SketchPolicy::ActiveDelete => sketch.report_positive(),
        _ => sketch.report_threshold(a.epsilon),
    }
    .into_iter()
    .map(|(x, _)| x)
    .collect();
    let missed: Vec<ItemId> = truth.difference(&reported).copied().collect();
    let recall = (truth.len() - missed.len()) as f64 / truth.len() as f64;
    let required = capacity_for(a.epsilon, a.alpha, policy)?;
    let report = json!({
        "sketch_name": policy.short_name(),
        "epsilon": a.epsilon,
        "alpha": a.alpha,
        "counters": a.counters,
        "items": adv.items,
        "guarantee_counters": required,
        "inserted": adv.stream.inserts(),
        "deleted": adv.stream.deletes(),
        "spared": adv.spared,
        "spared_frequency": oracle.freq(adv.spared),
        "spared_estimate": sketch.query(adv.spared),
        "missed": missed,
        "recall": recall,
        "violations": sketch.violations(),
    });
    emit(&(serde_json::to_string_pretty(&report).expect("json value") + "\n"), None)?;
    let verdict = if recall < 1.0 { "frequent item missed" } else { "all frequent items reported" };
    eprintln!("k={} alpha/epsilon={} recall={recall}: {verdict}", a.counters, adv.items);
    if a.counters >= required && recall < 1.0 {
        return Err(CliError::Guarantee(format!("recall {recall} with {} counters", a.counters)));
    }
    Ok(())
}

fn cmd_bench(a: BenchArgs) -> CliResult {
    let mut out = io::stdout().lock();
    writeln!(out, "sketch,length,ns_per_update")?;
    for &length in &a.lengths {
        let generator = GeneratorSpec {
            universe_bits: a.universe_bits,
            inserts: length,
            dist: Distribution::Zipf { s: a.s, permute: false },
            deletions: DeletionPlan::new(a.ratio, Default::default(), Default::default()),
        };
        let stream = generator.generate(a.seed)?;
        for &kind in &a.sketch {
            let mut spec = SketchSpec::new(kind, a.epsilon);
            spec.alpha = a.alpha;
            spec.counters = a.counters;
            let ns = bench_update(&spec, &stream, a.seed)?;
            writeln!(out, "{kind},{length},{ns:.3}")?;
        }
    }
    out.flush()?;
    Ok(())
}
