use std::fs;
use std::path::Path;

use anyhow::anyhow;
use serde::Serialize;

use hybridiq::channel::{sample_channel, sample_non_interacting};
use hybridiq::correlations::{
    araki_lieb_bound, monotonicity_report, mutual_information, mutual_information_relative,
    mutual_information_three_term, MonotonicityReport,
};
use hybridiq::io::{self, KernelJson, ValidationReport};
use hybridiq::locc::{as_hybrid_channels, initial_record_state, partial_transpose_min_eigenvalue, ppt_verdict, run};
use hybridiq::operator::von_neumann_entropy;
use hybridiq::properties::run_suite;
use hybridiq::random::{derive_seed, random_kernel, random_space, rng_from_seed};
use hybridiq::state::sample_state;
use hybridiq::{CMatrix, HybridChannel, HybridState};

use crate::output::{emit, json, num, opt_num, read, write_file, CliError, CliResult, Csv, Status};
use crate::{Cli, Command, EvolveArgs, Format, LoccArgs, MetricsArgs, RandKind, RandgenArgs};

pub fn dispatch(cli: &Cli) -> CliResult<Status> {
    match &cli.command {
        Command::Validate { paths } => validate(cli, paths),
        Command::Evolve(args) => evolve(cli, args),
        Command::Locc(args) => locc(cli, args),
        Command::Metrics(args) => metrics(cli, args),
        Command::Properties { suite, trials } => properties(cli, suite, *trials),
        Command::Randgen(args) => randgen(cli, args),
    }
}

fn format(cli: &Cli, default: Format) -> Format {
    cli.format.unwrap_or(default)
}

#[derive(Serialize)]
struct FileReport {
    path: String,
    #[serde(flatten, skip_serializing_if = "Option::is_none")]
    report: Option<ValidationReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<String>,
}

#[derive(Serialize)]
struct ValidateReport<'a> {
    passed: bool,
    files: &'a [FileReport],
}

fn validate(cli: &Cli, paths: &[std::path::PathBuf]) -> CliResult<Status> {
    let mut files = Vec::with_capacity(paths.len());
    let mut broken = false;
    for path in paths {
        let shown = path.display().to_string();
        let outcome = read(path).and_then(|text| io::validate_json(&text, cli.tol).map_err(CliError::from));
        match outcome {
            Ok(report) => {
                for c in report.checks.iter().filter(|c| !c.passed) {
                    match &c.detail {
                        Some(d) => eprintln!("{shown}: {} ({d})", c.name),
                        None => eprintln!("{shown}: {}", c.name),
                    }
                }
                files.push(FileReport { path: shown, report: Some(report), error: None });
            }
            Err(e) => {
                broken = true;
                eprintln!("{shown}: {e}");
                files.push(FileReport { path: shown, report: None, error: Some(e.to_string()) });
            }
        }
    }
    let passed = !broken && files.iter().all(|f| f.report.as_ref().is_some_and(|r| r.passed));
    let text = match format(cli, Format::Json) {
        Format::Json => json(&ValidateReport { passed, files: &files }),
        Format::Csv => {
            let mut csv = Csv::new(&["path", "kind", "check", "deviation", "tolerance", "passed", "detail"]);
            for f in &files {
                match (&f.report, &f.error) {
                    (Some(r), _) => {
                        let kind = serde_json::to_value(r.kind).expect("kind").as_str().unwrap_or("").to_string();
                        for c in &r.checks {
                            csv.row(&[
                                f.path.clone(),
                                kind.clone(),
                                c.name.clone(),
                                opt_num(c.deviation),
                                opt_num(c.tolerance),
                                c.passed.to_string(),
                                c.detail.clone().unwrap_or_default(),
                            ]);
                        }
                    }
                    (None, err) => csv.row(&[
                        f.path.clone(),
                        String::new(),
                        "Parse".into(),
                        String::new(),
                        String::new(),
                        "false".into(),
                        err.clone().unwrap_or_default(),
                    ]),
                }
            }
            csv.finish()
        }
    };
    emit(cli.out.as_deref(), &text)?;
    if broken {
        return Err(CliError::usage(anyhow!("some inputs could not be read or parsed")));
    }
    Ok(Status::from_passed(passed))
}

#[derive(Serialize)]
struct StepRow {
    step: usize,
    total_trace: f64,
    min_block_eigenvalue: f64,
    mutual_information: f64,
    distance_from_previous: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ppt_min_eigenvalue: Option<f64>,
}

fn step_row(
    step: usize,
    w: &HybridState,
    prev: Option<&HybridState>,
    split: Option<(usize, usize)>,
) -> CliResult<StepRow> {
    let distance = match prev {
        Some(p) if p.space().matches(w.space()) && p.qdim() == w.qdim() => Some(p.distance(w)?),
        _ => None,
    };
    let ppt = match split {
        Some((d1, d2)) => Some(partial_transpose_min_eigenvalue(&w.quantum_marginal(), d1, d2)?),
        None => None,
    };
    Ok(StepRow {
        step,
        total_trace: w.total_trace(),
        min_block_eigenvalue: w.min_block_eigenvalue()?,
        mutual_information: mutual_information(w)?,
        distance_from_previous: if step == 0 { None } else { distance },
        ppt_min_eigenvalue: ppt,
    })
}

fn load_pipeline(initial: &HybridState, paths: &[std::path::PathBuf]) -> CliResult<Vec<HybridChannel>> {
    let mut space = initial.space().clone();
    let mut out = Vec::with_capacity(paths.len());
    for path in paths {
        let text = read(path)?;
        let ch = io::channel_from_json(&text, Some(&space))
            .map_err(|e| CliError::from(e).context(format!("loading {}", path.display())))?;
        space = ch.dst().clone();
        out.push(ch);
    }
    Ok(out)
}

fn evolve(cli: &Cli, args: &EvolveArgs) -> CliResult<Status> {
    let text = read(&args.state)?;
    let mut w = io::state_from_json(&text)
        .map_err(|e| CliError::from(e).context(format!("loading {}", args.state.display())))?;
    let pipeline = load_pipeline(&w, &args.channels)?;
    if let Some((d1, d2)) = args.bipartite {
        if d1 * d2 != w.qdim() {
            return Err(CliError::usage(anyhow!(
                "--bipartite {d1},{d2} does not split quantum dimension {}",
                w.qdim()
            )));
        }
    }

    let mut rows = vec![step_row(0, &w, None, args.bipartite)?];
    for step in 1..=args.steps {
        let prev = w.clone();
        for (j, ch) in pipeline.iter().enumerate() {
            w = ch.apply(&w).map_err(|e| {
                CliError::from(e).context(format!("step {step}, channel {} ({})", j + 1, args.channels[j].display()))
            })?;
        }
        let split = args.bipartite.filter(|(d1, d2)| d1 * d2 == w.qdim());
        rows.push(step_row(step, &w, Some(&prev), split)?);
    }

    if let Some(path) = &args.final_state {
        write_file(path, &(io::state_to_json(&w) + "\n"))?;
    }
    if let Some((d1, d2)) = args.bipartite.filter(|(d1, d2)| d1 * d2 == w.qdim()) {
        eprintln!("final: {}", ppt_verdict(&w.quantum_marginal(), d1, d2)?);
    }

    let text = match format(cli, Format::Csv) {
        Format::Json => json(&rows),
        Format::Csv => {
            let mut header =
                vec!["step", "total_trace", "min_block_eigenvalue", "mutual_information", "distance_from_previous"];
            if args.bipartite.is_some() {
                header.push("ppt_min_eigenvalue");
            }
            let mut csv = Csv::new(&header);
            for r in &rows {
                let mut fields = vec![
                    r.step.to_string(),
                    num(r.total_trace),
                    num(r.min_block_eigenvalue),
                    num(r.mutual_information),
                    opt_num(r.distance_from_previous),
                ];
                if args.bipartite.is_some() {
                    fields.push(opt_num(r.ppt_min_eigenvalue));
                }
                csv.row(&fields);
            }
            csv.finish()
        }
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct RecordRow {
    record: String,
    probability: f64,
    mass: CMatrix,
}

#[derive(Serialize)]
struct PptSummary {
    min_eigenvalue: f64,
    verdict: String,
}

#[derive(Serialize)]
struct LoccReport {
    dims: [usize; 2],
    records: Vec<RecordRow>,
    output: CMatrix,
    ppt: PptSummary,
}

fn locc(cli: &Cli, args: &LoccArgs) -> CliResult<Status> {
    let proto = io::protocol_from_json(&read(&args.protocol)?)
        .map_err(|e| CliError::from(e).context(format!("loading {}", args.protocol.display())))?;
    let rho = io::matrix_from_json(&read(&args.rho)?)
        .map_err(|e| CliError::from(e).context(format!("loading {}", args.rho.display())))?;
    let result = run(&proto, &rho)?;
    let (d1, d2) = proto.dims();

    if let Some(dir) = &args.emit {
        fs::create_dir_all(dir)?;
        let initial = initial_record_state(&proto, &rho)?;
        write_file(&dir.join("initial_state.json"), &(io::state_to_json(&initial) + "\n"))?;
        for (r, ch) in as_hybrid_channels(&proto)?.iter().enumerate() {
            write_file(&dir.join(format!("channel_{}.json", r + 1)), &(io::channel_to_json(ch) + "\n"))?;
        }
    }

    let records: Vec<RecordRow> = result
        .branches
        .iter()
        .map(|b| RecordRow { record: b.record.to_string(), probability: b.mass.trace().re, mass: b.mass.clone() })
        .collect();
    let ppt = PptSummary {
        min_eigenvalue: partial_transpose_min_eigenvalue(&result.output, d1, d2)?,
        verdict: ppt_verdict(&result.output, d1, d2)?.to_string(),
    };
    let text = match format(cli, Format::Json) {
        Format::Json => json(&LoccReport { dims: [d1, d2], records, output: result.output, ppt }),
        Format::Csv => {
            let mut csv = Csv::new(&["record", "probability"]);
            for r in &records {
                csv.row(&[r.record.clone(), num(r.probability)]);
            }
            csv.finish()
        }
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(Status::Pass)
}

#[derive(Serialize)]
struct MetricsReport {
    cells: usize,
    qdim: usize,
    total_trace: f64,
    min_block_eigenvalue: f64,
    classical_masses: Vec<f64>,
    quantum_entropy: f64,
    mutual_information: f64,
    mutual_information_three_term: f64,
    mutual_information_relative: f64,
    araki_lieb_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    distance: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    monotonicity: Option<MonotonicityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    ppt: Option<PptSummary>,
}

fn load_state(path: &Path) -> CliResult<HybridState> {
    io::state_from_json(&read(path)?).map_err(|e| CliError::from(e).context(format!("loading {}", path.display())))
}

fn metrics(cli: &Cli, args: &MetricsArgs) -> CliResult<Status> {
    let w = load_state(&args.state)?;
    let rho = w.quantum_marginal();
    let distance = match &args.other {
        Some(p) => Some(w.distance(&load_state(p)?)?),
        None => None,
    };
    let monotonicity = match &args.channel {
        Some(p) => {
            let ch = io::channel_from_json(&read(p)?, Some(w.space()))
                .map_err(|e| CliError::from(e).context(format!("loading {}", p.display())))?;
            Some(monotonicity_report(&w, &ch)?)
        }
        None => None,
    };
    let ppt = match args.bipartite {
        Some((d1, d2)) => Some(PptSummary {
            min_eigenvalue: partial_transpose_min_eigenvalue(&rho, d1, d2)?,
            verdict: ppt_verdict(&rho, d1, d2)?.to_string(),
        }),
        None => None,
    };
    let report = MetricsReport {
        cells: w.cells(),
        qdim: w.qdim(),
        total_trace: w.total_trace(),
        min_block_eigenvalue: w.min_block_eigenvalue()?,
        classical_masses: w.classical_marginal().masses,
        quantum_entropy: von_neumann_entropy(&rho)?,
        mutual_information: mutual_information(&w)?,
        mutual_information_three_term: mutual_information_three_term(&w)?,
        mutual_information_relative: mutual_information_relative(&w)?,
        araki_lieb_bound: araki_lieb_bound(&w)?,
        distance,
        monotonicity,
        ppt,
    };
    let violated = report.monotonicity.as_ref().is_some_and(|m| m.violation);
    let text = match format(cli, Format::Json) {
        Format::Json => json(&report),
        Format::Csv => {
            let mut csv = Csv::new(&["metric", "value"]);
            let mut put = |k: &str, v: f64| csv.row(&[k.to_string(), num(v)]);
            put("total_trace", report.total_trace);
            put("min_block_eigenvalue", report.min_block_eigenvalue);
            put("quantum_entropy", report.quantum_entropy);
            put("mutual_information", report.mutual_information);
            put("mutual_information_three_term", report.mutual_information_three_term);
            put("mutual_information_relative", report.mutual_information_relative);
            put("araki_lieb_bound", report.araki_lieb_bound);
            if let Some(d) = report.distance {
                put("distance", d);
            }
            if let Some(m) = &report.monotonicity {
                put("I_before", m.i_before);
                put("I_after", m.i_after);
            }
            if let Some(p) = &report.ppt {
                put("ppt_min_eigenvalue", p.min_eigenvalue);
            }
            csv.finish()
        }
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(Status::from_passed(!violated))
}

fn properties(cli: &Cli, suite: &str, trials: usize) -> CliResult<Status> {
    let report = run_suite(suite, trials, cli.seed)?;
    for p in report.properties.iter().filter(|p| p.violations > 0) {
        eprintln!("{}: {} of {} checks above {:e}", p.name, p.violations, p.checks, p.tolerance);
    }
    for e in &report.errors {
        eprintln!("{e}");
    }
    let text = match format(cli, Format::Json) {
        Format::Json => json(&report),
        Format::Csv => {
            let mut csv = Csv::new(&["property", "tolerance", "checks", "violations", "max_deviation"]);
            for p in &report.properties {
                csv.row(&[
                    p.name.clone(),
                    num(p.tolerance),
                    p.checks.to_string(),
                    p.violations.to_string(),
                    num(p.max_deviation),
                ]);
            }
            csv.finish()
        }
    };
    emit(cli.out.as_deref(), &text)?;
    Ok(Status::from_passed(report.passed))
}

fn randgen(cli: &Cli, args: &RandgenArgs) -> CliResult<Status> {
    if format(cli, Format::Json) == Format::Csv {
        return Err(CliError::usage(anyhow!("randgen writes JSON documents only")));
    }
    let label = format!("randgen/{:?}", args.kind);
    let mut rng = rng_from_seed(derive_seed(cli.seed, &label));
    let dst_cells = args.dst_cells.unwrap_or(args.cells);
    let text = match args.kind {
        RandKind::Space => io::to_json(&random_space(&mut rng, args.cells)),
        RandKind::Kernel => {
            let src = random_space(&mut rng, args.cells);
            let dst = random_space(&mut rng, dst_cells);
            io::to_json(&KernelJson::from_kernel(&random_kernel(&mut rng, &src, &dst, true)))
        }
        RandKind::State => {
            let space = random_space(&mut rng, args.cells);
            let rank = args.rank.unwrap_or(args.qdim).clamp(1, args.qdim.max(1));
            io::state_to_json(&sample_state(&mut rng, &space, args.qdim, rank, false))
        }
        RandKind::Channel => {
            let src = random_space(&mut rng, args.cells);
            let dst = random_space(&mut rng, dst_cells);
            let qdim_dst = args.qdim_dst.unwrap_or(args.qdim);
            io::channel_to_json(&sample_channel(&mut rng, &src, &dst, args.qdim, qdim_dst, args.branching)?)
        }
        RandKind::NonInteracting => {
            let src = random_space(&mut rng, args.cells);
            let dst = random_space(&mut rng, dst_cells);
            io::channel_to_json(&sample_non_interacting(&mut rng, &src, &dst, args.qdim, args.branching)?)
        }
        RandKind::Protocol => io::protocol_to_json(&hybridiq::locc::random_protocol(
            &mut rng,
            args.dims,
            args.rounds.max(1),
            args.max_outcomes.max(1),
        )?),
    };
    emit(cli.out.as_deref(), &(text + "\n"))?;
    Ok(Status::Pass)
}
