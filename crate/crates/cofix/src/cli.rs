//! Command surface wiring the library into workflow stages.
//!
//! Exit codes: 0 success, 1 domain error, 2 usage error. Every run
//! writes a manifest under the reports directory.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::alignment::{train_toy_dpo, DpoConfig, PreferenceExample, ToyPolicy};
use crate::config::RunConfig;
use crate::data::{
    compute_stats, default_error_free_predicate, difficulty_counts, filter_duplicate_solutions,
    filter_error_free, line_overlap, load_dataset, serialize_dataset, Dataset, TestCase,
    TestProvenance,
};
use crate::error::{Error, Result};
use crate::gateway::{render_prompt, Gateway, ModelRole, PromptFields, SamplingConfig};
use crate::manifest::RunManifest;
use crate::metrics::{
    err, error_detection_rate, error_type_breakdown, pass_at_1, ErrorType, EvalReport, Percent,
    ProblemResult,
};
use crate::pipeline::{
    build_preference_set, build_sft_records, edit_once, iterative_edit, EditContext, EditOutcome,
};
use crate::selector::{derive_selector_examples, train_toy_selector, GatewayScorer};
use crate::testgen::{extract_test_inputs, synthesize_test_cases};

#[derive(Parser, Debug)]
#[command(name = "cofix", version, about = "Feedback-augmented code editing pipeline")]
struct Cli {
    /// TOML config file.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Route every model role to the mock backend with this script.
    #[arg(long, global = true, value_name = "SCRIPT")]
    mock: Option<PathBuf>,

    /// Backend to bind for all roles (mock | http | toy).
    #[arg(long, global = true)]
    backend: Option<String>,

    /// Pipeline mode (no_feedback | sft_feedback | pref_feedback |
    /// pref_feedback_with_selection).
    #[arg(long, global = true)]
    mode: Option<String>,

    /// Feedback candidates sampled per instance.
    #[arg(short = 'k', long = "k-candidates", global = true)]
    k_candidates: Option<usize>,

    /// Instance-level workers for preference-set construction.
    #[arg(long, global = true)]
    workers: Option<usize>,

    /// Sandbox worker pool size (0 = logical cores).
    #[arg(long, global = true)]
    sandbox_workers: Option<usize>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Reports directory (defaults to <out>/reports).
    #[arg(long, global = true, value_name = "DIR")]
    reports: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Validate a dataset file and write its canonical form.
    Ingest {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute corpus statistics.
    Stats {
        #[arg(long)]
        input: Option<PathBuf>,
    },
    /// Line-overlap analysis between training solutions and a benchmark corpus.
    Overlap {
        /// JSONL of {"code": ...} records.
        #[arg(long)]
        train: PathBuf,
        /// JSONL of {"code": ...} records.
        #[arg(long)]
        benchmark: PathBuf,
    },
    /// Propose inputs with the testgen model and synthesize test cases by
    /// running each problem's golden solution.
    Testgen {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fill in missing feedback via the annotator model.
    Annotate {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Re-annotate instances that already have feedback.
        #[arg(long)]
        overwrite: bool,
    },
    /// Apply the error-free-feedback and duplicate-solution filters.
    Filter {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        skip_error_free: bool,
        #[arg(long)]
        skip_duplicates: bool,
    },
    /// Export supervised fine-tuning records.
    BuildSft {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Construct the preference set by sampling, editing, and judging.
    BuildPrefs {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Which critic snapshot to sample from (sft | pref).
        #[arg(long, default_value = "sft")]
        critic: String,
    },
    /// Expand preference pairs into labeled selector examples.
    DeriveSelector {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Preference-pair JSONL from build-prefs.
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        output: Option<PathBuf>,
        /// Also train the toy logistic selector on the examples.
        #[arg(long)]
        train_toy: bool,
        #[arg(long, default_value_t = 200)]
        epochs: usize,
        #[arg(long, default_value_t = 0.5)]
        lr: f64,
    },
    /// Run one editing round on a problem.
    Edit {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        problem: String,
        /// Wrong code to edit; defaults to the problem's first instance.
        #[arg(long)]
        code_file: Option<PathBuf>,
    },
    /// Iteratively edit gated by sample tests.
    EditIter {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        problem: String,
        #[arg(long)]
        code_file: Option<PathBuf>,
        /// JSONL of {"input", "expected_output"} sample tests, disjoint
        /// from the problem's hidden tests.
        #[arg(long)]
        sample_tests: PathBuf,
    },
    /// Aggregate per-problem results into an evaluation report.
    Evaluate {
        /// JSONL of per-problem result records.
        #[arg(long)]
        results: PathBuf,
    },
    /// Train the toy policy on a deterministic preference fixture and
    /// emit the loss trace.
    DpoDemo {
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0.1)]
        lr: f64,
        #[arg(long, default_value_t = 0.1)]
        beta: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

/// Parse and run; returns the process exit code.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            1
        }
    }
}

fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut config = RunConfig::load(cli.config.as_deref())?;
    if let Some(script) = &cli.mock {
        config.backend.kind = "mock".into();
        config.backend.config.mock_script = Some(script.to_string_lossy().into_owned());
    }
    if let Some(backend) = &cli.backend {
        config.backend.kind = backend.clone();
    }
    if let Some(mode) = &cli.mode {
        config.pipeline.mode = mode.clone();
    }
    if let Some(k) = cli.k_candidates {
        config.pipeline.k_candidates = k;
    }
    if let Some(workers) = cli.workers {
        config.pipeline.workers = workers;
    }
    if let Some(workers) = cli.sandbox_workers {
        config.sandbox.workers = workers;
    }
    if let Some(out) = &cli.out {
        config.paths.out = Some(out.to_string_lossy().into_owned());
    }
    if let Some(reports) = &cli.reports {
        config.paths.reports = Some(reports.to_string_lossy().into_owned());
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let config = resolve_config(&cli)?;
    let out_dir = config.paths.out_dir();
    fs::create_dir_all(&out_dir)?;
    let mut manifest = RunManifest::new(subcommand_name(&cli.command), config.config_hash());

    match &cli.command {
        Command::Ingest { input, output } => {
            let dataset = load_dataset_from(&config, input.as_deref())?;
            let path = output.clone().unwrap_or_else(|| out_dir.join("dataset.jsonl"));
            fs::write(&path, serialize_dataset(&dataset))?;
            let difficulties = difficulty_counts(&dataset);
            println!("ingested {} problems, {} instances -> {}",
                dataset.n_problems(), dataset.n_instances(), path.display());
            println!("difficulty stratification (problems per level):");
            for (level, count) in &difficulties {
                println!("  level {level}: {count}");
            }
            manifest
                .count("problems", dataset.n_problems() as u64)
                .count("instances", dataset.n_instances() as u64);
        }
        Command::Stats { input } => {
            let dataset = load_dataset_from(&config, input.as_deref())?;
            let stats = compute_stats(&dataset);
            let path = out_dir.join("stats.json");
            fs::write(&path, serde_json::to_string_pretty(&stats)?)?;
            print_stats_table(&stats);
            println!("stats written to {}", path.display());
            manifest
                .count("problems", stats.n_problems as u64)
                .count("instances", stats.n_instances as u64);
        }
        Command::Overlap { train, benchmark } => {
            let train_codes = read_code_records(train)?;
            let bench_codes = read_code_records(benchmark)?;
            let report = line_overlap(&train_codes, &bench_codes);
            let path = out_dir.join("overlap.json");
            fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            println!("line-overlap fractions over {} train solutions:", report.per_solution.len());
            for (i, count) in report.histogram.iter().enumerate() {
                println!("  [{:.1}, {:.1}): {count}", i as f64 / 10.0, (i + 1) as f64 / 10.0);
            }
            manifest.count("train_solutions", train_codes.len() as u64);
        }
        Command::Testgen { input, output } => {
            let dataset = load_dataset_from(&config, input.as_deref())?;
            let gateway = config.build_gateway()?;
            let sandbox = config.build_sandbox()?;
            let augmented = run_testgen(&config, &dataset, &gateway, &sandbox, &mut manifest)?;
            let path = output.clone().unwrap_or_else(|| out_dir.join("dataset_with_tests.jsonl"));
            fs::write(&path, serialize_dataset(&augmented))?;
            println!("augmented dataset written to {}", path.display());
        }
        Command::Annotate { input, output, overwrite } => {
            let dataset = load_dataset_from(&config, input.as_deref())?;
            let gateway = config.build_gateway()?;
            let annotated = run_annotate(&dataset, &gateway, *overwrite, &mut manifest)?;
            let path = output.clone().unwrap_or_else(|| out_dir.join("dataset_annotated.jsonl"));
            fs::write(&path, serialize_dataset(&annotated))?;
            println!("annotated dataset written to {}", path.display());
        }
        Command::Filter { input, output, skip_error_free, skip_duplicates } => {
            let mut dataset = load_dataset_from(&config, input.as_deref())?;
            if !skip_error_free {
                let outcome = filter_error_free(&dataset, default_error_free_predicate)?;
                manifest.count("removed_error_free", outcome.removed as u64);
                println!("error-free feedback filter removed {}", outcome.removed);
                dataset = outcome.dataset;
            }
            if !skip_duplicates {
                let outcome = filter_duplicate_solutions(&dataset);
                manifest.count("removed_duplicates", outcome.removed as u64);
                println!("duplicate-solution filter removed {}", outcome.removed);
                dataset = outcome.dataset;
            }
            let path = output.clone().unwrap_or_else(|| out_dir.join("dataset_filtered.jsonl"));
            fs::write(&path, serialize_dataset(&dataset))?;
            println!("filtered dataset written to {}", path.display());
            manifest.count("instances_remaining", dataset.n_instances() as u64);
        }
        Command::BuildSft { input, output } => {
            let dataset = load_dataset_from(&config, input.as_deref())?;
            let records = build_sft_records(&dataset)?;
            let path = output.clone().unwrap_or_else(|| out_dir.join("sft_records.jsonl"));
            write_jsonl(&path, &records)?;
            println!("{} supervised records written to {}", records.len(), path.display());
            manifest.count("records", records.len() as u64);
        }
        Command::BuildPrefs { input, output, critic } => {
            let dataset = load_dataset_from(&config, input.as_deref())?;
            let gateway = config.build_gateway()?;
            let sandbox = config.build_sandbox()?;
            let pipeline = config.pipeline_config()?;
            let critic_role = match critic.as_str() {
                "sft" => ModelRole::CriticSft,
                "pref" => ModelRole::CriticPref,
                other => return Err(Error::Config(format!("unknown critic '{other}' (sft | pref)"))),
            };
            let outcome = build_preference_set(&gateway, &sandbox, &dataset, &pipeline, critic_role)?;
            let path = output.clone().unwrap_or_else(|| out_dir.join("preference_pairs.jsonl"));
            write_jsonl(&path, &outcome.pairs)?;
            println!(
                "{} preference pairs written to {} ({} degenerate instances skipped)",
                outcome.pairs.len(),
                path.display(),
                outcome.skipped
            );
            manifest
                .count("pairs", outcome.pairs.len() as u64)
                .count("skipped", outcome.skipped as u64);
        }
        Command::DeriveSelector { input, pairs, output, train_toy, epochs, lr } => {
            let dataset = load_dataset_from(&config, input.as_deref())?;
            let pair_list: Vec<crate::pipeline::PreferencePair> = read_jsonl(pairs)?;
            let examples = derive_selector_examples(&dataset, &pair_list)?;
            let path = output.clone().unwrap_or_else(|| out_dir.join("selector_examples.jsonl"));
            write_jsonl(&path, &examples)?;
            println!("{} selector examples written to {}", examples.len(), path.display());
            manifest.count("examples", examples.len() as u64);
            if *train_toy {
                let (scorer, accuracy) = train_toy_selector(&examples, *epochs, *lr)?;
                let weights_path = out_dir.join("selector_weights.txt");
                fs::write(&weights_path, scorer.to_table_str())?;
                println!("toy selector accuracy {accuracy:.4}; weights at {}", weights_path.display());
            }
        }
        Command::Edit { input, problem, code_file } => {
            let dataset = load_dataset_from(&config, input.as_deref())?;
            let outcome = run_edit(&config, &dataset, problem, code_file.as_deref())?;
            let path = out_dir.join("edit_outcome.json");
            fs::write(&path, serde_json::to_string_pretty(&outcome)?)?;
            print_edit_summary(&outcome);
            println!("outcome written to {}", path.display());
            manifest.count("candidates", outcome.candidates.len() as u64);
        }
        Command::EditIter { input, problem, code_file, sample_tests } => {
            let dataset = load_dataset_from(&config, input.as_deref())?;
            let samples = read_sample_tests(sample_tests)?;
            let outcomes =
                run_edit_iter(&config, &dataset, problem, code_file.as_deref(), &samples)?;
            let path = out_dir.join("edit_iterations.json");
            fs::write(&path, serde_json::to_string_pretty(&outcomes)?)?;
            println!("{} editing rounds written to {}", outcomes.len(), path.display());
            manifest.count("rounds", outcomes.len() as u64);
        }
        Command::Evaluate { results } => {
            let report = run_evaluate(results)?;
            let path = out_dir.join("eval_report.json");
            fs::write(&path, serde_json::to_string_pretty(&report)?)?;
            print_eval_table(&report);
            println!("report written to {}", path.display());
        }
        Command::DpoDemo { steps, lr, beta, seed } => {
            run_dpo_demo(&out_dir, *steps, *lr, *beta, *seed, &mut manifest)?;
        }
    }
    manifest.write(&config.paths.reports_dir())?;
    Ok(())
}

fn subcommand_name(command: &Command) -> &'static str {
    match command {
        Command::Ingest { .. } => "ingest",
        Command::Stats { .. } => "stats",
        Command::Overlap { .. } => "overlap",
        Command::Testgen { .. } => "testgen",
        Command::Annotate { .. } => "annotate",
        Command::Filter { .. } => "filter",
        Command::BuildSft { .. } => "build-sft",
        Command::BuildPrefs { .. } => "build-prefs",
        Command::DeriveSelector { .. } => "derive-selector",
        Command::Edit { .. } => "edit",
        Command::EditIter { .. } => "edit-iter",
        Command::Evaluate { .. } => "evaluate",
        Command::DpoDemo { .. } => "dpo-demo",
    }
}

fn load_dataset_from(config: &RunConfig, flag: Option<&Path>) -> Result<Dataset> {
    let path = flag
        .map(Path::to_path_buf)
        .or_else(|| config.paths.dataset.as_ref().map(PathBuf::from))
        .ok_or_else(|| Error::Config("no dataset: pass --input or set paths.dataset".into()))?;
    let file = fs::File::open(&path)
        .map_err(|e| Error::Config(format!("cannot open dataset {}: {e}", path.display())))?;
    load_dataset(BufReader::new(file))
}

#[derive(Serialize, Deserialize)]
struct CodeRecord {
    code: String,
}

fn read_code_records(path: &Path) -> Result<Vec<String>> {
    let records: Vec<CodeRecord> = read_jsonl(path)?;
    Ok(records.into_iter().map(|r| r.code).collect())
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l).map_err(|e| Error::MalformedRecord {
                line: i + 1,
                message: e.to_string(),
            })
        })
        .collect()
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut out = String::new();
    for item in items {
        out.push_str(&serde_json::to_string(item)?);
        out.push('\n');
    }
    fs::write(path, out)?;
    Ok(())
}

fn run_testgen(
    config: &RunConfig,
    dataset: &Dataset,
    gateway: &Gateway,
    sandbox: &Sandbox,
    manifest: &mut RunManifest,
) -> Result<Dataset> {
    let mut augmented = dataset.clone();
    let mut cases_added = 0u64;
    let mut discarded = 0u64;
    let mut unterminated = 0u64;
    let mut skipped = 0u64;
    let limits = &config.limits;
    for problem in dataset.problems() {
        let Some(input_format) = problem.input_format.as_deref() else {
            skipped += 1;
            continue;
        };
        let Some(golden) = dataset
            .instances()
            .iter()
            .find(|i| i.problem_id == problem.id)
            .map(|i| i.correct_code.clone())
        else {
            skipped += 1;
            continue;
        };
        let prompt = render_prompt(
            ModelRole::Testgen,
            &PromptFields::Testgen { input_format, golden_code: &golden },
        )?;
        let completion = gateway.complete(ModelRole::Testgen, &prompt, &config.sampling)?;
        let extracted = extract_test_inputs(&completion.text);
        unterminated += extracted.dropped_unterminated as u64;
        let synthesis =
            synthesize_test_cases(problem, &golden, &extracted.inputs, sandbox, limits)?;
        discarded += synthesis.discarded.len() as u64;
        if synthesis.is_empty() {
            eprintln!("warning: no synthetic tests survived for problem '{}'", problem.id);
        }
        cases_added += synthesis.cases.len() as u64;
        augmented = augmented.with_test_cases(&problem.id, synthesis.cases);
    }
    println!("added {cases_added} synthetic tests ({discarded} inputs discarded, {skipped} problems skipped)");
    manifest
        .count("cases_added", cases_added)
        .count("inputs_discarded", discarded)
        .count("blocks_unterminated", unterminated)
        .count("problems_skipped", skipped);
    Ok(augmented)
}

use crate::sandbox::Sandbox;

fn run_annotate(
    dataset: &Dataset,
    gateway: &Gateway,
    overwrite: bool,
    manifest: &mut RunManifest,
) -> Result<Dataset> {
    let mut annotated = dataset.clone();
    let sampling = SamplingConfig::annotation();
    let mut count = 0u64;
    for (index, inst) in dataset.instances().iter().enumerate() {
        if inst.feedback.is_some() && !overwrite {
            continue;
        }
        let problem = dataset.problem(&inst.problem_id).expect("referential integrity");
        let prompt = render_prompt(
            ModelRole::Annotator,
            &PromptFields::Annotator {
                description: &problem.description,
                wrong_code: &inst.wrong_code,
                correct_code: &inst.correct_code,
            },
        )?;
        let completion = gateway.complete(ModelRole::Annotator, &prompt, &sampling)?;
        annotated = annotated.with_feedback(index, completion.text);
        count += 1;
    }
    println!("annotated {count} instances");
    manifest.count("annotated", count);
    Ok(annotated)
}

fn wrong_code_for(dataset: &Dataset, problem_id: &str, code_file: Option<&Path>) -> Result<String> {
    if let Some(path) = code_file {
        return Ok(fs::read_to_string(path)?);
    }
    dataset
        .instances()
        .iter()
        .find(|i| i.problem_id == problem_id)
        .map(|i| i.wrong_code.clone())
        .ok_or_else(|| {
            Error::Config(format!(
                "no --code-file given and no instance found for problem '{problem_id}'"
            ))
        })
}

fn run_edit(
    config: &RunConfig,
    dataset: &Dataset,
    problem_id: &str,
    code_file: Option<&Path>,
) -> Result<EditOutcome> {
    let problem = dataset
        .problem(problem_id)
        .ok_or_else(|| Error::Config(format!("unknown problem '{problem_id}'")))?;
    let wrong_code = wrong_code_for(dataset, problem_id, code_file)?;
    let gateway = config.build_gateway()?;
    let sandbox = config.build_sandbox()?;
    let pipeline = config.pipeline_config()?;
    let scorer = GatewayScorer::new(&gateway);
    let ctx = EditContext {
        gateway: &gateway,
        sandbox: &sandbox,
        scorer: Some(&scorer),
        problem,
        wrong_code: &wrong_code,
        config: &pipeline,
    };
    edit_once(&ctx)
}

fn run_edit_iter(
    config: &RunConfig,
    dataset: &Dataset,
    problem_id: &str,
    code_file: Option<&Path>,
    sample_tests: &[TestCase],
) -> Result<Vec<EditOutcome>> {
    let problem = dataset
        .problem(problem_id)
        .ok_or_else(|| Error::Config(format!("unknown problem '{problem_id}'")))?;
    let wrong_code = wrong_code_for(dataset, problem_id, code_file)?;
    let gateway = config.build_gateway()?;
    let sandbox = config.build_sandbox()?;
    let pipeline = config.pipeline_config()?;
    let scorer = GatewayScorer::new(&gateway);
    let ctx = EditContext {
        gateway: &gateway,
        sandbox: &sandbox,
        scorer: Some(&scorer),
        problem,
        wrong_code: &wrong_code,
        config: &pipeline,
    };
    iterative_edit(&ctx, sample_tests)
}

#[derive(Deserialize)]
struct SampleTestRecord {
    input: String,
    expected_output: String,
}

fn read_sample_tests(path: &Path) -> Result<Vec<TestCase>> {
    let records: Vec<SampleTestRecord> = read_jsonl(path)?;
    Ok(records
        .into_iter()
        .map(|r| TestCase {
            input: r.input,
            expected_output: r.expected_output,
            provenance: TestProvenance::Benchmark,
        })
        .collect())
}

/// Per-problem evaluation input: the outcome flags plus optional material
/// for the detection-rate metric.
#[derive(Debug, Serialize, Deserialize)]
struct EvalInputRecord {
    problem_id: String,
    #[serde(default)]
    passed_before: Option<bool>,
    passed_after: bool,
    #[serde(default)]
    error_type: Option<ErrorType>,
    #[serde(default)]
    wrong_code: Option<String>,
    #[serde(default)]
    edited_code: Option<String>,
    #[serde(default)]
    error_line_indices: Option<Vec<usize>>,
}

fn run_evaluate(results_path: &Path) -> Result<EvalReport> {
    let records: Vec<EvalInputRecord> = read_jsonl(results_path)?;
    let results: Vec<ProblemResult> = records
        .iter()
        .map(|r| ProblemResult {
            problem_id: r.problem_id.clone(),
            passed_before: r.passed_before,
            passed_after: r.passed_after,
            error_type: r.error_type,
        })
        .collect();
    let pass = pass_at_1(&results)?;

    let err_value = if results.iter().all(|r| r.passed_before.is_some()) {
        let before = 100.0
            * results.iter().filter(|r| r.passed_before == Some(true)).count() as f64
            / results.len() as f64;
        err(before, pass.exact).ok()
    } else {
        None
    };

    // Detection rate averages the per-problem rates.
    let mut detection_rates = Vec::new();
    for r in &records {
        if let (Some(wrong), Some(edited), Some(indices)) =
            (&r.wrong_code, &r.edited_code, &r.error_line_indices)
        {
            detection_rates.push(error_detection_rate(wrong, edited, indices)?.exact);
        }
    }
    let detection_rate = if detection_rates.is_empty() {
        None
    } else {
        Some(Percent::new(
            detection_rates.iter().sum::<f64>() / detection_rates.len() as f64,
        ))
    };

    let per_type = if results.iter().all(|r| r.error_type.is_some()) {
        error_type_breakdown(&results)?
    } else {
        BTreeMap::new()
    };

    Ok(EvalReport { pass_at_1: pass, err: err_value, detection_rate, per_type })
}

fn run_dpo_demo(
    out_dir: &Path,
    steps: usize,
    lr: f64,
    beta: f64,
    seed: u64,
    manifest: &mut RunManifest,
) -> Result<()> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let vocab: Vec<String> =
        ["fix", "the", "loop", "bound", "off", "by"].iter().map(|s| s.to_string()).collect();
    let v = vocab.len();
    let logits: Vec<Vec<f64>> =
        (0..=v).map(|_| (0..v).map(|_| rng.gen_range(-1.0..1.0)).collect()).collect();
    let reference = ToyPolicy::new(vocab, logits)?;
    let pairs = vec![
        PreferenceExample::new(&["fix"], &["the", "loop", "bound"], &["off", "by", "the"]),
        PreferenceExample::new(&["loop"], &["bound", "off"], &["the", "the"]),
        PreferenceExample::new(&[], &["fix", "the"], &["by", "off"]),
    ];
    let config = DpoConfig { beta, learning_rate: lr, steps };
    let (_, trace) = train_toy_dpo(&reference, &reference, &pairs, &config)?;

    #[derive(Serialize)]
    struct TracePoint {
        step: usize,
        loss: f64,
    }
    let mut points: Vec<TracePoint> = trace
        .losses
        .iter()
        .enumerate()
        .map(|(step, loss)| TracePoint { step, loss: *loss })
        .collect();
    points.push(TracePoint { step: steps, loss: trace.final_loss });
    write_jsonl(&out_dir.join("dpo_trace.jsonl"), &points)?;

    let first = trace.losses.first().copied().unwrap_or(trace.final_loss);
    println!("preference-tuning demo: {} pairs, {steps} steps, beta {beta}", pairs.len());
    println!("  initial mean loss: {first:.6} (ln 2 = {:.6})", std::f64::consts::LN_2);
    println!("  final mean loss:   {:.6}", trace.final_loss);
    println!("trace written to {}", out_dir.join("dpo_trace.jsonl").display());
    manifest.count("steps", steps as u64).count("pairs", pairs.len() as u64);
    Ok(())
}

fn print_stats_table(stats: &crate::data::DatasetStats) {
    println!("dataset statistics");
    println!("  instances                 {}", stats.n_instances);
    println!("  problems                  {}", stats.n_problems);
    println!("  avg solution len          {:.1}", stats.avg_solution_len);
    println!("  avg wrong code len        {:.1}", stats.avg_wrong_code_len);
    println!("  avg feedback len          {:.1}", stats.avg_feedback_len);
    println!("  avg description len       {:.1}", stats.avg_description_len);
    println!("  avg error lines per code  {:.2}", stats.avg_error_lines);
    println!("  avg submissions per user  {:.1}", stats.avg_submissions_per_user);
    println!("  avg tests per problem     {:.1}", stats.avg_tests_per_problem);
}

fn print_edit_summary(outcome: &EditOutcome) {
    match &outcome.selected_feedback {
        Some(fb) => println!("selected feedback: {fb}"),
        None => println!("edited without feedback"),
    }
    match &outcome.judge_report {
        Some(report) => println!(
            "hidden tests: {} ({}/{} passed)",
            if report.all_passed { "PASS" } else { "FAIL" },
            report.verdicts.iter().filter(|v| **v == crate::sandbox::Verdict::Pass).count(),
            report.verdicts.len()
        ),
        None => println!("no hidden tests available"),
    }
}

fn print_eval_table(report: &EvalReport) {
    println!("evaluation report");
    println!("  pass@1          {:>6.1}  (exact {:.4})", report.pass_at_1.rounded, report.pass_at_1.exact);
    if let Some(err) = &report.err {
        println!("  ERR             {:>6.1}  (exact {:.4})", err.rounded, err.exact);
    }
    if let Some(rate) = &report.detection_rate {
        println!("  detection rate  {:>6.1}  (exact {:.4})", rate.rounded, rate.exact);
    }
    if !report.per_type.is_empty() {
        println!("  pass@1 by error type:");
        for (ty, p) in &report.per_type {
            println!("    {:<16} {:>6.1}", ty.name(), p.rounded);
        }
    }
}
