use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use receval::data::{
    dataset_stats, load_events, segment_users, temporal_split, write_events, EventFormat,
};
use receval::error::StageExt;
use receval::harness::{self, render_report, Manifest, ReportFormat};
use receval::{synth, Dataset, Error, EvalConfig};

#[derive(Parser, Debug)]
#[command(name = "receval", version, about = "Offline evaluation of implicit-feedback recommenders")]
struct Cli {
    #[command(flatten)]
    common: Common,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Common {
    /// Flat TOML config file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override a config key, e.g. `--set als.factors=16` (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    sets: Vec<String>,

    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (results do not depend on this).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Train/test boundary (RFC 3339).
    #[arg(long, global = true)]
    boundary: Option<String>,

    /// Event file format; inferred from the extension when omitted.
    #[arg(long, global = true, value_parser = ["csv", "jsonl"])]
    format: Option<String>,

    /// More logging (repeatable).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    verbose: u8,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic retailer dataset into a directory.
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
    /// Print training/test summaries and segment shares.
    Stats {
        #[arg(long)]
        input: Option<PathBuf>,
        /// Also write stats.json and a manifest here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write the train and test periods as separate event files.
    Split {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Fit the ALS and forest models on the training period.
    Train {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the full evaluation and write report files.
    Evaluate {
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write each algorithm's top-k lists as JSONL.
        #[arg(long)]
        lists: bool,
    },
    /// Re-render a saved report.json.
    Report {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// json, csv, md or all.
        #[arg(long = "as", default_value = "all")]
        render: String,
    },
}

/// Failure with its exit status.
struct Failure {
    code: u8,
    message: String,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.root() {
            Error::InvalidConfig(_) | Error::InfeasibleTargets(_) => 1,
            Error::SingularSystem { .. } | Error::Serde(_) => 3,
            _ => 2,
        };
        Failure {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn usage(message: String) -> Failure {
    Failure { code: 1, message }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = match cli.common.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("receval: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}

fn load_config(common: &Common) -> CliResult<EvalConfig> {
    let text = match &common.config {
        Some(p) => fs::read_to_string(p).map_err(|e| Error::io(p, e)).stage("config")?,
        None => String::new(),
    };
    let mut sets = common.sets.clone();
    if let Some(s) = common.seed {
        sets.push(format!("seed={s}"));
        sets.push(format!("synth.seed={s}"));
    }
    if let Some(t) = common.threads {
        sets.push(format!("threads={t}"));
    }
    if let Some(b) = &common.boundary {
        sets.push(format!("boundary={b}"));
    }
    Ok(EvalConfig::from_toml(&text, &sets).stage("config")?)
}

fn event_format(common: &Common, path: &Path) -> CliResult<EventFormat> {
    match &common.format {
        Some(f) => Ok(f.parse().stage("config")?),
        None => EventFormat::from_path(path).ok_or_else(|| {
            usage(format!("cannot infer format of {}; pass --format csv|jsonl", path.display()))
        }),
    }
}

fn required(flag: Option<PathBuf>, from_cfg: &Option<PathBuf>, name: &str) -> CliResult<PathBuf> {
    flag.or_else(|| from_cfg.clone())
        .ok_or_else(|| usage(format!("missing --{name} (or `{name}` in the config file)")))
}

fn create_dir(dir: &Path) -> CliResult<()> {
    Ok(fs::create_dir_all(dir).map_err(|e| Error::io(dir, e)).stage("output")?)
}

/// Loads the input and records it (and any feature sidecars) in the manifest.
fn load_input(common: &Common, path: &Path, manifest: &mut Manifest) -> CliResult<Dataset> {
    let format = event_format(common, path)?;
    let data = load_events(path, format).stage("load")?;
    manifest.add_input(path).stage("load")?;
    let (u, i) = receval::data::io::sidecar_paths(path);
    for p in [u, i] {
        if p.exists() {
            manifest.add_input(&p).stage("load")?;
        }
    }
    Ok(data)
}

fn finish(manifest: &Manifest, out: &Path) -> CliResult<()> {
    Ok(manifest.write(&out.join("manifest.json")).stage("output")?)
}

fn run(cli: Cli) -> CliResult<()> {
    let mut cfg = load_config(&cli.common)?;
    let common = &cli.common;
    match cli.command {
        Command::Synth { out } => {
            create_dir(&out)?;
            let mut manifest = Manifest::new("synth", &cfg);
            let data = synth::generate_dataset(&cfg.synth).stage("synth")?;
            let fmt = match &common.format {
                Some(f) => f.parse().stage("config")?,
                None => EventFormat::Csv,
            };
            let ext = match fmt {
                EventFormat::Csv => "csv",
                EventFormat::Jsonl => "jsonl",
            };
            let path = out.join(format!("events.{ext}"));
            write_events(&data, &path, fmt).stage("output")?;
            let (u, i) = receval::data::io::sidecar_paths(&path);
            for p in [path, u, i] {
                manifest.add_output(&p).stage("output")?;
            }
            finish(&manifest, &out)?;
            println!("wrote {} events for {} users to {}", data.events().len(), data.users().len(), out.display());
        }
        Command::Stats { input, out } => {
            let input = required(input, &cfg.input, "input")?;
            cfg.input = Some(input.clone());
            let mut manifest = Manifest::new("stats", &cfg);
            let data = load_input(common, &input, &mut manifest)?;
            let boundary = cfg.resolve_boundary(&data).stage("split")?;
            let split = temporal_split(&data, boundary);
            let stats = dataset_stats(&split, &segment_users(&split));
            println!("Boundary: {}", boundary.to_rfc3339());
            print!("{stats}");
            if let Some(out) = out {
                create_dir(&out)?;
                let p = out.join("stats.json");
                let text = serde_json::to_string_pretty(&stats).map_err(Error::from).stage("output")?;
                fs::write(&p, text + "\n").map_err(|e| Error::io(&p, e)).stage("output")?;
                manifest.add_output(&p).stage("output")?;
                finish(&manifest, &out)?;
            }
        }
        Command::Split { input, out } => {
            let input = required(input, &cfg.input, "input")?;
            let out = required(out, &cfg.out, "out")?;
            cfg.input = Some(input.clone());
            create_dir(&out)?;
            let mut manifest = Manifest::new("split", &cfg);
            let data = load_input(common, &input, &mut manifest)?;
            let fmt = event_format(common, &input)?;
            let boundary = cfg.resolve_boundary(&data).stage("split")?;
            let split = temporal_split(&data, boundary);
            let ext = input.extension().and_then(|e| e.to_str()).unwrap_or("csv");
            for (name, part) in [("train", &split.train), ("test", &split.test)] {
                let p = out.join(format!("{name}.{ext}"));
                write_events(part, &p, fmt).stage("output")?;
                manifest.add_output(&p).stage("output")?;
            }
            finish(&manifest, &out)?;
            println!(
                "boundary {}: {} train / {} test events",
                boundary.to_rfc3339(),
                split.train.events().len(),
                split.test.events().len()
            );
        }
        Command::Train { input, out } => {
            let input = required(input, &cfg.input, "input")?;
            let out = required(out, &cfg.out, "out")?;
            cfg.input = Some(input.clone());
            cfg.validate().stage("config")?;
            create_dir(&out)?;
            let mut manifest = Manifest::new("train", &cfg);
            let data = load_input(common, &input, &mut manifest)?;
            let boundary = cfg.resolve_boundary(&data).stage("split")?;
            let split = temporal_split(&data, boundary);
            let models = harness::in_pool(cfg.threads, || harness::train_models(&cfg, &split.train))?;
            if let Some(m) = &models.als {
                write_json(&out.join("als.json"), m, &mut manifest)?;
            }
            if let Some(m) = &models.forest {
                write_json(&out.join("forest.json"), m, &mut manifest)?;
            }
            finish(&manifest, &out)?;
        }
        Command::Evaluate { input, out, lists } => {
            let input = required(input, &cfg.input, "input")?;
            let out = required(out, &cfg.out, "out")?;
            cfg.input = Some(input.clone());
            create_dir(&out)?;
            let mut manifest = Manifest::new("evaluate", &cfg);
            let data = load_input(common, &input, &mut manifest)?;
            let run = harness::run_evaluation_detailed(&cfg, &data)?;
            for f in ReportFormat::ALL {
                for p in render_report(&run.report, f, &out).stage("render")? {
                    manifest.add_output(&p).stage("output")?;
                }
            }
            if lists {
                let dir = out.join("lists");
                create_dir(&dir)?;
                for (alg, l) in &run.lists {
                    let p = dir.join(format!("{alg}.jsonl"));
                    let file = fs::File::create(&p).map_err(|e| Error::io(&p, e)).stage("output")?;
                    receval::recommend::write_jsonl(l, BufWriter::new(file)).stage("output")?;
                    manifest.add_output(&p).stage("output")?;
                }
            }
            finish(&manifest, &out)?;
            println!("wrote report to {}", out.display());
        }
        Command::Report { input, out, render } => {
            let formats: Vec<ReportFormat> = if render == "all" {
                ReportFormat::ALL.to_vec()
            } else {
                vec![render.parse().stage("config")?]
            };
            cfg.input = Some(input.clone());
            create_dir(&out)?;
            let mut manifest = Manifest::new("report", &cfg);
            manifest.add_input(&input).stage("load")?;
            let report = harness::read_report(&input).stage("load")?;
            for f in formats {
                for p in render_report(&report, f, &out).stage("render")? {
                    manifest.add_output(&p).stage("output")?;
                }
            }
            finish(&manifest, &out)?;
        }
    }
    Ok(())
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T, manifest: &mut Manifest) -> CliResult<()> {
    let text = serde_json::to_string(value).map_err(Error::from).stage("output")?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e)).stage("output")?;
    manifest.add_output(path).stage("output")?;
    Ok(())
}
