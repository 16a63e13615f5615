use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdoa::array::{write_dataset, DatasetMetadata};
use sdoa::bench::{self, ExperimentConfig};
use sdoa::estimators::Method;
use sdoa::net::{self, EpochRecord};
use sdoa::spectrum::sig12;
use sdoa::Error;

#[derive(Parser)]
#[command(
    name = "sdoa",
    version,
    about = "DOA estimation workbench for imperfect linear arrays"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML experiment file; defaults are used for anything it leaves out.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out_dir`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed (overrides `seed`).
    #[arg(long)]
    seed: Option<u64>,
    /// Run everything on one thread.
    #[arg(long)]
    single_thread: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a dataset file and its JSON sidecar.
    Simulate {
        #[command(flatten)]
        common: Common,
    },
    /// Train the network; writes the model and a per-epoch history CSV.
    Train {
        #[command(flatten)]
        common: Common,
        /// Model output path (default: OUT/model.bin).
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Overlay the spectra of every estimator on one synthesized snapshot.
    Spectrum {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated estimator names (overrides `estimators`).
        #[arg(long, value_delimiter = ',')]
        estimators: Option<Vec<String>>,
        /// Comma-separated source DOAs in degrees.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        doas: Option<Vec<f64>>,
        #[arg(long, allow_hyphen_values = true)]
        snr: Option<f64>,
        #[arg(long)]
        xi: Option<f64>,
    },
    /// RMSE against SNR.
    EvalSnr {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// RMSE against the imperfect factor.
    EvalImperfect {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
    },
}

enum Failure {
    Usage(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::Config(_) | Error::InvalidArgument(_) => Failure::Usage(e.to_string()),
            other => Failure::Runtime(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::Runtime(e.to_string())
    }
}

type CmdResult = Result<(), Failure>;

fn load_config(common: &Common) -> Result<ExperimentConfig, Failure> {
    let mut cfg = match &common.config {
        Some(p) => ExperimentConfig::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(out) = &common.out {
        cfg.out_dir = out.clone();
    }
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    Ok(cfg)
}

fn setup(cfg: &ExperimentConfig, single_thread: bool) -> CmdResult {
    if single_thread {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global()
            .map_err(|e| Failure::Runtime(e.to_string()))?;
    }
    std::fs::create_dir_all(&cfg.out_dir)
        .map_err(|e| Failure::Runtime(format!("cannot create {}: {e}", cfg.out_dir.display())))
}

fn prepare(common: &Common) -> Result<ExperimentConfig, Failure> {
    let cfg = load_config(common)?;
    setup(&cfg, common.single_thread)?;
    Ok(cfg)
}

fn load_model(
    path: Option<&Path>,
    methods: &[Method],
) -> Result<Option<net::NetworkParams>, Failure> {
    match path {
        Some(p) => {
            Ok(Some(net::load_model(p).map_err(|e| {
                Failure::Runtime(format!("{}: {e}", p.display()))
            })?))
        }
        None if methods.contains(&Method::Sdoanet) => {
            Err(Failure::Usage("the sdoanet estimator needs --model".into()))
        }
        None => Ok(None),
    }
}

fn simulate(common: &Common) -> CmdResult {
    let cfg = prepare(common)?;
    let s = &cfg.simulate;
    let snaps = sdoa::array::generate_dataset(
        &cfg.array,
        &cfg.caps,
        &s.schedule,
        s.n_samples,
        s.snr_range_db,
        &s.doa_policy,
        cfg.seed,
    )?;
    let stages: Vec<_> = (0..snaps.len()).map(|i| s.schedule.stage_for(i)).collect();
    let meta = DatasetMetadata::new(
        &cfg.array,
        &cfg.caps,
        &s.schedule,
        snaps.len(),
        s.snr_range_db,
        &s.doa_policy,
        cfg.seed,
    );
    let path = cfg.out_dir.join("dataset.bin");
    write_dataset(&path, &snaps, &stages, &meta)?;
    println!(
        "wrote {} samples (seed {}) to {}",
        snaps.len(),
        cfg.seed,
        path.display()
    );
    Ok(())
}

fn write_history(path: &Path, history: &[EpochRecord]) -> std::io::Result<()> {
    let mut text = String::from("epoch,stage,loss\n");
    for h in history {
        text.push_str(&format!(
            "{},{},{}\n",
            h.epoch,
            h.stage.name(),
            sig12(h.loss)
        ));
    }
    std::fs::write(path, text)
}

fn train(common: &Common, model: Option<PathBuf>) -> CmdResult {
    let cfg = prepare(common)?;
    let model_path = model.unwrap_or_else(|| cfg.out_dir.join("model.bin"));
    let history_path = cfg.out_dir.join("history.csv");
    let result = net::train_with(
        &cfg.net,
        &cfg.train.data,
        &cfg.caps,
        cfg.train.epochs,
        cfg.seed,
        |r| {
            eprintln!(
                "epoch {:>4}  {:<9} loss {:.6}  {:.2}s",
                r.epoch,
                r.stage.name(),
                r.loss,
                r.wall_time
            )
        },
    );
    match result {
        Ok((params, history)) => {
            net::save_model(&params, &model_path)?;
            write_history(&history_path, &history)?;
            println!(
                "wrote {} and {}",
                model_path.display(),
                history_path.display()
            );
            Ok(())
        }
        Err(Error::Diverged { epoch, history }) => {
            write_history(&history_path, &history)?;
            Err(Failure::Runtime(format!(
                "training diverged at epoch {epoch}; partial history in {}",
                history_path.display()
            )))
        }
        Err(e) => Err(e.into()),
    }
}

fn spectrum(
    common: &Common,
    model: Option<PathBuf>,
    estimators: Option<Vec<String>>,
    doas: Option<Vec<f64>>,
    snr: Option<f64>,
    xi: Option<f64>,
) -> CmdResult {
    let mut cfg = load_config(common)?;
    if let Some(e) = estimators {
        cfg.estimators = e;
    }
    if let Some(d) = doas {
        cfg.spectrum.doas = d;
    }
    if let Some(s) = snr {
        cfg.spectrum.snr_db = s;
    }
    if let Some(x) = xi {
        cfg.spectrum.xi = x;
    }
    cfg.validate()?;
    let methods = cfg.methods()?;
    setup(&cfg, common.single_thread)?;
    let params = load_model(model.as_deref(), &methods)?;
    for (m, spec, est) in bench::spectrum_overlay(&cfg, params.as_ref())? {
        let path = cfg.out_dir.join(bench::spectrum_file_name(m));
        spec.save_csv(&path)?;
        let doas: Vec<String> = est.doas.iter().map(|d| format!("{d:.2}")).collect();
        println!("{m:<8} peaks [{}] -> {}", doas.join(", "), path.display());
    }
    Ok(())
}

fn eval(common: &Common, model: Option<PathBuf>, xi_sweep: bool) -> CmdResult {
    let cfg = prepare(common)?;
    let params = load_model(model.as_deref(), &cfg.methods()?)?;
    let (rows, name, file) = if xi_sweep {
        (bench::sweep_xi(&cfg, params.as_ref())?, "xi", "rmse_xi.csv")
    } else {
        (
            bench::sweep_snr(&cfg, params.as_ref())?,
            "snr_db",
            "rmse_snr.csv",
        )
    };
    let path = cfg.out_dir.join(file);
    bench::save_results(&rows, name, &path)?;
    bench::write_results(&rows, name, std::io::stdout().lock())?;
    eprintln!("wrote {}", path.display());
    Ok(())
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
    let result = match cli.command {
        Command::Simulate { common } => simulate(&common),
        Command::Train { common, model } => train(&common, model),
        Command::Spectrum {
            common,
            model,
            estimators,
            doas,
            snr,
            xi,
        } => spectrum(&common, model, estimators, doas, snr, xi),
        Command::EvalSnr { common, model } => eval(&common, model, false),
        Command::EvalImperfect { common, model } => eval(&common, model, true),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
