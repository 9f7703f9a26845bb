use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qpalf::codec::CodecConfig;
use qpalf::config::{parse_qp_list, RunConfig};
use qpalf::dataset::{list_images, BuildOptions, DEFAULT_PSNR_HIGH, DEFAULT_PSNR_LOW};
use qpalf::eval::{format_db, rd_csv};
use qpalf::net::load_weights_any;
use qpalf::par::Exec;
use qpalf::pipeline::{self, BuildRequest, ENCODE_HEADER};
use qpalf::{Error, Result};

/// QP-conditioned CNN in-loop filter toolkit.
#[derive(Parser)]
#[command(name = "qpalf", version)]
struct Cli {
    /// Run every data-parallel stage on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CodecArgs {
    #[arg(long, default_value_t = 8)]
    block_size: usize,
    #[arg(long)]
    no_deblock: bool,
    #[arg(long)]
    no_dc_prediction: bool,
}

impl CodecArgs {
    fn config(&self, qp: i32) -> CodecConfig {
        CodecConfig {
            qp,
            block_size: self.block_size,
            dc_prediction: !self.no_dc_prediction,
            deblock: !self.no_deblock,
        }
    }
}

#[derive(Args, Clone)]
struct Dims {
    /// Width of raw .yuv input.
    #[arg(long, requires = "height")]
    width: Option<usize>,
    /// Height of raw .yuv input.
    #[arg(long, requires = "width")]
    height: Option<usize>,
}

impl Dims {
    fn get(&self) -> Option<(usize, usize)> {
        self.width.zip(self.height)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Code an image with the toy codec and write the reconstruction.
    Encode {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, allow_negative_numbers = true)]
        qp: i32,
        #[arg(long)]
        out: PathBuf,
        /// Print a CSV line with rate and quality.
        #[arg(long)]
        report: bool,
        #[command(flatten)]
        dims: Dims,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Build a patch dataset from a directory of PGM images.
    BuildDataset {
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value = "22,27,32,37")]
        qps: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 64)]
        patch: usize,
        #[arg(long, default_value_t = 16)]
        stride: usize,
        #[arg(long, default_value_t = DEFAULT_PSNR_LOW)]
        psnr_low: f64,
        #[arg(long, default_value_t = DEFAULT_PSNR_HIGH)]
        psnr_high: f64,
        /// Also build an image-level validation split here.
        #[arg(long)]
        valid_out: Option<PathBuf>,
        /// Fraction of images used for training when splitting.
        #[arg(long, default_value_t = 7.0 / 8.0)]
        valid_ratio: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        codec: CodecArgs,
    },
    /// Train a network (combined, separate or focal protocol).
    Train(TrainArgs),
    /// Fine-tune trained weights with the focal loss.
    Finetune {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        init: PathBuf,
        /// Override a config key, e.g. --set max_steps=50.
        #[arg(long = "set", value_name = "KEY=VALUE")]
        overrides: Vec<String>,
    },
    /// Filter a decoded frame.
    Filter {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        orig: Option<PathBuf>,
        #[arg(long)]
        qp: i32,
        #[arg(long)]
        weights: PathBuf,
        /// Keep the filtered frame only if it lowers the RD cost.
        #[arg(long)]
        gate: bool,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        dims: Dims,
    },
    /// Evaluate weights on a dataset: metrics CSV and gain-rate CDF.
    Eval {
        #[arg(long)]
        valid: PathBuf,
        #[arg(long)]
        weights: PathBuf,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// BD-rate between two RD-curve CSVs.
    Bdrate {
        #[arg(long)]
        anchor: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// RD curve (qp, bpp, psnr) over a directory of images.
    RdCurve {
        #[arg(long)]
        images: PathBuf,
        #[arg(long, default_value = "22,27,32,37")]
        qps: String,
        #[arg(long)]
        out: PathBuf,
        /// Filter each decoded frame with these weights.
        #[arg(long)]
        weights: Option<PathBuf>,
        #[arg(long, requires = "weights")]
        gate: bool,
        #[command(flatten)]
        codec: CodecArgs,
    },
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value = "combined")]
    protocol: String,
    /// Initial weights; required by the focal protocol.
    #[arg(long)]
    init: Option<PathBuf>,
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

fn load_config(path: Option<&Path>, overrides: &[String], init: Option<&Path>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    for o in overrides {
        let (k, v) = o
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {o:?}")))?;
        cfg.set(k.trim(), v.trim())?;
    }
    if let Some(p) = init {
        cfg.init_weights = Some(p.to_path_buf());
    }
    cfg.validate()?;
    Ok(cfg)
}

fn train(cfg: &RunConfig, protocol: &str, exec: Exec) -> Result<()> {
    let protocol = cfg.protocol(protocol)?;
    for p in pipeline::run_training(cfg, protocol, exec)? {
        println!("{}", p.display());
    }
    Ok(())
}

fn write_out(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::default() };
    match cli.command {
        Command::Encode {
            input,
            qp,
            out,
            report,
            dims,
            codec,
        } => {
            let r = pipeline::encode_file(&input, dims.get(), &codec.config(qp), &out)?;
            if report {
                println!("{ENCODE_HEADER}\n{}", r.csv_line());
            }
        }
        Command::BuildDataset {
            images,
            qps,
            out,
            patch,
            stride,
            psnr_low,
            psnr_high,
            valid_out,
            valid_ratio,
            seed,
            codec,
        } => {
            let options = BuildOptions {
                qps: parse_qp_list(&qps)?,
                codec: codec.config(22),
                patch,
                stride,
                psnr_low,
                psnr_high,
            };
            let s = pipeline::build_dataset_files(
                &BuildRequest {
                    images_dir: images,
                    options,
                    out: out.clone(),
                    valid_out,
                    valid_ratio,
                    seed,
                },
                exec,
            )?;
            println!("{}: {} records", out.display(), s.train_records);
            if let Some(n) = s.valid_records {
                println!("validation: {n} records from {} image(s)", s.valid_images.len());
            }
        }
        Command::Train(a) => {
            let cfg = load_config(a.config.as_deref(), &a.overrides, a.init.as_deref())?;
            train(&cfg, &a.protocol, exec)?;
        }
        Command::Finetune { config, init, overrides } => {
            let cfg = load_config(config.as_deref(), &overrides, Some(&init))?;
            train(&cfg, "focal", exec)?;
        }
        Command::Filter {
            input,
            orig,
            qp,
            weights,
            gate,
            out,
            dims,
        } => {
            let r = pipeline::filter_file(&input, orig.as_deref(), dims.get(), qp, &weights, gate, &out)?;
            let db = |v: Option<f64>| v.map(format_db).unwrap_or_default();
            println!("psnr_in,psnr_out,flag\n{},{},{}", db(r.psnr_in), db(r.psnr_out), u8::from(r.flag));
        }
        Command::Eval { valid, weights, out_dir } => {
            let (rows, mean) = pipeline::eval_files(&weights, &valid, &out_dir, exec)?;
            println!("{} records, mean gain rate {mean:.6}", rows.len());
        }
        Command::Bdrate { anchor, test, out } => {
            let (_, report) = pipeline::bdrate_files(&anchor, &test)?;
            match out {
                Some(p) => write_out(&p, &report)?,
                None => print!("{report}"),
            }
        }
        Command::RdCurve {
            images,
            qps,
            out,
            weights,
            gate,
            codec,
        } => {
            let imgs = list_images(&images)?;
            let w = weights.as_deref().map(load_weights_any).transpose()?;
            let rows = pipeline::rd_points(
                &imgs,
                &parse_qp_list(&qps)?,
                &codec.config(22),
                w.as_ref().map(|w| (w, gate)),
                exec,
            )?;
            write_out(&out, &rd_csv(&rows))?;
        }
    }
    Ok(())
}

fn configure_threads() -> Result<()> {
    let Ok(v) = std::env::var("QPALF_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("QPALF_THREADS must be a positive integer, got {v:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match configure_threads().and_then(|_| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}
