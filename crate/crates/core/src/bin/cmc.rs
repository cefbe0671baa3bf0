use std::fs;
use std::io::{self, Read};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use thiserror::Error;

use cmc_core::baseline::{decode_image, default_token_codebook, encode_image, QuantizerConfig, DEFAULT_SWEEP};
use cmc_core::caption;
use cmc_core::entropy::{decode_text, encode_text, Codebook};
use cmc_core::harness::{self, CodecChoice, HarnessError, LabeledPath, RunConfig};
use cmc_core::metrics::{
    fid, gaussian_stats, inception_score, inception_score_split, ipd, matching_score, psnr, FeatureMatrix,
    MatchingConfig, ProbMatrix,
};
use cmc_core::scene::{self, SceneGraph};
use cmc_core::{compression_ratio, Bitstream, CodecId, Image};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Data(_) => 3,
            CliError::Stage { .. } => 4,
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Stage { stage, .. } => CliError::Stage {
                stage,
                message: e.to_string(),
            },
            HarnessError::Config(m) => CliError::Usage(m),
            other => CliError::Data(other.to_string()),
        }
    }
}

fn data_err(path: &Path) -> impl Fn(String) -> CliError + '_ {
    move |m| CliError::Data(format!("{}: {m}", path.display()))
}

fn stage_err<E: ToString>(stage: &'static str) -> impl Fn(E) -> CliError {
    move |e| CliError::Stage {
        stage,
        message: e.to_string(),
    }
}

fn read(path: &Path) -> Result<Vec<u8>, CliError> {
    fs::read(path).map_err(|e| data_err(path)(e.to_string()))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(|e| data_err(path)(e.to_string()))
}

/// Cross-modal compression through a caption text domain.
#[derive(Parser)]
#[command(name = "cmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CodebookArgs {
    /// Caption codebook file (CBK1); defaults to the one trained from --seed
    #[arg(long)]
    codebook: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl CodebookArgs {
    fn load(&self) -> Result<Codebook, CliError> {
        match &self.codebook {
            Some(path) => Codebook::from_bytes(&read(path)?).map_err(|e| data_err(path)(e.to_string())),
            None => Ok(harness::default_codebook(self.seed)),
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CodecArg {
    Both,
    Cmc,
    Dct,
}

#[derive(Subcommand)]
enum Command {
    /// Render random scenes into images/, scenes/ and captions.txt
    GenCorpus {
        #[arg(long, default_value_t = 100)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a caption codebook from newline-separated captions
    TrainCodebook {
        /// Caption file; generated captions from --seed when absent
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = harness::TRAINING_CAPTIONS)]
        count: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compress an image; CMC by default, the DCT baseline with --quality
    Encode {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        codebook: CodebookArgs,
        #[arg(long)]
        quality: Option<u32>,
    },
    /// Reconstruct an image from a stream
    Decode {
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        codebook: CodebookArgs,
        #[arg(long)]
        quality: Option<u32>,
        /// Reconstruction size for caption streams
        #[arg(long, default_value_t = harness::IMAGE_SIDE)]
        width: usize,
        #[arg(long, default_value_t = harness::IMAGE_SIDE)]
        height: usize,
    },
    /// Draw a scene file, or a caption given with --caption
    Render {
        #[arg(required_unless_present = "caption", conflicts_with = "caption")]
        scene: Option<PathBuf>,
        #[arg(long)]
        caption: Option<String>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = harness::IMAGE_SIDE)]
        width: usize,
        #[arg(long, default_value_t = harness::IMAGE_SIDE)]
        height: usize,
    },
    /// Recover the scene graph and caption of an image
    Analyze {
        input: PathBuf,
        /// Write the scene file here
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parse a caption ("-" reads stdin) and print its scene file
    Parse { caption: String },
    /// Compute metrics on images or feature files
    Metrics {
        #[arg(long, requires = "b")]
        a: Option<PathBuf>,
        #[arg(long, requires = "a")]
        b: Option<PathBuf>,
        #[arg(long, requires = "features_rec")]
        features_src: Option<PathBuf>,
        #[arg(long, requires = "features_src")]
        features_rec: Option<PathBuf>,
        #[arg(long)]
        probs: Option<PathBuf>,
        #[arg(long, requires = "probs")]
        splits: Option<usize>,
        /// Word features, one word per row
        #[arg(long, requires = "regions")]
        words: Option<PathBuf>,
        /// Region features, one region per row
        #[arg(long, requires = "words")]
        regions: Option<PathBuf>,
        #[arg(long, default_value_t = MatchingConfig::DEFAULT_GAMMA1)]
        gamma1: f64,
        #[arg(long, default_value_t = MatchingConfig::DEFAULT_GAMMA2)]
        gamma2: f64,
    },
    /// Rate-distortion sweep of both codecs over a corpus, written as CSV
    Sweep {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        codebook: Option<PathBuf>,
        /// Baseline qualities, comma separated
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP)]
        quality: Vec<u32>,
        #[arg(long, value_enum, default_value = "both")]
        codec: CodecArg,
        #[arg(long)]
        features_src: Option<PathBuf>,
        /// [label=]path with label cmc or q<quality>; bare paths are cmc
        #[arg(long)]
        features_rec: Vec<LabeledPath>,
        /// [label=]path with label cmc or q<quality>; bare paths are cmc
        #[arg(long)]
        probs: Vec<LabeledPath>,
        #[arg(long)]
        splits: Option<usize>,
        /// Adds D + lambda * R to the summary
        #[arg(long)]
        lambda: Option<f64>,
    },
}

fn read_image(path: &Path) -> Result<Image, CliError> {
    Ok(harness::read_image(path)?)
}

fn quality_cfg(q: u32) -> Result<QuantizerConfig, CliError> {
    QuantizerConfig::new(q).map_err(|e| CliError::Usage(e.to_string()))
}

fn load_features(path: &Path) -> Result<FeatureMatrix, CliError> {
    FeatureMatrix::from_bytes(&read(path)?).map_err(|e| data_err(path)(e.to_string()))
}

fn run(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::GenCorpus { n, seed, out } => {
            let corpus = harness::generate_corpus(n, seed, &out)?;
            println!("wrote {} images to {}", corpus.scenes.len(), out.display());
        }
        Command::TrainCodebook {
            input,
            seed,
            count,
            out,
        } => {
            let cb = match input {
                Some(path) => Codebook::train(&read(&path)?),
                None => Codebook::train(harness::training_captions(seed, count).as_bytes()),
            };
            write(&out, cb.to_bytes())?;
            println!("codebook {:#010x}", cb.id());
        }
        Command::Encode {
            input,
            out,
            codebook,
            quality,
        } => {
            let img = read_image(&input)?;
            let stream = match quality {
                Some(q) => encode_image(&img, &quality_cfg(q)?, default_token_codebook())
                    .map_err(|e| data_err(&input)(e.to_string()))?,
                None => {
                    let scene = scene::analyze(&img).map_err(stage_err(harness::STAGE_ENCODER))?;
                    let cap = caption::describe(&scene);
                    println!("{cap}");
                    encode_text(cap.as_bytes(), &codebook.load()?)
                }
            };
            let bytes = stream.serialize();
            write(&out, &bytes)?;
            let ratio = compression_ratio(img.width(), img.height(), bytes.len() as f64).expect("non-empty");
            println!("{} bytes, ratio {ratio:.1}", bytes.len());
        }
        Command::Decode {
            input,
            out,
            codebook,
            quality,
            width,
            height,
        } => {
            let stream = Bitstream::deserialize(&read(&input)?).map_err(|e| data_err(&input)(e.to_string()))?;
            let img = match stream.codec_id() {
                CodecId::CmcText => {
                    let text = decode_text(&stream, &codebook.load()?).map_err(stage_err(harness::STAGE_ENTROPY_DECODER))?;
                    let text = String::from_utf8(text)
                        .map_err(|_| stage_err(harness::STAGE_ENTROPY_DECODER)("decoded caption is not UTF-8"))?;
                    println!("{text}");
                    let scene = caption::parse(&text).map_err(stage_err(harness::STAGE_DECODER))?;
                    scene::render(&scene, width, height).map_err(|e| CliError::Usage(e.to_string()))?
                }
                CodecId::BaselineDct => {
                    // the payload starts with the 8-bit quality
                    let q = match quality {
                        Some(q) => q,
                        None => stream.reader().read_bits(8).ok_or_else(|| data_err(&input)("empty payload".into()))? as u32,
                    };
                    decode_image(&stream, &quality_cfg(q)?, default_token_codebook()).map_err(stage_err("dct-decoder"))?
                }
            };
            write(&out, img.to_ppm_bytes())?;
        }
        Command::Render {
            scene: scene_path,
            caption: text,
            out,
            width,
            height,
        } => {
            let graph: SceneGraph = match (scene_path, text) {
                (Some(path), _) => {
                    let text = String::from_utf8(read(&path)?).map_err(|e| data_err(&path)(e.to_string()))?;
                    text.parse().map_err(|e: scene::SceneError| data_err(&path)(e.to_string()))?
                }
                (None, Some(text)) => caption::parse(&text).map_err(|e| CliError::Data(e.to_string()))?,
                (None, None) => unreachable!("clap requires one input"),
            };
            let img = scene::render(&graph, width, height).map_err(|e| CliError::Usage(e.to_string()))?;
            write(&out, img.to_ppm_bytes())?;
        }
        Command::Analyze { input, out } => {
            let img = read_image(&input)?;
            let graph = scene::analyze(&img).map_err(stage_err(harness::STAGE_ENCODER))?;
            print!("{graph}");
            println!("{}", caption::describe(&graph));
            if let Some(out) = out {
                write(&out, graph.to_text())?;
            }
        }
        Command::Parse { caption: text } => {
            let text = if text == "-" {
                let mut s = String::new();
                io::stdin().read_to_string(&mut s).map_err(|e| CliError::Data(e.to_string()))?;
                s.trim_end_matches(['\n', '\r']).to_string()
            } else {
                text
            };
            let graph = caption::parse(&text).map_err(|e| CliError::Data(e.to_string()))?;
            print!("{graph}");
        }
        Command::Metrics {
            a,
            b,
            features_src,
            features_rec,
            probs,
            splits,
            words,
            regions,
            gamma1,
            gamma2,
        } => {
            let mut any = false;
            if let (Some(a), Some(b)) = (a, b) {
                let v = psnr(&read_image(&a)?, &read_image(&b)?, 8).map_err(|e| CliError::Data(e.to_string()))?;
                println!("psnr_db={}", if v.is_infinite() { "inf".to_string() } else { v.to_string() });
                any = true;
            }
            if let (Some(src), Some(rec)) = (features_src, features_rec) {
                let (fs_, fr) = (load_features(&src)?, load_features(&rec)?);
                let metric = |e: cmc_core::metrics::MetricsError| CliError::Data(e.to_string());
                println!("fid={}", fid(&gaussian_stats(&fs_).map_err(metric)?, &gaussian_stats(&fr).map_err(metric)?).map_err(metric)?);
                println!("ipd={}", ipd(&fs_, &fr).map_err(metric)?);
                any = true;
            }
            if let Some(path) = probs {
                let p = ProbMatrix::from_bytes(&read(&path)?).map_err(|e| data_err(&path)(e.to_string()))?;
                let is = match splits {
                    Some(s) => inception_score_split(&p, s).map_err(|e| CliError::Usage(e.to_string()))?,
                    None => inception_score(&p),
                };
                println!("is={is}");
                any = true;
            }
            if let (Some(w), Some(r)) = (words, regions) {
                let cfg = MatchingConfig::new(gamma1, gamma2).map_err(|e| CliError::Usage(e.to_string()))?;
                let score = matching_score(&load_features(&w)?, &load_features(&r)?, &cfg)
                    .map_err(|e| CliError::Data(e.to_string()))?;
                println!("gamma1={gamma1} gamma2={gamma2}");
                println!("matching_score={score}");
                any = true;
            }
            if !any {
                return Err(CliError::Usage(
                    "give --a/--b, --features-src/--features-rec, --probs or --words/--regions".into(),
                ));
            }
        }
        Command::Sweep {
            corpus,
            out,
            seed,
            codebook,
            quality,
            codec,
            features_src,
            features_rec,
            probs,
            splits,
            lambda,
        } => {
            let cfg = RunConfig {
                codecs: match codec {
                    CodecArg::Both => CodecChoice::Both,
                    CodecArg::Cmc => CodecChoice::Cmc,
                    CodecArg::Dct => CodecChoice::Baseline,
                },
                qualities: quality,
                codebook,
                features_src,
                features_rec,
                probs,
                splits,
                output: Some(out),
                seed,
                lambda,
                ..RunConfig::new(corpus)
            };
            let report = harness::sweep(&cfg)?;
            print!("{}", report.summary());
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
