//! Corpus generation, end-to-end pipeline runs and rate-distortion sweeps.

mod sweep;

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use sweep::{sweep, CodecChoice, CsvRow, LabeledPath, RdReport, RunConfig, SettingKey, CSV_HEADER};

use crate::bitstream::Bitstream;
use crate::caption::{self, Caption, CaptionError};
use crate::entropy::{decode_text, encode_text, Codebook, TextCodingError};
use crate::image::{Image, ImageError};
use crate::scene::{self, Cell, Color, SceneError, SceneGraph, SceneObject, Shape, Size, GRID, MAX_OBJECTS};

/// Side of generated corpus images.
pub const IMAGE_SIDE: usize = 256;
/// Captions in the default codebook's training text.
pub const TRAINING_CAPTIONS: usize = 10_000;
/// Mixed into the run seed to derive the codebook training stream.
const CODEBOOK_SEED_MIX: u64 = 0x9e37_79b9_7f4a_7c15;

pub const STAGE_ENCODER: &str = "cmc-encoder";
pub const STAGE_ENTROPY_DECODER: &str = "entropy-decoder";
pub const STAGE_DECODER: &str = "cmc-decoder";

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error(transparent)]
    Caption(#[from] CaptionError),
    #[error(transparent)]
    Text(#[from] TextCodingError),
    #[error("decoded caption is not UTF-8")]
    NotUtf8,
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{stage}: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: StageError,
    },
    #[error("configuration: {0}")]
    Config(String),
    #[error("{path}: {message}")]
    Data { path: PathBuf, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl HarnessError {
    pub fn stage(&self) -> Option<&'static str> {
        match self {
            HarnessError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }

    fn io(path: &Path, source: io::Error) -> Self {
        HarnessError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    fn data(path: &Path, message: impl ToString) -> Self {
        HarnessError::Data {
            path: path.to_path_buf(),
            message: message.to_string(),
        }
    }
}

fn stage(stage: &'static str) -> impl Fn(StageError) -> HarnessError {
    move |source| HarnessError::Stage { stage, source }
}

/// A uniformly drawn scene graph: 1 to 4 objects in distinct cells.
pub fn random_scene<R: Rng>(rng: &mut R) -> SceneGraph {
    let n = rng.random_range(1..=MAX_OBJECTS);
    let cells = (GRID as usize).pow(2);
    let objects = index::sample(rng, cells, n)
        .into_iter()
        .map(|i| {
            let cell = Cell::new((i % GRID as usize) as u8, (i / GRID as usize) as u8).expect("in grid");
            SceneObject::new(
                Shape::ALL[rng.random_range(0..Shape::ALL.len())],
                Color::ALL[rng.random_range(0..Color::ALL.len())],
                Size::ALL[rng.random_range(0..Size::ALL.len())],
                cell,
            )
        })
        .collect();
    SceneGraph::new(objects).expect("distinct cells")
}

/// A random scene whose layout is exactly what its caption encodes.
pub fn random_realizable_scene<R: Rng>(rng: &mut R) -> SceneGraph {
    loop {
        if let Ok(s) = caption::canonical_layout(&random_scene(rng)) {
            return s;
        }
    }
}

/// Newline-separated captions of `count` random realizable scenes.
pub fn training_captions(seed: u64, count: usize) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ CODEBOOK_SEED_MIX);
    let mut text = String::new();
    for _ in 0..count {
        text.push_str(caption::describe(&random_realizable_scene(&mut rng)).as_str());
        text.push('\n');
    }
    text
}

/// The codebook a run with `seed` uses when none is supplied.
pub fn default_codebook(seed: u64) -> Codebook {
    Codebook::train(training_captions(seed, TRAINING_CAPTIONS).as_bytes())
}

/// File name stem of corpus item `i`.
pub fn image_id(i: usize) -> String {
    format!("{i:06}")
}

/// What [`generate_corpus`] wrote.
#[derive(Clone, Debug, PartialEq)]
pub struct Corpus {
    pub scenes: Vec<SceneGraph>,
    pub captions: Vec<Caption>,
}

/// Renders `n` random realizable scenes into `outdir`:
/// `images/NNNNNN.ppm`, `scenes/NNNNNN.txt` and `captions.txt`.
pub fn generate_corpus(n: usize, seed: u64, outdir: &Path) -> Result<Corpus, HarnessError> {
    if n == 0 {
        return Err(HarnessError::Config("corpus size must be at least 1".into()));
    }
    let images = outdir.join("images");
    let scenes_dir = outdir.join("scenes");
    for dir in [&images, &scenes_dir] {
        fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut corpus = Corpus {
        scenes: Vec::with_capacity(n),
        captions: Vec::with_capacity(n),
    };
    let captions_path = outdir.join("captions.txt");
    let mut captions = BufWriter::new(fs::File::create(&captions_path).map_err(|e| HarnessError::io(&captions_path, e))?);
    for i in 0..n {
        let scene = random_realizable_scene(&mut rng);
        let img = scene::render(&scene, IMAGE_SIDE, IMAGE_SIDE).expect("valid side");
        let id = image_id(i);
        let path = images.join(format!("{id}.ppm"));
        fs::write(&path, img.to_ppm_bytes()).map_err(|e| HarnessError::io(&path, e))?;
        let path = scenes_dir.join(format!("{id}.txt"));
        fs::write(&path, scene.to_text()).map_err(|e| HarnessError::io(&path, e))?;
        let cap = caption::describe(&scene);
        writeln!(captions, "{cap}").map_err(|e| HarnessError::io(&captions_path, e))?;
        corpus.scenes.push(scene);
        corpus.captions.push(cap);
    }
    captions.flush().map_err(|e| HarnessError::io(&captions_path, e))?;
    Ok(corpus)
}

/// Reads `images/*.ppm` from a corpus directory, sorted by id.
pub fn load_images(dir: &Path) -> Result<Vec<(String, Image)>, HarnessError> {
    let images = dir.join("images");
    let entries = fs::read_dir(&images).map_err(|e| HarnessError::io(&images, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| HarnessError::io(&images, e))?.path();
        if path.extension().is_some_and(|x| x == "ppm") {
            paths.push(path);
        }
    }
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::data(&images, "no .ppm images"));
    }
    paths
        .into_iter()
        .map(|path| {
            let id = path.file_stem().unwrap_or_default().to_string_lossy().into_owned();
            let img = read_image(&path)?;
            Ok((id, img))
        })
        .collect()
}

pub fn read_image(path: &Path) -> Result<Image, HarnessError> {
    let file = fs::File::open(path).map_err(|e| HarnessError::io(path, e))?;
    Image::read_ppm(io::BufReader::new(file)).map_err(|e| match e {
        ImageError::Io(e) => HarnessError::io(path, e),
        other => HarnessError::data(path, other),
    })
}

/// Result of one image through the CMC codec.
#[derive(Clone, Debug)]
pub struct PipelineOutput {
    pub source_scene: SceneGraph,
    pub caption: Caption,
    pub stream: Bitstream,
    pub reconstruction: Image,
    pub rate_bytes: usize,
}

/// analyze, describe, entropy-code, decode, parse, render.
pub fn run_cmc_pipeline(img: &Image, cb: &Codebook) -> Result<PipelineOutput, HarnessError> {
    let source_scene = scene::analyze(img).map_err(|e| stage(STAGE_ENCODER)(e.into()))?;
    let caption = caption::describe(&source_scene);
    let stream = encode_text(caption.as_bytes(), cb);

    let text = decode_text(&stream, cb).map_err(|e| stage(STAGE_ENTROPY_DECODER)(e.into()))?;
    let text = String::from_utf8(text).map_err(|_| stage(STAGE_ENTROPY_DECODER)(StageError::NotUtf8))?;
    let decoded = caption::parse(&text).map_err(|e| stage(STAGE_DECODER)(e.into()))?;
    let reconstruction =
        scene::render(&decoded, img.width(), img.height()).map_err(|e| stage(STAGE_DECODER)(e.into()))?;
    Ok(PipelineOutput {
        source_scene,
        caption,
        rate_bytes: stream.serialized_len(),
        stream,
        reconstruction,
    })
}
