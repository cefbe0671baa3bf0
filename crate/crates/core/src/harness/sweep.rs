use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::{default_codebook, load_images, run_cmc_pipeline, HarnessError};
use crate::baseline::{decode_image, default_token_codebook, encode_image, QuantizerConfig, DEFAULT_SWEEP};
use crate::entropy::Codebook;
use crate::image::Image;
use crate::metrics::{fid, gaussian_stats, inception_score, inception_score_split, psnr, FeatureMatrix, ProbMatrix};
use crate::rate::{bits_per_pixel, RdPoint};
use crate::scene::{self, scene_distance, SceneGraph};

pub const CSV_HEADER: &str = "codec,quality,image_id,rate_bytes,bpp,psnr_db,scene_distance,is,fid,ipd";
/// `image_id` of per-setting aggregate rows.
pub const MEAN_ID: &str = "mean";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum CodecChoice {
    #[default]
    Both,
    Cmc,
    Baseline,
}

impl CodecChoice {
    fn cmc(self) -> bool {
        self != CodecChoice::Baseline
    }

    fn baseline(self) -> bool {
        self != CodecChoice::Cmc
    }
}

/// One operating point of a sweep: the CMC codec or the baseline at a quality.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SettingKey {
    Cmc,
    Baseline(u32),
}

impl SettingKey {
    pub fn codec_label(self) -> &'static str {
        match self {
            SettingKey::Cmc => "cmc",
            SettingKey::Baseline(_) => "dct",
        }
    }

    pub fn quality(self) -> Option<u32> {
        match self {
            SettingKey::Cmc => None,
            SettingKey::Baseline(q) => Some(q),
        }
    }
}

impl fmt::Display for SettingKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SettingKey::Cmc => f.write_str("cmc"),
            SettingKey::Baseline(q) => write!(f, "q{q}"),
        }
    }
}

impl FromStr for SettingKey {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        if s == "cmc" {
            return Ok(SettingKey::Cmc);
        }
        s.strip_prefix('q')
            .and_then(|q| q.parse().ok())
            .map(SettingKey::Baseline)
            .ok_or_else(|| format!("setting label {s:?} is neither \"cmc\" nor q<quality>"))
    }
}

/// `label=path`, or a bare path meaning the CMC reconstructions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabeledPath {
    pub setting: SettingKey,
    pub path: PathBuf,
}

impl FromStr for LabeledPath {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.split_once('=') {
            Some((label, path)) if !path.is_empty() => Ok(LabeledPath {
                setting: label.parse()?,
                path: path.into(),
            }),
            Some(_) => Err(format!("{s:?} has an empty path")),
            None => Ok(LabeledPath {
                setting: SettingKey::Cmc,
                path: s.into(),
            }),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub corpus_dir: PathBuf,
    pub codecs: CodecChoice,
    pub qualities: Vec<u32>,
    /// Caption codebook; trained from `seed` when absent.
    pub codebook: Option<PathBuf>,
    /// Features of the source images, one row per image in id order.
    pub features_src: Option<PathBuf>,
    /// Features of reconstructions, per setting.
    pub features_rec: Vec<LabeledPath>,
    /// Class probabilities of reconstructions, per setting.
    pub probs: Vec<LabeledPath>,
    pub splits: Option<usize>,
    pub output: Option<PathBuf>,
    pub seed: u64,
    /// Adds `D + lambda * R` to the summary.
    pub lambda: Option<f64>,
}

impl RunConfig {
    pub fn new(corpus_dir: impl Into<PathBuf>) -> Self {
        Self {
            corpus_dir: corpus_dir.into(),
            codecs: CodecChoice::Both,
            qualities: DEFAULT_SWEEP.to_vec(),
            codebook: None,
            features_src: None,
            features_rec: Vec::new(),
            probs: Vec::new(),
            splits: None,
            output: None,
            seed: 0,
            lambda: None,
        }
    }

    fn settings(&self) -> Vec<SettingKey> {
        let mut out = Vec::new();
        if self.codecs.cmc() {
            out.push(SettingKey::Cmc);
        }
        if self.codecs.baseline() {
            out.extend(self.qualities.iter().map(|&q| SettingKey::Baseline(q)));
        }
        out
    }
}

/// One CSV line; `None` fields are written empty.
#[derive(Clone, Debug, PartialEq)]
pub struct CsvRow {
    pub setting: SettingKey,
    pub image_id: String,
    pub rate_bytes: f64,
    pub bpp: f64,
    pub psnr_db: Option<f64>,
    pub scene_distance: Option<f64>,
    pub is: Option<f64>,
    pub fid: Option<f64>,
    pub ipd: Option<f64>,
    /// Caption carried by the CMC stream; not part of the CSV.
    pub caption: Option<String>,
}

fn field(out: &mut String, v: Option<f64>) {
    out.push(',');
    match v {
        Some(x) if x == f64::INFINITY => out.push_str("inf"),
        Some(x) => write!(out, "{x}").unwrap(),
        None => {}
    }
}

impl CsvRow {
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(self.setting.codec_label());
        out.push(',');
        if let Some(q) = self.setting.quality() {
            write!(out, "{q}").unwrap();
        }
        write!(out, ",{}", self.image_id).unwrap();
        field(&mut out, Some(self.rate_bytes));
        field(&mut out, Some(self.bpp));
        field(&mut out, self.psnr_db);
        field(&mut out, self.scene_distance);
        field(&mut out, self.is);
        field(&mut out, self.fid);
        field(&mut out, self.ipd);
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RdReport {
    /// Per-image rows sorted by image id then setting, followed by one
    /// aggregate row per setting.
    pub rows: Vec<CsvRow>,
    /// One point per setting per available metric.
    pub points: Vec<RdPoint>,
    pub codebook_id: u32,
    pub token_codebook_id: u32,
    pub seed: u64,
    pub lambda: Option<f64>,
}

impl RdReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.to_csv());
            out.push('\n');
        }
        out
    }

    pub fn aggregates(&self) -> impl Iterator<Item = &CsvRow> {
        self.rows.iter().filter(|r| r.image_id == MEAN_ID)
    }

    pub fn summary(&self) -> String {
        let mut out = format!(
            "seed {} caption codebook {:#010x} token codebook {:#010x}\n",
            self.seed, self.codebook_id, self.token_codebook_id
        );
        for p in &self.points {
            write!(
                out,
                "{:<4} {:<15} rate {:>10.2} B  distortion {:>12.6}",
                p.codec_label, p.metric_name, p.rate_bytes, p.distortion
            )
            .unwrap();
            if let Some(l) = self.lambda {
                write!(out, "  cost {:.6}", p.cost(l)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn mean(values: impl IntoIterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.into_iter().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn read_features(path: &Path) -> Result<FeatureMatrix, HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    FeatureMatrix::from_bytes(&bytes).map_err(|e| HarnessError::data(path, e))
}

fn read_probs(path: &Path) -> Result<ProbMatrix, HarnessError> {
    let bytes = fs::read(path).map_err(|e| HarnessError::Config(format!("{}: {e}", path.display())))?;
    ProbMatrix::from_bytes(&bytes).map_err(|e| HarnessError::data(path, e))
}

fn index_files(list: &[LabeledPath], settings: &[SettingKey], what: &str) -> Result<BTreeMap<SettingKey, PathBuf>, HarnessError> {
    let mut out = BTreeMap::new();
    for lp in list {
        if !settings.contains(&lp.setting) {
            return Err(HarnessError::Config(format!("{what} for {} which is not in the sweep", lp.setting)));
        }
        if out.insert(lp.setting, lp.path.clone()).is_some() {
            return Err(HarnessError::Config(format!("{what} given twice for {}", lp.setting)));
        }
    }
    Ok(out)
}

struct Evaluated {
    rate: usize,
    psnr: f64,
    scene_distance: Option<f64>,
    caption: Option<String>,
}

fn distance_to(src: Option<&SceneGraph>, rec: &Image) -> Option<f64> {
    let src = src?;
    scene::analyze(rec).ok().map(|r| scene_distance(src, &r) as f64)
}

/// Runs every configured setting over the corpus and writes the CSV.
pub fn sweep(cfg: &RunConfig) -> Result<RdReport, HarnessError> {
    let settings = cfg.settings();
    if settings.is_empty() {
        return Err(HarnessError::Config("empty quality list".into()));
    }
    let quality_cfgs = cfg
        .qualities
        .iter()
        .map(|&q| QuantizerConfig::new(q).map_err(|e| HarnessError::Config(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    let rec_paths = index_files(&cfg.features_rec, &settings, "reconstruction features")?;
    let prob_paths = index_files(&cfg.probs, &settings, "probabilities")?;
    if !rec_paths.is_empty() && cfg.features_src.is_none() {
        return Err(HarnessError::Config("reconstruction features need --features-src".into()));
    }
    if let Some(s) = cfg.splits {
        if prob_paths.is_empty() {
            return Err(HarnessError::Config("--splits without probability files".into()));
        }
        if s == 0 {
            return Err(HarnessError::Config("--splits must be at least 1".into()));
        }
    }

    let images = load_images(&cfg.corpus_dir)?;
    let n = images.len();
    let check_rows = |path: &Path, rows: usize| {
        if rows == n {
            Ok(())
        } else {
            Err(HarnessError::Config(format!("{} has {rows} rows for {n} images", path.display())))
        }
    };
    let src_features = match &cfg.features_src {
        Some(p) => {
            let f = read_features(p)?;
            check_rows(p, f.rows())?;
            Some(f)
        }
        None => None,
    };
    let mut rec_features = BTreeMap::new();
    for (&key, path) in &rec_paths {
        let f = read_features(path)?;
        check_rows(path, f.rows())?;
        if f.cols() != src_features.as_ref().map_or(0, FeatureMatrix::cols) {
            return Err(HarnessError::Config(format!("{} has a different feature dimension", path.display())));
        }
        rec_features.insert(key, f);
    }
    let mut probs = BTreeMap::new();
    for (&key, path) in &prob_paths {
        let p = read_probs(path)?;
        check_rows(path, p.rows())?;
        probs.insert(key, p);
    }

    let codebook = match &cfg.codebook {
        Some(path) => {
            let bytes = fs::read(path).map_err(|e| HarnessError::io(path, e))?;
            Codebook::from_bytes(&bytes).map_err(|e| HarnessError::data(path, e))?
        }
        None if cfg.codecs.cmc() => default_codebook(cfg.seed),
        None => Codebook::train(b""),
    };
    let token_book = default_token_codebook();

    let mut per_setting: BTreeMap<SettingKey, Vec<CsvRow>> = BTreeMap::new();
    for (i, (id, img)) in images.iter().enumerate() {
        let (w, h) = (img.width(), img.height());
        let mut evaluated = Vec::with_capacity(settings.len());
        let source_scene = if cfg.codecs.cmc() {
            let out = run_cmc_pipeline(img, &codebook)?;
            evaluated.push((
                SettingKey::Cmc,
                Evaluated {
                    rate: out.rate_bytes,
                    psnr: psnr(img, &out.reconstruction, 8).expect("same size"),
                    scene_distance: distance_to(Some(&out.source_scene), &out.reconstruction),
                    caption: Some(out.caption.into_string()),
                },
            ));
            Some(out.source_scene)
        } else {
            scene::analyze(img).ok()
        };
        if cfg.codecs.baseline() {
            for qc in &quality_cfgs {
                let stream = encode_image(img, qc, token_book)
                    .map_err(|e| HarnessError::Data { path: cfg.corpus_dir.join("images").join(id), message: e.to_string() })?;
                let rec = decode_image(&stream, qc, token_book).expect("own stream decodes");
                evaluated.push((
                    SettingKey::Baseline(qc.quality().into()),
                    Evaluated {
                        rate: stream.serialized_len(),
                        psnr: psnr(img, &rec, 8).expect("same size"),
                        scene_distance: distance_to(source_scene.as_ref(), &rec),
                        caption: None,
                    },
                ));
            }
        }
        for (key, ev) in evaluated {
            let ipd = match (&src_features, rec_features.get(&key)) {
                (Some(s), Some(r)) => Some(s.row(i).iter().zip(r.row(i)).map(|(a, b)| (b - a) * (b - a)).sum()),
                _ => None,
            };
            per_setting.entry(key).or_default().push(CsvRow {
                setting: key,
                image_id: id.clone(),
                rate_bytes: ev.rate as f64,
                bpp: bits_per_pixel(w, h, ev.rate as f64),
                psnr_db: Some(ev.psnr),
                scene_distance: ev.scene_distance,
                is: None,
                fid: None,
                ipd,
                caption: ev.caption,
            });
        }
    }

    let mut rows: Vec<CsvRow> = Vec::with_capacity(n * (settings.len() + 1));
    let mut aggregates = Vec::new();
    let mut points = Vec::new();
    let src_stats = src_features.as_ref().map(gaussian_stats).transpose().map_err(|e| HarnessError::Config(format!("source features: {e}")))?;
    for (&key, list) in &per_setting {
        let is = match probs.get(&key) {
            Some(p) => Some(match cfg.splits {
                Some(s) => inception_score_split(p, s).map_err(|e| HarnessError::Config(e.to_string()))?,
                None => inception_score(p),
            }),
            None => None,
        };
        let fid_value = match (&src_stats, rec_features.get(&key)) {
            (Some(s), Some(r)) => {
                let rs = gaussian_stats(r).map_err(|e| HarnessError::Config(format!("{key} features: {e}")))?;
                Some(fid(s, &rs).map_err(|e| HarnessError::Config(format!("{key} features: {e}")))?)
            }
            _ => None,
        };
        let rate = mean(list.iter().map(|r| r.rate_bytes)).expect("non-empty corpus");
        let agg = CsvRow {
            setting: key,
            image_id: MEAN_ID.into(),
            rate_bytes: rate,
            bpp: mean(list.iter().map(|r| r.bpp)).expect("non-empty corpus"),
            psnr_db: mean(list.iter().filter_map(|r| r.psnr_db)),
            scene_distance: mean(list.iter().filter_map(|r| r.scene_distance)),
            is,
            fid: fid_value,
            ipd: mean(list.iter().filter_map(|r| r.ipd)),
            caption: None,
        };
        for (name, value) in [
            ("psnr_db", agg.psnr_db),
            ("scene_distance", agg.scene_distance),
            ("is", agg.is),
            ("fid", agg.fid),
            ("ipd", agg.ipd),
        ] {
            if let Some(v) = value {
                let label = match key.quality() {
                    Some(q) => format!("dct@{q}"),
                    None => "cmc".into(),
                };
                points.push(RdPoint::new(rate, v, name, label).expect("serialized streams are non-empty"));
            }
        }
        aggregates.push(agg);
    }
    for list in per_setting.into_values() {
        rows.extend(list);
    }
    rows.sort_by(|a, b| (&a.image_id, a.setting).cmp(&(&b.image_id, b.setting)));
    rows.extend(aggregates);

    let report = RdReport {
        rows,
        points,
        codebook_id: codebook.id(),
        token_codebook_id: token_book.id(),
        seed: cfg.seed,
        lambda: cfg.lambda,
    };
    if let Some(path) = &cfg.output {
        fs::write(path, report.to_csv()).map_err(|e| HarnessError::io(path, e))?;
    }
    Ok(report)
}
