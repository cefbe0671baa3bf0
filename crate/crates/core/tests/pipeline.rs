use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use cmc_core::baseline::{decode_image, default_token_codebook, encode_image, photo_like, QuantizerConfig};
use cmc_core::caption;
use cmc_core::entropy::Codebook;
use cmc_core::harness::{random_realizable_scene, random_scene, run_cmc_pipeline, training_captions, STAGE_ENCODER};
use cmc_core::metrics::psnr;
use cmc_core::scene::{self, scene_distance};
use cmc_core::{compression_ratio, Bitstream};

fn codebook() -> Codebook {
    Codebook::train(training_captions(1, 2000).as_bytes())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn multi_object_scenes_survive_render_and_analyze(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_scene(&mut rng);
        let img = scene::render(&s, 256, 256).unwrap();
        prop_assert_eq!(scene::analyze(&img).unwrap(), s);
    }

    #[test]
    fn pipeline_is_semantically_lossless(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let s = random_realizable_scene(&mut rng);
        let img = scene::render(&s, 256, 256).unwrap();
        let out = run_cmc_pipeline(&img, &codebook()).unwrap();
        let back = scene::analyze(&out.reconstruction).unwrap();
        prop_assert_eq!(scene_distance(&s, &back), 0);
        let restored = Bitstream::deserialize(&out.stream.serialize()).unwrap();
        prop_assert_eq!(restored, out.stream);
    }
}

#[test]
fn two_object_rate_scale() {
    let s = caption::parse("a large red circle above a small blue square").unwrap();
    let img = scene::render(&s, 256, 256).unwrap();
    let out = run_cmc_pipeline(&img, &codebook()).unwrap();
    assert!(out.rate_bytes < 60, "{}", out.rate_bytes);
    assert!(compression_ratio(256, 256, out.rate_bytes as f64).unwrap() > 3000.0);
}

#[test]
fn unrealizable_layout_reconstructs_its_canonical_form() {
    let s: scene::SceneGraph = "circle red large 3 3\nsquare blue small 0 0\n".parse().unwrap();
    let img = scene::render(&s, 256, 256).unwrap();
    let out = run_cmc_pipeline(&img, &codebook()).unwrap();
    let back = scene::analyze(&out.reconstruction).unwrap();
    assert_eq!(back, caption::canonical_layout(&s).unwrap());
    // attributes survive even when positions are re-anchored
    let attrs = |g: &scene::SceneGraph| {
        let mut v: Vec<_> = g.objects().iter().map(|o| (o.shape, o.color, o.size)).collect();
        v.sort();
        v
    };
    assert_eq!(attrs(&back), attrs(&s));
}

#[test]
fn photos_are_out_of_domain_but_baseline_codes_them() {
    let img = photo_like(256, 256, 77);
    let err = run_cmc_pipeline(&img, &codebook()).unwrap_err();
    assert_eq!(err.stage(), Some(STAGE_ENCODER));

    let cfg = QuantizerConfig::new(75).unwrap();
    let stream = encode_image(&img, &cfg, default_token_codebook()).unwrap();
    let rec = decode_image(&Bitstream::deserialize(&stream.serialize()).unwrap(), &cfg, default_token_codebook()).unwrap();
    assert!(psnr(&img, &rec, 8).unwrap() > 30.0);
}
