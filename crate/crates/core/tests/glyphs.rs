use aip_core::data::{generate, write_pgm_grid, LabelRule, Split, SynthSpec};
use aip_core::engine::{run_aip, AipConfig};
use aip_core::metrics::preserves_attributes;
use aip_core::models::*;

#[test]
fn glyph_counterfactuals_stay_on_the_attribute_manifold() {
    let spec = SynthSpec {
        n: 1500,
        seed: 4,
        label_attributes: vec![0, 1],
        label_rule: LabelRule::Conjunction,
        train_fraction: 0.8,
        dev_fraction: 0.05,
        ..SynthSpec::glyphs()
    };
    let data = generate(&spec).unwrap();
    let tc = TrainConfig { epochs: 40, lr: 5e-3, ..TrainConfig::default() };
    let target = train_target(&data, &tc).unwrap();
    let disc = train_discriminator(&data, &TrainConfig { seed: 1, ..tc.clone() }).unwrap();
    let gc = GenerativeConfig { train: TrainConfig { seed: 2, epochs: 60, ..tc }, ..GenerativeConfig::default() };
    let gen = train_generative(&data, &disc, &gc).unwrap();

    let (mut flipped, mut preserved) = (0, 0);
    let mut grid = Vec::new();
    for i in data.indices(Split::Test).into_iter().take(80) {
        let r = run_aip(&target, &gen, data.instance(i), data.attribute_row(i), &AipConfig::image_defaults()).unwrap();
        if r.flipped {
            flipped += 1;
            preserved += usize::from(preserves_attributes(&disc, &gen, &r).unwrap());
            if grid.len() < 8 {
                grid.push(data.instance(i).to_vec());
                grid.push(r.x_star.clone());
            }
        }
    }
    assert!(flipped >= 40, "only {flipped} of 80 flipped");
    let share = preserved as f64 / flipped as f64;
    assert!(share >= 0.7, "attributes preserved in {share:.3} of flipped cases");

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("grid.pgm");
    write_pgm_grid(&path, &grid, 12, 2).unwrap();
    assert!(std::fs::read(&path).unwrap().starts_with(b"P5\n"));
}
