//! Regenerates the bundled corpora under `data/` from their seeds.
//! A unit test pins the checked-in files to these generators, so any
//! generator change must rerun this example.

use std::fs;
use std::path::Path;

use ldade::synth;

fn main() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("data");
    fs::create_dir_all(&dir).expect("data directory");
    fs::write(
        dir.join("planted_200.csv"),
        synth::planted_csv(200, synth::BUNDLED_PLANTED_SEED),
    )
    .expect("write planted corpus");
    fs::write(
        dir.join("semisynth_1k.txt"),
        synth::semisynth_lines(1000, synth::BUNDLED_SEMISYNTH_SEED),
    )
    .expect("write semi-synthetic corpus");
    println!("wrote planted_200.csv and semisynth_1k.txt under {}", dir.display());
}
