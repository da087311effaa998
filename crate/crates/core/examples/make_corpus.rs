//! Writes a synthetic aligned corpus, its dictionary and a parameter track.
//!
//! usage: make_corpus <out-dir> [sentences] [seed] [fps] [lexicon]

use std::fs;
use std::path::PathBuf;

use visedit::synth::{corpus, track_for, CorpusConfig};

fn main() -> std::io::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let Some(dir) = args.first().map(PathBuf::from) else {
        eprintln!("usage: make_corpus <out-dir> [sentences] [seed] [fps] [lexicon]");
        std::process::exit(2);
    };
    let arg = |i: usize, default: &str| args.get(i).cloned().unwrap_or(default.to_string());
    let sentences: usize = arg(1, "1000").parse().expect("sentence count");
    let seed: u64 = arg(2, "1").parse().expect("seed");
    let fps: f64 = arg(3, "25").parse().expect("fps");
    let lexicon: usize = arg(4, "10000").parse().expect("lexicon size");

    let c = corpus(&CorpusConfig {
        sentences,
        seed,
        lexicon,
        ..CorpusConfig::default()
    });
    fs::create_dir_all(&dir)?;
    fs::write(dir.join("alignment.json"), c.transcript.to_json())?;
    fs::write(dir.join("dict.txt"), c.dictionary_text())?;
    fs::write(dir.join("track.vftk"), track_for(&c.transcript, fps, seed).to_vftk())?;
    println!(
        "{} sentences, {} words, {} phones, {:.1} s",
        sentences,
        c.transcript.words.len(),
        c.transcript.phones.len(),
        c.transcript.duration()
    );
    Ok(())
}
