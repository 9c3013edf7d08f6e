#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

pub fn codemix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_codemix"))
        .args(args)
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str]) -> Output {
    let out = codemix(args);
    assert!(
        out.status.success(),
        "codemix {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}

/// Trains all four fixture models into `dir` and writes `dir/pipeline.toml`
/// pointing at them.
pub fn train_fixture_models(dir: &Path) -> PathBuf {
    let config = dir.join("pipeline.toml");
    std::fs::write(
        &config,
        r#"seed = 7

[train.langid]
batch_size = 4
validation_split = 0.0
embed_dim = 16
hidden_dim = 32

[train.translit]
batch_size = 8
epochs = 30
validation_split = 0.0
embed_dim = 16
hidden_dim = 32

[pipeline]
langid_model = "langid.json"
translit_model = "translit.json"
en_tagger = "en.json"
bn_tagger = "bn.json"
"#,
    )
    .unwrap();
    let c = s(&config);
    for (subject, file, out) in [
        ("langid", "lexicon.tsv", "langid.json"),
        ("translit", "translit_pairs.tsv", "translit.json"),
        ("hmm-en", "en_tagged.txt", "en.json"),
        ("hmm-bn", "bn_tagged.txt", "bn.json"),
    ] {
        ok(&[
            "--config",
            c,
            "train",
            subject,
            "--data",
            s(&data(file)),
            "--out",
            s(&dir.join(out)),
        ]);
    }
    config
}
