//! Acceptance suite. Every criterion runs even if an earlier one fails; each
//! prints one PASS/FAIL line and the process exits nonzero if any line is FAIL.
//! Runs without the libtest harness so the lines are never captured.

mod common;

use std::collections::{BTreeSet, HashSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use codemix::eval::{
    alpha_from_codes, krippendorff_alpha, score_a, score_b, Metric, SentencePair, DEFAULT_SCORE_CAP,
};
use codemix::langid::{
    self, parse_language_tags, parse_lexicon, render_language_tags, train_langid, LanguageTag,
};
use codemix::postag::HmmTagger;
use codemix::segment::{segment_tweet, UnknownPolicy};
use codemix::tagmap::{map_bn, map_en, TagMapping, UniversalTag};
use codemix::textprep::{clean, CleanTweet, RawTweet};
use codemix::translit::{self, train_translit, Seq2SeqModel, TranslitPair, Transliterate};
use codemix_nnet::gradcheck::DEFAULT_STEP;
use codemix_nnet::train::split_indices;
use codemix_nnet::{grad_check, ModelDims, TrainConfig, Trainable};
use common::{data, ok, s, train_fixture_models};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = fn() -> Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn main() {
    let criteria: [(&str, Duration, Check); 10] = [
        (
            "gradient correctness",
            Duration::from_secs(60),
            gradient_correctness,
        ),
        (
            "language-id capability floor",
            Duration::from_secs(120),
            langid_floor,
        ),
        (
            "transliteration capability floor",
            Duration::from_secs(300),
            translit_floor,
        ),
        (
            "reference sentence language tags",
            Duration::from_secs(60),
            reference_sentence_tags,
        ),
        (
            "bengali tag table and map totality",
            Duration::from_secs(5),
            tag_tables,
        ),
        (
            "viterbi vs exhaustive search",
            Duration::from_secs(5),
            viterbi_oracle,
        ),
        ("krippendorff alpha", Duration::from_secs(5), alpha_checks),
        ("score_A and score_B", Duration::from_secs(5), score_checks),
        (
            "pipeline determinism and conservation",
            Duration::from_secs(60),
            pipeline_determinism,
        ),
        (
            "segmentation examples",
            Duration::from_secs(5),
            segmentation_examples,
        ),
    ];
    let mut failed = Vec::new();
    for (i, (name, budget, check)) in criteria.into_iter().enumerate() {
        let n = i + 1;
        let start = Instant::now();
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let result = result.and_then(|d| {
            if elapsed <= budget {
                Ok(d)
            } else {
                Err(format!("{d}; took {elapsed:.1?}, budget {budget:?}"))
            }
        });
        match result {
            Ok(detail) => println!("PASS {n:>2} {name} ({elapsed:.1?}): {detail}"),
            Err(detail) => {
                println!("FAIL {n:>2} {name} ({elapsed:.1?}): {detail}");
                failed.push(n);
            }
        }
    }
    if !failed.is_empty() {
        eprintln!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}

fn gradient_correctness() -> Result<String, String> {
    let mut worst: f64 = 0.0;
    let mut models = 0;
    let words = "ab\ten\nbca\ten\nxy\tbn\nzyx\tbn\n";
    let lexicon = parse_lexicon(words, "lex").unwrap();
    let pairs = translit::parse_pairs("ab\tकख\nba\tखक\nabb\tकखख\n", "p").unwrap();
    for seed in 0..12u64 {
        let dims = ModelDims {
            embed_dim: 3,
            hidden_dim: 1 + (seed as usize % 8),
            depth: 2,
        };
        let cfg = TrainConfig {
            batch_size: 2,
            epochs: 1,
            seed,
            ..TrainConfig::default()
        };
        let (lid, _) = train_langid(&lexicon, dims, &cfg).unwrap();
        let classifier = lid.classifier();
        let examples: Vec<_> = lexicon
            .iter()
            .map(|e| (classifier.encode(&e.surface), e.language == LanguageTag::Bn))
            .collect();
        let refs: Vec<_> = examples.iter().collect();
        let err = grad_check(
            classifier,
            |m| m.batch_gradient(&refs).unwrap().0,
            |m| m.batch_gradient(&refs).unwrap().1,
            DEFAULT_STEP,
        );
        worst = worst.max(err);

        let (tr, _) = train_translit(&pairs, dims, &cfg).unwrap();
        let batch: Vec<_> = pairs.iter().map(|p| tr.encode_pair(p)).collect();
        let refs: Vec<_> = batch.iter().collect();
        let err = grad_check(
            &tr,
            |m: &Seq2SeqModel| m.batch_gradient(&refs).unwrap().0,
            |m: &Seq2SeqModel| m.batch_gradient(&refs).unwrap().1,
            DEFAULT_STEP,
        );
        worst = worst.max(err);
        models += 2;
    }
    ensure(worst < 1e-4, format!("max relative error {worst:.2e}"))?;
    Ok(format!("{models} models, max relative error {worst:.2e}"))
}

/// Unique words of length 3..=8 drawn from `alphabet`.
fn words_from(alphabet: &[u8], count: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
    let mut seen = BTreeSet::new();
    let mut out = Vec::new();
    while out.len() < count {
        let len = rng.gen_range(3..=8);
        let w: String = (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())] as char)
            .collect();
        if seen.insert(w.clone()) {
            out.push(w);
        }
    }
    out
}

fn langid_floor() -> Result<String, String> {
    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let en = words_from(b"abcdefghijklm", 400, &mut rng);
    let bn = words_from(b"nopqrstuvwxyz", 400, &mut rng);
    let mut text = String::new();
    for w in &en {
        text.push_str(&format!("{w}\ten\n"));
    }
    for w in &bn {
        text.push_str(&format!("{w}\tbn\n"));
    }
    let lexicon = parse_lexicon(&text, "synthetic").unwrap();
    let cfg = langid::default_train_config();
    ensure(
        cfg.batch_size == 30 && cfg.epochs == 30 && cfg.validation_split == 0.2,
        "unexpected default training regime",
    )?;
    let (model, report) =
        train_langid(&lexicon, ModelDims::default(), &cfg).map_err(|e| e.to_string())?;
    let (_, held_out) = split_indices(
        lexicon.len(),
        cfg.validation_split,
        &mut ChaCha8Rng::seed_from_u64(cfg.seed),
    );
    let correct = held_out
        .iter()
        .filter(|&&i| model.tag_token(&lexicon[i].surface) == lexicon[i].language)
        .count();
    let reported = report
        .epochs
        .last()
        .and_then(|e| e.validation_accuracy)
        .unwrap_or(0.0);
    ensure(
        correct == held_out.len(),
        format!("held-out {correct}/{}", held_out.len()),
    )?;
    ensure(
        reported == 1.0,
        format!("reported validation accuracy {reported}"),
    )?;
    Ok(format!("held-out {correct}/{}", held_out.len()))
}

/// Exact-match count of greedy decodes over the training partition.
fn training_exact_match(
    pairs: &[TranslitPair],
    cfg: &TrainConfig,
) -> Result<(usize, usize), String> {
    let (model, _) = train_translit(pairs, ModelDims::default(), cfg).map_err(|e| e.to_string())?;
    let (train_idx, _) = split_indices(
        pairs.len(),
        cfg.validation_split,
        &mut ChaCha8Rng::seed_from_u64(cfg.seed),
    );
    let hits = train_idx
        .iter()
        .filter(|&&i| {
            let p = &pairs[i];
            model.transliterate(&p.roman) == p.devanagari
        })
        .count();
    Ok((hits, train_idx.len()))
}

fn translit_floor() -> Result<String, String> {
    let alphabet = ['a', 'b', 'c', 'd', 'e'];
    let native = ['क', 'ख', 'ग', 'घ', 'च'];
    let to_native = |w: &str| -> String {
        w.chars()
            .map(|c| native[alphabet.iter().position(|&a| a == c).unwrap()])
            .collect()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let identity: Vec<TranslitPair> = words_from(b"abcde", 200, &mut rng)
        .into_iter()
        .map(|w| TranslitPair {
            devanagari: to_native(&w),
            roman: w,
        })
        .collect();
    let mut short = BTreeSet::new();
    while short.len() < 200 {
        let len = rng.gen_range(1..=4);
        short.insert(
            (0..len)
                .map(|_| alphabet[rng.gen_range(0..5)])
                .collect::<String>(),
        );
    }
    let reversal: Vec<TranslitPair> = short
        .into_iter()
        .map(|w| TranslitPair {
            devanagari: to_native(&w.chars().rev().collect::<String>()),
            roman: w,
        })
        .collect();
    let base = translit::default_train_config();
    ensure(
        base.epochs == 50 && base.validation_split == 0.1,
        "unexpected default training regime",
    )?;
    // 200 pairs fit in a single default batch, so the batch is scaled down.
    let cfg = TrainConfig {
        batch_size: 8,
        ..base
    };
    let (id_hits, id_n) = training_exact_match(&identity, &cfg)?;
    let (rev_hits, rev_n) = training_exact_match(&reversal, &cfg)?;
    let id_rate = id_hits as f64 / id_n as f64;
    let rev_rate = rev_hits as f64 / rev_n as f64;
    let detail = format!("identity {id_hits}/{id_n}, reversal {rev_hits}/{rev_n}");
    ensure(id_rate >= 0.99 && rev_rate >= 0.95, detail.clone())?;
    Ok(detail)
}

fn reference_sentence_tags() -> Result<String, String> {
    let lexicon = langid::load_lexicon(&data("sentence_lexicon.tsv")).map_err(|e| e.to_string())?;
    let dims = ModelDims {
        embed_dim: 16,
        hidden_dim: 16,
        depth: 2,
    };
    let cfg = TrainConfig {
        batch_size: 4,
        epochs: 60,
        validation_split: 0.0,
        ..langid::default_train_config()
    };
    let (model, _) = train_langid(&lexicon, dims, &cfg).map_err(|e| e.to_string())?;
    let raw = RawTweet {
        id: "reference".into(),
        text: "I loved the golpo and khabar ta khub nice chilo .".into(),
    };
    let (tagged, _) = model.tag_tweet(&clean(&raw));
    let got = render_language_tags(&tagged);
    let want = "I\\en loved\\en the\\en golpo\\bn and\\en khabar\\bn ta\\bn khub\\bn nice\\en chilo\\bn .\\un";
    let matching = got
        .split(' ')
        .zip(want.split(' '))
        .filter(|(a, b)| a == b)
        .count();
    ensure(got == want, format!("{matching}/11 tokens: {got}"))?;
    Ok("11/11 tokens".into())
}

fn tag_tables() -> Result<String, String> {
    let rows = [
        ("NN", "NOUN"),
        ("NNP", "NOUN"),
        ("INTJ", "NOUN"),
        ("VM", "VERB"),
        ("VAUX", "VERB"),
        ("JJ", "ADJ"),
        ("QF", "ADJ"),
        ("RB", "ADV"),
        ("NEG", "ADV"),
        ("PRP", "PRON"),
        ("WQ", "PRON"),
        ("DEM", "DEM"),
        ("PSP", "ADP"),
        ("RP", "PRT"),
        ("CC", "CONJ"),
        ("INTF", "INTF"),
        ("QC", "NUM"),
        ("RDP", "RDP"),
        ("SYM", "SYM"),
        ("UN", "UN"),
        ("DET", "DET"),
    ];
    for (native, universal) in rows {
        ensure(
            map_bn(native).as_str() == universal,
            format!("{native} -> {}", map_bn(native)),
        )?;
    }
    ensure(TagMapping::bengali().len() == 21, "bengali table size")?;
    let all: HashSet<UniversalTag> = UniversalTag::ALL.into_iter().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(10_000);
    for _ in 0..10_000 {
        let len = rng.gen_range(0..10);
        let tag: String = (0..len).map(|_| rng.gen_range(' '..='\u{0AFF}')).collect();
        ensure(
            all.contains(&map_bn(&tag)) && all.contains(&map_en(&tag)),
            format!("{tag:?}"),
        )?;
    }
    Ok("21/21 rows, 10000 random strings mapped".into())
}

fn random_distribution(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

fn viterbi_oracle() -> Result<String, String> {
    for seed in 0..100u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1000);
        let t = rng.gen_range(1..=4);
        let v = rng.gen_range(1..=4);
        let start = random_distribution(&mut rng, t);
        let trans: Vec<Vec<f64>> = (0..t)
            .map(|_| random_distribution(&mut rng, t + 1))
            .collect();
        let emit: Vec<Vec<f64>> = (0..t)
            .map(|_| random_distribution(&mut rng, v + 1))
            .collect();
        let hmm = HmmTagger::from_probabilities(
            (0..t).map(|i| format!("T{i}")).collect(),
            (0..v).map(|i| format!("w{i}")).collect(),
            start.clone(),
            trans.clone(),
            emit.clone(),
        )
        .map_err(|e| e.to_string())?;
        let len = rng.gen_range(1..=5);
        // Column v is the unknown-word column.
        let cols: Vec<usize> = (0..len).map(|_| rng.gen_range(0..=v)).collect();
        let words: Vec<String> = cols
            .iter()
            .map(|&c| {
                if c == v {
                    "zzz".into()
                } else {
                    format!("w{c}")
                }
            })
            .collect();
        let mut best = (Vec::new(), -1.0);
        for code in 0..t.pow(len as u32) {
            let path: Vec<usize> = (0..len).map(|i| code / t.pow(i as u32) % t).collect();
            let mut p = start[path[0]] * emit[path[0]][cols[0]];
            for i in 1..len {
                p *= trans[path[i - 1]][path[i]] * emit[path[i]][cols[i]];
            }
            p *= trans[path[len - 1]][t];
            if p > best.1 {
                best = (path, p);
            }
        }
        let refs: Vec<&str> = words.iter().map(String::as_str).collect();
        let got = hmm.viterbi(&refs);
        ensure(
            got == best.0,
            format!("seed {seed}: {got:?} vs {:?}", best.0),
        )?;
    }
    Ok("100/100 HMMs agree".into())
}

fn alpha_oracle(units: &[(usize, usize)], metric: Metric) -> f64 {
    let delta = |a: usize, b: usize| match metric {
        Metric::Nominal => f64::from(u8::from(a != b)),
        Metric::Interval => (a as f64 - b as f64).powi(2),
    };
    let values: Vec<usize> = units.iter().flat_map(|&(a, b)| [a, b]).collect();
    let n = values.len() as f64;
    let d_o: f64 = units.iter().map(|&(a, b)| 2.0 * delta(a, b)).sum::<f64>() / n;
    let mut d_e = 0.0;
    for (i, &a) in values.iter().enumerate() {
        for (j, &b) in values.iter().enumerate() {
            if i != j {
                d_e += delta(a, b);
            }
        }
    }
    d_e /= n * (n - 1.0);
    if d_e == 0.0 {
        1.0
    } else {
        1.0 - d_o / d_e
    }
}

fn sentence(manual: &[UniversalTag], system: &[UniversalTag], switches: &[usize]) -> SentencePair {
    let toks = |tags: &[UniversalTag]| {
        tags.iter()
            .enumerate()
            .map(|(i, &t)| (format!("w{i}"), t))
            .collect()
    };
    SentencePair {
        manual: toks(manual),
        system: toks(system),
        switch_points: switches.to_vec(),
    }
}

fn alpha_checks() -> Result<String, String> {
    use UniversalTag::*;
    let perfect = sentence(&[Noun, Verb, Adj, Sym], &[Noun, Verb, Adj, Sym], &[1]);
    for metric in [Metric::Nominal, Metric::Interval] {
        let a = krippendorff_alpha(std::slice::from_ref(&perfect), metric)
            .map_err(|e| e.to_string())?;
        ensure(a == 1.0, format!("perfect agreement gave {a}"))?;
    }
    let mut worst: f64 = 0.0;
    for seed in 0..50u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 77);
        let units: Vec<(usize, usize)> = (0..rng.gen_range(2..=8))
            .map(|_| (rng.gen_range(0..4), rng.gen_range(0..4)))
            .collect();
        for metric in [Metric::Nominal, Metric::Interval] {
            let got = alpha_from_codes(&units, metric).map_err(|e| e.to_string())?;
            worst = worst.max((got - alpha_oracle(&units, metric)).abs());
        }
    }
    ensure(worst < 1e-10, format!("oracle difference {worst:.2e}"))?;
    let a = [0, 1, 0, 0, 0, 0, 0, 0, 1, 0];
    let b = [1, 1, 1, 0, 0, 1, 0, 0, 0, 0];
    let units: Vec<(usize, usize)> = a.into_iter().zip(b).collect();
    let textbook = alpha_from_codes(&units, Metric::Nominal).map_err(|e| e.to_string())?;
    ensure(
        (textbook - 0.0952).abs() < 1e-4,
        format!("textbook example gave {textbook}"),
    )?;
    Ok(format!(
        "perfect = 1, oracle difference {worst:.1e}, textbook {textbook:.4}"
    ))
}

fn score_checks() -> Result<String, String> {
    use UniversalTag::*;
    let cases = [
        (
            sentence(&[Noun, Verb, Adj, Adv], &[Noun, Verb, Adj, Noun], &[]),
            3.0 / 4.0,
        ),
        (
            sentence(&[Noun, Verb, Adj], &[Noun, Noun, Noun], &[]),
            1.0 / 3.0,
        ),
        (sentence(&[Pron, Intf], &[Det, Adv], &[]), 0.0),
    ];
    for (pair, want) in &cases {
        let got = score_a(pair).map_err(|e| e.to_string())?;
        ensure(got == *want, format!("score_A {got} != {want}"))?;
    }
    let one = score_b(
        &sentence(&[Noun, Verb], &[Noun, Verb], &[1]),
        10.0,
        DEFAULT_SCORE_CAP,
    )
    .map_err(|e| e.to_string())?;
    let two = score_b(
        &sentence(&[Noun, Verb, Adj], &[Noun, Verb, Adj], &[1, 2]),
        10.0,
        DEFAULT_SCORE_CAP,
    )
    .map_err(|e| e.to_string())?;
    ensure(
        (one.value - 0.6021).abs() < 1e-4,
        format!("n=1 gave {}", one.value),
    )?;
    ensure(
        (two.value - 1.2041).abs() < 1e-4,
        format!("n=2 gave {}", two.value),
    )?;
    Ok(format!(
        "score_A fractions exact, score_B {:.4} and {:.4}",
        one.value, two.value
    ))
}

fn pipeline_determinism() -> Result<String, String> {
    let dir = tempfile::tempdir().unwrap();
    let config = train_fixture_models(dir.path());
    let run = |tag: &str| {
        let discards = dir.path().join(format!("discards-{tag}.tsv"));
        let start = Instant::now();
        let out = ok(&[
            "--config",
            s(&config),
            "--seed",
            "11",
            "tag",
            "--input",
            s(&data("tweets.txt")),
            "--format",
            "records",
            "--discards",
            s(&discards),
        ]);
        (
            out.stdout,
            std::fs::read_to_string(&discards).unwrap(),
            start.elapsed(),
        )
    };
    let (first, discards, t1) = run("a");
    let (second, _, t2) = run("b");
    ensure(first == second, "outputs differ between runs")?;
    let text = String::from_utf8(first).unwrap();
    let mut kept = BTreeSet::new();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).map_err(|e| e.to_string())?;
        if let Some(id) = v.get("tweet") {
            kept.insert(id.as_str().unwrap_or_default().to_string());
        }
    }
    let discarded = discards.lines().filter(|l| !l.is_empty()).count();
    ensure(
        kept.len() + discarded == 100,
        format!("kept {} + discarded {discarded}", kept.len()),
    )?;
    Ok(format!(
        "identical output, kept {} + discarded {discarded} = 100, tag runs {t1:.1?} and {t2:.1?}",
        kept.len()
    ))
}

fn segmentation_examples() -> Result<String, String> {
    let bracketed = |line: &str| {
        let tweet = CleanTweet {
            id: "t".into(),
            tokens: parse_language_tags(line).unwrap(),
        };
        segment_tweet(&tweet, UnknownPolicy::Drop)
            .iter()
            .map(|s| {
                let lang = if s.language == LanguageTag::En {
                    "En"
                } else {
                    "Bn"
                };
                format!("({}){lang}", s.surfaces().join(" "))
            })
            .collect::<Vec<_>>()
            .join(" ")
    };
    let examples = [
        (
            "Movie\\en ta\\bn bhalo\\bn chilo\\bn but\\en mid\\en point\\en e\\bn amar\\bn khub\\bn boring\\en lagte\\bn shuru\\bn korlo\\bn",
            "(Movie)En (ta bhalo chilo)Bn (but mid point)En (e amar khub)Bn (boring)En (lagte shuru korlo)Bn",
        ),
        (
            "I\\en had\\en to\\en go\\en karon\\bn o\\bn khub\\bn urgently\\en daklo\\bn amaye\\bn",
            "(I had to go)En (karon o khub)Bn (urgently)En (daklo amaye)Bn",
        ),
    ];
    for (line, want) in examples {
        let got = bracketed(line);
        ensure(got == want, format!("got {got}"))?;
    }
    Ok("2/2 examples".into())
}
