use codemix::textprep::{
    clean, clean_corpus, parse_corpus, scan, tokenize, CorpusFormat, PieceKind, RawTweet,
};
use proptest::prelude::*;
use regex::Regex;

fn raw(text: &str) -> RawTweet {
    RawTweet {
        id: "t".into(),
        text: text.into(),
    }
}

fn surfaces(text: &str) -> Vec<String> {
    clean(&raw(text))
        .tokens
        .into_iter()
        .map(|t| t.surface)
        .collect()
}

#[test]
fn text_lines_keep_file_order() {
    let tweets = parse_corpus("one\ntwo\n\nthree\n", CorpusFormat::Text, "c").unwrap();
    let texts: Vec<&str> = tweets.iter().map(|t| t.text.as_str()).collect();
    assert_eq!(texts, ["one", "two", "three"]);
    assert_eq!(tweets[2].id, "4");
    assert!(parse_corpus("", CorpusFormat::Text, "c")
        .unwrap()
        .is_empty());
}

#[test]
fn malformed_record_names_its_line() {
    let content = r#"{"id":"1","text":"a"}
{"id":"2","text":"b"}
{"id":"3","text":
{"id":"4","text":"d"}
{"id":"5","text":"e"}
"#;
    let err = parse_corpus(content, CorpusFormat::Records, "corpus.jsonl").unwrap_err();
    assert!(err.to_string().contains("corpus.jsonl:3"), "{err}");
}

#[test]
fn cleaning_examples() {
    assert_eq!(
        surfaces("I loved the golpo http://t.co/x @user"),
        ["I", "loved", "the", "golpo"]
    );
    assert_eq!(
        surfaces("khabar ta khub nice chilo ."),
        ["khabar", "ta", "khub", "nice", "chilo", "."]
    );
    assert!(surfaces("😂😂 #fun").is_empty());
    assert_eq!(
        surfaces("visit www.example.com now :-( :D"),
        ["visit", "now"]
    );
}

#[test]
fn tokenize_examples() {
    assert_eq!(tokenize("chilo."), ["chilo", "."]);
    assert!(tokenize("").is_empty());
    assert_eq!(tokenize("a b  c"), ["a", "b", "c"]);
    assert_eq!(tokenize("(wow)!!"), ["(", "wow", ")!!"]);
}

#[test]
fn corpus_cleaning_drops_emptied_tweets() {
    let (kept, report) = clean_corpus(&[raw("hello :)"), raw("@a #b"), raw("ok")]);
    assert_eq!(kept.len(), 2);
    assert_eq!(report.emptied_tweets, 1);
    assert_eq!(
        (report.mentions, report.hashtags, report.smileys),
        (1, 1, 1)
    );
}

fn tweetish() -> impl Strategy<Value = String> {
    let piece = prop_oneof![
        "[a-zA-Z]{1,8}",
        "[.,!?()'\"-]{1,3}",
        "[a-z]{1,5}[.,!?]{1,2}",
        Just("http://t.co/x9".to_string()),
        Just("www.site.org/p".to_string()),
        "@[a-z_]{1,6}",
        "#[a-z0-9]{1,6}",
        Just("😂".to_string()),
        Just("👍🏽".to_string()),
        Just(":)".to_string()),
        Just(":-(".to_string()),
        "[\u{0900}-\u{097F}]{1,4}",
        Just("a@b".to_string()),
    ];
    prop::collection::vec(
        (
            piece,
            prop_oneof![Just(" "), Just("  "), Just("\t"), Just("")],
        ),
        0..12,
    )
    .prop_map(|v| v.into_iter().map(|(p, s)| format!("{p}{s}")).collect())
}

proptest! {
    #[test]
    fn cleaning_is_idempotent(text in tweetish()) {
        let once = clean(&raw(&text));
        let twice = clean(&raw(&once.joined()));
        prop_assert_eq!(once.tokens, twice.tokens);
    }

    #[test]
    fn no_entity_survives_cleaning(text in tweetish()) {
        let url = Regex::new(r"(?i)(https?|ftp)://|www\.").unwrap();
        let entity = Regex::new(r"^[@#]\w").unwrap();
        let emoji = Regex::new(r"[\x{1F000}-\x{1FAFF}\x{2600}-\x{27BF}]").unwrap();
        for t in clean(&raw(&text)).tokens {
            prop_assert!(!t.surface.is_empty());
            prop_assert!(!t.surface.contains(char::is_whitespace));
            prop_assert!(!url.is_match(&t.surface), "{}", t.surface);
            prop_assert!(!entity.is_match(&t.surface), "{}", t.surface);
            prop_assert!(!emoji.is_match(&t.surface), "{}", t.surface);
            prop_assert!(![":)", ":-("].contains(&t.surface.as_str()));
        }
    }

    #[test]
    fn cleaning_never_adds_tokens(text in tweetish()) {
        prop_assert!(clean(&raw(&text)).tokens.len() <= tokenize(&text).len());
    }

    #[test]
    fn tokens_reconstruct_input(text in tweetish()) {
        let toks = tokenize(&text);
        prop_assert!(toks.iter().all(|t| !t.is_empty()));
        let squeezed: String = text.split_whitespace().collect();
        prop_assert_eq!(toks.concat(), squeezed);
        let kinds: Vec<PieceKind> = scan(&text).into_iter().map(|(k, _)| k).collect();
        prop_assert_eq!(kinds.len(), toks.len());
    }
}
