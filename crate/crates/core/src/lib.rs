//! Part-of-speech tagging for English-Bengali code-mixed tweets where the
//! Bengali is written in Roman script.
//!
//! Tweets are cleaned, tagged token by token as English, Bengali or unknown,
//! split into same-language segments, and each segment is POS-tagged by a
//! tagger for its language (Bengali after back-transliteration into
//! Devanagari). Native tags are then mapped onto one universal tagset.

pub mod eval;
pub mod formats;
pub mod langid;
pub mod pipeline;
pub mod postag;
pub mod segment;
pub mod tagmap;
pub mod textprep;
pub mod translit;

pub use formats::DataError;
pub use langid::LanguageTag;
pub use tagmap::UniversalTag;
pub use textprep::{CleanTweet, RawTweet, Token};
