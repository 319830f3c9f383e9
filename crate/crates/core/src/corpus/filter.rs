use std::collections::HashMap;

use chrono::NaiveDate;

use super::Corpus;
use crate::error::{Error, Result};

/// Documents mentioning `keyword` at least once, with the vocabulary
/// recomputed on the subset.
pub fn keyword_filter(corpus: &Corpus, keyword: &str) -> Result<Corpus> {
    let Some(id) = corpus.vocab().id(keyword) else {
        return Err(Error::Empty(format!("keyword {keyword:?} occurs in no document")));
    };
    let (out, _) = corpus.retain(1, |_, doc| doc.tokens.contains(&id));
    Ok(out)
}

/// Documents whose author has at least `min_messages` documents in `corpus`.
pub fn filter_users_by_activity(corpus: &Corpus, min_messages: usize) -> Result<Corpus> {
    if min_messages == 0 {
        return Err(Error::argument("min_messages must be positive"));
    }
    let mut activity: HashMap<&str, usize> = HashMap::new();
    for doc in corpus.docs() {
        *activity.entry(doc.user.as_str()).or_default() += 1;
    }
    let (out, _) = corpus.retain(1, |_, doc| activity[doc.user.as_str()] >= min_messages);
    if out.is_empty() {
        return Err(Error::Empty(format!("no user has {min_messages} or more messages")));
    }
    Ok(out)
}

/// Documents dated within `[from, to]` (either end optional, inclusive).
pub fn filter_date_window(corpus: &Corpus, from: Option<NaiveDate>, to: Option<NaiveDate>) -> Result<Corpus> {
    let (out, _) = corpus.retain(1, |_, doc| {
        let date = corpus.date_of(doc.day);
        from.is_none_or(|f| date >= f) && to.is_none_or(|t| date <= t)
    });
    if out.is_empty() {
        return Err(Error::Empty("no messages inside the date window".into()));
    }
    Ok(out)
}
