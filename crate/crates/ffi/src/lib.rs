//! C ABI over `stormtopics`.
//!
//! Every fallible function returns an [`StStatus`]; on failure the message
//! is available from [`st_last_error`] on the same thread. Objects are
//! opaque handles released with their matching `_free` function. Panics
//! never cross the boundary; they surface as `ST_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use stormtopics::corpus::{self, Corpus, IngestOptions, TokenizerRules};
use stormtopics::lda::{self, Hyperparams, Schedule, TopicModel};
use stormtopics::{report, selection, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StStatus {
    Ok = 0,
    Internal = 1,
    Argument = 2,
    Io = 3,
    Empty = 4,
    Numerical = 5,
    NullPointer = 6,
    Panic = 7,
}

/// Opaque corpus handle.
pub struct StCorpus(Corpus);

/// Opaque fitted-model handle.
pub struct StModel(TopicModel);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> StStatus {
    match e.exit_code() {
        2 => StStatus::Argument,
        3 => StStatus::Io,
        4 => StStatus::Empty,
        5 => StStatus::Numerical,
        _ => StStatus::Internal,
    }
}

enum Fail {
    Lib(Error),
    Null(&'static str),
}

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail::Lib(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StStatus::Ok,
        Ok(Err(Fail::Lib(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Ok(Err(Fail::Null(what))) => {
            set_error(format!("{what} is null"));
            StStatus::NullPointer
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            StStatus::Panic
        }
    }
}

unsafe fn as_ref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or(Fail::Null(what))
}

unsafe fn out_ptr<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or(Fail::Null(what))
}

unsafe fn path_arg(p: *const c_char, what: &'static str) -> Result<PathBuf, Fail> {
    if p.is_null() {
        return Err(Fail::Null(what));
    }
    let s = CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Error::argument(format!("{what} is not valid UTF-8")))?;
    Ok(PathBuf::from(s))
}

fn boxed<T>(v: T) -> *mut T {
    Box::into_raw(Box::new(v))
}

/// Message for the most recent failure on this thread, or null.
/// The pointer stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn st_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn st_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Frees a string returned by this library. Null is ignored.
///
/// # Safety
/// `s` must come from this library and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn st_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Loads a corpus archive directory written by `stormtopics ingest`.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn st_corpus_load(dir: *const c_char, out: *mut *mut StCorpus) -> StStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let dir = path_arg(dir, "dir")?;
        *out = boxed(StCorpus(corpus::load_archive(&dir)?));
        Ok(())
    })
}

/// Tokenizes a JSONL message file with the bundled English stop list and
/// drops words seen fewer than `min_count` times.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn st_corpus_ingest(path: *const c_char, min_count: u64, out: *mut *mut StCorpus) -> StStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let path = path_arg(path, "path")?;
        let opts = IngestOptions { rules: TokenizerRules::default(), epoch: None, lang: None };
        let (corpus, _) = corpus::ingest_path(&path, &opts)?;
        let (corpus, _) = corpus.prune(min_count);
        if corpus.is_empty() {
            return Err(Error::Empty(format!("no document survives min_count={min_count}")).into());
        }
        *out = boxed(StCorpus(corpus));
        Ok(())
    })
}

/// Document, token and vocabulary counts. Any out pointer may be null.
///
/// # Safety
/// `corpus` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_corpus_sizes(
    corpus: *const StCorpus,
    num_docs: *mut usize,
    num_tokens: *mut u64,
    vocab_size: *mut usize,
) -> StStatus {
    guard(|| {
        let c = &as_ref(corpus, "corpus")?.0;
        if let Some(p) = num_docs.as_mut() {
            *p = c.num_docs();
        }
        if let Some(p) = num_tokens.as_mut() {
            *p = c.num_tokens();
        }
        if let Some(p) = vocab_size.as_mut() {
            *p = c.vocab().len();
        }
        Ok(())
    })
}

/// Splits off a held-out test set. The test corpus shares the training
/// vocabulary, so a model fit on `out_train` can score `out_test`.
///
/// # Safety
/// `corpus` must be a live handle; both out pointers writable.
#[no_mangle]
pub unsafe extern "C" fn st_corpus_split(
    corpus: *const StCorpus,
    ratio: f64,
    seed: u64,
    out_train: *mut *mut StCorpus,
    out_test: *mut *mut StCorpus,
) -> StStatus {
    guard(|| {
        let c = &as_ref(corpus, "corpus")?.0;
        let out_train = out_ptr(out_train, "out_train")?;
        let out_test = out_ptr(out_test, "out_test")?;
        let split = selection::split_heldout(c, ratio, seed)?;
        *out_train = boxed(StCorpus(split.train));
        *out_test = boxed(StCorpus(split.test));
        Ok(())
    })
}

/// # Safety
/// `corpus` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn st_corpus_free(corpus: *mut StCorpus) {
    if !corpus.is_null() {
        drop(Box::from_raw(corpus));
    }
}

/// Fits a topic model by collapsed Gibbs sampling. `alpha <= 0` selects
/// 50/K. Sampling runs `burn_in` sweeps, then keeps `samples` states spaced
/// `lag` sweeps apart and averages their estimates.
///
/// # Safety
/// `corpus` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_model_train(
    corpus: *const StCorpus,
    k: usize,
    alpha: f64,
    beta: f64,
    burn_in: u64,
    samples: u64,
    lag: u64,
    seed: u64,
    out: *mut *mut StModel,
) -> StStatus {
    guard(|| {
        let c = &as_ref(corpus, "corpus")?.0;
        let out = out_ptr(out, "out")?;
        if k == 0 {
            return Err(Error::argument("K must be at least 1").into());
        }
        let alpha = if alpha > 0.0 { alpha } else { 50.0 / k as f64 };
        let hyper = Hyperparams::new(k, alpha, beta)?;
        let schedule = Schedule { burn_in, sample_count: samples, sample_lag: lag };
        schedule.validate()?;
        let (model, _, _) = lda::train(c, hyper, schedule, seed)?;
        *out = boxed(StModel(model));
        Ok(())
    })
}

/// Loads a model directory written by `stormtopics train`.
///
/// # Safety
/// `dir` must be a NUL-terminated string; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_model_load(dir: *const c_char, out: *mut *mut StModel) -> StStatus {
    guard(|| {
        let out = out_ptr(out, "out")?;
        let dir = path_arg(dir, "dir")?;
        *out = boxed(StModel(lda::load_model_dir(&dir)?.0));
        Ok(())
    })
}

/// Topic, vocabulary and document counts. Any out pointer may be null.
///
/// # Safety
/// `model` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn st_model_sizes(
    model: *const StModel,
    num_topics: *mut usize,
    num_words: *mut usize,
    num_docs: *mut usize,
) -> StStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0;
        if let Some(p) = num_topics.as_mut() {
            *p = m.num_topics();
        }
        if let Some(p) = num_words.as_mut() {
            *p = m.num_words();
        }
        if let Some(p) = num_docs.as_mut() {
            *p = m.num_docs();
        }
        Ok(())
    })
}

unsafe fn copy_row(row: &[f64], buf: *mut f64, len: usize) -> Result<(), Fail> {
    if buf.is_null() {
        return Err(Fail::Null("buf"));
    }
    if len != row.len() {
        return Err(Error::argument(format!("buffer holds {len} values, row has {}", row.len())).into());
    }
    ptr::copy_nonoverlapping(row.as_ptr(), buf, len);
    Ok(())
}

/// Copies the word distribution of topic `k` into `buf` (length = vocabulary size).
///
/// # Safety
/// `model` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn st_model_phi(model: *const StModel, k: usize, buf: *mut f64, len: usize) -> StStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0;
        if k >= m.num_topics() {
            return Err(Error::argument(format!("topic {k} out of range")).into());
        }
        copy_row(m.phi_row(k), buf, len)
    })
}

/// Copies the topic mixture of document `doc` into `buf` (length = K).
///
/// # Safety
/// `model` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn st_model_theta(model: *const StModel, doc: usize, buf: *mut f64, len: usize) -> StStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0;
        if doc >= m.num_docs() {
            return Err(Error::argument(format!("document {doc} out of range")).into());
        }
        copy_row(m.theta_row(doc), buf, len)
    })
}

/// Top `n` words of topic `k` as a JSON array of `{"word", "p"}` objects.
/// Free the result with [`st_string_free`].
///
/// # Safety
/// `model` must be a live handle; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_model_top_words_json(model: *const StModel, k: usize, n: usize, out: *mut *mut c_char) -> StStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0;
        let out = out_ptr(out, "out")?;
        let words = report::top_words(m, k, n)?;
        let json = serde_json::to_string(&words).map_err(|e| Error::Format(e.to_string()))?;
        *out = CString::new(json).expect("json has no nul").into_raw();
        Ok(())
    })
}

/// Held-out perplexity of `test`, which must share the model's vocabulary
/// (see [`st_corpus_split`]). `alpha <= 0` uses the model's own alpha.
///
/// # Safety
/// Both handles must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn st_model_perplexity(
    model: *const StModel,
    test: *const StCorpus,
    alpha: f64,
    burn_in: u64,
    samples: u64,
    lag: u64,
    seed: u64,
    out: *mut f64,
) -> StStatus {
    guard(|| {
        let m = &as_ref(model, "model")?.0;
        let t = &as_ref(test, "test")?.0;
        let out = out_ptr(out, "out")?;
        let alpha = if alpha > 0.0 { alpha } else { m.hyper().alpha };
        let schedule = Schedule { burn_in, sample_count: samples, sample_lag: lag };
        schedule.validate()?;
        *out = selection::perplexity(m, t, alpha, &schedule, seed)?;
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn st_model_free(model: *mut StModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
