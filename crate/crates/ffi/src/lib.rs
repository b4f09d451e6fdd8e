//! C ABI over `forge-core`.
//!
//! Objects cross the boundary as opaque handles created by `*_new`/`*_load`
//! functions and released by the matching `*_free`. Every fallible call
//! returns a [`ForgeStatus`]; on failure [`forge_last_error`] describes the
//! most recent error on the calling thread. Class labels are `uint8_t` codes:
//! 0 hateful, 1 offensive, 2 neither.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use forge_core::baselines::{Predictor, TextClassifier};
use forge_core::ensemble::{self, ProbabilityMatrix};
use forge_core::metrics::MetricsReport;
use forge_core::predformat;
use forge_core::preprocess::{Normalized, PreprocessConfig, Preprocessor};
use forge_core::{ClassLabel, NUM_CLASSES};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForgeStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    InvalidMatrix = 4,
    Ensemble = 5,
    Model = 6,
    Format = 7,
    Preprocess = 8,
    Panic = 99,
}

/// Text normalization pipeline.
pub struct ForgePreprocessor(Preprocessor);

/// `rows x 3` class-probability matrix.
pub struct ForgeMatrix(ProbabilityMatrix);

/// Trained base learner.
pub struct ForgeModel(TextClassifier);

/// Scores from [`forge_evaluate`]. `confusion[t][p]` counts true class `t` predicted as `p`.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ForgeMetrics {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub f1: [f64; 3],
    pub confusion: [[u64; 3]; 3],
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Fail(ForgeStatus, String);

impl Fail {
    fn new(status: ForgeStatus, e: impl ToString) -> Self {
        Fail(status, e.to_string())
    }
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> ForgeStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            set_error("");
            ForgeStatus::Ok
        }
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            ForgeStatus::Panic
        }
    }
}

fn null(what: &str) -> Fail {
    Fail(ForgeStatus::NullPointer, format!("{what} is null"))
}

unsafe fn str_arg<'a>(p: *const c_char, what: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Fail(ForgeStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn out_arg<'a, T>(p: *mut T, what: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

unsafe fn slice_arg<'a, T>(p: *const T, n: usize, what: &str) -> Result<&'a [T], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, n))
}

fn into_c_string(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).map_or(ptr::null_mut(), CString::into_raw)
}

fn label_arg(code: u8) -> Result<ClassLabel, Fail> {
    ClassLabel::from_index(code as usize).ok_or_else(|| Fail(ForgeStatus::InvalidArgument, format!("bad class code {code}")))
}

/// Message for the last failed call on this thread; empty after a success.
/// The pointer stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn forge_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, a static string.
#[no_mangle]
pub extern "C" fn forge_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `s` must come from this library (e.g. [`forge_preprocessor_normalize`]) and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn forge_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Pipeline with default settings and the bundled lexicon.
///
/// # Safety
/// `out` must be a valid pointer to write the handle to.
#[no_mangle]
pub unsafe extern "C" fn forge_preprocessor_new(out: *mut *mut ForgePreprocessor) -> ForgeStatus {
    guard(|| {
        *out_arg(out, "out")? = Box::into_raw(Box::new(ForgePreprocessor(Preprocessor::default())));
        Ok(())
    })
}

/// Pipeline configured from a `key=value` file.
///
/// # Safety
/// `config_path` must be a NUL-terminated string; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn forge_preprocessor_from_config(
    config_path: *const c_char,
    out: *mut *mut ForgePreprocessor,
) -> ForgeStatus {
    guard(|| {
        let path = str_arg(config_path, "config_path")?;
        let out = out_arg(out, "out")?;
        let config = PreprocessConfig::from_file(Path::new(path)).map_err(|e| Fail::new(ForgeStatus::Preprocess, e))?;
        let pp = Preprocessor::new(config).map_err(|e| Fail::new(ForgeStatus::Preprocess, e))?;
        *out = Box::into_raw(Box::new(ForgePreprocessor(pp)));
        Ok(())
    })
}

/// # Safety
/// `pp` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn forge_preprocessor_free(pp: *mut ForgePreprocessor) {
    if !pp.is_null() {
        drop(Box::from_raw(pp));
    }
}

/// Normalizes `text`. When the tweet is dropped `*dropped` is true and
/// `*out_text` is null; otherwise `*out_text` receives a string to release
/// with [`forge_string_free`].
///
/// # Safety
/// All pointers must be valid; `text` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn forge_preprocessor_normalize(
    pp: *const ForgePreprocessor,
    text: *const c_char,
    out_text: *mut *mut c_char,
    dropped: *mut bool,
) -> ForgeStatus {
    guard(|| {
        let pp = pp.as_ref().ok_or_else(|| null("pp"))?;
        let text = str_arg(text, "text")?;
        let out_text = out_arg(out_text, "out_text")?;
        let dropped = out_arg(dropped, "dropped")?;
        match pp.0.normalize(text) {
            Normalized::Clean(c) => {
                *out_text = into_c_string(c.into_string());
                *dropped = false;
            }
            Normalized::Dropped => {
                *out_text = ptr::null_mut();
                *dropped = true;
            }
        }
        Ok(())
    })
}

/// Copies `rows * 3` row-major probabilities into a new matrix. Each row must
/// lie in [0, 1] and sum to 1 within 1e-6.
///
/// # Safety
/// `producer` must be NUL-terminated; `data` must hold `rows * 3` doubles.
#[no_mangle]
pub unsafe extern "C" fn forge_matrix_new(
    producer: *const c_char,
    data: *const f64,
    rows: usize,
    out: *mut *mut ForgeMatrix,
) -> ForgeStatus {
    guard(|| {
        let producer = str_arg(producer, "producer")?;
        let len = rows
            .checked_mul(NUM_CLASSES)
            .ok_or_else(|| Fail(ForgeStatus::InvalidArgument, "rows overflow".into()))?;
        let data = slice_arg(data, len, "data")?;
        let out = out_arg(out, "out")?;
        let rows: Vec<[f64; NUM_CLASSES]> = data.chunks_exact(NUM_CLASSES).map(|c| [c[0], c[1], c[2]]).collect();
        let m = ProbabilityMatrix::new(producer, rows).map_err(|e| Fail::new(ForgeStatus::InvalidMatrix, e))?;
        *out = Box::into_raw(Box::new(ForgeMatrix(m)));
        Ok(())
    })
}

/// Reads a prediction file. Row `i` of the matrix is the `i`-th line of the file.
///
/// # Safety
/// `path` must be NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn forge_matrix_read(path: *const c_char, out: *mut *mut ForgeMatrix) -> ForgeStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let preds = predformat::read_predictions(Path::new(path)).map_err(|e| match e {
            predformat::PredFormatError::Io { .. } => Fail::new(ForgeStatus::Io, e),
            _ => Fail::new(ForgeStatus::Format, e),
        })?;
        *out = Box::into_raw(Box::new(ForgeMatrix(preds.matrix)));
        Ok(())
    })
}

/// Writes `m` as a prediction file with one id per row.
///
/// # Safety
/// `ids` must point to `forge_matrix_rows(m)` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn forge_matrix_write(m: *const ForgeMatrix, ids: *const *const c_char, path: *const c_char) -> ForgeStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("m"))?;
        let path = str_arg(path, "path")?;
        let ids = slice_arg(ids, m.0.len(), "ids")?
            .iter()
            .map(|&p| str_arg(p, "id").map(str::to_string))
            .collect::<Result<Vec<_>, _>>()?;
        predformat::write_predictions(Path::new(path), &ids, &m.0).map_err(|e| match e {
            predformat::PredFormatError::Io { .. } => Fail::new(ForgeStatus::Io, e),
            _ => Fail::new(ForgeStatus::Format, e),
        })
    })
}

/// Number of rows; 0 for a null handle.
///
/// # Safety
/// `m` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn forge_matrix_rows(m: *const ForgeMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.len())
}

/// Copies row `row` into `out[0..3]`.
///
/// # Safety
/// `m` must be a live handle; `out` must hold 3 doubles.
#[no_mangle]
pub unsafe extern "C" fn forge_matrix_row(m: *const ForgeMatrix, row: usize, out: *mut f64) -> ForgeStatus {
    guard(|| {
        let m = m.as_ref().ok_or_else(|| null("m"))?;
        if out.is_null() {
            return Err(null("out"));
        }
        if row >= m.0.len() {
            return Err(Fail(ForgeStatus::InvalidArgument, format!("row {row} out of range ({} rows)", m.0.len())));
        }
        ptr::copy_nonoverlapping(m.0.row(row).as_ptr(), out, NUM_CLASSES);
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn forge_matrix_free(m: *mut ForgeMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

unsafe fn members_arg(members: *const *const ForgeMatrix, count: usize) -> Result<Vec<ProbabilityMatrix>, Fail> {
    slice_arg(members, count, "members")?
        .iter()
        .map(|&m| m.as_ref().map(|m| m.0.clone()).ok_or_else(|| null("member")))
        .collect()
}

unsafe fn write_labels(labels: &[ClassLabel], out: *mut u8, capacity: usize) -> Result<(), Fail> {
    if labels.len() > capacity {
        return Err(Fail(
            ForgeStatus::InvalidArgument,
            format!("label buffer holds {capacity}, need {}", labels.len()),
        ));
    }
    if labels.is_empty() {
        return Ok(());
    }
    if out.is_null() {
        return Err(null("out_labels"));
    }
    for (i, l) in labels.iter().enumerate() {
        *out.add(i) = l.index() as u8;
    }
    Ok(())
}

fn ensemble_fail(e: ensemble::EnsembleError) -> Fail {
    Fail::new(ForgeStatus::Ensemble, e)
}

/// Weighted soft vote. `weights` may be null for equal weights.
/// Writes one label per row into `out_labels` (capacity `capacity`).
///
/// # Safety
/// `members` must point to `count` live handles; `weights`, when non-null, to `count` doubles.
#[no_mangle]
pub unsafe extern "C" fn forge_soft_vote(
    members: *const *const ForgeMatrix,
    count: usize,
    weights: *const f64,
    out_labels: *mut u8,
    capacity: usize,
) -> ForgeStatus {
    guard(|| {
        let ms = members_arg(members, count)?;
        let w = if weights.is_null() {
            vec![1.0; count]
        } else {
            slice_arg(weights, count, "weights")?.to_vec()
        };
        let (labels, _) = ensemble::soft_vote(&ms, &w).map_err(ensemble_fail)?;
        write_labels(&labels, out_labels, capacity)
    })
}

/// Maximum-value rule. See [`forge_soft_vote`] for the buffer contract.
///
/// # Safety
/// As for [`forge_soft_vote`].
#[no_mangle]
pub unsafe extern "C" fn forge_max_value(
    members: *const *const ForgeMatrix,
    count: usize,
    out_labels: *mut u8,
    capacity: usize,
) -> ForgeStatus {
    guard(|| {
        let labels = ensemble::max_value(&members_arg(members, count)?).map_err(ensemble_fail)?;
        write_labels(&labels, out_labels, capacity)
    })
}

/// Majority vote; `count` must be odd.
///
/// # Safety
/// As for [`forge_soft_vote`].
#[no_mangle]
pub unsafe extern "C" fn forge_hard_vote(
    members: *const *const ForgeMatrix,
    count: usize,
    out_labels: *mut u8,
    capacity: usize,
) -> ForgeStatus {
    guard(|| {
        let labels = ensemble::hard_vote(&members_arg(members, count)?).map_err(ensemble_fail)?;
        write_labels(&labels, out_labels, capacity)
    })
}

/// Loads a checkpoint written by `forge train`.
///
/// # Safety
/// `path` must be NUL-terminated; `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn forge_model_load(path: *const c_char, out: *mut *mut ForgeModel) -> ForgeStatus {
    guard(|| {
        let path = str_arg(path, "path")?;
        let out = out_arg(out, "out")?;
        let model = TextClassifier::load(Path::new(path)).map_err(|e| match e {
            forge_core::baselines::CheckpointError::Io(_) => Fail::new(ForgeStatus::Io, e),
            _ => Fail::new(ForgeStatus::Model, e),
        })?;
        *out = Box::into_raw(Box::new(ForgeModel(model)));
        Ok(())
    })
}

/// Class probabilities for `count` normalized texts.
///
/// # Safety
/// `texts` must point to `count` NUL-terminated strings.
#[no_mangle]
pub unsafe extern "C" fn forge_model_predict(
    model: *const ForgeModel,
    texts: *const *const c_char,
    count: usize,
    out: *mut *mut ForgeMatrix,
) -> ForgeStatus {
    guard(|| {
        let model = model.as_ref().ok_or_else(|| null("model"))?;
        let texts = slice_arg(texts, count, "texts")?
            .iter()
            .map(|&p| str_arg(p, "text"))
            .collect::<Result<Vec<_>, _>>()?;
        let out = out_arg(out, "out")?;
        *out = Box::into_raw(Box::new(ForgeMatrix(model.0.predict_proba(&texts))));
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle from this library that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn forge_model_free(model: *mut ForgeModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Accuracy, macro scores and the confusion matrix for `count` label pairs.
///
/// # Safety
/// `y_true` and `y_pred` must each hold `count` bytes; `out` must be valid.
#[no_mangle]
pub unsafe extern "C" fn forge_evaluate(
    y_true: *const u8,
    y_pred: *const u8,
    count: usize,
    out: *mut ForgeMetrics,
) -> ForgeStatus {
    guard(|| {
        let t = slice_arg(y_true, count, "y_true")?.iter().map(|&c| label_arg(c)).collect::<Result<Vec<_>, _>>()?;
        let p = slice_arg(y_pred, count, "y_pred")?.iter().map(|&c| label_arg(c)).collect::<Result<Vec<_>, _>>()?;
        let out = out_arg(out, "out")?;
        let r = MetricsReport::evaluate(&t, &p).map_err(|e| Fail::new(ForgeStatus::InvalidArgument, e))?;
        *out = ForgeMetrics {
            accuracy: r.accuracy,
            macro_f1: r.macro_f1,
            macro_precision: r.macro_precision,
            macro_recall: r.macro_recall,
            f1: ClassLabel::ALL.map(|l| r.per_class[l.name()].f1),
            confusion: r.confusion.0,
        };
        Ok(())
    })
}
