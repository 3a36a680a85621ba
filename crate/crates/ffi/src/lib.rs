//! C ABI for the treefuse classifier.
//!
//! The interface works on an opaque `TfModel` handle. Functions return
//! `TfStatus` codes (or a null pointer for constructors); the most recent
//! failure message per thread is available through `tf_last_error`.
//! Feature vectors are flat `double` rows in the model's layout order.

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::os::raw::c_char;
use std::path::Path;

use treefuse::error::Error;
use treefuse::eval::dataset_to_classes;
use treefuse::features::{load_tabular_features, FeatureLayout};
use treefuse::fusion::{train_multiclass, MulticlassModel, TrainConfig};

/// Opaque handle to a trained one-vs-all fusion model.
pub struct TfModel {
    inner: MulticlassModel,
}

/// Status codes; nonzero mirrors the CLI exit codes where applicable.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TfStatus {
    Ok = 0,
    DataError = 2,
    ConfigError = 3,
    NullPointer = 4,
    InvalidUtf8 = 5,
    BufferTooSmall = 6,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn remember_error(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(err: &Error) -> TfStatus {
    match err.exit_code() {
        3 => TfStatus::ConfigError,
        _ => TfStatus::DataError,
    }
}

fn fail(err: &Error) -> TfStatus {
    remember_error(&err.to_string());
    status_of(err)
}

/// Copies the most recent error message (NUL-terminated) into `buf` and
/// returns the full message length in bytes excluding the terminator. A null
/// or too-small buffer leaves the message untouched; call with `len` 0 to
/// query the required size.
///
/// # Safety
/// `buf` must point to `len` writable bytes, or be null.
#[no_mangle]
pub unsafe extern "C" fn tf_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes_with_nul();
        if !buf.is_null() && len >= bytes.len() {
            std::ptr::copy_nonoverlapping(bytes.as_ptr() as *const c_char, buf, bytes.len());
        }
        bytes.len() - 1
    })
}

unsafe fn cstr<'a>(ptr: *const c_char) -> Result<&'a str, TfStatus> {
    if ptr.is_null() {
        remember_error("null pointer argument");
        return Err(TfStatus::NullPointer);
    }
    CStr::from_ptr(ptr).to_str().map_err(|_| {
        remember_error("argument is not valid UTF-8");
        TfStatus::InvalidUtf8
    })
}

/// Trains a model from a features CSV (header row, one label column, numeric
/// feature columns split per `layout_csv`, e.g. "4,4,4"). `config_json` may
/// be null or "{}" for defaults; it accepts the serialized `TrainConfig`
/// schema. Returns null on failure (see `tf_last_error`).
///
/// # Safety
/// `data_path`, `label_column` and `layout_csv` must be valid NUL-terminated
/// strings; `config_json` may be null.
#[no_mangle]
pub unsafe extern "C" fn tf_model_train_csv(
    data_path: *const c_char,
    label_column: *const c_char,
    layout_csv: *const c_char,
    config_json: *const c_char,
) -> *mut TfModel {
    let parse = || -> Result<TfModel, TfStatus> {
        let data_path = cstr(data_path)?;
        let label_column = cstr(label_column)?;
        let layout_csv = cstr(layout_csv)?;
        let config: TrainConfig = if config_json.is_null() {
            TrainConfig::default()
        } else {
            serde_json::from_str(cstr(config_json)?).map_err(|e| {
                remember_error(&format!("config: {e}"));
                TfStatus::ConfigError
            })?
        };
        let layout = FeatureLayout::parse(layout_csv).map_err(|e| fail(&e))?;
        let dataset = load_tabular_features(Path::new(data_path), &layout, label_column)
            .map_err(|e| fail(&e))?;
        let classes = dataset_to_classes(&dataset).map_err(|e| fail(&e))?;
        let inner = train_multiclass(&classes, &config).map_err(|e| fail(&e))?;
        Ok(TfModel { inner })
    };
    match parse() {
        Ok(model) => Box::into_raw(Box::new(model)),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Loads a model from its JSON file. Returns null on failure.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn tf_model_load(path: *const c_char) -> *mut TfModel {
    let parse = || -> Result<TfModel, TfStatus> {
        let path = cstr(path)?;
        let inner = MulticlassModel::load(Path::new(path)).map_err(|e| fail(&e))?;
        Ok(TfModel { inner })
    };
    match parse() {
        Ok(model) => Box::into_raw(Box::new(model)),
        Err(_) => std::ptr::null_mut(),
    }
}

/// Saves the model as JSON.
///
/// # Safety
/// `model` must come from this library and `path` must be a valid string.
#[no_mangle]
pub unsafe extern "C" fn tf_model_save(model: *const TfModel, path: *const c_char) -> TfStatus {
    let Some(model) = model.as_ref() else {
        remember_error("null model handle");
        return TfStatus::NullPointer;
    };
    let path = match cstr(path) {
        Ok(p) => p,
        Err(status) => return status,
    };
    match model.inner.save(Path::new(path)) {
        Ok(()) => TfStatus::Ok,
        Err(e) => fail(&e),
    }
}

/// Releases a model handle. Passing null is a no-op.
///
/// # Safety
/// `model` must be a pointer previously returned by a constructor of this
/// library and must not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn tf_model_free(model: *mut TfModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// Number of classes, or 0 for a null handle.
///
/// # Safety
/// `model` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tf_model_num_classes(model: *const TfModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.num_classes())
}

/// Total flat feature dimension (the sum of the per-set dimensions), or 0
/// for a null handle.
///
/// # Safety
/// `model` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn tf_model_num_features(model: *const TfModel) -> usize {
    model.as_ref().map_or(0, |m| m.inner.layout().n_total())
}

/// Copies class `k`'s NUL-terminated name into `buf`.
///
/// # Safety
/// `model` must be a valid handle; `buf` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn tf_model_class_name(
    model: *const TfModel,
    k: usize,
    buf: *mut c_char,
    len: usize,
) -> TfStatus {
    let Some(model) = model.as_ref() else {
        remember_error("null model handle");
        return TfStatus::NullPointer;
    };
    if k >= model.inner.num_classes() {
        remember_error("class index out of range");
        return TfStatus::ConfigError;
    }
    let name = model.inner.class_names[k].as_bytes();
    if buf.is_null() || len < name.len() + 1 {
        remember_error("buffer too small for class name");
        return TfStatus::BufferTooSmall;
    }
    std::ptr::copy_nonoverlapping(name.as_ptr() as *const c_char, buf, name.len());
    *buf.add(name.len()) = 0;
    TfStatus::Ok
}

unsafe fn features_slice<'a>(
    model: &MulticlassModel,
    features: *const f64,
    len: usize,
) -> Result<&'a [f64], TfStatus> {
    if features.is_null() {
        remember_error("null feature pointer");
        return Err(TfStatus::NullPointer);
    }
    if len != model.layout().n_total() {
        remember_error(&format!(
            "feature length {len} does not match the model ({})",
            model.layout().n_total()
        ));
        return Err(TfStatus::DataError);
    }
    Ok(std::slice::from_raw_parts(features, len))
}

/// Writes one log-likelihood-ratio score per class into `out_scores`
/// (capacity `tf_model_num_classes`).
///
/// # Safety
/// `model` must be a valid handle; `features` must point to `len` doubles;
/// `out_scores` must have room for one double per class.
#[no_mangle]
pub unsafe extern "C" fn tf_model_scores(
    model: *const TfModel,
    features: *const f64,
    len: usize,
    out_scores: *mut f64,
) -> TfStatus {
    let Some(model) = model.as_ref() else {
        remember_error("null model handle");
        return TfStatus::NullPointer;
    };
    if out_scores.is_null() {
        remember_error("null output pointer");
        return TfStatus::NullPointer;
    }
    let flat = match features_slice(&model.inner, features, len) {
        Ok(f) => f,
        Err(status) => return status,
    };
    match model.inner.scores_flat(flat) {
        Ok(scores) => {
            std::ptr::copy_nonoverlapping(scores.as_ptr(), out_scores, scores.len());
            TfStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Argmax classification; ties go to the lowest class index.
///
/// # Safety
/// Pointer requirements as in `tf_model_scores`; `out_class` and `out_score`
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_model_classify(
    model: *const TfModel,
    features: *const f64,
    len: usize,
    out_class: *mut usize,
    out_score: *mut f64,
) -> TfStatus {
    let Some(model) = model.as_ref() else {
        remember_error("null model handle");
        return TfStatus::NullPointer;
    };
    if out_class.is_null() || out_score.is_null() {
        remember_error("null output pointer");
        return TfStatus::NullPointer;
    }
    let flat = match features_slice(&model.inner, features, len) {
        Ok(f) => f,
        Err(status) => return status,
    };
    match model.inner.classify_flat(flat) {
        Ok((k, scores)) => {
            *out_class = k;
            *out_score = scores[k];
            TfStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Sets `out` to true when every class score falls below `tau_out`.
///
/// # Safety
/// Pointer requirements as in `tf_model_scores`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tf_model_is_outlier(
    model: *const TfModel,
    features: *const f64,
    len: usize,
    tau_out: f64,
    out: *mut bool,
) -> TfStatus {
    let Some(model) = model.as_ref() else {
        remember_error("null model handle");
        return TfStatus::NullPointer;
    };
    if out.is_null() {
        remember_error("null output pointer");
        return TfStatus::NullPointer;
    }
    let flat = match features_slice(&model.inner, features, len) {
        Ok(f) => f,
        Err(status) => return status,
    };
    match model.inner.scores_flat(flat) {
        Ok(scores) => {
            *out = scores.iter().all(|&s| s < tau_out);
            TfStatus::Ok
        }
        Err(e) => fail(&e),
    }
}
