//! C ABI over `rnnmla`.
//!
//! Objects cross the boundary as opaque handles (`RnnmlaMatrix`,
//! `RnnmlaDataset`, `RnnmlaModel`) created by `*_new`/`*_load`/`*_fit` and
//! released with the matching `*_free`. Every fallible call returns an
//! `RnnmlaStatus`; on failure `rnnmla_last_error_message` describes the
//! error for the calling thread. Matrices are exchanged row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use rnnmla::cli::RawConfig;
use rnnmla::data::{gen_synth_blobs, load_split, one_hot, MultiChannelDataset};
use rnnmla::model::{fit_variant, forward_scores, load_model, predict, save_model, ModelArtifact};
use rnnmla::nucleus::{zeta, ClusterParams};
use rnnmla::numerics::Matrix;
use rnnmla::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RnnmlaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    Data = 4,
    Format = 5,
    Io = 6,
    BufferTooSmall = 7,
    Panic = 8,
}

/// Dense row-major matrix of doubles.
pub struct RnnmlaMatrix(Matrix);

/// Labelled multi-channel dataset.
pub struct RnnmlaDataset(MultiChannelDataset);

/// Fitted classifier.
pub struct RnnmlaModel(ModelArtifact);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl Into<String>) {
    let msg = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).unwrap_or_default());
}

struct Failure(RnnmlaStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::InvalidParameter { .. } | Error::InvalidInput { .. } | Error::DimensionMismatch(_) => {
                RnnmlaStatus::InvalidArgument
            }
            Error::DegenerateDenominator(_)
            | Error::NoRealRoot { .. }
            | Error::DegenerateRoot { .. }
            | Error::Convergence { .. }
            | Error::Domain(_)
            | Error::StandardizationDegenerate
            | Error::DeadLayer { .. } => RnnmlaStatus::Numeric,
            Error::LabelFormat(_) | Error::Dataset(_) | Error::Stratification { .. } | Error::Parse { .. } => {
                RnnmlaStatus::Data
            }
            Error::Format(_) | Error::VersionMismatch { .. } | Error::Checksum { .. } => RnnmlaStatus::Format,
            Error::Io { .. } => RnnmlaStatus::Io,
        };
        Failure(status, e.to_string())
    }
}

fn invalid(msg: impl Into<String>) -> Failure {
    Failure(RnnmlaStatus::InvalidArgument, msg.into())
}

fn null(name: &str) -> Failure {
    Failure(RnnmlaStatus::NullPointer, format!("`{name}` is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RnnmlaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RnnmlaStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            RnnmlaStatus::Panic
        }
    }
}

unsafe fn borrow<'a, T>(p: *const T, name: &str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out_slot<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn c_str<'a>(p: *const c_char, name: &str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| invalid(format!("`{name}` is not UTF-8")))
}

unsafe fn channel_list(channels: *const *const RnnmlaMatrix, count: usize) -> Result<Vec<Matrix>, Failure> {
    if count == 0 {
        return Err(invalid("no channels"));
    }
    if channels.is_null() {
        return Err(null("channels"));
    }
    std::slice::from_raw_parts(channels, count)
        .iter()
        .map(|&m| borrow(m, "channel").map(|m| m.0.clone()))
        .collect()
}

/// Message of the last failed call on this thread, or an empty string.
/// The pointer stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn rnnmla_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Cluster activation for a nucleus of `n` cells.
///
/// # Safety
/// `out` must point to writable memory for one double.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_zeta(
    n: u32,
    p: f64,
    r: f64,
    lambda_plus: f64,
    lambda_minus: f64,
    x: f64,
    out: *mut f64,
) -> RnnmlaStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let params = ClusterParams::new(n, p, r, lambda_plus, lambda_minus)?;
        *out = zeta(&params, x)?;
        Ok(())
    })
}

/// Copy a row-major `rows × cols` buffer into a new matrix.
///
/// # Safety
/// `data` must point to `rows * cols` readable doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_matrix_new(
    data: *const f64,
    rows: usize,
    cols: usize,
    out: *mut *mut RnnmlaMatrix,
) -> RnnmlaStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let len = rows.checked_mul(cols).ok_or_else(|| invalid("rows * cols overflows"))?;
        if data.is_null() && len > 0 {
            return Err(null("data"));
        }
        let values = if len == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(data, len).to_vec()
        };
        let m = Matrix::from_shape_vec((rows, cols), values).map_err(|e| invalid(e.to_string()))?;
        *out = Box::into_raw(Box::new(RnnmlaMatrix(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_matrix_rows(m: *const RnnmlaMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.nrows())
}

/// # Safety
/// `m` must be null or a live matrix handle.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_matrix_cols(m: *const RnnmlaMatrix) -> usize {
    m.as_ref().map_or(0, |m| m.0.ncols())
}

/// Copy the entries row-major into `buf`, which holds `len` doubles.
///
/// # Safety
/// `m` must be a live handle and `buf` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_matrix_copy(m: *const RnnmlaMatrix, buf: *mut f64, len: usize) -> RnnmlaStatus {
    guard(|| {
        let m = &borrow(m, "m")?.0;
        if len < m.len() {
            return Err(Failure(
                RnnmlaStatus::BufferTooSmall,
                format!("need {} doubles, buffer holds {len}", m.len()),
            ));
        }
        if m.is_empty() {
            return Ok(());
        }
        if buf.is_null() {
            return Err(null("buf"));
        }
        let dst = std::slice::from_raw_parts_mut(buf, m.len());
        for (d, s) in dst.iter_mut().zip(m.iter()) {
            *d = *s;
        }
        Ok(())
    })
}

/// # Safety
/// `m` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_matrix_free(m: *mut RnnmlaMatrix) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// Dataset from channel matrices (values in [0, 1]) and class ids
/// `0..classes`, one per row.
///
/// # Safety
/// `channels` must point to `count` live matrix handles, `labels` to
/// `rows` ids; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_dataset_new(
    channels: *const *const RnnmlaMatrix,
    count: usize,
    labels: *const usize,
    rows: usize,
    classes: usize,
    out: *mut *mut RnnmlaDataset,
) -> RnnmlaStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let mats = channel_list(channels, count)?;
        if labels.is_null() && rows > 0 {
            return Err(null("labels"));
        }
        let ids = if rows == 0 {
            Vec::new()
        } else {
            std::slice::from_raw_parts(labels, rows).to_vec()
        };
        let names = (0..count).map(|c| format!("ch{c}")).collect();
        let data = MultiChannelDataset::new(mats, one_hot(&ids, classes)?, names, "ffi")?;
        *out = Box::into_raw(Box::new(RnnmlaDataset(data)));
        Ok(())
    })
}

/// Synthetic Gaussian blobs, already mapped to [0, 1].
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_dataset_blobs(
    rows: usize,
    channels: usize,
    classes: usize,
    dim: usize,
    separation: f64,
    seed: u64,
    out: *mut *mut RnnmlaDataset,
) -> RnnmlaStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let data = gen_synth_blobs(rows, channels, classes, dim, separation, seed)?;
        *out = Box::into_raw(Box::new(RnnmlaDataset(data)));
        Ok(())
    })
}

/// Load a manifest and return its preprocessed train and test splits.
///
/// # Safety
/// `path` must be a NUL-terminated string; `train` and `test` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_dataset_load_split(
    path: *const c_char,
    train: *mut *mut RnnmlaDataset,
    test: *mut *mut RnnmlaDataset,
) -> RnnmlaStatus {
    guard(|| {
        let path = c_str(path, "path")?;
        let (train, test) = (out_slot(train, "train")?, out_slot(test, "test")?);
        let split = load_split(path)?;
        *train = Box::into_raw(Box::new(RnnmlaDataset(split.train)));
        *test = Box::into_raw(Box::new(RnnmlaDataset(split.test)));
        Ok(())
    })
}

/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_dataset_rows(d: *const RnnmlaDataset) -> usize {
    d.as_ref().map_or(0, |d| d.0.rows())
}

/// # Safety
/// `d` must be null or a live dataset handle.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_dataset_channels(d: *const RnnmlaDataset) -> usize {
    d.as_ref().map_or(0, |d| d.0.channel_count())
}

/// # Safety
/// `d` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_dataset_free(d: *mut RnnmlaDataset) {
    if !d.is_null() {
        drop(Box::from_raw(d));
    }
}

/// Fit a model. `config_toml` is a run config in TOML (may be null for
/// defaults); `variant` (may be null) overrides its `variant` key.
///
/// # Safety
/// String arguments must be null or NUL-terminated; `data` must be live;
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_model_fit(
    data: *const RnnmlaDataset,
    config_toml: *const c_char,
    variant: *const c_char,
    out: *mut *mut RnnmlaModel,
) -> RnnmlaStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let data = &borrow(data, "data")?.0;
        let raw = if config_toml.is_null() {
            RawConfig::default()
        } else {
            RawConfig::parse(c_str(config_toml, "config_toml")?).map_err(|e| invalid(format!("{e:#}")))?
        };
        let variant = if variant.is_null() {
            None
        } else {
            Some(c_str(variant, "variant")?)
        };
        let cfg = raw.resolve(variant, None).map_err(|e| invalid(format!("{e:#}")))?;
        let mut model = fit_variant(cfg.variant, data, &cfg.train_config())?;
        model.provenance = cfg.to_json().to_string();
        *out = Box::into_raw(Box::new(RnnmlaModel(model)));
        Ok(())
    })
}

/// # Safety
/// `path` must be NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_model_load(path: *const c_char, out: *mut *mut RnnmlaModel) -> RnnmlaStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let model = load_model(c_str(path, "path")?)?;
        *out = Box::into_raw(Box::new(RnnmlaModel(model)));
        Ok(())
    })
}

/// # Safety
/// `model` must be live; `path` must be NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_model_save(model: *const RnnmlaModel, path: *const c_char) -> RnnmlaStatus {
    guard(|| {
        save_model(&borrow(model, "model")?.0, c_str(path, "path")?)?;
        Ok(())
    })
}

/// Number of classes the model scores.
///
/// # Safety
/// `model` must be null or live.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_model_classes(model: *const RnnmlaModel) -> usize {
    model.as_ref().map_or(0, |m| m.0.label_count)
}

/// Class scores (`rows × classes`) for per-channel inputs.
///
/// # Safety
/// `channels` must point to `count` live matrix handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_model_scores(
    model: *const RnnmlaModel,
    channels: *const *const RnnmlaMatrix,
    count: usize,
    out: *mut *mut RnnmlaMatrix,
) -> RnnmlaStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let model = &borrow(model, "model")?.0;
        let scores = forward_scores(model, &channel_list(channels, count)?)?;
        *out = Box::into_raw(Box::new(RnnmlaMatrix(scores)));
        Ok(())
    })
}

/// Predicted class id per row, written to `labels` (room for `len` ids).
///
/// # Safety
/// `channels` must point to `count` live matrix handles; `labels` must
/// point to `len` writable ids.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_model_predict(
    model: *const RnnmlaModel,
    channels: *const *const RnnmlaMatrix,
    count: usize,
    labels: *mut usize,
    len: usize,
) -> RnnmlaStatus {
    guard(|| {
        let model = &borrow(model, "model")?.0;
        let ids = predict(model, &channel_list(channels, count)?)?;
        if len < ids.len() {
            return Err(Failure(
                RnnmlaStatus::BufferTooSmall,
                format!("need {} ids, buffer holds {len}", ids.len()),
            ));
        }
        if labels.is_null() && !ids.is_empty() {
            return Err(null("labels"));
        }
        if !ids.is_empty() {
            std::slice::from_raw_parts_mut(labels, ids.len()).copy_from_slice(&ids);
        }
        Ok(())
    })
}

/// Test accuracy in [0, 1] of `model` on a labelled dataset.
///
/// # Safety
/// `model` and `data` must be live; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_model_accuracy(
    model: *const RnnmlaModel,
    data: *const RnnmlaDataset,
    out: *mut f64,
) -> RnnmlaStatus {
    guard(|| {
        let out = out_slot(out, "out")?;
        let (model, data) = (&borrow(model, "model")?.0, &borrow(data, "data")?.0);
        let ids = predict(model, data.channels())?;
        let hits = ids.iter().zip(data.class_ids()).filter(|(p, t)| **p == *t).count();
        *out = if ids.is_empty() { 0.0 } else { hits as f64 / ids.len() as f64 };
        Ok(())
    })
}

/// # Safety
/// `model` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn rnnmla_model_free(model: *mut RnnmlaModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
