//! C ABI over `sa-core`.
//!
//! Conventions:
//! - every fallible call returns an [`SaStatus`]; `SA_STATUS_OK` is 0
//! - objects are opaque handles created by `sa_*_new` / `sa_*_load` and
//!   released by the matching `sa_*_free` (passing NULL to a free is a no-op)
//! - on failure, [`sa_last_error`] returns a message for the calling thread,
//!   valid until that thread's next call into this library
//! - strings are NUL-terminated UTF-8; lists are comma-separated
//! - panics never cross the boundary; they surface as `SA_STATUS_ERR_INTERNAL`

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use sa_core::classifier::{ClassLabel, Classifier, ScoredRecord, DEFAULT_SCREEN_THRESHOLD};
use sa_core::features::extract;
use sa_core::imaging::{load_image, preprocess, save_image, Image, ImagingError};
use sa_core::policy::{
    evaluate, parse_policy, Action, AttributeSource, ImageAttributes, Policy, Target,
};
use sa_core::screentag::{encode_tag, payload_encode, scan, AppRegistry, ScanError, TagError};

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SaStatus {
    Ok = 0,
    /// A required pointer argument was NULL.
    ErrNullArgument = 1,
    /// An argument was out of range or not valid UTF-8.
    ErrInvalidArgument = 2,
    ErrIo = 3,
    /// Unreadable, unsupported or mis-sized image.
    ErrImage = 4,
    /// Model file missing, malformed or inconsistent.
    ErrModel = 5,
    /// Registry or active-set problem (unknown app, too many apps).
    ErrPayload = 6,
    /// No tag in the photo.
    ErrTagNotFound = 7,
    /// A tag was found but did not decode to a valid payload.
    ErrDecodeFailed = 8,
    /// Policy text failed to parse.
    ErrPolicy = 9,
    /// The caller's buffer is smaller than the reported length.
    ErrBufferTooSmall = 10,
    /// A panic was caught; this is a bug.
    ErrInternal = 11,
}

/// Class labels, in the order of the five-element probability arrays.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SaLabel {
    NoScreen = 0,
    Other = 1,
    Messenger = 2,
    Facebook = 3,
    Gmail = 4,
}

impl From<ClassLabel> for SaLabel {
    fn from(l: ClassLabel) -> Self {
        match l {
            ClassLabel::NoScreen => SaLabel::NoScreen,
            ClassLabel::OtherApp => SaLabel::Other,
            ClassLabel::Messenger => SaLabel::Messenger,
            ClassLabel::Facebook => SaLabel::Facebook,
            ClassLabel::Gmail => SaLabel::Gmail,
        }
    }
}

/// One classification: label, its confidence and the full distribution.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SaClassification {
    pub label: SaLabel,
    pub confidence: f64,
    /// P(label), indexed by [`SaLabel`].
    pub probs: [f64; 5],
}

/// Attributes of one image for policy evaluation.
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SaAttributes {
    pub has_screen: bool,
    /// Probability of `has_screen` as stated.
    pub screen_confidence: f64,
    /// An [`SaLabel`] value; anything else is rejected.
    pub app: u32,
    pub app_confidence: f64,
    /// Comma-separated active apps of a decoded tag; NULL when none was read.
    pub tag_active: *const c_char,
}

/// Per-target verdicts, indexed share = 0, upload = 1, retain = 2.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct SaDecision {
    /// 1 allow, 0 deny.
    pub allow: [u8; 3],
    /// Deciding rule id, or -1 where the default applied.
    pub matched_rule: [i64; 3],
    pub default_applied: bool,
}

/// Decoded image raster (8-bit RGB, row-major).
pub struct SaImage(Image);

/// Flat or hierarchical classifier loaded from a model file.
pub struct SaClassifier(Classifier);

/// Ordered ScreenTag app registry.
pub struct SaRegistry(AppRegistry);

/// Parsed curation policy.
pub struct SaPolicy(Policy);

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: impl std::fmt::Display) {
    let text = CString::new(msg.to_string().replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = text);
}

type FfiResult<T = ()> = Result<T, (SaStatus, String)>;

fn err<T>(status: SaStatus, msg: impl std::fmt::Display) -> FfiResult<T> {
    Err((status, msg.to_string()))
}

/// Runs `f`, recording the message of any error or panic.
fn guard(f: impl FnOnce() -> FfiResult) -> SaStatus {
    set_error("");
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SaStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(panic) => {
            let msg = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("internal error: {msg}"));
            SaStatus::ErrInternal
        }
    }
}

unsafe fn str_arg<'a>(p: *const c_char, name: &str) -> FfiResult<&'a str> {
    if p.is_null() {
        return err(SaStatus::ErrNullArgument, format!("{name} is NULL"));
    }
    CStr::from_ptr(p)
        .to_str()
        .or_else(|_| err(SaStatus::ErrInvalidArgument, format!("{name} is not UTF-8")))
}

unsafe fn ref_arg<'a, T>(p: *const T, name: &str) -> FfiResult<&'a T> {
    p.as_ref().map_or_else(
        || err(SaStatus::ErrNullArgument, format!("{name} is NULL")),
        Ok,
    )
}

unsafe fn out_arg<'a, T>(p: *mut T, name: &str) -> FfiResult<&'a mut T> {
    p.as_mut().map_or_else(
        || err(SaStatus::ErrNullArgument, format!("{name} is NULL")),
        Ok,
    )
}

fn split_list(list: &str) -> Vec<&str> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .collect()
}

fn image_status(e: ImagingError) -> (SaStatus, String) {
    let status = match e {
        ImagingError::FileNotFound(_) | ImagingError::Io(_) => SaStatus::ErrIo,
        _ => SaStatus::ErrImage,
    };
    (status, e.to_string())
}

fn tag_status(e: TagError) -> (SaStatus, String) {
    let status = match e {
        TagError::Payload(_) => SaStatus::ErrPayload,
        TagError::Qr(_) | TagError::DoesNotFit { .. } => SaStatus::ErrInvalidArgument,
    };
    (status, e.to_string())
}

/// Message for the calling thread's most recent failure; empty after a
/// success. Owned by the library.
#[no_mangle]
pub extern "C" fn sa_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Library version, static storage.
#[no_mangle]
pub extern "C" fn sa_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a PPM (P3/P6) or PNG file.
#[no_mangle]
pub unsafe extern "C" fn sa_image_load(path: *const c_char, out: *mut *mut SaImage) -> SaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let img = load_image(path).map_err(image_status)?;
        *out = Box::into_raw(Box::new(SaImage(img)));
        Ok(())
    })
}

/// Copies `width * height * 3` bytes of row-major RGB.
#[no_mangle]
pub unsafe extern "C" fn sa_image_from_rgb(
    width: u32,
    height: u32,
    rgb: *const u8,
    len: usize,
    out: *mut *mut SaImage,
) -> SaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        if rgb.is_null() {
            return err(SaStatus::ErrNullArgument, "rgb is NULL");
        }
        let bytes = std::slice::from_raw_parts(rgb, len).to_vec();
        let img = Image::new(width, height, bytes).or_else(|e| err(SaStatus::ErrImage, e))?;
        *out = Box::into_raw(Box::new(SaImage(img)));
        Ok(())
    })
}

/// Writes PPM or PNG, chosen by extension.
#[no_mangle]
pub unsafe extern "C" fn sa_image_save(image: *const SaImage, path: *const c_char) -> SaStatus {
    guard(|| {
        let image = ref_arg(image, "image")?;
        let path = str_arg(path, "path")?;
        save_image(&image.0, path).map_err(image_status)
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_image_width(image: *const SaImage) -> u32 {
    image.as_ref().map_or(0, |i| i.0.width())
}

#[no_mangle]
pub unsafe extern "C" fn sa_image_height(image: *const SaImage) -> u32 {
    image.as_ref().map_or(0, |i| i.0.height())
}

/// Pointer to the `width * height * 3` RGB bytes; valid while the image lives.
#[no_mangle]
pub unsafe extern "C" fn sa_image_data(image: *const SaImage) -> *const u8 {
    image
        .as_ref()
        .map_or(ptr::null(), |i| i.0.pixels().as_ptr())
}

/// The 256×256 classifier input for `image`.
#[no_mangle]
pub unsafe extern "C" fn sa_image_preprocess(
    image: *const SaImage,
    out: *mut *mut SaImage,
) -> SaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let image = ref_arg(image, "image")?;
        *out = Box::into_raw(Box::new(SaImage(preprocess(&image.0))));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_image_free(image: *mut SaImage) {
    if !image.is_null() {
        drop(Box::from_raw(image));
    }
}

/// Loads a flat 5-way or hierarchical model file.
#[no_mangle]
pub unsafe extern "C" fn sa_classifier_load(
    path: *const c_char,
    out: *mut *mut SaClassifier,
) -> SaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let path = str_arg(path, "path")?;
        let c = Classifier::load(path).or_else(|e| err(SaStatus::ErrModel, e))?;
        *out = Box::into_raw(Box::new(SaClassifier(c)));
        Ok(())
    })
}

/// Classifies `image` (any size; it is preprocessed here). A negative
/// `threshold` selects the model's own (0.5 for flat models).
#[no_mangle]
pub unsafe extern "C" fn sa_classifier_classify(
    classifier: *const SaClassifier,
    image: *const SaImage,
    threshold: f64,
    out: *mut SaClassification,
) -> SaStatus {
    guard(|| {
        let c = &ref_arg(classifier, "classifier")?.0;
        let image = ref_arg(image, "image")?;
        let out = out_arg(out, "out")?;
        let threshold = if threshold < 0.0 {
            match c {
                Classifier::Hierarchical(h) => h.screen_threshold,
                Classifier::Flat(_) => DEFAULT_SCREEN_THRESHOLD,
            }
        } else if threshold <= 1.0 {
            threshold
        } else {
            return err(
                SaStatus::ErrInvalidArgument,
                format!("threshold {threshold} above 1"),
            );
        };
        let fv = extract(&preprocess(&image.0), c.feature_config())
            .or_else(|e| err(SaStatus::ErrImage, e))?;
        let probs = c
            .label_probabilities(&fv)
            .or_else(|e| err(SaStatus::ErrModel, e))?;
        let (label, confidence) = ScoredRecord {
            path: String::new(),
            probs,
        }
        .decide(threshold);
        *out = SaClassification {
            label: label.into(),
            confidence,
            probs,
        };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_classifier_free(classifier: *mut SaClassifier) {
    if !classifier.is_null() {
        drop(Box::from_raw(classifier));
    }
}

/// Builds a registry from a comma-separated list (1 to 32 unique apps).
#[no_mangle]
pub unsafe extern "C" fn sa_registry_new(
    apps: *const c_char,
    out: *mut *mut SaRegistry,
) -> SaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let list = str_arg(apps, "apps")?;
        let reg = AppRegistry::parse_list(list).or_else(|e| err(SaStatus::ErrPayload, e))?;
        *out = Box::into_raw(Box::new(SaRegistry(reg)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_registry_len(registry: *const SaRegistry) -> usize {
    registry.as_ref().map_or(0, |r| r.0.len())
}

#[no_mangle]
pub unsafe extern "C" fn sa_registry_free(registry: *mut SaRegistry) {
    if !registry.is_null() {
        drop(Box::from_raw(registry));
    }
}

/// Writes the payload bytes for `active` into `buf`. `out_len` always
/// receives the required length, so a NULL `buf` with `buf_len` 0 queries it.
#[no_mangle]
pub unsafe extern "C" fn sa_payload_encode(
    registry: *const SaRegistry,
    active: *const c_char,
    buf: *mut u8,
    buf_len: usize,
    out_len: *mut usize,
) -> SaStatus {
    guard(|| {
        let reg = &ref_arg(registry, "registry")?.0;
        let active = split_list(str_arg(active, "active")?);
        let out_len = out_arg(out_len, "out_len")?;
        let bytes = payload_encode(reg, &active).or_else(|e| err(SaStatus::ErrPayload, e))?;
        *out_len = bytes.len();
        if buf_len < bytes.len() || buf.is_null() {
            return err(
                SaStatus::ErrBufferTooSmall,
                format!("payload needs {} bytes", bytes.len()),
            );
        }
        ptr::copy_nonoverlapping(bytes.as_ptr(), buf, bytes.len());
        Ok(())
    })
}

/// Renders the tag for `active` (comma-separated) at `module_px` pixels per
/// module, with the standard 4-module quiet zone.
#[no_mangle]
pub unsafe extern "C" fn sa_tag_encode(
    registry: *const SaRegistry,
    active: *const c_char,
    module_px: u32,
    out: *mut *mut SaImage,
) -> SaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let reg = &ref_arg(registry, "registry")?.0;
        let active = split_list(str_arg(active, "active")?);
        if module_px == 0 {
            return err(SaStatus::ErrInvalidArgument, "module_px must be at least 1");
        }
        let img = encode_tag(reg, &active, module_px).map_err(tag_status)?;
        *out = Box::into_raw(Box::new(SaImage(img)));
        Ok(())
    })
}

/// Scans `photo`. On success `app_count` receives the payload's app count
/// and bit i of `active_mask` is set when app i is active.
#[no_mangle]
pub unsafe extern "C" fn sa_tag_scan(
    photo: *const SaImage,
    app_count: *mut u32,
    active_mask: *mut u32,
) -> SaStatus {
    guard(|| {
        let photo = ref_arg(photo, "photo")?;
        let app_count = out_arg(app_count, "app_count")?;
        let active_mask = out_arg(active_mask, "active_mask")?;
        let r = scan(&photo.0).map_err(|e| match e {
            ScanError::TagNotFound => (SaStatus::ErrTagNotFound, e.to_string()),
            ScanError::DecodeFailed(_) => (SaStatus::ErrDecodeFailed, e.to_string()),
        })?;
        *app_count = r.payload.app_count as u32;
        *active_mask = r.payload.active.iter().fold(0u32, |m, &i| m | (1 << i));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_policy_parse(text: *const c_char, out: *mut *mut SaPolicy) -> SaStatus {
    guard(|| {
        let out = out_arg(out, "out")?;
        *out = ptr::null_mut();
        let text = str_arg(text, "text")?;
        let policy = parse_policy(text).or_else(|e| err(SaStatus::ErrPolicy, e))?;
        *out = Box::into_raw(Box::new(SaPolicy(policy)));
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_policy_evaluate(
    policy: *const SaPolicy,
    attrs: *const SaAttributes,
    out: *mut SaDecision,
) -> SaStatus {
    guard(|| {
        let policy = &ref_arg(policy, "policy")?.0;
        let a = ref_arg(attrs, "attrs")?;
        let out = out_arg(out, "out")?;
        let tag = if a.tag_active.is_null() {
            None
        } else {
            Some(
                split_list(str_arg(a.tag_active, "tag_active")?)
                    .into_iter()
                    .map(String::from)
                    .collect(),
            )
        };
        let Some(&app) = ClassLabel::ALL.get(a.app as usize) else {
            return err(
                SaStatus::ErrInvalidArgument,
                format!("app {} is not a label", a.app),
            );
        };
        let attrs = ImageAttributes {
            path: String::new(),
            has_screen: a.has_screen,
            screen_confidence: a.screen_confidence,
            app,
            app_confidence: a.app_confidence,
            tag,
            source: AttributeSource::External,
        };
        attrs
            .validate()
            .or_else(|e| err(SaStatus::ErrInvalidArgument, e))?;
        let d = evaluate(policy, &attrs);
        let mut decision = SaDecision {
            default_applied: d.default_applied,
            ..SaDecision::default()
        };
        for t in Target::ALL {
            let td = d.get(t);
            decision.allow[t.index()] = (td.verdict == Action::Allow) as u8;
            decision.matched_rule[t.index()] = td.matched_rule.map_or(-1, |r| r as i64);
        }
        *out = decision;
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn sa_policy_free(policy: *mut SaPolicy) {
    if !policy.is_null() {
        drop(Box::from_raw(policy));
    }
}
