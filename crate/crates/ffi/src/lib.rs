//! C ABI over the `xmlbench` library.
//!
//! Every fallible function returns an [`XbStatus`]; on failure the message
//! is available from [`xb_last_error`] on the same thread until the next
//! failing call. Handles are opaque and must be released with their
//! `_free` function. Panics are caught at the boundary and reported as
//! [`XbStatus::Panic`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use xmlbench::codec::{self, CodecRegistry, Mode};
use xmlbench::entropy::shannon_entropy;
use xmlbench::metrics;
use xmlbench::stats;
use xmlbench::xml::{self, Domain, XmlDocument};

/// Result codes.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XbStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Parse = 3,
    Codec = 4,
    Stats = 5,
    Metric = 6,
    Panic = 7,
}

/// Compression mode selector, passed as `int32_t`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum XbMode {
    Default = 0,
    Maximum = 1,
}

/// Owned byte buffer.
pub struct XbBuffer(Vec<u8>);

/// Codec registry.
pub struct XbRegistry(CodecRegistry);

/// Parsed XML document.
pub struct XbDocument(XmlDocument);

/// File properties of one document.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct XbProfile {
    pub bytes: u64,
    pub lines: u64,
    pub unique_chars: u32,
    pub unique_tags: u32,
    pub depth: u32,
    pub h1: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure(XbStatus, String);

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior nul removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> XbStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => XbStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            XbStatus::Panic
        }
    }
}

fn fail<E: std::fmt::Display>(status: XbStatus) -> impl Fn(E) -> Failure {
    move |e| Failure(status, e.to_string())
}

fn null(what: &str) -> Failure {
    Failure(XbStatus::NullPointer, format!("{what} is null"))
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null("data"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn text<'a>(s: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if s.is_null() {
        return Err(null(what));
    }
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure(XbStatus::InvalidArgument, format!("{what} is not UTF-8")))
}

unsafe fn put<T>(out: *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    out.write(value);
    Ok(())
}

unsafe fn handle<'a, T>(h: *const T, what: &str) -> Result<&'a T, Failure> {
    h.as_ref().ok_or_else(|| null(what))
}

/// Message of the last failure on this thread, or NULL. The pointer stays
/// valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn xb_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

#[no_mangle]
pub extern "C" fn xb_clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn xb_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// # Safety
/// `buf` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn xb_buffer_data(buf: *const XbBuffer) -> *const u8 {
    buf.as_ref().map_or(ptr::null(), |b| b.0.as_ptr())
}

/// # Safety
/// `buf` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn xb_buffer_len(buf: *const XbBuffer) -> usize {
    buf.as_ref().map_or(0, |b| b.0.len())
}

/// # Safety
/// `buf` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xb_buffer_free(buf: *mut XbBuffer) {
    if !buf.is_null() {
        drop(Box::from_raw(buf));
    }
}

/// The built-in codecs.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_registry_builtins(out: *mut *mut XbRegistry) -> XbStatus {
    guard(|| put(out, Box::into_raw(Box::new(XbRegistry(CodecRegistry::builtins())))))
}

/// Loads a registry from a JSON path, a comma list of built-in names or
/// `all`.
///
/// # Safety
/// `spec` must be a NUL-terminated string; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_registry_load(spec: *const c_char, out: *mut *mut XbRegistry) -> XbStatus {
    guard(|| {
        let reg = CodecRegistry::load(text(spec, "spec")?).map_err(fail(XbStatus::Codec))?;
        put(out, Box::into_raw(Box::new(XbRegistry(reg))))
    })
}

/// Number of codec entries.
///
/// # Safety
/// `reg` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn xb_registry_len(reg: *const XbRegistry) -> usize {
    reg.as_ref().map_or(0, |r| r.0.codecs.len())
}

/// # Safety
/// `reg` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xb_registry_free(reg: *mut XbRegistry) {
    if !reg.is_null() {
        drop(Box::from_raw(reg));
    }
}

fn mode(m: i32) -> Result<Mode, Failure> {
    match m {
        x if x == XbMode::Default as i32 => Ok(Mode::Default),
        x if x == XbMode::Maximum as i32 => Ok(Mode::Maximum),
        other => Err(Failure(XbStatus::InvalidArgument, format!("unknown mode {other}"))),
    }
}

/// Compresses with codec `name`. On success `*out` receives a new buffer
/// and `*t_exec` (if not NULL) the execution time in day fractions.
///
/// # Safety
/// Pointers must be valid; `data` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn xb_compress(
    reg: *const XbRegistry,
    name: *const c_char,
    m: i32,
    data: *const u8,
    len: usize,
    out: *mut *mut XbBuffer,
    t_exec: *mut f64,
) -> XbStatus {
    guard(|| {
        let reg = handle(reg, "registry")?;
        let spec = reg.0.require(text(name, "name")?, mode(m)?).map_err(fail(XbStatus::InvalidArgument))?;
        let c = codec::compress(spec, bytes(data, len)?).map_err(fail(XbStatus::Codec))?;
        if !t_exec.is_null() {
            t_exec.write(c.t_exec);
        }
        put(out, Box::into_raw(Box::new(XbBuffer(c.output))))
    })
}

/// Inverse of [`xb_compress`]. XML codecs return the canonical
/// serialization of the document.
///
/// # Safety
/// Pointers must be valid; `data` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn xb_decompress(
    reg: *const XbRegistry,
    name: *const c_char,
    m: i32,
    data: *const u8,
    len: usize,
    out: *mut *mut XbBuffer,
) -> XbStatus {
    guard(|| {
        let reg = handle(reg, "registry")?;
        let spec = reg.0.require(text(name, "name")?, mode(m)?).map_err(fail(XbStatus::InvalidArgument))?;
        let plain = codec::decompress(spec, bytes(data, len)?).map_err(fail(XbStatus::Codec))?;
        put(out, Box::into_raw(Box::new(XbBuffer(plain))))
    })
}

/// # Safety
/// `data` must hold `len` bytes; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_document_parse(data: *const u8, len: usize, out: *mut *mut XbDocument) -> XbStatus {
    guard(|| {
        let doc = xml::parse_xml(bytes(data, len)?).map_err(fail(XbStatus::Parse))?;
        put(out, Box::into_raw(Box::new(XbDocument(doc))))
    })
}

/// Maximum element nesting, root = 1; 0 for NULL.
///
/// # Safety
/// `doc` must be NULL or a handle from this library.
#[no_mangle]
pub unsafe extern "C" fn xb_document_depth(doc: *const XbDocument) -> usize {
    doc.as_ref().map_or(0, |d| d.0.depth())
}

/// Serializes the document without comments into a new buffer.
///
/// # Safety
/// `doc` must be a handle from this library; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_document_strip(doc: *const XbDocument, out: *mut *mut XbBuffer) -> XbStatus {
    guard(|| {
        let doc = handle(doc, "document")?;
        let textual = xml::serialize(&doc.0.strip_comments());
        put(out, Box::into_raw(Box::new(XbBuffer(textual.into_bytes()))))
    })
}

/// # Safety
/// `doc` must be NULL or a handle from this library not yet freed.
#[no_mangle]
pub unsafe extern "C" fn xb_document_free(doc: *mut XbDocument) {
    if !doc.is_null() {
        drop(Box::from_raw(doc));
    }
}

/// Profiles raw document bytes.
///
/// # Safety
/// `data` must hold `len` bytes; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_profile(data: *const u8, len: usize, out: *mut XbProfile) -> XbStatus {
    guard(|| {
        let raw = bytes(data, len)?;
        let doc = xml::parse_xml(raw).map_err(fail(XbStatus::Parse))?;
        let p = xml::compute_profile("ffi", raw, &doc, Domain::DB);
        put(
            out,
            XbProfile {
                bytes: p.bytes,
                lines: p.lines,
                unique_chars: p.unique_chars,
                unique_tags: p.unique_tags,
                depth: p.depth,
                h1: p.h1,
            },
        )
    })
}

/// Entropy per byte of the overlapping `n`-byte word distribution.
///
/// # Safety
/// `data` must hold `len` bytes; `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_entropy(data: *const u8, len: usize, n: usize, out: *mut f64) -> XbStatus {
    guard(|| {
        let e = shannon_entropy(bytes(data, len)?, n).map_err(fail(XbStatus::InvalidArgument))?;
        put(out, e.bits_per_symbol)
    })
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_y_comp_ratio(s_native: u64, s_comp: u64, out: *mut f64) -> XbStatus {
    guard(|| put(out, metrics::y_comp_ratio(s_native, s_comp).map_err(fail(XbStatus::Metric))?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_y_comp_speed(s_native: u64, t_exec: f64, out: *mut f64) -> XbStatus {
    guard(|| put(out, metrics::y_comp_speed(s_native, t_exec).map_err(fail(XbStatus::Metric))?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_y_eff_old(s_comp: u64, min_s_comp: u64, t_exec: f64, out: *mut f64) -> XbStatus {
    guard(|| put(out, metrics::y_eff_old(s_comp, min_s_comp, t_exec).map_err(fail(XbStatus::Metric))?))
}

/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_y_eff_prop(
    s_native: u64,
    s_comp: u64,
    min_s_comp: u64,
    t_exec: f64,
    out: *mut f64,
) -> XbStatus {
    guard(|| put(out, metrics::y_eff_prop(s_native, s_comp, min_s_comp, t_exec).map_err(fail(XbStatus::Metric))?))
}

/// Upper tail of the F distribution.
#[no_mangle]
pub extern "C" fn xb_f_sf(f: f64, df1: f64, df2: f64) -> f64 {
    stats::f_sf(f, df1, df2)
}

/// Studentized range critical value.
///
/// # Safety
/// `out` must be valid for writes.
#[no_mangle]
pub unsafe extern "C" fn xb_q_critical(alpha: f64, k: usize, df_error: f64, out: *mut f64) -> XbStatus {
    guard(|| put(out, stats::q_critical(alpha, k, df_error).map_err(fail(XbStatus::Stats))?))
}
