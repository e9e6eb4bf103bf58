//! C ABI over the tropivol engine.
//!
//! Every fallible call returns a [`TvStatus`]. On anything but `TV_STATUS_OK` the
//! message is available from [`tv_last_error`] on the same thread until the
//! next call. Parsed objects live behind opaque handles released with the
//! matching `_free` function; strings returned to C are released with
//! [`tv_string_free`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use tropivol::conductor::{torus_conductor, RamifiedGaloisModule};
use tropivol::vfcells::{integrate, vol, DefinableSet, DimFunction};
use tropivol::{cli, dsl, sexpr, ZBar};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Parse = 3,
    Evaluation = 4,
    /// A check ran and its two sides differ.
    Unequal = 5,
    /// A finite value does not fit the output integer.
    Overflow = 6,
    Panic = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TvZBarKind {
    NegInf = 0,
    Finite = 1,
    PosInf = 2,
}

/// An element of ℤ ∪ {±∞}; `value` is meaningful only for `Finite`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TvZBar {
    pub kind: TvZBarKind,
    pub value: i64,
}

/// Opaque definable set.
pub struct TvSet(DefinableSet);

/// Opaque dimensional function.
pub struct TvDimFun(DimFunction);

/// Opaque Galois lattice with its ramification filtration.
pub struct TvGalmod(RamifiedGaloisModule);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

struct Fail(TvStatus, String);

type Res<T> = Result<T, Fail>;

fn guard(f: impl FnOnce() -> Res<()>) -> TvStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => TvStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            TvStatus::Panic
        }
    }
}

unsafe fn text<'a>(p: *const c_char, what: &str) -> Res<&'a str> {
    if p.is_null() {
        return Err(Fail(TvStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(p).to_str().map_err(|_| Fail(TvStatus::InvalidUtf8, format!("{what} is not UTF-8")))
}

unsafe fn handle<'a, T>(p: *const T, what: &str) -> Res<&'a T> {
    p.as_ref().ok_or_else(|| Fail(TvStatus::NullPointer, format!("{what} is null")))
}

fn out_ptr<T>(p: *mut T, what: &str) -> Res<()> {
    if p.is_null() {
        return Err(Fail(TvStatus::NullPointer, format!("{what} is null")));
    }
    Ok(())
}

fn parse_with<T>(src: &str, decode: impl Fn(&sexpr::Node) -> Result<T, sexpr::ParseError>) -> Res<T> {
    let node = sexpr::parse_one(src).map_err(|e| Fail(TvStatus::Parse, e.to_string()))?;
    decode(&node).map_err(|e| Fail(TvStatus::Parse, e.to_string()))
}

fn zbar_out(z: &ZBar) -> Res<TvZBar> {
    Ok(match z {
        ZBar::NegInf => TvZBar { kind: TvZBarKind::NegInf, value: 0 },
        ZBar::PosInf => TvZBar { kind: TvZBarKind::PosInf, value: 0 },
        ZBar::Fin(_) => TvZBar {
            kind: TvZBarKind::Finite,
            value: z.to_i64().ok_or_else(|| Fail(TvStatus::Overflow, format!("{z} does not fit in 64 bits")))?,
        },
    })
}

/// The message of the last failed call on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn tv_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// # Safety
/// `s` must come from this library and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tv_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Runs a CLI verb on a document. `*out` receives the text the command line
/// tool would print (JSON if `json` is nonzero), also when the status is
/// `TV_STATUS_UNEQUAL`.
///
/// # Safety
/// `verb` and `document` must be NUL-terminated strings; `out` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn tv_run(
    verb: *const c_char,
    document: *const c_char,
    json: bool,
    out: *mut *mut c_char,
) -> TvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let verb = text(verb, "verb")?;
        let document = text(document, "document")?;
        sexpr::parse(document).map_err(|e| Fail(TvStatus::Parse, e.to_string()))?;
        let r = cli::run(verb, document, &cli::Options { json, ..cli::Options::default() });
        if r.code == 1 {
            let msg = r.stderr.trim_end().trim_start_matches("error: ");
            return Err(Fail(TvStatus::Evaluation, msg.to_string()));
        }
        *out = CString::new(r.stdout).expect("no NUL in output").into_raw();
        if r.code == 2 {
            return Err(Fail(TvStatus::Unequal, "the two sides differ".into()));
        }
        Ok(())
    })
}

/// Parses a `(vfcell …)` or `(union …)` expression.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_set_parse(src: *const c_char, out: *mut *mut TvSet) -> TvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let set = parse_with(text(src, "src")?, dsl::set)?;
        *out = Box::into_raw(Box::new(TvSet(set)));
        Ok(())
    })
}

/// # Safety
/// `set` must come from [`tv_set_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tv_set_free(set: *mut TvSet) {
    if !set.is_null() {
        drop(Box::from_raw(set));
    }
}

/// # Safety
/// `set` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_set_vol(set: *const TvSet, out: *mut TvZBar) -> TvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = zbar_out(&vol(&handle(set, "set")?.0))?;
        Ok(())
    })
}

/// Parses a `(dimfun …)` expression.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_dimfun_parse(src: *const c_char, out: *mut *mut TvDimFun) -> TvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let phi = parse_with(text(src, "src")?, dsl::dimfun)?;
        *out = Box::into_raw(Box::new(TvDimFun(phi)));
        Ok(())
    })
}

/// # Safety
/// `phi` must come from [`tv_dimfun_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tv_dimfun_free(phi: *mut TvDimFun) {
    if !phi.is_null() {
        drop(Box::from_raw(phi));
    }
}

/// # Safety
/// `set` and `phi` must be live handles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_integrate(set: *const TvSet, phi: *const TvDimFun, out: *mut TvZBar) -> TvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        let v = integrate(&handle(set, "set")?.0, &handle(phi, "phi")?.0)
            .map_err(|e| Fail(TvStatus::Evaluation, e.to_string()))?;
        *out = zbar_out(&v)?;
        Ok(())
    })
}

/// Parses a `(galmod …)` expression.
///
/// # Safety
/// `src` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_galmod_parse(src: *const c_char, out: *mut *mut TvGalmod) -> TvStatus {
    guard(|| {
        out_ptr(out, "out")?;
        *out = ptr::null_mut();
        let m = parse_with(text(src, "src")?, dsl::galmod)?;
        *out = Box::into_raw(Box::new(TvGalmod(m)));
        Ok(())
    })
}

/// # Safety
/// `m` must come from [`tv_galmod_parse`] and not have been freed.
#[no_mangle]
pub unsafe extern "C" fn tv_galmod_free(m: *mut TvGalmod) {
    if !m.is_null() {
        drop(Box::from_raw(m));
    }
}

/// The torus conductor as a reduced fraction `*num / *den`.
///
/// # Safety
/// `m` must be a live handle; `num` and `den` must be writable.
#[no_mangle]
pub unsafe extern "C" fn tv_torus_conductor(m: *const TvGalmod, num: *mut i64, den: *mut i64) -> TvStatus {
    guard(|| {
        out_ptr(num, "num")?;
        out_ptr(den, "den")?;
        let c = torus_conductor(&handle(m, "module")?.0).map_err(|e| Fail(TvStatus::Evaluation, e.to_string()))?;
        let fit = |v: &num_bigint::BigInt| {
            i64::try_from(v).map_err(|_| Fail(TvStatus::Overflow, format!("{c} does not fit in 64 bits")))
        };
        *num = fit(c.numer())?;
        *den = fit(c.denom())?;
        Ok(())
    })
}
