use std::ffi::CStr;
use std::ptr;

use relaxed_gabor_ffi::*;

const T: f64 = 8.0;
const H: f64 = 1.0 / 64.0;

fn last_error() -> String {
    let p = rg_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn values(sig: *const RgSignal) -> Vec<RgComplex> {
    let n = unsafe { rg_signal_len(sig) };
    let mut v = vec![RgComplex::default(); n];
    assert_eq!(unsafe { rg_signal_values(sig, v.as_mut_ptr(), n) }, RgStatus::Ok);
    v
}

#[test]
fn signal_round_trip() {
    let input: Vec<RgComplex> = (0..1025).map(|n| RgComplex { re: n as f64, im: -(n as f64) }).collect();
    let mut sig = ptr::null_mut();
    let st = unsafe { rg_signal_new(T, H, input.as_ptr(), input.len(), &mut sig) };
    assert_eq!(st, RgStatus::Ok);
    assert_eq!(values(sig), input);
    unsafe { rg_signal_free(sig) };
}

#[test]
fn errors_are_reported() {
    let mut sig = ptr::null_mut();
    let v = [RgComplex::default(); 3];
    assert_eq!(unsafe { rg_signal_new(T, H, v.as_ptr(), 3, &mut sig) }, RgStatus::InvalidArgument);
    assert!(sig.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(unsafe { rg_signal_new(T, H, ptr::null(), 0, &mut sig) }, RgStatus::NullPointer);
    assert_eq!(last_error(), "values is null");
    assert_eq!(unsafe { rg_atom(7.5, 0.0, T, H, &mut sig) }, RgStatus::InvalidArgument);
    assert_eq!(unsafe { rg_signal_len(ptr::null()) }, 0);
    unsafe { rg_signal_free(ptr::null_mut()) };
    unsafe { rg_expansion_free(ptr::null_mut()) };
}

#[test]
fn atom_expansion_is_pure() {
    let mut sig = ptr::null_mut();
    assert_eq!(unsafe { rg_atom(1.0, 0.0, T, H, &mut sig) }, RgStatus::Ok);
    let mut exp = ptr::null_mut();
    assert_eq!(unsafe { rg_expansion_new(sig, 4, &mut exp) }, RgStatus::Ok);
    let mut c = RgComplex::default();
    assert_eq!(unsafe { rg_expansion_lattice(exp, 1, 0, &mut c) }, RgStatus::Ok);
    assert!((c.re - 1.0).abs() < 1e-3 && c.im.abs() < 1e-3, "{c:?}");
    assert_eq!(unsafe { rg_expansion_sharp(exp, &mut c) }, RgStatus::Ok);
    assert!(c.re.hypot(c.im) < 1e-6);

    let mut back = ptr::null_mut();
    assert_eq!(unsafe { rg_expansion_synthesize(exp, T, H, &mut back) }, RgStatus::Ok);
    let (a, b) = (values(sig), values(back));
    let err: f64 = a.iter().zip(&b).map(|(x, y)| (x.re - y.re).powi(2) + (x.im - y.im).powi(2)).sum::<f64>().sqrt() * H.sqrt();
    assert!(err < 2e-3, "{err}");
    unsafe {
        rg_signal_free(back);
        rg_expansion_free(exp);
        rg_signal_free(sig);
    }
}

#[test]
fn scalars() {
    let mut t = RgComplex::default();
    assert_eq!(unsafe { rg_theta(0.0, 0.0, 8, &mut t) }, RgStatus::Ok);
    assert!((t.re - 1.2919960075).abs() < 1e-9 && t.im.abs() < 1e-15);
    assert_eq!(unsafe { rg_theta(0.0, 0.0, 0, &mut t) }, RgStatus::InvalidArgument);
    assert!((rg_loc_integral(-1.0) - 1.96375294e-4).abs() < 1e-12);
}

#[test]
fn rotation_by_pi_is_i_times_parity() {
    let mut h1 = ptr::null_mut();
    assert_eq!(unsafe { rg_hermite(1, T, H, &mut h1) }, RgStatus::Ok);
    let mut out = ptr::null_mut();
    assert_eq!(unsafe { rg_metaplectic_apply(h1, std::f64::consts::PI, &mut out) }, RgStatus::Ok);
    let (a, b) = (values(h1), values(out));
    let n = a.len();
    for i in 0..n {
        // i·f(-x)
        let want = RgComplex { re: -a[n - 1 - i].im, im: a[n - 1 - i].re };
        assert!((b[i].re - want.re).abs() < 1e-12 && (b[i].im - want.im).abs() < 1e-12);
    }
    assert_eq!(unsafe { rg_metaplectic_apply(h1, f64::NAN, &mut out) }, RgStatus::InvalidArgument);
    unsafe {
        rg_signal_free(out);
        rg_signal_free(h1);
    }
}

#[test]
fn header_declares_every_entry_point() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/relaxed_gabor.h")).unwrap();
    for name in [
        "rg_last_error",
        "rg_signal_new",
        "rg_signal_free",
        "rg_signal_len",
        "rg_signal_values",
        "rg_hermite",
        "rg_atom",
        "rg_expansion_new",
        "rg_expansion_free",
        "rg_expansion_sharp",
        "rg_expansion_lattice",
        "rg_expansion_synthesize",
        "rg_theta",
        "rg_loc_integral",
        "rg_metaplectic_apply",
        "typedef struct RgSignal RgSignal;",
    ] {
        assert!(header.contains(name), "{name}");
    }
}
