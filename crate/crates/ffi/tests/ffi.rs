use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use fractrend_ffi::*;

fn series(values: &[f64]) -> *mut FtSeries {
    let mut s = ptr::null_mut();
    assert_eq!(
        unsafe { ft_series_new(values.as_ptr(), values.len(), &mut s) },
        FtStatus::Ok
    );
    s
}

fn last_error() -> String {
    let p = ft_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn simulated(len: usize, seed: u64) -> Vec<f64> {
    let mut buf = vec![0.0; len];
    let st = unsafe { ft_simulate(0.0, 1.0, FtSimMethod::TypeI, seed, buf.as_mut_ptr(), len) };
    assert_eq!(st, FtStatus::Ok);
    buf
}

#[test]
fn series_lifecycle_and_validation() {
    let s = series(&[1.0, 2.0, 3.0]);
    assert_eq!(unsafe { ft_series_len(s) }, 3);
    unsafe { ft_series_free(s) };
    unsafe { ft_series_free(ptr::null_mut()) };

    let mut out = ptr::null_mut();
    let bad = [1.0, f64::NAN];
    assert_eq!(unsafe { ft_series_new(bad.as_ptr(), 2, &mut out) }, FtStatus::Input);
    assert!(out.is_null());
    assert!(!last_error().is_empty());
    assert_eq!(
        unsafe { ft_series_new(ptr::null(), 2, &mut out) },
        FtStatus::NullPointer
    );
}

#[test]
fn statistics_match_the_library() {
    let y = simulated(256, 3);
    let s = series(&y);
    let ts = fractrend::TimeSeries::new(y.clone()).unwrap();

    let mut t = 0.0;
    assert_eq!(unsafe { ft_t_statistic(s, 0.0, 36, &mut t) }, FtStatus::Ok);
    assert_eq!(t, fractrend::fractest::t_statistic(&ts, 0.0, 36).unwrap());

    let mut ord = vec![0.0; 36];
    assert_eq!(unsafe { ft_periodogram(s, 36, ord.as_mut_ptr(), 36) }, FtStatus::Ok);
    assert_eq!(ord, fractrend::spectral::periodogram(&ts, 36).unwrap().ordinates);
    assert_eq!(unsafe { ft_periodogram(s, 36, ord.as_mut_ptr(), 10) }, FtStatus::Buffer);

    let opts = FtTestOptions {
        m: 36,
        k: 1,
        alternative: FtAlternative::Greater,
        ..ft_test_options_default()
    };
    let mut out = FtTestOutput::default();
    assert_eq!(unsafe { ft_test(s, &opts, &mut out) }, FtStatus::Ok);
    let cfg = fractrend::TestConfig {
        bandwidth: fractrend::Bandwidth::Fixed(36),
        trend_order: fractrend::TrendOrder::Fixed(1),
        alternative: fractrend::Alternative::Greater,
        ..Default::default()
    };
    let r = fractrend::test_with_detrend(&ts, &cfg).unwrap();
    assert_eq!(
        (out.t_stat, out.p_value, out.m, out.k_used),
        (r.t_stat, r.p_value, 36, 1)
    );
    assert_eq!(out.reject != 0, r.reject_at_level);

    let auto = ft_test_options_default();
    assert_eq!(unsafe { ft_test(s, &auto, &mut out) }, FtStatus::Ok);
    assert_eq!(out.m, 36);

    let bad = FtTestOptions { level: 1.5, ..auto };
    assert_eq!(unsafe { ft_test(s, &bad, &mut out) }, FtStatus::Config);
    unsafe { ft_series_free(s) };
}

#[test]
fn ic_trace_handle() {
    let s = series(&simulated(128, 9));
    let mut trace = ptr::null_mut();
    assert_eq!(
        unsafe { ft_select_order(s, 5, FtPenalty::Bic, &mut trace) },
        FtStatus::Ok
    );
    assert_eq!(unsafe { ft_ic_trace_len(trace) }, 6);
    let k_hat = unsafe { ft_ic_trace_k_hat(trace) };
    let values: Vec<f64> = (0..6)
        .map(|k| {
            let mut v = 0.0;
            assert_eq!(unsafe { ft_ic_trace_value(trace, k, &mut v) }, FtStatus::Ok);
            v
        })
        .collect();
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    assert_eq!(values[k_hat], min);
    let mut v = 0.0;
    assert_eq!(unsafe { ft_ic_trace_value(trace, 6, &mut v) }, FtStatus::Domain);
    unsafe { ft_ic_trace_free(trace) };

    assert_eq!(
        unsafe { ft_select_order(s, 500, FtPenalty::Hq, &mut trace) },
        FtStatus::Rank
    );
    unsafe { ft_series_free(s) };
}

#[test]
fn simulation_and_power() {
    assert_eq!(simulated(64, 42), simulated(64, 42));
    assert_ne!(simulated(64, 42), simulated(64, 43));
    let mut buf = [0.0; 8];
    let st = unsafe { ft_simulate(0.7, 1.0, FtSimMethod::TypeII, 1, buf.as_mut_ptr(), 8) };
    assert_eq!(st, FtStatus::Domain);

    let mut p = 0.0;
    let st = unsafe { ft_asymptotic_local_power(0.0, 0.05, FtAlternative::TwoSided, &mut p) };
    assert_eq!(st, FtStatus::Ok);
    assert!((p - 0.05).abs() < 1e-12);
    assert_eq!(
        unsafe { ft_asymptotic_local_power(1.0, 0.05, FtAlternative::Greater, ptr::null_mut()) },
        FtStatus::NullPointer
    );
}

#[test]
fn status_strings() {
    let s = unsafe { CStr::from_ptr(ft_status_str(FtStatus::Rank)) };
    assert_eq!(s.to_str().unwrap(), "rank error");
}

fn header() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include/fractrend.h")
}

#[test]
fn header_declares_the_api() {
    let h = std::fs::read_to_string(header()).unwrap();
    for name in [
        "ft_series_new",
        "ft_test",
        "ft_select_order",
        "ft_simulate",
        "ft_last_error",
        "FT_STATUS_OK",
        "typedef struct FtSeries FtSeries",
    ] {
        assert!(h.contains(name), "{name} missing from header");
    }
}

/// Compiles the header as C when a compiler is on PATH.
#[test]
fn header_compiles_as_c() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler; skipping");
        return;
    };
    assert!(cc.status.success());
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("use.c");
    std::fs::write(
        &src,
        "#include \"fractrend.h\"\nint main(void) { FtTestOptions o = ft_test_options_default(); return o.k_star == 10 ? 0 : 1; }\n",
    )
    .unwrap();
    let out = Command::new("cc")
        .args(["-std=c99", "-Wall", "-Werror", "-fsyntax-only", "-I"])
        .arg(header().parent().unwrap())
        .arg(&src)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}
