use std::ptr;

use cdsbounds_ffi::*;

const MATURITIES: [usize; 5] = [4, 8, 12, 16, 20];
const UPFRONTS: [f64; 5] = [0.0525, 0.1247, 0.1808, 0.2156, 0.2405];
const SPREADS: [f64; 5] = [0.05; 5];

fn standard() -> *mut CdsModel {
    let mut model = ptr::null_mut();
    let s = unsafe {
        cds_model_new(
            0.25,
            0.02,
            MATURITIES.as_ptr(),
            UPFRONTS.as_ptr(),
            SPREADS.as_ptr(),
            5,
            20,
            0.01,
            0.30,
            0.15,
            0.16,
            &mut model,
        )
    };
    assert_eq!(s, CdsStatus::Ok);
    assert!(!model.is_null());
    model
}

fn last_error() -> String {
    let n = unsafe { cds_last_error_message(ptr::null_mut(), 0) };
    let mut buf = vec![0u8; n + 1];
    unsafe { cds_last_error_message(buf.as_mut_ptr().cast(), buf.len()) };
    String::from_utf8(buf[..n].to_vec()).unwrap()
}

#[test]
fn bounds_hedges_and_quotes() {
    let m = standard();
    let (mut lub, mut glb) = (0.0, 0.0);
    assert_eq!(unsafe { cds_model_bounds(m, &mut lub, &mut glb) }, CdsStatus::Ok);
    assert!((lub - 0.39152418726373694).abs() < 1e-9);
    assert!((glb - 0.2571051631519402).abs() < 1e-9);

    assert_eq!(unsafe { cds_model_quote_count(m) }, 5);
    let mut alphas = [0.0; 5];
    let mut deposit = 0.0;
    assert_eq!(unsafe { cds_model_hedge(m, CdsSide::Ask, alphas.as_mut_ptr(), 5, &mut deposit) }, CdsStatus::Ok);
    assert!((alphas[0] + 0.0319).abs() < 2e-3 && (deposit - 0.1720).abs() < 2e-3);

    let mut mean = 0.0;
    assert_eq!(unsafe { cds_model_mean_pv(m, CdsSide::Ask, &mut mean) }, CdsStatus::Ok);
    assert!((mean - 0.03001108949650542).abs() < 1e-9);

    let (mut bid, mut ask) = (0.0, 0.0);
    assert_eq!(unsafe { cds_model_gooddeal(m, 0.25, &mut bid, &mut ask) }, CdsStatus::Ok);
    assert!((ask - 0.367515).abs() < 1e-5 && (bid - 0.305585).abs() < 1e-5);
    unsafe { cds_model_free(m) };
}

#[test]
fn two_point_recovery_with_equal_mean_keeps_quotes() {
    let m = standard();
    let (mut bid0, mut ask0) = (0.0, 0.0);
    unsafe { cds_model_gooddeal(m, 0.25, &mut bid0, &mut ask0) };
    let mean = cdsbounds::measure::RecoveryDensitySpec::gamma_a().mean();
    let w_low = 1.0 - mean / 0.6;
    assert_eq!(unsafe { cds_model_set_two_point_recovery(m, 0.0, 0.6, w_low) }, CdsStatus::Ok);
    let (mut bid1, mut ask1) = (0.0, 0.0);
    unsafe { cds_model_gooddeal(m, 0.25, &mut bid1, &mut ask1) };
    assert!((bid0 - bid1).abs() < 1e-9 && (ask0 - ask1).abs() < 1e-9);
    unsafe { cds_model_free(m) };
}

#[test]
fn error_codes_and_messages() {
    let mut model = ptr::null_mut();
    let bad = [8usize, 4];
    let s = unsafe {
        cds_model_new(
            0.25,
            0.02,
            bad.as_ptr(),
            UPFRONTS.as_ptr(),
            SPREADS.as_ptr(),
            2,
            20,
            0.01,
            0.3,
            0.15,
            0.16,
            &mut model,
        )
    };
    assert_eq!(s, CdsStatus::InvalidArgument);
    assert!(model.is_null());
    assert!(last_error().contains("increasing"));

    let s = unsafe {
        cds_model_new(
            0.25,
            0.02,
            ptr::null(),
            UPFRONTS.as_ptr(),
            SPREADS.as_ptr(),
            5,
            20,
            0.01,
            0.3,
            0.15,
            0.16,
            &mut model,
        )
    };
    assert_eq!(s, CdsStatus::NullPointer);

    let arbitrage = [-10.0];
    let s = unsafe {
        cds_model_new(
            0.25,
            0.02,
            [20usize].as_ptr(),
            arbitrage.as_ptr(),
            [0.05].as_ptr(),
            1,
            20,
            0.01,
            0.3,
            0.15,
            0.16,
            &mut model,
        )
    };
    assert_eq!(s, CdsStatus::LpUnbounded, "{}", last_error());

    let m = standard();
    let mut small = [0.0; 2];
    let mut d = 0.0;
    assert_eq!(unsafe { cds_model_hedge(m, CdsSide::Bid, small.as_mut_ptr(), 2, &mut d) }, CdsStatus::BufferTooSmall);
    let (mut b, mut a) = (0.0, 0.0);
    assert_eq!(unsafe { cds_model_gooddeal(m, -1.0, &mut b, &mut a) }, CdsStatus::InvalidArgument);
    assert_eq!(unsafe { cds_model_bounds(ptr::null(), &mut b, &mut a) }, CdsStatus::NullPointer);
    unsafe { cds_model_free(m) };
    unsafe { cds_model_free(ptr::null_mut()) };
}

#[test]
fn truncated_error_message_is_nul_terminated() {
    let mut b = 0.0;
    unsafe { cds_model_bounds(ptr::null(), &mut b, &mut b) };
    let mut buf = [0x7fu8; 4];
    let n = unsafe { cds_last_error_message(buf.as_mut_ptr().cast(), buf.len()) };
    assert!(n > 3);
    assert_eq!(&buf, b"mod\0");
}

#[test]
fn header_declares_the_api() {
    let header = std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/include/cdsbounds.h")).unwrap();
    for name in [
        "typedef struct CdsModel CdsModel",
        "cds_model_new",
        "cds_model_free",
        "cds_model_gooddeal",
        "cds_last_error_message",
        "CDS_STATUS_OK",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
