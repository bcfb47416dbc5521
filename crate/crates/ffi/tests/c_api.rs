use std::ffi::CStr;
use std::ptr;

use givens_sweep_ffi::*;

fn dataset(n: usize, m: usize) -> *mut GsDataset {
    let data = givens_sweep::Dataset::synthetic(n, m, 5).unwrap();
    let mut handle = ptr::null_mut();
    let status = unsafe { gs_dataset_new(data.values().as_ptr(), n, m, &mut handle) };
    assert_eq!(status, GsStatus::Ok);
    handle
}

#[test]
fn schedule_round_trip() {
    let mut len = 0usize;
    assert_eq!(
        unsafe { gs_greedy_swaps(4, ptr::null_mut(), 0, &mut len) },
        GsStatus::Ok
    );
    assert_eq!(len, 11);
    let mut buf = vec![0u32; len];
    assert_eq!(
        unsafe { gs_greedy_swaps(4, buf.as_mut_ptr(), 3, &mut len) },
        GsStatus::BufferTooSmall
    );
    assert_eq!(
        unsafe { gs_greedy_swaps(4, buf.as_mut_ptr(), buf.len(), &mut len) },
        GsStatus::Ok
    );
    assert_eq!(buf, [1, 2, 1, 2, 3, 2, 1, 2, 3, 2, 3]);
    assert_eq!(
        unsafe { gs_greedy_swaps(1, ptr::null_mut(), 0, &mut len) },
        GsStatus::InvalidDataset
    );
    assert_eq!(gs_predicted_rotation_flops(3), 60);
}

#[test]
fn sweep_and_lookup() {
    let d = dataset(40, 4);
    let mut table = ptr::null_mut();
    assert_eq!(
        unsafe { gs_sweep(d, ptr::null(), &mut table) },
        GsStatus::Ok
    );
    assert_eq!(unsafe { gs_table_len(table) }, 32);
    assert_eq!(
        unsafe { gs_table_rotation_flops(table) },
        gs_predicted_rotation_flops(4)
    );

    let mut fam = GsFamily::default();
    let mut coef = [0.0f64; 3];
    let status =
        unsafe { gs_table_find(table, 0, 0b1110, &mut fam, coef.as_mut_ptr(), coef.len()) };
    assert_eq!(status, GsStatus::Ok);
    assert_eq!((fam.response, fam.nparents), (0, 3));

    let mut first = GsFamily::default();
    assert_eq!(
        unsafe { gs_table_get(table, 0, &mut first, ptr::null_mut(), 0) },
        GsStatus::Ok
    );
    assert_eq!((first.response, first.parents), (0, 0));
    assert!(first.rss >= fam.rss);

    assert_eq!(
        unsafe { gs_table_get(table, 32, &mut first, ptr::null_mut(), 0) },
        GsStatus::NotFound
    );
    assert_eq!(
        unsafe { gs_table_find(table, 0, 0b0001, &mut fam, ptr::null_mut(), 0) },
        GsStatus::InvalidArgument
    );
    assert_eq!(
        unsafe { gs_table_find(table, 0, 0b1110, &mut fam, coef.as_mut_ptr(), 2) },
        GsStatus::BufferTooSmall
    );
    unsafe {
        gs_table_free(table);
        gs_dataset_free(d);
    }
}

#[test]
fn parallel_options() {
    let d = dataset(40, 6);
    let mut opts = gs_sweep_options_default();
    opts.workers = 4;
    opts.score = GS_SCORE_BIC;
    let mut table = ptr::null_mut();
    assert_eq!(unsafe { gs_sweep(d, &opts, &mut table) }, GsStatus::Ok);
    assert_eq!(unsafe { gs_table_len(table) }, 6 * 32);
    unsafe { gs_table_free(table) };

    opts.workers = 3;
    assert_eq!(
        unsafe { gs_sweep(d, &opts, &mut table) },
        GsStatus::InvalidArgument
    );
    opts.workers = 1;
    opts.score = 9;
    assert_eq!(
        unsafe { gs_sweep(d, &opts, &mut table) },
        GsStatus::InvalidArgument
    );
    let msg = unsafe { CStr::from_ptr(gs_last_error()) }.to_str().unwrap();
    assert!(msg.contains("unknown score"), "{msg}");
    unsafe { gs_dataset_free(d) };
}

#[test]
fn errors_are_reported() {
    let mut handle = ptr::null_mut();
    let values = [1.0, 2.0, f64::NAN, 4.0];
    assert_eq!(
        unsafe { gs_dataset_new(values.as_ptr(), 2, 2, &mut handle) },
        GsStatus::InvalidDataset
    );
    assert!(!gs_last_error().is_null());
    assert_eq!(
        unsafe { gs_dataset_new(ptr::null(), 2, 2, &mut handle) },
        GsStatus::NullPointer
    );

    let collinear = [1.0, 2.0, 3.0, 2.0, 4.0, 6.0];
    assert_eq!(
        unsafe { gs_dataset_new(collinear.as_ptr(), 3, 2, &mut handle) },
        GsStatus::Ok
    );
    let mut table = ptr::null_mut();
    assert_eq!(
        unsafe { gs_sweep(handle, ptr::null(), &mut table) },
        GsStatus::Numerical
    );
    unsafe { gs_dataset_free(handle) };
    unsafe { gs_dataset_free(ptr::null_mut()) };
    unsafe { gs_table_free(ptr::null_mut()) };
    assert_eq!(unsafe { gs_table_len(ptr::null()) }, 0);
}

#[test]
fn header_declares_the_api() {
    let header = include_str!("../include/givens_sweep.h");
    for name in [
        "gs_last_error",
        "gs_dataset_new",
        "gs_dataset_free",
        "gs_greedy_swaps",
        "gs_predicted_rotation_flops",
        "gs_sweep_options_default",
        "gs_sweep",
        "gs_table_free",
        "gs_table_len",
        "gs_table_rotation_flops",
        "gs_table_get",
        "gs_table_find",
        "typedef struct GsDataset GsDataset",
        "typedef struct GsScoreTable GsScoreTable",
        "GS_STATUS_NUMERICAL = 5",
    ] {
        assert!(header.contains(name), "missing {name}");
    }
}
