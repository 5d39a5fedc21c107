//! Exercises the C ABI through the exported symbols, plus a compile check
//! of the generated header.

use std::path::Path;
use std::ptr;

use scatterlab_ffi::*;

fn scatterer(kind: SlabKind, radius: f64, phys: (f64, f64)) -> *mut SlabScatterer {
    let center = [0.3, -0.2, 0.1];
    let mut handle = ptr::null_mut();
    let status =
        unsafe { slab_scatterer_new(kind, center.as_ptr(), radius, phys.0, phys.1, &mut handle) };
    assert_eq!(status, SlabStatus::Ok);
    assert!(!handle.is_null());
    handle
}

#[test]
fn version_is_a_static_string() {
    let version = unsafe { std::ffi::CStr::from_ptr(slab_version()) };
    assert_eq!(version.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn scatterer_lifecycle_and_validation() {
    let handle = scatterer(SlabKind::Dirichlet, 2.0, (0.0, 0.0));
    unsafe { slab_scatterer_free(handle) };

    // invalid radius reports InvalidArgument with a message
    let center = [0.0, 0.0, 0.0];
    let mut out = ptr::null_mut();
    let status = unsafe {
        slab_scatterer_new(
            SlabKind::Dirichlet,
            center.as_ptr(),
            -1.0,
            0.0,
            0.0,
            &mut out,
        )
    };
    assert_eq!(status, SlabStatus::InvalidArgument);
    let needed = unsafe { slab_last_error_message(ptr::null_mut(), 0) };
    assert!(needed > 0);
    let mut buffer = vec![0i8; needed + 1];
    let written = unsafe { slab_last_error_message(buffer.as_mut_ptr() as *mut _, buffer.len()) };
    assert_eq!(written, needed);
    let message = unsafe { std::ffi::CStr::from_ptr(buffer.as_ptr() as *const _) };
    assert!(message.to_str().unwrap().contains("radius"));

    // null pointers never crash
    let status =
        unsafe { slab_scatterer_new(SlabKind::Dirichlet, ptr::null(), 1.0, 0.0, 0.0, &mut out) };
    assert_eq!(status, SlabStatus::NullPointer);
    unsafe { slab_scatterer_free(ptr::null_mut()) };
}

#[test]
fn plane_farfield_matches_native_call() {
    let handle = scatterer(SlabKind::Impedance, 1.0, (1.0, 0.5));
    let xhat = [0.0, 0.6, 0.8];
    let d = [1.0, 0.0, 0.0];
    let (mut re, mut im) = (0.0, 0.0);
    let status = unsafe {
        slab_farfield_plane_wave(handle, 2.0, xhat.as_ptr(), d.as_ptr(), &mut re, &mut im)
    };
    assert_eq!(status, SlabStatus::Ok);

    use scatterlab::forward::*;
    let config = ScattererConfig::new(
        Vec3::new(0.3, -0.2, 0.1),
        1.0,
        ScattererKind::Impedance(num_complex::Complex64::new(1.0, 0.5)),
    )
    .unwrap();
    let native = farfield_plane_wave(
        &config,
        WaveNumber::new(2.0).unwrap(),
        Direction::from_vec(Vec3::new(0.0, 0.6, 0.8)).unwrap(),
        Direction::from_vec(Vec3::new(1.0, 0.0, 0.0)).unwrap(),
        &TruncationPolicy::default(),
    )
    .unwrap();
    assert_eq!(re, native.re);
    assert_eq!(im, native.im);
    unsafe { slab_scatterer_free(handle) };
}

#[test]
fn mixed_reciprocity_via_the_abi() {
    let handle = scatterer(SlabKind::Medium, 1.0, (1.69, 0.0));
    let mut grid = ptr::null_mut();
    assert_eq!(unsafe { slab_grid_new(4, 8, &mut grid) }, SlabStatus::Ok);
    let sources: Vec<f64> = vec![
        3.3, -0.2, 0.1, //
        0.3, 2.8, 0.1, //
        0.3, -0.2, -2.9,
    ];
    let mut residual = f64::NAN;
    let status = unsafe {
        slab_check_mixed_reciprocity(handle, 2.0, grid, sources.as_ptr(), 3, &mut residual)
    };
    assert_eq!(status, SlabStatus::Ok);
    assert!(residual < 1e-8, "residual {residual:.3e}");
    unsafe {
        slab_grid_free(grid);
        slab_scatterer_free(handle);
    }
}

#[test]
fn dataset_synthesis_and_access() {
    let handle = scatterer(SlabKind::Dirichlet, 2.0, (0.0, 0.0));
    let mut geometry = ptr::null_mut();
    let z0 = [14.0, 0.0, 0.0];
    let omega_center = [8.0, 0.0, 0.0];
    let cap_axis = [-1.0, 0.0, 0.0];
    let status = unsafe {
        slab_geometry_new(
            z0.as_ptr(),
            omega_center.as_ptr(),
            3.0,
            cap_axis.as_ptr(),
            std::f64::consts::FRAC_PI_2,
            8,
            &mut geometry,
        )
    };
    assert_eq!(status, SlabStatus::Ok);
    assert_eq!(unsafe { slab_geometry_gamma_count(geometry) }, 8);
    let mut point = [0.0; 3];
    assert_eq!(
        unsafe { slab_geometry_gamma_point(geometry, 0, point.as_mut_ptr()) },
        SlabStatus::Ok
    );
    // first cap point sits on the pole towards the scatterer
    assert!((point[0] - 5.0).abs() < 1e-12);

    let mut grid = ptr::null_mut();
    assert_eq!(unsafe { slab_grid_new(4, 8, &mut grid) }, SlabStatus::Ok);
    assert_eq!(unsafe { slab_grid_len(grid) }, 32);

    let mut dataset = ptr::null_mut();
    let status =
        unsafe { slab_synthesize(handle, geometry, 1.0, grid, 0.0, 0, false, &mut dataset) };
    assert_eq!(status, SlabStatus::Ok);
    let (mut dirs, mut sources) = (0usize, 0usize);
    assert_eq!(
        unsafe { slab_dataset_dims(dataset, &mut dirs, &mut sources) },
        SlabStatus::Ok
    );
    assert_eq!((dirs, sources), (32, 8));

    // triangle inequality holds entrywise through the accessors
    for i in 0..dirs {
        let mut a = 0.0;
        assert_eq!(
            unsafe { slab_dataset_ref_value(dataset, i, &mut a) },
            SlabStatus::Ok
        );
        for j in 0..sources {
            let (mut b, mut s) = (0.0, 0.0);
            assert_eq!(
                unsafe { slab_dataset_src_value(dataset, i, j, &mut b) },
                SlabStatus::Ok
            );
            assert_eq!(
                unsafe { slab_dataset_sup_value(dataset, i, j, &mut s) },
                SlabStatus::Ok
            );
            assert!(s <= a + b + 1e-14);
            assert!(s >= (a - b).abs() - 1e-14);
            let mut cross = 0.0;
            assert_eq!(
                unsafe { slab_cross_term(a, b, s, &mut cross) },
                SlabStatus::Ok
            );
            let (mut value, mut valid) = (0.0, false);
            assert_eq!(
                unsafe { slab_cos_phase_diff(a, b, s, 1e-14, &mut value, &mut valid) },
                SlabStatus::Ok
            );
            assert!(valid);
            assert!((-1.0..=1.0).contains(&value));
        }
    }

    // out-of-range index is reported, not UB
    let mut v = 0.0;
    assert_eq!(
        unsafe { slab_dataset_ref_value(dataset, dirs, &mut v) },
        SlabStatus::InvalidArgument
    );

    unsafe {
        slab_dataset_free(dataset);
        slab_grid_free(grid);
        slab_geometry_free(geometry);
        slab_scatterer_free(handle);
    }
}

#[test]
fn admissibility_through_the_abi() {
    let (mut admissible, mut witness, mut margin) = (true, 0i64, 0.0);
    let status = unsafe {
        slab_admissible_ball(
            std::f64::consts::PI,
            1.0,
            &mut admissible,
            &mut witness,
            &mut margin,
        )
    };
    assert_eq!(status, SlabStatus::Ok);
    assert!(!admissible);
    assert_eq!(witness, 0);

    let status =
        unsafe { slab_admissible_ball(3.0, 1.0, &mut admissible, &mut witness, &mut margin) };
    assert_eq!(status, SlabStatus::Ok);
    assert!(admissible);
    assert_eq!(witness, -1);
}

#[test]
fn source_inside_sphere_maps_to_invalid_argument() {
    let handle = scatterer(SlabKind::Dirichlet, 2.0, (0.0, 0.0));
    let xhat = [0.0, 0.0, 1.0];
    let z = [0.3, -0.2, 0.5]; // inside the sphere
    let (mut re, mut im) = (0.0, 0.0);
    let status = unsafe {
        slab_total_farfield_point_source(handle, 1.0, xhat.as_ptr(), z.as_ptr(), &mut re, &mut im)
    };
    assert_eq!(status, SlabStatus::InvalidArgument);
    unsafe { slab_scatterer_free(handle) };
}

#[test]
fn generated_header_is_valid_c() {
    let header = Path::new(env!("CARGO_MANIFEST_DIR")).join("include/scatterlab.h");
    assert!(
        header.is_file(),
        "build.rs did not generate {}",
        header.display()
    );
    let text = std::fs::read_to_string(&header).unwrap();
    for symbol in [
        "slab_scatterer_new",
        "slab_synthesize",
        "slab_cross_term",
        "typedef struct SlabDataset SlabDataset",
        "SLAB_STATUS_OK",
    ] {
        assert!(text.contains(symbol), "header lacks {symbol}");
    }
    let status = std::process::Command::new("cc")
        .args(["-fsyntax-only", "-x", "c", "-std=c99"])
        .arg(&header)
        .status()
        .expect("cc is available");
    assert!(status.success(), "generated header does not compile as C99");
}
