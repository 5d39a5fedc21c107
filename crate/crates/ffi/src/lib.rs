//! C ABI for the scatterlab library.
//!
//! Every handle is opaque: construct it, pass it around, free it with the
//! matching `_free`. Functions return a [`SlabStatus`]; on anything but
//! `SLAB_STATUS_OK` a human-readable message is available through
//! [`slab_last_error_message`]. Direction arguments are arbitrary nonzero
//! vectors and are normalised internally. Series evaluation runs under the
//! library's default truncation policy.

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use scatterlab::forward::{
    farfield_plane_wave, scattered_field_plane_wave, Direction, PointSourceExpansion,
    ScattererConfig, ScattererKind, TruncationPolicy, Vec3, WaveNumber,
};
use scatterlab::identities::check_mixed_reciprocity;
use scatterlab::measurement::{
    check_admissible_ball, direction_grid, synthesize_phaseless, DirectionGrid, NoiseModel,
    PhaselessDataset, SourceGeometry,
};
use scatterlab::phase::{cos_phase_diff, cross_term};
use scatterlab::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlabStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numerical = 3,
    Io = 4,
    Panic = 5,
}

/// Physical kind selector for `slab_scatterer_new`. The physics pair is
/// read only for `Impedance` (lambda) and `Medium` (refractive index).
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SlabKind {
    Dirichlet = 0,
    Neumann = 1,
    Impedance = 2,
    Medium = 3,
    Transparent = 4,
}

/// Opaque sphere configuration.
pub struct SlabScatterer(ScattererConfig);

/// Opaque measurement geometry (reference source, admissible ball, cap).
pub struct SlabGeometry(SourceGeometry);

/// Opaque observation grid on the unit sphere.
pub struct SlabGrid(DirectionGrid);

/// Opaque phaseless dataset (the three modulus tables).
pub struct SlabDataset(PhaselessDataset);

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_last_error(message: impl Into<String>) {
    LAST_ERROR.with(|slot| *slot.borrow_mut() = message.into());
}

fn status_of(err: &Error) -> SlabStatus {
    match err.exit_code() {
        1 => SlabStatus::InvalidArgument,
        2 => SlabStatus::Numerical,
        _ => SlabStatus::Io,
    }
}

fn fail(err: Error) -> SlabStatus {
    let status = status_of(&err);
    set_last_error(err.to_string());
    status
}

fn guard(body: impl FnOnce() -> SlabStatus) -> SlabStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(payload) => {
            let message = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic in scatterlab".to_string());
            set_last_error(message);
            SlabStatus::Panic
        }
    }
}

/// Reads a 3-vector argument.
///
/// # Safety
/// `ptr` must be null or point to three readable doubles.
unsafe fn read_vec3(ptr: *const f64) -> Option<Vec3> {
    if ptr.is_null() {
        return None;
    }
    Some(Vec3::new(*ptr, *ptr.add(1), *ptr.add(2)))
}

unsafe fn write_vec3(ptr: *mut f64, v: Vec3) {
    *ptr = v.x;
    *ptr.add(1) = v.y;
    *ptr.add(2) = v.z;
}

fn null_pointer() -> SlabStatus {
    set_last_error("null pointer argument");
    SlabStatus::NullPointer
}

fn direction_from(ptr_value: Vec3) -> Result<Direction, Error> {
    Direction::from_vec(ptr_value)
}

const VERSION: &CStr =
    match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
        Ok(s) => s,
        Err(_) => panic!("version string contains NUL"),
    };

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn slab_version() -> *const c_char {
    VERSION.as_ptr()
}

/// Copies the last error message (UTF-8, NUL-terminated) into `buffer` and
/// returns the number of bytes of the full message, excluding the NUL.
/// Call with a null buffer to query the required capacity.
///
/// # Safety
/// `buffer` must be null or point to `capacity` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn slab_last_error_message(buffer: *mut c_char, capacity: usize) -> usize {
    LAST_ERROR.with(|slot| {
        let message = slot.borrow();
        let bytes = message.as_bytes();
        if !buffer.is_null() && capacity > 0 {
            let n = bytes.len().min(capacity - 1);
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buffer as *mut u8, n);
            *buffer.add(n) = 0;
        }
        bytes.len()
    })
}

/// Creates a sphere configuration. `center` points to three doubles;
/// `phys_re`/`phys_im` hold lambda (impedance) or the refractive index
/// (medium) and are ignored otherwise.
///
/// # Safety
/// `center` must point to three doubles, `out` to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn slab_scatterer_new(
    kind: SlabKind,
    center: *const f64,
    radius: f64,
    phys_re: f64,
    phys_im: f64,
    out: *mut *mut SlabScatterer,
) -> SlabStatus {
    guard(|| {
        let (Some(center), false) = (read_vec3(center), out.is_null()) else {
            return null_pointer();
        };
        let kind = match kind {
            SlabKind::Dirichlet => ScattererKind::Dirichlet,
            SlabKind::Neumann => ScattererKind::Neumann,
            SlabKind::Impedance => ScattererKind::Impedance(Complex64::new(phys_re, phys_im)),
            SlabKind::Medium => ScattererKind::Medium(Complex64::new(phys_re, phys_im)),
            SlabKind::Transparent => ScattererKind::Transparent,
        };
        match ScattererConfig::new(center, radius, kind) {
            Ok(config) => {
                *out = Box::into_raw(Box::new(SlabScatterer(config)));
                SlabStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Frees a scatterer handle; null is a no-op.
///
/// # Safety
/// `handle` must be null or come from `slab_scatterer_new`.
#[no_mangle]
pub unsafe extern "C" fn slab_scatterer_free(handle: *mut SlabScatterer) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Builds the measurement geometry and samples `gamma_count` cap points.
///
/// # Safety
/// Vector arguments must point to three doubles each; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slab_geometry_new(
    z0: *const f64,
    omega_center: *const f64,
    omega_radius: f64,
    cap_axis: *const f64,
    cap_half_angle: f64,
    gamma_count: usize,
    out: *mut *mut SlabGeometry,
) -> SlabStatus {
    guard(|| {
        let (Some(z0), Some(omega_center), Some(cap_axis), false) = (
            read_vec3(z0),
            read_vec3(omega_center),
            read_vec3(cap_axis),
            out.is_null(),
        ) else {
            return null_pointer();
        };
        let axis = match direction_from(cap_axis) {
            Ok(axis) => axis,
            Err(err) => return fail(err),
        };
        match SourceGeometry::new(
            z0,
            omega_center,
            omega_radius,
            axis,
            cap_half_angle,
            gamma_count,
        ) {
            Ok(geometry) => {
                *out = Box::into_raw(Box::new(SlabGeometry(geometry)));
                SlabStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Frees a geometry handle; null is a no-op.
///
/// # Safety
/// `handle` must be null or come from `slab_geometry_new`.
#[no_mangle]
pub unsafe extern "C" fn slab_geometry_free(handle: *mut SlabGeometry) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of sampled cap sources.
///
/// # Safety
/// `geometry` must be a live geometry handle.
#[no_mangle]
pub unsafe extern "C" fn slab_geometry_gamma_count(geometry: *const SlabGeometry) -> usize {
    if geometry.is_null() {
        return 0;
    }
    (*geometry).0.gamma_points.len()
}

/// Writes cap source `index` into `out_xyz`.
///
/// # Safety
/// `geometry` must be live; `out_xyz` must point to three writable doubles.
#[no_mangle]
pub unsafe extern "C" fn slab_geometry_gamma_point(
    geometry: *const SlabGeometry,
    index: usize,
    out_xyz: *mut f64,
) -> SlabStatus {
    guard(|| {
        if geometry.is_null() || out_xyz.is_null() {
            return null_pointer();
        }
        let geometry = &(*geometry).0;
        match geometry.gamma_points.get(index) {
            Some(&p) => {
                write_vec3(out_xyz, p);
                SlabStatus::Ok
            }
            None => {
                set_last_error(format!("gamma index {index} out of range"));
                SlabStatus::InvalidArgument
            }
        }
    })
}

/// Builds the Gauss-Legendre x uniform observation grid.
///
/// # Safety
/// `out` must point to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn slab_grid_new(
    n_polar: usize,
    n_azimuthal: usize,
    out: *mut *mut SlabGrid,
) -> SlabStatus {
    guard(|| {
        if out.is_null() {
            return null_pointer();
        }
        if n_polar < 2 || n_azimuthal < 4 {
            set_last_error("grid needs n_polar >= 2 and n_azimuthal >= 4");
            return SlabStatus::InvalidArgument;
        }
        *out = Box::into_raw(Box::new(SlabGrid(direction_grid(n_polar, n_azimuthal))));
        SlabStatus::Ok
    })
}

/// Frees a grid handle; null is a no-op.
///
/// # Safety
/// `handle` must be null or come from `slab_grid_new`.
#[no_mangle]
pub unsafe extern "C" fn slab_grid_free(handle: *mut SlabGrid) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Number of grid nodes.
///
/// # Safety
/// `grid` must be a live grid handle.
#[no_mangle]
pub unsafe extern "C" fn slab_grid_len(grid: *const SlabGrid) -> usize {
    if grid.is_null() {
        return 0;
    }
    (*grid).0.len()
}

/// Writes node `index` and its steradian weight.
///
/// # Safety
/// `grid` must be live; `out_xyz` must point to three writable doubles and
/// `out_weight` to one.
#[no_mangle]
pub unsafe extern "C" fn slab_grid_node(
    grid: *const SlabGrid,
    index: usize,
    out_xyz: *mut f64,
    out_weight: *mut f64,
) -> SlabStatus {
    guard(|| {
        if grid.is_null() || out_xyz.is_null() || out_weight.is_null() {
            return null_pointer();
        }
        let grid = &(*grid).0;
        if index >= grid.len() {
            set_last_error(format!("grid index {index} out of range"));
            return SlabStatus::InvalidArgument;
        }
        write_vec3(out_xyz, grid.nodes[index].vec());
        *out_weight = grid.weights[index];
        SlabStatus::Ok
    })
}

/// Admissibility of a source ball of radius `omega_radius` at wavenumber
/// `k`: `out_witness` receives the offending order, or -1 when admissible.
///
/// # Safety
/// Output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn slab_admissible_ball(
    omega_radius: f64,
    k: f64,
    out_admissible: *mut bool,
    out_witness: *mut i64,
    out_margin: *mut f64,
) -> SlabStatus {
    guard(|| {
        if out_admissible.is_null() || out_witness.is_null() || out_margin.is_null() {
            return null_pointer();
        }
        let k = match WaveNumber::new(k) {
            Ok(k) => k,
            Err(err) => return fail(err),
        };
        if !(omega_radius.is_finite() && omega_radius > 0.0) {
            set_last_error("omega radius must be positive");
            return SlabStatus::InvalidArgument;
        }
        let verdict = check_admissible_ball(omega_radius, k);
        *out_admissible = verdict.admissible;
        *out_witness = verdict.witness.map(|w| w as i64).unwrap_or(-1);
        *out_margin = verdict.min_margin;
        SlabStatus::Ok
    })
}

unsafe fn complex_out(value: Complex64, out_re: *mut f64, out_im: *mut f64) -> SlabStatus {
    *out_re = value.re;
    *out_im = value.im;
    SlabStatus::Ok
}

/// Plane-wave far-field pattern `u_inf(xhat, d)`.
///
/// # Safety
/// `scatterer` must be live; `xhat`/`d` point to three doubles; outputs
/// must be writable.
#[no_mangle]
pub unsafe extern "C" fn slab_farfield_plane_wave(
    scatterer: *const SlabScatterer,
    k: f64,
    xhat: *const f64,
    d: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SlabStatus {
    guard(|| {
        let (false, Some(xhat), Some(d), false, false) = (
            scatterer.is_null(),
            read_vec3(xhat),
            read_vec3(d),
            out_re.is_null(),
            out_im.is_null(),
        ) else {
            return null_pointer();
        };
        let result = WaveNumber::new(k).and_then(|k| {
            let xhat = direction_from(xhat)?;
            let d = direction_from(d)?;
            farfield_plane_wave(&(*scatterer).0, k, xhat, d, &TruncationPolicy::default())
        });
        match result {
            Ok(value) => complex_out(value, out_re, out_im),
            Err(err) => fail(err),
        }
    })
}

/// Scattered near field `u_s(x, d)` of a plane wave, outside the sphere.
///
/// # Safety
/// Same contract as [`slab_farfield_plane_wave`] with `x` a point.
#[no_mangle]
pub unsafe extern "C" fn slab_scattered_field_plane_wave(
    scatterer: *const SlabScatterer,
    k: f64,
    x: *const f64,
    d: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SlabStatus {
    guard(|| {
        let (false, Some(x), Some(d), false, false) = (
            scatterer.is_null(),
            read_vec3(x),
            read_vec3(d),
            out_re.is_null(),
            out_im.is_null(),
        ) else {
            return null_pointer();
        };
        let result = WaveNumber::new(k).and_then(|k| {
            let d = direction_from(d)?;
            scattered_field_plane_wave(&(*scatterer).0, k, x, d, &TruncationPolicy::default())
        });
        match result {
            Ok(value) => complex_out(value, out_re, out_im),
            Err(err) => fail(err),
        }
    })
}

/// Far field `v_inf_D(xhat, z)` scattered off the sphere by a point source.
///
/// # Safety
/// Same pointer contract as [`slab_farfield_plane_wave`].
#[no_mangle]
pub unsafe extern "C" fn slab_scattered_farfield_point_source(
    scatterer: *const SlabScatterer,
    k: f64,
    xhat: *const f64,
    z: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SlabStatus {
    guard(|| {
        let (false, Some(xhat), Some(z), false, false) = (
            scatterer.is_null(),
            read_vec3(xhat),
            read_vec3(z),
            out_re.is_null(),
            out_im.is_null(),
        ) else {
            return null_pointer();
        };
        let result = WaveNumber::new(k).and_then(|k| {
            let xhat = direction_from(xhat)?;
            let expansion =
                PointSourceExpansion::new(&(*scatterer).0, k, z, &TruncationPolicy::default())?;
            Ok(expansion.scattered_farfield(xhat))
        });
        match result {
            Ok(value) => complex_out(value, out_re, out_im),
            Err(err) => fail(err),
        }
    })
}

/// Total far field `v_inf(xhat, z)` co-produced by the sphere and the
/// point source; its modulus is the measurable quantity.
///
/// # Safety
/// Same pointer contract as [`slab_farfield_plane_wave`].
#[no_mangle]
pub unsafe extern "C" fn slab_total_farfield_point_source(
    scatterer: *const SlabScatterer,
    k: f64,
    xhat: *const f64,
    z: *const f64,
    out_re: *mut f64,
    out_im: *mut f64,
) -> SlabStatus {
    guard(|| {
        let (false, Some(xhat), Some(z), false, false) = (
            scatterer.is_null(),
            read_vec3(xhat),
            read_vec3(z),
            out_re.is_null(),
            out_im.is_null(),
        ) else {
            return null_pointer();
        };
        let result = WaveNumber::new(k).and_then(|k| {
            let xhat = direction_from(xhat)?;
            let expansion =
                PointSourceExpansion::new(&(*scatterer).0, k, z, &TruncationPolicy::default())?;
            Ok(expansion.total_farfield(xhat))
        });
        match result {
            Ok(value) => complex_out(value, out_re, out_im),
            Err(err) => fail(err),
        }
    })
}

/// Synthesises the three phaseless datasets. Noise is applied only when
/// `with_noise` is true.
///
/// # Safety
/// Handles must be live; `out` must point to a writable pointer slot.
#[no_mangle]
pub unsafe extern "C" fn slab_synthesize(
    scatterer: *const SlabScatterer,
    geometry: *const SlabGeometry,
    k: f64,
    grid: *const SlabGrid,
    noise_level: f64,
    noise_seed: u64,
    with_noise: bool,
    out: *mut *mut SlabDataset,
) -> SlabStatus {
    guard(|| {
        if scatterer.is_null() || geometry.is_null() || grid.is_null() || out.is_null() {
            return null_pointer();
        }
        let noise = with_noise.then_some(NoiseModel {
            level: noise_level,
            seed: noise_seed,
        });
        let result = WaveNumber::new(k).and_then(|k| {
            synthesize_phaseless(
                &(*scatterer).0,
                &(*geometry).0,
                k,
                &(*grid).0,
                noise,
                &TruncationPolicy::default(),
            )
        });
        match result {
            Ok(dataset) => {
                *out = Box::into_raw(Box::new(SlabDataset(dataset)));
                SlabStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Frees a dataset handle; null is a no-op.
///
/// # Safety
/// `handle` must be null or come from `slab_synthesize`.
#[no_mangle]
pub unsafe extern "C" fn slab_dataset_free(handle: *mut SlabDataset) {
    if !handle.is_null() {
        drop(Box::from_raw(handle));
    }
}

/// Writes the dataset dimensions (observation directions, cap sources).
///
/// # Safety
/// `dataset` must be live; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn slab_dataset_dims(
    dataset: *const SlabDataset,
    out_directions: *mut usize,
    out_sources: *mut usize,
) -> SlabStatus {
    guard(|| {
        if dataset.is_null() || out_directions.is_null() || out_sources.is_null() {
            return null_pointer();
        }
        *out_directions = (*dataset).0.n_directions();
        *out_sources = (*dataset).0.n_sources();
        SlabStatus::Ok
    })
}

unsafe fn dataset_entry(
    dataset: *const SlabDataset,
    direction: usize,
    source: usize,
    out: *mut f64,
    table: u8,
) -> SlabStatus {
    if dataset.is_null() || out.is_null() {
        return null_pointer();
    }
    let data = &(*dataset).0;
    if direction >= data.n_directions() || (table != 0 && source >= data.n_sources()) {
        set_last_error("dataset index out of range");
        return SlabStatus::InvalidArgument;
    }
    *out = match table {
        0 => data.d_ref[direction],
        1 => data.src(direction, source),
        _ => data.sup(direction, source),
    };
    SlabStatus::Ok
}

/// Reference modulus `|v_inf(xhat_i, z0)|`.
///
/// # Safety
/// `dataset` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn slab_dataset_ref_value(
    dataset: *const SlabDataset,
    direction: usize,
    out: *mut f64,
) -> SlabStatus {
    guard(|| dataset_entry(dataset, direction, 0, out, 0))
}

/// Cap-source modulus `|v_inf(xhat_i, z_j)|`.
///
/// # Safety
/// `dataset` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn slab_dataset_src_value(
    dataset: *const SlabDataset,
    direction: usize,
    source: usize,
    out: *mut f64,
) -> SlabStatus {
    guard(|| dataset_entry(dataset, direction, source, out, 1))
}

/// Superposition modulus `|v_inf(xhat_i, z0) + v_inf(xhat_i, z_j)|`.
///
/// # Safety
/// `dataset` must be live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn slab_dataset_sup_value(
    dataset: *const SlabDataset,
    direction: usize,
    source: usize,
    out: *mut f64,
) -> SlabStatus {
    guard(|| dataset_entry(dataset, direction, source, out, 2))
}

/// Interference cross term `Re(A conj(B))` from `|A|`, `|B|`, `|A+B|`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn slab_cross_term(a: f64, b: f64, s: f64, out: *mut f64) -> SlabStatus {
    guard(|| {
        if out.is_null() {
            return null_pointer();
        }
        match cross_term(a, b, s) {
            Ok(value) => {
                *out = value;
                SlabStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Relative-phase cosine from the three moduli; `out_valid` is false when
/// an amplitude sits at or below `floor` (then `out_value` is zero).
///
/// # Safety
/// Outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn slab_cos_phase_diff(
    a: f64,
    b: f64,
    s: f64,
    floor: f64,
    out_value: *mut f64,
    out_valid: *mut bool,
) -> SlabStatus {
    guard(|| {
        if out_value.is_null() || out_valid.is_null() {
            return null_pointer();
        }
        match cos_phase_diff(a, b, s, floor) {
            Ok(Some(value)) => {
                *out_value = value;
                *out_valid = true;
                SlabStatus::Ok
            }
            Ok(None) => {
                *out_value = 0.0;
                *out_valid = false;
                SlabStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}

/// Max relative residual of the mixed reciprocity identity over the grid
/// and the `n_sources` probe points in `sources_xyz` (packed x,y,z).
///
/// # Safety
/// `sources_xyz` must point to `3 * n_sources` doubles; handles live;
/// `out_residual` writable.
#[no_mangle]
pub unsafe extern "C" fn slab_check_mixed_reciprocity(
    scatterer: *const SlabScatterer,
    k: f64,
    grid: *const SlabGrid,
    sources_xyz: *const f64,
    n_sources: usize,
    out_residual: *mut f64,
) -> SlabStatus {
    guard(|| {
        if scatterer.is_null() || grid.is_null() || sources_xyz.is_null() || out_residual.is_null()
        {
            return null_pointer();
        }
        let sources: Vec<Vec3> = (0..n_sources)
            .map(|i| {
                Vec3::new(
                    *sources_xyz.add(3 * i),
                    *sources_xyz.add(3 * i + 1),
                    *sources_xyz.add(3 * i + 2),
                )
            })
            .collect();
        let result = WaveNumber::new(k).and_then(|k| {
            check_mixed_reciprocity(
                &(*scatterer).0,
                k,
                &(*grid).0,
                &sources,
                &TruncationPolicy::default(),
            )
        });
        match result {
            Ok(residual) => {
                *out_residual = residual;
                SlabStatus::Ok
            }
            Err(err) => fail(err),
        }
    })
}
