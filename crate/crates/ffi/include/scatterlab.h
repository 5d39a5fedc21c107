/* C interface to the scatterlab phaseless scattering library. */

#pragma once

/* Generated with cbindgen:0.27.0 */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Physical kind selector for `slab_scatterer_new`. The physics pair is
 * read only for `Impedance` (lambda) and `Medium` (refractive index).
 */
typedef enum SlabKind {
  SLAB_KIND_DIRICHLET = 0,
  SLAB_KIND_NEUMANN = 1,
  SLAB_KIND_IMPEDANCE = 2,
  SLAB_KIND_MEDIUM = 3,
  SLAB_KIND_TRANSPARENT = 4,
} SlabKind;

/**
 * Result of every fallible call.
 */
typedef enum SlabStatus {
  SLAB_STATUS_OK = 0,
  SLAB_STATUS_NULL_POINTER = 1,
  SLAB_STATUS_INVALID_ARGUMENT = 2,
  SLAB_STATUS_NUMERICAL = 3,
  SLAB_STATUS_IO = 4,
  SLAB_STATUS_PANIC = 5,
} SlabStatus;

/**
 * Opaque phaseless dataset (the three modulus tables).
 */
typedef struct SlabDataset SlabDataset;

/**
 * Opaque measurement geometry (reference source, admissible ball, cap).
 */
typedef struct SlabGeometry SlabGeometry;

/**
 * Opaque observation grid on the unit sphere.
 */
typedef struct SlabGrid SlabGrid;

/**
 * Opaque sphere configuration.
 */
typedef struct SlabScatterer SlabScatterer;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *slab_version(void);

/**
 * Copies the last error message (UTF-8, NUL-terminated) into `buffer` and
 * returns the number of bytes of the full message, excluding the NUL.
 * Call with a null buffer to query the required capacity.
 *
 * # Safety
 * `buffer` must be null or point to `capacity` writable bytes.
 */
size_t slab_last_error_message(char *buffer, size_t capacity);

/**
 * Creates a sphere configuration. `center` points to three doubles;
 * `phys_re`/`phys_im` hold lambda (impedance) or the refractive index
 * (medium) and are ignored otherwise.
 *
 * # Safety
 * `center` must point to three doubles, `out` to a writable pointer slot.
 */
enum SlabStatus slab_scatterer_new(enum SlabKind kind,
                                   const double *center,
                                   double radius,
                                   double phys_re,
                                   double phys_im,
                                   struct SlabScatterer **out);

/**
 * Frees a scatterer handle; null is a no-op.
 *
 * # Safety
 * `handle` must be null or come from `slab_scatterer_new`.
 */
void slab_scatterer_free(struct SlabScatterer *handle);

/**
 * Builds the measurement geometry and samples `gamma_count` cap points.
 *
 * # Safety
 * Vector arguments must point to three doubles each; `out` must be writable.
 */
enum SlabStatus slab_geometry_new(const double *z0,
                                  const double *omega_center,
                                  double omega_radius,
                                  const double *cap_axis,
                                  double cap_half_angle,
                                  size_t gamma_count,
                                  struct SlabGeometry **out);

/**
 * Frees a geometry handle; null is a no-op.
 *
 * # Safety
 * `handle` must be null or come from `slab_geometry_new`.
 */
void slab_geometry_free(struct SlabGeometry *handle);

/**
 * Number of sampled cap sources.
 *
 * # Safety
 * `geometry` must be a live geometry handle.
 */
size_t slab_geometry_gamma_count(const struct SlabGeometry *geometry);

/**
 * Writes cap source `index` into `out_xyz`.
 *
 * # Safety
 * `geometry` must be live; `out_xyz` must point to three writable doubles.
 */
enum SlabStatus slab_geometry_gamma_point(const struct SlabGeometry *geometry,
                                          size_t index,
                                          double *out_xyz);

/**
 * Builds the Gauss-Legendre x uniform observation grid.
 *
 * # Safety
 * `out` must point to a writable pointer slot.
 */
enum SlabStatus slab_grid_new(size_t n_polar, size_t n_azimuthal, struct SlabGrid **out);

/**
 * Frees a grid handle; null is a no-op.
 *
 * # Safety
 * `handle` must be null or come from `slab_grid_new`.
 */
void slab_grid_free(struct SlabGrid *handle);

/**
 * Number of grid nodes.
 *
 * # Safety
 * `grid` must be a live grid handle.
 */
size_t slab_grid_len(const struct SlabGrid *grid);

/**
 * Writes node `index` and its steradian weight.
 *
 * # Safety
 * `grid` must be live; `out_xyz` must point to three writable doubles and
 * `out_weight` to one.
 */
enum SlabStatus slab_grid_node(const struct SlabGrid *grid,
                               size_t index,
                               double *out_xyz,
                               double *out_weight);

/**
 * Admissibility of a source ball of radius `omega_radius` at wavenumber
 * `k`: `out_witness` receives the offending order, or -1 when admissible.
 *
 * # Safety
 * Output pointers must be writable.
 */
enum SlabStatus slab_admissible_ball(double omega_radius,
                                     double k,
                                     bool *out_admissible,
                                     int64_t *out_witness,
                                     double *out_margin);

/**
 * Plane-wave far-field pattern `u_inf(xhat, d)`.
 *
 * # Safety
 * `scatterer` must be live; `xhat`/`d` point to three doubles; outputs
 * must be writable.
 */
enum SlabStatus slab_farfield_plane_wave(const struct SlabScatterer *scatterer,
                                         double k,
                                         const double *xhat,
                                         const double *d,
                                         double *out_re,
                                         double *out_im);

/**
 * Scattered near field `u_s(x, d)` of a plane wave, outside the sphere.
 *
 * # Safety
 * Same contract as [`slab_farfield_plane_wave`] with `x` a point.
 */
enum SlabStatus slab_scattered_field_plane_wave(const struct SlabScatterer *scatterer,
                                                double k,
                                                const double *x,
                                                const double *d,
                                                double *out_re,
                                                double *out_im);

/**
 * Far field `v_inf_D(xhat, z)` scattered off the sphere by a point source.
 *
 * # Safety
 * Same pointer contract as [`slab_farfield_plane_wave`].
 */
enum SlabStatus slab_scattered_farfield_point_source(const struct SlabScatterer *scatterer,
                                                     double k,
                                                     const double *xhat,
                                                     const double *z,
                                                     double *out_re,
                                                     double *out_im);

/**
 * Total far field `v_inf(xhat, z)` co-produced by the sphere and the
 * point source; its modulus is the measurable quantity.
 *
 * # Safety
 * Same pointer contract as [`slab_farfield_plane_wave`].
 */
enum SlabStatus slab_total_farfield_point_source(const struct SlabScatterer *scatterer,
                                                 double k,
                                                 const double *xhat,
                                                 const double *z,
                                                 double *out_re,
                                                 double *out_im);

/**
 * Synthesises the three phaseless datasets. Noise is applied only when
 * `with_noise` is true.
 *
 * # Safety
 * Handles must be live; `out` must point to a writable pointer slot.
 */
enum SlabStatus slab_synthesize(const struct SlabScatterer *scatterer,
                                const struct SlabGeometry *geometry,
                                double k,
                                const struct SlabGrid *grid,
                                double noise_level,
                                uint64_t noise_seed,
                                bool with_noise,
                                struct SlabDataset **out);

/**
 * Frees a dataset handle; null is a no-op.
 *
 * # Safety
 * `handle` must be null or come from `slab_synthesize`.
 */
void slab_dataset_free(struct SlabDataset *handle);

/**
 * Writes the dataset dimensions (observation directions, cap sources).
 *
 * # Safety
 * `dataset` must be live; outputs must be writable.
 */
enum SlabStatus slab_dataset_dims(const struct SlabDataset *dataset,
                                  size_t *out_directions,
                                  size_t *out_sources);

/**
 * Reference modulus `|v_inf(xhat_i, z0)|`.
 *
 * # Safety
 * `dataset` must be live; `out` writable.
 */
enum SlabStatus slab_dataset_ref_value(const struct SlabDataset *dataset,
                                       size_t direction,
                                       double *out);

/**
 * Cap-source modulus `|v_inf(xhat_i, z_j)|`.
 *
 * # Safety
 * `dataset` must be live; `out` writable.
 */
enum SlabStatus slab_dataset_src_value(const struct SlabDataset *dataset,
                                       size_t direction,
                                       size_t source,
                                       double *out);

/**
 * Superposition modulus `|v_inf(xhat_i, z0) + v_inf(xhat_i, z_j)|`.
 *
 * # Safety
 * `dataset` must be live; `out` writable.
 */
enum SlabStatus slab_dataset_sup_value(const struct SlabDataset *dataset,
                                       size_t direction,
                                       size_t source,
                                       double *out);

/**
 * Interference cross term `Re(A conj(B))` from `|A|`, `|B|`, `|A+B|`.
 *
 * # Safety
 * `out` must be writable.
 */
enum SlabStatus slab_cross_term(double a, double b, double s, double *out);

/**
 * Relative-phase cosine from the three moduli; `out_valid` is false when
 * an amplitude sits at or below `floor` (then `out_value` is zero).
 *
 * # Safety
 * Outputs must be writable.
 */
enum SlabStatus slab_cos_phase_diff(double a,
                                    double b,
                                    double s,
                                    double floor,
                                    double *out_value,
                                    bool *out_valid);

/**
 * Max relative residual of the mixed reciprocity identity over the grid
 * and the `n_sources` probe points in `sources_xyz` (packed x,y,z).
 *
 * # Safety
 * `sources_xyz` must point to `3 * n_sources` doubles; handles live;
 * `out_residual` writable.
 */
enum SlabStatus slab_check_mixed_reciprocity(const struct SlabScatterer *scatterer,
                                             double k,
                                             const struct SlabGrid *grid,
                                             const double *sources_xyz,
                                             size_t n_sources,
                                             double *out_residual);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus
