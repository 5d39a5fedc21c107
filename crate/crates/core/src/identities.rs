//! Batch numerical checks of the structural identities of the forward map.
//!
//! Each check reduces a grid of pointwise identities to a single sup-norm
//! residual, so a verdict is one comparison against a documented threshold.
//! The checks are deterministic given the configuration and grids.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::forward::{
    scattered_field_plane_wave, Direction, PlaneWaveExpansion, PointSourceExpansion,
    ScattererConfig, TruncationPolicy, Vec3, WaveNumber,
};
use crate::measurement::{synthesize_phaseless, DirectionGrid, SourceGeometry};

/// Max relative residual allowed for `4pi v_inf_D(x^, z) = u_s(z, -x^)`;
/// the identity is exact, the allowance is for the two series routes.
pub const MIXED_RECIPROCITY_TOL: f64 = 1e-8;

/// Absolute residual allowed for `u_inf(x^, d) = u_inf(-d, -x^)`.
pub const RECIPROCITY_TOL: f64 = 1e-12;

/// Plane-wave translation gap: zero up to rounding of the unimodular factor.
pub const PLANE_TRANSLATION_TOL: f64 = 1e-12;

/// Optical-theorem residual allowance, quadrature-limited on the (8,16) grid.
pub const OPTICAL_THEOREM_TOL: f64 = 1e-6;

/// Unitarity allowance for `|1 + 2 R_n| = 1` on lossless spheres.
pub const UNITARITY_TOL: f64 = 1e-12;

/// Frozen regression floor for the superposition-dataset translation gap at
/// shift `0.5/k` in the named reference configuration (Dirichlet sphere,
/// ka = 2, 16-point half-angle-pi/2 cap at kR = 3). Measured once from the
/// forward model: 2.416e-2, about `0.30/4pi`.
pub const SUPERPOSITION_GAP_FLOOR: f64 = 1e-2;

/// Frozen regression floor for the conjugate-branch dichotomy residual in
/// the same reference configuration. Measured once: 4.18e-1.
pub const CONJUGATE_BRANCH_FLOOR: f64 = 0.1;

/// Frozen regression floor for the smallest dataset gap that separates the
/// reference Dirichlet sphere from its Neumann twin (measured gaps
/// 2.01e-2 / 4.88e-2 / 5.71e-2).
pub const KIND_DISCRIMINATION_FLOOR: f64 = 1e-2;

/// Frozen regression floor for the full-phaseless misfit of the truth
/// translated by `0.5/k` in the reference configuration (measured 6.17e-3).
pub const TRANSLATED_MISFIT_FLOOR: f64 = 1e-3;

/// Frozen regression floor for the misfit increase along any of the 26 unit
/// perturbation directions of magnitude `1e-2/k` at the truth (measured
/// minimum 3.23e-7).
pub const LOCAL_MINIMUM_MARGIN_FLOOR: f64 = 1e-7;

/// One check outcome, serialisable for CLI reports.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckReport {
    pub name: String,
    pub residual: f64,
    pub threshold: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub details: Option<String>,
}

impl CheckReport {
    pub fn new(name: &str, residual: f64, threshold: f64) -> Self {
        CheckReport {
            name: name.to_string(),
            residual,
            threshold,
            pass: residual <= threshold,
            details: None,
        }
    }

    pub fn with_details(mut self, details: String) -> Self {
        self.details = Some(details);
        self
    }
}

/// Max relative residual of `4pi v_inf_D(x^, z) = u_s(z, -x^)` over all
/// (direction, source) pairs; the two sides follow independent series
/// routes (addition-theorem expansion vs plane-wave scattered field).
pub fn check_mixed_reciprocity(
    config: &ScattererConfig,
    k: WaveNumber,
    obs_grid: &DirectionGrid,
    sources: &[Vec3],
    policy: &TruncationPolicy,
) -> Result<f64> {
    let mut worst = 0.0_f64;
    for &z in sources {
        let expansion = PointSourceExpansion::new(config, k, z, policy)?;
        for &xhat in &obs_grid.nodes {
            let lhs = 4.0 * std::f64::consts::PI * expansion.scattered_farfield(xhat);
            let rhs = scattered_field_plane_wave(config, k, z, xhat.flipped(), policy)?;
            let residual = (lhs - rhs).norm() / rhs.norm().max(1e-30);
            worst = worst.max(residual);
        }
    }
    Ok(worst)
}

/// Max residual of the reciprocity relation `u_inf(x^, d) = u_inf(-d, -x^)`
/// over all ordered pairs of grid nodes.
pub fn check_reciprocity(
    config: &ScattererConfig,
    k: WaveNumber,
    grid: &DirectionGrid,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let expansion = PlaneWaveExpansion::new(config, k, policy)?;
    let mut worst = 0.0_f64;
    for &xhat in &grid.nodes {
        for &d in &grid.nodes {
            let forward = expansion.farfield(xhat, d);
            let swapped = expansion.farfield(d.flipped(), xhat.flipped());
            worst = worst.max((forward - swapped).norm());
        }
    }
    Ok(worst)
}

/// What to probe the translated scatterer with.
pub enum TranslationProbe<'a> {
    /// Plane waves with the given incident directions: the modulus gap is
    /// expected to vanish, which is the non-uniqueness this crate exists to
    /// quantify.
    PlaneWaves(&'a [Direction]),
    /// The full point-source/superposition datasets with fixed geometry:
    /// the gap is expected to be strictly positive.
    Superposition(&'a SourceGeometry),
}

/// Sup entrywise gap between the data of the scatterer and of its translate.
pub fn check_translation_invariance(
    config: &ScattererConfig,
    shift: Vec3,
    k: WaveNumber,
    grid: &DirectionGrid,
    probe: TranslationProbe,
    policy: &TruncationPolicy,
) -> Result<f64> {
    let moved = config.translated(shift);
    match probe {
        TranslationProbe::PlaneWaves(incident) => {
            let base = PlaneWaveExpansion::new(config, k, policy)?;
            let shifted = PlaneWaveExpansion::new(&moved, k, policy)?;
            let mut worst = 0.0_f64;
            for &d in incident {
                for &xhat in &grid.nodes {
                    let gap =
                        (shifted.farfield(xhat, d).norm() - base.farfield(xhat, d).norm()).abs();
                    worst = worst.max(gap);
                }
            }
            Ok(worst)
        }
        TranslationProbe::Superposition(geometry) => {
            let base = synthesize_phaseless(config, geometry, k, grid, None, policy)?;
            let shifted = synthesize_phaseless(&moved, geometry, k, grid, None, policy)?;
            let mut worst = 0.0_f64;
            for (a, b) in base
                .d_ref
                .iter()
                .zip(&shifted.d_ref)
                .chain(base.d_src.iter().zip(&shifted.d_src))
                .chain(base.d_sup.iter().zip(&shifted.d_sup))
            {
                worst = worst.max((a - b).abs());
            }
            Ok(worst)
        }
    }
}

/// Sup gaps of the three dataset families for two scatterers sharing one
/// measurement geometry. All three gaps vanishing is the uniqueness
/// hypothesis; any gap above `10 x noise_floor` flags the pair as
/// distinguishable from the data.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub gap_ref: f64,
    pub gap_src: f64,
    pub gap_sup: f64,
    pub noise_floor: f64,
    pub distinguishable: bool,
}

impl UniquenessReport {
    pub fn max_gap(&self) -> f64 {
        self.gap_ref.max(self.gap_src).max(self.gap_sup)
    }
}

/// Compares the phaseless data of two scatterer configurations.
pub fn uniqueness_gate(
    config1: &ScattererConfig,
    config2: &ScattererConfig,
    geometry: &SourceGeometry,
    k: WaveNumber,
    grid: &DirectionGrid,
    noise_floor: f64,
    policy: &TruncationPolicy,
) -> Result<UniquenessReport> {
    let data1 = synthesize_phaseless(config1, geometry, k, grid, None, policy)?;
    let data2 = synthesize_phaseless(config2, geometry, k, grid, None, policy)?;
    let sup_gap = |a: &[f64], b: &[f64]| {
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    };
    let gap_ref = sup_gap(&data1.d_ref, &data2.d_ref);
    let gap_src = sup_gap(&data1.d_src, &data2.d_src);
    let gap_sup = sup_gap(&data1.d_sup, &data2.d_sup);
    let threshold = 10.0 * noise_floor;
    Ok(UniquenessReport {
        gap_ref,
        gap_src,
        gap_sup,
        noise_floor,
        distinguishable: gap_ref > threshold || gap_src > threshold || gap_sup > threshold,
    })
}

/// Fixed probe directions for the optical-theorem check.
fn optical_probe_directions() -> Vec<Direction> {
    vec![
        Direction::from_polar(0.0, 0.0),
        Direction::from_polar(std::f64::consts::FRAC_PI_2, 0.0),
        Direction::from_vec(Vec3::new(1.0, 1.0, 1.0)).unwrap(),
    ]
}

/// Optical-theorem residual for a lossless sphere:
/// `Im u_inf(d, d) = (k/4pi) integral |u_inf(x^, d)|^2 ds(x^)`.
///
/// Returns `None` for lossy configurations, where the identity does not
/// apply.
pub fn check_optical_theorem(
    config: &ScattererConfig,
    k: WaveNumber,
    grid: &DirectionGrid,
    policy: &TruncationPolicy,
) -> Result<Option<f64>> {
    if !config.kind.is_lossless() {
        return Ok(None);
    }
    let expansion = PlaneWaveExpansion::new(config, k, policy)?;
    let mut worst = 0.0_f64;
    for d in optical_probe_directions() {
        let lhs = expansion.farfield(d, d).im;
        let integral: f64 = grid
            .nodes
            .iter()
            .zip(&grid.weights)
            .map(|(&xhat, &w)| w * expansion.farfield(xhat, d).norm_sqr())
            .sum();
        let rhs = k.value() / (4.0 * std::f64::consts::PI) * integral;
        let residual = (lhs - rhs).abs() / lhs.abs().max(1e-300);
        worst = worst.max(residual);
    }
    Ok(Some(worst))
}

/// Scattering matrix sanity: `|1 + 2 R_n| = 1` for lossless spheres.
pub fn check_unitarity(
    config: &ScattererConfig,
    k: WaveNumber,
    policy: &TruncationPolicy,
) -> Result<Option<f64>> {
    if !config.kind.is_lossless() {
        return Ok(None);
    }
    let n_max = policy.plane_cutoff(k.value() * config.radius);
    let refl = crate::forward::reflection_coefficients(config, k, n_max)?;
    let worst = refl
        .iter()
        .map(|r| ((Complex64::new(1.0, 0.0) + 2.0 * r).norm() - 1.0).abs())
        .fold(0.0, f64::max);
    Ok(Some(worst))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::forward::{farfield_plane_wave, ScattererKind};
    use crate::measurement::direction_grid;

    fn policy() -> TruncationPolicy {
        TruncationPolicy::default()
    }

    fn geometry() -> SourceGeometry {
        SourceGeometry::new(
            Vec3::new(14.0, 0.0, 0.0),
            Vec3::new(8.0, 0.0, 0.0),
            3.0,
            Direction::from_vec(Vec3::new(-1.0, 0.0, 0.0)).unwrap(),
            std::f64::consts::FRAC_PI_2,
            8,
        )
        .unwrap()
    }

    fn sources_around(center: Vec3, radius: f64, count: usize) -> Vec<Vec3> {
        crate::measurement::sample_gamma(
            center,
            radius,
            Direction::from_polar(0.0, 0.0),
            std::f64::consts::PI,
            count,
        )
    }

    #[test]
    fn mixed_reciprocity_across_kinds() {
        let grid = direction_grid(4, 8);
        let cases = [
            (ScattererKind::Dirichlet, 2.0),
            (ScattererKind::Impedance(Complex64::new(1.0, 1.0)), 1.5),
            (ScattererKind::Medium(Complex64::new(1.69, 0.0)), 2.0),
        ];
        for (kind, ka) in cases {
            let config = ScattererConfig::new(Vec3::new(0.2, 0.1, -0.1), 1.0, kind).unwrap();
            let k = WaveNumber::new(ka).unwrap();
            let sources = sources_around(config.center, 3.0, 6);
            let residual = check_mixed_reciprocity(&config, k, &grid, &sources, &policy()).unwrap();
            assert!(residual <= 1e-8, "{kind:?}: residual {residual:.3e}");
        }
    }

    #[test]
    fn reciprocity_origin_and_shifted() {
        let grid = direction_grid(4, 8);
        let k = WaveNumber::new(2.0).unwrap();
        let origin = ScattererConfig::new(Vec3::ZERO, 1.0, ScattererKind::Dirichlet).unwrap();
        assert!(check_reciprocity(&origin, k, &grid, &policy()).unwrap() < 1e-14);
        let shifted =
            ScattererConfig::new(Vec3::new(0.4, -0.2, 0.3), 1.0, ScattererKind::Dirichlet).unwrap();
        assert!(check_reciprocity(&shifted, k, &grid, &policy()).unwrap() <= 1e-12);
        let medium = ScattererConfig::new(
            Vec3::new(0.4, -0.2, 0.3),
            1.0,
            ScattererKind::Medium(Complex64::new(1.69, 0.0)),
        )
        .unwrap();
        assert!(check_reciprocity(&medium, k, &grid, &policy()).unwrap() <= 1e-12);
    }

    #[test]
    fn plane_translation_gap_vanishes() {
        let grid = direction_grid(4, 8);
        let k = WaveNumber::new(2.0).unwrap();
        let config = ScattererConfig::new(Vec3::ZERO, 1.0, ScattererKind::Dirichlet).unwrap();
        let incident = [
            Direction::from_polar(0.3, 0.0),
            Direction::from_polar(1.4, 2.0),
        ];
        let gap = check_translation_invariance(
            &config,
            Vec3::new(0.25, 0.0, 0.0),
            k,
            &grid,
            TranslationProbe::PlaneWaves(&incident),
            &policy(),
        )
        .unwrap();
        assert!(gap <= 1e-12, "plane gap {gap:.3e}");
    }

    #[test]
    fn superposition_translation_gap_is_positive() {
        let grid = direction_grid(4, 8);
        let k = WaveNumber::new(1.0).unwrap();
        let config =
            ScattererConfig::new(Vec3::new(0.3, -0.2, 0.1), 2.0, ScattererKind::Dirichlet).unwrap();
        let geometry = geometry();
        let gap = check_translation_invariance(
            &config,
            Vec3::new(0.5, 0.0, 0.0),
            k,
            &grid,
            TranslationProbe::Superposition(&geometry),
            &policy(),
        )
        .unwrap();
        assert!(
            gap >= 0.01 / (4.0 * std::f64::consts::PI),
            "superposition gap {gap:.3e}"
        );
    }

    #[test]
    fn zero_shift_gives_zero_gaps() {
        let grid = direction_grid(4, 8);
        let k = WaveNumber::new(1.0).unwrap();
        let config =
            ScattererConfig::new(Vec3::new(0.3, -0.2, 0.1), 2.0, ScattererKind::Dirichlet).unwrap();
        let incident = [Direction::from_polar(0.3, 0.0)];
        let plane = check_translation_invariance(
            &config,
            Vec3::ZERO,
            k,
            &grid,
            TranslationProbe::PlaneWaves(&incident),
            &policy(),
        )
        .unwrap();
        assert_eq!(plane, 0.0);
        let geometry = geometry();
        let sup = check_translation_invariance(
            &config,
            Vec3::ZERO,
            k,
            &grid,
            TranslationProbe::Superposition(&geometry),
            &policy(),
        )
        .unwrap();
        assert_eq!(sup, 0.0);
    }

    #[test]
    fn uniqueness_gate_is_symmetric_and_null_on_identical_configs() {
        let grid = direction_grid(4, 8);
        let k = WaveNumber::new(1.0).unwrap();
        let geometry = geometry();
        let config =
            ScattererConfig::new(Vec3::new(0.3, -0.2, 0.1), 2.0, ScattererKind::Dirichlet).unwrap();
        let report =
            uniqueness_gate(&config, &config, &geometry, k, &grid, 1e-12, &policy()).unwrap();
        assert!(report.max_gap() <= 1e-14);
        assert!(!report.distinguishable);

        let neumann =
            ScattererConfig::new(config.center, config.radius, ScattererKind::Neumann).unwrap();
        let ab = uniqueness_gate(&config, &neumann, &geometry, k, &grid, 1e-12, &policy()).unwrap();
        let ba = uniqueness_gate(&neumann, &config, &geometry, k, &grid, 1e-12, &policy()).unwrap();
        assert_eq!(ab.gap_ref, ba.gap_ref);
        assert_eq!(ab.gap_src, ba.gap_src);
        assert_eq!(ab.gap_sup, ba.gap_sup);
        assert!(ab.distinguishable);
    }

    #[test]
    fn uniqueness_gate_separates_the_translated_pair() {
        // the pair a single plane wave cannot tell apart: the superposition
        // table still separates it
        let grid = direction_grid(8, 16);
        let k = WaveNumber::new(1.0).unwrap();
        let geometry = SourceGeometry::new(
            Vec3::new(14.0, 0.0, 0.0),
            Vec3::new(8.0, 0.0, 0.0),
            3.0,
            Direction::from_vec(Vec3::new(-1.0, 0.0, 0.0)).unwrap(),
            std::f64::consts::FRAC_PI_2,
            16,
        )
        .unwrap();
        let config =
            ScattererConfig::new(Vec3::new(0.3, -0.2, 0.1), 2.0, ScattererKind::Dirichlet).unwrap();
        let translated = config.translated(Vec3::new(0.5, 0.0, 0.0));
        let report =
            uniqueness_gate(&config, &translated, &geometry, k, &grid, 1e-12, &policy()).unwrap();
        assert!(
            report.gap_sup >= SUPERPOSITION_GAP_FLOOR,
            "superposition gap {:.3e}",
            report.gap_sup
        );
        assert!(report.distinguishable);
    }

    #[test]
    fn optical_theorem_lossless_and_lossy() {
        let grid = direction_grid(8, 16);
        let policy = policy();
        let dirichlet = ScattererConfig::new(Vec3::ZERO, 1.0, ScattererKind::Dirichlet).unwrap();
        let res = check_optical_theorem(&dirichlet, WaveNumber::new(2.0).unwrap(), &grid, &policy)
            .unwrap()
            .unwrap();
        assert!(res <= 1e-6, "dirichlet optical residual {res:.3e}");

        let neumann = ScattererConfig::new(Vec3::ZERO, 1.0, ScattererKind::Neumann).unwrap();
        let res = check_optical_theorem(&neumann, WaveNumber::new(1.0).unwrap(), &grid, &policy)
            .unwrap()
            .unwrap();
        assert!(res <= 1e-6, "neumann optical residual {res:.3e}");

        let lossy = ScattererConfig::new(
            Vec3::ZERO,
            1.0,
            ScattererKind::Impedance(Complex64::new(0.0, 1.0)),
        )
        .unwrap();
        let res =
            check_optical_theorem(&lossy, WaveNumber::new(1.0).unwrap(), &grid, &policy).unwrap();
        assert_eq!(res, None);
    }

    #[test]
    fn unitarity_check_reports_lossless_only() {
        let policy = policy();
        let k = WaveNumber::new(2.0).unwrap();
        let dirichlet = ScattererConfig::new(Vec3::ZERO, 1.0, ScattererKind::Dirichlet).unwrap();
        let worst = check_unitarity(&dirichlet, k, &policy).unwrap().unwrap();
        assert!(worst < 1e-12);
        let lossy = ScattererConfig::new(
            Vec3::ZERO,
            1.0,
            ScattererKind::Medium(Complex64::new(1.69, 0.4)),
        )
        .unwrap();
        assert_eq!(check_unitarity(&lossy, k, &policy).unwrap(), None);
    }

    #[test]
    fn farfield_plane_wave_free_function_matches_expansion() {
        let config = ScattererConfig::new(Vec3::ZERO, 1.0, ScattererKind::Dirichlet).unwrap();
        let k = WaveNumber::new(2.0).unwrap();
        let xhat = Direction::from_polar(1.0, 0.5);
        let d = Direction::from_polar(0.2, 3.0);
        let via_fn = farfield_plane_wave(&config, k, xhat, d, &policy()).unwrap();
        let via_expansion = PlaneWaveExpansion::new(&config, k, &policy())
            .unwrap()
            .farfield(xhat, d);
        assert_eq!(via_fn, via_expansion);
    }
}
