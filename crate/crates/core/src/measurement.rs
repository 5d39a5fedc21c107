//! Source/observation geometry and synthesis of the phaseless datasets.
//!
//! The measurement setup is: a reference point source at `z0`, a family of
//! point sources on a spherical cap `Gamma` of an admissible ball `Omega`
//! (admissible: `k^2` is not a Dirichlet eigenvalue of the ball, guaranteed
//! by `kR < pi`), and an observation grid on the unit sphere. Three real
//! datasets are recorded per run:
//!
//! ```text
//! d_ref(x^)    = |v_inf(x^, z0)|
//! d_src(x^, z) = |v_inf(x^, z)|                 z on Gamma
//! d_sup(x^, z) = |v_inf(x^, z0) + v_inf(x^, z)| z on Gamma
//! ```
//!
//! The superposition entry carries the interference between the reference
//! and the moving source, which is what makes the moduli sensitive to
//! translations of the scatterer.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{
    Direction, PointSourceExpansion, ScattererConfig, TruncationPolicy, Vec3, WaveNumber,
};
use crate::special;

/// Verdict of the admissible-ball test for `Omega`.
///
/// A ball of radius `R` is admissible at wavenumber `k` when no spherical
/// Bessel function vanishes at `kR`, i.e. `k^2` is not a Dirichlet
/// eigenvalue of the ball. Only orders `n < kR` can host a zero at `kR`
/// (the first zero of `j_n` lies beyond `n`), so the scan stops there and
/// anything with `kR < pi` passes outright.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct AdmissibilityVerdict {
    pub admissible: bool,
    /// Sufficient condition `kR < pi` held on its own.
    pub radius_below_pi: bool,
    /// Offending order when inadmissible.
    pub witness: Option<usize>,
    /// Smallest `|j_n(kR)|` over the scanned orders.
    pub min_margin: f64,
    /// Order achieving `min_margin`.
    pub margin_order: usize,
    /// Margin below the warning level (1e-6) while still admissible.
    pub near_resonance: bool,
    pub kr: f64,
}

const ADMISSIBLE_MARGIN: f64 = 1e-8;
const NEAR_RESONANCE_MARGIN: f64 = 1e-6;

/// Tests whether a ball of radius `omega_radius` is admissible at `k`.
pub fn check_admissible_ball(omega_radius: f64, k: WaveNumber) -> AdmissibilityVerdict {
    assert!(omega_radius > 0.0, "omega radius must be positive");
    let kr = k.value() * omega_radius;
    let policy = TruncationPolicy::default();
    let n_scan = policy.plane_cutoff(kr);
    let j = special::spherical_j_array(n_scan, kr);
    let mut min_margin = f64::INFINITY;
    let mut margin_order = 0;
    let mut witness = None;
    for (n, jn) in j.iter().enumerate() {
        if n as f64 >= kr {
            // j_n has no zeros at or below kr for n >= kr
            break;
        }
        if jn.abs() < min_margin {
            min_margin = jn.abs();
            margin_order = n;
        }
        if jn.abs() <= ADMISSIBLE_MARGIN && witness.is_none() {
            witness = Some(n);
        }
    }
    if !min_margin.is_finite() {
        // kr < 1: no scannable order, the sufficient condition covers it
        min_margin = j[0].abs();
    }
    AdmissibilityVerdict {
        admissible: witness.is_none(),
        radius_below_pi: kr < std::f64::consts::PI,
        witness,
        min_margin,
        margin_order,
        near_resonance: witness.is_none() && min_margin <= NEAR_RESONANCE_MARGIN,
        kr,
    }
}

/// Deterministic Fibonacci-spiral sample of a spherical cap.
///
/// Points lie on the sphere `|p - center| = radius`, within `half_angle` of
/// `axis`. The first point sits on the cap pole; `half_angle = pi` covers
/// the whole sphere.
pub fn sample_gamma(
    center: Vec3,
    radius: f64,
    axis: Direction,
    half_angle: f64,
    count: usize,
) -> Vec<Vec3> {
    assert!(count >= 1, "need at least one sample point");
    assert!(
        half_angle > 0.0 && half_angle <= std::f64::consts::PI,
        "cap half-angle must lie in (0, pi]"
    );
    assert!(radius > 0.0);
    // orthonormal frame (e1, e2, axis), deterministic in the axis
    let a = axis.vec();
    let seed = if a.x.abs() <= a.y.abs().min(a.z.abs()) {
        Vec3::new(1.0, 0.0, 0.0)
    } else if a.y.abs() <= a.z.abs() {
        Vec3::new(0.0, 1.0, 0.0)
    } else {
        Vec3::new(0.0, 0.0, 1.0)
    };
    let e1v = a.cross(seed);
    let e1 = e1v * (1.0 / e1v.norm());
    let e2 = a.cross(e1);

    let golden = std::f64::consts::PI * (3.0 - 5.0_f64.sqrt());
    let depth = 1.0 - half_angle.cos();
    (0..count)
        .map(|i| {
            let frac = if count == 1 {
                0.0
            } else {
                i as f64 / (count - 1) as f64
            };
            let cos_theta = 1.0 - depth * frac;
            let sin_theta = (1.0 - cos_theta * cos_theta).max(0.0).sqrt();
            let phi = golden * i as f64;
            let u = e1 * (sin_theta * phi.cos()) + e2 * (sin_theta * phi.sin()) + a * cos_theta;
            center + u * radius
        })
        .collect()
}

/// Reference source, admissible ball and sampled cap.
#[derive(Clone, Debug)]
pub struct SourceGeometry {
    pub z0: Vec3,
    pub omega_center: Vec3,
    pub omega_radius: f64,
    pub cap_axis: Direction,
    pub cap_half_angle: f64,
    pub gamma_points: Vec<Vec3>,
}

impl SourceGeometry {
    /// Builds the geometry and samples `Gamma` with `gamma_count` points.
    pub fn new(
        z0: Vec3,
        omega_center: Vec3,
        omega_radius: f64,
        cap_axis: Direction,
        cap_half_angle: f64,
        gamma_count: usize,
    ) -> Result<Self> {
        if !(omega_radius.is_finite() && omega_radius > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "omega radius must be positive, got {omega_radius}"
            )));
        }
        if !(cap_half_angle > 0.0 && cap_half_angle <= std::f64::consts::PI) {
            return Err(Error::InvalidConfig(format!(
                "cap half-angle must lie in (0, pi], got {cap_half_angle}"
            )));
        }
        if gamma_count == 0 {
            return Err(Error::InvalidConfig(
                "gamma_count must be at least 1".into(),
            ));
        }
        let gamma_points = sample_gamma(
            omega_center,
            omega_radius,
            cap_axis,
            cap_half_angle,
            gamma_count,
        );
        let geometry = SourceGeometry {
            z0,
            omega_center,
            omega_radius,
            cap_axis,
            cap_half_angle,
            gamma_points,
        };
        geometry.validate()?;
        Ok(geometry)
    }

    /// Default reference-source placement: on the far side of `Omega` from
    /// the scatterer, two ball radii out from the ball center.
    pub fn default_z0(omega_center: Vec3, omega_radius: f64, scatterer_center: Vec3) -> Vec3 {
        let away = omega_center - scatterer_center;
        let n = away.norm();
        let dir = if n < 1e-12 {
            Vec3::new(0.0, 0.0, 1.0)
        } else {
            away * (1.0 / n)
        };
        omega_center + dir * (2.0 * omega_radius)
    }

    pub fn validate(&self) -> Result<()> {
        for (i, p) in self.gamma_points.iter().enumerate() {
            let off = ((*p - self.omega_center).norm() - self.omega_radius).abs();
            if off > 1e-10 * self.omega_radius.max(1.0) {
                return Err(Error::InvalidConfig(format!(
                    "gamma point {i} is {off:.3e} off the omega sphere"
                )));
            }
            let cos_angle = (*p - self.omega_center).dot(self.cap_axis.vec()) / self.omega_radius;
            if cos_angle < self.cap_half_angle.cos() - 1e-10 {
                return Err(Error::InvalidConfig(format!(
                    "gamma point {i} lies outside the cap"
                )));
            }
            if (*p - self.z0).norm() < 1e-10 {
                return Err(Error::InvalidConfig(
                    "reference source z0 must not lie on Gamma".into(),
                ));
            }
        }
        Ok(())
    }

    /// Checks that the scatterer keeps clear of every source and of `Omega`.
    pub fn check_exterior_to(&self, config: &ScattererConfig) -> Result<()> {
        let clearance = |p: Vec3| (p - config.center).norm() - config.radius;
        if clearance(self.z0) <= 0.0 {
            return Err(Error::GeometryCollision(
                "reference source z0 is inside or on the scatterer".into(),
            ));
        }
        for (i, p) in self.gamma_points.iter().enumerate() {
            if clearance(*p) <= 0.0 {
                return Err(Error::GeometryCollision(format!(
                    "gamma point {i} is inside or on the scatterer"
                )));
            }
        }
        let gap = (self.omega_center - config.center).norm() - self.omega_radius - config.radius;
        if gap <= 0.0 {
            return Err(Error::GeometryCollision(
                "omega ball intersects the scatterer".into(),
            ));
        }
        Ok(())
    }
}

/// Quadrature grid on the unit sphere: Gauss-Legendre in cos(theta) times a
/// uniform azimuthal rule, exact for spherical polynomials of degree up to
/// `min(2 n_polar - 1, n_azimuthal - 1)`.
#[derive(Clone, Debug)]
pub struct DirectionGrid {
    pub nodes: Vec<Direction>,
    /// Steradian weights, summing to 4 pi.
    pub weights: Vec<f64>,
    pub thetas: Vec<f64>,
    pub phis: Vec<f64>,
    pub n_polar: usize,
    pub n_azimuthal: usize,
}

impl DirectionGrid {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

/// Gauss-Legendre nodes and weights on (-1, 1), by Newton iteration on `P_n`.
fn gauss_legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = special::legendre_p_and_derivative(n, x);
            dp = d;
            let step = p / dp;
            x -= step;
            if step.abs() < 1e-15 {
                let (_, d) = special::legendre_p_and_derivative(n, x);
                dp = d;
                break;
            }
        }
        nodes.push(x);
        weights.push(2.0 / ((1.0 - x * x) * dp * dp));
    }
    (nodes, weights)
}

/// Builds the product observation grid.
pub fn direction_grid(n_polar: usize, n_azimuthal: usize) -> DirectionGrid {
    assert!(n_polar >= 2, "need at least 2 polar nodes");
    assert!(n_azimuthal >= 4, "need at least 4 azimuthal nodes");
    let (mu, w) = gauss_legendre_rule(n_polar);
    let dphi = 2.0 * std::f64::consts::PI / n_azimuthal as f64;
    let mut nodes = Vec::with_capacity(n_polar * n_azimuthal);
    let mut weights = Vec::with_capacity(n_polar * n_azimuthal);
    let mut thetas = Vec::with_capacity(n_polar * n_azimuthal);
    let mut phis = Vec::with_capacity(n_polar * n_azimuthal);
    for i in 0..n_polar {
        let theta = mu[i].clamp(-1.0, 1.0).acos();
        for j in 0..n_azimuthal {
            let phi = dphi * j as f64;
            nodes.push(Direction::from_polar(theta, phi));
            weights.push(w[i] * dphi);
            thetas.push(theta);
            phis.push(phi);
        }
    }
    DirectionGrid {
        nodes,
        weights,
        thetas,
        phis,
        n_polar,
        n_azimuthal,
    }
}

/// Multiplicative uniform noise on moduli.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    /// Relative level `delta`: each modulus is scaled by `1 + delta u`,
    /// `u ~ U[-1, 1]`.
    pub level: f64,
    pub seed: u64,
}

impl NoiseModel {
    /// Noise factor for one entry. Each entry draws from its own stream so
    /// the result is independent of evaluation order.
    fn factor(&self, table: u64, row: usize, col: usize) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream((table << 40) ^ ((row as u64) << 20) ^ col as u64);
        let u: f64 = rng.random::<f64>() * 2.0 - 1.0;
        1.0 + self.level * u
    }
}

/// The three phaseless datasets over an observation grid and source set.
///
/// `d_src` and `d_sup` are row-major `(direction, source)` tables.
#[derive(Clone, Debug)]
pub struct PhaselessDataset {
    pub k: WaveNumber,
    pub geometry: SourceGeometry,
    pub grid: DirectionGrid,
    pub d_ref: Vec<f64>,
    pub d_src: Vec<f64>,
    pub d_sup: Vec<f64>,
}

impl PhaselessDataset {
    pub fn n_directions(&self) -> usize {
        self.grid.len()
    }

    pub fn n_sources(&self) -> usize {
        self.geometry.gamma_points.len()
    }

    pub fn src(&self, dir: usize, source: usize) -> f64 {
        self.d_src[dir * self.n_sources() + source]
    }

    pub fn sup(&self, dir: usize, source: usize) -> f64 {
        self.d_sup[dir * self.n_sources() + source]
    }

    /// Largest modulus across all three tables.
    pub fn max_amplitude(&self) -> f64 {
        self.d_ref
            .iter()
            .chain(&self.d_src)
            .chain(&self.d_sup)
            .cloned()
            .fold(0.0, f64::max)
    }
}

/// Phased far fields matching a dataset, used as ground truth by oracle
/// tests and emitted by the debug dump.
#[derive(Clone, Debug)]
pub struct PhasedFarFields {
    pub v_ref: Vec<Complex64>,
    /// Row-major `(direction, source)`.
    pub v_src: Vec<Complex64>,
    pub n_sources: usize,
}

impl PhasedFarFields {
    pub fn src(&self, dir: usize, source: usize) -> Complex64 {
        self.v_src[dir * self.n_sources + source]
    }
}

/// Computes the complex far fields `v_inf(x^, z0)` and `v_inf(x^, z)` for
/// every grid direction and gamma source.
pub fn synthesize_phased(
    config: &ScattererConfig,
    geometry: &SourceGeometry,
    k: WaveNumber,
    grid: &DirectionGrid,
    policy: &TruncationPolicy,
) -> Result<PhasedFarFields> {
    config.validate()?;
    geometry.validate()?;
    geometry.check_exterior_to(config)?;
    let verdict = check_admissible_ball(geometry.omega_radius, k);
    if !verdict.admissible {
        let witness = verdict.witness.unwrap_or(0);
        return Err(Error::InadmissibleBall {
            witness,
            value: verdict.min_margin,
            kr: verdict.kr,
        });
    }

    let ref_expansion = PointSourceExpansion::new(config, k, geometry.z0, policy)?;
    let v_ref: Vec<Complex64> = grid
        .nodes
        .iter()
        .map(|&xhat| ref_expansion.total_farfield(xhat))
        .collect();

    let n_src = geometry.gamma_points.len();
    let mut v_src = vec![Complex64::new(0.0, 0.0); grid.len() * n_src];
    for (j, &z) in geometry.gamma_points.iter().enumerate() {
        let expansion = PointSourceExpansion::new(config, k, z, policy)?;
        for (i, &xhat) in grid.nodes.iter().enumerate() {
            v_src[i * n_src + j] = expansion.total_farfield(xhat);
        }
    }
    Ok(PhasedFarFields {
        v_ref,
        v_src,
        n_sources: n_src,
    })
}

/// Synthesises the three phaseless datasets, optionally with multiplicative
/// noise on the moduli (never on phases; phases are not data).
pub fn synthesize_phaseless(
    config: &ScattererConfig,
    geometry: &SourceGeometry,
    k: WaveNumber,
    grid: &DirectionGrid,
    noise: Option<NoiseModel>,
    policy: &TruncationPolicy,
) -> Result<PhaselessDataset> {
    let phased = synthesize_phased(config, geometry, k, grid, policy)?;
    let n_src = phased.n_sources;
    let factor = |table: u64, i: usize, j: usize| match noise {
        Some(model) if model.level != 0.0 => model.factor(table, i, j),
        _ => 1.0,
    };
    let d_ref: Vec<f64> = phased
        .v_ref
        .iter()
        .enumerate()
        .map(|(i, v)| v.norm() * factor(0, i, 0))
        .collect();
    let mut d_src = vec![0.0; grid.len() * n_src];
    let mut d_sup = vec![0.0; grid.len() * n_src];
    for i in 0..grid.len() {
        for j in 0..n_src {
            let v = phased.src(i, j);
            d_src[i * n_src + j] = v.norm() * factor(1, i, j);
            d_sup[i * n_src + j] = (phased.v_ref[i] + v).norm() * factor(2, i, j);
        }
    }
    Ok(PhaselessDataset {
        k,
        geometry: geometry.clone(),
        grid: grid.clone(),
        d_ref,
        d_src,
        d_sup,
    })
}
