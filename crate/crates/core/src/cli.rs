//! JSON run configuration, CSV dataset serialisation and the command bodies
//! behind the `scatterlab` binary.
//!
//! Datasets live in a directory of CSV tables (`d_ref.csv`, `d_src.csv`,
//! `d_sup.csv`) with columns `obs_theta, obs_phi, source_index, value`, next
//! to a `manifest.json` recording wavenumber, geometry, grid, truncation and
//! the noise seed (format version "1"). Reals are printed with 17
//! significant digits so serialise/parse round-trips are exact. The debug
//! dump adds `phased_ref.csv`/`phased_src.csv` with `re`/`im` columns for
//! oracle tests against ground-truth phases.

use std::fs;
use std::io::Write;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{
    Direction, ScattererConfig, ScattererKind, TruncationPolicy, Vec3, WaveNumber,
};
use crate::identities::{
    self, check_mixed_reciprocity, check_optical_theorem, check_reciprocity,
    check_translation_invariance, CheckReport, TranslationProbe,
};
use crate::inversion::{
    fit_parameters, translation_valley_scan, KindTag, MisfitOptions, ParameterVector, ScanMode,
};
use crate::measurement::{
    check_admissible_ball, direction_grid, sample_gamma, synthesize_phased, synthesize_phaseless,
    DirectionGrid, NoiseModel, PhasedFarFields, PhaselessDataset, SourceGeometry,
};
use crate::phase::{dichotomy_residuals, recover_phase_diff_field};

pub const FORMAT_VERSION: &str = "1";

// ---------------------------------------------------------------------------
// configuration schema
// ---------------------------------------------------------------------------

/// Scatterer kind in config files: `"dirichlet"`, `"neumann"`,
/// `"transparent"`, `{"impedance": [re, im]}` or `{"medium": [re, im]}`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum KindSpec {
    Dirichlet,
    Neumann,
    Impedance([f64; 2]),
    Medium([f64; 2]),
    Transparent,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct ScattererSpec {
    pub kind: KindSpec,
    pub center: [f64; 3],
    pub radius: f64,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GeometrySpec {
    /// Reference source; defaults to the far side of the omega ball from
    /// the scatterer, two ball radii out.
    #[serde(default)]
    pub z0: Option<[f64; 3]>,
    pub omega_center: [f64; 3],
    pub omega_radius: f64,
    #[serde(default = "default_cap_axis")]
    pub cap_axis: [f64; 3],
    #[serde(default = "default_cap_half_angle")]
    pub cap_half_angle: f64,
    #[serde(default = "default_gamma_count")]
    pub gamma_count: usize,
}

fn default_cap_axis() -> [f64; 3] {
    [0.0, 0.0, 1.0]
}

fn default_cap_half_angle() -> f64 {
    std::f64::consts::FRAC_PI_2
}

fn default_gamma_count() -> usize {
    64
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct GridSpec {
    pub n_polar: usize,
    pub n_azimuthal: usize,
}

#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CheckSpec {
    /// Translation probe shift; default `0.5/k` along +x.
    #[serde(default)]
    pub shift: Option<[f64; 3]>,
    #[serde(default = "default_plane_directions")]
    pub plane_directions: usize,
    /// Probe sources for the mixed-reciprocity check.
    #[serde(default = "default_source_count")]
    pub source_count: usize,
    /// Probe sources sit at this multiple of the sphere radius.
    #[serde(default = "default_source_distance_factor")]
    pub source_distance_factor: f64,
    #[serde(default = "default_noise_floor")]
    pub noise_floor: f64,
}

fn default_plane_directions() -> usize {
    5
}

fn default_source_count() -> usize {
    16
}

fn default_source_distance_factor() -> f64 {
    3.0
}

fn default_noise_floor() -> f64 {
    1e-12
}

impl Default for CheckSpec {
    fn default() -> Self {
        CheckSpec {
            shift: None,
            plane_directions: default_plane_directions(),
            source_count: default_source_count(),
            source_distance_factor: default_source_distance_factor(),
            noise_floor: default_noise_floor(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvertSpec {
    pub start: ScattererSpec,
    #[serde(default = "default_budget")]
    pub budget: usize,
    #[serde(default = "default_weights")]
    pub weights: [f64; 3],
    #[serde(default = "default_active")]
    pub active: [bool; 3],
}

fn default_budget() -> usize {
    2000
}

fn default_weights() -> [f64; 3] {
    [1.0 / 3.0; 3]
}

fn default_active() -> [bool; 3] {
    [true; 3]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DemoSpec {
    #[serde(default = "default_shift_direction")]
    pub shift_direction: [f64; 3],
    /// Shift magnitudes in units of `1/k`.
    #[serde(default = "default_shift_magnitudes")]
    pub shift_magnitudes: Vec<f64>,
    #[serde(default = "default_plane_directions")]
    pub plane_directions: usize,
}

fn default_shift_direction() -> [f64; 3] {
    [1.0, 0.0, 0.0]
}

fn default_shift_magnitudes() -> Vec<f64> {
    vec![0.0, 0.1, 0.2, 0.3, 0.4, 0.5]
}

impl Default for DemoSpec {
    fn default() -> Self {
        DemoSpec {
            shift_direction: default_shift_direction(),
            shift_magnitudes: default_shift_magnitudes(),
            plane_directions: default_plane_directions(),
        }
    }
}

/// Top-level run configuration.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunConfig {
    pub wavenumber: f64,
    /// When true, every length in the file is in units of `1/k` (and an
    /// impedance in units of `k`), making configs frequency-portable.
    #[serde(default)]
    pub scaled_units: bool,
    pub scatterer: ScattererSpec,
    pub geometry: GeometrySpec,
    pub grid: GridSpec,
    #[serde(default)]
    pub truncation: Option<TruncationPolicy>,
    #[serde(default)]
    pub noise: Option<NoiseSpec>,
    #[serde(default)]
    pub check: Option<CheckSpec>,
    #[serde(default)]
    pub invert: Option<InvertSpec>,
    #[serde(default)]
    pub demo: Option<DemoSpec>,
}

/// Domain objects resolved from a [`RunConfig`], all in physical units.
pub struct ResolvedRun {
    pub k: WaveNumber,
    pub scatterer: ScattererConfig,
    pub geometry: SourceGeometry,
    pub grid: DirectionGrid,
    pub policy: TruncationPolicy,
    pub noise: Option<NoiseModel>,
    pub raw: RunConfig,
}

fn kind_from_spec(spec: KindSpec, lambda_scale: f64) -> ScattererKind {
    match spec {
        KindSpec::Dirichlet => ScattererKind::Dirichlet,
        KindSpec::Neumann => ScattererKind::Neumann,
        KindSpec::Impedance([re, im]) => {
            ScattererKind::Impedance(Complex64::new(re * lambda_scale, im * lambda_scale))
        }
        KindSpec::Medium([re, im]) => ScattererKind::Medium(Complex64::new(re, im)),
        KindSpec::Transparent => ScattererKind::Transparent,
    }
}

fn scatterer_from_spec(
    spec: &ScattererSpec,
    length_scale: f64,
    lambda_scale: f64,
) -> Result<ScattererConfig> {
    ScattererConfig::new(
        Vec3::from(spec.center) * length_scale,
        spec.radius * length_scale,
        kind_from_spec(spec.kind, lambda_scale),
    )
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    /// Length multiplier taking config-file units to physical units.
    pub fn length_scale(&self) -> f64 {
        if self.scaled_units {
            1.0 / self.wavenumber
        } else {
            1.0
        }
    }

    /// Validates everything and builds the domain objects.
    pub fn resolve(&self) -> Result<ResolvedRun> {
        let k = WaveNumber::new(self.wavenumber)?;
        let ls = self.length_scale();
        let lambda_scale = if self.scaled_units {
            self.wavenumber
        } else {
            1.0
        };
        let scatterer = scatterer_from_spec(&self.scatterer, ls, lambda_scale)?;

        let omega_center = Vec3::from(self.geometry.omega_center) * ls;
        let omega_radius = self.geometry.omega_radius * ls;
        let verdict = check_admissible_ball(omega_radius, k);
        if !verdict.admissible {
            return Err(Error::InadmissibleBall {
                witness: verdict.witness.unwrap_or(0),
                value: verdict.min_margin,
                kr: verdict.kr,
            });
        }
        let z0 = match self.geometry.z0 {
            Some(z) => Vec3::from(z) * ls,
            None => SourceGeometry::default_z0(omega_center, omega_radius, scatterer.center),
        };
        let geometry = SourceGeometry::new(
            z0,
            omega_center,
            omega_radius,
            Direction::from_vec(Vec3::from(self.geometry.cap_axis))?,
            self.geometry.cap_half_angle,
            self.geometry.gamma_count,
        )?;
        geometry.check_exterior_to(&scatterer)?;

        if self.grid.n_polar < 2 || self.grid.n_azimuthal < 4 {
            return Err(Error::InvalidConfig(
                "grid needs n_polar >= 2 and n_azimuthal >= 4".into(),
            ));
        }
        let grid = direction_grid(self.grid.n_polar, self.grid.n_azimuthal);
        let policy = self.truncation.unwrap_or_default();
        let noise = self.noise.map(|n| NoiseModel {
            level: n.level,
            seed: n.seed,
        });
        Ok(ResolvedRun {
            k,
            scatterer,
            geometry,
            grid,
            policy,
            noise,
            raw: self.clone(),
        })
    }
}

// ---------------------------------------------------------------------------
// dataset serialisation
// ---------------------------------------------------------------------------

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GeometryManifest {
    pub z0: [f64; 3],
    pub omega_center: [f64; 3],
    pub omega_radius: f64,
    pub cap_axis: [f64; 3],
    pub cap_half_angle: f64,
    pub gamma_count: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub format_version: String,
    pub k: f64,
    pub geometry: GeometryManifest,
    pub grid: GridSpec,
    pub truncation: TruncationPolicy,
    pub noise: Option<NoiseSpec>,
}

impl Manifest {
    fn from_run(run: &ResolvedRun) -> Manifest {
        Manifest {
            format_version: FORMAT_VERSION.to_string(),
            k: run.k.value(),
            geometry: GeometryManifest {
                z0: run.geometry.z0.as_array(),
                omega_center: run.geometry.omega_center.as_array(),
                omega_radius: run.geometry.omega_radius,
                cap_axis: run.geometry.cap_axis.vec().as_array(),
                cap_half_angle: run.geometry.cap_half_angle,
                gamma_count: run.geometry.gamma_points.len(),
            },
            grid: run.raw.grid,
            truncation: run.policy,
            noise: run.raw.noise,
        }
    }

    /// Rebuilds the measurement objects; the gamma sampling is deterministic
    /// so the reconstruction is exact.
    pub fn reconstruct(
        &self,
    ) -> Result<(WaveNumber, SourceGeometry, DirectionGrid, TruncationPolicy)> {
        let k = WaveNumber::new(self.k)?;
        let geometry = SourceGeometry::new(
            Vec3::from(self.geometry.z0),
            Vec3::from(self.geometry.omega_center),
            self.geometry.omega_radius,
            Direction::from_vec(Vec3::from(self.geometry.cap_axis))?,
            self.geometry.cap_half_angle,
            self.geometry.gamma_count,
        )?;
        let grid = direction_grid(self.grid.n_polar, self.grid.n_azimuthal);
        Ok((k, geometry, grid, self.truncation))
    }
}

/// 17 significant digits: enough for exact f64 round-trips.
fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_modulus_table(
    path: &Path,
    grid: &DirectionGrid,
    n_sources: usize,
    values: &[f64],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["obs_theta", "obs_phi", "source_index", "value"])
        .map_err(csv_err)?;
    for i in 0..grid.len() {
        for j in 0..n_sources {
            w.write_record([
                fmt_real(grid.thetas[i]),
                fmt_real(grid.phis[i]),
                j.to_string(),
                fmt_real(values[i * n_sources + j]),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_phased_table(
    path: &Path,
    grid: &DirectionGrid,
    n_sources: usize,
    values: &[Complex64],
) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err)?;
    w.write_record(["obs_theta", "obs_phi", "source_index", "re", "im"])
        .map_err(csv_err)?;
    for i in 0..grid.len() {
        for j in 0..n_sources {
            let v = values[i * n_sources + j];
            w.write_record([
                fmt_real(grid.thetas[i]),
                fmt_real(grid.phis[i]),
                j.to_string(),
                fmt_real(v.re),
                fmt_real(v.im),
            ])
            .map_err(csv_err)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn csv_err(e: csv::Error) -> Error {
    Error::Parse(format!("csv: {e}"))
}

fn read_value_column(path: &Path, columns: &[&str]) -> Result<Vec<Vec<f64>>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err)?;
    let headers = r.headers().map_err(csv_err)?.clone();
    let indices: Vec<usize> = columns
        .iter()
        .map(|c| {
            headers
                .iter()
                .position(|h| h == *c)
                .ok_or_else(|| Error::Parse(format!("{}: missing column {c}", path.display())))
        })
        .collect::<Result<_>>()?;
    let mut out = vec![Vec::new(); columns.len()];
    for record in r.records() {
        let record = record.map_err(csv_err)?;
        for (slot, &idx) in out.iter_mut().zip(&indices) {
            let cell = record
                .get(idx)
                .ok_or_else(|| Error::Parse(format!("{}: short row", path.display())))?;
            slot.push(
                cell.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?,
            );
        }
    }
    Ok(out)
}

/// Writes the three modulus tables and the manifest (plus phased truth when
/// `phased` is given) into `dir`.
pub fn write_dataset(
    dir: &Path,
    run: &ResolvedRun,
    data: &PhaselessDataset,
    phased: Option<&PhasedFarFields>,
) -> Result<()> {
    fs::create_dir_all(dir)?;
    let manifest = Manifest::from_run(run);
    let mut file = fs::File::create(dir.join("manifest.json"))?;
    serde_json::to_writer_pretty(&mut file, &manifest)
        .map_err(|e| Error::Parse(format!("manifest: {e}")))?;
    file.write_all(b"\n")?;

    let n_src = data.n_sources();
    write_modulus_table(&dir.join("d_ref.csv"), &data.grid, 1, &data.d_ref)?;
    write_modulus_table(&dir.join("d_src.csv"), &data.grid, n_src, &data.d_src)?;
    write_modulus_table(&dir.join("d_sup.csv"), &data.grid, n_src, &data.d_sup)?;
    if let Some(truth) = phased {
        write_phased_table(&dir.join("phased_ref.csv"), &data.grid, 1, &truth.v_ref)?;
        write_phased_table(&dir.join("phased_src.csv"), &data.grid, n_src, &truth.v_src)?;
    }
    Ok(())
}

/// Reads a dataset directory back into memory.
pub fn read_dataset(dir: &Path) -> Result<(PhaselessDataset, Manifest)> {
    let manifest_text = fs::read_to_string(dir.join("manifest.json"))?;
    let manifest: Manifest =
        serde_json::from_str(&manifest_text).map_err(|e| Error::Parse(format!("manifest: {e}")))?;
    if manifest.format_version != FORMAT_VERSION {
        return Err(Error::Parse(format!(
            "unsupported dataset format version {}",
            manifest.format_version
        )));
    }
    let (k, geometry, grid, _) = manifest.reconstruct()?;
    let d_ref = read_value_column(&dir.join("d_ref.csv"), &["value"])?.remove(0);
    let d_src = read_value_column(&dir.join("d_src.csv"), &["value"])?.remove(0);
    let d_sup = read_value_column(&dir.join("d_sup.csv"), &["value"])?.remove(0);
    let n_src = geometry.gamma_points.len();
    if d_ref.len() != grid.len()
        || d_src.len() != grid.len() * n_src
        || d_sup.len() != grid.len() * n_src
    {
        return Err(Error::Parse(
            "dataset tables do not match the manifest dimensions".into(),
        ));
    }
    Ok((
        PhaselessDataset {
            k,
            geometry,
            grid,
            d_ref,
            d_src,
            d_sup,
        },
        manifest,
    ))
}

/// Reads the phased truth tables written by the debug dump.
pub fn read_phased(dir: &Path, n_directions: usize, n_sources: usize) -> Result<PhasedFarFields> {
    let columns = read_value_column(&dir.join("phased_ref.csv"), &["re", "im"])?;
    let v_ref: Vec<Complex64> = columns[0]
        .iter()
        .zip(&columns[1])
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    let columns = read_value_column(&dir.join("phased_src.csv"), &["re", "im"])?;
    let v_src: Vec<Complex64> = columns[0]
        .iter()
        .zip(&columns[1])
        .map(|(&re, &im)| Complex64::new(re, im))
        .collect();
    if v_ref.len() != n_directions || v_src.len() != n_directions * n_sources {
        return Err(Error::Parse(
            "phased tables do not match the dataset dimensions".into(),
        ));
    }
    Ok(PhasedFarFields {
        v_ref,
        v_src,
        n_sources,
    })
}

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

/// `synth`: synthesise the three phaseless datasets and write them out.
pub fn cmd_synth(
    config_path: &Path,
    out_dir: &Path,
    seed: Option<u64>,
    noise_level: Option<f64>,
    debug_phased: bool,
) -> Result<()> {
    let mut config = RunConfig::load(config_path)?;
    if seed.is_some() || noise_level.is_some() {
        let base = config.noise.unwrap_or(NoiseSpec {
            level: 0.0,
            seed: 0,
        });
        config.noise = Some(NoiseSpec {
            level: noise_level.unwrap_or(base.level),
            seed: seed.unwrap_or(base.seed),
        });
    }
    let run = config.resolve()?;
    let data = synthesize_phaseless(
        &run.scatterer,
        &run.geometry,
        run.k,
        &run.grid,
        run.noise,
        &run.policy,
    )?;
    let phased = if debug_phased {
        Some(synthesize_phased(
            &run.scatterer,
            &run.geometry,
            run.k,
            &run.grid,
            &run.policy,
        )?)
    } else {
        None
    };
    write_dataset(out_dir, &run, &data, phased.as_ref())?;
    println!(
        "wrote {} directions x {} sources to {}",
        data.n_directions(),
        data.n_sources(),
        out_dir.display()
    );
    Ok(())
}

/// Which identity checks to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CheckSelection {
    All,
    Reciprocity,
    Mixed,
    Translation,
    Optical,
    Admissible,
}

impl std::str::FromStr for CheckSelection {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "all" => Ok(CheckSelection::All),
            "reciprocity" => Ok(CheckSelection::Reciprocity),
            "mixed" => Ok(CheckSelection::Mixed),
            "translation" => Ok(CheckSelection::Translation),
            "optical" => Ok(CheckSelection::Optical),
            "admissible" => Ok(CheckSelection::Admissible),
            other => Err(Error::InvalidConfig(format!(
                "unknown check '{other}' (expected all|reciprocity|mixed|translation|optical|admissible)"
            ))),
        }
    }
}

fn plane_probe_directions(count: usize) -> Vec<Direction> {
    sample_gamma(
        Vec3::ZERO,
        1.0,
        Direction::from_polar(0.0, 0.0),
        std::f64::consts::PI,
        count.max(1),
    )
    .into_iter()
    .map(|p| Direction::from_vec(p).expect("unit sample"))
    .collect()
}

/// `check`: run the selected identity checks, print one line per check and
/// optionally write the reports as JSON. Returns the reports; the process
/// exit code is 0 only when every check passed.
pub fn cmd_check(
    config_path: &Path,
    which: CheckSelection,
    out_path: Option<&Path>,
) -> Result<Vec<CheckReport>> {
    let config = RunConfig::load(config_path)?;
    let spec = config.check.clone().unwrap_or_default();
    let run = config.resolve()?;
    let k = run.k;
    let mut reports = Vec::new();
    let want = |c: CheckSelection| which == CheckSelection::All || which == c;

    if want(CheckSelection::Admissible) {
        let verdict = check_admissible_ball(run.geometry.omega_radius, k);
        let mut report = CheckReport {
            name: "admissible_ball".into(),
            residual: verdict.min_margin,
            threshold: 1e-8,
            pass: verdict.admissible,
            details: Some(format!(
                "kR = {:.6}, sufficient condition kR < pi: {}{}",
                verdict.kr,
                verdict.radius_below_pi,
                verdict
                    .witness
                    .map(|n| format!(", witness order {n}"))
                    .unwrap_or_default()
            )),
        };
        if verdict.near_resonance {
            report.details = Some(format!(
                "{} (near resonance at order {})",
                report.details.unwrap(),
                verdict.margin_order
            ));
        }
        reports.push(report);
    }
    if want(CheckSelection::Reciprocity) {
        let residual = check_reciprocity(&run.scatterer, k, &run.grid, &run.policy)?;
        reports.push(CheckReport::new(
            "reciprocity",
            residual,
            identities::RECIPROCITY_TOL,
        ));
    }
    if want(CheckSelection::Mixed) {
        let sources = sample_gamma(
            run.scatterer.center,
            spec.source_distance_factor * run.scatterer.radius,
            Direction::from_polar(0.0, 0.0),
            std::f64::consts::PI,
            spec.source_count,
        );
        let residual =
            check_mixed_reciprocity(&run.scatterer, k, &run.grid, &sources, &run.policy)?;
        reports.push(CheckReport::new(
            "mixed_reciprocity",
            residual,
            identities::MIXED_RECIPROCITY_TOL,
        ));
    }
    if want(CheckSelection::Translation) {
        let shift = spec
            .shift
            .map(Vec3::from)
            .map(|s| s * config.length_scale())
            .unwrap_or_else(|| Vec3::new(0.5 / k.value(), 0.0, 0.0));
        let incident = plane_probe_directions(spec.plane_directions);
        let plane_gap = check_translation_invariance(
            &run.scatterer,
            shift,
            k,
            &run.grid,
            TranslationProbe::PlaneWaves(&incident),
            &run.policy,
        )?;
        reports.push(CheckReport::new(
            "translation_plane_modulus_gap",
            plane_gap,
            identities::PLANE_TRANSLATION_TOL,
        ));
        let sup_gap = check_translation_invariance(
            &run.scatterer,
            shift,
            k,
            &run.grid,
            TranslationProbe::Superposition(&run.geometry),
            &run.policy,
        )?;
        reports.push(CheckReport {
            name: "translation_superposition_gap".into(),
            residual: sup_gap,
            threshold: identities::SUPERPOSITION_GAP_FLOOR,
            pass: sup_gap >= identities::SUPERPOSITION_GAP_FLOOR,
            details: Some("gap must exceed the frozen floor".into()),
        });
    }
    if want(CheckSelection::Optical) {
        match check_optical_theorem(&run.scatterer, k, &run.grid, &run.policy)? {
            Some(residual) => reports.push(CheckReport::new(
                "optical_theorem",
                residual,
                identities::OPTICAL_THEOREM_TOL,
            )),
            None => reports.push(CheckReport {
                name: "optical_theorem".into(),
                residual: 0.0,
                threshold: identities::OPTICAL_THEOREM_TOL,
                pass: true,
                details: Some("not applicable: lossy configuration".into()),
            }),
        }
    }

    for report in &reports {
        println!(
            "{}: {} (residual {:.3e}, threshold {:.3e}){}",
            report.name,
            if report.pass { "PASS" } else { "FAIL" },
            report.residual,
            report.threshold,
            report
                .details
                .as_ref()
                .map(|d| format!(" - {d}"))
                .unwrap_or_default()
        );
    }
    if let Some(path) = out_path {
        let mut file = fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, &reports)
            .map_err(|e| Error::Parse(format!("report: {e}")))?;
        file.write_all(b"\n")?;
    }
    Ok(reports)
}

/// Phase-retrieval report emitted by `retrieve`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RetrieveReport {
    pub n_directions: usize,
    pub n_sources: usize,
    pub valid_fraction: f64,
    pub amplitude_floor: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub res_same: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub res_conj: Option<f64>,
}

/// `retrieve`: recover the relative-phase cosines from a stored dataset and,
/// when the phased truth is available, report the dichotomy residuals.
pub fn cmd_retrieve(
    dataset_dir: &Path,
    truth_dir: Option<&Path>,
    out_path: Option<&Path>,
) -> Result<RetrieveReport> {
    let (dataset, _) = read_dataset(dataset_dir)?;
    let field = recover_phase_diff_field(&dataset)?;
    let mut report = RetrieveReport {
        n_directions: dataset.n_directions(),
        n_sources: dataset.n_sources(),
        valid_fraction: field.valid_fraction(),
        amplitude_floor: field.floor,
        res_same: None,
        res_conj: None,
    };
    if let Some(truth_dir) = truth_dir {
        let truth = read_phased(truth_dir, dataset.n_directions(), dataset.n_sources())?;
        let (res_same, res_conj) = dichotomy_residuals(&dataset, &truth)?;
        report.res_same = Some(res_same);
        report.res_conj = Some(res_conj);
        println!(
            "dichotomy residuals: same-branch {res_same:.3e}, conjugate-branch {res_conj:.3e}"
        );
    }
    println!(
        "valid entries: {:.1}% of {} (floor {:.3e})",
        report.valid_fraction * 100.0,
        report.n_directions * report.n_sources,
        report.amplitude_floor
    );
    if let Some(path) = out_path {
        let mut file = fs::File::create(path)?;
        serde_json::to_writer_pretty(&mut file, &report)
            .map_err(|e| Error::Parse(format!("report: {e}")))?;
        file.write_all(b"\n")?;
    }
    Ok(report)
}

/// Inversion result emitted by `invert`.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct InvertReport {
    pub kind: KindTag,
    pub center: [f64; 3],
    pub radius: f64,
    pub physics: [f64; 2],
    pub misfit: f64,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

fn start_vector(
    spec: &ScattererSpec,
    length_scale: f64,
    lambda_scale: f64,
) -> Result<ParameterVector> {
    let config = scatterer_from_spec(spec, length_scale, lambda_scale)?;
    ParameterVector::from_config(&config).ok_or_else(|| {
        Error::InvalidConfig("inversion start must be a parametric kind, not transparent".into())
    })
}

/// `invert`: fit sphere parameters to a stored dataset by simplex descent.
/// Writes `recovered.json` and the evaluation trace `trace.csv` into
/// `out_dir`.
pub fn cmd_invert(
    dataset_dir: &Path,
    config_path: &Path,
    budget_override: Option<usize>,
    out_dir: &Path,
) -> Result<InvertReport> {
    let config = RunConfig::load(config_path)?;
    let spec = config
        .invert
        .clone()
        .ok_or_else(|| Error::InvalidConfig("config file has no \"invert\" section".into()))?;
    let (dataset, manifest) = read_dataset(dataset_dir)?;
    let lambda_scale = if config.scaled_units { manifest.k } else { 1.0 };
    let start = start_vector(&spec.start, config.length_scale(), lambda_scale)?;
    let options = MisfitOptions {
        weights: spec.weights,
        active: spec.active,
    };
    options.validate()?;
    let budget = budget_override.unwrap_or(spec.budget);
    let outcome = fit_parameters(&dataset, &start, &options, budget, &manifest.truncation)?;

    fs::create_dir_all(out_dir)?;
    let report = InvertReport {
        kind: outcome.best.kind,
        center: outcome.best.center.as_array(),
        radius: outcome.best.radius,
        physics: outcome.best.physics,
        misfit: outcome.misfit,
        evaluations: outcome.evaluations,
        budget_exhausted: outcome.budget_exhausted,
    };
    let mut file = fs::File::create(out_dir.join("recovered.json"))?;
    serde_json::to_writer_pretty(&mut file, &report)
        .map_err(|e| Error::Parse(format!("report: {e}")))?;
    file.write_all(b"\n")?;

    let mut w = csv::Writer::from_path(out_dir.join("trace.csv")).map_err(csv_err)?;
    let dim = outcome.trace.first().map(|t| t.params.len()).unwrap_or(0);
    let mut header = vec!["eval".to_string(), "misfit".to_string()];
    header.extend((0..dim).map(|i| format!("p{i}")));
    w.write_record(&header).map_err(csv_err)?;
    for entry in &outcome.trace {
        let mut row = vec![entry.eval.to_string(), fmt_real(entry.misfit)];
        row.extend(entry.params.iter().map(|&p| fmt_real(p)));
        w.write_record(&row).map_err(csv_err)?;
    }
    w.flush()?;

    println!(
        "recovered center ({:.6}, {:.6}, {:.6}), radius {:.6}, misfit {:.3e} after {} evaluations",
        report.center[0],
        report.center[1],
        report.center[2],
        report.radius,
        report.misfit,
        report.evaluations
    );
    Ok(report)
}

/// `demo-invariance`: write the two-column misfit profile along translations
/// (plane-wave surrogate vs full phaseless data), plot-ready.
pub fn cmd_demo_invariance(config_path: &Path, out_path: &Path) -> Result<()> {
    let config = RunConfig::load(config_path)?;
    let spec = config.demo.clone().unwrap_or_default();
    let run = config.resolve()?;
    let direction = Direction::from_vec(Vec3::from(spec.shift_direction))?;
    let magnitudes: Vec<f64> = spec
        .shift_magnitudes
        .iter()
        .map(|m| m / run.k.value())
        .collect();
    let incident = plane_probe_directions(spec.plane_directions);

    let plane = translation_valley_scan(
        &run.scatterer,
        &run.geometry,
        run.k,
        &run.grid,
        direction,
        &magnitudes,
        &ScanMode::PlaneOnly(incident),
        &run.policy,
    )?;
    let full = translation_valley_scan(
        &run.scatterer,
        &run.geometry,
        run.k,
        &run.grid,
        direction,
        &magnitudes,
        &ScanMode::FullPhaseless,
        &run.policy,
    )?;

    if let Some(parent) = out_path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent)?;
        }
    }
    let mut w = csv::Writer::from_path(out_path).map_err(csv_err)?;
    w.write_record(["shift", "plane_only_misfit", "full_phaseless_misfit"])
        .map_err(csv_err)?;
    let count = plane.shifts.len().min(full.shifts.len());
    for i in 0..count {
        w.write_record([
            fmt_real(plane.shifts[i]),
            fmt_real(plane.misfits[i]),
            fmt_real(full.misfits[i]),
        ])
        .map_err(csv_err)?;
    }
    w.flush()?;
    if plane.truncated || full.truncated {
        println!("profile truncated at a geometry collision after {count} shifts");
    }
    println!("wrote {} profile rows to {}", count, out_path.display());
    Ok(())
}
