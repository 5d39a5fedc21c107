//! Parameter recovery from phaseless datasets by derivative-free least
//! squares, and the translation-ambiguity landscape.
//!
//! The misfit compares the candidate's synthesised datasets against the
//! observed ones entrywise, normalised per entry and by the `1/4pi` scale of
//! point-source far fields. The optimiser is a deterministic Nelder-Mead
//! simplex with standard coefficients (reflection 1, expansion 2,
//! contraction 0.5, shrink 0.5) working in wavenumber-scaled units, with a
//! shrinking restart at the incumbent when the simplex collapses before the
//! budget runs out.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forward::{
    Direction, PlaneWaveExpansion, ScattererConfig, ScattererKind, TruncationPolicy, Vec3,
    WaveNumber,
};
use crate::measurement::{synthesize_phaseless, DirectionGrid, PhaselessDataset, SourceGeometry};

/// Finite misfit assigned to infeasible candidates so the simplex search
/// stays total.
pub const INFEASIBLE_PENALTY: f64 = 1e6;

/// Which physics parameter rides along with center and radius.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum KindTag {
    Dirichlet,
    Neumann,
    Impedance,
    Medium,
}

impl KindTag {
    pub fn physics_dim(self) -> usize {
        match self {
            KindTag::Dirichlet | KindTag::Neumann => 0,
            KindTag::Impedance | KindTag::Medium => 2,
        }
    }

    pub fn of(kind: ScattererKind) -> Option<KindTag> {
        match kind {
            ScattererKind::Dirichlet => Some(KindTag::Dirichlet),
            ScattererKind::Neumann => Some(KindTag::Neumann),
            ScattererKind::Impedance(_) => Some(KindTag::Impedance),
            ScattererKind::Medium(_) => Some(KindTag::Medium),
            ScattererKind::Transparent => None,
        }
    }
}

/// Candidate sphere parameters: center, radius and (for impedance or medium
/// kinds) the two physics components. The kind tag is fixed per run; kind
/// discrimination is the uniqueness gate's job, not the optimiser's.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParameterVector {
    pub kind: KindTag,
    pub center: Vec3,
    pub radius: f64,
    /// `[Re, Im]` of lambda (impedance) or of the refractive index (medium);
    /// ignored for Dirichlet/Neumann.
    pub physics: [f64; 2],
}

impl ParameterVector {
    pub fn from_config(config: &ScattererConfig) -> Option<Self> {
        let kind = KindTag::of(config.kind)?;
        let physics = match config.kind {
            ScattererKind::Impedance(l) => [l.re, l.im],
            ScattererKind::Medium(n0) => [n0.re, n0.im],
            _ => [0.0, 0.0],
        };
        Some(ParameterVector {
            kind,
            center: config.center,
            radius: config.radius,
            physics,
        })
    }

    pub fn to_config(&self) -> Result<ScattererConfig> {
        let kind = match self.kind {
            KindTag::Dirichlet => ScattererKind::Dirichlet,
            KindTag::Neumann => ScattererKind::Neumann,
            KindTag::Impedance => {
                ScattererKind::Impedance(Complex64::new(self.physics[0], self.physics[1]))
            }
            KindTag::Medium => {
                ScattererKind::Medium(Complex64::new(self.physics[0], self.physics[1]))
            }
        };
        ScattererConfig::new(self.center, self.radius, kind)
    }

    /// Search dimension: 4 geometric entries plus the physics components.
    pub fn dim(&self) -> usize {
        4 + self.kind.physics_dim()
    }

    /// Packs into wavenumber-scaled coordinates: lengths are multiplied by
    /// `k`, an impedance is divided by `k`; a refractive index is already
    /// dimensionless.
    pub fn to_scaled(&self, k: WaveNumber) -> Vec<f64> {
        let k = k.value();
        let mut x = vec![
            self.center.x * k,
            self.center.y * k,
            self.center.z * k,
            self.radius * k,
        ];
        match self.kind {
            KindTag::Impedance => x.extend([self.physics[0] / k, self.physics[1] / k]),
            KindTag::Medium => x.extend(self.physics),
            _ => {}
        }
        x
    }

    pub fn from_scaled(kind: KindTag, x: &[f64], k: WaveNumber) -> Self {
        let kv = k.value();
        let physics = match kind {
            KindTag::Impedance => [x[4] * kv, x[5] * kv],
            KindTag::Medium => [x[4], x[5]],
            _ => [0.0, 0.0],
        };
        ParameterVector {
            kind,
            center: Vec3::new(x[0] / kv, x[1] / kv, x[2] / kv),
            radius: x[3] / kv,
            physics,
        }
    }
}

/// Weights and participation flags for the three datasets, in the order
/// `(ref, src, sup)`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct MisfitOptions {
    pub weights: [f64; 3],
    pub active: [bool; 3],
}

impl Default for MisfitOptions {
    fn default() -> Self {
        MisfitOptions {
            weights: [1.0 / 3.0; 3],
            active: [true; 3],
        }
    }
}

impl MisfitOptions {
    pub fn validate(&self) -> Result<()> {
        if !self.active.iter().any(|&a| a) {
            return Err(Error::InvalidConfig(
                "at least one dataset must be active".into(),
            ));
        }
        let sum: f64 = self
            .weights
            .iter()
            .zip(&self.active)
            .filter(|(_, &a)| a)
            .map(|(w, _)| *w)
            .sum();
        if self.weights.iter().any(|&w| w.is_nan() || w < 0.0) || (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig(format!(
                "active weights must be non-negative and sum to 1, got sum {sum}"
            )));
        }
        Ok(())
    }

    /// Equal weights over the given active set.
    pub fn over(active: [bool; 3]) -> Self {
        let n = active.iter().filter(|&&a| a).count().max(1) as f64;
        let weights = [
            if active[0] { 1.0 / n } else { 0.0 },
            if active[1] { 1.0 / n } else { 0.0 },
            if active[2] { 1.0 / n } else { 0.0 },
        ];
        MisfitOptions { weights, active }
    }
}

const INV_SCALE_SQ: f64 = 1.0 / (4.0 * std::f64::consts::PI);

fn mean_sq_gap(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len().max(1) as f64;
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / n
}

/// Weighted mean-square gap between the candidate's synthesised datasets and
/// the observed ones, in units of the squared `1/4pi` far-field scale.
/// Infeasible candidates (invalid sphere, geometry collision, series
/// failure) receive [`INFEASIBLE_PENALTY`].
pub fn misfit(
    candidate: &ParameterVector,
    observed: &PhaselessDataset,
    options: &MisfitOptions,
    policy: &TruncationPolicy,
) -> f64 {
    if options.validate().is_err() {
        return INFEASIBLE_PENALTY;
    }
    let config = match candidate.to_config() {
        Ok(c) => c,
        Err(_) => return INFEASIBLE_PENALTY,
    };
    let synth = match synthesize_phaseless(
        &config,
        &observed.geometry,
        observed.k,
        &observed.grid,
        None,
        policy,
    ) {
        Ok(d) => d,
        Err(_) => return INFEASIBLE_PENALTY,
    };
    let mut total = 0.0;
    if options.active[0] {
        total += options.weights[0] * mean_sq_gap(&synth.d_ref, &observed.d_ref);
    }
    if options.active[1] {
        total += options.weights[1] * mean_sq_gap(&synth.d_src, &observed.d_src);
    }
    if options.active[2] {
        total += options.weights[2] * mean_sq_gap(&synth.d_sup, &observed.d_sup);
    }
    total / (INV_SCALE_SQ * INV_SCALE_SQ)
}

/// Plane-wave modulus surrogate data `{|u_inf(x^, d_j)|}`: the dataset the
/// translation ambiguity lives in.
#[derive(Clone, Debug)]
pub struct PlaneModulusData {
    pub incident: Vec<Direction>,
    pub grid: DirectionGrid,
    /// Row-major `(direction, incident)`.
    pub values: Vec<f64>,
}

/// Records `{|u_inf|}` for finitely many plane waves.
pub fn synthesize_plane_moduli(
    config: &ScattererConfig,
    k: WaveNumber,
    grid: &DirectionGrid,
    incident: &[Direction],
    policy: &TruncationPolicy,
) -> Result<PlaneModulusData> {
    let expansion = PlaneWaveExpansion::new(config, k, policy)?;
    let mut values = Vec::with_capacity(grid.len() * incident.len());
    for &xhat in &grid.nodes {
        for &d in incident {
            values.push(expansion.farfield(xhat, d).norm());
        }
    }
    Ok(PlaneModulusData {
        incident: incident.to_vec(),
        grid: grid.clone(),
        values,
    })
}

/// Mean-square plane-modulus misfit with the same normalisation as
/// [`misfit`]. Exactly invariant under candidate translation.
pub fn misfit_plane_surrogate(
    candidate: &ParameterVector,
    observed: &PlaneModulusData,
    k: WaveNumber,
    policy: &TruncationPolicy,
) -> f64 {
    let config = match candidate.to_config() {
        Ok(c) => c,
        Err(_) => return INFEASIBLE_PENALTY,
    };
    let synth =
        match synthesize_plane_moduli(&config, k, &observed.grid, &observed.incident, policy) {
            Ok(d) => d,
            Err(_) => return INFEASIBLE_PENALTY,
        };
    mean_sq_gap(&synth.values, &observed.values) / (INV_SCALE_SQ * INV_SCALE_SQ)
}

/// One evaluation record of the fit trace.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct TraceEntry {
    pub eval: usize,
    pub misfit: f64,
    pub params: Vec<f64>,
}

/// Outcome of a parameter fit.
#[derive(Clone, Debug)]
pub struct FitOutcome {
    pub best: ParameterVector,
    pub misfit: f64,
    pub trace: Vec<TraceEntry>,
    pub evaluations: usize,
    pub budget_exhausted: bool,
}

const REFLECTION: f64 = 1.0;
const EXPANSION: f64 = 2.0;
const CONTRACTION: f64 = 0.5;
const SHRINK: f64 = 0.5;
const INITIAL_EDGE: f64 = 0.1;

struct NelderMead<'a, F: FnMut(&[f64]) -> f64> {
    objective: &'a mut F,
    evals: usize,
    budget: usize,
    trace: Vec<TraceEntry>,
}

impl<'a, F: FnMut(&[f64]) -> f64> NelderMead<'a, F> {
    fn eval(&mut self, x: &[f64]) -> f64 {
        let f = (self.objective)(x);
        self.evals += 1;
        self.trace.push(TraceEntry {
            eval: self.evals,
            misfit: f,
            params: x.to_vec(),
        });
        f
    }

    fn out_of_budget(&self) -> bool {
        self.evals >= self.budget
    }

    /// One simplex descent from `x0` with the given edge length. Returns the
    /// best vertex and value; stops on budget or simplex collapse.
    fn run(&mut self, x0: &[f64], edge: f64) -> (Vec<f64>, f64) {
        let dim = x0.len();
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let f0 = self.eval(x0);
        simplex.push((x0.to_vec(), f0));
        for i in 0..dim {
            if self.out_of_budget() {
                break;
            }
            let mut v = x0.to_vec();
            v[i] += edge;
            let f = self.eval(&v);
            simplex.push((v, f));
        }
        while simplex.len() < dim + 1 {
            simplex.push(simplex[0].clone());
        }

        loop {
            simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
            if self.out_of_budget() {
                break;
            }
            let best = simplex[0].1;
            let worst = simplex[dim].1;
            let spread: f64 = (0..dim)
                .map(|i| {
                    let lo = simplex
                        .iter()
                        .map(|(v, _)| v[i])
                        .fold(f64::INFINITY, f64::min);
                    let hi = simplex
                        .iter()
                        .map(|(v, _)| v[i])
                        .fold(f64::NEG_INFINITY, f64::max);
                    hi - lo
                })
                .fold(0.0, f64::max);
            if spread < 1e-10 && (worst - best).abs() <= 1e-26 + 1e-12 * best.abs() {
                break;
            }

            // centroid of all but the worst vertex
            let mut centroid = vec![0.0; dim];
            for (v, _) in &simplex[..dim] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / dim as f64;
                }
            }
            let worst_x = simplex[dim].0.clone();
            let mix = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&worst_x)
                    .map(|(c, w)| c + t * (c - w))
                    .collect()
            };

            let reflected = mix(REFLECTION);
            let f_reflected = self.eval(&reflected);
            if f_reflected < simplex[0].1 {
                if self.out_of_budget() {
                    simplex[dim] = (reflected, f_reflected);
                    continue;
                }
                let expanded = mix(EXPANSION);
                let f_expanded = self.eval(&expanded);
                simplex[dim] = if f_expanded < f_reflected {
                    (expanded, f_expanded)
                } else {
                    (reflected, f_reflected)
                };
            } else if f_reflected < simplex[dim - 1].1 {
                simplex[dim] = (reflected, f_reflected);
            } else {
                // contract, inside or outside of the worst face
                let (point, f_point) = if f_reflected < simplex[dim].1 {
                    let outside = mix(CONTRACTION);
                    let f = self.eval(&outside);
                    (outside, f)
                } else {
                    let inside = mix(-CONTRACTION);
                    let f = self.eval(&inside);
                    (inside, f)
                };
                if f_point < simplex[dim].1.min(f_reflected) {
                    simplex[dim] = (point, f_point);
                } else {
                    // shrink towards the best vertex
                    let anchor = simplex[0].0.clone();
                    for entry in simplex.iter_mut().skip(1) {
                        if self.out_of_budget() {
                            break;
                        }
                        let shrunk: Vec<f64> = anchor
                            .iter()
                            .zip(&entry.0)
                            .map(|(a, v)| a + SHRINK * (v - a))
                            .collect();
                        let f = self.eval(&shrunk);
                        *entry = (shrunk, f);
                    }
                }
            }
        }
        simplex.sort_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal));
        (simplex[0].0.clone(), simplex[0].1)
    }
}

/// Deterministic Nelder-Mead descent on the feasibility-penalised misfit.
///
/// Works in wavenumber-scaled coordinates with initial simplex edge 0.1;
/// when the simplex collapses with budget to spare, restarts at the
/// incumbent with a tenth of the edge (three restarts at most).
pub fn fit_parameters(
    observed: &PhaselessDataset,
    initial: &ParameterVector,
    options: &MisfitOptions,
    budget: usize,
    policy: &TruncationPolicy,
) -> Result<FitOutcome> {
    if budget == 0 {
        return Err(Error::InvalidConfig("fit budget must be at least 1".into()));
    }
    options.validate()?;
    let k = observed.k;
    let kind = initial.kind;
    let policy = *policy;
    let obs = observed.clone();
    let opts = *options;
    let mut objective = move |x: &[f64]| {
        let candidate = ParameterVector::from_scaled(kind, x, k);
        misfit(&candidate, &obs, &opts, &policy)
    };
    let mut driver = NelderMead {
        objective: &mut objective,
        evals: 0,
        budget,
        trace: Vec::new(),
    };

    let mut x = initial.to_scaled(k);
    let mut edge = INITIAL_EDGE;
    let (mut best_x, mut best_f) = driver.run(&x, edge);
    for _ in 0..3 {
        if driver.out_of_budget() || best_f <= 1e-26 {
            break;
        }
        x = best_x.clone();
        edge *= 0.1;
        let (next_x, next_f) = driver.run(&x, edge);
        let improved = next_f < best_f * (1.0 - 1e-12);
        if next_f < best_f {
            best_x = next_x;
            best_f = next_f;
        }
        if !improved {
            break;
        }
    }

    Ok(FitOutcome {
        best: ParameterVector::from_scaled(kind, &best_x, k),
        misfit: best_f,
        evaluations: driver.evals,
        budget_exhausted: driver.evals >= budget,
        trace: driver.trace,
    })
}

/// Which data the valley scan compares.
#[derive(Clone, Debug)]
pub enum ScanMode {
    /// Plane-wave moduli for the given incident directions; the profile is
    /// flat at zero no matter the shift.
    PlaneOnly(Vec<Direction>),
    /// The three point-source datasets; the profile grows off zero shift.
    FullPhaseless,
}

/// Misfit profile along translations of the true scatterer.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ValleyProfile {
    pub shifts: Vec<f64>,
    pub misfits: Vec<f64>,
    /// True when the scan stopped early because a shifted candidate collided
    /// with the measurement geometry.
    pub truncated: bool,
}

/// Evaluates the misfit of the translated truth against its own untranslated
/// data, along `direction` at each shift magnitude.
#[allow(clippy::too_many_arguments)]
pub fn translation_valley_scan(
    truth: &ScattererConfig,
    geometry: &SourceGeometry,
    k: WaveNumber,
    grid: &DirectionGrid,
    direction: Direction,
    magnitudes: &[f64],
    mode: &ScanMode,
    policy: &TruncationPolicy,
) -> Result<ValleyProfile> {
    let candidate_base = ParameterVector::from_config(truth).ok_or_else(|| {
        Error::InvalidConfig("valley scan needs a parametric scatterer kind".into())
    })?;
    let mut shifts = Vec::new();
    let mut misfits = Vec::new();
    let mut truncated = false;
    match mode {
        ScanMode::PlaneOnly(incident) => {
            let observed = synthesize_plane_moduli(truth, k, grid, incident, policy)?;
            for &m in magnitudes {
                let mut candidate = candidate_base;
                candidate.center = truth.center + direction.vec() * m;
                let value = misfit_plane_surrogate(&candidate, &observed, k, policy);
                if value >= INFEASIBLE_PENALTY {
                    truncated = true;
                    break;
                }
                shifts.push(m);
                misfits.push(value);
            }
        }
        ScanMode::FullPhaseless => {
            let observed = synthesize_phaseless(truth, geometry, k, grid, None, policy)?;
            let options = MisfitOptions::default();
            for &m in magnitudes {
                let mut candidate = candidate_base;
                candidate.center = truth.center + direction.vec() * m;
                let value = misfit(&candidate, &observed, &options, policy);
                if value >= INFEASIBLE_PENALTY {
                    truncated = true;
                    break;
                }
                shifts.push(m);
                misfits.push(value);
            }
        }
    }
    Ok(ValleyProfile {
        shifts,
        misfits,
        truncated,
    })
}
