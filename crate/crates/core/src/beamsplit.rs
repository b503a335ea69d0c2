//! Beam splitting around a position estimate.
//!
//! The surface is cut into `P` sub-surfaces, each optimized toward its own
//! point offset from the estimate in angle (ASM) or distance (DSM). Phase
//! matching then picks one candidate phase per sub-surface so that the beams
//! add up constructively at the estimate itself.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::{PolarPoint, RisGeometry};
use crate::optimizer::{rd_state, ElementState, LinkSetup, PhaseSet, RisConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SplitMethod {
    /// Offsets in azimuth, factor in degrees.
    Asm,
    /// Offsets in distance, factor in meters.
    Dsm,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PhaseMatching {
    /// Best of all `T^P` phase combinations.
    Exhaustive,
    /// One shared phase index for every beam.
    SamePhase,
    /// Each beam maximizes its own partial sum.
    Independent,
}

impl PhaseMatching {
    pub fn default_for(method: SplitMethod) -> Self {
        match method {
            SplitMethod::Asm => PhaseMatching::SamePhase,
            SplitMethod::Dsm => PhaseMatching::Exhaustive,
        }
    }
}

/// Direction along which the surface is cut into sub-surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PartitionAxis {
    /// Side-by-side strips of whole element columns.
    #[default]
    Columns,
    /// Stacked bands of whole element rows.
    Rows,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitSpec {
    pub method: SplitMethod,
    /// Total spread of the split coordinate: degrees for ASM, meters for DSM.
    pub factor: f64,
    pub beam_count: usize,
    pub phase_matching: PhaseMatching,
    pub axis: PartitionAxis,
}

impl SplitSpec {
    pub fn new(method: SplitMethod, factor: f64, beam_count: usize) -> Result<Self> {
        let spec = Self {
            method,
            factor,
            beam_count,
            phase_matching: PhaseMatching::default_for(method),
            axis: PartitionAxis::default(),
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_matching(mut self, mode: PhaseMatching) -> Self {
        self.phase_matching = mode;
        self
    }

    pub fn with_axis(mut self, axis: PartitionAxis) -> Self {
        self.axis = axis;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.factor >= 0.0 && self.factor.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "splitting factor must be non-negative, got {}",
                self.factor
            )));
        }
        if self.beam_count == 0 {
            return Err(Error::InvalidParameter(
                "beam count must be at least 1".into(),
            ));
        }
        Ok(())
    }

    /// Offsets of the split coordinate, evenly spanning `[-factor/2, factor/2]`.
    pub fn offsets(&self) -> Vec<f64> {
        if self.beam_count == 1 {
            return vec![0.0];
        }
        let last = (self.beam_count - 1) as f64;
        (0..self.beam_count)
            .map(|i| self.factor * (i as f64 / last - 0.5))
            .collect()
    }
}

pub fn split_targets(estimate: &PolarPoint, spec: &SplitSpec) -> Result<Vec<PolarPoint>> {
    spec.validate()?;
    spec.offsets()
        .into_iter()
        .map(|o| match spec.method {
            SplitMethod::Asm => PolarPoint::with_height(
                estimate.distance(),
                estimate.angle_deg() + o,
                estimate.height(),
            ),
            SplitMethod::Dsm => PolarPoint::with_height(
                estimate.distance() + o,
                estimate.angle_deg(),
                estimate.height(),
            ),
        })
        .collect()
}

/// Disjoint element index sets, one per beam, in surface order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SubSurfacePartition {
    sets: Vec<Vec<usize>>,
}

impl SubSurfacePartition {
    pub fn sets(&self) -> &[Vec<usize>] {
        &self.sets
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }
}

/// Sizes of `parts` contiguous bands over `lines`, larger bands first.
fn band_sizes(lines: usize, parts: usize) -> Vec<usize> {
    (0..parts)
        .map(|i| lines / parts + usize::from(i < lines % parts))
        .collect()
}

/// Groups elements into `beam_count` bands of whole element lines along `axis`.
pub fn partition(
    geom: &RisGeometry,
    beam_count: usize,
    axis: PartitionAxis,
) -> Result<SubSurfacePartition> {
    let lines = match axis {
        PartitionAxis::Columns => geom.layout().columns(),
        PartitionAxis::Rows => geom.layout().rows(),
    };
    if beam_count == 0 || beam_count > lines {
        return Err(Error::TooManyBeams {
            beams: beam_count,
            lines,
        });
    }
    let mut band_of_line = Vec::with_capacity(lines);
    for (band, size) in band_sizes(lines, beam_count).into_iter().enumerate() {
        band_of_line.extend(std::iter::repeat_n(band, size));
    }
    let mut sets = vec![Vec::new(); beam_count];
    for (m, cell) in geom.cells().iter().enumerate() {
        let line = match axis {
            PartitionAxis::Columns => cell.column,
            PartitionAxis::Rows => cell.row,
        };
        sets[band_of_line[line]].push(m);
    }
    Ok(SubSurfacePartition { sets })
}

const MAX_COMBINATIONS: u64 = 1 << 32;

/// Picks one candidate index per beam from the `P x T` grid of partial sums
/// evaluated at the estimate. Ties resolve to the lexicographically
/// smallest index tuple.
pub fn phase_match(candidates: &[Vec<Complex64>], mode: PhaseMatching) -> Result<Vec<usize>> {
    let t_count = candidates.first().map_or(0, Vec::len);
    if t_count == 0 || candidates.iter().any(|row| row.len() != t_count) {
        return Err(Error::EmptyCandidates);
    }
    let p = candidates.len();
    match mode {
        PhaseMatching::Independent => Ok(candidates.iter().map(|row| argmax_norm(row)).collect()),
        PhaseMatching::SamePhase => {
            let sums: Vec<Complex64> = (0..t_count)
                .map(|t| candidates.iter().map(|row| row[t]).sum())
                .collect();
            Ok(vec![argmax_norm(&sums); p])
        }
        PhaseMatching::Exhaustive => {
            let total = (t_count as u64).checked_pow(p as u32).unwrap_or(u64::MAX);
            if total > MAX_COMBINATIONS {
                return Err(Error::InvalidParameter(format!(
                    "{t_count}^{p} phase combinations exceed the exhaustive search limit"
                )));
            }
            Ok(exhaustive_search(candidates, t_count))
        }
    }
}

fn argmax_norm(values: &[Complex64]) -> usize {
    let mut best = 0;
    let mut best_norm = f64::NEG_INFINITY;
    for (i, v) in values.iter().enumerate() {
        let n = v.norm_sqr();
        if n > best_norm {
            best = i;
            best_norm = n;
        }
    }
    best
}

/// Odometer walk over all index tuples, last beam varying fastest. Prefix
/// sums are kept per depth so each step costs one addition per changed digit.
fn exhaustive_search(candidates: &[Vec<Complex64>], t_count: usize) -> Vec<usize> {
    let p = candidates.len();
    let mut idx = vec![0usize; p];
    // prefix[i] = Σ_{j<i} candidates[j][idx[j]]
    let mut prefix = vec![Complex64::new(0.0, 0.0); p + 1];
    for i in 0..p {
        prefix[i + 1] = prefix[i] + candidates[i][0];
    }
    let mut best = idx.clone();
    let mut best_norm = prefix[p].norm_sqr();
    'outer: loop {
        let mut d = p;
        loop {
            if d == 0 {
                break 'outer;
            }
            d -= 1;
            idx[d] += 1;
            if idx[d] < t_count {
                break;
            }
            idx[d] = 0;
        }
        for i in d..p {
            prefix[i + 1] = prefix[i] + candidates[i][idx[i]];
        }
        let n = prefix[p].norm_sqr();
        if n > best_norm {
            best_norm = n;
            best.copy_from_slice(&idx);
        }
    }
    best
}

/// One sub-surface of a split configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamConfig {
    pub target: PolarPoint,
    pub indices: Vec<usize>,
    /// Switch states of the sub-surface, aligned with `indices`.
    pub states: Vec<ElementState>,
    pub phase_index: usize,
    pub chosen_phase: f64,
    /// Unscaled partial channel sum of this beam at the estimate.
    pub partial_at_estimate: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitConfig {
    pub beams: Vec<BeamConfig>,
    pub combined: RisConfig,
}

impl SplitConfig {
    pub fn chosen_phases(&self) -> Vec<f64> {
        self.beams.iter().map(|b| b.chosen_phase).collect()
    }
}

/// Per-beam candidate configurations for every phase value.
#[derive(Debug, Clone)]
pub struct SplitCandidates {
    pub targets: Vec<PolarPoint>,
    pub partition: SubSurfacePartition,
    /// `states[i][t]`: states of beam `i`'s elements under `C_t`.
    pub states: Vec<Vec<Vec<ElementState>>>,
    /// `sums[i][t]`: unscaled partial channel of beam `i` under `C_t` at the estimate.
    pub sums: Vec<Vec<Complex64>>,
}

impl SplitCandidates {
    pub fn build(
        setup: &LinkSetup<'_>,
        estimate: &PolarPoint,
        spec: &SplitSpec,
        phases: &PhaseSet,
    ) -> Result<Self> {
        let targets = split_targets(estimate, spec)?;
        let partition = partition(setup.geometry(), spec.beam_count, spec.axis)?;
        let at_estimate = setup.channel_at(estimate)?;
        let h = at_estimate.coefficients();
        let model = setup.switch_model();

        let mut states = Vec::with_capacity(targets.len());
        let mut sums = Vec::with_capacity(targets.len());
        for (target, set) in targets.iter().zip(partition.sets()) {
            let solution = setup.solve_target(target)?;
            let ideal: Vec<f64> = set.iter().map(|&m| solution.ideal_phases[m]).collect();
            let mut beam_states = Vec::with_capacity(phases.t_count());
            let mut beam_sums = Vec::with_capacity(phases.t_count());
            for &c in phases.values() {
                let s: Vec<ElementState> = ideal.iter().map(|&p| rd_state(c - p)).collect();
                let sum = set
                    .iter()
                    .zip(&s)
                    .map(|(&m, &st)| h[m] * model.reflection(st))
                    .sum();
                beam_states.push(s);
                beam_sums.push(sum);
            }
            states.push(beam_states);
            sums.push(beam_sums);
        }
        Ok(Self {
            targets,
            partition,
            states,
            sums,
        })
    }

    /// Assembles the full configuration for one phase index per beam.
    pub fn assemble(
        &self,
        setup: &LinkSetup<'_>,
        phases: &PhaseSet,
        choice: &[usize],
    ) -> SplitConfig {
        let mut all = vec![ElementState::Off; setup.geometry().len()];
        let mut beams = Vec::with_capacity(choice.len());
        let mut total = Complex64::new(0.0, 0.0);
        for (i, &t) in choice.iter().enumerate() {
            let set = &self.partition.sets()[i];
            let states = self.states[i][t].clone();
            for (&m, &s) in set.iter().zip(&states) {
                all[m] = s;
            }
            let partial = self.sums[i][t];
            total += partial;
            beams.push(BeamConfig {
                target: self.targets[i],
                indices: set.clone(),
                states,
                phase_index: t,
                chosen_phase: phases.values()[t],
                partial_at_estimate: partial,
            });
        }
        let combined = RisConfig::new(
            all,
            beams[0].chosen_phase,
            setup.with_gains(total),
            *setup.switch_model(),
        );
        SplitConfig { beams, combined }
    }
}

pub fn optimize_split(
    setup: &LinkSetup<'_>,
    estimate: &PolarPoint,
    spec: &SplitSpec,
    phases: &PhaseSet,
) -> Result<SplitConfig> {
    let candidates = SplitCandidates::build(setup, estimate, spec, phases)?;
    let choice = phase_match(&candidates.sums, spec.phase_matching)?;
    Ok(candidates.assemble(setup, phases, &choice))
}

/// Magnitude in dB at the estimate for every pair of phase indices of a
/// two-beam split. `grid[a][b]` uses index `a` for the beam offset by
/// `+factor/2` and `b` for the beam offset by `-factor/2`.
pub fn phase_grid(
    setup: &LinkSetup<'_>,
    estimate: &PolarPoint,
    spec: &SplitSpec,
    phases: &PhaseSet,
) -> Result<Vec<Vec<f64>>> {
    if spec.beam_count != 2 {
        return Err(Error::InvalidParameter(format!(
            "phase grid needs exactly 2 beams, got {}",
            spec.beam_count
        )));
    }
    let candidates = SplitCandidates::build(setup, estimate, spec, phases)?;
    let (minus, plus) = (&candidates.sums[0], &candidates.sums[1]);
    Ok(plus
        .iter()
        .map(|p| {
            minus
                .iter()
                .map(|m| setup.with_gains(p + m).magnitude_db)
                .collect()
        })
        .collect())
}
