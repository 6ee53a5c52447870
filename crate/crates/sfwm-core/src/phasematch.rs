//! SFWM phase mismatch, Δk = 0 contour tracing, inner/outer branch
//! classification, group-delay terms, joint-spectrum orientation angles, and
//! the Raman Stokes-band overlap check.
//!
//! Sign conventions: every wave's k enters Δk with its canonical sign
//! (+ for pumps, − for signal/idler) multiplied by its propagation
//! direction, so the all-forward case reduces to
//! Δk = k_p1 + k_p2 − k_s − k_i − φ_nl and a (+,−,+,−) configuration
//! reproduces the counter-propagating mismatch k_1 − k_2 − k_s + k_i.
//! The nonlinear phase φ_nl = γ₁P₁ + γ₂P₂ is always subtracted.

use serde::{Deserialize, Serialize};

use crate::constants::{
    GAMMA_PER_WKM_TO_PER_WUM, RAMAN_BAND_RAD_PER_FS, TOL_PM, TOL_PM_CENTERS, UM_PER_M,
};
use crate::fiber::{FiberError, FiberModel, ModeId};

#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum PhasematchError {
    #[error("non-physical frequencies: ω_i = {0} rad/fs would be ≤ 0")]
    NonPhysical(f64),
    #[error("no nonlinear coefficient registered for process `{0}`")]
    MissingGamma(String),
    #[error("|Δk| = {0} 1/µm at the center frequencies; not phasematched")]
    NotPhasematched(f64),
    #[error("both T_s and T_i vanish; orientation angle undefined")]
    DegenerateTerms,
    #[error("contour grids must be strictly increasing with at least 64 samples per axis")]
    BadGrid,
    #[error(transparent)]
    Dispersion(#[from] FiberError),
}

/// Propagation direction along the fiber axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

/// Role of a wave in the four-wave interaction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Wave {
    Pump1,
    Pump2,
    Signal,
    Idler,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveAssignment {
    pub mode: ModeId,
    pub direction: Direction,
}

impl WaveAssignment {
    pub fn forward(mode: ModeId) -> Self {
        Self { mode, direction: Direction::Forward }
    }
    pub fn backward(mode: ModeId) -> Self {
        Self { mode, direction: Direction::Backward }
    }
}

/// Assignment of (transverse mode, direction) to each wave, plus pump peak
/// powers and the user-supplied process weight κ_w standing in for the
/// transverse overlap integral.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProcessSpec {
    /// Label keying the fiber's gamma table; for single-mode polarization
    /// combinations this is conventionally the Table-1 row tag.
    pub label: String,
    pub pump1: WaveAssignment,
    pub pump2: WaveAssignment,
    pub signal: WaveAssignment,
    pub idler: WaveAssignment,
    /// Pump peak powers in W.
    pub p1_w: f64,
    pub p2_w: f64,
    /// Process weight κ_w (dimensionless, default 1).
    pub kappa_weight: f64,
}

impl ProcessSpec {
    /// Co-propagating process with all four waves in one mode.
    pub fn single_mode(label: &str, mode: ModeId) -> Self {
        Self {
            label: label.to_string(),
            pump1: WaveAssignment::forward(mode.clone()),
            pump2: WaveAssignment::forward(mode.clone()),
            signal: WaveAssignment::forward(mode.clone()),
            idler: WaveAssignment::forward(mode),
            p1_w: 0.0,
            p2_w: 0.0,
            kappa_weight: 1.0,
        }
    }

    /// Co-propagating process with per-wave modes.
    pub fn co_propagating(
        label: &str,
        pump1: ModeId,
        pump2: ModeId,
        signal: ModeId,
        idler: ModeId,
    ) -> Self {
        Self {
            label: label.to_string(),
            pump1: WaveAssignment::forward(pump1),
            pump2: WaveAssignment::forward(pump2),
            signal: WaveAssignment::forward(signal),
            idler: WaveAssignment::forward(idler),
            p1_w: 0.0,
            p2_w: 0.0,
            kappa_weight: 1.0,
        }
    }

    /// Counter-propagating configuration: pump 2 and idler run backward, so
    /// the mismatch takes the k₁ − k₂ − k_s + k_i form.
    pub fn counter_propagating(label: &str, mode: ModeId) -> Self {
        Self {
            label: label.to_string(),
            pump1: WaveAssignment::forward(mode.clone()),
            pump2: WaveAssignment::backward(mode.clone()),
            signal: WaveAssignment::forward(mode.clone()),
            idler: WaveAssignment::backward(mode),
            p1_w: 0.0,
            p2_w: 0.0,
            kappa_weight: 1.0,
        }
    }

    pub fn with_powers(mut self, p1_w: f64, p2_w: f64) -> Self {
        self.p1_w = p1_w;
        self.p2_w = p2_w;
        self
    }

    pub fn is_co_propagating(&self) -> bool {
        [&self.pump1, &self.pump2, &self.signal, &self.idler]
            .iter()
            .all(|w| w.direction == Direction::Forward)
    }

    pub fn assignment(&self, wave: Wave) -> &WaveAssignment {
        match wave {
            Wave::Pump1 => &self.pump1,
            Wave::Pump2 => &self.pump2,
            Wave::Signal => &self.signal,
            Wave::Idler => &self.idler,
        }
    }
}

/// Nonlinear phase φ_nl = γ₁P₁ + γ₂P₂ in 1/µm.
pub fn nonlinear_phase(fiber: &FiberModel, process: &ProcessSpec) -> Result<f64, PhasematchError> {
    if process.p1_w == 0.0 && process.p2_w == 0.0 {
        return Ok(0.0);
    }
    let gamma = fiber
        .gamma_table
        .get(&process.label)
        .ok_or_else(|| PhasematchError::MissingGamma(process.label.clone()))?;
    Ok(
        (gamma.gamma1_per_w_km * process.p1_w + gamma.gamma2_per_w_km * process.p2_w)
            * GAMMA_PER_WKM_TO_PER_WUM,
    )
}

/// Signed SFWM phase mismatch in 1/µm. The idler frequency follows from
/// energy conservation; a non-positive idler frequency is rejected as
/// non-physical.
pub fn delta_k(
    fiber: &FiberModel,
    process: &ProcessSpec,
    omega_p1: f64,
    omega_p2: f64,
    omega_s: f64,
) -> Result<f64, PhasematchError> {
    let omega_i = omega_p1 + omega_p2 - omega_s;
    if omega_i <= 0.0 {
        return Err(PhasematchError::NonPhysical(omega_i));
    }
    let kp1 = fiber.propagation_constant(&process.pump1.mode, omega_p1)?;
    let kp2 = fiber.propagation_constant(&process.pump2.mode, omega_p2)?;
    let ks = fiber.propagation_constant(&process.signal.mode, omega_s)?;
    let ki = fiber.propagation_constant(&process.idler.mode, omega_i)?;
    let phi_nl = nonlinear_phase(fiber, process)?;
    Ok(process.pump1.direction.sign() * kp1 + process.pump2.direction.sign() * kp2
        - process.signal.direction.sign() * ks
        - process.idler.direction.sign() * ki
        - phi_nl)
}

// --- contour tracing ---------------------------------------------------------

/// Branch label of a contour point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Branch {
    Inner,
    Outer,
    Line,
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Inner => write!(f, "inner"),
            Branch::Outer => write!(f, "outer"),
            Branch::Line => write!(f, "line"),
        }
    }
}

/// One refined Δk = 0 solution at a fixed pump-axis sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourPoint {
    pub detuning: f64,
    pub branch: Branch,
}

/// Solutions in one pump-frequency column, sorted by detuning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourColumn {
    pub omega_p: f64,
    pub points: Vec<ContourPoint>,
}

/// Marching-squares polyline with refined vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourLoop {
    pub vertices: Vec<(f64, f64)>, // (omega_p, detuning)
    pub closed: bool,
}

/// Polyline solutions of Δk = 0 in (ω_p, Δ) space for degenerate pumps
/// (ω_p1 = ω_p2 = ω_p, Δ = ω_s − ω_p).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhasematchContour {
    pub columns: Vec<ContourColumn>,
    pub loops: Vec<ContourLoop>,
    /// No zero crossing found anywhere in the window.
    pub empty: bool,
}

impl PhasematchContour {
    /// Sum over columns of the inner-to-outer vertical extent per half-plane,
    /// times the column spacing: a robust area measure for loop-shrinkage
    /// monotonicity that does not depend on polyline assembly.
    pub fn column_area(&self) -> f64 {
        if self.columns.len() < 2 {
            return 0.0;
        }
        let d_omega = self.columns[1].omega_p - self.columns[0].omega_p;
        let mut area = 0.0;
        for col in &self.columns {
            let upper: Vec<f64> =
                col.points.iter().map(|p| p.detuning).filter(|&d| d > 0.0).collect();
            let lower: Vec<f64> =
                col.points.iter().map(|p| p.detuning).filter(|&d| d < 0.0).collect();
            for half in [upper, lower] {
                if half.len() >= 2 {
                    let hi = half.iter().cloned().fold(f64::MIN, f64::max);
                    let lo = half.iter().cloned().fold(f64::MAX, f64::min);
                    area += (hi - lo) * d_omega;
                }
            }
        }
        area
    }

    /// Shoelace area of a closed polyline, if any is present.
    pub fn largest_loop_area(&self) -> Option<f64> {
        self.loops
            .iter()
            .filter(|l| l.closed && l.vertices.len() >= 3)
            .map(|l| {
                let v = &l.vertices;
                let mut acc = 0.0;
                for i in 0..v.len() {
                    let (x0, y0) = v[i];
                    let (x1, y1) = v[(i + 1) % v.len()];
                    acc += x0 * y1 - x1 * y0;
                }
                acc.abs() * 0.5
            })
            .fold(None, |best, a| Some(best.map_or(a, |b: f64| b.max(a))))
    }
}

/// Δk over the degenerate-pump contour plane.
fn field_value(
    fiber: &FiberModel,
    process: &ProcessSpec,
    omega_p: f64,
    detuning: f64,
) -> Result<f64, PhasematchError> {
    delta_k(fiber, process, omega_p, omega_p, omega_p + detuning)
}

/// Traces the Δk = 0 contour on the sampled field. Cell-edge crossings are
/// refined by bisection to |Δk| < 1e-9 1/µm, assembled into polylines by
/// marching squares, and per-column solutions re-extracted for branch
/// classification. Cells whose corners fail to evaluate (non-physical or out
/// of dispersion range) are skipped.
pub fn trace_contour(
    fiber: &FiberModel,
    process: &ProcessSpec,
    pump_grid: &[f64],
    detuning_grid: &[f64],
) -> Result<PhasematchContour, PhasematchError> {
    if pump_grid.len() < 64 || detuning_grid.len() < 64 {
        return Err(PhasematchError::BadGrid);
    }
    if pump_grid.windows(2).any(|w| w[1] <= w[0]) || detuning_grid.windows(2).any(|w| w[1] <= w[0])
    {
        return Err(PhasematchError::BadGrid);
    }
    let nx = pump_grid.len();
    let ny = detuning_grid.len();
    let mut field = vec![f64::NAN; nx * ny];
    for (ix, &wp) in pump_grid.iter().enumerate() {
        for (iy, &dt) in detuning_grid.iter().enumerate() {
            if let Ok(v) = field_value(fiber, process, wp, dt) {
                field[ix * ny + iy] = v;
            }
        }
    }

    let refine_on_edge = |p0: (f64, f64), p1: (f64, f64), f0: f64| -> Option<(f64, f64)> {
        // bisection along the straight grid edge from p0 to p1
        let mut t_lo = 0.0_f64;
        let mut t_hi = 1.0_f64;
        let sign_lo = f0.signum();
        let eval = |t: f64| {
            let wp = p0.0 + t * (p1.0 - p0.0);
            let dt = p0.1 + t * (p1.1 - p0.1);
            field_value(fiber, process, wp, dt).ok()
        };
        for _ in 0..80 {
            let tm = 0.5 * (t_lo + t_hi);
            let fm = eval(tm)?;
            if fm.abs() < TOL_PM {
                return Some((p0.0 + tm * (p1.0 - p0.0), p0.1 + tm * (p1.1 - p0.1)));
            }
            if fm.signum() == sign_lo {
                t_lo = tm;
            } else {
                t_hi = tm;
            }
        }
        let tm = 0.5 * (t_lo + t_hi);
        let fm = eval(tm)?;
        (fm.abs() < TOL_PM).then_some((p0.0 + tm * (p1.0 - p0.0), p0.1 + tm * (p1.1 - p0.1)))
    };

    // marching squares: collect per-cell segments keyed by (cell, edge index)
    // edge ids: 0 bottom (iy), 1 right (ix+1), 2 top (iy+1), 3 left (ix)
    use std::collections::HashMap;
    type EdgeKey = (usize, usize, u8);
    type Segment = (EdgeKey, EdgeKey, (f64, f64), (f64, f64));
    let mut segments: Vec<Segment> = Vec::new();
    let edge_key = |ix: usize, iy: usize, e: u8| -> (usize, usize, u8) {
        // canonical key shared between neighboring cells
        match e {
            0 => (ix, iy, 0),         // horizontal edge at row iy
            2 => (ix, iy + 1, 0),     // top edge = bottom edge of row iy+1
            3 => (ix, iy, 1),         // vertical edge at column ix
            1 => (ix + 1, iy, 1),     // right edge = left edge of column ix+1
            _ => unreachable!(),
        }
    };
    for ix in 0..nx - 1 {
        for iy in 0..ny - 1 {
            let f = [
                field[ix * ny + iy],
                field[(ix + 1) * ny + iy],
                field[(ix + 1) * ny + iy + 1],
                field[ix * ny + iy + 1],
            ];
            if f.iter().any(|v| v.is_nan()) {
                continue;
            }
            let corner = |c: usize| -> (f64, f64) {
                match c {
                    0 => (pump_grid[ix], detuning_grid[iy]),
                    1 => (pump_grid[ix + 1], detuning_grid[iy]),
                    2 => (pump_grid[ix + 1], detuning_grid[iy + 1]),
                    _ => (pump_grid[ix], detuning_grid[iy + 1]),
                }
            };
            // edges as corner pairs, in marching-squares order
            let edges = [(0usize, 1usize), (1, 2), (3, 2), (0, 3)];
            let mut crossings: Vec<(u8, (f64, f64))> = Vec::new();
            for (e, &(c0, c1)) in edges.iter().enumerate() {
                if f[c0] == 0.0 {
                    // rare exact zero on a corner: nudge handled by bisection
                }
                if f[c0] * f[c1] < 0.0 {
                    if let Some(pt) = refine_on_edge(corner(c0), corner(c1), f[c0]) {
                        crossings.push((e as u8, pt));
                    }
                }
            }
            match crossings.len() {
                2 => {
                    let (e0, p0) = crossings[0];
                    let (e1, p1) = crossings[1];
                    segments.push((edge_key(ix, iy, e0), edge_key(ix, iy, e1), p0, p1));
                }
                4 => {
                    // saddle: disambiguate with the field value at the center
                    let wc = 0.5 * (pump_grid[ix] + pump_grid[ix + 1]);
                    let dc = 0.5 * (detuning_grid[iy] + detuning_grid[iy + 1]);
                    let fc = field_value(fiber, process, wc, dc).unwrap_or(0.0);
                    // crossings sorted by edge id: 0 bottom, 1 right, 2 top, 3 left
                    let pair = |a: usize, b: usize, segs: &mut Vec<_>| {
                        let (ea, pa) = crossings[a];
                        let (eb, pb) = crossings[b];
                        segs.push((edge_key(ix, iy, ea), edge_key(ix, iy, eb), pa, pb));
                    };
                    if (f[0] > 0.0) == (fc > 0.0) {
                        pair(0, 1, &mut segments);
                        pair(2, 3, &mut segments);
                    } else {
                        pair(0, 3, &mut segments);
                        pair(1, 2, &mut segments);
                    }
                }
                _ => {}
            }
        }
    }

    // link segments sharing edge keys into polylines
    let mut adjacency: HashMap<(usize, usize, u8), Vec<usize>> = HashMap::new();
    for (i, seg) in segments.iter().enumerate() {
        adjacency.entry(seg.0).or_default().push(i);
        adjacency.entry(seg.1).or_default().push(i);
    }
    let mut used = vec![false; segments.len()];
    let mut loops = Vec::new();
    for start in 0..segments.len() {
        if used[start] {
            continue;
        }
        // walk both ways from the starting segment
        let mut chain: std::collections::VecDeque<(f64, f64)> = std::collections::VecDeque::new();
        used[start] = true;
        chain.push_back(segments[start].2);
        chain.push_back(segments[start].3);
        let mut end_keys = [segments[start].0, segments[start].1];
        let mut closed = false;
        'grow: loop {
            for side in 0..2 {
                let key = end_keys[side];
                let next = adjacency
                    .get(&key)
                    .and_then(|ids| ids.iter().find(|&&i| !used[i]).copied());
                if let Some(i) = next {
                    used[i] = true;
                    let (ka, kb, pa, pb) = segments[i];
                    let (far_key, near_pt, far_pt) =
                        if ka == key { (kb, pa, pb) } else { (ka, pb, pa) };
                    let _ = near_pt;
                    if side == 0 {
                        chain.push_front(far_pt);
                    } else {
                        chain.push_back(far_pt);
                    }
                    end_keys[side] = far_key;
                    if end_keys[0] == end_keys[1] {
                        closed = true;
                        break 'grow;
                    }
                    continue 'grow;
                }
            }
            break;
        }
        loops.push(ContourLoop { vertices: chain.into_iter().collect(), closed });
    }

    // per-column refined solutions for branch classification
    let mut columns = Vec::with_capacity(nx);
    for (ix, &wp) in pump_grid.iter().enumerate() {
        let mut pts = Vec::new();
        for iy in 0..ny - 1 {
            let f0 = field[ix * ny + iy];
            let f1 = field[ix * ny + iy + 1];
            if f0.is_nan() || f1.is_nan() || f0 * f1 >= 0.0 {
                continue;
            }
            if let Some((_, dt)) =
                refine_on_edge((wp, detuning_grid[iy]), (wp, detuning_grid[iy + 1]), f0)
            {
                pts.push(ContourPoint { detuning: dt, branch: Branch::Line });
            }
        }
        pts.sort_by(|a, b| a.detuning.partial_cmp(&b.detuning).unwrap());
        columns.push(ContourColumn { omega_p: wp, points: pts });
    }

    let empty = columns.iter().all(|c| c.points.is_empty()) && loops.is_empty();
    let contour = PhasematchContour { columns, loops, empty };
    Ok(classify_branches(contour))
}

/// Labels per-column solutions: within each detuning half-plane, the
/// smallest |Δ| is inner and the largest outer when at least two solutions
/// exist; single solutions stay `Line`.
pub fn classify_branches(mut contour: PhasematchContour) -> PhasematchContour {
    for col in &mut contour.columns {
        for positive in [true, false] {
            let idx: Vec<usize> = col
                .points
                .iter()
                .enumerate()
                .filter(|(_, p)| (p.detuning > 0.0) == positive && p.detuning != 0.0)
                .map(|(i, _)| i)
                .collect();
            if idx.len() >= 2 {
                let (mut i_min, mut i_max) = (idx[0], idx[0]);
                for &i in &idx {
                    if col.points[i].detuning.abs() < col.points[i_min].detuning.abs() {
                        i_min = i;
                    }
                    if col.points[i].detuning.abs() > col.points[i_max].detuning.abs() {
                        i_max = i;
                    }
                }
                for &i in &idx {
                    col.points[i].branch = Branch::Line;
                }
                col.points[i_min].branch = Branch::Inner;
                col.points[i_max].branch = Branch::Outer;
            } else {
                for &i in &idx {
                    col.points[i].branch = Branch::Line;
                }
            }
        }
    }
    contour
}

// --- group-delay terms -------------------------------------------------------

/// Which published definition of the bandwidth-weighted coefficients to use.
/// Both give identical values; the tag records which form was evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TermVariant {
    /// T_μ = τ_μ + τ_p·σ₁²/(σ₁²+σ₂²), with τ_μ referenced to pump 2.
    PumpTwoReferenced,
    /// T_μ = τ_μ^avg + (σ₁²−σ₂²)/(σ₁²+σ₂²)·τ_p/2, with τ_μ^avg referenced
    /// to the mean pump group delay.
    MeanPumpReferenced,
}

/// Center frequencies at which the linearization is performed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CenterFrequencies {
    pub omega_p1: f64,
    pub omega_p2: f64,
    pub omega_s: f64,
    pub omega_i: f64,
}

impl CenterFrequencies {
    pub fn degenerate(omega_p: f64, detuning: f64) -> Self {
        Self {
            omega_p1: omega_p,
            omega_p2: omega_p,
            omega_s: omega_p + detuning,
            omega_i: omega_p - detuning,
        }
    }
}

/// Group-delay quantities governing factorability, all in fs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroupDelayTerms {
    /// Signal/idler group delay relative to pump 2 over the fiber length.
    pub tau_s: f64,
    pub tau_i: f64,
    /// Inter-pump walk-off over the fiber length.
    pub tau_p: f64,
    /// Bandwidth-weighted coefficients of the linearized mismatch.
    pub t_s: f64,
    pub t_i: f64,
    pub variant: TermVariant,
    /// Pump bandwidths the weighting used (rad/fs).
    pub sigma1: f64,
    pub sigma2: f64,
    /// Fiber length the delays were accumulated over (m).
    pub length_m: f64,
    pub centers: CenterFrequencies,
}

/// Computes τ_s, τ_i, τ_p and the bandwidth-weighted T_s, T_i at phasematched
/// center frequencies. Errors with `NotPhasematched` when |Δk| at the centers
/// exceeds the center tolerance.
pub fn group_delay_terms(
    fiber: &FiberModel,
    process: &ProcessSpec,
    centers: CenterFrequencies,
    sigma1: f64,
    sigma2: f64,
    variant: TermVariant,
) -> Result<GroupDelayTerms, PhasematchError> {
    assert!(sigma1 > 0.0 && sigma2 > 0.0, "pump bandwidths must be positive");
    let dk = delta_k(fiber, process, centers.omega_p1, centers.omega_p2, centers.omega_s)?;
    if dk.abs() > TOL_PM_CENTERS {
        return Err(PhasematchError::NotPhasematched(dk.abs()));
    }
    let l_um = fiber.length_m * UM_PER_M;
    let k1_p1 = fiber.mode_dispersion(&process.pump1.mode, centers.omega_p1)?.k1;
    let k1_p2 = fiber.mode_dispersion(&process.pump2.mode, centers.omega_p2)?.k1;
    let k1_s = fiber.mode_dispersion(&process.signal.mode, centers.omega_s)?.k1;
    let k1_i = fiber.mode_dispersion(&process.idler.mode, centers.omega_i)?.k1;
    let tau_s = l_um * (k1_p2 - k1_s);
    let tau_i = l_um * (k1_p2 - k1_i);
    let tau_p = l_um * (k1_p1 - k1_p2);
    let s12 = sigma1 * sigma1;
    let s22 = sigma2 * sigma2;
    let (t_s, t_i) = match variant {
        TermVariant::PumpTwoReferenced => {
            let w = tau_p * s12 / (s12 + s22);
            (tau_s + w, tau_i + w)
        }
        TermVariant::MeanPumpReferenced => {
            let w = (s12 - s22) / (s12 + s22) * tau_p / 2.0;
            (tau_s + tau_p / 2.0 + w, tau_i + tau_p / 2.0 + w)
        }
    };
    Ok(GroupDelayTerms {
        tau_s,
        tau_i,
        tau_p,
        t_s,
        t_i,
        variant,
        sigma1,
        sigma2,
        length_m: fiber.length_m,
        centers,
    })
}

/// Joint-spectrum orientation θ_ωsωi = −arctan(T_s/T_i), folded into
/// (−90°, 90°], and the contour slope angle θ_Δωp = 45° − θ_ωsωi.
pub fn phasematch_angle(terms: &GroupDelayTerms) -> Result<(f64, f64), PhasematchError> {
    if terms.t_s == 0.0 && terms.t_i == 0.0 {
        return Err(PhasematchError::DegenerateTerms);
    }
    let mut theta = (-terms.t_s).atan2(terms.t_i).to_degrees();
    if theta > 90.0 {
        theta -= 180.0;
    } else if theta <= -90.0 {
        theta += 180.0;
    }
    Ok((theta, 45.0 - theta))
}

/// Raman Stokes-band check result.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum RamanOverlap {
    Clear,
    /// At least one photon sits in a pump's Stokes band; fraction is the
    /// normalized depth into the 50-THz band of the deepest offender.
    StokesBand { fraction: f64 },
}

/// Flags whether the signal or idler frequency lies within the ~50 THz
/// Stokes band red-shifted from either pump.
pub fn raman_overlap(centers: &CenterFrequencies) -> RamanOverlap {
    let mut worst: Option<f64> = None;
    for photon in [centers.omega_s, centers.omega_i] {
        for pump in [centers.omega_p1, centers.omega_p2] {
            let red_shift = pump - photon;
            if red_shift > 0.0 && red_shift < RAMAN_BAND_RAD_PER_FS {
                let frac = red_shift / RAMAN_BAND_RAD_PER_FS;
                worst = Some(worst.map_or(frac, |w: f64| w.max(frac)));
            }
        }
    }
    match worst {
        Some(fraction) => RamanOverlap::StokesBand { fraction },
        None => RamanOverlap::Clear,
    }
}

/// Convenience: pump grid helper producing a strictly increasing range.
pub fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// Test fixture shared across the crate: a tabulated two-ZDW synthetic fiber
/// whose quartic n_eff(λ) gives closed phasematching loops between the ZDWs.
pub fn synthetic_two_zdw_fiber(zdw1_um: f64, zdw2_um: f64, curvature: f64) -> FiberModel {
    let n = move |l: f64| {
        1.45 + curvature
            * (l.powi(4) / 12.0 - (zdw1_um + zdw2_um) * l.powi(3) / 6.0
                + zdw1_um * zdw2_um * l * l / 2.0)
    };
    let rows: Vec<(f64, f64)> =
        (0..4000).map(|i| {
            let l = 0.35 + 2.8 * i as f64 / 3999.0;
            (l, n(l))
        }).collect();
    FiberModel::tabulated()
        .add_mode_table(ModeId::Custom("synth".into()), rows)
        .expect("synthetic table is monotone")
        .with_length_m(0.1)
}
