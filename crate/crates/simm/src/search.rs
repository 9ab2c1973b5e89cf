//! The multilevel search driver.
//!
//! Shifts are seeded at the region center and at coarse squares that no
//! existing Krylov record resolves. The region is then refined level by
//! level: resolvable squares get an indicator and admissible ones are
//! subdivided; unresolvable squares are subdivided and deferred, acquiring
//! a local shift once they are small enough. At the finest level marked
//! squares are merged into eigenvalue records; finest squares that remain
//! unresolvable are taken admissible with a warning rather than dropped.

use crate::contour::{indicator, is_resolvable, projection_vector, Square};
use crate::dense::singular_values;
use crate::error::{Error, Result};
use crate::krylov::{build_shift, KrylovTable, ShiftId};
use crate::scalar::{random_complex_vector, Cx, Scalar};
use crate::sparse::MatrixPencil;
use num_complex::Complex;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::collections::BTreeMap;
use std::time::Instant;

/// Rectangular search region.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Region<S: Scalar> {
    pub re_min: S,
    pub re_max: S,
    pub im_min: S,
    pub im_max: S,
}

impl<S: Scalar> Region<S> {
    pub fn new(re_min: S, re_max: S, im_min: S, im_max: S) -> Self {
        Self {
            re_min,
            re_max,
            im_min,
            im_max,
        }
    }

    pub fn width(&self) -> S {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> S {
        self.im_max - self.im_min
    }

    pub fn center(&self) -> Cx<S> {
        let half = S::real(0.5);
        Complex::new(
            (self.re_min + self.re_max) * half,
            (self.im_min + self.im_max) * half,
        )
    }

    pub fn contains_with_margin(&self, z: Cx<S>, margin: S) -> bool {
        z.re >= self.re_min - margin
            && z.re <= self.re_max + margin
            && z.im >= self.im_min - margin
            && z.im <= self.im_max + margin
    }
}

/// All knobs of one search run.
#[derive(Debug, Clone, Serialize)]
pub struct SearchConfig<S: Scalar> {
    pub region: Region<S>,
    /// Target precision: final squares have side at most `h0`.
    pub h0: S,
    /// Residual tolerance for resolvability.
    pub eps: S,
    /// Indicator threshold for admissibility.
    pub delta0: S,
    /// Krylov dimension per shift.
    pub m: usize,
    /// Quadrature count; every square is probed at `2 n0` points.
    pub n0: usize,
    /// Coarse pre-division count along the longer region axis.
    pub coarse_grid: usize,
    /// Hard cap on the number of shifts.
    pub max_shifts: usize,
    pub rng_seed: u64,
    /// Probe vectors for multiplicity estimation; 0 disables it.
    pub multiplicity_k: usize,
    /// Worker threads for indicator evaluation; 0 = serial.
    pub threads: usize,
}

impl<S: Scalar> SearchConfig<S> {
    pub fn new(region: Region<S>) -> Self {
        Self {
            region,
            h0: S::real(1e-6),
            eps: S::real(1e-8),
            delta0: S::real(0.05),
            m: 50,
            n0: 8,
            coarse_grid: 4,
            max_shifts: 256,
            rng_seed: 0,
            multiplicity_k: 0,
            threads: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let r = &self.region;
        if !(r.re_max > r.re_min && r.im_max > r.im_min) {
            return Err(Error::Invalid("region must be non-degenerate".into()));
        }
        if self.h0.is_nan() || self.h0 <= S::zero() {
            return Err(Error::Invalid("h0 must be positive".into()));
        }
        if self.eps.is_nan() || self.eps <= S::zero() {
            return Err(Error::Invalid("eps must be positive".into()));
        }
        if !(self.delta0 > S::zero() && self.delta0 < S::one()) {
            return Err(Error::Invalid("delta0 must lie in (0, 1)".into()));
        }
        if self.m < 2 {
            return Err(Error::Invalid(
                "Krylov dimension m must be at least 2".into(),
            ));
        }
        if self.n0 < 2 {
            return Err(Error::Invalid("n0 must be at least 2".into()));
        }
        if self.coarse_grid == 0 {
            return Err(Error::Invalid("coarse grid count must be positive".into()));
        }
        if self.max_shifts == 0 {
            return Err(Error::Invalid("max_shifts must be positive".into()));
        }
        Ok(())
    }
}

/// Classification of a visited square.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum SquareStatus {
    ContainsEigenvalue,
    Unresolvable,
    Discarded,
}

impl SquareStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            SquareStatus::ContainsEigenvalue => "contains-eigenvalue",
            SquareStatus::Unresolvable => "unresolvable",
            SquareStatus::Discarded => "discarded",
        }
    }
}

/// A visited square with its level and verdict.
#[derive(Debug, Clone)]
pub struct MarkedSquare<S: Scalar> {
    pub square: Square<S>,
    pub level: usize,
    pub status: SquareStatus,
    /// Resolving shift, when one existed.
    pub shift: Option<Cx<S>>,
    /// True for finest squares taken admissible without being resolvable.
    pub warned: bool,
}

/// One located eigenvalue.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenvalueRecord<S: Scalar> {
    pub value: Cx<S>,
    /// Side of the merged cluster's bounding box.
    pub box_size: S,
    /// Shift whose Krylov data resolved the final square.
    pub shift: Cx<S>,
    pub multiplicity: Option<usize>,
    pub warning: Option<String>,
}

/// Run counters; `wall_time_secs` is intentionally excluded from
/// serialization so identical runs serialize identically.
#[derive(Debug, Clone, Default, Serialize)]
pub struct SearchStats {
    pub num_shifts: usize,
    pub num_factorizations: usize,
    pub num_shift_retries: usize,
    pub num_reduced_solves: u64,
    pub num_indicator_evals: u64,
    pub levels: usize,
    pub squares_per_level: Vec<usize>,
    pub filtered_outside: usize,
    #[serde(skip)]
    pub wall_time_secs: f64,
}

/// Result of a search run.
pub struct SearchOutcome<S: Scalar> {
    pub records: Vec<EigenvalueRecord<S>>,
    pub stats: SearchStats,
    /// Run-level warnings (per-record warnings live on the records).
    pub warnings: Vec<String>,
    /// Every square visited, for diagnostics and tree dumps.
    pub tree: Vec<MarkedSquare<S>>,
    /// Set when the shift cap was exhausted; results are then partial.
    pub aborted: Option<String>,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    ix: i64,
    iy: i64,
    level: usize,
}

struct Grid<S: Scalar> {
    anchor: Cx<S>,
    coarse_side: S,
}

impl<S: Scalar> Grid<S> {
    fn side(&self, level: usize) -> S {
        self.coarse_side / S::real(2.0).powi(level as i32)
    }

    fn square(&self, cell: &Cell) -> Square<S> {
        let side = self.side(cell.level);
        let half = S::real(0.5);
        let cx = self.anchor.re + (S::from_i64(cell.ix).unwrap() + half) * side;
        let cy = self.anchor.im + (S::from_i64(cell.iy).unwrap() + half) * side;
        Square::new(Complex::new(cx, cy), side)
    }
}

fn children(cell: &Cell) -> [Cell; 4] {
    let (ix, iy, level) = (cell.ix * 2, cell.iy * 2, cell.level + 1);
    [
        Cell { ix, iy, level },
        Cell {
            ix: ix + 1,
            iy,
            level,
        },
        Cell {
            ix,
            iy: iy + 1,
            level,
        },
        Cell {
            ix: ix + 1,
            iy: iy + 1,
            level,
        },
    ]
}

/// Builds a shift at `sigma0`, perturbing by `(1 + i) * 1e-3 * scale` and
/// retrying up to three times when the factorization hits the spectrum.
fn create_shift<S: Scalar>(
    pencil: &MatrixPencil<S>,
    table: &mut KrylovTable<S>,
    sigma0: Cx<S>,
    scale: S,
    f: &[Cx<S>],
    config: &SearchConfig<S>,
    stats: &mut SearchStats,
) -> Result<ShiftId> {
    let step = Complex::new(S::one(), S::one()).scale(S::real(1e-3) * scale);
    let mut sigma = sigma0;
    let mut last = Error::Invalid("shift creation did not run".into());
    for attempt in 0..4 {
        while table.contains_sigma(sigma) {
            sigma = sigma + step;
        }
        stats.num_factorizations += 1;
        if attempt > 0 {
            stats.num_shift_retries += 1;
        }
        match build_shift(pencil, sigma, f, config.m, false) {
            Ok(sd) => {
                stats.num_shifts += 1;
                return table.push(sd);
            }
            Err(e @ Error::Singular { .. }) => {
                last = e;
                sigma = sigma + step;
            }
            Err(e) => return Err(e),
        }
    }
    Err(last)
}

/// First shift (insertion order) resolving the square; on a miss, builds a
/// new shift at the square center and returns it.
pub fn shift_for_square<S: Scalar>(
    square: &Square<S>,
    table: &mut KrylovTable<S>,
    pencil: &MatrixPencil<S>,
    f: &[Cx<S>],
    config: &SearchConfig<S>,
    stats: &mut SearchStats,
) -> Result<ShiftId> {
    for (id, sd) in table.iter() {
        if is_resolvable(square, sd, config.eps, config.n0) {
            return Ok(id);
        }
    }
    create_shift(pencil, table, square.center, square.side, f, config, stats)
}

/// Merges finest marked squares (8-adjacency on the dyadic grid) into
/// eigenvalue records at the component centroids. Components spanning more
/// than two squares per axis get a "cluster larger than precision" warning.
pub fn merge_marked<S: Scalar>(
    finest: &[MarkedSquare<S>],
) -> (Vec<EigenvalueRecord<S>>, Vec<String>) {
    let mut records = Vec::new();
    let mut warnings = Vec::new();
    if finest.is_empty() {
        return (records, warnings);
    }
    let h = finest[0].square.side;
    let min_re = finest
        .iter()
        .map(|m| m.square.center.re)
        .fold(S::infinity(), S::min);
    let min_im = finest
        .iter()
        .map(|m| m.square.center.im)
        .fold(S::infinity(), S::min);
    let index_of = |sq: &Square<S>| -> (i64, i64) {
        let fx = ((sq.center.re - min_re) / h).round();
        let fy = ((sq.center.im - min_im) / h).round();
        (
            fx.to_i64().expect("grid index fits in i64"),
            fy.to_i64().expect("grid index fits in i64"),
        )
    };

    let mut by_cell: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    for (idx, m) in finest.iter().enumerate() {
        debug_assert_eq!(m.status, SquareStatus::ContainsEigenvalue);
        by_cell.insert(index_of(&m.square), idx);
    }

    let mut visited: BTreeMap<(i64, i64), bool> = BTreeMap::new();
    let keys: Vec<(i64, i64)> = by_cell.keys().copied().collect();
    for key in keys {
        if visited.get(&key).copied().unwrap_or(false) {
            continue;
        }
        // BFS over 8-neighbors
        let mut component = Vec::new();
        let mut queue = vec![key];
        visited.insert(key, true);
        while let Some(k) = queue.pop() {
            component.push(k);
            for dx in -1..=1i64 {
                for dy in -1..=1i64 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let nk = (k.0 + dx, k.1 + dy);
                    if by_cell.contains_key(&nk) && !visited.get(&nk).copied().unwrap_or(false) {
                        visited.insert(nk, true);
                        queue.push(nk);
                    }
                }
            }
        }
        component.sort_unstable();

        let members: Vec<&MarkedSquare<S>> =
            component.iter().map(|k| &finest[by_cell[k]]).collect();
        let len = S::from_usize(members.len()).unwrap();
        let mut sum = Complex::new(S::zero(), S::zero());
        for m in &members {
            sum = sum + m.square.center;
        }
        let value = Complex::new(sum.re / len, sum.im / len);

        let span_x = component.iter().map(|k| k.0).max().unwrap()
            - component.iter().map(|k| k.0).min().unwrap()
            + 1;
        let span_y = component.iter().map(|k| k.1).max().unwrap()
            - component.iter().map(|k| k.1).min().unwrap()
            + 1;
        let box_size = S::from_i64(span_x.max(span_y)).unwrap() * h;

        let shift = members
            .iter()
            .find_map(|m| m.shift)
            .unwrap_or_else(|| members[0].square.center);

        let mut notes = Vec::new();
        if span_x.max(span_y) > 2 {
            let msg = format!(
                "cluster at {value} spans {}x{} finest squares, larger than the precision",
                span_x, span_y
            );
            warnings.push(msg.clone());
            notes.push(msg);
        }
        if members.iter().any(|m| m.warned) {
            let msg =
                format!("record at {value} includes unresolvable finest squares taken admissible");
            warnings.push(msg.clone());
            notes.push(msg);
        }
        records.push(EigenvalueRecord {
            value,
            box_size,
            shift,
            multiplicity: None,
            warning: (!notes.is_empty()).then(|| notes.join("; ")),
        });
    }
    (records, warnings)
}

/// Multiplicity of a record's eigenvalue: the significant-rank of
/// `[P f_1, ..., P f_k]` for fresh random probes projected over the
/// record's final square, all through the record's resolving shift.
pub fn multiplicity<S: Scalar>(
    pencil: &MatrixPencil<S>,
    record: &EigenvalueRecord<S>,
    config: &SearchConfig<S>,
) -> Result<(usize, Option<String>)> {
    let k = config.multiplicity_k;
    if k == 0 {
        return Err(Error::Invalid(
            "multiplicity estimation needs multiplicity_k >= 1".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed ^ 0x9E37_79B9_7F4A_7C15);
    let square = Square::new(record.value, record.box_size);
    let mut cols = Vec::with_capacity(k);
    for _ in 0..k {
        let fi = random_complex_vector(&mut rng, pencil.n());
        let sd = build_shift(pencil, record.shift, &fi, config.m, true)?;
        cols.push(projection_vector(&square, &sd, 2 * config.n0)?);
    }
    let sv = singular_values(&cols)?;
    let s1 = sv[0];
    let count = if s1 <= S::TINY {
        0
    } else {
        sv.iter()
            .filter(|&&s| s > S::real(1e-6) * s1)
            .count()
            .min(k)
    };
    let warn = (count == k).then(|| {
        format!(
            "multiplicity at {} may be undercounted: all {k} probes significant, increase k",
            record.value
        )
    });
    Ok((count, warn))
}

enum CellOutcome {
    Admissible { shift: Option<ShiftId> },
    Discarded,
    Unresolvable,
    TakenAdmissible,
}

/// Runs the full multilevel search.
pub fn sim_m<S: Scalar>(
    pencil: &MatrixPencil<S>,
    config: &SearchConfig<S>,
) -> Result<SearchOutcome<S>> {
    config.validate()?;
    let t0 = Instant::now();
    let n = pencil.n();
    let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
    let f = random_complex_vector::<S, _>(&mut rng, n);

    let mut table = KrylovTable::new();
    let mut stats = SearchStats::default();
    let mut warnings: Vec<String> = Vec::new();
    let mut aborted: Option<String> = None;
    let mut tree: Vec<MarkedSquare<S>> = Vec::new();

    let region = config.region;
    let width = region.width();
    let height = region.height();
    let max_extent = width.max(height);
    let coarse_side = max_extent / S::from_usize(config.coarse_grid).unwrap();
    let grid = Grid {
        anchor: Complex::new(region.re_min, region.im_min),
        coarse_side,
    };

    // number of halvings from the coarse side down to h0
    let mut k_levels = 0usize;
    {
        let mut side = coarse_side;
        while side > config.h0 {
            side = side / S::real(2.0);
            k_levels += 1;
        }
    }
    stats.levels = k_levels;

    // shift seeded at the region center
    if let Err(e) = create_shift(
        pencil,
        &mut table,
        region.center(),
        max_extent,
        &f,
        config,
        &mut stats,
    ) {
        warnings.push(format!("seed shift at the region center failed: {e}"));
    }

    // coarse pre-division covering the rectangle (squares may overhang the
    // shorter axis; out-of-region records are filtered at the end)
    let count_along = |extent: S| -> i64 {
        let ratio = (extent / coarse_side).to_f64().unwrap_or(1.0);
        ((ratio - 1e-9).ceil() as i64).max(1)
    };
    let nx = count_along(width);
    let ny = count_along(height);
    let mut current: Vec<Cell> = Vec::new();
    for iy in 0..ny {
        for ix in 0..nx {
            current.push(Cell { ix, iy, level: 0 });
        }
    }

    // ensure every coarse square has a resolving shift
    for cell in current.clone() {
        let square = grid.square(&cell);
        let resolved = table
            .iter()
            .any(|(_, sd)| is_resolvable(&square, sd, config.eps, config.n0));
        if resolved {
            continue;
        }
        if table.len() >= config.max_shifts {
            if aborted.is_none() {
                aborted = Some(format!(
                    "shift cap max_shifts = {} reached during coarse seeding; \
                     continuing without new shifts, results may be partial",
                    config.max_shifts
                ));
            }
            break;
        }
        if let Err(e) = create_shift(
            pencil,
            &mut table,
            square.center,
            square.side,
            &f,
            config,
            &mut stats,
        ) {
            warnings.push(format!(
                "no shift for coarse square at {}: {e}",
                square.center
            ));
        }
    }

    let pool = (config.threads > 0)
        .then(|| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.threads)
                .build()
                .ok()
        })
        .flatten();

    // final marked squares at level K
    let mut finals: Vec<MarkedSquare<S>> = Vec::new();

    for level in 0..=k_levels {
        stats.squares_per_level.push(current.len());
        if current.is_empty() {
            break;
        }
        let squares: Vec<Square<S>> = current.iter().map(|c| grid.square(c)).collect();

        // phase A: evaluate against a snapshot of the table
        let table_ref = &table;
        let phase_a: Vec<crate::contour::IndicatorValue<S>> = match &pool {
            Some(pool) => pool.install(|| {
                squares
                    .par_iter()
                    .map(|sq| indicator(sq, table_ref, config.eps, config.n0))
                    .collect()
            }),
            None => squares
                .iter()
                .map(|sq| indicator(sq, table_ref, config.eps, config.n0))
                .collect(),
        };
        stats.num_indicator_evals += squares.len() as u64;
        for iv in &phase_a {
            stats.num_reduced_solves += iv.reduced_solves as u64;
        }

        // phase B: serial pass in cell order; unresolved squares may create
        // shifts, which requires re-evaluating later unresolved squares
        let side = grid.side(level);
        let may_spawn = side < coarse_side / S::real(4.0);
        let mut created_since_snapshot = false;
        let mut next: Vec<Cell> = Vec::new();

        for (cell, (square, mut iv)) in current.iter().zip(squares.into_iter().zip(phase_a)) {
            if !iv.resolvable && created_since_snapshot {
                iv = indicator(&square, &table, config.eps, config.n0);
                stats.num_indicator_evals += 1;
                stats.num_reduced_solves += iv.reduced_solves as u64;
            }
            if !iv.resolvable && may_spawn {
                if table.len() >= config.max_shifts {
                    if aborted.is_none() {
                        aborted = Some(format!(
                            "shift cap max_shifts = {} reached at level {level}; \
                             continuing without new shifts, results may be partial",
                            config.max_shifts
                        ));
                    }
                } else {
                    match create_shift(
                        pencil,
                        &mut table,
                        square.center,
                        square.side,
                        &f,
                        config,
                        &mut stats,
                    ) {
                        Ok(_) => {
                            created_since_snapshot = true;
                            iv = indicator(&square, &table, config.eps, config.n0);
                            stats.num_indicator_evals += 1;
                            stats.num_reduced_solves += iv.reduced_solves as u64;
                        }
                        Err(_) => {
                            // repeated singular factorizations: stays unresolvable
                        }
                    }
                }
            }

            let outcome = if iv.resolvable {
                if iv.value > config.delta0 {
                    CellOutcome::Admissible {
                        shift: iv.shift_used,
                    }
                } else {
                    CellOutcome::Discarded
                }
            } else if level == k_levels {
                CellOutcome::TakenAdmissible
            } else {
                CellOutcome::Unresolvable
            };

            let (status, warned, shift_sigma) = match &outcome {
                CellOutcome::Admissible { shift } => (
                    SquareStatus::ContainsEigenvalue,
                    false,
                    shift.map(|id| table.get(id).sigma()),
                ),
                CellOutcome::Discarded => (SquareStatus::Discarded, false, None),
                CellOutcome::Unresolvable => (SquareStatus::Unresolvable, false, None),
                CellOutcome::TakenAdmissible => (SquareStatus::ContainsEigenvalue, true, None),
            };
            let marked = MarkedSquare {
                square,
                level,
                status,
                shift: shift_sigma,
                warned,
            };
            tree.push(marked.clone());

            match outcome {
                CellOutcome::Admissible { .. } | CellOutcome::TakenAdmissible
                    if level == k_levels =>
                {
                    finals.push(marked);
                }
                CellOutcome::Admissible { .. } | CellOutcome::Unresolvable => {
                    next.extend(children(cell));
                }
                _ => {}
            }
        }
        current = next;
    }

    let (mut records, merge_warnings) = merge_marked(&finals);
    warnings.extend(merge_warnings);

    // records outside the region (beyond an h0 margin from the overhanging
    // circles) are dropped with a note in the stats
    records.retain(|r| {
        let keep = region.contains_with_margin(r.value, config.h0);
        if !keep {
            stats.filtered_outside += 1;
        }
        keep
    });
    records.sort_by(|a, b| {
        a.value
            .re
            .partial_cmp(&b.value.re)
            .unwrap()
            .then(a.value.im.partial_cmp(&b.value.im).unwrap())
    });

    if config.multiplicity_k > 0 {
        for record in &mut records {
            match multiplicity(pencil, record, config) {
                Ok((count, warn)) => {
                    record.multiplicity = Some(count);
                    if let Some(w) = warn {
                        warnings.push(w);
                    }
                }
                Err(e) => {
                    warnings.push(format!(
                        "multiplicity estimation failed at {}: {e}",
                        record.value
                    ));
                }
            }
        }
    }

    if let Some(msg) = &aborted {
        warnings.push(msg.clone());
    }
    stats.wall_time_secs = t0.elapsed().as_secs_f64();
    Ok(SearchOutcome {
        records,
        stats,
        warnings,
        tree,
        aborted,
    })
}
