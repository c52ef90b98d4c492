//! Convergence sweeps over the lattice level `h`.

use std::time::Instant;

use rayon::prelude::*;

use crate::assembly::{h1_seminorm_sq, l2_norm_sq, stiffness};
use crate::capacity::{mu_capacity, potential_on_mesh, CapacityMeasure};
use crate::error::{Error, Result};
use crate::geometry::{dist, Region};
use crate::mesh::{Field, Mesh};
use crate::pde::{corrector_field, energy_functional, field_metrics, solve_dirichlet_perforated, solve_relaxed, PerforationOptions};
use crate::perforation::{build_holes_cached, holes_report, HoleFamily, RadiusCache};

use super::config::{Mode, ScenarioConfig};
use super::report::{ConvergenceReport, ConvergenceRow, ReferenceInfo};

/// Everything a sweep computed, for callers that inspect fields.
#[derive(Debug, Clone)]
pub struct SweepArtifacts {
    pub report: ConvergenceReport,
    /// Relaxed solution of `μ₀` on the finest mesh; absent in corrector-only
    /// mode.
    pub reference: Option<Field>,
    /// Per `h`, in sweep order.
    pub families: Vec<HoleFamily>,
    pub solutions: Vec<Option<Field>>,
    pub correctors: Vec<Option<Field>>,
}

/// Builds the hole families and rejects holes the sweep meshes cannot
/// resolve (unless nearest-node pinning is enabled).
pub fn preflight(cfg: &ScenarioConfig, cache: &RadiusCache) -> Result<Vec<HoleFamily>> {
    if cfg.mode == Mode::Classic && cfg.measure.has_atoms() {
        return Err(Error::AtomsPresent("classic mode needs an atom-free measure; use mode = singular".into()));
    }
    let mut families = Vec::with_capacity(cfg.h_list.len());
    for &h in &cfg.h_list {
        let family = build_holes_cached(&cfg.domain, &cfg.measure, &cfg.operator, h, cache)?;
        let report = holes_report(&family, cfg.spacing_for(h));
        if !report.resolvable && !cfg.pin_nearest {
            return Err(Error::UnderResolved(format!(
                "h = {h}: smallest hole radius {:.3e} is below two cells of {:.3e}",
                report.min_radius, report.spacing
            )));
        }
        families.push(family);
    }
    Ok(families)
}

pub fn run_sweep(cfg: &ScenarioConfig) -> Result<ConvergenceReport> {
    run_sweep_detailed(cfg).map(|a| a.report)
}

struct LevelOutput {
    row: ConvergenceRow,
    solution: Option<Field>,
    corrector: Option<Field>,
}

pub fn run_sweep_detailed(cfg: &ScenarioConfig) -> Result<SweepArtifacts> {
    let cache = RadiusCache::new();
    let families = preflight(cfg, &cache)?;
    let mu0 = cfg.measure.decompose().mu0;
    let fine = Mesh::new(&cfg.domain, cfg.finest_spacing())?;

    let (reference, ref_l2) = if cfg.mode == Mode::CorrectorOnly {
        (None, None)
    } else {
        let (u, _) = solve_relaxed(&mu0, &cfg.operator, &cfg.load, &fine, &cfg.solver)?;
        let norm = l2_norm_sq(&u).sqrt();
        (Some(u), Some(norm))
    };
    let info = ReferenceInfo {
        mode: cfg.mode,
        operator: cfg.operator.fingerprint(),
        measure: if cfg.measure.has_atoms() {
            format!("density and segments of mu ({} atoms dropped)", cfg.measure.atoms.len())
        } else {
            "mu (atom-free)".to_string()
        },
        spacing: fine.spacing(),
        l2_norm: ref_l2,
    };

    let outputs: Vec<LevelOutput> = cfg
        .h_list
        .par_iter()
        .zip(families.par_iter())
        .map(|(&h, family)| {
            let start = Instant::now();
            let spacing = cfg.spacing_for(h);
            let summary = holes_report(family, spacing);
            let mut row = ConvergenceRow::empty(h, &summary);
            match run_level(cfg, family, spacing, reference.as_ref(), ref_l2) {
                Ok((metrics, solution, corrector)) => {
                    row.fill(metrics);
                    row.runtime_ms = if cfg.deterministic { 0.0 } else { start.elapsed().as_secs_f64() * 1e3 };
                    LevelOutput { row, solution, corrector: Some(corrector) }
                }
                Err(e) => {
                    row.failure = Some(e.to_string());
                    LevelOutput { row, solution: None, corrector: None }
                }
            }
        })
        .collect();

    let mut rows = Vec::with_capacity(outputs.len());
    let mut solutions = Vec::with_capacity(outputs.len());
    let mut correctors = Vec::with_capacity(outputs.len());
    for o in outputs {
        rows.push(o.row);
        solutions.push(o.solution);
        correctors.push(o.corrector);
    }
    Ok(SweepArtifacts {
        report: ConvergenceReport { reference: info, rows },
        reference,
        families,
        solutions,
        correctors,
    })
}

pub(crate) struct LevelMetrics {
    pub l2: Option<f64>,
    pub rel_l2: Option<f64>,
    pub h1: Option<f64>,
    pub energy: Option<f64>,
    pub corrector_l2: f64,
}

fn run_level(
    cfg: &ScenarioConfig,
    family: &HoleFamily,
    spacing: f64,
    reference: Option<&Field>,
    ref_l2: Option<f64>,
) -> Result<(LevelMetrics, Option<Field>, Field)> {
    let mesh = Mesh::new(&cfg.domain, spacing)?;
    let w = corrector_field(family, &cfg.operator, &mesh)?;
    let deficit = Field { mesh, values: w.values.iter().map(|v| v - 1.0).collect() };
    let corrector_l2 = l2_norm_sq(&deficit).sqrt();
    let (Some(reference), Some(ref_l2)) = (reference, ref_l2) else {
        return Ok((LevelMetrics { l2: None, rel_l2: None, h1: None, energy: None, corrector_l2 }, None, w));
    };
    let opts = PerforationOptions { solver: cfg.solver, pin_nearest: cfg.pin_nearest };
    let (u, _) = solve_dirichlet_perforated(family, &cfg.operator, &cfg.load, &mesh, &opts)?;
    let m = field_metrics(&u, reference)?;
    let metrics = LevelMetrics {
        l2: Some(m.l2),
        rel_l2: Some(if ref_l2 > 0.0 { m.l2 / ref_l2 } else if m.l2 == 0.0 { 0.0 } else { f64::INFINITY }),
        h1: Some(m.h1),
        energy: Some(energy_functional(&u, &cfg.measure, &cfg.operator)),
        corrector_l2,
    };
    Ok((metrics, Some(u), w))
}

/// Lower semicontinuity check on concentric disks `A ⊂ B` around the
/// centre of `Ω`: `cap_μ^L(A, B)` against `cap^L(E_h ∩ A, B)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProbeResult {
    pub mu_capacity: f64,
    pub holes_capacity: f64,
    /// `mu_capacity / holes_capacity - 1`.
    pub excess: f64,
}

/// `A = B_{inner}`, `B = B_{outer}`; hole nodes are those strictly inside
/// a hole of `family` and inside `A`, on the lattice of the sweep mesh.
pub fn semicontinuity_probe(
    cfg: &ScenarioConfig,
    family: &HoleFamily,
    inner: f64,
    outer: f64,
    spacing: f64,
) -> Result<ProbeResult> {
    let c = cfg.domain.center();
    let a = Region::disk(c, inner);
    let b = Region::disk(c, outer);
    let mu0 = cfg.measure.decompose().mu0;
    let cap_mu = mu_capacity(&a, &b, CapacityMeasure::Measure(&mu0), &cfg.operator, spacing)?;

    let bbox = b.bbox().ok_or_else(|| Error::Geometry("empty probe disk".into()))?;
    let mesh = Mesh::covering(&bbox, cfg.domain.min, spacing);
    let holes: Vec<_> = family.active().filter(|h| dist(h.center, c) < inner + h.radius).collect();
    let pts: Vec<_> = (0..mesh.node_count()).map(|k| mesh.node_point(k)).collect();
    let in_holes: Vec<bool> = pts
        .iter()
        .map(|&p| dist(p, c) <= inner && holes.iter().any(|h| dist(p, h.center) < h.radius))
        .collect();
    let off_b: Vec<bool> = pts.iter().map(|&p| !b.contains_open(p)).collect();
    let k = stiffness(&mesh, &cfg.operator);
    let cap_holes = potential_on_mesh(mesh, &k, &in_holes, &off_b)?.cap_value;
    Ok(ProbeResult {
        mu_capacity: cap_mu,
        holes_capacity: cap_holes,
        excess: cap_mu / cap_holes - 1.0,
    })
}

/// `α ∫ |∇w|²` of a corrector.
pub fn corrector_energy(w: &Field, alpha: f64) -> f64 {
    alpha * h1_seminorm_sq(w)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::parse_config;
    use crate::pde::solve_dirichlet;

    fn cfg(measure: &str, sweep: &str) -> ScenarioConfig {
        parse_config(&format!("[measure]\n{measure}\n[load]\ntype = product-sine\n[sweep]\n{sweep}\ndeterministic = true\n")).unwrap()
    }

    #[test]
    fn zero_measure_matches_unperforated_solve() {
        let c = cfg("density = zero", "h = 3, 5\nspacing = 1/64");
        let art = run_sweep_detailed(&c).unwrap();
        let mesh = Mesh::new(&c.domain, 1.0 / 64.0).unwrap();
        let (plain, _) = solve_dirichlet(&c.operator, &c.load, &mesh, &c.solver).unwrap();
        for (row, u) in art.report.rows.iter().zip(&art.solutions) {
            assert_eq!(row.holes, 0);
            assert_eq!(u.as_ref().unwrap().values, plain.values);
            assert_eq!(row.l2_err, Some(0.0));
            assert_eq!(row.corrector_l2, Some(0.0));
        }
    }

    #[test]
    fn deterministic_reports() {
        let c = cfg("density = constant\nvalue = 200", "h = 3, 4\nspacing = 1/96");
        let a = run_sweep(&c).unwrap();
        let b = run_sweep(&c).unwrap();
        assert_eq!(a.to_csv(), b.to_csv());
        assert_eq!(a.rows.iter().map(|r| r.h).collect::<Vec<_>>(), vec![3, 4]);
        assert!(a.rows.iter().all(|r| r.runtime_ms == 0.0 && !r.failed()));
        assert_eq!(a.rows[1].holes, 4);
        assert!((a.rows[1].min_radius - 0.075616).abs() < 1e-5);
        let e = a.rows.iter().map(|r| r.rel_l2_err.unwrap()).collect::<Vec<_>>();
        assert!(e.iter().all(|x| x.is_finite() && *x > 0.0));
    }

    #[test]
    fn preflight_rejections() {
        let c = cfg("density = constant\nvalue = 200\natoms = (0.51, 0.53, 1)", "h = 4\nspacing = 1/64\nmode = classic");
        assert!(matches!(run_sweep(&c), Err(Error::AtomsPresent(_))));
        let c = cfg("density = constant\nvalue = 200", "h = 8\nspacing = 1/64");
        assert!(matches!(run_sweep(&c), Err(Error::UnderResolved(_))));
        let c = cfg("density = constant\nvalue = 200", "h = 8\nspacing = 1/64\npin_nearest = true");
        assert!(run_sweep(&c).is_ok());
    }

    #[test]
    fn corrector_only_mode() {
        let c = cfg("density = constant\nvalue = 100", "h = 4\nspacing = 1/128\nmode = corrector-only");
        let art = run_sweep_detailed(&c).unwrap();
        assert!(art.reference.is_none() && art.solutions[0].is_none());
        let row = &art.report.rows[0];
        assert!(row.l2_err.is_none() && row.energy.is_none());
        assert!(row.corrector_l2.unwrap() > 0.0);
        let e = corrector_energy(art.correctors[0].as_ref().unwrap(), 1.0);
        assert!(e <= 1.03 * c.measure.total_mass() && e > 0.5 * art.families[0].total_mass(), "{e}");
    }
}
