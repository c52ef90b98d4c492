//! Scenario files: INI-style sections `[domain]`, `[operator]`,
//! `[measure]`, `[load]` and `[sweep]` with `key = value` lines. Lists are
//! comma separated, tuples are parenthesised and separated by `;`, e.g.
//! `atoms = (0.51, 0.53, 1); (0.2, 0.2, 0.5)`. Comments start with `#` or
//! `;` at the beginning of a line.
//!
//! ```text
//! [domain]
//! min = 0, 0
//! max = 1, 1
//!
//! [operator]
//! type = laplace          # laplace | matrix | scalar | checkerboard | radial
//!
//! [measure]
//! density = constant      # zero | constant | radial | checkerboard
//! value = 200
//! atoms = (0.51, 0.53, 1)
//!
//! [load]
//! type = product-sine     # zero | constant | product-sine | bump
//! amplitude = 1
//!
//! [sweep]
//! h = 4, 6, 8
//! spacing = 1/1024
//! mode = classic          # classic | singular | corrector-only
//! ```

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{ConfigIssue, Error, Result};
use crate::geometry::{Point, Rect};
use crate::linalg::SolverOptions;
use crate::measures::{Atom, Density, MeasureSpec, Segment};
use crate::operator::{Coefficient, EllipticOperator, ScalarField};
use crate::pde::Load;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Perforated solutions against the relaxed solution of `μ`.
    Classic,
    /// Holes from the full `μ`, errors against the relaxed solution of `μ₀`.
    Singular,
    /// Holes and correctors only, no perforated solves.
    CorrectorOnly,
}

impl Mode {
    fn parse(s: &str) -> Option<Mode> {
        match s {
            "classic" => Some(Mode::Classic),
            "singular" => Some(Mode::Singular),
            "corrector-only" => Some(Mode::CorrectorOnly),
            _ => None,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Mode::Classic => "classic",
            Mode::Singular => "singular",
            Mode::CorrectorOnly => "corrector-only",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub domain: Rect,
    pub operator: EllipticOperator,
    pub measure: MeasureSpec,
    pub load: Load,
    /// Strictly increasing.
    pub h_list: Vec<u32>,
    /// Mesh spacing per `h`; a single global spacing is repeated.
    pub spacings: Vec<f64>,
    pub mode: Mode,
    pub seed: u64,
    pub solver: SolverOptions,
    pub pin_nearest: bool,
    /// Write `runtime_ms = 0` so reports are byte-reproducible.
    pub deterministic: bool,
}

impl ScenarioConfig {
    pub fn spacing_for(&self, h: u32) -> f64 {
        let idx = self.h_list.iter().position(|&x| x == h);
        idx.map_or(*self.spacings.last().unwrap_or(&0.0), |i| self.spacings[i])
    }

    /// Finest spacing of the sweep, used for the reference solve.
    pub fn finest_spacing(&self) -> f64 {
        self.spacings.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
struct Entry {
    value: String,
    line: usize,
    used: bool,
}

type Sections = BTreeMap<String, BTreeMap<String, Entry>>;

const SECTIONS: [&str; 5] = ["domain", "operator", "measure", "load", "sweep"];

fn tokenize(text: &str, issues: &mut Vec<ConfigIssue>) -> Sections {
    let mut sections: Sections = BTreeMap::new();
    let mut current: Option<String> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let body = match raw.find('#') {
            Some(p) => &raw[..p],
            None => raw,
        }
        .trim();
        if body.is_empty() || body.starts_with(';') {
            continue;
        }
        if let Some(rest) = body.strip_prefix('[') {
            match rest.strip_suffix(']') {
                Some(name) if SECTIONS.contains(&name.trim()) => {
                    let name = name.trim().to_string();
                    if sections.contains_key(&name) {
                        issues.push(ConfigIssue { line: Some(line), message: format!("duplicate section [{name}]") });
                    }
                    sections.entry(name.clone()).or_default();
                    current = Some(name);
                }
                Some(name) => {
                    issues.push(ConfigIssue { line: Some(line), message: format!("unknown section [{}]", name.trim()) });
                    current = None;
                }
                None => issues.push(ConfigIssue { line: Some(line), message: "unterminated section header".into() }),
            }
            continue;
        }
        let Some((key, value)) = body.split_once('=') else {
            issues.push(ConfigIssue { line: Some(line), message: format!("expected `key = value`, found `{body}`") });
            continue;
        };
        let Some(section) = &current else {
            issues.push(ConfigIssue { line: Some(line), message: "key outside of any known section".into() });
            continue;
        };
        let key = key.trim().to_string();
        let map = sections.get_mut(section).expect("section registered");
        if map.contains_key(&key) {
            issues.push(ConfigIssue { line: Some(line), message: format!("duplicate key `{key}` in [{section}]") });
        }
        map.insert(key, Entry { value: value.trim().to_string(), line, used: false });
    }
    sections
}

struct Reader<'a> {
    sections: &'a mut Sections,
    issues: &'a mut Vec<ConfigIssue>,
}

fn parse_number(s: &str) -> Option<f64> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once('/') {
        let (a, b) = (a.trim().parse::<f64>().ok()?, b.trim().parse::<f64>().ok()?);
        return (b != 0.0).then(|| a / b);
    }
    s.parse::<f64>().ok().filter(|v| v.is_finite())
}

fn parse_list(s: &str) -> Option<Vec<f64>> {
    s.split(',').map(parse_number).collect()
}

fn parse_tuples(s: &str, arity: usize) -> std::result::Result<Vec<Vec<f64>>, String> {
    s.split(';')
        .map(str::trim)
        .filter(|t| !t.is_empty())
        .map(|t| {
            let inner = t
                .strip_prefix('(')
                .and_then(|t| t.strip_suffix(')'))
                .ok_or_else(|| format!("expected a parenthesised tuple, found `{t}`"))?;
            let v = parse_list(inner).ok_or_else(|| format!("non-numeric entry in `{t}`"))?;
            if v.len() != arity {
                return Err(format!("tuple `{t}` has {} entries, expected {arity}", v.len()));
            }
            Ok(v)
        })
        .collect()
}

impl Reader<'_> {
    fn take(&mut self, section: &str, key: &str) -> Option<(String, usize)> {
        let e = self.sections.get_mut(section)?.get_mut(key)?;
        e.used = true;
        Some((e.value.clone(), e.line))
    }

    fn issue(&mut self, line: Option<usize>, message: impl Into<String>) {
        self.issues.push(ConfigIssue { line, message: message.into() });
    }

    fn number(&mut self, section: &str, key: &str, default: Option<f64>) -> Option<f64> {
        match self.take(section, key) {
            Some((v, line)) => {
                let parsed = parse_number(&v);
                if parsed.is_none() {
                    self.issue(Some(line), format!("[{section}] {key}: `{v}` is not a number"));
                }
                parsed
            }
            None => {
                if default.is_none() {
                    self.issue(None, format!("[{section}] missing required key `{key}`"));
                }
                default
            }
        }
    }

    fn point(&mut self, section: &str, key: &str, default: Point) -> Point {
        match self.take(section, key) {
            Some((v, line)) => match parse_list(v.trim_start_matches('(').trim_end_matches(')')) {
                Some(p) if p.len() == 2 => [p[0], p[1]],
                _ => {
                    self.issue(Some(line), format!("[{section}] {key}: expected `x, y`, found `{v}`"));
                    default
                }
            },
            None => default,
        }
    }

    fn word(&mut self, section: &str, key: &str, default: &str) -> (String, Option<usize>) {
        match self.take(section, key) {
            Some((v, line)) => (v.to_ascii_lowercase(), Some(line)),
            None => (default.to_string(), None),
        }
    }

    fn flag(&mut self, section: &str, key: &str) -> bool {
        match self.take(section, key) {
            Some((v, line)) => match v.to_ascii_lowercase().as_str() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                _ => {
                    self.issue(Some(line), format!("[{section}] {key}: expected true or false, found `{v}`"));
                    false
                }
            },
            None => false,
        }
    }
}

fn read_domain(r: &mut Reader) -> Option<Rect> {
    let min = r.point("domain", "min", [0.0, 0.0]);
    let max = r.point("domain", "max", [1.0, 1.0]);
    match Rect::new(min, max) {
        Ok(rect) => Some(rect),
        Err(e) => {
            r.issue(None, format!("[domain] {e}"));
            None
        }
    }
}

fn read_operator(r: &mut Reader) -> Option<EllipticOperator> {
    let (kind, line) = r.word("operator", "type", "laplace");
    let alpha = r.number("operator", "alpha", Some(1.0))?;
    let coefficient = match kind.as_str() {
        "laplace" => Coefficient::Laplace,
        "matrix" => Coefficient::Matrix {
            a11: r.number("operator", "a11", None)?,
            a12: r.number("operator", "a12", Some(0.0))?,
            a22: r.number("operator", "a22", None)?,
        },
        "scalar" => Coefficient::Scalar(ScalarField::Constant(r.number("operator", "a", None)?)),
        "checkerboard" => Coefficient::Scalar(ScalarField::Checkerboard {
            a: r.number("operator", "a", None)?,
            b: r.number("operator", "b", None)?,
            k: r.number("operator", "k", None)? as u32,
        }),
        "radial" => Coefficient::Scalar(ScalarField::Radial {
            center: r.point("operator", "center", [0.5, 0.5]),
            base: r.number("operator", "base", None)?,
            slope: r.number("operator", "slope", None)?,
        }),
        other => {
            r.issue(line, format!("[operator] unknown type `{other}`"));
            return None;
        }
    };
    match EllipticOperator::new(coefficient, alpha) {
        Ok(op) => Some(op),
        Err(e) => {
            r.issue(line, format!("[operator] {e}"));
            None
        }
    }
}

fn read_measure(r: &mut Reader, domain: Rect) -> Option<MeasureSpec> {
    let (kind, line) = r.word("measure", "density", "zero");
    let density = match kind.as_str() {
        "zero" => Density::Zero,
        "constant" => Density::Constant(r.number("measure", "value", None)?),
        "radial" => Density::Radial {
            coeff: r.number("measure", "coeff", None)?,
            center: r.point("measure", "center", [0.5, 0.5]),
            exponent: r.number("measure", "exponent", None)?,
        },
        "checkerboard" => Density::Checkerboard {
            a: r.number("measure", "a", None)?,
            b: r.number("measure", "b", None)?,
            k: r.number("measure", "k", None)? as u32,
        },
        other => {
            r.issue(line, format!("[measure] unknown density `{other}`"));
            return None;
        }
    };
    let density = match r.take("measure", "truncate") {
        Some((v, line)) => match parse_number(&v) {
            Some(cap) => Density::Truncated { base: Box::new(density), cap },
            None => {
                r.issue(Some(line), format!("[measure] truncate: `{v}` is not a number"));
                density
            }
        },
        None => density,
    };
    let mut ok = true;
    let mut atoms = Vec::new();
    if let Some((v, line)) = r.take("measure", "atoms") {
        match parse_tuples(&v, 3) {
            Ok(ts) => {
                for t in ts {
                    let position = [t[0], t[1]];
                    if !domain.contains_open(position) {
                        r.issue(Some(line), format!("atom at ({}, {}) outside Ω", t[0], t[1]));
                        ok = false;
                    }
                    atoms.push(Atom { position, mass: t[2] });
                }
            }
            Err(e) => {
                r.issue(Some(line), format!("[measure] atoms: {e}"));
                ok = false;
            }
        }
    }
    let mut segments = Vec::new();
    if let Some((v, line)) = r.take("measure", "segments") {
        match parse_tuples(&v, 5) {
            Ok(ts) => segments.extend(ts.into_iter().map(|t| Segment { start: [t[0], t[1]], end: [t[2], t[3]], density: t[4] })),
            Err(e) => {
                r.issue(Some(line), format!("[measure] segments: {e}"));
                ok = false;
            }
        }
    }
    if !ok {
        return None;
    }
    match MeasureSpec::new(domain, density, atoms, segments) {
        Ok(m) => Some(m),
        Err(e) => {
            r.issue(line, format!("[measure] {e}"));
            None
        }
    }
}

fn read_load(r: &mut Reader) -> Option<Load> {
    let (kind, line) = r.word("load", "type", "product-sine");
    Some(match kind.as_str() {
        "zero" => Load::Zero,
        "constant" => Load::Constant(r.number("load", "value", Some(1.0))?),
        "product-sine" => Load::ProductSine { amplitude: r.number("load", "amplitude", Some(1.0))? },
        "bump" => Load::Bump {
            center: r.point("load", "center", [0.5, 0.5]),
            radius: r.number("load", "radius", Some(0.25))?,
            height: r.number("load", "height", Some(1.0))?,
        },
        other => {
            r.issue(line, format!("[load] unknown type `{other}`"));
            return None;
        }
    })
}

struct SweepPart {
    h_list: Vec<u32>,
    spacings: Vec<f64>,
    mode: Mode,
    seed: u64,
    solver: SolverOptions,
    pin_nearest: bool,
    deterministic: bool,
}

fn read_sweep(r: &mut Reader, domain: &Rect) -> Option<SweepPart> {
    let mut ok = true;
    let h_list: Vec<u32> = match r.take("sweep", "h") {
        Some((v, line)) => match parse_list(&v) {
            Some(hs) if !hs.is_empty() && hs.iter().all(|h| *h >= 1.0 && h.fract() == 0.0) => {
                let hs: Vec<u32> = hs.iter().map(|h| *h as u32).collect();
                if hs.windows(2).any(|w| w[1] <= w[0]) {
                    r.issue(Some(line), "h-list must be strictly increasing");
                    ok = false;
                }
                hs
            }
            _ => {
                r.issue(Some(line), format!("[sweep] h: expected positive integers, found `{v}`"));
                return None;
            }
        },
        None => {
            r.issue(None, "[sweep] missing required key `h`");
            return None;
        }
    };
    let spacings = match r.take("sweep", "spacing") {
        Some((v, line)) => match parse_list(&v) {
            Some(s) if s.len() == 1 => vec![s[0]; h_list.len()],
            Some(s) if s.len() == h_list.len() => s,
            Some(_) => {
                r.issue(Some(line), "[sweep] spacing: give one value or one per h");
                return None;
            }
            None => {
                r.issue(Some(line), format!("[sweep] spacing: `{v}` is not a number list"));
                return None;
            }
        },
        None => vec![1.0 / 256.0; h_list.len()],
    };
    for s in &spacings {
        let fits = |len: f64| {
            let n = len / s;
            *s > 0.0 && (n - n.round()).abs() <= 1e-9 * n.max(1.0)
        };
        if !(fits(domain.width()) && fits(domain.height())) {
            r.issue(None, format!("[sweep] spacing {s} does not divide the domain sides"));
            ok = false;
        }
    }
    let (mode_word, line) = r.word("sweep", "mode", "classic");
    let mode = match Mode::parse(&mode_word) {
        Some(m) => m,
        None => {
            r.issue(line, format!("[sweep] unknown mode `{mode_word}`"));
            return None;
        }
    };
    let seed = r.number("sweep", "seed", Some(0.0))? as u64;
    let rel_tol = r.number("sweep", "tolerance", Some(SolverOptions::default().rel_tol))?;
    if !(rel_tol > 0.0 && rel_tol < 1.0) {
        r.issue(None, "[sweep] tolerance must lie in (0, 1)");
        ok = false;
    }
    let pin_nearest = r.flag("sweep", "pin_nearest");
    let deterministic = r.flag("sweep", "deterministic");
    ok.then_some(SweepPart {
        h_list,
        spacings,
        mode,
        seed,
        solver: SolverOptions { rel_tol, max_iter: None },
        pin_nearest,
        deterministic,
    })
}

/// Parses and validates a scenario. All problems found are reported
/// together.
pub fn parse_config(text: &str) -> Result<ScenarioConfig> {
    let mut issues = Vec::new();
    let mut sections = tokenize(text, &mut issues);
    let mut r = Reader { sections: &mut sections, issues: &mut issues };
    let domain = read_domain(&mut r);
    let operator = read_operator(&mut r);
    let measure = domain.and_then(|d| read_measure(&mut r, d));
    let load = read_load(&mut r);
    let sweep = domain.as_ref().and_then(|d| read_sweep(&mut r, d));
    for (name, keys) in sections.iter() {
        for (key, e) in keys {
            if !e.used {
                issues.push(ConfigIssue { line: Some(e.line), message: format!("unknown key `{key}` in [{name}]") });
            }
        }
    }
    match (domain, operator, measure, load, sweep) {
        (Some(domain), Some(operator), Some(measure), Some(load), Some(s)) if issues.is_empty() => Ok(ScenarioConfig {
            domain,
            operator,
            measure,
            load,
            h_list: s.h_list,
            spacings: s.spacings,
            mode: s.mode,
            seed: s.seed,
            solver: s.solver,
            pin_nearest: s.pin_nearest,
            deterministic: s.deterministic,
        }),
        _ => {
            issues.sort_by_key(|i| i.line.unwrap_or(usize::MAX));
            Err(Error::Config(issues))
        }
    }
}

/// Operator from a one-line spec: `laplace`, or `key=value` pairs of the
/// `[operator]` section separated by `;`, e.g.
/// `type=matrix; a11=1.3; a12=0.2; a22=0.8; alpha=0.6`.
pub fn parse_operator_spec(spec: &str) -> Result<EllipticOperator> {
    let mut text = String::from("[operator]\n");
    for part in spec.split(';').map(str::trim).filter(|p| !p.is_empty()) {
        if part.contains('=') {
            text.push_str(part);
        } else {
            text.push_str("type = ");
            text.push_str(part);
        }
        text.push('\n');
    }
    let mut issues = Vec::new();
    let mut sections = tokenize(&text, &mut issues);
    let mut r = Reader { sections: &mut sections, issues: &mut issues };
    let op = read_operator(&mut r);
    for (name, keys) in sections.iter() {
        for (key, e) in keys {
            if !e.used {
                issues.push(ConfigIssue { line: None, message: format!("unknown key `{key}` in [{name}]") });
            }
        }
    }
    match op {
        Some(op) if issues.is_empty() => Ok(op),
        _ => {
            for i in &mut issues {
                i.line = None;
            }
            Err(Error::Config(issues))
        }
    }
}

pub fn load_config(path: &std::path::Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn issues(text: &str) -> Vec<ConfigIssue> {
        match parse_config(text) {
            Err(Error::Config(v)) => v,
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = parse_config("[sweep]\nh = 4\n").unwrap();
        assert_eq!(cfg.domain, Rect::unit());
        assert!(cfg.operator.is_laplace());
        assert!(cfg.measure.is_zero());
        assert_eq!(cfg.h_list, vec![4]);
        assert_eq!(cfg.mode, Mode::Classic);
        assert_eq!(cfg.spacings, vec![1.0 / 256.0]);
        assert!(!cfg.deterministic);
    }

    #[test]
    fn full_config() {
        let text = "\
# classic scenario
[domain]
min = 0, 0
max = 1, 1
[operator]
type = matrix
a11 = 1.5
a12 = 0.25
a22 = 1
alpha = 0.6
[measure]
density = constant
value = 200
atoms = (0.51, 0.53, 1); (0.2, 0.3, 0.5)
segments = (0.1, 0.1, 0.9, 0.1, 2)
[load]
type = bump
radius = 0.3
[sweep]
h = 4, 6, 8
spacing = 1/1024
mode = singular
deterministic = true
";
        let cfg = parse_config(text).unwrap();
        assert_eq!(cfg.measure.atoms.len(), 2);
        assert_eq!(cfg.measure.segments.len(), 1);
        assert_eq!(cfg.spacings, vec![1.0 / 1024.0; 3]);
        assert_eq!(cfg.mode, Mode::Singular);
        assert!(cfg.deterministic);
        assert_eq!(cfg.spacing_for(6), 1.0 / 1024.0);
    }

    #[test]
    fn atom_outside_domain() {
        let v = issues("[measure]\ndensity = zero\natoms = (1.5, 0.5, 1)\n[sweep]\nh = 4\n");
        assert!(v.iter().any(|i| i.message.contains("atom at (1.5, 0.5) outside Ω") && i.line == Some(3)), "{v:?}");
    }

    #[test]
    fn h_list_must_increase() {
        let v = issues("[sweep]\nh = 4, 4\n");
        assert!(v.iter().any(|i| i.message.contains("h-list must be strictly increasing") && i.line == Some(2)), "{v:?}");
    }

    #[test]
    fn syntax_errors_carry_line_numbers() {
        let v = issues("[sweep]\nh = 4\nthis is not a pair\n[bogus]\n[load]\ncolour = red\n");
        let lines: Vec<_> = v.iter().map(|i| i.line).collect();
        assert_eq!(lines, vec![Some(3), Some(4), Some(6)]);
    }

    #[test]
    fn semantic_errors() {
        assert!(!issues("[operator]\nalpha = 0\n[sweep]\nh = 4\n").is_empty());
        assert!(!issues("[sweep]\nh = 4\nspacing = 0.3\n").is_empty());
        assert!(!issues("[sweep]\nh = 4\nmode = fast\n").is_empty());
        assert!(!issues("[measure]\ndensity = constant\n[sweep]\nh = 4\n").is_empty());
    }

    #[test]
    fn operator_specs() {
        assert!(parse_operator_spec("laplace").unwrap().is_laplace());
        let op = parse_operator_spec("type=matrix; a11=1.3; a12=0.2; a22=0.8; alpha=0.6").unwrap();
        assert_eq!(op.matrix_at([0.1, 0.2]), [1.3, 0.2, 0.8]);
        let op = parse_operator_spec("radial; base=1; slope=1; center=0.5,0.5; alpha=0.4").unwrap();
        assert!(!op.is_constant());
        assert!(parse_operator_spec("scalar; a=3").is_err());
        assert!(parse_operator_spec("laplace; colour=red").is_err());
    }
}
