//! Subcommands. Grid rows run in parallel and are emitted in grid order; a failure at one `z`
//! fills that row's `error` column and leaves the others intact.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sldonoghue::bessel::{bessel_donoghue_friedrichs, bessel_weyl_m};
use sldonoghue::deficiency::{deficiency_basis_with, weyl_solution_with, EndPairs};
use sldonoghue::donoghue::{
    herglotz_row, one_lc_entry, DonoghueMatrix, OneLcDonoghue, TwoLcDonoghue, TwoLcExtension, HERGLOTZ_SLACK,
};
use sldonoghue::endpoint::classify;
use sldonoghue::krein::{k_alpha_from, krein_identity_residual, krein_vn_reduced, reduced_coupling, zero_basis};
use sldonoghue::problem::EndpointClassification;
use sldonoghue::{Bound, EndpointClass, EndpointKind, ExtensionSpec, SlProblem, C64};

use crate::config::{random_points, ExtensionConfig, GridConfig, RunConfig};
use crate::output::{matrix_columns, Cell, Report};
use crate::CliError;

type C = C64;

const I: C = C::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Command {
    Classify,
    Donoghue,
    Krein,
    Weyl,
    Validate,
    BesselRef,
}

/// Rows failed numerically, or validation checks failed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Ok,
    RowErrors(usize),
    ChecksFailed(usize),
}

pub struct Outcome {
    pub report: Report,
    pub status: Status,
}

/// Overrides from the command line.
#[derive(Debug, Clone, Copy, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub rtol: Option<f64>,
}

pub fn apply_overrides(cfg: &mut RunConfig, ov: Overrides) -> Result<(), CliError> {
    if let Some(r) = ov.rtol {
        cfg.tolerances.rtol = r;
    }
    if let (Some(s), Some(GridConfig::Random { seed, .. })) = (ov.seed, cfg.grid.as_mut()) {
        *seed = s;
    }
    cfg.check()
}

pub fn run(cmd: Command, cfg: &RunConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    match cmd {
        Command::Classify => cmd_classify(cfg),
        Command::Donoghue => cmd_donoghue(cfg),
        Command::Krein => cmd_krein(cfg),
        Command::Weyl => cmd_weyl(cfg),
        Command::Validate => cmd_validate(cfg, seed),
        Command::BesselRef => cmd_bessel_ref(cfg),
    }
}

fn numerical(e: sldonoghue::Error) -> CliError {
    CliError::Numerical(e.to_string())
}

fn setup(cfg: &RunConfig) -> Result<(SlProblem, EndpointClassification), CliError> {
    let problem = cfg.build_problem()?;
    let cls = classify(&problem).map_err(numerical)?;
    Ok((problem, cls))
}

fn class_name(c: EndpointClass) -> &'static str {
    match c {
        EndpointClass::LimitCircle => "limit-circle",
        EndpointClass::LimitPoint => "limit-point",
    }
}

fn kind_name(k: EndpointKind) -> &'static str {
    match k {
        EndpointKind::Regular => "regular",
        EndpointKind::Singular => "singular",
    }
}

/// `"a: limit-circle, b: limit-point, n± = 1"`, with the self-adjointness note when `n± = 0`.
pub fn summary(cls: &EndpointClassification) -> String {
    let n = cls.deficiency_index();
    let mut s = format!("a: {}, b: {}, n± = {n}", class_name(cls.at_a), class_name(cls.at_b));
    if n == 0 {
        s.push_str(", T_min self-adjoint");
    }
    s
}

pub fn cmd_classify(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let (p, cls) = setup(cfg)?;
    let cols = ["a_kind", "a_class", "b_kind", "b_class", "n_pm", "t_min_self_adjoint", "summary"];
    let mut r = Report::new("classify", cols.iter().map(|s| s.to_string()).collect());
    let n = cls.deficiency_index();
    r.push(vec![
        Cell::Text(kind_name(p.kind_a).into()),
        Cell::Text(class_name(cls.at_a).into()),
        Cell::Text(kind_name(p.kind_b).into()),
        Cell::Text(class_name(cls.at_b).into()),
        Cell::Int(n as i64),
        Cell::Bool(n == 0),
        Cell::Text(summary(&cls)),
    ]);
    Ok(Outcome { report: r, status: Status::Ok })
}

// ---------------------------------------------------------------------------
// Extensions against the classification

enum Evaluator {
    One { d: OneLcDonoghue, alpha: f64 },
    Two { d: TwoLcDonoghue, ext: TwoLcExtension },
}

impl Evaluator {
    fn dim(&self) -> usize {
        match self {
            Evaluator::One { .. } => 1,
            Evaluator::Two { .. } => 2,
        }
    }

    fn eval(&self, z: C) -> sldonoghue::Result<DonoghueMatrix> {
        match self {
            Evaluator::One { d, alpha } => d.eval(*alpha, z),
            Evaluator::Two { d, ext } => d.eval_ext(ext, z),
        }
    }
}

/// Rejects extensions that do not fit the endpoint configuration.
pub fn check_admissible(cls: &EndpointClassification, ext: &ExtensionConfig) -> Result<(), CliError> {
    let bad = |m: String| Err(CliError::Config(m));
    match cls.deficiency_index() {
        0 => bad(format!("{}: there are no extensions to parametrize", summary(cls))),
        1 => {
            if cls.at_a != EndpointClass::LimitCircle {
                return bad(format!("{}: only a limit-circle endpoint at a is supported", summary(cls)));
            }
            match ext {
                ExtensionConfig::OneEndpoint { .. } => Ok(()),
                _ => bad(format!("{}: the extension must be kind = \"one_endpoint\"", summary(cls))),
            }
        }
        _ => match ext {
            ExtensionConfig::OneEndpoint { .. } => {
                bad(format!("{}: a one-endpoint condition does not define a self-adjoint extension", summary(cls)))
            }
            _ => Ok(()),
        },
    }
}

fn extension(cfg: &RunConfig) -> Result<&ExtensionConfig, CliError> {
    cfg.extension.as_ref().ok_or_else(|| CliError::Config("this command needs an [extension] block".into()))
}

fn two_lc_ext(d: &TwoLcDonoghue, ext: &ExtensionConfig) -> Result<TwoLcExtension, CliError> {
    match ext.spec() {
        Some(s) => Ok(TwoLcExtension::Spec(s)),
        None => {
            let at_zero = zero_basis(&d.problem, &d.ortho.pairs).map_err(numerical)?;
            Ok(TwoLcExtension::KreinVonNeumann { at_zero: at_zero.data })
        }
    }
}

fn evaluator(p: &SlProblem, cls: &EndpointClassification, ext: &ExtensionConfig) -> Result<Evaluator, CliError> {
    check_admissible(cls, ext)?;
    match ext {
        ExtensionConfig::OneEndpoint { alpha } => {
            Ok(Evaluator::One { d: OneLcDonoghue::new(p).map_err(numerical)?, alpha: *alpha })
        }
        _ => {
            let d = TwoLcDonoghue::new(p).map_err(numerical)?;
            let ext = two_lc_ext(&d, ext)?;
            Ok(Evaluator::Two { d, ext })
        }
    }
}

fn z_cells(z: C) -> Vec<Cell> {
    vec![Cell::Num(z.re), Cell::Num(z.im)]
}

fn entry_cells(vals: &[C]) -> Vec<Cell> {
    vals.iter().flat_map(|v| [Cell::Num(v.re), Cell::Num(v.im)]).collect()
}

/// `z` followed by `width` empty value cells.
fn blank_row(z: C, width: usize) -> Vec<Cell> {
    let mut row = z_cells(z);
    row.extend(std::iter::repeat(Cell::Empty).take(width));
    row
}

fn grid_rows<F>(zs: &[C], f: F) -> (Vec<Vec<Cell>>, usize)
where
    F: Fn(C) -> Result<Vec<Cell>, (Vec<Cell>, String)> + Sync,
{
    let rows: Vec<(Vec<Cell>, bool)> = zs
        .par_iter()
        .map(|&z| match f(z) {
            Ok(mut cells) => {
                cells.push(Cell::Empty);
                (cells, false)
            }
            Err((mut cells, msg)) => {
                cells.push(Cell::Text(msg));
                (cells, true)
            }
        })
        .collect();
    let failed = rows.iter().filter(|r| r.1).count();
    (rows.into_iter().map(|r| r.0).collect(), failed)
}

fn status(failed: usize) -> Status {
    if failed == 0 {
        Status::Ok
    } else {
        Status::RowErrors(failed)
    }
}

/// Columns `z_re, z_im, M11_re, M11_im, …, herglotz_margin, sym_residual, error`.
pub fn cmd_donoghue(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let zs = cfg.grid_points()?;
    let (p, cls) = setup(cfg)?;
    let ev = evaluator(&p, &cls, extension(cfg)?)?;
    let dim = ev.dim();
    let mut cols = vec!["z_re".to_string(), "z_im".to_string()];
    cols.extend(matrix_columns("M", dim));
    cols.extend(["herglotz_margin", "sym_residual", "error"].map(String::from));
    let width = 2 * dim * dim + 2;
    let (rows, failed) = grid_rows(&zs, |z| {
        let m = ev.eval(z).map_err(|e| (blank_row(z, width), e.to_string()))?;
        let mut row = z_cells(z);
        row.extend(entry_cells(&m.flat()));
        match ev.eval(z.conj()) {
            Ok(mc) => {
                let h = herglotz_row(&m, Some(&mc));
                row.push(Cell::Num(h.margin));
                row.push(Cell::Num(h.sym_residual.unwrap_or(f64::NAN)));
                Ok(row)
            }
            Err(e) => {
                row.push(Cell::Num(herglotz_row(&m, None).margin));
                row.push(Cell::Empty);
                Err((row, format!("at conj(z): {e}")))
            }
        }
    });
    let mut r = Report::new("donoghue", cols);
    rows.into_iter().for_each(|row| r.push(row));
    Ok(Outcome { report: r, status: status(failed) })
}

/// Columns `z_re, z_im, dim, K11_re, …, K22_im, error`; a scalar coupling sits in the (1,1) slot.
pub fn cmd_krein(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let zs = cfg.grid_points()?;
    let (p, cls) = setup(cfg)?;
    let ext = extension(cfg)?;
    check_admissible(&cls, ext)?;
    let reference = "the reference extension has no coupling matrix";
    let coupling: Box<dyn Fn(C) -> sldonoghue::Result<(usize, [C; 4])> + Sync> = match ext {
        ExtensionConfig::OneEndpoint { alpha } => {
            if *alpha == 0.0 {
                return Err(CliError::Config(format!("alpha = 0: {reference}")));
            }
            let pairs = EndPairs::for_problem(&p).map_err(numerical)?;
            let alpha = *alpha;
            let p = p.clone();
            Box::new(move |z| {
                let w = weyl_solution_with(&p, &pairs, z)?;
                Ok((1, [k_alpha_from(alpha, &w)?, C::default(), C::default(), C::default()]))
            })
        }
        _ => {
            if let Some(ExtensionSpec::Separated { alpha: 0.0, beta: 0.0 }) = ext.spec() {
                return Err(CliError::Config(format!("Separated(0, 0): {reference}")));
            }
            let pairs = EndPairs::for_problem(&p).map_err(numerical)?;
            let at_zero = match ext.spec() {
                Some(_) => None,
                None => Some(zero_basis(&p, &pairs).map_err(numerical)?.data),
            };
            let spec = ext.spec();
            let p = p.clone();
            Box::new(move |z| {
                let data = deficiency_basis_with(&p, &pairs, z)?.data;
                let rc = match (spec, at_zero) {
                    (Some(s), _) => reduced_coupling(&s, data)?,
                    (None, Some(o)) => krein_vn_reduced(z, data, o)?,
                    (None, None) => unreachable!(),
                };
                let k = rc.k.m;
                Ok((rc.dim, [k[0][0], k[0][1], k[1][0], k[1][1]]))
            })
        }
    };
    let mut cols = vec!["z_re".to_string(), "z_im".to_string(), "dim".to_string()];
    cols.extend(matrix_columns("K", 2));
    cols.push("error".into());
    let (rows, failed) = grid_rows(&zs, |z| match coupling(z) {
        Ok((dim, k)) => {
            let mut row = z_cells(z);
            row.push(Cell::Int(dim as i64));
            row.extend(entry_cells(&k));
            Ok(row)
        }
        Err(e) => Err((blank_row(z, 9), e.to_string())),
    });
    let mut r = Report::new("krein", cols);
    rows.into_iter().for_each(|row| r.push(row));
    Ok(Outcome { report: r, status: status(failed) })
}

/// Columns `z_re, z_im, m0_re, m0_im, error`.
pub fn cmd_weyl(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let zs = cfg.grid_points()?;
    let (p, cls) = setup(cfg)?;
    if cls.at_a != EndpointClass::LimitCircle || cls.at_b != EndpointClass::LimitPoint || p.b != Bound::Infinite {
        return Err(CliError::Config(format!(
            "{}: the Weyl function needs a limit-circle a and a limit-point b = inf",
            summary(&cls)
        )));
    }
    let pairs = EndPairs::for_problem(&p).map_err(numerical)?;
    let cols = ["z_re", "z_im", "m0_re", "m0_im", "error"].map(String::from).to_vec();
    let (rows, failed) = grid_rows(&zs, |z| match weyl_solution_with(&p, &pairs, z) {
        Ok(w) => {
            let mut row = z_cells(z);
            row.extend(entry_cells(&[w.m0]));
            Ok(row)
        }
        Err(e) => Err((blank_row(z, 2), e.to_string())),
    });
    let mut r = Report::new("weyl", cols);
    rows.into_iter().for_each(|row| r.push(row));
    Ok(Outcome { report: r, status: status(failed) })
}

/// Closed forms of the Bessel family on `(0, ∞)`: columns `z_re, z_im, m0_re, m0_im, M_re, M_im, error`,
/// with `M` the Donoghue function of the `α = 0` extension.
pub fn cmd_bessel_ref(cfg: &RunConfig) -> Result<Outcome, CliError> {
    let zs = cfg.grid_points()?;
    let bp = cfg
        .bessel_params()
        .ok_or_else(|| CliError::Config("bessel-ref needs family = \"bessel\"".into()))?;
    if bp.b != Bound::Infinite {
        return Err(CliError::Config("bessel-ref needs b = \"inf\"".into()));
    }
    bp.check_limit_circle().map_err(|e| CliError::Config(e.to_string()))?;
    let cols = ["z_re", "z_im", "m0_re", "m0_im", "M_re", "M_im", "error"].map(String::from).to_vec();
    let (rows, failed) = grid_rows(&zs, |z| {
        let vals = bessel_weyl_m(&bp, z).and_then(|m| Ok([m, bessel_donoghue_friedrichs(&bp, z)?]));
        match vals {
            Ok(v) => {
                let mut row = z_cells(z);
                row.extend(entry_cells(&v));
                Ok(row)
            }
            Err(e) => Err((blank_row(z, 4), e.to_string())),
        }
    });
    let mut r = Report::new("bessel-ref", cols);
    rows.into_iter().for_each(|row| r.push(row));
    Ok(Outcome { report: r, status: status(failed) })
}

// ---------------------------------------------------------------------------
// Validation suites

struct Check {
    name: &'static str,
    value: f64,
    threshold: f64,
    /// `value ≥ threshold` instead of `value ≤ threshold`.
    at_least: bool,
    detail: String,
}

impl Check {
    fn below(name: &'static str, value: f64, threshold: f64, detail: String) -> Self {
        Check { name, value, threshold, at_least: false, detail }
    }

    fn pass(&self) -> bool {
        if self.at_least {
            self.value >= self.threshold
        } else {
            self.value <= self.threshold
        }
    }
}

fn failed_check(name: &'static str, e: impl std::fmt::Display) -> Check {
    Check { name, value: f64::NAN, threshold: f64::NAN, at_least: false, detail: e.to_string() }
}

const DEFAULT_SEED: u64 = 4;

/// Default extensions per deficiency index when the config names none.
fn default_extensions(n: usize) -> Vec<ExtensionConfig> {
    if n == 1 {
        vec![ExtensionConfig::OneEndpoint { alpha: 0.0 }, ExtensionConfig::OneEndpoint { alpha: PI / 4.0 }]
    } else {
        vec![
            ExtensionConfig::Separated { alpha: 0.0, beta: 0.0 },
            ExtensionConfig::Separated { alpha: PI / 4.0, beta: PI / 3.0 },
            ExtensionConfig::Coupled { phi: PI / 3.0, r: [[1.0, 1.0], [0.0, 1.0]] },
        ]
    }
}

/// Twelve points with `|z| ∈ [0.5, 4]` in both half-planes.
fn sweep_points() -> Vec<C> {
    (0..12)
        .map(|k| {
            let rad = 0.5 + 3.5 * (k / 2) as f64 / 5.0;
            let th = 0.15 + 2.8 * ((k * 7) % 12) as f64 / 11.0;
            let z = C::from_polar(rad, th);
            if k % 2 == 0 {
                z
            } else {
                z.conj()
            }
        })
        .collect()
}

fn test_function(rng: &mut ChaCha8Rng, a: f64) -> Arc<dyn Fn(f64) -> sldonoghue::Result<C> + Send + Sync> {
    let mut r = || C::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (c0, c1, c2) = (r(), r(), r());
    Arc::new(move |x: f64| {
        let t = x - a;
        Ok((-0.25 * t * t).exp() * (c0 + c1 * t + c2 * (3.0 * t).sin()))
    })
}

fn suite_one_lc(p: &SlProblem, alphas: &[f64], rtol: f64, seed: u64, out: &mut Vec<Check>) -> Result<(), CliError> {
    let d = match OneLcDonoghue::new(p) {
        Ok(d) => d,
        Err(e) => {
            out.push(failed_check("setup", e));
            return Ok(());
        }
    };
    // normalization through a fresh solve at −i
    out.push(match d.m0(-I) {
        Ok(m) => {
            let mut worst: f64 = 0.0;
            let mut err = None;
            for &a in alphas {
                match one_lc_entry(a, d.m_i, m) {
                    Ok(v) => worst = worst.max((v + I).norm()),
                    Err(e) => err = Some(e),
                }
            }
            match err {
                Some(e) => failed_check("normalization", e),
                None => Check::below("normalization", worst, 1e-10, "max |M(−i) + i| over the extensions".into()),
            }
        }
        Err(e) => failed_check("normalization", e),
    });

    let zs = random_points(100, [-5.0, 5.0], [1e-3, 10.0], seed);
    let rows: Vec<sldonoghue::Result<(f64, f64)>> = zs
        .par_iter()
        .map(|&z| {
            let (m, mc) = (d.m0(z)?, d.m0(z.conj())?);
            let mut margin = f64::INFINITY;
            let mut sym: f64 = 0.0;
            for &a in alphas {
                let mz = DonoghueMatrix::scalar(z, one_lc_entry(a, d.m_i, m)?);
                let mzc = DonoghueMatrix::scalar(z.conj(), one_lc_entry(a, d.m_i, mc)?);
                let h = herglotz_row(&mz, Some(&mzc));
                margin = margin.min(h.margin);
                sym = sym.max(h.sym_residual.unwrap_or(f64::NAN));
            }
            Ok((margin, sym))
        })
        .collect();
    push_herglotz(rows, rtol, out);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pairs = d.pairs.clone();
    let mut worst: f64 = 0.0;
    let mut err = None;
    for &alpha in alphas.iter().filter(|a| **a != 0.0) {
        let z = C::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.5..2.0));
        for _ in 0..5 {
            let f = test_function(&mut rng, p.a);
            match krein_identity_residual(p, &pairs, &ExtensionSpec::OneEndpoint { alpha }, z, f) {
                Ok(v) => worst = worst.max(v),
                Err(e) => err = Some(e),
            }
        }
    }
    out.push(match err {
        Some(e) => failed_check("krein-identity", e),
        None => Check::below("krein-identity", worst, rtol, "relative L² residual, 5 functions per extension".into()),
    });
    Ok(())
}

fn push_herglotz(rows: Vec<sldonoghue::Result<(f64, f64)>>, rtol: f64, out: &mut Vec<Check>) {
    let n = rows.len();
    let mut margin = f64::INFINITY;
    let mut sym: f64 = 0.0;
    for r in rows {
        match r {
            Ok((m, s)) => {
                margin = margin.min(m);
                sym = sym.max(s);
            }
            Err(e) => {
                out.push(failed_check("herglotz", e));
                return;
            }
        }
    }
    out.push(Check {
        name: "herglotz",
        value: margin,
        threshold: -HERGLOTZ_SLACK,
        at_least: true,
        detail: format!("worst margin over {n} seeded z with 1e-3 ≤ |Im z| ≤ 10"),
    });
    out.push(Check::below("symmetry", sym, rtol, "max ‖M(z̄) − M(z)*‖".into()));
}

fn suite_two_lc(p: &SlProblem, exts: &[ExtensionConfig], rtol: f64, seed: u64, out: &mut Vec<Check>) -> Result<(), CliError> {
    let d = match TwoLcDonoghue::new(p) {
        Ok(d) => d,
        Err(e) => {
            out.push(failed_check("setup", e));
            return Ok(());
        }
    };
    let exts2: Vec<TwoLcExtension> = match exts.iter().map(|e| two_lc_ext(&d, e)).collect() {
        Ok(v) => v,
        Err(e) => {
            out.push(failed_check("setup", e));
            return Ok(());
        }
    };
    let mut worst: f64 = 0.0;
    let mut err = None;
    for e in &exts2 {
        match d.assemble(e, -I) {
            Ok(m) => worst = worst.max(m.normalization_residual()),
            Err(e) => err = Some(e),
        }
    }
    out.push(match err {
        Some(e) => failed_check("normalization", e),
        None => Check::below("normalization", worst, 1e-10, "max ‖M(−i) + iI‖ from a fresh assembly".into()),
    });

    let zs = random_points(100, [-5.0, 5.0], [1e-3, 10.0], seed);
    let rows: Vec<sldonoghue::Result<(f64, f64)>> = zs
        .par_iter()
        .map(|&z| {
            let (ms, mcs) = (d.eval_all(&exts2, z)?, d.eval_all(&exts2, z.conj())?);
            let mut margin = f64::INFINITY;
            let mut sym: f64 = 0.0;
            for (m, mc) in ms.into_iter().zip(mcs) {
                let h = herglotz_row(&m?, Some(&mc?));
                margin = margin.min(h.margin);
                sym = sym.max(h.sym_residual.unwrap_or(f64::NAN));
            }
            Ok((margin, sym))
        })
        .collect();
    push_herglotz(rows, rtol, out);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    let mut err = None;
    let specs: Vec<ExtensionSpec> = exts
        .iter()
        .filter_map(|e| e.spec())
        .filter(|s| *s != ExtensionSpec::Separated { alpha: 0.0, beta: 0.0 })
        .collect();
    for spec in &specs {
        let z = C::new(rng.gen_range(-2.0..2.0), rng.gen_range(0.5..2.0));
        for _ in 0..5 {
            let f = test_function(&mut rng, p.a);
            match krein_identity_residual(p, &d.ortho.pairs, spec, z, f) {
                Ok(v) => worst = worst.max(v),
                Err(e) => err = Some(e),
            }
        }
    }
    if !specs.is_empty() {
        out.push(match err {
            Some(e) => failed_check("krein-identity", e),
            None => Check::below("krein-identity", worst, rtol, "relative L² residual, 5 functions per extension".into()),
        });
    }
    Ok(())
}

fn suite_bessel(cfg: &RunConfig, p: &SlProblem, rtol: f64, out: &mut Vec<Check>) {
    let Some(bp) = cfg.bessel_params() else { return };
    if bp.b != Bound::Infinite || bp.gamma >= 1.0 {
        return;
    }
    let zs = match &cfg.grid {
        Some(g) => g.points(),
        None => sweep_points(),
    };
    let d = match OneLcDonoghue::new(p) {
        Ok(d) => d,
        Err(e) => {
            out.push(failed_check("bessel-weyl", e));
            return;
        }
    };
    let rows: Vec<sldonoghue::Result<(f64, f64)>> = zs
        .par_iter()
        .map(|&z| {
            let m = d.m0(z)?;
            let want = bessel_weyl_m(&bp, z)?;
            let entry = one_lc_entry(0.0, d.m_i, m)?;
            let want_entry = bessel_donoghue_friedrichs(&bp, z)?;
            Ok(((m - want).norm() / want.norm(), (entry - want_entry).norm()))
        })
        .collect();
    let mut weyl: f64 = 0.0;
    let mut don: f64 = 0.0;
    for r in rows {
        match r {
            Ok((a, b)) => {
                weyl = weyl.max(a);
                don = don.max(b);
            }
            Err(e) => {
                out.push(failed_check("bessel-weyl", e));
                return;
            }
        }
    }
    let n = zs.len();
    out.push(Check::below("bessel-weyl", weyl, rtol, format!("max relative error vs closed form, {n} z")));
    out.push(Check::below("bessel-donoghue", don, rtol, format!("max absolute error vs closed form (α = 0), {n} z")));
}

pub fn cmd_validate(cfg: &RunConfig, seed: Option<u64>) -> Result<Outcome, CliError> {
    let (p, cls) = setup(cfg)?;
    let rtol = cfg.tolerances.rtol;
    let seed = seed
        .or(match &cfg.grid {
            Some(GridConfig::Random { seed, .. }) => Some(*seed),
            _ => None,
        })
        .unwrap_or(DEFAULT_SEED);
    let n = cls.deficiency_index();
    let mut checks = vec![Check {
        name: "classification",
        value: n as f64,
        threshold: 0.0,
        at_least: true,
        detail: summary(&cls),
    }];
    if n > 0 {
        let exts = match &cfg.extension {
            Some(e) => vec![e.clone()],
            None => default_extensions(n),
        };
        for e in &exts {
            check_admissible(&cls, e)?;
        }
        if n == 1 {
            let alphas: Vec<f64> = exts
                .iter()
                .filter_map(|e| match e {
                    ExtensionConfig::OneEndpoint { alpha } => Some(*alpha),
                    _ => None,
                })
                .collect();
            suite_one_lc(&p, &alphas, rtol, seed, &mut checks)?;
            suite_bessel(cfg, &p, rtol, &mut checks);
        } else {
            suite_two_lc(&p, &exts, rtol, seed, &mut checks)?;
        }
    }
    let cols = ["check", "value", "threshold", "pass", "detail"].map(String::from).to_vec();
    let mut r = Report::new("validate", cols);
    let mut failed = 0;
    for c in &checks {
        let pass = c.pass();
        failed += usize::from(!pass);
        r.push(vec![
            Cell::Text(c.name.into()),
            Cell::Num(c.value),
            Cell::Num(c.threshold),
            Cell::Bool(pass),
            Cell::Text(c.detail.clone()),
        ]);
    }
    let status = if failed == 0 { Status::Ok } else { Status::ChecksFailed(failed) };
    Ok(Outcome { report: r, status })
}
