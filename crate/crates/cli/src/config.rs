//! Run configuration: one TOML document per run.
//!
//! ```toml
//! [problem]
//! family = "bessel"          # bessel | constant | tabulated
//! delta = 0.0
//! nu = 0.0
//! gamma = 0.5
//! b = "inf"                  # or a positive number
//!
//! [extension]
//! kind = "one_endpoint"      # separated | coupled | one_endpoint | krein_von_neumann
//! alpha = 0.0
//!
//! [grid]
//! kind = "points"            # points | rect | random
//! points = [[0.0, 1.0], [1.0, 2.0]]
//!
//! [tolerances]
//! rtol = 1e-6
//!
//! [output]
//! format = "json"            # json | csv
//! ```

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use sldonoghue::bessel::BesselParams;
use sldonoghue::problem::Table;
use sldonoghue::{Bound, ExtensionSpec, SlProblem, C64};

use crate::CliError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extension: Option<ExtensionConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grid: Option<GridConfig>,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub output: OutputConfig,
}

/// `"inf"` or a finite right endpoint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum EndConfig {
    Finite(f64),
    Named(Infinity),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Infinity {
    #[serde(rename = "inf")]
    Inf,
}

impl EndConfig {
    pub fn bound(self) -> Bound {
        match self {
            EndConfig::Finite(b) => Bound::Finite(b),
            EndConfig::Named(_) => Bound::Infinite,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProblemConfig {
    Bessel { delta: f64, nu: f64, gamma: f64, b: EndConfig },
    Constant { p: f64, q: f64, r: f64, a: f64, b: f64 },
    /// CSV with header `x,p,q,r`; a relative path is taken from the config file's directory.
    Tabulated { table: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExtensionConfig {
    Separated { alpha: f64, beta: f64 },
    Coupled { phi: f64, r: [[f64; 2]; 2] },
    OneEndpoint { alpha: f64 },
    KreinVonNeumann,
}

impl ExtensionConfig {
    pub fn spec(&self) -> Option<ExtensionSpec> {
        match *self {
            ExtensionConfig::Separated { alpha, beta } => Some(ExtensionSpec::Separated { alpha, beta }),
            ExtensionConfig::Coupled { phi, r } => Some(ExtensionSpec::Coupled { phi, r }),
            ExtensionConfig::OneEndpoint { alpha } => Some(ExtensionSpec::OneEndpoint { alpha }),
            ExtensionConfig::KreinVonNeumann => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GridConfig {
    /// Explicit samples as `[re, im]` pairs.
    Points { points: Vec<[f64; 2]> },
    /// `n_re × n_im` lattice over `re × im`, row-major in `im`.
    Rect { re: [f64; 2], im: [f64; 2], n_re: usize, n_im: usize },
    /// `count` samples, `Re z` uniform in `re`, `|Im z|` log-uniform in `im_abs`, random half-plane.
    Random { count: usize, re: [f64; 2], im_abs: [f64; 2], seed: u64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tolerances {
    /// Pass threshold of the comparisons run by `validate`.
    pub rtol: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances { rtol: 1e-6 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub format: Format,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<RunConfig, CliError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = RunConfig::parse(&text)?;
        if let ProblemConfig::Tabulated { table } = &mut cfg.problem {
            if table.is_relative() {
                if let Some(dir) = path.parent() {
                    *table = dir.join(&*table);
                }
            }
        }
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String, CliError> {
        toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Static checks that need no numerics.
    pub fn check(&self) -> Result<(), CliError> {
        if !(self.tolerances.rtol > 0.0 && self.tolerances.rtol.is_finite()) {
            return Err(CliError::Config(format!("rtol = {} must be positive", self.tolerances.rtol)));
        }
        if let Some(spec) = self.extension.as_ref().and_then(|e| e.spec()) {
            spec.check().map_err(|e| CliError::Config(e.to_string()))?;
        }
        if let Some(g) = &self.grid {
            g.check()?;
        }
        Ok(())
    }

    pub fn build_problem(&self) -> Result<SlProblem, CliError> {
        let cfg = |e: sldonoghue::Error| CliError::Config(e.to_string());
        match &self.problem {
            ProblemConfig::Bessel { delta, nu, gamma, b } => {
                SlProblem::bessel(BesselParams::new(*delta, *nu, *gamma, b.bound())).map_err(cfg)
            }
            ProblemConfig::Constant { p, q, r, a, b } => {
                if !(*p > 0.0 && *r > 0.0) {
                    return Err(CliError::Config("p and r must be positive".into()));
                }
                SlProblem::constant(*p, *q, *r, *a, *b).map_err(cfg)
            }
            ProblemConfig::Tabulated { table } => SlProblem::tabulated(read_table(table)?).map_err(cfg),
        }
    }

    pub fn bessel_params(&self) -> Option<BesselParams> {
        match self.problem {
            ProblemConfig::Bessel { delta, nu, gamma, b } => Some(BesselParams::new(delta, nu, gamma, b.bound())),
            _ => None,
        }
    }

    pub fn grid_points(&self) -> Result<Vec<C64>, CliError> {
        self.grid
            .as_ref()
            .ok_or_else(|| CliError::Config("this command needs a [grid] block".into()))
            .map(GridConfig::points)
    }
}

impl GridConfig {
    fn check(&self) -> Result<(), CliError> {
        let bad = |m: String| Err(CliError::Config(m));
        match self {
            GridConfig::Points { points } => {
                if points.is_empty() {
                    return bad("grid has no points".into());
                }
                for p in points {
                    if !(p[0].is_finite() && p[1].is_finite()) || p[1] == 0.0 {
                        return bad(format!("grid point [{}, {}] is not a finite nonreal number", p[0], p[1]));
                    }
                }
            }
            GridConfig::Rect { re, im, n_re, n_im } => {
                if *n_re == 0 || *n_im == 0 {
                    return bad("rect grid needs n_re, n_im ≥ 1".into());
                }
                if im[0] * im[1] <= 0.0 {
                    return bad("rect grid im range must not touch the real axis".into());
                }
                if !re.iter().chain(im).all(|v| v.is_finite()) {
                    return bad("rect grid bounds must be finite".into());
                }
            }
            GridConfig::Random { count, re, im_abs, .. } => {
                if *count == 0 {
                    return bad("random grid needs count ≥ 1".into());
                }
                if !(im_abs[0] > 0.0 && im_abs[1] >= im_abs[0] && im_abs[1].is_finite()) {
                    return bad("random grid needs 0 < im_abs[0] ≤ im_abs[1]".into());
                }
                if !(re[0].is_finite() && re[1] >= re[0] && re[1].is_finite()) {
                    return bad("random grid needs re[0] ≤ re[1]".into());
                }
            }
        }
        Ok(())
    }

    /// Samples in grid order.
    pub fn points(&self) -> Vec<C64> {
        match self {
            GridConfig::Points { points } => points.iter().map(|p| C64::new(p[0], p[1])).collect(),
            GridConfig::Rect { re, im, n_re, n_im } => {
                let lin = |r: &[f64; 2], n: usize, k: usize| {
                    if n == 1 {
                        r[0]
                    } else {
                        r[0] + (r[1] - r[0]) * k as f64 / (n - 1) as f64
                    }
                };
                let mut out = Vec::with_capacity(n_re * n_im);
                for j in 0..*n_im {
                    for k in 0..*n_re {
                        out.push(C64::new(lin(re, *n_re, k), lin(im, *n_im, j)));
                    }
                }
                out
            }
            GridConfig::Random { count, re, im_abs, seed } => random_points(*count, *re, *im_abs, *seed),
        }
    }
}

pub fn random_points(count: usize, re: [f64; 2], im_abs: [f64; 2], seed: u64) -> Vec<C64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (l0, l1) = (im_abs[0].log10(), im_abs[1].log10());
    (0..count)
        .map(|_| {
            let x = if re[1] > re[0] { rng.gen_range(re[0]..re[1]) } else { re[0] };
            let e = if l1 > l0 { rng.gen_range(l0..l1) } else { l0 };
            let y = 10f64.powf(e);
            C64::new(x, if rng.gen_bool(0.5) { y } else { -y })
        })
        .collect()
}

#[derive(Debug, Deserialize)]
struct TableRow {
    x: f64,
    p: f64,
    q: f64,
    r: f64,
}

fn read_table(path: &Path) -> Result<Table, CliError> {
    let mut rd = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let mut t = Table { x: vec![], p: vec![], q: vec![], r: vec![] };
    for row in rd.deserialize() {
        let row: TableRow = row.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        t.x.push(row.x);
        t.p.push(row.p);
        t.q.push(row.q);
        t.r.push(row.r);
    }
    Ok(t)
}

#[cfg(test)]
mod tests {
    use super::*;

    const FULL: &str = r#"
[problem]
family = "bessel"
delta = 0.5
nu = -0.5
gamma = 0.25
b = 1.0

[extension]
kind = "coupled"
phi = 1.0
r = [[1.0, 1.0], [0.0, 1.0]]

[grid]
kind = "random"
count = 4
re = [-2.0, 2.0]
im_abs = [0.01, 5.0]
seed = 9

[tolerances]
rtol = 1e-7

[output]
format = "csv"
"#;

    #[test]
    fn round_trip() {
        let cfg = RunConfig::parse(FULL).unwrap();
        let again = RunConfig::parse(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        assert_eq!(cfg.output.format, Format::Csv);
    }

    #[test]
    fn infinite_end_round_trip() {
        let text = "[problem]\nfamily = \"bessel\"\ndelta = 0.0\nnu = 0.0\ngamma = 0.5\nb = \"inf\"\n";
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.bessel_params().unwrap().b, Bound::Infinite);
        assert_eq!(RunConfig::parse(&cfg.to_toml().unwrap()).unwrap(), cfg);
    }

    #[test]
    fn rejects_bad_documents() {
        for text in [
            "[problem]\nfamily = \"airy\"\n",
            "[problem]\nfamily = \"constant\"\np = 1.0\nq = 0.0\nr = 1.0\na = 0.0\nb = 1.0\nextra = 2\n",
            "[problem]\nfamily = \"bessel\"\ndelta = 0.0\nnu = 0.0\ngamma = 0.5\nb = \"forever\"\n",
        ] {
            assert!(matches!(RunConfig::parse(text), Err(CliError::Config(_))), "{text}");
        }
        let coupled = FULL.replace("[[1.0, 1.0], [0.0, 1.0]]", "[[1.0, 1.0], [1.0, 1.0]]");
        assert!(matches!(RunConfig::parse(&coupled), Err(CliError::Config(_))));
        let real = FULL.replace("kind = \"random\"\ncount = 4\nre = [-2.0, 2.0]\nim_abs = [0.01, 5.0]\nseed = 9", "kind = \"points\"\npoints = [[1.0, 0.0]]");
        assert!(matches!(RunConfig::parse(&real), Err(CliError::Config(_))));
    }

    #[test]
    fn random_grid_is_seeded() {
        let a = random_points(20, [-1.0, 1.0], [1e-3, 10.0], 5);
        assert_eq!(a, random_points(20, [-1.0, 1.0], [1e-3, 10.0], 5));
        assert_ne!(a, random_points(20, [-1.0, 1.0], [1e-3, 10.0], 6));
        assert!(a.iter().all(|z| (1e-3..=10.0).contains(&z.im.abs())));
    }

    #[test]
    fn rect_order() {
        let g = GridConfig::Rect { re: [0.0, 1.0], im: [1.0, 2.0], n_re: 2, n_im: 2 };
        let pts = g.points();
        assert_eq!(pts, vec![C64::new(0.0, 1.0), C64::new(1.0, 1.0), C64::new(0.0, 2.0), C64::new(1.0, 2.0)]);
    }
}
