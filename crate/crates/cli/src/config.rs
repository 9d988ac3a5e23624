//! JSON run configuration.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;
use syspred::copula::Copula;
use syspred::montecarlo::{CoverageSetup, Protocol, Roles, SamplerMethod};
use syspred::numeric::ln_gamma;
use syspred::{
    build_bivariate, build_trivariate, Case, ConditionalPredictor, Given, Marginal, OrderingMode,
    PredictionBand, SurvivalCopula, SystemStructure,
};

use crate::error::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StructureSpec {
    pub n: usize,
    pub paths: Vec<Vec<usize>>,
}

impl StructureSpec {
    pub fn build(&self, role: &str) -> Result<SystemStructure, CliError> {
        SystemStructure::new(self.n, self.paths.clone())
            .map_err(|e| CliError::Model(format!("structure {role}: {e}")))
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Structures {
    /// Defaults to the series system of `t.n` components (first failure).
    pub t1: Option<StructureSpec>,
    pub t2: Option<StructureSpec>,
    pub t: StructureSpec,
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum CopulaFamily {
    Product,
    Fgm,
    ClaytonPair,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CopulaSpec {
    pub family: CopulaFamily,
    pub n: usize,
    pub theta: Option<f64>,
    pub pair: Option<[usize; 2]>,
}

impl CopulaSpec {
    pub fn build(&self) -> Result<SurvivalCopula, CliError> {
        let model = |e: syspred::CopulaError| CliError::Model(format!("copula: {e}"));
        let theta = || {
            self.theta.ok_or_else(|| {
                CliError::Config(format!("copula family {:?} needs theta", self.family))
            })
        };
        match self.family {
            CopulaFamily::Product => SurvivalCopula::product(self.n).map_err(model),
            CopulaFamily::Fgm => SurvivalCopula::fgm(self.n, theta()?).map_err(model),
            CopulaFamily::ClaytonPair => {
                let [i, j] = self
                    .pair
                    .ok_or_else(|| CliError::Config("clayton_pair needs pair".into()))?;
                SurvivalCopula::clayton_pair(self.n, (i, j), theta()?).map_err(model)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum MarginalFamily {
    Exponential,
    Weibull,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MarginalSpec {
    pub family: MarginalFamily,
    pub mean: Option<f64>,
    pub shape: Option<f64>,
    pub scale: Option<f64>,
}

impl MarginalSpec {
    pub fn build(&self) -> Result<Marginal, CliError> {
        let model = |e: syspred::MarginalError| CliError::Model(format!("marginal: {e}"));
        match (self.family, self.mean, self.shape, self.scale) {
            (MarginalFamily::Exponential, Some(mu), None, None) => Marginal::exponential(mu).map_err(model),
            (MarginalFamily::Weibull, None, Some(k), Some(l)) => Marginal::weibull(k, l).map_err(model),
            // scale from the mean: μ = λ Γ(1 + 1/k)
            (MarginalFamily::Weibull, Some(mu), Some(k), None) if k > 0.0 => {
                Marginal::weibull(k, mu / ln_gamma(1.0 + 1.0 / k).exp()).map_err(model)
            }
            _ => Err(CliError::Config(
                "marginal must be {family: exponential, mean} or {family: weibull, shape, scale | mean}".into(),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
pub enum CaseTag {
    I,
    IIa,
    IIb,
    III,
}

impl From<CaseTag> for Case {
    fn from(c: CaseTag) -> Self {
        match c {
            CaseTag::I => Case::I,
            CaseTag::IIa => Case::IIa,
            CaseTag::IIb => Case::IIb,
            CaseTag::III => Case::III,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Range { start: f64, stop: f64, step: f64 },
}

impl Grid {
    /// Range endpoints are inclusive; points are `start + i·step`.
    pub fn points(&self) -> Result<Vec<f64>, CliError> {
        let pts = match *self {
            Grid::List(ref v) => v.clone(),
            Grid::Range { start, stop, step } => {
                if !(step > 0.0 && step.is_finite() && start.is_finite() && stop.is_finite()) {
                    return Err(CliError::Config(format!(
                        "grid step must be positive and finite, got {step}"
                    )));
                }
                if stop < start {
                    Vec::new()
                } else {
                    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
                    (0..count).map(|i| start + i as f64 * step).collect()
                }
            }
        };
        if pts.is_empty() {
            return Err(CliError::Usage("grid is empty".into()));
        }
        if let Some(x) = pts.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(CliError::Config(format!(
                "grid points must be finite and nonnegative, got {x}"
            )));
        }
        Ok(pts)
    }
}

#[derive(Debug, Clone, Copy, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum BandKindSpec {
    Centered,
    Bottom,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandSpec {
    pub kind: BandKindSpec,
    pub level: f64,
}

impl BandSpec {
    pub fn build(&self) -> Result<PredictionBand, CliError> {
        let b = match self.kind {
            BandKindSpec::Centered => PredictionBand::centered(self.level),
            BandKindSpec::Bottom => PredictionBand::bottom(self.level),
        };
        b.map_err(|e| CliError::Config(format!("band: {e}")))
    }

    /// `lower_90`, `upper_90`; bottom bands get a `bottom_` prefix.
    pub fn column_names(&self) -> (String, String) {
        let pct = format!("{}", (self.level * 100.0 * 1e6).round() / 1e6);
        let prefix = match self.kind {
            BandKindSpec::Centered => "",
            BandKindSpec::Bottom => "bottom_",
        };
        (
            format!("{prefix}lower_{pct}"),
            format!("{prefix}upper_{pct}"),
        )
    }
}

fn default_bands() -> Vec<BandSpec> {
    [0.5, 0.9]
        .map(|level| BandSpec {
            kind: BandKindSpec::Centered,
            level,
        })
        .to_vec()
}

#[derive(Debug, Clone, Copy, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GivenSpec {
    pub t1: Option<f64>,
    pub t2: Option<f64>,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum ProtocolTag {
    #[default]
    Same,
    Fresh,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoverageSpec {
    pub k: Vec<usize>,
    #[serde(default = "default_replications")]
    pub replications: usize,
    #[serde(default)]
    pub protocol: ProtocolTag,
    pub eval_draws: Option<usize>,
    #[serde(default)]
    pub known_mu: bool,
}

fn default_replications() -> usize {
    1000
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum SamplerTag {
    #[default]
    Analytic,
    Numeric,
}

fn default_taus() -> Vec<f64> {
    vec![0.05, 0.25, 0.5, 0.75, 0.95]
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub structures: Option<Structures>,
    pub copula: Option<CopulaSpec>,
    pub marginal: Option<MarginalSpec>,
    pub case: Option<CaseTag>,
    pub grid: Option<Grid>,
    #[serde(default)]
    pub given: GivenSpec,
    #[serde(default)]
    pub w: Vec<f64>,
    #[serde(default = "default_bands")]
    pub bands: Vec<BandSpec>,
    #[serde(default)]
    pub seed: u64,
    pub size: Option<usize>,
    #[serde(default)]
    pub sampler: SamplerTag,
    pub coverage: Option<CoverageSpec>,
    #[serde(default = "default_taus")]
    pub taus: Vec<f64>,
    #[serde(default = "default_true")]
    pub ols: bool,
    pub sample: Option<PathBuf>,
    pub x_col: Option<String>,
    pub y_col: Option<String>,
    pub out: Option<PathBuf>,
}

fn default_true() -> bool {
    true
}

impl Default for RunConfig {
    fn default() -> Self {
        serde_json::from_str("{}").expect("all fields optional")
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    fn require<'a, T>(v: &'a Option<T>, what: &str) -> Result<&'a T, CliError> {
        v.as_ref()
            .ok_or_else(|| CliError::Config(format!("missing field `{what}`")))
    }

    pub fn case(&self) -> Result<Case, CliError> {
        Ok((*Self::require(&self.case, "case")?).into())
    }

    pub fn copula(&self) -> Result<SurvivalCopula, CliError> {
        Self::require(&self.copula, "copula")?.build()
    }

    pub fn marginal(&self) -> Result<Marginal, CliError> {
        Self::require(&self.marginal, "marginal")?.build()
    }

    pub fn bands(&self) -> Result<Vec<PredictionBand>, CliError> {
        self.bands.iter().map(BandSpec::build).collect()
    }

    /// `(T1, T2, T)`, checked against the case tag and the copula dimension.
    pub fn roles(&self) -> Result<Roles, CliError> {
        let s = Self::require(&self.structures, "structures")?;
        let t = s.t.build("t")?;
        let t1 = match &s.t1 {
            Some(spec) => spec.build("t1")?,
            None => SystemStructure::series(t.n())
                .map_err(|e| CliError::Model(format!("structure t1: {e}")))?,
        };
        let t2 = s.t2.as_ref().map(|spec| spec.build("t2")).transpose()?;
        if let Some(c) = &self.case {
            match (c, &t2) {
                (CaseTag::III, None) => {
                    return Err(CliError::Config("case III needs structures.t2".into()))
                }
                (CaseTag::I | CaseTag::IIa | CaseTag::IIb, Some(_)) => {
                    return Err(CliError::Config(format!(
                        "case {c:?} takes two structures, got three"
                    )))
                }
                _ => {}
            }
        }
        for (name, st) in [("t1", Some(&t1)), ("t2", t2.as_ref())] {
            if let Some(st) = st {
                if st.n() != t.n() {
                    return Err(CliError::Config(format!(
                        "structure {name} has {} components, t has {}",
                        st.n(),
                        t.n()
                    )));
                }
            }
        }
        if let Some(c) = &self.copula {
            if c.n != t.n() {
                return Err(CliError::Config(format!(
                    "copula dimension {} but structures have {}",
                    c.n,
                    t.n()
                )));
            }
        }
        Ok(Roles { t1, t2, t })
    }

    pub fn predictor(&self) -> Result<ConditionalPredictor, CliError> {
        let roles = self.roles()?;
        let case = self.case()?;
        let copula: Arc<dyn Copula> = Arc::new(self.copula()?);
        let marginal = self.marginal()?;
        match roles.t2 {
            Some(t2) => {
                let d = build_trivariate(&roles.t1, &t2, &roles.t, copula)
                    .map_err(|e| CliError::Model(e.to_string()))?;
                Ok(ConditionalPredictor::triple(d, marginal))
            }
            None => {
                let mode = if case == Case::I {
                    OrderingMode::Strict
                } else {
                    OrderingMode::Weak
                };
                let d = build_bivariate(&roles.t1, &roles.t, copula, mode)
                    .map_err(|e| CliError::Model(e.to_string()))?;
                ConditionalPredictor::pair(case, d, marginal)
                    .map_err(|e| CliError::Model(e.to_string()))
            }
        }
    }

    /// The conditioning point from `given`.
    pub fn given(&self) -> Result<Given, CliError> {
        match (self.case()?, self.given.t1, self.given.t2) {
            (Case::III, Some(t1), Some(t2)) => Ok(Given::Two(t1, t2)),
            (Case::III, _, _) => Err(CliError::Config(
                "case III needs given.t1 and given.t2".into(),
            )),
            (_, Some(t1), None) => Ok(Given::One(t1)),
            (_, None, _) => Err(CliError::Config("missing field `given.t1`".into())),
            (c, _, Some(_)) => Err(CliError::Config(format!(
                "given.t2 is only used in case III, not {}",
                c.name()
            ))),
        }
    }

    /// Conditioning points for a curve: the grid is `t` in cases I/II and `t2`
    /// (with `given.t1` fixed) in case III.
    pub fn curve_points(&self) -> Result<Vec<Given>, CliError> {
        let grid = Self::require(&self.grid, "grid")?.points()?;
        if self.case()? == Case::III {
            let t1 = self
                .given
                .t1
                .ok_or_else(|| CliError::Config("case III curves need given.t1".into()))?;
            Ok(grid.into_iter().map(|t2| Given::Two(t1, t2)).collect())
        } else {
            Ok(grid.into_iter().map(Given::One).collect())
        }
    }

    pub fn sampler(&self) -> SamplerMethod {
        match self.sampler {
            SamplerTag::Analytic => SamplerMethod::Analytic,
            SamplerTag::Numeric => SamplerMethod::Numeric,
        }
    }

    pub fn coverage_setup(&self) -> Result<(CoverageSetup, &CoverageSpec, Protocol), CliError> {
        let spec = Self::require(&self.coverage, "coverage")?;
        let roles = self.roles()?;
        let case = self.case()?;
        if case == Case::III {
            return Err(CliError::Config("coverage runs cases I and II only".into()));
        }
        let mu = match self.marginal()? {
            Marginal::Exponential { mean } => mean,
            _ => {
                return Err(CliError::Config(
                    "coverage needs an exponential marginal".into(),
                ))
            }
        };
        if let Some(c) = &self.copula {
            if c.family != CopulaFamily::Product {
                return Err(CliError::Config(
                    "coverage assumes independent components (copula: product)".into(),
                ));
            }
        }
        if roles.t1 != SystemStructure::series(roles.t.n()).expect("valid size") {
            return Err(CliError::Config(
                "coverage conditions on the first failure; t1 must be the series system".into(),
            ));
        }
        if spec.k.is_empty() {
            return Err(CliError::Usage("coverage.k is empty".into()));
        }
        let protocol = match (spec.protocol, spec.eval_draws) {
            (ProtocolTag::Same, None) => Protocol::Same,
            (ProtocolTag::Same, Some(_)) => {
                return Err(CliError::Config(
                    "eval_draws applies to the fresh protocol only".into(),
                ))
            }
            (ProtocolTag::Fresh, d) => Protocol::Fresh {
                eval_draws: d.unwrap_or(200),
            },
        };
        Ok((
            CoverageSetup {
                structure: roles.t,
                case,
                mu,
            },
            spec,
            protocol,
        ))
    }
}
