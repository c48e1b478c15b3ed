use anyhow::Context;
use serde::{Deserialize, Serialize};
use shadowkit::covering::ChainConfig;
use shadowkit::dynamics::{builtin_map, MapSpec};
use shadowkit::geometry::{make_subdivision, AxisBox, Space, Subdivision};
use shadowkit::shadowing::{generate_pseudo_orbit, PerturbMode, PseudoOrbit, ShadowConfig};
use shadowkit::transition::{build_graph, GraphConfig, TransitionGraph};
use std::path::{Path, PathBuf};

/// One orbit segment for `splice`: the true orbit of `x0` with `len` points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Segment {
    pub x0: Vec<f64>,
    pub len: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OracleConfig {
    /// Lattice points per axis for the brute-force searches (0 skips them).
    pub grid: usize,
    pub zoom: usize,
    /// Search box for the brute-force shadow; the whole space when absent.
    pub region: Option<[Vec<f64>; 2]>,
}

impl Default for OracleConfig {
    fn default() -> Self {
        OracleConfig { grid: 0, zoom: 2, region: None }
    }
}

/// Everything a run depends on. Serialized verbatim into every output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub map: String,
    /// Checked against the map when given.
    pub n: Option<usize>,
    pub space: Option<Space>,
    pub m: u32,
    pub delta: f64,
    /// Shadowing tolerance; chi of the subdivision when absent.
    pub eps: Option<f64>,
    /// Window half-length N.
    pub window: usize,
    pub two_sided: bool,
    pub x0: Option<Vec<f64>>,
    pub mode: PerturbMode,
    pub period: Option<usize>,
    pub segments: Vec<Segment>,
    pub gap: usize,
    pub graph: GraphConfig,
    pub chain: ChainConfig,
    pub shadow: ShadowConfig,
    pub oracle: OracleConfig,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            map: "toral [[2,1],[1,1]]".into(),
            n: None,
            space: None,
            m: 4,
            delta: 1e-4,
            eps: None,
            window: 100,
            two_sided: true,
            x0: None,
            mode: PerturbMode::UniformNoise { seed: 0 },
            period: None,
            segments: Vec::new(),
            gap: 20,
            graph: GraphConfig::default(),
            chain: ChainConfig::default(),
            shadow: ShadowConfig::default(),
            oracle: OracleConfig::default(),
            output: PathBuf::from("out"),
        }
    }
}

fn bad(msg: String) -> anyhow::Error {
    shadowkit::Error::InvalidInput(msg).into()
}

impl RunConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        serde_json::from_str(&text).map_err(|e| bad(format!("{}: {e}", path.display())))
    }

    /// Range checks that the library does not already perform.
    pub fn validate(&self) -> anyhow::Result<()> {
        if !(1..=16).contains(&self.m) {
            return Err(bad(format!("m = {} is outside 1..=16", self.m)));
        }
        if !(self.delta >= 0.0 && self.delta < 1.0) {
            return Err(bad(format!("delta = {} is outside [0, 1)", self.delta)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e.is_finite()) {
                return Err(bad(format!("eps = {e} must be positive")));
            }
        }
        if self.window == 0 || self.window > 100_000 {
            return Err(bad(format!("window = {} is outside 1..=100000", self.window)));
        }
        if self.period == Some(0) {
            return Err(bad("period must be at least 1".into()));
        }
        if self.gap == 0 {
            return Err(bad("gap must be at least 1".into()));
        }
        if self.segments.iter().any(|s| s.len == 0) {
            return Err(bad("segment length must be at least 1".into()));
        }
        Ok(())
    }

    pub fn map_spec(&self) -> anyhow::Result<MapSpec> {
        let mut f = builtin_map(&self.map)?;
        if let Some(space) = self.space {
            if f.space() != space {
                let word = match space {
                    Space::Cube => "cube",
                    Space::Torus => "torus",
                };
                f = builtin_map(&format!("{} space={word}", self.map))?;
            }
        }
        if let Some(n) = self.n {
            if f.dim() != n {
                return Err(bad(format!("map '{}' has dimension {}, config says n = {n}", self.map, f.dim())));
            }
        }
        Ok(f)
    }

    pub fn subdivision(&self, f: &MapSpec) -> anyhow::Result<Subdivision> {
        Ok(make_subdivision(f.dim(), self.m, f.space())?)
    }

    pub fn graph(&self, f: &MapSpec) -> anyhow::Result<TransitionGraph> {
        let sub = self.subdivision(f)?;
        Ok(build_graph(f, &sub, &self.graph)?)
    }

    pub fn eps_or(&self, chi: f64) -> f64 {
        self.eps.unwrap_or(chi)
    }

    /// Starting point, or a fixed irrational-looking default.
    pub fn start_point(&self, n: usize) -> Vec<f64> {
        match &self.x0 {
            Some(x) => x.clone(),
            None => (0..n).map(|d| (0.3141592653589793 + 0.2718281828459045 * d as f64).fract()).collect(),
        }
    }

    pub fn pseudo_orbit(&self, f: &MapSpec) -> anyhow::Result<PseudoOrbit> {
        let x0 = self.start_point(f.dim());
        Ok(generate_pseudo_orbit(f, &x0, self.delta, self.window, &self.mode, self.two_sided)?)
    }

    pub fn region(&self, f: &MapSpec) -> anyhow::Result<AxisBox> {
        match &self.oracle.region {
            Some([lo, hi]) => Ok(AxisBox::new(lo.clone(), hi.clone(), f.space())?),
            None => Ok(AxisBox::unit(f.dim(), f.space())),
        }
    }
}
