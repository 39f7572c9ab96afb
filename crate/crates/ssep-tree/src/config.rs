//! Line-oriented experiment configuration.
//!
//! The format is `key = value` lines under `[section]` headers, with `#`
//! comments. Sections: `[experiment]` and `[caps]`. Unknown keys are errors
//! (configs are audit trails, so silent typos are worse than refusals), and
//! every run writes its fully resolved config next to its outputs.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::error::{Error, Result};
use crate::observable::LocalFunction;
use crate::tree::VertexAddr;

#[derive(Debug, Clone, PartialEq)]
pub enum RadiusSpec {
    Fixed(u32),
    /// Radius from the truncation policy, fed the protection horizon
    /// (capped by the largest simulated t).
    Auto,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LambdaPolicy {
    /// 1/N for CLT-scaled runs, t^{-1/2} otherwise.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum FunctionSpec {
    /// eta(x) - p at a dotted-word site.
    Occupation { site: String },
    /// eta(x) eta(y) - p^2 at two dotted-word sites.
    PairProduct { site_a: String, site_b: String },
    /// Load from a function file (see the function file format in README).
    File { path: String },
    /// Inline sites + table.
    Inline { sites: Vec<String>, table: Vec<f64> },
}

#[derive(Debug, Clone)]
pub struct Caps {
    pub vertices: u64,
    pub tuple_states: u128,
    pub config_states: u128,
}

impl Default for Caps {
    fn default() -> Self {
        Caps {
            vertices: crate::tree::DEFAULT_VERTEX_CAP,
            tuple_states: crate::oracle::DEFAULT_TUPLE_STATE_CAP,
            config_states: crate::oracle::DEFAULT_CONFIG_STATE_CAP,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub d: u8,
    pub p: f64,
    pub radius: RadiusSpec,
    pub seed: u64,
    pub replicates: u64,
    /// Optional per-t override of `replicates` (aligned with `t_grid`).
    pub replicates_per_t: Option<Vec<u64>>,
    pub workers: usize,
    pub out_dir: PathBuf,
    pub function: FunctionSpec,
    pub center_function: bool,
    pub t_grid: Vec<f64>,
    pub big_n: u64,
    pub clt_runs: u32,
    pub gamma: f64,
    pub lambda: LambdaPolicy,
    pub u_grid: Vec<f64>,
    pub c_grid: Vec<f64>,
    pub duality_reps: u64,
    pub cutoff_tol: f64,
    pub safety_c: f64,
    /// Protection horizon handed to the truncation-radius policy under
    /// `radius = auto`; the policy's worst-case jump count makes a full
    /// statistical horizon unbuildable, so auto protects this window and the
    /// R vs R+2 check validates the remainder empirically.
    pub protect_horizon: f64,
    pub heat_d_grid: Vec<u8>,
    pub heat_u_grid: Vec<f64>,
    pub heat_reps: u64,
    /// Known long-run variance for CLT/MDP normalization; `auto` resolves the
    /// occupation oracle value.
    pub sigma_sq: Option<f64>,
    pub caps: Caps,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            d: 2,
            p: 0.5,
            radius: RadiusSpec::Fixed(5),
            seed: 1,
            replicates: 1000,
            replicates_per_t: None,
            workers: 1,
            out_dir: PathBuf::from("out"),
            function: FunctionSpec::Occupation { site: String::new() },
            center_function: false,
            t_grid: vec![10.0],
            big_n: 50,
            clt_runs: 1,
            gamma: 0.7,
            lambda: LambdaPolicy::Auto,
            u_grid: vec![0.5, 1.0],
            c_grid: vec![-0.5, 0.5],
            duality_reps: 20_000,
            cutoff_tol: 0.004,
            safety_c: 2.0,
            protect_horizon: 2.0,
            heat_d_grid: vec![2, 3],
            heat_u_grid: vec![0.5, 1.0, 2.0, 4.0],
            heat_reps: 100_000,
            sigma_sq: None,
            caps: Caps::default(),
        }
    }
}

fn parse_num<T: std::str::FromStr>(field: &str, value: &str) -> Result<T> {
    value.trim().parse().map_err(|_| Error::config(field, format!("cannot parse {value:?}")))
}

fn parse_list<T: std::str::FromStr>(field: &str, value: &str) -> Result<Vec<T>> {
    value
        .split(',')
        .map(|v| parse_num::<T>(field, v))
        .collect()
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = ExperimentConfig::default();
        let mut section = "experiment".to_string();
        let mut seen = BTreeMap::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let name = name.strip_suffix(']').ok_or_else(|| {
                    Error::config("section", format!("line {}: unterminated {line:?}", lineno + 1))
                })?;
                section = name.trim().to_string();
                if section != "experiment" && section != "caps" {
                    return Err(Error::config("section", format!("unknown section [{section}]")));
                }
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                Error::config("line", format!("line {}: expected key = value, got {line:?}", lineno + 1))
            })?;
            let key = key.trim();
            let value = value.trim();
            let full = format!("{section}.{key}");
            if seen.insert(full.clone(), lineno).is_some() {
                return Err(Error::config(&full, "duplicate key"));
            }
            cfg.apply(&section, key, value)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn apply(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        match (section, key) {
            ("experiment", "d") => self.d = parse_num("d", value)?,
            ("experiment", "p") => self.p = parse_num("p", value)?,
            ("experiment", "radius") => {
                self.radius = if value == "auto" {
                    RadiusSpec::Auto
                } else {
                    RadiusSpec::Fixed(parse_num("radius", value)?)
                };
            }
            ("experiment", "seed") => self.seed = parse_num("seed", value)?,
            ("experiment", "replicates") => self.replicates = parse_num("replicates", value)?,
            ("experiment", "replicates_per_t") => {
                self.replicates_per_t = Some(parse_list("replicates_per_t", value)?)
            }
            ("experiment", "workers") => self.workers = parse_num("workers", value)?,
            ("experiment", "out_dir") => self.out_dir = PathBuf::from(value),
            ("experiment", "function") => self.function = Self::parse_function(value)?,
            ("experiment", "function_sites") => {
                let sites = value.split(',').map(|s| s.trim().to_string()).collect();
                match &mut self.function {
                    FunctionSpec::Inline { sites: s, .. } => *s = sites,
                    _ => self.function = FunctionSpec::Inline { sites, table: Vec::new() },
                }
            }
            ("experiment", "function_table") => {
                let table = parse_list("function_table", value)?;
                match &mut self.function {
                    FunctionSpec::Inline { table: t, .. } => *t = table,
                    _ => self.function = FunctionSpec::Inline { sites: Vec::new(), table },
                }
            }
            ("experiment", "center_function") => {
                self.center_function = parse_num::<bool>("center_function", value)?
            }
            ("experiment", "t_grid") => self.t_grid = parse_list("t_grid", value)?,
            ("experiment", "big_n") => self.big_n = parse_num("big_n", value)?,
            ("experiment", "clt_runs") => self.clt_runs = parse_num("clt_runs", value)?,
            ("experiment", "gamma") => self.gamma = parse_num("gamma", value)?,
            ("experiment", "lambda") => {
                self.lambda = if value == "auto" {
                    LambdaPolicy::Auto
                } else {
                    LambdaPolicy::Fixed(parse_num("lambda", value)?)
                };
            }
            ("experiment", "u_grid") => self.u_grid = parse_list("u_grid", value)?,
            ("experiment", "c_grid") => self.c_grid = parse_list("c_grid", value)?,
            ("experiment", "duality_reps") => self.duality_reps = parse_num("duality_reps", value)?,
            ("experiment", "cutoff_tol") => self.cutoff_tol = parse_num("cutoff_tol", value)?,
            ("experiment", "safety_c") => self.safety_c = parse_num("safety_c", value)?,
            ("experiment", "protect_horizon") => {
                self.protect_horizon = parse_num("protect_horizon", value)?
            }
            ("experiment", "heat_d_grid") => self.heat_d_grid = parse_list("heat_d_grid", value)?,
            ("experiment", "heat_u_grid") => self.heat_u_grid = parse_list("heat_u_grid", value)?,
            ("experiment", "heat_reps") => self.heat_reps = parse_num("heat_reps", value)?,
            ("experiment", "sigma_sq") => {
                self.sigma_sq =
                    if value == "auto" { None } else { Some(parse_num("sigma_sq", value)?) };
            }
            ("caps", "vertices") => self.caps.vertices = parse_num("caps.vertices", value)?,
            ("caps", "tuple_states") => {
                self.caps.tuple_states = parse_num("caps.tuple_states", value)?
            }
            ("caps", "config_states") => {
                self.caps.config_states = parse_num("caps.config_states", value)?
            }
            _ => return Err(Error::config(&format!("{section}.{key}"), "unknown key")),
        }
        Ok(())
    }

    fn parse_function(value: &str) -> Result<FunctionSpec> {
        if value == "occupation" {
            return Ok(FunctionSpec::Occupation { site: String::new() });
        }
        if let Some(site) = value.strip_prefix("occupation:") {
            return Ok(FunctionSpec::Occupation { site: site.trim().to_string() });
        }
        if let Some(rest) = value.strip_prefix("pair:") {
            let (a, b) = rest.split_once(';').ok_or_else(|| {
                Error::config("function", "pair needs two sites: pair:<site>;<site>")
            })?;
            return Ok(FunctionSpec::PairProduct {
                site_a: a.trim().to_string(),
                site_b: b.trim().to_string(),
            });
        }
        if let Some(path) = value.strip_prefix("file:") {
            return Ok(FunctionSpec::File { path: path.trim().to_string() });
        }
        if value == "inline" {
            return Ok(FunctionSpec::Inline { sites: Vec::new(), table: Vec::new() });
        }
        Err(Error::config(
            "function",
            format!("unknown function spec {value:?}; use occupation[:site], pair:a;b, file:path, or inline"),
        ))
    }

    fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(Error::config("d", "need d >= 2"));
        }
        if !(self.p > 0.0 && self.p < 1.0) {
            return Err(Error::config("p", "need 0 < p < 1"));
        }
        if self.t_grid.is_empty() {
            return Err(Error::config("t_grid", "need at least one t"));
        }
        if self.t_grid.iter().any(|&t| !(t > 0.0)) {
            return Err(Error::config("t_grid", "every t must be positive"));
        }
        if self.t_grid.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::config("t_grid", "must be strictly increasing"));
        }
        if let Some(rp) = &self.replicates_per_t {
            if rp.len() != self.t_grid.len() {
                return Err(Error::config("replicates_per_t", "length must match t_grid"));
            }
        }
        if self.replicates == 0 {
            return Err(Error::config("replicates", "need >= 1"));
        }
        if self.workers == 0 {
            return Err(Error::config("workers", "need >= 1"));
        }
        if !(self.gamma > 0.5 && self.gamma < 1.0) {
            return Err(Error::config("gamma", "need 1/2 < gamma < 1"));
        }
        if let LambdaPolicy::Fixed(l) = self.lambda {
            if !(l > 0.0) {
                return Err(Error::config("lambda", "need lambda > 0"));
            }
        }
        if self.big_n == 0 {
            return Err(Error::config("big_n", "need N >= 1"));
        }
        if !(self.cutoff_tol > 0.0) {
            return Err(Error::config("cutoff_tol", "need > 0"));
        }
        if !(self.protect_horizon > 0.0) {
            return Err(Error::config("protect_horizon", "need > 0"));
        }
        if self.heat_d_grid.iter().any(|&d| d < 2) {
            return Err(Error::config("heat_d_grid", "every d must be >= 2"));
        }
        if matches!(self.function, FunctionSpec::Inline { ref sites, ref table }
            if sites.is_empty() || table.is_empty())
        {
            return Err(Error::config(
                "function",
                "inline function needs function_sites and function_table",
            ));
        }
        Ok(())
    }

    /// Builds the observable (reading the function file if necessary).
    pub fn resolve_function(&self) -> Result<LocalFunction> {
        let f = match &self.function {
            FunctionSpec::Occupation { site } => {
                let x = VertexAddr::parse_dotted(site, self.d)?;
                LocalFunction::occupation(x, self.p)?
            }
            FunctionSpec::PairProduct { site_a, site_b } => {
                let a = VertexAddr::parse_dotted(site_a, self.d)?;
                let b = VertexAddr::parse_dotted(site_b, self.d)?;
                LocalFunction::centered_pair_product(a, b, self.p)?
            }
            FunctionSpec::File { path } => {
                let text = std::fs::read_to_string(path)?;
                LocalFunction::from_file_string(&text, self.d)?
            }
            FunctionSpec::Inline { sites, table } => {
                let sites: Vec<VertexAddr> = sites
                    .iter()
                    .map(|s| VertexAddr::parse_dotted(s, self.d))
                    .collect::<Result<_>>()?;
                LocalFunction::new(sites, table.clone())?
            }
        };
        Ok(if self.center_function { f.center(self.p) } else { f })
    }

    /// Radius after applying the policy.
    pub fn resolve_radius(&self, f: &LocalFunction) -> u32 {
        match self.radius {
            RadiusSpec::Fixed(r) => r,
            RadiusSpec::Auto => {
                let horizon = self
                    .t_grid
                    .last()
                    .copied()
                    .unwrap_or(self.protect_horizon)
                    .min(self.protect_horizon);
                crate::tree::truncation_radius(self.d, f.support_radius(), horizon, self.safety_c)
            }
        }
    }

    /// Lambda for a run at horizon t with CLT scale N.
    pub fn resolve_lambda(&self, t: f64, clt: bool) -> f64 {
        match self.lambda {
            LambdaPolicy::Fixed(l) => l,
            LambdaPolicy::Auto => {
                if clt {
                    1.0 / self.big_n as f64
                } else {
                    t.powf(-0.5)
                }
            }
        }
    }

    pub fn resolve_sigma_sq(&self, f: &LocalFunction) -> Result<f64> {
        if let Some(s) = self.sigma_sq {
            return Ok(s);
        }
        // Oracle value exists for the occupation observable.
        if f.arity() == 1 {
            let tab = f.table();
            if (tab[0] + self.p).abs() < 1e-12 && (tab[1] - (1.0 - self.p)).abs() < 1e-12 {
                return crate::oracle::sigma_occupation_exact(self.d, self.p);
            }
        }
        Err(Error::config(
            "sigma_sq",
            "no oracle value for this observable; set sigma_sq explicitly",
        ))
    }

    /// Canonical serialized form, written next to every run's outputs.
    pub fn to_config_string(&self) -> String {
        let mut s = String::from("[experiment]\n");
        s.push_str(&format!("d = {}\n", self.d));
        s.push_str(&format!("p = {}\n", self.p));
        match self.radius {
            RadiusSpec::Fixed(r) => s.push_str(&format!("radius = {r}\n")),
            RadiusSpec::Auto => s.push_str("radius = auto\n"),
        }
        s.push_str(&format!("seed = {}\n", self.seed));
        s.push_str(&format!("replicates = {}\n", self.replicates));
        if let Some(rp) = &self.replicates_per_t {
            s.push_str(&format!("replicates_per_t = {}\n", join(rp)));
        }
        s.push_str(&format!("workers = {}\n", self.workers));
        s.push_str(&format!("out_dir = {}\n", self.out_dir.display()));
        match &self.function {
            FunctionSpec::Occupation { site } => s.push_str(&format!("function = occupation:{site}\n")),
            FunctionSpec::PairProduct { site_a, site_b } => {
                s.push_str(&format!("function = pair:{site_a};{site_b}\n"))
            }
            FunctionSpec::File { path } => s.push_str(&format!("function = file:{path}\n")),
            FunctionSpec::Inline { sites, table } => {
                s.push_str("function = inline\n");
                s.push_str(&format!("function_sites = {}\n", sites.join(",")));
                s.push_str(&format!("function_table = {}\n", join(table)));
            }
        }
        s.push_str(&format!("center_function = {}\n", self.center_function));
        s.push_str(&format!("t_grid = {}\n", join(&self.t_grid)));
        s.push_str(&format!("big_n = {}\n", self.big_n));
        s.push_str(&format!("clt_runs = {}\n", self.clt_runs));
        s.push_str(&format!("gamma = {}\n", self.gamma));
        match self.lambda {
            LambdaPolicy::Auto => s.push_str("lambda = auto\n"),
            LambdaPolicy::Fixed(l) => s.push_str(&format!("lambda = {l}\n")),
        }
        s.push_str(&format!("u_grid = {}\n", join(&self.u_grid)));
        s.push_str(&format!("c_grid = {}\n", join(&self.c_grid)));
        s.push_str(&format!("duality_reps = {}\n", self.duality_reps));
        s.push_str(&format!("cutoff_tol = {}\n", self.cutoff_tol));
        s.push_str(&format!("safety_c = {}\n", self.safety_c));
        s.push_str(&format!("protect_horizon = {}\n", self.protect_horizon));
        s.push_str(&format!("heat_d_grid = {}\n", join(&self.heat_d_grid)));
        s.push_str(&format!("heat_u_grid = {}\n", join(&self.heat_u_grid)));
        s.push_str(&format!("heat_reps = {}\n", self.heat_reps));
        match self.sigma_sq {
            Some(v) => s.push_str(&format!("sigma_sq = {v}\n")),
            None => s.push_str("sigma_sq = auto\n"),
        }
        s.push_str("\n[caps]\n");
        s.push_str(&format!("vertices = {}\n", self.caps.vertices));
        s.push_str(&format!("tuple_states = {}\n", self.caps.tuple_states));
        s.push_str(&format!("config_states = {}\n", self.caps.config_states));
        s
    }
}

fn join<T: std::fmt::Display>(xs: &[T]) -> String {
    xs.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_minimal_config() {
        let cfg = ExperimentConfig::parse(
            "[experiment]\nd = 2\np = 0.5\nradius = 4\nt_grid = 5,10\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(cfg.d, 2);
        assert_eq!(cfg.radius, RadiusSpec::Fixed(4));
        assert_eq!(cfg.t_grid, vec![5.0, 10.0]);
        assert_eq!(cfg.seed, 9);
    }

    #[test]
    fn rejects_unknown_key_with_field_name() {
        let err = ExperimentConfig::parse("[experiment]\nwat = 3\n").unwrap_err();
        match err {
            Error::Config { field, .. } => assert_eq!(field, "experiment.wat"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(ExperimentConfig::parse("[experiment]\np = 1.5\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\ngamma = 0.4\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nt_grid = 3,2\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nt_grid = 0\n").is_err());
        assert!(ExperimentConfig::parse("[experiment]\nworkers = 0\n").is_err());
    }

    #[test]
    fn rejects_duplicate_keys() {
        assert!(ExperimentConfig::parse("[experiment]\nd = 2\nd = 3\n").is_err());
    }

    #[test]
    fn roundtrips_through_canonical_form() {
        let text = "[experiment]\nd = 3\np = 0.25\nradius = auto\nfunction = pair:0;1\n\
                    t_grid = 1,2,4\nlambda = 0.125\nworkers = 8\n";
        let cfg = ExperimentConfig::parse(text).unwrap();
        let canon = cfg.to_config_string();
        let cfg2 = ExperimentConfig::parse(&canon).unwrap();
        assert_eq!(cfg2.d, 3);
        assert_eq!(cfg2.radius, RadiusSpec::Auto);
        assert_eq!(cfg2.lambda, LambdaPolicy::Fixed(0.125));
        assert_eq!(cfg2.to_config_string(), canon);
    }

    #[test]
    fn function_resolution() {
        let cfg = ExperimentConfig::parse("[experiment]\nfunction = occupation:0.1\n").unwrap();
        let f = cfg.resolve_function().unwrap();
        assert_eq!(f.arity(), 1);
        assert_eq!(f.sites()[0].to_dotted(), "0.1");

        let cfg = ExperimentConfig::parse(
            "[experiment]\nfunction = inline\nfunction_sites = ,0\nfunction_table = 1,0,0,1\ncenter_function = true\n",
        )
        .unwrap();
        let f = cfg.resolve_function().unwrap();
        assert_eq!(f.arity(), 2);
        assert!(f.mean_under_nu_p(0.5).abs() < 1e-14);
    }

    #[test]
    fn auto_radius_uses_protection_horizon() {
        let cfg = ExperimentConfig::parse(
            "[experiment]\nradius = auto\nt_grid = 40\nprotect_horizon = 2\nsafety_c = 2\n",
        )
        .unwrap();
        let f = cfg.resolve_function().unwrap();
        // ceil(0 + 3*2 + 2*sqrt(6)) = ceil(10.9) = 11
        assert_eq!(cfg.resolve_radius(&f), 11);
        // Short grids keep their own horizon.
        let cfg2 = ExperimentConfig::parse(
            "[experiment]\nradius = auto\nt_grid = 1\nprotect_horizon = 2\nsafety_c = 3\n",
        )
        .unwrap();
        assert_eq!(cfg2.resolve_radius(&f), 9); // ceil(3 + 3*sqrt(3)) at T=1
    }

    #[test]
    fn sigma_oracle_resolution() {
        let cfg = ExperimentConfig::parse("[experiment]\nfunction = occupation:\n").unwrap();
        let f = cfg.resolve_function().unwrap();
        assert!((cfg.resolve_sigma_sq(&f).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        let cfg2 = ExperimentConfig::parse("[experiment]\nfunction = pair:;0\n").unwrap();
        let f2 = cfg2.resolve_function().unwrap();
        assert!(cfg2.resolve_sigma_sq(&f2).is_err());
    }
}
