use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::bench::Method;
use super::synthetic::SyntheticSpec;
use crate::error::{Error, Result};
use crate::ladmap::LadmapConfig;

/// `key = value` lines; `#` starts a comment, blank lines are ignored.
pub fn parse_key_values(text: &str) -> Result<BTreeMap<String, String>> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::Format(format!("line {}: expected key=value, got {raw:?}", i + 1)))?;
        let key = k.trim().to_string();
        if out.insert(key.clone(), v.trim().to_string()).is_some() {
            return Err(Error::Format(format!("line {}: duplicate key {key:?}", i + 1)));
        }
    }
    Ok(out)
}

fn parse_value<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse()
        .map_err(|_| Error::Config(format!("cannot parse {key} = {v:?}")))
}

/// Benchmark suite description.
///
/// ```text
/// specs = 10,20,200,5; 15,20,300,5
/// seeds = 0,1,2
/// mu = 0.1
/// methods = ladmap, ladmap-acc, adm, ladm, apg
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub specs: Vec<SyntheticSpec>,
    pub mu: f64,
    pub methods: Vec<Method>,
    pub ladmap: LadmapConfig,
    pub cache_dir: Option<PathBuf>,
    /// Seed for clustering.
    pub cluster_seed: u64,
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut kv = parse_key_values(text)?;
        let mut take = |k: &str| kv.remove(k);

        let seeds: Vec<u64> = match take("seeds") {
            Some(v) => v
                .split(',')
                .map(|t| parse_value("seeds", t.trim()))
                .collect::<Result<_>>()?,
            None => vec![0],
        };
        let corrupt_frac = take("corrupt_frac").map(|v| parse_value("corrupt_frac", &v)).transpose()?;
        let noise_scale = take("noise_scale").map(|v| parse_value("noise_scale", &v)).transpose()?;
        let mut specs = Vec::new();
        if let Some(v) = take("specs") {
            for item in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
                let dims: Vec<usize> = item
                    .split(',')
                    .map(|t| parse_value("specs", t.trim()))
                    .collect::<Result<_>>()?;
                let [s, p, d, r] = dims[..] else {
                    return Err(Error::Config(format!("spec {item:?} needs four numbers s,p,d,rank")));
                };
                for &seed in &seeds {
                    let mut spec = SyntheticSpec::new(s, p, d, r, seed);
                    if let Some(c) = corrupt_frac {
                        spec.corrupt_frac = c;
                    }
                    if let Some(n) = noise_scale {
                        spec.noise_scale = n;
                    }
                    spec.validate()?;
                    specs.push(spec);
                }
            }
        }
        let mu = take("mu").map(|v| parse_value("mu", &v)).transpose()?.unwrap_or(0.1);
        let methods = match take("methods") {
            Some(v) => v
                .split(',')
                .map(|t| t.trim().parse())
                .collect::<Result<_>>()?,
            None => Method::ALL.to_vec(),
        };
        let mut ladmap = LadmapConfig::default();
        if let Some(v) = take("eps1") {
            ladmap.eps1 = parse_value("eps1", &v)?;
        }
        if let Some(v) = take("eps2") {
            ladmap.eps2 = parse_value("eps2", &v)?;
        }
        if let Some(v) = take("beta0") {
            ladmap.beta0 = Some(parse_value("beta0", &v)?);
        }
        if let Some(v) = take("beta_max") {
            ladmap.beta_max = parse_value("beta_max", &v)?;
        }
        if let Some(v) = take("rho0") {
            ladmap.rho0 = parse_value("rho0", &v)?;
        }
        if let Some(v) = take("max_iter") {
            ladmap.max_iter = parse_value("max_iter", &v)?;
        }
        ladmap.validate()?;
        let cache_dir = take("cache_dir").map(PathBuf::from);
        let cluster_seed = take("cluster_seed")
            .map(|v| parse_value("cluster_seed", &v))
            .transpose()?
            .unwrap_or(0);
        if let Some(k) = kv.keys().next() {
            return Err(Error::Config(format!("unknown key {k:?}")));
        }
        Ok(Self {
            specs,
            mu,
            methods,
            ladmap,
            cache_dir,
            cluster_seed,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_solver_defaults() {
        let c = SuiteConfig::parse("").unwrap();
        assert!(c.specs.is_empty());
        assert_eq!(c.mu, 0.1);
        assert_eq!(c.ladmap, LadmapConfig::default());
        assert_eq!(c.methods, Method::ALL.to_vec());
    }

    #[test]
    fn full_file() {
        let text = "# table one\nspecs = 10,20,200,5 ; 4,5,6,2\nseeds=3,4\nmu = 0.2\n\
                    methods = ladmap, apg\neps1 = 1e-3\nbeta_max=1e3\ncache_dir = /tmp/x\n";
        let c = SuiteConfig::parse(text).unwrap();
        assert_eq!(c.specs.len(), 4);
        assert_eq!(c.specs[1].seed, 4);
        assert_eq!(c.specs[2].d, 6);
        assert_eq!(c.methods, vec![Method::Ladmap, Method::Apg]);
        assert_eq!(c.ladmap.eps1, 1e-3);
        assert_eq!(c.ladmap.beta_max, 1e3);
        assert_eq!(c.cache_dir.as_deref(), Some(Path::new("/tmp/x")));
    }

    #[test]
    fn rejects_bad_lines() {
        assert!(SuiteConfig::parse("specs = 1,2,3").is_err());
        assert!(SuiteConfig::parse("nonsense").is_err());
        assert!(SuiteConfig::parse("colour = red").is_err());
        assert!(SuiteConfig::parse("mu = 1\nmu = 2").is_err());
        assert!(SuiteConfig::parse("methods = simplex").is_err());
        assert!(SuiteConfig::parse("specs = 2,3,4,5").is_err());
    }
}
