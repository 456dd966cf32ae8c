//! Generator strings of the form `kind:key=value,key=value`.

use std::collections::BTreeMap;
use std::str::FromStr;

use anyhow::{anyhow, bail, Context, Result};
use spinloc::graphs::{erdos_renyi, random_regular};
use spinloc::model::{
    build_antiferro, build_curie_weiss, build_diluted_sk, build_hopfield, build_random_psd, build_sk, IsingModel,
};
use spinloc::rng::chain_seed;

pub const KINDS: &str = "sk, diluted-sk, hopfield, curie-weiss, antiferro-regular, antiferro-gnp, random-psd, free";

#[derive(Debug, Clone)]
pub struct Generator {
    kind: String,
    params: BTreeMap<String, String>,
}

impl FromStr for Generator {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s.split_once(':').unwrap_or((s, ""));
        let mut params = BTreeMap::new();
        for kv in rest.split(',').filter(|t| !t.trim().is_empty()) {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| anyhow!("expected key=value, got '{kv}'"))?;
            if params.insert(k.trim().to_string(), v.trim().to_string()).is_some() {
                bail!("key '{}' given twice", k.trim());
            }
        }
        Ok(Self {
            kind: kind.trim().to_string(),
            params,
        })
    }
}

impl Generator {
    fn take<T: FromStr>(&mut self, key: &str) -> Result<Option<T>>
    where
        T::Err: std::fmt::Display,
    {
        match self.params.remove(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|e| anyhow!("{}: bad value '{v}' for {key}: {e}", self.kind)),
        }
    }

    fn need<T: FromStr>(&mut self, key: &str) -> Result<T>
    where
        T::Err: std::fmt::Display,
    {
        self.take(key)?
            .ok_or_else(|| anyhow!("{} needs {key}=...", self.kind))
    }

    /// Builds the model; `seed` is used unless the string carries its own.
    pub fn build(mut self, seed: u64) -> Result<IsingModel> {
        let seed = self.take("seed")?.unwrap_or(seed);
        let mag: Option<i64> = self.take("mag")?;
        let model = match self.kind.as_str() {
            "sk" => build_sk(self.need("n")?, self.need("beta")?, seed),
            "diluted-sk" => {
                let n = self.need("n")?;
                let d = self.need("d")?;
                let g = random_regular(n, d, chain_seed(seed, 0))?;
                build_diluted_sk(&g, self.need("beta")?, chain_seed(seed, 1))
            }
            "hopfield" => build_hopfield(self.need("n")?, self.need("m")?, self.need("beta")?, seed),
            "curie-weiss" => {
                let n: usize = self.need("n")?;
                let h = self.take("h")?.unwrap_or(0.0);
                build_curie_weiss(n, self.need("gamma")?, vec![h; n])?
            }
            "antiferro-regular" | "antiferro-gnp" => {
                let n: usize = self.need("n")?;
                let g = if self.kind == "antiferro-regular" {
                    random_regular(n, self.need("d")?, seed)?
                } else {
                    erdos_renyi(n, self.need("p")?, seed)?
                };
                let beta = self.need("beta")?;
                let delta = self.take("delta")?.unwrap_or(0.1);
                let h = self.take("h")?.unwrap_or(0.0);
                build_antiferro(&g, beta, vec![h; n], delta)?.0
            }
            "random-psd" => build_random_psd(
                self.need("n")?,
                self.need("norm")?,
                self.take("gamma")?.unwrap_or(0.0),
                self.take("field")?.unwrap_or(0.0),
                seed,
            )?,
            "free" => IsingModel::free(self.need("n")?),
            other => bail!("unknown generator '{other}' (known: {KINDS})"),
        };
        if let Some(k) = self.params.keys().next() {
            bail!("{}: unknown key '{k}'", self.kind);
        }
        match mag {
            Some(k) => model.with_magnetization(Some(k)).context("mag"),
            None => Ok(model),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_and_builds() {
        let m = "sk:n=10,beta=0.3".parse::<Generator>().unwrap().build(1).unwrap();
        assert_eq!(m.n(), 10);
        let m = "curie-weiss:n=6,gamma=2,mag=0".parse::<Generator>().unwrap().build(1).unwrap();
        assert_eq!(m.magnetization(), Some(0));
    }

    #[test]
    fn rejects_unknown_keys_and_kinds() {
        assert!("sk:n=10,beta=0.3,bogus=1".parse::<Generator>().unwrap().build(1).is_err());
        assert!("ising:n=3".parse::<Generator>().unwrap().build(1).is_err());
        assert!("sk:n=10".parse::<Generator>().unwrap().build(1).is_err());
        assert!("sk:n=10,n=3".parse::<Generator>().is_err());
    }
}
