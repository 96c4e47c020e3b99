use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};

use provision_core::benchmark::matmul_like;
use provision_core::similarity::DEFAULT_THRESHOLD;
use provision_core::simulator::PlatformParams;
use provision_core::PriceTable;
use serde::{Deserialize, Serialize};

pub const CONFIG_VERSION: u32 = 1;
pub const PORT_ENV: &str = "PROVISION_PORT";
pub const REGISTRY_ENV: &str = "PROVISION_REGISTRY";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServiceConfig {
    pub version: u32,
    pub listen: IpAddr,
    pub port: u16,
    pub registry_path: PathBuf,
    /// Used by `POST /plans` when the request carries no params.
    pub params: PlatformParams,
    /// Used by `POST /plans` when the request carries no prices.
    pub prices: PriceTable,
    pub threshold: f64,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        let profile = matmul_like();
        ServiceConfig {
            version: CONFIG_VERSION,
            listen: IpAddr::V4(Ipv4Addr::LOCALHOST),
            port: 8080,
            registry_path: PathBuf::from("registry"),
            params: profile.params,
            prices: profile.prices,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl ServiceConfig {
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        let cfg: ServiceConfig = serde_json::from_str(&text)
            .map_err(|e| anyhow::anyhow!("{}: {e}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Applies `PROVISION_PORT` and `PROVISION_REGISTRY` from `env`.
    pub fn with_env(mut self, env: impl Fn(&str) -> Option<String>) -> anyhow::Result<Self> {
        if let Some(port) = env(PORT_ENV) {
            self.port = port
                .trim()
                .parse()
                .map_err(|_| anyhow::anyhow!("{PORT_ENV}={port:?} is not a port number"))?;
        }
        if let Some(path) = env(REGISTRY_ENV) {
            self.registry_path = PathBuf::from(path);
        }
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        anyhow::ensure!(
            self.version == CONFIG_VERSION,
            "unsupported config version {}",
            self.version
        );
        anyhow::ensure!(self.port != 0, "port must be in 1..=65535");
        anyhow::ensure!(
            (0.0..=1.0).contains(&self.threshold),
            "threshold must lie in [0, 1]"
        );
        self.params.validate()?;
        self.prices.validate()?;
        Ok(())
    }

    pub fn addr(&self) -> SocketAddr {
        SocketAddr::new(self.listen, self.port)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid() {
        ServiceConfig::default().validate().unwrap();
    }

    #[test]
    fn env_overrides() {
        let cfg = ServiceConfig::default()
            .with_env(|k| match k {
                PORT_ENV => Some("9001".into()),
                REGISTRY_ENV => Some("/tmp/reg".into()),
                _ => None,
            })
            .unwrap();
        assert_eq!(cfg.port, 9001);
        assert_eq!(cfg.registry_path, PathBuf::from("/tmp/reg"));
    }

    #[test]
    fn rejects_bad_values() {
        let zero_port = ServiceConfig {
            port: 0,
            ..ServiceConfig::default()
        };
        assert!(zero_port.validate().is_err());
        let bad_threshold = ServiceConfig {
            threshold: 1.5,
            ..ServiceConfig::default()
        };
        assert!(bad_threshold.validate().is_err());
        assert!(ServiceConfig::default().with_env(|_| Some("http".into())).is_err());
    }

    #[test]
    fn partial_file_fills_defaults() {
        let cfg: ServiceConfig = serde_json::from_str(r#"{"version":1,"port":7000}"#).unwrap();
        assert_eq!(cfg.port, 7000);
        assert_eq!(cfg.threshold, DEFAULT_THRESHOLD);
    }
}
