//! `key = value` integrator settings. Blank lines and `#` comments are
//! ignored; unknown keys are errors.

use anyhow::{bail, Context, Result};
use cmcface_core::IntegratorConfig;
use std::path::Path;

pub fn parse(text: &str, mut cfg: IntegratorConfig) -> Result<IntegratorConfig> {
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("line {}: expected key = value", n + 1);
        };
        let (key, value) = (key.trim(), value.trim());
        let bad = || format!("line {}: bad value {value:?} for {key}", n + 1);
        match key {
            "rel_tol" => cfg.rel_tol = value.parse().with_context(bad)?,
            "abs_tol" => cfg.abs_tol = value.parse().with_context(bad)?,
            "max_steps" => cfg.max_steps = value.parse().with_context(bad)?,
            "initial_step" => cfg.initial_step = value.parse().with_context(bad)?,
            _ => bail!("line {}: unknown key {key:?}", n + 1),
        }
    }
    Ok(cfg)
}

pub fn load(path: &Path) -> Result<IntegratorConfig> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    parse(&text, IntegratorConfig::default())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_and_comments() {
        let cfg = parse("# tight\nrel_tol = 1e-12\n\n max_steps=500 # cap\n", IntegratorConfig::default()).unwrap();
        assert_eq!(cfg.rel_tol, 1e-12);
        assert_eq!(cfg.max_steps, 500);
        assert_eq!(cfg.abs_tol, IntegratorConfig::default().abs_tol);
    }

    #[test]
    fn rejects_unknown_keys_and_garbage() {
        assert!(parse("tol = 1", IntegratorConfig::default()).is_err());
        assert!(parse("rel_tol 1e-9", IntegratorConfig::default()).is_err());
        assert!(parse("rel_tol = fast", IntegratorConfig::default()).is_err());
    }
}
