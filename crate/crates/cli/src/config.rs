//! Optional TOML run configuration.
//!
//! Every field is optional. Command-line flags override the file, and the
//! file overrides the dataset registry and the library defaults.
//!
//! ```toml
//! reps = 10
//! folds = 20
//! seed = 7
//! threads = 4
//! methods = ["omega", "shift:1.0"]
//!
//! [svm]
//! c = 1.0
//! epsilon = 0.5
//! tolerance = 1e-3
//! max_epochs = 1000
//! bias = "free"
//!
//! [smote]
//! k = 10
//! extrapolate = false
//! ```

use std::path::Path;

use anyhow::{Context, Result};
use serde::Deserialize;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub reps: Option<usize>,
    pub folds: Option<usize>,
    pub seed: Option<u64>,
    pub threads: Option<usize>,
    pub methods: Option<Vec<String>>,
    pub out: Option<String>,
    #[serde(default)]
    pub svm: SvmSection,
    #[serde(default)]
    pub smote: SmoteSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SvmSection {
    pub c: Option<f64>,
    pub epsilon: Option<f64>,
    pub tolerance: Option<f64>,
    pub max_epochs: Option<usize>,
    pub bias: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SmoteSection {
    pub k: Option<usize>,
    pub extrapolate: Option<bool>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<FileConfig> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_the_documented_example() {
        let cfg: FileConfig = toml::from_str(
            r#"
            reps = 3
            methods = ["omega", "shift:1.2"]
            [svm]
            c = 2.5
            bias = "regularized"
            [smote]
            extrapolate = true
            "#,
        )
        .unwrap();
        assert_eq!(cfg.reps, Some(3));
        assert_eq!(cfg.svm.c, Some(2.5));
        assert_eq!(cfg.smote.extrapolate, Some(true));
        assert!(cfg.folds.is_none());
    }

    #[test]
    fn rejects_unknown_keys() {
        assert!(toml::from_str::<FileConfig>("repetitions = 3").is_err());
    }
}
