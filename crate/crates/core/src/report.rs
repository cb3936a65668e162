//! JSON spectrum reports and plot-ready CSV.

use serde::{Deserialize, Serialize};

use crate::error::{DmdError, Result};
use crate::ritz::RitzDecomposition;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunMetadata {
    pub variant: String,
    pub n: usize,
    pub m: usize,
    pub k: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    pub scaled: bool,
    /// `"none"` or the path of the weight file.
    pub weight: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub select_cap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub index: usize,
    pub lambda_re: f64,
    pub lambda_im: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub refined_residual: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho_im: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub koopman_re: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub koopman_im: Option<f64>,
    pub has_vector: bool,
    pub selected: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpectrumReport {
    pub metadata: RunMetadata,
    pub pairs: Vec<PairRecord>,
}

impl SpectrumReport {
    /// Copies the decomposition verbatim; nothing is recomputed here.
    ///
    /// `selected` marks pairs with residual at most `select_cap`; without a
    /// cap every pair is selected.
    pub fn from_decomposition(dec: &RitzDecomposition, weight: Option<&str>, select_cap: Option<f64>) -> Self {
        let pairs = dec
            .pairs
            .iter()
            .enumerate()
            .map(|(index, p)| PairRecord {
                index,
                lambda_re: p.lambda.re,
                lambda_im: p.lambda.im,
                residual: p.residual,
                refined_residual: p.refined.as_ref().map(|r| r.sigma_min),
                rho_re: p.refined.as_ref().map(|r| r.rho.re),
                rho_im: p.refined.as_ref().map(|r| r.rho.im),
                koopman_re: p.koopman.map(|z| z.re),
                koopman_im: p.koopman.map(|z| z.im),
                has_vector: p.has_vector,
                selected: match (select_cap, p.residual) {
                    (None, _) => true,
                    (Some(cap), Some(r)) => r <= cap,
                    (Some(cap), None) => cap == f64::INFINITY,
                },
            })
            .collect();
        SpectrumReport {
            metadata: RunMetadata {
                variant: dec.variant.name().to_string(),
                n: dec.n,
                m: dec.m,
                k: dec.k(),
                epsilon: dec.pod.policy.epsilon(),
                scaled: dec.scaled,
                weight: weight.unwrap_or("none").to_string(),
                dt: None,
                select_cap,
            },
            pairs,
        }
    }

    pub fn with_dt(mut self, dt: Option<f64>) -> Self {
        self.metadata.dt = dt;
        self
    }

    pub fn to_json(&self) -> Result<String> {
        let mut s = serde_json::to_string_pretty(self).map_err(|e| DmdError::Data(format!("report: {e}")))?;
        s.push('\n');
        Ok(s)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let r: SpectrumReport =
            serde_json::from_str(text).map_err(|e| DmdError::Format(format!("bad spectrum report: {e}")))?;
        if r.pairs.iter().enumerate().any(|(i, p)| p.index != i) {
            return Err(DmdError::Format("report indices are not 0..k in order".into()));
        }
        Ok(r)
    }

    /// One row per pair: index, Ritz value, residuals and the selection flag.
    pub fn plot_csv(&self) -> String {
        let mut s = String::from("index,lambda_re,lambda_im,residual,refined_residual,selected\n");
        let opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
        for p in &self.pairs {
            s.push_str(&format!(
                "{},{:e},{:e},{},{},{}\n",
                p.index,
                p.lambda_re,
                p.lambda_im,
                opt(p.residual),
                opt(p.refined_residual),
                p.selected as u8
            ));
        }
        s
    }
}
