//! JSON model documents: polynomial components, optional scheme block,
//! chart preference and integration options.

use crate::desing::{Chart, DesingField};
use crate::error::{Error, Result};
use crate::poly::{Monomial, PolyVectorField};
use crate::qhfield::{detect_signatures, validate_signature, QhSignature};
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MonomialDoc {
    pub exponents: Vec<u32>,
    pub coefficient: f64,
}

/// Scheme block; `β` and `c` are always derived.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeDoc {
    pub alpha: Vec<u32>,
    #[serde(default)]
    pub a: Option<Vec<f64>>,
    pub k: u32,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegrationDoc {
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub tau_max: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelDocument {
    pub dimension: usize,
    pub components: Vec<Vec<MonomialDoc>>,
    #[serde(default)]
    pub scheme: Option<SchemeDoc>,
    /// `"global"`, `"quasi-polar"` or `"directional:<i>:<+|->"` (1-based index).
    #[serde(default)]
    pub chart: Option<String>,
    #[serde(default)]
    pub integration: Option<IntegrationDoc>,
}

/// Largest type entry tried when no scheme block is given.
pub const DETECTION_ALPHA_MAX: u32 = 6;

impl ModelDocument {
    pub fn parse(text: &str) -> Result<Self> {
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        doc.field()?;
        if let Some(s) = &doc.scheme {
            doc.signature_from(s)?;
        }
        Ok(doc)
    }

    /// The polynomial vector field.
    pub fn field(&self) -> Result<PolyVectorField<f64>> {
        if self.components.len() != self.dimension {
            return Err(Error::Parse(format!(
                "dimension is {} but {} components were given",
                self.dimension,
                self.components.len()
            )));
        }
        let comps = self
            .components
            .iter()
            .map(|c| {
                c.iter()
                    .map(|m| {
                        if !m.coefficient.is_finite() {
                            return Err(Error::Parse("non-finite coefficient".into()));
                        }
                        Ok(Monomial::new(m.exponents.clone(), m.coefficient))
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        PolyVectorField::new(self.dimension, comps).map_err(|e| Error::Parse(e.to_string()))
    }

    fn signature_from(&self, s: &SchemeDoc) -> Result<QhSignature<f64>> {
        let f = self.field()?;
        match validate_signature(&f, &s.alpha) {
            Some(k) if k == s.k => QhSignature::new(f, &s.alpha, s.k),
            Some(k) => Err(Error::Invalid(format!(
                "scheme order k = {} but the field has k = {k}",
                s.k
            ))),
            None => Err(Error::Invalid(format!(
                "field is not asymptotically quasi-homogeneous of type {:?}",
                s.alpha
            ))),
        }
    }

    /// Candidate `(α, k)` signatures of the field.
    pub fn candidates(&self) -> Result<Vec<(Vec<u32>, u32)>> {
        Ok(detect_signatures(&self.field()?, DETECTION_ALPHA_MAX))
    }

    /// The signature from the scheme block, or the unique detected one.
    pub fn signature(&self) -> Result<QhSignature<f64>> {
        if let Some(s) = &self.scheme {
            return self.signature_from(s);
        }
        let cands = self.candidates()?;
        match cands.as_slice() {
            [] => Err(Error::Unsupported(
                "no quasi-homogeneous signature found".into(),
            )),
            [(alpha, k)] => QhSignature::new(self.field()?, alpha, *k),
            _ => Err(Error::Invalid(format!(
                "several signatures fit ({}); add a scheme block to choose one",
                cands
                    .iter()
                    .map(|(a, k)| format!("{a:?}/k={k}"))
                    .collect::<Vec<_>>()
                    .join(", ")
            ))),
        }
    }

    /// Chart preference, validated against the field.
    pub fn chart(&self) -> Result<Chart> {
        match &self.chart {
            None => Ok(Chart::Global),
            Some(c) => parse_chart(c),
        }
    }

    /// Desingularized field with the requested scheme coefficients.
    pub fn desing(&self, a_override: Option<Vec<f64>>) -> Result<DesingField<f64>> {
        let sig = self.signature()?;
        let a = a_override.or_else(|| self.scheme.as_ref().and_then(|s| s.a.clone()));
        DesingField::polynomial(sig, a, self.chart()?)
    }
}

/// Parses `global`, `quasi-polar` or `directional:<i>:<+|->` (1-based).
pub fn parse_chart(text: &str) -> Result<Chart> {
    use crate::compactify::Sign;
    match text {
        "global" => Ok(Chart::Global),
        "quasi-polar" => Ok(Chart::QuasiPolar),
        _ => {
            let parts: Vec<&str> = text.split(':').collect();
            match parts.as_slice() {
                ["directional", i, s] => {
                    let index: usize = i
                        .parse()
                        .map_err(|_| Error::Parse(format!("bad chart index {i:?}")))?;
                    if index == 0 {
                        return Err(Error::Parse("chart index is 1-based".into()));
                    }
                    let sign = match *s {
                        "+" => Sign::Plus,
                        "-" => Sign::Minus,
                        _ => return Err(Error::Parse(format!("bad chart sign {s:?}"))),
                    };
                    Ok(Chart::Directional {
                        index: index - 1,
                        sign,
                    })
                }
                _ => Err(Error::Parse(format!("unknown chart {text:?}"))),
            }
        }
    }
}
