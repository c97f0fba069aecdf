//! Resolution of `--scenario` / `--model` into a desingularized field.

use crate::{GlobalArgs, SourceArgs};
use horizon_core::desing::{Chart, DesingField};
use horizon_core::infinity::SearchOptions;
use horizon_core::model::ModelDocument;
use horizon_core::scenarios::{self, TwoFluidData};
use horizon_core::{DesingField64, Error, Result};

/// A resolved input.
pub struct Loaded {
    pub name: String,
    /// Field in its preferred chart; `None` when no signature fits.
    pub field: Option<DesingField64>,
    /// Candidate `(α, k)` signatures (polynomial sources).
    pub candidates: Vec<(Vec<u32>, u32)>,
    pub two_fluid: Option<TwoFluidData<f64>>,
    pub integration: Option<horizon_core::model::IntegrationDoc>,
}

impl Loaded {
    pub fn field(&self) -> Result<&DesingField64> {
        self.field
            .as_ref()
            .ok_or_else(|| Error::Unsupported("no quasi-homogeneous signature found".into()))
    }

    pub fn search_options(&self) -> SearchOptions<f64> {
        let mut o = SearchOptions::default();
        if let Some(d) = &self.two_fluid {
            let w = d.rho2 - d.rho1;
            o.theta_range = Some(((d.rho1 - 0.25 * w).max(0.5 * d.rho1), d.rho2 + 0.25 * w));
            o.seeds = 64;
        }
        o
    }
}

fn pair(v: &Option<Vec<f64>>, default: (f64, f64), name: &str) -> Result<(f64, f64)> {
    match v {
        None => Ok(default),
        Some(v) if v.len() == 2 => Ok((v[0], v[1])),
        Some(_) => Err(Error::Parse(format!(
            "--{name} expects two comma-separated numbers"
        ))),
    }
}

/// Resolves the source arguments.
pub fn load(global: &GlobalArgs, src: &SourceArgs) -> Result<Loaded> {
    match (&src.scenario, &src.model) {
        (Some(name), None) => load_scenario(global, src, name),
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
            let doc = ModelDocument::parse(&text)?;
            let candidates = doc.candidates()?;
            let field = match doc.desing(global.scheme_a.clone()) {
                Ok(f) => Some(f),
                Err(Error::Unsupported(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(Loaded {
                name: path.display().to_string(),
                field,
                candidates,
                two_fluid: None,
                integration: doc.integration.clone(),
            })
        }
        _ => Err(Error::Parse(
            "give exactly one of --scenario or --model".into(),
        )),
    }
}

fn with_scheme(field: DesingField64, a: &Option<Vec<f64>>) -> Result<DesingField64> {
    match (a, field.signature()) {
        (Some(a), Some(sig)) => {
            let f = DesingField::polynomial(sig.clone(), Some(a.clone()), field.chart)?;
            Ok(match field.trig() {
                Some(t) if f.chart == Chart::QuasiPolar => f.with_trig(t.clone()),
                _ => f,
            })
        }
        (Some(_), None) => Err(Error::Invalid(
            "--scheme-a does not apply to this scenario".into(),
        )),
        (None, _) => Ok(field),
    }
}

fn load_scenario(global: &GlobalArgs, src: &SourceArgs, name: &str) -> Result<Loaded> {
    let detect = |f: &DesingField64| {
        f.signature()
            .map(|s| {
                horizon_core::qhfield::detect_signatures(
                    &s.field,
                    horizon_core::model::DETECTION_ALPHA_MAX,
                )
            })
            .unwrap_or_default()
    };
    let sc = match name {
        "lienard" => scenarios::lienard::<f64>(src.n.unwrap_or(2))?,
        "kk" | "keyfitz-kranzer" => scenarios::keyfitz_kranzer::<f64>()?,
        "riccati" => scenarios::riccati::<f64>()?,
        "two-fluid" => {
            let rho1 = src.rho1.unwrap_or(1.0);
            let rho2 = src.rho2.unwrap_or(2.0);
            let (bl, rl) = pair(&src.u_left, (1.9, 0.25), "uL")?;
            let (br, rr) = pair(&src.u_right, (1.5, 0.2), "uR")?;
            if rl <= 0.0 || rr <= 0.0 {
                return Err(Error::Invalid("two-fluid chart states need 1/v > 0".into()));
            }
            scenarios::two_fluid(rho1, rho2, (bl, 1.0 / rl), (br, 1.0 / rr))?
        }
        other => {
            return Err(Error::Parse(format!(
                "unknown scenario {other:?}; see `scenario list`"
            )))
        }
    };
    let candidates = detect(&sc.field);
    let field = with_scheme(sc.field, &global.scheme_a)?;
    Ok(Loaded {
        name: sc.name,
        field: Some(field),
        candidates,
        two_fluid: sc.two_fluid,
        integration: None,
    })
}
