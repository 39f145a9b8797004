//! One-shot evaluations printed as JSON.

use petalstar::parametrize::{self, SolveOptions};
use petalstar::star::{self, StarGeometry};
use petalstar::{Error, FatouAtlas, MapClass, Point, Rational, C64};
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::SCHEMA_VERSION;

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeWhat {
    /// Strip height `m(lambda)`.
    M,
    /// Radius `r_lambda` of the tangent disk.
    RLambda,
    /// Whether `lambda` lies in the horodisk of parameter `M`.
    Horodisk,
    /// Fatou coordinate and petal data of `x`.
    Phi,
    /// Model point of the class `(lambda, sigma)`.
    Chi,
    /// The parameter realising `x` at multiplier `lambda`.
    Solve,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct ProbeArgs {
    pub lambda: Option<C64>,
    pub sigma: Option<C64>,
    pub x: Option<C64>,
    pub horodisk: Option<f64>,
}

/// Parses `re`, `re,im` or `re+imi`-free pairs like `0.3,-0.1`.
pub fn parse_complex(text: &str) -> Result<C64, String> {
    let parts: Vec<&str> = text.split(',').map(str::trim).collect();
    let num = |s: &str| s.parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got {text:?}")),
    }
}

fn c(v: C64) -> Value {
    json!([v.re, v.im])
}

fn need<T>(v: Option<T>, name: &str) -> Result<T, Error> {
    v.ok_or_else(|| Error::Unsupported(format!("this probe needs --{name}")))
}

/// Name of the error variant, used as the structured error kind.
pub fn error_kind(e: &Error) -> String {
    let debug = format!("{e:?}");
    debug.split(['(', ' ', '{']).next().unwrap_or("Error").to_string()
}

fn evaluate(pq: Rational, what: ProbeWhat, args: &ProbeArgs) -> Result<Value, Error> {
    let solve = SolveOptions::default();
    Ok(match what {
        ProbeWhat::M => json!({ "m": star::strip_height(pq, need(args.lambda, "lambda")?)? }),
        ProbeWhat::RLambda => {
            let g = StarGeometry::new(pq, need(args.lambda, "lambda")?, None)?;
            json!({ "r_lambda": g.r_lambda })
        }
        ProbeWhat::Horodisk => {
            let lambda = need(args.lambda, "lambda")?;
            let m = need(args.horodisk, "horodisk")?;
            json!({ "in_horodisk": star::in_horodisk(pq, lambda, m)?, "m": star::strip_height(pq, lambda)? })
        }
        ProbeWhat::Phi => {
            let atlas = FatouAtlas::polynomial(pq)?;
            let x = Point::new(need(args.x, "x")?);
            json!({
                "phi": c(atlas.value(x)?),
                "label": atlas.label(x)?,
                "petal_index": format!("{:?}", atlas.petal_index(x)?),
            })
        }
        ProbeWhat::Chi => {
            let class = MapClass::new(need(args.lambda, "lambda")?, need(args.sigma, "sigma")?);
            let point = parametrize::chi(&class)?;
            json!({ "chi": c(point.w) })
        }
        ProbeWhat::Solve => {
            let atlas = FatouAtlas::polynomial(pq)?;
            let lambda = need(args.lambda, "lambda")?;
            let geometry = StarGeometry::new(pq, lambda, None)?;
            let x = Point::new(need(args.x, "x")?);
            if let Some(m) = args.horodisk {
                if !star::in_horodisk(pq, lambda, m)? {
                    return Err(Error::Unsupported(format!("lambda is outside the horodisk of parameter {m}")));
                }
            }
            let s = parametrize::solve_phi_with(&atlas, &geometry, x, None, &solve)?;
            json!({
                "sigma": c(s.sigma),
                "shift": c(s.normalized_shift()),
                "target": c(s.target),
                "residual": s.residual,
                "newton_iters": s.newton_iters,
            })
        }
    })
}

/// Runs a probe; the error form is `{"error": {"kind", "message"}}`.
pub fn probe(pq: Rational, what: ProbeWhat, args: &ProbeArgs) -> (Value, bool) {
    let solve = SolveOptions::default();
    let inputs = json!({
        "pq": pq.to_string(),
        "lambda": args.lambda.map(c),
        "sigma": args.sigma.map(c),
        "x": args.x.map(c),
        "horodisk": args.horodisk,
    });
    let tolerances = json!({ "solve": solve.tol, "line": star::DEFAULT_LINE_TOL });
    match evaluate(pq, what, args) {
        Ok(value) => (
            json!({ "schema_version": SCHEMA_VERSION, "what": what, "inputs": inputs, "value": value, "tolerances": tolerances }),
            true,
        ),
        Err(e) => (
            json!({
                "schema_version": SCHEMA_VERSION,
                "what": what,
                "inputs": inputs,
                "error": { "kind": error_kind(&e), "message": e.to_string() },
            }),
            false,
        ),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn half() -> Rational {
        "1/2".parse().unwrap()
    }

    #[test]
    fn complex_arguments() {
        assert_eq!(parse_complex("-0.9").unwrap(), C64::new(-0.9, 0.0));
        assert_eq!(parse_complex("0.3, -0.1").unwrap(), C64::new(0.3, -0.1));
        assert!(parse_complex("1,2,3").is_err());
    }

    #[test]
    fn phi_at_critical_value() {
        let args = ProbeArgs { x: Some(C64::new(-0.25, 0.0)), ..Default::default() };
        let (v, ok) = probe(half(), ProbeWhat::Phi, &args);
        assert!(ok);
        let re = v["value"]["phi"][0].as_f64().unwrap();
        let im = v["value"]["phi"][1].as_f64().unwrap();
        assert!((re - 0.5).abs() < 1e-9 && im.abs() < 1e-9, "{v}");
    }

    #[test]
    fn unrelated_chi_is_structured_error() {
        let args = ProbeArgs { lambda: Some(C64::new(-0.5, 0.0)), sigma: Some(C64::new(0.0, 0.0)), ..Default::default() };
        let (v, ok) = probe(half(), ProbeWhat::Chi, &args);
        assert!(!ok);
        assert_eq!(v["error"]["kind"], "NotInR");
    }
}
