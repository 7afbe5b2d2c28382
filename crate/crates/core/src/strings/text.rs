//! Line form of strings.
//!
//! ```text
//! kind=power alpha=0.5
//! kind=table density=1/(1+x) atoms=1:0.5,2:0.25 anchor=0:0
//! kind=table density=rho.csv anchor=1:0 m_inf=0
//! ```
//!
//! `density` is either an expression in `x` or the path of a two-column CSV
//! file `(x, ρ(x))` with strictly increasing `x`. Whitespace inside an
//! expression is allowed: words without `=` are glued to the previous value.
//! `anchor` defaults to `0:0`, i.e. `m(0+) = 0`. `m_inf` optionally declares
//! `m(∞)`.

use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::{make_power_string, make_table_string, Atom, RealFn, StringModel};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Density read from a two-column table, linearly interpolated between nodes
/// and held constant beyond the first and last node.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedDensity {
    pub xs: Vec<f64>,
    pub rhos: Vec<f64>,
}

impl TabulatedDensity {
    pub fn new(xs: Vec<f64>, rhos: Vec<f64>) -> Result<Self> {
        if xs.len() != rhos.len() || xs.is_empty() {
            return Err(Error::Parse(format!(
                "density table needs matching nonempty columns, got {} and {}",
                xs.len(),
                rhos.len()
            )));
        }
        if let Some(i) = (1..xs.len()).find(|&i| !(xs[i] > xs[i - 1])) {
            return Err(Error::Parse(format!(
                "density table x values must be strictly increasing (row {})",
                i + 1
            )));
        }
        if let Some(i) = rhos.iter().position(|r| !(*r >= 0.0 && r.is_finite())) {
            return Err(Error::InvalidString(format!(
                "density table value {} at row {} must be nonnegative",
                rhos[i],
                i + 1
            )));
        }
        Ok(TabulatedDensity { xs, rhos })
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.rhos[0];
        }
        if x >= self.xs[n - 1] {
            return self.rhos[n - 1];
        }
        let i = self.xs.partition_point(|&t| t <= x);
        let (x0, x1) = (self.xs[i - 1], self.xs[i]);
        let w = (x - x0) / (x1 - x0);
        self.rhos[i - 1] * (1.0 - w) + self.rhos[i] * w
    }
}

/// Reads a two-column CSV `(x, ρ(x))`. A first row that does not parse as
/// numbers is taken as a header.
pub fn read_density_table(path: &Path) -> Result<TabulatedDensity> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let (mut xs, mut rhos) = (Vec::new(), Vec::new());
    for (row, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        if rec.len() != 2 {
            return Err(Error::Parse(format!(
                "{}: row {} has {} columns, expected 2",
                path.display(),
                row + 1,
                rec.len()
            )));
        }
        let parsed = (rec[0].parse::<f64>(), rec[1].parse::<f64>());
        match parsed {
            (Ok(x), Ok(r)) => {
                xs.push(x);
                rhos.push(r);
            }
            _ if row == 0 => continue,
            _ => {
                return Err(Error::Parse(format!(
                    "{}: row {} is not numeric",
                    path.display(),
                    row + 1
                )))
            }
        }
    }
    TabulatedDensity::new(xs, rhos)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
}

thread_local! {
    static EXPR_CONTEXT: RefCell<meval::Context<'static>> = RefCell::new(meval::Context::new());
}

fn expression_density<S: Scalar>(src: &str) -> Result<RealFn<S>> {
    let expr: meval::Expr = src
        .parse()
        .map_err(|e| Error::Parse(format!("density expression `{src}`: {e}")))?;
    // Catch unknown variables and functions at parse time.
    EXPR_CONTEXT.with(|ctx| {
        expr.eval_with_context((("x", 1.0), &*ctx.borrow()))
            .map(|_| ())
            .map_err(|e| Error::Parse(format!("density expression `{src}`: {e}")))
    })?;
    Ok(Arc::new(move |x: S| {
        EXPR_CONTEXT.with(|ctx| {
            expr.eval_with_context((("x", x.as_f64()), &*ctx.borrow()))
                .map(S::lit)
                .unwrap_or_else(|_| S::nan())
        })
    }))
}

fn parse_number<S: Scalar>(key: &str, s: &str) -> Result<S> {
    s.trim()
        .parse::<f64>()
        .map(S::lit)
        .map_err(|_| Error::Parse(format!("{key}: `{s}` is not a number")))
}

fn parse_pair<S: Scalar>(key: &str, s: &str) -> Result<(S, S)> {
    let (a, b) = s
        .split_once(':')
        .ok_or_else(|| Error::Parse(format!("{key}: expected `x:value`, got `{s}`")))?;
    Ok((parse_number(key, a)?, parse_number(key, b)?))
}

fn tokenize(line: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for word in line.split_whitespace() {
        match word.split_once('=') {
            Some((k, v)) if !k.is_empty() && k.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') => {
                if out.iter().any(|(key, _)| key == k) {
                    return Err(Error::Parse(format!("duplicate key `{k}`")));
                }
                out.push((k.to_string(), v.to_string()));
            }
            _ => match out.last_mut() {
                Some((_, v)) => {
                    v.push(' ');
                    v.push_str(word);
                }
                None => return Err(Error::Parse(format!("expected key=value, got `{word}`"))),
            },
        }
    }
    Ok(out)
}

/// Parses the line form. Relative table paths are resolved against `base`
/// (or the working directory when `base` is `None`).
pub fn parse_string_spec<S: Scalar>(line: &str, base: Option<&Path>) -> Result<StringModel<S>> {
    let tokens = tokenize(line.trim())?;
    let get = |k: &str| tokens.iter().find(|(key, _)| key == k).map(|(_, v)| v.as_str());
    let allowed: &[&str] = match get("kind") {
        Some("power") => &["kind", "alpha", "label"],
        Some("table") => &["kind", "density", "atoms", "anchor", "m_inf", "label"],
        Some(other) => return Err(Error::Parse(format!("unknown string kind `{other}`"))),
        None => return Err(Error::Parse("string spec needs kind=power or kind=table".into())),
    };
    if let Some((k, _)) = tokens.iter().find(|(k, _)| !allowed.contains(&k.as_str())) {
        return Err(Error::Parse(format!("unexpected key `{k}`")));
    }
    let model = if get("kind") == Some("power") {
        let alpha = parse_number::<S>(
            "alpha",
            get("alpha").ok_or_else(|| Error::Parse("kind=power needs alpha".into()))?,
        )?;
        make_power_string(alpha)?
    } else {
        let src = get("density").ok_or_else(|| Error::Parse("kind=table needs density".into()))?;
        let looks_like_file = src.ends_with(".csv") || src.ends_with(".txt");
        let density: RealFn<S> = if looks_like_file {
            let path = match base {
                Some(b) if Path::new(src).is_relative() => b.join(src),
                _ => PathBuf::from(src),
            };
            let table = read_density_table(&path)?;
            Arc::new(move |x: S| S::lit(table.eval(x.as_f64())))
        } else {
            expression_density(src)?
        };
        let atoms = match get("atoms") {
            None | Some("") => Vec::new(),
            Some(list) => list
                .split(',')
                .map(|p| parse_pair::<S>("atoms", p).map(|(x, mass)| Atom { x, mass }))
                .collect::<Result<Vec<_>>>()?,
        };
        let anchor = match get("anchor") {
            Some(a) => parse_pair::<S>("anchor", a)?,
            None => (S::zero(), S::zero()),
        };
        let mut m = make_table_string(density, atoms, anchor)?;
        if let Some(v) = get("m_inf") {
            m = m.with_infinity(parse_number("m_inf", v)?);
        }
        m
    };
    let model = match get("label") {
        Some(l) => model.with_label(l),
        None => model,
    };
    Ok(model.with_text(line.trim()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::io::Write;

    #[test]
    fn power_round_trip() {
        let m = parse_string_spec::<f64>("kind=power alpha=2", None).unwrap();
        assert_relative_eq!(m.value_at(4.0).unwrap(), -0.5, max_relative = 1e-15);
        let text = make_power_string(0.5f64).unwrap().to_text().unwrap().to_string();
        let again = parse_string_spec::<f64>(&text, None).unwrap();
        assert_eq!(again.to_text(), Some(text.as_str()));
        assert_relative_eq!(again.density(3.0), 2.0);
    }

    #[test]
    fn table_expression_with_atoms() {
        let m = parse_string_spec::<f64>("kind=table density=2 atoms=1:0.5 anchor=0:0", None).unwrap();
        assert_relative_eq!(m.measure_of(0.9, 1.1).unwrap(), 0.9, max_relative = 1e-9);
        assert_relative_eq!(m.value_at(2.0).unwrap(), 4.5, max_relative = 1e-9);

        let m = parse_string_spec::<f64>("kind=table density=1 / (1 + x)", None).unwrap();
        assert_relative_eq!(m.value_at(3.0).unwrap(), 4f64.ln(), max_relative = 1e-8);
    }

    #[test]
    fn minus_inverse_from_text() {
        let m = parse_string_spec::<f64>("kind=table density=x^(-2) anchor=1:-1", None).unwrap();
        assert_relative_eq!(m.value_at(0.5).unwrap(), -2.0, max_relative = 1e-8);
        assert_relative_eq!(m.measure_of(0.5, 1.0).unwrap(), 1.0, max_relative = 1e-8);
    }

    #[test]
    fn csv_density() {
        let dir = std::env::temp_dir().join(format!("exc-text-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("rho.csv");
        let mut f = std::fs::File::create(&path).unwrap();
        writeln!(f, "x,rho\n0.0,1.0\n1.0,3.0\n2.0,3.0").unwrap();
        drop(f);
        let m = parse_string_spec::<f64>("kind=table density=rho.csv anchor=0:0", Some(&dir)).unwrap();
        // ∫_0^1 (1 + 2x) dx = 2
        assert_relative_eq!(m.value_at(1.0).unwrap(), 2.0, max_relative = 1e-8);
        assert_relative_eq!(m.density(0.5), 2.0);

        let bad = dir.join("bad.csv");
        std::fs::write(&bad, "0,1\n1,1\n1,2\n").unwrap();
        assert!(matches!(read_density_table(&bad), Err(Error::Parse(_))));
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn rejects_bad_input() {
        for line in [
            "alpha=2",
            "kind=spline",
            "kind=power",
            "kind=power alpha=0",
            "kind=power alpha=2 beta=1",
            "kind=table density=1/(1+y)",
            "kind=table density=-1",
            "kind=table density=1 atoms=1:0.5,1:0.2",
            "kind=table density=1 anchor=oops",
        ] {
            assert!(parse_string_spec::<f64>(line, None).is_err(), "{line}");
        }
    }

    #[test]
    fn single_precision_parse() {
        let m = parse_string_spec::<f32>("kind=table density=exp(-x) anchor=0:0", None).unwrap();
        assert!((m.value_at(1.0).unwrap() - (1.0 - (-1f32).exp())).abs() < 1e-5);
    }
}
