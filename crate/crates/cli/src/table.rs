//! CSV tables of one quantity over the sample grid.

use std::io::Write;
use std::str::FromStr;

use anyhow::Result;
use finsler_core::classify::sweep;
use finsler_core::curvature::{BundleOptions, CurvatureBundle};
use finsler_core::finsler::sigma_bh;
use finsler_core::geometry::beta_derivatives;
use finsler_core::phi::q_derivatives;
use finsler_core::sampling::samples;
use finsler_core::tensor::{label, Tensor};
use rayon::prelude::*;

use crate::config::{ConfigError, Resolved};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Quantity {
    A,
    BForm,
    Gamma,
    R,
    S,
    RI,
    SI,
    BNorm,
    Q,
    G,
    Berwald,
    E,
    L,
    D,
    Riemann,
    K,
    SCurv,
    H,
    Sigma,
}

pub const QUANTITIES: &[&str] = &[
    "a", "b_form", "gamma", "r", "s", "r_i", "s_i", "bnorm", "Q", "G", "B", "E", "L", "D", "R", "K", "S", "H",
    "sigma",
];

impl FromStr for Quantity {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, ConfigError> {
        use Quantity::*;
        Ok(match s {
            "a" => A,
            "b_form" => BForm,
            "gamma" => Gamma,
            "r" => R,
            "s" => S,
            "r_i" => RI,
            "s_i" => SI,
            "bnorm" => BNorm,
            "Q" => Q,
            "G" => G,
            "B" => Berwald,
            "E" => E,
            "L" => L,
            "D" => D,
            "R" => Riemann,
            "K" => K,
            "S" => SCurv,
            "H" => H,
            "sigma" => Sigma,
            other => return Err(ConfigError::UnknownQuantity(other.to_string())),
        })
    }
}

impl Quantity {
    /// Whether the quantity depends on the direction `y`.
    fn directional(self) -> bool {
        use Quantity::*;
        matches!(self, Q | G | Berwald | E | L | D | Riemann | K | SCurv | H)
    }

    fn needs_bundle(self) -> bool {
        self.directional() && self != Quantity::Q
    }

    fn bundle_options(self, r: &Resolved) -> BundleOptions {
        BundleOptions {
            route: r.route,
            riemann: matches!(self, Quantity::Riemann | Quantity::K),
            h: self == Quantity::H,
            s_def: self == Quantity::SCurv,
            s_formula: self == Quantity::SCurv,
            ..BundleOptions::default()
        }
    }

    fn columns(self, n: usize) -> Vec<String> {
        use Quantity::*;
        let tensor_cols = |prefix: &str, rank: usize| -> Vec<String> {
            Tensor::zeros(n, rank).indices().iter().map(|i| label(prefix, i)).collect()
        };
        match self {
            A => tensor_cols("a", 2),
            BForm => tensor_cols("b", 1),
            Gamma => tensor_cols("gamma", 3),
            R => tensor_cols("r", 2),
            S => tensor_cols("s", 2),
            RI => tensor_cols("r", 1),
            SI => tensor_cols("s", 1),
            BNorm => vec!["b".into()],
            Q => vec!["s".into(), "Q".into()],
            G => tensor_cols("G", 1),
            Berwald => tensor_cols("B", 4),
            E => tensor_cols("E", 2),
            L => tensor_cols("L", 3),
            D => tensor_cols("D", 4),
            Riemann => tensor_cols("R", 2),
            K => vec!["K".into()],
            SCurv => vec!["S_def".into(), "S_formula".into()],
            H => tensor_cols("H", 2),
            Sigma => vec!["sigma".into()],
        }
    }
}

fn point_values(q: Quantity, r: &Resolved, x: &[f64]) -> finsler_core::Result<Vec<f64>> {
    use Quantity::*;
    if q == Sigma {
        return Ok(vec![sigma_bh(&r.metric, &r.phi, x)?.sigma]);
    }
    let bc = beta_derivatives(&r.metric, x)?;
    Ok(match q {
        A => bc.a.transpose().as_slice().to_vec(),
        BForm => bc.b_lower.as_slice().to_vec(),
        Gamma => bc.gamma.data.clone(),
        R => bc.r.transpose().as_slice().to_vec(),
        S => bc.s.transpose().as_slice().to_vec(),
        RI => bc.r_i.as_slice().to_vec(),
        SI => bc.s_i.as_slice().to_vec(),
        BNorm => vec![bc.b_norm],
        _ => unreachable!("directional quantity"),
    })
}

fn sample_values(q: Quantity, r: &Resolved, x: &[f64], y: &[f64], bundle: Option<&CurvatureBundle>) -> finsler_core::Result<Vec<f64>> {
    use Quantity::*;
    if q == Q {
        let (alpha, beta) = r.metric.alpha_beta(x, y)?;
        let s = beta / alpha;
        return Ok(vec![s, q_derivatives(&r.phi, s)?.0]);
    }
    let b = bundle.expect("bundle computed for curvature quantities");
    let missing = |v: Option<f64>| v.unwrap_or(f64::NAN);
    Ok(match q {
        G => b.spray.clone(),
        Berwald => b.berwald.data.clone(),
        E => b.mean_berwald.data.clone(),
        L => b.landsberg.data.clone(),
        D => b.douglas.data.clone(),
        Riemann => b.riemann.as_ref().map(|t| t.data.clone()).unwrap_or_default(),
        K => vec![missing(b.flag)],
        SCurv => vec![missing(b.s_def), missing(b.s_formula)],
        H => b.h.as_ref().map(|t| t.data.clone()).unwrap_or_default(),
        _ => unreachable!("point quantity"),
    })
}

fn coord_cols(prefix: &str, n: usize) -> Vec<String> {
    (1..=n).map(|i| format!("{prefix}{i}")).collect()
}

fn fmt(v: f64) -> String {
    if v.is_nan() {
        String::new()
    } else {
        format!("{v:e}")
    }
}

/// Writes the table as RFC 4180 CSV.
pub fn write_table(q: Quantity, r: &Resolved, out: impl Write) -> Result<()> {
    let n = r.metric.n;
    let cols = q.columns(n);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["point".to_string()];
    header.extend(coord_cols("x", n));
    if q.directional() {
        header.extend(coord_cols("y", n));
    }
    header.extend(cols.iter().cloned());
    header.push("error".into());
    w.write_record(&header)?;

    let write_row = |w: &mut csv::Writer<_>, point: usize, x: &[f64], y: Option<&[f64]>, vals: finsler_core::Result<Vec<f64>>| -> Result<()> {
        let mut row = vec![point.to_string()];
        row.extend(x.iter().map(|v| fmt(*v)));
        if let Some(y) = y {
            row.extend(y.iter().map(|v| fmt(*v)));
        }
        match vals {
            Ok(v) if v.len() == cols.len() => {
                row.extend(v.iter().map(|v| fmt(*v)));
                row.push(String::new());
            }
            Ok(_) => {
                row.extend(std::iter::repeat_n(String::new(), cols.len()));
                row.push("not computed".into());
            }
            Err(e) => {
                row.extend(std::iter::repeat_n(String::new(), cols.len()));
                row.push(e.to_string());
            }
        }
        w.write_record(&row)?;
        Ok(())
    };

    if !q.directional() {
        let rows: Vec<_> = r.grid.par_iter().map(|x| point_values(q, r, x)).collect();
        for (i, (x, vals)) in r.grid.iter().zip(rows).enumerate() {
            write_row(&mut w, i, x, None, vals)?;
        }
    } else {
        let (all, _) = samples(&r.metric, &r.phi, &r.grid, &r.dirs)?;
        let bundles = if q.needs_bundle() {
            Some(sweep(&r.metric, &r.phi, &all, &q.bundle_options(r))?)
        } else {
            None
        };
        let rows: Vec<_> = all
            .par_iter()
            .enumerate()
            .map(|(k, s)| match bundles.as_ref().map(|b| &b[k]) {
                Some(Err(e)) => Err(e.clone()),
                Some(Ok(b)) => sample_values(q, r, &s.x, &s.y, Some(b)),
                None => sample_values(q, r, &s.x, &s.y, None),
            })
            .collect();
        for (s, vals) in all.iter().zip(rows) {
            write_row(&mut w, s.point, &s.x, Some(&s.y), vals)?;
        }
    }
    w.flush()?;
    Ok(())
}
