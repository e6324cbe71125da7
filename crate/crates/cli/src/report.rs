//! JSON curvature report and classification.

use std::collections::BTreeMap;

use anyhow::Result;
use finsler_core::classify::{classify_from_sweep, classify_options, sweep, ClassificationReport, Tolerances};
use finsler_core::curvature::CurvatureBundle;
use finsler_core::finsler::fundamental;
use finsler_core::sampling::{samples, Sample};
use finsler_core::spray::SprayRoute;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Resolved, SCHEMA};

#[derive(Debug, Serialize)]
pub struct MetricInfo {
    pub name: String,
    pub description: String,
    pub params: BTreeMap<String, f64>,
    pub n: usize,
    pub phi: String,
    pub domain: finsler_core::geometry::ChartDomain,
    pub delta: f64,
}

impl MetricInfo {
    pub fn from(r: &Resolved) -> Self {
        MetricInfo {
            name: r.name.clone(),
            description: r.description.clone(),
            params: r.params.clone(),
            n: r.metric.n,
            phi: r.phi.to_string(),
            domain: r.metric.domain.clone(),
            delta: r.metric.delta,
        }
    }
}

/// Per-sample values; `error` is set when the sample failed.
#[derive(Debug, Default, Serialize)]
pub struct SampleRecord {
    pub point: usize,
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub f: Option<f64>,
    pub g: Option<Vec<f64>>,
    pub cartan_norm: Option<f64>,
    pub spray: Option<Vec<f64>>,
    pub berwald_norm: Option<f64>,
    pub mean_berwald_norm: Option<f64>,
    pub landsberg_norm: Option<f64>,
    pub douglas_norm: Option<f64>,
    pub riemann_norm: Option<f64>,
    pub flag: Option<f64>,
    pub s_def: Option<f64>,
    pub s_formula: Option<f64>,
    pub approximate: bool,
    pub error: Option<String>,
}

#[derive(Debug, Serialize)]
pub struct Report {
    pub schema: u32,
    pub metric: MetricInfo,
    pub route: SprayRoute,
    pub tolerances: Tolerances,
    pub samples: Vec<SampleRecord>,
    pub classification: ClassificationReport,
}

fn record(r: &Resolved, s: &Sample, bundle: &finsler_core::Result<CurvatureBundle>) -> SampleRecord {
    let mut rec = SampleRecord {
        point: s.point,
        x: s.x.clone(),
        y: s.y.clone(),
        ..SampleRecord::default()
    };
    match fundamental(&r.metric, &r.phi, &s.x, &s.y) {
        Ok(fd) => {
            rec.f = Some(fd.f);
            rec.g = Some(fd.g.data.clone());
            rec.cartan_norm = Some(fd.cartan.max_abs());
        }
        Err(e) => rec.error = Some(e.to_string()),
    }
    match bundle {
        Ok(b) => {
            rec.spray = Some(b.spray.clone());
            rec.berwald_norm = Some(b.berwald.max_abs());
            rec.mean_berwald_norm = Some(b.mean_berwald.max_abs());
            rec.landsberg_norm = Some(b.landsberg.max_abs());
            rec.douglas_norm = Some(b.douglas.max_abs());
            rec.riemann_norm = b.riemann.as_ref().map(|t| t.max_abs());
            rec.flag = b.flag;
            rec.s_def = b.s_def;
            rec.s_formula = b.s_formula;
            rec.approximate = b.approximate;
        }
        Err(e) => {
            rec.error.get_or_insert_with(|| e.to_string());
        }
    }
    rec
}

pub fn build_report(r: &Resolved) -> Result<Report> {
    let (all, masked) = samples(&r.metric, &r.phi, &r.grid, &r.dirs)?;
    let results = sweep(&r.metric, &r.phi, &all, &classify_options(r.route))?;
    let classification = classify_from_sweep(
        &r.metric,
        &r.phi,
        &r.grid,
        &r.dirs,
        &r.tolerances,
        &all,
        masked,
        &results,
    )?;
    let records = all
        .par_iter()
        .zip(results.par_iter())
        .map(|(s, b)| record(r, s, b))
        .collect();
    Ok(Report {
        schema: SCHEMA,
        metric: MetricInfo::from(r),
        route: r.route,
        tolerances: r.tolerances,
        samples: records,
        classification,
    })
}

#[derive(Debug, Serialize)]
pub struct ClassifyOutput {
    pub schema: u32,
    pub metric: MetricInfo,
    pub route: SprayRoute,
    pub classification: ClassificationReport,
}

pub fn build_classification(r: &Resolved) -> Result<ClassifyOutput> {
    let classification = finsler_core::classify::classify(&r.metric, &r.phi, &r.grid, &r.dirs, &r.tolerances, r.route)?;
    Ok(ClassifyOutput {
        schema: SCHEMA,
        metric: MetricInfo::from(r),
        route: r.route,
        classification,
    })
}
