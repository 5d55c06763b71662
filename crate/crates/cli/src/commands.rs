use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use owen_gauss::oracles::{self, MAX_HERMITE_ORDER};
use owen_gauss::owen_identities::{lemma2_query, lemma3_query};
use owen_gauss::verify::{self, CheckResult, VerifyConfig};
use owen_gauss::{
    mvn_cdf, Lemma2ParamsF64, Lemma3ParamsF64, MatrixFile, MvnEstimateF64, PdMatrixF64, ProbitBernoulliF64, SignVector,
};

use crate::args::{
    FigureArgs, Format, Lemma2Args, Lemma3Args, ModelArgs, NormalizeArgs, PmfArgs, SampleArgs, TableArgs, VerifyArgs,
};

/// Whether the command's own check passed; errors map to exit code 2.
pub type Passed = bool;

/// 17 significant digits.
pub fn sci(x: f64) -> String {
    format!("{x:.16e}")
}

fn emit_json(out: &mut impl Write, value: &impl Serialize) -> Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)?;
    Ok(())
}

pub fn read_matrix(path: &Path) -> Result<PdMatrixF64> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read matrix file {}", path.display()))?;
    let file: MatrixFile =
        serde_json::from_str(&text).with_context(|| format!("invalid matrix file {}", path.display()))?;
    PdMatrixF64::from_file(&file).with_context(|| format!("invalid matrix in {}", path.display()))
}

fn model(args: &ModelArgs) -> Result<ProbitBernoulliF64> {
    let sigma = read_matrix(&args.cov)?;
    Ok(ProbitBernoulliF64::new(args.mu.0.clone(), sigma)?)
}

#[derive(Debug, Serialize)]
struct Closed {
    value: f64,
    err_estimate: f64,
    method: &'static str,
}

impl From<&MvnEstimateF64> for Closed {
    fn from(e: &MvnEstimateF64) -> Self {
        Self {
            value: e.value,
            err_estimate: e.err_estimate,
            method: e.method.as_str(),
        }
    }
}

fn write_closed(out: &mut impl Write, e: &MvnEstimateF64) -> Result<()> {
    writeln!(out, "closed_form   {}", e.value)?;
    writeln!(out, "err_estimate  {:e}", e.err_estimate)?;
    writeln!(out, "method        {}", e.method)?;
    Ok(())
}

fn status(passed: bool) -> &'static str {
    if passed {
        "pass"
    } else {
        "fail"
    }
}

#[derive(Debug, Serialize)]
struct HermiteOracle {
    order: usize,
    value: f64,
    reference_order: usize,
    convergence: f64,
    absdiff: f64,
    tolerance: f64,
    passed: bool,
}

/// Order used to gauge the truncation error of a given Gauss–Hermite order.
pub fn reference_order(order: usize) -> usize {
    let doubled = (2 * order).min(MAX_HERMITE_ORDER);
    if doubled == order {
        order / 2
    } else {
        doubled
    }
}

fn hermite_oracle(p: &Lemma2ParamsF64, order: usize, accuracy: f64, closed: &MvnEstimateF64) -> Result<HermiteOracle> {
    let value = oracles::lemma2_lhs_quadrature(p, order)?;
    let reference_order = reference_order(order);
    let convergence = (value - oracles::lemma2_lhs_quadrature(p, reference_order)?).abs();
    let absdiff = (closed.value - value).abs();
    let tolerance = accuracy + closed.err_estimate + convergence;
    Ok(HermiteOracle {
        order,
        value,
        reference_order,
        convergence,
        absdiff,
        tolerance,
        passed: absdiff <= tolerance,
    })
}

pub fn lemma2(a: Lemma2Args, out: &mut impl Write) -> Result<Passed> {
    let p = Lemma2ParamsF64::new(a.mu, a.sigma2, a.m.0, a.v.0)?;
    let closed = mvn_cdf::cdf(&lemma2_query(&p, a.accuracy)?.with_seed(a.common.seed))?;
    let oracle = if a.oracle {
        Some(hermite_oracle(&p, a.order, a.accuracy, &closed)?)
    } else {
        None
    };
    let passed = oracle.as_ref().is_none_or(|o| o.passed);
    if a.common.json {
        emit_json(
            out,
            &json!({
                "command": "lemma2",
                "dim": p.dim(),
                "accuracy": a.accuracy,
                "seed": a.common.seed,
                "closed_form": Closed::from(&closed),
                "oracle": oracle,
                "passed": passed,
            }),
        )?;
    } else {
        write_closed(out, &closed)?;
        if let Some(o) = &oracle {
            writeln!(out, "oracle        {} (gauss-hermite order {})", o.value, o.order)?;
            writeln!(
                out,
                "convergence   {:e} (vs order {})",
                o.convergence, o.reference_order
            )?;
            writeln!(out, "absdiff       {:e}", o.absdiff)?;
            writeln!(out, "tolerance     {:e}", o.tolerance)?;
            writeln!(out, "status        {}", status(o.passed))?;
        }
    }
    Ok(passed)
}

#[derive(Debug, Serialize)]
struct MonteCarloOracle {
    draws: usize,
    seed: u64,
    value: f64,
    std_error: f64,
    absdiff: f64,
    tolerance: f64,
    passed: bool,
}

pub fn lemma3(a: Lemma3Args, out: &mut impl Write) -> Result<Passed> {
    let sigma = read_matrix(&a.cov)?;
    let p = Lemma3ParamsF64::new(a.mu.0, sigma, a.m.0, a.v.0)?;
    let seed = a.common.seed;
    let closed = mvn_cdf::cdf(&lemma3_query(&p, a.accuracy)?.with_seed(seed))?;
    let oracle = if a.oracle {
        let mc = oracles::lemma3_lhs_mc(&p, a.draws, seed)?;
        let absdiff = (closed.value - mc.estimate).abs();
        let tolerance = verify::combined_band(mc.std_error, closed.err_estimate);
        Some(MonteCarloOracle {
            draws: a.draws,
            seed,
            value: mc.estimate,
            std_error: mc.std_error,
            absdiff,
            tolerance,
            passed: absdiff <= tolerance,
        })
    } else {
        None
    };
    let passed = oracle.as_ref().is_none_or(|o| o.passed);
    if a.common.json {
        emit_json(
            out,
            &json!({
                "command": "lemma3",
                "dim": p.dim(),
                "accuracy": a.accuracy,
                "seed": seed,
                "closed_form": Closed::from(&closed),
                "oracle": oracle,
                "passed": passed,
            }),
        )?;
    } else {
        write_closed(out, &closed)?;
        if let Some(o) = &oracle {
            writeln!(
                out,
                "oracle        {} ± {:e} (monte carlo, {} draws)",
                o.value, o.std_error, o.draws
            )?;
            writeln!(out, "absdiff       {:e}", o.absdiff)?;
            writeln!(out, "tolerance     {:e} (3 combined standard errors)", o.tolerance)?;
            writeln!(out, "status        {}", status(o.passed))?;
        }
    }
    Ok(passed)
}

pub fn pmf(a: PmfArgs, out: &mut impl Write) -> Result<Passed> {
    let d = model(&a.model)?;
    let y: SignVector = a.y.parse()?;
    let e = mvn_cdf::cdf(&d.pmf_query(&y, a.accuracy)?.with_seed(a.common.seed))?;
    if a.common.json {
        emit_json(
            out,
            &json!({
                "command": "pmf",
                "y": y.signs(),
                "accuracy": a.accuracy,
                "seed": a.common.seed,
                "probability": e.value,
                "err_estimate": e.err_estimate,
                "method": e.method.as_str(),
            }),
        )?;
    } else {
        writeln!(out, "probability   {}", e.value)?;
        writeln!(out, "err_estimate  {:e}", e.err_estimate)?;
        writeln!(out, "method        {}", e.method)?;
    }
    Ok(true)
}

pub fn sample(a: SampleArgs, out: &mut impl Write) -> Result<Passed> {
    let d = model(&a.model)?;
    let draws = d.sample(a.n, a.common.seed)?;
    if a.common.json {
        let rows: Vec<&[i8]> = draws.iter().map(SignVector::signs).collect();
        emit_json(
            out,
            &json!({
                "command": "sample",
                "n": a.n,
                "seed": a.common.seed,
                "draws": rows,
            }),
        )?;
    } else {
        for y in &draws {
            writeln!(out, "{y}")?;
        }
    }
    Ok(true)
}

pub fn normalize(a: NormalizeArgs, out: &mut impl Write) -> Result<Passed> {
    let d = model(&a.model)?;
    ensure!(
        d.dim() <= owen_gauss::probit_bernoulli::MAX_ENUMERATION_DIM,
        "normalize enumerates 2^N terms and is limited to N <= {}",
        owen_gauss::probit_bernoulli::MAX_ENUMERATION_DIM
    );
    let (mut total, mut err) = (0.0, 0.0);
    for y in SignVector::support(d.dim()) {
        let e = mvn_cdf::cdf(&d.pmf_query(&y, a.accuracy)?.with_seed(a.common.seed))?;
        total += e.value;
        err += e.err_estimate;
    }
    let terms = 1usize << d.dim();
    let budget = terms as f64 * a.accuracy;
    let deviation = total - 1.0;
    let passed = deviation.abs() <= budget + err;
    if a.common.json {
        emit_json(
            out,
            &json!({
                "command": "normalize",
                "dim": d.dim(),
                "terms": terms,
                "accuracy": a.accuracy,
                "seed": a.common.seed,
                "total": total,
                "deviation": deviation,
                "err_estimate": err,
                "budget": budget,
                "passed": passed,
            }),
        )?;
    } else {
        writeln!(out, "total         {total}")?;
        writeln!(out, "deviation     {deviation:e}")?;
        writeln!(out, "err_estimate  {err:e}")?;
        writeln!(out, "budget        {budget:e} ({terms} terms)")?;
        writeln!(out, "status        {}", status(passed))?;
    }
    Ok(passed)
}

#[derive(Debug, Serialize)]
struct CheckRow<'a> {
    suite: &'a str,
    name: &'a str,
    trials: usize,
    failures: usize,
    allowed_failures: usize,
    worst_deviation: f64,
    tolerance: f64,
    passed: bool,
}

impl<'a> From<&'a CheckResult> for CheckRow<'a> {
    fn from(c: &'a CheckResult) -> Self {
        Self {
            suite: c.suite,
            name: c.name,
            trials: c.trials,
            failures: c.failures,
            allowed_failures: c.allowed_failures,
            worst_deviation: c.worst_deviation,
            tolerance: c.tolerance_at_worst,
            passed: c.passed(),
        }
    }
}

pub fn verify(a: VerifyArgs, out: &mut impl Write) -> Result<Passed> {
    let config = VerifyConfig {
        trials: a.trials,
        seed: a.common.seed,
        accuracy: a.accuracy,
        perturb: a.perturb,
    };
    let results = verify::run_suite(a.suite, &config)?;
    let failed = results.iter().filter(|c| !c.passed()).count();
    if a.common.json {
        let checks: Vec<CheckRow> = results.iter().map(CheckRow::from).collect();
        emit_json(
            out,
            &json!({
                "command": "verify",
                "suite": a.suite.name(),
                "trials": a.trials,
                "seed": a.common.seed,
                "accuracy": a.accuracy,
                "checks": checks,
                "failed": failed,
                "passed": failed == 0,
            }),
        )?;
    } else {
        writeln!(
            out,
            "{:<6} {:<10} {:<32} {:>13} {:>11} {:>11}",
            "status", "suite", "check", "failures", "worst", "tolerance"
        )?;
        for c in &results {
            writeln!(
                out,
                "{:<6} {:<10} {:<32} {:>13} {:>11.3e} {:>11.3e}",
                status(c.passed()),
                c.suite,
                c.name,
                format!("{}/{} ({})", c.failures, c.trials, c.allowed_failures),
                c.worst_deviation,
                c.tolerance_at_worst
            )?;
        }
        if failed == 0 {
            writeln!(out, "all {} checks passed", results.len())?;
        } else {
            writeln!(out, "{failed} of {} checks failed", results.len())?;
        }
    }
    Ok(failed == 0)
}

/// One record of a `table` spec file.
#[derive(Debug, Deserialize)]
#[serde(tag = "identity", rename_all = "lowercase")]
pub enum Record {
    Lemma2 {
        id: Option<String>,
        mu: f64,
        sigma2: f64,
        m: Vec<f64>,
        v: Vec<f64>,
    },
    Lemma3 {
        id: Option<String>,
        mu: Vec<f64>,
        cov: Vec<Vec<f64>>,
        m: Vec<f64>,
        v: Vec<f64>,
    },
}

#[derive(Debug, Serialize)]
pub struct TableRow {
    pub id: String,
    pub params: Value,
    pub closed: f64,
    pub oracle: f64,
    pub absdiff: f64,
}

fn table_row(index: usize, record: Record, a: &TableArgs) -> Result<TableRow> {
    let seed = a.common.seed;
    let (id, params, closed, oracle) = match record {
        Record::Lemma2 { id, mu, sigma2, m, v } => {
            let params = json!({ "mu": mu, "sigma2": sigma2, "m": m, "v": v });
            let p = Lemma2ParamsF64::new(mu, sigma2, m, v)?;
            let closed = mvn_cdf::cdf(&lemma2_query(&p, a.accuracy)?.with_seed(seed))?.value;
            let oracle = oracles::lemma2_lhs_quadrature(&p, a.order)?;
            (id.unwrap_or_else(|| format!("lemma2-{index}")), params, closed, oracle)
        }
        Record::Lemma3 { id, mu, cov, m, v } => {
            let params = json!({ "mu": mu, "cov": cov, "m": m, "v": v });
            let sigma = PdMatrixF64::from_rows(&cov)?;
            let p = Lemma3ParamsF64::new(mu, sigma, m, v)?;
            let closed = mvn_cdf::cdf(&lemma3_query(&p, a.accuracy)?.with_seed(seed))?.value;
            let oracle = oracles::lemma3_lhs_mc(&p, a.draws, seed.wrapping_add(index as u64))?.estimate;
            (id.unwrap_or_else(|| format!("lemma3-{index}")), params, closed, oracle)
        }
    };
    Ok(TableRow {
        id,
        params,
        closed,
        oracle,
        absdiff: (closed - oracle).abs(),
    })
}

pub fn table(a: TableArgs, out: &mut impl Write) -> Result<Passed> {
    let text = fs::read_to_string(&a.spec).with_context(|| format!("cannot read spec file {}", a.spec.display()))?;
    let records: Vec<Value> = serde_json::from_str(&text)
        .with_context(|| format!("spec file {} must hold a JSON array of records", a.spec.display()))?;
    let mut rows = Vec::with_capacity(records.len());
    for (index, value) in records.into_iter().enumerate() {
        let row = serde_json::from_value::<Record>(value)
            .map_err(anyhow::Error::from)
            .and_then(|r| table_row(index, r, &a))
            .with_context(|| format!("record {index}"))?;
        rows.push(row);
    }
    let json = a.common.json || a.format == Format::Json;
    if json {
        emit_json(out, &json!({ "command": "table", "rows": rows }))?;
    } else {
        let mut w = csv::Writer::from_writer(&mut *out);
        w.write_record(["id", "params", "closed", "oracle", "absdiff"])?;
        for r in &rows {
            w.write_record([
                r.id.clone(),
                r.params.to_string(),
                sci(r.closed),
                sci(r.oracle),
                sci(r.absdiff),
            ])?;
        }
        w.flush()?;
    }
    Ok(true)
}

/// Bivariate standard normal density with correlation `rho`.
pub fn bivariate_density(z1: f64, z2: f64, rho: f64) -> f64 {
    let one_m = 1.0 - rho * rho;
    let q = (z1 * z1 - 2.0 * rho * z1 * z2 + z2 * z2) / one_m;
    (-0.5 * q).exp() / (std::f64::consts::TAU * one_m.sqrt())
}

pub fn figure(a: FigureArgs, out: &mut impl Write) -> Result<Passed> {
    if a.rho.is_nan() || a.rho.abs() >= 1.0 {
        bail!("rho must lie strictly inside (-1, 1), got {}", a.rho);
    }
    ensure!(a.grid >= 2, "grid must have at least 2 points per axis");
    ensure!(a.extent > 0.0 && a.extent.is_finite(), "extent must be positive");
    let n = a.grid;
    let step = 2.0 * a.extent / (n - 1) as f64;
    let axis: Vec<f64> = (0..n).map(|i| -a.extent + step * i as f64).collect();
    let cell_area = step * step;
    if a.json {
        let mut rows = Vec::with_capacity(n * n);
        let mut mass = 0.0;
        for &z1 in &axis {
            for &z2 in &axis {
                let d = bivariate_density(z1, z2, a.rho);
                let inside = z1 <= 0.0 && z2 <= 0.0;
                if inside {
                    mass += d * cell_area;
                }
                rows.push(json!([z1, z2, d, u8::from(inside)]));
            }
        }
        emit_json(
            out,
            &json!({
                "command": "figure",
                "rho": a.rho,
                "grid": n,
                "extent": a.extent,
                "cell_area": cell_area,
                "region_mass": mass,
                "columns": ["z1", "z2", "density", "in_region"],
                "rows": rows,
            }),
        )?;
    } else {
        let mut w = csv::Writer::from_writer(&mut *out);
        w.write_record(["z1", "z2", "density", "in_region"])?;
        for &z1 in &axis {
            for &z2 in &axis {
                let inside = z1 <= 0.0 && z2 <= 0.0;
                let d = bivariate_density(z1, z2, a.rho);
                w.write_record([sci(z1), sci(z2), sci(d), if inside { "1" } else { "0" }.to_string()])?;
            }
        }
        w.flush()?;
    }
    Ok(true)
}
