//! Subcommand execution: load the state, run the requested computation,
//! emit rows in the selected format.

use crate::config::{
    parse_grid, BoundsArgs, CompareArgs, ComputeArgs, DetectArgs, OutputArgs, RunCommand,
    RunConfig, ScanArgs, StateSource,
};
use crate::emit::{emit_csv, emit_json, fmt_f64, fmt_opt_f64, write_output, CsvRow, OutputFormat};
use entanglemeter::bounds::{BoundRequest, VerdictSummary, WITNESS_TOL};
use entanglemeter::detection::{detection_scan, GridAxis, ScanRow};
use entanglemeter::measures::{MeasureResult, MeasureSpec, RoofOptions, UnitarySearch};
use entanglemeter::{
    bipartitions, bounds, compare, detection, measures, ComparisonRow, Error, Result,
};
use serde::Serialize;

pub fn run(config: &RunConfig) -> Result<()> {
    match &config.command {
        RunCommand::Compute(args) => run_compute(args),
        RunCommand::Bounds(args) => run_bounds(args),
        RunCommand::Detect(args) => run_detect(args),
        RunCommand::Scan(args) => run_scan(args),
        RunCommand::Compare(args) => run_compare(args),
    }
}

fn emit<R: CsvRow + Serialize>(rows: &[R], output: &OutputArgs) -> Result<()> {
    let text = match output.format {
        OutputFormat::Csv => emit_csv(rows),
        OutputFormat::Json => emit_json(rows),
    };
    write_output(&text, output.out.as_deref())
        .map_err(|e| Error::StateParse(format!("cannot write output: {e}")))
}

fn run_compute(args: &ComputeArgs) -> Result<()> {
    let source = StateSource::parse(&args.state)?;
    let state = source.load()?;

    let measure = args.measure.to_ascii_lowercase().replace('_', "-");
    let (family_is_q, k) = match measure.as_str() {
        "q-k-me" => (true, args.k),
        "alpha-k-me" => (false, args.k),
        "q-gme" => (true, 2),
        "alpha-gme" => (false, 2),
        other => {
            return Err(Error::ParamOutOfRange(format!(
                "unknown measure '{other}' (expected q-k-me, alpha-k-me, q-gme, alpha-gme)"
            )))
        }
    };
    let spec = if family_is_q {
        let q = args.q.ok_or_else(|| {
            Error::ParamOutOfRange("measure needs --q".into())
        })?;
        MeasureSpec::q(q, k)?
    } else {
        let alpha = args.alpha.ok_or_else(|| {
            Error::ParamOutOfRange("measure needs --alpha".into())
        })?;
        MeasureSpec::alpha(alpha, k)?
    };

    let result = match state.as_pure() {
        Some(psi) => {
            let (value, argmin) = match measure.as_str() {
                "q-gme" => measures::q_gme_pure(&psi, spec.param())?,
                "alpha-gme" => measures::alpha_gme_pure(&psi, spec.param())?,
                _ => measures::pure_measure(&psi, &spec)?,
            };
            MeasureResult::new(&measure, &spec, value, Some(&argmin), true)
        }
        None => {
            // mixed state: convex-roof upper estimate
            let rho = state.to_density();
            let est = measures::roof_estimate(
                &rho,
                &spec,
                &RoofOptions {
                    seed: args.output.seed,
                    ..Default::default()
                },
            )?;
            MeasureResult::new(&measure, &spec, est.value, None, false)
        }
    };
    emit(&[result], &args.output)
}

fn run_bounds(args: &BoundsArgs) -> Result<()> {
    let source = StateSource::parse(&args.state)?;
    let rho = source.load()?.to_density();
    let is_qubits = rho.dims().is_qubits();
    let uniform = rho.dims().uniform();

    fn per_cut(
        rho: &entanglemeter::DensityMatrix,
        name: &str,
        q: f64,
        reports: &mut Vec<entanglemeter::BoundReport>,
    ) -> Result<()> {
        for cut in bipartitions(rho.dims().n())? {
            let mut report = match name {
                "q-bipartite" => bounds::q_bipartite_bound(rho, &cut, q)?,
                _ => bounds::wei_bipartite_bound(rho, &cut, q)?,
            };
            report.name = format!("{}[{}]", report.name, cut);
            reports.push(report);
        }
        Ok(())
    }

    let mut requests: Vec<BoundRequest> = Vec::new();
    let mut reports = Vec::new();

    if args.bound.is_empty() {
        // every bound applicable to the given parameters
        requests.push(BoundRequest::GlobalNegativity);
        if let Some(q) = args.q {
            if is_qubits {
                requests.push(BoundRequest::QnQubit { q });
                if q >= 3.0 || q >= bounds::WEI_S {
                    requests.push(BoundRequest::QnImproved { q });
                }
            } else if uniform.is_some() {
                requests.push(BoundRequest::QnQudit { q });
                requests.push(BoundRequest::QnImproved { q });
            }
            per_cut(&rho, "q-bipartite", q, &mut reports)?;
        }
        if let Some(alpha) = args.alpha {
            if uniform.is_some() {
                requests.push(BoundRequest::AlphaN { alpha });
            }
        }
    } else {
        let need_q = || -> Result<f64> {
            args.q
                .ok_or_else(|| Error::ParamOutOfRange("bound needs --q".into()))
        };
        let need_alpha = || -> Result<f64> {
            args.alpha
                .ok_or_else(|| Error::ParamOutOfRange("bound needs --alpha".into()))
        };
        for name in &args.bound {
            match name.to_ascii_lowercase().replace('_', "-").as_str() {
                "negativity" => requests.push(BoundRequest::GlobalNegativity),
                "qn-qubit" => requests.push(BoundRequest::QnQubit { q: need_q()? }),
                "qn-qudit" => requests.push(BoundRequest::QnQudit { q: need_q()? }),
                "qn-improved" => requests.push(BoundRequest::QnImproved { q: need_q()? }),
                "alpha-n" => requests.push(BoundRequest::AlphaN {
                    alpha: need_alpha()?,
                }),
                "q-bipartite" => per_cut(&rho, "q-bipartite", need_q()?, &mut reports)?,
                "wei-bipartite" => per_cut(&rho, "wei-bipartite", need_q()?, &mut reports)?,
                "pi-roof" => {
                    let spec = if let Some(q) = args.q {
                        MeasureSpec::q(q, args.k)?
                    } else if let Some(alpha) = args.alpha {
                        MeasureSpec::alpha(alpha, args.k)?
                    } else {
                        return Err(Error::ParamOutOfRange(
                            "pi-roof needs --q or --alpha".into(),
                        ));
                    };
                    reports.push(measures::pi_lower_bound(
                        &rho,
                        &spec,
                        &UnitarySearch {
                            seed: args.output.seed,
                            ..Default::default()
                        },
                    )?);
                }
                other => {
                    return Err(Error::ParamOutOfRange(format!(
                        "unknown bound '{other}'"
                    )))
                }
            }
        }
    }

    let mut summary = bounds::entanglement_verdict(&rho, &requests)?;
    summary.reports.extend(reports);
    let witness = summary
        .reports
        .iter()
        .find(|r| r.certified && r.value > WITNESS_TOL)
        .map(|r| r.name.clone());
    summary.entangled = witness.is_some();
    summary.witness = witness;

    match args.output.format {
        OutputFormat::Json => {
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            write_output(&text, args.output.out.as_deref())
                .map_err(|e| Error::StateParse(format!("cannot write output: {e}")))?;
        }
        OutputFormat::Csv => {
            emit(&summary.reports, &args.output)?;
            print_verdict(&summary, &source);
        }
    }
    Ok(())
}

fn print_verdict(summary: &VerdictSummary, source: &StateSource) {
    if summary.entangled {
        eprintln!(
            "{}: n-nonseparable (entangled); witness: {}",
            source.describe(),
            summary.witness.as_deref().unwrap_or("-")
        );
    } else {
        eprintln!("{}: no certified detection", source.describe());
    }
}

#[derive(Debug, Serialize)]
struct DetectRow {
    state: String,
    n: usize,
    k: usize,
    a: f64,
    b: f64,
    c: f64,
    d: f64,
    e: f64,
    ghz_violated: bool,
    w_violated: bool,
    k_eff1: f64,
    k_eff2: f64,
    k_nonseparable: bool,
    genuinely_entangled: bool,
}

fn run_detect(args: &DetectArgs) -> Result<()> {
    let source = StateSource::parse(&args.state)?;
    let rho = source.load()?.to_density();
    let terms = detection::criterion_terms(&rho)?;
    let verdict = detection::detect(&rho, args.k)?;
    let row = DetectRow {
        state: source.describe(),
        n: rho.dims().n(),
        k: args.k,
        a: terms.a,
        b: terms.b,
        c: terms.c,
        d: terms.d,
        e: terms.e,
        ghz_violated: verdict.ghz_test_violated,
        w_violated: verdict.w_test_violated,
        k_eff1: verdict.k_eff1,
        k_eff2: verdict.k_eff2,
        k_nonseparable: verdict.k_nonseparable(),
        genuinely_entangled: verdict.genuinely_entangled(),
    };
    emit(&[row], &args.output)
}

fn run_scan(args: &ScanArgs) -> Result<()> {
    let source = StateSource::parse(&args.state)?;
    let (tag, n, fixed) = match &source {
        StateSource::Factory { tag, n, params } => (tag.clone(), *n, params.clone()),
        StateSource::File(_) => {
            return Err(Error::ParamOutOfRange(
                "scan sweeps a state family, not a file".into(),
            ))
        }
    };
    let mut swept = std::collections::BTreeMap::new();
    for grid in &args.grid {
        let axis = parse_grid(grid)?;
        swept.insert(axis.name.clone(), axis);
    }
    let mut axes = Vec::new();
    for &name in detection::family_param_names(&tag)? {
        if let Some(axis) = swept.remove(name) {
            axes.push(axis);
        } else if let Some(&v) = fixed.get(name) {
            axes.push(GridAxis::new(name, v, v, 0.0)?);
        } else {
            return Err(Error::ParamOutOfRange(format!(
                "parameter '{name}' has neither a grid nor a fixed value"
            )));
        }
    }
    if let Some(extra) = swept.keys().next() {
        return Err(Error::ParamOutOfRange(format!(
            "family '{tag}' has no parameter '{extra}'"
        )));
    }
    let rows = detection_scan(&tag, n, args.k, &axes)?;
    emit(&rows, &args.output)
}

fn run_compare(args: &CompareArgs) -> Result<()> {
    let axis = parse_grid(&args.grid)?;
    if axis.name != "theta" {
        return Err(Error::ParamOutOfRange(format!(
            "compare sweeps 'theta', got '{}'",
            axis.name
        )));
    }
    let rows = compare::example4_table(&axis.values(), args.q)?;
    emit(&rows, &args.output)
}

impl CsvRow for MeasureResult {
    fn header() -> &'static [&'static str] {
        &[
            "measure",
            "q",
            "alpha",
            "k",
            "value",
            "argmin_partition",
            "certified",
        ]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.measure.clone(),
            fmt_opt_f64(self.q),
            fmt_opt_f64(self.alpha),
            self.k.to_string(),
            fmt_f64(self.value),
            self.argmin_partition.clone(),
            self.certified.to_string(),
        ]
    }
}

impl CsvRow for entanglemeter::BoundReport {
    fn header() -> &'static [&'static str] {
        &["name", "value", "certified", "params"]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.name.clone(),
            fmt_f64(self.value),
            self.certified.to_string(),
            self.inputs.compact(),
        ]
    }
}

impl CsvRow for ScanRow {
    fn header() -> &'static [&'static str] {
        &[
            "family",
            "n",
            "k",
            "param1",
            "param2",
            "A",
            "B",
            "C",
            "D",
            "E",
            "ghz_violated",
            "w_violated",
            "k_eff1",
            "k_eff2",
        ]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.family.clone(),
            self.n.to_string(),
            self.k.to_string(),
            fmt_f64(self.param1),
            fmt_opt_f64(self.param2),
            fmt_f64(self.a),
            fmt_f64(self.b),
            fmt_f64(self.c),
            fmt_f64(self.d),
            fmt_f64(self.e),
            self.ghz_violated.to_string(),
            self.w_violated.to_string(),
            fmt_f64(self.k_eff1),
            fmt_f64(self.k_eff2),
        ]
    }
}

impl CsvRow for ComparisonRow {
    fn header() -> &'static [&'static str] {
        &["theta", "q", "c_q_gme", "gqc", "fill"]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            fmt_f64(self.theta),
            fmt_f64(self.q),
            fmt_f64(self.c_q_gme),
            fmt_f64(self.gqc),
            fmt_f64(self.fill),
        ]
    }
}

impl CsvRow for DetectRow {
    fn header() -> &'static [&'static str] {
        &[
            "state",
            "n",
            "k",
            "A",
            "B",
            "C",
            "D",
            "E",
            "ghz_violated",
            "w_violated",
            "k_eff1",
            "k_eff2",
            "k_nonseparable",
            "genuinely_entangled",
        ]
    }
    fn fields(&self) -> Vec<String> {
        vec![
            self.state.clone(),
            self.n.to_string(),
            self.k.to_string(),
            fmt_f64(self.a),
            fmt_f64(self.b),
            fmt_f64(self.c),
            fmt_f64(self.d),
            fmt_f64(self.e),
            self.ghz_violated.to_string(),
            self.w_violated.to_string(),
            fmt_f64(self.k_eff1),
            fmt_f64(self.k_eff2),
            self.k_nonseparable.to_string(),
            self.genuinely_entangled.to_string(),
        ]
    }
}
