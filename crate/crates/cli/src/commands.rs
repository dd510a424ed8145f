use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use vfusion::simbench::{run_study, SimCase, StudyConfig};
use vfusion::{
    run_chain, selection_gibbs, summarize, summarize_selection, Chain, Dataset, FusionError, HyperParams,
    Partition, PosteriorSummary, Preprocessing, SamplerConfig, SlabKind,
};

use crate::args::{Common, FitArgs, GScale, SelectArgs, SimulateArgs, SmoothArgs};
use crate::io::*;

fn sampler_config(c: &Common) -> CliResult<SamplerConfig> {
    let cfg = SamplerConfig::new(c.iters, c.burnin, c.seed)
        .with_route(c.route.into())
        .with_threshold(c.threshold);
    cfg.validate()?;
    Ok(cfg)
}

fn hyper(c: &Common, n: usize) -> CliResult<HyperParams> {
    Ok(HyperParams::new(c.g.resolve(n), c.a_omega, c.b_omega)?)
}

fn preprocess_name(p: Preprocessing) -> String {
    match p {
        Preprocessing::Raw => "none",
        Preprocessing::Centered => "center",
        Preprocessing::Standardized => "standardize",
    }
    .to_owned()
}

fn route_name(c: &Common) -> String {
    format!("{:?}", c.route).to_lowercase()
}

fn one_based(p: &Partition) -> Vec<Vec<usize>> {
    p.blocks().iter().map(|b| (b.start + 1..=b.end).collect()).collect()
}

/// Singular designs only surface when the sampler is initialised, so they
/// keep their own exit code; anything else from the sampler is a runtime failure.
fn sampler_error(e: FusionError) -> CliError {
    match e {
        FusionError::SingularDesign(_) | FusionError::SingularSystem => CliError {
            code: 3,
            message: format!("design is singular at initialisation ({e}); reduce the number of predictors"),
        },
        e => e.into(),
    }
}

pub fn simulate(args: &SimulateArgs) -> CliResult<()> {
    let c = &args.common;
    let case = SimCase::new(args.case, args.n, args.rho)?;
    if args.n < case.p() {
        return Err(CliError::config(format!("n must be at least {} (the number of predictors)", case.p())));
    }
    if c.threads == 0 {
        return Err(CliError::config("threads must be at least 1"));
    }
    let mut cfg = StudyConfig::new(args.case, args.n, args.rho, args.replicates, c.seed);
    cfg.sampler = sampler_config(c)?;
    cfg.g = match c.g {
        GScale::Auto => None,
        GScale::Value(g) => Some(g),
    };
    cfg.a_omega = c.a_omega;
    cfg.b_omega = c.b_omega;
    cfg.threads = c.threads;
    let hyper = cfg.hyper()?;
    let study = run_study(&cfg).map_err(sampler_error)?;
    let report = SimulationReport {
        settings: StudySettings {
            case: args.case,
            n: args.n,
            rho: args.rho,
            replicates: args.replicates,
            seed: c.seed,
            g: hyper.g,
            g_auto: c.g.is_auto(),
            a_omega: hyper.a_omega,
            b_omega: hyper.b_omega,
            iterations: c.iters,
            burn_in: c.burnin,
            threshold: c.threshold,
            preprocess: preprocess_name(cfg.preprocessing),
            route: route_name(c),
        },
        metrics: StudyMetrics {
            mse: study.mse,
            pse: study.pse,
            p_b: study.p_b,
        },
        supplementary_rand_index: study.rand_index,
        per_replicate: study
            .replicates
            .into_iter()
            .map(|r| ReplicateRow {
                replicate: r.index + 1,
                seed: r.seed,
                mse: r.mse,
                pse: r.pse,
                p_b: r.p_b,
                rand_index: r.rand_index,
                delta_prob: r.delta_prob,
                beta_hat: r.beta_hat,
            })
            .collect(),
    };
    write_json(c.out.as_deref(), &report)
}

struct Regression {
    y: DVector<f64>,
    x: DMatrix<f64>,
    predictors: Vec<String>,
}

fn load_regression(input: &Path, response: &str) -> CliResult<Regression> {
    let table = read_table(input)?;
    let r = table
        .column(response)
        .ok_or_else(|| CliError::config(format!("response column {response:?} not found in {}", input.display())))?;
    let n = table.rows();
    let keep: Vec<usize> = (0..table.headers.len()).filter(|&k| k != r).collect();
    if n < 2 {
        return Err(CliError::config(format!("need at least 2 rows, got {n}")));
    }
    let x = DMatrix::from_fn(n, keep.len(), |i, j| table.columns[keep[j]][i]);
    let predictors: Vec<String> = keep.iter().map(|&k| table.headers[k].clone()).collect();
    if n <= predictors.len() + 1 {
        eprintln!(
            "warning: {n} rows for {} predictors; the full model may be singular",
            predictors.len()
        );
    }
    Ok(Regression {
        y: DVector::from_column_slice(&table.columns[r]),
        x,
        predictors,
    })
}

fn write_fusion_chain(path: &Path, chain: &Chain) -> CliResult<()> {
    let burn = chain.meta.burn_in;
    write_chain(
        path,
        "delta",
        chain.draws.iter().enumerate().map(|(k, d)| ChainRow {
            iter: burn + k + 1,
            sigma2: d.sigma2,
            omega: d.omega,
            indicators: d.delta.as_slice(),
            beta: &d.beta,
        }),
    )
}

fn fit_summary(s: &PosteriorSummary, cfg: &SamplerConfig, metadata: Metadata) -> FitSummary {
    FitSummary {
        beta_mean: s.beta_mean.clone(),
        delta_prob: s.delta_prob.clone(),
        partition: one_based(&s.partition_est),
        sigma2_mean: s.sigma2_mean,
        omega_mean: s.omega_mean,
        seed: cfg.seed,
        iterations: cfg.total_iterations,
        burn_in: cfg.burn_in,
        metadata,
    }
}

pub fn fit(args: &FitArgs) -> CliResult<()> {
    let c = &args.common;
    let cfg = sampler_config(c)?;
    let reg = load_regression(&args.input, &args.response)?;
    let how: Preprocessing = args.preprocess.into();
    let data = Dataset::preprocess(reg.y, reg.x, how)?;
    let hyper = hyper(c, data.n())?;
    let chain = run_chain(&data, &hyper, &cfg).map_err(sampler_error)?;
    let summary = summarize(&chain, cfg.partition_threshold)?;
    if let Some(path) = &c.chain {
        write_fusion_chain(path, &chain)?;
    }
    let metadata = Metadata {
        command: "fit".into(),
        input: args.input.display().to_string(),
        response: Some(args.response.clone()),
        predictors: reg.predictors,
        n: data.n(),
        p: data.p(),
        g: hyper.g,
        g_auto: c.g.is_auto(),
        a_omega: hyper.a_omega,
        b_omega: hyper.b_omega,
        threshold: cfg.partition_threshold,
        preprocess: preprocess_name(how),
        route: Some(route_name(c)),
        slab: None,
    };
    write_json(c.out.as_deref(), &fit_summary(&summary, &cfg, metadata))
}

pub fn smooth(args: &SmoothArgs) -> CliResult<()> {
    let c = &args.common;
    let cfg = sampler_config(c)?;
    let table = read_table(&args.input)?;
    if table.headers.len() != 1 {
        return Err(CliError::config(format!(
            "smooth expects one numeric column, {} has {}",
            args.input.display(),
            table.headers.len()
        )));
    }
    let signal = &table.columns[0];
    if signal.len() < 2 {
        return Err(CliError::config(format!("need n >= 2 observations, got {}", signal.len())));
    }
    let data = Dataset::identity_design(signal)?;
    let hyper = hyper(c, data.n())?;
    let chain = run_chain(&data, &hyper, &cfg).map_err(sampler_error)?;
    let summary = summarize(&chain, cfg.partition_threshold)?;
    if let Some(path) = &c.chain {
        write_fusion_chain(path, &chain)?;
    }
    let fitted = summary.fused_beta();
    let out_path = c.out.as_deref();
    let mut w = output(out_path)?;
    let write = |w: &mut dyn Write| -> std::io::Result<()> {
        writeln!(w, "index,observed,fitted,boundary_prob")?;
        for i in 0..signal.len() {
            // δ_i sits between rows i and i+1; the last row has no boundary after it
            let prob = summary.delta_prob.get(i).map_or(String::new(), |q| q.to_string());
            writeln!(w, "{},{},{},{prob}", i + 1, signal[i], fitted[i])?;
        }
        w.flush()
    };
    write(&mut w).map_err(|e| CliError::io(out_path.unwrap_or(Path::new("<stdout>")), e))?;

    if let Some(path) = &args.summary {
        let metadata = Metadata {
            command: "smooth".into(),
            input: args.input.display().to_string(),
            response: None,
            predictors: Vec::new(),
            n: data.n(),
            p: data.p(),
            g: hyper.g,
            g_auto: c.g.is_auto(),
            a_omega: hyper.a_omega,
            b_omega: hyper.b_omega,
            threshold: cfg.partition_threshold,
            preprocess: preprocess_name(Preprocessing::Raw),
            route: Some(route_name(c)),
            slab: None,
        };
        write_json(Some(path), &fit_summary(&summary, &cfg, metadata))?;
    }
    Ok(())
}

/// `gslab:auto` (or bare `gslab`) takes its scale from `--g`.
fn resolve_slab(text: &str, g: GScale, n: usize) -> CliResult<(SlabKind, bool)> {
    let s = text.trim();
    match s.split_once(':') {
        Some(("gslab", v)) if v.trim().eq_ignore_ascii_case("auto") => Ok((SlabKind::GSlab(g.resolve(n)), g.is_auto())),
        None if s == "gslab" => Ok((SlabKind::GSlab(g.resolve(n)), g.is_auto())),
        _ => Ok((s.parse::<SlabKind>()?, false)),
    }
}

pub fn select(args: &SelectArgs) -> CliResult<()> {
    let c = &args.common;
    let cfg = sampler_config(c)?;
    // validate the slab before touching the input
    resolve_slab(&args.slab, c.g, 1)?;
    let reg = load_regression(&args.input, &args.response)?;
    let how: Preprocessing = args.preprocess.into();
    let data = Dataset::preprocess(reg.y, reg.x, how)?;
    let (slab, g_auto) = resolve_slab(&args.slab, c.g, data.n())?;
    let hyper = hyper(c, data.n())?;
    let chain = selection_gibbs(&data, slab, &hyper, &cfg).map_err(sampler_error)?;
    let summary = summarize_selection(&chain, cfg.partition_threshold)?;
    if let Some(path) = &c.chain {
        let burn = chain.meta.burn_in;
        write_chain(
            path,
            "xi",
            chain.draws.iter().enumerate().map(|(k, d)| ChainRow {
                iter: burn + k + 1,
                sigma2: d.sigma2,
                omega: d.omega,
                indicators: d.xi.as_slice(),
                beta: &d.beta,
            }),
        )?;
    }
    let out = SelectSummary {
        beta_mean: summary.beta_mean,
        xi_prob: summary.xi_prob,
        selected: summary
            .selected
            .iter()
            .enumerate()
            .filter(|(_, &s)| s)
            .map(|(j, _)| j + 1)
            .collect(),
        sigma2_mean: summary.sigma2_mean,
        omega_mean: summary.omega_mean,
        seed: cfg.seed,
        iterations: cfg.total_iterations,
        burn_in: cfg.burn_in,
        metadata: Metadata {
            command: "select".into(),
            input: args.input.display().to_string(),
            response: Some(args.response.clone()),
            predictors: reg.predictors,
            n: data.n(),
            p: data.p(),
            g: match slab {
                SlabKind::GSlab(g) => g,
                _ => hyper.g,
            },
            g_auto,
            a_omega: hyper.a_omega,
            b_omega: hyper.b_omega,
            threshold: cfg.partition_threshold,
            preprocess: preprocess_name(how),
            route: None,
            slab: Some(slab.to_string()),
        },
    };
    write_json(c.out.as_deref(), &out)
}
