//! Command dispatch for the `fracrl` binary.

// `!(x > y)` is deliberate throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod args;
pub mod render;
pub mod report;

use fracrl_core::rules::REPRODUCTION_TOL;
use fracrl_core::{
    check_chain_a, check_chain_b, check_leibniz, frac_deriv, frac_deriv_with, locality_test,
    reproduce_suite, EngineConfig, Error, FracOrder, PiecewiseFn, Verdict, DEFAULT_DOMAIN_END,
};

use args::{Cli, Command, RuleArgs};
use report::{ConfigEcho, Operand, Record, ReportDocument, Status};

/// Process exit code for an error that stopped a command.
pub fn error_code(e: &Error) -> u8 {
    if e.is_parse_error() {
        2
    } else if e.is_domain_error() {
        3
    } else {
        4
    }
}

fn engine_config(cli: &Cli) -> Result<EngineConfig, Error> {
    if cli.nodes == 0 {
        return Err(Error::Domain("--nodes must be at least 1".into()));
    }
    if !(cli.tol >= 0.0) {
        return Err(Error::Domain(format!(
            "--tol must be non-negative, got {}",
            cli.tol
        )));
    }
    Ok(EngineConfig {
        nodes: cli.nodes,
        ..EngineConfig::default()
    })
}

fn echo(
    cli: &Cli,
    cfg: &EngineConfig,
    alpha: Option<f64>,
    at: Option<f64>,
    method: Option<&str>,
) -> ConfigEcho {
    ConfigEcho {
        alpha,
        at,
        method: method.map(str::to_string),
        tol: cli.tol,
        merge_tol: cfg.merge_tol,
        nodes: cfg.nodes,
        domain_end: cli.domain_end,
        oracle_step: cfg.oracle_step,
        richardson_levels: cfg.richardson_levels,
    }
}

fn operand(name: &str, function: &str) -> Operand {
    Operand {
        name: name.into(),
        function: function.into(),
    }
}

/// Runs one command to a report, or the error that stopped it.
pub fn run(cli: &Cli) -> Result<ReportDocument, Error> {
    let cfg = engine_config(cli)?;
    let parse = |src: &str| PiecewiseFn::parse(src, cli.domain_end);
    let (name, config, results, status) = match &cli.command {
        Command::Deriv {
            function,
            point,
            method,
        } => {
            let f = parse(function)?;
            let alpha = FracOrder::new(point.alpha)?;
            let result = match method.method() {
                Some(m) => frac_deriv_with(&f, alpha, point.at, m, &cfg)?,
                None => frac_deriv(&f, alpha, point.at, &cfg)?,
            };
            let status = if result.two_sided_mismatch {
                Status::TwoSidedMismatch
            } else {
                Status::Ok
            };
            (
                "deriv",
                echo(
                    cli,
                    &cfg,
                    Some(point.alpha),
                    Some(point.at),
                    Some(method.name()),
                ),
                vec![Record::Derivative {
                    function: function.clone(),
                    result,
                }],
                status,
            )
        }
        Command::Check { rule } => {
            let (name, operands, point, report) = match rule {
                RuleArgs::Leibniz { u, v, point } => {
                    let alpha = FracOrder::new(point.alpha)?;
                    let r = check_leibniz(&parse(u)?, &parse(v)?, alpha, point.at, &cfg, cli.tol)?;
                    (
                        "check leibniz",
                        vec![operand("u", u), operand("v", v)],
                        point,
                        r,
                    )
                }
                RuleArgs::ChainA { f, u, point } => {
                    let alpha = FracOrder::new(point.alpha)?;
                    let r = check_chain_a(&parse(f)?, &parse(u)?, alpha, point.at, &cfg, cli.tol)?;
                    (
                        "check chain-a",
                        vec![operand("f", f), operand("u", u)],
                        point,
                        r,
                    )
                }
                RuleArgs::ChainB { f, u, point } => {
                    let alpha = FracOrder::new(point.alpha)?;
                    let r = check_chain_b(&parse(f)?, &parse(u)?, alpha, point.at, &cfg, cli.tol)?;
                    (
                        "check chain-b",
                        vec![operand("f", f), operand("u", u)],
                        point,
                        r,
                    )
                }
            };
            let status = match report.verdict {
                Verdict::Holds => Status::Holds,
                Verdict::Violated => Status::Violated,
            };
            (
                name,
                echo(cli, &cfg, Some(point.alpha), Some(point.at), None),
                vec![Record::Rule { operands, report }],
                status,
            )
        }
        Command::Reproduce => {
            let rep = reproduce_suite(&cfg)?;
            let status = if rep.all_match() {
                Status::Reproduced
            } else {
                Status::Deviation
            };
            let mut results: Vec<Record> = rep
                .counterexamples
                .into_iter()
                .map(Record::Counterexample)
                .collect();
            results.push(Record::LocalityCheck(rep.locality));
            let mut config = echo(cli, &cfg, Some(0.5), Some(1.0), None);
            // the suite fixes its own tolerance and domain
            config.tol = REPRODUCTION_TOL;
            config.domain_end = DEFAULT_DOMAIN_END;
            ("reproduce", config, results, status)
        }
        Command::Locality {
            u1,
            continuations,
            alpha,
            at,
        } => {
            let base = parse(u1)?;
            let conts = continuations
                .iter()
                .map(|s| parse(s))
                .collect::<Result<Vec<_>, _>>()?;
            let report = locality_test(&base, &conts, FracOrder::new(*alpha)?, *at, &cfg)?;
            let status = if report.agrees {
                Status::Local
            } else {
                Status::NotLocal
            };
            (
                "locality",
                echo(cli, &cfg, Some(*alpha), Some(*at), None),
                vec![Record::Locality {
                    u1: u1.clone(),
                    report,
                }],
                status,
            )
        }
    };
    Ok(ReportDocument {
        tool: "fracrl".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: name.into(),
        config,
        results,
        status,
    })
}
