use clap::{Args, Parser, Subcommand, ValueEnum};
use fracrl_core::{Method, DEFAULT_DOMAIN_END, VERDICT_TOL};

#[derive(Debug, Parser)]
#[command(
    name = "fracrl",
    version,
    about = "Modified Riemann-Liouville derivatives of piecewise functions, and checks of the Leibniz and chain rules claimed for them"
)]
pub struct Cli {
    /// Residual at or below which a rule check reports HOLDS.
    #[arg(long, global = true, default_value_t = VERDICT_TOL)]
    pub tol: f64,

    /// Gauss-Jacobi nodes per panel.
    #[arg(long, global = true, default_value_t = 64)]
    pub nodes: usize,

    /// Right end T of the domain [0, T] every function is defined on.
    #[arg(long, global = true, default_value_t = DEFAULT_DOMAIN_END)]
    pub domain_end: f64,

    #[arg(long, global = true, value_enum, default_value_t = Format::Table)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Table,
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    /// Symbolic when the function flattens to shifted powers, else quadrature.
    Auto,
    Symbolic,
    Quadrature,
    Oracle,
}

impl MethodArg {
    pub fn method(self) -> Option<Method> {
        match self {
            MethodArg::Auto => None,
            MethodArg::Symbolic => Some(Method::Symbolic),
            MethodArg::Quadrature => Some(Method::Quadrature),
            MethodArg::Oracle => Some(Method::Oracle),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            MethodArg::Auto => "auto",
            MethodArg::Symbolic => "symbolic",
            MethodArg::Quadrature => "quadrature",
            MethodArg::Oracle => "oracle",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Point {
    /// Order of the derivative, 0 < alpha < 1.
    #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
    pub alpha: f64,

    /// Evaluation point t.
    #[arg(long, allow_hyphen_values = true)]
    pub at: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// The alpha-derivative of one function at one point.
    Deriv {
        /// Function of t in the DSL, e.g. "sqrt(t) + relu(t-1)".
        #[arg(long = "fn")]
        function: String,
        #[command(flatten)]
        point: Point,
        #[arg(long, value_enum, default_value_t = MethodArg::Auto)]
        method: MethodArg,
    },
    /// Both sides of a claimed rule at one point.
    Check {
        #[command(subcommand)]
        rule: RuleArgs,
    },
    /// The five counterexamples and the locality check.
    Reproduce,
    /// Derivative at t0 of u1 and of u1 glued to each continuation.
    Locality {
        #[arg(long, default_value = "sqrt(t)")]
        u1: String,
        /// Continuation past t0; repeat for several.
        #[arg(long = "cont", default_values_t = [
            "sqrt(t)".to_string(),
            "sqrt(t) + (t - 1)".to_string(),
            "sqrt(t) + 5*(t - 1)".to_string(),
        ])]
        continuations: Vec<String>,
        #[arg(long, default_value_t = 0.5, allow_hyphen_values = true)]
        alpha: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        at: f64,
    },
}

#[derive(Debug, Subcommand)]
pub enum RuleArgs {
    /// (uv)^(a) = u^(a) v + u v^(a)
    Leibniz {
        #[arg(long)]
        u: String,
        #[arg(long)]
        v: String,
        #[command(flatten)]
        point: Point,
    },
    /// (f(u))^(a) = f'(u) u^(a); f is written in the variable u.
    ChainA {
        #[arg(long)]
        f: String,
        #[arg(long)]
        u: String,
        #[command(flatten)]
        point: Point,
    },
    /// (f(u))^(a) = f^(a)(u) (u')^a; f is written in the variable u.
    ChainB {
        #[arg(long)]
        f: String,
        #[arg(long)]
        u: String,
        #[command(flatten)]
        point: Point,
    },
}
