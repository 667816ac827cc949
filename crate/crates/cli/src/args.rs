use crate::output::Format;
use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Precision {
    Exact,
    Float,
}

#[derive(Debug, Parser)]
#[command(name = "carnot", version, about = "Carnot group algebra, rewriting and sub-elliptic numerics")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

/// Run configuration shared by all subcommands.
#[derive(Debug, Args)]
pub struct Global {
    /// Builtin (heisenberg, engel, free:m,r) or a group-spec JSON file.
    #[arg(long, global = true, default_value = "heisenberg")]
    pub group: String,
    /// Grid cells per axis.
    #[arg(long, global = true, default_value_t = 32)]
    pub n: usize,
    #[arg(long, global = true, value_enum, default_value = "exact")]
    pub precision: Precision,
    /// Overridden by CARNOT_SEED.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the report here instead of stdout (solve: the node CSV).
    #[arg(long, global = true)]
    pub out: Option<String>,
    #[arg(long, global = true, value_enum, default_value = "json")]
    pub format: Format,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Stratified Lie algebra construction and validation.
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Group law, dilations, gauge and ball volume.
    #[command(subcommand)]
    Group(GroupCmd),
    /// Left-invariant vector fields.
    #[command(subcommand)]
    Fields(FieldsCmd),
    /// Derivative-word rewriting engine.
    #[command(subcommand)]
    Rewrite(RewriteCmd),
    /// Dirichlet solve of the constant-coefficient system on the grid box.
    Solve(SolveArgs),
    /// Regularity checks across grid resolutions.
    #[command(subcommand)]
    Verify(VerifyCmd),
    /// All acceptance checks in one report.
    Suite,
}

#[derive(Debug, Subcommand)]
pub enum AlgebraCmd {
    /// Emit the group-spec JSON model.
    New {
        /// Free nilpotent algebra `m,r` instead of --group.
        #[arg(long)]
        free: Option<String>,
    },
    /// Validate a spec file (or --group); exit 1 on violations.
    Check {
        #[arg(long)]
        spec: Option<String>,
    },
    /// Layer dimensions.
    Dims,
}

#[derive(Debug, Subcommand)]
pub enum GroupCmd {
    Mul {
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        q: String,
    },
    Inv {
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    Dilate {
        #[arg(long, allow_hyphen_values = true)]
        s: String,
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    Gauge {
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    Dist {
        #[arg(long, allow_hyphen_values = true)]
        p: String,
        #[arg(long, allow_hyphen_values = true)]
        q: String,
    },
    /// Monte-Carlo volume of the gauge ball.
    Ballvol {
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
    },
}

#[derive(Debug, Subcommand)]
pub enum FieldsCmd {
    /// Print X_{k,i}, given as `k,i`.
    Show { label: String },
    /// Strong-form residual with identity coefficients.
    Residual {
        /// JSON term list per component, e.g. `[{"exp":[1,0,0],"coeff":"1/2"}]`.
        #[arg(long)]
        u: String,
        /// Right-hand side, same format (default zero).
        #[arg(long)]
        f: Option<String>,
    },
}

#[derive(Debug, Subcommand)]
pub enum RewriteCmd {
    /// Reduce one layer profile to the base case.
    Trace {
        #[arg(long)]
        step: usize,
        /// Counts `h2,...,hr`.
        #[arg(long)]
        profile: String,
        /// Also write the trace JSON to this path.
        #[arg(long)]
        json: Option<String>,
    },
    /// Replay of the naive ordering on step 4.
    Obstruction,
    /// Exhaustive termination sweep.
    Sweep {
        #[arg(long, default_value = "2,3,4")]
        steps: String,
        #[arg(long, default_value_t = 6)]
        max_total: usize,
    },
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    /// `poly:p11`, `poly:harmonic`, `poly:json:[...]` or `zero`.
    #[arg(long, default_value = "poly:harmonic")]
    pub bc: String,
    /// Source term, same forms as --bc.
    #[arg(long, default_value = "zero")]
    pub f: String,
}

#[derive(Debug, Args)]
pub struct Sweep {
    /// Grid sizes; defaults to n/2 and n.
    #[arg(long)]
    pub resolutions: Option<String>,
    /// `harmonic`, `harmonic:<data>`, `bump` or a direct `poly:` field.
    #[arg(long)]
    pub field: Option<String>,
    /// Ball center, default the identity.
    #[arg(long, allow_hyphen_values = true)]
    pub center: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum VerifyCmd {
    Caccioppoli {
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long, default_value_t = 0.45)]
        radius: f64,
    },
    Peetre {
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long, default_value = "2,1")]
        direction: String,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 0.25)]
        epsilon0: f64,
    },
    Hormander {
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long, default_value = "2,1")]
        direction: String,
        #[arg(long, default_value_t = 0.25)]
        epsilon0: f64,
    },
    Decay {
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long, default_value_t = 0.5)]
        tau: f64,
        #[arg(long, default_value = "0.25,0.5,1")]
        radii: String,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
    },
    Supbound {
        #[command(flatten)]
        sweep: Sweep,
        #[arg(long, default_value_t = 0.4)]
        radius: f64,
    },
    Estimate {
        #[command(flatten)]
        sweep: Sweep,
        /// Labels `k,i` separated by `;`, applied right to left.
        #[arg(long, default_value = "2,1")]
        word: String,
        #[arg(long, default_value_t = 0.4)]
        radius: f64,
    },
}
