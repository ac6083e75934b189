//! `smba generate`: write a random QCQP instance and its sidecar.

use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::{Args, ValueEnum};
use smba::problem::smallest_eigenvalue;
use smba::qcqp_gen::{gen_instance, GenSpec, ObjectiveRegime, RhsScheme};

use crate::write_json;

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Regime {
    Convex,
    StronglyConvex,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BScheme {
    FeasibleX0,
    RandomB,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Number of variables.
    #[arg(long)]
    pub n: usize,
    /// Number of quadratic constraints.
    #[arg(long)]
    pub m: usize,
    #[arg(long, value_enum)]
    pub regime: Regime,
    #[arg(long, value_enum)]
    pub b_scheme: BScheme,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Fraction of zero eigenvalues in each rank-deficient Hessian.
    #[arg(long)]
    pub zero_fraction: Option<f64>,
    /// Range of the linear terms, as `LO,HI`.
    #[arg(long, value_parser = parse_range, allow_hyphen_values = true)]
    pub linear_range: Option<[f64; 2]>,
    /// Output directory.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// File stem: writes `<name>.json` and `<name>.sidecar.json`.
    #[arg(long, default_value = "instance")]
    pub name: String,
}

fn parse_range(s: &str) -> Result<[f64; 2], String> {
    let (lo, hi) = s.split_once(',').ok_or_else(|| format!("expected LO,HI, got '{s}'"))?;
    let parse = |t: &str| t.trim().parse::<f64>().map_err(|e| format!("'{t}': {e}"));
    Ok([parse(lo)?, parse(hi)?])
}

impl GenerateArgs {
    pub fn spec(&self) -> GenSpec {
        let regime = match self.regime {
            Regime::Convex => ObjectiveRegime::Convex,
            Regime::StronglyConvex => ObjectiveRegime::StronglyConvex,
        };
        let scheme = match self.b_scheme {
            BScheme::FeasibleX0 => RhsScheme::FeasibleX0,
            BScheme::RandomB => RhsScheme::RandomB,
        };
        let mut spec = GenSpec::new(self.n, self.m, regime, scheme, self.seed);
        if let Some(z) = self.zero_fraction {
            spec.zero_fraction = z;
        }
        if let Some(r) = self.linear_range {
            spec.linear_range = r;
        }
        spec
    }
}

pub fn cmd_generate(args: &GenerateArgs) -> anyhow::Result<()> {
    let spec = args.spec();
    let generated = gen_instance(&spec)?;
    fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let instance_path = args.out.join(format!("{}.json", args.name));
    let sidecar_path = args.out.join(format!("{}.sidecar.json", args.name));
    let mut text = generated.instance.to_json()?;
    text.push('\n');
    fs::write(&instance_path, text).with_context(|| format!("writing {}", instance_path.display()))?;
    write_json(&sidecar_path, &generated.sidecar(&spec))?;

    println!("n = {}", spec.n);
    println!("m = {}", spec.m);
    println!(
        "lambda_min(Q_f) = {:.6e}",
        smallest_eigenvalue(&generated.instance.objective_hessian)
    );
    println!("x0_feasible = {}", generated.x0_feasible);
    println!("instance = {}", instance_path.display());
    println!("sidecar = {}", sidecar_path.display());
    Ok(())
}
