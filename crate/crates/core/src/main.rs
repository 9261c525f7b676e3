use clap::Parser;

use dsmt::cli::{run, Overrides};

/// Fuse precise or set-valued belief assignments over a hyper-power
/// set with the DSm classic or hybrid combination rule.
#[derive(Parser)]
#[command(name = "dsmt", version)]
struct Args {
    /// JSON problem file
    path: std::path::PathBuf,
    /// Combination rule: classic | hybrid
    #[arg(long)]
    rule: Option<String>,
    /// Named model: free | shafer
    #[arg(long)]
    model: Option<String>,
    /// Force a proposition empty (repeatable); overrides the file's model
    #[arg(long, value_name = "PROP")]
    empty: Vec<String>,
    /// Compute and print the admissibility verdict and a witness
    #[arg(long)]
    check_admissibility: bool,
    /// Exit with code 1 when the fused result is inadmissible
    #[arg(long)]
    require_admissible: bool,
    /// Output format: table | machine
    #[arg(long)]
    format: Option<String>,
    /// Largest allowed frame size
    #[arg(long, value_name = "N")]
    max_frame: Option<usize>,
    /// Render propositions with ASCII operators (n, u)
    #[arg(long)]
    ascii: bool,
}

fn main() {
    let args = Args::parse();
    let input = match std::fs::read_to_string(&args.path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("dsmt: cannot read {}: {e}", args.path.display());
            std::process::exit(2);
        }
    };
    let overrides = Overrides {
        rule: args.rule,
        model: args.model,
        empty: args.empty,
        check_admissibility: args.check_admissibility,
        require_admissible: args.require_admissible,
        format: args.format,
        max_frame: args.max_frame,
        ascii: args.ascii,
    };
    match run(&input, &overrides) {
        Ok(report) => {
            print!("{}", report.rendered);
            std::process::exit(if report.admissibility_failed { 1 } else { 0 });
        }
        Err(e) => {
            eprintln!("dsmt: {e}");
            std::process::exit(2);
        }
    }
}
