use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use gcka::asymptotics::log2_grid;
use gcka::{Arrangement, Centering, Kernel, MedianConvention, Nonlinearity};

#[derive(Debug, Parser)]
#[command(name = "gcka", version, about = "Kernel similarity (HSIC, CKA) and Gaussian CKA bandwidth sweeps")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Worker threads (default: all cores). Output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// CKA and HSIC between two feature matrices.
    Cka(CkaArgs),
    /// Sweep Gaussian CKA over bandwidths and compare with linear CKA.
    Sweep(SweepArgs),
    /// Diameter, median distance and eccentricity of a representation pair.
    Geometry(GeometryArgs),
    /// Write a synthetic representation pair to files.
    Synth(SynthArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum KernelArg {
    Linear,
    Gaussian,
    Euclidean,
}

impl KernelArg {
    pub fn with_sigma(self, sigma: f64) -> Kernel {
        match self {
            KernelArg::Linear => Kernel::Linear,
            KernelArg::Gaussian => Kernel::gaussian(sigma),
            KernelArg::Euclidean => Kernel::Euclidean,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CenteringArg {
    Column,
    Row,
    Double,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ArrangementArg {
    /// Both Gaussian at the same bandwidth.
    Both,
    /// Y at `--ratio` times the bandwidth of X.
    Mixed,
    /// Y under the fixed `--fixed-kernel`.
    Fixed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NonlinearityArg {
    None,
    Relu,
}

#[derive(Debug, Clone, Args)]
pub struct CenteringFlags {
    #[arg(long, value_enum, default_value_t = CenteringArg::Column)]
    pub centering: CenteringArg,

    /// Same as `--centering none`.
    #[arg(long, conflicts_with = "centering")]
    pub no_centering: bool,
}

impl CenteringFlags {
    pub fn resolve(&self) -> Centering {
        if self.no_centering {
            return Centering::None;
        }
        match self.centering {
            CenteringArg::Column => Centering::Column,
            CenteringArg::Row => Centering::Row,
            CenteringArg::Double => Centering::Double,
            CenteringArg::None => Centering::None,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MatrixFlags {
    /// Skip the first line of each input file.
    #[arg(long)]
    pub header: bool,

    /// Count the zero diagonal when taking the median pairwise distance.
    #[arg(long)]
    pub median_includes_diagonal: bool,
}

impl MatrixFlags {
    pub fn median(&self) -> MedianConvention {
        if self.median_includes_diagonal {
            MedianConvention::IncludeDiagonal
        } else {
            MedianConvention::OffDiagonal
        }
    }
}

/// Synthetic pair parameters. Flags override `--synth-config`.
#[derive(Debug, Clone, Args)]
pub struct SynthFlags {
    /// key = value file (optionally under a `[synth]` section).
    #[arg(long, value_name = "PATH")]
    pub synth_config: Option<PathBuf>,

    /// Base seed; synthetic run r uses seed + r.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Number of examples.
    #[arg(long)]
    pub n: Option<usize>,

    #[arg(long)]
    pub dx: Option<usize>,

    #[arg(long)]
    pub dy: Option<usize>,

    /// Weight of the linear map of X in Y, in [0, 1].
    #[arg(long)]
    pub coupling: Option<f64>,

    /// Number of planted outlier rows.
    #[arg(long)]
    pub outliers: Option<usize>,

    /// Outlier shift in units of the RMS distance to the centroid.
    #[arg(long)]
    pub outlier_offset: Option<f64>,

    #[arg(long, value_enum)]
    pub nonlinearity: Option<NonlinearityArg>,
}

#[derive(Debug, Clone, Args)]
pub struct CkaArgs {
    pub x: PathBuf,
    pub y: PathBuf,

    #[arg(long, value_enum, default_value_t = KernelArg::Linear)]
    pub kernel: KernelArg,

    /// Gaussian bandwidth in units of the median pairwise distance.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,

    /// Kernel for Y (default: same as X).
    #[arg(long, value_enum)]
    pub kernel_y: Option<KernelArg>,

    /// Gaussian bandwidth for Y (default: `--sigma`).
    #[arg(long)]
    pub sigma_y: Option<f64>,

    #[command(flatten)]
    pub centering: CenteringFlags,

    #[command(flatten)]
    pub matrix: MatrixFlags,

    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Feature matrix files; without them a synthetic pair is generated.
    #[arg(requires = "y")]
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,

    #[command(flatten)]
    pub synth: SynthFlags,

    /// Independent synthetic runs.
    #[arg(long, default_value_t = 1)]
    pub runs: usize,

    /// log2 bandwidth grid as lo:hi:step.
    #[arg(long, default_value = "-4:8:1", value_parser = parse_grid)]
    pub grid: Grid,

    #[command(flatten)]
    pub centering: CenteringFlags,

    /// Onset threshold on the distance to the 1/sigma^2 asymptote (log2 units).
    #[arg(long, default_value_t = gcka::asymptotics::DEFAULT_THRESHOLD)]
    pub threshold: f64,

    /// Finite points used for the tail slope fit.
    #[arg(long, default_value_t = gcka::asymptotics::DEFAULT_TAIL_POINTS)]
    pub tail_points: usize,

    #[arg(long, value_enum, default_value_t = ArrangementArg::Both)]
    pub arrangement: ArrangementArg,

    /// Bandwidth ratio for `--arrangement mixed`.
    #[arg(long, default_value_t = 4.0)]
    pub ratio: f64,

    /// Y kernel for `--arrangement fixed`.
    #[arg(long, value_enum, default_value_t = KernelArg::Linear)]
    pub fixed_kernel: KernelArg,

    /// Y bandwidth when the fixed kernel is Gaussian.
    #[arg(long, default_value_t = 1.0)]
    pub fixed_sigma: f64,

    #[command(flatten)]
    pub matrix: MatrixFlags,

    #[arg(long, conflicts_with = "csv")]
    pub json: bool,

    /// Print the sweep table as CSV.
    #[arg(long)]
    pub csv: bool,

    /// Record the wall-clock time in the report metadata.
    #[arg(long)]
    pub timestamp: bool,
}

impl SweepArgs {
    pub fn arrangement(&self) -> Arrangement {
        match self.arrangement {
            ArrangementArg::Both => Arrangement::BothGaussian,
            ArrangementArg::Mixed => Arrangement::MixedBandwidth { ratio: self.ratio },
            ArrangementArg::Fixed => Arrangement::GaussianVsFixed { kernel: self.fixed_kernel.with_sigma(self.fixed_sigma) },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct GeometryArgs {
    #[arg(requires = "y")]
    pub x: Option<PathBuf>,
    pub y: Option<PathBuf>,

    #[command(flatten)]
    pub synth: SynthFlags,

    #[command(flatten)]
    pub matrix: MatrixFlags,

    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Args)]
pub struct SynthArgs {
    /// Output file for X.
    pub out_x: PathBuf,
    /// Output file for Y.
    pub out_y: PathBuf,

    #[command(flatten)]
    pub synth: SynthFlags,

    /// Also write the resolved key = value spec to this file.
    #[arg(long, value_name = "PATH")]
    pub write_config: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Grid(pub Vec<f64>);

fn parse_grid(s: &str) -> Result<Grid, String> {
    let parts: Vec<&str> = s.split(':').collect();
    let [lo, hi, step] = parts[..] else {
        return Err(format!("expected lo:hi:step, got {s:?}"));
    };
    let num = |t: &str| t.trim().parse::<f64>().map_err(|_| format!("not a number: {t:?}"));
    log2_grid(num(lo)?, num(hi)?, num(step)?).map(Grid).map_err(|e| e.to_string())
}

impl From<NonlinearityArg> for Nonlinearity {
    fn from(v: NonlinearityArg) -> Self {
        match v {
            NonlinearityArg::None => Nonlinearity::None,
            NonlinearityArg::Relu => Nonlinearity::Relu,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("-4:8:1").unwrap().0.len(), 13);
        assert_eq!(parse_grid("0:1:0.5").unwrap().0, vec![0.0, 0.5, 1.0]);
        assert!(parse_grid("0:1").is_err());
        assert!(parse_grid("0:x:1").is_err());
        assert!(parse_grid("0:1:0").is_err());
    }

    #[test]
    fn no_centering_alias() {
        let cli = Cli::try_parse_from(["gcka", "cka", "a", "b", "--no-centering"]).unwrap();
        let Command::Cka(args) = cli.command else { panic!() };
        assert_eq!(args.centering.resolve(), Centering::None);
        assert!(Cli::try_parse_from(["gcka", "cka", "a", "b", "--no-centering", "--centering", "row"]).is_err());
    }
}
