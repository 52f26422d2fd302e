//! The `ffp` command line.

use std::ffi::OsString;
use std::path::PathBuf;
use std::str::FromStr;
use std::time::Duration;

use clap::{Args, Parser, Subcommand, ValueEnum};
use ffp_core::edge::{GvfParams, ImageBuffer};
use ffp_core::grid::Pixel;
use ffp_core::metric::{anisotropy_ratio, directional_profile, CostParams, Mu};
use ffp_core::pipeline::{
    build_fb_metric, build_tube_metric, edge_data, segment_fb, segment_tube, tubularity_from_gray, ColorSpace,
    FbOptions, FeatureSource, SegmentationResult, Threshold, TubeOptions,
};
use serde::Serialize;

use crate::io::{self, IoError};
use crate::server::{self, ServerConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Data(_) => EXIT_DATA,
            CliError::Numerical(_) => EXIT_NUMERICAL,
        }
    }
}

impl From<ffp_core::Error> for CliError {
    fn from(e: ffp_core::Error) -> Self {
        use ffp_core::Error as E;
        match e {
            E::DegenerateTensor { .. } | E::NotPositiveDefinite { .. } | E::PositivityViolated { .. } => {
                CliError::Numerical(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<IoError> for CliError {
    fn from(e: IoError) -> Self {
        match e {
            IoError::Core(c) => c.into(),
            other => CliError::Data(other.to_string()),
        }
    }
}

/// `auto` or a non-negative number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum AutoOr {
    Auto,
    Value(f64),
}

impl FromStr for AutoOr {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s.eq_ignore_ascii_case("auto") {
            return Ok(AutoOr::Auto);
        }
        match s.parse::<f64>() {
            Ok(v) if v >= 0.0 && v.is_finite() => Ok(AutoOr::Value(v)),
            _ => Err(format!("expected `auto` or a number >= 0, got `{s}`")),
        }
    }
}

fn parse_point(s: &str) -> Result<(i64, i64), String> {
    let (x, y) = s.split_once(',').ok_or_else(|| format!("expected X,Y, got `{s}`"))?;
    let p = |v: &str| v.trim().parse::<i64>().map_err(|_| format!("expected integer coordinates, got `{s}`"));
    Ok((p(x)?, p(y)?))
}

#[derive(Debug, Parser)]
#[command(name = "ffp", version, about = "Randers geodesic fronts propagation for image segmentation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Foreground/background segmentation by geodesic Voronoi regions.
    SegmentFb(FbArgs),
    /// Tubular structure segmentation by a truncated front.
    SegmentTube(TubeArgs),
    /// Directional costs and control set of the metric at one pixel.
    MetricInfo(MetricInfoArgs),
    /// Dump the gradient vector flow of the edge saliency.
    Gvf(GvfArgs),
    /// Run the HTTP session service.
    Serve(ServeArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CostArgs {
    #[arg(long, default_value_t = 2.0)]
    pub alpha_f: f64,
    #[arg(long, default_value_t = 3.0)]
    pub alpha_b: f64,
    #[arg(long, default_value_t = 10.0)]
    pub beta_s: f64,
    #[arg(long, default_value_t = 10.0)]
    pub beta_d: f64,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
}

impl CostArgs {
    fn params(&self, mu: Mu) -> CostParams {
        CostParams {
            alpha_f: self.alpha_f,
            alpha_b: self.alpha_b,
            beta_s: self.beta_s,
            beta_d: self.beta_d,
            sigma: self.sigma,
            epsilon: self.epsilon,
            mu,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ColorSpaceArg {
    Rgb,
    Lab,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Fb,
    Tube,
}

#[derive(Debug, Args)]
pub struct OutputArgs {
    /// Indexed-color PNG of the labels.
    #[arg(long)]
    pub out_label: PathBuf,
    /// Distance map in FFD1 format.
    #[arg(long)]
    pub out_dist: PathBuf,
    /// Contour polylines as JSON.
    #[arg(long)]
    pub out_contours: PathBuf,
}

#[derive(Debug, Args)]
pub struct FbArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub seeds: PathBuf,
    #[command(flatten)]
    pub cost: CostArgs,
    #[arg(long, value_enum, default_value = "rgb")]
    pub colorspace: ColorSpaceArg,
    /// Gray image used as a scalar feature map instead of the pixel colors.
    #[arg(long)]
    pub features: Option<PathBuf>,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct TubeArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub seeds: PathBuf,
    #[command(flatten)]
    pub cost: CostArgs,
    /// Number of pixels to accept before stopping.
    #[arg(long)]
    pub n_th: usize,
    /// Extra weight along the edge direction; `auto` uses the squared maximum of ψ_f.
    #[arg(long, default_value = "auto")]
    pub mu: AutoOr,
    /// Distance level of the contour; `auto` uses the largest accepted distance.
    #[arg(long = "t-h", default_value = "auto")]
    pub t_h: AutoOr,
    #[command(flatten)]
    pub out: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MetricInfoArgs {
    #[arg(long)]
    pub image: PathBuf,
    /// Pixel as X,Y (column, row).
    #[arg(long, value_parser = parse_point)]
    pub point: (i64, i64),
    #[arg(long, default_value_t = 72)]
    pub samples: usize,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value = "fb")]
    pub mode: ModeArg,
    #[arg(long, default_value = "auto")]
    pub mu: AutoOr,
    #[command(flatten)]
    pub cost: CostArgs,
}

#[derive(Debug, Args)]
pub struct GvfArgs {
    #[arg(long)]
    pub image: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    #[arg(long, default_value_t = 10_000)]
    pub max_iters: usize,
    #[arg(long, default_value_t = 1e-4)]
    pub tol: f64,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, env = "FFP_PORT", default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
    /// Directory of static assets served at `/`.
    #[arg(long = "static")]
    pub static_dir: Option<PathBuf>,
    /// Seconds of inactivity after which a session is dropped.
    #[arg(long, default_value_t = 3600)]
    pub idle_timeout: u64,
}

fn mu_of(a: AutoOr) -> Mu {
    match a {
        AutoOr::Auto => Mu::Auto,
        AutoOr::Value(v) => Mu::Value(v),
    }
}

fn write_outputs(result: &SegmentationResult, out: &OutputArgs) -> Result<(), CliError> {
    let grid = result.label_map.grid();
    io::write_file(&out.out_label, &io::encode_label_png(&result.label_map)?)?;
    io::write_distance_map(&result.distance_map, &out.out_dist)?;
    io::write_file(&out.out_contours, &io::to_json_bytes(&io::contours_json(grid, &result.contours)))?;
    Ok(())
}

fn report(result: &SegmentationResult) {
    for w in &result.stats.warnings {
        eprintln!("warning: {w}");
    }
    log::info!(
        "accepted {} of {} pixels in {:?}, kappa {:.3}",
        result.stats.accepted_count,
        result.stats.total,
        result.stats.runtime,
        result.stats.kappa
    );
}

fn cmd_segment_fb(a: &FbArgs) -> Result<(), CliError> {
    let img = io::load_image(&a.image)?;
    let seeds = io::parse_seeds(&io::read_file(&a.seeds)?, img.grid())?;
    let features = match &a.features {
        None => FeatureSource::Image,
        Some(p) => {
            let f = io::load_image(p)?;
            if f.grid() != img.grid() {
                return Err(CliError::Data(format!(
                    "feature map is {}x{}, image is {}x{}",
                    f.grid().width(),
                    f.grid().height(),
                    img.grid().width(),
                    img.grid().height()
                )));
            }
            FeatureSource::Scalar(f.to_gray())
        }
    };
    let colorspace = match a.colorspace {
        ColorSpaceArg::Rgb => ColorSpace::Rgb,
        ColorSpaceArg::Lab => ColorSpace::Lab,
    };
    let options = FbOptions { params: a.cost.params(Mu::Auto), colorspace, features, ..FbOptions::default() };
    let result = segment_fb(&img, &seeds, &options)?;
    report(&result);
    write_outputs(&result, &a.out)
}

fn cmd_segment_tube(a: &TubeArgs) -> Result<(), CliError> {
    let img = io::load_image(&a.image)?;
    let seeds = io::parse_seeds(&io::read_file(&a.seeds)?, img.grid())?;
    let threshold = match a.t_h {
        AutoOr::Auto => Threshold::Auto,
        AutoOr::Value(v) => Threshold::Value(v),
    };
    let options = TubeOptions { params: a.cost.params(mu_of(a.mu)), n_th: a.n_th, threshold, gvf: GvfParams::default() };
    let result = segment_tube(&img, &seeds, &options)?;
    report(&result);
    write_outputs(&result, &a.out)
}

#[derive(Debug, Serialize)]
pub struct DirectionRecord {
    /// Counterclockwise rotation from the edge direction `g`, radians.
    pub angle: f64,
    pub cost: f64,
    /// Point of the control set boundary in this direction.
    pub ball_point: [f64; 2],
}

#[derive(Debug, Serialize)]
pub struct MetricInfo {
    pub point: [usize; 2],
    pub mode: &'static str,
    /// Anisotropy ratio of the whole metric field.
    pub kappa: f64,
    /// Largest over smallest sampled cost at the point.
    pub kappa_at_point: f64,
    pub psi_f: f64,
    pub psi_b: f64,
    pub potential: f64,
    pub g: [f64; 2],
    pub records: Vec<DirectionRecord>,
}

pub fn metric_info(img: &ImageBuffer, point: (i64, i64), samples: usize, mode: ModeArg, params: &CostParams) -> Result<MetricInfo, CliError> {
    let grid = img.grid();
    let p: Pixel = grid.checked_pixel(point.0, point.1)?;
    let edges = edge_data(img, params, &GvfParams::default())?;
    let metric = match mode {
        ModeArg::Fb => build_fb_metric(&edges, params)?,
        ModeArg::Tube => build_tube_metric(&edges, &tubularity_from_gray(img), params)?,
    };
    let profile = directional_profile(&metric, p, samples)?;
    let costs = profile.iter().map(|s| s.cost);
    let (lo, hi) = costs.fold((f64::INFINITY, 0.0f64), |(lo, hi), c| (lo.min(c), hi.max(c)));
    let construction = metric.construction().expect("built from cost functions");
    let g = edges.unit.field.at(p);
    Ok(MetricInfo {
        point: [p.x, p.y],
        mode: match mode {
            ModeArg::Fb => "fb",
            ModeArg::Tube => "tube",
        },
        kappa: anisotropy_ratio(&metric),
        kappa_at_point: hi / lo,
        psi_f: construction.costs.psi_f.at(p),
        psi_b: construction.costs.psi_b.at(p),
        potential: metric.potential(grid.index(p.x, p.y)),
        g: [g.x, g.y],
        records: profile
            .iter()
            .map(|s| DirectionRecord { angle: s.angle, cost: s.cost, ball_point: [s.ball_point.x, s.ball_point.y] })
            .collect(),
    })
}

fn cmd_metric_info(a: &MetricInfoArgs) -> Result<(), CliError> {
    let img = io::load_image(&a.image)?;
    let info = metric_info(&img, a.point, a.samples, a.mode, &a.cost.params(mu_of(a.mu)))?;
    io::write_file(&a.out, &io::to_json_bytes(&info))?;
    Ok(())
}

#[derive(Debug, Serialize)]
pub struct GvfDump {
    pub width: usize,
    pub height: usize,
    pub iterations: usize,
    pub converged: bool,
    pub last_update: f64,
    /// Row-major `[hx, hy]` per pixel.
    pub h: Vec<[f64; 2]>,
}

fn cmd_gvf(a: &GvfArgs) -> Result<(), CliError> {
    let img = io::load_image(&a.image)?;
    let rho = ffp_core::edge::edge_saliency(&img, a.sigma)?;
    let out = ffp_core::edge::gvf(&rho, &GvfParams { epsilon: a.epsilon, max_iters: a.max_iters, tol: a.tol })?;
    if !out.converged {
        eprintln!("warning: gradient vector flow stopped after {} iterations", out.iterations);
    }
    let dump = GvfDump {
        width: img.grid().width(),
        height: img.grid().height(),
        iterations: out.iterations,
        converged: out.converged,
        last_update: out.last_update,
        h: out.field.values().iter().map(|v| [v.x, v.y]).collect(),
    };
    io::write_file(&a.out, &io::to_json_bytes(&dump))?;
    Ok(())
}

fn cmd_serve(a: &ServeArgs) -> Result<(), CliError> {
    let config = ServerConfig {
        idle_timeout: Duration::from_secs(a.idle_timeout),
        static_dir: a.static_dir.clone(),
    };
    let addr = format!("{}:{}", a.host, a.port);
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Data(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Data(format!("cannot bind {addr}: {e}")))?;
        eprintln!("listening on http://{addr}");
        server::serve(listener, config).await.map_err(|e| CliError::Data(e.to_string()))
    })
}

pub fn execute(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::SegmentFb(a) => cmd_segment_fb(a),
        Command::SegmentTube(a) => cmd_segment_tube(a),
        Command::MetricInfo(a) => cmd_metric_info(a),
        Command::Gvf(a) => cmd_gvf(a),
        Command::Serve(a) => cmd_serve(a),
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn auto_or_parsing() {
        assert_eq!("auto".parse::<AutoOr>().unwrap(), AutoOr::Auto);
        assert_eq!("2.5".parse::<AutoOr>().unwrap(), AutoOr::Value(2.5));
        assert!("-1".parse::<AutoOr>().is_err());
        assert!("x".parse::<AutoOr>().is_err());
    }

    #[test]
    fn point_parsing() {
        assert_eq!(parse_point("3,4").unwrap(), (3, 4));
        assert!(parse_point("3;4").is_err());
    }

    #[test]
    fn core_errors_map_to_exit_codes() {
        let n: CliError = ffp_core::Error::PositivityViolated { x: 0, y: 0, ratio: 1.2 }.into();
        assert_eq!(n.exit_code(), EXIT_NUMERICAL);
        let d: CliError = ffp_core::Error::InvalidSeeds("x".into()).into();
        assert_eq!(d.exit_code(), EXIT_DATA);
    }
}
