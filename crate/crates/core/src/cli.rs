//! Command-line front end: `run`, `validate` and `sheet`.
//!
//! Exit codes: 0 success, 1 invalid arguments or configuration, 2 I/O failure,
//! 3 an operation failed at run time.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::config::{canonical_config, parse_config_document, ParsedConfig};
use crate::dataio::{self, scan_dataset, DatasetIndex, DirSink, OutputFormat};
use crate::image::Image;
use crate::pipeline::{write_trace, Pipeline, PipelineError, TraceRecord};
use crate::rng::{derive_sample_rng, mix64};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 1;
pub const EXIT_IO: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

/// Separator width between contact-sheet tiles.
pub const SHEET_GAP: u32 = 2;

#[derive(Debug, Parser)]
#[command(name = "pipeaug", version, about = "Stochastic pipeline image augmentation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Sample,
    Process,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Png,
    Ppm,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate augmented images from a dataset folder.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Images to generate in sample mode (per class with --per-class);
        /// defaults to the number of source images.
        #[arg(long)]
        count: Option<u64>,
        #[arg(long, value_enum, default_value = "sample")]
        mode: Mode,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Write a JSON-lines trace of every sample.
        #[arg(long)]
        trace: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "png")]
        format: FormatArg,
        #[arg(long)]
        overwrite: bool,
        /// Run the pipeline separately for each first-level subdirectory.
        #[arg(long)]
        per_class: bool,
    },
    /// Parse a config and print its canonical form.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Tile augmented variants of one image into a PNG contact sheet.
    Sheet {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        image: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value_t = 1)]
        rows: u32,
        #[arg(long, default_value_t = 1)]
        cols: u32,
        #[arg(long)]
        seed: Option<u64>,
        /// Use the unmodified input as the first tile.
        #[arg(long)]
        include_original: bool,
    },
}

/// A failure with its exit code; the message goes to standard error.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn new(code: i32, message: impl Into<String>) -> Self {
        CliError {
            code,
            message: message.into(),
        }
    }
}

impl From<dataio::DataError> for CliError {
    fn from(e: dataio::DataError) -> Self {
        CliError::new(EXIT_IO, e.to_string())
    }
}

impl From<PipelineError> for CliError {
    fn from(e: PipelineError) -> Self {
        let code = match e {
            PipelineError::Validation(_) => EXIT_VALIDATION,
            PipelineError::Op { .. } | PipelineError::SampleOp { .. } => EXIT_RUNTIME,
            PipelineError::EmptyDataset
            | PipelineError::Load { .. }
            | PipelineError::Sink { .. }
            | PipelineError::Pool(_) => EXIT_IO,
        };
        CliError::new(code, e.to_string())
    }
}

fn read_config(path: &Path) -> Result<ParsedConfig, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    parse_config_document(&text).map_err(|e| CliError::new(EXIT_VALIDATION, format!("{}: {e}", path.display())))
}

/// Seed used by class `position` in per-class runs.
pub fn class_seed(master_seed: u64, position: u64) -> u64 {
    mix64(master_seed ^ mix64(position.wrapping_add(0x5bd1_e995)))
}

/// Parses `args` (including the program name), runs the command and returns
/// the exit code. Normal output goes to `out`, diagnostics to `err`.
pub fn run_cli<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_VALIDATION,
            };
            let rendered = e.render();
            let _ = if code == EXIT_OK {
                write!(out, "{rendered}")
            } else {
                write!(err, "{rendered}")
            };
            return code;
        }
    };
    let result = match cli.command {
        Command::Run {
            config,
            input,
            output,
            count,
            mode,
            seed,
            jobs,
            trace,
            format,
            overwrite,
            per_class,
        } => cmd_run(
            &RunArgs {
                config,
                input,
                output,
                count,
                process: mode == Mode::Process,
                seed,
                jobs,
                trace,
                format: match format {
                    FormatArg::Png => OutputFormat::Png,
                    FormatArg::Ppm => OutputFormat::Ppm,
                },
                overwrite,
                per_class,
            },
            out,
        ),
        Command::Validate { config } => cmd_validate(&config, out),
        Command::Sheet {
            config,
            image,
            output,
            rows,
            cols,
            seed,
            include_original,
        } => cmd_sheet(&config, &image, &output, rows, cols, seed, include_original, out),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunArgs {
    pub config: PathBuf,
    pub input: PathBuf,
    pub output: PathBuf,
    pub count: Option<u64>,
    pub process: bool,
    pub seed: Option<u64>,
    pub jobs: usize,
    pub trace: Option<PathBuf>,
    pub format: OutputFormat,
    pub overwrite: bool,
    pub per_class: bool,
}

fn cmd_run(args: &RunArgs, out: &mut dyn Write) -> Result<(), CliError> {
    let parsed = read_config(&args.config)?;
    let seed = args.seed.or(parsed.seed).unwrap_or(0);
    let pipeline = parsed.pipeline.with_seed(seed);
    if args.jobs == 0 {
        return Err(CliError::new(EXIT_VALIDATION, "--jobs must be at least 1"));
    }
    let index = scan_dataset(&args.input)?;
    let sink = DirSink::new(&args.output, args.format, args.overwrite);
    fs::create_dir_all(&args.output).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", args.output.display())))?;

    let groups: Vec<(u64, DatasetIndex)> = if args.per_class {
        index
            .labels()
            .into_iter()
            .enumerate()
            .map(|(pos, label)| (class_seed(seed, pos as u64), index.subset(&label)))
            .collect()
    } else {
        vec![(seed, index.clone())]
    };

    let mut records: Vec<TraceRecord> = Vec::new();
    for (group_seed, group) in &groups {
        let data = group.load_all()?;
        let p = pipeline.clone().with_seed(*group_seed);
        let trace = if args.process {
            p.process(&data, &sink, args.jobs)?
        } else {
            let count = args.count.unwrap_or(group.len() as u64);
            p.sample(&data, count, &sink, args.jobs)?
        };
        records.extend(trace);
    }

    if let Some(path) = &args.trace {
        let file = fs::File::create(path).map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", path.display())))?;
        write_trace(&records, std::io::BufWriter::new(file))
            .map_err(|e| CliError::new(EXIT_IO, format!("{}: {e}", path.display())))?;
    }

    let _ = writeln!(out, "images read: {}", index.len());
    if args.per_class {
        let _ = writeln!(out, "classes: {}", groups.len());
    }
    let _ = writeln!(out, "images generated: {}", records.len());
    for (i, spec) in pipeline.ops().iter().enumerate() {
        let applied = records.iter().filter(|r| r.ops[i].applied).count();
        let _ = writeln!(out, "  #{i} {}: applied {applied}/{}", spec.name(), records.len());
    }
    Ok(())
}

fn cmd_validate(config: &Path, out: &mut dyn Write) -> Result<(), CliError> {
    let parsed = read_config(config)?;
    let _ = writeln!(out, "{}", canonical_config(&parsed.pipeline, parsed.seed));
    Ok(())
}

/// Tiles equally sized images row-major with `gap`-pixel white separators.
pub fn tile_montage(tiles: &[Image], rows: u32, cols: u32, gap: u32) -> Result<Image, String> {
    let first = tiles.first().ok_or("no tiles")?;
    let (tw, th) = first.dimensions();
    if let Some(bad) = tiles
        .iter()
        .find(|t| t.dimensions() != (tw, th) || t.format() != first.format())
    {
        return Err(format!(
            "variants differ in size or format ({}x{} {} vs {}x{} {}); add a resize operation to the pipeline",
            tw,
            th,
            first.format(),
            bad.width(),
            bad.height(),
            bad.format()
        ));
    }
    let width = tw * cols + gap * (cols - 1);
    let height = th * rows + gap * (rows - 1);
    let white = vec![255u8; first.channels()];
    let mut sheet = Image::filled(width, height, first.format(), &white);
    for (i, tile) in tiles.iter().enumerate().take((rows * cols) as usize) {
        let (r, c) = (i as u32 / cols, i as u32 % cols);
        let (ox, oy) = (c * (tw + gap), r * (th + gap));
        for y in 0..th {
            for x in 0..tw {
                sheet.pixel_mut(ox + x, oy + y).copy_from_slice(tile.pixel(x, y));
            }
        }
    }
    Ok(sheet)
}

/// Tile `i` is sample `i` of `img`; with `include_original` tile 0 is `img`
/// itself, so the other tiles keep their indices either way.
pub fn sheet_variants(
    pipeline: &Pipeline,
    img: &Image,
    rows: u32,
    cols: u32,
    include_original: bool,
) -> Result<Vec<Image>, PipelineError> {
    let total = rows as u64 * cols as u64;
    (0..total)
        .map(|sample| {
            if include_original && sample == 0 {
                return Ok(img.clone());
            }
            let mut rng = derive_sample_rng(pipeline.master_seed(), sample);
            let (variant, _) = pipeline.run_sample(img, &mut rng).map_err(|e| e.for_sample(sample))?;
            Ok(variant)
        })
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn cmd_sheet(
    config: &Path,
    image: &Path,
    output: &Path,
    rows: u32,
    cols: u32,
    seed: Option<u64>,
    include_original: bool,
    out: &mut dyn Write,
) -> Result<(), CliError> {
    if rows == 0 || cols == 0 {
        return Err(CliError::new(EXIT_VALIDATION, "--rows and --cols must be at least 1"));
    }
    let parsed = read_config(config)?;
    let pipeline = parsed.pipeline.with_seed(seed.or(parsed.seed).unwrap_or(0));
    let img = dataio::load_image(image)?;
    let tiles = sheet_variants(&pipeline, &img, rows, cols, include_original)?;
    let sheet = tile_montage(&tiles, rows, cols, SHEET_GAP).map_err(|m| CliError::new(EXIT_RUNTIME, m))?;
    dataio::save_image(&sheet, output, OutputFormat::Png)?;
    let _ = writeln!(
        out,
        "wrote {}x{} sheet ({} tiles) to {}",
        sheet.width(),
        sheet.height(),
        tiles.len(),
        output.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::image::PixelFormat;

    #[test]
    fn montage_arithmetic() {
        let tiles: Vec<Image> = (0..6)
            .map(|i| Image::filled(28, 28, PixelFormat::Gray8, &[i * 10]))
            .collect();
        let sheet = tile_montage(&tiles, 2, 3, SHEET_GAP).unwrap();
        assert_eq!(sheet.dimensions(), (88, 58));
        assert_eq!(sheet.pixel(28, 0), &[255]);
        assert_eq!(sheet.pixel(30, 0), &[10]);
        assert_eq!(sheet.pixel(0, 30), &[30]);
        assert_eq!(sheet.pixel(87, 57), &[50]);
    }

    #[test]
    fn single_tile_sheet_is_the_input() {
        let img = Image::from_fn(5, 4, PixelFormat::Rgb8, |x, y| [x as u8, y as u8, 7, 0]);
        let tiles = sheet_variants(&Pipeline::new(0), &img, 1, 1, false).unwrap();
        assert_eq!(tile_montage(&tiles, 1, 1, SHEET_GAP).unwrap(), img);
    }

    #[test]
    fn original_tile_keeps_variant_indices() {
        let img = Image::from_fn(6, 6, PixelFormat::Gray8, |x, y| [(x * 40 + y) as u8, 0, 0, 0]);
        let mut p = Pipeline::new(3);
        p.add_operation(crate::OpSpec::new(
            1.0,
            crate::OpKind::Elastic {
                grid_width: 3,
                grid_height: 3,
                magnitude: 2,
            },
        ))
        .unwrap();
        let plain = sheet_variants(&p, &img, 1, 3, false).unwrap();
        let with = sheet_variants(&p, &img, 1, 3, true).unwrap();
        assert_eq!(with[0], img);
        assert_eq!(with[1..], plain[1..]);
    }

    #[test]
    fn mixed_sizes_are_rejected() {
        let tiles = vec![
            Image::filled(4, 4, PixelFormat::Gray8, &[0]),
            Image::filled(3, 4, PixelFormat::Gray8, &[0]),
        ];
        let err = tile_montage(&tiles, 1, 2, SHEET_GAP).unwrap_err();
        assert!(err.contains("resize"));
    }

    #[test]
    fn class_seeds_differ() {
        assert_ne!(class_seed(42, 0), class_seed(42, 1));
        assert_eq!(class_seed(42, 3), class_seed(42, 3));
    }
}
