use std::io::Write;
use std::path::Path;

use lppl::report::{write_atomic, InputDigest};
use lppl::series::{write_csv, DAYS_PER_YEAR};
use lppl::{
    emit_plot_bundle, fit as fit_window, generate, parse_csv, run_scan, CsvColumns, FitConfig,
    FitWindow, LpplParams, PriceSeries, Report, ScanConfig, SynthSpec, TimeAxis,
};

use crate::config::FileConfig;
use crate::{CliError, FitArgs, InputArgs, ScanArgs, SynthArgs};

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<(), CliError> {
    match out {
        Some(path) => write_atomic(path, bytes)
            .map_err(|e| CliError::Input(format!("{}: {e}", path.display()))),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(bytes)
                .and_then(|_| stdout.flush())
                .map_err(|e| CliError::Input(format!("stdout: {e}")))
        }
    }
}

/// Flag, then config file, then default.
fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

struct Loaded {
    file: FileConfig,
    series: PriceSeries,
    start: chrono::NaiveDate,
    end: chrono::NaiveDate,
}

fn load(args: &InputArgs) -> Result<Loaded, CliError> {
    if let (Some(s), Some(e)) = (args.start, args.end) {
        if e <= s {
            return Err(CliError::Usage(format!(
                "--end {e} must be after --start {s}"
            )));
        }
    }
    let file = FileConfig::load(args.config.as_deref())?;
    let columns = CsvColumns {
        date: args
            .date_col
            .clone()
            .or_else(|| file.date_col.clone())
            .unwrap_or_else(|| CsvColumns::default().date),
        price: args
            .price_col
            .clone()
            .or_else(|| file.price_col.clone())
            .unwrap_or_else(|| CsvColumns::default().price),
    };
    let reader = std::fs::File::open(&args.input)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    let series = parse_csv(std::io::BufReader::new(reader), &columns)
        .map_err(|e| CliError::Input(format!("{}: {e}", args.input.display())))?;
    let start = args.start.unwrap_or(series.first_date());
    let end = args.end.unwrap_or(series.last_date());
    if end <= start {
        return Err(CliError::Usage(format!(
            "end {end} must be after start {start}"
        )));
    }
    Ok(Loaded {
        file,
        series,
        start,
        end,
    })
}

fn digest(args: &InputArgs, series: &PriceSeries) -> InputDigest {
    let name = args.input.file_name().map_or_else(
        || args.input.display().to_string(),
        |n| n.to_string_lossy().into_owned(),
    );
    InputDigest::new(name, series)
}

pub fn fit(args: &FitArgs) -> Result<(), CliError> {
    let Loaded {
        file,
        series,
        start,
        end,
    } = load(&args.input)?;
    let cfg: FitConfig = file.fit_config();
    cfg.validate()?;
    let window = FitWindow::from_series(
        &series,
        series.time_axis(),
        start,
        end,
        cfg.min_observations,
    )?;
    let result = fit_window(&window, &cfg)?;
    let span = series.slice(start, end, 2)?;
    let report = Report::for_fit(digest(&args.input, &series), result, cfg, &span);
    emit(args.input.out.as_deref(), report.to_json()?.as_bytes())
}

pub fn scan(args: &ScanArgs) -> Result<(), CliError> {
    let Loaded {
        file,
        series,
        start,
        end,
    } = load(&args.input)?;
    let mut cfg = ScanConfig::new(start, end);
    cfg.fit = file.fit_config();
    cfg.step_days = pick(args.step_days, file.step_days, cfg.step_days);
    cfg.n_windows = pick(args.windows, file.windows, cfg.n_windows);
    cfg.quantile_lo = pick(args.q_lo, file.q_lo, cfg.quantile_lo);
    cfg.quantile_hi = pick(args.q_hi, file.q_hi, cfg.quantile_hi);
    cfg.extrapolation_days = pick(
        args.extrapolate_days,
        file.extrapolate_days,
        cfg.extrapolation_days,
    );
    cfg.samples_per_day = file.samples_per_day.unwrap_or(cfg.samples_per_day);
    cfg.validate()?;

    let result = run_scan(&series, &cfg)?;
    let span = series.slice(start, end, 2)?;
    if let Some(dir) = &args.plot_data {
        emit_plot_bundle(
            &result,
            &span,
            dir,
            cfg.extrapolation_days,
            cfg.samples_per_day,
        )
        .map_err(|e| CliError::Input(format!("{}: {e}", dir.display())))?;
    }
    for f in &result.failures {
        eprintln!(
            "warning: window {} ({}..={}) excluded: {}",
            f.index, f.start_date, f.end_date, f.reason
        );
    }
    let report = Report::for_scan(digest(&args.input, &series), &result, &cfg, &span);
    emit(args.input.out.as_deref(), report.to_json()?.as_bytes())
}

pub fn synth(args: &SynthArgs) -> Result<(), CliError> {
    if args.end <= args.start {
        return Err(CliError::Usage(format!(
            "--end {} must be after --start {}",
            args.end, args.start
        )));
    }
    if args.tc_days_after_end <= 0.0 {
        return Err(CliError::Usage(format!(
            "--tc-days-after-end {} puts the critical time inside the sample span",
            args.tc_days_after_end
        )));
    }
    let axis = TimeAxis::new(args.start);
    let spec = SynthSpec {
        truth: LpplParams {
            tc: axis.to_time(args.end) + args.tc_days_after_end / DAYS_PER_YEAR,
            m: args.m,
            omega: args.omega,
            phi: args.phi,
            a: args.a,
            b: args.b,
            c: args.c,
        },
        start_date: args.start,
        end_date: args.end,
        weekdays_only: args.weekdays,
        noise_sigma: args.sigma,
        seed: args.seed,
    };
    let (series, truth) = generate(&spec).map_err(|e| match e {
        lppl::Error::InvalidParams(msg) => CliError::Usage(msg),
        other => other.into(),
    })?;
    let tc_date = series.time_axis().from_time(truth.tc)?;
    eprintln!(
        "truth: tc_date={tc_date} tc={} m={} omega={} phi={} a={} b={} c={} sigma={} seed={} epoch={}",
        truth.tc,
        truth.m,
        truth.omega,
        truth.phi,
        truth.a,
        truth.b,
        truth.c,
        args.sigma,
        args.seed,
        series.first_date()
    );
    let columns = CsvColumns {
        date: args.date_col.clone(),
        price: args.price_col.clone(),
    };
    let mut buf = Vec::new();
    write_csv(&series, &columns, &mut buf)?;
    emit(args.out.as_deref(), &buf)
}
