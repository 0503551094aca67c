use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use cascade_pde::calibrate::{self, FitProblem};
use cascade_pde::cascade::{
    density_from_distances, hop_distances, load_graph, read_cascade_events, read_distance_records, read_edge_records,
    read_sources, write_distance_table, Cascade, DistanceMap,
};
use cascade_pde::config::{
    DensityConfig, Document, EigConfig, FitConfig, IngestConfig, SolveConfig, SpeedConfig, StefanConfig, SynthConfig,
};
use cascade_pde::field::DensityField;
use cascade_pde::solver::sample_at_distances;
use cascade_pde::spectral::{persistence_threshold, principal_eigenvalue};
use cascade_pde::stefan::{front_speed, solve_stefan, speed_ratio_sweep, vanishing_threshold, FrontTrajectory, Regime};
use cascade_pde::{Error, Result};
use serde::de::DeserializeOwned;

use crate::plot::{spread_indices, LinePlot, Series};

const PLOT_CURVES: usize = 6;

pub struct Context {
    doc: Document,
    out: PathBuf,
    seed: Option<u64>,
    plot: bool,
    summary: String,
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn open(path: &Path) -> Result<fs::File> {
    fs::File::open(path).map_err(|e| io_err(path, e))
}

fn name(path: &Path) -> String {
    path.display().to_string()
}

impl Context {
    pub fn prepare(config: Option<&Path>, sets: &[String], out: PathBuf, seed: Option<u64>, plot: bool) -> Result<Self> {
        let mut doc = Document::load(config)?;
        for s in sets {
            doc.set(s)?;
        }
        Ok(Self {
            doc,
            out,
            seed,
            plot,
            summary: String::new(),
        })
    }

    fn bind<T: DeserializeOwned>(&self) -> Result<T> {
        self.doc.bind()
    }

    /// Resolve the seed under `key`, record it in the document and return it.
    fn resolve_seed(&mut self, key: &str, configured: u64) -> Result<u64> {
        let seed = self.seed.unwrap_or(configured);
        let as_int = i64::try_from(seed).map_err(|_| Error::Validation(format!("seed {seed} exceeds {}", i64::MAX)))?;
        self.doc.set_value(key, toml::Value::Integer(as_int))?;
        Ok(seed)
    }

    /// Create the output directory and write the resolved configuration.
    fn echo(&self) -> Result<()> {
        fs::create_dir_all(&self.out).map_err(|e| io_err(&self.out, e))?;
        self.write("resolved-config.toml", self.doc.render()?.as_bytes())
    }

    fn write(&self, file: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(file);
        fs::write(&path, bytes).map_err(|e| io_err(&path, e))
    }

    fn write_with(&self, file: &str, f: impl FnOnce(&mut Vec<u8>) -> Result<()>) -> Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write(file, &buf)
    }

    fn plot(&self, file: &str, plot: LinePlot<'_>) -> Result<()> {
        if self.plot {
            self.write(file, plot.render().as_bytes())?;
        }
        Ok(())
    }

    fn line(&mut self, text: impl AsRef<str>) {
        self.summary.push_str(text.as_ref());
        self.summary.push('\n');
    }

    fn finish(self) -> Result<()> {
        self.write("summary.txt", self.summary.as_bytes())?;
        let mut stdout = std::io::stdout().lock();
        stdout
            .write_all(self.summary.as_bytes())
            .map_err(|e| io_err(Path::new("<stdout>"), e))
    }
}

fn density_series(field: &DensityField) -> Vec<Series> {
    spread_indices(field.times().len(), PLOT_CURVES)
        .into_iter()
        .map(|k| {
            let pts = field
                .distances()
                .iter()
                .enumerate()
                .map(|(i, &x)| (x as f64, field.value(i, k)))
                .collect();
            Series::new(format!("t = {}", field.times()[k]), pts)
        })
        .collect()
}

fn density_plot(field: &DensityField) -> LinePlot<'static> {
    LinePlot {
        title: "density by distance",
        x_label: "distance x",
        y_label: "I(x, t)",
        series: density_series(field),
    }
}

fn write_density(ctx: &mut Context, field: &DensityField) -> Result<()> {
    ctx.write_with("density.csv", |w| field.write_csv(w))?;
    ctx.line(format!("distances: {}", field.distances().len()));
    ctx.line(format!("times: {}", field.times().len()));
    ctx.line(format!("mode: {}", field.mode()));
    ctx.plot("density.svg", density_plot(field))
}

pub fn ingest(mut ctx: Context) -> Result<()> {
    let cfg: IngestConfig = ctx.bind()?;
    ctx.echo()?;
    let edges = read_edge_records(open(&cfg.graph)?, &name(&cfg.graph))?;
    let events = read_cascade_events(open(&cfg.cascade)?, &name(&cfg.cascade))?;
    let sources = read_sources(open(&cfg.sources)?, &name(&cfg.sources))?;
    let event_count = events.len();
    let cascade = Cascade::new(sources, events)?;
    let mut graph = load_graph(&edges)?;
    let needed = cascade.max_user().map_or(0, |u| u as usize + 1);
    if needed > graph.user_count() {
        graph = graph.with_user_count(needed)?;
    }
    let dist = hop_distances(&graph, cascade.sources())?;
    let report = density_from_distances(&dist, &cascade, &cfg.times, cfg.mode, cfg.population)?;
    ctx.write_with("distances.csv", |w| write_distance_table(&dist, w))?;
    ctx.write_with("groups.csv", |w| {
        let mut s = String::from("distance,group_size\n");
        for (x, n) in dist.group_sizes() {
            let _ = writeln!(s, "{x},{n}");
        }
        w.extend_from_slice(s.as_bytes());
        Ok(())
    })?;
    ctx.line(format!("users: {}", graph.user_count()));
    ctx.line(format!("edges: {}", graph.edges().len()));
    ctx.line(format!("sources: {}", cascade.sources().len()));
    ctx.line(format!("events: {event_count}"));
    ctx.line(format!("unreachable users: {}", report.unreachable_users));
    ctx.line(format!("skipped adopters: {}", report.skipped_adopters));
    write_density(&mut ctx, &report.field)?;
    ctx.finish()
}

pub fn density(mut ctx: Context) -> Result<()> {
    let cfg: DensityConfig = ctx.bind()?;
    ctx.echo()?;
    let records = read_distance_records(open(&cfg.distances)?, &name(&cfg.distances))?;
    let events = read_cascade_events(open(&cfg.cascade)?, &name(&cfg.cascade))?;
    let sources = read_sources(open(&cfg.sources)?, &name(&cfg.sources))?;
    let cascade = Cascade::new(sources, events)?;
    let user_count = records
        .iter()
        .map(|&(u, _)| u as usize + 1)
        .chain(cascade.max_user().map(|u| u as usize + 1))
        .max()
        .unwrap_or(0);
    let dist = DistanceMap::from_entries(user_count, records)?;
    let report = density_from_distances(&dist, &cascade, &cfg.times, cfg.mode, cfg.population)?;
    ctx.line(format!("skipped adopters: {}", report.skipped_adopters));
    write_density(&mut ctx, &report.field)?;
    ctx.finish()
}

pub fn solve(mut ctx: Context) -> Result<()> {
    let cfg: SolveConfig = ctx.bind()?;
    ctx.echo()?;
    let sol = cfg.solve()?;
    for (c, comp) in sol.component_names().iter().enumerate() {
        ctx.write_with(&format!("solution_{comp}.csv"), |w| sol.write_component_csv(c, w))?;
        let series = spread_indices(sol.times().len(), PLOT_CURVES)
            .into_iter()
            .map(|k| {
                let pts = sol.xs().iter().copied().zip(sol.snapshot(c, k).iter().copied()).collect();
                Series::new(format!("t = {}", sol.times()[k]), pts)
            })
            .collect();
        let title = format!("{comp}(x, t)");
        ctx.plot(
            &format!("solution_{comp}.svg"),
            LinePlot {
                title: &title,
                x_label: "x",
                y_label: comp,
                series,
            },
        )?;
    }
    ctx.line(format!("components: {}", sol.component_names().join(",")));
    ctx.line(format!("nodes: {}", sol.xs().len()));
    ctx.line(format!("snapshots: {}", sol.times().len()));
    ctx.line(format!("step halvings: {}", sol.halvings()));
    if let Some(w) = sol.bounds_warning() {
        log::warn!("{w}");
        ctx.line(format!("bounds warning: {w}"));
    }
    if let Some(s) = &cfg.sample {
        let sampled = sample_at_distances(&sol, s.component, &s.distances, &s.times, s.mode)?;
        if sampled.interpolated_in_x {
            log::warn!("some distances are not grid nodes and were interpolated");
            ctx.line("interpolated in x: true");
        }
        write_density(&mut ctx, &sampled.field)?;
    }
    ctx.finish()
}

pub fn fit(mut ctx: Context) -> Result<()> {
    let mut cfg: FitConfig = ctx.bind()?;
    cfg.options.seed = ctx.resolve_seed("options.seed", cfg.options.seed)?;
    ctx.echo()?;
    let observed = DensityField::read_csv(open(&cfg.observed)?, cfg.mode, &name(&cfg.observed))?;
    let grid = cfg.grid_for(&observed)?;
    let problem = FitProblem {
        shape: cfg.shape,
        observed,
        free: cfg.free_parameters(),
        fixed: cfg.fixed.clone(),
        loss: cfg.loss,
    };
    let result = calibrate::fit(&problem, &grid, &cfg.options)?;
    ctx.write_with("parameters.csv", |w| result.write_parameters_csv(w))?;
    ctx.write_with("accuracy.csv", |w| result.report.write_csv(w))?;
    ctx.write_with("prediction.csv", |w| result.prediction.write_csv(w))?;
    let mut series = Vec::new();
    let obs = &problem.observed;
    for k in spread_indices(obs.times().len(), PLOT_CURVES / 2) {
        let t = obs.times()[k];
        let xs = obs.distances().iter().map(|&x| x as f64);
        series.push(Series::new(
            format!("observed t = {t}"),
            xs.clone().enumerate().map(|(i, x)| (x, obs.value(i, k))).collect(),
        ));
        series.push(Series::new(
            format!("fit t = {t}"),
            xs.enumerate().map(|(i, x)| (x, result.prediction.value(i, k))).collect(),
        ));
    }
    ctx.plot(
        "fit.svg",
        LinePlot {
            title: "observed and fitted density",
            x_label: "distance x",
            y_label: "I(x, t)",
            series,
        },
    )?;
    ctx.summary.push_str(&result.render());
    ctx.finish()
}

pub fn speed(mut ctx: Context) -> Result<()> {
    let cfg: SpeedConfig = ctx.bind()?;
    ctx.echo()?;
    let res = cfg.compute()?;
    ctx.write_with("phi.csv", |w| {
        let mut s = String::from("lambda,phi\n");
        for (l, p) in &res.profile {
            let _ = writeln!(s, "{l},{p}");
        }
        w.extend_from_slice(s.as_bytes());
        Ok(())
    })?;
    ctx.plot(
        "phi.svg",
        LinePlot {
            title: "speed function",
            x_label: "lambda",
            y_label: "Phi(lambda)",
            series: vec![Series::new("Phi", res.profile.clone())],
        },
    )?;
    ctx.line(format!("c_star: {}", res.c_star));
    ctx.line(format!("lambda_star: {}", res.lambda_star));
    let method = match res.method {
        cascade_pde::spectral::SpeedMethod::ClosedForm => "closed-form",
        cascade_pde::spectral::SpeedMethod::Numeric => "numeric",
    };
    ctx.line(format!("method: {method}"));
    ctx.finish()
}

pub fn eig(mut ctx: Context) -> Result<()> {
    let cfg: EigConfig = ctx.bind()?;
    ctx.echo()?;
    let pair = principal_eigenvalue(&cfg.problem)?;
    ctx.write_with("eigenfunction.csv", |w| {
        let mut s = String::from("x,u\n");
        for (x, u) in pair.xs.iter().zip(&pair.u) {
            let _ = writeln!(s, "{x},{u}");
        }
        w.extend_from_slice(s.as_bytes());
        Ok(())
    })?;
    ctx.plot(
        "eigenfunction.svg",
        LinePlot {
            title: "principal eigenfunction",
            x_label: "x",
            y_label: "u",
            series: vec![Series::new(
                "u",
                pair.xs.iter().copied().zip(pair.u.iter().copied()).collect(),
            )],
        },
    )?;
    ctx.line(format!("mu1: {}", pair.mu));
    if let Some(r) = cfg.r_infinity {
        ctx.line(format!("lambda_star: {}", persistence_threshold(pair.mu, r)?));
    }
    ctx.finish()
}

fn regime_of(traj: &FrontTrajectory, cfg: &StefanConfig) -> Regime {
    let horizon = cfg.classifier.spread_factor * cfg.model.h0;
    for (h, s) in traj.h_values.iter().zip(&traj.sup_norm) {
        if *s < cfg.classifier.vanish_tol {
            return Regime::Vanishing;
        }
        if *h > horizon {
            return Regime::Spreading;
        }
    }
    Regime::Undetermined
}

pub fn stefan(mut ctx: Context) -> Result<()> {
    let cfg: StefanConfig = ctx.bind()?;
    ctx.echo()?;
    let u0 = cfg.initial.build()?;
    let traj = solve_stefan(&cfg.model, &u0, &cfg.grid)?;
    ctx.write_with("front.csv", |w| {
        let mut s = String::from("t,h,sup_norm\n");
        for ((t, h), m) in traj.times.iter().zip(&traj.h_values).zip(&traj.sup_norm) {
            let _ = writeln!(s, "{t},{h},{m}");
        }
        w.extend_from_slice(s.as_bytes());
        Ok(())
    })?;
    ctx.plot(
        "front.svg",
        LinePlot {
            title: "free boundary",
            x_label: "t",
            y_label: "h(t)",
            series: vec![Series::new(
                "h",
                traj.times.iter().copied().zip(traj.h_values.iter().copied()).collect(),
            )],
        },
    )?;
    let regime = match regime_of(&traj, &cfg) {
        Regime::Vanishing => "vanishing",
        Regime::Spreading => "spreading",
        Regime::Undetermined => "undetermined",
    };
    let fs = front_speed(&traj, cfg.tail_fraction)?;
    ctx.line(format!("regime: {regime}"));
    ctx.line(format!("final front: {}", traj.final_front()));
    ctx.line(format!("k0: {}", fs.k0));
    ctx.line(format!("k0 residual: {}", fs.residual));
    ctx.line(format!("step halvings: {}", traj.halvings));
    if !cfg.sweep.is_empty() {
        let rows = speed_ratio_sweep(&cfg.model, &u0, &cfg.grid, &cfg.sweep, cfg.tail_fraction)?;
        ctx.write_with("sweep.csv", |w| {
            let mut s = String::from("mu_k_over_d,k0,ratio,residual,front_monotone\n");
            for r in &rows {
                let _ = writeln!(
                    s,
                    "{},{},{},{},{}",
                    r.mu_k_over_d, r.k0, r.ratio, r.residual, r.front_monotone
                );
            }
            w.extend_from_slice(s.as_bytes());
            Ok(())
        })?;
        ctx.line(format!("sweep rows: {}", rows.len()));
    }
    if let Some(th) = &cfg.threshold {
        let b = vanishing_threshold(
            &cfg.model,
            &u0,
            th.lambda_lo,
            th.lambda_hi,
            &cfg.grid,
            &cfg.classifier,
            th.bisections,
        )?;
        ctx.line(format!("threshold bracket: [{}, {}]", b.lo, b.hi));
        if let Some(l) = b.undetermined_at {
            ctx.line(format!("threshold undetermined at: {l}"));
        }
    }
    ctx.finish()
}

pub fn synth(mut ctx: Context) -> Result<()> {
    let mut cfg: SynthConfig = ctx.bind()?;
    cfg.seed = ctx.resolve_seed("seed", cfg.seed)?;
    ctx.echo()?;
    let u0 = cfg.initial.build()?;
    let field = calibrate::synthesize(&cfg.model, &cfg.grid, &u0, cfg.mode, cfg.noise, cfg.seed)?;
    ctx.line(format!("seed: {}", cfg.seed));
    write_density(&mut ctx, &field)?;
    ctx.finish()
}
