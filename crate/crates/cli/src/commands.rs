use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use hignn::dynamics::bench::{
    bench_chain, bench_square_lattice, bench_timing, write_bench_table, write_timing_table, BenchRow,
};
use hignn::dynamics::{simulate, Trajectory, VelocityBackend};
use hignn::graph::build_graph;
use hignn::oracle::dataset::{fmt_f64, load_training_set, save_training_set};
use hignn::oracle::{find_overlap, generate_training_set, OracleTerms, ParticleSystem, Vec3};
use hignn::surrogate::{infer_with_workers, SurrogateParams};
use hignn::training::{train, write_loss_history};
use hignn::{Error, Result};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::config::{
    BackendConfig, BenchConfig, GenDataConfig, InitialConfig, PredictConfig, SimulateConfig, TrainCmdConfig,
};

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Copy)]
pub struct RunOptions {
    pub workers: usize,
    pub seed: Option<u64>,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { workers: 1, seed: None }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenDataReport {
    pub count: usize,
    pub near_contact_fraction: f64,
}

pub fn gen_data(mut cfg: GenDataConfig, opts: RunOptions) -> Result<GenDataReport> {
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let samples = generate_training_set(cfg.count, &cfg.sampler, cfg.seed)?;
    save_training_set(&cfg.output, &samples)?;
    let limit = cfg.sampler.near_contact_gap * cfg.sampler.radius;
    let near = samples.iter().filter(|s| s.min_gap(cfg.sampler.radius) <= limit).count();
    Ok(GenDataReport { count: samples.len(), near_contact_fraction: near as f64 / samples.len() as f64 })
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainReport {
    pub final_test_loss: f64,
    pub best_test_loss: f64,
    pub best_epoch: usize,
}

pub fn train_cmd(mut cfg: TrainCmdConfig, opts: RunOptions) -> Result<TrainReport> {
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.train.seed = cfg.seed;
    cfg.validate()?;
    let samples = load_training_set(&cfg.data)?;
    let out = train(&samples, &cfg.train)?;
    out.params.save(&cfg.model_output)?;
    write_loss_history(BufWriter::new(File::create(&cfg.history_output)?), &out.history)?;
    Ok(TrainReport {
        final_test_loss: out.history.last().map_or(f64::NAN, |r| r.test_loss),
        best_test_loss: out.best_test_loss(),
        best_epoch: out.best_epoch,
    })
}

/// Reads a `x,y,z` CSV into vectors; parse errors carry the line number.
pub fn read_vectors(path: &Path) -> Result<Vec<Vec3>> {
    let source = path.display().to_string();
    let mut r = csv::ReaderBuilder::new().from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if header != ["x", "y", "z"] {
        return Err(Error::Parse { path: source, line: 1, reason: format!("expected header x,y,z, found {header:?}") });
    }
    let mut out = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        let mut v = [0.0; 3];
        for (k, field) in rec.iter().enumerate() {
            let x: f64 = field.trim().parse().map_err(|_| Error::Parse {
                path: source.clone(),
                line,
                reason: format!("`{field}` is not a number"),
            })?;
            if !x.is_finite() {
                return Err(Error::Parse { path: source.clone(), line, reason: "non-finite value".into() });
            }
            v[k] = x;
        }
        out.push(Vec3::from(v));
    }
    Ok(out)
}

pub fn write_vectors(path: &Path, vs: &[Vec3]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["x", "y", "z"])?;
    for v in vs {
        w.write_record([fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z)])?;
    }
    w.flush()?;
    Ok(())
}

fn write_velocities(path: &Path, us: &[Vec3]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["particle_id", "ux", "uy", "uz"])?;
    for (i, u) in us.iter().enumerate() {
        w.write_record([i.to_string(), fmt_f64(u.x), fmt_f64(u.y), fmt_f64(u.z)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn predict(cfg: PredictConfig, opts: RunOptions) -> Result<Vec<Vec3>> {
    cfg.validate()?;
    let mut params = SurrogateParams::load(&cfg.model)?;
    if let Some(r) = cfg.face_r_cut {
        params.face_r_cut = r;
    }
    let positions = read_vectors(&cfg.positions)?;
    let forces = read_vectors(&cfg.forces)?;
    if positions.len() != forces.len() {
        return Err(Error::Shape(format!("{} positions but {} forces", positions.len(), forces.len())));
    }
    let graph = build_graph(&positions, &cfg.domain, params.face_r_cut)?;
    let u = infer_with_workers(&graph, &positions, &forces, &params, opts.workers)?;
    write_velocities(&cfg.output, &u)?;
    Ok(u)
}

fn initial_positions(init: &InitialConfig, radius: f64, seed: u64) -> Result<Vec<Vec3>> {
    match init {
        InitialConfig::CubicLattice { n_side, spacing, center } => {
            let half = (*n_side as f64 - 1.0) * spacing / 2.0;
            let c = Vec3::from(*center);
            let n = *n_side;
            Ok((0..n * n * n)
                .map(|i| {
                    let idx = Vec3::new((i % n) as f64, ((i / n) % n) as f64, (i / (n * n)) as f64);
                    c + idx * *spacing - Vec3::repeat(half)
                })
                .collect())
        }
        InitialConfig::File { path } => read_vectors(path),
        InitialConfig::Random { count, extent, min_gap } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let closest = 2.0 * radius + min_gap * radius;
            let mut pos: Vec<Vec3> = Vec::with_capacity(*count);
            let mut attempts = 0usize;
            while pos.len() < *count {
                attempts += 1;
                if attempts > 10_000 * count {
                    return Err(Error::Sampler { constraint: "random packing", sample: pos.len(), attempts });
                }
                let p = Vec3::new(
                    rng.random_range(0.0..*extent),
                    rng.random_range(0.0..*extent),
                    rng.random_range(0.0..*extent),
                );
                if pos.iter().all(|q| (p - q).norm() >= closest) {
                    pos.push(p);
                }
            }
            Ok(pos)
        }
    }
}

pub fn simulate_cmd(mut cfg: SimulateConfig, opts: RunOptions) -> Result<Trajectory> {
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let positions = initial_positions(&cfg.initial, cfg.radius, cfg.seed)?;
    if let Some((i, j, distance)) = find_overlap(&positions, cfg.radius, &cfg.domain) {
        return Err(Error::Overlap { i, j, distance, contact: 2.0 * cfg.radius });
    }
    let system = ParticleSystem::new(positions, cfg.radius, cfg.viscosity, cfg.domain)?;
    let params;
    let backend = match &cfg.backend {
        BackendConfig::Oracle { order } => VelocityBackend::oracle(*order)?,
        BackendConfig::Surrogate { model, face_r_cut } => {
            let mut p = SurrogateParams::load(model)?;
            if let Some(r) = face_r_cut {
                p.face_r_cut = *r;
            }
            params = p;
            VelocityBackend::surrogate(&params, opts.workers)
        }
    };
    let traj = simulate(&system, &backend, &cfg.force, cfg.dt, cfg.steps, cfg.output_every)?;
    traj.write_csv(BufWriter::new(File::create(&cfg.output)?))?;
    let meta_path = cfg.meta_output.clone().unwrap_or_else(|| meta_path_for(&cfg.output));
    std::fs::write(meta_path, traj.meta_json()?)?;
    Ok(traj)
}

fn meta_path_for(output: &Path) -> PathBuf {
    let mut name = output.file_stem().unwrap_or_default().to_os_string();
    name.push(".meta.json");
    output.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct BenchReport {
    pub lattice_rows: usize,
    pub chain_rows: usize,
    pub timing_rows: usize,
}

pub fn bench(mut cfg: BenchConfig, opts: RunOptions) -> Result<BenchReport> {
    if let Some(s) = opts.seed {
        cfg.seed = s;
    }
    cfg.validate()?;
    let params = cfg.model.as_deref().map(SurrogateParams::load).transpose()?;
    let (a, mu) = (cfg.radius, cfg.viscosity);
    let oracle3 = VelocityBackend::oracle(3)?;
    let oracle_no_three = VelocityBackend::Oracle {
        terms: OracleTerms { pair: true, self_reflection: true, three_body: false },
    };
    let mut report = BenchReport::default();

    if let Some(l) = &cfg.lattice {
        let dir = Vec3::from(l.direction);
        let mut rows = bench_square_lattice(&l.ls, dir, &oracle3, &oracle_no_three, a, mu)?;
        if let Some(p) = &params {
            let with = VelocityBackend::surrogate(p, opts.workers);
            let without = VelocityBackend::Surrogate { params: p, workers: opts.workers, faces: false };
            rows.extend(bench_square_lattice(&l.ls, dir, &with, &without, a, mu)?);
        }
        write_bench_table(BufWriter::new(File::create(&l.output)?), "L", &rows)?;
        report.lattice_rows = rows.len();
    }

    if let Some(c) = &cfg.chain {
        let backend = match &params {
            Some(p) => VelocityBackend::surrogate(p, opts.workers),
            None => VelocityBackend::oracle(2)?,
        };
        let chain = bench_chain(&c.ns, c.l, Vec3::from(c.direction), &backend, &oracle3, a, mu)?;
        let rows: Vec<BenchRow> =
            chain.iter().flat_map(|r| r.to_bench_rows(&backend.name(), &oracle3.name())).collect();
        write_bench_table(BufWriter::new(File::create(&c.output)?), "N", &rows)?;
        report.chain_rows = rows.len();
    }

    if let (Some(t), Some(p)) = (&cfg.timing, &params) {
        let rows = bench_timing(&t.ns, t.spacing, p, opts.workers)?;
        write_timing_table(BufWriter::new(File::create(&t.output)?), &rows)?;
        report.timing_rows = rows.len();
    }
    Ok(report)
}
